//! Fixtures shared by the benchmarks.

use momentcert::catalog;
use momentcert::extraction::MomentSequence;
use momentcert::io::PopInstance;

/// Order-`order` moments of the uniform measure on the 20 Robinson minimizers.
pub fn robinson_mixture(order: u32) -> (PopInstance, MomentSequence) {
    let points = catalog::robinson_minimizers();
    let weights = vec![1.0 / points.len() as f64; points.len()];
    (
        catalog::robinson(),
        MomentSequence::mixture(&points, &weights, order),
    )
}
