//! Helpers shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use momentcert::sdp::{Constraint, SdpProblem};

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    (&g + g.transpose()) * 0.5
}

fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    &g * g.transpose() / n as f64 + DMatrix::identity(n, n)
}

/// Block SDP with a strictly feasible primal point and a strictly feasible dual slack,
/// so both optima are attained and equal.
pub fn random_sdp(seed: u64) -> SdpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nblocks = rng.random_range(1..=3);
    let block_sizes: Vec<usize> = (0..nblocks).map(|_| rng.random_range(1..=20)).collect();
    // Every constraint touches the largest block, which keeps them independent.
    let (largest, &n_max) = block_sizes
        .iter()
        .enumerate()
        .max_by_key(|(_, &n)| n)
        .unwrap();
    let m = rng.random_range(1..=(n_max * (n_max + 1) / 2).min(30));
    let x0: Vec<DMatrix<f64>> = block_sizes
        .iter()
        .map(|&n| random_pd(&mut rng, n))
        .collect();
    let z0: Vec<DMatrix<f64>> = block_sizes
        .iter()
        .map(|&n| random_pd(&mut rng, n))
        .collect();
    let y0: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let mut constraints = Vec::with_capacity(m);
    for _ in 0..m {
        let mut parts = Vec::new();
        for (k, &n) in block_sizes.iter().enumerate() {
            if k == largest || rng.random_bool(0.7) {
                parts.push((k, random_symmetric(&mut rng, n)));
            }
        }
        constraints.push(Constraint { parts });
    }
    let mut problem = SdpProblem {
        block_sizes,
        c: z0,
        constraints,
        b: DVector::zeros(m),
    };
    problem.b = problem.apply(&x0);
    let aty = problem.adjoint(&DVector::from_vec(y0));
    for (c, a) in problem.c.iter_mut().zip(aty) {
        *c += a;
    }
    problem
}

fn psd_part(v: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(v.clone());
    let d = e.eigenvalues.map(|l| l.max(0.0));
    &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose()
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn norm(a: &[DMatrix<f64>]) -> f64 {
    inner(a, a).sqrt()
}

pub struct OracleResult {
    pub primal: f64,
    pub dual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

/// Alternating-direction augmented Lagrangian method on the dual. The `y` step is
/// an exact least-squares solve, so `A(X) = b` holds at every iterate and only the
/// dual residual and the gap need to vanish.
pub fn admm_oracle(p: &SdpProblem, tol: f64, max_iter: usize) -> OracleResult {
    let m = p.num_constraints();
    let mut gram = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut s = 0.0;
            for (ki, ai) in &p.constraints[i].parts {
                for (kj, aj) in &p.constraints[j].parts {
                    if ki == kj {
                        s += ai.dot(aj);
                    }
                }
            }
            gram[(i, j)] = s;
        }
    }
    let chol = gram
        .cholesky()
        .expect("constraints are linearly independent");
    let c_norm = norm(&p.c);
    let b_norm = p.b.norm();
    let mut mu = 1.0;
    let mut x: Vec<DMatrix<f64>> = p
        .block_sizes
        .iter()
        .map(|&n| DMatrix::zeros(n, n))
        .collect();
    let mut s: Vec<DMatrix<f64>> = x.clone();
    let mut result = OracleResult {
        primal: f64::NAN,
        dual: f64::NAN,
        dual_residual: f64::INFINITY,
        iterations: 0,
    };
    for it in 0..max_iter {
        let c_minus_s: Vec<DMatrix<f64>> = p.c.iter().zip(&s).map(|(c, s)| c - s).collect();
        let rhs = (&p.b - p.apply(&x)) * mu + p.apply(&c_minus_s);
        let y = chol.solve(&rhs);
        let aty = p.adjoint(&y);
        let v: Vec<DMatrix<f64>> = (0..x.len())
            .map(|k| &p.c[k] - &aty[k] - &x[k] * mu)
            .collect();
        s = v.iter().map(psd_part).collect();
        let x_new: Vec<DMatrix<f64>> = v.iter().map(|v| psd_part(&(-v)) / mu).collect();
        x = x_new;
        let dres: Vec<DMatrix<f64>> = (0..x.len()).map(|k| &aty[k] + &s[k] - &p.c[k]).collect();
        let dinf = norm(&dres) / (1.0 + c_norm);
        let pinf = (p.apply(&x) - &p.b).norm() / (1.0 + b_norm);
        let primal = inner(&p.c, &x);
        let dual = p.b.dot(&y);
        let gap = (primal - dual).abs() / (1.0 + primal.abs() + dual.abs());
        result = OracleResult {
            primal,
            dual,
            dual_residual: dinf,
            iterations: it + 1,
        };
        if dinf.max(pinf).max(gap) < tol {
            break;
        }
        // Residual balancing: a larger `mu` moves `y` faster toward primal feasibility.
        if it % 10 == 9 {
            if pinf > 10.0 * dinf {
                mu = (mu * 2.0).min(1e6);
            } else if dinf > 10.0 * pinf {
                mu = (mu / 2.0).max(1e-6);
            }
        }
    }
    result
}
