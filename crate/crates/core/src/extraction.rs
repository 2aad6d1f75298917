//! Flat-truncation detection and minimizer extraction from a moment sequence.

use log::debug;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::io::PopInstance;
use crate::linalg::{self, numerical_rank, SymMatrix};
use crate::poly::Monomial;
use crate::relaxation::{dirac_moments, MonomialBasis};

/// Consecutive singular-value ratio that counts as a rank plateau.
pub const PLATEAU_RATIO: f64 = 1e3;
/// Singular values below this fraction of the largest are treated as noise when looking for a plateau.
const PLATEAU_FLOOR: f64 = 1e-13;
/// Seed of the random combination used by [`extract`].
pub const DEFAULT_SEED: u64 = 0x5eed;
/// Extracted points closer than this are merged.
pub const CLUSTER_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractionError {
    #[error(
        "moment sequence has {got} entries, order {order} in {nvars} variables needs {expected}"
    )]
    Length {
        order: u32,
        nvars: usize,
        expected: usize,
        got: usize,
    },
    #[error("y_0 = {0}, expected 1")]
    Normalization(f64),
    #[error("order {order} does not exceed the constraint half-degree {d_k}")]
    OrderTooLow { order: u32, d_k: u32 },
    #[error("truncation is not flat")]
    NotFlat,
    #[error("extraction failed: {0}")]
    ExtractionFailed(String),
}

/// Truncated moment sequence `y_a`, `|a| <= 2k`, with `y_0 = 1`.
#[derive(Debug, Clone)]
pub struct MomentSequence {
    order: u32,
    basis: MonomialBasis,
    y: DVector<f64>,
}

impl MomentSequence {
    pub fn new(nvars: usize, order: u32, y: DVector<f64>) -> Result<Self, ExtractionError> {
        let basis = MonomialBasis::up_to(nvars, 2 * order);
        if y.len() != basis.len() {
            return Err(ExtractionError::Length {
                order,
                nvars,
                expected: basis.len(),
                got: y.len(),
            });
        }
        if (y[0] - 1.0).abs() > 1e-8 {
            return Err(ExtractionError::Normalization(y[0]));
        }
        Ok(MomentSequence { order, basis, y })
    }

    /// Moments of the Dirac measure at `u`.
    pub fn dirac(u: &[f64], order: u32) -> Self {
        let basis = MonomialBasis::up_to(u.len(), 2 * order);
        let y = dirac_moments(&basis, u);
        MomentSequence { order, basis, y }
    }

    /// Moments of `sum w_i delta_{u_i}`.
    pub fn mixture(points: &[Vec<f64>], weights: &[f64], order: u32) -> Self {
        let basis = MonomialBasis::up_to(points[0].len(), 2 * order);
        let mut y = DVector::zeros(basis.len());
        for (u, w) in points.iter().zip(weights) {
            y += dirac_moments(&basis, u) * *w;
        }
        MomentSequence { order, basis, y }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn nvars(&self) -> usize {
        self.basis.nvars()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn get(&self, m: &Monomial) -> Option<f64> {
        self.basis.index_of(m).map(|i| self.y[i])
    }

    /// First-order moments, i.e. the mean of the represented measure.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.nvars())
            .map(|i| {
                self.get(&Monomial::var(self.nvars(), i))
                    .expect("order >= 1")
            })
            .collect()
    }

    /// Moment matrix `M_d(y)` indexed by monomials of degree <= `d`.
    pub fn moment_matrix(&self, d: u32) -> DMatrix<f64> {
        assert!(d <= self.order, "moment matrix degree exceeds the order");
        let s = self.basis.prefix_len(d);
        DMatrix::from_fn(s, s, |i, j| {
            let m = self.basis.get(i).mul(self.basis.get(j));
            self.y[self.basis.index_of(&m).expect("degree within 2k")]
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankRule {
    Threshold,
    Plateau,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankDecision {
    pub rank: usize,
    pub threshold_rank: usize,
    pub plateau_rank: Option<usize>,
    pub rule: RankRule,
    pub singular_values: Vec<f64>,
}

/// Rank by relative threshold, overridden by a clear plateau in the spectrum.
pub fn decide_rank(a: &DMatrix<f64>, tau: f64) -> RankDecision {
    let info = numerical_rank(a, tau);
    let sv = info.singular_values;
    let smax = sv.first().copied().unwrap_or(0.0);
    let mut plateau = None;
    let mut best = PLATEAU_RATIO;
    for i in 0..sv.len() {
        if sv[i] <= PLATEAU_FLOOR * smax {
            break;
        }
        let next = sv
            .get(i + 1)
            .copied()
            .unwrap_or(0.0)
            .max(PLATEAU_FLOOR * smax);
        let ratio = sv[i] / next;
        if ratio >= best && i + 1 < sv.len() {
            best = ratio;
            plateau = Some(i + 1);
        }
    }
    let (rank, rule) = match plateau {
        Some(r) => (r, RankRule::Plateau),
        None => (info.rank, RankRule::Threshold),
    };
    if plateau.is_some_and(|r| r != info.rank) {
        debug!(
            "rank plateau {} overrides threshold rank {}",
            rank, info.rank
        );
    }
    RankDecision {
        rank,
        threshold_rank: info.rank,
        plateau_rank: plateau,
        rule,
        singular_values: sv,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractedPoint {
    pub point: Vec<f64>,
    pub violation: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatTruncationResult {
    pub order: u32,
    pub d_k: u32,
    /// Degree `t` of the moment matrix the ranks below refer to: the largest
    /// flat one, or `order` when no truncation is flat.
    pub t: u32,
    pub rank_full: RankDecision,
    pub rank_truncated: RankDecision,
    pub flat: bool,
    /// `(t, rank M_t, rank M_{t - d_K})` for every degree examined.
    pub scanned: Vec<(u32, usize, usize)>,
    pub minimizers: Vec<ExtractedPoint>,
}

/// Look for `t` in `[max(d_f, d_K), k]` with `rank M_t(y) = rank M_{t - d_K}(y)`.
pub fn flat_check(
    y: &MomentSequence,
    instance: &PopInstance,
    tau: f64,
) -> Result<FlatTruncationResult, ExtractionError> {
    let d_k = instance.constraint_half_degree();
    let d_f = instance.objective().degree().unwrap_or(0).div_ceil(2);
    let k = y.order();
    if k < d_k {
        return Err(ExtractionError::OrderTooLow { order: k, d_k });
    }
    let lowest = d_f.max(d_k);
    let mut scanned = Vec::new();
    let mut last = None;
    for t in (lowest..=k).rev() {
        let full = decide_rank(&y.moment_matrix(t), tau);
        let truncated = decide_rank(&y.moment_matrix(t - d_k), tau);
        let flat = full.rank == truncated.rank && full.rank > 0;
        debug!(
            "degree {t}: rank M_t = {} ({:?}), rank M_(t-{d_k}) = {} ({:?}), flat = {flat}",
            full.rank, full.rule, truncated.rank, truncated.rule
        );
        scanned.push((t, full.rank, truncated.rank));
        if flat {
            return Ok(FlatTruncationResult {
                order: k,
                d_k,
                t,
                rank_full: full,
                rank_truncated: truncated,
                flat: true,
                scanned,
                minimizers: Vec::new(),
            });
        }
        if last.is_none() {
            last = Some((full, truncated));
        }
    }
    let (rank_full, rank_truncated) = last.expect("k >= max(d_f, d_K)");
    Ok(FlatTruncationResult {
        order: k,
        d_k,
        t: k,
        rank_full,
        rank_truncated,
        flat: false,
        scanned,
        minimizers: Vec::new(),
    })
}

/// Greedy diagonal pivoting; returns `r` pivot indices.
fn pivoted_cholesky(a: &DMatrix<f64>, r: usize) -> Vec<usize> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, r);
    let mut diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut piv = Vec::with_capacity(r);
    for c in 0..r {
        let p = (0..n)
            .filter(|i| !piv.contains(i))
            .max_by(|&i, &j| diag[i].total_cmp(&diag[j]))
            .expect("r <= n");
        let d = diag[p].max(f64::MIN_POSITIVE).sqrt();
        for i in 0..n {
            let mut s = a[(i, p)];
            for q in 0..c {
                s -= l[(i, q)] * l[(p, q)];
            }
            l[(i, c)] = s / d;
        }
        for i in 0..n {
            diag[i] -= l[(i, c)] * l[(i, c)];
        }
        piv.push(p);
    }
    piv
}

/// Recover the atoms of a flat moment sequence of rank `r`.
/// `t` is the flat degree and `d_k` the gap to the truncated matrix.
pub fn extract_atoms(
    y: &MomentSequence,
    t: u32,
    d_k: u32,
    r: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, ExtractionError> {
    let n = y.nvars();
    let k = t;
    let basis = MonomialBasis::up_to(n, k);
    let m = y.moment_matrix(k);
    let eig = linalg::eig_sym(&SymMatrix::symmetrized(&m))
        .map_err(|e| ExtractionError::ExtractionFailed(e.to_string()))?;
    let s = m.nrows();
    if r == 0 || r > s {
        return Err(ExtractionError::ExtractionFailed(format!(
            "rank {r} out of range"
        )));
    }
    // Top-r eigenpairs (values ascend).
    let mut v = DMatrix::zeros(s, r);
    for c in 0..r {
        let idx = s - 1 - c;
        let lam = eig.values[idx].max(0.0).sqrt();
        v.set_column(c, &(eig.vectors.column(idx) * lam));
    }
    let sub = basis.prefix_len(k - d_k);
    if sub < r {
        return Err(ExtractionError::ExtractionFailed(format!(
            "rank {r} exceeds the {sub} monomials available for the pivot basis"
        )));
    }
    let gram = v.rows(0, sub) * v.rows(0, sub).transpose();
    let piv = pivoted_cholesky(&gram, r);
    let vp = v.select_rows(&piv);
    let vp_inv = vp
        .clone()
        .try_inverse()
        .ok_or_else(|| ExtractionError::ExtractionFailed("singular pivot block".into()))?;
    let u = &v * vp_inv;

    let mut mult = Vec::with_capacity(n);
    for i in 0..n {
        let xi = Monomial::var(n, i);
        let mut ni = DMatrix::zeros(r, r);
        for (a, &p) in piv.iter().enumerate() {
            let row = basis.index_of(&basis.get(p).mul(&xi)).ok_or_else(|| {
                ExtractionError::ExtractionFailed("shifted pivot leaves the basis".into())
            })?;
            ni.set_row(a, &u.row(row));
        }
        mult.push(ni);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut combo = DMatrix::zeros(r, r);
    for (ni, w) in mult.iter().zip(&weights) {
        combo += ni * (*w / total);
    }
    let schur = combo.clone().schur();
    let (q, t) = schur.unpack();
    for a in 0..r.saturating_sub(1) {
        let below = t[(a + 1, a)].abs();
        let scale = t[(a, a)].abs().max(t[(a + 1, a + 1)].abs()).max(1.0);
        if below > 1e-6 * scale {
            return Err(ExtractionError::ExtractionFailed(
                "multiplication matrices have complex eigenvalues".into(),
            ));
        }
    }
    let mut points = Vec::with_capacity(r);
    for a in 0..r {
        let qa = q.column(a);
        points.push(
            mult.iter()
                .map(|ni| qa.dot(&(ni * qa)))
                .collect::<Vec<f64>>(),
        );
    }
    Ok(points)
}

/// Merge points within `radius` of each other (greedy, averaging members).
pub fn cluster(points: Vec<Vec<f64>>, radius: f64) -> Vec<Vec<f64>> {
    let mut groups: Vec<(Vec<f64>, usize)> = Vec::new();
    for p in points {
        let hit = groups.iter_mut().find(|(c, cnt)| {
            let center: Vec<f64> = c.iter().map(|v| v / *cnt as f64).collect();
            dist(&center, &p) <= radius
        });
        match hit {
            Some((c, cnt)) => {
                for (ci, pi) in c.iter_mut().zip(&p) {
                    *ci += pi;
                }
                *cnt += 1;
            }
            None => groups.push((p, 1)),
        }
    }
    groups
        .into_iter()
        .map(|(c, cnt)| c.into_iter().map(|v| v / cnt as f64).collect())
        .collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let one_way = |p: &[Vec<f64>], q: &[Vec<f64>]| {
        p.iter()
            .map(|x| q.iter().map(|z| dist(x, z)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Flat check followed, when flat, by atom extraction.
pub fn extract(
    y: &MomentSequence,
    instance: &PopInstance,
    tau: f64,
) -> Result<FlatTruncationResult, ExtractionError> {
    extract_seeded(y, instance, tau, DEFAULT_SEED)
}

/// [`extract`] with an explicit seed for the random combination of multiplication matrices.
pub fn extract_seeded(
    y: &MomentSequence,
    instance: &PopInstance,
    tau: f64,
    seed: u64,
) -> Result<FlatTruncationResult, ExtractionError> {
    let mut result = flat_check(y, instance, tau)?;
    if !result.flat {
        return Ok(result);
    }
    let atoms = extract_atoms(y, result.t, result.d_k, result.rank_truncated.rank, seed)?;
    result.minimizers = cluster(atoms, CLUSTER_RADIUS)
        .into_iter()
        .map(|point| ExtractedPoint {
            violation: instance.max_violation(&point),
            objective: instance.objective_at(&point),
            point,
        })
        .collect();
    Ok(result)
}

/// Least-squares weights of a Dirac mixture on `points` fitted to `y` on degree <= `d`.
pub fn mixture_fit_residual(y: &MomentSequence, points: &[Vec<f64>], d: u32) -> f64 {
    let basis = MonomialBasis::up_to(y.nvars(), d);
    let mut a = DMatrix::zeros(basis.len(), points.len());
    for (c, u) in points.iter().enumerate() {
        a.set_column(c, &dirac_moments(&basis, u));
    }
    let target = DVector::from_iterator(
        basis.len(),
        basis.iter().map(|m| y.get(m).expect("degree within 2k")),
    );
    linalg::lstsq(&a, &target)
        .map(|s| s.residual)
        .unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::io::parse_pop;
    use crate::linalg::DEFAULT_RANK_TAU;
    use crate::relaxation;
    use crate::sdp::{solve, SdpOptions};
    use proptest::prelude::*;

    fn solved(p: &PopInstance, k: u32) -> MomentSequence {
        let r = relaxation::build(p, k).unwrap();
        let e = r.to_sdp().unwrap();
        let s = solve(&e.problem, &SdpOptions::default()).unwrap();
        assert!(s.status.is_usable(), "{:?}", s.status);
        MomentSequence::new(p.nvars(), k, e.moments(&s)).unwrap()
    }

    #[test]
    fn dirac_is_flat() {
        let p = parse_pop("vars x y\nmin x + y\n").unwrap();
        let y = MomentSequence::dirac(&[1.0, 2.0], 2);
        let f = extract(&y, &p, DEFAULT_RANK_TAU).unwrap();
        assert_eq!(f.rank_full.rank, 1);
        assert_eq!(f.rank_truncated.rank, 1);
        assert!(f.flat);
        assert_eq!(f.minimizers.len(), 1);
        assert!(dist(&f.minimizers[0].point, &[1.0, 2.0]) < 1e-8);
    }

    #[test]
    fn lowest_order_is_checked() {
        let p = parse_pop("vars x\nmin x\ng: -x^2 >= 0\n").unwrap();
        let y = MomentSequence::dirac(&[0.0], 1);
        let f = flat_check(&y, &p, DEFAULT_RANK_TAU).unwrap();
        assert!(f.flat);
        assert_eq!(f.t, 1);
        let q = parse_pop("vars x\nmin x\ng: 1 - x^4 >= 0\n").unwrap();
        assert_eq!(
            flat_check(&y, &q, DEFAULT_RANK_TAU).unwrap_err(),
            ExtractionError::OrderTooLow { order: 1, d_k: 2 }
        );
    }

    #[test]
    fn normalization_is_checked() {
        let y = DVector::from_vec(vec![2.0, 0.0, 0.0]);
        assert!(matches!(
            MomentSequence::new(1, 1, y),
            Err(ExtractionError::Normalization(_))
        ));
    }

    #[test]
    fn plateau_overrides_threshold() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 1e-5, 1e-9]));
        let d = decide_rank(&a, 1e-6);
        assert_eq!(d.threshold_rank, 3);
        assert_eq!(d.rank, 2);
        assert_eq!(d.rule, RankRule::Plateau);
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 0.1, 0.05]));
        assert_eq!(decide_rank(&b, 1e-6).rule, RankRule::Threshold);
    }

    #[test]
    fn line_constrained_quadratic() {
        let p = parse_pop("vars x1 x2\nmin x1^2 + x2^2\nh: x1 + x2 - 1 == 0\n").unwrap();
        let y = solved(&p, 2);
        let f = extract(&y, &p, DEFAULT_RANK_TAU).unwrap();
        assert!(f.flat, "{:?} {:?}", f.rank_full, f.rank_truncated);
        assert_eq!(f.minimizers.len(), 1);
        assert!(dist(&f.minimizers[0].point, &[0.5, 0.5]) < 1e-6);
    }

    #[test]
    fn robinson_twenty_minimizers() {
        let p = catalog::robinson();
        let y = solved(&p, 5);
        let f = extract(&y, &p, DEFAULT_RANK_TAU).unwrap();
        assert!(f.flat, "{:?} {:?}", f.rank_full, f.rank_truncated);
        assert_eq!(f.rank_truncated.rank, 20);
        let pts: Vec<Vec<f64>> = f.minimizers.iter().map(|m| m.point.clone()).collect();
        assert_eq!(pts.len(), 20);
        assert!(hausdorff(&pts, &catalog::robinson_minimizers()) < 1e-4);
        assert!(mixture_fit_residual(&y, &pts, 4) < 1e-4);
    }

    #[test]
    fn two_atom_mixture() {
        let pts = vec![vec![1.0, -1.0], vec![0.5, 2.0]];
        let y = MomentSequence::mixture(&pts, &[0.3, 0.7], 3);
        let p = parse_pop("vars x y\nmin x\n").unwrap();
        let f = extract(&y, &p, DEFAULT_RANK_TAU).unwrap();
        assert!(f.flat, "{:?} {:?}", f.rank_full, f.rank_truncated);
        let got: Vec<Vec<f64>> = f.minimizers.iter().map(|m| m.point.clone()).collect();
        assert!(hausdorff(&got, &pts) < 1e-8);
    }

    #[test]
    fn clustering_merges_close_points() {
        let c = cluster(vec![vec![0.0], vec![1e-8], vec![1.0]], CLUSTER_RADIUS);
        assert_eq!(c.len(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn extraction_is_permutation_equivariant(
            a in prop::collection::vec(-2.0f64..2.0, 3),
            b in prop::collection::vec(-2.0f64..2.0, 3),
            w in 0.2f64..0.8,
        ) {
            prop_assume!(dist(&a, &b) > 0.1);
            let p = parse_pop("vars x y z\nmin x\n").unwrap();
            let perm = |u: &[f64]| vec![u[2], u[0], u[1]];
            let y1 = MomentSequence::mixture(&[a.clone(), b.clone()], &[w, 1.0 - w], 2);
            let y2 = MomentSequence::mixture(&[perm(&a), perm(&b)], &[w, 1.0 - w], 2);
            let f1 = extract(&y1, &p, DEFAULT_RANK_TAU).unwrap();
            let f2 = extract(&y2, &p, DEFAULT_RANK_TAU).unwrap();
            let p1: Vec<Vec<f64>> = f1.minimizers.iter().map(|m| perm(&m.point)).collect();
            let p2: Vec<Vec<f64>> = f2.minimizers.iter().map(|m| m.point.clone()).collect();
            prop_assert_eq!(p1.len(), 2);
            prop_assert!(hausdorff(&p1, &p2) < 1e-6);
        }
    }
}
