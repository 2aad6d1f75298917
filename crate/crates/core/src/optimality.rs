//! Optimality conditions at a feasible point: active set, multipliers,
//! FOOC, CQC, SCC, SONC/SOSC and the bordered Hessian determinant.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::io::PopInstance;
use crate::linalg::{self, numerical_rank, SymMatrix};
use crate::poly::FloatPoly;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimalityError {
    #[error("point has {got} coordinates, instance has {expected} variables")]
    Dimension { expected: usize, got: usize },
    #[error("point violates the constraints by {violation:.3e} (tolerance {tolerance:.1e})")]
    Infeasible { violation: f64, tolerance: f64 },
    #[error("point has non-finite coordinates")]
    NonFinite,
}

/// Every threshold a verdict depends on. Relative ones are scaled as documented per field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// `|g_j(u)| <= eps_act (1 + scale_j)` marks `j` active; `scale_j` is the largest coefficient.
    pub eps_act: f64,
    /// Admissible constraint violation, same scaling as `eps_act`.
    pub eps_feas: f64,
    /// FOOC residual threshold, times `1 + |grad f(u)|`.
    pub tol_fooc: f64,
    /// Smallest active multiplier counted as strictly positive.
    pub tol_mult: f64,
    /// Projected-Hessian eigenvalue threshold, times `1 + |hess L(u)|`.
    pub tol_eig: f64,
    /// Bordered determinant threshold, times `|H|^N`.
    pub tol_det: f64,
    /// Relative singular-value threshold for the rank of the active Jacobian.
    pub tol_rank: f64,
    /// Active gradients shorter than `tol_grad (1 + |grad f(u)|)` are numerically zero
    /// and carry no multiplier.
    pub tol_grad: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_act: 1e-6,
            eps_feas: 1e-5,
            tol_fooc: 1e-7,
            tol_mult: 1e-7,
            tol_eig: 1e-7,
            tol_det: 1e-9,
            tol_rank: 1e-6,
            tol_grad: 1e-6,
        }
    }
}

impl Tolerances {
    /// All thresholds divided by `factor` (used for a tightened retry).
    pub fn tightened(&self, factor: f64) -> Self {
        Tolerances {
            eps_act: self.eps_act / factor,
            eps_feas: self.eps_feas,
            tol_fooc: self.tol_fooc / factor,
            tol_mult: self.tol_mult / factor,
            tol_eig: self.tol_eig / factor,
            tol_det: self.tol_det / factor,
            tol_rank: self.tol_rank / factor,
            tol_grad: self.tol_grad / factor,
        }
    }

    /// Set a tolerance by its ledger name; returns false for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "eps_act" => &mut self.eps_act,
            "eps_feas" => &mut self.eps_feas,
            "fooc" | "tol_fooc" => &mut self.tol_fooc,
            "mult" | "tol_mult" => &mut self.tol_mult,
            "eig" | "tol_eig" => &mut self.tol_eig,
            "det" | "tol_det" => &mut self.tol_det,
            "rank" | "tol_rank" => &mut self.tol_rank,
            "grad" | "tol_grad" => &mut self.tol_grad,
            _ => return false,
        };
        *slot = value;
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Undecided,
}

/// A verdict with the number it was decided on and the threshold it was compared to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub verdict: Verdict,
    pub evidence: Option<f64>,
    pub threshold: f64,
    pub vacuous: bool,
}

impl Check {
    fn vacuous(threshold: f64) -> Self {
        Check {
            verdict: Verdict::Pass,
            evidence: None,
            threshold,
            vacuous: true,
        }
    }

    fn not_evaluated(threshold: f64) -> Self {
        Check {
            verdict: Verdict::Undecided,
            evidence: None,
            threshold,
            vacuous: false,
        }
    }

    /// Pass when `evidence <= threshold`, with a factor-10 undecided band.
    fn at_most(evidence: f64, threshold: f64) -> Self {
        let verdict = if evidence <= threshold / 10.0 {
            Verdict::Pass
        } else if evidence > threshold * 10.0 {
            Verdict::Fail
        } else {
            Verdict::Undecided
        };
        Check {
            verdict,
            evidence: Some(evidence),
            threshold,
            vacuous: false,
        }
    }

    /// Pass when `evidence > threshold`, with a factor-10 undecided band.
    fn above(evidence: f64, threshold: f64) -> Self {
        let verdict = if evidence > threshold * 10.0 {
            Verdict::Pass
        } else if evidence < threshold / 10.0 {
            Verdict::Fail
        } else {
            Verdict::Undecided
        };
        Check {
            verdict,
            evidence: Some(evidence),
            threshold,
            vacuous: false,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn ser_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct KktData {
    pub point: Vec<f64>,
    /// Indices of active inequalities, ascending.
    pub active_set: Vec<usize>,
    pub lambda: Vec<f64>,
    /// One entry per inequality; zero off the active set.
    pub mu: Vec<f64>,
    pub fooc_residual: f64,
    pub grad_f_norm: f64,
    /// Active gradients treated as numerically zero: `(is_equality, index)`.
    pub vanishing_gradients: Vec<(bool, usize)>,
    #[serde(serialize_with = "ser_matrix")]
    pub lagrangian_hessian: DMatrix<f64>,
    /// Rows: equality gradients, then active inequality gradients in declaration order.
    #[serde(serialize_with = "ser_matrix")]
    pub active_jacobian: DMatrix<f64>,
    #[serde(serialize_with = "ser_matrix")]
    pub bordered: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimalityReport {
    pub kkt: KktData,
    pub tolerances: Tolerances,
    pub violation: f64,
    pub objective: f64,
    pub fooc: Check,
    pub cqc: Check,
    pub scc: Check,
    pub sonc: Check,
    pub sosc: Check,
    pub det_h: f64,
    /// `|det H| > tol_det |H|^N`, with the same undecided band as the other checks.
    pub det_nonsingular: Check,
    pub bhc_implied: bool,
    /// `(|det H| > tol) == (sosc passes)`; only meaningful where SONC holds, so
    /// `None` unless CQC and SONC pass and both sides are decided.
    pub det_sosc_agreement: Option<bool>,
}

/// Polynomial data with precomputed derivatives.
#[derive(Debug, Clone)]
pub struct Model {
    pub n: usize,
    f: Differentiated,
    h: Vec<Differentiated>,
    g: Vec<Differentiated>,
    g_scale: Vec<f64>,
    h_scale: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Differentiated {
    p: FloatPoly,
    grad: Vec<FloatPoly>,
    hess: Vec<Vec<FloatPoly>>,
}

impl Differentiated {
    fn new(p: FloatPoly) -> Self {
        Differentiated {
            grad: p.gradient(),
            hess: p.hessian(),
            p,
        }
    }

    fn value(&self, u: &[f64]) -> f64 {
        self.p.eval_f64(u)
    }

    fn gradient(&self, u: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.grad.len(), self.grad.iter().map(|q| q.eval_f64(u)))
    }

    fn hessian(&self, u: &[f64]) -> DMatrix<f64> {
        let n = self.grad.len();
        DMatrix::from_fn(n, n, |i, j| self.hess[i][j].eval_f64(u))
    }
}

fn coeff_scale(p: &FloatPoly) -> f64 {
    p.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max)
}

impl Model {
    pub fn new(instance: &PopInstance) -> Self {
        let h: Vec<FloatPoly> = instance.equalities().iter().map(|p| p.to_float()).collect();
        let g: Vec<FloatPoly> = instance
            .inequalities()
            .iter()
            .map(|p| p.to_float())
            .collect();
        Model {
            n: instance.nvars(),
            f: Differentiated::new(instance.objective().to_float()),
            h_scale: h.iter().map(coeff_scale).collect(),
            g_scale: g.iter().map(coeff_scale).collect(),
            h: h.into_iter().map(Differentiated::new).collect(),
            g: g.into_iter().map(Differentiated::new).collect(),
        }
    }

    pub fn num_equalities(&self) -> usize {
        self.h.len()
    }

    pub fn num_inequalities(&self) -> usize {
        self.g.len()
    }

    pub fn objective(&self, u: &[f64]) -> f64 {
        self.f.value(u)
    }

    pub fn grad_f(&self, u: &[f64]) -> DVector<f64> {
        self.f.gradient(u)
    }

    pub fn g_value(&self, j: usize, u: &[f64]) -> f64 {
        self.g[j].value(u)
    }

    pub fn g_gradient(&self, j: usize, u: &[f64]) -> DVector<f64> {
        self.g[j].gradient(u)
    }

    /// Largest scaled violation `max(|h_i(u)| / (1 + s_i), -g_j(u) / (1 + s_j))`.
    pub fn scaled_violation(&self, u: &[f64]) -> f64 {
        let eq = self
            .h
            .iter()
            .zip(&self.h_scale)
            .map(|(h, s)| h.value(u).abs() / (1.0 + s));
        let ineq = self
            .g
            .iter()
            .zip(&self.g_scale)
            .map(|(g, s)| (-g.value(u)).max(0.0) / (1.0 + s));
        eq.chain(ineq).fold(0.0, f64::max)
    }

    /// Constraint rows `(values, gradients)` for the equalities and the listed inequalities.
    fn system(&self, u: &[f64], ineq: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
        let rows = self.h.len() + ineq.len();
        let mut r = DVector::zeros(rows);
        let mut jac = DMatrix::zeros(rows, self.n);
        for (i, h) in self.h.iter().enumerate() {
            r[i] = h.value(u);
            jac.set_row(i, &h.gradient(u).transpose());
        }
        for (a, &j) in ineq.iter().enumerate() {
            r[self.h.len() + a] = self.g[j].value(u);
            jac.set_row(self.h.len() + a, &self.g[j].gradient(u).transpose());
        }
        (r, jac)
    }

    fn lagrangian_hessian(&self, u: &[f64], lambda: &[f64], mu: &[f64]) -> DMatrix<f64> {
        let mut hl = self.f.hessian(u);
        for (h, l) in self.h.iter().zip(lambda) {
            if *l != 0.0 {
                hl -= h.hessian(u) * *l;
            }
        }
        for (g, m) in self.g.iter().zip(mu) {
            if *m != 0.0 {
                hl -= g.hessian(u) * *m;
            }
        }
        hl
    }
}

/// `J(u) = { j : |g_j(u)| <= eps_act (1 + scale_j) }`.
pub fn active_set(instance: &PopInstance, u: &[f64], eps_act: f64) -> Vec<usize> {
    active_set_model(&Model::new(instance), u, eps_act)
}

fn active_set_model(model: &Model, u: &[f64], eps_act: f64) -> Vec<usize> {
    (0..model.g.len())
        .filter(|&j| model.g[j].value(u).abs() <= eps_act * (1.0 + model.g_scale[j]))
        .collect()
}

/// Multipliers solving `grad f = sum lambda_i grad h_i + sum_J mu_j grad g_j`, `mu >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub lambda: Vec<f64>,
    /// Aligned with the active set passed in.
    pub mu_active: Vec<f64>,
    pub residual: f64,
    pub vanishing: Vec<(bool, usize)>,
}

pub fn multipliers(
    instance: &PopInstance,
    u: &[f64],
    active: &[usize],
    tol: &Tolerances,
) -> Multipliers {
    multipliers_model(&Model::new(instance), u, active, tol)
}

fn multipliers_model(model: &Model, u: &[f64], active: &[usize], tol: &Tolerances) -> Multipliers {
    let grad_f = model.f.gradient(u);
    let (_, jac) = model.system(u, active);
    let m1 = model.h.len();
    let cut = tol.tol_grad * (1.0 + grad_f.norm());
    let mut a = jac.transpose();
    let mut vanishing = Vec::new();
    for c in 0..a.ncols() {
        if a.column(c).norm() <= cut {
            a.column_mut(c).fill(0.0);
            vanishing.push(if c < m1 {
                (true, c)
            } else {
                (false, active[c - m1])
            });
        }
    }
    let nonneg: Vec<bool> = (0..a.ncols()).map(|c| c >= m1).collect();
    let sol = if a.ncols() == 0 {
        linalg::LstsqSolution {
            x: DVector::zeros(0),
            residual: grad_f.norm(),
        }
    } else {
        linalg::bounded_lstsq(&a, &grad_f, &nonneg).expect("finite gradients")
    };
    Multipliers {
        lambda: sol.x.rows(0, m1).iter().copied().collect(),
        mu_active: sol.x.rows(m1, active.len()).iter().copied().collect(),
        residual: sol.residual,
        vanishing,
    }
}

/// CQC: the active gradients have full row rank.
pub fn cqc_check(instance: &PopInstance, u: &[f64], active: &[usize], tol: &Tolerances) -> Check {
    let model = Model::new(instance);
    let grad_norm = model.f.gradient(u).norm();
    let (_, jac) = model.system(u, active);
    cqc_from_jacobian(&jac, grad_norm, tol)
}

fn cqc_from_jacobian(jac: &DMatrix<f64>, grad_f_norm: f64, tol: &Tolerances) -> Check {
    if jac.nrows() == 0 {
        return Check::vacuous(tol.tol_rank);
    }
    if jac.nrows() > jac.ncols() {
        return Check {
            verdict: Verdict::Fail,
            evidence: Some(0.0),
            threshold: tol.tol_rank,
            vacuous: false,
        };
    }
    // Evidence: smallest singular value relative to max(largest, 1 + |grad f|), so that a
    // uniformly vanishing Jacobian is not rescued by the relative measure.
    let sv = numerical_rank(&jac.transpose(), tol.tol_rank).singular_values;
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.get(jac.nrows() - 1).copied().unwrap_or(0.0);
    let scale = smax
        .max(tol.tol_grad * (1.0 + grad_f_norm) / tol.tol_rank)
        .max(f64::MIN_POSITIVE);
    Check::above(smin / scale, tol.tol_rank)
}

fn null_basis(jac: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if jac.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Full-rank Jacobian assumed (CQC passed): the null space has dimension n - rows.
    let info = numerical_rank(jac, 0.0);
    let keep = n - jac.nrows().min(n);
    let nb = info.null_basis;
    if nb.ncols() >= keep {
        nb.columns(nb.ncols() - keep, keep).into_owned()
    } else {
        nb
    }
}

/// SONC and SOSC from the Hessian projected onto the null space of the active Jacobian.
pub fn sonc_sosc_check(kkt: &KktData, tol: &Tolerances) -> (Check, Check, Option<f64>) {
    let n = kkt.point.len();
    let scale = 1.0 + kkt.lagrangian_hessian.norm();
    let thr = tol.tol_eig * scale;
    let b = null_basis(&kkt.active_jacobian, n);
    if b.ncols() == 0 {
        return (Check::vacuous(thr), Check::vacuous(thr), None);
    }
    let proj = b.transpose() * &kkt.lagrangian_hessian * &b;
    let lmin = linalg::min_eigenvalue(&SymMatrix::symmetrized(&proj)).expect("finite Hessian");
    let sonc = if lmin >= -thr / 10.0 {
        Verdict::Pass
    } else if lmin < -thr * 10.0 {
        Verdict::Fail
    } else {
        Verdict::Undecided
    };
    let sonc = Check {
        verdict: sonc,
        evidence: Some(lmin),
        threshold: -thr,
        vacuous: false,
    };
    (sonc, Check::above(lmin, thr), Some(lmin))
}

/// `det [hess L, G^T; G, 0]`.
pub fn bordered_det(kkt: &KktData) -> f64 {
    linalg::det(&kkt.bordered)
}

fn bordered_matrix(hl: &DMatrix<f64>, jac: &DMatrix<f64>) -> DMatrix<f64> {
    let n = hl.nrows();
    let r = jac.nrows();
    let mut h = DMatrix::zeros(n + r, n + r);
    h.view_mut((0, 0), (n, n)).copy_from(hl);
    h.view_mut((n, 0), (r, n)).copy_from(jac);
    h.view_mut((0, n), (n, r)).copy_from(&jac.transpose());
    h
}

fn check_point(model: &Model, u: &[f64], tol: &Tolerances) -> Result<f64, OptimalityError> {
    if u.len() != model.n {
        return Err(OptimalityError::Dimension {
            expected: model.n,
            got: u.len(),
        });
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(OptimalityError::NonFinite);
    }
    let violation = model.scaled_violation(u);
    if violation > tol.eps_feas {
        return Err(OptimalityError::Infeasible {
            violation,
            tolerance: tol.eps_feas,
        });
    }
    Ok(violation)
}

/// Evaluate every optimality condition at `u`.
pub fn certify(
    instance: &PopInstance,
    u: &[f64],
    tol: &Tolerances,
) -> Result<OptimalityReport, OptimalityError> {
    certify_model(&Model::new(instance), u, tol)
}

pub fn certify_model(
    model: &Model,
    u: &[f64],
    tol: &Tolerances,
) -> Result<OptimalityReport, OptimalityError> {
    let violation = check_point(model, u, tol)?;
    let active = active_set_model(model, u, tol.eps_act);
    let mult = multipliers_model(model, u, &active, tol);
    let grad_f = model.f.gradient(u);
    let mut mu = vec![0.0; model.g.len()];
    for (a, &j) in active.iter().enumerate() {
        mu[j] = mult.mu_active[a];
    }
    let (_, jac) = model.system(u, &active);
    let hl = model.lagrangian_hessian(u, &mult.lambda, &mu);
    let bordered = bordered_matrix(&hl, &jac);
    let kkt = KktData {
        point: u.to_vec(),
        active_set: active.clone(),
        lambda: mult.lambda.clone(),
        mu,
        fooc_residual: mult.residual,
        grad_f_norm: grad_f.norm(),
        vanishing_gradients: mult.vanishing.clone(),
        lagrangian_hessian: hl,
        active_jacobian: jac,
        bordered,
    };

    let fooc = Check::at_most(mult.residual, tol.tol_fooc * (1.0 + grad_f.norm()));
    let cqc = cqc_from_jacobian(&kkt.active_jacobian, grad_f.norm(), tol);
    let (scc, sonc, sosc) = if cqc.passed() {
        let scc = if active.is_empty() {
            Check::vacuous(tol.tol_mult)
        } else {
            let m = mult.mu_active.iter().copied().fold(f64::INFINITY, f64::min);
            Check::above(m, tol.tol_mult)
        };
        let (sonc, sosc, _) = sonc_sosc_check(&kkt, tol);
        (scc, sonc, sosc)
    } else {
        (
            Check::not_evaluated(tol.tol_mult),
            Check::not_evaluated(tol.tol_eig),
            Check::not_evaluated(tol.tol_eig),
        )
    };

    let det_h = bordered_det(&kkt);
    let order = kkt.bordered.nrows() as i32;
    let hnorm = kkt.bordered.clone().singular_values().max();
    let det_scale = hnorm.powi(order).max(f64::MIN_POSITIVE);
    let det_nonsingular = Check::above(det_h.abs() / det_scale, tol.tol_det);
    let det_sosc_agreement = (cqc.passed()
        && sonc.passed()
        && sosc.verdict != Verdict::Undecided
        && det_nonsingular.verdict != Verdict::Undecided)
        .then(|| det_nonsingular.passed() == sosc.passed());
    let bhc_implied = cqc.passed() && scc.passed() && sosc.passed();
    Ok(OptimalityReport {
        violation,
        objective: model.f.value(u),
        kkt,
        tolerances: *tol,
        fooc,
        cqc,
        scc,
        sonc,
        sosc,
        det_h,
        det_nonsingular,
        bhc_implied,
        det_sosc_agreement,
    })
}

/// How a refined point was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    /// Newton on the KKT system converged.
    Kkt,
    /// Projected onto the near-active constraints only.
    Projected,
    Unchanged,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinedPoint {
    pub start: Vec<f64>,
    pub point: Vec<f64>,
    pub refinement: Refinement,
    pub displacement: f64,
}

/// Move `u0` onto the constraints active within `radius`, then try Newton on the
/// KKT system restricted to them. The KKT point is kept only if it stays within
/// `radius` and has nonnegative inequality multipliers.
pub fn refine_point(model: &Model, u0: &[f64], radius: f64, tol: &Tolerances) -> RefinedPoint {
    let near: Vec<usize> = (0..model.g.len())
        .filter(|&j| model.g[j].value(u0) <= radius * (1.0 + model.g[j].gradient(u0).norm()))
        .collect();
    let projected = project(model, u0, &near);
    let mut candidate_set = near.clone();
    let mut best = None;
    for _ in 0..=near.len() {
        match kkt_newton(model, &projected, &candidate_set, tol) {
            Some((u, mu)) => {
                if crate::extraction::dist(&u, u0) > radius.max(1e-12) * (1.0 + norm(u0)) {
                    break;
                }
                let worst = mu.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1));
                match worst {
                    Some((a, &m)) if m < -tol.tol_mult => {
                        candidate_set.remove(a);
                    }
                    _ => {
                        best = Some(u);
                        break;
                    }
                }
            }
            None => break,
        }
    }
    let (point, refinement) = match best {
        Some(u) if model.scaled_violation(&u) <= model.scaled_violation(&projected).max(1e-14) => {
            (u, Refinement::Kkt)
        }
        _ if projected != u0 => (projected, Refinement::Projected),
        _ => (u0.to_vec(), Refinement::Unchanged),
    };
    RefinedPoint {
        displacement: crate::extraction::dist(&point, u0),
        start: u0.to_vec(),
        point,
        refinement,
    }
}

fn norm(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Gauss-Newton onto `{h = 0, g_j = 0 (j in set)}` with minimum-norm steps.
fn project(model: &Model, u0: &[f64], set: &[usize]) -> Vec<f64> {
    let mut u = u0.to_vec();
    if model.h.is_empty() && set.is_empty() {
        return u;
    }
    let (mut r, mut jac) = model.system(&u, set);
    for _ in 0..2000 {
        let rn = r.norm();
        if rn == 0.0 {
            break;
        }
        // Row equilibration keeps nearly vanishing gradients from being cut by the SVD threshold.
        let mut a = jac.clone();
        let mut rhs = -&r;
        for i in 0..a.nrows() {
            let s = a.row(i).norm();
            if s > 0.0 {
                a.row_mut(i).scale_mut(1.0 / s);
                rhs[i] /= s;
            }
        }
        let Ok(step) = linalg::lstsq(&a, &rhs) else {
            break;
        };
        let next: Vec<f64> = u.iter().zip(step.x.iter()).map(|(a, b)| a + b).collect();
        let (r2, jac2) = model.system(&next, set);
        if r2.norm().is_nan() || r2.norm() >= rn {
            break;
        }
        u = next;
        r = r2;
        jac = jac2;
    }
    u
}

/// Newton on `grad L = 0, h = 0, g_set = 0`; returns the point and the set's multipliers.
fn kkt_newton(
    model: &Model,
    u0: &[f64],
    set: &[usize],
    tol: &Tolerances,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = model.n;
    let m1 = model.h.len();
    let r = m1 + set.len();
    let init = multipliers_model(model, u0, set, tol);
    let mut u = u0.to_vec();
    let mut lam: Vec<f64> = init.lambda.iter().chain(&init.mu_active).copied().collect();
    let residual = |u: &[f64], lam: &[f64]| -> DVector<f64> {
        let (c, jac) = model.system(u, set);
        let grad_l = model.f.gradient(u) - jac.transpose() * DVector::from_column_slice(lam);
        let mut f = DVector::zeros(n + r);
        f.rows_mut(0, n).copy_from(&grad_l);
        f.rows_mut(n, r).copy_from(&c);
        f
    };
    let scale = 1.0 + model.f.gradient(u0).norm();
    let mut fval = residual(&u, &lam);
    for _ in 0..100 {
        let fn0 = fval.norm();
        if fn0 <= 1e-15 * scale {
            break;
        }
        let mut mu_full = vec![0.0; model.g.len()];
        for (a, &j) in set.iter().enumerate() {
            mu_full[j] = lam[m1 + a];
        }
        let hl = model.lagrangian_hessian(&u, &lam[..m1], &mu_full);
        let (_, jac) = model.system(&u, set);
        let mut k = DMatrix::zeros(n + r, n + r);
        k.view_mut((0, 0), (n, n)).copy_from(&hl);
        k.view_mut((0, n), (n, r)).copy_from(&(-jac.transpose()));
        k.view_mut((n, 0), (r, n)).copy_from(&jac);
        let step = linalg::lstsq(&k, &(-&fval)).ok()?;
        let u2: Vec<f64> = u
            .iter()
            .zip(step.x.rows(0, n).iter())
            .map(|(a, b)| a + b)
            .collect();
        let lam2: Vec<f64> = lam
            .iter()
            .zip(step.x.rows(n, r).iter())
            .map(|(a, b)| a + b)
            .collect();
        let f2 = residual(&u2, &lam2);
        if f2.norm().is_nan() || f2.norm() >= fn0 {
            break;
        }
        u = u2;
        lam = lam2;
        fval = f2;
    }
    (fval.norm() <= 1e-10 * scale).then(|| (u, lam[m1..].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::io::parse_pop;
    use proptest::prelude::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn robinson_point() -> Vec<f64> {
        vec![1.0 / 3f64.sqrt(); 3]
    }

    #[test]
    fn active_sets() {
        assert!(active_set(&catalog::robinson(), &robinson_point(), 1e-6).is_empty());
        assert_eq!(
            active_set(&catalog::simplex_cubic(), &[0.0, 0.0], 1e-6),
            vec![0, 1]
        );
        assert_eq!(
            active_set(&catalog::lemniscate(), &[0.0, 0.0], 1e-6),
            vec![0, 1]
        );
    }

    #[test]
    fn robinson_multipliers_vanish() {
        let p = catalog::robinson();
        let m = multipliers(&p, &robinson_point(), &[], &tol());
        assert!(m.lambda[0].abs() < 1e-12);
        assert!(m.residual < 1e-12);
    }

    #[test]
    fn lemniscate_fooc_residual_is_two() {
        let p = catalog::lemniscate();
        let m = multipliers(&p, &[0.0, 0.0], &[0, 1], &tol());
        assert!((m.residual - 2.0).abs() < 1e-12);
        assert_eq!(m.mu_active[1], 3.0);
    }

    #[test]
    fn cqc_examples() {
        let sphere = parse_pop("vars x y\nmin x\nh: x^2 + y^2 - 1 == 0\n").unwrap();
        assert!(cqc_check(&sphere, &[0.6, 0.8], &[], &tol()).passed());
        assert_eq!(
            cqc_check(&catalog::lemniscate(), &[0.0, 0.0], &[0, 1], &tol()).verdict,
            Verdict::Fail
        );
        assert!(cqc_check(&catalog::simplex_cubic(), &[0.0, 0.0], &[0, 1], &tol()).passed());
    }

    #[test]
    fn robinson_certificate() {
        let r = certify(&catalog::robinson(), &robinson_point(), &tol()).unwrap();
        assert!(r.fooc.passed() && r.cqc.passed() && r.scc.passed() && r.sosc.passed());
        assert!(r.scc.vacuous);
        // Projection of (4/9)(3I - ee^T) onto the tangent plane is (4/3) I.
        assert!((r.sosc.evidence.unwrap() - 4.0 / 3.0).abs() < 1e-10);
        assert!(r.det_nonsingular.passed());
        assert_eq!(r.det_sosc_agreement, Some(true));
        assert!(r.bhc_implied);
    }

    #[test]
    fn robinson_hessian_matches_closed_form() {
        let r = certify(&catalog::robinson(), &robinson_point(), &tol()).unwrap();
        let e = DMatrix::from_element(3, 3, 1.0);
        let want = (DMatrix::identity(3, 3) * 3.0 - e) * (4.0 / 9.0);
        assert!((&r.kkt.lagrangian_hessian - want).norm() < 1e-12);
    }

    #[test]
    fn lemniscate_verdicts() {
        let r = certify(&catalog::lemniscate(), &[0.0, 0.0], &tol()).unwrap();
        assert_eq!(r.fooc.verdict, Verdict::Fail);
        assert_eq!(r.cqc.verdict, Verdict::Fail);
        assert!(!r.bhc_implied);
    }

    #[test]
    fn simplex_cubic_verdicts() {
        let r = certify(&catalog::simplex_cubic(), &[0.0, 0.0], &tol()).unwrap();
        assert!(r.fooc.passed() && r.cqc.passed());
        assert_eq!(r.kkt.mu, vec![0.0, 0.0, 0.0]);
        assert_eq!(r.scc.verdict, Verdict::Fail);
        assert!(r.sosc.passed() && r.sosc.vacuous);
    }

    #[test]
    fn motzkin_ball_verdicts() {
        let r = certify(&catalog::motzkin_ball(), &[0.0, 0.0, 0.0], &tol()).unwrap();
        assert!(r.cqc.passed() && r.scc.passed());
        assert_eq!(r.sosc.verdict, Verdict::Fail);
        assert!(r.sonc.passed());
        assert!(r.det_h.abs() < 1e-300);
        assert_eq!(r.det_sosc_agreement, Some(true));
    }

    #[test]
    fn bordered_determinant_example() {
        let p = parse_pop("vars x1 x2\nmin x1^2 + x2^2\nh: x1 - 1 == 0\n").unwrap();
        let r = certify(&p, &[1.0, 0.0], &tol()).unwrap();
        assert!((r.kkt.lambda[0] - 2.0).abs() < 1e-12);
        let want = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 1.0, 0.0, 2.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.kkt.bordered, want);
        assert!((r.det_h + 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_points_are_rejected() {
        let e = certify(&catalog::robinson(), &[1.0, 1.0, 1.0], &tol()).unwrap_err();
        assert!(matches!(e, OptimalityError::Infeasible { .. }));
        assert!(matches!(
            certify(&catalog::robinson(), &[1.0], &tol()),
            Err(OptimalityError::Dimension { .. })
        ));
    }

    #[test]
    fn refinement_reaches_the_kkt_point() {
        let p = parse_pop("vars x y\nmin x + y\nh: x^2 + y^2 - 1 == 0\n").unwrap();
        let model = Model::new(&p);
        let s = -(0.5f64).sqrt();
        let r = refine_point(&model, &[s + 1e-5, s - 2e-5], 1e-3, &tol());
        assert_eq!(r.refinement, Refinement::Kkt);
        assert!(crate::extraction::dist(&r.point, &[s, s]) < 1e-14);
    }

    #[test]
    fn refinement_projects_when_no_kkt_point_exists() {
        let model = Model::new(&catalog::lemniscate());
        let r = refine_point(&model, &[0.004, -0.0116], 0.02, &tol());
        assert_eq!(r.refinement, Refinement::Projected);
        assert!(r.point.iter().all(|v| v.abs() < 1e-100), "{:?}", r);
        let rep = certify_model(&model, &r.point, &tol()).unwrap();
        assert_eq!(rep.fooc.verdict, Verdict::Fail);
        assert_eq!(rep.cqc.verdict, Verdict::Fail);
    }

    #[test]
    fn sosc_implies_sonc_on_simplex_cubic_and_robinson() {
        for (p, u) in [
            (catalog::robinson(), robinson_point()),
            (catalog::simplex_cubic(), vec![0.0, 0.0]),
        ] {
            let r = certify(&p, &u, &tol()).unwrap();
            assert!(!r.sosc.passed() || r.sonc.passed());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn verdicts_are_invariant_under_constraint_rescaling(
            c1 in 0.1f64..10.0,
            c2 in 0.1f64..10.0,
            a in 0.2f64..1.5,
            b in -1.0f64..1.0,
        ) {
            // Minimizer of a linear objective on the disc, inside a half plane.
            let base = format!("vars x y\nmin {a}*x + {b}*y\ng: 1 - x^2 - y^2 >= 0\ng: x + 2 >= 0\n");
            let scaled = format!(
                "vars x y\nmin {a}*x + {b}*y\ng: {c1}*(1 - x^2 - y^2) >= 0\ng: {c2}*(x + 2) >= 0\n"
            );
            let p = parse_pop(&base).unwrap();
            let q = parse_pop(&scaled).unwrap();
            let r = (a * a + b * b).sqrt();
            let u = [-a / r, -b / r];
            let t = tol();
            let r1 = certify(&p, &u, &t).unwrap();
            let r2 = certify(&q, &u, &t).unwrap();
            prop_assert_eq!(&r1.kkt.active_set, &r2.kkt.active_set);
            for (x, y) in [(r1.cqc, r2.cqc), (r1.scc, r2.scc), (r1.sosc, r2.sosc)] {
                prop_assert_eq!(x.verdict, y.verdict);
            }
            prop_assert!((r1.kkt.mu[0] - c1 * r2.kkt.mu[0]).abs() < 1e-9 * (1.0 + r1.kkt.mu[0]));
        }
    }
}
