//! Dense primal-dual interior-point solver for block-diagonal SDPs.
//!
//! Primal:  minimize  <C, X>   s.t.  <A_l, X> = b_l,  X ⪰ 0
//! Dual:    maximize  b^T y    s.t.  sum_l y_l A_l + Z = C,  Z ⪰ 0
//!
//! Infeasible-start path following with the HKM search direction and a
//! Mehrotra predictor-corrector. The Schur complement is assembled densely
//! and factored by Cholesky.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::frob;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("problem data contains non-finite values")]
    NonFinite,
    #[error("inconsistent problem dimensions: {0}")]
    Dimension(String),
}

/// One linear constraint `<A_l, X> = b_l`; blocks not listed are zero.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub parts: Vec<(usize, DMatrix<f64>)>,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub c: Vec<DMatrix<f64>>,
    pub constraints: Vec<Constraint>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    NearOptimal,
    PrimalInfeasible,
    DualInfeasible,
    Stalled,
}

impl SdpStatus {
    pub fn is_usable(self) -> bool {
        matches!(self, SdpStatus::Optimal | SdpStatus::NearOptimal)
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SdpOptions {
    pub max_iter: usize,
    pub tol_gap: f64,
    pub tol_feas: f64,
    /// Threshold for the `NearOptimal` downgrade.
    pub tol_near: f64,
    pub verbosity: u8,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            max_iter: 200,
            tol_gap: 1e-8,
            tol_feas: 1e-8,
            tol_near: 1e-5,
            verbosity: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: Vec<DMatrix<f64>>,
    pub y: DVector<f64>,
    pub z: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub rel_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub min_eig_x: f64,
    pub min_eig_z: f64,
    pub iterations: usize,
    pub regularized: bool,
    pub status: SdpStatus,
}

impl SdpProblem {
    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        let nb = self.block_sizes.len();
        if self.c.len() != nb {
            return Err(SdpError::Dimension(format!(
                "{} blocks but {} objective blocks",
                nb,
                self.c.len()
            )));
        }
        if self.b.len() != self.constraints.len() {
            return Err(SdpError::Dimension(format!(
                "{} constraints but {} right-hand sides",
                self.constraints.len(),
                self.b.len()
            )));
        }
        for (k, (c, &n)) in self.c.iter().zip(&self.block_sizes).enumerate() {
            if c.shape() != (n, n) {
                return Err(SdpError::Dimension(format!(
                    "objective block {k} has wrong shape"
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(SdpError::NonFinite);
            }
        }
        for (l, con) in self.constraints.iter().enumerate() {
            for (k, a) in &con.parts {
                let n = *self.block_sizes.get(*k).ok_or_else(|| {
                    SdpError::Dimension(format!("constraint {l} names block {k}"))
                })?;
                if a.shape() != (n, n) {
                    return Err(SdpError::Dimension(format!(
                        "constraint {l} block {k} has wrong shape"
                    )));
                }
                if a.iter().any(|v| !v.is_finite()) {
                    return Err(SdpError::NonFinite);
                }
            }
        }
        if self.b.iter().any(|v| !v.is_finite()) {
            return Err(SdpError::NonFinite);
        }
        Ok(())
    }

    /// `A(X)`.
    pub fn apply(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints
                .iter()
                .map(|con| con.parts.iter().map(|(k, a)| frob(a, &x[*k])).sum::<f64>()),
        )
    }

    /// `A*(y) = sum_l y_l A_l`.
    pub fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self
            .block_sizes
            .iter()
            .map(|&n| DMatrix::zeros(n, n))
            .collect();
        for (con, &yl) in self.constraints.iter().zip(y.iter()) {
            if yl == 0.0 {
                continue;
            }
            for (k, a) in &con.parts {
                out[*k] += a * yl;
            }
        }
        out
    }

    pub fn primal_objective(&self, x: &[DMatrix<f64>]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| frob(c, x)).sum()
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn blocks_norm(m: &[DMatrix<f64>]) -> f64 {
    m.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
}

fn blocks_min_eig(m: &[DMatrix<f64>]) -> f64 {
    m.iter()
        .filter(|b| b.nrows() > 0)
        .map(|b| {
            nalgebra::SymmetricEigen::new(sym(b))
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Largest step `a` with `X + a dX ⪰ 0`, or infinity.
fn max_step(x_chol_inv: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    if dx.nrows() == 0 {
        return f64::INFINITY;
    }
    let w = sym(&(x_chol_inv * dx * x_chol_inv.transpose()));
    let lmin = nalgebra::SymmetricEigen::new(w)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn chol_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    sym(m).cholesky().map(|c| c.l())
}

fn lower_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    l.solve_lower_triangular(&DMatrix::identity(n, n))
        .unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN))
}

struct Scaled {
    problem: SdpProblem,
    row_scale: Vec<f64>,
    b_scale: f64,
    c_scale: f64,
}

fn scale_problem(p: &SdpProblem) -> Scaled {
    let mut problem = p.clone();
    let mut row_scale = Vec::with_capacity(p.constraints.len());
    for (l, con) in problem.constraints.iter_mut().enumerate() {
        let nrm = con
            .parts
            .iter()
            .map(|(_, a)| a.norm_squared())
            .sum::<f64>()
            .sqrt();
        let s = if nrm > 0.0 { nrm } else { 1.0 };
        for (_, a) in con.parts.iter_mut() {
            *a /= s;
        }
        problem.b[l] /= s;
        row_scale.push(s);
    }
    let b_scale = problem.b.norm().max(1.0);
    let c_scale = blocks_norm(&problem.c).max(1.0);
    problem.b /= b_scale;
    for c in problem.c.iter_mut() {
        *c /= c_scale;
    }
    Scaled {
        problem,
        row_scale,
        b_scale,
        c_scale,
    }
}

struct Iterate {
    x: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    z: Vec<DMatrix<f64>>,
}

/// Iterative-refinement sweeps per Schur solve.
const REFINE_STEPS: usize = 2;
/// The scaled problem is solved this much below the targets so that the targets
/// also hold after unscaling.
const STOP_MARGIN: f64 = 0.1;
/// Merit slack within which a smaller duality gap wins the final-iterate choice.
const SHARP_FACTOR: f64 = 10.0;

struct Merit {
    pobj: f64,
    dobj: f64,
    rel_gap: f64,
    pinf: f64,
    dinf: f64,
}

impl Merit {
    fn worst(&self) -> f64 {
        self.rel_gap.max(self.pinf).max(self.dinf)
    }
}

/// Residuals of `it`; the gap is measured with objectives multiplied by `obj_scale`,
/// so the scaled problem is judged in the units of the original one.
fn evaluate(p: &SdpProblem, it: &Iterate, obj_scale: f64) -> Merit {
    let pobj = p.primal_objective(&it.x);
    let dobj = p.b.dot(&it.y);
    let rp = &p.b - p.apply(&it.x);
    let aty = p.adjoint(&it.y);
    let rd: f64 =
        p.c.iter()
            .zip(&aty)
            .zip(&it.z)
            .map(|((c, a), z)| (c - a - z).norm_squared())
            .sum::<f64>()
            .sqrt();
    Merit {
        pobj,
        dobj,
        rel_gap: obj_scale * (pobj - dobj).abs() / (1.0 + obj_scale * (pobj.abs() + dobj.abs())),
        pinf: rp.norm() / (1.0 + p.b.norm()),
        dinf: rd / (1.0 + blocks_norm(&p.c)),
    }
}

/// Solve a block SDP. Deterministic for fixed input and options.
pub fn solve(problem: &SdpProblem, options: &SdpOptions) -> Result<SdpSolution, SdpError> {
    problem.validate()?;
    let scaled = scale_problem(problem);
    let p = &scaled.problem;
    let obj_scale = scaled.b_scale * scaled.c_scale;
    let m = p.num_constraints();
    let nb = p.block_sizes.len();
    let total_order: usize = p.block_sizes.iter().sum();

    // Standard infeasible starting point.
    let mut it = Iterate {
        x: Vec::with_capacity(nb),
        y: DVector::zeros(m),
        z: Vec::with_capacity(nb),
    };
    for (k, &n) in p.block_sizes.iter().enumerate() {
        let nf = n as f64;
        let mut xi = 10.0f64.max(nf.sqrt());
        let mut eta = 10.0f64.max(nf.sqrt()).max(p.c[k].norm());
        for (l, con) in p.constraints.iter().enumerate() {
            for (kk, a) in &con.parts {
                if *kk == k {
                    let an = a.norm();
                    xi = xi.max(nf.sqrt() * (1.0 + p.b[l].abs()) / (1.0 + an));
                    eta = eta.max(an);
                }
            }
        }
        it.x.push(DMatrix::identity(n, n) * xi);
        it.z.push(DMatrix::identity(n, n) * eta);
    }

    let mut best: Option<(f64, Iterate, Merit)> = None;
    // Smallest-gap iterate among those within `SHARP_FACTOR` of the best merit.
    let mut sharp: Option<(Iterate, Merit)> = None;
    let mut regularized_recent = false;
    let mut iterations = 0;
    let mut infeasible: Option<SdpStatus> = None;
    let mut stall_count = 0;
    let mut last_worst = f64::INFINITY;

    for iter in 0..options.max_iter {
        iterations = iter;
        let merit = evaluate(p, &it, obj_scale);
        let worst = merit.worst();
        if options.verbosity > 0 {
            eprintln!(
                "sdp it {iter:3}  pobj {:+.10e}  dobj {:+.10e}  gap {:.2e}  pinf {:.2e}  dinf {:.2e}",
                merit.pobj * scaled.b_scale * scaled.c_scale,
                merit.dobj * scaled.b_scale * scaled.c_scale,
                merit.rel_gap,
                merit.pinf,
                merit.dinf
            );
        }
        let better = best.as_ref().is_none_or(|(w, _, _)| worst < *w);
        if better {
            best = Some((
                worst,
                Iterate {
                    x: it.x.clone(),
                    y: it.y.clone(),
                    z: it.z.clone(),
                },
                evaluate(p, &it, obj_scale),
            ));
        }
        let best_worst = best.as_ref().map_or(worst, |b| b.0);
        if worst <= SHARP_FACTOR * best_worst
            && sharp
                .as_ref()
                .is_none_or(|(_, m)| merit.rel_gap < m.rel_gap)
        {
            sharp = Some((
                Iterate {
                    x: it.x.clone(),
                    y: it.y.clone(),
                    z: it.z.clone(),
                },
                evaluate(p, &it, obj_scale),
            ));
        }
        if merit.rel_gap <= STOP_MARGIN * options.tol_gap
            && merit.pinf <= STOP_MARGIN * options.tol_feas
            && merit.dinf <= STOP_MARGIN * options.tol_feas
        {
            break;
        }

        // Infeasibility certificates from diverging iterates.
        let xnorm = blocks_norm(&it.x);
        let ynorm = it.y.norm();
        if merit.dobj > 1e8
            && merit.dinf * (1.0 + blocks_norm(&p.c)) / merit.dobj < 1e-8
            && ynorm > 1e8
        {
            infeasible = Some(SdpStatus::PrimalInfeasible);
            break;
        }
        if merit.pobj < -1e8
            && merit.pinf * (1.0 + p.b.norm()) / merit.pobj.abs() < 1e-8
            && xnorm > 1e8
        {
            infeasible = Some(SdpStatus::DualInfeasible);
            break;
        }

        if worst > 0.9 * last_worst {
            stall_count += 1;
        } else {
            stall_count = 0;
        }
        last_worst = last_worst.min(worst);
        if stall_count >= 30 {
            break;
        }

        // Residuals.
        let aty = p.adjoint(&it.y);
        let rd: Vec<DMatrix<f64>> =
            p.c.iter()
                .zip(&aty)
                .zip(&it.z)
                .map(|((c, a), z)| c - a - z)
                .collect();
        let mu = it.x.iter().zip(&it.z).map(|(x, z)| frob(x, z)).sum::<f64>() / total_order as f64;

        // Factorizations.
        let mut zinv = Vec::with_capacity(nb);
        let mut xl_inv = Vec::with_capacity(nb);
        let mut zl_inv = Vec::with_capacity(nb);
        let mut broken = false;
        for k in 0..nb {
            let (Some(lz), Some(lx)) = (chol_lower(&it.z[k]), chol_lower(&it.x[k])) else {
                broken = true;
                break;
            };
            let lzi = lower_inverse(&lz);
            zinv.push(lzi.transpose() * &lzi);
            zl_inv.push(lzi);
            xl_inv.push(lower_inverse(&lx));
        }
        if broken {
            break;
        }

        // Schur complement M_ij = tr(A_i X A_j Z^-1).
        let mut schur = DMatrix::zeros(m, m);
        let mut g_cols: Vec<Vec<(usize, DMatrix<f64>)>> = Vec::with_capacity(m);
        for con in &p.constraints {
            g_cols.push(
                con.parts
                    .iter()
                    .map(|(k, a)| (*k, &it.x[*k] * a * &zinv[*k]))
                    .collect(),
            );
        }
        for i in 0..m {
            for j in i..m {
                let mut s = 0.0;
                for (ki, ai) in &p.constraints[i].parts {
                    for (kj, g) in &g_cols[j] {
                        if ki == kj {
                            s += frob(ai, g);
                        }
                    }
                }
                schur[(i, j)] = s;
                schur[(j, i)] = s;
            }
        }
        let diag_max = (0..m)
            .map(|i| schur[(i, i)].abs())
            .fold(0.0, f64::max)
            .max(1e-300);
        let mut reg = 0.0;
        let chol = loop {
            let mut s = schur.clone();
            for i in 0..m {
                s[(i, i)] += reg;
            }
            if let Some(c) = s.cholesky() {
                break Some(c);
            }
            reg = if reg == 0.0 {
                1e-12 * diag_max
            } else {
                reg * 100.0
            };
            if reg > 1e-4 * diag_max {
                break None;
            }
        };
        let Some(chol) = chol else {
            break;
        };
        regularized_recent = reg > 0.0;

        let a_zinv = p.apply(&zinv);
        let x_rd_zinv: Vec<DMatrix<f64>> = (0..nb).map(|k| &it.x[k] * &rd[k] * &zinv[k]).collect();
        let a_x_rd_zinv = p.apply(&x_rd_zinv);

        let direction = |sigma_mu: f64, corr: Option<&Vec<DMatrix<f64>>>| {
            let mut rhs = &p.b - &a_zinv * sigma_mu + &a_x_rd_zinv;
            if let Some(c) = corr {
                rhs += p.apply(c);
            }
            let mut dy = chol.solve(&rhs);
            // Iterative refinement against the unregularized Schur operator; keeps the
            // primal residual from drifting when the factorization loses accuracy.
            for _ in 0..REFINE_STEPS {
                let atdy = p.adjoint(&dy);
                let m_dy = p.apply(
                    &(0..nb)
                        .map(|k| &it.x[k] * &atdy[k] * &zinv[k])
                        .collect::<Vec<_>>(),
                );
                dy += chol.solve(&(&rhs - m_dy));
            }
            let atdy = p.adjoint(&dy);
            let dz: Vec<DMatrix<f64>> = (0..nb).map(|k| &rd[k] - &atdy[k]).collect();
            let dx: Vec<DMatrix<f64>> = (0..nb)
                .map(|k| {
                    let mut d = &zinv[k] * sigma_mu - &it.x[k] - &it.x[k] * &dz[k] * &zinv[k];
                    if let Some(c) = corr {
                        d -= &c[k];
                    }
                    sym(&d)
                })
                .collect();
            (dx, dy, dz)
        };
        let steps = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| {
            let ap = (0..nb)
                .map(|k| max_step(&xl_inv[k], &dx[k]))
                .fold(f64::INFINITY, f64::min);
            let ad = (0..nb)
                .map(|k| max_step(&zl_inv[k], &dz[k]))
                .fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        // Predictor.
        let (dxa, _dya, dza) = direction(0.0, None);
        let (apa, ada) = steps(&dxa, &dza);
        let (apa, ada) = (apa.min(1.0), ada.min(1.0));
        let mu_aff = (0..nb)
            .map(|k| frob(&(&it.x[k] + &dxa[k] * apa), &(&it.z[k] + &dza[k] * ada)))
            .sum::<f64>()
            / total_order as f64;
        let sigma = if mu > 0.0 {
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        // Corrector.
        let corr: Vec<DMatrix<f64>> = (0..nb).map(|k| &dxa[k] * &dza[k] * &zinv[k]).collect();
        let (dx, dy, dz) = direction(sigma * mu, Some(&corr));
        let (ap, ad) = steps(&dx, &dz);
        let gamma = 0.9 + 0.09 * apa.min(ada);
        let alpha_p = (gamma * ap).min(1.0);
        let alpha_d = (gamma * ad).min(1.0);
        if alpha_p < 1e-10 && alpha_d < 1e-10 {
            break;
        }
        for k in 0..nb {
            it.x[k] += &dx[k] * alpha_p;
            it.x[k] = sym(&it.x[k]);
            it.z[k] += &dz[k] * alpha_d;
            it.z[k] = sym(&it.z[k]);
        }
        it.y += dy * alpha_d;
        if it
            .x
            .iter()
            .chain(&it.z)
            .any(|b| b.iter().any(|v| !v.is_finite()))
            || !it.y.iter().all(|v| v.is_finite())
        {
            break;
        }
    }

    // Final iterate: the last one if it is the best, otherwise the best seen. When the
    // best is short of the targets, a nearly-as-good iterate with a smaller gap is
    // preferred, since it gives a tighter bound on degenerate problems.
    let final_merit = evaluate(p, &it, obj_scale);
    let (use_it, merit) = match best {
        Some((w, b_it, b_merit)) if w < final_merit.worst() => (b_it, b_merit),
        _ => (it, final_merit),
    };
    let converged = merit.worst() <= options.tol_gap.max(options.tol_feas);
    let (use_it, merit) = match sharp {
        Some((s_it, s_merit))
            if !converged
                && s_merit.worst() <= SHARP_FACTOR * merit.worst()
                && s_merit.rel_gap < merit.rel_gap =>
        {
            (s_it, s_merit)
        }
        _ => (use_it, merit),
    };

    // Undo scaling.
    let x: Vec<DMatrix<f64>> = use_it.x.iter().map(|b| b * scaled.b_scale).collect();
    let z: Vec<DMatrix<f64>> = use_it.z.iter().map(|b| b * scaled.c_scale).collect();
    let y = DVector::from_iterator(
        m,
        use_it
            .y
            .iter()
            .zip(&scaled.row_scale)
            .map(|(v, s)| v * scaled.c_scale / s),
    );
    let orig = evaluate(
        problem,
        &Iterate {
            x: x.clone(),
            y: y.clone(),
            z: z.clone(),
        },
        1.0,
    );
    let worst = merit.worst().max(orig.worst());
    let status = if let Some(s) = infeasible {
        s
    } else if worst <= options.tol_gap.max(options.tol_feas) && !regularized_recent {
        SdpStatus::Optimal
    } else if worst <= options.tol_near {
        SdpStatus::NearOptimal
    } else {
        SdpStatus::Stalled
    };
    Ok(SdpSolution {
        min_eig_x: blocks_min_eig(&x),
        min_eig_z: blocks_min_eig(&z),
        x,
        y,
        z,
        primal_objective: orig.pobj,
        dual_objective: orig.dobj,
        rel_gap: orig.rel_gap,
        primal_residual: orig.pinf,
        dual_residual: orig.dinf,
        iterations,
        regularized: regularized_recent,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn smallest_eigenvalue_problem() {
        // min tr(CX), tr(X) = 1.
        let p = SdpProblem {
            block_sizes: vec![2],
            c: vec![diag(&[1.0, 2.0])],
            constraints: vec![Constraint {
                parts: vec![(0, DMatrix::identity(2, 2))],
            }],
            b: DVector::from_vec(vec![1.0]),
        };
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_objective - 1.0).abs() < 1e-7);
        assert!((s.x[0][(0, 0)] - 1.0).abs() < 1e-6);
        assert!(s.x[0][(1, 1)].abs() < 1e-6);
    }

    #[test]
    fn max_gamma_lmi() {
        // max g s.t. diag(1-g, 1) ⪰ 0, i.e. y = g, A = diag(1,0), C = diag(1,1).
        let p = SdpProblem {
            block_sizes: vec![2],
            c: vec![diag(&[1.0, 1.0])],
            constraints: vec![Constraint {
                parts: vec![(0, diag(&[1.0, 0.0]))],
            }],
            b: DVector::from_vec(vec![1.0]),
        };
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.y[0] - 1.0).abs() < 1e-7);
        assert!((s.dual_objective - 1.0).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        let mut p = SdpProblem {
            block_sizes: vec![2],
            c: vec![diag(&[1.0, 2.0, 3.0])],
            constraints: vec![],
            b: DVector::zeros(0),
        };
        assert!(matches!(
            solve(&p, &SdpOptions::default()),
            Err(SdpError::Dimension(_))
        ));
        p.c = vec![diag(&[f64::NAN, 1.0])];
        assert_eq!(
            solve(&p, &SdpOptions::default()).unwrap_err(),
            SdpError::NonFinite
        );
    }

    #[test]
    fn detects_primal_infeasibility() {
        // tr(X) = -1 has no PSD solution.
        let p = SdpProblem {
            block_sizes: vec![2],
            c: vec![diag(&[1.0, 1.0])],
            constraints: vec![Constraint {
                parts: vec![(0, DMatrix::identity(2, 2))],
            }],
            b: DVector::from_vec(vec![-1.0]),
        };
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::PrimalInfeasible);
    }

    #[test]
    fn detects_dual_infeasibility() {
        // min -X11 with X12 = 0 only: unbounded below.
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = 0.5;
        a[(1, 0)] = 0.5;
        let p = SdpProblem {
            block_sizes: vec![2],
            c: vec![diag(&[-1.0, 0.0])],
            constraints: vec![Constraint {
                parts: vec![(0, a)],
            }],
            b: DVector::from_vec(vec![0.0]),
        };
        let s = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::DualInfeasible);
    }
}
