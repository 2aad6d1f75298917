//! The full pipeline: hierarchy sweep, flat truncation, certification of the
//! extracted points, archimedean certificate search and the final verdict on
//! finite convergence.

use log::{debug, info};
use nalgebra::DMatrix;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::extraction::{
    self, ExtractedPoint, FlatTruncationResult, MomentSequence, PLATEAU_RATIO,
};
use crate::io::{print_pop, PopInstance, REPORT_SCHEMA_ID};
use crate::linalg::{self, SymMatrix, DEFAULT_RANK_TAU};
use crate::optimality::{self, Check, Model, OptimalityReport, Refinement, Tolerances, Verdict};
use crate::poly::{FloatPoly, Monomial, RatPoly};
use crate::relaxation::{self, fit_ideal_part, weighted_sos, MomentRelaxation};
use crate::sdp::{self, SdpOptions, SdpStatus};

/// Moment and SOS values further apart than this are flagged.
pub const VALUE_MISMATCH: f64 = 1e-5;
/// Admissible `|f(u) - f_k|` at extracted atoms, relative to `1 + |f_k|`.
pub const ATOM_GAP: f64 = 1e-6;
/// Allowed decrease between consecutive lower bounds.
pub const MONOTONE_SLACK: f64 = 1e-7;
/// Coefficient-norm bound on the archimedean identity residual.
pub const ARCH_RESIDUAL: f64 = 1e-6;

pub const ATTAINMENT_CAVEAT: &str = "FOOC failure at a minimizer rules out finite convergence only when \
the SOS relaxation attains its optimal value, which is not checked numerically; min x s.t. -x^2 >= 0 \
fails FOOC at its minimizer yet has f_k = f_min for every k >= 1";

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosisOptions {
    /// Inclusive order range; defaults to `min_order ..= min_order + 2`.
    pub orders: Option<(u32, u32)>,
    pub stop_on_flat: bool,
    pub sdp: SdpOptions,
    pub tolerances: Tolerances,
    pub rank_tau: f64,
    /// Radius within which extracted points are snapped onto KKT points.
    pub refine_radius: f64,
    /// Orders above the constraint half-degree tried for the archimedean certificate.
    pub arch_extra_orders: u32,
    /// Explicit `R` values; defaults to `{1, 2, 5, 10} (1 + max |u|^2)` over extracted points.
    pub arch_schedule: Option<Vec<f64>>,
    /// Seed for the random combination in minimizer extraction.
    pub seed: u64,
}

impl Default for DiagnosisOptions {
    fn default() -> Self {
        DiagnosisOptions {
            orders: None,
            stop_on_flat: false,
            sdp: SdpOptions::default(),
            tolerances: Tolerances::default(),
            rank_tau: DEFAULT_RANK_TAU,
            refine_radius: 1e-3,
            arch_extra_orders: 2,
            arch_schedule: None,
            seed: extraction::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyRow {
    pub order: u32,
    pub moment_value: f64,
    /// Lower bound `f_k` from the SOS side.
    pub sos_value: f64,
    pub values_differ: bool,
    pub status: SdpStatus,
    pub iterations: usize,
    pub rel_gap: f64,
    pub identity_residual: f64,
    pub flat: bool,
    pub flat_degree: Option<u32>,
    /// `(t, rank M_t, rank M_{t - d_K})` for every degree examined.
    pub ranks: Vec<(u32, usize, usize)>,
    pub num_minimizers: usize,
    /// Largest `|f(u) - f_k|` over the extracted atoms.
    pub atom_value_gap: Option<f64>,
    /// Flat, and every atom attains `f_k` to the solve's accuracy.
    pub verified_flat: bool,
    /// Relaxation, solver or extraction failure for this order.
    pub error: Option<String>,
}

/// Solved row plus the data needed downstream.
#[derive(Debug, Clone)]
pub struct SolvedRow {
    pub row: HierarchyRow,
    pub moments: Option<MomentSequence>,
    pub flat: Option<FlatTruncationResult>,
}

fn solve_row(instance: &PopInstance, k: u32, opts: &DiagnosisOptions) -> SolvedRow {
    let mut row = HierarchyRow {
        order: k,
        moment_value: f64::NAN,
        sos_value: f64::NAN,
        values_differ: false,
        status: SdpStatus::Stalled,
        iterations: 0,
        rel_gap: f64::NAN,
        identity_residual: f64::NAN,
        flat: false,
        flat_degree: None,
        ranks: Vec::new(),
        num_minimizers: 0,
        atom_value_gap: None,
        verified_flat: false,
        error: None,
    };
    let relax = match relaxation::build(instance, k) {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return SolvedRow {
                row,
                moments: None,
                flat: None,
            };
        }
    };
    let solved = relax.to_sdp().map_err(|e| e.to_string()).and_then(|emb| {
        sdp::solve(&emb.problem, &opts.sdp)
            .map(|s| (emb, s))
            .map_err(|e| e.to_string())
    });
    let (emb, sol) = match solved {
        Ok(x) => x,
        Err(e) => {
            row.error = Some(e);
            return SolvedRow {
                row,
                moments: None,
                flat: None,
            };
        }
    };
    let cert = relaxation::sos_value_from_dual(&relax, &emb, &sol);
    row.moment_value = emb.moment_value(&relax, &sol);
    row.sos_value = cert.gamma;
    row.values_differ = (row.moment_value - row.sos_value).abs() > VALUE_MISMATCH;
    row.status = sol.status;
    row.iterations = sol.iterations;
    row.rel_gap = sol.rel_gap;
    row.identity_residual = cert.identity_residual;
    info!(
        "order {k}: moment {:.9} sos {:.9} status {:?}",
        row.moment_value, row.sos_value, row.status
    );
    if !sol.status.is_usable() {
        return SolvedRow {
            row,
            moments: None,
            flat: None,
        };
    }
    let mut y = emb.moments(&sol);
    y[0] = 1.0;
    let seq =
        MomentSequence::new(instance.nvars(), k, y).expect("relaxation moments are normalized");
    let flat = match extraction::extract_seeded(&seq, instance, opts.rank_tau, opts.seed) {
        Ok(f) => Some(f),
        Err(e) => {
            // Flat but the atoms could not be recovered.
            row.error = Some(e.to_string());
            extraction::flat_check(&seq, instance, opts.rank_tau).ok()
        }
    };
    if let Some(f) = &flat {
        row.flat = f.flat;
        row.flat_degree = f.flat.then_some(f.t);
        row.ranks = f.scanned.clone();
        row.num_minimizers = f.minimizers.len();
        if f.flat && !f.minimizers.is_empty() {
            let gap = f
                .minimizers
                .iter()
                .map(|m| (m.objective - row.sos_value).abs())
                .fold(0.0, f64::max);
            row.atom_value_gap = Some(gap);
            row.verified_flat = gap <= ATOM_GAP * (1.0 + row.sos_value.abs());
        }
    }
    SolvedRow {
        row,
        moments: Some(seq),
        flat,
    }
}

pub fn default_orders(instance: &PopInstance) -> (u32, u32) {
    let lo = relaxation::min_order(instance);
    (lo, lo + 2)
}

/// Solve the relaxations of the given orders, in increasing order.
pub fn sweep_detailed(
    instance: &PopInstance,
    orders: (u32, u32),
    opts: &DiagnosisOptions,
) -> Vec<SolvedRow> {
    let lo = orders.0.max(relaxation::min_order(instance));
    let mut rows = Vec::new();
    for k in lo..=orders.1 {
        let r = solve_row(instance, k, opts);
        let stop = opts.stop_on_flat && r.row.verified_flat;
        rows.push(r);
        if stop {
            break;
        }
    }
    rows
}

pub fn sweep(
    instance: &PopInstance,
    orders: (u32, u32),
    opts: &DiagnosisOptions,
) -> Vec<HierarchyRow> {
    sweep_detailed(instance, orders, opts)
        .into_iter()
        .map(|r| r.row)
        .collect()
}

/// Whether consecutive usable lower bounds never drop by more than `MONOTONE_SLACK`.
pub fn is_monotone(rows: &[HierarchyRow]) -> bool {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.status.is_usable())
        .map(|r| r.sos_value)
        .collect();
    vals.windows(2).all(|w| w[0] <= w[1] + MONOTONE_SLACK)
}

#[derive(Debug, Clone, Serialize)]
pub struct ArchimedeanCertificate {
    pub r: f64,
    pub order: u32,
    /// Smallest `R` the order-`t` relaxation supports.
    pub r_min: f64,
    #[serde(skip)]
    pub grams: Vec<DMatrix<f64>>,
    #[serde(skip)]
    pub ideal_multipliers: Vec<FloatPoly>,
    pub identity_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArchimedeanAttempt {
    pub order: u32,
    pub status: SdpStatus,
    pub r_min: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArchimedeanSearch {
    pub schedule: Vec<f64>,
    pub attempts: Vec<ArchimedeanAttempt>,
    pub certificate: Option<ArchimedeanCertificate>,
}

impl ArchimedeanSearch {
    pub fn found(&self) -> bool {
        self.certificate.is_some()
    }
}

fn negative_norm_squared(n: usize) -> RatPoly {
    let mut p = RatPoly::zero(n);
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = 2;
        p.add_term(Monomial::new(e), BigRational::from_integer((-1).into()));
    }
    p
}

/// Search for `R - |x|^2 = sum phi_i h_i + sigma_0 + sum sigma_j g_j` with
/// `t` from the constraint half-degree to `t_max` and `R` from `schedule`.
/// A `None` certificate is not a proof that the constraints are not archimedean.
pub fn find_archimedean_certificate(
    instance: &PopInstance,
    t_max: u32,
    schedule: &[f64],
    sdp_options: &SdpOptions,
) -> ArchimedeanSearch {
    let n = instance.nvars();
    let probe = instance.with_objective(negative_norm_squared(n));
    let t_min = relaxation::min_order(&probe);
    let mut attempts = Vec::new();
    for t in t_min..=t_max.max(t_min) {
        let relax = relaxation::build(&probe, t).expect("order at least the minimum");
        let solved = relax.to_sdp().map_err(|e| e.to_string()).and_then(|emb| {
            sdp::solve(&emb.problem, sdp_options)
                .map(|s| (emb, s))
                .map_err(|e| e.to_string())
        });
        let (emb, sol) = match solved {
            Ok(x) => x,
            Err(e) => {
                attempts.push(ArchimedeanAttempt {
                    order: t,
                    status: SdpStatus::Stalled,
                    r_min: None,
                    note: Some(e),
                });
                continue;
            }
        };
        if !sol.status.is_usable() {
            attempts.push(ArchimedeanAttempt {
                order: t,
                status: sol.status,
                r_min: None,
                note: None,
            });
            continue;
        }
        let cert = relaxation::sos_value_from_dual(&relax, &emb, &sol);
        let r_min = -cert.gamma;
        debug!("archimedean search t = {t}: R >= {r_min:.9}");
        let mut note = None;
        for &r in schedule {
            if r < r_min - 1e-7 * (1.0 + r_min.abs()) {
                continue;
            }
            match shifted_identity(&relax, &cert.grams, r - r_min, r) {
                Some((grams, phis, residual)) => {
                    attempts.push(ArchimedeanAttempt {
                        order: t,
                        status: sol.status,
                        r_min: Some(r_min),
                        note: None,
                    });
                    return ArchimedeanSearch {
                        schedule: schedule.to_vec(),
                        attempts,
                        certificate: Some(ArchimedeanCertificate {
                            r,
                            order: t,
                            r_min,
                            grams,
                            ideal_multipliers: phis,
                            identity_residual: residual,
                        }),
                    };
                }
                None => {
                    note = Some(format!(
                        "identity residual above {ARCH_RESIDUAL:e} for R = {r}"
                    ))
                }
            }
        }
        attempts.push(ArchimedeanAttempt {
            order: t,
            status: sol.status,
            r_min: Some(r_min),
            note: note.or_else(|| Some("no R in the schedule reaches the bound".into())),
        });
    }
    ArchimedeanSearch {
        schedule: schedule.to_vec(),
        attempts,
        certificate: None,
    }
}

/// Add `shift` to the constant of `sigma_0`, clip the Gram matrices to PSD and
/// refit the ideal part of `R - |x|^2`.
fn shifted_identity(
    relax: &MomentRelaxation,
    grams: &[DMatrix<f64>],
    shift: f64,
    r: f64,
) -> Option<(Vec<DMatrix<f64>>, Vec<FloatPoly>, f64)> {
    let mut grams: Vec<DMatrix<f64>> = grams.to_vec();
    grams[0][(0, 0)] += shift;
    for g in grams.iter_mut() {
        if g.nrows() == 0 {
            continue;
        }
        let eig = linalg::eig_sym(&SymMatrix::symmetrized(g)).ok()?;
        let clipped = eig.values.map(|v| v.max(0.0));
        *g = &eig.vectors * DMatrix::from_diagonal(&clipped) * eig.vectors.transpose();
    }
    let n = relax.nvars;
    let mut target = FloatPoly::constant(n, r);
    for i in 0..n {
        target.add_term(Monomial::var(n, i).mul(&Monomial::var(n, i)), -1.0);
    }
    let rest = &target - &weighted_sos(relax, &grams);
    let (phis, residual) = fit_ideal_part(relax, &rest);
    (residual <= ARCH_RESIDUAL).then_some((grams, phis, residual))
}

pub fn default_schedule(points: &[Vec<f64>]) -> Vec<f64> {
    let radius = points
        .iter()
        .map(|u| u.iter().map(|v| v * v).sum::<f64>())
        .fold(0.0, f64::max);
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|c| c * (1.0 + radius))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSource {
    /// Atom of a flat moment sequence.
    FlatExtraction,
    /// Mean of a moment sequence concentrated near one point.
    ConcentratedMean,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizerReport {
    pub source: PointSource,
    pub order: u32,
    pub extracted: Vec<f64>,
    pub point: Vec<f64>,
    pub refinement: Refinement,
    pub displacement: f64,
    pub objective: f64,
    pub report: Option<OptimalityReport>,
    pub error: Option<String>,
}

impl MinimizerReport {
    fn verdict(&self, pick: impl Fn(&OptimalityReport) -> Check) -> Option<Verdict> {
        self.report.as_ref().map(|r| pick(r).verdict)
    }

    pub fn fooc_failed(&self) -> bool {
        self.verdict(|r| r.fooc) == Some(Verdict::Fail)
    }

    pub fn bhc_implied(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.bhc_implied)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    pub point: Vec<f64>,
    pub active_count: usize,
    pub active_bound: usize,
    /// `|J(u)| <= n - m_1`.
    pub few_active: bool,
    pub cqc: bool,
    /// Every `lambda_i` and active `mu_j` exceeds `tol_mult` in magnitude.
    pub nonzero_multipliers: bool,
    pub nonsingular_bordered: bool,
}

impl AuditRow {
    pub fn all_pass(&self) -> bool {
        self.few_active && self.cqc && self.nonzero_multipliers && self.nonsingular_bordered
    }
}

/// Point-wise surrogates of the genericity conditions at computed critical points.
pub fn genericity_audit(
    instance: &PopInstance,
    points: &[Vec<f64>],
    tol: &Tolerances,
) -> Vec<AuditRow> {
    let model = Model::new(instance);
    let n = instance.nvars();
    let m1 = instance.num_equalities();
    points
        .iter()
        .filter_map(|u| optimality::certify_model(&model, u, tol).ok())
        .map(|r| audit_row(&r, n, m1, tol))
        .collect()
}

fn audit_row(r: &OptimalityReport, n: usize, m1: usize, tol: &Tolerances) -> AuditRow {
    let active = &r.kkt.active_set;
    let mults = r
        .kkt
        .lambda
        .iter()
        .chain(active.iter().map(|&j| &r.kkt.mu[j]));
    AuditRow {
        point: r.kkt.point.clone(),
        active_count: active.len(),
        active_bound: n - m1,
        few_active: active.len() <= n - m1,
        cqc: r.cqc.passed(),
        nonzero_multipliers: mults.clone().all(|m| m.abs() > tol.tol_mult),
        nonsingular_bordered: r.det_nonsingular.passed(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosisCode {
    #[serde(rename = "FINITE_CONVERGENCE_CERTIFIED")]
    FiniteConvergenceCertified,
    #[serde(rename = "FINITE_CONVERGENCE_OBSERVED")]
    FiniteConvergenceObserved,
    #[serde(rename = "NO_FINITE_CONVERGENCE_FOOC")]
    NoFiniteConvergenceFooc,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

impl DiagnosisCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosisCode::FiniteConvergenceCertified => "FINITE_CONVERGENCE_CERTIFIED",
            DiagnosisCode::FiniteConvergenceObserved => "FINITE_CONVERGENCE_OBSERVED",
            DiagnosisCode::NoFiniteConvergenceFooc => "NO_FINITE_CONVERGENCE_FOOC",
            DiagnosisCode::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl std::fmt::Display for DiagnosisCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceDiagnosis {
    pub code: DiagnosisCode,
    pub reasons: Vec<String>,
    pub caveat: Option<String>,
    pub flat_order: Option<u32>,
    pub rows: Vec<HierarchyRow>,
    pub monotone: bool,
    pub minimizers: Vec<MinimizerReport>,
    pub fooc_failures: Vec<usize>,
    pub archimedean: ArchimedeanSearch,
    pub audit: Vec<AuditRow>,
}

/// Mean of `y` when `M_1(y)` is numerically rank one (second singular value at
/// least `PLATEAU_RATIO` below the first), with the spread `sqrt(sigma_2)`.
fn concentrated_mean(y: &MomentSequence) -> Option<(Vec<f64>, f64)> {
    let sv = linalg::numerical_rank(&y.moment_matrix(1), 0.0).singular_values;
    let s2 = sv.get(1).copied().unwrap_or(0.0).max(0.0);
    (s2 * PLATEAU_RATIO <= sv[0]).then(|| (y.mean(), s2.sqrt()))
}

fn examine_point(
    model: &Model,
    source: PointSource,
    order: u32,
    start: &[f64],
    radius: f64,
    tol: &Tolerances,
) -> MinimizerReport {
    let refined = optimality::refine_point(model, start, radius, tol);
    let (report, error) = match optimality::certify_model(model, &refined.point, tol) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    MinimizerReport {
        source,
        order,
        extracted: start.to_vec(),
        objective: model.objective(&refined.point),
        point: refined.point,
        refinement: refined.refinement,
        displacement: refined.displacement,
        report,
        error,
    }
}

/// Run the pipeline and assign a diagnosis code.
pub fn diagnose(instance: &PopInstance, opts: &DiagnosisOptions) -> ConvergenceDiagnosis {
    let orders = opts.orders.unwrap_or_else(|| default_orders(instance));
    let solved = sweep_detailed(instance, orders, opts);
    let rows: Vec<HierarchyRow> = solved.iter().map(|r| r.row.clone()).collect();
    let monotone = is_monotone(&rows);
    let model = Model::new(instance);
    let tol = &opts.tolerances;
    let mut reasons = Vec::new();

    let first_flat = solved.iter().find(|r| r.row.verified_flat);
    let mut minimizers = Vec::new();
    if let Some(r) = first_flat {
        let f = r.flat.as_ref().expect("flat rows carry their result");
        reasons.push(format!(
            "flat truncation at order {} (degree {}, rank {})",
            f.order, f.t, f.rank_truncated.rank
        ));
        for ExtractedPoint { point, .. } in &f.minimizers {
            minimizers.push(examine_point(
                &model,
                PointSource::FlatExtraction,
                f.order,
                point,
                opts.refine_radius,
                tol,
            ));
        }
    } else if let Some(last) = solved.iter().rev().find(|r| r.moments.is_some()) {
        let y = last.moments.as_ref().expect("checked");
        if let Some((mean, spread)) = concentrated_mean(y) {
            let radius = opts.refine_radius.max(spread);
            let m = examine_point(
                &model,
                PointSource::ConcentratedMean,
                y.order(),
                &mean,
                radius,
                tol,
            );
            // Keep the candidate only if its value is consistent with the lower bound.
            let f_k = last.row.sos_value;
            let grad = model.grad_f(&m.point).norm();
            let consistent = m.report.is_some()
                && m.objective >= f_k - VALUE_MISMATCH
                && m.objective - f_k <= radius * (1.0 + grad);
            if consistent {
                reasons.push(format!(
                    "no flat truncation; order-{} moments concentrate near one point (spread {:.2e})",
                    y.order(),
                    spread
                ));
                minimizers.push(m);
            } else {
                reasons
                    .push("no flat truncation; concentrated mean rejected as a candidate".into());
            }
        } else {
            reasons.push("no flat truncation at the solved orders".into());
        }
    } else {
        reasons.push("no relaxation was solved to usable accuracy".into());
    }

    let schedule = opts.arch_schedule.clone().unwrap_or_else(|| {
        let pts: Vec<Vec<f64>> = minimizers.iter().map(|m| m.point.clone()).collect();
        default_schedule(&pts)
    });
    let t_max = relaxation::min_order(instance) + opts.arch_extra_orders;
    let archimedean = find_archimedean_certificate(instance, t_max, &schedule, &opts.sdp);

    let fooc_failures: Vec<usize> = minimizers
        .iter()
        .enumerate()
        .filter(|(_, m)| m.fooc_failed())
        .map(|(i, _)| i)
        .collect();
    let flat = first_flat.is_some();
    let all_bhc = !minimizers.is_empty() && minimizers.iter().all(MinimizerReport::bhc_implied);
    let (code, caveat) = if !fooc_failures.is_empty() {
        reasons.push(format!(
            "FOOC fails at {} candidate minimizer(s)",
            fooc_failures.len()
        ));
        (
            DiagnosisCode::NoFiniteConvergenceFooc,
            Some(ATTAINMENT_CAVEAT.to_string()),
        )
    } else if flat && archimedean.found() && all_bhc {
        reasons.push(
            "archimedean certificate found and CQC, SCC, SOSC hold at every minimizer".into(),
        );
        (DiagnosisCode::FiniteConvergenceCertified, None)
    } else if flat {
        if !archimedean.found() {
            reasons.push("no archimedean certificate found in the schedule".into());
        }
        if !all_bhc {
            reasons.push("CQC, SCC and SOSC are not established at every extracted point".into());
        }
        (DiagnosisCode::FiniteConvergenceObserved, None)
    } else {
        (DiagnosisCode::Inconclusive, None)
    };
    let audit = minimizers
        .iter()
        .filter_map(|m| m.report.as_ref())
        .map(|r| audit_row(r, instance.nvars(), instance.num_equalities(), tol))
        .collect();
    ConvergenceDiagnosis {
        code,
        reasons,
        caveat,
        flat_order: first_flat.map(|r| r.row.order),
        rows,
        monotone,
        minimizers,
        fooc_failures,
        archimedean,
        audit,
    }
}

/// Structure of a sampled instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomSpec {
    pub nvars: usize,
    pub objective_degree: u32,
    /// Degrees of random dense equality constraints.
    pub equality_degrees: Vec<u32>,
    /// Append `|x|^2 - 1 = 0`.
    pub sphere: bool,
    /// Random half-planes `a.x + b >= 0` with `b >= 0`, so the origin side is kept.
    pub linear_inequalities: usize,
}

fn rounded_normal(rng: &mut ChaCha8Rng) -> BigRational {
    let v: f64 = StandardNormal.sample(rng);
    let micro = (v * 1e6).round() as i64;
    BigRational::new(micro.into(), 1_000_000.into())
}

fn random_dense(rng: &mut ChaCha8Rng, n: usize, degree: u32) -> RatPoly {
    let mut p = RatPoly::zero(n);
    for m in Monomial::all_up_to(n, degree) {
        p.add_term(m, rounded_normal(rng));
    }
    p
}

/// Instance with i.i.d. standard normal coefficients rounded to `1e-6`.
pub fn random_instance(seed: u64, spec: &RandomSpec) -> PopInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.nvars;
    let objective = random_dense(&mut rng, n, spec.objective_degree);
    let mut equalities: Vec<RatPoly> = spec
        .equality_degrees
        .iter()
        .map(|&d| random_dense(&mut rng, n, d))
        .collect();
    if spec.sphere {
        let mut s = negative_norm_squared(n);
        s = -&s;
        s.add_term(Monomial::one(n), BigRational::from_integer((-1).into()));
        equalities.push(s);
    }
    let mut inequalities = Vec::new();
    for _ in 0..spec.linear_inequalities {
        let mut g = RatPoly::zero(n);
        for i in 0..n {
            g.add_term(Monomial::var(n, i), rounded_normal(&mut rng));
        }
        let b = rounded_normal(&mut rng);
        g.add_term(
            Monomial::one(n),
            if b < BigRational::from_integer(0.into()) {
                -b
            } else {
                b
            },
        );
        inequalities.push(g);
    }
    PopInstance::with_default_names(
        format!("random-{seed}"),
        objective,
        equalities,
        inequalities,
    )
    .expect("sampled data is consistent")
}

/// Serializable view of an instance.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub name: String,
    pub nvars: usize,
    pub var_names: Vec<String>,
    pub num_equalities: usize,
    pub num_inequalities: usize,
    pub min_order: u32,
    pub source: String,
}

impl InstanceSummary {
    pub fn new(instance: &PopInstance) -> Self {
        InstanceSummary {
            name: instance.name().to_string(),
            nvars: instance.nvars(),
            var_names: instance.var_names().to_vec(),
            num_equalities: instance.num_equalities(),
            num_inequalities: instance.num_inequalities(),
            min_order: relaxation::min_order(instance),
            source: print_pop(instance),
        }
    }
}

/// Top-level document written by `diagnose`.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub schema: &'static str,
    pub instance: InstanceSummary,
    pub options: DiagnosisOptions,
    pub diagnosis: ConvergenceDiagnosis,
}

impl ReportDocument {
    pub fn new(
        instance: &PopInstance,
        options: &DiagnosisOptions,
        diagnosis: ConvergenceDiagnosis,
    ) -> Self {
        ReportDocument {
            schema: REPORT_SCHEMA_ID,
            instance: InstanceSummary::new(instance),
            options: options.clone(),
            diagnosis,
        }
    }
}
