//! Order-k moment relaxation of a polynomial optimization problem and the
//! recovery of its sum-of-squares certificate.
//!
//! The moment side has the moment matrix `M_k(y)`, one localizing matrix per
//! inequality, and linear equations `L_y(x^a h_i) = 0`, `y_0 = 1`. It is handed
//! to [`crate::sdp`] in that solver's dual (LMI) form after eliminating the
//! linear equations: `y = y_p + N z` with `N` an orthonormal null-space basis.
//! The solver's primal variables are then Gram matrices of the SOS multipliers.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::io::PopInstance;
use crate::linalg::{self, numerical_rank};
use crate::poly::{FloatPoly, Monomial, RatPoly};
use crate::sdp::{Constraint, SdpProblem, SdpSolution, SdpStatus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelaxationError {
    #[error("relaxation order {order} is below the minimum admissible order {min}")]
    OrderTooSmall { order: u32, min: u32 },
    #[error("the linear moment constraints are inconsistent (residual {0:.3e})")]
    InconsistentEqualities(f64),
}

/// Monomials of degree at most `max_degree` in grevlex order, with an inverse index.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    nvars: usize,
    max_degree: u32,
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

impl MonomialBasis {
    pub fn up_to(nvars: usize, max_degree: u32) -> Self {
        let monomials = Monomial::all_up_to(nvars, max_degree);
        let index = monomials
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();
        MonomialBasis {
            nvars,
            max_degree,
            monomials,
            index,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn get(&self, i: usize) -> &Monomial {
        &self.monomials[i]
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Monomial> {
        self.monomials.iter()
    }

    /// Number of basis elements of degree at most `d`; a prefix by grading.
    pub fn prefix_len(&self, d: u32) -> usize {
        self.monomials
            .iter()
            .take_while(|m| m.degree() <= d)
            .count()
    }

    /// Coefficient vector of `p` in this basis.
    pub fn coefficients(&self, p: &FloatPoly) -> DVector<f64> {
        let mut v = DVector::zeros(self.len());
        for (m, c) in p.terms() {
            let i = self.index_of(m).expect("polynomial degree exceeds basis");
            v[i] = *c;
        }
        v
    }
}

/// Sparse linear form `sum c_i y_i` over moment indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearForm {
    pub terms: Vec<(usize, f64)>,
}

impl LinearForm {
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * y[i]).sum()
    }
}

/// Moment matrix (`generator == None`) or localizing matrix of `g_j`.
#[derive(Debug, Clone)]
pub struct MomentBlock {
    pub generator: Option<usize>,
    /// Degree bound of the row/column monomials.
    pub basis_degree: u32,
    pub order: usize,
    /// Row-major, full symmetric layout.
    entries: Vec<LinearForm>,
}

impl MomentBlock {
    pub fn entry(&self, i: usize, j: usize) -> &LinearForm {
        &self.entries[i * self.order + j]
    }

    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.order, self.order, |i, j| self.entry(i, j).eval(y))
    }
}

#[derive(Debug, Clone)]
pub struct MomentRelaxation {
    pub order: u32,
    pub nvars: usize,
    /// Index set of the moment vector (degree <= 2k).
    pub moments: MonomialBasis,
    pub blocks: Vec<MomentBlock>,
    /// Rows `(form, rhs)`; the first is `y_0 = 1`, the rest `L_y(x^a h_i) = 0`.
    pub equalities: Vec<(LinearForm, f64)>,
    /// `c` with `c . y = L_y(f)`.
    pub objective: DVector<f64>,
    objective_poly: FloatPoly,
    equality_polys: Vec<FloatPoly>,
    inequality_polys: Vec<FloatPoly>,
}

/// Smallest admissible relaxation order.
pub fn min_order(instance: &PopInstance) -> u32 {
    std::iter::once(instance.objective())
        .chain(instance.equalities().iter())
        .chain(instance.inequalities().iter())
        .filter_map(|p| p.degree())
        .map(|d| d.div_ceil(2))
        .fold(1, u32::max)
}

fn linear_form_of(p: &FloatPoly, moments: &MonomialBasis) -> LinearForm {
    LinearForm {
        terms: p
            .terms()
            .map(|(m, c)| (moments.index_of(m).expect("degree within relaxation"), *c))
            .collect(),
    }
}

/// Build the order-`k` relaxation.
pub fn build(instance: &PopInstance, order: u32) -> Result<MomentRelaxation, RelaxationError> {
    let min = min_order(instance);
    if order < min {
        return Err(RelaxationError::OrderTooSmall { order, min });
    }
    let n = instance.nvars();
    let moments = MonomialBasis::up_to(n, 2 * order);
    let mut blocks = Vec::new();

    let mut push_block = |generator: Option<usize>, weight: &FloatPoly, d: u32| {
        let basis = MonomialBasis::up_to(n, d);
        let s = basis.len();
        let mut entries = Vec::with_capacity(s * s);
        for a in basis.iter() {
            for b in basis.iter() {
                entries.push(linear_form_of(&weight.shift(&a.mul(b)), &moments));
            }
        }
        blocks.push(MomentBlock {
            generator,
            basis_degree: d,
            order: s,
            entries,
        });
    };
    push_block(None, &FloatPoly::constant(n, 1.0), order);
    let inequality_polys: Vec<FloatPoly> = instance
        .inequalities()
        .iter()
        .map(RatPoly::to_float)
        .collect();
    for (j, g) in instance.inequalities().iter().enumerate() {
        let dg = g.degree().unwrap_or(0).div_ceil(2);
        push_block(Some(j), &inequality_polys[j], order - dg);
    }

    // Ideal rows, deduplicated on their exact normalized form.
    let mut seen: BTreeMap<Vec<(usize, BigRational)>, ()> = BTreeMap::new();
    let mut equalities = vec![(
        LinearForm {
            terms: vec![(0, 1.0)],
        },
        1.0,
    )];
    for h in instance.equalities().iter() {
        let Some(dh) = h.degree() else { continue };
        for a in Monomial::all_up_to(n, 2 * order - dh.min(2 * order)) {
            if a.degree() + dh > 2 * order {
                continue;
            }
            let row = h.shift(&a);
            let lead = row
                .terms()
                .next_back()
                .map(|(_, c)| c.clone())
                .expect("nonzero row");
            let key: Vec<(usize, BigRational)> = row
                .terms()
                .map(|(m, c)| (moments.index_of(m).expect("within degree"), c / &lead))
                .collect();
            if seen.insert(key, ()).is_some() {
                continue;
            }
            equalities.push((linear_form_of(&row.to_float(), &moments), 0.0));
        }
    }

    let objective_poly = instance.objective().to_float();
    let objective = moments.coefficients(&objective_poly);
    Ok(MomentRelaxation {
        order,
        nvars: n,
        moments,
        blocks,
        equalities,
        objective,
        objective_poly,
        equality_polys: instance
            .equalities()
            .iter()
            .map(RatPoly::to_float)
            .collect(),
        inequality_polys,
    })
}

/// The relaxation as a standard-form SDP plus the data to map solutions back.
#[derive(Debug, Clone)]
pub struct SdpEmbedding {
    pub problem: SdpProblem,
    /// Particular solution of the linear moment equations.
    pub y_particular: DVector<f64>,
    /// Orthonormal basis of their null space; `y = y_p + N z`.
    pub null_basis: DMatrix<f64>,
    /// Per block, orthonormal columns spanning the complement of the common
    /// kernel of every feasible block value. Reduced blocks are `Q^T B Q`.
    pub block_ranges: Vec<DMatrix<f64>>,
}

impl MomentRelaxation {
    pub fn num_moments(&self) -> usize {
        self.moments.len()
    }

    pub fn moment_block(&self) -> &MomentBlock {
        &self.blocks[0]
    }

    pub fn objective_poly(&self) -> &FloatPoly {
        &self.objective_poly
    }

    pub fn equality_matrix(&self) -> (DMatrix<f64>, DVector<f64>) {
        let rows = self.equalities.len();
        let mut e = DMatrix::zeros(rows, self.num_moments());
        let mut rhs = DVector::zeros(rows);
        for (r, (form, b)) in self.equalities.iter().enumerate() {
            for &(i, c) in &form.terms {
                e[(r, i)] += c;
            }
            rhs[r] = *b;
        }
        (e, rhs)
    }

    /// Reduce to a standard-form SDP.
    pub fn to_sdp(&self) -> Result<SdpEmbedding, RelaxationError> {
        let (e, rhs) = self.equality_matrix();
        let particular = linalg::lstsq(&e, &rhs).expect("shapes agree");
        let consistency = (&e * &particular.x - &rhs).norm();
        if consistency > 1e-8 * (1.0 + rhs.norm()) {
            return Err(RelaxationError::InconsistentEqualities(consistency));
        }
        let y_p = particular.x;
        let null_basis = numerical_rank(&e, 1e-10).null_basis;
        let nz = null_basis.ncols();

        let mut block_sizes = Vec::new();
        let mut c_blocks = Vec::new();
        let mut block_ranges = Vec::new();
        let mut a_parts: Vec<Vec<(usize, DMatrix<f64>)>> = vec![Vec::new(); nz];
        for (k, block) in self.blocks.iter().enumerate() {
            let b0 = block.evaluate(y_p.as_slice());
            let bi: Vec<DMatrix<f64>> = (0..nz)
                .map(|i| block.evaluate(null_basis.column(i).as_slice()))
                .collect();
            let mut gram = &b0 * &b0;
            for b in &bi {
                gram += b * b;
            }
            let eig =
                linalg::eig_sym(&linalg::SymMatrix::symmetrized(&gram)).expect("finite block data");
            let top = eig.values.iter().copied().fold(0.0, f64::max);
            let keep: Vec<usize> = (0..block.order)
                .filter(|&i| eig.values[i] > 1e-18 * top.max(1e-300))
                .collect();
            let q = eig.vectors.select_columns(&keep);
            let qt = q.transpose();
            block_sizes.push(q.ncols());
            c_blocks.push(&qt * &b0 * &q);
            for (i, b) in bi.iter().enumerate() {
                let reduced = -(&qt * b * &q);
                if reduced.iter().any(|v| *v != 0.0) {
                    a_parts[i].push((k, reduced));
                }
            }
            block_ranges.push(q);
        }
        let b = -(null_basis.transpose() * &self.objective);
        let constraints = a_parts
            .into_iter()
            .map(|parts| Constraint { parts })
            .collect();
        Ok(SdpEmbedding {
            problem: SdpProblem {
                block_sizes,
                c: c_blocks,
                constraints,
                b,
            },
            y_particular: y_p,
            null_basis,
            block_ranges,
        })
    }
}

impl SdpEmbedding {
    /// Moment vector `y = y_p + N z` from the solver's dual variables.
    pub fn moments(&self, solution: &SdpSolution) -> DVector<f64> {
        &self.y_particular + &self.null_basis * &solution.y
    }

    /// `c . y` at the solver's dual point.
    pub fn moment_value(&self, relaxation: &MomentRelaxation, solution: &SdpSolution) -> f64 {
        relaxation.objective.dot(&self.moments(solution))
    }

    /// SOS lower bound from the solver's primal point.
    pub fn sos_value(&self, relaxation: &MomentRelaxation, solution: &SdpSolution) -> f64 {
        relaxation.objective.dot(&self.y_particular) - solution.primal_objective
    }

    /// Gram matrices in the full monomial bases.
    pub fn grams(&self, solution: &SdpSolution) -> Vec<DMatrix<f64>> {
        self.block_ranges
            .iter()
            .zip(&solution.x)
            .map(|(q, x)| q * x * q.transpose())
            .collect()
    }
}

/// SOS data `f - gamma = sum phi_i h_i + sigma_0 + sum sigma_j g_j`.
#[derive(Debug, Clone, Serialize)]
pub struct SosCertificate {
    pub gamma: f64,
    #[serde(skip)]
    pub grams: Vec<DMatrix<f64>>,
    #[serde(skip)]
    pub ideal_multipliers: Vec<FloatPoly>,
    /// Coefficient-vector 2-norm of the identity's left-over.
    pub identity_residual: f64,
    pub status: SdpStatus,
}

/// `sum_j g_j(x) v_j(x)^T G_j v_j(x)` for Gram matrices in the relaxation bases.
pub fn weighted_sos(relaxation: &MomentRelaxation, grams: &[DMatrix<f64>]) -> FloatPoly {
    let n = relaxation.nvars;
    let mut s = FloatPoly::zero(n);
    for (block, g) in relaxation.blocks.iter().zip(grams) {
        let basis = MonomialBasis::up_to(n, block.basis_degree);
        let mut quad = FloatPoly::zero(n);
        for a in 0..basis.len() {
            for b in 0..basis.len() {
                let c = g[(a, b)];
                if c != 0.0 {
                    quad.add_term(basis.get(a).mul(basis.get(b)), c);
                }
            }
        }
        let weight = match block.generator {
            None => FloatPoly::constant(n, 1.0),
            Some(j) => relaxation.inequality_polys[j].clone(),
        };
        s = &s + &(&weight * &quad);
    }
    s
}

/// Fit ideal multipliers to `r` and report the left-over norm.
pub fn fit_ideal_part(relaxation: &MomentRelaxation, r: &FloatPoly) -> (Vec<FloatPoly>, f64) {
    let n = relaxation.nvars;
    let mut columns: Vec<(usize, Monomial, DVector<f64>)> = Vec::new();
    for (i, h) in relaxation.equality_polys.iter().enumerate() {
        let Some(dh) = h.degree() else { continue };
        if dh > 2 * relaxation.order {
            continue;
        }
        for a in Monomial::all_up_to(n, 2 * relaxation.order - dh) {
            let col = relaxation.moments.coefficients(&h.shift(&a));
            columns.push((i, a, col));
        }
    }
    let target = relaxation.moments.coefficients(r);
    let mut phis = vec![FloatPoly::zero(n); relaxation.equality_polys.len()];
    if columns.is_empty() {
        return (phis, target.norm());
    }
    let mut a = DMatrix::zeros(target.len(), columns.len());
    for (j, (_, _, col)) in columns.iter().enumerate() {
        a.set_column(j, col);
    }
    let sol = linalg::lstsq(&a, &target).expect("shapes agree");
    for (j, (i, m, _)) in columns.into_iter().enumerate() {
        phis[i].add_term(m, sol.x[j]);
    }
    (phis, sol.residual)
}

/// Reconstruct the SOS certificate of an order-k relaxation from a solve.
pub fn sos_value_from_dual(
    relaxation: &MomentRelaxation,
    embedding: &SdpEmbedding,
    solution: &SdpSolution,
) -> SosCertificate {
    let gamma = embedding.sos_value(relaxation, solution);
    let grams = embedding.grams(solution);
    let s = weighted_sos(relaxation, &grams);
    let n = relaxation.nvars;
    let r = &(&relaxation.objective_poly - &FloatPoly::constant(n, gamma)) - &s;
    let (ideal_multipliers, identity_residual) = fit_ideal_part(relaxation, &r);
    SosCertificate {
        gamma,
        grams,
        ideal_multipliers,
        identity_residual,
        status: solution.status,
    }
}

/// Moments `y_a = u^a` of the Dirac measure at `u`.
pub fn dirac_moments(moments: &MonomialBasis, u: &[f64]) -> DVector<f64> {
    DVector::from_iterator(moments.len(), moments.iter().map(|m| m.eval_f64(u)))
}
