use num_rational::BigRational;

use crate::poly::{PolyTuple, RatPoly};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InstanceError {
    #[error("{m1} equality constraints exceed the {n} variables")]
    TooManyEqualities { m1: usize, n: usize },
    #[error("polynomial has {got} variables, instance has {expected}")]
    Nvars { expected: usize, got: usize },
    #[error("expected {expected} variable names, got {got}")]
    Names { expected: usize, got: usize },
}

/// `min f(x)  s.t.  h_i(x) = 0,  g_j(x) >= 0`, with exact rational data.
#[derive(Debug, Clone, PartialEq)]
pub struct PopInstance {
    name: String,
    var_names: Vec<String>,
    objective: RatPoly,
    equalities: PolyTuple<BigRational>,
    inequalities: PolyTuple<BigRational>,
}

impl PopInstance {
    pub fn new(
        name: impl Into<String>,
        var_names: Vec<String>,
        objective: RatPoly,
        equalities: Vec<RatPoly>,
        inequalities: Vec<RatPoly>,
    ) -> Result<Self, InstanceError> {
        let n = var_names.len();
        if objective.nvars() != n {
            return Err(InstanceError::Nvars {
                expected: n,
                got: objective.nvars(),
            });
        }
        if equalities.len() > n {
            return Err(InstanceError::TooManyEqualities {
                m1: equalities.len(),
                n,
            });
        }
        let wrap = |ps: Vec<RatPoly>| {
            PolyTuple::new(n, ps).map_err(|e| match e {
                crate::poly::PolyError::NvarsMismatch { right, .. } => InstanceError::Nvars {
                    expected: n,
                    got: right,
                },
                _ => unreachable!("PolyTuple::new only reports nvars mismatches"),
            })
        };
        Ok(PopInstance {
            name: name.into(),
            var_names,
            objective,
            equalities: wrap(equalities)?,
            inequalities: wrap(inequalities)?,
        })
    }

    /// Instance with default variable names `x1..xn`.
    pub fn with_default_names(
        name: impl Into<String>,
        objective: RatPoly,
        equalities: Vec<RatPoly>,
        inequalities: Vec<RatPoly>,
    ) -> Result<Self, InstanceError> {
        let n = objective.nvars();
        Self::new(
            name,
            crate::poly::default_names(n),
            objective,
            equalities,
            inequalities,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn nvars(&self) -> usize {
        self.var_names.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn objective(&self) -> &RatPoly {
        &self.objective
    }

    pub fn equalities(&self) -> &PolyTuple<BigRational> {
        &self.equalities
    }

    pub fn inequalities(&self) -> &PolyTuple<BigRational> {
        &self.inequalities
    }

    pub fn num_equalities(&self) -> usize {
        self.equalities.len()
    }

    pub fn num_inequalities(&self) -> usize {
        self.inequalities.len()
    }

    /// Same constraints, different objective.
    pub fn with_objective(&self, objective: RatPoly) -> Self {
        assert_eq!(objective.nvars(), self.nvars());
        PopInstance {
            objective,
            ..self.clone()
        }
    }

    /// Largest violation `max(|h_i(u)|, -g_j(u), 0)`.
    pub fn max_violation(&self, u: &[f64]) -> f64 {
        let eq = self.equalities.iter().map(|h| h.eval_f64(u).abs());
        let ineq = self.inequalities.iter().map(|g| (-g.eval_f64(u)).max(0.0));
        eq.chain(ineq).fold(0.0, f64::max)
    }

    pub fn objective_at(&self, u: &[f64]) -> f64 {
        self.objective.eval_f64(u)
    }

    /// Largest total degree among objective and constraints.
    pub fn max_degree(&self) -> u32 {
        std::iter::once(&self.objective)
            .chain(self.equalities.iter())
            .chain(self.inequalities.iter())
            .filter_map(|p| p.degree())
            .max()
            .unwrap_or(0)
    }

    /// `max(1, ceil(deg h_i / 2), ceil(deg g_j / 2))`.
    pub fn constraint_half_degree(&self) -> u32 {
        self.equalities
            .iter()
            .chain(self.inequalities.iter())
            .filter_map(|p| p.degree())
            .map(|d| d.div_ceil(2))
            .fold(1, u32::max)
    }
}
