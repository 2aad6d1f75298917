//! Sparse multivariate polynomials over exact rationals or binary64.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], whose `Ord` is the
//! graded reverse lexicographic order with `x1 > x2 > ... > xn`. Iteration
//! therefore walks terms from the constant upward, and every basis or index
//! derived from a polynomial is reproducible.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
pub use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("variable count mismatch: {left} vs {right}")]
    NvarsMismatch { left: usize, right: usize },
    #[error("operation is undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("point has {got} coordinates, polynomial has {expected} variables")]
    PointDimension { expected: usize, got: usize },
}

/// Coefficient field. Implemented for `BigRational` (exact) and `f64`.
pub trait Coeff:
    Clone
    + PartialEq
    + fmt::Debug
    + Num
    + Neg<Output = Self>
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    fn is_negative_coeff(&self) -> bool;
    fn abs_coeff(&self) -> Self;
    /// Literal for the absolute value, in a form the `.pop` parser reads back
    /// exactly.
    fn literal(&self) -> String;
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Coeff for f64 {
    fn is_negative_coeff(&self) -> bool {
        *self < 0.0
    }
    fn abs_coeff(&self) -> Self {
        self.abs()
    }
    fn literal(&self) -> String {
        let a = self.abs();
        if a.fract() == 0.0 && a < 1e15 {
            format!("{}", a as u64)
        } else {
            // Shortest round-trip representation.
            let s = format!("{a:?}");
            if s.contains('e') {
                // The grammar has no exponent notation; fall back to the exact
                // binary expansion as a rational.
                rational_literal(&BigRational::from_float(a).unwrap_or_else(BigRational::zero))
            } else {
                s
            }
        }
    }
}

impl Coeff for BigRational {
    fn is_negative_coeff(&self) -> bool {
        self.is_negative()
    }
    fn abs_coeff(&self) -> Self {
        self.abs()
    }
    fn literal(&self) -> String {
        rational_literal(&self.abs())
    }
}

/// Decimal when the denominator is of the form 2^a 5^b, `p/q` otherwise.
fn rational_literal(r: &BigRational) -> String {
    let numer = r.numer().clone();
    let denom = r.denom().clone();
    if denom.is_one() {
        return numer.to_string();
    }
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let mut d = denom.clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    while d.is_even() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{numer}/{denom}");
    }
    let digits = twos.max(fives);
    let scale = num_traits::pow(BigInt::from(10u32), digits as usize);
    let scaled = numer * (&scale / &denom);
    let (int, frac) = scaled.div_rem(&scale);
    let frac = frac.to_string();
    let padded = format!("{}{}", "0".repeat(digits as usize - frac.len()), frac);
    format!("{int}.{padded}")
}

/// Exponent vector of a monomial, one entry per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.nvars(), other.nvars());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `Some(self / other)` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Monomial)
    }

    pub fn eval_f64(&self, u: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(u)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }

    fn eval<C: Coeff>(&self, u: &[C]) -> C {
        let mut acc = C::one();
        for (&e, x) in self.0.iter().zip(u) {
            for _ in 0..e {
                acc = acc * x.clone();
            }
        }
        acc
    }

    /// All monomials in `nvars` variables of total degree at most `max_degree`,
    /// in ascending grevlex order.
    pub fn all_up_to(nvars: usize, max_degree: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        for d in 0..=max_degree {
            let mut layer = Vec::new();
            let mut cur = vec![0u32; nvars];
            compositions(nvars, d, 0, &mut cur, &mut layer);
            layer.sort();
            out.extend(layer);
        }
        out
    }
}

fn compositions(
    nvars: usize,
    remaining: u32,
    pos: usize,
    cur: &mut Vec<u32>,
    out: &mut Vec<Monomial>,
) {
    if nvars == 0 {
        if remaining == 0 {
            out.push(Monomial(Vec::new()));
        }
        return;
    }
    if pos == nvars - 1 {
        cur[pos] = remaining;
        out.push(Monomial(cur.clone()));
        cur[pos] = 0;
        return;
    }
    for e in 0..=remaining {
        cur[pos] = e;
        compositions(nvars, remaining - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.nvars()
            .cmp(&other.nvars())
            .then_with(|| self.degree().cmp(&other.degree()))
            .then_with(|| {
                for (a, b) in self.0.iter().zip(&other.0).rev() {
                    if a != b {
                        // Smaller power of the trailing variable ranks higher.
                        return b.cmp(a);
                    }
                }
                Ordering::Equal
            })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<C: Coeff> {
    nvars: usize,
    terms: BTreeMap<Monomial, C>,
}

pub type RatPoly = Polynomial<BigRational>;
pub type FloatPoly = Polynomial<f64>;

impl<C: Coeff> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        Self::monomial(Monomial::one(nvars), c)
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        Self::monomial(Monomial::var(nvars, i), C::one())
    }

    pub fn monomial(m: Monomial, c: C) -> Self {
        let mut p = Self::zero(m.nvars());
        p.add_term(m, c);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` stands for the zero polynomial's degree of −∞.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Terms in ascending grevlex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&Monomial::one(self.nvars))
    }

    pub fn add_term(&mut self, m: Monomial, c: C) {
        assert_eq!(m.nvars(), self.nvars, "monomial length differs from nvars");
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(Monomial::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    fn check(&self, other: &Self) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::NvarsMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check(other)?;
        let mut out = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: &C) -> Self {
        if s.is_zero() {
            return Self::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.clone() * s.clone()))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(self.nvars, C::one());
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Multiply by a single monomial.
    pub fn shift(&self, m: &Monomial) -> Self {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.mul(m), c.clone()))
                .collect(),
        }
    }

    pub fn eval(&self, u: &[C]) -> Result<C, PolyError> {
        if u.len() != self.nvars {
            return Err(PolyError::PointDimension {
                expected: self.nvars,
                got: u.len(),
            });
        }
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            acc = acc + c.clone() * m.eval(u);
        }
        Ok(acc)
    }

    /// Floating-point evaluation regardless of the coefficient field.
    pub fn eval_f64(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.nvars, "point dimension mismatch");
        self.terms
            .iter()
            .map(|(m, c)| c.to_f64_lossy() * m.eval_f64(u))
            .sum()
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut d = m.0.clone();
            d[i] -= 1;
            let factor = C::from_u32(e).expect("exponent fits the coefficient field");
            out.add_term(Monomial(d), c.clone() * factor);
        }
        out
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.nvars).map(|i| self.partial(i)).collect()
    }

    pub fn hessian(&self) -> Vec<Vec<Self>> {
        let grad = self.gradient();
        (0..self.nvars)
            .map(|i| (0..self.nvars).map(|j| grad[i].partial(j)).collect())
            .collect()
    }

    /// `x0^d p(x / x0)` with `x0` inserted as variable 0.
    pub fn homogenize(&self) -> Result<Self, PolyError> {
        let d = self.degree().ok_or(PolyError::ZeroPolynomial)?;
        let mut out = Self::zero(self.nvars + 1);
        for (m, c) in &self.terms {
            let mut e = Vec::with_capacity(self.nvars + 1);
            e.push(d - m.degree());
            e.extend_from_slice(&m.0);
            out.add_term(Monomial(e), c.clone());
        }
        Ok(out)
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        Polynomial::from_terms(
            self.nvars,
            self.terms.iter().map(|(m, c)| (m.clone(), f(c))),
        )
    }

    pub fn to_float(&self) -> FloatPoly {
        self.map_coeffs(Coeff::to_f64_lossy)
    }

    /// Human-readable form, leading term first, e.g. `x1^2 - 1`.
    pub fn format_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative_coeff();
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let abs = c.abs_coeff();
            let mono = format_monomial(m, names);
            if mono.is_empty() {
                out.push_str(&abs.literal());
            } else if abs.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&abs.literal());
                out.push('*');
                out.push_str(&mono);
            }
        }
        out
    }
}

impl RatPoly {
    pub fn from_float(p: &FloatPoly) -> RatPoly {
        p.map_coeffs(|c| BigRational::from_float(*c).unwrap_or_else(BigRational::zero))
    }
}

fn format_monomial(m: &Monomial, names: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.0.iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(names[i].clone()),
            _ => parts.push(format!("{}^{}", names[i], e)),
        }
    }
    parts.join("*")
}

pub fn default_names(nvars: usize) -> Vec<String> {
    (1..=nvars).map(|i| format!("x{i}")).collect()
}

impl<C: Coeff> fmt::Display for Polynomial<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_with(&default_names(self.nvars)))
    }
}

impl<C: Coeff> Add for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, rhs: Self) -> Polynomial<C> {
        self.try_add(rhs)
            .expect("nvars mismatch in polynomial addition")
    }
}

impl<C: Coeff> Sub for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn sub(self, rhs: Self) -> Polynomial<C> {
        self.try_sub(rhs)
            .expect("nvars mismatch in polynomial subtraction")
    }
}

impl<C: Coeff> Mul for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn mul(self, rhs: Self) -> Polynomial<C> {
        self.try_mul(rhs)
            .expect("nvars mismatch in polynomial product")
    }
}

impl<C: Coeff> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn neg(self) -> Polynomial<C> {
        self.scale(&-C::one())
    }
}

/// Ordered tuple of polynomials sharing a variable count.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTuple<C: Coeff> {
    nvars: usize,
    entries: Vec<Polynomial<C>>,
}

impl<C: Coeff> PolyTuple<C> {
    pub fn new(nvars: usize, entries: Vec<Polynomial<C>>) -> Result<Self, PolyError> {
        for p in &entries {
            if p.nvars() != nvars {
                return Err(PolyError::NvarsMismatch {
                    left: nvars,
                    right: p.nvars(),
                });
            }
        }
        Ok(PolyTuple { nvars, entries })
    }

    pub fn empty(nvars: usize) -> Self {
        PolyTuple {
            nvars,
            entries: Vec::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Polynomial<C>> {
        self.entries.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Polynomial<C>> {
        self.entries.get(i)
    }

    pub fn push(&mut self, p: Polynomial<C>) -> Result<(), PolyError> {
        if p.nvars() != self.nvars {
            return Err(PolyError::NvarsMismatch {
                left: self.nvars,
                right: p.nvars(),
            });
        }
        self.entries.push(p);
        Ok(())
    }

    pub fn as_slice(&self) -> &[Polynomial<C>] {
        &self.entries
    }

    pub fn to_float(&self) -> PolyTuple<f64> {
        PolyTuple {
            nvars: self.nvars,
            entries: self.entries.iter().map(Polynomial::to_float).collect(),
        }
    }
}

impl<'a, C: Coeff> IntoIterator for &'a PolyTuple<C> {
    type Item = &'a Polynomial<C>;
    type IntoIter = std::slice::Iter<'a, Polynomial<C>>;
    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
