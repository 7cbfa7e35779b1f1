//! Sparse multivariate polynomials over `f64` with exact term-wise calculus.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One term `coeff * x_1^e_1 * ... * x_n^e_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub exps: Vec<u32>,
}

impl Monomial {
    pub fn new(coeff: f64, exps: Vec<u32>) -> Self {
        Self { coeff, exps }
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.coeff;
        for (&xi, &e) in x.iter().zip(&self.exps) {
            match e {
                0 => {}
                1 => v *= xi,
                2 => v *= xi * xi,
                _ => v *= xi.powi(e as i32),
            }
        }
        v
    }
}

/// A polynomial in a fixed number of variables.
///
/// Terms are kept in canonical order (lexicographic on exponents) with like
/// terms merged, so two polynomials built from the same data compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    /// Builds a polynomial, validating exponent lengths and coefficients.
    pub fn new(nvars: usize, terms: Vec<Monomial>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if t.exps.len() != nvars {
                return Err(Error::InvalidInput(format!(
                    "term {i} has {} exponents, expected {nvars}",
                    t.exps.len()
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidInput(format!("term {i} has a non-finite coefficient")));
            }
        }
        Ok(Self::from_terms_unchecked(nvars, terms))
    }

    fn from_terms_unchecked(nvars: usize, terms: Vec<Monomial>) -> Self {
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in terms {
            *merged.entry(t.exps).or_insert(0.0) += t.coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(exps, coeff)| Monomial { coeff, exps })
            .collect();
        Self { nvars, terms }
    }

    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_terms_unchecked(nvars, vec![Monomial::new(c, vec![0; nvars])])
    }

    /// `c * x_i`.
    pub fn linear(nvars: usize, i: usize, c: f64) -> Self {
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        Self::from_terms_unchecked(nvars, vec![Monomial::new(c, exps)])
    }

    /// Single monomial `c * x^exps`; panics if `exps.len() != nvars`.
    pub fn monomial(c: f64, exps: &[u32]) -> Self {
        Self::from_terms_unchecked(exps.len(), vec![Monomial::new(c, exps.to_vec())])
    }

    /// Sum of `c * x_i * x_j` terms; `i == j` gives a square.
    pub fn quadratic(nvars: usize, entries: &[(f64, usize, usize)]) -> Self {
        let terms = entries
            .iter()
            .map(|&(c, i, j)| {
                let mut exps = vec![0; nvars];
                exps[i] += 1;
                exps[j] += 1;
                Monomial::new(c, exps)
            })
            .collect();
        Self::from_terms_unchecked(nvars, terms)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.coeff.abs()))
    }

    /// True when every coefficient is at most `tol` in magnitude.
    pub fn is_zero_within(&self, tol: f64) -> bool {
        self.max_abs_coeff() <= tol
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Exact partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exps[i] > 0)
            .map(|t| {
                let mut exps = t.exps.clone();
                let e = exps[i];
                exps[i] = e - 1;
                Monomial::new(t.coeff * f64::from(e), exps)
            })
            .collect();
        Self::from_terms_unchecked(self.nvars, terms)
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.nvars).map(|i| self.partial(i)).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Self::from_terms_unchecked(self.nvars, terms)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Monomial::new(t.coeff * c, t.exps.clone()))
            .collect();
        Self::from_terms_unchecked(self.nvars, terms)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let exps = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                terms.push(Monomial::new(a.coeff * b.coeff, exps));
            }
        }
        Self::from_terms_unchecked(self.nvars, terms)
    }

    /// Lie derivative `sum_i dP/dx_i * X_i` along a polynomial field.
    pub fn derivative_along(&self, components: &[Polynomial]) -> Self {
        assert_eq!(components.len(), self.nvars, "field dimension mismatch");
        components
            .iter()
            .enumerate()
            .fold(Self::zero(self.nvars), |acc, (i, xi)| acc.add(&self.partial(i).mul(xi)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, terms: &[(f64, &[u32])]) -> Polynomial {
        Polynomial::new(n, terms.iter().map(|(c, e)| Monomial::new(*c, e.to_vec())).collect()).unwrap()
    }

    #[test]
    fn like_terms_merge_and_cancel() {
        let a = p(2, &[(1.0, &[1, 0]), (2.0, &[0, 1]), (-1.0, &[1, 0])]);
        assert_eq!(a.terms().len(), 1);
        assert_eq!(a.terms()[0].exps, vec![0, 1]);
    }

    #[test]
    fn rejects_wrong_exponent_length() {
        let err = Polynomial::new(3, vec![Monomial::new(1.0, vec![1, 0])]);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_nan_coefficient() {
        assert!(Polynomial::new(1, vec![Monomial::new(f64::NAN, vec![1])]).is_err());
    }

    #[test]
    fn partials_of_cubic() {
        // x^2 y + 3 y^3
        let q = p(2, &[(1.0, &[2, 1]), (3.0, &[0, 3])]);
        let dx = q.partial(0);
        let dy = q.partial(1);
        assert_eq!(dx, p(2, &[(2.0, &[1, 1])]));
        assert_eq!(dy, p(2, &[(1.0, &[2, 0]), (9.0, &[0, 2])]));
        assert_eq!(q.eval(&[2.0, -1.0]), -4.0 - 3.0);
    }

    #[test]
    fn product_expands() {
        // (x + y)(x - y) = x^2 - y^2
        let a = p(2, &[(1.0, &[1, 0]), (1.0, &[0, 1])]);
        let b = p(2, &[(1.0, &[1, 0]), (-1.0, &[0, 1])]);
        assert_eq!(a.mul(&b), p(2, &[(1.0, &[2, 0]), (-1.0, &[0, 2])]));
    }

    #[test]
    fn angular_momentum_is_conserved_by_rotation() {
        // x' = -y, y' = x conserves x^2 + y^2
        let field = vec![p(2, &[(-1.0, &[0, 1])]), p(2, &[(1.0, &[1, 0])])];
        let r2 = Polynomial::quadratic(2, &[(1.0, 0, 0), (1.0, 1, 1)]);
        assert!(r2.derivative_along(&field).is_zero());
    }
}
