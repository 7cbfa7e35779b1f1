//! Polynomial dynamical systems, their conserved quantities, and the built-in
//! controlled rigid body and Clebsch systems.

mod clebsch;
pub mod polynomial;
mod rigid_body;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Matrix, StateVector};
pub use clebsch::{build_clebsch, ClebschParams};
pub use polynomial::{Monomial, Polynomial};
pub use rigid_body::{build_rigid_body, verify_poisson_realization, RealizationReport, RigidBodyParams};

/// Coefficient tolerance for the symbolic conservation check.
pub const CONSERVATION_TOL: f64 = 1e-12;

/// Right-hand side `x' = X(x)` with polynomial components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<Polynomial>,
    // jacobian[i][j] = d X_i / d x_j
    jacobian: Vec<Vec<Polynomial>>,
}

impl VectorField {
    pub fn new(components: Vec<Polynomial>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::InvalidInput("vector field must have dimension >= 1".into()));
        }
        if let Some(i) = components.iter().position(|c| c.nvars() != n) {
            return Err(Error::InvalidInput(format!(
                "component {i} has {} variables, expected {n}",
                components[i].nvars()
            )));
        }
        let jacobian = components.iter().map(Polynomial::gradient).collect();
        Ok(Self { components, jacobian })
    }

    /// Linear field `x' = A x`.
    pub fn linear(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput("linear field needs a square matrix".into()));
        }
        let n = a.nrows();
        let comps = (0..n)
            .map(|i| {
                (0..n).fold(Polynomial::zero(n), |acc, j| acc.add(&Polynomial::linear(n, j, a[(i, j)])))
            })
            .collect();
        Self::new(comps)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub(crate) fn jacobian_polys(&self) -> &[Vec<Polynomial>] {
        &self.jacobian
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(x);
        }
    }

    pub fn eval(&self, x: &[f64]) -> StateVector {
        StateVector::from_iterator(self.dim(), self.components.iter().map(|c| c.eval(x)))
    }

    /// The field `-X`, used for backward-time integration.
    pub fn negated(&self) -> Self {
        Self::new(self.components.iter().map(|c| c.scale(-1.0)).collect())
            .expect("negation preserves shape")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Constraint,
    Integral,
}

/// A scalar polynomial constant along the flow of some field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedQuantity {
    name: String,
    polynomial: Polynomial,
    role: Role,
    gradient: Vec<Polynomial>,
    // upper triangle only: hessian[i][j - i]
    hessian: Vec<Vec<Polynomial>>,
}

impl ConservedQuantity {
    pub fn new(name: impl Into<String>, polynomial: Polynomial, role: Role) -> Self {
        let gradient = polynomial.gradient();
        let n = polynomial.nvars();
        let hessian = (0..n)
            .map(|i| (i..n).map(|j| gradient[i].partial(j)).collect())
            .collect();
        Self { name: name.into(), polynomial, role, gradient, hessian }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.polynomial
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.polynomial.eval(x)
    }

    pub(crate) fn gradient_polys(&self) -> &[Polynomial] {
        &self.gradient
    }

    pub(crate) fn hessian_entry(&self, i: usize, j: usize) -> &Polynomial {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        &self.hessian[a][b - a]
    }

    /// The polynomial `grad Q . X`, expanded.
    pub fn derivative_along(&self, field: &VectorField) -> Polynomial {
        self.polynomial.derivative_along(field.components())
    }

    /// Fails unless `grad Q . X` vanishes coefficient-wise within `tol`.
    pub fn check_conserved(&self, field: &VectorField, tol: f64) -> Result<()> {
        if self.polynomial.nvars() != field.dim() {
            return Err(Error::InvalidInput(format!(
                "quantity `{}` has {} variables, field has dimension {}",
                self.name,
                self.polynomial.nvars(),
                field.dim()
            )));
        }
        let residual = self.derivative_along(field).max_abs_coeff();
        if residual > tol {
            return Err(Error::NotConserved { name: self.name.clone(), residual });
        }
        Ok(())
    }
}

/// A one-parameter family of equilibria `M * direction`, `M != 0`, with an
/// optional integral adapted to the family.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumFamily {
    pub direction: Vec<f64>,
    pub integral: Option<ConservedQuantity>,
}

impl EquilibriumFamily {
    pub fn axis(n: usize, i: usize) -> Self {
        let mut direction = vec![0.0; n];
        direction[i] = 1.0;
        Self { direction, integral: None }
    }

    pub fn point(&self, m: f64) -> Result<StateVector> {
        if m == 0.0 || !m.is_finite() {
            return Err(Error::InvalidInput("M must be nonzero".into()));
        }
        Ok(StateVector::from_iterator(self.direction.len(), self.direction.iter().map(|d| d * m)))
    }
}

/// A system with its constraint map `C = (C_1, ..., C_k)`, a distinguished
/// integral `I`, parameters and named equilibrium families.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemBundle {
    pub name: String,
    pub system: VectorField,
    pub constraints: Vec<ConservedQuantity>,
    pub integral: ConservedQuantity,
    pub parameters: BTreeMap<String, f64>,
    pub equilibria: BTreeMap<String, EquilibriumFamily>,
    pub notes: Vec<String>,
}

impl SystemBundle {
    /// Assembles a bundle, verifying symbolically that every constraint and
    /// integral is conserved and that every family is a family of equilibria.
    pub fn new(
        name: impl Into<String>,
        system: VectorField,
        constraints: Vec<ConservedQuantity>,
        integral: ConservedQuantity,
        parameters: BTreeMap<String, f64>,
        equilibria: BTreeMap<String, EquilibriumFamily>,
    ) -> Result<Self> {
        let constraints: Vec<_> = constraints.into_iter().map(|c| c.with_role(Role::Constraint)).collect();
        let integral = integral.with_role(Role::Integral);
        for q in constraints.iter().chain(std::iter::once(&integral)) {
            q.check_conserved(&system, CONSERVATION_TOL)?;
        }
        for (label, fam) in &equilibria {
            if fam.direction.len() != system.dim() {
                return Err(Error::InvalidInput(format!("equilibrium `{label}` has wrong dimension")));
            }
            if let Some(q) = &fam.integral {
                q.check_conserved(&system, CONSERVATION_TOL)?;
            }
            for m in [0.5, 1.0, 2.0] {
                let e = fam.point(m)?;
                let r = system.eval(e.as_slice()).amax();
                if r >= 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "family `{label}` is not an equilibrium at M = {m}: residual {r:e}"
                    )));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            system,
            constraints,
            integral,
            parameters,
            equilibria,
            notes: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// Number of constraints `k`.
    pub fn k(&self) -> usize {
        self.constraints.len()
    }

    pub fn family(&self, label: &str) -> Result<&EquilibriumFamily> {
        self.equilibria
            .get(label)
            .ok_or_else(|| Error::InvalidInput(format!("unknown equilibrium family `{label}`")))
    }

    /// Point of family `label` at amplitude `m`.
    pub fn equilibrium(&self, label: &str, m: f64) -> Result<StateVector> {
        self.family(label)?.point(m)
    }

    /// Copy of the bundle whose integral is the one adapted to `label`.
    pub fn focused_on(&self, label: &str) -> Result<Self> {
        let fam = self.family(label)?;
        let mut out = self.clone();
        if let Some(q) = &fam.integral {
            out.integral = q.clone().with_role(Role::Integral);
        }
        Ok(out)
    }

    /// All constraints followed by the integral.
    pub fn quantities(&self) -> impl Iterator<Item = &ConservedQuantity> {
        self.constraints.iter().chain(std::iter::once(&self.integral))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation() -> VectorField {
        VectorField::new(vec![
            Polynomial::linear(2, 1, -1.0),
            Polynomial::linear(2, 0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn bundle_rejects_non_conserved_integral() {
        let q = ConservedQuantity::new("x", Polynomial::linear(2, 0, 1.0), Role::Integral);
        let err = SystemBundle::new("rot", rotation(), vec![], q, BTreeMap::new(), BTreeMap::new());
        assert!(matches!(err, Err(Error::NotConserved { .. })));
    }

    #[test]
    fn bundle_rejects_non_equilibrium_family() {
        let q = ConservedQuantity::new(
            "r2",
            Polynomial::quadratic(2, &[(1.0, 0, 0), (1.0, 1, 1)]),
            Role::Integral,
        );
        let mut eq = BTreeMap::new();
        eq.insert("e1".to_string(), EquilibriumFamily::axis(2, 0));
        let err = SystemBundle::new("rot", rotation(), vec![], q, BTreeMap::new(), eq);
        assert!(err.is_err());
    }

    #[test]
    fn zero_amplitude_rejected() {
        let fam = EquilibriumFamily::axis(3, 0);
        assert_eq!(fam.point(0.0).unwrap_err(), Error::InvalidInput("M must be nonzero".into()));
    }

    #[test]
    fn component_dimension_mismatch() {
        assert!(VectorField::new(vec![Polynomial::zero(3)]).is_err());
    }

    #[test]
    fn linear_field_evaluates_matrix_product() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        let f = VectorField::linear(&a).unwrap();
        let v = f.eval(&[1.0, 2.0]);
        assert_eq!(v.as_slice(), &[5.0, -2.0]);
    }
}
