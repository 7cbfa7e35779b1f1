//! Rigid body with one control:
//!
//! ```text
//! m1' = a1 m2 m3
//! m2' = a2 m1 m3
//! m3' = (a3 - l) m1 m2
//! ```
//!
//! with `alpha = (a3 - l) / a3`. When `a1 + a2 + a3 = 0` the system has the
//! Hamilton-Poisson realization `(R^3, Pi_alpha, H_alpha)` and the Casimir
//! `C_alpha = alpha m1^2 + alpha m2^2 + m3^2`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ConservedQuantity, EquilibriumFamily, Polynomial, Role, SystemBundle, VectorField};
use crate::error::{Error, Result};
use crate::{Matrix, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidBodyParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Gain of the feedback control on the third axis.
    pub l: f64,
}

impl RigidBodyParams {
    pub fn new(a1: f64, a2: f64, a3: f64, l: f64) -> Result<Self> {
        let p = Self { a1, a2, a3, l };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.a1, self.a2, self.a3, self.l].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("rigid body parameters must be finite".into()));
        }
        if self.a3 == 0.0 {
            return Err(Error::AlphaUndefined);
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        (self.a3 - self.l) / self.a3
    }

    fn sum_vanishes(&self) -> bool {
        let scale = self.a1.abs().max(self.a2.abs()).max(self.a3.abs());
        (self.a1 + self.a2 + self.a3).abs() <= 1e-14 * scale
    }

    /// Inverse principal moments `(1/I1, 1/I2, 1/I3)` solving
    /// `a1 = 1/I3 - 1/I2`, `a2 = 1/I1 - 1/I3`, `a3 = 1/I2 - 1/I1` in the
    /// gauge `1/I1 = 1`. Solvable iff `a1 + a2 + a3 = 0`.
    pub fn inverse_inertia(&self) -> Result<[f64; 3]> {
        if !self.sum_vanishes() {
            return Err(Error::NoInertiaRealization(self.a1 + self.a2 + self.a3));
        }
        let b1 = 1.0;
        Ok([b1, b1 + self.a3, b1 - self.a2])
    }

    /// Coefficient of `m2^2` in the constraint `alpha m1^2 + kappa m2^2 + m3^2`.
    ///
    /// Equal to `alpha` when the Poisson realization exists; otherwise the
    /// unique value making the quadratic a first integral.
    pub fn casimir_m2_coefficient(&self) -> Result<f64> {
        let alpha = self.alpha();
        if self.sum_vanishes() {
            return Ok(alpha);
        }
        if self.a2 == 0.0 {
            return Err(Error::InvalidInput(
                "a2 = 0 with a1 + a2 + a3 != 0 admits no conserved constraint of the form alpha m1^2 + kappa m2^2 + m3^2".into(),
            ));
        }
        Ok(-alpha * (self.a1 + self.a3) / self.a2)
    }

    /// `Pi_alpha(m)`.
    pub fn poisson_tensor(&self, m: &[f64]) -> Matrix {
        let al = self.alpha();
        let (m1, m2, m3) = (m[0], m[1], m[2]);
        Matrix::from_row_slice(
            3,
            3,
            &[0.0, -m3, al * m2, m3, 0.0, -al * m1, -al * m2, al * m1, 0.0],
        )
    }

    /// `H_alpha = (m1^2/I1 + m2^2/I2 + m3^2/(alpha I3)) / 2` in the inertia gauge.
    pub fn hamiltonian(&self) -> Result<Polynomial> {
        let [b1, b2, b3] = self.inverse_inertia()?;
        let al = self.alpha();
        Ok(Polynomial::quadratic(3, &[(0.5 * b1, 0, 0), (0.5 * b2, 1, 1), (0.5 * b3 / al, 2, 2)]))
    }
}

pub(crate) fn rigid_body_field(p: &RigidBodyParams) -> VectorField {
    VectorField::new(vec![
        Polynomial::monomial(p.a1, &[0, 1, 1]),
        Polynomial::monomial(p.a2, &[1, 0, 1]),
        Polynomial::monomial(p.a3 - p.l, &[1, 1, 0]),
    ])
    .expect("fixed shape")
}

/// Builds the controlled rigid body bundle with constraint `C_alpha` and the
/// integral `F = H_alpha - C_alpha / (2 alpha I1)` adapted to the `e1` family.
pub fn build_rigid_body(params: RigidBodyParams) -> Result<SystemBundle> {
    params.validate()?;
    let al = params.alpha();
    if al == 0.0 {
        return Err(Error::InvalidInput("alpha = 0 (l = a3) degenerates the Casimir".into()));
    }
    let (a1, a2, a3) = (params.a1, params.a2, params.a3);
    let kappa = params.casimir_m2_coefficient()?;

    let field = rigid_body_field(&params);
    let casimir = ConservedQuantity::new(
        "C_alpha",
        Polynomial::quadratic(3, &[(al, 0, 0), (kappa, 1, 1), (1.0, 2, 2)]),
        Role::Constraint,
    );
    let f1 = ConservedQuantity::new(
        "F_e1",
        Polynomial::quadratic(3, &[(0.5 * a3, 1, 1), (-0.5 * a2 / al, 2, 2)]),
        Role::Integral,
    );
    let f2 = ConservedQuantity::new(
        "F_e2",
        Polynomial::quadratic(3, &[(-0.5 * a3, 0, 0), (0.5 * a1 / al, 2, 2)]),
        Role::Integral,
    );
    let f3 = ConservedQuantity::new(
        "F_e3",
        Polynomial::quadratic(3, &[(0.5 * a2, 0, 0), (-0.5 * a1, 1, 1)]),
        Role::Integral,
    );

    let mut parameters = BTreeMap::new();
    parameters.insert("a1".to_string(), a1);
    parameters.insert("a2".to_string(), a2);
    parameters.insert("a3".to_string(), a3);
    parameters.insert("l".to_string(), params.l);
    parameters.insert("alpha".to_string(), al);

    let mut equilibria = BTreeMap::new();
    for (i, (label, f)) in [("e1", &f1), ("e2", &f2), ("e3", &f3)].into_iter().enumerate() {
        let mut fam = EquilibriumFamily::axis(3, i);
        fam.integral = Some(f.clone());
        equilibria.insert(label.to_string(), fam);
    }

    let mut bundle = SystemBundle::new("rigid_body", field, vec![casimir], f1, parameters, equilibria)?;
    if !params.sum_vanishes() {
        bundle.notes.push(format!(
            "a1 + a2 + a3 = {} != 0: no Poisson realization; constraint uses m2^2 coefficient {kappa} in place of alpha = {al}",
            a1 + a2 + a3
        ));
    }
    Ok(bundle)
}

/// Residuals of the Hamilton-Poisson identities over a set of sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationReport {
    pub samples: usize,
    /// `max |Pi_alpha grad H_alpha - X|`.
    pub hamiltonian_residual: f64,
    /// `max |Pi_alpha grad C_alpha|`.
    pub casimir_residual: f64,
    /// `max |Pi + Pi^T|`.
    pub antisymmetry_residual: f64,
}

/// Checks `Pi_alpha grad H_alpha = X` and `Pi_alpha grad C_alpha = 0` at each sample.
pub fn verify_poisson_realization(params: &RigidBodyParams, samples: &[StateVector]) -> Result<RealizationReport> {
    params.validate()?;
    if params.alpha() == 0.0 {
        return Err(Error::InvalidInput("alpha = 0 (l = a3): no Poisson realization".into()));
    }
    let h = params.hamiltonian()?;
    let al = params.alpha();
    let c = Polynomial::quadratic(3, &[(al, 0, 0), (al, 1, 1), (1.0, 2, 2)]);
    let field = rigid_body_field(params);
    let grad_h = h.gradient();
    let grad_c = c.gradient();

    let mut report = RealizationReport {
        samples: samples.len(),
        hamiltonian_residual: 0.0,
        casimir_residual: 0.0,
        antisymmetry_residual: 0.0,
    };
    for m in samples {
        if m.len() != 3 || m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("samples must be finite 3-vectors".into()));
        }
        let x = m.as_slice();
        let pi = params.poisson_tensor(x);
        let gh = StateVector::from_iterator(3, grad_h.iter().map(|g| g.eval(x)));
        let gc = StateVector::from_iterator(3, grad_c.iter().map(|g| g.eval(x)));
        let rh = (&pi * gh - field.eval(x)).amax();
        let rc = (&pi * gc).amax();
        let ra = (&pi + pi.transpose()).amax();
        report.hamiltonian_residual = report.hamiltonian_residual.max(rh);
        report.casimir_residual = report.casimir_residual.max(rc);
        report.antisymmetry_residual = report.antisymmetry_residual.max(ra);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::CONSERVATION_TOL;

    fn spec_params() -> RigidBodyParams {
        RigidBodyParams::new(1.0, -1.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_zero_a3() {
        assert_eq!(RigidBodyParams::new(1.0, -1.0, 0.0, 1.0).unwrap_err(), Error::AlphaUndefined);
    }

    #[test]
    fn equilibrium_and_casimir_gradient_at_e1() {
        let b = build_rigid_body(spec_params()).unwrap();
        let e1 = b.equilibrium("e1", 1.0).unwrap();
        assert_eq!(b.system.eval(e1.as_slice()).as_slice(), &[0.0, 0.0, 0.0]);
        let g: Vec<f64> = b.constraints[0].gradient_polys().iter().map(|p| p.eval(e1.as_slice())).collect();
        assert_eq!(g, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn all_quantities_conserved_symbolically() {
        for p in [spec_params(), RigidBodyParams::new(1.0, -3.0, 2.0, 1.0).unwrap()] {
            let b = build_rigid_body(p).unwrap();
            for q in b.quantities() {
                assert!(q.derivative_along(&b.system).is_zero_within(CONSERVATION_TOL), "{}", q.name());
            }
            for fam in b.equilibria.values() {
                let q = fam.integral.as_ref().unwrap();
                assert!(q.derivative_along(&b.system).is_zero_within(CONSERVATION_TOL));
            }
        }
    }

    #[test]
    fn symmetric_casimir_recovered_when_realization_exists() {
        let p = RigidBodyParams::new(1.0, -3.0, 2.0, 1.0).unwrap();
        assert_eq!(p.casimir_m2_coefficient().unwrap(), p.alpha());
        let b = build_rigid_body(p).unwrap();
        assert!(b.notes.is_empty());
        // F_e1 = H_alpha - C_alpha / (2 alpha I1)
        let h = p.hamiltonian().unwrap();
        let c = b.constraints[0].polynomial();
        let b1 = p.inverse_inertia().unwrap()[0];
        let f = h.sub(&c.scale(b1 / (2.0 * p.alpha())));
        assert!(f.sub(b.integral.polynomial()).is_zero_within(1e-15));
    }

    #[test]
    fn generalized_casimir_noted_off_realization() {
        let b = build_rigid_body(spec_params()).unwrap();
        assert_eq!(b.notes.len(), 1);
        assert_eq!(spec_params().casimir_m2_coefficient().unwrap(), 1.5);
    }

    #[test]
    fn integral_gradient_vanishes_on_its_family() {
        let b = build_rigid_body(spec_params()).unwrap();
        for (label, fam) in &b.equilibria {
            let q = fam.integral.as_ref().unwrap();
            let e = fam.point(-1.7).unwrap();
            for g in q.gradient_polys() {
                assert_eq!(g.eval(e.as_slice()), 0.0, "{label}");
            }
        }
    }

    #[test]
    fn casimir_level_is_alpha_m_squared() {
        let b = build_rigid_body(spec_params()).unwrap();
        for m in [0.5, 1.0, 2.0] {
            let e = b.equilibrium("e1", m).unwrap();
            assert_eq!(b.constraints[0].eval(e.as_slice()), 0.5 * m * m);
        }
    }

    #[test]
    fn realization_requires_zero_sum() {
        let err = verify_poisson_realization(&spec_params(), &[]).unwrap_err();
        assert!(matches!(err, Error::NoInertiaRealization(s) if s == 2.0));
    }

    #[test]
    fn realization_at_origin_is_exact() {
        let p = RigidBodyParams::new(1.0, -3.0, 2.0, 1.0).unwrap();
        let r = verify_poisson_realization(&p, &[StateVector::zeros(3)]).unwrap();
        assert_eq!(r.hamiltonian_residual, 0.0);
        assert_eq!(r.casimir_residual, 0.0);
    }

    #[test]
    fn poisson_tensor_is_antisymmetric() {
        let p = spec_params();
        let pi = p.poisson_tensor(&[0.3, -1.2, 2.5]);
        assert_eq!(&pi + pi.transpose(), Matrix::zeros(3, 3));
    }
}
