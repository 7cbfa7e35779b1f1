//! Checks the hypotheses for existence of periodic orbits near an equilibrium
//! whose linearization has a zero eigenspace accounted for by `k` conserved
//! constraints:
//!
//! * (i) `ker DX(x0)` has dimension `k` and equals `span{grad C_i(x0)}`;
//! * (ii) `DX(x0)` has a purely imaginary pair `+-i omega`, `omega != 0`;
//! * (iii) `dI(x0) = 0` and `d^2 I(x0)` is positive definite on
//!   `W = intersection of ker dC_i(x0)`.
//!
//! With `k = 0` this is the classical non-degenerate case.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::calculus::{gradient_exact, hessian_exact, jacobian_exact};
use crate::error::{Error, Result};
use crate::spectral::{
    self, eigen, imaginary_pairs, is_positive_definite, kernel, restricted_hessian, subspace_equal,
    symmetric_spectrum, SubspaceBasis,
};
use crate::system::SystemBundle;
use crate::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckTolerances {
    /// Largest admissible `|X(x0)|_inf`.
    pub equilibrium: f64,
    /// Relative singular-value cutoff for kernels and ranks.
    pub kernel: f64,
    /// Largest principal angle accepted as equal subspaces.
    pub span_angle: f64,
    /// `|Re lambda|` cutoff for purely imaginary eigenvalues.
    pub imaginary: f64,
    /// Largest admissible `|dI(x0)|`.
    pub gradient: f64,
    pub positive_definite: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        Self {
            equilibrium: 1e-10,
            kernel: spectral::DEFAULT_KERNEL_TOL,
            span_angle: 1e-8,
            imaginary: 1e-8,
            gradient: 1e-10,
            positive_definite: spectral::DEFAULT_PD_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub equilibrium_residual: f64,
    pub is_regular_value: bool,
    pub k: usize,
    pub kernel_dim: usize,
    pub condition_i: bool,
    pub condition_i_span_match: bool,
    pub omegas: Vec<f64>,
    pub condition_ii: bool,
    pub integral_gradient_norm: f64,
    pub restricted_hessian_spectrum: Vec<f64>,
    pub condition_iii: bool,
    pub predicted_periods: Vec<f64>,
    pub expected_family_count: usize,
    pub verdict: bool,
    pub system: String,
    pub dimension: usize,
    pub integral: String,
    pub equilibrium: Vec<f64>,
    /// `(re, im)` pairs of the spectrum of `DX(x0)`.
    pub eigenvalues: Vec<[f64; 2]>,
    pub constraint_levels: Vec<NamedValue>,
    /// Set when `n - k` is odd; the family count is then rounded down.
    pub odd_reduced_dimension: bool,
    pub notes: Vec<String>,
}

/// Evaluates every hypothesis at `equilibrium` for the bundle's constraints
/// and its current integral.
pub fn check_theorem(bundle: &SystemBundle, equilibrium: &[f64], tol: &CheckTolerances) -> Result<HypothesisReport> {
    let n = bundle.dim();
    if equilibrium.len() != n {
        return Err(Error::InvalidInput(format!(
            "equilibrium has length {}, system dimension is {n}",
            equilibrium.len()
        )));
    }
    let residual = bundle.system.eval(equilibrium).amax();
    if !(residual <= tol.equilibrium) {
        return Err(Error::NotAnEquilibrium(residual));
    }
    let k = bundle.k();

    let grads: Vec<StateVector> = bundle.constraints.iter().map(|c| gradient_exact(c, equilibrium)).collect();
    // propagates DependentConstraints when C(x0) is not a regular value
    let w = spectral::constraint_tangent_space(n, &grads, tol.kernel)?;
    let is_regular_value = w.dim() == n - k;

    let jac = jacobian_exact(&bundle.system, equilibrium);
    let ker = kernel(&jac, tol.kernel);
    let kernel_dim = ker.dim();
    let grad_span = SubspaceBasis::span(n, &grads, tol.kernel);
    let span_match = subspace_equal(&grad_span, &ker, tol.span_angle);
    let condition_i = kernel_dim == k && span_match;

    let eig = eigen(&jac)?;
    let omegas = imaginary_pairs(&eig, tol.imaginary);
    let condition_ii = !omegas.is_empty();

    let integral_gradient_norm = gradient_exact(&bundle.integral, equilibrium).norm();
    let hess = hessian_exact(&bundle.integral, equilibrium);
    let restricted = restricted_hessian(&hess, &grads)?;
    let restricted_hessian_spectrum = symmetric_spectrum(&restricted);
    let condition_iii =
        integral_gradient_norm < tol.gradient && is_positive_definite(&restricted, tol.positive_definite);

    let predicted_periods = omegas.iter().map(|w| 2.0 * PI / w).collect();
    let reduced = n - k;
    let odd_reduced_dimension = reduced % 2 == 1;

    let mut notes = bundle.notes.clone();
    if odd_reduced_dimension {
        notes.push(format!("n - k = {reduced} is odd; expected family count rounded down"));
    }
    notes.extend(resonance_notes(&omegas));

    let verdict = condition_i
        && condition_ii
        && condition_iii
        && is_regular_value
        && integral_gradient_norm < tol.gradient;

    Ok(HypothesisReport {
        equilibrium_residual: residual,
        is_regular_value,
        k,
        kernel_dim,
        condition_i,
        condition_i_span_match: span_match,
        omegas,
        condition_ii,
        integral_gradient_norm,
        restricted_hessian_spectrum,
        condition_iii,
        predicted_periods,
        expected_family_count: reduced / 2,
        verdict,
        system: bundle.name.clone(),
        dimension: n,
        integral: bundle.integral.name().to_string(),
        equilibrium: equilibrium.to_vec(),
        eigenvalues: eig.eigenvalues.iter().map(|l| [l.re, l.im]).collect(),
        constraint_levels: bundle
            .constraints
            .iter()
            .map(|c| NamedValue { name: c.name().to_string(), value: c.eval(equilibrium) })
            .collect(),
        odd_reduced_dimension,
        notes,
    })
}

/// Flags frequency pairs whose ratio is within 1e-3 of `p/q`, `p, q <= 4`.
fn resonance_notes(omegas: &[f64]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, a) in omegas.iter().enumerate() {
        for b in &omegas[i + 1..] {
            let r = a / b;
            let hit = (1..=4u32)
                .flat_map(|p| (1..=4u32).map(move |q| (p, q)))
                .find(|&(p, q)| (r - f64::from(p) / f64::from(q)).abs() < 1e-3);
            if let Some((p, q)) = hit {
                out.push(format!("near-resonant frequencies {a} : {b} ~ {p}:{q}; orbits attempted per frequency without resonance guarantees"));
            }
        }
    }
    out
}
