use serde::{Deserialize, Serialize};

use super::{solve_from, solve_orbit, OrbitProblem, PeriodicOrbit};
use crate::error::{Error, Result};
use crate::StateVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub epsilon: f64,
    pub orbit: PeriodicOrbit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFailure {
    pub epsilon: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitFamily {
    pub omega_ref: f64,
    pub linear_period: f64,
    /// Converged rows, ascending in epsilon.
    pub rows: Vec<FamilyRow>,
    pub failures: Vec<FamilyFailure>,
}

impl OrbitFamily {
    /// Largest epsilon that converged.
    pub fn largest_converged(&self) -> Option<f64> {
        self.rows.last().map(|r| r.epsilon)
    }

    pub fn periods(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.orbit.period).collect()
    }
}

/// Solves the family for each epsilon, largest first from the linear seed,
/// then warm-starting each smaller epsilon from the last converged orbit via
/// `x0 + (eps_new / eps_old) (x_old - x0)` with the period unchanged.
pub fn continue_family(template: &OrbitProblem, epsilons: &[f64]) -> Result<OrbitFamily> {
    if epsilons.is_empty() {
        return Err(Error::InvalidInput("epsilons must be nonempty".into()));
    }
    if epsilons.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput("epsilons must be positive".into()));
    }
    if epsilons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("epsilons must be strictly increasing".into()));
    }

    let x0 = &template.equilibrium;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut previous: Option<(f64, PeriodicOrbit)> = None;

    for &eps in epsilons.iter().rev() {
        let problem = template.with_epsilon(eps);
        let result = match &previous {
            None => solve_orbit(&problem),
            Some((eps_old, orbit)) => {
                let old = StateVector::from_row_slice(&orbit.point);
                let guess = x0 + (old - x0) * (eps / eps_old);
                solve_from(&problem, &guess, orbit.period)
            }
        };
        match result {
            Ok(orbit) => {
                previous = Some((eps, orbit.clone()));
                rows.push(FamilyRow { epsilon: eps, orbit });
            }
            Err(e) => failures.push(FamilyFailure { epsilon: eps, error: e.to_string() }),
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyFamily);
    }
    rows.reverse();
    failures.reverse();
    Ok(OrbitFamily { omega_ref: template.omega, linear_period: template.linear_period(), rows, failures })
}
