//! Periodic orbits on the level sets `C(x) = C(x0)`, `I(x) = I(x0) + eps^2`
//! near an equilibrium, found by Gauss-Newton shooting in the ambient space
//! and continued in `eps`.

mod family;
mod shooting;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{hessian_exact, jacobian_exact};
use crate::error::{Error, Result};
use crate::hypothesis::NamedValue;
use crate::integrate::{flow, ToleranceSettings, Trajectory};
use crate::spectral::kernel;
use crate::system::SystemBundle;
use crate::{Matrix, StateVector};

pub use family::{continue_family, FamilyFailure, FamilyRow, OrbitFamily};
pub use shooting::shoot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Convergence threshold on the residual infinity norm.
    pub tol_orbit: f64,
    pub max_iter: usize,
    /// Relative singular-value cutoff in the least-squares step.
    pub svd_cutoff: f64,
    /// Shooting segments for the first attempt.
    pub segments: usize,
    /// Segments used when the first attempt does not converge; 0 disables.
    pub fallback_segments: usize,
    pub ode: ToleranceSettings,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_orbit: 1e-10,
            max_iter: 25,
            svd_cutoff: 1e-10,
            segments: 1,
            fallback_segments: 2,
            ode: ToleranceSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitProblem {
    pub bundle: SystemBundle,
    pub equilibrium: StateVector,
    pub omega: f64,
    /// `(u, v)` with `DX u = -omega v` and `DX v = omega u`; `u` is unit.
    pub eigenplane: [StateVector; 2],
    pub epsilon: f64,
    /// Angle of the seed direction inside the eigenplane.
    pub seed_angle: f64,
    pub settings: SolverSettings,
}

impl OrbitProblem {
    /// Sets up the problem for frequency `omega` of `DX(equilibrium)`; the
    /// invariant plane is the kernel of `DX^2 + omega^2 I`.
    pub fn new(
        bundle: SystemBundle,
        equilibrium: StateVector,
        omega: f64,
        epsilon: f64,
        settings: SolverSettings,
    ) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidInput("omega must be positive".into()));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidInput("epsilon must be non-negative".into()));
        }
        let n = bundle.dim();
        if equilibrium.len() != n {
            return Err(Error::InvalidInput("equilibrium has wrong dimension".into()));
        }
        let a = jacobian_exact(&bundle.system, equilibrium.as_slice());
        let p = &a * &a + Matrix::identity(n, n) * (omega * omega);
        let plane = kernel(&p, 1e-8);
        if plane.dim() < 2 {
            return Err(Error::InvalidInput(format!("omega = {omega} is not a frequency of DX(x0)")));
        }
        let u = plane.matrix().column(0).into_owned();
        let v = -(&a * &u) / omega;
        let problem = Self {
            bundle,
            equilibrium,
            omega,
            eigenplane: [u, v],
            epsilon,
            seed_angle: 0.0,
            settings,
        };
        let r = problem.eigenplane_residual();
        if r > 1e-8 {
            return Err(Error::InvalidInput(format!("eigenplane not invariant: residual {r:e}")));
        }
        Ok(problem)
    }

    /// `|DX [u v] - [u v] [[0, omega], [-omega, 0]]|_inf`.
    pub fn eigenplane_residual(&self) -> f64 {
        let a = jacobian_exact(&self.bundle.system, self.equilibrium.as_slice());
        let [u, v] = &self.eigenplane;
        let ru = &a * u + v * self.omega;
        let rv = &a * v - u * self.omega;
        ru.amax().max(rv.amax())
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    pub fn with_seed_angle(mut self, angle: f64) -> Self {
        self.seed_angle = angle;
        self
    }

    /// `2 pi / omega`, the period of the linearized motion.
    pub fn linear_period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub(crate) fn integral_target(&self) -> f64 {
        self.bundle.integral.eval(self.equilibrium.as_slice()) + self.epsilon * self.epsilon
    }

    pub(crate) fn constraint_targets(&self) -> Vec<f64> {
        self.bundle.constraints.iter().map(|c| c.eval(self.equilibrium.as_slice())).collect()
    }

    /// Residuals `|C_i(x) - C_i(x0)|` followed by `|I(x) - I(x0) - eps^2|`.
    pub fn level_residuals(&self, x: &[f64]) -> Vec<NamedValue> {
        let mut out: Vec<NamedValue> = self
            .bundle
            .constraints
            .iter()
            .zip(self.constraint_targets())
            .map(|(c, t)| NamedValue { name: c.name().to_string(), value: (c.eval(x) - t).abs() })
            .collect();
        out.push(NamedValue {
            name: self.bundle.integral.name().to_string(),
            value: (self.bundle.integral.eval(x) - self.integral_target()).abs(),
        });
        out
    }
}

/// Linear seed `(x0 + eps s d, 2 pi / omega)` where `d` is a unit in-plane
/// direction and `s` solves `s^2 d^T d^2I(x0) d / 2 = 1`.
///
/// Starts at `problem.seed_angle` and sweeps 16 angles over a half turn when
/// the Hessian is not positive along `d`.
pub fn initial_guess(problem: &OrbitProblem) -> Result<(StateVector, f64)> {
    let t0 = problem.linear_period();
    let x0 = &problem.equilibrium;
    let h = hessian_exact(&problem.bundle.integral, x0.as_slice());
    let [u, v] = &problem.eigenplane;
    let v_hat = v.normalize();
    for j in 0..16 {
        let theta = problem.seed_angle + PI * f64::from(j) / 16.0;
        let d = (u * theta.cos() + &v_hat * theta.sin()).normalize();
        let curvature = d.dot(&(&h * &d));
        if curvature > 0.0 {
            let s = (2.0 / curvature).sqrt();
            return Ok((x0 + d * (problem.epsilon * s), t0));
        }
    }
    Err(Error::EigenplaneDegenerate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub point: Vec<f64>,
    pub period: f64,
    pub epsilon: f64,
    pub omega: f64,
    pub linear_period: f64,
    /// `|phi_T(x) - x|_2` from a single re-integration over the full period.
    pub closure_residual: f64,
    pub constraint_residuals: Vec<NamedValue>,
    /// `(re, im)` pairs.
    pub floquet_multipliers: Vec<Complex64>,
    pub iterations: usize,
    pub segments: usize,
    pub final_residual: f64,
}

impl PeriodicOrbit {
    pub fn period_deviation(&self) -> f64 {
        (self.period - self.linear_period).abs()
    }

    /// Number of multipliers within `tol` of 1.
    pub fn unit_multiplier_count(&self, tol: f64) -> usize {
        self.floquet_multipliers
            .iter()
            .filter(|m| (*m - Complex64::new(1.0, 0.0)).norm() < tol)
            .count()
    }
}

/// Solves for a periodic orbit from the linear seed, retrying with multiple
/// shooting when single shooting does not converge.
pub fn solve_orbit(problem: &OrbitProblem) -> Result<PeriodicOrbit> {
    if !(problem.epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let (guess, t0) = initial_guess(problem)?;
    solve_from(problem, &guess, t0)
}

pub(crate) fn solve_from(problem: &OrbitProblem, guess: &StateVector, period: f64) -> Result<PeriodicOrbit> {
    let s = &problem.settings;
    match shoot(problem, guess, period, s.segments.max(1)) {
        Err(Error::NoConvergence { .. }) if s.fallback_segments > s.segments.max(1) => {
            shoot(problem, guess, period, s.fallback_segments)
        }
        other => other,
    }
}

/// `samples` states at `t_j = j T / samples`, `j = 0..samples`.
pub fn sample_orbit(
    bundle: &SystemBundle,
    orbit: &PeriodicOrbit,
    samples: usize,
    settings: &ToleranceSettings,
) -> Result<Trajectory> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let dt = orbit.period / samples as f64;
    let mut x = StateVector::from_row_slice(&orbit.point);
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    for j in 1..samples {
        x = flow(&bundle.system, x.as_slice(), dt, settings)?;
        times.push(dt * j as f64);
        states.push(x.clone());
    }
    Ok(Trajectory { times, states, step_stats: Default::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{build_clebsch, build_rigid_body, ClebschParams, RigidBodyParams};

    fn rigid_problem(eps: f64) -> OrbitProblem {
        let b = build_rigid_body(RigidBodyParams::new(1.0, -1.0, 2.0, 1.0).unwrap()).unwrap();
        let e = b.equilibrium("e1", 1.0).unwrap();
        OrbitProblem::new(b, e, 1.0, eps, SolverSettings::default()).unwrap()
    }

    #[test]
    fn rigid_seed_moves_in_m2_m3_plane() {
        let p = rigid_problem(0.05);
        let (g, t0) = initial_guess(&p).unwrap();
        assert_eq!(t0, 2.0 * PI);
        assert!((g[0] - 1.0).abs() < 1e-15);
        let d = (g[1] * g[1] + g[2] * g[2]).sqrt();
        assert!(d > 0.01 && d < 0.2, "{d}");
        // I(guess) - I(x0) = eps^2 exactly for a quadratic integral
        let di = p.bundle.integral.eval(g.as_slice()) - p.bundle.integral.eval(p.equilibrium.as_slice());
        assert!((di - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn zero_epsilon_seed_is_equilibrium() {
        let p = rigid_problem(0.0);
        let (g, _) = initial_guess(&p).unwrap();
        assert_eq!(g, p.equilibrium);
        assert!(matches!(solve_orbit(&p), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn clebsch_sqrt2_seed_touches_x3_p2() {
        let b = build_clebsch(ClebschParams::new(1.0, 2.0, 3.0).unwrap()).unwrap();
        let e = b.equilibrium("e1", 1.0).unwrap();
        let p = OrbitProblem::new(b, e.clone(), 2f64.sqrt(), 0.05, SolverSettings::default()).unwrap();
        assert!(p.eigenplane_residual() < 1e-12);
        let (g, _) = initial_guess(&p).unwrap();
        let d = g - e;
        for i in [0, 1, 3, 5] {
            assert!(d[i].abs() < 1e-14, "coordinate {i}: {}", d[i]);
        }
        assert!(d[2].abs() + d[4].abs() > 1e-3);
    }

    #[test]
    fn non_frequency_rejected() {
        let b = build_rigid_body(RigidBodyParams::new(1.0, -1.0, 2.0, 1.0).unwrap()).unwrap();
        let e = b.equilibrium("e1", 1.0).unwrap();
        assert!(OrbitProblem::new(b, e, 1.3, 0.05, SolverSettings::default()).is_err());
    }

    #[test]
    fn degenerate_plane_detected() {
        // flip the integral sign: negative definite on the plane
        let mut p = rigid_problem(0.05);
        p.bundle.integral = crate::system::ConservedQuantity::new(
            "-F",
            p.bundle.integral.polynomial().scale(-1.0),
            crate::system::Role::Integral,
        );
        assert_eq!(initial_guess(&p).unwrap_err(), Error::EigenplaneDegenerate);
    }

    /// Period by quadrature: on `F = eps^2` the orbit is the ellipse
    /// `m2 = A cos t, m3 = B sin t` traversed at angular rate `m1 sqrt(-a2 (a3 - l))`,
    /// with `m1` recovered from the constraint level.
    fn rigid_period_oracle(a: [f64; 4], kappa: f64, eps: f64) -> f64 {
        let [_, a2, a3, l] = a;
        let alpha = (a3 - l) / a3;
        let aa = 2.0 * eps * eps / a3;
        let bb = -2.0 * alpha * eps * eps / a2;
        let rate = (-a2 * (a3 - l)).sqrt();
        let n = 512;
        let h = 2.0 * PI / n as f64;
        (0..n)
            .map(|j| {
                let t = j as f64 * h;
                let m1 = ((alpha - kappa * aa * t.cos().powi(2) - bb * t.sin().powi(2)) / alpha).sqrt();
                h / (rate * m1)
            })
            .sum()
    }

    #[test]
    fn rigid_orbit_matches_quadrature_period() {
        let p = rigid_problem(0.05);
        let o = solve_orbit(&p).unwrap();
        let expected = rigid_period_oracle([1.0, -1.0, 2.0, 1.0], 1.5, 0.05);
        assert!((o.period - expected).abs() < 1e-8, "{} vs {expected}", o.period);
        assert!(o.closure_residual < 1e-10, "{}", o.closure_residual);
        assert!(o.constraint_residuals.iter().all(|r| r.value < 1e-12), "{:?}", o.constraint_residuals);
        assert_eq!(o.segments, 1);
    }

    #[test]
    fn zero_sum_orbit_matches_quadrature_period() {
        let b = build_rigid_body(RigidBodyParams::new(1.0, -3.0, 2.0, 1.0).unwrap()).unwrap();
        let e = b.equilibrium("e1", 1.0).unwrap();
        let p = OrbitProblem::new(b, e, 3f64.sqrt(), 0.1, SolverSettings::default()).unwrap();
        let o = solve_orbit(&p).unwrap();
        let expected = rigid_period_oracle([1.0, -3.0, 2.0, 1.0], 0.5, 0.1);
        assert!((o.period - expected).abs() < 1e-8, "{} vs {expected}", o.period);
    }

    #[test]
    fn two_segment_shooting_agrees() {
        let p = rigid_problem(0.05);
        let (g, t0) = initial_guess(&p).unwrap();
        let one = shoot(&p, &g, t0, 1).unwrap();
        let two = shoot(&p, &g, t0, 2).unwrap();
        assert_eq!(two.segments, 2);
        assert!((one.period - two.period).abs() < 1e-9);
        assert!(two.closure_residual < 1e-9);
    }
}
