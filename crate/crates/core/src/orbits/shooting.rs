use nalgebra::linalg::SVD;

use super::{OrbitProblem, PeriodicOrbit};
use crate::calculus::gradient_exact;
use crate::error::{Error, Result};
use crate::integrate::{flow, flow_and_monodromy};
use crate::spectral::eigen;
use crate::{Matrix, StateVector};

/// Residual and Jacobian of the shooting system at one iterate.
struct Linearization {
    residual: StateVector,
    jacobian: Matrix,
    monodromies: Vec<Matrix>,
}

struct Unknowns {
    points: Vec<StateVector>,
    period: f64,
}

impl Unknowns {
    fn to_vector(&self) -> StateVector {
        let n = self.points[0].len();
        let m = self.points.len();
        let mut z = StateVector::zeros(m * n + 1);
        for (j, p) in self.points.iter().enumerate() {
            z.rows_mut(j * n, n).copy_from(p);
        }
        z[m * n] = self.period;
        z
    }

    fn from_vector(z: &StateVector, n: usize, m: usize) -> Self {
        Self {
            points: (0..m).map(|j| z.rows(j * n, n).into_owned()).collect(),
            period: z[m * n],
        }
    }
}

struct Phase {
    anchor: StateVector,
    normal: StateVector,
}

fn linearize(problem: &OrbitProblem, z: &Unknowns, phase: &Phase) -> Result<Linearization> {
    let b = &problem.bundle;
    let n = b.dim();
    let k = b.k();
    let m = z.points.len();
    let rows = m * n + k + 2;
    let cols = m * n + 1;
    let mut r = StateVector::zeros(rows);
    let mut jac = Matrix::zeros(rows, cols);
    let dt = z.period / m as f64;
    let mut monodromies = Vec::with_capacity(m);

    for (j, xj) in z.points.iter().enumerate() {
        let next = (j + 1) % m;
        let (y, mono) = flow_and_monodromy(&b.system, xj.as_slice(), dt, &problem.settings.ode)?;
        r.rows_mut(j * n, n).copy_from(&(&y - &z.points[next]));
        let mut block = jac.view_mut((j * n, j * n), (n, n));
        block += &mono;
        let mut minus = jac.view_mut((j * n, next * n), (n, n));
        for i in 0..n {
            minus[(i, i)] -= 1.0;
        }
        let fy = b.system.eval(y.as_slice()) / m as f64;
        jac.view_mut((j * n, m * n), (n, 1)).copy_from(&fy);
        monodromies.push(mono);
    }

    let x = z.points[0].as_slice();
    let mut row = m * n;
    for (c, target) in b.constraints.iter().zip(problem.constraint_targets()) {
        r[row] = c.eval(x) - target;
        jac.view_mut((row, 0), (1, n)).copy_from(&gradient_exact(c, x).transpose());
        row += 1;
    }
    r[row] = b.integral.eval(x) - problem.integral_target();
    jac.view_mut((row, 0), (1, n)).copy_from(&gradient_exact(&b.integral, x).transpose());
    row += 1;
    r[row] = phase.normal.dot(&(&z.points[0] - &phase.anchor));
    jac.view_mut((row, 0), (1, n)).copy_from(&phase.normal.transpose());

    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState(z.period));
    }
    Ok(Linearization { residual: r, jacobian: jac, monodromies })
}

/// Minimum-norm least-squares solution of `J d = -r`, discarding singular
/// values below `cutoff * sigma_max`.
fn truncated_step(jac: &Matrix, r: &StateVector, cutoff: f64) -> StateVector {
    let svd = SVD::new(jac.clone(), true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.max();
    let utr = u.transpose() * r;
    let mut coeffs = StateVector::zeros(vt.nrows());
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > cutoff * smax {
            coeffs[i] = -utr[i] / s;
        }
    }
    vt.transpose() * coeffs
}

fn level_residual(problem: &OrbitProblem, lin: &Linearization) -> f64 {
    let n = problem.bundle.dim();
    let m = lin.monodromies.len();
    let k = problem.bundle.k();
    lin.residual.rows(m * n, k + 1).amax()
}

/// Gauss-Newton shooting from `guess` with `segments` shooting intervals.
///
/// Unknowns are the segment start points and the period; residuals stack
/// segment closure, constraint levels, the integral level and a Poincaré
/// phase condition anchored at the guess.
pub fn shoot(problem: &OrbitProblem, guess: &StateVector, period: f64, segments: usize) -> Result<PeriodicOrbit> {
    let settings = &problem.settings;
    let n = problem.bundle.dim();
    if guess.len() != n {
        return Err(Error::InvalidInput("guess has wrong dimension".into()));
    }
    if segments == 0 {
        return Err(Error::InvalidInput("need at least one segment".into()));
    }
    let t0 = period;
    let normal = problem.bundle.system.eval(guess.as_slice());
    if normal.norm() == 0.0 {
        return Err(Error::InvalidInput("guess is an equilibrium; phase condition undefined".into()));
    }
    let phase = Phase { anchor: guess.clone(), normal };

    let mut points = vec![guess.clone()];
    for _ in 1..segments {
        let last = points.last().expect("nonempty");
        points.push(flow(&problem.bundle.system, last.as_slice(), period / segments as f64, &settings.ode)?);
    }
    let mut z = Unknowns { points, period };
    let mut lin = linearize(problem, &z, &phase)?;
    let mut norm = lin.residual.amax();
    let mut level_history = vec![level_residual(problem, &lin)];
    let mut iterations = 0;

    while norm >= settings.tol_orbit {
        if iterations >= settings.max_iter {
            return Err(Error::NoConvergence { iterations, residual: norm });
        }
        iterations += 1;
        let step = truncated_step(&lin.jacobian, &lin.residual, settings.svd_cutoff);
        let zv = z.to_vector();

        // backtrack on the residual norm; take the last trial if none decreases
        let mut lambda = 1.0;
        let (next_z, next_lin) = loop {
            let cand = Unknowns::from_vector(&(&zv + &step * lambda), n, segments);
            if cand.period < 0.1 * t0 || cand.period > 10.0 * t0 {
                if lambda > 1.0 / 16.0 {
                    lambda *= 0.5;
                    continue;
                }
                return Err(Error::PeriodCollapsed { period: cand.period, reference: t0 });
            }
            let attempt = linearize(problem, &cand, &phase);
            match attempt {
                Ok(l) if l.residual.amax() < norm || lambda <= 1.0 / 16.0 => break (cand, l),
                Err(e) if lambda <= 1.0 / 16.0 => return Err(e),
                _ => lambda *= 0.5,
            }
        };
        z = next_z;
        lin = next_lin;
        norm = lin.residual.amax();

        let level = level_residual(problem, &lin);
        level_history.push(level);
        if level_history.len() > 6 && level > 1e-6 {
            let earlier = level_history[level_history.len() - 6];
            if level > 0.5 * earlier {
                return Err(Error::LeftLevelSet(level));
            }
        }
    }

    // one polishing step: the iteration converges quadratically, so this
    // pushes the level residuals to round-off at the cost of one linearization
    let step = truncated_step(&lin.jacobian, &lin.residual, settings.svd_cutoff);
    let cand = Unknowns::from_vector(&(z.to_vector() + step), n, segments);
    if let Ok(l) = linearize(problem, &cand, &phase) {
        if l.residual.amax() < norm {
            z = cand;
            lin = l;
            norm = lin.residual.amax();
        }
    }

    let x = &z.points[0];
    let closure = flow(&problem.bundle.system, x.as_slice(), z.period, &settings.ode)?;
    let closure_residual = (closure - x).norm();
    let total = lin
        .monodromies
        .iter()
        .fold(Matrix::identity(n, n), |acc, mj| mj * acc);
    let multipliers = eigen(&total)?.eigenvalues;

    Ok(PeriodicOrbit {
        point: x.iter().copied().collect(),
        period: z.period,
        epsilon: problem.epsilon,
        omega: problem.omega,
        linear_period: problem.linear_period(),
        closure_residual,
        constraint_residuals: problem.level_residuals(x.as_slice()),
        floquet_multipliers: multipliers,
        iterations,
        segments,
        final_residual: norm,
    })
}
