//! Adaptive Dormand-Prince 5(4) integration, time-T flow maps, variational
//! (monodromy) integration and drift monitoring of conserved quantities.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::calculus::jacobian_into;
use crate::error::{Error, Result};
use crate::system::{ConservedQuantity, VectorField};
use crate::{Matrix, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Method {
    /// Embedded 5(4) pair with PI step control.
    DormandPrince,
    /// Classical fixed-step RK4, for debugging.
    Rk4 { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub method: Method,
}

impl Default for ToleranceSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_steps: 10_000_000,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: 1.0,
            method: Method::DormandPrince,
        }
    }
}

impl ToleranceSettings {
    pub fn with_tol(tol: f64) -> Self {
        Self { abs_tol: tol, rel_tol: tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.abs_tol, self.rel_tol, self.h_init, self.h_min, self.h_max];
        if pos.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput("tolerances and step bounds must be positive".into()));
        }
        if !(self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(Error::InvalidInput("require h_min <= h_init <= h_max".into()));
        }
        if let Method::Rk4 { step } = self.method {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidInput("RK4 step must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub step_stats: StepStats,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory is never empty")
    }

    /// CSV with header `t,x1,...,xn`, one row per stored state.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.states.first().map_or(0, |s| s.len());
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=n).map(|i| format!("x{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let row: Vec<String> = std::iter::once(csv_number(*t)).chain(x.iter().copied().map(csv_number)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Shortest round-trip decimal, in exponent form outside `[1e-4, 1e15)`.
pub fn csv_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

// Dormand-Prince 5(4) tableau; the field is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const ERR_ORDER: f64 = 5.0;
const PI_ALPHA: f64 = 0.7 / ERR_ORDER;
const PI_BETA: f64 = 0.4 / ERR_ORDER;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// Integrates `y' = f(y)` from `t = 0` to `t_end >= 0`, calling `observe` on
/// every accepted state (including the initial one).
pub(crate) fn solve<F, O>(
    mut f: F,
    y0: &[f64],
    t_end: f64,
    settings: &ToleranceSettings,
    mut observe: O,
) -> Result<(Vec<f64>, StepStats)>
where
    F: FnMut(&[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    settings.validate()?;
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!("integration time must be finite and non-negative, got {t_end}")));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState(0.0));
    }
    observe(0.0, y0);
    match settings.method {
        Method::DormandPrince => dopri(&mut f, y0, t_end, settings, &mut observe),
        Method::Rk4 { step } => rk4(&mut f, y0, t_end, step, settings.max_steps, &mut observe),
    }
}

fn dopri<F, O>(
    f: &mut F,
    y0: &[f64],
    t_end: f64,
    s: &ToleranceSettings,
    observe: &mut O,
) -> Result<(Vec<f64>, StepStats)>
where
    F: FnMut(&[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    let d = y0.len();
    let mut stats = StepStats::default();
    let mut y = y0.to_vec();
    if t_end == 0.0 {
        return Ok((y, stats));
    }
    let mut k = vec![vec![0.0; d]; 7];
    let mut ytmp = vec![0.0; d];
    let mut ynew = vec![0.0; d];
    f(&y, &mut k[0]);

    let mut t = 0.0;
    let mut h = s.h_init.min(t_end);
    let mut err_prev: f64 = 1e-4;
    let mut last_rejected = false;

    while t < t_end {
        if stats.accepted + stats.rejected >= s.max_steps {
            return Err(Error::MaxStepsExceeded(s.max_steps));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        for stage in 1..7 {
            for i in 0..d {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    acc += A[stage][j] * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            f(&ytmp, &mut k[stage]);
        }
        // stage 7 was evaluated at the fifth-order solution
        ynew.copy_from_slice(&ytmp);

        let mut err_sq = 0.0;
        let mut finite = true;
        for i in 0..d {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = s.abs_tol + s.rel_tol * y[i].abs().max(ynew[i].abs());
            err_sq += (e / sc).powi(2);
            finite &= ynew[i].is_finite() && e.is_finite();
        }
        let err = if finite { (err_sq / d as f64).sqrt() } else { f64::INFINITY };

        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            stats.accepted += 1;
            observe(t, &y);
            let mut fac = if err == 0.0 {
                FAC_MAX
            } else {
                SAFETY * err.powf(-PI_ALPHA) * err_prev.powf(PI_BETA)
            };
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_prev = err.max(1e-4);
            last_rejected = false;
            h = (h * fac).min(s.h_max);
        } else {
            stats.rejected += 1;
            last_rejected = true;
            let fac = if err.is_finite() { (SAFETY * err.powf(-1.0 / ERR_ORDER)).max(FAC_MIN) } else { FAC_MIN };
            h *= fac;
            if h < s.h_min {
                return Err(if finite { Error::StepUnderflow { t, h } } else { Error::NonFiniteState(t) });
            }
        }
    }
    Ok((y, stats))
}

fn rk4<F, O>(
    f: &mut F,
    y0: &[f64],
    t_end: f64,
    step: f64,
    max_steps: usize,
    observe: &mut O,
) -> Result<(Vec<f64>, StepStats)>
where
    F: FnMut(&[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    let d = y0.len();
    let mut y = y0.to_vec();
    let mut stats = StepStats::default();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tmp = vec![0.0; d];
    let mut t = 0.0;
    while t < t_end {
        if stats.accepted >= max_steps {
            return Err(Error::MaxStepsExceeded(max_steps));
        }
        let h = step.min(t_end - t);
        f(&y, &mut k1);
        tmp.iter_mut().zip(&y).zip(&k1).for_each(|((o, y), k)| *o = y + 0.5 * h * k);
        f(&tmp, &mut k2);
        tmp.iter_mut().zip(&y).zip(&k2).for_each(|((o, y), k)| *o = y + 0.5 * h * k);
        f(&tmp, &mut k3);
        tmp.iter_mut().zip(&y).zip(&k3).for_each(|((o, y), k)| *o = y + h * k);
        f(&tmp, &mut k4);
        for i in 0..d {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t = if t + h >= t_end { t_end } else { t + h };
        stats.accepted += 1;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState(t));
        }
        observe(t, &y);
    }
    Ok((y, stats))
}

fn check_state(field: &VectorField, x: &[f64]) -> Result<()> {
    if x.len() != field.dim() {
        return Err(Error::InvalidInput(format!(
            "state has length {}, system dimension is {}",
            x.len(),
            field.dim()
        )));
    }
    Ok(())
}

/// Trajectory of `x' = X(x)` over `[0, t_end]`, one state per accepted step.
pub fn integrate(field: &VectorField, x0: &[f64], t_end: f64, settings: &ToleranceSettings) -> Result<Trajectory> {
    check_state(field, x0)?;
    if !(t_end > 0.0) {
        return Err(Error::InvalidInput("t_end must be positive".into()));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    let (_, step_stats) = solve(
        |y, dy| field.eval_into(y, dy),
        x0,
        t_end,
        settings,
        |t, y| {
            times.push(t);
            states.push(StateVector::from_row_slice(y));
        },
    )?;
    Ok(Trajectory { times, states, step_stats })
}

/// Time-`t` flow map `phi_t(x)`. Negative times integrate the negated field.
pub fn flow(field: &VectorField, x: &[f64], t: f64, settings: &ToleranceSettings) -> Result<StateVector> {
    check_state(field, x)?;
    if t < 0.0 {
        return flow(&field.negated(), x, -t, settings);
    }
    let (y, _) = solve(|y, dy| field.eval_into(y, dy), x, t, settings, |_, _| {})?;
    Ok(StateVector::from_vec(y))
}

/// `phi_t(x)` together with `D phi_t(x)`, from the augmented system
/// `x' = X(x)`, `M' = DX(x) M`, `M(0) = I`, integrated under one step control.
pub fn flow_and_monodromy(
    field: &VectorField,
    x: &[f64],
    t: f64,
    settings: &ToleranceSettings,
) -> Result<(StateVector, Matrix)> {
    check_state(field, x)?;
    if t < 0.0 {
        return flow_and_monodromy(&field.negated(), x, -t, settings);
    }
    let n = field.dim();
    let mut y0 = Vec::with_capacity(n + n * n);
    y0.extend_from_slice(x);
    y0.extend(Matrix::identity(n, n).iter());
    let mut jac = Matrix::zeros(n, n);
    let rhs = |y: &[f64], dy: &mut [f64]| {
        let (xs, ms) = y.split_at(n);
        let (dx, dm) = dy.split_at_mut(n);
        field.eval_into(xs, dx);
        jacobian_into(field, xs, &mut jac);
        // column-major n x n products
        for c in 0..n {
            let mcol = &ms[c * n..(c + 1) * n];
            for r in 0..n {
                let mut acc = 0.0;
                for kk in 0..n {
                    acc += jac[(r, kk)] * mcol[kk];
                }
                dm[c * n + r] = acc;
            }
        }
    };
    let (y, _) = solve(rhs, &y0, t, settings, |_, _| {})?;
    let state = StateVector::from_row_slice(&y[..n]);
    let m = Matrix::from_column_slice(n, n, &y[n..]);
    Ok((state, m))
}

/// Monodromy matrix `D phi_T(x)`.
pub fn monodromy(field: &VectorField, x: &[f64], t: f64, settings: &ToleranceSettings) -> Result<Matrix> {
    Ok(flow_and_monodromy(field, x, t, settings)?.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub name: String,
    pub max_drift: f64,
}

/// `max_t |Q(x_t) - Q(x_0)|` over the stored states, for each quantity.
pub fn drift_report<'a, I>(traj: &Trajectory, quantities: I) -> Vec<Drift>
where
    I: IntoIterator<Item = &'a ConservedQuantity>,
{
    let first = traj.states.first().expect("trajectory is never empty");
    quantities
        .into_iter()
        .map(|q| {
            let q0 = q.eval(first.as_slice());
            let max_drift = traj
                .states
                .iter()
                .map(|x| (q.eval(x.as_slice()) - q0).abs())
                .fold(0.0, f64::max);
            Drift { name: q.name().to_string(), max_drift }
        })
        .collect()
}
