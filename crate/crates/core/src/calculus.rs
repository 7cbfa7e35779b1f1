//! Exact derivatives of polynomial data, with central-difference counterparts
//! kept as independent cross-checks.

use crate::system::{ConservedQuantity, VectorField};
use crate::{Matrix, StateVector};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// `DX(x)` from the term-wise differentiated components.
pub fn jacobian_exact(field: &VectorField, x: &[f64]) -> Matrix {
    let n = field.dim();
    let mut out = Matrix::zeros(n, n);
    jacobian_into(field, x, &mut out);
    out
}

pub(crate) fn jacobian_into(field: &VectorField, x: &[f64], out: &mut Matrix) {
    for (i, row) in field.jacobian_polys().iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            out[(i, j)] = p.eval(x);
        }
    }
}

/// Column-wise central differences `(X(x + h e_j) - X(x - h e_j)) / 2h`.
pub fn jacobian_fd(field: &VectorField, x: &[f64], h: f64) -> Matrix {
    assert!(h > 0.0, "step must be positive");
    let n = field.dim();
    let mut out = Matrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        let col = (field.eval(&xp) - field.eval(&xm)) / (2.0 * h);
        out.set_column(j, &col);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    out
}

pub fn gradient_exact(q: &ConservedQuantity, x: &[f64]) -> StateVector {
    let g = q.gradient_polys();
    StateVector::from_iterator(g.len(), g.iter().map(|p| p.eval(x)))
}

/// Exact Hessian. Each mixed entry is evaluated once and mirrored, so the
/// result is bit-for-bit symmetric.
pub fn hessian_exact(q: &ConservedQuantity, x: &[f64]) -> Matrix {
    let n = q.polynomial().nvars();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = q.hessian_entry(i, j).eval(x);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

pub fn gradient_fd(q: &ConservedQuantity, x: &[f64], h: f64) -> StateVector {
    let n = x.len();
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    StateVector::from_iterator(
        n,
        (0..n).map(|j| {
            xp[j] = x[j] + h;
            xm[j] = x[j] - h;
            let d = (q.eval(&xp) - q.eval(&xm)) / (2.0 * h);
            xp[j] = x[j];
            xm[j] = x[j];
            d
        }),
    )
}

/// Central differences of the exact gradient.
pub fn hessian_fd(q: &ConservedQuantity, x: &[f64], h: f64) -> Matrix {
    let n = x.len();
    let mut out = Matrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        let col = (gradient_exact(q, &xp) - gradient_exact(q, &xm)) / (2.0 * h);
        out.set_column(j, &col);
        xp[j] = x[j];
        xm[j] = x[j];
    }
    out
}
