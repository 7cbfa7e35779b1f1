//! Eigenvalues, numerical kernels, principal angles, and the Hessian
//! restricted to the common tangent space of the constraints.

use nalgebra::linalg::{Schur, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Matrix, StateVector};

/// Relative singular-value cutoff for kernels and ranks.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-10;
/// Smallest eigenvalue a positive definite matrix must exceed.
pub const DEFAULT_PD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub eigenvalues: Vec<Complex64>,
    pub zero_tolerance: f64,
}

impl EigenData {
    /// Eigenvalues with `|lambda| < zero_tolerance`.
    pub fn zero_count(&self) -> usize {
        self.eigenvalues.iter().filter(|l| l.norm() < self.zero_tolerance).count()
    }
}

/// All eigenvalues of a real square matrix via the real Schur form, ordered by
/// real part then imaginary part.
pub fn eigen(m: &Matrix) -> Result<EigenData> {
    if !m.is_square() {
        return Err(Error::InvalidInput("eigen: matrix must be square".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("eigen: non-finite entry".into()));
    }
    let n = m.nrows();
    let mut eigenvalues: Vec<Complex64> = if n == 0 {
        Vec::new()
    } else {
        let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(Error::EigenNoConvergence)?;
        schur.complex_eigenvalues().iter().copied().collect()
    };
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let scale = m.amax().max(1.0);
    Ok(EigenData { eigenvalues, zero_tolerance: 1e-10 * scale })
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_spectrum(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// An orthonormal basis stored as the columns of an `n x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    basis: Matrix,
}

impl SubspaceBasis {
    /// The columns must already be orthonormal.
    pub fn from_orthonormal(basis: Matrix) -> Self {
        Self { ambient_dim: basis.nrows(), basis }
    }

    pub fn full(n: usize) -> Self {
        Self::from_orthonormal(Matrix::identity(n, n))
    }

    pub fn empty(n: usize) -> Self {
        Self::from_orthonormal(Matrix::zeros(n, 0))
    }

    /// Orthonormal basis of `span{vectors}` (numerical rank at relative `tol`).
    pub fn span(n: usize, vectors: &[StateVector], tol: f64) -> Self {
        if vectors.is_empty() {
            return Self::empty(n);
        }
        let a = Matrix::from_columns(vectors);
        let svd = SVD::new(a, true, false);
        let u = svd.u.expect("u requested");
        let smax = svd.singular_values.max();
        let cols: Vec<StateVector> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, s)| smax > 0.0 && **s > tol * smax)
            .map(|(i, _)| u.column(i).into_owned())
            .collect();
        if cols.is_empty() {
            Self::empty(n)
        } else {
            Self::from_orthonormal(Matrix::from_columns(&cols))
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<StateVector> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }
}

/// Full SVD of an `m x n` matrix with `V` of size `n x n`; wide inputs are
/// padded with zero rows. Returns `(singular values, V^T)` with rows of `V^T`
/// beyond `min(m, n)` belonging to zero singular values.
fn full_right_svd(a: &Matrix) -> (Vec<f64>, Matrix) {
    let (m, n) = a.shape();
    let padded = if m < n {
        let mut p = Matrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    (svd.singular_values.iter().copied().collect(), svd.v_t.expect("v_t requested"))
}

/// Orthonormal basis of the numerical null space `{ v : A v = 0 }`: right
/// singular vectors with `sigma < tol * sigma_max` (all of them when `A = 0`).
pub fn kernel(a: &Matrix, tol: f64) -> SubspaceBasis {
    let n = a.ncols();
    if n == 0 {
        return SubspaceBasis::empty(0);
    }
    let (sv, vt) = full_right_svd(a);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cols: Vec<StateVector> = sv
        .iter()
        .enumerate()
        .filter(|(_, s)| smax == 0.0 || **s < tol * smax)
        .map(|(i, _)| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        SubspaceBasis::empty(n)
    } else {
        SubspaceBasis::from_orthonormal(Matrix::from_columns(&cols))
    }
}

/// Numerical rank of `A` at relative tolerance `tol`.
pub fn rank(a: &Matrix, tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = SVD::new(a.clone(), false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > tol * smax).count()
}

/// Largest principal angle between two subspaces of equal dimension.
///
/// The cosines are the singular values of `A^T B`; the sine is taken from the
/// residual `B - A A^T B` so small angles keep full relative accuracy.
pub fn largest_principal_angle(a: &SubspaceBasis, b: &SubspaceBasis) -> f64 {
    assert_eq!(a.dim(), b.dim(), "principal angles need equal dimensions");
    if a.dim() == 0 {
        return 0.0;
    }
    let atb = a.matrix().transpose() * b.matrix();
    let cos_min = SVD::new(atb.clone(), false, false).singular_values.min().min(1.0);
    let resid = b.matrix() - a.matrix() * atb;
    let sin_max = SVD::new(resid, false, false).singular_values.max().min(1.0);
    sin_max.atan2(cos_min)
}

/// True iff both subspaces have the same dimension and their largest
/// principal angle is below `tol`.
pub fn subspace_equal(a: &SubspaceBasis, b: &SubspaceBasis, tol: f64) -> bool {
    assert_eq!(a.ambient_dim(), b.ambient_dim(), "ambient dimension mismatch");
    a.dim() == b.dim() && largest_principal_angle(a, b) < tol
}

/// One positive `omega` per conjugate pair `+-i omega` with `|Re| < tol` and
/// `|Im| >= tol`, sorted descending and merged when within `tol`.
pub fn imaginary_pairs(eig: &EigenData, tol: f64) -> Vec<f64> {
    let mut omegas: Vec<f64> = eig
        .eigenvalues
        .iter()
        .filter(|l| l.re.abs() < tol && l.im >= tol)
        .map(|l| l.im)
        .collect();
    omegas.sort_by(|a, b| b.total_cmp(a));
    omegas.dedup_by(|a, b| (*a - *b).abs() < tol);
    omegas
}

/// Orthonormal basis of `W = intersection of ker(g_i^T)`.
pub fn constraint_tangent_space(n: usize, grads: &[StateVector], tol: f64) -> Result<SubspaceBasis> {
    let k = grads.len();
    if k == 0 {
        return Ok(SubspaceBasis::full(n));
    }
    if grads.iter().any(|g| g.len() != n) {
        return Err(Error::InvalidInput("constraint gradient has wrong length".into()));
    }
    let g = Matrix::from_rows(&grads.iter().map(|v| v.transpose()).collect::<Vec<_>>());
    let r = rank(&g, tol);
    if r < k {
        return Err(Error::DependentConstraints { rank: r, expected: k });
    }
    let w = kernel(&g, tol);
    debug_assert_eq!(w.dim(), n - k);
    Ok(w)
}

/// `B^T H B` symmetrized, for an orthonormal basis `B`.
pub fn restrict_to(h: &Matrix, basis: &SubspaceBasis) -> Matrix {
    let b = basis.matrix();
    let r = b.transpose() * h * b;
    (&r + r.transpose()) * 0.5
}

/// `d^2 I` restricted to `W = intersection of ker dC_i`.
pub fn restricted_hessian(h: &Matrix, constraint_grads: &[StateVector]) -> Result<Matrix> {
    if !h.is_square() {
        return Err(Error::InvalidInput("Hessian must be square".into()));
    }
    let w = constraint_tangent_space(h.nrows(), constraint_grads, DEFAULT_KERNEL_TOL)?;
    Ok(restrict_to(h, &w))
}

/// Smallest eigenvalue exceeds `tol`; the empty matrix counts as positive definite.
pub fn is_positive_definite(m: &Matrix, tol: f64) -> bool {
    symmetric_spectrum(m).first().is_none_or(|l| *l > tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&StateVector::from_row_slice(v))
    }

    fn e(n: usize, i: usize) -> StateVector {
        let mut v = StateVector::zeros(n);
        v[i] = 1.0;
        v
    }

    fn rigid_jacobian() -> Matrix {
        Matrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0])
    }

    fn clebsch_jacobian() -> Matrix {
        let mut j = Matrix::zeros(6, 6);
        j[(1, 5)] = -1.0;
        j[(2, 4)] = 1.0;
        j[(4, 2)] = -2.0;
        j[(5, 1)] = 1.0;
        j
    }

    #[test]
    fn rigid_body_spectrum() {
        let ev = eigen(&rigid_jacobian()).unwrap();
        assert_eq!(ev.eigenvalues.len(), 3);
        assert_eq!(ev.zero_count(), 1);
        let w = imaginary_pairs(&ev, 1e-8);
        assert_eq!(w.len(), 1);
        assert!((w[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn clebsch_spectrum() {
        let ev = eigen(&clebsch_jacobian()).unwrap();
        assert_eq!(ev.zero_count(), 2);
        let w = imaginary_pairs(&ev, 1e-8);
        assert_eq!(w.len(), 2);
        assert!((w[0] - 2f64.sqrt()).abs() < 1e-14);
        assert!((w[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_spectrum() {
        let ev = eigen(&Matrix::identity(4, 4)).unwrap();
        assert!(ev.eigenvalues.iter().all(|l| *l == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn real_eigenvalues_give_no_pairs() {
        let ev = eigen(&diag(&[1.0, -1.0, 2.0])).unwrap();
        assert!(imaginary_pairs(&ev, 1e-8).is_empty());
    }

    #[test]
    fn rigid_kernel_is_first_axis() {
        let k = kernel(&rigid_jacobian(), DEFAULT_KERNEL_TOL);
        assert_eq!(k.dim(), 1);
        assert!(subspace_equal(&k, &SubspaceBasis::span(3, &[e(3, 0)], 1e-12), 1e-10));
    }

    #[test]
    fn clebsch_kernel_is_x1_p1() {
        let k = kernel(&clebsch_jacobian(), DEFAULT_KERNEL_TOL);
        assert_eq!(k.dim(), 2);
        let span = SubspaceBasis::span(6, &[e(6, 0), e(6, 3)], 1e-12);
        assert!(subspace_equal(&k, &span, 1e-10));
    }

    #[test]
    fn zero_matrix_kernel_is_everything() {
        assert_eq!(kernel(&Matrix::zeros(3, 3), DEFAULT_KERNEL_TOL).dim(), 3);
    }

    #[test]
    fn orthogonal_lines_differ() {
        let a = SubspaceBasis::span(3, &[e(3, 0)], 1e-12);
        let b = SubspaceBasis::span(3, &[e(3, 1)], 1e-12);
        assert!(!subspace_equal(&a, &b, 1e-8));
        assert!((largest_principal_angle(&a, &b) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn small_angle_resolved() {
        let a = SubspaceBasis::span(2, &[e(2, 0)], 1e-12);
        let t: f64 = 1e-9;
        let b = SubspaceBasis::span(2, &[StateVector::from_vec(vec![t.cos(), t.sin()])], 1e-12);
        assert!((largest_principal_angle(&a, &b) - t).abs() < 1e-20);
    }

    #[test]
    fn clebsch_restricted_hessian() {
        // F_{a1} Hessian at e1 with a = (1, 2, 3)
        let h = diag(&[0.0, 1.0, 2.0, 1.0, 1.0, 1.0]);
        let r = restricted_hessian(&h, &[e(6, 0), e(6, 3)]).unwrap();
        assert_eq!(r.shape(), (4, 4));
        let spec = symmetric_spectrum(&r);
        for (got, want) in spec.iter().zip([1.0, 1.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(is_positive_definite(&r, DEFAULT_PD_TOL));
    }

    #[test]
    fn no_constraints_keeps_hessian_spectrum() {
        let h = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let r = restricted_hessian(&h, &[]).unwrap();
        assert_eq!(symmetric_spectrum(&r), symmetric_spectrum(&h));
    }

    #[test]
    fn dependent_gradients_rejected() {
        let h = Matrix::identity(3, 3);
        let err = restricted_hessian(&h, &[e(3, 0), e(3, 0) * 2.0]).unwrap_err();
        assert_eq!(err, Error::DependentConstraints { rank: 1, expected: 2 });
        let err = restricted_hessian(&h, &[StateVector::zeros(3)]).unwrap_err();
        assert_eq!(err, Error::DependentConstraints { rank: 0, expected: 1 });
    }

    #[test]
    fn positive_definiteness() {
        assert!(is_positive_definite(&diag(&[1.0, 2.0, 1.0, 1.0]), DEFAULT_PD_TOL));
        assert!(!is_positive_definite(&diag(&[1.0, -1.0]), DEFAULT_PD_TOL));
        assert!(is_positive_definite(&Matrix::zeros(0, 0), DEFAULT_PD_TOL));
    }

    #[test]
    fn rank_of_wide_matrix() {
        let g = Matrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(rank(&g, 1e-10), 2);
        let k = kernel(&g, 1e-10);
        assert_eq!(k.dim(), 2);
        assert!((&g * k.matrix()).amax() < 1e-15);
    }
}
