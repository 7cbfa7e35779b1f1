use orbitkit::calculus::{hessian_exact, jacobian_exact};
use orbitkit::spectral::{
    constraint_tangent_space, eigen, imaginary_pairs, kernel, restrict_to, restricted_hessian, subspace_equal,
    symmetric_spectrum, SubspaceBasis,
};
use orbitkit::system::{build_clebsch, build_rigid_body, ClebschParams, RigidBodyParams};
use orbitkit::{Matrix, StateVector};
use proptest::prelude::*;

fn square(n: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-3.0..3.0f64, n * n).prop_map(move |v| Matrix::from_row_slice(n, n, &v))
}

/// Orthogonal factor of a QR decomposition of a random matrix.
fn rotation(n: usize) -> impl Strategy<Value = Matrix> {
    square(n).prop_filter_map("singular sample", |m| {
        let qr = m.qr();
        let r = qr.r();
        if (0..r.nrows()).any(|i| r[(i, i)].abs() < 1e-3) {
            None
        } else {
            Some(qr.q())
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn real_spectra_are_closed_under_conjugation(m in (2usize..7).prop_flat_map(square)) {
        let eig = eigen(&m).unwrap().eigenvalues;
        for l in &eig {
            let best = eig.iter().map(|o| (o - l.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(best < 1e-10 * m.amax().max(1.0), "{l} has no conjugate partner in {eig:?}");
        }
    }

    #[test]
    fn kernel_is_self_consistent(m in (2usize..6).prop_flat_map(square), drop in 0usize..2) {
        // force a rank deficiency by repeating a row
        let mut m = m;
        if m.nrows() > 2 {
            let r = m.row(0).into_owned();
            m.set_row(1 + drop, &r);
        }
        let k = kernel(&m, 1e-10);
        prop_assert!(subspace_equal(&k, &k, 1e-12));
        for v in k.vectors() {
            prop_assert!((&m * v).amax() < 1e-9 * m.amax().max(1.0));
        }
    }

    #[test]
    fn restricted_spectrum_is_basis_independent(
        (h, grads, q) in (4usize..7, 0usize..3).prop_flat_map(|(n, k)| (
            square(n).prop_map(|m| &m + m.transpose()),
            proptest::collection::vec(proptest::collection::vec(-2.0..2.0f64, n), k),
            rotation(n - k),
        ))
    ) {
        let n = h.nrows();
        let grads: Vec<StateVector> = grads.into_iter().map(StateVector::from_vec).collect();
        let Ok(w) = constraint_tangent_space(n, &grads, 1e-10) else { return Ok(()); };
        let base = restricted_hessian(&h, &grads).unwrap();
        prop_assert_eq!(&base, &base.transpose());
        let rotated = restrict_to(&h, &SubspaceBasis::from_orthonormal(w.matrix() * &q));
        let (a, b) = (symmetric_spectrum(&base), symmetric_spectrum(&rotated));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10 * h.amax().max(1.0), "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn rigid_body_eigenvalues_over_parameter_grid() {
    for a2 in [-2.0, -1.0, -0.5] {
        for gain in [0.5, 1.0, 2.0] {
            for m in [0.5, 1.0, 2.0] {
                let b = build_rigid_body(RigidBodyParams::new(1.0, a2, 2.0, 2.0 - gain).unwrap()).unwrap();
                let e = b.equilibrium("e1", m).unwrap();
                let eig = eigen(&jacobian_exact(&b.system, e.as_slice())).unwrap();
                let w = imaginary_pairs(&eig, 1e-8);
                let expected = m * (-a2 * gain).sqrt();
                assert_eq!(w.len(), 1);
                assert!((w[0] - expected).abs() < 1e-9 * expected, "a2 {a2}, gain {gain}, M {m}");
                assert_eq!(eig.zero_count(), 1);
            }
        }
    }
}

#[test]
fn clebsch_restricted_hessian_is_diagonal_in_coordinates() {
    let b = build_clebsch(ClebschParams::new(1.0, 2.0, 3.0).unwrap()).unwrap();
    let e = b.equilibrium("e1", 1.0).unwrap();
    let grads: Vec<StateVector> = b
        .constraints
        .iter()
        .map(|c| orbitkit::calculus::gradient_exact(c, e.as_slice()))
        .collect();
    let r = restricted_hessian(&hessian_exact(&b.integral, e.as_slice()), &grads).unwrap();
    let s = symmetric_spectrum(&r);
    let expected = [1.0, 1.0, 1.0, 2.0];
    for (x, y) in s.iter().zip(expected) {
        assert!((x - y).abs() < 1e-14, "{s:?}");
    }
}
