//! Clebsch system `x' = x × p`, `p'_i = (a_k - a_j) x_j x_k` (cyclic),
//! state ordered `(x1, x2, x3, p1, p2, p3)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ConservedQuantity, EquilibriumFamily, Polynomial, Role, SystemBundle, VectorField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClebschParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl ClebschParams {
    /// Pairwise distinct, strictly positive parameters.
    pub fn new(a1: f64, a2: f64, a3: f64) -> Result<Self> {
        let p = Self::relaxed(a1, a2, a3)?;
        if a1 <= 0.0 || a2 <= 0.0 || a3 <= 0.0 {
            return Err(Error::InvalidInput("Clebsch parameters must be positive".into()));
        }
        Ok(p)
    }

    /// Any pairwise distinct finite reals; the bundle is flagged when the
    /// parameters fall outside the positive regime.
    pub fn relaxed(a1: f64, a2: f64, a3: f64) -> Result<Self> {
        if ![a1, a2, a3].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("Clebsch parameters must be finite".into()));
        }
        if a1 == a2 || a2 == a3 || a1 == a3 {
            return Err(Error::InvalidInput("Clebsch parameters must be pairwise distinct".into()));
        }
        Ok(Self { a1, a2, a3 })
    }

    pub fn in_positive_regime(&self) -> bool {
        self.a1 > 0.0 && self.a2 > 0.0 && self.a3 > 0.0
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a1, self.a2, self.a3]
    }
}

/// Builds the Clebsch bundle with constraints `C = |x|^2 / 2`, `D = x . p`
/// and integral `F_{a1} = H - a1 C`.
pub fn build_clebsch(params: ClebschParams) -> Result<SystemBundle> {
    let checked = ClebschParams::relaxed(params.a1, params.a2, params.a3)?;
    let a = checked.as_array();
    let n = 6;
    let m = |c: f64, e: [u32; 6]| Polynomial::monomial(c, &e);
    let field = VectorField::new(vec![
        m(1.0, [0, 1, 0, 0, 0, 1]).add(&m(-1.0, [0, 0, 1, 0, 1, 0])),
        m(1.0, [0, 0, 1, 1, 0, 0]).add(&m(-1.0, [1, 0, 0, 0, 0, 1])),
        m(1.0, [1, 0, 0, 0, 1, 0]).add(&m(-1.0, [0, 1, 0, 1, 0, 0])),
        m(a[2] - a[1], [0, 1, 1, 0, 0, 0]),
        m(a[0] - a[2], [1, 0, 1, 0, 0, 0]),
        m(a[1] - a[0], [1, 1, 0, 0, 0, 0]),
    ])?;

    let c = Polynomial::quadratic(n, &[(0.5, 0, 0), (0.5, 1, 1), (0.5, 2, 2)]);
    let d = Polynomial::quadratic(n, &[(1.0, 0, 3), (1.0, 1, 4), (1.0, 2, 5)]);
    let h = Polynomial::quadratic(
        n,
        &[
            (0.5 * a[0], 0, 0),
            (0.5 * a[1], 1, 1),
            (0.5 * a[2], 2, 2),
            (0.5, 3, 3),
            (0.5, 4, 4),
            (0.5, 5, 5),
        ],
    );
    let f = |j: usize| {
        ConservedQuantity::new(format!("F_a{}", j + 1), h.sub(&c.scale(a[j])), Role::Integral)
    };

    let mut parameters = BTreeMap::new();
    parameters.insert("a1".to_string(), a[0]);
    parameters.insert("a2".to_string(), a[1]);
    parameters.insert("a3".to_string(), a[2]);

    let mut equilibria = BTreeMap::new();
    for j in 0..3 {
        let mut fam = EquilibriumFamily::axis(n, j);
        fam.integral = Some(f(j));
        equilibria.insert(format!("e{}", j + 1), fam);
    }

    let mut bundle = SystemBundle::new(
        "clebsch",
        field,
        vec![
            ConservedQuantity::new("C", c.clone(), Role::Constraint),
            ConservedQuantity::new("D", d, Role::Constraint),
        ],
        f(0),
        parameters,
        equilibria,
    )?;
    bundle
        .notes
        .push("C = (x1^2 + x2^2 + x3^2)/2, so the sphere |x|^2 = M^2 is the level C = M^2/2".into());
    if !checked.in_positive_regime() {
        bundle.notes.push("outside positive regime: parameters not all positive".into());
    }
    Ok(bundle)
}
