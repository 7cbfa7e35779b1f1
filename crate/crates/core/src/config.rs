//! Run configuration: JSON documents naming a built-in system or defining a
//! polynomial system inline, plus the equilibrium and solver settings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::CheckTolerances;
use crate::integrate::ToleranceSettings;
use crate::orbits::SolverSettings;
use crate::system::{
    build_clebsch, build_rigid_body, ClebschParams, ConservedQuantity, EquilibriumFamily, Monomial, Polynomial,
    RigidBodyParams, Role, SystemBundle, VectorField,
};
use crate::StateVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantityDef {
    pub name: String,
    pub terms: Vec<Monomial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDef {
    pub direction: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral: Option<QuantityDef>,
}

/// A polynomial system written out term by term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InlineSystem {
    pub name: String,
    pub dimension: usize,
    pub components: Vec<Vec<Monomial>>,
    pub constraints: Vec<QuantityDef>,
    pub integral: QuantityDef,
    pub parameters: BTreeMap<String, f64>,
    pub equilibria: BTreeMap<String, FamilyDef>,
    pub notes: Vec<String>,
}

fn quantity_def(q: &ConservedQuantity) -> QuantityDef {
    QuantityDef { name: q.name().to_string(), terms: q.polynomial().terms().to_vec() }
}

fn quantity(def: &QuantityDef, n: usize, role: Role, field: &str) -> Result<ConservedQuantity> {
    let p = Polynomial::new(n, def.terms.clone())
        .map_err(|e| Error::InvalidInput(format!("config field `{field}`: {}", strip(e))))?;
    Ok(ConservedQuantity::new(def.name.clone(), p, role))
}

impl InlineSystem {
    pub fn from_bundle(bundle: &SystemBundle) -> Self {
        Self {
            name: bundle.name.clone(),
            dimension: bundle.dim(),
            components: bundle.system.components().iter().map(|c| c.terms().to_vec()).collect(),
            constraints: bundle.constraints.iter().map(quantity_def).collect(),
            integral: quantity_def(&bundle.integral),
            parameters: bundle.parameters.clone(),
            equilibria: bundle
                .equilibria
                .iter()
                .map(|(k, f)| {
                    let def = FamilyDef { direction: f.direction.clone(), integral: f.integral.as_ref().map(quantity_def) };
                    (k.clone(), def)
                })
                .collect(),
            notes: bundle.notes.clone(),
        }
    }

    /// Builds the bundle; conservation of every quantity is verified symbolically.
    pub fn build(&self) -> Result<SystemBundle> {
        let n = self.dimension;
        if n == 0 {
            return Err(Error::InvalidInput("config field `dimension` must be positive".into()));
        }
        if self.components.len() != n {
            return Err(Error::InvalidInput(format!(
                "config field `components`: expected {n} components, found {}",
                self.components.len()
            )));
        }
        let comps = self
            .components
            .iter()
            .enumerate()
            .map(|(i, terms)| {
                Polynomial::new(n, terms.clone())
                    .map_err(|e| Error::InvalidInput(format!("config field `components[{i}]`: {}", strip(e))))
            })
            .collect::<Result<Vec<_>>>()?;
        let field = VectorField::new(comps)?;
        let constraints = self
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| quantity(c, n, Role::Constraint, &format!("constraints[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let integral = quantity(&self.integral, n, Role::Integral, "integral")?;
        let mut equilibria = BTreeMap::new();
        for (label, def) in &self.equilibria {
            let integral = match &def.integral {
                Some(q) => Some(quantity(q, n, Role::Integral, &format!("equilibria.{label}.integral"))?),
                None => None,
            };
            equilibria.insert(label.clone(), EquilibriumFamily { direction: def.direction.clone(), integral });
        }
        let mut bundle =
            SystemBundle::new(self.name.clone(), field, constraints, integral, self.parameters.clone(), equilibria)?;
        bundle.notes = self.notes.clone();
        Ok(bundle)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumDef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceDef {
    /// Shooting convergence threshold.
    pub orbit: Option<f64>,
    /// Absolute and relative integrator tolerance.
    pub ode: Option<f64>,
    pub max_iter: Option<usize>,
    pub check: Option<CheckTolerances>,
}

/// The on-disk configuration document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<BTreeMap<String, f64>>,
    /// Accept Clebsch parameters outside the positive regime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxed: Option<bool>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Vec<Monomial>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<QuantityDef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral: Option<QuantityDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibria: Option<BTreeMap<String, FamilyDef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<Vec<String>>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_index: Option<usize>,
    /// Starting state for `integrate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<f64>>,
}

impl ConfigFile {
    /// Config document for a bundle written out inline.
    pub fn inline(bundle: &SystemBundle) -> Self {
        let s = InlineSystem::from_bundle(bundle);
        Self {
            name: Some(s.name),
            dimension: Some(s.dimension),
            components: Some(s.components),
            constraints: Some(s.constraints),
            integral: Some(s.integral),
            parameters: Some(s.parameters),
            equilibria: Some(s.equilibria),
            notes: Some(s.notes),
            ..Self::default()
        }
    }
}

/// A configuration resolved against its system.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// The bundle, with its integral switched to the selected family's.
    pub bundle: SystemBundle,
    pub equilibrium: Option<StateVector>,
    pub rigid_body: Option<RigidBodyParams>,
    pub check: CheckTolerances,
    pub solver: SolverSettings,
    pub epsilons: Option<Vec<f64>>,
    pub omega_index: Option<usize>,
    pub initial_state: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        Self::resolve(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn resolve(file: ConfigFile) -> Result<Self> {
        let (bundle, rigid_body) = resolve_system(&file)?;
        let n = bundle.dim();

        let (bundle, equilibrium) = match &file.equilibrium {
            None => (bundle, None),
            Some(eq) => match (&eq.family, eq.m, &eq.coordinates) {
                (Some(label), Some(m), None) => {
                    let e = bundle
                        .equilibrium(label, m)
                        .map_err(|e| Error::InvalidInput(format!("config field `equilibrium`: {}", strip(e))))?;
                    (bundle.focused_on(label)?, Some(e))
                }
                (None, None, Some(x)) => {
                    if x.len() != n || x.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidInput(format!(
                            "config field `equilibrium.coordinates`: expected {n} finite values"
                        )));
                    }
                    (bundle, Some(StateVector::from_row_slice(x)))
                }
                _ => {
                    return Err(Error::InvalidInput(
                        "config field `equilibrium`: give either `family` and `M`, or `coordinates`".into(),
                    ))
                }
            },
        };

        let tol = file.tolerances.clone().unwrap_or_default();
        let mut solver = SolverSettings::default();
        if let Some(t) = tol.orbit {
            if !(t > 0.0) {
                return Err(Error::InvalidInput("config field `tolerances.orbit` must be positive".into()));
            }
            solver.tol_orbit = t;
        }
        if let Some(t) = tol.ode {
            solver.ode = ToleranceSettings { method: solver.ode.method, ..ToleranceSettings::with_tol(t) };
            solver.ode.validate().map_err(|e| Error::InvalidInput(format!("config field `tolerances.ode`: {}", strip(e))))?;
        }
        if let Some(it) = tol.max_iter {
            solver.max_iter = it;
        }

        if let Some(x) = &file.initial_state {
            if x.len() != n || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("config field `initial_state`: expected {n} finite values")));
            }
        }

        Ok(Self {
            bundle,
            equilibrium,
            rigid_body,
            check: tol.check.unwrap_or_default(),
            solver,
            epsilons: file.epsilons,
            omega_index: file.omega_index,
            initial_state: file.initial_state,
        })
    }

    pub fn require_equilibrium(&self) -> Result<&StateVector> {
        self.equilibrium
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("config field `equilibrium` is required".into()))
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::InvalidInput(s) => s,
        other => other.to_string(),
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| Error::InvalidInput(format!("config field `params.{key}` is missing")))
}

fn check_param_keys(params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::InvalidInput(format!("config field `params.{k}` is not recognised"))),
        None => Ok(()),
    }
}

fn resolve_system(file: &ConfigFile) -> Result<(SystemBundle, Option<RigidBodyParams>)> {
    let inline_given = file.dimension.is_some() || file.components.is_some();
    match (&file.system, inline_given) {
        (Some(_), true) => Err(Error::InvalidInput(
            "config: give either `system` or an inline definition, not both".into(),
        )),
        (None, false) => Err(Error::InvalidInput("config field `system` is missing".into())),
        (Some(name), false) => {
            let empty = BTreeMap::new();
            let params = file.params.as_ref().unwrap_or(&empty);
            match name.as_str() {
                "rigid_body" => {
                    check_param_keys(params, &["a1", "a2", "a3", "l"])?;
                    let p = RigidBodyParams::new(
                        param(params, "a1")?,
                        param(params, "a2")?,
                        param(params, "a3")?,
                        param(params, "l")?,
                    )?;
                    Ok((build_rigid_body(p)?, Some(p)))
                }
                "clebsch" => {
                    check_param_keys(params, &["a1", "a2", "a3"])?;
                    let (a1, a2, a3) = (param(params, "a1")?, param(params, "a2")?, param(params, "a3")?);
                    let p = if file.relaxed.unwrap_or(false) {
                        ClebschParams::relaxed(a1, a2, a3)?
                    } else {
                        ClebschParams::new(a1, a2, a3)?
                    };
                    Ok((build_clebsch(p)?, None))
                }
                other => Err(Error::InvalidInput(format!(
                    "config field `system`: unknown system `{other}` (expected rigid_body or clebsch)"
                ))),
            }
        }
        (None, true) => {
            let missing = |f: &str| Error::InvalidInput(format!("config field `{f}` is missing"));
            let inline = InlineSystem {
                name: file.name.clone().unwrap_or_else(|| "inline".into()),
                dimension: file.dimension.ok_or_else(|| missing("dimension"))?,
                components: file.components.clone().ok_or_else(|| missing("components"))?,
                constraints: file.constraints.clone().unwrap_or_default(),
                integral: file.integral.clone().ok_or_else(|| missing("integral"))?,
                parameters: file.parameters.clone().unwrap_or_default(),
                equilibria: file.equilibria.clone().unwrap_or_default(),
                notes: file.notes.clone().unwrap_or_default(),
            };
            Ok((inline.build()?, None))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RIGID: &str = r#"{"system": "rigid_body", "params": {"a1": 1, "a2": -1, "a3": 2, "l": 1},
        "equilibrium": {"family": "e1", "M": 1.0}}"#;

    #[test]
    fn builtin_rigid_body() {
        let c = RunConfig::from_json(RIGID).unwrap();
        assert_eq!(c.bundle.name, "rigid_body");
        assert_eq!(c.require_equilibrium().unwrap().as_slice(), &[1.0, 0.0, 0.0]);
        assert!(c.rigid_body.is_some());
        assert_eq!(c.bundle.integral.name(), "F_e1");
    }

    #[test]
    fn family_selects_adapted_integral() {
        let c = RunConfig::from_json(
            r#"{"system": "clebsch", "params": {"a1": 3, "a2": 1, "a3": 2}, "equilibrium": {"family": "e2", "M": 1}}"#,
        )
        .unwrap();
        assert_eq!(c.bundle.integral.name(), "F_a2");
    }

    #[test]
    fn zero_m_rejected() {
        let err = RunConfig::from_json(&RIGID.replace("1.0}", "0.0}")).unwrap_err();
        assert!(err.to_string().contains("M must be nonzero"), "{err}");
    }

    #[test]
    fn missing_and_unknown_fields_are_named() {
        let err = RunConfig::from_json(r#"{"system": "rigid_body", "params": {"a1": 1, "a2": -1, "a3": 2}}"#).unwrap_err();
        assert!(err.to_string().contains("params.l"), "{err}");
        let err = RunConfig::from_json(r#"{"system": "rigid_body", "bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = RunConfig::from_json(r#"{"system": "pendulum"}"#).unwrap_err();
        assert!(err.to_string().contains("pendulum"), "{err}");
    }

    #[test]
    fn alpha_undefined_propagates() {
        let err = RunConfig::from_json(r#"{"system": "rigid_body", "params": {"a1": 1, "a2": -1, "a3": 0, "l": 1}}"#)
            .unwrap_err();
        assert_eq!(err, Error::AlphaUndefined);
    }

    #[test]
    fn clebsch_regime_requires_flag() {
        let text = r#"{"system": "clebsch", "params": {"a1": -1, "a2": 2, "a3": 3}}"#;
        assert!(RunConfig::from_json(text).is_err());
        let c = RunConfig::from_json(&text.replace("{\"system\"", "{\"relaxed\": true, \"system\"")).unwrap();
        assert!(c.bundle.notes.iter().any(|n| n.contains("outside positive regime")));
    }

    #[test]
    fn inline_round_trip_rebuilds_bundle() {
        let b = build_clebsch(ClebschParams::new(1.0, 2.0, 3.0).unwrap()).unwrap();
        let text = serde_json::to_string(&ConfigFile::inline(&b)).unwrap();
        let c = RunConfig::from_json(&text).unwrap();
        assert_eq!(c.bundle, b);
    }

    #[test]
    fn inline_non_conserved_integral_fails() {
        let text = r#"{"dimension": 2,
            "components": [[{"coeff": -1, "exps": [0, 1]}], [{"coeff": 1, "exps": [1, 0]}]],
            "integral": {"name": "x", "terms": [{"coeff": 1, "exps": [1, 0]}]}}"#;
        let err = RunConfig::from_json(text).unwrap_err();
        assert!(matches!(err, Error::NotConserved { .. }), "{err}");
    }

    #[test]
    fn inline_bad_exponent_length_names_field() {
        let text = r#"{"dimension": 2,
            "components": [[{"coeff": -1, "exps": [0, 1, 0]}], [{"coeff": 1, "exps": [1, 0]}]],
            "integral": {"name": "x", "terms": []}}"#;
        let err = RunConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("components[0]"), "{err}");
    }

    #[test]
    fn tolerance_overrides() {
        let text = RIGID.replace("\"equilibrium\"", "\"tolerances\": {\"orbit\": 1e-9, \"ode\": 1e-11}, \"equilibrium\"");
        let c = RunConfig::from_json(&text).unwrap();
        assert_eq!(c.solver.tol_orbit, 1e-9);
        assert_eq!(c.solver.ode.abs_tol, 1e-11);
    }
}
