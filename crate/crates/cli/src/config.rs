//! Scenario files: one JSON document per run.

use condex_core::{DVector, EmbeddedPoint, ManifoldTag, Signature, TangentVec};
use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Waypoints this close to the manifold are retracted onto it.
pub const PROJECTION_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SolverKind {
    ClosedForm,
    Shoot,
    Variational,
    Integrate,
    #[default]
    All,
}

impl SolverKind {
    pub fn includes(self, other: SolverKind) -> bool {
        self == SolverKind::All || self == other
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    /// Constant field on Eᵐ.
    Constant { c: Vec<f64> },
    /// `A(y) = By + c` on Eᵐ, `b` given row by row.
    Affine { b: Vec<Vec<f64>>, c: Vec<f64> },
    /// `β·(−x₂, x₁, 0) + γ·((0,0,1) − x₃x)` on S² or H².
    Symmetric { beta: f64, gamma: f64 },
    /// `A(x) = x·g` on S³.
    LeftInvariant { generator: [f64; 3] },
    /// Group prior with generator `a_l`, interpolated through every waypoint.
    GroupGenerator { a_l: [f64; 3] },
    /// As `group_generator`, with the generator fitted to the waypoints.
    FitGroupGenerator {
        #[serde(default)]
        init: [f64; 3],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    /// Samples per segment for closed forms and the discrete optimizer.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Integration step.
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_n() -> usize {
    400
}

fn default_step() -> f64 {
    1e-3
}

fn default_starts() -> usize {
    4
}

impl Default for Grid {
    fn default() -> Self {
        Grid { n: default_n(), step: default_step() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// `"S2"`, `"H2"`, `"S3"` or `"E<m>"`.
    pub manifold: String,
    pub prior: PriorSpec,
    #[serde(default)]
    pub waypoints: Vec<Waypoint>,
    /// Velocity at the first waypoint, for initial-value runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_velocity: Option<Vec<f64>>,
    /// Length of the initial-value run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub seed: u64,
    /// Shooting starts per segment.
    #[serde(default = "default_starts")]
    pub starts: usize,
    /// Also solve and report the time-reversed problem.
    #[serde(default)]
    pub reverse: bool,
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub manifold: ManifoldTag,
    pub waypoints: Vec<(f64, EmbeddedPoint)>,
    pub initial: Option<(EmbeddedPoint, TangentVec)>,
    pub warnings: Vec<String>,
}

pub fn parse_manifold(s: &str) -> Option<ManifoldTag> {
    match s {
        "S2" => Some(ManifoldTag::SpaceForm(Signature::Sphere)),
        "H2" => Some(ManifoldTag::SpaceForm(Signature::Hyperbolic)),
        "S3" => Some(ManifoldTag::UnitQuaternions),
        _ => s.strip_prefix('E').and_then(|m| m.parse().ok()).filter(|&m| m > 0).map(ManifoldTag::Euclidean),
    }
}

impl ScenarioConfig {
    /// Parse a scenario document; `path` only labels errors.
    pub fn from_json(path: &str, text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse { path: path.to_string(), line: e.line(), column: e.column(), message: e.to_string() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(self).expect("scenario serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(self, path: &str) -> CliResult<Scenario> {
        let manifold = parse_manifold(&self.manifold).ok_or_else(|| CliError::config(path, format!("unknown manifold {:?}", self.manifold)))?;
        let dim = manifold.ambient_dim();
        let mut warnings = Vec::new();
        if self.grid.n < 2 || !(self.grid.step > 0.0) {
            return Err(CliError::config(path, "grid needs n ≥ 2 and a positive step"));
        }
        let mut waypoints = Vec::with_capacity(self.waypoints.len());
        for (k, w) in self.waypoints.iter().enumerate() {
            if w.x.len() != dim {
                return Err(CliError::config(path, format!("waypoints[{k}]: expected {dim} coordinates, found {}", w.x.len())));
            }
            if !w.t.is_finite() || w.x.iter().any(|v| !v.is_finite()) {
                return Err(CliError::config(path, format!("waypoints[{k}]: non-finite value")));
            }
            if let Some((prev, _)) = waypoints.last() {
                if !(w.t > *prev) {
                    return Err(CliError::config(path, format!("waypoints[{k}]: times must increase strictly")));
                }
            }
            let raw = DVector::from_column_slice(&w.x);
            let point = match EmbeddedPoint::new(manifold, raw.clone()) {
                Ok(p) => p,
                Err(_) => {
                    let violation = manifold.constraint_violation(&raw);
                    let upper = manifold != ManifoldTag::SpaceForm(Signature::Hyperbolic) || raw[2] > 0.0;
                    if !(violation <= PROJECTION_TOL) || !upper {
                        return Err(CliError::config(path, format!("waypoints[{k}] is off {manifold} (violation {violation:.3e})")));
                    }
                    let msg = format!("waypoints[{k}] projected onto {manifold} (violation {violation:.3e})");
                    warn!("{msg}");
                    warnings.push(msg);
                    EmbeddedPoint::projected(manifold, raw).map_err(|e| CliError::config(path, format!("waypoints[{k}]: {e}")))?
                }
            };
            waypoints.push((w.t, point));
        }
        let initial = match (&self.initial_velocity, self.horizon) {
            (None, None) => None,
            (Some(v), Some(h)) => {
                let Some((_, x0)) = waypoints.first() else {
                    return Err(CliError::config(path, "initial_velocity needs a first waypoint"));
                };
                if v.len() != dim || v.iter().any(|c| !c.is_finite()) {
                    return Err(CliError::config(path, format!("initial_velocity: expected {dim} finite coordinates")));
                }
                if !(h > 0.0) {
                    return Err(CliError::config(path, "horizon must be positive"));
                }
                let raw = DVector::from_column_slice(v);
                let v0 = match TangentVec::new(x0.clone(), raw.clone()) {
                    Ok(v0) => v0,
                    Err(_) => {
                        let projected = TangentVec::projected(x0.clone(), &raw);
                        let off = (&raw - &projected.vec).norm() / (1.0 + raw.norm());
                        if !(off <= PROJECTION_TOL) {
                            return Err(CliError::config(path, format!("initial_velocity is not tangent (normal part {off:.3e})")));
                        }
                        let msg = format!("initial_velocity projected onto the tangent plane (normal part {off:.3e})");
                        warn!("{msg}");
                        warnings.push(msg);
                        projected
                    }
                };
                Some((x0.clone(), v0))
            }
            _ => return Err(CliError::config(path, "initial_velocity and horizon go together")),
        };
        if waypoints.len() < 2 && initial.is_none() {
            return Err(CliError::config(path, "need two waypoints or an initial velocity with a horizon"));
        }
        check_prior(path, &self.prior, manifold)?;
        Ok(Scenario { config: self, manifold, waypoints, initial, warnings })
    }
}

fn check_prior(path: &str, prior: &PriorSpec, manifold: ManifoldTag) -> CliResult<()> {
    let ok = match (prior, manifold) {
        (PriorSpec::Constant { c }, ManifoldTag::Euclidean(m)) => c.len() == m,
        (PriorSpec::Affine { b, c }, ManifoldTag::Euclidean(m)) => c.len() == m && b.len() == m && b.iter().all(|r| r.len() == m),
        (PriorSpec::Symmetric { .. }, ManifoldTag::SpaceForm(_)) => true,
        (PriorSpec::LeftInvariant { .. } | PriorSpec::GroupGenerator { .. } | PriorSpec::FitGroupGenerator { .. }, ManifoldTag::UnitQuaternions) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::config(path, format!("prior {prior:?} does not fit {manifold}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = r#"{
  "name": "t",
  "manifold": "S2",
  "prior": { "kind": "symmetric", "beta": -1.0, "gamma": 0.0 },
  "waypoints": [ { "t": 0.0, "x": [1, 0, 0] }, { "t": 1.0, "x": [0, 1, 0] } ]
}"#;

    #[test]
    fn defaults_and_hash() {
        let c = ScenarioConfig::from_json("t.json", MIN).unwrap();
        assert_eq!(c.grid, Grid { n: 400, step: 1e-3 });
        assert_eq!(c.solver, SolverKind::All);
        assert_eq!(c.hash().len(), 64);
        let again = ScenarioConfig::from_json("t.json", &c.to_json()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
        let mut other = c.clone();
        other.seed = 1;
        assert_ne!(other.hash(), c.hash());
    }

    #[test]
    fn parse_errors_carry_lines() {
        let broken = MIN.replace("\"beta\": -1.0", "\"beta\": oops");
        match ScenarioConfig::from_json("t.json", &broken) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let unknown = MIN.replace("\"name\"", "\"nmae\"");
        assert!(matches!(ScenarioConfig::from_json("t.json", &unknown), Err(CliError::Parse { line: 2, .. })));
    }

    #[test]
    fn manifolds() {
        assert_eq!(parse_manifold("E4"), Some(ManifoldTag::Euclidean(4)));
        assert_eq!(parse_manifold("H2"), Some(ManifoldTag::SpaceForm(Signature::Hyperbolic)));
        assert_eq!(parse_manifold("E0"), None);
        assert_eq!(parse_manifold("T2"), None);
    }

    #[test]
    fn waypoint_projection_window() {
        let near = MIN.replace("[0, 1, 0]", "[0, 1.0004, 0]");
        let s = ScenarioConfig::from_json("t.json", &near).unwrap().validate("t.json").unwrap();
        assert_eq!(s.warnings.len(), 1);
        assert!((s.waypoints[1].1.coords().norm() - 1.0).abs() < 1e-15);
        let far = MIN.replace("[0, 1, 0]", "[0, 1.01, 0]");
        assert!(matches!(ScenarioConfig::from_json("t.json", &far).unwrap().validate("t.json"), Err(CliError::Config { .. })));
        let backwards = MIN.replace("\"t\": 1.0", "\"t\": 0.0");
        assert!(ScenarioConfig::from_json("t.json", &backwards).unwrap().validate("t.json").is_err());
    }

    #[test]
    fn prior_must_fit_manifold() {
        let wrong = MIN.replace("\"S2\"", "\"S3\"");
        assert!(ScenarioConfig::from_json("t.json", &wrong).unwrap().validate("t.json").is_err());
    }
}
