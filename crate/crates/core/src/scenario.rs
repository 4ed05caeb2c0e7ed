//! Scenario files: a TOML description of the workspace, the shape
//! catalogue, placements, unknown clutter, the robot and run parameters.
//!
//! Shapes are given undilated and in degrees; loading dilates every
//! obstacle by the robot radius and converts angles to radians.
//!
//! ```
//! use starnav::scenario::Scenario;
//!
//! let text = r#"
//! goal = [0.0, 0.0]
//!
//! [workspace]
//! boundary = [[-5.0, -5.0], [5.0, -5.0], [5.0, 5.0], [-5.0, 5.0]]
//!
//! [robot]
//! radius = 0.2
//! start = [3.0, 1.0]
//! sensor_range = 4.0
//! "#;
//! let scenario = Scenario::from_toml_str(text).unwrap();
//! let world = scenario.build_world().unwrap();
//! assert!(world.familiar.is_empty());
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{Integrator, RobotKind, SimParams};
use crate::geom::{ConvexObstacle, ConvexPolygon, Vec2};
use crate::world::{CatalogueEntry, FamiliarObstacle, World, WorldError};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    /// Convex boundary, counter-clockwise.
    pub boundary: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shape {
    pub name: String,
    /// Simple polygon, counter-clockwise, body frame.
    pub vertices: Vec<[f64; 2]>,
    pub star_center: [f64; 2],
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub shape: String,
    /// Rotation in degrees.
    #[serde(default)]
    pub angle: f64,
    /// World position of the star center.
    pub center: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Unknown {
    Disk { center: [f64; 2], radius: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RobotType {
    #[default]
    Full,
    DiffDrive,
}

impl From<RobotType> for RobotKind {
    fn from(r: RobotType) -> Self {
        match r {
            RobotType::Full => RobotKind::Full,
            RobotType::DiffDrive => RobotKind::DiffDrive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Robot {
    pub radius: f64,
    #[serde(default, rename = "type")]
    pub kind: RobotType,
    pub start: [f64; 2],
    /// Initial heading in degrees.
    #[serde(default)]
    pub heading: f64,
    pub sensor_range: f64,
}

/// Overrides of [`SimParams`] defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goal_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_rays: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_virt_factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorName {
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub goal: [f64; 2],
    pub workspace: Workspace,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub catalogue: Vec<Shape>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub placements: Vec<Placement>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unknown: Vec<Unknown>,
    pub robot: Robot,
    #[serde(default)]
    pub params: ParamOverrides,
}

fn v(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

fn vs(ps: &[[f64; 2]]) -> Vec<Vec2> {
    ps.iter().copied().map(v).collect()
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            ScenarioError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn params(&self) -> SimParams {
        let d = SimParams::default();
        let o = &self.params;
        SimParams {
            k: o.k.unwrap_or(d.k),
            p: o.p.unwrap_or(d.p),
            dt_max: o.dt_max.unwrap_or(d.dt_max),
            integrator: match o.integrator {
                Some(IntegratorName::Rk45) => Integrator::Rk45,
                Some(IntegratorName::Rk4) => Integrator::Rk4,
                None => d.integrator,
            },
            t_max: o.t_max.unwrap_or(d.t_max),
            goal_tol: o.goal_tol.unwrap_or(d.goal_tol),
            n_rays: o.n_rays.unwrap_or(d.n_rays),
            r_virt_factor: o.r_virt_factor.unwrap_or(d.r_virt_factor),
            ..d
        }
    }

    pub fn robot_kind(&self) -> RobotKind {
        self.robot.kind.into()
    }

    pub fn start(&self) -> (Vec2, f64) {
        (v(self.robot.start), self.robot.heading.to_radians())
    }

    /// Dilated catalogue entries, in file order.
    pub fn catalogue_entries(&self) -> Result<Vec<CatalogueEntry>, ScenarioError> {
        let p = self.params().p;
        self.catalogue
            .iter()
            .map(|s| {
                CatalogueEntry::new(
                    s.name.clone(),
                    vs(&s.vertices),
                    v(s.star_center),
                    s.epsilon,
                    self.robot.radius,
                    p,
                )
                .map_err(|e| ScenarioError::Invalid(format!("shape `{}`: {e}", s.name)))
            })
            .collect()
    }

    /// Builds the physical world. Does not check the navigation
    /// assumptions; see [`crate::world::validate_assumptions`].
    pub fn build_world(&self) -> Result<World, ScenarioError> {
        let params = self.params();
        if !(params.k > 0.0) || params.p < 2 || params.p % 2 != 0 || !(params.dt_max > 0.0) {
            return Err(ScenarioError::Invalid(
                "params need k > 0, even p ≥ 2 and dt_max > 0".into(),
            ));
        }
        let entries = self.catalogue_entries()?;
        let mut familiar = Vec::with_capacity(self.placements.len());
        for pl in &self.placements {
            let entry = entries
                .iter()
                .find(|e| e.name == pl.shape)
                .ok_or_else(|| WorldError::UnknownShape(pl.shape.clone()))?;
            familiar.push(FamiliarObstacle::new(entry, pl.angle.to_radians(), v(pl.center))?);
        }
        let r = self.robot.radius;
        let unknown = self
            .unknown
            .iter()
            .map(|u| -> Result<ConvexObstacle, ScenarioError> {
                let raw = match u {
                    Unknown::Disk { center, radius } => {
                        if !(*radius > 0.0) {
                            return Err(ScenarioError::Invalid("disk radius must be positive".into()));
                        }
                        ConvexObstacle::Disk {
                            center: v(*center),
                            radius: *radius,
                        }
                    }
                    Unknown::Polygon { vertices } => ConvexObstacle::Polygon(
                        ConvexPolygon::new(vs(vertices)).map_err(WorldError::from)?,
                    ),
                };
                Ok(raw.dilated(r).map_err(WorldError::from)?)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let boundary = ConvexPolygon::new(vs(&self.workspace.boundary)).map_err(WorldError::from)?;
        Ok(World::new(
            boundary,
            familiar,
            unknown,
            v(self.goal),
            r,
            self.robot.sensor_range,
        )?)
    }
}
