//! Physical layer, simulated range sensor, recognition oracle, and the
//! mapped and model layers built from sensor data.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::geom::{
    polygon_signed_distance, ray_cast, ConvexObstacle, ConvexPolygon, GeomError, PolygonRef,
    RayTarget, Vec2,
};
use crate::implicit::{ImplicitError, ObstacleTree, PlacedObstacle};

/// A catalogued star-shaped shape, stored already dilated by the robot radius.
#[derive(Debug, Clone)]
pub struct CatalogueEntry {
    pub name: String,
    /// Body-frame shape before dilation, kept for rendering.
    pub raw_vertices: Vec<Vec2>,
    pub tree: Arc<ObstacleTree>,
    pub epsilon: f64,
}

impl CatalogueEntry {
    /// Dilates `raw_vertices` by `robot_radius` and builds the obstacle tree.
    pub fn new(
        name: impl Into<String>,
        raw_vertices: Vec<Vec2>,
        star_center: Vec2,
        epsilon: f64,
        robot_radius: f64,
        p: u32,
    ) -> Result<Self, WorldError> {
        if !(epsilon > 0.0) {
            return Err(WorldError::InvalidParameter("epsilon must be positive"));
        }
        let dilated = crate::geom::dilate_polygon(&raw_vertices, robot_radius)?;
        let tree = ObstacleTree::build(&dilated, star_center, p)?;
        tree.choose_rho()?;
        Ok(CatalogueEntry {
            name: name.into(),
            raw_vertices,
            tree: Arc::new(tree),
            epsilon,
        })
    }

    /// Dilated body-frame vertices.
    pub fn vertices(&self) -> &[Vec2] {
        self.tree.vertices()
    }

    pub fn star_center(&self) -> Vec2 {
        self.tree.star_center()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Implicit(#[from] ImplicitError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("unknown catalogue entry `{0}`")]
    UnknownShape(String),
}

/// A placed instance of a catalogue entry.
#[derive(Debug, Clone)]
pub struct FamiliarObstacle {
    pub name: String,
    pub placed: PlacedObstacle,
    /// Dilated world-frame vertices.
    pub vertices: Vec<Vec2>,
    /// Undilated world-frame vertices.
    pub raw_vertices: Vec<Vec2>,
}

impl FamiliarObstacle {
    pub fn new(entry: &CatalogueEntry, angle: f64, center: Vec2) -> Result<Self, WorldError> {
        let placed = PlacedObstacle::new(entry.tree.clone(), angle, center, entry.epsilon)?;
        let vertices = placed.world_vertices();
        let raw_vertices = entry.raw_vertices.iter().map(|&b| placed.to_world(b)).collect();
        Ok(FamiliarObstacle {
            name: entry.name.clone(),
            placed,
            vertices,
            raw_vertices,
        })
    }
}

/// Ground truth, in coordinates where the robot is a point (every obstacle
/// dilated by the robot radius).
#[derive(Debug, Clone)]
pub struct World {
    /// Workspace boundary, undilated.
    pub boundary: ConvexPolygon,
    pub familiar: Vec<FamiliarObstacle>,
    /// Unknown convex obstacles, dilated.
    pub unknown: Vec<ConvexObstacle>,
    pub goal: Vec2,
    pub robot_radius: f64,
    pub sensor_range: f64,
    free_boundary: ConvexPolygon,
}

impl World {
    pub fn new(
        boundary: ConvexPolygon,
        familiar: Vec<FamiliarObstacle>,
        unknown: Vec<ConvexObstacle>,
        goal: Vec2,
        robot_radius: f64,
        sensor_range: f64,
    ) -> Result<Self, WorldError> {
        if !(robot_radius >= 0.0) {
            return Err(WorldError::InvalidParameter("robot radius must be non-negative"));
        }
        if !(sensor_range > 0.0) {
            return Err(WorldError::InvalidParameter("sensor range must be positive"));
        }
        let free_boundary = boundary.eroded(robot_radius)?;
        Ok(World {
            boundary,
            familiar,
            unknown,
            goal,
            robot_radius,
            sensor_range,
            free_boundary,
        })
    }

    /// An empty square workspace `[-half, half]²`.
    pub fn empty(half: f64, goal: Vec2, sensor_range: f64) -> Self {
        World::new(
            ConvexPolygon::rectangle(-half, -half, half, half),
            vec![],
            vec![],
            goal,
            0.0,
            sensor_range,
        )
        .expect("valid empty world")
    }

    /// Workspace boundary eroded by the robot radius.
    pub fn free_boundary(&self) -> &ConvexPolygon {
        &self.free_boundary
    }

    /// Signed clearance of `x` from everything (negative inside an
    /// obstacle or outside the workspace).
    pub fn clearance(&self, x: Vec2) -> f64 {
        let mut c = self.free_boundary.inner_margin(x);
        for f in &self.familiar {
            c = c.min(polygon_signed_distance(x, &f.vertices));
        }
        for u in &self.unknown {
            c = c.min(u.signed_distance(x));
        }
        c
    }

    /// Smallest `β` over every familiar obstacle, `+∞` if there are none.
    pub fn min_beta(&self, x: Vec2) -> f64 {
        self.familiar
            .iter()
            .map(|f| f.placed.beta(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest signed distance to an unknown obstacle, `+∞` if none.
    pub fn unknown_clearance(&self, x: Vec2) -> f64 {
        self.unknown
            .iter()
            .map(|u| u.signed_distance(x))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceId {
    Familiar(usize),
    Unknown(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorHit {
    pub point: Vec2,
    pub source: SourceId,
}

/// `n_rays` evenly spaced range readings from `x`.
///
/// ```
/// use starnav::geom::{ConvexObstacle, Vec2};
/// use starnav::world::{sense, World};
///
/// let mut world = World::empty(10.0, Vec2::ZERO, 5.0);
/// world.unknown.push(ConvexObstacle::Disk { center: Vec2::new(1.0, 0.0), radius: 0.5 });
/// let hits = sense(Vec2::ZERO, &world, 360);
/// assert!((hits[0].point.x - 0.5).abs() < 1e-12);
/// ```
pub fn sense(x: Vec2, world: &World, n_rays: usize) -> Vec<SensorHit> {
    let range = world.sensor_range;
    let mut targets: Vec<&dyn RayTarget> = Vec::new();
    let mut ids: Vec<SourceId> = Vec::new();
    let mut polys: Vec<(PolygonRef<'_>, SourceId)> = Vec::new();
    for (i, f) in world.familiar.iter().enumerate() {
        if f.placed.center.dist(x) - f.placed.bounding_radius() <= range {
            polys.push((PolygonRef(&f.vertices), SourceId::Familiar(i)));
        }
    }
    for (p, id) in &polys {
        targets.push(p);
        ids.push(*id);
    }
    for (i, u) in world.unknown.iter().enumerate() {
        let (c, r) = u.bounding_circle();
        if c.dist(x) - r <= range {
            targets.push(u);
            ids.push(SourceId::Unknown(i));
        }
    }
    if targets.is_empty() {
        return Vec::new();
    }
    (0..n_rays)
        .filter_map(|k| {
            let dir = Vec2::from_angle(2.0 * PI * k as f64 / n_rays as f64);
            ray_cast(x, dir, &targets, range).map(|h| SensorHit {
                point: h.point,
                source: ids[h.target],
            })
        })
        .collect()
}

/// Sensed points from one obstacle during the current sensing cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub source: SourceId,
    pub points: Vec<Vec2>,
}

/// How sensor hits on familiar obstacles are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MapMode {
    /// Recognise familiar obstacles and store them as stars.
    #[default]
    Semantic,
    /// Treat every hit as an unknown fragment.
    Baseline,
}

/// The robot's accumulated knowledge.
#[derive(Debug, Clone, Default)]
pub struct SemanticMap {
    /// Discovered stars, in discovery order. Never shrinks.
    pub stars: Vec<PlacedObstacle>,
    /// Index into `World::familiar` for each star.
    pub star_sources: Vec<usize>,
    /// Fragments from the latest sensing cycle.
    pub fragments: Vec<Fragment>,
}

impl SemanticMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds familiar obstacle `index` if it is not known yet. Returns true
    /// if the map changed.
    pub fn discover(&mut self, world: &World, index: usize) -> bool {
        if self.star_sources.contains(&index) {
            return false;
        }
        self.stars.push(world.familiar[index].placed.clone());
        self.star_sources.push(index);
        true
    }

    /// Folds one sensing cycle into the map and returns the indices (into
    /// `World::familiar`) of newly discovered obstacles.
    pub fn update(&mut self, hits: &[SensorHit], world: &World, mode: MapMode) -> Vec<usize> {
        let mut discovered = Vec::new();
        let mut fragments: Vec<Fragment> = Vec::new();
        for h in hits {
            let as_fragment = match (mode, h.source) {
                (MapMode::Semantic, SourceId::Familiar(i)) => {
                    if self.discover(world, i) {
                        discovered.push(i);
                    }
                    false
                }
                _ => true,
            };
            if as_fragment {
                match fragments.iter_mut().find(|f| f.source == h.source) {
                    Some(f) => f.points.push(h.point),
                    None => fragments.push(Fragment {
                        source: h.source,
                        points: vec![h.point],
                    }),
                }
            }
        }
        self.fragments = fragments;
        discovered
    }

    /// One disk per star plus the fragments unchanged.
    pub fn model_layer(&self) -> ModelLayer {
        ModelLayer {
            disks: self
                .stars
                .iter()
                .map(|s| ModelDisk {
                    center: s.center,
                    radius: s.rho,
                })
                .collect(),
            fragments: self.fragments.clone(),
        }
    }
}

/// Free-function form of [`SemanticMap::update`].
pub fn update_map(map: &mut SemanticMap, hits: &[SensorHit], world: &World, mode: MapMode) -> Vec<usize> {
    map.update(hits, world, mode)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelDisk {
    pub center: Vec2,
    pub radius: f64,
}

/// Obstacles of the convex model layer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelLayer {
    pub disks: Vec<ModelDisk>,
    pub fragments: Vec<Fragment>,
}

impl ModelLayer {
    pub fn fragment_points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.fragments.iter().flat_map(|f| f.points.iter().copied())
    }
}

/// Assumption checked by [`validate_assumptions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Thickened boundaries of two stars do not overlap.
    BandsDisjoint,
    /// The goal and the unknown obstacles stay clear of every band.
    GoalAndUnknownClear,
    /// `(x − x*)·∇β ≥ δ_min` across each band.
    StarCondition,
    /// Sensor range is at least ten times the largest band width.
    SensorRange,
    /// Every band lies inside the free workspace.
    InsideWorkspace,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Condition::BandsDisjoint => "(a) bands disjoint",
            Condition::GoalAndUnknownClear => "(b) goal and unknown obstacles clear of bands",
            Condition::StarCondition => "(c) star condition",
            Condition::SensorRange => "sensor range",
            Condition::InsideWorkspace => "bands inside workspace",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub condition: Condition,
    /// Familiar obstacle the check refers to, if any.
    pub obstacle: Option<usize>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssumptionReport {
    pub entries: Vec<CheckEntry>,
    /// Sampled `δ` per familiar obstacle.
    pub deltas: Vec<f64>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failed(&self, condition: Condition) -> bool {
        self.entries
            .iter()
            .any(|e| e.condition == condition && !e.passed)
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let who = match e.obstacle {
                Some(i) => format!("obstacle {i}"),
                None => "world".to_string(),
            };
            writeln!(
                f,
                "{:<48} {:<12} {}  {}",
                e.condition.label(),
                who,
                if e.passed { "pass" } else { "FAIL" },
                e.detail
            )?;
        }
        Ok(())
    }
}

/// Minimum accepted sampled value of `(x − x*)·∇β` in a band.
pub const DELTA_MIN: f64 = 1e-3;
/// Rays per star used to sample the band.
pub const BAND_RAYS: usize = 2000;
const BAND_LEVELS: usize = 5;

/// Point on the ray from the star center in direction `dir` where `β = level`.
pub fn level_point(star: &PlacedObstacle, dir: Vec2, level: f64) -> Vec2 {
    let mut lo = 0.0;
    let mut hi = star.bounding_radius() + 2.0 * star.epsilon.max(level.abs()) + 1.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if star.beta(star.center + dir * mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    star.center + dir * (0.5 * (lo + hi))
}

/// Samples of the outer band curve `β = ε`.
pub fn band_curve(star: &PlacedObstacle, n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| level_point(star, Vec2::from_angle(2.0 * PI * k as f64 / n as f64), star.epsilon))
        .collect()
}

/// Checks the separation, goal, star-condition, range and workspace
/// assumptions the navigation guarantees rely on.
pub fn validate_assumptions(world: &World) -> AssumptionReport {
    let mut report = AssumptionReport::default();
    let stars: Vec<&PlacedObstacle> = world.familiar.iter().map(|f| &f.placed).collect();
    let curves: Vec<Vec<Vec2>> = stars.iter().map(|s| band_curve(s, BAND_RAYS)).collect();
    let in_band = |s: &PlacedObstacle, q: Vec2| s.beta(q) <= s.epsilon;

    for i in 0..stars.len() {
        for j in (i + 1)..stars.len() {
            let overlap = curves[i].iter().any(|&q| in_band(stars[j], q))
                || curves[j].iter().any(|&q| in_band(stars[i], q))
                || in_band(stars[j], stars[i].center)
                || in_band(stars[i], stars[j].center);
            report.entries.push(CheckEntry {
                condition: Condition::BandsDisjoint,
                obstacle: Some(i),
                passed: !overlap,
                detail: format!("vs obstacle {j}"),
            });
        }
    }

    for (i, s) in stars.iter().enumerate() {
        let goal_beta = s.beta(world.goal);
        let mut problems = Vec::new();
        if goal_beta <= s.epsilon {
            problems.push(format!("goal inside band (β = {goal_beta:.4})"));
        }
        for (u, obs) in world.unknown.iter().enumerate() {
            let hit = curves[i].iter().any(|&q| obs.signed_distance(q) <= 0.0)
                || obs.boundary_samples(BAND_RAYS).iter().any(|&q| in_band(s, q))
                || obs.signed_distance(s.center) <= 0.0;
            if hit {
                problems.push(format!("unknown obstacle {u} meets band"));
            }
        }
        report.entries.push(CheckEntry {
            condition: Condition::GoalAndUnknownClear,
            obstacle: Some(i),
            passed: problems.is_empty(),
            detail: problems.join("; "),
        });
    }

    for (i, s) in stars.iter().enumerate() {
        let mut delta = f64::INFINITY;
        for k in 0..BAND_RAYS {
            let dir = Vec2::from_angle(2.0 * PI * k as f64 / BAND_RAYS as f64);
            for l in 0..BAND_LEVELS {
                let level = s.epsilon * l as f64 / (BAND_LEVELS - 1) as f64;
                let q = level_point(s, dir, level);
                if let Ok(g) = s.beta_grad(q) {
                    delta = delta.min((q - s.center).dot(g));
                }
            }
        }
        report.deltas.push(delta);
        report.entries.push(CheckEntry {
            condition: Condition::StarCondition,
            obstacle: Some(i),
            passed: delta >= DELTA_MIN,
            detail: format!("δ = {delta:.4}"),
        });
    }

    let max_eps = stars.iter().map(|s| s.epsilon).fold(0.0, f64::max);
    report.entries.push(CheckEntry {
        condition: Condition::SensorRange,
        obstacle: None,
        passed: world.sensor_range >= 10.0 * max_eps,
        detail: format!("R = {}, max ε = {}", world.sensor_range, max_eps),
    });

    let fb = world.free_boundary();
    for (i, c) in curves.iter().enumerate() {
        let margin = c.iter().map(|&q| fb.inner_margin(q)).fold(f64::INFINITY, f64::min);
        report.entries.push(CheckEntry {
            condition: Condition::InsideWorkspace,
            obstacle: Some(i),
            passed: margin > 0.0,
            detail: format!("margin {margin:.4}"),
        });
    }
    let goal_margin = world.clearance(world.goal);
    report.entries.push(CheckEntry {
        condition: Condition::InsideWorkspace,
        obstacle: None,
        passed: goal_margin > 0.0,
        detail: format!("goal clearance {goal_margin:.4}"),
    });
    report
}
