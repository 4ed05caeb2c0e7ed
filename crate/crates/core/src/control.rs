//! Local freespace construction and the feedback laws.
//!
//! Commands are computed in the model layer, where every discovered star is
//! a disk, and pulled back through `h`.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::diffeo::{diffeo_eval, se2_eval, DiffeoError};
use crate::geom::{closest_point_on_segment, intersect_halfplanes, ConvexPolygon, HalfPlane, Vec2, GEOM_EPS};
use crate::world::{ModelLayer, SemanticMap};

/// Number of sides of the polygon approximating the local freespace seed disk.
pub const SEED_SIDES: usize = 64;
/// Chords shorter than this collapse to the current point.
pub const MIN_CHORD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ControlError {
    #[error(transparent)]
    Diffeo(#[from] DiffeoError),
    #[error("local freespace is empty")]
    EmptyLocalFreespace,
    #[error("guide line misses the local freespace")]
    DegenerateLine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlParams {
    pub k: f64,
    /// Virtual sensor range in the model layer.
    pub r_virt: f64,
}

/// Everything a control law reads besides the robot state.
#[derive(Debug, Clone, Copy)]
pub struct Scene<'a> {
    pub map: &'a SemanticMap,
    pub model: &'a ModelLayer,
    /// Free workspace (boundary eroded by the robot radius), if bounded.
    pub workspace: Option<&'a ConvexPolygon>,
    pub goal: Vec2,
}

/// Convex neighbourhood of `y` free of every model obstacle point used to
/// build it.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFreespace {
    pub y: Vec2,
    pub polygon: ConvexPolygon,
}

/// Midpoint half-plane between `y` and an obstacle point `p`.
fn separating_plane(y: Vec2, p: Vec2) -> Option<HalfPlane> {
    let d = y - p;
    if d.norm() <= 1e-12 {
        return None;
    }
    Some(HalfPlane::new((p + y) * 0.5, d))
}

/// Longest chord between neighbouring fragment points, relative to their
/// range, that is treated as obstacle surface.
pub const CHORD_RATIO: f64 = 0.25;

/// Builds the local freespace of `y`.
///
/// The seed is a regular 64-gon of radius `r_virt/2`. Each model disk within
/// `r_virt` contributes the midpoint half-plane of its nearest point. Each
/// fragment contributes the midpoint half-plane of its nearest point, taken
/// over its samples within `r_virt` and the chords joining the nearest sample
/// to its neighbours when those chords are short (see [`CHORD_RATIO`]), plus
/// one for every sample that half-plane fails to exclude. The free workspace
/// clips the result.
///
/// ```
/// use starnav::control::local_freespace;
/// use starnav::geom::Vec2;
/// use starnav::world::ModelLayer;
///
/// let lf = local_freespace(Vec2::ZERO, &ModelLayer::default(), None, 2.0).unwrap();
/// assert_eq!(lf.polygon.len(), 64);
/// ```
pub fn local_freespace(
    y: Vec2,
    model: &ModelLayer,
    workspace: Option<&ConvexPolygon>,
    r_virt: f64,
) -> Result<LocalFreespace, ControlError> {
    let seed = ConvexPolygon::regular(y, 0.5 * r_virt, SEED_SIDES);
    let mut planes: Vec<(f64, HalfPlane)> = Vec::new();
    for disk in &model.disks {
        let w = y - disk.center;
        let r = w.norm();
        let gap = r - disk.radius;
        if gap >= r_virt || r == 0.0 {
            continue;
        }
        let p = disk.center + w * (disk.radius / r);
        let plane = separating_plane(y, p).unwrap_or_else(|| HalfPlane::new(y, w));
        planes.push((0.5 * gap.max(0.0), plane));
    }
    for fragment in &model.fragments {
        let pts = &fragment.points;
        let Some((i0, d0)) = pts
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.dist(y)))
            .filter(|&(_, d)| d < r_virt)
            .min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            continue;
        };
        let mut foot = pts[i0];
        for j in [i0.wrapping_sub(1), i0 + 1] {
            let Some(&pj) = pts.get(j) else { continue };
            if pj.dist(pts[i0]) <= CHORD_RATIO * d0.min(pj.dist(y)) {
                let q = closest_point_on_segment(y, pts[i0], pj);
                if q.dist(y) < foot.dist(y) {
                    foot = q;
                }
            }
        }
        let Some(first) = separating_plane(y, foot) else {
            continue;
        };
        planes.push((0.5 * foot.dist(y), first));
        for &p in pts {
            let d = p.dist(y);
            if d < r_virt && first.signed_distance(p) > -GEOM_EPS {
                if let Some(plane) = separating_plane(y, p) {
                    planes.push((0.5 * d, plane));
                }
            }
        }
    }
    planes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ordered: Vec<HalfPlane> = planes.into_iter().map(|(_, h)| h).collect();
    if let Some(ws) = workspace {
        ordered.extend(ws.halfplanes());
    }
    let polygon =
        intersect_halfplanes(&ordered, &seed).map_err(|_| ControlError::EmptyLocalFreespace)?;
    Ok(LocalFreespace { y, polygon })
}

impl LocalFreespace {
    pub fn project(&self, q: Vec2) -> Vec2 {
        self.polygon.project(q)
    }

    /// Projection of `q` onto the chord of the local freespace along the
    /// line through `y` with unit direction `dir`.
    pub fn project_on_line(&self, dir: Vec2, q: Vec2) -> Result<Vec2, ControlError> {
        let (lo, hi) = self
            .polygon
            .chord(self.y, dir)
            .ok_or(ControlError::DegenerateLine)?;
        if hi - lo < MIN_CHORD {
            return Ok(self.y);
        }
        let t = dir.dot(q - self.y).clamp(lo, hi);
        Ok(self.y + dir * t)
    }
}

/// Model-layer field `−k(y − Π_LF(x_d))`.
pub fn model_field(y: Vec2, scene: &Scene<'_>, params: &ControlParams) -> Result<Vec2, ControlError> {
    let lf = local_freespace(y, scene.model, scene.workspace, params.r_virt)?;
    Ok((y - lf.project(scene.goal)) * -params.k)
}

/// Fully actuated law: the model-layer field pulled back through `h`.
pub fn fully_actuated_u(x: Vec2, scene: &Scene<'_>, params: &ControlParams) -> Result<Vec2, ControlError> {
    let d = diffeo_eval(x, scene.map)?;
    let v = model_field(d.y, scene, params)?;
    if v == Vec2::ZERO {
        return Ok(Vec2::ZERO);
    }
    d.jacobian
        .solve(v)
        .ok_or(ControlError::Diffeo(DiffeoError::Singular))
}

/// Reference inputs of a unicycle in the model layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffDriveRefs {
    pub v_hat: f64,
    pub omega_hat: f64,
    /// The heading was perpendicular to the steering target, so `ω̂` took
    /// its limiting value `±kπ/2`.
    pub perpendicular: bool,
}

/// Reference inputs `(v̂, ω̂)` at model pose `(y, φ)`.
pub fn diffdrive_refs(
    y: Vec2,
    phi: f64,
    scene: &Scene<'_>,
    params: &ControlParams,
) -> Result<DiffDriveRefs, ControlError> {
    let lf = local_freespace(y, scene.model, scene.workspace, params.r_virt)?;
    refs_in(&lf, phi, scene.goal, params.k)
}

fn refs_in(lf: &LocalFreespace, phi: f64, goal: Vec2, k: f64) -> Result<DiffDriveRefs, ControlError> {
    let y = lf.y;
    let t = Vec2::from_angle(phi);
    let n = t.perp();
    let p_par = lf.project_on_line(t, goal)?;
    let v_hat = -k * t.dot(y - p_par);

    let to_goal = goal - y;
    let p_goal_line = if to_goal.norm() == 0.0 {
        y
    } else {
        lf.project_on_line(to_goal.normalized(), goal)?
    };
    let c = (p_goal_line + lf.project(goal)) * 0.5;
    // Same ratio as n·(y − c) / t·(y − c); the limit turns toward c.
    let num = n.dot(c - y);
    let den = t.dot(c - y);
    let (omega_hat, perpendicular) = if den != 0.0 {
        (k * (num / den).atan(), false)
    } else if num == 0.0 {
        (0.0, false)
    } else {
        (k * FRAC_PI_2 * num.signum(), true)
    };
    Ok(DiffDriveRefs {
        v_hat,
        omega_hat,
        perpendicular,
    })
}

/// Unicycle command with the reference inputs it realises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffDriveCommand {
    pub v: f64,
    pub omega: f64,
    pub refs: DiffDriveRefs,
}

/// Differential-drive law: reference inputs at `(h(x), ξ(x, ψ))` converted
/// to actual inputs.
pub fn diffdrive_u(
    x: Vec2,
    psi: f64,
    scene: &Scene<'_>,
    params: &ControlParams,
) -> Result<DiffDriveCommand, ControlError> {
    let s = se2_eval(x, psi, scene.map)?;
    let refs = diffdrive_refs(s.diffeo.y, s.xi, scene, params)?;
    let v = refs.v_hat / s.e.norm();
    let omega = (refs.omega_hat - v * s.dxi_t) / s.dxi_dpsi;
    Ok(DiffDriveCommand { v, omega, refs })
}

/// Fully actuated law with the identity map and raw sensed fragments.
pub fn baseline_u(x: Vec2, fragments: &ModelLayer, workspace: Option<&ConvexPolygon>, goal: Vec2, params: &ControlParams) -> Result<Vec2, ControlError> {
    let empty = SemanticMap::new();
    let scene = Scene {
        map: &empty,
        model: fragments,
        workspace,
        goal,
    };
    model_field(x, &scene, params)
}

/// Differential-drive law with the identity map and raw sensed fragments.
pub fn baseline_diffdrive_u(
    x: Vec2,
    psi: f64,
    fragments: &ModelLayer,
    workspace: Option<&ConvexPolygon>,
    goal: Vec2,
    params: &ControlParams,
) -> Result<DiffDriveCommand, ControlError> {
    let lf = local_freespace(x, fragments, workspace, params.r_virt)?;
    let refs = refs_in(&lf, psi, goal, params.k)?;
    Ok(DiffDriveCommand {
        v: refs.v_hat,
        omega: refs.omega_hat,
        refs,
    })
}

/// A command for either robot type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlCommand {
    Planar(Vec2),
    Unicycle { v: f64, omega: f64 },
}

impl ControlCommand {
    pub fn norm(&self) -> f64 {
        match *self {
            ControlCommand::Planar(u) => u.norm(),
            ControlCommand::Unicycle { v, omega } => v.hypot(omega),
        }
    }

    /// The two logged components.
    pub fn components(&self) -> (f64, f64) {
        match *self {
            ControlCommand::Planar(u) => (u.x, u.y),
            ControlCommand::Unicycle { v, omega } => (v, omega),
        }
    }
}
