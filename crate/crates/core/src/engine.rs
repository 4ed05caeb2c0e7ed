//! Closed-loop simulation: sense, update the map, evaluate the control law,
//! integrate. Also the batch experiment over random start poses.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{diffdrive_u, local_freespace, fully_actuated_u, ControlCommand, ControlError, ControlParams, Scene};
use crate::diffeo::{map_point, DiffeoError};
use crate::geom::Vec2;
use crate::world::{sense, MapMode, ModelLayer, SemanticMap, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RobotKind {
    /// Planar integrator `ẋ = u`.
    Full,
    /// Unicycle `ẋ = v[cos ψ, sin ψ]`, `ψ̇ = ω`.
    DiffDrive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Rk4,
    /// Dormand–Prince 5(4) with local error control.
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub k: f64,
    pub p: u32,
    pub dt_max: f64,
    /// Largest state change `dt·‖command‖` per step.
    pub step_travel: f64,
    pub integrator: Integrator,
    pub t_max: f64,
    pub goal_tol: f64,
    pub n_rays: usize,
    /// Virtual sensor range as a fraction of the physical range.
    pub r_virt_factor: f64,
    /// Command norm below which the robot counts as stopped.
    pub stall_speed: f64,
    /// How long the robot must stay stopped to be declared stalled.
    pub stall_time: f64,
    /// Local error allowed per RK4 step before the step is halved.
    pub rk4_tol: f64,
    /// Local error tolerance of the adaptive integrator.
    pub rk45_tol: f64,
    /// Reject and halve steps that raise `‖h(x) − x_d‖²` on the frozen map.
    pub lyapunov_guard: bool,
    /// Reject and halve steps whose model-layer end point leaves the local
    /// freespace computed at the start of the step.
    pub freespace_guard: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            k: 0.4,
            p: 20,
            dt_max: 0.05,
            step_travel: 0.1,
            integrator: Integrator::Rk4,
            t_max: 300.0,
            goal_tol: 0.05,
            n_rays: 360,
            r_virt_factor: 0.8,
            stall_speed: 1e-7,
            stall_time: 1.0,
            rk4_tol: 1e-6,
            rk45_tol: 1e-9,
            lyapunov_guard: true,
            freespace_guard: true,
        }
    }
}

impl SimParams {
    pub fn control(&self, world: &World) -> ControlParams {
        ControlParams {
            k: self.k,
            r_virt: self.r_virt_factor * world.sensor_range,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub x: Vec2,
    pub psi: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub x: Vec2,
    pub psi: f64,
    pub cmd: (f64, f64),
    /// `‖h(x) − x_d‖²`.
    pub v: f64,
    pub min_beta: f64,
    pub n_stars: usize,
    /// `h(x)`.
    pub model: Vec2,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<LogRow>,
}

impl TrajectoryLog {
    pub const CSV_HEADER: &'static str = "t,x,y,psi,cmd1,cmd2,V,min_beta,n_stars";

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.t, r.x.x, r.x.y, r.psi, r.cmd.0, r.cmd.1, r.v, r.min_beta, r.n_stars
            );
        }
        s
    }

    pub fn path(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.rows.iter().map(|r| r.x)
    }

    pub fn model_path(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.rows.iter().map(|r| r.model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    Stalled,
    MaxTime,
    Fault,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Converged => "Converged",
            RunStatus::Stalled => "Stalled",
            RunStatus::MaxTime => "MaxTime",
            RunStatus::Fault => "Fault",
        })
    }
}

/// A star discovery during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Discovery {
    pub t: f64,
    pub obstacle: usize,
    /// `β_k − ε_k` at the robot position when the star was added.
    pub band_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub status: RunStatus,
    pub fault: Option<String>,
    pub final_state: State,
    pub final_distance: f64,
    /// Norm of the last evaluated command.
    pub final_command: f64,
    pub path_length: f64,
    /// Smallest signed clearance to anything, workspace walls included.
    pub min_clearance: f64,
    /// Smallest `β_j` over every familiar obstacle.
    pub min_beta: f64,
    /// Smallest signed distance to an unknown obstacle.
    pub min_unknown_clearance: f64,
    /// Largest step-to-step increase of `V` (zero if it never increased).
    pub max_v_increase: f64,
    pub steps: usize,
    pub discoveries: Vec<Discovery>,
    /// Steps where the heading was perpendicular to the steering target.
    pub perpendicular_events: usize,
    /// Points of unrecognised obstacles from the last sensing cycle.
    #[serde(skip)]
    pub final_fragments: Vec<Vec2>,
    #[serde(skip)]
    pub wall_time: f64,
}

impl fmt::Display for RunResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "status: {}", self.status)?;
        if let Some(reason) = &self.fault {
            writeln!(f, "fault: {reason}")?;
        }
        let s = &self.final_state;
        writeln!(f, "final state: x = {:.6}, y = {:.6}, psi = {:.6}, t = {:.3}", s.x.x, s.x.y, s.psi, s.t)?;
        writeln!(f, "final distance to goal: {:.6}", self.final_distance)?;
        writeln!(f, "final command norm: {:.3e}", self.final_command)?;
        writeln!(f, "path length: {:.6}", self.path_length)?;
        writeln!(f, "min clearance: {:.6}", self.min_clearance)?;
        writeln!(f, "min beta: {:.6}", self.min_beta)?;
        writeln!(f, "max V increase: {:.3e}", self.max_v_increase)?;
        writeln!(f, "stars discovered: {}", self.discoveries.len())?;
        writeln!(f, "steps: {}", self.steps)?;
        write!(f, "wall time: {:.3} s", self.wall_time)
    }
}

/// Field of the closed loop with the map frozen.
struct Field<'a> {
    scene: Scene<'a>,
    control: ControlParams,
    robot: RobotKind,
}

impl Field<'_> {
    fn command(&self, x: Vec2, psi: f64) -> Result<(ControlCommand, bool), ControlError> {
        match self.robot {
            RobotKind::Full => Ok((ControlCommand::Planar(fully_actuated_u(x, &self.scene, &self.control)?), false)),
            RobotKind::DiffDrive => {
                let c = diffdrive_u(x, psi, &self.scene, &self.control)?;
                Ok((ControlCommand::Unicycle { v: c.v, omega: c.omega }, c.refs.perpendicular))
            }
        }
    }

    /// Time derivative of `(x, y, ψ)`.
    fn rate(&self, s: [f64; 3]) -> Result<[f64; 3], ControlError> {
        let (cmd, _) = self.command(Vec2::new(s[0], s[1]), s[2])?;
        Ok(match cmd {
            ControlCommand::Planar(u) => [u.x, u.y, 0.0],
            ControlCommand::Unicycle { v, omega } => [v * s[2].cos(), v * s[2].sin(), omega],
        })
    }
}

fn axpy(s: [f64; 3], h: f64, k: [f64; 3]) -> [f64; 3] {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2]]
}

fn rate_norm(k: [f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

/// Result of one RK4 step.
struct Rk4Step {
    state: [f64; 3],
    /// Largest stage rate.
    peak: f64,
    /// Distance to the embedded third-order solution.
    error: f64,
}

/// Classic RK4 step with an embedded third-order estimate that reuses the
/// rate at the end point.
fn rk4(f: &Field<'_>, s: [f64; 3], k1: [f64; 3], dt: f64) -> Result<Rk4Step, ControlError> {
    let k2 = f.rate(axpy(s, dt / 2.0, k1))?;
    let k3 = f.rate(axpy(s, dt / 2.0, k2))?;
    let k4 = f.rate(axpy(s, dt, k3))?;
    let mut out = s;
    for i in 0..3 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let k5 = f.rate(out)?;
    let peak = [k1, k2, k3, k4, k5].into_iter().map(rate_norm).fold(0.0, f64::max);
    let error = dt / 6.0 * rate_norm([k4[0] - k5[0], k4[1] - k5[1], k4[2] - k5[2]]);
    Ok(Rk4Step { state: out, peak, error })
}

/// One Dormand–Prince step; returns the fifth-order solution and the
/// error estimate.
fn dopri(f: &Field<'_>, s: [f64; 3], k1: [f64; 3], dt: f64) -> Result<([f64; 3], f64), ControlError> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut ks = [[0.0; 3]; 7];
    ks[0] = k1;
    for stage in 0..6 {
        let mut p = s;
        for (j, kj) in ks.iter().enumerate().take(stage + 1) {
            for i in 0..3 {
                p[i] += dt * A[stage][j] * kj[i];
            }
        }
        ks[stage + 1] = f.rate(p)?;
        if stage == 5 {
            // The last stage point is the fifth-order solution.
            let mut y4 = s;
            for (j, kj) in ks.iter().enumerate() {
                for i in 0..3 {
                    y4[i] += dt * B4[j] * kj[i];
                }
            }
            let err = ((p[0] - y4[0]).powi(2) + (p[1] - y4[1]).powi(2) + (p[2] - y4[2]).powi(2)).sqrt();
            return Ok((p, err));
        }
    }
    unreachable!()
}

/// Allowed rise of `V` over an accepted step.
pub const LYAPUNOV_SLACK: f64 = 1e-12;
/// Step halvings tried when the field cannot be evaluated before the run
/// faults.
pub const MAX_HALVINGS: usize = 6;
/// Step halvings tried when a step travels too far or raises `V`; the last
/// candidate is accepted anyway.
pub const MAX_REFINEMENTS: usize = 24;

/// A single closed-loop simulation.
pub struct Simulation<'w> {
    pub world: &'w World,
    pub params: SimParams,
    pub robot: RobotKind,
    pub mode: MapMode,
    pub map: SemanticMap,
    pub state: State,
    model: ModelLayer,
    discoveries: Vec<Discovery>,
    /// Twice the last accepted step; caps the next first attempt.
    dt_hint: f64,
}

/// Outcome of one [`Simulation::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub row: LogRow,
    pub command_norm: f64,
    pub perpendicular: bool,
}

impl<'w> Simulation<'w> {
    pub fn new(world: &'w World, params: SimParams, robot: RobotKind, mode: MapMode, start: Vec2, heading: f64) -> Self {
        Simulation {
            world,
            params,
            robot,
            mode,
            map: SemanticMap::new(),
            state: State {
                x: start,
                psi: heading,
                t: 0.0,
            },
            model: ModelLayer::default(),
            discoveries: Vec::new(),
            dt_hint: params.dt_max,
        }
    }

    /// Senses at the current state and folds the reading into the map.
    pub fn sense_and_update(&mut self) {
        let hits = sense(self.state.x, self.world, self.params.n_rays);
        for k in self.map.update(&hits, self.world, self.mode) {
            let star = &self.world.familiar[k].placed;
            self.discoveries.push(Discovery {
                t: self.state.t,
                obstacle: k,
                band_margin: star.beta(self.state.x) - star.epsilon,
            });
        }
        self.model = self.map.model_layer();
    }

    fn field(&self) -> Field<'_> {
        Field {
            scene: Scene {
                map: &self.map,
                model: &self.model,
                workspace: Some(self.world.free_boundary()),
                goal: self.world.goal,
            },
            control: self.params.control(self.world),
            robot: self.robot,
        }
    }

    /// Command at the current state against the current map.
    pub fn command(&self) -> Result<ControlCommand, ControlError> {
        self.field().command(self.state.x, self.state.psi).map(|c| c.0)
    }

    /// `‖h(x) − x_d‖²` and `h(x)` against the current map.
    pub fn lyapunov(&self, x: Vec2) -> Result<(f64, Vec2), ControlError> {
        let y = map_point(x, &self.map)?;
        Ok(((y - self.world.goal).norm_sq(), y))
    }

    /// One sense, update, control, integrate cycle. The returned row
    /// describes the state at the start of the step.
    pub fn step(&mut self) -> Result<StepOutcome, ControlError> {
        self.sense_and_update();
        let (v, model) = self.lyapunov(self.state.x)?;
        let field = self.field();
        let s0 = [self.state.x.x, self.state.x.y, self.state.psi];
        let (cmd, perpendicular) = field.command(self.state.x, self.state.psi)?;
        let norm = cmd.norm();
        let row = LogRow {
            t: self.state.t,
            x: self.state.x,
            psi: self.state.psi,
            cmd: cmd.components(),
            v,
            min_beta: self.world.min_beta(self.state.x),
            n_stars: self.map.stars.len(),
            model,
        };
        let k1 = field.rate(s0)?;
        let freespace = if self.params.freespace_guard {
            Some(local_freespace(model, &self.model, Some(self.world.free_boundary()), field.control.r_virt)?)
        } else {
            None
        };
        let mut dt = if norm > 0.0 {
            self.params.dt_max.min(self.params.step_travel / norm)
        } else {
            self.params.dt_max
        }
        .min(self.dt_hint);
        let mut last_err = None;
        let mut fallback = None;
        let mut accepted = None;
        for halvings in 0..=MAX_REFINEMENTS {
            let candidate = match self.params.integrator {
                Integrator::Rk4 => rk4(&field, s0, k1, dt).map(|r| {
                    let bounded = r.peak * dt <= 2.0 * self.params.step_travel && r.error <= self.params.rk4_tol;
                    (r.state, dt, bounded)
                }),
                Integrator::Rk45 => self.dopri_step(&field, s0, k1, dt).map(|(s, h)| (s, h, true)),
            };
            match candidate {
                Ok((s, h, bounded)) => {
                    let end = self.lyapunov(Vec2::new(s[0], s[1]));
                    let decreasing = !self.params.lyapunov_guard
                        || end.is_ok_and(|(v_new, _)| v_new <= v + LYAPUNOV_SLACK);
                    let contained = match &freespace {
                        Some(lf) => end.is_ok_and(|(_, y)| lf.polygon.contains(y)),
                        None => true,
                    };
                    if bounded && decreasing && contained {
                        accepted = Some((s, h));
                        break;
                    }
                    if halvings == MAX_REFINEMENTS {
                        fallback = Some((s, h));
                    }
                }
                Err(e) if halvings >= MAX_HALVINGS => return Err(e),
                Err(e) => last_err = Some(e),
            }
            dt *= 0.5;
        }
        let (s, h) = match accepted.or(fallback) {
            Some(v) => v,
            None => return Err(last_err.unwrap_or(ControlError::Diffeo(DiffeoError::NoConvergence))),
        };
        self.dt_hint = 2.0 * h;
        self.state = State {
            x: Vec2::new(s[0], s[1]),
            psi: wrap_angle(s[2]),
            t: self.state.t + h,
        };
        Ok(StepOutcome {
            row,
            command_norm: norm,
            perpendicular,
        })
    }

    /// Adaptive Dormand–Prince substep starting from `dt`.
    fn dopri_step(&self, field: &Field<'_>, s0: [f64; 3], k1: [f64; 3], dt: f64) -> Result<([f64; 3], f64), ControlError> {
        let mut h = dt;
        loop {
            let (s, err) = dopri(field, s0, k1, h)?;
            if err <= self.params.rk45_tol || h < dt * 1e-6 {
                return Ok((s, h));
            }
            h *= (0.9 * (self.params.rk45_tol / err).powf(0.2)).clamp(0.1, 0.9);
        }
    }

    /// Runs until convergence, stall, timeout or fault.
    pub fn run(mut self, record: bool) -> (RunResult, TrajectoryLog) {
        let clock = Instant::now();
        let mut log = TrajectoryLog::default();
        let goal = self.world.goal;
        let mut path_length = 0.0;
        let mut min_clearance = f64::INFINITY;
        let mut min_beta = f64::INFINITY;
        let mut min_unknown = f64::INFINITY;
        let mut max_v_increase: f64 = 0.0;
        let mut prev_v: Option<f64> = None;
        let mut stopped_since: Option<f64> = None;
        let mut perpendicular_events = 0;
        let mut steps = 0;
        let mut fault = None;
        let mut last_norm = f64::NAN;

        let status = loop {
            let x = self.state.x;
            min_clearance = min_clearance.min(self.world.clearance(x));
            min_beta = min_beta.min(self.world.min_beta(x));
            min_unknown = min_unknown.min(self.world.unknown_clearance(x));
            if x.dist(goal) <= self.params.goal_tol {
                // Record the final state.
                self.sense_and_update();
                if let Ok((v, model)) = self.lyapunov(x) {
                    if let Some(p) = prev_v {
                        max_v_increase = max_v_increase.max(v - p);
                    }
                    last_norm = self.command().map(|c| c.norm()).unwrap_or(f64::NAN);
                    if record {
                        log.rows.push(LogRow {
                            t: self.state.t,
                            x,
                            psi: self.state.psi,
                            cmd: self.command().map(|c| c.components()).unwrap_or((f64::NAN, f64::NAN)),
                            v,
                            min_beta: self.world.min_beta(x),
                            n_stars: self.map.stars.len(),
                            model,
                        });
                    }
                }
                break RunStatus::Converged;
            }
            if self.state.t >= self.params.t_max {
                break RunStatus::MaxTime;
            }
            let before = self.state;
            match self.step() {
                Ok(out) => {
                    steps += 1;
                    last_norm = out.command_norm;
                    if let Some(p) = prev_v {
                        max_v_increase = max_v_increase.max(out.row.v - p);
                    }
                    prev_v = Some(out.row.v);
                    if out.perpendicular {
                        perpendicular_events += 1;
                    }
                    if record {
                        log.rows.push(out.row);
                    }
                    path_length += self.state.x.dist(before.x);
                    if out.command_norm < self.params.stall_speed {
                        let since = *stopped_since.get_or_insert(before.t);
                        if self.state.t - since >= self.params.stall_time {
                            break RunStatus::Stalled;
                        }
                    } else {
                        stopped_since = None;
                    }
                }
                Err(e) => {
                    fault = Some(e.to_string());
                    break RunStatus::Fault;
                }
            }
        };
        let result = RunResult {
            status,
            fault,
            final_state: self.state,
            final_distance: self.state.x.dist(goal),
            final_command: last_norm,
            path_length,
            min_clearance,
            min_beta,
            min_unknown_clearance: min_unknown,
            max_v_increase,
            steps,
            discoveries: self.discoveries.clone(),
            perpendicular_events,
            final_fragments: self.map.fragments.iter().flat_map(|f| f.points.iter().copied()).collect(),
            wall_time: clock.elapsed().as_secs_f64(),
        };
        (result, log)
    }
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Runs one simulation from `start`.
///
/// ```
/// use starnav::engine::{run, RobotKind, RunStatus, SimParams};
/// use starnav::geom::Vec2;
/// use starnav::world::{MapMode, World};
///
/// let world = World::empty(10.0, Vec2::ZERO, 5.0);
/// let (result, _) = run(&world, &SimParams::default(), RobotKind::Full, MapMode::Semantic, Vec2::new(3.0, 0.0), 0.0, false);
/// assert_eq!(result.status, RunStatus::Converged);
/// ```
pub fn run(
    world: &World,
    params: &SimParams,
    robot: RobotKind,
    mode: MapMode,
    start: Vec2,
    heading: f64,
    record: bool,
) -> (RunResult, TrajectoryLog) {
    Simulation::new(world, *params, robot, mode, start, heading).run(record)
}

/// Minimum clearance required of sampled start positions.
pub const START_CLEARANCE: f64 = 0.05;

/// Draws a start pose uniformly from the freespace with clearance at least
/// [`START_CLEARANCE`].
pub fn sample_start(world: &World, rng: &mut ChaCha8Rng) -> (Vec2, f64) {
    let vs = world.free_boundary().vertices();
    let (mut lo, mut hi) = (vs[0], vs[0]);
    for v in vs {
        lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
        hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
    }
    loop {
        let x = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        let heading = rng.gen_range(-PI..PI);
        if world.clearance(x) >= START_CLEARANCE {
            return (x, heading);
        }
    }
}

/// Start pose drawn by [`sample_start`] from a fresh generator seeded with
/// `seed`.
pub fn seeded_start(world: &World, seed: u64) -> (Vec2, f64) {
    sample_start(world, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Compact per-run record for batch summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunBrief {
    pub status: RunStatus,
    pub fault: Option<String>,
    pub final_distance: f64,
    pub final_command: f64,
    pub time: f64,
    pub path_length: f64,
    pub min_beta: f64,
    pub min_unknown_clearance: f64,
    pub min_clearance: f64,
    pub max_v_increase: f64,
}

impl From<&RunResult> for RunBrief {
    fn from(r: &RunResult) -> Self {
        RunBrief {
            status: r.status,
            fault: r.fault.clone(),
            final_distance: r.final_distance,
            final_command: r.final_command,
            time: r.final_state.t,
            path_length: r.path_length,
            min_beta: r.min_beta,
            min_unknown_clearance: r.min_unknown_clearance,
            min_clearance: r.min_clearance,
            max_v_increase: r.max_v_increase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRun {
    pub index: usize,
    pub start: Vec2,
    pub heading: f64,
    pub full: RunBrief,
    pub diffdrive: RunBrief,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct KindSummary {
    pub success_rate: f64,
    pub converged: usize,
    pub stalled: usize,
    pub max_time: usize,
    pub fault: usize,
    pub mean_time: f64,
    pub mean_path_length: f64,
    pub min_beta: f64,
    pub min_unknown_clearance: f64,
    pub max_v_increase: f64,
}

impl KindSummary {
    fn from_runs<'a>(runs: impl Iterator<Item = &'a RunBrief>) -> Self {
        let mut s = KindSummary {
            min_beta: f64::INFINITY,
            min_unknown_clearance: f64::INFINITY,
            ..Default::default()
        };
        let mut n = 0usize;
        let (mut t, mut l) = (0.0, 0.0);
        for r in runs {
            n += 1;
            match r.status {
                RunStatus::Converged => {
                    s.converged += 1;
                    t += r.time;
                    l += r.path_length;
                }
                RunStatus::Stalled => s.stalled += 1,
                RunStatus::MaxTime => s.max_time += 1,
                RunStatus::Fault => s.fault += 1,
            }
            s.min_beta = s.min_beta.min(r.min_beta);
            s.min_unknown_clearance = s.min_unknown_clearance.min(r.min_unknown_clearance);
            s.max_v_increase = s.max_v_increase.max(r.max_v_increase);
        }
        if n > 0 {
            s.success_rate = s.converged as f64 / n as f64;
        }
        if s.converged > 0 {
            s.mean_time = t / s.converged as f64;
            s.mean_path_length = l / s.converged as f64;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub n_starts: usize,
    pub seed: u64,
    pub full: KindSummary,
    pub diffdrive: KindSummary,
    pub runs: Vec<GridRun>,
}

impl GridSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Runs both robot types from `n_starts` seeded random start poses.
pub fn grid_experiment(world: &World, params: &SimParams, n_starts: usize, seed: u64) -> GridSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<(Vec2, f64)> = (0..n_starts).map(|_| sample_start(world, &mut rng)).collect();
    let runs: Vec<GridRun> = starts
        .par_iter()
        .enumerate()
        .map(|(index, &(start, heading))| {
            let (full, _) = run(world, params, RobotKind::Full, MapMode::Semantic, start, heading, false);
            let (dd, _) = run(world, params, RobotKind::DiffDrive, MapMode::Semantic, start, heading, false);
            GridRun {
                index,
                start,
                heading,
                full: RunBrief::from(&full),
                diffdrive: RunBrief::from(&dd),
            }
        })
        .collect();
    GridSummary {
        n_starts,
        seed,
        full: KindSummary::from_runs(runs.iter().map(|r| &r.full)),
        diffdrive: KindSummary::from_runs(runs.iter().map(|r| &r.diffdrive)),
        runs,
    }
}
