//! Two-rate kinematic world: command ticks at `f_low`, integration at `f_high`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geometry::{wrap_angle, Pose2};
use super::render::{render_observation, Observation, RenderConfig};
use super::scene::{Arena, Domain, Entity, EntityKind, Scene};
use crate::codec::ActionCommand;
use crate::task::{Skill, TaskSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("non-finite robot pose after integration: {0:?}")]
    NonFinite(Pose2),
    #[error("episode already ended with {0:?}")]
    Terminal(Status),
    #[error("scene does not match task: {0}")]
    SceneMismatch(String),
    #[error("invalid rate config: {0}")]
    Rates(String),
}

/// Command rate and integration rate; `f_high / f_low` substeps per command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub f_high: f64,
    pub f_low: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            f_high: 50.0,
            f_low: 2.0,
        }
    }
}

impl RateConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.f_high > 0.0 && self.f_low > 0.0) {
            return Err(SimError::Rates("rates must be positive".into()));
        }
        let n = self.f_high / self.f_low;
        if n < 1.0 || n.fract() != 0.0 || n * self.f_low != self.f_high {
            return Err(SimError::Rates(format!(
                "f_high / f_low = {n} is not a positive integer"
            )));
        }
        Ok(())
    }

    pub fn substeps(&self) -> u32 {
        (self.f_high / self.f_low) as u32
    }

    pub fn command_period(&self) -> f64 {
        1.0 / self.f_low
    }
}

/// Realized body parameters mirrored from the commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub h_z: f64,
    pub phi: f64,
    pub s_y: f64,
    pub h_z_f: f64,
    pub theta: [f64; 3],
    pub f: f64,
}

impl Default for BodyState {
    fn default() -> Self {
        BodyState {
            h_z: 0.25,
            phi: 0.0,
            s_y: 0.25,
            h_z_f: 0.08,
            theta: [0.5, 0.0, 0.0],
            f: 3.0,
        }
    }
}

/// Maximum slew rate per body field; `None` means the field follows the
/// command instantly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlewRates {
    pub h_z: Option<f64>,
    pub phi: Option<f64>,
    pub s_y: Option<f64>,
    pub h_z_f: Option<f64>,
    pub f: Option<f64>,
}

impl Default for SlewRates {
    fn default() -> Self {
        SlewRates {
            h_z: Some(0.2),
            phi: Some(0.5),
            s_y: Some(0.2),
            h_z_f: Some(0.2),
            f: Some(2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub rates: RateConfig,
    pub slew: SlewRates,
    pub standing: BodyState,
    /// Robot footprint disc radius (half the 40 cm body length).
    pub footprint_radius: f64,
    /// Strict success radius for go-to style tasks.
    pub success_radius: f64,
    pub max_steps: u32,
    pub bearing_tolerance_deg: f64,
    pub hold_ticks: u32,
    /// Distance past a tunnel's far face that counts as "behind" it.
    pub tunnel_exit_margin: f64,
    /// The carried ball rolls off once pitch drops to this value (rad).
    pub release_pitch: f64,
    /// Ball landing distance ahead of the robot center (m).
    pub release_offset: f64,
    /// Lateral room each foot needs inside a tunnel (m).
    pub stance_margin: f64,
    pub camera: RenderConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            rates: RateConfig::default(),
            slew: SlewRates::default(),
            standing: BodyState::default(),
            footprint_radius: 0.20,
            success_radius: 1.0,
            max_steps: 120,
            bearing_tolerance_deg: 10.0,
            hold_ticks: 4,
            tunnel_exit_margin: 0.3,
            release_pitch: -0.2,
            release_offset: 0.7,
            stance_margin: 0.05,
            camera: RenderConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Success,
    Collision,
    Timeout,
    OutOfBounds,
    WrongTarget,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Running
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Success => "success",
            Status::Collision => "collision",
            Status::Timeout => "timeout",
            Status::OutOfBounds => "out_of_bounds",
            Status::WrongTarget => "wrong_target",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Contact { entity: usize },
    BarTooHigh { entity: usize, h_z: f64, clearance: f64 },
    StanceTooWide { entity: usize, s_y: f64, inner_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub status: Status,
    pub distance_to_target: f64,
    pub violation: Option<Violation>,
}

/// Task progress that depends on the continuous trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Progress {
    pub bar_passed: bool,
    pub aligned_ticks: u32,
    pub wrong_aligned_ticks: u32,
    pub released_at: Option<(f64, f64)>,
    pub violation: Option<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub robot: Pose2,
    pub body: BodyState,
    pub carried: Option<Entity>,
    pub entities: Vec<Entity>,
    pub arena: Arena,
    pub domain: Domain,
    pub noise_seed: u64,
    pub sim_time: f64,
    pub step_count: u32,
    pub progress: Progress,
}

impl WorldState {
    /// Robot at the origin facing +x with the standing body profile.
    pub fn from_scene(scene: &Scene, config: &SimConfig) -> Self {
        WorldState {
            robot: Pose2::default(),
            body: config.standing,
            carried: scene.carried.clone(),
            entities: scene.entities.clone(),
            arena: scene.arena,
            domain: scene.domain,
            noise_seed: scene.noise_seed,
            sim_time: 0.0,
            step_count: 0,
            progress: Progress::default(),
        }
    }

    pub fn target(&self) -> Option<&Entity> {
        self.entities.iter().find(|e| e.is_target)
    }

    pub fn distance_to_target(&self) -> f64 {
        self.target()
            .map(|t| self.robot.distance_to(t.pose.x, t.pose.y))
            .unwrap_or(f64::INFINITY)
    }
}

fn slew(current: f64, target: f64, rate: Option<f64>, dt: f64) -> f64 {
    match rate {
        None => target,
        Some(r) => {
            let max = r * dt;
            current + (target - current).clamp(-max, max)
        }
    }
}

/// One integration step of duration `dt`.
pub fn substep(state: &mut WorldState, cmd: &ActionCommand, dt: f64, config: &SimConfig) {
    let before = state.robot;
    let (s, c) = before.yaw.sin_cos();
    state.robot.x += (cmd.v_x * c - cmd.v_y * s) * dt;
    state.robot.y += (cmd.v_x * s + cmd.v_y * c) * dt;
    state.robot.yaw += cmd.omega_z * dt;

    let rates = &config.slew;
    let body = &mut state.body;
    body.h_z = slew(body.h_z, cmd.h_z, rates.h_z, dt);
    body.phi = slew(body.phi, cmd.phi, rates.phi, dt);
    body.s_y = slew(body.s_y, cmd.s_y, rates.s_y, dt);
    body.h_z_f = slew(body.h_z_f, cmd.h_z_f, rates.h_z_f, dt);
    body.f = slew(body.f, cmd.f, rates.f, dt);
    body.theta = [cmd.theta_1, cmd.theta_2, cmd.theta_3];

    if state.carried.is_some() && body.phi <= config.release_pitch {
        state.carried = None;
        let (s, c) = state.robot.yaw.sin_cos();
        state.progress.released_at = Some((
            state.robot.x + config.release_offset * c,
            state.robot.y + config.release_offset * s,
        ));
    }

    for bar in state.entities.iter().filter(|e| e.kind == EntityKind::Bar) {
        let rect = bar.footprint();
        let (x0, _) = rect.to_local(before.x, before.y);
        let (x1, y1) = rect.to_local(state.robot.x, state.robot.y);
        if x0 < 0.0 && x1 >= 0.0 && y1.abs() <= rect.half_y {
            state.progress.bar_passed = true;
        }
    }
}

pub fn finish_tick(state: &mut WorldState, config: &SimConfig) -> Result<(), SimError> {
    let r = state.robot;
    if !(r.x.is_finite() && r.y.is_finite() && r.yaw.is_finite()) {
        return Err(SimError::NonFinite(r));
    }
    state.step_count += 1;
    state.sim_time = state.step_count as f64 / config.rates.f_low;

    let tol = config.bearing_tolerance_deg.to_radians();
    let mut aligned = false;
    let mut wrong = false;
    for e in state.entities.iter().filter(|e| e.kind == EntityKind::LetterBox) {
        if r.bearing_error(e.pose.x, e.pose.y).abs() < tol {
            if e.is_target {
                aligned = true;
            } else {
                wrong = true;
            }
        }
    }
    let p = &mut state.progress;
    p.aligned_ticks = if aligned { p.aligned_ticks + 1 } else { 0 };
    p.wrong_aligned_ticks = if wrong && !aligned {
        p.wrong_aligned_ticks + 1
    } else {
        0
    };
    Ok(())
}

/// Integrates one command tick (`f_high / f_low` substeps) without
/// collision checks.
pub fn apply_command(state: &WorldState, cmd: &ActionCommand, config: &SimConfig) -> Result<WorldState, SimError> {
    let mut next = state.clone();
    let dt = 1.0 / config.rates.f_high;
    for _ in 0..config.rates.substeps() {
        substep(&mut next, cmd, dt, config);
    }
    finish_tick(&mut next, config)?;
    Ok(next)
}

/// First constraint the robot violates in its current state.
pub fn check_collision(state: &WorldState, config: &SimConfig) -> Option<Violation> {
    let (x, y) = (state.robot.x, state.robot.y);
    let r = config.footprint_radius;
    for (i, e) in state.entities.iter().enumerate() {
        if e.solids().iter().any(|s| s.intersects_disc(x, y, r)) {
            return Some(Violation::Contact { entity: i });
        }
        match e.kind {
            EntityKind::Bar => {
                if e.footprint().intersects_disc(x, y, r) && state.body.h_z >= e.clearance() {
                    return Some(Violation::BarTooHigh {
                        entity: i,
                        h_z: state.body.h_z,
                        clearance: e.clearance(),
                    });
                }
            }
            EntityKind::Tunnel => {
                let inner = e.inner_width();
                if e.tunnel_interior().contains(x, y) && state.body.s_y + 2.0 * config.stance_margin > inner {
                    return Some(Violation::StanceTooWide {
                        entity: i,
                        s_y: state.body.s_y,
                        inner_width: inner,
                    });
                }
            }
            _ => {}
        }
    }
    None
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<(), SimError> {
    if ok {
        Ok(())
    } else {
        Err(SimError::SceneMismatch(msg()))
    }
}

/// Checks that the scene carries what the task needs.
pub fn check_scene(state: &WorldState, task: &TaskSpec) -> Result<(), SimError> {
    let target = state
        .target()
        .ok_or_else(|| SimError::SceneMismatch("scene has no target entity".into()))?;
    let has = |k: EntityKind| state.entities.iter().any(|e| e.kind == k);
    let expected = match task.skill {
        Skill::GoTo | Skill::GoAvoid | Skill::Crawl => EntityKind::TargetObject,
        Skill::GoThrough => EntityKind::Tunnel,
        Skill::Distinguish => EntityKind::LetterBox,
        Skill::Unload => EntityKind::Receptacle,
    };
    require(target.kind == expected, || {
        format!("{} needs a {:?} target, found {:?}", task.skill, expected, target.kind)
    })?;
    match task.skill {
        Skill::GoAvoid => require(has(EntityKind::Obstacle), || "go_avoid needs an obstacle".into()),
        Skill::Crawl => require(has(EntityKind::Bar), || "crawl needs a bar".into()),
        Skill::Unload => require(state.carried.is_some() || state.progress.released_at.is_some(), || {
            "unload needs a carried ball".into()
        }),
        _ => Ok(()),
    }
}

/// Evaluates the task's termination rules on the current state.
pub fn check_success(state: &WorldState, task: &TaskSpec, config: &SimConfig) -> Result<StepOutcome, SimError> {
    check_scene(state, task)?;
    let target = state.target().expect("checked");
    let distance = state.robot.distance_to(target.pose.x, target.pose.y);
    let outcome = |status| StepOutcome {
        status,
        distance_to_target: distance,
        violation: state.progress.violation,
    };
    if state.progress.violation.is_some() {
        return Ok(outcome(Status::Collision));
    }
    let within = distance < config.success_radius;
    let status = match task.skill {
        Skill::GoTo | Skill::GoAvoid => within.then_some(Status::Success),
        Skill::Crawl => (within && state.progress.bar_passed).then_some(Status::Success),
        Skill::Unload => state.progress.released_at.map(|(x, y)| {
            if target.footprint().contains(x, y) {
                Status::Success
            } else {
                Status::WrongTarget
            }
        }),
        Skill::GoThrough => state
            .entities
            .iter()
            .filter(|e| e.kind == EntityKind::Tunnel)
            .find(|e| {
                let inside = e.tunnel_interior();
                let (lx, ly) = inside.to_local(state.robot.x, state.robot.y);
                lx > inside.half_x + config.tunnel_exit_margin && ly.abs() < inside.half_y
            })
            .map(|e| {
                if e.is_target {
                    Status::Success
                } else {
                    Status::WrongTarget
                }
            }),
        Skill::Distinguish => {
            if state.progress.aligned_ticks >= config.hold_ticks {
                Some(Status::Success)
            } else if state.progress.wrong_aligned_ticks >= config.hold_ticks {
                Some(Status::WrongTarget)
            } else {
                None
            }
        }
    };
    if let Some(status) = status {
        return Ok(outcome(status));
    }
    if !state.arena.contains(state.robot.x, state.robot.y) {
        return Ok(outcome(Status::OutOfBounds));
    }
    if state.step_count >= config.max_steps {
        return Ok(outcome(Status::Timeout));
    }
    Ok(outcome(Status::Running))
}

/// A running episode: state plus task, with absorbing terminal outcomes.
#[derive(Debug, Clone)]
pub struct World {
    state: WorldState,
    task: TaskSpec,
    config: SimConfig,
    outcome: StepOutcome,
}

impl World {
    pub fn new(scene: &Scene, task: TaskSpec, config: SimConfig) -> Result<World, SimError> {
        config.rates.validate()?;
        let state = WorldState::from_scene(scene, &config);
        let outcome = check_success(&state, &task, &config)?;
        Ok(World {
            state,
            task,
            config,
            outcome,
        })
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn task(&self) -> &TaskSpec {
        &self.task
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn outcome(&self) -> StepOutcome {
        self.outcome
    }

    /// Applies one command tick, checking collisions at every substep.
    pub fn step(&mut self, cmd: &ActionCommand) -> Result<StepOutcome, SimError> {
        if self.outcome.status.is_terminal() {
            return Err(SimError::Terminal(self.outcome.status));
        }
        let dt = 1.0 / self.config.rates.f_high;
        for _ in 0..self.config.rates.substeps() {
            substep(&mut self.state, cmd, dt, &self.config);
            if self.state.progress.violation.is_none() {
                self.state.progress.violation = check_collision(&self.state, &self.config);
            }
        }
        finish_tick(&mut self.state, &self.config)?;
        self.outcome = check_success(&self.state, &self.task, &self.config)?;
        Ok(self.outcome)
    }

    pub fn observe(&self) -> Observation {
        render_observation(&self.state, &self.config.camera)
    }

    /// Heading error to the target, used by experts and diagnostics.
    pub fn target_bearing(&self) -> Option<f64> {
        self.state
            .target()
            .map(|t| wrap_angle(self.state.robot.bearing_error(t.pose.x, t.pose.y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scene::{EntityAttrs, Shape};
    use crate::task::{Color, Gait, ObjectCategory, SpeedLevel, Split, TaskTarget};
    use std::f64::consts::FRAC_PI_2;

    fn task(skill: Skill) -> TaskSpec {
        let target = match skill {
            Skill::Unload => TaskTarget::Object {
                color: Color::Blue,
                category: ObjectCategory::Traybox,
            },
            _ => TaskTarget::Object {
                color: Color::Red,
                category: ObjectCategory::Cube,
            },
        };
        TaskSpec {
            skill,
            target,
            speed: SpeedLevel::Normal,
            gait: Gait::Trot,
            split: Split::SeenSim,
        }
    }

    fn entity(kind: EntityKind, x: f64, y: f64, dims: [f64; 3], is_target: bool) -> Entity {
        Entity {
            kind,
            shape: Shape::Cube,
            color: Color::Red,
            pose: Pose2::new(x, y, 0.0),
            dims,
            is_target,
            attrs: EntityAttrs::default(),
        }
    }

    fn goto_scene(tx: f64, ty: f64) -> Scene {
        let mut s = Scene::empty();
        s.entities
            .push(entity(EntityKind::TargetObject, tx, ty, [0.3; 3], true));
        s
    }

    fn cmd(v_x: f64, v_y: f64, omega_z: f64) -> ActionCommand {
        let b = BodyState::default();
        ActionCommand {
            v_x,
            v_y,
            omega_z,
            theta_1: b.theta[0],
            theta_2: b.theta[1],
            theta_3: b.theta[2],
            f: b.f,
            h_z: b.h_z,
            phi: b.phi,
            s_y: b.s_y,
            h_z_f: b.h_z_f,
            t: false,
        }
    }

    #[test]
    fn rate_config_requires_integer_ratio() {
        assert!(RateConfig::default().validate().is_ok());
        assert_eq!(RateConfig::default().substeps(), 25);
        assert!(RateConfig {
            f_high: 50.0,
            f_low: 3.0
        }
        .validate()
        .is_err());
        assert!(RateConfig {
            f_high: 1.0,
            f_low: 2.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn zero_command_only_advances_time() {
        let cfg = SimConfig::default();
        let s0 = WorldState::from_scene(&goto_scene(3.0, 1.0), &cfg);
        let s1 = apply_command(&s0, &cmd(0.0, 0.0, 0.0), &cfg).unwrap();
        assert_eq!(s1.robot, s0.robot);
        assert_eq!(s1.sim_time, 0.5);
        assert_eq!(s1.step_count, 1);
    }

    #[test]
    fn straight_line_tick() {
        let cfg = SimConfig::default();
        let s0 = WorldState::from_scene(&goto_scene(3.0, 1.0), &cfg);
        let s1 = apply_command(&s0, &cmd(1.0, 0.0, 0.0), &cfg).unwrap();
        assert!((s1.robot.x - 0.5).abs() < 1e-12);
        assert_eq!(s1.robot.y, 0.0);
    }

    #[test]
    fn rotation_matches_closed_form() {
        let cfg = SimConfig::default();
        let mut s = WorldState::from_scene(&goto_scene(3.0, 1.0), &cfg);
        for _ in 0..3 {
            s = apply_command(&s, &cmd(0.0, 0.0, 1.0), &cfg).unwrap();
        }
        assert!((s.robot.yaw - 1.5).abs() < 1e-12);
        let rest = (FRAC_PI_2 - 1.5) * cfg.rates.f_low;
        s = apply_command(&s, &cmd(0.0, 0.0, rest), &cfg).unwrap();
        assert!((s.robot.yaw - FRAC_PI_2).abs() < 1e-12);

        // arc: x = v/w sin(wt), y = v/w (1 - cos(wt)); Euler error is O(dt)
        let (v, w) = (0.6, 0.8);
        let mut s = WorldState::from_scene(&goto_scene(3.0, 1.0), &cfg);
        for _ in 0..4 {
            s = apply_command(&s, &cmd(v, 0.0, w), &cfg).unwrap();
        }
        let t = 2.0;
        let (x, y) = (v / w * (w * t).sin(), v / w * (1.0 - (w * t).cos()));
        assert!((s.robot.x - x).abs() < 0.02 && (s.robot.y - y).abs() < 0.02);
        assert!((s.robot.yaw - w * t).abs() < 1e-12);
    }

    #[test]
    fn one_tick_equals_explicit_substeps() {
        let cfg = SimConfig::default();
        let s0 = WorldState::from_scene(&goto_scene(3.0, 1.0), &cfg);
        let mut c = cmd(0.7, -0.2, 0.4);
        c.h_z = 0.12;
        c.phi = 0.3;
        let a = apply_command(&s0, &c, &cfg).unwrap();
        let mut b = s0.clone();
        for _ in 0..cfg.rates.substeps() {
            substep(&mut b, &c, 1.0 / cfg.rates.f_high, &cfg);
        }
        finish_tick(&mut b, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn body_slews_at_configured_rate() {
        let cfg = SimConfig::default();
        let s0 = WorldState::from_scene(&goto_scene(3.0, 1.0), &cfg);
        let mut c = cmd(0.0, 0.0, 0.0);
        c.h_z = 0.10;
        let s1 = apply_command(&s0, &c, &cfg).unwrap();
        // 0.2 m/s over 0.5 s
        assert!((s1.body.h_z - 0.15).abs() < 1e-9);
    }

    #[test]
    fn non_finite_pose_is_an_error() {
        let cfg = SimConfig::default();
        let s0 = WorldState::from_scene(&goto_scene(3.0, 1.0), &cfg);
        assert!(matches!(
            apply_command(&s0, &cmd(f64::INFINITY, 0.0, 0.0), &cfg),
            Err(SimError::NonFinite(_))
        ));
    }

    #[test]
    fn collision_examples() {
        let cfg = SimConfig::default();
        let mut scene = goto_scene(3.0, 1.0);
        scene
            .entities
            .push(entity(EntityKind::Obstacle, 3.0, 0.0, [0.4, 0.4, 0.4], false));
        let mut s = WorldState::from_scene(&scene, &cfg);
        assert_eq!(check_collision(&s, &cfg), None);
        s.robot = Pose2::new(2.92, 0.05, 0.0);
        assert_eq!(check_collision(&s, &cfg), Some(Violation::Contact { entity: 1 }));
    }

    fn crawl_state(h_z: f64) -> (WorldState, SimConfig) {
        let cfg = SimConfig::default();
        let mut scene = goto_scene(3.0, 1.0);
        let mut bar = entity(EntityKind::Bar, 1.8, 0.5, [0.1, 4.0, 0.06], false);
        bar.attrs.clearance = Some(0.2);
        scene.entities.push(bar);
        let mut s = WorldState::from_scene(&scene, &cfg);
        s.body.h_z = h_z;
        (s, cfg)
    }

    #[test]
    fn crawl_bar_violation_by_dense_sampling() {
        // straight run along y = 0.5 from x = 0 to x = 3.6
        for &h in &[0.25, 0.19] {
            let (mut s, cfg) = crawl_state(h);
            let r = cfg.footprint_radius;
            let mut flagged = Vec::new();
            for i in 0..=3600 {
                s.robot = Pose2::new(i as f64 * 0.001, 0.5, 0.0);
                if check_collision(&s, &cfg).is_some() {
                    flagged.push(s.robot.x);
                }
            }
            // oracle: disc overlaps the bar slab iff |x - 1.8| < 0.05 + r
            let expected: Vec<f64> = (0..=3600)
                .map(|i| i as f64 * 0.001)
                .filter(|x| h >= 0.2 && (x - 1.8).abs() < 0.05 + r)
                .collect();
            assert_eq!(flagged.len(), expected.len(), "h_z = {h}");
            for (a, b) in flagged.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn go_to_success_radius_is_strict() {
        let cfg = SimConfig::default();
        let t = task(Skill::GoTo);
        let mut s = WorldState::from_scene(&goto_scene(3.0, 1.0), &cfg);
        s.robot = Pose2::new(2.01, 1.0, 0.0);
        assert_eq!(check_success(&s, &t, &cfg).unwrap().status, Status::Success);
        s.robot = Pose2::new(1.99, 1.0, 0.0);
        assert_eq!(check_success(&s, &t, &cfg).unwrap().status, Status::Running);
        s.robot = Pose2::new(2.0, 1.0, 0.0);
        assert_eq!(check_success(&s, &t, &cfg).unwrap().status, Status::Running);
    }

    #[test]
    fn unload_containment_by_point_in_box() {
        let cfg = SimConfig::default();
        let mut scene = Scene::empty();
        scene
            .entities
            .push(entity(EntityKind::Receptacle, 3.0, 1.0, [0.6, 0.6, 0.15], true));
        scene.carried = Some(entity(EntityKind::CarriedBall, 0.0, 0.0, [0.16; 3], false));
        let t = task(Skill::Unload);
        let base = WorldState::from_scene(&scene, &cfg);
        for i in 0..=40 {
            for j in 0..=40 {
                let (x, y) = (2.5 + i as f64 * 0.025, 0.5 + j as f64 * 0.025);
                let mut s = base.clone();
                s.carried = None;
                s.progress.released_at = Some((x, y));
                let inside = (x - 3.0).abs() <= 0.3 && (y - 1.0).abs() <= 0.3;
                let want = if inside { Status::Success } else { Status::WrongTarget };
                assert_eq!(check_success(&s, &t, &cfg).unwrap().status, want, "{x} {y}");
            }
        }
    }

    #[test]
    fn pitching_down_releases_ball_ahead() {
        let cfg = SimConfig::default();
        let mut scene = Scene::empty();
        scene
            .entities
            .push(entity(EntityKind::Receptacle, 0.85, 0.0, [0.6, 0.6, 0.15], true));
        scene.carried = Some(entity(EntityKind::CarriedBall, 0.0, 0.0, [0.16; 3], false));
        let mut world = World::new(&scene, task(Skill::Unload), cfg).unwrap();
        let mut c = cmd(0.0, 0.0, 0.0);
        c.phi = -0.4;
        let out = world.step(&c).unwrap();
        assert_eq!(out.status, Status::Success);
        let (x, y) = world.state().progress.released_at.unwrap();
        assert!((x - 0.7).abs() < 1e-12 && y == 0.0);
    }

    #[test]
    fn terminal_states_are_absorbing() {
        let cfg = SimConfig::default();
        let mut world = World::new(&goto_scene(1.2, 0.0), task(Skill::GoTo), cfg).unwrap();
        let out = world.step(&cmd(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(out.status, Status::Success);
        assert_eq!(
            world.step(&cmd(0.0, 0.0, 0.0)),
            Err(SimError::Terminal(Status::Success))
        );
    }

    #[test]
    fn collision_fails_any_task_and_timeout_applies() {
        let mut cfg = SimConfig::default();
        let mut scene = goto_scene(3.0, 0.0);
        scene
            .entities
            .push(entity(EntityKind::Obstacle, 1.0, 0.0, [0.4, 0.4, 0.4], false));
        let mut world = World::new(&scene, task(Skill::GoTo), cfg.clone()).unwrap();
        let mut status = Status::Running;
        while !status.is_terminal() {
            status = world.step(&cmd(0.5, 0.0, 0.0)).unwrap().status;
        }
        assert_eq!(status, Status::Collision);

        cfg.max_steps = 3;
        let mut world = World::new(&goto_scene(3.0, 0.0), task(Skill::GoTo), cfg).unwrap();
        let statuses: Vec<Status> = (0..3)
            .map(|_| world.step(&cmd(0.0, 0.0, 0.0)).unwrap().status)
            .collect();
        assert_eq!(statuses, vec![Status::Running, Status::Running, Status::Timeout]);
    }

    #[test]
    fn scene_mismatch_is_a_config_error() {
        let cfg = SimConfig::default();
        assert!(matches!(
            World::new(&goto_scene(3.0, 1.0), task(Skill::GoAvoid), cfg.clone()),
            Err(SimError::SceneMismatch(_))
        ));
        assert!(World::new(&Scene::empty(), task(Skill::GoTo), cfg).is_err());
    }

    #[test]
    fn distinguish_needs_four_aligned_ticks() {
        let cfg = SimConfig::default();
        let mut scene = Scene::empty();
        let mut a = entity(EntityKind::LetterBox, 3.0, 0.0, [0.4; 3], true);
        a.attrs.letter = Some('a');
        let mut b = entity(EntityKind::LetterBox, 3.0, 2.0, [0.4; 3], false);
        b.attrs.letter = Some('b');
        scene.entities = vec![a, b];
        let t = TaskSpec {
            skill: Skill::Distinguish,
            target: TaskTarget::Letter { letter: 'a' },
            ..task(Skill::GoTo)
        };
        let mut world = World::new(&scene, t, cfg).unwrap();
        let statuses: Vec<Status> = (0..4)
            .map(|_| world.step(&cmd(0.0, 0.0, 0.0)).unwrap().status)
            .collect();
        assert_eq!(statuses[..3], [Status::Running; 3]);
        assert_eq!(statuses[3], Status::Success);
    }

    proptest::proptest! {
        #[test]
        fn distance_changes_at_most_by_travel(
            vx in -1.0f64..1.0, vy in -0.6f64..0.6, w in -1.0f64..1.0,
            x in -1.0f64..2.0, y in -1.0f64..2.0, yaw in -3.1f64..3.1,
        ) {
            let cfg = SimConfig::default();
            let mut s = WorldState::from_scene(&goto_scene(3.0, 1.0), &cfg);
            s.robot = Pose2::new(x, y, yaw);
            let d0 = s.distance_to_target();
            let s1 = apply_command(&s, &cmd(vx, vy, w), &cfg).unwrap();
            let d1 = s1.distance_to_target();
            proptest::prop_assert!((d1 - d0).abs() <= (vx.abs() + vy.abs()) / cfg.rates.f_low + 1e-9);
        }
    }
}
