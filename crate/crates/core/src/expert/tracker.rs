use serde::{Deserialize, Serialize};

use super::astar::PlannedPath;
use crate::codec::ActionCommand;
use crate::sim::{BodyState, WorldState};
use crate::task::{Gait, SpeedLevel};

/// PD gains on along-track distance and heading error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PDGains {
    pub kp_lin: f64,
    pub kd_lin: f64,
    pub kp_ang: f64,
    pub kd_ang: f64,
}

impl Default for PDGains {
    fn default() -> Self {
        PDGains {
            kp_lin: 1.0,
            kd_lin: 0.1,
            kp_ang: 2.0,
            kd_ang: 0.2,
        }
    }
}

impl PDGains {
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.kp_lin, self.kd_lin, self.kp_ang, self.kd_ang];
        if all.iter().all(|g| g.is_finite() && *g >= 0.0) {
            Ok(())
        } else {
            Err(format!("gains must be finite and non-negative: {self:?}"))
        }
    }
}

/// Target |v_x| range for each speed level (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedBands {
    pub slow: [f64; 2],
    pub normal: [f64; 2],
    pub fast: [f64; 2],
}

impl Default for SpeedBands {
    fn default() -> Self {
        SpeedBands {
            slow: [0.2, 0.4],
            normal: [0.4, 0.7],
            fast: [0.7, 1.0],
        }
    }
}

impl SpeedBands {
    pub fn band(&self, level: SpeedLevel) -> [f64; 2] {
        match level {
            SpeedLevel::Slow => self.slow,
            SpeedLevel::Normal => self.normal,
            SpeedLevel::Fast => self.fast,
        }
    }

    /// Bands must be non-empty, ordered and non-overlapping.
    pub fn validate(&self) -> Result<(), String> {
        let b = [self.slow, self.normal, self.fast];
        for w in &b {
            if !(w[0] >= 0.0 && w[0] < w[1]) {
                return Err(format!("bad band {w:?}"));
            }
        }
        if b[0][1] > b[1][0] || b[1][1] > b[2][0] {
            return Err(format!("bands overlap or are out of order: {b:?}"));
        }
        Ok(())
    }
}

/// Phase triple and stepping frequency for one gait.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitEntry {
    pub phases: [f64; 3],
    pub frequency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitTable {
    pub trot: GaitEntry,
    pub bound: GaitEntry,
    pub pace: GaitEntry,
    pub pronk: GaitEntry,
}

impl Default for GaitTable {
    fn default() -> Self {
        let e = |g: Gait, frequency| GaitEntry {
            phases: g.phases(),
            frequency,
        };
        GaitTable {
            trot: e(Gait::Trot, 3.0),
            bound: e(Gait::Bound, 2.5),
            pace: e(Gait::Pace, 2.5),
            pronk: e(Gait::Pronk, 2.0),
        }
    }
}

impl GaitTable {
    pub fn get(&self, gait: Gait) -> GaitEntry {
        match gait {
            Gait::Trot => self.trot,
            Gait::Bound => self.bound,
            Gait::Pace => self.pace,
            Gait::Pronk => self.pronk,
        }
    }
}

/// Expert settings: planner grid, tracking law and body profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpertConfig {
    pub grid: super::grid::GridConfig,
    pub gains: PDGains,
    pub bands: SpeedBands,
    pub lookahead: f64,
    pub max_omega: f64,
    /// Heading error above which the tracker drops to the band floor (deg).
    pub sharp_turn_deg: f64,
    pub gaits: GaitTable,
    /// Straight run-up in front of a tunnel entrance (m).
    pub tunnel_approach: f64,
    /// Body height used for the whole crawl episode.
    pub crawl_height: f64,
    /// Commanded pitch when unloading; must lie below the release pitch.
    pub unload_pitch: f64,
    /// Straight run-up behind the unload stand point (m).
    pub unload_approach: f64,
    /// Heading tolerance before pitching down to unload (deg).
    pub unload_align_deg: f64,
    /// Bearing error at which a distinguish sweep starts (deg).
    pub sweep_entry_deg: f64,
    /// Yaw advance per tick while sweeping across the letter (deg).
    pub sweep_step_deg: f64,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        ExpertConfig {
            grid: super::grid::GridConfig {
                inflation: 0.35,
                ..Default::default()
            },
            gains: PDGains::default(),
            bands: SpeedBands::default(),
            lookahead: 0.4,
            max_omega: 1.0,
            sharp_turn_deg: 30.0,
            gaits: GaitTable::default(),
            tunnel_approach: 1.0,
            crawl_height: 0.14,
            unload_pitch: -0.35,
            unload_approach: 0.9,
            unload_align_deg: 3.0,
            sweep_entry_deg: 7.0,
            sweep_step_deg: 4.0,
        }
    }
}

impl ExpertConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.gains.validate()?;
        self.bands.validate()?;
        if !(self.lookahead > 0.0 && self.max_omega > 0.0 && self.grid.resolution > 0.0) {
            return Err("lookahead, max_omega and resolution must be positive".into());
        }
        if self.grid.inflation < 0.0 {
            return Err("inflation must be non-negative".into());
        }
        Ok(())
    }

    /// Command with velocities zeroed and gait and body fields filled.
    pub fn base_command(&self, gait: Gait, body: &BodyState) -> ActionCommand {
        let g = self.gaits.get(gait);
        ActionCommand {
            v_x: 0.0,
            v_y: 0.0,
            omega_z: 0.0,
            theta_1: g.phases[0],
            theta_2: g.phases[1],
            theta_3: g.phases[2],
            f: g.frequency,
            h_z: body.h_z,
            phi: body.phi,
            s_y: body.s_y,
            h_z_f: body.h_z_f,
            t: false,
        }
    }
}

/// Pure-pursuit target selection with a PD law on top.
#[derive(Debug, Clone)]
pub struct PathTracker {
    path: PlannedPath,
    /// Arc length from the start to each waypoint.
    arc: Vec<f64>,
    band: [f64; 2],
    gains: PDGains,
    lookahead: f64,
    max_omega: f64,
    f_low: f64,
    progress: usize,
    sharp_turn: f64,
    prev_heading: Option<f64>,
    prev_distance: Option<f64>,
}

impl PathTracker {
    pub fn new(path: PlannedPath, level: SpeedLevel, cfg: &ExpertConfig, f_low: f64) -> Self {
        assert!(!path.is_empty(), "tracker needs a nonempty path");
        let mut arc = vec![0.0];
        for w in path.waypoints.windows(2) {
            let step = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
            arc.push(arc.last().unwrap() + step);
        }
        PathTracker {
            path,
            arc,
            band: cfg.bands.band(level),
            gains: cfg.gains,
            // never look less than one tick of travel ahead
            lookahead: cfg.lookahead.max(cfg.bands.band(level)[1] / f_low),
            max_omega: cfg.max_omega,
            f_low,
            progress: 0,
            sharp_turn: cfg.sharp_turn_deg.to_radians(),
            prev_heading: None,
            prev_distance: None,
        }
    }

    pub fn path(&self) -> &PlannedPath {
        &self.path
    }

    /// Distance from a point to the path polyline.
    pub fn cross_track(&self, x: f64, y: f64) -> f64 {
        let w = &self.path.waypoints;
        if w.len() == 1 {
            return (x - w[0].0).hypot(y - w[0].1);
        }
        w.windows(2)
            .map(|s| segment_distance((x, y), s[0], s[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Remaining path length from the robot's closest waypoint.
    pub fn remaining(&self, x: f64, y: f64) -> f64 {
        let (wx, wy) = self.path.waypoints[self.progress];
        (x - wx).hypot(y - wy) + self.arc.last().unwrap() - self.arc[self.progress]
    }

    /// True once the robot is within `tol` of the path end, or has passed it
    /// so the end lies behind.
    pub fn arrived(&self, state: &WorldState, tol: f64) -> bool {
        let r = state.robot;
        let end = *self.path.waypoints.last().unwrap();
        let near_end = self.arc.last().unwrap() - self.arc[self.progress] <= self.lookahead;
        self.remaining(r.x, r.y) < tol
            || near_end
                && r.distance_to(end.0, end.1) < self.lookahead
                && r.bearing_error(end.0, end.1).abs() > std::f64::consts::FRAC_PI_2
    }

    /// Returns `(v_x, omega_z)` for the current robot pose.
    pub fn velocity(&mut self, state: &WorldState) -> (f64, f64) {
        let r = state.robot;
        let w = &self.path.waypoints;
        // closest waypoint, searched forward only so the tracker never backtracks
        let window_end = if self.prev_heading.is_none() {
            w.len()
        } else {
            (self.progress + 40).min(w.len())
        };
        let mut best = self.progress;
        let mut best_d = f64::INFINITY;
        for (i, &(x, y)) in w.iter().enumerate().take(window_end).skip(self.progress) {
            let d = r.distance_to(x, y);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        self.progress = best;
        let look = w[best..]
            .iter()
            .find(|&&(x, y)| r.distance_to(x, y) >= self.lookahead)
            .copied()
            .unwrap_or(*w.last().unwrap());
        let remaining = self.remaining(r.x, r.y);

        let heading = if r.distance_to(look.0, look.1) > 1e-9 {
            r.bearing_error(look.0, look.1)
        } else {
            0.0
        };
        let dt = 1.0 / self.f_low;
        let dh = self.prev_heading.map_or(0.0, |p| (heading - p) / dt);
        let dd = self.prev_distance.map_or(0.0, |p| (remaining - p) / dt);
        self.prev_heading = Some(heading);
        self.prev_distance = Some(remaining);

        let omega = (self.gains.kp_ang * heading + self.gains.kd_ang * dh).clamp(-self.max_omega, self.max_omega);
        let raw = self.gains.kp_lin * remaining + self.gains.kd_lin * dd;
        // slowest in-band speed through sharp turns; near the end, never
        // overshoot the goal or orbit it
        let ceiling = if heading.abs() > self.sharp_turn {
            self.band[0]
        } else {
            self.band[1]
        };
        let v = raw
            .clamp(self.band[0], ceiling)
            .min(remaining * self.f_low * heading.cos().max(0.0));
        (v.max(0.0), omega)
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// One tracking command from a fresh tracker (no derivative history).
pub fn track_path(
    state: &WorldState,
    path: &PlannedPath,
    level: SpeedLevel,
    cfg: &ExpertConfig,
    gait: Gait,
    f_low: f64,
) -> ActionCommand {
    let mut tracker = PathTracker::new(path.clone(), level, cfg, f_low);
    let (v_x, omega_z) = tracker.velocity(state);
    let mut cmd = cfg.base_command(gait, &state.body);
    cmd.v_x = v_x;
    cmd.omega_z = omega_z;
    cmd
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expert::grid::OccupancyGrid;
    use crate::sim::{Pose2, Scene, SimConfig};
    use std::f64::consts::FRAC_PI_2;

    fn straight_path() -> PlannedPath {
        let g = OccupancyGrid::new(80, 10, 0.05, (0.0, -0.25));
        PlannedPath::from_cells(&g, (0..80).map(|x| (x, 5)).collect())
    }

    fn state_at(pose: Pose2) -> WorldState {
        let mut s = WorldState::from_scene(&Scene::empty(), &SimConfig::default());
        s.robot = pose;
        s
    }

    #[test]
    fn aligned_robot_goes_straight() {
        let cfg = ExpertConfig::default();
        let s = state_at(Pose2::new(0.5, 0.025, 0.0));
        let c = track_path(&s, &straight_path(), SpeedLevel::Normal, &cfg, Gait::Trot, 2.0);
        assert!(c.omega_z.abs() < 0.05);
        assert!((0.4..=0.7).contains(&c.v_x));
        assert_eq!([c.theta_1, c.theta_2, c.theta_3], [0.5, 0.0, 0.0]);
        assert!(!c.t);
    }

    #[test]
    fn turn_direction_follows_heading_error() {
        let cfg = ExpertConfig::default();
        let p = straight_path();
        let left = track_path(
            &state_at(Pose2::new(0.5, 0.025, -FRAC_PI_2)),
            &p,
            SpeedLevel::Slow,
            &cfg,
            Gait::Pace,
            2.0,
        );
        let right = track_path(
            &state_at(Pose2::new(0.5, 0.025, FRAC_PI_2)),
            &p,
            SpeedLevel::Slow,
            &cfg,
            Gait::Pace,
            2.0,
        );
        assert!(left.omega_z > 0.0 && right.omega_z < 0.0);
    }

    #[test]
    fn arrival_limits_speed() {
        let cfg = ExpertConfig::default();
        let s = state_at(Pose2::new(3.9, 0.025, 0.0));
        let c = track_path(&s, &straight_path(), SpeedLevel::Fast, &cfg, Gait::Trot, 2.0);
        // at most 0.125 m of path remains, so one tick must not overshoot it
        assert!(c.v_x <= 0.125 * 2.0 + 1e-12, "{}", c.v_x);
    }

    #[test]
    fn band_validation() {
        assert!(SpeedBands::default().validate().is_ok());
        let bad = SpeedBands {
            slow: [0.2, 0.5],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(PDGains {
            kp_lin: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
