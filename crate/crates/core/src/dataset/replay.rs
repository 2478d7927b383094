//! Re-simulates a stored episode from its task and seed, for trajectory plots.

use std::fmt::Write as _;

use thiserror::Error;

use super::episode::{Episode, EpisodeOutcome};
use crate::codec::CodecError;
use crate::expert::sample_scene;
use crate::sim::{Pose2, Rect, Scene, SimError, Status, World};
use crate::QuardConfig;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("{0} has no simulator scene to replay")]
    NoScene(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("replay of {id} ended as {got:?}, stored outcome is {stored:?}")]
    Diverged { id: String, stored: Status, got: Status },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scene: Scene,
    /// Robot pose before the first step and after every step.
    pub poses: Vec<Pose2>,
    pub status: Status,
    pub released_at: Option<(f64, f64)>,
}

/// Rebuilds the scene and applies the stored tokens tick by tick. Fails for
/// imported recordings and when the replay disagrees with the stored outcome.
pub fn replay_episode(e: &Episode, cfg: &QuardConfig) -> Result<Trajectory, ReplayError> {
    let stored = match &e.outcome {
        EpisodeOutcome::Finished(o) => o.status,
        _ => return Err(ReplayError::NoScene(e.episode_id.clone())),
    };
    let scene = sample_scene(&e.task, e.seed, &cfg.scene);
    let mut world = World::new(&scene, e.task, cfg.sim.clone())?;
    let mut poses = vec![world.state().robot];
    for s in &e.steps {
        let cmd = cfg.action_space.detokenize(&s.tokens)?;
        world.step(&cmd)?;
        poses.push(world.state().robot);
    }
    let got = world.outcome().status;
    if got != stored {
        return Err(ReplayError::Diverged {
            id: e.episode_id.clone(),
            stored,
            got,
        });
    }
    Ok(Trajectory {
        scene,
        poses,
        status: got,
        released_at: world.state().progress.released_at,
    })
}

const PX_PER_M: f64 = 60.0;

fn polygon(s: &mut String, r: &Rect, fill: &str, map: &dyn Fn(f64, f64) -> (f64, f64)) {
    let pts: Vec<String> = r
        .corners()
        .iter()
        .map(|&(x, y)| {
            let (u, v) = map(x, y);
            format!("{u:.1},{v:.1}")
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="{fill}" stroke="#333" stroke-width="1"/>"##,
        pts.join(" ")
    );
}

/// Top-down plot: arena, entity footprints, the success circle around the
/// target, and the robot path from start (open dot) to end (filled dot).
pub fn trajectory_svg(t: &Trajectory, success_radius: f64) -> String {
    let a = t.scene.arena;
    let (w, h) = ((a.max_x - a.min_x) * PX_PER_M, (a.max_y - a.min_y) * PX_PER_M);
    let map = |x: f64, y: f64| ((x - a.min_x) * PX_PER_M, (a.max_y - y) * PX_PER_M);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect width="{w:.0}" height="{h:.0}" fill="#f7f7f2" stroke="#999"/>"##
    );
    for e in &t.scene.entities {
        let [r, g, b] = e.color.rgb();
        let fill = format!("rgb({r},{g},{b})");
        let solids = e.solids();
        if solids.is_empty() {
            polygon(&mut s, &e.footprint(), &fill, &map);
        }
        for rect in &solids {
            polygon(&mut s, rect, &fill, &map);
        }
        if e.is_target {
            let (u, v) = map(e.pose.x, e.pose.y);
            let _ = writeln!(
                s,
                r##"<circle class="target" cx="{u:.1}" cy="{v:.1}" r="{:.1}" fill="none" stroke="#c00" stroke-dasharray="6 4"/>"##,
                success_radius * PX_PER_M
            );
        }
    }
    let pts: Vec<String> = t
        .poses
        .iter()
        .map(|p| {
            let (u, v) = map(p.x, p.y);
            format!("{u:.1},{v:.1}")
        })
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline class="path" points="{}" fill="none" stroke="#1f4e9c" stroke-width="2"/>"##,
        pts.join(" ")
    );
    if let (Some(first), Some(last)) = (t.poses.first(), t.poses.last()) {
        let (u, v) = map(first.x, first.y);
        let _ = writeln!(
            s,
            r##"<circle class="start" cx="{u:.1}" cy="{v:.1}" r="5" fill="white" stroke="#1f4e9c" stroke-width="2"/>"##
        );
        let (u, v) = map(last.x, last.y);
        let _ = writeln!(
            s,
            r##"<circle class="end" cx="{u:.1}" cy="{v:.1}" r="5" fill="#1f4e9c"/>"##
        );
    }
    if let Some((x, y)) = t.released_at {
        let (u, v) = map(x, y);
        let _ = writeln!(
            s,
            r##"<circle class="ball" cx="{u:.1}" cy="{v:.1}" r="4" fill="white" stroke="#000"/>"##
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="8" y="18" font-family="monospace" font-size="13">{}</text>"#,
        t.status.name()
    );
    s.push_str("</svg>\n");
    s
}
