//! Seeded scene sampling. Every task draws the target position first so the
//! same seed places the target identically across skills.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sim::{Arena, Domain, Entity, EntityAttrs, EntityKind, Pose2, Scene, Shape};
use crate::task::{
    Color, ObjectCategory, Skill, Split, TaskSpec, TaskTarget, TunnelSection, SEEN_LETTERS, UNSEEN_LETTERS,
};

/// Placement rules for task entities. Distances are meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneRules {
    pub target_x: [f64; 2],
    pub target_y: [f64; 2],
    /// Obstacle sits this far before the target along x.
    pub avoid_offset: f64,
    pub obstacle_dims: [f64; 3],
    /// Tunnel center sits this far before the target along x.
    pub tunnel_offset: f64,
    pub tunnel_length: f64,
    pub tunnel_inner_width: f64,
    pub tunnel_wall: f64,
    pub tunnel_height: f64,
    /// Lateral spacing between the two tunnel centers.
    pub tunnel_spacing: f64,
    pub bar_offset: f64,
    pub bar_span: f64,
    pub bar_depth: f64,
    pub bar_clearance: f64,
    /// Candidate lateral offsets of the distractor letter boxes.
    pub letter_offsets: Vec<f64>,
    pub letter_box: [f64; 3],
    pub ball_diameter: f64,
}

impl Default for SceneRules {
    fn default() -> Self {
        SceneRules {
            target_x: [2.7, 3.3],
            target_y: [0.9, 1.1],
            avoid_offset: 1.5,
            obstacle_dims: [0.4, 0.6, 0.5],
            tunnel_offset: 0.0,
            tunnel_length: 0.8,
            tunnel_inner_width: 1.0,
            tunnel_wall: 0.1,
            tunnel_height: 0.6,
            tunnel_spacing: 1.6,
            bar_offset: 1.2,
            bar_span: 5.0,
            bar_depth: 0.1,
            bar_clearance: 0.20,
            letter_offsets: vec![-2.4, -1.2, 1.2, 2.4],
            letter_box: [0.4, 0.4, 0.5],
            ball_diameter: 0.16,
        }
    }
}

fn entity(kind: EntityKind, shape: Shape, color: Color, x: f64, y: f64, dims: [f64; 3]) -> Entity {
    Entity {
        kind,
        shape,
        color,
        pose: Pose2::new(x, y, 0.0),
        dims,
        is_target: false,
        attrs: EntityAttrs::default(),
    }
}

fn object(kind: EntityKind, color: Color, category: ObjectCategory, x: f64, y: f64) -> Entity {
    let mut e = entity(kind, Shape::for_category(category), color, x, y, category.dims());
    e.attrs.category = Some(category);
    e
}

/// Another color from the same palette as `color`.
fn other_color(rng: &mut ChaCha8Rng, color: Color) -> Color {
    let palette: &[Color] = if color.is_unseen() {
        &Color::UNSEEN
    } else {
        &Color::SEEN
    };
    let rest: Vec<Color> = palette.iter().copied().filter(|&c| c != color).collect();
    rest[rng.random_range(0..rest.len())]
}

/// Samples the initial scene for `task`. The robot starts at the origin
/// facing +x; real-split tasks render in the real domain.
pub fn sample_scene(task: &TaskSpec, seed: u64, rules: &SceneRules) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tx = rng.random_range(rules.target_x[0]..=rules.target_x[1]);
    let ty = rng.random_range(rules.target_y[0]..=rules.target_y[1]);
    let mut scene = Scene {
        arena: Arena::default(),
        domain: if task.split == Split::SeenReal {
            Domain::Real
        } else {
            Domain::Sim
        },
        noise_seed: seed,
        carried: None,
        entities: Vec::new(),
    };

    match (task.skill, task.target) {
        (Skill::GoTo | Skill::GoAvoid | Skill::Crawl, TaskTarget::Object { color, category }) => {
            let mut target = object(EntityKind::TargetObject, color, category, tx, ty);
            target.is_target = true;
            scene.entities.push(target);
            if task.skill == Skill::GoAvoid {
                scene.entities.push(entity(
                    EntityKind::Obstacle,
                    Shape::Cube,
                    Color::Gray,
                    tx - rules.avoid_offset,
                    ty,
                    rules.obstacle_dims,
                ));
            }
            if task.skill == Skill::Crawl {
                let mut bar = entity(
                    EntityKind::Bar,
                    Shape::Bar,
                    Color::White,
                    tx - rules.bar_offset,
                    ty,
                    [rules.bar_depth, rules.bar_span, 0.06],
                );
                bar.attrs.clearance = Some(rules.bar_clearance);
                scene.entities.push(bar);
            }
        }
        (Skill::GoThrough, TaskTarget::Tunnel { color, section }) => {
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let decoy_color = other_color(&mut rng, color);
            let decoy_section = match section {
                TunnelSection::Triangle => TunnelSection::Rectangle,
                TunnelSection::Rectangle => TunnelSection::Triangle,
            };
            let outer = rules.tunnel_inner_width + 2.0 * rules.tunnel_wall;
            let dims = [rules.tunnel_length, outer, rules.tunnel_height];
            let cx = tx - rules.tunnel_offset;
            for (is_target, color, section, cy) in [
                (true, color, section, ty),
                (false, decoy_color, decoy_section, ty + side * rules.tunnel_spacing),
            ] {
                let mut t = entity(EntityKind::Tunnel, Shape::Tunnel, color, cx, cy, dims);
                t.is_target = is_target;
                t.attrs.section = Some(section);
                t.attrs.inner_width = Some(rules.tunnel_inner_width);
                scene.entities.push(t);
            }
        }
        (Skill::Unload, TaskTarget::Object { color, category }) => {
            let mut r = object(EntityKind::Receptacle, color, category, tx, ty);
            r.is_target = true;
            scene.entities.push(r);
            let d = rules.ball_diameter;
            scene.carried = Some(entity(
                EntityKind::CarriedBall,
                Shape::Ball,
                Color::White,
                0.0,
                0.0,
                [d, d, d],
            ));
        }
        (Skill::Distinguish, TaskTarget::Letter { letter }) => {
            let pool = if SEEN_LETTERS.contains(&letter) {
                SEEN_LETTERS
            } else {
                UNSEEN_LETTERS
            };
            let mut others: Vec<char> = pool.iter().copied().filter(|&c| c != letter).collect();
            others.shuffle(&mut rng);
            let mut offsets = rules.letter_offsets.clone();
            offsets.shuffle(&mut rng);
            let mut place = |l: char, y: f64, is_target: bool| {
                let mut b = entity(
                    EntityKind::LetterBox,
                    Shape::Cube,
                    Color::White,
                    tx,
                    y,
                    rules.letter_box,
                );
                b.attrs.letter = Some(l);
                b.is_target = is_target;
                scene.entities.push(b);
            };
            place(letter, ty, true);
            for (l, off) in others.iter().zip(offsets.iter()).take(2) {
                place(*l, ty + off, false);
            }
        }
        // invalid specs get a bare target so downstream checks report the mismatch
        (_, target) => {
            let color = target.color().unwrap_or(Color::White);
            let mut e = entity(EntityKind::TargetObject, Shape::Cube, color, tx, ty, [0.3; 3]);
            e.is_target = true;
            scene.entities.push(e);
        }
    }
    scene
}
