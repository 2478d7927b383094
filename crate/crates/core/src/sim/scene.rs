//! Scene entities and their collision footprints.

use serde::{Deserialize, Serialize};

use super::geometry::{Pose2, Rect};
use crate::task::{Color, ObjectCategory, TunnelSection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    TargetObject,
    Obstacle,
    Tunnel,
    Bar,
    Receptacle,
    LetterBox,
    CarriedBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Cube,
    Ball,
    Cylinder,
    /// Bounding-box stand-in for a furniture mesh.
    MeshProxy,
    Panel,
    Tunnel,
    Bar,
}

impl Shape {
    pub fn for_category(category: ObjectCategory) -> Shape {
        use ObjectCategory::*;
        match category {
            Cube | Cuboid => Shape::Cube,
            Ball | Ellipsoid => Shape::Ball,
            Cylinder | Cone | Vase | Jar | Trashcan | Dustbin | Fan | Heater => Shape::Cylinder,
            Window => Shape::Panel,
            _ => Shape::MeshProxy,
        }
    }
}

/// Kind-specific attributes; unused fields stay `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EntityAttrs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<ObjectCategory>,
    /// Free height under a bar (m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clearance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<TunnelSection>,
    /// Free width between tunnel walls (m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub letter: Option<char>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub kind: EntityKind,
    pub shape: Shape,
    pub color: Color,
    pub pose: Pose2,
    /// Extents along the entity's own x, y and z axes (m).
    pub dims: [f64; 3],
    #[serde(default)]
    pub is_target: bool,
    #[serde(default)]
    pub attrs: EntityAttrs,
}

/// Post size at each end of a bar.
pub const BAR_POST: f64 = 0.1;

impl Entity {
    pub fn footprint(&self) -> Rect {
        Rect::new(self.pose.x, self.pose.y, self.dims[0], self.dims[1], self.pose.yaw)
    }

    fn local_rect(&self, lx: f64, ly: f64, len_x: f64, len_y: f64) -> Rect {
        let (s, c) = self.pose.yaw.sin_cos();
        Rect::new(
            self.pose.x + c * lx - s * ly,
            self.pose.y + s * lx + c * ly,
            len_x,
            len_y,
            self.pose.yaw,
        )
    }

    pub fn inner_width(&self) -> f64 {
        self.attrs.inner_width.unwrap_or(self.dims[1] * 0.8)
    }

    /// Two side walls of a tunnel.
    pub fn tunnel_walls(&self) -> [Rect; 2] {
        let inner = self.inner_width();
        let wall = (self.dims[1] - inner) / 2.0;
        let off = inner / 2.0 + wall / 2.0;
        [
            self.local_rect(0.0, off, self.dims[0], wall),
            self.local_rect(0.0, -off, self.dims[0], wall),
        ]
    }

    /// Free passage between tunnel walls.
    pub fn tunnel_interior(&self) -> Rect {
        self.local_rect(0.0, 0.0, self.dims[0], self.inner_width())
    }

    /// Support posts at both ends of a bar.
    pub fn bar_posts(&self) -> [Rect; 2] {
        let off = self.dims[1] / 2.0 + BAR_POST / 2.0;
        [
            self.local_rect(0.0, off, BAR_POST, BAR_POST),
            self.local_rect(0.0, -off, BAR_POST, BAR_POST),
        ]
    }

    /// Footprints the robot may never overlap, independent of its body height.
    pub fn solids(&self) -> Vec<Rect> {
        match self.kind {
            EntityKind::Obstacle | EntityKind::Receptacle | EntityKind::LetterBox => {
                vec![self.footprint()]
            }
            EntityKind::Tunnel => self.tunnel_walls().to_vec(),
            EntityKind::Bar => self.bar_posts().to_vec(),
            EntityKind::TargetObject | EntityKind::CarriedBall => Vec::new(),
        }
    }

    pub fn clearance(&self) -> f64 {
        self.attrs.clearance.unwrap_or(self.dims[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Sim,
    /// Stand-in for laboratory footage: shifted palette and sensor noise.
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl Default for Arena {
    fn default() -> Self {
        Arena {
            min_x: -2.0,
            max_x: 6.0,
            min_y: -3.0,
            max_y: 5.0,
        }
    }
}

impl Arena {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

/// Initial scene: entities around a robot starting at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub arena: Arena,
    pub domain: Domain,
    /// Seed for render noise in the real domain.
    #[serde(default)]
    pub noise_seed: u64,
    #[serde(default)]
    pub carried: Option<Entity>,
    #[serde(default, rename = "entity")]
    pub entities: Vec<Entity>,
}

impl Scene {
    pub fn empty() -> Self {
        Scene {
            arena: Arena::default(),
            domain: Domain::Sim,
            noise_seed: 0,
            carried: None,
            entities: Vec::new(),
        }
    }

    pub fn target(&self) -> Option<&Entity> {
        self.entities.iter().find(|e| e.is_target)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene serializes")
    }

    pub fn from_toml(text: &str) -> Result<Scene, toml::de::Error> {
        toml::from_str(text)
    }
}
