//! Task vocabulary shared by the simulator, the expert and the instruction
//! templates: skills, object catalog, colors, speed levels and gaits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(format!("unknown {} `{}`", stringify!($name), s)),
                }
            }
        }
    };
}

named_enum!(
    /// The six command-level skills. Real-world "go to" shares [`Skill::GoTo`].
    Skill {
        Distinguish => "distinguish",
        GoTo => "go_to",
        GoAvoid => "go_avoid",
        GoThrough => "go_through",
        Crawl => "crawl",
        Unload => "unload",
    }
);

named_enum!(Color {
    Green => "green",
    Red => "red",
    Blue => "blue",
    Yellow => "yellow",
    Gold => "gold",
    Pink => "pink",
    Orange => "orange",
    Purple => "purple",
    Gray => "gray",
    White => "white",
});

named_enum!(ObjectCategory {
    Cube => "cube",
    Ball => "ball",
    Cylinder => "cylinder",
    Bookshelf => "bookshelf",
    Oven => "oven",
    Vase => "vase",
    Cooker => "cooker",
    Drawers => "drawers",
    Fan => "fan",
    Sofa => "sofa",
    Trashcan => "trashcan",
    Bench => "bench",
    Traybox => "traybox",
    Cuboid => "cuboid",
    Ellipsoid => "ellipsoid",
    Cone => "cone",
    Cabinet => "cabinet",
    Microwave => "microwave",
    Jar => "jar",
    Stove => "stove",
    Dresser => "dresser",
    Heater => "heater",
    Armchair => "armchair",
    Dustbin => "dustbin",
    Stool => "stool",
    Bucket => "bucket",
    Pillow => "pillow",
    Computer => "computer",
    Window => "window",
});

named_enum!(TunnelSection {
    Triangle => "triangle",
    Rectangle => "rectangle",
});

named_enum!(
    /// Commanded speed level; bands live in the expert config.
    SpeedLevel {
        Slow => "slow",
        Normal => "normal",
        Fast => "fast",
    }
);

named_enum!(Gait {
    Trot => "trot",
    Bound => "bound",
    Pace => "pace",
    Pronk => "pronk",
});

named_enum!(Split {
    SeenSim => "seen_sim",
    SeenReal => "seen_real",
    UnseenObject => "unseen_object",
    UnseenVerbal => "unseen_verbal",
});

impl Skill {
    /// Table-style label used in reports.
    pub fn title(self) -> &'static str {
        match self {
            Skill::Distinguish => "Distinguish",
            Skill::GoTo => "Go to",
            Skill::GoAvoid => "Go avoid",
            Skill::GoThrough => "Go through",
            Skill::Crawl => "Crawl",
            Skill::Unload => "Unload",
        }
    }
}

impl Color {
    pub const SEEN: [Color; 4] = [Color::Green, Color::Red, Color::Blue, Color::Yellow];
    pub const UNSEEN: [Color; 4] = [Color::Gold, Color::Pink, Color::Orange, Color::Purple];

    pub fn is_seen(self) -> bool {
        Self::SEEN.contains(&self)
    }

    pub fn is_unseen(self) -> bool {
        Self::UNSEEN.contains(&self)
    }

    pub fn rgb(self) -> [u8; 3] {
        match self {
            Color::Green => [40, 170, 60],
            Color::Red => [205, 40, 40],
            Color::Blue => [40, 70, 205],
            Color::Yellow => [225, 205, 40],
            Color::Gold => [212, 160, 20],
            Color::Pink => [240, 130, 175],
            Color::Orange => [245, 120, 20],
            Color::Purple => [125, 45, 165],
            Color::Gray => [85, 85, 90],
            Color::White => [235, 235, 235],
        }
    }
}

/// Where an object category sits in the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogGroup {
    BasicShape,
    Indoor,
    Outdoor,
    Receptacle,
    /// Same-category, different-shape stand-ins for a seen object.
    Variant,
    /// Categories that never appear in training scenes.
    Novel,
}

impl ObjectCategory {
    pub fn group(self) -> CatalogGroup {
        use ObjectCategory::*;
        match self {
            Cube | Ball | Cylinder => CatalogGroup::BasicShape,
            Bookshelf | Oven | Vase | Cooker | Drawers | Fan | Sofa => CatalogGroup::Indoor,
            Trashcan | Bench => CatalogGroup::Outdoor,
            Traybox => CatalogGroup::Receptacle,
            Cuboid | Ellipsoid | Cone | Cabinet | Microwave | Jar | Stove | Dresser | Heater | Armchair | Dustbin
            | Stool | Bucket => CatalogGroup::Variant,
            Pillow | Computer | Window => CatalogGroup::Novel,
        }
    }

    pub fn is_seen(self) -> bool {
        !matches!(self.group(), CatalogGroup::Variant | CatalogGroup::Novel)
    }

    /// Seen navigation targets (go to, go avoid, crawl).
    pub fn navigation_targets() -> Vec<ObjectCategory> {
        Self::ALL
            .iter()
            .copied()
            .filter(|c| {
                matches!(
                    c.group(),
                    CatalogGroup::BasicShape | CatalogGroup::Indoor | CatalogGroup::Outdoor
                )
            })
            .collect()
    }

    pub fn receptacles() -> Vec<ObjectCategory> {
        vec![ObjectCategory::Traybox]
    }

    pub fn novel() -> [ObjectCategory; 3] {
        [ObjectCategory::Pillow, ObjectCategory::Computer, ObjectCategory::Window]
    }

    /// Same-category object with a different shape.
    pub fn variant(self) -> ObjectCategory {
        use ObjectCategory::*;
        match self {
            Cube => Cuboid,
            Ball => Ellipsoid,
            Cylinder => Cone,
            Bookshelf => Cabinet,
            Oven => Microwave,
            Vase => Jar,
            Cooker => Stove,
            Drawers => Dresser,
            Fan => Heater,
            Sofa => Armchair,
            Trashcan => Dustbin,
            Bench => Stool,
            Traybox => Bucket,
            other => other,
        }
    }

    pub fn is_receptacle(self) -> bool {
        matches!(self, ObjectCategory::Traybox | ObjectCategory::Bucket)
    }

    /// Bounding extents (length, width, height) in meters.
    pub fn dims(self) -> [f64; 3] {
        use ObjectCategory::*;
        match self {
            Cube | Cuboid => [0.3, 0.3, 0.3],
            Ball | Ellipsoid => [0.3, 0.3, 0.3],
            Cylinder | Cone => [0.3, 0.3, 0.4],
            Bookshelf | Cabinet => [0.4, 0.8, 1.2],
            Oven | Microwave => [0.5, 0.5, 0.5],
            Vase | Jar => [0.25, 0.25, 0.5],
            Cooker | Stove => [0.5, 0.5, 0.4],
            Drawers | Dresser => [0.4, 0.6, 0.7],
            Fan | Heater => [0.3, 0.3, 0.9],
            Sofa | Armchair => [0.8, 1.4, 0.8],
            Trashcan | Dustbin => [0.35, 0.35, 0.6],
            Bench | Stool => [0.4, 1.0, 0.45],
            Traybox | Bucket => [0.6, 0.6, 0.15],
            Pillow => [0.4, 0.5, 0.15],
            Computer => [0.4, 0.3, 0.35],
            Window => [0.05, 0.9, 0.9],
        }
    }
}

impl SpeedLevel {
    pub fn adverb(self) -> &'static str {
        match self {
            SpeedLevel::Slow => "slowly",
            SpeedLevel::Normal => "at normal speed",
            SpeedLevel::Fast => "quickly",
        }
    }

    pub fn from_adverb(s: &str) -> Option<SpeedLevel> {
        Self::ALL.iter().copied().find(|l| l.adverb() == s)
    }
}

impl Gait {
    /// Phase offsets (theta_1, theta_2, theta_3).
    pub fn phases(self) -> [f64; 3] {
        match self {
            Gait::Trot => [0.5, 0.0, 0.0],
            Gait::Bound => [0.0, 0.5, 0.0],
            Gait::Pace => [0.0, 0.0, 0.5],
            Gait::Pronk => [0.0, 0.0, 0.0],
        }
    }
}

/// Seen letters for the distinguish task; the unseen split uses the next four.
pub const SEEN_LETTERS: [char; 4] = ['a', 'b', 'c', 'd'];
pub const UNSEEN_LETTERS: [char; 4] = ['e', 'f', 'g', 'h'];

/// What the instruction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskTarget {
    Object { color: Color, category: ObjectCategory },
    Letter { letter: char },
    Tunnel { color: Color, section: TunnelSection },
}

impl TaskTarget {
    pub fn color(&self) -> Option<Color> {
        match *self {
            TaskTarget::Object { color, .. } | TaskTarget::Tunnel { color, .. } => Some(color),
            TaskTarget::Letter { .. } => None,
        }
    }

    /// True when any part of the target lies outside the seen catalog.
    pub fn is_unseen(&self) -> bool {
        match *self {
            TaskTarget::Object { color, category } => !color.is_seen() || !category.is_seen(),
            TaskTarget::Tunnel { color, .. } => !color.is_seen(),
            TaskTarget::Letter { letter } => !SEEN_LETTERS.contains(&letter),
        }
    }
}

/// Structured task: skill, target, speed, gait and evaluation split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSpec {
    pub skill: Skill,
    pub target: TaskTarget,
    pub speed: SpeedLevel,
    pub gait: Gait,
    pub split: Split,
}

impl TaskSpec {
    /// Checks the target kind against the skill and the catalog against the split.
    pub fn validate(&self) -> Result<(), String> {
        let kind_ok = match (self.skill, self.target) {
            (Skill::Distinguish, TaskTarget::Letter { letter }) => letter.is_ascii_lowercase(),
            (Skill::GoThrough, TaskTarget::Tunnel { .. }) => true,
            (Skill::Unload, TaskTarget::Object { category, .. }) => category.is_receptacle(),
            (Skill::GoTo | Skill::GoAvoid | Skill::Crawl, TaskTarget::Object { category, .. }) => {
                !category.is_receptacle()
            }
            _ => false,
        };
        if !kind_ok {
            return Err(format!("target {:?} does not fit skill {}", self.target, self.skill));
        }
        if let Some(color) = self.target.color() {
            if !(color.is_seen() || color.is_unseen()) {
                return Err(format!("{color} is not an instruction color"));
            }
        }
        let unseen = self.target.is_unseen();
        match self.split {
            Split::UnseenObject if !unseen => {
                Err("unseen-object split needs an unseen color, letter or category".into())
            }
            Split::SeenSim | Split::SeenReal | Split::UnseenVerbal if unseen => {
                Err(format!("{} split needs a seen target", self.split))
            }
            _ => Ok(()),
        }
    }

    /// Every seen-catalog spec for a skill (all targets × speeds × gaits).
    pub fn seen_space(skill: Skill) -> Vec<TaskSpec> {
        let mut out = Vec::new();
        for target in seen_targets(skill) {
            for &speed in SpeedLevel::ALL {
                for &gait in Gait::ALL {
                    out.push(TaskSpec {
                        skill,
                        target,
                        speed,
                        gait,
                        split: Split::SeenSim,
                    });
                }
            }
        }
        out
    }
}

/// Seen targets for a skill.
pub fn seen_targets(skill: Skill) -> Vec<TaskTarget> {
    let colored = |cats: Vec<ObjectCategory>| -> Vec<TaskTarget> {
        cats.into_iter()
            .flat_map(|category| {
                Color::SEEN
                    .iter()
                    .map(move |&color| TaskTarget::Object { color, category })
            })
            .collect()
    };
    match skill {
        Skill::Distinguish => SEEN_LETTERS
            .iter()
            .map(|&letter| TaskTarget::Letter { letter })
            .collect(),
        Skill::GoThrough => TunnelSection::ALL
            .iter()
            .flat_map(|&section| {
                Color::SEEN
                    .iter()
                    .map(move |&color| TaskTarget::Tunnel { color, section })
            })
            .collect(),
        Skill::Unload => colored(ObjectCategory::receptacles()),
        Skill::GoTo | Skill::GoAvoid | Skill::Crawl => colored(ObjectCategory::navigation_targets()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seen_and_unseen_catalogs_are_disjoint() {
        for c in Color::SEEN {
            assert!(!Color::UNSEEN.contains(&c));
        }
        for &c in ObjectCategory::ALL {
            if c.is_seen() {
                assert!(!c.variant().is_seen() || c.variant() == c, "{c}");
            }
        }
        for c in ObjectCategory::novel() {
            assert!(!c.is_seen());
        }
    }

    #[test]
    fn names_parse_back() {
        for &s in Skill::ALL {
            assert_eq!(s.name().parse::<Skill>().unwrap(), s);
        }
        for &c in ObjectCategory::ALL {
            assert_eq!(c.name().parse::<ObjectCategory>().unwrap(), c);
        }
        assert!("walk".parse::<Gait>().is_err());
    }

    #[test]
    fn validation() {
        let spec = TaskSpec {
            skill: Skill::GoTo,
            target: TaskTarget::Object {
                color: Color::Red,
                category: ObjectCategory::Cube,
            },
            speed: SpeedLevel::Fast,
            gait: Gait::Trot,
            split: Split::SeenSim,
        };
        assert!(spec.validate().is_ok());
        let bad = TaskSpec {
            skill: Skill::Distinguish,
            ..spec
        };
        assert!(bad.validate().is_err());
        let unseen = TaskSpec {
            split: Split::UnseenObject,
            ..spec
        };
        assert!(unseen.validate().is_err());
        let gold = TaskSpec {
            target: TaskTarget::Object {
                color: Color::Gold,
                category: ObjectCategory::Cube,
            },
            split: Split::UnseenObject,
            ..spec
        };
        assert!(gold.validate().is_ok());
        for &skill in Skill::ALL {
            for s in TaskSpec::seen_space(skill) {
                s.validate().unwrap();
            }
        }
    }
}
