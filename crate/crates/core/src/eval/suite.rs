//! Seeded evaluation suites.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::dataset::derive_seed;
use crate::instruction::render_instruction;
use crate::task::{Color, ObjectCategory, Skill, SpeedLevel, Split, TaskSpec, TaskTarget, UNSEEN_LETTERS};

/// Seen-split episode budget per skill.
pub const SEEN_BUDGETS: [(Skill, usize); 6] = [
    (Skill::GoTo, 425),
    (Skill::GoAvoid, 500),
    (Skill::GoThrough, 150),
    (Skill::Unload, 100),
    (Skill::Distinguish, 100),
    (Skill::Crawl, 75),
];

/// Keeps evaluation seeds apart from collection seeds.
const EVAL_SALT: u64 = 0x6576_616c;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub task: TaskSpec,
    pub seed: u64,
    pub instruction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSuite {
    pub name: String,
    pub split: Split,
    pub budgets: BTreeMap<Skill, usize>,
    #[serde(rename = "entry")]
    pub entries: Vec<SuiteEntry>,
}

fn entry_for(skill: Skill, split: Split, base: u64, i: usize) -> SuiteEntry {
    let seed = derive_seed(base, &[EVAL_SALT, skill as u64, i as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let speed = SpeedLevel::ALL[i % SpeedLevel::ALL.len()];
    let space: Vec<TaskSpec> = TaskSpec::seen_space(skill)
        .into_iter()
        .filter(|t| t.speed == speed)
        .collect();
    let mut task = space[rng.random_range(0..space.len())];
    task.split = split;
    let instruction = render_instruction(&task).expect("seen specs render").text;
    SuiteEntry {
        task,
        seed: seed >> 24,
        instruction,
    }
}

impl EvalSuite {
    /// Seeded suite with `budgets[skill]` episodes per skill.
    pub fn with_budgets(name: &str, split: Split, budgets: &[(Skill, usize)], seed: u64) -> EvalSuite {
        let mut entries = Vec::new();
        for &(skill, n) in budgets {
            entries.extend((0..n).map(|i| entry_for(skill, split, seed, i)));
        }
        EvalSuite {
            name: name.to_string(),
            split,
            budgets: budgets.iter().copied().collect(),
            entries,
        }
    }

    /// The full seen-object suite.
    pub fn seen(seed: u64) -> EvalSuite {
        Self::with_budgets("seen", Split::SeenSim, &SEEN_BUDGETS, seed)
    }

    /// `n` episodes of one skill, named `<skill>_<n>`.
    pub fn skill(skill: Skill, n: usize, seed: u64) -> EvalSuite {
        Self::with_budgets(&format!("{skill}_{n}"), Split::SeenSim, &[(skill, n)], seed)
    }

    /// Resolves `seen`, `unseen_object`, `unseen_verbal`, `<skill>_<n>` and
    /// `real_go_to_<n>` (real-domain rendering).
    pub fn by_name(name: &str, seed: u64) -> Result<EvalSuite, EvalError> {
        let unknown = || EvalError::UnknownSuite(name.to_string());
        match name {
            "seen" => return Ok(Self::seen(seed)),
            "unseen_object" => return Ok(make_unseen_suites(&Self::seen(seed)).0),
            "unseen_verbal" => return Ok(make_unseen_suites(&Self::seen(seed)).1),
            _ => {}
        }
        let (head, n) = name.rsplit_once('_').ok_or_else(unknown)?;
        let n: usize = n.parse().map_err(|_| unknown())?;
        if let Some(skill) = head.strip_prefix("real_") {
            if skill != "go_to" {
                return Err(unknown());
            }
            return Ok(Self::with_budgets(name, Split::SeenReal, &[(Skill::GoTo, n)], seed));
        }
        let skill: Skill = head.parse().map_err(|_| unknown())?;
        Ok(Self::skill(skill, n, seed))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, skill: Skill) -> usize {
        self.entries.iter().filter(|e| e.task.skill == skill).count()
    }

    /// Seeds unique per skill, entry counts equal budgets, specs valid.
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidSuite(format!("{}: {m}", self.name)));
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert((e.task.skill, e.seed)) {
                return bad(format!("duplicate seed {} for {}", e.seed, e.task.skill));
            }
            if let Err(m) = e.task.validate() {
                return bad(m);
            }
        }
        for (&skill, &n) in &self.budgets {
            if self.count(skill) != n {
                return bad(format!("{skill} has {} entries for a budget of {n}", self.count(skill)));
            }
        }
        if self.entries.iter().any(|e| !self.budgets.contains_key(&e.task.skill)) {
            return bad("entry for a skill without a budget".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("suites serialize")
    }

    pub fn from_toml(text: &str) -> Result<EvalSuite, EvalError> {
        let s: EvalSuite = toml::from_str(text).map_err(|e| EvalError::InvalidSuite(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }
}

fn unseen_target(target: TaskTarget, seed: u64) -> TaskTarget {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x756e_7365_656e);
    let color = Color::UNSEEN[rng.random_range(0..Color::UNSEEN.len())];
    match target {
        TaskTarget::Object { category, .. } => {
            let category = if category.is_receptacle() {
                category.variant()
            } else {
                // one in four navigation targets becomes a never-seen category
                let novel = ObjectCategory::novel();
                match rng.random_range(0..4) {
                    0 => novel[rng.random_range(0..novel.len())],
                    _ => category.variant(),
                }
            };
            TaskTarget::Object { color, category }
        }
        TaskTarget::Tunnel { section, .. } => TaskTarget::Tunnel { color, section },
        TaskTarget::Letter { letter } => {
            let i = (letter as usize - 'a' as usize) % UNSEEN_LETTERS.len();
            TaskTarget::Letter {
                letter: UNSEEN_LETTERS[i],
            }
        }
    }
}

/// Derives the unseen-object and unseen-verbal suites from a seen suite.
/// Both keep every seed and budget of the base.
pub fn make_unseen_suites(base: &EvalSuite) -> (EvalSuite, EvalSuite) {
    let derive = |split: Split, name: &str, f: &dyn Fn(&SuiteEntry) -> TaskSpec| {
        let entries = base
            .entries
            .iter()
            .map(|e| {
                let task = f(e);
                SuiteEntry {
                    task,
                    seed: e.seed,
                    instruction: render_instruction(&task).expect("derived specs render").text,
                }
            })
            .collect();
        EvalSuite {
            name: name.to_string(),
            split,
            budgets: base.budgets.clone(),
            entries,
        }
    };
    let object = derive(Split::UnseenObject, &format!("{}_unseen_object", base.name), &|e| {
        TaskSpec {
            target: unseen_target(e.task.target, e.seed),
            split: Split::UnseenObject,
            ..e.task
        }
    });
    let verbal = derive(Split::UnseenVerbal, &format!("{}_unseen_verbal", base.name), &|e| {
        TaskSpec {
            split: Split::UnseenVerbal,
            ..e.task
        }
    });
    (object, verbal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seen_budgets() {
        let s = EvalSuite::seen(1);
        s.validate().unwrap();
        let got: Vec<usize> = SEEN_BUDGETS.iter().map(|&(k, _)| s.count(k)).collect();
        assert_eq!(got, vec![425, 500, 150, 100, 100, 75]);
        assert_eq!(s.len(), 1350);
    }

    #[test]
    fn names_resolve() {
        assert_eq!(EvalSuite::by_name("go_to_100", 3).unwrap().len(), 100);
        assert_eq!(EvalSuite::by_name("go_avoid_7", 3).unwrap().count(Skill::GoAvoid), 7);
        let r = EvalSuite::by_name("real_go_to_20", 3).unwrap();
        assert!(r.entries.iter().all(|e| e.task.split == Split::SeenReal));
        for bad in ["nope", "go_to_x", "fly_10", "real_crawl_3"] {
            assert!(
                matches!(EvalSuite::by_name(bad, 0), Err(EvalError::UnknownSuite(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn unseen_suites_keep_budgets_and_drop_seen_colors() {
        let base = EvalSuite::seen(2);
        let (obj, verbal) = make_unseen_suites(&base);
        obj.validate().unwrap();
        verbal.validate().unwrap();
        assert_eq!((obj.len(), verbal.len()), (base.len(), base.len()));
        assert!(obj
            .entries
            .iter()
            .all(|e| e.task.target.color().is_none_or(Color::is_unseen)));
        assert!(obj.entries.iter().all(|e| e.task.target.is_unseen()));
        let novel = obj
            .entries
            .iter()
            .filter(|e| matches!(e.task.target, TaskTarget::Object { category, .. } if ObjectCategory::novel().contains(&category)))
            .count();
        assert!(novel > 0);
        let go_to = verbal.entries.iter().find(|e| e.task.skill == Skill::GoTo).unwrap();
        assert!(
            go_to.instruction.starts_with("navigate to target"),
            "{}",
            go_to.instruction
        );
    }

    #[test]
    fn toml_round_trip() {
        let s = EvalSuite::skill(Skill::Unload, 5, 9);
        assert_eq!(EvalSuite::from_toml(&s.to_toml()).unwrap(), s);
    }
}
