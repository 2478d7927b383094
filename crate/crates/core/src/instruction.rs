//! Templated natural-language instructions and their inverse parser.
//!
//! Template wording lives in `data/templates.toml`; any other table with the
//! same schema can be loaded with [`InstructionTemplates::from_toml`].

use std::collections::{BTreeMap, HashSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::task::{Color, Gait, ObjectCategory, Skill, SpeedLevel, Split, TaskSpec, TaskTarget, TunnelSection};

const BUILTIN_TEMPLATES: &str = include_str!("../data/templates.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstructionError {
    #[error("inconsistent task spec: {0}")]
    InconsistentSpec(String),
    #[error("unrecognized instruction `{text}`; nearest template: `{nearest}`")]
    Unrecognized { text: String, nearest: String },
    #[error("unknown template id `{0}`")]
    UnknownTemplate(String),
    #[error("template table: {0}")]
    Table(String),
}

/// A rendered instruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub text: String,
    pub spec: TaskSpec,
    pub template_id: String,
}

#[derive(Debug, Clone, Deserialize)]
struct TemplateRow {
    id: String,
    skill: Skill,
    text: String,
    #[serde(default)]
    phrase: Option<String>,
}

#[derive(Debug, Deserialize)]
struct TemplateFile {
    version: u32,
    template: Vec<TemplateRow>,
    #[serde(default)]
    paraphrase: Vec<TemplateRow>,
}

#[derive(Debug)]
struct Compiled {
    row: TemplateRow,
    pattern: Regex,
    paraphrase: bool,
}

#[derive(Debug)]
pub struct InstructionTemplates {
    version: u32,
    canonical: BTreeMap<Skill, usize>,
    entries: Vec<Compiled>,
}

static BUILTIN: LazyLock<InstructionTemplates> =
    LazyLock::new(|| InstructionTemplates::from_toml(BUILTIN_TEMPLATES).expect("builtin templates are valid"));

const SLOTS: [&str; 6] = ["letter", "color", "object", "section", "speed", "gait"];

fn alternation<I: IntoIterator<Item = String>>(items: I) -> String {
    let mut items: Vec<String> = items.into_iter().map(|s| regex::escape(&s)).collect();
    items.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    items.join("|")
}

fn slot_pattern(slot: &str) -> String {
    let body = match slot {
        "letter" => "[a-z]".to_string(),
        "color" => alternation(
            Color::SEEN
                .iter()
                .chain(Color::UNSEEN.iter())
                .map(|c| c.name().to_string()),
        ),
        "object" => alternation(ObjectCategory::ALL.iter().map(|c| c.name().to_string())),
        "section" => alternation(TunnelSection::ALL.iter().map(|c| c.name().to_string())),
        "speed" => alternation(SpeedLevel::ALL.iter().map(|c| c.adverb().to_string())),
        "gait" => alternation(Gait::ALL.iter().map(|c| c.name().to_string())),
        _ => unreachable!("checked slot"),
    };
    format!("(?P<{slot}>{body})")
}

fn compile(text: &str) -> Result<Regex, InstructionError> {
    let mut pattern = String::from("^");
    let mut rest = text;
    let mut seen = HashSet::new();
    while let Some(open) = rest.find('{') {
        pattern.push_str(&regex::escape(&rest[..open]));
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| InstructionError::Table(format!("unclosed slot in `{text}`")))?;
        let slot = &rest[open + 1..open + close];
        if !SLOTS.contains(&slot) {
            return Err(InstructionError::Table(format!("unknown slot `{slot}` in `{text}`")));
        }
        if !seen.insert(slot.to_string()) {
            return Err(InstructionError::Table(format!("slot `{slot}` repeated in `{text}`")));
        }
        pattern.push_str(&slot_pattern(slot));
        rest = &rest[open + close + 1..];
    }
    pattern.push_str(&regex::escape(rest));
    pattern.push('$');
    Regex::new(&pattern).map_err(|e| InstructionError::Table(e.to_string()))
}

fn fill(text: &str, spec: &TaskSpec) -> Result<String, InstructionError> {
    let missing = |slot: &str| {
        InstructionError::InconsistentSpec(format!(
            "template `{text}` needs `{slot}` but the {} target is {:?}",
            spec.skill, spec.target
        ))
    };
    let mut out = String::with_capacity(text.len() + 16);
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = rest[open..].find('}').expect("validated at load");
        let slot = &rest[open + 1..open + close];
        let value = match (slot, spec.target) {
            ("letter", TaskTarget::Letter { letter }) => letter.to_string(),
            ("color", TaskTarget::Object { color, .. } | TaskTarget::Tunnel { color, .. }) => color.name().to_string(),
            ("object", TaskTarget::Object { category, .. }) => category.name().to_string(),
            ("section", TaskTarget::Tunnel { section, .. }) => section.name().to_string(),
            ("speed", _) => spec.speed.adverb().to_string(),
            ("gait", _) => spec.gait.name().to_string(),
            (slot, _) => return Err(missing(slot)),
        };
        out.push_str(&value);
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl InstructionTemplates {
    pub fn builtin() -> &'static InstructionTemplates {
        &BUILTIN
    }

    pub fn from_toml(text: &str) -> Result<Self, InstructionError> {
        let file: TemplateFile = toml::from_str(text).map_err(|e| InstructionError::Table(e.to_string()))?;
        let mut entries = Vec::new();
        let mut canonical = BTreeMap::new();
        let mut ids = HashSet::new();
        let mut phrases: BTreeMap<String, Skill> = BTreeMap::new();
        for (rows, paraphrase) in [(file.template, false), (file.paraphrase, true)] {
            for row in rows {
                if !ids.insert(row.id.clone()) {
                    return Err(InstructionError::Table(format!("duplicate id `{}`", row.id)));
                }
                if paraphrase {
                    let phrase = row
                        .phrase
                        .clone()
                        .ok_or_else(|| InstructionError::Table(format!("paraphrase `{}` has no phrase", row.id)))?;
                    if let Some(other) = phrases.insert(phrase.clone(), row.skill) {
                        if other != row.skill {
                            return Err(InstructionError::Table(format!(
                                "phrase `{phrase}` used by both {other} and {}",
                                row.skill
                            )));
                        }
                    }
                } else if canonical.insert(row.skill, entries.len()).is_some() {
                    return Err(InstructionError::Table(format!(
                        "two canonical templates for {}",
                        row.skill
                    )));
                }
                let pattern = compile(&row.text)?;
                entries.push(Compiled {
                    row,
                    pattern,
                    paraphrase,
                });
            }
        }
        for &skill in Skill::ALL {
            if !canonical.contains_key(&skill) {
                return Err(InstructionError::Table(format!("no template for {skill}")));
            }
        }
        Ok(InstructionTemplates {
            version: file.version,
            canonical,
            entries,
        })
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    /// Canonical wording, or the first paraphrase for the unseen-verbal split.
    pub fn render(&self, spec: &TaskSpec) -> Result<Instruction, InstructionError> {
        spec.validate().map_err(InstructionError::InconsistentSpec)?;
        let entry = if spec.split == Split::UnseenVerbal {
            self.entries
                .iter()
                .find(|e| e.paraphrase && e.row.skill == spec.skill)
                .unwrap_or(&self.entries[self.canonical[&spec.skill]])
        } else {
            &self.entries[self.canonical[&spec.skill]]
        };
        self.render_entry(entry, spec)
    }

    pub fn render_with(&self, spec: &TaskSpec, template_id: &str) -> Result<Instruction, InstructionError> {
        spec.validate().map_err(InstructionError::InconsistentSpec)?;
        let entry = self
            .entries
            .iter()
            .find(|e| e.row.id == template_id)
            .ok_or_else(|| InstructionError::UnknownTemplate(template_id.to_string()))?;
        if entry.row.skill != spec.skill {
            return Err(InstructionError::InconsistentSpec(format!(
                "template `{template_id}` is for {}, spec is {}",
                entry.row.skill, spec.skill
            )));
        }
        self.render_entry(entry, spec)
    }

    fn render_entry(&self, entry: &Compiled, spec: &TaskSpec) -> Result<Instruction, InstructionError> {
        Ok(Instruction {
            text: fill(&entry.row.text, spec)?,
            spec: *spec,
            template_id: entry.row.id.clone(),
        })
    }

    /// Inverse of [`render`](Self::render). The split is inferred from the
    /// wording and catalog: paraphrases give `UnseenVerbal`, unseen targets
    /// give `UnseenObject`, everything else `SeenSim`.
    pub fn parse(&self, text: &str) -> Result<Instruction, InstructionError> {
        let normalized = text.trim().to_lowercase();
        let normalized = normalized.split_whitespace().collect::<Vec<_>>().join(" ");
        for entry in &self.entries {
            let Some(caps) = entry.pattern.captures(&normalized) else {
                continue;
            };
            let get = |slot: &str| caps.name(slot).map(|m| m.as_str());
            let speed = get("speed").and_then(SpeedLevel::from_adverb);
            let gait = get("gait").and_then(|g| g.parse::<Gait>().ok());
            let (Some(speed), Some(gait)) = (speed, gait) else {
                continue;
            };
            let target = if let Some(letter) = get("letter") {
                TaskTarget::Letter {
                    letter: letter.chars().next().expect("one char"),
                }
            } else if let (Some(color), Some(section)) = (get("color"), get("section")) {
                TaskTarget::Tunnel {
                    color: color.parse().expect("matched alternation"),
                    section: section.parse().expect("matched alternation"),
                }
            } else if let (Some(color), Some(object)) = (get("color"), get("object")) {
                TaskTarget::Object {
                    color: color.parse().expect("matched alternation"),
                    category: object.parse().expect("matched alternation"),
                }
            } else {
                continue;
            };
            let split = if target.is_unseen() {
                Split::UnseenObject
            } else if entry.paraphrase {
                Split::UnseenVerbal
            } else {
                Split::SeenSim
            };
            let spec = TaskSpec {
                skill: entry.row.skill,
                target,
                speed,
                gait,
                split,
            };
            if spec.validate().is_err() {
                continue;
            }
            return Ok(Instruction {
                text: normalized.clone(),
                spec,
                template_id: entry.row.id.clone(),
            });
        }
        let nearest = self
            .entries
            .iter()
            .map(|e| (strsim::normalized_levenshtein(&normalized, &e.row.text), &e.row.text))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, t)| t.clone())
            .unwrap_or_default();
        Err(InstructionError::Unrecognized {
            text: text.to_string(),
            nearest,
        })
    }

    /// Held-out paraphrase phrases for a skill (empty when none exist).
    pub fn paraphrase_set(&self, skill: Skill) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| e.paraphrase && e.row.skill == skill)
            .filter_map(|e| e.row.phrase.clone())
            .collect()
    }

    /// Maps a bare skill phrase (canonical verb phrase or paraphrase) to a skill.
    pub fn resolve_skill(&self, phrase: &str) -> Option<Skill> {
        let phrase = phrase.trim().to_lowercase();
        self.entries.iter().find_map(|e| {
            let lead = e.row.text.split('{').next().unwrap_or("").trim();
            let matches = e.row.phrase.as_deref() == Some(phrase.as_str())
                || (!lead.is_empty() && phrase.starts_with(lead))
                || (!lead.is_empty() && lead.starts_with(&phrase) && phrase.len() >= 5);
            matches.then_some(e.row.skill)
        })
    }
}

pub fn render_instruction(spec: &TaskSpec) -> Result<Instruction, InstructionError> {
    InstructionTemplates::builtin().render(spec)
}

pub fn parse_instruction(text: &str) -> Result<TaskSpec, InstructionError> {
    InstructionTemplates::builtin().parse(text).map(|i| i.spec)
}

pub fn paraphrase_set(skill: Skill) -> Vec<String> {
    InstructionTemplates::builtin().paraphrase_set(skill)
}
