//! Import of externally recorded episodes, and export to the same layout.
//!
//! ```text
//! <dir>/<episode>/instruction.txt   one instruction sentence
//! <dir>/<episode>/commands.csv      header + one row per command tick
//! <dir>/<episode>/frames/*.ppm      one binary PPM per row, in name order
//! <dir>/<episode>/outcome.txt       optional status name
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::episode::{Episode, EpisodeOutcome, Source, Step};
use super::store::{Store, StoreError};
use crate::codec::{ActionCommand, ActionDim, ActionSpaceSpec, CONTINUOUS_DIMS};
use crate::instruction::InstructionTemplates;
use crate::sim::{Observation, Status};
use crate::task::Split;

pub const TERMINATE_COLUMN: &str = "t";

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn io<T>(path: &Path, r: std::io::Result<T>) -> Result<T, ImportError> {
    r.map_err(|source| ImportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Import result: ids written and folders skipped with their reasons.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct ImportReport {
    pub imported: Vec<String>,
    pub skipped: Vec<(String, String)>,
}

impl ImportReport {
    pub fn count(&self) -> usize {
        self.imported.len()
    }
}

/// CSV header of the command file.
pub fn command_header() -> Vec<&'static str> {
    ActionDim::ALL
        .iter()
        .map(|d| d.name())
        .chain([TERMINATE_COLUMN])
        .collect()
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

fn read_commands(path: &Path) -> Result<Vec<ActionCommand>, String> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("commands.csv: {e}"))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| format!("commands.csv header: {e}"))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != command_header() {
        return Err(format!("commands.csv header must be {}", command_header().join(",")));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| format!("commands.csv row {}: {e}", row + 1))?;
        let mut values = [0.0; CONTINUOUS_DIMS];
        for (i, v) in values.iter_mut().enumerate() {
            let field = &rec[i];
            *v = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("commands.csv row {} column {}: bad value {field:?}", row + 1, header[i]))?;
        }
        let t = parse_bool(&rec[CONTINUOUS_DIMS])
            .ok_or_else(|| format!("commands.csv row {} column t: expected 0 or 1", row + 1))?;
        out.push(ActionCommand::from_values(values, t));
    }
    if out.is_empty() {
        return Err("commands.csv has no rows".into());
    }
    Ok(out)
}

fn read_frames(dir: &Path) -> Result<Vec<Observation>, String> {
    let mut names: Vec<_> = fs::read_dir(dir)
        .map_err(|e| format!("frames/: {e}"))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "ppm"))
        .collect();
    names.sort();
    names
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Observation::from_ppm(&bytes).map_err(|e| format!("{}: {e}", p.display()))
        })
        .collect()
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Converts one episode folder into an episode and its frames.
pub fn convert_folder(dir: &Path, space: &ActionSpaceSpec) -> Result<(Episode, Vec<Observation>), String> {
    let folder = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let text = fs::read_to_string(dir.join("instruction.txt")).map_err(|e| format!("instruction.txt: {e}"))?;
    let mut instruction = InstructionTemplates::builtin()
        .parse(&text)
        .map_err(|e| format!("instruction.txt: {e}"))?;
    if instruction.spec.split == Split::SeenSim {
        instruction.spec.split = Split::SeenReal;
    }
    let commands = read_commands(&dir.join("commands.csv"))?;
    let frames = read_frames(&dir.join("frames"))?;
    if frames.len() != commands.len() {
        return Err(format!("{} frames for {} command rows", frames.len(), commands.len()));
    }
    let status = match fs::read_to_string(dir.join("outcome.txt")) {
        Ok(s) => serde_json::from_value::<Status>(serde_json::Value::String(s.trim().to_string()))
            .map_err(|_| format!("outcome.txt: unknown status {:?}", s.trim()))?,
        Err(_) if commands.last().is_some_and(|c| c.t) => Status::Success,
        Err(_) => Status::Timeout,
    };
    let mut steps = Vec::with_capacity(commands.len());
    for (i, (c, f)) in commands.iter().zip(&frames).enumerate() {
        let command = space.clamp(c).map_err(|e| format!("row {}: {e}", i + 1))?;
        let tokens = space.tokenize(&command).map_err(|e| format!("row {}: {e}", i + 1))?;
        steps.push(Step {
            frame: f.content_hash(),
            tokens,
            command,
        });
    }
    let digest = Sha256::digest(folder.as_bytes());
    let episode = Episode {
        episode_id: format!("real-import-{}", sanitize(&folder)),
        task: instruction.spec,
        instruction,
        seed: u64::from_le_bytes(digest[..8].try_into().unwrap()) >> 24,
        source: Source::Real,
        steps,
        outcome: EpisodeOutcome::Imported { status },
    };
    episode.validate(space).map_err(|e| e.to_string())?;
    Ok((episode, frames))
}

/// Imports every episode folder under `dir` into `store` using the store's
/// action space. Malformed folders are skipped and logged; ids already in
/// the store are skipped too, so repeating an import is harmless.
pub fn import_real(dir: &Path, store: &Store) -> Result<ImportReport, ImportError> {
    let space = store.action_space();
    let mut known: HashSet<String> = store.episodes()?.into_iter().map(|e| e.episode_id).collect();
    let mut folders: Vec<_> = io(dir, fs::read_dir(dir))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    folders.sort();
    let mut report = ImportReport::default();
    let mut writer = store.writer()?;
    for folder in folders {
        let name = folder.file_name().unwrap().to_string_lossy().into_owned();
        let result = convert_folder(&folder, &space).and_then(|(e, frames)| {
            if known.contains(&e.episode_id) {
                return Err(format!("{} already in store", e.episode_id));
            }
            writer.write(&e, &frames).map_err(|err| err.to_string())?;
            Ok(e.episode_id)
        });
        match result {
            Ok(id) => {
                known.insert(id.clone());
                report.imported.push(id);
            }
            Err(reason) => {
                log::warn!("skipping {name}: {reason}");
                report.skipped.push((name, reason));
            }
        }
    }
    writer.finish()?;
    Ok(report)
}

/// Writes a stored episode in the import layout under `dir/<episode_id>`.
pub fn export_episode(store: &Store, e: &Episode, dir: &Path) -> Result<(), ImportError> {
    let out = dir.join(&e.episode_id);
    let frames_dir = out.join("frames");
    io(&frames_dir, fs::create_dir_all(&frames_dir))?;
    io(
        &out,
        fs::write(out.join("instruction.txt"), format!("{}\n", e.instruction.text)),
    )?;
    let mut csv = command_header().join(",");
    csv.push('\n');
    for (i, s) in e.steps.iter().enumerate() {
        let c = &s.command;
        let row: Vec<String> = c.values().iter().map(|v| v.to_string()).collect();
        csv += &format!("{},{}\n", row.join(","), u8::from(c.t));
        let obs = store.read_frame(&s.frame)?;
        let p = frames_dir.join(format!("{i:06}.ppm"));
        io(&p, fs::write(&p, obs.to_ppm()))?;
    }
    io(&out, fs::write(out.join("commands.csv"), csv))?;
    if let Some(status) = e.outcome.status() {
        io(&out, fs::write(out.join("outcome.txt"), format!("{}\n", status.name())))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expert::generate_episode;
    use crate::task::{Skill, TaskSpec};
    use crate::QuardConfig;

    fn store(dir: &Path) -> Store {
        let cfg = QuardConfig::default();
        Store::create(dir, &cfg.action_space, cfg.sim.rates).unwrap()
    }

    /// Exports `n` generated go-to episodes into an import fixture.
    fn fixture(n: u64) -> (tempfile::TempDir, tempfile::TempDir) {
        let src = tempfile::tempdir().unwrap();
        let staging = store(src.path());
        let out = tempfile::tempdir().unwrap();
        for seed in 0..n {
            let task = TaskSpec::seen_space(Skill::GoTo)[seed as usize];
            let g = generate_episode(&task, seed, &QuardConfig::default()).unwrap();
            super::super::write_episode(&staging, &g.episode, &g.frames).unwrap();
            export_episode(&staging, &g.episode, out.path()).unwrap();
        }
        (src, out)
    }

    #[test]
    fn three_episode_fixture() {
        let (_src, fx) = fixture(3);
        let dst = tempfile::tempdir().unwrap();
        let s = store(dst.path());
        let r = import_real(fx.path(), &s).unwrap();
        assert_eq!((r.count(), r.skipped.len()), (3, 0));
        let eps = Store::open(dst.path()).unwrap().episodes().unwrap();
        assert!(eps
            .iter()
            .all(|e| e.source == Source::Real && e.task.split == Split::SeenReal));
        assert!(eps.iter().all(|e| e.outcome.is_success()));
        // a second import finds nothing new
        assert_eq!(import_real(fx.path(), &s).unwrap().count(), 0);
    }

    #[test]
    fn non_finite_row_skips_one_episode() {
        let (_src, fx) = fixture(3);
        let mut dirs: Vec<_> = fs::read_dir(fx.path()).unwrap().map(|e| e.unwrap().path()).collect();
        dirs.sort();
        let csv_path = dirs[1].join("commands.csv");
        let text = fs::read_to_string(&csv_path).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let mut fields: Vec<&str> = lines[2].split(',').collect();
        fields[0] = "NaN";
        lines[2] = fields.join(",");
        fs::write(&csv_path, lines.join("\n")).unwrap();

        let dst = tempfile::tempdir().unwrap();
        let r = import_real(fx.path(), &store(dst.path())).unwrap();
        assert_eq!((r.count(), r.skipped.len()), (2, 1));
        assert!(r.skipped[0].1.contains("row 2 column v_x"), "{:?}", r.skipped);
    }

    #[test]
    fn reexport_reimport_keeps_tokens() {
        let (_src, fx) = fixture(2);
        let a = tempfile::tempdir().unwrap();
        let sa = store(a.path());
        import_real(fx.path(), &sa).unwrap();
        let first = sa.episodes().unwrap();

        let again = tempfile::tempdir().unwrap();
        for e in &first {
            export_episode(&sa, e, again.path()).unwrap();
        }
        let b = tempfile::tempdir().unwrap();
        let sb = store(b.path());
        // ids embed folder names, which now differ; compare tokens only
        import_real(again.path(), &sb).unwrap();
        let second = sb.episodes().unwrap();
        assert_eq!(first.len(), second.len());
        for (x, y) in first.iter().zip(&second) {
            let tx: Vec<_> = x.steps.iter().map(|s| s.tokens).collect();
            let ty: Vec<_> = y.steps.iter().map(|s| s.tokens).collect();
            assert_eq!(tx, ty);
            assert_eq!(x.task, y.task);
        }
    }

    #[test]
    fn header_is_checked() {
        let (_src, fx) = fixture(1);
        let dir = fs::read_dir(fx.path()).unwrap().next().unwrap().unwrap().path();
        let p = dir.join("commands.csv");
        let text = fs::read_to_string(&p).unwrap().replacen("v_x", "vx", 1);
        fs::write(&p, text).unwrap();
        assert!(convert_folder(&dir, &ActionSpaceSpec::default())
            .unwrap_err()
            .contains("header"));
    }
}
