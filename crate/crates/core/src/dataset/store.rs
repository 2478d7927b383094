//! On-disk episode store.
//!
//! ```text
//! <root>/manifest.toml
//! <root>/shards/shard-00000.bin     [u32 LE length][JSON episode] records
//! <root>/frames/ab/ab12...ef.ppm    binary PPM named by its SHA-256
//! ```
//!
//! Writers own one shard each and publish it with a rename; the manifest is
//! rewritten under a mutex and also replaced atomically.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::episode::{Episode, ValidationError};
use crate::codec::ActionSpaceSpec;
use crate::sim::{Observation, RateConfig};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("episode rejected: {0}")]
    Validation(#[from] ValidationError),
    #[error("shard {shard}: checksum mismatch (manifest {expected}, file {actual})")]
    Checksum {
        shard: String,
        expected: String,
        actual: String,
    },
    #[error("shard {shard}: {message}")]
    Corrupt { shard: String, message: String },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("store already exists at {0}")]
    Exists(PathBuf),
}

pub type Result<T> = std::result::Result<T, StoreError>;

fn io<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Per-key episode tallies.
pub type Counts = BTreeMap<String, u64>;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub tasks: Counts,
    pub sources: Counts,
    pub splits: Counts,
    pub outcomes: Counts,
}

impl Tally {
    fn add(&mut self, e: &Episode) {
        let bump = |m: &mut Counts, k: &str| *m.entry(k.to_string()).or_default() += 1;
        bump(&mut self.tasks, e.task.skill.name());
        bump(&mut self.sources, e.source.name());
        bump(&mut self.splits, e.task.split.name());
        bump(&mut self.outcomes, e.outcome.label());
    }

    fn merge(&mut self, other: &Tally) {
        for (mine, theirs) in [
            (&mut self.tasks, &other.tasks),
            (&mut self.sources, &other.sources),
            (&mut self.splits, &other.splits),
            (&mut self.outcomes, &other.outcomes),
        ] {
            for (k, v) in theirs {
                *mine.entry(k.clone()).or_default() += v;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardInfo {
    pub name: String,
    pub episodes: u64,
    pub bytes: u64,
    pub sha256: String,
    #[serde(flatten)]
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub episodes: u64,
    pub rates: RateConfig,
    pub action_space: ActionSpaceSpec,
    #[serde(flatten)]
    pub tally: Tally,
    #[serde(default, rename = "shard")]
    pub shards: Vec<ShardInfo>,
}

impl DatasetManifest {
    pub fn new(action_space: ActionSpaceSpec, rates: RateConfig) -> Self {
        DatasetManifest {
            format_version: FORMAT_VERSION,
            episodes: 0,
            rates,
            action_space,
            tally: Tally::default(),
            shards: Vec::new(),
        }
    }

    fn recount(&mut self) {
        self.shards.sort_by(|a, b| a.name.cmp(&b.name));
        self.episodes = self.shards.iter().map(|s| s.episodes).sum();
        let mut t = Tally::default();
        for s in &self.shards {
            t.merge(&s.tally);
        }
        self.tally = t;
    }

    /// Manifest totals must equal the sum over shards.
    pub fn check_counts(&self) -> Result<()> {
        let mut copy = self.clone();
        copy.recount();
        if copy.episodes != self.episodes || copy.tally != self.tally {
            return Err(StoreError::Manifest(format!(
                "totals ({} episodes) disagree with shard sums ({})",
                self.episodes, copy.episodes
            )));
        }
        for s in &self.shards {
            let per_shard: u64 = s.tally.tasks.values().sum();
            if per_shard != s.episodes {
                return Err(StoreError::Manifest(format!(
                    "shard {} lists {} episodes but {} by task",
                    s.name, s.episodes, per_shard
                )));
            }
        }
        Ok(())
    }
}

/// Position of a stored episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardLocation {
    pub shard: String,
    pub record: u64,
    pub offset: u64,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    manifest: Mutex<DatasetManifest>,
    next_shard: AtomicU32,
}

fn shard_index(name: &str) -> Option<u32> {
    name.strip_prefix("shard-")?.strip_suffix(".bin")?.parse().ok()
}

impl Store {
    /// Creates an empty store; fails if a manifest already exists.
    pub fn create(root: &Path, space: &ActionSpaceSpec, rates: RateConfig) -> Result<Store> {
        let manifest_path = root.join(MANIFEST);
        if manifest_path.exists() {
            return Err(StoreError::Exists(root.to_path_buf()));
        }
        for dir in [root.join("shards"), root.join("frames")] {
            io(&dir, fs::create_dir_all(&dir))?;
        }
        let store = Store {
            root: root.to_path_buf(),
            manifest: Mutex::new(DatasetManifest::new(space.clone(), rates)),
            next_shard: AtomicU32::new(0),
        };
        store.write_manifest(&store.manifest.lock().unwrap())?;
        Ok(store)
    }

    /// Opens a store, checking manifest counts and shard sizes.
    pub fn open(root: &Path) -> Result<Store> {
        let path = root.join(MANIFEST);
        if !path.exists() {
            return Err(StoreError::NotFound(format!("store manifest {}", path.display())));
        }
        let text = io(&path, fs::read_to_string(&path))?;
        let manifest: DatasetManifest = toml::from_str(&text).map_err(|e| StoreError::Manifest(e.to_string()))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(StoreError::Manifest(format!(
                "unsupported format version {}",
                manifest.format_version
            )));
        }
        manifest.check_counts()?;
        for s in &manifest.shards {
            let p = root.join("shards").join(&s.name);
            let meta = io(&p, fs::metadata(&p))?;
            if meta.len() != s.bytes {
                return Err(StoreError::Corrupt {
                    shard: s.name.clone(),
                    message: format!("size {} but manifest says {}", meta.len(), s.bytes),
                });
            }
        }
        let next = manifest
            .shards
            .iter()
            .filter_map(|s| shard_index(&s.name))
            .max()
            .map_or(0, |i| i + 1);
        Ok(Store {
            root: root.to_path_buf(),
            manifest: Mutex::new(manifest),
            next_shard: AtomicU32::new(next),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> DatasetManifest {
        self.manifest.lock().unwrap().clone()
    }

    pub fn action_space(&self) -> ActionSpaceSpec {
        self.manifest.lock().unwrap().action_space.clone()
    }

    fn write_manifest(&self, m: &DatasetManifest) -> Result<()> {
        let text = toml::to_string(m).map_err(|e| StoreError::Manifest(e.to_string()))?;
        let tmp = self.root.join("manifest.toml.tmp");
        io(&tmp, fs::write(&tmp, text))?;
        let dst = self.root.join(MANIFEST);
        io(&dst, fs::rename(&tmp, &dst))
    }

    fn commit(&self, info: ShardInfo) -> Result<()> {
        let mut m = self.manifest.lock().unwrap();
        m.shards.push(info);
        m.recount();
        self.write_manifest(&m)
    }

    /// Starts a new shard owned by the returned writer.
    pub fn writer(&self) -> Result<ShardWriter<'_>> {
        let index = self.next_shard.fetch_add(1, Ordering::SeqCst);
        let name = format!("shard-{index:05}.bin");
        let partial = self.root.join("shards").join(format!("{name}.partial"));
        let file = io(&partial, File::create(&partial))?;
        Ok(ShardWriter {
            store: self,
            space: self.action_space(),
            name,
            partial,
            out: BufWriter::new(file),
            hasher: Sha256::new(),
            bytes: 0,
            records: 0,
            tally: Tally::default(),
        })
    }

    pub fn frame_path(&self, hash: &str) -> PathBuf {
        self.root.join("frames").join(&hash[..2]).join(format!("{hash}.ppm"))
    }

    /// Stores a frame under its content hash; existing frames are kept.
    pub fn put_frame(&self, obs: &Observation) -> Result<String> {
        let hash = obs.content_hash();
        let path = self.frame_path(&hash);
        if path.exists() {
            return Ok(hash);
        }
        let dir = path.parent().expect("frame has a parent dir");
        io(dir, fs::create_dir_all(dir))?;
        let tmp = dir.join(format!("{hash}.{:?}.tmp", std::thread::current().id()).replace(['(', ')'], ""));
        io(&tmp, fs::write(&tmp, obs.to_ppm()))?;
        io(&path, fs::rename(&tmp, &path))?;
        Ok(hash)
    }

    pub fn read_frame(&self, hash: &str) -> Result<Observation> {
        if hash.len() < 2 {
            return Err(StoreError::NotFound(format!("frame {hash}")));
        }
        let path = self.frame_path(hash);
        if !path.exists() {
            return Err(StoreError::NotFound(format!("frame {hash}")));
        }
        let bytes = io(&path, fs::read(&path))?;
        let obs = Observation::from_ppm(&bytes).map_err(|message| StoreError::Corrupt {
            shard: path.display().to_string(),
            message,
        })?;
        if obs.content_hash() != hash {
            return Err(StoreError::Corrupt {
                shard: path.display().to_string(),
                message: "frame content does not match its hash".into(),
            });
        }
        Ok(obs)
    }

    /// Reads one shard, verifying its checksum and record count.
    pub fn read_shard(&self, info: &ShardInfo) -> Result<Vec<Episode>> {
        let path = self.root.join("shards").join(&info.name);
        let bytes = io(&path, fs::read(&path))?;
        let actual = hex::encode(Sha256::digest(&bytes));
        if actual != info.sha256 {
            return Err(StoreError::Checksum {
                shard: info.name.clone(),
                expected: info.sha256.clone(),
                actual,
            });
        }
        let records = decode_records(&bytes).map_err(|message| StoreError::Corrupt {
            shard: info.name.clone(),
            message,
        })?;
        if records.len() as u64 != info.episodes {
            return Err(StoreError::Corrupt {
                shard: info.name.clone(),
                message: format!("{} records, manifest says {}", records.len(), info.episodes),
            });
        }
        Ok(records.into_iter().map(|(_, e)| e).collect())
    }

    /// Every episode in manifest shard order.
    pub fn episodes(&self) -> Result<Vec<Episode>> {
        let m = self.manifest();
        let mut out = Vec::with_capacity(m.episodes as usize);
        for s in &m.shards {
            out.extend(self.read_shard(s)?);
        }
        Ok(out)
    }

    /// Finds an episode by id.
    pub fn get(&self, episode_id: &str) -> Result<(Episode, ShardLocation)> {
        for s in &self.manifest().shards {
            let path = self.root.join("shards").join(&s.name);
            let bytes = io(&path, fs::read(&path))?;
            let records = decode_records(&bytes).map_err(|message| StoreError::Corrupt {
                shard: s.name.clone(),
                message,
            })?;
            for (i, (offset, e)) in records.into_iter().enumerate() {
                if e.episode_id == episode_id {
                    let loc = ShardLocation {
                        shard: s.name.clone(),
                        record: i as u64,
                        offset,
                    };
                    return Ok((e, loc));
                }
            }
        }
        Err(StoreError::NotFound(format!("episode {episode_id}")))
    }
}

/// Encodes one record: little-endian u32 length, then the JSON payload.
pub fn encode_record(e: &Episode) -> Vec<u8> {
    let json = serde_json::to_vec(e).expect("episodes serialize");
    let mut buf = Vec::with_capacity(json.len() + 4);
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    buf
}

/// Splits a shard into `(offset, episode)` records.
pub fn decode_records(bytes: &[u8]) -> std::result::Result<Vec<(u64, Episode)>, String> {
    let mut out = Vec::new();
    let mut pos = 0usize;
    while pos < bytes.len() {
        let header = bytes
            .get(pos..pos + 4)
            .ok_or_else(|| format!("truncated length at byte {pos}"))?;
        let len = u32::from_le_bytes(header.try_into().unwrap()) as usize;
        let body = bytes
            .get(pos + 4..pos + 4 + len)
            .ok_or_else(|| format!("truncated record at byte {pos}"))?;
        let e: Episode = serde_json::from_slice(body).map_err(|e| format!("record at byte {pos}: {e}"))?;
        out.push((pos as u64, e));
        pos += 4 + len;
    }
    Ok(out)
}

/// Appends episodes to one shard; `finish` publishes it.
#[derive(Debug)]
pub struct ShardWriter<'a> {
    store: &'a Store,
    space: ActionSpaceSpec,
    name: String,
    partial: PathBuf,
    out: BufWriter<File>,
    hasher: Sha256,
    bytes: u64,
    records: u64,
    tally: Tally,
}

impl ShardWriter<'_> {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Validates and appends one episode with its frames.
    pub fn write(&mut self, e: &Episode, frames: &[Observation]) -> Result<ShardLocation> {
        e.validate(&self.space)?;
        if frames.len() != e.steps.len() {
            return Err(ValidationError {
                path: "frames".into(),
                message: format!("{} frames for {} steps", frames.len(), e.steps.len()),
            }
            .into());
        }
        for (i, (f, s)) in frames.iter().zip(&e.steps).enumerate() {
            if f.content_hash() != s.frame {
                return Err(ValidationError {
                    path: format!("steps[{i}].frame"),
                    message: "does not match the frame's content hash".into(),
                }
                .into());
            }
        }
        for f in frames {
            self.store.put_frame(f)?;
        }
        let buf = encode_record(e);
        io(&self.partial, self.out.write_all(&buf))?;
        self.hasher.update(&buf);
        let loc = ShardLocation {
            shard: self.name.clone(),
            record: self.records,
            offset: self.bytes,
        };
        self.bytes += buf.len() as u64;
        self.records += 1;
        self.tally.add(e);
        Ok(loc)
    }

    /// Publishes the shard. Empty shards are discarded.
    pub fn finish(mut self) -> Result<Option<ShardInfo>> {
        io(&self.partial, self.out.flush())?;
        if self.records == 0 {
            io(&self.partial, fs::remove_file(&self.partial))?;
            return Ok(None);
        }
        io(&self.partial, self.out.get_ref().sync_all())?;
        let dst = self.store.root.join("shards").join(&self.name);
        io(&dst, fs::rename(&self.partial, &dst))?;
        let info = ShardInfo {
            name: self.name.clone(),
            episodes: self.records,
            bytes: self.bytes,
            sha256: hex::encode(self.hasher.clone().finalize()),
            tally: std::mem::take(&mut self.tally),
        };
        self.store.commit(info.clone())?;
        Ok(Some(info))
    }
}

/// Writes one episode into its own shard.
pub fn write_episode(store: &Store, e: &Episode, frames: &[Observation]) -> Result<ShardLocation> {
    let mut w = store.writer()?;
    let loc = w.write(e, frames)?;
    w.finish()?;
    Ok(loc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expert::{generate_episode, GeneratedEpisode};
    use crate::task::{Skill, TaskSpec};
    use crate::QuardConfig;

    fn sample(seed: u64) -> GeneratedEpisode {
        let task = TaskSpec::seen_space(Skill::GoTo)[seed as usize % 12];
        generate_episode(&task, seed, &QuardConfig::default()).unwrap()
    }

    fn new_store(dir: &Path) -> Store {
        Store::create(dir, &ActionSpaceSpec::default(), RateConfig::default()).unwrap()
    }

    #[test]
    fn write_then_read_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let store = new_store(dir.path());
        let g = sample(3);
        let loc = write_episode(&store, &g.episode, &g.frames).unwrap();
        assert_eq!((loc.record, loc.offset), (0, 0));

        let reopened = Store::open(dir.path()).unwrap();
        let (back, _) = reopened.get(&g.episode.episode_id).unwrap();
        assert_eq!(encode_record(&back), encode_record(&g.episode));
        assert_eq!(back, g.episode);
        let f = reopened.read_frame(&back.steps[0].frame).unwrap();
        assert_eq!(f, g.frames[0]);
        let m = reopened.manifest();
        assert_eq!(m.episodes, 1);
        assert_eq!(m.tally.tasks["go_to"], 1);
    }

    #[test]
    fn corrupt_byte_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let store = new_store(dir.path());
        let g = sample(1);
        write_episode(&store, &g.episode, &g.frames).unwrap();
        let shard = dir.path().join("shards/shard-00000.bin");
        let mut bytes = fs::read(&shard).unwrap();
        bytes[10] ^= 0x01;
        fs::write(&shard, bytes).unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert!(matches!(store.episodes(), Err(StoreError::Checksum { .. })));
    }

    #[test]
    fn invalid_episode_is_rejected_with_path() {
        let dir = tempfile::tempdir().unwrap();
        let store = new_store(dir.path());
        let mut g = sample(2);
        g.episode.steps[0].frame = "nothex".into();
        match write_episode(&store, &g.episode, &g.frames) {
            Err(StoreError::Validation(e)) => assert_eq!(e.path, "steps[0].frame"),
            other => panic!("{other:?}"),
        }
        let g = sample(2);
        match write_episode(&store, &g.episode, &g.frames[1..]) {
            Err(StoreError::Validation(e)) => assert_eq!(e.path, "frames"),
            other => panic!("{other:?}"),
        }
        assert_eq!(Store::open(dir.path()).unwrap().manifest().episodes, 0);
    }

    #[test]
    fn tampered_counts_fail_on_open() {
        let dir = tempfile::tempdir().unwrap();
        let store = new_store(dir.path());
        let g = sample(5);
        write_episode(&store, &g.episode, &g.frames).unwrap();
        let path = dir.path().join(MANIFEST);
        let text = fs::read_to_string(&path)
            .unwrap()
            .replacen("episodes = 1", "episodes = 2", 1);
        fs::write(&path, text).unwrap();
        assert!(matches!(Store::open(dir.path()), Err(StoreError::Manifest(_))));
    }

    #[test]
    fn create_refuses_existing_store() {
        let dir = tempfile::tempdir().unwrap();
        new_store(dir.path());
        assert!(matches!(
            Store::create(dir.path(), &ActionSpaceSpec::default(), RateConfig::default()),
            Err(StoreError::Exists(_))
        ));
    }

    #[test]
    fn empty_writer_leaves_no_shard() {
        let dir = tempfile::tempdir().unwrap();
        let store = new_store(dir.path());
        assert!(store.writer().unwrap().finish().unwrap().is_none());
        assert_eq!(fs::read_dir(dir.path().join("shards")).unwrap().count(), 0);
        assert!(Store::open(dir.path()).unwrap().episodes().unwrap().is_empty());
    }
}
