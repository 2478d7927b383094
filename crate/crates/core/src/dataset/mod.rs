//! Episode storage, statistics, sim/real mixing and real-data import.

pub mod collect;
pub mod episode;
pub mod import;
pub mod mix;
pub mod replay;
pub mod stats;
pub mod store;

pub use collect::{collect, derive_seed, CollectError, CollectSummary, GenerationPlan, PlanEntry, FULL_SCALE};
pub use episode::{Episode, EpisodeOutcome, Source, Step, ValidationError};
pub use import::{export_episode, import_real, ImportError, ImportReport};
pub use mix::{mix_episodes, mix_stream, MixError, MixMode, MixPolicy, MixStream};
pub use replay::{replay_episode, trajectory_svg, ReplayError, Trajectory};
pub use stats::{compute_stats, stats_from_episodes, StatsReport, TaskStats};
pub use store::{
    decode_records, encode_record, write_episode, DatasetManifest, ShardInfo, ShardLocation, ShardWriter, Store,
    StoreError, Tally,
};
