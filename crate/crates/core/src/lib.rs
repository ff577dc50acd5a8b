//! System-level simulator of a coordinated multi-point (CoMP) downlink cluster.
//!
//! The crate models joint transmission (JT) and coordinated scheduling /
//! beamforming (CS/CB) under backhaul, CSI and clock-synchronization
//! impairments, and schedules users either with a queue- and
//! quality-aware drift-plus-penalty rule or a sum-rate water-filling
//! baseline.
//!
//! Module map:
//! - [`channel`]: correlated Rayleigh fading, CSI quantization, coherence.
//! - [`sync`]: clock offsets, master-slave sync, inter-carrier interference.
//! - [`backhaul`]: capacity accounting, I/Q bit allocation, latency.
//! - [`phy`]: precoders, SINR, water-filling, MCS mapping.
//! - [`kqi`]: video sessions, stalls, download ratio, engagement correlation.
//! - [`scheduler`]: cooperative ability, grouping, per-slot scheduling.
//! - [`engine`]: the slot loop, metrics and experiment sweeps.
//! - [`config`], [`io`], [`presets`]: configuration, serialization, CLI plumbing.

pub mod backhaul;
pub mod channel;
pub mod config;
pub mod engine;
pub mod error;
pub mod io;
pub mod kqi;
pub mod linalg;
pub mod phy;
pub mod presets;
pub mod scheduler;
pub mod stats;
pub mod sync;

pub use config::{parse_config, parse_config_with_overrides, serialize_config, ScenarioConfig};
pub use engine::{run, MetricsReport};
pub use error::{Error, Result};
