//! Scenario configuration.
//!
//! Configs are TOML documents. Every key is optional; omitted keys take the
//! field-trial defaults (3 BSs with 4 antennas, single-antenna users, 3.5 GHz
//! carrier, 30.725 MHz sampling, 1200 active subcarriers spaced 312.5 kHz,
//! 20 dBm per BS, FDD). Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::McsTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Duplex {
    Fdd,
    Tdd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Uniform over a disc centred on the cluster.
    Uniform,
    /// Explicit `positions`.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    /// Drift-plus-penalty scheduler driven by queues and KQI loss.
    Kqi,
    /// Sum-rate maximizing water-filling baseline.
    Kpi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModePolicy {
    /// Mode chosen per slot from the cooperative ability score.
    Adaptive,
    Jt,
    Cscb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficKind {
    /// Each user requests video at the bitrate of its current quality level.
    Video,
    /// Constant arrivals at `full_buffer_bps` with no video sessions; used for
    /// throughput sweeps.
    FullBuffer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharePolicy {
    Static,
    /// Per-BS shares proportional to the backlog of the users each BS anchors.
    Backlog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Antennas {
    pub user: usize,
    pub bs: usize,
}

impl Default for Antennas {
    fn default() -> Self {
        Self { user: 1, bs: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Inter-site distance; BSs sit on a regular polygon around the origin.
    pub isd_m: f64,
    pub pathloss_exponent: f64,
    /// Loss at 1 m. When absent, free-space loss at the carrier is used.
    pub reference_loss_db: Option<f64>,
    pub min_distance_m: f64,
    pub noise_figure_db: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            isd_m: 120.0,
            pathloss_exponent: 3.0,
            reference_loss_db: None,
            min_distance_m: 1.0,
            noise_figure_db: 7.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UsersConfig {
    pub count: usize,
    pub placement: Placement,
    pub radius_m: f64,
    pub positions: Vec<[f64; 2]>,
    /// Per-user data priority; empty means 1.0 for everyone.
    pub priorities: Vec<f64>,
    /// Engagement sensitivity is drawn uniformly from this range.
    pub sensitivity_range: [f64; 2],
    /// Per-user multiplier on the bitrate ladder; empty means 1.0.
    pub ladder_scale: Vec<f64>,
}

impl Default for UsersConfig {
    fn default() -> Self {
        Self {
            count: 6,
            placement: Placement::Uniform,
            radius_m: 100.0,
            positions: Vec::new(),
            priorities: Vec::new(),
            sensitivity_range: [0.2, 1.0],
            ladder_scale: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub doppler_hz: f64,
    pub doppler_static_hz: f64,
    pub doppler_mobile_hz: f64,
    pub csi_bits: u32,
    pub feedback_interval_slots: u32,
    pub adaptive_feedback: bool,
    pub interval_bounds: [u32; 2],
    pub coherence_high: f64,
    pub coherence_low: f64,
    /// Reciprocity-based feedback; costs no uplink or backhaul.
    pub implicit_feedback: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            doppler_hz: 5.0,
            doppler_static_hz: 2.0,
            doppler_mobile_hz: 40.0,
            csi_bits: 8,
            feedback_interval_slots: 5,
            adaptive_feedback: false,
            interval_bounds: [1, 32],
            coherence_high: 0.95,
            coherence_low: 0.80,
            implicit_feedback: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncConfig {
    /// Magnitude range of the GPS-disciplined clock error before sync.
    pub ppb_range: [f64; 2],
    pub over_the_air: bool,
    pub beacon_snr_db: f64,
    /// Residual estimator std at 0 dB beacon SNR.
    pub sigma0_hz: f64,
    pub max_time_offset_us: f64,
    pub cp_us: f64,
    pub timing_penalty_db: f64,
    /// Explicit per-BS frequency offsets; overrides the random draw and sync.
    pub fixed_offsets_hz: Vec<f64>,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self {
            ppb_range: [20.0, 75.0],
            over_the_air: true,
            beacon_snr_db: 20.0,
            sigma0_hz: 5.0,
            max_time_offset_us: 1.5,
            cp_us: 4.69,
            timing_penalty_db: -10.0,
            fixed_offsets_hz: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackhaulConfig {
    pub capacity_gbps: f64,
    pub max_capacity_gbps: f64,
    pub latency_ms: f64,
    pub share_policy: SharePolicy,
    /// Floor mixed into backlog-proportional shares so no BS is starved.
    pub share_floor: f64,
}

impl Default for BackhaulConfig {
    fn default() -> Self {
        Self {
            capacity_gbps: 240.0,
            max_capacity_gbps: 240.0,
            latency_ms: 0.1,
            share_policy: SharePolicy::Static,
            share_floor: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VideoConfig {
    pub ladder_bps: Vec<f64>,
    pub psnr_db: Vec<f64>,
    pub rebuffer_s: f64,
    pub initial_buffer_s: f64,
    pub duration_s: f64,
    /// Starting quality; also the fixed quality under the KPI baseline.
    /// Absent means the top of the ladder.
    pub nominal_level: Option<usize>,
    pub stall_weight: f64,
    pub quality_weight: f64,
    pub engagement_window_slots: u32,
}

impl Default for VideoConfig {
    fn default() -> Self {
        Self {
            ladder_bps: vec![1.0e6, 2.5e6, 5.0e6, 8.0e6],
            psnr_db: vec![30.0, 34.0, 37.0, 40.0],
            rebuffer_s: 2.0,
            initial_buffer_s: 2.0,
            duration_s: 600.0,
            nominal_level: None,
            stall_weight: 1.0,
            quality_weight: 0.25,
            engagement_window_slots: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub kind: SchedulerKind,
    pub v: f64,
    pub mode_policy: ModePolicy,
    pub mode_threshold: f64,
    pub max_group: usize,
    pub corr_threshold: f64,
    /// Static BS partition; empty means one cluster of all BSs.
    pub clusters: Vec<Vec<usize>>,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            kind: SchedulerKind::Kqi,
            v: 100.0,
            mode_policy: ModePolicy::Adaptive,
            mode_threshold: 0.5,
            max_group: 4,
            corr_threshold: 0.7,
            clusters: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub kind: TrafficKind,
    pub full_buffer_bps: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            kind: TrafficKind::Video,
            full_buffer_bps: 2.0e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_slots: u64,
    pub slot_duration_s: f64,
    pub n_bs: usize,
    pub antennas: Antennas,
    pub carrier_hz: f64,
    pub sampling_hz: f64,
    pub active_subcarriers: u32,
    pub subcarrier_interval_hz: f64,
    pub tx_power_dbm: f64,
    pub duplex: Duplex,
    pub geometry: GeometryConfig,
    pub users: UsersConfig,
    pub channel: ChannelConfig,
    pub sync: SyncConfig,
    pub backhaul: BackhaulConfig,
    pub mcs: McsTable,
    pub video: VideoConfig,
    pub scheduler: SchedulerConfig,
    pub traffic: TrafficConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_slots: 1000,
            slot_duration_s: 1.0e-3,
            n_bs: 3,
            antennas: Antennas::default(),
            carrier_hz: 3.5e9,
            sampling_hz: 30.725e6,
            active_subcarriers: 1200,
            subcarrier_interval_hz: 312.5e3,
            tx_power_dbm: 20.0,
            duplex: Duplex::Fdd,
            geometry: GeometryConfig::default(),
            users: UsersConfig::default(),
            channel: ChannelConfig::default(),
            sync: SyncConfig::default(),
            backhaul: BackhaulConfig::default(),
            mcs: McsTable::default(),
            video: VideoConfig::default(),
            scheduler: SchedulerConfig::default(),
            traffic: TrafficConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn tx_power_w(&self) -> f64 {
        1.0e-3 * 10f64.powf(self.tx_power_dbm / 10.0)
    }

    /// Occupied bandwidth used for the thermal noise floor.
    pub fn occupied_bandwidth_hz(&self) -> f64 {
        self.active_subcarriers as f64 * self.subcarrier_interval_hz
    }

    pub fn noise_var_w(&self) -> f64 {
        let dbm = -174.0 + 10.0 * self.occupied_bandwidth_hz().log10() + self.geometry.noise_figure_db;
        1.0e-3 * 10f64.powf(dbm / 10.0)
    }

    pub fn reference_loss_db(&self) -> f64 {
        self.geometry.reference_loss_db.unwrap_or_else(|| {
            let c = 299_792_458.0;
            20.0 * (4.0 * std::f64::consts::PI * self.carrier_hz / c).log10()
        })
    }

    pub fn nominal_level(&self) -> usize {
        self.video
            .nominal_level
            .unwrap_or(self.video.ladder_bps.len().saturating_sub(1))
    }

    pub fn ladder_for(&self, user: usize) -> Vec<f64> {
        let scale = self.users.ladder_scale.get(user).copied().unwrap_or(1.0);
        self.video.ladder_bps.iter().map(|b| b * scale).collect()
    }

    pub fn priority_of(&self, user: usize) -> f64 {
        self.users.priorities.get(user).copied().unwrap_or(1.0)
    }

    /// BS partition used by the scheduler.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        if self.scheduler.clusters.is_empty() {
            vec![(0..self.n_bs).collect()]
        } else {
            self.scheduler.clusters.clone()
        }
    }

    /// Checks every constraint; the error names the offending key path.
    pub fn validate(&self) -> Result<()> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be a positive finite number, got {v}")))
            }
        }
        fn non_negative(key: &str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be finite and >= 0, got {v}")))
            }
        }

        if self.n_bs == 0 {
            return Err(Error::config("n_bs", "must be at least 1"));
        }
        if self.antennas.bs == 0 {
            return Err(Error::config("antennas.bs", "must be at least 1"));
        }
        if self.antennas.user != 1 {
            return Err(Error::config(
                "antennas.user",
                "the simulator serves single-antenna users; must be 1",
            ));
        }
        positive("slot_duration_s", self.slot_duration_s)?;
        positive("carrier_hz", self.carrier_hz)?;
        positive("sampling_hz", self.sampling_hz)?;
        positive("subcarrier_interval_hz", self.subcarrier_interval_hz)?;
        if self.active_subcarriers == 0 {
            return Err(Error::config("active_subcarriers", "must be at least 1"));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(Error::config("tx_power_dbm", "must be finite"));
        }

        positive("geometry.isd_m", self.geometry.isd_m)?;
        positive("geometry.pathloss_exponent", self.geometry.pathloss_exponent)?;
        positive("geometry.min_distance_m", self.geometry.min_distance_m)?;

        let users = &self.users;
        if users.count == 0 {
            return Err(Error::config("users.count", "must be at least 1"));
        }
        positive("users.radius_m", users.radius_m)?;
        if users.placement == Placement::Fixed && users.positions.len() != users.count {
            return Err(Error::config(
                "users.positions",
                format!("fixed placement needs {} positions, got {}", users.count, users.positions.len()),
            ));
        }
        let [lo, hi] = users.sensitivity_range;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::config(
                "users.sensitivity_range",
                "must satisfy 0 <= low <= high <= 1",
            ));
        }
        if users.priorities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::config("users.priorities", "priorities must be finite and >= 0"));
        }
        if users.ladder_scale.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::config("users.ladder_scale", "scales must be positive"));
        }

        let ch = &self.channel;
        non_negative("channel.doppler_hz", ch.doppler_hz)?;
        non_negative("channel.doppler_static_hz", ch.doppler_static_hz)?;
        non_negative("channel.doppler_mobile_hz", ch.doppler_mobile_hz)?;
        if ch.csi_bits == 0 || ch.csi_bits > 52 {
            return Err(Error::config("channel.csi_bits", "must be in 1..=52"));
        }
        let [imin, imax] = ch.interval_bounds;
        if imin == 0 || imin > imax {
            return Err(Error::config("channel.interval_bounds", "must satisfy 1 <= min <= max"));
        }
        if ch.feedback_interval_slots < imin || ch.feedback_interval_slots > imax {
            return Err(Error::config(
                "channel.feedback_interval_slots",
                format!("must lie within interval_bounds [{imin}, {imax}]"),
            ));
        }
        if ch.coherence_low.is_nan() || ch.coherence_high.is_nan() || ch.coherence_low >= ch.coherence_high {
            return Err(Error::config("channel.coherence_low", "must be below coherence_high"));
        }

        let sync = &self.sync;
        if sync.ppb_range[0] < 0.0 || sync.ppb_range[0] > sync.ppb_range[1] {
            return Err(Error::config("sync.ppb_range", "must satisfy 0 <= low <= high"));
        }
        non_negative("sync.sigma0_hz", sync.sigma0_hz)?;
        if !(0.0..=1.5).contains(&sync.max_time_offset_us) {
            return Err(Error::config("sync.max_time_offset_us", "must be in [0, 1.5]"));
        }
        non_negative("sync.cp_us", sync.cp_us)?;
        if !sync.fixed_offsets_hz.is_empty() && sync.fixed_offsets_hz.len() != self.n_bs {
            return Err(Error::config(
                "sync.fixed_offsets_hz",
                format!("needs one offset per BS ({}), got {}", self.n_bs, sync.fixed_offsets_hz.len()),
            ));
        }

        let bh = &self.backhaul;
        non_negative("backhaul.capacity_gbps", bh.capacity_gbps)?;
        positive("backhaul.max_capacity_gbps", bh.max_capacity_gbps)?;
        if bh.capacity_gbps > bh.max_capacity_gbps {
            return Err(Error::config(
                "backhaul.capacity_gbps",
                format!("exceeds the physical maximum of {} Gb/s", bh.max_capacity_gbps),
            ));
        }
        non_negative("backhaul.latency_ms", bh.latency_ms)?;
        if !(0.0..=1.0).contains(&bh.share_floor) {
            return Err(Error::config("backhaul.share_floor", "must be in [0, 1]"));
        }

        self.mcs.validate().map_err(|m| Error::config("mcs", m))?;

        let v = &self.video;
        if v.ladder_bps.is_empty() {
            return Err(Error::config("video.ladder_bps", "must not be empty"));
        }
        if v.ladder_bps.iter().any(|b| !b.is_finite() || *b <= 0.0)
            || v.ladder_bps.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::config("video.ladder_bps", "must be positive and strictly increasing"));
        }
        if v.psnr_db.len() != v.ladder_bps.len() {
            return Err(Error::config("video.psnr_db", "needs one entry per ladder level"));
        }
        if v.psnr_db.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::config("video.psnr_db", "must be non-decreasing"));
        }
        positive("video.rebuffer_s", v.rebuffer_s)?;
        non_negative("video.initial_buffer_s", v.initial_buffer_s)?;
        positive("video.duration_s", v.duration_s)?;
        if let Some(level) = v.nominal_level {
            if level >= v.ladder_bps.len() {
                return Err(Error::config("video.nominal_level", "outside the ladder"));
            }
        }
        non_negative("video.stall_weight", v.stall_weight)?;
        non_negative("video.quality_weight", v.quality_weight)?;
        if v.engagement_window_slots == 0 {
            return Err(Error::config("video.engagement_window_slots", "must be at least 1"));
        }

        let s = &self.scheduler;
        non_negative("scheduler.v", s.v)?;
        positive("scheduler.mode_threshold", s.mode_threshold)?;
        if s.max_group == 0 {
            return Err(Error::config("scheduler.max_group", "must be at least 1"));
        }
        if !(s.corr_threshold > 0.0 && s.corr_threshold <= 1.0) {
            return Err(Error::config("scheduler.corr_threshold", "must be in (0, 1]"));
        }
        if !s.clusters.is_empty() {
            let mut seen = vec![false; self.n_bs];
            for cluster in &s.clusters {
                if cluster.is_empty() {
                    return Err(Error::config("scheduler.clusters", "clusters must not be empty"));
                }
                for &b in cluster {
                    if b >= self.n_bs || seen[b] {
                        return Err(Error::config(
                            "scheduler.clusters",
                            "every BS must appear in exactly one cluster",
                        ));
                    }
                    seen[b] = true;
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::config(
                    "scheduler.clusters",
                    "every BS must appear in exactly one cluster",
                ));
            }
        }

        positive("traffic.full_buffer_bps", self.traffic.full_buffer_bps)?;
        Ok(())
    }
}

/// Parses a TOML scenario, applies `key=value` overrides, and validates.
pub fn parse_config_with_overrides(text: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let config = if overrides.is_empty() {
        toml::from_str::<ScenarioConfig>(text).map_err(|e| de_error(text, &e))?
    } else {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| de_error(text, &e))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let merged = toml::to_string(&table).map_err(|e| Error::Serialize(e.to_string()))?;
        toml::from_str::<ScenarioConfig>(&merged).map_err(|e| {
            let mut err = de_error(&merged, &e);
            // Re-point the line at the original document when the key lives there.
            if let Error::Config { key, line, .. } = &mut err {
                *line = locate_key(text, key);
            }
            err
        })?
    };
    config.validate().map_err(|e| match e {
        Error::Config { key, message, .. } => Error::Config {
            line: locate_key(text, &key),
            key,
            message,
        },
        e => e,
    })?;
    Ok(config)
}

/// Parses and validates a TOML scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_config_with_overrides(text, &[])
}

/// Canonical TOML rendering; `parse_config(&serialize_config(c))` yields `c`.
pub fn serialize_config(config: &ScenarioConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::Serialize(e.to_string()))
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::config(item, "override must look like key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        // Bare words are taken as strings so `--set scheduler.kind=kpi` works.
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut parts = key.split('.').peekable();
    let mut cursor = table;
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(Error::config(key, "empty key segment"));
        }
        if parts.peek().is_none() {
            cursor.insert(part.to_string(), value);
            return Ok(());
        }
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{part}` is not a table")))?;
    }
    Err(Error::config(key, "empty key"))
}

fn de_error(text: &str, err: &toml::de::Error) -> Error {
    let (key, line) = match err.span() {
        Some(span) => (key_path_at(text, span.start), Some(line_of(text, span.start))),
        None => (String::from("<document>"), None),
    };
    Error::Config {
        key,
        line,
        message: err.message().to_string(),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Dotted key path of the assignment on the line containing `offset`.
fn key_path_at(text: &str, offset: usize) -> String {
    let mut section = String::new();
    let mut consumed = 0usize;
    for line in text.split_inclusive('\n') {
        let start = consumed;
        consumed += line.len();
        let trimmed = line.trim();
        if trimmed.starts_with('[') && !trimmed.starts_with("[[") {
            section = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if offset < consumed {
                return section;
            }
            continue;
        }
        if offset < consumed || consumed == text.len() {
            let _ = start;
            let key = trimmed.split('=').next().unwrap_or("").trim();
            return match (section.is_empty(), key.is_empty()) {
                (_, true) => section,
                (true, false) => key.to_string(),
                (false, false) => format!("{section}.{key}"),
            };
        }
    }
    section
}

/// Line on which a dotted key path is assigned, if it appears in `text`.
fn locate_key(text: &str, path: &str) -> Option<usize> {
    let (section, key) = match path.rsplit_once('.') {
        Some((s, k)) => (s, k),
        None => ("", path),
    };
    let mut current = String::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            current = trimmed.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == path {
                return Some(idx + 1);
            }
            continue;
        }
        if let Some((lhs, _)) = trimmed.split_once('=') {
            let lhs = lhs.trim();
            if (current == section && lhs == key) || (current.is_empty() && lhs == path) {
                return Some(idx + 1);
            }
        }
    }
    None
}
