//! Experiment presets, run manifests and replay.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{parse_config, parse_config_with_overrides, serialize_config, ModePolicy, ScenarioConfig, SchedulerKind, TrafficKind};
use crate::engine::sweeps::{compare_schedulers, engagement_spread, sweep_backhaul, sweep_feedback, sweep_offset};
use crate::engine::{run_with, RunOptions};
use crate::error::{Error, Result};
use crate::io::{self, emit_metrics, fmt_f64, fmt_opt, to_json, write_file, xy_csv, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig3a,
    Fig3b,
    Fig3c,
    Fig3d,
    Table2,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Fig3a, Preset::Fig3b, Preset::Fig3c, Preset::Fig3d, Preset::Table2];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::Fig3c => "fig3c",
            Preset::Fig3d => "fig3d",
            Preset::Table2 => "table2",
        }
    }

    /// Seeds used when none are given.
    pub fn default_seeds(self) -> Vec<u64> {
        match self {
            Preset::Fig3d => vec![1],
            _ => (1..=20).collect(),
        }
    }

    /// Applies the preset's scenario on top of `config`.
    pub fn apply(self, config: &ScenarioConfig) -> ScenarioConfig {
        let mut c = config.clone();
        match self {
            Preset::Fig3a => {
                c.traffic.kind = TrafficKind::FullBuffer;
                c.traffic.full_buffer_bps = 3e8;
                c.scheduler.kind = SchedulerKind::Kqi;
                c.n_slots = 300;
            }
            Preset::Fig3b => {
                c.traffic.kind = TrafficKind::FullBuffer;
                c.scheduler.kind = SchedulerKind::Kpi;
                c.scheduler.mode_policy = ModePolicy::Jt;
                c.channel.doppler_static_hz = 10.0;
                c.channel.doppler_mobile_hz = 100.0;
                c.n_slots = 400;
            }
            Preset::Fig3c => {
                c.traffic.kind = TrafficKind::FullBuffer;
                c.scheduler.kind = SchedulerKind::Kpi;
                c.subcarrier_interval_hz = 15e3;
                c.n_slots = 200;
            }
            Preset::Fig3d | Preset::Table2 => {
                c.users.count = if self == Preset::Fig3d { 20 } else { 5 };
                c.scheduler.kind = if self == Preset::Fig3d { SchedulerKind::Kpi } else { c.scheduler.kind };
                c.scheduler.v = 1e5;
                c.subcarrier_interval_hz = 15e3;
                c.slot_duration_s = 0.01;
                c.n_slots = 10_000;
                c.channel.doppler_hz = 0.2;
                c.geometry.isd_m = 600.0;
                c.users.radius_m = 500.0;
                c.video.ladder_bps = vec![8e6, 2e7, 4e7, 6.4e7];
                c.video.initial_buffer_s = 0.5;
                c.video.rebuffer_s = 0.5;
                c.video.engagement_window_slots = 100;
                if self == Preset::Fig3d {
                    c.users.radius_m = 300.0;
                    c.video.ladder_bps = vec![1e6, 2.5e6, 5e6, 8e6];
                }
            }
        }
        c
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// Capacities swept by `fig3a`, in Gb/s.
pub const FIG3A_CAPACITIES_GBPS: [f64; 12] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0, 1.5, 2.0, 80.0, 240.0];
/// Feedback intervals swept by `fig3b`, in slots.
pub const FIG3B_INTERVALS: [u32; 6] = [1, 2, 4, 8, 16, 32];
/// Frequency offsets swept by `fig3c`, in Hz.
pub const FIG3C_OFFSETS_HZ: [f64; 8] = [0.0, 35.0, 70.0, 105.0, 140.0, 175.0, 210.0, 262.5];

/// Everything needed to reproduce a run's output files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: Option<String>,
    pub preset: Option<Preset>,
    pub out_dir: String,
    pub seeds: Vec<u64>,
    pub overrides: Vec<String>,
    /// The fully resolved configuration the run used.
    pub config: String,
    /// File name (relative to `out_dir`) to SHA-256.
    pub checksums: BTreeMap<String, String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Parses `text`, applies `preset`, then `overrides`.
pub fn build_config(text: &str, preset: Option<Preset>, overrides: &[String]) -> Result<ScenarioConfig> {
    let base = parse_config(text)?;
    let staged = match preset {
        Some(p) => p.apply(&base),
        None => base,
    };
    parse_config_with_overrides(&serialize_config(&staged)?, overrides)
}

fn checksums(out_dir: &Path, files: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    files
        .iter()
        .map(|p| {
            let name = p.strip_prefix(out_dir).unwrap_or(p).to_string_lossy().into_owned();
            Ok((name, io::sha256_file(p)?))
        })
        .collect()
}

fn put(out_dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = out_dir.join(name);
    write_file(&path, body)?;
    files.push(path);
    Ok(())
}

/// Runs `config` once per seed and writes full metrics for each.
pub fn run_plain(config: &ScenarioConfig, out_dir: &Path, seeds: &[u64]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for &s in seeds {
        let mut c = config.clone();
        c.seed = s;
        let out = run_with(
            &c,
            &RunOptions {
                keep_traces: true,
                ..RunOptions::default()
            },
        )?;
        files.extend(emit_metrics(&out.report, out_dir, &format!("seed{s}_"), &[Format::Csv, Format::Json])?);
    }
    Ok(files)
}

/// Runs the preset's sweep on an already-prepared config and writes its
/// plot data. Returns the written paths.
pub fn run_preset_files(preset: Preset, config: &ScenarioConfig, out_dir: &Path, seeds: &[u64]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    match preset {
        Preset::Fig3a => {
            let curve = sweep_backhaul(config, &FIG3A_CAPACITIES_GBPS, seeds)?;
            put(out_dir, "fig3a_jt.csv", &xy_csv("capacity_gbps", "cell_edge_bps", &curve.capacities_gbps, &curve.jt_bps), &mut files)?;
            put(out_dir, "fig3a_cscb.csv", &xy_csv("capacity_gbps", "cell_edge_bps", &curve.capacities_gbps, &curve.cscb_bps), &mut files)?;
            put(out_dir, "fig3a.json", &to_json(&curve)?, &mut files)?;
        }
        Preset::Fig3b => {
            let curves = sweep_feedback(config, &FIG3B_INTERVALS, seeds)?;
            let x: Vec<f64> = curves.intervals.iter().map(|&i| i as f64).collect();
            put(out_dir, "fig3b_static.csv", &xy_csv("interval_slots", "throughput_bps", &x, &curves.static_bps), &mut files)?;
            put(out_dir, "fig3b_mobile.csv", &xy_csv("interval_slots", "throughput_bps", &x, &curves.mobile_bps), &mut files)?;
            put(out_dir, "fig3b.json", &to_json(&curves)?, &mut files)?;
        }
        Preset::Fig3c => {
            let curve = sweep_offset(config, &FIG3C_OFFSETS_HZ, seeds)?;
            put(out_dir, "fig3c_jt.csv", &xy_csv("offset_hz", "sinr_db", &curve.offsets_hz, &curve.jt_db), &mut files)?;
            put(out_dir, "fig3c_cscb.csv", &xy_csv("offset_hz", "sinr_db", &curve.offsets_hz, &curve.cscb_db), &mut files)?;
            put(out_dir, "fig3c.json", &to_json(&curve)?, &mut files)?;
        }
        Preset::Fig3d => {
            let spread = engagement_spread(config, seeds)?;
            let mut body = String::from("seed,user,pearson,throughput_bps\n");
            for i in 0..spread.user.len() {
                body.push_str(&format!(
                    "{},{},{},{}\n",
                    spread.seed[i],
                    spread.user[i],
                    fmt_opt(spread.pearson[i]),
                    fmt_f64(spread.throughput_bps[i])
                ));
            }
            put(out_dir, "fig3d.csv", &body, &mut files)?;
            put(out_dir, "fig3d.json", &to_json(&spread)?, &mut files)?;
        }
        Preset::Table2 => {
            let cmp = compare_schedulers(config, config.users.count, seeds)?;
            let mut body = String::from("user,kpi_pearson,kqi_pearson,kpi_stalls,kqi_stalls\n");
            for u in &cmp.users {
                body.push_str(&format!(
                    "{},{},{},{},{}\n",
                    u.user + 1,
                    fmt_opt(u.kpi_pearson),
                    fmt_opt(u.kqi_pearson),
                    fmt_f64(u.kpi_stalls),
                    fmt_f64(u.kqi_stalls)
                ));
            }
            put(out_dir, "table2.csv", &body, &mut files)?;
            put(out_dir, "table2.json", &to_json(&cmp.users)?, &mut files)?;
        }
    }
    Ok(files)
}

/// Runs `name` on `config` (the preset is applied here) and writes its
/// data plus a manifest into `out_dir`.
pub fn run_preset(name: &str, config: &ScenarioConfig, out_dir: &Path, seeds: &[u64]) -> Result<RunManifest> {
    let preset: Preset = name.parse()?;
    let resolved = preset.apply(config);
    let seeds = if seeds.is_empty() { preset.default_seeds() } else { seeds.to_vec() };
    let files = run_preset_files(preset, &resolved, out_dir, &seeds)?;
    let manifest = RunManifest {
        config_path: None,
        preset: Some(preset),
        out_dir: out_dir.to_string_lossy().into_owned(),
        seeds,
        overrides: Vec::new(),
        config: serialize_config(&resolved)?,
        checksums: checksums(out_dir, &files)?,
    };
    write_manifest(&manifest, out_dir)?;
    Ok(manifest)
}

/// Executes a run described by the manifest fields into `out_dir`, using the
/// resolved config text stored in `config`.
pub fn execute(
    config: &ScenarioConfig,
    preset: Option<Preset>,
    seeds: &[u64],
    out_dir: &Path,
) -> Result<BTreeMap<String, String>> {
    let files = match preset {
        Some(p) => run_preset_files(p, config, out_dir, seeds)?,
        None => run_plain(config, out_dir, seeds)?,
    };
    checksums(out_dir, &files)
}

pub fn write_manifest(manifest: &RunManifest, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join(MANIFEST_FILE);
    write_file(&path, &to_json(manifest)?)?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    serde_json::from_str(&io::read_file(path)?).map_err(|e| Error::Serialize(format!("{}: {e}", path.display())))
}

/// A file whose replayed checksum differs from the manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub file: String,
    pub expected: Option<String>,
    pub actual: Option<String>,
}

/// Re-executes a manifest into `out_dir` and lists checksum differences.
pub fn replay(manifest: &RunManifest, out_dir: &Path) -> Result<Vec<Mismatch>> {
    let config = parse_config(&manifest.config)?;
    let actual = execute(&config, manifest.preset, &manifest.seeds, out_dir)?;
    let mut names: Vec<&String> = manifest.checksums.keys().chain(actual.keys()).collect();
    names.sort();
    names.dedup();
    Ok(names
        .into_iter()
        .filter_map(|n| {
            let (e, a) = (manifest.checksums.get(n), actual.get(n));
            (e != a).then(|| Mismatch {
                file: n.clone(),
                expected: e.cloned(),
                actual: a.cloned(),
            })
        })
        .collect())
}

#[cfg(test)]
#[allow(clippy::field_reassign_with_default)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!(matches!("fig9".parse::<Preset>(), Err(Error::UnknownPreset(n)) if n == "fig9"));
    }

    #[test]
    fn grids_hold_landmarks() {
        assert!(FIG3C_OFFSETS_HZ.contains(&70.0) && FIG3C_OFFSETS_HZ.contains(&262.5));
        assert!(FIG3A_CAPACITIES_GBPS.contains(&80.0) && FIG3A_CAPACITIES_GBPS.contains(&240.0));
        assert!(FIG3A_CAPACITIES_GBPS.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn preset_then_overrides() {
        let c = build_config("", Some(Preset::Table2), &["users.count=7".into()]).unwrap();
        assert_eq!(c.users.count, 7);
        assert_eq!(c.subcarrier_interval_hz, 15e3);
        assert!(Preset::ALL.iter().all(|p| p.apply(&ScenarioConfig::default()).validate().is_ok()));
    }

    #[test]
    fn unknown_preset_errors_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_preset("nope", &ScenarioConfig::default(), dir.path(), &[1]).unwrap_err();
        assert!(matches!(err, Error::UnknownPreset(_)));
        assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
    }

    #[test]
    fn small_preset_replays() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ScenarioConfig::default();
        c.n_slots = 20;
        let m = run_preset("fig3c", &c, dir.path(), &[1, 2]).unwrap();
        let again = tempfile::tempdir().unwrap();
        // The preset sets its own slot count, so replay uses the stored config.
        assert!(replay(&m, again.path()).unwrap().is_empty());
        let back = read_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, m);
    }
}
