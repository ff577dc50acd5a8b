//! Multi-run experiments. Runs are independent and execute in parallel;
//! results are merged by index so output order never depends on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_with, MetricsReport, RunOptions};
use crate::config::{ModePolicy, ScenarioConfig, SchedulerKind};
use crate::error::Result;
use crate::phy::Mode;
use crate::stats;

fn with_seed(config: &ScenarioConfig, seed: u64) -> ScenarioConfig {
    let mut c = config.clone();
    c.seed = seed;
    c
}

/// Runs every config in parallel, keeping input order.
pub fn run_many(configs: &[ScenarioConfig], opts: &RunOptions) -> Result<Vec<super::RunOutput>> {
    configs.par_iter().map(|c| run_with(c, opts)).collect()
}

fn reports(configs: &[ScenarioConfig]) -> Result<Vec<MetricsReport>> {
    Ok(run_many(configs, &RunOptions::default())?.into_iter().map(|o| o.report).collect())
}

fn user_throughputs(reports: &[MetricsReport]) -> Vec<f64> {
    reports.iter().flat_map(|r| r.users.iter().map(|u| u.throughput_bps)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackhaulCurve {
    pub capacities_gbps: Vec<f64>,
    /// Cell-edge throughput with users pooled over all seeds.
    pub jt_bps: Vec<f64>,
    pub cscb_bps: Vec<f64>,
}

/// Cell-edge throughput against total backhaul capacity, JT and CS/CB each
/// forced for the whole run.
pub fn sweep_backhaul(config: &ScenarioConfig, capacities_gbps: &[f64], seeds: &[u64]) -> Result<BackhaulCurve> {
    let mut configs = Vec::new();
    for &cap in capacities_gbps {
        for policy in [ModePolicy::Jt, ModePolicy::Cscb] {
            for &s in seeds {
                let mut c = with_seed(config, s);
                c.backhaul.capacity_gbps = cap;
                c.scheduler.mode_policy = policy;
                configs.push(c);
            }
        }
    }
    let out = reports(&configs)?;
    let per_point: Vec<f64> = out
        .chunks(seeds.len().max(1))
        .map(|chunk| stats::percentile(&user_throughputs(chunk), 5.0))
        .collect();
    Ok(BackhaulCurve {
        capacities_gbps: capacities_gbps.to_vec(),
        jt_bps: per_point.iter().step_by(2).copied().collect(),
        cscb_bps: per_point.iter().skip(1).step_by(2).copied().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackCurves {
    pub intervals: Vec<u32>,
    pub static_doppler_hz: f64,
    pub mobile_doppler_hz: f64,
    /// Mean user throughput, averaged over seeds.
    pub static_bps: Vec<f64>,
    pub mobile_bps: Vec<f64>,
    /// `[interval][seed]`
    pub static_per_seed: Vec<Vec<f64>>,
    pub mobile_per_seed: Vec<Vec<f64>>,
}

/// Throughput against the CSI feedback interval under the static and mobile
/// Doppler presets.
pub fn sweep_feedback(config: &ScenarioConfig, intervals: &[u32], seeds: &[u64]) -> Result<FeedbackCurves> {
    let dopplers = [config.channel.doppler_static_hz, config.channel.doppler_mobile_hz];
    let mut configs = Vec::new();
    for &d in &dopplers {
        for &iv in intervals {
            for &s in seeds {
                let mut c = with_seed(config, s);
                c.channel.doppler_hz = d;
                c.channel.feedback_interval_slots = iv;
                c.channel.adaptive_feedback = false;
                configs.push(c);
            }
        }
    }
    let out = reports(&configs)?;
    let per_run: Vec<f64> = out.iter().map(|r| r.aggregate.mean_throughput_bps).collect();
    let n = seeds.len().max(1);
    let grid: Vec<Vec<f64>> = per_run.chunks(n).map(<[f64]>::to_vec).collect();
    let (st, mo) = grid.split_at(intervals.len());
    Ok(FeedbackCurves {
        intervals: intervals.to_vec(),
        static_doppler_hz: dopplers[0],
        mobile_doppler_hz: dopplers[1],
        static_bps: st.iter().map(|v| stats::mean(v)).collect(),
        mobile_bps: mo.iter().map(|v| stats::mean(v)).collect(),
        static_per_seed: st.to_vec(),
        mobile_per_seed: mo.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetCurve {
    pub offsets_hz: Vec<f64>,
    /// Mean scheduled-stream SINR.
    pub jt_db: Vec<f64>,
    pub cscb_db: Vec<f64>,
}

/// SINR against a common inter-BS frequency offset. Each scheduled plan is
/// re-evaluated at every grid offset on the same channel.
pub fn sweep_offset(config: &ScenarioConfig, offsets_hz: &[f64], seeds: &[u64]) -> Result<OffsetCurve> {
    let opts = RunOptions {
        keep_traces: false,
        probe_offsets_hz: offsets_hz.to_vec(),
    };
    let mut configs = Vec::new();
    for policy in [ModePolicy::Jt, ModePolicy::Cscb] {
        for &s in seeds {
            let mut c = with_seed(config, s);
            c.scheduler.mode_policy = policy;
            configs.push(c);
        }
    }
    let out = run_many(&configs, &opts)?;
    let mut jt = vec![0.0; offsets_hz.len()];
    let mut cscb = vec![0.0; offsets_hz.len()];
    let (mut n_jt, mut n_cscb) = (0u64, 0u64);
    for o in &out {
        let p = o.probe.as_ref().expect("probe requested");
        for k in 0..offsets_hz.len() {
            jt[k] += p.jt_sum_db[k];
            cscb[k] += p.cscb_sum_db[k];
        }
        n_jt += p.jt_count;
        n_cscb += p.cscb_count;
    }
    Ok(OffsetCurve {
        offsets_hz: offsets_hz.to_vec(),
        jt_db: jt.iter().map(|s| s / n_jt.max(1) as f64).collect(),
        cscb_db: cscb.iter().map(|s| s / n_cscb.max(1) as f64).collect(),
    })
}

/// Outcomes of one user under both schedulers, summarized over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedUser {
    pub user: usize,
    /// Median over seeds with a defined coefficient.
    pub kpi_pearson: Option<f64>,
    pub kqi_pearson: Option<f64>,
    pub kpi_stalls: f64,
    pub kqi_stalls: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerComparison {
    pub seeds: Vec<u64>,
    pub users: Vec<PairedUser>,
    pub kpi: Vec<MetricsReport>,
    pub kqi: Vec<MetricsReport>,
}

fn median_opt(values: Vec<Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().flatten().collect();
    (!v.is_empty()).then(|| stats::median(&v))
}

/// Runs the KPI baseline and the KQI scheduler on identical seeds, channels
/// and arrivals, pairing per-user stall counts and engagement correlation.
pub fn compare_schedulers(config: &ScenarioConfig, n_users: usize, seeds: &[u64]) -> Result<SchedulerComparison> {
    let mut configs = Vec::new();
    for kind in [SchedulerKind::Kpi, SchedulerKind::Kqi] {
        for &s in seeds {
            let mut c = with_seed(config, s);
            c.users.count = n_users;
            c.scheduler.kind = kind;
            configs.push(c);
        }
    }
    let mut out = reports(&configs)?;
    let kqi = out.split_off(seeds.len());
    let kpi = out;
    let users = (0..n_users)
        .map(|u| {
            let stalls = |rs: &[MetricsReport]| stats::median(&rs.iter().map(|r| r.users[u].stall_count as f64).collect::<Vec<_>>());
            PairedUser {
                user: u,
                kpi_pearson: median_opt(kpi.iter().map(|r| r.users[u].pearson).collect()),
                kqi_pearson: median_opt(kqi.iter().map(|r| r.users[u].pearson).collect()),
                kpi_stalls: stalls(&kpi),
                kqi_stalls: stalls(&kqi),
            }
        })
        .collect();
    Ok(SchedulerComparison {
        seeds: seeds.to_vec(),
        users,
        kpi,
        kqi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VPoint {
    pub v: f64,
    /// Time-averaged summed KQI loss, averaged over seeds.
    pub mean_kqi_loss: f64,
    /// Time-averaged summed backlog, averaged over seeds.
    pub mean_backlog_bits: f64,
    /// Largest [`backlog_relative_slope`] over the seeds.
    pub max_relative_slope: f64,
}

/// Drift-plus-penalty trade-off over `vs`.
pub fn sweep_v(config: &ScenarioConfig, vs: &[f64], seeds: &[u64]) -> Result<Vec<VPoint>> {
    let mut configs = Vec::new();
    for &v in vs {
        for &s in seeds {
            let mut c = with_seed(config, s);
            c.scheduler.kind = SchedulerKind::Kqi;
            c.scheduler.v = v;
            configs.push(c);
        }
    }
    let out = reports(&configs)?;
    Ok(summarize_v(vs, &out, seeds.len()))
}

/// Least-squares backlog slope (bits per slot) over the last half of the
/// run, relative to the mean backlog of that half.
pub fn backlog_relative_slope(report: &MetricsReport) -> f64 {
    let backlog: Vec<f64> = report.system.iter().map(|s| s.backlog_bits).collect();
    let tail = &backlog[backlog.len() / 2..];
    let mean = stats::mean(tail);
    if mean <= 0.0 {
        return 0.0;
    }
    (stats::ols_slope(tail) / mean).abs()
}

/// Per-user engagement correlation for one population, one entry per
/// `(seed, user)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementSpread {
    pub seed: Vec<u64>,
    pub user: Vec<usize>,
    pub pearson: Vec<Option<f64>>,
    pub throughput_bps: Vec<f64>,
}

pub fn engagement_spread(config: &ScenarioConfig, seeds: &[u64]) -> Result<EngagementSpread> {
    let configs: Vec<ScenarioConfig> = seeds.iter().map(|&s| with_seed(config, s)).collect();
    let out = reports(&configs)?;
    let mut spread = EngagementSpread {
        seed: Vec::new(),
        user: Vec::new(),
        pearson: Vec::new(),
        throughput_bps: Vec::new(),
    };
    for r in &out {
        for u in &r.users {
            spread.seed.push(r.seed);
            spread.user.push(u.user);
            spread.pearson.push(u.pearson);
            spread.throughput_bps.push(u.throughput_bps);
        }
    }
    Ok(spread)
}

/// Fraction of slots in which the engine's chosen mode was `mode`.
pub fn mode_share(report: &MetricsReport, mode: Mode) -> f64 {
    let n = report.system.len();
    if n == 0 {
        return 0.0;
    }
    report.system.iter().filter(|s| s.mode == mode).count() as f64 / n as f64
}

/// Per-user ladder scale putting each user's top bitrate at `load` times
/// the throughput it achieves under full-buffer demand.
pub fn calibrated_ladder_scale(config: &ScenarioConfig, load: f64) -> Result<Vec<f64>> {
    let mut c = config.clone();
    c.traffic.kind = crate::config::TrafficKind::FullBuffer;
    c.scheduler.kind = SchedulerKind::Kpi;
    c.users.ladder_scale.clear();
    let report = run_with(&c, &RunOptions::default())?.report;
    let top = config.video.ladder_bps[config.video.ladder_bps.len() - 1];
    Ok(report
        .users
        .iter()
        .map(|u| (load * u.throughput_bps / top).max(1e-6))
        .collect())
}

/// [`sweep_v`] with every seed's ladder calibrated to `load`.
pub fn sweep_v_at_load(config: &ScenarioConfig, vs: &[f64], seeds: &[u64], load: f64) -> Result<Vec<VPoint>> {
    let scales: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&s| calibrated_ladder_scale(&with_seed(config, s), load))
        .collect::<Result<_>>()?;
    let mut configs = Vec::new();
    for &v in vs {
        for (&s, scale) in seeds.iter().zip(&scales) {
            let mut c = with_seed(config, s);
            c.scheduler.kind = SchedulerKind::Kqi;
            c.scheduler.v = v;
            c.users.ladder_scale = scale.clone();
            configs.push(c);
        }
    }
    let out = reports(&configs)?;
    Ok(summarize_v(vs, &out, seeds.len()))
}

fn summarize_v(vs: &[f64], out: &[MetricsReport], n_seeds: usize) -> Vec<VPoint> {
    vs.iter()
        .zip(out.chunks(n_seeds.max(1)))
        .map(|(&v, chunk)| VPoint {
            v,
            mean_kqi_loss: stats::mean(&chunk.iter().map(|r| r.aggregate.mean_sum_kqi_loss).collect::<Vec<_>>()),
            mean_backlog_bits: stats::mean(&chunk.iter().map(|r| r.aggregate.mean_backlog_bits).collect::<Vec<_>>()),
            max_relative_slope: chunk.iter().map(backlog_relative_slope).fold(0.0, f64::max),
        })
        .collect()
}
