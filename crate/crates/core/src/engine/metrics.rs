use serde::{Deserialize, Serialize};

use crate::kqi::EngagementRecord;
use crate::phy::Mode;
use crate::stats;

/// One `(slot, user)` row of the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub slot: u64,
    pub user: usize,
    pub scheduled: bool,
    /// Realized SINR; absent when the user was not scheduled.
    pub sinr_db: Option<f64>,
    /// Delivered bits divided by the slot duration.
    pub rate_bps: f64,
    pub served_bits: f64,
    pub queue_bits: f64,
    pub buffer_s: f64,
    pub stalls: u32,
    pub quality: usize,
    pub played_bits: f64,
    pub kqi_loss: f64,
    /// End-to-end latency of the slot's delivery; absent when nothing arrived.
    pub latency_ms: Option<f64>,
}

/// Per-slot system totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRow {
    pub slot: u64,
    pub backlog_bits: f64,
    pub kqi_loss: f64,
    pub served_bits: f64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAggregate {
    pub user: usize,
    pub throughput_bps: f64,
    pub served_bits: f64,
    pub download_ratio: f64,
    /// Engagement correlation; absent when a series is constant.
    pub pearson: Option<f64>,
    pub stall_count: u32,
    pub mean_kqi_loss: f64,
    pub mean_queue_bits: f64,
    pub mean_quality: f64,
    pub mean_psnr_db: f64,
    pub mean_latency_ms: Option<f64>,
    pub engagement: EngagementRecord,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_slots: u64,
    /// 5th-percentile user throughput.
    pub cell_edge_throughput_bps: f64,
    pub mean_throughput_bps: f64,
    pub mean_latency_ms: Option<f64>,
    pub total_stalls: u32,
    /// Time average of the summed queue backlog.
    pub mean_backlog_bits: f64,
    /// Time average of the summed KQI loss.
    pub mean_sum_kqi_loss: f64,
    pub jt_slots: u64,
    pub cscb_slots: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub slot_duration_s: f64,
    pub engagement_window_slots: u32,
    pub traces: Vec<TraceRow>,
    pub system: Vec<SystemRow>,
    pub users: Vec<UserAggregate>,
    pub aggregate: Aggregate,
}

pub(crate) fn mean_opt(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

impl MetricsReport {
    /// Aggregates rebuilt from the per-slot traces. Takes the PSNR table and
    /// per-user top bitrate and file size (zero without a video session).
    pub fn recompute(&self, psnr_db: &[f64], top_rate_bps: &[f64], file_size_bits: &[f64]) -> (Vec<UserAggregate>, Aggregate) {
        let n_users = file_size_bits.len();
        let n_slots = self.system.len() as u64;
        let t = self.slot_duration_s;
        let w = self.engagement_window_slots.max(1) as u64;
        let mut users = Vec::with_capacity(n_users);
        for u in 0..n_users {
            let rows: Vec<&TraceRow> = self.traces.iter().filter(|r| r.user == u).collect();
            let served: f64 = rows.iter().map(|r| r.served_bits).sum();
            let denom = (n_slots as f64 * t).max(f64::MIN_POSITIVE);
            let mut engagement = EngagementRecord::default();
            for chunk in rows.chunks(w as usize).filter(|c| c.len() as u64 == w) {
                let played: f64 = chunk.iter().map(|r| r.played_bits).sum();
                let delivered: f64 = chunk.iter().map(|r| r.served_bits).sum();
                engagement.push(played / (top_rate_bps[u] * w as f64 * t), delivered / (w as f64 * t));
            }
            let n = rows.len().max(1) as f64;
            users.push(UserAggregate {
                user: u,
                throughput_bps: if n_slots == 0 { 0.0 } else { served / denom },
                served_bits: served,
                download_ratio: if file_size_bits[u] > 0.0 {
                    (served / file_size_bits[u]).min(1.0)
                } else {
                    0.0
                },
                pearson: crate::kqi::pearson(&engagement).ok(),
                stall_count: rows.last().map_or(0, |r| r.stalls),
                mean_kqi_loss: rows.iter().map(|r| r.kqi_loss).sum::<f64>() / n,
                mean_queue_bits: rows.iter().map(|r| r.queue_bits).sum::<f64>() / n,
                mean_quality: rows.iter().map(|r| r.quality as f64).sum::<f64>() / n,
                mean_psnr_db: rows.iter().map(|r| psnr_db[r.quality]).sum::<f64>() / n,
                mean_latency_ms: mean_opt(rows.iter().filter_map(|r| r.latency_ms)),
                engagement,
            });
        }
        let throughputs: Vec<f64> = users.iter().map(|u| u.throughput_bps).collect();
        let aggregate = Aggregate {
            n_slots,
            cell_edge_throughput_bps: stats::percentile(&throughputs, 5.0),
            mean_throughput_bps: stats::mean(&throughputs),
            mean_latency_ms: mean_opt(self.traces.iter().filter_map(|r| r.latency_ms)),
            total_stalls: users.iter().map(|u| u.stall_count).sum(),
            mean_backlog_bits: stats::mean(&self.system.iter().map(|s| s.backlog_bits).collect::<Vec<_>>()),
            mean_sum_kqi_loss: stats::mean(&self.system.iter().map(|s| s.kqi_loss).collect::<Vec<_>>()),
            jt_slots: self.system.iter().filter(|s| s.mode == Mode::Jt).count() as u64,
            cscb_slots: self.system.iter().filter(|s| s.mode == Mode::Cscb).count() as u64,
        };
        (users, aggregate)
    }
}
