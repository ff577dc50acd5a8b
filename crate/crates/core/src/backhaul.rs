//! Backhaul capacity accounting.
//!
//! JT moves I/Q samples for every served user plus CSI; CS/CB only moves CSI.
//! Capacity is a cluster aggregate split between BSs by `per_bs_share`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest I/Q sample width the fronthaul supports.
pub const MAX_IQ_BITS: u32 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackhaulBudget {
    pub capacity_gbps: f64,
    pub latency_ms: f64,
    pub per_bs_share: Vec<f64>,
}

impl BackhaulBudget {
    pub fn new(capacity_gbps: f64, latency_ms: f64, per_bs_share: Vec<f64>) -> Result<Self> {
        let sum: f64 = per_bs_share.iter().sum();
        if per_bs_share.is_empty() || (sum - 1.0).abs() > 1e-9 || per_bs_share.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::DegenerateInput(format!(
                "backhaul shares must lie in [0, 1] and sum to 1, got {per_bs_share:?}"
            )));
        }
        if capacity_gbps.is_nan() || capacity_gbps < 0.0 || latency_ms.is_nan() || latency_ms < 0.0 {
            return Err(Error::DegenerateInput("backhaul capacity and latency must be >= 0".into()));
        }
        Ok(Self {
            capacity_gbps,
            latency_ms,
            per_bs_share,
        })
    }

    pub fn equal(capacity_gbps: f64, latency_ms: f64, n_bs: usize) -> Self {
        Self {
            capacity_gbps,
            latency_ms,
            per_bs_share: vec![1.0 / n_bs as f64; n_bs],
        }
    }

    /// Shares proportional to per-BS backlog, mixed with a uniform floor.
    pub fn from_backlog(capacity_gbps: f64, latency_ms: f64, backlog: &[f64], floor: f64) -> Self {
        let n = backlog.len();
        let total: f64 = backlog.iter().sum();
        let per_bs_share = if total > 0.0 {
            let raw: Vec<f64> = backlog
                .iter()
                .map(|q| floor / n as f64 + (1.0 - floor) * q / total)
                .collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| x / s).collect()
        } else {
            vec![1.0 / n as f64; n]
        };
        Self {
            capacity_gbps,
            latency_ms,
            per_bs_share,
        }
    }

    pub fn share_gbps(&self, bs: usize) -> f64 {
        self.capacity_gbps * self.per_bs_share[bs]
    }
}

/// CSI exchange rate in Gb/s: `bits * 2 * N_t * N_r` per user and BS link,
/// once per feedback interval.
pub fn csi_gbps(
    n_users: usize,
    n_links: usize,
    csi_bits: u32,
    n_t: usize,
    n_r: usize,
    interval_slots: u32,
    slot_duration_s: f64,
) -> f64 {
    let bits = n_users as f64 * n_links as f64 * csi_bits as f64 * 2.0 * (n_t * n_r) as f64;
    bits / (interval_slots.max(1) as f64 * slot_duration_s) / 1e9
}

/// JT backhaul load: complex baseband at Nyquist for every user plus CSI.
pub fn jt_required_gbps(
    n_users: usize,
    bandwidth_hz: f64,
    iq_bits: u32,
    csi_bits_per_interval: u64,
    interval_slots: u32,
    slot_duration_s: f64,
) -> f64 {
    let iq = n_users as f64 * bandwidth_hz * 2.0 * iq_bits as f64 / 1e9;
    let csi = csi_bits_per_interval as f64 / (interval_slots.max(1) as f64 * slot_duration_s) / 1e9;
    iq + csi
}

/// I/Q-only part of the JT load.
pub fn iq_gbps(n_users: usize, bandwidth_hz: f64, iq_bits: u32) -> f64 {
    n_users as f64 * bandwidth_hz * 2.0 * iq_bits as f64 / 1e9
}

/// Largest I/Q width in `1..=16` whose load fits the budget next to
/// `csi_load_gbps`, or 0 when even one bit does not fit.
pub fn fit_iq_bits(budget: &BackhaulBudget, n_users: usize, bandwidth_hz: f64, csi_load_gbps: f64) -> u32 {
    (1..=MAX_IQ_BITS)
        .rev()
        .find(|&b| iq_gbps(n_users, bandwidth_hz, b) + csi_load_gbps <= budget.capacity_gbps)
        .unwrap_or(0)
}

/// Propagation latency plus serialization of `bytes` over BS `bs`'s share.
pub fn backhaul_latency_contribution(budget: &BackhaulBudget, bs: usize, bytes: u64) -> f64 {
    if bytes == 0 {
        return budget.latency_ms;
    }
    let bits_per_ms = budget.share_gbps(bs) * 1e6;
    budget.latency_ms + bytes as f64 * 8.0 / bits_per_ms
}

/// Complex variance of the I/Q quantization error for a transmit antenna
/// radiating `power_w`: the clip range is four standard deviations per
/// component and each component carries `delta^2 / 12`.
pub fn iq_noise_var(power_w: f64, iq_bits: u32) -> f64 {
    if power_w <= 0.0 {
        return 0.0;
    }
    64.0 * power_w / (12.0 * 4f64.powi(iq_bits as i32))
}
