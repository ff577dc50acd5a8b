//! Clock offsets, master-slave over-the-air synchronization and the
//! inter-carrier interference they cause under joint transmission.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockModel {
    pub freq_offset_ppb: Vec<f64>,
    pub time_offset_us: Vec<f64>,
    pub carrier_hz: f64,
    pub master_bs: usize,
}

impl ClockModel {
    /// Free-running GPS-disciplined clocks: magnitudes uniform over the
    /// configured ppb range with a random sign, timing uniform in
    /// `(-max, max)` microseconds.
    pub fn draw<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Self {
        let [lo, hi] = config.sync.ppb_range;
        let max_t = config.sync.max_time_offset_us;
        let n = config.n_bs;
        let mut freq = Vec::with_capacity(n);
        let mut time = Vec::with_capacity(n);
        for _ in 0..n {
            let mag = lo + (hi - lo) * rng.random::<f64>();
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            freq.push(sign * mag);
            time.push(max_t * (2.0 * rng.random::<f64>() - 1.0));
        }
        Self {
            freq_offset_ppb: freq,
            time_offset_us: time,
            carrier_hz: config.carrier_hz,
            master_bs: 0,
        }
    }

    /// Clocks with explicit frequency offsets in Hz and perfect timing.
    pub fn from_offsets_hz(offsets_hz: &[f64], carrier_hz: f64) -> Self {
        Self {
            freq_offset_ppb: offsets_hz.iter().map(|hz| hz * 1e9 / carrier_hz).collect(),
            time_offset_us: vec![0.0; offsets_hz.len()],
            carrier_hz,
            master_bs: 0,
        }
    }

    pub fn offset_hz(&self, bs: usize) -> f64 {
        offset_hz(self.freq_offset_ppb[bs], self.carrier_hz)
    }

    /// Largest pairwise frequency offset among `members`.
    pub fn max_pairwise_offset_hz(&self, members: &[usize]) -> f64 {
        let offsets: Vec<f64> = members.iter().map(|&b| self.offset_hz(b)).collect();
        let max = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = offsets.iter().copied().fold(f64::INFINITY, f64::min);
        if offsets.len() < 2 {
            0.0
        } else {
            max - min
        }
    }

    /// Largest pairwise timing offset among `members`.
    pub fn max_pairwise_time_us(&self, members: &[usize]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                worst = worst.max((self.time_offset_us[a] - self.time_offset_us[b]).abs());
            }
        }
        worst
    }
}

/// `ppb * carrier / 1e9`
pub fn offset_hz(ppb: f64, carrier_hz: f64) -> f64 {
    ppb * carrier_hz / 1e9
}

/// Residual estimator standard deviation at the given beacon SNR.
pub fn residual_std_hz(sigma0_hz: f64, beacon_snr_db: f64) -> f64 {
    sigma0_hz / 10f64.powf(beacon_snr_db / 20.0)
}

/// Slaves lock onto the master's beacon. Afterwards offsets are relative to
/// the master, which becomes 0, and each slave keeps only its estimation
/// residual. Timing becomes relative to the master as well.
pub fn master_slave_sync<R: Rng + ?Sized>(
    clocks: &ClockModel,
    beacon_snr_db: f64,
    sigma0_hz: f64,
    rng: &mut R,
) -> Result<ClockModel> {
    let m = clocks.master_bs;
    if m >= clocks.freq_offset_ppb.len() {
        return Err(Error::SyncFailed(format!("master BS {m} does not exist")));
    }
    if beacon_snr_db.is_nan() || beacon_snr_db == f64::NEG_INFINITY {
        return Err(Error::SyncFailed("no beacon received".into()));
    }
    let n = clocks.freq_offset_ppb.len();
    if n == 1 {
        return Ok(clocks.clone());
    }
    let sigma = residual_std_hz(sigma0_hz, beacon_snr_db);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::SyncFailed(e.to_string()))?;
    let t_master = clocks.time_offset_us[m];
    let mut out = clocks.clone();
    for b in 0..n {
        if b == m {
            out.freq_offset_ppb[b] = 0.0;
        } else {
            let residual_hz = if sigma == 0.0 { 0.0 } else { normal.sample(rng) };
            out.freq_offset_ppb[b] = residual_hz * 1e9 / clocks.carrier_hz;
        }
        out.time_offset_us[b] = clocks.time_offset_us[b] - t_master;
    }
    Ok(out)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// `(sinc^2(d), 1 - sinc^2(d))` with `d = delta_f / spacing`.
pub fn ici_factors(delta_f_hz: f64, subcarrier_spacing_hz: f64) -> (f64, f64) {
    let s = sinc(delta_f_hz / subcarrier_spacing_hz);
    let gain = s * s;
    (gain, 1.0 - gain)
}
