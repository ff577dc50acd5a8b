//! Correlated Rayleigh block fading, CSI reports and coherence tracking.
//!
//! Small-scale coefficients follow a first-order Gauss-Markov process
//! `g[t] = a g[t-1] + sqrt(1 - a^2) w[t]` with `a = J0(2 pi f_d T)`, scaled by a
//! log-distance path gain. Innovations for slot `t` come from a dedicated
//! ChaCha stream, so a given `(seed, slot)` always yields the same matrices.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{Placement, ScenarioConfig};
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, CMatrix, CVector, RANK_TOL};

/// RNG stream tags. Slot innovations use `SLOT_STREAM_BASE + slot`.
pub mod streams {
    pub const PLACEMENT: u64 = 1;
    pub const SENSITIVITY: u64 = 2;
    pub const CLOCKS: u64 = 3;
    pub const SYNC: u64 = 4;
    pub const SLOT_STREAM_BASE: u64 = 1 << 32;
}

/// Deterministic ChaCha8 generator for one `(seed, stream)` pair.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// CSI clip range in multiples of the per-component standard deviation.
pub const CLIP_SIGMA: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub slot: u64,
    /// `h[u][b]` is the `N_r x N_t` matrix from BS `b` to user `u`.
    pub h: Vec<Vec<CMatrix>>,
    pub doppler_hz: f64,
    pub pathloss_db: Vec<Vec<f64>>,
    pub tx_power_w: f64,
    pub noise_var_w: f64,
}

impl ChannelState {
    pub fn n_users(&self) -> usize {
        self.h.len()
    }

    pub fn n_bs(&self) -> usize {
        self.h.first().map_or(0, |r| r.len())
    }

    /// Row 0 of user `u`'s channel, concatenated over `bs` in order.
    pub fn stacked(&self, u: usize, bs: &[usize]) -> CVector {
        stack_blocks(&self.h[u], bs)
    }

    /// Per-component standard deviation of `h[u][b]`.
    pub fn component_std(&self, u: usize, b: usize) -> f64 {
        (path_gain(self.pathloss_db[u][b]) / 2.0).sqrt()
    }
}

pub(crate) fn stack_blocks(blocks: &[CMatrix], bs: &[usize]) -> CVector {
    let nt = blocks.first().map_or(0, |m| m.ncols());
    let mut out = CVector::zeros(bs.len() * nt);
    for (k, &b) in bs.iter().enumerate() {
        for j in 0..nt {
            out[k * nt + j] = blocks[b][(0, j)];
        }
    }
    out
}

pub fn path_gain(pathloss_db: f64) -> f64 {
    10f64.powf(-pathloss_db / 10.0)
}

/// Lag-one correlation of the fading process.
pub fn correlation_coefficient(doppler_hz: f64, slot_duration_s: f64) -> f64 {
    libm::j0(2.0 * std::f64::consts::PI * doppler_hz * slot_duration_s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub bs_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
}

impl Layout {
    pub fn generate(config: &ScenarioConfig, seed: u64) -> Self {
        let n = config.n_bs;
        let isd = config.geometry.isd_m;
        let radius = match n {
            1 => 0.0,
            _ => isd / (2.0 * (std::f64::consts::PI / n as f64).sin()),
        };
        let bs_positions = (0..n)
            .map(|b| {
                let phi = std::f64::consts::TAU * b as f64 / n as f64 + std::f64::consts::FRAC_PI_2;
                [radius * phi.cos(), radius * phi.sin()]
            })
            .collect();

        let user_positions = match config.users.placement {
            Placement::Fixed => config.users.positions.clone(),
            Placement::Uniform => {
                let mut rng = rng_for(seed, streams::PLACEMENT);
                (0..config.users.count)
                    .map(|_| {
                        let r = config.users.radius_m * rng.random::<f64>().sqrt();
                        let phi = std::f64::consts::TAU * rng.random::<f64>();
                        [r * phi.cos(), r * phi.sin()]
                    })
                    .collect()
            }
        };
        Self {
            bs_positions,
            user_positions,
        }
    }

    pub fn pathloss_db(&self, config: &ScenarioConfig) -> Vec<Vec<f64>> {
        let reference = config.reference_loss_db();
        let n = config.geometry.pathloss_exponent;
        self.user_positions
            .iter()
            .map(|u| {
                self.bs_positions
                    .iter()
                    .map(|b| {
                        let d = ((u[0] - b[0]).powi(2) + (u[1] - b[1]).powi(2))
                            .sqrt()
                            .max(config.geometry.min_distance_m);
                        reference + 10.0 * n * d.log10()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Stateful fading process; advancing it slot by slot is equivalent to
/// calling [`generate_channel`] for each slot.
#[derive(Debug, Clone)]
pub struct ChannelProcess {
    seed: u64,
    a: f64,
    b: f64,
    n_r: usize,
    n_t: usize,
    amplitude: Vec<Vec<f64>>,
    small: Vec<Vec<CMatrix>>,
    state: ChannelState,
}

impl ChannelProcess {
    pub fn new(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        let layout = Layout::generate(config, seed);
        Self::with_pathloss(config, seed, layout.pathloss_db(config))
    }

    pub fn with_pathloss(config: &ScenarioConfig, seed: u64, pathloss_db: Vec<Vec<f64>>) -> Result<Self> {
        let (n_r, n_t) = (config.antennas.user, config.antennas.bs);
        if n_r == 0 || n_t == 0 {
            return Err(Error::config("antennas", "antenna counts must be positive"));
        }
        if pathloss_db.len() != config.users.count || pathloss_db.iter().any(|r| r.len() != config.n_bs) {
            return Err(Error::config("users.count", "path-loss table does not match the user/BS counts"));
        }
        let doppler_hz = config.channel.doppler_hz;
        let a = correlation_coefficient(doppler_hz, config.slot_duration_s);
        let b = (1.0 - a * a).max(0.0).sqrt();
        let amplitude: Vec<Vec<f64>> = pathloss_db
            .iter()
            .map(|row| row.iter().map(|&pl| path_gain(pl).sqrt()).collect())
            .collect();

        let mut rng = rng_for(seed, streams::SLOT_STREAM_BASE);
        let small: Vec<Vec<CMatrix>> = (0..config.users.count)
            .map(|_| (0..config.n_bs).map(|_| draw_cn(&mut rng, n_r, n_t)).collect())
            .collect();
        let state = ChannelState {
            slot: 0,
            h: scale(&small, &amplitude),
            doppler_hz,
            pathloss_db,
            tx_power_w: config.tx_power_w(),
            noise_var_w: config.noise_var_w(),
        };
        Ok(Self {
            seed,
            a,
            b,
            n_r,
            n_t,
            amplitude,
            small,
            state,
        })
    }

    pub fn state(&self) -> &ChannelState {
        &self.state
    }

    pub fn advance(&mut self) {
        let slot = self.state.slot + 1;
        let mut rng = rng_for(self.seed, streams::SLOT_STREAM_BASE + slot);
        for row in &mut self.small {
            for g in row.iter_mut() {
                let w = draw_cn(&mut rng, self.n_r, self.n_t);
                *g = g.map(|z| z * self.a) + w.map(|z| z * self.b);
            }
        }
        self.state.slot = slot;
        self.state.h = scale(&self.small, &self.amplitude);
    }
}

fn draw_cn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

fn scale(small: &[Vec<CMatrix>], amplitude: &[Vec<f64>]) -> Vec<Vec<CMatrix>> {
    small
        .iter()
        .zip(amplitude)
        .map(|(row, amp)| row.iter().zip(amp).map(|(g, &a)| g.map(|z| z * a)).collect())
        .collect()
}

/// True channel for `slot`. Deterministic in `(config, seed, slot)`.
pub fn generate_channel(config: &ScenarioConfig, rng_seed: u64, slot: u64) -> Result<ChannelState> {
    let mut process = ChannelProcess::new(config, rng_seed)?;
    for _ in 0..slot {
        process.advance();
    }
    Ok(process.state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiReport {
    pub user: usize,
    pub ri: usize,
    /// Index of the quantized coefficients in a canonical serialization.
    pub pmi: u64,
    /// Coarse SNR hint: 2 dB steps starting at -6 dB, clamped to 0..=15.
    pub cqi: u32,
    #[serde(skip)]
    pub h_hat: Vec<CMatrix>,
    pub quant_bits: u32,
    pub age_slots: u32,
    pub feedback_interval_slots: u32,
    /// Per-BS clip range `c` of the quantizer.
    pub clip: Vec<f64>,
    /// Components that fell outside `[-c, c]`.
    pub clipped: u32,
    /// Slot of the channel snapshot that was quantized.
    pub measured_slot: u64,
}

impl CsiReport {
    pub fn stacked(&self, bs: &[usize]) -> CVector {
        stack_blocks(&self.h_hat, bs)
    }
}

/// Mid-rise uniform quantizer over `[-c, c]` with `2^bits` levels.
/// Returns the reconstruction, the level index and whether it clipped.
pub fn quantize_component(x: f64, c: f64, bits: u32) -> (f64, u64, bool) {
    let levels = 2f64.powi(bits as i32);
    let delta = 2.0 * c / levels;
    let raw = ((x + c) / delta).floor();
    let clipped = x < -c || x > c;
    let k = raw.clamp(0.0, levels - 1.0);
    (-c + delta * (k + 0.5), k as u64, clipped)
}

pub fn quantize_csi(truth: &ChannelState, quant_bits: u32, user: usize) -> CsiReport {
    let bits = quant_bits.max(1);
    let mut clipped = 0u32;
    let mut pmi = 0u64;
    let radix = 1u64.checked_shl(bits).unwrap_or(0);
    let mut clip = Vec::with_capacity(truth.n_bs());
    let h_hat: Vec<CMatrix> = truth.h[user]
        .iter()
        .enumerate()
        .map(|(b, m)| {
            let c = CLIP_SIGMA * truth.component_std(user, b);
            clip.push(c);
            m.map(|z| {
                let (re, kr, cr) = quantize_component(z.re, c, bits);
                let (im, ki, ci) = quantize_component(z.im, c, bits);
                clipped += cr as u32 + ci as u32;
                pmi = pmi.wrapping_mul(radix).wrapping_add(kr);
                pmi = pmi.wrapping_mul(radix).wrapping_add(ki);
                Complex64::new(re, im)
            })
        })
        .collect();

    let all: Vec<usize> = (0..truth.n_bs()).collect();
    let n_r = h_hat.first().map_or(1, |m| m.nrows());
    let n_t = h_hat.first().map_or(1, |m| m.ncols());
    let stacked = CMatrix::from_fn(n_r, all.len() * n_t, |i, j| h_hat[j / n_t][(i, j % n_t)]);
    let ri = numerical_rank(&stacked, RANK_TOL).clamp(1, n_r.min(all.len() * n_t));
    let energy: f64 = stacked.iter().map(|z| z.norm_sqr()).sum::<f64>() / n_r as f64;
    let snr_db = 10.0 * (truth.tx_power_w * energy / truth.noise_var_w).log10();
    let cqi = ((snr_db + 6.0) / 2.0).floor().clamp(0.0, 15.0) as u32;

    CsiReport {
        user,
        ri,
        pmi,
        cqi,
        h_hat,
        quant_bits: bits,
        age_slots: 0,
        feedback_interval_slots: 1,
        clip,
        clipped,
        measured_slot: truth.slot,
    }
}

/// `Re<a, b> / (|a| |b|)` over the flattened matrices.
pub fn coherence(a: &[CMatrix], b: &[CMatrix]) -> Result<f64> {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        if x.shape() != y.shape() {
            return Err(Error::DegenerateInput("channel shapes differ".into()));
        }
        for (p, q) in x.iter().zip(y.iter()) {
            dot += (p.conj() * q).re;
            na += p.norm_sqr();
            nb += q.norm_sqr();
        }
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateInput("zero-norm channel".into()));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub fn estimate_coherence(h_t: &ChannelState, h_s: &ChannelState, user: usize) -> Result<f64> {
    coherence(&h_t.h[user], &h_s.h[user])
}

/// Doubles the interval at high coherence, halves it at low coherence.
pub fn adapt_feedback_interval(
    coherence: f64,
    current_interval: u32,
    bounds: (u32, u32),
    thresholds: (f64, f64),
) -> u32 {
    let (lo, hi) = bounds;
    let (high, low) = thresholds;
    let next = if coherence >= high {
        current_interval.saturating_mul(2)
    } else if coherence <= low {
        current_interval / 2
    } else {
        current_interval
    };
    next.clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn config_with_doppler(doppler: f64) -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        c.channel.doppler_hz = doppler;
        c.users.count = 2;
        c
    }

    /// Doppler that gives lag-one correlation `target`.
    fn doppler_for(target: f64, t: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 2.404_825_557_695_773);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if libm::j0(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi) / (2.0 * std::f64::consts::PI * t)
    }

    fn lag_one_correlation(doppler: f64) -> f64 {
        let config = config_with_doppler(doppler);
        let mut p = ChannelProcess::new(&config, 11).unwrap();
        let amp = p.amplitude[0][0];
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        let mut prev = p.state().h[0][0][(0, 0)] / amp;
        for _ in 0..10_000 {
            p.advance();
            let cur = p.state().h[0][0][(0, 0)] / amp;
            sxy += (prev.conj() * cur).re;
            sxx += prev.norm_sqr();
            syy += cur.norm_sqr();
            prev = cur;
        }
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn zero_doppler_is_static() {
        let config = config_with_doppler(0.0);
        let a = generate_channel(&config, 5, 0).unwrap();
        let b = generate_channel(&config, 5, 37).unwrap();
        assert_eq!(a.h, b.h);
    }

    #[test]
    fn dimensions_follow_config() {
        let config = config_with_doppler(10.0);
        let s = generate_channel(&config, 1, 3).unwrap();
        assert_eq!(s.n_users(), 2);
        assert_eq!(s.n_bs(), 3);
        for row in &s.h {
            for m in row {
                assert_eq!(m.shape(), (1, 4));
            }
        }
    }

    #[test]
    fn decorrelated_at_j0_zero() {
        let t = 1e-3;
        let d = 2.404_825_557_695_773 / (2.0 * std::f64::consts::PI * t);
        assert!(correlation_coefficient(d, t).abs() < 1e-12);
        assert!(lag_one_correlation(d).abs() < 0.05);
    }

    #[test]
    fn lag_one_correlation_matches_target() {
        let d = doppler_for(0.9, 1e-3);
        assert!((correlation_coefficient(d, 1e-3) - 0.9).abs() < 1e-9);
        let rho = lag_one_correlation(d);
        assert!((rho - 0.9).abs() < 0.03, "rho = {rho}");
    }

    #[test]
    fn process_matches_pure_generator() {
        let config = config_with_doppler(30.0);
        let mut p = ChannelProcess::new(&config, 99).unwrap();
        for _ in 0..7 {
            p.advance();
        }
        assert_eq!(p.state().h, generate_channel(&config, 99, 7).unwrap().h);
        assert_ne!(p.state().h, generate_channel(&config, 100, 7).unwrap().h);
    }

    #[test]
    fn near_lossless_at_32_bits() {
        let config = config_with_doppler(0.0);
        let s = generate_channel(&config, 3, 0).unwrap();
        let r = quantize_csi(&s, 32, 0);
        for b in 0..3 {
            let c = r.clip[b];
            for (x, y) in s.h[0][b].iter().zip(r.h_hat[b].iter()) {
                assert!((x.re - y.re).abs() < 1e-6 * c);
                assert!((x.im - y.im).abs() < 1e-6 * c);
            }
        }
    }

    #[test]
    fn one_bit_levels() {
        let config = config_with_doppler(0.0);
        let s = generate_channel(&config, 4, 0).unwrap();
        let r = quantize_csi(&s, 1, 1);
        for b in 0..3 {
            let c = r.clip[b];
            for z in r.h_hat[b].iter() {
                assert!((z.re.abs() - c / 2.0).abs() <= 1e-15 * c);
                assert!((z.im.abs() - c / 2.0).abs() <= 1e-15 * c);
            }
        }
    }

    #[test]
    fn four_bit_noise_matches_uniform_model() {
        let mut config = config_with_doppler(0.0);
        config.users.count = 1;
        let bits = 4;
        let (mut se, mut n) = (0.0, 0usize);
        for seed in 0..1250u64 {
            let s = generate_channel(&config, seed, 0).unwrap();
            let r = quantize_csi(&s, bits, 0);
            for b in 0..3 {
                let delta = 2.0 * r.clip[b] / 16.0;
                for (x, y) in s.h[0][b].iter().zip(r.h_hat[b].iter()) {
                    se += (x.re - y.re).powi(2) / (delta * delta / 12.0);
                    se += (x.im - y.im).powi(2) / (delta * delta / 12.0);
                    n += 2;
                }
            }
        }
        assert!(n >= 10_000);
        let ratio = se / n as f64;
        assert!((ratio - 1.0).abs() < 0.2, "normalized mse {ratio}");
    }

    #[test]
    fn reconstructions_lie_on_the_grid() {
        let config = config_with_doppler(0.0);
        let s = generate_channel(&config, 8, 0).unwrap();
        for bits in [1u32, 3, 6, 10] {
            let r = quantize_csi(&s, bits, 0);
            for b in 0..3 {
                let c = r.clip[b];
                let delta = 2.0 * c / 2f64.powi(bits as i32);
                for z in r.h_hat[b].iter() {
                    for v in [z.re, z.im] {
                        let k = (v + c) / delta - 0.5;
                        assert!((k - k.round()).abs() < 1e-9);
                        assert!(v.abs() <= c);
                    }
                }
            }
            assert_eq!(r.ri, 1);
        }
    }

    #[test]
    fn coherence_identities() {
        let config = config_with_doppler(0.0);
        let s = generate_channel(&config, 2, 0).unwrap();
        assert!((estimate_coherence(&s, &s, 0).unwrap() - 1.0).abs() < 1e-12);
        let mut neg = s.clone();
        for m in &mut neg.h[0] {
            *m = m.map(|z| -z);
        }
        assert!((estimate_coherence(&s, &neg, 0).unwrap() + 1.0).abs() < 1e-12);
        let mut zero = s.clone();
        for m in &mut zero.h[0] {
            m.fill(Complex64::new(0.0, 0.0));
        }
        assert!(matches!(estimate_coherence(&s, &zero, 0), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn coherence_of_two_vectors_matches_dot_product() {
        let a = [CMatrix::from_row_slice(1, 4, &[
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.2, 0.1),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.3, 0.3),
        ])];
        let b = [CMatrix::from_row_slice(1, 4, &[
            Complex64::new(0.8, 0.1),
            Complex64::new(0.4, -0.4),
            Complex64::new(0.1, -0.7),
            Complex64::new(-0.2, 0.5),
        ])];
        // Re{sum conj(a_i) b_i} by hand.
        let re = 1.0 * 0.8 + 0.5 * 0.1 + (-0.2 * 0.4 + 0.1 * -0.4) + (0.0 * 0.1 + -1.0 * -0.7) + (0.3 * -0.2 + 0.3 * 0.5);
        let na: f64 = 1.0 + 0.25 + 0.04 + 0.01 + 1.0 + 0.09 + 0.09;
        let nb: f64 = 0.64 + 0.01 + 0.16 + 0.16 + 0.01 + 0.49 + 0.04 + 0.25;
        let expected = re / (na.sqrt() * nb.sqrt());
        assert!((coherence(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn feedback_interval_rules() {
        let th = (0.95, 0.80);
        assert_eq!(adapt_feedback_interval(1.0, 4, (1, 32), th), 8);
        assert_eq!(adapt_feedback_interval(0.5, 4, (1, 32), th), 2);
        assert_eq!(adapt_feedback_interval(0.9, 4, (1, 32), th), 4);
        assert_eq!(adapt_feedback_interval(1.0, 32, (1, 32), th), 32);
        assert_eq!(adapt_feedback_interval(0.0, 1, (1, 32), th), 1);
    }

    #[test]
    fn quantization_mse_non_increasing_in_bits() {
        let config = config_with_doppler(0.0);
        let states: Vec<_> = (0..50).map(|s| generate_channel(&config, s, 0).unwrap()).collect();
        let mse = |bits| {
            states
                .iter()
                .map(|s| {
                    let r = quantize_csi(s, bits, 0);
                    s.h[0]
                        .iter()
                        .zip(&r.h_hat)
                        .map(|(x, y)| (x - y).iter().map(|z| z.norm_sqr()).sum::<f64>())
                        .sum::<f64>()
                })
                .sum::<f64>()
        };
        let values: Vec<f64> = (1..=12).map(mse).collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
    }

    proptest! {
        #[test]
        fn interval_stays_in_bounds(c in -1.0f64..=1.0, lo in 1u32..8, span in 0u32..40, pos in 0u32..40) {
            let hi = lo + span;
            let cur = lo + pos.min(span);
            let next = adapt_feedback_interval(c, cur, (lo, hi), (0.95, 0.8));
            prop_assert!(next >= lo && next <= hi);
        }

        #[test]
        fn coherence_symmetric_and_scale_invariant(seed in 0u64..500, s1 in 0.01f64..100.0, s2 in 0.01f64..100.0) {
            let config = config_with_doppler(50.0);
            let a = generate_channel(&config, seed, 0).unwrap();
            let b = generate_channel(&config, seed, 3).unwrap();
            let ab = coherence(&a.h[0], &b.h[0]).unwrap();
            let ba = coherence(&b.h[0], &a.h[0]).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            let sa: Vec<CMatrix> = a.h[0].iter().map(|m| m.map(|z| z * s1)).collect();
            let sb: Vec<CMatrix> = b.h[0].iter().map(|m| m.map(|z| z * s2)).collect();
            prop_assert!((coherence(&sa, &sb).unwrap() - ab).abs() < 1e-12);
        }

        #[test]
        fn quantization_error_bounded_inside_clip(x in -1.0f64..1.0, bits in 1u32..20) {
            let c = 1.0;
            let (q, _, clipped) = quantize_component(x, c, bits);
            prop_assert!(!clipped);
            prop_assert!((q - x).abs() <= c * 2f64.powi(1 - bits as i32));
        }
    }
}
