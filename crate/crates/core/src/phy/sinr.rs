use super::{Mode, Precoder};
use crate::backhaul::iq_noise_var;
use crate::channel::ChannelState;
use crate::linalg::{gain, CVector};

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Per-user inputs beyond the precoder itself.
#[derive(Debug, Clone, Default)]
pub struct SinrInputs {
    /// Received I/Q quantization noise per plan user.
    pub quant_noise: Vec<f64>,
    /// Interference from outside the cluster per plan user.
    pub external: Vec<f64>,
}

/// Linear SINR of every plan user given its stacked channel rows.
///
/// `SINR = g S / (sum_{v != u} |h w_v|^2 p_v + i S_x + q + n + ext)` where `S_x`
/// is the total power received from all cluster streams. CS/CB ignores the
/// ICI factors.
pub fn compute_sinr_linear(
    rows: &[CVector],
    plan: &Precoder,
    ici: (f64, f64),
    inputs: &SinrInputs,
    noise_var: f64,
) -> Vec<f64> {
    let (g, i_f) = match plan.mode {
        Mode::Jt => ici,
        Mode::Cscb => (1.0, 0.0),
    };
    rows.iter()
        .enumerate()
        .map(|(i, h)| {
            let rx: Vec<f64> = plan
                .w
                .iter()
                .zip(&plan.power)
                .map(|(w, p)| gain(h, w) * p)
                .collect();
            let signal = rx[i];
            let cross: f64 = rx.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, x)| x).sum();
            let total: f64 = rx.iter().sum();
            let q = inputs.quant_noise.get(i).copied().unwrap_or(0.0);
            let ext = inputs.external.get(i).copied().unwrap_or(0.0);
            let num = g * signal;
            if num == 0.0 {
                return 0.0;
            }
            num / (cross + i_f * total + q + noise_var + ext)
        })
        .collect()
}

/// SINR in dB of every plan user over the true channel.
pub fn compute_sinr(
    truth: &ChannelState,
    plan: &Precoder,
    ici: (f64, f64),
    quant_noise_var: &[f64],
    noise_var: f64,
) -> Vec<f64> {
    let rows: Vec<CVector> = plan.users.iter().map(|&u| truth.stacked(u, &plan.bs)).collect();
    let inputs = SinrInputs {
        quant_noise: quant_noise_var.to_vec(),
        external: Vec::new(),
    };
    compute_sinr_linear(&rows, plan, ici, &inputs, noise_var)
        .into_iter()
        .map(to_db)
        .collect()
}

/// Received I/Q quantization noise per row under JT; zero under CS/CB,
/// which carries no I/Q over the backhaul.
pub fn iq_quant_noise(rows: &[CVector], plan: &Precoder, iq_bits: u32) -> Vec<f64> {
    if plan.mode == Mode::Cscb || plan.users.is_empty() {
        return vec![0.0; rows.len()];
    }
    let per_antenna: Vec<f64> = plan
        .antenna_power()
        .into_iter()
        .map(|p| iq_noise_var(p, iq_bits))
        .collect();
    rows.iter()
        .map(|h| h.iter().zip(&per_antenna).map(|(z, v)| z.norm_sqr() * v).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{quantize_csi, ChannelProcess};
    use crate::config::ScenarioConfig;
    use crate::phy::{cscb_precoder, jt_precoder};
    use crate::sync::ici_factors;

    fn setup(users: usize, seed: u64) -> (ChannelState, Vec<crate::channel::CsiReport>) {
        let mut cfg = ScenarioConfig::default();
        cfg.users.count = users;
        cfg.geometry.isd_m = 40.0;
        cfg.users.radius_m = 30.0;
        let p = ChannelProcess::new(&cfg, seed).unwrap();
        let s = p.state().clone();
        let r = (0..users).map(|u| quantize_csi(&s, 52, u)).collect();
        (s, r)
    }

    #[test]
    fn perfect_csi_zf_is_noise_limited() {
        let (s, r) = setup(3, 1);
        let plan = jt_precoder(&r, &[0, 1, 2], &[0, 1, 2], s.tx_power_w).unwrap();
        let sinr = compute_sinr(&s, &plan, (1.0, 0.0), &[0.0; 3], s.noise_var_w);
        for (i, &u) in plan.users.iter().enumerate() {
            let h = s.stacked(u, &plan.bs);
            let expected = to_db(gain(&h, &plan.w[i]) * plan.power[i] / s.noise_var_w);
            assert!((sinr[i] - expected).abs() < 1e-6, "{} vs {}", sinr[i], expected);
        }
    }

    #[test]
    fn full_cfo_kills_jt() {
        let (s, r) = setup(2, 2);
        let plan = jt_precoder(&r, &[0, 1], &[0, 1, 2], s.tx_power_w).unwrap();
        let sinr = compute_sinr(&s, &plan, ici_factors(15e3, 15e3), &[0.0; 2], s.noise_var_w);
        assert!(sinr.iter().all(|&x| x == f64::NEG_INFINITY));
    }

    #[test]
    fn cscb_ignores_cfo_exactly() {
        let (s, r) = setup(3, 3);
        let plan = cscb_precoder(&r, &[0, 1, 2], &[0, 1, 2], &[0, 1, 2], s.tx_power_w).unwrap();
        let a = compute_sinr(&s, &plan, (1.0, 0.0), &[0.0; 3], s.noise_var_w);
        let b = compute_sinr(&s, &plan, ici_factors(262.5, 15e3), &[0.0; 3], s.noise_var_w);
        assert_eq!(a, b);
    }

    /// Independent evaluation of the SINR expression with explicit loops.
    fn brute_force(s: &ChannelState, plan: &Precoder, ici: (f64, f64), q: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        for (i, &u) in plan.users.iter().enumerate() {
            let mut powers = Vec::new();
            for (j, _) in plan.users.iter().enumerate() {
                let mut acc = num_complex::Complex64::new(0.0, 0.0);
                for (k, &b) in plan.bs.iter().enumerate() {
                    for a in 0..plan.n_t {
                        acc += s.h[u][b][(0, a)] * plan.w[j][k * plan.n_t + a];
                    }
                }
                powers.push(acc.norm_sqr() * plan.power[j]);
            }
            let total: f64 = powers.iter().sum();
            let cross = total - powers[i];
            out.push(10.0 * (ici.0 * powers[i] / (cross + ici.1 * total + q[i] + s.noise_var_w)).log10());
        }
        out
    }

    #[test]
    fn four_bit_csi_matches_brute_force() {
        let (s, _) = setup(3, 4);
        let r: Vec<_> = (0..3).map(|u| quantize_csi(&s, 4, u)).collect();
        let plan = jt_precoder(&r, &[0, 1, 2], &[0, 1, 2], s.tx_power_w).unwrap();
        let rows: Vec<CVector> = plan.users.iter().map(|&u| s.stacked(u, &plan.bs)).collect();
        let q = iq_quant_noise(&rows, &plan, 6);
        let ici = ici_factors(140.0, 15e3);
        let fast = compute_sinr(&s, &plan, ici, &q, s.noise_var_w);
        let slow = brute_force(&s, &plan, ici, &q);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn jt_sinr_non_increasing_in_offset() {
        let (s, r) = setup(4, 5);
        let plan = jt_precoder(&r, &[0, 1, 2, 3], &[0, 1, 2], s.tx_power_w).unwrap();
        let mut prev = vec![f64::INFINITY; 4];
        for off in [0.0, 35.0, 70.0, 140.0, 262.5, 1000.0, 7000.0] {
            let cur = compute_sinr(&s, &plan, ici_factors(off, 15e3), &[0.0; 4], s.noise_var_w);
            for (a, b) in cur.iter().zip(&prev) {
                assert!(a <= b);
            }
            prev = cur;
        }
    }
}
