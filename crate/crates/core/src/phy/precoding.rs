use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Mode;
use crate::channel::CsiReport;
use crate::error::{Error, Result};
use crate::linalg::{has_full_row_rank, norm_sqr, vstack, CMatrix, CVector};

/// Beamforming vectors and stream powers for one cluster.
///
/// Every `w[i]` is stacked over the cluster BSs in `bs` order (`n_t` entries
/// per BS). CS/CB vectors are zero outside their serving BS block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precoder {
    pub mode: Mode,
    pub bs: Vec<usize>,
    pub n_t: usize,
    pub users: Vec<usize>,
    /// Serving BS per user; empty under JT.
    pub serving: Vec<usize>,
    #[serde(skip)]
    pub w: Vec<CVector>,
    pub power: Vec<f64>,
}

impl Precoder {
    pub fn empty(mode: Mode, bs: &[usize], n_t: usize) -> Self {
        Self {
            mode,
            bs: bs.to_vec(),
            n_t,
            users: Vec::new(),
            serving: Vec::new(),
            w: Vec::new(),
            power: Vec::new(),
        }
    }

    /// Transmit power radiated by each antenna, stacked like `w`.
    pub fn antenna_power(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.bs.len() * self.n_t];
        for (w, p) in self.w.iter().zip(&self.power) {
            for (a, z) in w.iter().enumerate() {
                out[a] += z.norm_sqr() * p;
            }
        }
        out
    }

    /// Transmit power of each cluster BS.
    pub fn bs_power(&self) -> Vec<f64> {
        self.antenna_power()
            .chunks(self.n_t.max(1))
            .map(|c| c.iter().sum())
            .collect()
    }

    /// Scales every stream by the same factor so that no BS exceeds `p_max_w`.
    pub fn enforce_per_bs(&mut self, p_max_w: f64) {
        let worst = self.bs_power().into_iter().fold(0.0, f64::max);
        if worst > p_max_w {
            let s = p_max_w / worst;
            for p in &mut self.power {
                *p *= s;
            }
        }
    }

    pub fn satisfies_power(&self, p_max_w: f64) -> bool {
        self.bs_power().iter().all(|&p| p <= p_max_w * (1.0 + 1e-9))
    }

    pub fn index_of(&self, user: usize) -> Option<usize> {
        self.users.iter().position(|&u| u == user)
    }
}

fn report_for(reports: &[CsiReport], user: usize) -> Result<&CsiReport> {
    reports
        .iter()
        .find(|r| r.user == user)
        .ok_or_else(|| Error::DegenerateInput(format!("no CSI report for user {user}")))
}

fn normalized(v: CVector) -> Option<CVector> {
    let n = norm_sqr(&v).sqrt();
    (n > 0.0 && n.is_finite()).then(|| v.unscale(n))
}

/// Zero-forcing over the stacked reported channels of `group`, with unit-norm
/// columns and equal stream power, scaled down to the per-BS limit.
pub fn jt_precoder(reports: &[CsiReport], group: &[usize], bs: &[usize], p_max_w: f64) -> Result<Precoder> {
    let first = report_for(reports, *group.first().ok_or_else(|| Error::DegenerateInput("empty group".into()))?)?;
    let n_t = first.h_hat.first().map_or(0, |m| m.ncols());
    let rows: Vec<CVector> = group
        .iter()
        .map(|&u| report_for(reports, u).map(|r| r.stacked(bs)))
        .collect::<Result<_>>()?;
    let h = vstack(&rows);
    if group.len() > h.ncols() || !has_full_row_rank(&h) {
        return Err(Error::PrecodingInfeasible(format!(
            "stacked channel of group {group:?} is rank deficient"
        )));
    }
    let hh = h.adjoint();
    let gram = &h * &hh;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::PrecodingInfeasible(format!("Gram matrix of group {group:?} is singular")))?;
    let w_all = hh * inv;
    let w: Vec<CVector> = (0..group.len())
        .map(|k| {
            normalized(w_all.column(k).into_owned())
                .ok_or_else(|| Error::PrecodingInfeasible("zero precoding column".into()))
        })
        .collect::<Result<_>>()?;
    let mut pre = Precoder {
        mode: Mode::Jt,
        bs: bs.to_vec(),
        n_t,
        users: group.to_vec(),
        serving: Vec::new(),
        power: vec![p_max_w * bs.len() as f64 / group.len() as f64; group.len()],
        w,
    };
    pre.enforce_per_bs(p_max_w);
    Ok(pre)
}

/// Serving-BS beam for one user, projected onto the null space of the victims'
/// reported channels from that BS, at full BS power.
pub fn cscb_beamformer(
    serving_report: &CsiReport,
    serving_bs: usize,
    victim_reports: &[&CsiReport],
    bs: &[usize],
    p_max_w: f64,
) -> Result<Precoder> {
    let n_t = serving_report.h_hat[serving_bs].ncols();
    if victim_reports.len() >= n_t {
        return Err(Error::InsufficientDof {
            victims: victim_reports.len(),
            antennas: n_t,
        });
    }
    let pos = bs
        .iter()
        .position(|&b| b == serving_bs)
        .ok_or_else(|| Error::DegenerateInput(format!("BS {serving_bs} is not in the cluster")))?;
    let row = |r: &CsiReport| CVector::from_iterator(n_t, r.h_hat[serving_bs].row(0).iter().copied());
    let target = row(serving_report).map(|z| z.conj());

    let direction = if victim_reports.is_empty() {
        target
    } else {
        let v = vstack(&victim_reports.iter().map(|r| row(r)).collect::<Vec<_>>());
        if !has_full_row_rank(&v) {
            return Err(Error::PrecodingInfeasible("victim channels are rank deficient".into()));
        }
        let vh = v.adjoint();
        let inv = (&v * &vh)
            .try_inverse()
            .ok_or_else(|| Error::PrecodingInfeasible("victim Gram matrix is singular".into()))?;
        let proj = CMatrix::identity(n_t, n_t) - &vh * inv * &v;
        proj * &target
    };
    let scale = norm_sqr(&row(serving_report)).sqrt();
    if norm_sqr(&direction).sqrt() <= 1e-12 * scale {
        return Err(Error::PrecodingInfeasible(format!(
            "user {} lies in the span of its victims",
            serving_report.user
        )));
    }
    let local = normalized(direction).expect("checked non-zero");
    let mut w = CVector::from_element(bs.len() * n_t, Complex64::new(0.0, 0.0));
    w.rows_mut(pos * n_t, n_t).copy_from(&local);
    Ok(Precoder {
        mode: Mode::Cscb,
        bs: bs.to_vec(),
        n_t,
        users: vec![serving_report.user],
        serving: vec![serving_bs],
        w: vec![w],
        power: vec![p_max_w],
    })
}

/// CS/CB plan: each user is served by its own BS while every other
/// co-scheduled user is a victim of that BS.
pub fn cscb_precoder(
    reports: &[CsiReport],
    group: &[usize],
    serving: &[usize],
    bs: &[usize],
    p_max_w: f64,
) -> Result<Precoder> {
    let n_t = reports.first().and_then(|r| r.h_hat.first()).map_or(0, |m| m.ncols());
    let mut out = Precoder::empty(Mode::Cscb, bs, n_t);
    for (i, (&u, &b)) in group.iter().zip(serving).enumerate() {
        if serving[..i].contains(&b) {
            return Err(Error::PrecodingInfeasible(format!("BS {b} would serve two users")));
        }
        let victims: Vec<&CsiReport> = group
            .iter()
            .filter(|&&v| v != u)
            .map(|&v| report_for(reports, v))
            .collect::<Result<_>>()?;
        let single = cscb_beamformer(report_for(reports, u)?, b, &victims, bs, p_max_w)?;
        out.users.push(u);
        out.serving.push(b);
        out.w.extend(single.w);
        out.power.extend(single.power);
    }
    out.enforce_per_bs(p_max_w);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gain;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn report(user: usize, blocks: Vec<Vec<Complex64>>) -> CsiReport {
        CsiReport {
            user,
            ri: 1,
            pmi: 0,
            cqi: 0,
            h_hat: blocks
                .into_iter()
                .map(|b| CMatrix::from_row_slice(1, b.len(), &b))
                .collect(),
            quant_bits: 32,
            age_slots: 0,
            feedback_interval_slots: 1,
            clip: vec![],
            clipped: 0,
            measured_slot: 0,
        }
    }

    fn random_report(rng: &mut ChaCha8Rng, user: usize, n_bs: usize, n_t: usize) -> CsiReport {
        let blocks = (0..n_bs)
            .map(|_| {
                (0..n_t)
                    .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect()
            })
            .collect();
        report(user, blocks)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_user_is_matched_filter() {
        let h = vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.1), c(0.3), Complex64::new(0.0, -1.0)];
        let r = vec![report(0, vec![h.clone()])];
        let p = jt_precoder(&r, &[0], &[0], 1.0).unwrap();
        let hv = CVector::from_vec(h);
        let mf = normalized(hv.map(|z| z.conj())).unwrap();
        for (a, b) in p.w[0].iter().zip(mf.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((p.power[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_users_get_matched_filters() {
        let r = vec![
            report(0, vec![vec![c(1.0), c(0.0), c(0.0), c(0.0)]]),
            report(1, vec![vec![c(0.0), c(0.0), c(2.0), c(0.0)]]),
        ];
        let p = jt_precoder(&r, &[0, 1], &[0], 1.0).unwrap();
        assert!((p.w[0][0] - c(1.0)).norm() < 1e-12);
        assert!((p.w[1][2] - c(1.0)).norm() < 1e-12);
        let h0 = r[0].stacked(&[0]);
        assert!(gain(&h0, &p.w[1]) == 0.0);
    }

    #[test]
    fn zf_nulls_two_users_two_bs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r: Vec<_> = (0..2).map(|u| random_report(&mut rng, u, 2, 4)).collect();
        let p = jt_precoder(&r, &[0, 1], &[0, 1], 0.1).unwrap();
        for (i, &u) in p.users.iter().enumerate() {
            let h = r[u].stacked(&[0, 1]);
            let signal = gain(&h, &p.w[i]);
            for (j, _) in p.users.iter().enumerate().filter(|&(j, _)| j != i) {
                assert!(gain(&h, &p.w[j]) < 1e-9 * signal);
            }
        }
        assert!(p.satisfies_power(0.1));
    }

    #[test]
    fn rank_deficient_group_rejected() {
        let h = vec![c(1.0), c(2.0), c(0.0), c(1.0)];
        let r = vec![report(0, vec![h.clone()]), report(1, vec![h])];
        assert!(matches!(jt_precoder(&r, &[0, 1], &[0], 1.0), Err(Error::PrecodingInfeasible(_))));
    }

    #[test]
    fn cscb_cases() {
        let serving = report(0, vec![vec![c(1.0), c(1.0), c(0.0), c(0.0)]]);
        let mf = cscb_beamformer(&serving, 0, &[], &[0], 1.0).unwrap();
        let orth = report(1, vec![vec![c(0.0), c(0.0), c(1.0), c(0.0)]]);
        let with_orth = cscb_beamformer(&serving, 0, &[&orth], &[0], 1.0).unwrap();
        for (a, b) in mf.w[0].iter().zip(with_orth.w[0].iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_report(&mut rng, 0, 1, 4);
        let v = random_report(&mut rng, 1, 1, 4);
        let p = cscb_beamformer(&s, 0, &[&v], &[0], 1.0).unwrap();
        let hv = v.stacked(&[0]);
        assert!(gain(&hv, &p.w[0]) < 1e-9 * gain(&s.stacked(&[0]), &p.w[0]));
        let vs: Vec<_> = (1..5).map(|u| random_report(&mut rng, u, 1, 4)).collect();
        let refs: Vec<&CsiReport> = vs.iter().collect();
        assert!(matches!(
            cscb_beamformer(&s, 0, &refs, &[0], 1.0),
            Err(Error::InsufficientDof { victims: 4, antennas: 4 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn power_never_exceeds_limit(seed in 0u64..10_000, k in 1usize..5, p_max in 0.01f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r: Vec<_> = (0..k).map(|u| random_report(&mut rng, u, 3, 4)).collect();
            let group: Vec<usize> = (0..k).collect();
            let p = jt_precoder(&r, &group, &[0, 1, 2], p_max).unwrap();
            prop_assert!(p.satisfies_power(p_max));
            let serving: Vec<usize> = (0..k.min(3)).collect();
            let q = cscb_precoder(&r, &group[..k.min(3)], &serving, &[0, 1, 2], p_max).unwrap();
            prop_assert!(q.satisfies_power(p_max));
        }
    }
}
