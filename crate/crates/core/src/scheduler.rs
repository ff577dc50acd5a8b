//! Per-slot cluster scheduling.
//!
//! Both schedulers search the same candidate set: a greedy group built from
//! queue priority and channel correlation, plus every group reachable from
//! it by swapping one member. The KQI scheduler maximizes
//! `sum_u Q_u b_u - V sum_u I_u` with `b_u` the playback seconds a slot
//! delivers and `I_u` the KQI loss; the KPI baseline maximizes predicted
//! deliverable bits with water-filling power.

use serde::{Deserialize, Serialize};

use crate::backhaul::{fit_iq_bits, iq_gbps, BackhaulBudget};
use crate::channel::CsiReport;
use crate::config::ModePolicy;
use crate::error::{Error, Result};
use crate::kqi::{kqi_loss, predicts_stall, KqiWeights, VideoSession};
use crate::linalg::{gain, inner, norm_sqr, CVector};
use crate::phy::{
    compute_sinr_linear, cscb_precoder, iq_quant_noise, jt_precoder, rate_from_sinr, to_db, water_filling, McsTable,
    Mode, Precoder, SinrInputs,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserQueue {
    pub q_bits: f64,
    pub arrival_bps: f64,
    pub priority: f64,
}

/// `Q' = max(Q - served, 0) + arrivals` for every user.
pub fn update_queues(queues: &[UserQueue], served_bits: &[f64], arrivals_bits: &[f64]) -> Vec<UserQueue> {
    queues
        .iter()
        .zip(served_bits)
        .zip(arrivals_bits)
        .map(|((q, &s), &a)| UserQueue {
            q_bits: (q.q_bits - s).max(0.0) + a,
            ..*q
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooperativeAbility {
    pub members: Vec<usize>,
    pub backhaul_share_gbps: Vec<f64>,
    pub n_antennas: Vec<usize>,
    pub tx_power_dbm: Vec<f64>,
    /// JT load the cluster must carry at full I/Q precision.
    pub requirement_gbps: f64,
    pub score: f64,
}

/// Score is the worst member's backhaul share relative to its equal part of
/// the full-precision JT requirement.
pub fn evaluate_ability(
    budget: &BackhaulBudget,
    members: &[usize],
    n_antennas: usize,
    tx_power_dbm: f64,
    requirement_gbps: f64,
) -> CooperativeAbility {
    let shares: Vec<f64> = members.iter().map(|&b| budget.share_gbps(b)).collect();
    let per_member = requirement_gbps / members.len().max(1) as f64;
    let worst = shares.iter().copied().fold(f64::INFINITY, f64::min);
    let score = if members.is_empty() {
        0.0
    } else if per_member > 0.0 {
        worst / per_member
    } else {
        f64::INFINITY
    };
    CooperativeAbility {
        members: members.to_vec(),
        backhaul_share_gbps: shares,
        n_antennas: vec![n_antennas; members.len()],
        tx_power_dbm: vec![tx_power_dbm; members.len()],
        requirement_gbps,
        score,
    }
}

/// JT at or above the threshold, CS/CB below it.
pub fn select_mode(ability: &CooperativeAbility, threshold: f64) -> Mode {
    if ability.score >= threshold {
        Mode::Jt
    } else {
        Mode::Cscb
    }
}

/// `|<a, b>| / (|a| |b|)`
pub fn channel_correlation(a: &CVector, b: &CVector) -> f64 {
    let d = (norm_sqr(a) * norm_sqr(b)).sqrt();
    if d == 0.0 {
        1.0
    } else {
        inner(a, b).norm() / d
    }
}

/// Greedy grouping: candidates in decreasing `priority * Q` order (ties by
/// id) join while the group is below `max_group` and their correlation with
/// every admitted user is under `corr_threshold`.
pub fn group_users(
    reports: &[CsiReport],
    queues: &[UserQueue],
    max_group: usize,
    corr_threshold: f64,
    bs: &[usize],
) -> Vec<usize> {
    let eligible: Vec<usize> = (0..queues.len()).collect();
    group_users_with(reports, queues, max_group, corr_threshold, bs, &eligible, None)
}

/// [`group_users`] restricted to `eligible` users. With `serving`, no two
/// admitted users may share a serving BS.
pub fn group_users_with(
    reports: &[CsiReport],
    queues: &[UserQueue],
    max_group: usize,
    corr_threshold: f64,
    bs: &[usize],
    eligible: &[usize],
    serving: Option<&[usize]>,
) -> Vec<usize> {
    let mut order: Vec<usize> = eligible.to_vec();
    let key = |u: usize| queues[u].priority * queues[u].q_bits;
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    let rows: Vec<Option<CVector>> = (0..reports.len())
        .map(|u| order.contains(&u).then(|| reports[u].stacked(bs)))
        .collect();
    let mut group: Vec<usize> = Vec::new();
    for u in order {
        if group.len() >= max_group {
            break;
        }
        if let Some(s) = serving {
            if group.iter().any(|&g| s[g] == s[u]) {
                continue;
            }
        }
        let hu = rows[u].as_ref().expect("eligible row");
        if group
            .iter()
            .all(|&g| channel_correlation(hu, rows[g].as_ref().expect("eligible row")) < corr_threshold)
        {
            group.push(u);
        }
    }
    group
}

/// Static parameters shared by every scheduling decision of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerParams {
    pub v: f64,
    pub max_group: usize,
    pub corr_threshold: f64,
    pub mode_threshold: f64,
    pub mode_policy: ModePolicy,
    pub p_max_w: f64,
    pub noise_var_w: f64,
    /// Modulation symbols per second across all active subcarriers.
    pub symbol_rate_hz: f64,
    pub sampling_hz: f64,
    pub slot_duration_s: f64,
    pub n_t: usize,
    pub mcs: McsTable,
    pub weights: KqiWeights,
}

/// Everything one cluster decision reads.
#[derive(Debug, Clone, Copy)]
pub struct SlotContext<'a> {
    /// Latest CSI per user, indexed by user id.
    pub reports: &'a [CsiReport],
    pub queues: &'a [UserQueue],
    /// Video sessions per user; `None` under full-buffer traffic.
    pub sessions: Option<&'a [VideoSession]>,
    pub ladders: &'a [Vec<f64>],
    /// Quality level assumed when there are no sessions.
    pub nominal_level: usize,
    /// Strongest BS per user, used as the CS/CB serving BS.
    pub anchor: &'a [usize],
    pub cluster: &'a [usize],
    /// Users attached to this cluster.
    pub users: &'a [usize],
    pub budget: &'a BackhaulBudget,
    pub csi_load_gbps: f64,
    pub ability: &'a CooperativeAbility,
    pub params: &'a SchedulerParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Candidate {
    pub mode: Mode,
    /// Sorted user ids.
    pub users: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServedUser {
    pub user: usize,
    /// `None` when no MCS is worth sending; the stream still radiates.
    pub mcs: Option<usize>,
    pub rate_bps: f64,
    pub quality_level: usize,
    pub predicted_sinr_db: f64,
    pub power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDecision {
    pub bs: Vec<usize>,
    pub mode: Mode,
    pub precoder: Precoder,
    /// I/Q sample width under JT; 0 under CS/CB.
    pub iq_bits: u32,
    pub served: Vec<ServedUser>,
    pub objective: f64,
    pub ability: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterPlan {
    pub clusters: Vec<ClusterDecision>,
}

impl ClusterPlan {
    pub fn served(&self) -> impl Iterator<Item = (&ClusterDecision, &ServedUser)> {
        self.clusters.iter().flat_map(|c| c.served.iter().map(move |s| (c, s)))
    }
}

impl ClusterDecision {
    pub fn idle(ctx: &SlotContext, mode: Mode) -> Self {
        Self {
            bs: ctx.cluster.to_vec(),
            mode,
            precoder: Precoder::empty(mode, ctx.cluster, ctx.params.n_t),
            iq_bits: 0,
            served: Vec::new(),
            objective: 0.0,
            ability: ctx.ability.score,
        }
    }
}

/// Backlogged users whose reported channel could reach the lowest MCS with
/// every cluster BS beamforming to them alone at full power.
fn eligible_users(ctx: &SlotContext) -> Vec<usize> {
    ctx.users
        .iter()
        .copied()
        .filter(|&u| ctx.queues[u].q_bits > 0.0 && reachable(ctx, u))
        .collect()
}

fn reachable(ctx: &SlotContext, u: usize) -> bool {
    let p = ctx.params;
    let Some(floor) = p.mcs.entries.first().map(|e| e.min_sinr_db) else {
        return false;
    };
    let amp: f64 = ctx
        .cluster
        .iter()
        .map(|&b| (p.p_max_w * norm_sqr(&ctx.reports[u].stacked(&[b]))).sqrt())
        .sum();
    to_db(amp * amp / p.noise_var_w) >= floor
}

/// Mode the policy allows this slot, before feasibility fallback.
pub fn policy_mode(ctx: &SlotContext) -> Mode {
    match ctx.params.mode_policy {
        ModePolicy::Jt => Mode::Jt,
        ModePolicy::Cscb => Mode::Cscb,
        ModePolicy::Adaptive => select_mode(ctx.ability, ctx.params.mode_threshold),
    }
}

fn jt_bits(ctx: &SlotContext, n: usize) -> u32 {
    fit_iq_bits(ctx.budget, n, ctx.params.sampling_hz, ctx.csi_load_gbps)
}

/// Greedy group and its single-swap neighbourhood for `mode`, deduplicated and
/// sorted. JT groups are trimmed until their I/Q load fits the backhaul.
pub fn candidate_groups(ctx: &SlotContext, mode: Mode) -> Vec<Candidate> {
    let eligible = eligible_users(ctx);
    if eligible.is_empty() {
        return Vec::new();
    }
    let p = ctx.params;
    let (max_group, serving) = match mode {
        Mode::Jt => (p.max_group.min(ctx.cluster.len() * p.n_t), None),
        Mode::Cscb => (p.max_group.min(ctx.cluster.len()).min(p.n_t), Some(ctx.anchor)),
    };
    let mut greedy = group_users_with(
        ctx.reports,
        ctx.queues,
        max_group,
        p.corr_threshold,
        ctx.cluster,
        &eligible,
        serving,
    );
    if mode == Mode::Jt {
        while !greedy.is_empty() && jt_bits(ctx, greedy.len()) == 0 {
            greedy.pop();
        }
        if greedy.is_empty() {
            return Vec::new();
        }
    }

    let mut out = vec![sorted(greedy.clone())];
    for i in 0..greedy.len() {
        for &j in &eligible {
            if greedy.contains(&j) {
                continue;
            }
            let mut g = greedy.clone();
            g[i] = j;
            if let Some(s) = serving {
                if g.iter().enumerate().any(|(k, &a)| g[..k].iter().any(|&b| s[a] == s[b])) {
                    continue;
                }
            }
            out.push(sorted(g));
        }
    }
    let pruned: Vec<Vec<usize>> = out.iter().filter_map(|g| prune(ctx, mode, g)).collect();
    out.extend(pruned);
    out.sort();
    out.dedup();
    out.into_iter().map(|users| Candidate { mode, users }).collect()
}

/// Repeatedly drops members whose equal-power predicted SINR misses the
/// lowest MCS. `None` when nothing is dropped or nobody is left.
fn prune(ctx: &SlotContext, mode: Mode, group: &[usize]) -> Option<Vec<usize>> {
    let floor = ctx.params.mcs.entries.first()?.min_sinr_db;
    let mut users = group.to_vec();
    loop {
        let cand = Candidate {
            mode,
            users: users.clone(),
        };
        let pred = predict(ctx, &cand, PowerPolicy::Equal).ok()?;
        let keep: Vec<usize> = users
            .iter()
            .zip(&pred.sinr)
            .filter(|&(_, &x)| to_db(x) >= floor)
            .map(|(&u, _)| u)
            .collect();
        if keep.len() == users.len() {
            break;
        }
        users = keep;
        if users.is_empty() {
            return None;
        }
    }
    (users.len() < group.len()).then_some(users)
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Precoder and predicted per-user SINR (linear) from the reported channels.
pub struct Prediction {
    pub precoder: Precoder,
    pub iq_bits: u32,
    pub sinr: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerPolicy {
    Equal,
    WaterFilling,
}

/// Builds the candidate's precoder and predicts SINR on the reported
/// channels, including I/Q quantization noise but not ICI.
pub fn predict(ctx: &SlotContext, cand: &Candidate, policy: PowerPolicy) -> Result<Prediction> {
    let p = ctx.params;
    let (mut precoder, iq_bits) = match cand.mode {
        Mode::Jt => {
            let bits = jt_bits(ctx, cand.users.len());
            if bits == 0 {
                return Err(Error::PrecodingInfeasible("JT does not fit the backhaul".into()));
            }
            (jt_precoder(ctx.reports, &cand.users, ctx.cluster, p.p_max_w)?, bits)
        }
        Mode::Cscb => {
            let serving: Vec<usize> = cand.users.iter().map(|&u| ctx.anchor[u]).collect();
            (cscb_precoder(ctx.reports, &cand.users, &serving, ctx.cluster, p.p_max_w)?, 0)
        }
    };
    let rows: Vec<CVector> = cand.users.iter().map(|&u| ctx.reports[u].stacked(ctx.cluster)).collect();
    let quant = |pre: &Precoder| iq_quant_noise(&rows, pre, iq_bits.max(1));

    if policy == PowerPolicy::WaterFilling && cand.mode == Mode::Jt {
        let q = quant(&precoder);
        let gains: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(i, h)| gain(h, &precoder.w[i]) / (p.noise_var_w + q[i]))
            .collect();
        if gains.iter().any(|&g| g > 0.0) {
            precoder.power = water_filling(&gains, p.p_max_w * ctx.cluster.len() as f64)?;
            precoder.enforce_per_bs(p.p_max_w);
        }
    }
    let inputs = SinrInputs {
        quant_noise: quant(&precoder),
        external: Vec::new(),
    };
    let sinr = compute_sinr_linear(&rows, &precoder, (1.0, 0.0), &inputs, p.noise_var_w);
    Ok(Prediction {
        precoder,
        iq_bits: if cand.mode == Mode::Jt { iq_bits } else { 0 },
        sinr,
    })
}

/// Best `(mcs, quality, value)` of one served user under the KQI objective.
/// Options are tried in order (no transmission, then MCS ascending, quality
/// ascending) and only a strictly larger value replaces the incumbent.
pub fn best_user_choice(ctx: &SlotContext, user: usize, sinr_db: f64, v: f64) -> (Option<usize>, usize, f64) {
    let p = ctx.params;
    let q_bits = ctx.queues[user].q_bits;
    let t = p.slot_duration_s;
    let ladder = &ctx.ladders[user];
    let current = current_level(ctx, user);
    let mut best = (None, current, idle_value(ctx, user, v));
    for (m, entry) in p.mcs.entries.iter().enumerate() {
        if entry.min_sinr_db > sinr_db {
            break;
        }
        let bits = (p.mcs.rate_bps(m, p.symbol_rate_hz) * t).min(q_bits);
        for q in levels(ctx) {
            let value = q_bits * bits / ladder[q] - v * loss(ctx, user, bits, q);
            if value > best.2 {
                best = (Some(m), q, value);
            }
        }
    }
    best
}

fn levels(ctx: &SlotContext) -> std::ops::Range<usize> {
    match ctx.sessions {
        Some(_) => 0..ctx.ladders[0].len(),
        None => ctx.nominal_level..ctx.nominal_level + 1,
    }
}

fn current_level(ctx: &SlotContext, user: usize) -> usize {
    ctx.sessions.map_or(ctx.nominal_level, |s| s[user].quality_level)
}

fn loss(ctx: &SlotContext, user: usize, bits: f64, q: usize) -> f64 {
    match ctx.sessions {
        None => 0.0,
        Some(s) => {
            let p = ctx.params;
            let stall = predicts_stall(&s[user], bits, p.slot_duration_s, &ctx.ladders[user], q);
            kqi_loss(&s[user], stall, q, p.weights)
        }
    }
}

/// Objective contribution of a user that receives nothing this slot.
pub fn idle_value(ctx: &SlotContext, user: usize, v: f64) -> f64 {
    -v * loss(ctx, user, 0.0, current_level(ctx, user))
}

struct Scored {
    cand: Candidate,
    pred: Prediction,
    choices: Vec<(Option<usize>, usize)>,
    objective: f64,
}

fn better(a: &Scored, b: &Scored) -> bool {
    a.objective > b.objective || (a.objective == b.objective && a.cand.users < b.cand.users)
}

fn score_kqi(ctx: &SlotContext, cand: Candidate, v: f64, base: f64) -> Option<Scored> {
    let pred = predict(ctx, &cand, PowerPolicy::Equal).ok()?;
    let mut objective = base;
    let mut choices = Vec::with_capacity(cand.users.len());
    for (i, &u) in cand.users.iter().enumerate() {
        let (m, q, value) = best_user_choice(ctx, u, to_db(pred.sinr[i]), v);
        objective += value - idle_value(ctx, u, v);
        choices.push((m, q));
    }
    Some(Scored {
        cand,
        pred,
        choices,
        objective,
    })
}

fn score_kpi(ctx: &SlotContext, cand: Candidate) -> Option<Scored> {
    let p = ctx.params;
    let pred = predict(ctx, &cand, PowerPolicy::WaterFilling).ok()?;
    let mut objective = 0.0;
    let mut choices = Vec::with_capacity(cand.users.len());
    for (i, &u) in cand.users.iter().enumerate() {
        let (m, rate) = rate_from_sinr(to_db(pred.sinr[i]), &p.mcs, p.symbol_rate_hz);
        objective += (rate * p.slot_duration_s).min(ctx.queues[u].q_bits);
        choices.push((m, ctx.nominal_level));
    }
    Some(Scored {
        cand,
        pred,
        choices,
        objective,
    })
}

fn decision(ctx: &SlotContext, s: Scored) -> ClusterDecision {
    let p = ctx.params;
    let served = s
        .cand
        .users
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let (mcs, quality_level) = s.choices[i];
            ServedUser {
                user: u,
                mcs,
                rate_bps: mcs.map_or(0.0, |m| p.mcs.rate_bps(m, p.symbol_rate_hz)),
                quality_level,
                predicted_sinr_db: to_db(s.pred.sinr[i]),
                power_w: s.pred.precoder.power[i],
            }
        })
        .collect();
    ClusterDecision {
        bs: ctx.cluster.to_vec(),
        mode: s.cand.mode,
        precoder: s.pred.precoder,
        iq_bits: s.pred.iq_bits,
        served,
        objective: s.objective,
        ability: ctx.ability.score,
    }
}

fn argmax(scored: impl Iterator<Item = Scored>) -> Option<Scored> {
    scored.fold(None, |best, s| match best {
        Some(b) if !better(&s, &b) => Some(b),
        _ => Some(s),
    })
}

/// KQI objective over an explicit candidate list; `None` when no candidate
/// is feasible.
pub fn schedule_kqi_over(ctx: &SlotContext, candidates: &[Candidate], v: f64) -> Option<ClusterDecision> {
    let base: f64 = ctx.users.iter().map(|&u| idle_value(ctx, u, v)).sum();
    argmax(candidates.iter().filter_map(|c| score_kqi(ctx, c.clone(), v, base))).map(|s| decision(ctx, s))
}

/// KPI objective over an explicit candidate list.
pub fn schedule_kpi_over(ctx: &SlotContext, candidates: &[Candidate]) -> Option<ClusterDecision> {
    argmax(candidates.iter().filter_map(|c| score_kpi(ctx, c.clone()))).map(|s| decision(ctx, s))
}

fn with_fallback(
    ctx: &SlotContext,
    mut pick: impl FnMut(&[Candidate]) -> Option<ClusterDecision>,
) -> ClusterDecision {
    let mode = policy_mode(ctx);
    if let Some(d) = pick(&candidate_groups(ctx, mode)) {
        return d;
    }
    if ctx.params.mode_policy == ModePolicy::Adaptive && mode == Mode::Jt {
        if let Some(d) = pick(&candidate_groups(ctx, Mode::Cscb)) {
            return d;
        }
    }
    ClusterDecision::idle(ctx, mode)
}

/// Drift-plus-penalty decision for one cluster.
pub fn schedule_slot_kqi(ctx: &SlotContext) -> ClusterDecision {
    let v = ctx.params.v;
    with_fallback(ctx, |c| schedule_kqi_over(ctx, c, v))
}

/// Sum-rate decision with water-filling power for one cluster.
pub fn schedule_slot_kpi(ctx: &SlotContext) -> ClusterDecision {
    with_fallback(ctx, |c| schedule_kpi_over(ctx, c))
}

/// Pure max-weight `sum Q b` decision; coincides with the KQI rule at `V = 0`.
pub fn schedule_slot_max_weight(ctx: &SlotContext) -> ClusterDecision {
    with_fallback(ctx, |c| schedule_kqi_over(ctx, c, 0.0))
}

/// Independent feasibility check of an emitted decision.
pub fn validate_decision(d: &ClusterDecision, budget: &BackhaulBudget, params: &SchedulerParams, csi_load_gbps: f64) -> Result<()> {
    let pre = &d.precoder;
    let antennas = d.bs.len() * params.n_t;
    match d.mode {
        Mode::Jt => {
            if pre.users.len() > antennas {
                return Err(Error::InsufficientDof {
                    victims: pre.users.len(),
                    antennas,
                });
            }
            if !pre.users.is_empty() {
                let load = iq_gbps(pre.users.len(), params.sampling_hz, d.iq_bits) + csi_load_gbps;
                if d.iq_bits == 0 || load > budget.capacity_gbps {
                    return Err(Error::PrecodingInfeasible(format!(
                        "JT load {load} Gb/s exceeds {} Gb/s",
                        budget.capacity_gbps
                    )));
                }
            }
        }
        Mode::Cscb => {
            let victims = pre.users.len().saturating_sub(1);
            if victims >= params.n_t && !pre.users.is_empty() {
                return Err(Error::InsufficientDof {
                    victims,
                    antennas: params.n_t,
                });
            }
            let mut seen = pre.serving.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != pre.serving.len() {
                return Err(Error::PrecodingInfeasible("a BS serves two CS/CB users".into()));
            }
            if csi_load_gbps > budget.capacity_gbps {
                return Err(Error::PrecodingInfeasible("CSI exchange exceeds the backhaul".into()));
            }
        }
    }
    if !pre.satisfies_power(params.p_max_w) {
        return Err(Error::PrecodingInfeasible(format!("per-BS power {:?} above limit", pre.bs_power())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{quantize_csi, ChannelProcess};
    use crate::config::ScenarioConfig;
    use num_complex::Complex64;

    pub(crate) fn params(v: f64, policy: ModePolicy) -> SchedulerParams {
        let cfg = ScenarioConfig::default();
        SchedulerParams {
            v,
            max_group: 4,
            corr_threshold: 0.7,
            mode_threshold: 0.5,
            mode_policy: policy,
            p_max_w: cfg.tx_power_w(),
            noise_var_w: cfg.noise_var_w(),
            symbol_rate_hz: 1200.0 * 15e3,
            sampling_hz: cfg.sampling_hz,
            slot_duration_s: 1e-3,
            n_t: 4,
            mcs: McsTable::default(),
            weights: KqiWeights::default(),
        }
    }

    fn flat_report(user: usize, blocks: Vec<[f64; 4]>) -> CsiReport {
        CsiReport {
            user,
            ri: 1,
            pmi: 0,
            cqi: 0,
            h_hat: blocks
                .into_iter()
                .map(|b| crate::linalg::CMatrix::from_row_slice(1, 4, &b.map(|x| Complex64::new(x, 0.0))))
                .collect(),
            quant_bits: 32,
            age_slots: 0,
            feedback_interval_slots: 1,
            clip: vec![],
            clipped: 0,
            measured_slot: 0,
        }
    }

    fn queue(q: f64, priority: f64) -> UserQueue {
        UserQueue {
            q_bits: q,
            arrival_bps: 0.0,
            priority,
        }
    }

    #[test]
    fn queue_update_rules() {
        let q = [queue(100.0, 1.0), queue(100.0, 1.0), queue(100.0, 1.0)];
        let out = update_queues(&q, &[100.0, 0.0, 500.0], &[0.0, 7.0, 3.0]);
        assert_eq!(out.iter().map(|x| x.q_bits).collect::<Vec<_>>(), vec![0.0, 107.0, 3.0]);
    }

    #[test]
    fn ability_and_mode() {
        let full = BackhaulBudget::equal(240.0, 0.0, 3);
        let req = iq_gbps(4, 30.725e6, 16);
        let a = evaluate_ability(&full, &[0, 1, 2], 4, 20.0, req);
        assert!(a.score >= 1.0);
        assert_eq!(select_mode(&a, 0.5), Mode::Jt);
        let none = BackhaulBudget::equal(0.0, 0.0, 3);
        let z = evaluate_ability(&none, &[0, 1, 2], 4, 20.0, req);
        assert_eq!(z.score, 0.0);
        assert_eq!(select_mode(&z, 0.5), Mode::Cscb);
        let half = BackhaulBudget::equal(req / 2.0, 0.0, 3);
        let h = evaluate_ability(&half, &[0, 1, 2], 4, 20.0, req);
        assert!((h.score - 0.5).abs() < 1e-12);
        assert_eq!(select_mode(&h, 0.5), Mode::Jt);
    }

    #[test]
    fn identical_channels_keep_higher_priority() {
        let r = vec![flat_report(0, vec![[1.0, 0.5, 0.0, 0.0]]), flat_report(1, vec![[1.0, 0.5, 0.0, 0.0]])];
        let q = [queue(10.0, 1.0), queue(10.0, 2.0)];
        assert_eq!(group_users(&r, &q, 4, 0.7, &[0]), vec![1]);
    }

    #[test]
    fn orthogonal_users_all_admitted() {
        let r: Vec<_> = (0..4)
            .map(|u| {
                let mut b = [0.0; 4];
                b[u] = 1.0;
                flat_report(u, vec![b])
            })
            .collect();
        let q = [queue(1.0, 1.0), queue(4.0, 1.0), queue(2.0, 1.0), queue(3.0, 1.0)];
        assert_eq!(group_users(&r, &q, 4, 0.7, &[0]), vec![1, 3, 2, 0]);
    }

    /// Stepwise replay of the greedy admission rule.
    #[test]
    fn greedy_matches_replay() {
        let mut cfg = ScenarioConfig::default();
        cfg.users.count = 5;
        for seed in 0..30 {
            let s = ChannelProcess::new(&cfg, seed).unwrap().state().clone();
            let r: Vec<_> = (0..5).map(|u| quantize_csi(&s, 10, u)).collect();
            let q: Vec<_> = (0..5).map(|u| queue(((seed + 3 * u as u64) % 7) as f64, 1.0 + (u % 2) as f64)).collect();
            let bs = [0, 1, 2];
            let got = group_users(&r, &q, 4, 0.5, &bs);

            let mut order: Vec<usize> = (0..5).collect();
            order.sort_by(|&a, &b| {
                (q[b].priority * q[b].q_bits)
                    .partial_cmp(&(q[a].priority * q[a].q_bits))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut expected = Vec::new();
            for u in order {
                if expected.len() == 4 {
                    break;
                }
                let hu = r[u].stacked(&bs);
                let ok = expected.iter().all(|&g: &usize| {
                    let hg = r[g].stacked(&bs);
                    let num: Complex64 = hu.iter().zip(hg.iter()).map(|(a, b)| a.conj() * b).sum();
                    let den = (hu.iter().map(|z| z.norm_sqr()).sum::<f64>() * hg.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
                    num.norm() / den < 0.5
                });
                if ok {
                    expected.push(u);
                }
            }
            assert_eq!(got, expected);
        }
    }

    struct Fixture {
        reports: Vec<CsiReport>,
        queues: Vec<UserQueue>,
        sessions: Vec<VideoSession>,
        ladders: Vec<Vec<f64>>,
        anchor: Vec<usize>,
        users: Vec<usize>,
        budget: BackhaulBudget,
        ability: CooperativeAbility,
        params: SchedulerParams,
    }

    impl Fixture {
        fn new(seed: u64, n: usize, v: f64) -> Self {
            let mut cfg = ScenarioConfig::default();
            cfg.users.count = n;
            let s = ChannelProcess::new(&cfg, seed).unwrap().state().clone();
            let ladder = vec![1e6, 2.5e6, 5e6, 8e6];
            let budget = BackhaulBudget::equal(240.0, 0.1, 3);
            let ability = evaluate_ability(&budget, &[0, 1, 2], 4, 20.0, iq_gbps(4, cfg.sampling_hz, 16));
            Self {
                reports: (0..n).map(|u| quantize_csi(&s, 8, u)).collect(),
                queues: (0..n).map(|u| queue(2000.0 + 3000.0 * ((seed as usize + u) % 4) as f64, 1.0)).collect(),
                sessions: (0..n)
                    .map(|u| VideoSession::new(1 << 40, 4, (seed as usize + u) % 4, 0.3 + 0.1 * u as f64, 0.002 * (u % 2) as f64, 0.5, &ladder))
                    .collect(),
                ladders: vec![ladder; n],
                anchor: (0..n).map(|u| u % 3).collect(),
                users: (0..n).collect(),
                budget,
                ability,
                params: params(v, ModePolicy::Jt),
            }
        }

        fn ctx(&self) -> SlotContext<'_> {
            SlotContext {
                reports: &self.reports,
                queues: &self.queues,
                sessions: Some(&self.sessions),
                ladders: &self.ladders,
                nominal_level: 3,
                anchor: &self.anchor,
                cluster: &[0, 1, 2],
                users: &self.users,
                budget: &self.budget,
                csi_load_gbps: 0.0,
                ability: &self.ability,
                params: &self.params,
            }
        }
    }

    /// Exhaustive `sum Q b` over candidates and per-user options.
    fn max_weight_oracle(ctx: &SlotContext, cands: &[Candidate]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for c in cands {
            let Ok(pred) = predict(ctx, c, PowerPolicy::Equal) else { continue };
            let mut total = 0.0;
            for (i, &u) in c.users.iter().enumerate() {
                let db = to_db(pred.sinr[i]);
                let mut user_best: f64 = 0.0;
                for (m, e) in ctx.params.mcs.entries.iter().enumerate() {
                    if e.min_sinr_db <= db {
                        let bits = (ctx.params.mcs.rate_bps(m, ctx.params.symbol_rate_hz) * ctx.params.slot_duration_s)
                            .min(ctx.queues[u].q_bits);
                        for q in 0..4 {
                            user_best = user_best.max(ctx.queues[u].q_bits * bits / ctx.ladders[u][q]);
                        }
                    }
                }
                total += user_best;
            }
            best = best.max(total);
        }
        best
    }

    #[test]
    fn zero_v_is_max_weight() {
        for seed in 0..20 {
            let f = Fixture::new(seed, 4, 0.0);
            let ctx = f.ctx();
            let cands = candidate_groups(&ctx, Mode::Jt);
            let d = schedule_kqi_over(&ctx, &cands, 0.0).unwrap();
            let oracle = max_weight_oracle(&ctx, &cands);
            assert!((d.objective - oracle).abs() <= 1e-9 * oracle.abs().max(1.0), "seed {seed}");
            assert_eq!(d, schedule_slot_max_weight(&ctx));
        }
    }

    #[test]
    fn decisions_are_feasible() {
        for seed in 0..10 {
            let f = Fixture::new(seed, 5, 100.0);
            let ctx = f.ctx();
            for d in [schedule_slot_kqi(&ctx), schedule_slot_kpi(&ctx)] {
                validate_decision(&d, &f.budget, &f.params, 0.0).unwrap();
                assert!(d.served.len() <= f.params.max_group);
                let mut users: Vec<_> = d.served.iter().map(|s| s.user).collect();
                users.dedup();
                assert_eq!(users.len(), d.served.len());
            }
        }
    }

    #[test]
    fn large_v_prefers_top_quality() {
        let mut f = Fixture::new(3, 3, 1e9);
        for s in &mut f.sessions {
            s.buffer_s = 10.0;
        }
        let ctx = f.ctx();
        let d = schedule_slot_kqi(&ctx);
        assert!(!d.served.is_empty());
        assert!(d.served.iter().all(|s| s.quality_level == 3));
    }

    #[test]
    fn empty_queues_idle() {
        let mut f = Fixture::new(1, 3, 10.0);
        for q in &mut f.queues {
            q.q_bits = 0.0;
        }
        let d = schedule_slot_kqi(&f.ctx());
        assert!(d.served.is_empty());
        assert!(d.precoder.users.is_empty());
    }
}
