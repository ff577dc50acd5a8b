//! The time-slotted simulation loop.
//!
//! Each slot: true channel → CSI reports (periodic or coherence-adaptive) →
//! backhaul shares → cooperative ability and mode → scheduler → realized
//! SINR under ICI, I/Q quantization and inter-cluster interference →
//! delivery, queues and video playback → metrics.

mod metrics;
pub mod sweeps;

use std::collections::VecDeque;

use rand::Rng;

pub use metrics::{Aggregate, MetricsReport, SystemRow, TraceRow, UserAggregate};

use crate::backhaul::{backhaul_latency_contribution, csi_gbps, iq_gbps, BackhaulBudget, MAX_IQ_BITS};
use crate::channel::{adapt_feedback_interval, coherence, quantize_csi, rng_for, streams, ChannelProcess, CsiReport};
use crate::config::{Duplex, SchedulerKind, SharePolicy, TrafficKind, ScenarioConfig};
use crate::error::Result;
use crate::kqi::{kqi_loss, step_playback_media, KqiWeights, VideoSession};
use crate::linalg::{gain, CVector};
use crate::phy::{compute_sinr_linear, iq_quant_noise, to_db, Mode, SinrInputs};
use crate::scheduler::{
    evaluate_ability, schedule_slot_kpi, schedule_slot_kqi, ClusterDecision, SchedulerParams, SlotContext, UserQueue,
};
use crate::sync::{ici_factors, master_slave_sync, ClockModel};

/// What to keep beyond the aggregates.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub keep_traces: bool,
    /// Frequency offsets at which every scheduled stream's SINR is also
    /// evaluated, holding the plan and channel fixed.
    pub probe_offsets_hz: Vec<f64>,
}

/// Mean SINR of scheduled streams at each probe offset, per mode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OffsetProbe {
    pub offsets_hz: Vec<f64>,
    pub jt_sum_db: Vec<f64>,
    pub jt_count: u64,
    pub cscb_sum_db: Vec<f64>,
    pub cscb_count: u64,
}

impl OffsetProbe {
    pub fn jt_mean_db(&self) -> Vec<f64> {
        self.jt_sum_db.iter().map(|s| s / self.jt_count.max(1) as f64).collect()
    }

    pub fn cscb_mean_db(&self) -> Vec<f64> {
        self.cscb_sum_db.iter().map(|s| s / self.cscb_count.max(1) as f64).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub probe: Option<OffsetProbe>,
}

/// Runs `config.n_slots` slots and returns the full report with traces.
pub fn run(config: &ScenarioConfig) -> Result<MetricsReport> {
    Ok(run_with(
        config,
        &RunOptions {
            keep_traces: true,
            ..RunOptions::default()
        },
    )?
    .report)
}

/// Per-user static quantities derived from the config and seed.
struct Population {
    anchor: Vec<usize>,
    cluster_of_user: Vec<usize>,
    sensitivity: Vec<f64>,
    ladders: Vec<Vec<f64>>,
    file_size_bits: Vec<u64>,
}

impl Population {
    fn new(config: &ScenarioConfig, pathloss_db: &[Vec<f64>], clusters: &[Vec<usize>]) -> Self {
        let n = config.users.count;
        let anchor: Vec<usize> = pathloss_db
            .iter()
            .map(|row| {
                (0..row.len())
                    .min_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)))
                    .unwrap_or(0)
            })
            .collect();
        let cluster_of_user = anchor
            .iter()
            .map(|&b| clusters.iter().position(|c| c.contains(&b)).unwrap_or(0))
            .collect();
        let mut rng = rng_for(config.seed, streams::SENSITIVITY);
        let [lo, hi] = config.users.sensitivity_range;
        let sensitivity = (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect();
        let ladders: Vec<Vec<f64>> = (0..n).map(|u| config.ladder_for(u)).collect();
        let file_size_bits = ladders
            .iter()
            .map(|l| (config.video.duration_s * l[l.len() - 1]).round() as u64)
            .collect();
        Self {
            anchor,
            cluster_of_user,
            sensitivity,
            ladders,
            file_size_bits,
        }
    }
}

fn scheduler_params(config: &ScenarioConfig) -> SchedulerParams {
    SchedulerParams {
        v: config.scheduler.v,
        max_group: config.scheduler.max_group,
        corr_threshold: config.scheduler.corr_threshold,
        mode_threshold: config.scheduler.mode_threshold,
        mode_policy: config.scheduler.mode_policy,
        p_max_w: config.tx_power_w(),
        noise_var_w: config.noise_var_w(),
        symbol_rate_hz: config.occupied_bandwidth_hz(),
        sampling_hz: config.sampling_hz,
        slot_duration_s: config.slot_duration_s,
        n_t: config.antennas.bs,
        mcs: config.mcs.clone(),
        weights: KqiWeights {
            stall: config.video.stall_weight,
            quality: config.video.quality_weight,
        },
    }
}

fn clocks_for(config: &ScenarioConfig) -> Result<ClockModel> {
    if !config.sync.fixed_offsets_hz.is_empty() {
        return Ok(ClockModel::from_offsets_hz(&config.sync.fixed_offsets_hz, config.carrier_hz));
    }
    let mut rng = rng_for(config.seed, streams::CLOCKS);
    let clocks = ClockModel::draw(config, &mut rng);
    if config.sync.over_the_air {
        let mut rng = rng_for(config.seed, streams::SYNC);
        master_slave_sync(&clocks, config.sync.beacon_snr_db, config.sync.sigma0_hz, &mut rng)
    } else {
        Ok(clocks)
    }
}

/// Feedback bookkeeping for one user.
#[derive(Debug, Clone)]
struct FeedbackState {
    report: Option<CsiReport>,
    interval: u32,
    next_slot: u64,
}

/// Runs the loop with explicit output options.
pub fn run_with(config: &ScenarioConfig, opts: &RunOptions) -> Result<RunOutput> {
    config.validate()?;
    let n_users = config.users.count;
    let t = config.slot_duration_s;
    let clusters = config.clusters();
    let mut process = ChannelProcess::new(config, config.seed)?;
    let pop = Population::new(config, &process.state().pathloss_db, &clusters);
    let clocks = clocks_for(config)?;
    let params = scheduler_params(config);
    let video = config.traffic.kind == TrafficKind::Video;
    let nominal = config.nominal_level();
    let n_t = config.antennas.bs;
    let n_r = config.antennas.user;
    let implicit = config.channel.implicit_feedback || config.duplex == Duplex::Tdd;

    let mut sessions: Vec<VideoSession> = (0..n_users)
        .map(|u| {
            VideoSession::new(
                pop.file_size_bits[u],
                pop.ladders[u].len(),
                nominal,
                pop.sensitivity[u],
                config.video.initial_buffer_s,
                config.video.rebuffer_s,
                &pop.ladders[u],
            )
        })
        .collect();
    let mut queues: Vec<UserQueue> = (0..n_users)
        .map(|u| UserQueue {
            q_bits: 0.0,
            arrival_bps: if video {
                pop.ladders[u][nominal]
            } else {
                config.traffic.full_buffer_bps
            },
            priority: config.priority_of(u),
        })
        .collect();
    // Queued media as (bits, encoding level), oldest first.
    let mut segments: Vec<VecDeque<(f64, usize)>> = vec![VecDeque::new(); n_users];
    let mut feedback: Vec<FeedbackState> = (0..n_users)
        .map(|_| FeedbackState {
            report: None,
            interval: config.channel.feedback_interval_slots,
            next_slot: 0,
        })
        .collect();

    let mut traces: Vec<TraceRow> = Vec::with_capacity((config.n_slots as usize) * n_users);
    let mut system: Vec<SystemRow> = Vec::with_capacity(config.n_slots as usize);
    let mut probe = (!opts.probe_offsets_hz.is_empty()).then(|| OffsetProbe {
        offsets_hz: opts.probe_offsets_hz.clone(),
        jt_sum_db: vec![0.0; opts.probe_offsets_hz.len()],
        cscb_sum_db: vec![0.0; opts.probe_offsets_hz.len()],
        ..OffsetProbe::default()
    });
    let user_lists: Vec<Vec<usize>> = (0..clusters.len())
        .map(|c| (0..n_users).filter(|&u| pop.cluster_of_user[u] == c).collect())
        .collect();

    for slot in 0..config.n_slots {
        if slot > 0 {
            process.advance();
        }
        let truth = process.state();

        // CSI feedback.
        for (u, fb) in feedback.iter_mut().enumerate() {
            if slot >= fb.next_slot {
                let mut fresh = quantize_csi(truth, config.channel.csi_bits, u);
                if config.channel.adaptive_feedback {
                    if let Some(prev) = &fb.report {
                        let c = coherence(&prev.h_hat, &fresh.h_hat).map_err(|e| e.at_slot(slot))?;
                        fb.interval = adapt_feedback_interval(
                            c,
                            fb.interval,
                            (config.channel.interval_bounds[0], config.channel.interval_bounds[1]),
                            (config.channel.coherence_high, config.channel.coherence_low),
                        );
                    }
                }
                fresh.feedback_interval_slots = fb.interval;
                fb.next_slot = slot + fb.interval as u64;
                fb.report = Some(fresh);
            }
            let r = fb.report.as_mut().expect("report exists after first slot");
            r.age_slots = (slot - r.measured_slot) as u32;
        }
        let reports: Vec<CsiReport> = feedback.iter().map(|f| f.report.clone().expect("report")).collect();
        let csi_load: f64 = if implicit {
            0.0
        } else {
            feedback
                .iter()
                .map(|f| csi_gbps(1, config.n_bs, config.channel.csi_bits, n_t, n_r, f.interval, t))
                .sum()
        };

        // Backhaul shares.
        let budget = match config.backhaul.share_policy {
            SharePolicy::Static => BackhaulBudget::equal(config.backhaul.capacity_gbps, config.backhaul.latency_ms, config.n_bs),
            SharePolicy::Backlog => {
                let mut backlog = vec![0.0; config.n_bs];
                for u in 0..n_users {
                    backlog[pop.anchor[u]] += queues[u].q_bits;
                }
                BackhaulBudget::from_backlog(
                    config.backhaul.capacity_gbps,
                    config.backhaul.latency_ms,
                    &backlog,
                    config.backhaul.share_floor,
                )
            }
        };

        // Scheduling.
        let requirement = iq_gbps(config.scheduler.max_group, config.sampling_hz, MAX_IQ_BITS) + csi_load;
        let mut decisions: Vec<ClusterDecision> = Vec::with_capacity(clusters.len());
        for (c, members) in clusters.iter().enumerate() {
            let ability = evaluate_ability(&budget, members, n_t, config.tx_power_dbm, requirement);
            let ctx = SlotContext {
                reports: &reports,
                queues: &queues,
                sessions: video.then_some(sessions.as_slice()),
                ladders: &pop.ladders,
                nominal_level: nominal,
                anchor: &pop.anchor,
                cluster: members,
                users: &user_lists[c],
                budget: &budget,
                csi_load_gbps: csi_load,
                ability: &ability,
                params: &params,
            };
            decisions.push(match config.scheduler.kind {
                SchedulerKind::Kqi => schedule_slot_kqi(&ctx),
                SchedulerKind::Kpi => schedule_slot_kpi(&ctx),
            });
        }

        // Realization.
        let mut sinr_db: Vec<Option<f64>> = vec![None; n_users];
        let mut served_bits = vec![0.0; n_users];
        let mut latency: Vec<Option<f64>> = vec![None; n_users];
        let mut chosen_quality: Vec<Option<usize>> = vec![None; n_users];
        for (ci, d) in decisions.iter().enumerate() {
            if d.served.is_empty() {
                continue;
            }
            let pre = &d.precoder;
            let rows: Vec<CVector> = pre.users.iter().map(|&u| truth.stacked(u, &pre.bs)).collect();
            let quant = iq_quant_noise(&rows, pre, d.iq_bits.max(1));
            let external: Vec<f64> = pre
                .users
                .iter()
                .map(|&u| {
                    decisions
                        .iter()
                        .enumerate()
                        .filter(|&(cj, _)| cj != ci)
                        .map(|(_, o)| {
                            let h = truth.stacked(u, &o.precoder.bs);
                            o.precoder.w.iter().zip(&o.precoder.power).map(|(w, p)| gain(&h, w) * p).sum::<f64>()
                        })
                        .sum()
                })
                .collect();
            let inputs = SinrInputs {
                quant_noise: quant,
                external,
            };
            let offset = clocks.max_pairwise_offset_hz(&d.bs);
            let ici = ici_factors(offset, config.subcarrier_interval_hz);
            let timing_ok = clocks.max_pairwise_time_us(&d.bs) <= config.sync.cp_us;
            let penalty = if d.mode == Mode::Jt && !timing_ok {
                10f64.powf(config.sync.timing_penalty_db / 10.0)
            } else {
                1.0
            };
            let sinr = compute_sinr_linear(&rows, pre, ici, &inputs, truth.noise_var_w);

            if let Some(probe) = probe.as_mut() {
                for (k, &off) in probe.offsets_hz.clone().iter().enumerate() {
                    let values = compute_sinr_linear(&rows, pre, ici_factors(off, config.subcarrier_interval_hz), &inputs, truth.noise_var_w);
                    let sum: f64 = values.iter().map(|&x| to_db(x * penalty)).sum();
                    match d.mode {
                        Mode::Jt => probe.jt_sum_db[k] += sum,
                        Mode::Cscb => probe.cscb_sum_db[k] += sum,
                    }
                }
                match d.mode {
                    Mode::Jt => probe.jt_count += pre.users.len() as u64,
                    Mode::Cscb => probe.cscb_count += pre.users.len() as u64,
                }
            }

            for (i, s) in d.served.iter().enumerate() {
                let u = s.user;
                let db = to_db(sinr[i] * penalty);
                sinr_db[u] = Some(db);
                chosen_quality[u] = Some(s.quality_level);
                if let Some(m) = s.mcs {
                    if db >= config.mcs.threshold_db(m) {
                        served_bits[u] = (s.rate_bps * t).min(queues[u].q_bits).floor();
                    }
                }
                if served_bits[u] > 0.0 {
                    let bytes = match d.mode {
                        Mode::Jt => (config.sampling_hz * 2.0 * d.iq_bits as f64 * t / 8.0).ceil() as u64,
                        Mode::Cscb => (config.channel.csi_bits as u64 * 2 * (n_t * n_r * config.n_bs) as u64).div_ceil(8),
                    };
                    latency[u] = Some(backhaul_latency_contribution(&budget, pop.anchor[u], bytes) + t * 1e3);
                }
            }
        }

        // Queues, playback and KQI loss.
        let mut slot_loss = 0.0;
        for u in 0..n_users {
            let before = queues[u].q_bits;
            let arrivals = if video {
                if let Some(q) = chosen_quality[u] {
                    sessions[u].quality_level = q;
                }
                pop.ladders[u][sessions[u].quality_level] * t
            } else {
                config.traffic.full_buffer_bps * t
            };
            queues[u].q_bits = (before - served_bits[u]).max(0.0) + arrivals;
            queues[u].arrival_bps = arrivals / t;

            let (loss, played, buffer, stalls, quality) = if video {
                let media_s = drain_segments(&mut segments[u], served_bits[u], &pop.ladders[u]);
                segments[u].push_back((arrivals, sessions[u].quality_level));
                let prev = &sessions[u];
                let next = step_playback_media(prev, served_bits[u] as u64, media_s, t);
                let stalled = next.stall_count > prev.stall_count;
                let loss = kqi_loss(&next, stalled, next.quality_level, params.weights);
                let played = next.played_bits - prev.played_bits;
                sessions[u] = next;
                let s = &sessions[u];
                (loss, played, s.buffer_s, s.stall_count, s.quality_level)
            } else {
                (0.0, 0.0, 0.0, 0, nominal)
            };
            slot_loss += loss;
            traces.push(TraceRow {
                slot,
                user: u,
                scheduled: sinr_db[u].is_some(),
                sinr_db: sinr_db[u],
                rate_bps: served_bits[u] / t,
                served_bits: served_bits[u],
                queue_bits: queues[u].q_bits,
                buffer_s: buffer,
                stalls,
                quality,
                played_bits: played,
                kqi_loss: loss,
                latency_ms: latency[u],
            });
        }
        let mode = decisions
            .iter()
            .find(|d| !d.served.is_empty())
            .or(decisions.first())
            .map_or(Mode::Cscb, |d| d.mode);
        system.push(SystemRow {
            slot,
            backlog_bits: queues.iter().map(|q| q.q_bits).sum(),
            kqi_loss: slot_loss,
            served_bits: served_bits.iter().sum(),
            mode,
        });
    }

    let mut report = MetricsReport {
        seed: config.seed,
        slot_duration_s: t,
        engagement_window_slots: config.video.engagement_window_slots,
        traces,
        system,
        users: Vec::new(),
        aggregate: Aggregate::default(),
    };
    let (psnr, top, sizes) = recompute_inputs(config);
    let (users, aggregate) = report.recompute(&psnr, &top, &sizes);
    report.users = users;
    report.aggregate = aggregate;
    if !opts.keep_traces {
        report.traces = Vec::new();
    }
    Ok(RunOutput { report, probe })
}

/// Removes `bits` from the front of the queue, returning their playback time.
fn drain_segments(queue: &mut VecDeque<(f64, usize)>, mut bits: f64, ladder: &[f64]) -> f64 {
    let mut media_s = 0.0;
    while bits > 0.0 {
        let Some(front) = queue.front_mut() else { break };
        let take = front.0.min(bits);
        media_s += take / ladder[front.1];
        front.0 -= take;
        bits -= take;
        if front.0 <= 0.0 {
            queue.pop_front();
        }
    }
    media_s
}

/// Per-user file size, top bitrate and PSNR table needed by
/// [`MetricsReport::recompute`].
pub fn recompute_inputs(config: &ScenarioConfig) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = config.users.count;
    let ladders: Vec<Vec<f64>> = (0..n).map(|u| config.ladder_for(u)).collect();
    let top: Vec<f64> = ladders.iter().map(|l| l[l.len() - 1]).collect();
    let sizes = if config.traffic.kind == TrafficKind::Video {
        top.iter().map(|&r| (config.video.duration_s * r).round()).collect()
    } else {
        vec![0.0; n]
    };
    (config.video.psnr_db.clone(), top, sizes)
}
