//! Random three-user scheduling instances shared by the integration tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use comp_sim::backhaul::{iq_gbps, BackhaulBudget};
use comp_sim::channel::{quantize_csi, ChannelProcess, CsiReport};
use comp_sim::config::ModePolicy;
use comp_sim::kqi::{KqiWeights, VideoSession};
use comp_sim::phy::McsTable;
use comp_sim::scheduler::{evaluate_ability, CooperativeAbility, SchedulerParams, SlotContext, UserQueue};
use comp_sim::ScenarioConfig;

pub struct Instance {
    pub reports: Vec<CsiReport>,
    pub queues: Vec<UserQueue>,
    pub sessions: Vec<VideoSession>,
    pub ladders: Vec<Vec<f64>>,
    pub anchor: Vec<usize>,
    pub users: Vec<usize>,
    pub budget: BackhaulBudget,
    pub ability: CooperativeAbility,
    pub params: SchedulerParams,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng, seed: u64) -> Self {
        let mut cfg = ScenarioConfig::default();
        cfg.users.count = 3;
        let state = ChannelProcess::new(&cfg, seed).unwrap().state().clone();
        let ladder = vec![1e6, 2.5e6, 5e6, 8e6];
        let capacity = [0.5, 2.0, 240.0][rng.random_range(0..3)];
        let budget = BackhaulBudget::equal(capacity, 0.1, 3);
        let ability = evaluate_ability(&budget, &[0, 1, 2], 4, 20.0, iq_gbps(2, cfg.sampling_hz, 16));
        let policy = [ModePolicy::Jt, ModePolicy::Cscb, ModePolicy::Adaptive][rng.random_range(0..3)];
        let anchor: Vec<usize> = (0..3)
            .map(|u| {
                (0..3)
                    .min_by(|&a, &b| state.pathloss_db[u][a].total_cmp(&state.pathloss_db[u][b]))
                    .unwrap()
            })
            .collect();
        Self {
            reports: (0..3).map(|u| quantize_csi(&state, 8, u)).collect(),
            queues: (0..3)
                .map(|_| UserQueue {
                    q_bits: rng.random_range(1e3..2e5),
                    arrival_bps: 5e6,
                    priority: 1.0,
                })
                .collect(),
            sessions: (0..3)
                .map(|_| {
                    VideoSession::new(
                        1 << 40,
                        4,
                        rng.random_range(0..4),
                        rng.random_range(0.2..1.0),
                        rng.random_range(0.0..0.003),
                        0.5,
                        &ladder,
                    )
                })
                .collect(),
            ladders: vec![ladder; 3],
            anchor,
            users: vec![0, 1, 2],
            budget,
            ability,
            params: SchedulerParams {
                v: [0.0, 10.0, 1e3, 1e5, 1e7][rng.random_range(0..5)],
                max_group: 2,
                corr_threshold: 0.7,
                mode_threshold: 0.5,
                mode_policy: policy,
                p_max_w: cfg.tx_power_w(),
                noise_var_w: cfg.noise_var_w(),
                symbol_rate_hz: cfg.occupied_bandwidth_hz(),
                sampling_hz: cfg.sampling_hz,
                slot_duration_s: 1e-3,
                n_t: 4,
                mcs: McsTable::default(),
                weights: KqiWeights::default(),
            },
        }
    }

    pub fn ctx(&self) -> SlotContext<'_> {
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

