//! I/Q resolution a JT group can afford as backhaul capacity grows, versus the
//! much smaller CSI exchange that CS/CB needs.

use comp_sim::backhaul::{backhaul_latency_contribution, csi_gbps, fit_iq_bits, iq_gbps, BackhaulBudget};
use comp_sim::ScenarioConfig;

fn main() {
    let cfg = ScenarioConfig::default();
    let csi = csi_gbps(
        cfg.users.count,
        cfg.n_bs,
        cfg.channel.csi_bits,
        cfg.antennas.bs,
        cfg.antennas.user,
        cfg.channel.feedback_interval_slots,
        cfg.slot_duration_s,
    );
    println!("CSI exchange for {} users: {csi:.4} Gb/s", cfg.users.count);
    println!("capacity_gbps  iq_bits(1 user)  iq_bits(4 users)  load(4 users)");
    for cap in [0.1, 0.5, 1.0, 2.0, 4.0, 80.0, 240.0] {
        let budget = BackhaulBudget::equal(cap, cfg.backhaul.latency_ms, cfg.n_bs);
        let one = fit_iq_bits(&budget, 1, cfg.sampling_hz, csi);
        let four = fit_iq_bits(&budget, 4, cfg.sampling_hz, csi);
        println!("{cap:>13}  {one:>15}  {four:>16}  {:>10.3} Gb/s", iq_gbps(4, cfg.sampling_hz, four));
    }

    let budget = BackhaulBudget::from_backlog(10.0, cfg.backhaul.latency_ms, &[8e6, 1e6, 1e6], 0.1);
    println!("\nbacklog-weighted shares: {:?}", (0..3).map(|b| budget.share_gbps(b)).collect::<Vec<_>>());
    for b in 0..3 {
        println!("  1 MB over BS {b}: {:.3} ms", backhaul_latency_contribution(&budget, b, 1_000_000));
    }
}
