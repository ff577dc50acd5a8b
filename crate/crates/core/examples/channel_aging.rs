//! How fast reported CSI goes stale under static and mobile Doppler, and how
//! the coherence-adaptive feedback interval reacts.

use comp_sim::channel::{adapt_feedback_interval, coherence, correlation_coefficient, quantize_csi, ChannelProcess};
use comp_sim::ScenarioConfig;

fn main() -> comp_sim::Result<()> {
    let base = ScenarioConfig::default();
    for (label, doppler) in [("static", base.channel.doppler_static_hz), ("mobile", base.channel.doppler_mobile_hz)] {
        let mut cfg = base.clone();
        cfg.channel.doppler_hz = doppler;
        let a = correlation_coefficient(doppler, cfg.slot_duration_s);
        println!("{label}: doppler {doppler} Hz, per-slot correlation a = {a:.6}");

        let mut process = ChannelProcess::new(&cfg, 7)?;
        let first = quantize_csi(process.state(), cfg.channel.csi_bits, 0);
        let mut interval = cfg.channel.feedback_interval_slots;
        for slot in 1..=32u32 {
            process.advance();
            let now = quantize_csi(process.state(), cfg.channel.csi_bits, 0);
            let c = coherence(&first.h_hat, &now.h_hat)?;
            if slot.is_power_of_two() {
                interval = adapt_feedback_interval(c, interval, (1, 32), (0.95, 0.8));
                println!("  age {slot:>2} slots: coherence {c:.4}, adapted interval {interval}");
            }
        }
    }
    Ok(())
}
