//! Mean JT throughput against the CSI feedback interval for a static and a
//! mobile Doppler (the `fig3b` preset on a few seeds).

use comp_sim::engine::sweeps::sweep_feedback;
use comp_sim::presets::{Preset, FIG3B_INTERVALS};
use comp_sim::ScenarioConfig;

fn main() -> comp_sim::Result<()> {
    let cfg = Preset::Fig3b.apply(&ScenarioConfig::default());
    let seeds: Vec<u64> = (1..=5).collect();
    let c = sweep_feedback(&cfg, &FIG3B_INTERVALS, &seeds)?;
    println!("interval  static_mbps ({} Hz)  mobile_mbps ({} Hz)", c.static_doppler_hz, c.mobile_doppler_hz);
    for i in 0..c.intervals.len() {
        println!("{:>8}  {:>18.1}  {:>18.1}", c.intervals[i], c.static_bps[i] / 1e6, c.mobile_bps[i] / 1e6);
    }
    Ok(())
}
