//! Cell-edge throughput of forced JT and forced CS/CB as backhaul capacity
//! grows (the `fig3a` preset on a few seeds).

use comp_sim::engine::sweeps::sweep_backhaul;
use comp_sim::presets::{Preset, FIG3A_CAPACITIES_GBPS};
use comp_sim::ScenarioConfig;

fn main() -> comp_sim::Result<()> {
    let cfg = Preset::Fig3a.apply(&ScenarioConfig::default());
    let seeds: Vec<u64> = (1..=5).collect();
    let curve = sweep_backhaul(&cfg, &FIG3A_CAPACITIES_GBPS, &seeds)?;
    println!("capacity_gbps  jt_mbps  cscb_mbps");
    for i in 0..curve.capacities_gbps.len() {
        println!("{:>13}  {:>7.1}  {:>9.1}", curve.capacities_gbps[i], curve.jt_bps[i] / 1e6, curve.cscb_bps[i] / 1e6);
    }
    Ok(())
}
