//! Mean SINR of scheduled streams against the inter-BS frequency offset at
//! 15 kHz subcarrier spacing (the `fig3c` preset on a few seeds).

use comp_sim::engine::sweeps::sweep_offset;
use comp_sim::presets::{Preset, FIG3C_OFFSETS_HZ};
use comp_sim::ScenarioConfig;

fn main() -> comp_sim::Result<()> {
    let cfg = Preset::Fig3c.apply(&ScenarioConfig::default());
    let seeds: Vec<u64> = (1..=3).collect();
    let c = sweep_offset(&cfg, &FIG3C_OFFSETS_HZ, &seeds)?;
    println!("offset_hz  jt_db  cscb_db");
    for i in 0..c.offsets_hz.len() {
        println!("{:>9}  {:.3}  {:.3}", c.offsets_hz[i], c.jt_db[i], c.cscb_db[i]);
    }
    Ok(())
}
