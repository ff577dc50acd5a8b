//! The drift-plus-penalty trade-off: KQI loss falls and backlog grows with `V`
//! when every user is loaded to 80% of what it can receive.

use comp_sim::config::TrafficKind;
use comp_sim::engine::sweeps::sweep_v_at_load;
use comp_sim::ScenarioConfig;

fn main() -> comp_sim::Result<()> {
    let mut cfg = ScenarioConfig::default();
    cfg.traffic.kind = TrafficKind::Video;
    cfg.n_slots = 4000;
    let points = sweep_v_at_load(&cfg, &[0.0, 10.0, 100.0, 1000.0], &[1, 2], 0.8)?;
    println!("V       mean_kqi_loss  mean_backlog_bits  max_relative_slope");
    for p in points {
        println!("{:<6}  {:>13.4}  {:>17.4e}  {:>18.2e}", p.v, p.mean_kqi_loss, p.mean_backlog_bits, p.max_relative_slope);
    }
    Ok(())
}
