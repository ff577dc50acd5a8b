//! The same video scenario under the sum-rate baseline and the queue- and
//! quality-aware drift-plus-penalty scheduler at a few values of `V`.

use comp_sim::config::SchedulerKind;
use comp_sim::presets::Preset;
use comp_sim::{run, ScenarioConfig};

fn main() -> comp_sim::Result<()> {
    let mut base = Preset::Table2.apply(&ScenarioConfig::default());
    base.n_slots = 3000;
    base.seed = 4;

    println!("scheduler        V  stalls  mean_quality  mean_kqi_loss  cell_edge_bps");
    let mut cases = vec![(SchedulerKind::Kpi, 0.0)];
    cases.extend([0.0, 1e3, 1e5].map(|v| (SchedulerKind::Kqi, v)));
    for (kind, v) in cases {
        let mut cfg = base.clone();
        cfg.scheduler.kind = kind;
        cfg.scheduler.v = v;
        let r = run(&cfg)?;
        let quality = r.users.iter().map(|u| u.mean_quality).sum::<f64>() / r.users.len() as f64;
        println!(
            "{:<9} {v:>8}  {:>6}  {quality:>12.2}  {:>13.4}  {:>13.3e}",
            format!("{kind:?}"),
            r.aggregate.total_stalls,
            r.aggregate.mean_sum_kqi_loss,
            r.aggregate.cell_edge_throughput_bps
        );
    }
    Ok(())
}
