//! Per-user stall counts and engagement correlation under the KPI baseline and
//! the KQI scheduler (the `table2` preset, shortened).

use comp_sim::engine::sweeps::compare_schedulers;
use comp_sim::presets::Preset;
use comp_sim::ScenarioConfig;

fn main() -> comp_sim::Result<()> {
    let mut cfg = Preset::Table2.apply(&ScenarioConfig::default());
    cfg.n_slots = 4000;
    let seeds: Vec<u64> = (1..=6).collect();
    let cmp = compare_schedulers(&cfg, cfg.users.count, &seeds)?;
    println!("user  kpi_rho  kqi_rho  kpi_stalls  kqi_stalls   (medians over {} seeds)", seeds.len());
    for u in &cmp.users {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:>4}  {:>7}  {:>7}  {:>10}  {:>10}",
            u.user + 1,
            fmt(u.kpi_pearson),
            fmt(u.kqi_pearson),
            u.kpi_stalls,
            u.kqi_stalls
        );
    }
    Ok(())
}
