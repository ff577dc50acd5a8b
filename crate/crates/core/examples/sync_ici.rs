//! Carrier frequency offsets of free-running clocks, the inter-carrier
//! interference they cause, and what over-the-air master-slave sync leaves.

use comp_sim::channel::{rng_for, streams};
use comp_sim::phy::to_db;
use comp_sim::sync::{ici_factors, master_slave_sync, offset_hz, residual_std_hz, ClockModel};
use comp_sim::ScenarioConfig;

fn main() -> comp_sim::Result<()> {
    let cfg = ScenarioConfig::default();
    for ppb in [20.0, 75.0] {
        println!("{ppb} ppb at {} GHz -> {} Hz", cfg.carrier_hz / 1e9, offset_hz(ppb, cfg.carrier_hz));
    }

    println!("\noffset_hz  desired_gain(15k)  ici(15k)  desired_gain(312.5k)");
    for df in [0.0, 70.0, 262.5, 1000.0] {
        let (g15, i15) = ici_factors(df, 15e3);
        let (g312, _) = ici_factors(df, 312.5e3);
        let ici = if i15 > 0.0 { format!("{:.2} dB", to_db(i15)) } else { "none".into() };
        println!("{df:>9}  {g15:.6}  {ici:>11}  {g312:.9}");
    }

    let mut rng = rng_for(1, streams::CLOCKS);
    let free = ClockModel::draw(&cfg, &mut rng);
    let all: Vec<usize> = (0..cfg.n_bs).collect();
    println!("\nfree-running max pairwise offset: {:.1} Hz", free.max_pairwise_offset_hz(&all));
    let mut rng = rng_for(1, streams::SYNC);
    let synced = master_slave_sync(&free, cfg.sync.beacon_snr_db, cfg.sync.sigma0_hz, &mut rng)?;
    println!(
        "after sync: {:.3} Hz (residual std {:.3} Hz)",
        synced.max_pairwise_offset_hz(&all),
        residual_std_hz(cfg.sync.sigma0_hz, cfg.sync.beacon_snr_db)
    );
    Ok(())
}
