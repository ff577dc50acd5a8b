//! Water-filling across parallel channels against an equal split.

use comp_sim::phy::{equal_split, sum_log_rate, water_filling};

fn main() -> comp_sim::Result<()> {
    let gains = [12.0, 6.0, 2.0, 0.5, 0.05];
    for total in [0.1, 1.0, 10.0] {
        let wf = water_filling(&gains, total)?;
        let eq = equal_split(gains.len(), total);
        let active = wf.iter().filter(|&&p| p > 0.0).count();
        println!(
            "P = {total:>4}: powers {:?}\n          {active} active, sum log2(1+gp) {:.4} vs equal {:.4}",
            wf.iter().map(|p| (p * 1e4).round() / 1e4).collect::<Vec<_>>(),
            sum_log_rate(&gains, &wf),
            sum_log_rate(&gains, &eq)
        );
    }
    Ok(())
}
