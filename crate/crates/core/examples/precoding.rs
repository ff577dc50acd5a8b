//! Zero-forcing JT and null-steering CS/CB on one channel draw: residual
//! leakage with perfect CSI, then predicted SINR with quantized CSI.

use comp_sim::channel::{quantize_csi, ChannelProcess};
use comp_sim::linalg::gain;
use comp_sim::phy::{compute_sinr_linear, cscb_precoder, jt_precoder, to_db, SinrInputs};
use comp_sim::ScenarioConfig;

fn main() -> comp_sim::Result<()> {
    let cfg = ScenarioConfig::default();
    let process = ChannelProcess::new(&cfg, 3)?;
    let truth = process.state();
    let bs: Vec<usize> = (0..cfg.n_bs).collect();
    let group = [0, 1, 2];

    for bits in [32, 8, 4] {
        let reports: Vec<_> = (0..truth.n_users()).map(|u| quantize_csi(truth, bits, u)).collect();
        let rows: Vec<_> = group.iter().map(|&u| truth.stacked(u, &bs)).collect();
        let inputs = SinrInputs::default();

        let jt = jt_precoder(&reports, &group, &bs, cfg.tx_power_w())?;
        let serving = [0, 1, 2];
        let cscb = cscb_precoder(&reports, &group, &serving, &bs, cfg.tx_power_w())?;
        for (name, plan) in [("JT", &jt), ("CS/CB", &cscb)] {
            let leak: f64 = (0..group.len())
                .flat_map(|i| (0..group.len()).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| gain(&rows[i], &plan.w[j]) * plan.power[j])
                .sum();
            let signal: f64 = (0..group.len()).map(|i| gain(&rows[i], &plan.w[i]) * plan.power[i]).sum();
            let sinr = compute_sinr_linear(&rows, plan, (1.0, 0.0), &inputs, truth.noise_var_w);
            let db: Vec<String> = sinr.iter().map(|&x| format!("{:.1}", to_db(x))).collect();
            println!("{bits:>2}-bit CSI {name:>5}: leakage/signal {:.2e}, SINR dB [{}]", leak / signal, db.join(", "));
        }
    }
    Ok(())
}
