use crate::error::{Error, Result};

/// Power allocation maximizing `sum log(1 + g_i p_i)` under `sum p_i = P`.
///
/// The water level is found from the active set directly: channels are
/// activated in decreasing gain order until the next one would sit above
/// the water level.
pub fn water_filling(gains: &[f64], total_power: f64) -> Result<Vec<f64>> {
    if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::DegenerateInput("gains must be finite and >= 0".into()));
    }
    if !total_power.is_finite() || total_power <= 0.0 {
        return Err(Error::DegenerateInput("total power must be positive".into()));
    }
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::DegenerateInput("all channel gains are zero".into()));
    }
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));

    let mut inv_sum = 0.0;
    let mut level = 0.0;
    let mut active = 0;
    for (k, &i) in order.iter().enumerate() {
        let inv = 1.0 / gains[i];
        let candidate = (total_power + inv_sum + inv) / (k + 1) as f64;
        if candidate - inv <= 0.0 {
            break;
        }
        inv_sum += inv;
        level = candidate;
        active = k + 1;
    }

    let mut p = vec![0.0; gains.len()];
    for &i in &order[..active] {
        p[i] = (level - 1.0 / gains[i]).max(0.0);
    }
    // Put the rounding residue on the strongest channel.
    let residue = total_power - p.iter().sum::<f64>();
    p[order[0]] += residue;
    Ok(p)
}

pub fn equal_split(n: usize, total_power: f64) -> Vec<f64> {
    vec![total_power / n as f64; n]
}

pub fn sum_log_rate(gains: &[f64], powers: &[f64]) -> f64 {
    gains.iter().zip(powers).map(|(g, p)| (1.0 + g * p).ln()).sum()
}
