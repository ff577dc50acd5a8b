use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsEntry {
    pub name: String,
    /// Raw modulation bits per symbol.
    pub bits_per_symbol: f64,
    pub code_rate: f64,
    pub min_sinr_db: f64,
}

impl McsEntry {
    pub fn effective_bits(&self) -> f64 {
        self.bits_per_symbol * self.code_rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McsTable {
    pub entries: Vec<McsEntry>,
}

/// Threshold from the Shannon-gap approximation: `2^(2r) - 1` plus an
/// implementation gap, in dB.
pub fn shannon_gap_threshold_db(effective_bits: f64, gap_db: f64) -> f64 {
    10.0 * (2f64.powf(2.0 * effective_bits) - 1.0).log10() + gap_db
}

impl Default for McsTable {
    /// 2PSK, 4QAM and 16QAM with rate-1/2 LDPC and a 3 dB gap.
    fn default() -> Self {
        let entry = |name: &str, bits: f64| {
            let code_rate = 0.5;
            McsEntry {
                name: name.to_string(),
                bits_per_symbol: bits,
                code_rate,
                min_sinr_db: shannon_gap_threshold_db(bits * code_rate, 3.0),
            }
        };
        Self {
            entries: vec![entry("2PSK", 1.0), entry("4QAM", 2.0), entry("16QAM", 4.0)],
        }
    }
}

impl McsTable {
    pub fn validate(&self) -> Result<(), String> {
        if self.entries.is_empty() {
            return Err("MCS table must not be empty".into());
        }
        for e in &self.entries {
            if !e.min_sinr_db.is_finite() || e.effective_bits().is_nan() || e.effective_bits() <= 0.0 || !e.effective_bits().is_finite() {
                return Err(format!("entry `{}` needs a finite threshold and positive rate", e.name));
            }
        }
        for w in self.entries.windows(2) {
            if w[1].min_sinr_db <= w[0].min_sinr_db {
                return Err("thresholds must be strictly increasing".into());
            }
            if w[1].effective_bits() <= w[0].effective_bits() {
                return Err("rates must be strictly increasing".into());
            }
        }
        Ok(())
    }

    /// Bit rate of entry `idx` over `symbol_rate_hz` symbols per second.
    pub fn rate_bps(&self, idx: usize, symbol_rate_hz: f64) -> f64 {
        self.entries[idx].effective_bits() * symbol_rate_hz
    }

    pub fn threshold_db(&self, idx: usize) -> f64 {
        self.entries[idx].min_sinr_db
    }
}

/// Highest entry whose threshold does not exceed `sinr_db`, with its rate.
/// `None` with rate 0 signals outage.
pub fn rate_from_sinr(sinr_db: f64, table: &McsTable, symbol_rate_hz: f64) -> (Option<usize>, f64) {
    match table.entries.iter().rposition(|e| e.min_sinr_db <= sinr_db) {
        Some(i) => (Some(i), table.rate_bps(i, symbol_rate_hz)),
        None => (None, 0.0),
    }
}
