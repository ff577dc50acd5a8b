//! Physical-layer abstraction: precoders, SINR, power allocation and
//! link adaptation.

mod mcs;
mod power;
mod precoding;
mod sinr;

use serde::{Deserialize, Serialize};

pub use mcs::{rate_from_sinr, shannon_gap_threshold_db, McsEntry, McsTable};
pub use power::{equal_split, sum_log_rate, water_filling};
pub use precoding::{cscb_beamformer, cscb_precoder, jt_precoder, Precoder};
pub use sinr::{compute_sinr, compute_sinr_linear, iq_quant_noise, to_db, SinrInputs};

/// Transmission mode of a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Joint transmission: every cluster BS sends every served stream.
    Jt,
    /// Coordinated scheduling / beamforming: one serving BS per user,
    /// neighbours steer nulls toward it.
    Cscb,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Jt => "jt",
            Mode::Cscb => "cscb",
        })
    }
}
