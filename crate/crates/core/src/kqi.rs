//! Video sessions, stall accounting and engagement metrics.

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Buffer levels closer than this to a boundary count as on it.
const BUFFER_EPS_S: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSession {
    pub file_size_bits: u64,
    pub downloaded_bits: u64,
    /// Buffered playback time.
    pub buffer_s: f64,
    /// Media bits sitting in the buffer.
    pub buffer_bits: f64,
    pub playing: bool,
    pub stall_count: u32,
    pub quality_level: usize,
    pub n_levels: usize,
    pub engagement_sensitivity: f64,
    /// Buffer level at which a stalled session resumes.
    pub rebuffer_s: f64,
    pub played_s: f64,
    pub played_bits: f64,
    pub stalled_s: f64,
}

impl VideoSession {
    pub fn new(
        file_size_bits: u64,
        n_levels: usize,
        quality_level: usize,
        engagement_sensitivity: f64,
        initial_buffer_s: f64,
        rebuffer_s: f64,
        ladder: &[f64],
    ) -> Self {
        Self {
            file_size_bits,
            downloaded_bits: 0,
            buffer_s: initial_buffer_s,
            buffer_bits: initial_buffer_s * ladder[quality_level],
            playing: initial_buffer_s > 0.0,
            stall_count: 0,
            quality_level,
            n_levels,
            engagement_sensitivity,
            rebuffer_s,
            played_s: 0.0,
            played_bits: 0.0,
            stalled_s: 0.0,
        }
    }

    pub fn max_level(&self) -> usize {
        self.n_levels.saturating_sub(1)
    }

    pub fn finished(&self) -> bool {
        self.downloaded_bits >= self.file_size_bits
    }
}

/// `D / S`
pub fn download_ratio(session: &VideoSession) -> f64 {
    session.downloaded_bits as f64 / session.file_size_bits as f64
}

/// One slot of playback. Delivered bits extend the buffer at the session's
/// current bitrate; a playing session drains one slot. Running dry while
/// playing is a stall; a stalled session resumes once the buffer reaches
/// `rebuffer_s`.
pub fn step_playback(session: &VideoSession, delivered_bits: u64, slot_duration_s: f64, ladder: &[f64]) -> VideoSession {
    let media_s = delivered_bits as f64 / ladder[session.quality_level];
    step_playback_media(session, delivered_bits, media_s, slot_duration_s)
}

/// [`step_playback`] for deliveries whose playback time is known, e.g. a mix
/// of segments encoded at different levels.
pub fn step_playback_media(session: &VideoSession, delivered_bits: u64, media_s: f64, slot_duration_s: f64) -> VideoSession {
    let mut s = session.clone();
    let room = s.file_size_bits - s.downloaded_bits.min(s.file_size_bits);
    let delivered = delivered_bits.min(room);
    s.downloaded_bits += delivered;
    if delivered_bits > 0 {
        s.buffer_s += media_s * delivered as f64 / delivered_bits as f64;
    }
    s.buffer_bits += delivered as f64;

    if s.playing {
        let drain = s.buffer_s.min(slot_duration_s);
        let bits = if s.buffer_s > 0.0 {
            s.buffer_bits * drain / s.buffer_s
        } else {
            0.0
        };
        s.buffer_s -= drain;
        s.buffer_bits = (s.buffer_bits - bits).max(0.0);
        s.played_s += drain;
        s.played_bits += bits;
        if s.buffer_s <= BUFFER_EPS_S {
            s.buffer_s = 0.0;
            s.buffer_bits = 0.0;
            s.playing = false;
            if !s.finished() {
                s.stall_count += 1;
            }
        }
    } else if !s.finished() {
        s.stalled_s += slot_duration_s;
    }
    if !s.playing && !s.finished() && s.buffer_s >= s.rebuffer_s - BUFFER_EPS_S {
        s.playing = true;
    }
    s
}

/// Whether delivering `delivered_bits` at `quality_level` this slot leaves a
/// playing session with an empty buffer.
pub fn predicts_stall(
    session: &VideoSession,
    delivered_bits: f64,
    slot_duration_s: f64,
    ladder: &[f64],
    quality_level: usize,
) -> bool {
    session.playing
        && !session.finished()
        && session.buffer_s + delivered_bits / ladder[quality_level] - slot_duration_s <= BUFFER_EPS_S
}

/// Weights of the two loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KqiWeights {
    pub stall: f64,
    pub quality: f64,
}

impl Default for KqiWeights {
    fn default() -> Self {
        Self {
            stall: 1.0,
            quality: 0.25,
        }
    }
}

/// `s * (alpha [stalled] + beta (max - q) / max)`
pub fn kqi_loss(session: &VideoSession, stalled: bool, quality_level: usize, weights: KqiWeights) -> f64 {
    let max = session.max_level();
    let gap = if max == 0 {
        0.0
    } else {
        (max - quality_level.min(max)) as f64 / max as f64
    };
    let stall = if stalled { 1.0 } else { 0.0 };
    session.engagement_sensitivity * (weights.stall * stall + weights.quality * gap)
}

/// Paired samples of download ratio `R` and throughput `C`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EngagementRecord {
    pub ratio: Vec<f64>,
    pub throughput_bps: Vec<f64>,
}

impl EngagementRecord {
    pub fn push(&mut self, ratio: f64, throughput_bps: f64) {
        self.ratio.push(ratio);
        self.throughput_bps.push(throughput_bps);
    }

    pub fn len(&self) -> usize {
        self.ratio.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratio.is_empty()
    }
}

/// Pearson correlation between `R` and `C`.
pub fn pearson(record: &EngagementRecord) -> Result<f64> {
    crate::stats::pearson(&record.ratio, &record.throughput_bps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;

    const LADDER: [f64; 4] = [1e6, 2e6, 4e6, 8e6];
    const T: f64 = 1e-3;

    fn session(buffer: f64) -> VideoSession {
        VideoSession::new(u64::MAX / 2, 4, 3, 1.0, buffer, 2.0, &LADDER)
    }

    #[test]
    fn ratio_examples() {
        let mut s = session(0.0);
        s.file_size_bits = 1000;
        assert_eq!(download_ratio(&s), 0.0);
        s.downloaded_bits = 500;
        assert_eq!(download_ratio(&s), 0.5);
        s.downloaded_bits = 1000;
        assert_eq!(download_ratio(&s), 1.0);
    }

    #[test]
    fn surplus_never_stalls() {
        let mut s = session(2.0);
        for _ in 0..5000 {
            s = step_playback(&s, 8000, T, &LADDER);
        }
        assert_eq!(s.stall_count, 0);
        assert!(s.playing);
    }

    #[test]
    fn exact_drain_stalls() {
        let s = session(T);
        let next = step_playback(&s, 0, T, &LADDER);
        assert_eq!(next.buffer_s, 0.0);
        assert_eq!(next.stall_count, 1);
        assert!(!next.playing);
    }

    /// Hand-written replay of the playback rules on whole milliseconds.
    #[test]
    fn feast_famine_matches_replay() {
        let mut s = session(0.005);
        s.rebuffer_s = 0.004;
        // 8 Mb/s ladder: 8000 bits are one millisecond of media.
        let trace: Vec<u64> = [0, 0, 0, 0, 0, 0, 32000, 0, 0, 0, 0, 0, 40000, 0, 0, 0, 0, 0, 0, 8000, 8000, 8000, 8000]
            .to_vec();
        let (mut buf_ms, mut playing, mut stalls) = (5i64, true, 0);
        for &d in &trace {
            s = step_playback(&s, d, T, &LADDER);
            buf_ms += (d / 8000) as i64;
            if playing {
                buf_ms -= 1;
                if buf_ms <= 0 {
                    buf_ms = 0;
                    playing = false;
                    stalls += 1;
                }
            }
            if !playing && buf_ms >= 4 {
                playing = true;
            }
            assert_eq!(s.playing, playing);
            assert!((s.buffer_s - buf_ms as f64 * 1e-3).abs() < 1e-12);
        }
        assert_eq!(s.stall_count, stalls);
        assert_eq!(stalls, 3);
    }

    #[test]
    fn loss_examples() {
        let s = session(1.0);
        let w = KqiWeights::default();
        assert_eq!(kqi_loss(&s, false, 3, w), 0.0);
        assert_eq!(kqi_loss(&s, true, 3, w), 1.0);
        let mut half = s.clone();
        half.engagement_sensitivity = 0.5;
        assert!((kqi_loss(&half, true, 0, w) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn pearson_needs_variation() {
        let mut r = EngagementRecord::default();
        r.push(0.5, 1.0);
        r.push(0.5, 2.0);
        assert!(matches!(pearson(&r), Err(Error::UndefinedCorrelation(_))));
    }

    proptest! {
        #[test]
        fn session_invariants(
            trace in proptest::collection::vec(0u64..20_000, 1..400),
            levels in proptest::collection::vec(0usize..4, 1..400),
            size in 10_000u64..2_000_000,
        ) {
            let mut s = VideoSession::new(size, 4, 3, 0.7, 0.01, 0.02, &LADDER);
            let initial_bits = s.buffer_bits;
            let mut prev = s.clone();
            for (i, &d) in trace.iter().enumerate() {
                s.quality_level = levels[i % levels.len()];
                s = step_playback(&s, d, T, &LADDER);
                prop_assert!(s.downloaded_bits <= s.file_size_bits);
                prop_assert!(s.stall_count >= prev.stall_count);
                prop_assert!(download_ratio(&s) >= download_ratio(&prev));
                prop_assert!(s.played_bits <= s.downloaded_bits as f64 + initial_bits + 1e-6);
                if prev.playing && !s.playing {
                    prop_assert_eq!(s.buffer_s, 0.0);
                }
                prev = s.clone();
            }
        }

        #[test]
        fn loss_zero_iff_perfect(sens in 0.01f64..1.0, stalled: bool, q in 0usize..4) {
            let mut s = session(1.0);
            s.engagement_sensitivity = sens;
            let l = kqi_loss(&s, stalled, q, KqiWeights::default());
            prop_assert!(l >= 0.0);
            prop_assert_eq!(l == 0.0, !stalled && q == 3);
        }

        #[test]
        fn pearson_affine_invariant(
            pts in proptest::collection::vec((0.0f64..1.0, 0.0f64..1e7), 3..50),
            a in 0.1f64..10.0, b in -5.0f64..5.0, c in 0.1f64..10.0, d in -1e6f64..1e6,
        ) {
            let mut rec = EngagementRecord::default();
            let mut tr = EngagementRecord::default();
            for &(r, t) in &pts {
                rec.push(r, t);
                tr.push(a * r + b, c * t + d);
            }
            if let (Ok(x), Ok(y)) = (pearson(&rec), pearson(&tr)) {
                prop_assert!((x - y).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&x));
            }
        }
    }
}
