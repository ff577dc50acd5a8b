//! A video session fed by a bursty link: buffer, stalls, download ratio and
//! the per-slot KQI loss the scheduler penalises.

use comp_sim::kqi::{download_ratio, kqi_loss, step_playback, KqiWeights, VideoSession};

fn main() {
    let ladder = [1e6, 2.5e6, 5e6, 8e6];
    let t = 0.01;
    let weights = KqiWeights::default();
    let mut s = VideoSession::new(60 * 8_000_000, ladder.len(), 2, 0.6, 0.5, 0.5, &ladder);
    let mut total_loss = 0.0;
    for slot in 0..3000u32 {
        // 2 s on at 7 Mb/s, 1.5 s off: below the 5 Mb/s playback rate on average.
        let bits = if slot % 350 < 200 { (7e6 * t) as u64 } else { 0 };
        let next = step_playback(&s, bits, t, &ladder);
        let stalled = next.stall_count > s.stall_count;
        total_loss += kqi_loss(&next, stalled, next.quality_level, weights);
        s = next;
        if slot % 500 == 499 {
            println!(
                "t = {:>4.1} s: buffer {:.2} s, playing {}, stalls {}, download ratio {:.3}",
                (slot + 1) as f64 * t,
                s.buffer_s,
                s.playing,
                s.stall_count,
                download_ratio(&s)
            );
        }
    }
    println!("accumulated KQI loss {total_loss:.2}");
}
