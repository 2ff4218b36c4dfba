//! Throat-vs-loudspeaker liveness scores on 40 ms spans, and the best single threshold.

use radiomic::suite::{best_threshold, run_liveness_suite, LivenessSuiteConfig};

fn main() -> radiomic::Result<()> {
    let samples = run_liveness_suite(&LivenessSuiteConfig::default())?;
    for live in [true, false] {
        let mut scores: Vec<f64> = samples.iter().filter(|s| s.live == live).map(|s| s.score).collect();
        scores.sort_by(f64::total_cmp);
        println!(
            "{:8} n={} min {:.2e} median {:.2e} max {:.2e}",
            if live { "throat" } else { "speaker" },
            scores.len(),
            scores[0],
            scores[scores.len() / 2],
            scores[scores.len() - 1]
        );
    }
    let (accuracy, threshold) = best_threshold(&samples);
    println!("threshold {threshold:.2e}: accuracy {:.1}%", 100.0 * accuracy);
    Ok(())
}
