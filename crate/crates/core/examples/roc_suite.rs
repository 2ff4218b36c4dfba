//! Detection ROC over seeded scenes for the sound metric, CFAR and HHI, written as CSV.
//! Pass a scene count to shorten the run (default 50).

use std::fmt::Write;

use radiomic::suite::{run_detection_suite, DetectionSuiteConfig};

fn main() -> radiomic::Result<()> {
    let scenes = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let config = DetectionSuiteConfig { scenes, ..Default::default() };
    let outcome = run_detection_suite(&config)?;
    let positives = outcome.truth.iter().filter(|t| **t).count();
    println!("{} cells, {positives} sound-bearing", outcome.truth.len());
    let mut csv = String::from("method,false_alarm_rate,detection_rate\n");
    for (method, r) in &outcome.results {
        println!("{method:?}: AUC {:.4}", r.auc);
        for p in &r.roc {
            let _ = writeln!(csv, "{method:?},{},{}", p.false_alarm_rate, p.detection_rate);
        }
    }
    let path = std::env::temp_dir().join("radiomic-roc.csv");
    std::fs::write(&path, csv).map_err(|e| radiomic::Error::Io { path: path.clone(), source: e })?;
    println!("wrote {}", path.display());
    Ok(())
}
