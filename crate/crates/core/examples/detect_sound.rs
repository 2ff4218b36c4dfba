//! Compare the sound metric detector with CFAR and HHI on a scene holding a speaker
//! and a person walking farther away.

use std::collections::BTreeMap;

use radiomic::detect::{detect_cfar, detect_hhi, detect_radiomic, DetectConfig, DetectionResult};
use radiomic::sim::{simulate, SceneDescription};
use radiomic::spectral::{range_doppler, StftConfig};

fn summary(name: &str, result: &DetectionResult) {
    let mut per_bin: BTreeMap<usize, usize> = BTreeMap::new();
    for run in &result.detected_bins {
        *per_bin.entry(run.bin).or_default() += run.frames.len();
    }
    let mut busiest: Vec<(usize, usize)> = per_bin.into_iter().map(|(b, n)| (n, b)).collect();
    busiest.sort_by(|a, b| b.cmp(a));
    let top: Vec<String> = busiest.iter().take(5).map(|(n, b)| format!("{b}:{n}")).collect();
    println!("{name:9} {:5} cells, busiest bins (bin:frames) {}", result.count(), top.join(" "));
}

fn main() -> radiomic::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenes/speaker_and_walker.json").into());
    let scene = SceneDescription::load(&path)?;
    let cir = simulate(&scene)?;
    let spec = range_doppler(&cir, StftConfig::default())?;
    println!("source bin {:?}", scene.source_bin(0));
    summary("radiomic", &detect_radiomic(&spec, &DetectConfig::default())?);
    summary("cfar", &detect_cfar(&spec, 1, 4, 8.0)?);
    summary("hhi", &detect_hhi(&spec, 0.25)?);
    Ok(())
}
