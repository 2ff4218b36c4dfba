//! Simulate a vibrating source, a walker and a wall reflection, then save the CIR
//! stream as an RSPG tensor file and report AC power per range bin.

use num_complex::Complex64;
use radiomic::io::{load_cir, save_cir, Metadata};
use radiomic::sim::{simulate, AudioRef, MotionInterferer, SceneDescription, StaticReflector, VibrationSource, Waypoint};
use radiomic::RadarParams;

fn main() -> radiomic::Result<()> {
    let radar = RadarParams {
        num_range_bins: 32,
        num_receivers: 2,
        ..Default::default()
    };
    let mut scene = SceneDescription::new(radar, 1.0, 5).with_uniform_noise(1e-6);
    scene.sources.push(VibrationSource {
        audio: AudioRef::Tone { frequency: 300.0, amplitude: 1.0 },
        channel: None,
        peak_displacement: 5e-6,
        range: 0.5,
        reflectivity: Complex64::new(1.0, 0.0),
        kind: Default::default(),
        onset: 0.2,
        modulation: vec![],
    });
    scene.interferers.push(MotionInterferer {
        trajectory: vec![Waypoint { time: 0.0, range: 1.2 }, Waypoint { time: 1.0, range: 0.9 }],
        reflectivity: Complex64::new(2.0, 0.0),
    });
    scene.background.push(StaticReflector {
        range: 1.3,
        reflectivity: Complex64::new(5.0, 1.0),
    });
    let cir = simulate(&scene)?;

    let path = std::env::temp_dir().join("radiomic-simulate-scene.rspg");
    save_cir(&cir, &path, &Metadata::new())?;
    let back = load_cir(&path)?;
    println!("wrote {} ({} samples per bin)", path.display(), back.num_samples());

    println!("source bin {:?}", scene.source_bin(0));
    for bin in 0..cir.num_range_bins() {
        let s = cir.bin_series(0, bin);
        let mean = s.iter().sum::<Complex64>() / s.len() as f64;
        let ac = s.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / s.len() as f64;
        if ac > 1e-5 {
            println!("bin {bin:2}: AC power {ac:.3e}");
        }
    }
    Ok(())
}
