//! Recover the speech of one simulated talker from its range bin and write it as WAV.

use num_complex::Complex64;
use radiomic::recover::{recover_bin, RecoverConfig};
use radiomic::sim::{simulate, AudioRef, SceneDescription, VibrationSource};
use radiomic::{RadarParams, Span};

fn main() -> radiomic::Result<()> {
    let radar = RadarParams {
        num_range_bins: 16,
        num_receivers: 1,
        ..Default::default()
    };
    let mut scene = SceneDescription::new(radar, 2.0, 3).with_uniform_noise(1e-6);
    scene.sources.push(VibrationSource {
        audio: AudioRef::Speech { seed: 4 },
        channel: None,
        peak_displacement: 1e-5,
        range: 0.4,
        reflectivity: Complex64::from_polar(1.0, 2.0),
        kind: Default::default(),
        onset: 0.4,
        modulation: vec![],
    });
    let cir = simulate(&scene)?;
    let bin = scene.source_bin(0).expect("source inside the range axis");
    let config = RecoverConfig {
        silent_spans: vec![Span::new(300, 2200)],
        ..Default::default()
    };
    let sound = recover_bin(&cir, 0, bin, Span::new(0, cir.num_samples()), &config)?;
    println!(
        "bin {bin}: line angle {:.1} deg, SNR {:.1} dB, {} samples at {} Hz",
        sound.projection.angle.to_degrees(),
        sound.snr_db,
        sound.audio.len(),
        sound.audio.sample_rate
    );
    let dir = std::env::temp_dir();
    let wav = sound.save(&dir, "radiomic-recovered")?;
    println!("wrote {}", wav.display());
    Ok(())
}
