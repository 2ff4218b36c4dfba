//! Write a 440 Hz tone as 16-bit PCM and float WAV, read both back and compare.

use radiomic::io::{load_wav, save_wav, WavEncoding};
use radiomic::waveforms::tone;

fn main() -> radiomic::Result<()> {
    let signal = tone(440.0, 0.5, 16000.0, 1.0);
    let dir = std::env::temp_dir();
    for (name, encoding) in [("pcm16", WavEncoding::Pcm16), ("float32", WavEncoding::Float32)] {
        let path = dir.join(format!("radiomic-tone-{name}.wav"));
        save_wav(&signal, &path, encoding)?;
        let back = load_wav(&path)?;
        let err = signal
            .samples
            .iter()
            .zip(&back.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("{}: {} samples at {} Hz, max error {err:.1e}", path.display(), back.len(), back.sample_rate);
    }
    Ok(())
}
