//! Forward and inverse STFT of a random complex signal; prints the interior
//! reconstruction error and where a pure tone lands on the Doppler axis.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radiomic::spectral::{Stft, StftConfig};

fn main() -> radiomic::Result<()> {
    let config = StftConfig::default();
    let engine = Stft::new(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<Complex64> = (0..6250)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let spec = engine.forward(&x)?;
    let y = engine.inverse(&spec)?;
    let interior = config.frame_length..x.len() - config.frame_length;
    let err: f64 = interior.clone().map(|i| (x[i] - y[i]).norm_sqr()).sum();
    let norm: f64 = interior.map(|i| x[i].norm_sqr()).sum();
    println!(
        "{} rows x {} frames, interior relative error {:.2e}",
        spec.num_rows,
        spec.num_frames,
        (err / norm).sqrt()
    );

    let fs = 6250.0;
    let tone: Vec<f64> = (0..6250).map(|i| (2.0 * std::f64::consts::PI * 293.0 * i as f64 / fs).cos()).collect();
    let spec = engine.forward_real(&tone)?;
    let frame = spec.num_frames / 2;
    let mut rows: Vec<(usize, f64)> = (0..spec.num_rows).map(|r| (r, spec.get(r, frame).norm())).collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (r, mag) in rows.iter().take(2) {
        println!("row {r:3} ({:+7.1} Hz): |G| = {mag:.1}", config.row_frequency(*r, fs));
    }
    Ok(())
}
