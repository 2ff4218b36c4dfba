//! SNR, LLR and STOI of noisy copies of a synthetic utterance at falling SNR.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use radiomic::metrics::{evaluate, llr, snr_silent, stoi};
use radiomic::waveforms::speech;
use radiomic::{AudioSignal, Span};

fn main() -> radiomic::Result<()> {
    let fs = 6250.0;
    let mut clean = speech(3, fs, 3.0);
    let lead = (0.3 * fs) as usize;
    clean.samples.splice(0..0, std::iter::repeat(0.0).take(lead));
    let power = clean.samples[lead..].iter().map(|v| v * v).sum::<f64>() / (clean.len() - lead) as f64;
    println!("  snr_in   snr_silent   llr     stoi");
    for snr in [20.0, 10.0, 0.0] {
        let sigma = (power / 10f64.powf(snr / 10.0)).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(snr as u64);
        let noise = Normal::new(0.0, sigma).expect("finite sigma");
        let noisy: Vec<f64> = clean.samples.iter().map(|v| v + noise.sample(&mut rng)).collect();
        let noisy = AudioSignal::new(noisy, fs)?;
        let measured = snr_silent(&noisy, &[Span::new(0, lead)])?;
        println!(
            "{snr:8.1} {measured:12.2} {:7.3} {:8.3}",
            llr(&clean, &noisy)?,
            stoi(&clean, &noisy)?
        );
    }
    let report = evaluate(&clean, Some(&clean), &[Span::new(0, lead)])?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
