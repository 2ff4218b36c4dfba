//! Deterministic synthetic audio used by scenes, examples and tests.
//!
//! The speech generator is additive: a gliding glottal harmonic series shaped by three
//! vowel formants (-6 dB/octave source tilt), cut into syllables separated by pauses. It is not intelligible
//! speech, but it has the spectral tilt, formant structure and on/off envelope that
//! the detection, recovery and metric stages care about.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::types::AudioSignal;

fn signal(samples: Vec<f64>, rate: f64, label: &str) -> AudioSignal {
    AudioSignal {
        samples,
        sample_rate: rate,
        label: Some(label.to_string()),
    }
}

pub fn tone(freq: f64, amplitude: f64, rate: f64, secs: f64) -> AudioSignal {
    let n = (rate * secs).round() as usize;
    let s = (0..n)
        .map(|i| amplitude * (2.0 * PI * freq * i as f64 / rate).sin())
        .collect();
    signal(s, rate, "tone")
}

pub fn white_noise(seed: u64, rms: f64, rate: f64, secs: f64) -> AudioSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (rate * secs).round() as usize;
    let s = (0..n)
        .map(|_| rms * { let z: f64 = StandardNormal.sample(&mut rng); z })
        .collect::<Vec<f64>>();
    signal(s, rate, "noise")
}

/// Sustained harmonic note with slow vibrato, peak-normalized to 0.9.
pub fn harmonic(fundamental: f64, harmonics: usize, rate: f64, secs: f64) -> AudioSignal {
    let n = (rate * secs).round() as usize;
    let nyquist = rate / 2.0;
    let mut phase = 0.0;
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / rate;
        let f0 = fundamental * (1.0 + 0.01 * (2.0 * PI * 5.0 * t).sin());
        phase += 2.0 * PI * f0 / rate;
        let v: f64 = (1..=harmonics)
            .filter(|&k| k as f64 * f0 < nyquist * 0.95)
            .map(|k| (k as f64 * phase).sin() / k as f64)
            .sum();
        s.push(v);
    }
    normalize_peak(&mut s, 0.9);
    signal(s, rate, "harmonic")
}

struct Vowel {
    formants: [(f64, f64); 3],
}

impl Vowel {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Self {
            formants: [
                (rng.gen_range(300.0..800.0), 80.0),
                (rng.gen_range(900.0..2300.0), 120.0),
                (rng.gen_range(2400.0..3000.0), 180.0),
            ],
        }
    }

    /// Magnitude of a cascade of second-order resonances at `f`, unity at DC.
    fn gain(&self, f: f64) -> f64 {
        self.formants
            .iter()
            .map(|&(fc, bw)| {
                let u = f / fc;
                1.0 / ((1.0 - u * u).powi(2) + (f * bw / (fc * fc)).powi(2)).sqrt()
            })
            .product()
    }
}

/// Speech-like babble: voiced syllables of 120-300 ms separated by 40-160 ms pauses.
pub fn speech(seed: u64, rate: f64, secs: f64) -> AudioSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (rate * secs).round() as usize;
    let nyquist = rate / 2.0;
    let mut s = vec![0.0; n];
    let base_pitch = rng.gen_range(100.0..200.0);
    let mut pos = (rng.gen_range(0.02..0.08) * rate) as usize;
    while pos < n {
        let len = (rng.gen_range(0.12..0.30) * rate) as usize;
        let end = (pos + len).min(n);
        let vowel = Vowel::random(&mut rng);
        let f_start = base_pitch * rng.gen_range(0.85..1.2);
        let f_end = base_pitch * rng.gen_range(0.85..1.2);
        let loudness = rng.gen_range(0.5..1.0);
        let mut phase: f64 = rng.gen_range(0.0..2.0 * PI);
        for i in pos..end {
            let u = (i - pos) as f64 / len as f64;
            let f0 = f_start + (f_end - f_start) * u;
            phase += 2.0 * PI * f0 / rate;
            let env = (PI * u).sin().powf(0.6) * loudness;
            let mut v = 0.0;
            let mut k = 1;
            while (k as f64) * f0 < nyquist * 0.95 {
                let f = k as f64 * f0;
                v += vowel.gain(f) / k as f64 * (k as f64 * phase).sin();
                k += 1;
            }
            s[i] += env * v;
        }
        pos = end + (rng.gen_range(0.04..0.16) * rate) as usize;
    }
    normalize_peak(&mut s, 0.9);
    signal(s, rate, "speech")
}

pub fn normalize_peak(samples: &mut [f64], peak: f64) {
    let m = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        samples.iter_mut().for_each(|v| *v *= peak / m);
    }
}
