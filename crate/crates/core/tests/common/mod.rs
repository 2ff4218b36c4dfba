#![allow(dead_code)]

use num_complex::Complex64;
use radiomic::sim::{AudioRef, MotionInterferer, SceneDescription, SourceKind, VibrationSource, Waypoint};
use radiomic::RadarParams;

pub fn radar(bins: usize, receivers: usize) -> RadarParams {
    RadarParams {
        num_range_bins: bins,
        num_receivers: receivers,
        ..Default::default()
    }
}

pub fn scene(bins: usize, receivers: usize, duration: f64, seed: u64, noise: f64) -> SceneDescription {
    let s = SceneDescription::new(radar(bins, receivers), duration, seed);
    if noise > 0.0 {
        s.with_uniform_noise(noise)
    } else {
        s
    }
}

pub fn source(audio: AudioRef, peak: f64, range: f64, onset: f64) -> VibrationSource {
    VibrationSource {
        audio,
        channel: None,
        peak_displacement: peak,
        range,
        reflectivity: Complex64::new(1.0, 0.0),
        kind: SourceKind::Active,
        onset,
        modulation: vec![],
    }
}

pub fn tone(frequency: f64) -> AudioRef {
    AudioRef::Tone { frequency, amplitude: 1.0 }
}

/// Constant-speed walker from `from` to `to` meters over `[0, duration]`.
pub fn walker(from: f64, to: f64, duration: f64, gain: f64) -> MotionInterferer {
    MotionInterferer {
        trajectory: vec![
            Waypoint { time: 0.0, range: from },
            Waypoint { time: duration, range: to },
        ],
        reflectivity: Complex64::new(gain, 0.0),
    }
}

/// Range that puts a reflector entirely into `bin`.
pub fn center_of(params: &RadarParams, bin: usize) -> f64 {
    bin as f64 * params.range_bin_spacing()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Largest |normalized cross-correlation| over lags up to `max_lag`, after mean removal.
pub fn max_correlation(a: &[f64], b: &[f64], max_lag: usize) -> f64 {
    let n = a.len().min(b.len());
    let centered = |x: &[f64]| {
        let mean = x[..n].iter().sum::<f64>() / n as f64;
        x[..n].iter().map(|v| v - mean).collect::<Vec<_>>()
    };
    let (a, b) = (centered(a), centered(b));
    let mut best = 0.0f64;
    for lag in -(max_lag as isize)..=max_lag as isize {
        let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
        for i in 0..n as isize {
            let j = i + lag;
            if j >= 0 && j < n as isize {
                let (x, y) = (a[i as usize], b[j as usize]);
                xy += x * y;
                xx += x * x;
                yy += y * y;
            }
        }
        if xx > 0.0 && yy > 0.0 {
            best = best.max((xy / (xx * yy).sqrt()).abs());
        }
    }
    best
}
