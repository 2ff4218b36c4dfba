//! Band-limited sample-rate conversion.
//!
//! Windowed-sinc polyphase interpolation: the kernel spans 64 samples at the lower of
//! the two rates and is tapered with a Kaiser window (beta = 8). Integer rate pairs with
//! a reduced upsampling factor up to [`MAX_TABLE_PHASES`] use a precomputed phase table;
//! anything else evaluates the kernel per output sample.

use crate::dsp::{kaiser_at, sinc};
use crate::error::{Error, Result};
use crate::types::AudioSignal;

const TAPS_AT_LOWER_RATE: f64 = 64.0;
const KAISER_BETA: f64 = 8.0;
/// Cutoff as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.92;
pub const MAX_TABLE_PHASES: u64 = 4096;

struct Kernel {
    /// Cutoff in cycles per input sample.
    cutoff: f64,
    /// Half-width of the kernel support in input samples.
    half_width: f64,
    /// Number of taps on each side of the output position.
    reach: isize,
}

impl Kernel {
    fn new(in_rate: f64, out_rate: f64) -> Self {
        let lower = in_rate.min(out_rate);
        let half_width = TAPS_AT_LOWER_RATE / 2.0 * in_rate / lower;
        Self {
            cutoff: ROLLOFF * lower / (2.0 * in_rate),
            half_width,
            reach: half_width.ceil() as isize,
        }
    }

    /// Coefficients for input offsets `k = -reach+1 ..= reach` around a position `frac` in [0, 1).
    fn coefficients(&self, frac: f64) -> Vec<f64> {
        let mut c: Vec<f64> = (-self.reach + 1..=self.reach)
            .map(|k| {
                let d = frac - k as f64;
                2.0 * self.cutoff * sinc(2.0 * self.cutoff * d) * kaiser_at(d / self.half_width, KAISER_BETA)
            })
            .collect();
        let sum: f64 = c.iter().sum();
        if sum.abs() > 0.0 {
            c.iter_mut().for_each(|v| *v /= sum);
        }
        c
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn integral(rate: f64) -> Option<u64> {
    (rate.fract() == 0.0 && rate > 0.0 && rate < 1e12).then_some(rate as u64)
}

pub fn resample(signal: &AudioSignal, target_rate: f64) -> Result<AudioSignal> {
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(Error::param(format!("target rate must be > 0, got {target_rate}")));
    }
    signal.validate()?;
    let in_rate = signal.sample_rate;
    if in_rate == target_rate {
        return Ok(signal.clone());
    }
    let x = &signal.samples;
    let out_len = (x.len() as f64 * target_rate / in_rate).ceil() as usize;
    let kernel = Kernel::new(in_rate, target_rate);

    let convolve = |base: isize, coeffs: &[f64]| -> f64 {
        coeffs
            .iter()
            .zip(-kernel.reach + 1..)
            .filter_map(|(c, k)| {
                let i = base + k;
                (i >= 0 && (i as usize) < x.len()).then(|| c * x[i as usize])
            })
            .sum()
    };

    let table = match (integral(in_rate), integral(target_rate)) {
        (Some(a), Some(b)) => {
            let g = gcd(a, b);
            let (up, down) = (b / g, a / g);
            (up <= MAX_TABLE_PHASES).then_some((up, down))
        }
        _ => None,
    };

    let samples: Vec<f64> = match table {
        Some((up, down)) => {
            let phases: Vec<Vec<f64>> = (0..up)
                .map(|p| kernel.coefficients(p as f64 / up as f64))
                .collect();
            (0..out_len as u64)
                .map(|n| {
                    let pos = n * down;
                    convolve((pos / up) as isize, &phases[(pos % up) as usize])
                })
                .collect()
        }
        None => (0..out_len)
            .map(|n| {
                let u = n as f64 * in_rate / target_rate;
                let base = u.floor();
                convolve(base as isize, &kernel.coefficients(u - base))
            })
            .collect(),
    };

    Ok(AudioSignal {
        samples,
        sample_rate: target_rate,
        label: signal.label.clone(),
    })
}
