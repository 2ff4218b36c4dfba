//! Windows, FIR design and filtering primitives.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::types::ChannelResponse;

/// Periodic Hann window (DFT-even), the COLA-friendly variant.
pub fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Symmetric Kaiser window of length `n`.
pub fn kaiser(n: usize, beta: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = bessel_i0(beta);
    let m = (n - 1) as f64;
    (0..n)
        .map(|i| {
            let r = 2.0 * i as f64 / m - 1.0;
            bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / denom
        })
        .collect()
}

/// Kaiser window evaluated at normalized position `r` in [-1, 1].
pub(crate) fn kaiser_at(r: f64, beta: f64) -> f64 {
    if r.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - r * r).sqrt()) / bessel_i0(beta)
}

pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Zero-phase FIR realizing a piecewise-linear log-magnitude response.
///
/// The desired magnitude is sampled on a dense grid, inverted, centered, truncated
/// to `taps` (odd) and tapered with a Kaiser (beta = 8) window.
pub fn channel_fir(channel: &ChannelResponse, sample_rate: f64, taps: usize) -> Result<Vec<f64>> {
    if taps % 2 == 0 {
        return Err(Error::param("channel FIR length must be odd"));
    }
    channel.validate(sample_rate)?;
    let grid = (taps * 32).next_power_of_two();
    let mut spectrum: Vec<Complex64> = (0..grid)
        .map(|k| {
            let bin = if k <= grid / 2 { k } else { grid - k };
            let f = bin as f64 * sample_rate / grid as f64;
            Complex64::new(10f64.powf(channel.gain_db_at(f) / 20.0), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(grid).process(&mut spectrum);
    let half = taps / 2;
    let window = kaiser(taps, 8.0);
    Ok((0..taps)
        .map(|i| {
            let lag = i as isize - half as isize;
            let idx = lag.rem_euclid(grid as isize) as usize;
            spectrum[idx].re / grid as f64 * window[i]
        })
        .collect())
}

/// Linear-phase windowed-sinc high-pass (spectral inversion of a unity-DC low-pass).
pub fn highpass_fir(cutoff: f64, sample_rate: f64, taps: usize) -> Result<Vec<f64>> {
    if taps % 2 == 0 || taps < 3 {
        return Err(Error::param("high-pass tap count must be odd and >= 3"));
    }
    if !(cutoff > 0.0 && cutoff < sample_rate / 2.0) {
        return Err(Error::param(format!(
            "high-pass cutoff {cutoff} Hz must be within (0, {}) Hz",
            sample_rate / 2.0
        )));
    }
    let half = (taps / 2) as f64;
    let fc = cutoff / sample_rate;
    let window = kaiser(taps, 8.0);
    let mut lp: Vec<f64> = (0..taps)
        .map(|i| 2.0 * fc * sinc(2.0 * fc * (i as f64 - half)) * window[i])
        .collect();
    let sum: f64 = lp.iter().sum();
    lp.iter_mut().for_each(|v| *v /= sum);
    let mut hp: Vec<f64> = lp.iter().map(|v| -v).collect();
    hp[taps / 2] += 1.0;
    Ok(hp)
}

/// How samples beyond the ends are synthesized when filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Zero,
    /// Point reflection about the end sample; preserves constant and linear trends.
    OddReflect,
}

/// Convolve with a centered odd-length kernel, output aligned with input (group delay removed).
pub fn filter_centered<T>(x: &[T], kernel: &[f64], edge: Edge) -> Vec<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = x.len();
    let half = kernel.len() / 2;
    if n == 0 {
        return Vec::new();
    }
    let at = |i: isize| -> T {
        if i >= 0 && (i as usize) < n {
            return x[i as usize];
        }
        match edge {
            Edge::Zero => T::default(),
            Edge::OddReflect => {
                if i < 0 {
                    let j = ((-i) as usize).min(n - 1);
                    x[0] + x[0] - x[j]
                } else {
                    let j = (2 * (n - 1)).saturating_sub(i as usize);
                    x[n - 1] + x[n - 1] - x[j.min(n - 1)]
                }
            }
        }
    };
    (0..n)
        .map(|i| {
            let mut acc = T::default();
            for (k, &h) in kernel.iter().enumerate() {
                let src = i as isize + half as isize - k as isize;
                acc = acc + at(src) * h;
            }
            acc
        })
        .collect()
}

/// Magnitude response of a real FIR at `freq`, with the kernel treated as centered.
pub fn fir_gain(kernel: &[f64], freq: f64, sample_rate: f64) -> f64 {
    let half = (kernel.len() / 2) as f64;
    let w = 2.0 * PI * freq / sample_rate;
    kernel
        .iter()
        .enumerate()
        .map(|(i, &h)| Complex64::from_polar(h, -w * (i as f64 - half)))
        .sum::<Complex64>()
        .norm()
}

pub fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_hann_is_cola_at_quarter_hop() {
        let w = hann_periodic(256);
        for n in 0..64 {
            let s: f64 = (0..4).map(|k| w[n + 64 * k]).sum();
            assert!((s - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kaiser_symmetric_and_unit_center() {
        let w = kaiser(257, 8.0);
        assert!((w[128] - 1.0).abs() < 1e-15);
        for i in 0..257 {
            assert!((w[i] - w[256 - i]).abs() < 1e-15);
        }
        assert!((kaiser_at(0.0, 8.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flat_channel_is_a_delta() {
        let h = channel_fir(&ChannelResponse::flat(3125.0), 6250.0, 257).unwrap();
        assert!((h[128] - 1.0).abs() < 1e-12);
        let off: f64 = h.iter().enumerate().filter(|(i, _)| *i != 128).map(|(_, v)| v.abs()).sum();
        assert!(off < 1e-12, "{off}");
    }

    #[test]
    fn highpass_rejects_dc_passes_band() {
        let h = highpass_fir(100.0, 6250.0, 255).unwrap();
        assert!(fir_gain(&h, 0.0, 6250.0) < 1e-3);
        assert!(20.0 * fir_gain(&h, 10.0, 6250.0).log10() < -40.0);
        assert!((20.0 * fir_gain(&h, 300.0, 6250.0).log10()).abs() < 0.5);
        assert!(highpass_fir(4000.0, 6250.0, 255).is_err());
        assert!(highpass_fir(100.0, 6250.0, 254).is_err());
    }

    #[test]
    fn odd_reflection_preserves_lines() {
        let x: Vec<f64> = (0..50).map(|i| 3.0 + 0.5 * i as f64).collect();
        let h = highpass_fir(200.0, 6250.0, 31).unwrap();
        let y = filter_centered(&x, &h, Edge::OddReflect);
        assert!(y.iter().all(|v| v.abs() < 1e-9));
    }
}
