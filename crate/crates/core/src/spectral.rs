//! STFT / ISTFT and range-Doppler spectrograms.
//!
//! Frequency rows are two-sided and DC-centered: row `i` holds FFT index `i - N/2`,
//! so row 0 is `-N/2` and row `N - 1` is `N/2 - 1`. Frame `k` covers samples
//! `[k * hop, k * hop + N)`. The forward transform is unnormalized, so per frame
//! `sum |X|^2 = N * sum |w x|^2`.

use std::sync::Arc;

use num_complex::{Complex32, Complex64};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dsp::hann_periodic;
use crate::error::{Error, Result};
use crate::io::{Metadata, Tensor, TensorData};
use crate::types::CirFrameSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub frame_length: usize,
    pub overlap: f64,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            frame_length: 256,
            overlap: 0.75,
        }
    }
}

impl StftConfig {
    pub fn hop(&self) -> usize {
        (self.frame_length as f64 * (1.0 - self.overlap)).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !self.frame_length.is_power_of_two() || self.frame_length < 4 {
            return Err(Error::param(format!(
                "frame_length must be a power of two >= 4, got {}",
                self.frame_length
            )));
        }
        if self.overlap != 0.5 && self.overlap != 0.75 {
            return Err(Error::param(format!("overlap must be 0.5 or 0.75, got {}", self.overlap)));
        }
        Ok(())
    }

    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.frame_length {
            0
        } else {
            (len - self.frame_length) / self.hop() + 1
        }
    }

    /// Number of samples reconstructed from `frames` frames.
    pub fn signal_length(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop() + self.frame_length
        }
    }

    /// Row index holding signed FFT index `k` (`-N/2 <= k < N/2`).
    pub fn row_of(&self, k: isize) -> usize {
        (k + (self.frame_length / 2) as isize) as usize
    }

    /// Signed FFT index of row `row`.
    pub fn index_of_row(&self, row: usize) -> isize {
        row as isize - (self.frame_length / 2) as isize
    }

    pub fn row_frequency(&self, row: usize, sample_rate: f64) -> f64 {
        self.index_of_row(row) as f64 * sample_rate / self.frame_length as f64
    }
}

/// Complex STFT matrix, `[freq row][frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub data: Vec<Complex64>,
    pub num_rows: usize,
    pub num_frames: usize,
}

impl Spectrogram {
    pub fn zeros(num_rows: usize, num_frames: usize) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); num_rows * num_frames],
            num_rows,
            num_frames,
        }
    }

    pub fn get(&self, row: usize, frame: usize) -> Complex64 {
        self.data[row * self.num_frames + frame]
    }

    pub fn set(&mut self, row: usize, frame: usize, v: Complex64) {
        self.data[row * self.num_frames + frame] = v;
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.num_frames..(row + 1) * self.num_frames]
    }

    pub fn frame_energy(&self, frame: usize) -> f64 {
        (0..self.num_rows).map(|r| self.get(r, frame).norm_sqr()).sum()
    }
}

/// Reusable STFT engine holding the window and FFT plans.
#[derive(Clone)]
pub struct Stft {
    pub config: StftConfig,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Stft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stft").field("config", &self.config).finish()
    }
}

impl Stft {
    pub fn new(config: StftConfig) -> Result<Self> {
        config.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            window: hann_periodic(config.frame_length),
            forward: planner.plan_fft_forward(config.frame_length),
            inverse: planner.plan_fft_inverse(config.frame_length),
            config,
        })
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn forward(&self, signal: &[Complex64]) -> Result<Spectrogram> {
        let n = self.config.frame_length;
        if signal.len() < n {
            return Err(Error::param(format!(
                "signal of {} samples is shorter than one {n}-sample frame",
                signal.len()
            )));
        }
        let hop = self.config.hop();
        let frames = self.config.num_frames(signal.len());
        let mut out = Spectrogram::zeros(n, frames);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for k in 0..frames {
            let seg = &signal[k * hop..k * hop + n];
            for ((b, s), w) in buf.iter_mut().zip(seg).zip(&self.window) {
                *b = s * w;
            }
            self.forward.process_with_scratch(&mut buf, &mut scratch);
            for (i, v) in buf.iter().enumerate() {
                // fftshift: FFT index i maps to signed index i (i < N/2) or i - N
                let row = (i + n / 2) % n;
                out.set(row, k, *v);
            }
        }
        Ok(out)
    }

    pub fn forward_real(&self, signal: &[f64]) -> Result<Spectrogram> {
        let c: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&c)
    }

    /// Weighted overlap-add inverse, normalized pointwise by the summed squared window.
    pub fn inverse(&self, spec: &Spectrogram) -> Result<Vec<Complex64>> {
        let n = self.config.frame_length;
        if spec.num_rows != n {
            return Err(Error::param(format!(
                "spectrogram has {} rows, config expects {n}",
                spec.num_rows
            )));
        }
        let hop = self.config.hop();
        let len = self.config.signal_length(spec.num_frames);
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        let mut norm = vec![0.0; len];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        for k in 0..spec.num_frames {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = spec.get((i + n / 2) % n, k);
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            let base = k * hop;
            for i in 0..n {
                let w = self.window[i];
                out[base + i] += buf[i] * (w / n as f64);
                norm[base + i] += w * w;
            }
        }
        for (o, w) in out.iter_mut().zip(&norm) {
            if *w > 1e-10 {
                *o /= *w;
            } else {
                *o = Complex64::new(0.0, 0.0);
            }
        }
        Ok(out)
    }
}

pub fn stft(signal: &[Complex64], config: StftConfig) -> Result<Spectrogram> {
    Stft::new(config)?.forward(signal)
}

pub fn istft(spec: &Spectrogram, config: StftConfig) -> Result<Vec<Complex64>> {
    Stft::new(config)?.inverse(spec)
}

/// Range-Doppler spectrogram `[receiver][freq row][range bin][frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerSpectrogram {
    data: Vec<Complex64>,
    pub num_receivers: usize,
    pub num_range_bins: usize,
    pub num_frames: usize,
    pub config: StftConfig,
    pub slow_time_rate: f64,
}

impl RangeDopplerSpectrogram {
    pub fn num_rows(&self) -> usize {
        self.config.frame_length
    }

    fn index(&self, rx: usize, row: usize, bin: usize, frame: usize) -> usize {
        ((rx * self.num_rows() + row) * self.num_range_bins + bin) * self.num_frames + frame
    }

    pub fn get(&self, rx: usize, row: usize, bin: usize, frame: usize) -> Complex64 {
        self.data[self.index(rx, row, bin, frame)]
    }

    /// `|G|` over all frames for one (receiver, row, bin).
    pub fn magnitudes(&self, rx: usize, row: usize, bin: usize) -> impl Iterator<Item = f64> + '_ {
        let start = self.index(rx, row, bin, 0);
        self.data[start..start + self.num_frames].iter().map(|c| c.norm())
    }

    pub fn row_frequency(&self, row: usize) -> f64 {
        self.config.row_frequency(row, self.slow_time_rate)
    }

    /// Copy out the `[row][frame]` matrix of one (receiver, bin).
    pub fn cell_spectrogram(&self, rx: usize, bin: usize) -> Spectrogram {
        let mut s = Spectrogram::zeros(self.num_rows(), self.num_frames);
        for row in 0..self.num_rows() {
            for k in 0..self.num_frames {
                s.set(row, k, self.get(rx, row, bin, k));
            }
        }
        s
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn to_tensor(&self) -> (Tensor, Metadata) {
        let data = self
            .data
            .iter()
            .map(|c| Complex32::new(c.re as f32, c.im as f32))
            .collect();
        let dims = vec![self.num_receivers, self.num_rows(), self.num_range_bins, self.num_frames];
        let mut meta = Metadata::new();
        meta.insert("frame_length".into(), Value::from(self.config.frame_length));
        meta.insert("hop".into(), Value::from(self.config.hop()));
        meta.insert("window".into(), Value::from("hann-periodic"));
        meta.insert("slow_time_rate".into(), Value::from(self.slow_time_rate));
        (Tensor { dims, data: TensorData::Complex64(data) }, meta)
    }

    pub fn from_tensor(tensor: &Tensor, meta: &Metadata) -> Result<Self> {
        let TensorData::Complex64(values) = &tensor.data else {
            return Err(Error::format("RSPG", "spectrogram tensor must be complex64"));
        };
        let [rx, rows, bins, frames] = tensor.dims[..] else {
            return Err(Error::format("RSPG", "spectrogram tensor must have 4 dimensions"));
        };
        let hop = meta.get("hop").and_then(Value::as_u64).unwrap_or(rows as u64 / 4) as f64;
        let config = StftConfig {
            frame_length: rows,
            overlap: 1.0 - hop / rows as f64,
        };
        config.validate()?;
        let slow_time_rate = meta
            .get("slow_time_rate")
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::format("RSPG", "spectrogram metadata lacks slow_time_rate"))?;
        Ok(Self {
            data: values.iter().map(|c| Complex64::new(c.re as f64, c.im as f64)).collect(),
            num_receivers: rx,
            num_range_bins: bins,
            num_frames: frames,
            config,
            slow_time_rate,
        })
    }
}

/// STFT of every (receiver, range bin) slow-time series.
pub fn range_doppler(cir: &CirFrameSeries, config: StftConfig) -> Result<RangeDopplerSpectrogram> {
    let engine = Stft::new(config)?;
    let frames = config.num_frames(cir.num_samples());
    if frames == 0 {
        return Err(Error::param(format!(
            "slow-time length {} is shorter than one frame",
            cir.num_samples()
        )));
    }
    let (nrx, nbins, rows) = (cir.num_receivers(), cir.num_range_bins(), config.frame_length);
    let cells: Vec<Spectrogram> = (0..nrx * nbins)
        .into_par_iter()
        .map(|i| engine.forward(cir.bin_series(i / nbins, i % nbins)))
        .collect::<Result<_>>()?;
    let mut data = vec![Complex64::new(0.0, 0.0); nrx * rows * nbins * frames];
    for (i, cell) in cells.iter().enumerate() {
        let (rx, bin) = (i / nbins, i % nbins);
        for row in 0..rows {
            let dst = ((rx * rows + row) * nbins + bin) * frames;
            data[dst..dst + frames].copy_from_slice(cell.row(row));
        }
    }
    Ok(RangeDopplerSpectrogram {
        data,
        num_receivers: nrx,
        num_range_bins: nbins,
        num_frames: frames,
        config,
        slow_time_rate: cir.params.slow_time_rate,
    })
}

/// One-sided magnitude rows `0..rows` (DC upward, Nyquist excluded) as `[row][frame]`.
pub fn one_sided_magnitude(spec: &Spectrogram, rows: usize) -> Vec<Vec<f64>> {
    let center = spec.num_rows / 2;
    (0..rows.min(center))
        .map(|k| spec.row(center + k).iter().map(|c| c.norm()).collect())
        .collect()
}
