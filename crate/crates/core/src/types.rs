//! Domain types shared by every stage of the pipeline.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Radar front-end parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadarParams {
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
    /// Sweep bandwidth in Hz; sets the range resolution.
    pub bandwidth: f64,
    /// Chirp repetition rate (slow-time sampling rate) in Hz.
    pub slow_time_rate: f64,
    pub num_range_bins: usize,
    pub num_receivers: usize,
}

impl Default for RadarParams {
    fn default() -> Self {
        Self {
            carrier_frequency: 77e9,
            bandwidth: 3.52e9,
            slow_time_rate: 6250.0,
            num_range_bins: 256,
            num_receivers: 8,
        }
    }
}

impl RadarParams {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Width of one range bin, `c / (2 B)`.
    pub fn range_bin_spacing(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth)
    }

    /// Extent of the range axis in meters.
    pub fn max_range(&self) -> f64 {
        self.num_range_bins as f64 * self.range_bin_spacing()
    }

    /// Range bin containing `range`, or `None` when outside the axis.
    pub fn bin_of(&self, range: f64) -> Option<usize> {
        if !(range >= 0.0) || range >= self.max_range() {
            return None;
        }
        Some(((range / self.range_bin_spacing()).floor() as usize).min(self.num_range_bins - 1))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_frequency", self.carrier_frequency),
            ("bandwidth", self.bandwidth),
            ("slow_time_rate", self.slow_time_rate),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if self.num_range_bins == 0 {
            return Err(Error::param("num_range_bins must be >= 1"));
        }
        if self.num_receivers == 0 {
            return Err(Error::param("num_receivers must be >= 1"));
        }
        Ok(())
    }
}

/// Real-valued audio at a known sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        let signal = Self {
            samples,
            sample_rate,
            label: None,
        };
        signal.validate()?;
        Ok(signal)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::param(format!("sample_rate must be > 0, got {}", self.sample_rate)));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::param(format!("non-finite audio sample at index {i}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}

/// Surface displacement in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementSignal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

impl DisplacementSignal {
    /// Anything at or above a millimeter is a scaling mistake, not sound.
    pub const MAX_ABS: f64 = 1e-3;

    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return Err(Error::param("displacement sample_rate must be > 0"));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.is_finite() || s.abs() >= Self::MAX_ABS {
                return Err(Error::param(format!(
                    "displacement sample {i} = {s} m is non-finite or >= 1 mm"
                )));
            }
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }
}

/// Piecewise-linear log-magnitude frequency response of the sound-to-vibration path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelResponse {
    pub breakpoint_frequencies: Vec<f64>,
    pub breakpoint_gains_db: Vec<f64>,
    #[serde(default)]
    pub jitter_db: f64,
}

impl ChannelResponse {
    /// 0 dB everywhere up to `nyquist`.
    pub fn flat(nyquist: f64) -> Self {
        Self {
            breakpoint_frequencies: vec![0.0, nyquist],
            breakpoint_gains_db: vec![0.0, 0.0],
            jitter_db: 0.0,
        }
    }

    /// Flat passband up to `edge_start`, linear-in-dB roll to `stop_db` at `edge_stop`, flat after.
    pub fn lowpass(edge_start: f64, edge_stop: f64, stop_db: f64, nyquist: f64) -> Self {
        let mut breakpoint_frequencies = vec![0.0, edge_start, edge_stop];
        let mut breakpoint_gains_db = vec![0.0, 0.0, stop_db];
        if edge_stop < nyquist {
            breakpoint_frequencies.push(nyquist);
            breakpoint_gains_db.push(stop_db);
        }
        Self {
            breakpoint_frequencies,
            breakpoint_gains_db,
            jitter_db: 0.0,
        }
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        let f = &self.breakpoint_frequencies;
        let g = &self.breakpoint_gains_db;
        if f.len() != g.len() || f.len() < 2 {
            return Err(Error::param(
                "channel needs >= 2 breakpoints with matching frequency/gain arrays",
            ));
        }
        if !(self.jitter_db >= 0.0 && self.jitter_db.is_finite()) {
            return Err(Error::param("jitter_db must be finite and >= 0"));
        }
        let nyquist = sample_rate / 2.0;
        for w in f.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::param("breakpoint frequencies must be strictly ascending"));
            }
        }
        if f[0] < 0.0 || *f.last().unwrap() > nyquist * (1.0 + 1e-12) {
            return Err(Error::param(format!(
                "breakpoint frequencies must lie within [0, {nyquist}] Hz"
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("breakpoint gains must be finite"));
        }
        Ok(())
    }

    /// Gain in dB at `freq`, held constant beyond the first and last breakpoints.
    pub fn gain_db_at(&self, freq: f64) -> f64 {
        let f = &self.breakpoint_frequencies;
        let g = &self.breakpoint_gains_db;
        if freq <= f[0] {
            return g[0];
        }
        for i in 1..f.len() {
            if freq <= f[i] {
                let t = (freq - f[i - 1]) / (f[i] - f[i - 1]);
                return g[i - 1] + t * (g[i] - g[i - 1]);
            }
        }
        *g.last().unwrap()
    }
}

/// Complex CIR stream `[receiver][range bin][slow time]`, slow time contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct CirFrameSeries {
    data: Vec<Complex64>,
    num_samples: usize,
    pub params: RadarParams,
    pub range_bin_spacing: f64,
}

impl CirFrameSeries {
    pub fn zeros(params: RadarParams, num_samples: usize) -> Self {
        let len = params.num_receivers * params.num_range_bins * num_samples;
        Self {
            data: vec![Complex64::new(0.0, 0.0); len],
            num_samples,
            params,
            range_bin_spacing: params.range_bin_spacing(),
        }
    }

    pub fn from_raw(params: RadarParams, num_samples: usize, data: Vec<Complex64>) -> Result<Self> {
        params.validate()?;
        let expected = params.num_receivers * params.num_range_bins * num_samples;
        if data.len() != expected {
            return Err(Error::param(format!(
                "CIR payload has {} samples, expected {expected}",
                data.len()
            )));
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::param("CIR contains non-finite samples"));
        }
        Ok(Self {
            data,
            num_samples,
            params,
            range_bin_spacing: params.range_bin_spacing(),
        })
    }

    pub fn num_receivers(&self) -> usize {
        self.params.num_receivers
    }

    pub fn num_range_bins(&self) -> usize {
        self.params.num_range_bins
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    fn offset(&self, receiver: usize, bin: usize) -> usize {
        assert!(receiver < self.num_receivers() && bin < self.num_range_bins());
        (receiver * self.num_range_bins() + bin) * self.num_samples
    }

    /// Slow-time samples of one (receiver, bin) cell.
    pub fn bin_series(&self, receiver: usize, bin: usize) -> &[Complex64] {
        let o = self.offset(receiver, bin);
        &self.data[o..o + self.num_samples]
    }

    pub fn bin_series_mut(&mut self, receiver: usize, bin: usize) -> &mut [Complex64] {
        let o = self.offset(receiver, bin);
        let n = self.num_samples;
        &mut self.data[o..o + n]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|c| *c *= s);
        out
    }
}

/// Half-open frame interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, i: usize) -> bool {
        i >= self.start && i < self.end
    }
}
