//! Sound recovery from sound-bearing range bins.
//!
//! A vibrating reflector traces a short arc on the IQ plane around a static offset. After a
//! high-pass removes the offset and slow drift, the arc is close to a straight segment
//! through the origin, and projecting onto that segment's principal axis gives a real
//! waveform proportional to the displacement. The output waveform keeps, per time-frequency
//! cell, the stronger of the two Doppler halves with conjugate symmetry enforced so the
//! inverse transform is real.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::DetectionResult;
use crate::dsp::{filter_centered, highpass_fir, Edge};
use crate::error::{Error, Result};
use crate::io::{save_wav, WavEncoding};
use crate::metrics::{quietest_frames, snr_silent_samples};
use crate::spectral::{Spectrogram, Stft, StftConfig};
use crate::types::{AudioSignal, CirFrameSeries, Span};

pub const MIN_PROJECTION_SAMPLES: usize = 16;
pub const OUTPUT_PEAK: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoverConfig {
    pub highpass_cutoff: f64,
    pub highpass_taps: usize,
    pub stft: StftConfig,
    /// Silent spans in samples relative to the recovered span; the quietest 10% of 40 ms
    /// frames are used when empty.
    pub silent_spans: Vec<Span>,
    /// Candidate bins on either side of each detected bin.
    pub neighborhood: usize,
    /// Rotation added to the fitted angle, in radians (0 = optimal projection).
    pub angle_offset: f64,
    /// A detected bin takes part in separation only if one of its detection runs spans
    /// at least this many frames.
    pub min_run_frames: usize,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        Self {
            highpass_cutoff: 100.0,
            highpass_taps: 255,
            stft: StftConfig::default(),
            silent_spans: Vec::new(),
            neighborhood: 2,
            angle_offset: 0.0,
            min_run_frames: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    /// Principal-axis angle in `(-pi/2, pi/2]`.
    pub angle: f64,
    pub centered_samples: Vec<Complex64>,
    pub projected: Vec<f64>,
    /// Mean squared distance of the samples from the fitted line.
    pub residual_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSummary {
    pub angle: f64,
    pub residual_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredSound {
    pub audio: AudioSignal,
    pub receiver: usize,
    /// Bin the audio came from.
    pub bin: usize,
    /// All bins considered for this source.
    pub bins: Vec<usize>,
    /// Slow-time samples covered by `audio`.
    pub span: Span,
    pub snr_db: f64,
    pub projection: ProjectionSummary,
    projected: Vec<f64>,
}

impl RecoveredSound {
    /// Real signal on the fitted line, before spectrogram recombination.
    pub fn projected(&self) -> &[f64] {
        &self.projected
    }

    pub fn sidecar(&self) -> RecoveredSidecar {
        RecoveredSidecar {
            schema_version: 1,
            receiver: self.receiver,
            bin: self.bin,
            bins: self.bins.clone(),
            span: self.span,
            sample_rate: self.audio.sample_rate,
            angle: self.projection.angle,
            residual_power: self.projection.residual_power,
            snr_db: self.snr_db.is_finite().then_some(self.snr_db),
        }
    }

    /// Write `<stem>.wav` and `<stem>.json` into `dir`, returning the WAV path.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        let wav = dir.join(format!("{stem}.wav"));
        save_wav(&self.audio, &wav, WavEncoding::Float32)?;
        let json = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(&json, text + "\n").map_err(|e| Error::io(&json, e))?;
        Ok(wav)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredSidecar {
    pub schema_version: u32,
    pub receiver: usize,
    pub bin: usize,
    pub bins: Vec<usize>,
    pub span: Span,
    pub sample_rate: f64,
    pub angle: f64,
    pub residual_power: f64,
    pub snr_db: Option<f64>,
}

/// Zero-phase FIR high-pass applied to I and Q.
pub fn highpass(samples: &[Complex64], cutoff: f64, sample_rate: f64, taps: usize) -> Result<Vec<Complex64>> {
    let h = highpass_fir(cutoff, sample_rate, taps)?;
    Ok(filter_centered(samples, &h, Edge::OddReflect))
}

/// `sum_t Im{g(t) e^{-j angle}}^2`: squared distance of the samples from the line at `angle`.
pub fn line_residual(samples: &[Complex64], angle: f64) -> f64 {
    let rot = Complex64::from_polar(1.0, -angle);
    samples.iter().map(|g| (g * rot).im.powi(2)).sum()
}

/// Least-squares line through the origin, in closed form.
pub fn project_line(centered: &[Complex64]) -> Result<ProjectionResult> {
    let angle = principal_angle(centered)?;
    Ok(project_at(centered, angle))
}

fn principal_angle(centered: &[Complex64]) -> Result<f64> {
    if centered.len() < MIN_PROJECTION_SAMPLES {
        return Err(Error::param(format!(
            "line projection needs >= {MIN_PROJECTION_SAMPLES} samples, got {}",
            centered.len()
        )));
    }
    if centered.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::Degenerate("line projection of an all-zero signal".into()));
    }
    let (mut cross, mut diff) = (0.0, 0.0);
    for z in centered {
        cross += z.re * z.im;
        diff += z.re * z.re - z.im * z.im;
    }
    Ok(0.5 * (2.0 * cross).atan2(diff))
}

/// Projection onto the line at an arbitrary angle.
pub fn project_at(centered: &[Complex64], angle: f64) -> ProjectionResult {
    let rot = Complex64::from_polar(1.0, -angle);
    let projected: Vec<f64> = centered.iter().map(|g| (g * rot).re).collect();
    let residual_power = line_residual(centered, angle) / centered.len().max(1) as f64;
    ProjectionResult {
        angle,
        centered_samples: centered.to_vec(),
        projected,
        residual_power,
    }
}

/// Keep the stronger Doppler half per cell and mirror it, so the inverse transform is real.
fn max_half_spectrogram(spec: &Spectrogram, config: &StftConfig) -> Spectrogram {
    let n = config.frame_length as isize;
    let mut out = Spectrogram::zeros(spec.num_rows, spec.num_frames);
    for k in 0..spec.num_frames {
        let dc = config.row_of(0);
        out.set(dc, k, Complex64::new(spec.get(dc, k).re, 0.0));
        let nyq = config.row_of(-n / 2);
        out.set(nyq, k, Complex64::new(spec.get(nyq, k).re, 0.0));
        for f in 1..n / 2 {
            let pos = spec.get(config.row_of(f), k);
            let neg = spec.get(config.row_of(-f), k).conj();
            let y = if pos.norm_sqr() >= neg.norm_sqr() { pos } else { neg };
            out.set(config.row_of(f), k, y);
            out.set(config.row_of(-f), k, y.conj());
        }
    }
    out
}

fn snr_of(projected: &[f64], config: &RecoverConfig, sample_rate: f64) -> Result<f64> {
    if config.silent_spans.is_empty() {
        let frame = (0.04 * sample_rate).round() as usize;
        snr_silent_samples(projected, &quietest_frames(projected, frame, 0.1))
    } else {
        snr_silent_samples(projected, &config.silent_spans)
    }
}

/// High-pass, line projection and max-half spectrogram recombination for one bin, over the
/// slow-time samples in `span`.
pub fn recover_bin(
    cir: &CirFrameSeries,
    receiver: usize,
    bin: usize,
    span: Span,
    config: &RecoverConfig,
) -> Result<RecoveredSound> {
    config.stft.validate()?;
    if receiver >= cir.num_receivers() || bin >= cir.num_range_bins() {
        return Err(Error::param(format!("receiver {receiver} / bin {bin} outside the CIR")));
    }
    if span.end > cir.num_samples() || span.len() < config.stft.frame_length {
        return Err(Error::param(format!(
            "span [{}, {}) is shorter than one {}-sample frame or exceeds the CIR",
            span.start, span.end, config.stft.frame_length
        )));
    }
    let fs = cir.params.slow_time_rate;
    let filtered = highpass(cir.bin_series(receiver, bin), config.highpass_cutoff, fs, config.highpass_taps)?;
    let centered = &filtered[span.start..span.end];
    let fitted = principal_angle(centered)?;
    let projection = project_at(centered, fitted + config.angle_offset);

    let rot = Complex64::from_polar(1.0, -projection.angle);
    let n = config.stft.frame_length;
    let hop = config.stft.hop();
    // pad so every output sample is covered by full window overlap
    let lead = n - hop;
    let body = centered.len() + lead;
    let frames = body.saturating_sub(n).div_ceil(hop) + 1;
    let mut padded = vec![Complex64::new(0.0, 0.0); config.stft.signal_length(frames) + lead];
    for (dst, g) in padded[lead..].iter_mut().zip(centered) {
        *dst = g * rot;
    }
    let engine = Stft::new(config.stft)?;
    let spec = engine.forward(&padded)?;
    let rebuilt = engine.inverse(&max_half_spectrogram(&spec, &config.stft))?;
    let mut samples: Vec<f64> = rebuilt[lead..lead + centered.len()].iter().map(|c| c.re).collect();

    // signed peak: the largest-magnitude sample comes out positive
    let peak = samples.iter().fold(0.0f64, |m, v| if v.abs() > m.abs() { *v } else { m });
    if peak == 0.0 {
        return Err(Error::Degenerate(format!("bin {bin} recovered to silence")));
    }
    let gain = OUTPUT_PEAK / peak;
    samples.iter_mut().for_each(|v| *v *= gain);

    let snr_db = snr_of(&projection.projected, config, fs)?;
    Ok(RecoveredSound {
        audio: AudioSignal {
            samples,
            sample_rate: fs,
            label: Some(format!("rx{receiver}-bin{bin}")),
        },
        receiver,
        bin,
        bins: vec![bin],
        span,
        snr_db,
        projection: ProjectionSummary {
            angle: projection.angle,
            residual_power: projection.residual_power,
        },
        projected: projection.projected,
    })
}

/// Selection combining: the candidate with the highest silent-moment SNR. With a silent
/// span given (samples relative to each candidate's start), SNRs are re-estimated on it.
pub fn combine_diversity(candidates: Vec<RecoveredSound>, silent: Option<Span>) -> Result<RecoveredSound> {
    if candidates.is_empty() {
        return Err(Error::param("no candidates to combine"));
    }
    let mut best: Option<RecoveredSound> = None;
    for mut c in candidates {
        if let Some(s) = silent {
            c.snr_db = snr_silent_samples(&c.projected, &[s])?;
        }
        let better = match &best {
            None => true,
            Some(b) => c.snr_db > b.snr_db,
        };
        if better {
            best = Some(c);
        }
    }
    Ok(best.expect("non-empty"))
}

/// Group detected bins into sources: bins closer than `neighborhood + 1` join one group.
pub fn group_bins(detected: &[usize], neighborhood: usize) -> Vec<Vec<usize>> {
    let mut bins = detected.to_vec();
    bins.sort_unstable();
    bins.dedup();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for b in bins {
        match groups.last_mut() {
            Some(g) if b - *g.last().unwrap() <= neighborhood => g.push(b),
            _ => groups.push(vec![b]),
        }
    }
    groups
}

/// One recovered signal per group of detected bins, ordered by range.
pub fn separate_sources(
    cir: &CirFrameSeries,
    detections: &DetectionResult,
    config: &RecoverConfig,
) -> Result<Vec<RecoveredSound>> {
    let persistent = detections.persistent(config.min_run_frames.max(1)).detected_bins;
    let detected: Vec<usize> = persistent.iter().map(|b| b.bin).collect();
    let groups = group_bins(&detected, config.neighborhood);
    let hop = config.stft.hop();
    let n = config.stft.frame_length;
    let mut out = Vec::with_capacity(groups.len());
    for group in groups {
        let runs = persistent.iter().filter(|b| group.contains(&b.bin));
        let (first, last) = runs.fold((usize::MAX, 0), |(a, z), b| (a.min(b.frames.start), z.max(b.frames.end)));
        let mut span = Span::new(first * hop, ((last - 1) * hop + n).min(cir.num_samples()));
        if span.len() < n {
            span = Span::new(span.end.saturating_sub(n), span.end.max(n).min(cir.num_samples()));
        }
        let lo = group[0].saturating_sub(config.neighborhood);
        let hi = (group[group.len() - 1] + config.neighborhood).min(cir.num_range_bins() - 1);
        let candidates: Vec<(usize, usize)> = (0..cir.num_receivers())
            .flat_map(|rx| (lo..=hi).map(move |b| (rx, b)))
            .collect();
        let recovered: Vec<RecoveredSound> = candidates
            .par_iter()
            .filter_map(|&(rx, b)| match recover_bin(cir, rx, b, span, config) {
                Ok(r) => Some(Ok(r)),
                Err(Error::Degenerate(_)) => None,
                Err(e) => Some(Err(e)),
            })
            .collect::<Result<Vec<_>>>()?;
        if recovered.is_empty() {
            continue;
        }
        let mut best = combine_diversity(recovered, None)?;
        best.bins = (lo..=hi).collect();
        out.push(best);
    }
    out.sort_by_key(|r| r.bin);
    Ok(out)
}
