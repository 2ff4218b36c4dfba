//! Sound detection and localization on range-Doppler spectrograms.
//!
//! The sound metric exploits the symmetry of vibration Doppler: a vibrating surface
//! moves back and forth, so matched `+f` / `-f` rows carry equal magnitude, while
//! directed motion lights up one side only. For each (bin, frame),
//!
//! ```text
//! m = sum_f |G+(f) G-(f)|^2 / max(sum_f |G+(f)|^2, sum_f |G-(f)|^2)
//! ```
//!
//! where `G+/-` are magnitudes with the per-(row, bin) median noise floor removed and
//! clamped at zero. Rows closer to DC than the guard are excluded.
//!
//! Cells are labeled with a positive-side MAD outlier test over a sliding history of
//! frames. CFAR and HHI detectors are provided as baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::RangeDopplerSpectrogram;
use crate::types::Span;

pub const MIN_FRAMES: usize = 25;
pub const MAD_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MetricForm {
    /// Quartic numerator over quadratic denominator, as defined.
    #[default]
    Literal,
    /// `sum |G+ G-|` over the same denominator; dimensionless, at most 1.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub dc_guard_hz: f64,
    pub form: MetricForm,
    pub threshold_scale: f64,
    pub history_frames: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            dc_guard_hz: 60.0,
            form: MetricForm::Literal,
            threshold_scale: 6.0,
            history_frames: 250,
        }
    }
}

/// Dense `[bin][frame]` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BinFrameMap<T> {
    pub num_bins: usize,
    pub num_frames: usize,
    data: Vec<T>,
}

impl<T: Copy> BinFrameMap<T> {
    pub fn filled(num_bins: usize, num_frames: usize, value: T) -> Self {
        Self {
            num_bins,
            num_frames,
            data: vec![value; num_bins * num_frames],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let num_bins = rows.len();
        let num_frames = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == num_frames), "ragged map");
        Self {
            num_bins,
            num_frames,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn get(&self, bin: usize, frame: usize) -> T {
        self.data[bin * self.num_frames + frame]
    }

    pub fn set(&mut self, bin: usize, frame: usize, v: T) {
        self.data[bin * self.num_frames + frame] = v;
    }

    pub fn bin(&self, bin: usize) -> &[T] {
        &self.data[bin * self.num_frames..(bin + 1) * self.num_frames]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn frame(&self, frame: usize) -> impl Iterator<Item = T> + '_ {
        (0..self.num_bins).map(move |b| self.get(b, frame))
    }

    pub fn same_shape<U>(&self, other: &BinFrameMap<U>) -> bool {
        self.num_bins == other.num_bins && self.num_frames == other.num_frames
    }
}

impl BinFrameMap<f64> {
    /// Element-wise maximum, used to pool receivers.
    pub fn max_with(&mut self, other: &Self) {
        assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = a.max(*b);
        }
    }
}

/// Per-(row, bin) median of `|G|` over frames, `[row][bin]` flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFloor {
    pub num_rows: usize,
    pub num_bins: usize,
    pub values: Vec<f64>,
}

impl NoiseFloor {
    pub fn get(&self, row: usize, bin: usize) -> f64 {
        self.values[row * self.num_bins + bin]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoundMetricMap {
    pub values: BinFrameMap<f64>,
    pub noise_floor: NoiseFloor,
    pub config: DetectConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMethod {
    RadiomicOutlier,
    RadiomicThreshold,
    Cfar,
    Hhi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinSpan {
    pub bin: usize,
    pub frames: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub labels: BinFrameMap<bool>,
    pub detected_bins: Vec<BinSpan>,
    pub method: DetectionMethod,
}

impl DetectionResult {
    pub fn from_labels(labels: BinFrameMap<bool>, method: DetectionMethod) -> Self {
        let mut detected_bins = Vec::new();
        for bin in 0..labels.num_bins {
            let row = labels.bin(bin);
            let mut k = 0;
            while k < row.len() {
                if row[k] {
                    let start = k;
                    while k < row.len() && row[k] {
                        k += 1;
                    }
                    detected_bins.push(BinSpan { bin, frames: Span::new(start, k) });
                } else {
                    k += 1;
                }
            }
        }
        Self {
            labels,
            detected_bins,
            method,
        }
    }

    pub fn count(&self) -> usize {
        self.labels.values().iter().filter(|v| **v).count()
    }

    pub fn is_empty(&self) -> bool {
        self.detected_bins.is_empty()
    }

    /// Keep only runs spanning at least `min_frames` frames.
    pub fn persistent(&self, min_frames: usize) -> DetectionResult {
        let mut labels = BinFrameMap::filled(self.labels.num_bins, self.labels.num_frames, false);
        for run in self.detected_bins.iter().filter(|b| b.frames.len() >= min_frames) {
            for k in run.frames.start..run.frames.end {
                labels.set(run.bin, k, true);
            }
        }
        Self::from_labels(labels, self.method)
    }

    /// OR-combine labels of the same shape.
    pub fn union(results: &[DetectionResult]) -> Result<DetectionResult> {
        let first = results.first().ok_or_else(|| Error::param("no detection results to combine"))?;
        let mut labels = first.labels.clone();
        for r in &results[1..] {
            if !labels.same_shape(&r.labels) {
                return Err(Error::param("detection maps differ in shape"));
            }
            for (a, b) in labels.data.iter_mut().zip(&r.labels.data) {
                *a |= *b;
            }
        }
        Ok(DetectionResult::from_labels(labels, first.method))
    }

    pub fn to_json(&self) -> DetectionJson {
        DetectionJson {
            schema_version: 1,
            method: self.method,
            num_bins: self.labels.num_bins,
            num_frames: self.labels.num_frames,
            runs: self.detected_bins.iter().map(|b| [b.bin, b.frames.start, b.frames.end]).collect(),
        }
    }

    pub fn from_json(json: &DetectionJson) -> Result<Self> {
        let mut labels = BinFrameMap::filled(json.num_bins, json.num_frames, false);
        for &[bin, start, end] in &json.runs {
            if bin >= json.num_bins || end > json.num_frames || start > end {
                return Err(Error::format("detection JSON", format!("run [{bin}, {start}, {end}] out of bounds")));
            }
            for k in start..end {
                labels.set(bin, k, true);
            }
        }
        Ok(Self::from_labels(labels, json.method))
    }
}

/// Serialized detection labels, run-length encoded as `[bin, start_frame, end_frame)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionJson {
    pub schema_version: u32,
    pub method: DetectionMethod,
    pub num_bins: usize,
    pub num_frames: usize,
    pub runs: Vec<[usize; 3]>,
}

fn check_receiver(spec: &RangeDopplerSpectrogram, receiver: usize) -> Result<()> {
    if receiver >= spec.num_receivers {
        return Err(Error::param(format!(
            "receiver {receiver} out of range ({} receivers)",
            spec.num_receivers
        )));
    }
    Ok(())
}

pub(crate) fn median_in_place(v: &mut [f64]) -> f64 {
    assert!(!v.is_empty());
    let n = v.len();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::MIN, f64::max);
        0.5 * (lower + upper)
    }
}

pub fn noise_floor(spec: &RangeDopplerSpectrogram, receiver: usize) -> Result<NoiseFloor> {
    check_receiver(spec, receiver)?;
    if spec.num_frames < MIN_FRAMES {
        return Err(Error::param(format!(
            "noise floor needs >= {MIN_FRAMES} frames, got {}",
            spec.num_frames
        )));
    }
    let rows = spec.num_rows();
    let bins = spec.num_range_bins;
    let mut values = vec![0.0; rows * bins];
    let mut scratch = Vec::with_capacity(spec.num_frames);
    for row in 0..rows {
        for bin in 0..bins {
            scratch.clear();
            scratch.extend(spec.magnitudes(receiver, row, bin));
            values[row * bins + bin] = median_in_place(&mut scratch);
        }
    }
    Ok(NoiseFloor {
        num_rows: rows,
        num_bins: bins,
        values,
    })
}

/// Signed FFT indices `f > 0` whose `+f` / `-f` rows enter the metric.
fn metric_indices(spec: &RangeDopplerSpectrogram, dc_guard_hz: f64) -> Vec<isize> {
    let half = (spec.num_rows() / 2) as isize;
    let df = spec.slow_time_rate / spec.num_rows() as f64;
    (1..half).filter(|&k| k as f64 * df >= dc_guard_hz).collect()
}

/// Equation core for one cell given floor-subtracted, clamped magnitude pairs.
pub fn metric_from_pairs(pairs: impl Iterator<Item = (f64, f64)>, form: MetricForm) -> f64 {
    let (mut num, mut pos, mut neg) = (0.0, 0.0, 0.0);
    for (p, n) in pairs {
        num += match form {
            MetricForm::Literal => (p * n).powi(2),
            MetricForm::Normalized => p * n,
        };
        pos += p * p;
        neg += n * n;
    }
    let den = pos.max(neg);
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub fn sound_metric(spec: &RangeDopplerSpectrogram, receiver: usize, config: &DetectConfig) -> Result<SoundMetricMap> {
    let floor = noise_floor(spec, receiver)?;
    let indices = metric_indices(spec, config.dc_guard_hz);
    let cfg = spec.config;
    let mut values = BinFrameMap::filled(spec.num_range_bins, spec.num_frames, 0.0);
    for bin in 0..spec.num_range_bins {
        for k in 0..spec.num_frames {
            let pairs = indices.iter().map(|&f| {
                let (rp, rn) = (cfg.row_of(f), cfg.row_of(-f));
                let p = (spec.get(receiver, rp, bin, k).norm() - floor.get(rp, bin)).max(0.0);
                let n = (spec.get(receiver, rn, bin, k).norm() - floor.get(rn, bin)).max(0.0);
                (p, n)
            });
            values.set(bin, k, metric_from_pairs(pairs, config.form));
        }
    }
    Ok(SoundMetricMap {
        values,
        noise_floor: floor,
        config: *config,
    })
}

/// Frames of the history window used to threshold frame `k`.
fn history_window(k: usize, frames: usize, history: usize) -> (usize, usize) {
    let end = (k + 1).max(MIN_FRAMES.min(frames)).min(frames);
    let start = (k + 1).saturating_sub(history.max(1)).min(end.saturating_sub(1));
    (start, end)
}

/// Robust z-score `(m - median) / MAD` of every cell against its history window.
pub fn outlier_scores(metric: &SoundMetricMap) -> Result<BinFrameMap<f64>> {
    let map = &metric.values;
    if map.num_frames < MIN_FRAMES {
        return Err(Error::param(format!(
            "outlier detection needs >= {MIN_FRAMES} frames, got {}",
            map.num_frames
        )));
    }
    let history = metric.config.history_frames;
    let mut scores = BinFrameMap::filled(map.num_bins, map.num_frames, 0.0);
    let mut scratch = Vec::new();
    let mut cached: Option<((usize, usize), f64, f64)> = None;
    for k in 0..map.num_frames {
        let window = history_window(k, map.num_frames, history);
        let (median, mad) = match cached {
            Some((w, m, d)) if w == window => (m, d),
            _ => {
                scratch.clear();
                for b in 0..map.num_bins {
                    scratch.extend_from_slice(&map.bin(b)[window.0..window.1]);
                }
                let median = median_in_place(&mut scratch);
                scratch.iter_mut().for_each(|v| *v = (*v - median).abs());
                let mad = median_in_place(&mut scratch).max(MAD_EPSILON);
                cached = Some((window, median, mad));
                (median, mad)
            }
        };
        for b in 0..map.num_bins {
            scores.set(b, k, (map.get(b, k) - median) / mad);
        }
    }
    Ok(scores)
}

/// Label cells exceeding `median + threshold_scale * MAD` of their history window.
pub fn detect_outlier(metric: &SoundMetricMap, threshold_scale: f64) -> Result<DetectionResult> {
    let scores = outlier_scores(metric)?;
    let mut labels = BinFrameMap::filled(scores.num_bins, scores.num_frames, false);
    for b in 0..scores.num_bins {
        for k in 0..scores.num_frames {
            labels.set(b, k, scores.get(b, k) > threshold_scale);
        }
    }
    Ok(DetectionResult::from_labels(labels, DetectionMethod::RadiomicOutlier))
}

/// Fixed-threshold variant, for comparison against the outlier rule.
pub fn detect_threshold(metric: &SoundMetricMap, threshold: f64) -> DetectionResult {
    let map = &metric.values;
    let mut labels = BinFrameMap::filled(map.num_bins, map.num_frames, false);
    for b in 0..map.num_bins {
        for k in 0..map.num_frames {
            labels.set(b, k, map.get(b, k) > threshold);
        }
    }
    DetectionResult::from_labels(labels, DetectionMethod::RadiomicThreshold)
}

/// Full detector: per-receiver metric and outlier labels, OR-combined across receivers.
pub fn detect_radiomic(spec: &RangeDopplerSpectrogram, config: &DetectConfig) -> Result<DetectionResult> {
    let per_rx = (0..spec.num_receivers)
        .map(|rx| detect_outlier(&sound_metric(spec, rx, config)?, config.threshold_scale))
        .collect::<Result<Vec<_>>>()?;
    DetectionResult::union(&per_rx)
}

/// Outlier scores pooled across receivers with a max.
pub fn radiomic_scores(spec: &RangeDopplerSpectrogram, config: &DetectConfig) -> Result<BinFrameMap<f64>> {
    let mut pooled: Option<BinFrameMap<f64>> = None;
    for rx in 0..spec.num_receivers {
        let s = outlier_scores(&sound_metric(spec, rx, config)?)?;
        match pooled.as_mut() {
            Some(p) => p.max_with(&s),
            None => pooled = Some(s),
        }
    }
    pooled.ok_or_else(|| Error::param("spectrogram has no receivers"))
}

/// Doppler energy per (bin, frame) with rows inside the DC guard removed.
pub fn doppler_energy(spec: &RangeDopplerSpectrogram, receiver: usize, dc_guard_hz: f64) -> Result<BinFrameMap<f64>> {
    check_receiver(spec, receiver)?;
    let rows: Vec<usize> = (0..spec.num_rows())
        .filter(|&r| spec.row_frequency(r).abs() >= dc_guard_hz)
        .collect();
    let mut e = BinFrameMap::filled(spec.num_range_bins, spec.num_frames, 0.0);
    for bin in 0..spec.num_range_bins {
        for k in 0..spec.num_frames {
            e.set(bin, k, rows.iter().map(|&r| spec.get(receiver, r, bin, k).norm_sqr()).sum());
        }
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CfarConfig {
    pub guard: usize,
    pub train: usize,
    pub scale: f64,
    pub dc_guard_hz: f64,
}

impl Default for CfarConfig {
    fn default() -> Self {
        Self {
            guard: 1,
            train: 4,
            scale: 2.0,
            dc_guard_hz: 60.0,
        }
    }
}

/// Cell-averaging CFAR statistic `E(cell) / mean(E(training cells))` along range.
pub fn cfar_scores(spec: &RangeDopplerSpectrogram, cfg: &CfarConfig) -> Result<BinFrameMap<f64>> {
    if cfg.train == 0 {
        return Err(Error::param("CFAR needs at least one training cell"));
    }
    let span = 2 * (cfg.guard + cfg.train) + 1;
    if span > spec.num_range_bins {
        return Err(Error::param(format!(
            "CFAR window of {span} bins exceeds the {}-bin range axis",
            spec.num_range_bins
        )));
    }
    let bins = spec.num_range_bins as isize;
    let mut pooled: Option<BinFrameMap<f64>> = None;
    for rx in 0..spec.num_receivers {
        let e = doppler_energy(spec, rx, cfg.dc_guard_hz)?;
        let mut s = BinFrameMap::filled(e.num_bins, e.num_frames, 0.0);
        for b in 0..bins {
            let training: Vec<usize> = (1..=cfg.train as isize)
                .flat_map(|t| {
                    let d = cfg.guard as isize + t;
                    [b - d, b + d]
                })
                .filter(|&i| i >= 0 && i < bins)
                .map(|i| i as usize)
                .collect();
            for k in 0..e.num_frames {
                let mean = training.iter().map(|&i| e.get(i, k)).sum::<f64>() / training.len() as f64;
                let v = if mean > 0.0 { e.get(b as usize, k) / mean } else { 0.0 };
                s.set(b as usize, k, v);
            }
        }
        match pooled.as_mut() {
            Some(p) => p.max_with(&s),
            None => pooled = Some(s),
        }
    }
    Ok(pooled.expect("at least one receiver"))
}

pub fn detect_cfar(spec: &RangeDopplerSpectrogram, guard: usize, train: usize, scale: f64) -> Result<DetectionResult> {
    detect_cfar_with(
        spec,
        &CfarConfig {
            guard,
            train,
            scale,
            ..CfarConfig::default()
        },
    )
}

pub fn detect_cfar_with(spec: &RangeDopplerSpectrogram, cfg: &CfarConfig) -> Result<DetectionResult> {
    let scale = cfg.scale;
    let scores = cfar_scores(spec, cfg)?;
    let mut labels = BinFrameMap::filled(scores.num_bins, scores.num_frames, false);
    for b in 0..scores.num_bins {
        for k in 0..scores.num_frames {
            labels.set(b, k, scores.get(b, k) > scale);
        }
    }
    Ok(DetectionResult::from_labels(labels, DetectionMethod::Cfar))
}

/// Effective complex degrees of freedom of the guarded Doppler energy of white noise
/// (Satterthwaite), for a periodic-Hann frame of `frame_length` samples.
pub fn doppler_energy_dof(spec_rows: &[isize], frame_length: usize) -> f64 {
    use std::f64::consts::PI;
    let n = frame_length as f64;
    let w2: Vec<f64> = crate::dsp::hann_periodic(frame_length).iter().map(|w| w * w).collect();
    // |DFT of w^2| at every lag
    let kernel: Vec<f64> = (0..frame_length)
        .map(|d| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in w2.iter().enumerate() {
                let a = -2.0 * PI * d as f64 * i as f64 / n;
                re += v * a.cos();
                im += v * a.sin();
            }
            re * re + im * im
        })
        .collect();
    let trace = spec_rows.len() as f64 * kernel[0].sqrt();
    let mut trace_sq = 0.0;
    for &f in spec_rows {
        for &g in spec_rows {
            trace_sq += kernel[(f - g).rem_euclid(frame_length as isize) as usize];
        }
    }
    trace * trace / trace_sq
}

/// Design false-alarm probability of CA-CFAR on Gamma(dof) cell energies.
pub fn cfar_design_pfa(scale: f64, training_cells: usize, dof: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, FisherSnedecor};
    let f = FisherSnedecor::new(2.0 * dof, 2.0 * dof * training_cells as f64).expect("valid F parameters");
    1.0 - f.cdf(scale)
}

/// CFAR scale achieving a design false-alarm probability.
pub fn cfar_scale_for_pfa(pfa: f64, training_cells: usize, dof: f64) -> f64 {
    let (mut lo, mut hi) = (1.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cfar_design_pfa(mid, training_cells, dof) > pfa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Per-receiver Doppler power shares across range bins, pooled with a max.
pub fn hhi_shares(spec: &RangeDopplerSpectrogram, dc_guard_hz: f64) -> Result<(BinFrameMap<f64>, Vec<f64>)> {
    let mut pooled_shares: Option<BinFrameMap<f64>> = None;
    let mut pooled_hhi = vec![0.0f64; spec.num_frames];
    for rx in 0..spec.num_receivers {
        let e = doppler_energy(spec, rx, dc_guard_hz)?;
        let mut shares = BinFrameMap::filled(e.num_bins, e.num_frames, 0.0);
        for k in 0..e.num_frames {
            let total: f64 = e.frame(k).sum();
            let mut hhi = 0.0;
            for b in 0..e.num_bins {
                let s = if total > 0.0 { e.get(b, k) / total } else { 0.0 };
                shares.set(b, k, s);
                hhi += s * s;
            }
            pooled_hhi[k] = pooled_hhi[k].max(hhi);
        }
        match pooled_shares.as_mut() {
            Some(p) => p.max_with(&shares),
            None => pooled_shares = Some(shares),
        }
    }
    Ok((pooled_shares.expect("at least one receiver"), pooled_hhi))
}

/// Herfindahl-Hirschman index per frame for one receiver.
pub fn hhi_index(spec: &RangeDopplerSpectrogram, receiver: usize, dc_guard_hz: f64) -> Result<Vec<f64>> {
    let e = doppler_energy(spec, receiver, dc_guard_hz)?;
    Ok((0..e.num_frames)
        .map(|k| {
            let total: f64 = e.frame(k).sum();
            if total > 0.0 {
                e.frame(k).map(|v| (v / total).powi(2)).sum()
            } else {
                0.0
            }
        })
        .collect())
}

pub const DEFAULT_HHI_THRESHOLD: f64 = 0.25;

/// Frames whose HHI exceeds `threshold` are flagged; within them, bins holding at least
/// the concentration-weighted mean share (`share >= HHI`) are labeled.
pub fn detect_hhi(spec: &RangeDopplerSpectrogram, threshold: f64) -> Result<DetectionResult> {
    let (shares, hhi) = hhi_shares(spec, DetectConfig::default().dc_guard_hz)?;
    let mut labels = BinFrameMap::filled(shares.num_bins, shares.num_frames, false);
    for k in 0..shares.num_frames {
        if hhi[k] > threshold {
            for b in 0..shares.num_bins {
                labels.set(b, k, shares.get(b, k) >= hhi[k] * (1.0 - 1e-12));
            }
        }
    }
    Ok(DetectionResult::from_labels(labels, DetectionMethod::Hhi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub false_alarm_rate: f64,
    pub detection_rate: f64,
}

fn roc_vertices(truth: &[bool], scores: &[f64]) -> Result<Vec<RocPoint>> {
    if truth.len() != scores.len() {
        return Err(Error::param("truth and score maps differ in size"));
    }
    let positives = truth.iter().filter(|t| **t).count();
    let negatives = truth.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Degenerate("ROC needs both positive and negative cells".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint { false_alarm_rate: 0.0, detection_rate: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            false_alarm_rate: fp as f64 / negatives as f64,
            detection_rate: tp as f64 / positives as f64,
        });
    }
    Ok(points)
}

/// ROC by threshold sweep over the scores, thinned to at most `points` vertices
/// (the endpoints are always kept).
pub fn roc_curve(truth: &BinFrameMap<bool>, scores: &BinFrameMap<f64>, points: usize) -> Result<Vec<RocPoint>> {
    if !truth.same_shape(scores) {
        return Err(Error::param("truth and score maps differ in shape"));
    }
    roc_from_slices(truth.values(), scores.values(), points)
}

pub fn roc_from_slices(truth: &[bool], scores: &[f64], points: usize) -> Result<Vec<RocPoint>> {
    let v = roc_vertices(truth, scores)?;
    if points < 2 || v.len() <= points {
        return Ok(v);
    }
    let last = v.len() - 1;
    let mut out: Vec<RocPoint> = (0..points).map(|i| v[i * last / (points - 1)]).collect();
    out.dedup();
    Ok(out)
}

/// Area under the ROC, exact (ties count one half).
pub fn auc(truth: &[bool], scores: &[f64]) -> Result<f64> {
    let v = roc_vertices(truth, scores)?;
    Ok(v.windows(2)
        .map(|w| (w[1].false_alarm_rate - w[0].false_alarm_rate) * 0.5 * (w[0].detection_rate + w[1].detection_rate))
        .sum())
}

pub const LIVENESS_BAND: (f64, f64) = (35.0, 60.0);
pub const LIVENESS_DC_EXEMPT_HZ: f64 = 5.0;
/// Band-energy ratio above which a span is called live.
pub const DEFAULT_LIVENESS_THRESHOLD: f64 = 1e-5;

/// Energy in the motion band `|f|` in [35, 60] Hz over the energy at `|f| >= 5` Hz.
pub fn liveness_score(spec: &RangeDopplerSpectrogram, receiver: usize, bin: usize, frames: Span) -> Result<f64> {
    check_receiver(spec, receiver)?;
    if frames.is_empty() {
        return Err(Error::param("liveness span is empty"));
    }
    if frames.end > spec.num_frames || bin >= spec.num_range_bins {
        return Err(Error::param("liveness span or bin outside the spectrogram"));
    }
    let (mut band, mut total) = (0.0, 0.0);
    for row in 0..spec.num_rows() {
        let f = spec.row_frequency(row).abs();
        if f < LIVENESS_DC_EXEMPT_HZ {
            continue;
        }
        let e: f64 = (frames.start..frames.end).map(|k| spec.get(receiver, row, bin, k).norm_sqr()).sum();
        total += e;
        if f >= LIVENESS_BAND.0 && f <= LIVENESS_BAND.1 {
            band += e;
        }
    }
    Ok(if total > 0.0 { band / total } else { 0.0 })
}
