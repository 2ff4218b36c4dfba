//! Objective audio quality measures: silent-moment SNR, LPC log-likelihood ratio and
//! short-time objective intelligibility (STOI).

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resample::resample;
use crate::types::{AudioSignal, Span};

pub const LPC_ORDER: usize = 10;
pub const LLR_MAX: f64 = 2.0;

fn check_spans(spans: &[Span], len: usize) -> Result<()> {
    if spans.is_empty() {
        return Err(Error::param("at least one silent span is required"));
    }
    let mut sorted = spans.to_vec();
    sorted.sort_by_key(|s| s.start);
    for s in &sorted {
        if s.is_empty() || s.end > len {
            return Err(Error::param(format!(
                "silent span [{}, {}) is empty or exceeds the {len}-sample signal",
                s.start, s.end
            )));
        }
    }
    if sorted.windows(2).any(|w| w[1].start < w[0].end) {
        return Err(Error::param("silent spans overlap"));
    }
    Ok(())
}

/// `10 log10(active power / silent power)`, where the active part is everything outside
/// the silent spans (or the whole signal when the spans cover it). Returns `+inf` when
/// the silent spans hold digital silence.
pub fn snr_silent(signal: &AudioSignal, silent_spans: &[Span]) -> Result<f64> {
    snr_silent_samples(&signal.samples, silent_spans)
}

pub fn snr_silent_samples(samples: &[f64], silent_spans: &[Span]) -> Result<f64> {
    check_spans(silent_spans, samples.len())?;
    let mut silent = vec![false; samples.len()];
    for s in silent_spans {
        silent[s.start..s.end].iter_mut().for_each(|v| *v = true);
    }
    let (mut ps, mut ns, mut pa, mut na) = (0.0, 0usize, 0.0, 0usize);
    for (x, &q) in samples.iter().zip(&silent) {
        if q {
            ps += x * x;
            ns += 1;
        } else {
            pa += x * x;
            na += 1;
        }
    }
    if na == 0 {
        pa = ps;
        na = ns;
    }
    let silent_power = ps / ns as f64;
    if silent_power == 0.0 {
        log::warn!("silent spans contain digital silence; SNR is unbounded");
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (pa / na as f64 / silent_power).log10())
}

/// The quietest `fraction` of non-overlapping frames, as sample spans (at least one frame).
pub fn quietest_frames(samples: &[f64], frame: usize, fraction: f64) -> Vec<Span> {
    let frame = frame.max(1);
    let count = samples.len() / frame;
    if count == 0 {
        return if samples.is_empty() { vec![] } else { vec![Span::new(0, samples.len())] };
    }
    let mut powers: Vec<(f64, usize)> = (0..count)
        .map(|k| (samples[k * frame..(k + 1) * frame].iter().map(|v| v * v).sum::<f64>(), k))
        .collect();
    powers.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let keep = ((count as f64 * fraction).round() as usize).clamp(1, count);
    let mut frames: Vec<usize> = powers[..keep].iter().map(|p| p.1).collect();
    frames.sort_unstable();
    let mut spans: Vec<Span> = Vec::new();
    for k in frames {
        let s = Span::new(k * frame, (k + 1) * frame);
        match spans.last_mut() {
            Some(last) if last.end == s.start => last.end = s.end,
            _ => spans.push(s),
        }
    }
    spans
}

fn autocorrelation(x: &[f64], lags: usize) -> Vec<f64> {
    (0..=lags)
        .map(|l| x.iter().zip(x.iter().skip(l)).map(|(a, b)| a * b).sum())
        .collect()
}

/// Prediction polynomial `[1, a1, .., ap]` by Levinson-Durbin.
pub fn lpc(r: &[f64]) -> Vec<f64> {
    let order = r.len() - 1;
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    if err <= 0.0 {
        return a;
    }
    for i in 1..=order {
        let acc: f64 = (0..i).map(|j| a[j] * r[i - j]).sum();
        let k = -acc / err;
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if err <= 0.0 {
            break;
        }
    }
    a
}

/// `a^T R a` with `R` the Toeplitz matrix of autocorrelation `r`.
fn quadratic_form(a: &[f64], r: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, ai) in a.iter().enumerate() {
        for (j, aj) in a.iter().enumerate() {
            s += ai * aj * r[i.abs_diff(j)];
        }
    }
    s
}

/// Mean LPC log-likelihood ratio over 25 ms Hann frames with 50% overlap, each frame
/// clamped to `[0, 2]`. Frames where the reference is silent are skipped.
pub fn llr(reference: &AudioSignal, estimate: &AudioSignal) -> Result<f64> {
    if reference.sample_rate != estimate.sample_rate {
        return Err(Error::param("llr needs equal sample rates"));
    }
    let frame = (0.025 * reference.sample_rate).round() as usize;
    let hop = (frame / 2).max(1);
    if reference.len().abs_diff(estimate.len()) > frame {
        return Err(Error::param(format!(
            "reference and estimate lengths differ by more than one frame ({} vs {})",
            reference.len(),
            estimate.len()
        )));
    }
    let len = reference.len().min(estimate.len());
    if len < frame {
        return Err(Error::param("signals shorter than one 25 ms frame"));
    }
    let window = crate::dsp::hann_periodic(frame);
    let mut total = 0.0;
    let mut count = 0usize;
    let mut start = 0;
    while start + frame <= len {
        let xr: Vec<f64> = reference.samples[start..start + frame].iter().zip(&window).map(|(a, w)| a * w).collect();
        let xe: Vec<f64> = estimate.samples[start..start + frame].iter().zip(&window).map(|(a, w)| a * w).collect();
        start += hop;
        let rr = autocorrelation(&xr, LPC_ORDER);
        if rr[0] <= 0.0 {
            continue;
        }
        let re = autocorrelation(&xe, LPC_ORDER);
        let ar = lpc(&rr);
        let ae = lpc(&re);
        let num = quadratic_form(&ae, &rr);
        let den = quadratic_form(&ar, &rr);
        let v = if den > 0.0 { (num / den).ln() } else { 0.0 };
        total += v.clamp(0.0, LLR_MAX);
        count += 1;
    }
    if count == 0 {
        return Err(Error::Degenerate("reference is silent in every frame".into()));
    }
    Ok(total / count as f64)
}

const STOI_RATE: f64 = 10_000.0;
const STOI_FRAME: usize = 256;
const STOI_FFT: usize = 512;
const STOI_BANDS: usize = 15;
const STOI_LOWEST_CENTER: f64 = 150.0;
const STOI_SEGMENT: usize = 30;
const STOI_BETA_DB: f64 = -15.0;
const STOI_DYNAMIC_RANGE_DB: f64 = 40.0;

/// Symmetric Hann of `n` points with the zero end points dropped.
fn stoi_window() -> Vec<f64> {
    let n = STOI_FRAME + 2;
    (1..n - 1)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Drop frames more than 40 dB below the loudest reference frame, overlap-adding the rest.
fn remove_silent_frames(x: &[f64], y: &[f64], window: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let hop = STOI_FRAME / 2;
    let starts: Vec<usize> = (0..).map(|k| k * hop).take_while(|s| s + STOI_FRAME <= x.len()).collect();
    let energy: Vec<f64> = starts
        .iter()
        .map(|&s| {
            let e: f64 = x[s..s + STOI_FRAME].iter().zip(window).map(|(a, w)| (a * w).powi(2)).sum();
            20.0 * (e.sqrt() + f64::EPSILON).log10()
        })
        .collect();
    let max = energy.iter().copied().fold(f64::MIN, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energy)
        .filter(|(_, e)| **e > max - STOI_DYNAMIC_RANGE_DB)
        .map(|(s, _)| *s)
        .collect();
    if kept.is_empty() {
        return (vec![], vec![]);
    }
    let out_len = (kept.len() - 1) * hop + STOI_FRAME;
    let mut xo = vec![0.0; out_len];
    let mut yo = vec![0.0; out_len];
    for (j, &s) in kept.iter().enumerate() {
        for i in 0..STOI_FRAME {
            xo[j * hop + i] += x[s + i] * window[i];
            yo[j * hop + i] += y[s + i] * window[i];
        }
    }
    (xo, yo)
}

/// One-third-octave band envelopes `[band][frame]`.
fn third_octave_envelopes(x: &[f64], window: &[f64]) -> Vec<Vec<f64>> {
    let hop = STOI_FRAME / 2;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(STOI_FFT);
    let bands: Vec<(usize, usize)> = (0..STOI_BANDS)
        .map(|k| {
            let center = STOI_LOWEST_CENTER * 2f64.powf(k as f64 / 3.0);
            let to_bin = |f: f64| (f / STOI_RATE * STOI_FFT as f64).round() as usize;
            (to_bin(center * 2f64.powf(-1.0 / 6.0)), to_bin(center * 2f64.powf(1.0 / 6.0)))
        })
        .collect();
    let mut out = vec![Vec::new(); STOI_BANDS];
    let mut buf = vec![Complex64::new(0.0, 0.0); STOI_FFT];
    let mut s = 0;
    while s + STOI_FRAME <= x.len() {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for i in 0..STOI_FRAME {
            buf[i] = Complex64::new(x[s + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (b, &(lo, hi)) in bands.iter().enumerate() {
            out[b].push(buf[lo..hi].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());
        }
        s += hop;
    }
    out
}

/// Short-time objective intelligibility, in `[0, 1]` for all practical inputs
/// (correlations can in principle go negative).
pub fn stoi(reference: &AudioSignal, estimate: &AudioSignal) -> Result<f64> {
    if reference.duration() < 1.0 || estimate.duration() < 1.0 {
        return Err(Error::param("stoi needs at least 1 s of audio"));
    }
    let x = resample(reference, STOI_RATE)?.samples;
    let y = resample(estimate, STOI_RATE)?.samples;
    let len = x.len().min(y.len());
    let window = stoi_window();
    let (x, y) = remove_silent_frames(&x[..len], &y[..len], &window);
    let xb = third_octave_envelopes(&x, &window);
    let yb = third_octave_envelopes(&y, &window);
    let frames = xb[0].len();
    if frames < STOI_SEGMENT {
        return Err(Error::param("too short for stoi after silent-frame removal"));
    }
    let clip = 1.0 + 10f64.powf(-STOI_BETA_DB / 20.0);
    let eps = 1e-12;
    let mut total = 0.0;
    let mut count = 0usize;
    for m in STOI_SEGMENT..=frames {
        for b in 0..STOI_BANDS {
            let xs = &xb[b][m - STOI_SEGMENT..m];
            let ys = &yb[b][m - STOI_SEGMENT..m];
            let nx = xs.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = ys.iter().map(|v| v * v).sum::<f64>().sqrt();
            let alpha = nx / (ny + eps);
            let yc: Vec<f64> = ys.iter().zip(xs).map(|(y, x)| (alpha * y).min(clip * x)).collect();
            total += correlation(xs, &yc, eps);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

fn correlation(a: &[f64], b: &[f64], eps: f64) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma).powi(2);
        db += (y - mb).powi(2);
    }
    num / (da.sqrt() * db.sqrt() + eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub start_seconds: f64,
    pub end_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub llr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stoi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    /// `null` when unbounded (digital silence in the silent spans).
    pub snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub llr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stoi: Option<f64>,
    pub segments: Vec<SegmentReport>,
}

pub const EVAL_SEGMENT_SECONDS: f64 = 2.0;

/// SNR of `estimate` (quietest 10% of 40 ms frames when no spans are given), plus LLR and
/// STOI against `reference` when present, overall and per 2 s segment.
pub fn evaluate(estimate: &AudioSignal, reference: Option<&AudioSignal>, silent_spans: &[Span]) -> Result<EvalReport> {
    estimate.validate()?;
    let spans = if silent_spans.is_empty() {
        quietest_frames(&estimate.samples, (0.04 * estimate.sample_rate).round() as usize, 0.1)
    } else {
        silent_spans.to_vec()
    };
    let snr = snr_silent(estimate, &spans)?;
    let snr_db = snr.is_finite().then_some(snr);
    let (mut llr_all, mut stoi_all, mut segments) = (None, None, Vec::new());
    if let Some(reference) = reference {
        reference.validate()?;
        let reference = if reference.sample_rate != estimate.sample_rate {
            resample(reference, estimate.sample_rate)?
        } else {
            reference.clone()
        };
        llr_all = Some(llr(&reference, estimate)?);
        stoi_all = stoi(&reference, estimate).ok();
        let fs = estimate.sample_rate;
        let seg = (EVAL_SEGMENT_SECONDS * fs) as usize;
        let len = reference.len().min(estimate.len());
        let mut start = 0;
        while start < len {
            let end = if len - start < 2 * seg { len } else { start + seg };
            let cut = |a: &AudioSignal| AudioSignal {
                samples: a.samples[start..end].to_vec(),
                sample_rate: fs,
                label: None,
            };
            let (r, e) = (cut(&reference), cut(estimate));
            segments.push(SegmentReport {
                start_seconds: start as f64 / fs,
                end_seconds: end as f64 / fs,
                llr: llr(&r, &e).ok(),
                stoi: stoi(&r, &e).ok(),
            });
            start = end;
        }
    }
    Ok(EvalReport {
        schema_version: 1,
        snr_db,
        llr: llr_all,
        stoi: stoi_all,
        segments,
    })
}
