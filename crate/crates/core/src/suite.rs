//! Seeded benchmark scene suites: detection ROC, liveness, projection angle and
//! two-source separation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{
    auc, cfar_scores, hhi_shares, liveness_score, outlier_scores, roc_from_slices, sound_metric, BinFrameMap,
    CfarConfig, DetectConfig, DetectionMethod, RocPoint,
};
use crate::dsp::{filter_centered, highpass_fir, Edge};
use crate::error::Result;
use crate::sim::{
    simulate_with, AmplitudeModulation, AudioRef, MotionInterferer, SceneDescription, SourceKind, StaticReflector,
    VibrationSource, Waypoint,
};
use crate::spectral::{range_doppler, StftConfig};
use crate::types::{ChannelResponse, RadarParams, Span};

fn scene_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn random_reflectivity(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Complex64 {
    let magnitude = rng.gen_range(lo..hi);
    Complex64::from_polar(magnitude, rng.gen_range(0.0..2.0 * PI))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionSuiteConfig {
    pub scenes: usize,
    pub seed: u64,
    pub num_range_bins: usize,
    pub num_receivers: usize,
    pub duration: f64,
    pub noise_power: f64,
    /// A source frame counts as sound-bearing when its displacement RMS exceeds this
    /// fraction of the source's mean active RMS.
    pub truth_threshold: f64,
    pub roc_points: usize,
}

impl Default for DetectionSuiteConfig {
    fn default() -> Self {
        Self {
            scenes: 50,
            seed: 2021,
            num_range_bins: 48,
            num_receivers: 2,
            duration: 2.0,
            noise_power: 1e-5,
            truth_threshold: 0.1,
            roc_points: 200,
        }
    }
}

fn random_audio(rng: &mut ChaCha8Rng) -> AudioRef {
    match rng.gen_range(0..3) {
        0 => AudioRef::Speech { seed: rng.gen() },
        1 => AudioRef::Harmonic {
            fundamental: rng.gen_range(110.0..330.0),
            harmonics: 6,
        },
        _ => AudioRef::Tone {
            frequency: rng.gen_range(150.0..900.0),
            amplitude: 1.0,
        },
    }
}

const WALK_ACCELERATION: f64 = 1.5;
const WAYPOINT_STEP: f64 = 0.005;

/// A person walking between random points in `lo..hi` metres: trapezoidal velocity
/// profiles (peak 0.3-1.5 m/s, 1.5 m/s^2) with occasional pauses, sampled every 5 ms.
fn random_walker(rng: &mut ChaCha8Rng, duration: f64, lo: f64, hi: f64) -> MotionInterferer {
    let mut t = 0.0;
    let mut r = rng.gen_range(lo..hi);
    let mut trajectory = vec![Waypoint { time: 0.0, range: r }];
    while t < duration {
        let target = rng.gen_range(lo..hi);
        let distance = (target - r).abs();
        let peak = rng.gen_range(0.3f64..1.5).min((distance * WALK_ACCELERATION).sqrt());
        let ramp = peak / WALK_ACCELERATION;
        let cruise = (distance - peak * ramp) / peak.max(1e-9);
        let leg = 2.0 * ramp + cruise;
        let direction = (target - r).signum();
        let steps = (leg / WAYPOINT_STEP).ceil().max(1.0) as usize;
        for i in 1..=steps {
            let tau = leg * i as f64 / steps as f64;
            let travelled = if tau < ramp {
                0.5 * WALK_ACCELERATION * tau * tau
            } else if tau < ramp + cruise {
                0.5 * peak * ramp + peak * (tau - ramp)
            } else {
                let rest = leg - tau;
                distance - 0.5 * WALK_ACCELERATION * rest * rest
            };
            trajectory.push(Waypoint {
                time: t + tau,
                range: r + direction * travelled,
            });
        }
        t += leg;
        r = target;
        if rng.gen_bool(0.3) {
            t += rng.gen_range(0.05..0.3);
            trajectory.push(Waypoint { time: t, range: r });
        }
    }
    MotionInterferer {
        trajectory,
        reflectivity: random_reflectivity(rng, 1.0, 3.0),
    }
}

/// Scene `index` of the detection suite: a vibration source (75%) in the near field and
/// one or two walking people (always when there is no source, otherwise 70%) farther out,
/// plus static clutter.
pub fn detection_scene(config: &DetectionSuiteConfig, index: usize) -> SceneDescription {
    let mut rng = scene_rng(config.seed, index as u64);
    let radar = RadarParams {
        num_range_bins: config.num_range_bins,
        num_receivers: config.num_receivers,
        ..Default::default()
    };
    let max_range = radar.max_range();
    let mut scene = SceneDescription::new(radar, config.duration, config.seed.wrapping_add(index as u64))
        .with_uniform_noise(config.noise_power);
    let has_sound = rng.gen_bool(0.75);
    let has_motion = !has_sound || rng.gen_bool(0.7);
    if has_sound {
        let passive = rng.gen_bool(0.5);
        scene.sources.push(VibrationSource {
            audio: random_audio(&mut rng),
            channel: passive.then(|| ChannelResponse::lowpass(1000.0, 2000.0, -40.0, radar.slow_time_rate / 2.0)),
            peak_displacement: log_uniform(&mut rng, 1e-5, 4e-5),
            range: rng.gen_range(0.15..0.45) * max_range,
            reflectivity: random_reflectivity(&mut rng, 0.5, 1.5),
            kind: if passive { SourceKind::Passive } else { SourceKind::Active },
            onset: rng.gen_range(0.55..0.8) * config.duration,
            modulation: vec![],
        });
    }
    if has_motion {
        for _ in 0..rng.gen_range(1..=2) {
            scene
                .interferers
                .push(random_walker(&mut rng, config.duration, 0.5 * max_range, 0.95 * max_range));
        }
    }
    for _ in 0..rng.gen_range(1..=3) {
        scene.background.push(StaticReflector {
            range: rng.gen_range(0.05..0.95) * max_range,
            reflectivity: random_reflectivity(&mut rng, 1.0, 10.0),
        });
    }
    scene
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub auc: f64,
    pub roc: Vec<RocPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSuiteOutcome {
    pub truth: Vec<bool>,
    pub scores: BTreeMap<DetectionMethod, Vec<f64>>,
    pub results: BTreeMap<DetectionMethod, MethodResult>,
}

struct SceneScores {
    truth: Vec<bool>,
    scores: Vec<(DetectionMethod, Vec<f64>)>,
}

fn score_scene(config: &DetectionSuiteConfig, index: usize) -> Result<SceneScores> {
    let scene = detection_scene(config, index);
    let displacements = scene.displacements()?;
    let cir = simulate_with(&scene, &displacements)?;
    let stft = StftConfig::default();
    let spec = range_doppler(&cir, stft)?;
    let truth = BinFrameMap::from_rows(scene.sound_truth(&displacements, stft, config.truth_threshold));
    let detect = DetectConfig::default();
    let mut outlier: Option<BinFrameMap<f64>> = None;
    let mut raw: Option<BinFrameMap<f64>> = None;
    for rx in 0..spec.num_receivers {
        let m = sound_metric(&spec, rx, &detect)?;
        let z = outlier_scores(&m)?;
        match (outlier.as_mut(), raw.as_mut()) {
            (Some(o), Some(r)) => {
                o.max_with(&z);
                r.max_with(&m.values);
            }
            _ => {
                outlier = Some(z);
                raw = Some(m.values);
            }
        }
    }
    let cfar = cfar_scores(&spec, &CfarConfig::default())?;
    let (hhi, _) = hhi_shares(&spec, detect.dc_guard_hz)?;
    Ok(SceneScores {
        truth: truth.values().to_vec(),
        scores: vec![
            (DetectionMethod::RadiomicOutlier, outlier.expect("receivers").values().to_vec()),
            (DetectionMethod::RadiomicThreshold, raw.expect("receivers").values().to_vec()),
            (DetectionMethod::Cfar, cfar.values().to_vec()),
            (DetectionMethod::Hhi, hhi.values().to_vec()),
        ],
    })
}

/// Score every cell of every scene with each detector and compute ROC and AUC over the
/// pooled cells.
pub fn run_detection_suite(config: &DetectionSuiteConfig) -> Result<DetectionSuiteOutcome> {
    let per_scene = (0..config.scenes)
        .into_par_iter()
        .map(|i| score_scene(config, i))
        .collect::<Result<Vec<_>>>()?;
    let mut truth = Vec::new();
    let mut scores: BTreeMap<DetectionMethod, Vec<f64>> = BTreeMap::new();
    for s in per_scene {
        truth.extend(s.truth);
        for (m, v) in s.scores {
            scores.entry(m).or_default().extend(v);
        }
    }
    let mut results = BTreeMap::new();
    for (m, v) in &scores {
        results.insert(
            *m,
            MethodResult {
                auc: auc(&truth, v)?,
                roc: roc_from_slices(&truth, v, config.roc_points)?,
            },
        );
    }
    Ok(DetectionSuiteOutcome { truth, scores, results })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LivenessSuiteConfig {
    pub scenes_per_class: usize,
    pub spans_per_scene: usize,
    pub seed: u64,
    pub noise_power: f64,
}

impl Default for LivenessSuiteConfig {
    fn default() -> Self {
        Self {
            scenes_per_class: 10,
            spans_per_scene: 10,
            seed: 72,
            noise_power: 1e-5,
        }
    }
}

/// A talking throat (skin with 35-60 Hz body-motion sidebands and a strong tissue low-pass)
/// or a loudspeaker diaphragm playing the same kind of speech.
pub fn liveness_scene(config: &LivenessSuiteConfig, index: usize, live: bool) -> SceneDescription {
    let mut rng = scene_rng(config.seed, (index as u64) << 1 | live as u64);
    let radar = RadarParams {
        num_range_bins: 16,
        num_receivers: 1,
        ..Default::default()
    };
    let nyq = radar.slow_time_rate / 2.0;
    let mut scene =
        SceneDescription::new(radar, 1.5, config.seed ^ ((index as u64) << 8) ^ live as u64).with_uniform_noise(config.noise_power);
    let (channel, modulation) = if live {
        let sidebands = (0..rng.gen_range(1..=2))
            .map(|_| AmplitudeModulation {
                frequency: rng.gen_range(35.0..60.0),
                depth: rng.gen_range(0.02..0.1),
                phase: rng.gen_range(0.0..2.0 * PI),
            })
            .collect();
        (ChannelResponse::lowpass(800.0, 1500.0, -40.0, nyq), sidebands)
    } else {
        (ChannelResponse::lowpass(2500.0, 3000.0, -20.0, nyq), vec![])
    };
    scene.sources.push(VibrationSource {
        audio: AudioRef::Speech { seed: rng.gen() },
        channel: Some(channel),
        peak_displacement: log_uniform(&mut rng, 1e-5, 4e-5),
        range: 0.3,
        reflectivity: random_reflectivity(&mut rng, 0.5, 1.5),
        kind: SourceKind::Active,
        onset: 0.1,
        modulation,
    });
    scene
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LivenessSample {
    pub live: bool,
    pub score: f64,
}

/// Liveness scores of single-frame (40 ms) spans drawn from sound-bearing frames.
pub fn run_liveness_suite(config: &LivenessSuiteConfig) -> Result<Vec<LivenessSample>> {
    let jobs: Vec<(usize, bool)> = (0..config.scenes_per_class)
        .flat_map(|i| [(i, true), (i, false)])
        .collect();
    let per_scene = jobs
        .par_iter()
        .map(|&(i, live)| -> Result<Vec<LivenessSample>> {
            let scene = liveness_scene(config, i, live);
            let displacements = scene.displacements()?;
            let cir = simulate_with(&scene, &displacements)?;
            let stft = StftConfig::default();
            let spec = range_doppler(&cir, stft)?;
            let bin = scene.source_bin(0).expect("source on axis");
            let truth = scene.sound_truth(&displacements, stft, 0.3);
            let active: Vec<usize> = (0..spec.num_frames).filter(|&k| truth[bin][k]).collect();
            let mut rng = scene_rng(config.seed, 1_000_000 + i as u64 * 2 + live as u64);
            (0..config.spans_per_scene)
                .map(|_| {
                    let k = active[rng.gen_range(0..active.len())];
                    Ok(LivenessSample {
                        live,
                        score: liveness_score(&spec, 0, bin, Span::new(k, k + 1))?,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_scene.into_iter().flatten().collect())
}

/// Best single-threshold accuracy (`score > threshold` means live) and that threshold.
pub fn best_threshold(samples: &[LivenessSample]) -> (f64, f64) {
    let mut scores: Vec<f64> = samples.iter().map(|s| s.score).collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    let mut candidates = vec![scores[0] - 1.0];
    candidates.extend(scores.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    candidates.push(scores[scores.len() - 1] + 1.0);
    let mut best = (0.0, candidates[0]);
    for t in candidates {
        let correct = samples.iter().filter(|s| (s.score > t) == s.live).count();
        let acc = correct as f64 / samples.len() as f64;
        if acc > best.0 {
            best = (acc, t);
        }
    }
    best
}

/// Single-source scene for the projection-angle experiment: speech or a tone, silent for
/// the first 0.4 s.
pub fn projection_scene(seed: u64, index: usize) -> SceneDescription {
    let mut rng = scene_rng(seed, index as u64);
    let radar = RadarParams {
        num_range_bins: 16,
        num_receivers: 1,
        ..Default::default()
    };
    let mut scene = SceneDescription::new(radar, 1.5, seed.wrapping_add(index as u64))
        .with_uniform_noise(log_uniform(&mut rng, 1e-6, 1e-5));
    scene.sources.push(VibrationSource {
        audio: if rng.gen_bool(0.5) {
            AudioRef::Speech { seed: rng.gen() }
        } else {
            AudioRef::Tone {
                frequency: rng.gen_range(200.0..800.0),
                amplitude: 1.0,
            }
        },
        channel: None,
        peak_displacement: log_uniform(&mut rng, 5e-6, 2e-5),
        range: rng.gen_range(0.2..0.5),
        reflectivity: random_reflectivity(&mut rng, 0.5, 1.5),
        kind: SourceKind::Active,
        onset: 0.4,
        modulation: vec![],
    });
    scene
}

/// Silent slow-time span of [`projection_scene`], clear of filter edge effects.
pub fn projection_silent_span(rate: f64) -> Span {
    Span::new((0.05 * rate) as usize, (0.35 * rate) as usize)
}

/// Two speech sources at 0.75 m and 1.25 m in front of a two-receiver radar.
pub fn two_source_scene(seed: u64) -> SceneDescription {
    let radar = RadarParams {
        num_range_bins: 48,
        num_receivers: 2,
        ..Default::default()
    };
    let mut scene = SceneDescription::new(radar, 3.0, seed).with_uniform_noise(1e-6);
    for (i, range) in [0.75, 1.25].into_iter().enumerate() {
        scene.sources.push(VibrationSource {
            audio: AudioRef::Speech {
                seed: seed.wrapping_mul(31).wrapping_add(i as u64),
            },
            channel: None,
            peak_displacement: 2e-5,
            range,
            reflectivity: Complex64::from_polar(1.0, 0.7 + i as f64),
            kind: SourceKind::Active,
            onset: 0.3 + 0.2 * i as f64,
            modulation: vec![],
        });
    }
    scene
}

/// Largest |normalized cross-correlation| over lags up to `max_lag` between `estimate` and
/// the slice `span` of `reference` after the same high-pass the recovery applies. Both
/// sequences are mean-removed.
pub fn reference_correlation(
    estimate: &[f64],
    reference: &[f64],
    span: Span,
    sample_rate: f64,
    highpass_cutoff: f64,
    max_lag: usize,
) -> Result<f64> {
    let h = highpass_fir(highpass_cutoff, sample_rate, 255)?;
    let filtered = filter_centered(reference, &h, Edge::OddReflect);
    let end = span.end.min(filtered.len());
    let r = &filtered[span.start.min(end)..end];
    let n = estimate.len().min(r.len());
    let centered = |x: &[f64]| {
        let mean = x.iter().sum::<f64>() / x.len().max(1) as f64;
        x.iter().map(|v| v - mean).collect::<Vec<_>>()
    };
    let (a, b) = (centered(&estimate[..n]), centered(&r[..n]));
    let mut best = 0.0f64;
    for lag in -(max_lag as isize)..=max_lag as isize {
        let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
        for i in 0..n as isize {
            let j = i + lag;
            if j < 0 || j >= n as isize {
                continue;
            }
            let (x, y) = (a[i as usize], b[j as usize]);
            xy += x * y;
            xx += x * x;
            yy += y * y;
        }
        if xx > 0.0 && yy > 0.0 {
            best = best.max((xy / (xx * yy).sqrt()).abs());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_valid_and_deterministic() {
        let cfg = DetectionSuiteConfig::default();
        for i in 0..20 {
            let s = detection_scene(&cfg, i);
            s.validate().unwrap();
            assert_eq!(serde_json::to_string(&s).unwrap(), serde_json::to_string(&detection_scene(&cfg, i)).unwrap());
            assert!(!s.sources.is_empty() || !s.interferers.is_empty());
        }
        for i in 0..4 {
            liveness_scene(&LivenessSuiteConfig::default(), i, true).validate().unwrap();
            projection_scene(3, i).validate().unwrap();
        }
        two_source_scene(1).validate().unwrap();
    }

    #[test]
    fn threshold_search() {
        let s = |live, score| LivenessSample { live, score };
        let (acc, t) = best_threshold(&[s(false, 0.1), s(false, 0.2), s(true, 0.5), s(true, 0.9)]);
        assert_eq!(acc, 1.0);
        assert!(t > 0.2 && t < 0.5);
    }
}
