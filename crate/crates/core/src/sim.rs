//! Radar scene simulator: emits CIR streams straight from a declarative scene.
//!
//! A source at range `R0` with displacement `x(t)` occupies exactly one range bin and
//! contributes `alpha * exp(-j 2 pi (R0 + x(t)) / lambda)` there, with `R` the one-way
//! range. Interferers move along piecewise-linear trajectories and are split between
//! the two range bins nearest their position. Static reflectors add constant offsets,
//! multipath adds attenuated copies of a source at offset bins, every receiver gets a
//! fixed phase offset and its own circular white noise.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{channel_fir, filter_centered, Edge};
use crate::error::{Error, Result};
use crate::io::load_wav;
use crate::resample::resample;
use crate::spectral::StftConfig;
use crate::types::{AudioSignal, ChannelResponse, CirFrameSeries, DisplacementSignal, RadarParams};
use crate::waveforms;

/// Taps of the zero-phase FIR that realizes a [`ChannelResponse`].
pub const CHANNEL_TAPS: usize = 257;
/// Upper bound on source peak displacement, meters.
pub const MAX_PEAK_DISPLACEMENT: f64 = 1e-4;
pub const MAX_INTERFERER_SPEED: f64 = 5.0;

const PHASE_STREAM: u64 = u64::MAX;

/// Where a source's audio comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AudioRef {
    /// WAV file, relative paths resolved against the scene file's directory.
    Wav { path: PathBuf },
    Tone {
        frequency: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Harmonic {
        fundamental: f64,
        #[serde(default = "default_harmonics")]
        harmonics: usize,
    },
    Speech { seed: u64 },
    Noise { seed: u64 },
    Samples { samples: Vec<f64>, sample_rate: f64 },
}

fn one() -> f64 {
    1.0
}

fn default_harmonics() -> usize {
    8
}

impl AudioRef {
    pub fn inline(audio: &AudioSignal) -> Self {
        AudioRef::Samples {
            samples: audio.samples.clone(),
            sample_rate: audio.sample_rate,
        }
    }

    /// Produce audio at `rate` covering at most `secs` seconds.
    pub fn realize(&self, base_dir: Option<&Path>, rate: f64, secs: f64) -> Result<AudioSignal> {
        let audio = match self {
            AudioRef::Wav { path } => {
                let full = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                load_wav(full)?
            }
            AudioRef::Tone { frequency, amplitude } => waveforms::tone(*frequency, *amplitude, rate, secs),
            AudioRef::Harmonic { fundamental, harmonics } => {
                waveforms::harmonic(*fundamental, *harmonics, rate, secs)
            }
            AudioRef::Speech { seed } => waveforms::speech(*seed, rate, secs),
            AudioRef::Noise { seed } => waveforms::white_noise(*seed, 0.3, rate, secs),
            AudioRef::Samples { samples, sample_rate } => AudioSignal::new(samples.clone(), *sample_rate)?,
        };
        let mut audio = resample(&audio, rate)?;
        audio.samples.truncate((rate * secs).round() as usize);
        Ok(audio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    Active,
    Passive,
}

/// Sinusoidal modulation of a source's reflectivity, `1 + depth * sin(2 pi f t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeModulation {
    pub frequency: f64,
    pub depth: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VibrationSource {
    pub audio: AudioRef,
    pub channel: Option<ChannelResponse>,
    /// Peak of `x(t)`, meters.
    pub peak_displacement: f64,
    /// Static range `R0`, meters.
    pub range: f64,
    pub reflectivity: Complex64,
    #[serde(default)]
    pub kind: SourceKind,
    /// Seconds of silence before the audio starts.
    #[serde(default)]
    pub onset: f64,
    /// Reflectivity fluctuations, e.g. body motion around a throat.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modulation: Vec<AmplitudeModulation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub time: f64,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionInterferer {
    /// Range over time, linearly interpolated and held beyond the ends.
    pub trajectory: Vec<Waypoint>,
    pub reflectivity: Complex64,
}

impl MotionInterferer {
    pub fn range_at(&self, t: f64) -> f64 {
        let w = &self.trajectory;
        if t <= w[0].time {
            return w[0].range;
        }
        let k = w.partition_point(|p| p.time < t);
        if k == w.len() {
            return w[k - 1].range;
        }
        let (a, b) = (w[k - 1], w[k]);
        let u = (t - a.time) / (b.time - a.time);
        a.range + u * (b.range - a.range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticReflector {
    pub range: f64,
    pub reflectivity: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipathSpec {
    pub source_index: usize,
    pub extra_delay_bins: i32,
    pub attenuation_db: f64,
}

/// Scalar wall model: attenuates everything behind it and raises the noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallSpec {
    pub attenuation_db: f64,
    #[serde(default)]
    pub extra_noise_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    #[serde(default)]
    pub radar: RadarParams,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sources: Vec<VibrationSource>,
    #[serde(default)]
    pub interferers: Vec<MotionInterferer>,
    #[serde(default)]
    pub background: Vec<StaticReflector>,
    /// Linear noise power per receiver; empty means noiseless.
    #[serde(default)]
    pub noise_power_per_receiver: Vec<f64>,
    #[serde(default)]
    pub multipath: Vec<MultipathSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall: Option<WallSpec>,
    /// Directory relative audio paths resolve against; set by [`SceneDescription::load`].
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl SceneDescription {
    pub fn new(radar: RadarParams, duration: f64, seed: u64) -> Self {
        Self {
            radar,
            duration,
            seed,
            sources: Vec::new(),
            interferers: Vec::new(),
            background: Vec::new(),
            noise_power_per_receiver: Vec::new(),
            multipath: Vec::new(),
            wall: None,
            base_dir: None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut scene: SceneDescription = serde_json::from_str(&text)?;
        scene.base_dir = path.parent().map(Path::to_path_buf);
        Ok(scene)
    }

    pub fn num_samples(&self) -> usize {
        (self.duration * self.radar.slow_time_rate).round() as usize
    }

    pub fn with_uniform_noise(mut self, power: f64) -> Self {
        self.noise_power_per_receiver = vec![power; self.radar.num_receivers];
        self
    }

    pub fn source_bin(&self, index: usize) -> Option<usize> {
        self.sources.get(index).and_then(|s| self.radar.bin_of(s.range))
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::param("scene duration must be > 0"));
        }
        let max_range = self.radar.max_range();
        for (i, s) in self.sources.iter().enumerate() {
            if self.radar.bin_of(s.range).is_none() {
                return Err(Error::param(format!(
                    "source {i} at {} m lies outside the range axis [0, {max_range})",
                    s.range
                )));
            }
            if !(s.peak_displacement > 0.0 && s.peak_displacement <= MAX_PEAK_DISPLACEMENT) {
                return Err(Error::param(format!(
                    "source {i} peak displacement {} m outside (0, 1e-4]",
                    s.peak_displacement
                )));
            }
            if !(s.reflectivity.norm() > 0.0) {
                return Err(Error::param(format!("source {i} reflectivity must be non-zero")));
            }
            if s.onset < 0.0 {
                return Err(Error::param(format!("source {i} onset must be >= 0")));
            }
            if let Some(ch) = &s.channel {
                ch.validate(self.radar.slow_time_rate)?;
            }
        }
        for (i, it) in self.interferers.iter().enumerate() {
            if it.trajectory.is_empty() {
                return Err(Error::param(format!("interferer {i} has an empty trajectory")));
            }
            for w in &it.trajectory {
                if self.radar.bin_of(w.range).is_none() {
                    return Err(Error::param(format!(
                        "interferer {i} waypoint at {} m outside the range axis",
                        w.range
                    )));
                }
            }
            for pair in it.trajectory.windows(2) {
                let dt = pair[1].time - pair[0].time;
                if !(dt > 0.0) {
                    return Err(Error::param(format!("interferer {i} waypoint times must increase")));
                }
                let speed = (pair[1].range - pair[0].range).abs() / dt;
                if speed > MAX_INTERFERER_SPEED + 1e-9 {
                    return Err(Error::param(format!(
                        "interferer {i} moves at {speed:.2} m/s (> {MAX_INTERFERER_SPEED})"
                    )));
                }
            }
        }
        for (i, b) in self.background.iter().enumerate() {
            if self.radar.bin_of(b.range).is_none() {
                return Err(Error::param(format!("background reflector {i} outside the range axis")));
            }
        }
        if !self.noise_power_per_receiver.is_empty() {
            if self.noise_power_per_receiver.len() != self.radar.num_receivers {
                return Err(Error::param(format!(
                    "{} noise powers given for {} receivers",
                    self.noise_power_per_receiver.len(),
                    self.radar.num_receivers
                )));
            }
            if self.noise_power_per_receiver.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
                return Err(Error::param("noise powers must be finite and >= 0"));
            }
        }
        for (i, m) in self.multipath.iter().enumerate() {
            let bin = self
                .source_bin(m.source_index)
                .ok_or_else(|| Error::param(format!("multipath {i} names a missing source")))?;
            if m.extra_delay_bins.unsigned_abs() > 4 {
                return Err(Error::param(format!("multipath {i} offset exceeds 4 bins")));
            }
            let target = bin as i64 + m.extra_delay_bins as i64;
            if target < 0 || target >= self.radar.num_range_bins as i64 {
                return Err(Error::param(format!("multipath {i} lands outside the range axis")));
            }
            if !(m.attenuation_db >= 0.0) {
                return Err(Error::param(format!("multipath {i} attenuation must be >= 0 dB")));
            }
        }
        Ok(())
    }

    /// Displacement of every source over the scene's slow-time axis, onset applied.
    pub fn displacements(&self) -> Result<Vec<DisplacementSignal>> {
        let fs = self.radar.slow_time_rate;
        let n = self.num_samples();
        self.sources
            .iter()
            .map(|s| {
                let onset = (s.onset * fs).round() as usize;
                let mut samples = vec![0.0; n];
                if onset < n {
                    let audio = s.audio.realize(self.base_dir.as_deref(), fs, (n - onset) as f64 / fs)?;
                    let channel = s.channel.clone().unwrap_or_else(|| ChannelResponse::flat(fs / 2.0));
                    let x = synthesize_displacement(&audio, &channel, s.peak_displacement)?;
                    for (dst, v) in samples[onset..].iter_mut().zip(&x.samples) {
                        *dst = *v;
                    }
                }
                DisplacementSignal::new(samples, fs)
            })
            .collect()
    }

    /// Frame-level ground truth `[bin][frame]`: a source bin is sound-bearing in a frame
    /// when the frame's displacement RMS exceeds `rel_threshold` of that source's active RMS.
    pub fn sound_truth(
        &self,
        displacements: &[DisplacementSignal],
        config: StftConfig,
        rel_threshold: f64,
    ) -> Vec<Vec<bool>> {
        let frames = config.num_frames(self.num_samples());
        let mut truth = vec![vec![false; frames]; self.radar.num_range_bins];
        let hop = config.hop();
        let n = config.frame_length;
        for (i, x) in displacements.iter().enumerate() {
            let Some(bin) = self.source_bin(i) else { continue };
            let powers: Vec<f64> = (0..frames)
                .map(|k| x.samples[k * hop..k * hop + n].iter().map(|v| v * v).sum::<f64>() / n as f64)
                .collect();
            let active: Vec<f64> = powers.iter().copied().filter(|p| *p > 0.0).collect();
            if active.is_empty() {
                continue;
            }
            let mean = active.iter().sum::<f64>() / active.len() as f64;
            for (k, p) in powers.iter().enumerate() {
                if *p > rel_threshold * rel_threshold * mean {
                    truth[bin][k] = true;
                }
            }
        }
        truth
    }
}

/// `x(t) = h * a(t)`, scaled so `max |x| = peak_displacement`.
pub fn synthesize_displacement(
    audio: &AudioSignal,
    channel: &ChannelResponse,
    peak_displacement: f64,
) -> Result<DisplacementSignal> {
    if audio.is_empty() {
        return Err(Error::param("cannot synthesize displacement from empty audio"));
    }
    if !(peak_displacement > 0.0 && peak_displacement <= MAX_PEAK_DISPLACEMENT) {
        return Err(Error::param(format!(
            "peak displacement {peak_displacement} m outside (0, 1e-4]"
        )));
    }
    audio.validate()?;
    let h = channel_fir(channel, audio.sample_rate, CHANNEL_TAPS)?;
    let mut x = filter_centered(&audio.samples, &h, Edge::Zero);
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak_displacement / peak);
    }
    DisplacementSignal::new(x, audio.sample_rate)
}

/// Per-receiver phase offsets, a pure function of the seed.
pub fn receiver_phases(seed: u64, receivers: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PHASE_STREAM);
    (0..receivers).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()
}

pub fn simulate(scene: &SceneDescription) -> Result<CirFrameSeries> {
    scene.validate()?;
    let displacements = scene.displacements()?;
    simulate_with(scene, &displacements)
}

/// Simulate with precomputed source displacements (as returned by [`SceneDescription::displacements`]).
pub fn simulate_with(scene: &SceneDescription, displacements: &[DisplacementSignal]) -> Result<CirFrameSeries> {
    scene.validate()?;
    if displacements.len() != scene.sources.len() {
        return Err(Error::param("one displacement signal per source required"));
    }
    let radar = scene.radar;
    let n = scene.num_samples();
    let fs = radar.slow_time_rate;
    let lambda = radar.wavelength();
    let spacing = radar.range_bin_spacing();
    let nbins = radar.num_range_bins;
    let (wall_gain, wall_noise) = match scene.wall {
        Some(w) => (10f64.powf(-w.attenuation_db / 20.0), w.extra_noise_power),
        None => (1.0, 0.0),
    };
    let phases = receiver_phases(scene.seed, radar.num_receivers);
    let carrier = |range: f64| Complex64::from_polar(1.0, -2.0 * PI * range / lambda);

    // Emitters shared by all receivers: (bin, per-sample value).
    let mut paths: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for (i, (src, x)) in scene.sources.iter().zip(displacements).enumerate() {
        let bin = radar.bin_of(src.range).expect("validated");
        let amplitude = |t: usize| -> f64 {
            let time = t as f64 / fs;
            src.modulation
                .iter()
                .map(|m| 1.0 + m.depth * (2.0 * PI * m.frequency * time + m.phase).sin())
                .product()
        };
        let direct: Vec<Complex64> = (0..n)
            .map(|t| src.reflectivity * wall_gain * amplitude(t) * carrier(src.range + x.samples[t]))
            .collect();
        for m in scene.multipath.iter().filter(|m| m.source_index == i) {
            let extra = m.extra_delay_bins as f64 * spacing;
            let g = 10f64.powf(-m.attenuation_db / 20.0);
            let copy = (0..n)
                .map(|t| src.reflectivity * wall_gain * g * amplitude(t) * carrier(src.range + extra + x.samples[t]))
                .collect();
            paths.push(((bin as i64 + m.extra_delay_bins as i64) as usize, copy));
        }
        paths.push((bin, direct));
    }
    for it in &scene.interferers {
        let mut near = vec![Complex64::new(0.0, 0.0); n];
        let mut far = vec![Complex64::new(0.0, 0.0); n];
        let mut lower = vec![0usize; n];
        for t in 0..n {
            let r = it.range_at(t as f64 / fs);
            let v = it.reflectivity * wall_gain * carrier(r);
            // bin centers sit at (b + 1/2) * spacing
            let pos = (r / spacing - 0.5).clamp(0.0, (nbins - 1) as f64);
            let b = (pos.floor() as usize).min(nbins - 1);
            // raised-cosine split keeps the per-bin amplitude free of kinks at bin centers
            let w = (0.5 * PI * (pos - b as f64)).sin().powi(2);
            lower[t] = b;
            near[t] = v * (1.0 - w);
            far[t] = v * w;
        }
        // regroup the moving contribution into per-bin tracks
        let mut tracks: std::collections::BTreeMap<usize, Vec<Complex64>> = Default::default();
        for t in 0..n {
            let b = lower[t];
            tracks.entry(b).or_insert_with(|| vec![Complex64::new(0.0, 0.0); n])[t] += near[t];
            if b + 1 < nbins && far[t] != Complex64::new(0.0, 0.0) {
                tracks.entry(b + 1).or_insert_with(|| vec![Complex64::new(0.0, 0.0); n])[t] += far[t];
            }
        }
        paths.extend(tracks);
    }
    for b in &scene.background {
        let bin = radar.bin_of(b.range).expect("validated");
        paths.push((bin, vec![b.reflectivity * carrier(b.range); n]));
    }

    let mut cir = CirFrameSeries::zeros(radar, n);
    let noise: Vec<f64> = (0..radar.num_receivers)
        .map(|rx| scene.noise_power_per_receiver.get(rx).copied().unwrap_or(0.0) + wall_noise)
        .collect();
    let stride = nbins * n;
    cir.data_mut()
        .par_chunks_mut(stride.max(1))
        .enumerate()
        .for_each(|(rx, block)| {
            let rot = Complex64::from_polar(1.0, phases[rx]);
            for (bin, values) in &paths {
                let dst = &mut block[bin * n..(bin + 1) * n];
                for (d, v) in dst.iter_mut().zip(values) {
                    *d += v * rot;
                }
            }
            if noise[rx] > 0.0 {
                let sigma = (noise[rx] / 2.0).sqrt();
                let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
                rng.set_stream(rx as u64);
                for d in block.iter_mut() {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *d += Complex64::new(re * sigma, im * sigma);
                }
            }
        });
    Ok(cir)
}

/// Peak displacement for a source at `spl_db`, anchored at 5 um for 85 dB SPL.
pub fn displacement_for_spl(spl_db: f64) -> f64 {
    5e-6 * 10f64.powf((spl_db - 85.0) / 20.0)
}

/// Two-way amplitude path gain relative to a reflector at 1 m.
pub fn path_gain(range: f64) -> f64 {
    1.0 / (range * range).max(1e-6)
}
