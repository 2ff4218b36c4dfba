//! Paired (radio-degraded, clean) spectrogram patches for training an enhancement model.
//!
//! Clean audio is passed through a jittered radio channel and mixed with receive-chain
//! noise at a drawn SNR. Both versions are cut into aligned 128x128 `log1p` magnitude
//! patches (one-sided rows DC..127 of a 256-point STFT, 128 frames).

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::dsp::{channel_fir, filter_centered, highpass_fir, Edge};
use crate::error::{Error, Result};
use crate::io::{load_wav, save_tensor, Metadata, Tensor};
use crate::recover::project_line;
use crate::resample::resample;
use crate::sim::CHANNEL_TAPS;
use crate::spectral::{one_sided_magnitude, Stft, StftConfig};
use crate::types::{AudioSignal, ChannelResponse};

pub const PATCH: usize = 128;
pub const PAIRS_PER_SHARD: usize = 1024;
pub const SYNTH_RATE: f64 = 6250.0;
const RECEIVE_HIGHPASS: f64 = 100.0;
const RECEIVE_TAPS: usize = 255;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseModel {
    /// SNR drawn uniformly in dB.
    SnrRange { min_db: f64, max_db: f64 },
    /// Recorded complex noise, projected through the receive chain, drawn uniformly in dB.
    Snapshots {
        snapshots: Vec<Vec<Complex64>>,
        min_db: f64,
        max_db: f64,
    },
}

impl NoiseModel {
    fn range(&self) -> (f64, f64) {
        match self {
            NoiseModel::SnrRange { min_db, max_db } | NoiseModel::Snapshots { min_db, max_db, .. } => {
                (*min_db, *max_db)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub channel_templates: Vec<ChannelResponse>,
    pub jitter_db: f64,
    pub noise: NoiseModel,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let nyq = SYNTH_RATE / 2.0;
        Self {
            channel_templates: vec![
                ChannelResponse::lowpass(1800.0, 2200.0, -50.0, nyq),
                ChannelResponse::lowpass(1500.0, 2500.0, -40.0, nyq),
                ChannelResponse {
                    breakpoint_frequencies: vec![0.0, 400.0, 1200.0, 2000.0, 2400.0, nyq],
                    breakpoint_gains_db: vec![-6.0, 0.0, -3.0, -12.0, -45.0, -50.0],
                    jitter_db: 0.0,
                },
            ],
            jitter_db: 2.0,
            noise: NoiseModel::SnrRange {
                min_db: -5.0,
                max_db: 30.0,
            },
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channel_templates.is_empty() {
            return Err(Error::param("at least one channel template is required"));
        }
        for c in &self.channel_templates {
            c.validate(SYNTH_RATE)?;
        }
        if !(self.jitter_db >= 0.0 && self.jitter_db.is_finite()) {
            return Err(Error::param("jitter_db must be finite and >= 0"));
        }
        let (lo, hi) = self.noise.range();
        if !(lo <= hi) || lo.is_nan() {
            return Err(Error::param("noise range must satisfy min_db <= max_db"));
        }
        if let NoiseModel::Snapshots { snapshots, .. } = &self.noise {
            if snapshots.iter().all(|s| s.len() < 16) {
                return Err(Error::param("noise snapshots are empty"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding, hex.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Channel with every breakpoint gain perturbed by a uniform draw in `±jitter_db`.
pub fn realize_channel(channel: &ChannelResponse, seed: u64) -> ChannelResponse {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = channel.clone();
    if channel.jitter_db > 0.0 {
        for g in out.breakpoint_gains_db.iter_mut() {
            *g += rng.gen_range(-channel.jitter_db..=channel.jitter_db);
        }
    }
    out.jitter_db = 0.0;
    out
}

/// `h * a + w`: the audio through a jittered channel plus receive-chain noise at `snr_db`
/// relative to the degraded signal (`f64::INFINITY` for none). Uses the synthetic noise
/// model; see [`degrade_with`] for recorded snapshots.
pub fn degrade(audio: &AudioSignal, channel: &ChannelResponse, snr_db: f64, seed: u64) -> Result<AudioSignal> {
    degrade_with(audio, channel, snr_db, seed, &[])
}

pub fn degrade_with(
    audio: &AudioSignal,
    channel: &ChannelResponse,
    snr_db: f64,
    seed: u64,
    snapshots: &[Vec<Complex64>],
) -> Result<AudioSignal> {
    audio.validate()?;
    if audio.sample_rate != SYNTH_RATE {
        return Err(Error::param(format!(
            "degrade expects {SYNTH_RATE} Hz audio, got {}",
            audio.sample_rate
        )));
    }
    if snr_db.is_nan() {
        return Err(Error::param("snr_db is NaN"));
    }
    let realized = realize_channel(channel, seed);
    let h = channel_fir(&realized, SYNTH_RATE, CHANNEL_TAPS)?;
    let mut y = filter_centered(&audio.samples, &h, Edge::Zero);
    let signal_power = y.iter().map(|v| v * v).sum::<f64>() / y.len().max(1) as f64;
    if snr_db.is_finite() && signal_power > 0.0 && !y.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let noise = receive_chain_noise(&mut rng, y.len(), snapshots)?;
        let noise_power = noise.iter().map(|v| v * v).sum::<f64>() / noise.len() as f64;
        if noise_power > 0.0 {
            let scale = (signal_power / noise_power / 10f64.powf(snr_db / 10.0)).sqrt();
            y.iter_mut().zip(&noise).for_each(|(v, w)| *v += scale * w);
        }
    }
    Ok(AudioSignal {
        samples: y,
        sample_rate: SYNTH_RATE,
        label: audio.label.clone(),
    })
}

/// Circular complex noise (or a snapshot excerpt), high-passed and projected onto its
/// principal axis like a recovered signal.
fn receive_chain_noise(rng: &mut ChaCha8Rng, len: usize, snapshots: &[Vec<Complex64>]) -> Result<Vec<f64>> {
    let usable: Vec<&Vec<Complex64>> = snapshots.iter().filter(|s| s.len() >= 16).collect();
    let raw: Vec<Complex64> = if usable.is_empty() {
        (0..len)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im)
            })
            .collect()
    } else {
        let snap = usable[rng.gen_range(0..usable.len())];
        let start = rng.gen_range(0..snap.len());
        (0..len).map(|i| snap[(start + i) % snap.len()]).collect()
    };
    let hp = highpass_fir(RECEIVE_HIGHPASS, SYNTH_RATE, RECEIVE_TAPS)?;
    let filtered = filter_centered(&raw, &hp, Edge::OddReflect);
    match project_line(&filtered) {
        Ok(p) => Ok(p.projected),
        Err(Error::Degenerate(_)) => Ok(vec![0.0; len]),
        Err(e) => Err(e),
    }
}

/// Number of samples a 128-frame patch covers.
pub fn patch_samples() -> usize {
    StftConfig::default().signal_length(PATCH)
}

/// `log1p` one-sided magnitude patch `[row][frame]`, flattened; the signal must hold
/// exactly [`patch_samples`] samples.
pub fn spectrogram_patch(samples: &[f64]) -> Result<Vec<f32>> {
    if samples.len() != patch_samples() {
        return Err(Error::param(format!(
            "patch needs {} samples, got {}",
            patch_samples(),
            samples.len()
        )));
    }
    let spec = Stft::new(StftConfig::default())?.forward_real(samples)?;
    let rows = one_sided_magnitude(&spec, PATCH);
    Ok(rows.into_iter().flatten().map(|m| m.ln_1p() as f32).collect())
}

/// Inverse of the patch mapping.
pub fn unmap_patch(patch: &[f32]) -> Vec<f64> {
    patch.iter().map(|&v| (v as f64).exp_m1()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetadata {
    pub index: u64,
    pub file: String,
    pub offset: usize,
    pub channel_id: usize,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub input_patch: Vec<f32>,
    pub target_patch: Vec<f32>,
    pub metadata: PairMetadata,
}

/// Deterministic source of training pairs: pair `i` depends only on the seed and `i`.
#[derive(Debug, Clone)]
pub struct PairGenerator {
    files: Vec<(String, AudioSignal)>,
    config: SynthConfig,
    seed: u64,
}

impl PairGenerator {
    /// Load every `.wav` in `audio_dir` (sorted by name), resampled to 6250 Hz.
    pub fn from_dir(audio_dir: &Path, config: SynthConfig, seed: u64) -> Result<Self> {
        let entries = std::fs::read_dir(audio_dir).map_err(|e| Error::io(audio_dir, e))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
            .collect();
        paths.sort();
        let mut files = Vec::new();
        for p in paths {
            let audio = load_wav(&p)?;
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            files.push((name, audio));
        }
        Self::from_signals(files, config, seed)
    }

    pub fn from_signals(files: Vec<(String, AudioSignal)>, config: SynthConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if files.is_empty() {
            return Err(Error::param("audio directory contains no WAV files"));
        }
        let need = patch_samples();
        let mut usable = Vec::new();
        for (name, audio) in files {
            let audio = if audio.sample_rate != SYNTH_RATE {
                resample(&audio, SYNTH_RATE)?
            } else {
                audio
            };
            if audio.len() >= need {
                usable.push((name, audio));
            } else {
                log::warn!("skipping {name}: shorter than one {need}-sample patch");
            }
        }
        if usable.is_empty() {
            return Err(Error::param(format!("no audio file holds a full {need}-sample patch")));
        }
        Ok(Self {
            files: usable,
            config,
            seed,
        })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.config
    }

    pub fn pair(&self, index: u64) -> Result<TrainingPair> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let need = patch_samples();
        let file = rng.gen_range(0..self.files.len());
        let (name, audio) = &self.files[file];
        let offset = rng.gen_range(0..=audio.len() - need);
        let channel_id = rng.gen_range(0..self.config.channel_templates.len());
        let (lo, hi) = self.config.noise.range();
        let snr_db = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let draw_seed: u64 = rng.gen();

        let clean = AudioSignal {
            samples: audio.samples[offset..offset + need].to_vec(),
            sample_rate: SYNTH_RATE,
            label: None,
        };
        let mut channel = self.config.channel_templates[channel_id].clone();
        channel.jitter_db = self.config.jitter_db;
        let snapshots: &[Vec<Complex64>] = match &self.config.noise {
            NoiseModel::Snapshots { snapshots, .. } => snapshots,
            NoiseModel::SnrRange { .. } => &[],
        };
        let degraded = degrade_with(&clean, &channel, snr_db, draw_seed, snapshots)?;
        Ok(TrainingPair {
            input_patch: spectrogram_patch(&degraded.samples)?,
            target_patch: spectrogram_patch(&clean.samples)?,
            metadata: PairMetadata {
                index,
                file: name.clone(),
                offset,
                channel_id,
                snr_db,
            },
        })
    }
}

/// Stream of `count` pairs from the WAV files in `audio_dir`.
pub fn make_pairs(
    audio_dir: &Path,
    config: SynthConfig,
    count: usize,
    seed: u64,
) -> Result<impl Iterator<Item = Result<TrainingPair>>> {
    let generator = PairGenerator::from_dir(audio_dir, config, seed)?;
    Ok((0..count as u64).map(move |i| generator.pair(i)))
}

/// Write `count` pairs as RSPG shards `[N, 2, 128, 128]` (input first) of up to 1024 pairs,
/// generated in parallel and written in order. Returns the shard paths.
pub fn write_shards(generator: &PairGenerator, count: usize, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::new();
    let digest = generator.config.digest();
    for (shard, start) in (0..count).step_by(PAIRS_PER_SHARD).enumerate() {
        let end = (start + PAIRS_PER_SHARD).min(count);
        let pairs = (start..end)
            .into_par_iter()
            .map(|i| generator.pair(i as u64))
            .collect::<Result<Vec<_>>>()?;
        let mut data = Vec::with_capacity(pairs.len() * 2 * PATCH * PATCH);
        for p in &pairs {
            data.extend_from_slice(&p.input_patch);
            data.extend_from_slice(&p.target_patch);
        }
        let tensor = Tensor::real(vec![pairs.len(), 2, PATCH, PATCH], data)?;
        let mut meta = Metadata::new();
        meta.insert("kind".into(), json!("training_pairs"));
        meta.insert("seed".into(), json!(generator.seed));
        meta.insert("config_digest".into(), json!(digest));
        meta.insert("first_index".into(), json!(start));
        meta.insert("mapping".into(), json!("log1p"));
        meta.insert(
            "pairs".into(),
            serde_json::to_value(pairs.iter().map(|p| &p.metadata).collect::<Vec<_>>())?,
        );
        let path = out_dir.join(format!("shard-{shard:05}.rspg"));
        save_tensor(&tensor, &path, &meta)?;
        paths.push(path);
    }
    Ok(paths)
}
