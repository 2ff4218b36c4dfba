//! Mono WAV read/write, PCM 16-bit and IEEE float32 only.

use std::path::Path;

use hound::{SampleFormat, WavSpec};

use crate::error::{Error, Result};
use crate::types::AudioSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    #[default]
    Pcm16,
    Float32,
}

fn map_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        hound::Error::Unsupported => Error::Unsupported("WAV encoding".into()),
        hound::Error::FormatError(reason) => Error::format("WAV", reason),
        other => Error::format("WAV", other.to_string()),
    }
}

/// Loads a WAV file, down-mixing multichannel input by taking channel 0.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| map_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .step_by(channels)
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_err(path, e))?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .step_by(channels)
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_err(path, e))?,
        (fmt, bits) => {
            return Err(Error::Unsupported(format!("WAV {fmt:?} at {bits} bits")));
        }
    };
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    let mut signal = AudioSignal::new(samples, spec.sample_rate as f64)?;
    signal.label = label;
    Ok(signal)
}

pub fn save_wav(signal: &AudioSignal, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    signal.validate()?;
    let rate = signal.sample_rate.round();
    if (rate - signal.sample_rate).abs() > 1e-9 || rate > u32::MAX as f64 {
        return Err(Error::param(format!(
            "WAV needs an integral sample rate, got {}",
            signal.sample_rate
        )));
    }
    let (bits_per_sample, sample_format) = match encoding {
        WavEncoding::Pcm16 => (16, SampleFormat::Int),
        WavEncoding::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample,
        sample_format,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_err(path, e))?;
    for &s in &signal.samples {
        match encoding {
            WavEncoding::Pcm16 => {
                let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(q)
            }
            WavEncoding::Float32 => writer.write_sample(s as f32),
        }
        .map_err(|e| map_err(path, e))?;
    }
    writer.finalize().map_err(|e| map_err(path, e))
}
