use std::path::Path;

use num_complex::Complex64;
use radiomic::io::{load_cir, load_wav, save_cir, Metadata};
use radiomic::recover::{recover_bin, RecoverConfig};
use radiomic::sim::{simulate, AudioRef, SceneDescription, SourceKind, VibrationSource};
use radiomic::synth::{write_shards, PairGenerator, SynthConfig, PATCH};
use radiomic::waveforms::speech;
use radiomic::{RadarParams, Span};
use rustfft::FftPlanner;

fn riff_pcm16(samples: &[i16], rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut b = Vec::new();
    b.extend_from_slice(b"RIFF");
    b.extend_from_slice(&(36 + data_len).to_le_bytes());
    b.extend_from_slice(b"WAVEfmt ");
    b.extend_from_slice(&16u32.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&rate.to_le_bytes());
    b.extend_from_slice(&(rate * 2).to_le_bytes());
    b.extend_from_slice(&2u16.to_le_bytes());
    b.extend_from_slice(&16u16.to_le_bytes());
    b.extend_from_slice(b"data");
    b.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        b.extend_from_slice(&s.to_le_bytes());
    }
    b
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> &'a [u8] {
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        s
    }
    fn u8(&mut self) -> u8 {
        self.take(1)[0]
    }
    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take(2).try_into().unwrap())
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take(4).try_into().unwrap())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take(8).try_into().unwrap())
    }
    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take(4).try_into().unwrap())
    }
}

/// Hand-parsed RSPG file: (dtype, dims, payload floats, metadata).
fn parse_rspg(path: &Path) -> (u8, Vec<u64>, Vec<f32>, serde_json::Value) {
    let bytes = std::fs::read(path).unwrap();
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    assert_eq!(c.take(4), b"RSPG");
    assert_eq!(c.u16(), 1);
    let dtype = c.u8();
    let ndim = c.u8() as usize;
    let dims: Vec<u64> = (0..ndim).map(|_| c.u64()).collect();
    let scalars = dims.iter().product::<u64>() as usize * if dtype == 1 { 2 } else { 1 };
    let payload: Vec<f32> = (0..scalars).map(|_| c.f32()).collect();
    let meta_len = c.u32() as usize;
    let meta = serde_json::from_slice(c.take(meta_len)).unwrap();
    assert_eq!(c.pos, bytes.len(), "trailing bytes after metadata");
    (dtype, dims, payload, meta)
}

#[test]
fn hand_written_wav_tone_has_440_hz_peak() {
    let rate = 6250u32;
    let n = rate as usize;
    let samples: Vec<i16> = (0..n)
        .map(|i| (16000.0 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / rate as f64).sin()).round() as i16)
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tone.wav");
    std::fs::write(&path, riff_pcm16(&samples, rate)).unwrap();

    let audio = load_wav(&path).unwrap();
    assert_eq!(audio.sample_rate, rate as f64);
    assert_eq!(audio.len(), n);
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> =
        audio.samples.iter().map(|&v| rustfft::num_complex::Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let peak = (0..n / 2).max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm())).unwrap();
    let resolution = rate as f64 / n as f64;
    assert!((peak as f64 * resolution - 440.0).abs() <= resolution);
}

#[test]
fn training_shards_follow_the_byte_layout() {
    let audio = speech(5, 6250.0, 3.0);
    let generator = PairGenerator::from_signals(vec![("a".into(), audio)], SynthConfig::default(), 11).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = write_shards(&generator, 3, dir.path()).unwrap();
    assert_eq!(paths.len(), 1);

    let (dtype, dims, payload, meta) = parse_rspg(&paths[0]);
    assert_eq!(dtype, 0);
    assert_eq!(dims, vec![3, 2, PATCH as u64, PATCH as u64]);
    assert!(payload.iter().all(|v| v.is_finite() && *v >= 0.0));
    assert_eq!(meta["kind"], "training_pairs");
    assert_eq!(meta["seed"], 11);
    assert_eq!(meta["first_index"], 0);
    assert_eq!(meta["config_digest"], SynthConfig::default().digest());
    assert_eq!(meta["pairs"].as_array().unwrap().len(), 3);

    let first = generator.pair(0).unwrap();
    let plane = PATCH * PATCH;
    assert_eq!(&payload[..plane], &first.input_patch[..]);
    assert_eq!(&payload[plane..2 * plane], &first.target_patch[..]);
}

#[test]
fn cir_file_is_complex_receiver_bin_time() {
    let radar = RadarParams {
        num_range_bins: 6,
        num_receivers: 2,
        ..Default::default()
    };
    let mut scene = SceneDescription::new(radar, 0.1, 3).with_uniform_noise(1e-4);
    scene.sources.push(VibrationSource {
        audio: AudioRef::Tone { frequency: 300.0, amplitude: 1.0 },
        channel: None,
        peak_displacement: 1e-5,
        range: 0.1,
        reflectivity: Complex64::new(1.0, 0.0),
        kind: SourceKind::Active,
        onset: 0.0,
        modulation: vec![],
    });
    let cir = simulate(&scene).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scene.rspg");
    let mut extra = Metadata::new();
    extra.insert("seed".into(), 3.into());
    save_cir(&cir, &path, &extra).unwrap();

    let (dtype, dims, payload, meta) = parse_rspg(&path);
    assert_eq!(dtype, 1);
    assert_eq!(dims, vec![2, 6, cir.num_samples() as u64]);
    assert_eq!(meta["kind"], "cir");
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["radar"]["slow_time_rate"], 6250.0);
    for rx in 0..2 {
        for bin in 0..6 {
            for (t, v) in cir.bin_series(rx, bin).iter().enumerate() {
                let k = 2 * ((rx * 6 + bin) * cir.num_samples() + t);
                assert_eq!(payload[k], v.re as f32);
                assert_eq!(payload[k + 1], v.im as f32);
            }
        }
    }
    let back = load_cir(&path).unwrap();
    assert_eq!(back.params, cir.params);
    assert_eq!(back.num_samples(), cir.num_samples());
}

#[test]
fn recovered_audio_is_float32_at_slow_time_rate() {
    let radar = RadarParams {
        num_range_bins: 4,
        num_receivers: 1,
        ..Default::default()
    };
    let mut scene = SceneDescription::new(radar, 0.5, 1).with_uniform_noise(1e-8);
    scene.sources.push(VibrationSource {
        audio: AudioRef::Tone { frequency: 300.0, amplitude: 1.0 },
        channel: None,
        peak_displacement: 5e-6,
        range: 0.1,
        reflectivity: Complex64::new(1.0, 0.0),
        kind: SourceKind::Active,
        onset: 0.0,
        modulation: vec![],
    });
    let cir = simulate(&scene).unwrap();
    let bin = scene.source_bin(0).unwrap();
    let sound = recover_bin(&cir, 0, bin, Span::new(0, cir.num_samples()), &RecoverConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let wav = sound.save(dir.path(), "source-00").unwrap();

    let reader = hound::WavReader::open(&wav).unwrap();
    let spec = reader.spec();
    assert_eq!(spec.channels, 1);
    assert_eq!(spec.sample_rate, 6250);
    assert_eq!(spec.bits_per_sample, 32);
    assert_eq!(spec.sample_format, hound::SampleFormat::Float);
    assert_eq!(reader.len() as usize, sound.audio.len());

    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("source-00.json")).unwrap()).unwrap();
    assert_eq!(sidecar["schema_version"], 1);
    assert_eq!(sidecar["bin"], bin);
    assert_eq!(sidecar["sample_rate"], 6250.0);
}
