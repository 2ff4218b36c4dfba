//! Command-line front end: argument parsing, config resolution, command execution and
//! exit codes. The `radiomic` binary forwards to [`main_with_args`].

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::detect::{
    detect_cfar_with, detect_hhi, detect_radiomic, liveness_score, CfarConfig, DetectConfig, DetectionJson,
    DetectionResult, MetricForm, DEFAULT_HHI_THRESHOLD, DEFAULT_LIVENESS_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::io::{load_cir, load_wav, save_cir, Metadata};
use crate::metrics::evaluate;
use crate::recover::{separate_sources, RecoverConfig};
use crate::sim::{simulate, SceneDescription};
use crate::spectral::{range_doppler, StftConfig};
use crate::suite::{run_detection_suite, DetectionSuiteConfig};
use crate::synth::{write_shards, PairGenerator, SynthConfig};
use crate::types::Span;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "radiomic", version, about = "Radio acoustics: simulate, detect, recover and evaluate sound in mmWave CIR streams")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scene description into a CIR tensor file.
    Simulate {
        scene: PathBuf,
        output: PathBuf,
        /// Override the scene's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Label sound-bearing (range bin, frame) cells of a CIR stream.
    Detect {
        cir: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// JSON file with `method`, `radiomic`, `cfar` and `hhi_threshold` sections.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        threshold_scale: Option<f64>,
        #[arg(long, value_enum)]
        form: Option<FormArg>,
        #[arg(long)]
        cfar_scale: Option<f64>,
        #[arg(long)]
        hhi_threshold: Option<f64>,
        /// Drop detection runs shorter than this many frames.
        #[arg(long)]
        min_run_frames: Option<usize>,
    },
    /// Recover one waveform per separated source into a directory of WAV + JSON files.
    Recover {
        cir: PathBuf,
        detections: PathBuf,
        out_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        min_run_frames: Option<usize>,
    },
    /// Write training-pair shards from a directory of clean WAV files.
    Synth {
        audio_dir: PathBuf,
        config: PathBuf,
        out_dir: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Silent-moment SNR, and LLR/STOI against a reference.
    Evaluate {
        #[arg(long = "est")]
        estimate: PathBuf,
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        /// Silent spans in seconds, e.g. `0-0.3,1.2-1.5`.
        #[arg(long)]
        silent: Option<String>,
        /// Per-segment CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the detection benchmark suite and write ROC points per method as CSV.
    Roc { suite: PathBuf, output: PathBuf },
    /// Liveness score of one range bin over a time span.
    Liveness {
        cir: PathBuf,
        bin: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Span length in milliseconds.
        #[arg(long)]
        span: Option<f64>,
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        receiver: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    #[default]
    Radiomic,
    Cfar,
    Hhi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Literal,
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectCommandConfig {
    pub method: MethodArg,
    pub radiomic: DetectConfig,
    pub cfar: CfarConfig,
    pub hhi_threshold: f64,
    pub min_run_frames: usize,
    pub stft: StftConfig,
}

impl Default for DetectCommandConfig {
    fn default() -> Self {
        Self {
            method: MethodArg::Radiomic,
            radiomic: DetectConfig::default(),
            cfar: CfarConfig::default(),
            hhi_threshold: DEFAULT_HHI_THRESHOLD,
            min_run_frames: RecoverConfig::default().min_run_frames,
            stft: StftConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LivenessCommandConfig {
    pub receiver: usize,
    pub start_ms: f64,
    pub span_ms: f64,
    pub threshold: f64,
    pub stft: StftConfig,
}

impl Default for LivenessCommandConfig {
    fn default() -> Self {
        Self {
            receiver: 0,
            start_ms: 0.0,
            span_ms: 40.0,
            threshold: DEFAULT_LIVENESS_THRESHOLD,
            stft: StftConfig::default(),
        }
    }
}

/// What a command prints: JSON under `--json`, text otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub json: Value,
    pub text: String,
}

impl Report {
    fn new(command: &str, mut body: Value, text: String) -> Self {
        let obj = body.as_object_mut().expect("report body is an object");
        obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
        obj.insert("command".into(), json!(command));
        Report { json: body, text }
    }

    /// Resolved configuration; `--json` wraps it with the schema version.
    fn config(command: &str, config: Value) -> Self {
        let text = serde_json::to_string_pretty(&config).expect("config serializes");
        Report::new(command, json!({ "config": config }), text)
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parameter(_) | Error::Io { .. } => EXIT_USAGE,
        Error::Format { .. } | Error::Json(_) | Error::Unsupported(_) => EXIT_FORMAT,
        Error::Degenerate(_) => EXIT_NUMERIC,
    }
}

/// Parse `args` (including the program name), run, print, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let json = cli.global.json;
    match run(cli) {
        Ok(report) => {
            if json {
                emit(&serde_json::to_string_pretty(&report.json).expect("report serializes"));
            } else if !report.text.is_empty() {
                emit(report.text.trim_end());
            }
            EXIT_OK
        }
        Err(err) => {
            let code = exit_code(&err);
            if json {
                let body = json!({ "schema_version": SCHEMA_VERSION, "error": err.to_string(), "exit_code": code });
                emit(&serde_json::to_string_pretty(&body).expect("error serializes"));
            }
            eprintln!("error: {err}");
            code
        }
    }
}

/// Write a line to stdout; a closed pipe is not an error worth a panic.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}").and_then(|_| out.flush());
}

pub fn run(cli: Cli) -> Result<Report> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Error::param("--threads must be >= 1"));
        }
        // The global pool can be set only once per process; later calls keep the first size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let print_config = cli.global.print_config;
    match cli.command {
        Command::Simulate { scene, output, seed } => cmd_simulate(&scene, &output, seed, print_config),
        Command::Detect {
            cir,
            output,
            method,
            config,
            threshold_scale,
            form,
            cfar_scale,
            hhi_threshold,
            min_run_frames,
        } => {
            let mut cfg: DetectCommandConfig = load_config(config.as_deref())?;
            if let Some(m) = method {
                cfg.method = m;
            }
            if let Some(s) = threshold_scale {
                cfg.radiomic.threshold_scale = s;
            }
            if let Some(f) = form {
                cfg.radiomic.form = match f {
                    FormArg::Literal => MetricForm::Literal,
                    FormArg::Normalized => MetricForm::Normalized,
                };
            }
            if let Some(s) = cfar_scale {
                cfg.cfar.scale = s;
            }
            if let Some(t) = hhi_threshold {
                cfg.hhi_threshold = t;
            }
            if let Some(n) = min_run_frames {
                cfg.min_run_frames = n;
            }
            if print_config {
                return Ok(Report::config("detect", serde_json::to_value(&cfg)?));
            }
            cmd_detect(&cir, &output, &cfg)
        }
        Command::Recover {
            cir,
            detections,
            out_dir,
            config,
            min_run_frames,
        } => {
            let mut cfg: RecoverConfig = load_config(config.as_deref())?;
            if let Some(n) = min_run_frames {
                cfg.min_run_frames = n;
            }
            if print_config {
                return Ok(Report::config("recover", serde_json::to_value(&cfg)?));
            }
            cmd_recover(&cir, &detections, &out_dir, &cfg)
        }
        Command::Synth {
            audio_dir,
            config,
            out_dir,
            count,
            seed,
        } => {
            let cfg: SynthConfig = load_config(Some(&config))?;
            if print_config {
                return Ok(Report::config("synth", json!({ "synth": cfg, "count": count, "seed": seed })));
            }
            cmd_synth(&audio_dir, cfg, &out_dir, count, seed)
        }
        Command::Evaluate {
            estimate,
            reference,
            silent,
            csv,
        } => {
            let spans = silent.as_deref().map(parse_spans).transpose()?.unwrap_or_default();
            if print_config {
                return Ok(Report::config("evaluate", json!({ "silent_seconds": spans })));
            }
            cmd_evaluate(&estimate, reference.as_deref(), &spans, csv.as_deref())
        }
        Command::Roc { suite, output } => {
            let cfg: DetectionSuiteConfig = load_config(Some(&suite))?;
            if print_config {
                return Ok(Report::config("roc", serde_json::to_value(&cfg)?));
            }
            cmd_roc(&cfg, &output)
        }
        Command::Liveness {
            cir,
            bin,
            config,
            span,
            start,
            receiver,
            threshold,
        } => {
            let mut cfg: LivenessCommandConfig = load_config(config.as_deref())?;
            if let Some(v) = span {
                cfg.span_ms = v;
            }
            if let Some(v) = start {
                cfg.start_ms = v;
            }
            if let Some(v) = receiver {
                cfg.receiver = v;
            }
            if let Some(v) = threshold {
                cfg.threshold = v;
            }
            if print_config {
                return Ok(Report::config("liveness", serde_json::to_value(&cfg)?));
            }
            cmd_liveness(&cir, bin, &cfg)
        }
    }
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `"0-0.3,1.2-1.5"` in seconds.
pub fn parse_spans(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|part| {
            let (a, b) = part
                .split_once('-')
                .ok_or_else(|| Error::param(format!("span `{part}` is not START-END")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::param(format!("span bound `{s}` is not a number")))
            };
            let (a, b) = (parse(a)?, parse(b)?);
            if !(a >= 0.0 && b > a) {
                return Err(Error::param(format!("span `{part}` must satisfy 0 <= start < end")));
            }
            Ok((a, b))
        })
        .collect()
}

fn cmd_simulate(scene_path: &Path, output: &Path, seed: Option<u64>, print_config: bool) -> Result<Report> {
    let mut scene = SceneDescription::load(scene_path)?;
    if let Some(s) = seed {
        scene.seed = s;
    }
    let canonical = serde_json::to_vec(&scene)?;
    if print_config {
        return Ok(Report::config("simulate", serde_json::to_value(&scene)?));
    }
    let cir = simulate(&scene)?;
    let digest = sha256_hex(&canonical);
    let mut meta = Metadata::new();
    meta.insert("scene_digest".into(), json!(digest));
    meta.insert("seed".into(), json!(scene.seed));
    save_cir(&cir, output, &meta)?;
    let text = format!(
        "wrote {} ({} receivers x {} bins x {} samples, scene {})",
        output.display(),
        cir.num_receivers(),
        cir.num_range_bins(),
        cir.num_samples(),
        &digest[..12]
    );
    Ok(Report::new(
        "simulate",
        json!({
            "output": output,
            "num_receivers": cir.num_receivers(),
            "num_range_bins": cir.num_range_bins(),
            "num_samples": cir.num_samples(),
            "scene_digest": digest,
            "seed": scene.seed,
        }),
        text,
    ))
}

fn cmd_detect(cir_path: &Path, output: &Path, cfg: &DetectCommandConfig) -> Result<Report> {
    let cir = load_cir(cir_path)?;
    let spec = range_doppler(&cir, cfg.stft)?;
    let result = match cfg.method {
        MethodArg::Radiomic => detect_radiomic(&spec, &cfg.radiomic)?,
        MethodArg::Cfar => detect_cfar_with(&spec, &cfg.cfar)?,
        MethodArg::Hhi => detect_hhi(&spec, cfg.hhi_threshold)?,
    }
    .persistent(cfg.min_run_frames);
    let doc = result.to_json();
    write_text(output, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    let bins: std::collections::BTreeSet<usize> = result.detected_bins.iter().map(|b| b.bin).collect();
    let mut text = format!(
        "{} cells labeled in {} runs over {} bins; wrote {}\n",
        result.count(),
        result.detected_bins.len(),
        bins.len(),
        output.display()
    );
    let mut busiest: Vec<(usize, usize)> = bins
        .iter()
        .map(|&b| (result.detected_bins.iter().filter(|s| s.bin == b).map(|s| s.frames.len()).sum(), b))
        .collect();
    busiest.sort_by(|a, b| b.cmp(a));
    for (frames, b) in busiest.iter().take(8) {
        let _ = writeln!(text, "  bin {b:3}: {frames} frames");
    }
    if busiest.len() > 8 {
        let _ = writeln!(text, "  ... {} more bins", busiest.len() - 8);
    }
    Ok(Report::new(
        "detect",
        json!({
            "output": output,
            "method": doc.method,
            "cells": result.count(),
            "runs": result.detected_bins.len(),
            "bins": bins,
        }),
        text,
    ))
}

fn cmd_recover(cir_path: &Path, detections: &Path, out_dir: &Path, cfg: &RecoverConfig) -> Result<Report> {
    let cir = load_cir(cir_path)?;
    let text = std::fs::read_to_string(detections).map_err(|e| Error::io(detections, e))?;
    let doc: DetectionJson = serde_json::from_str(&text)?;
    let result = DetectionResult::from_json(&doc)?;
    if result.labels.num_bins != cir.num_range_bins() {
        return Err(Error::format(
            "detection JSON",
            format!("{} bins but the CIR has {}", result.labels.num_bins, cir.num_range_bins()),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let sources = separate_sources(&cir, &result, cfg)?;
    let mut sidecars = Vec::new();
    let mut text = format!("{} sources\n", sources.len());
    for (i, s) in sources.iter().enumerate() {
        let wav = s.save(out_dir, &format!("source-{i:02}"))?;
        let _ = writeln!(
            text,
            "  {}: bin {} rx {} snr {:.1} dB",
            wav.display(),
            s.bin,
            s.receiver,
            s.snr_db
        );
        sidecars.push(json!({ "wav": wav, "sidecar": s.sidecar() }));
    }
    Ok(Report::new("recover", json!({ "out_dir": out_dir, "sources": sidecars }), text))
}

fn cmd_synth(audio_dir: &Path, cfg: SynthConfig, out_dir: &Path, count: usize, seed: u64) -> Result<Report> {
    let digest = cfg.digest();
    let generator = PairGenerator::from_dir(audio_dir, cfg, seed)?;
    let shards = write_shards(&generator, count, out_dir)?;
    let text = format!("{count} pairs in {} shards under {}", shards.len(), out_dir.display());
    Ok(Report::new(
        "synth",
        json!({ "count": count, "seed": seed, "config_digest": digest, "shards": shards }),
        text,
    ))
}

fn cmd_evaluate(estimate: &Path, reference: Option<&Path>, spans_s: &[(f64, f64)], csv: Option<&Path>) -> Result<Report> {
    let est = load_wav(estimate)?;
    let reference = reference.map(load_wav).transpose()?;
    let fs = est.sample_rate;
    let spans: Vec<Span> = spans_s
        .iter()
        .map(|&(a, b)| Span::new((a * fs).round() as usize, ((b * fs).round() as usize).min(est.samples.len())))
        .collect();
    let report = evaluate(&est, reference.as_ref(), &spans)?;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    if let Some(path) = csv {
        let mut out = String::from("segment,start_seconds,end_seconds,llr,stoi\n");
        let cell = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        for (i, s) in report.segments.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{},{},{}", s.start_seconds, s.end_seconds, cell(s.llr), cell(s.stoi));
        }
        write_text(path, &out)?;
    }
    let text = format!(
        "snr_db {}  llr {}  stoi {}  ({} segments)",
        report.snr_db.map_or("inf".to_string(), |v| format!("{v:.2}")),
        fmt(report.llr),
        fmt(report.stoi),
        report.segments.len()
    );
    Ok(Report::new("evaluate", json!({ "report": report }), text))
}

fn cmd_roc(cfg: &DetectionSuiteConfig, output: &Path) -> Result<Report> {
    let outcome = run_detection_suite(cfg)?;
    let mut csv = String::from("method,false_alarm_rate,detection_rate\n");
    let mut aucs = serde_json::Map::new();
    let mut text = String::new();
    for (method, r) in &outcome.results {
        let name = serde_json::to_value(method)?.as_str().unwrap_or_default().to_string();
        for p in &r.roc {
            let _ = writeln!(csv, "{name},{},{}", p.false_alarm_rate, p.detection_rate);
        }
        let _ = writeln!(text, "{name:18} AUC {:.4}", r.auc);
        aucs.insert(name, json!(r.auc));
    }
    write_text(output, &csv)?;
    let positives = outcome.truth.iter().filter(|t| **t).count();
    Ok(Report::new(
        "roc",
        json!({ "output": output, "cells": outcome.truth.len(), "positives": positives, "auc": aucs }),
        text,
    ))
}

fn cmd_liveness(cir_path: &Path, bin: usize, cfg: &LivenessCommandConfig) -> Result<Report> {
    if !(cfg.span_ms > 0.0 && cfg.start_ms >= 0.0) {
        return Err(Error::param("liveness span must be > 0 ms and start >= 0 ms"));
    }
    let cir = load_cir(cir_path)?;
    let spec = range_doppler(&cir, cfg.stft)?;
    let fs = cir.params.slow_time_rate;
    let hop = cfg.stft.hop() as f64;
    let n = cfg.stft.frame_length as f64;
    let first = (cfg.start_ms / 1000.0 * fs / hop).round() as usize;
    let count = (((cfg.span_ms / 1000.0 * fs - n) / hop).round() + 1.0).max(1.0) as usize;
    let frames = Span::new(first, first + count);
    let score = liveness_score(&spec, cfg.receiver, bin, frames)?;
    let live = score > cfg.threshold;
    let text = format!(
        "bin {bin} frames {}..{}: score {score:.3e} -> {}",
        frames.start,
        frames.end,
        if live { "live" } else { "not live" }
    );
    Ok(Report::new(
        "liveness",
        json!({ "bin": bin, "receiver": cfg.receiver, "frames": frames, "score": score, "threshold": cfg.threshold, "live": live }),
        text,
    ))
}
