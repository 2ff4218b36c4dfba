use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use radiomic::io::{save_cir, save_wav, Metadata, WavEncoding};
use radiomic::sim::simulate;
use radiomic::synth::SynthConfig;
use radiomic::waveforms::speech;
use radiomic::AudioSignal;
use serde_json::Value;

fn scenes_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes")
}

fn radiomic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radiomic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = radiomic(args);
    assert!(
        out.status.success(),
        "radiomic {args:?} exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json_of(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(v["schema_version"], 1, "missing schema version in {v}");
    v
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file under `dir` with its bytes, sorted by name.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

/// Run `args` twice; the written `outputs` and stdout must match byte for byte.
fn assert_deterministic(args: &[&str], outputs: &[&Path]) -> Output {
    let read = |p: &Path| if p.is_dir() { snapshot(p) } else { vec![(String::new(), std::fs::read(p).unwrap())] };
    let first = ok(args);
    let a: Vec<_> = outputs.iter().map(|p| read(p)).collect();
    for p in outputs {
        if p.is_dir() {
            std::fs::remove_dir_all(p).unwrap();
        } else {
            std::fs::remove_file(p).unwrap();
        }
    }
    let second = ok(args);
    let b: Vec<_> = outputs.iter().map(|p| read(p)).collect();
    assert_eq!(a, b, "outputs of {args:?} differ between runs");
    assert_eq!(first.stdout, second.stdout, "stdout of {args:?} differs between runs");
    second
}

fn write_speech_dir(dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..2 {
        save_wav(&speech(30 + i, 6250.0, 2.5), dir.join(format!("clip{i}.wav")), WavEncoding::Pcm16).unwrap();
    }
}

#[test]
fn every_command_is_deterministic_and_speaks_json() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let scene = scenes_dir().join("two_speakers.json");
    let cir = d.join("two.rspg");
    let v = json_of(&assert_deterministic(&["--json", "simulate", s(&scene), s(&cir), "--seed", "7"], &[&cir]));
    assert_eq!(v["command"], "simulate");

    let det = d.join("two.json");
    let v = json_of(&assert_deterministic(&["--json", "detect", s(&cir), s(&det)], &[&det]));
    assert_eq!(v["command"], "detect");

    let out = d.join("sources");
    let v = json_of(&assert_deterministic(&["--json", "recover", s(&cir), s(&det), s(&out)], &[&out]));
    assert_eq!(v["sources"].as_array().unwrap().len(), 2);
    let wavs: Vec<String> = snapshot(&out).into_iter().map(|(n, _)| n).filter(|n| n.ends_with(".wav")).collect();
    assert_eq!(wavs, vec!["source-00.wav", "source-01.wav"]);

    let audio = d.join("audio");
    write_speech_dir(&audio);
    let synth_cfg = d.join("synth.json");
    std::fs::write(&synth_cfg, serde_json::to_string(&SynthConfig::default()).unwrap()).unwrap();
    let shards = d.join("shards");
    let v = json_of(&assert_deterministic(
        &["--json", "synth", s(&audio), s(&synth_cfg), s(&shards), "--count", "5", "--seed", "3"],
        &[&shards],
    ));
    assert_eq!(v["count"], 5);

    let est = out.join("source-00.wav");
    let mut noisy = radiomic::io::load_wav(&est).unwrap();
    let hiss = radiomic::waveforms::white_noise(2, 0.01, 6250.0, noisy.duration());
    noisy.samples.iter_mut().zip(&hiss.samples).for_each(|(a, b)| *a += b);
    let reference = d.join("reference.wav");
    save_wav(&noisy, &reference, WavEncoding::Float32).unwrap();
    let csv = d.join("segments.csv");
    let v = json_of(&assert_deterministic(
        &["--json", "evaluate", "--est", s(&est), "--ref", s(&reference), "--silent", "0-0.2", "--csv", s(&csv)],
        &[&csv],
    ));
    assert_eq!(v["command"], "evaluate");
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("segment,start_seconds,end_seconds,llr,stoi\n"));

    let v = json_of(&assert_deterministic(&["--json", "liveness", s(&cir), "17", "--start", "1000"], &[]));
    assert_eq!(v["command"], "liveness");
    assert!(v["score"].as_f64().unwrap() >= 0.0);

    let suite = d.join("suite.json");
    std::fs::write(&suite, r#"{"scenes": 4, "seed": 5, "num_range_bins": 24, "num_receivers": 1, "duration": 1.5, "roc_points": 20}"#).unwrap();
    let roc = d.join("roc.csv");
    let v = json_of(&assert_deterministic(&["--json", "roc", s(&suite), s(&roc)], &[&roc]));
    assert_eq!(v["auc"].as_object().unwrap().len(), 4);
    assert!(std::fs::read_to_string(&roc).unwrap().starts_with("method,false_alarm_rate,detection_rate\n"));

    let v = json_of(&ok(&["--json", "--print-config", "detect", s(&cir), s(&det)]));
    assert_eq!(v["config"]["method"], "radiomic");
}

#[test]
fn detected_bin_matches_the_scene_source() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("tone.json");
    std::fs::write(
        &scene,
        r#"{
  "radar": { "num_range_bins": 32, "num_receivers": 2 },
  "duration": 2.0,
  "seed": 4,
  "sources": [ { "audio": { "type": "tone", "frequency": 440.0 }, "peak_displacement": 1e-5,
                 "range": 0.6, "reflectivity": [1.0, 0.0], "onset": 1.2 } ],
  "noise_power_per_receiver": [1e-6, 1e-6]
}"#,
    )
    .unwrap();
    let cir = tmp.path().join("tone.rspg");
    let det = tmp.path().join("tone-det.json");
    ok(&["simulate", s(&scene), s(&cir)]);
    let v = json_of(&ok(&["--json", "detect", s(&cir), s(&det)]));
    let expected = (0.6 / radiomic::RadarParams::default().range_bin_spacing()).floor() as u64;
    assert_eq!(v["bins"], serde_json::json!([expected]));
}

#[test]
fn noise_only_cir_gives_no_detections_and_an_empty_recovery() {
    let tmp = tempfile::tempdir().unwrap();
    let radar = radiomic::RadarParams {
        num_range_bins: 32,
        num_receivers: 2,
        ..Default::default()
    };
    let scene = radiomic::sim::SceneDescription::new(radar, 2.0, 9).with_uniform_noise(1e-5);
    let cir = tmp.path().join("noise.rspg");
    save_cir(&simulate(&scene).unwrap(), &cir, &Metadata::new()).unwrap();
    let det = tmp.path().join("noise.json");
    ok(&["detect", s(&cir), s(&det)]);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&det).unwrap()).unwrap();
    assert_eq!(doc["runs"], serde_json::json!([]));
    let out = tmp.path().join("none");
    ok(&["recover", s(&cir), s(&det), s(&out)]);
    assert!(snapshot(&out).is_empty());
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();

    let corrupt = d.join("corrupt.rspg");
    std::fs::write(&corrupt, b"RSPX not a tensor").unwrap();
    let code = |args: &[&str]| radiomic(args).status.code();
    assert_eq!(code(&["detect", s(&corrupt), s(&d.join("o.json"))]), Some(3));
    assert_eq!(code(&["liveness", s(&corrupt), "3"]), Some(3));

    let cir = d.join("ok.rspg");
    ok(&["simulate", s(&scenes_dir().join("two_speakers.json")), s(&cir)]);
    assert_eq!(code(&["detect", s(&cir), s(&d.join("o.json")), "--method", "sonar"]), Some(2));
    assert_eq!(code(&["liveness", s(&cir), "999"]), Some(2));

    let scene = d.join("missing.json");
    std::fs::write(
        &scene,
        r#"{"duration": 1.0, "sources": [{"audio": {"type": "wav", "path": "nowhere.wav"},
            "peak_displacement": 1e-5, "range": 0.5, "reflectivity": [1.0, 0.0]}]}"#,
    )
    .unwrap();
    let out = radiomic(&["simulate", s(&scene), s(&d.join("x.rspg"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.wav"));

    let silent = d.join("silent.wav");
    save_wav(&AudioSignal::new(vec![0.0; 12500], 6250.0).unwrap(), &silent, WavEncoding::Float32).unwrap();
    let est = d.join("est.wav");
    save_wav(&speech(1, 6250.0, 2.0), &est, WavEncoding::Float32).unwrap();
    let out = radiomic(&["--json", "evaluate", "--est", s(&est), "--ref", s(&silent)]);
    assert_eq!(out.status.code(), Some(4));
    let v = json_of(&out);
    assert_eq!(v["exit_code"], 4);
}
