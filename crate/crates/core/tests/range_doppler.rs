mod common;

use common::{center_of, radar, scene, source, tone, walker};
use num_complex::Complex64;
use radiomic::sim::{simulate, StaticReflector};
use radiomic::spectral::{range_doppler, RangeDopplerSpectrogram, StftConfig};

fn spectrogram(sc: &radiomic::sim::SceneDescription) -> RangeDopplerSpectrogram {
    range_doppler(&simulate(sc).unwrap(), StftConfig::default()).unwrap()
}

fn row_energy(spec: &RangeDopplerSpectrogram, bin: usize, row: usize, frames: std::ops::Range<usize>) -> f64 {
    frames.map(|k| spec.get(0, row, bin, k).norm_sqr()).sum()
}

/// A periodic Hann frame puts a bin-centered line into its own row and the two neighbors,
/// each neighbor at half the amplitude.
const HANN_NEIGHBOR_ENERGY: f64 = 0.25;

#[test]
fn static_scene_has_only_zero_doppler() {
    let params = radar(8, 1);
    let mut sc = scene(8, 1, 0.5, 1, 0.0);
    sc.background.push(StaticReflector {
        range: center_of(&params, 3),
        reflectivity: Complex64::new(2.0, -1.0),
    });
    let spec = spectrogram(&sc);
    let cfg = StftConfig::default();
    let total = row_energy(&spec, 3, cfg.row_of(0), 0..spec.num_frames);
    assert!(total > 0.0);
    for row in 0..spec.num_rows() {
        let k = cfg.index_of_row(row);
        let e = row_energy(&spec, 3, row, 0..spec.num_frames);
        match k.abs() {
            0 => {}
            1 => assert!((e / total - HANN_NEIGHBOR_ENERGY).abs() < 1e-12, "row {k}"),
            _ => assert!(e <= 1e-24 * total, "row {k}"),
        }
    }
    for bin in (0..8).filter(|&b| b != 3) {
        assert!((0..spec.num_rows()).all(|r| row_energy(&spec, bin, r, 0..spec.num_frames) == 0.0));
    }
}

#[test]
fn vibration_is_symmetric_in_doppler() {
    let params = radar(8, 1);
    let mut sc = scene(8, 1, 1.0, 1, 0.0);
    sc.sources.push(source(tone(6250.0 * 12.0 / 256.0), 1e-5, center_of(&params, 5), 0.0));
    let spec = spectrogram(&sc);
    let cfg = StftConfig::default();
    let frames = 0..spec.num_frames;
    let side = |sign: isize| -> f64 {
        (11..=13).map(|k| row_energy(&spec, 5, cfg.row_of(sign * k), frames.clone())).sum()
    };
    let (pos, neg) = (side(1), side(-1));
    assert!((pos / neg - 1.0).abs() < 1e-6, "+f {pos:e} vs -f {neg:e}");
    for row in 0..spec.num_rows() {
        let k = cfg.index_of_row(row).abs();
        if k > 1 && !(11..=13).contains(&k) {
            assert!(row_energy(&spec, 5, row, frames.clone()) < 1e-3 * pos, "row {k}");
        }
    }
}

#[test]
fn constant_speed_mover_has_one_sided_doppler_peak() {
    let params = radar(48, 1);
    let speed = 0.5;
    let mut sc = scene(48, 1, 1.0, 1, 0.0);
    sc.interferers.push(walker(0.6, 0.6 + speed, 1.0, 1.0));
    let spec = spectrogram(&sc);
    let cfg = StftConfig::default();
    let expected = -speed / params.wavelength();
    let df = spec.slow_time_rate / spec.num_rows() as f64;
    for k in (5..spec.num_frames - 5).step_by(10) {
        let t = (k * cfg.hop() + cfg.frame_length / 2) as f64 / spec.slow_time_rate;
        let bin = (sc.interferers[0].range_at(t) / params.range_bin_spacing()).round() as usize;
        let energy = |row: usize| spec.get(0, row, bin, k).norm_sqr();
        let peak = (0..spec.num_rows()).max_by(|&a, &b| energy(a).total_cmp(&energy(b))).unwrap();
        assert!((spec.row_frequency(peak) - expected).abs() <= df, "frame {k}: peak at {} Hz", spec.row_frequency(peak));
        let mirror = cfg.row_of(-cfg.index_of_row(peak));
        assert!(energy(mirror) < 1e-2 * energy(peak), "frame {k}: mirror row holds energy");
    }
}
