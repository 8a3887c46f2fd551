use std::f64::consts::PI;

use comfortplan::psd::{mean_square, profile_psd, welch, Axis, WelchSettings, MIN_SAMPLES};
use comfortplan_core::{MotionProfile, Point};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn tone(freq: f64, amp: f64, rate: f64, n: usize, phase: f64) -> Vec<f64> {
    (0..n).map(|k| amp * (2.0 * PI * freq * k as f64 / rate + phase).sin()).collect()
}

/// Straight-line profile on a uniform grid with the given accelerations.
fn flat_profile(ax: Vec<f64>, ay: Vec<f64>, dt: f64) -> MotionProfile {
    let m = ax.len();
    let points = (0..=m).map(|k| Point::new(k as f64, 0.0)).collect();
    MotionProfile::from_parts(points, vec![1.0; m + 1], vec![dt; m], ax, ay).unwrap()
}

#[test]
fn tone_power_integrates_to_half_the_squared_amplitude() {
    let s = welch(&tone(0.5, 1.0, 10.0, 1200, 0.0), 10.0, &WelchSettings::default()).unwrap();
    assert!((s.total_power() - 0.5).abs() <= 0.025);
    assert!((s.peak_frequency().unwrap() - 0.5).abs() <= s.frequencies[1]);
    assert!(s.band_energy(0.4, 0.6).unwrap() >= 0.95 * s.total_power());
}

#[test]
fn white_noise_power_matches_its_mean_square() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let normal = Normal::new(0.0, 0.7).unwrap();
    let x: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
    let s = welch(&x, 10.0, &WelchSettings::default()).unwrap();
    assert!((s.total_power() / mean_square(&x) - 1.0).abs() <= 0.03);
    // flat on average: both halves of the band carry about half
    let half = s.band_energy(0.0, 2.5).unwrap() / s.total_power();
    assert!((half - 0.5).abs() < 0.05, "{half}");
}

#[test]
fn zero_signal_has_zero_density() {
    let p = flat_profile(vec![0.0; 300], vec![0.0; 300], 0.1);
    for axis in [Axis::Longitudinal, Axis::Lateral] {
        let s = profile_psd(&p, axis, &WelchSettings::default()).unwrap();
        assert!(s.density.iter().all(|d| *d <= 1e-20));
    }
}

#[test]
fn frequency_grid_follows_the_segment_length() {
    let settings = WelchSettings { segment_cap: 256, ..WelchSettings::default() };
    let s = welch(&tone(1.0, 1.0, 20.0, 2000, 0.3), 20.0, &settings).unwrap();
    assert_eq!(s.frequencies.len(), 129);
    assert!((s.frequencies[1] - 20.0 / 256.0).abs() < 1e-12);
    assert!((s.frequencies[128] - 10.0).abs() < 1e-12);
    // short signals use one segment of their own length
    let short = welch(&tone(1.0, 1.0, 20.0, 40, 0.0), 20.0, &settings).unwrap();
    assert_eq!(short.frequencies.len(), 21);
}

#[test]
fn profile_axes_pick_their_channel() {
    let rate = 10.0;
    let ax = tone(0.3, 0.8, rate, 1200, 0.0);
    let p = flat_profile(ax, vec![0.0; 1200], 1.0 / rate);
    let lon = profile_psd(&p, Axis::Longitudinal, &WelchSettings::default()).unwrap();
    let lat = profile_psd(&p, Axis::Lateral, &WelchSettings::default()).unwrap();
    assert!((lon.total_power() - 0.32).abs() <= 0.03 * 0.32);
    assert!(lat.total_power() <= 1e-20);
}

#[test]
fn irregular_steps_are_resampled_first() {
    // same 0.2 Hz tone sampled on alternating 0.05/0.15 s steps
    let mut t = 0.0;
    let (mut ax, mut dt) = (Vec::new(), Vec::new());
    for k in 0..1500 {
        let h = if k % 2 == 0 { 0.05 } else { 0.15 };
        ax.push((2.0 * PI * 0.2 * (t + 0.5 * h)).sin());
        dt.push(h);
        t += h;
    }
    let m = ax.len();
    let points = (0..=m).map(|k| Point::new(k as f64, 0.0)).collect();
    let p = MotionProfile::from_parts(points, vec![1.0; m + 1], dt, ax, vec![0.0; m]).unwrap();
    let s = profile_psd(&p, Axis::Longitudinal, &WelchSettings::default()).unwrap();
    assert!((s.total_power() - 0.5).abs() <= 0.03 * 0.5, "{}", s.total_power());
    assert!((s.peak_frequency().unwrap() - 0.2).abs() <= s.frequencies[1]);
}

#[test]
fn bad_inputs_are_rejected() {
    let settings = WelchSettings::default();
    assert!(welch(&[1.0; MIN_SAMPLES - 1], 10.0, &settings).is_err());
    assert!(welch(&[1.0; 64], 0.0, &settings).is_err());
    assert!(WelchSettings { overlap: 1.0, ..settings }.validate().is_err());
    assert!(WelchSettings { segment_cap: 4, ..settings }.validate().is_err());
    // a profile shorter than a sample interval cannot be resampled
    let p = flat_profile(vec![0.0; 3], vec![0.0; 3], 0.01);
    assert!(profile_psd(&p, Axis::Longitudinal, &settings).is_err());
}

proptest! {
    #[test]
    fn density_does_not_see_a_time_shift(phase in 0.0..2.0 * PI, f in 0.1f64..2.0) {
        let settings = WelchSettings::default();
        let a = welch(&tone(f, 1.0, 10.0, 1024, 0.0), 10.0, &settings).unwrap();
        let b = welch(&tone(f, 1.0, 10.0, 1024, phase), 10.0, &settings).unwrap();
        prop_assert!((a.total_power() - b.total_power()).abs() <= 0.02 * a.total_power());
        prop_assert_eq!(a.peak_frequency(), b.peak_frequency());
    }

    #[test]
    fn density_scales_with_the_square_of_the_signal(k in 0.1f64..10.0, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..600).map(|_| Normal::new(0.0, 1.0).unwrap().sample(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| k * v).collect();
        let settings = WelchSettings::default();
        let (a, b) = (welch(&x, 10.0, &settings).unwrap(), welch(&y, 10.0, &settings).unwrap());
        for (da, db) in a.density.iter().zip(&b.density) {
            prop_assert!((db - k * k * da).abs() <= 1e-9 * (k * k * da).max(1e-12));
        }
    }
}
