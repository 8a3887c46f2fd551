use comfortplan_core::filter::FilterSettings;
use comfortplan_core::kinematics::evaluate_path;
use comfortplan_core::metrics::*;
use comfortplan_core::objectives::comfort_ma;
use comfortplan_core::{Error, MotionProfile, Point, Variant};
use proptest::prelude::*;
use std::f64::consts::PI;

/// Straight run with `v(t) = v0 + a sin(ωt)` sampled every `h` seconds.
fn speed_wave(v0: f64, a: f64, omega: f64, duration: f64, h: f64) -> MotionProfile {
    let n = (duration / h).round() as usize;
    let t = |k: usize| k as f64 * h;
    let s = |t: f64| v0 * t + a / omega * (1.0 - (omega * t).cos());
    let points: Vec<Point> = (0..=n).map(|k| Point::new(s(t(k)), 0.0)).collect();
    let speeds: Vec<f64> = (0..=n).map(|k| v0 + a * (omega * t(k)).sin()).collect();
    evaluate_path(&points, &speeds).unwrap()
}

#[test]
fn sinusoidal_speed_energy_matches_the_integral() {
    let (a, omega, duration) = (1.5, 2.0 * PI * 0.1, 60.0);
    let p = speed_wave(10.0, a, omega, duration, 0.1);
    let exact = a * a * omega * omega * duration / 2.0;
    assert!((p.total_time() - duration).abs() < 0.01 * duration);
    assert!((comfort_ma(&p) - exact).abs() <= 0.01 * exact, "{} vs {exact}", comfort_ma(&p));
}

#[test]
fn circular_run_energy_matches_the_integral() {
    let (r, v, n) = (30.0, 8.0, 400);
    let points: Vec<Point> = (0..=n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            Point::new(r * a.cos(), r * a.sin())
        })
        .collect();
    let p = evaluate_path(&points, &vec![v; n + 1]).unwrap();
    let exact = (v * v / r).powi(2) * 2.0 * PI * r / v;
    assert!((comfort_ma(&p) - exact).abs() <= 0.01 * exact);
}

#[test]
fn deficiency_examples() {
    assert_eq!(deficiency_percent(211.0, 211.0), 0.0);
    assert!((deficiency_percent(260.0, 211.0) - 23.2227).abs() < 1e-3);
    let p = speed_wave(10.0, 1.0, 0.5, 30.0, 0.1);
    let d = deficiency(&p, &p, Variant::Ms, &FilterSettings::default()).unwrap();
    assert_eq!(d, 0.0);
}

#[test]
fn runs_must_be_time_matched() {
    let a = speed_wave(10.0, 1.0, 0.5, 30.0, 0.1);
    let b = speed_wave(10.0, 1.0, 0.5, 32.0, 0.1);
    match deficiency(&a, &b, Variant::Ma, &FilterSettings::default()) {
        Err(Error::Comparability { difference, limit }) => {
            assert!((difference - 2.0).abs() < 0.05);
            assert_eq!(limit, TIME_MATCH_LIMIT);
        }
        other => panic!("unexpected {other:?}"),
    }
    let c = speed_wave(10.0, 1.0, 0.5, 30.5, 0.1);
    assert!(deficiency(&a, &c, Variant::Ma, &FilterSettings::default()).is_ok());
}

#[test]
fn report_carries_both_variants() {
    let filter = FilterSettings::default();
    let human = speed_wave(10.0, 2.0, 0.6, 40.0, 0.1);
    let plan = speed_wave(10.0, 1.0, 0.6, 40.0, 0.1);
    let ma_only = ComparisonReport::build(&human, &plan, None, &filter).unwrap();
    assert!(ma_only.deficiency_ms.is_none());
    assert!((ma_only.deficiency_ma - 300.0).abs() < 5.0);
    let both = ComparisonReport::build(&human, &plan, Some(&plan), &filter).unwrap();
    let (h, p) = (both.weighted_energy_human.unwrap(), both.weighted_energy_planner.unwrap());
    assert_eq!(both.deficiency_ms, Some(deficiency_percent(h, p)));
    assert_eq!(both.travel_time_planner_ms, Some(plan.total_time()));
}

fn tone_spectrum() -> Spectrum {
    // a narrow triangle around 0.5 Hz on a 0.01 Hz grid up to 5 Hz
    let frequencies: Vec<f64> = (0..=500).map(|k| k as f64 * 0.01).collect();
    let density = frequencies
        .iter()
        .map(|f| (1.0 - (f - 0.5).abs() / 0.05).max(0.0) * 10.0)
        .collect();
    Spectrum { frequencies, density }
}

#[test]
fn band_energy_examples() {
    let s = tone_spectrum();
    let total = s.total_power();
    assert!((total - 0.5).abs() < 1e-9);
    assert!(s.band_energy(0.4, 0.6).unwrap() >= 0.95 * total);
    assert!((s.band_energy(0.0, 5.0).unwrap() - total).abs() < 1e-15);
    assert!((s.band_energy(0.5, 0.6).unwrap() - 0.25).abs() < 1e-9);
    assert!((s.band_energy(0.475, 0.525).unwrap() - 0.375).abs() < 1e-9);
    assert_eq!(s.peak_frequency(), Some(0.5));
    assert!(matches!(s.band_energy(4.0, 6.0), Err(Error::Domain(_))));
    assert!(matches!(s.band_energy(0.3, 0.2), Err(Error::Domain(_))));
}

#[test]
fn contours_scale_the_sorted_frontier() {
    let c = iso_discomfort_contours(&[(60.0, 100.0), (50.0, 150.0)], &DEFAULT_CONTOUR_FACTORS);
    assert_eq!(c.len(), 8);
    assert_eq!((c[0].travel_time, c[0].factor), (50.0, 1.1));
    assert!((c[0].comfort - 165.0).abs() < 1e-12);
    assert!((c[7].comfort - 200.0).abs() < 1e-12);
}

#[test]
fn energy_reduction_example() {
    assert!((energy_reduction_percent(100.0, 87.8) - 12.2).abs() < 1e-12);
}

proptest! {
    #[test]
    fn swapped_deficiency_follows_the_reciprocal_map(h in 0.1..1e4f64, p in 0.1..1e4f64) {
        let d = deficiency_percent(h, p);
        let swapped = deficiency_percent(p, h);
        let mapped = -d / (1.0 + d / 100.0);
        prop_assert!((swapped - mapped).abs() <= 1e-9 * (1.0 + swapped.abs()));
    }

    #[test]
    fn band_energies_add_up(split in 0.01..4.99f64) {
        let s = tone_spectrum();
        let sum = s.band_energy(0.0, split).unwrap() + s.band_energy(split, 5.0).unwrap();
        prop_assert!((sum - s.total_power()).abs() < 1e-12);
    }
}

mod basics {
    use comfortplan_core::metrics::*;
    use comfortplan_core::*;
    use comfortplan_core::filter::FilterSettings;
    use comfortplan_core::route::Point;
    
    fn profile(dt: f64, ax: Vec<f64>) -> MotionProfile {
        let m = ax.len();
        MotionProfile::from_parts(
            (0..=m).map(|i| Point::new(i as f64, 0.0)).collect(),
            vec![1.0; m + 1],
            vec![dt; m],
            ax,
            vec![0.0; m],
        )
        .unwrap()
    }

    #[test]
    fn identical_profiles_have_zero_deficiency() {
        let p = profile(0.5, vec![1.0, -0.5, 0.2]);
        let d = deficiency(&p, &p, Variant::Ma, &FilterSettings::default()).unwrap();
        assert_eq!(d, 0.0);
        let d = deficiency(&p, &p, Variant::Ms, &FilterSettings::default()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn deficiency_arithmetic() {
        assert!((deficiency_percent(260.0, 211.0) - 23.222_748_815).abs() < 1e-6);
        // swapping the arguments maps p to -p / (1 + p/100)
        for (h, p) in [(260.0, 211.0), (10.0, 30.0), (5.0, 5.5)] {
            let a = deficiency_percent(h, p);
            let b = deficiency_percent(p, h);
            assert!((b - (-a / (1.0 + a / 100.0))).abs() < 1e-9);
        }
    }

    #[test]
    fn time_mismatch_is_rejected() {
        let a = profile(0.5, vec![1.0; 10]);
        let b = profile(0.7, vec![1.0; 10]);
        assert!(matches!(
            deficiency(&a, &b, Variant::Ma, &FilterSettings::default()),
            Err(Error::Comparability { .. })
        ));
    }

    #[test]
    fn band_energy_identities() {
        let s = Spectrum {
            frequencies: (0..11).map(|i| i as f64 * 0.5).collect(),
            density: (0..11).map(|i| 1.0 + (i as f64 * 0.7).sin()).collect(),
        };
        assert_eq!(s.band_energy(0.0, 5.0).unwrap(), s.total_power());
        let split = s.band_energy(0.0, 1.3).unwrap() + s.band_energy(1.3, 5.0).unwrap();
        assert!((split - s.total_power()).abs() < 1e-12);
        assert!(s.band_energy(1.0, 6.0).is_err());
        assert!(s.band_energy(2.0, 1.0).is_err());
    }

    #[test]
    fn contours_scale_frontier() {
        let c = iso_discomfort_contours(&[(80.0, 100.0), (70.0, 150.0)], &[1.1, 2.0]);
        assert_eq!(c.len(), 4);
        assert_eq!(c[0].travel_time, 70.0);
        assert!((c[0].comfort - 165.0).abs() < 1e-9);
        assert!((c[3].comfort - 200.0).abs() < 1e-9);
    }

    #[test]
    fn report_fields_recompute() {
        let h = profile(0.5, vec![1.0, -1.0, 0.5, 0.0]);
        let p = profile(0.5, vec![0.5, -0.5, 0.25, 0.0]);
        let r = ComparisonReport::build(&h, &p, Some(&p), &FilterSettings::default()).unwrap();
        assert!((r.deficiency_ma - deficiency_percent(r.energy_human, r.energy_planner)).abs() < 1e-9);
        let ms = r.deficiency_ms.unwrap();
        let again = deficiency_percent(
            r.weighted_energy_human.unwrap(),
            r.weighted_energy_planner.unwrap(),
        );
        assert!((ms - again).abs() < 1e-9);
        assert!((r.deficiency_ma - 300.0).abs() < 1e-9);
    }
}
