use comfortplan_core::filter::FilterSettings;
use comfortplan_core::kinematics::evaluate_path;
use comfortplan_core::objectives::{comfort_ma, comfort_ms, planner_cost, CostBreakdown};
use comfortplan_core::{FilterSpec, MotionProfile, ObjectiveConfig, Point, SicknessFilter, Variant};
use proptest::prelude::*;
use std::f64::consts::PI;

const TAU1: f64 = 5.0;
const TAU2: f64 = 1.0;

fn profile(dt: Vec<f64>, ax: Vec<f64>, ay: Vec<f64>) -> MotionProfile {
    let m = dt.len();
    let points = (0..=m).map(|k| Point::new(k as f64, 0.0)).collect();
    MotionProfile::from_parts(points, vec![1.0; m + 1], dt, ax, ay).unwrap()
}

fn filter() -> SicknessFilter {
    SicknessFilter::new(FilterSpec::new(TAU1, TAU2).unwrap()).unwrap()
}

/// Weighted energy by RK4 integration of the state-space model, sampling
/// the output at the start of each held segment.
fn rk4_weighted_energy(u: &[f64], dt: &[f64], cooldown: f64) -> f64 {
    let a11 = -(1.0 / TAU1 + 1.0 / TAU2);
    let a21 = -1.0 / (TAU1 * TAU2);
    let b1 = 1.0 / (TAU1 * TAU2);
    let f = |x: [f64; 2], u: f64| [a11 * x[0] + x[1] + b1 * u, a21 * x[0]];
    let advance = |mut x: [f64; 2], u: f64, h: f64| {
        let n = ((h / 0.005).ceil() as usize).max(4);
        let s = h / n as f64;
        for _ in 0..n {
            let k1 = f(x, u);
            let k2 = f([x[0] + 0.5 * s * k1[0], x[1] + 0.5 * s * k1[1]], u);
            let k3 = f([x[0] + 0.5 * s * k2[0], x[1] + 0.5 * s * k2[1]], u);
            let k4 = f([x[0] + s * k3[0], x[1] + s * k3[1]], u);
            x[0] += s / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            x[1] += s / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        x
    };
    let mut x = [0.0; 2];
    let mut e = 0.0;
    for (&uk, &h) in u.iter().zip(dt) {
        e += x[0] * x[0] * h;
        x = advance(x, uk, h);
    }
    let mean = dt.iter().sum::<f64>() / dt.len() as f64;
    let count = (cooldown / mean - 1e-9).ceil() as usize;
    let h = cooldown / count as f64;
    for _ in 0..count {
        e += x[0] * x[0] * h;
        x = advance(x, 0.0, h);
    }
    e
}

fn gain(omega: f64) -> f64 {
    omega / ((1.0 + (TAU1 * omega).powi(2)) * (1.0 + (TAU2 * omega).powi(2))).sqrt()
}

#[test]
fn single_segment_energy() {
    let p = evaluate_path(&[Point::new(0.0, 0.0), Point::new(20.0, 0.0)], &[10.0, 14.0]).unwrap();
    let expected = 2.4 * 2.4 * (40.0 / 24.0);
    assert!((comfort_ma(&p) - expected).abs() < 1e-12);
    assert!((expected - 9.6).abs() < 1e-9);
    let b = planner_cost(&p, &ObjectiveConfig::new(Variant::Ma, 0.5)).unwrap();
    assert!((b.cost - (9.6 + 0.5 * 40.0 / 24.0)).abs() < 1e-12);
    assert!((b.cost - 10.433).abs() < 1e-3);
}

#[test]
fn zero_weight_leaves_only_comfort() {
    let p = profile(vec![0.5; 8], vec![0.3; 8], vec![-0.2; 8]);
    let b = planner_cost(&p, &ObjectiveConfig::new(Variant::Ma, 0.0)).unwrap();
    assert_eq!(b.cost, b.comfort);
}

#[test]
fn quiet_profile_costs_its_travel_time() {
    let p = profile(vec![1.0; 10], vec![0.0; 10], vec![0.0; 10]);
    for variant in [Variant::Ma, Variant::Ms] {
        let b = planner_cost(&p, &ObjectiveConfig::new(variant, 1.0)).unwrap();
        assert_eq!(
            b,
            CostBreakdown {
                comfort: 0.0,
                travel_time: 10.0,
                cost: 10.0
            }
        );
    }
}

#[test]
fn slow_ramp_is_rejected_by_the_band_pass() {
    let n = 2000;
    let dt = vec![0.1; n];
    let ax: Vec<f64> = (0..n).map(|k| 0.1 * k as f64 / 200.0).collect();
    let p = profile(dt.clone(), ax.clone(), vec![0.0; n]);
    let ms = comfort_ms(&p, &filter(), 30.0).unwrap();
    let ma = comfort_ma(&p);
    let oracle = rk4_weighted_energy(&ax, &dt, 30.0);
    assert!((ms - oracle).abs() <= 1e-8 * oracle, "{ms} vs {oracle}");
    assert!(ms / ma < 0.05, "ratio {}", ms / ma);
}

#[test]
fn tone_energy_follows_the_gain() {
    let (n, h, freq) = (600, 0.1, 0.1);
    let ay: Vec<f64> = (0..n).map(|k| (2.0 * PI * freq * (k as f64 + 0.5) * h).sin()).collect();
    let p = profile(vec![h; n], vec![0.0; n], ay);
    let ma = comfort_ma(&p);
    assert!((ma - 30.0).abs() < 1e-9);
    let ms = comfort_ms(&p, &filter(), 30.0).unwrap();
    let expected = gain(2.0 * PI * freq).powi(2) * ma;
    assert!((ms - expected).abs() <= 0.05 * expected, "{ms} vs {expected}");
}

#[test]
fn random_profiles_match_the_integration_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let m = rng.random_range(5..60);
        let dt: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.5)).collect();
        let ax: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ay: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p = profile(dt.clone(), ax.clone(), ay.clone());
        let ms = comfort_ms(&p, &filter(), 30.0).unwrap();
        let oracle = rk4_weighted_energy(&ax, &dt, 30.0) + rk4_weighted_energy(&ay, &dt, 30.0);
        assert!((ms - oracle).abs() <= 1e-8 * oracle, "{ms} vs {oracle}");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let p = profile(vec![1.0; 3], vec![0.0; 3], vec![0.0; 3]);
    assert!(planner_cost(&p, &ObjectiveConfig::new(Variant::Ma, -1.0)).is_err());
    let mut config = ObjectiveConfig::new(Variant::Ms, 1.0);
    config.filter = FilterSettings {
        tau1_s: 0.0,
        ..FilterSettings::default()
    };
    assert!(planner_cost(&p, &config).is_err());
    assert_eq!("ms".parse::<Variant>().unwrap(), Variant::Ms);
    assert!("xx".parse::<Variant>().is_err());
}

fn random_path(segs: &[(f64, f64)]) -> Vec<Point> {
    let mut heading: f64 = 0.0;
    let mut p = Point::new(0.0, 0.0);
    let mut out = vec![p];
    for (turn, len) in segs {
        heading += turn;
        p = Point::new(p.x + len * heading.cos(), p.y + len * heading.sin());
        out.push(p);
    }
    out
}

fn path_strategy() -> impl Strategy<Value = (Vec<Point>, Vec<f64>)> {
    prop::collection::vec((-0.6..0.6f64, 1.0..8.0f64, 2.0..15.0f64), 3..30).prop_map(|segs| {
        let pts = random_path(&segs.iter().map(|s| (s.0, s.1)).collect::<Vec<_>>());
        let speeds = std::iter::once(6.0).chain(segs.iter().map(|s| s.2)).collect();
        (pts, speeds)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energies_are_non_negative((pts, speeds) in path_strategy()) {
        let p = evaluate_path(&pts, &speeds).unwrap();
        prop_assert!(comfort_ma(&p) >= 0.0);
        prop_assert!(comfort_ms(&p, &filter(), 30.0).unwrap() >= 0.0);
    }

    #[test]
    fn energies_ignore_mirroring_and_reversal((pts, speeds) in path_strategy()) {
        let p = evaluate_path(&pts, &speeds).unwrap();
        let mirrored: Vec<Point> = pts.iter().map(|q| Point::new(q.x, -q.y)).collect();
        let m = evaluate_path(&mirrored, &speeds).unwrap();
        let (a, b) = (comfort_ma(&p), comfort_ma(&m));
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        let (a, b) = (comfort_ms(&p, &filter(), 30.0).unwrap(), comfort_ms(&m, &filter(), 30.0).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));

        // reversal flips the sign of ax but keeps its magnitude per segment;
        // the lateral term moves by one waypoint so only straight paths keep MA exactly
        let straight: Vec<Point> = (0..pts.len()).map(|k| Point::new(3.0 * k as f64, 0.0)).collect();
        let f = evaluate_path(&straight, &speeds).unwrap();
        let rev_pts: Vec<Point> = straight.iter().rev().copied().collect();
        let rev_speeds: Vec<f64> = speeds.iter().rev().copied().collect();
        let r = evaluate_path(&rev_pts, &rev_speeds).unwrap();
        prop_assert!((comfort_ma(&f) - comfort_ma(&r)).abs() <= 1e-12 * comfort_ma(&f).max(1.0));
    }

    #[test]
    fn speed_scaling_law_on_fixed_geometry(
        speeds in prop::collection::vec(2.0..15.0f64, 3..25),
        alpha in 0.3..3.0f64,
    ) {
        let pts: Vec<Point> = (0..speeds.len()).map(|k| Point::new(4.0 * k as f64, 0.0)).collect();
        let base = comfort_ma(&evaluate_path(&pts, &speeds).unwrap());
        let scaled: Vec<f64> = speeds.iter().map(|v| alpha * v).collect();
        let s = comfort_ma(&evaluate_path(&pts, &scaled).unwrap());
        // ax grows with α², the time steps shrink with 1/α
        prop_assert!((s - alpha.powi(3) * base).abs() <= 1e-10 * s.max(1e-12));
    }

    #[test]
    fn scaled_accelerations_at_fixed_steps_scale_quadratically(
        ax in prop::collection::vec(-3.0..3.0f64, 2..30),
        dt in 0.05..2.0f64,
        alpha in 0.1..5.0f64,
    ) {
        let m = ax.len();
        let base = comfort_ma(&profile(vec![dt; m], ax.clone(), vec![0.0; m]));
        let s = comfort_ma(&profile(vec![dt; m], ax.iter().map(|a| alpha * a).collect(), vec![0.0; m]));
        prop_assert!((s - alpha * alpha * base).abs() <= 1e-12 * s.max(1e-12));
    }

    #[test]
    fn travel_time_is_the_weight_slope(
        (pts, speeds) in path_strategy(),
        w in 0.0..10.0f64,
        dw in 0.01..5.0f64,
    ) {
        let p = evaluate_path(&pts, &speeds).unwrap();
        for variant in [Variant::Ma, Variant::Ms] {
            let a = planner_cost(&p, &ObjectiveConfig::new(variant, w)).unwrap();
            let b = planner_cost(&p, &ObjectiveConfig::new(variant, w + dw)).unwrap();
            let slope = (b.cost - a.cost) / dw;
            prop_assert!((slope - p.total_time()).abs() <= 1e-8 * p.total_time().max(1.0) / dw.min(1.0));
        }
    }
}

mod basics {
    use comfortplan_core::objectives::*;
    use comfortplan_core::*;
    use comfortplan_core::filter::FilterSpec;

    fn profile(dt: Vec<f64>, ax: Vec<f64>, ay: Vec<f64>) -> MotionProfile {
        let n = dt.len() + 1;
        let pts = (0..n).map(|i| Point::new(i as f64, 0.0)).collect();
        MotionProfile::from_parts(pts, vec![1.0; n], dt, ax, ay).unwrap()
    }

    #[test]
    fn ma_single_segment() {
        let p = profile(vec![40.0 / 24.0], vec![2.4], vec![0.0]);
        assert!((comfort_ma(&p) - 9.6).abs() < 1e-12);
        let cfg = ObjectiveConfig::new(Variant::Ma, 0.5);
        let c = planner_cost(&p, &cfg).unwrap();
        assert!((c.cost - (9.6 + 0.5 * 40.0 / 24.0)).abs() < 1e-12);
        assert!((c.cost - 10.433).abs() < 1e-3);
    }

    #[test]
    fn zero_accelerations() {
        let p = profile(vec![1.0; 10], vec![0.0; 10], vec![0.0; 10]);
        assert_eq!(comfort_ma(&p), 0.0);
        let f = SicknessFilter::new(FilterSpec::default()).unwrap();
        assert_eq!(comfort_ms(&p, &f, 30.0).unwrap(), 0.0);
        let cfg = ObjectiveConfig::new(Variant::Ms, 1.0);
        assert!((planner_cost(&p, &cfg).unwrap().cost - 10.0).abs() < 1e-12);
        let cfg0 = ObjectiveConfig::new(Variant::Ma, 0.0);
        let c = planner_cost(&p, &cfg0).unwrap();
        assert_eq!(c.cost, c.comfort);
    }

    #[test]
    fn cost_is_linear_in_weight() {
        let p = profile(vec![0.5; 4], vec![1.0, -1.0, 0.5, 0.0], vec![0.2; 4]);
        let base = planner_cost(&p, &ObjectiveConfig::new(Variant::Ma, 0.0)).unwrap();
        for w in [0.1, 1.0, 3.0] {
            let c = planner_cost(&p, &ObjectiveConfig::new(Variant::Ma, w)).unwrap();
            assert!((c.cost - base.cost - w * p.total_time()).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_weight_is_rejected() {
        let p = profile(vec![1.0], vec![0.0], vec![0.0]);
        assert!(planner_cost(&p, &ObjectiveConfig::new(Variant::Ma, -1.0)).is_err());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("MS".parse::<Variant>().unwrap(), Variant::Ms);
        assert!("xx".parse::<Variant>().is_err());
    }
}
