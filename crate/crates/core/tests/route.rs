use comfortplan_core::route::{lateral_axis_angles, waypoints_to_cartesian};
use comfortplan_core::scenario::arc_corridor;
use comfortplan_core::{Error, MotionPlan, Point, RouteCorridor, Station};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

fn station(x: f64, y: f64, angle: f64) -> Station {
    Station {
        center: Point::new(x, y),
        lateral_axis_angle: angle,
        y_min: -1.5,
        y_max: 1.5,
        v_min: 1.0,
        v_max: 16.7,
    }
}

#[test]
fn three_station_straight_road() {
    let stations = (0..3).map(|i| station(10.0 * i as f64, 0.0, FRAC_PI_2)).collect();
    let c = RouteCorridor::new("road", stations).unwrap();
    assert_eq!(c.len(), 3);
    assert_eq!(c.name(), "road");
}

#[test]
fn inverted_bounds_name_the_station() {
    let mut stations: Vec<Station> = (0..8).map(|i| station(10.0 * i as f64, 0.0, FRAC_PI_2)).collect();
    stations[5].y_min = 1.0;
    stations[5].y_max = 0.5;
    match RouteCorridor::new("road", stations) {
        Err(Error::Station { index, .. }) => assert_eq!(index, 5),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn offset_along_a_diagonal_axis() {
    let stations = vec![
        station(0.0, 0.0, FRAC_PI_4),
        station(5.0, -5.0, FRAC_PI_4),
        station(10.0, -10.0, FRAC_PI_4),
    ];
    let c = RouteCorridor::new("diagonal", stations).unwrap();
    let plan = MotionPlan::new(vec![0.0, 0.5, 0.0], vec![5.0; 3]).unwrap();
    let p = waypoints_to_cartesian(&c, &plan).unwrap();
    let half = 0.5 * FRAC_PI_4.cos();
    assert!((p[1].x - (5.0 + half)).abs() < 1e-12);
    assert!((p[1].y - (-5.0 + half)).abs() < 1e-12);
    assert!((half - 0.3536).abs() < 1e-4);
}

#[test]
fn east_bound_offset_moves_north() {
    let centers: Vec<Point> = (0..4).map(|i| Point::new(10.0 * i as f64, 0.0)).collect();
    let c = RouteCorridor::from_centers("east", &centers, (-1.5, 1.5), (1.0, 16.7)).unwrap();
    let plan = MotionPlan::new(vec![0.0, 0.0, 1.0, 0.0], vec![5.0; 4]).unwrap();
    let p = waypoints_to_cartesian(&c, &plan).unwrap();
    assert!((p[2].x - 20.0).abs() < 1e-12 && (p[2].y - 1.0).abs() < 1e-12);
    assert_eq!(p[0], centers[0]);
}

#[test]
fn roundabout_station_spacing() {
    let c = arc_corridor(15.0, 40, 1.0).unwrap();
    let expected = 2.0 * PI * 15.0 / 40.0;
    for w in c.stations().windows(2) {
        let d = w[0].center.distance(w[1].center);
        assert!((d - expected).abs() < 0.01, "spacing {d}");
    }
}

#[test]
fn lateral_axes_are_left_normals() {
    let centers = [Point::new(0.0, 0.0), Point::new(0.0, 3.0), Point::new(0.0, 6.0)];
    for a in lateral_axis_angles(&centers) {
        assert!((a - PI).abs() < 1e-12);
    }
}

#[test]
fn length_mismatch_is_a_dimension_error() {
    let c = arc_corridor(15.0, 10, 0.25).unwrap();
    let plan = MotionPlan::centered(vec![5.0; 9]);
    assert!(matches!(waypoints_to_cartesian(&c, &plan), Err(Error::Dimension { .. })));
}

fn corridor_from(bends: &[f64], spacing: f64) -> RouteCorridor {
    let mut heading = 0.0;
    let mut p = Point::new(0.0, 0.0);
    let mut centers = vec![p];
    for b in bends {
        heading += b;
        p = Point::new(p.x + spacing * heading.cos(), p.y + spacing * heading.sin());
        centers.push(p);
    }
    RouteCorridor::from_centers("random", &centers, (-2.0, 1.0), (1.0, 15.0)).unwrap()
}

proptest! {
    #[test]
    fn mapping_is_linear_in_each_offset(
        bends in prop::collection::vec(-0.5..0.5f64, 3..20),
        pick in 0usize..100,
        offset in -3.0..3.0f64,
    ) {
        let c = corridor_from(&bends, 4.0);
        let n = c.len();
        let k = pick % n;
        let mut single = vec![0.0; n];
        single[k] = offset;
        let mut double = vec![0.0; n];
        double[k] = 2.0 * offset;
        let a = waypoints_to_cartesian(&c, &MotionPlan::new(single, vec![5.0; n]).unwrap()).unwrap();
        let b = waypoints_to_cartesian(&c, &MotionPlan::new(double, vec![5.0; n]).unwrap()).unwrap();
        let center = c.stations()[k].center;
        prop_assert!((b[k].x - center.x - 2.0 * (a[k].x - center.x)).abs() < 1e-12);
        prop_assert!((b[k].y - center.y - 2.0 * (a[k].y - center.y)).abs() < 1e-12);
    }

    #[test]
    fn clamped_plans_map_inside_the_corridor(
        bends in prop::collection::vec(-0.5..0.5f64, 3..20),
        raw in prop::collection::vec((-5.0..5.0f64, -5.0..25.0f64), 21),
    ) {
        let c = corridor_from(&bends, 4.0);
        let n = c.len();
        let plan = MotionPlan::new(raw[..n].iter().map(|r| r.0).collect(), raw[..n].iter().map(|r| r.1).collect()).unwrap();
        let clamped = plan.clamp_to(&c).unwrap();
        prop_assert!(clamped.validate(&c).is_ok());
        let p = waypoints_to_cartesian(&c, &clamped).unwrap();
        for (k, s) in c.stations().iter().enumerate() {
            // on the cross-section between the two extreme waypoints
            let (lo, hi) = (s.waypoint(s.y_min), s.waypoint(s.y_max));
            let (ex, ey) = (hi.x - lo.x, hi.y - lo.y);
            let t = ((p[k].x - lo.x) * ex + (p[k].y - lo.y) * ey) / (ex * ex + ey * ey);
            let off = ((p[k].x - lo.x) * ey - (p[k].y - lo.y) * ex).abs() / (ex * ex + ey * ey).sqrt();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&t));
            prop_assert!(off < 1e-9);
        }
    }
}

mod basics {
    use comfortplan_core::route::*;
    use comfortplan_core::*;
        use core::f64::consts::PI;

    fn straight(n: usize) -> RouteCorridor {
        let centers: Vec<Point> = (0..n).map(|i| Point::new(10.0 * i as f64, 0.0)).collect();
        RouteCorridor::from_centers("straight", &centers, (-1.5, 1.5), (1.0, 16.7)).unwrap()
    }

    #[test]
    fn minimal_corridor() {
        let c = straight(3);
        assert_eq!(c.len(), 3);
        // east-bound road: lateral axis points north
        for s in c.stations() {
            assert!((s.lateral_axis_angle - PI / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inverted_lateral_bounds_cite_station() {
        let c = straight(8);
        let mut stations = c.stations().to_vec();
        stations[5].y_min = 1.0;
        stations[5].y_max = -1.0;
        match RouteCorridor::new("bad", stations) {
            Err(Error::Station { index, .. }) => assert_eq!(index, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_short_and_reversed_corridors() {
        let c = straight(3);
        assert!(RouteCorridor::new("x", c.stations()[..2].to_vec()).is_err());
        let mut s = c.stations().to_vec();
        s[2].center = Point::new(5.0, 0.0);
        assert!(matches!(
            RouteCorridor::new("x", s),
            Err(Error::Station { index: 2, .. })
        ));
        let mut s = c.stations().to_vec();
        s[1].v_min = 20.0;
        assert!(RouteCorridor::new("x", s).is_err());
    }

    #[test]
    fn arc_station_spacing() {
        let r = 15.0;
        let centers: Vec<Point> = (0..40)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 40.0;
                Point::new(r * f64::cos(a), r * f64::sin(a))
            })
            .collect();
        let c = RouteCorridor::from_centers("arc", &centers, (-1.0, 1.0), (1.0, 16.7)).unwrap();
        let expected = 2.0 * PI * r / 40.0;
        for w in c.stations().windows(2) {
            let d = w[0].center.distance(w[1].center);
            assert!((d - expected).abs() < 3e-3, "{d} vs {expected}");
            assert!((d - 2.36).abs() < 0.01);
        }
    }

    #[test]
    fn zero_offsets_map_to_centers() {
        let c = straight(5);
        let plan = MotionPlan::centered(vec![5.0; 5]);
        assert_eq!(waypoints_to_cartesian(&c, &plan).unwrap(), c.centers());
    }

    #[test]
    fn offset_moves_along_axis() {
        let c = straight(5);
        let mut plan = MotionPlan::centered(vec![5.0; 5]);
        plan.lateral_offsets[2] = 1.0;
        let pts = waypoints_to_cartesian(&c, &plan).unwrap();
        assert!((pts[2].x - c.stations()[2].center.x).abs() < 1e-12);
        assert!((pts[2].y - 1.0).abs() < 1e-12);

        let s = Station {
            center: Point::new(0.0, 0.0),
            lateral_axis_angle: PI / 4.0,
            y_min: -1.0,
            y_max: 1.0,
            v_min: 1.0,
            v_max: 2.0,
        };
        let p = s.waypoint(0.5);
        assert!((p.x - 0.353_553_390_593_273_8).abs() < 1e-12);
        assert!((p.y - 0.353_553_390_593_273_8).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_dimension_error() {
        let c = straight(5);
        let plan = MotionPlan::centered(vec![5.0; 4]);
        assert!(matches!(
            waypoints_to_cartesian(&c, &plan),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn validate_and_clamp() {
        let c = straight(4);
        let plan = MotionPlan::new(vec![0.0, 2.0, -3.0, 0.5], vec![0.5, 5.0, 30.0, 5.0]).unwrap();
        assert!(plan.validate(&c).is_err());
        let clamped = plan.clamp_to(&c).unwrap();
        clamped.validate(&c).unwrap();
        assert_eq!(clamped.lateral_offsets, vec![0.0, 1.5, -1.5, 0.5]);
        assert_eq!(clamped.speeds, vec![1.0, 5.0, 16.7, 5.0]);
    }
}
