use comfortplan_core::scenario::*;
use comfortplan_core::kinematics::evaluate_motion;

#[test]
fn roundabout_geometry() {
    let c = roundabout_route().unwrap();
    let layout = roundabout_layout();
    assert!((c.center_length() - layout.length).abs() < 1.0);
    let end = c.stations().last().unwrap().center;
    // net heading change +90°, the route ends heading north
    let prev = c.stations()[c.len() - 2].center;
    assert!((end.x - prev.x).abs() < 1e-6 && end.y > prev.y);
}

#[test]
fn human_like_run_is_plausible() {
    let c = roundabout_route().unwrap();
    let plan = human_like_plan(&c);
    plan.validate(&c).unwrap();
    let p = evaluate_motion(&c, &plan).unwrap();
    assert!(p.min_speed() > 5.0);
    assert!(p.total_time() > 60.0 && p.total_time() < 100.0, "{}", p.total_time());
}

#[test]
fn toy_corner_is_valid() {
    assert_eq!(toy_corner().unwrap().len(), 5);
}
