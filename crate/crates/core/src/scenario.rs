//! Synthetic corridors and reference runs used by tests, examples and the
//! `synth` command.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::planner::center_curvature;
use crate::route::{lateral_axis_angles, MotionPlan, Point, RouteCorridor, Station};
use crate::reconstruction::{
    predict_motion, GpsSample, ImuSample, OutageWindow, ReconstructionVariables, SensorLog,
};
use crate::Result;

/// Speed limit of a 60 km/h zone, m/s.
pub const SPEED_LIMIT_60: f64 = 60.0 / 3.6;

/// Incremental lane-center polyline made of straights and circular arcs.
#[derive(Debug, Clone)]
pub struct PathBuilder {
    points: Vec<Point>,
    /// Half-width of the lateral bound attached to each point.
    half_widths: Vec<f64>,
    heading: f64,
}

impl PathBuilder {
    pub fn new(start: Point, heading: f64, half_width: f64) -> Self {
        Self {
            points: alloc::vec![start],
            half_widths: alloc::vec![half_width],
            heading,
        }
    }

    fn last(&self) -> Point {
        *self.points.last().expect("builder starts with a point")
    }

    pub fn straight(mut self, length: f64, spacing: f64, half_width: f64) -> Self {
        let steps = (math::ceil(length / spacing - 1e-9) as usize).max(1);
        let step = length / steps as f64;
        let (c, s) = (math::cos(self.heading), math::sin(self.heading));
        let p0 = self.last();
        for i in 1..=steps {
            let d = step * i as f64;
            self.points.push(Point::new(p0.x + d * c, p0.y + d * s));
            self.half_widths.push(half_width);
        }
        self
    }

    /// Arc of `radius` turning by `angle` radians (positive turns left).
    pub fn arc(mut self, radius: f64, angle: f64, spacing: f64, half_width: f64) -> Self {
        let length = radius * angle.abs();
        let steps = (math::ceil(length / spacing - 1e-9) as usize).max(1);
        let side = if angle >= 0.0 { 1.0 } else { -1.0 };
        let p0 = self.last();
        // center of the turning circle
        let normal = self.heading + side * core::f64::consts::FRAC_PI_2;
        let cx = p0.x + radius * math::cos(normal);
        let cy = p0.y + radius * math::sin(normal);
        let start_angle = normal + core::f64::consts::PI;
        for i in 1..=steps {
            let a = start_angle + angle * i as f64 / steps as f64;
            self.points
                .push(Point::new(cx + radius * math::cos(a), cy + radius * math::sin(a)));
            self.half_widths.push(half_width);
        }
        self.heading += angle;
        self
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn build(&self, name: &str, speed: (f64, f64)) -> Result<RouteCorridor> {
        let angles = lateral_axis_angles(&self.points);
        let stations = self
            .points
            .iter()
            .zip(&angles)
            .zip(&self.half_widths)
            .map(|((&center, &lateral_axis_angle), &w)| Station {
                center,
                lateral_axis_angle,
                y_min: -w,
                y_max: w,
                v_min: speed.0,
                v_max: speed.1,
            })
            .collect();
        RouteCorridor::new(name, stations)
    }
}

/// Straight east-bound corridor.
pub fn straight_corridor(length: f64, spacing: f64) -> Result<RouteCorridor> {
    PathBuilder::new(Point::new(0.0, 0.0), 0.0, 1.5)
        .straight(length, spacing, 1.5)
        .build("straight", (1.0, SPEED_LIMIT_60))
}

/// `stations` centers evenly spread over `fraction` of a circle of `radius`.
pub fn arc_corridor(radius: f64, stations: usize, fraction: f64) -> Result<RouteCorridor> {
    let span = 2.0 * core::f64::consts::PI * fraction;
    let centers: Vec<Point> = (0..stations)
        .map(|k| {
            let a = span * k as f64 / stations as f64;
            Point::new(radius * math::cos(a), radius * math::sin(a))
        })
        .collect();
    RouteCorridor::from_centers("arc", &centers, (-1.0, 1.0), (1.0, SPEED_LIMIT_60))
}

/// Five-station corner used as a brute-force optimality check.
pub fn toy_corner() -> Result<RouteCorridor> {
    let centers = [
        Point::new(0.0, 0.0),
        Point::new(8.0, 0.0),
        Point::new(14.5, 2.5),
        Point::new(18.5, 8.0),
        Point::new(20.0, 15.0),
    ];
    RouteCorridor::from_centers("toy-corner", &centers, (-1.5, 1.5), (3.0, 12.0))
}

/// Arc-length positions of the roundabout features on [`roundabout_route`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundaboutLayout {
    pub first_entry: f64,
    pub first_exit: f64,
    pub second_entry: f64,
    pub second_exit: f64,
    pub length: f64,
}

const APPROACH: f64 = 180.0;
const CONNECTOR: f64 = 250.0;
const DEPARTURE: f64 = 180.0;

fn roundabout_builder() -> PathBuilder {
    let deg = core::f64::consts::PI / 180.0;
    PathBuilder::new(Point::new(0.0, 0.0), 0.0, 1.5)
        .straight(APPROACH, 5.0, 1.5)
        // first roundabout: deflect right, circulate, exit to the left
        .arc(20.0, -35.0 * deg, 2.5, 1.0)
        .arc(15.0, 160.0 * deg, 2.5, 1.0)
        .arc(20.0, -35.0 * deg, 2.5, 1.0)
        .straight(CONNECTOR, 5.0, 1.5)
        // second roundabout: straight through
        .arc(20.0, -35.0 * deg, 2.5, 1.0)
        .arc(15.0, 70.0 * deg, 2.5, 1.0)
        .arc(20.0, -35.0 * deg, 2.5, 1.0)
        .straight(DEPARTURE, 5.0, 1.5)
}

/// Two-roundabout test route in a 60 km/h zone, about 720 m long.
pub fn roundabout_route() -> Result<RouteCorridor> {
    roundabout_builder().build("synthetic-roundabouts", (3.0, SPEED_LIMIT_60))
}

pub fn roundabout_layout() -> RoundaboutLayout {
    let deg = core::f64::consts::PI / 180.0;
    let entry_exit = 20.0 * 35.0 * deg;
    let first = 2.0 * entry_exit + 15.0 * 160.0 * deg;
    let second = 2.0 * entry_exit + 15.0 * 70.0 * deg;
    let first_entry = APPROACH;
    let first_exit = first_entry + first;
    let second_entry = first_exit + CONNECTOR;
    let second_exit = second_entry + second;
    RoundaboutLayout {
        first_entry,
        first_exit,
        second_entry,
        second_exit,
        length: second_exit + DEPARTURE,
    }
}

fn interpolate(knots: &[(f64, f64)], s: f64) -> f64 {
    if s <= knots[0].0 {
        return knots[0].1;
    }
    for w in knots.windows(2) {
        if s <= w[1].0 {
            let t = (s - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + t * (w[1].1 - w[0].1);
        }
    }
    knots[knots.len() - 1].1
}

/// Cumulative lane-center distance of each station.
pub fn station_distances(corridor: &RouteCorridor) -> Vec<f64> {
    let mut s = alloc::vec![0.0];
    for w in corridor.stations().windows(2) {
        let last = *s.last().unwrap_or(&0.0);
        s.push(last + w[0].center.distance(w[1].center));
    }
    s
}

/// Gaussian smoothing of station values over arc length `sigma` metres.
fn smooth_along(values: &[f64], s: &[f64], sigma: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..n {
                let z = (s[i] - s[j]) / sigma;
                if z.abs() > 6.0 {
                    continue;
                }
                let width = if j > 0 && j < n - 1 {
                    0.5 * (s[j + 1] - s[j - 1])
                } else {
                    0.5 * (s[1] - s[0])
                };
                let w = math::exp(-0.5 * z * z) * width;
                num += w * values[j];
                den += w;
            }
            num / den
        })
        .collect()
}

/// Scripted human-like run on [`roundabout_route`]: an early coast from the
/// start, a higher speed inside the first roundabout than a comfort planner
/// would choose, late and firm braking before the second roundabout and a
/// gentle acceleration afterwards. The line cuts the inside of each bend in
/// proportion to the smoothed lane-center curvature.
pub fn human_like_plan(corridor: &RouteCorridor) -> MotionPlan {
    let l = roundabout_layout();
    let knots = [
        (0.0, 12.5),
        (110.0, 9.0),
        (l.first_entry - 15.0, 6.3),
        (l.first_entry, 6.0),
        (l.first_exit, 6.0),
        (l.first_exit + 90.0, 12.8),
        (l.second_entry - 30.0, 12.8),
        (l.second_entry, 5.2),
        (l.second_exit, 5.2),
        (l.length, 10.5),
    ];
    let s = station_distances(corridor);
    let speeds = s.iter().map(|&d| interpolate(&knots, d)).collect();
    let kappa = smooth_along(&center_curvature(corridor), &s, 5.0);
    let offsets = corridor
        .stations()
        .iter()
        .zip(kappa)
        .map(|(st, k)| {
            let limit = 0.95 * st.y_max.min(-st.y_min);
            (20.0 * k).clamp(-limit, limit)
        })
        .collect();
    MotionPlan {
        lateral_offsets: offsets,
        speeds,
    }
}

/// Shape of the synthetic winding drive used for reconstruction tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriveSpec {
    pub duration: f64,
    pub sample_time: f64,
    pub base_speed: f64,
    pub speed_amplitude: f64,
    pub speed_period: f64,
    /// Peak path curvature, 1/m.
    pub curvature_amplitude: f64,
    pub curvature_period: f64,
    /// Straight lead-in before the curvature fades in, seconds.
    pub lead_in: f64,
    pub fade_in: f64,
}

impl Default for DriveSpec {
    fn default() -> Self {
        Self {
            duration: 600.0,
            sample_time: 0.1,
            base_speed: 10.0,
            speed_amplitude: 1.0,
            speed_period: 40.0,
            curvature_amplitude: 0.015,
            curvature_period: 6.0,
            lead_in: 10.0,
            fade_in: 5.0,
        }
    }
}

/// Ground-truth headings and speeds of a winding drive: speed oscillates
/// slowly around `base_speed` and the path curvature swings sinusoidally
/// after a straight lead-in.
pub fn winding_drive(spec: &DriveSpec) -> ReconstructionVariables {
    let two_pi = 2.0 * core::f64::consts::PI;
    let n = math::round(spec.duration / spec.sample_time) as usize + 1;
    let mut headings = Vec::with_capacity(n);
    let mut speeds = Vec::with_capacity(n);
    let mut psi = 0.0;
    for k in 0..n {
        let t = k as f64 * spec.sample_time;
        let v = spec.base_speed + spec.speed_amplitude * math::sin(two_pi * t / spec.speed_period);
        let fade = ((t - spec.lead_in) / spec.fade_in).clamp(0.0, 1.0);
        let kappa = spec.curvature_amplitude * fade * math::sin(two_pi * t / spec.curvature_period);
        headings.push(psi);
        speeds.push(v);
        psi += v * kappa * spec.sample_time;
    }
    ReconstructionVariables {
        x0: 0.0,
        y0: 0.0,
        headings,
        speeds,
    }
}

/// Knot values `b` of a piecewise-linear signal, flat beyond the ends, whose
/// mean over the unit period centred on knot `k` equals `means[k]`:
/// `(b_{k-1} + 6 b_k + b_{k+1}) / 8 = means[k]`.
fn period_mean_knots(means: &[f64]) -> Vec<f64> {
    let n = means.len();
    if n < 2 {
        return means.to_vec();
    }
    // Thomas algorithm on the diagonally dominant tridiagonal system
    let (off, mid) = (0.125, 0.75);
    let diag = |k: usize| if k == 0 || k == n - 1 { mid + off } else { mid };
    let mut c = alloc::vec![0.0; n];
    let mut d = alloc::vec![0.0; n];
    c[0] = off / diag(0);
    d[0] = means[0] / diag(0);
    for k in 1..n {
        let den = diag(k) - off * c[k - 1];
        c[k] = off / den;
        d[k] = (means[k] - off * d[k - 1]) / den;
    }
    let mut b = d;
    for k in (0..n - 1).rev() {
        b[k] -= c[k] * b[k + 1];
    }
    b
}

/// Noise-free sensor log generated by the reconstruction model itself.
///
/// GPS samples the predicted positions at the grid times and is flagged
/// invalid inside `outages`. The IMU runs at `imu_rate` from half a period
/// before the first grid time to half a period after the last;
/// the true acceleration is the piecewise-linear signal, with knots at the
/// grid times, whose mean over each period centred on `t_k` is the model value
/// `a_k`. A sample stamped `t` measures it at `t - imu_lag`.
pub fn sensor_log(
    truth: &ReconstructionVariables,
    sample_time: f64,
    imu_rate: f64,
    imu_lag: f64,
    outages: Vec<OutageWindow>,
) -> Result<SensorLog> {
    let m = predict_motion(truth, sample_time)?;
    let n = truth.len();
    let gps = (0..n)
        .map(|k| {
            let t = k as f64 * sample_time;
            GpsSample {
                t,
                x: m.x[k],
                y: m.y[k],
                valid: !outages.iter().any(|w| w.contains(t)),
            }
        })
        .collect();
    let bx = period_mean_knots(&m.ax);
    let by = period_mean_knots(&m.ay);
    let last = bx.len() - 1;
    // the IMU covers the averaging window of every grid sample, its clock
    // offset by half a reading so none falls on a window edge
    let count = math::round(n as f64 * sample_time * imu_rate) as usize;
    let imu = (0..count)
        .map(|j| {
            let stamp = (j as f64 + 0.5) / imu_rate - 0.5 * sample_time;
            let u = ((stamp - imu_lag) / sample_time).clamp(0.0, last as f64);
            let k = (math::floor(u) as usize).min(last.saturating_sub(1));
            let w = if last == 0 { 0.0 } else { u - k as f64 };
            let at = |b: &[f64]| if last == 0 { b[0] } else { b[k] + w * (b[k + 1] - b[k]) };
            ImuSample {
                t: stamp,
                ax: at(&bx),
                ay: at(&by),
            }
        })
        .collect();
    SensorLog::new(gps, imu, sample_time, outages)
}
