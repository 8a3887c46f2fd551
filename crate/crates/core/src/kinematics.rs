//! Waypoints and speeds to time steps and accelerations.
//!
//! Segment `k` joins waypoints `k` and `k + 1`. The longitudinal acceleration
//! is constant over a segment, so `v_{k+1}^2 = v_k^2 + 2 a d_k`, and the
//! segment is traversed at its mean speed. The lateral acceleration of segment
//! `k` uses the signed heading change between segments `k` and `k + 1` divided
//! by `d_k`; the last segment has no following heading change and its lateral
//! acceleration is zero.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::route::{waypoints_to_cartesian, MotionPlan, Point, RouteCorridor};
use crate::{Error, Result};

/// Minimum segment length before a segment counts as degenerate, meters.
pub const MIN_SEGMENT_LENGTH: f64 = 1e-9;

/// Time-stamped trajectory with per-segment accelerations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionProfile {
    points: Vec<Point>,
    speeds: Vec<f64>,
    segment_time_steps: Vec<f64>,
    ax: Vec<f64>,
    ay: Vec<f64>,
    total_time: f64,
}

impl MotionProfile {
    /// Assembles a profile from precomputed segment data. `points` and
    /// `speeds` have one entry per waypoint, the other series one per segment.
    pub fn from_parts(
        points: Vec<Point>,
        speeds: Vec<f64>,
        segment_time_steps: Vec<f64>,
        ax: Vec<f64>,
        ay: Vec<f64>,
    ) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(Error::Validation(
                "a motion profile needs at least 2 waypoints".into(),
            ));
        }
        let checks = [
            ("profile speeds", n, speeds.len()),
            ("profile time steps", n - 1, segment_time_steps.len()),
            ("profile ax", n - 1, ax.len()),
            ("profile ay", n - 1, ay.len()),
        ];
        for (what, expected, found) in checks {
            if expected != found {
                return Err(Error::Dimension {
                    what,
                    expected,
                    found,
                });
            }
        }
        if let Some(k) = segment_time_steps
            .iter()
            .position(|dt| !(*dt > 0.0 && dt.is_finite()))
        {
            return Err(Error::Domain(alloc::format!(
                "time step {k} is not strictly positive"
            )));
        }
        let total_time = segment_time_steps.iter().sum();
        Ok(Self {
            points,
            speeds,
            segment_time_steps,
            ax,
            ay,
            total_time,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn segment_time_steps(&self) -> &[f64] {
        &self.segment_time_steps
    }

    pub fn ax(&self) -> &[f64] {
        &self.ax
    }

    pub fn ay(&self) -> &[f64] {
        &self.ay
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// Number of waypoints.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cumulative time at each waypoint, starting at zero.
    pub fn waypoint_times(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        t.push(acc);
        for dt in &self.segment_time_steps {
            acc += dt;
            t.push(acc);
        }
        t
    }

    pub fn min_speed(&self) -> f64 {
        self.speeds.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Arc length of the waypoint polyline.
    pub fn path_length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// Maps the plan onto the corridor and evaluates the resulting motion.
pub fn evaluate_motion(corridor: &RouteCorridor, plan: &MotionPlan) -> Result<MotionProfile> {
    let points = waypoints_to_cartesian(corridor, plan)?;
    evaluate_path(&points, &plan.speeds)
}

/// Signed angle from direction `a` to direction `b`, in (-π, π].
#[inline]
pub(crate) fn heading_change(a: (f64, f64), b: (f64, f64)) -> f64 {
    math::atan2(a.0 * b.1 - a.1 * b.0, a.0 * b.0 + a.1 * b.1)
}

struct Segments {
    dir: Vec<(f64, f64)>,
    len: Vec<f64>,
    dpsi: Vec<f64>,
}

fn segments(points: &[Point]) -> Result<Segments> {
    let n = points.len();
    let mut dir = Vec::with_capacity(n - 1);
    let mut len = Vec::with_capacity(n - 1);
    for (k, w) in points.windows(2).enumerate() {
        let h = (w[1].x - w[0].x, w[1].y - w[0].y);
        let d = math::hypot(h.0, h.1);
        if !(d > MIN_SEGMENT_LENGTH) {
            return Err(Error::DegenerateSegment { index: k });
        }
        dir.push(h);
        len.push(d);
    }
    let dpsi = dir.windows(2).map(|w| heading_change(w[0], w[1])).collect();
    Ok(Segments { dir, len, dpsi })
}

/// Evaluates an arbitrary waypoint polyline with one speed per waypoint.
pub fn evaluate_path(points: &[Point], speeds: &[f64]) -> Result<MotionProfile> {
    if points.len() != speeds.len() {
        return Err(Error::Dimension {
            what: "speeds",
            expected: points.len(),
            found: speeds.len(),
        });
    }
    if points.len() < 2 {
        return Err(Error::Validation("need at least 2 waypoints".into()));
    }
    if let Some(k) = speeds.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Domain(alloc::format!(
            "speed at waypoint {k} is {} but must be positive",
            speeds[k]
        )));
    }
    let seg = segments(points)?;
    let m = points.len() - 1;
    let mut dt = Vec::with_capacity(m);
    let mut ax = Vec::with_capacity(m);
    let mut ay = vec![0.0; m];
    for k in 0..m {
        let (v0, v1, d) = (speeds[k], speeds[k + 1], seg.len[k]);
        dt.push(2.0 * d / (v0 + v1));
        ax.push((v1 * v1 - v0 * v0) / (2.0 * d));
        if k < seg.dpsi.len() {
            let vm = 0.5 * (v0 + v1);
            ay[k] = vm * vm * seg.dpsi[k] / d;
        }
    }
    MotionProfile::from_parts(points.to_vec(), speeds.to_vec(), dt, ax, ay)
}

/// Reverse-mode pass through [`evaluate_path`]: given the sensitivities of a
/// scalar to every `ax`, `ay` and `dt`, returns its gradient with respect to
/// the waypoint coordinates and the speeds.
pub(crate) fn path_adjoint(
    points: &[Point],
    speeds: &[f64],
    profile: &MotionProfile,
    g_ax: &[f64],
    g_ay: &[f64],
    g_dt: &[f64],
) -> Result<(Vec<(f64, f64)>, Vec<f64>)> {
    let seg = segments(points)?;
    let n = points.len();
    let m = n - 1;
    let mut g_v = vec![0.0; n];
    let mut g_h = vec![(0.0, 0.0); m];
    for k in 0..m {
        let (v0, v1, d) = (speeds[k], speeds[k + 1], seg.len[k]);
        let vs = v0 + v1;
        let vm = 0.5 * vs;
        let dt = profile.segment_time_steps[k];
        let (ax, ay) = (profile.ax[k], profile.ay[k]);

        let mut g_d = g_dt[k] * 2.0 / vs - g_ax[k] * ax / d;
        let dt_dv = -dt / vs;
        g_v[k] += g_dt[k] * dt_dv - g_ax[k] * v0 / d;
        g_v[k + 1] += g_dt[k] * dt_dv + g_ax[k] * v1 / d;

        if k < seg.dpsi.len() {
            let dpsi = seg.dpsi[k];
            g_d -= g_ay[k] * ay / d;
            let dv = g_ay[k] * vm * dpsi / d;
            g_v[k] += dv;
            g_v[k + 1] += dv;
            let g_psi = g_ay[k] * vm * vm / d;
            let (a, b) = (seg.dir[k], seg.dir[k + 1]);
            let (la, lb) = (d * d, seg.len[k + 1] * seg.len[k + 1]);
            g_h[k].0 += g_psi * a.1 / la;
            g_h[k].1 -= g_psi * a.0 / la;
            g_h[k + 1].0 -= g_psi * b.1 / lb;
            g_h[k + 1].1 += g_psi * b.0 / lb;
        }
        let h = seg.dir[k];
        g_h[k].0 += g_d * h.0 / d;
        g_h[k].1 += g_d * h.1 / d;
    }
    let mut g_p = vec![(0.0, 0.0); n];
    for k in 0..m {
        g_p[k].0 -= g_h[k].0;
        g_p[k].1 -= g_h[k].1;
        g_p[k + 1].0 += g_h[k].0;
        g_p[k + 1].1 += g_h[k].1;
    }
    Ok((g_p, g_v))
}

/// Accelerations sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformSeries {
    pub rate: f64,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
}

impl UniformSeries {
    pub fn len(&self) -> usize {
        self.ax.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ax.is_empty()
    }
}

/// Minimum number of samples [`resample_uniform`] accepts.
pub const MIN_RESAMPLED: usize = 8;

/// Samples `ax` and `ay` at `k / rate` for every grid point in `[0, total_time]`.
///
/// Segment values are placed at segment mid-times and interpolated linearly
/// between them; before the first and after the last mid-time the value is held.
pub fn resample_uniform(profile: &MotionProfile, rate: f64) -> Result<UniformSeries> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::Domain(alloc::format!(
            "sampling rate {rate} must be positive"
        )));
    }
    let count = math::floor(profile.total_time * rate * (1.0 + 1e-12)) as usize + 1;
    if count < MIN_RESAMPLED {
        return Err(Error::Resolution {
            samples: count,
            required: MIN_RESAMPLED,
        });
    }
    let mut knots = Vec::with_capacity(profile.segment_time_steps.len());
    let mut t0 = 0.0;
    for dt in &profile.segment_time_steps {
        knots.push(t0 + 0.5 * dt);
        t0 += dt;
    }
    let mut ax = Vec::with_capacity(count);
    let mut ay = Vec::with_capacity(count);
    let mut j = 0;
    for i in 0..count {
        let t = i as f64 / rate;
        while j + 1 < knots.len() && knots[j + 1] <= t {
            j += 1;
        }
        let (a, b) = if t <= knots[0] {
            (profile.ax[0], profile.ay[0])
        } else if j + 1 >= knots.len() {
            (profile.ax[j], profile.ay[j])
        } else {
            let w = (t - knots[j]) / (knots[j + 1] - knots[j]);
            (
                profile.ax[j] + w * (profile.ax[j + 1] - profile.ax[j]),
                profile.ay[j] + w * (profile.ay[j + 1] - profile.ay[j]),
            )
        };
        ax.push(a);
        ay.push(b);
    }
    Ok(UniformSeries { rate, ax, ay })
}
