//! Motion reconstruction from GPS positions and IMU accelerations.
//!
//! The unknowns are the start position and a heading and speed per grid
//! sample. Positions follow by forward Euler,
//!
//! ```text
//! x_{k+1} = x_k + v_k Ts cos ψ_k      y_{k+1} = y_k + v_k Ts sin ψ_k
//! ax_k = (v_{k+1} - v_k) / Ts         ay_k = v_k (ψ_{k+1} - ψ_k) / Ts
//! ```
//!
//! and the estimate minimizes `Σ w1_k |p_k - p_GPS,k|² + Σ w2_k |a_k - a_IMU,k|²`
//! with per-sample weights switched inside GPS outage windows. A small
//! heading-smoothness term keeps the problem well posed where neither sensor
//! constrains the heading; it is reported separately from the data terms.
//!
//! GPS is interpolated onto a uniform grid with its own period; the IMU is
//! averaged over each grid period, matching the difference quotients above.
//! Levenberg–Marquardt steps are computed exactly by a backward Riccati
//! recursion along the grid, so each iteration is linear in the log length.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::AddAssign;

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::kinematics::MotionProfile;
use crate::math;
use crate::metrics::energy_reduction_percent;
use crate::route::Point;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub valid: bool,
}

/// Body-frame accelerations: `ax` along the direction of travel, `ay` to the left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageWindow {
    pub t_start: f64,
    pub t_end: f64,
}

impl OutageWindow {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start && t <= self.t_end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorLog {
    pub gps: Vec<GpsSample>,
    pub imu: Vec<ImuSample>,
    /// GPS sample period, also the reconstruction grid step, seconds.
    pub sample_time: f64,
    #[serde(default)]
    pub outage_windows: Vec<OutageWindow>,
    /// Shift already subtracted from the IMU timestamps by [`align_imu`].
    #[serde(default)]
    pub imu_time_offset: f64,
}

fn strictly_increasing<I: Iterator<Item = f64>>(times: I, what: &str) -> Result<()> {
    let mut last = f64::NEG_INFINITY;
    for (i, t) in times.enumerate() {
        if !t.is_finite() || t <= last {
            return Err(Error::Validation(format!(
                "{what} timestamps must be finite and strictly increasing (sample {i})"
            )));
        }
        last = t;
    }
    Ok(())
}

impl SensorLog {
    pub fn new(
        gps: Vec<GpsSample>,
        imu: Vec<ImuSample>,
        sample_time: f64,
        outage_windows: Vec<OutageWindow>,
    ) -> Result<Self> {
        let log = Self {
            gps,
            imu,
            sample_time,
            outage_windows,
            imu_time_offset: 0.0,
        };
        log.validate()?;
        Ok(log)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_time > 0.0 && self.sample_time.is_finite()) {
            return Err(Error::Validation(format!(
                "sample time must be positive, got {}",
                self.sample_time
            )));
        }
        if self.gps.len() < 2 || self.imu.len() < 2 {
            return Err(Error::Validation(
                "both sensor streams need at least 2 samples".into(),
            ));
        }
        strictly_increasing(self.gps.iter().map(|s| s.t), "GPS")?;
        strictly_increasing(self.imu.iter().map(|s| s.t), "IMU")?;
        if let Some(i) = self
            .gps
            .iter()
            .position(|s| !(s.x.is_finite() && s.y.is_finite()))
        {
            return Err(Error::Validation(format!("GPS sample {i} is not finite")));
        }
        if let Some(i) = self
            .imu
            .iter()
            .position(|s| !(s.ax.is_finite() && s.ay.is_finite()))
        {
            return Err(Error::Validation(format!("IMU sample {i} is not finite")));
        }
        let (t0, t1) = self.gps_span();
        for (i, w) in self.outage_windows.iter().enumerate() {
            if !(w.t_start < w.t_end && w.t_start >= t0 && w.t_end <= t1) {
                return Err(Error::Validation(format!(
                    "outage window {i} [{}, {}] must be non-empty and inside the log span [{t0}, {t1}]",
                    w.t_start, w.t_end
                )));
            }
        }
        Ok(())
    }

    pub fn gps_span(&self) -> (f64, f64) {
        (self.gps[0].t, self.gps[self.gps.len() - 1].t)
    }

    pub fn imu_span(&self) -> (f64, f64) {
        (self.imu[0].t, self.imu[self.imu.len() - 1].t)
    }

    pub fn in_outage(&self, t: f64) -> bool {
        self.outage_windows.iter().any(|w| w.contains(t))
    }

    /// Copy with every IMU timestamp moved by `-shift`.
    pub fn shifted_imu(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.imu {
            s.t -= shift;
        }
        out.imu_time_offset += shift;
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightSchedule {
    pub w1_normal: f64,
    pub w2_normal: f64,
    pub w1_outage: f64,
    pub w2_outage: f64,
}

impl Default for WeightSchedule {
    fn default() -> Self {
        Self {
            w1_normal: 1.0,
            w2_normal: 5.0,
            w1_outage: 0.0,
            w2_outage: 10.0,
        }
    }
}

impl WeightSchedule {
    pub fn validate(&self) -> Result<()> {
        let all = [self.w1_normal, self.w2_normal, self.w1_outage, self.w2_outage];
        if all.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Validation(format!(
                "reconstruction weights must be finite and non-negative: {all:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionVariables {
    pub x0: f64,
    pub y0: f64,
    pub headings: Vec<f64>,
    pub speeds: Vec<f64>,
}

impl ReconstructionVariables {
    pub fn len(&self) -> usize {
        self.headings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.headings.is_empty()
    }

    fn check(&self) -> Result<()> {
        if self.speeds.len() != self.headings.len() {
            return Err(Error::Dimension {
                what: "reconstruction speeds",
                expected: self.headings.len(),
                found: self.speeds.len(),
            });
        }
        if self.headings.len() < 2 {
            return Err(Error::Validation(
                "reconstruction needs at least 2 grid samples".into(),
            ));
        }
        Ok(())
    }
}

/// Positions at every grid sample and accelerations at all but the last.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedMotion {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
}

pub fn predict_motion(vars: &ReconstructionVariables, sample_time: f64) -> Result<PredictedMotion> {
    vars.check()?;
    if !(sample_time > 0.0) {
        return Err(Error::Validation(format!(
            "sample time must be positive, got {sample_time}"
        )));
    }
    let n = vars.len();
    let fs = 1.0 / sample_time;
    let (psi, v) = (&vars.headings, &vars.speeds);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let (mut px, mut py) = (vars.x0, vars.y0);
    for k in 0..n {
        x.push(px);
        y.push(py);
        px += v[k] * sample_time * math::cos(psi[k]);
        py += v[k] * sample_time * math::sin(psi[k]);
    }
    let ax = (0..n - 1).map(|k| (v[k + 1] - v[k]) * fs).collect();
    let ay = (0..n - 1).map(|k| v[k] * (psi[k + 1] - psi[k]) * fs).collect();
    Ok(PredictedMotion { x, y, ax, ay })
}

fn interpolate_at<T>(samples: &[T], time: impl Fn(&T) -> f64, t: f64) -> (usize, f64) {
    let i = samples.partition_point(|s| time(s) <= t);
    let i = i.clamp(1, samples.len() - 1);
    let (t0, t1) = (time(&samples[i - 1]), time(&samples[i]));
    (i, ((t - t0) / (t1 - t0)).clamp(0.0, 1.0))
}

/// Mean IMU reading and mean squared magnitude over `[t0, t1)`, falling back
/// to linear interpolation at the window center when no sample falls inside.
fn imu_window(imu: &[ImuSample], t0: f64, t1: f64) -> (f64, f64, f64) {
    let lo = imu.partition_point(|s| s.t < t0);
    let hi = imu.partition_point(|s| s.t < t1);
    if hi > lo {
        let count = (hi - lo) as f64;
        let (mut ax, mut ay, mut p) = (0.0, 0.0, 0.0);
        for s in &imu[lo..hi] {
            ax += s.ax;
            ay += s.ay;
            p += s.ax * s.ax + s.ay * s.ay;
        }
        (ax / count, ay / count, p / count)
    } else {
        let (i, w) = interpolate_at(imu, |s| s.t, 0.5 * (t0 + t1));
        let (a, b) = (&imu[i - 1], &imu[i]);
        let (ax, ay) = (a.ax + w * (b.ax - a.ax), a.ay + w * (b.ay - a.ay));
        (ax, ay, ax * ax + ay * ay)
    }
}

/// Both sensor streams on the common uniform grid with per-sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorGrid {
    pub sample_time: f64,
    pub times: Vec<f64>,
    pub gps_x: Vec<f64>,
    pub gps_y: Vec<f64>,
    /// Interpolated from two valid GPS samples and outside every outage window.
    pub gps_valid: Vec<bool>,
    pub in_outage: Vec<bool>,
    /// Position weight per sample.
    pub w1: Vec<f64>,
    /// IMU accelerations at the first `N - 1` samples: the mean of the IMU
    /// samples within half a period of the grid time.
    pub imu_ax: Vec<f64>,
    pub imu_ay: Vec<f64>,
    /// Mean of `ax² + ay²` over the same IMU samples.
    pub imu_power: Vec<f64>,
    /// Acceleration weight per acceleration sample.
    pub w2: Vec<f64>,
}

impl SensorGrid {
    pub fn new(log: &SensorLog, schedule: &WeightSchedule) -> Result<Self> {
        log.validate()?;
        schedule.validate()?;
        let ts = log.sample_time;
        let (g0, g1) = log.gps_span();
        let (i0, i1) = log.imu_span();
        // grid on the GPS time base, kept where the IMU covers every
        // acceleration window to within half an IMU period
        let half_imu = 0.5 * (i1 - i0) / (log.imu.len().max(2) - 1) as f64;
        let first = math::ceil(((i0 - half_imu + 0.5 * ts).max(g0) - g0) / ts - 1e-9).max(0.0);
        let start = g0 + first * ts;
        let end = g1.min(i1 + half_imu + 0.5 * ts);
        if !(end > start) {
            return Err(Error::Validation(format!(
                "GPS [{g0}, {g1}] and IMU [{i0}, {i1}] streams do not overlap"
            )));
        }
        let n = math::floor((end - start) / ts + 1e-9) as usize + 1;
        if n < 2 {
            return Err(Error::Resolution {
                samples: n,
                required: 2,
            });
        }
        let mut grid = Self {
            sample_time: ts,
            times: Vec::with_capacity(n),
            gps_x: Vec::with_capacity(n),
            gps_y: Vec::with_capacity(n),
            gps_valid: Vec::with_capacity(n),
            in_outage: Vec::with_capacity(n),
            w1: Vec::with_capacity(n),
            imu_ax: Vec::with_capacity(n - 1),
            imu_ay: Vec::with_capacity(n - 1),
            imu_power: Vec::with_capacity(n - 1),
            w2: Vec::with_capacity(n - 1),
        };
        for k in 0..n {
            let t = (start + k as f64 * ts).min(end);
            let (i, w) = interpolate_at(&log.gps, |s| s.t, t);
            let (a, b) = (&log.gps[i - 1], &log.gps[i]);
            let outage = log.in_outage(t);
            // an exact hit on a sample only needs that sample to be valid
            let valid = !outage
                && match w {
                    w if w <= 0.0 => a.valid,
                    w if w >= 1.0 => b.valid,
                    _ => a.valid && b.valid,
                };
            grid.times.push(t);
            grid.gps_x.push(a.x + w * (b.x - a.x));
            grid.gps_y.push(a.y + w * (b.y - a.y));
            grid.gps_valid.push(valid);
            grid.in_outage.push(outage);
            grid.w1.push(match (outage, valid) {
                (true, _) => schedule.w1_outage,
                (false, true) => schedule.w1_normal,
                (false, false) => 0.0,
            });
            if k + 1 < n {
                let (ax, ay, power) = imu_window(&log.imu, t - 0.5 * ts, t + 0.5 * ts);
                grid.imu_ax.push(ax);
                grid.imu_ay.push(ay);
                grid.imu_power.push(power);
                grid.w2.push(if outage {
                    schedule.w2_outage
                } else {
                    schedule.w2_normal
                });
            }
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.times[self.len() - 1] - self.times[0]
    }

    /// Raw IMU acceleration energy `∫ (ax² + ay²) dt` at the native IMU rate
    /// over the acceleration samples of the grid.
    pub fn imu_energy(&self) -> f64 {
        self.imu_power.iter().sum::<f64>() * self.sample_time
    }
}

/// Default weight of the heading-smoothness term `ρ Σ (ψ_{k+1} - ψ_k)²`.
pub const HEADING_REGULARIZATION: f64 = 1e-6;

/// Terms of the reconstruction objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTerms {
    /// `Σ |p_k - p_GPS,k|²` over samples with non-zero position weight.
    pub j_gps: f64,
    /// `Σ |a_k - a_IMU,k|²` over samples with non-zero acceleration weight.
    pub j_imu: f64,
    /// `Σ w1_k |p_k - p_GPS,k|²`.
    pub gps_term: f64,
    /// `Σ w2_k |a_k - a_IMU,k|²`.
    pub imu_term: f64,
    /// `gps_term + imu_term`.
    pub total: f64,
    /// Heading-smoothness term, not part of `total`.
    pub regularization: f64,
}

pub fn cost_terms(vars: &ReconstructionVariables, grid: &SensorGrid, regularization: f64) -> Result<CostTerms> {
    if vars.len() != grid.len() {
        return Err(Error::Dimension {
            what: "reconstruction variables",
            expected: grid.len(),
            found: vars.len(),
        });
    }
    let m = predict_motion(vars, grid.sample_time)?;
    let (mut j_gps, mut gps_term) = (0.0, 0.0);
    for k in 0..grid.len() {
        if grid.w1[k] > 0.0 {
            let (dx, dy) = (m.x[k] - grid.gps_x[k], m.y[k] - grid.gps_y[k]);
            let e = dx * dx + dy * dy;
            j_gps += e;
            gps_term += grid.w1[k] * e;
        }
    }
    let (mut j_imu, mut imu_term) = (0.0, 0.0);
    for k in 0..grid.len() - 1 {
        if grid.w2[k] > 0.0 {
            let (ex, ey) = (m.ax[k] - grid.imu_ax[k], m.ay[k] - grid.imu_ay[k]);
            let e = ex * ex + ey * ey;
            j_imu += e;
            imu_term += grid.w2[k] * e;
        }
    }
    let reg: f64 = vars
        .headings
        .windows(2)
        .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
        .sum::<f64>()
        * regularization;
    Ok(CostTerms {
        j_gps,
        j_imu,
        gps_term,
        imu_term,
        total: gps_term + imu_term,
        regularization: reg,
    })
}

/// Weighted position plus acceleration error of `vars` against `log`.
pub fn reconstruction_cost(
    vars: &ReconstructionVariables,
    log: &SensorLog,
    schedule: &WeightSchedule,
) -> Result<f64> {
    let grid = SensorGrid::new(log, schedule)?;
    Ok(cost_terms(vars, &grid, 0.0)?.total)
}

/// Quadratic Savitzky–Golay smoothing weights for a window of `2m + 1` samples.
fn savitzky_golay(m: usize) -> Vec<f64> {
    let mf = m as f64;
    let den = (2.0 * mf - 1.0) * (2.0 * mf + 1.0) * (2.0 * mf + 3.0);
    (0..=2 * m)
        .map(|j| {
            let i = j as f64 - mf;
            (3.0 * (3.0 * mf * mf + 3.0 * mf - 1.0) - 15.0 * i * i) / den
        })
        .collect()
}

fn smooth_at(values: &[f64], weights: &[f64], k: usize) -> f64 {
    let m = weights.len() / 2;
    weights
        .iter()
        .zip(&values[k - m..=k + m])
        .map(|(w, v)| w * v)
        .sum()
}

fn unwrap_angles(angles: &mut [f64]) {
    let two_pi = 2.0 * core::f64::consts::PI;
    for k in 1..angles.len() {
        let d = angles[k] - angles[k - 1];
        angles[k] -= two_pi * math::round(d / two_pi);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignSettings {
    /// Largest IMU lag searched, seconds.
    pub max_shift: f64,
    /// Length of the smoothing window applied to both signals, seconds.
    pub smoothing_window: f64,
}

impl Default for AlignSettings {
    fn default() -> Self {
        Self {
            max_shift: 0.2,
            smoothing_window: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// Log with the IMU timestamps moved by `-shift`.
    pub log: SensorLog,
    /// Estimated IMU lag: an IMU sample stamped `t` was taken at `t - shift`.
    pub shift: f64,
    pub peak_correlation: f64,
    /// The correlation peak sits on the edge of the search bracket.
    pub at_edge: bool,
    /// `(shift, correlation)` for every candidate shift.
    pub correlation_curve: Vec<(f64, f64)>,
}

/// Estimates the IMU lag within `±max_shift` and removes it.
pub fn align_imu(log: &SensorLog, max_shift: f64) -> Result<Alignment> {
    align_imu_with(
        log,
        &AlignSettings {
            max_shift,
            ..AlignSettings::default()
        },
    )
}

/// As [`align_imu`] with explicit settings.
///
/// The GPS track is smoothed with a quadratic Savitzky–Golay window and
/// differenced into headings and speeds; `v_k (ψ_{k+1} - ψ_k) / Ts` gives the
/// GPS lateral acceleration on the same convention as the reconstruction
/// model. The IMU lateral acceleration, sampled at the grid times plus a
/// candidate shift and smoothed with the same window, is correlated against
/// it; the best shift on the IMU sample spacing is refined by a parabola.
pub fn align_imu_with(log: &SensorLog, settings: &AlignSettings) -> Result<Alignment> {
    log.validate()?;
    if !(settings.max_shift >= 0.0 && settings.smoothing_window > 0.0) {
        return Err(Error::Validation(format!(
            "invalid alignment settings: max shift {}, window {}",
            settings.max_shift, settings.smoothing_window
        )));
    }
    let ts = log.sample_time;
    let (g0, g1) = log.gps_span();
    let (i0, i1) = log.imu_span();
    if !(g1.min(i1) > g0.max(i0)) {
        return Err(Error::Validation("GPS and IMU streams do not overlap".into()));
    }
    let n = math::floor((g1 - g0) / ts + 1e-9) as usize + 1;
    let half = (math::round(0.5 * settings.smoothing_window / ts) as usize).max(2);
    let weights = savitzky_golay(half);

    let mut gx = Vec::with_capacity(n);
    let mut gy = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    let times: Vec<f64> = (0..n).map(|k| (g0 + k as f64 * ts).min(g1)).collect();
    for &t in &times {
        let (i, w) = interpolate_at(&log.gps, |s| s.t, t);
        let (a, b) = (&log.gps[i - 1], &log.gps[i]);
        gx.push(a.x + w * (b.x - a.x));
        gy.push(a.y + w * (b.y - a.y));
        valid.push(a.valid && b.valid && !log.in_outage(t));
    }

    // smoothed positions where the whole window is valid
    let mut window_ok = vec![false; n];
    let mut run = 0usize;
    let mut valid_run = vec![0usize; n];
    for k in 0..n {
        run = if valid[k] { run + 1 } else { 0 };
        valid_run[k] = run;
    }
    for k in half..n.saturating_sub(half) {
        window_ok[k] = valid_run[k + half] > 2 * half;
    }
    let sx: Vec<f64> = (0..n)
        .map(|k| if window_ok[k] { smooth_at(&gx, &weights, k) } else { 0.0 })
        .collect();
    let sy: Vec<f64> = (0..n)
        .map(|k| if window_ok[k] { smooth_at(&gy, &weights, k) } else { 0.0 })
        .collect();

    // GPS lateral acceleration at k uses smoothed positions k, k+1, k+2
    let mut heading = vec![0.0; n];
    let mut speed = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        if window_ok[k] && window_ok[k + 1] {
            heading[k] = math::atan2(sy[k + 1] - sy[k], sx[k + 1] - sx[k]);
            speed[k] = math::hypot(sx[k + 1] - sx[k], sy[k + 1] - sy[k]) / ts;
        }
    }
    let imu_period = (i1 - i0) / (log.imu.len() - 1) as f64;
    let steps = math::ceil(settings.max_shift / imu_period - 1e-9) as usize;
    let step = if steps == 0 { 0.0 } else { settings.max_shift / steps as f64 };
    let usable: Vec<usize> = (0..n.saturating_sub(2))
        .filter(|&k| {
            window_ok[k] && window_ok[k + 1] && window_ok[k + 2] && k >= half && k + half < n
        })
        .filter(|&k| times[k] - half as f64 * ts - settings.max_shift >= i0 - 1e-12)
        .filter(|&k| times[k] + half as f64 * ts + settings.max_shift <= i1 + 1e-12)
        .collect();
    if usable.len() < 3 {
        return Err(Error::Resolution {
            samples: usable.len(),
            required: 3,
        });
    }
    let gps_ay: Vec<f64> = usable
        .iter()
        .map(|&k| {
            let mut d = heading[k + 1] - heading[k];
            let two_pi = 2.0 * core::f64::consts::PI;
            d -= two_pi * math::round(d / two_pi);
            speed[k] * d / ts
        })
        .collect();

    let mut imu_grid = vec![0.0; n];
    let mut correlations = Vec::with_capacity(2 * steps + 1);
    for j in 0..=2 * steps {
        let shift = -settings.max_shift + j as f64 * step;
        let lo = usable[0] - half;
        let hi = usable[usable.len() - 1] + half;
        for k in lo..=hi {
            let (i, w) = interpolate_at(&log.imu, |s| s.t, times[k] + shift);
            imu_grid[k] = log.imu[i - 1].ay + w * (log.imu[i].ay - log.imu[i - 1].ay);
        }
        let imu_ay: Vec<f64> = usable
            .iter()
            .map(|&k| smooth_at(&imu_grid, &weights, k))
            .collect();
        correlations.push(pearson(&imu_ay, &gps_ay));
    }
    let mut best = 0;
    for (j, c) in correlations.iter().enumerate() {
        if *c > correlations[best] {
            best = j;
        }
    }
    let at_edge = best == 0 || best == 2 * steps;
    let mut shift = -settings.max_shift + best as f64 * step;
    if !at_edge {
        let (a, b, c) = (correlations[best - 1], correlations[best], correlations[best + 1]);
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            shift += 0.5 * (a - c) / den * step;
        }
    }
    Ok(Alignment {
        log: log.shifted_imu(shift),
        shift,
        peak_correlation: correlations[best],
        at_edge,
        correlation_curve: correlations
            .iter()
            .enumerate()
            .map(|(j, c)| (-settings.max_shift + j as f64 * step, *c))
            .collect(),
    })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    let den = math::sqrt(saa * sbb);
    if den > 1e-300 {
        sab / den
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructSettings {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the objective by less than this fraction.
    pub relative_tolerance: f64,
    /// Weight of the heading-smoothness term.
    pub regularization: f64,
    /// Shortest log accepted, seconds.
    pub min_duration: f64,
}

impl Default for ReconstructSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_tolerance: 1e-13,
            regularization: HEADING_REGULARIZATION,
            min_duration: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionDiagnostics {
    pub sample_time: f64,
    pub samples: usize,
    pub imu_time_offset: f64,
    pub iterations: usize,
    pub converged: bool,
    pub initial_cost: f64,
    pub terms: CostTerms,
    /// `Σ (ax² + ay²) Ts` of the IMU on the grid.
    pub energy_raw_imu: f64,
    /// The same sum for the reconstructed accelerations.
    pub energy_reconstructed: f64,
    /// `(raw - reconstructed) / raw · 100`.
    pub energy_reduction_percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub profile: MotionProfile,
    pub variables: ReconstructionVariables,
    pub predicted: PredictedMotion,
    pub diagnostics: ReconstructionDiagnostics,
}

/// Finite-difference start: headings from `atan2` of consecutive deltas of the
/// smoothed GPS track, unwrapped, and speeds from chord lengths over `Ts`. GPS
/// samples without position weight are bridged linearly between their weighted
/// neighbours first.
pub fn initial_variables(grid: &SensorGrid) -> ReconstructionVariables {
    let n = grid.len();
    let (mut x, mut y) = (grid.gps_x.clone(), grid.gps_y.clone());
    let anchors: Vec<usize> = (0..n).filter(|&k| grid.w1[k] > 0.0).collect();
    if !anchors.is_empty() {
        for k in 0..n {
            let after = anchors.partition_point(|&a| a < k);
            let (xa, ya) = match (after.checked_sub(1).map(|i| anchors[i]), anchors.get(after)) {
                (_, Some(&b)) if b == k => continue,
                (Some(a), Some(&b)) => {
                    let w = (k - a) as f64 / (b - a) as f64;
                    (x[a] + w * (x[b] - x[a]), y[a] + w * (y[b] - y[a]))
                }
                (Some(a), None) => (x[a], y[a]),
                (None, Some(&b)) => (x[b], y[b]),
                (None, None) => continue,
            };
            x[k] = xa;
            y[k] = ya;
        }
    }
    // noise on sub-metre chords would scatter the headings over several
    // radians, so positions are first smoothed over about a second with a
    // quadratic fit, narrowing the window near the ends
    let ts = grid.sample_time;
    let half = (math::round(1.0 / ts) as usize).max(1);
    let smooth = |values: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|k| {
                let m = half.min(k).min(n - 1 - k);
                if m < 2 {
                    values[k]
                } else {
                    smooth_at(values, &savitzky_golay(m), k)
                }
            })
            .collect()
    };
    let (x, y) = (smooth(&x), smooth(&y));
    let mut headings = vec![0.0; n];
    let mut speeds = vec![0.0; n];
    for k in 0..n - 1 {
        let (dx, dy) = (x[k + 1] - x[k], y[k + 1] - y[k]);
        headings[k] = math::atan2(dy, dx);
        speeds[k] = math::hypot(dx, dy) / ts;
    }
    headings[n - 1] = headings[n - 2];
    speeds[n - 1] = speeds[n - 2];
    unwrap_angles(&mut headings);
    ReconstructionVariables {
        x0: x[0],
        y0: y[0],
        headings,
        speeds,
    }
}

type Mat6 = SMatrix<f64, 6, 6>;
type Mat8 = SMatrix<f64, 8, 8>;
type Vec6 = SVector<f64, 6>;
type Vec8 = SVector<f64, 8>;
type Mat24 = SMatrix<f64, 2, 4>;

/// One residual `r0 + a·δs_k + b·δs_{k+1}` of a grid stage.
fn add_row(h: &mut Mat8, g: &mut Vec8, row: &[f64; 8], r0: f64) {
    let c = Vec8::from_column_slice(row);
    *h += c * c.transpose();
    *g += c * r0;
}

/// Gauss–Newton step with damping `mu`, by backward Riccati recursion over the
/// per-sample states `s_k = (x_k, y_k, ψ_k, v_k)`. Returns `None` when a
/// block fails to be positive definite.
fn riccati_step(
    vars: &ReconstructionVariables,
    m: &PredictedMotion,
    grid: &SensorGrid,
    regularization: f64,
    mu: f64,
) -> Option<(Vector2<f64>, Vec<f64>, Vec<f64>)> {
    let n = grid.len();
    let ts = grid.sample_time;
    let fs = 1.0 / ts;
    let (psi, v) = (&vars.headings, &vars.speeds);
    let sr = math::sqrt(regularization);

    let mut gains: Vec<(Mat24, Vector2<f64>)> = Vec::with_capacity(n - 1);
    let mut p = Matrix4::<f64>::zeros();
    let mut q = Vector4::<f64>::zeros();
    for k in (0..n - 1).rev() {
        let mut h = Mat8::zeros();
        let mut g = Vec8::zeros();
        let s2 = math::sqrt(grid.w2[k]);
        if s2 > 0.0 {
            add_row(
                &mut h,
                &mut g,
                &[0.0, 0.0, 0.0, -fs * s2, 0.0, 0.0, 0.0, fs * s2],
                s2 * ((v[k + 1] - v[k]) * fs - grid.imu_ax[k]),
            );
            let dpsi = psi[k + 1] - psi[k];
            add_row(
                &mut h,
                &mut g,
                &[0.0, 0.0, -v[k] * fs * s2, dpsi * fs * s2, 0.0, 0.0, v[k] * fs * s2, 0.0],
                s2 * (v[k] * dpsi * fs - grid.imu_ay[k]),
            );
        }
        if sr > 0.0 {
            add_row(
                &mut h,
                &mut g,
                &[0.0, 0.0, -sr, 0.0, 0.0, 0.0, sr, 0.0],
                sr * (psi[k + 1] - psi[k]),
            );
        }
        let s1 = math::sqrt(grid.w1[k + 1]);
        if s1 > 0.0 {
            add_row(
                &mut h,
                &mut g,
                &[0.0, 0.0, 0.0, 0.0, s1, 0.0, 0.0, 0.0],
                s1 * (m.x[k + 1] - grid.gps_x[k + 1]),
            );
            add_row(
                &mut h,
                &mut g,
                &[0.0, 0.0, 0.0, 0.0, 0.0, s1, 0.0, 0.0],
                s1 * (m.y[k + 1] - grid.gps_y[k + 1]),
            );
        }
        // cost-to-go of the next state
        h.fixed_view_mut::<4, 4>(4, 4).add_assign(&p);
        g.fixed_view_mut::<4, 1>(4, 0).add_assign(&q);

        // δs_{k+1} = A δs_k + B δu with δu = (δψ_{k+1}, δv_{k+1})
        let (c, s) = (math::cos(psi[k]), math::sin(psi[k]));
        let mut t = SMatrix::<f64, 8, 6>::zeros();
        for i in 0..4 {
            t[(i, i)] = 1.0;
        }
        t[(4, 0)] = 1.0;
        t[(4, 2)] = -v[k] * ts * s;
        t[(4, 3)] = ts * c;
        t[(5, 1)] = 1.0;
        t[(5, 2)] = v[k] * ts * c;
        t[(5, 3)] = ts * s;
        t[(6, 4)] = 1.0;
        t[(7, 5)] = 1.0;
        let mut qm: Mat6 = t.transpose() * h * t;
        let qv: Vec6 = t.transpose() * g;
        qm[(4, 4)] += mu;
        qm[(5, 5)] += mu;

        let quu = Matrix2::new(qm[(4, 4)], qm[(4, 5)], qm[(5, 4)], qm[(5, 5)]);
        let qus: Mat24 = qm.fixed_view::<2, 4>(4, 0).into_owned();
        let qss: Matrix4<f64> = qm.fixed_view::<4, 4>(0, 0).into_owned();
        let qu = Vector2::new(qv[4], qv[5]);
        let qs: Vector4<f64> = qv.fixed_view::<4, 1>(0, 0).into_owned();
        let chol = quu.cholesky()?;
        let gain = -chol.solve(&qus);
        let ff = -chol.solve(&qu);
        p = qss + qus.transpose() * gain;
        p = 0.5 * (p + p.transpose());
        q = qs + qus.transpose() * ff;
        gains.push((gain, ff));
    }
    gains.reverse();

    // root: first GPS sample and damping on all of s_0
    let s1 = math::sqrt(grid.w1[0]);
    let mut root = p + Matrix4::identity() * mu;
    let mut rhs = q;
    if s1 > 0.0 {
        root[(0, 0)] += s1 * s1;
        root[(1, 1)] += s1 * s1;
        rhs[0] += s1 * s1 * (m.x[0] - grid.gps_x[0]);
        rhs[1] += s1 * s1 * (m.y[0] - grid.gps_y[0]);
    }
    let mut ds = -root.cholesky()?.solve(&rhs);
    let start = Vector2::new(ds[0], ds[1]);
    let mut d_psi = vec![0.0; n];
    let mut d_v = vec![0.0; n];
    d_psi[0] = ds[2];
    d_v[0] = ds[3];
    for k in 0..n - 1 {
        let (gain, ff) = &gains[k];
        let du = gain * ds + ff;
        let (c, s) = (math::cos(psi[k]), math::sin(psi[k]));
        let next = Vector4::new(
            ds[0] - v[k] * ts * s * ds[2] + ts * c * ds[3],
            ds[1] + v[k] * ts * c * ds[2] + ts * s * ds[3],
            du[0],
            du[1],
        );
        d_psi[k + 1] = du[0];
        d_v[k + 1] = du[1];
        ds = next;
    }
    Some((start, d_psi, d_v))
}

fn objective(vars: &ReconstructionVariables, grid: &SensorGrid, regularization: f64) -> Result<(f64, PredictedMotion)> {
    let t = cost_terms(vars, grid, regularization)?;
    Ok((t.total + t.regularization, predict_motion(vars, grid.sample_time)?))
}

/// Reconstructs the motion from an aligned log with default settings.
pub fn reconstruct(log: &SensorLog, schedule: &WeightSchedule) -> Result<Reconstruction> {
    reconstruct_with(log, schedule, &ReconstructSettings::default())
}

pub fn reconstruct_with(
    log: &SensorLog,
    schedule: &WeightSchedule,
    settings: &ReconstructSettings,
) -> Result<Reconstruction> {
    let grid = SensorGrid::new(log, schedule)?;
    if grid.duration() < settings.min_duration {
        return Err(Error::Validation(format!(
            "log covers {:.3} s, at least {} s are needed",
            grid.duration(),
            settings.min_duration
        )));
    }
    let start = initial_variables(&grid);
    reconstruct_from(&grid, start, log.imu_time_offset, settings)
}

/// Levenberg–Marquardt from an explicit starting point on a prepared grid.
pub fn reconstruct_from(
    grid: &SensorGrid,
    start: ReconstructionVariables,
    imu_time_offset: f64,
    settings: &ReconstructSettings,
) -> Result<Reconstruction> {
    let rho = settings.regularization;
    let mut vars = start;
    let (mut f, mut m) = objective(&vars, grid, rho)?;
    let initial_cost = f;
    let mut mu = 1e-3;
    let mut iterations = 0;
    let mut converged = f == 0.0;
    while !converged && iterations < settings.max_iterations {
        iterations += 1;
        let mut accepted = false;
        for _ in 0..40 {
            let Some((d0, d_psi, d_v)) = riccati_step(&vars, &m, grid, rho, mu) else {
                mu *= 10.0;
                continue;
            };
            let trial = ReconstructionVariables {
                x0: vars.x0 + d0[0],
                y0: vars.y0 + d0[1],
                headings: vars.headings.iter().zip(&d_psi).map(|(a, b)| a + b).collect(),
                speeds: vars.speeds.iter().zip(&d_v).map(|(a, b)| a + b).collect(),
            };
            let (f_new, m_new) = objective(&trial, grid, rho)?;
            if f_new.is_finite() && f_new <= f {
                let decrease = f - f_new;
                vars = trial;
                m = m_new;
                f = f_new;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                if decrease <= settings.relative_tolerance * f.max(1e-300) || f == 0.0 {
                    converged = true;
                }
                break;
            }
            mu *= 4.0;
            if mu > 1e16 {
                break;
            }
        }
        if !accepted {
            // no step lowers the objective: a stationary point to working precision
            converged = mu > 1e16;
            break;
        }
    }

    let terms = cost_terms(&vars, grid, rho)?;
    let n = grid.len();
    let points: Vec<Point> = (0..n).map(|k| Point::new(m.x[k], m.y[k])).collect();
    let profile = MotionProfile::from_parts(
        points,
        vars.speeds.clone(),
        vec![grid.sample_time; n - 1],
        m.ax.clone(),
        m.ay.clone(),
    )?;
    let energy_reconstructed = m
        .ax
        .iter()
        .zip(&m.ay)
        .map(|(a, b)| a * a + b * b)
        .sum::<f64>()
        * grid.sample_time;
    let energy_raw_imu = grid.imu_energy();
    let diagnostics = ReconstructionDiagnostics {
        sample_time: grid.sample_time,
        samples: n,
        imu_time_offset,
        iterations,
        converged,
        initial_cost,
        terms,
        energy_raw_imu,
        energy_reconstructed,
        energy_reduction_percent: if energy_raw_imu > 0.0 {
            energy_reduction_percent(energy_raw_imu, energy_reconstructed)
        } else {
            0.0
        },
    };
    Ok(Reconstruction {
        profile,
        variables: vars,
        predicted: m,
        diagnostics,
    })
}

/// Default speed a run has to stay above to count as undisturbed, m/s.
pub const MIN_RUN_SPEED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunValidity {
    pub valid: bool,
    pub min_speed: f64,
    pub reasons: Vec<String>,
}

/// A run is valid only if its speed stays strictly above `min_speed`.
pub fn validate_run(profile: &MotionProfile, min_speed: f64) -> RunValidity {
    let lowest = profile.min_speed();
    let mut reasons = Vec::new();
    if lowest < min_speed {
        reasons.push(format!("min speed {lowest:.1} < {min_speed:.1}"));
    } else if lowest == min_speed {
        reasons.push(format!("min speed {lowest:.1} is not over {min_speed:.1}"));
    }
    RunValidity {
        valid: reasons.is_empty(),
        min_speed: lowest,
        reasons,
    }
}
