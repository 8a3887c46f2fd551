//! Motion-sickness frequency weighting.
//!
//! The weighting is the band-pass `H(s) = s / ((τ1 s + 1)(τ2 s + 1))`, realized as
//!
//! ```text
//! A = [ -(1/τ1 + 1/τ2)  1 ]    B = [ 1/(τ1 τ2) ]    C = [ 1  0 ]
//!     [ -1/(τ1 τ2)      0 ]        [ 0         ]
//! ```
//!
//! and stepped with an exact zero-order hold over each (possibly different)
//! time step. `A` has the distinct real eigenvalues `-1/τ1` and `-1/τ2`, so the
//! matrix exponential is evaluated through its eigendecomposition.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];
pub type Vec2 = [f64; 2];

/// Default cooldown with zero input appended after a sequence, seconds.
pub const DEFAULT_COOLDOWN: f64 = 30.0;

/// Time constants of the band-pass, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Low-pass time constant.
    pub tau1: f64,
    /// High-pass time constant.
    pub tau2: f64,
}

impl Default for FilterSpec {
    /// Pass band of roughly 0.02–0.2 Hz: `τ1 = 1/(2π·0.2)`, `τ2 = 1/(2π·0.02)`.
    ///
    /// These cut-offs are a tunable assumption, not a measured quantity.
    fn default() -> Self {
        let two_pi = 2.0 * core::f64::consts::PI;
        Self {
            tau1: 1.0 / (two_pi * 0.2),
            tau2: 1.0 / (two_pi * 0.02),
        }
    }
}

impl FilterSpec {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self> {
        let spec = Self { tau1, tau2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau1 > 0.0 && self.tau1.is_finite() && self.tau2 > 0.0 && self.tau2.is_finite())
        {
            return Err(Error::Validation(alloc::format!(
                "filter time constants must be positive (tau1 = {}, tau2 = {})",
                self.tau1,
                self.tau2
            )));
        }
        // repeated poles are not diagonalizable
        if (self.tau1 - self.tau2).abs() <= 1e-9 * self.tau1.max(self.tau2) {
            return Err(Error::Validation(
                "filter time constants must differ".into(),
            ));
        }
        Ok(())
    }

    /// `|H(jω)|`.
    pub fn gain(&self, omega: f64) -> f64 {
        let (a, b) = (self.tau1 * omega, self.tau2 * omega);
        omega.abs() / math::sqrt((1.0 + a * a) * (1.0 + b * b))
    }
}

/// Filter configuration as stored in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSettings {
    pub tau1_s: f64,
    pub tau2_s: f64,
    pub cooldown_s: f64,
}

impl Default for FilterSettings {
    fn default() -> Self {
        let spec = FilterSpec::default();
        Self {
            tau1_s: spec.tau1,
            tau2_s: spec.tau2,
            cooldown_s: DEFAULT_COOLDOWN,
        }
    }
}

impl FilterSettings {
    pub fn spec(&self) -> Result<FilterSpec> {
        FilterSpec::new(self.tau1_s, self.tau2_s)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec()?;
        if !(self.cooldown_s >= 0.0 && self.cooldown_s.is_finite()) {
            return Err(Error::Validation(alloc::format!(
                "cooldown {} must be non-negative",
                self.cooldown_s
            )));
        }
        Ok(())
    }
}

/// Continuous-time realization `(A, B, C)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousModel {
    pub a: Mat2,
    pub b: Vec2,
    pub c: Vec2,
}

/// Zero-order-hold discretization for one step length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrete {
    pub dt: f64,
    pub ad: Mat2,
    pub bd: Vec2,
}

/// Precomputed eigendecomposition of the band-pass realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicknessFilter {
    spec: FilterSpec,
    model: ContinuousModel,
    eigenvalues: Vec2,
    p: Mat2,
    p_inv: Mat2,
    /// `P⁻¹ B`, the input in modal coordinates.
    b_modal: Vec2,
}

#[inline]
pub(crate) fn mat_vec(m: &Mat2, v: &Vec2) -> Vec2 {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

#[inline]
pub(crate) fn mat_t_vec(m: &Mat2, v: &Vec2) -> Vec2 {
    [
        m[0][0] * v[0] + m[1][0] * v[1],
        m[0][1] * v[0] + m[1][1] * v[1],
    ]
}

pub fn continuous_matrices(spec: &FilterSpec) -> ContinuousModel {
    let (i1, i2) = (1.0 / spec.tau1, 1.0 / spec.tau2);
    ContinuousModel {
        a: [[-(i1 + i2), 1.0], [-i1 * i2, 0.0]],
        b: [i1 * i2, 0.0],
        c: [1.0, 0.0],
    }
}

impl SicknessFilter {
    pub fn new(spec: FilterSpec) -> Result<Self> {
        spec.validate()?;
        let model = continuous_matrices(&spec);
        let a = model.a;
        // characteristic polynomial s² - tr s + det
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let disc = tr * tr - 4.0 * det;
        if disc <= 0.0 {
            return Err(Error::Validation(
                "filter matrix is not diagonalizable over the reals".into(),
            ));
        }
        let root = math::sqrt(disc);
        // numerically stable pair of roots
        let q = 0.5 * (tr + if tr >= 0.0 { root } else { -root });
        let mut l = [det / q, q];
        l.sort_by(|x, y| y.partial_cmp(x).unwrap_or(core::cmp::Ordering::Equal));
        // eigenvector (a01, λ - a00) from the first row of (A - λI) v = 0
        let p = [[a[0][1], a[0][1]], [l[0] - a[0][0], l[1] - a[0][0]]];
        let det_p = p[0][0] * p[1][1] - p[0][1] * p[1][0];
        let p_inv = [
            [p[1][1] / det_p, -p[0][1] / det_p],
            [-p[1][0] / det_p, p[0][0] / det_p],
        ];
        let b_modal = mat_vec(&p_inv, &model.b);
        Ok(Self {
            spec,
            model,
            eigenvalues: l,
            p,
            p_inv,
            b_modal,
        })
    }

    pub fn spec(&self) -> FilterSpec {
        self.spec
    }

    pub fn continuous(&self) -> &ContinuousModel {
        &self.model
    }

    /// Eigenvalues of `A`, in decreasing order.
    pub fn eigenvalues(&self) -> Vec2 {
        self.eigenvalues
    }

    pub fn discretize(&self, dt: f64) -> Result<Discrete> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(alloc::format!(
                "time step {dt} must be positive"
            )));
        }
        Ok(self.discretize_unchecked(dt))
    }

    /// `A_d = P e^{Ω dt} P⁻¹` and `B_d = A⁻¹ (A_d - I) B`, the latter evaluated in
    /// modal coordinates as `P diag((e^{λ dt} - 1)/λ) P⁻¹ B`.
    pub(crate) fn discretize_unchecked(&self, dt: f64) -> Discrete {
        let [l0, l1] = self.eigenvalues;
        let e = [math::exp(l0 * dt), math::exp(l1 * dt)];
        let f = [math::expm1(l0 * dt) / l0, math::expm1(l1 * dt) / l1];
        let (p, q) = (&self.p, &self.p_inv);
        let mut ad = [[0.0; 2]; 2];
        for (i, row) in ad.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = p[i][0] * e[0] * q[0][j] + p[i][1] * e[1] * q[1][j];
            }
        }
        let m = [f[0] * self.b_modal[0], f[1] * self.b_modal[1]];
        let bd = mat_vec(p, &m);
        Discrete { dt, ad, bd }
    }

    /// `A x + B u`, the state derivative.
    #[inline]
    pub(crate) fn derivative(&self, x: &Vec2, u: f64) -> Vec2 {
        let ax = mat_vec(&self.model.a, x);
        [ax[0] + self.model.b[0] * u, ax[1] + self.model.b[1] * u]
    }

    /// Filters `accels`, where sample `k` is held for `time_steps[k]`, then
    /// continues with zero input for `cooldown` seconds.
    pub fn filter_sequence(
        &self,
        accels: &[f64],
        time_steps: &[f64],
        cooldown: f64,
    ) -> Result<FilteredSequence> {
        if accels.len() != time_steps.len() {
            return Err(Error::Dimension {
                what: "filter time steps",
                expected: accels.len(),
                found: time_steps.len(),
            });
        }
        if let Some(k) = time_steps.iter().position(|dt| !(*dt > 0.0 && dt.is_finite())) {
            return Err(Error::Domain(alloc::format!(
                "time step {k} must be positive"
            )));
        }
        if !(cooldown >= 0.0 && cooldown.is_finite()) {
            return Err(Error::Domain(alloc::format!(
                "cooldown {cooldown} must be non-negative"
            )));
        }
        let mut state = FilterState::default();
        let mut main = Vec::with_capacity(accels.len());
        for (&u, &dt) in accels.iter().zip(time_steps) {
            main.push(state.step(&self.discretize_unchecked(dt), u));
        }
        let (count, tail_dt) = tail_steps(cooldown, time_steps);
        let mut tail = Vec::with_capacity(count);
        if count > 0 {
            let disc = self.discretize_unchecked(tail_dt);
            for _ in 0..count {
                tail.push(state.step(&disc, 0.0));
            }
        }
        Ok(FilteredSequence {
            main,
            main_time_steps: time_steps.to_vec(),
            tail,
            tail_time_step: tail_dt,
        })
    }
}

/// Number and length of the cooldown steps: the step count is
/// `ceil(cooldown / mean Δt)` and the steps are stretched to span the
/// cooldown exactly.
pub(crate) fn tail_steps(cooldown: f64, time_steps: &[f64]) -> (usize, f64) {
    if cooldown <= 0.0 || time_steps.is_empty() {
        return (0, 0.0);
    }
    let mean = time_steps.iter().sum::<f64>() / time_steps.len() as f64;
    let count = (math::ceil(cooldown / mean - 1e-9) as usize).max(1);
    (count, cooldown / count as f64)
}

/// Internal state of one filter channel. Starts at zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FilterState {
    pub state: Vec2,
    pub last_output: f64,
}

impl FilterState {
    /// Emits `C x_k`, then advances to `x_{k+1} = A_d x_k + B_d u_k`.
    #[inline]
    pub fn step(&mut self, disc: &Discrete, input: f64) -> f64 {
        let y = self.state[0];
        let x = mat_vec(&disc.ad, &self.state);
        self.state = [x[0] + disc.bd[0] * input, x[1] + disc.bd[1] * input];
        self.last_output = y;
        y
    }
}

/// Output of [`SicknessFilter::filter_sequence`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredSequence {
    pub main: Vec<f64>,
    pub main_time_steps: Vec<f64>,
    pub tail: Vec<f64>,
    pub tail_time_step: f64,
}

impl FilteredSequence {
    /// `Σ y² Δt` over the main part and the cooldown tail.
    pub fn energy(&self) -> f64 {
        let main: f64 = self
            .main
            .iter()
            .zip(&self.main_time_steps)
            .map(|(y, dt)| y * y * dt)
            .sum();
        let tail: f64 = self.tail.iter().map(|y| y * y).sum::<f64>() * self.tail_time_step;
        main + tail
    }
}
