//! Planner objectives: acceleration energy (MA), frequency-weighted
//! acceleration energy with cooldown (MS), and `comfort + W · travel_time`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::filter::{mat_t_vec, mat_vec, tail_steps, Discrete, FilterSettings, SicknessFilter};
use crate::kinematics::{evaluate_path, path_adjoint, MotionProfile};
use crate::route::{MotionPlan, Point, RouteCorridor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Raw longitudinal and lateral acceleration energy.
    Ma,
    /// Band-pass weighted acceleration energy including the cooldown tail.
    Ms,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Ma => "ma",
            Variant::Ms => "ms",
        }
    }
}

impl core::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ma" => Ok(Variant::Ma),
            "ms" => Ok(Variant::Ms),
            other => Err(Error::Validation(alloc::format!(
                "unknown objective variant {other:?} (expected ma or ms)"
            ))),
        }
    }
}

/// `time_weight` is in m²/s³ per second of travel, so both addends of the
/// planner cost are in m²/s³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveConfig {
    pub variant: Variant,
    pub time_weight: f64,
    pub filter: FilterSettings,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self::new(Variant::Ma, 1.0)
    }
}

impl ObjectiveConfig {
    pub fn new(variant: Variant, time_weight: f64) -> Self {
        Self {
            variant,
            time_weight,
            filter: FilterSettings::default(),
        }
    }

    pub fn with_time_weight(mut self, w: f64) -> Self {
        self.time_weight = w;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_weight >= 0.0 && self.time_weight.is_finite()) {
            return Err(Error::Validation(alloc::format!(
                "time weight {} must be non-negative",
                self.time_weight
            )));
        }
        if self.variant == Variant::Ms {
            self.filter.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub comfort: f64,
    pub travel_time: f64,
    pub cost: f64,
}

/// `Σ (ax² + ay²) Δt` over all segments.
pub fn comfort_ma(profile: &MotionProfile) -> f64 {
    profile
        .ax()
        .iter()
        .zip(profile.ay())
        .zip(profile.segment_time_steps())
        .map(|((ax, ay), dt)| (ax * ax + ay * ay) * dt)
        .sum()
}

/// Frequency-weighted energy of both axes, main part plus cooldown tail.
pub fn comfort_ms(profile: &MotionProfile, filter: &SicknessFilter, cooldown: f64) -> Result<f64> {
    let x = filter.filter_sequence(profile.ax(), profile.segment_time_steps(), cooldown)?;
    let y = filter.filter_sequence(profile.ay(), profile.segment_time_steps(), cooldown)?;
    Ok(x.energy() + y.energy())
}

/// Comfort term for the configured variant plus `W · total_time`.
pub fn planner_cost(profile: &MotionProfile, config: &ObjectiveConfig) -> Result<CostBreakdown> {
    config.validate()?;
    let comfort = match config.variant {
        Variant::Ma => comfort_ma(profile),
        Variant::Ms => {
            let filter = SicknessFilter::new(config.filter.spec()?)?;
            comfort_ms(profile, &filter, config.filter.cooldown_s)?
        }
    };
    let travel_time = profile.total_time();
    Ok(CostBreakdown {
        comfort,
        travel_time,
        cost: comfort + config.time_weight * travel_time,
    })
}

/// Gradient of the two-channel weighted energy with respect to the
/// per-segment inputs and time steps.
struct WeightedEnergy {
    energy: f64,
    g_ax: Vec<f64>,
    g_ay: Vec<f64>,
    g_dt: Vec<f64>,
}

fn weighted_energy_adjoint(
    filter: &SicknessFilter,
    ax: &[f64],
    ay: &[f64],
    dt: &[f64],
    cooldown: f64,
) -> WeightedEnergy {
    let m = dt.len();
    let disc: Vec<Discrete> = dt.iter().map(|&h| filter.discretize_unchecked(h)).collect();
    let (tail_count, tail_dt) = tail_steps(cooldown, dt);
    let tail = (tail_count > 0).then(|| filter.discretize_unchecked(tail_dt));

    let mut out = WeightedEnergy {
        energy: 0.0,
        g_ax: vec![0.0; m],
        g_ay: vec![0.0; m],
        g_dt: vec![0.0; m],
    };
    let mut states = vec![[0.0; 2]; m + 1];
    for (u, g_u) in [(ax, 0usize), (ay, 1)] {
        // forward
        for k in 0..m {
            let x = mat_vec(&disc[k].ad, &states[k]);
            states[k + 1] = [x[0] + disc[k].bd[0] * u[k], x[1] + disc[k].bd[1] * u[k]];
            out.energy += states[k][0] * states[k][0] * dt[k];
        }
        // cooldown: accumulate the energy forward, the adjoint backward
        let mut lambda = [0.0; 2];
        if let Some(td) = &tail {
            let mut tail_states = Vec::with_capacity(tail_count);
            let mut z = states[m];
            for _ in 0..tail_count {
                tail_states.push(z);
                out.energy += z[0] * z[0] * tail_dt;
                z = mat_vec(&td.ad, &z);
            }
            for z in tail_states.iter().rev() {
                lambda = mat_t_vec(&td.ad, &lambda);
                lambda[0] += 2.0 * tail_dt * z[0];
            }
        }
        // backward through the main sequence; `lambda` holds ∂E/∂x_{k+1}
        let g_u_vec = if g_u == 0 { &mut out.g_ax } else { &mut out.g_ay };
        for k in (0..m).rev() {
            let x = &states[k];
            let d = &disc[k];
            g_u_vec[k] = d.bd[0] * lambda[0] + d.bd[1] * lambda[1];
            // ∂x_{k+1}/∂Δt = A_d (A x_k + B u_k)
            let dx = mat_vec(&d.ad, &filter.derivative(x, u[k]));
            out.g_dt[k] += x[0] * x[0] + lambda[0] * dx[0] + lambda[1] * dx[1];
            let mut next = mat_t_vec(&d.ad, &lambda);
            next[0] += 2.0 * x[0] * dt[k];
            lambda = next;
        }
    }
    out
}

/// The planner objective over a fixed corridor, as a function of the
/// flattened decision vector `[y_1 … y_N, v_1 … v_N]`.
#[derive(Debug, Clone)]
pub struct PlanObjective<'a> {
    corridor: &'a RouteCorridor,
    config: ObjectiveConfig,
    filter: Option<SicknessFilter>,
}

impl<'a> PlanObjective<'a> {
    pub fn new(corridor: &'a RouteCorridor, config: ObjectiveConfig) -> Result<Self> {
        config.validate()?;
        let filter = match config.variant {
            Variant::Ma => None,
            Variant::Ms => Some(SicknessFilter::new(config.filter.spec()?)?),
        };
        Ok(Self {
            corridor,
            config,
            filter,
        })
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.config
    }

    pub fn corridor(&self) -> &RouteCorridor {
        self.corridor
    }

    pub fn dimension(&self) -> usize {
        2 * self.corridor.len()
    }

    pub fn plan_from(&self, x: &[f64]) -> MotionPlan {
        let n = self.corridor.len();
        MotionPlan {
            lateral_offsets: x[..n].to_vec(),
            speeds: x[n..].to_vec(),
        }
    }

    fn points(&self, offsets: &[f64]) -> Vec<Point> {
        self.corridor
            .stations()
            .iter()
            .zip(offsets)
            .map(|(s, &y)| s.waypoint(y))
            .collect()
    }

    pub fn breakdown(&self, profile: &MotionProfile) -> Result<CostBreakdown> {
        let comfort = match &self.filter {
            None => comfort_ma(profile),
            Some(f) => comfort_ms(profile, f, self.config.filter.cooldown_s)?,
        };
        let travel_time = profile.total_time();
        Ok(CostBreakdown {
            comfort,
            travel_time,
            cost: comfort + self.config.time_weight * travel_time,
        })
    }

    pub fn evaluate(&self, plan: &MotionPlan) -> Result<(MotionProfile, CostBreakdown)> {
        let profile = crate::kinematics::evaluate_motion(self.corridor, plan)?;
        let cost = self.breakdown(&profile)?;
        Ok((profile, cost))
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let n = self.corridor.len();
        let profile = evaluate_path(&self.points(&x[..n]), &x[n..])?;
        Ok(self.breakdown(&profile)?.cost)
    }

    /// Cost and its gradient with respect to `x`.
    pub fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let n = self.corridor.len();
        if x.len() != 2 * n || grad.len() != 2 * n {
            return Err(Error::Dimension {
                what: "decision vector",
                expected: 2 * n,
                found: x.len().min(grad.len()),
            });
        }
        let points = self.points(&x[..n]);
        let speeds = &x[n..];
        let profile = evaluate_path(&points, speeds)?;
        let w = self.config.time_weight;
        let dt = profile.segment_time_steps();
        let (ax, ay) = (profile.ax(), profile.ay());
        let (value, g_ax, g_ay, g_dt) = match &self.filter {
            None => {
                let comfort = comfort_ma(&profile);
                let g_ax: Vec<f64> = ax.iter().zip(dt).map(|(a, t)| 2.0 * a * t).collect();
                let g_ay: Vec<f64> = ay.iter().zip(dt).map(|(a, t)| 2.0 * a * t).collect();
                let g_dt: Vec<f64> = ax.iter().zip(ay).map(|(a, b)| a * a + b * b + w).collect();
                (comfort, g_ax, g_ay, g_dt)
            }
            Some(f) => {
                let mut e = weighted_energy_adjoint(f, ax, ay, dt, self.config.filter.cooldown_s);
                e.g_dt.iter_mut().for_each(|g| *g += w);
                (e.energy, e.g_ax, e.g_ay, e.g_dt)
            }
        };
        let (g_p, g_v) = path_adjoint(&points, speeds, &profile, &g_ax, &g_ay, &g_dt)?;
        for (k, s) in self.corridor.stations().iter().enumerate() {
            let (nx, ny) = s.lateral_axis();
            grad[k] = g_p[k].0 * nx + g_p[k].1 * ny;
            grad[n + k] = g_v[k];
        }
        Ok(value + w * profile.total_time())
    }
}
