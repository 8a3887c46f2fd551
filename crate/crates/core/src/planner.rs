//! Comfort-optimal planning over a corridor.
//!
//! The decision vector is `[y_1 … y_N, v_1 … v_N]` with box bounds from the
//! corridor; the first speed is pinned to the initial speed by collapsing its
//! bounds. [`solve_plan`] runs the box-constrained quasi-Newton solver from
//! [`initialize_guess`] plus a few seeded perturbed restarts and keeps the best.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::kinematics::{heading_change, MotionProfile};
use crate::math;
use crate::objectives::{ObjectiveConfig, PlanObjective};
use crate::objectives::Variant;
use crate::optim::{minimize_box, minimize_box_newton, BoxMinimum, BoxSettings, Curvature};
use crate::route::{MotionPlan, RouteCorridor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Projected-gradient infinity-norm tolerance.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Perturbed restarts in addition to the initial guess.
    pub restarts: usize,
    pub seed: u64,
    pub memory: usize,
    /// Lateral acceleration used to pick initial curve speeds, m/s².
    pub lateral_accel_ref: f64,
    /// Curvature floor in the initial guess, 1/m.
    pub curvature_floor: f64,
    /// Lower speed bound applied on top of the corridor's `v_min`, m/s.
    pub speed_floor: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 3000,
            restarts: 3,
            seed: 0,
            memory: 10,
            lateral_accel_ref: 2.0,
            curvature_floor: 1e-6,
            speed_floor: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanProblem {
    pub corridor: RouteCorridor,
    pub objective: ObjectiveConfig,
    pub initial_speed: f64,
    pub settings: SolverSettings,
}

impl PlanProblem {
    pub fn new(
        corridor: RouteCorridor,
        objective: ObjectiveConfig,
        initial_speed: f64,
        settings: SolverSettings,
    ) -> Result<Self> {
        let problem = Self {
            corridor,
            objective,
            initial_speed,
            settings,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        let s = &self.corridor.stations()[0];
        let lo = s.v_min.max(self.settings.speed_floor);
        if !(self.initial_speed >= lo && self.initial_speed <= s.v_max) {
            return Err(Error::Station {
                index: 0,
                message: alloc::format!(
                    "initial speed {} outside [{}, {}]",
                    self.initial_speed,
                    lo,
                    s.v_max
                ),
            });
        }
        Ok(())
    }

    /// Box bounds on the flattened decision vector.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let stations = self.corridor.stations();
        let n = stations.len();
        let mut lower = Vec::with_capacity(2 * n);
        let mut upper = Vec::with_capacity(2 * n);
        lower.extend(stations.iter().map(|s| s.y_min));
        upper.extend(stations.iter().map(|s| s.y_max));
        for (k, s) in stations.iter().enumerate() {
            if k == 0 {
                lower.push(self.initial_speed);
                upper.push(self.initial_speed);
            } else {
                let lo = s.v_min.max(self.settings.speed_floor).min(s.v_max);
                lower.push(lo);
                upper.push(s.v_max);
            }
        }
        (lower, upper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub plan: MotionPlan,
    pub profile: MotionProfile,
    pub cost: f64,
    pub comfort_term: f64,
    pub travel_time: f64,
    pub time_weight: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Curvature of the lane-center polyline at each station: heading change over
/// the mean length of the adjacent segments, copied outward at the ends.
pub fn center_curvature(corridor: &RouteCorridor) -> Vec<f64> {
    let c = corridor.centers();
    let n = c.len();
    let mut kappa = alloc::vec![0.0; n];
    for k in 1..n - 1 {
        let a = (c[k].x - c[k - 1].x, c[k].y - c[k - 1].y);
        let b = (c[k + 1].x - c[k].x, c[k + 1].y - c[k].y);
        let len = 0.5 * (math::hypot(a.0, a.1) + math::hypot(b.0, b.1));
        kappa[k] = heading_change(a, b) / len;
    }
    kappa[0] = kappa[1];
    kappa[n - 1] = kappa[n - 2];
    kappa
}

/// Lane-center offsets with curvature-limited speeds:
/// `v_k = min(v_max, sqrt(a_ref / max(|κ_k|, ε)))`, clipped to the bounds,
/// with the first speed pinned.
pub fn initialize_guess(problem: &PlanProblem) -> MotionPlan {
    let (lower, upper) = problem.bounds();
    let n = problem.corridor.len();
    let kappa = center_curvature(&problem.corridor);
    let speeds = (0..n)
        .map(|k| {
            let v = math::sqrt(
                problem.settings.lateral_accel_ref
                    / kappa[k].abs().max(problem.settings.curvature_floor),
            );
            v.clamp(lower[n + k], upper[n + k])
        })
        .collect();
    let lateral_offsets = (0..n).map(|k| 0.0f64.clamp(lower[k], upper[k])).collect();
    MotionPlan {
        lateral_offsets,
        speeds,
    }
}

fn flatten(plan: &MotionPlan) -> Vec<f64> {
    let mut x = plan.lateral_offsets.clone();
    x.extend_from_slice(&plan.speeds);
    x
}

/// Solves the planning problem. Non-convergence is reported through
/// [`PlanResult::converged`], never silently.
pub fn solve_plan(problem: &PlanProblem) -> Result<PlanResult> {
    problem.validate()?;
    solve_from(problem, &initialize_guess(problem))
}

/// As [`solve_plan`], starting from `start` instead of the default guess.
pub fn solve_from(problem: &PlanProblem, start: &MotionPlan) -> Result<PlanResult> {
    let objective = PlanObjective::new(&problem.corridor, problem.objective)?;
    let (lower, upper) = problem.bounds();
    let n = problem.corridor.len();
    let box_settings = BoxSettings {
        gradient_tolerance: problem.settings.tolerance,
        max_iterations: problem.settings.max_iterations,
        memory: problem.settings.memory,
        ..BoxSettings::default()
    };
    // The unfiltered objective couples only nearby stations, so its Hessian
    // is banded and cheap to form; the filtered one is handled quasi-Newton.
    let keys: Vec<usize> = (0..n).chain(0..n).collect();
    let run = |x: &[f64]| -> Result<BoxMinimum> {
        let eval = |x: &[f64], g: &mut [f64]| objective.value_and_gradient(x, g);
        match problem.objective.variant {
            Variant::Ma => minimize_box_newton(
                eval,
                x,
                &lower,
                &upper,
                &box_settings,
                Curvature::Banded {
                    keys: &keys,
                    half_bandwidth: 2,
                },
            ),
            Variant::Ms => minimize_box(eval, x, &lower, &upper, &box_settings),
        }
    };

    let mut x0 = flatten(start);
    for i in 0..2 * n {
        x0[i] = x0[i].clamp(lower[i], upper[i]);
    }
    let mut best = run(&x0)?;
    let mut evaluations = best.evaluations;

    let mut rng = ChaCha8Rng::seed_from_u64(problem.settings.seed);
    for _ in 0..problem.settings.restarts {
        let mut x = x0.clone();
        for i in 0..n {
            let half = 0.25 * (upper[i] - lower[i]);
            x[i] = (x[i] + rng.random_range(-1.0..=1.0) * half).clamp(lower[i], upper[i]);
        }
        for i in n..2 * n {
            let v = x[i] * (1.0 + 0.15 * rng.random_range(-1.0..=1.0));
            x[i] = v.clamp(lower[i], upper[i]);
        }
        if objective.value(&x).is_err() {
            continue;
        }
        let attempt = run(&x)?;
        evaluations += attempt.evaluations;
        if attempt.value < best.value {
            best = attempt;
        }
    }

    let plan = objective.plan_from(&best.x);
    let (profile, cost) = objective.evaluate(&plan)?;
    Ok(PlanResult {
        plan,
        profile,
        cost: cost.cost,
        comfort_term: cost.comfort,
        travel_time: cost.travel_time,
        time_weight: problem.objective.time_weight,
        converged: best.converged,
        iterations: best.iterations,
        evaluations,
    })
}

/// Bisection on `log10 W` so that the planned travel time hits a target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchSettings {
    pub time_tolerance: f64,
    pub log_weight_min: f64,
    pub log_weight_max: f64,
    pub max_iterations: usize,
}

impl Default for MatchSettings {
    fn default() -> Self {
        Self {
            time_tolerance: 0.5,
            log_weight_min: -3.0,
            log_weight_max: 3.0,
            max_iterations: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeMatch {
    pub result: PlanResult,
    pub time_weight: f64,
    pub target_time: f64,
    /// Bisection steps, not counting the two bracket solves.
    pub iterations: usize,
    /// False when the bracket was exhausted; `result` is then the closest match.
    pub matched: bool,
}

pub fn match_travel_time(
    corridor: &RouteCorridor,
    objective: ObjectiveConfig,
    initial_speed: f64,
    target_time: f64,
    settings: &SolverSettings,
    matching: &MatchSettings,
) -> Result<TimeMatch> {
    let solve = |log_w: f64| -> Result<PlanResult> {
        let problem = PlanProblem::new(
            corridor.clone(),
            objective.with_time_weight(math::pow10(log_w)),
            initial_speed,
            *settings,
        )?;
        solve_plan(&problem)
    };
    let tol = matching.time_tolerance;
    let (mut lo, mut hi) = (matching.log_weight_min, matching.log_weight_max);
    let slow = solve(lo)?;
    let fast = solve(hi)?;
    if target_time > slow.travel_time + tol || target_time < fast.travel_time - tol {
        return Err(Error::Bracket {
            target: target_time,
            fastest: fast.travel_time,
            slowest: slow.travel_time,
        });
    }
    let done = |r: PlanResult, iterations: usize, matched: bool| TimeMatch {
        time_weight: r.time_weight,
        result: r,
        target_time,
        iterations,
        matched,
    };
    let miss = |r: &PlanResult| (r.travel_time - target_time).abs();
    let mut best = if miss(&slow) <= miss(&fast) { slow } else { fast };
    if miss(&best) <= tol {
        return Ok(done(best, 0, true));
    }
    for it in 1..=matching.max_iterations {
        let mid = 0.5 * (lo + hi);
        let r = solve(mid)?;
        if r.travel_time > target_time {
            lo = mid;
        } else {
            hi = mid;
        }
        if miss(&r) < miss(&best) {
            best = r;
        }
        if miss(&best) <= tol {
            return Ok(done(best, it, true));
        }
    }
    Ok(done(best, matching.max_iterations, false))
}

/// Solves one plan per time weight. Failures stay in their slot.
pub fn sweep(
    corridor: &RouteCorridor,
    objective: ObjectiveConfig,
    initial_speed: f64,
    weights: &[f64],
    settings: &SolverSettings,
) -> Vec<Result<PlanResult>> {
    weights
        .iter()
        .map(|&w| {
            let problem = PlanProblem::new(
                corridor.clone(),
                objective.with_time_weight(w),
                initial_speed,
                *settings,
            )?;
            solve_plan(&problem)
        })
        .collect()
}

/// Flags the `(travel_time, comfort)` points that no other point beats by more
/// than `noise` in one coordinate while being no worse than `noise` in the other.
pub fn non_dominated(points: &[(f64, f64)], noise: f64) -> Vec<bool> {
    points
        .iter()
        .map(|&(t, c)| {
            !points.iter().any(|&(t2, c2)| {
                (t2 < t - noise && c2 <= c + noise) || (c2 < c - noise && t2 <= t + noise)
            })
        })
        .collect()
}
