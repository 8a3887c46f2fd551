//! Box-constrained limited-memory quasi-Newton minimizer.
//!
//! Each iteration fixes the variables that sit on a bound with the gradient
//! pushing outward, builds the L-BFGS direction on the remaining free
//! variables with the two-loop recursion, and backtracks along the projected
//! path `P(x + α d)` until the Armijo condition holds. If the quasi-Newton
//! direction is not a descent direction the memory is dropped and the
//! projected steepest-descent direction is used instead.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSettings {
    /// Stop when the projected gradient's infinity norm drops below this.
    pub gradient_tolerance: f64,
    /// Stop after this many consecutive iterations with relative decrease
    /// below `relative_decrease`.
    pub stall_iterations: usize,
    pub relative_decrease: f64,
    pub max_iterations: usize,
    pub memory: usize,
}

impl Default for BoxSettings {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-6,
            stall_iterations: 5,
            relative_decrease: 1e-10,
            max_iterations: 3000,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxMinimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub projected_gradient_norm: f64,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*l, *u);
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((&xi, &gi), (&l, &u))| (xi - (xi - gi).clamp(l, u)).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` over the box `[lower, upper]`.
///
/// `f(x, grad)` writes the gradient into `grad` and returns the value, or an
/// error for points outside its domain; such points are treated as infinitely
/// bad by the line search.
pub fn minimize_box<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    settings: &BoxSettings,
) -> Result<BoxMinimum>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    let n = x0.len();
    if lower.len() != n || upper.len() != n {
        return Err(Error::Dimension {
            what: "bounds",
            expected: n,
            found: lower.len().min(upper.len()),
        });
    }
    if let Some(i) = (0..n).find(|&i| !(lower[i] <= upper[i])) {
        return Err(Error::Validation(alloc::format!(
            "bound {i} is empty: [{}, {}]",
            lower[i],
            upper[i]
        )));
    }
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g)?;
    let mut evaluations = 1;
    if !fx.is_finite() {
        return Err(Error::Optimizer("objective is not finite at the start point".into()));
    }

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut free = vec![false; n];
    let mut stalled = 0;
    let mut iterations = 0;
    let mut converged = false;
    let mut pg_norm = projected_gradient_norm(&x, &g, lower, upper);

    while iterations < settings.max_iterations {
        if pg_norm < settings.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        for i in 0..n {
            let at_lower = x[i] <= lower[i] && g[i] > 0.0;
            let at_upper = x[i] >= upper[i] && g[i] < 0.0;
            free[i] = lower[i] < upper[i] && !at_lower && !at_upper;
        }

        // two-loop recursion restricted to the free variables
        for i in 0..n {
            d[i] = if free[i] { -g[i] } else { 0.0 };
        }
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y) in memory.iter().rev() {
            let sy: f64 = (0..n).filter(|&i| free[i]).map(|i| s[i] * y[i]).sum();
            if sy <= 0.0 {
                alphas.push(0.0);
                continue;
            }
            let a = (0..n).filter(|&i| free[i]).map(|i| s[i] * d[i]).sum::<f64>() / sy;
            for i in 0..n {
                if free[i] {
                    d[i] -= a * y[i];
                }
            }
            alphas.push(a);
        }
        if let Some((s, y)) = memory.back() {
            let sy: f64 = (0..n).filter(|&i| free[i]).map(|i| s[i] * y[i]).sum();
            let yy: f64 = (0..n).filter(|&i| free[i]).map(|i| y[i] * y[i]).sum();
            if sy > 0.0 && yy > 0.0 {
                let gamma = sy / yy;
                d.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for ((s, y), a) in memory.iter().zip(alphas.iter().rev()) {
            let sy: f64 = (0..n).filter(|&i| free[i]).map(|i| s[i] * y[i]).sum();
            if sy <= 0.0 {
                continue;
            }
            let b = (0..n).filter(|&i| free[i]).map(|i| y[i] * d[i]).sum::<f64>() / sy;
            for i in 0..n {
                if free[i] {
                    d[i] += s[i] * (a - b);
                }
            }
        }

        let mut steepest = memory.is_empty();
        if dot(&d, &g) >= 0.0 {
            memory.clear();
            steepest = true;
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
        }

        let mut accepted = None;
        for attempt in 0..2 {
            let mut alpha = if steepest {
                let dn = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                (1.0 / dn.max(1e-12)).min(1.0)
            } else {
                1.0
            };
            for _ in 0..40 {
                for i in 0..n {
                    x_new[i] = x[i] + alpha * d[i];
                }
                project(&mut x_new, lower, upper);
                let decrease: f64 = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
                if decrease >= 0.0 {
                    break;
                }
                evaluations += 1;
                if let Ok(v) = f(&x_new, &mut g_new) {
                    if v.is_finite() && v <= fx + 1e-4 * decrease {
                        accepted = Some(v);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if accepted.is_some() || attempt == 1 || steepest {
                break;
            }
            // retry once from the steepest-descent direction
            memory.clear();
            steepest = true;
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
        }

        let Some(f_new) = accepted else {
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 * dot(&y, &y).max(1e-300) {
            if memory.len() == settings.memory {
                memory.pop_front();
            }
            memory.push_back((s, y));
        }

        let rel = (fx - f_new) / fx.abs().max(1.0);
        core::mem::swap(&mut x, &mut x_new);
        core::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        pg_norm = projected_gradient_norm(&x, &g, lower, upper);
        if rel < settings.relative_decrease {
            stalled += 1;
            if stalled >= settings.stall_iterations {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    if pg_norm < settings.gradient_tolerance {
        converged = true;
    }
    Ok(BoxMinimum {
        x,
        value: fx,
        iterations,
        evaluations,
        converged,
        projected_gradient_norm: pg_norm,
    })
}

/// Sparsity of the Hessian used by [`minimize_box_newton`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curvature<'a> {
    /// Every variable may interact with every other one.
    Dense,
    /// Variables `i` and `j` interact only when
    /// `|keys[i] - keys[j]| <= half_bandwidth`.
    Banded {
        keys: &'a [usize],
        half_bandwidth: usize,
    },
}

/// Column groups whose finite-difference gradients can be taken together.
fn column_groups(n: usize, curvature: Curvature<'_>) -> Result<Vec<Vec<usize>>> {
    match curvature {
        Curvature::Dense => Ok((0..n).map(|j| vec![j]).collect()),
        Curvature::Banded {
            keys,
            half_bandwidth,
        } => {
            if keys.len() != n {
                return Err(Error::Dimension {
                    what: "curvature keys",
                    expected: n,
                    found: keys.len(),
                });
            }
            let period = 2 * half_bandwidth + 1;
            let mut seen: Vec<(usize, usize)> = Vec::new();
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut ids: Vec<(usize, usize)> = Vec::new();
            for (j, &k) in keys.iter().enumerate() {
                let rank = match seen.iter_mut().find(|(key, _)| *key == k) {
                    Some((_, r)) => {
                        *r += 1;
                        *r
                    }
                    None => {
                        seen.push((k, 0));
                        0
                    }
                };
                let id = (k % period, rank);
                match ids.iter().position(|g| *g == id) {
                    Some(p) => groups[p].push(j),
                    None => {
                        ids.push(id);
                        groups.push(vec![j]);
                    }
                }
            }
            Ok(groups)
        }
    }
}

/// Minimizes `f` over the box `[lower, upper]` with a projected Newton
/// method.
///
/// The Hessian is formed by finite differences of the analytic gradient,
/// grouping columns according to `curvature`. Variables on an active bound
/// are held fixed; the free block is solved with a Cholesky factorization,
/// adding a multiple of the identity until it is positive definite.
pub fn minimize_box_newton<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    settings: &BoxSettings,
    curvature: Curvature<'_>,
) -> Result<BoxMinimum>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    let n = x0.len();
    if lower.len() != n || upper.len() != n {
        return Err(Error::Dimension {
            what: "bounds",
            expected: n,
            found: lower.len().min(upper.len()),
        });
    }
    if let Some(i) = (0..n).find(|&i| !(lower[i] <= upper[i])) {
        return Err(Error::Validation(alloc::format!(
            "bound {i} is empty: [{}, {}]",
            lower[i],
            upper[i]
        )));
    }
    let groups = column_groups(n, curvature)?;
    let interacts = |i: usize, j: usize| match curvature {
        Curvature::Dense => true,
        Curvature::Banded {
            keys,
            half_bandwidth,
        } => keys[i].abs_diff(keys[j]) <= half_bandwidth,
    };

    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g)?;
    let mut evaluations = 1;
    if !fx.is_finite() {
        return Err(Error::Optimizer("objective is not finite at the start point".into()));
    }

    let mut hess = vec![0.0; n * n];
    let mut xp = vec![0.0; n];
    let mut gp = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut steps = vec![0.0; n];
    let mut mu = 0.0f64;
    let mut stalled = 0;
    let mut iterations = 0;
    let mut converged = false;
    let mut pg_norm = projected_gradient_norm(&x, &g, lower, upper);

    while iterations < settings.max_iterations {
        if pg_norm < settings.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        // Hessian by grouped forward differences of the gradient
        hess.iter_mut().for_each(|v| *v = 0.0);
        for group in &groups {
            xp.copy_from_slice(&x);
            for &j in group {
                let h = 1e-6 * x[j].abs().max(1.0);
                steps[j] = h;
                xp[j] += h;
            }
            evaluations += 1;
            f(&xp, &mut gp)?;
            for &j in group {
                for i in 0..n {
                    if interacts(i, j) {
                        hess[i * n + j] = (gp[i] - g[i]) / steps[j];
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (hess[i * n + j] + hess[j * n + i]);
                hess[i * n + j] = m;
                hess[j * n + i] = m;
            }
        }

        // variables near a bound with the gradient pushing outward are held
        let eps = pg_norm.min(1e-3);
        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                let at_lower = x[i] <= lower[i] + eps && g[i] > 0.0;
                let at_upper = x[i] >= upper[i] - eps && g[i] < 0.0;
                lower[i] < upper[i] && !at_lower && !at_upper
            })
            .collect();
        for i in 0..n {
            let hii = hess[i * n + i];
            d[i] = if hii > 0.0 { -g[i] / hii } else { -g[i] };
        }
        let scale = free
            .iter()
            .map(|&i| hess[i * n + i].abs())
            .fold(0.0f64, f64::max)
            .max(1e-12);

        let mut accepted = None;
        for _ in 0..12 {
            let m = free.len();
            let reduced = nalgebra::DMatrix::from_fn(m, m, |a, b| {
                hess[free[a] * n + free[b]] + if a == b { mu } else { 0.0 }
            });
            let Some(chol) = reduced.cholesky() else {
                mu = (10.0 * mu).max(1e-8 * scale);
                continue;
            };
            let rhs = nalgebra::DVector::from_fn(m, |a, _| -g[free[a]]);
            let step = chol.solve(&rhs);
            for (a, &i) in free.iter().enumerate() {
                d[i] = step[a];
            }
            let mut alpha = 1.0;
            for _ in 0..30 {
                for i in 0..n {
                    x_new[i] = x[i] + alpha * d[i];
                }
                project(&mut x_new, lower, upper);
                let decrease: f64 = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
                if decrease >= 0.0 {
                    break;
                }
                evaluations += 1;
                if let Ok(v) = f(&x_new, &mut g_new) {
                    if v.is_finite() && v <= fx + 1e-4 * decrease {
                        accepted = Some(v);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if accepted.is_some() {
                if alpha == 1.0 {
                    mu *= 0.1;
                    if mu < 1e-14 * scale {
                        mu = 0.0;
                    }
                }
                break;
            }
            mu = (10.0 * mu).max(1e-6 * scale);
        }

        let Some(f_new) = accepted else {
            break;
        };
        let rel = (fx - f_new) / fx.abs().max(1.0);
        core::mem::swap(&mut x, &mut x_new);
        core::mem::swap(&mut g, &mut g_new);
        fx = f_new;
        pg_norm = projected_gradient_norm(&x, &g, lower, upper);
        if rel < settings.relative_decrease {
            stalled += 1;
            if stalled >= settings.stall_iterations {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    if pg_norm < settings.gradient_tolerance {
        converged = true;
    }
    Ok(BoxMinimum {
        x,
        value: fx,
        iterations,
        evaluations,
        converged,
        projected_gradient_norm: pg_norm,
    })
}
