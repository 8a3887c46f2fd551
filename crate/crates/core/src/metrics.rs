//! Run-versus-plan comparison statistics.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::filter::{FilterSettings, SicknessFilter};
use crate::kinematics::MotionProfile;
use crate::objectives::{comfort_ma, comfort_ms, Variant};
use crate::{Error, Result};

/// Largest travel-time difference for which two runs count as time-matched, seconds.
pub const TIME_MATCH_LIMIT: f64 = 1.0;

/// Default multiples of the planner frontier for iso-discomfort contours.
pub const DEFAULT_CONTOUR_FACTORS: [f64; 4] = [1.1, 1.2, 1.5, 2.0];

/// Excess of `human` over `planner` in percent of `planner`.
pub fn deficiency_percent(human: f64, planner: f64) -> f64 {
    (human - planner) / planner * 100.0
}

/// Comfort term of `profile` for the given variant.
pub fn comfort_term(profile: &MotionProfile, variant: Variant, filter: &FilterSettings) -> Result<f64> {
    match variant {
        Variant::Ma => Ok(comfort_ma(profile)),
        Variant::Ms => {
            let f = SicknessFilter::new(filter.spec()?)?;
            comfort_ms(profile, &f, filter.cooldown_s)
        }
    }
}

pub fn check_time_matched(human: &MotionProfile, planner: &MotionProfile) -> Result<()> {
    let difference = (human.total_time() - planner.total_time()).abs();
    if difference > TIME_MATCH_LIMIT {
        return Err(Error::Comparability {
            difference,
            limit: TIME_MATCH_LIMIT,
        });
    }
    Ok(())
}

/// Deficiency of a recorded run against a time-matched plan, percent.
pub fn deficiency(
    human: &MotionProfile,
    planner: &MotionProfile,
    variant: Variant,
    filter: &FilterSettings,
) -> Result<f64> {
    check_time_matched(human, planner)?;
    let h = comfort_term(human, variant, filter)?;
    let p = comfort_term(planner, variant, filter)?;
    Ok(deficiency_percent(h, p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub travel_time_human: f64,
    pub travel_time_planner: f64,
    pub energy_human: f64,
    pub energy_planner: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_time_planner_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighted_energy_human: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighted_energy_planner: Option<f64>,
    pub deficiency_ma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deficiency_ms: Option<f64>,
}

impl ComparisonReport {
    /// Builds the report from a human run, its time-matched MA plan and, when
    /// present, its time-matched MS plan.
    pub fn build(
        human: &MotionProfile,
        ma_plan: &MotionProfile,
        ms_plan: Option<&MotionProfile>,
        filter: &FilterSettings,
    ) -> Result<Self> {
        check_time_matched(human, ma_plan)?;
        let energy_human = comfort_ma(human);
        let energy_planner = comfort_ma(ma_plan);
        let mut report = Self {
            travel_time_human: human.total_time(),
            travel_time_planner: ma_plan.total_time(),
            energy_human,
            energy_planner,
            travel_time_planner_ms: None,
            weighted_energy_human: None,
            weighted_energy_planner: None,
            deficiency_ma: deficiency_percent(energy_human, energy_planner),
            deficiency_ms: None,
        };
        if let Some(ms) = ms_plan {
            check_time_matched(human, ms)?;
            let h = comfort_term(human, Variant::Ms, filter)?;
            let p = comfort_term(ms, Variant::Ms, filter)?;
            report.travel_time_planner_ms = Some(ms.total_time());
            report.weighted_energy_human = Some(h);
            report.weighted_energy_planner = Some(p);
            report.deficiency_ms = Some(deficiency_percent(h, p));
        }
        Ok(report)
    }
}

/// One-sided power spectral density on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Hz, increasing from 0.
    pub frequencies: Vec<f64>,
    /// (m/s²)²/Hz.
    pub density: Vec<f64>,
}

impl Spectrum {
    /// Trapezoidal integral of the density over the whole grid.
    pub fn total_power(&self) -> f64 {
        self.frequencies
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(f, p)| 0.5 * (p[0] + p[1]) * (f[1] - f[0]))
            .sum()
    }

    /// Trapezoidal integral of the density over `[f_lo, f_hi]`, with the
    /// density interpolated linearly at the band edges.
    pub fn band_energy(&self, f_lo: f64, f_hi: f64) -> Result<f64> {
        let f = &self.frequencies;
        let p = &self.density;
        if f.len() < 2 || f.len() != p.len() {
            return Err(Error::Domain("spectrum needs at least two bins".into()));
        }
        let (first, last) = (f[0], f[f.len() - 1]);
        let eps = 1e-9 * last.abs().max(1.0);
        if !(f_lo < f_hi) || f_lo < first - eps || f_hi > last + eps {
            return Err(Error::Domain(alloc::format!(
                "band [{f_lo}, {f_hi}] is outside the grid [{first}, {last}]"
            )));
        }
        let (f_lo, f_hi) = (f_lo.max(first), f_hi.min(last));
        let at = |x: f64, i: usize| p[i] + (p[i + 1] - p[i]) * (x - f[i]) / (f[i + 1] - f[i]);
        let mut total = 0.0;
        for i in 0..f.len() - 1 {
            let (a, b) = (f[i].max(f_lo), f[i + 1].min(f_hi));
            if b <= a {
                continue;
            }
            let (pa, pb) = if a == f[i] && b == f[i + 1] {
                (p[i], p[i + 1])
            } else {
                (at(a, i), at(b, i))
            };
            total += 0.5 * (pa + pb) * (b - a);
        }
        Ok(total)
    }

    pub fn peak_frequency(&self) -> Option<f64> {
        self.density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| self.frequencies[i])
    }
}

/// A point on an iso-discomfort contour: `factor` times the planner frontier
/// comfort at `travel_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub factor: f64,
    pub travel_time: f64,
    pub comfort: f64,
}

/// Scales a `(travel_time, comfort)` frontier by each factor. The frontier is
/// sorted by travel time first.
pub fn iso_discomfort_contours(frontier: &[(f64, f64)], factors: &[f64]) -> Vec<ContourPoint> {
    let mut sorted = frontier.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    factors
        .iter()
        .flat_map(|&factor| {
            sorted.iter().map(move |&(t, c)| ContourPoint {
                factor,
                travel_time: t,
                comfort: factor * c,
            })
        })
        .collect()
}

/// Reduction of `reconstructed` relative to `raw`, percent.
pub fn energy_reduction_percent(raw: f64, reconstructed: f64) -> f64 {
    (raw - reconstructed) / raw * 100.0
}
