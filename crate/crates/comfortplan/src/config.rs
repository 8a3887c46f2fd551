//! Run configuration, read from JSON and embedded in every JSON output.

use std::path::Path;

use comfortplan_core::metrics::DEFAULT_CONTOUR_FACTORS;
use comfortplan_core::planner::MatchSettings;
use comfortplan_core::reconstruction::{AlignSettings, ReconstructSettings, WeightSchedule, MIN_RUN_SPEED};
use comfortplan_core::{ObjectiveConfig, SolverSettings, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::psd::WelchSettings;

/// Every tunable of the pipeline. Missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub objective: ObjectiveConfig,
    pub solver: SolverSettings,
    pub matching: MatchSettings,
    pub weights: WeightSchedule,
    pub reconstruction: ReconstructSettings,
    pub alignment: AlignSettings,
    pub psd: WelchSettings,
    pub min_run_speed: f64,
    pub contour_factors: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            objective: ObjectiveConfig::new(Variant::Ma, 1.0),
            solver: SolverSettings::default(),
            matching: MatchSettings::default(),
            weights: WeightSchedule::default(),
            reconstruction: ReconstructSettings::default(),
            alignment: AlignSettings::default(),
            psd: WelchSettings::default(),
            min_run_speed: MIN_RUN_SPEED,
            contour_factors: DEFAULT_CONTOUR_FACTORS.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        // the comparison report uses the filter whatever the plan objective
        self.objective.filter.validate()?;
        self.weights.validate()?;
        self.psd.validate()?;
        if !(self.min_run_speed >= 0.0 && self.min_run_speed.is_finite()) {
            return Err(AppError::Usage(format!(
                "min_run_speed {} must be non-negative",
                self.min_run_speed
            )));
        }
        if self.contour_factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(AppError::Usage("contour factors must be positive".into()));
        }
        Ok(())
    }
}
