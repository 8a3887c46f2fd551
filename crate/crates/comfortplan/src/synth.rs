//! Synthetic inputs with known ground truth: noisy sensor logs of a winding
//! drive and the scripted human-like roundabout run.

use comfortplan_core::kinematics::evaluate_motion;
use comfortplan_core::reconstruction::{OutageWindow, ReconstructionVariables, SensorLog};
use comfortplan_core::scenario::{human_like_plan, roundabout_route, sensor_log, winding_drive, DriveSpec};
use comfortplan_core::{MotionProfile, RouteCorridor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogSpec {
    pub drive: DriveSpec,
    pub imu_rate_hz: f64,
    pub imu_lag_s: f64,
    pub gps_sigma_m: f64,
    pub imu_sigma: f64,
    /// Start of the GPS outage, seconds; no outage when `outage_length_s` is 0.
    pub outage_start_s: f64,
    pub outage_length_s: f64,
    pub seed: u64,
}

impl Default for LogSpec {
    fn default() -> Self {
        let drive = DriveSpec::default();
        Self {
            drive,
            imu_rate_hz: 100.0,
            imu_lag_s: 0.13,
            gps_sigma_m: 0.3,
            imu_sigma: 0.05,
            outage_start_s: 0.5 * drive.duration - 7.5,
            outage_length_s: 15.0,
            seed: 0,
        }
    }
}

/// A noisy log together with the variables that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLog {
    pub truth: ReconstructionVariables,
    pub log: SensorLog,
}

fn normal(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| AppError::Usage(format!("noise level {sigma}: {e}")))
}

/// Adds white Gaussian noise to every GPS coordinate and IMU axis.
pub fn add_noise(log: &mut SensorLog, gps_sigma: f64, imu_sigma: f64, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (g, a) = (normal(gps_sigma)?, normal(imu_sigma)?);
    for s in &mut log.gps {
        s.x += g.sample(&mut rng);
        s.y += g.sample(&mut rng);
    }
    for s in &mut log.imu {
        s.ax += a.sample(&mut rng);
        s.ay += a.sample(&mut rng);
    }
    Ok(())
}

pub fn synthetic_log(spec: &LogSpec) -> Result<SyntheticLog> {
    let truth = winding_drive(&spec.drive);
    let outages = if spec.outage_length_s > 0.0 {
        vec![OutageWindow {
            t_start: spec.outage_start_s,
            t_end: spec.outage_start_s + spec.outage_length_s,
        }]
    } else {
        Vec::new()
    };
    let mut log = sensor_log(&truth, spec.drive.sample_time, spec.imu_rate_hz, spec.imu_lag_s, outages)?;
    add_noise(&mut log, spec.gps_sigma_m, spec.imu_sigma, spec.seed)?;
    Ok(SyntheticLog { truth, log })
}

/// The two-roundabout route and the scripted human-like run on it.
pub fn roundabout_run() -> Result<(RouteCorridor, MotionProfile)> {
    let route = roundabout_route()?;
    let profile = evaluate_motion(&route, &human_like_plan(&route))?;
    Ok((route, profile))
}
