//! File formats, spectral estimates, synthetic inputs and the command-line
//! tool around [`comfortplan_core`].
//!
//! | file | format |
//! |------|--------|
//! | route | JSON `{"name", "stations": [{"x", "y", "lateral_axis_angle"?, "y_min", "y_max", "v_min", "v_max"}]}` |
//! | profile | CSV `t,x,y,v,ax,ay`, one row per waypoint, 9 significant digits |
//! | GPS log | CSV `t,x,y,valid` |
//! | IMU log | CSV `t,ax,ay` |
//! | outages | JSON list of `{"t_start", "t_end"}` |
//! | config | JSON [`config::RunConfig`] |

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod psd;
pub mod synth;

pub use comfortplan_core as core;
pub use config::RunConfig;
pub use error::{AppError, Result};
