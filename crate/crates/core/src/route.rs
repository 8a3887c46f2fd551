//! Lane corridor and planner decision variables.
//!
//! A [`RouteCorridor`] is an ordered list of [`Station`]s along the lane center.
//! Each station carries the direction of its local lateral axis and the box
//! bounds on the lateral offset and speed of the waypoint attached to it.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;
use crate::{Error, Result};

/// Minimum distance between consecutive station centers, meters.
pub const MIN_STATION_SPACING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        math::hypot(other.x - self.x, other.y - self.y)
    }
}

/// One station of the corridor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub center: Point,
    /// Direction of the local lateral axis in radians (perpendicular to the lane).
    pub lateral_axis_angle: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Station {
    /// Unit vector of the lateral axis.
    pub fn lateral_axis(&self) -> (f64, f64) {
        (
            math::cos(self.lateral_axis_angle),
            math::sin(self.lateral_axis_angle),
        )
    }

    /// Waypoint displaced by `offset` meters along the lateral axis.
    pub fn waypoint(&self, offset: f64) -> Point {
        let (nx, ny) = self.lateral_axis();
        Point::new(self.center.x + offset * nx, self.center.y + offset * ny)
    }

    fn check(&self, index: usize) -> Result<()> {
        let fail = |message: String| Err(Error::Station { index, message });
        let values = [
            self.center.x,
            self.center.y,
            self.lateral_axis_angle,
            self.y_min,
            self.y_max,
            self.v_min,
            self.v_max,
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return fail("non-finite field".into());
        }
        if self.y_min > self.y_max {
            return fail(format!("y_min {} > y_max {}", self.y_min, self.y_max));
        }
        if self.y_min > 0.0 || self.y_max < 0.0 {
            return fail(format!(
                "lane center must be admissible (y_min {} <= 0 <= y_max {})",
                self.y_min, self.y_max
            ));
        }
        if self.v_min < 0.0 {
            return fail(format!("v_min {} < 0", self.v_min));
        }
        if self.v_min >= self.v_max {
            return fail(format!("v_min {} >= v_max {}", self.v_min, self.v_max));
        }
        Ok(())
    }
}

/// Validated corridor. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteCorridor {
    name: String,
    stations: Vec<Station>,
}

impl RouteCorridor {
    pub fn new(name: impl Into<String>, stations: Vec<Station>) -> Result<Self> {
        if stations.len() < 3 {
            return Err(Error::Validation(format!(
                "a corridor needs at least 3 stations, got {}",
                stations.len()
            )));
        }
        for (i, s) in stations.iter().enumerate() {
            s.check(i)?;
        }
        for i in 1..stations.len() {
            let (a, b) = (stations[i - 1].center, stations[i].center);
            let spacing = a.distance(b);
            if spacing <= MIN_STATION_SPACING {
                return Err(Error::Station {
                    index: i,
                    message: format!("spacing {spacing} m to previous station is too small"),
                });
            }
            if i >= 2 {
                let p = stations[i - 2].center;
                let proj = (a.x - p.x) * (b.x - a.x) + (a.y - p.y) * (b.y - a.y);
                if proj <= 0.0 {
                    return Err(Error::Station {
                        index: i,
                        message: "station ordering reverses the driving direction".into(),
                    });
                }
            }
        }
        Ok(Self {
            name: name.into(),
            stations,
        })
    }

    /// Builds a corridor from center points with uniform bounds, deriving the
    /// lateral axes with [`lateral_axis_angles`].
    pub fn from_centers(
        name: impl Into<String>,
        centers: &[Point],
        lateral: (f64, f64),
        speed: (f64, f64),
    ) -> Result<Self> {
        let angles = lateral_axis_angles(centers);
        let stations = centers
            .iter()
            .zip(angles)
            .map(|(&center, lateral_axis_angle)| Station {
                center,
                lateral_axis_angle,
                y_min: lateral.0,
                y_max: lateral.1,
                v_min: speed.0,
                v_max: speed.1,
            })
            .collect();
        Self::new(name, stations)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn centers(&self) -> Vec<Point> {
        self.stations.iter().map(|s| s.center).collect()
    }

    /// Length of the lane-center polyline.
    pub fn center_length(&self) -> f64 {
        self.stations
            .windows(2)
            .map(|w| w[0].center.distance(w[1].center))
            .sum()
    }

    /// Returns a copy with every station's bounds replaced by `f`.
    pub fn map_stations(&self, f: impl Fn(usize, Station) -> Station) -> Result<Self> {
        let stations = self
            .stations
            .iter()
            .enumerate()
            .map(|(i, s)| f(i, *s))
            .collect();
        Self::new(self.name.clone(), stations)
    }
}

/// Lateral-axis direction of each center point: the left normal of the
/// centered finite-difference tangent (one-sided at the ends).
pub fn lateral_axis_angles(centers: &[Point]) -> Vec<f64> {
    let n = centers.len();
    (0..n)
        .map(|k| {
            let a = centers[k.saturating_sub(1)];
            let b = centers[(k + 1).min(n.saturating_sub(1))];
            math::atan2(b.y - a.y, b.x - a.x) + core::f64::consts::FRAC_PI_2
        })
        .collect()
}

/// Planner decision vector: one lateral offset and one speed per station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPlan {
    pub lateral_offsets: Vec<f64>,
    pub speeds: Vec<f64>,
}

impl MotionPlan {
    pub fn new(lateral_offsets: Vec<f64>, speeds: Vec<f64>) -> Result<Self> {
        if lateral_offsets.len() != speeds.len() {
            return Err(Error::Dimension {
                what: "plan speeds",
                expected: lateral_offsets.len(),
                found: speeds.len(),
            });
        }
        Ok(Self {
            lateral_offsets,
            speeds,
        })
    }

    /// Lane-center plan at the given speeds.
    pub fn centered(speeds: Vec<f64>) -> Self {
        Self {
            lateral_offsets: alloc::vec![0.0; speeds.len()],
            speeds,
        }
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    fn check_len(&self, corridor: &RouteCorridor) -> Result<()> {
        for (what, found) in [
            ("plan lateral offsets", self.lateral_offsets.len()),
            ("plan speeds", self.speeds.len()),
        ] {
            if found != corridor.len() {
                return Err(Error::Dimension {
                    what,
                    expected: corridor.len(),
                    found,
                });
            }
        }
        Ok(())
    }

    /// Checks the box bounds of every station.
    pub fn validate(&self, corridor: &RouteCorridor) -> Result<()> {
        self.check_len(corridor)?;
        for (k, s) in corridor.stations().iter().enumerate() {
            let (y, v) = (self.lateral_offsets[k], self.speeds[k]);
            if !(s.y_min..=s.y_max).contains(&y) {
                return Err(Error::Station {
                    index: k,
                    message: format!("lateral offset {y} outside [{}, {}]", s.y_min, s.y_max),
                });
            }
            if !(s.v_min..=s.v_max).contains(&v) {
                return Err(Error::Station {
                    index: k,
                    message: format!("speed {v} outside [{}, {}]", s.v_min, s.v_max),
                });
            }
        }
        Ok(())
    }

    /// Projects the plan onto the corridor bounds.
    pub fn clamp_to(&self, corridor: &RouteCorridor) -> Result<Self> {
        self.check_len(corridor)?;
        let stations = corridor.stations();
        Ok(Self {
            lateral_offsets: self
                .lateral_offsets
                .iter()
                .zip(stations)
                .map(|(&y, s)| y.clamp(s.y_min, s.y_max))
                .collect(),
            speeds: self
                .speeds
                .iter()
                .zip(stations)
                .map(|(&v, s)| v.clamp(s.v_min, s.v_max))
                .collect(),
        })
    }
}

/// Waypoint `k` is station center `k` moved by `lateral_offsets[k]` along its lateral axis.
pub fn waypoints_to_cartesian(corridor: &RouteCorridor, plan: &MotionPlan) -> Result<Vec<Point>> {
    plan.check_len(corridor)?;
    Ok(corridor
        .stations()
        .iter()
        .zip(&plan.lateral_offsets)
        .map(|(s, &y)| s.waypoint(y))
        .collect())
}
