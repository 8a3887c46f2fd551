//! File formats: route and config JSON, profile and sensor CSV, outage JSON.

use std::fs;
use std::path::Path;

use comfortplan_core::reconstruction::{GpsSample, ImuSample, OutageWindow};
use comfortplan_core::route::lateral_axis_angles;
use comfortplan_core::{MotionProfile, Point, RouteCorridor, Station};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

/// Reads a JSON file; parse errors name the offending field path.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        if field == "." {
            AppError::parse(path, e.inner())
        } else {
            AppError::parse(path, format!("field `{field}`: {}", e.inner()))
        }
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| AppError::parse(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

/// `x` rounded to 9 significant digits, printed in the shortest form that
/// reads back to the rounded value.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    rounded.to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StationRecord {
    x: f64,
    y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lateral_axis_angle: Option<f64>,
    y_min: f64,
    y_max: f64,
    v_min: f64,
    v_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteFile {
    name: String,
    stations: Vec<StationRecord>,
}

/// Loads a route. Stations without `lateral_axis_angle` get the left normal
/// of the centered finite-difference tangent.
pub fn load_route(path: &Path) -> Result<RouteCorridor> {
    let file: RouteFile = read_json(path)?;
    route_from_records(file)
}

fn route_from_records(file: RouteFile) -> Result<RouteCorridor> {
    let centers: Vec<Point> = file.stations.iter().map(|s| Point::new(s.x, s.y)).collect();
    let derived = if file.stations.iter().any(|s| s.lateral_axis_angle.is_none()) && centers.len() >= 2 {
        lateral_axis_angles(&centers)
    } else {
        vec![0.0; centers.len()]
    };
    let stations = file
        .stations
        .iter()
        .zip(derived)
        .map(|(s, angle)| Station {
            center: Point::new(s.x, s.y),
            lateral_axis_angle: s.lateral_axis_angle.unwrap_or(angle),
            y_min: s.y_min,
            y_max: s.y_max,
            v_min: s.v_min,
            v_max: s.v_max,
        })
        .collect();
    Ok(RouteCorridor::new(file.name, stations)?)
}

pub fn save_route(path: &Path, corridor: &RouteCorridor) -> Result<()> {
    let file = RouteFile {
        name: corridor.name().to_string(),
        stations: corridor
            .stations()
            .iter()
            .map(|s| StationRecord {
                x: s.center.x,
                y: s.center.y,
                lateral_axis_angle: Some(s.lateral_axis_angle),
                y_min: s.y_min,
                y_max: s.y_max,
                v_min: s.v_min,
                v_max: s.v_max,
            })
            .collect(),
    };
    write_json(path, &file)
}

/// One row per waypoint: cumulative time, position, speed and the
/// accelerations of the segment that starts there (zero on the last row).
pub fn profile_csv(profile: &MotionProfile) -> String {
    let mut out = String::from("t,x,y,v,ax,ay\n");
    let times = profile.waypoint_times();
    let m = profile.ax().len();
    for (k, (p, v)) in profile.points().iter().zip(profile.speeds()).enumerate() {
        let (ax, ay) = if k < m {
            (profile.ax()[k], profile.ay()[k])
        } else {
            (0.0, 0.0)
        };
        let row = [times[k], p.x, p.y, *v, ax, ay].map(sig9).join(",");
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn save_profile(path: &Path, profile: &MotionProfile) -> Result<()> {
    write_text(path, &profile_csv(profile))
}

#[derive(Debug, Deserialize)]
struct ProfileRow {
    t: f64,
    x: f64,
    y: f64,
    v: f64,
    ax: f64,
    ay: f64,
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    csv_reader(path)?
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| AppError::parse(path, format!("row {}: {e}", i + 1))))
        .collect()
}

/// Reads a profile written by [`save_profile`]. Time steps come from the
/// differences of `t`; accelerations are taken as stored.
pub fn load_profile(path: &Path) -> Result<MotionProfile> {
    let rows: Vec<ProfileRow> = read_rows(path)?;
    if rows.len() < 2 {
        return Err(AppError::parse(path, "a profile needs at least 2 rows"));
    }
    let m = rows.len() - 1;
    let dt: Vec<f64> = rows.windows(2).map(|w| w[1].t - w[0].t).collect();
    if let Some(k) = dt.iter().position(|d| !(*d > 0.0)) {
        return Err(AppError::parse(
            path,
            format!("column `t` must increase strictly (rows {} and {})", k + 1, k + 2),
        ));
    }
    Ok(MotionProfile::from_parts(
        rows.iter().map(|r| Point::new(r.x, r.y)).collect(),
        rows.iter().map(|r| r.v).collect(),
        dt,
        rows[..m].iter().map(|r| r.ax).collect(),
        rows[..m].iter().map(|r| r.ay).collect(),
    )?)
}

#[derive(Debug, Deserialize)]
struct GpsRow {
    t: f64,
    x: f64,
    y: f64,
    #[serde(deserialize_with = "flag")]
    valid: bool,
}

fn flag<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(serde::de::Error::custom(format!(
            "`valid` must be 0, 1, true or false, got {other:?}"
        ))),
    }
}

pub fn load_gps(path: &Path) -> Result<Vec<GpsSample>> {
    let rows: Vec<GpsRow> = read_rows(path)?;
    Ok(rows
        .into_iter()
        .map(|r| GpsSample {
            t: r.t,
            x: r.x,
            y: r.y,
            valid: r.valid,
        })
        .collect())
}

pub fn load_imu(path: &Path) -> Result<Vec<ImuSample>> {
    read_rows(path)
}

pub fn gps_csv(gps: &[GpsSample]) -> String {
    let mut out = String::from("t,x,y,valid\n");
    for s in gps {
        let row = [s.t, s.x, s.y].map(sig9).join(",");
        out.push_str(&format!("{row},{}\n", u8::from(s.valid)));
    }
    out
}

pub fn imu_csv(imu: &[ImuSample]) -> String {
    let mut out = String::from("t,ax,ay\n");
    for s in imu {
        out.push_str(&[s.t, s.ax, s.ay].map(sig9).join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum OutageFile {
    List(Vec<OutageWindow>),
    Object { outage_windows: Vec<OutageWindow> },
}

/// Outage windows, either a bare list or `{"outage_windows": [...]}`.
pub fn load_outages(path: &Path) -> Result<Vec<OutageWindow>> {
    Ok(match read_json(path)? {
        OutageFile::List(w) => w,
        OutageFile::Object { outage_windows } => outage_windows,
    })
}

pub fn save_outages(path: &Path, windows: &[OutageWindow]) -> Result<()> {
    write_json(
        path,
        &OutageFile::Object {
            outage_windows: windows.to_vec(),
        },
    )
}

/// Writes a header row and rows of numbers in 9-digit form.
pub fn numeric_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.into_iter().map(sig9).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}
