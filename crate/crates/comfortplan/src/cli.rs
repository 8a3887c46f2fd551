//! Command-line front end. Every command reads its inputs, runs one stage of
//! the pipeline and writes CSV/JSON into the output directory.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use comfortplan_core::metrics::{iso_discomfort_contours, ComparisonReport, Spectrum};
use comfortplan_core::planner::{match_travel_time, non_dominated, solve_plan, PlanResult, TimeMatch};
use comfortplan_core::reconstruction::{align_imu_with, reconstruct_with, validate_run, RunValidity, SensorLog};
use comfortplan_core::{MotionProfile, PlanProblem, RouteCorridor, Variant};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{AppError, Result};
use crate::io;
use crate::psd::{profile_psd, Axis};
use crate::synth::{roundabout_run, synthetic_log, LogSpec};

/// Frequency separating the low and high bands in spectrum summaries, Hz.
pub const BAND_SPLIT_HZ: f64 = 0.2;

/// Cost differences below this are treated as solver noise on the frontier.
pub const FRONTIER_NOISE: f64 = 1e-6;

/// Share of sweep points that must converge for a zero exit status.
pub const SWEEP_CONVERGED_SHARE: f64 = 0.8;

#[derive(Debug, Parser)]
#[command(name = "comfortplan", version, about = "Comfort-oriented motion planning and run comparison")]
pub struct Cli {
    /// Run configuration JSON; missing keys keep their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for restarts and synthetic noise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for sweeps and comparisons.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconstruct a motion profile from a GPS/IMU log.
    Reconstruct(ReconstructArgs),
    /// Plan a motion on a route for a fixed time weight or a target travel time.
    Plan(PlanArgs),
    /// Plan with the time weight tuned to hit a target travel time.
    MatchTime(MatchArgs),
    /// Compare a recorded run against time-matched plans.
    Compare(CompareArgs),
    /// Solve one plan per time weight and write the comfort/time frontier.
    Sweep(SweepArgs),
    /// Power spectral density of profile accelerations.
    Psd(PsdArgs),
    /// Check input files without running the pipeline.
    Validate(ValidateArgs),
    /// Write synthetic inputs with known ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ObjectiveArgs {
    /// Objective variant: ma (raw acceleration) or ms (band-pass weighted).
    #[arg(long)]
    pub objective: Option<Variant>,
    /// Filter low-pass time constant, seconds.
    #[arg(long)]
    pub tau1: Option<f64>,
    /// Filter high-pass time constant, seconds.
    #[arg(long)]
    pub tau2: Option<f64>,
    /// Zero-input continuation after the run, seconds.
    #[arg(long)]
    pub cooldown: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub gps: PathBuf,
    #[arg(long)]
    pub imu: PathBuf,
    /// Outage windows JSON.
    #[arg(long)]
    pub outages: Option<PathBuf>,
    /// Grid period, seconds; defaults to the median GPS period.
    #[arg(long)]
    pub sample_time: Option<f64>,
    /// Skip the IMU time-offset search.
    #[arg(long)]
    pub no_align: bool,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub route: PathBuf,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[arg(long, conflicts_with = "target_time")]
    pub time_weight: Option<f64>,
    /// Tune the time weight to this travel time, seconds.
    #[arg(long)]
    pub target_time: Option<f64>,
    /// Speed at the first station, m/s.
    #[arg(long)]
    pub v0: f64,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[arg(long)]
    pub route: PathBuf,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[arg(long)]
    pub target_time: f64,
    #[arg(long)]
    pub v0: f64,
    /// Accepted travel-time error, seconds.
    #[arg(long)]
    pub time_tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Recorded run, profile CSV.
    #[arg(long)]
    pub human: PathBuf,
    #[arg(long)]
    pub route: PathBuf,
    /// With `ms` the weighted energies and the MS deficiency are added.
    #[command(flatten)]
    pub objective: ObjectiveArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub route: PathBuf,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    /// Comma-separated time weights.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub w_grid: Vec<f64>,
    #[arg(long)]
    pub v0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisChoice {
    Longitudinal,
    Lateral,
    Both,
}

#[derive(Debug, Args)]
pub struct PsdArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub axis: AxisChoice,
    /// Resampling rate, Hz.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Longest Welch segment, samples.
    #[arg(long)]
    pub segment_cap: Option<usize>,
    /// Segment overlap fraction.
    #[arg(long)]
    pub overlap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub route: Option<PathBuf>,
    /// Profile CSV to screen for the minimum-speed rule.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, requires = "imu")]
    pub gps: Option<PathBuf>,
    #[arg(long, requires = "gps")]
    pub imu: Option<PathBuf>,
    #[arg(long, requires = "gps")]
    pub outages: Option<PathBuf>,
    /// Speed a valid run must stay above, m/s.
    #[arg(long)]
    pub min_speed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Noisy GPS/IMU log of a winding drive, plus its true profile.
    Log,
    /// Two-roundabout route and a scripted human-like run on it.
    Roundabout,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: SynthKind,
    /// Drive length, seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// IMU clock lag, seconds.
    #[arg(long)]
    pub lag: Option<f64>,
    #[arg(long)]
    pub gps_sigma: Option<f64>,
    #[arg(long)]
    pub imu_sigma: Option<f64>,
    #[arg(long)]
    pub outage_start: Option<f64>,
    /// 0 disables the outage.
    #[arg(long)]
    pub outage_length: Option<f64>,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns the files it wrote. Outputs are written
/// before convergence failures are reported.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.solver.seed = seed;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(AppError::Usage("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| AppError::Usage(format!("cannot start worker threads: {e}")))?;
    let mut out = Outputs::new(&cli.out);
    let status = pool.install(|| match &cli.command {
        Command::Reconstruct(a) => reconstruct(a, config, &mut out),
        Command::Plan(a) => plan(a, config, &mut out),
        Command::MatchTime(a) => match_time(a, config, &mut out),
        Command::Compare(a) => compare(a, config, &mut out),
        Command::Sweep(a) => sweep(a, config, &mut out),
        Command::Psd(a) => psd(a, config, &mut out),
        Command::Validate(a) => validate(a, config, &mut out),
        Command::Synth(a) => synth(a, config, cli.seed.unwrap_or(0), &mut out),
    });
    for path in &out.written {
        if status.is_err() {
            eprintln!("wrote {}", path.display());
        }
    }
    status.map(|()| out.written)
}

struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        io::write_json(&path, value)?;
        self.written.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        io::write_text(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    fn profile(&mut self, name: &str, profile: &MotionProfile) -> Result<()> {
        self.text(name, &io::profile_csv(profile))
    }
}

fn apply_objective(config: &mut RunConfig, args: &ObjectiveArgs) -> Result<()> {
    if let Some(v) = args.objective {
        config.objective.variant = v;
    }
    let filter = &mut config.objective.filter;
    if let Some(t) = args.tau1 {
        filter.tau1_s = t;
    }
    if let Some(t) = args.tau2 {
        filter.tau2_s = t;
    }
    if let Some(c) = args.cooldown {
        filter.cooldown_s = c;
    }
    config.validate()
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

#[derive(Serialize)]
struct AlignmentSummary {
    applied: bool,
    shift: f64,
    peak_correlation: Option<f64>,
    at_edge: bool,
}

#[derive(Serialize)]
struct ReconstructOutput<'a> {
    config: &'a RunConfig,
    gps: String,
    imu: String,
    outages: Option<String>,
    sample_time: f64,
    alignment: AlignmentSummary,
    diagnostics: &'a comfortplan_core::reconstruction::ReconstructionDiagnostics,
    validity: RunValidity,
}

/// Median spacing of the GPS timestamps, to 9 significant digits so that
/// rounded CSV times give a clean period.
fn median_period(gps: &[comfortplan_core::reconstruction::GpsSample]) -> Option<f64> {
    let mut d: Vec<f64> = gps.windows(2).map(|w| w[1].t - w[0].t).collect();
    if d.is_empty() {
        return None;
    }
    d.sort_by(f64::total_cmp);
    io::sig9(d[d.len() / 2]).parse().ok()
}

fn load_log(gps: &Path, imu: &Path, outages: Option<&Path>, sample_time: Option<f64>) -> Result<SensorLog> {
    let gps_samples = io::load_gps(gps)?;
    let imu_samples = io::load_imu(imu)?;
    let windows = match outages {
        Some(p) => io::load_outages(p)?,
        None => Vec::new(),
    };
    let ts = match sample_time {
        Some(ts) => ts,
        None => median_period(&gps_samples)
            .ok_or_else(|| AppError::parse(gps, "needs at least 2 samples"))?,
    };
    Ok(SensorLog::new(gps_samples, imu_samples, ts, windows)?)
}

fn reconstruct(a: &ReconstructArgs, config: RunConfig, out: &mut Outputs) -> Result<()> {
    config.validate()?;
    let log = load_log(&a.gps, &a.imu, a.outages.as_deref(), a.sample_time)?;
    let (log, alignment) = if a.no_align {
        let summary = AlignmentSummary {
            applied: false,
            shift: 0.0,
            peak_correlation: None,
            at_edge: false,
        };
        (log, summary)
    } else {
        let al = align_imu_with(&log, &config.alignment)?;
        if al.at_edge {
            eprintln!(
                "warning: IMU lag search peaked at the bracket edge ({:+.3} s); shift applied anyway",
                al.shift
            );
        }
        let summary = AlignmentSummary {
            applied: true,
            shift: al.shift,
            peak_correlation: Some(al.peak_correlation),
            at_edge: al.at_edge,
        };
        (al.log, summary)
    };
    let r = reconstruct_with(&log, &config.weights, &config.reconstruction)?;
    let validity = validate_run(&r.profile, config.min_run_speed);
    out.profile("profile.csv", &r.profile)?;
    out.json(
        "reconstruction.json",
        &ReconstructOutput {
            config: &config,
            gps: path_string(&a.gps),
            imu: path_string(&a.imu),
            outages: a.outages.as_deref().map(path_string),
            sample_time: log.sample_time,
            alignment,
            diagnostics: &r.diagnostics,
            validity,
        },
    )?;
    if !r.diagnostics.converged {
        return Err(AppError::Unfinished(format!(
            "reconstruction stopped after {} iterations without converging",
            r.diagnostics.iterations
        )));
    }
    Ok(())
}

/// Plan without the full profile, which goes to CSV.
#[derive(Debug, Serialize)]
struct PlanSummary {
    time_weight: f64,
    cost: f64,
    comfort_term: f64,
    travel_time: f64,
    converged: bool,
    iterations: usize,
    evaluations: usize,
    lateral_offsets: Vec<f64>,
    speeds: Vec<f64>,
}

impl From<&PlanResult> for PlanSummary {
    fn from(r: &PlanResult) -> Self {
        Self {
            time_weight: r.time_weight,
            cost: r.cost,
            comfort_term: r.comfort_term,
            travel_time: r.travel_time,
            converged: r.converged,
            iterations: r.iterations,
            evaluations: r.evaluations,
            lateral_offsets: r.plan.lateral_offsets.clone(),
            speeds: r.plan.speeds.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct MatchSummary {
    target_time: f64,
    time_weight: f64,
    bisection_steps: usize,
    matched: bool,
}

impl From<&TimeMatch> for MatchSummary {
    fn from(m: &TimeMatch) -> Self {
        Self {
            target_time: m.target_time,
            time_weight: m.time_weight,
            bisection_steps: m.iterations,
            matched: m.matched,
        }
    }
}

#[derive(Serialize)]
struct PlanOutput<'a> {
    config: &'a RunConfig,
    route: String,
    initial_speed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    matching: Option<MatchSummary>,
    result: PlanSummary,
}

fn match_for(config: &RunConfig, route: &RouteCorridor, variant: Variant, v0: f64, target: f64) -> Result<TimeMatch> {
    let objective = comfortplan_core::ObjectiveConfig {
        variant,
        ..config.objective
    };
    Ok(match_travel_time(route, objective, v0, target, &config.solver, &config.matching)?)
}

fn write_plan(
    out: &mut Outputs,
    config: &RunConfig,
    route: &Path,
    v0: f64,
    result: &PlanResult,
    matching: Option<&TimeMatch>,
) -> Result<()> {
    out.profile("plan_profile.csv", &result.profile)?;
    out.json(
        "plan.json",
        &PlanOutput {
            config,
            route: path_string(route),
            initial_speed: v0,
            matching: matching.map(MatchSummary::from),
            result: PlanSummary::from(result),
        },
    )?;
    if let Some(m) = matching.filter(|m| !m.matched) {
        return Err(AppError::Unfinished(format!(
            "closest travel time {:.3} s misses the target {:.3} s by more than {} s",
            m.result.travel_time, m.target_time, config.matching.time_tolerance
        )));
    }
    if !result.converged {
        return Err(AppError::Unfinished(format!(
            "planner stopped after {} iterations without converging",
            result.iterations
        )));
    }
    Ok(())
}

fn plan(a: &PlanArgs, mut config: RunConfig, out: &mut Outputs) -> Result<()> {
    if let Some(w) = a.time_weight {
        config.objective.time_weight = w;
    }
    apply_objective(&mut config, &a.objective)?;
    let route = io::load_route(&a.route)?;
    if let Some(target) = a.target_time {
        let m = match_for(&config, &route, config.objective.variant, a.v0, target)?;
        return write_plan(out, &config, &a.route, a.v0, &m.result, Some(&m));
    }
    let problem = PlanProblem::new(route, config.objective, a.v0, config.solver)?;
    let r = solve_plan(&problem)?;
    write_plan(out, &config, &a.route, a.v0, &r, None)
}

fn match_time(a: &MatchArgs, mut config: RunConfig, out: &mut Outputs) -> Result<()> {
    apply_objective(&mut config, &a.objective)?;
    if let Some(tol) = a.time_tolerance {
        if !(tol > 0.0) {
            return Err(AppError::Usage(format!("time tolerance {tol} must be positive")));
        }
        config.matching.time_tolerance = tol;
    }
    let route = io::load_route(&a.route)?;
    let m = match_for(&config, &route, config.objective.variant, a.v0, a.target_time)?;
    write_plan(out, &config, &a.route, a.v0, &m.result, Some(&m))
}

/// Spectrum totals split at [`BAND_SPLIT_HZ`].
#[derive(Debug, Serialize)]
struct BandSummary {
    total: f64,
    below_split: f64,
    above_split: f64,
    peak_frequency: Option<f64>,
}

fn bands(s: &Spectrum) -> Result<BandSummary> {
    let nyquist = s.frequencies[s.frequencies.len() - 1];
    let split = BAND_SPLIT_HZ.min(nyquist);
    let below = if split > 0.0 { s.band_energy(0.0, split)? } else { 0.0 };
    let above = if split < nyquist { s.band_energy(split, nyquist)? } else { 0.0 };
    Ok(BandSummary {
        total: s.total_power(),
        below_split: below,
        above_split: above,
        peak_frequency: s.peak_frequency(),
    })
}

#[derive(Debug, Serialize)]
struct AxisBands {
    longitudinal: BandSummary,
    lateral: BandSummary,
}

/// Both spectra of a profile as CSV, plus their band summaries.
fn spectra(profile: &MotionProfile, config: &RunConfig) -> Result<(String, AxisBands)> {
    let lon = profile_psd(profile, Axis::Longitudinal, &config.psd)?;
    let lat = profile_psd(profile, Axis::Lateral, &config.psd)?;
    let rows = (0..lon.frequencies.len()).map(|k| vec![lon.frequencies[k], lon.density[k], lat.density[k]]);
    let csv = io::numeric_csv(&["frequency", "longitudinal", "lateral"], rows);
    Ok((
        csv,
        AxisBands {
            longitudinal: bands(&lon)?,
            lateral: bands(&lat)?,
        },
    ))
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    config: &'a RunConfig,
    human: String,
    route: String,
    initial_speed: f64,
    band_split_hz: f64,
    report: ComparisonReport,
    ma_match: MatchSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    ms_match: Option<MatchSummary>,
    spectra_human: AxisBands,
    spectra_planner_ma: AxisBands,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectra_planner_ms: Option<AxisBands>,
}

fn compare(a: &CompareArgs, mut config: RunConfig, out: &mut Outputs) -> Result<()> {
    apply_objective(&mut config, &a.objective)?;
    let human = io::load_profile(&a.human)?;
    let route = io::load_route(&a.route)?;
    let v0 = human.speeds()[0];
    let target = human.total_time();
    let with_ms = config.objective.variant == Variant::Ms;
    let (ma, ms) = rayon::join(
        || match_for(&config, &route, Variant::Ma, v0, target),
        || with_ms.then(|| match_for(&config, &route, Variant::Ms, v0, target)).transpose(),
    );
    let (ma, ms) = (ma?, ms?);
    let report = ComparisonReport::build(
        &human,
        &ma.result.profile,
        ms.as_ref().map(|m| &m.result.profile),
        &config.objective.filter,
    )?;
    let (human_csv, human_bands) = spectra(&human, &config)?;
    let (ma_csv, ma_bands) = spectra(&ma.result.profile, &config)?;
    out.profile("planner_ma_profile.csv", &ma.result.profile)?;
    out.text("psd_human.csv", &human_csv)?;
    out.text("psd_planner_ma.csv", &ma_csv)?;
    let ms_bands = match &ms {
        Some(m) => {
            let (csv, b) = spectra(&m.result.profile, &config)?;
            out.profile("planner_ms_profile.csv", &m.result.profile)?;
            out.text("psd_planner_ms.csv", &csv)?;
            Some(b)
        }
        None => None,
    };
    out.json(
        "comparison.json",
        &CompareOutput {
            config: &config,
            human: path_string(&a.human),
            route: path_string(&a.route),
            initial_speed: v0,
            band_split_hz: BAND_SPLIT_HZ,
            report,
            ma_match: MatchSummary::from(&ma),
            ms_match: ms.as_ref().map(MatchSummary::from),
            spectra_human: human_bands,
            spectra_planner_ma: ma_bands,
            spectra_planner_ms: ms_bands,
        },
    )?;
    for (label, m) in std::iter::once(("MA", &ma)).chain(ms.iter().map(|m| ("MS", m))) {
        if !m.matched {
            return Err(AppError::Unfinished(format!(
                "{label} plan travel time {:.3} s misses the run's {:.3} s",
                m.result.travel_time, target
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    time_weight: f64,
    travel_time: Option<f64>,
    comfort_term: Option<f64>,
    converged: bool,
    non_dominated: Option<bool>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    config: &'a RunConfig,
    route: String,
    initial_speed: f64,
    rows: &'a [SweepRow],
}

fn sweep(a: &SweepArgs, mut config: RunConfig, out: &mut Outputs) -> Result<()> {
    apply_objective(&mut config, &a.objective)?;
    if a.w_grid.is_empty() {
        return Err(AppError::Usage("--w-grid needs at least one weight".into()));
    }
    if let Some(w) = a.w_grid.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
        return Err(AppError::Usage(format!("time weight {w} must be non-negative")));
    }
    let route = io::load_route(&a.route)?;
    // fail fast on a bad initial speed rather than once per row
    PlanProblem::new(route.clone(), config.objective, a.v0, config.solver)?;
    let results: Vec<_> = a
        .w_grid
        .par_iter()
        .map(|&w| {
            let problem = PlanProblem::new(route.clone(), config.objective.with_time_weight(w), a.v0, config.solver)?;
            solve_plan(&problem)
        })
        .collect();
    let points: Vec<(f64, f64)> = results
        .iter()
        .flatten()
        .map(|r| (r.travel_time, r.comfort_term))
        .collect();
    let mut flags = non_dominated(&points, FRONTIER_NOISE).into_iter();
    let rows: Vec<SweepRow> = a
        .w_grid
        .iter()
        .zip(&results)
        .map(|(&w, r)| match r {
            Ok(r) => SweepRow {
                time_weight: w,
                travel_time: Some(r.travel_time),
                comfort_term: Some(r.comfort_term),
                converged: r.converged,
                non_dominated: flags.next(),
                error: None,
            },
            Err(e) => SweepRow {
                time_weight: w,
                travel_time: None,
                comfort_term: None,
                converged: false,
                non_dominated: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut csv = String::from("time_weight,travel_time,comfort_term,converged,error\n");
    for r in &rows {
        let num = |x: Option<f64>| x.map(io::sig9).unwrap_or_default();
        let error = r.error.as_deref().unwrap_or("").replace(['"', ','], ";");
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            io::sig9(r.time_weight),
            num(r.travel_time),
            num(r.comfort_term),
            r.converged,
            error
        ));
    }
    out.text("pareto.csv", &csv)?;
    let contours = iso_discomfort_contours(&points, &config.contour_factors);
    out.text(
        "contours.csv",
        &io::numeric_csv(
            &["factor", "travel_time", "comfort"],
            contours.iter().map(|c| vec![c.factor, c.travel_time, c.comfort]),
        ),
    )?;
    out.json(
        "sweep.json",
        &SweepOutput {
            config: &config,
            route: path_string(&a.route),
            initial_speed: a.v0,
            rows: &rows,
        },
    )?;
    let converged = rows.iter().filter(|r| r.converged).count();
    if (converged as f64) < SWEEP_CONVERGED_SHARE * rows.len() as f64 {
        return Err(AppError::Unfinished(format!(
            "only {converged} of {} sweep points converged",
            rows.len()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct PsdOutput<'a> {
    config: &'a RunConfig,
    profile: String,
    band_split_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    longitudinal: Option<BandSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lateral: Option<BandSummary>,
}

fn psd(a: &PsdArgs, mut config: RunConfig, out: &mut Outputs) -> Result<()> {
    if let Some(r) = a.rate {
        config.psd.rate_hz = r;
    }
    if let Some(c) = a.segment_cap {
        config.psd.segment_cap = c;
    }
    if let Some(o) = a.overlap {
        config.psd.overlap = o;
    }
    config.validate()?;
    let profile = io::load_profile(&a.profile)?;
    let axes: &[Axis] = match a.axis {
        AxisChoice::Longitudinal => &[Axis::Longitudinal],
        AxisChoice::Lateral => &[Axis::Lateral],
        AxisChoice::Both => &[Axis::Longitudinal, Axis::Lateral],
    };
    let spectra = axes
        .iter()
        .map(|&axis| profile_psd(&profile, axis, &config.psd))
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["frequency"];
    let mut summary = PsdOutput {
        config: &config,
        profile: path_string(&a.profile),
        band_split_hz: BAND_SPLIT_HZ,
        longitudinal: None,
        lateral: None,
    };
    for (axis, s) in axes.iter().zip(&spectra) {
        match axis {
            Axis::Longitudinal => {
                header.push("longitudinal");
                summary.longitudinal = Some(bands(s)?);
            }
            Axis::Lateral => {
                header.push("lateral");
                summary.lateral = Some(bands(s)?);
            }
        }
    }
    let rows = (0..spectra[0].frequencies.len()).map(|k| {
        std::iter::once(spectra[0].frequencies[k])
            .chain(spectra.iter().map(|s| s.density[k]))
            .collect()
    });
    out.text("psd.csv", &io::numeric_csv(&header, rows))?;
    out.json("psd.json", &summary)
}

#[derive(Debug, Serialize)]
struct RouteSummary {
    name: String,
    stations: usize,
    center_length: f64,
}

#[derive(Debug, Serialize)]
struct LogSummary {
    gps_samples: usize,
    imu_samples: usize,
    sample_time: f64,
    gps_span: (f64, f64),
    imu_span: (f64, f64),
    outage_windows: usize,
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    route: Option<RouteSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<RunValidity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log: Option<LogSummary>,
}

fn validate(a: &ValidateArgs, mut config: RunConfig, out: &mut Outputs) -> Result<()> {
    if let Some(s) = a.min_speed {
        config.min_run_speed = s;
    }
    config.validate()?;
    if a.route.is_none() && a.profile.is_none() && a.gps.is_none() {
        return Err(AppError::Usage("nothing to validate: pass --route, --profile or --gps/--imu".into()));
    }
    let route = a
        .route
        .as_deref()
        .map(|p| {
            io::load_route(p).map(|r| RouteSummary {
                name: r.name().to_string(),
                stations: r.len(),
                center_length: r.center_length(),
            })
        })
        .transpose()?;
    let profile = a
        .profile
        .as_deref()
        .map(|p| io::load_profile(p).map(|prof| validate_run(&prof, config.min_run_speed)))
        .transpose()?;
    let log = match (&a.gps, &a.imu) {
        (Some(g), Some(i)) => {
            let log = load_log(g, i, a.outages.as_deref(), None)?;
            Some(LogSummary {
                gps_samples: log.gps.len(),
                imu_samples: log.imu.len(),
                sample_time: log.sample_time,
                gps_span: log.gps_span(),
                imu_span: log.imu_span(),
                outage_windows: log.outage_windows.len(),
            })
        }
        _ => None,
    };
    out.json(
        "validation.json",
        &ValidateOutput {
            config: &config,
            route,
            profile,
            log,
        },
    )
}

#[derive(Serialize)]
struct SynthOutput<'a> {
    config: &'a RunConfig,
    spec: &'a LogSpec,
}

fn synth(a: &SynthArgs, config: RunConfig, seed: u64, out: &mut Outputs) -> Result<()> {
    match a.kind {
        SynthKind::Log => {
            let mut spec = LogSpec {
                seed,
                ..LogSpec::default()
            };
            if let Some(d) = a.duration {
                spec.drive.duration = d;
                spec.outage_start_s = 0.5 * d - 0.5 * spec.outage_length_s;
            }
            if let Some(v) = a.lag {
                spec.imu_lag_s = v;
            }
            if let Some(v) = a.gps_sigma {
                spec.gps_sigma_m = v;
            }
            if let Some(v) = a.imu_sigma {
                spec.imu_sigma = v;
            }
            if let Some(v) = a.outage_length {
                spec.outage_start_s += 0.5 * (spec.outage_length_s - v);
                spec.outage_length_s = v;
            }
            if let Some(v) = a.outage_start {
                spec.outage_start_s = v;
            }
            let s = synthetic_log(&spec)?;
            let truth = comfortplan_core::reconstruction::predict_motion(&s.truth, spec.drive.sample_time)?;
            let n = s.truth.len();
            let dt = vec![spec.drive.sample_time; n - 1];
            let points = truth
                .x
                .iter()
                .zip(&truth.y)
                .map(|(x, y)| comfortplan_core::Point::new(*x, *y))
                .collect();
            let profile = MotionProfile::from_parts(points, s.truth.speeds.clone(), dt, truth.ax, truth.ay)?;
            out.text("gps.csv", &io::gps_csv(&s.log.gps))?;
            out.text("imu.csv", &io::imu_csv(&s.log.imu))?;
            let path = out.dir.join("outages.json");
            io::save_outages(&path, &s.log.outage_windows)?;
            out.written.push(path);
            out.profile("truth_profile.csv", &profile)?;
            out.json("synth.json", &SynthOutput { config: &config, spec: &spec })
        }
        SynthKind::Roundabout => {
            let (route, profile) = roundabout_run()?;
            let path = out.dir.join("route.json");
            io::save_route(&path, &route)?;
            out.written.push(path);
            out.profile("human_profile.csv", &profile)
        }
    }
}
