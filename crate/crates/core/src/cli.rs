//! Command-line front end. Flags are collected into a [`RunConfig`], which
//! alone drives execution and is embedded in every artifact, so an
//! artifact's config can be replayed with `--config`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coeffgen::{
    p_coefficients, q_coefficients, q_minus_one_closed_form, q_minus_one_direct, MixingCoefficients, MixingParams,
};
use crate::control::{
    default_gammas, detect_cycles, detect_over_gammas, gamma_grid, newton_refine, refine_point, restart_seed_point,
    verify_cycle, CycleRecord, DetectDiagnostics, SeedMode, Tolerances,
};
use crate::error::Error;
use crate::maps::{cycle_multipliers, iterate_open, MapKind, MapSpec, MapSystem};
use crate::output::{self, fmt_f64, Artifact};
use crate::stability::{
    boundary_curve, check_boundary_simple, check_typically_real, i_metric, j_metric, margin_raster, region_area,
    region_length, stability_bounds, PhiFunction, Window, DEFAULT_LENGTH_WINDOW,
};

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_UNVERIFIED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(Error::Json(e))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(e) => match e {
                Error::ParameterRange(_)
                | Error::UnknownMap(_)
                | Error::UnknownMapParam { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidAngle(_)
                | Error::Io(_)
                | Error::Json(_) => EXIT_USAGE,
                _ => EXIT_NUMERIC,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Seeding {
    Trajectory,
    Periodic,
    CloseReturn,
}

impl From<Seeding> for SeedMode {
    fn from(s: Seeding) -> Self {
        match s {
            Seeding::Trajectory => SeedMode::Trajectory,
            Seeding::Periodic => SeedMode::Periodic,
            Seeding::CloseReturn => SeedMode::CloseReturn,
        }
    }
}

/// Where results go.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default)]
    pub format: Format,
    /// Main result; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pgm: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionOptions {
    pub length_window: f64,
    pub area_pixels: usize,
    pub curve_resolution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterOptions {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub n_values: Vec<usize>,
    pub gammas: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Fixed tau; tau = sigma when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default)]
    pub with_length: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub cycle_file: PathBuf,
    /// Expand single-point records to this many points by iterating the map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    #[serde(default)]
    pub refine: bool,
}

/// Everything a run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<MixingParams>,
    /// Gains tried by detection; empty means the single gain in `mixing`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gammas: Vec<f64>,
    #[serde(default)]
    pub stop_on_success: bool,
    #[serde(default)]
    pub restarts: usize,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raster: Option<RasterOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyOptions>,
    #[serde(default)]
    pub outputs: Outputs,
}

impl RunConfig {
    fn new(subcommand: &str, seed: u64) -> Self {
        Self {
            subcommand: subcommand.into(),
            map: None,
            mixing: None,
            gammas: Vec::new(),
            stop_on_success: false,
            restarts: 0,
            rng_seed: seed,
            tolerances: Tolerances::default(),
            region: None,
            raster: None,
            sweep: None,
            verify: None,
            outputs: Outputs::default(),
        }
    }

    fn mixing(&self) -> CliResult<MixingParams> {
        self.mixing
            .ok_or_else(|| CliError::Usage(format!("{} needs mixing parameters", self.subcommand)))
    }

    fn map(&self) -> CliResult<MapSystem> {
        match &self.map {
            Some(spec) => Ok(spec.build()?),
            None => usage(format!("{} needs a map", self.subcommand)),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "cyclekit", version, about = "Find, stabilize and verify unstable cycles of discrete maps")]
pub struct Cli {
    /// JSON run configuration (or a previous artifact) overriding the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Random seed for restart start points.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct LoopArgs {
    /// Prehistory depth N.
    #[arg(short = 'N', long = "depth")]
    pub n: usize,
    /// Cycle length T.
    #[arg(short = 'T', long = "period")]
    pub t: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Defaults to sigma.
    #[arg(long)]
    pub tau: Option<f64>,
}

impl LoopArgs {
    fn params(&self, gamma: f64) -> CliResult<MixingParams> {
        Ok(MixingParams::new(self.n, self.t, self.sigma, self.tau.unwrap_or(self.sigma), gamma)?)
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct MapParamArgs {
    /// Map parameter override NAME=VALUE (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub param: Vec<String>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
}

impl MapParamArgs {
    fn spec(&self, name: &str) -> CliResult<MapSpec> {
        let mut params = BTreeMap::new();
        for (key, v) in [
            ("mu", self.mu),
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("d", self.d),
            ("u", self.u),
            ("k", self.k),
            ("p", self.p),
        ] {
            if let Some(v) = v {
                params.insert(key.to_string(), v);
            }
        }
        for kv in &self.param {
            let Some((k, v)) = kv.split_once('=') else {
                return usage(format!("expected NAME=VALUE, got '{kv}'"));
            };
            let v: f64 = v.trim().parse().map_err(|_| CliError::Usage(format!("bad value in '{kv}'")))?;
            params.insert(k.trim().to_string(), v);
        }
        let spec = MapSpec {
            name: MapKind::from_name(name)?.name().to_string(),
            params,
            domain: None,
        };
        spec.build()?;
        Ok(spec)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mixing coefficients a_j, b_j and q(-1).
    Coeffs {
        #[command(flatten)]
        lp: LoopArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect T-cycles of a map with the mixing closed loop.
    Detect {
        map: String,
        #[command(flatten)]
        lp: LoopArgs,
        #[command(flatten)]
        mp: MapParamArgs,
        /// Single gain.
        #[arg(long, conflicts_with_all = ["sweep_gamma", "gamma_grid"])]
        gamma: Option<f64>,
        /// Default gain schedule (0.1..0.9, or 0 for T <= 2).
        #[arg(long)]
        sweep_gamma: bool,
        /// Gain grid START:STOP:STEP.
        #[arg(long, value_name = "START:STOP:STEP")]
        gamma_grid: Option<String>,
        /// End the gain sweep at the first gain that yields a cycle.
        #[arg(long)]
        stop_on_success: bool,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long, value_enum)]
        seeding: Option<Seeding>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Orbit plot.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Re-check cycles stored in a JSON file.
    Verify {
        map: String,
        cycle_file: PathBuf,
        #[command(flatten)]
        mp: MapParamArgs,
        /// Loop depth used for the reconvergence check.
        #[arg(short = 'N', long = "depth")]
        n: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        tau: Option<f64>,
        /// Expand single-point records into T points.
        #[arg(short = 'T', long = "period")]
        period: Option<usize>,
        /// Newton-refine before verifying.
        #[arg(long)]
        refine: bool,
        #[arg(long)]
        tol_verify: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boundary curve and size of the admissible multiplier region.
    Region {
        #[command(flatten)]
        lp: LoopArgs,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// Left end of the real-axis scan for the length.
        #[arg(long, default_value_t = DEFAULT_LENGTH_WINDOW)]
        length_window: f64,
        /// Pixels per side for the area quadrature.
        #[arg(long, default_value_t = 400)]
        area_pixels: usize,
        /// Maximal chord of the sampled boundary curve.
        #[arg(long, default_value_t = 1e-3)]
        resolution: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Boundary curve as t,re,im.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Closed-loop spectral radius over a window of multipliers.
    Raster {
        #[command(flatten)]
        lp: LoopArgs,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// RE_MIN,RE_MAX,IM_MIN,IM_MAX
        #[arg(long, allow_hyphen_values = true, default_value = "-25,1,-13,13")]
        window: String,
        /// Pixels, NX or NXxNY.
        #[arg(long, default_value = "400x400")]
        pixels: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        pgm: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Metrics, or detection success with --map, over a parameter grid.
    Sweep {
        #[arg(long)]
        map: Option<String>,
        #[command(flatten)]
        mp: MapParamArgs,
        #[arg(short = 'T', long = "period")]
        t: usize,
        /// N values, A or A:B or A:B:STEP.
        #[arg(long, default_value = "1")]
        n_range: String,
        #[arg(long, default_value = "0")]
        gamma_range: String,
        #[arg(long, default_value = "1")]
        sigma_range: String,
        #[arg(long)]
        tau: Option<f64>,
        /// Also compute the region length per cell.
        #[arg(long)]
        with_length: bool,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in maps with their parameters and seeding boxes.
    ListMaps {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

fn parse_f64(s: &str) -> CliResult<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("not a number: '{s}'")))
}

/// `A`, `A:B` (step 1) or `A:B:STEP`, inclusive.
pub fn parse_range_f64(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a] => Ok(vec![parse_f64(a)?]),
        [a, b] => Ok(gamma_grid(parse_f64(a)?, parse_f64(b)?, 1.0)),
        [a, b, step] => {
            let (a, b, step) = (parse_f64(a)?, parse_f64(b)?, parse_f64(step)?);
            if !(step > 0.0) || b < a {
                return usage(format!("empty range '{s}'"));
            }
            Ok(gamma_grid(a, b, step))
        }
        _ => usage(format!("bad range '{s}'")),
    }
}

pub fn parse_range_usize(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("bad integer range '{s}'"));
    let nums: Vec<usize> = s
        .split(':')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    match nums.as_slice() {
        [a] => Ok(vec![*a]),
        [a, b] if a <= b => Ok((*a..=*b).collect()),
        [a, b, step] if a <= b && *step > 0 => Ok((*a..=*b).step_by(*step).collect()),
        _ => Err(bad()),
    }
}

fn parse_window(s: &str) -> CliResult<Window> {
    let v: Vec<f64> = s.split(',').map(parse_f64).collect::<CliResult<_>>()?;
    if v.len() != 4 {
        return usage(format!("window needs 4 numbers, got '{s}'"));
    }
    Ok(Window::new(v[0], v[1], v[2], v[3])?)
}

fn parse_pixels(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::Usage(format!("bad pixel count '{s}'"));
    let mut it = s.split(['x', 'X']).map(|p| p.trim().parse::<usize>().map_err(|_| bad()));
    let nx = it.next().ok_or_else(bad)??;
    let ny = it.next().transpose()?.unwrap_or(nx);
    if it.next().is_some() || nx == 0 || ny == 0 {
        return Err(bad());
    }
    Ok((nx, ny))
}

/// Translates parsed flags into a run configuration.
pub fn config_from_cli(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.command {
        Command::Coeffs { .. } => RunConfig::new("coeffs", cli.seed),
        Command::Detect { .. } => RunConfig::new("detect", cli.seed),
        Command::Verify { .. } => RunConfig::new("verify", cli.seed),
        Command::Region { .. } => RunConfig::new("region", cli.seed),
        Command::Raster { .. } => RunConfig::new("raster", cli.seed),
        Command::Sweep { .. } => RunConfig::new("sweep", cli.seed),
        Command::ListMaps { .. } => RunConfig::new("list-maps", cli.seed),
    };
    match &cli.command {
        Command::Coeffs { lp, format, out } => {
            cfg.mixing = Some(lp.params(0.0)?);
            cfg.outputs.format = *format;
            cfg.outputs.out = out.clone();
        }
        Command::Detect {
            map,
            lp,
            mp,
            gamma,
            sweep_gamma,
            gamma_grid: grid,
            stop_on_success,
            restarts,
            seeding,
            max_iter,
            out,
            svg,
        } => {
            cfg.map = Some(mp.spec(map)?);
            let gammas = match (gamma, grid) {
                (Some(g), _) => vec![*g],
                (None, Some(g)) => parse_range_f64(g)?,
                (None, None) => {
                    if !sweep_gamma {
                        log::info!("no gain given, using the default sweep");
                    }
                    default_gammas(lp.t)
                }
            };
            for &g in &gammas {
                lp.params(g)?;
            }
            cfg.mixing = Some(lp.params(gammas[0])?);
            cfg.gammas = gammas;
            cfg.stop_on_success = *stop_on_success;
            cfg.restarts = *restarts;
            if let Some(s) = seeding {
                cfg.tolerances.seeding = (*s).into();
            }
            if let Some(m) = max_iter {
                cfg.tolerances.max_iter = *m;
            }
            cfg.outputs.out = out.clone();
            cfg.outputs.svg = svg.clone();
        }
        Command::Verify {
            map,
            cycle_file,
            mp,
            n,
            gamma,
            sigma,
            tau,
            period,
            refine,
            tol_verify,
            out,
        } => {
            cfg.map = Some(mp.spec(map)?);
            if let Some(n) = n {
                let t = period.unwrap_or(1);
                cfg.mixing = Some(MixingParams::new(*n, t, *sigma, tau.unwrap_or(*sigma), *gamma)?);
            }
            if let Some(tv) = tol_verify {
                cfg.tolerances.tol_verify = *tv;
            }
            cfg.verify = Some(VerifyOptions {
                cycle_file: cycle_file.clone(),
                period: *period,
                refine: *refine,
            });
            cfg.outputs.out = out.clone();
        }
        Command::Region {
            lp,
            gamma,
            length_window,
            area_pixels,
            resolution,
            out,
            csv,
            svg,
        } => {
            cfg.mixing = Some(lp.params(*gamma)?);
            cfg.region = Some(RegionOptions {
                length_window: *length_window,
                area_pixels: *area_pixels,
                curve_resolution: *resolution,
            });
            cfg.outputs.out = out.clone();
            cfg.outputs.csv = csv.clone();
            cfg.outputs.svg = svg.clone();
        }
        Command::Raster {
            lp,
            gamma,
            window,
            pixels,
            out,
            csv,
            pgm,
            svg,
        } => {
            cfg.mixing = Some(lp.params(*gamma)?);
            let (nx, ny) = parse_pixels(pixels)?;
            cfg.raster = Some(RasterOptions {
                window: parse_window(window)?,
                nx,
                ny,
            });
            cfg.outputs.out = out.clone();
            cfg.outputs.csv = csv.clone();
            cfg.outputs.pgm = pgm.clone();
            cfg.outputs.svg = svg.clone();
        }
        Command::Sweep {
            map,
            mp,
            t,
            n_range,
            gamma_range,
            sigma_range,
            tau,
            with_length,
            restarts,
            format,
            out,
        } => {
            if let Some(m) = map {
                cfg.map = Some(mp.spec(m)?);
                cfg.restarts = *restarts;
            }
            let sweep = SweepOptions {
                n_values: parse_range_usize(n_range)?,
                gammas: parse_range_f64(gamma_range)?,
                sigmas: parse_range_f64(sigma_range)?,
                tau: *tau,
                with_length: *with_length,
            };
            cfg.mixing = Some(MixingParams::exploratory(
                sweep.n_values[0],
                *t,
                sweep.sigmas[0],
                tau.unwrap_or(sweep.sigmas[0]),
                sweep.gammas[0],
            )?);
            cfg.sweep = Some(sweep);
            cfg.outputs.format = *format;
            cfg.outputs.out = out.clone();
        }
        Command::ListMaps { format } => {
            cfg.outputs.format = *format;
        }
    }
    Ok(cfg)
}

fn merge_json(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Overlays a JSON config file (a bare config or a previous artifact) on
/// the flag-derived configuration.
pub fn apply_config_file(cfg: RunConfig, path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut file: Value = serde_json::from_str(&text)?;
    if let Some(inner) = file.get("config").filter(|_| file.get("tool").is_some()) {
        file = inner.clone();
    }
    let mut base = serde_json::to_value(&cfg)?;
    merge_json(&mut base, file);
    let merged: RunConfig = serde_json::from_value(base)?;
    if merged.subcommand != cfg.subcommand {
        return usage(format!(
            "config is for '{}', not '{}'",
            merged.subcommand, cfg.subcommand
        ));
    }
    Ok(merged)
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => output::write_file(p, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn emit_json<R: Serialize>(cfg: &RunConfig, result: R) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(&Artifact::new(cfg, result))?;
    s.push('\n');
    emit(cfg.outputs.out.as_deref(), s.as_bytes())
}

#[derive(Serialize)]
struct CoeffReport {
    params: MixingParams,
    a: Vec<f64>,
    b: Vec<f64>,
    b_t1: Vec<f64>,
    b_t2: Option<Vec<f64>>,
    b_t3_plus: Vec<f64>,
    q_minus_one_direct: f64,
    q_minus_one_closed: Option<f64>,
}

fn run_coeffs(cfg: &RunConfig) -> CliResult<i32> {
    let params = cfg.mixing()?;
    let coeffs = MixingCoefficients::generate(params)?;
    let a = q_coefficients(&params)?;
    let regime = |t: usize| p_coefficients(&a, &MixingParams { t, ..params });
    let report = CoeffReport {
        params,
        b_t1: regime(1)?,
        b_t2: regime(2).ok(),
        b_t3_plus: regime(3)?,
        q_minus_one_direct: q_minus_one_direct(&a),
        q_minus_one_closed: q_minus_one_closed_form(&params).ok(),
        a: coeffs.a,
        b: coeffs.b,
    };
    match cfg.outputs.format {
        Format::Json => emit_json(cfg, &report)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = (0..params.n)
                .map(|j| {
                    let b2 = report.b_t2.as_ref().map(|b| fmt_f64(b[j])).unwrap_or_default();
                    vec![
                        (j + 1).to_string(),
                        fmt_f64(report.a[j]),
                        fmt_f64(report.b[j]),
                        fmt_f64(report.b_t1[j]),
                        b2,
                        fmt_f64(report.b_t3_plus[j]),
                    ]
                })
                .collect();
            let mut s = output::csv_table(cfg, &["j", "a", "b", "b_t1", "b_t2", "b_t3_plus"], &rows)?;
            s.push_str(&format!(
                "# q(-1) direct: {} closed: {}\n",
                fmt_f64(report.q_minus_one_direct),
                report.q_minus_one_closed.map(fmt_f64).unwrap_or_else(|| "NA".into())
            ));
            emit(cfg.outputs.out.as_deref(), s.as_bytes())?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct GammaRow {
    gamma: f64,
    diagnostics: DetectDiagnostics,
}

#[derive(Serialize)]
struct DetectResult {
    cycles: Vec<CycleRecord>,
    diagnostics: DetectDiagnostics,
    per_gamma: Vec<GammaRow>,
}

fn run_detect(cfg: &RunConfig) -> CliResult<i32> {
    let map = cfg.map()?;
    let base = cfg.mixing()?;
    let gammas = if cfg.gammas.is_empty() { vec![base.gamma] } else { cfg.gammas.clone() };
    let (report, per) = detect_over_gammas(
        &map,
        base,
        &gammas,
        cfg.restarts,
        cfg.rng_seed,
        &cfg.tolerances,
        cfg.stop_on_success,
    )?;
    log::info!(
        "{} distinct cycles from {} restarts",
        report.diagnostics.distinct_cycles,
        report.diagnostics.restarts
    );
    if let Some(svg) = &cfg.outputs.svg {
        let x0 = restart_seed_point(&map, cfg.rng_seed, 0);
        let attractor = iterate_open(&map, &x0, 5100)
            .map(|mut v| v.split_off(100))
            .unwrap_or_default();
        let cycles: Vec<Vec<Vec<f64>>> = report.cycles.iter().map(|c| c.minimal_points().to_vec()).collect();
        output::write_file(svg, output::orbit_svg(cfg, &attractor, &cycles)?.as_bytes())?;
    }
    let result = DetectResult {
        cycles: report.cycles,
        diagnostics: report.diagnostics,
        per_gamma: per
            .into_iter()
            .map(|(gamma, diagnostics)| GammaRow { gamma, diagnostics })
            .collect(),
    };
    emit_json(cfg, &result)?;
    Ok(EXIT_OK)
}

/// Cycle records in a file: a detect artifact, a single record, a list of
/// records, or a bare list of points.
pub fn read_cycle_file(path: &Path) -> CliResult<Vec<CycleRecord>> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    let v = v.get("result").cloned().unwrap_or(v);
    let v = v.get("cycles").cloned().unwrap_or(v);
    let record = |r: &Value| -> CliResult<CycleRecord> {
        if r.get("points").is_some() {
            let mut with_defaults = json!({"residual": f64::MAX, "minimal_period": 0});
            merge_json(&mut with_defaults, r.clone());
            Ok(serde_json::from_value(with_defaults)?)
        } else {
            let points: Vec<Vec<f64>> = serde_json::from_value(r.clone())?;
            Ok(CycleRecord::new(points))
        }
    };
    let records = match &v {
        Value::Array(items) if items.first().is_some_and(|x| x.is_object()) => {
            items.iter().map(record).collect::<CliResult<Vec<_>>>()?
        }
        _ => vec![record(&v)?],
    };
    if records.iter().any(|r| r.points.is_empty()) {
        return usage(format!("{}: cycle without points", path.display()));
    }
    Ok(records)
}

#[derive(Serialize)]
struct VerifyEntry {
    verified: bool,
    reconvergence_checked: bool,
    record: CycleRecord,
}

fn run_verify(cfg: &RunConfig) -> CliResult<i32> {
    let map = cfg.map()?;
    let opts = cfg
        .verify
        .as_ref()
        .ok_or_else(|| CliError::Usage("verify needs a cycle file".into()))?;
    let tol = &cfg.tolerances;
    let mut entries = Vec::new();
    for rec in read_cycle_file(&opts.cycle_file)? {
        if let Some(p) = rec.points.iter().find(|p| p.len() != map.dim()) {
            return Err(Error::DimensionMismatch { expected: map.dim(), got: p.len() }.into());
        }
        let period = opts.period.unwrap_or(rec.points.len());
        let mut rec = if rec.points.len() == 1 && period > 1 {
            if opts.refine {
                refine_point(&map, &rec.points[0], period, tol.newton_steps)?
            } else {
                let mut pts = iterate_open(&map, &rec.points[0], period)
                    .map_err(|e| CliError::Usage(format!("cannot expand cycle point: {e}")))?;
                pts.truncate(period);
                CycleRecord::new(pts)
            }
        } else {
            rec
        };
        rec.residual = crate::control::cycle_residual(&map, &rec.points);
        if opts.refine && rec.residual < 0.1 {
            match newton_refine(&map, &rec, tol.newton_steps) {
                Ok(r) => rec = r,
                Err(e) => rec.notes.push(format!("refinement failed: {e}")),
            }
        }
        let params = cfg
            .mixing
            .map(|m| MixingParams { t: rec.points.len(), ..m })
            .or(rec.found_with.map(|m| MixingParams { t: rec.points.len(), ..m }));
        let entry = match params {
            Some(p) => {
                let coeffs = MixingCoefficients::generate(p)?;
                let out = verify_cycle(&map, &rec, &coeffs, tol.tol_verify);
                VerifyEntry {
                    verified: out.verified(tol.tol_verify),
                    reconvergence_checked: true,
                    record: out,
                }
            }
            None => {
                let mut out = rec.clone();
                out.residual = crate::control::cycle_residual(&map, &out.points);
                out.minimal_period = crate::control::minimal_period(&out.points, tol.tol_verify * 100.0);
                out.reconverged = false;
                match cycle_multipliers(&map, &out.points) {
                    Ok(mu) => {
                        out.open_loop_unstable = mu.iter().any(|z| z.norm() > 1.0);
                        out.multipliers = mu;
                    }
                    Err(e) => out.notes.push(format!("multipliers unavailable: {e}")),
                }
                out.notes.push("no loop parameters: reconvergence not checked".into());
                VerifyEntry {
                    verified: out.residual < tol.tol_verify,
                    reconvergence_checked: false,
                    record: out,
                }
            }
        };
        entries.push(entry);
    }
    let all = entries.iter().all(|e| e.verified);
    emit_json(cfg, json!({ "verified": all, "cycles": entries }))?;
    Ok(if all { EXIT_OK } else { EXIT_UNVERIFIED })
}

#[derive(Serialize)]
struct RegionResult {
    i_value: Option<f64>,
    j_value: f64,
    mu_star: Option<f64>,
    r: Option<f64>,
    length: crate::stability::RegionLength,
    area: crate::stability::RegionArea,
    typically_real: bool,
    boundary_simple: bool,
    curve_points: usize,
}

fn run_region(cfg: &RunConfig) -> CliResult<i32> {
    let params = cfg.mixing()?;
    let opts = cfg
        .region
        .clone()
        .ok_or_else(|| CliError::Usage("region options missing".into()))?;
    let phi = PhiFunction::from_coefficients(&MixingCoefficients::generate(params)?)?;
    let curve = boundary_curve(&phi, opts.curve_resolution)?;
    let i_value = match i_metric(&phi) {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("I metric unavailable: {e}");
            None
        }
    };
    let j_value = j_metric(&phi);
    let bounds = i_value.and_then(|i| stability_bounds(i, j_value).ok());
    let result = RegionResult {
        i_value,
        j_value,
        mu_star: bounds.map(|b| b.mu_star),
        r: bounds.map(|b| b.r),
        length: region_length(&phi, opts.length_window)?,
        area: region_area(&phi, None, opts.area_pixels, opts.area_pixels)?,
        typically_real: check_typically_real(&phi, 4096),
        boundary_simple: check_boundary_simple(&curve),
        curve_points: curve.len(),
    };
    if let Some(p) = &cfg.outputs.csv {
        output::write_file(p, output::curve_csv(cfg, &curve.t_samples, &curve.points)?.as_bytes())?;
    }
    if let Some(p) = &cfg.outputs.svg {
        output::write_file(p, output::curve_svg(cfg, &curve.points)?.as_bytes())?;
    }
    emit_json(cfg, &result)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct RasterSummary {
    nx: usize,
    ny: usize,
    window: Window,
    min_value: Option<f64>,
    min_pixel: Option<(usize, usize)>,
    min_center: Option<Complex64>,
    stable_pixels: usize,
    failed_pixels: usize,
}

fn run_raster(cfg: &RunConfig) -> CliResult<i32> {
    let params = cfg.mixing()?;
    let opts = cfg
        .raster
        .clone()
        .ok_or_else(|| CliError::Usage("raster options missing".into()))?;
    let phi = PhiFunction::from_coefficients(&MixingCoefficients::generate(params)?)?;
    let raster = margin_raster(&phi, opts.window, opts.nx, opts.ny)?;
    if let Some(p) = &cfg.outputs.csv {
        output::write_file(p, output::raster_csv(cfg, &raster)?.as_bytes())?;
    }
    if let Some(p) = &cfg.outputs.pgm {
        output::write_file(p, &output::raster_pgm(cfg, &raster)?)?;
    }
    if let Some(p) = &cfg.outputs.svg {
        output::write_file(p, output::raster_svg(cfg, &raster)?.as_bytes())?;
    }
    let argmin = raster.argmin();
    let summary = RasterSummary {
        nx: raster.nx,
        ny: raster.ny,
        window: raster.window,
        min_value: argmin.map(|(r, c)| raster.get(r, c)),
        min_pixel: argmin,
        min_center: argmin.map(|(r, c)| raster.pixel_center(r, c)),
        stable_pixels: raster.values.iter().filter(|&&v| v < 1.0).count(),
        failed_pixels: raster.values.iter().filter(|v| v.is_nan()).count(),
    };
    emit_json(cfg, &summary)?;
    Ok(EXIT_OK)
}

fn run_sweep(cfg: &RunConfig) -> CliResult<i32> {
    let base = cfg.mixing()?;
    let sw = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::Usage("sweep options missing".into()))?;
    let map = cfg.map.as_ref().map(|m| m.build()).transpose()?;
    let mut columns = vec!["n", "t", "sigma", "tau", "gamma"];
    if map.is_some() {
        columns.extend(["restarts", "verified", "distinct_cycles", "success"]);
    } else {
        columns.extend(["q_minus_one_direct", "q_minus_one_closed", "i", "j", "mu_star", "r"]);
        if sw.with_length {
            columns.extend(["length", "length_truncated"]);
        }
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut records: Vec<BTreeMap<String, Value>> = Vec::new();
    for &n in &sw.n_values {
        for &sigma in &sw.sigmas {
            for &gamma in &sw.gammas {
                let tau = sw.tau.unwrap_or(sigma);
                let params = MixingParams::exploratory(n, base.t, sigma, tau, gamma)?;
                let mut row = vec![n.to_string(), base.t.to_string(), fmt_f64(sigma), fmt_f64(tau), fmt_f64(gamma)];
                let mut rec: BTreeMap<String, Value> = BTreeMap::new();
                rec.insert("n".into(), json!(n));
                rec.insert("t".into(), json!(base.t));
                rec.insert("sigma".into(), json!(sigma));
                rec.insert("tau".into(), json!(tau));
                rec.insert("gamma".into(), json!(gamma));
                if let Some(map) = &map {
                    let rep = detect_cycles(map, params, cfg.restarts, cfg.rng_seed, &cfg.tolerances)?;
                    let d = &rep.diagnostics;
                    let success = !rep.cycles.is_empty();
                    row.extend([
                        d.restarts.to_string(),
                        d.verified.to_string(),
                        d.distinct_cycles.to_string(),
                        success.to_string(),
                    ]);
                    rec.insert("restarts".into(), json!(d.restarts));
                    rec.insert("verified".into(), json!(d.verified));
                    rec.insert("distinct_cycles".into(), json!(d.distinct_cycles));
                    rec.insert("success".into(), json!(success));
                } else {
                    let coeffs = MixingCoefficients::generate(params)?;
                    let qd = q_minus_one_direct(&coeffs.a);
                    let qc = q_minus_one_closed_form(&params).ok();
                    let phi = PhiFunction::from_coefficients(&coeffs)?;
                    let i = i_metric(&phi).ok();
                    let j = j_metric(&phi);
                    let b = i.and_then(|i| stability_bounds(i, j).ok());
                    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "NA".into());
                    row.extend([
                        fmt_f64(qd),
                        opt(qc),
                        opt(i),
                        fmt_f64(j),
                        opt(b.map(|b| b.mu_star)),
                        opt(b.map(|b| b.r)),
                    ]);
                    rec.insert("q_minus_one_direct".into(), json!(qd));
                    rec.insert("q_minus_one_closed".into(), json!(qc));
                    rec.insert("i".into(), json!(i));
                    rec.insert("j".into(), json!(j));
                    rec.insert("mu_star".into(), json!(b.map(|b| b.mu_star)));
                    rec.insert("r".into(), json!(b.map(|b| b.r)));
                    if sw.with_length {
                        let len = region_length(&phi, DEFAULT_LENGTH_WINDOW)?;
                        row.extend([fmt_f64(len.length), len.truncated.to_string()]);
                        rec.insert("length".into(), json!(len.length));
                        rec.insert("length_truncated".into(), json!(len.truncated));
                    }
                }
                rows.push(row);
                records.push(rec);
            }
        }
    }
    match cfg.outputs.format {
        Format::Csv => {
            let s = output::csv_table(cfg, &columns, &rows)?;
            emit(cfg.outputs.out.as_deref(), s.as_bytes())?;
        }
        Format::Json => emit_json(cfg, &records)?,
    }
    Ok(EXIT_OK)
}

fn run_list_maps(cfg: &RunConfig) -> CliResult<i32> {
    let maps: Vec<Value> = MapKind::ALL
        .iter()
        .map(|k| {
            json!({
                "name": k.name(),
                "dim": k.dim(),
                "params": k.defaults().iter().map(|(n, v)| (n.to_string(), *v)).collect::<BTreeMap<_, _>>(),
                "domain": k.default_domain(),
            })
        })
        .collect();
    match cfg.outputs.format {
        Format::Json => emit_json(cfg, &maps)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = MapKind::ALL
                .iter()
                .map(|k| {
                    let params: Vec<String> = k.defaults().iter().map(|(n, v)| format!("{n}={}", fmt_f64(*v))).collect();
                    vec![k.name().to_string(), k.dim().to_string(), params.join(";")]
                })
                .collect();
            emit(None, output::csv_table(cfg, &["name", "dim", "params"], &rows)?.as_bytes())?;
        }
    }
    Ok(EXIT_OK)
}

/// Runs a configuration and returns the exit code.
pub fn execute(cfg: &RunConfig) -> CliResult<i32> {
    match cfg.subcommand.as_str() {
        "coeffs" => run_coeffs(cfg),
        "detect" => run_detect(cfg),
        "verify" => run_verify(cfg),
        "region" => run_region(cfg),
        "raster" => run_raster(cfg),
        "sweep" => run_sweep(cfg),
        "list-maps" => run_list_maps(cfg),
        other => usage(format!("unknown subcommand '{other}'")),
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("CYCLEKIT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("thread pool: {e}");
            }
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    init_threads();
    let run = || -> CliResult<i32> {
        let mut cfg = config_from_cli(&cli)?;
        if let Some(path) = &cli.config {
            cfg = apply_config_file(cfg, path)?;
        }
        execute(&cfg)
    };
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range_f64("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_range_f64("0.1:0.3:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        assert!(parse_range_f64("1:0:0.1").is_err());
        assert_eq!(parse_range_usize("2:5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_range_usize("10:200:50").unwrap(), vec![10, 60, 110, 160]);
        assert!(parse_range_usize("5:2").is_err());
        assert_eq!(parse_pixels("40x30").unwrap(), (40, 30));
        assert_eq!(parse_pixels("7").unwrap(), (7, 7));
        assert!(parse_pixels("0").is_err());
        assert!(parse_window("1,0,0,1").is_err());
    }

    #[test]
    fn config_merge_overrides_flags() {
        let cli = Cli::try_parse_from(["cyclekit", "coeffs", "-N", "3", "-T", "1"]).unwrap();
        let cfg = config_from_cli(&cli).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"mixing": {"n": 5}}"#).unwrap();
        let merged = apply_config_file(cfg.clone(), &path).unwrap();
        assert_eq!(merged.mixing.unwrap().n, 5);
        assert_eq!(merged.mixing.unwrap().t, 1);
        std::fs::write(&path, r#"{"subcommand": "detect"}"#).unwrap();
        assert_eq!(apply_config_file(cfg, &path).unwrap_err().exit_code(), EXIT_USAGE);
    }

    #[test]
    fn map_overrides() {
        let mp = MapParamArgs {
            mu: Some(3.2),
            ..Default::default()
        };
        assert_eq!(mp.spec("logistic").unwrap().params["mu"], 3.2);
        let bad = MapParamArgs {
            a: Some(1.0),
            ..Default::default()
        };
        assert_eq!(bad.spec("logistic").unwrap_err().exit_code(), EXIT_USAGE);
        assert_eq!(MapParamArgs::default().spec("nope").unwrap_err().exit_code(), EXIT_USAGE);
    }
}
