//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::bench39;
use crate::config::{load_scenario, write_scenario};
use crate::error::LfcError;
use crate::metrics::{compare_controllers, integral_indices, transient_metrics, IndexReport, DEFAULT_SETTLING_BAND};
use crate::output::{
    audit_text, comparison_csv, comparison_text, index_table_csv, index_table_text, monitor_text, trace_csv,
    write_atomic,
};
use crate::plant::idx;
use crate::plot::{area_plot, load_bands};
use crate::sim::{reaching_monitor, residual_uncertainty, run_scenario, ControllerKind, ScenarioConfig, SimTrace};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "lfc", version, about = "Multi-area load-frequency control simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write its trace, plots and indices.
    Run(RunArgs),
    /// Run two controllers on the same scenario and compare their indices.
    Compare(CompareArgs),
    /// Compare formula-built matrices with the published benchmark matrices.
    Audit(AuditArgs),
    /// Run a grid of gain values and rank them by an index.
    Sweep(SweepArgs),
    /// Write a scenario as an editable config file.
    ExportConfig(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Built-in scenario name.
    #[arg(long, default_value = "bench39", conflicts_with = "config")]
    pub scenario: String,
    /// Scenario config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise standard deviation (pu); 0 disables noise.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Remove every scheduled disturbance and the noise.
    #[arg(long)]
    pub no_disturbance: bool,
    /// Sample the controller every this many seconds and hold μ in between.
    #[arg(long)]
    pub controller_period: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "LFC_OUTPUT_DIR", default_value = "lfc-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// gitsmc, pi or none; defaults to the scenario's own choice.
    #[arg(long)]
    pub controller: Option<String>,
    #[command(flatten)]
    pub out: OutArgs,
    /// Skip the SVG plots.
    #[arg(long)]
    pub no_plots: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Controller under test.
    #[arg(long, default_value = "gitsmc")]
    pub test: String,
    /// Baseline controller.
    #[arg(long, default_value = "pi")]
    pub baseline: String,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long)]
    pub no_plots: bool,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Restrict to one area (1-based).
    #[arg(long)]
    pub area: Option<usize>,
    /// Relative tolerance (0.005 = 0.5 %).
    #[arg(long, default_value_t = 0.005)]
    pub rel_tol: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub controller: Option<String>,
    /// `key=v1,v2,...`; keys: eta1, eta2, lambda, lambda1, lambda2, alpha, boundary_eps, kp, ki.
    #[arg(long = "grid", required = true)]
    pub grid: Vec<String>,
    /// Index to rank by (itae, itse, ise, iae).
    #[arg(long, default_value = "itse")]
    pub rank_by: String,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, default_value = "bench39")]
    pub scenario: String,
    /// Destination file; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<LfcError> for CliError {
    fn from(e: LfcError) -> Self {
        let code = match e {
            LfcError::Diverged { .. } | LfcError::NonFiniteDerivative { .. } => EXIT_DIVERGED,
            LfcError::Io(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn builtin(name: &str) -> CliResult<ScenarioConfig> {
    match name {
        "bench39" => Ok(bench39::builtin_benchmark()),
        other => Err(CliError::config(format!("unknown scenario '{other}' (available: bench39)"))),
    }
}

/// Resolves the scenario source and applies the overrides.
pub fn resolve_scenario(args: &ScenarioArgs) -> CliResult<ScenarioConfig> {
    let mut c = match &args.config {
        Some(path) => load_scenario(path)?,
        None => builtin(&args.scenario)?,
    };
    if let Some(dt) = args.dt {
        c.dt = dt;
    }
    if let Some(h) = args.horizon {
        c = c.with_horizon(h);
    }
    if let Some(seed) = args.seed {
        c.schedule.noise_seed = seed;
    }
    if let Some(noise) = args.noise {
        c.schedule.noise_std = noise;
    }
    if args.controller_period.is_some() {
        c.controller_period = args.controller_period;
    }
    if args.no_disturbance {
        c = c.without_disturbances();
    }
    c.validate()?;
    Ok(c)
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError {
        code: EXIT_IO,
        message: format!("cannot create output directory {}: {e}", dir.display()),
    })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    write_atomic(path, text.as_bytes()).map_err(|e| CliError {
        code: EXIT_IO,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn write_plots(dir: &Path, config: &ScenarioConfig, traces: &[(&str, &SimTrace)], prefix: &str) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    for area in 0..config.areas.len() {
        for (state, stem) in [(idx::FREQ, "df"), (idx::TIE, "tie")] {
            let plot = area_plot(traces, area, state, load_bands(&config.schedule, area));
            let path = dir.join(format!("{prefix}{stem}_area{}.svg", area + 1));
            write(&path, &plot.render())?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Files produced by `run`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub trace: PathBuf,
    pub plots: Vec<PathBuf>,
    pub indices_text: PathBuf,
    pub indices_csv: PathBuf,
    pub monitor: PathBuf,
    pub indices: IndexReport,
}

pub fn cmd_run(args: &RunArgs, log: &mut String) -> CliResult<RunArtifacts> {
    let mut config = resolve_scenario(&args.scenario)?;
    if let Some(c) = &args.controller {
        config.controller = ControllerKind::parse(c)?;
        config.validate()?;
    }
    let dir = &args.out.out;
    prepare_dir(dir)?;
    let trace = run_scenario(&config)?;
    let indices = integral_indices(&trace)?;
    let label = config.controller.name();

    let trace_path = dir.join("trace.csv");
    write(&trace_path, &trace_csv(&trace))?;
    let plots = if args.no_plots {
        Vec::new()
    } else {
        write_plots(dir, &config, &[(label, &trace)], "")?
    };
    let table = index_table_text(&[(label, indices)]);
    let indices_text = dir.join("indices.txt");
    let indices_csv = dir.join("indices.csv");
    write(&indices_text, &table)?;
    write(&indices_csv, &index_table_csv(&[(label, indices)]))?;

    let model = config.model()?;
    let reach = reaching_monitor(&trace, config.monitor.reach_delta, config.monitor.exclusion_window);
    let unc = residual_uncertainty(&trace, &model, &config.zetas())?;
    let transients = transient_metrics(&trace, &trace.events, DEFAULT_SETTLING_BAND)?;
    let monitor = dir.join("monitor.txt");
    let report = monitor_text(&reach, &unc, &transients);
    write(&monitor, &report)?;

    let _ = writeln!(
        log,
        "{}: {} controller, {} samples, dt {} s -> {}",
        config.name,
        label,
        trace.len(),
        config.dt,
        dir.display()
    );
    log.push_str(&table);
    log.push_str(&report);
    Ok(RunArtifacts {
        trace: trace_path,
        plots,
        indices_text,
        indices_csv,
        monitor,
        indices,
    })
}

pub fn cmd_compare(args: &CompareArgs, log: &mut String) -> CliResult<crate::metrics::ComparisonReport> {
    let base = resolve_scenario(&args.scenario)?;
    let mut test_cfg = base.clone();
    test_cfg.controller = ControllerKind::parse(&args.test)?;
    let mut base_cfg = base;
    base_cfg.controller = ControllerKind::parse(&args.baseline)?;
    test_cfg.validate()?;
    base_cfg.validate()?;
    let dir = &args.out.out;
    prepare_dir(dir)?;

    let (test_run, base_run) = rayon::join(|| run_scenario(&test_cfg), || run_scenario(&base_cfg));
    let (tn, bn) = (test_cfg.controller.name(), base_cfg.controller.name());
    let labelled = |r: crate::Result<SimTrace>, who: &str| {
        r.map_err(|e| {
            let mut err = CliError::from(e);
            err.message = format!("{who} run: {}", err.message);
            err
        })
    };
    let test_trace = labelled(test_run, &format!("test ({tn})"))?;
    let base_trace = labelled(base_run, &format!("baseline ({bn})"))?;

    let ti = integral_indices(&test_trace)?;
    let bi = integral_indices(&base_trace)?;
    let report = compare_controllers(&ti, &bi);
    let (tl, bl) = (format!("test:{tn}"), format!("baseline:{bn}"));
    write(&dir.join("comparison.csv"), &comparison_csv(&report))?;
    write(&dir.join("indices.csv"), &index_table_csv(&[(&tl, ti), (&bl, bi)]))?;
    if !args.no_plots {
        write_plots(dir, &test_cfg, &[(&tl, &test_trace), (&bl, &base_trace)], "compare_")?;
    }
    log.push_str(&comparison_text(&report, &tl, &bl));
    Ok(report)
}

pub fn cmd_audit(args: &AuditArgs, log: &mut String) -> CliResult<bench39::AuditReport> {
    let report = bench39::audit_benchmark(args.rel_tol, args.area)?;
    log.push_str(&audit_text(&report));
    Ok(report)
}

/// Applies one grid value to every area.
pub fn apply_gain(config: &mut ScenarioConfig, key: &str, value: f64) -> CliResult<()> {
    for a in &mut config.areas {
        match key {
            "eta1" => a.gitsmc.eta1 = value,
            "eta2" => a.gitsmc.eta2 = value,
            "lambda" => {
                a.gitsmc.lambda1 = value;
                a.gitsmc.lambda2 = value;
            }
            "lambda1" => a.gitsmc.lambda1 = value,
            "lambda2" => a.gitsmc.lambda2 = value,
            "alpha" => a.gitsmc.alpha = value,
            "boundary_eps" => a.gitsmc.boundary_eps = value,
            "kp" => a.pi.kp = value,
            "ki" => a.pi.ki = value,
            other => return Err(CliError::config(format!("unknown sweep key '{other}'"))),
        }
    }
    Ok(())
}

pub fn parse_grid(specs: &[String]) -> CliResult<Vec<(String, Vec<f64>)>> {
    specs
        .iter()
        .map(|s| {
            let (k, vs) = s
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("grid '{s}' is not key=v1,v2,...")))?;
            let values = vs
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| CliError::config(format!("grid '{s}': '{v}' is not a number")))
                })
                .collect::<CliResult<Vec<f64>>>()?;
            Ok((k.trim().to_string(), values))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: Vec<(String, f64)>,
    /// `Err` holds the failure message of a diverged point.
    pub result: std::result::Result<IndexReport, String>,
}

pub fn cmd_sweep(args: &SweepArgs, log: &mut String) -> CliResult<Vec<SweepRow>> {
    let mut base = resolve_scenario(&args.scenario)?;
    if let Some(c) = &args.controller {
        base.controller = ControllerKind::parse(c)?;
    }
    if IndexReport::default().get(&args.rank_by).is_none() {
        return Err(CliError::config(format!("unknown index '{}'", args.rank_by)));
    }
    let grid = parse_grid(&args.grid)?;
    let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for (key, values) in &grid {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((key.clone(), *v));
                    q
                })
            })
            .collect();
    }
    let configs = points
        .iter()
        .map(|p| {
            let mut c = base.clone();
            for (k, v) in p {
                apply_gain(&mut c, k, *v)?;
            }
            c.validate().map_err(|e| {
                let mut err = CliError::from(e);
                err.message = format!("grid point {}: {}", describe(p), err.message);
                err
            })?;
            Ok(c)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let dir = &args.out.out;
    prepare_dir(dir)?;

    let mut rows: Vec<SweepRow> = points
        .into_par_iter()
        .zip(configs.par_iter())
        .map(|(point, c)| SweepRow {
            point,
            result: run_scenario(c)
                .and_then(|t| integral_indices(&t))
                .map_err(|e| e.to_string()),
        })
        .collect();
    let key = |r: &SweepRow| r.result.as_ref().ok().and_then(|i| i.get(&args.rank_by)).unwrap_or(f64::INFINITY);
    rows.sort_by(|a, b| key(a).total_cmp(&key(b)));

    let mut csv = String::new();
    for (k, _) in &grid {
        let _ = write!(csv, "{k},");
    }
    csv.push_str("status,ITAE,ITSE,ISE,IAE\n");
    for r in &rows {
        for (_, v) in &r.point {
            let _ = write!(csv, "{v},");
        }
        match &r.result {
            Ok(i) => {
                let v = i.values();
                let _ = writeln!(csv, "ok,{},{},{},{}", v[0], v[1], v[2], v[3]);
            }
            Err(_) => csv.push_str("failed,,,,\n"),
        }
    }
    write(&dir.join("sweep.csv"), &csv)?;
    let _ = writeln!(log, "{} grid points ranked by {}:", rows.len(), args.rank_by.to_ascii_uppercase());
    for (n, r) in rows.iter().enumerate() {
        match &r.result {
            Ok(i) => {
                let _ = writeln!(log, "{:>3}. {}  {}", n + 1, describe(&r.point), format_indices(i));
            }
            Err(e) => {
                let _ = writeln!(log, "{:>3}. {}  failed: {e}", n + 1, describe(&r.point));
            }
        }
    }
    Ok(rows)
}

fn describe(point: &[(String, f64)]) -> String {
    point.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

fn format_indices(i: &IndexReport) -> String {
    IndexReport::NAMES
        .iter()
        .zip(i.values())
        .map(|(n, v)| format!("{n} {v:.6e}"))
        .collect::<Vec<_>>()
        .join("  ")
}

pub fn cmd_export(args: &ExportArgs, log: &mut String) -> CliResult<()> {
    let text = write_scenario(&builtin(&args.scenario)?);
    match &args.out {
        Some(path) => {
            write(path, &text)?;
            let _ = writeln!(log, "wrote {}", path.display());
        }
        None => log.push_str(&text),
    }
    Ok(())
}

/// Runs a parsed command, returning what should go to stdout.
pub fn execute(cli: &Cli) -> CliResult<String> {
    let mut log = String::new();
    match &cli.command {
        Command::Run(a) => cmd_run(a, &mut log).map(|_| ()),
        Command::Compare(a) => cmd_compare(a, &mut log).map(|_| ()),
        Command::Audit(a) => cmd_audit(a, &mut log).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(a, &mut log).map(|_| ()),
        Command::ExportConfig(a) => cmd_export(a, &mut log),
    }?;
    Ok(log)
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid(&["eta1=1,2,4".into(), "kp = 0.5".into()]).unwrap();
        assert_eq!(g[0], ("eta1".to_string(), vec![1.0, 2.0, 4.0]));
        assert_eq!(g[1].1, vec![0.5]);
        assert!(parse_grid(&["eta1".into()]).is_err());
        assert!(parse_grid(&["eta1=a".into()]).is_err());
    }

    #[test]
    fn error_codes() {
        let d = LfcError::Diverged {
            time: 1.0,
            area: 1,
            index: 0,
            value: 2e3,
        };
        assert_eq!(CliError::from(d).code, EXIT_DIVERGED);
        assert_eq!(CliError::from(LfcError::config("x")).code, EXIT_CONFIG);
        let io = std::io::Error::other("x");
        assert_eq!(CliError::from(LfcError::Io(io)).code, EXIT_IO);
        assert_eq!(builtin("nope").unwrap_err().code, EXIT_CONFIG);
    }
}
