//! Argument parsing and the four subcommands.

use crate::exec::Parallel;
use crate::formats::{
    default_scenario, load_model, load_scenario, load_trace, model_to_json, summary_to_json, trace_path,
    write_comparison_csv, write_csv_file, write_file, write_plot_csv, write_trace_csv, RunSummary,
};
use crate::{exit, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dmpc_core::comfort::{
    fit_pwa_with, solve_clothing_temperature, FitOptions, OuterMapKind, PmvInputs, PwaComfortModel, Rect,
};
use dmpc_core::mpc::Strategy;
use dmpc_core::sim::{compare_strategies, run_closed_loop, MetricsReport, PlantMismatch, Scenario, Season};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PWA_DMPC_OUT";
const DEFAULT_OUT_DIR: &str = "out";
/// Fit accuracy below which `fit-pwa` fails.
pub const MAX_FIT_MAE: f64 = 0.02;

#[derive(Debug, Parser)]
#[command(name = "dmpc", version, about = "Distributed PWA-based MPC for multi-zone buildings")]
pub struct Cli {
    /// Worker threads for per-zone work; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the piecewise-affine comfort model and write it as JSON.
    FitPwa(FitArgs),
    /// Run one strategy in closed loop and write trace, metrics and plot data.
    Simulate(SimulateArgs),
    /// Run several strategies on the same scenario and tabulate them.
    Compare(CompareArgs),
    /// Recompute metrics and plot data from a trace CSV.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SeasonArg {
    Summer,
    Winter,
}

impl From<SeasonArg> for Season {
    fn from(s: SeasonArg) -> Self {
        match s {
            SeasonArg::Summer => Season::Summer,
            SeasonArg::Winter => Season::Winter,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OuterArg {
    Published,
    Derived,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum, default_value = "summer")]
    pub season: SeasonArg,
    /// Square fit domain `[lo, hi]²` in °C; defaults to the season's.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub domain: Option<Vec<f64>>,
    /// Split temperature; defaults to the season's, or the domain midpoint
    /// when a domain is given.
    #[arg(long)]
    pub split: Option<f64>,
    /// Map from clothing temperature to PMV used outside the fitted part.
    #[arg(long, value_enum)]
    pub outer: Option<OuterArg>,
    /// Output file; defaults to `pwa-<season>.json` in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario TOML; the built-in 36-zone summer scenario when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Fitted model JSON; fitted from the scenario when omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed of the plant parameter perturbation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative plant parameter perturbation, in [0, 1).
    #[arg(long)]
    pub mismatch: Option<f64>,
    /// Override the number of simulated steps.
    #[arg(long)]
    pub duration: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "distributed-pwa")]
    pub strategy: Strategy,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated strategy names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub strategies: Vec<Strategy>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Trace CSV written by `simulate`.
    #[arg(long)]
    pub trace: PathBuf,
    /// Output directory; defaults to the trace's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    match execute(cli, env_out, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, env_out: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Error> {
    let out_dir = |explicit: Option<PathBuf>| {
        explicit.or_else(|| env_out.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    };
    match cli.command {
        Command::FitPwa(args) => {
            let season: Season = args.season.into();
            let path = args.out.clone().unwrap_or_else(|| out_dir(None).join(format!("pwa-{}.json", season_name(season))));
            fit(&args, season, &path, out)
        }
        Command::Simulate(args) => {
            let exec = executor(cli.jobs)?;
            let (scenario, seed) = prepare(&args.run)?;
            let pwa = model_for(&scenario, args.run.model.as_deref())?;
            let dir = out_dir(args.run.out.clone());
            let (trace, metrics) = run_closed_loop(&scenario, &pwa, args.strategy, &exec)?;
            let stem = format!("{}-{}", scenario.name, args.strategy);
            write_csv_file(&trace_path(&dir, &scenario.name, args.strategy), |b| write_trace_csv(b, &trace))?;
            write_csv_file(&dir.join(format!("{stem}-plot.csv")), |b| write_plot_csv(b, &trace))?;
            let summary = RunSummary {
                seed,
                plant_mismatch: scenario.plant_mismatch.map_or(0.0, |m| m.magnitude),
                jobs: exec.threads(),
                metrics,
            };
            write_file(&dir.join(format!("{stem}-metrics.json")), summary_to_json(&summary).as_bytes())?;
            print_summary(out, &summary.metrics, Some(seed)).map_err(stdout_err)?;
            warn_degraded(err, &summary.metrics);
            Ok(exit::OK)
        }
        Command::Compare(args) => {
            let exec = executor(cli.jobs)?;
            let (scenario, seed) = prepare(&args.run)?;
            let pwa = model_for(&scenario, args.run.model.as_deref())?;
            let dir = out_dir(args.run.out.clone());
            let rows = compare_strategies(&scenario, &pwa, &args.strategies, &exec)?;
            let path = dir.join(format!("{}-comparison.csv", scenario.name));
            write_csv_file(&path, |b| write_comparison_csv(b, &rows, seed))?;
            for row in &rows {
                print_summary(out, &row.metrics, Some(seed)).map_err(stdout_err)?;
                writeln!(out).map_err(stdout_err)?;
                warn_degraded(err, &row.metrics);
            }
            writeln!(out, "comparison written to {}", path.display()).map_err(stdout_err)?;
            Ok(exit::OK)
        }
        Command::Report(args) => {
            let trace = load_trace(&args.trace)?;
            let metrics = MetricsReport::from_trace(&trace);
            let dir = args
                .out
                .clone()
                .or_else(|| args.trace.parent().map(Path::to_path_buf))
                .unwrap_or_else(|| PathBuf::from("."));
            let stem = format!("{}-{}", trace.scenario, trace.strategy);
            write_csv_file(&dir.join(format!("{stem}-plot.csv")), |b| write_plot_csv(b, &trace))?;
            let json = serde_json::to_string_pretty(&metrics).expect("metrics serialize") + "\n";
            write_file(&dir.join(format!("{stem}-report.json")), json.as_bytes())?;
            print_summary(out, &metrics, None).map_err(stdout_err)?;
            Ok(exit::OK)
        }
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::Io { path: PathBuf::from("<stdout>"), source: e }
}

fn season_name(s: Season) -> &'static str {
    match s {
        Season::Summer => "summer",
        Season::Winter => "winter",
    }
}

fn executor(jobs: usize) -> Result<Parallel, Error> {
    Parallel::new(jobs).map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Scenario with the command-line overrides applied, and the effective
/// plant seed.
fn prepare(args: &RunArgs) -> Result<(Scenario, u64), Error> {
    let mut scenario = match &args.scenario {
        Some(path) => load_scenario(path)?,
        None => default_scenario(Season::Summer),
    };
    if let Some(d) = args.duration {
        scenario.duration = d;
    }
    let seed = args.seed.or(scenario.plant_mismatch.map(|m| m.seed)).unwrap_or(0);
    if let Some(magnitude) = args.mismatch {
        scenario.plant_mismatch = (magnitude > 0.0).then_some(PlantMismatch { magnitude, seed });
    } else if let Some(m) = scenario.plant_mismatch.as_mut() {
        m.seed = seed;
    }
    scenario.validate()?;
    Ok((scenario, seed))
}

fn model_for(scenario: &Scenario, path: Option<&Path>) -> Result<PwaComfortModel, Error> {
    match path {
        None => Ok(scenario.pwa.fit(&scenario.comfort)?),
        Some(p) => {
            let model = load_model(p)?;
            if model.params != scenario.comfort {
                return Err(Error::Config(format!(
                    "{}: model was fitted for different comfort parameters than the scenario",
                    p.display()
                )));
            }
            Ok(model)
        }
    }
}

fn fit(args: &FitArgs, season: Season, path: &Path, out: &mut dyn Write) -> Result<i32, Error> {
    let spec = season.pwa_spec();
    let (lo, hi) = match args.domain.as_deref() {
        Some([lo, hi]) => (*lo, *hi),
        Some(_) => return Err(Error::Config(String::from("--domain takes two values"))),
        None => (spec.lo, spec.hi),
    };
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config(format!("--domain needs finite lo < hi, got {lo} {hi}")));
    }
    let split = args.split.unwrap_or(if args.domain.is_some() { 0.5 * (lo + hi) } else { spec.split });
    let outer = match args.outer {
        Some(OuterArg::Published) => OuterMapKind::Published,
        Some(OuterArg::Derived) => OuterMapKind::Derived,
        None => spec.outer,
    };
    let params = season.comfort();
    let model = fit_pwa_with(&params, Rect::square(lo, hi), (split, split), outer, &FitOptions::default(), |a, r| {
        solve_clothing_temperature(&PmvInputs::new(a, r), &params).map(|s| s.t_cl)
    })?;
    let r = model.report;
    let w = |out: &mut dyn Write| -> std::io::Result<()> {
        writeln!(out, "season {}, domain [{lo}, {hi}]², split ({split}, {split})", season_name(season))?;
        writeln!(out, "MAE              {:.5}", r.mae)?;
        writeln!(out, "max error        {:.5}", r.max_abs_err)?;
        writeln!(out, "continuity gap   {:.3e} °C", r.continuity_gap)
    };
    w(out).map_err(stdout_err)?;
    // A rejected fit must not replace a good model file.
    if r.mae > MAX_FIT_MAE {
        return Err(Error::Numerical(format!("fit MAE {:.4} exceeds {MAX_FIT_MAE}; nothing written", r.mae)));
    }
    write_file(path, model_to_json(&model).as_bytes())?;
    writeln!(out, "model written to {}", path.display()).map_err(stdout_err)?;
    Ok(exit::OK)
}

fn print_summary(out: &mut dyn Write, m: &MetricsReport, seed: Option<u64>) -> std::io::Result<()> {
    writeln!(out, "scenario {}, strategy {}, {} zones, {} steps", m.scenario, m.strategy, m.zones, m.steps)?;
    if let Some(seed) = seed {
        writeln!(out, "  seed             {seed}")?;
    }
    writeln!(out, "  average power    {:.2} W per zone", m.average_power)?;
    writeln!(out, "  energy cost      {:.4}", m.total_cost)?;
    match m.pmv {
        Some(q) => writeln!(
            out,
            "  occupied PMV     min {:+.3}  q1 {:+.3}  median {:+.3}  q3 {:+.3}  max {:+.3}",
            q.min, q.q1, q.median, q.q3, q.max
        )?,
        None => writeln!(out, "  occupied PMV     no occupied steps")?,
    }
    writeln!(out, "  budget excess    {:.3} W (max over steps)", m.max_budget_excess)?;
    writeln!(out, "  solver           {} iterations, {} restarts, {} degraded steps", m.admm_iterations, m.restarts, m.degraded_steps)?;
    writeln!(out, "  timing           wall {:.3} s, max-sequential {:.3} s", m.wall_seconds, m.max_sequential_seconds)
}

fn warn_degraded(err: &mut dyn Write, m: &MetricsReport) {
    if m.degraded_steps > 0 {
        let _ = writeln!(err, "warning: {} degraded steps with strategy {}", m.degraded_steps, m.strategy);
    }
}
