//! File formats: scenario TOML, weather CSV, model JSON, trace and plot
//! CSVs, metrics JSON and the strategy comparison CSV.

use crate::Error;
use dmpc_core::comfort::PwaComfortModel;
use dmpc_core::mpc::Strategy;
use dmpc_core::sim::{
    ComparisonRow, MetricsReport, Scenario, Season, SimulationTrace, StepRecord, WeatherSample, WeatherSource,
    ZoneStepRecord,
};
use dmpc_core::thermal::{ZoneState, STATE_DIM};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

fn parse_err(path: &Path, message: impl ToString) -> Error {
    Error::Parse { path: path.to_path_buf(), message: message.to_string() }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

// ---------------------------------------------------------------- scenario

/// Top-level keys that are absent from the defaults but may be set.
const OPTIONAL_KEYS: [&str; 2] = ["c_max", "plant_mismatch"];

/// Key naming a weather CSV, resolved relative to the scenario file.
const WEATHER_CSV_KEY: &str = "weather_csv";

/// Defaults for a season: comfort parameters and fit domain follow it.
pub fn default_scenario(season: Season) -> Scenario {
    Scenario { season, comfort: season.comfort(), pwa: season.pwa_spec(), ..Scenario::default() }
}

/// Reads a scenario file. Every key is optional; omitted keys take the
/// defaults of the file's season.
pub fn load_scenario(path: &Path) -> Result<Scenario, Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scenario(&text, base, path)
}

/// Parses scenario TOML; `base` resolves a relative `weather_csv`. The name
/// defaults to the file stem of `origin`.
pub fn parse_scenario(text: &str, base: &Path, origin: &Path) -> Result<Scenario, Error> {
    let mut user: toml::Table = text.parse().map_err(|e| parse_err(origin, e))?;
    let season = match user.get("season") {
        None => Season::Summer,
        Some(v) => v.clone().try_into().map_err(|e| parse_err(origin, format!("season: {e}")))?,
    };
    let weather_csv = match user.remove(WEATHER_CSV_KEY) {
        None => None,
        Some(toml::Value::String(p)) => Some(base.join(p)),
        Some(_) => return Err(parse_err(origin, "weather_csv must be a path string")),
    };
    if weather_csv.is_some() && user.contains_key("weather") {
        return Err(parse_err(origin, "give either weather_csv or a weather table, not both"));
    }

    let mut defaults = default_scenario(season);
    if let Some(stem) = origin.file_stem().and_then(|s| s.to_str()) {
        defaults.name = stem.to_string();
    }
    let mut merged = match toml::Value::try_from(&defaults).map_err(|e| parse_err(origin, e))? {
        toml::Value::Table(t) => t,
        _ => unreachable!("a struct serializes to a table"),
    };
    merge(&mut merged, user, "").map_err(|e| parse_err(origin, e))?;
    let mut scenario: Scenario = toml::Value::Table(merged).try_into().map_err(|e| parse_err(origin, e))?;
    if let Some(csv_path) = weather_csv {
        scenario.weather = WeatherSource::Table(load_weather_csv(&csv_path, scenario.mpc.dt)?);
    }
    Ok(scenario)
}

fn merge(into: &mut toml::Table, from: toml::Table, prefix: &str) -> Result<(), String> {
    for (key, value) in from {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match (into.get_mut(&key), value) {
            (Some(toml::Value::Table(dst)), toml::Value::Table(src)) => {
                // Externally tagged enums switch variant wholesale.
                let same_variant = path != "weather" || src.keys().all(|k| dst.contains_key(k));
                if same_variant {
                    merge(dst, src, &path)?;
                } else {
                    *dst = src;
                }
            }
            (Some(dst), value) => *dst = value,
            (None, value) if prefix.is_empty() && OPTIONAL_KEYS.contains(&key.as_str()) => {
                into.insert(key, value);
            }
            (None, _) => return Err(format!("unknown key `{path}`")),
        }
    }
    Ok(())
}

/// The complete scenario as TOML, every default spelled out.
pub fn scenario_to_toml(scenario: &Scenario) -> Result<String, Error> {
    toml::to_string(scenario).map_err(|e| parse_err(Path::new("<scenario>"), e))
}

// ----------------------------------------------------------------- weather

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct WeatherRow {
    /// Seconds since the simulation start.
    timestamp: f64,
    #[serde(rename = "T_out")]
    outdoor: f64,
    #[serde(rename = "Q_solar_wall_n")]
    solar_n: f64,
    #[serde(rename = "Q_solar_wall_e")]
    solar_e: f64,
    #[serde(rename = "Q_solar_wall_w")]
    solar_w: f64,
    #[serde(rename = "Q_solar_wall_s")]
    solar_s: f64,
    #[serde(rename = "Q_internal")]
    internal: f64,
    #[serde(rename = "Q_solar_zone")]
    zone_solar: f64,
}

/// Reads one weather sample per step. Timestamps must advance by `dt`
/// from zero.
pub fn read_weather_csv<R: Read>(reader: R, dt: f64, origin: &Path) -> Result<Vec<WeatherSample>, Error> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (k, row) in rdr.deserialize::<WeatherRow>().enumerate() {
        let row = row.map_err(|e| parse_err(origin, e))?;
        let expected = k as f64 * dt;
        if (row.timestamp - expected).abs() > 1e-6 * dt.max(1.0) {
            return Err(parse_err(origin, format!("row {k}: timestamp {} but expected {expected}", row.timestamp)));
        }
        out.push(WeatherSample {
            outdoor: row.outdoor,
            wall_solar: [row.solar_n, row.solar_e, row.solar_w, row.solar_s],
            internal_gain: row.internal,
            zone_solar: row.zone_solar,
        });
    }
    if out.is_empty() {
        return Err(parse_err(origin, "weather table has no rows"));
    }
    Ok(out)
}

pub fn load_weather_csv(path: &Path, dt: f64) -> Result<Vec<WeatherSample>, Error> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    read_weather_csv(file, dt, path)
}

pub fn write_weather_csv<W: Write>(writer: W, samples: &[WeatherSample], dt: f64) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for (k, s) in samples.iter().enumerate() {
        w.serialize(WeatherRow {
            timestamp: k as f64 * dt,
            outdoor: s.outdoor,
            solar_n: s.wall_solar[0],
            solar_e: s.wall_solar[1],
            solar_w: s.wall_solar[2],
            solar_s: s.wall_solar[3],
            internal: s.internal_gain,
            zone_solar: s.zone_solar,
        })?;
    }
    w.flush()?;
    Ok(())
}

// ------------------------------------------------------------------- model

pub fn model_to_json(model: &PwaComfortModel) -> String {
    let mut s = serde_json::to_string_pretty(model).expect("model serializes");
    s.push('\n');
    s
}

pub fn load_model(path: &Path) -> Result<PwaComfortModel, Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e))
}

// ------------------------------------------------------------------- trace

/// One zone-step. Timing is left out so traces are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TraceRow {
    scenario: String,
    strategy: Strategy,
    dt_s: f64,
    step: usize,
    zone: usize,
    t_air: f64,
    t_inner_n: f64,
    t_inner_e: f64,
    t_inner_w: f64,
    t_inner_s: f64,
    t_outer_n: f64,
    t_outer_e: f64,
    t_outer_w: f64,
    t_outer_s: f64,
    input_w: f64,
    pmv_exact: f64,
    pmv_pwa: f64,
    region: usize,
    occupied: bool,
    local_cost: f64,
    total_input_w: f64,
    budget_w: f64,
    tariff: f64,
    energy_cost: f64,
    objective: f64,
    iterations: usize,
    restarts: usize,
    degraded: bool,
}

pub fn write_trace_csv<W: Write>(writer: W, trace: &SimulationTrace) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for z in &trace.zones {
        let s = &trace.steps[z.step];
        let x = z.state.0;
        w.serialize(TraceRow {
            scenario: trace.scenario.clone(),
            strategy: trace.strategy,
            dt_s: trace.dt,
            step: z.step,
            zone: z.zone,
            t_air: x[0],
            t_inner_n: x[1],
            t_inner_e: x[2],
            t_inner_w: x[3],
            t_inner_s: x[4],
            t_outer_n: x[5],
            t_outer_e: x[6],
            t_outer_w: x[7],
            t_outer_s: x[8],
            input_w: z.input,
            pmv_exact: z.pmv_exact,
            pmv_pwa: z.pmv_pwa,
            region: z.region,
            occupied: z.occupied,
            local_cost: z.local_cost,
            total_input_w: s.total_input,
            budget_w: s.budget,
            tariff: s.tariff,
            energy_cost: s.energy_cost,
            objective: s.objective,
            iterations: s.iterations,
            restarts: s.restarts,
            degraded: s.degraded,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace back; step timing is not stored and comes back as zero.
pub fn read_trace_csv<R: Read>(reader: R, origin: &Path) -> Result<SimulationTrace, Error> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut trace: Option<SimulationTrace> = None;
    for row in rdr.deserialize::<TraceRow>() {
        let r = row.map_err(|e| parse_err(origin, e))?;
        let t = trace.get_or_insert_with(|| SimulationTrace {
            scenario: r.scenario.clone(),
            strategy: r.strategy,
            dt: r.dt_s,
            zones: Vec::new(),
            steps: Vec::new(),
        });
        if r.step == t.steps.len() {
            t.steps.push(StepRecord {
                step: r.step,
                total_input: r.total_input_w,
                budget: r.budget_w,
                tariff: r.tariff,
                energy_cost: r.energy_cost,
                objective: r.objective,
                iterations: r.iterations,
                restarts: r.restarts,
                degraded: r.degraded,
                wall_seconds: 0.0,
                max_sequential_seconds: 0.0,
            });
        } else if r.step + 1 != t.steps.len() {
            return Err(parse_err(origin, format!("step {} out of order", r.step)));
        }
        let mut state = [0.0; STATE_DIM];
        state.copy_from_slice(&[
            r.t_air,
            r.t_inner_n,
            r.t_inner_e,
            r.t_inner_w,
            r.t_inner_s,
            r.t_outer_n,
            r.t_outer_e,
            r.t_outer_w,
            r.t_outer_s,
        ]);
        t.zones.push(ZoneStepRecord {
            step: r.step,
            zone: r.zone,
            state: ZoneState(state),
            input: r.input_w,
            pmv_exact: r.pmv_exact,
            pmv_pwa: r.pmv_pwa,
            region: r.region,
            occupied: r.occupied,
            local_cost: r.local_cost,
        });
    }
    trace.ok_or_else(|| parse_err(origin, "trace has no rows"))
}

pub fn load_trace(path: &Path) -> Result<SimulationTrace, Error> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    read_trace_csv(file, path)
}

// -------------------------------------------------------------------- plot

#[derive(Serialize)]
struct PlotRow {
    time_h: f64,
    zone: usize,
    t_air: f64,
    pmv: f64,
    input_w: f64,
}

/// Long format: one row per zone and step, exact PMV.
pub fn write_plot_csv<W: Write>(writer: W, trace: &SimulationTrace) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for z in &trace.zones {
        w.serialize(PlotRow {
            time_h: z.step as f64 * trace.dt / 3600.0,
            zone: z.zone,
            t_air: z.state.air(),
            pmv: z.pmv_exact,
            input_w: z.input,
        })?;
    }
    w.flush()?;
    Ok(())
}

// ----------------------------------------------------------------- metrics

/// Metrics plus the settings needed to reproduce the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub plant_mismatch: f64,
    pub jobs: usize,
    pub metrics: MetricsReport,
}

pub fn summary_to_json(summary: &RunSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ComparisonCsvRow {
    strategy: Strategy,
    average_power_w: f64,
    total_cost: f64,
    pmv_min: Option<f64>,
    pmv_q1: Option<f64>,
    pmv_median: Option<f64>,
    pmv_q3: Option<f64>,
    pmv_max: Option<f64>,
    max_budget_excess_w: f64,
    wall_seconds: f64,
    max_sequential_seconds: f64,
    admm_iterations: usize,
    restarts: usize,
    degraded_steps: usize,
    seed: u64,
}

pub fn write_comparison_csv<W: Write>(writer: W, rows: &[ComparisonRow], seed: u64) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        let m = &r.metrics;
        let q = m.pmv;
        w.serialize(ComparisonCsvRow {
            strategy: r.strategy,
            average_power_w: m.average_power,
            total_cost: m.total_cost,
            pmv_min: q.map(|q| q.min),
            pmv_q1: q.map(|q| q.q1),
            pmv_median: q.map(|q| q.median),
            pmv_q3: q.map(|q| q.q3),
            pmv_max: q.map(|q| q.max),
            max_budget_excess_w: m.max_budget_excess,
            wall_seconds: m.wall_seconds,
            max_sequential_seconds: m.max_sequential_seconds,
            admm_iterations: m.admm_iterations,
            restarts: m.restarts,
            degraded_steps: m.degraded_steps,
            seed,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Writes bytes to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

/// Renders into memory with a CSV writer callback, then writes the file.
pub fn write_csv_file<F>(path: &Path, render: F) -> Result<(), Error>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>,
{
    let mut buf = Vec::new();
    render(&mut buf).map_err(|e| parse_err(path, e))?;
    write_file(path, &buf)
}

pub fn trace_path(dir: &Path, scenario: &str, strategy: Strategy) -> PathBuf {
    dir.join(format!("{scenario}-{strategy}-trace.csv"))
}
