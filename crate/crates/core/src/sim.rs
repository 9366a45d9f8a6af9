//! Closed-loop receding-horizon simulation of a multi-zone building.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admm::AdmmConfig;
use crate::comfort::{
    fit_pwa_with, pmv_exact, solve_clothing_temperature, ComfortError, ComfortParams, FitOptions, OuterMapKind,
    PmvInputs, PwaComfortModel, Rect,
};
use crate::exec::Executor;
use crate::mpc::{solve, MpcConfig, MpcError, MpcProblem, Schedules, Strategy, ZoneHorizon, KW};
use crate::thermal::{
    condense, step, zone_model, DiscreteZoneModel, DisturbanceSample, InputMode, Orientation, ThermalError, ZoneState,
    ZoneThermalParams,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error(transparent)]
    Comfort(#[from] ComfortError),
    #[error("step {step}: {source}")]
    Solve { step: usize, source: MpcError },
}

fn scenario_err(msg: &str) -> SimError {
    SimError::Scenario(String::from(msg))
}

/// Zones of each floor laid out on a `rows × cols` grid, north up. Floors
/// are stacked and treated as adiabatic to each other.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildingTopology {
    pub floors: usize,
    pub zones_per_floor: usize,
    /// Per zone, per orientation (n, e, w, s): neighbouring zone or outdoors.
    pub adjacency: Vec<[Option<usize>; 4]>,
}

impl BuildingTopology {
    pub fn grid(floors: usize, rows: usize, cols: usize) -> Self {
        let per = rows * cols;
        let mut adjacency = Vec::with_capacity(floors * per);
        for f in 0..floors {
            for r in 0..rows {
                for c in 0..cols {
                    let id = |r: usize, c: usize| f * per + r * cols + c;
                    adjacency.push([
                        (r > 0).then(|| id(r - 1, c)),
                        (c + 1 < cols).then(|| id(r, c + 1)),
                        (c > 0).then(|| id(r, c - 1)),
                        (r + 1 < rows).then(|| id(r + 1, c)),
                    ]);
                }
            }
        }
        Self { floors, zones_per_floor: per, adjacency }
    }

    pub fn zones(&self) -> usize {
        self.adjacency.len()
    }

    /// Every shared wall must be seen from both sides.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.zones() == 0 {
            return Err(scenario_err("building has no zones"));
        }
        if self.zones() != self.floors * self.zones_per_floor {
            return Err(scenario_err("zone count differs from floors × zones per floor"));
        }
        for (i, adj) in self.adjacency.iter().enumerate() {
            for o in Orientation::ALL {
                if let Some(j) = adj[o.index()] {
                    if j >= self.zones() || j == i {
                        return Err(scenario_err("adjacency refers to an invalid zone"));
                    }
                    if self.adjacency[j][o.opposite().index()] != Some(i) {
                        return Err(scenario_err("adjacency is not symmetric"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Building-wide conditions over one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherSample {
    pub outdoor: f64,
    /// Solar gain on each exterior wall orientation (W).
    pub wall_solar: [f64; 4],
    /// Internal gain per zone (W).
    pub internal_gain: f64,
    /// Solar gain through the windows of each zone (W).
    pub zone_solar: f64,
}

/// Diurnal synthetic weather and internal loads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticWeather {
    pub mean_temperature: f64,
    pub amplitude: f64,
    pub peak_hour: f64,
    pub sunrise_hour: f64,
    pub sunset_hour: f64,
    /// Peak solar gain on the south wall; other orientations are phased.
    pub wall_solar_peak: f64,
    pub zone_solar_peak: f64,
    pub zone_area: f64,
    /// Occupants per m².
    pub occupant_density: f64,
    /// Sensible load per occupant (W).
    pub occupant_load: f64,
    /// Lighting load (W/m²).
    pub lighting: f64,
    /// Equipment load (W/m²).
    pub equipment: f64,
}

impl Default for SyntheticWeather {
    fn default() -> Self {
        Self {
            mean_temperature: 28.0,
            amplitude: 5.0,
            peak_hour: 15.0,
            sunrise_hour: 6.0,
            sunset_hour: 18.0,
            wall_solar_peak: 300.0,
            zone_solar_peak: 200.0,
            zone_area: 16.0,
            occupant_density: 1.0 / 12.0,
            occupant_load: 100.0,
            lighting: 0.75,
            equipment: 0.4,
        }
    }
}

impl SyntheticWeather {
    /// Internal gain of one occupied zone.
    pub fn occupied_gain(&self) -> f64 {
        self.zone_area * self.occupant_density * self.occupant_load + self.zone_area * (self.lighting + self.equipment)
    }

    fn half_sine(&self, hour: f64, from: f64, to: f64) -> f64 {
        if hour <= from || hour >= to || to <= from {
            0.0
        } else {
            libm::sin(core::f64::consts::PI * (hour - from) / (to - from))
        }
    }

    pub fn sample(&self, hour: f64, occupied: bool) -> WeatherSample {
        let (rise, set) = (self.sunrise_hour, self.sunset_hour);
        let noon = 0.5 * (rise + set);
        let day = self.half_sine(hour, rise, set);
        let peak = self.wall_solar_peak;
        WeatherSample {
            outdoor: self.mean_temperature
                + self.amplitude * libm::cos(2.0 * core::f64::consts::PI * (hour - self.peak_hour) / 24.0),
            wall_solar: [
                0.3 * peak * day,
                peak * self.half_sine(hour, rise, noon),
                peak * self.half_sine(hour, noon, set),
                peak * day,
            ],
            internal_gain: if occupied { self.occupied_gain() } else { 0.0 },
            zone_solar: self.zone_solar_peak * day,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeatherSource {
    Synthetic(SyntheticWeather),
    /// One sample per step from the simulation start; read beyond the end
    /// wraps back by whole days.
    Table(Vec<WeatherSample>),
}

impl Default for WeatherSource {
    fn default() -> Self {
        WeatherSource::Synthetic(SyntheticWeather::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Summer,
    Winter,
}

impl Season {
    pub fn comfort(self) -> ComfortParams {
        match self {
            Season::Summer => ComfortParams::summer(),
            Season::Winter => ComfortParams::winter(),
        }
    }

    pub fn input_mode(self) -> InputMode {
        match self {
            Season::Summer => InputMode::Cooling,
            Season::Winter => InputMode::Heating,
        }
    }

    pub fn pwa_spec(self) -> PwaSpec {
        match self {
            Season::Summer => PwaSpec { lo: 22.0, hi: 30.0, split: 26.0, outer: OuterMapKind::Published },
            Season::Winter => PwaSpec { lo: 18.0, hi: 26.0, split: 22.0, outer: OuterMapKind::Derived },
        }
    }
}

/// Square fit domain `[lo, hi]²` split at `(split, split)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwaSpec {
    pub lo: f64,
    pub hi: f64,
    pub split: f64,
    pub outer: OuterMapKind,
}

impl PwaSpec {
    pub fn fit(&self, params: &ComfortParams) -> Result<PwaComfortModel, ComfortError> {
        fit_pwa_with(
            params,
            Rect::square(self.lo, self.hi),
            (self.split, self.split),
            self.outer,
            &FitOptions::default(),
            |a, r| solve_clothing_temperature(&PmvInputs::new(a, r), params).map(|s| s.t_cl),
        )
    }
}

/// Multiplicative plant parameter perturbation, uniform in `1 ± magnitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantMismatch {
    pub magnitude: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub floors: usize,
    pub rows: usize,
    pub cols: usize,
    pub season: Season,
    pub zone_params: ZoneThermalParams,
    pub comfort: ComfortParams,
    pub pwa: PwaSpec,
    pub schedules: Schedules,
    pub weather: WeatherSource,
    pub mpc: MpcConfig,
    pub admm: AdmmConfig,
    /// Shared budget per step (W); defaults to `0.8·M·u_max`.
    pub c_max: Option<f64>,
    /// Simulated steps.
    pub duration: usize,
    pub initial_temperature: f64,
    pub plant_mismatch: Option<PlantMismatch>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::building("summer-36", 9, 2, 2)
    }
}

impl Scenario {
    /// Summer defaults on a `floors × rows × cols` building.
    pub fn building(name: &str, floors: usize, rows: usize, cols: usize) -> Self {
        let season = Season::Summer;
        Self {
            name: String::from(name),
            floors,
            rows,
            cols,
            season,
            zone_params: ZoneThermalParams::reference(),
            comfort: season.comfort(),
            pwa: season.pwa_spec(),
            schedules: Schedules::default(),
            weather: WeatherSource::default(),
            mpc: MpcConfig::default(),
            admm: AdmmConfig::default(),
            c_max: None,
            duration: 96,
            initial_temperature: 28.0,
            plant_mismatch: None,
        }
    }

    pub fn topology(&self) -> BuildingTopology {
        BuildingTopology::grid(self.floors, self.rows, self.cols)
    }

    pub fn zones(&self) -> usize {
        self.floors * self.rows * self.cols
    }

    pub fn budget(&self) -> f64 {
        self.c_max.unwrap_or(0.8 * self.zones() as f64 * self.mpc.u_max)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.topology().validate()?;
        self.zone_params.validate()?;
        self.comfort.validate()?;
        self.mpc.validate().map_err(|e| SimError::Solve { step: 0, source: e })?;
        self.admm.validate().map_err(scenario_err)?;
        self.schedules.validate().map_err(|e| SimError::Solve { step: 0, source: e })?;
        if self.duration < self.mpc.horizon {
            return Err(scenario_err("duration must be at least the horizon"));
        }
        if !(self.budget() >= 0.0) {
            return Err(scenario_err("budget must be non-negative"));
        }
        if let WeatherSource::Table(rows) = &self.weather {
            if rows.len() < self.duration {
                return Err(scenario_err("weather table is shorter than the simulation"));
            }
        }
        if let Some(m) = self.plant_mismatch {
            if !(0.0..1.0).contains(&m.magnitude) {
                return Err(scenario_err("plant mismatch must lie in [0, 1)"));
            }
        }
        Ok(())
    }

    pub fn steps_per_day(&self) -> usize {
        libm::round(86_400.0 / self.mpc.dt).max(1.0) as usize
    }

    pub fn weather_at(&self, k: usize) -> WeatherSample {
        match &self.weather {
            WeatherSource::Synthetic(s) => {
                let dt = self.mpc.dt;
                s.sample(Schedules::hour_of(k as f64 * dt), self.schedules.occupied_at_step(k, dt))
            }
            WeatherSource::Table(rows) => {
                let day = self.steps_per_day();
                let mut j = k;
                while j >= rows.len() {
                    j = if j >= day { j - day } else { j % rows.len() };
                }
                rows[j]
            }
        }
    }

    /// Plant parameters per zone, perturbed when a mismatch is configured.
    pub fn plant_params(&self) -> Vec<ZoneThermalParams> {
        let m = self.zones();
        match self.plant_mismatch {
            None => vec![self.zone_params; m],
            Some(mm) => {
                let mut rng = ChaCha8Rng::seed_from_u64(mm.seed);
                (0..m)
                    .map(|_| {
                        let mut f = [1.0; 17];
                        for v in f.iter_mut() {
                            *v = 1.0 + rng.gen_range(-mm.magnitude..=mm.magnitude);
                        }
                        self.zone_params.perturbed(&f)
                    })
                    .collect()
            }
        }
    }
}

impl Scenario {
    /// Per-zone prediction data for a control step taken at step `k` from
    /// `states`. Neighbour air temperatures are frozen over the horizon.
    pub fn zone_horizons<E: Executor>(
        &self,
        topology: &BuildingTopology,
        predictor: &DiscreteZoneModel,
        states: &[ZoneState],
        k: usize,
        exec: &E,
    ) -> Result<Vec<ZoneHorizon>, SimError> {
        let n = self.mpc.horizon;
        let dt = self.mpc.dt;
        let air: Vec<f64> = states.iter().map(|x| x.air()).collect();
        let weather: Vec<WeatherSample> = (0..n).map(|l| self.weather_at(k + l)).collect();
        let (prices, occupied) = self.schedules.horizon(k, n, dt);
        let horizons: Vec<Result<ZoneHorizon, ThermalError>> = exec.map(states.len(), |i| {
            let dists: Vec<DisturbanceSample> =
                weather.iter().map(|w| zone_disturbance(topology, i, w, &air)).collect();
            Ok(ZoneHorizon {
                prediction: condense(predictor, &states[i], &dists)?,
                prices: prices.clone(),
                occupied: occupied.clone(),
            })
        });
        Ok(horizons.into_iter().collect::<Result<_, _>>()?)
    }

    /// Nominal prediction model of every zone.
    pub fn predictor(&self) -> Result<DiscreteZoneModel, SimError> {
        Ok(zone_model(&self.zone_params, self.mpc.dt, self.season.input_mode())?)
    }
}

/// Disturbances of one zone at step `k`, given the neighbour air
/// temperatures to use.
pub fn zone_disturbance(
    topology: &BuildingTopology,
    zone: usize,
    weather: &WeatherSample,
    air: &[f64],
) -> DisturbanceSample {
    let adj = &topology.adjacency[zone];
    let mut neighbor = [None; 4];
    let mut wall_solar = [0.0; 4];
    for o in 0..4 {
        match adj[o] {
            Some(j) => neighbor[o] = Some(air[j]),
            None => wall_solar[o] = weather.wall_solar[o],
        }
    }
    DisturbanceSample {
        outdoor: weather.outdoor,
        neighbor,
        wall_solar,
        internal_gain: weather.internal_gain,
        zone_solar: weather.zone_solar,
    }
}

/// One zone-step of the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneStepRecord {
    pub step: usize,
    pub zone: usize,
    pub state: ZoneState,
    pub input: f64,
    pub pmv_exact: f64,
    pub pmv_pwa: f64,
    pub region: usize,
    pub occupied: bool,
    pub local_cost: f64,
}

/// Building-wide quantities of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub total_input: f64,
    pub budget: f64,
    pub tariff: f64,
    pub energy_cost: f64,
    pub objective: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub degraded: bool,
    pub wall_seconds: f64,
    pub max_sequential_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub scenario: String,
    pub strategy: Strategy,
    pub dt: f64,
    pub zones: Vec<ZoneStepRecord>,
    pub steps: Vec<StepRecord>,
}

/// Five-number summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    /// Linear interpolation between order statistics. `None` when empty.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = libm::floor(pos) as usize;
            let hi = (lo + 1).min(v.len() - 1);
            v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
        };
        Some(Self { min: v[0], q1: q(0.25), median: q(0.5), q3: q(0.75), max: v[v.len() - 1] })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub strategy: Strategy,
    pub zones: usize,
    pub steps: usize,
    /// Mean input power per zone and step (W).
    pub average_power: f64,
    /// Tariff-weighted energy cost (CNY).
    pub total_cost: f64,
    /// Exact PMV over occupied zone-steps.
    pub pmv: Option<Quartiles>,
    /// Largest `Σu − c_max` over applied steps (W); ≤ 0 when feasible.
    pub max_budget_excess: f64,
    pub admm_iterations: usize,
    pub restarts: usize,
    pub degraded_steps: usize,
    pub wall_seconds: f64,
    pub max_sequential_seconds: f64,
}

impl MetricsReport {
    /// Recomputes every metric from a trace.
    pub fn from_trace(trace: &SimulationTrace) -> Self {
        let zones = trace.zones.iter().map(|r| r.zone + 1).max().unwrap_or(0);
        let steps = trace.steps.len();
        let total_input: f64 = trace.zones.iter().map(|r| r.input).sum();
        let samples = trace.zones.len().max(1) as f64;
        let occupied: Vec<f64> = trace.zones.iter().filter(|r| r.occupied).map(|r| r.pmv_exact).collect();
        let mut m = Self {
            scenario: trace.scenario.clone(),
            strategy: trace.strategy,
            zones,
            steps,
            average_power: total_input / samples,
            total_cost: 0.0,
            pmv: Quartiles::of(&occupied),
            max_budget_excess: f64::NEG_INFINITY,
            admm_iterations: 0,
            restarts: 0,
            degraded_steps: 0,
            wall_seconds: 0.0,
            max_sequential_seconds: 0.0,
        };
        for s in &trace.steps {
            m.total_cost += s.energy_cost;
            m.max_budget_excess = m.max_budget_excess.max(s.total_input - s.budget);
            m.admm_iterations += s.iterations;
            m.restarts += s.restarts;
            m.degraded_steps += s.degraded as usize;
            m.wall_seconds += s.wall_seconds;
            m.max_sequential_seconds += s.max_sequential_seconds;
        }
        m
    }
}

/// `λ·Σu·dt` in kWh-priced currency.
pub fn energy_cost(tariff: f64, total_input_w: f64, dt: f64) -> f64 {
    tariff * total_input_w * dt / 3.6e6
}

/// Scales the applied inputs down uniformly when their sum exceeds the
/// budget; a distributed solution is only approximately feasible after a
/// finite number of iterations.
pub fn enforce_budget(inputs: &mut [f64], budget: f64) {
    let mut total: f64 = inputs.iter().sum();
    let mut guard = 0;
    while total > budget && guard < 8 {
        let f = if total > 0.0 { budget / total } else { 0.0 };
        inputs.iter_mut().for_each(|u| *u = (*u * f).max(0.0));
        total = inputs.iter().sum();
        if total > budget {
            inputs.iter_mut().for_each(|u| *u *= 1.0 - 1e-15 * (guard + 1) as f64);
            total = inputs.iter().sum();
        }
        guard += 1;
    }
}

/// Shifted previous solution: drop the applied input and repeat the last.
fn shift_warm_start(prev: &[Vec<f64>], cfg: &MpcConfig) -> Vec<Vec<f64>> {
    prev.iter()
        .map(|u| {
            let mut w: Vec<f64> = u.iter().skip(1).copied().collect();
            let last = u.last().copied().unwrap_or(cfg.u_min).clamp(cfg.u_min, cfg.u_max);
            w.push(last);
            w
        })
        .collect()
}

/// Runs the receding-horizon loop for `scenario.duration` steps.
pub fn run_closed_loop<E: Executor>(
    scenario: &Scenario,
    pwa: &PwaComfortModel,
    strategy: Strategy,
    exec: &E,
) -> Result<(SimulationTrace, MetricsReport), SimError> {
    scenario.validate()?;
    let topo = scenario.topology();
    let m = topo.zones();
    let cfg = &scenario.mpc;
    let n = cfg.horizon;
    let dt = cfg.dt;
    let mode = scenario.season.input_mode();
    let predictor = scenario.predictor()?;
    let plants: Vec<DiscreteZoneModel> = scenario
        .plant_params()
        .iter()
        .map(|p| zone_model(p, dt, mode))
        .collect::<Result<_, _>>()?;
    let budget = scenario.budget();
    let c_max = vec![budget; n];

    let mut states = vec![ZoneState::uniform(scenario.initial_temperature); m];
    let mut warm: Vec<Vec<f64>> = vec![vec![cfg.u_min; n]; m];
    let mut trace = SimulationTrace {
        scenario: scenario.name.clone(),
        strategy,
        dt,
        zones: Vec::with_capacity(m * scenario.duration),
        steps: Vec::with_capacity(scenario.duration),
    };

    for k in 0..scenario.duration {
        let air: Vec<f64> = states.iter().map(|x| x.air()).collect();
        let horizons = scenario.zone_horizons(&topo, &predictor, &states, k, exec)?;
        let problem = MpcProblem { zones: &horizons, pwa, cfg, admm: &scenario.admm, c_max: &c_max };
        let report = solve(strategy, &problem, &warm, exec).map_err(|source| SimError::Solve { step: k, source })?;

        let mut applied: Vec<f64> = report.u.iter().map(|u| u[0]).collect();
        enforce_budget(&mut applied, budget);
        let total_input: f64 = applied.iter().sum();
        let tariff = scenario.schedules.price_for_step(k, dt);
        let occupied_now = scenario.schedules.occupied_at_step(k, dt);

        for i in 0..m {
            let x = &states[i];
            let inputs = PmvInputs::new(x.air(), x.mean_radiant());
            let exact = pmv_exact(&inputs, &scenario.comfort)?;
            let eval = pwa.evaluate(&inputs);
            let comfort = if occupied_now { cfg.alpha * eval.pmv * eval.pmv } else { 0.0 };
            let u_kw = applied[i] / KW;
            trace.zones.push(ZoneStepRecord {
                step: k,
                zone: i,
                state: *x,
                input: applied[i],
                pmv_exact: exact,
                pmv_pwa: eval.pmv,
                region: eval.region,
                occupied: occupied_now,
                local_cost: comfort + tariff * u_kw * u_kw,
            });
        }
        trace.steps.push(StepRecord {
            step: k,
            total_input,
            budget,
            tariff,
            energy_cost: energy_cost(tariff, total_input, dt),
            objective: report.objective,
            iterations: report.admm_iterations + report.central_passes,
            restarts: report.restarts,
            degraded: report.degraded || report.cycled,
            wall_seconds: report.timing.wall_seconds,
            max_sequential_seconds: report.timing.max_sequential_seconds,
        });

        let w_now = scenario.weather_at(k);
        states = (0..m)
            .map(|i| step(&plants[i], &states[i], applied[i], &zone_disturbance(&topo, i, &w_now, &air)))
            .collect();
        warm = shift_warm_start(&report.u, cfg);
    }
    let metrics = MetricsReport::from_trace(&trace);
    Ok((trace, metrics))
}

/// One row of a strategy comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: Strategy,
    pub metrics: MetricsReport,
}

/// Runs every strategy on the same scenario and model.
pub fn compare_strategies<E: Executor>(
    scenario: &Scenario,
    pwa: &PwaComfortModel,
    strategies: &[Strategy],
    exec: &E,
) -> Result<Vec<ComparisonRow>, SimError> {
    if strategies.len() < 2 {
        return Err(scenario_err("comparison needs at least two strategies"));
    }
    strategies
        .iter()
        .map(|&s| run_closed_loop(scenario, pwa, s, exec).map(|(_, metrics)| ComparisonRow { strategy: s, metrics }))
        .collect()
}
