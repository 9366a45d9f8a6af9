//! Per-zone MPC cost assembly and the three solver strategies.
//!
//! Inputs are exchanged in W at the public surface and optimized in kW
//! internally: `C^u = Σ λ(l)·u(l)²` with `u` in kW keeps the energy and
//! comfort terms on comparable scales. The ADMM penalty `ρ` is therefore
//! per kW².
//!
//! Per zone and horizon step `l = 1..N`:
//!
//! ```text
//! PMV~(l) = c_air·t_a(l) + c_rad·t̄_r(l) + c0        (coefficients of the region of step l)
//! J       = α·Σ δ(l)·PMV~(l)² + Σ λ(l)·u(l−1)²
//! ```
//!
//! with `t_a`, `t̄_r` affine in the inputs through the condensed prediction.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admm::{AdmmConfig, AdmmError, AdmmState, IterationLog};
use crate::comfort::{PmvInputs, PwaComfortModel};
use crate::exec::{timed, Executor};
use crate::linalg::{dot, Matrix};
use crate::qp::{solve_box_qp, solve_dense_qp, BoxQp, DenseQp, LinearConstraint, Polyhedron, QpError};
use crate::thermal::{HorizonPrediction, MEAN_RADIANT_WEIGHTS, STATE_DIM};

/// Watts per optimization unit.
pub const KW: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MpcError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("zone {zone}: {source}")]
    Zone { zone: usize, source: QpError },
    #[error("centralized solve failed: {0}")]
    Central(QpError),
}

impl From<AdmmError> for MpcError {
    fn from(e: AdmmError) -> Self {
        MpcError::Zone { zone: e.zone, source: e.source }
    }
}

/// One price band of the daily tariff, `[start_hour, end_hour)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TariffBand {
    pub start_hour: f64,
    pub end_hour: f64,
    /// CNY/kWh.
    pub price: f64,
}

/// Daily tariff and occupancy window; both repeat every 24 h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedules {
    pub tariff: Vec<TariffBand>,
    pub occupancy_start_hour: f64,
    pub occupancy_end_hour: f64,
}

impl Default for Schedules {
    fn default() -> Self {
        let band = |start_hour, end_hour, price| TariffBand { start_hour, end_hour, price };
        Self {
            tariff: vec![
                band(0.0, 8.0, 0.3358),
                band(8.0, 14.0, 0.6629),
                band(14.0, 17.0, 1.0881),
                band(17.0, 19.0, 0.6629),
                band(19.0, 22.0, 1.0881),
                band(22.0, 24.0, 0.6629),
            ],
            occupancy_start_hour: 10.0,
            occupancy_end_hour: 20.0,
        }
    }
}

impl Schedules {
    /// Bands must be contiguous from 0 to 24 h with positive prices.
    pub fn validate(&self) -> Result<(), MpcError> {
        let mut at = 0.0;
        for b in &self.tariff {
            if b.start_hour != at || !(b.end_hour > b.start_hour) {
                return Err(MpcError::Config("tariff bands must tile 0..24 h in order"));
            }
            if !(b.price > 0.0) {
                return Err(MpcError::Config("tariff prices must be positive"));
            }
            at = b.end_hour;
        }
        if at != 24.0 {
            return Err(MpcError::Config("tariff bands must end at 24 h"));
        }
        let window = 0.0..=24.0;
        if !window.contains(&self.occupancy_start_hour) || !window.contains(&self.occupancy_end_hour) {
            return Err(MpcError::Config("occupancy hours must lie in 0..24"));
        }
        Ok(())
    }

    pub fn hour_of(seconds: f64) -> f64 {
        let h = libm::fmod(seconds / 3600.0, 24.0);
        if h < 0.0 {
            h + 24.0
        } else {
            h
        }
    }

    pub fn price_at_hour(&self, hour: f64) -> f64 {
        self.tariff
            .iter()
            .find(|b| hour >= b.start_hour && hour < b.end_hour)
            .or(self.tariff.last())
            .map_or(0.0, |b| b.price)
    }

    /// Occupancy at an instant; a window with start after end wraps midnight.
    pub fn occupied_at_hour(&self, hour: f64) -> bool {
        let (s, e) = (self.occupancy_start_hour, self.occupancy_end_hour);
        if s <= e {
            hour >= s && hour < e
        } else {
            hour >= s || hour < e
        }
    }

    /// Price of the input interval that starts at step `k`.
    pub fn price_for_step(&self, k: usize, dt: f64) -> f64 {
        self.price_at_hour(Self::hour_of(k as f64 * dt))
    }

    /// Occupancy at the instant of step `k`.
    pub fn occupied_at_step(&self, k: usize, dt: f64) -> bool {
        self.occupied_at_hour(Self::hour_of(k as f64 * dt))
    }

    /// Prices of inputs `k … k+N−1` and occupancy of states `k+1 … k+N`.
    pub fn horizon(&self, k: usize, n: usize, dt: f64) -> (Vec<f64>, Vec<bool>) {
        let prices = (0..n).map(|l| self.price_for_step(k + l, dt)).collect();
        let occupied = (0..n).map(|l| self.occupied_at_step(k + l + 1, dt)).collect();
        (prices, occupied)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpcConfig {
    /// Horizon `N` in steps.
    pub horizon: usize,
    /// Comfort weight `α`.
    pub alpha: f64,
    /// Per-zone input bounds (W).
    pub u_min: f64,
    pub u_max: f64,
    /// Step length (s).
    pub dt: f64,
    /// Interior-check margin relative to the region diameter.
    pub interior_eps: f64,
    /// Restarts of the distributed solver per control step.
    pub restart_cap: usize,
    /// Sequential-convex passes of the centralized PWA solver.
    pub max_central_passes: usize,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon: 12,
            alpha: 50.0,
            u_min: 0.0,
            u_max: 2000.0,
            dt: 900.0,
            interior_eps: 1e-6,
            restart_cap: 3,
            max_central_passes: 20,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), MpcError> {
        if self.horizon == 0 {
            return Err(MpcError::Config("horizon must be at least 1"));
        }
        if !(self.alpha >= 0.0) {
            return Err(MpcError::Config("alpha must be non-negative"));
        }
        if !(0.0 <= self.u_min && self.u_min <= self.u_max) {
            return Err(MpcError::Config("need 0 ≤ u_min ≤ u_max"));
        }
        if !(self.dt > 0.0) {
            return Err(MpcError::Config("dt must be positive"));
        }
        Ok(())
    }
}

/// Everything about one zone that is fixed during one control step.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneHorizon {
    pub prediction: HorizonPrediction,
    /// `λ(l)` for input `l`.
    pub prices: Vec<f64>,
    /// `δ(l)` for the state after input `l`.
    pub occupied: Vec<bool>,
}

impl ZoneHorizon {
    pub fn len(&self) -> usize {
        self.prediction.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Air and mean radiant temperature at every step for inputs in kW.
    pub fn comfort_inputs(&self, u_kw: &[f64]) -> Vec<PmvInputs> {
        let u_w: Vec<f64> = u_kw.iter().map(|v| v * KW).collect();
        self.prediction
            .predict(&u_w)
            .iter()
            .map(|x| PmvInputs::new(x.air(), x.mean_radiant()))
            .collect()
    }
}

const AIR_WEIGHTS: [f64; STATE_DIM] = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];

fn radiant_weights() -> [f64; STATE_DIM] {
    let mut w = [0.0; STATE_DIM];
    w[1..5].copy_from_slice(&MEAN_RADIANT_WEIGHTS);
    w
}

/// Regions of every horizon step for inputs in kW, and whether any step
/// left the fit domain.
pub fn detect_regions(horizon: &ZoneHorizon, pwa: &PwaComfortModel, u_kw: &[f64]) -> (Vec<usize>, bool) {
    let mut extrapolated = false;
    let regions = horizon
        .comfort_inputs(u_kw)
        .iter()
        .map(|p| {
            let e = pwa.evaluate(p);
            extrapolated |= e.extrapolated;
            e.region
        })
        .collect();
    (regions, extrapolated)
}

/// Condensed zone problem for fixed regions, in kW.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSubproblem {
    /// `½uᵀHu + gᵀu` plus `constant` is the zone cost; bounds in kW.
    pub qp: BoxQp,
    pub constant: f64,
    pub active_regions: Vec<usize>,
    /// Region rectangles of the occupied steps as rows in u-space (°C).
    pub region_polyhedron: Polyhedron,
    /// Per polyhedron row: interior margin required for the strict check.
    pub row_eps: Vec<f64>,
    /// Per polyhedron row: step and side (0 air-min, 1 air-max, 2 rad-min,
    /// 3 rad-max).
    pub row_origin: Vec<(usize, u8)>,
    /// Per step: `PMV~(l) = a·u + b`.
    pub affine_pmv: Vec<(Vec<f64>, f64)>,
}

impl ZoneSubproblem {
    pub fn cost(&self, u_kw: &[f64]) -> f64 {
        self.qp.objective(u_kw) + self.constant
    }

    /// `min_k (slack_k − eps_k)`; positive iff strictly interior with the
    /// configured margin. `+∞` when no step is occupied.
    pub fn interior_margin(&self, u_kw: &[f64]) -> f64 {
        self.region_polyhedron
            .rows()
            .iter()
            .zip(&self.row_eps)
            .map(|((a, b), eps)| b - dot(a, u_kw) - eps)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds the cost of one zone for the given per-step regions.
pub fn build_with_regions(
    horizon: &ZoneHorizon,
    pwa: &PwaComfortModel,
    regions: &[usize],
    cfg: &MpcConfig,
) -> ZoneSubproblem {
    let n = horizon.len();
    let mut h = Matrix::zeros(n, n);
    let mut g = vec![0.0; n];
    let mut constant = 0.0;
    let mut poly = Polyhedron::new();
    let mut row_eps = Vec::new();
    let mut row_origin = Vec::new();
    let mut affine = Vec::with_capacity(n);
    let rad_w = radiant_weights();

    for l in 0..n {
        let (mut air, air_c) = horizon.prediction.functional(l, &AIR_WEIGHTS);
        let (mut rad, rad_c) = horizon.prediction.functional(l, &rad_w);
        air.iter_mut().for_each(|v| *v *= KW);
        rad.iter_mut().for_each(|v| *v *= KW);
        let c = pwa.pmv_coefficients(regions[l]);
        let a: Vec<f64> = air.iter().zip(&rad).map(|(x, y)| c[0] * x + c[1] * y).collect();
        let b = c[0] * air_c + c[1] * rad_c + c[2];

        if horizon.occupied[l] && cfg.alpha > 0.0 {
            for i in 0..n {
                g[i] += 2.0 * cfg.alpha * b * a[i];
                for j in 0..n {
                    h[(i, j)] += 2.0 * cfg.alpha * a[i] * a[j];
                }
            }
            constant += cfg.alpha * b * b;
        }
        if horizon.occupied[l] {
            let ext = pwa.region_extent(regions[l]);
            let eps = cfg.interior_eps * pwa.regions[regions[l]].bounds.diameter();
            let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<f64>>();
            let sides = [
                (neg(&air), air_c - ext.air_min, 0u8, ext.air_min.is_finite()),
                (air.clone(), ext.air_max - air_c, 1, ext.air_max.is_finite()),
                (neg(&rad), rad_c - ext.radiant_min, 2, ext.radiant_min.is_finite()),
                (rad.clone(), ext.radiant_max - rad_c, 3, ext.radiant_max.is_finite()),
            ];
            for (row, rhs, side, finite) in sides {
                if finite {
                    poly.push(row, rhs);
                    row_eps.push(eps);
                    row_origin.push((l, side));
                }
            }
        }
        affine.push((a, b));
    }
    for l in 0..n {
        h[(l, l)] += 2.0 * horizon.prices[l];
    }
    let lo = vec![cfg.u_min / KW; n];
    let hi = vec![cfg.u_max / KW; n];
    ZoneSubproblem {
        qp: BoxQp { h, g, lo, hi },
        constant,
        active_regions: regions.to_vec(),
        region_polyhedron: poly,
        row_eps,
        row_origin,
        affine_pmv: affine,
    }
}

/// Detects regions under `u_ref` (kW) and builds the zone cost for them.
pub fn build_subproblem(
    horizon: &ZoneHorizon,
    pwa: &PwaComfortModel,
    u_ref_kw: &[f64],
    cfg: &MpcConfig,
) -> (ZoneSubproblem, bool) {
    let (regions, extrapolated) = detect_regions(horizon, pwa, u_ref_kw);
    (build_with_regions(horizon, pwa, &regions, cfg), extrapolated)
}

/// Zone cost with regions detected at `u` itself (the PWA objective).
pub fn zone_objective(horizon: &ZoneHorizon, pwa: &PwaComfortModel, cfg: &MpcConfig, u_kw: &[f64]) -> f64 {
    let mut cost = 0.0;
    for (l, p) in horizon.comfort_inputs(u_kw).iter().enumerate() {
        if horizon.occupied[l] {
            let pmv = pwa.evaluate(p).pmv;
            cost += cfg.alpha * pmv * pmv;
        }
        cost += horizon.prices[l] * u_kw[l] * u_kw[l];
    }
    cost
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    CentralizedLinear,
    CentralizedPwa,
    DistributedPwa,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::CentralizedLinear, Strategy::CentralizedPwa, Strategy::DistributedPwa];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::CentralizedLinear => "centralized-linear",
            Strategy::CentralizedPwa => "centralized-pwa",
            Strategy::DistributedPwa => "distributed-pwa",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown strategy `{0}` (expected centralized-linear, centralized-pwa or distributed-pwa)")]
pub struct UnknownStrategy(pub String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| UnknownStrategy(String::from(s)))
    }
}

/// Wall time of one solve under two conventions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveTiming {
    /// Elapsed time of the solve as executed.
    pub wall_seconds: f64,
    /// Time if zones ran on dedicated hardware: per parallel phase only the
    /// slowest zone counts, plus all coordinator work.
    pub max_sequential_seconds: f64,
}

impl SolveTiming {
    fn add(&mut self, other: SolveTiming) {
        self.wall_seconds += other.wall_seconds;
        self.max_sequential_seconds += other.max_sequential_seconds;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub strategy: Strategy,
    /// Per-zone input sequences (W).
    pub u: Vec<Vec<f64>>,
    /// Total PWA objective with regions detected at `u`.
    pub objective: f64,
    /// Objective under the strategy's own comfort model.
    pub model_objective: f64,
    pub admm_iterations: usize,
    pub restarts: usize,
    /// Occupied-step region changes between consecutive detections.
    pub region_switch_count: usize,
    /// Region changes after the exploration window.
    pub late_region_switches: usize,
    pub central_passes: usize,
    pub active_regions: Vec<Vec<usize>>,
    /// Per zone: `min_k (slack_k − eps_k)` of the region check.
    pub interior_margins: Vec<f64>,
    /// Best iterate returned after exhausting restarts.
    pub degraded: bool,
    /// Region assignment of the centralized loop revisited an earlier one.
    pub cycled: bool,
    /// Some predicted comfort point left the fit domain.
    pub extrapolated: bool,
    pub timing: SolveTiming,
    /// Convergence log; residual and violation in W.
    pub log: Vec<IterationLog>,
}

/// One control step across all zones.
#[derive(Debug, Clone, Copy)]
pub struct MpcProblem<'a> {
    pub zones: &'a [ZoneHorizon],
    pub pwa: &'a PwaComfortModel,
    pub cfg: &'a MpcConfig,
    pub admm: &'a AdmmConfig,
    /// Shared budget per horizon step (W).
    pub c_max: &'a [f64],
}

impl MpcProblem<'_> {
    pub fn validate(&self) -> Result<(), MpcError> {
        self.cfg.validate()?;
        self.admm.validate().map_err(MpcError::Config)?;
        let n = self.cfg.horizon;
        if self.zones.is_empty() {
            return Err(MpcError::Config("no zones"));
        }
        if self.zones.iter().any(|z| z.len() != n || z.prices.len() != n || z.occupied.len() != n) {
            return Err(MpcError::Config("zone horizon length differs from the configured horizon"));
        }
        if self.c_max.len() != n || self.c_max.iter().any(|c| !(*c >= 0.0)) {
            return Err(MpcError::Config("budget must be a non-negative vector over the horizon"));
        }
        Ok(())
    }

    fn c_max_kw(&self) -> Vec<f64> {
        self.c_max.iter().map(|c| c / KW).collect()
    }

    fn clamp_kw(&self, warm: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.cfg.horizon;
        (0..self.zones.len())
            .map(|i| {
                (0..n)
                    .map(|l| {
                        let w = warm.get(i).and_then(|v| v.get(l)).copied().unwrap_or(self.cfg.u_min);
                        w.clamp(self.cfg.u_min, self.cfg.u_max) / KW
                    })
                    .collect()
            })
            .collect()
    }

    /// Total PWA objective of inputs in kW.
    pub fn objective_kw(&self, u: &[Vec<f64>]) -> f64 {
        self.zones.iter().zip(u).map(|(z, ui)| zone_objective(z, self.pwa, self.cfg, ui)).sum()
    }

    /// Total PWA objective of inputs in W.
    pub fn objective(&self, u_w: &[Vec<f64>]) -> f64 {
        self.objective_kw(&to_kw(u_w))
    }
}

fn to_kw(u: &[Vec<f64>]) -> Vec<Vec<f64>> {
    u.iter().map(|v| v.iter().map(|x| x / KW).collect()).collect()
}

fn to_w(u: &[Vec<f64>]) -> Vec<Vec<f64>> {
    u.iter().map(|v| v.iter().map(|x| x * KW).collect()).collect()
}

fn occupied_regions(zone: &ZoneHorizon, regions: &[usize]) -> Vec<usize> {
    regions.iter().zip(&zone.occupied).filter(|(_, o)| **o).map(|(r, _)| *r).collect()
}

fn count_switches(zone: &ZoneHorizon, a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).zip(&zone.occupied).filter(|((x, y), o)| **o && x != y).count()
}

/// Dispatches to the requested strategy. `warm` holds per-zone input
/// sequences in W; missing or out-of-range entries are clamped.
pub fn solve<E: Executor>(
    strategy: Strategy,
    problem: &MpcProblem<'_>,
    warm: &[Vec<f64>],
    exec: &E,
) -> Result<SolveReport, MpcError> {
    match strategy {
        Strategy::CentralizedLinear => solve_centralized_linear(problem, warm, exec),
        Strategy::CentralizedPwa => solve_centralized_pwa(problem, warm, exec),
        Strategy::DistributedPwa => solve_convex_admm(problem, warm, exec),
    }
}

/// Builds all zone subproblems in parallel and reports the slowest zone.
fn build_all<E: Executor>(
    problem: &MpcProblem<'_>,
    regions: &[Vec<usize>],
    exec: &E,
) -> (Vec<ZoneSubproblem>, SolveTiming) {
    let phase = timed(exec, || {
        exec.map(problem.zones.len(), |i| {
            timed(exec, || build_with_regions(&problem.zones[i], problem.pwa, &regions[i], problem.cfg))
        })
    });
    let max_zone = phase.value.iter().map(|t| t.seconds).fold(0.0, f64::max);
    let subs = phase.value.into_iter().map(|t| t.value).collect();
    (subs, SolveTiming { wall_seconds: phase.seconds, max_sequential_seconds: max_zone })
}

fn detect_all<E: Executor>(
    problem: &MpcProblem<'_>,
    u_kw: &[Vec<f64>],
    exec: &E,
) -> (Vec<Vec<usize>>, bool, SolveTiming) {
    let phase = timed(exec, || {
        exec.map(problem.zones.len(), |i| timed(exec, || detect_regions(&problem.zones[i], problem.pwa, &u_kw[i])))
    });
    let max_zone = phase.value.iter().map(|t| t.seconds).fold(0.0, f64::max);
    let mut any_ext = false;
    let regions = phase
        .value
        .into_iter()
        .map(|t| {
            any_ext |= t.value.1;
            t.value.0
        })
        .collect();
    (regions, any_ext, SolveTiming { wall_seconds: phase.seconds, max_sequential_seconds: max_zone })
}

/// Stacked QP over all zones with the budget as explicit rows. When
/// `with_regions` is set, each occupied step is also confined to its region.
pub fn stacked_qp(problem: &MpcProblem<'_>, subs: &[ZoneSubproblem], with_regions: bool) -> (DenseQp, f64) {
    let n = problem.cfg.horizon;
    let m = subs.len();
    let dim = m * n;
    let mut h = Matrix::zeros(dim, dim);
    let mut g = Vec::with_capacity(dim);
    let mut lo = Vec::with_capacity(dim);
    let mut hi = Vec::with_capacity(dim);
    let mut constant = 0.0;
    let mut constraints = Vec::new();
    for (i, s) in subs.iter().enumerate() {
        h.set_block(i * n, i * n, &s.qp.h);
        g.extend_from_slice(&s.qp.g);
        lo.extend_from_slice(&s.qp.lo);
        hi.extend_from_slice(&s.qp.hi);
        constant += s.constant;
        if with_regions {
            for (a, b) in s.region_polyhedron.rows() {
                let terms = a.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, v)| (i * n + k, *v)).collect();
                constraints.push(LinearConstraint { terms, upper: *b });
            }
        }
    }
    for (l, c) in problem.c_max_kw().iter().enumerate() {
        constraints.push(LinearConstraint { terms: (0..m).map(|i| (i * n + l, 1.0)).collect(), upper: *c });
        if lo.iter().any(|v| *v < 0.0) {
            constraints.push(LinearConstraint { terms: (0..m).map(|i| (i * n + l, -1.0)).collect(), upper: 0.0 });
        }
    }
    (DenseQp { h, g, lo, hi, constraints }, constant)
}

fn split(u: &[f64], m: usize, n: usize) -> Vec<Vec<f64>> {
    (0..m).map(|i| u[i * n..(i + 1) * n].to_vec()).collect()
}

fn solve_stacked<E: Executor>(
    problem: &MpcProblem<'_>,
    subs: &[ZoneSubproblem],
    with_regions: bool,
    exec: &E,
) -> Result<(Vec<Vec<f64>>, f64, SolveTiming), MpcError> {
    let t = timed(exec, || {
        let (qp, constant) = stacked_qp(problem, subs, with_regions);
        solve_dense_qp(&qp).map(|s| (s.u, s.objective + constant))
    });
    let (u, obj) = t.value.map_err(MpcError::Central)?;
    let u = split(&u, subs.len(), problem.cfg.horizon);
    Ok((u, obj, SolveTiming { wall_seconds: t.seconds, max_sequential_seconds: t.seconds }))
}

/// Re-solves the problem centrally with regions fixed and confined to
/// their rectangles. Returns inputs (W) and the objective.
pub fn solve_fixed_regions<E: Executor>(
    problem: &MpcProblem<'_>,
    regions: &[Vec<usize>],
    exec: &E,
) -> Result<(Vec<Vec<f64>>, f64), MpcError> {
    problem.validate()?;
    let (subs, _) = build_all(problem, regions, exec);
    let (u, obj, _) = solve_stacked(problem, &subs, true, exec)?;
    Ok((to_w(&u), obj))
}

fn margins(subs: &[ZoneSubproblem], u: &[Vec<f64>]) -> Vec<f64> {
    subs.iter().zip(u).map(|(s, ui)| s.interior_margin(ui)).collect()
}

/// Sequential-convex centralized solver: detect regions, solve one stacked
/// QP, re-detect, until the assignment repeats.
pub fn solve_centralized_pwa<E: Executor>(
    problem: &MpcProblem<'_>,
    warm: &[Vec<f64>],
    exec: &E,
) -> Result<SolveReport, MpcError> {
    problem.validate()?;
    let start = exec.now();
    let mut timing = SolveTiming::default();
    let mut u = problem.clamp_kw(warm);
    let (mut regions, mut extrapolated, t) = detect_all(problem, &u, exec);
    timing.add(t);

    let mut seen: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut best: Option<(f64, Vec<Vec<f64>>, Vec<Vec<usize>>, f64, Vec<ZoneSubproblem>)> = None;
    let mut switches = 0;
    let mut passes = 0;
    let mut cycled = false;
    loop {
        let key: Vec<Vec<usize>> =
            problem.zones.iter().zip(&regions).map(|(z, r)| occupied_regions(z, r)).collect();
        seen.push(key);
        let (subs, t) = build_all(problem, &regions, exec);
        timing.add(t);
        let (next, model_obj, t) = solve_stacked(problem, &subs, false, exec)?;
        timing.add(t);
        passes += 1;
        u = next;
        let objective = problem.objective_kw(&u);
        if best.as_ref().map_or(true, |b| objective < b.0) {
            best = Some((objective, u.clone(), regions.clone(), model_obj, subs.clone()));
        }

        let (new_regions, ext, t) = detect_all(problem, &u, exec);
        timing.add(t);
        extrapolated |= ext;
        let changed: usize =
            problem.zones.iter().zip(regions.iter().zip(&new_regions)).map(|(z, (a, b))| count_switches(z, a, b)).sum();
        switches += changed;
        if changed == 0 {
            let m = margins(&subs, &u);
            return Ok(SolveReport {
                strategy: Strategy::CentralizedPwa,
                objective,
                model_objective: model_obj,
                u: to_w(&u),
                admm_iterations: 0,
                restarts: 0,
                region_switch_count: switches,
                late_region_switches: 0,
                central_passes: passes,
                active_regions: new_regions,
                interior_margins: m,
                degraded: false,
                cycled,
                extrapolated,
                timing: finish(timing, start, exec),
                log: Vec::new(),
            });
        }
        let key: Vec<Vec<usize>> =
            problem.zones.iter().zip(&new_regions).map(|(z, r)| occupied_regions(z, r)).collect();
        if seen.contains(&key) {
            cycled = true;
        }
        regions = new_regions;
        if cycled || passes >= problem.cfg.max_central_passes {
            let (objective, u, _, model_obj, subs) = best.expect("at least one pass ran");
            let (final_regions, _, _) = detect_all(problem, &u, exec);
            return Ok(SolveReport {
                strategy: Strategy::CentralizedPwa,
                objective,
                model_objective: model_obj,
                interior_margins: margins(&subs, &u),
                u: to_w(&u),
                admm_iterations: 0,
                restarts: 0,
                region_switch_count: switches,
                late_region_switches: 0,
                central_passes: passes,
                active_regions: final_regions,
                degraded: !cycled,
                cycled,
                extrapolated,
                timing: finish(timing, start, exec),
                log: Vec::new(),
            });
        }
    }
}

fn finish<E: Executor>(mut timing: SolveTiming, start: f64, exec: &E) -> SolveTiming {
    // Wall time is measured end to end; the sequential figure keeps the sum
    // of its phases.
    timing.wall_seconds = (exec.now() - start).max(0.0);
    timing
}

/// Centralized solver with the single affine comfort model of the region
/// that contains the split point, applied at every step.
pub fn solve_centralized_linear<E: Executor>(
    problem: &MpcProblem<'_>,
    _warm: &[Vec<f64>],
    exec: &E,
) -> Result<SolveReport, MpcError> {
    problem.validate()?;
    let start = exec.now();
    let center = problem.pwa.region_of(problem.pwa.split.0, problem.pwa.split.1);
    let linear = problem.pwa.single_region(center);
    let n = problem.cfg.horizon;
    let regions = vec![vec![center; n]; problem.zones.len()];
    let lin_problem = MpcProblem { pwa: &linear, ..*problem };
    let (subs, mut timing) = build_all(&lin_problem, &regions, exec);
    let (u, model_obj, t) = solve_stacked(&lin_problem, &subs, false, exec)?;
    timing.add(t);
    let (detected, extrapolated, _) = detect_all(problem, &u, exec);
    Ok(SolveReport {
        strategy: Strategy::CentralizedLinear,
        objective: problem.objective_kw(&u),
        model_objective: model_obj,
        interior_margins: vec![f64::INFINITY; u.len()],
        u: to_w(&u),
        admm_iterations: 0,
        restarts: 0,
        region_switch_count: 0,
        late_region_switches: 0,
        central_passes: 1,
        active_regions: detected,
        degraded: false,
        cycled: false,
        extrapolated,
        timing: finish(timing, start, exec),
        log: Vec::new(),
    })
}

/// New starting point for a zone whose solution left its region: moves the
/// comfort point of every offending step toward the centre of the region it
/// crossed into, staying close to the previous solution elsewhere.
fn restart_point(
    zone: &ZoneHorizon,
    pwa: &PwaComfortModel,
    sub: &ZoneSubproblem,
    u_kw: &[f64],
) -> Result<Vec<f64>, QpError> {
    let n = zone.len();
    let mut h = Matrix::identity(n).scale(2e-6);
    let mut g: Vec<f64> = u_kw.iter().map(|v| -2e-6 * v).collect();
    let rad_w = radiant_weights();
    let mut any = false;
    for ((a, b), (&(l, side), eps)) in sub.region_polyhedron.rows().iter().zip(sub.row_origin.iter().zip(&sub.row_eps)) {
        if b - dot(a, u_kw) > *eps {
            continue;
        }
        any = true;
        let current = sub.active_regions[l];
        let across = match side {
            0 | 1 => current ^ 1,
            _ => current ^ 2,
        };
        let (ca, cr) = pwa.regions[across].bounds.center();
        for (weights, target) in [(&AIR_WEIGHTS, ca), (&rad_w, cr)] {
            let (mut coeffs, constant) = zone.prediction.functional(l, weights);
            coeffs.iter_mut().for_each(|v| *v *= KW);
            for i in 0..n {
                g[i] += 2.0 * (constant - target) * coeffs[i];
                for j in 0..n {
                    h[(i, j)] += 2.0 * coeffs[i] * coeffs[j];
                }
            }
        }
    }
    if !any {
        return Ok(u_kw.to_vec());
    }
    let qp = BoxQp { h, g, lo: sub.qp.lo.clone(), hi: sub.qp.hi.clone() };
    solve_box_qp(&qp, u_kw).map(|s| s.u)
}

struct Attempt {
    u: Vec<Vec<f64>>,
    subs: Vec<ZoneSubproblem>,
    objective: f64,
    model_objective: f64,
    margins: Vec<f64>,
}

/// Distributed convex ADMM with region exploration, interior check and
/// restarts.
///
/// For `τ < T_d` the regions of every zone are re-detected from its current
/// iterate and the zone cost rebuilt when they change; afterwards regions
/// are frozen and the iteration runs on a fixed convex problem. The result
/// is accepted when every zone's solution lies strictly inside its regions.
/// Otherwise the offending zones are moved into the neighbouring region and
/// the whole procedure restarts, up to the restart cap; after that the best
/// attempt is returned and flagged as degraded.
pub fn solve_convex_admm<E: Executor>(
    problem: &MpcProblem<'_>,
    warm: &[Vec<f64>],
    exec: &E,
) -> Result<SolveReport, MpcError> {
    problem.validate()?;
    let start = exec.now();
    let cfg = problem.admm;
    let c_max = problem.c_max_kw();
    let tol = cfg.tol / KW;
    let m = problem.zones.len();
    let scheme = cfg.scheme(m);

    let mut timing = SolveTiming::default();
    let mut u0 = problem.clamp_kw(warm);
    let mut log = Vec::new();
    let mut total_iters = 0;
    let mut switches = 0;
    let mut late_switches = 0;
    let mut extrapolated = false;
    let mut restarts = 0;
    let mut best: Option<Attempt> = None;

    loop {
        let (mut regions, ext, t) = detect_all(problem, &u0, exec);
        extrapolated |= ext;
        timing.add(t);
        let (mut subs, t) = build_all(problem, &regions, exec);
        timing.add(t);
        let mut qps: Vec<BoxQp> = subs.iter().map(|s| s.qp.clone()).collect();
        let mut state = AdmmState::new(u0.clone(), &c_max);

        while state.tau < cfg.max_iter {
            let mut changed_now = 0;
            if state.tau > 0 {
                let (fresh, ext, t) = detect_all(problem, &state.u, exec);
                extrapolated |= ext;
                timing.add(t);
                let moved: Vec<usize> = (0..m)
                    .filter(|&i| count_switches(&problem.zones[i], &regions[i], &fresh[i]) > 0)
                    .collect();
                for &i in &moved {
                    changed_now += count_switches(&problem.zones[i], &regions[i], &fresh[i]);
                }
                if state.tau < cfg.exploration_iters {
                    switches += changed_now;
                    if !moved.is_empty() {
                        let rebuild = timed(exec, || {
                            exec.map(moved.len(), |k| {
                                let i = moved[k];
                                timed(exec, || build_with_regions(&problem.zones[i], problem.pwa, &fresh[i], problem.cfg))
                            })
                        });
                        timing.wall_seconds += rebuild.seconds;
                        timing.max_sequential_seconds += rebuild.value.iter().map(|t| t.seconds).fold(0.0, f64::max);
                        for (k, built) in rebuild.value.into_iter().enumerate() {
                            let i = moved[k];
                            qps[i] = built.value.qp.clone();
                            subs[i] = built.value;
                            regions[i] = fresh[i].clone();
                        }
                    }
                } else {
                    late_switches += changed_now;
                    changed_now = 0;
                }
            }
            let (entry, t) = state.iterate(&qps, &c_max, &scheme, exec)?;
            timing.wall_seconds += t.parallel_seconds + t.coordinator_seconds;
            timing.max_sequential_seconds += t.max_zone_seconds + t.coordinator_seconds;
            let constant: f64 = subs.iter().map(|s| s.constant).sum();
            log.push(IterationLog {
                tau: total_iters + entry.tau,
                residual: entry.residual * KW,
                consensus_gap: entry.consensus_gap * KW,
                objective: entry.objective + constant,
                max_violation: entry.max_violation * KW,
            });
            if entry.settled(tol) && changed_now == 0 {
                break;
            }
        }
        total_iters += state.tau;

        let u = state.u;
        let attempt = Attempt {
            objective: problem.objective_kw(&u),
            model_objective: subs.iter().zip(&u).map(|(s, ui)| s.cost(ui)).sum(),
            margins: margins(&subs, &u),
            u,
            subs,
        };
        let interior = attempt.margins.iter().all(|v| *v > 0.0);
        if interior || restarts >= problem.cfg.restart_cap {
            let chosen = match best {
                Some(b) if !interior && b.objective < attempt.objective => b,
                _ => attempt,
            };
            let (final_regions, _, _) = detect_all(problem, &chosen.u, exec);
            return Ok(SolveReport {
                strategy: Strategy::DistributedPwa,
                objective: chosen.objective,
                model_objective: chosen.model_objective,
                interior_margins: chosen.margins,
                u: to_w(&chosen.u),
                admm_iterations: total_iters,
                restarts,
                region_switch_count: switches,
                late_region_switches: late_switches,
                central_passes: 0,
                active_regions: final_regions,
                degraded: !interior,
                cycled: false,
                extrapolated,
                timing: finish(timing, start, exec),
                log,
            });
        }

        restarts += 1;
        let phase = timed(exec, || {
            exec.map(m, |i| {
                timed(exec, || {
                    if attempt.margins[i] > 0.0 {
                        Ok(attempt.u[i].clone())
                    } else {
                        restart_point(&problem.zones[i], problem.pwa, &attempt.subs[i], &attempt.u[i])
                            .map_err(|source| MpcError::Zone { zone: i, source })
                    }
                })
            })
        });
        timing.wall_seconds += phase.seconds;
        timing.max_sequential_seconds += phase.value.iter().map(|t| t.seconds).fold(0.0, f64::max);
        u0 = phase.value.into_iter().map(|t| t.value).collect::<Result<_, _>>()?;
        if best.as_ref().map_or(true, |b| attempt.objective < b.objective) {
            best = Some(attempt);
        }
    }
}
