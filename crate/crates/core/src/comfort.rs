//! Thermal comfort: Fanger's PMV index and a four-region piecewise-affine
//! surrogate over the (air temperature, mean radiant temperature) plane.
//!
//! The surrogate replaces the clothing surface temperature `t_cl`, which is
//! the only implicit quantity in PMV, by an affine function per region. The
//! remaining PMV terms are then a fixed affine map of `(t_a, p_a, t_cl)`, so
//! PMV itself is affine inside each region.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{least_squares, Matrix};

/// 1 clo in m²K/W.
pub const CLO: f64 = 0.155;

const STEFAN_TERM: f64 = 3.96e-8;
const TCL_DAMPING: f64 = 0.5;
const TCL_MAX_ITER: usize = 200;
const TCL_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComfortError {
    #[error("comfort parameter `{name}` out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("clothing temperature did not converge (residual {residual:e} at t_cl = {t_cl})")]
    NoConvergence { t_cl: f64, residual: f64 },
    #[error("split point ({0}, {1}) is not strictly inside the fit domain")]
    SplitOutsideDomain(f64, f64),
    #[error("degenerate fit region {region}: {reason}")]
    DegenerateFit { region: usize, reason: &'static str },
    #[error("cannot derive the outer PMV map: {0}")]
    OuterMap(&'static str),
}

/// Occupant and environment parameters that stay fixed over a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComfortParams {
    /// Metabolic rate `M` (W/m²).
    pub metabolic_rate: f64,
    /// Mechanical work `W` (W/m²).
    pub mechanical_work: f64,
    /// Clothing insulation `I_cl` (m²K/W).
    pub clothing: f64,
    /// Relative air speed (m/s).
    pub air_speed: f64,
    /// Relative humidity as a fraction.
    pub humidity: f64,
}

impl ComfortParams {
    /// Office work in light summer clothing (0.5 clo).
    pub fn summer() -> Self {
        Self {
            metabolic_rate: 60.0,
            mechanical_work: 0.0,
            clothing: 0.5 * CLO,
            air_speed: 0.1,
            humidity: 0.5,
        }
    }

    /// Office work in winter clothing (1 clo).
    pub fn winter() -> Self {
        Self {
            clothing: CLO,
            ..Self::summer()
        }
    }

    pub fn validate(&self) -> Result<(), ComfortError> {
        let bad = |name, value| Err(ComfortError::InvalidParameter { name, value });
        if !(self.metabolic_rate > 0.0) {
            return bad("metabolic_rate", self.metabolic_rate);
        }
        if !(self.mechanical_work >= 0.0) {
            return bad("mechanical_work", self.mechanical_work);
        }
        if !(self.clothing >= 0.0) {
            return bad("clothing", self.clothing);
        }
        if !(self.air_speed > 0.0) {
            return bad("air_speed", self.air_speed);
        }
        if !(0.0..=1.0).contains(&self.humidity) {
            return bad("humidity", self.humidity);
        }
        Ok(())
    }

    #[inline]
    fn net_heat(&self) -> f64 {
        self.metabolic_rate - self.mechanical_work
    }

    /// Leading factor `0.303·exp(−0.036 M) + 0.028`.
    pub fn sensation_coefficient(&self) -> f64 {
        0.303 * libm::exp(-0.036 * self.metabolic_rate) + 0.028
    }
}

impl Default for ComfortParams {
    fn default() -> Self {
        Self::summer()
    }
}

/// Air and mean radiant temperature (°C).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmvInputs {
    pub air: f64,
    pub radiant: f64,
}

impl PmvInputs {
    pub fn new(air: f64, radiant: f64) -> Self {
        Self { air, radiant }
    }
}

pub fn clothing_area_factor(clothing: f64) -> f64 {
    if clothing <= 0.078 {
        1.00 + 1.290 * clothing
    } else {
        1.05 + 0.645 * clothing
    }
}

/// Water vapour pressure term of the PMV balance.
pub fn vapor_pressure(air: f64, humidity: f64) -> f64 {
    humidity * 6.1094 * libm::exp(17.625 * air / (air + 243.04)) * 1e-3
}

#[inline]
pub fn convective_coefficient(t_cl: f64, air: f64, air_speed: f64) -> f64 {
    let natural = 2.38 * libm::pow((t_cl - air).abs(), 0.25);
    let forced = 12.1 * libm::sqrt(air_speed);
    natural.max(forced)
}

/// Converged clothing surface temperature together with the convection
/// coefficient evaluated at it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClothingSolution {
    pub t_cl: f64,
    pub h_c: f64,
    /// `|t_cl − RHS(t_cl)|` of the implicit heat-balance equation.
    pub residual: f64,
    pub iterations: usize,
}

/// Right-hand side of the implicit clothing-temperature equation.
fn clothing_rhs(t_cl: f64, inputs: &PmvInputs, params: &ComfortParams, f_cl: f64) -> f64 {
    let h_c = convective_coefficient(t_cl, inputs.air, params.air_speed);
    let rad = STEFAN_TERM * f_cl * (quartic(t_cl + 273.0) - quartic(inputs.radiant + 273.0));
    let conv = f_cl * h_c * (t_cl - inputs.air);
    35.7 - 0.0275 * params.net_heat() - params.clothing * (rad + conv)
}

#[inline]
fn quartic(x: f64) -> f64 {
    let x2 = x * x;
    x2 * x2
}

/// Solves the clothing heat balance by damped fixed-point iteration and
/// falls back to bisection when the iteration does not settle.
pub fn solve_clothing_temperature(
    inputs: &PmvInputs,
    params: &ComfortParams,
) -> Result<ClothingSolution, ComfortError> {
    params.validate()?;
    let f_cl = clothing_area_factor(params.clothing);
    let skin = 35.7 - 0.0275 * params.net_heat();
    let residual_at = |t: f64| (t - clothing_rhs(t, inputs, params, f_cl)).abs();

    let mut t = 0.5 * (skin + inputs.air);
    let mut iterations = 0;
    while iterations < TCL_MAX_ITER {
        let rhs = clothing_rhs(t, inputs, params, f_cl);
        let next = (1.0 - TCL_DAMPING) * t + TCL_DAMPING * rhs;
        iterations += 1;
        let settled = (next - t).abs() <= 1e-14 * (1.0 + t.abs());
        t = next;
        if settled || !t.is_finite() {
            break;
        }
    }

    if !(t.is_finite() && residual_at(t) < TCL_RESIDUAL_TOL) {
        let (bt, extra) = bisect_clothing(inputs, params, f_cl, skin);
        t = bt;
        iterations += extra;
    }

    let residual = residual_at(t);
    if !(residual < TCL_RESIDUAL_TOL) {
        return Err(ComfortError::NoConvergence { t_cl: t, residual });
    }
    Ok(ClothingSolution {
        t_cl: t,
        h_c: convective_coefficient(t, inputs.air, params.air_speed),
        residual,
        iterations,
    })
}

/// `F(t) = t − RHS(t)` is strictly increasing, so bisection on a bracket
/// around the skin and ambient temperatures always finds the root.
fn bisect_clothing(inputs: &PmvInputs, params: &ComfortParams, f_cl: f64, skin: f64) -> (f64, usize) {
    let f = |t: f64| t - clothing_rhs(t, inputs, params, f_cl);
    let span = 10.0 + (skin - inputs.air).abs() + (skin - inputs.radiant).abs();
    let mut lo = skin.min(inputs.air).min(inputs.radiant) - span;
    let mut hi = skin.max(inputs.air).max(inputs.radiant) + span;
    let mut iterations = 0;
    while f(lo) > 0.0 && iterations < 60 {
        lo -= span;
        iterations += 1;
    }
    while f(hi) < 0.0 && iterations < 120 {
        hi += span;
        iterations += 1;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    (t, iterations)
}

/// Heat-load term `L` given a solved clothing temperature.
fn thermal_load(inputs: &PmvInputs, params: &ComfortParams, sol: &ClothingSolution) -> f64 {
    let m = params.metabolic_rate;
    let mw = params.net_heat();
    let p_a = vapor_pressure(inputs.air, params.humidity);
    let f_cl = clothing_area_factor(params.clothing);
    mw - 3.05 * (5.733 - 0.007 * mw - p_a)
        - 0.42 * (mw - 58.15)
        - 0.0173 * m * (5.867 - p_a)
        - 0.0014 * m * (34.0 - inputs.air)
        - STEFAN_TERM * f_cl * (quartic(sol.t_cl + 273.0) - quartic(inputs.radiant + 273.0))
        - f_cl * sol.h_c * (sol.t_cl - inputs.air)
}

pub fn pmv_exact(inputs: &PmvInputs, params: &ComfortParams) -> Result<f64, ComfortError> {
    let sol = solve_clothing_temperature(inputs, params)?;
    Ok(params.sensation_coefficient() * thermal_load(inputs, params, &sol))
}

/// Axis-aligned rectangle in the (air, radiant) plane. Infinite bounds are
/// allowed for extrapolating regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub air_min: f64,
    pub air_max: f64,
    pub radiant_min: f64,
    pub radiant_max: f64,
}

impl Rect {
    pub fn square(lo: f64, hi: f64) -> Self {
        Self {
            air_min: lo,
            air_max: hi,
            radiant_min: lo,
            radiant_max: hi,
        }
    }

    pub fn contains(&self, air: f64, radiant: f64) -> bool {
        (self.air_min..=self.air_max).contains(&air)
            && (self.radiant_min..=self.radiant_max).contains(&radiant)
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.air_min + self.air_max),
            0.5 * (self.radiant_min + self.radiant_max),
        )
    }

    pub fn diameter(&self) -> f64 {
        libm::hypot(self.air_max - self.air_min, self.radiant_max - self.radiant_min)
    }
}

/// `t̂_cl = a1·t_a + a2·t̄_r + a3` over `bounds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwaRegion {
    pub bounds: Rect,
    pub coeffs: [f64; 3],
}

impl PwaRegion {
    #[inline]
    pub fn clothing_temperature(&self, air: f64, radiant: f64) -> f64 {
        self.coeffs[0] * air + self.coeffs[1] * radiant + self.coeffs[2]
    }
}

/// Affine map from `(t_a, p̂_a, t̂_cl)` to PMV, with `p̂_a` itself linearized
/// in `t_a`:
///
/// ```text
/// p̂_a = Φ·(pa_slope·t_a + pa_intercept)·pa_scale
/// PMV = pa·p̂_a + air·t_a + clothing·t̂_cl + constant
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterMap {
    pub pa: f64,
    pub air: f64,
    pub clothing: f64,
    pub constant: f64,
    pub pa_slope: f64,
    pub pa_intercept: f64,
    pub pa_scale: f64,
    pub humidity: f64,
}

impl OuterMap {
    /// Published coefficients for 1 met office work in light clothing.
    pub fn published(humidity: f64) -> Self {
        Self {
            pa: 0.2551,
            air: 0.0052,
            clothing: 0.8052,
            constant: -25.2883,
            pa_slope: 1.7833,
            pa_intercept: -12.7516,
            pa_scale: 1e-3,
            humidity,
        }
    }

    /// Coefficients obtained by eliminating the radiative and convective
    /// terms of `L` with the clothing heat balance, which makes `L` exactly
    /// affine in `(t_a, p_a, t_cl)`. Needed for clothing levels far from the
    /// one the published map was built for.
    pub fn derived(params: &ComfortParams) -> Result<Self, ComfortError> {
        params.validate()?;
        if params.clothing <= 0.0 {
            return Err(ComfortError::OuterMap("zero clothing fixes t_cl; no affine dependence"));
        }
        let c = params.sensation_coefficient();
        let m = params.metabolic_rate;
        let mw = params.net_heat();
        let i_cl = params.clothing;
        let constant = mw
            - 3.05 * (5.733 - 0.007 * mw)
            - 0.42 * (mw - 58.15)
            - 0.0173 * m * 5.867
            - 0.0014 * m * 34.0
            - (35.7 - 0.0275 * mw) / i_cl;
        Ok(Self {
            pa: c * (3.05 + 0.0173 * m),
            air: c * 0.0014 * m,
            clothing: c / i_cl,
            constant: c * constant,
            ..Self::published(params.humidity)
        })
    }

    #[inline]
    pub fn vapor_pressure(&self, air: f64) -> f64 {
        self.humidity * (self.pa_slope * air + self.pa_intercept) * self.pa_scale
    }

    #[inline]
    pub fn pmv(&self, air: f64, t_cl: f64) -> f64 {
        self.pa * self.vapor_pressure(air) + self.air * air + self.clothing * t_cl + self.constant
    }
}

/// Which outer map a fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterMapKind {
    Published,
    Derived,
}

impl OuterMapKind {
    pub fn build(self, params: &ComfortParams) -> Result<OuterMap, ComfortError> {
        match self {
            OuterMapKind::Published => Ok(OuterMap::published(params.humidity)),
            OuterMapKind::Derived => OuterMap::derived(params),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwaFitReport {
    pub mae: f64,
    pub max_abs_err: f64,
    pub grid_size: usize,
    pub domain: Rect,
    /// Largest mismatch of `t̂_cl` across a shared region edge (°C).
    pub continuity_gap: f64,
}

/// Result of evaluating the surrogate at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwaEvaluation {
    pub pmv: f64,
    pub t_cl: f64,
    pub region: usize,
    /// The point lies outside the fit domain; the nearest region was used.
    pub extrapolated: bool,
}

/// Four-region PWA comfort surrogate.
///
/// Regions are numbered `0` lower-left, `1` lower-right, `2` upper-left,
/// `3` upper-right, with air temperature on the horizontal axis. A point on a
/// dividing line belongs to the lower-numbered side, so the split point
/// itself falls in region 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwaComfortModel {
    pub domain: Rect,
    pub split: (f64, f64),
    pub regions: [PwaRegion; 4],
    pub outer: OuterMap,
    pub params: ComfortParams,
    pub report: PwaFitReport,
}

pub const REGION_COUNT: usize = 4;

impl PwaComfortModel {
    /// Region index of a point; total on the whole plane.
    #[inline]
    pub fn region_of(&self, air: f64, radiant: f64) -> usize {
        let right = air > self.split.0;
        let upper = radiant > self.split.1;
        (right as usize) + 2 * (upper as usize)
    }

    pub fn evaluate(&self, inputs: &PmvInputs) -> PwaEvaluation {
        let region = self.region_of(inputs.air, inputs.radiant);
        let t_cl = self.regions[region].clothing_temperature(inputs.air, inputs.radiant);
        PwaEvaluation {
            pmv: self.outer.pmv(inputs.air, t_cl),
            t_cl,
            region,
            extrapolated: !self.domain.contains(inputs.air, inputs.radiant),
        }
    }

    /// `PMV-hat = c_air·t_a + c_rad·t̄_r + c0` inside `region`.
    pub fn pmv_coefficients(&self, region: usize) -> [f64; 3] {
        let o = &self.outer;
        let a = &self.regions[region].coeffs;
        let pa_gain = o.pa * o.humidity * o.pa_scale;
        [
            o.air + pa_gain * o.pa_slope + o.clothing * a[0],
            o.clothing * a[1],
            o.constant + pa_gain * o.pa_intercept + o.clothing * a[2],
        ]
    }

    /// Membership set of a region as used by the optimizer: the fitted
    /// rectangle, opened to infinity on the sides that lie on the domain
    /// boundary so that extrapolated points still have a home.
    pub fn region_extent(&self, region: usize) -> Rect {
        let b = self.regions[region].bounds;
        let right = region % 2 == 1;
        let upper = region >= 2;
        Rect {
            air_min: if right { b.air_min } else { f64::NEG_INFINITY },
            air_max: if right { f64::INFINITY } else { b.air_max },
            radiant_min: if upper { b.radiant_min } else { f64::NEG_INFINITY },
            radiant_max: if upper { f64::INFINITY } else { b.radiant_max },
        }
    }

    /// Copy of the model that applies `region`'s affine piece everywhere.
    pub fn single_region(&self, region: usize) -> Self {
        let mut m = self.clone();
        for r in m.regions.iter_mut() {
            r.coeffs = self.regions[region].coeffs;
        }
        m
    }
}

/// Sampling and penalty settings of the PWA fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub samples_per_axis: usize,
    pub edge_samples: usize,
    pub continuity_weight: f64,
    /// Smallest admissible side length of a region (°C).
    pub min_region_width: f64,
    pub report_grid: usize,
    pub report_edge_samples: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            samples_per_axis: 25,
            edge_samples: 25,
            continuity_weight: 1e3,
            min_region_width: 0.5,
            report_grid: 20,
            report_edge_samples: 50,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

fn region_rects(domain: &Rect, split: (f64, f64)) -> [Rect; 4] {
    let (sa, sr) = split;
    [
        Rect { air_min: domain.air_min, air_max: sa, radiant_min: domain.radiant_min, radiant_max: sr },
        Rect { air_min: sa, air_max: domain.air_max, radiant_min: domain.radiant_min, radiant_max: sr },
        Rect { air_min: domain.air_min, air_max: sa, radiant_min: sr, radiant_max: domain.radiant_max },
        Rect { air_min: sa, air_max: domain.air_max, radiant_min: sr, radiant_max: domain.radiant_max },
    ]
}

/// Shared edges as `(region a, region b, start point, end point)`.
fn shared_edges(domain: &Rect, split: (f64, f64)) -> [(usize, usize, (f64, f64), (f64, f64)); 4] {
    let (sa, sr) = split;
    [
        (0, 1, (sa, domain.radiant_min), (sa, sr)),
        (2, 3, (sa, sr), (sa, domain.radiant_max)),
        (0, 2, (domain.air_min, sr), (sa, sr)),
        (1, 3, (sa, sr), (domain.air_max, sr)),
    ]
}

fn edge_points(from: (f64, f64), to: (f64, f64), n: usize) -> impl Iterator<Item = (f64, f64)> {
    linspace(0.0, 1.0, n).map(move |s| (from.0 + s * (to.0 - from.0), from.1 + s * (to.1 - from.1)))
}

/// Fits the surrogate to the exact clothing temperature with the published
/// outer map and default options.
pub fn fit_pwa(
    params: &ComfortParams,
    domain: Rect,
    split: (f64, f64),
) -> Result<PwaComfortModel, ComfortError> {
    fit_pwa_with(params, domain, split, OuterMapKind::Published, &FitOptions::default(), |a, r| {
        solve_clothing_temperature(&PmvInputs::new(a, r), params).map(|s| s.t_cl)
    })
}

/// General fit against an arbitrary clothing-temperature target.
///
/// All twelve coefficients are estimated jointly: least squares on a
/// `samples_per_axis²` grid inside each region plus quadratic penalties that
/// pull neighbouring pieces together along the shared edges. Coordinates are
/// centred on the split point to keep the normal matrix well conditioned.
pub fn fit_pwa_with<F>(
    params: &ComfortParams,
    domain: Rect,
    split: (f64, f64),
    outer: OuterMapKind,
    opts: &FitOptions,
    target: F,
) -> Result<PwaComfortModel, ComfortError>
where
    F: Fn(f64, f64) -> Result<f64, ComfortError>,
{
    params.validate()?;
    let (sa, sr) = split;
    let strictly_inside = domain.air_min < sa && sa < domain.air_max && domain.radiant_min < sr && sr < domain.radiant_max;
    if !strictly_inside {
        return Err(ComfortError::SplitOutsideDomain(sa, sr));
    }
    let rects = region_rects(&domain, split);
    for (i, r) in rects.iter().enumerate() {
        if r.air_max - r.air_min < opts.min_region_width || r.radiant_max - r.radiant_min < opts.min_region_width {
            return Err(ComfortError::DegenerateFit {
                region: i,
                reason: "region narrower than the minimum width",
            });
        }
    }
    let outer_map = outer.build(params)?;

    let ns = opts.samples_per_axis;
    let data_rows = 4 * ns * ns;
    let penalty_rows = 4 * opts.edge_samples;
    let mut design = Matrix::zeros(data_rows + penalty_rows, 12);
    let mut rhs = Vec::with_capacity(data_rows + penalty_rows);

    let mut row = 0;
    for (reg, rect) in rects.iter().enumerate() {
        for a in linspace(rect.air_min, rect.air_max, ns) {
            for r in linspace(rect.radiant_min, rect.radiant_max, ns) {
                design[(row, 3 * reg)] = a - sa;
                design[(row, 3 * reg + 1)] = r - sr;
                design[(row, 3 * reg + 2)] = 1.0;
                rhs.push(target(a, r)?);
                row += 1;
            }
        }
    }
    let w = libm::sqrt(opts.continuity_weight);
    for (ra, rb, from, to) in shared_edges(&domain, split) {
        for (a, r) in edge_points(from, to, opts.edge_samples) {
            let x = [a - sa, r - sr, 1.0];
            for k in 0..3 {
                design[(row, 3 * ra + k)] = w * x[k];
                design[(row, 3 * rb + k)] = -w * x[k];
            }
            rhs.push(0.0);
            row += 1;
        }
    }

    let sol = least_squares(&design, &rhs, 1e-10).ok_or(ComfortError::DegenerateFit {
        region: 0,
        reason: "ill-conditioned least-squares system",
    })?;

    let mut regions = [PwaRegion { bounds: rects[0], coeffs: [0.0; 3] }; 4];
    for reg in 0..4 {
        let (a1, a2, c) = (sol[3 * reg], sol[3 * reg + 1], sol[3 * reg + 2]);
        regions[reg] = PwaRegion {
            bounds: rects[reg],
            coeffs: [a1, a2, c - a1 * sa - a2 * sr],
        };
    }

    let mut model = PwaComfortModel {
        domain,
        split,
        regions,
        outer: outer_map,
        params: *params,
        report: PwaFitReport {
            mae: 0.0,
            max_abs_err: 0.0,
            grid_size: 0,
            domain,
            continuity_gap: 0.0,
        },
    };
    model.report = fit_report(&model, opts.report_grid, opts.report_edge_samples)?;
    Ok(model)
}

/// Accuracy of a model against exact PMV on an `n × n` grid over its domain,
/// plus the continuity gap sampled at `edge_samples` points per shared edge.
pub fn fit_report(model: &PwaComfortModel, n: usize, edge_samples: usize) -> Result<PwaFitReport, ComfortError> {
    let d = model.domain;
    let mut sum = 0.0;
    let mut max_err: f64 = 0.0;
    for a in linspace(d.air_min, d.air_max, n) {
        for r in linspace(d.radiant_min, d.radiant_max, n) {
            let inputs = PmvInputs::new(a, r);
            let exact = pmv_exact(&inputs, &model.params)?;
            let err = (exact - model.evaluate(&inputs).pmv).abs();
            sum += err;
            max_err = max_err.max(err);
        }
    }
    Ok(PwaFitReport {
        mae: sum / (n * n) as f64,
        max_abs_err: max_err,
        grid_size: n * n,
        domain: d,
        continuity_gap: continuity_gap(model, edge_samples),
    })
}

pub fn continuity_gap(model: &PwaComfortModel, edge_samples: usize) -> f64 {
    let mut gap: f64 = 0.0;
    for (ra, rb, from, to) in shared_edges(&model.domain, model.split) {
        for (a, r) in edge_points(from, to, edge_samples) {
            let ta = model.regions[ra].clothing_temperature(a, r);
            let tb = model.regions[rb].clothing_temperature(a, r);
            gap = gap.max((ta - tb).abs());
        }
    }
    gap
}

/// Bound `2·N·p̄·ε_max` on the gap between exact and surrogate comfort cost
/// over a horizon of `horizon` steps, when both PMV values stay within
/// `±p_bar` and the surrogate error within `±eps_max`.
pub fn comfort_gap_bound(horizon: usize, p_bar: f64, eps_max: f64) -> f64 {
    debug_assert!(p_bar >= 0.0 && eps_max >= 0.0);
    2.0 * horizon as f64 * p_bar * eps_max
}
