//! Lumped RC thermal model of a single zone.
//!
//! Each zone has an air node and four walls (north, east, west, south); every
//! wall carries an inner-surface node and an outer-surface node, giving the
//! nine-element state `[T_z, T_wi(n,e,w,s), T_wo(n,e,w,s)]`. The outer
//! surface of a wall sees either the outdoor air or the air of the adjacent
//! zone, which is how thermal coupling between zones enters the model.
//!
//! The continuous model `ẋ = Ā x + B̄ u + E w` is discretized with an exact
//! zero-order hold, where `w` is the disturbance vector built from a
//! [`DisturbanceSample`].

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{expm, Matrix};

pub const STATE_DIM: usize = 9;

/// Length of the disturbance vector: four boundary temperatures, four wall
/// solar gains, internal gains and solar gains into the zone.
pub const DISTURBANCE_DIM: usize = 10;

/// Equal weights of the four inner wall surfaces in the mean radiant temperature.
pub const MEAN_RADIANT_WEIGHTS: [f64; 4] = [0.25; 4];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermalError {
    #[error("parameter `{name}` must be strictly positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("time step must be positive, got {0} s")]
    NonPositiveStep(f64),
    #[error("expected {expected} disturbance samples, got {got}")]
    HorizonMismatch { expected: usize, got: usize },
    #[error("prediction horizon must contain at least one step")]
    EmptyHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    North,
    East,
    West,
    South,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::North,
        Orientation::East,
        Orientation::West,
        Orientation::South,
    ];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Orientation::North => 0,
            Orientation::East => 1,
            Orientation::West => 2,
            Orientation::South => 3,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Orientation::North => Orientation::South,
            Orientation::East => Orientation::West,
            Orientation::West => Orientation::East,
            Orientation::South => Orientation::North,
        }
    }
}

/// Resistances (K/W) and capacities (J/K) of one zone, walls indexed by
/// [`Orientation::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneThermalParams {
    /// Zone air heat capacity.
    pub zone_capacity: f64,
    pub wall_capacity: [f64; 4],
    /// Convection resistance at the inner wall surface.
    pub r_inner: [f64; 4],
    /// Conduction resistance through the wall.
    pub r_wall: [f64; 4],
    /// Convection resistance at the outer wall surface.
    pub r_outer: [f64; 4],
}

impl ZoneThermalParams {
    /// Reference zone used throughout the case study.
    pub fn reference() -> Self {
        // n, e, w, s
        Self {
            zone_capacity: 4.8e4,
            wall_capacity: [8.5e5, 1.1e6, 1.1e6, 8.5e5],
            r_inner: [0.0310, 0.0232, 0.0232, 0.0310],
            r_wall: [0.0238, 0.0179, 0.0179, 0.0238],
            r_outer: [0.0116, 0.0087, 0.0087, 0.0116],
        }
    }

    pub fn validate(&self) -> Result<(), ThermalError> {
        let check = |name: &'static str, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ThermalError::NonPositiveParameter { name, value })
            }
        };
        check("zone_capacity", self.zone_capacity)?;
        for o in 0..4 {
            check("wall_capacity", self.wall_capacity[o])?;
            check("r_inner", self.r_inner[o])?;
            check("r_wall", self.r_wall[o])?;
            check("r_outer", self.r_outer[o])?;
        }
        Ok(())
    }

    /// Multiplies every parameter by the matching factor; `factors` is laid
    /// out as `[C_z, C_w(4), R_in(4), R_wall(4), R_out(4)]`.
    pub fn perturbed(&self, factors: &[f64; 17]) -> Self {
        let mut p = *self;
        p.zone_capacity *= factors[0];
        for o in 0..4 {
            p.wall_capacity[o] *= factors[1 + o];
            p.r_inner[o] *= factors[5 + o];
            p.r_wall[o] *= factors[9 + o];
            p.r_outer[o] *= factors[13 + o];
        }
        p
    }

    /// Mirror image across the north–south axis (east and west swapped).
    pub fn mirrored_east_west(&self) -> Self {
        let swap = |a: [f64; 4]| [a[0], a[2], a[1], a[3]];
        Self {
            zone_capacity: self.zone_capacity,
            wall_capacity: swap(self.wall_capacity),
            r_inner: swap(self.r_inner),
            r_wall: swap(self.r_wall),
            r_outer: swap(self.r_outer),
        }
    }
}

impl Default for ZoneThermalParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Zone state `[T_z, T_wi(n,e,w,s), T_wo(n,e,w,s)]` in °C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneState(pub [f64; STATE_DIM]);

impl ZoneState {
    pub fn uniform(t: f64) -> Self {
        Self([t; STATE_DIM])
    }

    #[inline]
    pub fn air(&self) -> f64 {
        self.0[0]
    }

    #[inline]
    pub fn inner_wall(&self, o: Orientation) -> f64 {
        self.0[1 + o.index()]
    }

    #[inline]
    pub fn outer_wall(&self, o: Orientation) -> f64 {
        self.0[5 + o.index()]
    }

    /// Area-weighted mean of the inner wall surface temperatures.
    pub fn mean_radiant(&self) -> f64 {
        Orientation::ALL
            .iter()
            .map(|o| MEAN_RADIANT_WEIGHTS[o.index()] * self.inner_wall(*o))
            .sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn from_slice(x: &[f64]) -> Self {
        let mut s = [0.0; STATE_DIM];
        s.copy_from_slice(x);
        Self(s)
    }
}

/// Exogenous inputs acting on one zone over one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSample {
    /// Outdoor air temperature (°C).
    pub outdoor: f64,
    /// Air temperature of the adjacent zone behind each wall; `None` means the
    /// wall faces outdoors.
    pub neighbor: [Option<f64>; 4],
    /// Solar gain absorbed at each outer wall surface (W).
    pub wall_solar: [f64; 4],
    /// Internal gains from occupants, lighting and equipment (W).
    pub internal_gain: f64,
    /// Solar gain entering the zone air (W).
    pub zone_solar: f64,
}

impl DisturbanceSample {
    /// All boundaries at `t`, no heat sources.
    pub fn isothermal(t: f64) -> Self {
        Self {
            outdoor: t,
            neighbor: [None; 4],
            wall_solar: [0.0; 4],
            internal_gain: 0.0,
            zone_solar: 0.0,
        }
    }

    /// Temperature seen by the outer surface of wall `o`.
    #[inline]
    pub fn boundary_temperature(&self, o: Orientation) -> f64 {
        self.neighbor[o.index()].unwrap_or(self.outdoor)
    }

    pub fn to_vector(&self) -> [f64; DISTURBANCE_DIM] {
        let mut w = [0.0; DISTURBANCE_DIM];
        for o in Orientation::ALL {
            w[o.index()] = self.boundary_temperature(o);
            w[4 + o.index()] = self.wall_solar[o.index()];
        }
        w[8] = self.internal_gain;
        w[9] = self.zone_solar;
        w
    }

    pub fn mirrored_east_west(&self) -> Self {
        let swap_opt = |a: [Option<f64>; 4]| [a[0], a[2], a[1], a[3]];
        let swap = |a: [f64; 4]| [a[0], a[2], a[1], a[3]];
        Self {
            neighbor: swap_opt(self.neighbor),
            wall_solar: swap(self.wall_solar),
            ..*self
        }
    }
}

/// `ẋ = Ā x + B̄ u + E w`
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousZoneModel {
    pub a: Matrix,
    pub b: [f64; STATE_DIM],
    pub e: Matrix,
}

impl ContinuousZoneModel {
    pub fn derivative(&self, x: &ZoneState, u: f64, dist: &DisturbanceSample) -> [f64; STATE_DIM] {
        let ax = self.a.mul_vec(x.as_slice());
        let ew = self.e.mul_vec(&dist.to_vector());
        let mut dx = [0.0; STATE_DIM];
        for i in 0..STATE_DIM {
            dx[i] = ax[i] + self.b[i] * u + ew[i];
        }
        dx
    }
}

pub fn build_continuous(params: &ZoneThermalParams) -> Result<ContinuousZoneModel, ThermalError> {
    params.validate()?;
    let mut a = Matrix::zeros(STATE_DIM, STATE_DIM);
    let mut e = Matrix::zeros(STATE_DIM, DISTURBANCE_DIM);
    let mut b = [0.0; STATE_DIM];

    let cz = params.zone_capacity;
    b[0] = 1.0 / cz;
    e[(0, 8)] = 1.0 / cz;
    e[(0, 9)] = 1.0 / cz;

    for o in 0..4 {
        let (wi, wo) = (1 + o, 5 + o);
        let cw = params.wall_capacity[o];
        let g_in = 1.0 / params.r_inner[o];
        let g_wall = 1.0 / params.r_wall[o];
        let g_out = 1.0 / params.r_outer[o];

        // air node
        a[(0, wi)] = g_in / cz;
        a[(0, 0)] -= g_in / cz;

        // inner surface
        a[(wi, 0)] = g_in / cw;
        a[(wi, wo)] = g_wall / cw;
        a[(wi, wi)] = -(g_in + g_wall) / cw;

        // outer surface
        a[(wo, wi)] = g_wall / cw;
        a[(wo, wo)] = -(g_out + g_wall) / cw;
        e[(wo, o)] = g_out / cw;
        e[(wo, 4 + o)] = 1.0 / cw;
    }
    Ok(ContinuousZoneModel { a, b, e })
}

/// Whether the decision variable heats (`+1`) or cools (`-1`) the zone air.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputMode {
    Heating,
    Cooling,
}

impl InputMode {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            InputMode::Heating => 1.0,
            InputMode::Cooling => -1.0,
        }
    }
}

/// `x(k+1) = A x(k) + B·sign·u(k) + E_d w(k)`
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteZoneModel {
    pub a: Matrix,
    pub b: [f64; STATE_DIM],
    /// Maps the disturbance vector held over one step to its state increment.
    pub e: Matrix,
    pub dt: f64,
    pub input_mode: InputMode,
}

impl DiscreteZoneModel {
    /// Affine term `d(k)` of one step for the given disturbances.
    pub fn offset(&self, dist: &DisturbanceSample) -> [f64; STATE_DIM] {
        let d = self.e.mul_vec(&dist.to_vector());
        let mut out = [0.0; STATE_DIM];
        out.copy_from_slice(&d);
        out
    }

    /// Input column with the heating/cooling sign folded in.
    pub fn signed_input(&self) -> [f64; STATE_DIM] {
        let s = self.input_mode.sign();
        let mut b = self.b;
        b.iter_mut().for_each(|v| *v *= s);
        b
    }
}

/// Exact zero-order-hold discretization: the augmented generator
/// `[[Ā, B̄, E], [0, 0, 0]]·dt` is exponentiated once and the integrated input
/// and disturbance maps are read off its top-right blocks.
pub fn discretize(
    cont: &ContinuousZoneModel,
    dt: f64,
    input_mode: InputMode,
) -> Result<DiscreteZoneModel, ThermalError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ThermalError::NonPositiveStep(dt));
    }
    let n = STATE_DIM;
    let dim = n + 1 + DISTURBANCE_DIM;
    let mut gen = Matrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            gen[(i, j)] = cont.a[(i, j)] * dt;
        }
        gen[(i, n)] = cont.b[i] * dt;
        for j in 0..DISTURBANCE_DIM {
            gen[(i, n + 1 + j)] = cont.e[(i, j)] * dt;
        }
    }
    let full = expm(&gen);
    let a = full.block(0, 0, n, n);
    let mut b = [0.0; STATE_DIM];
    for (i, bi) in b.iter_mut().enumerate() {
        *bi = full[(i, n)];
    }
    let e = full.block(0, n + 1, n, DISTURBANCE_DIM);
    Ok(DiscreteZoneModel {
        a,
        b,
        e,
        dt,
        input_mode,
    })
}

/// Builds and discretizes in one go.
pub fn zone_model(
    params: &ZoneThermalParams,
    dt: f64,
    input_mode: InputMode,
) -> Result<DiscreteZoneModel, ThermalError> {
    discretize(&build_continuous(params)?, dt, input_mode)
}

/// Advances one step with input power `u` (W).
pub fn step(model: &DiscreteZoneModel, x: &ZoneState, u: f64, dist: &DisturbanceSample) -> ZoneState {
    let ax = model.a.mul_vec(x.as_slice());
    let d = model.offset(dist);
    let s = model.input_mode.sign();
    let mut next = [0.0; STATE_DIM];
    for i in 0..STATE_DIM {
        next[i] = ax[i] + model.b[i] * s * u + d[i];
    }
    ZoneState(next)
}

/// States over a horizon as an affine map of the input sequence:
/// `X = Φ x0 + Γ u + offset`, with `X` stacking `x(1) … x(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonPrediction {
    pub phi: Matrix,
    pub gamma: Matrix,
    pub offset: Vec<f64>,
    /// `Φ x0 + offset`, the response to a zero input sequence.
    pub free_response: Vec<f64>,
    pub horizon: usize,
}

impl HorizonPrediction {
    /// Row of the stacked prediction holding state component `component` at
    /// horizon step `l` (0-based, so `l = 0` is `x(1)`).
    #[inline]
    pub fn row_index(l: usize, component: usize) -> usize {
        l * STATE_DIM + component
    }

    pub fn predict(&self, u: &[f64]) -> Vec<ZoneState> {
        assert_eq!(u.len(), self.horizon, "input sequence length");
        let gu = self.gamma.mul_vec(u);
        (0..self.horizon)
            .map(|l| {
                let mut s = [0.0; STATE_DIM];
                for (c, v) in s.iter_mut().enumerate() {
                    let r = Self::row_index(l, c);
                    *v = self.free_response[r] + gu[r];
                }
                ZoneState(s)
            })
            .collect()
    }

    /// Affine map `u ↦ coeffs·u + constant` of a linear functional of the
    /// state at step `l`, given as weights over the state components.
    pub fn functional(&self, l: usize, weights: &[f64; STATE_DIM]) -> (Vec<f64>, f64) {
        let mut coeffs = vec![0.0; self.horizon];
        let mut constant = 0.0;
        for (c, w) in weights.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let r = Self::row_index(l, c);
            crate::linalg::axpy(*w, self.gamma.row(r), &mut coeffs);
            constant += w * self.free_response[r];
        }
        (coeffs, constant)
    }
}

/// Condenses the dynamics over `dists.len()` steps starting from `x0`.
pub fn condense(
    model: &DiscreteZoneModel,
    x0: &ZoneState,
    dists: &[DisturbanceSample],
) -> Result<HorizonPrediction, ThermalError> {
    let horizon = dists.len();
    if horizon == 0 {
        return Err(ThermalError::EmptyHorizon);
    }
    let n = STATE_DIM;
    let bs = model.signed_input();
    let mut phi = Matrix::zeros(n * horizon, n);
    let mut gamma = Matrix::zeros(n * horizon, horizon);
    let mut offset = vec![0.0; n * horizon];

    let mut a_pow = model.a.clone();
    // A^(l-1-j) B for the newest input column; older columns shift down.
    let mut impulse: Vec<[f64; STATE_DIM]> = Vec::with_capacity(horizon);
    let mut prev_offset = [0.0; STATE_DIM];
    for l in 0..horizon {
        phi.set_block(l * n, 0, &a_pow);
        if l + 1 < horizon {
            a_pow = model.a.matmul(&a_pow);
        }

        for col in impulse.iter_mut() {
            let next = model.a.mul_vec(col);
            col.copy_from_slice(&next);
        }
        impulse.push(bs);
        for (j, col) in impulse.iter().enumerate() {
            for c in 0..n {
                gamma[(l * n + c, j)] = col[c];
            }
        }

        let d = model.offset(&dists[l]);
        let carried = model.a.mul_vec(&prev_offset);
        for c in 0..n {
            prev_offset[c] = carried[c] + d[c];
            offset[l * n + c] = prev_offset[c];
        }
    }
    let mut free_response = phi.mul_vec(x0.as_slice());
    for (f, o) in free_response.iter_mut().zip(&offset) {
        *f += o;
    }
    Ok(HorizonPrediction {
        phi,
        gamma,
        offset,
        free_response,
        horizon,
    })
}
