//! Jacobi-parallel ADMM for zones coupled by a shared per-step budget
//! `0 ≤ Σ_i u_i ≤ c_max`.
//!
//! The consensus variable `z` carries the budget, and every zone solves its
//! own box QP augmented with `(ρ/2)‖u_i + S_{−i} − z + θ‖²`, where `S_{−i}` is
//! the sum of the other zones' previous iterates and `θ` is the scaled dual.
//! Iteration `τ → τ+1`:
//!
//! ```text
//! u_i ← argmin  f_i(u_i) + (ρ/2)‖u_i + S_{−i}^τ − z^τ + θ^τ‖² + (p/2)‖u_i − u_i^τ‖²   (all i at once)
//! z   ← clamp(Σ u^σ + θ^τ, 0, c_max)          σ = τ or τ+1, see ConsensusUpdate
//! θ   ← θ^τ + Σ u^{τ+1} − z^{τ+1}
//! ```
//!
//! With `p = 0` and `σ = τ` this is the plain Jacobi scheme. That scheme
//! diverges once `ρ·M` outgrows the curvature of the local costs (already
//! at `M = 2` for weakly curved zones), so the default uses `σ = τ+1` and
//! `p = ρ·M`, which satisfies the usual proximal Jacobi condition
//! `p > ρ(M − 1)`. The proximal term vanishes at a fixed point, so fixed
//! points are those of the plain scheme. This module is unit agnostic;
//! callers choose the scaling of `u`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{timed, Executor};
use crate::qp::{solve_box_qp, BoxQp, QpError, QpSolution};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("zone {zone}: {source}")]
pub struct AdmmError {
    pub zone: usize,
    #[source]
    pub source: QpError,
}

/// Which sum of inputs feeds the `z` projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConsensusUpdate {
    /// `Σu^τ`, the iterate the local updates read.
    Previous,
    /// `Σu^{τ+1}`, after the barrier.
    Current,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmConfig {
    /// Penalty `ρ`, in inverse squared input units.
    pub rho: f64,
    /// Total iteration cap `T`.
    pub max_iter: usize,
    /// Iterations `T_d` during which active regions may still change.
    pub exploration_iters: usize,
    /// Early exit once the residual `r` drops below this value, in the
    /// caller's input units (W for the MPC layer).
    pub tol: f64,
    pub consensus: ConsensusUpdate,
    /// Proximal weight `p`; `None` selects `ρ·M`.
    pub proximal: Option<f64>,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: 0.1,
            max_iter: 80,
            exploration_iters: 30,
            tol: 1e-3,
            consensus: ConsensusUpdate::Current,
            proximal: None,
        }
    }
}

/// Per-iteration constants of the scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheme {
    pub rho: f64,
    pub proximal: f64,
    pub consensus: ConsensusUpdate,
}

impl Scheme {
    /// Plain Jacobi iteration: no proximal term, `z` from `Σu^τ`.
    pub fn plain(rho: f64) -> Self {
        Self { rho, proximal: 0.0, consensus: ConsensusUpdate::Previous }
    }
}

impl AdmmConfig {
    /// Plain Jacobi iteration with penalty `rho`.
    pub fn plain(rho: f64) -> Self {
        Self { rho, consensus: ConsensusUpdate::Previous, proximal: Some(0.0), ..Self::default() }
    }

    pub fn scheme(&self, zones: usize) -> Scheme {
        Scheme {
            rho: self.rho,
            proximal: self.proximal.unwrap_or(self.rho * zones as f64),
            consensus: self.consensus,
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.rho > 0.0) {
            return Err("rho must be positive");
        }
        if let Some(p) = self.proximal {
            if !(p >= 0.0) {
                return Err("proximal weight must be non-negative");
            }
        }
        if self.exploration_iters > self.max_iter {
            return Err("exploration window exceeds the iteration cap");
        }
        if !(self.tol >= 0.0) {
            return Err("tolerance must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub u: Vec<Vec<f64>>,
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
    pub tau: usize,
    pub r_history: Vec<f64>,
}

/// One row of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub tau: usize,
    pub residual: f64,
    /// `max |Σu − z|`; zero at a fixed point.
    pub consensus_gap: f64,
    pub objective: f64,
    pub max_violation: f64,
}

impl IterationLog {
    /// `r` alone can vanish while the dual still moves (every zone pinned
    /// at a bound), so the consensus gap must be small as well.
    pub fn settled(&self, tol: f64) -> bool {
        self.residual < tol && self.consensus_gap <= tol
    }
}

/// Wall-clock split of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IterationTiming {
    /// Elapsed time of the parallel local-update phase.
    pub parallel_seconds: f64,
    /// Slowest single local update.
    pub max_zone_seconds: f64,
    /// Sum of all local updates.
    pub total_zone_seconds: f64,
    pub coordinator_seconds: f64,
}

pub fn sum_inputs(u: &[Vec<f64>]) -> Vec<f64> {
    let n = u.first().map_or(0, Vec::len);
    let mut s = vec![0.0; n];
    for ui in u {
        for (a, b) in s.iter_mut().zip(ui) {
            *a += b;
        }
    }
    s
}

/// `clamp(Σu + θ, 0, c_max)` coordinatewise.
pub fn z_update(sum_u: &[f64], theta: &[f64], c_max: &[f64]) -> Vec<f64> {
    sum_u
        .iter()
        .zip(theta)
        .zip(c_max)
        .map(|((s, t), c)| (s + t).clamp(0.0, *c))
        .collect()
}

/// `θ + Σu − z`.
pub fn dual_update(theta: &[f64], sum_u: &[f64], z: &[f64]) -> Vec<f64> {
    theta.iter().zip(sum_u).zip(z).map(|((t, s), z)| t + (s - z)).collect()
}

/// `(1/M) Σ_i ‖u_i' − u_i‖₁`.
pub fn residual(prev: &[Vec<f64>], next: &[Vec<f64>]) -> f64 {
    if prev.is_empty() {
        return 0.0;
    }
    let total: f64 = prev
        .iter()
        .zip(next)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .sum();
    total / prev.len() as f64
}

/// Largest violation of `0 ≤ Σu ≤ c_max`.
pub fn budget_violation(sum_u: &[f64], c_max: &[f64]) -> f64 {
    sum_u
        .iter()
        .zip(c_max)
        .map(|(s, c)| (-s).max(s - c).max(0.0))
        .fold(0.0, f64::max)
}

/// Zone problem plus the ADMM terms: `H + (ρ + p)I`,
/// `g + ρ(S_{−i} − z + θ) − p·u_prev`.
pub fn augmented_subproblem(
    base: &BoxQp,
    scheme: &Scheme,
    prev: &[f64],
    others: &[f64],
    z: &[f64],
    theta: &[f64],
) -> BoxQp {
    let (rho, p) = (scheme.rho, scheme.proximal);
    let mut qp = base.clone();
    for k in 0..qp.dim() {
        qp.h[(k, k)] += rho + p;
        qp.g[k] += rho * (others[k] - z[k] + theta[k]) - p * prev[k];
    }
    qp
}

impl AdmmState {
    /// `θ⁰ = 0`, `z⁰ = clamp(Σu⁰, 0, c_max)`.
    pub fn new(u0: Vec<Vec<f64>>, c_max: &[f64]) -> Self {
        let n = c_max.len();
        let zeros = vec![0.0; n];
        let z = z_update(&sum_inputs(&u0), &zeros, c_max);
        Self { u: u0, z, theta: zeros, tau: 0, r_history: Vec::new() }
    }

    pub fn zones(&self) -> usize {
        self.u.len()
    }

    /// Local update of zone `i` against the current iterate.
    pub fn local_update(&self, i: usize, base: &BoxQp, scheme: &Scheme, sum_u: &[f64]) -> Result<QpSolution, AdmmError> {
        let others: Vec<f64> = sum_u.iter().zip(&self.u[i]).map(|(s, v)| s - v).collect();
        let qp = augmented_subproblem(base, scheme, &self.u[i], &others, &self.z, &self.theta);
        solve_box_qp(&qp, &self.u[i]).map_err(|source| AdmmError { zone: i, source })
    }

    /// One Jacobi sweep. Local updates run through `exec`, read only the
    /// current iterate, and are merged in zone order.
    pub fn iterate<E: Executor>(
        &mut self,
        problems: &[BoxQp],
        c_max: &[f64],
        scheme: &Scheme,
        exec: &E,
    ) -> Result<(IterationLog, IterationTiming), AdmmError> {
        assert_eq!(problems.len(), self.zones(), "one subproblem per zone");
        let sum_u = sum_inputs(&self.u);
        let this = &*self;
        let phase = timed(exec, || {
            exec.map(problems.len(), |i| timed(exec, || this.local_update(i, &problems[i], scheme, &sum_u)))
        });
        let coord_start = exec.now();
        let mut next = Vec::with_capacity(problems.len());
        let mut timing = IterationTiming { parallel_seconds: phase.seconds, ..IterationTiming::default() };
        for r in phase.value {
            timing.max_zone_seconds = timing.max_zone_seconds.max(r.seconds);
            timing.total_zone_seconds += r.seconds;
            next.push(r.value?.u);
        }
        let sum_next = sum_inputs(&next);
        let z_next = match scheme.consensus {
            ConsensusUpdate::Previous => z_update(&sum_u, &self.theta, c_max),
            ConsensusUpdate::Current => z_update(&sum_next, &self.theta, c_max),
        };
        let theta_next = dual_update(&self.theta, &sum_next, &z_next);
        let r = residual(&self.u, &next);

        self.u = next;
        self.z = z_next;
        self.theta = theta_next;
        self.tau += 1;
        self.r_history.push(r);
        let objective = problems.iter().zip(&self.u).map(|(p, u)| p.objective(u)).sum();
        timing.coordinator_seconds = (exec.now() - coord_start).max(0.0);
        Ok((
            IterationLog {
                tau: self.tau,
                residual: r,
                consensus_gap: sum_next.iter().zip(&self.z).map(|(s, z)| (s - z).abs()).fold(0.0, f64::max),
                objective,
                max_violation: budget_violation(&sum_next, c_max),
            },
            timing,
        ))
    }
}

/// Iterates fixed subproblems until settled or `max_iter`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOutcome {
    pub state: AdmmState,
    pub log: Vec<IterationLog>,
    pub timing: Vec<IterationTiming>,
    pub converged: bool,
}

pub fn run_admm<E: Executor>(
    problems: &[BoxQp],
    c_max: &[f64],
    cfg: &AdmmConfig,
    u0: Vec<Vec<f64>>,
    exec: &E,
) -> Result<AdmmOutcome, AdmmError> {
    let mut state = AdmmState::new(u0, c_max);
    let mut log = Vec::new();
    let mut timing = Vec::new();
    let mut converged = false;
    let scheme = cfg.scheme(problems.len());
    while state.tau < cfg.max_iter {
        let (entry, t) = state.iterate(problems, c_max, &scheme, exec)?;
        log.push(entry);
        timing.push(t);
        if entry.settled(cfg.tol) {
            converged = true;
            break;
        }
    }
    Ok(AdmmOutcome { state, log, timing, converged })
}
