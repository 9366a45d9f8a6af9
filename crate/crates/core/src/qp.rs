//! Dense convex quadratic programs.
//!
//! Objective convention everywhere: `½·uᵀHu + gᵀu`.
//!
//! * [`solve_box_qp`]: primal active-set method for box-constrained problems
//!   (the per-zone ADMM subproblems).
//! * [`solve_dense_qp`]: Goldfarb–Idnani dual active-set method for box plus
//!   general linear inequalities (the stacked centralized problems).
//! * [`projected_gradient`]: slow but simple cross-check for box problems.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::{dot, Cholesky, Matrix};

/// Absolute KKT tolerance of the box solver.
pub const KKT_TOL: f64 = 1e-8;
/// Iteration cap shared by both active-set solvers.
pub const MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
    #[error("lower bound exceeds upper bound at coordinate {0}")]
    InvalidBounds(usize),
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("iteration cap reached (KKT residual {kkt_residual:e})")]
    IterationLimit { best: Vec<f64>, kkt_residual: f64 },
    #[error("constraints are infeasible")]
    Infeasible,
}

/// `min ½uᵀHu + gᵀu` subject to `lo ≤ u ≤ hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxQp {
    pub h: Matrix,
    pub g: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxQp {
    pub fn new(h: Matrix, g: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, QpError> {
        let qp = Self { h, g, lo, hi };
        qp.validate()?;
        Ok(qp)
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn validate(&self) -> Result<(), QpError> {
        let n = self.dim();
        if self.h.rows() != n || self.h.cols() != n || self.lo.len() != n || self.hi.len() != n {
            return Err(QpError::Dimension("H, g, lo and hi must agree"));
        }
        if let Some(i) = (0..n).find(|&i| !(self.lo[i] <= self.hi[i])) {
            return Err(QpError::InvalidBounds(i));
        }
        Ok(())
    }

    pub fn objective(&self, u: &[f64]) -> f64 {
        0.5 * self.h.quad_form(u) + dot(&self.g, u)
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut grad = self.h.mul_vec(u);
        for (gr, g) in grad.iter_mut().zip(&self.g) {
            *gr += g;
        }
        grad
    }

    pub fn clamp(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    }

    /// Largest violation of the box KKT conditions at `u`, including bound
    /// violations.
    pub fn kkt_residual(&self, u: &[f64]) -> f64 {
        let grad = self.gradient(u);
        let mut res: f64 = 0.0;
        for i in 0..self.dim() {
            let (l, h, v, gi) = (self.lo[i], self.hi[i], u[i], grad[i]);
            res = res.max((l - v).max(0.0)).max((v - h).max(0.0));
            let at_lo = v <= l;
            let at_hi = v >= h;
            let r = match (at_lo, at_hi) {
                (true, true) => 0.0,
                (true, false) => (-gi).max(0.0),
                (false, true) => gi.max(0.0),
                (false, false) => gi.abs(),
            };
            res = res.max(r);
        }
        res
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub u: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

/// Primal active-set method. Each iteration solves the equality-constrained
/// problem on the free coordinates by Cholesky, then either takes the full
/// Newton step, stops at the first blocking bound, or releases the bound
/// with the most negative multiplier. Objective values of the iterates are
/// non-increasing.
pub fn solve_box_qp(qp: &BoxQp, warm: &[f64]) -> Result<QpSolution, QpError> {
    solve_box_qp_observed(qp, warm, |_| {})
}

/// [`solve_box_qp`] calling `on_iterate` with every primal iterate,
/// starting with the clamped warm start.
pub fn solve_box_qp_observed<F: FnMut(&[f64])>(
    qp: &BoxQp,
    warm: &[f64],
    mut on_iterate: F,
) -> Result<QpSolution, QpError> {
    qp.validate()?;
    let n = qp.dim();
    if warm.len() != n {
        return Err(QpError::Dimension("warm start length"));
    }
    let mut u = qp.clamp(warm);
    // Coordinates with lo == hi stay pinned at the lower bound.
    let mut state: Vec<Bound> = (0..n)
        .map(|i| {
            if u[i] <= qp.lo[i] {
                u[i] = qp.lo[i];
                Bound::Lower
            } else if u[i] >= qp.hi[i] {
                Bound::Upper
            } else {
                Bound::Free
            }
        })
        .collect();

    on_iterate(&u);
    let mut grad = qp.gradient(&u);
    let mut iterations = 0;
    let mut free: Vec<usize> = Vec::with_capacity(n);
    loop {
        if iterations >= MAX_ITER {
            let kkt_residual = qp.kkt_residual(&u);
            return Err(QpError::IterationLimit { best: u, kkt_residual });
        }
        iterations += 1;

        free.clear();
        free.extend((0..n).filter(|&i| state[i] == Bound::Free));
        let free_grad = free.iter().map(|&i| grad[i].abs()).fold(0.0, f64::max);
        let step = if free_grad <= 1e-3 * KKT_TOL {
            vec![0.0; free.len()]
        } else {
            newton_step(qp, &free, &grad)?
        };
        let moving = step.iter().any(|p| p.abs() > 1e-15);

        if !moving {
            // Stationary on the free subspace: check multipliers of the
            // active bounds and release the worst one.
            let mut worst = None;
            let mut worst_val = -KKT_TOL;
            for i in 0..n {
                let mult = match state[i] {
                    Bound::Free => continue,
                    Bound::Lower if qp.lo[i] == qp.hi[i] => continue,
                    Bound::Lower => grad[i],
                    Bound::Upper => -grad[i],
                };
                if mult < worst_val {
                    worst_val = mult;
                    worst = Some(i);
                }
            }
            match worst {
                Some(i) => state[i] = Bound::Free,
                None => {
                    return Ok(QpSolution { objective: qp.objective(&u), u, iterations });
                }
            }
            continue;
        }

        // Longest feasible fraction of the step.
        let mut alpha = 1.0;
        let mut blocking = None;
        for (k, &i) in free.iter().enumerate() {
            let p = step[k];
            let limit = if p < 0.0 {
                (qp.lo[i] - u[i]) / p
            } else if p > 0.0 {
                (qp.hi[i] - u[i]) / p
            } else {
                continue;
            };
            if limit < alpha {
                alpha = limit.max(0.0);
                blocking = Some((i, p < 0.0));
            }
        }
        for (k, &i) in free.iter().enumerate() {
            u[i] = (u[i] + alpha * step[k]).clamp(qp.lo[i], qp.hi[i]);
        }
        if let Some((i, lower)) = blocking {
            if lower {
                u[i] = qp.lo[i];
                state[i] = Bound::Lower;
            } else {
                u[i] = qp.hi[i];
                state[i] = Bound::Upper;
            }
        }
        on_iterate(&u);
        grad = qp.gradient(&u);
    }
}

/// Newton step `−H_FF⁻¹ ∇_F` on the free coordinates.
fn newton_step(qp: &BoxQp, free: &[usize], grad: &[f64]) -> Result<Vec<f64>, QpError> {
    let m = free.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut sub = Matrix::zeros(m, m);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            sub[(a, b)] = qp.h[(i, j)];
        }
    }
    let chol = Cholesky::new(&sub).ok_or(QpError::NotPositiveDefinite)?;
    let mut rhs: Vec<f64> = free.iter().map(|&i| -grad[i]).collect();
    chol.solve_in_place(&mut rhs);
    Ok(rhs)
}

/// Projected gradient with step `1/L`, `L` a Gershgorin bound on the largest
/// eigenvalue of `H`. Stops after `max_iter` sweeps or when a sweep moves no
/// coordinate by more than `tol`.
pub fn projected_gradient(qp: &BoxQp, start: &[f64], max_iter: usize, tol: f64) -> Vec<f64> {
    let n = qp.dim();
    let lipschitz = (0..n)
        .map(|i| qp.h.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let step = 1.0 / lipschitz;
    let mut u = qp.clamp(start);
    for _ in 0..max_iter {
        let grad = qp.gradient(&u);
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let next = (u[i] - step * grad[i]).clamp(qp.lo[i], qp.hi[i]);
            moved = moved.max((next - u[i]).abs());
            u[i] = next;
        }
        if moved <= tol {
            break;
        }
    }
    u
}

/// Intersection of half-spaces `a·u ≤ b`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polyhedron {
    rows: Vec<(Vec<f64>, f64)>,
}

impl Polyhedron {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, a: Vec<f64>, b: f64) {
        self.rows.push((a, b));
    }

    pub fn rows(&self) -> &[(Vec<f64>, f64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `min_k (b_k − a_k·u)`; positive exactly on the interior, `+∞` for the
    /// unconstrained (empty) polyhedron.
    pub fn membership_margin(&self, u: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|(a, b)| {
                debug_assert_eq!(a.len(), u.len());
                b - dot(a, u)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Index and slack of the most violated (or tightest) row.
    pub fn tightest_row(&self, u: &[f64]) -> Option<(usize, f64)> {
        self.rows
            .iter()
            .enumerate()
            .map(|(k, (a, b))| (k, b - dot(a, u)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
    }
}

/// Sparse linear inequality `Σ coeff·u[index] ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub upper: f64,
}

/// `min ½uᵀHu + gᵀu` subject to `lo ≤ u ≤ hi` and the linear rows.
/// Infinite bounds are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseQp {
    pub h: Matrix,
    pub g: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
}

impl DenseQp {
    pub fn from_box(qp: BoxQp) -> Self {
        Self { h: qp.h, g: qp.g, lo: qp.lo, hi: qp.hi, constraints: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn objective(&self, u: &[f64]) -> f64 {
        0.5 * self.h.quad_form(u) + dot(&self.g, u)
    }

    /// Largest violation over bounds and linear rows.
    pub fn max_violation(&self, u: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for i in 0..self.dim() {
            v = v.max(self.lo[i] - u[i]).max(u[i] - self.hi[i]);
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(i, a)| a * u[*i]).sum();
            v = v.max(lhs - c.upper);
        }
        v.max(0.0)
    }
}

/// Constraint `nᵀu ≥ b` in the dual method's native orientation.
enum Normal<'a> {
    Unit(usize, f64),
    Sparse(&'a [(usize, f64)], f64),
}

struct Row<'a> {
    normal: Normal<'a>,
    rhs: f64,
}

impl Row<'_> {
    fn value(&self, u: &[f64]) -> f64 {
        match self.normal {
            Normal::Unit(i, s) => s * u[i],
            Normal::Sparse(terms, s) => s * terms.iter().map(|(i, a)| a * u[*i]).sum::<f64>(),
        }
    }

    /// `Jᵀn`.
    fn project(&self, j: &Matrix, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match self.normal {
            Normal::Unit(i, s) => {
                for (o, v) in out.iter_mut().zip(j.row(i)) {
                    *o = s * v;
                }
            }
            Normal::Sparse(terms, s) => {
                for (i, a) in terms {
                    let w = s * a;
                    for (o, v) in out.iter_mut().zip(j.row(*i)) {
                        *o += w * v;
                    }
                }
            }
        }
    }

    fn scale(&self) -> f64 {
        1.0 + self.rhs.abs()
    }
}

/// Goldfarb–Idnani dual active-set method.
///
/// Starts from the unconstrained minimizer and adds violated constraints one
/// at a time, keeping `J = L⁻ᵀQ` and the triangular factor `R` of the active
/// normals up to date with Givens rotations.
pub fn solve_dense_qp(qp: &DenseQp) -> Result<QpSolution, QpError> {
    let n = qp.dim();
    if qp.h.rows() != n || qp.h.cols() != n || qp.lo.len() != n || qp.hi.len() != n {
        return Err(QpError::Dimension("H, g, lo and hi must agree"));
    }
    if let Some(i) = (0..n).find(|&i| !(qp.lo[i] <= qp.hi[i])) {
        return Err(QpError::InvalidBounds(i));
    }
    for c in &qp.constraints {
        if c.terms.iter().any(|(i, _)| *i >= n) {
            return Err(QpError::Dimension("constraint index out of range"));
        }
    }

    let mut rows: Vec<Row> = Vec::with_capacity(2 * n + qp.constraints.len());
    for i in 0..n {
        if qp.lo[i].is_finite() {
            rows.push(Row { normal: Normal::Unit(i, 1.0), rhs: qp.lo[i] });
        }
        if qp.hi[i].is_finite() {
            rows.push(Row { normal: Normal::Unit(i, -1.0), rhs: -qp.hi[i] });
        }
    }
    for c in &qp.constraints {
        rows.push(Row { normal: Normal::Sparse(&c.terms, -1.0), rhs: -c.upper });
    }

    let chol = Cholesky::new(&qp.h).ok_or(QpError::NotPositiveDefinite)?;
    let mut j = chol.inverse_transpose_factor();
    let mut x: Vec<f64> = qp.g.iter().map(|v| -v).collect();
    chol.solve_in_place(&mut x);

    let mut r = Matrix::zeros(n, n);
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let mut in_active = vec![false; rows.len()];
    let mut d = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut iterations = 0;

    loop {
        // Most violated inactive constraint, in scaled terms.
        let mut pick = None;
        let mut worst = 0.0;
        for (k, row) in rows.iter().enumerate() {
            if in_active[k] {
                continue;
            }
            let s = (row.value(&x) - row.rhs) / row.scale();
            if s < worst && s < -1e-12 {
                worst = s;
                pick = Some(k);
            }
        }
        let Some(p) = pick else {
            return Ok(QpSolution { objective: qp.objective(&x), u: x, iterations });
        };
        let mut mult_p = 0.0;

        loop {
            iterations += 1;
            if iterations > MAX_ITER {
                let kkt_residual = qp.max_violation(&x);
                return Err(QpError::IterationLimit { best: x, kkt_residual });
            }
            let q = active.len();
            rows[p].project(&j, &mut d);
            // z = J₂ d₂
            z.iter_mut().for_each(|v| *v = 0.0);
            for row in 0..n {
                let jr = j.row(row);
                z[row] = dot(&jr[q..], &d[q..]);
            }
            // rr = R⁻¹ d₁
            let mut rr = d[..q].to_vec();
            for a in (0..q).rev() {
                let mut s = rr[a];
                for b in a + 1..q {
                    s -= r[(a, b)] * rr[b];
                }
                rr[a] = s / r[(a, a)];
            }

            // Partial step limit from the dual side.
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for a in 0..q {
                if rr[a] > 0.0 {
                    let t = mult[a] / rr[a];
                    if t < t1 {
                        t1 = t;
                        drop = Some(a);
                    }
                }
            }
            let slack = rows[p].value(&x) - rows[p].rhs;
            let zn = rows[p].value(&z);
            let dnorm = d[q..].iter().map(|v| v * v).sum::<f64>();
            let t2 = if dnorm <= 1e-24 * (1.0 + d.iter().map(|v| v * v).sum::<f64>()) || zn <= 0.0 {
                f64::INFINITY
            } else {
                -slack / zn
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(QpError::Infeasible);
            }

            if t2.is_finite() {
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += t * zi;
                }
            }
            for a in 0..q {
                mult[a] -= t * rr[a];
            }
            mult_p += t;

            if t == t2 {
                // Full step: p becomes active.
                for col in (q + 1..n).rev() {
                    let (a, b) = (d[col - 1], d[col]);
                    if b == 0.0 {
                        continue;
                    }
                    let h = libm::hypot(a, b);
                    let (c, s) = (a / h, b / h);
                    d[col - 1] = h;
                    d[col] = 0.0;
                    rotate_columns(&mut j, col - 1, col, c, s);
                }
                for a in 0..=q {
                    r[(a, q)] = d[a];
                }
                active.push(p);
                mult.push(mult_p);
                in_active[p] = true;
                break;
            }

            // Partial step: drop the blocking active constraint and retry p.
            let k = drop.expect("finite dual step has a blocking constraint");
            in_active[active[k]] = false;
            active.remove(k);
            mult.remove(k);
            for col in k..q - 1 {
                for row in 0..=col + 1 {
                    r[(row, col)] = r[(row, col + 1)];
                }
            }
            for row in 0..n {
                r[(row, q - 1)] = 0.0;
            }
            for col in k..q - 1 {
                let (a, b) = (r[(col, col)], r[(col + 1, col)]);
                if b == 0.0 {
                    continue;
                }
                let h = libm::hypot(a, b);
                let (c, s) = (a / h, b / h);
                for l in col..q - 1 {
                    let (ra, rb) = (r[(col, l)], r[(col + 1, l)]);
                    r[(col, l)] = c * ra + s * rb;
                    r[(col + 1, l)] = -s * ra + c * rb;
                }
                r[(col + 1, col)] = 0.0;
                rotate_columns(&mut j, col, col + 1, c, s);
            }
        }
    }
}

#[inline]
fn rotate_columns(j: &mut Matrix, a: usize, b: usize, c: f64, s: f64) {
    for row in 0..j.rows() {
        let (va, vb) = (j[(row, a)], j[(row, b)]);
        j[(row, a)] = c * va + s * vb;
        j[(row, b)] = -s * va + c * vb;
    }
}
