//! Ulam discretization of weighted transfer operators for the geometric
//! potentials `phi_t = -t log |Df|_{E^u}|`: pressure curve, SRB density,
//! concentration at the fixed point, and entropy cross-checks.
//!
//! Row `i` of `L_t` is the Monte Carlo average over sample points `x` of
//! cell `i` of `J(x)^{1-t}`, sent to the cell of `f(x)`, where
//! `J(x) = |Df_x u|` with `u` the unstable direction at the cell midpoint.
//! The extra factor `J` (relative to `e^{phi_t}`) is the Jacobian of the
//! Lebesgue reference measure along `E^u`, so `L_1` is the plain Ulam
//! matrix (row-stochastic, `P(1) = 0`) and `L_0` has spectral radius close
//! to `e^{h_top}`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cone_dynamics::{unstable_direction, DEFAULT_COCYCLE_STEPS};
use crate::geometry::TorusPoint;
use crate::map_core::AlmostAnosovMap;
use crate::seed::task_rng;

/// Residual target for power iteration. For `t > 1` the cells around the
/// fixed point carry many eigenvalues within `~1e-5` of the leading one, so
/// tighter targets are out of reach; `P(t)` is still accurate to about `tol`.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-4;
pub const DEFAULT_EIGEN_MAX_ITER: usize = 20_000;

#[derive(Debug, Clone, Error)]
pub enum ThermoError {
    #[error("power iteration stopped at residual {residual:.3e} after {iterations} iterations (lambda {lambda})")]
    NotConverged { lambda: f64, residual: f64, iterations: usize },
    #[error("samples_per_cell must be at least 16, got {0}")]
    TooFewSamples(usize),
    #[error("grid size must be positive")]
    EmptyGrid,
    #[error("t values must be sorted")]
    UnsortedT,
}

/// `n x n` uniform cells over `[0, 1)^2`; cell `(i, j)` has index `j n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UlamGrid {
    pub n: usize,
}

impl UlamGrid {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn cells(&self) -> usize {
        self.n * self.n
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }

    pub fn cell_of(&self, p: &TorusPoint) -> usize {
        let n = self.n as f64;
        let i = ((p.x() * n) as usize).min(self.n - 1);
        let j = ((p.y() * n) as usize).min(self.n - 1);
        self.index(i, j)
    }

    pub fn center(&self, k: usize) -> TorusPoint {
        let (i, j) = self.coords(k);
        let h = 1.0 / self.n as f64;
        TorusPoint::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    /// Torus distance from the origin to the closed cell.
    pub fn distance_to_origin(&self, k: usize) -> f64 {
        let (i, j) = self.coords(k);
        let h = 1.0 / self.n as f64;
        let axis = |a: usize| (a as f64 * h).min(1.0 - (a + 1) as f64 * h).max(0.0);
        axis(i).hypot(axis(j))
    }

    /// The cells whose closure contains the fixed point.
    pub fn origin_cluster(&self) -> Vec<usize> {
        let m = self.n - 1;
        let mut v = vec![self.index(0, 0), self.index(m, 0), self.index(0, m), self.index(m, m)];
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Sampled one-step transitions and unstable log-Jacobians, shared by all `t`.
#[derive(Debug, Clone)]
pub struct TransitionSample {
    pub grid: UlamGrid,
    pub samples_per_cell: usize,
    targets: Vec<u32>,
    log_j: Vec<f64>,
}

impl TransitionSample {
    /// Stratified jitter: sample `k` of a cell sits in sub-square
    /// `(k mod m, k / m)` of an `m x m` subdivision, `m = ceil(sqrt S)`.
    pub fn build(map: &AlmostAnosovMap, grid: UlamGrid, samples_per_cell: usize, seed: u64) -> Result<Self, ThermoError> {
        if samples_per_cell < 16 {
            return Err(ThermoError::TooFewSamples(samples_per_cell));
        }
        if grid.n == 0 {
            return Err(ThermoError::EmptyGrid);
        }
        let s = samples_per_cell;
        let m = (s as f64).sqrt().ceil() as usize;
        let h = 1.0 / grid.n as f64;
        let rows: Vec<(Vec<u32>, Vec<f64>)> = (0..grid.cells())
            .into_par_iter()
            .map(|cell| {
                let mut rng = task_rng(seed, "ulam", cell as u64);
                let (ci, cj) = grid.coords(cell);
                let u = unstable_direction(map, &grid.center(cell), DEFAULT_COCYCLE_STEPS).direction;
                let mut t = Vec::with_capacity(s);
                let mut l = Vec::with_capacity(s);
                for k in 0..s {
                    let (a, b) = ((k % m) as f64, ((k / m) % m) as f64);
                    let x = (ci as f64 + (a + rng.gen::<f64>()) / m as f64) * h;
                    let y = (cj as f64 + (b + rng.gen::<f64>()) / m as f64) * h;
                    let p = TorusPoint::new(x, y);
                    t.push(grid.cell_of(&map.apply(&p)) as u32);
                    l.push(map.differential(&p).apply(u).norm().ln());
                }
                (t, l)
            })
            .collect();
        let mut targets = Vec::with_capacity(grid.cells() * s);
        let mut log_j = Vec::with_capacity(grid.cells() * s);
        for (t, l) in rows {
            targets.extend(t);
            log_j.extend(l);
        }
        Ok(Self { grid, samples_per_cell, targets, log_j })
    }

    /// Cell averages of `log J`.
    pub fn cell_mean_log_jacobian(&self) -> Vec<f64> {
        self.log_j
            .chunks(self.samples_per_cell)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }

    pub fn operator(&self, t: f64) -> TransferOperator {
        self.operator_with(t, &[])
    }

    /// Operator with transitions between the cells of `removed` dropped.
    pub fn operator_with(&self, t: f64, removed: &[usize]) -> TransferOperator {
        let s = self.samples_per_cell;
        let inv = 1.0 / s as f64;
        let rows: Vec<Vec<(u32, f64)>> = (0..self.grid.cells())
            .into_par_iter()
            .map(|cell| {
                let src_removed = removed.contains(&cell);
                let mut row: Vec<(u32, f64)> = (0..s)
                    .filter_map(|k| {
                        let idx = cell * s + k;
                        let tgt = self.targets[idx];
                        if src_removed && removed.contains(&(tgt as usize)) {
                            return None;
                        }
                        Some((tgt, ((1.0 - t) * self.log_j[idx]).exp() * inv))
                    })
                    .collect();
                row.sort_by_key(|e| e.0);
                let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
                for (c, w) in row {
                    match merged.last_mut() {
                        Some(last) if last.0 == c => last.1 += w,
                        _ => merged.push((c, w)),
                    }
                }
                merged
            })
            .collect();
        TransferOperator::from_rows(self.grid, t, s, rows)
    }
}

/// Sparse nonnegative `L_t` in CSR form, with its transpose.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    pub grid: UlamGrid,
    pub t: f64,
    pub samples_per_cell: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    t_ptr: Vec<usize>,
    t_rows: Vec<u32>,
    t_vals: Vec<f64>,
}

impl TransferOperator {
    pub fn from_rows(grid: UlamGrid, t: f64, samples_per_cell: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let mut col_count = vec![0usize; n];
        for r in &rows {
            for &(c, w) in r {
                cols.push(c);
                vals.push(w);
                col_count[c as usize] += 1;
            }
            row_ptr.push(cols.len());
        }
        let mut t_ptr = vec![0usize; n + 1];
        for c in 0..n {
            t_ptr[c + 1] = t_ptr[c] + col_count[c];
        }
        let mut fill = t_ptr.clone();
        let mut t_rows = vec![0u32; cols.len()];
        let mut t_vals = vec![0.0; cols.len()];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                let c = cols[k] as usize;
                t_rows[fill[c]] = i as u32;
                t_vals[fill[c]] = vals[k];
                fill[c] += 1;
            }
        }
        Self { grid, t, samples_per_cell, row_ptr, cols, vals, t_ptr, t_rows, t_vals }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().sum()).collect()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k] as usize, self.vals[k]))
    }

    /// `L v`.
    pub fn apply_right(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .into_par_iter()
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.vals[k] * v[self.cols[k] as usize]).sum())
            .collect()
    }

    /// `w L`.
    pub fn apply_left(&self, w: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .into_par_iter()
            .map(|j| (self.t_ptr[j]..self.t_ptr[j + 1]).map(|k| self.t_vals[k] * w[self.t_rows[k] as usize]).sum())
            .collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out.t_vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Operator with cell `k` renamed `perm[k]`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let n = self.dim();
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            let mut r: Vec<(u32, f64)> = self.row(i).map(|(c, w)| (perm[c] as u32, w)).collect();
            r.sort_by_key(|e| e.0);
            rows[perm[i]] = r;
        }
        Self::from_rows(self.grid, self.t, self.samples_per_cell, rows)
    }
}

/// Leading eigendata of a nonnegative operator.
#[derive(Debug, Clone, Serialize)]
pub struct EigenData {
    pub lambda: f64,
    /// `L v = lambda v`, `|v|_1 = 1`.
    #[serde(skip)]
    pub right: Vec<f64>,
    /// `w L = lambda w`, `|w|_1 = 1`.
    #[serde(skip)]
    pub left: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn normalize(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    s
}

fn power<F: Fn(&[f64]) -> Vec<f64>>(apply: F, dim: usize, tol: f64, max_iter: usize) -> (f64, Vec<f64>, f64, usize) {
    let mut v = vec![1.0 / dim as f64; dim];
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let lv = apply(&v);
        lambda = lv.iter().sum();
        if !(lambda > 0.0) {
            return (0.0, v, f64::INFINITY, it);
        }
        residual = lv.iter().zip(&v).map(|(a, b)| (a - lambda * b).abs()).sum::<f64>() / lambda;
        if residual <= tol {
            return (lambda, v, residual, it);
        }
        v = lv;
        normalize(&mut v);
    }
    (lambda, v, residual, max_iter)
}

/// Power iteration on `L` and on its adjoint until both residuals
/// `|L v - lambda v|_1 / lambda` reach `tol`.
pub fn leading_eigen(op: &TransferOperator, tol: f64, max_iter: usize) -> Result<EigenData, ThermoError> {
    let (data, ok) = leading_eigen_unchecked(op, tol, max_iter);
    if ok {
        Ok(data)
    } else {
        Err(ThermoError::NotConverged { lambda: data.lambda, residual: data.residual, iterations: data.iterations })
    }
}

/// Like [`leading_eigen`], returning the last iterate and a convergence flag.
pub fn leading_eigen_unchecked(op: &TransferOperator, tol: f64, max_iter: usize) -> (EigenData, bool) {
    let dim = op.dim();
    let (lr, right, rr, ir) = power(|v| op.apply_right(v), dim, tol, max_iter);
    let (ll, left, rl, il) = power(|w| op.apply_left(w), dim, tol, max_iter);
    let residual = rr.max(rl);
    let lambda = if rl <= rr { ll } else { lr };
    (
        EigenData { lambda, right, left, residual, iterations: ir.max(il) },
        residual <= tol,
    )
}

/// Nonnegative cell weights summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureOnGrid {
    pub grid: UlamGrid,
    pub weights: Vec<f64>,
}

impl MeasureOnGrid {
    pub fn new(grid: UlamGrid, mut weights: Vec<f64>) -> Self {
        weights.iter_mut().for_each(|w| *w = w.max(0.0));
        normalize(&mut weights);
        Self { grid, weights }
    }

    pub fn uniform(grid: UlamGrid) -> Self {
        Self { grid, weights: vec![1.0 / grid.cells() as f64; grid.cells()] }
    }

    /// All mass in the cell `[0, h)^2`.
    pub fn dirac_proxy(grid: UlamGrid) -> Self {
        let mut w = vec![0.0; grid.cells()];
        w[0] = 1.0;
        Self { grid, weights: w }
    }

    pub fn total_variation(&self, other: &MeasureOnGrid) -> f64 {
        0.5 * self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    /// Cell `k` drawn with probability `weights[k]` by inverse CDF.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect()
    }

    /// `(i, j, weight)` rows.
    pub fn rows(&self) -> Vec<(usize, usize, f64)> {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                let (i, j) = self.grid.coords(k);
                (i, j, w)
            })
            .collect()
    }
}

/// Normalized `left * right` (the discrete equilibrium state).
pub fn equilibrium_measure(grid: UlamGrid, eig: &EigenData) -> MeasureOnGrid {
    MeasureOnGrid::new(grid, eig.left.iter().zip(&eig.right).map(|(a, b)| a * b).collect())
}

/// Total weight of cells meeting `B_r(0)`.
pub fn mass_near_singularity(mu: &MeasureOnGrid, r: f64) -> f64 {
    mu.weights
        .iter()
        .enumerate()
        .filter(|(k, _)| mu.grid.distance_to_origin(*k) < r)
        .map(|(_, w)| w)
        .sum()
}

/// Which equilibrium state a leading eigenvector approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Mass spread over the torus.
    Hyperbolic,
    /// At least half of the mass within `r0` of the fixed point.
    Dirac,
}

#[derive(Debug, Clone, Serialize)]
pub struct PressurePoint {
    pub t: f64,
    pub pressure: f64,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grid_n: usize,
    /// Equilibrium mass within `r0` of the fixed point.
    pub origin_mass: f64,
    pub branch: Branch,
    /// Same quantities with transitions inside the origin cluster removed.
    pub punctured_pressure: f64,
    pub punctured_origin_mass: f64,
    pub punctured_converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PressureCurve {
    pub points: Vec<PressurePoint>,
}

impl PressureCurve {
    pub fn all_converged(&self) -> bool {
        self.points.iter().all(|p| p.converged)
    }

    pub fn at(&self, t: f64) -> Option<&PressurePoint> {
        self.points.iter().find(|p| p.t == t)
    }
}

/// Settings shared by the pressure and density computations.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UlamSettings {
    pub grid_n: usize,
    pub samples_per_cell: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl UlamSettings {
    pub fn new(grid_n: usize, samples_per_cell: usize, seed: u64) -> Self {
        Self { grid_n, samples_per_cell, seed, tol: DEFAULT_EIGEN_TOL, max_iter: DEFAULT_EIGEN_MAX_ITER }
    }
}

pub fn build_ulam_operator(
    map: &AlmostAnosovMap,
    grid: UlamGrid,
    t: f64,
    samples_per_cell: usize,
    seed: u64,
) -> Result<TransferOperator, ThermoError> {
    Ok(TransitionSample::build(map, grid, samples_per_cell, seed)?.operator(t))
}

/// Pressure point for `t` from an existing sample.
pub fn pressure_point(map: &AlmostAnosovMap, sample: &TransitionSample, t: f64, tol: f64, max_iter: usize) -> PressurePoint {
    let grid = sample.grid;
    let r0 = map.r0();
    let (eig, converged) = leading_eigen_unchecked(&sample.operator(t), tol, max_iter);
    let origin_mass = mass_near_singularity(&equilibrium_measure(grid, &eig), r0);
    let (punct, punctured_converged) = leading_eigen_unchecked(&sample.operator_with(t, &grid.origin_cluster()), tol, max_iter);
    PressurePoint {
        t,
        pressure: eig.lambda.ln(),
        lambda: eig.lambda,
        residual: eig.residual,
        iterations: eig.iterations,
        converged,
        grid_n: grid.n,
        origin_mass,
        branch: if origin_mass >= 0.5 { Branch::Dirac } else { Branch::Hyperbolic },
        punctured_pressure: punct.lambda.ln(),
        punctured_origin_mass: mass_near_singularity(&equilibrium_measure(grid, &punct), r0),
        punctured_converged,
    }
}

/// `P(t) = log lambda(L_t)` for each `t`, with one shared transition sample.
pub fn pressure_curve(map: &AlmostAnosovMap, t_list: &[f64], settings: UlamSettings) -> Result<PressureCurve, ThermoError> {
    if t_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(ThermoError::UnsortedT);
    }
    let sample = TransitionSample::build(map, UlamGrid::new(settings.grid_n), settings.samples_per_cell, settings.seed)?;
    let points = t_list
        .iter()
        .map(|&t| pressure_point(map, &sample, t, settings.tol, settings.max_iter))
        .collect();
    Ok(PressureCurve { points })
}

/// Stationary density of the Ulam chain (left eigenvector of `L_1`).
pub fn srb_density(map: &AlmostAnosovMap, settings: UlamSettings) -> Result<MeasureOnGrid, ThermoError> {
    let sample = TransitionSample::build(map, UlamGrid::new(settings.grid_n), settings.samples_per_cell, settings.seed)?;
    srb_density_from(&sample, settings.tol, settings.max_iter)
}

pub fn srb_density_from(sample: &TransitionSample, tol: f64, max_iter: usize) -> Result<MeasureOnGrid, ThermoError> {
    let eig = leading_eigen(&sample.operator(1.0), tol, max_iter)?;
    Ok(MeasureOnGrid::new(sample.grid, eig.left))
}

/// Cell occupation of one orbit of length `len` after `burn_in`, started at a seeded random point.
pub fn birkhoff_histogram(map: &AlmostAnosovMap, grid: UlamGrid, len: usize, burn_in: usize, seed: u64) -> MeasureOnGrid {
    let mut rng = task_rng(seed, "birkhoff", 0);
    let mut p = TorusPoint::new(rng.gen(), rng.gen());
    p = map.iterate(&p, burn_in);
    let mut counts = vec![0.0; grid.cells()];
    for _ in 0..len {
        counts[grid.cell_of(&p)] += 1.0;
        p = map.apply(&p);
    }
    MeasureOnGrid::new(grid, counts)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EntropyEstimate {
    /// Mean of `(log R_n - log R_{n/2}) / (n - n/2)`.
    pub value: f64,
    /// Mean of `log R_n / n`, biased upward by the block-entropy constant.
    pub raw: f64,
    pub word_length: usize,
    pub trials: usize,
    /// Trials whose recurrence exceeded the cap (counted at the cap).
    pub censored: usize,
}

/// Default cap on recurrence times.
pub const ENTROPY_CAP: usize = 4_000_000;

fn quadrant(p: &TorusPoint) -> u64 {
    (p.x() >= 0.5) as u64 | (((p.y() >= 0.5) as u64) << 1)
}

/// First `k >= 1` at which the length-`n` itinerary of `x` in the 2x2
/// partition recurs, or `None` past `cap`.
pub fn recurrence_time(map: &AlmostAnosovMap, x: &TorusPoint, n: usize, cap: usize) -> Option<usize> {
    assert!((1..=31).contains(&n));
    let shift = 2 * (n as u64 - 1);
    let mut p = *x;
    let mut word = 0u64;
    for k in 0..n {
        word |= quadrant(&p) << (2 * k);
        p = map.apply(&p);
    }
    // p = f^n(x); `cur` is the word starting at f^k(x)
    let mut cur = word;
    for k in 1..=cap {
        cur = (cur >> 2) | (quadrant(&p) << shift);
        p = map.apply(&p);
        if cur == word {
            return Some(k);
        }
    }
    None
}

/// Return-time entropy estimate from the recurrence of itineraries of
/// lengths `n` and `n / 2`; the slope between them removes the `O(1)` term
/// in `log R_n = n h + O(1)`.
pub fn entropy_estimate(map: &AlmostAnosovMap, starts: &[TorusPoint], n: usize, cap: usize) -> EntropyEstimate {
    assert!(n >= 2);
    let m = n / 2;
    let r: Vec<(Option<usize>, Option<usize>)> = starts
        .par_iter()
        .map(|x| (recurrence_time(map, x, n, cap), recurrence_time(map, x, m, cap)))
        .collect();
    let censored = r.iter().filter(|v| v.0.is_none()).count();
    let log = |v: Option<usize>| (v.unwrap_or(cap) as f64).ln();
    let trials = starts.len().max(1) as f64;
    let value = r.iter().map(|&(a, b)| (log(a) - log(b)) / (n - m) as f64).sum::<f64>() / trials;
    let raw = r.iter().map(|&(a, _)| log(a) / n as f64).sum::<f64>() / trials;
    EntropyEstimate { value, raw, word_length: n, trials: starts.len(), censored }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MargulisRuelleReport {
    pub entropy: f64,
    pub lyapunov: f64,
    pub slack: f64,
    pub inequality_holds: bool,
    pub pesin_gap: f64,
    pub pesin_holds: bool,
}

/// `lambda_u(mu)` as the `mu`-average of cell-mean `log J`.
pub fn unstable_exponent(sample: &TransitionSample, mu: &MeasureOnGrid) -> f64 {
    sample.cell_mean_log_jacobian().iter().zip(&mu.weights).map(|(l, w)| l * w).sum()
}

/// `h <= lambda_u + 0.05`, and `|h - lambda_u| <= 0.15 lambda_u` for the Pesin check.
pub fn margulis_ruelle_check(sample: &TransitionSample, mu: &MeasureOnGrid, entropy: f64) -> MargulisRuelleReport {
    let lyapunov = unstable_exponent(sample, mu);
    let pesin_gap = (entropy - lyapunov).abs();
    MargulisRuelleReport {
        entropy,
        lyapunov,
        slack: lyapunov + 0.05 - entropy,
        inequality_holds: entropy <= lyapunov + 0.05,
        pesin_gap,
        pesin_holds: pesin_gap <= 0.15 * lyapunov,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::MapSpec;

    const LOG_GOLDEN: f64 = 0.962_423_650_119_206_9;

    fn cat() -> AlmostAnosovMap {
        AlmostAnosovMap::linear([[2, 1], [1, 1]]).unwrap()
    }

    #[test]
    fn grid_indexing() {
        let g = UlamGrid::new(8);
        assert_eq!(g.cell_of(&TorusPoint::new(0.99, 0.0)), 7);
        assert_eq!(g.coords(g.index(3, 5)), (3, 5));
        assert_eq!(g.distance_to_origin(0), 0.0);
        assert_eq!(g.distance_to_origin(g.index(7, 7)), 0.0);
        assert!((g.distance_to_origin(g.index(2, 0)) - 0.25).abs() < 1e-15);
        assert_eq!(g.origin_cluster().len(), 4);
    }

    #[test]
    fn stochastic_at_one_and_linear_weights() {
        let s = TransitionSample::build(&cat(), UlamGrid::new(32), 16, 1).unwrap();
        for r in s.operator(1.0).row_sums() {
            assert!((r - 1.0).abs() < 1e-9);
        }
        for t in [0.0, 0.5, 2.0] {
            let lam = LOG_GOLDEN.exp().powf(1.0 - t);
            for r in s.operator(t).row_sums() {
                assert!((r / lam - 1.0).abs() < 1e-12);
            }
        }
        let eig = leading_eigen(&s.operator(0.0), 1e-10, 10_000).unwrap();
        assert!((eig.lambda.ln() - LOG_GOLDEN).abs() < 1e-10);
        assert!(TransitionSample::build(&cat(), UlamGrid::new(8), 8, 1).is_err());
    }

    #[test]
    fn eigen_trivial_cases() {
        let g = UlamGrid::new(4);
        let rows: Vec<Vec<(u32, f64)>> = (0..16).map(|i| vec![(i as u32, 1.0)]).collect();
        let id = TransferOperator::from_rows(g, 0.0, 16, rows);
        let e = leading_eigen(&id, 1e-12, 10).unwrap();
        assert_eq!(e.lambda, 1.0);
        let f = AlmostAnosovMap::new(MapSpec::default()).unwrap();
        let op = TransitionSample::build(&f, UlamGrid::new(24), 16, 2).unwrap().operator(0.3);
        let a = leading_eigen(&op, 1e-11, 20_000).unwrap();
        let b = leading_eigen(&op.scaled(2.5), 1e-11, 20_000).unwrap();
        assert!((b.lambda / a.lambda - 2.5).abs() < 1e-9);
        let tv: f64 = a.left.iter().zip(&b.left).map(|(x, y)| (x - y).abs()).sum();
        assert!(tv < 1e-8);
        // relabeling by the symmetry (i, j) -> (n-1-i, n-1-j)
        let n = 24;
        let perm: Vec<usize> = (0..n * n).map(|k| (n - 1 - k % n) + n * (n - 1 - k / n)).collect();
        let c = leading_eigen(&op.relabeled(&perm), 1e-11, 20_000).unwrap();
        assert!((c.lambda / a.lambda - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pressure_curve_shape_and_dirac_trend() {
        let f = AlmostAnosovMap::new(MapSpec::default()).unwrap();
        let ts = [-0.5, 0.0, 0.5, 1.0, 1.2, 1.5, 2.0];
        let c = pressure_curve(&f, &ts, UlamSettings::new(64, 32, 1)).unwrap();
        assert!(c.all_converged());
        let p: Vec<f64> = c.points.iter().map(|q| q.pressure).collect();
        for w in p.windows(2) {
            assert!(w[1] <= w[0] + 1e-3, "{p:?}");
        }
        for k in 1..ts.len() - 1 {
            let a = (ts[k + 1] - ts[k]) / (ts[k + 1] - ts[k - 1]);
            assert!(p[k] <= a * p[k - 1] + (1.0 - a) * p[k + 1] + 1e-3, "{p:?}");
        }
        let mass: Vec<f64> = c.points[3..].iter().map(|q| q.origin_mass).collect();
        for w in mass.windows(2) {
            assert!(w[1] >= w[0] - 1e-4, "{mass:?}");
        }
        assert_eq!(c.at(2.0).unwrap().branch, Branch::Dirac);
        assert!(matches!(pressure_curve(&f, &[1.0, 0.0], UlamSettings::new(8, 16, 1)), Err(ThermoError::UnsortedT)));
    }

    #[test]
    fn cat_density_is_uniform() {
        let mu = srb_density(&cat(), UlamSettings::new(32, 1024, 4)).unwrap();
        let u = 1.0 / 1024.0;
        assert!(mu.weights.iter().all(|w| (w / u - 1.0).abs() < 0.05));
    }

    #[test]
    fn mass_near_singularity_examples() {
        let g = UlamGrid::new(1024);
        let m = mass_near_singularity(&MeasureOnGrid::uniform(g), 0.05);
        assert!((m / (std::f64::consts::PI * 0.0025) - 1.0).abs() < 0.05, "{m}");
        let d = MeasureOnGrid::dirac_proxy(UlamGrid::new(64));
        assert_eq!(mass_near_singularity(&d, 1.0 / 64.0 * 2f64.sqrt()), 1.0);
    }

    #[test]
    fn recurrence_examples() {
        let f = cat();
        assert_eq!(recurrence_time(&f, &TorusPoint::ORIGIN, 12, 10), Some(1));
        // (0.2, 0.4) -> (0.8, 0.6) -> (0.2, 0.4)
        let p = TorusPoint::new(0.2, 0.4);
        assert_eq!(recurrence_time(&f, &p, 12, 100), Some(2));
        let e = entropy_estimate(&f, &[TorusPoint::ORIGIN; 5], 12, 100);
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn cat_entropy_and_pesin() {
        let f = cat();
        let mut rng = task_rng(5, "t", 0);
        let starts: Vec<TorusPoint> = (0..400).map(|_| TorusPoint::new(rng.gen(), rng.gen())).collect();
        let e = entropy_estimate(&f, &starts, 12, ENTROPY_CAP);
        assert!((e.value / LOG_GOLDEN - 1.0).abs() < 0.15, "{e:?}");
        let s = TransitionSample::build(&f, UlamGrid::new(16), 16, 1).unwrap();
        let rep = margulis_ruelle_check(&s, &MeasureOnGrid::uniform(s.grid), e.value);
        assert!(rep.inequality_holds && rep.pesin_holds, "{rep:?}");
    }
}
