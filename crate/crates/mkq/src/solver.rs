//! Entropic semi-discrete dual solver.
//!
//! Maximizes the regularized semidual
//!
//! ```text
//! F(v) = E_U[ v^{c,eps}(U) ] + (1/n) sum_i v_i - eps,
//! v^{c,eps}(u) = -eps log( (1/n) sum_i exp( (v_i - |u - x_i|^2 / 2) / eps ) )
//! ```
//!
//! over one dual weight per data point, the expectation running over the
//! reference measure. Two routes are provided: stochastic gradient ascent
//! with Polyak averaging on a stream of fresh reference samples, and a
//! damped-free Sinkhorn fixed point on a frozen reference grid. The fixed
//! point alternates exact coordinate maximizations, so its grid objective is
//! non-decreasing by construction and convergence is easy to monitor.

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::reference::{sample_reference, ReferenceSpec};

/// Terms this far below the running maximum contribute less than 3e-20
/// relative and are skipped before the `exp`.
const LSE_CUTOFF: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    /// Robbins-Monro ascent on fresh reference draws, averaged iterates.
    AveragedSgd,
    /// Sinkhorn alternation on a frozen reference grid.
    FixedPoint,
}

/// Knobs for [`solve_semidual`]. `Default` picks the fixed-point route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Sweeps for the fixed point, gradient steps for SGD.
    pub iterations: usize,
    /// Frozen grid size for the fixed point, minibatch size for SGD;
    /// default `min(10 n, 100_000)` for both.
    pub reference_points: Option<usize>,
    /// SGD step is `step_scale / sqrt(t)`.
    pub step_scale: f64,
    /// Stop when the fixed-point residual
    /// `max_i |exp((T(v)_i - v_i)/eps) - 1|` drops below this.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: SolveMethod::FixedPoint,
            iterations: 500,
            reference_points: None,
            step_scale: 1.0,
            tolerance: 1e-7,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn sgd() -> Self {
        SolveOptions {
            method: SolveMethod::AveragedSgd,
            iterations: 2000,
            ..SolveOptions::default()
        }
    }
}

/// Diagnostics from a solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveLog {
    pub method: SolveMethod,
    pub iterations_run: usize,
    /// Semidual value on the evaluation grid at the final weights.
    pub final_objective: f64,
    /// Final fixed-point residual on the evaluation grid.
    pub residual: f64,
    pub converged: bool,
    /// Per-sweep grid objective (fixed point only); non-decreasing.
    pub objective_trace: Vec<f64>,
}

/// A solved potential: data, dual weights, and everything needed to evaluate
/// the entropic quantile and rank maps.
#[derive(Debug)]
pub struct FittedPotential {
    data: PointCloud,
    v: Vec<f64>,
    epsilon: f64,
    reference: ReferenceSpec,
    psi_zero: f64,
    log: SolveLog,
    backward_grid: OnceLock<(PointCloud, Vec<f64>)>,
}

impl FittedPotential {
    /// Reassembles a potential from stored parts, recomputing the anchor
    /// normalization. Used when loading a persisted fit.
    pub fn from_parts(
        data: PointCloud,
        v: Vec<f64>,
        epsilon: f64,
        reference: ReferenceSpec,
        log: SolveLog,
    ) -> Result<Self> {
        if v.len() != data.n() {
            return Err(Error::data("weight count does not match data size"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::data("dual weights contain non-finite entries"));
        }
        check_problem(&data, &reference, epsilon)?;
        let origin = vec![0.0; data.dim()];
        let mut scratch = vec![0.0; data.n()];
        let psi_zero = -smooth_c_transform_into(&data, &v, epsilon, &origin, &mut scratch);
        Ok(FittedPotential {
            data,
            v,
            epsilon,
            reference,
            psi_zero,
            log,
            backward_grid: OnceLock::new(),
        })
    }

    pub fn data(&self) -> &PointCloud {
        &self.data
    }

    pub fn weights(&self) -> &[f64] {
        &self.v
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn reference(&self) -> &ReferenceSpec {
        &self.reference
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn solve_log(&self) -> &SolveLog {
        &self.log
    }

    pub(crate) fn psi_zero(&self) -> f64 {
        self.psi_zero
    }

    /// Frozen reference grid for the backward (rank) map with the smooth
    /// c-transform precomputed at each grid point; built lazily and
    /// deterministically.
    pub(crate) fn backward_grid(&self) -> &(PointCloud, Vec<f64>) {
        self.backward_grid.get_or_init(|| {
            let grid = sample_reference(&self.reference, 4096, 0x6261_636b)
                .expect("reference sampling for a validated spec cannot fail");
            let mut scratch = vec![0.0; self.data.n()];
            let a: Vec<f64> = grid
                .rows()
                .map(|u| smooth_c_transform_into(&self.data, &self.v, self.epsilon, u, &mut scratch))
                .collect();
            (grid, a)
        })
    }
}

/// Solves the semidual for `data` against `reference` at regularization
/// `epsilon`, drawing any reference discretization from `options.seed`.
pub fn solve_semidual(
    data: PointCloud,
    reference: ReferenceSpec,
    epsilon: f64,
    options: &SolveOptions,
) -> Result<FittedPotential> {
    check_problem(&data, &reference, epsilon)?;
    match options.method {
        SolveMethod::FixedPoint => {
            let m = options
                .reference_points
                .unwrap_or_else(|| (10 * data.n()).min(100_000));
            let grid = sample_reference(&reference, m, options.seed)?;
            solve_on_grid(data, reference, grid, epsilon, options)
        }
        SolveMethod::AveragedSgd => solve_sgd(data, reference, epsilon, options),
    }
}

/// Fixed-point solve on a caller-supplied reference grid. The grid must be
/// distributed as the reference; exposing it keeps transformed problems
/// comparable point by point.
pub fn solve_semidual_on_grid(
    data: PointCloud,
    reference: ReferenceSpec,
    grid: PointCloud,
    epsilon: f64,
    options: &SolveOptions,
) -> Result<FittedPotential> {
    check_problem(&data, &reference, epsilon)?;
    if grid.dim() != data.dim() {
        return Err(Error::parameter("reference grid dimension mismatch"));
    }
    solve_on_grid(data, reference, grid, epsilon, options)
}

fn check_problem(data: &PointCloud, reference: &ReferenceSpec, epsilon: f64) -> Result<()> {
    if data.n() < 2 {
        return Err(Error::data("need at least 2 data points"));
    }
    if data.dim() != reference.dim() {
        return Err(Error::parameter(format!(
            "data dimension {} does not match reference dimension {}",
            data.dim(),
            reference.dim()
        )));
    }
    if data.is_degenerate() {
        return Err(Error::data(
            "degenerate point cloud: all observations coincide",
        ));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::parameter(format!(
            "regularization must be positive and finite, got {epsilon}"
        )));
    }
    if reference.is_positive() && data.min_coordinate() < 0.0 {
        log::warn!(
            "data has negative coordinates but the reference lives in the positive orthant"
        );
    }
    Ok(())
}

/// Grid half of a Sinkhorn sweep: `a_j = v^{c,eps}(u_j)`, the exact
/// maximization in the grid-side weights.
fn refresh_transforms(
    data: &PointCloud,
    grid: &PointCloud,
    eps: f64,
    v: &[f64],
    a: &mut [f64],
    scratch: &mut [f64],
) {
    for (j, u) in grid.rows().enumerate() {
        a[j] = smooth_c_transform_into(data, v, eps, u, scratch);
    }
}

/// Data half of a Sinkhorn sweep: maximize each dual weight exactly given
/// `a`. Returns the fixed-point residual
/// `max_i |exp((T(v)_i - v_i)/eps) - 1|`.
fn update_weights(
    data: &PointCloud,
    grid: &PointCloud,
    eps: f64,
    v: &mut [f64],
    a: &[f64],
    scratch: &mut [f64],
) -> Result<f64> {
    let m = grid.n();
    let mut residual = 0.0f64;
    for i in 0..data.n() {
        let x = data.row(i);
        for (j, u) in grid.rows().enumerate() {
            scratch[j] = (a[j] - half_sq_dist(u, x)) / eps;
        }
        let new_v = -eps * log_mean_exp(&scratch[..m]);
        if !new_v.is_finite() {
            return Err(Error::numerical("dual weight became non-finite"));
        }
        let delta = ((new_v - v[i]) / eps).clamp(-700.0, 700.0);
        residual = residual.max(delta.exp_m1().abs());
        v[i] = new_v;
    }
    Ok(residual)
}

fn solve_on_grid(
    data: PointCloud,
    reference: ReferenceSpec,
    grid: PointCloud,
    epsilon: f64,
    options: &SolveOptions,
) -> Result<FittedPotential> {
    let n = data.n();
    let m = grid.n();
    let mut v = vec![0.0f64; n];
    let mut a = vec![0.0f64; m];
    let mut scratch = vec![0.0f64; n.max(m)];
    let mut trace = Vec::with_capacity(options.iterations);
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut sweeps = 0usize;

    // Annealed warm start: the plain fixed point stalls at small epsilon
    // because the Gibbs weights are nearly one-hot from a cold start, so
    // relax through a geometric ladder of regularizations, each solution
    // seeding the next.
    let mut warm_eps = 1.0;
    while warm_eps > 2.0 * epsilon {
        for _ in 0..2 {
            refresh_transforms(&data, &grid, warm_eps, &v, &mut a, &mut scratch);
            update_weights(&data, &grid, warm_eps, &mut v, &a, &mut scratch)?;
        }
        warm_eps *= 0.5;
    }

    for _ in 0..options.iterations {
        sweeps += 1;
        refresh_transforms(&data, &grid, epsilon, &v, &mut a, &mut scratch);
        // Pre-update objective; coordinate ascent at fixed epsilon makes
        // this trace non-decreasing.
        trace.push(grid_objective(&a, &v, epsilon));
        residual = update_weights(&data, &grid, epsilon, &mut v, &a, &mut scratch)?;
        if residual <= options.tolerance {
            converged = true;
            break;
        }
    }

    // Record the post-update objective so the trace ends at the final weights.
    for (j, u) in grid.rows().enumerate() {
        a[j] = smooth_c_transform_into(&data, &v, epsilon, u, &mut scratch);
    }
    trace.push(grid_objective(&a, &v, epsilon));

    finish(
        data,
        reference,
        v,
        epsilon,
        SolveLog {
            method: SolveMethod::FixedPoint,
            iterations_run: sweeps,
            final_objective: *trace.last().unwrap(),
            residual,
            converged,
            objective_trace: trace,
        },
    )
}

fn solve_sgd(
    data: PointCloud,
    reference: ReferenceSpec,
    epsilon: f64,
    options: &SolveOptions,
) -> Result<FittedPotential> {
    let n = data.n();
    let batch = options
        .reference_points
        .unwrap_or_else(|| (10 * n).min(100_000))
        .max(1);
    let mut rng = ChaCha12Rng::seed_from_u64(options.seed);
    let mut v = vec![0.0f64; n];
    let mut v_bar = vec![0.0f64; n];
    let mut averaged = 0usize;
    let mut g_hat = vec![0.0f64; n];
    let mut scratch = vec![0.0f64; n];
    let burn_in = options.iterations / 2;

    for t in 1..=options.iterations {
        let u_batch = crate::reference::sample_reference_with_rng(&reference, batch, &mut rng)?;
        g_hat.iter_mut().for_each(|g| *g = 0.0);
        for u in u_batch.rows() {
            accumulate_gibbs(&data, &v, epsilon, u, &mut scratch, &mut g_hat);
        }
        // Gradient of F in v_i is 1/n - E[g_i(U)]; scale by n so steps are O(1).
        let gamma = options.step_scale / (t as f64).sqrt();
        for (vi, gi) in v.iter_mut().zip(&g_hat) {
            *vi += gamma * (1.0 - (n as f64) * gi / batch as f64);
            if !vi.is_finite() {
                return Err(Error::numerical("dual weight became non-finite"));
            }
        }
        if t > burn_in {
            averaged += 1;
            for (vb, vi) in v_bar.iter_mut().zip(&v) {
                *vb += (*vi - *vb) / averaged as f64;
            }
        }
    }
    let v = if averaged > 0 { v_bar } else { v };

    // Fixed-point diagnostics on a held-out evaluation grid.
    let eval = sample_reference(&reference, (4 * n).clamp(1024, 16_384), options.seed ^ 0x5eed)?;
    let m = eval.n();
    let mut a = vec![0.0f64; m];
    let mut scratch = vec![0.0f64; n.max(m)];
    for (j, u) in eval.rows().enumerate() {
        a[j] = smooth_c_transform_into(&data, &v, epsilon, u, &mut scratch);
    }
    let objective = grid_objective(&a, &v, epsilon);
    let mut residual = 0.0f64;
    for i in 0..n {
        let x = data.row(i);
        for (j, u) in eval.rows().enumerate() {
            scratch[j] = (a[j] - half_sq_dist(u, x)) / epsilon;
        }
        let new_v = -epsilon * log_mean_exp(&scratch[..m]);
        let delta = ((new_v - v[i]) / epsilon).clamp(-700.0, 700.0);
        residual = residual.max(delta.exp_m1().abs());
    }

    finish(
        data,
        reference,
        v,
        epsilon,
        SolveLog {
            method: SolveMethod::AveragedSgd,
            iterations_run: options.iterations,
            final_objective: objective,
            residual,
            converged: residual <= options.tolerance,
            objective_trace: Vec::new(),
        },
    )
}

fn finish(
    data: PointCloud,
    reference: ReferenceSpec,
    mut v: Vec<f64>,
    epsilon: f64,
    log: SolveLog,
) -> Result<FittedPotential> {
    // The semidual is invariant under adding a constant to all weights;
    // anchor the first one at zero to fix the gauge.
    let anchor = v[0];
    for vi in &mut v {
        *vi -= anchor;
    }
    let origin = vec![0.0; data.dim()];
    let mut scratch = vec![0.0; data.n()];
    let psi_zero = -smooth_c_transform_into(&data, &v, epsilon, &origin, &mut scratch);
    if !psi_zero.is_finite() {
        return Err(Error::numerical("potential normalization is non-finite"));
    }
    Ok(FittedPotential {
        data,
        v,
        epsilon,
        reference,
        psi_zero,
        log,
        backward_grid: OnceLock::new(),
    })
}

/// Smooth c-transform
/// `v^{c,eps}(u) = -eps log((1/n) sum_i exp((v_i - |u - x_i|^2/2)/eps))`.
pub fn smooth_c_transform(data: &PointCloud, v: &[f64], epsilon: f64, u: &[f64]) -> f64 {
    let mut scratch = vec![0.0; data.n()];
    smooth_c_transform_into(data, v, epsilon, u, &mut scratch)
}

pub(crate) fn smooth_c_transform_into(
    data: &PointCloud,
    v: &[f64],
    epsilon: f64,
    u: &[f64],
    scratch: &mut [f64],
) -> f64 {
    for (i, x) in data.rows().enumerate() {
        scratch[i] = (v[i] - half_sq_dist(u, x)) / epsilon;
    }
    -epsilon * log_mean_exp(&scratch[..data.n()])
}

/// Adds the Gibbs weights `g_i(u)` (a probability vector over data points)
/// into `out`.
pub(crate) fn accumulate_gibbs(
    data: &PointCloud,
    v: &[f64],
    epsilon: f64,
    u: &[f64],
    scratch: &mut [f64],
    out: &mut [f64],
) {
    let n = data.n();
    let mut max = f64::NEG_INFINITY;
    for (i, x) in data.rows().enumerate() {
        scratch[i] = (v[i] - half_sq_dist(u, x)) / epsilon;
        max = max.max(scratch[i]);
    }
    let mut total = 0.0;
    for t in scratch[..n].iter_mut() {
        if *t >= max - LSE_CUTOFF {
            *t = (*t - max).exp();
            total += *t;
        } else {
            *t = 0.0;
        }
    }
    for (o, t) in out.iter_mut().zip(&scratch[..n]) {
        *o += t / total;
    }
}

/// Numerically safe `log((1/n) sum exp(t_i))`, skipping negligible terms.
fn log_mean_exp(t: &[f64]) -> f64 {
    let max = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = t
        .iter()
        .filter(|&&x| x >= max - LSE_CUTOFF)
        .map(|&x| (x - max).exp())
        .sum();
    max + sum.ln() - (t.len() as f64).ln()
}

fn grid_objective(a: &[f64], v: &[f64], epsilon: f64) -> f64 {
    a.iter().sum::<f64>() / a.len() as f64 + v.iter().sum::<f64>() / v.len() as f64 - epsilon
}

#[inline]
pub(crate) fn half_sq_dist(u: &[f64], x: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in u.iter().zip(x) {
        let d = a - b;
        s += d * d;
    }
    0.5 * s
}
