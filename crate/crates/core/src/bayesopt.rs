//! Bayesian optimization of circuit parameters.
//!
//! A Gaussian-process surrogate (squared-exponential kernel, fixed
//! hyperparameters, observations standardized per step) drives an
//! expected-improvement acquisition that is maximized over a seeded uniform
//! candidate pool. The loop spends exactly `budget` objective evaluations:
//! Latin-hypercube start points first, acquisition picks afterwards.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};
use nalgebra::{Cholesky, DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct BoConfig {
    /// Total number of objective evaluations.
    pub budget: usize,
    /// Space-filling evaluations before the surrogate takes over. Capped at
    /// `budget` when the budget is smaller.
    pub n_init: usize,
    /// Candidate points scored per acquisition step.
    pub candidate_pool: usize,
    /// Per-dimension search interval, applied to every dimension.
    pub lower: f64,
    pub upper: f64,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig {
            budget: 20,
            n_init: 5,
            candidate_pool: 512,
            lower: 0.0,
            upper: std::f64::consts::TAU,
        }
    }
}

impl BoConfig {
    fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::InvalidArgument("budget must be at least 1".into()));
        }
        if self.n_init < 1 {
            return Err(Error::InvalidArgument("n_init must be at least 1".into()));
        }
        if self.candidate_pool < 1 {
            return Err(Error::InvalidArgument(
                "candidate_pool must be at least 1".into(),
            ));
        }
        if !(self.upper > self.lower) {
            return Err(Error::InvalidArgument(format!(
                "bounds [{}, {}) are empty",
                self.lower, self.upper
            )));
        }
        Ok(())
    }
}

/// Full record of an optimization run.
#[derive(Debug, Clone)]
pub struct BoResult {
    pub best_theta: Vec<f64>,
    pub best_value: f64,
    /// Every evaluated point with its objective value, in evaluation order.
    pub trace: Vec<(Vec<f64>, f64)>,
}

const LENGTH_SCALE: f64 = 0.2;
const JITTER: f64 = 1e-6;

fn se_kernel(a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * LENGTH_SCALE * LENGTH_SCALE)).exp()
}

/// Abramowitz-Stegun 7.1.26 rational approximation, absolute error < 1.5e-7.
/// Plenty for ranking acquisition candidates.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    sign * (1.0 - poly * (-x * x).exp())
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Latin hypercube in the unit cube: each dimension is stratified into
/// `count` bins visited in a seeded permutation.
fn latin_hypercube(count: usize, dims: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0f64; dims]; count];
    for d in 0..dims {
        let mut strata: Vec<usize> = (0..count).collect();
        rng.shuffle(&mut strata);
        for (i, point) in points.iter_mut().enumerate() {
            point[d] = (strata[i] as f64 + rng.next_f64()) / count as f64;
        }
    }
    points
}

/// Maximize `objective` over `[lower, upper)^n_dims` in exactly
/// `config.budget` evaluations. Zero-dimensional problems are evaluated once
/// on the empty vector and returned immediately.
pub fn optimize(
    mut objective: impl FnMut(&[f64]) -> f64,
    n_dims: usize,
    config: &BoConfig,
    seed: u64,
) -> Result<BoResult> {
    config.validate()?;
    if n_dims == 0 {
        let value = objective(&[]);
        return Ok(BoResult {
            best_theta: Vec::new(),
            best_value: value,
            trace: vec![(Vec::new(), value)],
        });
    }

    let span = config.upper - config.lower;
    let to_theta = |u: &[f64]| -> Vec<f64> { u.iter().map(|v| config.lower + span * v).collect() };

    let mut rng = Rng::new(derive_seed(seed, 0x10));
    let mut unit_points: Vec<Vec<f64>> = Vec::with_capacity(config.budget);
    let mut values: Vec<f64> = Vec::with_capacity(config.budget);
    let mut trace = Vec::with_capacity(config.budget);

    let n_init = config.n_init.min(config.budget);
    for u in latin_hypercube(n_init, n_dims, &mut rng) {
        let theta = to_theta(&u);
        let value = objective(&theta);
        trace.push((theta, value));
        unit_points.push(u);
        values.push(value);
    }

    while trace.len() < config.budget {
        let u_next = propose(&unit_points, &values, config.candidate_pool, n_dims, &mut rng);
        let theta = to_theta(&u_next);
        let value = objective(&theta);
        trace.push((theta, value));
        unit_points.push(u_next);
        values.push(value);
    }

    let mut best_idx = 0;
    for (i, value) in values.iter().enumerate() {
        if *value > values[best_idx] {
            best_idx = i;
        }
    }
    Ok(BoResult {
        best_theta: trace[best_idx].0.clone(),
        best_value: values[best_idx],
        trace,
    })
}

/// One acquisition step: fit the GP on standardized observations and return
/// the candidate with the largest expected improvement.
fn propose(
    points: &[Vec<f64>],
    values: &[f64],
    pool: usize,
    dims: usize,
    rng: &mut Rng,
) -> Vec<f64> {
    let n = points.len();
    let mean: f64 = values.iter().sum::<f64>() / n as f64;
    let var: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    let standardized: Vec<f64> = values.iter().map(|v| (v - mean) / scale).collect();
    let best = standardized.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut kernel = DMatrix::from_fn(n, n, |i, j| se_kernel(&points[i], &points[j]));
    let chol = loop {
        if let Some(c) = Cholesky::new(kernel.clone() + DMatrix::identity(n, n) * JITTER) {
            break c;
        }
        // Matrix nearly singular (duplicate evaluations); widen the jitter.
        kernel += DMatrix::identity(n, n) * (JITTER * 100.0);
    };
    let alpha = chol.solve(&DVector::from_column_slice(&standardized));

    let mut best_candidate: Option<(Vec<f64>, f64)> = None;
    for _ in 0..pool {
        let u: Vec<f64> = (0..dims).map(|_| rng.next_f64()).collect();
        let k_star = DVector::from_fn(n, |i, _| se_kernel(&points[i], &u));
        let mu = k_star.dot(&alpha);
        let solved = chol.solve(&k_star);
        let sigma2 = (1.0 + JITTER - k_star.dot(&solved)).max(1e-12);
        let sigma = sigma2.sqrt();
        let z = (mu - best) / sigma;
        let ei = sigma * (z * normal_cdf(z) + normal_pdf(z));
        if best_candidate
            .as_ref()
            .map_or(true, |(_, best_ei)| ei > *best_ei)
        {
            best_candidate = Some((u, ei));
        }
    }
    best_candidate.unwrap().0
}
