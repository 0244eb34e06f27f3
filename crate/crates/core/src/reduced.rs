//! The reduced functional
//!
//! ```text
//! Ψ_k(a, μ) = A²·⟨M_k(a) v, v⟩ − B·⟨μ, μ⟩,   v_j = μ_j^{(N−2)/2},
//! M_k: m_jj = R(a_j), m_jl = −G(a_j, a_l),
//! ```
//!
//! its derivatives, a globalized Newton search for critical points, and
//! multistart enumeration. Configurations are flattened as
//! `(a_1, …, a_k, μ_1, …, μ_k)`, so gradients have length `(N+1)k`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bubble::DimensionContext;
use crate::field::dist;
use crate::greens::{DomainKernel, GreensError};

#[derive(Debug, Error)]
pub enum ReducedError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("spikes {0} and {1} coincide")]
    CoincidentPoints(usize, usize),
    #[error(transparent)]
    Kernel(#[from] GreensError),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("no convergence after {iterations} iterations (|∇Ψ| = {gradient_norm:e})")]
    NonConvergence { iterations: usize, gradient_norm: f64, last: SpikeConfiguration },
    #[error("iterates were pushed to the boundary (|∇Ψ| = {gradient_norm:e})")]
    BoundaryEscape { iterations: usize, gradient_norm: f64, last: SpikeConfiguration },
    #[error(transparent)]
    Reduced(#[from] ReducedError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpikeConfiguration {
    pub points: Vec<Vec<f64>>,
    pub heights: Vec<f64>,
}

impl SpikeConfiguration {
    pub fn new(points: Vec<Vec<f64>>, heights: Vec<f64>) -> Self {
        SpikeConfiguration { points, heights }
    }

    pub fn k(&self) -> usize {
        self.heights.len()
    }

    pub fn validate(&self, kernel: &dyn DomainKernel) -> Result<(), ReducedError> {
        let k = self.heights.len();
        if k == 0 || self.points.len() != k {
            return Err(ReducedError::InvalidConfiguration("need k ≥ 1 points and one height per point".into()));
        }
        for (j, (p, h)) in self.points.iter().zip(&self.heights).enumerate() {
            if p.len() != kernel.dim() {
                return Err(ReducedError::InvalidConfiguration(format!("point {j} has dimension {}", p.len())));
            }
            if !(kernel.shape().distance_to_boundary(p) > 0.0) {
                return Err(ReducedError::InvalidConfiguration(format!("point {j} is not interior")));
            }
            if !(*h > 0.0 && h.is_finite()) {
                return Err(ReducedError::InvalidConfiguration(format!("height {j} must be positive")));
            }
        }
        for i in 0..k {
            for j in (i + 1)..k {
                if !(dist(&self.points[i], &self.points[j]) > 0.0) {
                    return Err(ReducedError::CoincidentPoints(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn flatten(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.points.len() * self.points.first().map_or(0, Vec::len) + self.heights.len(),
            self.points.iter().flatten().copied().chain(self.heights.iter().copied()),
        )
    }

    pub fn unflatten(z: &DVector<f64>, n: usize, k: usize) -> Self {
        let points = (0..k).map(|j| z.as_slice()[j * n..(j + 1) * n].to_vec()).collect();
        let heights = z.as_slice()[n * k..].to_vec();
        SpikeConfiguration { points, heights }
    }

    /// Spikes sorted lexicographically by point coordinates.
    pub fn canonical(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.k()).collect();
        idx.sort_by(|&a, &b| {
            self.points[a]
                .iter()
                .zip(&self.points[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        SpikeConfiguration {
            points: idx.iter().map(|&j| self.points[j].clone()).collect(),
            heights: idx.iter().map(|&j| self.heights[j]).collect(),
        }
    }
}

pub fn interaction_matrix(kernel: &dyn DomainKernel, points: &[Vec<f64>]) -> Result<DMatrix<f64>, ReducedError> {
    let k = points.len();
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        m[(i, i)] = kernel.robin(&points[i])?;
        for j in (i + 1)..k {
            if !(dist(&points[i], &points[j]) > 0.0) {
                return Err(ReducedError::CoincidentPoints(i, j));
            }
            let g = kernel.green(&points[i], &points[j])?;
            m[(i, j)] = -g;
            m[(j, i)] = -g;
        }
    }
    Ok(m)
}

fn powers(ctx: &DimensionContext, mu: f64) -> (f64, f64, f64) {
    let m = ctx.m();
    (mu.powf(m), m * mu.powf(m - 1.0), m * (m - 1.0) * mu.powf(m - 2.0))
}

/// Sums the individual terms of Ψ in sorted order, with each pair's Green
/// value evaluated in lexicographic argument order, so that relabeling the
/// spikes reproduces Ψ bit for bit.
pub fn psi_eval(ctx: &DimensionContext, kernel: &dyn DomainKernel, config: &SpikeConfiguration) -> Result<f64, ReducedError> {
    config.validate(kernel)?;
    let k = config.k();
    let a2 = ctx.a * ctx.a;
    let v: Vec<f64> = config.heights.iter().map(|h| powers(ctx, *h).0).collect();
    let mut terms = Vec::with_capacity(k * (k + 3) / 2);
    for i in 0..k {
        let p = &config.points[i];
        terms.push(a2 * kernel.robin(p)? * (v[i] * v[i]));
        terms.push(-ctx.b * config.heights[i] * config.heights[i]);
        for j in (i + 1)..k {
            let q = &config.points[j];
            if !(dist(p, q) > 0.0) {
                return Err(ReducedError::CoincidentPoints(i, j));
            }
            let first = p.iter().zip(q).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()) != Some(std::cmp::Ordering::Greater);
            let g = if first { kernel.green(p, q)? } else { kernel.green(q, p)? };
            terms.push(-2.0 * a2 * g * (v[i] * v[j]));
        }
    }
    terms.sort_by(f64::total_cmp);
    Ok(terms.iter().sum())
}

pub fn psi_gradient(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    config: &SpikeConfiguration,
) -> Result<DVector<f64>, ReducedError> {
    config.validate(kernel)?;
    let (n, k) = (kernel.dim(), config.k());
    let a2 = ctx.a * ctx.a;
    let pw: Vec<(f64, f64, f64)> = config.heights.iter().map(|h| powers(ctx, *h)).collect();
    let mut g = DVector::zeros((n + 1) * k);
    for i in 0..k {
        let (vi, dvi, _) = pw[i];
        let ai = &config.points[i];
        let mut gx = kernel.robin_gradient(ai)? * (vi * vi);
        let mut gmu = 2.0 * vi * dvi * kernel.robin(ai)?;
        for j in 0..k {
            if j == i {
                continue;
            }
            let aj = &config.points[j];
            let vj = pw[j].0;
            gx -= kernel.green_grad_x(ai, aj)? * (2.0 * vi * vj);
            gmu -= 2.0 * dvi * vj * kernel.green(ai, aj)?;
        }
        g.rows_mut(i * n, n).copy_from(&(gx * a2));
        g[n * k + i] = a2 * gmu - 2.0 * ctx.b * config.heights[i];
    }
    Ok(g)
}

pub fn psi_hessian(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    config: &SpikeConfiguration,
) -> Result<DMatrix<f64>, ReducedError> {
    config.validate(kernel)?;
    let (n, k) = (kernel.dim(), config.k());
    let a2 = ctx.a * ctx.a;
    let pw: Vec<(f64, f64, f64)> = config.heights.iter().map(|h| powers(ctx, *h)).collect();
    let mut hm = DMatrix::zeros((n + 1) * k, (n + 1) * k);
    for i in 0..k {
        let (vi, dvi, ddvi) = pw[i];
        let ai = &config.points[i];
        let r = kernel.robin(ai)?;
        let gr = kernel.robin_gradient(ai)?;
        let mut xx = kernel.robin_hessian(ai)? * (vi * vi);
        let mut xmu = &gr * (2.0 * vi * dvi);
        let mut mumu = 2.0 * (dvi * dvi + vi * ddvi) * r;
        for j in 0..k {
            if j == i {
                continue;
            }
            let aj = &config.points[j];
            let (vj, dvj, _) = pw[j];
            let gij = kernel.green(ai, aj)?;
            let gx = kernel.green_grad_x(ai, aj)?;
            xx -= kernel.green_hess_xx(ai, aj)? * (2.0 * vi * vj);
            xmu -= &gx * (2.0 * dvi * vj);
            mumu -= 2.0 * ddvi * vj * gij;
            // off-diagonal blocks
            let cross = kernel.green_hess_xy(ai, aj)? * (-2.0 * a2 * vi * vj);
            hm.view_mut((i * n, j * n), (n, n)).copy_from(&cross);
            let xmu_j = &gx * (-2.0 * a2 * vi * dvj);
            hm.view_mut((i * n, n * k + j), (n, 1)).copy_from(&xmu_j);
            hm.view_mut((n * k + j, i * n), (1, n)).copy_from(&xmu_j.transpose());
            hm[(n * k + i, n * k + j)] = -2.0 * a2 * dvi * dvj * gij;
        }
        hm.view_mut((i * n, i * n), (n, n)).copy_from(&(xx * a2));
        let xmu = xmu * a2;
        hm.view_mut((i * n, n * k + i), (n, 1)).copy_from(&xmu);
        hm.view_mut((n * k + i, i * n), (1, n)).copy_from(&xmu.transpose());
        hm[(n * k + i, n * k + i)] = a2 * mumu - 2.0 * ctx.b;
    }
    Ok((&hm + hm.transpose()) * 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointRecord {
    pub configuration: SpikeConfiguration,
    pub psi: f64,
    pub gradient_norm: f64,
    /// Ascending Hessian eigenvalues, `(N+1)k` of them.
    pub hessian_spectrum: Vec<f64>,
    /// Ascending eigenvalues of `M_k`.
    pub m_eigenvalues: Vec<f64>,
    pub nondegenerate: bool,
    pub m_positive: bool,
    pub iterations: usize,
    /// Iterations that fell back to a gradient step on a singular Hessian.
    pub gradient_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Absolute tolerance on `|∇Ψ|`.
    pub tol: f64,
    pub max_iter: usize,
    pub degeneracy_tol: f64,
    /// Iterates closer than this fraction of the diameter to the boundary
    /// are rejected.
    pub barrier: f64,
    /// Initial trust radius in scaled units (points by diameter, heights relatively).
    pub initial_radius: f64,
    /// Heights below this are treated as collapse onto the degenerate `μ = 0` set.
    pub min_height: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iter: 200,
            degeneracy_tol: 1e-6,
            barrier: 1e-3,
            initial_radius: 0.25,
            min_height: 1e-6,
        }
    }
}

/// Flags from a Hessian and an interaction matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub hessian_spectrum: Vec<f64>,
    pub m_eigenvalues: Vec<f64>,
    pub nondegenerate: bool,
    pub m_positive: bool,
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Nondegenerate iff `min|λ| > tol·max|λ|`; positive iff all eigenvalues of `m` are `> 0`.
pub fn classify_matrices(hessian: &DMatrix<f64>, m: &DMatrix<f64>, degeneracy_tol: f64) -> Classification {
    let hessian_spectrum = sorted_eigenvalues(hessian);
    let m_eigenvalues = sorted_eigenvalues(m);
    let max = hessian_spectrum.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = hessian_spectrum.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    Classification {
        nondegenerate: max > 0.0 && min > degeneracy_tol * max,
        m_positive: m_eigenvalues.iter().all(|v| *v > 0.0),
        hessian_spectrum,
        m_eigenvalues,
    }
}

pub fn classify(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    record: &CriticalPointRecord,
    degeneracy_tol: f64,
) -> Result<CriticalPointRecord, ReducedError> {
    let h = psi_hessian(ctx, kernel, &record.configuration)?;
    let m = interaction_matrix(kernel, &record.configuration.points)?;
    let c = classify_matrices(&h, &m, degeneracy_tol);
    Ok(CriticalPointRecord {
        hessian_spectrum: c.hessian_spectrum,
        m_eigenvalues: c.m_eigenvalues,
        nondegenerate: c.nondegenerate,
        m_positive: c.m_positive,
        ..record.clone()
    })
}

/// Scaled step length: point moves by diameter, height changes relative
/// to the current height, maximum over all spikes.
fn scaled_norm(step: &DVector<f64>, config: &SpikeConfiguration, n: usize, diam: f64) -> f64 {
    let k = config.k();
    let mut s = 0.0f64;
    for j in 0..k {
        s = s.max(step.rows(j * n, n).norm() / diam);
        s = s.max(step[n * k + j].abs() / config.heights[j]);
    }
    s
}

enum Feasibility {
    Ok,
    Barrier,
    Collapse,
}

fn feasibility(kernel: &dyn DomainKernel, c: &SpikeConfiguration, opts: &SolverOptions) -> Feasibility {
    let shape = kernel.shape();
    let diam = shape.diameter();
    for p in &c.points {
        if shape.distance_to_boundary(p) < opts.barrier * diam {
            return Feasibility::Barrier;
        }
    }
    for i in 0..c.k() {
        for j in (i + 1)..c.k() {
            if dist(&c.points[i], &c.points[j]) < opts.barrier * diam {
                return Feasibility::Barrier;
            }
        }
    }
    if c.heights.iter().any(|h| !(*h >= opts.min_height) || !h.is_finite()) {
        return Feasibility::Collapse;
    }
    Feasibility::Ok
}

/// Newton iteration on `∇Ψ = 0` inside a trust region.
///
/// A step is accepted when it stays feasible and decreases `|∇Ψ|`;
/// otherwise the radius is halved. Full Newton steps that are accepted
/// double the radius. When the Hessian is numerically singular the step
/// falls back to `−H∇Ψ`, the steepest-descent direction of `|∇Ψ|²/2`.
pub fn find_critical_point(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    initial: &SpikeConfiguration,
    opts: &SolverOptions,
) -> Result<CriticalPointRecord, SolveError> {
    initial.validate(kernel)?;
    let (n, k) = (kernel.dim(), initial.k());
    let diam = kernel.shape().diameter();
    let mut config = initial.clone();
    let mut grad = psi_gradient(ctx, kernel, &config)?;
    let mut gnorm = grad.norm();
    let mut radius = opts.initial_radius;
    let mut iterations = 0;
    let mut gradient_steps = 0;
    let mut last_reject = Feasibility::Ok;

    while gnorm > opts.tol {
        if iterations >= opts.max_iter || radius < 1e-14 {
            let last = config.clone();
            return Err(match last_reject {
                Feasibility::Barrier => SolveError::BoundaryEscape { iterations, gradient_norm: gnorm, last },
                _ => SolveError::NonConvergence { iterations, gradient_norm: gnorm, last },
            });
        }
        iterations += 1;
        let hess = psi_hessian(ctx, kernel, &config)?;
        let eig = SymmetricEigen::new(hess.clone());
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let lmin = eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        let (mut step, newton) = if lmin > 1e-13 * lmax {
            let inv = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| 1.0 / l));
            let coeffs = eig.eigenvectors.transpose() * &grad;
            (-(&eig.eigenvectors * coeffs.component_mul(&inv)), true)
        } else {
            gradient_steps += 1;
            (-(&hess * &grad), false)
        };
        let len = scaled_norm(&step, &config, n, diam);
        let truncated = len > radius;
        if truncated {
            step *= radius / len;
        }
        let trial = SpikeConfiguration::unflatten(&(config.flatten() + &step), n, k);
        match feasibility(kernel, &trial, opts) {
            Feasibility::Ok => {}
            other => {
                last_reject = other;
                radius = radius.min(len) * 0.5;
                continue;
            }
        }
        let trial_grad = match psi_gradient(ctx, kernel, &trial) {
            Ok(g) => g,
            Err(_) => {
                radius = radius.min(len) * 0.5;
                continue;
            }
        };
        let trial_norm = trial_grad.norm();
        if trial_norm < gnorm {
            config = trial;
            grad = trial_grad;
            gnorm = trial_norm;
            last_reject = Feasibility::Ok;
            if newton && !truncated {
                radius = (2.0 * radius).max(2.0 * len).min(1.0);
            } else if newton {
                radius = (2.0 * radius).min(1.0);
            }
        } else {
            radius = radius.min(len) * 0.5;
        }
    }

    let psi = psi_eval(ctx, kernel, &config)?;
    let record = CriticalPointRecord {
        configuration: config,
        psi,
        gradient_norm: gnorm,
        hessian_spectrum: Vec::new(),
        m_eigenvalues: Vec::new(),
        nondegenerate: false,
        m_positive: false,
        iterations,
        gradient_steps,
    };
    Ok(classify(ctx, kernel, &record, opts.degeneracy_tol)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultistartSpec {
    pub starts: usize,
    pub seed: u64,
}

/// Heights at which `∂Ψ/∂μ = 0` for an isolated spike at `a`:
/// `μ^{N−4} = 2B/((N−2)A²R(a))`.
pub fn isolated_height(ctx: &DimensionContext, kernel: &dyn DomainKernel, a: &[f64]) -> Result<f64, GreensError> {
    let nf = ctx.n as f64;
    let r = kernel.robin(a)?;
    Ok((2.0 * ctx.b / ((nf - 2.0) * ctx.a * ctx.a * r)).powf(1.0 / (nf - 4.0)))
}

/// Random interior start number `index`, reproducible from `(seed, index)`.
pub fn multistart_initial(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    k: usize,
    seed: u64,
    index: u64,
    opts: &SolverOptions,
) -> Option<SpikeConfiguration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let shape = kernel.shape();
    let ball = shape.bounding_ball();
    let n = kernel.dim();
    let diam = shape.diameter();
    let margin = 5.0 * opts.barrier * diam;
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut tries = 0;
    while points.len() < k {
        tries += 1;
        if tries > 10_000 {
            return None;
        }
        let mut dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = ball.radius * rng.gen::<f64>();
        for (d, c) in dir.iter_mut().zip(&ball.center) {
            *d = c + r * *d / norm;
        }
        if shape.distance_to_boundary(&dir) < margin {
            continue;
        }
        if points.iter().any(|p| dist(p, &dir) < margin) {
            continue;
        }
        points.push(dir);
    }
    let mut heights = Vec::with_capacity(k);
    for p in &points {
        let base = isolated_height(ctx, kernel, p).ok()?;
        heights.push(base * (0.5 * (rng.gen::<f64>() - 0.5)).exp());
    }
    Some(SpikeConfiguration { points, heights })
}

/// Whether two records describe the same configuration up to relabeling.
pub fn same_configuration(a: &SpikeConfiguration, b: &SpikeConfiguration, diam: f64) -> bool {
    if a.k() != b.k() {
        return false;
    }
    let (ca, cb) = (a.canonical(), b.canonical());
    let close = |pa: &[usize]| {
        pa.iter().enumerate().all(|(i, &j)| {
            dist(&ca.points[i], &cb.points[j]) < 1e-5 * diam
                && (ca.heights[i] - cb.heights[j]).abs() < 1e-5 * ca.heights[i].max(cb.heights[j])
        })
    };
    let ident: Vec<usize> = (0..a.k()).collect();
    if close(&ident) {
        return true;
    }
    // lexicographic order can flip between nearly tied points
    if a.k() <= 7 {
        let mut perm = ident;
        while next_permutation(&mut perm) {
            if close(&perm) {
                return true;
            }
        }
    }
    false
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Removes duplicates (keeping the record with the smaller gradient norm)
/// and sorts by Ψ, ties broken by canonical coordinates.
pub fn deduplicate(records: Vec<CriticalPointRecord>, diam: f64) -> Vec<CriticalPointRecord> {
    let mut out: Vec<CriticalPointRecord> = Vec::new();
    for mut r in records {
        r.configuration = r.configuration.canonical();
        if let Some(existing) = out.iter_mut().find(|e| same_configuration(&e.configuration, &r.configuration, diam)) {
            if r.gradient_norm < existing.gradient_norm {
                *existing = r;
            }
        } else {
            out.push(r);
        }
    }
    out.sort_by(|a, b| {
        a.psi.total_cmp(&b.psi).then_with(|| {
            a.configuration
                .flatten()
                .iter()
                .zip(b.configuration.flatten().iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    out
}

pub fn enumerate_q(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    k: usize,
    multistart: &MultistartSpec,
    opts: &SolverOptions,
) -> Vec<CriticalPointRecord> {
    if k == 0 {
        return Vec::new();
    }
    let found: Vec<Option<CriticalPointRecord>> = (0..multistart.starts as u64)
        .into_par_iter()
        .map(|s| {
            let start = multistart_initial(ctx, kernel, k, multistart.seed, s, opts)?;
            find_critical_point(ctx, kernel, &start, opts).ok()
        })
        .collect();
    deduplicate(found.into_iter().flatten().collect(), kernel.shape().diameter())
}

/// `−((N−4)/(N−2))·B·|μ|²`, the value Ψ must take at any critical point.
pub fn euler_value(ctx: &DimensionContext, config: &SpikeConfiguration) -> f64 {
    let nf = ctx.n as f64;
    -((nf - 4.0) / (nf - 2.0)) * ctx.b * config.heights.iter().map(|h| h * h).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_cycle() {
        let mut p = vec![0, 1, 2];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 6);
    }

    #[test]
    fn degenerate_quadratic_is_flagged() {
        // Hessian of f(z) = z_0² + 0·z_1² + 2 z_2²
        let h = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0, 4.0]));
        let m = DMatrix::from_element(1, 1, 1.0);
        let c = classify_matrices(&h, &m, 1e-6);
        assert!(!c.nondegenerate);
        assert!(c.m_positive);
        let h2 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0, 4.0]));
        assert!(classify_matrices(&h2, &m, 1e-6).nondegenerate);
    }
}
