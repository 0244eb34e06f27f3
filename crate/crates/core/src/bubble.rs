//! Aubin–Talenti bubbles and the dimension constants built from them.
//!
//! `U_{x,μ}(y) = c_N μ^{(N−2)/2} (1 + μ²|y−x|²)^{−(N−2)/2}` solves
//! `−ΔU = U^{(N+2)/(N−2)}` on R^N. All radial profiles here are written as
//! functions of `s = |y−x|²`, for which `∇f = 2f'(s)·(y−x)` and
//! `Δf = 4s f''(s) + 2N f'(s)` hold without a `1/r` singularity.

use nalgebra::DVector;
use serde::Serialize;
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::field::{dist2, Field};
use crate::greens::{DomainKernel, GreensError};
use crate::quadrature::{self, Ball, Method, QuadratureError, QuadratureSpec};

#[derive(Debug, Error)]
pub enum BubbleError {
    #[error("dimension N = {0} is not supported: ∫U² diverges for N ≤ 4, so the mass constant B is infinite")]
    DimensionTooSmall(usize),
    #[error("kernel index {index} out of range 0..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("bubble height must be positive and finite, got {0}")]
    BadHeight(f64),
    #[error("closed form and quadrature disagree for {name}: {closed:e} vs {quadrature:e}")]
    CrossCheck { name: &'static str, closed: f64, quadrature: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Greens(#[from] GreensError),
}

/// Constants depending only on N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionContext {
    pub n: usize,
    pub c_n: f64,
    pub omega_n: f64,
    /// `∫ U_{0,1}^{(N+2)/(N−2)}`.
    pub a: f64,
    /// `∫ U_{0,1}²`.
    pub b: f64,
    /// `𝒮^{N/2} = ∫ U_{0,1}^{2N/(N−2)}`.
    pub sobolev_level: f64,
    pub a_quadrature: f64,
    pub b_quadrature: f64,
    pub sobolev_level_quadrature: f64,
}

const CROSS_CHECK_TOL: f64 = 1e-10;

pub fn make_context(n: usize) -> Result<DimensionContext, BubbleError> {
    if n <= 4 {
        return Err(BubbleError::DimensionTooSmall(n));
    }
    let nf = n as f64;
    let half = nf / 2.0;
    let c_n = (nf * (nf - 2.0)).powf((nf - 2.0) / 4.0);
    let omega_n = 2.0 * std::f64::consts::PI.powf(half) / gamma(half);
    // c^{4/(N−2)} = N(N−2), so the odd looking powers are exact products.
    let c_p = c_n * nf * (nf - 2.0);
    let a = c_p * omega_n / nf;
    let b = c_n * c_n * omega_n * 0.5 * beta(half, half - 2.0);
    let sobolev_level = c_n * c_p * omega_n * 0.5 * beta(half, half);

    let m = (nf - 2.0) / 2.0;
    let a_quadrature = quadrature::integrate_radial(|r| c_p * (1.0 + r * r).powf(-(m + 2.0)), n)?;
    let b_quadrature = quadrature::integrate_radial(|r| c_n * c_n * (1.0 + r * r).powf(-2.0 * m), n)?;
    let sobolev_level_quadrature =
        quadrature::integrate_radial(|r| c_n * c_p * (1.0 + r * r).powf(-nf), n)?;

    for (name, closed, quad) in [
        ("A", a, a_quadrature),
        ("B", b, b_quadrature),
        ("sobolev level", sobolev_level, sobolev_level_quadrature),
    ] {
        if ((closed - quad) / closed).abs() > CROSS_CHECK_TOL {
            return Err(BubbleError::CrossCheck { name, closed, quadrature: quad });
        }
    }
    Ok(DimensionContext {
        n,
        c_n,
        omega_n,
        a,
        b,
        sobolev_level,
        a_quadrature,
        b_quadrature,
        sobolev_level_quadrature,
    })
}

impl DimensionContext {
    /// `(N−2)/2`.
    pub fn m(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }

    /// `2* − 1 = (N+2)/(N−2)`.
    pub fn critical_power(&self) -> f64 {
        (self.n as f64 + 2.0) / (self.n as f64 - 2.0)
    }

    /// `2* = 2N/(N−2)`.
    pub fn critical_exponent(&self) -> f64 {
        2.0 * self.n as f64 / (self.n as f64 - 2.0)
    }

    /// `((N−2)ω_N)^{−1}`, the normalization of the fundamental solution.
    pub fn kappa(&self) -> f64 {
        1.0 / ((self.n as f64 - 2.0) * self.omega_n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BubbleParams {
    pub center: Vec<f64>,
    pub height: f64,
}

impl BubbleParams {
    pub fn new(center: Vec<f64>, height: f64) -> Result<Self, BubbleError> {
        if !(height > 0.0 && height.is_finite()) {
            return Err(BubbleError::BadHeight(height));
        }
        Ok(BubbleParams { center, height })
    }
}

/// `f(s) = (α + βs)(1+s)^{−q}` with its first two derivatives in `s`.
fn profile(alpha: f64, beta: f64, q: f64, s: f64) -> (f64, f64, f64) {
    let w = 1.0 + s;
    let p = alpha + beta * s;
    let f = p * w.powf(-q);
    let f1 = beta * w.powf(-q) - q * p * w.powf(-q - 1.0);
    let f2 = -2.0 * q * beta * w.powf(-q - 1.0) + q * (q + 1.0) * p * w.powf(-q - 2.0);
    (f, f1, f2)
}

pub fn bubble_eval(ctx: &DimensionContext, p: &BubbleParams, y: &[f64]) -> f64 {
    let m = ctx.m();
    let s = p.height * p.height * dist2(y, &p.center);
    ctx.c_n * p.height.powf(m) * (1.0 + s).powf(-m)
}

/// A bubble as a field with closed-form derivatives.
#[derive(Debug, Clone)]
pub struct Bubble {
    pub ctx: DimensionContext,
    pub params: BubbleParams,
}

impl Bubble {
    pub fn new(ctx: &DimensionContext, params: BubbleParams) -> Self {
        Bubble { ctx: *ctx, params }
    }

    pub fn standard(ctx: &DimensionContext) -> Self {
        Bubble { ctx: *ctx, params: BubbleParams { center: vec![0.0; ctx.n], height: 1.0 } }
    }

    /// Value and the first two `s`-derivatives of the amplitude-scaled
    /// profile, with `s = μ²|y−x|²`.
    fn radial(&self, y: &[f64]) -> (f64, f64, f64, f64) {
        let mu = self.params.height;
        let amp = self.ctx.c_n * mu.powf(self.ctx.m());
        let s = mu * mu * dist2(y, &self.params.center);
        let (f, f1, f2) = profile(1.0, 0.0, self.ctx.m(), s);
        (amp * f, amp * f1, amp * f2, s)
    }
}

impl Field for Bubble {
    fn dim(&self) -> usize {
        self.ctx.n
    }

    fn value(&self, y: &[f64]) -> f64 {
        bubble_eval(&self.ctx, &self.params, y)
    }

    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        let mu = self.params.height;
        let (_, f1, _, _) = self.radial(y);
        DVector::from_iterator(
            y.len(),
            y.iter().zip(&self.params.center).map(|(a, c)| 2.0 * f1 * mu * mu * (a - c)),
        )
    }

    fn laplacian(&self, y: &[f64]) -> f64 {
        let mu = self.params.height;
        let (_, f1, f2, s) = self.radial(y);
        mu * mu * (4.0 * s * f2 + 2.0 * self.ctx.n as f64 * f1)
    }
}

/// The kernel elements `ψ_0 = ∂_μU_{0,μ}|_{μ=1}` and `ψ_i = ∂_iU_{0,1}`.
#[derive(Debug, Clone)]
pub struct KernelFunction {
    ctx: DimensionContext,
    index: usize,
}

impl KernelFunction {
    pub fn new(ctx: &DimensionContext, index: usize) -> Result<Self, BubbleError> {
        if index > ctx.n {
            return Err(BubbleError::IndexOutOfRange { index, n: ctx.n });
        }
        Ok(KernelFunction { ctx: *ctx, index })
    }
}

impl Field for KernelFunction {
    fn dim(&self) -> usize {
        self.ctx.n
    }

    fn value(&self, y: &[f64]) -> f64 {
        let s: f64 = y.iter().map(|v| v * v).sum();
        let (c, m, nf) = (self.ctx.c_n, self.ctx.m(), self.ctx.n as f64);
        if self.index == 0 {
            profile(c * m, -c * m, nf / 2.0, s).0
        } else {
            y[self.index - 1] * profile(-(nf - 2.0) * c, 0.0, nf / 2.0, s).0
        }
    }

    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        let s: f64 = y.iter().map(|v| v * v).sum();
        let (c, m, nf) = (self.ctx.c_n, self.ctx.m(), self.ctx.n as f64);
        if self.index == 0 {
            let (_, f1, _) = profile(c * m, -c * m, nf / 2.0, s);
            DVector::from_iterator(y.len(), y.iter().map(|v| 2.0 * f1 * v))
        } else {
            let (h, h1, _) = profile(-(nf - 2.0) * c, 0.0, nf / 2.0, s);
            let i = self.index - 1;
            DVector::from_iterator(
                y.len(),
                (0..y.len()).map(|j| if j == i { h } else { 0.0 } + 2.0 * h1 * y[i] * y[j]),
            )
        }
    }

    fn laplacian(&self, y: &[f64]) -> f64 {
        let s: f64 = y.iter().map(|v| v * v).sum();
        let (c, m, nf) = (self.ctx.c_n, self.ctx.m(), self.ctx.n as f64);
        if self.index == 0 {
            let (_, f1, f2) = profile(c * m, -c * m, nf / 2.0, s);
            4.0 * s * f2 + 2.0 * nf * f1
        } else {
            let (_, h1, h2) = profile(-(nf - 2.0) * c, 0.0, nf / 2.0, s);
            y[self.index - 1] * (4.0 * s * h2 + (2.0 * nf + 4.0) * h1)
        }
    }
}

pub fn kernel_functions(ctx: &DimensionContext, i: usize, y: &[f64]) -> Result<f64, BubbleError> {
    Ok(KernelFunction::new(ctx, i)?.value(y))
}

/// `ξ̄ = y·∇U_{0,1} + ((N−2)/2)U_{0,1}`, built from the bubble profile
/// rather than from `ψ_0`.
#[derive(Debug, Clone)]
pub struct DilationKernel {
    ctx: DimensionContext,
}

impl DilationKernel {
    pub fn new(ctx: &DimensionContext) -> Self {
        DilationKernel { ctx: *ctx }
    }

    /// `g(s) = 2s f'(s) + m f(s)` for `U = c f(s)`, and its derivatives.
    fn profile(&self, s: f64) -> (f64, f64, f64) {
        let (c, m) = (self.ctx.c_n, self.ctx.m());
        let w = 1.0 + s;
        let f = w.powf(-m);
        let f1 = -m * w.powf(-m - 1.0);
        let f2 = m * (m + 1.0) * w.powf(-m - 2.0);
        let f3 = -m * (m + 1.0) * (m + 2.0) * w.powf(-m - 3.0);
        let g = 2.0 * s * f1 + m * f;
        let g1 = (2.0 + m) * f1 + 2.0 * s * f2;
        let g2 = (4.0 + m) * f2 + 2.0 * s * f3;
        (c * g, c * g1, c * g2)
    }
}

impl Field for DilationKernel {
    fn dim(&self) -> usize {
        self.ctx.n
    }
    fn value(&self, y: &[f64]) -> f64 {
        self.profile(y.iter().map(|v| v * v).sum()).0
    }
    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        let (_, g1, _) = self.profile(y.iter().map(|v| v * v).sum());
        DVector::from_iterator(y.len(), y.iter().map(|v| 2.0 * g1 * v))
    }
    fn laplacian(&self, y: &[f64]) -> f64 {
        let s = y.iter().map(|v| v * v).sum();
        let (_, g1, g2) = self.profile(s);
        4.0 * s * g2 + 2.0 * self.ctx.n as f64 * g1
    }
}

/// `L(u)(y) = −Δu − ((N+2)/(N−2)) U_{0,1}^{4/(N−2)} u` at `y`.
pub fn linearized_apply(ctx: &DimensionContext, u: &dyn Field, y: &[f64]) -> f64 {
    let s: f64 = y.iter().map(|v| v * v).sum();
    let potential = ctx.critical_power() * (ctx.c_n * (1.0 + s).powf(-ctx.m())).powf(4.0 / (ctx.n as f64 - 2.0));
    -u.laplacian(y) - potential * u.value(y)
}

/// `∫_{R^N} U_{0,1}·ξ̄` by radial quadrature (contract: `−B`).
pub fn pohozaev_kernel_moment(ctx: &DimensionContext, spec: &QuadratureSpec) -> Result<f64, BubbleError> {
    if spec.method != Method::RadialAdaptive {
        return Err(QuadratureError::InvalidSpec("the kernel moment is a radial integral".into()).into());
    }
    let u = Bubble::standard(ctx);
    let xi = DilationKernel::new(ctx);
    let v = quadrature::integrate_radial(
        |r| {
            let mut e = vec![0.0; ctx.n];
            e[0] = r;
            u.value(&e) * xi.value(&e)
        },
        ctx.n,
    )?;
    Ok(v)
}

/// `∫ U^{2*−1} ψ_i`: radial for `i = 0`, importance Monte Carlo over R^N for `i ≥ 1`.
pub fn kernel_orthogonality(
    ctx: &DimensionContext,
    index: usize,
    spec: &QuadratureSpec,
) -> Result<quadrature::Estimate, BubbleError> {
    let psi = KernelFunction::new(ctx, index)?;
    let u = Bubble::standard(ctx);
    let p = ctx.critical_power();
    if index == 0 {
        let v = quadrature::integrate_radial(
            |r| {
                let mut e = vec![0.0; ctx.n];
                e[0] = r;
                u.value(&e).powf(p) * psi.value(&e)
            },
            ctx.n,
        )?;
        return Ok(quadrature::Estimate::exact(v));
    }
    let mut spec = spec.clone();
    if spec.method != Method::MonteCarloSpikeImportance {
        spec.method = Method::MonteCarloSpikeImportance;
        spec.uniform_weight = 0.0;
    }
    if spec.centers.is_empty() {
        spec.centers = vec![vec![0.0; ctx.n]];
        spec.scales = vec![1.0];
    }
    let support = Ball::new(vec![0.0; ctx.n], 1.0);
    Ok(quadrature::integrate_space(|y| u.value(y).powf(p) * psi.value(y), &support, &spec)?)
}

/// Leading-order projected bubble `U_{x,μ} − A μ^{−(N−2)/2} H(x,·)`.
pub struct ProjectedBubble<'a> {
    pub ctx: DimensionContext,
    pub kernel: &'a dyn DomainKernel,
    pub bubble: Bubble,
    pub coefficient: f64,
}

impl<'a> ProjectedBubble<'a> {
    pub fn new(ctx: &DimensionContext, kernel: &'a dyn DomainKernel, params: BubbleParams) -> Result<Self, BubbleError> {
        if !kernel.shape().contains(&params.center) || kernel.shape().distance_to_boundary(&params.center) <= 0.0 {
            return Err(GreensError::OutsideDomain(params.center.clone()).into());
        }
        let coefficient = ctx.a * params.height.powf(-ctx.m());
        Ok(ProjectedBubble { ctx: *ctx, kernel, bubble: Bubble::new(ctx, params), coefficient })
    }

    /// Whether `height·dist(center, ∂Ω) ≥ 10`, the regime where the
    /// correction is perturbative.
    pub fn is_perturbative(&self) -> bool {
        self.bubble.params.height * self.kernel.shape().distance_to_boundary(&self.bubble.params.center) >= 10.0
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64, GreensError> {
        let h = self.kernel.regular(&self.bubble.params.center, y)?;
        Ok(self.bubble.value(y) - self.coefficient * h)
    }
}

impl Field for ProjectedBubble<'_> {
    fn dim(&self) -> usize {
        self.ctx.n
    }
    fn value(&self, y: &[f64]) -> f64 {
        self.eval(y).unwrap_or(f64::NAN)
    }
    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        match self.kernel.regular_grad_y(&self.bubble.params.center, y) {
            Ok(g) => self.bubble.gradient(y) - g * self.coefficient,
            Err(_) => DVector::from_element(y.len(), f64::NAN),
        }
    }
    fn laplacian(&self, y: &[f64]) -> f64 {
        // H(x, ·) is harmonic
        self.bubble.laplacian(y)
    }
}

pub fn projected_bubble_eval(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    p: &BubbleParams,
    y: &[f64],
) -> Result<f64, BubbleError> {
    Ok(ProjectedBubble::new(ctx, kernel, p.clone())?.eval(y)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n6_values() {
        let ctx = make_context(6).unwrap();
        assert_eq!(ctx.c_n, 24.0);
        let p = BubbleParams::new(vec![0.0; 6], 1.0).unwrap();
        assert_eq!(bubble_eval(&ctx, &p, &[0.0; 6]), 24.0);
        assert_eq!(bubble_eval(&ctx, &p, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 6.0);
        let p2 = BubbleParams::new(vec![0.0; 6], 2.0).unwrap();
        assert_eq!(bubble_eval(&ctx, &p2, &[0.0; 6]), 96.0);
    }

    #[test]
    fn rejects_small_dimensions() {
        for n in 0..=4 {
            let err = make_context(n).unwrap_err();
            assert!(err.to_string().contains("diverges"));
        }
    }

    #[test]
    fn kernel_index_range() {
        let ctx = make_context(6).unwrap();
        assert!(kernel_functions(&ctx, 7, &[0.0; 6]).is_err());
        assert_eq!(kernel_functions(&ctx, 0, &[0.0; 6]).unwrap(), 48.0);
        assert_eq!(kernel_functions(&ctx, 1, &[0.0; 6]).unwrap(), 0.0);
        let e1 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!((kernel_functions(&ctx, 1, &e1).unwrap() + 12.0).abs() < 1e-13);
    }

    #[test]
    fn bad_height() {
        assert!(BubbleParams::new(vec![0.0; 6], 0.0).is_err());
        assert!(BubbleParams::new(vec![0.0; 6], f64::NAN).is_err());
    }
}
