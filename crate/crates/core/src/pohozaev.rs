//! Surface quadratic forms on spheres `∂B_θ(x_j)` and local Pohozaev
//! residuals.
//!
//! ```text
//! P_1(u,v) = −θ∮⟨∇u,ν⟩⟨∇v,ν⟩ + (θ/2)∮⟨∇u,∇v⟩ + ((2−N)/4)∮(⟨∇u,ν⟩v + ⟨∇v,ν⟩u)
//! Q_1(u,v) = −∮(∂_ν v)(∂_i u) − ∮(∂_ν u)(∂_i v) + ∮⟨∇u,∇v⟩ν_i
//! ```
//!
//! Each form is a single surface integral of one combined integrand, so
//! its standard error accounts for correlation between the terms.

use serde::Serialize;
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::bubble::{Bubble, DimensionContext};
use crate::field::{dist, Field};
use crate::greens::{clearance, DomainKernel};
use crate::quadrature::{integrate_ball, Ball, Estimate, QuadratureError, QuadratureSpec, SphereSamples};

#[derive(Debug, Error)]
pub enum PohozaevError {
    #[error("radius {0} is not positive")]
    BadRadius(f64),
    #[error("coordinate {index} out of range for dimension {n}")]
    BadCoordinate { index: usize, n: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

fn check_radius(theta: f64) -> Result<(), PohozaevError> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(PohozaevError::BadRadius(theta))
    }
}

fn normal_derivative(g: &nalgebra::DVector<f64>, nu: &[f64]) -> f64 {
    g.iter().zip(nu).map(|(a, b)| a * b).sum()
}

/// Pointwise integrand of a form at `y` with unit normal `ν`.
fn integrand(form: FormId, u: &dyn Field, v: &dyn Field, y: &[f64], nu: &[f64], theta: f64) -> f64 {
    let gu = u.gradient(y);
    let gv = v.gradient(y);
    let du = normal_derivative(&gu, nu);
    let dv = normal_derivative(&gv, nu);
    match form {
        FormId::P1 => {
            let n = u.dim() as f64;
            -theta * du * dv + 0.5 * theta * gu.dot(&gv) + 0.25 * (2.0 - n) * (du * v.value(y) + dv * u.value(y))
        }
        FormId::Q1 { i } => -dv * gu[i] - du * gv[i] + gu.dot(&gv) * nu[i],
    }
}

/// A pair of fields whose form value is known exactly; its integrand is
/// subtracted pointwise and the known value added back.
pub struct FormControl<'a> {
    pub u: &'a dyn Field,
    pub v: &'a dyn Field,
    pub value: f64,
}

/// A form on a given sample set, optionally with a control pair.
pub fn form_on(
    samples: &SphereSamples,
    form: FormId,
    u: &dyn Field,
    v: &dyn Field,
    control: Option<&FormControl<'_>>,
) -> Result<Estimate, PohozaevError> {
    if let FormId::Q1 { i } = form {
        if i >= u.dim() {
            return Err(PohozaevError::BadCoordinate { index: i, n: u.dim() });
        }
    }
    let theta = samples.radius;
    let est = samples.integrate_many(
        |y, nu, out| {
            out[0] = integrand(form, u, v, y, nu, theta);
            if let Some(c) = control {
                out[0] -= integrand(form, c.u, c.v, y, nu, theta);
            }
        },
        1,
    )?[0];
    Ok(match control {
        Some(c) => Estimate { value: est.value + c.value, ..est },
        None => est,
    })
}

/// `P_1(u, v)` on a given sample set.
pub fn p1_on(samples: &SphereSamples, u: &dyn Field, v: &dyn Field) -> Result<Estimate, PohozaevError> {
    form_on(samples, FormId::P1, u, v, None)
}

/// `Q_1(u, v)` in direction `i` on a given sample set.
pub fn q1_on(samples: &SphereSamples, u: &dyn Field, v: &dyn Field, i: usize) -> Result<Estimate, PohozaevError> {
    form_on(samples, FormId::Q1 { i }, u, v, None)
}

pub fn p1_form(
    u: &dyn Field,
    v: &dyn Field,
    center: &[f64],
    theta: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate, PohozaevError> {
    check_radius(theta)?;
    p1_on(&SphereSamples::new(center, theta, spec)?, u, v)
}

pub fn q1_form(
    u: &dyn Field,
    v: &dyn Field,
    center: &[f64],
    theta: f64,
    i: usize,
    spec: &QuadratureSpec,
) -> Result<Estimate, PohozaevError> {
    check_radius(theta)?;
    q1_on(&SphereSamples::new(center, theta, spec)?, u, v, i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum FormId {
    P1,
    Q1 { i: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceFormReport {
    pub form: FormId,
    pub label: String,
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<Estimate>,
    pub reference: f64,
    /// `3σ + 1e−10·scale` per radius.
    pub tolerances: Vec<f64>,
    pub pass: Vec<bool>,
    /// `max − min` of the values over the radii.
    pub spread: f64,
    /// Whether the spread is within three combined standard errors.
    pub spread_ok: bool,
}

impl SurfaceFormReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|p| *p) && self.spread_ok
    }
}

/// Rounding floor added to every 3σ band, relative to `scale`.
const ROUNDING: f64 = 1e-10;

/// Evaluates one form at several radii and compares with `reference`.
///
/// A value passes when `|value − reference| ≤ 3σ + 1e−10·scale`; `scale` is
/// the magnitude the comparison is relative to when σ vanishes, as it does
/// for integrands constant on the sphere.
#[allow(clippy::too_many_arguments)]
pub fn surface_form_report(
    form: FormId,
    label: &str,
    u: &dyn Field,
    v: &dyn Field,
    center: &[f64],
    radii: &[f64],
    reference: f64,
    scale: f64,
    spec: &QuadratureSpec,
    control: Option<&FormControl<'_>>,
) -> Result<SurfaceFormReport, PohozaevError> {
    let mut values = Vec::with_capacity(radii.len());
    for &theta in radii {
        check_radius(theta)?;
        let samples = SphereSamples::new(center, theta, spec)?;
        values.push(form_on(&samples, form, u, v, control)?);
    }
    let floor = ROUNDING * scale.abs();
    let tolerances: Vec<f64> = values.iter().map(|e| 3.0 * e.stderr + floor).collect();
    let pass = values.iter().zip(&tolerances).map(|(e, t)| (e.value - reference).abs() <= *t).collect();
    let hi = values.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let combined = values.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt();
    let spread = if values.is_empty() { 0.0 } else { hi - lo };
    Ok(SurfaceFormReport {
        form,
        label: label.to_string(),
        center: center.to_vec(),
        radii: radii.to_vec(),
        values,
        reference,
        tolerances,
        pass,
        spread,
        spread_ok: spread <= 3.0 * combined + floor,
    })
}

/// `{0.05, 0.10}·dist(center, ∂Ω ∪ others)`.
pub fn default_radii(kernel: &dyn DomainKernel, center: &[f64], others: &[Vec<f64>]) -> Vec<f64> {
    let d = clearance(kernel, center, others);
    vec![0.05 * d, 0.10 * d]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum IdentityKind {
    Translation { i: usize },
    Dilation,
}

/// Known `∫_{B_θ(x)} U_{x,μ}² = (B/μ²)·I_t(N/2, N/2−2)`, `t = (μθ)²/(1+(μθ)²)`.
pub fn bubble_mass_in_ball(ctx: &DimensionContext, height: f64, theta: f64) -> f64 {
    let n = ctx.n as f64;
    let s = (height * theta).powi(2);
    ctx.b / (height * height) * beta_reg(n / 2.0, n / 2.0 - 2.0, s / (1.0 + s))
}

/// Sample sets for a residual evaluation, reusable across fields so that
/// comparisons share noise.
pub struct ResidualSamples<'a> {
    pub sphere: SphereSamples,
    /// Spec for the volume term over `B_θ(center)`.
    pub volume: &'a QuadratureSpec,
}

/// `LHS − RHS` of the local Pohozaev identity for
/// `−Δu = |u|^{2*−2}u + λu` over `Ω' = B_θ(center)`.
///
/// When `control` is a bubble centred at `center`, the volume integral
/// `∫_{Ω'} u²` is computed as the known `∫_{Ω'} U²` plus a Monte Carlo
/// estimate of `∫_{Ω'} (u² − U²)`.
pub fn local_pohozaev_residual_on(
    ctx: &DimensionContext,
    samples: &ResidualSamples<'_>,
    u: &dyn Field,
    lambda: f64,
    kind: IdentityKind,
    control: Option<&Bubble>,
) -> Result<Estimate, PohozaevError> {
    let n = ctx.n as f64;
    let crit = ctx.critical_exponent();
    let theta = samples.sphere.radius;
    let center = samples.sphere.center.clone();
    match kind {
        IdentityKind::Translation { i } => {
            if i >= ctx.n {
                return Err(PohozaevError::BadCoordinate { index: i, n: ctx.n });
            }
            Ok(samples.sphere.integrate_many(
                |y, nu, out| {
                    let g = u.gradient(y);
                    let w = u.value(y);
                    let dn: f64 = g.iter().zip(nu).map(|(a, b)| a * b).sum();
                    let lhs = -dn * g[i] + 0.5 * g.norm_squared() * nu[i];
                    let rhs = (n - 2.0) / (2.0 * n) * w.abs().powf(crit) * nu[i] + 0.5 * lambda * w * w * nu[i];
                    out[0] = lhs - rhs;
                },
                1,
            )?[0])
        }
        IdentityKind::Dilation => {
            let surface = samples.sphere.integrate_many(
                |y, nu, out| {
                    let g = u.gradient(y);
                    let w = u.value(y);
                    let dn: f64 = g.iter().zip(nu).map(|(a, b)| a * b).sum();
                    let lhs = -theta * dn * dn + 0.5 * theta * g.norm_squared() + 0.5 * (2.0 - n) * dn * w;
                    let rhs = (n - 2.0) / (2.0 * n) * theta * w.abs().powf(crit) + 0.5 * lambda * theta * w * w;
                    out[0] = lhs - rhs;
                },
                1,
            )?[0];
            if lambda == 0.0 {
                return Ok(surface);
            }
            let ball = Ball::new(center.clone(), theta);
            let volume = match control.filter(|c| dist(&c.params.center, &center) == 0.0) {
                Some(c) => {
                    let rest = integrate_ball(|y| u.value(y).powi(2) - c.value(y).powi(2), &ball, samples.volume)?;
                    Estimate { value: bubble_mass_in_ball(ctx, c.params.height, theta) + rest.value, ..rest }
                }
                None => integrate_ball(|y| u.value(y).powi(2), &ball, samples.volume)?,
            };
            // RHS carries −λ∫u², so the residual gains +λ∫u²
            let vol = volume.scale(lambda);
            Ok(Estimate {
                value: surface.value + vol.value,
                stderr: surface.stderr.hypot(vol.stderr),
                samples: surface.samples.max(vol.samples),
            })
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn local_pohozaev_residual(
    ctx: &DimensionContext,
    u: &dyn Field,
    lambda: f64,
    center: &[f64],
    theta: f64,
    kind: IdentityKind,
    sphere_spec: &QuadratureSpec,
    volume_spec: &QuadratureSpec,
) -> Result<Estimate, PohozaevError> {
    check_radius(theta)?;
    let samples = ResidualSamples { sphere: SphereSamples::new(center, theta, sphere_spec)?, volume: volume_spec };
    local_pohozaev_residual_on(ctx, &samples, u, lambda, kind, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::make_context;
    use crate::field::Zero;

    #[test]
    fn zero_field_has_zero_residual() {
        let ctx = make_context(6).unwrap();
        let spec = QuadratureSpec::uniform(1000, 1);
        let r = local_pohozaev_residual(&ctx, &Zero(6), 0.3, &[0.0; 6], 0.1, IdentityKind::Dilation, &spec, &spec)
            .unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn bubble_mass_limits() {
        let ctx = make_context(6).unwrap();
        let full = bubble_mass_in_ball(&ctx, 3.0, 1e8);
        assert!((full / (ctx.b / 9.0) - 1.0).abs() < 1e-12);
        assert_eq!(bubble_mass_in_ball(&ctx, 3.0, 0.0), 0.0);
    }
}
