//! From a critical point of Ψ_k and a mass ρ to predicted solution
//! parameters, and the approximate profile built from them.
//!
//! The map solves the two leading-order matching equations
//!
//! ```text
//! μ_{j,ρ} = (λ_ρ^{1/(N−4)} μ_j)^{−1},     Σ_j B/μ_{j,ρ}² = ρ,
//! ```
//!
//! in closed form: `λ_ρ = (ρ/(B Σ μ_j²))^{(N−4)/2}` and
//! `μ_{j,ρ} = (B Σ_i μ_i² / ρ)^{1/2} / μ_j`.
//!
//! Two normalizations of the limits `ρ^{(4−N)/2}λ_ρ` and `ρ^{1/2}μ_{j,ρ}`
//! are reported. `direct` is what this map produces. `inverted` is the
//! same expression with every critical height replaced by its reciprocal,
//! `(B Σ μ_i^{−2})^{(4−N)/2}` and `(B Σ μ_i^{−2})^{1/2} μ_j`. The two agree
//! only under the relabeling `μ_j ↔ 1/μ_j`; neither is silently preferred.

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::bubble::{BubbleError, BubbleParams, DimensionContext, ProjectedBubble};
use crate::field::{dist, Field};
use crate::greens::DomainKernel;
use crate::quadrature::{integrate_space_many, Estimate, QuadratureError, QuadratureSpec};
use crate::reduced::CriticalPointRecord;

#[derive(Debug, Error)]
pub enum NormalizedError {
    #[error("mass must be positive and finite, got {0}")]
    BadMass(f64),
    #[error("critical point is not admissible (nondegenerate = {nondegenerate}, M positive = {m_positive})")]
    NotAdmissible { nondegenerate: bool, m_positive: bool },
    #[error("dimension N = {0} has no rate law; need N ≥ 5")]
    Dimension(usize),
    #[error(transparent)]
    Bubble(#[from] BubbleError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// `ρ^{(4−N)/2}λ_ρ` and `ρ^{1/2}μ_{j,ρ}` under one convention.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitConstants {
    pub lambda_constant: f64,
    pub height_constants: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conventions {
    pub direct: LimitConstants,
    pub inverted: LimitConstants,
}

/// Relative residuals of the two matching equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchingResiduals {
    /// `max_j |λ^{1/(N−4)} μ_j μ_{j,ρ} − 1|`.
    pub rate: f64,
    /// `|Σ_j B/μ_{j,ρ}² / ρ − 1|`.
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub rho: f64,
    pub lambda_rho: f64,
    pub spike_heights: Vec<f64>,
    pub spike_points: Vec<Vec<f64>>,
    /// The critical heights `μ_j` the prediction was made from.
    pub critical_heights: Vec<f64>,
    pub energy_prediction: f64,
    pub conventions: Conventions,
    pub matching: MatchingResiduals,
    /// Empty when the asymptotic regime looks safe.
    pub warnings: Vec<String>,
}

impl PredictionRecord {
    pub fn k(&self) -> usize {
        self.spike_heights.len()
    }
}

/// Warn when `μ_{j,ρ}·dist(a_j, ∂Ω) < 10`.
pub const SMALLNESS_THRESHOLD: f64 = 10.0;
/// Warn when a bubble at another spike exceeds this fraction of its peak.
pub const OVERLAP_THRESHOLD: f64 = 0.01;

pub fn predict_parameters(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    record: &CriticalPointRecord,
    rho: f64,
) -> Result<PredictionRecord, NormalizedError> {
    if !record.nondegenerate || !record.m_positive {
        return Err(NormalizedError::NotAdmissible {
            nondegenerate: record.nondegenerate,
            m_positive: record.m_positive,
        });
    }
    predict_unchecked(ctx, kernel, &record.configuration.points, &record.configuration.heights, rho)
}

/// The closed-form map without the admissibility check on the record.
pub fn predict_unchecked(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    points: &[Vec<f64>],
    mu: &[f64],
    rho: f64,
) -> Result<PredictionRecord, NormalizedError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(NormalizedError::BadMass(rho));
    }
    if ctx.n < 5 {
        return Err(NormalizedError::Dimension(ctx.n));
    }
    let nf = ctx.n as f64;
    let b = ctx.b;
    let sum_sq: f64 = mu.iter().map(|m| m * m).sum();
    let sum_inv: f64 = mu.iter().map(|m| m.powi(-2)).sum();

    let lambda = (rho / (b * sum_sq)).powf((nf - 4.0) / 2.0);
    let scale = (b * sum_sq / rho).sqrt();
    let heights: Vec<f64> = mu.iter().map(|m| scale / m).collect();

    let rate = mu
        .iter()
        .zip(&heights)
        .map(|(m, h)| (lambda.powf(1.0 / (nf - 4.0)) * m * h - 1.0).abs())
        .fold(0.0, f64::max);
    let mass = (heights.iter().map(|h| b / (h * h)).sum::<f64>() / rho - 1.0).abs();

    let direct = LimitConstants {
        lambda_constant: (b * sum_sq).powf((4.0 - nf) / 2.0),
        height_constants: mu.iter().map(|m| (b * sum_sq).sqrt() / m).collect(),
    };
    let inverted = LimitConstants {
        lambda_constant: (b * sum_inv).powf((4.0 - nf) / 2.0),
        height_constants: mu.iter().map(|m| (b * sum_inv).sqrt() * m).collect(),
    };

    let mut warnings = Vec::new();
    for (j, (p, h)) in points.iter().zip(&heights).enumerate() {
        let d = kernel.shape().distance_to_boundary(p);
        if h * d < SMALLNESS_THRESHOLD {
            warnings.push(format!("spike {j}: μ·dist(a, ∂Ω) = {:.3e} < {SMALLNESS_THRESHOLD}", h * d));
        }
        for (l, q) in points.iter().enumerate() {
            if l != j {
                let ratio = (1.0 + h * h * dist(p, q).powi(2)).powf(-ctx.m());
                if ratio > OVERLAP_THRESHOLD {
                    warnings.push(format!("spike {j} overlaps spike {l}: relative bubble value {ratio:.3e}"));
                }
            }
        }
    }

    Ok(PredictionRecord {
        rho,
        lambda_rho: lambda,
        spike_heights: heights,
        spike_points: points.to_vec(),
        critical_heights: mu.to_vec(),
        energy_prediction: mu.len() as f64 * ctx.sobolev_level,
        conventions: Conventions { direct, inverted },
        matching: MatchingResiduals { rate, mass },
        warnings,
    })
}

/// `u⁰_ρ = Σ_j P U_{a_j, μ_{j,ρ}}` at leading order.
pub struct Approximation<'a> {
    pub ctx: DimensionContext,
    pub kernel: &'a dyn DomainKernel,
    pub spikes: Vec<ProjectedBubble<'a>>,
}

impl Field for Approximation<'_> {
    fn dim(&self) -> usize {
        self.ctx.n
    }
    fn value(&self, y: &[f64]) -> f64 {
        self.spikes.iter().map(|s| s.value(y)).sum()
    }
    fn gradient(&self, y: &[f64]) -> DVector<f64> {
        let mut g = DVector::zeros(y.len());
        for s in &self.spikes {
            g += s.gradient(y);
        }
        g
    }
    fn laplacian(&self, y: &[f64]) -> f64 {
        self.spikes.iter().map(|s| s.laplacian(y)).sum()
    }
}

impl Approximation<'_> {
    /// Importance spec centred on the spikes with scales `1/μ_{j,ρ}`.
    pub fn importance_spec(&self, samples: usize, seed: u64) -> QuadratureSpec {
        QuadratureSpec::importance(
            samples,
            seed,
            self.spikes.iter().map(|s| s.bubble.params.center.clone()).collect(),
            self.spikes.iter().map(|s| 1.0 / s.bubble.params.height).collect(),
        )
    }
}

pub fn assemble_approximation<'a>(
    ctx: &DimensionContext,
    kernel: &'a dyn DomainKernel,
    prediction: &PredictionRecord,
) -> Result<Approximation<'a>, NormalizedError> {
    let spikes = prediction
        .spike_points
        .iter()
        .zip(&prediction.spike_heights)
        .map(|(p, h)| {
            let params = BubbleParams::new(p.clone(), *h)?;
            ProjectedBubble::new(ctx, kernel, params)
        })
        .collect::<Result<Vec<_>, BubbleError>>()?;
    Ok(Approximation { ctx: *ctx, kernel, spikes })
}

/// `∫_Ω (u⁰_ρ)²`.
///
/// `value` is `Σ_j B/μ_{j,ρ}²` (exact) plus a Monte Carlo estimate of
/// `∫_{R^N} (1_Ω (u⁰_ρ)² − Σ_j U_j²)`, which is small and smooth on the
/// spike scale. `plain` is the direct estimate of `∫ 1_Ω (u⁰_ρ)²` from the
/// same samples, kept as a cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassReport {
    pub target: f64,
    pub value: Estimate,
    pub plain: Estimate,
    pub relative_deviation: f64,
}

/// `spec` must be in spike-importance mode; its centres and scales are
/// normally those of [`Approximation::importance_spec`].
pub fn mass_of_approximation(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    prediction: &PredictionRecord,
    spec: &QuadratureSpec,
) -> Result<MassReport, NormalizedError> {
    let u = assemble_approximation(ctx, kernel, prediction)?;
    let shape = kernel.shape();
    let support = shape.bounding_ball();
    let est = integrate_space_many(
        |y, out| {
            let bubbles: f64 = u.spikes.iter().map(|s| s.bubble.value(y).powi(2)).sum();
            let inside = if shape.contains(y) { u.value(y).powi(2) } else { 0.0 };
            out[0] = inside - bubbles;
            out[1] = inside;
        },
        2,
        &support,
        spec,
    )?;
    let known: f64 = prediction.spike_heights.iter().map(|h| ctx.b / (h * h)).sum();
    let value = Estimate { value: known + est[0].value, ..est[0] };
    Ok(MassReport {
        target: prediction.rho,
        value,
        plain: est[1],
        relative_deviation: (value.value / prediction.rho - 1.0).abs(),
    })
}

/// `∫_Ω |∇u⁰_ρ|²` and the share of it inside `B_d(a_j)`.
///
/// Uses the control variate `Σ_j ∫|∇U_j|² = k 𝒮^{N/2}` in the same way as
/// [`MassReport`]; localized integrals use `∫|∇U_j|² = 𝒮^{N/2}` per spike.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub target: f64,
    pub value: Estimate,
    pub plain: Estimate,
    pub relative_deviation: f64,
    pub localization_radius: f64,
    /// `∫_{B_d(a_j)∩Ω} |∇u⁰_ρ|²` per spike.
    pub localized: Vec<Estimate>,
    /// `localized[j] / value`.
    pub localization: Vec<f64>,
}

pub fn energy_of_approximation(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    prediction: &PredictionRecord,
    localization_radius: f64,
    spec: &QuadratureSpec,
) -> Result<EnergyReport, NormalizedError> {
    let u = assemble_approximation(ctx, kernel, prediction)?;
    let shape = kernel.shape();
    let support = shape.bounding_ball();
    let k = u.spikes.len();
    let d2 = localization_radius * localization_radius;
    let est = integrate_space_many(
        |y, out| {
            let own: Vec<f64> = u.spikes.iter().map(|s| s.bubble.gradient(y).norm_squared()).collect();
            let inside = if shape.contains(y) { u.gradient(y).norm_squared() } else { 0.0 };
            out[0] = inside - own.iter().sum::<f64>();
            out[1] = inside;
            for (j, s) in u.spikes.iter().enumerate() {
                let near = crate::field::dist2(y, &s.bubble.params.center) <= d2;
                out[2 + j] = if near { inside } else { 0.0 } - own[j];
            }
        },
        2 + k,
        &support,
        spec,
    )?;
    let level = ctx.sobolev_level;
    let value = Estimate { value: k as f64 * level + est[0].value, ..est[0] };
    let localized: Vec<Estimate> = (0..k).map(|j| Estimate { value: level + est[2 + j].value, ..est[2 + j] }).collect();
    let localization = localized.iter().map(|e| e.value / value.value).collect();
    Ok(EnergyReport {
        target: prediction.energy_prediction,
        value,
        plain: est[1],
        relative_deviation: (value.value / prediction.energy_prediction - 1.0).abs(),
        localization_radius,
        localized,
        localization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble::make_context;
    use crate::greens::ball_kernel;
    use std::f64::consts::PI;

    #[test]
    fn k1_ball_closed_form() {
        let ctx = make_context(6).unwrap();
        let kernel = ball_kernel(&ctx, &[0.0; 6], 1.0).unwrap();
        let mu = 1.0 / 48f64.sqrt();
        let p = predict_unchecked(&ctx, &kernel, &[vec![0.0; 6]], &[mu], 1e-4).unwrap();
        let b = 96.0 * PI.powi(3);
        assert!((p.lambda_rho / (4.8e-3 / b) - 1.0).abs() < 1e-13);
        assert!((p.spike_heights[0] / (b / 1e-4).sqrt() - 1.0).abs() < 1e-13);
        assert!(p.matching.rate < 1e-12 && p.matching.mass < 1e-12);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn large_mass_warns() {
        let ctx = make_context(6).unwrap();
        let kernel = ball_kernel(&ctx, &[0.0; 6], 1.0).unwrap();
        let p = predict_unchecked(&ctx, &kernel, &[vec![0.0; 6]], &[0.2], 1e3).unwrap();
        assert!(!p.warnings.is_empty());
    }
}
