//! Scenario configuration: TOML file, command-line overrides, and the
//! `SPIKEKIT_SEED` environment override, applied in that order.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::bubble::DimensionContext;
use crate::greens::{ball_kernel, DomainKernel, Interpolation, TabulatedKernel};
use crate::quadrature::{DEFAULT_BALL_SAMPLES, DEFAULT_SPHERE_SAMPLES};

pub const SEED_ENV: &str = "SPIKEKIT_SEED";

/// `ball`, `ball:R`, or `tabulated:PATH`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DomainSpec {
    Ball { radius: f64 },
    Tabulated { path: PathBuf },
}

impl std::str::FromStr for DomainSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if s == "ball" {
            return Ok(DomainSpec::Ball { radius: 1.0 });
        }
        if let Some(r) = s.strip_prefix("ball:") {
            let radius: f64 = r
                .parse()
                .map_err(|_| CliError::Config(format!("ball radius `{r}` is not a number")))?;
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(CliError::Config(format!("ball radius must be positive, got {radius}")));
            }
            return Ok(DomainSpec::Ball { radius });
        }
        if let Some(p) = s.strip_prefix("tabulated:") {
            if p.is_empty() {
                return Err(CliError::Config("tabulated domain needs a file path".into()));
            }
            return Ok(DomainSpec::Tabulated { path: PathBuf::from(p) });
        }
        Err(CliError::Config(format!("unknown domain `{s}` (expected ball, ball:R or tabulated:PATH)")))
    }
}

impl TryFrom<String> for DomainSpec {
    type Error = CliError;
    fn try_from(s: String) -> Result<Self, CliError> {
        s.parse()
    }
}

impl From<DomainSpec> for String {
    fn from(d: DomainSpec) -> String {
        match d {
            DomainSpec::Ball { radius: 1.0 } => "ball".into(),
            DomainSpec::Ball { radius } => format!("ball:{radius}"),
            DomainSpec::Tabulated { path } => format!("tabulated:{}", path.display()),
        }
    }
}

impl DomainSpec {
    pub fn build(&self, ctx: &DimensionContext, order: Interpolation) -> Result<Arc<dyn DomainKernel>, CliError> {
        match self {
            DomainSpec::Ball { radius } => {
                let k = ball_kernel(ctx, &vec![0.0; ctx.n], *radius).map_err(|e| CliError::Config(e.to_string()))?;
                Ok(Arc::new(k))
            }
            DomainSpec::Tabulated { path } => {
                let k = TabulatedKernel::load(ctx, path, order).map_err(|e| CliError::Kernel(e.to_string()))?;
                Ok(Arc::new(k))
            }
        }
    }
}

/// Pass/fail thresholds of the verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub constants_rel: f64,
    /// Relative error of the FD Laplacian in the bubble equation.
    pub bubble_pde_rel: f64,
    pub kernel_sup: f64,
    pub moment_rel: f64,
    pub green_exact: f64,
    /// Relative size of the FD Laplacian of `H` against its Hessian scale.
    pub harmonic_rel: f64,
    pub derivative_rel: f64,
    pub euler_rel: f64,
    pub critical_point: f64,
    pub matching: f64,
    pub power_law: f64,
    pub mass_rel: f64,
    pub energy_rel: f64,
    /// Multiplier on standard errors in statistical checks.
    pub sigmas: f64,
    pub localization: f64,
    /// Solver gradient-norm tolerance.
    pub gradient: f64,
    pub degeneracy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            constants_rel: 1e-10,
            bubble_pde_rel: 1e-5,
            kernel_sup: 1e-6,
            moment_rel: 1e-8,
            green_exact: 1e-12,
            harmonic_rel: 1e-5,
            derivative_rel: 1e-6,
            euler_rel: 1e-8,
            critical_point: 1e-8,
            matching: 1e-12,
            power_law: 1e-12,
            mass_rel: 0.05,
            energy_rel: 0.05,
            sigmas: 3.0,
            localization: 0.99,
            gradient: 1e-9,
            degeneracy: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureOverrides {
    /// Samples for volume and whole-space integrals.
    pub samples: usize,
    pub sphere_samples: usize,
    pub uniform_weight: f64,
    pub localization_radius: f64,
}

impl Default for QuadratureOverrides {
    fn default() -> Self {
        QuadratureOverrides {
            samples: DEFAULT_BALL_SAMPLES,
            sphere_samples: DEFAULT_SPHERE_SAMPLES,
            uniform_weight: crate::quadrature::DEFAULT_UNIFORM_WEIGHT,
            localization_radius: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationName {
    Nearest,
    Multilinear,
}

impl From<InterpolationName> for Interpolation {
    fn from(i: InterpolationName) -> Self {
        match i {
            InterpolationName::Nearest => Interpolation::Nearest,
            InterpolationName::Multilinear => Interpolation::Multilinear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub domain: DomainSpec,
    pub interpolation: InterpolationName,
    pub k: usize,
    pub rho: Vec<f64>,
    pub starts: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Verification groups or criterion numbers to run; empty runs all.
    pub only: Vec<String>,
    pub quadrature: QuadratureOverrides,
    pub tolerances: Tolerances,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n: 6,
            domain: DomainSpec::Ball { radius: 1.0 },
            interpolation: InterpolationName::Multilinear,
            k: 1,
            rho: vec![1e-4],
            starts: 64,
            seed: 1,
            out: PathBuf::from("spikekit-out"),
            only: Vec::new(),
            quadrature: QuadratureOverrides::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n < 5 {
            return Err(CliError::Config(format!(
                "N = {} is not supported: the mass integral ∫U² diverges for N ≤ 4",
                self.n
            )));
        }
        if self.n > 32 {
            return Err(CliError::Config(format!("N = {} exceeds the supported maximum of 32", self.n)));
        }
        if self.k < 1 {
            return Err(CliError::Config("k must be at least 1".into()));
        }
        if self.rho.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(CliError::Config("every rho must be positive".into()));
        }
        if self.quadrature.samples < 1 || self.quadrature.sphere_samples < 1 {
            return Err(CliError::Config("sample counts must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.quadrature.uniform_weight) {
            return Err(CliError::Config("uniform_weight must lie in [0, 1]".into()));
        }
        if !(self.quadrature.localization_radius > 0.0) {
            return Err(CliError::Config("localization_radius must be positive".into()));
        }
        Ok(())
    }

    /// Applies `SPIKEKIT_SEED` if set.
    pub fn apply_env(&mut self) -> Result<(), CliError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{SEED_ENV}=`{v}` is not a 64-bit unsigned integer")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_strings_round_trip() {
        for s in ["ball", "ball:2.5", "tabulated:/tmp/k.bin"] {
            let d: DomainSpec = s.parse().unwrap();
            assert_eq!(String::from(d), s);
        }
        assert!("cube".parse::<DomainSpec>().is_err());
        assert!("ball:-1".parse::<DomainSpec>().is_err());
    }

    #[test]
    fn toml_overrides_defaults() {
        let c = ScenarioConfig::from_toml("n = 7\nrho = [1e-4, 1e-5]\n[tolerances]\nmass_rel = 0.1\n").unwrap();
        assert_eq!(c.n, 7);
        assert_eq!(c.rho.len(), 2);
        assert_eq!(c.tolerances.mass_rel, 0.1);
        assert_eq!(c.tolerances.energy_rel, 0.05);
        assert!(ScenarioConfig::from_toml("bogus = 1").is_err());
    }
}
