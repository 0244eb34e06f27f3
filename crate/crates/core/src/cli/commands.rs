//! The four subcommands. Each returns its report, the text to print, and
//! has already written `records.json` and `summary.csv` under `config.out`.

use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ScenarioConfig;
use super::output::{format_float, join_floats, to_csv, to_json, write_atomic, SCHEMA};
use super::verify::{run_verify, VerifyReport};
use super::CliError;
use crate::bubble::{make_context, Bubble, DimensionContext};
use crate::greens::DomainKernel;
use crate::normalized::{
    assemble_approximation, energy_of_approximation, mass_of_approximation, predict_parameters, EnergyReport,
    MassReport, PredictionRecord,
};
use crate::pohozaev::{default_radii, local_pohozaev_residual_on, IdentityKind, ResidualSamples};
use crate::quadrature::{Estimate, QuadratureSpec, SphereSamples};
use crate::reduced::{enumerate_q, CriticalPointRecord, MultistartSpec, SolverOptions};

pub struct CommandOutput<R> {
    pub report: R,
    pub stdout: String,
}

/// Seed for item `index`, derived from the master seed through its own
/// ChaCha stream so that items are independent of each other's count.
pub fn sub_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index.wrapping_add(1 << 32));
    rng.next_u64()
}

pub(crate) fn context(n: usize) -> Result<DimensionContext, CliError> {
    make_context(n).map_err(|e| CliError::Config(e.to_string()))
}

fn write_outputs(out: &Path, json: &str, csv: &str) -> Result<(), CliError> {
    write_atomic(&out.join("records.json"), json.as_bytes())?;
    write_atomic(&out.join("summary.csv"), csv.as_bytes())
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub schema: &'static str,
    pub command: &'static str,
    pub n: usize,
    pub c_n: f64,
    pub omega_n: f64,
    pub a_const: f64,
    pub b_const: f64,
    pub sobolev_level: f64,
    pub a_const_quadrature: f64,
    pub b_const_quadrature: f64,
    pub sobolev_level_quadrature: f64,
    /// `equal` when `|A − B| ≤ 1e−12·B`, otherwise `less` or `greater` for `A` against `B`.
    pub a_versus_b: &'static str,
}

pub fn constants_report(n: usize) -> Result<ConstantsReport, CliError> {
    let ctx = context(n)?;
    let a_versus_b = if (ctx.a - ctx.b).abs() <= 1e-12 * ctx.b {
        "equal"
    } else if ctx.a < ctx.b {
        "less"
    } else {
        "greater"
    };
    Ok(ConstantsReport {
        schema: SCHEMA,
        command: "constants",
        n,
        c_n: ctx.c_n,
        omega_n: ctx.omega_n,
        a_const: ctx.a,
        b_const: ctx.b,
        sobolev_level: ctx.sobolev_level,
        a_const_quadrature: ctx.a_quadrature,
        b_const_quadrature: ctx.b_quadrature,
        sobolev_level_quadrature: ctx.sobolev_level_quadrature,
        a_versus_b,
    })
}

pub fn cmd_constants(n: usize, out: Option<&Path>) -> Result<String, CliError> {
    let report = constants_report(n)?;
    let json = to_json(&report)?;
    if let Some(out) = out {
        let csv = to_csv(
            &["n", "c_n", "omega_n", "a_const", "b_const", "sobolev_level", "a_versus_b"],
            &[vec![
                n.to_string(),
                format_float(report.c_n),
                format_float(report.omega_n),
                format_float(report.a_const),
                format_float(report.b_const),
                format_float(report.sobolev_level),
                report.a_versus_b.to_string(),
            ]],
        )?;
        write_outputs(out, &json, &csv)?;
    }
    Ok(json)
}

pub(crate) fn solver_options(config: &ScenarioConfig) -> SolverOptions {
    SolverOptions { tol: config.tolerances.gradient, degeneracy_tol: config.tolerances.degeneracy, ..Default::default() }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointsReport {
    pub schema: &'static str,
    pub command: &'static str,
    pub config: ScenarioConfig,
    pub records: Vec<CriticalPointRecord>,
}

fn find_records(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    config: &ScenarioConfig,
) -> Vec<CriticalPointRecord> {
    let ms = MultistartSpec { starts: config.starts, seed: config.seed };
    enumerate_q(ctx, kernel, config.k, &ms, &solver_options(config))
}

fn critical_point_rows(records: &[CriticalPointRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let min_abs = r.hessian_spectrum.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
            vec![
                i.to_string(),
                r.configuration.k().to_string(),
                format_float(r.psi),
                format_float(r.gradient_norm),
                r.nondegenerate.to_string(),
                r.m_positive.to_string(),
                format_float(min_abs),
                join_floats(&r.configuration.points.concat()),
                join_floats(&r.configuration.heights),
            ]
        })
        .collect()
}

const CRITICAL_POINT_HEADER: [&str; 9] =
    ["index", "k", "psi", "gradient_norm", "nondegenerate", "m_positive", "min_abs_eigenvalue", "points", "heights"];

pub fn cmd_critical_points(config: &ScenarioConfig) -> Result<CommandOutput<CriticalPointsReport>, CliError> {
    let ctx = context(config.n)?;
    let kernel = config.domain.build(&ctx, config.interpolation.into())?;
    let records = find_records(&ctx, kernel.as_ref(), config);
    let report = CriticalPointsReport { schema: SCHEMA, command: "critical-points", config: config.clone(), records };
    let json = to_json(&report)?;
    let csv = to_csv(&CRITICAL_POINT_HEADER, &critical_point_rows(&report.records))?;
    write_outputs(&config.out, &json, &csv)?;
    Ok(CommandOutput { report, stdout: json })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualItem {
    pub spike: usize,
    pub radius: f64,
    pub kind: IdentityKind,
    pub residual: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionItem {
    pub critical_point: usize,
    pub prediction: PredictionRecord,
    pub mass_check: Option<MassReport>,
    pub energy_check: Option<EnergyReport>,
    pub pohozaev: Vec<ResidualItem>,
    /// Failures of individual checks; the prediction itself still stands.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub critical_point: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictReport {
    pub schema: &'static str,
    pub command: &'static str,
    pub config: ScenarioConfig,
    pub critical_points: Vec<CriticalPointRecord>,
    pub predictions: Vec<PredictionItem>,
    pub skipped: Vec<Skipped>,
}

/// Mass, energy and Pohozaev checks for one prediction.
pub fn check_prediction(
    ctx: &DimensionContext,
    kernel: &dyn DomainKernel,
    config: &ScenarioConfig,
    critical_point: usize,
    prediction: PredictionRecord,
    seed: u64,
) -> PredictionItem {
    let mut errors = Vec::new();
    let q = &config.quadrature;
    let approx = match assemble_approximation(ctx, kernel, &prediction) {
        Ok(a) => a,
        Err(e) => {
            return PredictionItem {
                critical_point,
                prediction,
                mass_check: None,
                energy_check: None,
                pohozaev: Vec::new(),
                errors: vec![e.to_string()],
            }
        }
    };
    let mut spec = approx.importance_spec(q.samples, seed);
    spec.uniform_weight = q.uniform_weight;
    let mass_check = mass_of_approximation(ctx, kernel, &prediction, &spec).map_err(|e| errors.push(e.to_string())).ok();
    let energy_check = energy_of_approximation(ctx, kernel, &prediction, q.localization_radius, &spec)
        .map_err(|e| errors.push(e.to_string()))
        .ok();

    let mut pohozaev = Vec::new();
    for (j, spike) in approx.spikes.iter().enumerate() {
        let center = &spike.bubble.params.center;
        let others: Vec<Vec<f64>> = prediction.spike_points.iter().filter(|p| *p != center).cloned().collect();
        let theta = default_radii(kernel, center, &others)[1];
        let sphere = match SphereSamples::new(center, theta, &QuadratureSpec::uniform(q.sphere_samples, seed)) {
            Ok(s) => s,
            Err(e) => {
                errors.push(e.to_string());
                continue;
            }
        };
        let mut volume = QuadratureSpec::importance(q.samples, seed, vec![center.clone()], vec![1.0 / spike.bubble.params.height]);
        volume.uniform_weight = q.uniform_weight;
        let samples = ResidualSamples { sphere, volume: &volume };
        let control = Bubble::new(ctx, spike.bubble.params.clone());
        for kind in [IdentityKind::Dilation, IdentityKind::Translation { i: 0 }] {
            match local_pohozaev_residual_on(ctx, &samples, &approx, prediction.lambda_rho, kind, Some(&control)) {
                Ok(residual) => pohozaev.push(ResidualItem { spike: j, radius: theta, kind, residual }),
                Err(e) => errors.push(e.to_string()),
            }
        }
    }
    PredictionItem { critical_point, prediction, mass_check, energy_check, pohozaev, errors }
}

pub fn cmd_predict(config: &ScenarioConfig) -> Result<CommandOutput<PredictReport>, CliError> {
    let ctx = context(config.n)?;
    let kernel = config.domain.build(&ctx, config.interpolation.into())?;
    let kernel = kernel.as_ref();
    let records = find_records(&ctx, kernel, config);

    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    for (i, r) in records.iter().enumerate() {
        for &rho in &config.rho {
            match predict_parameters(&ctx, kernel, r, rho) {
                Ok(p) => jobs.push((i, p)),
                Err(e) => skipped.push(Skipped { critical_point: i, reason: e.to_string() }),
            }
        }
    }
    skipped.dedup_by(|a, b| a.critical_point == b.critical_point && a.reason == b.reason);
    let predictions: Vec<PredictionItem> = jobs
        .into_par_iter()
        .enumerate()
        .map(|(item, (i, p))| check_prediction(&ctx, kernel, config, i, p, sub_seed(config.seed, item as u64)))
        .collect();

    let rows: Vec<Vec<String>> = predictions
        .iter()
        .map(|it| {
            let p = &it.prediction;
            let est = |e: Option<Estimate>| e.map_or((String::new(), String::new()), |e| (format_float(e.value), format_float(e.stderr)));
            let (mass, mass_se) = est(it.mass_check.map(|m| m.value));
            let (energy, energy_se) = est(it.energy_check.as_ref().map(|m| m.value));
            let dilation = it
                .pohozaev
                .iter()
                .find(|r| r.kind == IdentityKind::Dilation)
                .map_or(String::new(), |r| format_float(r.residual.value));
            vec![
                it.critical_point.to_string(),
                format_float(p.rho),
                format_float(p.lambda_rho),
                join_floats(&p.spike_heights),
                format_float(p.conventions.direct.lambda_constant),
                join_floats(&p.conventions.direct.height_constants),
                format_float(p.conventions.inverted.lambda_constant),
                join_floats(&p.conventions.inverted.height_constants),
                mass,
                mass_se,
                energy,
                energy_se,
                dilation,
                p.warnings.len().to_string(),
            ]
        })
        .collect();
    let report = PredictReport {
        schema: SCHEMA,
        command: "predict",
        config: config.clone(),
        critical_points: records,
        predictions,
        skipped,
    };
    let json = to_json(&report)?;
    let csv = to_csv(
        &[
            "critical_point",
            "rho",
            "lambda_rho",
            "spike_heights",
            "direct_lambda_constant",
            "direct_height_constants",
            "inverted_lambda_constant",
            "inverted_height_constants",
            "mass",
            "mass_stderr",
            "energy",
            "energy_stderr",
            "dilation_residual",
            "warnings",
        ],
        &rows,
    )?;
    write_outputs(&config.out, &json, &csv)?;
    Ok(CommandOutput { report, stdout: json })
}

pub fn cmd_verify(config: &ScenarioConfig) -> Result<CommandOutput<VerifyReport>, CliError> {
    let (report, table) = run_verify(config)?;
    let json = to_json(&report)?;
    let rows: Vec<Vec<String>> = report
        .criteria
        .iter()
        .map(|c| vec![c.id.to_string(), c.name.clone(), c.group.to_string(), if c.pass { "pass" } else { "fail" }.into(), c.failed_checks().join(";")])
        .collect();
    let csv = to_csv(&["criterion", "name", "group", "result", "failed_checks"], &rows)?;
    write_outputs(&config.out, &json, &csv)?;
    Ok(CommandOutput { report, stdout: table })
}
