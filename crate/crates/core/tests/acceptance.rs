//! Runs the full verification suite on the default scenario, prints one
//! PASS/FAIL line per criterion and cross-checks reported values against
//! oracles written independently of the library.

use std::f64::consts::PI;
use std::io::Write;

use serde_json::Value;
use spikekit::cli::verify::VerifyReport;
use spikekit::cli::{cmd_verify, ScenarioConfig};

/// Criteria known to fail, with the failing check names they may report.
/// The Q1 surface integral equals −½·Hess R, not the stated −Hess R (see
/// the verification section of the README), so criterion 10 stays red.
const KNOWN_RED: &[(usize, &[&str])] = &[(10, &["Q1(G, ∂G) = −Hess R in some derivative slot"])];

/// Γ at positive half-integers by the recurrence from Γ(1/2) and Γ(1).
fn gamma_half(x: f64) -> f64 {
    let twice = (2.0 * x).round() as i64;
    assert!(twice >= 1 && (2.0 * x - twice as f64).abs() < 1e-12, "not a half-integer: {x}");
    let (mut v, mut t) = if twice % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while t < x - 1e-12 {
        v *= t;
        t += 1.0;
    }
    v
}

fn beta_half(a: f64, b: f64) -> f64 {
    gamma_half(a) * gamma_half(b) / gamma_half(a + b)
}

struct Oracle {
    a: f64,
    b: f64,
    s: f64,
    robin0: f64,
}

fn oracle(n: usize) -> Oracle {
    let nf = n as f64;
    let omega = 2.0 * PI.powf(nf / 2.0) / gamma_half(nf / 2.0);
    let c = (nf * (nf - 2.0)).powf((nf - 2.0) / 4.0);
    let a = c * (nf - 2.0) * omega;
    let b = c * c * omega * 0.5 * beta_half(nf / 2.0, nf / 2.0 - 2.0);
    let s = c * c * nf * (nf - 2.0) * omega * 0.5 * beta_half(nf / 2.0, nf / 2.0);
    Oracle { a, b, s, robin0: 1.0 / ((nf - 2.0) * omega) }
}

/// Height of the single spike at the centre of the unit ball: the root
/// of `dΨ/dμ = (N−2)A²Rμ^{N−3} − 2Bμ` by bisection.
fn radial_height(n: usize) -> (f64, f64) {
    let o = oracle(n);
    let nf = n as f64;
    let psi = |mu: f64| o.a * o.a * o.robin0 * mu.powf(nf - 2.0) - o.b * mu * mu;
    let dpsi = |mu: f64| (nf - 2.0) * o.a * o.a * o.robin0 * mu.powf(nf - 3.0) - 2.0 * o.b * mu;
    let (mut lo, mut hi) = (1e-6, 10.0);
    assert!(dpsi(lo) < 0.0 && dpsi(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dpsi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    (mu, psi(mu))
}

/// Writes past the test harness capture so the lines show in plain runs.
fn report(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
    let _ = out.flush();
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn criterion(report: &VerifyReport, id: usize) -> &spikekit::cli::verify::CriterionResult {
    report.criteria.iter().find(|c| c.id == id).unwrap_or_else(|| panic!("criterion {id} missing"))
}

fn check_oracles_n6(report: &VerifyReport) {
    for ctx in criterion(report, 1).details["contexts"].as_array().unwrap() {
        let n = ctx["n"].as_u64().unwrap() as usize;
        let o = oracle(n);
        for (key, want) in [("a", o.a), ("b", o.b), ("sobolev_level", o.s)] {
            let got = ctx[key].as_f64().unwrap();
            assert!(rel(got, want) <= 1e-10, "N={n} {key}: {got} vs oracle {want}");
        }
    }
    let o = oracle(6);
    assert!(rel(o.a, 96.0 * PI.powi(3)) < 1e-14);
    assert!(rel(o.b, 96.0 * PI.powi(3)) < 1e-14);
    assert!(rel(o.s, 230.4 * PI.powi(3)) < 1e-14);

    let records = criterion(report, 6).details["records"].as_array().unwrap();
    assert_eq!(records.len(), 1);
    let (mu, psi) = radial_height(6);
    assert!((mu - 1.0 / 48f64.sqrt()).abs() < 1e-12);
    assert!(rel(psi, -PI.powi(3)) < 1e-12);
    let conf = &records[0]["configuration"];
    let h = conf["heights"][0].as_f64().unwrap();
    assert!((h - mu).abs() <= 1e-8, "height {h} vs oracle {mu}");
    let p: Vec<f64> = conf["points"][0].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(p.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-8);
    assert!(rel(records[0]["psi"].as_f64().unwrap(), psi) <= 1e-8);

    for pred in criterion(report, 7).details["predictions"].as_array().unwrap() {
        let rho = pred["rho"].as_f64().unwrap();
        let want_mu = (o.b / rho).sqrt();
        let want_lambda = rho / (o.b * mu * mu);
        assert!(rel(pred["spike_heights"][0].as_f64().unwrap(), want_mu) <= 1e-10);
        assert!(rel(pred["lambda_rho"].as_f64().unwrap(), want_lambda) <= 1e-10);
    }
}

fn check_known_red(c: &spikekit::cli::verify::CriterionResult, allowed: &[&str]) {
    let failed = c.failed_checks();
    assert!(
        failed.iter().all(|f| allowed.contains(&f.as_str())),
        "criterion {} fails beyond its known red checks: {failed:?}",
        c.id
    );
    if c.id == 10 {
        let slots = c.details["q1_slots"].as_array().unwrap();
        let pole = slots.iter().find(|s| s["slot"] == "pole").unwrap();
        assert_eq!(pole["matches_minus_half_hessian"], Value::Bool(true), "pole slot no longer matches −½·Hess R");
    }
}

#[test]
fn acceptance_suite() {
    std::env::remove_var("SPIKEKIT_SEED");
    let dir = tempfile::tempdir().unwrap();
    let config = ScenarioConfig { out: dir.path().to_path_buf(), ..ScenarioConfig::default() };

    let first = cmd_verify(&config).expect("verify runs");
    let bytes_first = std::fs::read(dir.path().join("records.json")).unwrap();
    let second = cmd_verify(&config).expect("verify reruns");
    let bytes_second = std::fs::read(dir.path().join("records.json")).unwrap();
    let deterministic = bytes_first == bytes_second;

    let mut lines = Vec::new();
    let mut unexpected = Vec::new();
    for c in &first.report.criteria {
        let pass = if c.id == 12 { c.pass && deterministic } else { c.pass };
        lines.push(format!("{} criterion {:>2}: {}", if pass { "PASS" } else { "FAIL" }, c.id, c.name));
        for f in c.failed_checks() {
            lines.push(format!("       failed: {f}"));
        }
        match KNOWN_RED.iter().find(|k| k.0 == c.id) {
            Some((_, allowed)) => check_known_red(c, allowed),
            None if !pass => unexpected.push(c.id),
            None => {}
        }
    }
    report(&lines.join("\n"));
    assert_eq!(first.report.criteria.len(), 12);
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
    assert!(deterministic, "records.json differs between runs");
    assert_eq!(first.stdout.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 12);
    assert_eq!(second.report.all_pass, first.report.all_pass);
    check_oracles_n6(&first.report);
}

#[test]
fn acceptance_spot_checks_n7() {
    let dir = tempfile::tempdir().unwrap();
    let config = ScenarioConfig {
        n: 7,
        out: dir.path().to_path_buf(),
        only: ["1", "2", "3", "4", "6", "7"].map(String::from).to_vec(),
        seed: 3,
        ..ScenarioConfig::default()
    };
    let out = cmd_verify(&config).expect("verify runs at N=7");
    for c in &out.report.criteria {
        report(&format!("{} N=7 criterion {:>2}: {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name));
    }
    assert!(out.report.all_pass, "{}", out.stdout);
    let (mu, _) = radial_height(7);
    let rec = &criterion(&out.report, 6).details["records"][0];
    assert!((rec["configuration"]["heights"][0].as_f64().unwrap() - mu).abs() <= 1e-8);
    let o = oracle(7);
    let ctx = &criterion(&out.report, 1).details["contexts"][2];
    assert_eq!(ctx["n"], Value::from(7));
    assert!(rel(ctx["a"].as_f64().unwrap(), o.a) <= 1e-10);
    assert!(o.a != o.b);
}
