//! Dispatch from a resolved configuration to the experiments, producing an
//! in-memory [`Outcome`].

use std::time::Instant;

use serde_json::{json, Value};
use stripcs::concentration::mcdiarmid_empirical;
use stripcs::ensembles::SensingMatrix;
use stripcs::recon::Noise;
use stripcs::stripcheck::{bound_report, certify, condition_experiment, strip_delta_sharpened, CertifyMode, EXHAUSTIVE_LIMIT};

use crate::config::{ConfigError, ExperimentConfig, Kind};
use crate::experiments::{
    coherence_grid, eta_for, family_eta, gammas_for, mcdiarmid_setup, noise_experiment, recon_sweep, recon_trial, sparse_values, strip_grid,
    ReconSetup,
};
use crate::output::{Outcome, Table};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Library(#[from] stripcs::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

fn matrix_of(cfg: &ExperimentConfig) -> Result<SensingMatrix, RunError> {
    let spec = cfg.matrix.as_ref().ok_or_else(|| ConfigError::Field { path: "family".into(), reason: "required".into() })?;
    Ok(spec.build()?)
}

fn first_k(cfg: &ExperimentConfig) -> usize {
    cfg.k[0]
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let start = Instant::now();
    let mut outcome = match cfg.kind {
        Kind::Certify => run_certify(cfg)?,
        Kind::Strip => run_strip(cfg)?,
        Kind::Coherence => run_coherence(cfg)?,
        Kind::Condition => run_condition(cfg)?,
        Kind::Recon => run_recon(cfg)?,
        Kind::ReconSweep => run_recon_sweep(cfg)?,
        Kind::Mcdiarmid => run_mcdiarmid(cfg)?,
        Kind::Noise => run_noise(cfg)?,
        Kind::Bounds => run_bounds(cfg)?,
    };
    let results = std::mem::take(&mut outcome.summary);
    outcome.summary = json!({
        "tool": "stripcs",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": cfg.kind,
        "config_hash": cfg.hash(),
        "config": cfg,
        "pass": outcome.pass,
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
        "results": results,
    });
    Ok(outcome)
}

fn run_certify(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mat = matrix_of(cfg)?;
    let mode = cfg.certify_mode.unwrap_or(if mat.cols() <= EXHAUSTIVE_LIMIT {
        CertifyMode::Exhaustive
    } else {
        CertifyMode::Sampled { pairs: 10_000, seed: cfg.seed }
    });
    let cert = certify(&mat, mode, cfg.tol)?;
    let expected = cfg.matrix.as_ref().and_then(family_eta);
    let eta_ok = expected.map_or(true, |e| (cert.st3_eta - e).abs() <= 1e-9);
    let pass = cert.all_pass() && eta_ok;
    let lines = vec![
        format!("matrix      {} ({}x{})", mat.spec(), mat.rows(), mat.cols()),
        format!("St1 rows    {} (max deviation {:.3e}, max row sum {:.3e})", verdict(cert.st1_pass()), cert.st1_max_row_deviation, cert.st1_max_row_sum),
        format!("St2 closure {} ({} products)", verdict(cert.st2_pass), cert.st2_products_checked),
        format!("St3 eta     {:.12} expected {}", cert.st3_eta, expected.map_or("n/a".to_string(), |e| format!("{e:.12}"))),
    ];
    Ok(Outcome { summary: json!({ "certificate": cert, "expected_eta": expected, "eta_matches": eta_ok }), pass, lines, ..Default::default() })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn run_strip(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mat = matrix_of(cfg)?;
    let eta = eta_for(mat.spec(), &mat, cfg.eta)?;
    let grid = strip_grid(&mat, &cfg.k, &cfg.epsilon, eta, cfg.value_model, cfg.trials, cfg.seed)?;
    let flags: Vec<String> = cfg.epsilon.iter().map(|e| format!("violated@{e}")).collect();
    let mut columns = vec!["k", "trial", "distortion"];
    columns.extend(flags.iter().map(String::as_str));
    let mut table = Table::new("strip", &columns);
    for (k, d) in &grid.samples {
        for (t, v) in d.iter().enumerate() {
            let mut row = vec![json!(k), json!(t), json!(v)];
            row.extend(cfg.epsilon.iter().map(|e| json!(u8::from(*v < 1.0 - e || *v > 1.0 + e))));
            table.push(row);
        }
    }
    let mut lines = vec![format!("{:>4} {:>6} {:>10} {:>12} {:>10} {}", "k", "eps", "rate", "delta", "3sigma", "verdict")];
    for c in &grid.cells {
        lines.push(format!(
            "{:>4} {:>6} {:>10.5} {:>12.5e} {:>10.5} {}",
            c.k,
            c.epsilon,
            c.check.rate,
            c.delta.delta,
            3.0 * c.check.sigma,
            if c.check.informative { verdict(c.check.pass) } else { "vacuous" }
        ));
    }
    let pass = grid.cells.iter().all(|c| c.check.pass);
    Ok(Outcome { summary: json!({ "eta": grid.eta, "cells": grid.cells }), tables: vec![table], pass, lines, dat: None })
}

fn run_coherence(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mat = matrix_of(cfg)?;
    let eta = eta_for(mat.spec(), &mat, cfg.eta)?;
    let grid = coherence_grid(&mat, &cfg.k, &cfg.epsilon, eta, cfg.trials, cfg.seed)?;
    let mut table = Table::new("coherence", &["k", "trial", "coherence"]);
    for (k, d) in &grid.samples {
        for (t, v) in d.iter().enumerate() {
            table.push(vec![json!(k), json!(t), json!(v)]);
        }
    }
    let mut lines = vec![format!("{:>4} {:>6} {:>10} {:>10} {:>10} {:>10} {}", "k", "eps", "mean", "expected", "threshold", "exceed", "verdict")];
    for c in &grid.cells {
        lines.push(format!(
            "{:>4} {:>6} {:>10.5} {:>10.5} {:>10} {:>10.5} {}",
            c.k,
            c.epsilon,
            c.mean,
            c.expected_mean,
            c.threshold.map_or("-".to_string(), |t| format!("{t:.5}")),
            c.check.rate,
            if c.check.informative { verdict(c.check.pass) } else { "vacuous" }
        ));
    }
    let pass = grid.cells.iter().all(|c| c.check.pass);
    Ok(Outcome { summary: json!({ "eta": grid.eta, "cells": grid.cells }), tables: vec![table], pass, lines, dat: None })
}

fn run_condition(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mat = matrix_of(cfg)?;
    let mut table = Table::new("condition", &["k", "trial", "condition"]);
    let mut dat = Table::new("condition", &["k", "mean", "std", "singular"]);
    let mut stats = Vec::new();
    let mut lines = vec![format!("{:>4} {:>12} {:>12} {:>8}", "k", "mean", "std", "singular")];
    for &k in &cfg.k {
        let s = condition_experiment(&mat, k, cfg.trials, derive(cfg.seed, k))?;
        for (t, v) in s.conditions.iter().enumerate() {
            table.push(vec![json!(k), json!(t), finite(*v)]);
        }
        dat.push(vec![json!(k), finite(s.mean), finite(s.std), json!(s.singular)]);
        lines.push(format!("{:>4} {:>12.6} {:>12.6} {:>8}", k, s.mean, s.std, s.singular));
        stats.push(json!({ "k": k, "mean": finite(s.mean), "std": finite(s.std), "singular": s.singular }));
    }
    let pass = stats.iter().all(|s| s["singular"] == json!(0));
    Ok(Outcome { summary: json!({ "per_k": stats }), tables: vec![table], dat: Some(dat), pass, lines })
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn derive(seed: u64, k: usize) -> u64 {
    stripcs::rng::derive_seed(seed, 0x636f_6e64_6b00, k as u64)
}

fn recon_setup(cfg: &ExperimentConfig) -> ReconSetup {
    ReconSetup {
        model: cfg.value_model,
        noise: cfg.noise,
        tail: cfg.tail,
        sigma_tail: cfg.sigma_tail,
        epsilon: cfg.epsilon[0],
        association: cfg.association,
        timing: cfg.timing,
    }
}

fn run_recon(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mat = matrix_of(cfg)?;
    let k = first_k(cfg);
    let (row, alpha, result) = recon_trial(&mat, k, 0, &recon_setup(cfg), cfg.seed)?;
    let lines = vec![
        format!("matrix      {}", mat.spec()),
        format!("k           {k}, noise {:?}, tail {}", cfg.noise, cfg.tail),
        format!("iterations  {}", result.iterations.len()),
        format!("residual    {:.3e}", result.residual),
        format!("error       {:.3e} (bound {:.3e})", row.error, row.bound),
        format!("recovery    {}", if row.exact { "exact" } else if row.success { "within bound" } else { "FAILED" }),
    ];
    let summary = json!({
        "trial": row,
        "truth": sparse_values(&alpha),
        "estimate": sparse_values(&result.alpha_hat),
        "iterations": result.iterations,
        "residual": result.residual,
        "converged": result.success,
    });
    Ok(Outcome { summary, pass: row.success, lines, ..Default::default() })
}

fn run_recon_sweep(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mat = matrix_of(cfg)?;
    let m = mat.m().unwrap_or(0);
    let rows = recon_sweep(&mat, &cfg.k, cfg.trials, &recon_setup(cfg), cfg.seed)?;
    let mut table = Table::new("recon_sweep", &["m", "k", "trial", "success", "exact", "error", "bound", "iterations", "wall_time"]);
    for r in &rows {
        table.push(vec![
            json!(m),
            json!(r.k),
            json!(r.trial),
            json!(u8::from(r.success)),
            json!(u8::from(r.exact)),
            json!(r.error),
            json!(r.bound),
            json!(r.iterations),
            r.wall_time.map_or(Value::Null, |w| json!(w)),
        ]);
    }
    let mut dat = Table::new("recon_sweep", &["k", "successes", "trials", "rate"]);
    let mut per_k = Vec::new();
    let mut lines = vec![format!("{:>4} {:>9} {:>7}", "k", "success", "rate")];
    for &k in &cfg.k {
        let s = rows.iter().filter(|r| r.k == k && r.success).count();
        let rate = s as f64 / cfg.trials as f64;
        dat.push(vec![json!(k), json!(s), json!(cfg.trials), json!(rate)]);
        lines.push(format!("{:>4} {:>9} {:>7.3}", k, s, rate));
        per_k.push(json!({ "k": k, "successes": s, "trials": cfg.trials, "rate": rate }));
    }
    Ok(Outcome { summary: json!({ "m": m, "per_k": per_k }), tables: vec![table], dat: Some(dat), pass: true, lines })
}

fn run_mcdiarmid(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mat = cfg.matrix.as_ref().map(|s| s.build()).transpose()?;
    let eta = match (&mat, &cfg.matrix) {
        (Some(m), Some(spec)) => eta_for(spec, m, cfg.eta)?,
        _ => cfg.eta.unwrap_or(1.0),
    };
    let setup = mcdiarmid_setup(cfg.function, mat.as_ref(), first_k(cfg), eta, cfg.ground, cfg.seed)?;
    let gammas = gammas_for(&setup.c, &cfg.q);
    let report = mcdiarmid_empirical(&setup.f, setup.ground, &setup.c, &gammas, cfg.trials, cfg.probes, cfg.seed)?;
    let mut table = Table::new("mcdiarmid", &["q", "gamma", "exceed", "empirical_tail", "bound", "sigma", "pass"]);
    let mut lines = vec![setup.description.clone(), format!("{:>6} {:>12} {:>12} {:>12} {}", "q", "gamma", "empirical", "bound", "verdict")];
    for (q, c) in cfg.q.iter().zip(&report.checks) {
        table.push(vec![json!(q), json!(c.gamma), json!(c.exceed), json!(c.empirical_tail), json!(c.bound), json!(c.sigma), json!(c.pass)]);
        lines.push(format!("{:>6} {:>12.5e} {:>12.5e} {:>12.5e} {}", q, c.gamma, c.empirical_tail, c.bound, verdict(c.pass)));
    }
    let pass = report.pass();
    Ok(Outcome { summary: json!({ "function": setup.description, "c": setup.c, "report": report }), tables: vec![table], pass, lines, dat: None })
}

fn run_noise(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mat = matrix_of(cfg)?;
    let eta = eta_for(mat.spec(), &mat, cfg.eta)?;
    let sigma = match cfg.noise {
        Noise::Measurement { sigma } => sigma,
        _ => unreachable!("validated at resolution"),
    };
    let report = noise_experiment(&mat, first_k(cfg), cfg.value_model, sigma, cfg.gamma, cfg.eps_prime, eta, cfg.trials, cfg.seed)?;
    let mut table = Table::new("noise", &["trial", "norm_ratio", "noise_norm", "tail_probability", "violation"]);
    for (t, r) in report.trials.iter().enumerate() {
        table.push(vec![json!(t), json!(r.ratio), json!(r.noise_norm), json!(r.tail), json!(u8::from(r.violation))]);
    }
    let lines = vec![
        format!("k={} sigma={} gamma={} eps'={} (eps={:.4})", report.k, sigma, cfg.gamma, cfg.eps_prime, report.epsilon),
        format!("delta {:.5e}  S {:.5e}  bound 2(delta+S) {:.5e}", report.delta.delta, report.mean_tail, report.check.bound),
        format!(
            "violation rate {:.5} ({}/{}) {}",
            report.check.rate,
            report.check.count,
            report.check.trials,
            if report.check.informative { verdict(report.check.pass) } else { "vacuous" }
        ),
    ];
    let pass = report.check.pass;
    let mut summary = serde_json::to_value(&report).expect("report serializes");
    summary.as_object_mut().expect("object").remove("trials");
    Ok(Outcome { summary, tables: vec![table], pass, lines, dat: None })
}

fn run_bounds(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let mat = matrix_of(cfg)?;
    let eta = eta_for(mat.spec(), &mat, cfg.eta)?;
    let (n, c) = (mat.rows(), mat.cols());
    let mut reports = Vec::new();
    let mut lines = vec![format!("N={n} C={c} eta={eta}"), format!("{:>4} {:>6} {:>12} {:>12} {:>12}", "k", "eps", "delta", "coh. mean", "sharpened")];
    for &k in &cfg.k {
        for &eps in &cfg.epsilon {
            let r = bound_report(n, c, k, eps, eta)?;
            let sharp = match cfg.rho {
                Some(rho) => Some(strip_delta_sharpened(n, c, k, eta, eps, rho)?),
                None => None,
            };
            lines.push(format!(
                "{:>4} {:>6} {:>12.5e} {:>12.5e} {:>12}",
                k,
                eps,
                r.delta,
                r.coherence_mean,
                sharp.map_or("-".to_string(), |s| format!("{:.5e}", s.delta))
            ));
            reports.push(json!({ "report": r, "rho": cfg.rho, "sharpened": sharp }));
        }
    }
    Ok(Outcome { summary: json!({ "n": n, "c": c, "eta": eta, "bounds": reports }), pass: true, lines, ..Default::default() })
}
