//! Command execution and report writing.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use feedcap_core::channels::{
    bisect_eb_threshold, is_entanglement_breaking, make_channel, PPT_TOL,
};
use feedcap_core::feedback::{
    exploration_trial, random_protocol, run_protocol, verify_eb_bound, verify_product_bounds,
    ExplorationReport, ProtocolDims,
};
use feedcap_core::holevo::{default_ensemble_size, run_restart};
use feedcap_core::random::derive_seed;
use feedcap_core::{
    ChannelKind, EbVerdict, Error, FeedbackProtocol, HolevoResult, InputClass, KrausChannel,
    OptimizerOptions, ProtocolReport, Tolerance, VerificationVerdict,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, ExperimentConfig};
use crate::error::{config, Result};
use crate::format::{self, MatrixJson};
use crate::reference::{
    chi_reference, closed_reference, user_reference, ChiReference, ChiSource, GRID_SLACK,
};
use crate::report::{self, RowVerdict, TrialRow};
use crate::spec::ChannelSpec;

/// Allowed shortfall of the two-use estimate below twice the reference.
pub const ADDITIVITY_BELOW: f64 = 1e-2;
/// Allowed excess of the two-use estimate above twice the reference.
pub const ADDITIVITY_ABOVE: f64 = 1e-3;

pub const SUMMARY_FILE: &str = "summary.json";
pub const ROWS_FILE: &str = "rows.csv";

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub command: Command,
    /// True iff every asserted bound held.
    pub passed: bool,
    pub summary: Value,
    /// Per-trial rows for the protocol commands.
    pub rows: Option<Vec<TrialRow>>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else {
            1
        }
    }

    /// Writes `summary.json` and, when there are rows, `rows.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join(SUMMARY_FILE),
            serde_json::to_string_pretty(&self.summary)? + "\n",
        )?;
        if let Some(rows) = &self.rows {
            report::write_report(rows, &dir.join(ROWS_FILE))?;
        }
        Ok(())
    }
}

/// Validates `cfg`, runs the experiment and writes the reports to `cfg.out`
/// when set.
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let outcome = execute(cfg)?;
    if let Some(dir) = &cfg.out {
        outcome.write(dir)?;
    }
    Ok(outcome)
}

/// Runs the experiment without writing anything.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let (passed, mut summary, rows) = match cfg.command {
        Command::Chi => chi(cfg)?,
        Command::EbTest => eb_test(cfg)?,
        Command::VerifyFeedback => verify_feedback(cfg)?,
        Command::VerifyEb => verify_eb(cfg)?,
        Command::ExploreEntangled => explore(cfg)?,
        Command::AdditivityCheck => additivity(cfg)?,
    };
    let map = summary.as_object_mut().expect("summary is an object");
    map.insert("command".into(), json!(cfg.command.name()));
    map.insert("config".into(), serde_json::to_value(cfg)?);
    map.insert("passed".into(), json!(passed));
    map.insert(
        "runtime_ms".into(),
        json!(start.elapsed().as_millis() as u64),
    );
    Ok(RunOutcome {
        command: cfg.command,
        passed,
        summary,
        rows,
    })
}

type Parts = (bool, Value, Option<Vec<TrialRow>>);

/// Multi-start maximization with the restarts spread over threads. The merge
/// runs in restart order, so the result equals the sequential one.
pub fn maximize_parallel(
    ch: &KrausChannel,
    ensemble_size: usize,
    opts: &OptimizerOptions,
) -> Result<HolevoResult> {
    if ensemble_size < 2 {
        return Err(Error::InvalidParameter {
            name: "ensemble_size",
            value: ensemble_size as f64,
        }
        .into());
    }
    let results = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| run_restart(ch, ensemble_size, opts, r).map(|o| o.into_result(opts.seed)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(results
        .into_iter()
        .reduce(HolevoResult::merge)
        .expect("at least one restart"))
}

fn ensemble_json(r: &HolevoResult) -> Value {
    r.best_ensemble
        .items()
        .iter()
        .map(|(p, rho)| json!({ "probability": p, "state": MatrixJson::from_matrix(rho.matrix()) }))
        .collect()
}

fn optimize(cfg: &ExperimentConfig, ch: &KrausChannel) -> Result<(HolevoResult, Value)> {
    let size = cfg
        .optimizer
        .ensemble_size
        .unwrap_or_else(|| default_ensemble_size(ch));
    let r = maximize_parallel(ch, size, &cfg.optimizer.options(cfg.seed))?;
    let v = json!({
        "chi_estimate": r.chi_estimate,
        "converged": r.converged,
        "restarts_used": r.restarts_used,
        "best_restart": r.best_restart,
        "iterations": r.iterations,
        "seed": r.seed,
        "ensemble_size": size,
        "best_ensemble": ensemble_json(&r),
    });
    Ok((r, v))
}

fn grid_slack(cfg: &ExperimentConfig) -> f64 {
    cfg.slack.unwrap_or(GRID_SLACK)
}

fn reference(
    cfg: &ExperimentConfig,
    spec: &ChannelSpec,
    ch: &KrausChannel,
) -> Result<ChiReference> {
    chi_reference(
        spec,
        ch,
        cfg.chi_source,
        cfg.grid_resolution,
        grid_slack(cfg),
    )
}

fn chi(cfg: &ExperimentConfig) -> Result<Parts> {
    let spec = cfg.channel_spec()?;
    let ch = spec.build()?;
    let (_, result) = optimize(cfg, &ch)?;
    let reference = match cfg.chi_source {
        ChiSource::Auto => closed_reference(&spec),
        _ => Some(reference(cfg, &spec, &ch)?),
    };
    let summary = json!({
        "channel": spec.to_string(),
        "d_in": ch.d_in(),
        "d_out": ch.d_out(),
        "result": result,
        "reference": reference,
    });
    Ok((true, summary, None))
}

fn eb_test(cfg: &ExperimentConfig) -> Result<Parts> {
    let mut summary = json!({});
    let map = summary.as_object_mut().expect("object");
    if cfg.channel.is_some() {
        let spec = cfg.channel_spec()?;
        let ch = spec.build()?;
        let r = is_entanglement_breaking(&ch);
        map.insert("channel".into(), json!(spec.to_string()));
        map.insert("d_in".into(), json!(ch.d_in()));
        map.insert("d_out".into(), json!(ch.d_out()));
        map.insert("verdict".into(), json!(r.verdict.to_string()));
        map.insert("min_pt_eigenvalue".into(), json!(r.min_pt_eigenvalue));
    }
    if let Some(b) = &cfg.bisect {
        let kind: ChannelKind = b
            .family
            .parse()
            .map_err(|e| config(format!("bisect.family: {e}")))?;
        if kind.param_count() != 1 {
            return Err(config(format!(
                "bisect.family: {kind} has no single parameter"
            )));
        }
        let family = |p: f64| make_channel(kind, &[p], b.dim);
        let threshold = bisect_eb_threshold(family, b.lo, b.hi, b.tol)?;
        let at = |p: f64| -> Result<Value> {
            let r = is_entanglement_breaking(&family(p)?);
            Ok(
                json!({ "p": p, "verdict": r.verdict.to_string(), "min_pt_eigenvalue": r.min_pt_eigenvalue }),
            )
        };
        map.insert(
            "bisection".into(),
            json!({
                "family": kind.name(),
                "dim": b.dim,
                "threshold": threshold,
                "tol": b.tol,
                "below": at(threshold - b.tol)?,
                "above": at(threshold + b.tol)?,
            }),
        );
    }
    Ok((true, summary, None))
}

struct Legs {
    omega_spec: ChannelSpec,
    lambda_spec: ChannelSpec,
    omega: KrausChannel,
    lambda: KrausChannel,
}

fn legs(cfg: &ExperimentConfig) -> Result<Legs> {
    let (omega_spec, lambda_spec) = cfg.protocol_specs()?;
    let omega = omega_spec.build()?;
    let lambda = if lambda_spec == omega_spec {
        omega.clone()
    } else {
        lambda_spec.build()?
    };
    Ok(Legs {
        omega_spec,
        lambda_spec,
        omega,
        lambda,
    })
}

fn leg_reference(
    cfg: &ExperimentConfig,
    user: Option<f64>,
    spec: &ChannelSpec,
    ch: &KrausChannel,
) -> Result<ChiReference> {
    match user {
        Some(v) => Ok(user_reference(v, cfg.slack.unwrap_or(0.0))),
        None => reference(cfg, spec, ch),
    }
}

/// The protocols of a run: either the protocol file, or `trials` random
/// protocols per input class where row `n` draws from `derive_seed(seed, n)`.
fn protocol_jobs(cfg: &ExperimentConfig, classes: &[InputClass]) -> Vec<(Option<u64>, InputClass)> {
    let mut jobs = Vec::with_capacity(classes.len() * cfg.trials);
    for (k, &class) in classes.iter().enumerate() {
        for t in 0..cfg.trials {
            jobs.push((
                Some(derive_seed(cfg.seed, (k * cfg.trials + t) as u64)),
                class,
            ));
        }
    }
    jobs
}

fn build_protocol(
    cfg: &ExperimentConfig,
    file: Option<&FeedbackProtocol>,
    seed: Option<u64>,
    class: InputClass,
    dims: ProtocolDims,
) -> Result<FeedbackProtocol> {
    match (file, seed) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(s)) => Ok(random_protocol(class, dims, cfg.messages, s)?),
        (None, None) => unreachable!("random jobs always carry a seed"),
    }
}

struct Checked {
    row: TrialRow,
    verdict: VerificationVerdict,
    ppt_ok: bool,
    chain_residual: f64,
}

fn chain_residual(r: &ProtocolReport) -> Result<f64> {
    Ok(r.chain_rule_residual()?
        .max((r.info_total - r.info_q1 - r.info_q2_given_q1).abs()))
}

fn summarize(checked: &[Checked], ppt_asserted: bool) -> (bool, Value) {
    let mut by_bound: BTreeMap<&str, usize> = BTreeMap::new();
    let mut failed_rows = 0;
    let mut ppt_violations = 0;
    let mut min_margin = f64::INFINITY;
    let mut worst: Option<&TrialRow> = None;
    let mut min_pt = f64::INFINITY;
    let mut max_chain = 0.0f64;
    for c in checked {
        for v in c.verdict.violations() {
            *by_bound.entry(v.bound.name()).or_default() += 1;
        }
        if !c.ppt_ok {
            ppt_violations += 1;
        }
        if c.row.verdict == RowVerdict::Fail {
            failed_rows += 1;
        }
        min_margin = min_margin.min(c.verdict.min_margin());
        if worst.is_none_or(|w| c.row.excess > w.excess) {
            worst = Some(&c.row);
        }
        min_pt = min_pt.min(c.row.min_pt_eigenvalue);
        max_chain = max_chain.max(c.chain_residual);
    }
    let passed = failed_rows == 0 && (!ppt_asserted || ppt_violations == 0);
    let summary = json!({
        "rows": checked.len(),
        "failed_rows": failed_rows,
        "violations_by_bound": by_bound,
        "ppt_violations": ppt_violations,
        "min_margin": min_margin,
        "max_excess": worst.map(|w| w.excess),
        "max_excess_seed": worst.and_then(|w| w.trial_seed),
        "min_pt_eigenvalue": min_pt,
        "max_chain_rule_residual": max_chain,
    });
    (passed, summary)
}

fn tolerance(cfg: &ExperimentConfig, refs: &[&ChiReference]) -> Tolerance {
    Tolerance {
        base: cfg.tol,
        oracle_slack: refs.iter().map(|r| r.slack).fold(0.0, f64::max),
    }
}

fn load_file_protocol(cfg: &ExperimentConfig) -> Result<Option<FeedbackProtocol>> {
    cfg.protocol
        .as_deref()
        .map(format::load_protocol)
        .transpose()
}

fn verify_feedback(cfg: &ExperimentConfig) -> Result<Parts> {
    let l = legs(cfg)?;
    let file = load_file_protocol(cfg)?;
    let classes = match &file {
        Some(p) => vec![p.input_class()],
        None => cfg.input_classes()?,
    };
    if classes.contains(&InputClass::Entangled) {
        return Err(config(
            "verify-feedback asserts its bounds for product and separable inputs only; use verify-eb or explore-entangled",
        ));
    }
    let chi1 = leg_reference(cfg, cfg.chi1, &l.omega_spec, &l.omega)?;
    let chi2 = if cfg.chi2.is_none() && cfg.chi1.is_none() && l.lambda_spec == l.omega_spec {
        chi1.clone()
    } else {
        leg_reference(cfg, cfg.chi2, &l.lambda_spec, &l.lambda)?
    };
    let tol = tolerance(cfg, &[&chi1, &chi2]);
    let dims = ProtocolDims::for_channels(&l.omega, &l.lambda);
    let jobs = match &file {
        Some(p) => vec![(None, p.input_class())],
        None => protocol_jobs(cfg, &classes),
    };
    let checked = jobs
        .par_iter()
        .map(|&(seed, class)| -> Result<Checked> {
            let p = build_protocol(cfg, file.as_ref(), seed, class, dims)?;
            let r = run_protocol(&p, &l.omega, &l.lambda)?;
            let verdict = verify_product_bounds(&r, chi1.value, chi2.value, tol);
            let ppt_ok = r.min_pt_eigenvalue() >= -PPT_TOL;
            let ok = verdict.passed() && ppt_ok;
            Ok(Checked {
                row: TrialRow {
                    trial_seed: seed,
                    input_class: class,
                    info_q1: r.info_q1,
                    info_q2_given_q1: r.info_q2_given_q1,
                    info_total: r.info_total,
                    chi1_ref: Some(chi1.value),
                    chi2_ref: Some(chi2.value),
                    excess: r.info_total - chi1.value - chi2.value,
                    min_pt_eigenvalue: r.min_pt_eigenvalue(),
                    verdict: if ok {
                        RowVerdict::Pass
                    } else {
                        RowVerdict::Fail
                    },
                },
                chain_residual: chain_residual(&r)?,
                verdict,
                ppt_ok,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (passed, mut summary) = summarize(&checked, true);
    let map = summary.as_object_mut().expect("object");
    map.insert("omega".into(), json!(l.omega_spec.to_string()));
    map.insert("lambda".into(), json!(l.lambda_spec.to_string()));
    map.insert(
        "input_classes".into(),
        json!(classes.iter().map(|c| c.name()).collect::<Vec<_>>()),
    );
    map.insert("chi1_ref".into(), serde_json::to_value(&chi1)?);
    map.insert("chi2_ref".into(), serde_json::to_value(&chi2)?);
    map.insert(
        "tolerance".into(),
        json!({ "base": tol.base, "oracle_slack": tol.oracle_slack }),
    );
    let rows = checked.into_iter().map(|c| c.row).collect();
    Ok((passed, summary, Some(rows)))
}

fn verify_eb(cfg: &ExperimentConfig) -> Result<Parts> {
    let l = legs(cfg)?;
    let eb = is_entanglement_breaking(&l.omega);
    if eb.verdict != EbVerdict::Yes {
        return Err(Error::NotEntanglementBreaking {
            min_eigenvalue: eb.min_pt_eigenvalue,
            d_in: l.omega.d_in(),
            d_out: l.omega.d_out(),
        }
        .into());
    }
    let file = load_file_protocol(cfg)?;
    let classes = match &file {
        Some(p) => vec![p.input_class()],
        None => cfg.input_classes()?,
    };
    let chi2 = leg_reference(cfg, cfg.chi2, &l.lambda_spec, &l.lambda)?;
    let chi1 = match cfg.chi1 {
        Some(v) => Some(user_reference(v, cfg.slack.unwrap_or(0.0))),
        None => reference(cfg, &l.omega_spec, &l.omega).ok(),
    };
    let tol = match &chi1 {
        Some(c1) => tolerance(cfg, &[c1, &chi2]),
        None => tolerance(cfg, &[&chi2]),
    };
    let dims = ProtocolDims::for_channels(&l.omega, &l.lambda);
    let jobs = match &file {
        Some(p) => vec![(None, p.input_class())],
        None => protocol_jobs(cfg, &classes),
    };
    let chi1_value = chi1.as_ref().map(|c| c.value);
    let checked = jobs
        .par_iter()
        .map(|&(seed, class)| -> Result<Checked> {
            let p = build_protocol(cfg, file.as_ref(), seed, class, dims)?;
            let (r, verdict) =
                verify_eb_bound(&p, &l.omega, &l.lambda, chi1_value, chi2.value, tol)?;
            let bound = match chi1_value {
                Some(c1) => c1 + chi2.value,
                None => r.info_q1 + chi2.value,
            };
            Ok(Checked {
                row: TrialRow {
                    trial_seed: seed,
                    input_class: class,
                    info_q1: r.info_q1,
                    info_q2_given_q1: r.info_q2_given_q1,
                    info_total: r.info_total,
                    chi1_ref: chi1_value,
                    chi2_ref: Some(chi2.value),
                    excess: r.info_total - bound,
                    min_pt_eigenvalue: r.min_pt_eigenvalue(),
                    verdict: if verdict.passed() {
                        RowVerdict::Pass
                    } else {
                        RowVerdict::Fail
                    },
                },
                chain_residual: chain_residual(&r)?,
                ppt_ok: r.min_pt_eigenvalue() >= -PPT_TOL,
                verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (passed, mut summary) = summarize(&checked, false);
    let map = summary.as_object_mut().expect("object");
    map.insert("omega".into(), json!(l.omega_spec.to_string()));
    map.insert(
        "omega_min_pt_eigenvalue".into(),
        json!(eb.min_pt_eigenvalue),
    );
    map.insert("lambda".into(), json!(l.lambda_spec.to_string()));
    map.insert(
        "input_classes".into(),
        json!(classes.iter().map(|c| c.name()).collect::<Vec<_>>()),
    );
    map.insert("chi1_ref".into(), serde_json::to_value(&chi1)?);
    map.insert("chi2_ref".into(), serde_json::to_value(&chi2)?);
    map.insert(
        "tolerance".into(),
        json!({ "base": tol.base, "oracle_slack": tol.oracle_slack }),
    );
    let rows = checked.into_iter().map(|c| c.row).collect();
    Ok((passed, summary, Some(rows)))
}

fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    Some(sorted[idx])
}

fn explore(cfg: &ExperimentConfig) -> Result<Parts> {
    let spec = cfg.channel_spec()?;
    let ch = spec.build()?;
    let chi = match cfg.chi1 {
        Some(v) => user_reference(v, cfg.slack.unwrap_or(0.0)),
        None => reference(cfg, &spec, &ch)?,
    };
    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|t| exploration_trial(&ch, chi.value, cfg.seed, t, cfg.messages))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rep = ExplorationReport::from_rows(chi.value, rows);
    let mut excess: Vec<f64> = rep.rows.iter().map(|r| r.excess).collect();
    excess.sort_by(f64::total_cmp);
    let summary = json!({
        "channel": spec.to_string(),
        "chi_ref": chi,
        "trials": rep.rows.len(),
        "max_excess": rep.max_excess,
        "argmax_seed": rep.argmax_seed,
        "positive_excess_count": excess.iter().filter(|&&e| e > 0.0).count(),
        "excess_quantiles": {
            "min": quantile(&excess, 0.0),
            "p50": quantile(&excess, 0.5),
            "p90": quantile(&excess, 0.9),
            "max": quantile(&excess, 1.0),
        },
    });
    let rows = rep
        .rows
        .iter()
        .map(|r| TrialRow {
            trial_seed: Some(r.seed),
            input_class: InputClass::Entangled,
            info_q1: r.info_q1,
            info_q2_given_q1: r.info_q2_given_q1,
            info_total: r.info_total,
            chi1_ref: Some(chi.value),
            chi2_ref: Some(chi.value),
            excess: r.excess,
            min_pt_eigenvalue: r.min_pt_eigenvalue,
            verdict: RowVerdict::Observed,
        })
        .collect();
    Ok((true, summary, Some(rows)))
}

fn additivity(cfg: &ExperimentConfig) -> Result<Parts> {
    let spec = cfg.channel_spec()?;
    if let ChannelSpec::Named { power, .. } = &spec {
        if *power != 1 {
            return Err(config("additivity-check takes a single-use channel"));
        }
    }
    let ch = spec.build()?;
    let chi = match cfg.chi1 {
        Some(v) => user_reference(v, cfg.slack.unwrap_or(0.0)),
        None => reference(cfg, &spec, &ch)?,
    };
    let (_, single) = optimize(cfg, &ch)?;
    let pair = ch.tensor(&ch);
    let (two, pair_result) = optimize(cfg, &pair)?;
    let lo = 2.0 * chi.value - ADDITIVITY_BELOW;
    let hi = 2.0 * (chi.value + chi.slack) + ADDITIVITY_ABOVE;
    let passed = two.chi_estimate >= lo && two.chi_estimate <= hi;
    let summary = json!({
        "channel": spec.to_string(),
        "chi_ref": chi,
        "single_use": single,
        "two_use": pair_result,
        "window": [lo, hi],
        "excess": two.chi_estimate - 2.0 * chi.value,
    });
    Ok((passed, summary, None))
}
