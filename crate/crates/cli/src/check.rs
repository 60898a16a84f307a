//! `check`: invariant report over a scenario's observers.

use histories_core::bell::MAX_RATE_STEP;
use histories_core::scenario::memory_matches_copenhagen;
use histories_core::{Observer, Scenario, TrajectorySampler, NORM_TOL, VALIDATION_TOL};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::table::{
    build_scenario, rate_check, select_observer, Check, BELL_SUM_TOL, COPENHAGEN_SUM_TOL,
    MEMORY_TOL,
};

pub const BORN_MARGINAL_TOL: f64 = 1e-6;
pub const CHAIN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub step: f64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs `f`; an engine error becomes a failed check carrying the message.
fn attempt(
    name: &str,
    subject: &str,
    tolerance: f64,
    f: impl FnOnce() -> histories_core::Result<Check>,
) -> Check {
    f().unwrap_or_else(|e| Check::failed(name, subject, tolerance, e.to_string()))
}

pub fn check(cfg: &RunConfig) -> CliResult<Report> {
    let scenario = build_scenario(cfg)?;
    let observers: Vec<&Observer> = match &cfg.observer {
        Some(name) => vec![select_observer(&scenario, Some(name))?],
        None => scenario.observers.iter().collect(),
    };
    let mut checks = vec![Check::measured(
        "initial-norm",
        &scenario.name,
        (scenario.initial_state.norm_sqr() - 1.0).abs(),
        NORM_TOL,
    )];
    for o in observers {
        checks.extend(observer_checks(&scenario, o, cfg.step));
    }
    if scenario.memory.is_some() {
        checks.push(attempt(
            "memory-vs-copenhagen",
            &scenario.name,
            MEMORY_TOL,
            || {
                Ok(Check::measured(
                    "memory-vs-copenhagen",
                    &scenario.name,
                    memory_matches_copenhagen(&scenario)?,
                    MEMORY_TOL,
                ))
            },
        ));
    }
    Ok(Report {
        scenario: scenario.name.clone(),
        step: cfg.step,
        checks,
    })
}

fn observer_checks(s: &Scenario, o: &Observer, step: f64) -> Vec<Check> {
    let name = o.name.as_str();
    let times = &o.times;
    let mut out = vec![Check::measured(
        "family-valid",
        name,
        o.family.validate().max_deviation(),
        VALIDATION_TOL,
    )];
    out.push(attempt("copenhagen-sum", name, COPENHAGEN_SUM_TOL, || {
        let rows = s.evaluator(o)?.copenhagen_all(o.fixed_start)?;
        let total: f64 = rows.iter().map(|r| r.1).sum();
        Ok(Check::measured(
            "copenhagen-sum",
            name,
            (total - 1.0).abs(),
            COPENHAGEN_SUM_TOL,
        ))
    }));
    if times.len() < 2 {
        return out;
    }
    let bp = match s.bell_process(o) {
        Ok(bp) => bp,
        Err(e) => {
            out.push(Check::failed("bell-process", name, 0.0, e.to_string()));
            return out;
        }
    };
    match bp.history_probabilities(times, o.fixed_start, step) {
        Ok((rows, diag)) => {
            let total: f64 = rows.iter().map(|r| r.1).sum();
            out.push(Check::measured(
                "bell-sum",
                name,
                (total - 1.0).abs(),
                BELL_SUM_TOL,
            ));
            out.push(rate_check(
                name,
                diag.min_rate,
                diag.max_exclusivity_product,
            ));
        }
        Err(e) => out.push(Check::failed("bell-sum", name, BELL_SUM_TOL, e.to_string())),
    }
    out.push(attempt("born-marginal", name, BORN_MARGINAL_TOL, || {
        Ok(Check::measured(
            "born-marginal",
            name,
            bp.born_marginal_check(times, step)?,
            BORN_MARGINAL_TOL,
        ))
    }));
    out.push(attempt("kernel-chain", name, CHAIN_TOL, || {
        let (a, c) = (times[0], times[times.len() - 1]);
        let b = if times.len() > 2 {
            times[times.len() / 2]
        } else {
            0.5 * (a + c)
        };
        let whole = bp.kernel(a, c, step)?;
        let split = bp.kernel(a, b, step)?.then(&bp.kernel(b, c, step)?);
        Ok(
            Check::measured("kernel-chain", name, whole.max_abs_diff(&split), CHAIN_TOL)
                .with_note(format!("T({a},{c}) vs T({a},{b})T({b},{c})")),
        )
    }));
    out.push(attempt("mc-step-guard", name, MAX_RATE_STEP, || {
        let sampler = TrajectorySampler::new(&bp, times, step)?;
        Ok(Check::measured(
            "mc-step-guard",
            name,
            sampler.max_rate_step(),
            MAX_RATE_STEP,
        )
        .with_note("largest exit rate x step over occupied labels".into()))
    }));
    out
}
