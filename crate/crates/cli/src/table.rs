//! `run`: one probability column per method over the observer's histories.

use histories_core::history::label_sequences;
use histories_core::scenario::{
    extend_with_memory, memory_matches_copenhagen, memory_readout, MemoryPlan,
};
use histories_core::{Observer, Scenario, TrajectoryBatch, TrajectorySampler};
use rayon::prelude::*;

use crate::config::{Method, RunConfig};
use crate::error::{CliError, CliResult};

pub const COPENHAGEN_SUM_TOL: f64 = 1e-8;
pub const BELL_SUM_TOL: f64 = 1e-6;
pub const MEMORY_TOL: f64 = 1e-9;
/// Rows at or below this in every column are dropped by `--prune-zeros`.
pub const PRUNE_FLOOR: f64 = 1e-10;
const MC_CHUNK: u64 = 4096;

/// One invariant with its measured deviation. `deviation` is `None` when the
/// computation itself failed; `note` then says why.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub subject: String,
    pub deviation: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    pub note: Option<String>,
}

impl Check {
    pub fn measured(name: &str, subject: &str, deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            subject: subject.to_string(),
            deviation: Some(deviation),
            tolerance,
            passed: deviation <= tolerance,
            note: None,
        }
    }

    pub fn failed(name: &str, subject: &str, tolerance: f64, note: String) -> Self {
        Self {
            name: name.to_string(),
            subject: subject.to_string(),
            deviation: None,
            tolerance,
            passed: false,
            note: Some(note),
        }
    }

    pub fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub scenario: String,
    pub observer: String,
    pub times: Vec<f64>,
    pub methods: Vec<Method>,
    pub rows: Vec<Row>,
    /// Column sums over the complete family, before pruning.
    pub sums: Vec<f64>,
    pub checks: Vec<Check>,
}

impl Table {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn build_scenario(cfg: &RunConfig) -> CliResult<Scenario> {
    Scenario::by_name(&cfg.scenario, cfg.c1, cfg.c2).map_err(|e| CliError::usage(e.to_string()))
}

/// Named observer, or the recorded one for memory scenarios, or the first.
pub fn select_observer<'a>(s: &'a Scenario, name: Option<&str>) -> CliResult<&'a Observer> {
    match name {
        Some(n) => s.observer(n).map_err(|e| CliError::usage(e.to_string())),
        None => match &s.memory {
            Some(m) => s.observer(&m.observer).map_err(CliError::from),
            None => Ok(s.default_observer()),
        },
    }
}

pub fn run(cfg: &RunConfig) -> CliResult<Table> {
    let scenario = build_scenario(cfg)?;
    let observer = select_observer(&scenario, cfg.observer.as_deref())?;
    let fam = &observer.family;
    let times = &observer.times;
    let seqs = if cfg.methods.is_empty() {
        Vec::new()
    } else {
        label_sequences(fam.len(), times.len(), observer.fixed_start)?
    };

    let mut columns = Vec::with_capacity(cfg.methods.len());
    let mut checks = Vec::new();
    let subject = observer.name.as_str();
    for &method in &cfg.methods {
        let column: Vec<f64> = match method {
            Method::Copenhagen => {
                let rows = scenario
                    .evaluator(observer)?
                    .copenhagen_all(observer.fixed_start)?;
                let col: Vec<f64> = rows.into_iter().map(|r| r.1).collect();
                checks.push(Check::measured(
                    "copenhagen-sum",
                    subject,
                    (col.iter().sum::<f64>() - 1.0).abs(),
                    COPENHAGEN_SUM_TOL,
                ));
                col
            }
            Method::Bell => {
                let (rows, diag) = scenario.bell_process(observer)?.history_probabilities(
                    times,
                    observer.fixed_start,
                    cfg.step,
                )?;
                let col: Vec<f64> = rows.into_iter().map(|r| r.1).collect();
                checks.push(Check::measured(
                    "bell-sum",
                    subject,
                    (col.iter().sum::<f64>() - 1.0).abs(),
                    BELL_SUM_TOL,
                ));
                checks.push(rate_check(
                    subject,
                    diag.min_rate,
                    diag.max_exclusivity_product,
                ));
                col
            }
            Method::Everett => {
                let ev = scenario.evaluator(observer)?;
                seqs.iter().map(|l| ev.everett_probability(l)).collect()
            }
            Method::BellMc => {
                let bp = scenario.bell_process(observer)?;
                let sampler = TrajectorySampler::new(&bp, times, cfg.step)?;
                let batch = sample_parallel(&sampler, cfg.seed, cfg.trajectories);
                let total: u64 = batch.counts.values().sum();
                checks.push(Check::measured(
                    "bell-mc-count",
                    subject,
                    total.abs_diff(cfg.trajectories) as f64,
                    0.0,
                ));
                seqs.iter().map(|l| batch.frequency(l)).collect()
            }
            Method::Memory => {
                let (col, dev) = memory_column(&scenario, observer, &seqs)?;
                checks.push(Check::measured(
                    "memory-vs-copenhagen",
                    subject,
                    dev,
                    MEMORY_TOL,
                ));
                col
            }
        };
        debug_assert_eq!(column.len(), seqs.len());
        columns.push(column);
    }

    let sums = columns.iter().map(|c| c.iter().sum()).collect();
    let mut rows: Vec<Row> = seqs
        .iter()
        .enumerate()
        .map(|(i, l)| Row {
            labels: l.iter().map(|&k| fam.label(k).to_string()).collect(),
            values: columns.iter().map(|c| c[i]).collect(),
        })
        .collect();
    if cfg.prune_zeros {
        rows.retain(|r| r.values.iter().any(|&v| v > PRUNE_FLOOR));
    }
    Ok(Table {
        scenario: scenario.name.clone(),
        observer: observer.name.clone(),
        times: times.clone(),
        methods: cfg.methods.clone(),
        rows,
        sums,
        checks,
    })
}

pub fn rate_check(subject: &str, min_rate: f64, max_product: f64) -> Check {
    let passed = min_rate >= 0.0 && max_product == 0.0;
    Check {
        name: "rates-positive-exclusive".into(),
        subject: subject.into(),
        deviation: Some(max_product.max(-min_rate.min(0.0)) + 0.0),
        tolerance: 0.0,
        passed,
        note: Some(format!(
            "min rate {}, max w_jk*w_kj {}",
            min_rate + 0.0,
            max_product + 0.0
        )),
    }
}

/// Same counts as [`TrajectorySampler::sample`], spread over the thread pool.
pub fn sample_parallel(sampler: &TrajectorySampler, seed: u64, n: u64) -> TrajectoryBatch {
    let step = sampler.step();
    (0..n.div_ceil(MC_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut batch = TrajectoryBatch::new(seed, step);
            for i in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(n) {
                batch.record(sampler.sample_one(seed, i));
            }
            batch
        })
        .reduce(
            || TrajectoryBatch::new(seed, step),
            |mut a, b| {
                a.merge(b);
                a
            },
        )
}

/// Final-time memory readout per history, plus its largest gap to the
/// memoryless Copenhagen probabilities. Scenarios without a memory get one
/// recording `observer` at its canonical times.
fn memory_column(
    scenario: &Scenario,
    observer: &Observer,
    seqs: &[Vec<usize>],
) -> CliResult<(Vec<f64>, f64)> {
    let extended;
    let with_memory = match &scenario.memory {
        Some(_) => scenario,
        None => {
            let plan = MemoryPlan::for_times(&scenario.schedule, &observer.times)?;
            extended = extend_with_memory(scenario, &observer.name, &plan)?;
            &extended
        }
    };
    let record = with_memory.memory.as_ref().expect("memory scenario");
    if !observer.answers_to(&record.observer) {
        return Err(CliError::usage(format!(
            "the memory of `{}` records observer `{}`, not `{}`",
            scenario.name, record.observer, observer.name
        )));
    }
    let base_family = &record.base.observer(&record.observer)?.family;
    let names = |l: &[usize]| -> Vec<String> {
        l.iter()
            .map(|&k| base_family.label(k).to_string())
            .collect()
    };
    let readout: Vec<(Vec<String>, f64)> = memory_readout(with_memory)?
        .into_iter()
        .map(|(l, p)| (names(&l), p))
        .collect();
    let column = seqs
        .iter()
        .map(|l| {
            let key: Vec<String> = l
                .iter()
                .map(|&k| observer.family.label(k).to_string())
                .collect();
            readout.iter().find(|r| r.0 == key).map_or(0.0, |r| r.1)
        })
        .collect();
    Ok((column, memory_matches_copenhagen(with_memory)?))
}
