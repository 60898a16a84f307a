//! Prebuilt experiments: Brukner's Wigner's-friend model, the
//! Frauchiger–Renner universe, and memory-extended variants of either.

mod brukner;
mod frauchiger_renner;
mod memory;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

pub use brukner::build_brukner;
pub use frauchiger_renner::{
    build_frauchiger_renner, fr_conditional_preparation_segment, fr_space,
};
pub use memory::{
    build_fr_with_memory, extend_with_memory, memory_matches_copenhagen, memory_readout,
    MemoryPlan, MemoryRecord,
};

use crate::bell::BellProcess;
use crate::error::{Error, Result};
use crate::evolution::EvolutionSchedule;
use crate::history::HistoryEvaluator;
use crate::projector::ProjectorFamily;
use crate::space::HilbertSpace;
use crate::state::StateVector;

/// Names accepted by [`Scenario::by_name`].
pub const SCENARIO_NAMES: [&str; 3] = ["brukner", "frauchiger-renner", "fr-memory"];

/// An observer's experience family with its canonical history times.
#[derive(Debug, Clone)]
pub struct Observer {
    pub name: String,
    pub aliases: Vec<String>,
    pub family: Arc<ProjectorFamily>,
    pub times: Vec<f64>,
    /// Label pinned at the first canonical time, if any.
    pub fixed_start: Option<usize>,
}

impl Observer {
    pub fn new(
        name: &str,
        family: Arc<ProjectorFamily>,
        times: Vec<f64>,
        fixed_start: Option<&str>,
    ) -> Result<Self> {
        let fixed_start = fixed_start.map(|l| family.label_index(l)).transpose()?;
        Ok(Self {
            name: name.to_string(),
            aliases: Vec::new(),
            family,
            times,
            fixed_start,
        })
    }

    pub fn with_alias(mut self, alias: &str) -> Self {
        self.aliases.push(alias.to_string());
        self
    }

    pub fn answers_to(&self, name: &str) -> bool {
        self.name == name || self.aliases.iter().any(|a| a == name)
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub space: Arc<HilbertSpace>,
    pub schedule: EvolutionSchedule,
    pub initial_state: Arc<StateVector>,
    pub initial_time: f64,
    pub observers: Vec<Observer>,
    /// Set on memory-extended scenarios.
    pub memory: Option<MemoryRecord>,
}

impl Scenario {
    /// Builds a named scenario. Brukner coefficients are only used by `brukner`.
    pub fn by_name(name: &str, c1: crate::C64, c2: crate::C64) -> Result<Self> {
        match name {
            "brukner" => build_brukner(c1, c2),
            "frauchiger-renner" | "fr" => build_frauchiger_renner(),
            "fr-memory" => build_fr_with_memory(),
            other => Err(Error::InvalidParameter(format!(
                "unknown scenario `{other}` (expected one of {})",
                SCENARIO_NAMES.join(", ")
            ))),
        }
    }

    pub fn observer(&self, name: &str) -> Result<&Observer> {
        self.observers
            .iter()
            .find(|o| o.answers_to(name))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown observer `{name}` for scenario `{}`",
                    self.name
                ))
            })
    }

    pub fn default_observer(&self) -> &Observer {
        &self.observers[0]
    }

    /// Universal state at `t`.
    pub fn state_at(&self, t: f64) -> Result<StateVector> {
        self.schedule
            .evolve(&self.initial_state, self.initial_time, t)
    }

    pub fn evaluator(&self, observer: &Observer) -> Result<HistoryEvaluator> {
        HistoryEvaluator::new(
            &self.schedule,
            observer.family.clone(),
            self.initial_state.clone(),
            self.initial_time,
            &observer.times,
        )
    }

    pub fn bell_process(&self, observer: &Observer) -> Result<BellProcess> {
        BellProcess::new(
            self.schedule.clone(),
            observer.family.clone(),
            self.initial_state.clone(),
            self.initial_time,
        )
    }

    /// Checks the scenario invariants: normalized initial state, valid
    /// families, event times on segment boundaries.
    pub fn validate(&self) -> Result<()> {
        self.initial_state.ensure_normalized()?;
        let boundaries: Vec<f64> = core::iter::once(self.schedule.start())
            .chain(self.schedule.segments().iter().map(|s| s.t_end()))
            .collect();
        for o in &self.observers {
            let r = o.family.validate();
            if !r.passed() {
                return Err(Error::InvalidFamily(format!(
                    "observer `{}`: deviation {:e}",
                    o.name,
                    r.max_deviation()
                )));
            }
            for &t in &o.times {
                if !boundaries
                    .iter()
                    .any(|b| (b - t).abs() <= crate::evolution::TIME_TOL)
                {
                    return Err(Error::InvalidSchedule(format!(
                        "time {t} of `{}` is not a segment boundary",
                        o.name
                    )));
                }
            }
        }
        Ok(())
    }
}
