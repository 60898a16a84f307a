//! Histories, their Copenhagen and naive Everett probabilities, and the
//! decoherence functional.
//!
//! History vectors are computed in the Schrödinger picture: evolve to the next
//! event time, project, repeat. `P_C(h) = ‖K(h)‖²`.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evolution::{EvolutionSchedule, TIME_TOL};
use crate::operator::Operator;
use crate::projector::ProjectorFamily;
use crate::state::{inner, StateVector};
use crate::C64;

/// Label sequences with their probabilities.
pub type HistoryTable = Vec<(Vec<usize>, f64)>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub label: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct History {
    family: Arc<ProjectorFamily>,
    initial_state: Arc<StateVector>,
    initial_time: f64,
    events: Vec<Event>,
}

impl History {
    /// `initial_state` is the universal state at `initial_time`; event times
    /// must be strictly increasing and not earlier than `initial_time`.
    pub fn new(
        family: Arc<ProjectorFamily>,
        initial_state: Arc<StateVector>,
        initial_time: f64,
        events: Vec<Event>,
    ) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::InvalidHistory("no events".into()));
        }
        if initial_state.space() != family.space() {
            return Err(Error::SpaceMismatch);
        }
        if events[0].time < initial_time - TIME_TOL {
            return Err(Error::InvalidHistory(format!(
                "first event at {} precedes the initial time {initial_time}",
                events[0].time
            )));
        }
        for w in events.windows(2) {
            if w[1].time <= w[0].time {
                return Err(Error::InvalidHistory(
                    "event times must increase strictly".into(),
                ));
            }
        }
        if let Some(e) = events.iter().find(|e| e.label >= family.len()) {
            return Err(Error::InvalidHistory(format!(
                "label index {} out of range",
                e.label
            )));
        }
        Ok(Self {
            family,
            initial_state,
            initial_time,
            events,
        })
    }

    /// Builds from label names.
    pub fn from_labels(
        family: Arc<ProjectorFamily>,
        initial_state: Arc<StateVector>,
        initial_time: f64,
        events: &[(&str, f64)],
    ) -> Result<Self> {
        let events = events
            .iter()
            .map(|&(l, time)| {
                Ok(Event {
                    label: family.label_index(l)?,
                    time,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(family, initial_state, initial_time, events)
    }

    pub fn family(&self) -> &Arc<ProjectorFamily> {
        &self.family
    }

    pub fn initial_state(&self) -> &Arc<StateVector> {
        &self.initial_state
    }

    pub fn initial_time(&self) -> f64 {
        self.initial_time
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn labels(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.label).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.time).collect()
    }

    pub fn label_names(&self) -> Vec<&str> {
        self.events
            .iter()
            .map(|e| self.family.label(e.label))
            .collect()
    }

    /// Label names joined by `sep`.
    pub fn display(&self, sep: &str) -> String {
        self.label_names().join(sep)
    }
}

/// `K(h)`, unnormalized.
pub fn history_vector(h: &History, schedule: &EvolutionSchedule) -> Result<StateVector> {
    let ev = HistoryEvaluator::new(
        schedule,
        h.family.clone(),
        h.initial_state.clone(),
        h.initial_time,
        &h.times(),
    )?;
    let k = ev.history_vector(&h.labels());
    Ok(StateVector::from_parts(schedule.space().clone(), k))
}

pub fn copenhagen_probability(h: &History, schedule: &EvolutionSchedule) -> Result<f64> {
    Ok(history_vector(h, schedule)?.norm_sqr())
}

/// Product of single-time Born weights along the unprojected evolution.
pub fn everett_probability(h: &History, schedule: &EvolutionSchedule) -> Result<f64> {
    let ev = HistoryEvaluator::new(
        schedule,
        h.family.clone(),
        h.initial_state.clone(),
        h.initial_time,
        &h.times(),
    )?;
    Ok(ev.everett_probability(&h.labels()))
}

/// `⟨K(h1)|K(h2)⟩`.
pub fn decoherence_overlap(
    h1: &History,
    h2: &History,
    schedule: &EvolutionSchedule,
) -> Result<C64> {
    comparable(h1, h2)?;
    let k1 = history_vector(h1, schedule)?;
    let k2 = history_vector(h2, schedule)?;
    k1.inner(&k2)
}

fn comparable(h1: &History, h2: &History) -> Result<()> {
    if h1.family != h2.family {
        return Err(Error::MismatchedHistories(
            "different projector families".into(),
        ));
    }
    if h1.initial_state != h2.initial_state || h1.initial_time != h2.initial_time {
        return Err(Error::MismatchedHistories(
            "different initial conditions".into(),
        ));
    }
    if h1.times() != h2.times() {
        return Err(Error::MismatchedHistories("different event times".into()));
    }
    Ok(())
}

/// Every label sequence over `times`, in lexicographic label order. With
/// `fixed_start`, the first event's label is pinned.
pub fn enumerate_histories(
    family: &Arc<ProjectorFamily>,
    initial_state: &Arc<StateVector>,
    initial_time: f64,
    times: &[f64],
    fixed_start: Option<usize>,
) -> Result<Vec<History>> {
    label_sequences(family.len(), times.len(), fixed_start)?
        .into_iter()
        .map(|labels| {
            History::new(
                family.clone(),
                initial_state.clone(),
                initial_time,
                labels
                    .into_iter()
                    .zip(times)
                    .map(|(label, &time)| Event { label, time })
                    .collect(),
            )
        })
        .collect()
}

/// Lexicographic label sequences of length `len` over `n_labels` symbols.
pub fn label_sequences(
    n_labels: usize,
    len: usize,
    fixed_start: Option<usize>,
) -> Result<Vec<Vec<usize>>> {
    if n_labels == 0 || len == 0 {
        return Err(Error::InvalidHistory("empty family or no times".into()));
    }
    if fixed_start.is_some_and(|s| s >= n_labels) {
        return Err(Error::InvalidHistory(
            "fixed start label out of range".into(),
        ));
    }
    let mut out = Vec::new();
    let mut cur = vec![0usize; len];
    if let Some(s) = fixed_start {
        cur[0] = s;
    }
    loop {
        out.push(cur.clone());
        let floor = usize::from(fixed_start.is_some());
        let mut i = len;
        loop {
            if i == floor {
                return Ok(out);
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < n_labels {
                break;
            }
            cur[i] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub tolerance: f64,
    pub max_off_diagonal: f64,
    /// Index pairs `(i, j)`, `i < j`, whose overlap exceeds the tolerance.
    pub violations: Vec<(usize, usize, C64)>,
}

impl ConsistencyReport {
    pub fn consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Off-diagonal decoherence functional over `histories`, which must share
/// family, initial condition and event times.
pub fn audit_consistency(
    histories: &[History],
    schedule: &EvolutionSchedule,
    tolerance: f64,
) -> Result<ConsistencyReport> {
    let mut report = ConsistencyReport {
        tolerance,
        max_off_diagonal: 0.0,
        violations: Vec::new(),
    };
    let Some(first) = histories.first() else {
        return Ok(report);
    };
    for h in &histories[1..] {
        comparable(first, h)?;
    }
    let ev = HistoryEvaluator::new(
        schedule,
        first.family.clone(),
        first.initial_state.clone(),
        first.initial_time,
        &first.times(),
    )?;
    let ks: Vec<Vec<C64>> = histories
        .iter()
        .map(|h| ev.history_vector(&h.labels()))
        .collect();
    for i in 0..ks.len() {
        for j in i + 1..ks.len() {
            let ov = inner(&ks[i], &ks[j]);
            report.max_off_diagonal = report.max_off_diagonal.max(ov.norm());
            if ov.norm() > tolerance {
                report.violations.push((i, j, ov));
            }
        }
    }
    Ok(report)
}

/// Evaluates many histories sharing one family, initial condition and time
/// list, reusing the interval propagators.
#[derive(Debug, Clone)]
pub struct HistoryEvaluator {
    family: Arc<ProjectorFamily>,
    initial: Vec<C64>,
    /// `steps[i]` carries the state from event `i - 1` (or the initial time) to event `i`.
    steps: Vec<Vec<Operator>>,
    born: Vec<Vec<f64>>,
}

impl HistoryEvaluator {
    pub fn new(
        schedule: &EvolutionSchedule,
        family: Arc<ProjectorFamily>,
        initial_state: Arc<StateVector>,
        initial_time: f64,
        times: &[f64],
    ) -> Result<Self> {
        if initial_state.space() != schedule.space() || family.space() != schedule.space() {
            return Err(Error::SpaceMismatch);
        }
        if times.is_empty() {
            return Err(Error::InvalidHistory("no event times".into()));
        }
        if times[0] < initial_time - TIME_TOL || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidHistory(
                "event times must increase from the initial time".into(),
            ));
        }
        let mut steps = Vec::with_capacity(times.len());
        let mut prev = initial_time;
        for &t in times {
            steps.push(schedule.propagators(prev, t)?);
            prev = t;
        }
        let mut ev = Self {
            family,
            initial: initial_state.amplitudes().to_vec(),
            steps,
            born: Vec::new(),
        };
        let mut x = ev.initial.clone();
        for i in 0..times.len() {
            x = ev.advance(i, &x);
            ev.born.push(ev.family.born_weights_slice(&x));
        }
        Ok(ev)
    }

    pub fn family(&self) -> &Arc<ProjectorFamily> {
        &self.family
    }

    pub fn n_times(&self) -> usize {
        self.steps.len()
    }

    fn advance(&self, i: usize, x: &[C64]) -> Vec<C64> {
        let mut cur = x.to_vec();
        let mut buf = vec![C64::new(0.0, 0.0); x.len()];
        for u in &self.steps[i] {
            u.apply_into(&cur, &mut buf);
            core::mem::swap(&mut cur, &mut buf);
        }
        cur
    }

    fn project(&self, label: usize, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); x.len()];
        self.family.project_into(label, x, &mut out);
        out
    }

    pub fn history_vector(&self, labels: &[usize]) -> Vec<C64> {
        assert_eq!(labels.len(), self.steps.len(), "one label per event time");
        let mut x = self.initial.clone();
        for (i, &l) in labels.iter().enumerate() {
            x = self.project(l, &self.advance(i, &x));
        }
        x
    }

    pub fn copenhagen_probability(&self, labels: &[usize]) -> f64 {
        self.history_vector(labels)
            .iter()
            .map(|z| z.norm_sqr())
            .sum()
    }

    pub fn everett_probability(&self, labels: &[usize]) -> f64 {
        labels.iter().zip(&self.born).map(|(&l, w)| w[l]).product()
    }

    /// Born weights of every label at each event time, unprojected evolution.
    pub fn born_weights(&self) -> &[Vec<f64>] {
        &self.born
    }

    /// Copenhagen probabilities of all label sequences in lexicographic order.
    /// Subtrees whose history vector vanishes exactly are not propagated.
    pub fn copenhagen_all(&self, fixed_start: Option<usize>) -> Result<HistoryTable> {
        let seqs = label_sequences(self.family.len(), self.steps.len(), fixed_start)?;
        let mut probs = Vec::with_capacity(seqs.len());
        let mut prefix: Vec<usize> = Vec::new();
        self.walk(0, &self.initial, fixed_start, &mut prefix, &mut probs);
        debug_assert_eq!(probs.len(), seqs.len());
        Ok(seqs.into_iter().zip(probs).collect())
    }

    fn walk(
        &self,
        level: usize,
        x: &[C64],
        fixed: Option<usize>,
        prefix: &mut Vec<usize>,
        out: &mut Vec<f64>,
    ) {
        let labels: Vec<usize> = match (level, fixed) {
            (0, Some(s)) => vec![s],
            _ => (0..self.family.len()).collect(),
        };
        let remaining: usize = self.family.len().pow((self.steps.len() - level - 1) as u32);
        let zero = x.iter().all(|z| z.re == 0.0 && z.im == 0.0);
        let evolved = if zero {
            Vec::new()
        } else {
            self.advance(level, x)
        };
        for l in labels {
            if zero {
                out.extend(core::iter::repeat_n(0.0, remaining));
                continue;
            }
            let k = self.project(l, &evolved);
            prefix.push(l);
            if level + 1 == self.steps.len() {
                out.push(k.iter().map(|z| z.norm_sqr()).sum());
            } else {
                self.walk(level + 1, &k, fixed, prefix, out);
            }
            prefix.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequences_are_lexicographic() {
        let s = label_sequences(3, 3, Some(0)).unwrap();
        assert_eq!(s.len(), 9);
        assert_eq!(s[0], [0, 0, 0]);
        assert_eq!(s[5], [0, 1, 2]);
        assert_eq!(s[8], [0, 2, 2]);
        assert_eq!(label_sequences(2, 1, None).unwrap(), [[0], [1]]);
    }

    #[test]
    fn fixed_start_must_exist() {
        assert!(label_sequences(2, 2, Some(2)).is_err());
    }
}
