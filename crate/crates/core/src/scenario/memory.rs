//! Write-once memories that record an observer's label at several times.
//!
//! Every base segment `[a, b]` is compressed into `[a, (a+b)/2]` at twice the
//! rate; the second half either writes the observer's current label into one
//! memory slot (a π/2 rotation on observer ⊗ memory) or idles. The memory basis
//! holds only the record strings that can carry amplitude.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{Observer, Scenario};
use crate::error::{Error, Result};
use crate::evolution::{rotation_hamiltonian, EvolutionSchedule, RotationPair, Segment, TIME_TOL};
use crate::history::{HistoryEvaluator, HistoryTable};
use crate::operator::{embed, Operator};
use crate::projector::ProjectorFamily;
use crate::space::{HilbertSpace, Subsystem};
use crate::state::{tensor_product, StateVector};
use crate::C64;

/// Symbol of an unwritten slot.
pub const UNWRITTEN: &str = "x";

/// Name of the memory subsystem and of its readout observer.
pub const MEMORY: &str = "M";

/// For each slot, the base segment in whose second half it is written, or
/// `None` for a slot holding the observer's label at the start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryPlan {
    pub slots: Vec<Option<usize>>,
}

impl MemoryPlan {
    /// Slot `i` records the label at `times[i]`, which must be the schedule
    /// start or a segment end.
    pub fn for_times(schedule: &EvolutionSchedule, times: &[f64]) -> Result<Self> {
        let slots = times
            .iter()
            .map(|&t| {
                if (t - schedule.start()).abs() <= TIME_TOL {
                    return Ok(None);
                }
                schedule
                    .segments()
                    .iter()
                    .position(|s| (s.t_end() - t).abs() <= TIME_TOL)
                    .map(Some)
                    .ok_or_else(|| Error::InvalidSchedule(format!("{t} is not a segment boundary")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { slots })
    }

    fn record_times(&self, schedule: &EvolutionSchedule) -> Vec<f64> {
        self.slots
            .iter()
            .map(|s| s.map_or(schedule.start(), |i| schedule.segments()[i].t_end()))
            .collect()
    }
}

/// What a memory-extended scenario remembers about its origin.
#[derive(Debug, Clone)]
pub struct MemoryRecord {
    pub base: Arc<Scenario>,
    /// Base observer whose labels are recorded.
    pub observer: String,
    pub plan: MemoryPlan,
    /// Slot contents of each memory basis state (`None` = unwritten).
    pub strings: Vec<Vec<Option<usize>>>,
}

fn format_string(family: &ProjectorFamily, slots: &[Option<usize>]) -> String {
    let parts: Vec<&str> = slots
        .iter()
        .map(|s| s.map_or(UNWRITTEN, |l| family.label(l)))
        .collect();
    if family.labels().iter().all(|l| l.chars().count() == 1) {
        parts.concat()
    } else {
        parts.join("|")
    }
}

/// Extends `base` with a memory recording `observer` according to `plan`.
pub fn extend_with_memory(base: &Scenario, observer: &str, plan: &MemoryPlan) -> Result<Scenario> {
    let obs = base.observer(observer)?;
    let family = &obs.family;
    let support: Vec<&str> = family
        .support()
        .ok_or_else(|| {
            Error::InvalidParameter(format!("observer `{}` is not a basis family", obs.name))
        })?
        .iter()
        .map(String::as_str)
        .collect();
    let n_slots = plan.slots.len();
    if n_slots == 0 {
        return Err(Error::InvalidParameter(
            "memory needs at least one slot".into(),
        ));
    }
    let segs = base.schedule.segments();
    if let Some(bad) = plan.slots.iter().flatten().find(|&&i| i >= segs.len()) {
        return Err(Error::InvalidParameter(format!(
            "segment {bad} does not exist"
        )));
    }
    // slots written in segment order, prewritten slots first
    let order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..n_slots).collect();
        idx.sort_by_key(|&i| plan.slots[i].map_or(0, |s| s + 1));
        idx
    };
    if order.iter().enumerate().any(|(pos, &i)| pos != i) {
        return Err(Error::InvalidParameter(
            "slots must be written in order".into(),
        ));
    }
    if plan
        .slots
        .windows(2)
        .any(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if a == b))
    {
        return Err(Error::InvalidParameter("one slot per segment".into()));
    }
    let prewritten = plan.slots.iter().take_while(|s| s.is_none()).count();
    if plan.slots[prewritten..].iter().any(Option::is_none) {
        return Err(Error::InvalidParameter(
            "prewritten slots must come first".into(),
        ));
    }

    // record strings that can carry amplitude: every nonzero Copenhagen prefix
    let record_times = plan.record_times(&base.schedule);
    let start_label = if prewritten > 0 {
        let w = family.born_weights(&base.initial_state)?;
        let l = w
            .iter()
            .position(|&p| (p - 1.0).abs() <= 1e-10)
            .ok_or_else(|| {
                Error::InvalidParameter("prewritten slots need a definite initial label".into())
            })?;
        Some(l)
    } else {
        None
    };
    let mut initial_string = vec![None; n_slots];
    initial_string[..prewritten].fill(start_label);
    let mut strings = vec![initial_string.clone()];
    for k in prewritten..n_slots {
        let times: Vec<f64> = start_label
            .map(|_| base.schedule.start())
            .into_iter()
            .chain(record_times[prewritten..=k].iter().copied())
            .collect();
        let ev = HistoryEvaluator::new(
            &base.schedule,
            family.clone(),
            base.initial_state.clone(),
            base.initial_time,
            &times,
        )?;
        for (labels, p) in ev.copenhagen_all(start_label)? {
            if p <= 1e-14 {
                continue;
            }
            let mut s = initial_string.clone();
            let recorded = &labels[usize::from(start_label.is_some())..];
            for (slot, &l) in (prewritten..).zip(recorded) {
                s[slot] = Some(l);
            }
            strings.push(s);
        }
    }
    let memory_labels: Vec<String> = strings.iter().map(|s| format_string(family, s)).collect();
    let memory = Subsystem::new(MEMORY, memory_labels.iter().map(String::as_str));
    let space = HilbertSpace::from_subsystems(
        base.space
            .subsystems()
            .iter()
            .cloned()
            .chain(core::iter::once(memory))
            .collect(),
    )?;
    let mem_space = space.restrict(&[MEMORY])?;

    // write Hamiltonians on support ⊗ M
    let mut write_local = support.clone();
    write_local.push(MEMORY);
    let local = space.restrict(&write_local)?;
    let support_space = space.restrict(&support)?;
    let write_op = |slot: usize| -> Result<Option<Operator>> {
        let mut pairs = Vec::new();
        for (mi, m) in strings.iter().enumerate() {
            let is_prefix =
                m[..slot].iter().all(Option::is_some) && m[slot..].iter().all(Option::is_none);
            if !is_prefix {
                continue;
            }
            // basis families number their labels in local basis order
            for b in 0..support_space.dim() {
                let label = b;
                let mut target = m.clone();
                target[slot] = Some(label);
                let Some(ti) = strings.iter().position(|s| *s == target) else {
                    continue;
                };
                let mut src = support_space.labels_of(b);
                let mut dst = src.clone();
                src.push(&memory_labels[mi]);
                dst.push(&memory_labels[ti]);
                pairs.push(RotationPair::quarter_turn(
                    StateVector::basis(local.clone(), &src)?,
                    StateVector::basis(local.clone(), &dst)?,
                ));
            }
        }
        if pairs.is_empty() {
            return Ok(None);
        }
        Ok(Some(rotation_hamiltonian(&pairs, 1.0)?))
    };

    let mut segments = Vec::with_capacity(2 * segs.len());
    for (i, seg) in segs.iter().enumerate() {
        let (a, b) = (seg.t_start(), seg.t_end());
        let mid = 0.5 * (a + b);
        let dynamics = embed(seg.hamiltonian(), &space)?.scaled(C64::new(b - a, 0.0) / (mid - a));
        segments.push(Segment::new(a, mid, dynamics)?);
        let write = match plan.slots.iter().position(|s| *s == Some(i)) {
            Some(slot) => write_op(slot)?
                .map(|h| embed(&h, &space))
                .transpose()?
                .map(|h| h.scaled(C64::new(1.0 / (b - mid), 0.0))),
            None => None,
        };
        segments.push(match write {
            Some(h) => Segment::new(mid, b, h)?,
            None => Segment::idle(space.clone(), mid, b)?,
        });
    }
    let schedule = EvolutionSchedule::new(segments)?;

    let initial_mem = StateVector::basis(mem_space, &[&memory_labels[0]])?;
    let initial = tensor_product(&space, &[&base.initial_state, &initial_mem])?;

    let mut observers = Vec::new();
    for o in &base.observers {
        let Some(sup) = o.family.support() else {
            continue;
        };
        let sup: Vec<&str> = sup.iter().map(String::as_str).collect();
        let fam = Arc::new(ProjectorFamily::from_joint_basis(space.clone(), &sup)?);
        observers.push(Observer {
            name: o.name.clone(),
            aliases: o.aliases.clone(),
            family: fam,
            times: o.times.clone(),
            fixed_start: o.fixed_start,
        });
    }
    let readout = Arc::new(ProjectorFamily::from_subsystem_basis(
        space.clone(),
        MEMORY,
    )?);
    observers.insert(
        0,
        Observer::new(MEMORY, readout, vec![schedule.end()], None)?,
    );

    Ok(Scenario {
        name: format!("{}+memory", base.name),
        space,
        schedule,
        initial_state: Arc::new(initial),
        initial_time: base.initial_time,
        observers,
        memory: Some(MemoryRecord {
            base: Arc::new(base.clone()),
            observer: obs.name.clone(),
            plan: plan.clone(),
            strings,
        }),
    })
}

/// `F2` with a five-slot memory. The first slot holds the ready label `0` from
/// the start, the second is written during `[0,1]`, and the last three during
/// `[2,3]`, `[3,4]` and `[4,5]`, so the memory reads `00×××` at `t = 1`.
pub fn build_fr_with_memory() -> Result<Scenario> {
    let base = super::build_frauchiger_renner()?;
    let plan = MemoryPlan {
        slots: vec![None, Some(0), Some(2), Some(3), Some(4)],
    };
    let mut s = extend_with_memory(&base, "F2", &plan)?;
    s.name = "fr-memory".into();
    Ok(s)
}

/// Final-time Born weight of every fully written record, keyed by the
/// recorded label sequence.
pub fn memory_readout(scenario: &Scenario) -> Result<HistoryTable> {
    let record = scenario.memory.as_ref().ok_or_else(|| {
        Error::InvalidParameter(format!("scenario `{}` has no memory", scenario.name))
    })?;
    let readout = scenario.observer(MEMORY)?;
    let weights = readout
        .family
        .born_weights(&scenario.state_at(scenario.schedule.end())?)?;
    Ok(record
        .strings
        .iter()
        .zip(weights)
        .filter(|(s, _)| s.iter().all(Option::is_some))
        .map(|(s, w)| (s.iter().map(|l| l.expect("complete")).collect(), w))
        .collect())
}

/// Largest gap between the memory readout and the Copenhagen probabilities of
/// the recorded observer's histories at its canonical times (slot `i` read as
/// the label at canonical time `i`).
pub fn memory_matches_copenhagen(scenario: &Scenario) -> Result<f64> {
    let record = scenario.memory.as_ref().ok_or_else(|| {
        Error::InvalidParameter(format!("scenario `{}` has no memory", scenario.name))
    })?;
    let base = &record.base;
    let obs = base.observer(&record.observer)?;
    if obs.times.len() != record.plan.slots.len() {
        return Err(Error::InvalidParameter(
            "slot count differs from the observer's time count".into(),
        ));
    }
    let readout = memory_readout(scenario)?;
    let copenhagen = base.evaluator(obs)?.copenhagen_all(obs.fixed_start)?;
    let mut dev: f64 = 0.0;
    for (labels, p) in &copenhagen {
        let m = readout
            .iter()
            .find(|(l, _)| l == labels)
            .map_or(0.0, |r| r.1);
        dev = dev.max((m - p).abs());
    }
    for (labels, m) in &readout {
        if !copenhagen.iter().any(|(l, _)| l == labels) {
            dev = dev.max(*m);
        }
    }
    Ok(dev)
}

impl Scenario {
    /// Memory basis labels, in basis order.
    pub fn memory_labels(&self) -> Option<Vec<String>> {
        self.space
            .subsystem(MEMORY)
            .ok()
            .map(|s| s.labels().iter().map(ToString::to_string).collect())
    }
}
