//! Piecewise-constant Hamiltonian evolution.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::operator::{Block, Operator};
use crate::space::HilbertSpace;
use crate::sparse::SparseVec;
use crate::state::StateVector;
use crate::{C64, VALIDATION_TOL};

/// Slack when matching times against segment boundaries.
pub const TIME_TOL: f64 = 1e-12;

/// `source` is rotated into `target` through `angle` radians.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationPair {
    pub source: StateVector,
    pub target: StateVector,
    pub angle: f64,
}

impl RotationPair {
    pub fn new(source: StateVector, target: StateVector, angle: f64) -> Self {
        Self {
            source,
            target,
            angle,
        }
    }

    /// A full π/2 turn: `source` ends exactly on `target`.
    pub fn quarter_turn(source: StateVector, target: StateVector) -> Self {
        Self::new(source, target, core::f64::consts::FRAC_PI_2)
    }
}

/// `H = Σ i·a·(|t⟩⟨s| - |s⟩⟨t|)` with `a = angle / duration` per pair, so that
/// `exp(-iHτ)|s⟩ = cos(aτ)|s⟩ + sin(aτ)|t⟩`.
///
/// All sources and targets must be normalized and mutually orthogonal.
pub fn rotation_hamiltonian(pairs: &[RotationPair], duration: f64) -> Result<Operator> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let first = pairs
        .first()
        .ok_or_else(|| Error::InvalidParameter("no rotation pairs".into()))?;
    let space = first.source.space().clone();
    let mut blocks = Vec::with_capacity(pairs.len());
    for p in pairs {
        if *p.source.space() != space || *p.target.space() != space {
            return Err(Error::SpaceMismatch);
        }
        p.source.ensure_normalized()?;
        p.target.ensure_normalized()?;
        if !p.angle.is_finite() {
            return Err(Error::InvalidParameter("non-finite rotation angle".into()));
        }
        let a = p.angle / duration;
        let mut m = Matrix::zeros(2);
        m[(0, 1)] = C64::new(0.0, -a);
        m[(1, 0)] = C64::new(0.0, a);
        blocks.push(Block::new(
            vec![
                SparseVec::from_dense(p.source.amplitudes()),
                SparseVec::from_dense(p.target.amplitudes()),
            ],
            m,
        )?);
    }
    Operator::block_sum(space, C64::new(0.0, 0.0), blocks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    t_start: f64,
    t_end: f64,
    hamiltonian: Operator,
}

impl Segment {
    pub fn new(t_start: f64, t_end: f64, hamiltonian: Operator) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
            return Err(Error::InvalidSchedule(format!(
                "empty or reversed segment [{t_start}, {t_end}]"
            )));
        }
        let dev = hamiltonian.hermiticity_deviation();
        if dev > VALIDATION_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self {
            t_start,
            t_end,
            hamiltonian,
        })
    }

    /// `H = 0` over `[t_start, t_end]`.
    pub fn idle(space: Arc<HilbertSpace>, t_start: f64, t_end: f64) -> Result<Self> {
        Self::new(t_start, t_end, Operator::zero(space))
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start - TIME_TOL && t <= self.t_end + TIME_TOL
    }

    /// `exp(-iH(t_b - t_a))`.
    pub fn propagator(&self, t_a: f64, t_b: f64) -> Result<Operator> {
        for t in [t_a, t_b] {
            if !self.contains(t) {
                return Err(Error::TimeOutOfRange {
                    time: t,
                    start: self.t_start,
                    end: self.t_end,
                });
            }
        }
        if t_b < t_a {
            return Err(Error::InvalidParameter(format!(
                "t_b = {t_b} precedes t_a = {t_a}"
            )));
        }
        Ok(self.hamiltonian.unitary_exp(t_b - t_a))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSchedule {
    segments: Vec<Segment>,
}

impl EvolutionSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidSchedule("no segments".into()))?;
        for w in segments.windows(2) {
            if (w[1].t_start - w[0].t_end).abs() > TIME_TOL {
                return Err(Error::InvalidSchedule(format!(
                    "gap or overlap between {} and {}",
                    w[0].t_end, w[1].t_start
                )));
            }
            if w[1].hamiltonian.space() != first.hamiltonian.space() {
                return Err(Error::SpaceMismatch);
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        self.segments[0].hamiltonian.space()
    }

    pub fn start(&self) -> f64 {
        self.segments[0].t_start
    }

    pub fn end(&self) -> f64 {
        self.segments[self.segments.len() - 1].t_end
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start() - TIME_TOL && t <= self.end() + TIME_TOL
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange {
                time: t,
                start: self.start(),
                end: self.end(),
            })
        }
    }

    /// Pieces `(segment index, from, to)` of `[t_a, t_b]`, skipping empty ones.
    pub fn pieces(&self, t_a: f64, t_b: f64) -> Result<Vec<(usize, f64, f64)>> {
        self.check_time(t_a)?;
        self.check_time(t_b)?;
        if t_b < t_a {
            return Err(Error::InvalidParameter(format!(
                "t_b = {t_b} precedes t_a = {t_a}"
            )));
        }
        let mut out = Vec::new();
        for (i, s) in self.segments.iter().enumerate() {
            let lo = t_a.max(s.t_start);
            let hi = t_b.min(s.t_end);
            if hi - lo > TIME_TOL {
                out.push((i, lo, hi));
            }
        }
        Ok(out)
    }

    /// Propagators for each piece of `[t_a, t_b]`, in time order.
    pub fn propagators(&self, t_a: f64, t_b: f64) -> Result<Vec<Operator>> {
        self.pieces(t_a, t_b)?
            .into_iter()
            .map(|(i, lo, hi)| self.segments[i].propagator(lo, hi))
            .collect()
    }

    pub fn evolve(&self, state: &StateVector, t_a: f64, t_b: f64) -> Result<StateVector> {
        if state.space() != self.space() {
            return Err(Error::SpaceMismatch);
        }
        let mut x = state.amplitudes().to_vec();
        let mut buf = vec![C64::new(0.0, 0.0); x.len()];
        for u in self.propagators(t_a, t_b)? {
            u.apply_into(&x, &mut buf);
            core::mem::swap(&mut x, &mut buf);
        }
        Ok(StateVector::from_parts(self.space().clone(), x))
    }

    /// States at each of the sorted `times`, starting from `state` at `t0`.
    pub fn trajectory(
        &self,
        state: &StateVector,
        t0: f64,
        times: &[f64],
    ) -> Result<Vec<StateVector>> {
        let mut out = Vec::with_capacity(times.len());
        let (mut cur, mut t) = (state.clone(), t0);
        for &tn in times {
            cur = self.evolve(&cur, t, tn)?;
            t = tn;
            out.push(cur.clone());
        }
        Ok(out)
    }
}

/// Free-function form of [`Segment::propagator`].
pub fn propagator(segment: &Segment, t_a: f64, t_b: f64) -> Result<Operator> {
    segment.propagator(t_a, t_b)
}

/// Free-function form of [`EvolutionSchedule::evolve`].
pub fn evolve(
    state: &StateVector,
    schedule: &EvolutionSchedule,
    t_a: f64,
    t_b: f64,
) -> Result<StateVector> {
    schedule.evolve(state, t_a, t_b)
}
