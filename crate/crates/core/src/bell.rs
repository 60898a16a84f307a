//! Bell's jump process between the experience subspaces of one observer.
//!
//! Rates follow `w_jk = max(0, 2 Im⟨Ψ|Π_k H Π_j|Ψ⟩) / ⟨Ψ|Π_j|Ψ⟩`. Each unordered
//! pair shares a single current `J`, assigned to `j→k` when positive and to
//! `k→j` otherwise, so `w_jk · w_kj = 0` holds exactly.
//!
//! Kernels integrate the master equation with classical RK4 on a fixed step in
//! a graded parameter `s`, where a segment of length `L` is traversed as
//! `t = t₀ + L(s - sin(2πs)/2π)`. The grid clusters at segment ends, where an
//! occupancy emptied by a measurement drives its exit rate to infinity.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evolution::{EvolutionSchedule, TIME_TOL};
use crate::history::{label_sequences, History, HistoryTable};
use crate::operator::Operator;
use crate::projector::ProjectorFamily;
use crate::state::{inner, StateVector};
use crate::{C64, OCCUPANCY_FLOOR};

/// Negative kernel entries down to this value are clamped to zero.
pub const KERNEL_CLAMP: f64 = 1e-12;
/// Allowed `|row sum - 1|` of a kernel.
pub const ROW_SUM_TOL: f64 = 1e-8;
/// Largest allowed `exit rate × step` in the sampler.
pub const MAX_RATE_STEP: f64 = 0.1;
/// Labels below this Born weight are ignored by the sampler's step guard.
pub const GUARD_OCCUPANCY_FLOOR: f64 = 1e-4;
/// Default integration and sampling step.
pub const DEFAULT_STEP: f64 = 1e-4;
/// Currents within this multiple of the summed term magnitudes are rounding
/// residue and count as zero.
pub const CURRENT_NOISE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    time: f64,
    n: usize,
    rates: Vec<f64>,
}

impl RateMatrix {
    fn zeros(n: usize, time: f64) -> Self {
        Self {
            time,
            n,
            rates: vec![0.0; n * n],
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rate(&self, j: usize, k: usize) -> f64 {
        self.rates[j * self.n + k]
    }

    /// Total rate out of `j`.
    pub fn exit_rate(&self, j: usize) -> f64 {
        self.rates[j * self.n..(j + 1) * self.n].iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rates.iter().all(|&w| w == 0.0)
    }

    pub fn min_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max_{j≠k} w_jk · w_kj`.
    pub fn max_exclusivity_product(&self) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..self.n {
            for k in j + 1..self.n {
                m = m.max(self.rate(j, k) * self.rate(k, j));
            }
        }
        m
    }

    /// Nonzero entries as `(j, k, w_jk)`.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rates
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(move |(i, &w)| (i / self.n, i % self.n, w))
    }
}

/// Rates for a normalized `state` under `hamiltonian`, stamped with `time`.
pub fn bell_rates(
    state: &StateVector,
    hamiltonian: &Operator,
    family: &ProjectorFamily,
    time: f64,
) -> Result<RateMatrix> {
    state.ensure_normalized()?;
    if state.space() != family.space() || hamiltonian.space() != family.space() {
        return Err(Error::SpaceMismatch);
    }
    let report = family.validate();
    if !report.passed() {
        return Err(Error::InvalidFamily(alloc::format!(
            "deviation {:e}",
            report.max_deviation()
        )));
    }
    let engine = RateEngine::new(hamiltonian, family);
    let born = family.born_weights_slice(state.amplitudes());
    let mut out = RateMatrix::zeros(family.len(), time);
    engine.rates(family, state.amplitudes(), &born, &mut out)?;
    Ok(out)
}

/// Precomputed form of one Hamiltonian for repeated rate evaluation.
#[derive(Debug, Clone)]
enum RateEngine {
    /// Entries `(a, b, label(a), label(b), H_ab)` with `label(a) > label(b)`.
    Diagonal(Vec<(usize, usize, usize, usize, C64)>),
    General(Operator),
}

impl RateEngine {
    fn new(h: &Operator, family: &ProjectorFamily) -> Self {
        match family.basis_labels() {
            Some(map) => Self::Diagonal(
                h.to_csr()
                    .triplets()
                    .filter(|&(a, b, _)| map[a] > map[b])
                    .map(|(a, b, v)| (a, b, map[a], map[b], v))
                    .collect(),
            ),
            None => Self::General(h.clone()),
        }
    }

    /// `M[k][j] = ⟨x|Π_k H Π_j|x⟩` for `k > j`, stored at `k * n + j`, with the
    /// size of the perturbation a rounding error in `x` would cause.
    fn currents(&self, family: &ProjectorFamily, x: &[C64], m: &mut [C64], scale: &mut [f64]) {
        let n = family.len();
        m.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        scale.iter_mut().for_each(|z| *z = 0.0);
        match self {
            Self::Diagonal(entries) => {
                for &(a, b, la, lb, v) in entries {
                    let term = x[a].conj() * v * x[b];
                    m[la * n + lb] += term;
                    scale[la * n + lb] += v.norm() * (x[a].norm() + x[b].norm());
                }
            }
            Self::General(h) => {
                let dim = x.len();
                let mut phi = vec![vec![C64::new(0.0, 0.0); dim]; n];
                for (j, p) in phi.iter_mut().enumerate() {
                    family.project_into(j, x, p);
                }
                let norms: Vec<f64> = phi.iter().map(|p| libm::sqrt(inner(p, p).re)).collect();
                let mut hphi = vec![vec![C64::new(0.0, 0.0); dim]; n];
                for (p, hp) in phi.iter().zip(hphi.iter_mut()) {
                    h.apply_into(p, hp);
                }
                let hnorms: Vec<f64> = hphi.iter().map(|p| libm::sqrt(inner(p, p).re)).collect();
                for j in 0..n {
                    for k in j + 1..n {
                        m[k * n + j] = inner(&phi[k], &hphi[j]);
                        scale[k * n + j] = norms[k] * hnorms[j] + norms[j] * hnorms[k];
                    }
                }
            }
        }
    }

    fn rates(
        &self,
        family: &ProjectorFamily,
        x: &[C64],
        born: &[f64],
        out: &mut RateMatrix,
    ) -> Result<()> {
        let n = family.len();
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        let mut scale = vec![0.0; n * n];
        self.currents(family, x, &mut m, &mut scale);
        out.rates.iter_mut().for_each(|w| *w = 0.0);
        for k in 0..n {
            for j in 0..k {
                let current = 2.0 * m[k * n + j].im;
                // cancellation residue is not a current
                if libm::fabs(current) <= CURRENT_NOISE * scale[k * n + j] {
                    continue;
                }
                let (from, to, flux) = if current > 0.0 {
                    (j, k, current)
                } else {
                    (k, j, -current)
                };
                if born[from] <= OCCUPANCY_FLOOR {
                    continue;
                }
                let w = flux / born[from];
                if !w.is_finite() {
                    return Err(Error::NonFiniteRate(out.time));
                }
                out.rates[from * n + to] = w;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    t_a: f64,
    t_b: f64,
    n: usize,
    entries: Vec<f64>,
}

impl TransitionKernel {
    pub fn identity(n: usize, t: f64) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self {
            t_a: t,
            t_b: t,
            n,
            entries,
        }
    }

    /// Clamps small negative entries and checks that rows are distributions.
    pub fn from_rows(t_a: f64, t_b: f64, n: usize, mut entries: Vec<f64>) -> Result<Self> {
        assert_eq!(entries.len(), n * n);
        for (i, e) in entries.iter_mut().enumerate() {
            if !e.is_finite() {
                return Err(Error::NonFiniteRate(t_b));
            }
            if *e < 0.0 {
                if *e < -KERNEL_CLAMP {
                    return Err(Error::NegativeKernelEntry {
                        row: i / n,
                        col: i % n,
                        value: *e,
                    });
                }
                *e = 0.0;
            }
        }
        for row in 0..n {
            let sum: f64 = entries[row * n..(row + 1) * n].iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::KernelNotStochastic { row, sum });
            }
        }
        Ok(Self {
            t_a,
            t_b,
            n,
            entries,
        })
    }

    pub fn t_a(&self) -> f64 {
        self.t_a
    }

    pub fn t_b(&self) -> f64 {
        self.t_b
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `P(k at t_b | j at t_a)`.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[j * self.n + k]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.entries[j * self.n..(j + 1) * self.n]
    }

    /// `self · later`, the kernel over `[self.t_a, later.t_b]`.
    pub fn then(&self, later: &TransitionKernel) -> TransitionKernel {
        assert_eq!(self.n, later.n);
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for m in 0..n {
                let a = self.get(i, m);
                if a == 0.0 {
                    continue;
                }
                for k in 0..n {
                    entries[i * n + k] += a * later.get(m, k);
                }
            }
        }
        TransitionKernel {
            t_a: self.t_a,
            t_b: later.t_b,
            n,
            entries,
        }
    }

    pub fn max_abs_diff(&self, other: &TransitionKernel) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Observed properties of the rates over an integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelDiagnostics {
    pub rate_evaluations: usize,
    pub min_rate: f64,
    pub max_exclusivity_product: f64,
}

impl Default for KernelDiagnostics {
    fn default() -> Self {
        Self {
            rate_evaluations: 0,
            min_rate: f64::INFINITY,
            max_exclusivity_product: 0.0,
        }
    }
}

impl KernelDiagnostics {
    fn record(&mut self, r: &RateMatrix) {
        self.rate_evaluations += 1;
        self.min_rate = self.min_rate.min(r.min_rate());
        self.max_exclusivity_product = self
            .max_exclusivity_product
            .max(r.max_exclusivity_product());
    }

    pub fn merge(&mut self, other: &KernelDiagnostics) {
        self.rate_evaluations += other.rate_evaluations;
        self.min_rate = self.min_rate.min(other.min_rate);
        self.max_exclusivity_product = self
            .max_exclusivity_product
            .max(other.max_exclusivity_product);
    }

    pub fn positive(&self) -> bool {
        self.rate_evaluations == 0 || self.min_rate >= 0.0
    }

    pub fn exclusive(&self) -> bool {
        self.max_exclusivity_product == 0.0
    }
}

/// Grid parameter → fraction of the segment elapsed.
fn graded(s: f64) -> f64 {
    s - libm::sin(2.0 * PI * s) / (2.0 * PI)
}

fn graded_inverse(f: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if graded(mid) < f {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The jump process of one observer family in one scenario.
#[derive(Debug, Clone)]
pub struct BellProcess {
    schedule: EvolutionSchedule,
    family: Arc<ProjectorFamily>,
    initial_state: Arc<StateVector>,
    initial_time: f64,
    engines: Vec<RateEngine>,
}

impl BellProcess {
    pub fn new(
        schedule: EvolutionSchedule,
        family: Arc<ProjectorFamily>,
        initial_state: Arc<StateVector>,
        initial_time: f64,
    ) -> Result<Self> {
        initial_state.ensure_normalized()?;
        if initial_state.space() != schedule.space() || family.space() != schedule.space() {
            return Err(Error::SpaceMismatch);
        }
        schedule.check_time(initial_time)?;
        let engines = schedule
            .segments()
            .iter()
            .map(|s| RateEngine::new(s.hamiltonian(), &family))
            .collect();
        Ok(Self {
            schedule,
            family,
            initial_state,
            initial_time,
            engines,
        })
    }

    pub fn family(&self) -> &Arc<ProjectorFamily> {
        &self.family
    }

    pub fn schedule(&self) -> &EvolutionSchedule {
        &self.schedule
    }

    pub fn state_at(&self, t: f64) -> Result<StateVector> {
        if t < self.initial_time - TIME_TOL {
            return Err(Error::TimeOutOfRange {
                time: t,
                start: self.initial_time,
                end: self.schedule.end(),
            });
        }
        self.schedule
            .evolve(&self.initial_state, self.initial_time, t)
    }

    pub fn born_weights_at(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self
            .family
            .born_weights_slice(self.state_at(t)?.amplitudes()))
    }

    fn segment_at(&self, t: f64) -> usize {
        let segs = self.schedule.segments();
        segs.iter()
            .position(|s| t < s.t_end() - TIME_TOL)
            .unwrap_or(segs.len() - 1)
    }

    /// Instantaneous rates at `t`, using the segment that starts at `t` on a boundary.
    pub fn rates_at(&self, t: f64) -> Result<RateMatrix> {
        let x = self.state_at(t)?;
        let seg = self.segment_at(t);
        let born = self.family.born_weights_slice(x.amplitudes());
        let mut out = RateMatrix::zeros(self.family.len(), t);
        self.engines[seg].rates(&self.family, x.amplitudes(), &born, &mut out)?;
        Ok(out)
    }

    fn rates_from_state(&self, seg: usize, t: f64, x: &[C64], out: &mut RateMatrix) -> Result<()> {
        out.time = t;
        let born = self.family.born_weights_slice(x);
        self.engines[seg].rates(&self.family, x, &born, out)
    }

    /// Advances the row-distributions `x` (`rows × n`, row-major) from `t_a` to `t_b`.
    fn propagate(
        &self,
        t_a: f64,
        t_b: f64,
        step: f64,
        x: &mut [f64],
        diag: &mut KernelDiagnostics,
    ) -> Result<()> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidStep(step));
        }
        let n = self.family.len();
        let rows = x.len() / n;
        let mut psi_seg_start: Option<(usize, Vec<C64>)> = None;
        for (seg_idx, lo, hi) in self.schedule.pieces(t_a, t_b)? {
            let seg = &self.schedule.segments()[seg_idx];
            let (s0, len) = (seg.t_start(), seg.duration());
            let base = match psi_seg_start.take() {
                Some((i, v)) if i == seg_idx => v,
                _ => self.state_at(s0)?.into_amplitudes(),
            };
            let s_lo = graded_inverse(((lo - s0) / len).clamp(0.0, 1.0));
            let s_hi = graded_inverse(((hi - s0) / len).clamp(0.0, 1.0));
            let n_steps = libm::ceil(((s_hi - s_lo) * len / step) - 1e-9).max(1.0) as usize;
            let ds = (s_hi - s_lo) / n_steps as f64;

            let h_op = seg.hamiltonian();
            let mut psi = vec![C64::new(0.0, 0.0); base.len()];
            let at = |s: f64, psi: &mut Vec<C64>, out: &mut RateMatrix| -> Result<f64> {
                let tau = graded(s) * len;
                h_op.apply_exp_into(tau, &base, psi);
                self.rates_from_state(seg_idx, s0 + tau, psi, out)?;
                Ok(len * (1.0 - libm::cos(2.0 * PI * s)))
            };

            let mut r0 = RateMatrix::zeros(n, lo);
            let mut r_mid = r0.clone();
            let mut r1 = r0.clone();
            let mut d0 = at(s_lo, &mut psi, &mut r0)?;
            diag.record(&r0);
            let mut k = [
                vec![0.0; x.len()],
                vec![0.0; x.len()],
                vec![0.0; x.len()],
                vec![0.0; x.len()],
            ];
            let mut tmp = vec![0.0; x.len()];
            for i in 0..n_steps {
                let s = s_lo + i as f64 * ds;
                let d_mid = at(s + 0.5 * ds, &mut psi, &mut r_mid)?;
                let d1 = at(s + ds, &mut psi, &mut r1)?;
                diag.record(&r_mid);
                diag.record(&r1);

                derivative(x, rows, n, &r0, d0, &mut k[0]);
                axpy(x, 0.5 * ds, &k[0], &mut tmp);
                derivative(&tmp, rows, n, &r_mid, d_mid, &mut k[1]);
                axpy(x, 0.5 * ds, &k[1], &mut tmp);
                derivative(&tmp, rows, n, &r_mid, d_mid, &mut k[2]);
                axpy(x, ds, &k[2], &mut tmp);
                derivative(&tmp, rows, n, &r1, d1, &mut k[3]);
                for (j, xj) in x.iter_mut().enumerate() {
                    *xj += ds / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
                }
                core::mem::swap(&mut r0, &mut r1);
                d0 = d1;
            }
            if hi >= seg.t_end() - TIME_TOL && seg_idx + 1 < self.schedule.segments().len() {
                h_op.apply_exp_into(len, &base, &mut psi);
                psi_seg_start = Some((seg_idx + 1, psi));
            }
        }
        Ok(())
    }

    /// Kernel over `[t_a, t_b]` with its rate diagnostics.
    pub fn kernel_with_diagnostics(
        &self,
        t_a: f64,
        t_b: f64,
        step: f64,
    ) -> Result<(TransitionKernel, KernelDiagnostics)> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidStep(step));
        }
        let n = self.family.len();
        let mut x = TransitionKernel::identity(n, t_a).entries;
        let mut diag = KernelDiagnostics::default();
        self.propagate(t_a, t_b, step, &mut x, &mut diag)?;
        Ok((TransitionKernel::from_rows(t_a, t_b, n, x)?, diag))
    }

    pub fn kernel(&self, t_a: f64, t_b: f64, step: f64) -> Result<TransitionKernel> {
        Ok(self.kernel_with_diagnostics(t_a, t_b, step)?.0)
    }

    /// Kernels between consecutive `times`.
    pub fn kernels(
        &self,
        times: &[f64],
        step: f64,
    ) -> Result<(Vec<TransitionKernel>, KernelDiagnostics)> {
        let mut diag = KernelDiagnostics::default();
        let mut out = Vec::with_capacity(times.len().saturating_sub(1));
        for w in times.windows(2) {
            let (k, d) = self.kernel_with_diagnostics(w[0], w[1], step)?;
            diag.merge(&d);
            out.push(k);
        }
        Ok((out, diag))
    }

    /// `P_B(h)`: Born weight of the first event times the chained kernel entries.
    pub fn history_probability(&self, h: &History, step: f64) -> Result<f64> {
        if h.family() != &self.family
            || **h.initial_state() != *self.initial_state
            || h.initial_time() != self.initial_time
        {
            return Err(Error::MismatchedHistories(
                "history does not belong to this process".into(),
            ));
        }
        let times = h.times();
        let (kernels, _) = self.kernels(&times, step)?;
        Ok(chain(
            &self.born_weights_at(times[0])?,
            &kernels,
            &h.labels(),
        ))
    }

    /// Bell probabilities of all label sequences over `times`, in lexicographic order.
    pub fn history_probabilities(
        &self,
        times: &[f64],
        fixed_start: Option<usize>,
        step: f64,
    ) -> Result<(HistoryTable, KernelDiagnostics)> {
        let (kernels, diag) = self.kernels(times, step)?;
        let born = self.born_weights_at(times[0])?;
        let rows = label_sequences(self.family.len(), times.len(), fixed_start)?
            .into_iter()
            .map(|labels| {
                let p = chain(&born, &kernels, &labels);
                (labels, p)
            })
            .collect();
        Ok((rows, diag))
    }

    /// Integrates the master equation from the Born distribution at `times[0]`
    /// and returns the largest deviation from the Born weights at `times`.
    pub fn born_marginal_check(&self, times: &[f64], step: f64) -> Result<f64> {
        let Some(&t0) = times.first() else {
            return Ok(0.0);
        };
        let mut p = self.born_weights_at(t0)?;
        let mut diag = KernelDiagnostics::default();
        let mut dev: f64 = 0.0;
        let mut t = t0;
        for &tn in times {
            self.propagate(t, tn, step, &mut p, &mut diag)?;
            t = tn;
            let born = self.born_weights_at(tn)?;
            dev = p
                .iter()
                .zip(&born)
                .map(|(a, b)| (a - b).abs())
                .fold(dev, f64::max);
        }
        Ok(dev)
    }
}

fn chain(born: &[f64], kernels: &[TransitionKernel], labels: &[usize]) -> f64 {
    let mut p = born[labels[0]];
    for (k, w) in kernels.iter().zip(labels.windows(2)) {
        if p == 0.0 {
            break;
        }
        p *= k.get(w[0], w[1]);
    }
    p
}

/// `out = (x · A) · dt/ds` for generator `A` built from `rates`.
fn derivative(x: &[f64], rows: usize, n: usize, rates: &RateMatrix, dt_ds: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    if dt_ds == 0.0 {
        return;
    }
    for (j, k, w) in rates.nonzero() {
        let w = w * dt_ds;
        for r in 0..rows {
            let flow = x[r * n + j] * w;
            out[r * n + k] += flow;
            out[r * n + j] -= flow;
        }
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64], out: &mut [f64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + a * yi;
    }
}

/// Counts of sampled label sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryBatch {
    pub seed: u64,
    pub n_trajectories: u64,
    pub step_bits: u64,
    pub counts: BTreeMap<Vec<usize>, u64>,
}

impl TrajectoryBatch {
    pub fn new(seed: u64, step: f64) -> Self {
        Self {
            seed,
            n_trajectories: 0,
            step_bits: step.to_bits(),
            counts: BTreeMap::new(),
        }
    }

    pub fn step(&self) -> f64 {
        f64::from_bits(self.step_bits)
    }

    pub fn record(&mut self, labels: Vec<usize>) {
        *self.counts.entry(labels).or_insert(0) += 1;
        self.n_trajectories += 1;
    }

    /// Merges batches drawn with the same seed and step.
    pub fn merge(&mut self, other: TrajectoryBatch) {
        for (k, c) in other.counts {
            *self.counts.entry(k).or_insert(0) += c;
        }
        self.n_trajectories += other.n_trajectories;
    }

    pub fn count(&self, labels: &[usize]) -> u64 {
        self.counts.get(labels).copied().unwrap_or(0)
    }

    pub fn frequency(&self, labels: &[usize]) -> f64 {
        if self.n_trajectories == 0 {
            0.0
        } else {
            self.count(labels) as f64 / self.n_trajectories as f64
        }
    }
}

/// Monte Carlo sampler for the jump process on a fixed time grid.
///
/// Each step jumps out of label `j` with probability `min(w_j h, 1)` (rates at
/// the step midpoint) and lands on `k` with probability `∝ w_jk`. Survival runs
/// are drawn in one go by inverting the cumulative hazard `Σ -ln(1 - p)`, which
/// gives exactly the per-step law at a fraction of the random draws.
#[derive(Debug, Clone)]
pub struct TrajectorySampler {
    n_labels: usize,
    step: f64,
    initial: Vec<f64>,
    /// Step index at which each event time falls.
    event_steps: Vec<usize>,
    /// `hazard[j][m]` = cumulative hazard of label `j` before step `m`.
    hazard: Vec<Vec<f64>>,
    /// Rates of step `m` live in `jumps[offsets[m]..offsets[m + 1]]`.
    offsets: Vec<usize>,
    jumps: Vec<(usize, usize, f64)>,
    max_rate_step: f64,
}

impl TrajectorySampler {
    /// Builds the grid between the sorted `event_times`. Fails with
    /// [`Error::StepTooLarge`] when an occupied label (Born weight ≥ 1e-4) has
    /// `exit rate × step > 0.1` anywhere.
    pub fn new(process: &BellProcess, event_times: &[f64], step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidStep(step));
        }
        if event_times.is_empty() || event_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidHistory(
                "event times must be nonempty and increasing".into(),
            ));
        }
        let n = process.family.len();
        let initial = process.born_weights_at(event_times[0])?;
        let mut hazard = vec![vec![0.0]; n];
        let mut offsets = vec![0usize];
        let mut jumps = Vec::new();
        let mut event_steps = vec![0usize];
        let mut max_rate_step: f64 = 0.0;
        let mut rates = RateMatrix::zeros(n, 0.0);
        let mut psi = vec![C64::new(0.0, 0.0); process.initial_state.amplitudes().len()];
        let mut steps = 0usize;
        for w in event_times.windows(2) {
            for (seg_idx, lo, hi) in process.schedule.pieces(w[0], w[1])? {
                let seg = &process.schedule.segments()[seg_idx];
                let m = libm::ceil((hi - lo) / step - 1e-9).max(1.0) as usize;
                let h = (hi - lo) / m as f64;
                let start = process.state_at(lo)?.into_amplitudes();
                for i in 0..m {
                    let dt = (i as f64 + 0.5) * h;
                    seg.hamiltonian().apply_exp_into(dt, &start, &mut psi);
                    let born = process.family.born_weights_slice(&psi);
                    rates.time = lo + dt;
                    process.engines[seg_idx].rates(&process.family, &psi, &born, &mut rates)?;
                    for j in 0..n {
                        let exit = rates.exit_rate(j) * h;
                        if born[j] >= GUARD_OCCUPANCY_FLOOR {
                            max_rate_step = max_rate_step.max(exit);
                        }
                        let p = exit.min(1.0 - 1e-15);
                        let last = *hazard[j].last().expect("seeded");
                        hazard[j].push(last - libm::log1p(-p));
                    }
                    jumps.extend(rates.nonzero());
                    offsets.push(jumps.len());
                }
                steps += m;
            }
            event_steps.push(steps);
        }
        if max_rate_step > MAX_RATE_STEP {
            return Err(Error::StepTooLarge(max_rate_step));
        }
        Ok(Self {
            n_labels: n,
            step,
            initial,
            event_steps,
            hazard,
            offsets,
            jumps,
            max_rate_step,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Largest `exit rate × step` seen over occupied labels.
    pub fn max_rate_step(&self) -> f64 {
        self.max_rate_step
    }

    pub fn n_steps(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Labels at each event time for trajectory `index`; the random stream
    /// depends only on `(seed, index)`.
    pub fn sample_one(&self, seed: u64, index: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut label = pick(&self.initial, rng.random::<f64>());
        let mut out = Vec::with_capacity(self.event_steps.len());
        let mut ev = 0;
        let mut m = 0usize;
        let total = self.n_steps();
        loop {
            let target = -libm::log1p(-rng.random::<f64>());
            let cum = &self.hazard[label];
            let base = cum[m];
            // first step m' >= m whose cumulative hazard reaches the target
            let jump = m + cum[m + 1..].partition_point(|&c| c - base < target);
            while ev < self.event_steps.len() && self.event_steps[ev] <= jump.min(total) {
                out.push(label);
                ev += 1;
            }
            if jump >= total {
                break;
            }
            let choices = &self.jumps[self.offsets[jump]..self.offsets[jump + 1]];
            let weights: Vec<f64> = choices
                .iter()
                .map(|&(j, _, w)| if j == label { w } else { 0.0 })
                .collect();
            let k = pick(&weights, rng.random::<f64>());
            label = choices[k].1;
            m = jump + 1;
        }
        debug_assert_eq!(out.len(), self.event_steps.len());
        out
    }

    /// Trajectories `0..n` in index order.
    pub fn sample(&self, seed: u64, n: u64) -> TrajectoryBatch {
        let mut batch = TrajectoryBatch::new(seed, self.step);
        for i in 0..n {
            batch.record(self.sample_one(seed, i));
        }
        batch
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }
}

/// Index drawn from unnormalized `weights` with uniform `u ∈ [0, 1)`.
fn pick(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::Segment;
    use crate::space::HilbertSpace;

    fn idle_process() -> BellProcess {
        let sp = HilbertSpace::new(&[("A", &["0", "1"])]).unwrap();
        let sched =
            EvolutionSchedule::new(vec![Segment::idle(sp.clone(), 0.0, 1.0).unwrap()]).unwrap();
        let fam = Arc::new(ProjectorFamily::from_subsystem_basis(sp.clone(), "A").unwrap());
        let r = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi = StateVector::superposition(sp, &[(r, &["0"]), (r, &["1"])]).unwrap();
        BellProcess::new(sched, fam, Arc::new(psi), 0.0).unwrap()
    }

    #[test]
    fn zero_hamiltonian_has_zero_rates_and_identity_kernel() {
        let p = idle_process();
        assert!(p.rates_at(0.5).unwrap().is_zero());
        let k = p.kernel(0.0, 1.0, 1e-2).unwrap();
        assert_eq!(
            k,
            TransitionKernel::from_rows(0.0, 1.0, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap()
        );
        assert_eq!(p.born_marginal_check(&[0.0, 0.5, 1.0], 1e-2).unwrap(), 0.0);
    }

    #[test]
    fn zero_length_kernel_is_identity() {
        let p = idle_process();
        let k = p.kernel(0.3, 0.3, 1e-3).unwrap();
        assert_eq!(k.get(0, 0), 1.0);
        assert_eq!(k.get(1, 0), 0.0);
    }

    #[test]
    fn kernel_rows_checked() {
        assert!(matches!(
            TransitionKernel::from_rows(0.0, 1.0, 2, vec![0.5, 0.4, 0.0, 1.0]),
            Err(Error::KernelNotStochastic { row: 0, .. })
        ));
        let k =
            TransitionKernel::from_rows(0.0, 1.0, 2, vec![1.0 + 5e-13, -5e-13, 0.0, 1.0]).unwrap();
        assert_eq!(k.get(0, 1), 0.0);
        assert!(TransitionKernel::from_rows(0.0, 1.0, 2, vec![1.1, -0.1, 0.0, 1.0]).is_err());
    }

    #[test]
    fn bad_step_rejected() {
        let p = idle_process();
        assert_eq!(p.kernel(0.0, 1.0, 0.0), Err(Error::InvalidStep(0.0)));
        assert!(TrajectorySampler::new(&p, &[0.0, 1.0], -1.0).is_err());
    }

    #[test]
    fn empty_batch() {
        let p = idle_process();
        let s = TrajectorySampler::new(&p, &[0.0, 1.0], 0.1).unwrap();
        let b = s.sample(7, 0);
        assert_eq!(b.n_trajectories, 0);
        assert!(b.counts.is_empty());
    }

    #[test]
    fn graded_grid_is_monotone_and_invertible() {
        // the map is cubic at both ends, so invert in the image, not the preimage
        let mut prev = -1.0;
        for i in 0..=20 {
            let s = i as f64 / 20.0;
            let f = graded(s);
            assert!(f > prev);
            prev = f;
            assert!((graded(graded_inverse(f)) - f).abs() < 1e-15);
            assert!((graded_inverse(f) - s).abs() < 1e-5);
        }
        assert_eq!(graded(0.0), 0.0);
        assert!((graded(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pick_respects_weights() {
        assert_eq!(pick(&[0.0, 1.0, 3.0], 0.0), 1);
        assert_eq!(pick(&[0.0, 1.0, 3.0], 0.3), 2);
        assert_eq!(pick(&[2.0, 0.0], 0.999), 0);
    }
}
