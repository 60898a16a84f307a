//! Dense reference computations used as test oracles. Nothing here goes
//! through the crate's propagators or projection code paths.

#![allow(dead_code)]

use histories_core::{EvolutionSchedule, Operator, ProjectorFamily, StateVector, C64};

/// Row-major square matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub n: usize,
    pub a: Vec<C64>,
}

impl Dense {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = C64::new(1.0, 0.0);
        }
        Self { n, a }
    }

    /// Reads an operator column by column through `apply`.
    pub fn of(op: &Operator) -> Self {
        let n = op.dim();
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        let mut e = vec![C64::new(0.0, 0.0); n];
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            op.apply_into(&e, &mut col);
            e[j] = C64::new(0.0, 0.0);
            for i in 0..n {
                a[i * n + j] = col[i];
            }
        }
        Self { n, a }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * n + k];
                if x == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    a[i * n + j] += x * o.a[k * n + j];
                }
            }
        }
        Self { n, a }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                a[j * n + i] = self.a[i * n + j].conj();
            }
        }
        Self { n, a }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            n: self.n,
            a: self.a.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            n: self.n,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.a[i * n + j] * x[j]).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.a
            .iter()
            .zip(&o.a)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn norm1(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.a[i * n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `exp(self)` by Taylor series after scaling to norm ≤ 1/2, then squaring.
    pub fn exp_taylor(&self) -> Self {
        let norm = self.norm1();
        let mut s = 0;
        while norm / f64::from(1u32 << s) > 0.5 {
            s += 1;
        }
        let x = self.scale(C64::new(1.0 / f64::from(1u32 << s), 0.0));
        let mut sum = Self::identity(self.n);
        let mut term = Self::identity(self.n);
        for k in 1..=30 {
            term = term.mul(&x).scale(C64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
            if term.a.iter().all(|z| z.norm() < 1e-18) {
                break;
            }
        }
        for _ in 0..s {
            sum = sum.mul(&sum);
        }
        sum
    }

    /// `exp(-iHt)`.
    pub fn propagator(h: &Self, t: f64) -> Self {
        h.scale(C64::new(0.0, -t)).exp_taylor()
    }
}

/// `U(t_b, t_a)` for a schedule, built from per-segment Taylor exponentials.
pub fn schedule_propagator(schedule: &EvolutionSchedule, t_a: f64, t_b: f64) -> Dense {
    let mut u = Dense::identity(schedule.space().dim());
    for seg in schedule.segments() {
        let lo = seg.t_start().max(t_a);
        let hi = seg.t_end().min(t_b);
        if hi > lo {
            let h = Dense::of(seg.hamiltonian());
            u = Dense::propagator(&h, hi - lo).mul(&u);
        }
    }
    u
}

/// Heisenberg-picture chain `Π̃ₙ…Π̃₁|Ψ₀⟩` with `Π̃ = U(t)† Π U(t)`, evaluated at `t0`.
pub struct Heisenberg {
    psi0: Vec<C64>,
    u: Vec<Dense>,
    proj: Vec<Dense>,
}

impl Heisenberg {
    pub fn new(
        schedule: &EvolutionSchedule,
        family: &ProjectorFamily,
        psi0: &StateVector,
        t0: f64,
        times: &[f64],
    ) -> Self {
        let mut u = Vec::new();
        let mut acc = Dense::identity(schedule.space().dim());
        let mut prev = t0;
        for &t in times {
            acc = schedule_propagator(schedule, prev, t).mul(&acc);
            u.push(acc.clone());
            prev = t;
        }
        Self {
            psi0: psi0.amplitudes().to_vec(),
            u,
            proj: (0..family.len())
                .map(|l| Dense::of(family.projector(l)))
                .collect(),
        }
    }

    pub fn history_vector(&self, labels: &[usize]) -> Vec<C64> {
        let mut k = self.psi0.clone();
        for (u, &l) in self.u.iter().zip(labels) {
            k = u.adjoint().apply(&self.proj[l].apply(&u.apply(&k)));
        }
        k
    }

    /// The same vector moved to the last event time.
    pub fn history_vector_at_end(&self, labels: &[usize]) -> Vec<C64> {
        self.u.last().unwrap().apply(&self.history_vector(labels))
    }

    pub fn probability(&self, labels: &[usize]) -> f64 {
        norm_sqr(&self.history_vector(labels))
    }
}

pub fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Joint `(F1,W1,W2)` histories at times 0, 1, 4, 5 with nonzero probability:
/// labels, Bell probability, Copenhagen probability.
pub const FR_JOINT_ROWS: [([&str; 4], f64, f64); 16] = [
    (
        ["(0,0,0)", "(h,0,0)", "(h,f,0)", "(h,f,f)"],
        3.0 / 20.0,
        1.0 / 24.0,
    ),
    (
        ["(0,0,0)", "(h,0,0)", "(h,f,0)", "(h,f,ok)"],
        1.0 / 60.0,
        1.0 / 24.0,
    ),
    (
        ["(0,0,0)", "(h,0,0)", "(h,ok,0)", "(h,ok,f)"],
        0.0,
        1.0 / 24.0,
    ),
    (
        ["(0,0,0)", "(h,0,0)", "(h,ok,0)", "(h,ok,ok)"],
        0.0,
        1.0 / 24.0,
    ),
    (
        ["(0,0,0)", "(h,0,0)", "(t,f,0)", "(t,f,f)"],
        3.0 / 20.0,
        1.0 / 24.0,
    ),
    (
        ["(0,0,0)", "(h,0,0)", "(t,f,0)", "(t,f,ok)"],
        1.0 / 60.0,
        1.0 / 24.0,
    ),
    (
        ["(0,0,0)", "(h,0,0)", "(t,ok,0)", "(t,ok,f)"],
        0.0,
        1.0 / 24.0,
    ),
    (
        ["(0,0,0)", "(h,0,0)", "(t,ok,0)", "(t,ok,ok)"],
        0.0,
        1.0 / 24.0,
    ),
    (
        ["(0,0,0)", "(t,0,0)", "(h,f,0)", "(h,f,f)"],
        9.0 / 40.0,
        1.0 / 6.0,
    ),
    (
        ["(0,0,0)", "(t,0,0)", "(h,f,0)", "(h,f,ok)"],
        1.0 / 40.0,
        0.0,
    ),
    (
        ["(0,0,0)", "(t,0,0)", "(h,ok,0)", "(h,ok,f)"],
        1.0 / 24.0,
        1.0 / 6.0,
    ),
    (
        ["(0,0,0)", "(t,0,0)", "(h,ok,0)", "(h,ok,ok)"],
        1.0 / 24.0,
        0.0,
    ),
    (
        ["(0,0,0)", "(t,0,0)", "(t,f,0)", "(t,f,f)"],
        9.0 / 40.0,
        1.0 / 6.0,
    ),
    (
        ["(0,0,0)", "(t,0,0)", "(t,f,0)", "(t,f,ok)"],
        1.0 / 40.0,
        0.0,
    ),
    (
        ["(0,0,0)", "(t,0,0)", "(t,ok,0)", "(t,ok,f)"],
        1.0 / 24.0,
        1.0 / 6.0,
    ),
    (
        ["(0,0,0)", "(t,0,0)", "(t,ok,0)", "(t,ok,ok)"],
        1.0 / 24.0,
        0.0,
    ),
];

/// `F2` histories at times 1..5 with nonzero probability: labels, Bell, Copenhagen.
pub const FR_F2_ROWS: [([&str; 5], f64, f64); 4] = [
    (["0", "0", "+", "+", "+"], 1.0 / 3.0, 1.0 / 6.0),
    (["0", "0", "+", "+", "-"], 0.0, 1.0 / 6.0),
    (["0", "0", "-", "-", "+"], 1.0 / 6.0, 1.0 / 3.0),
    (["0", "0", "-", "-", "-"], 1.0 / 2.0, 1.0 / 3.0),
];

pub fn label_indices(family: &ProjectorFamily, labels: &[&str]) -> Vec<usize> {
    labels
        .iter()
        .map(|l| family.label_index(l).unwrap())
        .collect()
}

/// Real Brukner coefficients with `|c1|² = p`.
pub fn brukner_coefficients(p: f64) -> (C64, C64) {
    (c(p.sqrt()), c((1.0 - p).sqrt()))
}
