use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::space::HilbertSpace;
use crate::{C64, NORM_TOL};

/// Dense amplitude vector over a product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: Arc<HilbertSpace>,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(space: Arc<HilbertSpace>, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: amplitudes.len(),
            });
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        Ok(Self { space, amplitudes })
    }

    pub(crate) fn from_parts(space: Arc<HilbertSpace>, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(space.dim(), amplitudes.len());
        Self { space, amplitudes }
    }

    pub fn zero(space: Arc<HilbertSpace>) -> Self {
        let n = space.dim();
        Self::from_parts(space, vec![C64::new(0.0, 0.0); n])
    }

    /// Product-basis state named by one label per subsystem.
    pub fn basis(space: Arc<HilbertSpace>, labels: &[&str]) -> Result<Self> {
        let idx = space.index_of(labels)?;
        let mut s = Self::zero(space);
        s.amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(s)
    }

    /// Superposition `Σ c |labels⟩` of product-basis states.
    pub fn superposition(space: Arc<HilbertSpace>, terms: &[(C64, &[&str])]) -> Result<Self> {
        let mut s = Self::zero(space);
        for (c, labels) in terms {
            let idx = s.space.index_of(labels)?;
            s.amplitudes[idx] += c;
        }
        Ok(s)
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, labels: &[&str]) -> Result<C64> {
        Ok(self.amplitudes[self.space.index_of(labels)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized(self.norm_sqr()))
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = libm::sqrt(self.norm_sqr());
        if n == 0.0 {
            return Err(Error::LinearlyDependent);
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self::from_parts(
            self.space.clone(),
            self.amplitudes.iter().map(|a| a * c).collect(),
        )
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, C64::new(-1.0, 0.0))
    }

    fn combine(&self, other: &Self, sign: C64) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self::from_parts(
            self.space.clone(),
            self.amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + sign * b)
                .collect(),
        ))
    }

    /// Largest amplitude-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Distance to `other` after removing the best global phase.
    pub fn distance_up_to_phase(&self, other: &Self) -> Result<f64> {
        let ov = self.inner(other)?;
        let phase = if ov.norm() > 0.0 {
            ov / ov.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        self.scaled(phase).max_abs_diff(other)
    }

    /// |<self|other>|^2 for normalized inputs.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Product of states on disjoint subsystem sets that together cover `target`.
///
/// Factor subsystems may appear in any order relative to `target`; the result
/// uses the row-major product basis of `target`.
pub fn tensor_product(target: &Arc<HilbertSpace>, factors: &[&StateVector]) -> Result<StateVector> {
    let mut covered = vec![false; target.subsystems().len()];
    let mut placements = Vec::with_capacity(factors.len());
    for f in factors {
        for s in f.space.subsystems() {
            let p = target.position(s.name())?;
            if covered[p] {
                return Err(Error::BadPartition(format!(
                    "subsystem `{}` appears twice",
                    s.name()
                )));
            }
            covered[p] = true;
        }
        placements.push(target.placement(&f.space)?);
    }
    if let Some(p) = covered.iter().position(|c| !c) {
        return Err(Error::BadPartition(format!(
            "subsystem `{}` not covered",
            target.subsystems()[p].name()
        )));
    }
    let mut out = vec![C64::new(1.0, 0.0)];
    let mut offsets = vec![0usize];
    for (f, pl) in factors.iter().zip(&placements) {
        let mut next = Vec::with_capacity(out.len() * f.amplitudes.len());
        let mut next_off = Vec::with_capacity(next.capacity());
        for (a, off) in out.iter().zip(&offsets) {
            for (l, b) in f.amplitudes.iter().enumerate() {
                next.push(a * b);
                next_off.push(off + pl.local_offset(l));
            }
        }
        out = next;
        offsets = next_off;
    }
    let mut amps = vec![C64::new(0.0, 0.0); target.dim()];
    for (a, off) in out.into_iter().zip(offsets) {
        amps[off] = a;
    }
    Ok(StateVector::from_parts(target.clone(), amps))
}
