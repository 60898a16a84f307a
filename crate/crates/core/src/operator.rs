//! Linear operators over a labeled product space.
//!
//! Two representations: a dense matrix (only for `dim <= DENSE_LIMIT`) and a
//! block sum `c·I + Σ_b V_b M_b V_b†`, where each `V_b` has orthonormal sparse
//! columns and distinct blocks span mutually orthogonal subspaces. Embedded local
//! operators, rotation Hamiltonians, their propagators and projectors are all
//! block sums, which keeps application cost proportional to the support.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{hermitian_2x2_propagator, Matrix};
use crate::space::HilbertSpace;
use crate::sparse::{Csr, SparseVec};
use crate::state::StateVector;
use crate::{C64, DENSE_LIMIT, VALIDATION_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    basis: Vec<SparseVec>,
    matrix: Matrix,
}

impl Block {
    pub fn new(basis: Vec<SparseVec>, matrix: Matrix) -> Result<Self> {
        if basis.len() != matrix.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                actual: matrix.dim(),
            });
        }
        Ok(Self { basis, matrix })
    }

    pub fn basis(&self) -> &[SparseVec] {
        &self.basis
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Dense(Matrix),
    BlockSum { scalar: C64, blocks: Vec<Block> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: Arc<HilbertSpace>,
    repr: Representation,
}

impl Operator {
    pub fn dense(space: Arc<HilbertSpace>, matrix: Matrix) -> Result<Self> {
        if matrix.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: matrix.dim(),
            });
        }
        if matrix.dim() > DENSE_LIMIT {
            return Err(Error::TooLargeForDense(matrix.dim()));
        }
        Ok(Self {
            space,
            repr: Representation::Dense(matrix),
        })
    }

    /// Block-sum operator; checks that the block bases are jointly orthonormal.
    pub fn block_sum(space: Arc<HilbertSpace>, scalar: C64, blocks: Vec<Block>) -> Result<Self> {
        let dim = space.dim();
        let all: Vec<&SparseVec> = blocks.iter().flat_map(|b| b.basis.iter()).collect();
        for (i, v) in all.iter().enumerate() {
            if v.entries().iter().any(|&(k, _)| k >= dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.entries().last().map_or(0, |e| e.0 + 1),
                });
            }
            if (v.norm_sqr() - 1.0).abs() > VALIDATION_TOL {
                return Err(Error::NotNormalized(v.norm_sqr()));
            }
            for w in &all[..i] {
                let ov = v.dot(w).norm();
                if ov > VALIDATION_TOL {
                    return Err(Error::NotOrthogonal(ov));
                }
            }
        }
        Ok(Self::block_sum_unchecked(space, scalar, blocks))
    }

    pub(crate) fn block_sum_unchecked(
        space: Arc<HilbertSpace>,
        scalar: C64,
        blocks: Vec<Block>,
    ) -> Self {
        Self {
            space,
            repr: Representation::BlockSum { scalar, blocks },
        }
    }

    pub fn identity(space: Arc<HilbertSpace>) -> Self {
        Self::block_sum_unchecked(space, C64::new(1.0, 0.0), Vec::new())
    }

    pub fn zero(space: Arc<HilbertSpace>) -> Self {
        Self::block_sum_unchecked(space, C64::new(0.0, 0.0), Vec::new())
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Representation::Dense(m) => m.max_abs() == 0.0,
            Representation::BlockSum { scalar, blocks } => {
                scalar.norm() == 0.0 && blocks.iter().all(|b| b.matrix.max_abs() == 0.0)
            }
        }
    }

    pub fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim());
        match &self.repr {
            Representation::Dense(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = m.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
            Representation::BlockSum { scalar, blocks } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = scalar * xi;
                }
                let mut coeffs = Vec::new();
                for b in blocks {
                    coeffs.clear();
                    coeffs.extend(b.basis.iter().map(|v| v.dot_dense(x)));
                    if coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
                        continue;
                    }
                    for (i, v) in b.basis.iter().enumerate() {
                        let row = b.matrix.row(i);
                        let y: C64 = row.iter().zip(&coeffs).map(|(m, c)| m * c).sum();
                        v.axpy_into(y, out);
                    }
                }
            }
        }
    }

    pub fn apply_slice(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); x.len()];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if **state.space() != *self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(StateVector::from_parts(
            self.space.clone(),
            self.apply_slice(state.amplitudes()),
        ))
    }

    /// `<ψ|A|ψ>`.
    pub fn expectation(&self, state: &StateVector) -> Result<C64> {
        let a = self.apply(state)?;
        state.inner(&a)
    }

    pub fn to_dense(&self) -> Result<Matrix> {
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::TooLargeForDense(n));
        }
        match &self.repr {
            Representation::Dense(m) => Ok(m.clone()),
            Representation::BlockSum { .. } => {
                let mut m = Matrix::zeros(n);
                for (i, j, v) in self.to_csr().triplets() {
                    m[(i, j)] = v;
                }
                Ok(m)
            }
        }
    }

    /// Sparse form; entries with modulus ≤ 1e-15 are dropped.
    pub fn to_csr(&self) -> Csr {
        let n = self.dim();
        match &self.repr {
            Representation::Dense(m) => Csr::from_triplets(
                n,
                (0..n).flat_map(|i| (0..n).map(move |j| (i, j, m[(i, j)]))),
                1e-15,
            ),
            Representation::BlockSum { scalar, blocks } => {
                let mut trip = Vec::new();
                if scalar.norm() > 0.0 {
                    trip.extend((0..n).map(|i| (i, i, *scalar)));
                }
                for b in blocks {
                    for (p, vp) in b.basis.iter().enumerate() {
                        for (q, vq) in b.basis.iter().enumerate() {
                            let m = b.matrix[(p, q)];
                            if m.re == 0.0 && m.im == 0.0 {
                                continue;
                            }
                            for &(i, x) in vp.entries() {
                                for &(j, y) in vq.entries() {
                                    trip.push((i, j, m * x * y.conj()));
                                }
                            }
                        }
                    }
                }
                Csr::from_triplets(n, trip, 1e-15)
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let repr = match &self.repr {
            Representation::Dense(m) => Representation::Dense(m.adjoint()),
            Representation::BlockSum { scalar, blocks } => Representation::BlockSum {
                scalar: scalar.conj(),
                blocks: blocks
                    .iter()
                    .map(|b| Block {
                        basis: b.basis.clone(),
                        matrix: b.matrix.adjoint(),
                    })
                    .collect(),
            },
        };
        Self {
            space: self.space.clone(),
            repr,
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        let repr = match &self.repr {
            Representation::Dense(m) => Representation::Dense(m.scale(c)),
            Representation::BlockSum { scalar, blocks } => Representation::BlockSum {
                scalar: scalar * c,
                blocks: blocks
                    .iter()
                    .map(|b| Block {
                        basis: b.basis.clone(),
                        matrix: b.matrix.scale(c),
                    })
                    .collect(),
            },
        };
        Self {
            space: self.space.clone(),
            repr,
        }
    }

    /// Dense product `self · other`.
    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        let prod = self.to_csr().mul(&other.to_csr());
        let mut m = Matrix::zeros(self.dim());
        if self.dim() > DENSE_LIMIT {
            return Err(Error::TooLargeForDense(self.dim()));
        }
        for (i, j, v) in prod.triplets() {
            m[(i, j)] = v;
        }
        Operator::dense(self.space.clone(), m)
    }

    /// Max-entry deviation of `A - A†`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let a = self.to_csr();
        a.add_scaled(C64::new(-1.0, 0.0), &a.adjoint()).max_abs()
    }

    /// exp(-i·self·t) for Hermitian `self`.
    ///
    /// Block sums are exponentiated block by block (2x2 blocks in closed form);
    /// dense operators use scaling-and-squaring.
    pub fn unitary_exp(&self, t: f64) -> Operator {
        match &self.repr {
            Representation::Dense(m) => Self {
                space: self.space.clone(),
                repr: Representation::Dense(m.scale(C64::new(0.0, -t)).expm()),
            },
            Representation::BlockSum { scalar, blocks } => {
                let phase = (C64::new(0.0, -t) * scalar).exp();
                let blocks = blocks
                    .iter()
                    .map(|b| {
                        let u = if b.matrix.dim() == 2 {
                            hermitian_2x2_propagator(&b.matrix, t)
                        } else {
                            b.matrix.scale(C64::new(0.0, -t)).expm()
                        };
                        let shifted = u.sub(&Matrix::identity(b.matrix.dim())).scale(phase);
                        Block {
                            basis: b.basis.clone(),
                            matrix: shifted,
                        }
                    })
                    .collect();
                Self::block_sum_unchecked(self.space.clone(), phase, blocks)
            }
        }
    }

    /// `out = exp(-i·self·t) x` without building the propagator. Dense
    /// operators fall back to [`Operator::unitary_exp`].
    pub fn apply_exp_into(&self, t: f64, x: &[C64], out: &mut [C64]) {
        let Representation::BlockSum { scalar, blocks } = &self.repr else {
            self.unitary_exp(t).apply_into(x, out);
            return;
        };
        let phase = (C64::new(0.0, -t) * scalar).exp();
        for (o, xi) in out.iter_mut().zip(x) {
            *o = phase * xi;
        }
        let mut coeffs = Vec::new();
        for b in blocks {
            coeffs.clear();
            coeffs.extend(b.basis.iter().map(|v| v.dot_dense(x)));
            if coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
                continue;
            }
            let n = b.matrix.dim();
            let u = if n == 2 {
                hermitian_2x2_propagator(&b.matrix, t)
            } else {
                b.matrix.scale(C64::new(0.0, -t)).expm()
            };
            for (i, v) in b.basis.iter().enumerate() {
                let y: C64 = u
                    .row(i)
                    .iter()
                    .zip(&coeffs)
                    .map(|(m, c)| m * c)
                    .sum::<C64>()
                    - coeffs[i];
                v.axpy_into(phase * y, out);
            }
        }
    }

    /// Membership mask when this is a diagonal 0/1 projector in the product basis.
    pub fn diagonal_projector_mask(&self) -> Option<Vec<bool>> {
        let mut mask = vec![false; self.dim()];
        for (i, j, v) in self.to_csr().triplets() {
            if i != j || (v - C64::new(1.0, 0.0)).norm() > VALIDATION_TOL {
                return None;
            }
            mask[i] = true;
        }
        Some(mask)
    }
}

/// `local ⊗ I` on the remaining subsystems of `space`, in `space`'s ordering.
pub fn embed(local: &Operator, space: &Arc<HilbertSpace>) -> Result<Operator> {
    let placement = space.placement(local.space())?;
    let (scalar, local_blocks): (C64, Vec<Block>) = match &local.repr {
        Representation::Dense(m) => (
            C64::new(0.0, 0.0),
            vec![Block {
                basis: (0..m.dim()).map(SparseVec::unit).collect(),
                matrix: m.clone(),
            }],
        ),
        Representation::BlockSum { scalar, blocks } => (*scalar, blocks.clone()),
    };
    let mut blocks = Vec::with_capacity(local_blocks.len() * placement.complement_dim());
    for rest in 0..placement.complement_dim() {
        let off = placement.complement_offset(rest);
        for b in &local_blocks {
            blocks.push(Block {
                basis: b
                    .basis
                    .iter()
                    .map(|v| v.map_indices(|l| placement.local_offset(l) + off))
                    .collect(),
                matrix: b.matrix.clone(),
            });
        }
    }
    Ok(Operator::block_sum_unchecked(space.clone(), scalar, blocks))
}

/// Product of operators on disjoint subsystem sets covering `target`, as a dense operator.
pub fn tensor_product_operators(
    target: &Arc<HilbertSpace>,
    factors: &[&Operator],
) -> Result<Operator> {
    let mut seen = vec![false; target.subsystems().len()];
    for f in factors {
        for s in f.space().subsystems() {
            let p = target.position(s.name())?;
            if seen[p] {
                return Err(Error::BadPartition(alloc::format!(
                    "subsystem `{}` appears twice",
                    s.name()
                )));
            }
            seen[p] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::BadPartition(
            "factors do not cover the target space".into(),
        ));
    }
    if target.dim() > DENSE_LIMIT {
        return Err(Error::TooLargeForDense(target.dim()));
    }
    let mut acc = Csr::identity(target.dim());
    for f in factors {
        acc = acc.mul(&embed(f, target)?.to_csr());
    }
    let mut m = Matrix::zeros(target.dim());
    for (i, j, v) in acc.triplets() {
        m[(i, j)] = v;
    }
    Operator::dense(target.clone(), m)
}

/// Orthogonal projector onto the span of `vectors` (Gram–Schmidt, two passes).
pub fn projector_from_states(vectors: &[StateVector]) -> Result<Operator> {
    let first = vectors.first().ok_or(Error::LinearlyDependent)?;
    let space = first.space().clone();
    let mut ortho: Vec<Vec<C64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        if **v.space() != *space {
            return Err(Error::SpaceMismatch);
        }
        let original = libm::sqrt(v.norm_sqr());
        if original == 0.0 {
            return Err(Error::LinearlyDependent);
        }
        let mut w: Vec<C64> = v.amplitudes().to_vec();
        for _ in 0..2 {
            for q in &ortho {
                let c = crate::state::inner(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let n = libm::sqrt(w.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if n <= 1e-10 * original {
            return Err(Error::LinearlyDependent);
        }
        for wi in &mut w {
            *wi /= n;
        }
        ortho.push(w);
    }
    let m = ortho.len();
    let basis = ortho.iter().map(|w| SparseVec::from_dense(w)).collect();
    Ok(Operator::block_sum_unchecked(
        space,
        C64::new(0.0, 0.0),
        vec![Block {
            basis,
            matrix: Matrix::identity(m),
        }],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::tensor_product;

    fn fr_like() -> Arc<HilbertSpace> {
        HilbertSpace::new(&[
            ("C", &["head", "tail"]),
            ("S", &["up", "down"]),
            ("F1", &["0", "h", "t"]),
            ("F2", &["0", "+", "-"]),
            ("W1", &["0", "ok", "f"]),
            ("W2", &["0", "ok", "f"]),
        ])
        .unwrap()
    }

    #[test]
    fn embedded_rank_one_projector_on_f2_has_rank_108() {
        let sp = fr_like();
        let f2 = sp.restrict(&["F2"]).unwrap();
        let plus = StateVector::superposition(f2.clone(), &[(C64::new(1.0, 0.0), &["+"])]).unwrap();
        let p = projector_from_states(&[plus]).unwrap();
        let full = embed(&p, &sp).unwrap();
        let trace: C64 = full
            .to_csr()
            .triplets()
            .filter(|(i, j, _)| i == j)
            .map(|t| t.2)
            .sum();
        assert!((trace.re - 108.0).abs() < 1e-12);
    }

    #[test]
    fn embedded_identity_is_identity() {
        let sp = fr_like();
        let s = sp.restrict(&["S"]).unwrap();
        let id = embed(&Operator::identity(s), &sp).unwrap();
        let d = id
            .to_csr()
            .add_scaled(C64::new(-1.0, 0.0), &Csr::identity(sp.dim()));
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn projector_from_full_basis_is_identity() {
        let sp = HilbertSpace::new(&[("A", &["0", "1", "2"])]).unwrap();
        let vs: Vec<_> = ["0", "1", "2"]
            .iter()
            .map(|l| StateVector::basis(sp.clone(), &[l]).unwrap())
            .collect();
        let p = projector_from_states(&vs).unwrap();
        assert!(p.to_dense().unwrap().sub(&Matrix::identity(3)).max_abs() < 1e-12);
    }

    #[test]
    fn dependent_vectors_rejected() {
        let sp = HilbertSpace::new(&[("A", &["0", "1"])]).unwrap();
        let a = StateVector::basis(sp.clone(), &["0"]).unwrap();
        assert_eq!(
            projector_from_states(&[a.clone(), a.scaled(C64::new(2.0, 0.0))]),
            Err(Error::LinearlyDependent)
        );
        assert_eq!(
            projector_from_states(&[StateVector::zero(sp)]),
            Err(Error::LinearlyDependent)
        );
    }

    #[test]
    fn ok_and_fail_projectors_are_orthogonal() {
        let sp = fr_like();
        let f1c = sp.restrict(&["C", "F1"]).unwrap();
        let r = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        let ok =
            StateVector::superposition(f1c.clone(), &[(r, &["head", "h"]), (-r, &["tail", "t"])])
                .unwrap();
        let fail =
            StateVector::superposition(f1c, &[(r, &["head", "h"]), (r, &["tail", "t"])]).unwrap();
        let p_ok = embed(&projector_from_states(&[ok]).unwrap(), &sp).unwrap();
        let p_fail = embed(&projector_from_states(&[fail]).unwrap(), &sp).unwrap();
        assert!(p_ok.to_csr().mul(&p_fail.to_csr()).max_abs() < 1e-10);
        let p = p_ok.to_csr();
        assert!(p.mul(&p).add_scaled(C64::new(-1.0, 0.0), &p).max_abs() < 1e-10);
        assert!(p_ok.hermiticity_deviation() < 1e-10);
    }

    #[test]
    fn operator_tensor_matches_state_tensor() {
        let sp = HilbertSpace::new(&[("A", &["0", "1"]), ("B", &["0", "1", "2"])]).unwrap();
        let a = sp.restrict(&["A"]).unwrap();
        let b = sp.restrict(&["B"]).unwrap();
        let x = Matrix::from_fn(2, |i, j| C64::new((i + 2 * j) as f64, 1.0));
        let y = Matrix::from_fn(3, |i, j| C64::new(1.0, (i * j) as f64));
        let ox = Operator::dense(a.clone(), x).unwrap();
        let oy = Operator::dense(b.clone(), y).unwrap();
        let prod = tensor_product_operators(&sp, &[&oy, &ox]).unwrap();
        let va = StateVector::new(a, vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.5)]).unwrap();
        let vb = StateVector::new(
            b,
            vec![C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(0.5, 0.5)],
        )
        .unwrap();
        let lhs = prod
            .apply(&tensor_product(&sp, &[&va, &vb]).unwrap())
            .unwrap();
        let rhs = tensor_product(&sp, &[&ox.apply(&va).unwrap(), &oy.apply(&vb).unwrap()]).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }
}
