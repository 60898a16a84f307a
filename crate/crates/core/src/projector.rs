//! Complete orthogonal families of projectors labeled by experience symbols.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::space::HilbertSpace;
use crate::sparse::Csr;
use crate::state::StateVector;
use crate::{C64, VALIDATION_TOL};

/// Maximum deviations found by [`validate_family`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyValidation {
    pub hermiticity: f64,
    pub idempotence: f64,
    pub orthogonality: f64,
    pub completeness: f64,
    pub tolerance: f64,
}

impl FamilyValidation {
    pub fn max_deviation(&self) -> f64 {
        self.hermiticity
            .max(self.idempotence)
            .max(self.orthogonality)
            .max(self.completeness)
    }

    pub fn passed(&self) -> bool {
        self.max_deviation() <= self.tolerance
    }
}

/// Checks a candidate family. Norms are max-entry norms. `tolerance` may only
/// loosen the default of 1e-10.
pub fn validate_family(members: &[(String, Operator)], tolerance: f64) -> FamilyValidation {
    let tolerance = tolerance.max(VALIDATION_TOL);
    let mut report = FamilyValidation {
        hermiticity: 0.0,
        idempotence: 0.0,
        orthogonality: 0.0,
        completeness: 0.0,
        tolerance,
    };
    let Some((_, first)) = members.first() else {
        report.completeness = 1.0;
        return report;
    };
    let dim = first.dim();
    let minus = C64::new(-1.0, 0.0);
    let csr: Vec<Csr> = members.iter().map(|(_, p)| p.to_csr()).collect();
    let mut sum = Csr::from_triplets(dim, core::iter::empty(), 0.0);
    for (i, p) in csr.iter().enumerate() {
        report.hermiticity = report
            .hermiticity
            .max(p.add_scaled(minus, &p.adjoint()).max_abs());
        report.idempotence = report
            .idempotence
            .max(p.mul(p).add_scaled(minus, p).max_abs());
        for q in &csr[..i] {
            report.orthogonality = report
                .orthogonality
                .max(p.mul(q).max_abs())
                .max(q.mul(p).max_abs());
        }
        sum = sum.add_scaled(C64::new(1.0, 0.0), p);
    }
    report.completeness = sum.add_scaled(minus, &Csr::identity(dim)).max_abs();
    if members.iter().any(|(_, p)| p.space() != first.space()) {
        report.completeness = f64::INFINITY;
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorFamily {
    space: Arc<HilbertSpace>,
    labels: Vec<String>,
    projectors: Vec<Operator>,
    /// Label of each product-basis state when every member is diagonal.
    basis_labels: Option<Vec<usize>>,
    /// Subsystems whose product basis defines the family, if built that way.
    support: Option<Vec<String>>,
}

impl ProjectorFamily {
    /// Validates and builds a family. Labels must be unique.
    pub fn new(space: Arc<HilbertSpace>, members: Vec<(String, Operator)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidFamily("no members".into()));
        }
        for (i, (label, p)) in members.iter().enumerate() {
            if **p.space() != *space {
                return Err(Error::SpaceMismatch);
            }
            if members[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::InvalidFamily(format!("duplicate label `{label}`")));
            }
        }
        let report = validate_family(&members, VALIDATION_TOL);
        if !report.passed() {
            return Err(Error::InvalidFamily(format!(
                "max deviation {:e} (hermiticity {:e}, idempotence {:e}, orthogonality {:e}, completeness {:e})",
                report.max_deviation(),
                report.hermiticity,
                report.idempotence,
                report.orthogonality,
                report.completeness
            )));
        }
        let basis_labels = diagonal_labels(&space, &members);
        let (labels, projectors) = members.into_iter().unzip();
        Ok(Self {
            space,
            labels,
            projectors,
            basis_labels,
            support: None,
        })
    }

    /// One projector per basis label of `subsystem`.
    pub fn from_subsystem_basis(space: Arc<HilbertSpace>, subsystem: &str) -> Result<Self> {
        Self::from_joint_basis(space, &[subsystem])
    }

    /// One projector per joint basis state of several subsystems; labels use
    /// the tuple notation `(a,b,c)`.
    pub fn from_joint_basis(space: Arc<HilbertSpace>, subsystems: &[&str]) -> Result<Self> {
        let local = space.restrict(subsystems)?;
        let placement = space.placement(&local)?;
        let n = local.dim();
        let mut basis_labels = vec![0usize; space.dim()];
        let mut projectors = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for l in 0..n {
            let mut entries = Vec::with_capacity(placement.complement_dim());
            for rest in 0..placement.complement_dim() {
                let idx = placement.full_index(l, rest);
                basis_labels[idx] = l;
                entries.push(idx);
            }
            projectors.push(diagonal_projector(space.clone(), &entries));
            labels.push(HilbertSpace::format_labels(&local.labels_of(l)));
        }
        Ok(Self {
            space,
            labels,
            projectors,
            basis_labels: Some(basis_labels),
            support: Some(subsystems.iter().map(|s| s.to_string()).collect()),
        })
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownFamilyLabel(label.to_string()))
    }

    pub fn projector(&self, index: usize) -> &Operator {
        &self.projectors[index]
    }

    /// Family label of every product-basis state, when all members are diagonal.
    pub fn basis_labels(&self) -> Option<&[usize]> {
        self.basis_labels.as_deref()
    }

    pub fn support(&self) -> Option<&[String]> {
        self.support.as_deref()
    }

    pub fn validate(&self) -> FamilyValidation {
        let members: Vec<(String, Operator)> = self
            .labels
            .iter()
            .cloned()
            .zip(self.projectors.iter().cloned())
            .collect();
        validate_family(&members, VALIDATION_TOL)
    }

    /// `Π_j x` written into `out`.
    pub fn project_into(&self, index: usize, x: &[C64], out: &mut [C64]) {
        match &self.basis_labels {
            Some(map) => {
                for ((o, xi), &l) in out.iter_mut().zip(x).zip(map) {
                    *o = if l == index { *xi } else { C64::new(0.0, 0.0) };
                }
            }
            None => self.projectors[index].apply_into(x, out),
        }
    }

    pub fn project(&self, index: usize, state: &StateVector) -> Result<StateVector> {
        if **state.space() != *self.space {
            return Err(Error::SpaceMismatch);
        }
        let mut out = vec![C64::new(0.0, 0.0); state.amplitudes().len()];
        self.project_into(index, state.amplitudes(), &mut out);
        Ok(StateVector::from_parts(self.space.clone(), out))
    }

    /// `⟨x|Π_j|x⟩` for every label.
    pub fn born_weights_slice(&self, x: &[C64]) -> Vec<f64> {
        let mut w = vec![0.0; self.len()];
        match &self.basis_labels {
            Some(map) => {
                for (xi, &l) in x.iter().zip(map) {
                    w[l] += xi.norm_sqr();
                }
            }
            None => {
                let mut buf = vec![C64::new(0.0, 0.0); x.len()];
                for (j, wj) in w.iter_mut().enumerate() {
                    self.projectors[j].apply_into(x, &mut buf);
                    *wj = crate::state::inner(x, &buf).re;
                }
            }
        }
        w
    }

    pub fn born_weights(&self, state: &StateVector) -> Result<Vec<f64>> {
        if **state.space() != *self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.born_weights_slice(state.amplitudes()))
    }
}

fn diagonal_projector(space: Arc<HilbertSpace>, indices: &[usize]) -> Operator {
    use crate::matrix::Matrix;
    use crate::operator::Block;
    use crate::sparse::SparseVec;
    // one rank-1 block per basis state keeps application linear in the support
    let blocks = indices
        .iter()
        .map(|&i| Block::new(vec![SparseVec::unit(i)], Matrix::identity(1)).expect("1x1 block"))
        .collect();
    Operator::block_sum_unchecked(space, C64::new(0.0, 0.0), blocks)
}

fn diagonal_labels(space: &HilbertSpace, members: &[(String, Operator)]) -> Option<Vec<usize>> {
    let mut labels = vec![usize::MAX; space.dim()];
    for (j, (_, p)) in members.iter().enumerate() {
        let mask = p.diagonal_projector_mask()?;
        for (l, m) in labels.iter_mut().zip(mask) {
            if m {
                *l = j;
            }
        }
    }
    labels.iter().all(|&l| l != usize::MAX).then_some(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{embed, projector_from_states};

    fn brukner_space() -> Arc<HilbertSpace> {
        HilbertSpace::new(&[
            ("S", &["1", "2"]),
            ("F", &["0", "1", "2"]),
            ("W", &["0", "+", "-"]),
        ])
        .unwrap()
    }

    #[test]
    fn subsystem_family_validates() {
        let fam = ProjectorFamily::from_subsystem_basis(brukner_space(), "F").unwrap();
        assert_eq!(fam.labels(), ["0", "1", "2"]);
        let r = fam.validate();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.max_deviation(), 0.0);
    }

    #[test]
    fn missing_member_fails_completeness() {
        let sp = brukner_space();
        let fam = ProjectorFamily::from_subsystem_basis(sp.clone(), "F").unwrap();
        let members: Vec<_> = (1..3)
            .map(|j| (fam.label(j).to_string(), fam.projector(j).clone()))
            .collect();
        let r = validate_family(&members, 1e-10);
        assert!(!r.passed());
        assert!((r.completeness - 1.0).abs() < 1e-12);
        assert!(matches!(
            ProjectorFamily::new(sp, members),
            Err(Error::InvalidFamily(_))
        ));
    }

    #[test]
    fn explicit_family_detects_diagonal_structure() {
        let sp = brukner_space();
        let f = sp.restrict(&["F"]).unwrap();
        let members = ["0", "1", "2"]
            .iter()
            .map(|l| {
                let v = StateVector::basis(f.clone(), &[l]).unwrap();
                (
                    l.to_string(),
                    embed(&projector_from_states(&[v]).unwrap(), &sp).unwrap(),
                )
            })
            .collect();
        let fam = ProjectorFamily::new(sp.clone(), members).unwrap();
        let reference = ProjectorFamily::from_subsystem_basis(sp, "F").unwrap();
        assert_eq!(fam.basis_labels(), reference.basis_labels());
    }

    #[test]
    fn tolerance_only_loosens() {
        let fam = ProjectorFamily::from_subsystem_basis(brukner_space(), "W").unwrap();
        let members: Vec<_> = (0..3)
            .map(|j| (fam.label(j).to_string(), fam.projector(j).clone()))
            .collect();
        assert_eq!(validate_family(&members, 1e-14).tolerance, 1e-10);
        assert_eq!(validate_family(&members, 1e-6).tolerance, 1e-6);
    }

    #[test]
    fn joint_labels_use_tuples() {
        let fam = ProjectorFamily::from_joint_basis(brukner_space(), &["F", "W"]).unwrap();
        assert_eq!(fam.len(), 9);
        assert_eq!(fam.label(5), "(1,-)");
    }
}
