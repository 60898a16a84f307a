//! Labeled tensor-product Hilbert spaces.
//!
//! Product-basis indices are row-major in subsystem declaration order: the last
//! subsystem varies fastest.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    name: String,
    labels: Vec<String>,
}

impl Subsystem {
    pub fn new(
        name: impl Into<String>,
        labels: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Self {
            name: name.into(),
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel {
                subsystem: self.name.clone(),
                label: label.to_owned(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    subsystems: Vec<Subsystem>,
    strides: Vec<usize>,
    dim: usize,
}

impl HilbertSpace {
    /// `HilbertSpace::new(&[("S", &["1", "2"]), ("F", &["0", "1", "2"])])`
    pub fn new(spec: &[(&str, &[&str])]) -> Result<Arc<Self>> {
        Self::from_subsystems(
            spec.iter()
                .map(|(name, labels)| Subsystem::new(*name, labels.iter().copied()))
                .collect(),
        )
    }

    pub fn from_subsystems(subsystems: Vec<Subsystem>) -> Result<Arc<Self>> {
        if subsystems.is_empty() {
            return Err(Error::InvalidSpace("no subsystems".into()));
        }
        for (i, s) in subsystems.iter().enumerate() {
            if s.labels.is_empty() {
                return Err(Error::InvalidSpace(format!(
                    "subsystem `{}` has no basis labels",
                    s.name
                )));
            }
            if subsystems[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::InvalidSpace(format!(
                    "duplicate subsystem name `{}`",
                    s.name
                )));
            }
            for (j, l) in s.labels.iter().enumerate() {
                if s.labels[..j].contains(l) {
                    return Err(Error::InvalidSpace(format!(
                        "duplicate label `{l}` in subsystem `{}`",
                        s.name
                    )));
                }
            }
        }
        let mut strides = alloc::vec![1usize; subsystems.len()];
        for i in (0..subsystems.len() - 1).rev() {
            strides[i] = strides[i + 1]
                .checked_mul(subsystems[i + 1].dim())
                .ok_or_else(|| Error::InvalidSpace("dimension overflow".into()))?;
        }
        let dim = strides[0]
            .checked_mul(subsystems[0].dim())
            .ok_or_else(|| Error::InvalidSpace("dimension overflow".into()))?;
        Ok(Arc::new(Self {
            subsystems,
            strides,
            dim,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSubsystem(name.to_owned()))
    }

    pub fn subsystem(&self, name: &str) -> Result<&Subsystem> {
        Ok(&self.subsystems[self.position(name)?])
    }

    /// Product-basis index of the basis state with one label per subsystem.
    pub fn index_of(&self, labels: &[&str]) -> Result<usize> {
        if labels.len() != self.subsystems.len() {
            return Err(Error::DimensionMismatch {
                expected: self.subsystems.len(),
                actual: labels.len(),
            });
        }
        let mut idx = 0;
        for ((s, stride), label) in self.subsystems.iter().zip(&self.strides).zip(labels) {
            idx += s.label_index(label)? * stride;
        }
        Ok(idx)
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        self.subsystems
            .iter()
            .zip(&self.strides)
            .map(|(s, stride)| (index / stride) % s.dim())
            .collect()
    }

    pub fn index_from_digits(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn labels_of(&self, index: usize) -> Vec<&str> {
        self.digits(index)
            .into_iter()
            .zip(&self.subsystems)
            .map(|(d, s)| s.labels[d].as_str())
            .collect()
    }

    /// Tuple notation `(a,b,c)`, or the bare label for a single subsystem.
    pub fn format_labels(labels: &[&str]) -> String {
        if labels.len() == 1 {
            labels[0].to_owned()
        } else {
            format!("({})", labels.join(","))
        }
    }

    /// The space spanned by the named subsystems, in the order given.
    pub fn restrict(&self, names: &[&str]) -> Result<Arc<Self>> {
        let subs = names
            .iter()
            .map(|n| self.subsystem(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        Self::from_subsystems(subs)
    }

    /// Concatenation of spaces with disjoint subsystem names.
    pub fn concat(parts: &[&HilbertSpace]) -> Result<Arc<Self>> {
        Self::from_subsystems(
            parts
                .iter()
                .flat_map(|p| p.subsystems.iter().cloned())
                .collect(),
        )
    }

    /// Describes where the subsystems of `local` sit inside `self`.
    pub fn placement(&self, local: &HilbertSpace) -> Result<Placement> {
        let mut positions = Vec::with_capacity(local.subsystems.len());
        for s in &local.subsystems {
            let pos = self.position(&s.name)?;
            if self.subsystems[pos].labels != s.labels {
                return Err(Error::BadPartition(format!(
                    "subsystem `{}` has different basis labels",
                    s.name
                )));
            }
            if positions.contains(&pos) {
                return Err(Error::BadPartition(format!(
                    "subsystem `{}` repeated",
                    s.name
                )));
            }
            positions.push(pos);
        }
        let complement: Vec<usize> = (0..self.subsystems.len())
            .filter(|p| !positions.contains(p))
            .collect();
        let complement_dim = complement
            .iter()
            .map(|&p| self.subsystems[p].dim())
            .product();
        Ok(Placement {
            local_dims: local.subsystems.iter().map(Subsystem::dim).collect(),
            complement_dims: complement
                .iter()
                .map(|&p| self.subsystems[p].dim())
                .collect(),
            local_strides: positions.iter().map(|&p| self.strides[p]).collect(),
            complement_strides: complement.iter().map(|&p| self.strides[p]).collect(),
            local_dim: local.dim,
            complement_dim,
        })
    }
}

/// Index arithmetic for a subsystem subset embedded in a larger space.
#[derive(Debug, Clone)]
pub struct Placement {
    local_dims: Vec<usize>,
    complement_dims: Vec<usize>,
    local_strides: Vec<usize>,
    complement_strides: Vec<usize>,
    local_dim: usize,
    complement_dim: usize,
}

impl Placement {
    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn complement_dim(&self) -> usize {
        self.complement_dim
    }

    /// Full-space offset contributed by a local index.
    pub fn local_offset(&self, local: usize) -> usize {
        spread(local, &self.local_dims, &self.local_strides)
    }

    /// Full-space offset contributed by a complement index.
    pub fn complement_offset(&self, rest: usize) -> usize {
        spread(rest, &self.complement_dims, &self.complement_strides)
    }

    pub fn full_index(&self, local: usize, rest: usize) -> usize {
        self.local_offset(local) + self.complement_offset(rest)
    }
}

fn spread(mut index: usize, dims: &[usize], strides: &[usize]) -> usize {
    let mut out = 0;
    for (d, s) in dims.iter().zip(strides).rev() {
        out += (index % d) * s;
        index /= d;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_indexing() {
        let sp = HilbertSpace::new(&[
            ("S", &["1", "2"]),
            ("F", &["0", "1", "2"]),
            ("W", &["0", "+", "-"]),
        ])
        .unwrap();
        assert_eq!(sp.dim(), 18);
        assert_eq!(sp.index_of(&["1", "0", "0"]).unwrap(), 0);
        assert_eq!(sp.index_of(&["2", "0", "0"]).unwrap(), 9);
        assert_eq!(sp.index_of(&["1", "2", "-"]).unwrap(), 8);
        assert_eq!(sp.labels_of(8), ["1", "2", "-"]);
    }

    #[test]
    fn invalid_spaces_rejected() {
        assert!(HilbertSpace::new(&[("A", &["0"]), ("A", &["1"])]).is_err());
        assert!(HilbertSpace::new(&[("A", &[])]).is_err());
        assert!(HilbertSpace::new(&[("A", &["x", "x"])]).is_err());
    }

    #[test]
    fn placement_permutes() {
        let sp = HilbertSpace::new(&[
            ("A", &["0", "1"]),
            ("B", &["0", "1", "2"]),
            ("C", &["0", "1"]),
        ])
        .unwrap();
        let local = sp.restrict(&["C", "A"]).unwrap();
        let pl = sp.placement(&local).unwrap();
        assert_eq!(pl.complement_dim(), 3);
        // local (C=1, A=1) -> index 3, rest B=2
        let full = pl.full_index(3, 2);
        assert_eq!(sp.labels_of(full), ["1", "2", "1"]);
    }
}
