//! Sparse vectors and compressed-row matrices over the product basis.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::C64;

/// Sorted `(index, value)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    entries: Vec<(usize, C64)>,
}

impl SparseVec {
    /// Drops exact zeros and merges duplicates.
    pub fn from_entries(mut entries: Vec<(usize, C64)>) -> Self {
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, C64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some((j, w)) if *j == i => *w += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|(_, v)| v.re != 0.0 || v.im != 0.0);
        Self { entries: merged }
    }

    pub fn from_dense(values: &[C64]) -> Self {
        Self {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.re != 0.0 || v.im != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    pub fn unit(index: usize) -> Self {
        Self {
            entries: vec![(index, C64::new(1.0, 0.0))],
        }
    }

    pub fn entries(&self) -> &[(usize, C64)] {
        &self.entries
    }

    pub fn to_dense(&self, dim: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    /// `<self|x>` against a dense vector.
    pub fn dot_dense(&self, x: &[C64]) -> C64 {
        self.entries.iter().map(|&(i, v)| v.conj() * x[i]).sum()
    }

    /// `<self|other>`.
    pub fn dot(&self, other: &SparseVec) -> C64 {
        let (mut a, mut b) = (
            self.entries.iter().peekable(),
            other.entries.iter().peekable(),
        );
        let mut acc = C64::new(0.0, 0.0);
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                core::cmp::Ordering::Less => {
                    a.next();
                }
                core::cmp::Ordering::Greater => {
                    b.next();
                }
                core::cmp::Ordering::Equal => {
                    acc += x.conj() * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v.norm_sqr()).sum()
    }

    /// Remaps indices through `f`; `f` must be injective.
    pub fn map_indices(&self, f: impl Fn(usize) -> usize) -> Self {
        Self::from_entries(self.entries.iter().map(|&(i, v)| (f(i), v)).collect())
    }

    pub fn axpy_into(&self, alpha: C64, out: &mut [C64]) {
        for &(i, v) in &self.entries {
            out[i] += alpha * v;
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    /// Builds from triplets, summing duplicates and dropping entries with modulus ≤ `drop_tol`.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
        drop_tol: f64,
    ) -> Self {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); dim];
        for (i, j, v) in triplets {
            *rows[i].entry(j).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                if v.norm() > drop_tol {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.cols[p], self.vals[p]))
        })
    }

    pub fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        for (o, w) in out.iter_mut().zip(self.row_ptr.windows(2)) {
            *o = (w[0]..w[1]).map(|p| self.vals[p] * x[self.cols[p]]).sum();
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.dim,
            self.triplets().map(|(i, j, v)| (j, i, v.conj())),
            0.0,
        )
    }

    pub fn mul(&self, other: &Csr) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut triplets = Vec::new();
        for i in 0..self.dim {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let k = self.cols[p];
                let a = self.vals[p];
                for q in other.row_ptr[k]..other.row_ptr[k + 1] {
                    triplets.push((i, other.cols[q], a * other.vals[q]));
                }
            }
        }
        Self::from_triplets(self.dim, triplets, 0.0)
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: C64, other: &Csr) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(
            self.dim,
            self.triplets()
                .chain(other.triplets().map(|(i, j, v)| (i, j, alpha * v))),
            0.0,
        )
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))), 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn sparse_dot_skips_disjoint_support() {
        let a = SparseVec::from_entries(vec![(0, c(1.0)), (4, c(2.0))]);
        let b = SparseVec::from_entries(vec![(4, c(3.0)), (1, c(5.0))]);
        assert_eq!(a.dot(&b), c(6.0));
    }

    #[test]
    fn duplicates_merge_and_cancel() {
        let a = SparseVec::from_entries(vec![(2, c(1.0)), (2, c(-1.0)), (1, c(0.5))]);
        assert_eq!(a.entries(), &[(1, c(0.5))]);
    }

    #[test]
    fn csr_product_and_adjoint() {
        let a = Csr::from_triplets(2, [(0, 1, C64::new(0.0, 1.0))], 0.0);
        let p = a.mul(&a.adjoint());
        assert_eq!(p.triplets().collect::<Vec<_>>(), vec![(0, 0, c(1.0))]);
    }
}
