//! Small dense square complex matrices.
//!
//! Only what the engine needs: products, adjoints, a partial-pivoting solver and
//! the scaling-and-squaring exponential with a degree-13 Padé approximant.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds from row-major data; `data.len()` must be a perfect square.
    pub fn from_row_major(data: Vec<C64>) -> Option<Self> {
        let mut n = libm::sqrt(data.len() as f64) as usize;
        while n * n < data.len() {
            n += 1;
        }
        (n * n == data.len()).then_some(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.n, x.len());
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Induced 1-norm (max column sum).
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs()
    }

    /// Solves `self * X = rhs` by Gaussian elimination with partial pivoting.
    /// Returns `None` for a numerically singular system.
    pub fn solve(&self, rhs: &Self) -> Option<Self> {
        let n = self.n;
        assert_eq!(n, rhs.n);
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&x, &y| a[x * n + col].norm().total_cmp(&a[y * n + col].norm()))?;
            if a[pivot_row * n + col].norm() < 1e-300 {
                return None;
            }
            if pivot_row != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot_row * n + j);
                    b.swap(col * n + j, pivot_row * n + j);
                }
            }
            let pivot = a[col * n + col];
            for row in col + 1..n {
                let factor = a[row * n + col] / pivot;
                if factor.re == 0.0 && factor.im == 0.0 {
                    continue;
                }
                for j in col..n {
                    let v = a[col * n + j];
                    a[row * n + j] -= factor * v;
                }
                for j in 0..n {
                    let v = b[col * n + j];
                    b[row * n + j] -= factor * v;
                }
            }
        }
        let mut x = vec![C64::new(0.0, 0.0); n * n];
        for row in (0..n).rev() {
            let pivot = a[row * n + row];
            for j in 0..n {
                let mut s = b[row * n + j];
                for k in row + 1..n {
                    s -= a[row * n + k] * x[k * n + j];
                }
                x[row * n + j] = s / pivot;
            }
        }
        Some(Self { n, data: x })
    }

    /// Matrix exponential by scaling and squaring with the [13/13] Padé approximant.
    pub fn expm(&self) -> Self {
        let n = self.n;
        if n == 0 {
            return self.clone();
        }
        let norm = self.norm1();
        let squarings = if norm > THETA_13 {
            libm::ceil(libm::log2(norm / THETA_13)) as i32
        } else {
            0
        };
        let a = self.scale(C64::new(libm::exp2(-squarings as f64), 0.0));
        let id = Self::identity(n);
        let a2 = a.mul(&a);
        let a4 = a2.mul(&a2);
        let a6 = a2.mul(&a4);
        let c = |k: usize| C64::new(PADE_13[k], 0.0);

        let u_inner = a6.scale(c(13)).add(&a4.scale(c(11))).add(&a2.scale(c(9)));
        let u = a.mul(
            &a6.mul(&u_inner)
                .add(&a6.scale(c(7)))
                .add(&a4.scale(c(5)))
                .add(&a2.scale(c(3)))
                .add(&id.scale(c(1))),
        );
        let v_inner = a6.scale(c(12)).add(&a4.scale(c(10))).add(&a2.scale(c(8)));
        let v = a6
            .mul(&v_inner)
            .add(&a6.scale(c(6)))
            .add(&a4.scale(c(4)))
            .add(&a2.scale(c(2)))
            .add(&id.scale(c(0)));

        let mut r = v
            .sub(&u)
            .solve(&v.add(&u))
            .expect("Padé denominator is nonsingular after scaling");
        for _ in 0..squarings {
            r = r.mul(&r);
        }
        r
    }
}

const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// exp(-i H t) for a 2x2 Hermitian `h`, in closed form.
pub(crate) fn hermitian_2x2_propagator(h: &Matrix, t: f64) -> Matrix {
    debug_assert_eq!(h.dim(), 2);
    // h = a0 I + ax X + ay Y + az Z
    let a0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let az = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let ax = h[(1, 0)].re;
    let ay = h[(1, 0)].im;
    let r = libm::sqrt(ax * ax + ay * ay + az * az);
    let phase = C64::new(libm::cos(a0 * t), -libm::sin(a0 * t));
    let (c, s) = (libm::cos(r * t), libm::sin(r * t));
    // exp(-i r t n.sigma) = cos(rt) I - i sin(rt) n.sigma
    let (nx, ny, nz) = if r > 0.0 {
        (ax / r, ay / r, az / r)
    } else {
        (0.0, 0.0, 0.0)
    };
    let mi = C64::new(0.0, -s);
    let m00 = C64::new(c, 0.0) + mi * nz;
    let m11 = C64::new(c, 0.0) - mi * nz;
    // sigma_x + ... off-diagonal: (nx - i ny) at (0,1), (nx + i ny) at (1,0)
    let m01 = mi * C64::new(nx, -ny);
    let m10 = mi * C64::new(nx, ny);
    Matrix {
        n: 2,
        data: vec![phase * m00, phase * m01, phase * m10, phase * m11],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Matrix::zeros(4);
        assert!(z.expm().sub(&Matrix::identity(4)).max_abs() < 1e-15);
    }

    #[test]
    fn expm_of_diagonal() {
        let mut d = Matrix::zeros(3);
        d[(0, 0)] = c(1.0, 0.0);
        d[(1, 1)] = c(-2.5, 0.0);
        d[(2, 2)] = c(0.0, 3.0);
        let e = d.expm();
        assert!((e[(0, 0)] - c(libm::exp(1.0), 0.0)).norm() < 1e-13);
        assert!((e[(1, 1)] - c(libm::exp(-2.5), 0.0)).norm() < 1e-15);
        assert!((e[(2, 2)] - c(libm::cos(3.0), libm::sin(3.0))).norm() < 1e-14);
    }

    #[test]
    fn expm_large_norm_rotation() {
        // exp(theta * [[0,-1],[1,0]]) is a rotation by theta, theta large forces squarings.
        let theta = 40.0;
        let mut g = Matrix::zeros(2);
        g[(0, 1)] = c(-theta, 0.0);
        g[(1, 0)] = c(theta, 0.0);
        let e = g.expm();
        assert!((e[(0, 0)].re - libm::cos(theta)).abs() < 1e-11);
        assert!((e[(1, 0)].re - libm::sin(theta)).abs() < 1e-11);
    }

    #[test]
    fn closed_form_2x2_matches_pade() {
        let mut h = Matrix::zeros(2);
        h[(0, 0)] = c(0.3, 0.0);
        h[(1, 1)] = c(-1.1, 0.0);
        h[(0, 1)] = c(0.4, -0.7);
        h[(1, 0)] = c(0.4, 0.7);
        let t = 1.7;
        let analytic = hermitian_2x2_propagator(&h, t);
        let generic = h.scale(c(0.0, -t)).expm();
        assert!(analytic.sub(&generic).max_abs() < 1e-13);
    }

    #[test]
    fn solve_recovers_identity() {
        let a = Matrix::from_fn(3, |i, j| {
            c((i * 3 + j) as f64 + if i == j { 5.0 } else { 0.0 }, 0.1)
        });
        let x = a.solve(&a).unwrap();
        assert!(x.sub(&Matrix::identity(3)).max_abs() < 1e-13);
    }
}
