//! Fixed-size dense complex matrices for the small state-space and
//! scattering problems (2×2 up to 6×6).

use alloc::vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMat<const N: usize>(pub [[C64; N]; N]);

pub type Mat2 = SMat<2>;
pub type Mat3 = SMat<3>;
pub type Mat4 = SMat<4>;
pub type Mat6 = SMat<6>;

/// 2×2 scattering/transfer block in the basis (microwave, optical).
pub type ScatterMat2 = Mat2;
/// 4×4 scattering/transfer block (bidirectional or Bogoliubov basis).
pub type ScatterMat4 = Mat4;

impl<const N: usize> Default for SMat<N> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<const N: usize> SMat<N> {
    pub const fn zero() -> Self {
        SMat([[ZERO; N]; N])
    }

    pub const fn from_rows(rows: [[C64; N]; N]) -> Self {
        SMat(rows)
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_diag(d: [C64; N]) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|x| *x *= s);
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[C64; N]) -> [C64; N] {
        let mut out = [ZERO; N];
        for (o, row) in out.iter_mut().zip(self.0.iter()) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Solves `self · X = rhs` for `K` right-hand-side columns by Gaussian
    /// elimination with partial pivoting.
    pub fn solve_multi<const K: usize>(&self, rhs: &[[C64; K]; N]) -> Result<[[C64; K]; N]> {
        let mut a = self.0;
        let mut b = *rhs;
        let scale = self.max_abs();
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Singular("zero or non-finite system matrix"));
        }
        for col in 0..N {
            let pivot = (col..N)
                .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
                .unwrap_or(col);
            if a[pivot][col].norm() <= scale * 1e-15 {
                return Err(Error::Singular("state-space system matrix"));
            }
            a.swap(col, pivot);
            b.swap(col, pivot);
            let inv = ONE / a[col][col];
            for row in col + 1..N {
                let f = a[row][col] * inv;
                if f == ZERO {
                    continue;
                }
                for k in col..N {
                    let t = a[col][k];
                    a[row][k] -= f * t;
                }
                for k in 0..K {
                    let t = b[col][k];
                    b[row][k] -= f * t;
                }
            }
        }
        for col in (0..N).rev() {
            let inv = ONE / a[col][col];
            for k in 0..K {
                let mut s = b[col][k];
                for j in col + 1..N {
                    s -= a[col][j] * b[j][k];
                }
                b[col][k] = s * inv;
            }
        }
        Ok(b)
    }

    pub fn solve(&self, rhs: &[C64; N]) -> Result<[C64; N]> {
        let mut cols = [[ZERO; 1]; N];
        for (c, r) in cols.iter_mut().zip(rhs) {
            c[0] = *r;
        }
        let x = self.solve_multi(&cols)?;
        let mut out = [ZERO; N];
        for (o, r) in out.iter_mut().zip(x.iter()) {
            *o = r[0];
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(SMat(self.solve_multi(&Self::identity().0)?))
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> [f64; N] {
        let h = self.adjoint() * *self;
        let mut ev = hermitian_eigenvalues(&h);
        ev.iter_mut().for_each(|x| *x = libm::sqrt(x.max(0.0)));
        ev
    }

    pub fn max_singular_value(&self) -> f64 {
        self.singular_values()[0]
    }

    /// `max |σᵢ − 1|`; zero for a unitary matrix.
    pub fn unitarity_defect(&self) -> f64 {
        self.singular_values()
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

impl Mat2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        SMat([[a, b], [c, d]])
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Closed-form inverse; `None` when the determinant vanishes.
    pub fn inverse_2x2(&self) -> Option<Self> {
        let det = self.det();
        if det == ZERO || !det.is_finite() {
            return None;
        }
        let [[a, b], [c, d]] = self.0;
        Some(Mat2::new(d, -b, -c, a).scale(ONE / det))
    }

    /// Ratio of largest to smallest singular value (infinite when singular).
    pub fn condition_number(&self) -> f64 {
        // σ_max² + σ_min² = ‖A‖_F² and σ_max·σ_min = |det A|.
        let fro2: f64 = self.0.iter().flatten().map(|x| x.norm_sqr()).sum();
        let det = self.det().norm();
        let disc = libm::sqrt((fro2 * fro2 - 4.0 * det * det).max(0.0));
        let hi = libm::sqrt(0.5 * (fro2 + disc));
        let lo = if hi > 0.0 { det / hi } else { 0.0 };
        if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    }
}

impl Mat4 {
    /// Assembles a 4×4 matrix from 2×2 blocks `[[tl, tr], [bl, br]]`.
    pub fn from_blocks(tl: &Mat2, tr: &Mat2, bl: &Mat2, br: &Mat2) -> Self {
        let mut m = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = tl.0[i][j];
                m.0[i][j + 2] = tr.0[i][j];
                m.0[i + 2][j] = bl.0[i][j];
                m.0[i + 2][j + 2] = br.0[i][j];
            }
        }
        m
    }

    /// 2×2 block at block-row `r`, block-column `c` (each 0 or 1).
    pub fn block(&self, r: usize, c: usize) -> Mat2 {
        let (i0, j0) = (2 * r, 2 * c);
        Mat2::new(
            self.0[i0][j0],
            self.0[i0][j0 + 1],
            self.0[i0 + 1][j0],
            self.0[i0 + 1][j0 + 1],
        )
    }
}

impl<const N: usize> Index<(usize, usize)> for SMat<N> {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for SMat<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Mul for SMat<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

impl<const N: usize> Add for SMat<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.0
            .iter_mut()
            .flatten()
            .zip(rhs.0.iter().flatten())
            .for_each(|(a, b)| *a += b);
        self
    }
}

impl<const N: usize> Sub for SMat<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self.0
            .iter_mut()
            .flatten()
            .zip(rhs.0.iter().flatten())
            .for_each(|(a, b)| *a -= b);
        self
    }
}

impl<const N: usize> Neg for SMat<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-ONE)
    }
}

/// Eigenvalues of a Hermitian matrix, descending.
///
/// Runs cyclic Jacobi on the real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]`,
/// whose spectrum is that of `H` with every eigenvalue doubled.
pub fn hermitian_eigenvalues<const N: usize>(h: &SMat<N>) -> [f64; N] {
    let n = 2 * N;
    let mut a = vec![0.0f64; n * n];
    for i in 0..N {
        for j in 0..N {
            let z = h.0[i][j];
            a[i * n + j] = z.re;
            a[(i + N) * n + (j + N)] = z.re;
            a[(i + N) * n + j] = z.im;
            a[i * n + (j + N)] = -z.im;
        }
    }
    // Symmetrize against rounding in the input.
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-32 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: alloc::vec::Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    let mut out = [0.0; N];
    for (k, o) in out.iter_mut().enumerate() {
        // Pairs are degenerate; average each pair.
        *o = 0.5 * (ev[2 * k] + ev[2 * k + 1]);
    }
    out
}

#[cfg(feature = "serde")]
impl<const N: usize> serde::Serialize for SMat<N> {
    /// Row-major nested arrays of `[re, im]` pairs.
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut rows = serializer.serialize_seq(Some(N))?;
        for row in &self.0 {
            let pairs: alloc::vec::Vec<[f64; 2]> = row.iter().map(|z| [z.re, z.im]).collect();
            rows.serialize_element(&pairs)?;
        }
        rows.end()
    }
}
