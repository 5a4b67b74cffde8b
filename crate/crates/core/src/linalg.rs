//! Small dense complex matrices, stored column-major.
//!
//! Only what the QR recursion needs: products, a Gram–Schmidt QR with
//! positive diagonal, and products with upper-triangular factors.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square complex matrix in column-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from a row-major closure `f(row, col)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for c in 0..n {
            for r in 0..n {
                data.push(f(r, c));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn col(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.n..(c + 1) * self.n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    pub fn add_assign(&mut self, other: &CMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    /// `self * b`.
    pub fn mul(&self, b: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.n);
        self.mul_into(b, &mut out);
        out
    }

    /// `out = self * b`; `out` must not alias either operand.
    pub fn mul_into(&self, b: &CMatrix, out: &mut CMatrix) {
        let n = self.n;
        debug_assert_eq!(b.n, n);
        out.data.fill(Complex64::new(0.0, 0.0));
        for c in 0..n {
            let oc = &mut out.data[c * n..(c + 1) * n];
            for k in 0..n {
                let s = b.data[c * n + k];
                axpy(oc, s, &self.data[k * n..(k + 1) * n]);
            }
        }
    }

    pub fn adjoint(&self) -> CMatrix {
        let n = self.n;
        CMatrix::from_fn(n, |r, c| self[(c, r)].conj())
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[c * self.n + r]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[c * self.n + r]
    }
}

#[inline]
fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `Σ conj(x_i) y_i`.
#[inline]
fn dotc(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (a, b) in x.iter().zip(y) {
        re += a.re * b.re + a.im * b.im;
        im += a.re * b.im - a.im * b.re;
    }
    Complex64::new(re, im)
}

#[inline]
fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Upper-triangular factor with strictly positive real diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperTriangular(pub CMatrix);

impl UpperTriangular {
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.0.n).map(|i| self.0[(i, i)].re).collect()
    }

    /// `out = R * v`.
    pub fn mul_into(&self, v: &CMatrix, out: &mut CMatrix) {
        let n = v.n;
        let r = &self.0;
        out.data.fill(Complex64::new(0.0, 0.0));
        for c in 0..n {
            let oc = &mut out.data[c * n..(c + 1) * n];
            for k in 0..n {
                let s = v.data[c * n + k];
                axpy(&mut oc[..=k], s, &r.data[k * n..k * n + k + 1]);
            }
        }
    }

    /// `out = R† * v`.
    pub fn adjoint_mul_into(&self, v: &CMatrix, out: &mut CMatrix) {
        let n = v.n;
        let r = &self.0;
        for c in 0..n {
            let vc = &v.data[c * n..(c + 1) * n];
            for i in 0..n {
                out.data[c * n + i] = dotc(&r.data[i * n..i * n + i + 1], &vc[..=i]);
            }
        }
    }
}

/// Scratch space for [`qr_in_place`].
#[derive(Debug, Clone)]
pub struct QrWork {
    coeff: Vec<Complex64>,
}

impl QrWork {
    pub fn new(n: usize) -> Self {
        Self {
            coeff: vec![Complex64::new(0.0, 0.0); n],
        }
    }
}

/// Overwrites `z` with `Q` of `z = Q R` and writes `R` into `r`.
///
/// Classical Gram–Schmidt with selective reorthogonalisation ("twice is
/// enough"), which keeps `Q` orthonormal to working precision. The diagonal
/// of `R` is real and positive. `index` only labels the error.
pub fn qr_in_place(
    z: &mut CMatrix,
    r: &mut UpperTriangular,
    work: &mut QrWork,
    index: usize,
) -> Result<()> {
    let n = z.n;
    let rm = &mut r.0;
    rm.data.fill(Complex64::new(0.0, 0.0));
    for k in 0..n {
        let (done, rest) = z.data.split_at_mut(k * n);
        let col = &mut rest[..n];
        let mut before = norm2(col);
        if before == 0.0 || !before.is_finite() {
            return Err(Error::SingularFactor { index });
        }
        for _pass in 0..3 {
            for i in 0..k {
                work.coeff[i] = dotc(&done[i * n..(i + 1) * n], col);
            }
            for i in 0..k {
                let c = work.coeff[i];
                axpy(col, -c, &done[i * n..(i + 1) * n]);
                rm.data[k * n + i] += c;
            }
            let after = norm2(col);
            let enough = after > 0.5 * before;
            before = after;
            if enough {
                break;
            }
        }
        let nrm = norm2(col);
        if nrm == 0.0 || !nrm.is_finite() || nrm < f64::MIN_POSITIVE {
            return Err(Error::SingularFactor { index });
        }
        let inv = 1.0 / nrm;
        for v in col.iter_mut() {
            *v *= inv;
        }
        rm.data[k * n + k] = Complex64::new(nrm, 0.0);
    }
    Ok(())
}

/// Convenience wrapper returning `(Q, R)`.
pub fn qr(a: &CMatrix) -> Result<(CMatrix, UpperTriangular)> {
    let mut q = a.clone();
    let mut r = UpperTriangular(CMatrix::zeros(a.n));
    qr_in_place(&mut q, &mut r, &mut QrWork::new(a.n), 0)?;
    Ok((q, r))
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is
/// read.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let n = a.n;
    let m = nalgebra::DMatrix::from_fn(n, n, |r, c| {
        if r >= c {
            a[(r, c)]
        } else {
            a[(c, r)].conj()
        }
    });
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
