//! Multiple-precision oracle: form `Y` exactly enough, then one-sided
//! Jacobi for its singular values.

use rug::{Assign, Float};

use super::{LyapunovSpectrum, Method};
use crate::ensembles::{factor_iter, ProductSpec};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

#[derive(Clone)]
struct Cf {
    re: Float,
    im: Float,
}

impl Cf {
    fn zero(prec: u32) -> Self {
        Self {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    fn norm_sqr(&self, prec: u32) -> Float {
        Float::with_val(prec, self.re.square_ref()) + Float::with_val(prec, self.im.square_ref())
    }
}

/// Column-major n×n matrix of `Cf`.
struct HpMatrix {
    n: usize,
    prec: u32,
    data: Vec<Cf>,
}

impl HpMatrix {
    fn from_f64(a: &CMatrix, prec: u32) -> Self {
        let n = a.dim();
        let data = a
            .as_slice()
            .iter()
            .map(|z| Cf {
                re: Float::with_val(prec, z.re),
                im: Float::with_val(prec, z.im),
            })
            .collect();
        Self { n, prec, data }
    }

    /// `x * self`, with `x` given in double precision (exactly representable).
    fn left_mul(&self, x: &CMatrix) -> Self {
        let (n, p) = (self.n, self.prec);
        let mut data = vec![Cf::zero(p); n * n];
        let mut t = Float::new(p);
        for c in 0..n {
            for k in 0..n {
                let b = &self.data[c * n + k];
                for r in 0..n {
                    let a = x[(r, k)];
                    let out = &mut data[c * n + r];
                    t.assign(&b.re * a.re);
                    out.re += &t;
                    t.assign(&b.im * a.im);
                    out.re -= &t;
                    t.assign(&b.im * a.re);
                    out.im += &t;
                    t.assign(&b.re * a.im);
                    out.im += &t;
                }
            }
        }
        Self { n, prec: p, data }
    }

    fn col_norm_sqr(&self, c: usize) -> Float {
        let mut s = Float::new(self.prec);
        for z in &self.data[c * self.n..(c + 1) * self.n] {
            s += z.norm_sqr(self.prec);
        }
        s
    }

    /// `Σ conj(a_p) a_q`.
    fn col_dot(&self, p: usize, q: usize) -> Cf {
        let (n, prec) = (self.n, self.prec);
        let mut out = Cf::zero(prec);
        let mut t = Float::new(prec);
        for i in 0..n {
            let a = &self.data[p * n + i];
            let b = &self.data[q * n + i];
            t.assign(&a.re * &b.re);
            out.re += &t;
            t.assign(&a.im * &b.im);
            out.re += &t;
            t.assign(&a.re * &b.im);
            out.im += &t;
            t.assign(&a.im * &b.re);
            out.im -= &t;
        }
        out
    }
}

/// One-sided complex Jacobi; returns the column norms (singular values).
fn jacobi_singular_values(mut a: HpMatrix) -> Result<Vec<Float>> {
    let (n, prec) = (a.n, a.prec);
    let eps = Float::with_val(prec, Float::u_exp(1, -(prec as i32) + 8));
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.col_norm_sqr(p);
                let beta = a.col_norm_sqr(q);
                let g = a.col_dot(p, q);
                let gabs = Float::with_val(prec, g.norm_sqr(prec).sqrt_ref());
                let scale = Float::with_val(prec, &alpha * &beta).sqrt() * &eps;
                if gabs <= scale || gabs.is_zero() {
                    continue;
                }
                rotated = true;
                // phase e^{-iφ} = conj(g)/|g| makes the pair's overlap real
                let ph_re = Float::with_val(prec, &g.re / &gabs);
                let ph_im = Float::with_val(prec, -Float::with_val(prec, &g.im / &gabs));
                let zeta = Float::with_val(prec, &beta - &alpha) / Float::with_val(prec, &gabs * 2u32);
                let root = (Float::with_val(prec, zeta.square_ref()) + 1u32).sqrt();
                let t = if zeta.is_sign_negative() {
                    Float::with_val(prec, -1i32) / (Float::with_val(prec, -&zeta) + &root)
                } else {
                    Float::with_val(prec, 1u32) / (zeta.clone() + &root)
                };
                let c = Float::with_val(prec, 1u32) / (Float::with_val(prec, t.square_ref()) + 1u32).sqrt();
                let s = Float::with_val(prec, &c * &t);
                let mut tmp = Float::new(prec);
                for i in 0..n {
                    let ap = a.data[p * n + i].clone();
                    let aq = &a.data[q * n + i];
                    // b = e^{-iφ} a_q
                    let mut b = Cf::zero(prec);
                    tmp.assign(&aq.re * &ph_re);
                    b.re += &tmp;
                    tmp.assign(&aq.im * &ph_im);
                    b.re -= &tmp;
                    tmp.assign(&aq.re * &ph_im);
                    b.im += &tmp;
                    tmp.assign(&aq.im * &ph_re);
                    b.im += &tmp;
                    let np = Cf {
                        re: Float::with_val(prec, &c * &ap.re) - Float::with_val(prec, &s * &b.re),
                        im: Float::with_val(prec, &c * &ap.im) - Float::with_val(prec, &s * &b.im),
                    };
                    let nq = Cf {
                        re: Float::with_val(prec, &s * &ap.re) + Float::with_val(prec, &c * &b.re),
                        im: Float::with_val(prec, &s * &ap.im) + Float::with_val(prec, &c * &b.im),
                    };
                    a.data[p * n + i] = np;
                    a.data[q * n + i] = nq;
                }
            }
        }
        if !rotated {
            return Ok((0..n).map(|c| a.col_norm_sqr(c).sqrt()).collect());
        }
    }
    Err(Error::NonConvergence {
        what: "one-sided Jacobi",
        tail: f64::NAN,
        tol: eps.to_f64(),
    })
}

/// Exponents `(1/M) log σ_j(Y)` of one sampled product, with `Y` formed in
/// `digits` decimal digits. Intended for `N ≤ 8`, `M ≤ 64`.
///
/// Fails with [`Error::PrecisionInsufficient`] if the smallest singular value
/// is within a few hundred ulps of the rounding floor.
pub fn exact_lyapunov_highprec(
    spec: &ProductSpec,
    sample_index: u64,
    master_seed: u64,
    digits: u32,
) -> Result<LyapunovSpectrum> {
    spec.validate()?;
    if digits < 10 {
        return Err(Error::InvalidParameter(format!("digits must be at least 10, got {digits}")));
    }
    let prec = (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 16;
    let mut it = factor_iter(*spec, sample_index, master_seed);
    let first = it.next().ok_or_else(|| Error::InvalidParameter("empty product".into()))?;
    let mut y = HpMatrix::from_f64(&first, prec);
    for x in it {
        y = y.left_mul(&x);
    }
    let sv = jacobi_singular_values(y)?;
    let max = sv.iter().max_by(|a, b| a.total_cmp(b)).cloned().unwrap_or_else(|| Float::new(prec));
    let floor = Float::with_val(prec, &max * Float::with_val(prec, Float::u_exp(1, -(prec as i32) + 20)));
    let mut lambdas = Vec::with_capacity(sv.len());
    for s in &sv {
        if *s <= floor {
            return Err(Error::PrecisionInsufficient { bits: prec });
        }
        lambdas.push(Float::with_val(prec, s.ln_ref()).to_f64() / spec.m as f64);
    }
    lambdas.sort_by(f64::total_cmp);
    Ok(LyapunovSpectrum {
        lambdas,
        n: spec.n,
        m: spec.m,
        method: Method::HighPrecisionSvd,
        sample_index,
        master_seed,
    })
}
