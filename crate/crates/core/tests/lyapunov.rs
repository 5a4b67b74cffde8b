use lyaplab::ensembles::{factor_iter, Ensemble, ProductSpec};
use lyaplab::linalg::CMatrix;
use lyaplab::lyapunov::{
    exact_lyapunov_highprec, gaussian_density, gaussian_theory, qr_exponents, refined_exponents,
    sample_spectra, wsr, wsr_asymptotic, LyapunovSpectrum, Method, RefineConfig,
};
use lyaplab::par::Execution;
use lyaplab::specfun::{digamma, trigamma};
use num_complex::Complex64;
use proptest::prelude::*;

fn mean_sd(xs: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt(), v.len())
}

fn column(spectra: &[LyapunovSpectrum], j: usize) -> impl Iterator<Item = f64> + '_ {
    spectra.iter().map(move |s| s.lambdas[j])
}

#[test]
fn identity_factors_give_zero() {
    let f = std::iter::repeat_n(CMatrix::identity(5), 40);
    assert!(qr_exponents(f.clone(), 5).unwrap().iter().all(|l| l.abs() < 1e-15));
    assert!(refined_exponents(f, 5, RefineConfig::default()).unwrap().iter().all(|l| l.abs() < 1e-15));
}

#[test]
fn diagonal_factors_give_sorted_logs() {
    let d = [3.0, 0.5, 1.7, 0.01];
    let m = CMatrix::from_diagonal(&d.map(|x| Complex64::new(x, 0.0)));
    let mut want: Vec<f64> = d.iter().map(|x: &f64| x.ln()).collect();
    want.sort_by(f64::total_cmp);
    for got in [
        qr_exponents(std::iter::repeat_n(m.clone(), 25), 4).unwrap(),
        refined_exponents(std::iter::repeat_n(m.clone(), 25), 4, RefineConfig::default()).unwrap(),
    ] {
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-13, "{got:?}");
        }
    }
}

#[test]
fn scalar_products_match_direct_sum() {
    let spec = ProductSpec::ginibre(1, 30).unwrap();
    for sample in 0..5 {
        let direct = factor_iter(spec, sample, 3).map(|x| x[(0, 0)].norm().ln()).sum::<f64>() / 30.0;
        let hp = exact_lyapunov_highprec(&spec, sample, 3, 60).unwrap();
        assert!((hp.lambdas[0] - direct).abs() < 1e-14);
        assert_eq!(hp.method, Method::HighPrecisionSvd);
    }
}

/// Exponents of a 2×2 product from the closed-form eigenvalues of `Y†Y`.
fn two_by_two(y: &CMatrix, m: usize) -> [f64; 2] {
    let g = y.adjoint().mul(y);
    let (a, d, b) = (g[(0, 0)].re, g[(1, 1)].re, g[(0, 1)]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d).powi(2) + b.norm_sqr()).sqrt();
    // product of the eigenvalues is det, which avoids cancellation in the smaller
    let hi = mid + rad;
    let lo = (a * d - b.norm_sqr()) / hi;
    let s = 0.5 / m as f64;
    [s * lo.ln(), s * hi.ln()]
}

#[test]
fn two_by_two_oracle() {
    let spec = ProductSpec::ginibre(2, 2).unwrap();
    for sample in 0..20 {
        let f: Vec<CMatrix> = factor_iter(spec, sample, 11).collect();
        let want = two_by_two(&f[1].mul(&f[0]), 2);
        let hp = exact_lyapunov_highprec(&spec, sample, 11, 40).unwrap();
        let qr = refined_exponents(f.clone(), 2, RefineConfig { tol: 1e-15, ..Default::default() }).unwrap();
        for k in 0..2 {
            assert!((hp.lambdas[k] - want[k]).abs() < 1e-12, "{sample}");
            assert!((qr[k] - want[k]).abs() < 1e-12, "{sample}");
        }
    }
}

#[test]
fn highprec_rejects_bad_digits() {
    let spec = ProductSpec::ginibre(2, 2).unwrap();
    assert!(exact_lyapunov_highprec(&spec, 0, 0, 3).is_err());
}

#[test]
fn gaussian_theory_values() {
    let g = gaussian_theory(1, 250).unwrap();
    assert!((g.mean + 0.288_607_832_450_766_5).abs() < 1e-12);
    assert!((g.sigma - (std::f64::consts::PI.powi(2) / 6.0 / 1000.0).sqrt()).abs() < 1e-12);
    assert!((g.sigma - 0.040_557_8).abs() < 1e-7);
    let g = gaussian_theory(2, 1).unwrap();
    assert!((g.mean - 0.211_392_167_549_233_5).abs() < 1e-12);
    for j in [1000, 100_000] {
        let g = gaussian_theory(j, 1).unwrap();
        // ψ(j) = ln j − 1/(2j) + O(j⁻²)
        assert!((g.mean - 0.5 * (j as f64).ln()).abs() < 0.5 / j as f64);
    }
    assert!(gaussian_theory(0, 1).is_err() && gaussian_theory(1, 0).is_err());
}

#[test]
fn wsr_values() {
    assert!((wsr_asymptotic(15, 250) - 0.244_948_974).abs() < 1e-8);
    assert!((wsr_asymptotic(40, 40) - 1.0).abs() < 1e-15);
    let exact = wsr(50, 500).unwrap();
    let asym = wsr_asymptotic(50, 500);
    assert!(((exact - asym) / asym).abs() <= 0.02, "{exact} {asym}");
    assert!(wsr(1, 10).is_err());
}

#[test]
fn gaussian_density_values() {
    // N = 1: a single Gaussian at ψ(1)/2
    let g = gaussian_theory(1, 40).unwrap();
    let peak = gaussian_density(g.mean, 1, 40).unwrap();
    assert!((peak - 1.0 / (g.sigma * (2.0 * std::f64::consts::PI).sqrt())).abs() < 1e-12);
    assert!((gaussian_density(g.mean + 0.01, 1, 40).unwrap() - gaussian_density(g.mean - 0.01, 1, 40).unwrap()).abs() < 1e-12);

    // integral is N, by the trapezoid rule on a fine grid
    for (n, m) in [(1, 10), (4, 8), (6, 100)] {
        let (lo, hi, k) = (-3.0, 3.0, 120_000);
        let h = (hi - lo) / k as f64;
        let total: f64 = (0..=k)
            .map(|i| {
                let w = if i == 0 || i == k { 0.5 } else { 1.0 };
                w * gaussian_density(lo + h * i as f64, n, m).unwrap()
            })
            .sum::<f64>()
            * h;
        assert!((total - n as f64).abs() < 1e-6, "{n} {m} {total}");
    }

    let at = digamma(2.0).unwrap() / 2.0;
    let total = gaussian_density(at, 4, 1000).unwrap();
    let g2 = gaussian_theory(2, 1000).unwrap();
    let own = 1.0 / (g2.sigma * (2.0 * std::f64::consts::PI).sqrt());
    assert!(own / total >= 0.99);
}

#[test]
fn spectra_are_sorted_and_gaps_concentrate() {
    let spec = ProductSpec::ginibre(4, 500).unwrap();
    let spectra = sample_spectra(&spec, 200, 21, Method::QrRefined, Execution::Parallel).unwrap();
    for s in &spectra {
        assert!(s.lambdas.windows(2).all(|w| w[0] <= w[1]));
        assert!(s.lambdas.iter().all(|l| l.is_finite()));
    }
    for j in 0..3 {
        let (mean, sd, n) = mean_sd(spectra.iter().map(|s| s.lambdas[j + 1] - s.lambdas[j]));
        let want = (digamma(j as f64 + 2.0).unwrap() - digamma(j as f64 + 1.0).unwrap()) / 2.0;
        // the gap mean carries an O(1/M) shift on top of the noise
        assert!((mean - want).abs() < 4.0 * sd / (n as f64).sqrt() + 0.01, "{j} {mean} {want}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let spec = ProductSpec::new(Ensemble::CorrelatedSum, 5, 40).unwrap();
    let a = sample_spectra(&spec, 30, 2, Method::QrRefined, Execution::Sequential).unwrap();
    let b = lyaplab::par::with_threads(3, || sample_spectra(&spec, 30, 2, Method::QrRefined, Execution::Parallel).unwrap());
    assert_eq!(a, b);
}

#[test]
fn oracle_agreement_at_small_size() {
    let spec = ProductSpec::ginibre(4, 16).unwrap();
    let count = 300;
    let hp = sample_spectra(&spec, count, 5, Method::HighPrecisionSvd, Execution::Parallel).unwrap();
    let qr = sample_spectra(&spec, count, 5, Method::QrRefined, Execution::Parallel).unwrap();
    for j in 0..4 {
        let (m1, s1, n) = mean_sd(column(&hp, j));
        let (m2, s2, _) = mean_sd(column(&qr, j));
        let se = s1 / (n as f64).sqrt();
        assert!((m1 - m2).abs() < 3.0 * se, "mean {j}: {m1} {m2}");
        // the standard deviation has relative standard error 1/√(2n)
        assert!((s1 - s2).abs() < 3.0 * s1 / (2.0 * n as f64).sqrt(), "sd {j}: {s1} {s2}");
    }
}

#[test]
fn variance_scales_as_trigamma_over_4m() {
    let count = 600;
    for (idx, m) in [500usize, 2000, 8000].into_iter().enumerate() {
        let spec = ProductSpec::ginibre(4, m).unwrap();
        let s = sample_spectra(&spec, count, 100 + idx as u64, Method::QrRefined, Execution::Parallel).unwrap();
        let mut ratio = 0.0;
        for j in 0..4 {
            let (_, sd, _) = mean_sd(column(&s, j));
            ratio += sd * sd * 4.0 * m as f64 / trigamma(j as f64 + 1.0).unwrap() / 4.0;
        }
        // each of the four ratios has relative standard error √(2/count)
        let tol = 3.0 * (2.0 / count as f64).sqrt() / 2.0;
        assert!((ratio - 1.0).abs() < tol, "M = {m}: {ratio}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scaling_every_factor_shifts_every_exponent(c in 0.01f64..100.0, sample in 0u64..1000) {
        let spec = ProductSpec::ginibre(4, 30).unwrap();
        let plain = qr_exponents(factor_iter(spec, sample, 1), 4).unwrap();
        let scaled = qr_exponents(factor_iter(spec, sample, 1).map(|mut x| { x.scale(c); x }), 4).unwrap();
        for (a, b) in plain.iter().zip(&scaled) {
            prop_assert!((b - a - c.ln()).abs() < 1e-12);
        }
        let plain = refined_exponents(factor_iter(spec, sample, 1), 4, RefineConfig::default()).unwrap();
        let scaled = refined_exponents(factor_iter(spec, sample, 1).map(|mut x| { x.scale(c); x }), 4, RefineConfig::default()).unwrap();
        for (a, b) in plain.iter().zip(&scaled) {
            prop_assert!((b - a - c.ln()).abs() < 1e-12);
        }
    }
}
