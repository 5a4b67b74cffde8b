//! Acceptance run. One line per criterion; exits nonzero if any fails.
//!
//! `LYAPLAB_BULK_SAMPLES` raises the sample count of the N=30, M=250 run
//! (never below 1192).

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lyaplab::dyson::{dyson_histogram, DysonSpec};
use lyaplab::ensembles::{Ensemble, ProductSpec};
use lyaplab::kernels::{
    airy_density, bulk_density, bulk_kernel_poisson, bulk_kernel_sum, bulk_r2, finite_density, grid, soft_density,
    BulkKernelParams, CurveMeta, DensityCurve, QuadratureConfig, SoftKernelParams,
};
use lyaplab::lyapunov::{gaussian_density, sample_spectra, LyapunovSpectrum, Method};
use lyaplab::par::{map_indexed, Execution};
use lyaplab::specfun::{digamma, trigamma};
use lyaplab::stats::{
    band_agreement, compare, local_coordinates, make_histogram, unfold_soft_curve, unfolded_sup_distance,
    HistogramConfig, Recentering, SOFT_FIT_WINDOW,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = lyaplab::Result<(bool, String)>;

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn minutes(m: u64) -> Option<Duration> {
    Some(Duration::from_secs(60 * m))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "gaussian regime", limit: minutes(2), run: gaussian_regime },
        Criterion { name: "bulk kernel at N=30, M=250", limit: minutes(10), run: bulk_statistics },
        Criterion { name: "representation equivalence", limit: None, run: representation_equivalence },
        Criterion { name: "sine limit", limit: None, run: sine_limit },
        Criterion { name: "picket-fence limit", limit: None, run: picket_fence },
        Criterion { name: "finite-kernel normalization", limit: minutes(1), run: finite_normalization },
        Criterion { name: "finite-to-gaussian crossover", limit: None, run: finite_to_gaussian },
        Criterion { name: "soft edge: harmonic oscillator", limit: None, run: harmonic_oscillator },
        Criterion { name: "soft edge: airy", limit: None, run: airy_limit },
        Criterion { name: "dyson universality", limit: minutes(5), run: dyson_universality },
        Criterion { name: "qr engine vs oracle", limit: None, run: qr_vs_oracle },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let in_time = c.limit.is_none_or(|l| elapsed <= l);
        let (pass, detail) = match result {
            Ok((ok, d)) => (ok && in_time, d),
            Err(e) => (false, format!("error: {e}")),
        };
        let timing = match c.limit {
            Some(l) => format!("{:.1} s, limit {} s", elapsed.as_secs_f64(), l.as_secs()),
            None => format!("{:.1} s", elapsed.as_secs_f64()),
        };
        println!("{} {}: {detail} ({timing})", if pass { "PASS" } else { "FAIL" }, c.name);
        if !pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

fn column(spectra: &[LyapunovSpectrum], j: usize) -> Vec<f64> {
    spectra.iter().map(|s| s.lambdas[j]).collect()
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

fn tabulate(xs: Vec<f64>, label: &str, f: impl Fn(f64) -> lyaplab::Result<f64> + Sync) -> lyaplab::Result<DensityCurve> {
    let values = map_indexed(xs.len(), Execution::Parallel, |i| f(xs[i])).into_iter().collect::<lyaplab::Result<Vec<_>>>()?;
    DensityCurve::new(xs, values, CurveMeta::new(label))
}

fn gaussian_regime() -> Outcome {
    let (n, m, count) = (4, 4000, 2000);
    let spec = ProductSpec::ginibre(n, m)?;
    let spectra = sample_spectra(&spec, count, 1, Method::QrRefined, Execution::Parallel)?;
    let mut pass = true;
    let mut worst_z: f64 = 0.0;
    let mut worst_sd: f64 = 0.0;
    for j in 0..n {
        let (mean, sd) = mean_sd(&column(&spectra, j));
        let z = (mean - digamma(j as f64 + 1.0)? / 2.0).abs() / (sd / (count as f64).sqrt());
        let want = (trigamma(j as f64 + 1.0)? / (4.0 * m as f64)).sqrt();
        let rel = (sd / want - 1.0).abs();
        pass &= z <= 3.0 && rel <= 0.05;
        worst_z = worst_z.max(z);
        worst_sd = worst_sd.max(rel);
    }
    Ok((pass, format!("max |mean - psi(j)/2| = {worst_z:.2} se (<= 3), max sd error {:.1}% (<= 5%)", 100.0 * worst_sd)))
}

fn bulk_samples() -> usize {
    std::env::var("LYAPLAB_BULK_SAMPLES")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1192)
        .max(1192)
}

fn bulk_statistics() -> Outcome {
    let (n, m, j_center, window) = (30usize, 250usize, 15usize, 2usize);
    let count = bulk_samples();
    let ap = j_center as f64 / m as f64;
    let params = BulkKernelParams::from_ap(ap)?;
    let curve = tabulate(grid(-2.5, 2.5, 401)?, "bulk", |x| bulk_density(x, &params))?;
    // exact finite-N density in the same coordinate, for the diagnostic
    let quad = QuadratureConfig::default();
    let finite = tabulate(grid(-2.5, 2.5, 201)?, "finite", |xi| {
        let x = 0.5 * n as f64 - 0.5 + xi;
        Ok(finite_density(0.5 * x.ln(), n, m, &quad)? / (2.0 * x))
    })?;
    let cfg = HistogramConfig { bin_width: 0.1, window: Some((-2.5, 2.5)), bootstrap_rounds: 400, seed: 7 };
    let ensembles = [
        (Ensemble::Ginibre, Recentering::Analytic { a: n as f64 / m as f64 }),
        (Ensemble::Bernoulli { normalize_variance: true }, Recentering::Fitted),
        (Ensemble::CorrelatedSum, Recentering::Fitted),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, (ens, rec)) in ensembles.into_iter().enumerate() {
        let spec = ProductSpec::new(ens, n, m)?;
        let spectra = sample_spectra(&spec, count, 100 + k as u64, Method::QrRefined, Execution::Parallel)?;
        let h = make_histogram(&local_coordinates(&spectra, j_center, window, rec)?, &cfg)?;
        let r = compare(&h, &curve, 0.10, Some((-2.0, 2.0)))?;
        let diag = compare(&h, &finite, f64::INFINITY, Some((-2.0, 2.0)))?;
        pass &= r.pass;
        parts.push(format!(
            "{} sup {:.3} chi2/dof {:.2} [vs finite N: sup {:.3} chi2/dof {:.2}]",
            ens.name(),
            r.sup_norm,
            r.chi_square_per_dof(),
            diag.sup_norm,
            diag.chi_square_per_dof()
        ));
    }
    Ok((pass, format!("{count} samples; {} (sup <= 0.10, chi2/dof <= 2)", parts.join("; "))))
}

fn representation_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_rho: f64 = 0.0;
    let mut worst_r2: f64 = 0.0;
    for ap in [0.04, 0.25, 1.0, 4.0] {
        let p = BulkKernelParams::from_ap(ap)?;
        for xi in grid(-2.0, 2.0, 401)? {
            worst_rho = worst_rho.max((bulk_kernel_sum(xi, xi, &p)? - bulk_kernel_poisson(xi, xi, &p)?).abs());
        }
        for _ in 0..20 {
            let (xi, zeta) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let d = bulk_r2(xi, zeta, &p, bulk_kernel_sum)? - bulk_r2(xi, zeta, &p, bulk_kernel_poisson)?;
            worst_r2 = worst_r2.max(d.abs());
        }
    }
    Ok((
        worst_rho <= 1e-8 && worst_r2 <= 1e-7,
        format!("max density difference {worst_rho:.1e} (<= 1e-8), max R2 difference {worst_r2:.1e} (<= 1e-7)"),
    ))
}

fn max_deviation_from_one(ap: f64) -> lyaplab::Result<f64> {
    let p = BulkKernelParams::from_ap(ap)?;
    grid(-1.0, 1.0, 401)?
        .into_iter()
        .map(|x| Ok((bulk_density(x, &p)? - 1.0).abs()))
        .try_fold(0.0f64, |acc, d: lyaplab::Result<f64>| Ok(acc.max(d?)))
}

fn sine_limit() -> Outcome {
    let d10 = max_deviation_from_one(10.0)?;
    let d100 = max_deviation_from_one(100.0)?;
    let ratio = d10 / d100;
    Ok((
        (8.0..=12.0).contains(&ratio) && d100 <= 0.004,
        format!("deviation {d10:.5} at ap=10, {d100:.5} at ap=100 (<= 0.0040), ratio {ratio:.2} (in [8, 12])"),
    ))
}

fn picket_fence() -> Outcome {
    let ap: f64 = 0.01;
    let p = BulkKernelParams::from_ap(ap)?;
    let comb = |x: f64| {
        (-3..=3)
            .map(|k| (-(x - k as f64).powi(2) / (2.0 * ap)).exp())
            .sum::<f64>()
            / (2.0 * std::f64::consts::PI * ap).sqrt()
    };
    let peak = comb(0.0);
    let mut worst: f64 = 0.0;
    for x in grid(-1.0, 1.0, 2001)? {
        worst = worst.max((bulk_density(x, &p)? - comb(x)).abs());
    }
    let rel = worst / peak;
    Ok((rel <= 1e-3, format!("sup |rho - comb| / peak = {rel:.2e} (<= 1e-3)")))
}

fn finite_normalization() -> Outcome {
    let quad = QuadratureConfig::default();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (n, m) in [(2usize, 8usize), (4, 8), (4, 32)] {
        let xs = grid(-9.0, 3.0, 12_001)?;
        let c = tabulate(xs, "finite", |l| finite_density(l, n, m, &quad))?;
        let total = trapezoid(&c.xs, &c.values);
        worst = worst.max((total - n as f64).abs());
        parts.push(format!("({n}, {m}): {total:.7}"));
    }
    Ok((worst <= 1e-4, format!("{}; max error {worst:.1e} (<= 1e-4)", parts.join(", "))))
}

fn finite_to_gaussian() -> Outcome {
    let (n, m) = (2usize, 50usize);
    let quad = QuadratureConfig::default();
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for l in grid(-1.0, 1.0, 2001)? {
        let g = gaussian_density(l, n, m)?;
        worst = worst.max((finite_density(l, n, m, &quad)? - g).abs());
        peak = peak.max(g);
    }
    let rel = worst / peak;
    Ok((rel <= 0.05, format!("sup |finite - gaussian| / peak = {:.1}% (<= 5%)", 100.0 * rel)))
}

fn harmonic_oscillator() -> Outcome {
    let a: f64 = 0.005;
    let params = SoftKernelParams::new(a)?;
    let quad = QuadratureConfig::default();
    let scale = a.powf(-1.0 / 3.0);
    // density in ĥ = −a^{1/3} ξ
    let rescaled = |lo: f64, hi: f64, k: usize| -> lyaplab::Result<f64> {
        let c = tabulate(grid(lo, hi, k)?, "soft", |h| Ok(scale * soft_density(-scale * h, &params, &quad)?))?;
        Ok(trapezoid(&c.xs, &c.values))
    };
    let inside = rescaled(0.4, 0.6, 201)?;
    let picket = rescaled(-0.5, 1.0, 601)?;
    Ok((inside >= 0.98, format!("mass in |h - 0.5| <= 0.1: {inside:.4} (>= 0.98), first picket mass {picket:.4}")))
}

fn airy_limit() -> Outcome {
    let params = SoftKernelParams::new(16.0)?;
    let quad = QuadratureConfig::default();
    let xs = grid(-14.0, 6.0, 801)?;
    let soft = unfold_soft_curve(&tabulate(xs.clone(), "soft", |x| soft_density(x, &params, &quad))?, SOFT_FIT_WINDOW)?;
    let airy = unfold_soft_curve(&tabulate(xs, "airy", |x| Ok(airy_density(x)))?, SOFT_FIT_WINDOW)?;
    let d = unfolded_sup_distance(&soft, &airy)?;
    Ok((d <= 0.05, format!("unfolded sup distance {:.2}% (<= 5%)", 100.0 * d)))
}

fn dyson_universality() -> Outcome {
    let tau = 0.25;
    let spec = DysonSpec::new(64, tau, 10_000, 11)?;
    let h = dyson_histogram(&spec, 0.1, 400, Execution::Parallel)?;
    let params = BulkKernelParams::from_ap(tau)?;
    let curve = tabulate(grid(-0.5, 0.5, 401)?, "bulk", |x| bulk_density(x, &params))?;
    let f = band_agreement(&h, &curve, 3.0)?;
    Ok((f >= 0.95, format!("{:.0}% of {} bins within 3 sigma (>= 95%)", 100.0 * f, h.counts.len())))
}

fn qr_vs_oracle() -> Outcome {
    let (n, count) = (4, 100);
    let spec = ProductSpec::ginibre(n, 64)?;
    let oracle = sample_spectra(&spec, count, 5, Method::HighPrecisionSvd, Execution::Parallel)?;
    let refined = sample_spectra(&spec, count, 5, Method::QrRefined, Execution::Parallel)?;
    let plain = sample_spectra(&spec, count, 5, Method::QrAccumulation, Execution::Parallel)?;
    let max_diff = |s: &[LyapunovSpectrum]| {
        s.iter()
            .zip(&oracle)
            .flat_map(|(a, b)| a.lambdas.iter().zip(&b.lambdas).map(|(x, y)| (x - y).abs()))
            .fold(0.0f64, f64::max)
    };
    let mut agree = true;
    for j in 0..n {
        let (m1, s1) = mean_sd(&column(&oracle, j));
        let (m2, s2) = mean_sd(&column(&refined, j));
        agree &= (m1 - m2).abs() <= 3.0 * s1 / (count as f64).sqrt();
        agree &= (s1 - s2).abs() <= 3.0 * s1 / (2.0 * count as f64).sqrt();
    }
    let (dr, dp) = (max_diff(&refined), max_diff(&plain));
    Ok((
        agree && dr <= 1e-3,
        format!("moments agree: {agree}; max |dlambda| refined {dr:.1e} (<= 1e-3), plain accumulation {dp:.1e}"),
    ))
}
