//! Unfolding, local coordinates, histograms with bootstrap errors and
//! curve comparisons.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kernels::{delta_p, DensityCurve};
use crate::lyapunov::LyapunovSpectrum;
use crate::rng::{Domain, RngStream};

/// `p_j = exp(2λ_j)/N`, in the order of the input.
pub fn unfold_bulk(spectrum: &LyapunovSpectrum) -> Vec<f64> {
    let n = spectrum.n as f64;
    spectrum.lambdas.iter().map(|l| (2.0 * l).exp() / n).collect()
}

/// How the zoomed coordinate is centred on the kernel's pickets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recentering {
    /// `ξ = exp(2λ) − Np` as is.
    None,
    /// Subtract the Ginibre shift `Δp(N, p, a)` and the integer that moves
    /// the picket of `j_center` next to the origin.
    Analytic { a: f64 },
    /// Fit the per-index means of `exp(2λ_j)` over the window by
    /// `α j + β` and use `ξ = (exp(2λ) − α j_center − β)/α`. For ensembles
    /// whose mean spacing or offset differs from the Ginibre one.
    Fitted,
}

fn check_window(n: usize, j_center: usize, window: usize) -> Result<()> {
    if window > 4 || j_center < window + 2 || j_center + window > n.saturating_sub(1) {
        return Err(Error::WindowOutOfRange(format!(
            "need window <= 4, j_center - window >= 2 and j_center + window <= n - 1 \
             (n = {n}, j_center = {j_center}, window = {window})"
        )));
    }
    Ok(())
}

/// `ξ = exp(2λ_j) − N p` with `p = j_center/N`, for the 1-based indices
/// `j_center − window ..= j_center + window`.
pub fn local_coordinate(spectrum: &LyapunovSpectrum, j_center: usize, window: usize) -> Result<Vec<f64>> {
    check_window(spectrum.n, j_center, window)?;
    let np = j_center as f64;
    Ok((j_center - window..=j_center + window)
        .map(|j| (2.0 * spectrum.lambdas[j - 1]).exp() - np)
        .collect())
}

/// Local coordinates of many spectra, recentred as requested. One inner
/// vector per spectrum.
pub fn local_coordinates(
    spectra: &[LyapunovSpectrum],
    j_center: usize,
    window: usize,
    recentering: Recentering,
) -> Result<Vec<Vec<f64>>> {
    let first = spectra.first().ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    let n = first.n;
    let raw = spectra
        .iter()
        .map(|s| local_coordinate(s, j_center, window))
        .collect::<Result<Vec<_>>>()?;
    match recentering {
        Recentering::None => Ok(raw),
        Recentering::Analytic { a } => {
            let p = j_center as f64 / n as f64;
            let dp = delta_p(n, p, a)?;
            let shift = dp - (dp + 0.5).round();
            Ok(raw
                .into_iter()
                .map(|v| v.into_iter().map(|x| x - shift).collect())
                .collect())
        }
        Recentering::Fitted => {
            let (alpha, beta) = fit_index_means(&raw, j_center, window)?;
            let centre = alpha * j_center as f64 + beta - j_center as f64;
            Ok(raw
                .into_iter()
                .map(|v| v.into_iter().map(|x| (x - centre) / alpha).collect())
                .collect())
        }
    }
}

/// Least-squares line through the per-index means of `exp(2λ_j)`.
fn fit_index_means(raw: &[Vec<f64>], j_center: usize, window: usize) -> Result<(f64, f64)> {
    let k = 2 * window + 1;
    if k < 2 {
        return Err(Error::RankDeficient);
    }
    let count = raw.len() as f64;
    let mut xs = Vec::with_capacity(k);
    let mut ys = Vec::with_capacity(k);
    for (i, j) in (j_center - window..=j_center + window).enumerate() {
        let mean = raw.iter().map(|v| v[i]).sum::<f64>() / count + j_center as f64;
        xs.push(j as f64);
        ys.push(mean);
    }
    let mx = xs.iter().sum::<f64>() / k as f64;
    let my = ys.iter().sum::<f64>() / k as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::RankDeficient);
    }
    let alpha = sxy / sxx;
    if !(alpha > 0.0) {
        return Err(Error::RankDeficient);
    }
    Ok((alpha, my - alpha * mx))
}

/// Coefficients of `N̄(x) = c1 x + c2 x^{3/2} + c3 x²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftUnfoldFit {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Euclidean norm of the fit residuals.
    pub residual_norm: f64,
}

impl SoftUnfoldFit {
    pub fn value(&self, x: f64) -> f64 {
        self.c1 * x + self.c2 * x.powf(1.5) + self.c3 * x * x
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.c1 + 1.5 * self.c2 * x.sqrt() + 2.0 * self.c3 * x
    }
}

/// Least-squares fit of the cumulative count near a soft edge. `x` is the
/// distance into the support and `rank` the number of levels beyond it.
pub fn soft_unfold_fit(points: &[(f64, f64)]) -> Result<SoftUnfoldFit> {
    if points.len() < 50 {
        return Err(Error::TooFewSamples {
            needed: 50,
            got: points.len(),
        });
    }
    if points.iter().any(|(x, r)| !(x.is_finite() && *x >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter("fit points need finite x >= 0".into()));
    }
    let rows = points.len();
    let a = DMatrix::from_fn(rows, 3, |i, k| {
        let x = points[i].0;
        match k {
            0 => x,
            1 => x.powf(1.5),
            _ => x * x,
        }
    });
    let b = DVector::from_iterator(rows, points.iter().map(|p| p.1));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-12) {
        return Err(Error::RankDeficient);
    }
    let coef = svd.solve(&b, 0.0).map_err(|_| Error::RankDeficient)?;
    let residual_norm = (&a * &coef - &b).norm();
    Ok(SoftUnfoldFit {
        c1: coef[0],
        c2: coef[1],
        c3: coef[2],
        residual_norm,
    })
}

/// Default fit window for soft-edge unfolding, as distances `x = −ξ` into
/// the support. Starts two units inside the edge, where the tail beyond the
/// edge no longer spoils the three-term model.
pub const SOFT_FIT_WINDOW: (f64, f64) = (2.0, 12.0);

/// A soft-edge density after unfolding with [`soft_unfold_fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedSoftDensity {
    /// Distances into the support, increasing.
    pub x: Vec<f64>,
    /// Unfolded coordinate `N̄(x)`, increasing.
    pub u: Vec<f64>,
    /// `ρ(−x)/N̄′(x)`.
    pub density: Vec<f64>,
    pub fit: SoftUnfoldFit,
    /// Largest `|N̄(x) − N(x)|/N(x)` on the window.
    pub max_relative_fit_error: f64,
}

/// Unfolds a tabulated soft-edge density.
///
/// The cumulative count `N(x) = ∫_{−x}^{ξ_max} ρ` is taken from the right
/// end of the grid, which must lie far enough beyond the edge for the tail
/// to be negligible. The three-term model is fitted on `window` and the
/// density divided by its derivative there.
pub fn unfold_soft_curve(curve: &DensityCurve, window: (f64, f64)) -> Result<UnfoldedSoftDensity> {
    let (xlo, xhi) = window;
    if !(xlo > 0.0 && xhi > xlo) {
        return Err(Error::InvalidParameter(format!("bad fit window {xlo}..{xhi}")));
    }
    let xs = &curve.xs;
    let first = *xs.first().ok_or_else(|| Error::GridMismatch("empty curve".into()))?;
    if first > -xhi {
        return Err(Error::GridMismatch(format!("curve starts at {first}, above -{xhi}")));
    }
    let n = xs.len();
    let mut cum = vec![0.0; n];
    for k in (0..n - 1).rev() {
        cum[k] = cum[k + 1] + 0.5 * (xs[k + 1] - xs[k]) * (curve.values[k] + curve.values[k + 1]);
    }
    let inside: Vec<usize> = (0..n)
        .rev()
        .filter(|&k| -xs[k] >= xlo && -xs[k] <= xhi)
        .collect();
    let points: Vec<(f64, f64)> = inside.iter().map(|&k| (-xs[k], cum[k])).collect();
    let fit = soft_unfold_fit(&points)?;
    let max_relative_fit_error = points
        .iter()
        .map(|&(x, r)| ((fit.value(x) - r) / r).abs())
        .fold(0.0, f64::max);
    let mut out = UnfoldedSoftDensity {
        x: Vec::with_capacity(inside.len()),
        u: Vec::with_capacity(inside.len()),
        density: Vec::with_capacity(inside.len()),
        fit,
        max_relative_fit_error,
    };
    for &k in &inside {
        let x = -xs[k];
        let d = fit.derivative(x);
        if !(d > 0.0) {
            return Err(domain("unfold_soft_curve", format!("fitted mean density not positive at x = {x}")));
        }
        out.x.push(x);
        out.u.push(fit.value(x));
        out.density.push(curve.values[k] / d);
    }
    if out.u.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("unfold_soft_curve", "fitted cumulative count is not increasing"));
    }
    Ok(out)
}

/// Sup-norm distance of two unfolded densities on the overlap of their
/// unfolded coordinates.
pub fn unfolded_sup_distance(a: &UnfoldedSoftDensity, b: &UnfoldedSoftDensity) -> Result<f64> {
    let ca = DensityCurve::new(a.u.clone(), a.density.clone(), Default::default())?;
    let cb = DensityCurve::new(b.u.clone(), b.density.clone(), Default::default())?;
    let lo = ca.xs[0].max(cb.xs[0]);
    let hi = ca.xs[ca.xs.len() - 1].min(cb.xs[cb.xs.len() - 1]);
    if !(hi > lo) {
        return Err(Error::GridMismatch("unfolded coordinates do not overlap".into()));
    }
    let steps = 2000;
    let mut sup: f64 = 0.0;
    for k in 0..=steps {
        let u = lo + (hi - lo) * k as f64 / steps as f64;
        match (ca.interpolate(u), cb.interpolate(u)) {
            (Some(x), Some(y)) => sup = sup.max((x - y).abs()),
            _ => return Err(Error::GridMismatch("interpolation outside grid".into())),
        }
    }
    Ok(sup)
}

/// Binned local density with bootstrap errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDensity {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_samples: usize,
    /// Counts divided by the mean count, so their mean over the window is 1.
    pub normalized_values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl EmpiricalDensity {
    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Binning and bootstrap settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub bin_width: f64,
    /// Window `[lo, hi)`. `None` covers the data with bins aligned to
    /// multiples of `bin_width`.
    pub window: Option<(f64, f64)>,
    pub bootstrap_rounds: usize,
    pub seed: u64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            bin_width: 0.1,
            window: None,
            bootstrap_rounds: 400,
            seed: 0,
        }
    }
}

/// Histogram of values grouped by product sample. Bootstrap rounds resample
/// whole samples so correlations between levels of one sample are kept.
pub fn make_histogram(samples: &[Vec<f64>], cfg: &HistogramConfig) -> Result<EmpiricalDensity> {
    let total: usize = samples.iter().map(Vec::len).sum();
    if total < 100 {
        return Err(Error::TooFewSamples {
            needed: 100,
            got: total,
        });
    }
    let bw = cfg.bin_width;
    if !(bw > 0.0 && bw.is_finite()) {
        return Err(Error::InvalidParameter("bin width must be positive".into()));
    }
    let (lo, hi) = match cfg.window {
        Some((lo, hi)) if hi > lo => (lo, hi),
        Some(_) => return Err(Error::InvalidParameter("empty histogram window".into())),
        None => {
            let all = samples.iter().flatten();
            let min = all.clone().copied().fold(f64::INFINITY, f64::min);
            let max = all.copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = (min / bw).floor() * bw;
            let bins = (((max - lo) / bw).floor() as usize + 1).max(1);
            (lo, lo + bins as f64 * bw)
        }
    };
    let bins = ((hi - lo) / bw).round() as usize;
    if bins == 0 {
        return Err(Error::InvalidParameter("window narrower than one bin".into()));
    }
    let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * bw).collect();
    let bin_of = |x: f64| -> Option<usize> {
        if x < lo || x >= edges[bins] {
            return None;
        }
        Some((((x - lo) / bw).floor() as usize).min(bins - 1))
    };
    let per_sample: Vec<Vec<usize>> = samples
        .iter()
        .map(|v| v.iter().filter_map(|&x| bin_of(x)).collect())
        .collect();
    let tally = |pick: &mut dyn Iterator<Item = usize>| -> Vec<u64> {
        let mut c = vec![0u64; bins];
        for s in pick {
            for &b in &per_sample[s] {
                c[b] += 1;
            }
        }
        c
    };
    let counts = tally(&mut (0..samples.len()));
    let normalize = |c: &[u64]| -> Vec<f64> {
        let mean = c.iter().sum::<u64>() as f64 / bins as f64;
        c.iter()
            .map(|&v| if mean > 0.0 { v as f64 / mean } else { 0.0 })
            .collect()
    };
    let normalized_values = normalize(&counts);
    let mut sum = vec![0.0; bins];
    let mut sum_sq = vec![0.0; bins];
    let mut rng = RngStream::new(cfg.seed, 0, 0).rng_in(Domain::Bootstrap);
    let n = samples.len();
    for _ in 0..cfg.bootstrap_rounds {
        let c = tally(&mut (0..n).map(|_| rng.random_range(0..n)));
        for (k, v) in normalize(&c).into_iter().enumerate() {
            sum[k] += v;
            sum_sq[k] += v * v;
        }
    }
    let r = cfg.bootstrap_rounds as f64;
    let stderr = (0..bins)
        .map(|k| {
            if cfg.bootstrap_rounds < 2 {
                return 0.0;
            }
            let mean = sum[k] / r;
            ((sum_sq[k] / r - mean * mean).max(0.0) * r / (r - 1.0)).sqrt()
        })
        .collect();
    Ok(EmpiricalDensity {
        bin_edges: edges,
        counts,
        n_samples: n,
        normalized_values,
        stderr,
    })
}

/// Outcome of [`compare`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub sup_norm: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub pass: bool,
    pub tolerance_used: f64,
    /// Bin centres that entered the comparison and the analytic bin
    /// averages there.
    pub centers: Vec<f64>,
    pub analytic: Vec<f64>,
}

impl ComparisonReport {
    pub fn chi_square_per_dof(&self) -> f64 {
        self.chi_square / self.dof.max(1) as f64
    }
}

/// Largest `χ²/dof` accepted by [`compare`].
pub const MAX_CHI_SQUARE_PER_DOF: f64 = 2.0;

/// Compares a histogram with an analytic curve, bin by bin.
///
/// The analytic side is averaged over each bin. Only bins whose centre lies
/// in `range` (default: all bins inside the curve's grid) are used. Bins
/// with zero bootstrap error are left out of `χ²`. Passes iff the sup-norm
/// is at most `tolerance` and `χ²/dof ≤ 2`.
pub fn compare(
    empirical: &EmpiricalDensity,
    analytic: &DensityCurve,
    tolerance: f64,
    range: Option<(f64, f64)>,
) -> Result<ComparisonReport> {
    let (glo, ghi) = match (analytic.xs.first(), analytic.xs.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::GridMismatch("analytic curve is empty".into())),
    };
    let (rlo, rhi) = range.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut sup: f64 = 0.0;
    let mut chi = 0.0;
    let mut dof = 0;
    let mut centers = Vec::new();
    let mut values = Vec::new();
    for (k, w) in empirical.bin_edges.windows(2).enumerate() {
        let c = 0.5 * (w[0] + w[1]);
        if c < rlo || c > rhi || w[0] < glo || w[1] > ghi {
            continue;
        }
        let sub = 16;
        let avg = (0..sub)
            .map(|i| analytic.interpolate(w[0] + (i as f64 + 0.5) * (w[1] - w[0]) / sub as f64))
            .sum::<Option<f64>>()
            .ok_or_else(|| Error::GridMismatch("bin outside analytic grid".into()))?
            / sub as f64;
        let diff = empirical.normalized_values[k] - avg;
        sup = sup.max(diff.abs());
        let se = empirical.stderr[k];
        if se > 0.0 {
            chi += (diff / se).powi(2);
            dof += 1;
        }
        centers.push(c);
        values.push(avg);
    }
    if centers.is_empty() {
        return Err(Error::GridMismatch("no histogram bin overlaps the analytic grid".into()));
    }
    let chi_ok = dof == 0 || chi / dof as f64 <= MAX_CHI_SQUARE_PER_DOF;
    Ok(ComparisonReport {
        sup_norm: sup,
        chi_square: chi,
        dof,
        pass: sup <= tolerance && chi_ok,
        tolerance_used: tolerance,
        centers,
        analytic: values,
    })
}

/// Fraction of bins whose value lies within `n_sigma` bootstrap errors of
/// the bin-averaged analytic curve. Bins with zero error count as inside
/// only on an exact match.
pub fn band_agreement(empirical: &EmpiricalDensity, analytic: &DensityCurve, n_sigma: f64) -> Result<f64> {
    let ideal = ideal_histogram(analytic, &empirical.bin_edges, 0.0)?;
    let bins = empirical.normalized_values.len();
    if bins == 0 {
        return Err(Error::GridMismatch("empty histogram".into()));
    }
    let inside = (0..bins)
        .filter(|&k| {
            let d = (empirical.normalized_values[k] - ideal.normalized_values[k]).abs();
            d <= n_sigma * empirical.stderr[k]
        })
        .count();
    Ok(inside as f64 / bins as f64)
}

/// Turns an analytic density into the histogram a perfect sampler would
/// give: bin averages with the given errors. No renormalisation; over whole
/// periods of a bulk density the mean is already one.
pub fn ideal_histogram(curve: &DensityCurve, edges: &[f64], stderr: f64) -> Result<EmpiricalDensity> {
    let bins = edges.len().saturating_sub(1);
    let mut vals = Vec::with_capacity(bins);
    for w in edges.windows(2) {
        let sub = 16;
        let v = (0..sub)
            .map(|i| curve.interpolate(w[0] + (i as f64 + 0.5) * (w[1] - w[0]) / sub as f64))
            .sum::<Option<f64>>()
            .ok_or_else(|| Error::GridMismatch("bin outside analytic grid".into()))?;
        vals.push(v / sub as f64);
    }
    Ok(EmpiricalDensity {
        bin_edges: edges.to_vec(),
        counts: vec![0; bins],
        n_samples: 0,
        normalized_values: vals,
        stderr: vec![stderr; bins],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::CurveMeta;
    use crate::lyapunov::Method;

    fn spectrum(lambdas: Vec<f64>) -> LyapunovSpectrum {
        LyapunovSpectrum {
            n: lambdas.len(),
            lambdas,
            m: 1,
            method: Method::QrRefined,
            sample_index: 0,
            master_seed: 0,
        }
    }

    #[test]
    fn unfolding_edge_value() {
        let s = spectrum(vec![0.5 * 30f64.ln(); 30]);
        assert!(unfold_bulk(&s).iter().all(|p| (p - 1.0).abs() < 1e-14));
    }

    #[test]
    fn local_coordinate_inverts_zoom() {
        let s = spectrum(vec![0.5 * 15f64.ln(); 30]);
        let xi = local_coordinate(&s, 15, 2).unwrap();
        assert_eq!(xi.len(), 5);
        assert!(xi.iter().all(|x| x.abs() < 1e-12));
        assert!(local_coordinate(&s, 15, 5).is_err());
        assert!(local_coordinate(&s, 2, 1).is_err());
        assert!(local_coordinate(&s, 28, 2).is_err());
    }

    #[test]
    fn analytic_recentering_puts_ginibre_pickets_on_integers() {
        // deterministic picket fence exp(2λ_j) = j − 1/2
        let s = spectrum((1..=30).map(|j| 0.5 * (j as f64 - 0.5).ln()).collect());
        let xi = local_coordinates(&[s], 15, 2, Recentering::Analytic { a: 0.12 }).unwrap();
        for (x, want) in xi[0].iter().zip([-2.0, -1.0, 0.0, 1.0, 2.0]) {
            assert!((x - want).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn fitted_recentering_removes_scale_and_offset() {
        let s = spectrum((1..=30).map(|j| 0.5 * (2.0 * j as f64 + 0.3).ln()).collect());
        let xi = local_coordinates(&[s], 15, 2, Recentering::Fitted).unwrap();
        for (x, want) in xi[0].iter().zip([-2.0, -1.0, 0.0, 1.0, 2.0]) {
            assert!((x - want).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn soft_fit_recovers_models() {
        let lin: Vec<(f64, f64)> = (1..=60).map(|k| (k as f64 * 0.1, 2.5 * k as f64 * 0.1)).collect();
        let f = soft_unfold_fit(&lin).unwrap();
        assert!((f.c1 - 2.5).abs() < 1e-8 && f.c2.abs() < 1e-8 && f.c3.abs() < 1e-8);
        let edge: Vec<(f64, f64)> = (1..=60).map(|k| (k as f64 * 0.1, 0.7 * (k as f64 * 0.1).powf(1.5))).collect();
        let f = soft_unfold_fit(&edge).unwrap();
        assert!(f.c1.abs() < 1e-8 && (f.c2 - 0.7).abs() < 1e-8 && f.c3.abs() < 1e-8);
        assert!(matches!(soft_unfold_fit(&lin[..10]), Err(Error::TooFewSamples { .. })));
        let zeros: Vec<(f64, f64)> = (0..60).map(|_| (0.0, 0.0)).collect();
        assert_eq!(soft_unfold_fit(&zeros), Err(Error::RankDeficient));
    }

    #[test]
    fn airy_cumulative_fit_within_one_percent() {
        let xs = crate::kernels::grid(-12.5, 8.0, 2051).unwrap();
        let curve = DensityCurve::tabulate(xs, CurveMeta::new("airy"), |x| Ok(crate::kernels::airy_density(x))).unwrap();
        let u = unfold_soft_curve(&curve, SOFT_FIT_WINDOW).unwrap();
        assert!(u.max_relative_fit_error < 0.01, "{}", u.max_relative_fit_error);
        // deep inside, the unfolded Airy density only oscillates weakly around 1
        let tail: Vec<f64> = u.density.iter().copied().skip(u.density.len() / 2).collect();
        assert!(tail.iter().all(|d| (d - 1.0).abs() < 0.05));
        assert_eq!(unfolded_sup_distance(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn constant_values_fill_one_bin() {
        let samples = vec![vec![0.37; 5]; 40];
        let h = make_histogram(&samples, &HistogramConfig::default()).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.counts.iter().sum::<u64>(), 200);
    }

    #[test]
    fn histogram_mean_is_one() {
        let samples: Vec<Vec<f64>> = (0..50)
            .map(|i| (0..5).map(|k| ((i * 5 + k) as f64 * 0.618).fract() * 4.0 - 2.0).collect())
            .collect();
        let cfg = HistogramConfig {
            window: Some((-2.0, 2.0)),
            bootstrap_rounds: 50,
            ..Default::default()
        };
        let h = make_histogram(&samples, &cfg).unwrap();
        let mean = h.normalized_values.iter().sum::<f64>() / h.normalized_values.len() as f64;
        assert!((mean - 1.0).abs() < 1e-12);
        assert!(h.stderr.iter().all(|s| *s > 0.0));
        assert!(make_histogram(&samples[..10], &cfg).is_err());
    }

    #[test]
    fn curve_against_itself() {
        let xs = crate::kernels::grid(-1.0, 1.0, 201).unwrap();
        let curve = DensityCurve::tabulate(xs, CurveMeta::new("flat"), |_| Ok(1.0)).unwrap();
        let edges: Vec<f64> = (0..=10).map(|k| -1.0 + 0.2 * k as f64).collect();
        let h = ideal_histogram(&curve, &edges, 0.1).unwrap();
        let r = compare(&h, &curve, 0.1, None).unwrap();
        assert_eq!(r.sup_norm, 0.0);
        assert!(r.pass);
        assert_eq!(r.dof, 10);
    }
}
