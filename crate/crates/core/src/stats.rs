//! Statistical verdict machinery: replica summaries, Kolmogorov–Smirnov
//! distances, log–log scaling fits with bootstrap confidence intervals, and
//! the two contraction functionals that control kernel-smoothed quadratic
//! approximations.

use crate::quad::gl16;
use crate::testfn::kernels::Kernel2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

/// Mean of a slice.
#[must_use]
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Replica summary: mean, unbiased variance, standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Sample mean.
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    /// Standard error of the mean.
    pub se: f64,
    /// Sample size.
    pub n: usize,
}

impl Summary {
    /// Summarises a sample (requires at least two values).
    #[must_use]
    pub fn of(xs: &[f64]) -> Self {
        assert!(xs.len() >= 2, "summary needs at least two values");
        let m = mean(xs);
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
        Self {
            mean: m,
            var,
            se: (var / xs.len() as f64).sqrt(),
            n: xs.len(),
        }
    }

    /// Distance from `reference` in standard errors.
    #[must_use]
    pub fn z(&self, reference: f64) -> f64 {
        (self.mean - reference) / self.se
    }
}

/// Two-sided Kolmogorov–Smirnov statistic `sup_x |F_m(x) - F(x)|` for an
/// ascending sample against a CDF.
#[must_use]
pub fn ks_statistic(sorted: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let m = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / m).abs());
        d = d.max(((i + 1) as f64 / m - f).abs());
    }
    d
}

/// KS critical value at the 1% level: `1.628 / √m`.
#[must_use]
pub fn ks_critical_1pct(m: usize) -> f64 {
    1.628 / (m as f64).sqrt()
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
#[must_use]
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Replica measurements of one scaling level (one value of the running
/// parameter, e.g. the chain size).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingLevel {
    /// Running parameter (e.g. `n` or `ℓ`).
    pub x: f64,
    /// Independent replica values of the measured functional.
    pub values: Vec<f64>,
}

/// Log–log slope of level means against the running parameter.
#[must_use]
pub fn fit_loglog(levels: &[ScalingLevel]) -> f64 {
    let xs: Vec<f64> = levels.iter().map(|l| l.x.ln()).collect();
    let ys: Vec<f64> = levels.iter().map(|l| mean(&l.values).max(1e-300).ln()).collect();
    ols(&xs, &ys).0
}

/// Verdict of a scaling fit: slope, bootstrap interval, target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeReport {
    /// Point estimate of the log–log slope.
    pub slope: f64,
    /// Lower 2.5% bootstrap percentile.
    pub lo: f64,
    /// Upper 97.5% bootstrap percentile.
    pub hi: f64,
    /// Target exponent.
    pub target: f64,
    /// Whether the target lies inside `[lo, hi]`.
    pub pass: bool,
}

/// Fits the log–log slope and brackets it by a percentile bootstrap over
/// replicas (resampled independently within each level).
#[must_use]
pub fn slope_report(levels: &[ScalingLevel], target: f64, resamples: usize, seed: u64) -> SlopeReport {
    assert!(levels.len() >= 2, "need at least two levels");
    assert!(levels.iter().all(|l| l.values.len() >= 2));
    let slope = fit_loglog(levels);
    let mut rng = crate::rng::replica_rng(seed, 0x51ca11);
    let mut slopes = Vec::with_capacity(resamples);
    let mut work: Vec<ScalingLevel> = levels.to_vec();
    for _ in 0..resamples {
        for (w, l) in work.iter_mut().zip(levels) {
            for v in w.values.iter_mut() {
                *v = l.values[rng.gen_range(0..l.values.len())];
            }
        }
        slopes.push(fit_loglog(&work));
    }
    slopes.sort_by(f64::total_cmp);
    let lo = slopes[((resamples as f64) * 0.025).floor() as usize];
    let hi = slopes[(((resamples as f64) * 0.975).ceil() as usize).min(resamples - 1)];
    SlopeReport {
        slope,
        lo,
        hi,
        target,
        pass: lo <= target && target <= hi,
    }
}

/// Integrates `f` over `[lo, hi]` with Gauss panels split at the given cut
/// points (kink locations).
fn cut_integral(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64, cuts: &[f64]) -> f64 {
    let mut edges: Vec<f64> = vec![lo, hi];
    edges.extend(cuts.iter().copied().filter(|&c| c > lo && c < hi));
    edges.sort_by(f64::total_cmp);
    edges
        .windows(2)
        .map(|w| if w[1] > w[0] { gl16(f, w[0], w[1]) } else { 0.0 })
        .sum()
}

/// Row mass `∫ |ρ(u, v)| dv`.
fn row_mass(k: &dyn Kernel2, u: f64) -> f64 {
    let (lo, hi) = k.support_v(u);
    cut_integral(&mut |v| k.eval(u, v).abs(), lo, hi, &[])
}

/// First contraction functional:
///
/// ```text
/// R(ρ) = sup_u (∫ |u - v| ρ(u, v) dv)^{1/2}
///      + (∫ |∫ ρ(u, v) dv - 1|⁴ du)^{1/4},
/// ```
///
/// the `L⁴` integral taken over the kernel's scan window.
#[must_use]
pub fn contraction_r(k: &dyn Kernel2) -> f64 {
    let (scan_lo, scan_hi) = k.u_scan();
    let grid = 4000usize;
    let h = (scan_hi - scan_lo) / grid as f64;
    let mut sup = 0.0f64;
    for i in 0..=grid {
        let u = scan_lo + i as f64 * h;
        let (lo, hi) = k.support_v(u);
        let m = cut_integral(&mut |v| (v - u).abs() * k.eval(u, v).abs(), lo, hi, &[u]);
        sup = sup.max(m);
    }
    let (t_lo, t_hi) = k.u_transition();
    let mut deficit = |u: f64| {
        let d = row_mass(k, u) - 1.0;
        d * d * d * d
    };
    let l4 = cut_integral(&mut deficit, scan_lo, scan_hi, &[t_lo, 0.0, t_hi]);
    sup.sqrt() + l4.powf(0.25)
}

/// Second contraction functional:
///
/// ```text
/// S(ρ) = (sup_u ∫|ρ(u, v)| dv + (sup_u ∫|ρ(u, v)| dv)²)
///        · (sup_v ∫|ρ(u, v)| du)^{1/2}.
/// ```
#[must_use]
pub fn contraction_s(k: &dyn Kernel2) -> f64 {
    let (scan_lo, scan_hi) = k.u_scan();
    let grid = 4000usize;
    let h = (scan_hi - scan_lo) / grid as f64;
    let (t_lo, t_hi) = k.u_transition();
    let mut sup_row = 0.0f64;
    let mut sup_col = 0.0f64;
    for i in 0..=grid {
        let u = scan_lo + i as f64 * h;
        sup_row = sup_row.max(row_mass(k, u));
        let (lo, hi) = k.support_u(u);
        let col = cut_integral(&mut |w| k.eval(w, u).abs(), lo, hi, &[t_lo, 0.0, t_hi]);
        sup_col = sup_col.max(col);
    }
    (sup_row + sup_row * sup_row) * sup_col.sqrt()
}
