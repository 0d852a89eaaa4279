//! Continuum references for the limiting field: heat kernels on the line and
//! the half-line, stationary Ornstein–Uhlenbeck covariances, an exact
//! spectral simulator for the Dirichlet interval, and the second-chaos
//! variance formula for quadratic functionals.
//!
//! The limiting field solves `∂_t Y = a ΔY + √(2 a σ²) ∂_u Ẇ` with `a = γ`;
//! its stationary law is spatial white noise with variance `σ²` and its
//! stationary time covariance is `E[Y_{t+Δ}(H) Y_t(G)] = σ² ⟨P_Δ H, G⟩` for
//! the heat semigroup `P` with the boundary condition under test.

use crate::quad::gl16;
use crate::rng::Rng;
use crate::testfn::TestFn;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Boundary condition for the limiting evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryMode {
    /// Free evolution on the whole line.
    FullLine,
    /// Absorption at the origin: image kernel on each half-line.
    Dirichlet,
}

/// Gaussian heat kernel `p_t(w) = (4πat)^{-1/2} exp(-w²/(4at))`.
#[must_use]
pub fn heat_kernel(a: f64, t: f64, w: f64) -> f64 {
    let s = 4.0 * a * t;
    (-w * w / s).exp() / (std::f64::consts::PI * s).sqrt()
}

/// Transition kernel `p_t(u, v)` under `mode`.
#[must_use]
pub fn heat_pair_kernel(mode: BoundaryMode, a: f64, t: f64, u: f64, v: f64) -> f64 {
    match mode {
        BoundaryMode::FullLine => heat_kernel(a, t, u - v),
        BoundaryMode::Dirichlet => {
            if u * v <= 0.0 {
                0.0
            } else {
                heat_kernel(a, t, u - v) - heat_kernel(a, t, u + v)
            }
        }
    }
}

/// Integrates `f` over `[lo, hi]` with 16-point Gauss panels of width at most
/// `width`, with panel edges aligned to the origin.
fn panel_integral(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64, width: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut split = |a: f64, b: f64, acc: &mut f64| {
        if b <= a {
            return;
        }
        let m = ((b - a) / width).ceil().max(1.0) as usize;
        let h = (b - a) / m as f64;
        for i in 0..m {
            *acc += gl16(f, a + i as f64 * h, a + (i + 1) as f64 * h);
        }
    };
    if lo < 0.0 && hi > 0.0 {
        split(lo, 0.0, &mut acc);
        split(0.0, hi, &mut acc);
    } else {
        split(lo, hi, &mut acc);
    }
    acc
}

/// `(P_t f)(u)`: heat semigroup applied to `f` supported in `support`.
#[must_use]
pub fn heat_apply(
    mode: BoundaryMode,
    a: f64,
    t: f64,
    f: &dyn Fn(f64) -> f64,
    support: (f64, f64),
    u: f64,
) -> f64 {
    let (mut lo, mut hi) = support;
    if mode == BoundaryMode::Dirichlet {
        // Only the half-line containing u contributes.
        if u >= 0.0 {
            lo = lo.max(0.0);
        } else {
            hi = hi.min(0.0);
        }
    }
    let width = (4.0 * a * t).sqrt().min(0.3).max(1e-3);
    let mut integrand = |v: f64| heat_pair_kernel(mode, a, t, u, v) * f(v);
    panel_integral(&mut integrand, lo, hi, width)
}

/// Stationary time covariance `σ² ⟨P_t h, g⟩` of the limiting field.
#[must_use]
pub fn ou_time_covariance(
    mode: BoundaryMode,
    a: f64,
    sigma2: f64,
    t: f64,
    h: &dyn TestFn,
    g: &dyn TestFn,
) -> f64 {
    let rh = h.support_radius();
    let rg = g.support_radius();
    assert!(rh.is_finite() && rg.is_finite(), "supports must be finite");
    let width = (4.0 * a * t).sqrt().min(0.3).max(1e-3);
    let mut outer = |u: f64| {
        let gv = g.eval(u);
        if gv == 0.0 {
            return 0.0;
        }
        gv * heat_apply(mode, a, t, &|v| h.eval(v), (-rh, rh), u)
    };
    sigma2 * panel_integral(&mut outer, -rg, rg, width.min(0.25))
}

/// Static pairing `σ² ⟨h, g⟩_{L²}`.
#[must_use]
pub fn static_covariance(sigma2: f64, h: &dyn TestFn, g: &dyn TestFn) -> f64 {
    let r = h.support_radius().min(g.support_radius());
    assert!(r.is_finite());
    let mut f = |u: f64| h.eval(u) * g.eval(u);
    sigma2 * panel_integral(&mut f, -r, r, 0.1)
}

/// Dirichlet covariance on `[0, L]` by sine series:
/// `σ² Σ_k e^{-a μ_k t} ⟨h, e_k⟩ ⟨g, e_k⟩` with `e_k = √(2/L) sin(kπu/L)`.
#[must_use]
pub fn dirichlet_cov_spectral(
    length: f64,
    kmax: usize,
    a: f64,
    sigma2: f64,
    t: f64,
    h: &dyn TestFn,
    g: &dyn TestFn,
) -> f64 {
    let rh = h.support_radius().min(length);
    let rg = g.support_radius().min(length);
    let mut acc = 0.0;
    for k in 1..=kmax {
        let freq = k as f64 * std::f64::consts::PI / length;
        let basis = |u: f64| (2.0 / length).sqrt() * (freq * u).sin();
        let width = (0.2_f64).min(std::f64::consts::PI / (4.0 * freq));
        let mut fh = |u: f64| h.eval(u) * basis(u);
        let mut fg = |u: f64| g.eval(u) * basis(u);
        let ch = panel_integral(&mut fh, 0.0, rh, width);
        let cg = panel_integral(&mut fg, 0.0, rg, width);
        acc += (-a * freq * freq * t).exp() * ch * cg;
    }
    sigma2 * acc
}

/// Exact spectral simulator for the stationary Dirichlet Ornstein–Uhlenbeck
/// field on `[0, L]`:
///
/// ```text
/// Y_t = Σ_k y_k(t) e_k,   dy_k = -a μ_k y_k dt + √(2 a σ² μ_k) dB_k,
/// ```
///
/// so each mode is an independent scalar OU process with stationary variance
/// `σ²` and the spatial law of `Y` is white noise with variance `σ²`.
#[derive(Debug, Clone)]
pub struct SpectralOu {
    /// Interval length `L`.
    pub length: f64,
    /// Diffusivity `a`.
    pub a: f64,
    /// Stationary mode variance `σ²`.
    pub sigma2: f64,
    mu: Vec<f64>,
}

impl SpectralOu {
    /// Builds the simulator with modes `k = 1..=kmax`.
    #[must_use]
    pub fn new(length: f64, kmax: usize, a: f64, sigma2: f64) -> Self {
        let mu = (1..=kmax)
            .map(|k| {
                let f = k as f64 * std::f64::consts::PI / length;
                f * f
            })
            .collect();
        Self {
            length,
            a,
            sigma2,
            mu,
        }
    }

    /// Number of modes.
    #[must_use]
    pub fn kmax(&self) -> usize {
        self.mu.len()
    }

    /// Eigenvalue `μ_k` (zero-based index).
    #[must_use]
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.mu[k]
    }

    /// Basis value `e_k(u)` (zero-based index).
    #[must_use]
    pub fn basis(&self, k: usize, u: f64) -> f64 {
        (2.0 / self.length).sqrt() * (self.mu[k].sqrt() * u).sin()
    }

    /// Exact pairing `⟨e_k, ι_ε^u⟩ = ε^{-1} ∫_u^{u+ε} e_k`.
    #[must_use]
    pub fn box_pair(&self, k: usize, u: f64, eps: f64) -> f64 {
        let f = self.mu[k].sqrt();
        (2.0 / self.length).sqrt() * ((f * u).cos() - (f * (u + eps)).cos()) / (f * eps)
    }

    /// Draws stationary mode amplitudes `y_k ~ N(0, σ²)` i.i.d.
    #[must_use]
    pub fn sample_stationary(&self, rng: &mut Rng) -> Vec<f64> {
        let sd = self.sigma2.sqrt();
        self.mu
            .iter()
            .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect()
    }

    /// Advances all modes by `dt` with the exact OU transition.
    pub fn step(&self, y: &mut [f64], dt: f64, rng: &mut Rng) {
        for (k, yk) in y.iter_mut().enumerate() {
            let decay = (-self.a * self.mu[k] * dt).exp();
            let sd = (self.sigma2 * (1.0 - decay * decay)).sqrt();
            *yk = decay * *yk
                + sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        }
    }

    /// Field value `Σ_k y_k e_k(u)`.
    #[must_use]
    pub fn field(&self, y: &[f64], u: f64) -> f64 {
        y.iter()
            .enumerate()
            .map(|(k, yk)| yk * self.basis(k, u))
            .sum()
    }

    /// Pairing against precomputed mode coefficients.
    #[must_use]
    pub fn pair(&self, y: &[f64], coeffs: &[f64]) -> f64 {
        y.iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }
}

/// `∫₀ᵗ∫₀ᵗ e^{-r|s-s'|} ds ds' = 2 (rt - 1 + e^{-rt}) / r²`.
#[must_use]
pub fn double_exp_integral(r: f64, t: f64) -> f64 {
    if r * t < 1e-8 {
        t * t * (1.0 - r * t / 3.0)
    } else {
        2.0 * (r * t - 1.0 + (-r * t).exp()) / (r * r)
    }
}

/// Second-chaos variance of a time-integrated quadratic difference
/// functional of the stationary spectral field.
///
/// For `D = ∫₀ᵗ Σ_{k,j} G_{kj} (y_k(s) y_j(s) - σ² δ_{kj}) ds` with a
/// symmetric coefficient matrix `G` (row-major `kmax × kmax`),
///
/// ```text
/// E[D²] = 2 σ⁴ Σ_{k,j} G_{kj}² ∫₀ᵗ∫₀ᵗ e^{-a(μ_k+μ_j)|s-s'|} ds ds'.
/// ```
#[must_use]
pub fn chaos_quadratic_variance(ou: &SpectralOu, t: f64, g: &[f64]) -> f64 {
    let k = ou.kmax();
    assert_eq!(g.len(), k * k, "coefficient matrix must be kmax × kmax");
    let mut acc = 0.0;
    for i in 0..k {
        for j in 0..k {
            let gij = g[i * k + j];
            if gij == 0.0 {
                continue;
            }
            acc += gij * gij * double_exp_integral(ou.a * (ou.mu[i] + ou.mu[j]), t);
        }
    }
    2.0 * ou.sigma2 * ou.sigma2 * acc
}

/// Discrete white noise on a grid of spacing `h`: i.i.d. `N(0, 1/h)` values,
/// so that `h Σ w_i φ(u_i)` has variance `≈ ‖φ‖²_{L²}`.
#[must_use]
pub fn white_noise_grid(h: f64, len: usize, rng: &mut Rng) -> Vec<f64> {
    let sd = (1.0 / h).sqrt();
    (0..len)
        .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect()
}

/// Brownian path pinned to zero at the grid point nearest the origin,
/// extended independently in both directions with increments `N(0, h)`.
#[must_use]
pub fn brownian_grid(u0: f64, h: f64, len: usize, rng: &mut Rng) -> Vec<f64> {
    let mut values = vec![0.0; len];
    // Index of the grid point closest to the origin.
    let pin = (-u0 / h).round().clamp(0.0, (len - 1) as f64) as usize;
    let sd = h.sqrt();
    for i in (0..pin).rev() {
        values[i] = values[i + 1]
            + sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
    }
    for i in pin + 1..len {
        values[i] = values[i - 1]
            + sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
    }
    values
}
