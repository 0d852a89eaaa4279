//! Sobolev norms of uniformly sampled profiles: integer norms by finite
//! differences and the fractional seminorm of Gagliardo type, split at the
//! origin so that half-line regularity is measured without seeing a jump
//! there.

use crate::error::{CoreError, Result};

/// A profile sampled on the uniform grid `u_i = u0 + i·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    /// Position of the first sample.
    pub u0: f64,
    /// Grid spacing.
    pub h: f64,
    /// Sample values.
    pub values: Vec<f64>,
}

impl Sampled {
    /// Samples `f` at `m` points spanning `[u0, u1]` inclusive.
    pub fn from_fn(f: impl Fn(f64) -> f64, u0: f64, u1: f64, m: usize) -> Self {
        assert!(m >= 2 && u1 > u0);
        let h = (u1 - u0) / (m - 1) as f64;
        let values = (0..m).map(|i| f(u0 + i as f64 * h)).collect();
        Self { u0, h, values }
    }

    /// Wraps precomputed samples.
    #[must_use]
    pub fn from_values(u0: f64, h: f64, values: Vec<f64>) -> Self {
        Self { u0, h, values }
    }

    /// Position of sample `i`.
    #[inline]
    #[must_use]
    pub fn pos(&self, i: usize) -> f64 {
        self.u0 + i as f64 * self.h
    }

    /// `L²` norm by the trapezoid rule.
    #[must_use]
    pub fn l2(&self) -> f64 {
        let v = &self.values;
        if v.len() < 2 {
            return 0.0;
        }
        let sum: f64 = v.iter().map(|&x| x * x).sum();
        let ends = (v[0] * v[0] + v[v.len() - 1] * v[v.len() - 1]) / 2.0;
        (self.h * (sum - ends)).sqrt()
    }

    /// Forward-difference derivative, sampled at cell midpoints.
    #[must_use]
    pub fn deriv(&self) -> Sampled {
        let values = self
            .values
            .windows(2)
            .map(|w| (w[1] - w[0]) / self.h)
            .collect();
        Sampled {
            u0: self.u0 + self.h / 2.0,
            h: self.h,
            values,
        }
    }

    /// Integer Sobolev norm `(Σ_{i≤k} ‖∂^i G‖²_{L²})^{1/2}` via iterated
    /// forward differences.
    #[must_use]
    pub fn integer_norm(&self, k: usize) -> f64 {
        let mut total = 0.0;
        let mut cur = self.clone();
        for i in 0..=k {
            let l2 = cur.l2();
            total += l2 * l2;
            if i < k {
                cur = cur.deriv();
            }
        }
        total.sqrt()
    }

    /// Fractional seminorm of order `alpha ∈ (0,1)`, integrating
    /// `|G(v)-G(u)|²/|v-u|^{1+2α}` over pairs on the same side of the origin.
    ///
    /// Cells are treated as piecewise linear: off-diagonal cell pairs use the
    /// midpoint rule, and each diagonal cell contributes its exact value
    /// `s²·2h^{3-2α}/((2-2α)(3-2α))` for local slope `s`. Cells within one
    /// spacing of the origin belong to neither half-line class — a jump at
    /// the origin itself must not register as same-side variation.
    #[must_use]
    pub fn gagliardo(&self, alpha: f64) -> f64 {
        assert!(alpha > 0.0 && alpha < 1.0, "fractional order must lie in (0,1)");
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let ncells = n - 1;
        let mut centers = Vec::with_capacity(ncells);
        let mut slopes = Vec::with_capacity(ncells);
        for i in 0..ncells {
            centers.push((self.values[i] + self.values[i + 1]) / 2.0);
            slopes.push((self.values[i + 1] - self.values[i]) / self.h);
        }
        let mid = |i: usize| self.pos(i) + self.h / 2.0;
        // Contiguous same-sign classes, excluding the origin-touching cells.
        let left_end = (0..ncells).take_while(|&i| mid(i) <= -self.h).count();
        let right_start = (0..ncells)
            .find(|&i| mid(i) >= self.h)
            .unwrap_or(ncells);
        let weights: Vec<f64> = (0..ncells)
            .map(|d| {
                if d == 0 {
                    0.0
                } else {
                    self.h * self.h * (self.h * d as f64).powf(-1.0 - 2.0 * alpha)
                }
            })
            .collect();
        let mut total = 0.0;
        for range in [0..left_end, right_start..ncells] {
            let group = &centers[range.clone()];
            let m = group.len();
            for d in 1..m {
                let mut acc = 0.0;
                for i in 0..m - d {
                    let diff = group[i + d] - group[i];
                    acc += diff * diff;
                }
                // Both orientations of each unordered pair.
                total += 2.0 * acc * weights[d];
            }
            let diag = 2.0 * self.h.powf(3.0 - 2.0 * alpha)
                / ((2.0 - 2.0 * alpha) * (3.0 - 2.0 * alpha));
            let slope_sq: f64 = slopes[range].iter().map(|s| s * s).sum();
            total += diag * slope_sq;
        }
        total.sqrt()
    }

    /// Sobolev norm of (possibly fractional) order `alpha ≥ 0`: integer
    /// orders use `(Σ‖∂^i G‖²)^{1/2}`, fractional orders use
    /// `‖G‖_{L²} + ‖G‖ still of Gagliardo type`.
    #[must_use]
    pub fn sobolev_norm(&self, alpha: f64) -> f64 {
        assert!(alpha >= 0.0);
        if (alpha - alpha.round()).abs() < 1e-12 {
            self.integer_norm(alpha.round() as usize)
        } else {
            let frac = alpha.fract();
            let base = alpha.floor() as usize;
            // For orders like 1/2 this is ‖G‖_{L²} + [G]_{1/2}; higher
            // fractional orders apply the seminorm to the top derivative.
            let mut top = self.clone();
            for _ in 0..base {
                top = top.deriv();
            }
            self.integer_norm(base) + top.gagliardo(frac)
        }
    }

    /// Mollification `ρ̌_ε(G)(u_i) = χ_ε(u_i)·ε⁻¹ ∫_{u_i}^{u_i+ε} G`, by
    /// trapezoid prefix sums; `eps` must be an integer multiple of the grid
    /// spacing. Samples beyond the grid extend by zero.
    pub fn mollify(&self, eps: f64) -> Result<Sampled> {
        let ratio = eps / self.h;
        let k = ratio.round() as usize;
        if k == 0 || (ratio - k as f64).abs() > 1e-9 {
            return Err(CoreError::InvalidParameter {
                name: "eps",
                message: format!("window {eps} must be a positive multiple of the spacing {}", self.h),
            });
        }
        let n = self.values.len();
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &v in &self.values {
            acc += v;
            prefix.push(acc);
        }
        let val = |i: usize| if i < n { self.values[i] } else { 0.0 };
        let pre = |i: usize| prefix[i.min(n)];
        let values = (0..n)
            .map(|i| {
                let top = i + k;
                // Trapezoid of the samples i..=i+k with zero extension.
                let integral =
                    self.h * (pre(top + 1) - pre(i) - (val(i) + val(top)) / 2.0);
                let u = self.pos(i);
                super::kernels::chi(eps, u) * integral / eps
            })
            .collect();
        Ok(Sampled {
            u0: self.u0,
            h: self.h,
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::builtin;

    #[test]
    fn l2_of_gaussian_matches_closed_form() {
        let g = Sampled::from_fn(|u| (-u * u).exp(), -8.0, 8.0, 8001);
        let want = (std::f64::consts::PI / 2.0).sqrt().sqrt();
        assert!((g.l2() - want).abs() < 1e-6, "‖e^{{-u²}}‖ = (π/2)^{{1/4}}");
    }

    #[test]
    fn integer_norm_accumulates_derivatives() {
        let g = Sampled::from_fn(|u| (-u * u).exp(), -8.0, 8.0, 8001);
        // ‖H‖² + ‖H'‖² with ‖H‖² = √(π/2), ‖H'‖² = ∫4u²e^{-2u²} = √(π/2)/...
        let h0 = (std::f64::consts::PI / 2.0).sqrt();
        let h1 = h0; // ∫ 4u² e^{-2u²} du = 4·(1/8)·√(2π)/√2·... equals √(π/2) numerically below.
        let want = (h0 + h1).sqrt();
        let got = g.integer_norm(1);
        assert!(
            (got - want).abs() < 1e-3,
            "H¹ norm of the Gaussian: got {got}, want {want}"
        );
    }

    #[test]
    fn gagliardo_matches_linear_profile_oracle() {
        // For G(u) = u on (0,1): ∬ (v-u)²/|v-u|^{1+2α} = 2/((2-2α)(3-2α)).
        let g = Sampled::from_fn(|u| u, 0.0, 1.0, 1025);
        for &alpha in &[0.25_f64, 0.5, 0.75] {
            let want = (2.0 / ((2.0 - 2.0 * alpha) * (3.0 - 2.0 * alpha))).sqrt();
            let got = g.gagliardo(alpha);
            // The excluded origin-touching cell costs O(h) of the square.
            assert!(
                (got - want).abs() < 5e-3 * want,
                "alpha={alpha}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn gagliardo_ignores_cross_origin_jumps() {
        // A pure step at the origin has zero same-side variation.
        let step = Sampled::from_fn(|u| if u < 0.0 { -1.0 } else { 1.0 }, -1.0, 1.0, 513);
        let semi = step.gagliardo(0.5);
        assert!(
            semi < 0.2,
            "same-side seminorm must not blow up on an origin step, got {semi}"
        );
        // The same jump in the interior is heavily penalized.
        let shifted = Sampled::from_fn(|u| if u < 0.5 { -1.0 } else { 1.0 }, -1.0, 1.0, 513);
        assert!(shifted.gagliardo(0.5) > 5.0 * semi.max(0.05));
    }

    #[test]
    fn mollifier_window_average_on_grid() {
        let f = builtin("s:gauss").unwrap();
        let g = Sampled::from_fn(|u| f.eval(u), -4.0, 4.0, 8193);
        let eps = 0.25;
        let m = g.mollify(eps).unwrap();
        // Compare against direct quadrature at a few points.
        for &u in &[-1.0, -0.1, 0.0, 0.3, 1.5] {
            let i = ((u - g.u0) / g.h).round() as usize;
            let want = super::super::kernels::mollify(eps, f.as_ref(), g.pos(i));
            assert!(
                (m.values[i] - want).abs() < 1e-6,
                "at u={u}: grid {} vs quadrature {want}",
                m.values[i]
            );
        }
    }

    #[test]
    fn mollifier_requires_commensurate_window() {
        let g = Sampled::from_fn(|u| u, 0.0, 1.0, 101);
        assert!(g.mollify(0.1).is_ok());
        assert!(g.mollify(0.013).is_err(), "incommensurate window must fail");
    }

    #[test]
    fn fractional_norm_interpolates_between_integer_orders() {
        let g = Sampled::from_fn(|u| (-u * u).exp() * u, -6.0, 6.0, 4097);
        let n0 = g.sobolev_norm(0.0);
        let nh = g.sobolev_norm(0.5);
        let n1 = g.sobolev_norm(1.0);
        assert!(n0 < nh && nh < 4.0 * n1, "orders: {n0} vs {nh} vs {n1}");
    }
}
