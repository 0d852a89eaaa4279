//! Observation kernels: the half-open box kernel, the origin cutoff weight,
//! their product kernel, and the induced mollifier.

use super::TestFn;
use crate::quad::gl16;

/// Box kernel `ι^b_ε(v) = ε⁻¹·1_{(b, b+ε]}(v)` with half-open support.
#[inline]
#[must_use]
pub fn iota(eps: f64, base: f64, v: f64) -> f64 {
    if v > base && v <= base + eps {
        1.0 / eps
    } else {
        0.0
    }
}

/// Origin cutoff weight `χ_ε(u) = min(1, |u|/ε)`.
#[inline]
#[must_use]
pub fn chi(eps: f64, u: f64) -> f64 {
    (u.abs() / eps).min(1.0)
}

/// Product kernel `ρ_ε(u, v) = χ_ε(u)·ι^u_ε(v)`: a box average of width `ε`
/// to the right of `u`, damped near the origin in its first argument.
#[inline]
#[must_use]
pub fn rho(eps: f64, u: f64, v: f64) -> f64 {
    chi(eps, u) * iota(eps, u, v)
}

/// Mollification `ρ̌_ε(G)(u) = χ_ε(u)·ε⁻¹ ∫_u^{u+ε} G(v) dv` of a smooth
/// profile, by Gauss–Legendre on the window.
#[must_use]
pub fn mollify(eps: f64, g: &dyn TestFn, u: f64) -> f64 {
    chi(eps, u) * gl16(&mut |v| g.eval(v), u, u + eps) / eps
}

/// A two-argument observation kernel `ρ(u, v)` with rectangular-bounded
/// support, enough structure to evaluate the contraction functionals by
/// quadrature.
pub trait Kernel2: Send + Sync {
    /// Kernel value at `(u, v)`.
    fn eval(&self, u: f64, v: f64) -> f64;
    /// Support interval of `v ↦ ρ(u, v)`.
    fn support_v(&self, u: f64) -> (f64, f64);
    /// Support interval of `u ↦ ρ(u, v)`.
    fn support_u(&self, v: f64) -> (f64, f64);
    /// Interval of first arguments on which the kernel row can differ from
    /// its far-field form (used to locate suprema; rows outside behave like
    /// translates). `None` when every row must be scanned over `u_scan`.
    fn u_transition(&self) -> (f64, f64);
    /// Scan range for suprema and `L⁴` integrals in the first argument.
    fn u_scan(&self) -> (f64, f64);
}

/// The box kernel `(u, v) ↦ ι^u_ε(v)` as a two-argument kernel.
#[derive(Debug, Clone)]
pub struct IotaKernel {
    /// Box width.
    pub eps: f64,
}

impl Kernel2 for IotaKernel {
    fn eval(&self, u: f64, v: f64) -> f64 {
        iota(self.eps, u, v)
    }

    fn support_v(&self, u: f64) -> (f64, f64) {
        (u, u + self.eps)
    }

    fn support_u(&self, v: f64) -> (f64, f64) {
        (v - self.eps, v)
    }

    fn u_transition(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn u_scan(&self) -> (f64, f64) {
        (-4.0, 4.0)
    }
}

/// The damped kernel `(u, v) ↦ χ_ε(u)·ι^u_ε(v)`.
#[derive(Debug, Clone)]
pub struct RhoKernel {
    /// Box width and damping collar.
    pub eps: f64,
}

impl Kernel2 for RhoKernel {
    fn eval(&self, u: f64, v: f64) -> f64 {
        rho(self.eps, u, v)
    }

    fn support_v(&self, u: f64) -> (f64, f64) {
        (u, u + self.eps)
    }

    fn support_u(&self, v: f64) -> (f64, f64) {
        (v - self.eps, v)
    }

    fn u_transition(&self) -> (f64, f64) {
        (-self.eps, self.eps)
    }

    fn u_scan(&self) -> (f64, f64) {
        (-4.0, 4.0)
    }
}

/// A scalar multiple `c·ρ` of a base kernel, for homogeneity checks.
pub struct ScaledKernel<K> {
    /// Base kernel.
    pub inner: K,
    /// Scalar factor.
    pub factor: f64,
}

impl<K: Kernel2> Kernel2 for ScaledKernel<K> {
    fn eval(&self, u: f64, v: f64) -> f64 {
        self.factor * self.inner.eval(u, v)
    }

    fn support_v(&self, u: f64) -> (f64, f64) {
        self.inner.support_v(u)
    }

    fn support_u(&self, v: f64) -> (f64, f64) {
        self.inner.support_u(v)
    }

    fn u_transition(&self) -> (f64, f64) {
        self.inner.u_transition()
    }

    fn u_scan(&self) -> (f64, f64) {
        self.inner.u_scan()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_panels;
    use crate::testfn::builtin;

    #[test]
    fn box_kernel_half_open_support() {
        let eps = 0.5;
        assert_eq!(iota(eps, 0.0, 0.25), 2.0);
        assert_eq!(iota(eps, 0.0, 0.5), 2.0, "right endpoint included");
        assert_eq!(iota(eps, 0.0, 0.0), 0.0, "left endpoint excluded");
        assert_eq!(iota(eps, 0.0, 0.75), 0.0);
        assert_eq!(iota(eps, 1.0, 1.25), 2.0, "translates with the base point");
    }

    #[test]
    fn cutoff_weight_ramp() {
        assert_eq!(chi(0.5, 0.0), 0.0);
        assert_eq!(chi(0.5, 0.25), 0.5);
        assert_eq!(chi(0.5, -0.25), 0.5);
        assert_eq!(chi(0.5, 0.5), 1.0);
        assert_eq!(chi(0.5, 3.0), 1.0);
    }

    #[test]
    fn cutoff_deficit_fourth_power_mass() {
        // ∫ |χ_ε - 1|⁴ du = 2ε/5, comfortably below the 2ε budget.
        let eps = 0.3;
        let mass = integrate_panels(
            &mut |u: f64| (chi(eps, u) - 1.0).powi(4),
            &[-eps, 0.0, eps],
            1e-12,
        );
        assert!((mass - 2.0 * eps / 5.0).abs() < 1e-10, "got {mass}");
        assert!(mass <= 2.0 * eps);
    }

    #[test]
    fn rho_separates_into_weight_times_box() {
        let eps = 0.25;
        assert_eq!(rho(eps, 0.1, 0.2), chi(eps, 0.1) * 4.0);
        assert_eq!(rho(eps, 0.1, 0.4), 0.0, "outside the box");
        assert_eq!(rho(eps, 0.0, 0.1), 0.0, "fully damped at the origin");
        assert_eq!(rho(eps, 1.0, 1.1), 4.0, "undamped far from the origin");
    }

    #[test]
    fn mollifier_reproduces_smooth_profiles_far_from_origin() {
        let g = builtin("s:gauss").unwrap();
        // Away from the origin χ = 1 and the one-sided window average
        // converges to G at first order in the width.
        let u = 1.0;
        let fine = mollify(1e-4, g.as_ref(), u);
        assert!(
            (fine - g.eval(u)).abs() < 1e-4,
            "half-width bias bound: {}",
            (fine - g.eval(u)).abs()
        );
        // Relative to the window midpoint the average is second-order.
        let e1 = (mollify(0.2, g.as_ref(), u) - g.eval(u + 0.1)).abs();
        assert!(e1 < 5e-3, "centered comparison should be second-order, got {e1}");
    }

    #[test]
    fn kernel_supports_are_consistent() {
        let k = RhoKernel { eps: 0.25 };
        for &(u, v) in &[(0.3, 0.4), (-0.1, 0.05), (0.0, 0.2), (1.0, 1.3)] {
            let val = k.eval(u, v);
            let (lo, hi) = k.support_v(u);
            if val != 0.0 {
                assert!(v > lo && v <= hi);
                let (ulo, uhi) = k.support_u(v);
                assert!(u >= ulo && u < uhi);
            }
        }
    }
}
