//! Special constructions around the origin: the normalized compact bump, the
//! glued linear ramp, the Tanaka ramp, and the smooth origin cutoff.

use super::TestFn;
use crate::error::{CoreError, Result};
use crate::quad::{gl16, integrate};
use once_cell::sync::Lazy;

/// Normalizing constant of the bump: `1 / ∫₀¹ exp(-1/(v(1-v))) dv`.
static BUMP_NORM: Lazy<f64> = Lazy::new(|| {
    let raw = integrate(&mut |v: f64| (-1.0 / (v - v * v)).exp(), 0.0, 1.0, 1e-14);
    1.0 / raw
});

/// Cumulative table of the normalized bump at `t = i/1024`, built by
/// panel-exact Gauss–Legendre so queries only integrate inside one cell.
static BUMP_CDF: Lazy<Vec<f64>> = Lazy::new(|| {
    let cells = 1024;
    let mut acc = Vec::with_capacity(cells + 1);
    acc.push(0.0);
    let mut total = 0.0;
    for i in 0..cells {
        let a = i as f64 / cells as f64;
        let b = (i + 1) as f64 / cells as f64;
        total += gl16(&mut bump_eval, a, b);
        acc.push(total);
    }
    acc
});

/// Value of the normalized bump `a` at `v`.
fn bump_eval(v: f64) -> f64 {
    if v <= 1e-3 || v >= 1.0 - 1e-3 {
        // The true value underflows to 0 well before these cutoffs; guarding
        // here keeps the Laurent prefactors of the derivatives finite.
        return 0.0;
    }
    *BUMP_NORM * (-1.0 / (v - v * v)).exp()
}

/// Derivative of `exp`-composed profiles: given `h = e^g(v)` and the first
/// four derivatives of `g`, returns `h^(order)`.
fn exp_faa(h: f64, g: [f64; 4], order: usize) -> f64 {
    let [g1, g2, g3, g4] = g;
    match order {
        0 => h,
        1 => g1 * h,
        2 => (g2 + g1 * g1) * h,
        3 => (g3 + 3.0 * g1 * g2 + g1.powi(3)) * h,
        4 => (g4 + 4.0 * g1 * g3 + 3.0 * g2 * g2 + 6.0 * g1 * g1 * g2 + g1.powi(4)) * h,
        _ => panic!("analytic derivatives stop at order {}", super::MAX_DERIV),
    }
}

/// Derivative of the normalized bump at `v`, orders `0..=4`.
fn bump_deriv(order: usize, v: f64) -> f64 {
    let h = bump_eval(v);
    if h == 0.0 {
        return 0.0;
    }
    // a = c·e^{-1/w} with w = v - v²; write g = -1/w, y = 1 - 2v = w'.
    let w = v - v * v;
    let y = 1.0 - 2.0 * v;
    let g1 = y / (w * w);
    let g2 = (-2.0 * w - 2.0 * y * y) / w.powi(3);
    let g3 = (12.0 * y * w + 6.0 * y.powi(3)) / w.powi(4);
    let g4 = (-24.0 * w * w - 72.0 * y * y * w - 24.0 * y.powi(4)) / w.powi(5);
    exp_faa(h, [g1, g2, g3, g4], order)
}

/// Antiderivative `A(t) = ∫₀^t a(v) dv` of the normalized bump, clamped to
/// `[0, 1]` outside the support.
#[must_use]
pub fn bump_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let cdf = &*BUMP_CDF;
    let cells = cdf.len() - 1;
    let idx = ((t * cells as f64) as usize).min(cells - 1);
    let left = idx as f64 / cells as f64;
    cdf[idx] + gl16(&mut bump_eval, left, t)
}

/// The normalized smooth bump supported on `(0, 1)` with unit integral.
#[derive(Debug, Clone, Default)]
pub struct BumpA;

impl BumpA {
    #[must_use]
    pub fn new() -> Self {
        Self
    }
}

impl TestFn for BumpA {
    fn eval(&self, u: f64) -> f64 {
        bump_eval(u)
    }

    fn deriv(&self, order: usize, u: f64) -> f64 {
        bump_deriv(order, u)
    }

    fn support_radius(&self) -> f64 {
        1.5
    }

    fn name(&self) -> &str {
        "bump-a"
    }
}

/// The glued ramp `ψ_{a,b}(u) = u·φ_{a,b}(u)·1_{u>0}`, where the plateau
/// function `φ_{a,b}(u) = 1 - ∫₀^u a·bump(a(v-b)) dv` equals `1` on
/// `(-∞, b]` and `0` on `[b + 1/a, ∞)`.
///
/// On `(0, b]` the ramp is exactly the identity, beyond `b + 1/a` it is
/// exactly zero, and every even one-sided derivative vanishes at the origin.
/// Derivatives at `u = 0` are reported as right-sided limits.
#[derive(Debug, Clone)]
pub struct PsiGlue {
    scale: f64,
    offset: f64,
    name: String,
}

impl PsiGlue {
    /// Builds the ramp; `scale` and `offset` must be positive.
    pub fn new(scale: f64, offset: f64) -> Result<Self> {
        if !(scale > 0.0) || !(offset > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "psi-glue",
                message: format!("scale and offset must be positive, got ({scale}, {offset})"),
            });
        }
        Ok(Self {
            scale,
            offset,
            name: format!("sdir:psi-glue:{scale}:{offset}"),
        })
    }

    /// The plateau factor `φ_{a,b}` at `u`.
    #[must_use]
    pub fn phi(&self, u: f64) -> f64 {
        1.0 - bump_cdf(self.scale * (u - self.offset))
    }

    /// Derivative of the plateau factor, orders `0..=4`:
    /// `φ^(j)(u) = -a^j·bump^(j-1)(a(u-b))` for `j ≥ 1`.
    #[must_use]
    pub fn phi_deriv(&self, order: usize, u: f64) -> f64 {
        if order == 0 {
            return self.phi(u);
        }
        -self.scale.powi(order as i32) * bump_deriv(order - 1, self.scale * (u - self.offset))
    }
}

impl TestFn for PsiGlue {
    fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else {
            u * self.phi(u)
        }
    }

    fn deriv(&self, order: usize, u: f64) -> f64 {
        if order == 0 {
            return self.eval(u);
        }
        if u < 0.0 {
            return 0.0;
        }
        // (u·φ)^(j) = j·φ^(j-1) + u·φ^(j); at u = 0 this is the right limit.
        order as f64 * self.phi_deriv(order - 1, u) + u * self.phi_deriv(order, u)
    }

    fn support_radius(&self) -> f64 {
        self.offset + 1.0 / self.scale + 0.5
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// The Tanaka ramp `h_ε`: `0` on `(-∞, 0]`, `u²/2ε` on `(0, ε]`, `u - ε/2`
/// beyond.
///
/// Its second derivative is exactly the indicator kernel `ι⁰_ε` with the
/// half-open convention, so it converts two-sided boundary sums into box
/// averages. It is `C¹` but not `C²`; `deriv(2, ·)` returns the almost-
/// everywhere value and higher orders return `0`.
#[derive(Debug, Clone)]
pub struct Tanaka {
    eps: f64,
    name: String,
}

impl Tanaka {
    /// Builds the ramp of width `eps > 0`.
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "tanaka",
                message: format!("width must be positive, got {eps}"),
            });
        }
        Ok(Self {
            eps,
            name: format!("tanaka:{eps}"),
        })
    }
}

impl TestFn for Tanaka {
    fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else if u <= self.eps {
            u * u / (2.0 * self.eps)
        } else {
            u - self.eps / 2.0
        }
    }

    fn deriv(&self, order: usize, u: f64) -> f64 {
        match order {
            0 => self.eval(u),
            1 => {
                if u <= 0.0 {
                    0.0
                } else if u <= self.eps {
                    u / self.eps
                } else {
                    1.0
                }
            }
            2 => super::kernels::iota(self.eps, 0.0, u),
            _ => 0.0,
        }
    }

    fn support_radius(&self) -> f64 {
        f64::INFINITY
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// The smooth origin cutoff `Φ_m(u) = ∫₀^{m|u|} a(v) dv`: `0` at the origin,
/// identically `1` for `|u| ≥ 1/m`, even, and flat at `u = 0`.
#[derive(Debug, Clone)]
pub struct CutoffPhi {
    m: f64,
    name: String,
}

impl CutoffPhi {
    /// Builds the cutoff at scale `m > 0` (transition width `1/m`).
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "cutoff-phi",
                message: format!("scale must be positive, got {m}"),
            });
        }
        Ok(Self {
            m,
            name: format!("cutoff-phi:{m}"),
        })
    }
}

impl TestFn for CutoffPhi {
    fn eval(&self, u: f64) -> f64 {
        bump_cdf(self.m * u.abs())
    }

    fn deriv(&self, order: usize, u: f64) -> f64 {
        if order == 0 {
            return self.eval(u);
        }
        let s = if u >= 0.0 { 1.0 } else { -1.0 };
        let inner = bump_deriv(order - 1, self.m * u.abs());
        // Odd-order derivatives pick up the sign of u; even orders are even.
        let parity = if order % 2 == 1 { s } else { 1.0 };
        parity * self.m.powi(order as i32) * inner
    }

    fn support_radius(&self) -> f64 {
        f64::INFINITY
    }

    fn name(&self) -> &str {
        &self.name
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_panels;

    fn numeric_deriv(f: &dyn TestFn, ord: usize, u: f64, h: f64) -> f64 {
        let g = |v: f64| f.deriv(ord - 1, v);
        (g(u - 2.0 * h) - 8.0 * g(u - h) + 8.0 * g(u + h) - g(u + 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn bump_is_normalized_symmetric_and_compact() {
        let a = BumpA::new();
        let mass = integrate_panels(&mut |v| a.eval(v), &[0.0, 0.25, 0.5, 0.75, 1.0], 1e-12);
        assert!((mass - 1.0).abs() < 1e-10, "unit mass, got {mass}");
        assert!((a.eval(0.3) - a.eval(0.7)).abs() < 1e-15, "symmetric about 1/2");
        assert_eq!(a.eval(0.0), 0.0);
        assert_eq!(a.eval(1.0), 0.0);
        assert_eq!(a.eval(-0.2), 0.0);
        assert_eq!(a.eval(1.2), 0.0);
        let center = a.eval(0.5);
        assert!(
            (center - *BUMP_NORM * (-4.0_f64).exp()).abs() < 1e-12,
            "center value c·e^{{-4}}"
        );
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let a = BumpA::new();
        for ord in 1..=4 {
            for &v in &[0.2, 0.35, 0.5, 0.65, 0.8] {
                let an = a.deriv(ord, v);
                let nu = numeric_deriv(&a, ord, v, 1e-4);
                assert!(
                    (an - nu).abs() < 1e-4 * (1.0 + an.abs()),
                    "order {ord} at {v}: analytic {an} vs numeric {nu}"
                );
            }
        }
    }

    #[test]
    fn bump_cdf_interpolates_between_exact_anchors() {
        assert_eq!(bump_cdf(0.0), 0.0);
        assert_eq!(bump_cdf(1.0), 1.0);
        assert!((bump_cdf(0.5) - 0.5).abs() < 1e-12, "symmetry pins A(1/2)=1/2");
        assert!(bump_cdf(0.3) < bump_cdf(0.4));
    }

    #[test]
    fn psi_glue_is_identity_then_zero() {
        let psi = PsiGlue::new(2.0, 0.75).unwrap();
        for &u in &[0.1, 0.3, 0.5, 0.75] {
            assert!(
                (psi.eval(u) - u).abs() < 1e-14,
                "identity on (0, offset]: ψ({u}) = {}",
                psi.eval(u)
            );
        }
        assert_eq!(psi.eval(-0.5), 0.0);
        assert_eq!(psi.eval(0.0), 0.0);
        // offset + 1/scale = 1.25 is where the support ends.
        assert_eq!(psi.eval(1.25), 0.0);
        assert_eq!(psi.eval(2.0), 0.0);
        assert!(psi.eval(1.0) > 0.0 && psi.eval(1.0) < 1.0);
    }

    #[test]
    fn psi_glue_has_dirichlet_boundary_derivatives() {
        let psi = PsiGlue::new(2.0, 0.75).unwrap();
        assert_eq!(psi.eval(0.0), 0.0);
        assert!((psi.deriv(1, 0.0) - 1.0).abs() < 1e-15, "right slope is 1");
        assert_eq!(psi.deriv(2, 0.0), 0.0, "second right-derivative vanishes");
        assert_eq!(psi.deriv(4, 0.0), 0.0, "fourth right-derivative vanishes");
    }

    #[test]
    fn psi_glue_derivatives_match_finite_differences_in_transition() {
        let psi = PsiGlue::new(2.0, 0.75).unwrap();
        for ord in 1..=4 {
            for &u in &[0.85, 1.0, 1.15] {
                let an = psi.deriv(ord, u);
                let nu = numeric_deriv(&psi, ord, u, 1e-4);
                assert!(
                    (an - nu).abs() < 2e-4 * (1.0 + an.abs()),
                    "order {ord} at {u}: analytic {an} vs numeric {nu}"
                );
            }
        }
    }

    #[test]
    fn tanaka_values_and_slopes() {
        let eps = 0.25;
        let h = Tanaka::new(eps).unwrap();
        assert_eq!(h.eval(0.0), 0.0);
        assert_eq!(h.eval(-1.0), 0.0);
        assert!((h.eval(eps) - eps / 2.0).abs() < 1e-15);
        assert!((h.eval(eps / 2.0) - eps / 8.0).abs() < 1e-15);
        assert!((h.eval(2.0 * eps) - 1.5 * eps).abs() < 1e-15);
        // The slope is continuous at both break points.
        assert!((h.deriv(1, eps) - 1.0).abs() < 1e-15);
        assert_eq!(h.deriv(1, 0.0), 0.0);
        // The second derivative is the half-open box kernel.
        assert_eq!(h.deriv(2, 0.0), 0.0);
        assert_eq!(h.deriv(2, eps), 1.0 / eps);
        assert_eq!(h.deriv(2, eps + 1e-12), 0.0);
    }

    #[test]
    fn tanaka_curvature_times_plateau_is_box_kernel() {
        // For widths not exceeding the plateau offset, multiplying the Tanaka
        // curvature by the plateau factor reproduces the box kernel exactly.
        let eps = 0.5;
        let psi = PsiGlue::new(2.0, 0.75).unwrap();
        let h = Tanaka::new(eps).unwrap();
        for idx in 0..=400 {
            let u = -1.0 + 3.0 * idx as f64 / 400.0;
            let lhs = h.deriv(2, u) * psi.phi(u);
            let rhs = super::super::kernels::iota(eps, 0.0, u);
            assert_eq!(lhs, rhs, "mismatch at u = {u}");
        }
    }

    #[test]
    fn cutoff_phi_saturates_and_is_even() {
        let m = 4.0;
        let phi = CutoffPhi::new(m).unwrap();
        assert_eq!(phi.eval(0.0), 0.0);
        assert_eq!(phi.eval(1.0 / m), 1.0);
        assert_eq!(phi.eval(-1.0 / m), 1.0);
        assert_eq!(phi.eval(5.0), 1.0);
        assert!((phi.eval(0.5 / m) - 0.5).abs() < 1e-12, "half-way by symmetry");
        assert!((phi.eval(0.2) - phi.eval(-0.2)).abs() < 1e-15);
        for j in 0..=4 {
            assert_eq!(phi.deriv(j, 0.0), if j == 0 { 0.0 } else { 0.0 });
            assert_eq!(phi.deriv(j.max(1), 0.6), 0.0, "flat beyond the collar");
        }
    }

    #[test]
    fn cutoff_phi_derivatives_match_finite_differences() {
        let phi = CutoffPhi::new(4.0).unwrap();
        for ord in 1..=3 {
            for &u in &[-0.2, -0.12, 0.08, 0.19] {
                let an = phi.deriv(ord, u);
                let nu = numeric_deriv(&phi, ord, u, 2e-5);
                assert!(
                    (an - nu).abs() < 2e-3 * (1.0 + an.abs()),
                    "order {ord} at {u}: analytic {an} vs numeric {nu}"
                );
            }
        }
    }
}
