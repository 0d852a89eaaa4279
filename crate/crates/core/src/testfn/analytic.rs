//! Closed-form test functions: polynomial-times-Gaussian profiles, the
//! essentially flat Gaussian, and functions glued from independent halves.

use super::TestFn;
use std::sync::Arc;

/// `H(u) = P(u)·e^{-u²}` for a polynomial `P`.
///
/// The derivative of such a profile is again of the same form with
/// `P ← P' - 2uP`, so all derivatives are precomputed as coefficient vectors
/// and evaluated by Horner's rule.
#[derive(Debug, Clone)]
pub struct PolyGauss {
    name: String,
    /// `derivs[j]` holds the polynomial factor of the `j`-th derivative.
    derivs: Vec<Vec<f64>>,
}

fn poly_eval(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

/// `P'(u) - 2uP(u)` as a coefficient vector.
fn gauss_step(p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 1];
    for (i, &c) in p.iter().enumerate() {
        if i >= 1 {
            out[i - 1] += c * i as f64;
        }
        out[i + 1] -= 2.0 * c;
    }
    out
}

impl PolyGauss {
    /// Builds the profile with polynomial coefficients `coeffs` (low order
    /// first).
    #[must_use]
    pub fn new(name: &str, coeffs: &[f64]) -> Self {
        let mut derivs = vec![coeffs.to_vec()];
        for j in 0..super::MAX_DERIV {
            let next = gauss_step(&derivs[j]);
            derivs.push(next);
        }
        Self {
            name: name.to_string(),
            derivs,
        }
    }
}

impl TestFn for PolyGauss {
    fn eval(&self, u: f64) -> f64 {
        poly_eval(&self.derivs[0], u) * (-u * u).exp()
    }

    fn deriv(&self, order: usize, u: f64) -> f64 {
        poly_eval(&self.derivs[order], u) * (-u * u).exp()
    }

    fn support_radius(&self) -> f64 {
        10.0
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// `H(u) = exp(-1/u² - u²)`, extended by `0` at the origin.
///
/// Every derivative vanishes at `u = 0`: writing `H = e^g` with
/// `g = -u⁻² - u²`, each derivative is `H` times a Laurent polynomial in `u`,
/// and the essential flatness of `e^{-1/u²}` wins.
#[derive(Debug, Clone, Default)]
pub struct EssGauss;

impl EssGauss {
    #[must_use]
    pub fn new() -> Self {
        Self
    }
}

impl TestFn for EssGauss {
    fn eval(&self, u: f64) -> f64 {
        if u.abs() < 1e-3 {
            return 0.0;
        }
        (-1.0 / (u * u) - u * u).exp()
    }

    fn deriv(&self, order: usize, u: f64) -> f64 {
        // Below |u| = 1e-3 the value e^{-1/u²} underflows to exactly 0, and
        // the Laurent prefactors would overflow; the true limit is 0.
        if u.abs() < 1e-3 {
            return 0.0;
        }
        let h = self.eval(u);
        let g1 = 2.0 * u.powi(-3) - 2.0 * u;
        let g2 = -6.0 * u.powi(-4) - 2.0;
        let g3 = 24.0 * u.powi(-5);
        let g4 = -120.0 * u.powi(-6);
        match order {
            0 => h,
            1 => g1 * h,
            2 => (g2 + g1 * g1) * h,
            3 => (g3 + 3.0 * g1 * g2 + g1.powi(3)) * h,
            4 => {
                (g4 + 4.0 * g1 * g3 + 3.0 * g2 * g2 + 6.0 * g1 * g1 * g2 + g1.powi(4)) * h
            }
            _ => panic!("analytic derivatives stop at order {}", super::MAX_DERIV),
        }
    }

    fn support_radius(&self) -> f64 {
        10.0
    }

    fn name(&self) -> &str {
        "s0:ess-gauss"
    }
}

/// A function glued from independent halves: `minus` on `u < 0` and `plus`
/// on `u ≥ 0`.
pub struct TwoSided {
    name: String,
    minus: Option<Arc<dyn TestFn>>,
    plus: Option<Arc<dyn TestFn>>,
}

impl TwoSided {
    /// Supported on the right half-line only.
    #[must_use]
    pub fn right(name: &str, plus: Arc<dyn TestFn>) -> Self {
        Self {
            name: name.to_string(),
            minus: None,
            plus: Some(plus),
        }
    }

    /// Supported on the left half-line only.
    #[must_use]
    pub fn left(name: &str, minus: Arc<dyn TestFn>) -> Self {
        Self {
            name: name.to_string(),
            minus: Some(minus),
            plus: None,
        }
    }

    /// Independent profiles on the two half-lines.
    #[must_use]
    pub fn glue(name: &str, minus: Arc<dyn TestFn>, plus: Arc<dyn TestFn>) -> Self {
        Self {
            name: name.to_string(),
            minus: Some(minus),
            plus: Some(plus),
        }
    }

    fn side(&self, u: f64) -> Option<&Arc<dyn TestFn>> {
        if u < 0.0 {
            self.minus.as_ref()
        } else {
            self.plus.as_ref()
        }
    }
}

impl TestFn for TwoSided {
    fn eval(&self, u: f64) -> f64 {
        self.side(u).map_or(0.0, |f| f.eval(u))
    }

    fn deriv(&self, order: usize, u: f64) -> f64 {
        self.side(u).map_or(0.0, |f| f.deriv(order, u))
    }

    fn support_radius(&self) -> f64 {
        let r = |f: &Option<Arc<dyn TestFn>>| f.as_ref().map_or(0.0, |g| g.support_radius());
        r(&self.minus).max(r(&self.plus))
    }

    fn name(&self) -> &str {
        &self.name
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Five-point central difference of order `ord` around `u`.
    fn numeric_deriv(f: &dyn TestFn, ord: usize, u: f64) -> f64 {
        let h = 1e-3;
        let g = |v: f64| f.deriv(ord - 1, v);
        (g(u - 2.0 * h) - 8.0 * g(u - h) + 8.0 * g(u + h) - g(u + 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn polygauss_derivatives_match_finite_differences() {
        let f = PolyGauss::new("t", &[0.5, -1.0, 0.0, 2.0]);
        for ord in 1..=4 {
            for &u in &[-1.7, -0.3, 0.0, 0.9, 2.4] {
                let a = f.deriv(ord, u);
                let n = numeric_deriv(&f, ord, u);
                assert!(
                    (a - n).abs() < 1e-6 * (1.0 + a.abs()),
                    "order {ord} at {u}: analytic {a} vs numeric {n}"
                );
            }
        }
    }

    #[test]
    fn polygauss_first_derivative_closed_form() {
        // H = u e^{-u²}  =>  H' = (1 - 2u²) e^{-u²}.
        let f = PolyGauss::new("odd", &[0.0, 1.0]);
        for &u in &[-2.0_f64, -0.5, 0.0, 0.5, 1.0, 3.0] {
            let want = (1.0 - 2.0 * u * u) * (-u * u).exp();
            assert!((f.deriv(1, u) - want).abs() < 1e-14);
        }
        assert_eq!(f.deriv(2, 0.0), 0.0, "odd profile has H''(0)=0");
    }

    #[test]
    fn essgauss_derivatives_match_finite_differences() {
        let f = EssGauss::new();
        for ord in 1..=4 {
            for &u in &[-1.5, -0.8, 0.6, 1.1, 2.0] {
                let a = f.deriv(ord, u);
                let n = numeric_deriv(&f, ord, u);
                assert!(
                    (a - n).abs() < 1e-5 * (1.0 + a.abs()),
                    "order {ord} at {u}: analytic {a} vs numeric {n}"
                );
            }
        }
    }

    #[test]
    fn essgauss_is_flat_near_origin_and_decays() {
        let f = EssGauss::new();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(5e-4), 0.0);
        assert!(f.eval(0.2) < f.eval(1.0), "rises away from the flat spot");
        assert!(f.eval(4.0) < f.eval(1.0), "Gaussian tail decays");
        let peak = f.eval(1.0);
        assert!((peak - (-2.0_f64).exp()).abs() < 1e-15, "H(1) = e^{{-2}}");
    }

    #[test]
    fn two_sided_restricts_support() {
        let odd = Arc::new(PolyGauss::new("odd", &[0.0, 1.0]));
        let right = TwoSided::right("r", odd.clone());
        assert_eq!(right.eval(-0.5), 0.0);
        assert!(right.eval(0.5) > 0.0);
        assert_eq!(right.eval(0.0), 0.0, "u e^{{-u²}} vanishes at 0 anyway");
        assert_eq!(right.deriv(1, -0.5), 0.0);
        assert!((right.deriv(1, 0.5) - odd.deriv(1, 0.5)).abs() < 1e-15);

        let left = TwoSided::left("l", odd.clone());
        assert_eq!(left.eval(0.5), 0.0);
        assert!((left.eval(-0.5) - odd.eval(-0.5)).abs() < 1e-15);

        let glued = TwoSided::glue("g", odd.clone(), odd.clone());
        for &u in &[-1.0, -0.2, 0.3, 1.4] {
            assert!((glued.eval(u) - odd.eval(u)).abs() < 1e-15);
        }
    }
}
