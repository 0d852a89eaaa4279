//! One-dimensional quadrature: fixed-order Gauss–Legendre panels with
//! adaptive bisection.
//!
//! Nodes and weights are computed at first use by Newton iteration on the
//! Legendre recurrence (no hard-coded tables) and cached.

use once_cell::sync::Lazy;

/// Order of the base Gauss–Legendre rule.
const GL_ORDER: usize = 16;

/// Nodes/weights of the `GL_ORDER`-point rule on `[-1, 1]`.
static GL16: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| gauss_legendre(GL_ORDER));

/// Computes nodes and weights of the `m`-point Gauss–Legendre rule on `[-1,1]`.
///
/// Newton iteration on `P_m` from the Chebyshev-based initial guess; accurate
/// to machine precision for the small orders used here.
#[must_use]
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 2);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        // Initial guess: Chebyshev point.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_m(x) and P_m'(x) by the three-term recurrence.
            let (mut p0, mut p1) = (1.0_f64, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = (m as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Fixed 16-point Gauss–Legendre estimate on `[a, b]`.
pub fn gl16<F: FnMut(f64) -> f64 + ?Sized>(f: &mut F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = (&GL16.0, &GL16.1);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Bisects a panel whenever the two-half estimate disagrees with the whole-
/// panel estimate by more than the locally allotted tolerance. The first six
/// levels always subdivide, so features wider than `(b-a)/64` are guaranteed
/// to be seen; narrower spikes need their location declared via
/// [`integrate_panels`].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gl16(&mut f, a, b);
    adaptive(&mut f, a, b, whole, tol.max(1e-15), 0)
}

fn adaptive<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gl16(f, a, mid);
    let right = gl16(f, mid, b);
    let sum = left + right;
    if depth >= 6 && ((sum - whole).abs() <= tol || depth >= 40) {
        return sum;
    }
    adaptive(f, a, mid, left, 0.5 * tol, depth + 1) + adaptive(f, mid, b, right, 0.5 * tol, depth + 1)
}

/// Integral over a list of panel boundaries (adaptive inside each panel).
///
/// Useful for piecewise-defined integrands whose kinks are known a priori.
pub fn integrate_panels<F: FnMut(f64) -> f64>(mut f: F, cuts: &[f64], tol: f64) -> f64 {
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        acc += integrate(&mut f, w[0], w[1], tol);
    }
    acc
}
