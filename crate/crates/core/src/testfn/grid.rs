//! Lattice samplings of test functions and the discrete difference operators.

use super::TestFn;

/// Samples of a function at lattice points `x/n`, `x ∈ [x0, x0 + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    /// Sampled values; entry `j` is the value at `(x0 + j)/n`.
    pub values: Vec<f64>,
    /// Scaling parameter.
    pub n: u32,
    /// First lattice index.
    pub x0: i64,
}

impl GridFunction {
    /// Samples `f` at `x/n` for `x ∈ [x0, x0 + len)`.
    #[must_use]
    pub fn sample(f: &dyn TestFn, n: u32, x0: i64, len: usize) -> Self {
        let nn = n as f64;
        let values = (0..len)
            .map(|j| f.eval((x0 + j as i64) as f64 / nn))
            .collect();
        Self { values, n, x0 }
    }

    /// Value at lattice index `x`; zero outside the sampled range.
    #[inline]
    #[must_use]
    pub fn value(&self, x: i64) -> f64 {
        let j = x - self.x0;
        if j < 0 || j as usize >= self.values.len() {
            0.0
        } else {
            self.values[j as usize]
        }
    }
}

/// Discrete gradient `(∇⁺_n f)(x) = n·(f((x+1)/n) - f(x/n))`, returned on the
/// same index range (the last entry uses the zero extension).
#[must_use]
pub fn discrete_grad(g: &GridFunction) -> GridFunction {
    let n = g.n as f64;
    let values = (0..g.values.len())
        .map(|j| {
            let x = g.x0 + j as i64;
            n * (g.value(x + 1) - g.value(x))
        })
        .collect();
    GridFunction {
        values,
        n: g.n,
        x0: g.x0,
    }
}

/// Discrete Laplacian `(Δ_n f)(x) = n²·(f((x+1)/n) + f((x-1)/n) - 2f(x/n))`,
/// zero-extended at the ends.
#[must_use]
pub fn discrete_laplacian(g: &GridFunction) -> GridFunction {
    let n2 = (g.n as f64) * (g.n as f64);
    let values = (0..g.values.len())
        .map(|j| {
            let x = g.x0 + j as i64;
            n2 * (g.value(x + 1) + g.value(x - 1) - 2.0 * g.value(x))
        })
        .collect();
    GridFunction {
        values,
        n: g.n,
        x0: g.x0,
    }
}

/// Scaled lattice square norm `‖H‖²_{2,n} = n⁻¹ Σ_x H(x/n)²`, summed over the
/// effective support.
#[must_use]
pub fn norm_2n_sq(f: &dyn TestFn, n: u32) -> f64 {
    let radius = f.support_radius();
    assert!(
        radius.is_finite(),
        "lattice norms need a decaying function, `{}` has unbounded support",
        f.name()
    );
    let nn = n as f64;
    let xmax = (radius * nn).ceil() as i64 + 2;
    let mut total = 0.0;
    for x in -xmax..=xmax {
        let v = f.eval(x as f64 / nn);
        total += v * v;
    }
    total / nn
}
