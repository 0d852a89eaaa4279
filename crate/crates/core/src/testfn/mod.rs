//! Test functions, observation kernels, lattice samplings, and function-space
//! norms.
//!
//! # Spaces
//!
//! Observables are paired with smooth, rapidly decaying test functions. Three
//! nested classes matter for the boundary behaviour at the origin:
//!
//! * `Schwartz` — smooth with all polynomial-weighted derivatives bounded;
//! * `Dirichlet` — Schwartz functions whose even one-sided derivatives vanish
//!   at the origin (odd functions are the canonical examples);
//! * `Zero` — functions all of whose derivatives vanish at the origin.
//!
//! A fourth tag, `OneSided`, marks functions glued from independent halves
//! (vanishing on one side); these discriminate between absorbing and
//! transparent behaviour at the origin.
//!
//! # Conventions
//!
//! * Derivatives are available analytically up to order 4.
//! * The indicator kernels use half-open support `(u, u+ε]`.
//! * Weighted sup norms are `max_{0≤i,j≤k} sup_u (1+|u|)^i |H^(j)(u)|`.

pub mod analytic;
pub mod grid;
pub mod kernels;
pub mod sobolev;
pub mod special;

pub use analytic::{EssGauss, PolyGauss, TwoSided};
pub use grid::{discrete_grad, discrete_laplacian, norm_2n_sq, GridFunction};
pub use kernels::{chi, iota, mollify, rho, IotaKernel, Kernel2, RhoKernel, ScaledKernel};
pub use sobolev::Sampled;
pub use special::{BumpA, CutoffPhi, PsiGlue, Tanaka};

use crate::error::{CoreError, Result};
use std::sync::Arc;

/// Highest derivative order provided analytically.
pub const MAX_DERIV: usize = 4;

/// A smooth test function with analytic derivatives.
pub trait TestFn: Send + Sync {
    /// Value at `u`.
    fn eval(&self, u: f64) -> f64;

    /// `order`-th derivative at `u`; `order = 0` is the value itself.
    /// Supported up to [`MAX_DERIV`].
    fn deriv(&self, order: usize, u: f64) -> f64;

    /// Radius beyond which the function (and its derivatives) are negligible
    /// for quadrature and lattice sums. `INFINITY` for non-decaying objects.
    fn support_radius(&self) -> f64;

    /// Registry identifier.
    fn name(&self) -> &str;
}

/// Boundary class of a test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SpaceTag {
    /// Plain rapidly decreasing functions with no boundary condition.
    Schwartz,
    /// Even one-sided derivatives vanish at the origin.
    Dirichlet,
    /// All derivatives vanish at the origin.
    Zero,
    /// Supported on a single half-line.
    OneSided,
}

/// Looks up a built-in test function by identifier.
///
/// Supported identifiers:
/// * `s:gauss` — `e^{-u²}`;
/// * `s:poly-gauss:<k>` — `u^k e^{-u²}` (even `k` keeps no boundary
///   condition);
/// * `sdir:odd-gauss:<k>` — `u^k e^{-u²}` with odd `k`;
/// * `s0:ess-gauss` — `exp(-1/u² - u²)`;
/// * `sdir:psi-glue:<a>:<b>` — the glued ramp `u·φ_{a,b}(u)·1_{u>0}`;
/// * `half:right-odd-gauss` — `u e^{-u²} 1_{u>0}`;
/// * `half:left-odd-gauss` — `u e^{-u²} 1_{u<0}`;
/// * `tanaka:<eps>` — the one-sided Tanaka ramp;
/// * `cutoff-phi:<n>` — the smooth origin cutoff `Φ_n`;
/// * `bump-a` — the normalized bump on `(0,1)`.
pub fn builtin(id: &str) -> Result<Arc<dyn TestFn>> {
    let bad = |message: String| CoreError::InvalidConfig {
        field: "testfn".into(),
        message,
    };
    let parts: Vec<&str> = id.split(':').collect();
    let f: Arc<dyn TestFn> = match parts.as_slice() {
        ["s", "gauss"] => Arc::new(PolyGauss::new("s:gauss", &[1.0])),
        ["s", "poly-gauss", k] => {
            let k: usize = k.parse().map_err(|_| bad(format!("bad power in `{id}`")))?;
            let mut coeffs = vec![0.0; k + 1];
            coeffs[k] = 1.0;
            Arc::new(PolyGauss::new(id, &coeffs))
        }
        ["sdir", "odd-gauss", k] => {
            let k: usize = k.parse().map_err(|_| bad(format!("bad power in `{id}`")))?;
            if k % 2 == 0 {
                return Err(bad(format!("`{id}`: power must be odd")));
            }
            let mut coeffs = vec![0.0; k + 1];
            coeffs[k] = 1.0;
            Arc::new(PolyGauss::new(id, &coeffs))
        }
        ["s0", "ess-gauss"] => Arc::new(EssGauss::new()),
        ["sdir", "psi-glue", a, b] => {
            let a: f64 = a.parse().map_err(|_| bad(format!("bad scale in `{id}`")))?;
            let b: f64 = b.parse().map_err(|_| bad(format!("bad offset in `{id}`")))?;
            Arc::new(PsiGlue::new(a, b)?)
        }
        ["half", "right-odd-gauss"] => Arc::new(TwoSided::right(
            "half:right-odd-gauss",
            Arc::new(PolyGauss::new("s:poly-gauss:1", &[0.0, 1.0])),
        )),
        ["half", "left-odd-gauss"] => Arc::new(TwoSided::left(
            "half:left-odd-gauss",
            Arc::new(PolyGauss::new("s:poly-gauss:1", &[0.0, 1.0])),
        )),
        ["tanaka", eps] => {
            let eps: f64 = eps.parse().map_err(|_| bad(format!("bad width in `{id}`")))?;
            Arc::new(Tanaka::new(eps)?)
        }
        ["cutoff-phi", n] => {
            let n: f64 = n.parse().map_err(|_| bad(format!("bad scale in `{id}`")))?;
            Arc::new(CutoffPhi::new(n)?)
        }
        ["bump-a"] => Arc::new(BumpA::new()),
        _ => return Err(bad(format!("unknown test function `{id}`"))),
    };
    Ok(f)
}

/// Canonical members of each boundary class, used by the verification suites.
#[must_use]
pub fn builtin_family(space: SpaceTag) -> Vec<Arc<dyn TestFn>> {
    let ids: &[&str] = match space {
        SpaceTag::Schwartz => &["s:gauss", "s:poly-gauss:2"],
        SpaceTag::Dirichlet => &["sdir:odd-gauss:1", "sdir:odd-gauss:3"],
        SpaceTag::Zero => &["s0:ess-gauss"],
        SpaceTag::OneSided => &["half:right-odd-gauss", "half:left-odd-gauss"],
    };
    ids.iter().map(|id| builtin(id).expect("builtin id")).collect()
}

/// Weighted sup norm `max_{0≤i,j≤k} sup_u (1+|u|)^i |H^(j)(u)|`, evaluated by
/// dense scan over the effective support.
#[must_use]
pub fn norm_inf_k(f: &dyn TestFn, k: usize) -> f64 {
    assert!(k <= MAX_DERIV, "analytic derivatives stop at order {MAX_DERIV}");
    let radius = f.support_radius();
    let r = if radius.is_finite() { radius + 1.0 } else { 50.0 };
    let m = 80_001;
    let mut best = 0.0_f64;
    for j in 0..=k {
        for idx in 0..m {
            let u = -r + 2.0 * r * (idx as f64) / ((m - 1) as f64);
            let dv = f.deriv(j, u).abs();
            if dv == 0.0 {
                continue;
            }
            let w = (1.0 + u.abs()).powi(k as i32);
            // (1+|u|)^i is monotone in i, so only i = k matters for the max
            // together with i = 0; intermediate powers are dominated.
            best = best.max(dv).max(w * dv);
        }
    }
    best
}
