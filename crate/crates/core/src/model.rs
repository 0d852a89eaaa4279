//! Model parameters, derived constants, the equilibrium product measure, and
//! the finite simulation window.
//!
//! # State layout
//!
//! The infinite chain is truncated to a periodic window of `W` sites holding
//! the lattice interval `[origin, origin + W)`. The window is sized so that
//! every site whose moving-frame coordinate `(x + c_n t)/n` lies within the
//! buffer `[-B, B]` exists for all `t ≤ t_max`, plus the whole track of the
//! bath site `-⌊c_n t⌋`. Positions are fixed; only neighbour lookups wrap
//! around the ring. Test functions decay by `|u| = B`, so the wrap seam lives
//! entirely in statistical tail territory.

use crate::error::{CoreError, Result};
use crate::rng::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

/// Parameters of the chain and its three dynamical mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Rate of the Gamma marginal (inverse temperature).
    pub beta: f64,
    /// Shape of the Gamma marginal minus one; marginal is `Gamma(λ+1, β)`.
    pub lambda: f64,
    /// Strength of the Hamiltonian drift.
    pub alpha: f64,
    /// Rate of the exchange (swap) noise per bond.
    pub gamma: f64,
    /// Drift-scaling exponent: drift carries `n^{-κ}`.
    pub kappa: f64,
    /// Bath-scaling exponent: the bath generator carries `n^{-δ}`.
    pub delta: f64,
    /// Scaling parameter (number of sites per unit macroscopic length).
    pub n: u32,
    /// Buffer half-width `B` in macroscopic units around the moving frame.
    pub window_buffer: u32,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            beta: 5.0,
            lambda: 4.0,
            alpha: 1.0,
            gamma: 1.0,
            kappa: 0.5,
            delta: 0.0,
            n: 32,
            window_buffer: 10,
        }
    }
}

impl ModelParams {
    /// Equilibrium mean `ρ = (λ+1)/β`.
    #[must_use]
    pub fn rho(&self) -> f64 {
        (self.lambda + 1.0) / self.beta
    }

    /// Equilibrium variance `σ² = (λ+1)/β²`.
    #[must_use]
    pub fn sigma2(&self) -> f64 {
        (self.lambda + 1.0) / (self.beta * self.beta)
    }

    /// Frame velocity `c_n = 2αρ n^{2-κ}`.
    #[must_use]
    pub fn c_n(&self) -> f64 {
        2.0 * self.alpha * self.rho() * (self.n as f64).powf(2.0 - self.kappa)
    }

    /// Checks parameter domains.
    pub fn validate(&self) -> Result<()> {
        let fail = |name: &'static str, message: String| {
            Err(CoreError::InvalidParameter { name, message })
        };
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return fail("beta", format!("must be positive and finite, got {}", self.beta));
        }
        if !(self.lambda > -1.0) || !self.lambda.is_finite() {
            return fail("lambda", format!("must exceed -1, got {}", self.lambda));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return fail("alpha", format!("must be nonnegative, got {}", self.alpha));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return fail("gamma", format!("must be nonnegative, got {}", self.gamma));
        }
        if !self.kappa.is_finite() {
            return fail("kappa", "must be finite".into());
        }
        if !self.delta.is_finite() {
            return fail("delta", "must be finite".into());
        }
        if self.n == 0 {
            return fail("n", "must be at least 1".into());
        }
        if self.window_buffer == 0 {
            return fail("window_buffer", "must be at least 1".into());
        }
        Ok(())
    }
}

/// Constants derived from [`ModelParams`] and the simulation horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Equilibrium mean.
    pub rho: f64,
    /// Equilibrium variance.
    pub sigma2: f64,
    /// Frame velocity `c_n`.
    pub c_n: f64,
    /// Macroscopic horizon the window was sized for.
    pub t_max: f64,
    /// Number of sites in the periodic window.
    pub window: usize,
    /// Lattice index stored in slot 0.
    pub origin: i64,
}

/// Sizes the periodic window for horizon `t_max` and computes equilibrium
/// constants.
pub fn derive_params(p: &ModelParams, t_max: f64) -> Result<DerivedParams> {
    p.validate()?;
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(CoreError::InvalidParameter {
            name: "t_max",
            message: format!("must be nonnegative and finite, got {t_max}"),
        });
    }
    let c_n = p.c_n();
    let track = (c_n * t_max).ceil() as i64;
    let buffer = (p.window_buffer as i64) * (p.n as i64);
    let window = (track + 2 * buffer + 2) as usize;
    let origin = -(track + buffer + 1);
    Ok(DerivedParams {
        rho: p.rho(),
        sigma2: p.sigma2(),
        c_n,
        t_max,
        window,
        origin,
    })
}

/// Gradient `W'(u) = β - λ/u` of the single-site potential
/// `W(u) = βu - λ log u`.
#[inline]
#[must_use]
pub fn potential_grad(u: f64, beta: f64, lambda: f64) -> f64 {
    beta - lambda / u
}

/// Deterministic high-probability bound on the largest site value seen over a
/// run, from the Gamma tail inequality
/// `P(ξ ≥ (k + √(2kx) + x)/β) ≤ e^{-x}` with `k = λ+1`:
/// a union bound over `10⁵·W` effective draws fixes `x = log(10⁵·W)`.
#[must_use]
pub fn max_site_estimate(p: &ModelParams, window: usize) -> f64 {
    let k = p.lambda + 1.0;
    let x = (1e5 * window.max(1) as f64).ln();
    (k + (2.0 * k * x).sqrt() + x) / p.beta
}

/// The chain state: site values on the periodic window plus microscopic time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    /// Site values; slot `j` holds lattice site `origin + j`.
    pub sites: Vec<f64>,
    /// Lattice index of slot 0.
    pub origin: i64,
    /// Microscopic time `τ = t·n²`.
    pub tau: f64,
}

impl ChainState {
    /// Number of sites in the window.
    #[must_use]
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    /// True when the window is empty (never the case for valid states).
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Ring slot of lattice site `x`.
    #[inline]
    #[must_use]
    pub fn slot(&self, x: i64) -> usize {
        let w = self.sites.len() as i64;
        (((x - self.origin) % w + w) % w) as usize
    }

    /// Value at lattice site `x` (ring lookup).
    #[inline]
    #[must_use]
    pub fn value(&self, x: i64) -> f64 {
        self.sites[self.slot(x)]
    }

    /// Asserts strict positivity of every site, reporting the first offender.
    pub fn check_positive(&self) -> Result<()> {
        for (j, &v) in self.sites.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoreError::NumericalBlowup {
                    site: self.origin + j as i64,
                    tau: self.tau,
                    value: v,
                });
            }
        }
        Ok(())
    }
}

/// The Gamma marginal `Gamma(λ+1, β)` of the invariant product measure.
pub fn gibbs_marginal(p: &ModelParams) -> Result<Gamma<f64>> {
    Gamma::new(p.lambda + 1.0, 1.0 / p.beta).map_err(|e| CoreError::InvalidParameter {
        name: "lambda",
        message: format!("invalid Gamma marginal: {e}"),
    })
}

/// Draws `count` i.i.d. values from the equilibrium marginal.
pub fn gibbs_draws(p: &ModelParams, count: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    let marginal = gibbs_marginal(p)?;
    Ok((0..count).map(|_| marginal.sample(rng)).collect())
}

/// Samples the equilibrium product measure on the whole window at `τ = 0`.
pub fn sample_gibbs(p: &ModelParams, d: &DerivedParams, rng: &mut Rng) -> Result<ChainState> {
    let sites = gibbs_draws(p, d.window, rng)?;
    let state = ChainState {
        sites,
        origin: d.origin,
        tau: 0.0,
    };
    state.check_positive()?;
    Ok(state)
}
