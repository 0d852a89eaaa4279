//! Time evolution of the chain: Hamiltonian drift, exchange noise, and the
//! moving heat bath, composed by Strang splitting in microscopic time.
//!
//! # Mechanisms
//!
//! Over a microscopic step `h` the three mechanisms act as
//! `drift(h/2) ∘ (exchange ⊕ bath)(h) ∘ drift(h/2)`:
//!
//! * **Drift** — the coupled system `dξ_x/dτ = α n^{-κ} ξ_x (ξ_{x+1} - ξ_{x-1})`,
//!   advanced by an exponential midpoint rule (second order, positivity
//!   preserving, exactly conserving `Σξ` in the limit equation).
//! * **Exchange** — each of the `W` ring bonds swaps its endpoints at rate
//!   `γ`; simulated exactly as a superposed Poisson stream of total rate
//!   `γW` with uniform bond marks.
//! * **Bath** — the single site `-⌊c_n s⌋` follows
//!   `dξ = n^{-δ}(λ/ξ - β) dτ + √(2 n^{-δ}) dB`, whose invariant law is the
//!   equilibrium marginal. Integrated by Euler–Maruyama with adaptive caps
//!   and reflection at zero; segments split exactly at exchange events and
//!   at the times the bath site hops left.
//!
//! The exchange events and bath-site hop times subdivide each joint stage, so
//! the exchange/bath composition is exact in law up to the Euler–Maruyama
//! error inside segments.

use crate::error::{CoreError, Result};
use crate::model::{max_site_estimate, ChainState, DerivedParams, ModelParams};
use crate::rng::Rng;
use rand::Rng as _;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

/// Scheduling policy for the bond-swap noise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExchangeScheduling {
    /// Exact event-driven scheduling: exponential waiting times merged with
    /// bath-site hops, swaps interleaved with bath segments.
    #[default]
    #[serde(rename = "exact")]
    Exact,
    /// Per-stage Poisson swap counts applied in randomized order after the
    /// bath update; trades exactness for speed with an `O((γ·dt)²)` per-bond
    /// bias from the dropped interleaving.
    #[serde(rename = "tau-leap")]
    TauLeap,
}

/// Integration controls for a single trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Macroscopic horizon; the trajectory runs to `τ = t_max·n²`.
    pub t_max: f64,
    /// Macroscopic times at which observers sample (nondecreasing, in
    /// `[0, t_max]`). A leading `0.0` samples the initial state.
    pub sample_times: Vec<f64>,
    /// Override for the microscopic step; `None` picks a step from the
    /// stability analysis of the three mechanisms.
    pub dt_micro: Option<f64>,
    /// Bond-swap scheduling policy.
    #[serde(default)]
    pub exchange: ExchangeScheduling,
}

impl IntegratorConfig {
    /// A horizon with `k` equally spaced sampling times (plus the start).
    #[must_use]
    pub fn uniform(t_max: f64, k: usize) -> Self {
        let mut sample_times = vec![0.0];
        for i in 1..=k {
            sample_times.push(t_max * i as f64 / k as f64);
        }
        Self {
            t_max,
            sample_times,
            dt_micro: None,
            exchange: ExchangeScheduling::Exact,
        }
    }
}

/// Counters describing what the integrator actually did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    /// Number of outer Strang steps.
    pub steps: u64,
    /// Number of executed bond swaps.
    pub exchange_events: u64,
    /// Number of Euler–Maruyama substeps inside bath segments.
    pub bath_substeps: u64,
    /// Number of reflections at zero in the bath update.
    pub reflections: u64,
    /// Number of bath-site hops covered.
    pub bath_hops: u64,
}

/// Result of a trajectory run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Final state at `τ = t_max·n²`.
    pub state: ChainState,
    /// Integrator counters.
    pub log: EventLog,
}

/// Hooks through which observables watch a trajectory.
///
/// `accumulate` fires at the left endpoint of every outer step with the step
/// width in macroscopic time, for Riemann sums of time integrals; `sample`
/// fires exactly at the configured sampling times.
pub trait Observer {
    /// Left-endpoint accumulation over `[s, s+ds)`.
    fn accumulate(
        &mut self,
        p: &ModelParams,
        d: &DerivedParams,
        state: &ChainState,
        s: f64,
        ds: f64,
    );

    /// Exact-time sampling at macroscopic time `s`.
    fn sample(&mut self, p: &ModelParams, d: &DerivedParams, state: &ChainState, s: f64);
}

/// Lattice site refreshed by the bath at macroscopic time `s`.
#[inline]
#[must_use]
pub fn bath_site(c_n: f64, s: f64) -> i64 {
    -((c_n * s).floor() as i64)
}

/// Advances the drift mechanism by `h` in microscopic time with the
/// exponential midpoint rule (frozen-neighbour log update, two stages).
pub fn drift_step(p: &ModelParams, state: &mut ChainState, h: f64, scratch: &mut Vec<f64>) {
    if p.alpha == 0.0 || h == 0.0 {
        return;
    }
    let coef = p.alpha * (p.n as f64).powf(-p.kappa);
    let w = state.sites.len();
    scratch.clear();
    scratch.reserve(w);
    // Stage 1: half-step predictor from the current neighbour field.
    for j in 0..w {
        let up = state.sites[if j + 1 == w { 0 } else { j + 1 }];
        let dn = state.sites[if j == 0 { w - 1 } else { j - 1 }];
        let g = coef * (up - dn);
        scratch.push(state.sites[j] * (g * h / 2.0).exp());
    }
    // Stage 2: full step using the midpoint neighbour field.
    for j in 0..w {
        let up = scratch[if j + 1 == w { 0 } else { j + 1 }];
        let dn = scratch[if j == 0 { w - 1 } else { j - 1 }];
        let g = coef * (up - dn);
        state.sites[j] *= (g * h).exp();
    }
}

/// One Euler–Maruyama bath substep on value `xi`, returning the new value and
/// the consumed time (capped adaptively). `eb = n^{-δ}`.
fn bath_substep(
    p: &ModelParams,
    xi: f64,
    remaining: f64,
    eb: f64,
    rng: &mut Rng,
    log: &mut EventLog,
) -> (f64, f64) {
    let drift = eb * (p.lambda / xi - p.beta);
    let mut h = remaining;
    if p.lambda == 0.0 {
        // Constant coefficients: the Gaussian increment is exact in law for
        // any step, so only the reflection approximation needs a cap. Tie the
        // noise quantum to 5% of the stationary mean 1/β; value-proportional
        // caps would trap the walk near zero (multiplicative noise with
        // negative log-drift never escapes).
        let quantum = 0.05 / p.beta;
        h = h.min(quantum * quantum / (2.0 * eb));
    } else {
        // Never let the deterministic move exceed a quarter of the value.
        h = h.min(0.25 * xi / drift.abs());
        // Resolve the 1/ξ singularity scale.
        h = h.min(0.1 * xi * xi / (eb * p.lambda));
        // Keep the noise quantum below half the value so reflections stay
        // rare; the λ/ξ repulsion supplies the positive log-drift that lets
        // the walk climb back out.
        h = h.min(xi * xi / (8.0 * eb));
    }
    let z: f64 = StandardNormal.sample(rng);
    let mut next = xi + drift * h + (2.0 * eb * h).sqrt() * z;
    if next <= 0.0 {
        next = next.abs().max(1e-12);
        log.reflections += 1;
    }
    log.bath_substeps += 1;
    (next, h)
}

/// Integrates the bath on a fixed site over `[0, seg]` of microscopic time.
fn bath_segment(
    p: &ModelParams,
    state: &mut ChainState,
    site: i64,
    seg: f64,
    eb: f64,
    rng: &mut Rng,
    log: &mut EventLog,
) {
    if eb == 0.0 || seg <= 0.0 {
        return;
    }
    let slot = state.slot(site);
    let mut left = seg;
    let mut xi = state.sites[slot];
    while left > 1e-15 * seg {
        let (next, used) = bath_substep(p, xi, left, eb, rng, log);
        xi = next;
        left -= used;
    }
    state.sites[slot] = xi;
}

/// Advances exchange noise and the bath jointly by `h`, splitting at swap
/// events and at bath-site hops. `tau0` is the microscopic time at the start
/// of the stage.
pub fn exchange_bath_step(
    p: &ModelParams,
    d: &DerivedParams,
    state: &mut ChainState,
    tau0: f64,
    h: f64,
    mode: ExchangeScheduling,
    rng: &mut Rng,
    log: &mut EventLog,
) {
    let n2 = (p.n as f64) * (p.n as f64);
    let eb = (p.n as f64).powf(-p.delta);
    let w = state.sites.len();
    let total_rate = p.gamma * w as f64;
    let mut t = 0.0; // elapsed inside the stage, microscopic units

    // Next bath-site hop: c_n·s crosses the next integer.
    let next_hop = |t_now: f64| -> f64 {
        if d.c_n <= 0.0 {
            return f64::INFINITY;
        }
        let s_now = (tau0 + t_now) / n2;
        let k = (d.c_n * s_now).floor() + 1.0;
        (k / d.c_n) * n2 - tau0
    };
    let mut hop_at = next_hop(0.0);

    match mode {
        ExchangeScheduling::Exact => {
            let mut next_swap = if total_rate > 0.0 {
                let e: f64 = Exp1.sample(rng);
                e / total_rate
            } else {
                f64::INFINITY
            };
            loop {
                let stop = h.min(next_swap).min(hop_at);
                let site = bath_site(d.c_n, (tau0 + t) / n2);
                bath_segment(p, state, site, stop - t, eb, rng, log);
                t = stop;
                if t >= h {
                    break;
                }
                if next_swap <= hop_at {
                    let bond = rng.gen_range(0..w);
                    let jnext = if bond + 1 == w { 0 } else { bond + 1 };
                    state.sites.swap(bond, jnext);
                    log.exchange_events += 1;
                    let e: f64 = Exp1.sample(rng);
                    next_swap = t + e / total_rate;
                } else {
                    log.bath_hops += 1;
                    // Nudge past the boundary so the floor lands on the new cell.
                    hop_at = next_hop(t + 1e-9 * h.max(1.0));
                }
            }
        }
        ExchangeScheduling::TauLeap => {
            // Bath first across the whole stage (still split at hops), then
            // a Poisson number of swaps at uniform bonds. One global count
            // at rate γ·w with uniform placement has the same law as
            // independent per-bond Poisson counts applied in random order;
            // dropping the swap/bath interleaving costs O((γh)²) per bond.
            loop {
                let stop = h.min(hop_at);
                let site = bath_site(d.c_n, (tau0 + t) / n2);
                bath_segment(p, state, site, stop - t, eb, rng, log);
                t = stop;
                if t >= h {
                    break;
                }
                log.bath_hops += 1;
                hop_at = next_hop(t + 1e-9 * h.max(1.0));
            }
            if total_rate > 0.0 {
                let count: f64 = Poisson::new(total_rate * h)
                    .expect("positive swap rate")
                    .sample(rng);
                let count = count as u64;
                for _ in 0..count {
                    let bond = rng.gen_range(0..w);
                    let jnext = if bond + 1 == w { 0 } else { bond + 1 };
                    state.sites.swap(bond, jnext);
                }
                log.exchange_events += count;
            }
        }
    }
}

/// Default microscopic step from the stability constraints of the three
/// mechanisms.
#[must_use]
pub fn default_dt_micro(p: &ModelParams, d: &DerivedParams) -> f64 {
    let mut h = f64::INFINITY;
    if p.gamma > 0.0 {
        h = h.min(0.1 / p.gamma);
    }
    if p.alpha > 0.0 {
        let mx = max_site_estimate(p, d.window);
        h = h.min(0.01 * (p.n as f64).powf(p.kappa) / (2.0 * p.alpha * mx));
    }
    if d.c_n > 0.0 {
        // Resolve the frame-offset cycle of the bath with ~16 points.
        h = h.min(0.25 * (p.n as f64).powi(2) / d.c_n);
    }
    if h.is_infinite() {
        h = 0.1;
    }
    h
}

/// Runs a trajectory from `init` (resuming from its `tau`, normally zero) to
/// `t_max`, invoking observers at every outer step (accumulation) and at the
/// configured sample times later than the starting point.
///
/// The stepping between two consecutive sample times depends only on that
/// pair, so a run split at a sample time and resumed from the saved state
/// reproduces the uninterrupted trajectory bit-exactly.
pub fn run(
    p: &ModelParams,
    d: &DerivedParams,
    cfg: &IntegratorConfig,
    init: ChainState,
    rng: &mut Rng,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutput> {
    p.validate()?;
    let n2 = (p.n as f64) * (p.n as f64);
    let mut state = init;
    state.check_positive()?;
    let mut times = cfg.sample_times.clone();
    times.retain(|&t| t * n2 > state.tau + 1e-9);
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite sample times"));
    if times.last().copied().unwrap_or(0.0) > cfg.t_max + 1e-12 {
        return Err(CoreError::InvalidConfig {
            field: "sample_times".into(),
            message: "sampling beyond the horizon".into(),
        });
    }
    let blowup_guard = 100.0 * max_site_estimate(p, d.window);

    let mut log = EventLog::default();
    let mut scratch = Vec::new();
    let h_target = cfg.dt_micro.unwrap_or_else(|| default_dt_micro(p, d));
    if !(h_target > 0.0) {
        return Err(CoreError::InvalidConfig {
            field: "dt_micro".into(),
            message: format!("step must be positive, got {h_target}"),
        });
    }

    if state.tau == 0.0 && cfg.sample_times.first().is_some_and(|&t| t == 0.0) {
        for obs in observers.iter_mut() {
            obs.sample(p, d, &state, 0.0);
        }
    }

    let mut tau_a = state.tau;
    let mut checkpoints: Vec<(f64, bool)> = times.iter().map(|&t| (t * n2, true)).collect();
    if checkpoints.last().map_or(true, |&(tau, _)| tau < cfg.t_max * n2 - 1e-9) {
        checkpoints.push((cfg.t_max * n2, false));
    }
    for (tau_b, is_sample) in checkpoints {
        if tau_b > tau_a {
            let m = ((tau_b - tau_a) / h_target).ceil().max(1.0) as u64;
            let h = (tau_b - tau_a) / m as f64;
            for step in 0..m {
                let s = state.tau / n2;
                let ds = h / n2;
                for obs in observers.iter_mut() {
                    obs.accumulate(p, d, &state, s, ds);
                }
                let tau0 = state.tau;
                drift_step(p, &mut state, h / 2.0, &mut scratch);
                exchange_bath_step(p, d, &mut state, tau0, h, cfg.exchange, rng, &mut log);
                drift_step(p, &mut state, h / 2.0, &mut scratch);
                state.tau = tau_a + (step + 1) as f64 * h;
                log.steps += 1;
            }
            state.tau = tau_b;
            state.check_positive()?;
            if let Some((j, &v)) = state
                .sites
                .iter()
                .enumerate()
                .find(|&(_, &v)| v > blowup_guard)
            {
                return Err(CoreError::NumericalBlowup {
                    site: state.origin + j as i64,
                    tau: state.tau,
                    value: v,
                });
            }
        }
        if is_sample {
            let s = state.tau / n2;
            for obs in observers.iter_mut() {
                obs.sample(p, d, &state, s);
            }
        }
        tau_a = tau_b;
    }
    Ok(RunOutput { state, log })
}
