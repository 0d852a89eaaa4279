//! Statistical acceptance suite.
//!
//! Ten end-to-end checks, each driving seeded ensembles through the chain
//! integrator (or through the analytic reference objects) and comparing
//! estimators against closed-form targets, scaling exponents, and variance
//! envelopes. Every tolerance, cap, and seed is pinned as a constant next to
//! the check that uses it; each check returns a [`CriterionOutcome`] carrying
//! one verdict line plus the underlying estimates so failures are diagnosable
//! from the test log alone.
//!
//! Conventions shared by all checks:
//! * replica `r` of criterion `c` draws its stream from
//!   [`replica_rng`]`(SEED_c, arm_offset + r)`, so every number below is
//!   reproducible bit for bit;
//! * "SE" always means the standard error of the replica mean
//!   ([`Summary::of`]), and z-gates compare `|mean - target|` against it;
//! * scaling exponents are fitted on log means with a percentile bootstrap
//!   confidence interval ([`slope_report`]); a slope gate passes when the
//!   target exponent lies inside the interval;
//! * envelope constants (the `*_CAP` values) were frozen from calibration
//!   runs at roughly 1.3-2x the observed ceiling, so they detect regressions
//!   without tracking noise.

use std::sync::Arc;
use std::time::Instant;

use crate::dynamics::{self, bath_site, IntegratorConfig, Observer};
use crate::field::{
    FieldObserver, IntegrandKind, MomentsObserver, QuadraticReplacementObserver,
    TimeIntegralObserver,
};
use crate::model::{self, ChainState, DerivedParams, ModelParams};
use crate::rng::replica_rng;
use crate::spde::{self, BoundaryMode, SpectralOu};
use crate::stats::{self, ScalingLevel, Summary};
use crate::testfn::{self, builtin, IotaKernel, RhoKernel, Sampled, TestFn};

/// Result of one acceptance criterion: identifier, verdict, and the evidence
/// (one human-readable line per estimate or gate).
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    /// Criterion number (1-10).
    pub id: u32,
    /// Short kebab-case name.
    pub name: &'static str,
    /// Overall verdict: all gates passed.
    pub pass: bool,
    /// One line per estimate/gate, for the test log.
    pub details: Vec<String>,
    /// Wall-clock seconds spent.
    pub seconds: f64,
}

impl CriterionOutcome {
    /// The single pass/fail line printed by the acceptance test target.
    #[must_use]
    pub fn verdict_line(&self) -> String {
        format!(
            "criterion {:02} {}: {} ({:.1}s)",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.seconds
        )
    }
}

/// Accumulates gate verdicts and detail lines for one criterion.
struct Check {
    pass: bool,
    details: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self { pass: true, details: Vec::new() }
    }

    /// Record a gate: `ok` must hold for the criterion to pass.
    fn gate(&mut self, ok: bool, msg: String) {
        self.pass &= ok;
        self.details.push(format!("[{}] {}", if ok { "ok" } else { "FAIL" }, msg));
    }

    /// Record an ungated observation.
    fn note(&mut self, msg: String) {
        self.details.push(format!("[..] {msg}"));
    }

    fn finish(self, id: u32, name: &'static str, start: Instant) -> CriterionOutcome {
        CriterionOutcome {
            id,
            name,
            pass: self.pass,
            details: self.details,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

/// Run one replica: Gibbs initial state, fixed observer set, seeded stream.
fn run_replica_with(
    p: &ModelParams,
    d: &DerivedParams,
    cfg: &IntegratorConfig,
    seed: u64,
    index: u64,
    observers: &mut [&mut dyn Observer],
) {
    let mut rng = replica_rng(seed, index);
    let init = model::sample_gibbs(p, d, &mut rng).expect("gibbs init");
    dynamics::run(p, d, cfg, init, &mut rng, observers).expect("integrator run");
}

// ---------------------------------------------------------------------------
// Criterion 1: Gibbs invariance under the full dynamics.
// ---------------------------------------------------------------------------

const C1_SEED: u64 = 0x0bc1_0001;
const C1_REPLICAS: u64 = 16;
/// Max |z| over sample times for window mean and variance, in replica SEs.
const C1_Z_MAX: f64 = 4.0;

/// Product-Gamma invariance: with `beta = 1`, `lambda = 0` the site marginals
/// are Exp(1); the window mean must stay at 1 and the centred second moment
/// at 1 for all sample times, within `C1_Z_MAX` standard errors across 16
/// replicas.
#[must_use]
pub fn gibbs_invariance() -> CriterionOutcome {
    let start = Instant::now();
    let mut check = Check::new();

    let p = ModelParams {
        beta: 1.0,
        lambda: 0.0,
        alpha: 1.0,
        gamma: 1.0,
        kappa: 0.5,
        delta: 0.0,
        n: 32,
        window_buffer: 2,
    };
    let t_max = 0.25;
    let d = model::derive_params(&p, t_max).expect("derive");
    let cfg = IntegratorConfig::uniform(t_max, 16);

    // records[k] collects (mean, var) over replicas at sample time k.
    let mut means: Vec<Vec<f64>> = vec![Vec::new(); cfg.sample_times.len()];
    let mut vars: Vec<Vec<f64>> = vec![Vec::new(); cfg.sample_times.len()];
    for r in 0..C1_REPLICAS {
        let mut obs = MomentsObserver::default();
        let mut set: Vec<&mut dyn Observer> = vec![&mut obs];
        run_replica_with(&p, &d, &cfg, C1_SEED, r, &mut set);
        assert_eq!(obs.records.len(), cfg.sample_times.len());
        for (k, rec) in obs.records.iter().enumerate() {
            means[k].push(rec.mean);
            vars[k].push(rec.var);
        }
    }

    let mut worst_mean = 0.0f64;
    let mut worst_var = 0.0f64;
    for k in 0..cfg.sample_times.len() {
        let sm = Summary::of(&means[k]);
        let sv = Summary::of(&vars[k]);
        worst_mean = worst_mean.max(sm.z(1.0).abs());
        worst_var = worst_var.max(sv.z(1.0).abs());
    }
    check.gate(
        worst_mean <= C1_Z_MAX,
        format!("window mean stays at 1: max |z| = {worst_mean:.2} <= {C1_Z_MAX}"),
    );
    check.gate(
        worst_var <= C1_Z_MAX,
        format!("window variance stays at 1: max |z| = {worst_var:.2} <= {C1_Z_MAX}"),
    );
    check.finish(1, "gibbs-invariance", start)
}

// ---------------------------------------------------------------------------
// Criterion 2: static covariance of the fluctuation field.
// ---------------------------------------------------------------------------

const C2_SEED: u64 = 0x0bc1_0002;
const C2_DRAWS: u64 = 4000;
/// |mean(Y^2) - sigma^2 ||H||^2| in SEs.
const C2_Z_MAX: f64 = 3.0;

/// Under the product measure the field pairing `Y(H)` is centred with
/// variance `sigma^2 * ||H||_{2,n}^2`; checked for one test function per
/// regularity class on fresh equilibrium draws.
#[must_use]
pub fn static_covariance() -> CriterionOutcome {
    let start = Instant::now();
    let mut check = Check::new();

    let p = ModelParams {
        beta: 5.0,
        lambda: 4.0,
        alpha: 1.0,
        gamma: 1.0,
        kappa: 0.5,
        delta: 0.0,
        n: 32,
        window_buffer: 10,
    };
    let d = model::derive_params(&p, 0.0).expect("derive");
    let sigma2 = p.sigma2();

    for id in ["s:gauss", "sdir:odd-gauss:1", "s0:ess-gauss"] {
        let h = builtin(id).expect("builtin test function");
        let target = sigma2 * testfn::norm_2n_sq(h.as_ref(), p.n);
        let mut sq = Vec::with_capacity(C2_DRAWS as usize);
        let mut rng = replica_rng(C2_SEED, 0xffff);
        // One long stream: draws are independent anyway, and a single stream
        // keeps the Gibbs sampler's rejection layer reproducible.
        for _ in 0..C2_DRAWS {
            let state = model::sample_gibbs(&p, &d, &mut rng).expect("gibbs");
            let y = crate::field::field_value(&p, &d, &state, 0.0, h.as_ref());
            sq.push(y * y);
        }
        let s = Summary::of(&sq);
        let z = s.z(target).abs();
        check.gate(
            z <= C2_Z_MAX,
            format!(
                "{id}: mean Y^2 = {:.4} vs sigma^2 ||H||^2 = {target:.4} (|z| = {z:.2} <= {C2_Z_MAX})",
                s.mean
            ),
        );
    }
    check.finish(2, "static-covariance", start)
}

// ---------------------------------------------------------------------------
// Criterion 3: martingale quadratic variation limit.
// ---------------------------------------------------------------------------

const C3_SEED: u64 = 0x0bc1_0003;
const C3_REPLICAS: u64 = 16;
/// Relative error of mean QV/T against the exchange-noise limit.
const C3_REL_TOL: f64 = 0.10;
/// Realised-variance vs compensator agreement, in SEs.
const C3_Z_MAX: f64 = 3.0;

/// At `kappa = 1/2`, `delta = 0` the Dynkin martingale of the field pairing
/// carries quadratic variation `2 gamma sigma^2 ||H'||_{L^2}^2 T` in the
/// limit; the integrator's compensator must land within 10% at `n = 64`, and
/// the realised variance of the martingale increments must agree with the
/// compensator within 3 SEs.
#[must_use]
pub fn qv_limit() -> CriterionOutcome {
    let start = Instant::now();
    let mut check = Check::new();

    let p = ModelParams {
        beta: 5.0,
        lambda: 4.0,
        alpha: 1.0,
        gamma: 1.0,
        kappa: 0.5,
        delta: 0.0,
        n: 64,
        window_buffer: 5,
    };
    let t_max = 0.1;
    let d = model::derive_params(&p, t_max).expect("derive");
    let cfg = IntegratorConfig::uniform(t_max, 32);
    let h = builtin("sdir:odd-gauss:1").expect("builtin");
    // ||d/du (u e^{-u^2})||_{L^2}^2 = (3/4) sqrt(pi/2).
    let grad_norm_sq = 0.75 * (std::f64::consts::PI / 2.0).sqrt();
    let target = 2.0 * p.gamma * p.sigma2() * grad_norm_sq;

    let mut qv_over_t = Vec::new();
    let mut rv_minus_qv = Vec::new();
    for r in 0..C3_REPLICAS {
        let mut obs = FieldObserver::new(Arc::clone(&h));
        let mut set: Vec<&mut dyn Observer> = vec![&mut obs];
        run_replica_with(&p, &d, &cfg, C3_SEED, r, &mut set);
        let last = obs.samples.last().expect("samples");
        qv_over_t.push(last.qv.total() / t_max);
        let rv: f64 = obs
            .samples
            .windows(2)
            .map(|w| {
                let dm = w[1].martingale - w[0].martingale;
                dm * dm
            })
            .sum();
        rv_minus_qv.push(rv - last.qv.total());
    }

    let sq = Summary::of(&qv_over_t);
    let rel = (sq.mean - target).abs() / target;
    check.gate(
        rel <= C3_REL_TOL,
        format!(
            "mean QV/T = {:.4} vs 2 gamma sigma^2 ||H'||^2 = {target:.4} (rel err {rel:.3} <= {C3_REL_TOL})",
            sq.mean
        ),
    );
    let sd = Summary::of(&rv_minus_qv);
    let z = sd.z(0.0).abs();
    check.gate(
        z <= C3_Z_MAX,
        format!(
            "realised variance matches compensator: mean diff = {:.2e} (|z| = {z:.2} <= {C3_Z_MAX})",
            sd.mean
        ),
    );
    check.finish(3, "qv-limit", start)
}

// ---------------------------------------------------------------------------
// Criteria 4 + 5: boundary-layer phase transition and bath-functional rates
// (one shared ensemble over delta x n arms).
// ---------------------------------------------------------------------------

const C45_SEED: u64 = 0x0bc1_0045;
const C45_REPLICAS: u64 = 16;
const C45_NS: [u32; 3] = [16, 32, 64];
const C45_T: f64 = 0.5;
/// Bootstrap resamples for every slope confidence interval in this suite.
const SLOPE_RESAMPLES: usize = 400;
/// "No significant decay" gate for the supercritical arm: the upper CI end
/// must clear this (a decaying functional at rate n^{-1} sits near -1).
const C4_FLAT_HI_MIN: f64 = -0.15;
/// Boundary-box arms as (delta, gamma, eps). Each arm must keep the
/// bath-driven n^(delta-1) term above two finite-size floors that pull gamma
/// in opposite directions: the equilibrium box floor ~ sigma^2 eps / gamma
/// (wants large gamma) and the exchange-bound cap on the bath-site signal
/// ~ sigma^2 sqrt(T/gamma) (wants small gamma, i.e. bath-limited hops).
/// The kernel width eps is the second knob.
const C4_ARMS: [(f64, f64, f64); 3] = [
    (0.0, 24.0, 0.125),
    (0.5, 2.0, 0.0625),
    (2.0, 2.0, 0.0625),
];
/// Exchange rate of the anchored-deficit ensemble (delta = 2, so the bath is
/// effectively off and the deficit sees pure exchange plus weak transport).
const DEFICIT_GAMMA: f64 = 4.0;
/// Box widths for the anchored-deficit ell sweep at n = 64.
const DEFICIT_ELLS: [u32; 4] = [4, 8, 16, 32];
/// Exact integrated variance of the anchored box deficit under pure
/// exchange, evaluated from the lattice mode integral
/// Var = (1/n^4) * (1/pi) * int_0^pi |w(k)|^2 (2 sigma^2/omega_k^2)
///       (omega_k tau - 1 + e^(-omega_k tau)) dk,
/// with w(k) = (1/ell) sum_{x=1..ell} e^(ikx) - 1, omega_k =
/// 2 gamma (1 - cos k), tau = T n^2, at beta = 2, lambda = 0 (sigma^2 = 1/4),
/// gamma = 4, T = 1/2. First block: n = 64, ell in DEFICIT_ELLS; second
/// block: ell = 8, n in {16, 32, 64}.
const DEFICIT_ORACLE_N64: [f64; 4] = [2.8022e-5, 4.6752e-5, 8.2584e-5, 1.46675e-4];
const DEFICIT_ORACLE_L8: [(f64, f64); 3] = [
    (16.0, 6.65116e-4),
    (32.0, 1.79792e-4),
    (64.0, 4.67524e-5),
];
/// Window for the grid-averaged ratio of measured sup-square to the oracle
/// variance. The sup over the running integral inflates the terminal
/// variance by a path-maximum factor (about 1.2-1.5 for near-Brownian
/// integrals), so the average ratio must sit just above 1.
const DEFICIT_MEAN_RATIO: (f64, f64) = (0.8, 2.5);

/// Runs `reps` replicas of one parameter point and returns per-integrand
/// replica vectors of the sup-squared running integrals.
fn c45_ensemble(
    beta: f64,
    lambda: f64,
    gamma: f64,
    delta: f64,
    n: u32,
    reps: u64,
    block: u64,
    kinds: &dyn Fn(&DerivedParams) -> Vec<IntegrandKind>,
) -> Vec<Vec<f64>> {
    let p = ModelParams {
        beta,
        lambda,
        alpha: 1.0,
        gamma,
        kappa: 1.0,
        delta,
        n,
        window_buffer: 2,
    };
    let d = model::derive_params(&p, C45_T).expect("derive");
    let cfg = IntegratorConfig::uniform(C45_T, 64);
    let kinds = kinds(&d);
    let mut out = vec![Vec::new(); kinds.len()];
    for r in 0..reps {
        let mut obs: Vec<TimeIntegralObserver> = kinds
            .iter()
            .map(|&k| TimeIntegralObserver::new(k))
            .collect();
        {
            let mut set: Vec<&mut dyn Observer> =
                obs.iter_mut().map(|o| o as &mut dyn Observer).collect();
            run_replica_with(&p, &d, &cfg, C45_SEED, block * 1000 + r, &mut set);
        }
        for (i, o) in obs.iter().enumerate() {
            out[i].push(o.sup_sq());
        }
    }
    out
}

fn slope_gate(check: &mut Check, label: &str, levels: &[ScalingLevel], target: f64, seed: u64) {
    let rep = stats::slope_report(levels, target, SLOPE_RESAMPLES, seed);
    check.gate(
        rep.pass,
        format!(
            "{label}: slope {:.3} (CI [{:.3}, {:.3}]) covers target {:.2}",
            rep.slope, rep.lo, rep.hi, target
        ),
    );
}

/// Runs the boundary and replacement ensembles and evaluates criteria 4 and 5.
///
/// Criterion 4 gates the boundary-box functional: its sup-square decays like
/// `n^(delta-1)` for `delta in {0, 0.5}` (slope CI must cover the target) and
/// shows no significant decay at `delta = 2`. Criterion 5 gates the bath-site
/// fluctuation (slope `delta - 1` at `delta = 0`), the potential-gap
/// functional (slope `delta - 2` at `delta = 0`), and the anchored
/// box-deficit scalings (`+1` in `ell` at `n = 64`, `-2` in `n` at
/// `ell = 8`, plus agreement with the exact lattice variance oracle).
#[must_use]
pub fn boundary_and_replacement() -> (CriterionOutcome, CriterionOutcome) {
    let start = Instant::now();

    // ---- Criterion 4: boundary-layer emergence / disappearance. ----
    let mut c4 = Check::new();
    for (di, &(delta, gamma, eps)) in C4_ARMS.iter().enumerate() {
        let mut fwd_levels = Vec::new();
        let mut mir_levels = Vec::new();
        for (ni, &n) in C45_NS.iter().enumerate() {
            let data = c45_ensemble(
                2.0,
                0.0,
                gamma,
                delta,
                n,
                C45_REPLICAS,
                (di * C45_NS.len() + ni) as u64,
                &|_| {
                    vec![
                        IntegrandKind::BoundaryBox {
                            eps,
                            mirrored: false,
                        },
                        IntegrandKind::BoundaryBox {
                            eps,
                            mirrored: true,
                        },
                    ]
                },
            );
            fwd_levels.push(ScalingLevel {
                x: f64::from(n),
                values: data[0].clone(),
            });
            mir_levels.push(ScalingLevel {
                x: f64::from(n),
                values: data[1].clone(),
            });
        }
        if delta < 1.0 {
            slope_gate(
                &mut c4,
                &format!("forward boundary box, delta = {delta} (gamma = {gamma}, eps = {eps})"),
                &fwd_levels,
                delta - 1.0,
                C45_SEED ^ di as u64,
            );
        } else {
            let rep = stats::slope_report(&fwd_levels, 0.0, SLOPE_RESAMPLES, C45_SEED ^ di as u64);
            c4.gate(
                rep.hi >= C4_FLAT_HI_MIN,
                format!(
                    "forward boundary box, delta = {delta}: no significant decay (slope {:.3}, CI [{:.3}, {:.3}], hi >= {C4_FLAT_HI_MIN})",
                    rep.slope, rep.lo, rep.hi
                ),
            );
        }
        let rep = stats::slope_report(&mir_levels, 0.0, SLOPE_RESAMPLES, C45_SEED ^ (0x40 + di as u64));
        c4.note(format!(
            "mirrored boundary box, delta = {delta}: slope {:.3} (CI [{:.3}, {:.3}]); the layer is one-sided",
            rep.slope, rep.lo, rep.hi
        ));
    }
    let mid = Instant::now();
    let c4_out = CriterionOutcome {
        id: 4,
        name: "boundary-phase-transition",
        pass: c4.pass,
        details: c4.details,
        seconds: mid.duration_since(start).as_secs_f64(),
    };

    // ---- Criterion 5: bath-functional replacement rates. ----
    let mut c5 = Check::new();

    // (a) Bath-site fluctuation at delta = 0: sup-square ~ n^(delta-1).
    let site_levels: Vec<ScalingLevel> = C45_NS
        .iter()
        .enumerate()
        .map(|(ni, &n)| ScalingLevel {
            x: f64::from(n),
            values: c45_ensemble(2.0, 0.0, 2.0, 0.0, n, C45_REPLICAS, (0x10 + ni) as u64, &|_| {
                vec![IntegrandKind::BathSiteFluct]
            })
            .remove(0),
        })
        .collect();
    slope_gate(
        &mut c5,
        "bath-site fluctuation, delta = 0",
        &site_levels,
        -1.0,
        C45_SEED ^ 0x10,
    );

    // (b) Potential gap at delta = 0: sup-square ~ n^(delta-2). The soft
    // potential (beta = 4, lambda = 8) keeps the integrand's curvature small
    // so the splitting scheme's stationary bias stays far below the signal.
    let pot_levels: Vec<ScalingLevel> = C45_NS
        .iter()
        .enumerate()
        .map(|(ni, &n)| ScalingLevel {
            x: f64::from(n),
            values: c45_ensemble(4.0, 8.0, 0.5, 0.0, n, 24, (0x20 + ni) as u64, &|_| {
                vec![IntegrandKind::BathPotential]
            })
            .remove(0),
        })
        .collect();
    slope_gate(
        &mut c5,
        "potential gap, delta = 0",
        &pot_levels,
        -2.0,
        C45_SEED ^ 0x20,
    );

    // (c) Anchored box deficit at delta = 2: all four widths at every n (the
    // anchor is the final bath position, constant in time).
    let deficit: Vec<Vec<Vec<f64>>> = C45_NS
        .iter()
        .enumerate()
        .map(|(ni, &n)| {
            c45_ensemble(
                2.0,
                0.0,
                DEFICIT_GAMMA,
                2.0,
                n,
                C45_REPLICAS,
                (0x30 + ni) as u64,
                &|d| {
                    DEFICIT_ELLS
                        .iter()
                        .map(|&ell| IntegrandKind::AnchoredBoxDeficit {
                            ell,
                            z: bath_site(d.c_n, C45_T),
                        })
                        .collect()
                },
            )
        })
        .collect();
    let ell_levels: Vec<ScalingLevel> = DEFICIT_ELLS
        .iter()
        .enumerate()
        .map(|(li, &ell)| ScalingLevel {
            x: f64::from(ell),
            values: deficit[2][li].clone(),
        })
        .collect();
    slope_gate(
        &mut c5,
        "anchored deficit in ell (n = 64)",
        &ell_levels,
        1.0,
        C45_SEED ^ 0x30,
    );
    let n_levels: Vec<ScalingLevel> = C45_NS
        .iter()
        .enumerate()
        .map(|(ni, &n)| ScalingLevel {
            x: f64::from(n),
            values: deficit[ni][1].clone(),
        })
        .collect();
    slope_gate(
        &mut c5,
        "anchored deficit in n (ell = 8)",
        &n_levels,
        -2.0,
        C45_SEED ^ 0x31,
    );

    // Constant check: grid-averaged ratio of the measured sup-square to the
    // exact lattice variance oracle.
    let mut ratios = Vec::new();
    for (li, &ell) in DEFICIT_ELLS.iter().enumerate() {
        let mean = Summary::of(&deficit[2][li]).mean;
        let ratio = mean / DEFICIT_ORACLE_N64[li];
        c5.note(format!(
            "deficit oracle ratio at n = 64, ell = {ell}: {ratio:.2}"
        ));
        ratios.push(ratio);
    }
    for (ni, &(nf, oracle)) in DEFICIT_ORACLE_L8.iter().enumerate() {
        if nf > 32.5 {
            continue; // n = 64, ell = 8 already counted above
        }
        let mean = Summary::of(&deficit[ni][1]).mean;
        let ratio = mean / oracle;
        c5.note(format!(
            "deficit oracle ratio at n = {nf}, ell = 8: {ratio:.2}"
        ));
        ratios.push(ratio);
    }
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    c5.gate(
        mean_ratio >= DEFICIT_MEAN_RATIO.0 && mean_ratio <= DEFICIT_MEAN_RATIO.1,
        format!(
            "anchored deficit vs exact lattice oracle: mean ratio {mean_ratio:.2} in [{}, {}]",
            DEFICIT_MEAN_RATIO.0, DEFICIT_MEAN_RATIO.1
        ),
    );

    let c5_out = CriterionOutcome {
        id: 5,
        name: "replacement-rates",
        pass: c5.pass,
        details: c5.details,
        seconds: mid.elapsed().as_secs_f64(),
    };
    (c4_out, c5_out)
}

// ---------------------------------------------------------------------------
// Criterion 6: two-point replacement variance envelope.
// ---------------------------------------------------------------------------

const C6_SEED: u64 = 0x0bc1_0006;
const C6_REPLICAS: u64 = 96;
const C6_EPS: [f64; 3] = [0.25, 0.125, 0.0625];
const C6_NS: [u32; 2] = [32, 64];
/// Fitted constants across the (eps, n) grid must stay within this factor.
const C6_STABILITY: f64 = 4.0;
/// Absolute ceiling on the fitted constant, frozen from calibration.
const C6_CAP: f64 = 0.55;

/// The time-integrated two-point replacement error obeys
/// `E[A_T^2] <= C T ||psi||_{2,n}^2 (eps + T / (eps^2 n))`; the fitted `C`
/// must be positive, bounded by `C6_CAP`, and stable within a factor of 4
/// across `eps in {1/4, 1/8, 1/16}` x `n in {32, 64}`.
#[must_use]
pub fn quadratic_replacement_bound() -> CriterionOutcome {
    let start = Instant::now();
    let mut check = Check::new();

    // The horizon balances the two envelope terms: with T ~ 2 eps^3 n at the
    // small-eps corner the bracket eps + T/(2 eps^2 n) stays within a small
    // factor across the whole grid, and every box mode decorrelates well
    // inside T (gamma T n^2 >> ell^2), so A_T^2 is in its diffusive regime.
    let t_max = 0.1;
    let psi = builtin("s:gauss").expect("builtin");
    let mut fitted: Vec<(f64, u32, f64)> = Vec::new();
    for &n in &C6_NS {
        let p = ModelParams {
            beta: 5.0,
            lambda: 4.0,
            alpha: 0.0,
            gamma: 2.0,
            kappa: 0.5,
            delta: 0.0,
            n,
            window_buffer: 5,
        };
        let d = model::derive_params(&p, t_max).expect("derive");
        let cfg = IntegratorConfig::uniform(t_max, 4);
        let norm_sq = testfn::norm_2n_sq(psi.as_ref(), n);

        let mut finals: Vec<Vec<f64>> = vec![Vec::new(); C6_EPS.len()];
        for r in 0..C6_REPLICAS {
            let mut obs: Vec<QuadraticReplacementObserver> = C6_EPS
                .iter()
                .map(|&eps| {
                    let ell = (eps * f64::from(n)).round() as usize;
                    QuadraticReplacementObserver::new(Arc::clone(&psi), ell)
                })
                .collect();
            {
                let mut set: Vec<&mut dyn Observer> =
                    obs.iter_mut().map(|o| o as &mut dyn Observer).collect();
                run_replica_with(&p, &d, &cfg, C6_SEED, u64::from(n) * 1000 + r, &mut set);
            }
            for (ei, o) in obs.iter().enumerate() {
                let a_t = o.at_samples.last().expect("samples").1;
                finals[ei].push(a_t * a_t);
            }
        }
        for (ei, &eps) in C6_EPS.iter().enumerate() {
            let mean = stats::mean(&finals[ei]);
            let envelope = t_max * norm_sq * (eps + t_max / (eps * eps * f64::from(n)));
            let c = mean / envelope;
            check.note(format!(
                "eps = {eps}, n = {n}: mean A_T^2 = {mean:.3e}, envelope = {envelope:.3e}, fitted C = {c:.3}"
            ));
            fitted.push((eps, n, c));
        }
    }

    let cs: Vec<f64> = fitted.iter().map(|&(_, _, c)| c).collect();
    let cmin = cs.iter().copied().fold(f64::INFINITY, f64::min);
    let cmax = cs.iter().copied().fold(0.0f64, f64::max);
    check.gate(
        cmin > 0.0 && cmin.is_finite() && cmax.is_finite(),
        format!("fitted constants finite and positive (min {cmin:.3})"),
    );
    check.gate(
        cmax / cmin <= C6_STABILITY,
        format!("stability: max/min = {:.2} <= {C6_STABILITY}", cmax / cmin),
    );
    check.gate(cmax <= C6_CAP, format!("bound never violated: max C = {cmax:.3} <= {C6_CAP}"));
    check.finish(6, "quadratic-replacement-bound", start)
}

// ---------------------------------------------------------------------------
// Criterion 7: limit discrimination (absorbed boundary vs full line).
// ---------------------------------------------------------------------------

const C7_SEED: u64 = 0x0bc1_0007;
const C7_REPLICAS: u64 = 640;
/// Agreement with the matching limit, in SEs of the covariance estimator.
const C7_Z_MATCH: f64 = 3.0;
/// Rejection of the wrong limit: at least one lag this many SEs away.
const C7_Z_REJECT: f64 = 5.0;

/// One-sided Gaussian profile: `exp(-u^2)` for `u > 0`, zero otherwise. The
/// jump at the origin makes the absorbed-boundary and full-line semigroups
/// disagree at order one, which is what the discrimination check needs.
#[derive(Debug)]
struct HalfGauss;

impl TestFn for HalfGauss {
    fn eval(&self, u: f64) -> f64 {
        if u > 0.0 {
            (-u * u).exp()
        } else {
            0.0
        }
    }

    fn deriv(&self, order: usize, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let g = (-u * u).exp();
        match order {
            0 => g,
            1 => -2.0 * u * g,
            2 => (4.0 * u * u - 2.0) * g,
            3 => (12.0 * u - 8.0 * u * u * u) * g,
            4 => (16.0 * u.powi(4) - 48.0 * u * u + 12.0) * g,
            _ => panic!("derivative order {order} out of range"),
        }
    }

    fn support_radius(&self) -> f64 {
        6.0
    }

    fn name(&self) -> &str {
        "half:gauss-right"
    }
}

/// Observer that records the field pairing at each sample time.
struct FieldSampler {
    h: Arc<dyn TestFn>,
    values: Vec<f64>,
}

impl Observer for FieldSampler {
    fn accumulate(&mut self, _p: &ModelParams, _d: &DerivedParams, _state: &ChainState, _s: f64, _ds: f64) {}

    fn sample(&mut self, p: &ModelParams, d: &DerivedParams, state: &ChainState, s: f64) {
        self.values.push(crate::field::field_value(p, d, state, s, self.h.as_ref()));
    }
}

/// Time-lagged covariance prediction for the limiting field on one side of
/// the bath: `sigma^2 (1/n) sum_x H(u_x) (P_lag H)(u_x)` with `P` the heat
/// semigroup under the given boundary condition, summed over lattice points
/// in the moving frame (so estimator and prediction share the same Riemann
/// discretisation).
fn c7_prediction(p: &ModelParams, h: &HalfGauss, mode: BoundaryMode, lag: f64) -> f64 {
    let n = f64::from(p.n);
    let shift0 = p.c_n() * 0.5; // frame shift at the base time t0 = 0.5
    let xmax = (6.0 * n) as i64 + 2;
    let mut acc = 0.0;
    let mut x = -xmax;
    while x <= xmax {
        let u = (x as f64 + shift0) / n;
        if u > 0.0 && u < 6.5 {
            let weight = h.eval(u);
            if weight != 0.0 {
                let evolved = if lag == 0.0 {
                    h.eval(u)
                } else {
                    spde::heat_apply(mode, p.gamma, lag, &|v| h.eval(v), (0.0, 6.0), u)
                };
                acc += weight * evolved;
            }
        }
        x += 1;
    }
    p.sigma2() * acc / n
}

/// At `kappa = 1` the field converges to an infinite-dimensional
/// Ornstein-Uhlenbeck process: with an absorbing boundary at the bath for
/// `delta = 0`, with no boundary for `delta = 2`. Each arm's time-lagged
/// covariances must match its own limit within 3 SEs and sit at least 5 SEs
/// from the other limit for some lag.
#[must_use]
pub fn ou_discrimination() -> CriterionOutcome {
    let start = Instant::now();
    let mut check = Check::new();

    let t0 = 0.5;
    let lags = [0.15, 0.3, 0.5];
    let sample_times = vec![t0, t0 + lags[0], t0 + lags[1], t0 + lags[2]];
    let h = HalfGauss;
    let h_arc: Arc<dyn TestFn> = Arc::new(HalfGauss);

    for (ai, (delta, own, other, own_name, other_name)) in [
        (0.0, BoundaryMode::Dirichlet, BoundaryMode::FullLine, "absorbed", "full-line"),
        (2.0, BoundaryMode::FullLine, BoundaryMode::Dirichlet, "full-line", "absorbed"),
    ]
    .into_iter()
    .enumerate()
    {
        let p = ModelParams {
            beta: 5.0,
            lambda: 4.0,
            alpha: 1.0,
            gamma: 1.0,
            kappa: 1.0,
            delta,
            n: 32,
            window_buffer: 4,
        };
        let t_max = t0 + lags[2];
        let d = model::derive_params(&p, t_max).expect("derive");
        let cfg = IntegratorConfig {
            t_max,
            sample_times: sample_times.clone(),
            dt_micro: None,
            exchange: dynamics::ExchangeScheduling::Exact,
        };

        // products[k][r] = Y(t0) * Y(t0 + lag_k); products[3] holds Y(t0)^2.
        let mut products: Vec<Vec<f64>> = vec![Vec::new(); 4];
        for r in 0..C7_REPLICAS {
            let mut obs = FieldSampler { h: Arc::clone(&h_arc), values: Vec::new() };
            let mut set: Vec<&mut dyn Observer> = vec![&mut obs];
            run_replica_with(&p, &d, &cfg, C7_SEED, (ai as u64) * 100_000 + r, &mut set);
            assert_eq!(obs.values.len(), 4);
            let y0 = obs.values[0];
            for k in 0..3 {
                products[k].push(y0 * obs.values[k + 1]);
            }
            products[3].push(y0 * y0);
        }

        // Equal-time variance: both limits share it; checks the arm is in
        // its stationary regime at the base time.
        let var_pred = c7_prediction(&p, &h, own, 0.0);
        let sv = Summary::of(&products[3]);
        let zv = sv.z(var_pred).abs();
        check.gate(
            zv <= C7_Z_MATCH,
            format!(
                "delta = {delta}: equal-time variance {:.4} vs {var_pred:.4} (|z| = {zv:.2} <= {C7_Z_MATCH})",
                sv.mean
            ),
        );

        let mut worst_own = 0.0f64;
        let mut best_other = 0.0f64;
        for (k, &lag) in lags.iter().enumerate() {
            let s = Summary::of(&products[k]);
            let pred_own = c7_prediction(&p, &h, own, lag);
            let pred_other = c7_prediction(&p, &h, other, lag);
            let z_own = s.z(pred_own).abs();
            let z_other = s.z(pred_other).abs();
            worst_own = worst_own.max(z_own);
            best_other = best_other.max(z_other);
            check.note(format!(
                "delta = {delta}, lag = {lag}: cov {:.4} (SE {:.4}); {own_name} predicts {pred_own:.4} (|z| = {z_own:.1}), {other_name} predicts {pred_other:.4} (|z| = {z_other:.1})",
                s.mean, s.se
            ));
        }
        check.gate(
            worst_own <= C7_Z_MATCH,
            format!("delta = {delta}: matches {own_name} limit (max |z| = {worst_own:.2} <= {C7_Z_MATCH})"),
        );
        check.gate(
            best_other >= C7_Z_REJECT,
            format!("delta = {delta}: rejects {other_name} limit (max |z| = {best_other:.1} >= {C7_Z_REJECT})"),
        );
    }
    check.finish(7, "ou-discrimination", start)
}

// ---------------------------------------------------------------------------
// Criterion 8: mollifier regularity transfer.
// ---------------------------------------------------------------------------

const C8_SEED: u64 = 0x0bc1_0008;
const C8_GRID_H: f64 = 1.0 / 1024.0;
const C8_EPS: [f64; 6] = [0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625];
/// (alpha, beta) exponent pairs: smoothing gains beta - alpha derivatives at
/// cost eps^(alpha - beta).
const C8_PAIRS: [(f64, f64); 4] = [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.0, 0.5)];
/// Frozen caps on max_eps ||mollified||_beta * eps^(beta-alpha) / ||G||_alpha,
/// one per (profile, pair), same order as profiles x C8_PAIRS.
const C8_CAPS: [[f64; 4]; 2] = [
    // smooth Gaussian profile
    [1.05, 2.2, 1.3, 1.6],
    // white-noise profile
    [1.05, 2.6, 2.6, 1.9],
];

/// The cut-off forward-average mollifier is bounded from Sobolev index
/// `alpha` to index `beta >= alpha` with norm `O(eps^(alpha-beta))`: the
/// ratio `||mollified G||_beta eps^(beta-alpha) / ||G||_alpha` must stay
/// below a frozen cap for each exponent pair, on a smooth profile and on a
/// white-noise profile, across `eps in {2^-3, ..., 2^-8}`.
#[must_use]
pub fn mollifier_regularity() -> CriterionOutcome {
    let start = Instant::now();
    let mut check = Check::new();

    let m = (12.0 / C8_GRID_H).round() as usize + 1;
    let gauss = Sampled::from_fn(|u| (-u * u).exp(), -6.0, 6.0, m);
    let mut rng = replica_rng(C8_SEED, 0);
    let noise =
        Sampled::from_values(-6.0, C8_GRID_H, spde::white_noise_grid(C8_GRID_H, m, &mut rng));

    for (pi, (profile_name, profile)) in
        [("gaussian", &gauss), ("white-noise", &noise)].into_iter().enumerate()
    {
        for (qi, &(alpha, beta)) in C8_PAIRS.iter().enumerate() {
            let base = profile.sobolev_norm(alpha);
            let mut worst = 0.0f64;
            for &eps in &C8_EPS {
                let smoothed = profile.mollify(eps).expect("eps aligned with grid");
                let ratio = smoothed.sobolev_norm(beta) * eps.powf(beta - alpha) / base;
                worst = worst.max(ratio);
            }
            let cap = C8_CAPS[pi][qi];
            check.gate(
                worst <= cap,
                format!(
                    "{profile_name}, alpha = {alpha}, beta = {beta}: max ratio {worst:.3} <= {cap}"
                ),
            );
        }
    }
    check.finish(8, "mollifier-regularity", start)
}

// ---------------------------------------------------------------------------
// Criterion 9: nonlinearity approximation by regularised kernels.
// ---------------------------------------------------------------------------

const C9_SEED: u64 = 0x0bc1_0009;
const C9_REPLICAS: u64 = 96;
const C9_KMAX: usize = 256;
const C9_LENGTH: f64 = 4.0;
const C9_T: f64 = 0.05;
const C9_STEPS: usize = 2500;
/// Chaos-oracle agreement for the terminal statistic, in SEs.
const C9_Z_MAX: f64 = 3.0;
/// Frozen cap on LHS / (T W^2 (RS_iota + RS_rho)) across all kernel pairs.
const C9_K_CAP: f64 = 0.020;
/// Decrease along the (eps, eps) family: consecutive slack and total drop.
const C9_DEC_SLACK: f64 = 1.1;
const C9_DEC_TOTAL: f64 = 0.25;

/// Kernel pairs (box width for the plain average, box width for the
/// cut-off average): an equal-width family plus a staggered family.
const C9_PAIRS: [(f64, f64); 7] = [
    (0.25, 0.25),
    (0.125, 0.125),
    (0.0625, 0.0625),
    (0.03125, 0.03125),
    (0.25, 0.125),
    (0.125, 0.0625),
    (0.0625, 0.03125),
];

/// N-step left-point Riemann variance factor for one decaying mode pair:
/// sum over step indices of q^|i-j| with q the per-step decay.
fn c9_riemann_factor(q: f64, n_steps: usize) -> f64 {
    let n = n_steps as f64;
    if (1.0 - q).abs() < 1e-12 {
        return n * n;
    }
    let qn = q.powi(n_steps as i32);
    n * (1.0 + q) / (1.0 - q) - 2.0 * q * (1.0 - qn) / ((1.0 - q) * (1.0 - q))
}

fn c9_quad_form(y: &[f64], g: &[f64], k: usize) -> f64 {
    let mut acc = 0.0;
    for (row_i, &yi) in y.iter().enumerate().take(k) {
        let row = &g[row_i * k..(row_i + 1) * k];
        let mut s = 0.0;
        for (gj, yj) in row.iter().zip(y.iter()) {
            s += gj * yj;
        }
        acc += yi * s;
    }
    acc
}

/// The difference between the quadratic field tested through a plain box
/// average and through the cut-off box average is a second-chaos functional;
/// its running supremum must be majorized by `K W(psi)^2 T (R S)` with a
/// single frozen `K` across kernel pairs, its terminal variance must match
/// the exact discrete-time chaos oracle within 3 SEs, and the equal-width
/// family must decrease as the width shrinks.
#[must_use]
pub fn nonlinearity_approximation() -> CriterionOutcome {
    let start = Instant::now();
    let mut check = Check::new();

    let ou = SpectralOu::new(C9_LENGTH, C9_KMAX, 1.0, 1.0);
    let dt = C9_T / C9_STEPS as f64;
    let k = C9_KMAX;

    // Spatial weights w_j = psi(u_j) du on a grid clear of the far wall.
    let du: f64 = 1.0 / 256.0;
    let u_count = (3.75 / du).round() as usize;
    let psi = |u: f64| (-u * u).exp();

    // Assemble G matrices: G = sum_u w(u) (a a^T - b b^T) with a the plain
    // box coefficients and b the cut-off box coefficients.
    let mut gs: Vec<Vec<f64>> = Vec::with_capacity(C9_PAIRS.len());
    let mut traces = Vec::with_capacity(C9_PAIRS.len());
    for &(eps, delta) in &C9_PAIRS {
        let mut g = vec![0.0f64; k * k];
        let mut a = vec![0.0f64; k];
        let mut b = vec![0.0f64; k];
        for j in 1..=u_count {
            let u = j as f64 * du;
            let w = psi(u) * du;
            let chi = testfn::chi(delta, u);
            for (ki, (ak, bk)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
                *ak = ou.box_pair(ki + 1, u, eps);
                *bk = chi * ou.box_pair(ki + 1, u, delta);
            }
            for (ri, &ai) in a.iter().enumerate() {
                let wa = w * ai;
                let wb = w * b[ri];
                let row = &mut g[ri * k..(ri + 1) * k];
                for ((rj, &aj), &bj) in row.iter_mut().zip(a.iter()).zip(b.iter()) {
                    *rj += wa * aj - wb * bj;
                }
            }
        }
        let tr: f64 = (0..k).map(|i| g[i * k + i]).sum();
        gs.push(g);
        traces.push(tr);
    }

    // Simulate the spectral field; accumulate D_t per pair with left-point
    // sums and track the running supremum at checkpoint times.
    let checkpoint = C9_STEPS / 10;
    let mut terminal_sq: Vec<Vec<f64>> = vec![Vec::new(); C9_PAIRS.len()];
    let mut sup_sq: Vec<Vec<f64>> = vec![Vec::new(); C9_PAIRS.len()];
    for r in 0..C9_REPLICAS {
        let mut rng = replica_rng(C9_SEED, r);
        let mut y = ou.sample_stationary(&mut rng);
        let mut acc = vec![0.0f64; C9_PAIRS.len()];
        let mut sup = vec![0.0f64; C9_PAIRS.len()];
        for step in 0..C9_STEPS {
            for (pi, g) in gs.iter().enumerate() {
                let q = c9_quad_form(&y, g, k) - traces[pi];
                acc[pi] += q * dt;
            }
            if (step + 1) % checkpoint == 0 {
                for (s, &a) in sup.iter_mut().zip(acc.iter()) {
                    *s = s.max(a * a);
                }
            }
            ou.step(&mut y, dt, &mut rng);
        }
        for pi in 0..C9_PAIRS.len() {
            terminal_sq[pi].push(acc[pi] * acc[pi]);
            sup_sq[pi].push(sup[pi]);
        }
    }

    // Gate A: terminal variance vs the exact discrete-time chaos oracle.
    for (pi, &(eps, delta)) in C9_PAIRS.iter().enumerate() {
        let g = &gs[pi];
        let mut oracle = 0.0;
        for ki in 0..k {
            let mu_i = ou.eigenvalue(ki + 1);
            for kj in 0..k {
                let gij = g[ki * k + kj];
                if gij != 0.0 {
                    let q = (-(mu_i + ou.eigenvalue(kj + 1)) * dt).exp();
                    oracle += gij * gij * c9_riemann_factor(q, C9_STEPS);
                }
            }
        }
        oracle *= 2.0 * dt * dt;
        let s = Summary::of(&terminal_sq[pi]);
        let z = s.z(oracle).abs();
        check.gate(
            z <= C9_Z_MAX,
            format!(
                "pair (eps = {eps}, delta = {delta}): mean D_T^2 = {:.3e} vs chaos oracle {oracle:.3e} (|z| = {z:.2} <= {C9_Z_MAX})",
                s.mean
            ),
        );
    }

    // Gate B: envelope. W(psi) from the closed-form one-sided integrals
    // int_0^inf u^2 e^{-4u^2} du = sqrt(pi)/32 and ||psi||_{L^2(0,inf)}^2 =
    // (1/2) sqrt(pi/2).
    let w_psi = (std::f64::consts::PI.sqrt() / 32.0).sqrt()
        + (0.5 * (std::f64::consts::PI / 2.0).sqrt()).sqrt();
    let mut ratios = Vec::new();
    for (pi, &(eps, delta)) in C9_PAIRS.iter().enumerate() {
        let iota = IotaKernel { eps };
        let rho = RhoKernel { eps: delta };
        let rs = stats::contraction_r(&iota) * stats::contraction_s(&iota)
            + stats::contraction_r(&rho) * stats::contraction_s(&rho);
        let lhs = stats::mean(&sup_sq[pi]);
        let ratio = lhs / (C9_T * w_psi * w_psi * rs);
        check.note(format!(
            "pair (eps = {eps}, delta = {delta}): mean sup D^2 = {lhs:.3e}, envelope = {:.3e}, ratio = {ratio:.4}",
            C9_T * w_psi * w_psi * rs
        ));
        ratios.push(ratio);
    }
    let rmax = ratios.iter().copied().fold(0.0f64, f64::max);
    check.gate(
        rmax <= C9_K_CAP,
        format!("envelope holds with frozen K: max ratio {rmax:.4} <= {C9_K_CAP}"),
    );

    // Gate C: the equal-width family decreases as eps -> 0.
    let family: Vec<f64> = (0..4).map(|pi| stats::mean(&sup_sq[pi])).collect();
    let mut monotone = true;
    for w in family.windows(2) {
        monotone &= w[1] <= w[0] * C9_DEC_SLACK;
    }
    check.gate(
        monotone && family[3] <= family[0] * C9_DEC_TOTAL,
        format!(
            "equal-width family decreases: {:.3e} -> {:.3e} -> {:.3e} -> {:.3e} (total drop {:.3} <= {C9_DEC_TOTAL})",
            family[0], family[1], family[2], family[3], family[3] / family[0]
        ),
    );
    check.finish(9, "nonlinearity-approximation", start)
}

// ---------------------------------------------------------------------------
// Criterion 10: generator-term magnitude exponents.
// ---------------------------------------------------------------------------

const C10_SEED: u64 = 0x0bc1_0010;
const C10_REPLICAS: u64 = 16;
const C10_NS: [u32; 3] = [16, 32, 64];
/// Number of sub-intervals for the squared-increment statistic.
const C10_SUBS: usize = 16;
/// Per-n ceiling for the faster-than-any-power class: mean statistic must
/// sit below n^(-9) (the polynomial bound with d = 4 at delta = 0).
const C10_S0_EXPONENT: f64 = -9.0;

fn c10_subinterval_stat(pick: &dyn Fn(usize) -> f64) -> f64 {
    // Squared increments over 16 equal sub-intervals keep the same n-scaling
    // as the square of one full-horizon integral while shrinking the replica
    // variance (the slope intervals would be vacuous otherwise).
    let mut acc = 0.0;
    for j in 0..C10_SUBS {
        let inc = pick(j + 1) - pick(j);
        acc += inc * inc;
    }
    acc
}

/// Dynkin-decomposition error terms must vanish at their advertised rates at
/// `kappa = 1/2, delta = 0`: frame-mismatch and gradient-correction squares
/// like `n^(-2 kappa)`, the bath term squared like `n^(1-delta)` for a test
/// function that is order one at the bath, like `n^(-1-delta)` for one
/// vanishing linearly, and below any fixed power for one vanishing to high
/// order.
#[must_use]
pub fn generator_term_rates() -> CriterionOutcome {
    let start = Instant::now();
    let mut check = Check::new();

    let t_max = 0.125;
    let ids = ["s:gauss", "sdir:odd-gauss:1", "s0:ess-gauss"];
    // per test function, per term, levels over n
    let mut fm: Vec<Vec<f64>> = vec![Vec::new(); C10_NS.len()];
    let mut lc: Vec<Vec<f64>> = vec![Vec::new(); C10_NS.len()];
    let mut bath: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); C10_NS.len()]; ids.len()];

    for (ni, &n) in C10_NS.iter().enumerate() {
        let p = ModelParams {
            beta: 5.0,
            lambda: 4.0,
            alpha: 1.0,
            gamma: 1.0,
            kappa: 0.5,
            delta: 0.0,
            n,
            window_buffer: 5,
        };
        let d = model::derive_params(&p, t_max).expect("derive");
        let cfg = IntegratorConfig::uniform(t_max, C10_SUBS);
        for r in 0..C10_REPLICAS {
            let mut obs: Vec<FieldObserver> = ids
                .iter()
                .map(|id| FieldObserver::new(builtin(id).expect("builtin")))
                .collect();
            {
                let mut set: Vec<&mut dyn Observer> =
                    obs.iter_mut().map(|o| o as &mut dyn Observer).collect();
                run_replica_with(&p, &d, &cfg, C10_SEED, u64::from(n) * 1000 + r, &mut set);
            }
            for (fi, o) in obs.iter().enumerate() {
                let samples = &o.samples;
                assert_eq!(samples.len(), C10_SUBS + 1);
                if fi == 0 {
                    fm[ni].push(c10_subinterval_stat(&|j| samples[j].integral.frame_mismatch));
                    lc[ni].push(c10_subinterval_stat(&|j| {
                        samples[j].integral.laplacian_correction
                    }));
                }
                bath[fi][ni].push(c10_subinterval_stat(&|j| samples[j].integral.bath));
            }
        }
    }

    let levels = |data: &[Vec<f64>]| -> Vec<ScalingLevel> {
        C10_NS
            .iter()
            .zip(data.iter())
            .map(|(&n, values)| ScalingLevel { x: f64::from(n), values: values.clone() })
            .collect()
    };

    slope_gate(&mut check, "frame-mismatch square (order-one profile)", &levels(&fm), -1.0, C10_SEED ^ 1);
    slope_gate(
        &mut check,
        "gradient-correction square (order-one profile)",
        &levels(&lc),
        -1.0,
        C10_SEED ^ 2,
    );
    slope_gate(&mut check, "bath square, order-one profile", &levels(&bath[0]), 1.0, C10_SEED ^ 3);
    slope_gate(
        &mut check,
        "bath square, linearly vanishing profile",
        &levels(&bath[1]),
        -1.0,
        C10_SEED ^ 4,
    );
    for (ni, &n) in C10_NS.iter().enumerate() {
        let m = stats::mean(&bath[2][ni]);
        let cap = f64::from(n).powf(C10_S0_EXPONENT);
        check.gate(
            m <= cap,
            format!("bath square, flat-at-origin profile, n = {n}: mean {m:.3e} <= n^{C10_S0_EXPONENT} = {cap:.3e}"),
        );
    }
    check.finish(10, "generator-term-rates", start)
}
