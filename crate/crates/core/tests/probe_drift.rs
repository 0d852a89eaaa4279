//! Scratch probe for arm calibration (ignored by default).

use bcl_core::dynamics::{self, bath_site, IntegratorConfig, Observer};
use bcl_core::field::{IntegrandKind, TimeIntegralObserver};
use bcl_core::model::{derive_params, sample_gibbs, ModelParams};
use bcl_core::rng::replica_rng;

struct Arm {
    label: &'static str,
    beta: f64,
    lambda: f64,
    gamma: f64,
    delta: f64,
    t_max: f64,
    kinds: Vec<IntegrandKind>,
    anchored_ells: Vec<u32>,
    reps: u64,
}

fn run_arm(arm: &Arm, n: u32, seed_hi: u64) {
    let p = ModelParams {
        n,
        beta: arm.beta,
        lambda: arm.lambda,
        alpha: 1.0,
        gamma: arm.gamma,
        kappa: 1.0,
        delta: arm.delta,
        window_buffer: 2,
    };
    let d = derive_params(&p, arm.t_max).unwrap();
    let cfg = IntegratorConfig::uniform(arm.t_max, 64);
    let anchor = bath_site(d.c_n, arm.t_max);
    let mut kinds = arm.kinds.clone();
    for &ell in &arm.anchored_ells {
        kinds.push(IntegrandKind::AnchoredBoxDeficit { ell, z: anchor });
    }
    let mut sup = vec![0.0f64; kinds.len()];
    let mut fin = vec![0.0f64; kinds.len()];
    for r in 0..arm.reps {
        let mut rng = replica_rng(9999, seed_hi * 1000 + n as u64 * 10 + r);
        let state = sample_gibbs(&p, &d, &mut rng).unwrap();
        let mut obs: Vec<TimeIntegralObserver> = kinds
            .iter()
            .map(|&k| TimeIntegralObserver::new(k))
            .collect();
        let mut views: Vec<&mut dyn Observer> = obs
            .iter_mut()
            .map(|o| o as &mut dyn Observer)
            .collect();
        dynamics::run(&p, &d, &cfg, state, &mut rng, &mut views).unwrap();
        drop(views);
        for (i, o) in obs.iter().enumerate() {
            sup[i] += o.sup_sq();
            fin[i] += o.final_value();
        }
    }
    for (i, k) in kinds.iter().enumerate() {
        println!(
            "{} n={n:2} {k:?}: sup2={:.4e} mean_final={:+.4e}",
            arm.label,
            sup[i] / arm.reps as f64,
            fin[i] / arm.reps as f64
        );
    }
}

#[test]
#[ignore]
fn probe_cost() {
    let ib = IntegrandKind::BoundaryBox {
        eps: 1.0 / 16.0,
        mirrored: false,
    };
    let arms = vec![
        Arm {
            label: "c4a d0 g24",
            beta: 2.0,
            lambda: 0.0,
            gamma: 24.0,
            delta: 0.0,
            t_max: 0.5,
            kinds: vec![ib],
            anchored_ells: vec![],
            reps: 12,
        },
        Arm {
            label: "c4b d0.5 g2",
            beta: 2.0,
            lambda: 0.0,
            gamma: 2.0,
            delta: 0.5,
            t_max: 0.5,
            kinds: vec![ib],
            anchored_ells: vec![],
            reps: 12,
        },
        Arm {
            label: "c4c d2 g2",
            beta: 2.0,
            lambda: 0.0,
            gamma: 2.0,
            delta: 2.0,
            t_max: 0.5,
            kinds: vec![ib],
            anchored_ells: vec![],
            reps: 12,
        },
        Arm {
            label: "e1 d0 g2",
            beta: 2.0,
            lambda: 0.0,
            gamma: 2.0,
            delta: 0.0,
            t_max: 0.5,
            kinds: vec![IntegrandKind::BathSiteFluct],
            anchored_ells: vec![],
            reps: 16,
        },
        Arm {
            label: "e2 d2 g4",
            beta: 2.0,
            lambda: 0.0,
            gamma: 4.0,
            delta: 2.0,
            t_max: 0.5,
            kinds: vec![],
            anchored_ells: vec![4, 8, 16, 32],
            reps: 12,
        },
        Arm {
            label: "potB b4 l8",
            beta: 4.0,
            lambda: 8.0,
            gamma: 0.5,
            delta: 0.0,
            t_max: 0.5,
            kinds: vec![IntegrandKind::BathPotential],
            anchored_ells: vec![],
            reps: 16,
        },
    ];
    for (a, arm) in arms.iter().enumerate() {
        for n in [16u32, 32, 64] {
            run_arm(arm, n, a as u64 + 1);
        }
    }
}
