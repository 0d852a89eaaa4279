//! Replica orchestration: observer bundles built from a configuration,
//! deterministic parallel ensembles, checkpoint/resume with bit-exact
//! continuation, blowup capture, and artifact writers (JSONL observations,
//! CSV tables, JSON summaries).
//!
//! # Determinism
//!
//! Replica `i` draws every random number from `replica_rng(master_seed, i)`,
//! so results are independent of scheduling; ensembles collect in replica
//! order. A trajectory split at a sampling time and resumed from its
//! [`Checkpoint`] reproduces the uninterrupted run bit for bit, because the
//! integrator subdivides each inter-sample interval independently and every
//! observer can freeze and restore its running accumulators.

use crate::config::ObservablesBlock;
use crate::dynamics::{bath_site, run, EventLog, IntegratorConfig, Observer};
use crate::error::{CoreError, Result};
use crate::field::{
    FieldObserver, FieldObserverState, FieldSample, IntegrandKind, MomentRecord, MomentsObserver,
    TimeIntegralObserver,
};
use crate::model::{derive_params, sample_gibbs, ChainState, ModelParams};
use crate::rng::{replica_rng, Rng, RngCheckpoint};
use crate::testfn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Checkpoint schema version accepted by [`Checkpoint::load`].
pub const CHECKPOINT_VERSION: u32 = 1;

/// The observers carried by one replica, in a fixed deterministic order.
pub struct Bundle {
    field_ids: Vec<String>,
    fields: Vec<FieldObserver>,
    integral_ids: Vec<String>,
    integrals: Vec<TimeIntegralObserver>,
    moments: Option<MomentsObserver>,
}

impl Bundle {
    /// Builds the fresh observer set selected by `obs`.
    pub fn build(obs: &ObservablesBlock) -> Result<Self> {
        let mut field_ids = Vec::new();
        let mut fields = Vec::new();
        for id in &obs.fields {
            let h = testfn::builtin(id)?;
            field_ids.push(id.clone());
            fields.push(FieldObserver::new(h));
        }
        let mut integral_ids = Vec::new();
        let mut integrals = Vec::new();
        if let Some(eps) = obs.boundary_eps {
            for (tag, mirrored) in [("fwd", false), ("mirror", true)] {
                integral_ids.push(format!("boundary:eps={eps}:{tag}"));
                integrals.push(TimeIntegralObserver::new(IntegrandKind::BoundaryBox {
                    eps,
                    mirrored,
                }));
            }
        }
        if obs.bath_integrals {
            integral_ids.push("bath-fluct".to_string());
            integrals.push(TimeIntegralObserver::new(IntegrandKind::BathSiteFluct));
            integral_ids.push("bath-potential".to_string());
            integrals.push(TimeIntegralObserver::new(IntegrandKind::BathPotential));
        }
        for &ell in &obs.replacement_ell {
            integral_ids.push(format!("deficit:ell={ell}"));
            integrals.push(TimeIntegralObserver::new(IntegrandKind::BoxDeficit { ell }));
        }
        Ok(Self {
            field_ids,
            fields,
            integral_ids,
            integrals,
            moments: obs.moments.then(MomentsObserver::default),
        })
    }

    /// Rebuilds a bundle mid-trajectory from frozen accumulator states.
    pub fn restore(
        obs: &ObservablesBlock,
        field_states: &[(String, FieldObserverState)],
        integral_states: &[(String, f64)],
    ) -> Result<Self> {
        let mut bundle = Self::build(obs)?;
        if bundle.field_ids.len() != field_states.len()
            || bundle.integral_ids.len() != integral_states.len()
        {
            return Err(CoreError::Checkpoint {
                message: "observer set does not match the checkpoint".to_string(),
            });
        }
        for (i, (id, st)) in field_states.iter().enumerate() {
            if &bundle.field_ids[i] != id {
                return Err(CoreError::Checkpoint {
                    message: format!(
                        "field observer {i} is `{}`, checkpoint has `{id}`",
                        bundle.field_ids[i]
                    ),
                });
            }
            let h = bundle.fields[i].testfn().clone();
            bundle.fields[i] = FieldObserver::restore(h, *st);
        }
        for (i, (id, acc)) in integral_states.iter().enumerate() {
            if &bundle.integral_ids[i] != id {
                return Err(CoreError::Checkpoint {
                    message: format!(
                        "integral observer {i} is `{}`, checkpoint has `{id}`",
                        bundle.integral_ids[i]
                    ),
                });
            }
            let kind = bundle.integrals[i].kind;
            bundle.integrals[i] = TimeIntegralObserver::restore(kind, *acc);
        }
        Ok(bundle)
    }

    fn observer_refs(&mut self) -> Vec<&mut dyn Observer> {
        let mut refs: Vec<&mut dyn Observer> = Vec::new();
        for f in &mut self.fields {
            refs.push(f);
        }
        for i in &mut self.integrals {
            refs.push(i);
        }
        if let Some(m) = &mut self.moments {
            refs.push(m);
        }
        refs
    }

    fn freeze(&self) -> (Vec<(String, FieldObserverState)>, Vec<(String, f64)>) {
        let fields = self
            .field_ids
            .iter()
            .zip(&self.fields)
            .map(|(id, f)| (id.clone(), f.freeze()))
            .collect();
        let integrals = self
            .integral_ids
            .iter()
            .zip(&self.integrals)
            .map(|(id, i)| (id.clone(), i.freeze()))
            .collect();
        (fields, integrals)
    }

    fn into_output(self, replica: u32, log: EventLog) -> ReplicaOutput {
        ReplicaOutput {
            replica,
            fields: self
                .field_ids
                .into_iter()
                .zip(self.fields)
                .map(|(id, f)| (id, f.samples))
                .collect(),
            integrals: self
                .integral_ids
                .into_iter()
                .zip(self.integrals)
                .map(|(id, i)| (id, i.at_samples))
                .collect(),
            moments: self.moments.map(|m| m.records).unwrap_or_default(),
            log,
        }
    }
}

/// Everything one replica recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaOutput {
    /// Replica index (also the seed-splitting counter).
    pub replica: u32,
    /// Field samples per test-function id.
    pub fields: Vec<(String, Vec<FieldSample>)>,
    /// Running time-integral values per integrand id.
    pub integrals: Vec<(String, Vec<(f64, f64)>)>,
    /// Window moment snapshots.
    pub moments: Vec<MomentRecord>,
    /// Integrator counters.
    pub log: EventLog,
}

impl ReplicaOutput {
    /// Stitches a later leg onto this one (same replica, same observers).
    pub fn merge(mut self, later: ReplicaOutput) -> Result<ReplicaOutput> {
        if self.replica != later.replica
            || self.fields.len() != later.fields.len()
            || self.integrals.len() != later.integrals.len()
        {
            return Err(CoreError::Checkpoint {
                message: "cannot merge outputs from different runs".to_string(),
            });
        }
        for ((id_a, samples), (id_b, more)) in self.fields.iter_mut().zip(later.fields) {
            if id_a != &id_b {
                return Err(CoreError::Checkpoint {
                    message: format!("field id mismatch: `{id_a}` vs `{id_b}`"),
                });
            }
            samples.extend(more);
        }
        for ((id_a, samples), (id_b, more)) in self.integrals.iter_mut().zip(later.integrals) {
            if id_a != &id_b {
                return Err(CoreError::Checkpoint {
                    message: format!("integral id mismatch: `{id_a}` vs `{id_b}`"),
                });
            }
            samples.extend(more);
        }
        self.moments.extend(later.moments);
        self.log = add_logs(self.log, later.log);
        Ok(self)
    }

    /// The samples recorded for test function `id`.
    pub fn field(&self, id: &str) -> Result<&[FieldSample]> {
        self.fields
            .iter()
            .find(|(fid, _)| fid == id)
            .map(|(_, s)| s.as_slice())
            .ok_or_else(|| CoreError::MissingAccumulator {
                name: id.to_string(),
            })
    }

    /// The running integral recorded for integrand `id`.
    pub fn integral(&self, id: &str) -> Result<&[(f64, f64)]> {
        self.integrals
            .iter()
            .find(|(iid, _)| iid == id)
            .map(|(_, s)| s.as_slice())
            .ok_or_else(|| CoreError::MissingAccumulator {
                name: id.to_string(),
            })
    }
}

fn add_logs(a: EventLog, b: EventLog) -> EventLog {
    EventLog {
        steps: a.steps + b.steps,
        exchange_events: a.exchange_events + b.exchange_events,
        bath_substeps: a.bath_substeps + b.bath_substeps,
        reflections: a.reflections + b.reflections,
        bath_hops: a.bath_hops + b.bath_hops,
    }
}

/// Runs one full replica trajectory from a Gibbs start.
pub fn run_replica(
    p: &ModelParams,
    cfg: &IntegratorConfig,
    obs: &ObservablesBlock,
    master_seed: u64,
    replica: u32,
) -> Result<ReplicaOutput> {
    let d = derive_params(p, cfg.t_max)?;
    let mut rng = replica_rng(master_seed, u64::from(replica));
    let init = sample_gibbs(p, &d, &mut rng)?;
    let mut bundle = Bundle::build(obs)?;
    let out = {
        let mut refs = bundle.observer_refs();
        run(p, &d, cfg, init, &mut rng, &mut refs)?
    };
    Ok(bundle.into_output(replica, out.log))
}

/// Bit-exact snapshot of a replica mid-trajectory, taken at a sampling time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Schema version.
    pub version: u32,
    /// Chain parameters.
    pub params: ModelParams,
    /// The full integrator configuration of the original run.
    pub integrator: IntegratorConfig,
    /// Master seed of the ensemble.
    pub master_seed: u64,
    /// Replica index.
    pub replica: u32,
    /// Macroscopic time of the snapshot.
    pub t: f64,
    /// Microscopic time of the snapshot.
    pub tau: f64,
    /// Lattice index of ring slot 0.
    pub origin: i64,
    /// Site values as raw IEEE-754 bits, for lossless round-tripping.
    pub sites_bits: Vec<u64>,
    /// Generator state.
    pub rng: RngCheckpoint,
    /// Frozen field-observer accumulators, in bundle order.
    pub field_states: Vec<(String, FieldObserverState)>,
    /// Frozen time-integral accumulators, in bundle order.
    pub integral_states: Vec<(String, f64)>,
    /// Counters accumulated so far.
    pub log: EventLog,
}

impl Checkpoint {
    /// Reconstructs the chain state.
    #[must_use]
    pub fn state(&self) -> ChainState {
        ChainState {
            sites: self.sites_bits.iter().map(|&b| f64::from_bits(b)).collect(),
            origin: self.origin,
            tau: self.tau,
        }
    }

    /// Serializes to pretty JSON at `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    /// Loads and version-checks a checkpoint file.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let ck: Self = serde_json::from_reader(std::io::BufReader::new(file))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(CoreError::Checkpoint {
                message: format!(
                    "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                    ck.version
                ),
            });
        }
        Ok(ck)
    }
}

fn snapshot(
    p: &ModelParams,
    cfg: &IntegratorConfig,
    master_seed: u64,
    replica: u32,
    state: &ChainState,
    rng: &Rng,
    bundle: &Bundle,
    log: EventLog,
) -> Checkpoint {
    let (field_states, integral_states) = bundle.freeze();
    Checkpoint {
        version: CHECKPOINT_VERSION,
        params: *p,
        integrator: cfg.clone(),
        master_seed,
        replica,
        t: state.tau / ((p.n as f64) * (p.n as f64)),
        tau: state.tau,
        origin: state.origin,
        sites_bits: state.sites.iter().map(|v| v.to_bits()).collect(),
        rng: RngCheckpoint::capture(rng),
        field_states,
        integral_states,
        log,
    }
}

/// Runs a replica up to the sampling time `checkpoint_at`, returning the
/// first-leg output together with a resumable checkpoint.
pub fn run_replica_split(
    p: &ModelParams,
    cfg: &IntegratorConfig,
    obs: &ObservablesBlock,
    master_seed: u64,
    replica: u32,
    checkpoint_at: f64,
) -> Result<(ReplicaOutput, Checkpoint)> {
    if !cfg
        .sample_times
        .iter()
        .any(|&t| (t - checkpoint_at).abs() <= 1e-12)
        || checkpoint_at <= 0.0
    {
        return Err(CoreError::Checkpoint {
            message: format!("checkpoint time {checkpoint_at} is not a positive sampling time"),
        });
    }
    // The window is sized for the full horizon so both legs and an
    // uninterrupted run share identical ring geometry.
    let d = derive_params(p, cfg.t_max)?;
    let mut rng = replica_rng(master_seed, u64::from(replica));
    let init = sample_gibbs(p, &d, &mut rng)?;
    let cfg_a = IntegratorConfig {
        t_max: checkpoint_at,
        sample_times: cfg
            .sample_times
            .iter()
            .copied()
            .filter(|&t| t <= checkpoint_at + 1e-12)
            .collect(),
        ..cfg.clone()
    };
    let mut bundle = Bundle::build(obs)?;
    let out = {
        let mut refs = bundle.observer_refs();
        run(p, &d, &cfg_a, init, &mut rng, &mut refs)?
    };
    let ck = snapshot(p, cfg, master_seed, replica, &out.state, &rng, &bundle, out.log);
    Ok((bundle.into_output(replica, out.log), ck))
}

/// Continues a replica from `ck` to the original horizon; the returned
/// output covers only the resumed leg (stitch with
/// [`ReplicaOutput::merge`]).
pub fn resume_replica(ck: &Checkpoint, obs: &ObservablesBlock) -> Result<ReplicaOutput> {
    let d = derive_params(&ck.params, ck.integrator.t_max)?;
    if d.origin != ck.origin || d.window != ck.sites_bits.len() {
        return Err(CoreError::Checkpoint {
            message: "window geometry does not match the checkpoint".to_string(),
        });
    }
    let mut rng = ck.rng.restore()?;
    let mut bundle = Bundle::restore(obs, &ck.field_states, &ck.integral_states)?;
    let out = {
        let mut refs = bundle.observer_refs();
        run(
            &ck.params,
            &d,
            &ck.integrator,
            ck.state(),
            &mut rng,
            &mut refs,
        )?
    };
    Ok(bundle.into_output(ck.replica, out.log))
}

/// Last-good-state capture emitted when a trajectory blows up.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupReport {
    /// Replica that failed.
    pub replica: u32,
    /// The integrator error, rendered.
    pub message: String,
    /// Macroscopic time of the last healthy sampling point.
    pub t_last_good: f64,
    /// Resumable snapshot of that point.
    pub checkpoint: Checkpoint,
}

impl BlowupReport {
    /// Serializes to pretty JSON at `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }
}

/// Runs a replica leg by leg so that a numerical blowup aborts with a
/// checkpoint of the last good sampled state. Healthy trajectories produce
/// output bit-identical to [`run_replica`].
pub fn run_replica_guarded(
    p: &ModelParams,
    cfg: &IntegratorConfig,
    obs: &ObservablesBlock,
    master_seed: u64,
    replica: u32,
) -> std::result::Result<ReplicaOutput, Box<BlowupReport>> {
    let fail = |message: String, ck: Checkpoint| {
        Box::new(BlowupReport {
            replica,
            message,
            t_last_good: ck.t,
            checkpoint: ck,
        })
    };
    let d = derive_params(p, cfg.t_max).map_err(|e| {
        Box::new(BlowupReport {
            replica,
            message: e.to_string(),
            t_last_good: 0.0,
            checkpoint: Checkpoint {
                version: CHECKPOINT_VERSION,
                params: *p,
                integrator: cfg.clone(),
                master_seed,
                replica,
                t: 0.0,
                tau: 0.0,
                origin: 0,
                sites_bits: Vec::new(),
                rng: RngCheckpoint::capture(&replica_rng(master_seed, u64::from(replica))),
                field_states: Vec::new(),
                integral_states: Vec::new(),
                log: EventLog::default(),
            },
        })
    })?;
    let mut rng = replica_rng(master_seed, u64::from(replica));
    let build = |e: CoreError, ck: Checkpoint| fail(e.to_string(), ck);

    let mut state = match sample_gibbs(p, &d, &mut rng) {
        Ok(s) => s,
        Err(e) => {
            let ck = snapshot(
                p,
                cfg,
                master_seed,
                replica,
                &ChainState {
                    sites: Vec::new(),
                    origin: d.origin,
                    tau: 0.0,
                },
                &rng,
                &Bundle::build(obs).expect("validated observables"),
                EventLog::default(),
            );
            return Err(build(e, ck));
        }
    };
    let mut bundle = Bundle::build(obs).map_err(|e| {
        let ck = snapshot(
            p,
            cfg,
            master_seed,
            replica,
            &state,
            &rng,
            &Bundle {
                field_ids: Vec::new(),
                fields: Vec::new(),
                integral_ids: Vec::new(),
                integrals: Vec::new(),
                moments: None,
            },
            EventLog::default(),
        );
        build(e, ck)
    })?;
    let mut log = EventLog::default();
    let mut ck = snapshot(p, cfg, master_seed, replica, &state, &rng, &bundle, log);

    let mut legs: Vec<f64> = cfg.sample_times.iter().copied().filter(|&t| t > 0.0).collect();
    legs.sort_by(|a, b| a.partial_cmp(b).expect("finite sample times"));
    if legs.last().copied().unwrap_or(0.0) < cfg.t_max - 1e-12 {
        legs.push(cfg.t_max);
    }
    for &leg_end in &legs {
        let cfg_leg = IntegratorConfig {
            t_max: leg_end,
            sample_times: cfg
                .sample_times
                .iter()
                .copied()
                .filter(|&t| t <= leg_end + 1e-12)
                .collect(),
            ..cfg.clone()
        };
        let out = {
            let mut refs = bundle.observer_refs();
            run(p, &d, &cfg_leg, state.clone(), &mut rng, &mut refs)
        };
        match out {
            Ok(o) => {
                state = o.state;
                log = add_logs(log, o.log);
                ck = snapshot(p, cfg, master_seed, replica, &state, &rng, &bundle, log);
            }
            Err(e) => return Err(build(e, ck)),
        }
    }
    Ok(bundle.into_output(replica, log))
}

/// Builds the rayon pool honoring the `BCL_THREADS` cap.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var("BCL_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| CoreError::InvalidConfig {
            field: "BCL_THREADS".to_string(),
            message: format!("must be a positive integer, got `{v}`"),
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CoreError::InvalidConfig {
            field: "BCL_THREADS".to_string(),
            message: e.to_string(),
        })
}

/// Runs `replicas` independent trajectories in parallel; outputs arrive in
/// replica order regardless of scheduling.
pub fn run_ensemble(
    p: &ModelParams,
    cfg: &IntegratorConfig,
    obs: &ObservablesBlock,
    master_seed: u64,
    replicas: u32,
) -> Result<Vec<ReplicaOutput>> {
    let pool = thread_pool()?;
    run_ensemble_on(&pool, p, cfg, obs, master_seed, replicas)
}

/// [`run_ensemble`] on an explicit pool (exercised by determinism tests).
pub fn run_ensemble_on(
    pool: &rayon::ThreadPool,
    p: &ModelParams,
    cfg: &IntegratorConfig,
    obs: &ObservablesBlock,
    master_seed: u64,
    replicas: u32,
) -> Result<Vec<ReplicaOutput>> {
    pool.install(|| {
        (0..replicas)
            .into_par_iter()
            .map(|i| run_replica(p, cfg, obs, master_seed, i))
            .collect()
    })
}

/// Writes one JSONL line per field sample:
/// `{replica, t, h_id, y, m, qv, terms{...}, bath_site}`.
pub fn write_observations_jsonl<W: Write>(w: &mut W, p: &ModelParams, outputs: &[ReplicaOutput]) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        replica: u32,
        t: f64,
        h_id: &'a str,
        y: f64,
        m: f64,
        qv: f64,
        terms: &'a crate::field::DynkinParts,
        bath_site: i64,
    }
    let c_n = p.c_n();
    for out in outputs {
        for (id, samples) in &out.fields {
            for s in samples {
                let line = Line {
                    replica: out.replica,
                    t: s.t,
                    h_id: id,
                    y: s.y,
                    m: s.martingale,
                    qv: s.qv.total(),
                    terms: &s.integral,
                    bath_site: bath_site(c_n, s.t),
                };
                serde_json::to_writer(&mut *w, &line)?;
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

/// Writes `replica,id,t,value` rows for every time-integral observer.
pub fn write_integrals_csv<W: Write>(w: &mut W, outputs: &[ReplicaOutput]) -> Result<()> {
    writeln!(w, "replica,id,t,value")?;
    for out in outputs {
        for (id, samples) in &out.integrals {
            for &(t, v) in samples {
                writeln!(w, "{},{},{t},{v}", out.replica, csv_field(id))?;
            }
        }
    }
    Ok(())
}

/// Writes `replica,t,mean,var,count` rows for the moment snapshots.
pub fn write_moments_csv<W: Write>(w: &mut W, outputs: &[ReplicaOutput]) -> Result<()> {
    writeln!(w, "replica,t,mean,var,count")?;
    for out in outputs {
        for m in &out.moments {
            writeln!(w, "{},{},{},{},{}", out.replica, m.t, m.mean, m.var, m.count)?;
        }
    }
    Ok(())
}

/// One verdict row of a report table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Grid point or check label.
    pub label: String,
    /// Compact parameter description.
    pub params: String,
    /// Point estimate.
    pub estimate: f64,
    /// Standard error of the estimate.
    pub se: f64,
    /// Target value, when the check has one.
    pub target: Option<f64>,
    /// Fitted log-log slope, for scaling rows.
    pub slope: Option<f64>,
    /// Bootstrap confidence bounds for the slope.
    pub ci_lo: Option<f64>,
    /// Upper bound.
    pub ci_hi: Option<f64>,
    /// Verdict.
    pub pass: bool,
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the report table: one row per grid point with
/// `params, estimate, SE, target, slope, CI, pass/fail`.
pub fn write_report_csv<W: Write>(w: &mut W, rows: &[ReportRow]) -> Result<()> {
    writeln!(w, "label,params,estimate,se,target,slope,ci_lo,ci_hi,pass")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            csv_field(&r.label),
            csv_field(&r.params),
            r.estimate,
            r.se,
            csv_opt(r.target),
            csv_opt(r.slope),
            csv_opt(r.ci_lo),
            csv_opt(r.ci_hi),
            if r.pass { "pass" } else { "fail" }
        )?;
    }
    Ok(())
}

/// Writes the JSON summary with the config hash for provenance.
pub fn write_summary_json<W: Write>(
    w: &mut W,
    config_hash: u64,
    seed: u64,
    rows: &[ReportRow],
) -> Result<()> {
    #[derive(Serialize)]
    struct Summary<'a> {
        config_hash: String,
        seed: u64,
        all_pass: bool,
        rows: &'a [ReportRow],
    }
    let summary = Summary {
        config_hash: format!("{config_hash:016x}"),
        seed,
        all_pass: rows.iter().all(|r| r.pass),
        rows,
    };
    serde_json::to_writer_pretty(&mut *w, &summary)?;
    writeln!(w)?;
    Ok(())
}

/// Compact `key=value` description of the model cell for report rows.
#[must_use]
pub fn params_label(p: &ModelParams) -> String {
    format!(
        "n={};kappa={};delta={};alpha={};gamma={};beta={};lambda={}",
        p.n, p.kappa, p.delta, p.alpha, p.gamma, p.beta, p.lambda
    )
}

/// Per-replica values of a statistic, in replica order.
pub fn replica_means<T, F: Fn(&T) -> f64>(outputs: &[T], f: F) -> Vec<f64> {
    outputs.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ObservablesBlock;

    fn small_setup() -> (ModelParams, IntegratorConfig, ObservablesBlock) {
        let p = ModelParams {
            n: 8,
            kappa: 1.0,
            delta: 0.0,
            window_buffer: 3,
            ..ModelParams::default()
        };
        let cfg = IntegratorConfig {
            t_max: 0.02,
            sample_times: vec![0.0, 0.005, 0.01, 0.015, 0.02],
            dt_micro: Some(0.05),
            exchange: crate::dynamics::ExchangeScheduling::Exact,
        };
        let obs = ObservablesBlock {
            fields: vec!["s:gauss".into(), "sdir:odd-gauss:1".into()],
            moments: true,
            boundary_eps: Some(0.25),
            replacement_ell: vec![2],
            bath_integrals: true,
        };
        (p, cfg, obs)
    }

    #[test]
    fn split_and_resume_match_uninterrupted_run_bit_exactly() {
        let (p, cfg, obs) = small_setup();
        let full = run_replica(&p, &cfg, &obs, 7, 0).unwrap();
        let (leg_a, ck) = run_replica_split(&p, &cfg, &obs, 7, 0, 0.01).unwrap();
        let leg_b = resume_replica(&ck, &obs).unwrap();
        let stitched = leg_a.merge(leg_b).unwrap();
        assert_eq!(full, stitched);
    }

    #[test]
    fn checkpoint_file_round_trips_bit_exactly() {
        let (p, cfg, obs) = small_setup();
        let (_, ck) = run_replica_split(&p, &cfg, &obs, 9, 1, 0.01).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(ck, back);
        // Resume from the file and from memory must agree exactly.
        let from_file = resume_replica(&back, &obs).unwrap();
        let from_mem = resume_replica(&ck, &obs).unwrap();
        assert_eq!(from_file, from_mem);
    }

    #[test]
    fn guarded_run_matches_plain_run_when_stable() {
        let (p, cfg, obs) = small_setup();
        let plain = run_replica(&p, &cfg, &obs, 11, 2).unwrap();
        let guarded = run_replica_guarded(&p, &cfg, &obs, 11, 2).unwrap();
        assert_eq!(plain, guarded);
    }

    #[test]
    fn guarded_run_reports_last_good_state_on_blowup() {
        // A strong drift at κ=0 feeds back through the exponential update and
        // overflows within a fraction of a macroscopic time unit.
        let p = ModelParams {
            alpha: 50.0,
            kappa: 0.0,
            gamma: 0.0,
            delta: 1000.0,
            beta: 1.0,
            lambda: 0.0,
            n: 4,
            window_buffer: 2,
        };
        let cfg = IntegratorConfig {
            t_max: 2.0,
            sample_times: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            dt_micro: Some(0.05),
            exchange: crate::dynamics::ExchangeScheduling::Exact,
        };
        let obs = ObservablesBlock {
            fields: vec!["s:gauss".into()],
            moments: false,
            boundary_eps: None,
            replacement_ell: vec![],
            bath_integrals: false,
        };
        let err = run_replica_guarded(&p, &cfg, &obs, 3, 0).unwrap_err();
        assert!(
            err.message.contains("blowup"),
            "error message names the failure: {}",
            err.message
        );
        // The capture is a healthy, resumable sampling point.
        let st = err.checkpoint.state();
        assert!(st.check_positive().is_ok());
        assert!(err.t_last_good < 2.0);
        assert_eq!(err.checkpoint.t, err.t_last_good);
    }

    #[test]
    fn ensembles_are_deterministic_across_pool_sizes() {
        let (p, cfg, obs) = small_setup();
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool2 = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let a = run_ensemble_on(&pool1, &p, &cfg, &obs, 5, 3).unwrap();
        let b = run_ensemble_on(&pool2, &p, &cfg, &obs, 5, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, o)| o.replica == i as u32));
    }

    #[test]
    fn jsonl_lines_carry_the_record_schema() {
        let (p, cfg, obs) = small_setup();
        let outputs = vec![run_replica(&p, &cfg, &obs, 13, 0).unwrap()];
        let mut buf = Vec::new();
        write_observations_jsonl(&mut buf, &p, &outputs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        // Two field observers, five sampling times each.
        assert_eq!(lines.len(), 10);
        for line in lines {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            for key in ["replica", "t", "h_id", "y", "m", "qv", "terms", "bath_site"] {
                assert!(v.get(key).is_some(), "missing key `{key}` in {line}");
            }
            for key in [
                "laplacian",
                "nonlinear",
                "laplacian_correction",
                "frame_mismatch",
                "bath",
            ] {
                assert!(
                    v["terms"].get(key).is_some(),
                    "missing term `{key}` in {line}"
                );
            }
        }
    }

    #[test]
    fn report_csv_and_summary_render() {
        let rows = vec![
            ReportRow {
                label: "scaling:n".into(),
                params: "n=16;kappa=0.5".into(),
                estimate: 0.125,
                se: 0.01,
                target: Some(-1.0),
                slope: Some(-0.97),
                ci_lo: Some(-1.2),
                ci_hi: Some(-0.8),
                pass: true,
            },
            ReportRow {
                label: "moment,check".into(),
                params: "n=32".into(),
                estimate: 1.002,
                se: 0.003,
                target: Some(1.0),
                slope: None,
                ci_lo: None,
                ci_hi: None,
                pass: true,
            },
        ];
        let mut csv = Vec::new();
        write_report_csv(&mut csv, &rows).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("label,params,estimate,se,target,slope,ci_lo,ci_hi,pass\n"));
        assert!(text.contains("\"moment,check\""), "quoted label: {text}");
        assert!(text.contains(",pass\n") || text.ends_with("pass\n"));

        let mut json = Vec::new();
        write_summary_json(&mut json, 0xdead_beef, 42, &rows).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(v["seed"], 42);
        assert_eq!(v["all_pass"], true);
        assert_eq!(v["config_hash"], "00000000deadbeef");
        assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn integral_and_moment_writers_render() {
        let (p, cfg, obs) = small_setup();
        let outputs = vec![run_replica(&p, &cfg, &obs, 21, 0).unwrap()];
        let mut buf = Vec::new();
        write_integrals_csv(&mut buf, &outputs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        // 5 integral observers (fwd+mirror boundary, bath-fluct,
        // bath-potential, deficit) × 5 sampling times + header.
        assert_eq!(text.lines().count(), 1 + 5 * 5, "{text}");
        assert!(text.contains("boundary:eps=0.25:fwd"));
        assert!(text.contains("deficit:ell=2"));

        let mut buf = Vec::new();
        write_moments_csv(&mut buf, &outputs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 5, "{text}");
    }
}
