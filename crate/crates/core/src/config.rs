//! Experiment configuration: the TOML schema, validation with field paths,
//! phase-diagram regime labels, and sweep-cell expansion.
//!
//! A configuration file has up to five tables:
//!
//! ```toml
//! [model]        # chain parameters; all optional, see ModelParams defaults
//! n = 32
//! kappa = 0.5
//! delta = 0.0
//!
//! [integrator]
//! t_max = 0.5
//! samples = 16          # equally spaced sampling times, or:
//! # sample_times = [0.0, 0.1, 0.5]
//! # dt_micro = 0.05     # microscopic substep override
//! exchange = "exact"    # or "tau-leap"
//!
//! [run]
//! replicas = 16
//! seed = 1
//! # out_dir = "out"
//! # checkpoint_time = 0.25   # must coincide with a sampling time
//!
//! [observables]
//! fields = ["s:gauss"]
//! moments = true
//! # boundary_eps = 0.125     # requires eps*n to be a positive integer
//! # replacement_ell = [4, 8]
//! # bath_integrals = true
//!
//! [sweep]              # optional; present only for phase-diagram sweeps
//! n = [16, 32, 64]
//! kappa = [0.5, 1.0]
//! delta = [-2.0, 0.0, 2.0]
//! ```

use crate::dynamics::{ExchangeScheduling, IntegratorConfig};
use crate::error::{CoreError, Result};
use crate::model::ModelParams;
use crate::testfn;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Complete experiment description, deserialized from TOML.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Chain parameters for the base cell.
    pub model: ModelParams,
    /// Time horizon and stepping.
    pub integrator: IntegratorBlock,
    /// Replication, seeding, and output destination.
    pub run: RunBlock,
    /// Which observers to attach to every replica.
    pub observables: ObservablesBlock,
    /// Optional phase-diagram axes; when present, `simulate` settings are
    /// repeated over the product of the axes.
    pub sweep: Option<SweepBlock>,
}

/// Time horizon and stepping controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorBlock {
    /// Macroscopic horizon.
    pub t_max: f64,
    /// Number of equally spaced sampling times after 0 (used when
    /// `sample_times` is absent).
    pub samples: u32,
    /// Explicit sampling times overriding `samples`.
    pub sample_times: Option<Vec<f64>>,
    /// Microscopic substep override.
    pub dt_micro: Option<f64>,
    /// Bond-swap scheduling policy.
    pub exchange: ExchangeScheduling,
}

impl Default for IntegratorBlock {
    fn default() -> Self {
        Self {
            t_max: 0.5,
            samples: 16,
            sample_times: None,
            dt_micro: None,
            exchange: ExchangeScheduling::Exact,
        }
    }
}

/// Replication and output controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlock {
    /// Number of independent replicas.
    pub replicas: u32,
    /// Master seed; replica seeds derive from it by counter splitting.
    pub seed: u64,
    /// Output directory for JSONL/CSV/JSON artifacts.
    pub out_dir: Option<PathBuf>,
    /// Write a checkpoint when the trajectory reaches this sampling time.
    pub checkpoint_time: Option<f64>,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            replicas: 16,
            seed: 1,
            out_dir: None,
            checkpoint_time: None,
        }
    }
}

/// Observer selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservablesBlock {
    /// Test-function ids for fluctuation-field observers.
    pub fields: Vec<String>,
    /// Record per-site moment summaries at sampling times.
    pub moments: bool,
    /// Track both orientations of the boundary box functional at this width.
    pub boundary_eps: Option<f64>,
    /// Track the box-deficit functional at these box lengths.
    pub replacement_ell: Vec<u32>,
    /// Track the bath-site fluctuation and bath-potential integrals.
    pub bath_integrals: bool,
}

impl Default for ObservablesBlock {
    fn default() -> Self {
        Self {
            fields: vec!["s:gauss".to_string()],
            moments: true,
            boundary_eps: None,
            replacement_ell: Vec::new(),
            bath_integrals: false,
        }
    }
}

/// Phase-diagram axes; the sweep runs the product of all lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    /// Lattice scales.
    pub n: Vec<u32>,
    /// Drift exponents.
    pub kappa: Vec<f64>,
    /// Bath exponents.
    pub delta: Vec<f64>,
    /// Optional kernel-width axis for replacement studies.
    pub eps: Vec<f64>,
    /// Optional box-length axis for replacement studies.
    pub ell: Vec<u32>,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            n: vec![16, 32, 64],
            kappa: vec![0.5, 1.0],
            delta: vec![-2.0, 0.0, 2.0],
            eps: Vec::new(),
            ell: Vec::new(),
        }
    }
}

/// One cell of a sweep: the base model with `(κ, δ, n)` overridden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    /// Drift exponent.
    pub kappa: f64,
    /// Bath exponent.
    pub delta: f64,
    /// Lattice scale.
    pub n: u32,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> CoreError {
    CoreError::InvalidConfig {
        field: field.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| invalid("<document>", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and parses a TOML file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            invalid(
                "<file>",
                format!("cannot read `{}`: {e}", path.display()),
            )
        })?;
        Self::from_toml_str(&text)
    }

    /// Serializes back to canonical TOML.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| invalid("<document>", e.to_string()))
    }

    /// Validates every block, reporting the offending field path.
    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| match e {
            CoreError::InvalidParameter { name, message } => {
                invalid(format!("model.{name}"), message)
            }
            other => other,
        })?;

        let it = &self.integrator;
        if !(it.t_max > 0.0) || !it.t_max.is_finite() {
            return Err(invalid(
                "integrator.t_max",
                format!("must be positive and finite, got {}", it.t_max),
            ));
        }
        if it.sample_times.is_none() && it.samples == 0 {
            return Err(invalid(
                "integrator.samples",
                "must be at least 1 when sample_times is absent".to_string(),
            ));
        }
        if let Some(times) = &it.sample_times {
            if times.is_empty() {
                return Err(invalid(
                    "integrator.sample_times",
                    "must be nonempty when given".to_string(),
                ));
            }
            for (i, &t) in times.iter().enumerate() {
                if !t.is_finite() || t < 0.0 || t > it.t_max + 1e-12 {
                    return Err(invalid(
                        format!("integrator.sample_times[{i}]"),
                        format!("must lie in [0, t_max], got {t}"),
                    ));
                }
            }
        }
        if let Some(h) = it.dt_micro {
            if !(h > 0.0) || !h.is_finite() {
                return Err(invalid(
                    "integrator.dt_micro",
                    format!("must be positive and finite, got {h}"),
                ));
            }
        }

        if self.run.replicas == 0 {
            return Err(invalid(
                "run.replicas",
                "must be at least 1".to_string(),
            ));
        }
        if let Some(tc) = self.run.checkpoint_time {
            let times = self.sample_times();
            if !times.iter().any(|&t| (t - tc).abs() <= 1e-12) || tc <= 0.0 {
                return Err(invalid(
                    "run.checkpoint_time",
                    format!("must coincide with a positive sampling time, got {tc}"),
                ));
            }
        }

        for (i, id) in self.observables.fields.iter().enumerate() {
            testfn::builtin(id)
                .map_err(|e| invalid(format!("observables.fields[{i}]"), e.to_string()))?;
        }
        if let Some(eps) = self.observables.boundary_eps {
            let ell = eps * self.model.n as f64;
            if !(eps > 0.0) || (ell - ell.round()).abs() > 1e-9 || ell.round() < 1.0 {
                return Err(invalid(
                    "observables.boundary_eps",
                    format!("eps*n must be a positive integer, got eps={eps} with n={}", self.model.n),
                ));
            }
        }
        for (i, &ell) in self.observables.replacement_ell.iter().enumerate() {
            if ell == 0 {
                return Err(invalid(
                    format!("observables.replacement_ell[{i}]"),
                    "must be at least 1".to_string(),
                ));
            }
        }

        if let Some(sw) = &self.sweep {
            if sw.n.is_empty() {
                return Err(invalid("sweep.n", "axis must be nonempty".to_string()));
            }
            if sw.kappa.is_empty() {
                return Err(invalid("sweep.kappa", "axis must be nonempty".to_string()));
            }
            if sw.delta.is_empty() {
                return Err(invalid("sweep.delta", "axis must be nonempty".to_string()));
            }
            if sw.n.iter().any(|&n| n == 0) {
                return Err(invalid("sweep.n", "scales must be at least 1".to_string()));
            }
            if sw.kappa.iter().any(|k| !k.is_finite()) {
                return Err(invalid("sweep.kappa", "values must be finite".to_string()));
            }
            if sw.delta.iter().any(|d| !d.is_finite()) {
                return Err(invalid("sweep.delta", "values must be finite".to_string()));
            }
        }
        Ok(())
    }

    /// The effective sampling times (explicit list, or `samples` equally
    /// spaced points after a leading 0).
    #[must_use]
    pub fn sample_times(&self) -> Vec<f64> {
        match &self.integrator.sample_times {
            Some(times) => {
                let mut ts = times.clone();
                ts.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
                ts
            }
            None => {
                let k = self.integrator.samples as usize;
                let mut ts = vec![0.0];
                for i in 1..=k {
                    ts.push(self.integrator.t_max * i as f64 / k as f64);
                }
                ts
            }
        }
    }

    /// The low-level integrator configuration for one trajectory.
    #[must_use]
    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            t_max: self.integrator.t_max,
            sample_times: self.sample_times(),
            dt_micro: self.integrator.dt_micro,
            exchange: self.integrator.exchange,
        }
    }

    /// Cross product of the sweep axes in deterministic order (κ outermost,
    /// then δ, then n). Empty when no sweep table is present.
    #[must_use]
    pub fn sweep_cells(&self) -> Vec<SweepCell> {
        let Some(sw) = &self.sweep else {
            return Vec::new();
        };
        let mut cells = Vec::with_capacity(sw.kappa.len() * sw.delta.len() * sw.n.len());
        for &kappa in &sw.kappa {
            for &delta in &sw.delta {
                for &n in &sw.n {
                    cells.push(SweepCell { kappa, delta, n });
                }
            }
        }
        cells
    }

    /// FNV-1a hash of the canonical TOML serialization, for provenance
    /// stamping of summaries.
    #[must_use]
    pub fn hash(&self) -> u64 {
        let text = self.to_toml_string().unwrap_or_default();
        fnv1a(text.as_bytes())
    }
}

/// 64-bit FNV-1a.
#[must_use]
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Family of distributions the limit field lives in for a given `(κ, δ)`:
/// the drift-exponent side decides between the nonlinear equation (κ = 1/2)
/// and the linear one (κ > 1/2), and the bath exponent decides the boundary
/// behaviour of admissible test functions.
#[must_use]
pub fn regime_label(kappa: f64, delta: f64) -> String {
    let eq = if (kappa - 0.5).abs() < 1e-12 {
        "SBE"
    } else if kappa > 0.5 {
        "OU"
    } else {
        "supercritical"
    };
    let space = if delta > 1.0 {
        "S"
    } else if delta > -1.0 {
        "S_Dir"
    } else {
        "S_0"
    };
    format!("{eq}({space})")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates_and_round_trips() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
    }

    #[test]
    fn parses_overrides_and_rejects_unknown_keys() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            [model]
            n = 64
            kappa = 1.0
            delta = 2.0

            [integrator]
            t_max = 0.25
            samples = 4
            exchange = "tau-leap"

            [run]
            replicas = 8
            seed = 42
            "#,
        )
        .unwrap();
        assert_eq!(cfg.model.n, 64);
        assert_eq!(cfg.integrator.exchange, ExchangeScheduling::TauLeap);
        assert_eq!(cfg.run.seed, 42);
        assert_eq!(
            cfg.sample_times(),
            vec![0.0, 0.0625, 0.125, 0.1875, 0.25]
        );

        let err = ExperimentConfig::from_toml_str("[model]\nnn = 3\n").unwrap_err();
        assert!(err.to_string().contains("nn"), "mentions the bad key: {err}");
    }

    #[test]
    fn validation_errors_carry_field_paths() {
        let mut cfg = ExperimentConfig::default();
        cfg.model.beta = -1.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("model.beta"), "{err}");

        let mut cfg = ExperimentConfig::default();
        cfg.observables.boundary_eps = Some(0.1); // 0.1 * 32 = 3.2
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("observables.boundary_eps"), "{err}");

        let mut cfg = ExperimentConfig::default();
        cfg.run.checkpoint_time = Some(0.123);
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("run.checkpoint_time"), "{err}");

        let mut cfg = ExperimentConfig::default();
        cfg.observables.fields = vec!["nope:gauss".into()];
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("observables.fields[0]"), "{err}");

        let mut cfg = ExperimentConfig::default();
        cfg.sweep = Some(SweepBlock {
            n: vec![],
            ..SweepBlock::default()
        });
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("sweep.n"), "{err}");
    }

    #[test]
    fn regime_labels_cover_the_six_cells() {
        assert_eq!(regime_label(0.5, -2.0), "SBE(S_0)");
        assert_eq!(regime_label(0.5, 0.0), "SBE(S_Dir)");
        assert_eq!(regime_label(0.5, 2.0), "SBE(S)");
        assert_eq!(regime_label(1.0, -2.0), "OU(S_0)");
        assert_eq!(regime_label(1.0, 0.0), "OU(S_Dir)");
        assert_eq!(regime_label(1.0, 2.0), "OU(S)");
        // The boundary case δ = 1 still needs Dirichlet data; δ = -1 is
        // already in the fully degenerate class.
        assert_eq!(regime_label(1.0, 1.0), "OU(S_Dir)");
        assert_eq!(regime_label(1.0, -1.0), "OU(S_0)");
    }

    #[test]
    fn sweep_cells_enumerate_in_axis_order() {
        let mut cfg = ExperimentConfig::default();
        cfg.sweep = Some(SweepBlock::default());
        let cells = cfg.sweep_cells();
        assert_eq!(cells.len(), 2 * 3 * 3);
        assert_eq!(
            cells[0],
            SweepCell {
                kappa: 0.5,
                delta: -2.0,
                n: 16
            }
        );
        assert_eq!(
            cells[17],
            SweepCell {
                kappa: 1.0,
                delta: 2.0,
                n: 64
            }
        );
    }

    #[test]
    fn hash_is_sensitive_to_any_field() {
        let base = ExperimentConfig::default();
        let mut other = base.clone();
        other.run.seed = 2;
        assert_ne!(base.hash(), other.hash());
    }
}
