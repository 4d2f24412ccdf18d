//! Experiment configuration, read from JSON. Every field has a default and
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boosting::surrogate::{
    DEFAULT_DEGREE, DEFAULT_FRACTION_BITS, DEFAULT_GRADIENT_BOUND, DEFAULT_MARGIN_CLAMP,
};
use crate::boosting::{BoostParams, LossSpec};
use crate::r1cs::{GradientCircuitParams, DEFAULT_RANGE_BITS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("field `{field}`: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Defense {
    None,
    Median,
    Zkp,
}

impl Defense {
    pub const ALL: [Defense; 3] = [Defense::None, Defense::Median, Defense::Zkp];

    pub fn name(self) -> &'static str {
        match self {
            Defense::None => "none",
            Defense::Median => "median",
            Defense::Zkp => "zkp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefenseChoice {
    None,
    Median,
    Zkp,
    All,
}

impl DefenseChoice {
    pub fn defenses(self) -> Vec<Defense> {
        match self {
            DefenseChoice::None => vec![Defense::None],
            DefenseChoice::Median => vec![Defense::Median],
            DefenseChoice::Zkp => vec![Defense::Zkp],
            DefenseChoice::All => Defense::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    /// Generated with the experiment seed.
    Synthetic { n_features: usize, noise: f64 },
    /// `label,f1,..,fK` rows; the last `test_rows` rows are held out.
    Csv {
        path: PathBuf,
        limit_rows: Option<usize>,
    },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic {
            n_features: 10,
            noise: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitConfig {
    /// `f`
    pub fraction_bits: u32,
    /// `M`
    pub margin_clamp: f64,
    /// `B`
    pub gradient_bound: f64,
    pub degree: usize,
    pub range_bits: u32,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self {
            fraction_bits: DEFAULT_FRACTION_BITS,
            margin_clamp: DEFAULT_MARGIN_CLAMP,
            gradient_bound: DEFAULT_GRADIENT_BOUND,
            degree: DEFAULT_DEGREE,
            range_bits: DEFAULT_RANGE_BITS,
        }
    }
}

impl CircuitConfig {
    pub fn loss_spec(&self) -> Result<LossSpec, ConfigError> {
        LossSpec::fit(
            self.degree,
            self.margin_clamp,
            self.fraction_bits,
            self.gradient_bound,
        )
        .map_err(|e| invalid("circuit", e.to_string()))
    }

    pub fn gradient_params(
        &self,
        loss: &LossSpec,
        n_instances: usize,
    ) -> Result<GradientCircuitParams, ConfigError> {
        GradientCircuitParams::new(n_instances, loss, self.range_bits)
            .map_err(|e| invalid("circuit", e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub rounds_csv: Option<PathBuf>,
    pub summary_json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_nodes: usize,
    pub rows_per_node: usize,
    pub test_rows: usize,
    pub byzantine_fraction: f64,
    pub defense: DefenseChoice,
    pub rounds: usize,
    pub depth: usize,
    pub bins: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub circuit: CircuitConfig,
    /// Byzantine scale `kappa`.
    pub kappa: f64,
    /// Byzantine nodes flip gradient signs.
    pub invert: bool,
    pub dirichlet_alpha: f64,
    pub queue_partitions: usize,
    /// Worker threads; all available cores when absent.
    pub threads: Option<usize>,
    /// Record wall-clock timings. Without them the summary is a pure
    /// function of the config.
    pub timings: bool,
    pub dataset: DatasetSource,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_nodes: 50,
            rows_per_node: 40,
            test_rows: 10_000,
            byzantine_fraction: 0.1,
            defense: DefenseChoice::All,
            rounds: 20,
            depth: 3,
            bins: 32,
            lambda: 1.0,
            gamma: 0.0,
            learning_rate: 0.3,
            circuit: CircuitConfig::default(),
            kappa: 10.0,
            invert: true,
            dirichlet_alpha: 0.5,
            queue_partitions: 8,
            threads: None,
            timings: true,
            dataset: DatasetSource::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn boost_params(&self) -> BoostParams {
        BoostParams {
            rounds: self.rounds,
            max_depth: self.depth,
            lambda: self.lambda,
            gamma: self.gamma,
            learning_rate: self.learning_rate,
            n_bins: self.bins,
        }
    }

    /// Byzantine node count: `round(fraction * n_nodes)`.
    pub fn n_byzantine(&self) -> usize {
        (self.byzantine_fraction * self.n_nodes as f64).round() as usize
    }

    /// Range checks only; the circuit parameters are checked by fitting.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(
                    field,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        let within = |field, v: usize, lo: usize, hi: usize| {
            if (lo..=hi).contains(&v) {
                Ok(())
            } else {
                Err(invalid(field, format!("must lie in {lo}..={hi}, got {v}")))
            }
        };
        within("n_nodes", self.n_nodes, 1, 10_000)?;
        within("rows_per_node", self.rows_per_node, 1, 4096)?;
        within("test_rows", self.test_rows, 1, 1_000_000)?;
        within("rounds", self.rounds, 1, 1000)?;
        within("depth", self.depth, 1, 10)?;
        within("bins", self.bins, 2, 1024)?;
        within("queue_partitions", self.queue_partitions, 1, 1024)?;
        if let Some(t) = self.threads {
            within("threads", t, 1, 1024)?;
        }
        if !(0.0..1.0).contains(&self.byzantine_fraction) {
            return Err(invalid("byzantine_fraction", "must lie in [0, 1)"));
        }
        positive("lambda", self.lambda)?;
        positive("kappa", self.kappa)?;
        positive("dirichlet_alpha", self.dirichlet_alpha)?;
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(invalid("gamma", "must be non-negative and finite"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(invalid("learning_rate", "must lie in (0, 1]"));
        }
        match &self.dataset {
            DatasetSource::Synthetic { n_features, noise } => {
                within("dataset.n_features", *n_features, 2, 10_000)?;
                if !(0.0..=1.0).contains(noise) {
                    return Err(invalid("dataset.noise", "must lie in [0, 1]"));
                }
            }
            DatasetSource::Csv { limit_rows, .. } => {
                if *limit_rows == Some(0) {
                    return Err(invalid("dataset.limit_rows", "must be positive"));
                }
            }
        }
        let c = &self.circuit;
        within("circuit.fraction_bits", c.fraction_bits as usize, 4, 24)?;
        within("circuit.degree", c.degree, 1, 32)?;
        within("circuit.range_bits", c.range_bits as usize, 8, 40)?;
        positive("circuit.margin_clamp", c.margin_clamp)?;
        positive("circuit.gradient_bound", c.gradient_bound)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.n_byzantine(), 5);
        assert_eq!(cfg.boost_params(), BoostParams::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"n_nodes": 5, "bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        assert!(ExperimentConfig::from_json(r#"{"circuit": {"degre": 3}}"#).is_err());
    }

    #[test]
    fn parse_errors_carry_a_line() {
        let err = ExperimentConfig::from_json("{\n\"seed\": \"x\"\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn ranges_are_enforced() {
        for bad in [
            r#"{"byzantine_fraction": 1.0}"#,
            r#"{"byzantine_fraction": -0.1}"#,
            r#"{"n_nodes": 0}"#,
            r#"{"kappa": 0}"#,
            r#"{"learning_rate": 1.5}"#,
            r#"{"threads": 0}"#,
            r#"{"dataset": {"kind": "synthetic", "n_features": 1, "noise": 0.1}}"#,
        ] {
            match ExperimentConfig::from_json(bad) {
                Err(ConfigError::Invalid { .. }) => {}
                other => panic!("{bad} gave {other:?}"),
            }
        }
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ExperimentConfig {
            defense: DefenseChoice::Zkp,
            dataset: DatasetSource::Csv {
                path: "x.csv".into(),
                limit_rows: Some(10),
            },
            ..ExperimentConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn default_circuit_fits() {
        let c = CircuitConfig::default();
        let loss = c.loss_spec().unwrap();
        assert!(c.gradient_params(&loss, 40).is_ok());
    }
}
