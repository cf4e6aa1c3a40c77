//! Experiment configuration: one JSON document with dataset, model,
//! partition, train and output sections. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use fedsim::data::{PartitionPlan, SyntheticParams};
use fedsim::fed::{Algorithm, Seeds, TrainingConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliResult, Failure};

pub const SEED_ENV: &str = "FEDSIM_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionConfig>,
    pub train: TrainConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetConfig {
    Synthetic {
        seed: u64,
        train_size: usize,
        test_size: usize,
        input_dim: usize,
        num_classes: usize,
        #[serde(default = "default_separation")]
        separation: f64,
        #[serde(default = "default_noise")]
        noise: f64,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
    Csv {
        train: PathBuf,
        test: PathBuf,
        num_classes: usize,
        #[serde(default)]
        header: bool,
    },
}

fn default_separation() -> f64 {
    SyntheticParams::default().separation
}

fn default_noise() -> f64 {
    SyntheticParams::default().noise
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub precision: Precision,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PartitionConfig {
    Iid {
        #[serde(rename = "K")]
        clients: usize,
        seed: u64,
    },
    NonIid {
        #[serde(rename = "K")]
        clients: usize,
        #[serde(rename = "L")]
        labels_per_client: usize,
        seed: u64,
    },
    Manual {
        assignment: Vec<Vec<usize>>,
    },
}

impl PartitionConfig {
    pub fn clients(&self) -> usize {
        match self {
            PartitionConfig::Iid { clients, .. } | PartitionConfig::NonIid { clients, .. } => {
                *clients
            }
            PartitionConfig::Manual { assignment } => assignment.len(),
        }
    }

    pub fn plan(&self) -> PartitionPlan {
        match self {
            PartitionConfig::Iid { clients, seed } => PartitionPlan::iid(*clients, *seed),
            PartitionConfig::NonIid {
                clients,
                labels_per_client,
                seed,
            } => PartitionPlan::noniid_l(*clients, *labels_per_client, *seed),
            PartitionConfig::Manual { assignment } => PartitionPlan::manual(assignment.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    FedMmb,
    /// FedMMB with `C = 1`.
    FedSmb,
    FedAvg,
    Centralized,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(default)]
    pub init: u64,
    #[serde(default)]
    pub shuffle: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: Mode,
    #[serde(rename = "B")]
    pub batch_size: usize,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub batch_count: Option<usize>,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub local_epochs: Option<usize>,
    pub eta: f64,
    #[serde(rename = "I_max")]
    pub rounds: u64,
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
    #[serde(default)]
    pub seeds: SeedConfig,
    #[serde(default)]
    pub parallel: bool,
    #[serde(default)]
    pub train_loss: bool,
}

fn default_eval_every() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub run_name: String,
}

impl OutputConfig {
    pub fn csv_path(&self) -> PathBuf {
        self.dir.join(format!("{}.csv", self.run_name))
    }

    pub fn sidecar_path(&self) -> PathBuf {
        self.dir.join(format!("{}.json", self.run_name))
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses either a plain config or a run sidecar (`{config, metadata}`).
    pub fn from_value(value: Value) -> CliResult<Self> {
        let value = match value {
            Value::Object(mut map)
                if map.contains_key("config") && map.contains_key("metadata") =>
            {
                map.remove("config").unwrap_or(Value::Null)
            }
            other => other,
        };
        let cfg: Self = serde_json::from_value(value).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_value(read_json(path)?)
    }

    /// Replaces every seed with `seed`.
    pub fn override_seeds(&mut self, seed: u64) {
        if let DatasetConfig::Synthetic { seed: s, .. } = &mut self.dataset {
            *s = seed;
        }
        if let Some(
            PartitionConfig::Iid { seed: s, .. } | PartitionConfig::NonIid { seed: s, .. },
        ) = &mut self.partition
        {
            *s = seed;
        }
        self.train.seeds = SeedConfig {
            init: seed,
            shuffle: seed,
        };
    }

    /// Applies `FEDSIM_SEED` when set; returns the override used.
    pub fn apply_seed_env(&mut self) -> CliResult<Option<u64>> {
        match std::env::var(SEED_ENV) {
            Ok(raw) => {
                let seed = raw.trim().parse().map_err(|_| {
                    invalid(format!(
                        "{SEED_ENV} must be an unsigned integer, got {raw:?}"
                    ))
                })?;
                self.override_seeds(seed);
                Ok(Some(seed))
            }
            Err(_) => Ok(None),
        }
    }

    pub fn algorithm(&self) -> CliResult<Algorithm> {
        let t = &self.train;
        if t.batch_count.is_some() && t.local_epochs.is_some() {
            return Err(invalid("train.C and train.E are mutually exclusive"));
        }
        match (t.mode, t.batch_count, t.local_epochs) {
            (Mode::FedMmb, Some(c), None) => Ok(Algorithm::FedMmb { batch_count: c }),
            (Mode::FedMmb, None, _) => Err(invalid("mode fedmmb needs train.C")),
            (Mode::FedSmb, None | Some(1), None) => Ok(Algorithm::FedMmb { batch_count: 1 }),
            (Mode::FedSmb, Some(c), _) => Err(invalid(format!("mode fedsmb fixes C = 1, got {c}"))),
            (Mode::FedAvg, None, Some(e)) => Ok(Algorithm::FedAvg { local_epochs: e }),
            (Mode::FedAvg, _, None) => Err(invalid("mode fedavg needs train.E")),
            (Mode::Centralized, None, None) => Ok(Algorithm::Centralized),
            (Mode::Centralized, ..) => Err(invalid("mode centralized takes neither C nor E")),
            (_, Some(_), _) => Err(invalid("train.C only applies to fedmmb and fedsmb")),
            (_, _, Some(_)) => Err(invalid("train.E only applies to fedavg")),
        }
    }

    pub fn training_config(&self) -> CliResult<TrainingConfig> {
        let algorithm = self.algorithm()?;
        let clients = match (&self.partition, algorithm) {
            (None, Algorithm::Centralized) => 1,
            (Some(_), Algorithm::Centralized) => {
                return Err(invalid("centralized runs take no partition section"))
            }
            (Some(p), _) => p.clients(),
            (None, _) => return Err(invalid("federated runs need a partition section")),
        };
        let partition_seed = match &self.partition {
            Some(PartitionConfig::Iid { seed, .. } | PartitionConfig::NonIid { seed, .. }) => *seed,
            _ => 0,
        };
        let t = &self.train;
        let cfg = TrainingConfig::new(algorithm, clients, t.batch_size, t.eta, t.rounds)
            .with_eval_every(t.eval_every)
            .with_seeds(Seeds {
                init: t.seeds.init,
                shuffle: t.seeds.shuffle,
                partition: partition_seed,
            })
            .with_parallel(t.parallel)
            .with_train_loss(t.train_loss);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.training_config()?;
        if self.model.hidden.contains(&0) {
            return Err(invalid("hidden widths must be >= 1"));
        }
        let name = &self.output.run_name;
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(invalid(format!(
                "run_name must be a plain file stem, got {name:?}"
            )));
        }
        if let DatasetConfig::Synthetic {
            train_size,
            test_size,
            separation,
            noise,
            ..
        } = &self.dataset
        {
            if *train_size == 0 || *test_size == 0 {
                return Err(invalid("synthetic train_size and test_size must be >= 1"));
            }
            if !(separation.is_finite() && noise.is_finite() && *noise >= 0.0) {
                return Err(invalid(
                    "synthetic separation and noise must be finite, noise >= 0",
                ));
            }
        }
        Ok(())
    }
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}
