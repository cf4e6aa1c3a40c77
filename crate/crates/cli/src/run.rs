//! `run`: builds data, partitions and model from a config, trains, and writes
//! the metrics CSV plus a JSON sidecar.

use std::io::Write;
use std::path::Path;

use fedsim::data::{load_csv, load_idx, synthetic_with, Dataset, SyntheticParams};
use fedsim::fed::{
    build_clients, comm_cost, run_centralized, run_federated, Algorithm, MetricsLog,
};
use fedsim::nn::{init_weights, NetworkSpec};
use fedsim::Scalar;
use serde::Serialize;
use serde_json::json;

use crate::config::{DatasetConfig, ExperimentConfig, Precision};
use crate::error::{CliResult, Failure};

/// Facts about a finished run recorded next to the config in the sidecar.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetadata {
    pub version: String,
    pub algorithm: String,
    pub precision: Precision,
    pub train_size: usize,
    pub test_size: usize,
    pub input_dim: usize,
    pub num_classes: usize,
    pub param_count: usize,
    pub client_samples: Vec<usize>,
    pub bytes_per_round: u64,
    pub seed_override: Option<u64>,
    pub evaluations: usize,
    pub max_accuracy: Option<f64>,
    pub final_accuracy: Option<f64>,
}

pub struct RunResult {
    pub log: MetricsLog,
    pub metadata: RunMetadata,
}

fn load_data<T: Scalar>(cfg: &DatasetConfig) -> CliResult<(Dataset<T>, Dataset<T>)> {
    let (train, test) = match cfg {
        DatasetConfig::Synthetic {
            seed,
            train_size,
            test_size,
            input_dim,
            num_classes,
            separation,
            noise,
        } => {
            let params = SyntheticParams {
                separation: *separation,
                noise: *noise,
            };
            let all = synthetic_with(
                &params,
                *seed,
                train_size + test_size,
                *input_dim,
                *num_classes,
            )?;
            all.split_at(*train_size)?
        }
        DatasetConfig::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
        } => (
            load_idx(train_images, train_labels)?,
            load_idx(test_images, test_labels)?,
        ),
        DatasetConfig::Csv {
            train,
            test,
            num_classes,
            header,
        } => (
            load_csv(train, *num_classes, *header)?,
            load_csv(test, *num_classes, *header)?,
        ),
    };
    if train.input_dim() != test.input_dim() {
        return Err(Failure::Data(format!(
            "train has {} features per sample, test has {}",
            train.input_dim(),
            test.input_dim()
        )));
    }
    let classes = train.num_classes().max(test.num_classes());
    Ok((
        train.with_num_classes(classes)?,
        test.with_num_classes(classes)?,
    ))
}

fn execute_typed<T: Scalar>(
    cfg: &ExperimentConfig,
    seed_override: Option<u64>,
) -> CliResult<RunResult> {
    let training = cfg.training_config()?;
    let (train, test) = load_data::<T>(&cfg.dataset)?;
    let spec = NetworkSpec::new(
        train.input_dim(),
        cfg.model.hidden.clone(),
        train.num_classes(),
    )?;
    let init = init_weights::<T>(&spec, training.seeds.init);
    let (out, client_samples, bytes_per_round) = match (&cfg.partition, training.algorithm) {
        (Some(partition), algorithm) if algorithm != Algorithm::Centralized => {
            let parts = partition.plan().apply(&train)?;
            let samples = parts.iter().map(|p| p.len()).collect();
            let mut clients = build_clients(parts, &training)?;
            let out = run_federated(&spec, &training, init, &mut clients, &test)?;
            (
                out,
                samples,
                comm_cost::<T>(&spec, training.clients).bytes_per_round,
            )
        }
        _ => (
            run_centralized(&spec, &training, init, &train, &test)?,
            vec![train.len()],
            0,
        ),
    };
    let metadata = RunMetadata {
        version: env!("CARGO_PKG_VERSION").to_string(),
        algorithm: training.algorithm.name().to_string(),
        precision: cfg.model.precision,
        train_size: train.len(),
        test_size: test.len(),
        input_dim: train.input_dim(),
        num_classes: train.num_classes(),
        param_count: spec.param_count(),
        client_samples,
        bytes_per_round,
        seed_override,
        evaluations: out.log.len(),
        max_accuracy: out.log.max_accuracy(),
        final_accuracy: out.log.rows().last().map(|r| r.test_accuracy),
    };
    Ok(RunResult {
        log: out.log,
        metadata,
    })
}

/// Trains per `cfg` without touching the filesystem beyond reading data.
pub fn execute(cfg: &ExperimentConfig, seed_override: Option<u64>) -> CliResult<RunResult> {
    match cfg.model.precision {
        Precision::F64 => execute_typed::<f64>(cfg, seed_override),
        Precision::F32 => execute_typed::<f32>(cfg, seed_override),
    }
}

/// Writes `bytes` to `path` through a temp file in the same directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let io = |e: std::io::Error| Failure::Runtime(format!("writing {}: {e}", path.display()));
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes the metrics CSV, then the sidecar. Returns the CSV path.
pub fn write_artifacts(
    cfg: &ExperimentConfig,
    result: &RunResult,
) -> CliResult<std::path::PathBuf> {
    let csv = result.log.to_csv_string()?;
    let csv_path = cfg.output.csv_path();
    write_atomic(&csv_path, csv.as_bytes())?;
    let sidecar = json!({ "config": cfg, "metadata": result.metadata });
    let mut text =
        serde_json::to_string_pretty(&sidecar).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    write_atomic(&cfg.output.sidecar_path(), text.as_bytes())?;
    Ok(csv_path)
}

pub fn cmd_run(config_path: &Path) -> CliResult<()> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    let seed_override = cfg.apply_seed_env()?;
    let result = execute(&cfg, seed_override)?;
    let path = write_artifacts(&cfg, &result)?;
    let max = result
        .metadata
        .max_accuracy
        .map_or("n/a".to_string(), |a| format!("{a:.4}"));
    println!(
        "{}: {} evaluations, max accuracy {max} -> {}",
        result.metadata.algorithm,
        result.log.len(),
        path.display()
    );
    Ok(())
}
