//! `sweep`: one run per value of a single config key, all other settings
//! (seeds included) shared, plus an index CSV summarizing the runs.

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::{read_json, ExperimentConfig};
use crate::error::{CliResult, Failure};
use crate::run::{execute, write_artifacts, write_atomic};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    /// Dotted path into the config, e.g. `train.C`.
    pub key: String,
    pub values: Vec<Value>,
}

impl SweepSpec {
    /// Parses `key=v1,v2,...`. Each value is read as JSON, falling back to a
    /// bare string.
    pub fn parse(arg: &str) -> CliResult<Self> {
        let (key, list) = arg
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("expected key=v1,v2,..., got {arg:?}")))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(Failure::Config(format!("bad sweep key {key:?}")));
        }
        let values: Vec<Value> = list
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string())))
            .collect();
        if values.is_empty() {
            return Err(Failure::Config(format!("no values given for {key}")));
        }
        Ok(Self {
            key: key.to_string(),
            values,
        })
    }

    fn leaf(&self) -> &str {
        self.key.rsplit('.').next().unwrap_or(&self.key)
    }
}

fn set_key(doc: &mut Value, key: &str, value: Value) -> CliResult<()> {
    let unknown = || Failure::Config(format!("unknown config key {key:?}"));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().ok_or_else(unknown)?;
    let mut node = doc;
    for p in parts {
        node = node.get_mut(p).ok_or_else(unknown)?;
    }
    node.as_object_mut()
        .ok_or_else(unknown)?
        .insert(last.to_string(), value);
    Ok(())
}

fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// The config for each swept value, validated up front.
pub fn variants(base: &Value, spec: &SweepSpec) -> CliResult<Vec<ExperimentConfig>> {
    spec.values
        .iter()
        .map(|v| {
            let mut doc = base.clone();
            if doc.get("config").is_some() && doc.get("metadata").is_some() {
                doc = doc["config"].take();
            }
            set_key(&mut doc, &spec.key, v.clone())?;
            let mut cfg = ExperimentConfig::from_value(doc).map_err(|e| match e {
                Failure::Config(m) => {
                    Failure::Config(format!("{}={}: {m}", spec.key, value_label(v)))
                }
                other => other,
            })?;
            cfg.output.run_name =
                format!("{}_{}-{}", cfg.output.run_name, spec.leaf(), value_label(v));
            Ok(cfg)
        })
        .collect()
}

pub struct SweepRow {
    pub value: String,
    pub run_name: String,
    pub max_accuracy: Option<f64>,
    pub rounds_to_target: Option<u64>,
}

pub fn index_csv(rows: &[SweepRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Failure::Runtime(e.to_string());
    w.write_record(["value", "run_name", "max_accuracy", "rounds_to_target"])
        .map_err(fail)?;
    for r in rows {
        w.write_record([
            r.value.clone(),
            r.run_name.clone(),
            r.max_accuracy.map_or(String::new(), |a| a.to_string()),
            r.rounds_to_target.map_or(String::new(), |n| n.to_string()),
        ])
        .map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Runtime(e.to_string()))
}

pub fn cmd_sweep(config_path: &Path, spec: &SweepSpec, target: Option<f64>) -> CliResult<PathBuf> {
    if let Some(t) = target {
        if !(t > 0.0 && t < 1.0) {
            return Err(Failure::Config(format!(
                "target accuracy must be in (0, 1), got {t}"
            )));
        }
    }
    let base = read_json(config_path)?;
    let mut configs = variants(&base, spec)?;
    let mut rows = Vec::new();
    for (cfg, value) in configs.iter_mut().zip(&spec.values) {
        let seed_override = cfg.apply_seed_env()?;
        let result = execute(cfg, seed_override)?;
        let path = write_artifacts(cfg, &result)?;
        let row = SweepRow {
            value: value_label(value),
            run_name: cfg.output.run_name.clone(),
            max_accuracy: result.log.max_accuracy(),
            rounds_to_target: target.and_then(|t| result.log.first_round_reaching(t)),
        };
        println!(
            "{}={}: max accuracy {} -> {}",
            spec.key,
            row.value,
            row.max_accuracy
                .map_or("n/a".to_string(), |a| format!("{a:.4}")),
            path.display()
        );
        rows.push(row);
    }
    let first = &configs[0].output;
    let suffix = format!("_{}-{}", spec.leaf(), value_label(&spec.values[0]));
    let base_name = first
        .run_name
        .strip_suffix(&suffix)
        .unwrap_or(&first.run_name);
    let index = first.dir.join(format!("{base_name}_sweep.csv"));
    write_atomic(&index, index_csv(&rows)?.as_bytes())?;
    println!("index -> {}", index.display());
    Ok(index)
}
