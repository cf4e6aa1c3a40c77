//! `compare`: discordance between two metrics logs plus per-log maximum
//! accuracy and rounds to a target accuracy.

use std::fs::File;
use std::path::{Path, PathBuf};

use fedsim::fed::{discordance, DiscordanceReport, MetricsLog};
use serde::Serialize;

use crate::error::{CliResult, Failure};

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonSpec {
    pub a: PathBuf,
    pub b: PathBuf,
    pub epsilon: f64,
    pub target_accuracy: Option<f64>,
}

impl ComparisonSpec {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Failure::Config(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if let Some(t) = self.target_accuracy {
            if !(t > 0.0 && t < 1.0) {
                return Err(Failure::Config(format!(
                    "target accuracy must be in (0, 1), got {t}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogSummary {
    pub path: String,
    pub max_accuracy: Option<f64>,
    /// `None` when no target was requested or the log never reaches it.
    pub rounds_to_target: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub delta: f64,
    pub epsilon: f64,
    pub concordant: bool,
    pub rounds: usize,
    pub target_accuracy: Option<f64>,
    pub logs: [LogSummary; 2],
}

pub fn read_log(path: &Path) -> CliResult<MetricsLog> {
    let file = File::open(path)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    MetricsLog::read_csv(file).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn summarize(path: &Path, log: &MetricsLog, target: Option<f64>) -> LogSummary {
    LogSummary {
        path: path.display().to_string(),
        max_accuracy: log.max_accuracy(),
        rounds_to_target: target.and_then(|t| log.first_round_reaching(t)),
    }
}

pub fn compare(spec: &ComparisonSpec) -> CliResult<Comparison> {
    spec.validate()?;
    let (a, b) = (read_log(&spec.a)?, read_log(&spec.b)?);
    let DiscordanceReport {
        delta,
        epsilon,
        concordant,
        rounds,
    } = discordance(&a, &b, spec.epsilon)?;
    Ok(Comparison {
        delta,
        epsilon,
        concordant,
        rounds,
        target_accuracy: spec.target_accuracy,
        logs: [
            summarize(&spec.a, &a, spec.target_accuracy),
            summarize(&spec.b, &b, spec.target_accuracy),
        ],
    })
}

pub fn render_text(c: &Comparison) -> String {
    let verdict = if c.concordant {
        "concordant"
    } else {
        "discordant"
    };
    let mut out = format!(
        "delta {:e} over {} evaluated rounds: {verdict} at epsilon {}\n",
        c.delta, c.rounds, c.epsilon
    );
    for log in &c.logs {
        let max = log
            .max_accuracy
            .map_or("n/a".to_string(), |a| format!("{a:.4}"));
        out.push_str(&format!("{}: max accuracy {max}", log.path));
        if let Some(t) = c.target_accuracy {
            let reach = log
                .rounds_to_target
                .map_or("never".to_string(), |r| format!("round {r}"));
            out.push_str(&format!(", reaches {t} at {reach}"));
        }
        out.push('\n');
    }
    out
}

pub fn cmd_compare(spec: &ComparisonSpec, json: bool) -> CliResult<()> {
    let c = compare(spec)?;
    if json {
        let text = serde_json::to_string_pretty(&c).map_err(|e| Failure::Runtime(e.to_string()))?;
        println!("{text}");
    } else {
        print!("{}", render_text(&c));
    }
    Ok(())
}
