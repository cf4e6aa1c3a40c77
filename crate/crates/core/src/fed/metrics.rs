use std::io::{Read, Write};

use crate::{Error, Result};

/// Exact CSV header of a metrics file.
pub const METRICS_HEADER: [&str; 6] = [
    "round",
    "test_loss",
    "test_accuracy",
    "train_loss",
    "cum_local_updates",
    "cum_bytes",
];

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    /// Rounds (or centralized iterations) completed when evaluated.
    pub round: u64,
    pub test_loss: f64,
    pub test_accuracy: f64,
    pub train_loss: Option<f64>,
    /// Local SGD updates summed over all clients so far.
    pub cum_local_updates: u64,
    pub cum_bytes: u64,
}

/// One row per evaluated round, rounds strictly increasing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsLog {
    rows: Vec<MetricsRow>,
}

impl MetricsLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: MetricsRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.round <= last.round {
                return Err(Error::Config(format!(
                    "metrics rounds must increase: {} after {}",
                    row.round, last.round
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[MetricsRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rounds(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.round).collect()
    }

    pub fn max_accuracy(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.test_accuracy).reduce(f64::max)
    }

    /// First evaluated round whose test accuracy is at least `target`.
    pub fn first_round_reaching(&self, target: f64) -> Option<u64> {
        self.rows
            .iter()
            .find(|r| r.test_accuracy >= target)
            .map(|r| r.round)
    }

    /// Writes the CSV form. Floats use Rust's shortest round-trip formatting,
    /// so [`read_csv`](Self::read_csv) restores the log exactly.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(METRICS_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.round.to_string(),
                r.test_loss.to_string(),
                r.test_accuracy.to_string(),
                r.train_loss.map(|v| v.to_string()).unwrap_or_default(),
                r.cum_local_updates.to_string(),
                r.cum_bytes.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(input);
        let header = reader.headers()?.clone();
        if header.iter().ne(METRICS_HEADER) {
            return Err(Error::Format(format!(
                "metrics header must be {}, got {}",
                METRICS_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut log = Self::new();
        for (k, record) in reader.records().enumerate() {
            let record = record?;
            let bad = |what: &str| Error::Format(format!("metrics row {}: bad {what}", k + 1));
            let int = |i: usize, what: &str| record[i].parse::<u64>().map_err(|_| bad(what));
            let float = |i: usize, what: &str| record[i].parse::<f64>().map_err(|_| bad(what));
            log.push(MetricsRow {
                round: int(0, "round")?,
                test_loss: float(1, "test_loss")?,
                test_accuracy: float(2, "test_accuracy")?,
                train_loss: if record[3].is_empty() {
                    None
                } else {
                    Some(float(3, "train_loss")?)
                },
                cum_local_updates: int(4, "cum_local_updates")?,
                cum_bytes: int(5, "cum_bytes")?,
            })
            .map_err(|_| bad("round order"))?;
        }
        Ok(log)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscordanceReport {
    pub delta: f64,
    pub epsilon: f64,
    pub concordant: bool,
    /// Number of evaluated rounds the mean runs over.
    pub rounds: usize,
}

/// Mean squared difference of the two logs' test losses over their shared
/// evaluated rounds; concordant when it is below `epsilon`.
pub fn discordance(fed: &MetricsLog, cent: &MetricsLog, epsilon: f64) -> Result<DiscordanceReport> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be > 0, got {epsilon}")));
    }
    if fed.is_empty() || fed.rounds() != cent.rounds() {
        return Err(Error::MismatchedRounds);
    }
    let sum: f64 = fed
        .rows()
        .iter()
        .zip(cent.rows())
        .map(|(a, b)| (a.test_loss - b.test_loss).powi(2))
        .sum();
    let delta = sum / fed.len() as f64;
    Ok(DiscordanceReport {
        delta,
        epsilon,
        concordant: delta < epsilon,
        rounds: fed.len(),
    })
}
