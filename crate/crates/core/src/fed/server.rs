use rayon::prelude::*;

use crate::data::{ClientDataset, Dataset};
use crate::fed::{
    client_update_fedavg, client_update_mmb, comm_cost, Algorithm, ClientState, MetricsLog,
    MetricsRow, RoundReport, TrainingConfig,
};
use crate::nn::{evaluate, ModelWeights, NetworkSpec};
use crate::{Error, Result, Scalar};

/// Sample-weighted average of the clients' local weights.
///
/// Computed as `W_0 + sum_j (n_j / n) (W_j - W_0)` over reports in ascending
/// client order, where `W_0` is the first report's weights, and clamped to
/// the clients' coordinate range. Algebraically this is
/// `sum_j n_j W_j / sum_j n_j`; the anchored form returns identical inputs
/// unchanged and keeps a single client's weights bit-exact.
pub fn aggregate<T: Scalar>(reports: &[RoundReport<T>]) -> Result<ModelWeights<T>> {
    let mut ordered: Vec<&RoundReport<T>> = reports.iter().collect();
    ordered.sort_by_key(|r| r.client);
    let (anchor, rest) = ordered
        .split_first()
        .ok_or_else(|| Error::Config("cannot aggregate zero reports".into()))?;
    if ordered.iter().any(|r| r.samples == 0) {
        return Err(Error::Config(
            "every report must use at least one sample".into(),
        ));
    }
    for r in rest {
        if !r.weights.is_congruent(&anchor.weights) {
            return Err(Error::Shape(format!(
                "client {} returned a different layout",
                r.client
            )));
        }
    }
    let total = T::from_count(ordered.iter().map(|r| r.samples).sum());
    let mut out = anchor.weights.clone();
    let mut lo = anchor.weights.clone();
    let mut hi = anchor.weights.clone();
    for r in rest {
        let share = T::from_count(r.samples) / total;
        for (((o, l), h), (&w, &w0)) in out
            .iter_mut()
            .zip(lo.iter_mut())
            .zip(hi.iter_mut())
            .zip(r.weights.iter().zip(anchor.weights.iter()))
        {
            *o = *o + share * (w - w0);
            *l = l.min(w);
            *h = h.max(w);
        }
    }
    for ((o, l), h) in out.iter_mut().zip(lo.iter()).zip(hi.iter()) {
        *o = o.max(*l).min(*h);
    }
    Ok(out)
}

/// Builds one [`ClientState`] per client dataset with the schedule the
/// configured algorithm needs. FedAvg clients walk whole epochs, so their
/// batch count is the number of batches.
pub fn build_clients<T: Scalar>(
    datasets: Vec<ClientDataset<T>>,
    config: &TrainingConfig,
) -> Result<Vec<ClientState<T>>> {
    datasets
        .into_iter()
        .map(|d| {
            let batch_count = match config.algorithm {
                Algorithm::FedMmb { batch_count } => batch_count,
                _ => d.len().div_ceil(config.batch_size.max(1)).max(1),
            };
            ClientState::new(d, config.batch_size, batch_count, config.seeds.shuffle)
        })
        .collect()
}

/// Outcome of one communication round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundSummary {
    pub round: u64,
    pub reports: usize,
    pub samples: usize,
    pub train_loss: f64,
}

/// Server state machine: global weights plus round and accounting counters.
#[derive(Clone, Debug)]
pub struct Federation<T> {
    spec: NetworkSpec,
    config: TrainingConfig,
    eta: T,
    weights: ModelWeights<T>,
    round: u64,
    cum_local_updates: u64,
    cum_bytes: u64,
    bytes_per_round: u64,
}

impl<T: Scalar> Federation<T> {
    pub fn new(spec: NetworkSpec, config: TrainingConfig, init: ModelWeights<T>) -> Result<Self> {
        config.validate()?;
        if config.algorithm == Algorithm::Centralized {
            return Err(Error::Config("a federation needs fedmmb or fedavg".into()));
        }
        init.check_spec(&spec)?;
        let bytes_per_round = comm_cost::<T>(&spec, config.clients).bytes_per_round;
        Ok(Self {
            eta: T::lit(config.eta),
            spec,
            config,
            weights: init,
            round: 0,
            cum_local_updates: 0,
            cum_bytes: 0,
            bytes_per_round,
        })
    }

    pub fn weights(&self) -> &ModelWeights<T> {
        &self.weights
    }

    pub fn into_weights(self) -> ModelWeights<T> {
        self.weights
    }

    /// Rounds completed so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn cum_local_updates(&self) -> u64 {
        self.cum_local_updates
    }

    pub fn cum_bytes(&self) -> u64 {
        self.cum_bytes
    }

    fn update(&self, client: &mut ClientState<T>) -> Result<RoundReport<T>> {
        match self.config.algorithm {
            Algorithm::FedMmb { .. } => {
                client_update_mmb(&self.spec, self.round, &self.weights, client, self.eta)
            }
            Algorithm::FedAvg { local_epochs } => {
                client_update_fedavg(&self.spec, &self.weights, client, local_epochs, self.eta)
            }
            Algorithm::Centralized => unreachable!("rejected in Federation::new"),
        }
    }

    /// One round: broadcast, local updates on every client, aggregation.
    ///
    /// With `parallel` set the client updates run on the rayon pool; reports
    /// are collected in client order, so the result is bit-identical to the
    /// sequential path.
    pub fn step(&mut self, clients: &mut [ClientState<T>]) -> Result<RoundSummary> {
        if clients.len() != self.config.clients {
            return Err(Error::Config(format!(
                "configured for {} clients, got {}",
                self.config.clients,
                clients.len()
            )));
        }
        let reports: Vec<RoundReport<T>> = if self.config.parallel {
            clients
                .par_iter_mut()
                .map(|c| self.update(c))
                .collect::<Result<_>>()?
        } else {
            clients
                .iter_mut()
                .map(|c| self.update(c))
                .collect::<Result<_>>()?
        };
        debug_assert_eq!(reports.len(), self.config.clients);
        self.weights = aggregate(&reports)?;
        self.round += 1;
        self.cum_local_updates += reports.iter().map(|r| r.local_updates as u64).sum::<u64>();
        self.cum_bytes += self.bytes_per_round;
        let samples: usize = reports.iter().map(|r| r.samples).sum();
        let loss_sum: f64 = reports.iter().map(|r| r.loss_sum).sum();
        Ok(RoundSummary {
            round: self.round,
            reports: reports.len(),
            samples,
            train_loss: loss_sum / samples as f64,
        })
    }
}

/// A finished run: the metrics log and the final weights.
#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub log: MetricsLog,
    pub weights: ModelWeights<T>,
}

pub(crate) fn evaluation_row<T: Scalar>(
    spec: &NetworkSpec,
    weights: &ModelWeights<T>,
    test: &Dataset<T>,
    round: u64,
    train_loss: Option<f64>,
    cum_local_updates: u64,
    cum_bytes: u64,
) -> Result<MetricsRow> {
    let eval = evaluate(spec, weights, test)?;
    Ok(MetricsRow {
        round,
        test_loss: eval.loss.as_f64(),
        test_accuracy: eval.accuracy,
        train_loss,
        cum_local_updates,
        cum_bytes,
    })
}

/// Runs `I_max` federated rounds with full participation, evaluating the
/// global model on `test` every `eval_every` rounds.
pub fn run_federated<T: Scalar>(
    spec: &NetworkSpec,
    config: &TrainingConfig,
    init: ModelWeights<T>,
    clients: &mut [ClientState<T>],
    test: &Dataset<T>,
) -> Result<RunOutput<T>> {
    let mut fed = Federation::new(spec.clone(), config.clone(), init)?;
    let mut log = MetricsLog::new();
    for _ in 0..config.rounds {
        let summary = fed.step(clients)?;
        if fed.round().is_multiple_of(config.eval_every) {
            log.push(evaluation_row(
                spec,
                fed.weights(),
                test,
                fed.round(),
                config.track_train_loss.then_some(summary.train_loss),
                fed.cum_local_updates(),
                fed.cum_bytes(),
            )?)?;
        }
    }
    Ok(RunOutput {
        log,
        weights: fed.into_weights(),
    })
}

/// FedMMB (FedSMB when `C = 1`).
pub fn run_fedmmb<T: Scalar>(
    spec: &NetworkSpec,
    config: &TrainingConfig,
    init: ModelWeights<T>,
    clients: &mut [ClientState<T>],
    test: &Dataset<T>,
) -> Result<RunOutput<T>> {
    if !matches!(config.algorithm, Algorithm::FedMmb { .. }) {
        return Err(Error::Config("run_fedmmb needs mode fedmmb".into()));
    }
    run_federated(spec, config, init, clients, test)
}

pub fn run_fedavg<T: Scalar>(
    spec: &NetworkSpec,
    config: &TrainingConfig,
    init: ModelWeights<T>,
    clients: &mut [ClientState<T>],
    test: &Dataset<T>,
) -> Result<RunOutput<T>> {
    if !matches!(config.algorithm, Algorithm::FedAvg { .. }) {
        return Err(Error::Config("run_fedavg needs mode fedavg".into()));
    }
    run_federated(spec, config, init, clients, test)
}
