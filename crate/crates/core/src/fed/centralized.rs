use crate::data::{ClientDataset, Dataset};
use crate::fed::server::evaluation_row;
use crate::fed::{Algorithm, ClientState, MetricsLog, RunOutput, TrainingConfig};
use crate::nn::{compute_gradients, sgd_step, Batch, ModelWeights, NetworkSpec};
use crate::{Error, Result, Scalar};

/// Single-site mini-batch gradient descent.
///
/// The free-running batch source is a one-client schedule with batch count
/// 1: one batch per iteration, reshuffled after every epoch. It is seeded
/// exactly like client 0 of a federation with the same shuffle seed.
#[derive(Clone, Debug)]
pub struct CentralizedTrainer<T> {
    spec: NetworkSpec,
    weights: ModelWeights<T>,
    eta: T,
    iterations: u64,
    source: Option<ClientState<T>>,
}

impl<T: Scalar> CentralizedTrainer<T> {
    /// A trainer without its own batch source; drive it with [`step_on`](Self::step_on).
    pub fn new(spec: NetworkSpec, init: ModelWeights<T>, eta: T) -> Result<Self> {
        init.check_spec(&spec)?;
        if !(eta >= T::zero()) {
            return Err(Error::Config(format!(
                "learning rate must be >= 0, got {eta}"
            )));
        }
        Ok(Self {
            spec,
            weights: init,
            eta,
            iterations: 0,
            source: None,
        })
    }

    pub fn free_running(
        spec: NetworkSpec,
        init: ModelWeights<T>,
        eta: T,
        train: Dataset<T>,
        batch_size: usize,
        shuffle_seed: u64,
    ) -> Result<Self> {
        let mut t = Self::new(spec, init, eta)?;
        let whole = ClientDataset {
            index: 0,
            data: train,
        };
        t.source = Some(ClientState::new(whole, batch_size, 1, shuffle_seed)?);
        Ok(t)
    }

    pub fn weights(&self) -> &ModelWeights<T> {
        &self.weights
    }

    pub fn into_weights(self) -> ModelWeights<T> {
        self.weights
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// One SGD step on `batch`; returns the pre-step batch loss.
    pub fn step_on(&mut self, batch: &Batch<T>) -> Result<T> {
        let (loss, grads) = compute_gradients(&self.spec, &self.weights, batch)?;
        self.weights = sgd_step(&self.weights, &grads, self.eta)?;
        self.iterations += 1;
        Ok(loss)
    }

    /// One SGD step on the next batch of the trainer's own schedule.
    pub fn step(&mut self) -> Result<T> {
        let mut source = self
            .source
            .take()
            .ok_or_else(|| Error::Config("trainer has no batch source".into()))?;
        let batch = source.window_batches(self.iterations).remove(0);
        source.skip_round(self.iterations);
        let result = self.step_on(&batch);
        self.source = Some(source);
        result
    }
}

/// Lockstep batch for round `round`: the concatenation, in ascending client
/// index, of the batches each client trains on in that round. Advances the
/// clients' schedules exactly as training would.
pub fn lockstep_batch<T: Scalar>(clients: &mut [ClientState<T>], round: u64) -> Result<Batch<T>> {
    let mut order: Vec<usize> = (0..clients.len()).collect();
    order.sort_by_key(|&k| clients[k].index());
    let mut parts = Vec::new();
    for &k in &order {
        parts.extend(clients[k].window_batches(round));
    }
    for c in clients.iter_mut() {
        c.skip_round(round);
    }
    Batch::concat(&parts)
}

fn drive<T: Scalar>(
    spec: &NetworkSpec,
    config: &TrainingConfig,
    mut trainer: CentralizedTrainer<T>,
    test: &Dataset<T>,
    mut next: impl FnMut(&mut CentralizedTrainer<T>, u64) -> Result<T>,
) -> Result<RunOutput<T>> {
    let mut log = MetricsLog::new();
    for i in 0..config.rounds {
        let loss = next(&mut trainer, i)?;
        let done = trainer.iterations();
        if done.is_multiple_of(config.eval_every) {
            log.push(evaluation_row(
                spec,
                trainer.weights(),
                test,
                done,
                config.track_train_loss.then(|| loss.as_f64()),
                done,
                0,
            )?)?;
        }
    }
    Ok(RunOutput {
        log,
        weights: trainer.into_weights(),
    })
}

fn check_centralized(config: &TrainingConfig) -> Result<()> {
    config.validate()?;
    if config.algorithm != Algorithm::Centralized {
        return Err(Error::Config(
            "run_centralized needs mode centralized".into(),
        ));
    }
    Ok(())
}

/// Free-running centralized MBGD with batch size `B'` = `config.batch_size`.
pub fn run_centralized<T: Scalar>(
    spec: &NetworkSpec,
    config: &TrainingConfig,
    init: ModelWeights<T>,
    train: &Dataset<T>,
    test: &Dataset<T>,
) -> Result<RunOutput<T>> {
    check_centralized(config)?;
    let trainer = CentralizedTrainer::free_running(
        spec.clone(),
        init,
        T::lit(config.eta),
        train.clone(),
        config.batch_size,
        config.seeds.shuffle,
    )?;
    drive(spec, config, trainer, test, |t, _| t.step())
}

/// Centralized run whose iteration `i` trains on [`lockstep_batch`] of the
/// given client states. `batch_size` in the config is not used.
pub fn run_centralized_lockstep<T: Scalar>(
    spec: &NetworkSpec,
    config: &TrainingConfig,
    init: ModelWeights<T>,
    clients: &mut [ClientState<T>],
    test: &Dataset<T>,
) -> Result<RunOutput<T>> {
    check_centralized(config)?;
    let trainer = CentralizedTrainer::new(spec.clone(), init, T::lit(config.eta))?;
    drive(spec, config, trainer, test, |t, i| {
        let batch = lockstep_batch(clients, i)?;
        t.step_on(&batch)
    })
}
