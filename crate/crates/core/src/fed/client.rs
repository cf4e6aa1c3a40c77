use crate::data::{BatchSchedule, ClientDataset};
use crate::nn::{compute_gradients, sgd_step, Batch, ModelWeights, NetworkSpec};
use crate::{Result, Scalar};

/// A client's local data, its batch schedule and its running count of
/// local SGD updates.
#[derive(Clone, Debug)]
pub struct ClientState<T> {
    data: ClientDataset<T>,
    schedule: BatchSchedule,
    local_updates: u64,
}

/// What a client returns to the server after one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundReport<T> {
    pub client: usize,
    pub weights: ModelWeights<T>,
    /// Samples used for training this round (`n` in the weighted average).
    pub samples: usize,
    /// Number of SGD steps taken this round.
    pub local_updates: usize,
    /// Sum over batches of `batch loss * batch size`, before each step.
    pub loss_sum: f64,
}

impl<T: Scalar> ClientState<T> {
    pub fn new(
        data: ClientDataset<T>,
        batch_size: usize,
        batch_count: usize,
        shuffle_seed: u64,
    ) -> Result<Self> {
        let schedule = crate::data::make_schedule(&data, batch_size, batch_count, shuffle_seed)?;
        Ok(Self {
            data,
            schedule,
            local_updates: 0,
        })
    }

    pub fn index(&self) -> usize {
        self.data.index
    }

    pub fn data(&self) -> &ClientDataset<T> {
        &self.data
    }

    pub fn schedule(&self) -> &BatchSchedule {
        &self.schedule
    }

    /// Total local updates performed so far (`mu_j` summed over rounds).
    pub fn local_updates(&self) -> u64 {
        self.local_updates
    }

    fn batch(&self, k: usize) -> Batch<T> {
        self.data.data.batch(self.schedule.batch(k))
    }

    /// The batches this client trains on in `round`, in order.
    pub fn window_batches(&self, round: u64) -> Vec<Batch<T>> {
        let w = self.schedule.window(round);
        (w.first..=w.last).map(|k| self.batch(k)).collect()
    }

    /// Advances the schedule past `round` without training, reshuffling when
    /// the window calls for it.
    pub fn skip_round(&mut self, round: u64) {
        let w = self.schedule.window(round);
        if w.reshuffle_after {
            self.schedule.reshuffle();
        }
    }
}

struct LocalRun<T> {
    weights: ModelWeights<T>,
    samples: usize,
    steps: usize,
    loss_sum: f64,
}

impl<T: Scalar> LocalRun<T> {
    fn start(weights: &ModelWeights<T>) -> Self {
        Self {
            weights: weights.clone(),
            samples: 0,
            steps: 0,
            loss_sum: 0.0,
        }
    }

    fn train(&mut self, spec: &NetworkSpec, batch: &Batch<T>, eta: T) -> Result<()> {
        let (loss, grads) = compute_gradients(spec, &self.weights, batch)?;
        self.weights = sgd_step(&self.weights, &grads, eta)?;
        self.samples += batch.len();
        self.steps += 1;
        self.loss_sum += loss.as_f64() * batch.len() as f64;
        Ok(())
    }

    fn report(self, client: usize) -> RoundReport<T> {
        RoundReport {
            client,
            weights: self.weights,
            samples: self.samples,
            local_updates: self.steps,
            loss_sum: self.loss_sum,
        }
    }
}

/// FedMMB client update for round `round`: starting from the global
/// weights, one SGD step per batch of the round's window, then a reshuffle
/// if the window closes a pass over the data.
pub fn client_update_mmb<T: Scalar>(
    spec: &NetworkSpec,
    round: u64,
    global: &ModelWeights<T>,
    client: &mut ClientState<T>,
    eta: T,
) -> Result<RoundReport<T>> {
    let window = client.schedule.window(round);
    let mut run = LocalRun::start(global);
    for k in window.first..=window.last {
        run.train(spec, &client.batch(k), eta)?;
    }
    if window.reshuffle_after {
        client.schedule.reshuffle();
    }
    client.local_updates += run.steps as u64;
    Ok(run.report(client.index()))
}

/// FedAvg client update: `local_epochs` full passes over the local data.
/// Each pass uses a fresh shuffle-split drawn from the client's stream.
pub fn client_update_fedavg<T: Scalar>(
    spec: &NetworkSpec,
    global: &ModelWeights<T>,
    client: &mut ClientState<T>,
    local_epochs: usize,
    eta: T,
) -> Result<RoundReport<T>> {
    let mut run = LocalRun::start(global);
    for _ in 0..local_epochs {
        for k in 0..client.schedule.num_batches() {
            run.train(spec, &client.batch(k), eta)?;
        }
        client.schedule.reshuffle();
    }
    client.local_updates += run.steps as u64;
    Ok(run.report(client.index()))
}
