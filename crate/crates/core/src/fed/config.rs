use crate::{Error, Result};

/// Training algorithm and its mode-specific hyperparameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Each client trains on a window of `batch_count` batches per round.
    /// `batch_count == 1` is FedSMB.
    FedMmb { batch_count: usize },
    /// Each client runs `local_epochs` full passes per round.
    FedAvg { local_epochs: usize },
    /// Single-site mini-batch gradient descent, one step per iteration.
    Centralized,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::FedMmb { .. } => "fedmmb",
            Algorithm::FedAvg { .. } => "fedavg",
            Algorithm::Centralized => "centralized",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Seeds {
    pub init: u64,
    pub shuffle: u64,
    pub partition: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub algorithm: Algorithm,
    /// `K`; ignored by centralized runs.
    pub clients: usize,
    /// `B` for clients, `B'` for centralized runs.
    pub batch_size: usize,
    pub eta: f64,
    /// `I_max`: rounds for federated runs, iterations for centralized ones.
    pub rounds: u64,
    pub eval_every: u64,
    pub seeds: Seeds,
    /// Run the client updates of a round on the rayon pool.
    pub parallel: bool,
    /// Record the sample-weighted mean mini-batch loss of each evaluated round.
    pub track_train_loss: bool,
}

impl TrainingConfig {
    pub fn new(
        algorithm: Algorithm,
        clients: usize,
        batch_size: usize,
        eta: f64,
        rounds: u64,
    ) -> Self {
        Self {
            algorithm,
            clients,
            batch_size,
            eta,
            rounds,
            eval_every: 1,
            seeds: Seeds::default(),
            parallel: false,
            track_train_loss: false,
        }
    }

    pub fn fedmmb(
        clients: usize,
        batch_size: usize,
        batch_count: usize,
        eta: f64,
        rounds: u64,
    ) -> Self {
        Self::new(
            Algorithm::FedMmb { batch_count },
            clients,
            batch_size,
            eta,
            rounds,
        )
    }

    pub fn fedavg(
        clients: usize,
        batch_size: usize,
        local_epochs: usize,
        eta: f64,
        rounds: u64,
    ) -> Self {
        Self::new(
            Algorithm::FedAvg { local_epochs },
            clients,
            batch_size,
            eta,
            rounds,
        )
    }

    pub fn centralized(batch_size: usize, eta: f64, iterations: u64) -> Self {
        Self::new(Algorithm::Centralized, 1, batch_size, eta, iterations)
    }

    pub fn with_eval_every(mut self, eval_every: u64) -> Self {
        self.eval_every = eval_every;
        self
    }

    pub fn with_seeds(mut self, seeds: Seeds) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn with_train_loss(mut self, track: bool) -> Self {
        self.track_train_loss = track;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.clients == 0 {
            return fail("K must be >= 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch size must be >= 1".into());
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return fail(format!(
                "eta must be a positive finite number, got {}",
                self.eta
            ));
        }
        if self.rounds == 0 {
            return fail("I_max must be >= 1".into());
        }
        if self.eval_every == 0 || !self.rounds.is_multiple_of(self.eval_every) {
            return fail(format!(
                "eval_every ({}) must be >= 1 and divide I_max ({})",
                self.eval_every, self.rounds
            ));
        }
        match self.algorithm {
            Algorithm::FedMmb { batch_count: 0 } => fail("C must be >= 1".into()),
            Algorithm::FedAvg { local_epochs: 0 } => fail("E must be >= 1".into()),
            _ => Ok(()),
        }
    }
}
