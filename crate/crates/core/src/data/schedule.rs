//! Per-client batch schedule: shuffle, split into `T = ceil(N_j / B)`
//! batches, and walk them `C` at a time, reshuffling every
//! `f = ceil(T / C)` rounds.

use crate::data::ClientDataset;
use crate::rng::{derive_seed, SeededRng};
use crate::{Error, Result, Scalar};

/// Inclusive batch window `[first, last]` used in one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub first: usize,
    pub last: usize,
    /// The client reshuffles its batches after training on this window.
    pub reshuffle_after: bool,
}

impl Window {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Batches are stored as row indices into the client's dataset.
///
/// The permutation used after `r` reshuffles is seeded with
/// `derive_seed(shuffle_seed, [client_index, r])`, so every draw is a pure
/// function of the shuffle seed, the client and the reshuffle counter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchSchedule {
    batches: Vec<Vec<usize>>,
    samples: usize,
    batch_size: usize,
    batch_count: usize,
    period: usize,
    seed: u64,
    client: usize,
    reshuffles: u64,
}

pub fn make_schedule<T: Scalar>(
    client: &ClientDataset<T>,
    batch_size: usize,
    batch_count: usize,
    seed: u64,
) -> Result<BatchSchedule> {
    BatchSchedule::new(client.len(), client.index, batch_size, batch_count, seed)
}

/// `p = (i mod f) C`, `q = min(p + C - 1, T - 1)`, reshuffle when `(i + 1) mod f == 0`.
pub fn batch_window(schedule: &BatchSchedule, round: u64) -> Window {
    let f = schedule.period as u64;
    let c = schedule.batch_count;
    let first = (round % f) as usize * c;
    let last = (first + c - 1).min(schedule.num_batches() - 1);
    Window {
        first,
        last,
        reshuffle_after: (round + 1).is_multiple_of(f),
    }
}

impl BatchSchedule {
    pub fn new(
        samples: usize,
        client: usize,
        batch_size: usize,
        batch_count: usize,
        seed: u64,
    ) -> Result<Self> {
        if samples == 0 {
            return Err(Error::EmptyDataset);
        }
        if batch_size == 0 || batch_count == 0 {
            return Err(Error::Config(
                "batch size and batch count must be >= 1".into(),
            ));
        }
        let num_batches = samples.div_ceil(batch_size);
        let mut s = Self {
            batches: Vec::with_capacity(num_batches),
            samples,
            batch_size,
            batch_count,
            period: num_batches.div_ceil(batch_count),
            seed,
            client,
            reshuffles: 0,
        };
        s.split();
        Ok(s)
    }

    fn split(&mut self) {
        let mut rng = SeededRng::new(derive_seed(
            self.seed,
            &[self.client as u64, self.reshuffles],
        ));
        let perm = rng.permutation(self.samples);
        self.batches = perm
            .chunks(self.batch_size)
            .map(<[usize]>::to_vec)
            .collect();
    }

    /// Draws a fresh permutation and re-splits.
    pub fn reshuffle(&mut self) {
        self.reshuffles += 1;
        self.split();
    }

    /// `T`.
    pub fn num_batches(&self) -> usize {
        self.batches.len()
    }

    /// `f`, the number of rounds between reshuffles.
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn batch_count(&self) -> usize {
        self.batch_count
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn reshuffles(&self) -> u64 {
        self.reshuffles
    }

    pub fn batch(&self, k: usize) -> &[usize] {
        &self.batches[k]
    }

    pub fn batches(&self) -> &[Vec<usize>] {
        &self.batches
    }

    pub fn window(&self, round: u64) -> Window {
        batch_window(self, round)
    }
}
