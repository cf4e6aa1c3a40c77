use crate::nn::NetworkSpec;
use crate::Scalar;

/// Bytes moved per round: every client downloads and uploads the full model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommCost {
    pub bytes_per_round: u64,
}

impl CommCost {
    pub fn cumulative(&self, rounds: u64) -> u64 {
        self.bytes_per_round * rounds
    }

    /// Cumulative bytes after each of rounds `1..=rounds`.
    pub fn schedule(&self, rounds: u64) -> impl Iterator<Item = u64> + '_ {
        (1..=rounds).map(|r| self.cumulative(r))
    }
}

/// `param_count * size_of::<T>() * 2 * clients`.
pub fn comm_cost<T: Scalar>(spec: &NetworkSpec, clients: usize) -> CommCost {
    let per_param = std::mem::size_of::<T>() as u64;
    CommCost {
        bytes_per_round: spec.param_count() as u64 * per_param * 2 * clients as u64,
    }
}
