//! Federated and centralized training drivers, metrics and accounting.

mod centralized;
mod client;
mod comm;
mod config;
mod metrics;
mod server;

pub use centralized::{
    lockstep_batch, run_centralized, run_centralized_lockstep, CentralizedTrainer,
};
pub use client::{client_update_fedavg, client_update_mmb, ClientState, RoundReport};
pub use comm::{comm_cost, CommCost};
pub use config::{Algorithm, Seeds, TrainingConfig};
pub use metrics::{discordance, DiscordanceReport, MetricsLog, MetricsRow, METRICS_HEADER};
pub use server::{
    aggregate, build_clients, run_fedavg, run_federated, run_fedmmb, Federation, RoundSummary,
    RunOutput,
};
