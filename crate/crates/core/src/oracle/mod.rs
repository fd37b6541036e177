//! Monte Carlo instruments that check the analytic model independently.

pub mod channel;
pub mod sim;

pub use channel::{mc_success_prob, mc_success_prob_with, ChannelScenario, McEstimate, Receiver};
pub use sim::{
    simulate_many, simulate_network, simulate_network_traced, stability_probe,
    stability_probe_with, SimConfig, SimResult, SlotRecord, INSTABILITY_SLOPE,
};
