//! Adaptive traffic signal control for a single four-approach intersection.
//!
//! The crate bundles four layers:
//!
//! * [`sim`]: a deterministic, seedable microscopic simulation of twelve
//!   incoming lanes with Krauss car-following and Bernoulli arrivals.
//! * [`signal`]: the eight-phase signal state machine, movement conflict
//!   geometry, and the three classical baseline controllers.
//! * [`qnet`]: a small fully-connected Q-function approximator with
//!   hand-rolled gradients, Huber TD loss, and SGD-with-momentum updates.
//! * [`agent`]: the ε-greedy deep Q-learning loop with experience replay
//!   and a periodically refreshed target network.
//!
//! [`harness`] ties these together into training, evaluation, benchmark
//! comparison, and cross-pattern generalization experiments with CSV/JSON
//! outputs.

pub mod agent;
pub mod harness;
pub mod qnet;
pub mod signal;
pub mod sim;

pub use agent::{AgentConfig, DqnTrainer};
pub use harness::{PatternId, PatternSpec};
pub use qnet::NetworkParams;
pub use signal::{BaselineConfig, PhaseId, SignalState};
pub use sim::{SimParams, WorldState};
