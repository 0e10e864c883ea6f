//! Signal phases, conflict geometry, the green/yellow state machine, and
//! the classical baseline controllers.

mod controllers;
mod phase;
mod state;

use thiserror::Error;

use crate::sim::Movement;

pub use controllers::{
    fixed_time_schedule, BaselineConfig, BaselineConfigError, Controller, FixedTimeController,
    GapBasedController, PhaseRequest, TimeLossController,
};
pub use phase::{conflicts, PhaseId, PhaseTable};
pub use state::{Interval, SignalState};

/// Signal sequencing and phase-table failures.
#[derive(Debug, Error)]
pub enum SignalError {
    #[error("actuation requested mid-interval ({interval:?}, {remaining} steps left)")]
    NotAtDecisionPoint { interval: Interval, remaining: u32 },
    #[error("green interval must last at least one step")]
    EmptyGreen,
    #[error("phase {phase} grants conflicting movements {a} and {b}")]
    ConflictingPhase {
        phase: PhaseId,
        a: Movement,
        b: Movement,
    },
    #[error("the baseline cycle phases do not cover all twelve movements")]
    IncompleteCoverage,
}
