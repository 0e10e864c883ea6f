use crate::sim::{Movement, SimParams};

use super::phase::{PhaseId, PhaseTable};
use super::SignalError;

/// The interval currently displayed by the signal heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interval {
    Green(PhaseId),
    Yellow { from: PhaseId, to: PhaseId },
}

/// Green/yellow state machine with extend-or-switch semantics.
///
/// A new state starts at a decision point (green with zero remaining time).
/// [`SignalState::actuate`] either extends the running phase by one phase
/// span or switches via a yellow interval, after which the requested green
/// starts automatically. Time advances in whole steps through
/// [`SignalState::tick`].
#[derive(Debug, Clone)]
pub struct SignalState {
    table: PhaseTable,
    interval: Interval,
    /// Steps left in the current interval.
    remaining: u32,
    /// Green steps to grant once a running yellow elapses.
    pending_green: u32,
    /// Steps of green elapsed in the current uninterrupted green run.
    green_run: u32,
}

impl SignalState {
    pub fn new(table: PhaseTable, initial: PhaseId) -> Self {
        SignalState {
            table,
            interval: Interval::Green(initial),
            remaining: 0,
            pending_green: 0,
            green_run: 0,
        }
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn table(&self) -> &PhaseTable {
        &self.table
    }

    pub fn remaining_steps(&self) -> u32 {
        self.remaining
    }

    /// The controller must be consulted exactly when a green has run out.
    pub fn at_decision_point(&self) -> bool {
        matches!(self.interval, Interval::Green(_)) && self.remaining == 0
    }

    pub fn current_green(&self) -> Option<PhaseId> {
        match self.interval {
            Interval::Green(p) => Some(p),
            Interval::Yellow { .. } => None,
        }
    }

    /// Steps of green elapsed since the current green run began.
    pub fn green_run_steps(&self) -> u32 {
        self.green_run
    }

    /// True iff the movement currently has right of way. Yellow grants none;
    /// the simulation separately lets vehicles that can no longer stop pass.
    pub fn is_green(&self, movement: Movement) -> bool {
        match self.interval {
            Interval::Green(p) => self.table.grants(p, movement),
            Interval::Yellow { .. } => false,
        }
    }

    /// Apply one actuation decision: re-requesting the running phase extends
    /// it by one phase span, any other phase starts a yellow interval first.
    pub fn actuate(&mut self, requested: PhaseId, params: &SimParams) -> Result<(), SignalError> {
        self.schedule_green(requested, params.green_steps(), params)
    }

    /// Like [`SignalState::actuate`] but with an explicit green duration,
    /// used by the fixed-time schedule whose phase lengths are not multiples
    /// of the phase span.
    pub fn schedule_green(
        &mut self,
        phase: PhaseId,
        green_steps: u32,
        params: &SimParams,
    ) -> Result<(), SignalError> {
        if !self.at_decision_point() {
            return Err(SignalError::NotAtDecisionPoint {
                interval: self.interval,
                remaining: self.remaining,
            });
        }
        if green_steps == 0 {
            return Err(SignalError::EmptyGreen);
        }
        match self.interval {
            Interval::Green(current) if current == phase => {
                self.remaining = green_steps;
            }
            Interval::Green(current) => {
                self.interval = Interval::Yellow {
                    from: current,
                    to: phase,
                };
                self.remaining = params.yellow_steps();
                self.pending_green = green_steps;
            }
            Interval::Yellow { .. } => unreachable!("decision points are green"),
        }
        Ok(())
    }

    /// Advance the signal by one simulation step. An elapsing yellow turns
    /// into the pending green without consulting any controller.
    pub fn tick(&mut self) {
        debug_assert!(self.remaining > 0, "ticked across a decision point");
        self.remaining -= 1;
        match self.interval {
            Interval::Green(_) => {
                self.green_run += 1;
            }
            Interval::Yellow { to, .. } => {
                if self.remaining == 0 {
                    self.interval = Interval::Green(to);
                    self.remaining = self.pending_green;
                    self.green_run = 0;
                }
            }
        }
    }
}
