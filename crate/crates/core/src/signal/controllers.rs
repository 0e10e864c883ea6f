use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{Lane, SimParams, StepEvents, WorldState, LANE_COUNT};

use super::phase::{PhaseId, PhaseTable};
use super::state::SignalState;

/// A controller's answer at a decision point: which phase to show next and
/// for how many green steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseRequest {
    pub phase: PhaseId,
    pub green_steps: u32,
}

/// Closed-loop phase selection. `decide` is called exactly at decision
/// points; `on_step` after every simulation step, for controllers that need
/// detector events.
pub trait Controller {
    fn decide(&mut self, world: &WorldState, signal: &SignalState) -> PhaseRequest;

    fn on_step(&mut self, _events: &StepEvents, _signal: &SignalState) {}
}

/// Settings shared by the three classical baseline controllers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Total green time distributed over one fixed-time cycle, seconds.
    pub cycle_green_total: f64,
    /// Minimum green per phase in the fixed-time schedule, seconds.
    pub min_green: f64,
    /// Longest uninterrupted green run the actuated baselines allow, seconds.
    pub max_green: f64,
    /// Gap-out threshold: largest time gap between successive stop-line
    /// crossings that still counts as a continuous stream, seconds.
    pub max_time_gap: f64,
    /// Accumulated time loss above which the time-loss baseline extends,
    /// seconds.
    pub time_loss_threshold: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            cycle_green_total: 120.0,
            min_green: 10.0,
            max_green: 60.0,
            max_time_gap: 5.0,
            time_loss_threshold: 1.0,
        }
    }
}

/// Invalid [`BaselineConfig`] field combinations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineConfigError {
    #[error("baseline.min_green must not exceed baseline.max_green")]
    MinAboveMax,
    #[error("baseline.{field} must be strictly positive")]
    NonPositive { field: &'static str },
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<(), BaselineConfigError> {
        let positive = [
            ("cycle_green_total", self.cycle_green_total),
            ("min_green", self.min_green),
            ("max_green", self.max_green),
            ("max_time_gap", self.max_time_gap),
            ("time_loss_threshold", self.time_loss_threshold),
        ];
        for (field, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(BaselineConfigError::NonPositive { field });
            }
        }
        if self.min_green > self.max_green {
            return Err(BaselineConfigError::MinAboveMax);
        }
        Ok(())
    }
}

fn lane_served(lane: &Lane, table: &PhaseTable, phase: PhaseId) -> bool {
    table.grants(phase, lane.control_movement())
}

/// Green seconds per cycle phase, proportional to the arrival rates of the
/// movements each phase serves. All-zero demand degenerates to an equal
/// split.
pub fn fixed_time_schedule(
    mean_rates: &[f64; LANE_COUNT],
    cfg: &BaselineConfig,
    table: &PhaseTable,
    params: &SimParams,
) -> Vec<(PhaseId, u32)> {
    let weights: Vec<f64> = PhaseId::BASELINE_CYCLE
        .iter()
        .map(|phase| {
            table
                .movements(*phase)
                .iter()
                .map(|m| mean_rates[m.index()])
                .sum()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    PhaseId::BASELINE_CYCLE
        .iter()
        .zip(weights)
        .map(|(phase, w)| {
            let seconds = if total <= 0.0 {
                cfg.cycle_green_total / PhaseId::BASELINE_CYCLE.len() as f64
            } else {
                (cfg.cycle_green_total * w / total)
                    .round()
                    .max(cfg.min_green)
            };
            let steps = ((seconds / params.time_step).round() as u32).max(1);
            (*phase, steps)
        })
        .collect()
}

/// Cycles through a precomputed schedule regardless of traffic.
pub struct FixedTimeController {
    schedule: Vec<(PhaseId, u32)>,
    position: usize,
}

impl FixedTimeController {
    pub fn new(schedule: Vec<(PhaseId, u32)>) -> Self {
        assert!(!schedule.is_empty(), "empty fixed-time schedule");
        FixedTimeController {
            schedule,
            position: 0,
        }
    }

    pub fn schedule(&self) -> &[(PhaseId, u32)] {
        &self.schedule
    }
}

impl Controller for FixedTimeController {
    fn decide(&mut self, _world: &WorldState, _signal: &SignalState) -> PhaseRequest {
        let (phase, green_steps) = self.schedule[self.position];
        self.position = (self.position + 1) % self.schedule.len();
        PhaseRequest { phase, green_steps }
    }
}

/// Extends the running phase while any served lane still discharges a
/// continuous stream (stop-line headways within `max_time_gap`), up to
/// `max_green`; otherwise advances along the baseline cycle.
pub struct GapBasedController {
    cfg: BaselineConfig,
    position: usize,
    /// Clock value right after the last stop-line crossing, per lane,
    /// cleared whenever the controller advances to a new phase.
    last_crossing: [Option<u64>; LANE_COUNT],
}

impl GapBasedController {
    pub fn new(cfg: BaselineConfig) -> Self {
        GapBasedController {
            cfg,
            position: 0,
            last_crossing: [None; LANE_COUNT],
        }
    }
}

impl Controller for GapBasedController {
    fn decide(&mut self, world: &WorldState, signal: &SignalState) -> PhaseRequest {
        let params = &world.params;
        let current = PhaseId::BASELINE_CYCLE[self.position];
        debug_assert_eq!(signal.current_green(), Some(current));
        let elapsed = signal.green_run_steps() as f64 * params.time_step;
        let streaming = world
            .lanes
            .iter()
            .filter(|lane| lane_served(lane, signal.table(), current))
            .any(|lane| {
                self.last_crossing[lane.index].is_some_and(|at| {
                    (world.clock - at) as f64 * params.time_step <= self.cfg.max_time_gap
                })
            });
        if streaming && elapsed < self.cfg.max_green {
            PhaseRequest {
                phase: current,
                green_steps: params.green_steps(),
            }
        } else {
            self.position = (self.position + 1) % PhaseId::BASELINE_CYCLE.len();
            self.last_crossing = [None; LANE_COUNT];
            PhaseRequest {
                phase: PhaseId::BASELINE_CYCLE[self.position],
                green_steps: params.green_steps(),
            }
        }
    }

    fn on_step(&mut self, events: &StepEvents, _signal: &SignalState) {
        for (lane, crossings) in events.departures_by_lane.iter().enumerate() {
            if *crossings > 0 {
                self.last_crossing[lane] = Some(events.step + 1);
            }
        }
    }
}

/// Extends the running phase while any vehicle on a served lane has
/// accumulated more time loss than the threshold, up to `max_green`.
pub struct TimeLossController {
    cfg: BaselineConfig,
    position: usize,
}

impl TimeLossController {
    pub fn new(cfg: BaselineConfig) -> Self {
        TimeLossController { cfg, position: 0 }
    }
}

impl Controller for TimeLossController {
    fn decide(&mut self, world: &WorldState, signal: &SignalState) -> PhaseRequest {
        let params = &world.params;
        let current = PhaseId::BASELINE_CYCLE[self.position];
        debug_assert_eq!(signal.current_green(), Some(current));
        let elapsed = signal.green_run_steps() as f64 * params.time_step;
        let pressing = world
            .lanes
            .iter()
            .filter(|lane| lane_served(lane, signal.table(), current))
            .any(|lane| {
                lane.vehicles
                    .iter()
                    .any(|v| v.time_loss_accum > self.cfg.time_loss_threshold)
            });
        if pressing && elapsed < self.cfg.max_green {
            PhaseRequest {
                phase: current,
                green_steps: params.green_steps(),
            }
        } else {
            self.position = (self.position + 1) % PhaseId::BASELINE_CYCLE.len();
            PhaseRequest {
                phase: PhaseId::BASELINE_CYCLE[self.position],
                green_steps: params.green_steps(),
            }
        }
    }
}
