use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Physical and timing parameters of the intersection simulation.
///
/// Defaults describe a 150 m approach with 5 m vehicles, a 13.42 m/s speed
/// limit, 3 s yellows, and 10 s green spans on a 1 s time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Length of each incoming lane in meters; the stop line sits at this
    /// position, measured from the lane entry.
    pub lane_length: f64,
    /// Vehicle body length in meters.
    pub vehicle_length: f64,
    /// Minimal bumper-to-bumper gap held at standstill, meters.
    pub min_gap: f64,
    /// Maximum vehicle speed, m/s.
    pub v_max: f64,
    /// Acceleration ability, m/s².
    pub accel: f64,
    /// Deceleration ability, m/s².
    pub decel: f64,
    /// Duration of the yellow interval between two different phases, seconds.
    pub yellow_duration: f64,
    /// Green time granted per actuation decision, seconds.
    pub phase_span: f64,
    /// Simulation time step, seconds.
    pub time_step: f64,
    /// Speed at or below which a vehicle counts as halting, m/s.
    pub halt_threshold: f64,
    /// Driver reaction time of the car-following model, seconds.
    pub reaction_time: f64,
    /// Random slowdown factor σ in [0, 1]; 0 disables the stochastic term
    /// and makes driving fully deterministic.
    pub driver_imperfection: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            lane_length: 150.0,
            vehicle_length: 5.0,
            min_gap: 2.5,
            v_max: 13.42,
            accel: 2.6,
            decel: 4.5,
            yellow_duration: 3.0,
            phase_span: 10.0,
            time_step: 1.0,
            halt_threshold: 0.1,
            reaction_time: 1.0,
            driver_imperfection: 0.0,
        }
    }
}

/// Invalid [`SimParams`] field combinations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamError {
    #[error("sim.{field} must be strictly positive")]
    NonPositive { field: &'static str },
    #[error("sim.driver_imperfection must lie in [0, 1]")]
    ImperfectionRange,
    #[error("sim.halt_threshold must be below sim.v_max")]
    HaltThresholdTooHigh,
    #[error("sim.yellow_duration must be at least one time step")]
    YellowTooShort,
    #[error("sim.{field} must be a whole number of time steps")]
    NotStepMultiple { field: &'static str },
}

fn whole_steps(duration: f64, dt: f64) -> Option<u32> {
    let k = (duration / dt).round();
    if k >= 1.0 && (duration - k * dt).abs() <= 1e-9 * duration.max(1.0) {
        Some(k as u32)
    } else {
        None
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("lane_length", self.lane_length),
            ("vehicle_length", self.vehicle_length),
            ("min_gap", self.min_gap),
            ("v_max", self.v_max),
            ("accel", self.accel),
            ("decel", self.decel),
            ("yellow_duration", self.yellow_duration),
            ("phase_span", self.phase_span),
            ("time_step", self.time_step),
            ("halt_threshold", self.halt_threshold),
            ("reaction_time", self.reaction_time),
        ];
        for (field, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(ParamError::NonPositive { field });
            }
        }
        if !(0.0..=1.0).contains(&self.driver_imperfection) {
            return Err(ParamError::ImperfectionRange);
        }
        if self.halt_threshold >= self.v_max {
            return Err(ParamError::HaltThresholdTooHigh);
        }
        if self.yellow_duration < self.time_step {
            return Err(ParamError::YellowTooShort);
        }
        if whole_steps(self.phase_span, self.time_step).is_none() {
            return Err(ParamError::NotStepMultiple {
                field: "phase_span",
            });
        }
        if whole_steps(self.yellow_duration, self.time_step).is_none() {
            return Err(ParamError::NotStepMultiple {
                field: "yellow_duration",
            });
        }
        Ok(())
    }

    /// Maximum number of vehicles a lane can hold at min-gap spacing.
    pub fn lane_capacity(&self) -> usize {
        (self.lane_length / (self.vehicle_length + self.min_gap)).floor() as usize
    }

    /// Green span of one actuation decision, in simulation steps.
    pub fn green_steps(&self) -> u32 {
        whole_steps(self.phase_span, self.time_step).expect("validated phase_span")
    }

    /// Yellow interval length, in simulation steps.
    pub fn yellow_steps(&self) -> u32 {
        whole_steps(self.yellow_duration, self.time_step).expect("validated yellow_duration")
    }

    /// Clear space required at the lane entry before a vehicle may be inserted.
    pub fn insertion_clearance(&self) -> f64 {
        self.vehicle_length + self.min_gap
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = SimParams::default();
        assert_eq!(p.validate(), Ok(()));
        assert_eq!(p.lane_capacity(), 20);
        assert_eq!(p.green_steps(), 10);
        assert_eq!(p.yellow_steps(), 3);
    }

    #[test]
    fn rejects_nonpositive_quantities() {
        let p = SimParams {
            accel: 0.0,
            ..SimParams::default()
        };
        assert_eq!(
            p.validate(),
            Err(ParamError::NonPositive { field: "accel" })
        );
    }

    #[test]
    fn rejects_halt_threshold_at_or_above_v_max() {
        let p = SimParams {
            halt_threshold: 13.42,
            ..SimParams::default()
        };
        assert_eq!(p.validate(), Err(ParamError::HaltThresholdTooHigh));
    }

    #[test]
    fn rejects_fractional_phase_span() {
        let p = SimParams {
            phase_span: 10.5,
            ..SimParams::default()
        };
        assert_eq!(
            p.validate(),
            Err(ParamError::NotStepMultiple {
                field: "phase_span"
            })
        );
    }

    #[test]
    fn rejects_short_yellow() {
        let p = SimParams {
            yellow_duration: 0.5,
            ..SimParams::default()
        };
        assert_eq!(p.validate(), Err(ParamError::YellowTooShort));
    }

    #[test]
    fn sigma_out_of_range() {
        let p = SimParams {
            driver_imperfection: 1.5,
            ..SimParams::default()
        };
        assert_eq!(p.validate(), Err(ParamError::ImperfectionRange));
    }
}
