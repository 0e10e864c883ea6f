//! Microscopic simulation of a four-approach intersection.
//!
//! Twelve incoming lanes (left, through, shared through/right per approach)
//! are stepped in one-second increments. Vehicles follow the Krauss safe
//! speed rule, stop for red lights via a virtual stationary leader at the
//! stop line, and leave the simulation when they cross the line on green.

mod krauss;
mod lane;
mod params;
mod world;

pub use krauss::{safe_speed, update_speed};
pub use lane::{Approach, Lane, LaneRole, Movement, Turn, Vehicle};
pub use params::{ParamError, SimParams};
pub use world::{
    effective_leader, ArrivalRates, MetricsAccumulator, NoArrivals, StepEvents, WorldState,
};

/// Number of incoming lanes (and of distinct movements).
pub const LANE_COUNT: usize = 12;
