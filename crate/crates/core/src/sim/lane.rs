use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::params::SimParams;

/// One of the four roads feeding the intersection, named by the compass
/// direction the traffic comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Approach {
    North,
    East,
    South,
    West,
}

impl Approach {
    pub const ALL: [Approach; 4] = [
        Approach::North,
        Approach::East,
        Approach::South,
        Approach::West,
    ];

    pub fn index(self) -> usize {
        match self {
            Approach::North => 0,
            Approach::East => 1,
            Approach::South => 2,
            Approach::West => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Approach::North => "N",
            Approach::East => "E",
            Approach::South => "S",
            Approach::West => "W",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Turn {
    Left,
    Through,
    Right,
}

impl Turn {
    pub fn label(self) -> &'static str {
        match self {
            Turn::Left => "left",
            Turn::Through => "through",
            Turn::Right => "right",
        }
    }
}

/// An (approach, turn) pair; twelve exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Movement {
    pub approach: Approach,
    pub turn: Turn,
}

pub(crate) const fn mv(approach: Approach, turn: Turn) -> Movement {
    Movement { approach, turn }
}

impl Movement {
    pub const COUNT: usize = 12;

    /// All movements in lane-index order: per approach (N, E, S, W) the
    /// left, through, then right movement.
    pub const ALL: [Movement; 12] = [
        mv(Approach::North, Turn::Left),
        mv(Approach::North, Turn::Through),
        mv(Approach::North, Turn::Right),
        mv(Approach::East, Turn::Left),
        mv(Approach::East, Turn::Through),
        mv(Approach::East, Turn::Right),
        mv(Approach::South, Turn::Left),
        mv(Approach::South, Turn::Through),
        mv(Approach::South, Turn::Right),
        mv(Approach::West, Turn::Left),
        mv(Approach::West, Turn::Through),
        mv(Approach::West, Turn::Right),
    ];

    pub fn index(self) -> usize {
        let t = match self.turn {
            Turn::Left => 0,
            Turn::Through => 1,
            Turn::Right => 2,
        };
        self.approach.index() * 3 + t
    }

    /// Lane that receives this movement's arrivals. Left turns use the left
    /// lane; through and right traffic both enter the shared rightmost lane,
    /// matching insertion on the first lane that permits the route.
    pub fn entry_lane(self) -> usize {
        let offset = match self.turn {
            Turn::Left => 0,
            Turn::Through | Turn::Right => 2,
        };
        self.approach.index() * 3 + offset
    }
}

impl fmt::Display for Movement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.approach.label(), self.turn.label())
    }
}

/// Role of a physical lane within its approach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LaneRole {
    Left,
    Through,
    ThroughRight,
}

/// One car on an incoming lane. `position` is the front bumper's distance
/// from the lane entry; the stop line sits at `lane_length`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: u64,
    pub position: f64,
    pub speed: f64,
    /// Seconds spent halting (speed ≤ halt threshold).
    pub wait_accum: f64,
    /// Accumulated (1 − v/v_max) per second.
    pub time_loss_accum: f64,
    /// Step index at which the vehicle was inserted.
    pub entered_at: u64,
}

impl Vehicle {
    pub(crate) fn entering(id: u64, params: &SimParams, clock: u64) -> Self {
        Vehicle {
            id,
            position: 0.0,
            speed: params.v_max,
            wait_accum: 0.0,
            time_loss_accum: 0.0,
            entered_at: clock,
        }
    }
}

/// An incoming lane: vehicles ordered front (closest to the stop line) to
/// back, plus a FIFO backlog of sampled arrivals waiting for entry space.
#[derive(Debug, Clone)]
pub struct Lane {
    pub index: usize,
    pub approach: Approach,
    pub role: LaneRole,
    pub vehicles: Vec<Vehicle>,
    pub backlog: VecDeque<u64>,
}

impl Lane {
    pub(crate) fn new(index: usize, approach: Approach, role: LaneRole) -> Self {
        Lane {
            index,
            approach,
            role,
            vehicles: Vec::new(),
            backlog: VecDeque::new(),
        }
    }

    /// Movement whose signal governs this lane. The shared through/right
    /// lane obeys the through signal; right turns on red are not allowed.
    pub fn control_movement(&self) -> Movement {
        let turn = match self.role {
            LaneRole::Left => Turn::Left,
            LaneRole::Through | LaneRole::ThroughRight => Turn::Through,
        };
        mv(self.approach, turn)
    }

    /// Number of halting vehicles (speed at or below `halt_threshold`).
    pub fn queue_length(&self, halt_threshold: f64) -> usize {
        self.vehicles
            .iter()
            .filter(|v| v.speed <= halt_threshold)
            .count()
    }

    /// Whether a new vehicle fits at the lane entry.
    pub fn has_entry_space(&self, params: &SimParams) -> bool {
        match self.vehicles.last() {
            None => true,
            Some(rear) => rear.position - params.vehicle_length >= params.insertion_clearance(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_distinct_movements() {
        let mut seen = std::collections::HashSet::new();
        for m in Movement::ALL {
            assert!(seen.insert(m));
            assert_eq!(Movement::ALL[m.index()], m);
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn entry_lane_routing() {
        use Approach::*;
        use Turn::*;
        assert_eq!(mv(North, Left).entry_lane(), 0);
        assert_eq!(mv(North, Through).entry_lane(), 2);
        assert_eq!(mv(North, Right).entry_lane(), 2);
        assert_eq!(mv(West, Through).entry_lane(), 11);
    }

    #[test]
    fn queue_counts_only_halting() {
        let params = SimParams::default();
        let mut lane = Lane::new(0, Approach::North, LaneRole::Left);
        for (i, speed) in [0.0, 0.05, 5.0, 0.1, 0.11].into_iter().enumerate() {
            let mut v = Vehicle::entering(i as u64, &params, 0);
            v.position = 140.0 - 10.0 * i as f64;
            v.speed = speed;
            lane.vehicles.push(v);
        }
        // 0.1 m/s is counted, 0.11 is not.
        assert_eq!(lane.queue_length(params.halt_threshold), 3);
    }

    #[test]
    fn entry_space_rule() {
        let params = SimParams::default();
        let mut lane = Lane::new(0, Approach::North, LaneRole::Left);
        assert!(lane.has_entry_space(&params));
        let mut v = Vehicle::entering(0, &params, 0);
        v.position = 12.4; // rear bumper at 7.4 < 7.5 required
        lane.vehicles.push(v);
        assert!(!lane.has_entry_space(&params));
        lane.vehicles[0].position = 12.5;
        assert!(lane.has_entry_space(&params));
    }
}
