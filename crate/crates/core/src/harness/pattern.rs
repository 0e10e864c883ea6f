use std::fmt;
use std::str::FromStr;

use crate::sim::{ArrivalRates, Movement, LANE_COUNT};

use super::EPISODE_STEPS;

/// The four synthetic demand profiles: major/minor road (P1), heavy
/// left-turn (P2), tidal (P3), and time-varying through demand (P4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternId {
    P1,
    P2,
    P3,
    P4,
}

impl PatternId {
    pub const ALL: [PatternId; 4] = [PatternId::P1, PatternId::P2, PatternId::P3, PatternId::P4];

    /// Patterns used for training; P4 serves as the held-out test profile.
    pub const TRAINING: [PatternId; 3] = [PatternId::P1, PatternId::P2, PatternId::P3];

    pub fn label(self) -> &'static str {
        match self {
            PatternId::P1 => "P1",
            PatternId::P2 => "P2",
            PatternId::P3 => "P3",
            PatternId::P4 => "P4",
        }
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PatternId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "P1" => Ok(PatternId::P1),
            "P2" => Ok(PatternId::P2),
            "P3" => Ok(PatternId::P3),
            "P4" => Ok(PatternId::P4),
            _ => Err(format!("unknown pattern '{s}' (expected P1..P4)")),
        }
    }
}

/// A piecewise-constant arrival rate over the episode; pieces are
/// `(from_step, rate)` with the first piece starting at step 0. Steps past
/// the last breakpoint keep the final rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSchedule {
    pieces: Vec<(u64, f64)>,
}

impl RateSchedule {
    pub fn constant(rate: f64) -> Self {
        RateSchedule {
            pieces: vec![(0, rate)],
        }
    }

    pub fn piecewise(pieces: Vec<(u64, f64)>) -> Self {
        assert!(!pieces.is_empty() && pieces[0].0 == 0, "first piece at 0");
        assert!(
            pieces.windows(2).all(|w| w[0].0 < w[1].0),
            "breakpoints must increase"
        );
        RateSchedule { pieces }
    }

    pub fn rate(&self, step: u64) -> f64 {
        self.pieces
            .iter()
            .rev()
            .find(|(from, _)| *from <= step)
            .map(|(_, r)| *r)
            .expect("first piece starts at 0")
    }

    /// Time-averaged rate over `[0, horizon)`.
    pub fn mean(&self, horizon: u64) -> f64 {
        let mut total = 0.0;
        for (k, (from, rate)) in self.pieces.iter().enumerate() {
            let end = self
                .pieces
                .get(k + 1)
                .map(|(next, _)| *next)
                .unwrap_or(horizon)
                .min(horizon);
            if end > *from {
                total += (end - from) as f64 * rate;
            }
        }
        total / horizon as f64
    }
}

/// Per-movement Bernoulli arrival rates for one traffic pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSpec {
    pub id: PatternId,
    rates: Vec<RateSchedule>,
}

fn approach_rates(
    rates: &mut Vec<RateSchedule>,
    through: RateSchedule,
    left: RateSchedule,
    right: RateSchedule,
) {
    // Movement order within an approach is left, through, right.
    rates.push(left);
    rates.push(through);
    rates.push(right);
}

impl PatternSpec {
    /// Exact per-movement rates of the four study patterns. Each table row
    /// ("N-S", "S-N", …) describes the approach the traffic comes from.
    pub fn build(id: PatternId) -> Self {
        let c = RateSchedule::constant;
        let mut rates = Vec::with_capacity(LANE_COUNT);
        match id {
            PatternId::P1 => {
                // Major west-east road, minor north-south road.
                approach_rates(&mut rates, c(0.05), c(0.025), c(0.01)); // N
                approach_rates(&mut rates, c(0.1), c(0.05), c(0.01)); // E
                approach_rates(&mut rates, c(0.05), c(0.025), c(0.01)); // S
                approach_rates(&mut rates, c(0.1), c(0.05), c(0.01)); // W
            }
            PatternId::P2 => {
                // Left-turn demand dominates the west-east directions.
                approach_rates(&mut rates, c(0.05), c(0.025), c(0.01)); // N
                approach_rates(&mut rates, c(0.05), c(0.1), c(0.01)); // E
                approach_rates(&mut rates, c(0.05), c(0.025), c(0.01)); // S
                approach_rates(&mut rates, c(0.05), c(0.1), c(0.01)); // W
            }
            PatternId::P3 => {
                // Tidal: north and east carry more than their opposites.
                approach_rates(&mut rates, c(0.1), c(0.08), c(0.01)); // N
                approach_rates(&mut rates, c(0.1), c(0.08), c(0.01)); // E
                approach_rates(&mut rates, c(0.05), c(0.025), c(0.01)); // S
                approach_rates(&mut rates, c(0.05), c(0.025), c(0.01)); // W
            }
            PatternId::P4 => {
                // Through demand on the west-east axis varies over time.
                approach_rates(&mut rates, c(0.05), c(0.025), c(0.01)); // N
                approach_rates(
                    &mut rates,
                    RateSchedule::piecewise(vec![(0, 0.05), (1200, 0.15)]),
                    c(0.025),
                    c(0.01),
                ); // E
                approach_rates(&mut rates, c(0.05), c(0.025), c(0.01)); // S
                approach_rates(
                    &mut rates,
                    RateSchedule::piecewise(vec![(0, 0.15), (600, 0.05)]),
                    c(0.025),
                    c(0.01),
                ); // W
            }
        }
        PatternSpec { id, rates }
    }

    /// A pattern with explicit per-movement schedules, in movement-index
    /// order.
    pub fn custom(id: PatternId, rates: Vec<RateSchedule>) -> Self {
        assert_eq!(rates.len(), LANE_COUNT, "one schedule per movement");
        PatternSpec { id, rates }
    }

    pub fn rate(&self, movement: Movement, step: u64) -> f64 {
        self.rates[movement.index()].rate(step)
    }

    /// Nominal time-averaged rate of one movement over an episode.
    pub fn mean_rate(&self, movement: Movement) -> f64 {
        self.rates[movement.index()].mean(EPISODE_STEPS)
    }

    pub fn mean_rates(&self) -> [f64; LANE_COUNT] {
        let mut means = [0.0; LANE_COUNT];
        for m in Movement::ALL {
            means[m.index()] = self.mean_rate(m);
        }
        means
    }
}

impl ArrivalRates for PatternSpec {
    fn rate(&self, movement: Movement, step: u64) -> f64 {
        PatternSpec::rate(self, movement, step)
    }
}
