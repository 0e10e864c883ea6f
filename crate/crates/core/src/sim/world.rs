use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::signal::{Interval, SignalState};

use super::krauss;
use super::lane::{Approach, Lane, LaneRole, Movement, Vehicle};
use super::params::{ParamError, SimParams};
use super::LANE_COUNT;

/// Per-movement arrival probabilities, possibly varying over time.
pub trait ArrivalRates {
    /// Probability that a vehicle of `movement` arrives during `step`.
    fn rate(&self, movement: Movement, step: u64) -> f64;
}

/// An arrival process that never produces vehicles.
pub struct NoArrivals;

impl ArrivalRates for NoArrivals {
    fn rate(&self, _movement: Movement, _step: u64) -> f64 {
        0.0
    }
}

/// Running totals used for episode metrics. All sums are non-decreasing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsAccumulator {
    /// Sum over steps of the number of halting vehicles.
    pub halting_vehicle_step_sum: u64,
    /// Vehicles sampled into the simulation (including backlogged ones).
    pub vehicles_entered: u64,
    /// Vehicles that crossed the stop line and left.
    pub vehicles_departed: u64,
    /// Total halting seconds over all vehicles, departed and remaining.
    pub wait_sum: f64,
    pub steps_elapsed: u64,
}

/// What happened during a single step.
#[derive(Debug, Clone)]
pub struct StepEvents {
    /// Index of the executed step (the clock value before the step ran).
    pub step: u64,
    /// Stop-line crossings per lane.
    pub departures_by_lane: [u8; LANE_COUNT],
    /// Movements whose Bernoulli draw succeeded, with assigned vehicle ids.
    pub arrivals: Vec<(Movement, u64)>,
}

/// Leader view seen by one vehicle: `(leader_speed, gap)`.
///
/// A physical leader yields its speed and the bumper-to-bumper distance net
/// of `min_gap`, floored at zero. The front vehicle sees either a free road
/// (`v_max`, infinite gap) when its lane has right of way, or a stationary
/// virtual leader at the stop line otherwise. During yellow the vehicle
/// proceeds only when its braking distance `v²/(2b)` exceeds the distance
/// left to the stop line.
pub fn effective_leader(
    lane: &Lane,
    index: usize,
    signal: &SignalState,
    params: &SimParams,
) -> (f64, f64) {
    let vehicle = &lane.vehicles[index];
    if index > 0 {
        let leader = &lane.vehicles[index - 1];
        let gap =
            (leader.position - params.vehicle_length - vehicle.position - params.min_gap).max(0.0);
        return (leader.speed, gap);
    }
    let proceed = match signal.interval() {
        Interval::Green(phase) => signal.table().grants(phase, lane.control_movement()),
        Interval::Yellow { .. } => {
            let to_line = params.lane_length - vehicle.position;
            let braking_distance = vehicle.speed * vehicle.speed / (2.0 * params.decel);
            braking_distance > to_line
        }
    };
    if proceed {
        (params.v_max, f64::INFINITY)
    } else {
        (0.0, params.lane_length - vehicle.position)
    }
}

/// Full simulation state: twelve lanes, a clock, a seeded generator, and
/// metric accumulators. Distinct instances are fully independent.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub params: SimParams,
    pub lanes: Vec<Lane>,
    /// Completed steps since the start of the episode.
    pub clock: u64,
    pub metrics: MetricsAccumulator,
    rng: ChaCha8Rng,
    next_vehicle_id: u64,
}

impl WorldState {
    pub fn new(params: SimParams, seed: u64) -> Result<Self, ParamError> {
        params.validate()?;
        let mut lanes = Vec::with_capacity(LANE_COUNT);
        for approach in Approach::ALL {
            for role in [LaneRole::Left, LaneRole::Through, LaneRole::ThroughRight] {
                lanes.push(Lane::new(lanes.len(), approach, role));
            }
        }
        Ok(WorldState {
            params,
            lanes,
            clock: 0,
            metrics: MetricsAccumulator::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_vehicle_id: 0,
        })
    }

    /// Advance the world by one time step under the given signal state:
    /// update speeds front-to-back, move vehicles, discharge stop-line
    /// crossings, sample arrivals, then accumulate metrics.
    pub fn step(&mut self, signal: &SignalState, rates: &impl ArrivalRates) -> StepEvents {
        let params = self.params.clone();
        let dt = params.time_step;
        let mut events = StepEvents {
            step: self.clock,
            departures_by_lane: [0; LANE_COUNT],
            arrivals: Vec::new(),
        };

        // New speeds, leaders first, so every follower reacts to the speed
        // its leader will actually drive this step.
        for lane in &mut self.lanes {
            for i in 0..lane.vehicles.len() {
                let (leader_speed, gap) = effective_leader(lane, i, signal, &params);
                lane.vehicles[i].speed = krauss::update_speed(
                    lane.vehicles[i].speed,
                    leader_speed,
                    gap,
                    &params,
                    &mut self.rng,
                );
            }
        }

        // Positions advance simultaneously.
        for lane in &mut self.lanes {
            for vehicle in &mut lane.vehicles {
                vehicle.position += vehicle.speed * dt;
            }
        }

        // Vehicles whose front bumper passed the stop line leave. Red
        // approaches cannot cross: the safe speed never exceeds the gap to
        // the virtual leader at the line.
        for lane in &mut self.lanes {
            while lane
                .vehicles
                .first()
                .is_some_and(|v| v.position > params.lane_length)
            {
                debug_assert!(
                    match signal.interval() {
                        Interval::Green(phase) =>
                            signal.table().grants(phase, lane.control_movement()),
                        Interval::Yellow { .. } => true,
                    },
                    "stop-line crossing without right of way"
                );
                lane.vehicles.remove(0);
                self.metrics.vehicles_departed += 1;
                events.departures_by_lane[lane.index] += 1;
            }
        }

        self.sample_arrivals(rates, &mut events);

        // Metrics use post-move speeds.
        let mut halting = 0u64;
        for lane in &mut self.lanes {
            for vehicle in &mut lane.vehicles {
                if vehicle.speed <= params.halt_threshold {
                    halting += 1;
                    vehicle.wait_accum += dt;
                }
                vehicle.time_loss_accum += (1.0 - vehicle.speed / params.v_max) * dt;
            }
        }
        self.metrics.halting_vehicle_step_sum += halting;
        self.metrics.wait_sum += halting as f64 * dt;
        self.metrics.steps_elapsed += 1;

        self.clock += 1;
        events
    }

    /// Bernoulli arrival sampling for the current step. Backlogged vehicles
    /// are inserted first; at most one vehicle enters a lane per step since
    /// all insertions happen at the lane entry.
    fn sample_arrivals(&mut self, rates: &impl ArrivalRates, events: &mut StepEvents) {
        let params = self.params.clone();
        let mut inserted = [false; LANE_COUNT];

        for lane in &mut self.lanes {
            if !lane.backlog.is_empty() && lane.has_entry_space(&params) {
                let id = lane.backlog.pop_front().expect("non-empty backlog");
                lane.vehicles
                    .push(Vehicle::entering(id, &params, self.clock));
                inserted[lane.index] = true;
            }
        }

        for movement in Movement::ALL {
            let rate = rates.rate(movement, self.clock).clamp(0.0, 1.0);
            // One draw per movement per step regardless of rate keeps the
            // generator stream aligned across patterns.
            let arrived = self.rng.random::<f64>() < rate;
            if !arrived {
                continue;
            }
            let id = self.next_vehicle_id;
            self.next_vehicle_id += 1;
            self.metrics.vehicles_entered += 1;
            events.arrivals.push((movement, id));

            let lane = &mut self.lanes[movement.entry_lane()];
            if !inserted[lane.index] && lane.backlog.is_empty() && lane.has_entry_space(&params) {
                lane.vehicles
                    .push(Vehicle::entering(id, &params, self.clock));
                inserted[lane.index] = true;
            } else {
                lane.backlog.push_back(id);
            }
        }
    }

    /// Halting-vehicle count per lane, in lane-index order.
    pub fn queue_lengths(&self) -> [u32; LANE_COUNT] {
        let mut q = [0u32; LANE_COUNT];
        for lane in &self.lanes {
            q[lane.index] = lane.queue_length(self.params.halt_threshold) as u32;
        }
        q
    }

    /// Total queue length over the twelve incoming lanes.
    pub fn total_queue(&self) -> u32 {
        self.queue_lengths().iter().sum()
    }

    /// Queue lengths normalized by lane capacity, the network input.
    pub fn observe_state(&self) -> [f64; LANE_COUNT] {
        let capacity = self.params.lane_capacity() as f64;
        let mut state = [0.0; LANE_COUNT];
        for (slot, q) in state.iter_mut().zip(self.queue_lengths()) {
            *slot = q as f64 / capacity;
        }
        state
    }

    /// Vehicles currently on the lanes plus backlogged arrivals.
    pub fn vehicles_present(&self) -> u64 {
        self.lanes
            .iter()
            .map(|l| (l.vehicles.len() + l.backlog.len()) as u64)
            .sum()
    }

    /// Verify the physical and accounting invariants; returns a description
    /// of the first violation found.
    pub fn check_invariants(&self) -> Result<(), String> {
        let p = &self.params;
        for lane in &self.lanes {
            if lane.vehicles.len() > p.lane_capacity() {
                return Err(format!(
                    "lane {} holds {} vehicles (capacity {})",
                    lane.index,
                    lane.vehicles.len(),
                    p.lane_capacity()
                ));
            }
            for v in &lane.vehicles {
                if !(0.0..=p.v_max + 1e-9).contains(&v.speed) {
                    return Err(format!("vehicle {} speed {} out of bounds", v.id, v.speed));
                }
                if !(0.0..=p.lane_length + 1e-9).contains(&v.position) {
                    return Err(format!(
                        "vehicle {} position {} out of bounds",
                        v.id, v.position
                    ));
                }
                let age = (self.clock.saturating_sub(v.entered_at)) as f64 * p.time_step;
                if v.wait_accum > age + 1e-9 || v.time_loss_accum > age + 1e-9 {
                    return Err(format!("vehicle {} accumulators exceed its age", v.id));
                }
            }
            for pair in lane.vehicles.windows(2) {
                let bumper_gap = pair[0].position - p.vehicle_length - pair[1].position;
                if bumper_gap < -1e-9 {
                    return Err(format!(
                        "overlap on lane {}: vehicles {} and {} ({} m)",
                        lane.index, pair[0].id, pair[1].id, bumper_gap
                    ));
                }
            }
        }
        let accounted = self.metrics.vehicles_departed + self.vehicles_present();
        if self.metrics.vehicles_entered != accounted {
            return Err(format!(
                "conservation violated: entered {} != departed+present {}",
                self.metrics.vehicles_entered, accounted
            ));
        }
        Ok(())
    }
}
