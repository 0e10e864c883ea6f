//! The reinforcement-learning control loop: ε-greedy phase selection,
//! queue-difference rewards, experience replay, per-decision training, and
//! per-episode target-network refresh.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qnet::{
    argmax, batch_gradients, copy_into_target, sgd_momentum_step, td_targets, Minibatch,
    NetworkParams, OptimizerState, QnetError,
};
use crate::signal::{Controller, PhaseId, PhaseRequest, PhaseTable, SignalError, SignalState};
use crate::sim::{ArrivalRates, MetricsAccumulator, ParamError, SimParams, WorldState, LANE_COUNT};

/// One stored experience ⟨s, a, R, s′⟩. States are normalized queue
/// vectors; the reward is the raw integer queue difference.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: [f64; LANE_COUNT],
    pub action: PhaseId,
    pub reward: i64,
    pub next_state: [f64; LANE_COUNT],
}

/// Replay failures.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("replay memory holds {have} transitions, {need} required")]
    NotEnoughSamples { have: usize, need: usize },
}

/// Ring buffer of recent transitions; once full, the oldest entries are
/// overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    items: Vec<Transition>,
    cursor: usize,
    capacity: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayMemory {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn store(&mut self, transition: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(transition);
        } else {
            self.items[self.cursor] = transition;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.items.get(index)
    }

    /// Uniform sampling with replacement across the current occupancy.
    pub fn sample_batch<R: Rng>(
        &self,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Minibatch, ReplayError> {
        if self.items.len() < batch_size {
            return Err(ReplayError::NotEnoughSamples {
                have: self.items.len(),
                need: batch_size,
            });
        }
        let mut states = Array2::zeros((batch_size, LANE_COUNT));
        let mut next_states = Array2::zeros((batch_size, LANE_COUNT));
        let mut actions = Vec::with_capacity(batch_size);
        let mut rewards = Vec::with_capacity(batch_size);
        for row in 0..batch_size {
            let t = &self.items[rng.random_range(0..self.items.len())];
            for (col, v) in t.state.iter().enumerate() {
                states[(row, col)] = *v;
            }
            for (col, v) in t.next_state.iter().enumerate() {
                next_states[(row, col)] = *v;
            }
            actions.push(t.action.index());
            rewards.push(t.reward as f64);
        }
        Ok(Minibatch {
            states,
            actions,
            rewards,
            next_states,
        })
    }
}

/// Linear exploration decay from `start` to `end` over `decay_steps`
/// training steps, constant afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            start: 0.9,
            end: 0.05,
            decay_steps: 15_000,
        }
    }
}

impl EpsilonSchedule {
    pub fn value(&self, training_step: u64) -> f64 {
        if training_step >= self.decay_steps {
            return self.end;
        }
        let progress = training_step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * progress
    }
}

/// Hyper-parameters of the learning loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epsilon: EpsilonSchedule,
    /// Hidden layer widths of the Q-network.
    pub hidden_layers: Vec<usize>,
    /// Simulation steps per training episode; the target network refreshes
    /// at each episode end.
    pub episode_steps: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.999,
            batch_size: 128,
            replay_capacity: 10_000,
            learning_rate: 0.01,
            momentum: 0.9,
            epsilon: EpsilonSchedule::default(),
            hidden_layers: vec![64, 64],
            episode_steps: 1800,
        }
    }
}

/// Invalid [`AgentConfig`] field combinations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum AgentConfigError {
    #[error("agent.gamma must lie strictly inside (0, 1)")]
    GammaRange,
    #[error("agent.{field} must be positive")]
    NonPositive { field: &'static str },
    #[error("agent.batch_size must not exceed agent.replay_capacity")]
    BatchAboveCapacity,
    #[error("agent.epsilon must satisfy 0 ≤ end ≤ start ≤ 1")]
    EpsilonRange,
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentConfigError> {
        if self.gamma.is_nan() || self.gamma <= 0.0 || self.gamma >= 1.0 {
            return Err(AgentConfigError::GammaRange);
        }
        if self.batch_size == 0 {
            return Err(AgentConfigError::NonPositive {
                field: "batch_size",
            });
        }
        if self.replay_capacity == 0 {
            return Err(AgentConfigError::NonPositive {
                field: "replay_capacity",
            });
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(AgentConfigError::NonPositive {
                field: "learning_rate",
            });
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(AgentConfigError::NonPositive { field: "momentum" });
        }
        if self.episode_steps == 0 {
            return Err(AgentConfigError::NonPositive {
                field: "episode_steps",
            });
        }
        if self.hidden_layers.is_empty() || self.hidden_layers.contains(&0) {
            return Err(AgentConfigError::NonPositive {
                field: "hidden_layers",
            });
        }
        if self.batch_size > self.replay_capacity {
            return Err(AgentConfigError::BatchAboveCapacity);
        }
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) || e.end > e.start {
            return Err(AgentConfigError::EpsilonRange);
        }
        Ok(())
    }

    /// Full layer size list of the Q-network for this configuration.
    pub fn network_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![LANE_COUNT];
        sizes.extend(&self.hidden_layers);
        sizes.push(PhaseId::COUNT);
        sizes
    }
}

/// ε-greedy selection over the eight phases: with probability ε a uniform
/// random phase, otherwise the argmax with ties broken toward the lowest
/// phase index.
pub fn select_action<R: Rng>(q_values: &Array1<f64>, epsilon: f64, rng: &mut R) -> PhaseId {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        PhaseId::from_index(rng.random_range(0..PhaseId::COUNT)).expect("in range")
    } else {
        PhaseId::from_index(argmax(q_values.as_slice().expect("contiguous"))).expect("in range")
    }
}

/// Queue-difference reward: positive when the total number of halting
/// vehicles decreased across the decision interval.
pub fn compute_reward(total_queue_before: u32, total_queue_after: u32) -> i64 {
    total_queue_before as i64 - total_queue_after as i64
}

/// Counter-based split of the master seed into per-episode arrival seeds
/// (splitmix64 finalizer), so episodes differ but the run is reproducible.
pub fn episode_seed(master_seed: u64, episode: u32) -> u64 {
    let mut z = master_seed ^ (episode as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Anything the training loop can fail on.
#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Config(#[from] AgentConfigError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Qnet(#[from] QnetError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Outcome of one decision cycle.
#[derive(Debug, Clone)]
pub struct CycleOutcome {
    pub transition: Transition,
    /// Mean Huber loss of the training step, if one ran.
    pub loss: Option<f64>,
    /// Simulation steps the interval spanned (one phase span, plus the
    /// preceding yellow on a switch).
    pub steps: u32,
    pub total_queue_before: u32,
    pub total_queue_after: u32,
}

/// Per-episode training summary.
#[derive(Debug, Clone)]
pub struct EpisodeStats {
    pub metrics: MetricsAccumulator,
    pub transitions: Vec<Transition>,
    /// Mean loss over the decisions that trained; 0 before learning starts.
    pub mean_loss: f64,
    pub epsilon_end: f64,
    pub first_total_queue: u32,
    pub last_total_queue: u32,
}

/// The deep Q-learning trainer: online and target networks, replay memory,
/// optimizer state, and the exploration/replay generators, all derived from
/// one master seed.
pub struct DqnTrainer {
    pub sim: SimParams,
    pub cfg: AgentConfig,
    pub online: NetworkParams,
    pub target: NetworkParams,
    pub memory: ReplayMemory,
    opt: OptimizerState,
    policy_rng: ChaCha8Rng,
    replay_rng: ChaCha8Rng,
    /// Completed agent decisions; drives the ε schedule.
    pub training_steps: u64,
    table: PhaseTable,
}

// Independent ChaCha streams of the master seed.
const STREAM_INIT: u64 = 0;
const STREAM_POLICY: u64 = 1;
const STREAM_REPLAY: u64 = 2;

impl DqnTrainer {
    pub fn new(sim: SimParams, cfg: AgentConfig, master_seed: u64) -> Result<Self, AgentError> {
        sim.validate()?;
        cfg.validate()?;
        let mut init_rng = ChaCha8Rng::seed_from_u64(master_seed);
        init_rng.set_stream(STREAM_INIT);
        let online = NetworkParams::seeded(&cfg.network_sizes(), &mut init_rng);
        let target = copy_into_target(&online);
        let opt = OptimizerState::new(cfg.learning_rate, cfg.momentum, &online);
        let mut policy_rng = ChaCha8Rng::seed_from_u64(master_seed);
        policy_rng.set_stream(STREAM_POLICY);
        let mut replay_rng = ChaCha8Rng::seed_from_u64(master_seed);
        replay_rng.set_stream(STREAM_REPLAY);
        Ok(DqnTrainer {
            sim,
            memory: ReplayMemory::new(cfg.replay_capacity),
            online,
            target,
            opt,
            policy_rng,
            replay_rng,
            training_steps: 0,
            table: PhaseTable::standard(),
            cfg,
        })
    }

    /// Exploration probability at the current training step.
    pub fn epsilon(&self) -> f64 {
        self.cfg.epsilon.value(self.training_steps)
    }

    /// One decision cycle: observe, pick a phase ε-greedily, run the full
    /// signal interval, store the transition, and train once the memory
    /// holds a batch.
    pub fn decision_cycle(
        &mut self,
        world: &mut WorldState,
        signal: &mut SignalState,
        rates: &impl ArrivalRates,
    ) -> Result<CycleOutcome, AgentError> {
        let state = world.observe_state();
        let total_queue_before = world.total_queue();
        let q_values = self.online.forward(&state)?;
        let action = select_action(&q_values, self.epsilon(), &mut self.policy_rng);
        signal.actuate(action, &world.params)?;

        let mut steps = 0;
        loop {
            world.step(signal, rates);
            signal.tick();
            steps += 1;
            if signal.at_decision_point() {
                break;
            }
        }

        let next_state = world.observe_state();
        let total_queue_after = world.total_queue();
        let transition = Transition {
            state,
            action,
            reward: compute_reward(total_queue_before, total_queue_after),
            next_state,
        };
        self.memory.store(transition.clone());

        let loss = if self.memory.len() >= self.cfg.batch_size {
            let batch = self
                .memory
                .sample_batch(self.cfg.batch_size, &mut self.replay_rng)?;
            let targets = td_targets(&self.online, &self.target, &batch, self.cfg.gamma);
            let (grads, loss) = batch_gradients(&self.online, &batch, &targets)?;
            sgd_momentum_step(&mut self.online, &grads, &mut self.opt)?;
            Some(loss)
        } else {
            None
        };
        self.training_steps += 1;

        Ok(CycleOutcome {
            transition,
            loss,
            steps,
            total_queue_before,
            total_queue_after,
        })
    }

    /// Run one full training episode on a fresh world, then refresh the
    /// target network. The final interval completes even when it carries
    /// the clock past the episode length, so every transition spans a whole
    /// interval.
    pub fn run_training_episode(
        &mut self,
        rates: &impl ArrivalRates,
        world_seed: u64,
    ) -> Result<EpisodeStats, AgentError> {
        let mut world = WorldState::new(self.sim.clone(), world_seed)?;
        let mut signal = SignalState::new(self.table, PhaseId::ALL[0]);
        let mut transitions = Vec::new();
        let mut losses = Vec::new();
        let mut first_total_queue = 0;
        let mut last_total_queue = 0;
        while world.clock < self.cfg.episode_steps {
            let outcome = self.decision_cycle(&mut world, &mut signal, rates)?;
            if transitions.is_empty() {
                first_total_queue = outcome.total_queue_before;
            }
            last_total_queue = outcome.total_queue_after;
            transitions.push(outcome.transition);
            if let Some(loss) = outcome.loss {
                losses.push(loss);
            }
        }
        self.target = copy_into_target(&self.online);
        let mean_loss = if losses.is_empty() {
            0.0
        } else {
            losses.iter().sum::<f64>() / losses.len() as f64
        };
        Ok(EpisodeStats {
            metrics: world.metrics.clone(),
            transitions,
            mean_loss,
            epsilon_end: self.epsilon(),
            first_total_queue,
            last_total_queue,
        })
    }

    /// Give up the trainer and keep the learned parameters.
    pub fn into_online(self) -> NetworkParams {
        self.online
    }
}

/// Frozen greedy policy used for evaluation: always the argmax phase, one
/// phase span of green.
pub struct GreedyPolicy<'a> {
    params: &'a NetworkParams,
}

impl<'a> GreedyPolicy<'a> {
    pub fn new(params: &'a NetworkParams) -> Self {
        GreedyPolicy { params }
    }
}

impl Controller for GreedyPolicy<'_> {
    fn decide(&mut self, world: &WorldState, _signal: &SignalState) -> PhaseRequest {
        let q_values = self
            .params
            .forward(&world.observe_state())
            .expect("queue observations are finite");
        let phase = PhaseId::from_index(argmax(q_values.as_slice().expect("contiguous")))
            .expect("in range");
        PhaseRequest {
            phase,
            green_steps: world.params.green_steps(),
        }
    }
}
