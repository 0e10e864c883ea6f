//! Experiment drivers: traffic patterns, episode execution, training runs,
//! repeated evaluation, benchmark comparison, and generalization matrices,
//! plus the CSV/JSON renderers for their outputs.

mod pattern;
mod stats;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::agent::{episode_seed, AgentConfig, AgentError, DqnTrainer, GreedyPolicy};
use crate::qnet::{NetworkParams, QnetError};
use crate::signal::{
    fixed_time_schedule, BaselineConfig, BaselineConfigError, Controller, FixedTimeController,
    GapBasedController, PhaseId, PhaseTable, SignalError, SignalState, TimeLossController,
};
use crate::sim::{MetricsAccumulator, ParamError, SimParams, StepEvents, WorldState, LANE_COUNT};

pub use pattern::{PatternId, PatternSpec, RateSchedule};
pub use stats::{quantile, EvalStats, SummaryStats};

/// Simulation steps per episode.
pub const EPISODE_STEPS: u64 = 1800;

/// Experiment-level failures.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Baseline(#[from] BaselineConfigError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Qnet(#[from] QnetError),
    #[error("missing model file(s): {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingModels(Vec<PathBuf>),
    #[error("evaluation produced no runs")]
    NoRuns,
    #[error("a Q-network policy needs a model file (--model)")]
    ModelRequired,
}

/// Metrics of one finished episode: halting vehicles per incoming lane and
/// waiting seconds per entered vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub avg_queue_length: f64,
    pub avg_wait_time: f64,
    pub vehicles_entered: u64,
    pub vehicles_departed: u64,
}

impl EpisodeResult {
    pub fn from_metrics(metrics: &MetricsAccumulator) -> Self {
        let steps = metrics.steps_elapsed.max(1) as f64;
        let avg_queue_length =
            metrics.halting_vehicle_step_sum as f64 / (steps * LANE_COUNT as f64);
        let avg_wait_time = if metrics.vehicles_entered > 0 {
            metrics.wait_sum / metrics.vehicles_entered as f64
        } else {
            0.0
        };
        EpisodeResult {
            avg_queue_length,
            avg_wait_time,
            vehicles_entered: metrics.vehicles_entered,
            vehicles_departed: metrics.vehicles_departed,
        }
    }
}

/// One controller decision, for per-decision logs.
#[derive(Debug, Clone, Copy)]
pub struct DecisionRecord {
    pub step: u64,
    pub phase: PhaseId,
    /// Whether a yellow interval precedes the granted green.
    pub switched: bool,
    pub elapsed_green: f64,
}

/// Hooks into a running episode, used for traces and invariant checks.
pub trait EpisodeObserver {
    fn on_decision(&mut self, _decision: &DecisionRecord) {}
    fn on_step(&mut self, _world: &WorldState, _events: &StepEvents, _signal: &SignalState) {}
}

struct NoopObserver;

impl EpisodeObserver for NoopObserver {}

/// Run one evaluation episode: a fresh world, exactly [`EPISODE_STEPS`]
/// steps, metrics per [`EpisodeResult`]. Wait accumulated by vehicles still
/// queued at the end is included.
pub fn run_episode(
    controller: &mut dyn Controller,
    sim: &SimParams,
    pattern: &PatternSpec,
    seed: u64,
) -> Result<EpisodeResult, HarnessError> {
    run_episode_observed(controller, sim, pattern, seed, &mut NoopObserver)
}

/// [`run_episode`] with observer callbacks after each decision and step.
pub fn run_episode_observed(
    controller: &mut dyn Controller,
    sim: &SimParams,
    pattern: &PatternSpec,
    seed: u64,
    observer: &mut dyn EpisodeObserver,
) -> Result<EpisodeResult, HarnessError> {
    let mut world = WorldState::new(sim.clone(), seed)?;
    let mut signal = SignalState::new(PhaseTable::standard(), PhaseId::ALL[0]);
    while world.clock < EPISODE_STEPS {
        if signal.at_decision_point() {
            let elapsed_green = signal.green_run_steps() as f64 * sim.time_step;
            let request = controller.decide(&world, &signal);
            observer.on_decision(&DecisionRecord {
                step: world.clock,
                phase: request.phase,
                switched: signal.current_green() != Some(request.phase),
                elapsed_green,
            });
            signal.schedule_green(request.phase, request.green_steps, sim)?;
        }
        let events = world.step(&signal, pattern);
        signal.tick();
        controller.on_step(&events, &signal);
        observer.on_step(&world, &events, &signal);
    }
    Ok(EpisodeResult::from_metrics(&world.metrics))
}

/// Which control policy drives an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControllerKind {
    Fixed,
    Gap,
    TimeLoss,
    Rl,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [
        ControllerKind::Fixed,
        ControllerKind::Gap,
        ControllerKind::TimeLoss,
        ControllerKind::Rl,
    ];

    pub const BASELINES: [ControllerKind; 3] = [
        ControllerKind::Fixed,
        ControllerKind::Gap,
        ControllerKind::TimeLoss,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::Fixed => "fixed",
            ControllerKind::Gap => "gap",
            ControllerKind::TimeLoss => "timeloss",
            ControllerKind::Rl => "rl",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" => Ok(ControllerKind::Fixed),
            "gap" => Ok(ControllerKind::Gap),
            "timeloss" => Ok(ControllerKind::TimeLoss),
            "rl" => Ok(ControllerKind::Rl),
            _ => Err(format!(
                "unknown controller '{s}' (expected fixed, gap, timeloss, or rl)"
            )),
        }
    }
}

/// Build a fresh controller of the requested kind. The RL kind needs the
/// trained parameters; the fixed-time kind derives its schedule from the
/// pattern's nominal rates.
pub fn make_controller<'a>(
    kind: ControllerKind,
    sim: &SimParams,
    baseline: &BaselineConfig,
    pattern: &PatternSpec,
    model: Option<&'a NetworkParams>,
) -> Result<Box<dyn Controller + Send + 'a>, HarnessError> {
    baseline.validate()?;
    Ok(match kind {
        ControllerKind::Fixed => {
            let schedule = fixed_time_schedule(
                &pattern.mean_rates(),
                baseline,
                &PhaseTable::standard(),
                sim,
            );
            Box::new(FixedTimeController::new(schedule))
        }
        ControllerKind::Gap => Box::new(GapBasedController::new(baseline.clone())),
        ControllerKind::TimeLoss => Box::new(TimeLossController::new(baseline.clone())),
        ControllerKind::Rl => {
            let params = model.ok_or(HarnessError::ModelRequired)?;
            Box::new(GreedyPolicy::new(params))
        }
    })
}

/// Result of one evaluation run, keyed by its world seed.
#[derive(Debug, Clone, Copy)]
pub struct EvalRunRow {
    pub seed: u64,
    pub result: EpisodeResult,
}

/// Per-run rows plus their summary statistics.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub rows: Vec<EvalRunRow>,
    pub stats: EvalStats,
}

/// Run `runs` independent episodes with seeds `seed_base + i`. Runs execute
/// in parallel; aggregation is ordered by seed index, so the outcome does
/// not depend on scheduling.
pub fn evaluate<'a, F>(
    make: F,
    sim: &SimParams,
    pattern: &PatternSpec,
    runs: u32,
    seed_base: u64,
) -> Result<EvalOutcome, HarnessError>
where
    F: Fn() -> Box<dyn Controller + Send + 'a> + Sync,
{
    if runs == 0 {
        return Err(HarnessError::NoRuns);
    }
    sim.validate()?;
    let rows: Result<Vec<EvalRunRow>, HarnessError> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let seed = seed_base + i as u64;
            let mut controller = make();
            let result = run_episode(controller.as_mut(), sim, pattern, seed)?;
            Ok(EvalRunRow { seed, result })
        })
        .collect();
    let rows = rows?;
    let queues: Vec<f64> = rows.iter().map(|r| r.result.avg_queue_length).collect();
    let waits: Vec<f64> = rows.iter().map(|r| r.result.avg_wait_time).collect();
    let stats = EvalStats::from_metric_pairs(&queues, &waits).ok_or(HarnessError::NoRuns)?;
    Ok(EvalOutcome { rows, stats })
}

/// One row of the training learning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningCurveRow {
    pub episode: u32,
    pub avg_queue: f64,
    pub avg_wait: f64,
    pub mean_loss: f64,
    pub epsilon: f64,
}

/// A finished training run.
pub struct TrainOutcome {
    pub params: NetworkParams,
    pub curve: Vec<LearningCurveRow>,
}

/// Train a Q-network on one pattern for the given number of episodes. Each
/// episode runs on a fresh world seeded from the master seed by a counter
/// split; the target network refreshes at every episode end.
pub fn train(
    sim: &SimParams,
    agent: &AgentConfig,
    pattern: &PatternSpec,
    episodes: u32,
    master_seed: u64,
) -> Result<TrainOutcome, HarnessError> {
    let mut trainer = DqnTrainer::new(sim.clone(), agent.clone(), master_seed)?;
    let mut curve = Vec::with_capacity(episodes as usize);
    for episode in 0..episodes {
        let stats = trainer.run_training_episode(pattern, episode_seed(master_seed, episode))?;
        let result = EpisodeResult::from_metrics(&stats.metrics);
        curve.push(LearningCurveRow {
            episode: episode + 1,
            avg_queue: result.avg_queue_length,
            avg_wait: result.avg_wait_time,
            mean_loss: stats.mean_loss,
            epsilon: stats.epsilon_end,
        });
    }
    Ok(TrainOutcome {
        params: trainer.into_online(),
        curve,
    })
}

/// One cell of the generalization matrix: a model trained on `train`
/// evaluated on `test`, averaged over the runs.
#[derive(Debug, Clone, Copy)]
pub struct GeneralizationCell {
    pub train: PatternId,
    pub test: PatternId,
    pub mean_queue: f64,
    pub mean_wait: f64,
}

/// Evaluate every trained model on every test pattern; rows follow the
/// order of `models`, columns the order of `tests`.
pub fn generalization(
    models: &[(PatternId, NetworkParams)],
    tests: &[PatternId],
    sim: &SimParams,
    baseline: &BaselineConfig,
    runs: u32,
    seed_base: u64,
) -> Result<Vec<GeneralizationCell>, HarnessError> {
    let mut cells = Vec::with_capacity(models.len() * tests.len());
    for (train_id, params) in models {
        for test_id in tests {
            let pattern = PatternSpec::build(*test_id);
            let outcome = evaluate(
                || {
                    make_controller(ControllerKind::Rl, sim, baseline, &pattern, Some(params))
                        .expect("rl controller with model")
                },
                sim,
                &pattern,
                runs,
                seed_base,
            )?;
            cells.push(GeneralizationCell {
                train: *train_id,
                test: *test_id,
                mean_queue: outcome.stats.queue.mean,
                mean_wait: outcome.stats.wait.mean,
            });
        }
    }
    Ok(cells)
}

/// Median improvement of the RL policy over one baseline, in percent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Improvement {
    pub queue_median_pct: f64,
    pub wait_median_pct: f64,
}

fn median_improvement(baseline: f64, rl: f64) -> f64 {
    if baseline <= 0.0 {
        0.0
    } else {
        100.0 * (baseline - rl) / baseline
    }
}

/// All four controllers evaluated on one pattern with identical seeds.
pub struct CompareOutcome {
    pub pattern: PatternId,
    pub runs: u32,
    pub entries: Vec<(ControllerKind, EvalOutcome)>,
    pub improvements: Vec<(ControllerKind, Improvement)>,
}

/// Benchmark the trained policy against the three baselines on one pattern,
/// all four controllers seeing identical seeds.
pub fn compare(
    sim: &SimParams,
    baseline: &BaselineConfig,
    model: &NetworkParams,
    pattern: &PatternSpec,
    runs: u32,
    seed_base: u64,
) -> Result<CompareOutcome, HarnessError> {
    let mut entries = Vec::new();
    for kind in ControllerKind::ALL {
        let outcome = evaluate(
            || {
                make_controller(kind, sim, baseline, pattern, Some(model))
                    .expect("all controller kinds constructible here")
            },
            sim,
            pattern,
            runs,
            seed_base,
        )?;
        entries.push((kind, outcome));
    }
    let rl = entries
        .iter()
        .find(|(k, _)| *k == ControllerKind::Rl)
        .map(|(_, o)| o.stats)
        .expect("rl entry present");
    let improvements = entries
        .iter()
        .filter(|(k, _)| *k != ControllerKind::Rl)
        .map(|(k, o)| {
            (
                *k,
                Improvement {
                    queue_median_pct: median_improvement(o.stats.queue.median, rl.queue.median),
                    wait_median_pct: median_improvement(o.stats.wait.median, rl.wait.median),
                },
            )
        })
        .collect();
    Ok(CompareOutcome {
        pattern: pattern.id,
        runs,
        entries,
        improvements,
    })
}

// ---------------------------------------------------------------------------
// Output rendering. Floats use the shortest decimal form that round-trips,
// so re-parsing a file reproduces the exact values.
// ---------------------------------------------------------------------------

pub fn learning_curve_csv(rows: &[LearningCurveRow]) -> String {
    let mut out = String::from("episode,avg_queue,avg_wait,mean_loss,epsilon\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.episode, r.avg_queue, r.avg_wait, r.mean_loss, r.epsilon
        ));
    }
    out
}

pub fn eval_runs_csv(entries: &[(ControllerKind, PatternId, &[EvalRunRow])]) -> String {
    let mut out = String::from("controller,pattern,seed,avg_queue,avg_wait\n");
    for (kind, pattern, rows) in entries {
        for r in *rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                kind, pattern, r.seed, r.result.avg_queue_length, r.result.avg_wait_time
            ));
        }
    }
    out
}

pub fn generalization_csv(cells: &[GeneralizationCell]) -> String {
    let mut out = String::from("train_pattern,test_pattern,mean_queue,mean_wait\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.train, c.test, c.mean_queue, c.mean_wait
        ));
    }
    out
}

#[derive(Serialize)]
struct ControllerSummary {
    queue: SummaryStats,
    wait: SummaryStats,
}

#[derive(Serialize)]
struct CompareSummaryDoc {
    pattern: String,
    runs: u32,
    /// Wait of vehicles still queued at the episode end is included in the
    /// wait metric.
    wait_includes_remaining_vehicles: bool,
    controllers: std::collections::BTreeMap<String, ControllerSummary>,
    rl_improvement_pct: std::collections::BTreeMap<String, Improvement>,
}

pub fn compare_summary_json(outcome: &CompareOutcome) -> String {
    let doc = CompareSummaryDoc {
        pattern: outcome.pattern.to_string(),
        runs: outcome.runs,
        wait_includes_remaining_vehicles: true,
        controllers: outcome
            .entries
            .iter()
            .map(|(k, o)| {
                (
                    k.to_string(),
                    ControllerSummary {
                        queue: o.stats.queue,
                        wait: o.stats.wait,
                    },
                )
            })
            .collect(),
        rl_improvement_pct: outcome
            .improvements
            .iter()
            .map(|(k, imp)| (k.to_string(), *imp))
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable summary")
}

pub fn compare_runs_csv(outcome: &CompareOutcome) -> String {
    let entries: Vec<(ControllerKind, PatternId, &[EvalRunRow])> = outcome
        .entries
        .iter()
        .map(|(k, o)| (*k, outcome.pattern, o.rows.as_slice()))
        .collect();
    eval_runs_csv(&entries)
}

/// Records per-step vehicle rows and per-decision rows for trace output.
#[derive(Default)]
pub struct TraceRecorder {
    trace: String,
    decisions: String,
}

impl TraceRecorder {
    pub fn new() -> Self {
        TraceRecorder {
            trace: String::from("step,lane_index,vehicle_id,position,speed,halting_flag\n"),
            decisions: String::from("step,chosen_phase,interval_kind,elapsed_green\n"),
        }
    }

    pub fn trace_csv(&self) -> &str {
        &self.trace
    }

    pub fn decisions_csv(&self) -> &str {
        &self.decisions
    }
}

impl EpisodeObserver for TraceRecorder {
    fn on_decision(&mut self, d: &DecisionRecord) {
        self.decisions.push_str(&format!(
            "{},{},{},{}\n",
            d.step,
            d.phase,
            if d.switched { "yellow" } else { "green" },
            d.elapsed_green
        ));
    }

    fn on_step(&mut self, world: &WorldState, events: &StepEvents, _signal: &SignalState) {
        for lane in &world.lanes {
            for v in &lane.vehicles {
                self.trace.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    events.step,
                    lane.index,
                    v.id,
                    v.position,
                    v.speed,
                    u8::from(v.speed <= world.params.halt_threshold)
                ));
            }
        }
    }
}
