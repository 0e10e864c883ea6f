use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use qlight::harness::{
    self, compare, evaluate, generalization, make_controller, run_episode_observed, train,
    ControllerKind, EvalOutcome, EvalRunRow, EvalStats, PatternId, PatternSpec, TraceRecorder,
};
use qlight::qnet::{load_params, save_params, ModelMeta, NetworkParams};

use crate::config::{FileConfig, RunSection};
use crate::AppError;

#[derive(Args)]
pub struct TrainArgs {
    /// JSON configuration file; flags override its run section
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Traffic pattern to train on (P1..P4)
    #[arg(long)]
    pub pattern: Option<String>,
    /// Number of training episodes
    #[arg(long)]
    pub episodes: Option<u32>,
    /// Master seed for the whole run
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Traffic pattern to evaluate on (P1..P4)
    #[arg(long)]
    pub pattern: Option<String>,
    /// Number of evaluation runs
    #[arg(long)]
    pub runs: Option<u32>,
    /// Base seed; run i uses seed + i
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trained model file (implies the rl controller)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Controller to evaluate: fixed, gap, timeloss, or rl
    #[arg(long)]
    pub controller: Option<String>,
    /// Write per-step vehicle traces and per-decision logs for every run
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pattern: Option<String>,
    #[arg(long)]
    pub runs: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Model trained on the compared pattern
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Args)]
pub struct GeneralizeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated model files or run directories containing model.json
    #[arg(long)]
    pub models: Option<String>,
    #[arg(long)]
    pub runs: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_pattern(run: &RunSection) -> Result<PatternId, AppError> {
    run.pattern
        .as_deref()
        .ok_or_else(|| AppError::Config("missing --pattern (P1..P4)".into()))?
        .parse()
        .map_err(AppError::Config)
}

fn positive(value: u32, field: &str) -> Result<u32, AppError> {
    if value == 0 {
        Err(AppError::Config(format!("run.{field} must be at least 1")))
    } else {
        Ok(value)
    }
}

fn prepare_out_dir(path: &Path) -> Result<(), AppError> {
    fs::create_dir_all(path)
        .map_err(|e| AppError::Runtime(format!("cannot create {}: {e}", path.display())))
}

fn write_file(path: &Path, body: &str) -> Result<(), AppError> {
    fs::write(path, body)
        .map_err(|e| AppError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_train(args: TrainArgs) -> Result<(), AppError> {
    let mut cfg = FileConfig::load_or_default(args.config.as_ref())?;
    if args.pattern.is_some() {
        cfg.run.pattern = args.pattern;
    }
    if args.episodes.is_some() {
        cfg.run.episodes = args.episodes;
    }
    if args.seed.is_some() {
        cfg.run.seed = args.seed;
    }
    if args.out.is_some() {
        cfg.run.out = args.out;
    }
    cfg.validate_params()?;
    let pattern_id = parse_pattern(&cfg.run)?;
    let episodes = positive(cfg.run.episodes.unwrap_or(200), "episodes")?;
    let seed = cfg.run.seed.unwrap_or(0);
    let out_dir = cfg.run.out.clone().unwrap_or_else(|| {
        PathBuf::from(format!("runs/train-{}", pattern_id.label().to_lowercase()))
    });
    prepare_out_dir(&out_dir)?;

    cfg.run = RunSection {
        pattern: Some(pattern_id.label().into()),
        episodes: Some(episodes),
        seed: Some(seed),
        out: Some(out_dir.clone()),
        ..RunSection::default()
    };
    cfg.write_effective(&out_dir)?;

    let pattern = PatternSpec::build(pattern_id);
    let outcome = train(&cfg.sim, &cfg.agent, &pattern, episodes, seed)?;

    let model_path = out_dir.join("model.json");
    save_params(
        &model_path,
        &outcome.params,
        &ModelMeta {
            seed,
            trained_on_pattern: Some(pattern_id.label().into()),
        },
    )?;
    write_file(
        &out_dir.join("learning_curve.csv"),
        &harness::learning_curve_csv(&outcome.curve),
    )?;

    let last = outcome.curve.last().expect("at least one episode");
    println!(
        "trained {pattern_id} for {episodes} episodes (seed {seed}): final avg_queue {:.4}, avg_wait {:.3}",
        last.avg_queue, last.avg_wait
    );
    println!("wrote {}", model_path.display());
    println!("wrote {}", out_dir.join("learning_curve.csv").display());
    Ok(())
}

/// Resolve the evaluated controller and, for the rl kind, its model file.
fn resolve_controller(run: &RunSection) -> Result<(ControllerKind, Option<PathBuf>), AppError> {
    let name = match (&run.controller, &run.model) {
        (Some(name), _) => name.clone(),
        (None, Some(_)) => "rl".to_string(),
        (None, None) => {
            return Err(AppError::Config(
                "missing --controller (fixed, gap, timeloss, rl) or --model".into(),
            ))
        }
    };
    let kind: ControllerKind = name.parse().map_err(AppError::Config)?;
    if kind == ControllerKind::Rl && run.model.is_none() {
        return Err(AppError::Config(
            "the rl controller needs --model pointing at a trained model".into(),
        ));
    }
    Ok((kind, run.model.clone()))
}

fn load_model(path: &Path) -> Result<(NetworkParams, ModelMeta), AppError> {
    Ok(load_params(path)?)
}

#[derive(Serialize)]
struct EvalSummaryDoc {
    controller: String,
    pattern: String,
    runs: u32,
    seed_base: u64,
    /// Wait accumulated by vehicles still queued at the episode end counts.
    wait_includes_remaining_vehicles: bool,
    stats: EvalStats,
}

pub fn cmd_eval(args: EvalArgs) -> Result<(), AppError> {
    let mut cfg = FileConfig::load_or_default(args.config.as_ref())?;
    if args.pattern.is_some() {
        cfg.run.pattern = args.pattern;
    }
    if args.runs.is_some() {
        cfg.run.runs = args.runs;
    }
    if args.seed.is_some() {
        cfg.run.seed = args.seed;
    }
    if args.out.is_some() {
        cfg.run.out = args.out;
    }
    if args.model.is_some() {
        cfg.run.model = args.model;
    }
    if args.controller.is_some() {
        cfg.run.controller = args.controller;
    }
    if args.trace {
        cfg.run.trace = Some(true);
    }
    cfg.validate_params()?;
    let pattern_id = parse_pattern(&cfg.run)?;
    let runs = positive(cfg.run.runs.unwrap_or(100), "runs")?;
    let seed_base = cfg.run.seed.unwrap_or(0);
    let trace = cfg.run.trace.unwrap_or(false);
    let (kind, model_path) = resolve_controller(&cfg.run)?;
    let out_dir = cfg.run.out.clone().unwrap_or_else(|| {
        PathBuf::from(format!(
            "runs/eval-{}-{kind}",
            pattern_id.label().to_lowercase()
        ))
    });
    prepare_out_dir(&out_dir)?;

    let model = match &model_path {
        Some(path) if kind == ControllerKind::Rl => Some(load_model(path)?.0),
        _ => None,
    };

    cfg.run = RunSection {
        pattern: Some(pattern_id.label().into()),
        runs: Some(runs),
        seed: Some(seed_base),
        out: Some(out_dir.clone()),
        model: model_path,
        controller: Some(kind.to_string()),
        trace: Some(trace),
        ..RunSection::default()
    };
    cfg.write_effective(&out_dir)?;

    let pattern = PatternSpec::build(pattern_id);
    let outcome = if trace {
        eval_with_traces(
            kind,
            &cfg,
            &pattern,
            model.as_ref(),
            runs,
            seed_base,
            &out_dir,
        )?
    } else {
        evaluate(
            || {
                make_controller(kind, &cfg.sim, &cfg.baseline, &pattern, model.as_ref())
                    .expect("controller kind resolved above")
            },
            &cfg.sim,
            &pattern,
            runs,
            seed_base,
        )?
    };

    let rows_ref: Vec<(ControllerKind, PatternId, &[EvalRunRow])> =
        vec![(kind, pattern_id, outcome.rows.as_slice())];
    write_file(
        &out_dir.join("eval_runs.csv"),
        &harness::eval_runs_csv(&rows_ref),
    )?;
    let summary = EvalSummaryDoc {
        controller: kind.to_string(),
        pattern: pattern_id.to_string(),
        runs,
        seed_base,
        wait_includes_remaining_vehicles: true,
        stats: outcome.stats,
    };
    write_file(
        &out_dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("serializable summary"),
    )?;

    println!(
        "evaluated {kind} on {pattern_id} over {runs} runs: median avg_queue {:.4}, median avg_wait {:.3}",
        outcome.stats.queue.median, outcome.stats.wait.median
    );
    println!("wrote {}", out_dir.join("eval_runs.csv").display());
    println!("wrote {}", out_dir.join("summary.json").display());
    Ok(())
}

/// Sequential evaluation that also writes one step trace and one decision
/// log per run.
fn eval_with_traces(
    kind: ControllerKind,
    cfg: &FileConfig,
    pattern: &PatternSpec,
    model: Option<&NetworkParams>,
    runs: u32,
    seed_base: u64,
    out_dir: &Path,
) -> Result<EvalOutcome, AppError> {
    let mut rows = Vec::with_capacity(runs as usize);
    for i in 0..runs {
        let seed = seed_base + i as u64;
        let mut controller = make_controller(kind, &cfg.sim, &cfg.baseline, pattern, model)?;
        let mut recorder = TraceRecorder::new();
        let result =
            run_episode_observed(controller.as_mut(), &cfg.sim, pattern, seed, &mut recorder)?;
        write_file(
            &out_dir.join(format!("trace_seed{seed}.csv")),
            recorder.trace_csv(),
        )?;
        write_file(
            &out_dir.join(format!("decisions_seed{seed}.csv")),
            recorder.decisions_csv(),
        )?;
        rows.push(EvalRunRow { seed, result });
    }
    let queues: Vec<f64> = rows.iter().map(|r| r.result.avg_queue_length).collect();
    let waits: Vec<f64> = rows.iter().map(|r| r.result.avg_wait_time).collect();
    let stats = EvalStats::from_metric_pairs(&queues, &waits)
        .ok_or_else(|| AppError::Config("run.runs must be at least 1".into()))?;
    Ok(EvalOutcome { rows, stats })
}

pub fn cmd_compare(args: CompareArgs) -> Result<(), AppError> {
    let mut cfg = FileConfig::load_or_default(args.config.as_ref())?;
    if args.pattern.is_some() {
        cfg.run.pattern = args.pattern;
    }
    if args.runs.is_some() {
        cfg.run.runs = args.runs;
    }
    if args.seed.is_some() {
        cfg.run.seed = args.seed;
    }
    if args.out.is_some() {
        cfg.run.out = args.out;
    }
    if args.model.is_some() {
        cfg.run.model = args.model;
    }
    cfg.validate_params()?;
    let pattern_id = parse_pattern(&cfg.run)?;
    let runs = positive(cfg.run.runs.unwrap_or(100), "runs")?;
    let seed_base = cfg.run.seed.unwrap_or(0);
    let model_path = cfg
        .run
        .model
        .clone()
        .ok_or_else(|| AppError::Config("missing --model for the rl controller".into()))?;
    let out_dir = cfg.run.out.clone().unwrap_or_else(|| {
        PathBuf::from(format!(
            "runs/compare-{}",
            pattern_id.label().to_lowercase()
        ))
    });
    prepare_out_dir(&out_dir)?;
    let (model, _) = load_model(&model_path)?;

    cfg.run = RunSection {
        pattern: Some(pattern_id.label().into()),
        runs: Some(runs),
        seed: Some(seed_base),
        out: Some(out_dir.clone()),
        model: Some(model_path),
        ..RunSection::default()
    };
    cfg.write_effective(&out_dir)?;

    let pattern = PatternSpec::build(pattern_id);
    let outcome = compare(&cfg.sim, &cfg.baseline, &model, &pattern, runs, seed_base)?;
    write_file(
        &out_dir.join("compare_runs.csv"),
        &harness::compare_runs_csv(&outcome),
    )?;
    write_file(
        &out_dir.join("compare_summary.json"),
        &harness::compare_summary_json(&outcome),
    )?;

    for (kind, entry) in &outcome.entries {
        println!(
            "{:9} median avg_queue {:.4}  median avg_wait {:.3}",
            kind.to_string(),
            entry.stats.queue.median,
            entry.stats.wait.median
        );
    }
    for (kind, imp) in &outcome.improvements {
        println!(
            "rl improves on {kind}: queue {:.1}%, wait {:.1}%",
            imp.queue_median_pct, imp.wait_median_pct
        );
    }
    println!("wrote {}", out_dir.join("compare_runs.csv").display());
    println!("wrote {}", out_dir.join("compare_summary.json").display());
    Ok(())
}

pub fn cmd_generalize(args: GeneralizeArgs) -> Result<(), AppError> {
    let mut cfg = FileConfig::load_or_default(args.config.as_ref())?;
    if args.models.is_some() {
        cfg.run.models = args.models;
    }
    if args.runs.is_some() {
        cfg.run.runs = args.runs;
    }
    if args.seed.is_some() {
        cfg.run.seed = args.seed;
    }
    if args.out.is_some() {
        cfg.run.out = args.out;
    }
    cfg.validate_params()?;
    let runs = positive(cfg.run.runs.unwrap_or(100), "runs")?;
    let seed_base = cfg.run.seed.unwrap_or(0);
    let models_arg = cfg
        .run
        .models
        .clone()
        .ok_or_else(|| AppError::Config("missing --models (comma-separated paths)".into()))?;
    let out_dir = cfg
        .run
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs/generalize"));
    prepare_out_dir(&out_dir)?;

    // Accept run directories (containing model.json) or model files, and
    // report every missing one in a single message.
    let mut paths = Vec::new();
    let mut missing = Vec::new();
    for token in models_arg
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
    {
        let given = PathBuf::from(token);
        let path = if given.is_dir() {
            given.join("model.json")
        } else {
            given
        };
        if path.is_file() {
            paths.push(path);
        } else {
            missing.push(path);
        }
    }
    if !missing.is_empty() {
        return Err(AppError::Missing(format!(
            "missing model file(s): {}",
            missing
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    if paths.is_empty() {
        return Err(AppError::Config("--models lists no paths".into()));
    }

    let mut models = Vec::with_capacity(paths.len());
    for path in &paths {
        let (params, meta) = load_model(path)?;
        let pattern: PatternId = meta
            .trained_on_pattern
            .as_deref()
            .ok_or_else(|| {
                AppError::Config(format!(
                    "{} does not record its training pattern",
                    path.display()
                ))
            })?
            .parse()
            .map_err(AppError::Config)?;
        models.push((pattern, params));
    }

    cfg.run = RunSection {
        models: Some(models_arg),
        runs: Some(runs),
        seed: Some(seed_base),
        out: Some(out_dir.clone()),
        ..RunSection::default()
    };
    cfg.write_effective(&out_dir)?;

    let cells = generalization(
        &models,
        &PatternId::ALL,
        &cfg.sim,
        &cfg.baseline,
        runs,
        seed_base,
    )?;
    write_file(
        &out_dir.join("generalization.csv"),
        &harness::generalization_csv(&cells),
    )?;

    for cell in &cells {
        println!(
            "train {} test {}  mean_queue {:.4}  mean_wait {:.3}",
            cell.train, cell.test, cell.mean_queue, cell.mean_wait
        );
    }
    println!("wrote {}", out_dir.join("generalization.csv").display());
    Ok(())
}
