//! Sweep orchestration, persistence and resume.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use bitinduct::backends::{BackendRegistry, ModelBackend};
use bitinduct::eval::records::{write_atomic, write_summaries, RecordLog, StatRecord, SummaryRecord, TrialRecord};
use bitinduct::eval::{group_by_function, AccuracyEstimate, EvalSettings, Evaluator, RetryPolicy, TrialOutcome};
use bitinduct::stats::{cluster_bootstrap_se, compare_to_baseline, Estimate};
use bitinduct::taskgen::TaskRegistry;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{ReportBundle, RunData, DEFAULT_BAR_SHOTS};

/// Trials executed between appends to the record log.
const CHUNK: usize = 256;

#[derive(Debug, Clone)]
pub struct RunPaths {
    pub dir: PathBuf,
}

impl RunPaths {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.dir.join("config.toml")
    }

    pub fn trials(&self) -> PathBuf {
        self.dir.join("trials.jsonl")
    }

    pub fn summary(&self) -> PathBuf {
        self.dir.join("summary.jsonl")
    }

    pub fn report(&self) -> PathBuf {
        self.dir.join("report")
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub model_id: String,
    pub summaries: Vec<SummaryRecord>,
    pub executed: usize,
    pub skipped: usize,
}

/// Runs (or resumes) the sweep described by `config` in `dir`, then writes
/// summaries and report files recomputed from the full record log.
pub fn execute(config: &RunConfig, dir: &Path) -> anyhow::Result<RunOutput> {
    execute_with(config, dir, &BackendRegistry::with_builtins())
}

pub fn execute_with(config: &RunConfig, dir: &Path, backends: &BackendRegistry) -> anyhow::Result<RunOutput> {
    config.validate()?;
    let paths = RunPaths::new(dir);
    if paths.config().exists() {
        let previous = RunConfig::load(&paths.config())?;
        if previous.identity() != config.identity() {
            return Err(CliError::config(
                "output_dir",
                format!("{} holds records from a different configuration", dir.display()),
            )
            .into());
        }
    }
    let mut stored = config.clone();
    stored.output_dir = None;
    stored.workers = None;
    write_atomic(&paths.config(), stored.to_toml().as_bytes())
        .with_context(|| format!("writing {}", paths.config().display()))?;

    let registry = Arc::new(config.registry()?);
    let backend = backends
        .resolve(&config.backend_spec(), &registry)
        .map_err(|e| CliError::Backend(format!("{}: {e}", config.backend)))?;

    let log = RecordLog::new(paths.trials());
    let existing = log.read_all().with_context(|| format!("reading {}", log.path().display()))?;
    if let Some(other) = existing.iter().find(|r| r.model_id != backend.id()) {
        return Err(CliError::config(
            "backend",
            format!("records in {} come from model {:?}, backend reports {:?}", dir.display(), other.model_id, backend.id()),
        )
        .into());
    }
    let done: HashSet<_> = existing.iter().map(|r| r.outcome.key()).collect();

    let settings = EvalSettings { modality: config.modality, workers: config.workers(), retry: RetryPolicy::default() };
    let (executed, skipped) = sweep(config, &registry, backend.as_ref(), &log, &done, settings)?;
    log::info!("{}: executed {executed} trials, {skipped} already recorded", backend.id());

    let records = log.read_all()?;
    let summaries = summarize(config, &registry, backend.id(), &records)?;
    write_summaries(&paths.summary(), &summaries)?;

    let run = RunData { config: config.clone(), model_id: backend.id().to_string(), registry: (*registry).clone(), records };
    let bundle = ReportBundle::from_runs(&[run])?;
    bundle.write(&paths.report(), DEFAULT_BAR_SHOTS)?;
    Ok(RunOutput { model_id: backend.id().to_string(), summaries, executed, skipped })
}

fn sweep(
    config: &RunConfig,
    registry: &TaskRegistry,
    backend: &dyn ModelBackend,
    log: &RecordLog,
    done: &HashSet<bitinduct::eval::TrialKey>,
    settings: EvalSettings,
) -> anyhow::Result<(usize, usize)> {
    let ev = Evaluator::new(backend, registry, settings);
    let (mut executed, mut skipped) = (0, 0);
    for &n in &config.shots {
        let trials = ev.trials(n, config.trials_per_function, config.master_seed)?;
        let pending: Vec<_> = trials.into_iter().filter(|t| !done.contains(&t.key())).collect();
        skipped += config.trials_per_function * registry.len() - pending.len();
        for chunk in pending.chunks(CHUNK) {
            let batch = ev.run_batch(chunk);
            let records: Vec<TrialRecord> = batch
                .outcomes
                .into_iter()
                .map(|outcome| TrialRecord { model_id: backend.id().to_string(), outcome })
                .collect();
            executed += records.len();
            log.append(&records).with_context(|| format!("appending to {}", log.path().display()))?;
            if let Some(e) = batch.failure {
                return Err(CliError::Backend(e.to_string()).into());
            }
        }
    }
    Ok((executed, skipped))
}

/// Outcomes for one shot count, one per (function, index), in key order.
/// Fails if any trial of the configured design is missing.
pub fn outcomes_for(
    config: &RunConfig,
    registry: &TaskRegistry,
    records: &[TrialRecord],
    shots: usize,
) -> Result<Vec<TrialOutcome>, CliError> {
    let mut by_key = BTreeMap::new();
    for r in records {
        let o = &r.outcome;
        if o.trial.shots == shots && o.trial.index < config.trials_per_function && registry.get(&o.trial.function_id).is_some()
        {
            by_key.entry(o.key()).or_insert_with(|| o.clone());
        }
    }
    let expected = registry.len() * config.trials_per_function;
    if by_key.len() != expected {
        return Err(CliError::Verification(format!(
            "n={shots}: {} of {expected} trials recorded; run `eval resume` to complete",
            by_key.len()
        )));
    }
    Ok(by_key.into_values().collect())
}

fn as_groups(groups: BTreeMap<String, Vec<bool>>) -> Vec<Vec<f64>> {
    groups.into_values().map(|v| v.into_iter().map(|c| c as u8 as f64).collect()).collect()
}

/// Per-shot-count summary records recomputed from trial records alone.
pub fn summarize(
    config: &RunConfig,
    registry: &TaskRegistry,
    model_id: &str,
    records: &[TrialRecord],
) -> anyhow::Result<Vec<SummaryRecord>> {
    let replicates = config.bootstrap.replicates;
    let seed = config.bootstrap.seed;
    let mut out = Vec::with_capacity(config.shots.len());
    for &n in &config.shots {
        let outcomes = outcomes_for(config, registry, records, n)?;
        let est = AccuracyEstimate::from_outcomes(model_id, n, &outcomes)?;
        let mut stats = Vec::new();

        let boot = cluster_bootstrap_se(&as_groups(group_by_function(&outcomes, |o| o.correct)), replicates, seed)?;
        let mut s = StatRecord::new("cluster_bootstrap", est.overall);
        s.se = Some(boot.standard_error);
        s.replicates = Some(replicates);
        if boot.degenerate {
            s.flags.push("single_cluster".into());
        }
        stats.push(s);

        let mode_groups = group_by_function(&outcomes, |o| o.mode_correct);
        let mode_overall =
            mode_groups.values().map(|v| v.iter().filter(|&&c| c).count() as f64 / v.len() as f64).sum::<f64>()
                / mode_groups.len() as f64;
        let mode_boot = cluster_bootstrap_se(&as_groups(mode_groups), replicates, seed)?;
        let mut s = StatRecord::new("mode_baseline", mode_overall);
        s.se = Some(mode_boot.standard_error);
        s.replicates = Some(replicates);
        stats.push(s);

        let cmp = compare_to_baseline(
            Estimate { value: est.overall, se: boot.standard_error },
            Estimate { value: mode_overall, se: mode_boot.standard_error },
        )?;
        let mut s = StatRecord::new("z_test_vs_mode_baseline", est.overall - mode_overall);
        s.statistic = Some(cmp.z);
        s.p_value = Some(cmp.one_sided_p);
        s.flags.push("assumes_independence".into());
        if cmp.degenerate {
            s.flags.push("zero_standard_errors".into());
        }
        stats.push(s);

        let trials = outcomes.len() as f64;
        let wrong = outcomes.iter().filter(|o| !o.correct).count();
        let understandable = outcomes.iter().filter(|o| o.understandable_mistake).count();
        stats.push(StatRecord::new("understandable_mistake_rate", understandable as f64 / trials));
        let share = if wrong == 0 { 0.0 } else { understandable as f64 / wrong as f64 };
        stats.push(StatRecord::new("understandable_share_of_errors", share));
        let failures = outcomes.iter().filter(|o| o.decode_failure.is_some()).count();
        stats.push(StatRecord::new("decode_failure_rate", failures as f64 / trials));

        out.push(SummaryRecord {
            model_id: model_id.to_string(),
            shots: n,
            trials_per_function: config.trials_per_function,
            functions: registry.len(),
            overall: est.overall,
            per_function: est.per_function,
            stats,
        });
    }
    Ok(out)
}

/// Loads a finished run directory.
pub fn load_run(dir: &Path) -> anyhow::Result<RunData> {
    let paths = RunPaths::new(dir);
    let config = RunConfig::load(&paths.config())?;
    let registry = config.registry()?;
    let records = RecordLog::new(paths.trials()).read_all()?;
    let ids: HashSet<&str> = records.iter().map(|r| r.model_id.as_str()).collect();
    let model_id = match ids.len() {
        1 => ids.into_iter().next().unwrap().to_string(),
        0 => return Err(CliError::Verification(format!("{}: no trial records", dir.display())).into()),
        _ => return Err(CliError::Verification(format!("{}: records from several models", dir.display())).into()),
    };
    Ok(RunData { config, model_id, registry, records })
}
