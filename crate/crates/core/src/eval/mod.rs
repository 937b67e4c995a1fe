//! Trial sampling, execution against a backend and Monte Carlo accuracy
//! estimation.

pub mod records;
pub mod seeds;

use std::collections::BTreeMap;
use std::fmt;
use std::thread;
use std::time::Duration;

use itertools::Itertools;
use num_rational::Ratio;
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backends::{BackendError, CompletionRequest, ModelBackend, TrialContext};
use crate::bitstring::Bitstring;
use crate::encoding::{decode_completion, encode_trial, sample_encoding, DecodeFailure, EncodingError, EncodingScheme, Modality};
use crate::stats;
use crate::taskgen::{TaskError, TaskFunction, TaskRegistry};
use seeds::{stream_rng, trial_seed, Stream};

pub const DEFAULT_SHOTS: [usize; 8] = [1, 2, 4, 8, 16, 32, 64, 128];
pub const DEFAULT_TRIALS_PER_FUNCTION: usize = 8;
/// Enumeration budget for [`exact_accuracy`], in (context set, query) pairs.
pub const DEFAULT_EXACT_BUDGET: u64 = 50_000_000;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("shot count {n} outside 1..={max}")]
    ShotsOutOfRange { n: usize, max: usize },
    #[error("trials per function must be at least 1")]
    NoTrials,
    #[error("backend failed on trial {key}: {source}")]
    Backend { key: TrialKey, source: BackendError },
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("exact enumeration needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("inconsistent outcomes: {0}")]
    Inconsistent(String),
}

/// Identity of a trial within one sweep.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrialKey {
    pub function_id: String,
    pub shots: usize,
    pub index: usize,
}

impl fmt::Display for TrialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/n={}/t={}", self.function_id, self.shots, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub function_id: String,
    pub shots: usize,
    pub index: usize,
    pub seed: u64,
    pub demos: Vec<Bitstring>,
    pub query: Bitstring,
    pub scheme: EncodingScheme,
}

impl Trial {
    /// Regenerates trial `index` for `f` at `shots` demonstrations. The draw
    /// depends only on the master seed and the trial key, never on the model.
    pub fn generate(
        f: &TaskFunction,
        shots: usize,
        index: usize,
        master_seed: u64,
        modality: Modality,
    ) -> Result<Self, EvalError> {
        let seed = trial_seed(master_seed, f.id(), shots, index);
        let mut rng = stream_rng(seed, Stream::Context);
        let (demos, query) = sample_context(f.k(), shots, &mut rng)?;
        let scheme = sample_encoding(modality, &mut rng);
        Ok(Self { function_id: f.id().to_string(), shots, index, seed, demos, query, scheme })
    }

    pub fn key(&self) -> TrialKey {
        TrialKey { function_id: self.function_id.clone(), shots: self.shots, index: self.index }
    }
}

/// Draws `n` distinct demonstration inputs in random order and a query
/// uniformly from the remaining strings.
pub fn sample_context<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Result<(Vec<Bitstring>, Bitstring), EvalError> {
    let universe = 1usize << k;
    if n == 0 || n >= universe {
        return Err(EvalError::ShotsOutOfRange { n, max: universe - 1 });
    }
    // index::sample returns a uniformly random ordered selection, so the
    // first n form a shuffled subset and the last is uniform over the rest
    let picks = index::sample(rng, universe, n + 1).into_vec();
    let mut xs: Vec<Bitstring> = picks.into_iter().map(|v| Bitstring::new(v as u32, k).expect("in range")).collect();
    let query = xs.pop().expect("n + 1 picks");
    Ok((xs, query))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    #[serde(flatten)]
    pub trial: Trial,
    pub prompt_hash: String,
    pub raw_completion: String,
    pub target: Bitstring,
    pub prediction: Option<Bitstring>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decode_failure: Option<DecodeFailure>,
    pub correct: bool,
    pub mode_prediction: Bitstring,
    pub mode_correct: bool,
    pub understandable_mistake: bool,
}

impl TrialOutcome {
    pub fn key(&self) -> TrialKey {
        self.trial.key()
    }
}

pub fn prompt_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 3, base_delay: Duration::from_millis(500) }
    }
}

#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub modality: Modality,
    pub workers: usize,
    pub retry: RetryPolicy,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            modality: Modality::Linguistic,
            workers: thread::available_parallelism().map(|n| n.get()).unwrap_or(4),
            retry: RetryPolicy::default(),
        }
    }
}

/// Per-function and overall accuracy for one model at one shot count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyEstimate {
    pub model_id: String,
    pub shots: usize,
    pub trials_per_function: usize,
    pub per_function: BTreeMap<String, f64>,
    pub overall: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_se: Option<f64>,
}

impl AccuracyEstimate {
    /// Aggregates outcomes for a single shot count. Every function must have
    /// the same number of trials.
    pub fn from_outcomes(model_id: &str, shots: usize, outcomes: &[TrialOutcome]) -> Result<Self, EvalError> {
        let groups = group_by_function(outcomes, |o| o.correct);
        Self::from_groups(model_id, shots, &groups)
    }

    fn from_groups(model_id: &str, shots: usize, groups: &BTreeMap<String, Vec<bool>>) -> Result<Self, EvalError> {
        let sizes: Vec<usize> = groups.values().map(Vec::len).unique().collect();
        let m = match sizes[..] {
            [m] => m,
            [] => return Err(EvalError::Inconsistent(format!("no outcomes for n={shots}"))),
            _ => return Err(EvalError::Inconsistent(format!("uneven trial counts {sizes:?} at n={shots}"))),
        };
        let per_function: BTreeMap<String, f64> = groups
            .iter()
            .map(|(id, hits)| (id.clone(), hits.iter().filter(|&&c| c).count() as f64 / m as f64))
            .collect();
        let overall = per_function.values().sum::<f64>() / per_function.len() as f64;
        Ok(Self { model_id: model_id.to_string(), shots, trials_per_function: m, per_function, overall, bootstrap_se: None })
    }
}

/// Per-function outcome indicators, keyed by function id.
pub fn group_by_function(outcomes: &[TrialOutcome], pick: impl Fn(&TrialOutcome) -> bool) -> BTreeMap<String, Vec<bool>> {
    let mut groups: BTreeMap<String, Vec<(usize, bool)>> = BTreeMap::new();
    for o in outcomes {
        groups.entry(o.trial.function_id.clone()).or_default().push((o.trial.index, pick(o)));
    }
    groups
        .into_iter()
        .map(|(id, mut v)| {
            v.sort();
            (id, v.into_iter().map(|(_, c)| c).collect())
        })
        .collect()
}

/// Outcomes of a batch that may have stopped early on a backend failure.
#[derive(Debug)]
pub struct BatchResult {
    /// Completed outcomes sorted by trial key.
    pub outcomes: Vec<TrialOutcome>,
    pub failure: Option<EvalError>,
}

pub struct Evaluator<'a> {
    backend: &'a dyn ModelBackend,
    registry: &'a TaskRegistry,
    settings: EvalSettings,
}

impl<'a> Evaluator<'a> {
    pub fn new(backend: &'a dyn ModelBackend, registry: &'a TaskRegistry, settings: EvalSettings) -> Self {
        Self { backend, registry, settings }
    }

    pub fn settings(&self) -> &EvalSettings {
        &self.settings
    }

    /// All trials for one shot count, in registry order then trial index.
    pub fn trials(&self, shots: usize, m: usize, master_seed: u64) -> Result<Vec<Trial>, EvalError> {
        if m == 0 {
            return Err(EvalError::NoTrials);
        }
        let modality = self.settings.modality;
        self.registry
            .iter()
            .flat_map(|f| (0..m).map(move |t| Trial::generate(f, shots, t, master_seed, modality)))
            .collect()
    }

    pub fn run_trial(&self, trial: &Trial) -> Result<TrialOutcome, EvalError> {
        let f = self.registry.require(&trial.function_id)?;
        let prompt = encode_trial(f, &trial.demos, trial.query, &trial.scheme)?;
        let ctx = TrialContext { scheme: trial.scheme, k: f.k(), seed: trial.seed, function_id: Some(f.id().to_string()) };

        let mut attempt = 0;
        let response = loop {
            let request_id = format!("{}#{}#{}#{}", trial.function_id, trial.shots, trial.index, attempt);
            let request = CompletionRequest::greedy(request_id, prompt.text.as_str(), prompt.expected_length);
            let result = self.backend.complete(&request, Some(&ctx)).and_then(|resp| {
                if resp.request_id == request.request_id {
                    Ok(resp)
                } else {
                    Err(BackendError::RequestIdMismatch { expected: request.request_id.clone(), got: resp.request_id })
                }
            });
            match result {
                Ok(resp) => break resp,
                Err(e) if e.is_retryable() && attempt < self.settings.retry.max_retries => {
                    let delay = self.settings.retry.base_delay * 2u32.pow(attempt);
                    log::warn!("trial {} attempt {attempt} failed ({e}); retrying in {delay:?}", trial.key());
                    thread::sleep(delay);
                    attempt += 1;
                }
                Err(source) => return Err(EvalError::Backend { key: trial.key(), source }),
            }
        };

        let decoded = match &response.error {
            Some(message) => Err(DecodeFailure::Remote { message: message.clone() }),
            None => decode_completion(&response.completion, &trial.scheme, f.k()),
        };
        let target = f.apply(trial.query);
        let correct = decoded.as_ref().is_ok_and(|y| *y == target);
        let mode_prediction = stats::mode_prediction(f, &trial.demos, trial.seed);
        let understandable_mistake = match &decoded {
            Ok(y) if !correct => stats::understandable_mistake(self.registry, &trial.demos, trial.query, *y, f),
            _ => false,
        };
        let (prediction, decode_failure) = match decoded {
            Ok(y) => (Some(y), None),
            Err(e) => (None, Some(e)),
        };
        Ok(TrialOutcome {
            trial: trial.clone(),
            prompt_hash: prompt_hash(&prompt.text),
            raw_completion: response.completion,
            target,
            prediction,
            decode_failure,
            correct,
            mode_prediction,
            mode_correct: mode_prediction == target,
            understandable_mistake,
        })
    }

    /// Runs trials concurrently (bounded by the worker count and the
    /// backend's in-flight limit); results come back sorted by key.
    pub fn run_batch(&self, trials: &[Trial]) -> BatchResult {
        let threads = self.settings.workers.max(1).min(self.backend.max_in_flight().max(1));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        let results: Vec<Result<TrialOutcome, EvalError>> =
            pool.install(|| trials.par_iter().map(|t| self.run_trial(t)).collect());
        let mut outcomes = Vec::with_capacity(results.len());
        let mut failure = None;
        for r in results {
            match r {
                Ok(o) => outcomes.push(o),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
        outcomes.sort_by_key(TrialOutcome::key);
        BatchResult { outcomes, failure }
    }

    pub fn estimate_accuracy(
        &self,
        shots: usize,
        m: usize,
        master_seed: u64,
    ) -> Result<(AccuracyEstimate, Vec<TrialOutcome>), EvalError> {
        let trials = self.trials(shots, m, master_seed)?;
        let batch = self.run_batch(&trials);
        if let Some(e) = batch.failure {
            return Err(e);
        }
        let estimate = AccuracyEstimate::from_outcomes(self.backend.id(), shots, &batch.outcomes)?;
        Ok((estimate, batch.outcomes))
    }

    pub fn sweep(
        &self,
        shot_set: &[usize],
        m: usize,
        master_seed: u64,
    ) -> Result<Vec<(AccuracyEstimate, Vec<TrialOutcome>)>, EvalError> {
        shot_set.iter().map(|&n| self.estimate_accuracy(n, m, master_seed)).collect()
    }
}

pub fn run_trial(backend: &dyn ModelBackend, trial: &Trial, registry: &TaskRegistry) -> Result<TrialOutcome, EvalError> {
    Evaluator::new(backend, registry, EvalSettings::default()).run_trial(trial)
}

pub fn estimate_accuracy(
    backend: &dyn ModelBackend,
    registry: &TaskRegistry,
    shots: usize,
    m: usize,
    master_seed: u64,
) -> Result<AccuracyEstimate, EvalError> {
    Ok(Evaluator::new(backend, registry, EvalSettings::default()).estimate_accuracy(shots, m, master_seed)?.0)
}

pub fn sweep(
    backend: &dyn ModelBackend,
    registry: &TaskRegistry,
    shot_set: &[usize],
    m: usize,
    master_seed: u64,
) -> Result<Vec<AccuracyEstimate>, EvalError> {
    let ev = Evaluator::new(backend, registry, EvalSettings::default());
    Ok(ev.sweep(shot_set, m, master_seed)?.into_iter().map(|(e, _)| e).collect())
}

/// A prediction rule over (demonstration pairs, query) returning equally
/// likely candidates; a deterministic rule returns exactly one.
pub trait ContextPolicy {
    fn candidates(&self, demos: &[(Bitstring, Bitstring)], query: Bitstring) -> Vec<Bitstring>;
}

impl<F> ContextPolicy for F
where
    F: Fn(&[(Bitstring, Bitstring)], Bitstring) -> Vec<Bitstring>,
{
    fn candidates(&self, demos: &[(Bitstring, Bitstring)], query: Bitstring) -> Vec<Bitstring> {
        self(demos, query)
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Average accuracy over every size-`n` context set and every held-out
/// query, exactly. Only feasible for small string lengths.
pub fn exact_accuracy(policy: &dyn ContextPolicy, f: &TaskFunction, n: usize, budget: u64) -> Result<Ratio<u64>, EvalError> {
    let universe = 1usize << f.k();
    if n == 0 || n >= universe {
        return Err(EvalError::ShotsOutOfRange { n, max: universe - 1 });
    }
    let needed = binomial(universe as u128, n as u128).saturating_mul((universe - n) as u128);
    if needed > budget as u128 {
        return Err(EvalError::BudgetExceeded { needed, budget });
    }
    let all: Vec<Bitstring> = Bitstring::all(f.k()).collect();
    let mut total = Ratio::from_integer(0u64);
    for subset in all.iter().copied().combinations(n) {
        let pairs: Vec<(Bitstring, Bitstring)> = subset.iter().map(|&x| (x, f.apply(x))).collect();
        for &x in all.iter().filter(|x| !subset.contains(x)) {
            let cands = policy.candidates(&pairs, x);
            let hits = cands.iter().filter(|&&y| y == f.apply(x)).count() as u64;
            if hits > 0 {
                total += Ratio::new(hits, cands.len() as u64);
            }
        }
    }
    Ok(total / Ratio::from_integer(needed as u64))
}
