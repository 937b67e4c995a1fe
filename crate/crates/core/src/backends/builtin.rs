use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;

use super::{BackendError, BackendKind, CompletionRequest, CompletionResponse, ModelBackend, TrialContext, BUILTIN_MAX_IN_FLIGHT};
use crate::bitstring::Bitstring;
use crate::encoding::parse_prompt;
use crate::eval::seeds::{stream_rng, Stream};
use crate::stats::tie_break_index;
use crate::taskgen::{TaskFunction, TaskRegistry};

fn context<'a>(id: &str, trial: Option<&'a TrialContext>) -> Result<&'a TrialContext, BackendError> {
    trial.ok_or_else(|| BackendError::MissingContext(id.to_string()))
}

fn respond(request: &CompletionRequest, ctx: &TrialContext, y: Bitstring) -> CompletionResponse {
    let text: String = ctx.scheme.encode(&y).chars().take(request.max_symbols).collect();
    CompletionResponse::new(request.request_id.clone(), text)
}

/// Answers with the generating function named in the trial context. Without
/// one, answers with the lexicographically-first registry function
/// consistent with every demonstration.
pub struct OracleBackend {
    by_id: Vec<Arc<TaskFunction>>,
}

impl OracleBackend {
    pub fn new(registry: Arc<TaskRegistry>) -> Self {
        let mut by_id: Vec<_> = registry.iter().cloned().collect();
        by_id.sort_by(|a, b| a.id().cmp(b.id()));
        Self { by_id }
    }
}

impl ModelBackend for OracleBackend {
    fn id(&self) -> &str {
        "builtin:oracle"
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Builtin
    }

    fn max_in_flight(&self) -> usize {
        BUILTIN_MAX_IN_FLIGHT
    }

    fn complete(&self, request: &CompletionRequest, trial: Option<&TrialContext>) -> Result<CompletionResponse, BackendError> {
        let ctx = context(self.id(), trial)?;
        let parsed = parse_prompt(&request.prompt, &ctx.scheme, ctx.k)?;
        let consistent = |f: &&Arc<TaskFunction>| parsed.demos.iter().all(|(x, y)| f.apply(*x) == *y);
        let named = ctx.function_id.as_deref().and_then(|id| self.by_id.iter().find(|f| f.id() == id));
        let f = match named {
            Some(f) if consistent(&f) => f,
            Some(_) => return Err(BackendError::NoConsistentFunction),
            None => self.by_id.iter().find(consistent).ok_or(BackendError::NoConsistentFunction)?,
        };
        Ok(respond(request, ctx, f.apply(parsed.query)))
    }
}

/// Emits the most frequent demonstration output, breaking ties with the
/// trial's tie-break stream.
#[derive(Default)]
pub struct ModeBackend;

impl ModeBackend {
    pub fn new() -> Self {
        Self
    }
}

impl ModelBackend for ModeBackend {
    fn id(&self) -> &str {
        "builtin:mode"
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Builtin
    }

    fn max_in_flight(&self) -> usize {
        BUILTIN_MAX_IN_FLIGHT
    }

    fn complete(&self, request: &CompletionRequest, trial: Option<&TrialContext>) -> Result<CompletionResponse, BackendError> {
        let ctx = context(self.id(), trial)?;
        let parsed = parse_prompt(&request.prompt, &ctx.scheme, ctx.k)?;
        let mut counts: HashMap<Bitstring, usize> = HashMap::new();
        for (_, y) in &parsed.demos {
            *counts.entry(*y).or_default() += 1;
        }
        let mut tied: Vec<Bitstring> = match counts.values().max() {
            Some(&best) => counts.into_iter().filter(|&(_, c)| c == best).map(|(y, _)| y).collect(),
            // no demonstrations: every string ties at zero
            None => Bitstring::all(ctx.k).collect(),
        };
        tied.sort();
        let y = tied[tie_break_index(ctx.seed, tied.len())];
        Ok(respond(request, ctx, y))
    }
}

/// Uniform guess over all strings, drawn from the trial's backend stream.
#[derive(Default)]
pub struct RandomBackend;

impl RandomBackend {
    pub fn new() -> Self {
        Self
    }
}

impl ModelBackend for RandomBackend {
    fn id(&self) -> &str {
        "builtin:random"
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Builtin
    }

    fn max_in_flight(&self) -> usize {
        BUILTIN_MAX_IN_FLIGHT
    }

    fn complete(&self, request: &CompletionRequest, trial: Option<&TrialContext>) -> Result<CompletionResponse, BackendError> {
        let ctx = context(self.id(), trial)?;
        let value = stream_rng(ctx.seed, Stream::Backend).random_range(0..1u32 << ctx.k);
        Ok(respond(request, ctx, Bitstring::new(value, ctx.k).expect("in range")))
    }
}

pub struct ConstantBackend {
    id: String,
    value: Bitstring,
}

impl ConstantBackend {
    pub fn new(value: Bitstring) -> Self {
        Self { id: format!("builtin:constant={value}"), value }
    }
}

impl ModelBackend for ConstantBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Builtin
    }

    fn max_in_flight(&self) -> usize {
        BUILTIN_MAX_IN_FLIGHT
    }

    fn complete(&self, request: &CompletionRequest, trial: Option<&TrialContext>) -> Result<CompletionResponse, BackendError> {
        let ctx = context(self.id(), trial)?;
        Ok(respond(request, ctx, self.value))
    }
}
