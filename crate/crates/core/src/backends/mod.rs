//! Model backends: the completion contract, the builtin reference
//! backends and a client for external model servers.
//!
//! Backends are trait objects registered by name in a [`BackendRegistry`]
//! and selected at runtime from a spec string such as `builtin:oracle`,
//! `tcp://127.0.0.1:7070` or `stdio:python serve.py`.

mod builtin;
mod external;
pub mod wire;

pub use builtin::{ConstantBackend, ModeBackend, OracleBackend, RandomBackend};
pub use external::{Endpoint, ExternalBackend, ExternalOptions};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{EncodingError, EncodingScheme};
use crate::taskgen::TaskRegistry;

/// In-flight request limit for builtin backends.
pub const BUILTIN_MAX_IN_FLIGHT: usize = 1024;
/// Default in-flight request limit for external backends.
pub const EXTERNAL_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoding {
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompletionRequest {
    pub request_id: String,
    pub prompt: String,
    pub max_symbols: usize,
    pub decoding: Decoding,
}

impl CompletionRequest {
    pub fn greedy(request_id: impl Into<String>, prompt: impl Into<String>, max_symbols: usize) -> Self {
        Self { request_id: request_id.into(), prompt: prompt.into(), max_symbols, decoding: Decoding::Greedy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub request_id: String,
    pub completion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend_meta: Option<serde_json::Value>,
    /// Set by adapters that could not serve the request (for example a
    /// lossy tokenizer round trip). Scored as a decode failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CompletionResponse {
    pub fn new(request_id: impl Into<String>, completion: impl Into<String>) -> Self {
        Self { request_id: request_id.into(), completion: completion.into(), backend_meta: None, error: None }
    }
}

/// Out-of-band trial information handed to builtin backends. External
/// backends only ever see the prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialContext {
    pub scheme: EncodingScheme,
    pub k: usize,
    pub seed: u64,
    /// The generating function, when the caller knows it.
    pub function_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Builtin,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("response id {got:?} does not match request {expected:?}")]
    RequestIdMismatch { expected: String, got: String },
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("builtin backend {0} needs the trial context")]
    MissingContext(String),
    #[error("unparseable prompt: {0}")]
    Unparseable(#[from] EncodingError),
    #[error("no registry function is consistent with the demonstrations")]
    NoConsistentFunction,
    #[error("unknown backend {0:?}")]
    Unknown(String),
    #[error("bad backend spec {spec:?}: {reason}")]
    BadSpec { spec: String, reason: String },
}

impl BackendError {
    /// Transport-level failures worth retrying; everything else is a bug
    /// or a configuration problem.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            BackendError::Timeout(_)
                | BackendError::Transport(_)
                | BackendError::Malformed(_)
                | BackendError::RequestIdMismatch { .. }
        )
    }
}

pub trait ModelBackend: Send + Sync {
    fn id(&self) -> &str;

    fn kind(&self) -> BackendKind;

    fn max_in_flight(&self) -> usize;

    /// Greedy completion of exactly `request.max_symbols` symbols.
    fn complete(
        &self,
        request: &CompletionRequest,
        trial: Option<&TrialContext>,
    ) -> Result<CompletionResponse, BackendError>;
}

impl fmt::Debug for dyn ModelBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelBackend").field("id", &self.id()).field("kind", &self.kind()).finish()
    }
}

/// Parsed `--backend` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Builtin { name: String, arg: Option<String> },
    External(Endpoint),
}

impl FromStr for BackendSpec {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| BackendError::BadSpec { spec: s.to_string(), reason: reason.to_string() };
        if let Some(rest) = s.strip_prefix("builtin:") {
            let (name, arg) = match rest.split_once('=') {
                Some((n, a)) => (n, Some(a.to_string())),
                None => (rest, None),
            };
            if name.is_empty() {
                return Err(bad("missing builtin name"));
            }
            return Ok(BackendSpec::Builtin { name: name.to_string(), arg });
        }
        Ok(BackendSpec::External(s.parse()?))
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Builtin { name, arg: None } => write!(f, "builtin:{name}"),
            BackendSpec::Builtin { name, arg: Some(a) } => write!(f, "builtin:{name}={a}"),
            BackendSpec::External(e) => write!(f, "{e}"),
        }
    }
}

/// Inputs available to a builtin backend constructor.
pub struct BuildArgs<'a> {
    pub registry: &'a Arc<TaskRegistry>,
    pub arg: Option<&'a str>,
}

pub type BackendFactory =
    Box<dyn Fn(&BuildArgs<'_>) -> Result<Arc<dyn ModelBackend>, BackendError> + Send + Sync>;

/// Named constructors for builtin backends.
pub struct BackendRegistry {
    factories: BTreeMap<String, BackendFactory>,
    external: ExternalOptions,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl BackendRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new(), external: ExternalOptions::default() }
    }

    /// `oracle`, `mode`, `random` and `constant[=BITS]`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("oracle", |a| Ok(Arc::new(OracleBackend::new(Arc::clone(a.registry)))));
        r.register("mode", |_| Ok(Arc::new(ModeBackend::new())));
        r.register("random", |_| Ok(Arc::new(RandomBackend::new())));
        r.register("constant", |a| {
            let k = a.registry.k();
            let value = match a.arg {
                None => crate::Bitstring::zeros(k),
                Some(bits) => bits.parse().map_err(|e| BackendError::BadSpec {
                    spec: format!("builtin:constant={bits}"),
                    reason: format!("{e}"),
                })?,
            };
            if value.len() != k {
                return Err(BackendError::BadSpec {
                    spec: format!("builtin:constant={value}"),
                    reason: format!("constant must have {k} bits"),
                });
            }
            Ok(Arc::new(ConstantBackend::new(value)))
        });
        r
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&BuildArgs<'_>) -> Result<Arc<dyn ModelBackend>, BackendError> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn set_external_options(&mut self, options: ExternalOptions) {
        self.external = options;
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn resolve(
        &self,
        spec: &BackendSpec,
        registry: &Arc<TaskRegistry>,
    ) -> Result<Arc<dyn ModelBackend>, BackendError> {
        match spec {
            BackendSpec::Builtin { name, arg } => {
                let factory = self.factories.get(name).ok_or_else(|| BackendError::Unknown(spec.to_string()))?;
                factory(&BuildArgs { registry, arg: arg.as_deref() })
            }
            BackendSpec::External(endpoint) => {
                Ok(Arc::new(ExternalBackend::connect(endpoint.clone(), self.external.clone())?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskgen::build_registry;

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "builtin:oracle".parse::<BackendSpec>().unwrap(),
            BackendSpec::Builtin { name: "oracle".into(), arg: None }
        );
        assert_eq!(
            "builtin:constant=00000000".parse::<BackendSpec>().unwrap(),
            BackendSpec::Builtin { name: "constant".into(), arg: Some("00000000".into()) }
        );
        assert_eq!(
            "tcp://127.0.0.1:9000".parse::<BackendSpec>().unwrap(),
            BackendSpec::External(Endpoint::Tcp("127.0.0.1:9000".into()))
        );
        assert!("builtin:".parse::<BackendSpec>().is_err());
        assert!("ftp://x".parse::<BackendSpec>().is_err());
        for s in ["builtin:mode", "builtin:constant=0101", "tcp://h:1", "stdio:python3 serve.py"] {
            assert_eq!(s.parse::<BackendSpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn registry_resolves_builtins() {
        let reg = Arc::new(build_registry(0, 8).unwrap());
        let backends = BackendRegistry::with_builtins();
        assert_eq!(backends.names().collect::<Vec<_>>(), ["constant", "mode", "oracle", "random"]);
        for name in ["oracle", "mode", "random", "constant"] {
            let spec = BackendSpec::Builtin { name: name.into(), arg: None };
            let b = backends.resolve(&spec, &reg).unwrap();
            assert!(b.id().starts_with(&format!("builtin:{name}")));
            assert_eq!(b.kind(), BackendKind::Builtin);
            assert_eq!(b.max_in_flight(), BUILTIN_MAX_IN_FLIGHT);
        }
        let bad = BackendSpec::Builtin { name: "gpt".into(), arg: None };
        assert!(matches!(backends.resolve(&bad, &reg), Err(BackendError::Unknown(_))));
        let short = BackendSpec::Builtin { name: "constant".into(), arg: Some("01".into()) };
        assert!(matches!(backends.resolve(&short, &reg), Err(BackendError::BadSpec { .. })));
    }

    #[test]
    fn custom_registration() {
        let reg = Arc::new(build_registry(0, 8).unwrap());
        let mut backends = BackendRegistry::empty();
        backends.register("ones", |a| Ok(Arc::new(ConstantBackend::new(crate::Bitstring::ones(a.registry.k())))));
        let b = backends.resolve(&"builtin:ones".parse().unwrap(), &reg).unwrap();
        assert_eq!(b.id(), "builtin:constant=11111111");
    }

    #[test]
    fn wire_request_shape() {
        let req = CompletionRequest::greedy("r-17", "ACCAGCC", 2);
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"request_id":"r-17","prompt":"ACCAGCC","max_symbols":2,"decoding":"greedy"}"#
        );
        assert!(serde_json::from_str::<CompletionRequest>(
            r#"{"request_id":"a","prompt":"","max_symbols":2,"decoding":"sample"}"#
        )
        .is_err());
        assert!(serde_json::from_str::<CompletionRequest>(
            r#"{"request_id":"a","prompt":"","max_symbols":2,"decoding":"greedy","temperature":1}"#
        )
        .is_err());
    }
}
