//! Versioned TOML run configuration.

use std::path::{Path, PathBuf};

use bitinduct::backends::BackendSpec;
use bitinduct::encoding::Modality;
use bitinduct::eval::{DEFAULT_SHOTS, DEFAULT_TRIALS_PER_FUNCTION};
use bitinduct::stats::DEFAULT_REPLICATES;
use bitinduct::taskgen::{build_registry, TaskRegistry};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Issues};

pub const CONFIG_VERSION: u32 = 1;
/// Environment variable naming the directory relative output paths resolve against.
pub const OUTPUT_ROOT_ENV: &str = "BITINDUCT_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub config_version: u32,
    pub backend: String,
    #[serde(default)]
    pub registry_seed: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_shots")]
    pub shots: Vec<usize>,
    #[serde(default = "default_m")]
    pub trials_per_function: usize,
    #[serde(default = "default_modality")]
    pub modality: Modality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelInfo,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub filter: FilterConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelInfo {
    /// Display name; defaults to the backend's reported id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Parameter count, used by the log-params regression.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { replicates: DEFAULT_REPLICATES, seed: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bitloads: Vec<u32>,
}

fn default_k() -> usize {
    8
}

fn default_shots() -> Vec<usize> {
    DEFAULT_SHOTS.to_vec()
}

fn default_m() -> usize {
    DEFAULT_TRIALS_PER_FUNCTION
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

fn default_modality() -> Modality {
    Modality::Linguistic
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4)
}

impl RunConfig {
    pub fn new(backend: &str) -> Self {
        Self {
            config_version: CONFIG_VERSION,
            backend: backend.to_string(),
            registry_seed: 0,
            master_seed: 0,
            k: default_k(),
            shots: default_shots(),
            trials_per_function: default_m(),
            modality: default_modality(),
            workers: None,
            output_dir: None,
            model: ModelInfo::default(),
            bootstrap: BootstrapConfig::default(),
            filter: FilterConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| {
            let path = e.span().map(|s| format!("byte {}..{}", s.start, s.end)).unwrap_or_else(|| "<file>".into());
            CliError::config(&path, e.message().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(&path.display().to_string(), e.to_string()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut issues = Issues::default();
        if self.config_version != CONFIG_VERSION {
            issues.push("config_version", format!("unsupported version {} (expected {CONFIG_VERSION})", self.config_version));
        }
        if let Err(e) = self.backend.parse::<BackendSpec>() {
            issues.push("backend", e.to_string());
        }
        if !(2..=16).contains(&self.k) {
            issues.push("k", format!("{} is outside 2..=16", self.k));
        }
        if self.shots.is_empty() {
            issues.push("shots", "at least one shot count is required");
        }
        let max_shots = if (2..=16).contains(&self.k) { (1usize << self.k) - 1 } else { usize::MAX };
        for (i, &n) in self.shots.iter().enumerate() {
            if n == 0 || n > max_shots {
                issues.push(format!("shots[{i}]"), format!("{n} is outside 1..={max_shots}"));
            }
            if i > 0 && n <= self.shots[i - 1] {
                issues.push(format!("shots[{i}]"), "shot counts must be strictly ascending");
            }
        }
        if self.trials_per_function == 0 {
            issues.push("trials_per_function", "must be at least 1");
        }
        if self.workers == Some(0) {
            issues.push("workers", "must be at least 1");
        }
        if self.bootstrap.replicates == 0 {
            issues.push("bootstrap.replicates", "must be at least 1");
        }
        if let Some(p) = self.model.params {
            if !(p > 0.0 && p.is_finite()) {
                issues.push("model.params", "must be a positive number");
            }
        }
        for (i, &bl) in self.filter.bitloads.iter().enumerate() {
            if bl as usize > self.k {
                issues.push(format!("filter.bitloads[{i}]"), format!("{bl} exceeds k = {}", self.k));
            }
        }
        issues.into_result()
    }

    pub fn backend_spec(&self) -> BackendSpec {
        self.backend.parse().expect("validated")
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or_else(default_workers)
    }

    /// Builds the registry and applies the function and BitLoad filters.
    pub fn registry(&self) -> Result<TaskRegistry, CliError> {
        let full = build_registry(self.registry_seed, self.k).map_err(|e| CliError::Verification(e.to_string()))?;
        let mut issues = Issues::default();
        for (i, id) in self.filter.functions.iter().enumerate() {
            if full.get(id).is_none() {
                issues.push(format!("filter.functions[{i}]"), format!("unknown function {id:?}"));
            }
        }
        issues.into_result()?;
        let filtered = full.filtered(|f| {
            (self.filter.functions.is_empty() || self.filter.functions.iter().any(|id| id == f.id()))
                && (self.filter.bitloads.is_empty() || self.filter.bitloads.contains(&f.bitload()))
        });
        if filtered.is_empty() {
            return Err(CliError::config("filter", "no registry function passes the filter"));
        }
        Ok(filtered)
    }

    /// Fields that determine trial contents; runs with equal identities
    /// produce interchangeable records.
    pub fn identity(&self) -> RunIdentity {
        RunIdentity {
            backend: self.backend.clone(),
            registry_seed: self.registry_seed,
            master_seed: self.master_seed,
            k: self.k,
            trials_per_function: self.trials_per_function,
            modality: self.modality,
            filter: self.filter.clone(),
        }
    }

    /// The run directory: the configured one (resolved against the output
    /// root when relative) or a name derived from the backend spec.
    pub fn resolve_output_dir(&self, root: Option<&Path>) -> PathBuf {
        let root = root.map(Path::to_path_buf).or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from));
        let dir = self.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs").join(slug(&self.backend)));
        match root {
            Some(root) if dir.is_relative() => root.join(dir),
            _ => dir,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunIdentity {
    pub backend: String,
    pub registry_seed: u64,
    pub master_seed: u64,
    pub k: usize,
    pub trials_per_function: usize,
    pub modality: Modality,
    pub filter: FilterConfig,
}

pub fn slug(s: &str) -> String {
    let mut out: String = s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect();
    out.truncate(64);
    out
}
