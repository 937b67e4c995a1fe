//! Task space: primitives, composed task functions and the fixed registry.

mod catalog;
mod primitive;
mod registry;

pub use catalog::REFERENCE_BITLOADS;
pub use primitive::{apply_primitive, Primitive, PrimitiveKind, StageInputs};
pub use registry::{build_registry, read_export, ExportRecord, TaskRegistry, REGISTRY_SIZE};

use std::fmt;

use thiserror::Error;

use crate::bitstring::{Bitstring, MAX_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskError {
    #[error("unknown primitive {0:?}")]
    UnknownPrimitive(String),
    #[error("xor_with_s0 needs the original input s0")]
    MissingOriginal,
    #[error("{0} does not take an original input s0")]
    UnexpectedOriginal(&'static str),
    #[error("meta_constant needs a preset constant")]
    MissingConstant,
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("{0} can only be applied after another primitive")]
    SecondStageFirst(&'static str),
    #[error("malformed function id {0:?}")]
    BadFunctionId(String),
    #[error("string length {0} unsupported (need 2..={MAX_LEN})")]
    BadLength(usize),
    #[error("functions {0} and {1} have identical truth tables")]
    Indistinct(String, String),
    #[error("function table yields {0} distinct functions, expected {REGISTRY_SIZE}")]
    Shortfall(usize),
    #[error("no meta_constant value avoids a truth-table collision")]
    ConstantExhausted,
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
    #[error("bad export line {line}: {reason}")]
    BadExport { line: usize, reason: String },
}

/// One primitive or a left-to-right composition of two, with its truth
/// table over every string of length `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskFunction {
    id: String,
    stages: Vec<Primitive>,
    constant: Option<Bitstring>,
    k: usize,
    truth_table: Vec<Bitstring>,
    bitload: u32,
}

impl TaskFunction {
    pub fn single(p: Primitive, k: usize, constant: Option<Bitstring>) -> Result<Self, TaskError> {
        Self::from_stages(vec![p], k, constant)
    }

    /// Parses `"a"` or `"a->b"`.
    pub fn from_id(id: &str, k: usize, constant: Option<Bitstring>) -> Result<Self, TaskError> {
        let stages = id
            .split("->")
            .map(|s| s.trim().parse::<Primitive>())
            .collect::<Result<Vec<_>, _>>()?;
        if stages.is_empty() || stages.len() > 2 {
            return Err(TaskError::BadFunctionId(id.to_string()));
        }
        Self::from_stages(stages, k, constant)
    }

    fn from_stages(stages: Vec<Primitive>, k: usize, constant: Option<Bitstring>) -> Result<Self, TaskError> {
        if !(2..=MAX_LEN).contains(&k) {
            return Err(TaskError::BadLength(k));
        }
        if stages.len() == 2 && stages[0].kind() == PrimitiveKind::SecondStageOnly {
            return Err(TaskError::SecondStageFirst(stages[0].name()));
        }
        let constant = if stages.contains(&Primitive::MetaConstant) {
            let c = constant.ok_or(TaskError::MissingConstant)?;
            if c.len() != k {
                return Err(TaskError::LengthMismatch { expected: k, actual: c.len() });
            }
            Some(c)
        } else {
            None
        };
        let id = stages.iter().map(|p| p.name()).collect::<Vec<_>>().join("->");
        let truth_table = Bitstring::all(k)
            .map(|x| eval_stages(&stages, x, constant))
            .collect::<Result<Vec<_>, _>>()?;
        let bitload = compute_bitload(&truth_table, k);
        Ok(Self { id, stages, constant, k, truth_table, bitload })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn stages(&self) -> &[Primitive] {
        &self.stages
    }

    pub fn constant(&self) -> Option<Bitstring> {
        self.constant
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn truth_table(&self) -> &[Bitstring] {
        &self.truth_table
    }

    pub fn bitload(&self) -> u32 {
        self.bitload
    }

    pub fn apply(&self, x: Bitstring) -> Bitstring {
        assert_eq!(x.len(), self.k, "input length for {}", self.id);
        self.truth_table[x.value() as usize]
    }

    pub fn is_constant(&self) -> bool {
        self.truth_table.iter().all(|y| *y == self.truth_table[0])
    }
}

impl fmt::Display for TaskFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

fn eval_stages(stages: &[Primitive], x: Bitstring, constant: Option<Bitstring>) -> Result<Bitstring, TaskError> {
    stages.iter().try_fold(x, |y, p| {
        let s0 = (p.kind() == PrimitiveKind::SecondStageOnly).then_some(x);
        p.apply(y, &StageInputs { s0, constant })
    })
}

/// `(first -> second)(x) = second(first(x))`.
pub fn compose(first: Primitive, second: Primitive, k: usize) -> Result<TaskFunction, TaskError> {
    TaskFunction::from_stages(vec![first, second], k, None)
}

/// Number of input positions whose flip changes some output bit for some
/// input.
pub fn bitload(f: &TaskFunction) -> u32 {
    f.bitload()
}

fn compute_bitload(truth_table: &[Bitstring], k: usize) -> u32 {
    (0..k)
        .filter(|&i| {
            Bitstring::all(k).any(|x| truth_table[x.value() as usize] != truth_table[x.flip(i).value() as usize])
        })
        .count() as u32
}
