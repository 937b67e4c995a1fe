use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::catalog::FUNCTION_TABLE;
use super::{Primitive, TaskError, TaskFunction};
use crate::bitstring::Bitstring;

pub const REGISTRY_SIZE: usize = 100;

/// Redraw budget for the preset constant before giving up.
const CONSTANT_DRAWS: usize = 10_000;

/// Immutable, ordered collection of task functions sharing one length `k`.
#[derive(Debug, Clone)]
pub struct TaskRegistry {
    k: usize,
    seed: u64,
    functions: Vec<Arc<TaskFunction>>,
    index: HashMap<String, usize>,
}

/// Builds the full function table at length `k` and verifies pairwise
/// distinctness.
pub fn build_registry(seed: u64, k: usize) -> Result<TaskRegistry, TaskError> {
    let registry = TaskRegistry::catalog(seed, k)?;
    if registry.len() != REGISTRY_SIZE {
        return Err(TaskError::Shortfall(registry.len()));
    }
    registry.verify_distinct()?;
    Ok(registry)
}

impl TaskRegistry {
    /// Every function in the published table at length `k`, deduplicated by
    /// id but without the distinctness check. At small `k` several
    /// functions coincide; this is the set used for small-`k` studies.
    pub fn catalog(seed: u64, k: usize) -> Result<Self, TaskError> {
        let mut seen = HashSet::new();
        let ids: Vec<&str> = FUNCTION_TABLE.iter().copied().filter(|id| seen.insert(*id)).collect();

        let mut functions = ids
            .iter()
            .filter(|id| !id.contains(Primitive::MetaConstant.name()))
            .map(|id| TaskFunction::from_id(id, k, None))
            .collect::<Result<Vec<_>, _>>()?;

        let taken: HashSet<&[Bitstring]> = functions.iter().map(|f| f.truth_table()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut meta = None;
        for _ in 0..CONSTANT_DRAWS {
            let c = Bitstring::new(rng.random_range(0..1u32 << k), k).expect("in range");
            let f = TaskFunction::single(Primitive::MetaConstant, k, Some(c))?;
            if !taken.contains(f.truth_table()) {
                meta = Some(f);
                break;
            }
        }
        let meta = meta.ok_or(TaskError::ConstantExhausted)?;

        // restore table order
        let pos = ids.iter().position(|id| *id == Primitive::MetaConstant.name()).expect("meta_constant listed");
        functions.insert(pos, meta);
        Ok(Self::from_functions(seed, k, functions))
    }

    fn from_functions(seed: u64, k: usize, functions: Vec<TaskFunction>) -> Self {
        let functions: Vec<_> = functions.into_iter().map(Arc::new).collect();
        let index = functions.iter().enumerate().map(|(i, f)| (f.id().to_string(), i)).collect();
        Self { k, seed, functions, index }
    }

    pub fn verify_distinct(&self) -> Result<(), TaskError> {
        let mut tables: HashMap<&[Bitstring], &str> = HashMap::new();
        for f in &self.functions {
            if let Some(other) = tables.insert(f.truth_table(), f.id()) {
                return Err(TaskError::Indistinct(other.to_string(), f.id().to_string()));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &Arc<TaskFunction>> + ExactSizeIterator {
        self.functions.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Arc<TaskFunction>> {
        self.index.get(id).map(|&i| &self.functions[i])
    }

    pub fn require(&self, id: &str) -> Result<&Arc<TaskFunction>, TaskError> {
        self.get(id).ok_or_else(|| TaskError::UnknownFunction(id.to_string()))
    }

    /// Sub-registry keeping table order.
    pub fn filtered(&self, mut keep: impl FnMut(&TaskFunction) -> bool) -> Self {
        let functions: Vec<_> = self.functions.iter().filter(|f| keep(f)).cloned().collect();
        let index = functions.iter().enumerate().map(|(i, f)| (f.id().to_string(), i)).collect();
        Self { k: self.k, seed: self.seed, functions, index }
    }

    /// One line per function: `id<TAB>stages<TAB>truth-table-hex<TAB>bitload`.
    /// Each output occupies `ceil(k/8)` big-endian bytes.
    pub fn export(&self) -> String {
        let width = self.k.div_ceil(8);
        let mut out = format!("# bitinduct registry v1 k={} seed={} functions={}\n", self.k, self.seed, self.len());
        for f in &self.functions {
            let stages: Vec<_> = f.stages().iter().map(|p| p.name()).collect();
            let bytes: Vec<u8> = f
                .truth_table()
                .iter()
                .flat_map(|y| y.value().to_be_bytes()[4 - width..].to_vec())
                .collect();
            writeln!(out, "{}\t{}\t{}\t{}", f.id(), stages.join(","), hex::encode(bytes), f.bitload()).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportRecord {
    pub id: String,
    pub stages: Vec<String>,
    pub truth_table_hex: String,
    pub bitload: u32,
}

pub fn read_export(text: &str) -> Result<Vec<ExportRecord>, TaskError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = |reason: &str| TaskError::BadExport { line: i + 1, reason: reason.to_string() };
            let fields: Vec<_> = line.split('\t').collect();
            let [id, stages, table, bitload] = fields[..] else {
                return Err(bad("expected 4 tab-separated fields"));
            };
            hex::decode(table).map_err(|_| bad("truth table is not hex"))?;
            Ok(ExportRecord {
                id: id.to_string(),
                stages: stages.split(',').map(str::to_string).collect(),
                truth_table_hex: table.to_string(),
                bitload: bitload.parse().map_err(|_| bad("bitload is not an integer"))?,
            })
        })
        .collect()
}
