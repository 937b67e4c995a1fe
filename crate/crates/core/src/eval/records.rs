//! Line-delimited trial records and per-(model, shots) summary records.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{TrialKey, TrialOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub model_id: String,
    #[serde(flatten)]
    pub outcome: TrialOutcome,
}

/// One statistical result attached to a summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRecord {
    pub test: String,
    pub estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariate: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl StatRecord {
    pub fn new(test: &str, estimate: f64) -> Self {
        Self {
            test: test.to_string(),
            estimate,
            se: None,
            replicates: None,
            statistic: None,
            p_value: None,
            covariate: None,
            flags: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub model_id: String,
    pub shots: usize,
    pub trials_per_function: usize,
    pub functions: usize,
    pub overall: f64,
    pub per_function: BTreeMap<String, f64>,
    pub stats: Vec<StatRecord>,
}

/// Append-only JSONL log of trial records.
#[derive(Debug, Clone)]
pub struct RecordLog {
    path: PathBuf,
}

impl RecordLog {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Every record on disk. A truncated final line (from an interrupted
    /// write) is skipped with a warning.
    pub fn read_all(&self) -> io::Result<Vec<TrialRecord>> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        let lines: Vec<String> = BufReader::new(file).lines().collect::<io::Result<_>>()?;
        let last = lines.len().saturating_sub(1);
        let mut out = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(line) {
                Ok(r) => out.push(r),
                Err(e) if i == last => log::warn!("{}: ignoring partial last line: {e}", self.path.display()),
                Err(e) => {
                    return Err(io::Error::new(io::ErrorKind::InvalidData, format!("{}:{}: {e}", self.path.display(), i + 1)))
                }
            }
        }
        Ok(out)
    }

    pub fn completed_keys(&self) -> io::Result<HashSet<TrialKey>> {
        Ok(self.read_all()?.into_iter().map(|r| r.outcome.key()).collect())
    }

    pub fn append(&self, records: &[TrialRecord]) -> io::Result<()> {
        if records.is_empty() {
            return Ok(());
        }
        if let Some(dir) = self.path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut buf = String::new();
        for r in records {
            buf.push_str(&serde_json::to_string(r).map_err(io::Error::other)?);
            buf.push('\n');
        }
        self.drop_torn_tail()?;
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        file.write_all(buf.as_bytes())?;
        file.sync_data()
    }

    /// Cuts an unterminated final line so new records start on a fresh line.
    fn drop_torn_tail(&self) -> io::Result<()> {
        let mut file = match OpenOptions::new().read(true).write(true).open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(()),
            Err(e) => return Err(e),
        };
        let len = file.metadata()?.len();
        if len == 0 {
            return Ok(());
        }
        let mut last = [0u8; 1];
        file.seek(SeekFrom::End(-1))?;
        file.read_exact(&mut last)?;
        if last[0] == b'\n' {
            return Ok(());
        }
        let contents = fs::read(&self.path)?;
        let keep = contents.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        log::warn!("{}: discarding {} bytes of a partial last line", self.path.display(), len as usize - keep);
        file.set_len(keep as u64)?;
        file.sync_data()
    }
}

/// Writes `contents` to `path` through a temporary file and rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

pub fn write_summaries(path: &Path, summaries: &[SummaryRecord]) -> io::Result<()> {
    let mut buf = String::new();
    for s in summaries {
        buf.push_str(&serde_json::to_string(s).map_err(io::Error::other)?);
        buf.push('\n');
    }
    write_atomic(path, buf.as_bytes())
}

pub fn read_summaries(path: &Path) -> io::Result<Vec<SummaryRecord>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::ModeBackend;
    use crate::eval::{EvalSettings, Evaluator};
    use crate::taskgen::build_registry;

    #[test]
    fn append_read_and_resume_keys() {
        let dir = tempfile::tempdir().unwrap();
        let log = RecordLog::new(dir.path().join("trials.jsonl"));
        assert!(log.read_all().unwrap().is_empty());

        let reg = build_registry(0, 8).unwrap();
        let sub = reg.filtered(|f| f.bitload() == 1);
        let ev = Evaluator::new(&ModeBackend, &sub, EvalSettings::default());
        let (_, outcomes) = ev.estimate_accuracy(2, 2, 0).unwrap();
        let records: Vec<_> =
            outcomes.iter().map(|o| TrialRecord { model_id: "builtin:mode".into(), outcome: o.clone() }).collect();
        log.append(&records[..3]).unwrap();
        log.append(&records[3..]).unwrap();
        let back = log.read_all().unwrap();
        assert_eq!(back, records);
        assert_eq!(log.completed_keys().unwrap().len(), records.len());

        // a torn final line is tolerated
        let mut f = OpenOptions::new().append(true).open(log.path()).unwrap();
        f.write_all(b"{\"model_id\":\"x\",").unwrap();
        assert_eq!(log.read_all().unwrap().len(), records.len());
        // and cut before the next append
        log.append(&records[..1]).unwrap();
        let back = log.read_all().unwrap();
        assert_eq!(back.len(), records.len() + 1);
        assert_eq!(back.last(), records.first());
    }

    #[test]
    fn record_fields() {
        let reg = build_registry(0, 8).unwrap();
        let sub = reg.filtered(|f| f.id() == "identity");
        let ev = Evaluator::new(&ModeBackend, &sub, EvalSettings::default());
        let (_, outcomes) = ev.estimate_accuracy(1, 1, 0).unwrap();
        let rec = TrialRecord { model_id: "m".into(), outcome: outcomes[0].clone() };
        let v: serde_json::Value = serde_json::to_value(&rec).unwrap();
        for field in ["model_id", "function_id", "shots", "index", "seed", "prompt_hash", "raw_completion", "correct", "mode_correct", "understandable_mistake"] {
            assert!(v.get(field).is_some(), "missing {field}");
        }
        assert_eq!(v["prompt_hash"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn atomic_summary_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out/summary.jsonl");
        let s = SummaryRecord {
            model_id: "m".into(),
            shots: 1,
            trials_per_function: 8,
            functions: 1,
            overall: 0.5,
            per_function: [("identity".to_string(), 0.5)].into(),
            stats: vec![StatRecord::new("cluster_bootstrap", 0.5)],
        };
        write_summaries(&path, std::slice::from_ref(&s)).unwrap();
        assert_eq!(read_summaries(&path).unwrap(), vec![s]);
        assert!(!path.with_extension("tmp").exists());
    }
}
