//! Accuracy tables, report bundles and plot-ready data files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use bitinduct::bitdiversity;
use bitinduct::eval::records::{write_atomic, TrialRecord};
use bitinduct::stats::{aggregate_by_bitload, fit_log_regression, Covariate, RegressionFit};
use bitinduct::taskgen::TaskRegistry;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::run::{outcomes_for, summarize};

/// A (covariate, accuracy) pair fed to a log-scale fit.
type Point = (f64, f64);

/// Shot count for the per-model bar data.
pub const DEFAULT_BAR_SHOTS: usize = 128;

/// One accuracy estimate as it enters a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub model: String,
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub params: Option<f64>,
    pub shots: usize,
    /// Fraction in [0, 1].
    pub mean: f64,
    pub se: f64,
}

/// "41.1±3.3": percentages with one decimal.
pub fn format_cell(mean: f64, se: f64) -> String {
    format!("{:.1}±{:.1}", mean * 100.0, se * 100.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableCell {
    pub text: String,
    /// Highest displayed mean in its column within the model family.
    pub bold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub model: String,
    pub family: Option<String>,
    pub cells: Vec<Option<TableCell>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyTable {
    pub shots: Vec<usize>,
    pub rows: Vec<TableRow>,
}

/// Rows per model (grouped by family in order of first appearance, then by
/// parameter count), columns per shot count. Within each family and column
/// every cell whose displayed mean equals the maximum is marked bold.
pub fn render_accuracy_table(entries: &[TableEntry]) -> AccuracyTable {
    let mut shots: Vec<usize> = entries.iter().map(|e| e.shots).collect();
    shots.sort_unstable();
    shots.dedup();

    let mut families: Vec<Option<String>> = Vec::new();
    let mut models: Vec<(String, Option<String>, Option<f64>)> = Vec::new();
    for e in entries {
        if !families.contains(&e.family) {
            families.push(e.family.clone());
        }
        if !models.iter().any(|(m, _, _)| *m == e.model) {
            models.push((e.model.clone(), e.family.clone(), e.params));
        }
    }
    let family_rank = |f: &Option<String>| families.iter().position(|x| x == f).unwrap_or(usize::MAX);
    // stable: ties keep first-appearance order
    models.sort_by(|a, b| {
        family_rank(&a.1).cmp(&family_rank(&b.1)).then_with(|| match (a.2, b.2) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        })
    });

    let lookup: BTreeMap<(&str, usize), &TableEntry> = entries.iter().map(|e| ((e.model.as_str(), e.shots), e)).collect();
    let tenths = |e: &TableEntry| (e.mean * 1000.0).round() as i64;
    let mut best: BTreeMap<(Option<String>, usize), i64> = BTreeMap::new();
    for e in entries {
        let slot = best.entry((e.family.clone(), e.shots)).or_insert(i64::MIN);
        *slot = (*slot).max(tenths(e));
    }

    let rows = models
        .into_iter()
        .map(|(model, family, _)| {
            let cells = shots
                .iter()
                .map(|&n| {
                    lookup.get(&(model.as_str(), n)).map(|e| TableCell {
                        text: format_cell(e.mean, e.se),
                        bold: best[&(family.clone(), n)] == tenths(e),
                    })
                })
                .collect();
            TableRow { model, family, cells }
        })
        .collect();
    AccuracyTable { shots, rows }
}

fn shot_header(n: usize) -> String {
    if n == 1 {
        "1 Shot".into()
    } else {
        format!("{n} Shots")
    }
}

impl AccuracyTable {
    fn grid(&self, mark: impl Fn(&TableCell) -> String) -> Vec<Vec<String>> {
        let mut grid = vec![std::iter::once("Model".to_string()).chain(self.shots.iter().map(|&n| shot_header(n))).collect()];
        for row in &self.rows {
            let mut line = vec![row.model.clone()];
            line.extend(row.cells.iter().map(|c| c.as_ref().map_or_else(|| "-".to_string(), &mark)));
            grid.push(line);
        }
        grid
    }

    /// Aligned plain text; bold cells carry a trailing `*`.
    pub fn to_text(&self) -> String {
        let grid = self.grid(|c| if c.bold { format!("{}*", c.text) } else { c.text.clone() });
        let widths: Vec<usize> =
            (0..grid[0].len()).map(|j| grid.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (i, row) in grid.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (c, w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
                out.push('\n');
            }
        }
        out
    }

    /// Markdown with bold means, as in "**41.1**±3.3".
    pub fn to_markdown(&self) -> String {
        let grid = self.grid(|c| match (c.bold, c.text.split_once('±')) {
            (true, Some((m, s))) => format!("**{m}**±{s}"),
            _ => c.text.clone(),
        });
        let mut out = String::new();
        for (i, row) in grid.iter().enumerate() {
            let _ = writeln!(out, "| {} |", row.join(" | "));
            if i == 0 {
                let _ = writeln!(out, "|{}", "---|".repeat(row.len()));
            }
        }
        out
    }

    /// Long format: one line per cell with an explicit bold flag.
    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["model", "family", "shots", "cell", "bold"])?;
        for row in &self.rows {
            for (n, cell) in self.shots.iter().zip(&row.cells) {
                if let Some(c) = cell {
                    let n = n.to_string();
                    let bold = c.bold.to_string();
                    w.write_record([row.model.as_str(), row.family.as_deref().unwrap_or(""), &n, &c.text, &bold])?;
                }
            }
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Reads table entries from a CSV with columns
/// `model,family,params,shots,mean,se` (fractions, not percentages).
pub fn read_table_entries(path: &Path) -> anyhow::Result<Vec<TableEntry>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let e: TableEntry = row.with_context(|| format!("parsing {}", path.display()))?;
        out.push(TableEntry { family: e.family.filter(|f| !f.is_empty()), ..e });
    }
    Ok(out)
}

/// A finished run: its configuration and every persisted trial record.
#[derive(Debug, Clone)]
pub struct RunData {
    pub config: RunConfig,
    pub model_id: String,
    pub registry: TaskRegistry,
    pub records: Vec<TrialRecord>,
}

impl RunData {
    pub fn display_name(&self) -> String {
        self.config.model.name.clone().unwrap_or_else(|| self.model_id.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotFit {
    pub model: String,
    pub fit: RegressionFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamFit {
    pub family: Option<String>,
    pub shots: usize,
    pub fit: RegressionFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub model: String,
    pub shots: usize,
    pub accuracy: f64,
    pub se: f64,
    pub baseline: f64,
    pub baseline_se: f64,
    pub z: f64,
    pub one_sided_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitloadRow {
    pub model: String,
    pub shots: usize,
    pub bitload: u32,
    pub mean: f64,
    pub se: f64,
    pub functions: usize,
    pub singleton: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitDiversityRow {
    pub model: String,
    pub shots: usize,
    pub bitdiversity: usize,
    /// Trials whose target has this BitDiversity.
    pub targets: usize,
    /// Of those, answered correctly.
    pub correct: usize,
    /// Decoded predictions with this BitDiversity.
    pub predictions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MistakeRow {
    pub model: String,
    pub shots: usize,
    pub trials: usize,
    pub wrong: usize,
    pub understandable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionRow {
    pub model: String,
    pub shots: usize,
    pub function_id: String,
    pub bitload: u32,
    pub accuracy: f64,
}

/// Everything the report commands print or plot, recomputed from trial
/// records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub table: Vec<TableEntry>,
    pub shot_fits: Vec<ShotFit>,
    pub param_fits: Vec<ParamFit>,
    pub comparisons: Vec<ComparisonRow>,
    pub bitload: Vec<BitloadRow>,
    pub bitdiversity: Vec<BitDiversityRow>,
    pub mistakes: Vec<MistakeRow>,
    pub functions: Vec<FunctionRow>,
}

impl ReportBundle {
    pub fn from_runs(runs: &[RunData]) -> anyhow::Result<Self> {
        let mut b = ReportBundle {
            table: Vec::new(),
            shot_fits: Vec::new(),
            param_fits: Vec::new(),
            comparisons: Vec::new(),
            bitload: Vec::new(),
            bitdiversity: Vec::new(),
            mistakes: Vec::new(),
            functions: Vec::new(),
        };
        for run in runs {
            let model = run.display_name();
            let summaries = summarize(&run.config, &run.registry, &run.model_id, &run.records)?;
            let mut points = Vec::new();
            for s in &summaries {
                let stat = |name: &str| s.stats.iter().find(|r| r.test == name).expect("summary carries stat");
                let boot = stat("cluster_bootstrap");
                let mode = stat("mode_baseline");
                let z = stat("z_test_vs_mode_baseline");
                let se = boot.se.unwrap_or(0.0);
                b.table.push(TableEntry {
                    model: model.clone(),
                    family: run.config.model.family.clone(),
                    params: run.config.model.params,
                    shots: s.shots,
                    mean: s.overall,
                    se,
                });
                b.comparisons.push(ComparisonRow {
                    model: model.clone(),
                    shots: s.shots,
                    accuracy: s.overall,
                    se,
                    baseline: mode.estimate,
                    baseline_se: mode.se.unwrap_or(0.0),
                    z: z.statistic.unwrap_or(0.0),
                    one_sided_p: z.p_value.unwrap_or(0.5),
                });
                points.push((s.shots as f64, s.overall));
                for (bitload, g) in aggregate_by_bitload(&s.per_function, &run.registry)? {
                    b.bitload.push(BitloadRow {
                        model: model.clone(),
                        shots: s.shots,
                        bitload,
                        mean: g.mean,
                        se: g.se,
                        functions: g.count,
                        singleton: g.singleton,
                    });
                }
                for (id, &accuracy) in &s.per_function {
                    let bitload = run.registry.get(id).expect("summarized function").bitload();
                    b.functions.push(FunctionRow { model: model.clone(), shots: s.shots, function_id: id.clone(), bitload, accuracy });
                }

                let outcomes = outcomes_for(&run.config, &run.registry, &run.records, s.shots)?;
                let mut bins: BTreeMap<usize, (usize, usize, usize)> =
                    (0..=run.config.k / 2).map(|d| (d, (0, 0, 0))).collect();
                for o in &outcomes {
                    let t = bins.get_mut(&bitdiversity(&o.target)).expect("bitdiversity <= k/2");
                    t.0 += 1;
                    t.1 += o.correct as usize;
                    if let Some(p) = o.prediction {
                        bins.get_mut(&bitdiversity(&p)).expect("bitdiversity <= k/2").2 += 1;
                    }
                }
                for (d, (targets, correct, predictions)) in bins {
                    b.bitdiversity.push(BitDiversityRow {
                        model: model.clone(),
                        shots: s.shots,
                        bitdiversity: d,
                        targets,
                        correct,
                        predictions,
                    });
                }
                b.mistakes.push(MistakeRow {
                    model: model.clone(),
                    shots: s.shots,
                    trials: outcomes.len(),
                    wrong: outcomes.iter().filter(|o| !o.correct).count(),
                    understandable: outcomes.iter().filter(|o| o.understandable_mistake).count(),
                });
            }
            if points.len() >= 3 {
                b.shot_fits.push(ShotFit { model, fit: fit_log_regression(&points, Covariate::LogShots)? });
            }
        }

        // log-params fits per family and shot count, across models
        let mut by_family: BTreeMap<(Option<String>, usize), Vec<Point>> = BTreeMap::new();
        for e in &b.table {
            if let Some(p) = e.params {
                by_family.entry((e.family.clone(), e.shots)).or_default().push((p, e.mean));
            }
        }
        for ((family, shots), points) in by_family {
            let distinct = points.iter().map(|(p, _)| p.to_bits()).collect::<std::collections::BTreeSet<_>>().len();
            if points.len() >= 3 && distinct >= 2 {
                b.param_fits.push(ParamFit { family, shots, fit: fit_log_regression(&points, Covariate::LogParams)? });
            }
        }
        Ok(b)
    }

    pub fn accuracy_table(&self) -> AccuracyTable {
        render_accuracy_table(&self.table)
    }

    /// Writes the table, the bundle as JSON and the plot data files.
    pub fn write(&self, dir: &Path, bar_shots: usize) -> anyhow::Result<Vec<PathBuf>> {
        let table = self.accuracy_table();
        let mut written = Vec::new();
        for (name, contents) in [
            ("table.txt", table.to_text()),
            ("table.md", table.to_markdown()),
            ("bundle.json", serde_json::to_string_pretty(self)? + "\n"),
        ] {
            let path = dir.join(name);
            write_atomic(&path, contents.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
        written.extend(emit_plot_data(self, &dir.join("plots"), bar_shots)?);
        Ok(written)
    }
}

fn tsv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

/// Tab-separated plot data: accuracy against shots, BitLoad and
/// BitDiversity, per-model bars and per-function accuracies at `bar_shots`,
/// and understandable-mistake rates against shots.
pub fn emit_plot_data(bundle: &ReportBundle, dir: &Path, bar_shots: usize) -> anyhow::Result<Vec<PathBuf>> {
    let family = |f: &Option<String>| f.clone().unwrap_or_default();
    let series = tsv(
        &["model", "family", "shots", "log_shots", "accuracy", "se", "lower", "upper", "mode_baseline", "mode_se"],
        bundle.comparisons.iter().map(|c| {
            let fam = bundle.table.iter().find(|e| e.model == c.model).map(|e| family(&e.family)).unwrap_or_default();
            vec![
                c.model.clone(),
                fam,
                c.shots.to_string(),
                num((c.shots as f64).ln()),
                num(c.accuracy),
                num(c.se),
                num(c.accuracy - c.se),
                num(c.accuracy + c.se),
                num(c.baseline),
                num(c.baseline_se),
            ]
        }),
    );
    let bitload = tsv(
        &["model", "shots", "bitload", "accuracy", "se", "functions", "singleton"],
        bundle.bitload.iter().map(|r| {
            vec![
                r.model.clone(),
                r.shots.to_string(),
                r.bitload.to_string(),
                num(r.mean),
                num(r.se),
                r.functions.to_string(),
                r.singleton.to_string(),
            ]
        }),
    );
    let bars = tsv(
        &["model", "family", "params", "accuracy", "se"],
        bundle.table.iter().filter(|e| e.shots == bar_shots).map(|e| {
            vec![
                e.model.clone(),
                family(&e.family),
                e.params.map(|p| format!("{p}")).unwrap_or_default(),
                num(e.mean),
                num(e.se),
            ]
        }),
    );
    let per_function = tsv(
        &["model", "function_id", "bitload", "accuracy"],
        bundle
            .functions
            .iter()
            .filter(|r| r.shots == bar_shots)
            .map(|r| vec![r.model.clone(), r.function_id.clone(), r.bitload.to_string(), num(r.accuracy)]),
    );
    let diversity = tsv(
        &["model", "shots", "bitdiversity", "targets", "correct", "accuracy", "predictions"],
        bundle.bitdiversity.iter().map(|r| {
            let acc = if r.targets == 0 { String::new() } else { num(r.correct as f64 / r.targets as f64) };
            vec![
                r.model.clone(),
                r.shots.to_string(),
                r.bitdiversity.to_string(),
                r.targets.to_string(),
                r.correct.to_string(),
                acc,
                r.predictions.to_string(),
            ]
        }),
    );
    let mistakes = tsv(
        &["model", "shots", "trials", "wrong", "understandable", "rate", "share_of_errors"],
        bundle.mistakes.iter().map(|r| {
            let share = if r.wrong == 0 { 0.0 } else { r.understandable as f64 / r.wrong as f64 };
            vec![
                r.model.clone(),
                r.shots.to_string(),
                r.trials.to_string(),
                r.wrong.to_string(),
                r.understandable.to_string(),
                num(r.understandable as f64 / r.trials as f64),
                num(share),
            ]
        }),
    );
    let files = [
        ("accuracy_vs_shots.tsv".to_string(), series),
        ("accuracy_vs_bitload.tsv".to_string(), bitload),
        (format!("bars_n{bar_shots}.tsv"), bars),
        (format!("functions_n{bar_shots}.tsv"), per_function),
        ("bitdiversity.tsv".to_string(), diversity),
        ("understandable_mistakes.tsv".to_string(), mistakes),
    ];
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        write_atomic(&path, contents.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(model: &str, family: &str, params: f64, shots: usize, mean: f64, se: f64) -> TableEntry {
        TableEntry { model: model.into(), family: Some(family.into()), params: Some(params), shots, mean, se }
    }

    #[test]
    fn cell_format() {
        assert_eq!(format_cell(0.411, 0.033), "41.1±3.3");
        assert_eq!(format_cell(1.0, 0.0), "100.0±0.0");
        assert_eq!(format_cell(0.0, 0.0), "0.0±0.0");
    }

    #[test]
    fn single_cell_table() {
        let t = render_accuracy_table(&[TableEntry { model: "m".into(), family: None, params: None, shots: 4, mean: 0.5, se: 0.01 }]);
        assert_eq!(t.shots, [4]);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].cells, [Some(TableCell { text: "50.0±1.0".into(), bold: true })]);
        assert_eq!(t.to_text(), "Model    4 Shots\n----------------\nm      50.0±1.0*\n");
    }

    #[test]
    fn bold_per_family_with_ties_and_param_order() {
        let entries = [
            entry("B-big", "B", 40e9, 1, 0.2, 0.01),
            entry("A-small", "A", 1e9, 1, 0.3, 0.01),
            entry("A-big", "A", 7e9, 1, 0.3, 0.01),
            entry("B-small", "B", 1e9, 1, 0.1, 0.01),
        ];
        let t = render_accuracy_table(&entries);
        let order: Vec<_> = t.rows.iter().map(|r| r.model.as_str()).collect();
        assert_eq!(order, ["B-small", "B-big", "A-small", "A-big"]);
        let bold: Vec<bool> = t.rows.iter().map(|r| r.cells[0].as_ref().unwrap().bold).collect();
        assert_eq!(bold, [false, true, true, true]);
        assert!(t.to_markdown().contains("| A-big | **30.0**±1.0 |"));
        assert!(t.to_csv().unwrap().contains("A-small,A,1,30.0±1.0,true"));
    }

    #[test]
    fn missing_cells_render_as_dash() {
        let t = render_accuracy_table(&[entry("a", "f", 1.0, 1, 0.1, 0.0), entry("b", "f", 2.0, 2, 0.2, 0.0)]);
        assert!(t.rows[0].cells[1].is_none());
        assert!(t.to_text().lines().nth(2).unwrap().contains('-'));
    }
}
