//! Argument parsing and subcommand dispatch.

use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};

use anyhow::Context;
use bitinduct::backends::BackendSpec;
use bitinduct::eval::records::write_atomic;
use bitinduct::stats::{cluster_bootstrap_se, compare_to_baseline, Estimate};
use bitinduct::taskgen::{build_registry, REFERENCE_BITLOADS};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::mock::{self, MockMode};
use crate::report::{read_table_entries, render_accuracy_table, ReportBundle, DEFAULT_BAR_SHOTS};
use crate::run::{self, load_run, outcomes_for, RunPaths};

#[derive(Debug, Parser)]
#[command(name = "bitinduct", version, about = "Bitstring program-induction benchmark for in-context learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build, verify or export the task registry.
    #[command(subcommand)]
    Registry(RegistryCommand),
    /// Run or resume an evaluation sweep.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Statistics over finished runs.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Accuracy tables and plot data.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Wire-protocol test server.
    #[command(hide = true)]
    MockServer(MockArgs),
}

#[derive(Debug, Args)]
pub struct RegistryArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub k: usize,
}

#[derive(Debug, Subcommand)]
pub enum RegistryCommand {
    /// Build the registry and print a summary.
    Build(RegistryArgs),
    /// Check function counts, distinctness and reference BitLoads.
    Verify(RegistryArgs),
    /// Write truth tables in the export format.
    Export {
        #[command(flatten)]
        args: RegistryArgs,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Run the sweep described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's backend: builtin:NAME, tcp://HOST:PORT,
        /// HOST:PORT or stdio:COMMAND.
        #[arg(long)]
        backend: Option<String>,
        /// Run directory (overrides the config and the output root).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Continue an interrupted run from its directory.
    Resume {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CovariateArg {
    Shots,
    Params,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Cluster-bootstrap standard errors per shot count.
    Bootstrap {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Log-covariate regressions with one-sided slope tests.
    Regress {
        #[arg(long = "run", required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "shots")]
        covariate: CovariateArg,
    },
    /// One-sided z-tests against the mode baseline or another run.
    Compare {
        #[arg(long)]
        run: PathBuf,
        /// Compare against this run instead of the mode baseline.
        #[arg(long)]
        baseline_run: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TableFormat {
    Text,
    Markdown,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Render the accuracy table for one or more runs.
    Table {
        #[arg(long = "run")]
        runs: Vec<PathBuf>,
        /// Render entries from a CSV (model,family,params,shots,mean,se) instead.
        #[arg(long, conflicts_with = "runs")]
        entries: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: TableFormat,
    },
    /// Write plot-ready data files for one or more runs.
    Plots {
        #[arg(long = "run", required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BAR_SHOTS)]
        bar_shots: usize,
    },
}

#[derive(Debug, Args)]
pub struct MockArgs {
    /// echo-query or constant=TEXT
    #[arg(long, default_value = "echo-query")]
    pub mode: MockMode,
    #[arg(long, default_value = "mock")]
    pub model_id: String,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    /// TCP address to listen on; serves standard streams when omitted.
    #[arg(long)]
    pub listen: Option<String>,
}

fn print_json(value: &serde_json::Value) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Registry(cmd) => registry(cmd),
        Command::Eval(cmd) => eval(cmd),
        Command::Stats(cmd) => stats(cmd),
        Command::Report(cmd) => report(cmd),
        Command::MockServer(args) => mock_server(args),
    }
}

fn registry(cmd: RegistryCommand) -> anyhow::Result<()> {
    match cmd {
        RegistryCommand::Build(a) => {
            let reg = build_registry(a.seed, a.k).map_err(|e| CliError::Verification(e.to_string()))?;
            let single = reg.iter().filter(|f| f.stages().len() == 1).count();
            let mut by_bitload = std::collections::BTreeMap::<u32, usize>::new();
            for f in reg.iter() {
                *by_bitload.entry(f.bitload()).or_default() += 1;
            }
            print_json(&json!({
                "k": reg.k(),
                "seed": reg.seed(),
                "functions": reg.len(),
                "single_stage": single,
                "two_stage": reg.len() - single,
                "meta_constant": reg.get("meta_constant").and_then(|f| f.constant()).map(|c| c.to_string()),
                "bitload_counts": by_bitload,
            }))
        }
        RegistryCommand::Verify(a) => {
            let reg = build_registry(a.seed, a.k).map_err(|e| CliError::Verification(e.to_string()))?;
            reg.verify_distinct().map_err(|e| CliError::Verification(e.to_string()))?;
            let mut mismatches = Vec::new();
            if a.k == 8 {
                for (id, expected) in REFERENCE_BITLOADS {
                    match reg.get(id) {
                        Some(f) if f.bitload() == expected => {}
                        Some(f) => mismatches.push(format!("{id}: bitload {} (reference {expected})", f.bitload())),
                        None => mismatches.push(format!("{id}: missing")),
                    }
                }
            }
            if !mismatches.is_empty() {
                return Err(CliError::Verification(mismatches.join("; ")).into());
            }
            println!(
                "ok: {} distinct functions at k={}{}",
                reg.len(),
                a.k,
                if a.k == 8 { ", reference BitLoads match" } else { "" }
            );
            Ok(())
        }
        RegistryCommand::Export { args, out } => {
            let reg = build_registry(args.seed, args.k).map_err(|e| CliError::Verification(e.to_string()))?;
            let text = reg.export();
            match out {
                Some(path) => write_atomic(&path, text.as_bytes()).with_context(|| format!("writing {}", path.display())),
                None => {
                    std::io::stdout().lock().write_all(text.as_bytes())?;
                    Ok(())
                }
            }
        }
    }
}

fn run_summary(out: &run::RunOutput, dir: &Path) -> anyhow::Result<()> {
    print_json(&json!({
        "model_id": out.model_id,
        "directory": dir,
        "executed": out.executed,
        "skipped": out.skipped,
        "accuracy": out.summaries.iter().map(|s| json!({"shots": s.shots, "overall": s.overall})).collect::<Vec<_>>(),
    }))
}

fn eval(cmd: EvalCommand) -> anyhow::Result<()> {
    match cmd {
        EvalCommand::Run { config, backend, out, workers } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(b) = backend {
                b.parse::<BackendSpec>().map_err(|e| CliError::config("--backend", e.to_string()))?;
                cfg.backend = b;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            let dir = out.unwrap_or_else(|| cfg.resolve_output_dir(None));
            let result = run::execute(&cfg, &dir)?;
            run_summary(&result, &dir)
        }
        EvalCommand::Resume { out, workers } => {
            let mut cfg = RunConfig::load(&RunPaths::new(&out).config())?;
            cfg.workers = workers;
            let result = run::execute(&cfg, &out)?;
            run_summary(&result, &out)
        }
    }
}

fn stats(cmd: StatsCommand) -> anyhow::Result<()> {
    match cmd {
        StatsCommand::Bootstrap { run, replicates, seed } => {
            let data = load_run(&run)?;
            let replicates = replicates.unwrap_or(data.config.bootstrap.replicates);
            let seed = seed.unwrap_or(data.config.bootstrap.seed);
            let mut rows = Vec::new();
            for &n in &data.config.shots {
                let outcomes = outcomes_for(&data.config, &data.registry, &data.records, n)?;
                let groups: Vec<Vec<f64>> = bitinduct::eval::group_by_function(&outcomes, |o| o.correct)
                    .into_values()
                    .map(|v| v.into_iter().map(|c| c as u8 as f64).collect())
                    .collect();
                let r = cluster_bootstrap_se(&groups, replicates, seed)?;
                rows.push(json!({
                    "shots": n,
                    "estimate": r.point_estimate,
                    "se": r.standard_error,
                    "replicates": r.replicates,
                    "seed": r.seed,
                    "degenerate": r.degenerate,
                }));
            }
            print_json(&json!({ "model_id": data.model_id, "bootstrap": rows }))
        }
        StatsCommand::Regress { runs, covariate } => {
            let data = runs.iter().map(|d| load_run(d)).collect::<anyhow::Result<Vec<_>>>()?;
            let bundle = ReportBundle::from_runs(&data)?;
            match covariate {
                CovariateArg::Shots => {
                    if bundle.shot_fits.is_empty() {
                        return Err(CliError::Verification("log-shots regression needs at least 3 shot counts".into()).into());
                    }
                    print_json(&serde_json::to_value(&bundle.shot_fits)?)
                }
                CovariateArg::Params => {
                    if bundle.param_fits.is_empty() {
                        return Err(CliError::Verification(
                            "log-params regression needs at least 3 runs of one family with model.params set".into(),
                        )
                        .into());
                    }
                    print_json(&serde_json::to_value(&bundle.param_fits)?)
                }
            }
        }
        StatsCommand::Compare { run, baseline_run } => {
            let model = ReportBundle::from_runs(&[load_run(&run)?])?;
            let rows = match baseline_run {
                None => serde_json::to_value(&model.comparisons)?,
                Some(base) => {
                    let base = ReportBundle::from_runs(&[load_run(&base)?])?;
                    let mut rows = Vec::new();
                    for m in &model.table {
                        let Some(b) = base.table.iter().find(|b| b.shots == m.shots) else { continue };
                        let c = compare_to_baseline(Estimate { value: m.mean, se: m.se }, Estimate { value: b.mean, se: b.se })?;
                        rows.push(json!({
                            "model": m.model, "baseline_model": b.model, "shots": m.shots,
                            "accuracy": m.mean, "se": m.se, "baseline": b.mean, "baseline_se": b.se,
                            "z": c.z, "one_sided_p": c.one_sided_p, "degenerate": c.degenerate,
                        }));
                    }
                    serde_json::Value::Array(rows)
                }
            };
            print_json(&rows)
        }
    }
}

fn report(cmd: ReportCommand) -> anyhow::Result<()> {
    match cmd {
        ReportCommand::Table { runs, entries, format } => {
            let entries = match entries {
                Some(path) => read_table_entries(&path)?,
                None => {
                    if runs.is_empty() {
                        return Err(CliError::config("--run", "give at least one run directory or --entries").into());
                    }
                    let data = runs.iter().map(|d| load_run(d)).collect::<anyhow::Result<Vec<_>>>()?;
                    ReportBundle::from_runs(&data)?.table
                }
            };
            let table = render_accuracy_table(&entries);
            let text = match format {
                TableFormat::Text => table.to_text(),
                TableFormat::Markdown => table.to_markdown(),
                TableFormat::Csv => table.to_csv()?,
            };
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
        ReportCommand::Plots { runs, out, bar_shots } => {
            let data = runs.iter().map(|d| load_run(d)).collect::<anyhow::Result<Vec<_>>>()?;
            let bundle = ReportBundle::from_runs(&data)?;
            for path in bundle.write(&out, bar_shots)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn mock_server(args: MockArgs) -> anyhow::Result<()> {
    let hs = mock::handshake(&args.model_id, args.max_in_flight);
    match args.listen {
        None => Ok(mock::serve_stdio(&args.mode, &hs)?),
        Some(addr) => {
            let listener = TcpListener::bind(&addr).with_context(|| format!("binding {addr}"))?;
            eprintln!("listening on {}", listener.local_addr()?);
            Ok(mock::serve_tcp(listener, args.mode, hs)?)
        }
    }
}
