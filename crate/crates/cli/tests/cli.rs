use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bitinduct::eval::records::{read_summaries, RecordLog};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bitinduct"));
    c.env_remove("BITINDUCT_OUTPUT_ROOT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, format!("config_version = 1\n{body}")).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn assert_exit(o: &Output, code: i32) {
    assert_eq!(o.status.code(), Some(code), "stdout: {}\nstderr: {}", stdout(o), String::from_utf8_lossy(&o.stderr));
}

const SMALL: &str = r#"
shots = [1, 2, 4]
trials_per_function = 2
[bootstrap]
replicates = 200
"#;

#[test]
fn registry_commands() {
    let o = run(&["registry", "verify"]);
    assert_exit(&o, 0);
    assert!(stdout(&o).contains("reference BitLoads match"));

    let o = run(&["registry", "build"]);
    assert_exit(&o, 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["functions"], 100);
    assert_eq!(v["single_stage"], 30);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("registry.tsv");
    assert_exit(&run(&["registry", "export", "--out", out.to_str().unwrap()]), 0);
    let records = bitinduct::taskgen::read_export(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(records.len(), 100);

    // distinctness cannot hold at k = 2
    assert_exit(&run(&["registry", "verify", "--k", "2"]), 4);
}

#[test]
fn oracle_run_and_byte_identical_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("backend = \"builtin:oracle\"\n{SMALL}"));
    let out = dir.path().join("oracle");
    let args = ["eval", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let o = run(&args);
    assert_exit(&o, 0);
    let summary = fs::read(out.join("summary.jsonl")).unwrap();
    for s in read_summaries(&out.join("summary.jsonl")).unwrap() {
        assert_eq!(s.overall, 1.0);
        assert_eq!(s.model_id, "builtin:oracle");
    }
    let table = fs::read_to_string(out.join("report/table.txt")).unwrap();
    assert_eq!(table.matches("100.0±0.0").count(), 3, "{table}");

    let o = run(&args);
    assert_exit(&o, 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["executed"], 0);
    assert_eq!(v["skipped"], 600);
    assert_eq!(fs::read(out.join("summary.jsonl")).unwrap(), summary);
}

#[test]
fn interrupted_run_resumes_to_the_same_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("backend = \"builtin:random\"\n{SMALL}"));
    let full = dir.path().join("full");
    let cut = dir.path().join("cut");
    for out in [&full, &cut] {
        assert_exit(&run(&["eval", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    }
    // simulate an interruption: keep a prefix of the log plus a torn line
    let log = fs::read_to_string(cut.join("trials.jsonl")).unwrap();
    let kept: Vec<&str> = log.lines().take(250).collect();
    fs::write(cut.join("trials.jsonl"), kept.join("\n") + "\n{\"model_id\":\"buil").unwrap();
    fs::remove_file(cut.join("summary.jsonl")).unwrap();

    let o = run(&["eval", "resume", "--out", cut.to_str().unwrap()]);
    assert_exit(&o, 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["executed"], 350);
    assert_eq!(fs::read(cut.join("summary.jsonl")).unwrap(), fs::read(full.join("summary.jsonl")).unwrap());
    assert_eq!(
        fs::read(cut.join("report/bundle.json")).unwrap(),
        fs::read(full.join("report/bundle.json")).unwrap()
    );
}

#[test]
fn incomplete_run_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("backend = \"builtin:mode\"\n{SMALL}"));
    let out = dir.path().join("mode");
    assert_exit(&run(&["eval", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let log = fs::read_to_string(out.join("trials.jsonl")).unwrap();
    fs::write(out.join("trials.jsonl"), log.lines().take(10).collect::<Vec<_>>().join("\n") + "\n").unwrap();
    assert_exit(&run(&["report", "table", "--run", out.to_str().unwrap()]), 4);
}

#[test]
fn mode_solves_meta_constant_at_every_n() {
    let dir = tempfile::tempdir().unwrap();
    let body = "backend = \"builtin:mode\"\ntrials_per_function = 4\n[filter]\nfunctions = [\"meta_constant\"]\n[bootstrap]\nreplicates = 50\n";
    let cfg = write_config(dir.path(), body);
    let out = dir.path().join("mc");
    assert_exit(&run(&["eval", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let summaries = read_summaries(&out.join("summary.jsonl")).unwrap();
    assert_eq!(summaries.len(), 8);
    assert!(summaries.iter().all(|s| s.overall == 1.0 && s.functions == 1));
    let boot = &summaries[0].stats[0];
    assert_eq!(boot.test, "cluster_bootstrap");
    assert_eq!(boot.flags, ["single_cluster"]);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "backend = \"builtin:mode\"\nshots = [8, 4]\ncolour = \"red\"\n");
    let o = run(&["eval", "run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    assert_exit(&o, 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    let cfg = write_config(dir.path(), "backend = \"builtin:mode\"\nshots = [8, 4]\n");
    let o = run(&["eval", "run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    assert_exit(&o, 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("shots[1]"));

    // a run directory cannot be reused for a different design
    let a = write_config(dir.path(), &format!("backend = \"builtin:mode\"\n{SMALL}"));
    let out = dir.path().join("reuse");
    assert_exit(&run(&["eval", "run", "--config", a.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let b = write_config(dir.path(), &format!("backend = \"builtin:mode\"\nmaster_seed = 9\n{SMALL}"));
    assert_exit(&run(&["eval", "run", "--config", b.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
}

#[test]
fn unreachable_backend_exits_3() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("backend = \"tcp://{addr}\"\n{SMALL}"));
    let o = run(&["eval", "run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    assert_exit(&o, 3);
}

#[test]
fn stdio_backend_through_mock_server() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("backend = \"builtin:mode\"\nmodality = \"genomic\"\n{SMALL}[filter]\nfunctions = [\"identity\", \"flip_bits\"]\n"));
    let server = format!("stdio:{} mock-server --mode echo-query --model-id echo-7b", env!("CARGO_BIN_EXE_bitinduct"));
    let out = dir.path().join("echo");
    let o = run(&["eval", "run", "--config", cfg.to_str().unwrap(), "--backend", &server, "--out", out.to_str().unwrap()]);
    assert_exit(&o, 0);
    let records = RecordLog::new(out.join("trials.jsonl")).read_all().unwrap();
    assert_eq!(records.len(), 12);
    assert!(records.iter().all(|r| r.model_id == "echo-7b"));
    for r in &records {
        assert_eq!(r.outcome.prediction, Some(r.outcome.trial.query));
        assert_eq!(r.outcome.correct, r.outcome.trial.function_id == "identity");
    }
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("backend = \"builtin:constant=00000000\"\n{SMALL}[filter]\nbitloads = [0]\n"));
    let o = bin()
        .args(["eval", "run", "--config", cfg.to_str().unwrap()])
        .env("BITINDUCT_OUTPUT_ROOT", dir.path())
        .output()
        .unwrap();
    assert_exit(&o, 0);
    assert!(dir.path().join("runs/builtin_constant_00000000/summary.jsonl").exists());
}

#[test]
fn stats_and_report_commands() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for (name, backend, params) in [("small", "random", 1e9), ("mid", "mode", 7e9), ("big", "oracle", 40e9)] {
        let body = format!(
            "backend = \"builtin:{backend}\"\n{SMALL}[model]\nname = \"{name}\"\nfamily = \"toy\"\nparams = {params}\n"
        );
        let cfg = write_config(dir.path(), &body);
        let out = dir.path().join(name);
        assert_exit(&run(&["eval", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
        runs.push(out);
    }
    let r: Vec<&str> = runs.iter().map(|p| p.to_str().unwrap()).collect();

    let o = run(&["stats", "bootstrap", "--run", r[0], "--replicates", "100"]);
    assert_exit(&o, 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["bootstrap"].as_array().unwrap().len(), 3);

    let o = run(&["stats", "regress", "--run", r[0], "--run", r[1], "--run", r[2], "--covariate", "params"]);
    assert_exit(&o, 0);
    let fits: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(fits.as_array().unwrap().len(), 3);
    assert!(fits[0]["fit"]["slope"].as_f64().unwrap() > 0.0);

    let o = run(&["stats", "regress", "--run", r[2]]);
    assert_exit(&o, 0);
    let fits: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(fits[0]["fit"]["one_sided_p"], 0.5);

    let o = run(&["stats", "compare", "--run", r[2]]);
    assert_exit(&o, 0);
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(rows.as_array().unwrap().iter().all(|row| row["one_sided_p"].as_f64().unwrap() < 0.5));
    assert_exit(&run(&["stats", "compare", "--run", r[2], "--baseline-run", r[0]]), 0);

    let o = run(&["report", "table", "--run", r[0], "--run", r[1], "--run", r[2], "--format", "markdown"]);
    assert_exit(&o, 0);
    assert!(stdout(&o).contains("| big | **100.0**±0.0 |"), "{}", stdout(&o));

    let plots = dir.path().join("plots");
    let o = run(&["report", "plots", "--run", r[0], "--run", r[2], "--out", plots.to_str().unwrap(), "--bar-shots", "4"]);
    assert_exit(&o, 0);
    let series = fs::read_to_string(plots.join("plots/accuracy_vs_shots.tsv")).unwrap();
    let oracle_rows: Vec<&str> = series.lines().filter(|l| l.starts_with("big\t")).collect();
    assert_eq!(oracle_rows.len(), 3);
    assert!(oracle_rows.iter().all(|l| l.split('\t').nth(4) == Some("1.000000")));
    let bars = fs::read_to_string(plots.join("plots/bars_n4.tsv")).unwrap();
    assert_eq!(bars.lines().count(), 3);
    for name in ["accuracy_vs_bitload.tsv", "bitdiversity.tsv", "understandable_mistakes.tsv", "functions_n4.tsv"] {
        assert!(plots.join("plots").join(name).exists(), "{name}");
    }
}

#[test]
fn table_from_entries_file() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/table3.csv");
    let o = run(&["report", "table", "--entries", fixture.to_str().unwrap()]);
    assert_exit(&o, 0);
    let text = stdout(&o);
    assert!(text.contains("41.1±3.3*"));
    assert_eq!(text.lines().count(), 10);
}
