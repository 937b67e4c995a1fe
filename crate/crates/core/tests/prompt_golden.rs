//! Pins trial generation and prompt rendering against a checked-in file.
//! Regenerate with `BITINDUCT_BLESS=1 cargo test --test prompt_golden`.

use std::path::PathBuf;

use bitinduct::encoding::{encode_trial, Modality};
use bitinduct::eval::Trial;
use bitinduct::taskgen::build_registry;
use serde::{Deserialize, Serialize};

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct Golden {
    master_seed: u64,
    #[serde(flatten)]
    trial: Trial,
    prompt: String,
    completion: String,
}

const FUNCTIONS: [&str; 5] = ["identity", "flip_bits", "shift_right_zero", "flip_bits->right_half", "rotl1"];

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/prompts.jsonl")
}

fn render() -> Vec<Golden> {
    let reg = build_registry(0, 8).unwrap();
    let mut out = Vec::new();
    for (i, id) in FUNCTIONS.iter().enumerate() {
        let f = reg.get(id).unwrap();
        for (modality, shots) in [(Modality::Linguistic, 1), (Modality::Genomic, 3)] {
            let master_seed = 1000 + i as u64;
            let trial = Trial::generate(f, shots, 0, master_seed, modality).unwrap();
            let prompt = encode_trial(f, &trial.demos, trial.query, &trial.scheme).unwrap().text;
            let completion = trial.scheme.encode(&f.apply(trial.query));
            out.push(Golden { master_seed, trial, prompt, completion });
        }
    }
    out
}

/// Builds the prompt from the recorded symbols without the library encoder.
fn reference_prompt(g: &Golden, outputs: &[String]) -> String {
    let sym = |bits: String| -> String {
        bits.chars().map(|c| if c == '0' { g.trial.scheme.zero } else { g.trial.scheme.one }).collect()
    };
    let mut parts: Vec<String> =
        g.trial.demos.iter().zip(outputs).map(|(x, y)| sym(x.to_string()) + &sym(y.clone())).collect();
    parts.push(sym(g.trial.query.to_string()));
    parts.join(&g.trial.scheme.separator.to_string())
}

#[test]
fn prompts_match_golden_file() {
    let rendered = render();
    if std::env::var_os("BITINDUCT_BLESS").is_some() {
        let text: String = rendered.iter().map(|g| serde_json::to_string(g).unwrap() + "\n").collect();
        std::fs::write(fixture(), text).unwrap();
    }
    let text = std::fs::read_to_string(fixture()).unwrap();
    let golden: Vec<Golden> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(golden, rendered);

    let reg = build_registry(0, 8).unwrap();
    for g in &golden {
        let f = reg.get(&g.trial.function_id).unwrap();
        let outputs: Vec<String> = g.trial.demos.iter().map(|&x| f.apply(x).to_string()).collect();
        assert_eq!(g.prompt, reference_prompt(g, &outputs));
        assert_eq!(g.prompt.chars().count(), g.trial.shots * 17 + 8);
    }
}
