use rand::Rng;

use super::StatsError;
use crate::bitstring::Bitstring;
use crate::eval::seeds::{stream_rng, Stream};
use crate::eval::Trial;
use crate::taskgen::{TaskFunction, TaskRegistry};

/// Uniform choice among `len` tied candidates, driven by the trial seed.
pub fn tie_break_index(seed: u64, len: usize) -> usize {
    assert!(len > 0, "tie-break over an empty candidate set");
    stream_rng(seed, Stream::TieBreak).random_range(0..len)
}

/// Most frequent demonstration outputs in increasing order. With no
/// demonstrations every string ties.
pub fn mode_candidates(pairs: &[(Bitstring, Bitstring)], k: usize) -> Vec<Bitstring> {
    let mut counts = vec![0u32; 1 << k];
    for (_, y) in pairs {
        counts[y.value() as usize] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    Bitstring::all(k).filter(|y| counts[y.value() as usize] == best).collect()
}

/// Mode-baseline prediction for a trial: argmax over demonstration outputs
/// computed from the truth table, ties broken with the trial seed.
pub fn mode_prediction(f: &TaskFunction, demos: &[Bitstring], seed: u64) -> Bitstring {
    let pairs: Vec<_> = demos.iter().map(|&x| (x, f.apply(x))).collect();
    let candidates = mode_candidates(&pairs, f.k());
    candidates[tie_break_index(seed, candidates.len())]
}

/// Fraction of trials the mode baseline answers correctly.
pub fn mode_baseline_accuracy(registry: &TaskRegistry, trials: &[Trial]) -> Result<f64, StatsError> {
    let mut hits = 0usize;
    for t in trials {
        let f = registry.get(&t.function_id).ok_or_else(|| StatsError::UnknownFunction(t.function_id.clone()))?;
        if mode_prediction(f, &t.demos, t.seed) == f.apply(t.query) {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::Modality;
    use crate::taskgen::build_registry;

    fn b(s: &str) -> Bitstring {
        s.parse().unwrap()
    }

    #[test]
    fn single_demo_is_its_own_mode() {
        let reg = build_registry(0, 8).unwrap();
        let f = reg.get("swap_pairs").unwrap();
        for seed in 0..20 {
            assert_eq!(mode_prediction(f, &[b("10010011")], seed), b("01100011"));
        }
    }

    #[test]
    fn meta_constant_baseline_is_perfect() {
        let reg = build_registry(0, 8).unwrap();
        let f = reg.get("meta_constant").unwrap();
        let trials: Vec<_> = (0..50).map(|t| Trial::generate(f, 3, t, 0, Modality::Genomic).unwrap()).collect();
        assert_eq!(mode_baseline_accuracy(&reg, &trials).unwrap(), 1.0);
    }

    #[test]
    fn candidates_tie_sorted() {
        let pairs = [(b("00"), b("11")), (b("01"), b("01")), (b("10"), b("11")), (b("11"), b("01"))];
        assert_eq!(mode_candidates(&pairs, 2), vec![b("01"), b("11")]);
        assert_eq!(mode_candidates(&[], 2).len(), 4);
    }

    #[test]
    fn unknown_function_is_reported() {
        let reg = build_registry(0, 8).unwrap();
        let sub = reg.filtered(|f| f.id() == "identity");
        let f = reg.get("rotl1").unwrap();
        let t = Trial::generate(f, 1, 0, 0, Modality::Genomic).unwrap();
        assert!(matches!(mode_baseline_accuracy(&sub, &[t]), Err(StatsError::UnknownFunction(_))));
    }
}
