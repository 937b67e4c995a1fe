use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::taskgen::TaskRegistry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`; zero for singletons.
    pub se: f64,
    pub count: usize,
    pub singleton: bool,
}

pub fn summarize_group(values: &[f64]) -> GroupSummary {
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count as f64;
    let se = if count > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        (var / count as f64).sqrt()
    } else {
        0.0
    };
    GroupSummary { mean, se, count, singleton: count == 1 }
}

/// Mean and standard error of per-function accuracies within each BitLoad.
pub fn aggregate_by_bitload(
    per_function: &BTreeMap<String, f64>,
    registry: &TaskRegistry,
) -> Result<BTreeMap<u32, GroupSummary>, StatsError> {
    let mut groups: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (id, acc) in per_function {
        let f = registry.get(id).ok_or_else(|| StatsError::UnknownFunction(id.clone()))?;
        groups.entry(f.bitload()).or_default().push(*acc);
    }
    Ok(groups.into_iter().map(|(bl, v)| (bl, summarize_group(&v))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskgen::{build_registry, REFERENCE_BITLOADS};
    use std::collections::BTreeSet;

    #[test]
    fn groups_follow_published_bitloads() {
        let reg = build_registry(0, 8).unwrap();
        let per: BTreeMap<String, f64> = reg.iter().map(|f| (f.id().to_string(), 1.0)).collect();
        let groups = aggregate_by_bitload(&per, &reg).unwrap();
        let published: BTreeSet<u32> = REFERENCE_BITLOADS.iter().map(|(_, b)| *b).collect();
        assert_eq!(groups.keys().copied().collect::<BTreeSet<_>>(), published);
        assert_eq!(groups.keys().copied().collect::<Vec<_>>(), [0, 1, 2, 3, 4, 6, 7, 8]);
        assert!(groups.values().all(|g| g.mean == 1.0 && g.se == 0.0));
        assert_eq!(groups.values().map(|g| g.count).sum::<usize>(), 100);
    }

    #[test]
    fn singleton_and_unknown() {
        let g = summarize_group(&[0.25]);
        assert!(g.singleton);
        assert_eq!(g.se, 0.0);
        let g = summarize_group(&[0.0, 1.0]);
        assert_eq!(g.mean, 0.5);
        assert!((g.se - 0.5).abs() < 1e-12);
        let reg = build_registry(0, 8).unwrap();
        let per = BTreeMap::from([("nope".to_string(), 0.5)]);
        assert!(matches!(aggregate_by_bitload(&per, &reg), Err(StatsError::UnknownFunction(_))));
    }
}
