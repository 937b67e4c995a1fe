use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::eval::seeds::stream_rng_raw;

pub const DEFAULT_REPLICATES: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub point_estimate: f64,
    pub standard_error: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Fewer than two clusters: resampling clusters cannot capture
    /// between-function variation.
    pub degenerate: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Two-stage cluster bootstrap of the mean-of-cluster-means.
///
/// Each replicate draws clusters with replacement, then draws outcomes
/// with replacement within every drawn cluster, and recomputes the
/// aggregate. Replicate `r` uses ChaCha stream `r` of `seed`, so the
/// result does not depend on scheduling.
pub fn cluster_bootstrap_se(groups: &[Vec<f64>], replicates: usize, seed: u64) -> Result<BootstrapResult, StatsError> {
    if groups.is_empty() {
        return Err(StatsError::NoGroups);
    }
    if let Some(i) = groups.iter().position(Vec::is_empty) {
        return Err(StatsError::EmptyGroup(i));
    }
    if replicates == 0 {
        return Err(StatsError::ZeroReplicates);
    }
    let point_estimate = groups.iter().map(|g| mean(g)).sum::<f64>() / groups.len() as f64;
    let c = groups.len();
    let stats: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng_raw(seed, r as u64);
            let mut total = 0.0;
            for _ in 0..c {
                let g = &groups[rng.random_range(0..c)];
                let m = g.len();
                let s: f64 = (0..m).map(|_| g[rng.random_range(0..m)]).sum();
                total += s / m as f64;
            }
            total / c as f64
        })
        .collect();
    let standard_error = if replicates > 1 {
        let mu = mean(&stats);
        (stats.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / (replicates - 1) as f64).sqrt()
    } else {
        0.0
    };
    if c < 2 {
        log::warn!("cluster bootstrap over a single cluster; standard error is not meaningful");
    }
    Ok(BootstrapResult { point_estimate, standard_error, replicates, seed, degenerate: c < 2 })
}
