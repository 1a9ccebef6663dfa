//! Node costs along graph columns.

use rayon::prelude::*;

use super::graph::ColumnGraph;
use crate::error::Result;
use crate::surface::ColumnSet;
use crate::volume::{ProbabilityVolume, ScalarVolume, Volume};

/// Probability cost ("eq1") on one column, innermost node first:
/// `c_j = −Σ_{i ≤ j} (p_i − 0.5)`.
pub fn eq1_column(probabilities: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probabilities
        .iter()
        .map(|&p| {
            acc -= p - 0.5;
            acc
        })
        .collect()
}

/// Probability at every column node; nodes outside the hull of voxel
/// centers count as background (`p = 0`).
pub fn sample_probabilities(columns: &ColumnSet, prob: &ProbabilityVolume) -> Vec<Vec<f64>> {
    columns
        .columns
        .par_iter()
        .map(|col| {
            col.iter()
                .map(|&x| prob.grid().sample(x).unwrap_or(0.0))
                .collect()
        })
        .collect()
}

/// Probability costs from trilinearly sampled probabilities.
pub fn eq1_costs(
    columns: &ColumnSet,
    prob: &ProbabilityVolume,
    delta: usize,
) -> Result<ColumnGraph> {
    let costs = sample_probabilities(columns, prob)
        .into_par_iter()
        .map(|p| eq1_column(&p))
        .collect();
    ColumnGraph::new(costs, columns.adjacency.clone(), delta)
}

/// Inverted gradient magnitude of one intensity profile with node spacing
/// `h`: central differences inside, one-sided at the two ends, then
/// `c_j = max |g| − |g_j|`.
pub fn gradient_column(profile: &[f64], h: f64) -> Vec<f64> {
    let n = profile.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let g: Vec<f64> = (0..n)
        .map(|j| {
            let (lo, hi) = (j.saturating_sub(1), (j + 1).min(n - 1));
            ((profile[hi] - profile[lo]) / ((hi - lo) as f64 * h)).abs()
        })
        .collect();
    let max = g.iter().cloned().fold(0.0, f64::max);
    g.into_iter().map(|v| max - v).collect()
}

/// Baseline costs from inverted intensity gradients along the columns.
/// Intensity is sampled with edge replication beyond the volume border.
pub fn gradient_costs(
    columns: &ColumnSet,
    intensity: &ScalarVolume,
    delta: usize,
) -> Result<ColumnGraph> {
    let costs = columns
        .columns
        .par_iter()
        .map(|col| {
            let profile: Vec<f64> = col
                .iter()
                .map(|&x| intensity.grid().sample_clamped(x))
                .collect();
            gradient_column(&profile, columns.spacing)
        })
        .collect();
    ColumnGraph::new(costs, columns.adjacency.clone(), delta)
}
