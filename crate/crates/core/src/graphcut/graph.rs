use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node costs and smoothness structure of a single-surface graph.
///
/// Node indices are 0-based: node `j` of a column is the `(j + 1)`-th node
/// counted from the innermost end.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnGraph {
    costs: Vec<Vec<f64>>,
    adjacency: Vec<(usize, usize)>,
    delta: usize,
}

/// Scale turning real costs into the integers the max-flow works on.
pub const COST_SCALE: f64 = 1e6;

impl ColumnGraph {
    /// Validates and normalises the graph: every column has the same
    /// non-zero length, costs are finite, adjacency pairs reference
    /// existing columns. Pairs are stored once as `(a, b)` with `a < b`.
    pub fn new(costs: Vec<Vec<f64>>, adjacency: Vec<(usize, usize)>, delta: usize) -> Result<Self> {
        let Some(first) = costs.first() else {
            return Err(Error::InvalidGraph("graph has no columns".into()));
        };
        let length = first.len();
        if length == 0 {
            return Err(Error::InvalidGraph("columns are empty".into()));
        }
        for (k, col) in costs.iter().enumerate() {
            if col.len() != length {
                return Err(Error::InvalidGraph(format!(
                    "column {k} has {} nodes, expected {length}",
                    col.len()
                )));
            }
            if let Some(j) = col.iter().position(|c| !c.is_finite()) {
                return Err(Error::InvalidGraph(format!(
                    "cost ({k}, {j}) is not finite"
                )));
            }
        }
        let mut pairs = Vec::with_capacity(adjacency.len());
        for (a, b) in adjacency {
            if a >= costs.len() || b >= costs.len() {
                return Err(Error::InvalidGraph(format!(
                    "adjacency ({a}, {b}) references a missing column"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!(
                    "column {a} is adjacent to itself"
                )));
            }
            pairs.push((a.min(b), a.max(b)));
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Self {
            costs,
            adjacency: pairs,
            delta,
        })
    }

    pub fn column_count(&self) -> usize {
        self.costs.len()
    }

    pub fn column_length(&self) -> usize {
        self.costs[0].len()
    }

    pub fn costs(&self) -> &[Vec<f64>] {
        &self.costs
    }

    pub fn cost(&self, column: usize, node: usize) -> f64 {
        self.costs[column][node]
    }

    pub fn adjacency(&self) -> &[(usize, usize)] {
        &self.adjacency
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn with_delta(mut self, delta: usize) -> Self {
        self.delta = delta;
        self
    }

    /// Adds `shift` to every cost of one column.
    pub fn shift_column(&mut self, column: usize, shift: f64) {
        for c in &mut self.costs[column] {
            *c += shift;
        }
    }

    /// First adjacent pair whose chosen nodes differ by more than `delta`.
    pub fn smoothness_violation(&self, boundary: &[usize]) -> Option<(usize, usize)> {
        self.adjacency
            .iter()
            .copied()
            .find(|&(a, b)| boundary[a].abs_diff(boundary[b]) > self.delta)
    }

    pub fn is_feasible(&self, boundary: &[usize]) -> bool {
        boundary.len() == self.column_count()
            && boundary.iter().all(|&j| j < self.column_length())
            && self.smoothness_violation(boundary).is_none()
    }

    /// `Σ_k c[k][j_k]`, summed in column order.
    pub fn total_cost(&self, boundary: &[usize]) -> f64 {
        boundary
            .iter()
            .enumerate()
            .map(|(k, &j)| self.costs[k][j])
            .sum()
    }

    /// Total cost on the integer grid the max-flow solves exactly:
    /// `Σ_k round_half_even(c[k][j_k] · 10⁶)`.
    pub fn scaled_total_cost(&self, boundary: &[usize]) -> i128 {
        boundary
            .iter()
            .enumerate()
            .map(|(k, &j)| scaled_cost_wide(self.costs[k][j]))
            .sum()
    }
}

/// `round_half_even(c · 10⁶)`; `None` when the result does not fit in i64.
pub fn checked_scale_cost(cost: f64) -> Option<i64> {
    let v = (cost * COST_SCALE).round_ties_even();
    // 2^62 keeps every later sum of a few terms far from overflow checks
    if v.is_finite() && v.abs() < 4.611_686_018_427_388e18 {
        Some(v as i64)
    } else {
        None
    }
}

/// `round_half_even(c · 10⁶)` in a wide integer (saturating for costs
/// beyond ±1.7·10³² — far outside anything the flow solver accepts).
pub fn scaled_cost_wide(cost: f64) -> i128 {
    (cost * COST_SCALE).round_ties_even() as i128
}

/// Optimal (or candidate) surface: one chosen node per column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSolution {
    pub delta: usize,
    /// Chosen node per column, 0-based from the innermost node.
    pub boundary_index: Vec<usize>,
    pub total_cost: f64,
}

impl SurfaceSolution {
    /// Builds a solution for `graph`, checking the index range and the
    /// smoothness bound.
    pub fn for_graph(graph: &ColumnGraph, boundary_index: Vec<usize>) -> Result<Self> {
        if boundary_index.len() != graph.column_count() {
            return Err(Error::LengthMismatch(
                boundary_index.len(),
                graph.column_count(),
            ));
        }
        if let Some(k) = boundary_index
            .iter()
            .position(|&j| j >= graph.column_length())
        {
            return Err(Error::InvalidGraph(format!(
                "column {k}: node {} out of range",
                boundary_index[k]
            )));
        }
        if let Some((a, b)) = graph.smoothness_violation(&boundary_index) {
            return Err(Error::SmoothnessViolation { a, b });
        }
        Ok(Self {
            delta: graph.delta(),
            total_cost: graph.total_cost(&boundary_index),
            boundary_index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ColumnGraph::new(vec![], vec![], 1).is_err());
        assert!(ColumnGraph::new(vec![vec![]], vec![], 1).is_err());
        assert!(ColumnGraph::new(vec![vec![1.0], vec![1.0, 2.0]], vec![], 1).is_err());
        assert!(ColumnGraph::new(vec![vec![f64::NAN]], vec![], 1).is_err());
        assert!(ColumnGraph::new(vec![vec![1.0]], vec![(0, 1)], 1).is_err());
        assert!(ColumnGraph::new(vec![vec![1.0]], vec![(0, 0)], 1).is_err());
        let g = ColumnGraph::new(vec![vec![0.0]; 3], vec![(1, 0), (0, 1), (2, 1)], 0).unwrap();
        assert_eq!(g.adjacency(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn solution_checks_and_json() {
        let g = ColumnGraph::new(vec![vec![0.5, -1.0, 2.0]; 2], vec![(0, 1)], 1).unwrap();
        let s = SurfaceSolution::for_graph(&g, vec![1, 2]).unwrap();
        assert_eq!(s.total_cost, 1.0);
        assert!(matches!(
            SurfaceSolution::for_graph(&g, vec![0, 2]),
            Err(Error::SmoothnessViolation { a: 0, b: 1 })
        ));
        assert!(SurfaceSolution::for_graph(&g, vec![0, 3]).is_err());
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(
            json,
            serde_json::json!({"delta": 1, "boundary_index": [1, 2], "total_cost": 1.0})
        );
    }

    #[test]
    fn scaling_rounds_half_even() {
        assert_eq!(checked_scale_cost(0.0000005), Some(0));
        assert_eq!(checked_scale_cost(0.0000015), Some(2));
        assert_eq!(checked_scale_cost(0.0000025), Some(2));
        assert_eq!(checked_scale_cost(-0.25), Some(-250_000));
        assert_eq!(checked_scale_cost(1e300), None);
    }
}
