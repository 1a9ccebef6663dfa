//! Minimum-closed-set flow network of a column graph.

use super::graph::{checked_scale_cost, ColumnGraph};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowNetwork {
    node_count: usize,
    arcs: Vec<Arc>,
    source: usize,
    sink: usize,
}

impl FlowNetwork {
    /// Checks the network invariants: valid endpoints, non-negative
    /// capacities, nothing enters the source or leaves the sink.
    pub fn new(node_count: usize, arcs: Vec<Arc>, source: usize, sink: usize) -> Result<Self> {
        if source >= node_count || sink >= node_count || source == sink {
            return Err(Error::InvalidGraph(format!(
                "source {source} / sink {sink} invalid for {node_count} nodes"
            )));
        }
        for (i, a) in arcs.iter().enumerate() {
            if a.from >= node_count || a.to >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "arc {i} has an invalid endpoint"
                )));
            }
            if a.capacity < 0 {
                return Err(Error::InvalidGraph(format!(
                    "arc {i} has negative capacity"
                )));
            }
            if a.to == source || a.from == sink {
                return Err(Error::InvalidGraph(format!(
                    "arc {i} enters the source or leaves the sink"
                )));
            }
        }
        Ok(Self {
            node_count,
            arcs,
            source,
            sink,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    /// Arcs touching the source or the sink.
    pub fn terminal_arc_count(&self) -> usize {
        self.arcs
            .iter()
            .filter(|a| a.from == self.source || a.to == self.sink)
            .count()
    }
}

/// Node id of `(column, node)` in the network of a graph with columns of
/// length `length`.
pub fn node_id(length: usize, column: usize, node: usize) -> usize {
    column * length + node
}

/// Standard reduction of the single-surface problem to a minimum closed
/// set, solved as a minimum s-t cut.
///
/// Costs are scaled to integers first, `C = round_half_even(c · 10⁶)`.
/// Node weights are `w[k][0] = C[k][0] − M` with `M = 1 + Σ|C|` (a uniform
/// shift of the innermost row that makes every nonempty closed set cheaper
/// than the empty one) and `w[k][j] = C[k][j] − C[k][j−1]`. Infinite arcs
/// `(k, j) → (k, j−1)` keep each column's selection a prefix, and
/// `(k, j) → (k', max(0, j − Δ))` in both directions bound the jump
/// between adjacent columns. Negative weights hang off the source, positive
/// weights feed the sink, and "infinite" is one more than the sum of all
/// finite capacities.
pub fn build_flow_network(graph: &ColumnGraph) -> Result<FlowNetwork> {
    let k_count = graph.column_count();
    let length = graph.column_length();
    let scaled: Vec<Vec<i64>> = graph
        .costs()
        .iter()
        .map(|col| {
            col.iter()
                .map(|&c| checked_scale_cost(c))
                .collect::<Option<Vec<_>>>()
        })
        .collect::<Option<Vec<_>>>()
        .ok_or(Error::CapacityOverflow)?;

    let mut abs_sum: i64 = 1;
    for &c in scaled.iter().flatten() {
        abs_sum = abs_sum
            .checked_add(c.abs())
            .ok_or(Error::CapacityOverflow)?;
    }
    let shift = abs_sum;

    let source = k_count * length;
    let sink = source + 1;
    let mut terminal = Vec::with_capacity(k_count * length);
    let mut finite_sum: i64 = 0;
    for (k, col) in scaled.iter().enumerate() {
        for j in 0..length {
            let w = if j == 0 {
                col[0].checked_sub(shift)
            } else {
                col[j].checked_sub(col[j - 1])
            }
            .ok_or(Error::CapacityOverflow)?;
            let id = node_id(length, k, j);
            let arc = match w.cmp(&0) {
                std::cmp::Ordering::Less => Arc {
                    from: source,
                    to: id,
                    capacity: w.checked_neg().ok_or(Error::CapacityOverflow)?,
                },
                std::cmp::Ordering::Greater => Arc {
                    from: id,
                    to: sink,
                    capacity: w,
                },
                std::cmp::Ordering::Equal => continue,
            };
            finite_sum = finite_sum
                .checked_add(arc.capacity)
                .ok_or(Error::CapacityOverflow)?;
            terminal.push(arc);
        }
    }
    let infinity = finite_sum.checked_add(1).ok_or(Error::CapacityOverflow)?;

    let delta = graph.delta();
    let mut arcs = terminal;
    for k in 0..k_count {
        for j in 1..length {
            arcs.push(Arc {
                from: node_id(length, k, j),
                to: node_id(length, k, j - 1),
                capacity: infinity,
            });
        }
    }
    for &(a, b) in graph.adjacency() {
        for (from, to) in [(a, b), (b, a)] {
            for j in 0..length {
                arcs.push(Arc {
                    from: node_id(length, from, j),
                    to: node_id(length, to, j.saturating_sub(delta)),
                    capacity: infinity,
                });
            }
        }
    }
    FlowNetwork::new(k_count * length + 2, arcs, source, sink)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_of_small_graph() {
        let g =
            ColumnGraph::new(vec![vec![-1.0, -2.0, -0.5], vec![0.0; 3]], vec![(0, 1)], 1).unwrap();
        let net = build_flow_network(&g).unwrap();
        assert_eq!(net.node_count(), 8);
        assert!(net.terminal_arc_count() <= 6);
        // 2 columns × 2 intra arcs + 2 directions × 3 inter arcs
        let infinite = net
            .arcs()
            .iter()
            .filter(|a| a.from != 6 && a.to != 7)
            .count();
        assert_eq!(infinite, 4 + 6);
        assert!(net.arcs().iter().all(|a| a.capacity >= 0));
    }

    #[test]
    fn overflow_is_reported() {
        let g = ColumnGraph::new(vec![vec![1e12, -1e12]; 4], vec![], 0).unwrap();
        assert!(matches!(
            build_flow_network(&g),
            Err(Error::CapacityOverflow)
        ));
        let g = ColumnGraph::new(vec![vec![1e300]], vec![], 0).unwrap();
        assert!(matches!(
            build_flow_network(&g),
            Err(Error::CapacityOverflow)
        ));
    }

    #[test]
    fn invalid_networks_rejected() {
        let arc = |from, to, capacity| Arc { from, to, capacity };
        assert!(FlowNetwork::new(2, vec![arc(0, 1, -1)], 0, 1).is_err());
        assert!(FlowNetwork::new(2, vec![arc(1, 0, 1)], 0, 1).is_err());
        assert!(FlowNetwork::new(2, vec![arc(0, 2, 1)], 0, 1).is_err());
        assert!(FlowNetwork::new(2, vec![], 0, 0).is_err());
    }
}
