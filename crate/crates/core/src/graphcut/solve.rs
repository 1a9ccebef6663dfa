//! Surface recovery from a minimum cut, and the exhaustive oracle.

use super::graph::{scaled_cost_wide, ColumnGraph, SurfaceSolution};
use super::maxflow::max_flow;
use super::network::{build_flow_network, node_id};
use crate::error::{Error, Result};

/// Leaf budget of [`brute_force_surface`].
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

/// Upper envelope of the closed set: per column, the highest node on the
/// source side of the cut.
pub fn extract_surface(source_side: &[bool], graph: &ColumnGraph) -> Result<SurfaceSolution> {
    let length = graph.column_length();
    let mut boundary = Vec::with_capacity(graph.column_count());
    for k in 0..graph.column_count() {
        let top = (0..length)
            .rev()
            .find(|&j| {
                source_side
                    .get(node_id(length, k, j))
                    .copied()
                    .unwrap_or(false)
            })
            .ok_or(Error::EmptyColumnInCut { column: k })?;
        boundary.push(top);
    }
    SurfaceSolution::for_graph(graph, boundary)
}

/// Globally optimal surface via max-flow.
pub fn solve_surface(graph: &ColumnGraph) -> Result<SurfaceSolution> {
    let network = build_flow_network(graph)?;
    let flow = max_flow(&network);
    extract_surface(&flow.source_side, graph)
}

/// Exhaustive search over all feasible surfaces in lexicographic order of
/// `(j_0, …, j_{K−1})`; only a strictly cheaper surface replaces the
/// incumbent, so ties resolve to the lexicographically smallest. Costs are
/// compared on the same integer grid the flow solver uses.
pub fn brute_force_surface(graph: &ColumnGraph) -> Result<SurfaceSolution> {
    let k_count = graph.column_count();
    let length = graph.column_length();
    let mut earlier: Vec<Vec<usize>> = vec![Vec::new(); k_count];
    for &(a, b) in graph.adjacency() {
        earlier[b].push(a);
    }
    let scaled: Vec<Vec<i128>> = graph
        .costs()
        .iter()
        .map(|col| col.iter().map(|&c| scaled_cost_wide(c)).collect())
        .collect();

    let delta = graph.delta();
    let mut choice = vec![0usize; k_count];
    let mut best: Option<(i128, Vec<usize>)> = None;
    let mut leaves: u64 = 0;
    // iterative depth-first enumeration; `next[k]` is the next node to try
    let mut next = vec![0usize; k_count + 1];
    let mut partial = vec![0i128; k_count + 1];
    let mut depth = 0usize;
    loop {
        if depth == k_count {
            leaves += 1;
            if leaves > BRUTE_FORCE_LIMIT {
                return Err(Error::InstanceTooLarge(format!(
                    "more than {BRUTE_FORCE_LIMIT} feasible surfaces"
                )));
            }
            let total = partial[k_count];
            if best.as_ref().is_none_or(|(b, _)| total < *b) {
                best = Some((total, choice.clone()));
            }
            depth -= 1;
            continue;
        }
        let j = next[depth];
        if j == length {
            if depth == 0 {
                break;
            }
            depth -= 1;
            continue;
        }
        next[depth] += 1;
        if earlier[depth]
            .iter()
            .all(|&a| choice[a].abs_diff(j) <= delta)
        {
            choice[depth] = j;
            partial[depth + 1] = partial[depth] + scaled[depth][j];
            depth += 1;
            next[depth] = 0;
        }
    }
    let (_, boundary) = best.expect("an all-equal surface is always feasible");
    SurfaceSolution::for_graph(graph, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(costs: Vec<Vec<f64>>, adjacency: Vec<(usize, usize)>, delta: usize) -> ColumnGraph {
        ColumnGraph::new(costs, adjacency, delta).unwrap()
    }

    #[test]
    fn single_column_example() {
        let g = graph(vec![vec![-1.0, -2.0, -0.5]], vec![], 2);
        let s = solve_surface(&g).unwrap();
        // the second node, counted 1-based
        assert_eq!(s.boundary_index, vec![1]);
        assert_eq!(s.total_cost, -2.0);
        assert_eq!(brute_force_surface(&g).unwrap(), s);
    }

    #[test]
    fn two_column_example() {
        let g = graph(
            vec![vec![0.2, -0.5, 0.1], vec![0.3, -0.2, -0.4]],
            vec![(0, 1)],
            1,
        );
        let s = brute_force_surface(&g).unwrap();
        assert_eq!(s.boundary_index, vec![1, 2]);
        assert!((s.total_cost + 0.9).abs() < 1e-12);
        assert_eq!(solve_surface(&g).unwrap().boundary_index, vec![1, 2]);
    }

    #[test]
    fn zero_delta_forces_flat_surface() {
        let g = graph(
            vec![vec![0.0, -1.0, 0.0], vec![-3.0, 0.0, 0.5]],
            vec![(0, 1)],
            0,
        );
        let s = solve_surface(&g).unwrap();
        assert_eq!(s.boundary_index[0], s.boundary_index[1]);
        assert_eq!(s.boundary_index, vec![0, 0]);
        assert_eq!(brute_force_surface(&g).unwrap().boundary_index, vec![0, 0]);
    }

    #[test]
    fn all_zero_costs_give_feasible_zero_surface() {
        let g = graph(
            vec![vec![0.0; 5]; 4],
            vec![(0, 1), (1, 2), (2, 3), (3, 0)],
            1,
        );
        let s = solve_surface(&g).unwrap();
        assert!(g.is_feasible(&s.boundary_index));
        assert_eq!(s.total_cost, 0.0);
    }

    #[test]
    fn missing_column_in_cut_is_an_error() {
        let g = graph(vec![vec![0.0; 2]; 2], vec![], 1);
        assert!(matches!(
            extract_surface(&[true, true, false, false], &g),
            Err(Error::EmptyColumnInCut { column: 1 })
        ));
    }

    #[test]
    fn oversized_instances_are_refused() {
        let g = graph(vec![vec![0.0; 10]; 8], vec![], 9);
        assert!(matches!(
            brute_force_surface(&g),
            Err(Error::InstanceTooLarge(_))
        ));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    /// Random graph on a path or cycle with costs on the 10⁻⁶ grid.
    fn random_graph() -> impl Strategy<Value = ColumnGraph> {
        (1usize..=5, 2usize..=6, 0usize..=3, any::<bool>()).prop_flat_map(|(k, l, delta, cycle)| {
            prop::collection::vec(prop::collection::vec(-1_000_000i64..=1_000_000, l), k).prop_map(
                move |raw| {
                    let costs = raw
                        .into_iter()
                        .map(|col| col.into_iter().map(|c| c as f64 / 1e6).collect())
                        .collect();
                    let mut adjacency: Vec<(usize, usize)> = (1..k).map(|i| (i - 1, i)).collect();
                    if cycle && k > 2 {
                        adjacency.push((k - 1, 0));
                    }
                    ColumnGraph::new(costs, adjacency, delta).unwrap()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn flow_matches_brute_force(g in random_graph()) {
            let flow = solve_surface(&g).unwrap();
            let oracle = brute_force_surface(&g).unwrap();
            prop_assert!(g.is_feasible(&flow.boundary_index));
            prop_assert_eq!(
                g.scaled_total_cost(&flow.boundary_index),
                g.scaled_total_cost(&oracle.boundary_index)
            );
        }

        #[test]
        fn per_column_shift_keeps_the_surface(
            g in random_graph(),
            column in 0usize..5,
            shift in -3_000_000i64..=3_000_000,
        ) {
            let column = column % g.column_count();
            let before = solve_surface(&g).unwrap();
            let mut shifted = g.clone();
            shifted.shift_column(column, shift as f64 / 1e6);
            let after = solve_surface(&shifted).unwrap();
            prop_assert_eq!(&before.boundary_index, &after.boundary_index);
            prop_assert!((after.total_cost - before.total_cost - shift as f64 / 1e6).abs() < 1e-9);
        }

        #[test]
        fn vacuous_delta_gives_independent_argmins(g in random_graph()) {
            let g = g.clone().with_delta(g.column_length() - 1);
            let s = brute_force_surface(&g).unwrap();
            let independent: Vec<usize> = g
                .costs()
                .iter()
                .map(|col| (0..col.len()).min_by(|&a, &b| col[a].total_cmp(&col[b])).unwrap())
                .collect();
            prop_assert_eq!(&s.boundary_index, &independent);
            prop_assert_eq!(
                g.scaled_total_cost(&solve_surface(&g).unwrap().boundary_index),
                g.scaled_total_cost(&independent)
            );
        }
    }
}
