//! Exact integer max-flow (Dinic's blocking-flow algorithm).

use std::collections::VecDeque;

use super::network::FlowNetwork;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowResult {
    pub flow: i64,
    /// Nodes reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

struct Residual {
    head: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<i64>,
    /// Arc ids leaving each node, in network order (arc `e ^ 1` is the
    /// reverse of arc `e`).
    out: Vec<Vec<usize>>,
}

impl Residual {
    fn new(net: &FlowNetwork) -> Self {
        let m = net.arcs().len();
        let mut r = Residual {
            head: Vec::with_capacity(2 * m),
            to: Vec::with_capacity(2 * m),
            cap: Vec::with_capacity(2 * m),
            out: vec![Vec::new(); net.node_count()],
        };
        for a in net.arcs() {
            let e = r.to.len();
            r.head.push(a.from);
            r.to.push(a.to);
            r.cap.push(a.capacity);
            r.head.push(a.to);
            r.to.push(a.from);
            r.cap.push(0);
            r.out[a.from].push(e);
            r.out[a.to].push(e + 1);
        }
        r
    }

    /// BFS distances from `s` over arcs with residual capacity.
    fn levels(&self, s: usize) -> Vec<i64> {
        let mut level = vec![-1i64; self.out.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.out[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && level[v] < 0 {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    /// Saturates a blocking flow in the level graph; iterative DFS so that
    /// long columns do not exhaust the call stack.
    fn blocking_flow(&mut self, s: usize, t: usize, level: &mut [i64]) -> i64 {
        let mut next = vec![0usize; self.out.len()];
        let mut path: Vec<usize> = Vec::new();
        let mut total = 0i64;
        let mut u = s;
        loop {
            if u == t {
                let bottleneck = path.iter().map(|&e| self.cap[e]).min().unwrap_or(0);
                let mut retreat = path.len();
                for (i, &e) in path.iter().enumerate() {
                    self.cap[e] -= bottleneck;
                    self.cap[e ^ 1] += bottleneck;
                    if self.cap[e] == 0 && retreat == path.len() {
                        retreat = i;
                    }
                }
                total += bottleneck;
                path.truncate(retreat);
                u = path.last().map_or(s, |&e| self.to[e]);
                continue;
            }
            let mut advanced = false;
            while next[u] < self.out[u].len() {
                let e = self.out[u][next[u]];
                let v = self.to[e];
                if self.cap[e] > 0 && level[v] == level[u] + 1 {
                    path.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if advanced {
                continue;
            }
            if u == s {
                return total;
            }
            // dead end: drop the node from the level graph and back up
            level[u] = -1;
            let e = path
                .pop()
                .expect("non-source node has an incoming path arc");
            u = self.head[e];
            next[u] += 1;
        }
    }
}

/// Maximum flow value and the source side of a minimum cut.
pub fn max_flow(net: &FlowNetwork) -> FlowResult {
    let (s, t) = (net.source(), net.sink());
    let mut r = Residual::new(net);
    let mut flow = 0i64;
    loop {
        let mut level = r.levels(s);
        if level[t] < 0 {
            break;
        }
        flow += r.blocking_flow(s, t, &mut level);
    }
    let source_side = r.levels(s).into_iter().map(|l| l >= 0).collect();
    FlowResult { flow, source_side }
}

/// Minimum s-t cut capacity by enumerating every source-side set (test
/// oracle; at most 22 nodes).
pub fn brute_force_min_cut(net: &FlowNetwork) -> Result<i64> {
    let n = net.node_count();
    if n > 22 {
        return Err(Error::InstanceTooLarge(format!(
            "{n} nodes; cut enumeration allows 22"
        )));
    }
    let (s, t) = (net.source(), net.sink());
    let free: Vec<usize> = (0..n).filter(|&v| v != s && v != t).collect();
    let mut best = i64::MAX;
    for mask in 0u32..(1 << free.len()) {
        let mut side = vec![false; n];
        side[s] = true;
        for (bit, &v) in free.iter().enumerate() {
            side[v] = mask >> bit & 1 == 1;
        }
        let cut = net
            .arcs()
            .iter()
            .filter(|a| side[a.from] && !side[a.to])
            .map(|a| a.capacity)
            .sum();
        best = best.min(cut);
    }
    Ok(best)
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::graphcut::network::Arc;
    use proptest::prelude::*;

    fn random_network() -> impl Strategy<Value = FlowNetwork> {
        (3usize..=10).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n, 0i64..=20), 0..30).prop_map(move |raw| {
                let arcs = raw
                    .into_iter()
                    .filter(|&(a, b, _)| a != b && b != 0 && a != n - 1)
                    .map(|(from, to, capacity)| Arc { from, to, capacity })
                    .collect();
                FlowNetwork::new(n, arcs, 0, n - 1).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn flow_equals_min_cut(net in random_network()) {
            let r = max_flow(&net);
            prop_assert_eq!(r.flow, brute_force_min_cut(&net).unwrap());
            // the residual-reachable set is itself a minimum cut
            let cut: i64 = net
                .arcs()
                .iter()
                .filter(|a| r.source_side[a.from] && !r.source_side[a.to])
                .map(|a| a.capacity)
                .sum();
            prop_assert_eq!(cut, r.flow);
            prop_assert!(!r.source_side[net.sink()]);
        }
    }
}
