//! Minimum-cost maximum-flow on small directed networks with exact
//! rational edge costs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num::{BigRational, Zero};

use crate::relational::Value;

/// Role of a vertex inside a committee-selection network. Candidate
/// vertices come in in/out pairs so a unit capacity (and the candidate's
/// cost) can sit on the arc between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VertexKind {
    Source,
    Sink,
    CandidateIn(Value),
    CandidateOut(Value),
    /// One vertex per tuple of the first covered relation.
    FirstTuple(Value),
    /// Filler seats on the first side, numbered from 1.
    FirstSlack(usize),
    /// One vertex per tuple of the second covered relation.
    SecondTuple(Value),
    /// Filler seats on the second side, numbered from 1.
    SecondSlack(usize),
}

#[derive(Debug, Clone)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    pub capacity: u64,
    pub cost: BigRational,
}

/// A directed network. The source has no incoming edges and the sink no
/// outgoing ones; capacities are non-negative by construction.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub vertices: Vec<VertexKind>,
    pub edges: Vec<FlowEdge>,
    pub source: usize,
    pub sink: usize,
}

impl FlowNetwork {
    pub fn count_kind(&self, pred: impl Fn(&VertexKind) -> bool) -> usize {
        self.vertices.iter().filter(|v| pred(v)).count()
    }
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub flow_value: u64,
    pub cost: BigRational,
    /// Flow carried by each edge, parallel to `FlowNetwork::edges`.
    pub edge_flows: Vec<u64>,
}

struct Arc {
    to: usize,
    cap: u64,
    cost: BigRational,
    rev: usize,
}

/// Integral min-cost max flow by successive shortest augmenting paths.
/// Potentials start from one Bellman-Ford pass and are maintained so every
/// residual arc keeps a non-negative reduced cost, letting each following
/// augmentation use Dijkstra.
pub fn min_cost_max_flow(net: &FlowNetwork) -> FlowResult {
    let n = net.vertices.len();
    for e in &net.edges {
        assert!(e.from < n && e.to < n, "edge endpoint out of range");
        assert!(e.to != net.source, "edge into the source");
        assert!(e.from != net.sink, "edge out of the sink");
    }

    let mut adj: Vec<Vec<Arc>> = (0..n).map(|_| Vec::new()).collect();
    // Forward arc location per input edge, to read residuals back out.
    let mut loc = Vec::with_capacity(net.edges.len());
    for e in &net.edges {
        let fwd = adj[e.from].len();
        let bwd = adj[e.to].len() + usize::from(e.from == e.to);
        loc.push((e.from, fwd));
        adj[e.from].push(Arc {
            to: e.to,
            cap: e.capacity,
            cost: e.cost.clone(),
            rev: bwd,
        });
        adj[e.to].push(Arc {
            to: e.from,
            cap: 0,
            cost: -e.cost.clone(),
            rev: fwd,
        });
    }

    // Bellman-Ford potentials over residual arcs with spare capacity.
    let mut pot: Vec<Option<BigRational>> = vec![None; n];
    pot[net.source] = Some(BigRational::zero());
    for _ in 0..n {
        let mut changed = false;
        for u in 0..n {
            let Some(du) = pot[u].clone() else { continue };
            for arc in &adj[u] {
                if arc.cap == 0 {
                    continue;
                }
                let cand = &du + &arc.cost;
                if pot[arc.to].as_ref().is_none_or(|dv| cand < *dv) {
                    pot[arc.to] = Some(cand);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut flow_value = 0u64;
    loop {
        // Dijkstra over reduced costs. Vertices the initial pass could not
        // reach stay unreachable: residual capacity only ever appears along
        // augmented paths.
        let mut dist: Vec<Option<BigRational>> = vec![None; n];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[net.source] = Some(BigRational::zero());
        heap.push(Reverse((BigRational::zero(), net.source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if dist[u].as_ref() != Some(&d) {
                continue;
            }
            for (i, arc) in adj[u].iter().enumerate() {
                if arc.cap == 0 {
                    continue;
                }
                let (Some(pu), Some(pv)) = (&pot[u], &pot[arc.to]) else {
                    continue;
                };
                let reduced = &arc.cost + pu - pv;
                let cand = &d + &reduced;
                if dist[arc.to].as_ref().is_none_or(|dv| cand < *dv) {
                    dist[arc.to] = Some(cand.clone());
                    prev[arc.to] = Some((u, i));
                    heap.push(Reverse((cand, arc.to)));
                }
            }
        }
        if dist[net.sink].is_none() {
            break;
        }
        for v in 0..n {
            let updated = match (&pot[v], &dist[v]) {
                (Some(p), Some(d)) => Some(p + d),
                _ => None,
            };
            if let Some(p) = updated {
                pot[v] = Some(p);
            }
        }

        let mut bottleneck = u64::MAX;
        let mut v = net.sink;
        while v != net.source {
            let (u, i) = prev[v].expect("path broken");
            bottleneck = bottleneck.min(adj[u][i].cap);
            v = u;
        }
        let mut v = net.sink;
        while v != net.source {
            let (u, i) = prev[v].expect("path broken");
            adj[u][i].cap -= bottleneck;
            let rev = adj[u][i].rev;
            adj[v][rev].cap += bottleneck;
            v = u;
        }
        flow_value += bottleneck;
    }

    let mut cost = BigRational::zero();
    let mut edge_flows = Vec::with_capacity(net.edges.len());
    for (e, &(u, i)) in net.edges.iter().zip(&loc) {
        let sent = e.capacity - adj[u][i].cap;
        cost += &e.cost * BigRational::from_integer(sent.into());
        edge_flows.push(sent);
    }
    FlowResult {
        flow_value,
        cost,
        edge_flows,
    }
}
