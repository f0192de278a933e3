//! Most-negative loop search.
//!
//! The anchor center `j` is split into an "out" copy (node `j`, the source)
//! and an "in" copy (node `k`, the target). Every other center keeps its own
//! index. A shortest `out -> in` path, with the two copies merged again, is
//! the cheapest loop anchored at `j`. Edge weights can be negative, so the
//! search is Bellman-Ford.

use thiserror::Error;

use crate::allotment::{Allotment, Closure, Loop, Transfer};
use crate::instance::{CenterId, DemandId, ProblemInstance};
use crate::multigraph::{penalty_edge_weight, TransferHeapSet};

pub type NodeId = usize;

/// Which loops anchored at the distinguished center are searched for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Loops whose chain starts at the anchor: the anchor gives up a unit
    /// (or the loop is a cycle through it).
    Start,
    /// Any loop that visits the anchor.
    Through,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Transfer(DemandId),
    Penalty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NegLoopEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub weight: i64,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegLoopGraph {
    anchor: CenterId,
    centers: usize,
    edges: Vec<NegLoopEdge>,
}

impl NegLoopGraph {
    /// Graph from explicit edges. Node `anchor` is the out copy and node
    /// `centers` the in copy.
    pub fn from_edges(centers: usize, anchor: CenterId, edges: Vec<NegLoopEdge>) -> Self {
        assert!(anchor < centers);
        for e in &edges {
            assert!(
                e.from <= centers && e.to <= centers,
                "edge endpoint out of range"
            );
            assert!(
                e.to != anchor && e.from != centers,
                "edge touches a copy the wrong way"
            );
        }
        NegLoopGraph {
            anchor,
            centers,
            edges,
        }
    }

    pub fn anchor(&self) -> CenterId {
        self.anchor
    }

    pub fn source(&self) -> NodeId {
        self.anchor
    }

    pub fn target(&self) -> NodeId {
        self.centers
    }

    pub fn node_count(&self) -> usize {
        self.centers + 1
    }

    pub fn edges(&self) -> &[NegLoopEdge] {
        &self.edges
    }

    pub fn center_of(&self, node: NodeId) -> CenterId {
        if node == self.centers {
            self.anchor
        } else {
            node
        }
    }

    pub fn edge(&self, from: NodeId, to: NodeId) -> Option<&NegLoopEdge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }
}

fn build(
    instance: &ProblemInstance,
    allotment: &Allotment,
    heaps: &mut TransferHeapSet,
    anchor: CenterId,
    variant: Variant,
) -> NegLoopGraph {
    let k = instance.center_count();
    let target = k;
    let mut edges = Vec::with_capacity(k * k);
    for from in 0..k {
        for to_node in 0..=k {
            let to = if to_node == target { anchor } else { to_node };
            if to_node == anchor || from == to {
                continue;
            }
            let transfer = heaps
                .min_transfer_edge(allotment, from, to)
                .map(|e| (e.weight, EdgeKind::Transfer(e.demand)));
            let penalty = if variant == Variant::Through || to_node == target {
                penalty_edge_weight(instance, allotment, from, to)
                    .finite()
                    .map(|w| (w, EdgeKind::Penalty))
            } else {
                None
            };
            // Ties keep the transfer edge.
            let chosen = match (transfer, penalty) {
                (Some(t), Some(p)) => Some(if p.0 < t.0 { p } else { t }),
                (t, p) => t.or(p),
            };
            if let Some((weight, kind)) = chosen {
                edges.push(NegLoopEdge {
                    from,
                    to: to_node,
                    weight,
                    kind,
                });
            }
        }
    }
    NegLoopGraph {
        anchor,
        centers: k,
        edges,
    }
}

/// Graph for loops starting at `anchor`: cheapest transfers everywhere, plus
/// penalty edges into the anchor's in copy.
pub fn build_negloop_start(
    instance: &ProblemInstance,
    allotment: &Allotment,
    heaps: &mut TransferHeapSet,
    anchor: CenterId,
) -> NegLoopGraph {
    build(instance, allotment, heaps, anchor, Variant::Start)
}

/// Graph for loops through `anchor`: each edge is the cheaper of the best
/// transfer and the penalty edge.
pub fn build_negloop_through(
    instance: &ProblemInstance,
    allotment: &Allotment,
    heaps: &mut TransferHeapSet,
    anchor: CenterId,
) -> NegLoopGraph {
    build(instance, allotment, heaps, anchor, Variant::Through)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortestPathResult {
    pub path: Vec<NegLoopEdge>,
    pub cost: i64,
    pub feasible: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NegLoopError {
    /// A negative cycle avoids the anchor. The allotment was not loop-free
    /// away from the anchor when the search started.
    #[error("negative cycle not through anchor {anchor}")]
    NegativeCycleOffAnchor {
        anchor: CenterId,
        cycle: Vec<NegLoopEdge>,
    },
}

/// Shortest path from the out copy to the in copy.
///
/// Labels are `(cost, hops)` compared lexicographically, so among equally
/// cheap paths the one with fewer edges wins; edges are scanned in
/// `(from, to)` order and only strict improvements relax, which fixes the
/// remaining ties.
pub fn bellman_ford(graph: &NegLoopGraph) -> Result<ShortestPathResult, NegLoopError> {
    let nodes = graph.node_count();
    let mut order: Vec<usize> = (0..graph.edges.len()).collect();
    order.sort_by_key(|&i| (graph.edges[i].from, graph.edges[i].to));

    let mut label: Vec<Option<(i64, usize)>> = vec![None; nodes];
    let mut pred: Vec<Option<usize>> = vec![None; nodes];
    label[graph.source()] = Some((0, 0));

    let relax = |label: &mut Vec<Option<(i64, usize)>>, pred: &mut Vec<Option<usize>>| {
        let mut changed = None;
        for &i in &order {
            let e = &graph.edges[i];
            let Some((cost, hops)) = label[e.from] else {
                continue;
            };
            let candidate = (cost.saturating_add(e.weight), hops + 1);
            if label[e.to].is_none_or(|current| candidate < current) {
                label[e.to] = Some(candidate);
                pred[e.to] = Some(i);
                changed = Some(e.to);
            }
        }
        changed
    };

    let mut settled = false;
    for _ in 0..nodes - 1 {
        if relax(&mut label, &mut pred).is_none() {
            settled = true;
            break;
        }
    }
    if !settled {
        if let Some(node) = relax(&mut label, &mut pred) {
            return Err(NegLoopError::NegativeCycleOffAnchor {
                anchor: graph.anchor,
                cycle: trace_cycle(graph, &pred, node),
            });
        }
    }

    let target = graph.target();
    let Some((cost, _)) = label[target] else {
        return Ok(ShortestPathResult {
            path: Vec::new(),
            cost: 0,
            feasible: false,
        });
    };
    let mut path = Vec::new();
    let mut node = target;
    while node != graph.source() {
        let e = graph.edges[pred[node].expect("reached node has a predecessor")];
        path.push(e);
        node = e.from;
        assert!(path.len() <= nodes, "predecessor chain does not terminate");
    }
    path.reverse();
    Ok(ShortestPathResult {
        path,
        cost,
        feasible: true,
    })
}

fn trace_cycle(graph: &NegLoopGraph, pred: &[Option<usize>], start: NodeId) -> Vec<NegLoopEdge> {
    // Walking back |V| steps from a node relaxed in the extra round lands on
    // the cycle.
    let mut node = start;
    for _ in 0..graph.node_count() {
        node = graph.edges[pred[node].unwrap()].from;
    }
    let entry = node;
    let mut cycle = Vec::new();
    loop {
        let e = graph.edges[pred[node].unwrap()];
        cycle.push(e);
        node = e.from;
        if node == entry {
            break;
        }
    }
    cycle.reverse();
    cycle
}

fn transfer_of(graph: &NegLoopGraph, e: &NegLoopEdge) -> Transfer {
    let EdgeKind::Transfer(demand) = e.kind else {
        panic!("not a transfer edge");
    };
    Transfer {
        from: graph.center_of(e.from),
        to: graph.center_of(e.to),
        demand,
    }
}

/// Loop for a shortest path of a start-variant graph, or `None` when the
/// path is not strictly negative.
pub fn extract_loop_start(graph: &NegLoopGraph, result: &ShortestPathResult) -> Option<Loop> {
    if !result.feasible || result.cost >= 0 {
        return None;
    }
    let (last, chain) = result.path.split_last()?;
    let mut transfers: Vec<Transfer> = chain.iter().map(|e| transfer_of(graph, e)).collect();
    let closure = match last.kind {
        EdgeKind::Transfer(_) => {
            transfers.push(transfer_of(graph, last));
            Closure::Cycle
        }
        EdgeKind::Penalty => Closure::Penalty {
            from: graph.center_of(last.from),
            to: graph.anchor,
        },
    };
    Some(Loop::new(transfers, closure, result.cost).expect("shortest path forms a simple loop"))
}

/// Loop for a shortest path of a through-variant graph. When the path uses
/// several penalty edges, everything from the tail of the first to the head
/// of the last is replaced by one penalty edge, and the loop is re-priced.
pub fn extract_loop_through(
    instance: &ProblemInstance,
    allotment: &Allotment,
    graph: &NegLoopGraph,
    result: &ShortestPathResult,
) -> Option<Loop> {
    if !result.feasible || result.cost >= 0 {
        return None;
    }
    let path = &result.path;
    let first = path.iter().position(|e| e.kind == EdgeKind::Penalty);
    let Some(first) = first else {
        let transfers = path.iter().map(|e| transfer_of(graph, e)).collect();
        return Some(
            Loop::new(transfers, Closure::Cycle, result.cost).expect("shortest path forms a cycle"),
        );
    };
    let last = path
        .iter()
        .rposition(|e| e.kind == EdgeKind::Penalty)
        .unwrap();
    let gains = graph.center_of(path[first].from);
    let loses = graph.center_of(path[last].to);
    if gains == loses {
        // Both penalty edges touch the anchor copies; nothing moves.
        return None;
    }
    // The chain starts at `loses`, wraps through the anchor, and ends at
    // `gains`.
    let transfers: Vec<Transfer> = path[last + 1..]
        .iter()
        .chain(&path[..first])
        .map(|e| transfer_of(graph, e))
        .collect();
    let closure = Closure::Penalty {
        from: gains,
        to: loses,
    };
    let lp = Loop::priced(instance, allotment, transfers, closure)
        .expect("spliced path forms a simple loop");
    (lp.cost() < 0).then_some(lp)
}

/// Turns a negative cycle of a search graph into a negative loop of the
/// allotment.
///
/// A cycle with several penalty edges is cut into one candidate per transfer
/// segment, each closed by the penalty edge from the segment's end back to
/// its start. The candidates' costs add up to the cycle's, so at least one
/// is negative; the cheapest is returned.
pub fn loop_from_cycle(
    instance: &ProblemInstance,
    allotment: &Allotment,
    graph: &NegLoopGraph,
    cycle: &[NegLoopEdge],
) -> Option<Loop> {
    let penalties: Vec<usize> = cycle
        .iter()
        .enumerate()
        .filter(|(_, e)| e.kind == EdgeKind::Penalty)
        .map(|(i, _)| i)
        .collect();
    if penalties.is_empty() {
        let transfers: Vec<Transfer> = cycle.iter().map(|e| transfer_of(graph, e)).collect();
        return Loop::priced(instance, allotment, transfers, Closure::Cycle)
            .ok()
            .filter(|lp| lp.cost() < 0);
    }
    let m = penalties.len();
    let mut best: Option<Loop> = None;
    for idx in 0..m {
        let start = penalties[idx] + 1;
        let end = if idx + 1 < m {
            penalties[idx + 1]
        } else {
            penalties[0] + cycle.len()
        };
        if start >= end {
            continue;
        }
        let transfers: Vec<Transfer> = (start..end)
            .map(|i| transfer_of(graph, &cycle[i % cycle.len()]))
            .collect();
        let from = transfers.last().unwrap().to;
        let to = transfers[0].from;
        if let Ok(lp) = Loop::priced(
            instance,
            allotment,
            transfers,
            Closure::Penalty { from, to },
        ) {
            if lp.cost() < 0 && best.as_ref().is_none_or(|b| lp.cost() < b.cost()) {
                best = Some(lp);
            }
        }
    }
    best
}

/// Cheapest strictly negative loop anchored at `anchor`, if any.
pub fn most_negative_loop(
    instance: &ProblemInstance,
    allotment: &Allotment,
    heaps: &mut TransferHeapSet,
    anchor: CenterId,
    variant: Variant,
) -> Result<Option<Loop>, NegLoopError> {
    if instance.center_count() < 2 {
        return Ok(None);
    }
    match variant {
        Variant::Start => {
            if allotment.occupancy(anchor) == 0 {
                return Ok(None);
            }
            let graph = build_negloop_start(instance, allotment, heaps, anchor);
            let result = bellman_ford(&graph)?;
            Ok(extract_loop_start(&graph, &result))
        }
        Variant::Through => {
            let graph = build_negloop_through(instance, allotment, heaps, anchor);
            let result = bellman_ford(&graph)?;
            Ok(extract_loop_through(instance, allotment, &graph, &result))
        }
    }
}

/// Like [`most_negative_loop`] with the through variant, but a negative
/// cycle away from the anchor is converted into a witness loop instead of
/// being reported as an error.
pub fn any_negative_loop_through(
    instance: &ProblemInstance,
    allotment: &Allotment,
    heaps: &mut TransferHeapSet,
    anchor: CenterId,
) -> Option<Loop> {
    if instance.center_count() < 2 {
        return None;
    }
    let graph = build_negloop_through(instance, allotment, heaps, anchor);
    match bellman_ford(&graph) {
        Ok(result) => extract_loop_through(instance, allotment, &graph, &result),
        Err(NegLoopError::NegativeCycleOffAnchor { cycle, .. }) => {
            loop_from_cycle(instance, allotment, &graph, &cycle)
        }
    }
}
