//! Ground-truth solvers that share nothing with the loop engine: plain
//! enumeration for tiny instances and a min-cost flow for larger ones.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::instance::{reduce_no_overload, CenterId, ExtCost, Mode, ProblemInstance};

/// Default cap on the number of assignments [`exhaustive_solve`] visits.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration needs {needed} leaves, limit is {limit}")]
    TooLarge { needed: u128, limit: u64 },
    #[error("no assignment has a finite objective")]
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleSolution {
    /// Objective of the instance. In hard-capacity mode, only the costs of
    /// demands placed at real centers.
    pub objective: i64,
    /// Optimal placement; `None` marks a demand left out (hard-capacity
    /// mode only).
    pub assignment: Vec<Option<CenterId>>,
}

impl OracleSolution {
    pub fn unassigned(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_none()).count()
    }
}

pub fn exhaustive_solve(instance: &ProblemInstance) -> Result<OracleSolution, OracleError> {
    exhaustive_solve_limited(instance, DEFAULT_ENUMERATION_LIMIT)
}

/// Enumerates every assignment.
///
/// In hard-capacity mode a demand may also stay unassigned; assignments are
/// ranked first by the number of unassigned demands, then by cost, and
/// capacities are never exceeded.
pub fn exhaustive_solve_limited(
    instance: &ProblemInstance,
    limit: u64,
) -> Result<OracleSolution, OracleError> {
    let k = instance.center_count();
    let n = instance.demand_count();
    let hard = instance.mode == Mode::HardCapacity;
    let options = if hard { k + 1 } else { k };
    let needed = (options as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if needed > limit as u128 {
        return Err(OracleError::TooLarge { needed, limit });
    }

    let mut search = Enumeration {
        instance,
        hard,
        current: vec![None; n],
        occupancy: vec![0; k],
        best: None,
    };
    search.visit(0, 0, 0);
    let (_, objective, assignment) = search.best.ok_or(OracleError::Infeasible)?;
    Ok(OracleSolution {
        objective,
        assignment,
    })
}

struct Enumeration<'a> {
    instance: &'a ProblemInstance,
    hard: bool,
    current: Vec<Option<CenterId>>,
    occupancy: Vec<usize>,
    best: Option<(usize, i64, Vec<Option<CenterId>>)>,
}

impl Enumeration<'_> {
    fn visit(&mut self, demand: usize, left_out: usize, cost: i64) {
        if demand == self.current.len() {
            let better = match &self.best {
                None => true,
                Some((u, c, _)) => (left_out, cost) < (*u, *c),
            };
            if better {
                self.best = Some((left_out, cost, self.current.clone()));
            }
            return;
        }
        for center in 0..self.instance.center_count() {
            let level = self.occupancy[center] as i64 + 1;
            let ExtCost::Finite(extra) = self.instance.marginal_penalty(center, level) else {
                continue;
            };
            let step = self.instance.cost.get(demand, center) + extra;
            self.current[demand] = Some(center);
            self.occupancy[center] += 1;
            self.visit(demand + 1, left_out, cost + step);
            self.occupancy[center] -= 1;
        }
        self.current[demand] = None;
        if self.hard {
            self.visit(demand + 1, left_out + 1, cost);
        }
    }
}

/// Optimal objective via successive shortest augmenting paths on
///
/// `source -> demand (cap 1, cost 0) -> center (cap 1, cost CM) -> sink`,
///
/// where each center reaches the sink through one unit arc per possible
/// occupancy level, priced at that level's marginal penalty. Nondecreasing
/// penalties make the cheapest arcs fill first, so the arc expansion is
/// exact. Hard-capacity instances are solved through the overflow-center
/// reduction and reported without the overflow part.
pub fn mincost_flow_solve(instance: &ProblemInstance) -> Result<i64, OracleError> {
    if instance.mode == Mode::HardCapacity {
        let reduced = reduce_no_overload(instance).expect("mode checked");
        let total = mincost_flow_solve(&reduced)?;
        let n = instance.demand_count();
        let overflow = n.saturating_sub(instance.total_capacity()) as i64;
        return Ok(total - overflow * (instance.cost.max_entry() + 1));
    }

    let k = instance.center_count();
    let n = instance.demand_count();
    let source = 0;
    let sink = 1;
    let demand_node = |d: usize| 2 + d;
    let center_node = |c: usize| 2 + n + c;
    let mut net = FlowNetwork::new(2 + n + k);
    for d in 0..n {
        net.add_arc(source, demand_node(d), 1, 0);
        for c in 0..k {
            net.add_arc(demand_node(d), center_node(c), 1, instance.cost.get(d, c));
        }
    }
    for c in 0..k {
        let mut previous = 0;
        for level in 1..=n {
            match instance.marginal_penalty(c, level as i64) {
                ExtCost::Finite(p) => {
                    assert!(p >= previous, "penalty of center {c} is not monotone");
                    previous = p;
                    net.add_arc(center_node(c), sink, 1, p);
                }
                ExtCost::Infinite => break,
            }
        }
    }
    let (flow, cost) = net.min_cost_flow(source, sink, n as i64);
    if flow < n as i64 {
        return Err(OracleError::Infeasible);
    }
    Ok(cost)
}

struct Arc {
    to: usize,
    cap: i64,
    cost: i64,
}

struct FlowNetwork {
    arcs: Vec<Arc>,
    adjacency: Vec<Vec<usize>>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        FlowNetwork {
            arcs: Vec::new(),
            adjacency: vec![Vec::new(); nodes],
        }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: i64) {
        self.adjacency[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap, cost });
        self.adjacency[to].push(self.arcs.len());
        self.arcs.push(Arc {
            to: from,
            cap: 0,
            cost: -cost,
        });
    }

    /// Sends up to `limit` units; returns `(flow, cost)`. All original arc
    /// costs are nonnegative, so zero potentials are feasible at the start.
    fn min_cost_flow(&mut self, source: usize, sink: usize, limit: i64) -> (i64, i64) {
        let nodes = self.adjacency.len();
        let mut potential = vec![0i64; nodes];
        let (mut flow, mut cost) = (0, 0);
        while flow < limit {
            let mut dist = vec![i64::MAX; nodes];
            let mut via = vec![usize::MAX; nodes];
            let mut heap = BinaryHeap::new();
            dist[source] = 0;
            heap.push(Reverse((0i64, source)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &a in &self.adjacency[u] {
                    let arc = &self.arcs[a];
                    if arc.cap == 0 {
                        continue;
                    }
                    let reduced = arc.cost + potential[u] - potential[arc.to];
                    let nd = d + reduced;
                    if nd < dist[arc.to] {
                        dist[arc.to] = nd;
                        via[arc.to] = a;
                        heap.push(Reverse((nd, arc.to)));
                    }
                }
            }
            if dist[sink] == i64::MAX {
                break;
            }
            for v in 0..nodes {
                if dist[v] != i64::MAX {
                    potential[v] += dist[v];
                }
            }
            // Unit capacities on the demand side: every path carries one unit.
            let mut push = limit - flow;
            let mut v = sink;
            while v != source {
                let a = via[v];
                push = push.min(self.arcs[a].cap);
                v = self.arcs[a ^ 1].to;
            }
            let mut v = sink;
            while v != source {
                let a = via[v];
                self.arcs[a].cap -= push;
                self.arcs[a ^ 1].cap += push;
                cost += push * self.arcs[a].cost;
                v = self.arcs[a ^ 1].to;
            }
            flow += push;
        }
        (flow, cost)
    }
}
