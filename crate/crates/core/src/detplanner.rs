//! All-outcomes determinized planning over abstract belief space.
//!
//! The planner searches the implicit graph whose edges are (operator,
//! outcome-assignment) pairs priced by the Bayes-UCB outcome cost, and
//! returns the `K` cheapest loopless goal-reaching plans (uniform-cost or
//! A* base search plus Yen's algorithm). Operators with no uncertain effects
//! contribute zero-cost edges.

use crate::bandit::bayes_ucb_cost;
use crate::learner::table::{ucond_bits, OutcomeTable};
use crate::symbolic::{AbstractBelief, OpId, OutcomeBits, Problem};
use std::collections::{BinaryHeap, HashMap, HashSet};

/// One determinized action: an operator together with a chosen assignment to
/// its uncertain effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DetAction {
    pub op: OpId,
    pub bits: OutcomeBits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub before: AbstractBelief,
    pub op: OpId,
    pub bits: OutcomeBits,
    pub after: AbstractBelief,
    pub cost: f64,
}

/// A chain-consistent plan: each step's `after` is the next step's `before`,
/// the first state is the query root and the last satisfies the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub cost: f64,
}

impl Plan {
    pub fn actions(&self) -> Vec<DetAction> {
        self.steps.iter().map(|s| DetAction { op: s.op, bits: s.bits }).collect()
    }
}

/// Domain-supplied admissible heuristic for the determinized search.
/// `min_edge_cost` is a lower bound on any single edge cost at the current
/// iteration; implementations must never overestimate the true remaining
/// cost.
pub trait PlanHeuristic {
    fn h(&self, b: &AbstractBelief, min_edge_cost: f64) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct SearchParams {
    pub iteration: u64,
    pub horizon_cap: usize,
    /// Node-expansion budget per base search; exceeding it abandons the
    /// search (desk-scale instances stay far below it).
    pub expansion_cap: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams { iteration: 1, horizon_cap: 50, expansion_cap: 500_000 }
    }
}

type CostCache = HashMap<(OpId, OutcomeBits, OutcomeBits), f64>;

fn edge_cost(
    problem: &Problem,
    table: &OutcomeTable,
    iteration: u64,
    b: &AbstractBelief,
    action: DetAction,
    cache: &mut CostCache,
) -> f64 {
    let op = problem.op(action.op);
    if op.ueff.is_empty() {
        return 0.0; // guaranteed effects carry no outcome cost
    }
    let pre = ucond_bits(b, op);
    *cache.entry((action.op, pre, action.bits)).or_insert_with(|| {
        bayes_ucb_cost(table.prior, table.counts(action.op, pre, action.bits), iteration)
    })
}

/// Enumerates every determinized successor of `b`: each applicable operator
/// crossed with each assignment to its uncertain effects.
pub fn successors(
    problem: &Problem,
    table: &OutcomeTable,
    b: &AbstractBelief,
    iteration: u64,
) -> Vec<(DetAction, AbstractBelief, f64)> {
    let mut cache = CostCache::new();
    let mut out = Vec::new();
    for op_id in problem.applicable_ops(b) {
        let op = problem.op(op_id);
        let n_outcomes: u32 = 1 << op.ueff.len();
        for bits in 0..n_outcomes {
            let action = DetAction { op: op_id, bits: bits as OutcomeBits };
            let after = problem.apply_outcome_bits(b, op, action.bits);
            let cost = edge_cost(problem, table, iteration, b, action, &mut cache);
            out.push((action, after, cost));
        }
    }
    out
}

#[derive(Debug)]
struct HeapEntry {
    f: f64,
    h: f64,
    seq: u64,
    node: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f && self.h == other.h && self.seq == other.seq
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap is a max-heap: reverse so the smallest (f, h, seq) pops
        // first. Preferring a smaller h among equal f drives the search
        // toward the goal across flat-cost plateaus.
        other
            .f
            .total_cmp(&self.f)
            .then(other.h.total_cmp(&self.h))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Searcher<'a> {
    problem: &'a Problem,
    table: &'a OutcomeTable,
    goal: &'a dyn Fn(&AbstractBelief) -> bool,
    params: SearchParams,
    heuristic: Option<&'a dyn PlanHeuristic>,
    min_edge: f64,
    cache: CostCache,
}

impl<'a> Searcher<'a> {
    fn h(&self, b: &AbstractBelief) -> f64 {
        match self.heuristic {
            Some(h) => h.h(b, self.min_edge),
            None => 0.0,
        }
    }

    /// Cheapest loopless path from `root` to a goal state, avoiding
    /// `banned_nodes` everywhere and `banned_first` as the first action.
    fn shortest(
        &mut self,
        root: &AbstractBelief,
        banned_nodes: &HashSet<AbstractBelief>,
        banned_first: &HashSet<DetAction>,
    ) -> Option<Plan> {
        if banned_nodes.contains(root) {
            return None;
        }
        // arena of discovered states
        let mut states: Vec<AbstractBelief> = vec![root.clone()];
        let mut index: HashMap<AbstractBelief, u32> = HashMap::new();
        index.insert(root.clone(), 0);
        let mut dist: Vec<f64> = vec![0.0];
        let mut depth: Vec<usize> = vec![0];
        let mut parent: Vec<Option<(u32, DetAction, f64)>> = vec![None];
        let mut closed: Vec<bool> = vec![false];

        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let h0 = self.h(root);
        heap.push(HeapEntry { f: h0, h: h0, seq, node: 0 });
        let mut expansions = 0usize;

        while let Some(entry) = heap.pop() {
            let u = entry.node as usize;
            if closed[u] {
                continue;
            }
            closed[u] = true;
            let b = states[u].clone();
            if (self.goal)(&b) {
                return Some(self.reconstruct(&states, &parent, u));
            }
            expansions += 1;
            if expansions > self.params.expansion_cap || depth[u] >= self.params.horizon_cap {
                continue;
            }
            for op_id in self.problem.applicable_ops(&b) {
                let op = self.problem.op(op_id).clone();
                let n_outcomes: u32 = 1 << op.ueff.len();
                for bits in 0..n_outcomes {
                    let action = DetAction { op: op_id, bits: bits as OutcomeBits };
                    if u == 0 && banned_first.contains(&action) {
                        continue;
                    }
                    let after = self.problem.apply_outcome_bits(&b, &op, action.bits);
                    if banned_nodes.contains(&after) {
                        continue;
                    }
                    let cost = edge_cost(
                        self.problem,
                        self.table,
                        self.params.iteration,
                        &b,
                        action,
                        &mut self.cache,
                    );
                    let g = dist[u] + cost;
                    let v = match index.get(&after) {
                        Some(&v) => {
                            if closed[v as usize] || g >= dist[v as usize] {
                                continue;
                            }
                            dist[v as usize] = g;
                            depth[v as usize] = depth[u] + 1;
                            parent[v as usize] = Some((u as u32, action, cost));
                            v
                        }
                        None => {
                            let v = states.len() as u32;
                            states.push(after.clone());
                            index.insert(after, v);
                            dist.push(g);
                            depth.push(depth[u] + 1);
                            parent.push(Some((u as u32, action, cost)));
                            closed.push(false);
                            v
                        }
                    };
                    let h = self.h(&states[v as usize]);
                    seq += 1;
                    heap.push(HeapEntry { f: g + h, h, seq, node: v });
                }
            }
        }
        None
    }

    fn reconstruct(
        &self,
        states: &[AbstractBelief],
        parent: &[Option<(u32, DetAction, f64)>],
        goal: usize,
    ) -> Plan {
        let mut steps = Vec::new();
        let mut cur = goal;
        let mut total = 0.0;
        while let Some((prev, action, cost)) = parent[cur] {
            steps.push(PlanStep {
                before: states[prev as usize].clone(),
                op: action.op,
                bits: action.bits,
                after: states[cur].clone(),
                cost,
            });
            total += cost;
            cur = prev as usize;
        }
        steps.reverse();
        Plan { steps, cost: total }
    }
}

/// Top-`k` cheapest distinct loopless plans from `root` to the goal, sorted
/// by ascending cost. Returns fewer than `k` (possibly none) when the graph
/// runs out of goal-reaching plans within the horizon.
pub fn plan_topk(
    problem: &Problem,
    table: &OutcomeTable,
    root: &AbstractBelief,
    goal: &dyn Fn(&AbstractBelief) -> bool,
    k: usize,
    params: SearchParams,
    heuristic: Option<&dyn PlanHeuristic>,
) -> Vec<Plan> {
    assert!(k >= 1);
    let min_edge = table.min_edge_cost(params.iteration);
    let mut searcher =
        Searcher { problem, table, goal, params, heuristic, min_edge, cache: CostCache::new() };

    if goal(root) {
        // the trivial empty plan; no spur structure to diversify
        return vec![Plan { steps: Vec::new(), cost: 0.0 }];
    }

    let mut accepted: Vec<Plan> = Vec::new();
    let Some(first) = searcher.shortest(root, &HashSet::new(), &HashSet::new()) else {
        return accepted;
    };
    accepted.push(first);

    // candidate pool for Yen's algorithm, deduplicated by action sequence
    let mut candidates: Vec<Plan> = Vec::new();
    let mut seen: HashSet<Vec<DetAction>> = HashSet::new();
    seen.insert(accepted[0].actions());

    while accepted.len() < k {
        let last = accepted.last().unwrap().clone();
        for i in 0..last.steps.len() {
            let spur_node = last.steps[i].before.clone();
            let root_steps = &last.steps[..i];
            let root_cost: f64 = root_steps.iter().map(|s| s.cost).sum();

            // ban the i-th action of every known plan sharing this prefix
            let mut banned_first: HashSet<DetAction> = HashSet::new();
            for p in accepted.iter().chain(candidates.iter()) {
                if p.steps.len() > i
                    && p.steps[..i]
                        .iter()
                        .zip(root_steps)
                        .all(|(a, b)| a.op == b.op && a.bits == b.bits)
                {
                    banned_first.insert(DetAction { op: p.steps[i].op, bits: p.steps[i].bits });
                }
            }
            // keep spur paths loopless w.r.t. the root path
            let banned_nodes: HashSet<AbstractBelief> =
                root_steps.iter().map(|s| s.before.clone()).collect();

            if let Some(spur) = searcher.shortest(&spur_node, &banned_nodes, &banned_first) {
                let mut steps = root_steps.to_vec();
                steps.extend(spur.steps);
                let plan = Plan { cost: root_cost + spur.cost, steps };
                let key = plan.actions();
                if seen.insert(key) {
                    candidates.push(plan);
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        let best = candidates
            .iter()
            .enumerate()
            .min_by(|(ai, a), (bi, b)| a.cost.total_cmp(&b.cost).then(ai.cmp(bi)))
            .map(|(i, _)| i)
            .unwrap();
        accepted.push(candidates.remove(best));
    }
    accepted
}

/// One line per step: `opname(bindings) -> {psi-eff bits} cost=..`.
pub fn format_plan(problem: &Problem, plan: &Plan) -> String {
    let mut out = String::new();
    for step in &plan.steps {
        let op = problem.op(step.op);
        let bits: String = (0..op.ueff.len())
            .map(|i| if step.bits & (1 << i) != 0 { '1' } else { '0' })
            .collect();
        out.push_str(&format!(
            "{} -> {{{bits}}} cost={:.6}\n",
            problem.format_op(op),
            step.cost
        ));
    }
    out.push_str(&format!("total cost={:.6}\n", plan.cost));
    out
}
