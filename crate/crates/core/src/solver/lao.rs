//! LAO*: heuristic search for the optimal policy of an implicit MDP,
//! expanding only states reachable under promising partial policies.

use super::{Policy, SolveError};
use crate::learner::AbstractModel;
use crate::symbolic::{AbstractBelief, OpId};
use std::collections::{HashMap, HashSet, VecDeque};

struct Node {
    value: f64,
    expanded: bool,
    /// Successors per available operator, filled on expansion.
    actions: Vec<(OpId, Vec<(u32, f64)>)>,
}

struct Search<'a> {
    model: &'a dyn AbstractModel,
    states: Vec<AbstractBelief>,
    index: HashMap<AbstractBelief, u32>,
    nodes: Vec<Node>,
    goal: Vec<bool>,
    h: HashMap<AbstractBelief, f64>,
}

impl<'a> Search<'a> {
    fn intern(&mut self, b: &AbstractBelief) -> u32 {
        if let Some(&i) = self.index.get(b) {
            return i;
        }
        let i = self.states.len() as u32;
        self.states.push(b.clone());
        self.index.insert(b.clone(), i);
        let is_goal = self.model.is_goal(b);
        self.goal.push(is_goal);
        let value = if is_goal { 1.0 } else { self.h.get(b).copied().unwrap_or(0.0) };
        self.nodes.push(Node { value, expanded: false, actions: Vec::new() });
        i
    }

    fn expand(&mut self, i: u32) {
        if self.nodes[i as usize].expanded || self.goal[i as usize] {
            return;
        }
        let b = self.states[i as usize].clone();
        let mut actions = Vec::new();
        for op in self.model.available_ops(&b) {
            let rows = self.model.transition(&b, op).expect("available ops are explored");
            let outcomes = rows
                .into_iter()
                .map(|(_, after, p)| (self.intern(&after), p))
                .collect();
            actions.push((op, outcomes));
        }
        let node = &mut self.nodes[i as usize];
        node.actions = actions;
        node.expanded = true;
    }

    fn q(&self, i: u32, a: usize) -> f64 {
        let node = &self.nodes[i as usize];
        let sum: f64 = node.actions[a]
            .1
            .iter()
            .map(|&(t, p)| p * self.nodes[t as usize].value)
            .sum();
        self.model.gamma() * sum
    }

    fn greedy(&self, i: u32) -> Option<usize> {
        let node = &self.nodes[i as usize];
        let mut best: Option<(usize, f64)> = None;
        for a in 0..node.actions.len() {
            let q = self.q(i, a);
            if best.map_or(true, |(_, bq)| q > bq + 1e-15) {
                best = Some((a, q));
            }
        }
        best.map(|(a, _)| a)
    }

    /// States of the best partial solution graph from the root, in BFS
    /// order, plus the unexpanded non-goal fringe among them.
    fn best_graph(&self, root: u32) -> (Vec<u32>, Vec<u32>) {
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        let mut tips = Vec::new();
        let mut queue = VecDeque::new();
        queue.push_back(root);
        seen.insert(root);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            if self.goal[i as usize] {
                continue;
            }
            if !self.nodes[i as usize].expanded {
                tips.push(i);
                continue;
            }
            if let Some(a) = self.greedy(i) {
                for &(t, _) in &self.nodes[i as usize].actions[a].1 {
                    if seen.insert(t) {
                        queue.push_back(t);
                    }
                }
            }
        }
        (order, tips)
    }

    /// Bellman sweeps over `set` until the residual drops below `tol` or
    /// `max_sweeps` is hit; returns the final residual.
    fn revise(&mut self, set: &[u32], tol: f64, max_sweeps: usize) -> f64 {
        let mut residual = f64::INFINITY;
        for _ in 0..max_sweeps {
            residual = 0.0;
            for &i in set {
                if self.goal[i as usize] || !self.nodes[i as usize].expanded {
                    continue;
                }
                let n_actions = self.nodes[i as usize].actions.len();
                let mut best = 0.0_f64;
                for a in 0..n_actions {
                    let q = self.q(i, a);
                    if q > best {
                        best = q;
                    }
                }
                let old = self.nodes[i as usize].value;
                residual = residual.max((best - old).abs());
                self.nodes[i as usize].value = best;
            }
            if residual <= tol {
                break;
            }
        }
        residual
    }
}

/// Admissible heuristic `gamma^d(b)` from the hop distance `d` to a goal
/// state in the explored all-outcomes graph (states with no path get 0).
fn hop_distance_heuristic(
    model: &dyn AbstractModel,
    root: &AbstractBelief,
    cap: usize,
) -> Result<HashMap<AbstractBelief, f64>, SolveError> {
    // forward reachability
    let mut states: Vec<AbstractBelief> = vec![root.clone()];
    let mut index: HashMap<AbstractBelief, usize> = HashMap::new();
    index.insert(states[0].clone(), 0);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new()];
    let mut goals: Vec<usize> = Vec::new();
    let mut cursor = 0;
    while cursor < states.len() {
        let b = states[cursor].clone();
        if model.is_goal(&b) {
            goals.push(cursor);
            cursor += 1;
            continue;
        }
        for op in model.available_ops(&b) {
            for (_, after, _) in model.transition(&b, op).expect("explored") {
                let t = match index.get(&after) {
                    Some(&t) => t,
                    None => {
                        let t = states.len();
                        if t >= cap {
                            return Err(SolveError::TooLarge(cap));
                        }
                        states.push(after.clone());
                        index.insert(after, t);
                        preds.push(Vec::new());
                        t
                    }
                };
                preds[t].push(cursor);
            }
        }
        cursor += 1;
    }
    // backward BFS from goals
    let mut dist: Vec<Option<u32>> = vec![None; states.len()];
    let mut queue = VecDeque::new();
    for &g in &goals {
        dist[g] = Some(0);
        queue.push_back(g);
    }
    while let Some(s) = queue.pop_front() {
        let d = dist[s].unwrap();
        for &p in &preds[s] {
            if dist[p].is_none() {
                dist[p] = Some(d + 1);
                queue.push_back(p);
            }
        }
    }
    let gamma = model.gamma();
    Ok(states
        .into_iter()
        .zip(dist)
        .map(|(b, d)| {
            let h = match d {
                Some(d) => gamma.powi(d as i32),
                None => 0.0,
            };
            (b, h)
        })
        .collect())
}

/// Finds an optimal partial policy from the model's initial belief. On the
/// states reachable under the returned policy, the Bellman residual is at
/// most `tol`, and unexplored `(state, operator)` pairs are never selected.
pub fn lao_star(
    model: &dyn AbstractModel,
    root: &AbstractBelief,
    tol: f64,
    state_cap: usize,
) -> Result<Policy, SolveError> {
    let initial = root.clone();
    if model.is_goal(&initial) {
        let mut p = Policy::default();
        p.values.insert(initial, 1.0);
        return Ok(p);
    }
    if model.available_ops(&initial).is_empty() {
        return Err(SolveError::NoPolicy);
    }

    let h = hop_distance_heuristic(model, root, state_cap)?;
    let mut search = Search {
        model,
        states: Vec::new(),
        index: HashMap::new(),
        nodes: Vec::new(),
        goal: Vec::new(),
        h,
    };
    let root = search.intern(&initial);

    let expanded_sweeps = 64;
    loop {
        let (_, tips) = search.best_graph(root);
        if !tips.is_empty() {
            for t in tips {
                search.expand(t);
            }
            let all: Vec<u32> = (0..search.nodes.len() as u32).collect();
            search.revise(&all, tol, expanded_sweeps);
            continue;
        }
        // no tips: converge on the solution graph, then re-check that the
        // greedy policy did not shift onto unexpanded states
        let (order, _) = search.best_graph(root);
        let residual = search.revise(&order, tol, usize::MAX);
        let (order2, tips2) = search.best_graph(root);
        if tips2.is_empty() && residual <= tol {
            let mut policy = Policy::default();
            for &i in &order2 {
                let b = search.states[i as usize].clone();
                policy.values.insert(b.clone(), search.nodes[i as usize].value);
                if !search.goal[i as usize] {
                    if let Some(a) = search.greedy(i) {
                        policy.actions.insert(b, search.nodes[i as usize].actions[a].0);
                    }
                }
            }
            return Ok(policy);
        }
    }
}
