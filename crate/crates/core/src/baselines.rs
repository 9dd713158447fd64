//! Comparison strategies: epsilon-greedy and random model learning, MLO and
//! WAO determinized decision-making, contingent planning over a uniform
//! outcome model, and belief-space Monte-Carlo tree search. The
//! [`ModelAgent`] provider combines a learning method with a decision method
//! and relearns whenever its compiled model has nothing to offer in the
//! current abstract belief.

use crate::belief::{abs, BeliefHandle, Environment};
use crate::control::{ControlError, DecisionProvider};
use crate::detplanner::{Plan, PlanStep};
use crate::learner::{AbstractModel, LearnConfig, LearnerState, SparseMdp};
use crate::rng::{derive_seed, Rng};
use crate::solver::{lao_star, solve_vi, Policy, SolveError};
use crate::symbolic::{AbstractBelief, OpId, OutcomeBits, Problem};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

const TAG_EPS: u64 = 0x31;
const TAG_MCTS: u64 = 0x41;

// ---------------------------------------------------------------------------
// method specification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Learning {
    Bayes,
    EpsGreedy(f64),
    Random,
    /// No learning: plan against a uniform distribution over symbolically
    /// possible outcomes.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Lao,
    Vi,
    Mlo,
    Wao,
}

/// A baseline configuration, parsed from strings such as `bayes:lao`,
/// `eps0.1:vi`, `random:wao`, `none:lao` or `mcts`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    Model { learning: Learning, decision: Decision },
    Mcts(MctsParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MctsParams {
    pub c_ucb: f64,
    pub rollouts: usize,
    pub depth: usize,
}

impl Default for MctsParams {
    fn default() -> Self {
        MctsParams { c_ucb: std::f64::consts::SQRT_2, rollouts: 1000, depth: 20 }
    }
}

impl std::str::FromStr for MethodSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "mcts" {
            return Ok(MethodSpec::Mcts(MctsParams::default()));
        }
        if let Some(rest) = s.strip_prefix("mcts:") {
            let mut p = MctsParams::default();
            p.rollouts = rest.parse().map_err(|_| format!("bad rollout count `{rest}`"))?;
            return Ok(MethodSpec::Mcts(p));
        }
        let (l, d) = s.split_once(':').ok_or_else(|| {
            format!("expected `<learning>:<decision>` or `mcts`, got `{s}`")
        })?;
        let learning = match l {
            "bayes" => Learning::Bayes,
            "random" => Learning::Random,
            "none" => Learning::None,
            other => match other.strip_prefix("eps") {
                Some(e) => Learning::EpsGreedy(
                    e.parse().map_err(|_| format!("bad epsilon `{e}`"))?,
                ),
                None => return Err(format!("unknown learning method `{other}`")),
            },
        };
        let decision = match d {
            "lao" => Decision::Lao,
            "vi" => Decision::Vi,
            "mlo" => Decision::Mlo,
            "wao" => Decision::Wao,
            other => return Err(format!("unknown decision method `{other}`")),
        };
        Ok(MethodSpec::Model { learning, decision })
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Mcts(_) => write!(f, "mcts"),
            MethodSpec::Model { learning, decision } => {
                match learning {
                    Learning::Bayes => write!(f, "bayes")?,
                    Learning::Random => write!(f, "random")?,
                    Learning::None => write!(f, "none")?,
                    Learning::EpsGreedy(e) => write!(f, "eps{e}")?,
                }
                match decision {
                    Decision::Lao => write!(f, ":lao"),
                    Decision::Vi => write!(f, ":vi"),
                    Decision::Mlo => write!(f, ":mlo"),
                    Decision::Wao => write!(f, ":wao"),
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// contingent planning: the uniform outcome model
// ---------------------------------------------------------------------------

/// The no-learning model: every symbolically applicable operator is offered
/// and every assignment of its uncertain effects is equally likely.
#[derive(Debug, Clone)]
pub struct UniformModel {
    pub problem: Arc<Problem>,
    pub initial: AbstractBelief,
    pub gamma: f64,
}

impl AbstractModel for UniformModel {
    fn problem(&self) -> &Problem {
        &self.problem
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn initial(&self) -> &AbstractBelief {
        &self.initial
    }

    fn is_goal(&self, b: &AbstractBelief) -> bool {
        self.problem.eval_goal(b)
    }

    fn available_ops(&self, b: &AbstractBelief) -> Vec<OpId> {
        self.problem.applicable_ops(b)
    }

    fn transition(
        &self,
        b: &AbstractBelief,
        op_id: OpId,
    ) -> Option<Vec<(OutcomeBits, AbstractBelief, f64)>> {
        let op = self.problem.op(op_id);
        let n: u32 = 1 << op.ueff.len();
        let p = 1.0 / n as f64;
        Some(
            (0..n)
                .map(|bits| {
                    let bits = bits as OutcomeBits;
                    (bits, self.problem.apply_outcome_bits(b, op, bits), p)
                })
                .collect(),
        )
    }
}

/// Contingent decision: LAO* over the uniform model, returning the
/// recommended operator at `root`.
pub fn contingent_decide(
    model: &UniformModel,
    root: &AbstractBelief,
    tol: f64,
    cap: usize,
) -> Result<Option<OpId>, SolveError> {
    let policy = lao_star(model, root, tol, cap)?;
    Ok(policy.action(root))
}

// ---------------------------------------------------------------------------
// determinized decision rules
// ---------------------------------------------------------------------------

/// Most-likely-outcome determinization: each offered operator keeps only its
/// most probable outcome (lowest assignment on ties), edges cost 1, and the
/// cheapest plan is returned.
pub fn mlo_decide(model: &dyn AbstractModel, root: &AbstractBelief) -> Option<Plan> {
    open_loop_plan(model, root, |rows| {
        let (bits, after, _) = rows
            .iter()
            .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))
            .cloned()?;
        Some(vec![(bits, after, 1.0)])
    })
}

/// Weighted all-outcomes determinization: every observed outcome is an edge
/// costing `-ln` of its learned probability; the minimum-cost open-loop plan
/// is returned.
pub fn wao_decide(model: &dyn AbstractModel, root: &AbstractBelief) -> Option<Plan> {
    open_loop_plan(model, root, |rows| {
        Some(rows.iter().map(|(bits, after, p)| (*bits, after.clone(), -p.ln())).collect())
    })
}

/// Deterministic Dijkstra over the edges produced by `edges_of`, applied to
/// each offered operator's outcome rows.
fn open_loop_plan(
    model: &dyn AbstractModel,
    root: &AbstractBelief,
    edges_of: impl Fn(&[(OutcomeBits, AbstractBelief, f64)]) -> Option<Vec<(OutcomeBits, AbstractBelief, f64)>>,
) -> Option<Plan> {
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Entry(f64, u64, u32);
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
        }
    }

    let mut states = vec![root.clone()];
    let mut index: HashMap<AbstractBelief, u32> = HashMap::new();
    index.insert(root.clone(), 0);
    let mut dist = vec![0.0_f64];
    let mut parent: Vec<Option<(u32, OpId, OutcomeBits, f64)>> = vec![None];
    let mut closed = vec![false];
    let mut heap = BinaryHeap::new();
    heap.push(Entry(0.0, 0, 0));
    let mut seq = 0u64;

    while let Some(Entry(_, _, u)) = heap.pop() {
        let u = u as usize;
        if closed[u] {
            continue;
        }
        closed[u] = true;
        let b = states[u].clone();
        if model.is_goal(&b) {
            // reconstruct
            let mut steps = Vec::new();
            let mut cur = u;
            let mut total = 0.0;
            while let Some((prev, op, bits, cost)) = parent[cur] {
                steps.push(PlanStep {
                    before: states[prev as usize].clone(),
                    op,
                    bits,
                    after: states[cur].clone(),
                    cost,
                });
                total += cost;
                cur = prev as usize;
            }
            steps.reverse();
            return Some(Plan { steps, cost: total });
        }
        for op in model.available_ops(&b) {
            let rows = model.transition(&b, op).expect("offered ops are explored");
            let Some(edges) = edges_of(&rows) else { continue };
            for (bits, after, cost) in edges {
                let g = dist[u] + cost;
                let v = match index.get(&after) {
                    Some(&v) => {
                        if closed[v as usize] || g >= dist[v as usize] {
                            continue;
                        }
                        dist[v as usize] = g;
                        parent[v as usize] = Some((u as u32, op, bits, cost));
                        v
                    }
                    None => {
                        let v = states.len() as u32;
                        states.push(after.clone());
                        index.insert(after, v);
                        dist.push(g);
                        parent.push(Some((u as u32, op, bits, cost)));
                        closed.push(false);
                        v
                    }
                };
                seq += 1;
                heap.push(Entry(dist[v as usize], seq, v));
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// epsilon-greedy / random model learning
// ---------------------------------------------------------------------------

/// Epsilon-greedy learning: each iteration solves the MLE-compiled model
/// once, then rolls out from the root, taking a uniformly random applicable
/// operator with probability `eps` (or when the greedy policy is silent) and
/// the greedy operator otherwise. Counts update exactly as in Bayes
/// learning. `eps = 1` is random outcome sampling.
pub fn epsilon_greedy_learn(
    state: &mut LearnerState,
    env: &mut dyn Environment,
    root: BeliefHandle,
    cfg: &LearnConfig,
    eps: f64,
) -> Result<SparseMdp, ControlError> {
    let root_ab = abs(env, &state.problem, root)?;
    if !state.pool.contains(&root_ab) {
        state.pool.insert(root_ab.clone(), root);
    }
    let seed_base = state.seed();

    for _ in 0..cfg.iterations {
        if cfg.sim_budget > 0 && state.sim_count >= cfg.sim_budget {
            break;
        }
        state.iteration += 1;
        let model = state.compile(&root_ab, cfg.gamma);
        let policy = solve_vi(&model, &root_ab, 1e-9, 200_000).ok();
        let mut rng = Rng::new(derive_seed(seed_base, TAG_EPS, state.iteration));

        let mut b = root;
        let mut ab = root_ab.clone();
        let mut depth = 0usize;
        let mut sims = 0usize;
        while sims < cfg.sims_per_iter {
            if cfg.sim_budget > 0 && state.sim_count >= cfg.sim_budget {
                break;
            }
            let at_goal = state.problem.eval_goal(&ab);
            let applicable = state.problem.applicable_ops(&ab);
            if at_goal || applicable.is_empty() || depth >= cfg.horizon_cap {
                if ab == root_ab && (at_goal || applicable.is_empty()) {
                    break; // the root itself is terminal
                }
                b = root;
                ab = root_ab.clone();
                depth = 0;
                continue;
            }
            let greedy = policy.as_ref().and_then(|p| p.action(&ab)).filter(|op| {
                applicable.contains(op)
            });
            let op = match greedy {
                Some(op) if rng.next_f64() >= eps => op,
                _ => applicable[rng.below(applicable.len())],
            };
            let (_, ab2, b2) = state.record_from(env, b, &ab, op)?;
            b = b2;
            ab = ab2;
            depth += 1;
            sims += 1;
        }
    }
    Ok(state.compile(&root_ab, cfg.gamma))
}

// ---------------------------------------------------------------------------
// belief-space MCTS
// ---------------------------------------------------------------------------

/// Outcome of one tree search.
#[derive(Debug, Clone)]
pub struct MctsResult {
    pub best: Option<OpId>,
    pub root_visits: u64,
    /// Per-operator visit counts at the root, ascending by operator.
    pub root_arms: Vec<(OpId, u64)>,
}

/// UCT over controller-level belief transitions with the environment as the
/// generative model; nodes aggregate concrete beliefs by abstraction, the
/// rollout policy is uniformly random, and the max-visit root operator is
/// returned. Deterministic per seed.
pub fn mcts_decide(
    env: &mut dyn Environment,
    problem: &Problem,
    root: BeliefHandle,
    params: MctsParams,
    gamma: f64,
    seed: u64,
) -> Result<MctsResult, ControlError> {
    struct Arm {
        visits: u64,
        value_sum: f64,
    }
    struct Node {
        visits: u64,
        arms: HashMap<OpId, Arm>,
    }
    let mut nodes: HashMap<AbstractBelief, Node> = HashMap::new();

    let root_ab = abs(env, problem, root)?;
    if problem.eval_goal(&root_ab) || problem.applicable_ops(&root_ab).is_empty() {
        return Ok(MctsResult { best: None, root_visits: 0, root_arms: Vec::new() });
    }
    nodes.insert(root_ab.clone(), Node { visits: 0, arms: HashMap::new() });

    for r in 0..params.rollouts {
        let mut rng = Rng::new(derive_seed(seed, TAG_MCTS, r as u64));
        let mut b = root;
        let mut ab = root_ab.clone();
        // (node key, op, depth) along the in-tree part
        let mut path: Vec<(AbstractBelief, OpId, usize)> = Vec::new();
        let mut reward = 0.0_f64;
        let mut depth = 0usize;
        let mut in_tree = true;

        loop {
            if env.is_goal(problem, &ab)? {
                reward = gamma.powi(depth as i32);
                break;
            }
            if depth >= params.depth {
                break;
            }
            let applicable = problem.applicable_ops(&ab);
            if applicable.is_empty() {
                break;
            }
            let op = if in_tree {
                match nodes.get(&ab) {
                    Some(node) if node.visits > 0 => {
                        // UCB over arms; untried arms first in id order
                        let untried = applicable
                            .iter()
                            .copied()
                            .find(|op| !node.arms.contains_key(op));
                        match untried {
                            Some(op) => op,
                            None => {
                                let ln_n = (node.visits as f64).ln();
                                let mut best = applicable[0];
                                let mut best_score = f64::NEG_INFINITY;
                                for &op in &applicable {
                                    let arm = &node.arms[&op];
                                    let score = arm.value_sum / arm.visits as f64
                                        + params.c_ucb * (ln_n / arm.visits as f64).sqrt();
                                    if score > best_score + 1e-15 {
                                        best_score = score;
                                        best = op;
                                    }
                                }
                                best
                            }
                        }
                    }
                    _ => {
                        // leaf: register the node, record its action in the
                        // backup path, then switch to random playout
                        nodes
                            .entry(ab.clone())
                            .or_insert(Node { visits: 0, arms: HashMap::new() });
                        let op = applicable[rng.below(applicable.len())];
                        path.push((ab.clone(), op, depth));
                        in_tree = false;
                        op
                    }
                }
            } else {
                applicable[rng.below(applicable.len())]
            };
            if in_tree {
                path.push((ab.clone(), op, depth));
            }
            let sim_seed = rng.next_u64();
            let out = env.simulate(b, op, sim_seed)?;
            b = out.next;
            ab = abs(env, problem, b)?;
            depth += 1;
        }

        // backup discounted-from-each-node returns
        for (key, op, d) in path {
            let node = nodes.get_mut(&key).unwrap();
            node.visits += 1;
            let arm = node.arms.entry(op).or_insert(Arm { visits: 0, value_sum: 0.0 });
            arm.visits += 1;
            if reward > 0.0 {
                arm.value_sum += reward / gamma.powi(d as i32);
            }
        }
    }

    let node = &nodes[&root_ab];
    let best = node
        .arms
        .iter()
        .max_by(|(a_op, a), (b_op, b)| a.visits.cmp(&b.visits).then(b_op.cmp(a_op)))
        .map(|(&op, _)| op);
    let mut root_arms: Vec<(OpId, u64)> =
        node.arms.iter().map(|(&op, arm)| (op, arm.visits)).collect();
    root_arms.sort_unstable();
    Ok(MctsResult { best, root_visits: node.visits, root_arms })
}

// ---------------------------------------------------------------------------
// providers
// ---------------------------------------------------------------------------

/// Decision provider combining a learning method with a decision rule.
/// Relearning fires when the compiled model offers no explored applicable
/// operator in the current abstract belief (for `Learning::None` the uniform
/// model is rebuilt, which only helps after widening).
pub struct ModelAgent {
    pub state: LearnerState,
    pub cfg: LearnConfig,
    pub learning: Learning,
    pub decision: Decision,
    pub solve_tol: f64,
    pub state_cap: usize,
    model: Option<Box<dyn AbstractModel>>,
    policy: Option<Policy>,
    /// Number of learn calls triggered so far.
    pub relearn_count: u64,
}

impl ModelAgent {
    pub fn new(state: LearnerState, cfg: LearnConfig, learning: Learning, decision: Decision) -> Self {
        ModelAgent {
            state,
            cfg,
            learning,
            decision,
            solve_tol: 1e-9,
            state_cap: 200_000,
            model: None,
            policy: None,
            relearn_count: 0,
        }
    }

    /// Installs an already-learned model (no relearn happens until the
    /// current belief leaves it).
    pub fn with_model(mut self, model: SparseMdp) -> Self {
        self.model = Some(Box::new(model));
        self
    }

    pub fn sims_used(&self) -> u64 {
        self.state.sim_count
    }

    fn relearn(
        &mut self,
        env: &mut dyn Environment,
        b: BeliefHandle,
        ab: &AbstractBelief,
    ) -> Result<(), ControlError> {
        self.relearn_count += 1;
        let model: Box<dyn AbstractModel> = match self.learning {
            Learning::Bayes => Box::new(self.state.learn(env, b, &self.cfg)?),
            Learning::EpsGreedy(e) => {
                Box::new(epsilon_greedy_learn(&mut self.state, env, b, &self.cfg, e)?)
            }
            Learning::Random => {
                Box::new(epsilon_greedy_learn(&mut self.state, env, b, &self.cfg, 1.0)?)
            }
            Learning::None => Box::new(UniformModel {
                problem: Arc::new(self.state.problem.clone()),
                initial: ab.clone(),
                gamma: self.cfg.gamma,
            }),
        };
        self.model = Some(model);
        self.policy = None;
        Ok(())
    }

    fn needs_relearn(&self, ab: &AbstractBelief) -> bool {
        match &self.model {
            None => true,
            Some(m) => m.available_ops(ab).is_empty(),
        }
    }
}

impl DecisionProvider for ModelAgent {
    fn problem(&self) -> &Problem {
        &self.state.problem
    }

    fn decide(
        &mut self,
        env: &mut dyn Environment,
        b: BeliefHandle,
    ) -> Result<Option<OpId>, ControlError> {
        let ab = abs(env, &self.state.problem, b)?;
        if self.needs_relearn(&ab) {
            match self.relearn(env, b, &ab) {
                Ok(()) => {}
                Err(ControlError::Learn(crate::learner::LearnError::NoPlan)) => {
                    return Ok(None);
                }
                Err(e) => return Err(e),
            }
            if self.needs_relearn(&ab) {
                return Ok(None); // learning could not cover this state
            }
        }
        let model = self.model.as_deref().unwrap();
        match self.decision {
            Decision::Lao | Decision::Vi => {
                let cached = self.policy.as_ref().and_then(|p| p.action(&ab));
                if let Some(op) = cached {
                    return Ok(Some(op));
                }
                let solved = match self.decision {
                    Decision::Lao => lao_star(model, &ab, self.solve_tol, self.state_cap),
                    _ => solve_vi(model, &ab, self.solve_tol, self.state_cap),
                };
                match solved {
                    Ok(policy) => {
                        let op = policy.action(&ab);
                        self.policy = Some(policy);
                        Ok(op)
                    }
                    Err(SolveError::NoPolicy) => Ok(None),
                    Err(e) => Err(e.into()),
                }
            }
            Decision::Mlo => Ok(mlo_decide(model, &ab).and_then(|p| {
                p.steps.first().map(|s| s.op)
            })),
            Decision::Wao => Ok(wao_decide(model, &ab).and_then(|p| {
                p.steps.first().map(|s| s.op)
            })),
        }
    }
}

/// Provider wrapping [`mcts_decide`]; a fresh search per step.
pub struct MctsAgent {
    pub problem: Problem,
    pub params: MctsParams,
    pub gamma: f64,
    pub seed: u64,
    steps: u64,
}

impl MctsAgent {
    pub fn new(problem: Problem, params: MctsParams, gamma: f64, seed: u64) -> Self {
        MctsAgent { problem, params, gamma, seed, steps: 0 }
    }
}

impl DecisionProvider for MctsAgent {
    fn problem(&self) -> &Problem {
        &self.problem
    }

    fn decide(
        &mut self,
        env: &mut dyn Environment,
        b: BeliefHandle,
    ) -> Result<Option<OpId>, ControlError> {
        self.steps += 1;
        let seed = derive_seed(self.seed, TAG_MCTS ^ 0xffff, self.steps);
        Ok(mcts_decide(env, &self.problem, b, self.params, self.gamma, seed)?.best)
    }
}
