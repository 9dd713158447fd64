//! Probabilistic solution of abstract-belief MDPs: value iteration over
//! explicit models, heuristic search (LAO*) over implicit ones, and
//! Monte-Carlo policy evaluation.
//!
//! Value convention: reward 1 is collected on entering a goal state,
//! discounted per executed controller, and the episode terminates there.
//! Goal states carry the pinned value 1; dead ends the value 0.

mod lao;

pub use lao::lao_star;

use crate::belief::Environment;
use crate::control::{run_episode, ControlError, DecisionProvider, EpisodeOutcome};
use crate::learner::AbstractModel;
use crate::rng::derive_seed;
use crate::symbolic::{AbstractBelief, OpId, Problem};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("initial state has no explored applicable operator")]
    NoPolicy,
    #[error("reachable state space exceeds the cap of {0} states")]
    TooLarge(usize),
    #[error("transition row sums to {0}, expected 1")]
    BadDistribution(f64),
}

/// A flat MDP with indexed states; the reference representation value
/// iteration works on.
#[derive(Debug, Clone)]
pub struct ExplicitMdp {
    /// Per state, the available actions.
    pub actions: Vec<Vec<ExplicitAction>>,
    pub goal: Vec<bool>,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct ExplicitAction {
    /// Originating ground operator, when the MDP came from a compiled model.
    pub op: Option<OpId>,
    pub outcomes: Vec<(usize, f64)>,
}

impl ExplicitMdp {
    pub fn n_states(&self) -> usize {
        self.actions.len()
    }

    /// Checks that every action's outcome probabilities sum to 1 (1e-12).
    pub fn validate(&self) -> Result<(), SolveError> {
        for acts in &self.actions {
            for a in acts {
                let sum: f64 = a.outcomes.iter().map(|&(_, p)| p).sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(SolveError::BadDistribution(sum));
                }
            }
        }
        Ok(())
    }
}

/// Value iteration to sup-norm residual `tol`. Returns state values and the
/// greedy policy (lowest-index tie-break); goal states are absorbing with
/// value 1, states without actions have value 0.
pub fn value_iteration(mdp: &ExplicitMdp, tol: f64) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = mdp.n_states();
    let mut v = vec![0.0_f64; n];
    for s in 0..n {
        if mdp.goal[s] {
            v[s] = 1.0;
        }
    }
    loop {
        let mut residual = 0.0_f64;
        for s in 0..n {
            if mdp.goal[s] || mdp.actions[s].is_empty() {
                continue;
            }
            let mut best = 0.0_f64;
            for a in &mdp.actions[s] {
                let q: f64 = a.outcomes.iter().map(|&(t, p)| p * v[t]).sum::<f64>() * mdp.gamma;
                if q > best {
                    best = q;
                }
            }
            residual = residual.max((best - v[s]).abs());
            v[s] = best;
        }
        if residual <= tol {
            break;
        }
    }
    let mut policy = vec![None; n];
    for s in 0..n {
        if mdp.goal[s] || mdp.actions[s].is_empty() {
            continue;
        }
        let mut best_q = f64::NEG_INFINITY;
        let mut best_a = None;
        for (ai, a) in mdp.actions[s].iter().enumerate() {
            let q: f64 = a.outcomes.iter().map(|&(t, p)| p * v[t]).sum::<f64>() * mdp.gamma;
            if q > best_q + 1e-15 {
                best_q = q;
                best_a = Some(ai);
            }
        }
        policy[s] = best_a;
    }
    (v, policy)
}

/// Breadth-first enumeration of the states reachable from the model's
/// initial belief through offered operators. State 0 is the initial belief;
/// discovery order is deterministic.
pub fn explicit_closure(
    model: &dyn AbstractModel,
    root: &AbstractBelief,
    cap: usize,
) -> Result<(ExplicitMdp, Vec<AbstractBelief>), SolveError> {
    let mut states: Vec<AbstractBelief> = vec![root.clone()];
    let mut index: HashMap<AbstractBelief, usize> = HashMap::new();
    index.insert(states[0].clone(), 0);
    let mut actions: Vec<Vec<ExplicitAction>> = Vec::new();
    let mut goal: Vec<bool> = Vec::new();

    let mut cursor = 0;
    while cursor < states.len() {
        let b = states[cursor].clone();
        let is_goal = model.is_goal(&b);
        goal.push(is_goal);
        let mut acts = Vec::new();
        if !is_goal {
            for op in model.available_ops(&b) {
                let rows = model.transition(&b, op).expect("available ops are explored");
                let mut outcomes = Vec::with_capacity(rows.len());
                for (_, after, p) in rows {
                    let t = match index.get(&after) {
                        Some(&t) => t,
                        None => {
                            let t = states.len();
                            if t >= cap {
                                return Err(SolveError::TooLarge(cap));
                            }
                            states.push(after.clone());
                            index.insert(after, t);
                            t
                        }
                    };
                    outcomes.push((t, p));
                }
                acts.push(ExplicitAction { op: Some(op), outcomes });
            }
        }
        actions.push(acts);
        cursor += 1;
    }
    Ok((ExplicitMdp { actions, goal, gamma: model.gamma() }, states))
}

/// Greedy policy over abstract beliefs with its value function.
#[derive(Debug, Clone, Default)]
pub struct Policy {
    pub actions: HashMap<AbstractBelief, OpId>,
    pub values: HashMap<AbstractBelief, f64>,
}

impl Policy {
    pub fn action(&self, b: &AbstractBelief) -> Option<OpId> {
        self.actions.get(b).copied()
    }

    pub fn value(&self, b: &AbstractBelief) -> f64 {
        self.values.get(b).copied().unwrap_or(0.0)
    }

    /// Text table `abstract-belief-bits <TAB> operator <TAB> value`, sorted
    /// by bit string.
    pub fn dump(&self, problem: &Problem) -> String {
        let width = problem.universe_len();
        let mut rows: Vec<(String, String, f64)> = self
            .values
            .iter()
            .map(|(b, &v)| {
                let op = match self.actions.get(b) {
                    Some(&op) => problem.format_op(problem.op(op)),
                    None => "-".to_string(),
                };
                (b.bit_string(width), op, v)
            })
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out = String::new();
        for (bits, op, v) in rows {
            out.push_str(&format!("{bits}\t{op}\t{v:.6}\n"));
        }
        out
    }
}

/// Solves a model by full enumeration plus value iteration.
pub fn solve_vi(
    model: &dyn AbstractModel,
    root: &AbstractBelief,
    tol: f64,
    cap: usize,
) -> Result<Policy, SolveError> {
    let (mdp, states) = explicit_closure(model, root, cap)?;
    let (v, pol) = value_iteration(&mdp, tol);
    let mut policy = Policy::default();
    for (s, b) in states.iter().enumerate() {
        policy.values.insert(b.clone(), v[s]);
        if let Some(ai) = pol[s] {
            policy.actions.insert(b.clone(), mdp.actions[s][ai].op.expect("closure actions"));
        }
    }
    if model.available_ops(root).is_empty() && !model.is_goal(root) {
        return Err(SolveError::NoPolicy);
    }
    Ok(policy)
}

const TAG_EPISODE: u64 = 0x21;

/// Monte-Carlo evaluation: runs `episodes` episodes with the provider
/// re-queried each step, and returns `(mean, standard error, returns)` of
/// the discounted return.
pub fn evaluate_policy(
    env: &mut dyn Environment,
    provider: &mut dyn DecisionProvider,
    episodes: usize,
    gamma: f64,
    step_limit: usize,
    seed: u64,
) -> Result<(f64, f64, Vec<f64>), ControlError> {
    assert!(episodes >= 1);
    let mut returns = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let ep_seed = derive_seed(seed, TAG_EPISODE, e as u64);
        let log = run_episode(env, provider, gamma, step_limit, ep_seed)?;
        debug_assert!(
            log.outcome != EpisodeOutcome::GoalReached || log.discounted_return > 0.0
        );
        returns.push(log.discounted_return);
    }
    let (mean, se) = mean_se(&returns);
    Ok((mean, se, returns))
}

/// Sample mean and standard error (n-1 denominator; zero for n < 2).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
