//! Abstract beliefs, the abstraction map, the environment contract and the
//! abstract-to-concrete belief pool.
//!
//! Concrete beliefs never cross this boundary: environments hand out opaque
//! [`BeliefHandle`]s and interpret them internally (a handle might index a
//! posterior vector, a particle set or a plain world state). Handles denote
//! immutable belief values, so episodes and mental simulations can share
//! them freely.

use crate::symbolic::{AbstractBelief, GroundOperator, OpId, Problem, PropId};
use crate::rng::Rng;
use std::collections::HashMap;
use thiserror::Error;

pub use crate::symbolic::AbstractBelief as Belief;

/// Opaque, environment-owned identifier for a concrete belief.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BeliefHandle(pub u64);

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EnvError {
    #[error("invalid belief handle {0:?}")]
    InvalidHandle(BeliefHandle),
    #[error("environment cannot evaluate proposition id {0}")]
    UnknownProposition(PropId),
    #[error("unknown controller `{0}`")]
    UnknownController(String),
    #[error("parameter stream `{0}` exhausted")]
    StreamExhausted(String),
    #[error("environment error: {0}")]
    Other(String),
}

/// Result of simulating one controller execution.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub next: BeliefHandle,
    /// Propositions the controller reports as newly relevant to its outcome
    /// distribution; merged into the operator's `ucond` set by the learner.
    pub ucond_feedback: Vec<PropId>,
}

impl SimOutcome {
    pub fn new(next: BeliefHandle) -> Self {
        SimOutcome { next, ucond_feedback: Vec::new() }
    }
}

/// The environment contract hiding the low-level POMDP: belief sampling,
/// controller simulation and proposition evaluation.
///
/// `simulate` must be a pure function of `(belief, operator, seed)`, and
/// `evaluate` must be deterministic. Executing a controller "for real" is
/// simulation from the live belief with a fresh seed: when belief updates are
/// exact, the distribution over next beliefs is the same either way.
pub trait Environment {
    fn name(&self) -> &str;

    /// Typed discrete entity pools, including pre-bound constants.
    fn type_pools(&self) -> Vec<(String, Vec<String>)>;

    /// Types whose entities are drawn from a continuous parameter stream.
    fn param_streams(&self) -> Vec<String> {
        Vec::new()
    }

    /// Draws a fresh parameter from a stream, returning its entity name.
    fn sample_parameter(&mut self, stream: &str, _seed: u64) -> Result<String, EnvError> {
        Err(EnvError::StreamExhausted(stream.to_string()))
    }

    /// Called after grounding and after every universe change so the
    /// environment can bind proposition and operator ids.
    fn prepare(&mut self, problem: &Problem) -> Result<(), EnvError>;

    fn initial_belief(&mut self) -> BeliefHandle;

    /// Deterministic truth value of a base proposition under a belief.
    fn evaluate(&mut self, b: BeliefHandle, prop: PropId) -> Result<bool, EnvError>;

    /// Simulates the controller of operator `op` from belief `b`.
    fn simulate(&mut self, b: BeliefHandle, op: OpId, seed: u64) -> Result<SimOutcome, EnvError>;

    /// Binary goal test; must depend only on the abstract belief.
    fn is_goal(&mut self, problem: &Problem, b: &AbstractBelief) -> Result<bool, EnvError> {
        Ok(problem.eval_goal(b))
    }

    /// Optional admissible heuristic for the determinized planner.
    fn plan_heuristic(
        &self,
        _problem: &Problem,
    ) -> Option<Box<dyn crate::detplanner::PlanHeuristic>> {
        None
    }

    fn clone_env(&self) -> Box<dyn Environment>;
}

/// Evaluates every base proposition of the universe under `b` and fills in
/// derived propositions, producing `abs(b)`.
pub fn abs(
    env: &mut dyn Environment,
    problem: &Problem,
    b: BeliefHandle,
) -> Result<AbstractBelief, EnvError> {
    let mut true_props = Vec::new();
    for p in problem.base_props() {
        if env.evaluate(b, p)? {
            true_props.push(p);
        }
    }
    let mut belief = AbstractBelief::from_true_props(true_props);
    problem.recompute_derived(&mut belief);
    Ok(belief)
}

/// Map from abstract beliefs to the concrete beliefs observed under them.
#[derive(Debug, Clone, Default)]
pub struct BeliefPool {
    map: HashMap<AbstractBelief, Vec<BeliefHandle>>,
}

impl BeliefPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `handle` under its abstraction, preserving insertion order.
    pub fn insert(&mut self, key: AbstractBelief, handle: BeliefHandle) {
        self.map.entry(key).or_default().push(handle);
    }

    pub fn contains(&self, key: &AbstractBelief) -> bool {
        self.map.get(key).is_some_and(|v| !v.is_empty())
    }

    pub fn handles(&self, key: &AbstractBelief) -> &[BeliefHandle] {
        self.map.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Uniform draw from the handles stored under `key`, deterministic in
    /// `seed`. An empty pool is an error: callers must filter first.
    pub fn sample(&self, key: &AbstractBelief, seed: u64) -> Result<BeliefHandle, EmptyPool> {
        let handles = self.handles(key);
        if handles.is_empty() {
            return Err(EmptyPool);
        }
        let mut rng = Rng::new(seed);
        Ok(handles[rng.below(handles.len())])
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AbstractBelief, &Vec<BeliefHandle>)> {
        self.map.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no concrete beliefs pooled under this abstract belief")]
pub struct EmptyPool;

/// Per-abstract-belief divergence between the belief distributions induced by
/// different operator histories. Large values flag abstractions whose
/// concrete-belief distribution is history-dependent.
#[derive(Debug, Clone, Default)]
pub struct DivergenceReport {
    /// `(abstract belief, max pairwise total-variation distance)`, one entry
    /// per abstract belief reached by at least two distinct histories.
    pub per_belief: Vec<(AbstractBelief, f64)>,
}

impl DivergenceReport {
    pub fn max_divergence(&self) -> f64 {
        self.per_belief.iter().map(|(_, d)| *d).fold(0.0, f64::max)
    }
}

/// Runs each history repeatedly from the initial belief and compares, per
/// final abstract belief, the empirical distribution of `probe` across
/// histories. Runs in which a precondition fails are discarded.
pub fn stationarity_diagnostic(
    env: &mut dyn Environment,
    problem: &Problem,
    histories: &[Vec<OpId>],
    samples_per_history: usize,
    probe: PropId,
    seed: u64,
) -> Result<DivergenceReport, EnvError> {
    // per history: abstract belief -> (count, probe-true count)
    let mut stats: Vec<HashMap<AbstractBelief, (u64, u64)>> = vec![HashMap::new(); histories.len()];
    for (hi, history) in histories.iter().enumerate() {
        for run in 0..samples_per_history {
            let mut b = env.initial_belief();
            let mut ok = true;
            for (step, &op_id) in history.iter().enumerate() {
                let ab = abs(env, problem, b)?;
                let op: &GroundOperator = problem.op(op_id);
                if !problem.applicable(op, &ab) {
                    ok = false;
                    break;
                }
                let s = crate::rng::derive_seed(
                    seed,
                    0x5d1a_0001,
                    ((hi as u64) << 40) ^ ((run as u64) << 8) ^ step as u64,
                );
                b = env.simulate(b, op_id, s)?.next;
            }
            if !ok {
                continue;
            }
            let ab = abs(env, problem, b)?;
            let probe_true = env.evaluate(b, probe)?;
            let e = stats[hi].entry(ab).or_insert((0, 0));
            e.0 += 1;
            if probe_true {
                e.1 += 1;
            }
        }
    }

    let mut keys: Vec<AbstractBelief> = Vec::new();
    for s in &stats {
        for k in s.keys() {
            if !keys.contains(k) {
                keys.push(k.clone());
            }
        }
    }
    keys.sort();

    let mut report = DivergenceReport::default();
    for key in keys {
        let freqs: Vec<f64> = stats
            .iter()
            .filter_map(|s| s.get(&key))
            .map(|&(n, t)| t as f64 / n as f64)
            .collect();
        if freqs.len() < 2 {
            continue; // reached by fewer than two histories
        }
        let mut max_tv: f64 = 0.0;
        for i in 0..freqs.len() {
            for j in i + 1..freqs.len() {
                max_tv = max_tv.max((freqs[i] - freqs[j]).abs());
            }
        }
        report.per_belief.push((key, max_tv));
    }
    Ok(report)
}
