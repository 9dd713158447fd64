//! Model learning: simulate controllers along optimistically-priced
//! determinized plans, maintain the outcome-count maps and the belief pool,
//! grow the ground operator set by progressive widening, and compile the
//! learned counts into a sparse abstract MDP.

pub mod mdp;
pub mod table;

pub use mdp::{AbstractModel, SparseMdp};
pub use table::{ucond_bits, ueff_bits, OutcomeTable, TableError};

use crate::bandit::{beta_entropy, BetaPrior};
use crate::belief::{abs, BeliefHandle, BeliefPool, EnvError, Environment};
use crate::detplanner::{self, PlanStep, SearchParams};
use crate::rng::derive_seed;
use crate::symbolic::{AbstractBelief, DomainError, OpId, OutcomeBits, Problem};
use std::sync::Arc;
use thiserror::Error;

const TAG_POOL: u64 = 0x01;
const TAG_SIM: u64 = 0x02;
const TAG_WIDEN: u64 = 0x03;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("determinized planner found no goal-reaching plan")]
    NoPlan,
    #[error("no concrete belief pooled under the requested abstract belief")]
    EmptyPool,
    #[error("operator `{0}` is not applicable in the given abstract belief")]
    Inapplicable(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Knobs of one model-learning call: `iterations` outer loops, each
/// requesting `plans_per_iter` determinized plans and simulating up to
/// `sims_per_iter` of their transitions.
#[derive(Debug, Clone, Copy)]
pub struct LearnConfig {
    pub iterations: u64,
    pub plans_per_iter: usize,
    pub sims_per_iter: usize,
    pub prior: BetaPrior,
    pub widen_k: f64,
    pub widen_alpha: f64,
    pub gamma: f64,
    pub horizon_cap: usize,
    pub expansion_cap: usize,
    /// Overall simulation budget; learning stops once
    /// [`LearnerState::sim_count`] reaches it (0 = unlimited).
    pub sim_budget: u64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            iterations: 10,
            plans_per_iter: 2,
            sims_per_iter: 20,
            prior: BetaPrior::default(),
            widen_k: 3.0,
            widen_alpha: 0.5,
            gamma: 0.98,
            horizon_cap: 50,
            expansion_cap: 500_000,
            sim_budget: 0,
        }
    }
}

/// Mutable learning state threaded through relearning calls: the grounded
/// problem (operators grow by widening, `ucond` sets grow from controller
/// feedback), the count table, the belief pool and the global iteration
/// counter.
#[derive(Debug, Clone)]
pub struct LearnerState {
    pub problem: Problem,
    pub table: OutcomeTable,
    pub pool: BeliefPool,
    pub iteration: u64,
    /// Total controller simulations run so far.
    pub sim_count: u64,
    root_seed: u64,
    widen_serial: u64,
}

impl LearnerState {
    pub fn new(problem: Problem, prior: BetaPrior, root_seed: u64) -> Self {
        LearnerState {
            problem,
            table: OutcomeTable::new(prior),
            pool: BeliefPool::new(),
            iteration: 0,
            sim_count: 0,
            root_seed,
            widen_serial: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.root_seed
    }

    /// Alg. 2 lines 15-22: draw a concrete belief consistent with `from`,
    /// simulate the controller, pool the result, and update the counts. Any
    /// `ucond` feedback is merged into the operator, dropping its table rows.
    pub fn record_simulation(
        &mut self,
        env: &mut dyn Environment,
        from: &AbstractBelief,
        op_id: OpId,
    ) -> Result<(OutcomeBits, AbstractBelief), LearnError> {
        let pick_seed = derive_seed(self.root_seed, TAG_POOL, self.sim_count);
        let b1 = self.pool.sample(from, pick_seed).map_err(|_| LearnError::EmptyPool)?;
        let (eff, after, _) = self.record_from(env, b1, from, op_id)?;
        Ok((eff, after))
    }

    /// Like [`LearnerState::record_simulation`] but simulating from a given
    /// concrete belief (used by rollout-style learners).
    pub fn record_from(
        &mut self,
        env: &mut dyn Environment,
        b1: BeliefHandle,
        from: &AbstractBelief,
        op_id: OpId,
    ) -> Result<(OutcomeBits, AbstractBelief, BeliefHandle), LearnError> {
        let op = self.problem.op(op_id);
        if !self.problem.applicable(op, from) {
            return Err(LearnError::Inapplicable(self.problem.format_op(op)));
        }
        let sim_seed = derive_seed(self.root_seed, TAG_SIM, self.sim_count);
        let outcome = env.simulate(b1, op_id, sim_seed)?;
        self.sim_count += 1;

        let after = abs(env, &self.problem, outcome.next)?;
        self.pool.insert(after.clone(), outcome.next);

        let op = self.problem.op(op_id);
        let pre = ucond_bits(from, op);
        let mut eff: OutcomeBits = 0;
        for (i, &p) in op.ueff.iter().enumerate() {
            if env.evaluate(outcome.next, p)? {
                eff |= 1 << i;
            }
        }
        self.table.record(op_id, pre, eff);

        if !outcome.ucond_feedback.is_empty() {
            let op = &mut self.problem.operators[op_id as usize];
            let mut grew = false;
            for p in outcome.ucond_feedback {
                if !op.ucond.contains(&p) {
                    op.ucond.push(p);
                    grew = true;
                }
            }
            if grew {
                // stale rows are keyed by the old, shorter assignment
                self.table.clear_op(op_id);
            }
        }
        Ok((eff, after, outcome.next))
    }

    /// Alg. 2 lines 9-14: keep transitions whose source has pooled concrete
    /// beliefs, rank by posterior entropy of the planned outcome (ties by
    /// position in the concatenated plan list), and return up to `budget`
    /// indices into `steps` in selection order.
    pub fn select_transitions(&self, steps: &[&PlanStep], budget: usize) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = Vec::new();
        for (idx, step) in steps.iter().enumerate() {
            if !self.pool.contains(&step.before) {
                continue;
            }
            let op = self.problem.op(step.op);
            let pre = ucond_bits(&step.before, op);
            let eff = ueff_bits(&step.after, op);
            let c = self.table.counts(step.op, pre, eff);
            let h = beta_entropy(
                self.table.prior.alpha + c.successes as f64,
                self.table.prior.beta + c.failures as f64,
            );
            scored.push((h, idx));
        }
        // stable: descending entropy, then earliest position
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.into_iter().take(budget).map(|(_, i)| i).collect()
    }

    /// Appendix-style progressive widening: for every schema with continuous
    /// parameters, keep roughly `k * visits^alpha` ground instances (at least
    /// one), sampling new parameters from the environment's streams.
    pub fn progressive_widen(
        &mut self,
        env: &mut dyn Environment,
        cfg: &LearnConfig,
    ) -> Result<bool, LearnError> {
        let streams = env.param_streams();
        if streams.is_empty() {
            return Ok(false);
        }
        let mut changed = false;
        for schema_idx in 0..self.problem.domain.schemata.len() {
            let schema = &self.problem.domain.schemata[schema_idx];
            let continuous: Vec<String> = schema
                .params
                .iter()
                .map(|p| p.ty.clone())
                .filter(|t| streams.contains(t))
                .collect();
            if continuous.is_empty() {
                continue;
            }
            loop {
                let instances: Vec<OpId> = self
                    .problem
                    .operators
                    .iter()
                    .enumerate()
                    .filter(|(_, op)| op.schema_idx == schema_idx)
                    .map(|(i, _)| i as OpId)
                    .collect();
                let visits = self.table.total_visits(instances.iter().copied());
                let target = (cfg.widen_k * (visits as f64).powf(cfg.widen_alpha) + 1e-9)
                    .floor()
                    .max(1.0) as usize;
                if instances.len() >= target {
                    break;
                }
                for stream in &continuous {
                    let seed = derive_seed(self.root_seed, TAG_WIDEN, self.widen_serial);
                    self.widen_serial += 1;
                    let name = env.sample_parameter(stream, seed)?;
                    if self.problem.entity_id(&name).is_none() {
                        self.problem.add_entity(stream, &name)?;
                    }
                }
                let before = self.problem.operators.len();
                // re-ground every schema: the new entity is shared
                for i in 0..self.problem.domain.schemata.len() {
                    match self.problem.ground_schema(i) {
                        Ok(_) => {}
                        Err(DomainError::MissingPool(_)) => {}
                        Err(e) => return Err(e.into()),
                    }
                }
                env.prepare(&self.problem)?;
                changed = true;
                if self.problem.operators.len() == before {
                    break; // sampling produced nothing new
                }
            }
        }
        Ok(changed)
    }

    /// Compiles the current counts into a sparse MDP snapshot rooted at the
    /// abstraction of `root`.
    pub fn compile(&self, root: &AbstractBelief, gamma: f64) -> SparseMdp {
        SparseMdp::new(
            Arc::new(self.problem.clone()),
            self.table.clone(),
            root.clone(),
            gamma,
        )
    }

    /// The full model-learning loop: widen, plan, select, simulate, compile.
    /// Deterministic given the learner's root seed and the config.
    pub fn learn(
        &mut self,
        env: &mut dyn Environment,
        root: BeliefHandle,
        cfg: &LearnConfig,
    ) -> Result<SparseMdp, LearnError> {
        let root_ab = abs(env, &self.problem, root)?;
        if !self.pool.contains(&root_ab) {
            self.pool.insert(root_ab.clone(), root);
        }

        for _ in 0..cfg.iterations {
            if cfg.sim_budget > 0 && self.sim_count >= cfg.sim_budget {
                break;
            }
            self.iteration += 1;
            self.progressive_widen(env, cfg)?;

            let heuristic = env.plan_heuristic(&self.problem);
            let params = SearchParams {
                iteration: self.iteration,
                horizon_cap: cfg.horizon_cap,
                expansion_cap: cfg.expansion_cap,
            };
            let problem = &self.problem;
            let goal = |b: &AbstractBelief| problem.eval_goal(b);
            let plans = detplanner::plan_topk(
                problem,
                &self.table,
                &root_ab,
                &goal,
                cfg.plans_per_iter,
                params,
                heuristic.as_deref(),
            );
            if plans.is_empty() {
                return Err(LearnError::NoPlan);
            }

            let steps: Vec<&PlanStep> = plans.iter().flat_map(|p| p.steps.iter()).collect();
            let mut budget = cfg.sims_per_iter;
            if cfg.sim_budget > 0 {
                let left = cfg.sim_budget.saturating_sub(self.sim_count) as usize;
                budget = budget.min(left);
            }
            let chosen = self.select_transitions(&steps, budget);
            for idx in chosen {
                let step = steps[idx];
                // the pool filter ran at selection time; a belief can only
                // gain handles since, so sampling cannot fail here
                self.record_simulation(env, &step.before.clone(), step.op)?;
            }
        }
        Ok(self.compile(&root_ab, cfg.gamma))
    }
}

/// Bit vector of `b`'s values on `op.ucond`, as specified for Alg. 2 line 10.
pub fn ucond_assignment(b: &AbstractBelief, problem: &Problem, op: OpId) -> Vec<bool> {
    let op = problem.op(op);
    op.ucond.iter().map(|&p| b.get(p)).collect()
}
