//! The outer control loop: query a decision provider for the next
//! controller, execute it in the environment, update the belief, repeat
//! until the goal (or a step limit) is reached.
//!
//! Providers are re-queried every step. Learning-based providers relearn
//! lazily when the current abstract belief has no explored applicable
//! operator in their compiled model.

use crate::belief::{abs, BeliefHandle, EnvError, Environment};
use crate::learner::{ueff_bits, LearnError};
use crate::rng::derive_seed;
use crate::symbolic::{AbstractBelief, OpId, OutcomeBits, Problem};
use thiserror::Error;

const TAG_EXEC: u64 = 0x11;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Solve(#[from] crate::solver::SolveError),
    #[error("provider chose `{0}`, which is not applicable in the current belief")]
    InapplicableDecision(String),
}

/// Something that can pick the next controller for the current belief.
/// Implementations own whatever model or learning state they need.
pub trait DecisionProvider {
    fn problem(&self) -> &Problem;

    /// Returns the operator to execute, or `None` when the provider has no
    /// recommendation (the episode then fails).
    fn decide(
        &mut self,
        env: &mut dyn Environment,
        b: BeliefHandle,
    ) -> Result<Option<OpId>, ControlError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeOutcome {
    GoalReached,
    Failed,
    StepLimit,
}

impl EpisodeOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            EpisodeOutcome::GoalReached => "goal",
            EpisodeOutcome::Failed => "failed",
            EpisodeOutcome::StepLimit => "step-limit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeStep {
    pub belief: AbstractBelief,
    pub op: OpId,
    /// Observed assignment to the operator's uncertain effects.
    pub observed: OutcomeBits,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct EpisodeLog {
    pub steps: Vec<EpisodeStep>,
    pub outcome: EpisodeOutcome,
    pub discounted_return: f64,
}

/// Runs one episode from the environment's initial belief. The reward is 1,
/// discounted by `gamma` per executed controller, collected on first
/// entering a goal belief; the episode then terminates.
pub fn run_episode(
    env: &mut dyn Environment,
    provider: &mut dyn DecisionProvider,
    gamma: f64,
    step_limit: usize,
    seed: u64,
) -> Result<EpisodeLog, ControlError> {
    let mut b = env.initial_belief();
    let mut steps: Vec<EpisodeStep> = Vec::new();
    loop {
        let ab = abs(env, provider.problem(), b)?;
        if env.is_goal(provider.problem(), &ab)? {
            return Ok(EpisodeLog {
                discounted_return: gamma.powi(steps.len() as i32),
                steps,
                outcome: EpisodeOutcome::GoalReached,
            });
        }
        if steps.len() >= step_limit {
            return Ok(EpisodeLog {
                steps,
                outcome: EpisodeOutcome::StepLimit,
                discounted_return: 0.0,
            });
        }

        let started = std::time::Instant::now();
        let decision = provider.decide(env, b)?;
        let wall_ms = started.elapsed().as_millis() as u64;
        let Some(op_id) = decision else {
            return Ok(EpisodeLog {
                steps,
                outcome: EpisodeOutcome::Failed,
                discounted_return: 0.0,
            });
        };

        // decide() may have changed the provider's problem (widening), so
        // re-abstract before the applicability check
        let ab = abs(env, provider.problem(), b)?;
        let op = provider.problem().op(op_id);
        if !provider.problem().applicable(op, &ab) {
            return Err(ControlError::InapplicableDecision(
                provider.problem().format_op(op),
            ));
        }

        let exec_seed = derive_seed(seed, TAG_EXEC, steps.len() as u64);
        let outcome = env.simulate(b, op_id, exec_seed)?;
        let next_ab = abs(env, provider.problem(), outcome.next)?;
        let observed = ueff_bits(&next_ab, provider.problem().op(op_id));
        steps.push(EpisodeStep { belief: ab, op: op_id, observed, wall_ms });
        b = outcome.next;
    }
}
