//! Belief-space task planning with learned sparse abstract MDPs.
//!
//! The pipeline: a domain written in an extended operator language is
//! grounded over typed entities ([`symbolic`]); abstract beliefs summarize an
//! environment's concrete beliefs through boolean propositions ([`belief`]);
//! a learner simulates controllers along optimistically-priced determinized
//! plans to estimate outcome distributions ([`bandit`], [`detplanner`],
//! [`learner`]); the compiled sparse MDP is solved probabilistically
//! ([`solver`]) inside a replanning control loop ([`control`]). Bundled
//! desk-scale environments and comparison strategies live in [`envs`] and
//! [`baselines`].

pub mod bandit;
pub mod baselines;
pub mod belief;
pub mod control;
pub mod detplanner;
pub mod envs;
pub mod learner;
pub mod rng;
pub mod solver;
pub mod symbolic;

pub use belief::{abs, BeliefHandle, BeliefPool, Environment, SimOutcome};
pub use symbolic::{AbstractBelief, Domain, GroundOperator, OpId, Problem, PropId};
