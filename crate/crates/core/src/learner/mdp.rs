//! The compiled sparse abstract MDP and the model interface solvers consume.

use super::table::{ucond_bits, OutcomeTable};
use crate::symbolic::{AbstractBelief, OpId, OutcomeBits, Problem};
use std::sync::Arc;

/// Implicit abstract-belief MDP: what the probabilistic solvers need to
/// know. Implementations list the operators worth considering in a state
/// and the outcome distribution of applying one.
pub trait AbstractModel {
    fn problem(&self) -> &Problem;
    fn gamma(&self) -> f64;
    fn initial(&self) -> &AbstractBelief;
    fn is_goal(&self, b: &AbstractBelief) -> bool;

    /// Operators offered in `b`, ascending by id.
    fn available_ops(&self, b: &AbstractBelief) -> Vec<OpId>;

    /// Outcome distribution of `op` in `b`, or `None` when the pair is
    /// unexplored (such operators are never offered).
    fn transition(&self, b: &AbstractBelief, op: OpId)
        -> Option<Vec<(OutcomeBits, AbstractBelief, f64)>>;
}

/// The learned model: an implicit MDP whose transition probabilities are the
/// observed outcome fractions `D/N`, defined over abstract beliefs reachable
/// through explored `(ucond-assignment, operator)` pairs.
#[derive(Debug, Clone)]
pub struct SparseMdp {
    problem: Arc<Problem>,
    table: OutcomeTable,
    initial: AbstractBelief,
    gamma: f64,
}

impl SparseMdp {
    pub fn new(
        problem: Arc<Problem>,
        table: OutcomeTable,
        initial: AbstractBelief,
        gamma: f64,
    ) -> Self {
        assert!((0.0..1.0).contains(&gamma));
        SparseMdp { problem, table, initial, gamma }
    }

    pub fn table(&self) -> &OutcomeTable {
        &self.table
    }

    /// The most probable outcome of `op` in `b` (lowest assignment bits on
    /// ties), if the pair is explored.
    pub fn most_likely_outcome(
        &self,
        b: &AbstractBelief,
        op: OpId,
    ) -> Option<(OutcomeBits, AbstractBelief, f64)> {
        let rows = self.transition(b, op)?;
        rows.into_iter()
            .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))
    }
}

impl AbstractModel for SparseMdp {
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
        self.problem
            .applicable_ops(b)
            .into_iter()
            .filter(|&op| {
                let pre = ucond_bits(b, self.problem.op(op));
                self.table.n(op, pre) > 0
            })
            .collect()
    }

    fn transition(
        &self,
        b: &AbstractBelief,
        op_id: OpId,
    ) -> Option<Vec<(OutcomeBits, AbstractBelief, f64)>> {
        let op = self.problem.op(op_id);
        let pre = ucond_bits(b, op);
        let n = self.table.n(op_id, pre);
        if n == 0 {
            return None;
        }
        let rows = self
            .table
            .outcomes(op_id, pre)
            .map(|(eff, c)| {
                (eff, self.problem.apply_outcome_bits(b, op, eff), c as f64 / n as f64)
            })
            .collect();
        Some(rows)
    }
}
