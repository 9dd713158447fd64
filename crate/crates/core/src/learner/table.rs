//! Outcome-count bookkeeping: the `N` and `D` maps plus the Beta prior.
//!
//! `N[pre, op]` counts simulations of `op` from beliefs whose `ucond`
//! assignment was `pre`; `D[pre, op, eff]` counts those that produced the
//! uncertain-effect assignment `eff`. Rows are keyed by compact bit
//! assignments, so every abstract belief agreeing on an operator's `ucond`
//! shares one row — the compression that lets a few simulations cover many
//! states.

use crate::bandit::{BetaPrior, OutcomeCounts};
use crate::symbolic::{AbstractBelief, GroundOperator, OpId, OutcomeBits, Problem};
use std::collections::BTreeMap;
use thiserror::Error;

/// Projects an abstract belief onto an operator's `ucond` propositions.
pub fn ucond_bits(b: &AbstractBelief, op: &GroundOperator) -> OutcomeBits {
    let mut bits: OutcomeBits = 0;
    for (i, &p) in op.ucond.iter().enumerate() {
        if b.get(p) {
            bits |= 1 << i;
        }
    }
    bits
}

/// Projects an abstract belief onto an operator's `ueff` propositions.
pub fn ueff_bits(b: &AbstractBelief, op: &GroundOperator) -> OutcomeBits {
    let mut bits: OutcomeBits = 0;
    for (i, &p) in op.ueff.iter().enumerate() {
        if b.get(p) {
            bits |= 1 << i;
        }
    }
    bits
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeTable {
    pub prior: BetaPrior,
    n: BTreeMap<(OpId, OutcomeBits), u64>,
    d: BTreeMap<(OpId, OutcomeBits, OutcomeBits), u64>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TableError {
    #[error("line {0}: malformed record")]
    Malformed(usize),
    #[error("line {0}: unknown operator `{1}`")]
    UnknownOperator(usize, String),
}

impl OutcomeTable {
    pub fn new(prior: BetaPrior) -> Self {
        OutcomeTable { prior, n: BTreeMap::new(), d: BTreeMap::new() }
    }

    pub fn n(&self, op: OpId, pre: OutcomeBits) -> u64 {
        self.n.get(&(op, pre)).copied().unwrap_or(0)
    }

    pub fn d(&self, op: OpId, pre: OutcomeBits, eff: OutcomeBits) -> u64 {
        self.d.get(&(op, pre, eff)).copied().unwrap_or(0)
    }

    /// Success/failure counts for one outcome row: `s = D`, `f = N - D`.
    pub fn counts(&self, op: OpId, pre: OutcomeBits, eff: OutcomeBits) -> OutcomeCounts {
        let s = self.d(op, pre, eff);
        OutcomeCounts::new(s, self.n(op, pre) - s)
    }

    /// Increments both `N[pre, op]` and `D[pre, op, eff]`.
    pub fn record(&mut self, op: OpId, pre: OutcomeBits, eff: OutcomeBits) {
        *self.n.entry((op, pre)).or_insert(0) += 1;
        *self.d.entry((op, pre, eff)).or_insert(0) += 1;
    }

    /// Observed outcome assignments for `(op, pre)` with their counts,
    /// ascending by assignment bits.
    pub fn outcomes(
        &self,
        op: OpId,
        pre: OutcomeBits,
    ) -> impl Iterator<Item = (OutcomeBits, u64)> + '_ {
        self.d
            .range((op, pre, 0)..=(op, pre, OutcomeBits::MAX))
            .map(|(&(_, _, eff), &c)| (eff, c))
    }

    /// Drops every row of `op`; used when its `ucond` set grows and the old
    /// assignments become meaningless.
    pub fn clear_op(&mut self, op: OpId) {
        self.n.retain(|&(o, _), _| o != op);
        self.d.retain(|&(o, _, _), _| o != op);
    }

    /// Total simulations recorded for any row of the given operators.
    pub fn total_visits(&self, ops: impl IntoIterator<Item = OpId>) -> u64 {
        let mut total = 0;
        for op in ops {
            total += self
                .n
                .range((op, 0)..=(op, OutcomeBits::MAX))
                .map(|(_, &c)| c)
                .sum::<u64>();
        }
        total
    }

    pub fn n_rows(&self) -> impl Iterator<Item = (OpId, OutcomeBits, u64)> + '_ {
        self.n.iter().map(|(&(op, pre), &c)| (op, pre, c))
    }

    pub fn d_rows(&self) -> impl Iterator<Item = (OpId, OutcomeBits, OutcomeBits, u64)> + '_ {
        self.d.iter().map(|(&(op, pre, eff), &c)| (op, pre, eff, c))
    }

    /// Smallest optimistic edge cost any outcome can have at `iteration`,
    /// used as the per-step lower bound by admissible plan heuristics.
    pub fn min_edge_cost(&self, iteration: u64) -> f64 {
        let fresh = crate::bandit::bayes_ucb_cost(self.prior, OutcomeCounts::default(), iteration);
        let mut min = fresh;
        for (&(op, pre, eff), _) in self.d.iter() {
            let c = crate::bandit::bayes_ucb_cost(self.prior, self.counts(op, pre, eff), iteration);
            if c < min {
                min = c;
            }
        }
        min
    }

    /// Tab-separated text dump, one record per line:
    /// `kind  op-name  bindings  pre-bits  eff-bits  count`.
    pub fn dump(&self, problem: &Problem) -> String {
        let mut out = String::new();
        let fmt_op = |op: OpId| -> (String, String) {
            let o = problem.op(op);
            let bindings = o
                .bindings
                .iter()
                .map(|&b| problem.entity_name(b).to_string())
                .collect::<Vec<_>>()
                .join(",");
            (o.name.clone(), bindings)
        };
        for (op, pre, c) in self.n_rows() {
            let (name, bindings) = fmt_op(op);
            let width = problem.op(op).ucond.len();
            out.push_str(&format!("N\t{name}\t{bindings}\t{}\t\t{c}\n", bits_str(pre, width)));
        }
        for (op, pre, eff, c) in self.d_rows() {
            let (name, bindings) = fmt_op(op);
            let o = problem.op(op);
            out.push_str(&format!(
                "D\t{name}\t{bindings}\t{}\t{}\t{c}\n",
                bits_str(pre, o.ucond.len()),
                bits_str(eff, o.ueff.len())
            ));
        }
        out
    }

    /// Parses a dump produced by [`OutcomeTable::dump`] against the same
    /// grounded problem.
    pub fn load(text: &str, problem: &Problem, prior: BetaPrior) -> Result<Self, TableError> {
        let mut table = OutcomeTable::new(prior);
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 6 {
                return Err(TableError::Malformed(idx + 1));
            }
            let bindings: Vec<&str> = if fields[2].is_empty() {
                Vec::new()
            } else {
                fields[2].split(',').collect()
            };
            let op = problem
                .op_id_by_name(fields[1], &bindings)
                .ok_or_else(|| TableError::UnknownOperator(idx + 1, fields[1].to_string()))?;
            let pre = bits_parse(fields[3]).ok_or(TableError::Malformed(idx + 1))?;
            let count: u64 = fields[5].parse().map_err(|_| TableError::Malformed(idx + 1))?;
            match fields[0] {
                "N" => {
                    table.n.insert((op, pre), count);
                }
                "D" => {
                    let eff = bits_parse(fields[4]).ok_or(TableError::Malformed(idx + 1))?;
                    table.d.insert((op, pre, eff), count);
                }
                _ => return Err(TableError::Malformed(idx + 1)),
            }
        }
        Ok(table)
    }

    /// Row-wise count conservation: for every `(op, pre)`,
    /// `sum_eff D[op, pre, eff] == N[op, pre]`.
    pub fn check_conservation(&self) -> bool {
        let mut sums: BTreeMap<(OpId, OutcomeBits), u64> = BTreeMap::new();
        for (&(op, pre, _), &c) in self.d.iter() {
            *sums.entry((op, pre)).or_insert(0) += c;
        }
        sums == self.n
    }
}

fn bits_str(bits: OutcomeBits, width: usize) -> String {
    (0..width)
        .map(|i| if bits & (1 << i) != 0 { '1' } else { '0' })
        .collect()
}

fn bits_parse(s: &str) -> Option<OutcomeBits> {
    let mut bits: OutcomeBits = 0;
    for (i, c) in s.chars().enumerate() {
        if i >= 16 {
            return None;
        }
        match c {
            '1' => bits |= 1 << i,
            '0' => {}
            _ => return None,
        }
    }
    Some(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_round_trip() {
        for width in 0..9usize {
            for bits in 0..(1u16 << width) {
                let s = bits_str(bits, width);
                assert_eq!(s.len(), width);
                assert_eq!(bits_parse(&s), Some(bits));
            }
        }
    }

    #[test]
    fn record_keeps_conservation() {
        let mut t = OutcomeTable::new(BetaPrior::default());
        t.record(0, 0b0, 0b01);
        t.record(0, 0b0, 0b01);
        t.record(0, 0b0, 0b10);
        t.record(1, 0b1, 0b0);
        assert_eq!(t.n(0, 0), 3);
        assert_eq!(t.d(0, 0, 0b01), 2);
        assert!(t.check_conservation());
        let rows: Vec<_> = t.outcomes(0, 0).collect();
        assert_eq!(rows, vec![(0b01, 2), (0b10, 1)]);
    }

    #[test]
    fn clear_op_removes_all_rows() {
        let mut t = OutcomeTable::new(BetaPrior::default());
        t.record(3, 0b0, 0b1);
        t.record(3, 0b1, 0b0);
        t.record(4, 0b0, 0b0);
        t.clear_op(3);
        assert_eq!(t.n(3, 0), 0);
        assert_eq!(t.n(3, 1), 0);
        assert_eq!(t.n(4, 0), 1);
        assert!(t.check_conservation());
    }
}
