//! Beta-posterior bookkeeping: posterior quantiles, the optimistic outcome
//! cost used by the determinized planner, and differential entropy used to
//! rank transitions for simulation.
//!
//! Outcome probabilities are Bernoulli with a Beta(α, β) prior. After `s`
//! successes and `f` failures the posterior is Beta(α+s, β+f); the planner
//! prices an outcome at `-ln` of an upper posterior quantile that tightens
//! with the learning iteration.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::{digamma, ln_gamma};
use thiserror::Error;

/// Probability floor applied before taking the log, so outcome costs stay
/// finite and determinized search always terminates.
pub const PROB_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPrior {
    pub fn new(alpha: f64, beta: f64) -> Self {
        assert!(alpha > 0.0 && beta > 0.0, "Beta parameters must be positive");
        BetaPrior { alpha, beta }
    }
}

impl Default for BetaPrior {
    fn default() -> Self {
        BetaPrior { alpha: 1.0, beta: 1.0 }
    }
}

/// Success/failure counts for one (context, operator, outcome) row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub successes: u64,
    pub failures: u64,
}

impl OutcomeCounts {
    pub fn new(successes: u64, failures: u64) -> Self {
        OutcomeCounts { successes, failures }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum BanditError {
    #[error("quantile {0} outside [0, 1]")]
    QuantileOutOfRange(f64),
    #[error("Beta parameters must be positive, got ({0}, {1})")]
    NonPositiveParameters(f64, f64),
}

/// Inverse CDF of Beta(alpha, beta): the `p` with `I_p(alpha, beta) = q`,
/// found by bisection on the regularized incomplete beta function to an
/// absolute tolerance of 1e-10.
pub fn beta_quantile(alpha: f64, beta: f64, q: f64) -> Result<f64, BanditError> {
    if alpha <= 0.0 || beta <= 0.0 {
        return Err(BanditError::NonPositiveParameters(alpha, beta));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(BanditError::QuantileOutOfRange(q));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    if q == 1.0 {
        return Ok(1.0);
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    // 60 halvings bring the bracket below 1e-18.
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(alpha, beta, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Upper-quantile schedule for iteration `i` (1-based): `1 - 1/(i+1)`.
///
/// The shifted index keeps iteration 1 well-defined (quantile 1/2 instead of
/// 0) while preserving the 1/i asymptotics.
#[inline]
pub fn ucb_quantile(iteration: u64) -> f64 {
    1.0 - 1.0 / (iteration as f64 + 1.0)
}

/// Optimistic outcome probability at iteration `i`: the `1 - 1/(i+1)`
/// posterior quantile, floored at [`PROB_FLOOR`].
pub fn bayes_ucb_probability(prior: BetaPrior, counts: OutcomeCounts, iteration: u64) -> f64 {
    let q = ucb_quantile(iteration.max(1));
    let p = beta_quantile(
        prior.alpha + counts.successes as f64,
        prior.beta + counts.failures as f64,
        q,
    )
    .expect("posterior parameters are positive and q is in (0,1)");
    p.max(PROB_FLOOR)
}

/// All-outcomes edge cost `-ln(p_ucb)`. Non-negative and finite; decreases
/// as evidence for the outcome accumulates and as the iteration grows.
pub fn bayes_ucb_cost(prior: BetaPrior, counts: OutcomeCounts, iteration: u64) -> f64 {
    -bayes_ucb_probability(prior, counts, iteration).ln()
}

fn ln_beta(alpha: f64, beta: f64) -> f64 {
    ln_gamma(alpha) + ln_gamma(beta) - ln_gamma(alpha + beta)
}

/// Differential entropy of Beta(alpha, beta):
/// `ln B(α,β) − (α−1)ψ(α) − (β−1)ψ(β) + (α+β−2)ψ(α+β)`.
pub fn beta_entropy(alpha: f64, beta: f64) -> f64 {
    assert!(alpha > 0.0 && beta > 0.0, "Beta parameters must be positive");
    ln_beta(alpha, beta) - (alpha - 1.0) * digamma(alpha) - (beta - 1.0) * digamma(beta)
        + (alpha + beta - 2.0) * digamma(alpha + beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-10;

    #[test]
    fn quantile_identity_for_uniform() {
        // Beta(1,1) inverse CDF is the identity
        assert!((beta_quantile(1.0, 1.0, 0.3).unwrap() - 0.3).abs() < TOL);
        assert!((beta_quantile(1.0, 1.0, 0.77).unwrap() - 0.77).abs() < TOL);
    }

    #[test]
    fn quantile_closed_form_for_beta_n_1() {
        // Beta(α,1) CDF is p^α, so the inverse is q^(1/α)
        let got = beta_quantile(4.0, 1.0, 0.75).unwrap();
        assert!((got - 0.75f64.powf(0.25)).abs() < TOL, "{got}");
        for n in [1u32, 2, 3, 7, 12] {
            let q = 0.37_f64;
            let want = q.powf(1.0 / n as f64);
            let got = beta_quantile(n as f64, 1.0, q).unwrap();
            assert!((got - want).abs() < TOL, "n={n} got={got} want={want}");
        }
    }

    #[test]
    fn quantile_symmetric_median() {
        assert!((beta_quantile(2.0, 2.0, 0.5).unwrap() - 0.5).abs() < TOL);
    }

    #[test]
    fn quantile_rejects_bad_inputs() {
        assert_eq!(
            beta_quantile(1.0, 1.0, 1.5),
            Err(BanditError::QuantileOutOfRange(1.5))
        );
        assert!(beta_quantile(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn ucb_cost_matches_hand_values() {
        // fresh prior at iteration 1: quantile 1/2, identity inverse CDF
        let c = bayes_ucb_cost(BetaPrior::default(), OutcomeCounts::new(0, 0), 1);
        assert!((c - 0.5f64.ln().abs()).abs() < 1e-12, "{c}");

        // three successes at iteration 3: -ln(beta_quantile(4,1,0.75)) = -ln(0.75^(1/4))
        let c = bayes_ucb_cost(BetaPrior::default(), OutcomeCounts::new(3, 0), 3);
        let want = -(0.75f64.powf(0.25).ln());
        assert!((c - want).abs() < 1e-10, "{c} vs {want}");
    }

    #[test]
    fn ucb_cost_hits_floor_under_overwhelming_failures() {
        let counts = OutcomeCounts::new(0, 1_000_000);
        for i in [1u64, 100, 1_000_000] {
            let c = bayes_ucb_cost(BetaPrior::default(), counts, i);
            assert!(c.is_finite());
            assert!(c <= -(PROB_FLOOR.ln()) + 1e-12);
        }
        // at low iterations the quantile is far below the floor
        let c = bayes_ucb_cost(BetaPrior::default(), counts, 1);
        assert!((c - -(PROB_FLOOR.ln())).abs() < 1e-12);
    }

    #[test]
    fn quantile_grows_and_cost_shrinks_with_iteration() {
        let counts = OutcomeCounts::new(2, 5);
        for i in 1..50u64 {
            let q_now = ucb_quantile(i);
            let q_next = ucb_quantile(i + 1);
            assert!(q_next >= q_now);
            let c_now = bayes_ucb_cost(BetaPrior::default(), counts, i);
            let c_next = bayes_ucb_cost(BetaPrior::default(), counts, i + 1);
            assert!(c_next <= c_now + 1e-15, "i={i}");
        }
    }

    #[test]
    fn cost_strictly_decreases_in_successes() {
        let prior = BetaPrior::default();
        let mut prev = bayes_ucb_cost(prior, OutcomeCounts::new(0, 3), 5);
        for s in 1..20u64 {
            let c = bayes_ucb_cost(prior, OutcomeCounts::new(s, 3), 5);
            assert!(c < prev, "s={s}: {c} !< {prev}");
            prev = c;
        }
    }

    #[test]
    fn entropy_of_uniform_is_zero() {
        assert!(beta_entropy(1.0, 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_decreases_under_concentration() {
        assert!(beta_entropy(10.0, 10.0) < beta_entropy(2.0, 2.0));
        let seq: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&n| beta_entropy(n, n))
            .collect();
        for w in seq.windows(2) {
            assert!(w[1] < w[0], "{seq:?}");
        }
    }

    #[test]
    fn consistency_cost_converges_to_neg_log_p() {
        // simulate Bernoulli(p*) counts and check -ln(p_ucb) -> -ln(p*)
        let p_star = 0.7;
        let mut rng = crate::rng::Rng::new(991);
        let mut s = 0u64;
        let mut f = 0u64;
        for _ in 0..10_000 {
            if rng.next_f64() < p_star {
                s += 1;
            } else {
                f += 1;
            }
        }
        let cost = bayes_ucb_cost(BetaPrior::default(), OutcomeCounts::new(s, f), 5);
        assert!((cost - -(p_star.ln())).abs() < 0.01, "{cost}");
    }
}
