//! Simulated pools of users answering pairwise comparison queries.
//!
//! Every user answers independently: with probability `1/2 + margin_u` the
//! answer agrees with the hidden ground truth, otherwise it is inverted. The
//! margin either is given directly ([`make_bernoulli_source`]) or comes from a
//! logistic curve over a fixed score gap ([`make_logistic_source`]).

use rand::RngCore;

use crate::error::{Error, Result};
use crate::types::{ItemId, TrueRanking, UserAccuracy, UserId, Vote};

/// A pool of users that can be queried with pairwise comparisons.
pub trait ComparisonSource {
    /// Ask `user` which of `i`, `j` is better, drawing noise from `rng`.
    /// Every call is tallied against the user.
    fn respond(&mut self, user: UserId, i: ItemId, j: ItemId, rng: &mut dyn RngCore) -> Vote;

    fn num_users(&self) -> usize;

    /// Queries answered so far, per user.
    fn query_counts(&self) -> &[u64];

    /// True accuracy margin of `user` — available because the pool is
    /// simulated. Only reference strategies and diagnostics may use it.
    fn margin(&self, user: UserId) -> f64;
}

/// Pool of independent users with known accuracies over a fixed ground truth.
#[derive(Debug, Clone)]
pub struct SimulatedSource {
    truth: TrueRanking,
    /// Per-user probability of agreeing with the ground truth.
    p_correct: Vec<f64>,
    counts: Vec<u64>,
}

impl SimulatedSource {
    fn new(truth: TrueRanking, accuracies: &[UserAccuracy]) -> Result<Self> {
        if accuracies.is_empty() {
            return Err(Error::EmptyUserPool);
        }
        let p_correct = accuracies
            .iter()
            .map(UserAccuracy::correct_probability)
            .collect();
        let counts = vec![0; accuracies.len()];
        Ok(Self {
            truth,
            p_correct,
            counts,
        })
    }
}

/// Pool where user `u` answers correctly with probability `1/2 + margins[u]`.
/// Margins must lie in `(0, 0.5]`.
pub fn make_bernoulli_source(truth: TrueRanking, margins: &[f64]) -> Result<SimulatedSource> {
    for &m in margins {
        if !(m > 0.0 && m <= 0.5) {
            return Err(Error::MarginOutOfRange(m));
        }
    }
    let accuracies: Vec<UserAccuracy> = margins.iter().map(|&m| UserAccuracy::Margin(m)).collect();
    SimulatedSource::new(truth, &accuracies)
}

/// Pool where user `u` answers correctly with probability
/// `1 / (1 + exp(-gammas[u] * score_gap))`. A gamma of zero makes that user a
/// fair coin.
pub fn make_logistic_source(
    truth: TrueRanking,
    gammas: &[f64],
    score_gap: f64,
) -> Result<SimulatedSource> {
    if !(score_gap.is_finite() && score_gap > 0.0) {
        return Err(Error::ScoreGapOutOfRange(score_gap));
    }
    for &g in gammas {
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::GammaOutOfRange(g));
        }
    }
    let accuracies: Vec<UserAccuracy> = gammas
        .iter()
        .map(|&gamma| UserAccuracy::Logistic { gamma, score_gap })
        .collect();
    SimulatedSource::new(truth, &accuracies)
}

impl ComparisonSource for SimulatedSource {
    fn respond(&mut self, user: UserId, i: ItemId, j: ItemId, rng: &mut dyn RngCore) -> Vote {
        debug_assert!(i != j, "a comparison needs two distinct items");
        self.counts[user.0] += 1;
        let correct = rand::Rng::gen_bool(rng, self.p_correct[user.0]);
        // Agreeing with the truth names the first item exactly when the truth does.
        if correct == self.truth.prefers(i, j) {
            Vote::FirstPreferred
        } else {
            Vote::SecondPreferred
        }
    }

    fn num_users(&self) -> usize {
        self.p_correct.len()
    }

    fn query_counts(&self) -> &[u64] {
        &self.counts
    }

    fn margin(&self, user: UserId) -> f64 {
        self.p_correct[user.0] - 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RunRng;

    fn three_item_truth() -> TrueRanking {
        TrueRanking::new(vec![ItemId(1), ItemId(2), ItemId(0)]).unwrap()
    }

    #[test]
    fn margin_bounds_are_enforced() {
        let truth = TrueRanking::identity(2);
        assert!(make_bernoulli_source(truth.clone(), &[0.0]).is_err());
        assert!(make_bernoulli_source(truth.clone(), &[0.51]).is_err());
        assert!(make_bernoulli_source(truth.clone(), &[-0.1]).is_err());
        assert!(make_bernoulli_source(truth.clone(), &[]).is_err());
        assert!(make_bernoulli_source(truth, &[0.5, 0.01]).is_ok());
    }

    #[test]
    fn logistic_bounds_are_enforced() {
        let truth = TrueRanking::identity(2);
        assert!(make_logistic_source(truth.clone(), &[-0.5], 3.0).is_err());
        assert!(make_logistic_source(truth.clone(), &[1.0], 0.0).is_err());
        assert!(make_logistic_source(truth.clone(), &[1.0], f64::NAN).is_err());
        assert!(make_logistic_source(truth, &[0.0, 2.5], 3.0).is_ok());
    }

    #[test]
    fn deterministic_user_always_agrees_with_truth() {
        let truth = three_item_truth();
        let mut source = make_bernoulli_source(truth.clone(), &[0.5]).unwrap();
        let mut rng = RunRng::new(11);
        for _ in 0..200 {
            let v = source.respond(UserId(0), ItemId(1), ItemId(0), &mut rng.votes);
            assert_eq!(v, Vote::FirstPreferred);
            let v = source.respond(UserId(0), ItemId(0), ItemId(1), &mut rng.votes);
            assert_eq!(v, Vote::SecondPreferred);
        }
    }

    #[test]
    fn empirical_frequency_matches_configured_accuracy() {
        // Monte-Carlo check of a 0.3-margin user: the long-run rate of
        // truth-consistent answers must sit within 0.005 of 0.8 (3+ standard
        // errors at 100k draws).
        let truth = three_item_truth();
        let mut source = make_bernoulli_source(truth.clone(), &[0.3]).unwrap();
        let mut rng = RunRng::new(2024);
        let trials = 100_000u32;
        let mut agree = 0u32;
        for _ in 0..trials {
            let v = source.respond(UserId(0), ItemId(2), ItemId(0), &mut rng.votes);
            if v == Vote::FirstPreferred {
                agree += 1;
            }
        }
        let rate = f64::from(agree) / f64::from(trials);
        assert!((rate - 0.8).abs() < 0.005, "rate {rate}");
        assert_eq!(source.query_counts()[0], u64::from(trials));
    }

    #[test]
    fn accuracy_is_symmetric_in_argument_order() {
        // P(first preferred | truth prefers first) must match
        // P(second preferred | truth prefers second) for the flipped query.
        let truth = three_item_truth();
        let mut source = make_bernoulli_source(truth.clone(), &[0.2]).unwrap();
        let mut rng = RunRng::new(31);
        let trials = 100_000u32;
        let (mut fwd, mut rev) = (0u32, 0u32);
        for _ in 0..trials {
            if source.respond(UserId(0), ItemId(1), ItemId(2), &mut rng.votes)
                == Vote::FirstPreferred
            {
                fwd += 1;
            }
            if source.respond(UserId(0), ItemId(2), ItemId(1), &mut rng.votes)
                == Vote::SecondPreferred
            {
                rev += 1;
            }
        }
        let diff = (f64::from(fwd) - f64::from(rev)).abs() / f64::from(trials);
        assert!(diff < 0.01, "asymmetry {diff}");
    }

    #[test]
    fn query_counts_tally_every_call() {
        let truth = TrueRanking::identity(4);
        let mut source = make_bernoulli_source(truth, &[0.1, 0.2, 0.3]).unwrap();
        let mut rng = RunRng::new(8);
        for k in 0..300usize {
            let user = UserId(k % 3);
            source.respond(user, ItemId(0), ItemId(3), &mut rng.votes);
        }
        assert_eq!(source.query_counts(), &[100, 100, 100]);
        assert_eq!(source.query_counts().iter().sum::<u64>(), 300);
    }

    #[test]
    fn margins_are_exposed() {
        let truth = TrueRanking::identity(2);
        let source = make_logistic_source(truth, &[2.5, 0.5], 3.0).unwrap();
        assert!((source.margin(UserId(0)) - 0.499447).abs() < 1e-6);
        assert!((source.margin(UserId(1)) - 0.317574).abs() < 1e-6);
    }
}
