//! Identifiers, ground-truth orderings, and per-user accuracy models.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Index of an item in the universe being ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ItemId(pub usize);

/// Index of a user in the comparison pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct UserId(pub usize);

/// One answer to "which of these two items is better?".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vote {
    /// The first item of the queried pair.
    FirstPreferred,
    /// The second item of the queried pair.
    SecondPreferred,
}

/// Hidden ground-truth ordering over `0..len` items, best item first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrueRanking {
    order: Vec<ItemId>,
    /// Position of each item in `order`; lets `prefers` run in O(1).
    #[serde(skip)]
    rank: Vec<usize>,
}

impl TrueRanking {
    /// Build from an explicit ordering, best item first. The ordering must be
    /// a permutation of `0..order.len()`.
    pub fn new(order: Vec<ItemId>) -> Result<Self> {
        let n = order.len();
        let mut rank = vec![usize::MAX; n];
        for (pos, item) in order.iter().enumerate() {
            if item.0 >= n || rank[item.0] != usize::MAX {
                return Err(Error::NotAPermutation);
            }
            rank[item.0] = pos;
        }
        Ok(Self { order, rank })
    }

    /// The ordering where item `k` holds rank `k`.
    pub fn identity(n: usize) -> Self {
        Self::new((0..n).map(ItemId).collect()).expect("identity is a permutation")
    }

    /// Draw an ordering uniformly at random.
    pub fn sample(n: usize, rng: &mut impl Rng) -> Self {
        let mut order: Vec<ItemId> = (0..n).map(ItemId).collect();
        order.shuffle(rng);
        Self::new(order).expect("shuffle preserves the permutation")
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Items from best to worst.
    pub fn order(&self) -> &[ItemId] {
        &self.order
    }

    /// Rank of `item`: 0 is best.
    pub fn rank_of(&self, item: ItemId) -> usize {
        self.rank[item.0]
    }

    /// Whether `i` is strictly better than `j`.
    pub fn prefers(&self, i: ItemId, j: ItemId) -> bool {
        self.rank[i.0] < self.rank[j.0]
    }
}

/// How reliably a user answers: the probability of agreeing with the ground
/// truth on any single query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum UserAccuracy {
    /// Correct with probability `1/2 + margin`, independent of the pair.
    Margin(f64),
    /// Correct with probability `1 / (1 + exp(-gamma * score_gap))`.
    Logistic { gamma: f64, score_gap: f64 },
}

impl UserAccuracy {
    /// Probability of answering a query consistently with the ground truth.
    pub fn correct_probability(&self) -> f64 {
        match *self {
            UserAccuracy::Margin(margin) => 0.5 + margin,
            UserAccuracy::Logistic { gamma, score_gap } => 1.0 / (1.0 + (-gamma * score_gap).exp()),
        }
    }

    /// How far the correct-answer probability sits above a fair coin.
    pub fn margin(&self) -> f64 {
        self.correct_probability() - 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ranking_rejects_non_permutations() {
        assert!(TrueRanking::new(vec![ItemId(0), ItemId(0)]).is_err());
        assert!(TrueRanking::new(vec![ItemId(1), ItemId(2)]).is_err());
        assert!(TrueRanking::new(vec![ItemId(2), ItemId(0), ItemId(1)]).is_ok());
    }

    #[test]
    fn ranking_orders_items() {
        let truth = TrueRanking::new(vec![ItemId(2), ItemId(0), ItemId(1)]).unwrap();
        assert_eq!(truth.rank_of(ItemId(2)), 0);
        assert!(truth.prefers(ItemId(2), ItemId(0)));
        assert!(truth.prefers(ItemId(0), ItemId(1)));
        assert!(!truth.prefers(ItemId(1), ItemId(2)));
    }

    #[test]
    fn sampled_ranking_is_a_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..40 {
            let truth = TrueRanking::sample(n, &mut rng);
            let mut seen = vec![false; n];
            for item in truth.order() {
                assert!(!seen[item.0]);
                seen[item.0] = true;
            }
        }
    }

    #[test]
    fn logistic_probability_matches_closed_form() {
        // Independent evaluation of 1/(1+e^-x) at the two pinned points.
        let sharp = UserAccuracy::Logistic {
            gamma: 2.5,
            score_gap: 3.0,
        };
        assert!((sharp.correct_probability() - 0.999447).abs() < 1e-6);
        let blunt = UserAccuracy::Logistic {
            gamma: 0.5,
            score_gap: 3.0,
        };
        assert!((blunt.correct_probability() - 0.817574).abs() < 1e-6);
        let coin = UserAccuracy::Logistic {
            gamma: 0.0,
            score_gap: 3.0,
        };
        assert_eq!(coin.correct_probability(), 0.5);
        assert_eq!(coin.margin(), 0.0);
    }

    #[test]
    fn margin_accuracy_is_offset_from_half() {
        let acc = UserAccuracy::Margin(0.3);
        assert!((acc.correct_probability() - 0.8).abs() < 1e-12);
        assert!((acc.margin() - 0.3).abs() < 1e-12);
    }
}
