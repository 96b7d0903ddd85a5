//! Query-pool management.
//!
//! [`eliminate_user`] prunes users whose answer quality is confidently
//! dominated, using the consistency tallies accumulated by the ranking engine.
//! [`median_elimination`] and [`successive_elimination`] are classic best-arm
//! routines reused here to pick a single good user from a pool.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::types::UserId;

/// Non-empty set of users eligible to answer queries, kept sorted by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ActiveSet {
    members: Vec<UserId>,
}

impl ActiveSet {
    /// Every user in a pool of `m`.
    pub fn full(m: usize) -> Self {
        assert!(m > 0, "the pool needs at least one user");
        Self {
            members: (0..m).map(UserId).collect(),
        }
    }

    pub fn single(user: UserId) -> Self {
        Self {
            members: vec![user],
        }
    }

    pub fn from_members(mut members: Vec<UserId>) -> Self {
        members.sort_unstable();
        members.dedup();
        assert!(!members.is_empty(), "an active set cannot be empty");
        Self { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[UserId] {
        &self.members
    }

    pub fn contains(&self, user: UserId) -> bool {
        self.members.binary_search(&user).is_ok()
    }

    /// Pick a member uniformly at random. Always consumes exactly one draw,
    /// so pools of different sizes stay stream-compatible.
    pub fn pick_uniform(&self, rng: &mut impl Rng) -> UserId {
        self.members[rng.gen_range(0..self.members.len())]
    }
}

/// Symmetric confidence interval around an empirical mean.
#[derive(Debug, Clone, Copy)]
pub struct ConfidenceBand {
    pub mean: f64,
    pub radius: f64,
}

impl ConfidenceBand {
    pub fn lower(&self) -> f64 {
        self.mean - self.radius
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.radius
    }
}

/// Total-vote count that arms elimination: `2·M²·ln(N·M/delta)`. Below it the
/// consistency estimates are considered too raw to act on.
pub fn elimination_gate(num_items: usize, num_users: usize, delta: f64) -> f64 {
    let m = num_users as f64;
    2.0 * m * m * ((num_items as f64) * m / delta).ln()
}

/// Confidence radius shared by all active users when the least-sampled one
/// has `s_min` votes: `sqrt(ln(2·|active|/delta) / (2·s_min))`.
pub fn consistency_radius(active: usize, s_min: u64, delta: f64) -> f64 {
    ((2.0 * active as f64 / delta).ln() / (2.0 * s_min as f64)).sqrt()
}

/// Drop every active user whose upper confidence bound on answer consistency
/// falls below some other active user's lower bound.
///
/// `consistent` and `responses` are whole-pool tallies indexed by user id;
/// counts frozen on already-dropped users still feed the activation gate.
/// Nothing happens while the gate total is short, while any active user is
/// still unsampled, or with a single active user. The best empirical user can
/// never be dropped, so the returned set is never empty.
pub fn eliminate_user(
    users: &ActiveSet,
    consistent: &[u64],
    responses: &[u64],
    delta: f64,
    num_items: usize,
) -> ActiveSet {
    let m = responses.len();
    assert_eq!(consistent.len(), m, "tally lengths must agree");
    assert!(
        users.members().iter().all(|u| u.0 < m),
        "active user outside the pool"
    );
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    if users.len() == 1 {
        return users.clone();
    }
    let total: u64 = responses.iter().sum();
    if (total as f64) < elimination_gate(num_items, m, delta) {
        return users.clone();
    }
    let s_min = users
        .members()
        .iter()
        .map(|u| responses[u.0])
        .min()
        .expect("set is non-empty");
    if s_min == 0 {
        return users.clone();
    }
    let radius = consistency_radius(users.len(), s_min, delta);
    let band = |u: UserId| ConfidenceBand {
        mean: consistent[u.0] as f64 / responses[u.0] as f64,
        radius,
    };
    let best_lower = users
        .members()
        .iter()
        .map(|&u| band(u).lower())
        .fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<UserId> = users
        .members()
        .iter()
        .copied()
        .filter(|&u| band(u).upper() >= best_lower)
        .collect();
    debug_assert!(!kept.is_empty());
    ActiveSet::from_members(kept)
}

/// What a best-user selection routine produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SelectionOutcome {
    pub user: UserId,
    /// Reward pulls spent across all rounds.
    pub pulls: u64,
    /// Elimination rounds played.
    pub rounds: u32,
}

/// Median-halving best-arm selection: returns a user whose mean reward is
/// within `alpha` of the best, except with probability `delta`.
///
/// Round `l` pulls each survivor `⌈4/ε_l²·ln(3/δ_l)⌉` times and keeps the
/// better half by empirical mean (ties keep smaller user ids), tightening
/// `ε ← 3ε/4`, `δ ← δ/2` from `ε_1 = alpha/4`, `δ_1 = delta/2`.
pub fn median_elimination(
    users: &ActiveSet,
    alpha: f64,
    delta: f64,
    mut reward: impl FnMut(UserId) -> bool,
) -> SelectionOutcome {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    let mut survivors: Vec<UserId> = users.members().to_vec();
    let mut pulls = 0u64;
    let mut rounds = 0u32;
    let (mut eps, mut d) = (alpha / 4.0, delta / 2.0);
    while survivors.len() > 1 {
        let per_arm = (4.0 / (eps * eps) * (3.0 / d).ln()).ceil() as u64;
        let mut scored: Vec<(UserId, u64)> = survivors
            .iter()
            .map(|&u| {
                let wins = (0..per_arm).filter(|_| reward(u)).count() as u64;
                (u, wins)
            })
            .collect();
        pulls += per_arm * survivors.len() as u64;
        rounds += 1;
        // Keep the top half: wins descending, id ascending on ties.
        scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(survivors.len().div_ceil(2));
        survivors = scored.into_iter().map(|(u, _)| u).collect();
        survivors.sort_unstable();
        eps *= 0.75;
        d /= 2.0;
    }
    SelectionOutcome {
        user: survivors[0],
        pulls,
        rounds,
    }
}

/// Round-robin best-arm selection: one pull per survivor per round. A user is
/// dropped when their upper confidence bound falls below the best lower
/// bound; the routine stops when one user survives, or when the radius
/// reaches `eps/2` and the empirical best wins (ties to the smaller id).
///
/// After `t` rounds with `k` survivors the radius is
/// `sqrt(ln(2·k·t²·π²/(3·delta)) / (2·t))`.
pub fn successive_elimination(
    users: &ActiveSet,
    eps: f64,
    delta: f64,
    mut reward: impl FnMut(UserId) -> bool,
) -> SelectionOutcome {
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    let mut survivors: Vec<UserId> = users.members().to_vec();
    if survivors.len() == 1 {
        return SelectionOutcome {
            user: survivors[0],
            pulls: 0,
            rounds: 0,
        };
    }
    let mut wins: Vec<u64> = vec![0; survivors.len()];
    let mut pulls = 0u64;
    for t in 1u64.. {
        for (slot, &u) in survivors.iter().enumerate() {
            wins[slot] += u64::from(reward(u));
        }
        pulls += survivors.len() as u64;
        let tf = t as f64;
        let radius = ((2.0 * survivors.len() as f64 * tf * tf * PI * PI / (3.0 * delta)).ln()
            / (2.0 * tf))
            .sqrt();
        let means: Vec<f64> = wins.iter().map(|&w| w as f64 / tf).collect();
        let best_lower = means
            .iter()
            .map(|m| m - radius)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut keep_survivors = Vec::with_capacity(survivors.len());
        let mut keep_wins = Vec::with_capacity(survivors.len());
        for (slot, &u) in survivors.iter().enumerate() {
            if means[slot] + radius >= best_lower {
                keep_survivors.push(u);
                keep_wins.push(wins[slot]);
            }
        }
        survivors = keep_survivors;
        wins = keep_wins;
        if survivors.len() == 1 {
            return SelectionOutcome {
                user: survivors[0],
                pulls,
                rounds: t as u32,
            };
        }
        if radius <= eps / 2.0 {
            // Empirical best; survivors are id-sorted, so the first maximum
            // is the smallest qualifying id.
            let mut best = 0;
            for slot in 1..survivors.len() {
                if wins[slot] > wins[best] {
                    best = slot;
                }
            }
            return SelectionOutcome {
                user: survivors[best],
                pulls,
                rounds: t as u32,
            };
        }
    }
    unreachable!("the radius shrinks to zero, so one exit always fires")
}
