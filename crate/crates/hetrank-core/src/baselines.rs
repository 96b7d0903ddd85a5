//! Ranking strategies compared in the experiments.
//!
//! Five ways to spend votes on the same ranking problem:
//!
//! * [`run_oracle`] — a reference point with simulation privileges: it reads
//!   each user's true accuracy off the source, hands the whole budget to the
//!   single best user, and runs [`iir`] with elimination off.
//! * [`run_nonadaptive`] — polls the full pool throughout, elimination off.
//! * [`run_adaptive`] — polls the full pool but prunes it between insertions
//!   ([`crate::elimination::eliminate_user`]).
//! * [`two_stage_ranking`] — first identifies a good user by racing the whole
//!   pool on one probe pair ([`naive_user_selection`]), then ranks with that
//!   user alone.
//! * [`modified_two_stage_ranking`] — the same race run on a small random
//!   subset of the pool ([`subset_user_selection`]), trading selection cost
//!   against the risk of sampling no good user.
//!
//! The two-stage variants spend their failure budget in equal shares across
//! stages: thirds (probe ranking, user race, final ranking) for the full-pool
//! version, quarters for the subset version, whose extra share covers the
//! subset missing every accurate user.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::elimination::{median_elimination, successive_elimination, ActiveSet};
use crate::engine::{iir, InsertionTrace};
use crate::error::{Error, Result};
use crate::rng::RunRng;
use crate::source::ComparisonSource;
use crate::types::{ItemId, UserId, Vote};

/// The strategies the experiment grid can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum AlgorithmKind {
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "nonadaptive")]
    NonAdaptive,
    #[serde(rename = "adaptive")]
    Adaptive,
    #[serde(rename = "two_stage")]
    TwoStage,
    #[serde(rename = "modified_two_stage")]
    ModifiedTwoStage,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::Oracle,
        AlgorithmKind::NonAdaptive,
        AlgorithmKind::Adaptive,
        AlgorithmKind::TwoStage,
        AlgorithmKind::ModifiedTwoStage,
    ];

    /// Stable machine-readable name, used in reports and config files.
    pub fn tag(self) -> &'static str {
        match self {
            AlgorithmKind::Oracle => "oracle",
            AlgorithmKind::NonAdaptive => "nonadaptive",
            AlgorithmKind::Adaptive => "adaptive",
            AlgorithmKind::TwoStage => "two_stage",
            AlgorithmKind::ModifiedTwoStage => "modified_two_stage",
        }
    }

    /// Stable per-strategy constant folded into run seeds so strategies never
    /// share random streams within a grid cell.
    pub fn seed_tag(self) -> u64 {
        match self {
            AlgorithmKind::Oracle => 1,
            AlgorithmKind::NonAdaptive => 2,
            AlgorithmKind::Adaptive => 3,
            AlgorithmKind::TwoStage => 4,
            AlgorithmKind::ModifiedTwoStage => 5,
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|kind| kind.tag() == s)
            .ok_or_else(|| Error::ConfigInvalid(format!("unknown algorithm '{s}'")))
    }
}

/// Which racing routine the two-stage strategies use to pick a user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ArmRoutine {
    #[serde(rename = "se")]
    SuccessiveElimination,
    #[serde(rename = "me")]
    MedianElimination,
}

impl fmt::Display for ArmRoutine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArmRoutine::SuccessiveElimination => "se",
            ArmRoutine::MedianElimination => "me",
        })
    }
}

impl FromStr for ArmRoutine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "se" => Ok(ArmRoutine::SuccessiveElimination),
            "me" => Ok(ArmRoutine::MedianElimination),
            _ => Err(Error::ConfigInvalid(format!(
                "unknown selector '{s}' (use se or me)"
            ))),
        }
    }
}

/// Tuning for the user-selection stage of the two-stage strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectorConfig {
    pub routine: ArmRoutine,
    /// Slack passed to successive elimination; the race may stop once its
    /// confidence radius drops this low even with several users left.
    pub se_epsilon: f64,
    /// Optimality slack passed to median elimination.
    pub me_alpha: f64,
    /// Pool sample size for [`subset_user_selection`].
    pub subset_size: usize,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            routine: ArmRoutine::SuccessiveElimination,
            se_epsilon: 0.15,
            me_alpha: 0.15,
            subset_size: 3,
        }
    }
}

/// What one strategy run produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunOutcome {
    /// Recovered ranking, best item first.
    pub ranking: Vec<ItemId>,
    /// Votes the run spent, across all stages.
    pub queries: u64,
    /// Per-insertion snapshots from the final ranking stage.
    pub trace: Vec<InsertionTrace>,
    /// Users still polled when the run finished.
    pub final_users: ActiveSet,
}

fn spent(source: &dyn ComparisonSource) -> u64 {
    source.query_counts().iter().sum()
}

/// Rank with the single most accurate user, found by reading true margins off
/// the source — a lower-bound reference, not a deployable strategy.
pub fn run_oracle(
    items: &[ItemId],
    delta: f64,
    source: &mut dyn ComparisonSource,
    rng: &mut RunRng,
) -> RunOutcome {
    assert!(source.num_users() > 0, "the user pool is empty");
    let before = spent(source);
    let best = (0..source.num_users())
        .map(UserId)
        .max_by(|a, b| {
            source
                .margin(*a)
                .partial_cmp(&source.margin(*b))
                .expect("margins are finite")
                .then(b.cmp(a))
        })
        .expect("the pool is non-empty");
    let out = iir(items, delta, ActiveSet::single(best), false, source, rng);
    RunOutcome {
        ranking: out.ranking,
        queries: spent(source) - before,
        trace: out.trace,
        final_users: out.final_users,
    }
}

/// Rank by polling the full pool for every vote.
pub fn run_nonadaptive(
    items: &[ItemId],
    delta: f64,
    source: &mut dyn ComparisonSource,
    rng: &mut RunRng,
) -> RunOutcome {
    let before = spent(source);
    let pool = ActiveSet::full(source.num_users());
    let out = iir(items, delta, pool, false, source, rng);
    RunOutcome {
        ranking: out.ranking,
        queries: spent(source) - before,
        trace: out.trace,
        final_users: out.final_users,
    }
}

/// Rank with the full pool, pruning inconsistent users between insertions.
pub fn run_adaptive(
    items: &[ItemId],
    delta: f64,
    source: &mut dyn ComparisonSource,
    rng: &mut RunRng,
) -> RunOutcome {
    let before = spent(source);
    let pool = ActiveSet::full(source.num_users());
    let out = iir(items, delta, pool, true, source, rng);
    RunOutcome {
        ranking: out.ranking,
        queries: spent(source) - before,
        trace: out.trace,
        final_users: out.final_users,
    }
}

/// Shared core of the two-stage strategies: rank one probe pair with the full
/// pool, then race `arms` on that pair, rewarding agreement with the probe
/// ranking.
fn probe_and_select(
    arms: &ActiveSet,
    items: &[ItemId],
    probe_delta: f64,
    race_delta: f64,
    selector: &SelectorConfig,
    source: &mut dyn ComparisonSource,
    rng: &mut RunRng,
) -> UserId {
    assert!(items.len() >= 2, "a probe pair needs two items");
    let pair = [items[0], items[1]];
    let pool = ActiveSet::full(source.num_users());
    let probe = iir(&pair, probe_delta, pool, false, source, rng);
    let (top, bottom) = (probe.ranking[0], probe.ranking[1]);
    let reward = |u: UserId| source.respond(u, top, bottom, &mut rng.votes) == Vote::FirstPreferred;
    match selector.routine {
        ArmRoutine::SuccessiveElimination => {
            successive_elimination(arms, selector.se_epsilon, race_delta, reward).user
        }
        ArmRoutine::MedianElimination => {
            median_elimination(arms, selector.me_alpha, race_delta, reward).user
        }
    }
}

/// Pick a user by racing the whole pool on a probe pair.
pub fn naive_user_selection(
    items: &[ItemId],
    probe_delta: f64,
    race_delta: f64,
    selector: &SelectorConfig,
    source: &mut dyn ComparisonSource,
    rng: &mut RunRng,
) -> UserId {
    let arms = ActiveSet::full(source.num_users());
    probe_and_select(&arms, items, probe_delta, race_delta, selector, source, rng)
}

/// Pick a user by racing a uniform random subset of `selector.subset_size`
/// users on a probe pair.
pub fn subset_user_selection(
    items: &[ItemId],
    probe_delta: f64,
    race_delta: f64,
    selector: &SelectorConfig,
    source: &mut dyn ComparisonSource,
    rng: &mut RunRng,
) -> Result<UserId> {
    let pool = source.num_users();
    if selector.subset_size == 0 || selector.subset_size > pool {
        return Err(Error::SubsetSizeOutOfRange {
            size: selector.subset_size,
            pool,
        });
    }
    let picked = rand::seq::index::sample(&mut rng.setup, pool, selector.subset_size);
    let arms = ActiveSet::from_members(picked.into_iter().map(UserId).collect());
    Ok(probe_and_select(
        &arms,
        items,
        probe_delta,
        race_delta,
        selector,
        source,
        rng,
    ))
}

/// Select a user with the full pool, then rank with that user alone. The
/// failure budget is split in thirds: probe ranking, user race, final ranking.
pub fn two_stage_ranking(
    items: &[ItemId],
    delta: f64,
    selector: &SelectorConfig,
    source: &mut dyn ComparisonSource,
    rng: &mut RunRng,
) -> RunOutcome {
    assert!(!items.is_empty(), "nothing to rank");
    let before = spent(source);
    if items.len() < 2 {
        return RunOutcome {
            ranking: items.to_vec(),
            queries: 0,
            trace: Vec::new(),
            final_users: ActiveSet::full(source.num_users()),
        };
    }
    let share = delta / 3.0;
    let user = naive_user_selection(items, share, share, selector, source, rng);
    let out = iir(items, share, ActiveSet::single(user), false, source, rng);
    RunOutcome {
        ranking: out.ranking,
        queries: spent(source) - before,
        trace: out.trace,
        final_users: out.final_users,
    }
}

/// Select a user from a random subset, then rank with that user alone. The
/// failure budget is split in quarters; the spare quarter covers the subset
/// containing no accurate user.
pub fn modified_two_stage_ranking(
    items: &[ItemId],
    delta: f64,
    selector: &SelectorConfig,
    source: &mut dyn ComparisonSource,
    rng: &mut RunRng,
) -> Result<RunOutcome> {
    assert!(!items.is_empty(), "nothing to rank");
    let pool = source.num_users();
    if selector.subset_size == 0 || selector.subset_size > pool {
        return Err(Error::SubsetSizeOutOfRange {
            size: selector.subset_size,
            pool,
        });
    }
    let before = spent(source);
    if items.len() < 2 {
        return Ok(RunOutcome {
            ranking: items.to_vec(),
            queries: 0,
            trace: Vec::new(),
            final_users: ActiveSet::full(pool),
        });
    }
    let share = delta / 4.0;
    let user = subset_user_selection(items, share, share, selector, source, rng)?;
    let out = iir(items, share, ActiveSet::single(user), false, source, rng);
    Ok(RunOutcome {
        ranking: out.ranking,
        queries: spent(source) - before,
        trace: out.trace,
        final_users: out.final_users,
    })
}

/// Run `kind` on the given instance.
pub fn run_algorithm(
    kind: AlgorithmKind,
    items: &[ItemId],
    delta: f64,
    selector: &SelectorConfig,
    source: &mut dyn ComparisonSource,
    rng: &mut RunRng,
) -> Result<RunOutcome> {
    match kind {
        AlgorithmKind::Oracle => Ok(run_oracle(items, delta, source, rng)),
        AlgorithmKind::NonAdaptive => Ok(run_nonadaptive(items, delta, source, rng)),
        AlgorithmKind::Adaptive => Ok(run_adaptive(items, delta, source, rng)),
        AlgorithmKind::TwoStage => Ok(two_stage_ranking(items, delta, selector, source, rng)),
        AlgorithmKind::ModifiedTwoStage => {
            modified_two_stage_ranking(items, delta, selector, source, rng)
        }
    }
}
