//! Seeded experiment grid over the ranking strategies.
//!
//! A grid cell is one (strategy, item count) pair; each repeat inside a cell
//! runs on its own seed derived from the base seed, so any single run can be
//! reproduced in isolation and results never depend on execution order or on
//! how many worker threads ran the grid.

use std::collections::BTreeMap;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use serde::Serialize;

use crate::baselines::{run_algorithm, AlgorithmKind, SelectorConfig};
use crate::engine::InsertionTrace;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, RunRng};
use crate::source::{make_logistic_source, ComparisonSource};
use crate::types::{ItemId, TrueRanking, UserAccuracy};

/// Exact non-negative rational, kept in lowest terms. Lets pool fractions
/// like 1/3 produce exact user counts for any pool size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Fraction {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::ConfigInvalid("fraction denominator is zero".into()));
        }
        let g = gcd(num, den).max(1);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Smallest integer at or above `self * m`, computed exactly.
    pub fn ceil_mul(self, m: usize) -> usize {
        let prod = self.num as u128 * m as u128;
        prod.div_ceil(self.den as u128) as usize
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Fraction {
    type Err = Error;

    /// Accepts `a/b`, plain integers, and decimal literals (`0.25` = 1/4).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ConfigInvalid(format!("cannot parse '{s}' as a fraction"));
        if let Some((num, den)) = s.split_once('/') {
            let num: u64 = num.trim().parse().map_err(|_| bad())?;
            let den: u64 = den.trim().parse().map_err(|_| bad())?;
            return Fraction::new(num, den);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.len() > 18 || frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let int: u64 = if int.is_empty() {
                0
            } else {
                int.parse().map_err(|_| bad())?
            };
            let scale = 10u64.pow(frac.len() as u32);
            let frac: u64 = frac.parse().map_err(|_| bad())?;
            let num = int
                .checked_mul(scale)
                .and_then(|v| v.checked_add(frac))
                .ok_or_else(bad)?;
            return Fraction::new(num, scale);
        }
        let int: u64 = s.trim().parse().map_err(|_| bad())?;
        Fraction::new(int, 1)
    }
}

/// Full description of an experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    /// Strategies to run, in report order.
    pub algorithms: Vec<AlgorithmKind>,
    /// Item counts to sweep.
    pub n_grid: Vec<usize>,
    /// Pool size.
    pub m: usize,
    /// Fraction of the pool given the sharp response curve; the count is
    /// rounded up and those users take the low ids.
    pub accurate_fraction: Fraction,
    /// Response sharpness of the ordinary users.
    pub gamma_a: f64,
    /// Response sharpness of the accurate users.
    pub gamma_b: f64,
    /// Score separation between adjacent items, shared by all pairs.
    pub score_gap: f64,
    /// Failure probability handed to every strategy run.
    pub delta: f64,
    /// Runs per grid cell.
    pub repeats: u32,
    /// Root of the per-run seed derivation.
    pub base_seed: u64,
    pub selector: SelectorConfig,
    /// Whether sweeps should also emit one JSON line per run.
    pub dump_records: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithms: AlgorithmKind::ALL.to_vec(),
            n_grid: (1..=10).map(|k| k * 10).collect(),
            m: 9,
            accurate_fraction: Fraction::new(1, 3).expect("static fraction"),
            gamma_a: 0.5,
            gamma_b: 2.5,
            score_gap: 3.0,
            delta: 0.1,
            repeats: 100,
            base_seed: 42,
            selector: SelectorConfig::default(),
            dump_records: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.algorithms.is_empty() {
            return fail("algorithms must name at least one strategy".into());
        }
        if self.n_grid.is_empty() {
            return fail("n_grid must hold at least one item count".into());
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 2) {
            return fail(format!("n_grid entry {n} is below the minimum of 2"));
        }
        if self.m == 0 {
            return fail("m must be at least 1".into());
        }
        if self.accurate_fraction.ceil_mul(self.m) > self.m {
            return fail(format!(
                "accurate_fraction {} exceeds 1",
                self.accurate_fraction
            ));
        }
        for (name, gamma) in [("gamma_a", self.gamma_a), ("gamma_b", self.gamma_b)] {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return fail(format!("{name} must be positive and finite, got {gamma}"));
            }
        }
        if !(self.score_gap > 0.0 && self.score_gap.is_finite()) {
            return fail(format!(
                "score_gap must be positive and finite, got {}",
                self.score_gap
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.repeats == 0 {
            return fail("repeats must be at least 1".into());
        }
        if !(self.selector.se_epsilon > 0.0 && self.selector.se_epsilon < 1.0) {
            return fail(format!(
                "se_epsilon must lie in (0, 1), got {}",
                self.selector.se_epsilon
            ));
        }
        if !(self.selector.me_alpha > 0.0 && self.selector.me_alpha < 1.0) {
            return fail(format!(
                "me_alpha must lie in (0, 1), got {}",
                self.selector.me_alpha
            ));
        }
        if self.algorithms.contains(&AlgorithmKind::ModifiedTwoStage)
            && !(1..=self.m).contains(&self.selector.subset_size)
        {
            return fail(format!(
                "subset_size must lie in 1..={}, got {}",
                self.m, self.selector.subset_size
            ));
        }
        Ok(())
    }

    /// Users on the sharp response curve.
    pub fn accurate_users(&self) -> usize {
        self.accurate_fraction.ceil_mul(self.m)
    }

    /// Per-user response sharpness: accurate users first, then the rest.
    pub fn gammas(&self) -> Vec<f64> {
        let k = self.accurate_users();
        let mut gammas = vec![self.gamma_b; k];
        gammas.resize(self.m, self.gamma_a);
        gammas
    }

    /// Per-user advantage over a fair coin implied by [`Self::gammas`].
    pub fn margins(&self) -> Vec<f64> {
        self.gammas()
            .into_iter()
            .map(|gamma| {
                UserAccuracy::Logistic {
                    gamma,
                    score_gap: self.score_gap,
                }
                .margin()
            })
            .collect()
    }
}

/// Seed for one run, derived so that every (strategy, item count, repeat)
/// triple draws an independent stream from the same base seed.
pub fn cell_seed(base: u64, kind: AlgorithmKind, n: usize, repeat: u32) -> u64 {
    derive_seed(&[base, kind.seed_tag(), n as u64, u64::from(repeat)])
}

/// Everything recorded about one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub algorithm: AlgorithmKind,
    pub n: usize,
    pub m: usize,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub seed: u64,
    /// Votes spent, counted at the source so aborted runs still report what
    /// they consumed.
    pub queries: u64,
    /// Whether the recovered ranking matched the hidden truth exactly.
    pub exact: bool,
    /// Whether the run aborted instead of returning a ranking. Failed runs
    /// stay in every denominator.
    pub failed: bool,
    pub wall_time_ms: u64,
}

fn execute(
    config: &ExperimentConfig,
    kind: AlgorithmKind,
    n: usize,
    seed: u64,
) -> (RunRecord, Vec<InsertionTrace>) {
    let start = Instant::now();
    let mut rng = RunRng::new(seed);
    let truth = TrueRanking::sample(n, &mut rng.setup);
    let mut source = make_logistic_source(truth.clone(), &config.gammas(), config.score_gap)
        .expect("validated parameters");
    let items: Vec<ItemId> = (0..n).map(ItemId).collect();
    let result = catch_unwind(AssertUnwindSafe(|| {
        run_algorithm(
            kind,
            &items,
            config.delta,
            &config.selector,
            &mut source,
            &mut rng,
        )
    }));
    let queries: u64 = source.query_counts().iter().sum();
    let (exact, failed, trace) = match result {
        Ok(Ok(out)) => (out.ranking.as_slice() == truth.order(), false, out.trace),
        Ok(Err(_)) | Err(_) => (false, true, Vec::new()),
    };
    let record = RunRecord {
        algorithm: kind,
        n,
        m: config.m,
        gamma_a: config.gamma_a,
        gamma_b: config.gamma_b,
        seed,
        queries,
        exact,
        failed,
        wall_time_ms: start.elapsed().as_millis() as u64,
    };
    (record, trace)
}

/// Run one cell repeat on its derived seed.
pub fn run_single(
    config: &ExperimentConfig,
    kind: AlgorithmKind,
    n: usize,
    repeat: u32,
) -> RunRecord {
    run_seeded(
        config,
        kind,
        n,
        cell_seed(config.base_seed, kind, n, repeat),
    )
}

/// Run one strategy on a fresh instance drawn from `seed`.
pub fn run_seeded(
    config: &ExperimentConfig,
    kind: AlgorithmKind,
    n: usize,
    seed: u64,
) -> RunRecord {
    execute(config, kind, n, seed).0
}

/// Run the whole grid serially. See [`run_grid_with`].
pub fn run_grid(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    run_grid_with(config, 1, |_| {})
}

/// Run the whole grid on `jobs` worker threads, calling `sink` on each record
/// in canonical order (config's strategy order, then item count, then
/// repeat). The returned records follow the same order, and are identical for
/// any `jobs` because every run's seed is fixed by its grid position.
pub fn run_grid_with(
    config: &ExperimentConfig,
    jobs: usize,
    mut sink: impl FnMut(&RunRecord),
) -> Result<Vec<RunRecord>> {
    config.validate()?;
    assert!(jobs > 0, "at least one worker is needed");
    let mut tasks = Vec::new();
    for &kind in &config.algorithms {
        for &n in &config.n_grid {
            for repeat in 0..config.repeats {
                tasks.push((kind, n, repeat));
            }
        }
    }
    let total = tasks.len();
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, RunRecord)>();
    let workers = jobs.min(total);
    let mut records = Vec::with_capacity(total);
    thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let tasks = &tasks;
            let next = &next;
            scope.spawn(move || loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(kind, n, repeat)) = tasks.get(idx) else {
                    break;
                };
                let record = run_single(config, kind, n, repeat);
                if tx.send((idx, record)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut emitted = 0;
        while emitted < total {
            let (idx, record) = rx.recv().expect("workers outlive the queue");
            pending.insert(idx, record);
            while let Some(record) = pending.remove(&emitted) {
                sink(&record);
                records.push(record);
                emitted += 1;
            }
        }
    });
    Ok(records)
}

/// Aggregates over one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algorithm: AlgorithmKind,
    pub n: usize,
    pub m: usize,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub runs: usize,
    pub mean_queries: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std_queries: f64,
    pub exact_rate: f64,
}

/// Group records by cell and aggregate. Failed runs count toward `runs` and
/// the query statistics, and count as inexact.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(AlgorithmKind, usize, usize, u64, u64), Vec<&RunRecord>> =
        BTreeMap::new();
    for record in records {
        cells
            .entry((
                record.algorithm,
                record.n,
                record.m,
                record.gamma_a.to_bits(),
                record.gamma_b.to_bits(),
            ))
            .or_default()
            .push(record);
    }
    cells
        .into_iter()
        .map(|((algorithm, n, m, ga, gb), group)| {
            let runs = group.len();
            let mean = group.iter().map(|r| r.queries as f64).sum::<f64>() / runs as f64;
            let var = if runs > 1 {
                group
                    .iter()
                    .map(|r| (r.queries as f64 - mean).powi(2))
                    .sum::<f64>()
                    / (runs - 1) as f64
            } else {
                0.0
            };
            let exact = group.iter().filter(|r| r.exact).count();
            SummaryRow {
                algorithm,
                n,
                m,
                gamma_a: f64::from_bits(ga),
                gamma_b: f64::from_bits(gb),
                runs,
                mean_queries: mean,
                std_queries: var.sqrt(),
                exact_rate: exact as f64 / runs as f64,
            }
        })
        .collect()
}

/// Closed-form query-complexity reference for one user of advantage `margin`:
/// `margin⁻² · (lnln(1/margin) + ln(n/delta))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityRef {
    pub value: f64,
    /// Set when `margin > 1/e` made the iterated logarithm negative and it
    /// was clamped to zero.
    pub clamped: bool,
}

pub fn complexity_reference(margin: f64, num_items: usize, delta: f64) -> ComplexityRef {
    assert!(margin > 0.0 && margin <= 0.5, "margin must lie in (0, 0.5]");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    let loglog = (1.0 / margin).ln().ln();
    let clamped = loglog < 0.0;
    let value = margin.powi(-2) * (loglog.max(0.0) + (num_items as f64 / delta).ln());
    ComplexityRef { value, clamped }
}

/// One per-insertion snapshot from a diagnostic run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub seed: u64,
    /// Items placed when the snapshot was taken; the first insertion is 2.
    pub items_placed: usize,
    pub active_users: usize,
    pub votes_so_far: u64,
}

/// Replay one grid cell, keeping every run's per-insertion pool and vote
/// trajectory alongside the usual records.
pub fn elimination_trace(
    config: &ExperimentConfig,
    kind: AlgorithmKind,
    n: usize,
) -> Result<(Vec<TraceRow>, Vec<RunRecord>)> {
    config.validate()?;
    if !config.n_grid.contains(&n) {
        return Err(Error::ConfigInvalid(format!(
            "n = {n} is not in the configured grid"
        )));
    }
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for repeat in 0..config.repeats {
        let seed = cell_seed(config.base_seed, kind, n, repeat);
        let (record, trace) = execute(config, kind, n, seed);
        rows.extend(trace.iter().map(|t| TraceRow {
            seed,
            items_placed: t.items_placed,
            active_users: t.active_users,
            votes_so_far: t.votes_so_far,
        }));
        records.push(record);
    }
    Ok((rows, records))
}
