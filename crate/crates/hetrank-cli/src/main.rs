//! `hetrank`: single ranked runs, experiment-grid sweeps, and elimination
//! diagnostics, with bit-stable file outputs.
//!
//! Exit codes: 0 success, 1 configuration error, 2 ranking failure against
//! the known ground truth.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::slice;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use clap::{Args, Parser, Subcommand};
use hetrank_core::{
    cell_seed, complexity_reference, elimination_gate, elimination_trace, format_real,
    make_logistic_source, parse_experiment_config, record_csv_row, records_jsonl, run_algorithm,
    run_grid_with, summarize, summary_csv, trace_csv, AlgorithmKind, ComparisonSource,
    ComplexityRef, ExperimentConfig, ItemId, RunRecord, RunRng, TraceRow, TrueRanking,
    RECORDS_CSV_HEADER,
};

#[derive(Parser)]
#[command(
    name = "hetrank",
    version,
    about = "Exact ranking from noisy pairwise comparisons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one seeded run and print what it recovered
    Rank(RankArgs),
    /// Run the configured experiment grid and write records/summary CSVs
    Sweep(SweepArgs),
    /// Replay grid cells with per-insertion traces and complexity references
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config: flat `key = value` lines
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Replace the config's base seed
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Report progress on stderr
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Strategy to run, replacing the config's list
    #[arg(long, value_name = "NAME")]
    algorithm: Option<AlgorithmKind>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Directory for records.csv, summary.csv, and optional records.jsonl
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Worker threads for the grid
    #[arg(long, value_name = "N", default_value = "1")]
    jobs: NonZeroUsize,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Directory for trace.csv
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Worker threads, one grid cell each
    #[arg(long, value_name = "N", default_value = "1")]
    jobs: NonZeroUsize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let failed = err.use_stderr();
            let _ = err.print();
            return if failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Rank(args) => cmd_rank(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Diagnose(args) => cmd_diagnose(args),
    };
    result.unwrap_or_else(|message| {
        eprintln!("error: {message}");
        ExitCode::from(1)
    })
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| format!("cannot read config {}: {e}", common.config.display()))?;
    let mut config = parse_experiment_config(&text).map_err(|e| e.to_string())?;
    if let Some(seed) = common.seed {
        config.base_seed = seed;
    }
    Ok(config)
}

fn joined<T: Copy, F: Fn(T) -> String>(values: &[T], render: F) -> String {
    values
        .iter()
        .map(|&v| render(v))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_rank(args: RankArgs) -> Result<ExitCode, String> {
    let mut config = load_config(&args.common)?;
    if let Some(kind) = args.algorithm {
        config.algorithms = vec![kind];
    }
    let &[kind] = config.algorithms.as_slice() else {
        return Err(format!(
            "rank needs exactly one algorithm, the config lists {}",
            config.algorithms.len()
        ));
    };
    let &[n] = config.n_grid.as_slice() else {
        return Err(format!(
            "rank needs exactly one item count, the config lists {}",
            config.n_grid.len()
        ));
    };
    let seed = cell_seed(config.base_seed, kind, n, 0);
    let mut rng = RunRng::new(seed);
    let truth = TrueRanking::sample(n, &mut rng.setup);
    let mut source = make_logistic_source(truth.clone(), &config.gammas(), config.score_gap)
        .map_err(|e| e.to_string())?;
    let items: Vec<ItemId> = (0..n).map(ItemId).collect();
    println!("algorithm: {}", kind.tag());
    println!("n: {n}");
    println!("seed: {seed}");
    let outcome = run_algorithm(
        kind,
        &items,
        config.delta,
        &config.selector,
        &mut source,
        &mut rng,
    );
    let out = match outcome {
        Ok(out) => out,
        Err(err) => {
            eprintln!("run aborted: {err}");
            return Ok(ExitCode::from(2));
        }
    };
    let exact = out.ranking.as_slice() == truth.order();
    println!(
        "ranking: {}",
        joined(&out.ranking, |item| item.0.to_string())
    );
    println!("total_queries: {}", out.queries);
    let per_user: Vec<String> = source
        .query_counts()
        .iter()
        .enumerate()
        .map(|(u, q)| format!("{u}:{q}"))
        .collect();
    println!("user_queries: {}", per_user.join(" "));
    println!(
        "active_users: {}",
        joined(out.final_users.members(), |user| user.0.to_string())
    );
    println!("exact: {exact}");
    Ok(if exact {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, String> {
    let config = load_config(&args.common)?;
    fs::create_dir_all(&args.out)
        .map_err(|e| format!("cannot create {}: {e}", args.out.display()))?;
    let write_failed = |e| format!("cannot write into {}: {e}", args.out.display());
    let mut records_out =
        BufWriter::new(File::create(args.out.join("records.csv")).map_err(write_failed)?);
    records_out
        .write_all(RECORDS_CSV_HEADER.as_bytes())
        .map_err(write_failed)?;
    let mut jsonl_out = if config.dump_records {
        Some(BufWriter::new(
            File::create(args.out.join("records.jsonl")).map_err(write_failed)?,
        ))
    } else {
        None
    };
    let total = config.algorithms.len() * config.n_grid.len() * config.repeats as usize;
    let mut done = 0usize;
    let mut write_error: Option<std::io::Error> = None;
    // Every finished row is flushed at once so an interrupted sweep keeps its
    // completed runs on disk.
    let records = run_grid_with(&config, args.jobs.get(), |record| {
        done += 1;
        if args.common.verbose {
            eprintln!(
                "run {done}/{total}: algorithm={} n={} seed={}",
                record.algorithm.tag(),
                record.n,
                record.seed
            );
        }
        if write_error.is_some() {
            return;
        }
        let written = records_out
            .write_all(record_csv_row(record).as_bytes())
            .and_then(|()| records_out.flush())
            .and_then(|()| match &mut jsonl_out {
                Some(out) => out
                    .write_all(records_jsonl(slice::from_ref(record)).as_bytes())
                    .and_then(|()| out.flush()),
                None => Ok(()),
            });
        if let Err(e) = written {
            write_error = Some(e);
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(e) = write_error {
        return Err(write_failed(e));
    }
    let summary = summarize(&records);
    fs::write(args.out.join("summary.csv"), summary_csv(&summary)).map_err(write_failed)?;
    println!(
        "wrote {} records in {} cells to {}",
        records.len(),
        summary.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<ExitCode, String> {
    let config = load_config(&args.common)?;
    fs::create_dir_all(&args.out)
        .map_err(|e| format!("cannot create {}: {e}", args.out.display()))?;
    let cells: Vec<(AlgorithmKind, usize)> = config
        .algorithms
        .iter()
        .flat_map(|&kind| config.n_grid.iter().map(move |&n| (kind, n)))
        .collect();
    let results = trace_cells(&config, &cells, args.jobs.get(), args.common.verbose)?;
    let margins = config.margins();
    let best_margin = margins.iter().copied().fold(f64::MIN, f64::max);
    let pool_margin = margins.iter().sum::<f64>() / margins.len() as f64;
    let starred = |reference: ComplexityRef| if reference.clamped { " *" } else { "" };
    let mut rows_out: Vec<TraceRow> = Vec::new();
    let mut clamped = false;
    for (&(kind, n), (rows, records)) in cells.iter().zip(results.iter()) {
        let gate = elimination_gate(n, config.m, config.delta);
        let runs = records.len();
        let cleared = rows
            .iter()
            .filter(|r| r.items_placed == 2 && r.votes_so_far as f64 >= gate)
            .count();
        let mean_queries = records.iter().map(|r| r.queries as f64).sum::<f64>() / runs as f64;
        let best = complexity_reference(best_margin, n, config.delta);
        let pool = complexity_reference(pool_margin, n, config.delta);
        clamped |= best.clamped || pool.clamped;
        println!("algorithm={} n={}", kind.tag(), n);
        println!("  gate_threshold = {}", format_real(gate));
        println!("  gate_cleared_on_first_insertion = {cleared}/{runs}");
        println!("  mean_queries = {}", format_real(mean_queries));
        println!(
            "  reference_best_user = {}{}",
            format_real(n as f64 * best.value),
            starred(best)
        );
        println!(
            "  reference_pool_average = {}{}",
            format_real(n as f64 * pool.value),
            starred(pool)
        );
        rows_out.extend(rows.iter().cloned());
    }
    if clamped {
        println!("* margin above 1/e, iterated-logarithm term clamped to zero");
    }
    fs::write(args.out.join("trace.csv"), trace_csv(&rows_out))
        .map_err(|e| format!("cannot write into {}: {e}", args.out.display()))?;
    Ok(ExitCode::SUCCESS)
}

/// One replayed cell: its per-insertion trace rows and its run records.
type CellTrace = (Vec<TraceRow>, Vec<RunRecord>);

/// Replay every cell, fanning them out over `jobs` workers; results come back
/// in cell order regardless of the worker count.
fn trace_cells(
    config: &ExperimentConfig,
    cells: &[(AlgorithmKind, usize)],
    jobs: usize,
    verbose: bool,
) -> Result<Vec<CellTrace>, String> {
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    let workers = jobs.min(cells.len()).max(1);
    thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(kind, n)) = cells.get(idx) else {
                    break;
                };
                let result = elimination_trace(config, kind, n);
                if verbose {
                    eprintln!("traced algorithm={} n={n}", kind.tag());
                }
                if tx.send((idx, result)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut slots: Vec<Option<CellTrace>> = vec![None; cells.len()];
    for (idx, result) in rx {
        slots[idx] = Some(result.map_err(|e| e.to_string())?);
    }
    Ok(slots
        .into_iter()
        .map(|slot| slot.expect("every cell reported"))
        .collect())
}
