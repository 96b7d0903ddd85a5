//! Plain-text outputs: CSV tables and JSON-lines dumps.
//!
//! All numeric text is deterministic: integers print bare, reals print with
//! six significant digits via [`format_real`], rows end with `\n`.

use crate::harness::{RunRecord, SummaryRow, TraceRow};

/// Fixed-point rendering with six significant digits (`115.750`, `0.500000`);
/// exact zero prints as `0`.
pub fn format_real(v: f64) -> String {
    assert!(v.is_finite(), "reports only carry finite values");
    if v == 0.0 {
        return "0".to_string();
    }
    let decimals = (5 - v.abs().log10().floor() as i64).max(0) as usize;
    format!("{v:.decimals$}")
}

pub const RECORDS_CSV_HEADER: &str = "algorithm,N,M,gamma_A,gamma_B,seed,queries,exact\n";

/// One records-table row, newline-terminated.
pub fn record_csv_row(record: &RunRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{}\n",
        record.algorithm.tag(),
        record.n,
        record.m,
        format_real(record.gamma_a),
        format_real(record.gamma_b),
        record.seed,
        record.queries,
        record.exact,
    )
}

/// Per-run table: one row per run in the given order.
pub fn records_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RECORDS_CSV_HEADER);
    for record in records {
        out.push_str(&record_csv_row(record));
    }
    out
}

pub const SUMMARY_CSV_HEADER: &str =
    "algorithm,N,M,gamma_A,gamma_B,mean_queries,std_queries,exact_rate\n";

/// Per-cell aggregate table.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.algorithm.tag(),
            row.n,
            row.m,
            format_real(row.gamma_a),
            format_real(row.gamma_b),
            format_real(row.mean_queries),
            format_real(row.std_queries),
            format_real(row.exact_rate),
        ));
    }
    out
}

pub const TRACE_CSV_HEADER: &str = "seed,z,active_set_size,S_z\n";

/// Per-insertion diagnostic table: `z` items placed, `S_z` cumulative votes.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.seed, row.items_placed, row.active_users, row.votes_so_far,
        ));
    }
    out
}

/// One JSON object per run, newline-terminated, carrying every record field.
pub fn records_jsonl(records: &[RunRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("records serialize"));
        out.push('\n');
    }
    out
}
