//! Trace and summary serialization.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sympopt_core::validation::CheckRow;
use sympopt_core::{IterRecord, OptimizerTrace};

/// Field order is fixed so that identical runs give identical bytes apart
/// from `wall_time_s`.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub status: &'static str,
    pub iters: usize,
    pub final_cost: f64,
    pub final_grad_norm: f64,
    pub max_symplecticity_residual: f64,
    pub wall_time_s: f64,
}

impl Summary {
    pub fn of(trace: &OptimizerTrace, wall_time_s: f64) -> Self {
        let last = trace.last();
        Summary {
            status: trace.status.as_str(),
            iters: trace.iterations(),
            final_cost: last.cost,
            final_grad_norm: last.grad_norm,
            max_symplecticity_residual: trace.max_symplecticity_residual(),
            wall_time_s,
        }
    }
}

fn write_jsonl(w: &mut impl Write, records: &[IterRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_dir(dir: &Path, trace: &OptimizerTrace, summary: &Summary, csv: bool) -> Result<(), String> {
    let ctx = |what: &str, e: &dyn std::fmt::Display| format!("cannot write {what} in {}: {e}", dir.display());
    fs::create_dir_all(dir).map_err(|e| ctx("output directory", &e))?;

    let mut w = BufWriter::new(File::create(dir.join("trace.jsonl")).map_err(|e| ctx("trace.jsonl", &e))?);
    write_jsonl(&mut w, &trace.records)
        .and_then(|_| w.flush())
        .map_err(|e| ctx("trace.jsonl", &e))?;

    let mut text = serde_json::to_string_pretty(summary).map_err(|e| ctx("summary.json", &e))?;
    text.push('\n');
    fs::write(dir.join("summary.json"), text).map_err(|e| ctx("summary.json", &e))?;

    if csv {
        let mut w = csv::Writer::from_path(dir.join("trace.csv")).map_err(|e| ctx("trace.csv", &e))?;
        for r in &trace.records {
            w.serialize(r).map_err(|e| ctx("trace.csv", &e))?;
        }
        w.flush().map_err(|e| ctx("trace.csv", &e))?;
    }
    Ok(())
}

/// Trace lines first, then one `{"summary": ...}` line.
pub fn write_stdout(trace: &OptimizerTrace, summary: &Summary) -> Result<(), String> {
    let stdout = io::stdout();
    let mut w = stdout.lock();
    write_jsonl(&mut w, &trace.records)
        .and_then(|_| {
            w.write_all(b"{\"summary\":")?;
            serde_json::to_writer(&mut w, summary)?;
            w.write_all(b"}\n")
        })
        .map_err(|e| format!("cannot write to stdout: {e}"))
}

pub fn check_table(rows: &[CheckRow]) -> String {
    let width = rows.iter().map(|r| r.invariant.len()).max().unwrap_or(9).max(9);
    let mut out = format!(
        "{:<10}  {:<width$}  {:>10}  {:>8}  {:>7}  {:>6}  {}\n",
        "suite", "invariant", "worst", "tol", "samples", "result", "seed"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<10}  {:<width$}  {:>10.3e}  {:>8.1e}  {:>7}  {:>6}  {}\n",
            r.suite.name(),
            r.invariant,
            r.worst,
            r.tol,
            r.samples,
            if r.pass { "pass" } else { "FAIL" },
            r.seed
        ));
    }
    out
}
