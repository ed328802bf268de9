//! Metric rows and their CSV form.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use csv::{Terminator, WriterBuilder};

use crate::error::LabError;

pub const CSV_HEADER: [&str; 7] = ["run", "seed", "phase", "task", "step", "metric", "value"];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub run: String,
    pub seed: u64,
    pub phase: usize,
    /// `None` for metrics that are not about one task (printed as an empty field).
    pub task: Option<usize>,
    /// Global step: environment steps for RL runs, optimiser steps for C-VAE runs.
    pub step: u64,
    pub metric: String,
    pub value: f64,
}

impl MetricsRow {
    pub fn new(run: &str, seed: u64, phase: usize, task: Option<usize>, step: u64, metric: &str, value: f64) -> Self {
        Self {
            run: run.to_string(),
            seed,
            phase,
            task,
            step,
            metric: metric.to_string(),
            value,
        }
    }
}

/// C's `%.9g`: nine significant digits, trailing zeros dropped, scientific
/// notation outside `[1e-4, 1e9)`.
pub fn format_g9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // Rounding to 9 digits fixes the decimal exponent (9.999999999 becomes 1e1).
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn record(row: &MetricsRow) -> [String; 7] {
    [
        row.run.clone(),
        row.seed.to_string(),
        row.phase.to_string(),
        row.task.map(|t| t.to_string()).unwrap_or_default(),
        row.step.to_string(),
        row.metric.clone(),
        format_g9(row.value),
    ]
}

/// Writes the rows as CSV to any sink.
pub fn write_csv<W: Write>(rows: &[MetricsRow], sink: W) -> Result<(), LabError> {
    let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[MetricsRow], path: &Path) -> Result<(), LabError> {
    write_csv(rows, File::create(path)?)
}

/// Checks that steps never decrease within each `(run, seed)` in emission order.
pub fn steps_nondecreasing(rows: &[MetricsRow]) -> bool {
    let mut last: std::collections::HashMap<(&str, u64), u64> = Default::default();
    rows.iter().all(|r| {
        let prev = last.insert((r.run.as_str(), r.seed), r.step);
        prev.is_none_or(|p| p <= r.step)
    })
}
