//! CSV tables. Floats are written in Rust's shortest round-trip form, so
//! reading a table back yields bit-identical values.

use std::io::{Read, Write};

use chainfair_core::fit::ThroughputTrace;
use chainfair_core::EmissionVector;

use crate::error::{CliError, Context, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// Two-column `name,value` table.
    pub fn key_value() -> Self {
        Self::new(["name", "value"])
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_kv(&mut self, name: &str, value: impl ToString) {
        self.push(vec![name.to_string(), value.to_string()]);
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("missing column `{name}`")))
    }

    /// Parses a column as floats; empty cells become `None`.
    pub fn column_f64(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let k = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| {
                let cell = r[k].trim();
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>()
                        .map(Some)
                        .map_err(|_| CliError::Usage(format!("bad number `{cell}` in `{name}`")))
                }
            })
            .collect()
    }

    /// Value of `name` in a `name,value` table.
    pub fn lookup(&self, name: &str) -> Option<&str> {
        self.rows
            .iter()
            .find(|r| r.first().map(String::as_str) == Some(name))
            .and_then(|r| r.get(1))
            .map(String::as_str)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }
}

/// Formats an optional float; `None` is an empty cell.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn pair_column(t: &Table) -> Result<()> {
    let k = t.column_index("pair")?;
    for (i, r) in t.rows.iter().enumerate() {
        let expected = (i + 1).to_string();
        if r[k] != expected {
            return Err(CliError::Usage(format!(
                "row {}: pair must be {expected}, found `{}`",
                i + 1,
                r[k]
            )));
        }
    }
    Ok(())
}

fn required(t: &Table, name: &str) -> Result<Vec<f64>> {
    t.column_f64(name)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| CliError::Usage(format!("row {}: empty `{name}`", i + 1))))
        .collect()
}

/// Reads a `pair,rate` throughput trace with pairs numbered 1..n in order.
pub fn read_trace<R: Read>(input: R, label: &str) -> Result<ThroughputTrace> {
    let t = Table::read_csv(input)?;
    pair_column(&t)?;
    let rates = required(&t, "rate")?;
    ThroughputTrace::new(rates, label).context("trace")
}

/// Writes a trace in the layout [`read_trace`] accepts.
pub fn trace_table(trace: &ThroughputTrace) -> Table {
    let mut t = Table::new(["pair", "rate"]);
    for (i, r) in trace.rates().iter().enumerate() {
        t.push(vec![(i + 1).to_string(), r.to_string()]);
    }
    t
}

/// Reads a `pair,x` profile as written by `solve`.
pub fn read_profile<R: Read>(input: R) -> Result<EmissionVector> {
    let t = Table::read_csv(input)?;
    pair_column(&t)?;
    EmissionVector::new(required(&t, "x")?).context("profile")
}

pub fn profile_table(x: &[f64]) -> Table {
    let mut t = Table::new(["pair", "x"]);
    for (i, v) in x.iter().enumerate() {
        t.push(vec![(i + 1).to_string(), v.to_string()]);
    }
    t
}
