//! Text format for CKSVAR parameter files.
//!
//! One `key = value` pair per line; `#` starts a comment. Scalars are plain
//! numbers, matrices are row-major bracketed lists (`[[1, 0], [0, 1]]`). A
//! flat list `[a, b, ...]` is read row-major into the expected shape, so
//! column vectors can be written either way.
//!
//! Keys: `p`, `k`, `phi0_plus`, `phi0_minus`, `Phi0_x`, `phi{i}_plus`,
//! `phi{i}_minus`, `Phi{i}_x` for `i = 1..k`, `c`, `Sigma_u`, and the
//! optional `b_threshold`. Lag blocks and `c` default to zero when absent.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::cksvar::{CksvarParams, LagBlocks};
use crate::error::{Error, Result};
use crate::pencil::Mat;

pub fn parse_params(text: &str) -> Result<CksvarParams> {
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim().to_string();
        if entries.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key `{key}`", lineno + 1)));
        }
    }

    let p = scalar_count(&entries, "p")?;
    let k = scalar_count(&entries, "k")?;
    if p == 0 {
        return Err(Error::Parse("p must be at least 1".into()));
    }

    let mut known: Vec<String> = ["p", "k", "c", "Sigma_u", "b_threshold"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut blocks = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let names = [
            format!("phi{i}_plus"),
            format!("phi{i}_minus"),
            format!("Phi{i}_x"),
        ];
        let required = i == 0;
        let phi_plus = matrix_or_zero(&entries, &names[0], p, 1, required)?;
        let phi_minus = matrix_or_zero(&entries, &names[1], p, 1, required)?;
        let phi_x = matrix_or_zero(&entries, &names[2], p, p - 1, required && p > 1)?;
        blocks.push(LagBlocks {
            phi_plus,
            phi_minus,
            phi_x,
        });
        known.extend(names);
    }
    if let Some(unknown) = entries.keys().find(|key| !known.contains(key)) {
        return Err(Error::Parse(format!("unknown key `{unknown}`")));
    }
    let c = matrix_or_zero(&entries, "c", p, 1, false)?;
    let sigma = matrix_or_zero(&entries, "Sigma_u", p, p, true)?;
    let b = match entries.get("b_threshold") {
        Some(v) => v
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("b_threshold: {e}")))?,
        None => 0.0,
    };
    let contemporaneous = blocks.remove(0);
    CksvarParams::new(contemporaneous, blocks, c, sigma, b)
}

pub fn read_params(path: &Path) -> Result<CksvarParams> {
    let text = std::fs::read_to_string(path)?;
    parse_params(&text)
}

/// Serializes parameters in the same format. The threshold is always
/// written as zero since it was folded into `c` on construction.
pub fn format_params(params: &CksvarParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p = {}", params.p());
    let _ = writeln!(out, "k = {}", params.k());
    for i in 0..=params.k() {
        let _ = writeln!(out, "phi{i}_plus = {}", format_matrix(&params.phi_plus(i)));
        let _ = writeln!(out, "phi{i}_minus = {}", format_matrix(&params.phi_minus(i)));
        if params.p() > 1 {
            let _ = writeln!(out, "Phi{i}_x = {}", format_matrix(&params.phi_x(i)));
        }
    }
    let _ = writeln!(out, "c = {}", format_matrix(params.c()));
    let _ = writeln!(out, "Sigma_u = {}", format_matrix(params.sigma_u()));
    out
}

fn format_matrix(m: &Mat) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let vals: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
            format!("[{}]", vals.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn scalar_count(entries: &BTreeMap<String, String>, key: &str) -> Result<usize> {
    entries
        .get(key)
        .ok_or_else(|| Error::Parse(format!("missing key `{key}`")))?
        .parse::<usize>()
        .map_err(|e| Error::Parse(format!("{key}: {e}")))
}

fn matrix_or_zero(
    entries: &BTreeMap<String, String>,
    key: &str,
    rows: usize,
    cols: usize,
    required: bool,
) -> Result<Mat> {
    match entries.get(key) {
        Some(text) => parse_matrix(text, rows, cols).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{key}: {msg}")),
            other => other,
        }),
        None if required => Err(Error::Parse(format!("missing key `{key}`"))),
        None => Ok(Mat::zeros(rows, cols)),
    }
}

fn parse_matrix(text: &str, rows: usize, cols: usize) -> Result<Mat> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let number = |v: &Value| {
        v.as_f64()
            .ok_or_else(|| Error::Parse(format!("expected a number, got `{v}`")))
    };
    let flat: Vec<f64> = match &value {
        Value::Number(_) => vec![number(&value)?],
        Value::Array(items) if items.iter().all(|v| v.is_array()) => {
            if items.len() != rows {
                return Err(Error::Parse(format!("expected {rows} rows, got {}", items.len())));
            }
            let mut flat = Vec::with_capacity(rows * cols);
            for row in items {
                let row = row.as_array().expect("checked");
                if row.len() != cols {
                    return Err(Error::Parse(format!("expected {cols} columns, got {}", row.len())));
                }
                for v in row {
                    flat.push(number(v)?);
                }
            }
            flat
        }
        Value::Array(items) => items.iter().map(number).collect::<Result<_>>()?,
        other => return Err(Error::Parse(format!("expected a matrix, got `{other}`"))),
    };
    Mat::from_vec(rows, cols, flat).map_err(|_| {
        Error::Parse(format!("expected {} values for a {rows}x{cols} matrix", rows * cols))
    })
}
