//! Plain-text Kraus dumps.
//!
//! ```text
//! time 1.000000000000e-3
//! picture interaction
//! source numeric
//! count 8
//! completeness_residual 2.1e-15
//! operator 0 weight 3.9e0
//! re <row> ; <row> ; ...
//! im <row> ; <row> ; ...
//! ```
//!
//! Rows hold space-separated numbers in `{:e}` form, which round-trips f64
//! exactly.

use std::fmt::Write as _;

use nalgebra::{SMatrix, SVector};

use super::{KrausOperator, KrausSet, Picture, QubitKrausSet};
use crate::error::{Error, Result};
use crate::linalg::{c, C64};

fn write_rows<const N: usize>(out: &mut String, tag: &str, m: &SMatrix<C64, N, N>, part: fn(&C64) -> f64) {
    let rows: Vec<String> = (0..N)
        .map(|r| (0..N).map(|col| format!("{:e}", part(&m[(r, col)]))).collect::<Vec<_>>().join(" "))
        .collect();
    let _ = writeln!(out, "{tag} {}", rows.join(" ; "));
}

fn write_operator<const N: usize>(out: &mut String, index: usize, weight: f64, m: &SMatrix<C64, N, N>) {
    let _ = writeln!(out, "operator {index} weight {weight:e}");
    write_rows(out, "re", m, |z| z.re);
    write_rows(out, "im", m, |z| z.im);
}

/// Serializes a two-qubit Kraus set.
pub fn format_kraus(set: &KrausSet, source: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "time {:e}", set.time);
    let _ = writeln!(out, "picture {}", set.picture.as_str());
    let _ = writeln!(out, "source {source}");
    let _ = writeln!(out, "count {}", set.len());
    let _ = writeln!(out, "completeness_residual {:e}", set.completeness_residual());
    for (i, k) in set.operators.iter().enumerate() {
        write_operator(&mut out, i, k.weight, &k.op);
    }
    out
}

/// Serializes a reduced single-qubit set.
pub fn format_qubit_kraus(set: &QubitKrausSet, source: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "time {:e}", set.time);
    let _ = writeln!(out, "source {source}");
    let _ = writeln!(out, "count {}", set.len());
    let _ = writeln!(out, "completeness_residual {:e}", set.completeness_residual());
    let _ = writeln!(out, "b_min_eigenvalue {:e}", set.b_min_eigenvalue);
    for (i, (w, k)) in set.operators.iter().enumerate() {
        write_operator(&mut out, i, *w, k);
    }
    out
}

/// Parsed dump header plus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausDump<const N: usize> {
    pub time: f64,
    pub picture: Option<Picture>,
    pub source: String,
    pub completeness_residual: f64,
    pub operators: Vec<(f64, SMatrix<C64, N, N>)>,
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Configuration(format!("kraus dump line {}: {msg}", line + 1))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| bad(line, format!("not a number: {s:?}")))
}

fn parse_rows<const N: usize>(rest: &str, line: usize) -> Result<SMatrix<f64, N, N>> {
    let rows: Vec<&str> = rest.split(';').collect();
    if rows.len() != N {
        return Err(bad(line, format!("expected {N} rows, found {}", rows.len())));
    }
    let mut m = SMatrix::<f64, N, N>::zeros();
    for (r, row) in rows.iter().enumerate() {
        let vals: Vec<f64> = row.split_whitespace().map(|s| parse_f64(s, line)).collect::<Result<_>>()?;
        if vals.len() != N {
            return Err(bad(line, format!("row {r} has {} entries", vals.len())));
        }
        m.set_row(r, &SVector::<f64, N>::from_column_slice(&vals).transpose());
    }
    Ok(m)
}

/// Parses output of [`format_kraus`] (N = 4) or [`format_qubit_kraus`] (N = 2).
pub fn parse_dump<const N: usize>(text: &str) -> Result<KrausDump<N>> {
    let mut dump = KrausDump {
        time: f64::NAN,
        picture: None,
        source: String::new(),
        completeness_residual: f64::NAN,
        operators: Vec::new(),
    };
    let mut count = None;
    let mut pending: Option<(f64, Option<SMatrix<f64, N, N>>)> = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        match key {
            "time" => dump.time = parse_f64(rest, n)?,
            "picture" => dump.picture = Some(rest.parse().map_err(|e| bad(n, e))?),
            "source" => dump.source = rest.to_string(),
            "count" => count = Some(rest.parse::<usize>().map_err(|_| bad(n, "bad count"))?),
            "completeness_residual" => dump.completeness_residual = parse_f64(rest, n)?,
            "b_min_eigenvalue" => {}
            "operator" => {
                if pending.is_some() {
                    return Err(bad(n, "operator without matrix"));
                }
                let weight = rest.split_once("weight").map(|(_, w)| w.trim()).ok_or_else(|| bad(n, "missing weight"))?;
                pending = Some((parse_f64(weight, n)?, None));
            }
            "re" => match pending.as_mut() {
                Some((_, re @ None)) => *re = Some(parse_rows(rest, n)?),
                _ => return Err(bad(n, "unexpected re")),
            },
            "im" => match pending.take() {
                Some((w, Some(re))) => {
                    let im = parse_rows::<N>(rest, n)?;
                    dump.operators.push((w, SMatrix::from_fn(|r, col| c(re[(r, col)], im[(r, col)]))));
                }
                _ => return Err(bad(n, "unexpected im")),
            },
            other => return Err(bad(n, format!("unknown field {other:?}"))),
        }
    }
    if pending.is_some() {
        return Err(Error::Configuration("kraus dump ends inside an operator".into()));
    }
    if count != Some(dump.operators.len()) {
        return Err(Error::Configuration(format!(
            "kraus dump declares {count:?} operators, contains {}",
            dump.operators.len()
        )));
    }
    Ok(dump)
}

impl KrausDump<4> {
    pub fn into_set(self) -> KrausSet {
        KrausSet {
            operators: self.operators.into_iter().map(|(weight, op)| KrausOperator { weight, op }).collect(),
            time: self.time,
            picture: self.picture.unwrap_or_default(),
        }
    }
}
