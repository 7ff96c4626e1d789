//! On-disk CSV formats.
//!
//! | file        | header                        |
//! |-------------|-------------------------------|
//! | sequence    | `index,time,value`            |
//! | ensemble    | `rep,index,value` (long form) |
//! | bicoherence | `j,k,bicoherence_sq`          |
//! | histogram   | `bin_left,bin_right,count`    |
//!
//! Reals are written in Rust's shortest round-trip form, so a value read
//! back is bit-identical to the one written.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gaussianity::{BicoherenceGrid, Ensemble, Histogram};

pub const SEQUENCE_HEADER: &str = "index,time,value";
pub const ENSEMBLE_HEADER: &str = "rep,index,value";
pub const BICOHERENCE_HEADER: &str = "j,k,bicoherence_sq";
pub const HISTOGRAM_HEADER: &str = "bin_left,bin_right,count";

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Sequence CSV text. `times` defaults to the sample index.
pub fn sequence_csv(times: Option<&[f64]>, values: &[f64]) -> String {
    let mut out = String::with_capacity(32 * values.len());
    out.push_str(SEQUENCE_HEADER);
    out.push('\n');
    for (i, v) in values.iter().enumerate() {
        let t = times.map_or(i as f64, |t| t[i]);
        let _ = writeln!(out, "{i},{t:?},{v:?}");
    }
    out
}

pub fn ensemble_csv(ens: &Ensemble) -> String {
    let mut out = String::with_capacity(32 * ens.values().len());
    out.push_str(ENSEMBLE_HEADER);
    out.push('\n');
    for (r, rec) in ens.records().enumerate() {
        for (i, v) in rec.iter().enumerate() {
            let _ = writeln!(out, "{r},{i},{v:?}");
        }
    }
    out
}

pub fn bicoherence_csv(grid: Option<&BicoherenceGrid>) -> String {
    let mut out = String::new();
    out.push_str(BICOHERENCE_HEADER);
    out.push('\n');
    if let Some(grid) = grid {
        for p in &grid.points {
            let _ = writeln!(out, "{},{},{:?}", p.j, p.k, p.value);
        }
    }
    out
}

pub fn histogram_csv(hist: &Histogram) -> String {
    let mut out = String::new();
    out.push_str(HISTOGRAM_HEADER);
    out.push('\n');
    for (l, r, c) in hist.rows() {
        let _ = writeln!(out, "{l:?},{r:?},{c}");
    }
    out
}

/// Parsed sequence file.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFile {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Either table a Gaussianity test accepts.
#[derive(Debug, Clone, PartialEq)]
pub enum TableFile {
    Sequence(SequenceFile),
    Ensemble(Ensemble),
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: '{field}' is not a number")))
}

fn parse_usize(field: &str, line: usize) -> Result<usize> {
    field
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Parse(format!("line {line}: '{field}' is not an index")))
}

/// Data rows as (1-based line number, three fields).
fn rows(text: &str) -> Result<Vec<(usize, [&str; 3])>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let fields: [&str; 3] = fields
            .try_into()
            .map_err(|_| Error::Parse(format!("line {}: expected 3 fields", i + 1)))?;
        out.push((i + 1, fields));
    }
    Ok(out)
}

fn header(text: &str) -> &str {
    text.lines().next().unwrap_or("").trim()
}

pub fn parse_sequence(text: &str) -> Result<SequenceFile> {
    if header(text) != SEQUENCE_HEADER {
        return Err(Error::Parse(format!("expected header '{SEQUENCE_HEADER}'")));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (expected, (line, [idx, t, v])) in rows(text)?.into_iter().enumerate() {
        if parse_usize(idx, line)? != expected {
            return Err(Error::Parse(format!("line {line}: index out of order")));
        }
        times.push(parse_f64(t, line)?);
        values.push(parse_f64(v, line)?);
    }
    if values.is_empty() {
        return Err(Error::Parse("sequence has no rows".into()));
    }
    Ok(SequenceFile { times, values })
}

pub fn parse_ensemble(text: &str) -> Result<Ensemble> {
    if header(text) != ENSEMBLE_HEADER {
        return Err(Error::Parse(format!("expected header '{ENSEMBLE_HEADER}'")));
    }
    let mut records: Vec<Vec<f64>> = Vec::new();
    for (line, [rep, idx, v]) in rows(text)? {
        let rep = parse_usize(rep, line)?;
        let idx = parse_usize(idx, line)?;
        if rep == records.len() && idx == 0 {
            records.push(Vec::new());
        }
        let count = records.len();
        match records.last_mut() {
            Some(rec) if rep + 1 == count && idx == rec.len() => rec.push(parse_f64(v, line)?),
            _ => {
                return Err(Error::Parse(format!(
                    "line {line}: rows must be ordered by (rep, index)"
                )))
            }
        }
    }
    if records.is_empty() {
        return Err(Error::Parse("ensemble has no rows".into()));
    }
    Ensemble::new(records).map_err(|e| match e.root() {
        Error::Dimension { .. } => Error::Parse("records have unequal lengths".into()),
        _ => e,
    })
}

pub fn parse_table(text: &str) -> Result<TableFile> {
    match header(text) {
        SEQUENCE_HEADER => parse_sequence(text).map(TableFile::Sequence),
        ENSEMBLE_HEADER => parse_ensemble(text).map(TableFile::Ensemble),
        other => Err(Error::Parse(format!("unrecognized header '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sequence_text() {
        let s = sequence_csv(Some(&[0.0, 0.15]), &[1.5, -2.0]);
        assert_eq!(s, "index,time,value\n0,0.0,1.5\n1,0.15,-2.0\n");
        let back = parse_sequence(&s).unwrap();
        assert_eq!(back.values, vec![1.5, -2.0]);
    }

    #[test]
    fn ensemble_round_trip() {
        let e = Ensemble::new(vec![vec![1.0, 2.0, 3.0], vec![-1e-300, 0.1, 7.0]]).unwrap();
        assert_eq!(parse_ensemble(&ensemble_csv(&e)).unwrap(), e);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(parse_sequence("i,t,v\n0,0,1\n").is_err());
        assert!(parse_sequence("index,time,value\n1,0,1\n").is_err());
        assert!(parse_sequence("index,time,value\n0,0,abc\n").is_err());
        assert!(parse_sequence("index,time,value\n").is_err());
        assert!(parse_ensemble("rep,index,value\n0,0,1\n0,1,2\n1,0,3\n").is_err());
        assert!(parse_ensemble("rep,index,value\n0,1,1\n").is_err());
        assert!(matches!(parse_table("a,b\n"), Err(Error::Parse(_))));
    }

    proptest! {
        #[test]
        fn sequence_values_round_trip(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..50)) {
            let text = sequence_csv(None, &values);
            let back = parse_sequence(&text).unwrap();
            prop_assert_eq!(back.values, values);
        }
    }
}
