//! JSON and CSV exchange formats.
//!
//! Spaces and measures are read from JSON, tables and curves are written as CSV.
//! Floats are written in Rust's shortest round-trip form, so CSV output is
//! byte-identical for identical values.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lipgeometry::{MatrixObservable, Nucleus};
use crate::markov::cantor_net;
use crate::metric_space::{circle_net, interval_net, line_points, FiniteMetricSpace};
use crate::transport::{Coupling, Measure};

/// JSON description of a finite metric space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Interval { n: usize, length: f64 },
    Circle { n: usize, circumference: f64 },
    Cantor { depth: usize },
    Line { coords: Vec<f64> },
    CirclePoints { coords: Vec<f64>, circumference: f64 },
    Matrix {
        #[serde(default)]
        labels: Option<Vec<String>>,
        dist: Vec<Vec<f64>>,
    },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<Arc<FiniteMetricSpace>> {
        let x = match self {
            SpaceSpec::Interval { n, length } => interval_net(*n, *length)?,
            SpaceSpec::Circle { n, circumference } => circle_net(*n, *circumference)?,
            SpaceSpec::Cantor { depth } => cantor_net(*depth)?,
            SpaceSpec::Line { coords } => line_points(coords.clone())?,
            SpaceSpec::CirclePoints { coords, circumference } => {
                FiniteMetricSpace::circle_points(coords.clone(), *circumference)?
            }
            SpaceSpec::Matrix { labels, dist } => {
                let labels = labels.clone().unwrap_or_else(|| (0..dist.len()).map(|i| i.to_string()).collect());
                FiniteMetricSpace::new(labels, dist.clone())?
            }
        };
        Ok(Arc::new(x))
    }
}

/// A measure in JSON: either a weight array aligned with the labels or a point mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSpec {
    Weights(Vec<f64>),
    Dirac { dirac: usize },
    DiracLabel { dirac_label: String },
}

impl MeasureSpec {
    pub fn build(&self, space: &Arc<FiniteMetricSpace>) -> Result<Measure> {
        match self {
            MeasureSpec::Weights(w) => Measure::new(Arc::clone(space), w.clone()),
            MeasureSpec::Dirac { dirac } => Measure::dirac(Arc::clone(space), *dirac),
            MeasureSpec::DiracLabel { dirac_label } => {
                let p = space
                    .labels()
                    .iter()
                    .position(|l| l == dirac_label)
                    .ok_or_else(|| Error::arg(format!("no point labelled {dirac_label:?}")))?;
                Measure::dirac(Arc::clone(space), p)
            }
        }
    }
}

pub fn measure_from_json(space: &Arc<FiniteMetricSpace>, json: &str) -> Result<Measure> {
    serde_json::from_str::<MeasureSpec>(json)?.build(space)
}

pub fn measure_to_json(mu: &Measure) -> String {
    serde_json::to_string(mu.weights()).expect("float arrays always serialize")
}

/// Reads one `n×n` Hermitian matrix per point, entries as `[re, im]` pairs.
pub fn matrix_observable_from_json(space: &Arc<FiniteMetricSpace>, json: &str) -> Result<MatrixObservable> {
    let raw: Vec<Vec<Vec<[f64; 2]>>> = serde_json::from_str(json)?;
    let mats = raw
        .into_iter()
        .enumerate()
        .map(|(p, rows)| {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(Error::Parse(format!("matrix at point {p} is not square")));
            }
            Ok(DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
        })
        .collect::<Result<Vec<_>>>()?;
    MatrixObservable::new(Arc::clone(space), mats)
}

fn fmt(x: f64) -> String {
    x.to_string()
}

fn to_csv(header: Option<Vec<String>>, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    if let Some(h) = header {
        w.write_record(&h).expect("writing to memory");
    }
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv of utf-8 fields")
}

/// Square table with labelled rows and columns.
pub fn matrix_csv(labels: &[String], rows: &[Vec<f64>]) -> String {
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    to_csv(
        Some(header),
        rows.iter().zip(labels).map(|(r, l)| std::iter::once(l.clone()).chain(r.iter().map(|&v| fmt(v))).collect()),
    )
}

/// Named columns of equal length.
pub fn columns_csv(headers: &[&str], columns: &[Vec<f64>]) -> Result<String> {
    if headers.len() != columns.len() || columns.iter().any(|c| c.len() != columns[0].len()) {
        return Err(Error::arg("one header per column and equal column lengths"));
    }
    let n = columns.first().map_or(0, Vec::len);
    Ok(to_csv(
        Some(headers.iter().map(|h| h.to_string()).collect()),
        (0..n).map(|i| columns.iter().map(|c| fmt(c[i])).collect()),
    ))
}

pub fn coupling_csv(x: &FiniteMetricSpace, c: &Coupling) -> String {
    matrix_csv(x.labels(), &c.rows())
}

/// One nucleus function per row, columns in label order.
pub fn nucleus_csv(nucleus: &Nucleus) -> String {
    to_csv(
        Some(nucleus.space().labels().to_vec()),
        nucleus.functions().map(|f| f.iter().map(|&v| fmt(v)).collect()),
    )
}

/// Reads a table written by [`matrix_csv`] back as `(labels, rows)`.
pub fn read_matrix_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let labels: Vec<String> = r
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .skip(1)
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let row = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((labels, rows))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}
