//! Positive/unlabeled datasets and CSV ingestion.
//!
//! A dataset is a positive (component) sample together with an unlabeled
//! (mixture) sample of the same dimension. Two CSV layouts are accepted:
//! a single file whose label column marks positives with `1` and unlabeled
//! rows with `0`, or two files holding one sample each. A header row is
//! recognised when none of its cells parse as numbers.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive sample `X₁` and unlabeled sample `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PUDataset {
    pub positives: Vec<Vec<f64>>,
    pub unlabeled: Vec<Vec<f64>>,
    pub dim: usize,
    pub provenance: String,
}

/// One violated dataset invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl PUDataset {
    /// Builds a dataset and rejects it if any invariant fails.
    pub fn new(
        positives: Vec<Vec<f64>>,
        unlabeled: Vec<Vec<f64>>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let dim = positives
            .first()
            .or_else(|| unlabeled.first())
            .map_or(0, Vec::len);
        let ds = PUDataset {
            positives,
            unlabeled,
            dim,
            provenance: provenance.into(),
        };
        let findings = ds.validate();
        if findings.is_empty() {
            Ok(ds)
        } else {
            Err(Error::InvalidDataset(
                findings.into_iter().map(|f| f.message).collect(),
            ))
        }
    }

    /// Univariate dataset from two plain samples.
    pub fn univariate(x1: &[f64], x: &[f64], provenance: impl Into<String>) -> Result<Self> {
        Self::new(
            x1.iter().map(|&v| vec![v]).collect(),
            x.iter().map(|&v| vec![v]).collect(),
            provenance,
        )
    }

    /// Returns one finding per violated invariant; empty when the dataset is valid.
    pub fn validate(&self) -> Vec<Finding> {
        let mut out = Vec::new();
        let mut push = |message: String| out.push(Finding { message });
        if self.dim == 0 {
            push("dimension must be at least 1".to_string());
        }
        if self.positives.is_empty() {
            push("positive sample is empty".to_string());
        }
        if self.unlabeled.is_empty() {
            push("unlabeled sample is empty".to_string());
        }
        for (name, sample) in [("positive", &self.positives), ("unlabeled", &self.unlabeled)] {
            for (i, p) in sample.iter().enumerate() {
                if p.len() != self.dim {
                    push(format!(
                        "{name} point {i} has dimension {} (expected {})",
                        p.len(),
                        self.dim
                    ));
                }
                if p.iter().any(|v| !v.is_finite()) {
                    push(format!("{name} point {i} has a non-finite coordinate"));
                }
            }
        }
        out
    }

    pub fn n_positive(&self) -> usize {
        self.positives.len()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.unlabeled.len()
    }

    /// The two samples as flat vectors, when `dim == 1`.
    pub fn as_univariate(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.dim != 1 {
            return None;
        }
        Some((
            self.positives.iter().map(|p| p[0]).collect(),
            self.unlabeled.iter().map(|p| p[0]).collect(),
        ))
    }

    /// Writes the two-file form, values printed with 17 significant digits.
    pub fn save_two_files(&self, positives: &Path, unlabeled: &Path) -> Result<()> {
        write_points(positives, &self.positives)?;
        write_points(unlabeled, &self.unlabeled)
    }

    /// Writes the single-file form with the label in the first column.
    pub fn save_labeled(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for (label, sample) in [(1, &self.positives), (0, &self.unlabeled)] {
            for p in sample.iter() {
                write!(out, "{label}")?;
                for v in p {
                    write!(out, ",{}", format_value(*v))?;
                }
                writeln!(out)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_points(path: &Path, points: &[Vec<f64>]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for p in points {
        let line: Vec<String> = p.iter().map(|v| format_value(*v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Where the positive/unlabeled flag lives in a single-file CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

struct Table {
    header: Option<Vec<String>>,
    /// (1-based line number, cells)
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, 0, e))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(i + 1, |p| p.line() as usize);
            csv_error(path, line, e)
        })?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        let cells: Vec<String> = rec.iter().map(str::to_string).collect();
        if cells.len() == 1 && cells[0].is_empty() {
            continue;
        }
        rows.push((line, cells));
    }
    let header = match rows.first() {
        Some((_, cells)) if cells.iter().all(|c| c.parse::<f64>().is_err()) => {
            Some(rows.remove(0).1)
        }
        _ => None,
    };
    Ok(Table { header, rows })
}

fn csv_error(path: &Path, row: usize, e: impl fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        row,
        message: e.to_string(),
    }
}

fn parse_row(path: &Path, line: usize, cells: &[String], skip: Option<usize>) -> Result<Vec<f64>> {
    cells
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .map(|(j, c)| {
            c.parse::<f64>().map_err(|_| Error::Csv {
                path: path.to_path_buf(),
                row: line,
                message: format!("column {}: non-numeric cell {c:?}", j + 1),
            })
        })
        .collect()
}

fn check_arity(path: &Path, line: usize, got: usize, expected: &mut Option<usize>) -> Result<()> {
    match *expected {
        None => {
            *expected = Some(got);
            Ok(())
        }
        Some(e) if e == got => Ok(()),
        Some(e) => Err(Error::Csv {
            path: path.to_path_buf(),
            row: line,
            message: format!("row has {got} columns, expected {e}"),
        }),
    }
}

fn finish(
    positives: Vec<Vec<f64>>,
    unlabeled: Vec<Vec<f64>>,
    provenance: String,
    path: &Path,
) -> Result<PUDataset> {
    if positives.is_empty() {
        return Err(csv_error(path, 0, "no positive rows"));
    }
    if unlabeled.is_empty() {
        return Err(csv_error(path, 0, "no unlabeled rows"));
    }
    PUDataset::new(positives, unlabeled, provenance)
}

/// Loads a single CSV whose label column holds `1` (positive) or `0`
/// (unlabeled). `label` defaults to the first column; a name requires a
/// header row, a bare integer is taken as a zero-based column index.
pub fn load_csv(path: &Path, label: Option<&str>) -> Result<PUDataset> {
    let table = read_table(path)?;
    let column = match label {
        None => LabelColumn::Index(0),
        Some(s) => match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        },
    };
    let label_idx = match &column {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => table
            .header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| csv_error(path, 1, format!("label column {name:?} not found in header")))?,
    };

    let mut arity = table.header.as_ref().map(Vec::len);
    let mut positives = Vec::new();
    let mut unlabeled = Vec::new();
    for (line, cells) in &table.rows {
        check_arity(path, *line, cells.len(), &mut arity)?;
        if label_idx >= cells.len() {
            return Err(csv_error(path, *line, "label column out of range"));
        }
        let flag = cells[label_idx].parse::<f64>().ok();
        let point = parse_row(path, *line, cells, Some(label_idx))?;
        match flag {
            Some(1.0) => positives.push(point),
            Some(0.0) => unlabeled.push(point),
            _ => {
                return Err(csv_error(
                    path,
                    *line,
                    format!("label {:?} is neither 1 nor 0", cells[label_idx]),
                ))
            }
        }
    }
    finish(positives, unlabeled, path.display().to_string(), path)
}

/// Loads the two-file form: one CSV of positives and one of unlabeled points.
pub fn load_two_files(positives: &Path, unlabeled: &Path) -> Result<PUDataset> {
    let load = |path: &Path| -> Result<Vec<Vec<f64>>> {
        let table = read_table(path)?;
        let mut arity = table.header.as_ref().map(Vec::len);
        table
            .rows
            .iter()
            .map(|(line, cells)| {
                check_arity(path, *line, cells.len(), &mut arity)?;
                parse_row(path, *line, cells, None)
            })
            .collect()
    };
    let pos = load(positives)?;
    let unl = load(unlabeled)?;
    if let (Some(a), Some(b)) = (pos.first(), unl.first()) {
        if a.len() != b.len() {
            return Err(csv_error(
                unlabeled,
                1,
                format!("dimension {} differs from positives ({})", b.len(), a.len()),
            ));
        }
    }
    if pos.is_empty() {
        return Err(csv_error(positives, 0, "no positive rows"));
    }
    finish(
        pos,
        unl,
        format!("{} + {}", positives.display(), unlabeled.display()),
        unlabeled,
    )
}
