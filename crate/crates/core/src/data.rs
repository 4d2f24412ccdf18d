//! Synthetic datasets and headerless `label,f1,..,fK` CSV files.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::boosting::Label;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no data rows")]
    EmptyFile,
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Provenance {
    Synthetic { seed: u64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn positive_rate(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|l| l.is_positive()).count() as f64 / self.n_rows() as f64
    }

    /// The rows at `idx`, in order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Splits off the last `n` rows.
    pub fn split_tail(mut self, n: usize) -> (Dataset, Dataset) {
        let at = self.n_rows().saturating_sub(n);
        let tail = Dataset {
            features: self.features.split_off(at),
            labels: self.labels.split_off(at),
            provenance: self.provenance.clone(),
        };
        (self, tail)
    }
}

/// The noiseless label is `score > 0` with
/// `score = (x0 + 1)(x1 + 1) + (x2 + 1)(x3 - 1) + x4^2 / 2 - 1/2`
/// (indices wrap when there are fewer than five features), which has mean
/// zero under standard normal features. Each label is then flipped with
/// probability `noise`.
pub fn generate_synthetic(
    n_rows: usize,
    n_features: usize,
    noise: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    if n_features < 2 {
        return Err(DataError::InvalidSize("need at least 2 features".into()));
    }
    if n_rows == 0 {
        return Err(DataError::InvalidSize("need at least 1 row".into()));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(DataError::InvalidSize(format!(
            "noise {noise} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n_rows);
    let mut labels = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let x: Vec<f64> = (0..n_features)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let at = |k: usize| x[k % n_features];
        let score =
            (at(0) + 1.0) * (at(1) + 1.0) + (at(2) + 1.0) * (at(3) - 1.0) + 0.5 * at(4) * at(4)
                - 0.5;
        let flip = rng.random::<f64>() < noise;
        labels.push(Label::from_binary((score > 0.0) != flip));
        features.push(x);
    }
    Ok(Dataset {
        features,
        labels,
        provenance: Provenance::Synthetic { seed },
    })
}

fn parse_line(text: &str, line: usize) -> Result<(Label, Vec<f64>), DataError> {
    let err = |message: String| DataError::Parse { line, message };
    let mut fields = text.split(',');
    let label_field = fields.next().unwrap_or("").trim();
    let label = match label_field.parse::<f64>() {
        Ok(0.0) => Label::Negative,
        Ok(1.0) => Label::Positive,
        _ => return Err(err(format!("label {label_field:?} is not 0 or 1"))),
    };
    let features = fields
        .enumerate()
        .map(|(k, f)| {
            let f = f.trim();
            match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(err(format!(
                    "field {} ({f:?}) is not a finite number",
                    k + 2
                ))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    if features.is_empty() {
        return Err(err("no feature columns".into()));
    }
    Ok((label, features))
}

/// Reads at most `limit_rows` rows. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn load_csv(path: &Path, limit_rows: Option<usize>) -> Result<Dataset, DataError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        if limit_rows.is_some_and(|l| labels.len() >= l) {
            break;
        }
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (label, row) = parse_line(&line, i + 1)?;
        if let Some(first) = features.first().map(Vec::len) {
            if row.len() != first {
                return Err(DataError::Parse {
                    line: i + 1,
                    message: format!("{} features, expected {first}", row.len()),
                });
            }
        }
        labels.push(label);
        features.push(row);
    }
    if labels.is_empty() {
        return Err(DataError::EmptyFile);
    }
    Ok(Dataset {
        features,
        labels,
        provenance: Provenance::File(path.to_path_buf()),
    })
}

/// Shortest round-tripping decimals, LF line endings.
pub fn to_csv_string(data: &Dataset) -> String {
    let mut out = String::new();
    for (label, row) in data.labels.iter().zip(&data.features) {
        out.push(if label.is_positive() { '1' } else { '0' });
        for v in row {
            write!(out, ",{v}").expect("writing to a string");
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(data: &Dataset, path: &Path) -> Result<(), DataError> {
    std::fs::write(path, to_csv_string(data))?;
    Ok(())
}
