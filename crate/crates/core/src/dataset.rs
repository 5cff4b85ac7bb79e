//! In-memory observation tables.
//!
//! A [`DataMatrix`] stores missing entries as `NaN` in `values` together with
//! an explicit mask; the mask is authoritative. Missing values are never
//! imputed. Distance computations restrict themselves to present components.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
    missing: Array2<bool>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl DataMatrix {
    /// Builds a table where every non-finite entry is treated as missing.
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        let missing = values.mapv(|v| !v.is_finite());
        let (n, p) = values.dim();
        Self::with_labels(values, missing, default_labels("row", n), default_labels("x", p))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), p), flat)
            .map_err(|e| Error::InvalidData(e.to_string()))?;
        Self::from_values(values)
    }

    pub fn with_labels(
        mut values: Array2<f64>,
        missing: Array2<bool>,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = values.dim();
        if n == 0 || p == 0 {
            return Err(Error::InvalidData(format!("table is {n}x{p}; need at least 1x1")));
        }
        if missing.dim() != (n, p) {
            return Err(Error::InvalidData("mask shape differs from values".into()));
        }
        if row_labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row_labels.len(),
            });
        }
        if col_labels.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: col_labels.len(),
            });
        }
        for ((i, j), v) in values.indexed_iter_mut() {
            if missing[[i, j]] {
                *v = f64::NAN;
            } else if !v.is_finite() {
                return Err(Error::InvalidData(format!(
                    "non-finite value at row {i}, column `{}`",
                    col_labels[j]
                )));
            }
        }
        for (i, row) in missing.axis_iter(Axis(0)).enumerate() {
            if row.iter().all(|&m| m) {
                return Err(Error::AllMissing { row: i });
            }
        }
        for (j, col) in missing.axis_iter(Axis(1)).enumerate() {
            if col.iter().all(|&m| m) {
                return Err(Error::InvalidData(format!(
                    "column `{}` is entirely missing",
                    col_labels[j]
                )));
            }
        }
        Ok(Self {
            values,
            missing,
            row_labels,
            col_labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.missing
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn row_mask(&self, i: usize) -> ArrayView1<'_, bool> {
        self.missing.row(i)
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.missing[[i, j]]
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    pub fn row_is_complete(&self, i: usize) -> bool {
        self.missing.row(i).iter().all(|&m| !m)
    }

    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.row_is_complete(i)).collect()
    }

    /// The sub-table of complete rows, or `None` when no row is complete.
    pub fn complete_subset(&self) -> Option<DataMatrix> {
        let keep = self.complete_rows();
        if keep.is_empty() {
            return None;
        }
        let values = self.values.select(Axis(0), &keep);
        let missing = Array2::from_elem(values.dim(), false);
        let labels = keep.iter().map(|&i| self.row_labels[i].clone()).collect();
        Some(
            DataMatrix::with_labels(values, missing, labels, self.col_labels.clone())
                .expect("complete rows form a valid table"),
        )
    }

    /// Per-column `(min, max)` over present entries.
    pub fn column_ranges(&self) -> Vec<(f64, f64)> {
        (0..self.n_cols())
            .map(|j| {
                self.present_in_column(j)
                    .into_iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    })
            })
            .collect()
    }

    fn present_in_column(&self, j: usize) -> Vec<f64> {
        self.values
            .column(j)
            .iter()
            .zip(self.missing.column(j))
            .filter(|(_, &m)| !m)
            .map(|(&v, _)| v)
            .collect()
    }
}

fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardizeMode {
    None,
    Center,
    ZScore,
}

impl StandardizeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StandardizeMode::None => "none",
            StandardizeMode::Center => "center",
            StandardizeMode::ZScore => "zscore",
        }
    }
}

impl fmt::Display for StandardizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StandardizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "center" => Ok(Self::Center),
            "zscore" => Ok(Self::ZScore),
            other => Err(Error::InvalidParameter(format!(
                "unknown standardization `{other}`"
            ))),
        }
    }
}

/// Per-column affine transform `x -> (x - mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mode: StandardizeMode,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardization {
    pub fn identity(p: usize) -> Self {
        Self {
            mode: StandardizeMode::None,
            means: vec![0.0; p],
            scales: vec![1.0; p],
        }
    }

    pub fn apply(&self, data: &DataMatrix) -> Result<DataMatrix> {
        self.map(data, |v, m, s| (v - m) / s)
    }

    pub fn invert(&self, data: &DataMatrix) -> Result<DataMatrix> {
        self.map(data, |v, m, s| v * s + m)
    }

    /// Maps a raw row into the standardized space; missing entries stay `NaN`.
    pub fn apply_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.means).zip(&self.scales) {
            *v = (*v - m) / s;
        }
    }

    fn map(&self, data: &DataMatrix, f: impl Fn(f64, f64, f64) -> f64) -> Result<DataMatrix> {
        if data.n_cols() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                found: data.n_cols(),
            });
        }
        let mut values = data.values.clone();
        for ((i, j), v) in values.indexed_iter_mut() {
            if !data.missing[[i, j]] {
                *v = f(*v, self.means[j], self.scales[j]);
            }
        }
        DataMatrix::with_labels(
            values,
            data.missing.clone(),
            data.row_labels.clone(),
            data.col_labels.clone(),
        )
    }
}

/// Centers or z-scores each column using statistics over present entries.
/// Standard deviations use the population (1/N) convention.
pub fn standardize(data: &DataMatrix, mode: StandardizeMode) -> Result<(DataMatrix, Standardization)> {
    let p = data.n_cols();
    if mode == StandardizeMode::None {
        return Ok((data.clone(), Standardization::identity(p)));
    }
    let mut means = Vec::with_capacity(p);
    let mut scales = Vec::with_capacity(p);
    for j in 0..p {
        let present = data.present_in_column(j);
        let count = present.len() as f64;
        let mean = present.iter().sum::<f64>() / count;
        means.push(mean);
        if mode == StandardizeMode::ZScore {
            let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
            let std = var.sqrt();
            if std <= 0.0 || !std.is_finite() {
                return Err(Error::ZeroVariance {
                    column: data.col_labels[j].clone(),
                });
            }
            scales.push(std);
        } else {
            scales.push(1.0);
        }
    }
    let transform = Standardization { mode, means, scales };
    Ok((transform.apply(data)?, transform))
}

/// One qualitative variable: ordered modality names and per-row codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualitativeColumn {
    name: String,
    levels: Vec<String>,
    codes: Vec<Option<usize>>,
}

impl QualitativeColumn {
    pub fn new(name: impl Into<String>, levels: Vec<String>, codes: Vec<Option<usize>>) -> Result<Self> {
        let name = name.into();
        if levels.len() < 2 {
            return Err(Error::InvalidData(format!(
                "qualitative variable `{name}` needs at least 2 modalities, has {}",
                levels.len()
            )));
        }
        if let Some(bad) = codes.iter().flatten().find(|&&c| c >= levels.len()) {
            return Err(Error::InvalidData(format!(
                "code {bad} out of range for `{name}` with {} modalities",
                levels.len()
            )));
        }
        Ok(Self { name, levels, codes })
    }

    /// Levels are collected in order of first appearance; `None` marks a missing value.
    pub fn from_values<S: AsRef<str>>(name: impl Into<String>, values: &[Option<S>]) -> Result<Self> {
        let mut levels: Vec<String> = Vec::new();
        let codes = values
            .iter()
            .map(|v| {
                v.as_ref().map(|s| {
                    let s = s.as_ref();
                    match levels.iter().position(|l| l == s) {
                        Some(k) => k,
                        None => {
                            levels.push(s.to_string());
                            levels.len() - 1
                        }
                    }
                })
            })
            .collect();
        Self::new(name, levels, codes)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn codes(&self) -> &[Option<usize>] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}
