//! Quality measures for quantizations and classifications.
//!
//! All measures need complete data. [`quality_report`] restricts itself to
//! the complete rows of a masked table and records how many were dropped.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};

use crate::dataset::{DataMatrix, QualitativeColumn};
use crate::error::{Error, Result};
use crate::linalg;
use crate::quantize::{assign_all, Assignment, CodeBook};

fn require_complete(data: &DataMatrix) -> Result<()> {
    if data.has_missing() {
        Err(Error::InvalidData(
            "quality measures need complete rows; drop or classify incomplete rows first".into(),
        ))
    } else {
        Ok(())
    }
}

fn require_rows(data: &DataMatrix, n: usize) -> Result<()> {
    if data.n_rows() != n {
        return Err(Error::DimensionMismatch {
            expected: data.n_rows(),
            found: n,
        });
    }
    Ok(())
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sum over rows of the squared distance to their class's code vector.
pub fn distortion(data: &DataMatrix, book: &CodeBook, assignment: &Assignment) -> Result<f64> {
    extended_distortion_with(data, book, assignment, 0)
}

/// Extended distortion at radius `r`, with classes taken from the current codes:
/// `sum_i sum_{k in V_r(i)} sum_{x in class k} |x - C_i|^2`.
pub fn extended_distortion(data: &DataMatrix, book: &CodeBook, r: usize) -> Result<f64> {
    require_complete(data)?;
    let assignment = assign_all(book, data)?;
    extended_distortion_with(data, book, &assignment, r)
}

/// Extended distortion for a given classification.
pub fn extended_distortion_with(
    data: &DataMatrix,
    book: &CodeBook,
    assignment: &Assignment,
    r: usize,
) -> Result<f64> {
    require_complete(data)?;
    require_rows(data, assignment.len())?;
    if book.dim() != data.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: book.dim(),
            found: data.n_cols(),
        });
    }
    let topo = book.topology();
    let mut total = 0.0;
    for (row, &k) in assignment.class_of().iter().enumerate() {
        let x = data.row(row);
        // every unit i whose neighborhood contains k; the relation is symmetric
        for i in topo.neighborhood(k, r)? {
            total += sq_dist(x, book.code(i));
        }
    }
    Ok(total)
}

fn group_index(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    // dense ids in increasing label order
    let ordered: BTreeMap<usize, usize> = ids.keys().enumerate().map(|(i, &l)| (l, i)).collect();
    (labels.iter().map(|l| ordered[l]).collect(), ordered.len())
}

fn group_means(data: &DataMatrix, dense: &[usize], groups: usize) -> (Array2<f64>, Vec<usize>) {
    let mut sums = Array2::<f64>::zeros((groups, data.n_cols()));
    let mut sizes = vec![0usize; groups];
    for (i, &g) in dense.iter().enumerate() {
        let mut s = sums.row_mut(g);
        s += &data.row(i);
        sizes[g] += 1;
    }
    for (g, &n) in sizes.iter().enumerate() {
        if n > 0 {
            sums.row_mut(g).mapv_inplace(|v| v / n as f64);
        }
    }
    (sums, sizes)
}

fn grand_mean(data: &DataMatrix) -> Array1<f64> {
    data.values().sum_axis(ndarray::Axis(0)) / data.n_rows() as f64
}

/// Within-class sum of squares about the class centroids. Empty classes add 0.
pub fn ss_intra(data: &DataMatrix, assignment: &Assignment) -> Result<f64> {
    ss_within(data, assignment.class_of())
}

fn ss_within(data: &DataMatrix, labels: &[usize]) -> Result<f64> {
    require_complete(data)?;
    require_rows(data, labels.len())?;
    let (dense, groups) = group_index(labels);
    let (means, _) = group_means(data, &dense, groups);
    Ok(dense
        .iter()
        .enumerate()
        .map(|(i, &g)| sq_dist(data.row(i), means.row(g)))
        .sum())
}

/// Total, between-group and within-group inertia (sums of squares).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inertia {
    pub total: f64,
    pub between: f64,
    pub within: f64,
}

impl Inertia {
    /// Share of total inertia explained by the grouping, in percent.
    pub fn explained_pct(&self) -> f64 {
        (100.0 * self.between / self.total).clamp(0.0, 100.0)
    }
}

pub fn inertia(data: &DataMatrix, grouping: &[usize]) -> Result<Inertia> {
    require_complete(data)?;
    require_rows(data, grouping.len())?;
    let g = grand_mean(data);
    let total: f64 = (0..data.n_rows()).map(|i| sq_dist(data.row(i), g.view())).sum();
    let (dense, groups) = group_index(grouping);
    let (means, sizes) = group_means(data, &dense, groups);
    let between = (0..groups)
        .map(|k| sizes[k] as f64 * sq_dist(means.row(k), g.view()))
        .sum();
    let within = ss_within(data, grouping)?;
    Ok(Inertia {
        total,
        between,
        within,
    })
}

/// `100 * between / total` inertia.
pub fn explained_inertia(data: &DataMatrix, grouping: &[usize]) -> Result<f64> {
    let parts = inertia(data, grouping)?;
    if parts.total <= 0.0 {
        return Err(Error::Degenerate("total inertia is zero".into()));
    }
    Ok(parts.explained_pct())
}

fn scatter(data: &DataMatrix, centers: impl Fn(usize) -> Array1<f64>) -> Array2<f64> {
    let p = data.n_cols();
    let mut s = Array2::<f64>::zeros((p, p));
    for i in 0..data.n_rows() {
        let d = &data.row(i) - &centers(i);
        for a in 0..p {
            for b in 0..p {
                s[[a, b]] += d[a] * d[b];
            }
        }
    }
    s
}

/// Wilks' lambda `det(W) / det(T)`, with `W` the pooled within-group SSCP
/// matrix and `T` the total SSCP matrix about the grand mean. Smaller is
/// better separated. A singular `T` makes the statistic undefined.
pub fn wilks_lambda(data: &DataMatrix, grouping: &[usize]) -> Result<f64> {
    require_complete(data)?;
    require_rows(data, grouping.len())?;
    let g = grand_mean(data);
    let total = scatter(data, |_| g.clone());
    let hadamard: f64 = total.diag().iter().product();
    let det_total = linalg::determinant(&total);
    if hadamard <= 0.0 || det_total.abs() <= 1e-12 * hadamard {
        return Err(Error::Undefined(
            "total scatter matrix is singular (collinear or constant columns)".into(),
        ));
    }
    let (dense, groups) = group_index(grouping);
    let (means, _) = group_means(data, &dense, groups);
    let within = scatter(data, |i| means.row(dense[i]).to_owned());
    Ok((linalg::determinant(&within) / det_total).clamp(0.0, 1.0))
}

/// Observed count of each modality in each unit minus its count under
/// independence, `n_m n_k / N`. Rows: modalities; columns: units. Rows whose
/// qualitative value is missing are left out of every count.
pub fn deviations(class_of: &[usize], n_units: usize, qual: &QualitativeColumn) -> Result<Array2<f64>> {
    if class_of.len() != qual.len() {
        return Err(Error::DimensionMismatch {
            expected: class_of.len(),
            found: qual.len(),
        });
    }
    let m = qual.level_count();
    let mut observed = Array2::<f64>::zeros((m, n_units));
    for (&unit, code) in class_of.iter().zip(qual.codes()) {
        if unit >= n_units {
            return Err(Error::UnitOutOfRange {
                index: unit,
                len: n_units,
            });
        }
        if let Some(c) = code {
            observed[[*c, unit]] += 1.0;
        }
    }
    let n: f64 = observed.sum();
    if n == 0.0 {
        return Ok(observed);
    }
    let modality_totals = observed.sum_axis(ndarray::Axis(1));
    let unit_totals = observed.sum_axis(ndarray::Axis(0));
    for ((mi, k), v) in observed.indexed_iter_mut() {
        *v -= modality_totals[mi] * unit_totals[k] / n;
    }
    Ok(observed)
}

/// Summary of a trained map, in the layout of the comparison table
/// `Dist | class sizes | Wilks | % inert`.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub distortion: f64,
    pub extended_distortion: f64,
    pub radius: usize,
    pub ss_intra: f64,
    /// `None` when the total scatter matrix is singular.
    pub wilks_lambda: Option<f64>,
    pub explained_inertia_pct: Option<f64>,
    /// Per-unit class sizes over the rows used.
    pub class_sizes: Vec<usize>,
    /// Sizes of the groups Wilks and inertia were computed on.
    pub group_sizes: Vec<usize>,
    pub rows_used: usize,
    pub rows_excluded: usize,
}

/// Computes every measure on the complete rows of `data`. `grouping` maps
/// units to groups (super-classes) for Wilks and inertia; without it the
/// map units themselves are the groups.
pub fn quality_report(
    data: &DataMatrix,
    book: &CodeBook,
    radius: usize,
    grouping: Option<&[usize]>,
) -> Result<QualityReport> {
    let complete = data
        .complete_subset()
        .ok_or_else(|| Error::InvalidData("no complete row to evaluate".into()))?;
    let assignment = assign_all(book, &complete)?;
    let n_units = book.unit_count();
    let labels: Vec<usize> = match grouping {
        Some(g) => {
            if g.len() != n_units {
                return Err(Error::DimensionMismatch {
                    expected: n_units,
                    found: g.len(),
                });
            }
            assignment.class_of().iter().map(|&u| g[u]).collect()
        }
        None => assignment.class_of().to_vec(),
    };
    let group_count = grouping
        .map(|g| g.iter().max().map_or(0, |m| m + 1))
        .unwrap_or(n_units);
    let mut group_sizes = vec![0; group_count];
    for &l in &labels {
        group_sizes[l] += 1;
    }
    Ok(QualityReport {
        distortion: distortion(&complete, book, &assignment)?,
        extended_distortion: extended_distortion_with(&complete, book, &assignment, radius)?,
        radius,
        ss_intra: ss_intra(&complete, &assignment)?,
        wilks_lambda: wilks_lambda(&complete, &labels).ok(),
        explained_inertia_pct: explained_inertia(&complete, &labels).ok(),
        class_sizes: assignment.counts().to_vec(),
        group_sizes,
        rows_used: complete.n_rows(),
        rows_excluded: data.n_rows() - complete.n_rows(),
    })
}
