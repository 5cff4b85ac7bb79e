//! Categorical tables and the Kohonen algorithms for qualitative variables:
//! KORRESP (two-way contingency tables), KACM (Burt table), KACM1 and KACM2
//! (modalities and individuals, one after the other) and KDISJ
//! (simultaneous individuals and modalities).

use std::collections::HashMap;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayViewMut1, Axis};

use crate::dataset::{DataMatrix, QualitativeColumn};
use crate::error::{Error, Result};
use crate::init::init_random_box;
use crate::quantize::{argmin_by, assign_all, som_train_observed, CodeBook, GainSchedule, MissingMode, Neighborhoods, StepRecord};
use crate::rng::{derive_seed, SeededRng};
use crate::topology::{MapTopology, RadiusSchedule};

/// Two-way table of counts: rows are the modalities of the first variable,
/// columns those of the second.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    counts: Array2<f64>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    row_sums: Array1<f64>,
    col_sums: Array1<f64>,
    total: f64,
}

impl ContingencyTable {
    pub fn new(counts: Array2<f64>, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        let (p, q) = counts.dim();
        if p == 0 || q == 0 {
            return Err(Error::InvalidData("contingency table is empty".into()));
        }
        if row_labels.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: row_labels.len(),
            });
        }
        if col_labels.len() != q {
            return Err(Error::DimensionMismatch {
                expected: q,
                found: col_labels.len(),
            });
        }
        if let Some(bad) = counts.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidData(format!("invalid count {bad}")));
        }
        let row_sums = counts.sum_axis(Axis(1));
        let col_sums = counts.sum_axis(Axis(0));
        if let Some(i) = row_sums.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroMarginal(format!("row `{}` has no count", row_labels[i])));
        }
        if let Some(j) = col_sums.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroMarginal(format!("column `{}` has no count", col_labels[j])));
        }
        let total = row_sums.sum();
        Ok(Self {
            counts,
            row_labels,
            col_labels,
            row_sums,
            col_sums,
            total,
        })
    }

    /// Cross-tabulates two qualitative columns; rows missing either value are skipped.
    pub fn from_columns(a: &QualitativeColumn, b: &QualitativeColumn) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        let mut counts = Array2::zeros((a.level_count(), b.level_count()));
        for (x, y) in a.codes().iter().zip(b.codes()) {
            if let (Some(i), Some(j)) = (x, y) {
                counts[[*i, *j]] += 1.0;
            }
        }
        Self::new(counts, a.levels().to_vec(), b.levels().to_vec())
    }

    pub fn counts(&self) -> &Array2<f64> {
        &self.counts
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn row_sums(&self) -> &Array1<f64> {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &Array1<f64> {
        &self.col_sums
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Number of row modalities `p`.
    pub fn n_rows(&self) -> usize {
        self.counts.nrows()
    }

    /// Number of column modalities `q`.
    pub fn n_cols(&self) -> usize {
        self.counts.ncols()
    }

    /// `r(i)`: row `i` divided by its sum (p x q).
    pub fn row_profiles(&self) -> CorrectedMatrix {
        let values = &self.counts / &self.row_sums.view().insert_axis(Axis(1));
        CorrectedMatrix {
            values,
            kind: CorrectionKind::RowProfiles,
        }
    }

    /// `c(j)`: column `j` divided by its sum, stored as row `j` (q x p).
    pub fn col_profiles(&self) -> CorrectedMatrix {
        let values = (&self.counts / &self.col_sums.view().insert_axis(Axis(0))).t().to_owned();
        CorrectedMatrix {
            values,
            kind: CorrectionKind::ColProfiles,
        }
    }
}

/// Complete disjunctive (one-hot) coding of `K` qualitative variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DisjunctiveTable {
    entries: Array2<f64>,
    blocks: Vec<usize>,
    variables: Vec<String>,
    labels: Vec<String>,
    source_rows: Vec<usize>,
    col_sums: Array1<f64>,
}

impl DisjunctiveTable {
    /// Rows with a missing value in any variable are left out; their indices
    /// are available from [`Tables::excluded_rows`].
    pub fn from_columns(quals: &[QualitativeColumn]) -> Result<Self> {
        let first = quals
            .first()
            .ok_or_else(|| Error::InvalidData("no qualitative variable".into()))?;
        let n_all = first.len();
        if let Some(q) = quals.iter().find(|q| q.len() != n_all) {
            return Err(Error::DimensionMismatch {
                expected: n_all,
                found: q.len(),
            });
        }
        let source_rows: Vec<usize> = (0..n_all)
            .filter(|&i| quals.iter().all(|q| q.codes()[i].is_some()))
            .collect();
        if source_rows.is_empty() {
            return Err(Error::InvalidData("every individual has a missing qualitative value".into()));
        }
        let blocks: Vec<usize> = quals.iter().map(|q| q.level_count()).collect();
        let m: usize = blocks.iter().sum();
        let mut entries = Array2::zeros((source_rows.len(), m));
        for (r, &i) in source_rows.iter().enumerate() {
            let mut offset = 0;
            for q in quals {
                entries[[r, offset + q.codes()[i].expect("complete row")]] = 1.0;
                offset += q.level_count();
            }
        }
        let labels = modality_labels(quals);
        let col_sums = entries.sum_axis(Axis(0));
        if let Some(j) = col_sums.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroMarginal(format!("modality `{}` is chosen by no individual", labels[j])));
        }
        Ok(Self {
            entries,
            blocks,
            variables: quals.iter().map(|q| q.name().to_string()).collect(),
            labels,
            source_rows,
            col_sums,
        })
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Widths `m_1..m_K` of the variable blocks.
    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn modality_labels(&self) -> &[String] {
        &self.labels
    }

    /// Index in the original data of each individual kept.
    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }

    /// Modality counts `d_.j`.
    pub fn col_sums(&self) -> &Array1<f64> {
        &self.col_sums
    }

    pub fn variable_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn modality_count(&self) -> usize {
        self.entries.ncols()
    }

    pub fn individual_count(&self) -> usize {
        self.entries.nrows()
    }

    pub fn burt(&self) -> BurtTable {
        BurtTable {
            counts: self.entries.t().dot(&self.entries),
            blocks: self.blocks.clone(),
            labels: self.labels.clone(),
        }
    }
}

fn modality_labels(quals: &[QualitativeColumn]) -> Vec<String> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for q in quals {
        for l in q.levels() {
            *seen.entry(l.as_str()).or_default() += 1;
        }
    }
    quals
        .iter()
        .flat_map(|q| {
            let seen = &seen;
            q.levels().iter().map(move |l| {
                if seen[l.as_str()] > 1 {
                    format!("{}:{}", q.name(), l)
                } else {
                    l.clone()
                }
            })
        })
        .collect()
}

/// Symmetric table of all pairwise modality cross-counts, `B = D'D`.
#[derive(Debug, Clone, PartialEq)]
pub struct BurtTable {
    counts: Array2<f64>,
    blocks: Vec<usize>,
    labels: Vec<String>,
}

impl BurtTable {
    pub fn counts(&self) -> &Array2<f64> {
        &self.counts
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn modality_labels(&self) -> &[String] {
        &self.labels
    }

    pub fn modality_count(&self) -> usize {
        self.counts.nrows()
    }
}

/// Everything derived from a set of qualitative columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Tables {
    pub disjunctive: DisjunctiveTable,
    pub burt: BurtTable,
    /// Present when there are exactly two variables.
    pub contingency: Option<ContingencyTable>,
    excluded_rows: Vec<usize>,
}

impl Tables {
    /// Rows dropped because of a missing qualitative value.
    pub fn excluded_rows(&self) -> &[usize] {
        &self.excluded_rows
    }
}

pub fn build_tables(quals: &[QualitativeColumn]) -> Result<Tables> {
    let disjunctive = DisjunctiveTable::from_columns(quals)?;
    let burt = disjunctive.burt();
    let contingency = if quals.len() == 2 {
        let p = quals[0].level_count();
        let counts = burt.counts.slice(s![..p, p..]).to_owned();
        Some(ContingencyTable::new(
            counts,
            disjunctive.labels[..p].to_vec(),
            disjunctive.labels[p..].to_vec(),
        )?)
    } else {
        None
    };
    let kept: std::collections::HashSet<usize> = disjunctive.source_rows.iter().copied().collect();
    let excluded_rows = (0..quals[0].len()).filter(|i| !kept.contains(i)).collect();
    Ok(Tables {
        disjunctive,
        burt,
        contingency,
        excluded_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrectionKind {
    BurtChi2,
    DisjunctiveChi2,
    RowProfiles,
    ColProfiles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedMatrix {
    pub values: Array2<f64>,
    pub kind: CorrectionKind,
}

/// `n_ij / (sqrt(n_i.) sqrt(n_.j))` on the Burt table.
pub fn chi2_correct_burt(b: &BurtTable) -> Result<CorrectedMatrix> {
    let sums = b.counts.sum_axis(Axis(1));
    if let Some(j) = sums.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroMarginal(format!("modality `{}` has a zero margin", b.labels[j])));
    }
    let m = b.modality_count();
    let values = Array2::from_shape_fn((m, m), |(i, j)| b.counts[[i, j]] / (sums[i] * sums[j]).sqrt());
    Ok(CorrectedMatrix {
        values,
        kind: CorrectionKind::BurtChi2,
    })
}

/// `d_ij / sqrt(K d_.j)` on the disjunctive table (every row sums to `K`).
pub fn chi2_correct_disjunctive(d: &DisjunctiveTable) -> Result<CorrectedMatrix> {
    if let Some(j) = d.col_sums.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroMarginal(format!("modality `{}` is chosen by no individual", d.labels[j])));
    }
    let k = d.variable_count() as f64;
    let scale = d.col_sums.mapv(|c| 1.0 / (k * c).sqrt());
    Ok(CorrectedMatrix {
        values: &d.entries * &scale.view().insert_axis(Axis(0)),
        kind: CorrectionKind::DisjunctiveChi2,
    })
}

/// Map geometry, schedules and seed shared by the qualitative algorithms.
/// The number of steps is `gain.total_iterations()`.
#[derive(Debug, Clone, PartialEq)]
pub struct SomSettings {
    pub topology: MapTopology,
    pub gain: GainSchedule,
    pub radii: RadiusSchedule,
    pub seed: u64,
}

/// Which kind of entry an alternating step drew.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Half {
    /// A row modality (KORRESP) or an individual (KDISJ).
    Rows,
    /// A column modality (KORRESP) or a modality (KDISJ).
    Columns,
}

/// One alternating step, as reported to a training observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualStep {
    pub t: usize,
    pub half: Half,
    pub index: usize,
    pub winner: usize,
    pub eps: f64,
    pub radius: usize,
}

fn pull(mut code: ArrayViewMut1<f64>, x: ArrayView1<f64>, eps: f64) {
    for (c, &v) in code.iter_mut().zip(x) {
        *c = (1.0 - eps) * *c + eps * v;
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(book: &CodeBook, x: ArrayView1<f64>) -> usize {
    argmin_by(book.unit_count(), |u| sq_dist(x, book.code(u)))
}

fn nearest_all(book: &CodeBook, rows: &Array2<f64>) -> Result<Vec<usize>> {
    if rows.ncols() != book.dim() {
        return Err(Error::DimensionMismatch {
            expected: book.dim(),
            found: rows.ncols(),
        });
    }
    Ok(rows.rows().into_iter().map(|r| nearest(book, r)).collect())
}

/// Codes drawn uniformly in the per-component range of `ranges`.
fn box_codes(topo: &MapTopology, ranges: &[(f64, f64)], seed: u64) -> Result<CodeBook> {
    let mut rng = SeededRng::new(seed);
    let n = topo.unit_count();
    let mut codes = Array2::zeros((n, ranges.len()));
    for u in 0..n {
        for (j, &(lo, hi)) in ranges.iter().enumerate() {
            codes[[u, j]] = rng.uniform(lo, hi);
        }
    }
    CodeBook::new(*topo, codes)
}

fn column_ranges(m: &Array2<f64>) -> Vec<(f64, f64)> {
    m.columns()
        .into_iter()
        .map(|c| c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
        .collect()
}

fn first_argmax(v: ArrayView1<f64>) -> usize {
    v.iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x > v[best] { i } else { best })
}

/// KORRESP training data and weights derived from a contingency table.
#[derive(Debug, Clone, PartialEq)]
pub struct KorrespData {
    /// `(p + q) x (q + p)`: rows `(r(i), c(j(i)))` then `(r(i(j)), c(j))`.
    pub tcorr: Array2<f64>,
    /// `j(i)` for every row modality.
    pub best_col: Vec<usize>,
    /// `i(j)` for every column modality.
    pub best_row: Vec<usize>,
    /// Column marginal frequencies, weights of the first `q` components.
    pub col_freq: Array1<f64>,
    /// Row marginal frequencies, weights of the last `p` components.
    pub row_freq: Array1<f64>,
}

impl KorrespData {
    pub fn new(table: &ContingencyTable) -> Self {
        let (p, q) = (table.n_rows(), table.n_cols());
        let r = table.row_profiles().values;
        let c = table.col_profiles().values;
        let best_col: Vec<usize> = (0..p).map(|i| first_argmax(r.row(i))).collect();
        let best_row: Vec<usize> = (0..q).map(|j| first_argmax(c.row(j))).collect();
        let mut tcorr = Array2::zeros((p + q, q + p));
        for (i, &k) in best_col.iter().enumerate() {
            tcorr.slice_mut(s![i, ..q]).assign(&r.row(i));
            tcorr.slice_mut(s![i, q..]).assign(&c.row(k));
        }
        for (j, &k) in best_row.iter().enumerate() {
            tcorr.slice_mut(s![p + j, ..q]).assign(&r.row(k));
            tcorr.slice_mut(s![p + j, q..]).assign(&c.row(j));
        }
        Self {
            tcorr,
            best_col,
            best_row,
            col_freq: table.col_sums() / table.total(),
            row_freq: table.row_sums() / table.total(),
        }
    }

    pub fn p(&self) -> usize {
        self.row_freq.len()
    }

    pub fn q(&self) -> usize {
        self.col_freq.len()
    }

    /// Winner under the chi-square distance restricted to one half of the
    /// code: the first `q` components for [`Half::Rows`], the last `p` for
    /// [`Half::Columns`].
    pub fn winner(&self, book: &CodeBook, x: ArrayView1<f64>, half: Half) -> usize {
        let q = self.q();
        let (offset, weights) = match half {
            Half::Rows => (0, &self.col_freq),
            Half::Columns => (q, &self.row_freq),
        };
        argmin_by(book.unit_count(), |u| {
            let code = book.code(u);
            weights
                .iter()
                .enumerate()
                .map(|(l, w)| {
                    let d = x[offset + l] - code[offset + l];
                    d * d / w
                })
                .sum()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Korresp {
    pub codebook: CodeBook,
    pub data: KorrespData,
    /// Unit of each row modality.
    pub row_placement: Vec<usize>,
    /// Unit of each column modality.
    pub col_placement: Vec<usize>,
}

pub fn korresp_train(table: &ContingencyTable, settings: &SomSettings) -> Result<Korresp> {
    korresp_train_observed(table, settings, |_, _| {})
}

/// Steps alternate strictly, starting with a row modality. Each step draws
/// uniformly within its half, finds the winner on that half and moves the
/// whole code of the winner and its neighbors toward the drawn row.
pub fn korresp_train_observed<F>(table: &ContingencyTable, settings: &SomSettings, mut observe: F) -> Result<Korresp>
where
    F: FnMut(&QualStep, &CodeBook),
{
    let (p, q) = (table.n_rows(), table.n_cols());
    if p < 2 || q < 2 {
        return Err(Error::InvalidData(format!(
            "contingency table must be at least 2 x 2, got {p} x {q}"
        )));
    }
    let data = KorrespData::new(table);
    let mut book = box_codes(&settings.topology, &column_ranges(&data.tcorr), settings.seed)?;
    let mut hoods = Neighborhoods::new(settings.topology);
    let mut rng = SeededRng::new(derive_seed(settings.seed, 1));
    for t in 0..settings.gain.total_iterations() {
        let (half, index, row) = if t % 2 == 0 {
            let i = rng.index(p);
            (Half::Rows, i, i)
        } else {
            let j = rng.index(q);
            (Half::Columns, j, p + j)
        };
        let x = data.tcorr.row(row);
        let w = data.winner(&book, x, half);
        let eps = settings.gain.eps_at(t);
        let radius = settings.radii.radius_at(t);
        for &u in hoods.of(w, radius) {
            pull(book.code_mut(u), x, eps);
        }
        observe(
            &QualStep {
                t,
                half,
                index,
                winner: w,
                eps,
                radius,
            },
            &book,
        );
    }
    let row_placement = (0..p).map(|i| data.winner(&book, data.tcorr.row(i), Half::Rows)).collect();
    let col_placement = (0..q)
        .map(|j| data.winner(&book, data.tcorr.row(p + j), Half::Columns))
        .collect();
    Ok(Korresp {
        codebook: book,
        data,
        row_placement,
        col_placement,
    })
}

/// Plain SOM on the rows of `m`, initialized in their bounding box.
fn som_on_rows<F>(m: &Array2<f64>, settings: &SomSettings, observe: F) -> Result<CodeBook>
where
    F: FnMut(&StepRecord, &CodeBook),
{
    let data = DataMatrix::from_values(m.clone())?;
    let codes0 = init_random_box(&data, &settings.topology, settings.seed)?;
    som_train_observed(
        &data,
        &codes0,
        &settings.gain,
        &settings.radii,
        derive_seed(settings.seed, 1),
        MissingMode::UseDuringTraining,
        observe,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kacm {
    pub codebook: CodeBook,
    pub corrected: CorrectedMatrix,
    /// Unit of each modality.
    pub placement: Vec<usize>,
}

/// SOM on the chi-square corrected Burt table.
pub fn kacm_train(b: &BurtTable, settings: &SomSettings) -> Result<Kacm> {
    kacm_train_observed(b, settings, |_, _| {})
}

pub fn kacm_train_observed<F>(b: &BurtTable, settings: &SomSettings, observe: F) -> Result<Kacm>
where
    F: FnMut(&StepRecord, &CodeBook),
{
    let corrected = chi2_correct_burt(b)?;
    let codebook = som_on_rows(&corrected.values, settings, observe)?;
    let placement = nearest_all(&codebook, &corrected.values)?;
    Ok(Kacm {
        codebook,
        corrected,
        placement,
    })
}

/// Individuals as supplementary rows `d_ij / K`, each sent to its nearest code.
pub fn kacm2_classify_individuals(codes: &CodeBook, d: &DisjunctiveTable) -> Result<Vec<usize>> {
    let scaled = d.entries() / d.variable_count() as f64;
    nearest_all(codes, &scaled)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kacm1 {
    pub codebook: CodeBook,
    pub individual_placement: Vec<usize>,
    /// `n_jl / (d_.j sqrt(d_.l) sqrt(K))`, one row per modality.
    pub modality_vectors: Array2<f64>,
    pub modality_placement: Vec<usize>,
}

pub fn kacm1_modality_vectors(d: &DisjunctiveTable, b: &BurtTable) -> Result<Array2<f64>> {
    let m = d.modality_count();
    if b.modality_count() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: b.modality_count(),
        });
    }
    let k = d.variable_count() as f64;
    let dj = d.col_sums();
    if dj.iter().any(|&v| v <= 0.0) {
        return Err(Error::ZeroMarginal("a modality is chosen by no individual".into()));
    }
    Ok(Array2::from_shape_fn((m, m), |(j, l)| {
        b.counts()[[j, l]] / (dj[j] * dj[l].sqrt() * k.sqrt())
    }))
}

/// SOM on the corrected disjunctive table, then modalities as supplementary data.
pub fn kacm1_train(d: &DisjunctiveTable, b: &BurtTable, settings: &SomSettings) -> Result<Kacm1> {
    kacm1_train_observed(d, b, settings, |_, _| {})
}

pub fn kacm1_train_observed<F>(d: &DisjunctiveTable, b: &BurtTable, settings: &SomSettings, observe: F) -> Result<Kacm1>
where
    F: FnMut(&StepRecord, &CodeBook),
{
    let corrected = chi2_correct_disjunctive(d)?;
    let codebook = som_on_rows(&corrected.values, settings, observe)?;
    let individual_placement = assign_all(&codebook, &DataMatrix::from_values(corrected.values)?)?
        .class_of()
        .to_vec();
    let modality_vectors = kacm1_modality_vectors(d, b)?;
    let modality_placement = nearest_all(&codebook, &modality_vectors)?;
    Ok(Kacm1 {
        codebook,
        individual_placement,
        modality_vectors,
        modality_placement,
    })
}

/// Default KDISJ budget, `15 (M + N)` steps.
pub fn kdisj_default_iterations(d: &DisjunctiveTable) -> usize {
    15 * (d.modality_count() + d.individual_count())
}

/// `j(i)`: the column with the largest corrected entry in row `i`, i.e. the
/// rarest modality the individual chose. Ties go to the lowest column.
pub fn rarest_modality(corrected_row: ArrayView1<f64>) -> usize {
    first_argmax(corrected_row)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kdisj {
    /// Codes of dimension `M + N`: individual space first, modality space last.
    pub codebook: CodeBook,
    pub corrected: CorrectedMatrix,
    pub individual_placement: Vec<usize>,
    pub modality_placement: Vec<usize>,
}

pub fn kdisj_train(d: &DisjunctiveTable, settings: &SomSettings) -> Result<Kdisj> {
    kdisj_train_observed(d, settings, |_, _| {})
}

/// Alternates an individual step (winner on the first `M` components, all
/// components updated) and a modality step (winner on the last `N`
/// components, only those updated), starting with an individual.
pub fn kdisj_train_observed<F>(d: &DisjunctiveTable, settings: &SomSettings, mut observe: F) -> Result<Kdisj>
where
    F: FnMut(&QualStep, &CodeBook),
{
    let corrected = chi2_correct_disjunctive(d)?;
    let dc = &corrected.values;
    let (n, m) = dc.dim();
    let mut ranges = column_ranges(dc);
    ranges.extend(column_ranges(&dc.t().to_owned()));
    let mut book = box_codes(&settings.topology, &ranges, settings.seed)?;
    let rarest: Vec<usize> = dc.rows().into_iter().map(rarest_modality).collect();
    let mut hoods = Neighborhoods::new(settings.topology);
    let mut rng = SeededRng::new(derive_seed(settings.seed, 1));
    let mut extended = Array1::zeros(m + n);
    for t in 0..settings.gain.total_iterations() {
        let eps = settings.gain.eps_at(t);
        let radius = settings.radii.radius_at(t);
        let (half, index, w) = if t % 2 == 0 {
            let i = rng.index(n);
            extended.slice_mut(s![..m]).assign(&dc.row(i));
            extended.slice_mut(s![m..]).assign(&dc.column(rarest[i]));
            let w = argmin_by(book.unit_count(), |u| sq_dist(extended.slice(s![..m]), book.code(u).slice(s![..m])));
            for &u in hoods.of(w, radius) {
                pull(book.code_mut(u), extended.view(), eps);
            }
            (Half::Rows, i, w)
        } else {
            let j = rng.index(m);
            let y = dc.column(j);
            let w = argmin_by(book.unit_count(), |u| sq_dist(y, book.code(u).slice(s![m..])));
            for &u in hoods.of(w, radius) {
                pull(book.code_mut(u).slice_mut(s![m..]), y, eps);
            }
            (Half::Columns, j, w)
        };
        observe(
            &QualStep {
                t,
                half,
                index,
                winner: w,
                eps,
                radius,
            },
            &book,
        );
    }
    let individual_placement = (0..n)
        .map(|i| argmin_by(book.unit_count(), |u| sq_dist(dc.row(i), book.code(u).slice(s![..m]))))
        .collect();
    let modality_placement = (0..m)
        .map(|j| argmin_by(book.unit_count(), |u| sq_dist(dc.column(j), book.code(u).slice(s![m..]))))
        .collect();
    Ok(Kdisj {
        codebook: book,
        corrected,
        individual_placement,
        modality_placement,
    })
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn toy() -> Vec<QualitativeColumn> {
        vec![
            QualitativeColumn::from_values("A", &[Some("A1"), Some("A2")]).unwrap(),
            QualitativeColumn::from_values("B", &[Some("B1"), Some("B2")]).unwrap(),
        ]
    }

    const MONUMENTS: [[f64; 6]; 11] = [
        [244.0, 790.0, 115.0, 9.0, 12.0, 144.0],
        [246.0, 166.0, 46.0, 23.0, 11.0, 31.0],
        [289.0, 964.0, 82.0, 58.0, 40.0, 2.0],
        [351.0, 76.0, 59.0, 7.0, 2.0, 0.0],
        [0.0, 0.0, 87.0, 0.0, 0.0, 0.0],
        [4298.0, 74.0, 16.0, 5.0, 4.0, 2.0],
        [481.0, 119.0, 13.0, 7.0, 8.0, 4.0],
        [243.0, 233.0, 44.0, 37.0, 18.0, 0.0],
        [339.0, 47.0, 92.0, 19.0, 41.0, 2.0],
        [224.0, 909.0, 46.0, 7.0, 18.0, 4.0],
        [967.0, 242.0, 109.0, 40.0, 10.0, 9.0],
    ];

    fn monuments() -> ContingencyTable {
        let rows = ["preh", "hist", "chat", "mili", "cath", "egli", "chap", "mona", "ecpu", "ecpr", "dive"];
        let cols = ["COMM", "PRIV", "ETAT", "DEPA", "ETPU", "NDET"];
        let counts = Array2::from_shape_fn((11, 6), |(i, j)| MONUMENTS[i][j]);
        ContingencyTable::new(
            counts,
            rows.iter().map(|s| s.to_string()).collect(),
            cols.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    fn settings(topo: MapTopology, total: usize, seed: u64) -> SomSettings {
        SomSettings {
            topology: topo,
            gain: GainSchedule::harmonic(0.5, 0.01, total).unwrap(),
            radii: RadiusSchedule::evenly_spaced(&[1, 0], total).unwrap(),
            seed,
        }
    }

    #[test]
    fn toy_burt_table_by_hand() {
        let t = build_tables(&toy()).unwrap();
        assert_eq!(
            t.burt.counts(),
            &array![[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0], [1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]]
        );
        let c = chi2_correct_burt(&t.burt).unwrap();
        assert_eq!(c.values[[0, 2]], 0.5);
        // diagonal: count c over row sum s
        assert_eq!(c.values[[0, 0]], 0.5);
        assert_eq!(t.contingency.unwrap().counts(), &array![[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn single_individual_disjunctive_row() {
        let quals = vec![
            QualitativeColumn::new("x", vec!["a".into(), "b".into()], vec![Some(1)]).unwrap(),
            QualitativeColumn::new("y", vec!["c".into(), "d".into(), "e".into()], vec![Some(0)]).unwrap(),
        ];
        // unchosen modalities make the table unusable
        assert!(matches!(build_tables(&quals), Err(Error::ZeroMarginal(_))));
        let d = Array2::from_shape_vec((1, 2), vec![1.0, 1.0]).unwrap();
        let quals = vec![
            QualitativeColumn::new("x", vec!["a".into(), "b".into()], vec![Some(1), Some(0)]).unwrap(),
            QualitativeColumn::new("y", vec!["c".into(), "d".into()], vec![Some(0), Some(1)]).unwrap(),
        ];
        let t = build_tables(&quals).unwrap();
        assert_eq!(t.disjunctive.entries().row(0).sum(), 2.0);
        assert_eq!(t.disjunctive.entries().slice(s![0..1, 1..3]), d);
    }

    #[test]
    fn missing_qualitative_rows_are_excluded() {
        let quals = vec![
            QualitativeColumn::from_values("A", &[Some("x"), None, Some("y"), Some("x")]).unwrap(),
            QualitativeColumn::from_values("B", &[Some("u"), Some("v"), Some("v"), Some("u")]).unwrap(),
        ];
        let t = build_tables(&quals).unwrap();
        assert_eq!(t.excluded_rows(), &[1]);
        assert_eq!(t.disjunctive.source_rows(), &[0, 2, 3]);
        assert_eq!(t.disjunctive.individual_count(), 3);
    }

    #[test]
    fn duplicate_level_names_are_qualified() {
        let quals = vec![
            QualitativeColumn::from_values("sat", &[Some("yes"), Some("no")]).unwrap(),
            QualitativeColumn::from_values("sun", &[Some("no"), Some("yes")]).unwrap(),
        ];
        let t = build_tables(&quals).unwrap();
        assert_eq!(t.disjunctive.modality_labels(), &["sat:yes", "sat:no", "sun:no", "sun:yes"]);
    }

    #[test]
    fn disjunctive_correction_values() {
        let t = build_tables(&toy()).unwrap();
        let c = chi2_correct_disjunctive(&t.disjunctive).unwrap();
        assert!((c.values[[0, 0]] - 0.70711).abs() < 1e-5);
        assert_eq!(c.values[[0, 1]], 0.0);

        let quals = vec![
            QualitativeColumn::new("x", vec!["a".into(), "b".into()], vec![Some(0), Some(0), Some(1)]).unwrap(),
            QualitativeColumn::new("y", vec!["c".into(), "d".into()], vec![Some(0), Some(0), Some(1)]).unwrap(),
            QualitativeColumn::new("z", vec!["e".into(), "f".into()], vec![Some(0), Some(1), Some(0)]).unwrap(),
        ];
        let t = build_tables(&quals).unwrap();
        assert!(t.contingency.is_none());
        let c = chi2_correct_disjunctive(&t.disjunctive).unwrap();
        // modality `e` chosen by 2 of 3 individuals, K = 3
        assert!((c.values[[0, 4]] - 1.0 / 6.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn monuments_profiles() {
        let t = monuments();
        assert_eq!(t.col_sums()[2], 709.0);
        let r = t.row_profiles().values;
        assert_eq!(r.row(4).to_vec(), vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let c = t.col_profiles().values;
        assert_eq!(c[[2, 4]], 87.0 / 709.0);
        let k = KorrespData::new(&t);
        assert_eq!(k.best_col[4], 2);
        assert_eq!(k.best_col[5], 0);
        // preh holds the largest ETAT count
        assert_eq!(k.best_row[2], 0);
        assert_eq!(k.tcorr.dim(), (17, 17));
    }

    #[test]
    fn kacm1_modality_vector_by_formula() {
        let t = build_tables(&toy()).unwrap();
        let v = kacm1_modality_vectors(&t.disjunctive, &t.burt).unwrap();
        assert!((v[[0, 0]] - 0.70711).abs() < 1e-5);
        assert!((v[[0, 2]] - 0.70711).abs() < 1e-5);
        assert_eq!(v[[0, 1]], 0.0);
    }

    #[test]
    fn kacm2_scales_rows_by_k() {
        let t = build_tables(&toy()).unwrap();
        let codes = array![[0.5, 0.0, 0.5, 0.0], [0.0, 0.5, 0.0, 0.5]];
        let book = CodeBook::new(MapTopology::string(2).unwrap(), codes).unwrap();
        assert_eq!(kacm2_classify_individuals(&book, &t.disjunctive).unwrap(), vec![0, 1]);
        let bad = CodeBook::new(MapTopology::string(1).unwrap(), array![[0.0, 0.0]]).unwrap();
        assert!(kacm2_classify_individuals(&bad, &t.disjunctive).is_err());
    }

    #[test]
    fn rarest_modality_is_chosen() {
        // modality counts 5 and 2, K = 2
        let row = array![1.0 / (2.0f64 * 5.0).sqrt(), 1.0 / (2.0f64 * 2.0).sqrt()];
        assert_eq!(rarest_modality(row.view()), 1);
        assert_eq!(rarest_modality(array![0.5, 0.5].view()), 0);
    }

    #[test]
    fn kacm_zero_gain_places_by_initial_codes() {
        let t = build_tables(&toy()).unwrap();
        let s = SomSettings {
            topology: MapTopology::grid(2, 2).unwrap(),
            gain: GainSchedule::constant(0.0, 1).unwrap(),
            radii: RadiusSchedule::constant(1),
            seed: 4,
        };
        let out = kacm_train(&t.burt, &s).unwrap();
        let corrected = chi2_correct_burt(&t.burt).unwrap();
        let init = init_random_box(&DataMatrix::from_values(corrected.values.clone()).unwrap(), &s.topology, 4).unwrap();
        assert_eq!(out.codebook, init);
        assert_eq!(out.placement, nearest_all(&init, &corrected.values).unwrap());
        assert_eq!(kacm_train(&t.burt, &s).unwrap(), out);
    }

    #[test]
    fn korresp_winner_ignores_other_half() {
        let t = monuments();
        let data = KorrespData::new(&t);
        let s = settings(MapTopology::grid(3, 3).unwrap(), 60, 2);
        let out = korresp_train(&t, &s).unwrap();
        let mut permuted = out.codebook.codes().clone();
        let q = data.q();
        // reverse the last p components of every code
        for mut row in permuted.rows_mut() {
            row.slice_mut(s![q..]).invert_axis(Axis(0));
        }
        let pbook = CodeBook::new(s.topology, permuted).unwrap();
        for i in 0..data.p() {
            let x = data.tcorr.row(i);
            assert_eq!(data.winner(&out.codebook, x, Half::Rows), data.winner(&pbook, x, Half::Rows));
        }
    }

    #[test]
    fn korresp_alternates_and_is_deterministic() {
        let t = monuments();
        let s = settings(MapTopology::grid(3, 3).unwrap(), 40, 9);
        let mut halves = Vec::new();
        let a = korresp_train_observed(&t, &s, |step, _| halves.push(step.half)).unwrap();
        assert!(halves.iter().enumerate().all(|(t, h)| *h == if t % 2 == 0 { Half::Rows } else { Half::Columns }));
        assert_eq!(korresp_train(&t, &s).unwrap(), a);
        let small = ContingencyTable::new(array![[1.0, 2.0]], vec!["a".into()], vec!["x".into(), "y".into()]).unwrap();
        assert!(korresp_train(&small, &s).is_err());
    }

    #[test]
    fn zero_marginal_is_rejected() {
        let err = ContingencyTable::new(array![[1.0, 0.0], [2.0, 0.0]], vec!["a".into(), "b".into()], vec!["x".into(), "y".into()]);
        assert!(matches!(err, Err(Error::ZeroMarginal(_))));
    }

    #[test]
    fn kdisj_modality_step_freezes_individual_space() {
        let t = build_tables(&toy()).unwrap();
        let d = &t.disjunctive;
        let s = settings(MapTopology::grid(2, 2).unwrap(), kdisj_default_iterations(d), 3);
        let m = d.modality_count();
        let mut previous: Option<Array2<f64>> = None;
        let out = kdisj_train_observed(d, &s, |step, book| {
            if let (Half::Columns, Some(prev)) = (step.half, &previous) {
                assert_eq!(book.codes().slice(s![.., ..m]), prev.slice(s![.., ..m]));
            }
            previous = Some(book.codes().clone());
        })
        .unwrap();
        assert_eq!(out.codebook.dim(), m + d.individual_count());
        assert_eq!(kdisj_train(d, &s).unwrap(), out);
    }

    #[test]
    fn kdisj_identical_columns_share_placement() {
        let quals = vec![
            QualitativeColumn::from_values("A", &[Some("a"), Some("b"), Some("a"), Some("b"), Some("a")]).unwrap(),
            QualitativeColumn::from_values("B", &[Some("c"), Some("d"), Some("c"), Some("d"), Some("c")]).unwrap(),
        ];
        let t = build_tables(&quals).unwrap();
        let s = settings(MapTopology::grid(2, 2).unwrap(), 100, 1);
        let out = kdisj_train(&t.disjunctive, &s).unwrap();
        assert_eq!(out.modality_placement[0], out.modality_placement[2]);
        assert_eq!(out.modality_placement[1], out.modality_placement[3]);
    }

    #[test]
    fn kacm1_individuals_match_plain_som() {
        let quals = vec![
            QualitativeColumn::from_values("A", &[Some("a"), Some("b"), Some("c"), Some("a"), Some("b")]).unwrap(),
            QualitativeColumn::from_values("B", &[Some("x"), Some("y"), Some("x"), Some("y"), Some("x")]).unwrap(),
        ];
        let t = build_tables(&quals).unwrap();
        let s = settings(MapTopology::grid(2, 2).unwrap(), 50, 8);
        let out = kacm1_train(&t.disjunctive, &t.burt, &s).unwrap();
        let dc = DataMatrix::from_values(chi2_correct_disjunctive(&t.disjunctive).unwrap().values).unwrap();
        let codes0 = init_random_box(&dc, &s.topology, s.seed).unwrap();
        let book = crate::quantize::som_train(&dc, &codes0, &s.gain, &s.radii, derive_seed(s.seed, 1), MissingMode::UseDuringTraining).unwrap();
        assert_eq!(out.codebook, book);
        assert_eq!(out.individual_placement, assign_all(&book, &dc).unwrap().class_of().to_vec());
        assert_eq!(out.modality_placement.len(), 5);
    }

    fn random_columns() -> impl Strategy<Value = Vec<QualitativeColumn>> {
        (1usize..4, 2usize..30).prop_flat_map(|(k, n)| {
            proptest::collection::vec(proptest::collection::vec(0usize..3, n), k).prop_map(|cols| {
                cols.into_iter()
                    .enumerate()
                    .map(|(v, codes)| {
                        // relabel to the levels actually used so no modality is empty
                        let mut used: Vec<usize> = codes.clone();
                        used.sort_unstable();
                        used.dedup();
                        let mut codes: Vec<Option<usize>> = codes
                            .iter()
                            .map(|c| Some(used.iter().position(|u| u == c).unwrap()))
                            .collect();
                        let mut levels: Vec<String> = (0..used.len()).map(|l| format!("v{v}l{l}")).collect();
                        if levels.len() < 2 {
                            levels.push(format!("v{v}l1"));
                            codes[0] = Some(1);
                        }
                        QualitativeColumn::new(format!("v{v}"), levels, codes).unwrap()
                    })
                    .collect()
            })
        })
    }

    proptest! {
        #[test]
        fn table_algebra(quals in random_columns()) {
            let t = build_tables(&quals).unwrap();
            let d = t.disjunctive.entries();
            // naive D'D oracle
            let m = d.ncols();
            for i in 0..m {
                for j in 0..m {
                    let mut acc = 0.0;
                    for r in 0..d.nrows() {
                        acc += d[[r, i]] * d[[r, j]];
                    }
                    prop_assert_eq!(t.burt.counts()[[i, j]], acc);
                }
            }
            for row in d.rows() {
                prop_assert_eq!(row.sum(), quals.len() as f64);
            }
            let c = chi2_correct_burt(&t.burt).unwrap().values;
            prop_assert_eq!(&c, &c.t().to_owned());
            prop_assert!(c.iter().all(|v| v.is_finite() && *v >= 0.0));
            if let Some(ct) = &t.contingency {
                for r in ct.row_profiles().values.rows() {
                    prop_assert!((r.sum() - 1.0).abs() <= 1e-12);
                }
                for r in ct.col_profiles().values.rows() {
                    prop_assert!((r.sum() - 1.0).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn diagonal_blocks_hold_counts(quals in random_columns()) {
            let t = build_tables(&quals).unwrap();
            let mut offset = 0;
            for q in &quals {
                let w = q.level_count();
                for a in 0..w {
                    for b in 0..w {
                        let v = t.burt.counts()[[offset + a, offset + b]];
                        if a == b {
                            let count = q.codes().iter().filter(|c| **c == Some(a)).count() as f64;
                            prop_assert_eq!(v, count);
                        } else {
                            prop_assert_eq!(v, 0.0);
                        }
                    }
                }
                offset += w;
            }
        }
    }
}
