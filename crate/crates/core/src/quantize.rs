//! Vector quantization on quantitative data: Forgy, simple competitive
//! learning (SCL), the Kohonen SOM and its batch form KBATCH.
//!
//! Winner search uses squared Euclidean distance restricted to the present
//! components of an observation; ties go to the lowest unit index. Online
//! updates move a code by `c <- (1 - eps) c + eps x` on present components,
//! which is exact at `eps = 0` and `eps = 1`.

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayViewMut1};

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};
use crate::metrics;
use crate::rng::SeededRng;
use crate::topology::{MapTopology, RadiusSchedule};

/// Code vectors attached to the units of a map.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeBook {
    topo: MapTopology,
    codes: Array2<f64>,
}

impl CodeBook {
    pub fn new(topo: MapTopology, codes: Array2<f64>) -> Result<Self> {
        if codes.nrows() != topo.unit_count() {
            return Err(Error::DimensionMismatch {
                expected: topo.unit_count(),
                found: codes.nrows(),
            });
        }
        if codes.ncols() == 0 {
            return Err(Error::InvalidData("code vectors have dimension 0".into()));
        }
        if codes.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("code vectors must be finite".into()));
        }
        Ok(Self { topo, codes })
    }

    pub fn topology(&self) -> &MapTopology {
        &self.topo
    }

    pub fn codes(&self) -> &Array2<f64> {
        &self.codes
    }

    pub fn code(&self, unit: usize) -> ArrayView1<'_, f64> {
        self.codes.row(unit)
    }

    pub fn unit_count(&self) -> usize {
        self.codes.nrows()
    }

    pub fn dim(&self) -> usize {
        self.codes.ncols()
    }

    pub fn into_codes(self) -> Array2<f64> {
        self.codes
    }

    pub(crate) fn code_mut(&mut self, unit: usize) -> ArrayViewMut1<'_, f64> {
        self.codes.row_mut(unit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainKind {
    Constant,
    Linear,
    Harmonic,
}

impl GainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GainKind::Constant => "constant",
            GainKind::Linear => "linear",
            GainKind::Harmonic => "harmonic",
        }
    }
}

impl fmt::Display for GainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(GainKind::Constant),
            "linear" => Ok(GainKind::Linear),
            "harmonic" => Ok(GainKind::Harmonic),
            other => Err(Error::InvalidSchedule(format!("unknown gain kind `{other}`"))),
        }
    }
}

/// Adaptation gain `eps(t)` over `total` iterations.
///
/// * constant: `eps0`
/// * linear: `eps0 + (eps_final - eps0) t / T`
/// * harmonic: `eps0 / (1 + t (eps0 / eps_final - 1) / T)`; the `1/t`-type
///   decay is the shape that satisfies the Robbins-Monro conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSchedule {
    kind: GainKind,
    eps0: f64,
    eps_final: f64,
    total: usize,
}

impl GainSchedule {
    pub fn new(kind: GainKind, eps0: f64, eps_final: f64, total: usize) -> Result<Self> {
        if total == 0 {
            return Err(Error::InvalidSchedule("iteration count must be positive".into()));
        }
        if !(0.0..=1.0).contains(&eps0) {
            return Err(Error::InvalidSchedule(format!("eps0 = {eps0} outside [0, 1]")));
        }
        if kind != GainKind::Constant && !(0.0..=eps0).contains(&eps_final) {
            return Err(Error::InvalidSchedule(format!(
                "eps_final = {eps_final} outside [0, eps0]"
            )));
        }
        if kind == GainKind::Harmonic && (eps_final <= 0.0 || eps0 <= 0.0) {
            return Err(Error::InvalidSchedule(
                "harmonic gain needs eps0 > 0 and eps_final > 0".into(),
            ));
        }
        Ok(Self {
            kind,
            eps0,
            eps_final,
            total,
        })
    }

    pub fn constant(eps: f64, total: usize) -> Result<Self> {
        Self::new(GainKind::Constant, eps, eps, total)
    }

    pub fn linear(eps0: f64, eps_final: f64, total: usize) -> Result<Self> {
        Self::new(GainKind::Linear, eps0, eps_final, total)
    }

    pub fn harmonic(eps0: f64, eps_final: f64, total: usize) -> Result<Self> {
        Self::new(GainKind::Harmonic, eps0, eps_final, total)
    }

    pub fn kind(&self) -> GainKind {
        self.kind
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn eps_final(&self) -> f64 {
        self.eps_final
    }

    pub fn total_iterations(&self) -> usize {
        self.total
    }

    pub fn eps_at(&self, t: usize) -> f64 {
        let frac = t as f64 / self.total as f64;
        match self.kind {
            GainKind::Constant => self.eps0,
            GainKind::Linear => self.eps0 + (self.eps_final - self.eps0) * frac,
            GainKind::Harmonic => self.eps0 / (1.0 + frac * (self.eps0 / self.eps_final - 1.0)),
        }
    }
}

/// Nearest-code classes of a set of rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    class_of: Vec<usize>,
    counts: Vec<usize>,
}

impl Assignment {
    pub fn from_classes(class_of: Vec<usize>, n_units: usize) -> Result<Self> {
        let mut counts = vec![0; n_units];
        for &c in &class_of {
            if c >= n_units {
                return Err(Error::UnitOutOfRange {
                    index: c,
                    len: n_units,
                });
            }
            counts[c] += 1;
        }
        Ok(Self { class_of, counts })
    }

    pub fn class_of(&self) -> &[usize] {
        &self.class_of
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn unit_count(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn members(&self, unit: usize) -> Vec<usize> {
        (0..self.class_of.len())
            .filter(|&i| self.class_of[i] == unit)
            .collect()
    }
}

pub(crate) fn argmin_by(n: usize, mut dist: impl FnMut(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_d = dist(0);
    for i in 1..n {
        let d = dist(i);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn restricted_sq_dist(x: ArrayView1<f64>, missing: ArrayView1<bool>, code: ArrayView1<f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..x.len() {
        if !missing[j] {
            let d = x[j] - code[j];
            acc += d * d;
        }
    }
    acc
}

fn winner_unchecked(book: &CodeBook, x: ArrayView1<f64>, missing: ArrayView1<bool>) -> usize {
    argmin_by(book.unit_count(), |u| restricted_sq_dist(x, missing, book.code(u)))
}

/// Index of the code nearest to `x`, measured on present components only.
/// With no mask every component counts as present.
pub fn winner(book: &CodeBook, x: ArrayView1<f64>, missing: Option<ArrayView1<bool>>) -> Result<usize> {
    if x.len() != book.dim() {
        return Err(Error::DimensionMismatch {
            expected: book.dim(),
            found: x.len(),
        });
    }
    let none = ndarray::Array1::from_elem(x.len(), false);
    let missing = missing.unwrap_or_else(|| none.view());
    if missing.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: missing.len(),
        });
    }
    if missing.iter().all(|&m| m) {
        return Err(Error::EmptyObservation);
    }
    Ok(winner_unchecked(book, x, missing))
}

fn check_dims(book: &CodeBook, data: &DataMatrix) -> Result<()> {
    if book.dim() != data.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: book.dim(),
            found: data.n_cols(),
        });
    }
    Ok(())
}

/// Classifies every row by its winning unit.
pub fn assign_all(book: &CodeBook, data: &DataMatrix) -> Result<Assignment> {
    check_dims(book, data)?;
    let class_of = (0..data.n_rows())
        .map(|i| winner_unchecked(book, data.row(i), data.row_mask(i)))
        .collect();
    Assignment::from_classes(class_of, book.unit_count())
}

fn pull_toward(mut code: ArrayViewMut1<f64>, x: ArrayView1<f64>, missing: ArrayView1<bool>, eps: f64) {
    for j in 0..code.len() {
        if !missing[j] {
            code[j] = (1.0 - eps) * code[j] + eps * x[j];
        }
    }
}

/// One online step, as reported to a training observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub row: usize,
    pub winner: usize,
    pub eps: f64,
    pub radius: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingMode {
    /// Incomplete rows are drawn like the others; updates touch present components only.
    UseDuringTraining,
    /// Only complete rows are drawn; incomplete rows are classified afterwards.
    Exclude,
}

impl MissingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MissingMode::UseDuringTraining => "use",
            MissingMode::Exclude => "exclude",
        }
    }
}

impl FromStr for MissingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "use" => Ok(MissingMode::UseDuringTraining),
            "exclude" => Ok(MissingMode::Exclude),
            other => Err(Error::InvalidParameter(format!("unknown missing mode `{other}`"))),
        }
    }
}

pub fn scl_train(data: &DataMatrix, codes0: &CodeBook, gain: &GainSchedule, seed: u64) -> Result<CodeBook> {
    scl_train_observed(data, codes0, gain, seed, |_, _| {})
}

/// Simple competitive learning: only the winner moves.
pub fn scl_train_observed<F>(
    data: &DataMatrix,
    codes0: &CodeBook,
    gain: &GainSchedule,
    seed: u64,
    mut observe: F,
) -> Result<CodeBook>
where
    F: FnMut(&StepRecord, &CodeBook),
{
    check_dims(codes0, data)?;
    let mut book = codes0.clone();
    let mut rng = SeededRng::new(seed);
    let n_rows = data.n_rows();
    for t in 0..gain.total_iterations() {
        let row = rng.index(n_rows);
        let (x, missing) = (data.row(row), data.row_mask(row));
        let w = winner_unchecked(&book, x, missing);
        let eps = gain.eps_at(t);
        pull_toward(book.code_mut(w), x, missing, eps);
        observe(
            &StepRecord {
                t,
                row,
                winner: w,
                eps,
                radius: 0,
            },
            &book,
        );
    }
    Ok(book)
}

pub fn som_train(
    data: &DataMatrix,
    codes0: &CodeBook,
    gain: &GainSchedule,
    radii: &RadiusSchedule,
    seed: u64,
    missing_mode: MissingMode,
) -> Result<CodeBook> {
    som_train_observed(data, codes0, gain, radii, seed, missing_mode, |_, _| {})
}

/// Kohonen SOM: the winner and every unit of `V_r(t)(winner)` move toward the
/// drawn row with the same step `eps(t)`.
pub fn som_train_observed<F>(
    data: &DataMatrix,
    codes0: &CodeBook,
    gain: &GainSchedule,
    radii: &RadiusSchedule,
    seed: u64,
    missing_mode: MissingMode,
    mut observe: F,
) -> Result<CodeBook>
where
    F: FnMut(&StepRecord, &CodeBook),
{
    check_dims(codes0, data)?;
    let candidates: Vec<usize> = match missing_mode {
        MissingMode::UseDuringTraining => (0..data.n_rows()).collect(),
        MissingMode::Exclude => data.complete_rows(),
    };
    if candidates.is_empty() {
        return Err(Error::InsufficientRows {
            needed: 1,
            available: 0,
        });
    }
    let mut book = codes0.clone();
    let topo = *book.topology();
    let mut hoods = Neighborhoods::new(topo);
    let mut rng = SeededRng::new(seed);
    for t in 0..gain.total_iterations() {
        let row = candidates[rng.index(candidates.len())];
        let (x, missing) = (data.row(row), data.row_mask(row));
        let w = winner_unchecked(&book, x, missing);
        let eps = gain.eps_at(t);
        let radius = radii.radius_at(t);
        for &u in hoods.of(w, radius) {
            pull_toward(book.code_mut(u), x, missing, eps);
        }
        observe(
            &StepRecord {
                t,
                row,
                winner: w,
                eps,
                radius,
            },
            &book,
        );
    }
    Ok(book)
}

/// Per-radius cache of every unit's neighborhood.
pub(crate) struct Neighborhoods {
    topo: MapTopology,
    radius: Option<usize>,
    lists: Vec<Vec<usize>>,
}

impl Neighborhoods {
    pub(crate) fn new(topo: MapTopology) -> Self {
        Self {
            topo,
            radius: None,
            lists: Vec::new(),
        }
    }

    pub(crate) fn of(&mut self, unit: usize, radius: usize) -> &[usize] {
        if self.radius != Some(radius) {
            self.lists = (0..self.topo.unit_count())
                .map(|u| self.topo.neighborhood(u, radius).expect("unit in range"))
                .collect();
            self.radius = Some(radius);
        }
        &self.lists[unit]
    }
}

/// State after one sweep of a batch algorithm. Entry 0 of a trace is the
/// initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSweep {
    pub codes: Array2<f64>,
    pub assignment: Assignment,
    pub radius: usize,
    pub ss_intra: f64,
    pub extended_distortion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    Cycle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRun {
    pub codebook: CodeBook,
    pub assignment: Assignment,
    pub iterations: usize,
    pub stop: StopReason,
    pub trace: Vec<BatchSweep>,
    pub warnings: Vec<String>,
}

impl BatchRun {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }
}

fn sweep(data: &DataMatrix, book: &CodeBook, assignment: Assignment, radius: usize) -> BatchSweep {
    BatchSweep {
        ss_intra: metrics::ss_intra(data, &assignment).expect("complete data"),
        extended_distortion: metrics::extended_distortion_with(data, book, &assignment, radius)
            .expect("complete data"),
        codes: book.codes().clone(),
        assignment,
        radius,
    }
}

fn class_sums(data: &DataMatrix, assignment: &Assignment, n_units: usize) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((n_units, data.n_cols()));
    for (i, &c) in assignment.class_of().iter().enumerate() {
        let mut acc = sums.row_mut(c);
        acc += &data.row(i);
    }
    sums
}

fn batch_preconditions(data: &DataMatrix, codes0: &CodeBook, algorithm: &'static str) -> Result<Vec<String>> {
    check_dims(codes0, data)?;
    if data.has_missing() {
        return Err(Error::MissingDataUnsupported { algorithm });
    }
    let mut warnings = Vec::new();
    if codes0.unit_count() > data.n_rows() {
        warnings.push(format!(
            "{} units for {} observations: some classes are necessarily empty",
            codes0.unit_count(),
            data.n_rows()
        ));
    }
    Ok(warnings)
}

/// Forgy (moving centers): alternate nearest-code classification and
/// centroid recomputation until the classes stop changing. Empty classes
/// keep their previous code.
pub fn forgy(data: &DataMatrix, codes0: &CodeBook, max_iters: usize) -> Result<BatchRun> {
    let warnings = batch_preconditions(data, codes0, "forgy")?;
    let n = codes0.unit_count();
    let mut book = codes0.clone();
    let mut assignment = assign_all(&book, data)?;
    let mut trace = vec![sweep(data, &book, assignment.clone(), 0)];
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    for k in 1..=max_iters {
        let sums = class_sums(data, &assignment, n);
        for u in 0..n {
            let count = assignment.counts()[u];
            if count > 0 {
                let centroid = sums.row(u).mapv(|s| s / count as f64);
                book.code_mut(u).assign(&centroid);
            }
        }
        let next = assign_all(&book, data)?;
        iterations = k;
        trace.push(sweep(data, &book, next.clone(), 0));
        let unchanged = next == assignment;
        assignment = next;
        if unchanged {
            stop = StopReason::Converged;
            break;
        }
    }
    Ok(BatchRun {
        codebook: book,
        assignment,
        iterations,
        stop,
        trace,
        warnings,
    })
}

const CYCLE_WINDOW: usize = 50;

fn assignment_hash(radius: usize, a: &Assignment) -> u64 {
    let mut h = DefaultHasher::new();
    radius.hash(&mut h);
    a.class_of().hash(&mut h);
    h.finish()
}

/// Batch Kohonen: each code becomes the centroid of the union of its own
/// class and the classes of its lattice neighbors at the current radius.
///
/// Stops when the classes are unchanged and the radius schedule has reached
/// its last value, when an earlier classification at the same radius
/// reappears within the last 50 sweeps, or after `max_iters` sweeps. The
/// schedule is indexed by sweep number. A code whose neighborhood union is
/// empty is left unchanged.
pub fn kbatch_train(
    data: &DataMatrix,
    codes0: &CodeBook,
    radii: &RadiusSchedule,
    max_iters: usize,
) -> Result<BatchRun> {
    let warnings = batch_preconditions(data, codes0, "kbatch")?;
    let n = codes0.unit_count();
    let mut book = codes0.clone();
    let mut hoods = Neighborhoods::new(*book.topology());
    let mut assignment = assign_all(&book, data)?;
    let mut trace = vec![sweep(data, &book, assignment.clone(), radii.radius_at(0))];
    let mut recent: VecDeque<u64> = VecDeque::new();
    recent.push_back(assignment_hash(radii.radius_at(0), &assignment));
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    for k in 1..=max_iters {
        let radius = radii.radius_at(k - 1);
        let sums = class_sums(data, &assignment, n);
        for u in 0..n {
            let hood = hoods.of(u, radius);
            let total: usize = hood.iter().map(|&j| assignment.counts()[j]).sum();
            if total == 0 {
                continue;
            }
            let mut acc = ndarray::Array1::<f64>::zeros(data.n_cols());
            for &j in hood {
                acc += &sums.row(j);
            }
            acc.mapv_inplace(|s| s / total as f64);
            book.code_mut(u).assign(&acc);
        }
        let next = assign_all(&book, data)?;
        iterations = k;
        trace.push(sweep(data, &book, next.clone(), radius));
        let unchanged = next == assignment;
        let hash = assignment_hash(radius, &next);
        let revisited = !unchanged && recent.contains(&hash);
        assignment = next;
        if unchanged && radii.is_final_at(k - 1) {
            stop = StopReason::Converged;
            break;
        }
        if revisited {
            stop = StopReason::Cycle;
            break;
        }
        recent.push_back(hash);
        if recent.len() > CYCLE_WINDOW {
            recent.pop_front();
        }
    }
    Ok(BatchRun {
        codebook: book,
        assignment,
        iterations,
        stop,
        trace,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn book(codes: Array2<f64>) -> CodeBook {
        let topo = MapTopology::string(codes.nrows()).unwrap();
        CodeBook::new(topo, codes).unwrap()
    }

    fn column(values: &[f64]) -> DataMatrix {
        DataMatrix::from_rows(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn winner_examples() {
        let b = book(array![[0.0, 0.0], [1.0, 1.0]]);
        assert_eq!(winner(&b, array![0.9, 0.9].view(), None).unwrap(), 1);

        let b = book(array![[0.0, 5.0], [1.0, 0.0]]);
        let mask = array![false, true];
        assert_eq!(winner(&b, array![0.9, f64::NAN].view(), Some(mask.view())).unwrap(), 1);

        let b = book(array![[0.0], [2.0]]);
        assert_eq!(winner(&b, array![1.0].view(), None).unwrap(), 0);
    }

    #[test]
    fn winner_errors() {
        let b = book(array![[0.0, 0.0]]);
        let mask = array![true, true];
        assert_eq!(
            winner(&b, array![1.0, 1.0].view(), Some(mask.view())),
            Err(Error::EmptyObservation)
        );
        assert!(matches!(
            winner(&b, array![1.0].view(), None),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn assign_examples() {
        let codes = array![[0.0], [3.0], [7.0]];
        let data = DataMatrix::from_values(codes.clone()).unwrap();
        let a = assign_all(&book(codes), &data).unwrap();
        assert_eq!(a.class_of(), &[0, 1, 2]);
        assert_eq!(a.counts(), &[1, 1, 1]);

        let a = assign_all(&book(array![[4.0]]), &column(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(a.class_of(), &[0, 0, 0]);

        let a = assign_all(&book(array![[0.0], [9.0]]), &column(&[0.0, 1.0, 9.0, 10.0])).unwrap();
        assert_eq!(a.class_of(), &[0, 0, 1, 1]);
    }

    #[test]
    fn forgy_two_clusters() {
        let data = column(&[0.0, 1.0, 9.0, 10.0]);
        let run = forgy(&data, &book(array![[0.0], [9.0]]), 10).unwrap();
        assert!(run.converged());
        assert!(run.iterations <= 2);
        assert_eq!(run.codebook.codes(), &array![[0.5], [9.5]]);
        assert_eq!(run.trace.last().unwrap().ss_intra, 1.0);
    }

    #[test]
    fn forgy_fixed_point_takes_one_sweep() {
        let data = column(&[0.0, 1.0, 9.0, 10.0]);
        let run = forgy(&data, &book(array![[0.5], [9.5]]), 10).unwrap();
        assert_eq!(run.iterations, 1);
        assert!(run.converged());
        assert_eq!(run.codebook.codes(), &array![[0.5], [9.5]]);
    }

    #[test]
    fn forgy_one_unit_per_row_has_zero_ss_intra() {
        let rows = array![[0.0, 1.0], [2.0, 3.0], [5.0, -1.0]];
        let data = DataMatrix::from_values(rows.clone()).unwrap();
        let run = forgy(&data, &book(rows), 5).unwrap();
        assert_eq!(run.trace.last().unwrap().ss_intra, 0.0);
    }

    #[test]
    fn forgy_rejects_missing_and_warns_on_excess_units() {
        let data = DataMatrix::from_values(array![[0.0, f64::NAN], [1.0, 2.0]]).unwrap();
        let err = forgy(&data, &book(array![[0.0, 0.0]]), 3).unwrap_err();
        assert_eq!(err, Error::MissingDataUnsupported { algorithm: "forgy" });

        let data = column(&[1.0, 2.0]);
        let run = forgy(&data, &book(array![[0.0], [1.0], [2.0]]), 3).unwrap();
        assert_eq!(run.warnings.len(), 1);
    }

    #[test]
    fn scl_single_step_reaches_observation() {
        let data = DataMatrix::from_rows(&[vec![0.3, -1.7]]).unwrap();
        let gain = GainSchedule::constant(1.0, 1).unwrap();
        let out = scl_train(&data, &book(array![[0.1, 5.0]]), &gain, 9).unwrap();
        assert_eq!(out.codes(), &array![[0.3, -1.7]]);
    }

    #[test]
    fn scl_zero_gain_is_a_no_op() {
        let data = column(&[0.0, 1.0, 2.0]);
        let codes = book(array![[0.25], [1.5]]);
        let gain = GainSchedule::constant(0.0, 50).unwrap();
        assert_eq!(scl_train(&data, &codes, &gain, 1).unwrap(), codes);
    }

    #[test]
    fn scl_is_deterministic() {
        let data = column(&[0.0, 0.4, 1.0, 3.0, 3.3]);
        let codes = book(array![[0.0], [1.0], [2.0]]);
        let gain = GainSchedule::linear(0.5, 0.01, 200).unwrap();
        let a = scl_train(&data, &codes, &gain, 42).unwrap();
        let b = scl_train(&data, &codes, &gain, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scl_updates_present_components_only() {
        let data = DataMatrix::from_values(array![[2.0, f64::NAN], [f64::NAN, 3.0]]).unwrap();
        let gain = GainSchedule::constant(0.5, 1).unwrap();
        let mut drawn = None;
        let out = scl_train_observed(&data, &book(array![[0.0, 7.0]]), &gain, 0, |s, _| drawn = Some(s.row)).unwrap();
        let expected = if drawn == Some(0) { array![[1.0, 7.0]] } else { array![[0.0, 5.0]] };
        assert_eq!(out.codes(), &expected);
    }

    #[test]
    fn som_whole_map_neighborhood_collapses_to_observation() {
        let data = DataMatrix::from_rows(&[vec![0.7, 0.2]]).unwrap();
        let topo = MapTopology::grid(2, 3).unwrap();
        let codes = CodeBook::new(topo, Array2::from_shape_fn((6, 2), |(i, j)| (i * 2 + j) as f64)).unwrap();
        let gain = GainSchedule::constant(1.0, 1).unwrap();
        let out = som_train(&data, &codes, &gain, &RadiusSchedule::constant(5), 3, MissingMode::UseDuringTraining)
            .unwrap();
        for u in 0..6 {
            assert_eq!(out.code(u).to_vec(), vec![0.7, 0.2]);
        }
    }

    #[test]
    fn som_radius_zero_matches_scl() {
        let data = DataMatrix::from_values(array![[0.0, 1.0], [2.0, f64::NAN], [4.0, 0.5], [1.0, 1.0]]).unwrap();
        let codes = CodeBook::new(MapTopology::grid(2, 2).unwrap(), array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let gain = GainSchedule::harmonic(0.6, 0.05, 300).unwrap();
        let mut scl_steps = Vec::new();
        let scl = scl_train_observed(&data, &codes, &gain, 17, |s, b| scl_steps.push((*s, b.clone()))).unwrap();
        let mut som_steps = Vec::new();
        let som = som_train_observed(
            &data,
            &codes,
            &gain,
            &RadiusSchedule::constant(0),
            17,
            MissingMode::UseDuringTraining,
            |s, b| som_steps.push((*s, b.clone())),
        )
        .unwrap();
        assert_eq!(scl, som);
        assert_eq!(scl_steps, som_steps);
    }

    #[test]
    fn som_exclude_mode_draws_complete_rows_only() {
        let data = DataMatrix::from_values(array![[0.0, 1.0], [2.0, f64::NAN], [4.0, 0.5]]).unwrap();
        let codes = book(array![[0.0, 0.0], [1.0, 1.0]]);
        let gain = GainSchedule::constant(0.1, 100).unwrap();
        let mut rows = Vec::new();
        som_train_observed(&data, &codes, &gain, &RadiusSchedule::constant(1), 5, MissingMode::Exclude, |s, _| {
            rows.push(s.row)
        })
        .unwrap();
        assert!(rows.iter().all(|&r| r != 1));
    }

    #[test]
    fn kbatch_two_unit_string_collapses_to_mean() {
        let data = column(&[0.0, 1.0, 5.0, 10.0]);
        let run = kbatch_train(&data, &book(array![[0.0], [10.0]]), &RadiusSchedule::constant(1), 1).unwrap();
        assert_eq!(run.trace[1].codes, array![[4.0], [4.0]]);
    }

    #[test]
    fn kbatch_radius_zero_matches_forgy() {
        let data = column(&[0.0, 0.5, 1.0, 4.0, 4.2, 9.0, 9.1, 9.9]);
        let codes = book(array![[0.0], [1.0], [2.0]]);
        let f = forgy(&data, &codes, 20).unwrap();
        let k = kbatch_train(&data, &codes, &RadiusSchedule::constant(0), 20).unwrap();
        assert_eq!(f.trace, k.trace);
        assert_eq!(f.stop, k.stop);
    }

    #[test]
    fn gain_schedules() {
        let h = GainSchedule::harmonic(0.5, 0.01, 100).unwrap();
        assert_eq!(h.eps_at(0), 0.5);
        assert!((h.eps_at(100) - 0.01).abs() < 1e-15);
        let l = GainSchedule::linear(0.5, 0.1, 4).unwrap();
        assert!((l.eps_at(2) - 0.3).abs() < 1e-15);
        assert!(GainSchedule::harmonic(0.5, 0.0, 10).is_err());
        assert!(GainSchedule::constant(1.5, 10).is_err());
        assert!(GainSchedule::linear(0.1, 0.5, 10).is_err());
        assert!(GainSchedule::constant(0.5, 0).is_err());
    }

    fn instance() -> impl Strategy<Value = (DataMatrix, CodeBook)> {
        (2usize..25, 1usize..4, 1usize..6).prop_flat_map(|(n, p, units)| {
            (
                proptest::collection::vec(-10.0f64..10.0, n * p),
                proptest::collection::vec(-10.0f64..10.0, units * p),
            )
                .prop_map(move |(d, c)| {
                    let data = DataMatrix::from_values(Array2::from_shape_vec((n, p), d).unwrap()).unwrap();
                    let codes = CodeBook::new(
                        MapTopology::string(units).unwrap(),
                        Array2::from_shape_vec((units, p), c).unwrap(),
                    )
                    .unwrap();
                    (data, codes)
                })
        })
    }

    fn inside_box(data: &DataMatrix, codes0: &CodeBook, out: &CodeBook) -> bool {
        (0..data.n_cols()).all(|j| {
            let values = data.values().column(j).to_vec();
            let initial = codes0.codes().column(j).to_vec();
            let all = values.iter().chain(&initial);
            let lo = all.clone().fold(f64::INFINITY, |a, &b| a.min(b));
            let hi = all.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            out.codes().column(j).iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn updates_stay_in_bounding_box((data, codes) in instance(), seed in any::<u64>()) {
            let gain = GainSchedule::linear(0.9, 0.01, 60).unwrap();
            let radii = RadiusSchedule::evenly_spaced(&[2, 1, 0], 60).unwrap();
            let som = som_train(&data, &codes, &gain, &radii, seed, MissingMode::UseDuringTraining).unwrap();
            prop_assert!(inside_box(&data, &codes, &som));
            let scl = scl_train(&data, &codes, &gain, seed).unwrap();
            prop_assert!(inside_box(&data, &codes, &scl));
            let f = forgy(&data, &codes, 30).unwrap();
            prop_assert!(inside_box(&data, &codes, &f.codebook));
            let k = kbatch_train(&data, &codes, &RadiusSchedule::constant(1), 30).unwrap();
            prop_assert!(inside_box(&data, &codes, &k.codebook));
        }

        #[test]
        fn forgy_ss_intra_never_increases((data, codes) in instance()) {
            let run = forgy(&data, &codes, 50).unwrap();
            for w in run.trace.windows(2) {
                prop_assert!(w[1].ss_intra <= w[0].ss_intra + 1e-9);
            }
        }
    }
}
