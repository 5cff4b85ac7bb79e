//! Initial code books: random box (I), sampled observations (II) and a
//! regular mesh over the first principal plane (III).

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::quantize::CodeBook;
use crate::rng::SeededRng;
use crate::topology::{MapTopology, TopologyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitMethod {
    /// Uniform draws in the per-column bounding box.
    RandomBox,
    /// Distinct complete rows taken at random.
    Observations,
    /// Regular mesh on the first principal plane.
    PcaMesh,
}

impl InitMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMethod::RandomBox => "I",
            InitMethod::Observations => "II",
            InitMethod::PcaMesh => "III",
        }
    }
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" | "BOX" => Ok(InitMethod::RandomBox),
            "II" | "2" | "OBS" | "OBSERVATIONS" => Ok(InitMethod::Observations),
            "III" | "3" | "PCA" => Ok(InitMethod::PcaMesh),
            other => Err(Error::InvalidParameter(format!(
                "unknown init method `{other}` (expected I, II or III)"
            ))),
        }
    }
}

/// Dispatches to one of the three strategies. `seed` is ignored by the PCA mesh.
pub fn initialize(method: InitMethod, data: &DataMatrix, topo: &MapTopology, seed: u64) -> Result<CodeBook> {
    match method {
        InitMethod::RandomBox => init_random_box(data, topo, seed),
        InitMethod::Observations => init_from_observations(data, topo, seed),
        InitMethod::PcaMesh => init_pca_mesh(data, topo),
    }
}

/// Codes drawn coordinate-wise uniformly inside `[min, max]` of the present
/// values of each column, unit by unit.
pub fn init_random_box(data: &DataMatrix, topo: &MapTopology, seed: u64) -> Result<CodeBook> {
    let ranges = data.column_ranges();
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

/// Copies `n` distinct complete rows chosen without replacement.
pub fn init_from_observations(data: &DataMatrix, topo: &MapTopology, seed: u64) -> Result<CodeBook> {
    let n = topo.unit_count();
    let mut pool = data.complete_rows();
    if pool.len() < n {
        return Err(Error::InsufficientRows {
            needed: n,
            available: pool.len(),
        });
    }
    let mut rng = SeededRng::new(seed);
    for k in 0..n {
        let j = k + rng.index(pool.len() - k);
        pool.swap(k, j);
    }
    let mut codes = Array2::zeros((n, data.n_cols()));
    for (u, &row) in pool[..n].iter().enumerate() {
        codes.row_mut(u).assign(&data.row(row));
    }
    CodeBook::new(*topo, codes)
}

/// Leading principal axes of the complete rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub mean: Array1<f64>,
    /// One unit direction per row.
    pub directions: Array2<f64>,
    /// Variances along each direction (population convention).
    pub explained_variance: Vec<f64>,
    /// Centered complete rows projected on the directions.
    pub projection: Array2<f64>,
}

/// First `k` principal components of the complete rows of `data`.
pub fn pca(data: &DataMatrix, k: usize) -> Result<PcaResult> {
    let p = data.n_cols();
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!(
            "cannot extract {k} components from {p} columns"
        )));
    }
    let complete = data
        .complete_subset()
        .ok_or_else(|| Error::InvalidData("principal components need at least one complete row".into()))?;
    let x = complete.values();
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = x - &mean;
    let cov = centered.t().dot(&centered) / x.nrows() as f64;
    let (values, vectors) = linalg::symmetric_eigen(&cov)?;
    if values.iter().all(|&v| v <= 0.0) {
        return Err(Error::Degenerate("data have zero total variance".into()));
    }
    let directions = vectors.slice(ndarray::s![.., ..k]).t().to_owned();
    let projection = centered.dot(&directions.t());
    Ok(PcaResult {
        mean,
        directions,
        explained_variance: values[..k].iter().map(|v| v.max(0.0)).collect(),
        projection,
    })
}

fn span(values: ndarray::ArrayView1<f64>) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn lerp(lo: f64, hi: f64, frac: f64) -> f64 {
    lo + (hi - lo) * frac
}

/// Regular mesh spanning the bounding rectangle of the projections on the
/// first principal plane. Columns follow the first axis, rows the second.
/// A string spans the first axis only.
pub fn init_pca_mesh(data: &DataMatrix, topo: &MapTopology) -> Result<CodeBook> {
    let p = data.n_cols();
    let string = topo.kind() == TopologyKind::String;
    let axes = if string { 1 } else { 2 };
    if p < axes {
        return Err(Error::InvalidParameter(
            "a two-dimensional map needs at least two columns for the principal-plane mesh".into(),
        ));
    }
    let pc = pca(data, axes)?;
    let (u_lo, u_hi) = span(pc.projection.column(0));
    let (v_lo, v_hi) = if string { (0.0, 0.0) } else { span(pc.projection.column(1)) };

    let (rows, cols) = (topo.rows(), topo.cols());
    let hex = topo.kind() == TopologyKind::HexGrid && rows > 1;
    let frac = |i: usize, count: usize| if count > 1 { i as f64 / (count - 1) as f64 } else { 0.5 };
    let mut codes = Array2::zeros((topo.unit_count(), p));
    for unit in 0..topo.unit_count() {
        let (r, c) = topo.unit_coords(unit)?;
        let (u, v) = if string {
            (lerp(u_lo, u_hi, frac(r, rows)), 0.0)
        } else {
            let fu = if hex {
                // odd rows sit half a step to the right
                (c as f64 + 0.5 * (r % 2) as f64) / (cols as f64 - 0.5)
            } else {
                frac(c, cols)
            };
            (lerp(u_lo, u_hi, fu), lerp(v_lo, v_hi, frac(r, rows)))
        };
        let mut code = pc.mean.clone();
        code.scaled_add(u, &pc.directions.row(0));
        if !string {
            code.scaled_add(v, &pc.directions.row(1));
        }
        codes.row_mut(unit).assign(&code);
    }
    CodeBook::new(*topo, codes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn random_box_respects_degenerate_column() {
        let data = DataMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 3.0], vec![0.0, 2.0]]).unwrap();
        let book = init_random_box(&data, &MapTopology::grid(2, 2).unwrap(), 5).unwrap();
        for u in 0..4 {
            assert_eq!(book.code(u)[0], 0.0);
            assert!((1.0..=3.0).contains(&book.code(u)[1]));
        }
    }

    #[test]
    fn random_box_single_unit_in_box_and_deterministic() {
        let data = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let topo = MapTopology::string(1).unwrap();
        let a = init_random_box(&data, &topo, 11).unwrap();
        let b = init_random_box(&data, &topo, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.codes().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn observations_full_sample_is_permutation() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let book = init_from_observations(&data, &MapTopology::grid(2, 3).unwrap(), 3).unwrap();
        let mut picked: Vec<i64> = book.codes().column(0).iter().map(|&v| v as i64).collect();
        picked.sort_unstable();
        assert_eq!(picked, vec![0, 1, 2, 3, 4, 5]);
        for u in 0..6 {
            let i = book.code(u)[0] as usize;
            assert_eq!(book.code(u).to_vec(), rows[i]);
        }
    }

    #[test]
    fn observations_skip_incomplete_rows() {
        let data = DataMatrix::from_values(array![[1.0, f64::NAN], [2.0, 2.0], [3.0, 3.0]]).unwrap();
        for seed in 0..20 {
            let book = init_from_observations(&data, &MapTopology::string(2).unwrap(), seed).unwrap();
            assert!(book.codes().iter().all(|v| v.is_finite()));
        }
        let err = init_from_observations(&data, &MapTopology::string(3).unwrap(), 0).unwrap_err();
        assert_eq!(err, Error::InsufficientRows { needed: 3, available: 2 });
    }

    #[test]
    fn mesh_on_line_data_is_ordered_along_line() {
        // points on x = (1, 2, -1) t + (0, 1, 0)
        let rows: Vec<Vec<f64>> = [0.3, -1.0, 2.0, 0.7, 1.1]
            .iter()
            .map(|&t| vec![t, 1.0 + 2.0 * t, -t])
            .collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let book = init_pca_mesh(&data, &MapTopology::string(4).unwrap()).unwrap();
        let ts: Vec<f64> = (0..4).map(|u| book.code(u)[0]).collect();
        for u in 0..4 {
            let c = book.code(u);
            assert!((c[1] - (1.0 + 2.0 * c[0])).abs() < 1e-9);
            assert!((c[2] + c[0]).abs() < 1e-9);
        }
        let increasing = ts.windows(2).all(|w| w[0] < w[1]);
        let decreasing = ts.windows(2).all(|w| w[0] > w[1]);
        assert!(increasing || decreasing);
        // mesh ends hit the extreme projections
        let (lo, hi) = (ts[0].min(ts[3]), ts[0].max(ts[3]));
        assert!((lo + 1.0).abs() < 1e-9 && (hi - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mesh_on_isotropic_cloud_is_regular() {
        let mut rows = Vec::new();
        for x in [-1.0, 0.0, 1.0] {
            for y in [-1.0, 0.0, 1.0] {
                rows.push(vec![x, y]);
            }
        }
        let data = DataMatrix::from_rows(&rows).unwrap();
        let topo = MapTopology::grid(3, 3).unwrap();
        let book = init_pca_mesh(&data, &topo).unwrap();
        for u in 0..9 {
            for (dr, dc) in [(0, 1), (1, 0)] {
                if let Some(v) = topo.step(u, dr, dc) {
                    assert!((dist(book.code(u), book.code(v)) - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn tied_variances_keep_axis_order() {
        let data = DataMatrix::from_rows(&[vec![-0.5, 0.0], vec![0.5, 0.0], vec![0.0, -0.5], vec![0.0, 0.5]]).unwrap();
        let pc = pca(&data, 2).unwrap();
        // oracle: covariance is diag(1/8, 1/8)
        assert!((pc.explained_variance[0] - 0.125).abs() < 1e-15);
        assert!((pc.explained_variance[1] - 0.125).abs() < 1e-15);
        assert_eq!(pc.directions, array![[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn mesh_needs_two_columns_on_a_plane() {
        let data = DataMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(init_pca_mesh(&data, &MapTopology::grid(2, 2).unwrap()).is_err());
        assert!(init_pca_mesh(&data, &MapTopology::string(3).unwrap()).is_ok());
        let flat = DataMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(init_pca_mesh(&flat, &MapTopology::grid(2, 2).unwrap()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn hex_mesh_stays_inside_projection_range() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![(i % 5) as f64, (i / 5) as f64 * 0.5]).collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let book = init_pca_mesh(&data, &MapTopology::hex(3, 4).unwrap()).unwrap();
        for v in book.codes().column(0) {
            assert!((-1e-9..=4.0 + 1e-9).contains(v));
        }
    }

    #[test]
    fn method_names_parse() {
        assert_eq!("III".parse::<InitMethod>().unwrap(), InitMethod::PcaMesh);
        assert_eq!("ii".parse::<InitMethod>().unwrap(), InitMethod::Observations);
        assert!("IV".parse::<InitMethod>().is_err());
    }

    proptest! {
        #[test]
        fn pca_invariants(v in proptest::collection::vec(-5.0f64..5.0, 8..60)) {
            let p = 4;
            let n = v.len() / p;
            prop_assume!(n >= 2);
            let data = DataMatrix::from_values(Array2::from_shape_vec((n, p), v[..n * p].to_vec()).unwrap()).unwrap();
            let Ok(pc) = pca(&data, 2) else { return Ok(()); };
            let gram = pc.directions.dot(&pc.directions.t());
            for ((i, j), g) in gram.indexed_iter() {
                let e = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - e).abs() < 1e-9);
            }
            prop_assert!(pc.explained_variance[0] >= pc.explained_variance[1]);
            prop_assert!(pc.explained_variance[1] >= 0.0);
            let centered = data.values() - &pc.mean;
            let cov = centered.t().dot(&centered) / n as f64;
            let norm = cov.iter().map(|x| x * x).sum::<f64>().sqrt();
            for k in 0..2 {
                let d = pc.directions.row(k);
                let r = cov.dot(&d) - &d.mapv(|x| x * pc.explained_variance[k]);
                prop_assert!(r.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-7 * norm.max(1e-300));
            }
        }

        #[test]
        fn grid_mesh_has_uniform_spacing(v in proptest::collection::vec(-5.0f64..5.0, 30), rows in 2usize..5, cols in 2usize..5) {
            let data = DataMatrix::from_values(Array2::from_shape_vec((10, 3), v).unwrap()).unwrap();
            let topo = MapTopology::grid(rows, cols).unwrap();
            let Ok(book) = init_pca_mesh(&data, &topo) else { return Ok(()); };
            let h = dist(book.code(0), book.code(1));
            let w = dist(book.code(0), book.code(cols));
            for u in 0..topo.unit_count() {
                if let Some(n) = topo.step(u, 0, 1) {
                    prop_assert!((dist(book.code(u), book.code(n)) - h).abs() < 1e-9);
                }
                if let Some(n) = topo.step(u, 1, 0) {
                    prop_assert!((dist(book.code(u), book.code(n)) - w).abs() < 1e-9);
                }
            }
        }
    }
}
