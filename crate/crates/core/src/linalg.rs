//! Dense symmetric eigen-decomposition and determinants for small matrices.

use ndarray::Array2;

use crate::error::{Error, Result};

const OFF_DIAGONAL_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors stored as columns,
/// sorted by decreasing eigenvalue. Equal eigenvalues keep their original
/// axis order. Each eigenvector's largest-magnitude coordinate is made
/// positive (first such coordinate on ties).
pub fn symmetric_eigen(matrix: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: matrix.ncols(),
        });
    }
    let mut a = matrix.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let limit = OFF_DIAGONAL_TOL * scale.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= limit {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    if off_diagonal_norm(&a) > limit {
        return Err(Error::Degenerate("Jacobi rotations did not converge".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]));
    let values = order.iter().map(|&i| a[[i, i]]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).to_owned();
        let pivot = col
            .iter()
            .enumerate()
            .fold(0, |best, (k, x)| if x.abs() > col[best].abs() { k } else { best });
        if col[pivot] < 0.0 {
            col.mapv_inplace(|x| -x);
        }
        vectors.column_mut(dst).assign(&col);
    }
    Ok((values, vectors))
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    a.indexed_iter()
        .filter(|((i, j), _)| i != j)
        .map(|(_, x)| x * x)
        .sum::<f64>()
        .sqrt()
}

/// Determinant by LU factorization with partial pivoting.
pub fn determinant(matrix: &Array2<f64>) -> f64 {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "determinant of a non-square matrix");
    let mut a = matrix.clone();
    let mut det = 1.0;
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| a[[i, k]].abs().total_cmp(&a[[j, k]].abs()))
            .unwrap();
        if a[[pivot, k]] == 0.0 {
            return 0.0;
        }
        if pivot != k {
            for j in 0..n {
                a.swap([k, j], [pivot, j]);
            }
            det = -det;
        }
        let akk = a[[k, k]];
        det *= akk;
        for i in (k + 1)..n {
            let factor = a[[i, k]] / akk;
            if factor != 0.0 {
                for j in k..n {
                    a[[i, j]] -= factor * a[[k, j]];
                }
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn residual(m: &Array2<f64>, values: &[f64], vectors: &Array2<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &lambda) in values.iter().enumerate() {
            let d = vectors.column(k);
            let r = m.dot(&d) - &d.mapv(|x| x * lambda);
            worst = worst.max(r.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        worst
    }

    #[test]
    fn two_by_two_matches_closed_form() {
        let m = array![[2.0, 1.0], [1.0, 2.0]];
        let (values, vectors) = symmetric_eigen(&m).unwrap();
        assert!((values[0] - 3.0).abs() < 1e-12);
        assert!((values[1] - 1.0).abs() < 1e-12);
        let h = 0.5f64.sqrt();
        assert!((vectors[[0, 0]] - h).abs() < 1e-12);
        assert!((vectors[[1, 0]] - h).abs() < 1e-12);
    }

    #[test]
    fn ties_keep_axis_order() {
        let m = array![[0.5, 0.0], [0.0, 0.5]];
        let (values, vectors) = symmetric_eigen(&m).unwrap();
        assert_eq!(values, vec![0.5, 0.5]);
        assert_eq!(vectors, Array2::<f64>::eye(2));
    }

    #[test]
    fn determinant_small_cases() {
        assert_eq!(determinant(&array![[3.0]]), 3.0);
        assert!((determinant(&array![[1.0, 2.0], [3.0, 4.0]]) + 2.0).abs() < 1e-12);
        assert_eq!(determinant(&array![[1.0, 2.0], [2.0, 4.0]]), 0.0);
        let m = array![[0.0, 1.0, 2.0], [1.0, 0.0, 3.0], [4.0, -3.0, 8.0]];
        assert!((determinant(&m) + 2.0).abs() < 1e-12);
    }

    fn symmetric(n: usize) -> impl Strategy<Value = Array2<f64>> {
        proptest::collection::vec(-10.0f64..10.0, n * n).prop_map(move |v| {
            let m = Array2::from_shape_vec((n, n), v).unwrap();
            &m + &m.t()
        })
    }

    proptest! {
        #[test]
        fn eigenpairs_have_small_residual(m in (1usize..7).prop_flat_map(symmetric)) {
            let (values, vectors) = symmetric_eigen(&m).unwrap();
            let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(residual(&m, &values, &vectors) <= 1e-7 * norm.max(1e-300));
            for w in values.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            let gram = vectors.t().dot(&vectors);
            for ((i, j), x) in gram.indexed_iter() {
                let e = if i == j { 1.0 } else { 0.0 };
                prop_assert!((x - e).abs() < 1e-9);
            }
        }

        #[test]
        fn determinant_is_product_of_eigenvalues(m in (1usize..6).prop_flat_map(symmetric)) {
            let (values, _) = symmetric_eigen(&m).unwrap();
            let product: f64 = values.iter().product();
            let det = determinant(&m);
            prop_assert!((det - product).abs() <= 1e-8 * (1.0 + product.abs()));
        }
    }
}
