#![allow(dead_code)]

use abc_adjust_core::linalg::Matrix;
use abc_adjust_core::rng::Stream;

pub fn random_matrix(rng: &mut Stream, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.normal()).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub fn random_weights(rng: &mut Stream, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.1 + rng.uniform()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

pub fn to_na(m: &Matrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Explicit `(XᵀWX)⁻¹ XᵀWθ` with an intercept column, plus optional ridge
/// penalty on the slopes. Returns `(α, β)` with β as p×q.
pub fn normal_equations(stats: &Matrix, theta: &Matrix, w: &[f64], lambda: f64) -> (Vec<f64>, Matrix) {
    let (m, q, p) = (stats.rows(), stats.cols(), theta.cols());
    let mut x = nalgebra::DMatrix::<f64>::zeros(m, q + 1);
    for i in 0..m {
        x[(i, 0)] = 1.0;
        for j in 0..q {
            x[(i, j + 1)] = stats[(i, j)];
        }
    }
    let wm = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(w));
    let mut xtwx = x.transpose() * &wm * &x;
    for j in 0..q {
        xtwx[(j + 1, j + 1)] += lambda;
    }
    let xtwy = x.transpose() * &wm * to_na(theta);
    let sol = xtwx.try_inverse().expect("singular normal equations") * xtwy;
    let alpha = (0..p).map(|k| sol[(0, k)]).collect();
    let mut beta = Matrix::zeros(p, q);
    for k in 0..p {
        for j in 0..q {
            beta[(k, j)] = sol[(j + 1, k)];
        }
    }
    (alpha, beta)
}

pub fn weighted_var(xs: &[f64], w: &[f64]) -> f64 {
    let mut mean = 0.0;
    for i in 0..xs.len() {
        mean += w[i] * xs[i];
    }
    let mut v = 0.0;
    for i in 0..xs.len() {
        v += w[i] * (xs[i] - mean) * (xs[i] - mean);
    }
    v
}
