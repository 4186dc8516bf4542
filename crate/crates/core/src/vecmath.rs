//! Small dense-vector helpers shared by the loss and solver code.

use alloc::vec;
use alloc::vec::Vec;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// y += c * x
pub fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Weighted column sum: sum_i weights[i] * columns[i].
pub fn weighted_sum(columns: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    debug_assert_eq!(columns.len(), weights.len());
    let dim = columns.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for (col, &w) in columns.iter().zip(weights) {
        if w != 0.0 {
            axpy(w, col, &mut out);
        }
    }
    out
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
