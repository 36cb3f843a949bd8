//! Small statistics helpers shared by solvers, metrics and tests.

use alloc::vec::Vec;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// Pearson correlation; zero when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / libm::sqrt(sxx * syy)
}

/// Linearly interpolated quantile, `q` in `[0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Mean magnitude of forward-difference gradients, with zero gradient past
/// the last row and column.
pub fn mean_gradient_magnitude(values: &[f64], rows: usize, cols: usize) -> f64 {
    assert_eq!(values.len(), rows * cols);
    let mut total = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let v = values[r * cols + c];
            let dx = if c + 1 < cols { values[r * cols + c + 1] - v } else { 0.0 };
            let dy = if r + 1 < rows { values[(r + 1) * cols + c] - v } else { 0.0 };
            total += libm::sqrt(dx * dx + dy * dy);
        }
    }
    total / (rows * cols) as f64
}
