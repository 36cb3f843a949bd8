//! Reconstruction quality metrics: MSE, PSNR, SSIM and the mean edge factor
//! of a Canny edge map.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid2;

pub fn mse(x: &Grid2<f64>, y: &Grid2<f64>) -> Result<f64> {
    x.check_same_shape(y)?;
    let sum: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / x.len() as f64)
}

/// `10 log10(R^2 / mse)`; identical images give `+inf`.
pub fn psnr(x: &Grid2<f64>, y: &Grid2<f64>, peak: f64) -> Result<f64> {
    Ok(psnr_from_mse(mse(x, y)?, peak))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        return f64::INFINITY;
    }
    10.0 * libm::log10(peak * peak / mse)
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

fn gaussian_kernel(radius: usize, sigma: f64) -> Vec<f64> {
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            libm::exp(-d * d / (2.0 * sigma * sigma))
        })
        .collect();
    let sum: f64 = k.iter().sum();
    for v in k.iter_mut() {
        *v /= sum;
    }
    k
}

/// Separable weighted mean over every fully contained window.
fn window_means(values: &[f64], rows: usize, cols: usize, kernel: &[f64]) -> (Vec<f64>, usize, usize) {
    let w = kernel.len();
    let (out_r, out_c) = (rows + 1 - w, cols + 1 - w);
    let mut horiz = vec![0.0; rows * out_c];
    for r in 0..rows {
        for c in 0..out_c {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * values[r * cols + c + k];
            }
            horiz[r * out_c + c] = acc;
        }
    }
    let mut out = vec![0.0; out_r * out_c];
    for r in 0..out_r {
        for c in 0..out_c {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * horiz[(r + k) * out_c + c];
            }
            out[r * out_c + c] = acc;
        }
    }
    (out, out_r, out_c)
}

fn ssim_terms(mx: f64, my: f64, vx: f64, vy: f64, cxy: f64, range: f64) -> f64 {
    let c1 = (0.01 * range) * (0.01 * range);
    let c2 = (0.03 * range) * (0.03 * range);
    ((2.0 * (mx * my) + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
}

/// Mean SSIM over 11x11 Gaussian windows (sigma 1.5) with
/// `C1 = (0.01 R)^2`, `C2 = (0.03 R)^2`.
pub fn ssim(x: &Grid2<f64>, y: &Grid2<f64>, data_range: f64) -> Result<f64> {
    x.check_same_shape(y)?;
    let (rows, cols) = x.shape();
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::ShapeMismatch {
            expected: (SSIM_WINDOW, SSIM_WINDOW),
            found: (rows, cols),
        });
    }
    let kernel = gaussian_kernel(SSIM_WINDOW / 2, SSIM_SIGMA);
    let xs = x.as_slice();
    let ys = y.as_slice();
    let xx: Vec<f64> = xs.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = ys.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = xs.iter().zip(ys).map(|(a, b)| a * b).collect();
    let (mx, _, _) = window_means(xs, rows, cols, &kernel);
    let (my, _, _) = window_means(ys, rows, cols, &kernel);
    let (mxx, _, _) = window_means(&xx, rows, cols, &kernel);
    let (myy, _, _) = window_means(&yy, rows, cols, &kernel);
    let (mxy, _, _) = window_means(&xy, rows, cols, &kernel);
    let n = mx.len();
    let mut total = 0.0;
    for i in 0..n {
        let vx = mxx[i] - mx[i] * mx[i];
        let vy = myy[i] - my[i] * my[i];
        let cxy = mxy[i] - mx[i] * my[i];
        total += ssim_terms(mx[i], my[i], vx, vy, cxy, data_range);
    }
    Ok(total / n as f64)
}

/// SSIM from whole-image statistics (a single window).
pub fn ssim_global(x: &Grid2<f64>, y: &Grid2<f64>, data_range: f64) -> Result<f64> {
    x.check_same_shape(y)?;
    let n = x.len() as f64;
    let mx = x.mean();
    let my = y.mean();
    let mut vx = 0.0;
    let mut vy = 0.0;
    let mut cxy = 0.0;
    for (a, b) in x.iter().zip(y.iter()) {
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
        cxy += (a - mx) * (b - my);
    }
    Ok(ssim_terms(mx, my, vx / n, vy / n, cxy / n, data_range))
}

/// Binary edge map, stored as 0/1 bytes.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMap {
    pub edges: Grid2<u8>,
}

impl EdgeMap {
    pub fn count(&self) -> usize {
        self.edges.iter().filter(|&&e| e != 0).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CannyParams {
    pub sigma: f64,
    /// Hysteresis thresholds as fractions of the maximum gradient magnitude.
    pub low_frac: f64,
    pub high_frac: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            low_frac: 0.08,
            high_frac: 0.2,
        }
    }
}

fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

fn gaussian_blur(image: &Grid2<f64>, sigma: f64) -> Grid2<f64> {
    if sigma <= 0.0 {
        return image.clone();
    }
    let radius = libm::ceil(3.0 * sigma) as usize;
    let kernel = gaussian_kernel(radius, sigma);
    let (rows, cols) = image.shape();
    let r = radius as isize;
    let mut horiz = Grid2::zeros(rows, cols);
    for y in 0..rows {
        for x in 0..cols {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                acc += kv * image[(y, clamp_index(x as isize + k as isize - r, cols))];
            }
            horiz[(y, x)] = acc;
        }
    }
    Grid2::from_fn(rows, cols, |y, x| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, kv)| kv * horiz[(clamp_index(y as isize + k as isize - r, rows), x)])
            .sum()
    })
}

/// Canny edge detector: Gaussian blur, Sobel gradients, non-maximum
/// suppression and hysteresis with 8-connectivity.
pub fn canny_edges(image: &Grid2<f64>, params: &CannyParams) -> EdgeMap {
    let (rows, cols) = image.shape();
    let blurred = gaussian_blur(image, params.sigma);
    let at = |y: isize, x: isize| blurred[(clamp_index(y, rows), clamp_index(x, cols))];
    let mut gx = Grid2::zeros(rows, cols);
    let mut gy = Grid2::zeros(rows, cols);
    let mut mag = Grid2::zeros(rows, cols);
    for y in 0..rows as isize {
        for x in 0..cols as isize {
            let sx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
            let sy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
            let idx = (y as usize, x as usize);
            gx[idx] = sx;
            gy[idx] = sy;
            mag[idx] = libm::sqrt(sx * sx + sy * sy);
        }
    }
    let max = mag.iter().cloned().fold(0.0, f64::max);
    let mut edges = Grid2::filled(rows, cols, 0u8);
    if max == 0.0 {
        return EdgeMap { edges };
    }

    let mag_at = |y: isize, x: isize| {
        if y < 0 || x < 0 || y >= rows as isize || x >= cols as isize {
            0.0
        } else {
            mag[(y as usize, x as usize)]
        }
    };
    let mut thin = Grid2::zeros(rows, cols);
    for y in 0..rows {
        for x in 0..cols {
            let m = mag[(y, x)];
            if m == 0.0 {
                continue;
            }
            let mut angle = libm::atan2(gy[(y, x)], gx[(y, x)]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (dy, dx) = if !(22.5..157.5).contains(&angle) {
                (0, 1)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (1, 0)
            } else {
                (1, -1)
            };
            let (yi, xi) = (y as isize, x as isize);
            let ahead = mag_at(yi + dy, xi + dx);
            let behind = mag_at(yi - dy, xi - dx);
            // Asymmetric tie-break keeps exactly one pixel of a plateau pair.
            if m > behind && m >= ahead {
                thin[(y, x)] = m;
            }
        }
    }

    let high = params.high_frac * max;
    let low = params.low_frac * max;
    let mut queue = VecDeque::new();
    for y in 0..rows {
        for x in 0..cols {
            if thin[(y, x)] >= high && thin[(y, x)] > 0.0 {
                edges[(y, x)] = 1;
                queue.push_back((y, x));
            }
        }
    }
    while let Some((y, x)) = queue.pop_front() {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let (ny, nx) = (y as isize + dy, x as isize + dx);
                if ny < 0 || nx < 0 || ny >= rows as isize || nx >= cols as isize {
                    continue;
                }
                let n = (ny as usize, nx as usize);
                if edges[n] == 0 && thin[n] >= low && thin[n] > 0.0 {
                    edges[n] = 1;
                    queue.push_back(n);
                }
            }
        }
    }
    EdgeMap { edges }
}

/// Fraction of pixels marked as edges.
pub fn mean_edge_factor(edges: &EdgeMap) -> f64 {
    let sum: f64 = edges.edges.iter().map(|&e| e as f64).sum();
    sum / edges.edges.len() as f64
}

/// Quality of a reconstruction against ground truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub mse: f64,
    /// dB; `+inf` for a perfect match.
    pub psnr: f64,
    pub ssim: f64,
    /// Mean edge factor of the reconstruction's Canny map.
    pub edge_factor: f64,
}

impl MetricReport {
    /// Compares `estimate` with `truth`; both are expected in `[0, R]`.
    pub fn compute(estimate: &Grid2<f64>, truth: &Grid2<f64>, data_range: f64) -> Result<Self> {
        let mse = mse(estimate, truth)?;
        Ok(Self {
            mse,
            psnr: psnr_from_mse(mse, data_range),
            ssim: ssim(estimate, truth, data_range)?,
            edge_factor: mean_edge_factor(&canny_edges(estimate, &CannyParams::default())),
        })
    }
}
