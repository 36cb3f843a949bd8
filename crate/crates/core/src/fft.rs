//! Complex FFTs of arbitrary length.
//!
//! Power-of-two lengths use an iterative radix-2 transform; every other
//! length goes through Bluestein's chirp-z algorithm on a power-of-two
//! buffer. Forward transforms are unnormalized, inverse transforms scale by
//! `1/n` so that `inverse(forward(x)) == x`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Clone, Debug)]
enum Plan {
    Identity,
    Radix2 {
        twiddles: Vec<Complex64>,
        bitrev: Vec<usize>,
    },
    Bluestein {
        inner: Box<Fft>,
        chirp: Vec<Complex64>,
        filter: Vec<Complex64>,
    },
}

/// A reusable 1D transform plan.
#[derive(Clone, Debug)]
pub struct Fft {
    len: usize,
    plan: Plan,
}

fn cis(theta: f64) -> Complex64 {
    Complex64::new(libm::cos(theta), libm::sin(theta))
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "FFT length must be positive");
        let plan = if len == 1 {
            Plan::Identity
        } else if len.is_power_of_two() {
            let bits = len.trailing_zeros();
            let twiddles = (0..len / 2)
                .map(|k| cis(-2.0 * PI * k as f64 / len as f64))
                .collect();
            let bitrev = (0..len)
                .map(|i| i.reverse_bits() >> (usize::BITS - bits))
                .collect();
            Plan::Radix2 { twiddles, bitrev }
        } else {
            let m = (2 * len - 1).next_power_of_two();
            let inner = Fft::new(m);
            // k^2 mod 2n keeps the chirp argument small.
            let chirp: Vec<Complex64> = (0..len)
                .map(|k| {
                    let k2 = ((k as u128 * k as u128) % (2 * len as u128)) as f64;
                    cis(-PI * k2 / len as f64)
                })
                .collect();
            let mut filter = vec![Complex64::new(0.0, 0.0); m];
            filter[0] = chirp[0].conj();
            for k in 1..len {
                filter[k] = chirp[k].conj();
                filter[m - k] = chirp[k].conj();
            }
            inner.forward(&mut filter);
            Plan::Bluestein {
                inner: Box::new(inner),
                chirp,
                filter,
            }
        };
        Self { len, plan }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform, `X_k = sum_j x_j exp(-2 pi i jk/n)`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        match &self.plan {
            Plan::Identity => {}
            Plan::Radix2 { twiddles, bitrev } => radix2(buf, twiddles, bitrev),
            Plan::Bluestein {
                inner,
                chirp,
                filter,
            } => {
                let m = inner.len();
                let mut work = vec![Complex64::new(0.0, 0.0); m];
                for ((w, x), c) in work.iter_mut().zip(buf.iter()).zip(chirp) {
                    *w = x * c;
                }
                inner.forward(&mut work);
                for (w, f) in work.iter_mut().zip(filter) {
                    *w *= f;
                }
                inner.inverse(&mut work);
                for ((x, w), c) in buf.iter_mut().zip(&work).zip(chirp) {
                    *x = w * c;
                }
            }
        }
    }

    /// Normalized inverse transform.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for v in buf.iter_mut() {
            *v = v.conj();
        }
        self.forward(buf);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v = v.conj() * scale;
        }
    }

    pub fn process(&self, buf: &mut [Complex64], direction: Direction) {
        match direction {
            Direction::Forward => self.forward(buf),
            Direction::Inverse => self.inverse(buf),
        }
    }
}

fn radix2(buf: &mut [Complex64], twiddles: &[Complex64], bitrev: &[usize]) {
    let n = buf.len();
    for (i, &j) in bitrev.iter().enumerate() {
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut half = 1;
    while half < n {
        let stride = n / (2 * half);
        for start in (0..n).step_by(2 * half) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        half *= 2;
    }
}

/// Row-major 2D transform plan.
#[derive(Clone, Debug)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fft: Fft,
    col_fft: Fft,
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_fft: Fft::new(cols),
            col_fft: Fft::new(rows),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.apply(buf, Direction::Forward);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.apply(buf, Direction::Inverse);
    }

    fn apply(&self, buf: &mut [Complex64], direction: Direction) {
        assert_eq!(buf.len(), self.rows * self.cols);
        for row in buf.chunks_exact_mut(self.cols) {
            self.row_fft.process(row, direction);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); self.rows];
        for c in 0..self.cols {
            for (r, v) in column.iter_mut().enumerate() {
                *v = buf[r * self.cols + c];
            }
            self.col_fft.process(&mut column, direction);
            for (r, v) in column.iter().enumerate() {
                buf[r * self.cols + c] = *v;
            }
        }
    }
}

/// DFT sample frequencies in cycles per unit length, in FFT order
/// (`0, 1, ..., -1` times `1/(n*spacing)`).
pub fn frequencies(n: usize, spacing: f64) -> Vec<f64> {
    let scale = 1.0 / (n as f64 * spacing);
    (0..n)
        .map(|i| {
            let k = if i < n.div_ceil(2) { i as f64 } else { i as f64 - n as f64 };
            k * scale
        })
        .collect()
}
