//! Haar wavelet down- and up-sampling.
//!
//! Each input channel `c` is split into four sub-bands stored at output
//! channels `4c..4c+4` in the order LL, LH, HL, HH. For a 2x2 block
//! `[[a, b], [c, d]]` the analysis filters give
//!
//! ```text
//! LL = a + b + c + d    LH = -a - b + c + d
//! HL = -a + b - c + d   HH =  a - b - c + d
//! ```
//!
//! and synthesis recovers each pixel as a quarter of a signed sum of the
//! bands, which makes `haar_up` the exact inverse of `haar_down`.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

const SIGNS: [[f64; 4]; 4] = [
    // rows: band LL, LH, HL, HH; columns: pixel a, b, c, d
    [1.0, 1.0, 1.0, 1.0],
    [-1.0, -1.0, 1.0, 1.0],
    [-1.0, 1.0, -1.0, 1.0],
    [1.0, -1.0, -1.0, 1.0],
];

fn analysis(input: &Tensor, scale: f64) -> Result<Tensor> {
    let [n, c, h, w] = input.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::InvalidParameter(alloc::format!(
            "Haar downsampling needs even spatial dims, got {h}x{w}"
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros([n, 4 * c, oh, ow]);
    for b in 0..n {
        for ch in 0..c {
            let src = input.plane(b, ch);
            for i in 0..oh {
                for j in 0..ow {
                    let px = [
                        src[2 * i * w + 2 * j],
                        src[2 * i * w + 2 * j + 1],
                        src[(2 * i + 1) * w + 2 * j],
                        src[(2 * i + 1) * w + 2 * j + 1],
                    ];
                    for (band, signs) in SIGNS.iter().enumerate() {
                        let v: f64 = signs.iter().zip(&px).map(|(s, p)| s * p).sum();
                        out.plane_mut(b, 4 * ch + band)[i * ow + j] = scale * v;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn synthesis(input: &Tensor, scale: f64) -> Result<Tensor> {
    let [n, c4, h, w] = input.shape();
    if c4 % 4 != 0 {
        return Err(Error::InvalidParameter(alloc::format!(
            "Haar upsampling needs a multiple of 4 channels, got {c4}"
        )));
    }
    let c = c4 / 4;
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = Tensor::zeros([n, c, oh, ow]);
    for b in 0..n {
        for ch in 0..c {
            for i in 0..h {
                for j in 0..w {
                    let bands = [
                        input.plane(b, 4 * ch)[i * w + j],
                        input.plane(b, 4 * ch + 1)[i * w + j],
                        input.plane(b, 4 * ch + 2)[i * w + j],
                        input.plane(b, 4 * ch + 3)[i * w + j],
                    ];
                    let dst = out.plane_mut(b, ch);
                    let offsets = [2 * i * ow + 2 * j, 2 * i * ow + 2 * j + 1, (2 * i + 1) * ow + 2 * j, (2 * i + 1) * ow + 2 * j + 1];
                    for (pixel, &off) in offsets.iter().enumerate() {
                        let v: f64 = (0..4).map(|band| SIGNS[band][pixel] * bands[band]).sum();
                        dst[off] = scale * v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `C x H x W -> 4C x H/2 x W/2`.
pub fn haar_down(input: &Tensor) -> Result<Tensor> {
    analysis(input, 1.0)
}

/// `4C x H x W -> C x 2H x 2W`, the exact inverse of [`haar_down`].
pub fn haar_up(input: &Tensor) -> Result<Tensor> {
    synthesis(input, 0.25)
}

/// Transpose of [`haar_down`] (four times [`haar_up`]).
pub fn haar_down_adjoint(grad: &Tensor) -> Result<Tensor> {
    synthesis(grad, 1.0)
}

/// Transpose of [`haar_up`] (a quarter of [`haar_down`]).
pub fn haar_up_adjoint(grad: &Tensor) -> Result<Tensor> {
    analysis(grad, 0.25)
}
