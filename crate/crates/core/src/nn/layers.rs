use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// Reflect (mirror without edge repeat) index into `0..n`.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    if i < 0 {
        i = -i;
    }
    if i >= n {
        i = 2 * (n - 1) - i;
    }
    i as usize
}

/// Dot product with four interleaved partial sums.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// The nine sums `sum_{y,x} g[y][x] src[y + ky][x + kx]` of a 3x3 kernel
/// gradient, each accumulated in four interleaved lanes.
fn correlate_sums3(g: &[f64], cols: usize, src: &[f64], src_cols: usize) -> [f64; 9] {
    let mut acc = [[0.0f64; 4]; 9];
    let mut tail = [0.0f64; 9];
    let body = cols - cols % 4;
    for (y, g_row) in g.chunks_exact(cols).enumerate() {
        let rows = [
            &src[y * src_cols..][..cols + 2],
            &src[(y + 1) * src_cols..][..cols + 2],
            &src[(y + 2) * src_cols..][..cols + 2],
        ];
        let mut x = 0;
        while x < body {
            let gv: &[f64; 4] = g_row[x..x + 4].try_into().expect("chunk");
            for (ky, row) in rows.iter().enumerate() {
                for kx in 0..3 {
                    let sv: &[f64; 4] = row[x + kx..x + kx + 4].try_into().expect("chunk");
                    let a = &mut acc[ky * 3 + kx];
                    for l in 0..4 {
                        a[l] += gv[l] * sv[l];
                    }
                }
            }
            x += 4;
        }
        for x in body..cols {
            for (ky, row) in rows.iter().enumerate() {
                for kx in 0..3 {
                    tail[ky * 3 + kx] += g_row[x] * row[x + kx];
                }
            }
        }
    }
    let mut out = [0.0; 9];
    for t in 0..9 {
        let a = acc[t];
        out[t] = (a[0] + a[1]) + (a[2] + a[3]) + tail[t];
    }
    out
}

/// `dst += src (*) kernel`, a valid-region cross-correlation with a `k x k`
/// kernel. `dst` rows are `cols` wide, `src` rows `src_cols` wide, and `src`
/// has at least `k - 1` more rows than `dst`.
fn correlate_acc(dst: &mut [f64], cols: usize, src: &[f64], src_cols: usize, kernel: &[f64], k: usize) {
    if k == 3 {
        let kk: &[f64; 9] = kernel.try_into().expect("3x3 kernel");
        for (y, out) in dst.chunks_exact_mut(cols).enumerate() {
            let r0 = &src[y * src_cols..][..cols + 2];
            let r1 = &src[(y + 1) * src_cols..][..cols + 2];
            let r2 = &src[(y + 2) * src_cols..][..cols + 2];
            let (a0, a1, a2) = (&r0[..cols], &r0[1..cols + 1], &r0[2..cols + 2]);
            let (b0, b1, b2) = (&r1[..cols], &r1[1..cols + 1], &r1[2..cols + 2]);
            let (c0, c1, c2) = (&r2[..cols], &r2[1..cols + 1], &r2[2..cols + 2]);
            for x in 0..cols {
                out[x] += (kk[0] * a0[x] + kk[1] * a1[x] + kk[2] * a2[x])
                    + (kk[3] * b0[x] + kk[4] * b1[x] + kk[5] * b2[x])
                    + (kk[6] * c0[x] + kk[7] * c1[x] + kk[8] * c2[x]);
            }
        }
        return;
    }
    for (y, out) in dst.chunks_exact_mut(cols).enumerate() {
        for ky in 0..k {
            let row = &src[(y + ky) * src_cols..];
            for kx in 0..k {
                let wv = kernel[ky * k + kx];
                for (o, v) in out.iter_mut().zip(&row[kx..kx + cols]) {
                    *o += wv * v;
                }
            }
        }
    }
}

/// Square-kernel, stride-1 cross-correlation with reflect padding so that
/// the output keeps the input's spatial size.
#[derive(Clone, Debug)]
pub struct Conv2d {
    pub weight: Tensor,
    pub bias: Tensor,
    kernel: usize,
    cache: Option<ConvCache>,
}

#[derive(Clone, Debug)]
struct ConvCache {
    input_shape: [usize; 4],
    padded: Vec<f64>,
}

impl Conv2d {
    /// `weight` has shape `[out, in, k, k]`, `bias` shape `[1, out, 1, 1]`.
    pub fn new(weight: Tensor, bias: Tensor) -> Result<Self> {
        let [out_c, _, kh, kw] = weight.shape();
        if kh != kw || kh % 2 == 0 {
            return Err(Error::InvalidParameter(alloc::format!("kernel must be square and odd, got {kh}x{kw}")));
        }
        bias.check_shape([1, out_c, 1, 1])?;
        Ok(Self {
            weight,
            bias,
            kernel: kh,
            cache: None,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    fn pad(&self, input: &Tensor) -> Result<Vec<f64>> {
        let [n, c, h, w] = input.shape();
        let p = self.kernel / 2;
        if p > 0 && (h <= p || w <= p) {
            return Err(Error::InvalidParameter(alloc::format!("{h}x{w} input too small for reflect padding")));
        }
        let (ph, pw) = (h + 2 * p, w + 2 * p);
        let mut padded = vec![0.0; n * c * ph * pw];
        for b in 0..n {
            for ch in 0..c {
                let src = input.plane(b, ch);
                let dst = &mut padded[(b * c + ch) * ph * pw..][..ph * pw];
                for y in 0..ph {
                    let sy = reflect(y as isize - p as isize, h);
                    for x in 0..pw {
                        let sx = reflect(x as isize - p as isize, w);
                        dst[y * pw + x] = src[sy * w + sx];
                    }
                }
            }
        }
        Ok(padded)
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let [n, c, h, w] = input.shape();
        if c != self.in_channels() {
            return Err(Error::TensorShape {
                expected: [n, self.in_channels(), h, w],
                found: input.shape(),
            });
        }
        let k = self.kernel;
        let p = k / 2;
        let (ph, pw) = (h + 2 * p, w + 2 * p);
        let padded = self.pad(input)?;
        let out_c = self.out_channels();
        let mut out = Tensor::zeros([n, out_c, h, w]);
        let weights = self.weight.data();
        let bias = self.bias.data();
        for b in 0..n {
            for oc in 0..out_c {
                let dst = out.plane_mut(b, oc);
                dst.iter_mut().for_each(|v| *v = bias[oc]);
                for ic in 0..c {
                    let src = &padded[(b * c + ic) * ph * pw..][..ph * pw];
                    let kernel = &weights[(oc * c + ic) * k * k..][..k * k];
                    correlate_acc(dst, w, src, pw, kernel, k);
                }
            }
        }
        self.cache = Some(ConvCache {
            input_shape: input.shape(),
            padded,
        });
        Ok(out)
    }

    /// Accumulates weight and bias gradients; returns the input gradient.
    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("backward called before forward".into()))?;
        let [n, c, h, w] = cache.input_shape;
        let out_c = self.out_channels();
        grad_out.check_shape([n, out_c, h, w])?;
        let k = self.kernel;
        let p = k / 2;
        let (ph, pw) = (h + 2 * p, w + 2 * p);
        // The padded-input gradient is a full correlation of the output
        // gradient with the flipped kernel.
        let q = k - 1;
        let (zh, zw) = (h + 2 * q, w + 2 * q);
        let mut zero_padded = vec![0.0; n * out_c * zh * zw];
        for b in 0..n {
            for oc in 0..out_c {
                let g = grad_out.plane(b, oc);
                let dst = &mut zero_padded[(b * out_c + oc) * zh * zw..][..zh * zw];
                for y in 0..h {
                    dst[(y + q) * zw + q..][..w].copy_from_slice(&g[y * w..][..w]);
                }
            }
        }
        let weights = self.weight.data();
        let flipped: Vec<f64> = (0..weights.len())
            .map(|i| {
                let (base, t) = (i - i % (k * k), i % (k * k));
                weights[base + k * k - 1 - t]
            })
            .collect();
        let mut grad_padded = vec![0.0; n * c * ph * pw];
        for b in 0..n {
            for ic in 0..c {
                let gp = &mut grad_padded[(b * c + ic) * ph * pw..][..ph * pw];
                for oc in 0..out_c {
                    let src = &zero_padded[(b * out_c + oc) * zh * zw..][..zh * zw];
                    let kernel = &flipped[(oc * c + ic) * k * k..][..k * k];
                    correlate_acc(gp, pw, src, zw, kernel, k);
                }
            }
        }
        let wgrad = self.weight.grad_mut().expect("conv weight is trainable");
        for b in 0..n {
            for oc in 0..out_c {
                let g = grad_out.plane(b, oc);
                for ic in 0..c {
                    let src = &cache.padded[(b * c + ic) * ph * pw..][..ph * pw];
                    let wg = &mut wgrad[(oc * c + ic) * k * k..][..k * k];
                    if k == 3 {
                        let acc = correlate_sums3(g, w, src, pw);
                        wg.iter_mut().zip(acc).for_each(|(a, b)| *a += b);
                        continue;
                    }
                    for (y, g_row) in g.chunks_exact(w).enumerate() {
                        for ky in 0..k {
                            let row = &src[(y + ky) * pw..];
                            for kx in 0..k {
                                wg[ky * k + kx] += dot(g_row, &row[kx..kx + w]);
                            }
                        }
                    }
                }
            }
        }
        {
            let bgrad = self.bias.grad_mut().expect("conv bias is trainable");
            for b in 0..n {
                for (oc, bg) in bgrad.iter_mut().enumerate() {
                    *bg += grad_out.plane(b, oc).iter().sum::<f64>();
                }
            }
        }
        // Fold the padded gradient back through the reflection.
        let mut grad_in = Tensor::zeros([n, c, h, w]);
        for b in 0..n {
            for ch in 0..c {
                let gp = &grad_padded[(b * c + ch) * ph * pw..][..ph * pw];
                let dst = grad_in.plane_mut(b, ch);
                for y in 0..ph {
                    let sy = reflect(y as isize - p as isize, h);
                    for x in 0..pw {
                        let sx = reflect(x as isize - p as isize, w);
                        dst[sy * w + sx] += gp[y * pw + x];
                    }
                }
            }
        }
        Ok(grad_in)
    }
}

/// Per-channel normalization with batch statistics over batch and space.
#[derive(Clone, Debug)]
pub struct BatchNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub eps: f64,
    cache: Option<BnCache>,
}

#[derive(Clone, Debug)]
struct BnCache {
    shape: [usize; 4],
    normalized: Vec<f64>,
    inv_std: Vec<f64>,
}

impl BatchNorm {
    pub const DEFAULT_EPS: f64 = 1e-5;

    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Tensor::parameter([1, channels, 1, 1], vec![1.0; channels]).expect("shape"),
            beta: Tensor::parameter([1, channels, 1, 1], vec![0.0; channels]).expect("shape"),
            eps: Self::DEFAULT_EPS,
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let [n, c, h, w] = input.shape();
        if c != self.channels() {
            return Err(Error::TensorShape {
                expected: [n, self.channels(), h, w],
                found: input.shape(),
            });
        }
        let count = (n * h * w) as f64;
        let mut out = Tensor::zeros(input.shape());
        let mut normalized = vec![0.0; input.len()];
        let mut inv_std = vec![0.0; c];
        let hw = h * w;
        for ch in 0..c {
            let mut mean = 0.0;
            for b in 0..n {
                mean += input.plane(b, ch).iter().sum::<f64>();
            }
            mean /= count;
            let mut var = 0.0;
            for b in 0..n {
                var += input.plane(b, ch).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
            }
            var /= count;
            let istd = 1.0 / libm::sqrt(var + self.eps);
            inv_std[ch] = istd;
            let (g, bt) = (self.gamma.data()[ch], self.beta.data()[ch]);
            for b in 0..n {
                let start = (b * c + ch) * hw;
                let src = input.plane(b, ch);
                let xn = &mut normalized[start..start + hw];
                for (d, s) in xn.iter_mut().zip(src) {
                    *d = (s - mean) * istd;
                }
                for (o, x) in out.plane_mut(b, ch).iter_mut().zip(xn.iter()) {
                    *o = g * x + bt;
                }
            }
        }
        self.cache = Some(BnCache {
            shape: input.shape(),
            normalized,
            inv_std,
        });
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("backward called before forward".into()))?;
        grad_out.check_shape(cache.shape)?;
        let [n, c, h, w] = cache.shape;
        let hw = h * w;
        let count = (n * hw) as f64;
        let mut grad_in = Tensor::zeros(cache.shape);
        let gamma = self.gamma.data().to_vec();
        let mut dgamma = vec![0.0; c];
        let mut dbeta = vec![0.0; c];
        for ch in 0..c {
            let mut sum_g = 0.0;
            let mut sum_gx = 0.0;
            for b in 0..n {
                let xn = &cache.normalized[(b * c + ch) * hw..][..hw];
                for (g, x) in grad_out.plane(b, ch).iter().zip(xn) {
                    sum_g += g;
                    sum_gx += g * x;
                }
            }
            dgamma[ch] = sum_gx;
            dbeta[ch] = sum_g;
            let scale = gamma[ch] * cache.inv_std[ch] / count;
            for b in 0..n {
                let xn = &cache.normalized[(b * c + ch) * hw..][..hw];
                let g = grad_out.plane(b, ch);
                let dst = grad_in.plane_mut(b, ch);
                for i in 0..hw {
                    dst[i] = scale * (count * g[i] - sum_g - xn[i] * sum_gx);
                }
            }
        }
        for (d, v) in self.gamma.grad_mut().expect("trainable").iter_mut().zip(&dgamma) {
            *d += v;
        }
        for (d, v) in self.beta.grad_mut().expect("trainable").iter_mut().zip(&dbeta) {
            *d += v;
        }
        Ok(grad_in)
    }
}

#[derive(Clone, Debug)]
pub struct LeakyRelu {
    pub slope: f64,
    mask: Vec<bool>,
    shape: [usize; 4],
}

impl LeakyRelu {
    pub fn new(slope: f64) -> Self {
        Self {
            slope,
            mask: Vec::new(),
            shape: [0; 4],
        }
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        self.mask = input.data().iter().map(|&v| v > 0.0).collect();
        self.shape = input.shape();
        let data = input.data().iter().map(|&v| if v > 0.0 { v } else { self.slope * v }).collect();
        Tensor::from_vec(input.shape(), data)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        grad_out.check_shape(self.shape)?;
        let data = grad_out
            .data()
            .iter()
            .zip(&self.mask)
            .map(|(&g, &pos)| if pos { g } else { self.slope * g })
            .collect();
        Tensor::from_vec(self.shape, data)
    }
}

/// Squashes channel 0 to an amplitude in `[0, 1]` (logistic) and channel 1
/// to a phase in `[-pi, pi]` (`pi tanh`).
#[derive(Clone, Debug, Default)]
pub struct AmplitudePhaseHead {
    output: Option<Tensor>,
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

impl AmplitudePhaseHead {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let [n, c, h, w] = input.shape();
        if c == 0 || c > 2 {
            return Err(Error::TensorShape {
                expected: [n, 2, h, w],
                found: input.shape(),
            });
        }
        let mut out = input.clone();
        for b in 0..n {
            out.plane_mut(b, 0).iter_mut().for_each(|v| *v = logistic(*v));
            if c == 2 {
                out.plane_mut(b, 1).iter_mut().for_each(|v| *v = PI * libm::tanh(*v));
            }
        }
        self.output = Some(out.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let out = self
            .output
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("backward called before forward".into()))?;
        grad_out.check_shape(out.shape())?;
        let [n, c, _, _] = out.shape();
        let mut grad = grad_out.clone();
        for b in 0..n {
            for (g, &a) in grad.plane_mut(b, 0).iter_mut().zip(out.plane(b, 0)) {
                *g *= a * (1.0 - a);
            }
            if c == 2 {
                for (g, &p) in grad.plane_mut(b, 1).iter_mut().zip(out.plane(b, 1)) {
                    let t = p / PI;
                    *g *= PI * (1.0 - t * t);
                }
            }
        }
        Ok(grad)
    }
}
