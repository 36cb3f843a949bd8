//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Oracles (direct DFT, finite differences, double loops) are written out
//! here rather than borrowed from the library. The heavy reconstructions go
//! through the file pipeline and leave their artifacts, including the Pi
//! snapshot sequence, under `$CARGO_TARGET_TMPDIR/acceptance`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use holo::config::{ExperimentConfig, SupportSource, TargetSpec};
use holo::pipeline::{self, RunSummary};
use holo::report::read_loss_csv;
use holo_core::dip::dip_loss;
use holo_core::fft::{frequencies, Fft2};
use holo_core::metrics::{canny_edges, mean_edge_factor, mse, psnr, ssim, CannyParams};
use holo_core::nn::*;
use holo_core::optics::{propagate, synthesize_hologram, Propagator};
use holo_core::targets::{generate_target, DiskParams, TargetKind};
use holo_core::tie::{simulate_stack, tie_reconstruct};
use holo_core::twist::{LinearModel, MONOTONE_GRACE};
use holo_core::{Complex64, ComplexField, Grid2, Hologram, Method, OpticalConfig, SynthesisOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    criterion: usize,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn report(criterion: usize, title: &'static str, pass: bool, detail: String) -> Outcome {
    let o = Outcome { criterion, title, pass, detail };
    eprintln!("  finished criterion {}: {}", o.criterion, if o.pass { "PASS" } else { "FAIL" });
    o
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_complex(len: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn random_tensor(shape: [usize; 4], rng: &mut ChaCha8Rng) -> Tensor {
    let len = shape.iter().product();
    Tensor::from_vec(shape, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

fn rel_complex(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    max_norm(&d) / max_norm(b)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

// ---------------------------------------------------------------- 1

fn direct_dft2(x: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    for kr in 0..rows {
        for kc in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..rows {
                for c in 0..cols {
                    let a = -2.0 * PI * ((kr * r) as f64 / rows as f64 + (kc * c) as f64 / cols as f64);
                    acc += x[r * cols + c] * Complex64::from_polar(1.0, a);
                }
            }
            out[kr * cols + kc] = acc;
        }
    }
    out
}

/// Random field whose spectrum stays inside 0.8 of the propagating disk.
fn band_limited(cfg: &OpticalConfig, rng: &mut ChaCha8Rng) -> Grid2<Complex64> {
    let (n, m) = cfg.shape();
    let mut spectrum = random_complex(n * m, rng);
    let fy = frequencies(n, cfg.pixel_pitch);
    let fx = frequencies(m, cfg.pixel_pitch);
    for r in 0..n {
        for c in 0..m {
            if (cfg.wavelength * fy[r]).powi(2) + (cfg.wavelength * fx[c]).powi(2) > 0.8 {
                spectrum[r * m + c] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Fft2::new(n, m).inverse(&mut spectrum);
    Grid2::from_vec(n, m, spectrum).unwrap()
}

fn criterion_transforms() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut haar: f64 = 0.0;
    for _ in 0..100 {
        let shape = [
            r.random_range(1..3),
            r.random_range(1..5),
            2 * r.random_range(1..9),
            2 * r.random_range(1..9),
        ];
        let x = random_tensor(shape, &mut r);
        let y = haar_up(&haar_down(&x).unwrap()).unwrap();
        let err = x.data().iter().zip(y.data()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        haar = haar.max(err / max_abs(x.data()));
    }
    let mut round_trip: f64 = 0.0;
    for pitch in [4e-6, 1e-6, 0.4e-6, 0.3e-6] {
        let cfg = OpticalConfig::new(532e-9, 1.5e-3, pitch, 64, 64).unwrap();
        for _ in 0..3 {
            let values = band_limited(&cfg, &mut r);
            let field = ComplexField::new(values.clone(), cfg).unwrap();
            let z = 20.0 * pitch;
            let back = propagate(&propagate(&field, z), -z);
            round_trip = round_trip.max(rel_complex(back.values.as_slice(), values.as_slice()));
        }
    }
    let mut fft: f64 = 0.0;
    for rows in 1..=16 {
        for cols in [1, 3, 8, 13, 16] {
            let x = random_complex(rows * cols, &mut r);
            let mut y = x.clone();
            Fft2::new(rows, cols).forward(&mut y);
            fft = fft.max(rel_complex(&y, &direct_dft2(&x, rows, cols)));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        "exact transforms",
        haar <= 1e-12 && round_trip <= 1e-9 && fft <= 1e-10 && secs < 60.0,
        format!("haar {haar:.1e} (<=1e-12), propagation {round_trip:.1e} (<=1e-9), fft {fft:.1e} (<=1e-10), {secs:.1} s (<60 s)"),
    )
}

// ---------------------------------------------------------------- 2

const H: f64 = 1e-5;

fn rel_error(fd: &[f64], analytic: &[f64]) -> f64 {
    let diff: Vec<f64> = fd.iter().zip(analytic).map(|(a, b)| a - b).collect();
    max_abs(&diff) / max_abs(analytic).max(1e-300)
}

fn layer_params(layer: &mut Layer) -> Vec<&mut Tensor> {
    match layer {
        Layer::Conv(c) => vec![&mut c.weight, &mut c.bias],
        Layer::BatchNorm(b) => vec![&mut b.gamma, &mut b.beta],
        _ => vec![],
    }
}

/// Worst relative error of input and parameter gradients of
/// `x -> sum(w * layer(x))` against central differences.
fn layer_gradient_error(layer: &mut Layer, x: &Tensor, r: &mut ChaCha8Rng) -> f64 {
    let y = layer.forward(x).unwrap();
    let w = random_tensor(y.shape(), r);
    let dx = layer.backward(&w).unwrap();
    let analytic: Vec<Vec<f64>> = layer_params(layer).iter().map(|t| t.grad().unwrap().to_vec()).collect();

    let fd_input: Vec<f64> = (0..x.len())
        .map(|i| {
            let mut xp = x.clone();
            xp.data_mut()[i] += H;
            let lp = dot(layer.forward(&xp).unwrap().data(), w.data());
            xp.data_mut()[i] -= 2.0 * H;
            let lm = dot(layer.forward(&xp).unwrap().data(), w.data());
            (lp - lm) / (2.0 * H)
        })
        .collect();
    let mut worst = rel_error(&fd_input, dx.data());
    for (p, grad) in analytic.iter().enumerate() {
        let fd: Vec<f64> = (0..grad.len())
            .map(|i| {
                let mut at = |delta: f64| {
                    layer_params(layer).swap_remove(p).data_mut()[i] += delta;
                    let v = dot(layer.forward(x).unwrap().data(), w.data());
                    layer_params(layer).swap_remove(p).data_mut()[i] -= delta;
                    v
                };
                (at(H) - at(-H)) / (2.0 * H)
            })
            .collect();
        worst = worst.max(rel_error(&fd, grad));
    }
    worst
}

fn conv_layer(out_c: usize, in_c: usize, k: usize, r: &mut ChaCha8Rng) -> Layer {
    let w = random_tensor([out_c, in_c, k, k], r).into_data();
    let b = random_tensor([1, out_c, 1, 1], r).into_data();
    Layer::Conv(
        Conv2d::new(
            Tensor::parameter([out_c, in_c, k, k], w).unwrap(),
            Tensor::parameter([1, out_c, 1, 1], b).unwrap(),
        )
        .unwrap(),
    )
}

fn criterion_gradients() -> Outcome {
    let start = Instant::now();
    let mut r = rng(202);
    let mut layers: Vec<(&str, f64)> = Vec::new();

    let mut l = conv_layer(3, 2, 3, &mut r);
    let x = random_tensor([2, 2, 5, 6], &mut r);
    layers.push(("conv3x3", layer_gradient_error(&mut l, &x, &mut r)));
    let mut l = conv_layer(2, 4, 1, &mut r);
    let x = random_tensor([1, 4, 4, 4], &mut r);
    layers.push(("conv1x1", layer_gradient_error(&mut l, &x, &mut r)));
    let mut bn = BatchNorm::new(3);
    for (g, b) in bn.gamma.data_mut().iter_mut().zip(bn.beta.data_mut()) {
        *g = r.random_range(0.5..1.5);
        *b = r.random_range(-0.5..0.5);
    }
    let x = random_tensor([2, 3, 4, 4], &mut r);
    layers.push(("batchnorm", layer_gradient_error(&mut Layer::BatchNorm(bn), &x, &mut r)));
    let mut x = random_tensor([1, 2, 4, 4], &mut r);
    x.data_mut().iter_mut().filter(|v| v.abs() < 1e-2).for_each(|v| *v = 0.5);
    layers.push(("leaky_relu", layer_gradient_error(&mut Layer::LeakyRelu(LeakyRelu::new(LEAKY_SLOPE)), &x, &mut r)));
    let x = random_tensor([1, 2, 4, 6], &mut r);
    layers.push(("haar_down", layer_gradient_error(&mut Layer::HaarDown, &x, &mut r)));
    let x = random_tensor([1, 8, 2, 3], &mut r);
    layers.push(("haar_up", layer_gradient_error(&mut Layer::HaarUp, &x, &mut r)));
    let x = random_tensor([1, 2, 4, 4], &mut r);
    layers.push(("head", layer_gradient_error(&mut Layer::Head(AmplitudePhaseHead::new()), &x, &mut r)));
    let layer_worst = layers.iter().map(|(_, e)| *e).fold(0.0, f64::max);

    // Full 16x16 hourglass through the physics loss.
    let cfg = OpticalConfig::new(532e-9, 0.4e-3, 4e-6, 16, 16).unwrap();
    let object = generate_target(&TargetKind::Bars, &cfg).unwrap();
    let holo = synthesize_hologram(&object, &SynthesisOptions::default()).unwrap();
    let op = Propagator::carrier_free(&cfg, cfg.distance);
    let spec = build_hourglass(1, &[4, 8], 2).unwrap();
    let mut net = Network::new(&spec, 3).unwrap();
    let input = Tensor::from_vec([1, 1, 16, 16], holo.intensity.as_slice().to_vec()).unwrap();
    let loss_of = |net: &mut Network| {
        let out = net.forward(&input).unwrap();
        dip_loss(out.plane(0, 0), out.plane(0, 1), &holo, &op).unwrap()
    };
    let e = loss_of(&mut net);
    let out = net.forward(&input).unwrap();
    let mut g = Tensor::zeros(out.shape());
    g.plane_mut(0, 0).copy_from_slice(&e.grad_amplitude);
    g.plane_mut(0, 1).copy_from_slice(&e.grad_phase);
    net.zero_grad();
    net.backward(&g).unwrap();
    let analytic: Vec<Vec<f64>> = net.parameters().iter().map(|p| p.grad().unwrap().to_vec()).collect();
    // Biases feeding batch normalization have an exactly zero gradient, so
    // each tensor's error is scaled by at least 1e-6 of the largest gradient.
    let global = analytic.iter().map(|g| max_abs(g)).fold(0.0, f64::max);
    let mut network_worst: f64 = 0.0;
    for (p, grad) in analytic.iter().enumerate() {
        let mut fd = Vec::with_capacity(grad.len());
        for i in 0..grad.len() {
            net.parameters_mut()[p].data_mut()[i] += H;
            let lp = loss_of(&mut net).loss;
            net.parameters_mut()[p].data_mut()[i] -= 2.0 * H;
            let lm = loss_of(&mut net).loss;
            net.parameters_mut()[p].data_mut()[i] += H;
            fd.push((lp - lm) / (2.0 * H));
        }
        let diff: Vec<f64> = fd.iter().zip(grad).map(|(a, b)| a - b).collect();
        network_worst = network_worst.max(max_abs(&diff) / max_abs(grad).max(1e-6 * global));
    }
    let secs = start.elapsed().as_secs_f64();
    let per_layer: Vec<String> = layers.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    report(
        2,
        "gradients",
        layer_worst <= 1e-4 && network_worst <= 1e-3 && secs < 300.0,
        format!(
            "layers worst {layer_worst:.1e} (<=1e-4: {}), hourglass [4,8] {network_worst:.1e} (<=1e-3), {secs:.1} s (<300 s)",
            per_layer.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 3

fn criterion_adjoints() -> Outcome {
    const PAIRS: usize = 50;
    let mut r = rng(303);
    let rel = |l: f64, rr: f64, scale: f64| (l - rr).abs() / scale.max(l.abs()).max(1e-300);
    let mut worst: Vec<(&str, f64)> = vec![("propagation", 0.0), ("linear model", 0.0), ("conv", 0.0), ("haar", 0.0)];

    for i in 0..PAIRS {
        let pitch = if i % 2 == 0 { 4e-6 } else { 0.3e-6 };
        let cfg = OpticalConfig::new(532e-9, 1e-3, pitch, 16, 12).unwrap();
        for op in [Propagator::new(&cfg, 0.8e-3), Propagator::carrier_free(&cfg, -0.3e-3)] {
            let x = random_complex(cfg.pixels(), &mut r);
            let y = random_complex(cfg.pixels(), &mut r);
            let (mut ax, mut aty) = (x.clone(), y.clone());
            op.forward(&mut ax);
            op.adjoint(&mut aty);
            let l: Complex64 = ax.iter().zip(&y).map(|(a, b)| a * b.conj()).sum();
            let rr: Complex64 = x.iter().zip(&aty).map(|(a, b)| a * b.conj()).sum();
            let scale = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() * y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            worst[0].1 = worst[0].1.max((l - rr).norm() / scale);
        }
    }
    let cfg = OpticalConfig::new(532e-9, 1.5e-3, 4e-6, 16, 16).unwrap();
    let model = LinearModel::new(&Hologram::new(Grid2::filled(16, 16, 1.0), cfg).unwrap());
    for _ in 0..PAIRS {
        let x: Vec<f64> = (0..256).map(|_| r.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..256).map(|_| r.random_range(-1.0..1.0)).collect();
        let (l, rr) = (dot(&model.apply(&x), &y), dot(&x, &model.adjoint(&y)));
        worst[1].1 = worst[1].1.max(rel(l, rr, dot(&x, &x).sqrt() * dot(&y, &y).sqrt()));
    }
    for i in 0..PAIRS {
        let k = if i % 3 == 0 { 1 } else { 3 };
        let w = random_tensor([4, 3, k, k], &mut r).into_data();
        let mut conv = Conv2d::new(
            Tensor::parameter([4, 3, k, k], w).unwrap(),
            Tensor::parameter([1, 4, 1, 1], vec![0.0; 4]).unwrap(),
        )
        .unwrap();
        let x = random_tensor([1, 3, 5, 7], &mut r);
        let y = random_tensor([1, 4, 5, 7], &mut r);
        let l = dot(conv.forward(&x).unwrap().data(), y.data());
        let rr = dot(x.data(), conv.backward(&y).unwrap().data());
        worst[2].1 = worst[2].1.max(rel(l, rr, dot(x.data(), x.data()).sqrt() * dot(y.data(), y.data()).sqrt()));
    }
    for _ in 0..PAIRS {
        let x = random_tensor([1, 3, 6, 8], &mut r);
        let y = random_tensor([1, 12, 3, 4], &mut r);
        let scale = dot(x.data(), x.data()).sqrt() * dot(y.data(), y.data()).sqrt();
        let l = dot(haar_down(&x).unwrap().data(), y.data());
        let rr = dot(x.data(), haar_down_adjoint(&y).unwrap().data());
        worst[3].1 = worst[3].1.max(rel(l, rr, scale));
        let l = dot(haar_up(&y).unwrap().data(), x.data());
        let rr = dot(y.data(), haar_up_adjoint(&x).unwrap().data());
        worst[3].1 = worst[3].1.max(rel(l, rr, scale));
    }
    let all = worst.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    let parts: Vec<String> = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    report(3, "adjoints", all <= 1e-10, format!("{} (<=1e-10, {PAIRS} pairs each)", parts.join(", ")))
}

// ---------------------------------------------------------------- 7

fn random_image(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> Grid2<f64> {
    Grid2::from_fn(rows, cols, |_, _| r.random_range(0.0..1.0))
}

fn criterion_metrics() -> Outcome {
    let mut r = rng(707);
    let mut worst: f64 = 0.0;
    let mut ssim_ok = true;
    let mut edge_exact = true;
    for _ in 0..10 {
        let x = random_image(24, 20, &mut r);
        let y = random_image(24, 20, &mut r);
        let mut acc = 0.0;
        for i in 0..24 {
            for j in 0..20 {
                acc += (x[(i, j)] - y[(i, j)]).powi(2);
            }
        }
        let oracle_mse = acc / 480.0;
        worst = worst.max((mse(&x, &y).unwrap() - oracle_mse).abs());
        worst = worst.max((psnr(&x, &y, 1.0).unwrap() - 10.0 * (1.0 / oracle_mse).log10()).abs());
        worst = worst.max((psnr(&x, &y, 255.0).unwrap() - 20.0 * 255f64.log10() + 10.0 * oracle_mse.log10()).abs());
        let (a, b) = (ssim(&x, &y, 1.0).unwrap(), ssim(&y, &x, 1.0).unwrap());
        ssim_ok &= ssim(&x, &x, 1.0).unwrap() == 1.0 && (a - b).abs() <= 1e-12;

        let e = canny_edges(&x, &CannyParams::default());
        let ones = e.edges.iter().filter(|&&v| v == 1).count();
        edge_exact &= mean_edge_factor(&e) == ones as f64 / 480.0;
    }
    report(
        7,
        "metrics",
        worst <= 1e-12 && ssim_ok && edge_exact,
        format!("mse/psnr oracle gap {worst:.1e} (<=1e-12), ssim identity and symmetry {ssim_ok}, edge factor is the exact mean {edge_exact}"),
    )
}

// ---------------------------------------------------------------- 9

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut pending = vec![root.to_path_buf()];
    while let Some(dir) = pending.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                pending.push(path);
            } else {
                let bytes = std::fs::read(&path).unwrap();
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), bytes));
            }
        }
    }
    out.sort();
    out
}

fn strip_output_dir(bytes: &[u8]) -> Vec<u8> {
    String::from_utf8_lossy(bytes)
        .lines()
        .filter(|l| !l.starts_with("output_dir="))
        .collect::<Vec<_>>()
        .join("\n")
        .into_bytes()
}

fn criterion_determinism(root: &Path) -> Outcome {
    let mut identical = Vec::new();
    for method in Method::ALL {
        let mut cfg = ExperimentConfig::default();
        cfg.optical.height = 64;
        cfg.optical.width = 64;
        cfg.method = method;
        cfg.pr.iterations = 40;
        cfg.cs.iterations = 40;
        cfg.dip.epochs = 30;
        cfg.dip.stages = vec![4, 8];
        cfg.dip.snapshots = vec![10, 30];
        if method == Method::Tie {
            cfg.target = TargetSpec::Disk(DiskParams::weak_phase());
        }
        let dir = root.join(format!("determinism_{}", method.tag()));
        let _ = std::fs::remove_dir_all(&dir);
        cfg.output_dir = dir.join("a");
        pipeline::run_pipeline(&cfg).unwrap();
        let mut again = ExperimentConfig::load(&cfg.output_dir.join(pipeline::MANIFEST)).unwrap();
        again.output_dir = dir.join("b");
        pipeline::run_pipeline(&again).unwrap();
        let (a, b) = (tree(&cfg.output_dir), tree(&again.output_dir));
        let same = a.len() == b.len()
            && a.iter().zip(&b).all(|((na, ba), (nb, bb))| {
                na == nb
                    && if na == Path::new(pipeline::MANIFEST) {
                        strip_output_dir(ba) == strip_output_dir(bb)
                    } else {
                        ba == bb
                    }
            });
        identical.push((method.tag(), same, a.len()));
    }
    let parts: Vec<String> = identical.iter().map(|(m, s, n)| format!("{m} {} ({n} files)", if *s { "identical" } else { "DIFFERS" })).collect();
    report(9, "determinism", identical.iter().all(|(_, s, _)| *s), parts.join(", "))
}

// ------------------------------------------------------- 4, 5, 6, 8

fn run(cfg: &ExperimentConfig) -> RunSummary {
    let _ = std::fs::remove_dir_all(&cfg.output_dir);
    let summary = pipeline::run_pipeline(cfg).unwrap();
    eprintln!(
        "  {} on {}: {:.2} dB in {:.1} s",
        cfg.method.tag(),
        cfg.output_dir.display(),
        summary.metrics.psnr,
        summary.result.wall_time
    );
    summary
}

fn bars(root: &Path, method: Method) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    assert_eq!(cfg.optical, OpticalConfig::new(532e-9, 1.5e-3, 4e-6, 128, 128).unwrap());
    assert_eq!((cfg.noise_std, cfg.seed, &cfg.target), (0.01, 0, &TargetSpec::Bars));
    cfg.method = method;
    cfg.cs.tau = 0.05;
    cfg.cs.iterations = 200;
    cfg.dip.epochs = 1000;
    // The bars are a pure amplitude object, so the network only has to
    // produce an amplitude map.
    cfg.dip.output_channels = 1;
    cfg.output_dir = root.join(format!("bars_{}", method.tag()));
    cfg
}

/// Largest increase between consecutive entries from `skip` on.
fn worst_increase(history: &[f64], skip: usize) -> f64 {
    history.windows(2).skip(skip).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

fn loss_ratio(history: &[f64]) -> f64 {
    history[history.len() - 1] / history[0]
}

fn grid_phase(dir: &Path, name: &str) -> Grid2<f64> {
    pipeline::read_grid(dir, name).unwrap()
}

fn main() {
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&root).unwrap();
    eprintln!("acceptance artifacts in {}", root.display());
    let mut outcomes = vec![criterion_transforms(), criterion_gradients(), criterion_adjoints(), criterion_metrics()];
    outcomes.push(criterion_determinism(&root));

    // 5: bars benchmark.
    let bp = run(&bars(&root, Method::Backprop));
    let cs = run(&bars(&root, Method::CompressiveSensing));
    let dip = run(&bars(&root, Method::DeepPrior));
    let (p_bp, p_cs, p_dip) = (bp.metrics.psnr, cs.metrics.psnr, dip.metrics.psnr);
    let dip_secs = dip.result.wall_time;
    outcomes.push(report(
        5,
        "bars benchmark",
        p_dip >= p_cs && p_cs >= p_bp && p_dip >= p_bp + 3.0 && p_cs >= p_bp + 1.0 && dip_secs <= 1800.0,
        format!(
            "PSNR dip {p_dip:.2} dB, cs {p_cs:.2} dB, backprop {p_bp:.2} dB (dip-bp {:+.2} >= 3, cs-bp {:+.2} >= 1); dip 1000 epochs in {dip_secs:.0} s (<=1800 s)",
            p_dip - p_bp,
            p_cs - p_bp
        ),
    ));

    // 6: phase recovery.
    let mut disk = ExperimentConfig::default();
    disk.target = TargetSpec::Disk(DiskParams::default());
    disk.optical.distance = 6e-3;
    disk.method = Method::DeepPrior;
    disk.dip.epochs = 1000;
    disk.output_dir = root.join("disk_dip");
    let disk_run = run(&disk);
    let dip_corr = pearson(
        grid_phase(&disk.output_dir, "recon_phase").as_slice(),
        grid_phase(&disk.output_dir, "truth_phase").as_slice(),
    );
    let tie_cfg = OpticalConfig::new(532e-9, 0.0, 4e-6, 128, 128).unwrap();
    let weak = generate_target(&TargetKind::Disk(DiskParams::weak_phase()), &tie_cfg).unwrap();
    let tie = tie_reconstruct(&simulate_stack(&weak, 10, 15e-6).unwrap()).unwrap();
    let tie_corr = pearson(tie.phase.as_slice(), weak.phase().as_slice());
    outcomes.push(report(
        6,
        "phase recovery",
        dip_corr >= 0.9 && tie_corr >= 0.95,
        format!("dip on the disk fixture at z = 6 mm: r = {dip_corr:.4} (>=0.9); tie, 10 planes at 15 um: r = {tie_corr:.4} (>=0.95)"),
    ));

    // 8: coarse-to-fine snapshots on the Pi fixture.
    let mut pi = ExperimentConfig::default();
    pi.target = TargetSpec::Pi;
    pi.method = Method::DeepPrior;
    pi.dip.epochs = 1500;
    pi.dip.snapshots = vec![100, 200, 500, 1000, 1500];
    pi.previews = true;
    pi.output_dir = root.join("pi_dip");
    let pi_run = run(&pi);
    let series = pipeline::snapshot_series(&pi.output_dir).unwrap();
    // Sharpness recomputed from the stored snapshots with forward differences.
    let sharpness: Vec<f64> = series
        .epochs
        .iter()
        .map(|e| {
            let a = pipeline::read_grid(&pi.output_dir.join(pipeline::SNAPSHOT_DIR), &format!("epoch_{e:05}_amplitude")).unwrap();
            let (rows, cols) = a.shape();
            let mut total = 0.0;
            for i in 0..rows {
                for j in 0..cols {
                    let dx = if j + 1 < cols { a[(i, j + 1)] - a[(i, j)] } else { 0.0 };
                    let dy = if i + 1 < rows { a[(i + 1, j)] - a[(i, j)] } else { 0.0 };
                    total += (dx * dx + dy * dy).sqrt();
                }
            }
            total / (rows * cols) as f64
        })
        .collect();
    let consistent = sharpness.iter().zip(&series.sharpness).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
    let sequence: Vec<String> = series.epochs.iter().zip(&sharpness).map(|(e, s)| format!("{e}:{s:.5}")).collect();
    outcomes.push(report(
        8,
        "coarse-to-fine snapshots",
        series.epochs == [100, 200, 500, 1000, 1500] && sharpness[4] > sharpness[0] && consistent,
        format!(
            "sharpness {} (last > first); snapshots in {}",
            sequence.join(" "),
            pi.output_dir.join(pipeline::SNAPSHOT_DIR).display()
        ),
    ));

    // 4: convergence, using the runs above plus a Gerchberg-Saxton run.
    let mut gs = bars(&root, Method::GerchbergSaxton);
    gs.pr.support = SupportSource::Estimate;
    let gs_run = run(&gs);
    let gs_history = read_loss_csv(&gs.output_dir.join("loss.csv")).unwrap();
    assert_eq!(gs_history, gs_run.result.loss_history);
    let gs_up = worst_increase(&gs_history, 0);
    let tw_up = worst_increase(&cs.result.loss_history, MONOTONE_GRACE - 1);
    let ratios = [
        ("bars", loss_ratio(&dip.result.loss_history)),
        ("disk", loss_ratio(&disk_run.result.loss_history)),
        ("pi", loss_ratio(&pi_run.result.loss_history)),
    ];
    let ratio_text: Vec<String> = ratios.iter().map(|(n, r)| format!("{n} {r:.1e}")).collect();
    outcomes.push(report(
        4,
        "solver convergence",
        gs_up <= 1e-9 && tw_up <= 1e-9 && ratios.iter().all(|(_, r)| *r <= 0.1),
        format!(
            "gs largest step-to-step increase {gs_up:.1e} (<=1e-9), twist after iteration {MONOTONE_GRACE} {tw_up:.1e} (<=1e-9), dip final/initial loss {} (<=0.1)",
            ratio_text.join(", ")
        ),
    ));

    outcomes.sort_by_key(|o| o.criterion);
    println!();
    for o in &outcomes {
        println!(
            "criterion {} {}: {}: {}",
            o.criterion,
            if o.pass { "PASS" } else { "FAIL" },
            o.title,
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("acceptance: {} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
