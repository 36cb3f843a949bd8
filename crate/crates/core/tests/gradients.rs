//! Central finite-difference checks of every layer and of the full
//! network trained through the hologram loss.

use holo_core::dip::dip_loss;
use holo_core::nn::*;
use holo_core::optics::{synthesize_hologram, Propagator};
use holo_core::targets::{generate_target, TargetKind};
use holo_core::{OpticalConfig, SynthesisOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;

fn random_tensor(shape: [usize; 4], rng: &mut ChaCha8Rng) -> Tensor {
    let len = shape.iter().product();
    Tensor::from_vec(shape, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn weighted_sum(y: &Tensor, r: &Tensor) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// max |fd - analytic| / max |analytic|
fn rel_error(fd: &[f64], analytic: &[f64]) -> f64 {
    let diff: Vec<f64> = fd.iter().zip(analytic).map(|(a, b)| a - b).collect();
    max_abs(&diff) / max_abs(analytic).max(1e-300)
}

/// Checks input and parameter gradients of `layer` for the functional
/// `sum(r * layer(x))`.
fn check_layer(layer: &mut Layer, x: &Tensor, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = layer.forward(x).unwrap();
    let r = random_tensor(y.shape(), &mut rng);
    let dx = layer.backward(&r).unwrap();

    let mut worst: f64 = 0.0;
    let mut fd = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut xp = x.clone();
        xp.data_mut()[i] += H;
        let lp = weighted_sum(&layer.forward(&xp).unwrap(), &r);
        xp.data_mut()[i] -= 2.0 * H;
        let lm = weighted_sum(&layer.forward(&xp).unwrap(), &r);
        fd.push((lp - lm) / (2.0 * H));
    }
    worst = worst.max(rel_error(&fd, dx.data()));

    let mut net_params = param_grads(layer);
    for (pi, analytic) in net_params.drain(..).enumerate() {
        let mut fd = Vec::with_capacity(analytic.len());
        for i in 0..analytic.len() {
            let mut eval = |delta: f64| {
                nudge(layer, pi, i, delta);
                let v = weighted_sum(&layer.forward(x).unwrap(), &r);
                nudge(layer, pi, i, -delta);
                v
            };
            let lp = eval(H);
            let lm = eval(-H);
            fd.push((lp - lm) / (2.0 * H));
        }
        worst = worst.max(rel_error(&fd, &analytic));
    }
    worst
}

fn param_tensors(layer: &mut Layer) -> Vec<&mut Tensor> {
    match layer {
        Layer::Conv(c) => vec![&mut c.weight, &mut c.bias],
        Layer::BatchNorm(b) => vec![&mut b.gamma, &mut b.beta],
        _ => vec![],
    }
}

fn param_grads(layer: &mut Layer) -> Vec<Vec<f64>> {
    param_tensors(layer).into_iter().map(|t| t.grad().unwrap().to_vec()).collect()
}

fn nudge(layer: &mut Layer, param: usize, index: usize, delta: f64) {
    param_tensors(layer).swap_remove(param).data_mut()[index] += delta;
}

fn conv(out_c: usize, in_c: usize, k: usize, rng: &mut ChaCha8Rng) -> Layer {
    let w = random_tensor([out_c, in_c, k, k], rng).into_data();
    let b = random_tensor([1, out_c, 1, 1], rng).into_data();
    Layer::Conv(Conv2d::new(Tensor::parameter([out_c, in_c, k, k], w).unwrap(), Tensor::parameter([1, out_c, 1, 1], b).unwrap()).unwrap())
}

#[test]
fn conv3x3_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut layer = conv(3, 2, 3, &mut rng);
    let x = random_tensor([2, 2, 5, 6], &mut rng);
    let e = check_layer(&mut layer, &x, 11);
    assert!(e <= 1e-4, "rel error {e}");
}

#[test]
fn conv1x1_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut layer = conv(2, 4, 1, &mut rng);
    let x = random_tensor([1, 4, 4, 4], &mut rng);
    let e = check_layer(&mut layer, &x, 12);
    assert!(e <= 1e-4, "rel error {e}");
}

#[test]
fn batchnorm_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bn = BatchNorm::new(3);
    for (g, b) in bn.gamma.data_mut().iter_mut().zip(bn.beta.data_mut()) {
        *g = rng.random_range(0.5..1.5);
        *b = rng.random_range(-0.5..0.5);
    }
    let mut layer = Layer::BatchNorm(bn);
    let x = random_tensor([2, 3, 4, 4], &mut rng);
    let e = check_layer(&mut layer, &x, 13);
    assert!(e <= 1e-4, "rel error {e}");
}

#[test]
fn leaky_relu_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut layer = Layer::LeakyRelu(LeakyRelu::new(0.1));
    // keep inputs away from the kink
    let mut x = random_tensor([1, 2, 4, 4], &mut rng);
    x.data_mut().iter_mut().for_each(|v| {
        if v.abs() < 1e-2 {
            *v = 0.5
        }
    });
    let e = check_layer(&mut layer, &x, 14);
    assert!(e <= 1e-4, "rel error {e}");
}

#[test]
fn haar_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_tensor([1, 2, 4, 6], &mut rng);
    assert!(check_layer(&mut Layer::HaarDown, &x, 15) <= 1e-4);
    let x = random_tensor([1, 8, 2, 3], &mut rng);
    assert!(check_layer(&mut Layer::HaarUp, &x, 16) <= 1e-4);
}

#[test]
fn head_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = random_tensor([1, 2, 4, 4], &mut rng);
    let e = check_layer(&mut Layer::Head(AmplitudePhaseHead::new()), &x, 17);
    assert!(e <= 1e-4, "rel error {e}");
}

fn physics_fixture(n: usize) -> (holo_core::Hologram, Propagator) {
    let cfg = OpticalConfig::new(532e-9, 0.4e-3, 4e-6, n, n).unwrap();
    let object = generate_target(&TargetKind::Bars, &cfg).unwrap();
    let holo = synthesize_hologram(&object, &SynthesisOptions::default()).unwrap();
    let op = Propagator::carrier_free(&cfg, cfg.distance);
    (holo, op)
}

fn network_loss(net: &mut Network, input: &Tensor, holo: &holo_core::Hologram, op: &Propagator) -> f64 {
    let out = net.forward(input).unwrap();
    dip_loss(out.plane(0, 0), out.plane(0, 1), holo, op).unwrap().loss
}

#[test]
fn physics_loss_gradient_matches_finite_differences() {
    let (holo, op) = physics_fixture(16);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a: Vec<f64> = (0..256).map(|_| rng.random_range(0.2..0.9)).collect();
    let p: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
    let e = dip_loss(&a, &p, &holo, &op).unwrap();
    let loss = |a: &[f64], p: &[f64]| dip_loss(a, p, &holo, &op).unwrap().loss;
    let mut fd_a = vec![];
    let mut fd_p = vec![];
    for i in 0..256 {
        let (mut ap, mut am) = (a.clone(), a.clone());
        ap[i] += H;
        am[i] -= H;
        fd_a.push((loss(&ap, &p) - loss(&am, &p)) / (2.0 * H));
        let (mut pp, mut pm) = (p.clone(), p.clone());
        pp[i] += H;
        pm[i] -= H;
        fd_p.push((loss(&a, &pp) - loss(&a, &pm)) / (2.0 * H));
    }
    assert!(rel_error(&fd_a, &e.grad_amplitude) <= 1e-6);
    assert!(rel_error(&fd_p, &e.grad_phase) <= 1e-6);
}

#[test]
fn hourglass_end_to_end_gradient() {
    let (holo, op) = physics_fixture(16);
    let spec = build_hourglass(1, &[4, 8], 2).unwrap();
    let mut net = Network::new(&spec, 3).unwrap();
    let input = Tensor::from_vec([1, 1, 16, 16], holo.intensity.as_slice().to_vec()).unwrap();

    let out = net.forward(&input).unwrap();
    let e = dip_loss(out.plane(0, 0), out.plane(0, 1), &holo, &op).unwrap();
    let mut g = Tensor::zeros(out.shape());
    g.plane_mut(0, 0).copy_from_slice(&e.grad_amplitude);
    g.plane_mut(0, 1).copy_from_slice(&e.grad_phase);
    net.zero_grad();
    net.backward(&g).unwrap();
    let analytic: Vec<Vec<f64>> = net.parameters().iter().map(|p| p.grad().unwrap().to_vec()).collect();

    // Biases feeding batch normalization have exactly zero gradient, so
    // errors are measured against the largest gradient of the network.
    let global = analytic.iter().map(|g| max_abs(g)).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    let count = analytic.len();
    for pi in 0..count {
        let mut fd = Vec::with_capacity(analytic[pi].len());
        for i in 0..analytic[pi].len() {
            net.parameters_mut()[pi].data_mut()[i] += H;
            let lp = network_loss(&mut net, &input, &holo, &op);
            net.parameters_mut()[pi].data_mut()[i] -= 2.0 * H;
            let lm = network_loss(&mut net, &input, &holo, &op);
            net.parameters_mut()[pi].data_mut()[i] += H;
            fd.push((lp - lm) / (2.0 * H));
        }
        let diff: Vec<f64> = fd.iter().zip(&analytic[pi]).map(|(a, b)| a - b).collect();
        worst = worst.max(max_abs(&diff) / max_abs(&analytic[pi]).max(1e-6 * global));
    }
    assert!(worst <= 1e-3, "worst relative error {worst}");
}
