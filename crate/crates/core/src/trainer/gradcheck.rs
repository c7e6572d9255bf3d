//! Central finite-difference checks of the analytic gradients.
//!
//! Each layer check wraps one kernel in a scalar loss `Σ rᵢ·outᵢ` with fixed
//! random `r`, so the kernel's backward pass receives `r` as its upstream
//! gradient. Inputs and parameters are perturbed alike.

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{NetSpec, ResNet};
use super::ops::{self, ConvGeom};
use super::tensor::Tensor;
use crate::error::Result;

pub const FD_STEP: f64 = 1e-5;
pub const REL_TOLERANCE: f64 = 1e-6;
/// Denominator floor: below this magnitude errors are judged absolutely.
pub const MAGNITUDE_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= REL_TOLERANCE
    }
}

/// `|a − n| / max(|a|, |n|, MAGNITUDE_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(MAGNITUDE_FLOOR)
}

/// Compares `analytic` with central differences of `loss` at `point`.
pub fn check_gradient(
    name: &str,
    point: &[f64],
    analytic: &[f64],
    mut loss: impl FnMut(&[f64]) -> f64,
) -> GradCheck {
    assert_eq!(point.len(), analytic.len());
    let mut x = point.to_vec();
    let (mut max_rel, mut max_abs) = (0.0f64, 0.0f64);
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let plus = loss(&x);
        x[i] = orig - FD_STEP;
        let minus = loss(&x);
        x[i] = orig;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        max_rel = max_rel.max(relative_error(analytic[i], numeric));
        max_abs = max_abs.max((analytic[i] - numeric).abs());
    }
    GradCheck {
        name: name.to_string(),
        checked: x.len(),
        max_rel_error: max_rel,
        max_abs_error: max_abs,
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let d = Uniform::new_inclusive(-1.0, 1.0);
    (0..n).map(|_| d.sample(rng)).collect()
}

/// Values bounded away from zero so no ReLU kink lies within the step.
fn off_zero(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let d = Uniform::new_inclusive(0.05, 1.0);
    (0..n)
        .map(|_| {
            if rng.gen::<bool>() {
                d.sample(rng)
            } else {
                -d.sample(rng)
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conv_loss(g: &ConvGeom, v: &[f64], r: &[f64]) -> f64 {
    let (i, rest) = v.split_at(g.input_len());
    let (w, b) = rest.split_at(g.weight_len());
    let (mut cols, mut out) = (Vec::new(), Vec::new());
    ops::conv_forward(i, w, b, g, &mut cols, &mut out);
    dot(&out, r)
}

fn conv_check(name: &str, g: ConvGeom, rng: &mut ChaCha8Rng) -> GradCheck {
    let v = uniform(rng, g.input_len() + g.weight_len() + g.out_c);
    let r = uniform(rng, g.output_len());
    let (i, rest) = v.split_at(g.input_len());
    let (w, b) = rest.split_at(g.weight_len());
    let (mut cols, mut out) = (Vec::new(), Vec::new());
    ops::conv_forward(i, w, b, &g, &mut cols, &mut out);
    let mut grad = vec![0.0; v.len()];
    let (di, rest) = grad.split_at_mut(g.input_len());
    let (dw, db) = rest.split_at_mut(g.weight_len());
    ops::conv_backward(&cols, w, &r, &g, dw, db, Some(di));
    check_gradient(name, &v, &grad, |v| conv_loss(&g, v, &r))
}

/// 3×3 convolution, stride 1 or 2, including input gradients.
pub fn check_conv3x3(rng: &mut ChaCha8Rng) -> GradCheck {
    let g = ConvGeom::same(
        rng.gen_range(3..=6),
        rng.gen_range(3..=6),
        rng.gen_range(1..=3),
        rng.gen_range(1..=3),
        3,
        rng.gen_range(1..=2),
    );
    conv_check("conv3x3", g, rng)
}

/// Strided 1×1 projection.
pub fn check_projection(rng: &mut ChaCha8Rng) -> GradCheck {
    let g = ConvGeom::same(
        rng.gen_range(3..=6),
        rng.gen_range(3..=6),
        rng.gen_range(1..=3),
        rng.gen_range(2..=4),
        1,
        2,
    );
    conv_check("projection1x1", g, rng)
}

pub fn check_dense(rng: &mut ChaCha8Rng) -> GradCheck {
    let (n_in, n_out) = (rng.gen_range(1..=6), rng.gen_range(1..=5));
    let v = uniform(rng, n_in + n_in * n_out + n_out);
    let r = uniform(rng, n_out);
    let split = |v: &[f64]| {
        let (x, rest) = v.split_at(n_in);
        let (w, b) = rest.split_at(n_in * n_out);
        (x.to_vec(), w.to_vec(), b.to_vec())
    };
    let (x, w, _) = split(&v);
    let mut grad = vec![0.0; v.len()];
    let (dx_out, rest) = grad.split_at_mut(n_in);
    let (dw, db) = rest.split_at_mut(n_in * n_out);
    let dx = ops::dense_backward(&x, &w, &r, dw, db);
    dx_out.copy_from_slice(&dx);
    check_gradient("dense", &v, &grad, |v| {
        let (x, w, b) = split(v);
        dot(&ops::dense_forward(&x, &w, &b), &r)
    })
}

pub fn check_relu(rng: &mut ChaCha8Rng) -> GradCheck {
    let n = rng.gen_range(4..=40);
    let x = off_zero(rng, n);
    let r = uniform(rng, n);
    let mut act = x.clone();
    ops::relu_in_place(&mut act);
    let mut grad = r.clone();
    ops::relu_backward(&act, &mut grad);
    check_gradient("relu", &x, &grad, |x| {
        let mut a = x.to_vec();
        ops::relu_in_place(&mut a);
        dot(&a, &r)
    })
}

pub fn check_global_avg_pool(rng: &mut ChaCha8Rng) -> GradCheck {
    let (positions, channels) = (rng.gen_range(1..=9), rng.gen_range(1..=4));
    let x = uniform(rng, positions * channels);
    let r = uniform(rng, channels);
    let grad = ops::global_avg_pool_backward(&r, positions);
    check_gradient("global_avg_pool", &x, &grad, |x| {
        dot(&ops::global_avg_pool(x, channels), &r)
    })
}

/// `relu(conv(x) + x)`: the identity skip joined to a convolution branch.
pub fn check_residual_add(rng: &mut ChaCha8Rng) -> GradCheck {
    let c = rng.gen_range(1..=3);
    let g = ConvGeom::same(rng.gen_range(3..=5), rng.gen_range(3..=5), c, c, 3, 1);
    let v = uniform(rng, g.input_len() + g.weight_len() + g.out_c);
    let r = uniform(rng, g.output_len());
    let forward = |v: &[f64]| {
        let (i, rest) = v.split_at(g.input_len());
        let (w, b) = rest.split_at(g.weight_len());
        let (mut cols, mut out) = (Vec::new(), Vec::new());
        ops::conv_forward(i, w, b, &g, &mut cols, &mut out);
        out.iter_mut().zip(i).for_each(|(o, x)| *o += x);
        ops::relu_in_place(&mut out);
        (cols, out)
    };
    let (cols, out) = forward(&v);
    let mut dout = r.clone();
    ops::relu_backward(&out, &mut dout);
    let mut grad = vec![0.0; v.len()];
    let (di, rest) = grad.split_at_mut(g.input_len());
    let (dw, db) = rest.split_at_mut(g.weight_len());
    ops::conv_backward(
        &cols,
        &v[g.input_len()..g.input_len() + g.weight_len()],
        &dout,
        &g,
        dw,
        db,
        Some(di),
    );
    di.iter_mut().zip(&dout).for_each(|(d, s)| *d += s);
    check_gradient("residual_add", &v, &grad, |v| dot(&forward(v).1, &r))
}

pub fn check_softmax_cross_entropy(rng: &mut ChaCha8Rng) -> GradCheck {
    let k = rng.gen_range(2..=10);
    let logits: Vec<f64> = uniform(rng, k).iter().map(|v| 3.0 * v).collect();
    let label = rng.gen_range(0..k);
    let mut grad = ops::softmax(&logits);
    grad[label] -= 1.0;
    check_gradient("softmax_cross_entropy", &logits, &grad, |l| {
        ops::cross_entropy(l, label)
    })
}

/// Every layer type once, from one seed.
pub fn layer_checks(seed: u64) -> Vec<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check_conv3x3(&mut rng),
        check_projection(&mut rng),
        check_dense(&mut rng),
        check_relu(&mut rng),
        check_global_avg_pool(&mut rng),
        check_residual_add(&mut rng),
        check_softmax_cross_entropy(&mut rng),
    ]
}

/// Smallest useful residual net: one identity block and one projection
/// block.
pub fn two_block_spec() -> NetSpec {
    NetSpec {
        depth: 6,
        width: 2,
        stages: 2,
        input: (6, 6, 1),
        classes: 3,
    }
}

/// Whole-network check of the mean cross-entropy over a random batch.
pub fn network_check(spec: NetSpec, batch: usize, seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = ResNet::init_with(spec, &mut rng)?;
    // Nonzero biases so every bias gradient path is exercised.
    let bias_noise = Uniform::new_inclusive(-0.1, 0.1);
    for p in net.params.iter_mut().filter(|p| **p == 0.0) {
        *p = bias_noise.sample(&mut rng);
    }
    let (h, w, c) = spec.input;
    let x = Tensor::new(vec![batch, h, w, c], uniform(&mut rng, batch * h * w * c))?;
    let labels: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..spec.classes)).collect();
    let (_, grad) = net.loss_and_grad(&x, &labels)?;
    let point = net.params.clone();
    let name = format!("resnet(depth {}, {} params)", spec.depth, point.len());
    Ok(check_gradient(&name, &point, &grad, |p| {
        net.params.copy_from_slice(p);
        net.loss(&x, &labels).expect("shapes fixed above")
    }))
}
