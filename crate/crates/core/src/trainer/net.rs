//! Trainable ResNet v1 without batchnorm.
//!
//! Each block computes `relu(F(x) + S(x))` where `F` is two 3×3
//! convolutions with a ReLU between them and `S` is the identity, or a
//! strided 1×1 projection when the block changes width or resolution. With
//! `F ≡ 0` a same-width block is the identity on its (non-negative) input.
//!
//! All trainable values live in one flat vector so optimizers and gradient
//! checks can treat the network as a single parameter array.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ops::{self, ConvGeom};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    /// `2·stages·N + 2`; 6N+2 for the usual three stages.
    pub depth: u32,
    /// Stem width; stage `s` uses `width·2^s`.
    pub width: u32,
    pub stages: u32,
    pub input: (usize, usize, usize),
    pub classes: usize,
}

impl NetSpec {
    /// Three-stage ResNet v1.
    pub fn resnet(depth: u32, width: u32, input: (usize, usize, usize), classes: usize) -> Self {
        NetSpec {
            depth,
            width,
            stages: 3,
            input,
            classes,
        }
    }

    pub fn blocks_per_stage(&self) -> Result<usize> {
        let per_block = 2 * self.stages;
        match self.depth.checked_sub(2) {
            Some(d) if self.stages > 0 && d > 0 && d % per_block == 0 => {
                Ok((d / per_block) as usize)
            }
            _ => Err(Error::Config(format!(
                "depth {} is not {per_block}N+2 for {} stages",
                self.depth, self.stages
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct ConvSlot {
    geom: ConvGeom,
    weight: usize,
    bias: usize,
}

impl ConvSlot {
    fn weight<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.weight..self.weight + self.geom.weight_len()]
    }

    fn bias<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.bias..self.bias + self.geom.out_c]
    }

    fn forward(&self, params: &[f64], input: &[f64], cols: &mut Vec<f64>, out: &mut Vec<f64>) {
        ops::conv_forward(
            input,
            self.weight(params),
            self.bias(params),
            &self.geom,
            cols,
            out,
        );
    }

    fn backward(
        &self,
        params: &[f64],
        cols: &[f64],
        dout: &[f64],
        grads: &mut [f64],
        dinput: Option<&mut [f64]>,
    ) {
        let (dw, rest) = grads[self.weight..].split_at_mut(self.geom.weight_len());
        let db_off = self.bias - self.weight - self.geom.weight_len();
        let db = &mut rest[db_off..db_off + self.geom.out_c];
        ops::conv_backward(cols, self.weight(params), dout, &self.geom, dw, db, dinput);
    }
}

#[derive(Clone, Debug)]
struct BlockSlot {
    conv1: ConvSlot,
    conv2: ConvSlot,
    projection: Option<ConvSlot>,
}

#[derive(Clone, Debug)]
struct Layout {
    stem: ConvSlot,
    blocks: Vec<BlockSlot>,
    dense_weight: usize,
    dense_bias: usize,
    features: usize,
    total: usize,
}

impl Layout {
    fn new(spec: &NetSpec) -> Result<Self> {
        let n = spec.blocks_per_stage()?;
        let (h, w, c) = spec.input;
        if h == 0 || w == 0 || c == 0 || spec.width == 0 || spec.classes == 0 {
            return Err(Error::Config(format!("invalid network spec {spec:?}")));
        }
        let mut offset = 0;
        let mut slot = |geom: ConvGeom| {
            let s = ConvSlot {
                geom,
                weight: offset,
                bias: offset + geom.weight_len(),
            };
            offset += geom.weight_len() + geom.out_c;
            s
        };
        let width = spec.width as usize;
        let stem = slot(ConvGeom::same(h, w, c, width, 3, 1));
        let (mut ch, mut hh, mut ww) = (width, h, w);
        let mut blocks = Vec::new();
        for stage in 0..spec.stages {
            let out = width << stage;
            for b in 0..n {
                let stride = if stage > 0 && b == 0 { 2 } else { 1 };
                let conv1 = slot(ConvGeom::same(hh, ww, ch, out, 3, stride));
                let (oh, ow) = (conv1.geom.out_h(), conv1.geom.out_w());
                let conv2 = slot(ConvGeom::same(oh, ow, out, out, 3, 1));
                let projection = (stride != 1 || ch != out)
                    .then(|| slot(ConvGeom::same(hh, ww, ch, out, 1, stride)));
                blocks.push(BlockSlot {
                    conv1,
                    conv2,
                    projection,
                });
                (ch, hh, ww) = (out, oh, ow);
            }
        }
        let dense_weight = offset;
        let dense_bias = dense_weight + ch * spec.classes;
        let total = dense_bias + spec.classes;
        Ok(Layout {
            stem,
            blocks,
            dense_weight,
            dense_bias,
            features: ch,
            total,
        })
    }
}

/// Intermediate values of one sample's forward pass.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    stem_cols: Vec<f64>,
    /// Post-ReLU stem output.
    stem_out: Vec<f64>,
    blocks: Vec<BlockTrace>,
    pooled: Vec<f64>,
    pub logits: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
struct BlockTrace {
    cols1: Vec<f64>,
    /// Post-ReLU output of the first convolution.
    hidden: Vec<f64>,
    cols2: Vec<f64>,
    proj_cols: Vec<f64>,
    /// Post-ReLU block output.
    out: Vec<f64>,
}

impl Trace {
    /// Activations after the first convolution (post-ReLU).
    pub fn first_layer(&self) -> &[f64] {
        &self.stem_out
    }

    /// Activations after the last convolutional block (post-ReLU).
    pub fn last_layer(&self) -> &[f64] {
        self.blocks.last().map_or(&self.stem_out, |b| &b.out)
    }
}

#[derive(Clone, Debug)]
pub struct ResNet {
    spec: NetSpec,
    layout: Layout,
    pub params: Vec<f64>,
}

impl ResNet {
    /// He-uniform weights, zero biases.
    pub fn new(spec: NetSpec, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with(spec, &mut rng)
    }

    pub fn init_with(spec: NetSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        let layout = Layout::new(&spec)?;
        let mut params = vec![0.0; layout.total];
        let mut he = |start: usize, len: usize, fan_in: usize| {
            let limit = (6.0 / fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            for p in &mut params[start..start + len] {
                *p = dist.sample(rng);
            }
        };
        let convs = std::iter::once(&layout.stem).chain(
            layout
                .blocks
                .iter()
                .flat_map(|b| [Some(&b.conv1), Some(&b.conv2), b.projection.as_ref()])
                .flatten(),
        );
        for s in convs {
            he(s.weight, s.geom.weight_len(), s.geom.patch_len());
        }
        he(
            layout.dense_weight,
            layout.features * spec.classes,
            layout.features,
        );
        Ok(ResNet {
            spec,
            layout,
            params,
        })
    }

    /// A network with every parameter zero.
    pub fn zeros(spec: NetSpec) -> Result<Self> {
        let layout = Layout::new(&spec)?;
        let params = vec![0.0; layout.total];
        Ok(ResNet {
            spec,
            layout,
            params,
        })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.layout.blocks.len()
    }

    /// Zeroes both convolutions (weights and biases) of every residual branch.
    pub fn zero_residual_branches(&mut self) {
        for b in &self.layout.blocks {
            for s in [&b.conv1, &b.conv2] {
                self.params[s.weight..s.weight + s.geom.weight_len()].fill(0.0);
                self.params[s.bias..s.bias + s.geom.out_c].fill(0.0);
            }
        }
    }

    fn check_input(&self, sample: &[f64]) -> Result<()> {
        let (h, w, c) = self.spec.input;
        if sample.len() != h * w * c {
            return Err(Error::Config(format!(
                "sample has {} values, network expects {h}x{w}x{c}",
                sample.len()
            )));
        }
        Ok(())
    }

    /// Forward pass of one HWC sample.
    pub fn forward_sample(&self, sample: &[f64]) -> Result<Trace> {
        self.check_input(sample)?;
        let p = &self.params;
        let mut t = Trace::default();
        self.layout
            .stem
            .forward(p, sample, &mut t.stem_cols, &mut t.stem_out);
        ops::relu_in_place(&mut t.stem_out);
        let mut x: &[f64] = &t.stem_out;
        let mut blocks = Vec::with_capacity(self.layout.blocks.len());
        for slot in &self.layout.blocks {
            let mut bt = BlockTrace::default();
            slot.conv1.forward(p, x, &mut bt.cols1, &mut bt.hidden);
            ops::relu_in_place(&mut bt.hidden);
            slot.conv2
                .forward(p, &bt.hidden, &mut bt.cols2, &mut bt.out);
            match &slot.projection {
                Some(proj) => {
                    let mut skip = Vec::new();
                    proj.forward(p, x, &mut bt.proj_cols, &mut skip);
                    bt.out.iter_mut().zip(&skip).for_each(|(o, s)| *o += s);
                }
                None => bt.out.iter_mut().zip(x).for_each(|(o, s)| *o += s),
            }
            ops::relu_in_place(&mut bt.out);
            blocks.push(bt);
            x = &blocks.last().expect("just pushed").out;
        }
        t.pooled = ops::global_avg_pool(x, self.layout.features);
        t.blocks = blocks;
        let dw = &p[self.layout.dense_weight..self.layout.dense_bias];
        let db = &p[self.layout.dense_bias..self.layout.total];
        t.logits = ops::dense_forward(&t.pooled, dw, db);
        Ok(t)
    }

    /// Accumulates `∂loss/∂params` into `grads` given `∂loss/∂logits`.
    pub fn backward_sample(&self, trace: &Trace, dlogits: &[f64], grads: &mut [f64]) {
        let p = &self.params;
        let l = &self.layout;
        let (dw, db) = grads[l.dense_weight..l.total].split_at_mut(l.dense_bias - l.dense_weight);
        let dpooled = ops::dense_backward(
            &trace.pooled,
            &p[l.dense_weight..l.dense_bias],
            dlogits,
            dw,
            db,
        );
        let last = trace.last_layer();
        let mut dx = ops::global_avg_pool_backward(&dpooled, last.len() / l.features);

        for (i, slot) in l.blocks.iter().enumerate().rev() {
            let bt = &trace.blocks[i];
            let block_in: &[f64] = if i == 0 {
                &trace.stem_out
            } else {
                &trace.blocks[i - 1].out
            };
            // dx is ∂/∂(block output); pass it through the final ReLU.
            ops::relu_backward(&bt.out, &mut dx);
            let mut dhidden = vec![0.0; bt.hidden.len()];
            slot.conv2
                .backward(p, &bt.cols2, &dx, grads, Some(&mut dhidden));
            ops::relu_backward(&bt.hidden, &mut dhidden);
            let mut dinput = vec![0.0; block_in.len()];
            slot.conv1
                .backward(p, &bt.cols1, &dhidden, grads, Some(&mut dinput));
            match &slot.projection {
                Some(proj) => proj.backward(p, &bt.proj_cols, &dx, grads, Some(&mut dinput)),
                None => dinput.iter_mut().zip(&dx).for_each(|(d, s)| *d += s),
            }
            dx = dinput;
        }
        ops::relu_backward(&trace.stem_out, &mut dx);
        l.stem.backward(p, &trace.stem_cols, &dx, grads, None);
    }

    /// Logits `(n, classes)` for a batch `(n, h, w, c)`.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let n = batch.batch();
        let mut out = Vec::with_capacity(n * self.spec.classes);
        for i in 0..n {
            out.extend(self.forward_sample(batch.item(i))?.logits);
        }
        Tensor::new(vec![n, self.spec.classes], out)
    }

    /// Mean softmax cross-entropy over the batch and its gradient with
    /// respect to every parameter.
    pub fn loss_and_grad(&self, batch: &Tensor, labels: &[usize]) -> Result<(f64, Vec<f64>)> {
        let n = batch.batch();
        if n == 0 || labels.len() != n {
            return Err(Error::Config(format!(
                "{n} samples but {} labels",
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.spec.classes) {
            return Err(Error::Config(format!(
                "label {bad} >= {} classes",
                self.spec.classes
            )));
        }
        let mut grads = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let inv = 1.0 / n as f64;
        for (i, &label) in labels.iter().enumerate() {
            let sample = batch.item(i);
            let trace = self.forward_sample(sample)?;
            loss += ops::cross_entropy(&trace.logits, label);
            let mut dlogits = ops::softmax(&trace.logits);
            dlogits[label] -= 1.0;
            dlogits.iter_mut().for_each(|d| *d *= inv);
            self.backward_sample(&trace, &dlogits, &mut grads);
        }
        Ok((loss * inv, grads))
    }

    /// Mean loss only.
    pub fn loss(&self, batch: &Tensor, labels: &[usize]) -> Result<f64> {
        let mut loss = 0.0;
        for (i, &label) in labels.iter().enumerate() {
            loss += ops::cross_entropy(&self.forward_sample(batch.item(i))?.logits, label);
        }
        Ok(loss / labels.len() as f64)
    }
}

/// Which activation map to capture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerPick {
    First,
    Last,
}

/// Activations of the chosen layer for every sample in `batch`, concatenated.
pub fn capture_layer(net: &ResNet, batch: &Tensor, layer: LayerPick) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..batch.batch() {
        let t = net.forward_sample(batch.item(i))?;
        out.extend_from_slice(match layer {
            LayerPick::First => t.first_layer(),
            LayerPick::Last => t.last_layer(),
        });
    }
    Ok(out)
}

/// Shannon entropy (nats) of the chosen layer's activations over `batch`.
pub fn measure_layer_entropy(
    net: &ResNet,
    batch: &Tensor,
    layer: LayerPick,
    bins: usize,
) -> Result<f64> {
    crate::entropy::activation_entropy(&capture_layer(net, batch, layer)?, bins)
}
