//! Symbolic layer graphs for ResNet v1, DenseNet and ResNeXt, with exact
//! trainable-parameter counts.
//!
//! Conventions:
//! - batchnorm contributes `2·C` (scale and shift); running statistics are
//!   not trainable and are not counted;
//! - depth `H′` counts convolutions on the main path plus the classifier;
//!   1×1 projections on skip paths are not counted.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::Family;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputShape {
    pub height: u32,
    pub width: u32,
    pub channels: u32,
}

impl InputShape {
    pub const fn new(height: u32, width: u32, channels: u32) -> Self {
        InputShape {
            height,
            width,
            channels,
        }
    }
}

impl fmt::Display for InputShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

impl FromStr for InputShape {
    type Err = Error;

    /// Parses `HxWxC`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<u32> = s
            .split(['x', 'X', '×'])
            .map(|p| p.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Usage(format!("input shape {s:?} is not HxWxC")))?;
        match parts[..] {
            [h, w, c] if h > 0 && w > 0 && c > 0 => Ok(InputShape::new(h, w, c)),
            _ => Err(Error::Usage(format!("input shape {s:?} is not HxWxC"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Input,
    Conv,
    BatchNorm,
    Dense,
    Pool,
    Add,
    Concat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    /// `(kh, kw)`; `(0, 0)` for non-convolutional layers.
    pub kernel: (u32, u32),
    pub in_ch: u32,
    pub out_ch: u32,
    pub stride: u32,
    pub has_bias: bool,
    pub groups: u32,
    /// Indices of the producing layers.
    pub inputs: Vec<usize>,
    /// Projection convolution (or its batchnorm) on a skip connection.
    pub on_skip: bool,
}

impl LayerSpec {
    fn base(kind: LayerKind, in_ch: u32, out_ch: u32, inputs: Vec<usize>) -> Self {
        LayerSpec {
            kind,
            kernel: (0, 0),
            in_ch,
            out_ch,
            stride: 1,
            has_bias: false,
            groups: 1,
            inputs,
            on_skip: false,
        }
    }

    pub fn params(&self) -> u64 {
        let (i, o) = (self.in_ch as u64, self.out_ch as u64);
        let bias = if self.has_bias { o } else { 0 };
        match self.kind {
            LayerKind::Conv => {
                let (kh, kw) = (self.kernel.0 as u64, self.kernel.1 as u64);
                kh * kw * (i / self.groups as u64) * o + bias
            }
            LayerKind::BatchNorm => 2 * o,
            LayerKind::Dense => i * o + bias,
            LayerKind::Input | LayerKind::Pool | LayerKind::Add | LayerKind::Concat => 0,
        }
    }

    /// True for layers that count toward the depth `H′`.
    pub fn counts_toward_depth(&self) -> bool {
        matches!(self.kind, LayerKind::Conv | LayerKind::Dense) && !self.on_skip
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchGraph {
    pub family: Family,
    /// Requested depth `H′`.
    pub depth: u32,
    /// First-layer breadth `χ′` as passed to the builder.
    pub breadth: u32,
    pub input: InputShape,
    pub classes: u32,
    pub layers: Vec<LayerSpec>,
    pub total_params: u64,
}

impl ArchGraph {
    /// Main-path convolutions plus dense layers.
    pub fn counted_depth(&self) -> u32 {
        self.layers
            .iter()
            .filter(|l| l.counts_toward_depth())
            .count() as u32
    }

    /// Checks that every layer's input width equals what its producers emit.
    pub fn check_channels(&self) -> Result<()> {
        for (idx, layer) in self.layers.iter().enumerate() {
            let widths: Vec<u32> = layer
                .inputs
                .iter()
                .map(|&p| self.layers[p].out_ch)
                .collect();
            let ok = match layer.kind {
                LayerKind::Input => widths.is_empty(),
                LayerKind::Concat => {
                    widths.iter().sum::<u32>() == layer.in_ch && layer.in_ch == layer.out_ch
                }
                LayerKind::Add => {
                    widths.len() >= 2
                        && widths.iter().all(|&w| w == layer.out_ch)
                        && layer.in_ch == layer.out_ch
                }
                _ => widths.len() == 1 && widths[0] == layer.in_ch,
            };
            if !ok || layer.inputs.iter().any(|&p| p >= idx) {
                return Err(Error::Consistency(format!(
                    "layer {idx} ({:?}) expects {} channels, producers give {widths:?}",
                    layer.kind, layer.in_ch
                )));
            }
        }
        Ok(())
    }
}

/// Exact sum of per-layer trainable parameters.
pub fn count_params(graph: &ArchGraph) -> u64 {
    graph.layers.iter().map(LayerSpec::params).sum()
}

struct Builder {
    layers: Vec<LayerSpec>,
}

impl Builder {
    fn new(input: InputShape) -> Self {
        Builder {
            layers: vec![LayerSpec::base(LayerKind::Input, 0, input.channels, vec![])],
        }
    }

    fn push(&mut self, layer: LayerSpec) -> usize {
        self.layers.push(layer);
        self.layers.len() - 1
    }

    fn out(&self, idx: usize) -> u32 {
        self.layers[idx].out_ch
    }

    #[allow(clippy::too_many_arguments)]
    fn conv(
        &mut self,
        from: usize,
        k: u32,
        out: u32,
        stride: u32,
        bias: bool,
        groups: u32,
        on_skip: bool,
    ) -> usize {
        let in_ch = self.out(from);
        self.push(LayerSpec {
            kernel: (k, k),
            stride,
            has_bias: bias,
            groups,
            on_skip,
            ..LayerSpec::base(LayerKind::Conv, in_ch, out, vec![from])
        })
    }

    fn bn(&mut self, from: usize, on_skip: bool) -> usize {
        let c = self.out(from);
        self.push(LayerSpec {
            on_skip,
            ..LayerSpec::base(LayerKind::BatchNorm, c, c, vec![from])
        })
    }

    fn pool(&mut self, from: usize, stride: u32) -> usize {
        let c = self.out(from);
        self.push(LayerSpec {
            stride,
            ..LayerSpec::base(LayerKind::Pool, c, c, vec![from])
        })
    }

    fn add(&mut self, a: usize, b: usize) -> usize {
        let c = self.out(a);
        self.push(LayerSpec::base(LayerKind::Add, c, c, vec![a, b]))
    }

    fn concat(&mut self, a: usize, b: usize) -> usize {
        let c = self.out(a) + self.out(b);
        self.push(LayerSpec::base(LayerKind::Concat, c, c, vec![a, b]))
    }

    fn dense(&mut self, from: usize, out: u32, bias: bool) -> usize {
        let in_ch = self.out(from);
        self.push(LayerSpec {
            has_bias: bias,
            ..LayerSpec::base(LayerKind::Dense, in_ch, out, vec![from])
        })
    }

    fn finish(
        self,
        family: Family,
        depth: u32,
        breadth: u32,
        input: InputShape,
        classes: u32,
    ) -> ArchGraph {
        let mut graph = ArchGraph {
            family,
            depth,
            breadth,
            input,
            classes,
            layers: self.layers,
            total_params: 0,
        };
        graph.total_params = count_params(&graph);
        graph
    }
}

fn check_common(width: u32, input: InputShape, classes: u32) -> Result<()> {
    if width == 0 {
        return Err(Error::Config("breadth must be at least 1".into()));
    }
    if input.channels == 0 || input.height == 0 || input.width == 0 {
        return Err(Error::Config(format!("invalid input shape {input}")));
    }
    if classes == 0 {
        return Err(Error::Config("at least one class is required".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResNetOptions {
    /// Bias on every convolution, projections included.
    pub conv_bias: bool,
}

impl Default for ResNetOptions {
    fn default() -> Self {
        ResNetOptions { conv_bias: true }
    }
}

/// ResNet v1 for small images: a 3×3 stem, three stages of `(depth−2)/6`
/// basic blocks at widths χ′, 2χ′, 4χ′, global pooling and a classifier.
pub fn build_resnet_v1(
    depth: u32,
    width: u32,
    input: InputShape,
    classes: u32,
) -> Result<ArchGraph> {
    build_resnet_v1_with(depth, width, input, classes, ResNetOptions::default())
}

pub fn build_resnet_v1_with(
    depth: u32,
    width: u32,
    input: InputShape,
    classes: u32,
    opts: ResNetOptions,
) -> Result<ArchGraph> {
    let n = Family::ResNet
        .blocks_for(depth)
        .ok_or_else(|| Error::Config(format!("ResNet depth {depth} is not 6N+2")))?;
    check_common(width, input, classes)?;
    let bias = opts.conv_bias;
    let mut b = Builder::new(input);
    let stem = b.conv(0, 3, width, 1, bias, 1, false);
    let mut x = b.bn(stem, false);
    for stage in 0..3 {
        let out = width << stage;
        for block in 0..n {
            let stride = if stage > 0 && block == 0 { 2 } else { 1 };
            let c1 = b.conv(x, 3, out, stride, bias, 1, false);
            let y = b.bn(c1, false);
            let c2 = b.conv(y, 3, out, 1, bias, 1, false);
            let y = b.bn(c2, false);
            let skip = if b.out(x) != out || stride != 1 {
                b.conv(x, 1, out, stride, bias, 1, true)
            } else {
                x
            };
            x = b.add(y, skip);
        }
    }
    let p = b.pool(x, 0);
    b.dense(p, classes, true);
    Ok(b.finish(Family::ResNet, depth, width, input, classes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseNetOptions {
    /// Number of dense blocks; each holds `(depth−4)/3` composite layers.
    pub dense_blocks: u32,
    /// Stem width; `None` means twice the growth rate.
    pub initial_filters: Option<u32>,
    pub conv_bias: bool,
}

impl Default for DenseNetOptions {
    fn default() -> Self {
        DenseNetOptions {
            dense_blocks: 3,
            initial_filters: None,
            conv_bias: false,
        }
    }
}

/// Plain DenseNet (no bottleneck, no compression).
pub fn build_densenet(
    depth: u32,
    growth_rate: u32,
    input: InputShape,
    classes: u32,
) -> Result<ArchGraph> {
    build_densenet_with(
        depth,
        growth_rate,
        input,
        classes,
        DenseNetOptions::default(),
    )
}

pub fn build_densenet_with(
    depth: u32,
    growth_rate: u32,
    input: InputShape,
    classes: u32,
    opts: DenseNetOptions,
) -> Result<ArchGraph> {
    let per_block = Family::DenseNet
        .blocks_for(depth)
        .ok_or_else(|| Error::Config(format!("DenseNet depth {depth} is not 3N+4")))?;
    check_common(growth_rate, input, classes)?;
    if opts.dense_blocks == 0 {
        return Err(Error::Config("at least one dense block is required".into()));
    }
    let bias = opts.conv_bias;
    let stem_width = opts.initial_filters.unwrap_or(2 * growth_rate);
    let mut b = Builder::new(input);
    let mut x = b.conv(0, 3, stem_width, 1, bias, 1, false);
    for block in 0..opts.dense_blocks {
        for _ in 0..per_block {
            let y = b.bn(x, false);
            let y = b.conv(y, 3, growth_rate, 1, bias, 1, false);
            x = b.concat(x, y);
        }
        if block + 1 < opts.dense_blocks {
            let y = b.bn(x, false);
            let c = b.out(y);
            let y = b.conv(y, 1, c, 1, bias, 1, false);
            x = b.pool(y, 2);
        }
    }
    let y = b.bn(x, false);
    let p = b.pool(y, 0);
    b.dense(p, classes, true);
    Ok(b.finish(Family::DenseNet, depth, growth_rate, input, classes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResNeXtOptions {
    pub stem_channels: u32,
    pub dense_bias: bool,
}

impl Default for ResNeXtOptions {
    fn default() -> Self {
        ResNeXtOptions {
            stem_channels: 64,
            dense_bias: false,
        }
    }
}

/// ResNeXt for small images.
///
/// `width` is the channel count of one transformation path in the first
/// stage, so the first-stage bottleneck is `cardinality·width` wide and each
/// block emits twice that. Widths double per stage.
pub fn build_resnext(
    depth: u32,
    width: u32,
    cardinality: u32,
    input: InputShape,
    classes: u32,
) -> Result<ArchGraph> {
    build_resnext_with(
        depth,
        width,
        cardinality,
        input,
        classes,
        ResNeXtOptions::default(),
    )
}

pub fn build_resnext_with(
    depth: u32,
    width: u32,
    cardinality: u32,
    input: InputShape,
    classes: u32,
    opts: ResNeXtOptions,
) -> Result<ArchGraph> {
    let n = Family::ResNeXt
        .blocks_for(depth)
        .ok_or_else(|| Error::Config(format!("ResNeXt depth {depth} is not 9N+2")))?;
    check_common(width, input, classes)?;
    if cardinality == 0 {
        return Err(Error::Config("cardinality must be at least 1".into()));
    }
    let mut b = Builder::new(input);
    let stem = b.conv(0, 3, opts.stem_channels, 1, false, 1, false);
    let mut x = b.bn(stem, false);
    for stage in 0..3 {
        let inner = (cardinality * width) << stage;
        let out = 2 * inner;
        for block in 0..n {
            let stride = if stage > 0 && block == 0 { 2 } else { 1 };
            let skip = if b.out(x) != out {
                let p = b.conv(x, 1, out, stride, false, 1, true);
                b.bn(p, true)
            } else {
                x
            };
            let y = b.conv(x, 1, inner, 1, false, 1, false);
            let y = b.bn(y, false);
            let y = b.conv(y, 3, inner, stride, false, cardinality, false);
            let y = b.bn(y, false);
            let y = b.conv(y, 1, out, 1, false, 1, false);
            let y = b.bn(y, false);
            x = b.add(y, skip);
        }
    }
    let p = b.pool(x, 0);
    b.dense(p, classes, opts.dense_bias);
    Ok(b.finish(Family::ResNeXt, depth, width, input, classes))
}

/// Default cardinality for ResNeXt graphs built from a plan.
pub const DEFAULT_CARDINALITY: u32 = 8;

/// Dense blocks in a DenseNet built from a plan. Hand-specified DenseNets
/// such as DenseNet-40 keep the three-block default.
pub const PLANNED_DENSE_BLOCKS: u32 = 4;

#[cfg(test)]
mod tests {
    use super::*;

    const CIFAR: InputShape = InputShape::new(32, 32, 3);
    const TINY: InputShape = InputShape::new(8, 8, 1);

    fn conv(k: u64, i: u64, o: u64, bias: bool) -> u64 {
        k * k * i * o + if bias { o } else { 0 }
    }

    fn graph_of(layers: Vec<LayerSpec>) -> ArchGraph {
        ArchGraph {
            family: Family::ResNet,
            depth: 0,
            breadth: 0,
            input: TINY,
            classes: 0,
            layers,
            total_params: 0,
        }
    }

    #[test]
    fn single_layer_counts() {
        let dense = LayerSpec {
            has_bias: true,
            ..LayerSpec::base(LayerKind::Dense, 64, 10, vec![])
        };
        assert_eq!(count_params(&graph_of(vec![dense])), 650);
        let c = LayerSpec {
            kernel: (3, 3),
            has_bias: true,
            ..LayerSpec::base(LayerKind::Conv, 3, 16, vec![])
        };
        assert_eq!(count_params(&graph_of(vec![c])), 448);
        assert_eq!(count_params(&graph_of(vec![])), 0);
    }

    #[test]
    fn grouped_conv_and_bn_counts() {
        let g = LayerSpec {
            kernel: (3, 3),
            groups: 4,
            ..LayerSpec::base(LayerKind::Conv, 32, 32, vec![])
        };
        assert_eq!(g.params(), 9 * 8 * 32);
        assert_eq!(
            LayerSpec::base(LayerKind::BatchNorm, 7, 7, vec![]).params(),
            14
        );
    }

    #[test]
    fn resnet8_hand_sum() {
        // (8, 1, 8x8x1, 2): one basic block per stage at widths 1, 2, 4.
        let g = build_resnet_v1(8, 1, TINY, 2).unwrap();
        let expect = conv(3, 1, 1, true) + 2      // stem + bn
            + 2 * (conv(3, 1, 1, true) + 2)       // stage 1
            + conv(3, 1, 2, true) + 4 + conv(3, 2, 2, true) + 4 + conv(1, 1, 2, true)
            + conv(3, 2, 4, true) + 8 + conv(3, 4, 4, true) + 8 + conv(1, 2, 4, true)
            + 4 * 2 + 2;
        assert_eq!(g.total_params, expect);
        assert_eq!(g.counted_depth(), 8);
        g.check_channels().unwrap();
    }

    #[test]
    fn densenet7_hand_sum() {
        // (7, 1, 8x8x1, 2): one composite layer per block, stem width 2.
        let g = build_densenet(7, 1, TINY, 2).unwrap();
        let expect = conv(3, 1, 2, false)
            + 2 * 2 + conv(3, 2, 1, false)          // block 1: 2 -> 3
            + 2 * 3 + conv(1, 3, 3, false)          // transition
            + 2 * 3 + conv(3, 3, 1, false)          // block 2: 3 -> 4
            + 2 * 4 + conv(1, 4, 4, false)
            + 2 * 4 + conv(3, 4, 1, false)          // block 3: 4 -> 5
            + 2 * 5                                 // final bn
            + 5 * 2 + 2;
        assert_eq!(g.total_params, expect);
        assert_eq!(g.counted_depth(), 7);
        g.check_channels().unwrap();
    }

    #[test]
    fn resnext11_hand_sum() {
        // (11, 4, L=2, 8x8x1, 2): one bottleneck per stage, inner 8/16/32.
        let g = build_resnext(11, 4, 2, TINY, 2).unwrap();
        let stem = conv(3, 1, 64, false) + 128;
        let block = |cin: u64, inner: u64| {
            let out = 2 * inner;
            conv(1, cin, out, false)
                + 2 * out
                + conv(1, cin, inner, false)
                + 2 * inner
                + 9 * (inner / 2) * inner
                + 2 * inner
                + conv(1, inner, out, false)
                + 2 * out
        };
        let expect = stem + block(64, 8) + block(16, 16) + block(32, 32) + 64 * 2;
        assert_eq!(g.total_params, expect);
        assert_eq!(g.counted_depth(), 11);
        g.check_channels().unwrap();
    }

    #[test]
    fn divisibility_enforced() {
        assert!(matches!(
            build_resnet_v1(27, 16, CIFAR, 10),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_densenet(41, 12, CIFAR, 10),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_resnext(30, 16, 8, CIFAR, 10),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_resnext(29, 16, 0, CIFAR, 10),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn reference_counts_close_to_published() {
        let rel = |got: u64, want: u64| (got as f64 - want as f64).abs() / want as f64;
        assert!(
            rel(
                build_resnet_v1(50, 16, CIFAR, 10).unwrap().total_params,
                765_098
            ) < 0.03
        );
        assert_eq!(
            build_resnet_v1(26, 24, CIFAR, 10).unwrap().total_params,
            830_698
        );
        assert_eq!(
            build_densenet(40, 12, CIFAR, 10).unwrap().total_params,
            1_059_298
        );
        assert!(
            rel(
                build_resnext(56, 16, 8, CIFAR, 10).unwrap().total_params,
                11_004_864
            ) < 0.05
        );
    }

    #[test]
    fn depth_accounting_matches_request() {
        for n in 1..6 {
            for f in Family::ALL {
                let d = f.depth_for(n);
                let g = match f {
                    Family::ResNet => build_resnet_v1(d, 4, TINY, 3),
                    Family::DenseNet => build_densenet(d, 4, TINY, 3),
                    Family::ResNeXt => build_resnext(d, 2, 2, TINY, 3),
                }
                .unwrap();
                assert_eq!(g.counted_depth(), d, "{f} N={n}");
                g.check_channels().unwrap();
            }
        }
    }

    #[test]
    fn serialization_is_deterministic() {
        let a = serde_json::to_string(&build_densenet(16, 20, CIFAR, 100).unwrap()).unwrap();
        let b = serde_json::to_string(&build_densenet(16, 20, CIFAR, 100).unwrap()).unwrap();
        assert_eq!(a, b);
        let back: ArchGraph = serde_json::from_str(&a).unwrap();
        assert_eq!(count_params(&back), back.total_params);
    }

    #[test]
    fn doubling_width_per_layer_formula() {
        let a = build_resnet_v1(14, 4, CIFAR, 10).unwrap();
        let b = build_resnet_v1(14, 8, CIFAR, 10).unwrap();
        for (la, lb) in a.layers.iter().zip(&b.layers).skip(2) {
            if la.kind == LayerKind::Conv {
                let k = (la.kernel.0 * la.kernel.1) as u64;
                assert_eq!(lb.in_ch, 2 * la.in_ch);
                assert_eq!(lb.out_ch, 2 * la.out_ch);
                assert_eq!(
                    lb.params(),
                    4 * (la.params() - la.out_ch as u64) + lb.out_ch as u64
                );
                assert_eq!(
                    la.params(),
                    k * la.in_ch as u64 * la.out_ch as u64 + la.out_ch as u64
                );
            }
        }
    }

    #[test]
    fn input_shape_parse() {
        assert_eq!("32x32x3".parse::<InputShape>().unwrap(), CIFAR);
        assert!("32x32".parse::<InputShape>().is_err());
        assert!("0x1x1".parse::<InputShape>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn family_graph(f: u32, n: u32, breadth: u32, c: u32, k: u32) -> ArchGraph {
            let input = InputShape::new(12, 12, c);
            match f {
                0 => build_resnet_v1(6 * n + 2, breadth, input, k),
                1 => build_densenet(3 * n + 4, breadth, input, k),
                _ => build_resnext(9 * n + 2, breadth.min(4), 2, input, k),
            }
            .unwrap()
        }

        proptest! {
            #[test]
            fn total_is_sum_of_layers(f in 0u32..3, n in 1u32..5, b in 1u32..10, c in 1u32..4, k in 2u32..20) {
                let g = family_graph(f, n, b, c, k);
                prop_assert_eq!(g.total_params, g.layers.iter().map(LayerSpec::params).sum::<u64>());
                prop_assert_eq!(g.counted_depth(), g.depth);
                prop_assert!(g.check_channels().is_ok());
            }

            #[test]
            fn spatial_size_does_not_change_count(f in 0u32..3, n in 1u32..4, h in 4u32..64, w in 4u32..64) {
                let g = family_graph(f, n, 4, 3, 10);
                let input = InputShape::new(h, w, 3);
                let other = match f {
                    0 => build_resnet_v1(g.depth, 4, input, 10),
                    1 => build_densenet(g.depth, 4, input, 10),
                    _ => build_resnext(g.depth, 4, 2, input, 10),
                }
                .unwrap();
                prop_assert_eq!(g.total_params, other.total_params);
            }

            #[test]
            fn more_classes_add_dense_weights(f in 0u32..3, n in 1u32..4, k in 2u32..50) {
                let a = family_graph(f, n, 4, 1, k);
                let b = family_graph(f, n, 4, 1, k + 1);
                let dense = a.layers.iter().find(|l| l.kind == LayerKind::Dense).unwrap();
                let per_class = dense.in_ch as u64 + u64::from(dense.has_bias);
                prop_assert_eq!(b.total_params - a.total_params, per_class);
            }
        }
    }
}
