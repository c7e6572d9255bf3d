//! Single-sample layer kernels on HWC buffers, forward and backward.

/// Geometry of a square-kernel convolution with symmetric zero padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub in_h: usize,
    pub in_w: usize,
    pub in_c: usize,
    pub out_c: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeom {
    /// "Same" padding for odd kernels.
    pub fn same(
        in_h: usize,
        in_w: usize,
        in_c: usize,
        out_c: usize,
        kernel: usize,
        stride: usize,
    ) -> Self {
        ConvGeom {
            in_h,
            in_w,
            in_c,
            out_c,
            kernel,
            stride,
            pad: kernel / 2,
        }
    }

    pub fn out_h(&self) -> usize {
        (self.in_h + 2 * self.pad - self.kernel) / self.stride + 1
    }

    pub fn out_w(&self) -> usize {
        (self.in_w + 2 * self.pad - self.kernel) / self.stride + 1
    }

    /// Rows of the patch matrix: one per output position.
    pub fn patches(&self) -> usize {
        self.out_h() * self.out_w()
    }

    /// Columns of the patch matrix: `k·k·in_c`.
    pub fn patch_len(&self) -> usize {
        self.kernel * self.kernel * self.in_c
    }

    pub fn weight_len(&self) -> usize {
        self.patch_len() * self.out_c
    }

    pub fn input_len(&self) -> usize {
        self.in_h * self.in_w * self.in_c
    }

    pub fn output_len(&self) -> usize {
        self.patches() * self.out_c
    }
}

/// Unfolds `input` into a `(patches, k·k·in_c)` matrix; the patch column
/// order is `(ky, kx, channel)`, matching the weight layout
/// `[ky][kx][in_c][out_c]`.
pub fn im2col(input: &[f64], g: &ConvGeom, cols: &mut [f64]) {
    let (oh, ow, k, c) = (g.out_h(), g.out_w(), g.kernel, g.in_c);
    let row_len = g.patch_len();
    for oy in 0..oh {
        for ox in 0..ow {
            let row = &mut cols[(oy * ow + ox) * row_len..][..row_len];
            for ky in 0..k {
                let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                for kx in 0..k {
                    let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                    let dst = &mut row[(ky * k + kx) * c..][..c];
                    if iy < 0 || ix < 0 || iy >= g.in_h as isize || ix >= g.in_w as isize {
                        dst.fill(0.0);
                    } else {
                        let src = (iy as usize * g.in_w + ix as usize) * c;
                        dst.copy_from_slice(&input[src..src + c]);
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-adds patch gradients back onto the input.
pub fn col2im(dcols: &[f64], g: &ConvGeom, dinput: &mut [f64]) {
    let (oh, ow, k, c) = (g.out_h(), g.out_w(), g.kernel, g.in_c);
    let row_len = g.patch_len();
    for oy in 0..oh {
        for ox in 0..ow {
            let row = &dcols[(oy * ow + ox) * row_len..][..row_len];
            for ky in 0..k {
                let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                if iy < 0 || iy >= g.in_h as isize {
                    continue;
                }
                for kx in 0..k {
                    let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                    if ix < 0 || ix >= g.in_w as isize {
                        continue;
                    }
                    let dst = (iy as usize * g.in_w + ix as usize) * c;
                    for (d, s) in dinput[dst..dst + c]
                        .iter_mut()
                        .zip(&row[(ky * k + kx) * c..][..c])
                    {
                        *d += s;
                    }
                }
            }
        }
    }
}

/// `c = a·b` (`beta = 0`) or `c += a·b` (`beta = 1`) for row-major `a (m×k)`,
/// `b (k×n)`; transposition is expressed through strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the strides describe in-bounds views of `a` (m×k), `b` (k×n)
    // and the row-major `c` (m×n); callers size every buffer from `ConvGeom`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Forward convolution. Fills `cols` with the patch matrix (kept for the
/// backward pass) and `out` with `cols·W + bias`.
pub fn conv_forward(
    input: &[f64],
    weight: &[f64],
    bias: &[f64],
    g: &ConvGeom,
    cols: &mut Vec<f64>,
    out: &mut Vec<f64>,
) {
    debug_assert_eq!(input.len(), g.input_len());
    debug_assert_eq!(weight.len(), g.weight_len());
    let (m, kk, n) = (g.patches(), g.patch_len(), g.out_c);
    cols.resize(m * kk, 0.0);
    im2col(input, g, cols);
    out.clear();
    out.reserve(m * n);
    for _ in 0..m {
        out.extend_from_slice(bias);
    }
    gemm(
        m,
        kk,
        n,
        cols,
        (kk as isize, 1),
        weight,
        (n as isize, 1),
        1.0,
        out,
    );
}

/// Backward convolution. Accumulates into `dweight`/`dbias`; when `dinput`
/// is given, adds the input gradient to it.
pub fn conv_backward(
    cols: &[f64],
    weight: &[f64],
    dout: &[f64],
    g: &ConvGeom,
    dweight: &mut [f64],
    dbias: &mut [f64],
    dinput: Option<&mut [f64]>,
) {
    let (m, kk, n) = (g.patches(), g.patch_len(), g.out_c);
    // dW (kk×n) += colsᵀ (kk×m) · dout (m×n)
    gemm(
        kk,
        m,
        n,
        cols,
        (1, kk as isize),
        dout,
        (n as isize, 1),
        1.0,
        dweight,
    );
    for row in dout.chunks_exact(n) {
        for (db, d) in dbias.iter_mut().zip(row) {
            *db += d;
        }
    }
    if let Some(dinput) = dinput {
        // dcols (m×kk) = dout (m×n) · Wᵀ (n×kk)
        let mut dcols = vec![0.0; m * kk];
        gemm(
            m,
            n,
            kk,
            dout,
            (n as isize, 1),
            weight,
            (1, n as isize),
            0.0,
            &mut dcols,
        );
        col2im(&dcols, g, dinput);
    }
}

pub fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes `grad` where the ReLU output was not positive.
pub fn relu_backward(activated: &[f64], grad: &mut [f64]) {
    for (g, &a) in grad.iter_mut().zip(activated) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Mean over spatial positions of an `(h·w, c)` buffer.
pub fn global_avg_pool(input: &[f64], channels: usize) -> Vec<f64> {
    let positions = input.len() / channels;
    let mut out = vec![0.0; channels];
    for px in input.chunks_exact(channels) {
        for (o, v) in out.iter_mut().zip(px) {
            *o += v;
        }
    }
    let inv = 1.0 / positions as f64;
    out.iter_mut().for_each(|o| *o *= inv);
    out
}

pub fn global_avg_pool_backward(dout: &[f64], positions: usize) -> Vec<f64> {
    let inv = 1.0 / positions as f64;
    let mut d = Vec::with_capacity(positions * dout.len());
    for _ in 0..positions {
        d.extend(dout.iter().map(|g| g * inv));
    }
    d
}

/// `x·W + b` for weight layout `[in][out]`.
pub fn dense_forward(x: &[f64], weight: &[f64], bias: &[f64]) -> Vec<f64> {
    let n = bias.len();
    let mut out = bias.to_vec();
    for (xi, row) in x.iter().zip(weight.chunks_exact(n)) {
        for (o, w) in out.iter_mut().zip(row) {
            *o += xi * w;
        }
    }
    out
}

/// Accumulates parameter gradients and returns the input gradient.
pub fn dense_backward(
    x: &[f64],
    weight: &[f64],
    dout: &[f64],
    dweight: &mut [f64],
    dbias: &mut [f64],
) -> Vec<f64> {
    let n = dout.len();
    for (db, d) in dbias.iter_mut().zip(dout) {
        *db += d;
    }
    let mut dx = vec![0.0; x.len()];
    for ((xi, row), (dxi, drow)) in x
        .iter()
        .zip(weight.chunks_exact(n))
        .zip(dx.iter_mut().zip(dweight.chunks_exact_mut(n)))
    {
        for ((w, dw), d) in row.iter().zip(drow.iter_mut()).zip(dout) {
            *dw += xi * d;
            *dxi += w * d;
        }
    }
    dx
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of `label` under `softmax(logits)`, via log-sum-exp.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct nested-loop convolution.
    fn naive_conv(input: &[f64], w: &[f64], b: &[f64], g: &ConvGeom) -> Vec<f64> {
        let mut out = vec![0.0; g.output_len()];
        for oy in 0..g.out_h() {
            for ox in 0..g.out_w() {
                for oc in 0..g.out_c {
                    let mut acc = b[oc];
                    for ky in 0..g.kernel {
                        for kx in 0..g.kernel {
                            let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                            let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                            if iy < 0 || ix < 0 || iy >= g.in_h as isize || ix >= g.in_w as isize {
                                continue;
                            }
                            for ic in 0..g.in_c {
                                let xv = input[(iy as usize * g.in_w + ix as usize) * g.in_c + ic];
                                let wv = w[((ky * g.kernel + kx) * g.in_c + ic) * g.out_c + oc];
                                acc += xv * wv;
                            }
                        }
                    }
                    out[(oy * g.out_w() + ox) * g.out_c + oc] = acc;
                }
            }
        }
        out
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn conv_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (k, stride) in [(3, 1), (3, 2), (1, 2), (1, 1)] {
            let g = ConvGeom::same(7, 6, 3, 5, k, stride);
            let x = rand_vec(&mut rng, g.input_len());
            let w = rand_vec(&mut rng, g.weight_len());
            let b = rand_vec(&mut rng, g.out_c);
            let (mut cols, mut out) = (Vec::new(), Vec::new());
            conv_forward(&x, &w, &b, &g, &mut cols, &mut out);
            let expect = naive_conv(&x, &w, &b, &g);
            for (a, e) in out.iter().zip(&expect) {
                assert!((a - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        // <im2col(x), y> == <x, col2im(y)>
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = ConvGeom::same(5, 4, 2, 1, 3, 2);
        let x = rand_vec(&mut rng, g.input_len());
        let y = rand_vec(&mut rng, g.patches() * g.patch_len());
        let mut cols = vec![0.0; y.len()];
        im2col(&x, &g, &mut cols);
        let mut back = vec![0.0; x.len()];
        col2im(&y, &g, &mut back);
        let lhs: f64 = cols.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&back).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn softmax_and_loss() {
        let p = softmax(&[1.0, 2.0, 3.0, -1.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((cross_entropy(&[0.0; 10], 3) - 10f64.ln()).abs() < 1e-15);
        assert!((cross_entropy(&[1.0, 2.0], 1) - (-p_of(&[1.0, 2.0], 1).ln())).abs() < 1e-15);
    }

    fn p_of(l: &[f64], i: usize) -> f64 {
        softmax(l)[i]
    }
}
