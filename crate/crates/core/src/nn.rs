//! Small image classifiers with manual forward/backward passes.
//!
//! Two fixed architectures:
//! - `Mlp`: flatten -> dense(hidden) -> ReLU -> dense(classes)
//! - `Conv1`: one 3x3 conv (stride 1, no padding) -> ReLU -> 2x2 max-pool
//!   -> dense(classes)
//!
//! Besides parameter gradients, the backward pass exposes the gradient with
//! respect to the input image, which trigger recovery requires. Everything
//! is plain `f64` loops: exact analytic gradients, testable against finite
//! differences.

use crate::tensor::{Tensor, TensorError};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("input shape {got:?} does not match architecture input {want:?}")]
    BadInput { want: (usize, usize, usize), got: Vec<usize> },
    #[error("label {0} out of range for {1} classes")]
    LabelOutOfRange(usize, usize),
    #[error("target and source class must differ (both {0})")]
    SameClassPair(usize),
    #[error("architectures differ")]
    ArchMismatch,
}

/// Architecture descriptor. `input` is (channels, height, width).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    Mlp {
        input: (usize, usize, usize),
        hidden: usize,
        classes: usize,
    },
    Conv1 {
        input: (usize, usize, usize),
        filters: usize,
        classes: usize,
    },
}

impl Arch {
    pub fn input(&self) -> (usize, usize, usize) {
        match *self {
            Arch::Mlp { input, .. } | Arch::Conv1 { input, .. } => input,
        }
    }

    pub fn classes(&self) -> usize {
        match *self {
            Arch::Mlp { classes, .. } | Arch::Conv1 { classes, .. } => classes,
        }
    }

    fn input_len(&self) -> usize {
        let (c, h, w) = self.input();
        c * h * w
    }

    /// Conv output spatial dims (3x3, stride 1, no padding).
    fn conv_out(&self) -> (usize, usize) {
        let (_, h, w) = self.input();
        (h - 2, w - 2)
    }

    /// Pool output spatial dims (2x2 windows, stride 2, floor).
    fn pool_out(&self) -> (usize, usize) {
        let (ch, cw) = self.conv_out();
        (ch / 2, cw / 2)
    }
}

/// One dense or conv layer: weights plus bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Tensor,
    pub b: Tensor,
}

/// Model parameters: ordered layers plus the architecture they instantiate.
///
/// Two models with equal arch are closed under elementwise add/scale, which
/// is what gossip averaging needs. The same container holds parameter
/// gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Arch,
    pub layers: Vec<Layer>,
}

/// Gradients of the loss: with respect to parameters and to the input image.
#[derive(Debug, Clone)]
pub struct GradBundle {
    pub params: ModelParams,
    pub input: Tensor,
}

impl ModelParams {
    /// Zero-initialized parameters for `arch`.
    pub fn zeros(arch: Arch) -> Self {
        let layers = match arch {
            Arch::Mlp { hidden, classes, .. } => vec![
                Layer {
                    w: Tensor::zeros(vec![hidden, arch.input_len()]),
                    b: Tensor::zeros(vec![hidden]),
                },
                Layer {
                    w: Tensor::zeros(vec![classes, hidden]),
                    b: Tensor::zeros(vec![classes]),
                },
            ],
            Arch::Conv1 { input: (c, _, _), filters, classes } => {
                let (ph, pw) = arch.pool_out();
                vec![
                    Layer {
                        w: Tensor::zeros(vec![filters, c, 3, 3]),
                        b: Tensor::zeros(vec![filters]),
                    },
                    Layer {
                        w: Tensor::zeros(vec![classes, filters * ph * pw]),
                        b: Tensor::zeros(vec![classes]),
                    },
                ]
            }
        };
        Self { arch, layers }
    }

    /// Kaiming-uniform (fan-in) init from a seeded stream; biases zero.
    pub fn init(arch: Arch, rng: &mut ChaCha8Rng) -> Self {
        let mut model = Self::zeros(arch);
        for layer in &mut model.layers {
            let fan_in = layer.w.len() / layer.w.shape()[0];
            let bound = (6.0 / fan_in as f64).sqrt();
            for v in layer.w.data_mut() {
                *v = rng.gen_range(-bound..bound);
            }
        }
        model
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Flat parameter vector view (layer order, weights then bias).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.w.data());
            out.extend_from_slice(l.b.data());
        }
        out
    }

    /// Inverse of [`flatten`]; exact round-trip.
    pub fn unflatten(arch: Arch, flat: &[f64]) -> Result<Self, NnError> {
        let mut model = Self::zeros(arch);
        let mut off = 0;
        for l in &mut model.layers {
            for t in [&mut l.w, &mut l.b] {
                let n = t.len();
                if off + n > flat.len() {
                    return Err(NnError::ArchMismatch);
                }
                t.data_mut().copy_from_slice(&flat[off..off + n]);
                off += n;
            }
        }
        if off != flat.len() {
            return Err(NnError::ArchMismatch);
        }
        Ok(model)
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, other: &ModelParams, alpha: f64) -> Result<(), NnError> {
        if self.arch != other.arch {
            return Err(NnError::ArchMismatch);
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.w.add_scaled(&b.w, alpha)?;
            a.b.add_scaled(&b.b, alpha)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        for l in &mut self.layers {
            l.w.scale(alpha);
            l.b.scale(alpha);
        }
    }

    pub fn sq_distance(&self, other: &ModelParams) -> f64 {
        self.flatten()
            .iter()
            .zip(other.flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn check_finite(&self) -> Result<(), TensorError> {
        for l in &self.layers {
            l.w.check_finite()?;
            l.b.check_finite()?;
        }
        Ok(())
    }
}

/// Mean of models sharing one architecture.
pub fn average_models<'a>(models: impl IntoIterator<Item = &'a ModelParams>) -> Option<ModelParams> {
    let mut it = models.into_iter();
    let first = it.next()?;
    let mut acc = first.clone();
    let mut n = 1usize;
    for m in it {
        acc.add_scaled(m, 1.0).ok()?;
        n += 1;
    }
    acc.scale(1.0 / n as f64);
    Some(acc)
}

/// Intermediate activations kept for the backward pass.
struct Trace {
    // Mlp: pre0 = W0 x + b0, act = relu(pre0)
    // Conv1: pre0 = conv output (pre-ReLU), act = pooled features,
    //        pool_src = flat index into pre0 chosen by each pool window
    pre0: Vec<f64>,
    act: Vec<f64>,
    pool_src: Vec<usize>,
}

fn check_input(model: &ModelParams, x: &Tensor) -> Result<(), NnError> {
    let want = model.arch.input();
    let ok = x.len() == model.arch.input_len()
        && (x.shape() == [want.0, want.1, want.2] || x.shape() == [model.arch.input_len()]);
    if ok {
        Ok(())
    } else {
        Err(NnError::BadInput {
            want,
            got: x.shape().to_vec(),
        })
    }
}

fn forward_trace(model: &ModelParams, x: &Tensor) -> Result<(Vec<f64>, Trace), NnError> {
    check_input(model, x)?;
    let xd = x.data();
    match model.arch {
        Arch::Mlp { hidden, classes, .. } => {
            let w0 = model.layers[0].w.data();
            let b0 = model.layers[0].b.data();
            let n_in = model.arch.input_len();
            let mut pre0 = vec![0.0; hidden];
            for j in 0..hidden {
                let row = &w0[j * n_in..(j + 1) * n_in];
                let mut s = b0[j];
                for (wv, xv) in row.iter().zip(xd) {
                    s += wv * xv;
                }
                pre0[j] = s;
            }
            let act: Vec<f64> = pre0.iter().map(|&v| v.max(0.0)).collect();
            let logits = dense(model.layers[1].w.data(), model.layers[1].b.data(), &act, classes);
            Ok((
                logits,
                Trace {
                    pre0,
                    act,
                    pool_src: Vec::new(),
                },
            ))
        }
        Arch::Conv1 { input: (c, h, w), filters, classes } => {
            let (ch, cw) = model.arch.conv_out();
            let (ph, pw) = model.arch.pool_out();
            let wk = model.layers[0].w.data();
            let bk = model.layers[0].b.data();
            let mut pre0 = vec![0.0; filters * ch * cw];
            for f in 0..filters {
                let kf = &wk[f * c * 9..(f + 1) * c * 9];
                for i in 0..ch {
                    for j in 0..cw {
                        let mut s = bk[f];
                        for cc in 0..c {
                            let base = cc * h * w;
                            let k = &kf[cc * 9..cc * 9 + 9];
                            for p in 0..3 {
                                let row = base + (i + p) * w + j;
                                s += k[p * 3] * xd[row]
                                    + k[p * 3 + 1] * xd[row + 1]
                                    + k[p * 3 + 2] * xd[row + 2];
                            }
                        }
                        pre0[(f * ch + i) * cw + j] = s;
                    }
                }
            }
            // ReLU then 2x2 max-pool; ties go to the first maximal element
            // in row-major order.
            let mut act = vec![0.0; filters * ph * pw];
            let mut pool_src = vec![0usize; filters * ph * pw];
            for f in 0..filters {
                for i in 0..ph {
                    for j in 0..pw {
                        let mut best = f64::NEG_INFINITY;
                        let mut src = 0;
                        for (p, q) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                            let idx = (f * ch + 2 * i + p) * cw + 2 * j + q;
                            let v = pre0[idx].max(0.0);
                            if v > best {
                                best = v;
                                src = idx;
                            }
                        }
                        act[(f * ph + i) * pw + j] = best;
                        pool_src[(f * ph + i) * pw + j] = src;
                    }
                }
            }
            let logits = dense(model.layers[1].w.data(), model.layers[1].b.data(), &act, classes);
            Ok((logits, Trace { pre0, act, pool_src }))
        }
    }
}

fn dense(w: &[f64], b: &[f64], x: &[f64], rows: usize) -> Vec<f64> {
    let cols = x.len();
    let mut out = vec![0.0; rows];
    for r in 0..rows {
        let mut s = b[r];
        for (wv, xv) in w[r * cols..(r + 1) * cols].iter().zip(x) {
            s += wv * xv;
        }
        out[r] = s;
    }
    out
}

/// Raw class scores (no softmax).
pub fn forward(model: &ModelParams, x: &Tensor) -> Result<Tensor, NnError> {
    let (logits, _) = forward_trace(model, x)?;
    Ok(Tensor::new(vec![logits.len()], logits).expect("logits shape"))
}

/// Predicted class (argmax of logits, first on ties).
pub fn predict(model: &ModelParams, x: &Tensor) -> Result<usize, NnError> {
    let (logits, _) = forward_trace(model, x)?;
    Ok(argmax(&logits))
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / z).collect()
}

/// Cross-entropy loss `-log softmax(logits)[label]`.
pub fn loss_ce(logits: &Tensor, label: usize) -> Result<f64, NnError> {
    let k = logits.len();
    if label >= k {
        return Err(NnError::LabelOutOfRange(label, k));
    }
    let d = logits.data();
    let m = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = d.iter().map(|&v| (v - m).exp()).sum();
    Ok(z.ln() - (d[label] - m))
}

/// Backpropagate `dlogits` through the network.
fn backward_from_dlogits(
    model: &ModelParams,
    x: &Tensor,
    trace: &Trace,
    dlogits: &[f64],
    want_params: bool,
) -> (Option<ModelParams>, Tensor) {
    let xd = x.data();
    let mut grads = if want_params {
        Some(ModelParams::zeros(model.arch))
    } else {
        None
    };

    // dense head shared by both architectures
    let feat = &trace.act;
    let w1 = model.layers[1].w.data();
    let cols = feat.len();
    let mut dfeat = vec![0.0; cols];
    for (r, &dl) in dlogits.iter().enumerate() {
        let row = &w1[r * cols..(r + 1) * cols];
        for (df, wv) in dfeat.iter_mut().zip(row) {
            *df += dl * wv;
        }
    }
    if let Some(g) = grads.as_mut() {
        let gw1 = g.layers[1].w.data_mut();
        for (r, &dl) in dlogits.iter().enumerate() {
            for (cidx, &fv) in feat.iter().enumerate() {
                gw1[r * cols + cidx] += dl * fv;
            }
        }
        g.layers[1].b.data_mut().copy_from_slice(dlogits);
    }

    match model.arch {
        Arch::Mlp { hidden, .. } => {
            let n_in = model.arch.input_len();
            let mut dpre = dfeat;
            for j in 0..hidden {
                if trace.pre0[j] <= 0.0 {
                    dpre[j] = 0.0;
                }
            }
            let w0 = model.layers[0].w.data();
            let mut dx = vec![0.0; n_in];
            for (j, &dp) in dpre.iter().enumerate() {
                if dp == 0.0 {
                    continue;
                }
                let row = &w0[j * n_in..(j + 1) * n_in];
                for (dxv, wv) in dx.iter_mut().zip(row) {
                    *dxv += dp * wv;
                }
            }
            if let Some(g) = grads.as_mut() {
                let gw0 = g.layers[0].w.data_mut();
                for (j, &dp) in dpre.iter().enumerate() {
                    if dp == 0.0 {
                        continue;
                    }
                    for (i, &xv) in xd.iter().enumerate() {
                        gw0[j * n_in + i] += dp * xv;
                    }
                }
                g.layers[0].b.data_mut().copy_from_slice(&dpre);
            }
            let input = Tensor::new(x.shape().to_vec(), dx).expect("input grad shape");
            (grads, input)
        }
        Arch::Conv1 { input: (c, h, w), filters, .. } => {
            let (ch, cw) = model.arch.conv_out();
            // unpool: gradient flows only to the selected source, and only
            // if that source was positive pre-ReLU (ReLU gate).
            let mut dconv = vec![0.0; filters * ch * cw];
            for (o, &src) in trace.pool_src.iter().enumerate() {
                if trace.pre0[src] > 0.0 {
                    dconv[src] += dfeat[o];
                }
            }
            let wk = model.layers[0].w.data();
            let mut dx = vec![0.0; c * h * w];
            for f in 0..filters {
                let kf = &wk[f * c * 9..(f + 1) * c * 9];
                for i in 0..ch {
                    for j in 0..cw {
                        let dv = dconv[(f * ch + i) * cw + j];
                        if dv == 0.0 {
                            continue;
                        }
                        for cc in 0..c {
                            let base = cc * h * w;
                            let k = &kf[cc * 9..cc * 9 + 9];
                            for p in 0..3 {
                                let row = base + (i + p) * w + j;
                                dx[row] += dv * k[p * 3];
                                dx[row + 1] += dv * k[p * 3 + 1];
                                dx[row + 2] += dv * k[p * 3 + 2];
                            }
                        }
                    }
                }
            }
            if let Some(g) = grads.as_mut() {
                let (l0, _) = g.layers.split_at_mut(1);
                let Layer { w: gw_t, b: gb_t } = &mut l0[0];
                let gw = gw_t.data_mut();
                let gb = gb_t.data_mut();
                for f in 0..filters {
                    for i in 0..ch {
                        for j in 0..cw {
                            let dv = dconv[(f * ch + i) * cw + j];
                            if dv == 0.0 {
                                continue;
                            }
                            gb[f] += dv;
                            for cc in 0..c {
                                let base = cc * h * w;
                                for p in 0..3 {
                                    let row = base + (i + p) * w + j;
                                    let koff = f * c * 9 + cc * 9 + p * 3;
                                    gw[koff] += dv * xd[row];
                                    gw[koff + 1] += dv * xd[row + 1];
                                    gw[koff + 2] += dv * xd[row + 2];
                                }
                            }
                        }
                    }
                }
            }
            let input = Tensor::new(x.shape().to_vec(), dx).expect("input grad shape");
            (grads, input)
        }
    }
}

/// Exact gradients of the cross-entropy loss with respect to parameters and
/// to the input.
pub fn backward(model: &ModelParams, x: &Tensor, label: usize) -> Result<GradBundle, NnError> {
    let (logits, trace) = forward_trace(model, x)?;
    if label >= logits.len() {
        return Err(NnError::LabelOutOfRange(label, logits.len()));
    }
    let mut dlogits = softmax(&logits);
    dlogits[label] -= 1.0;
    let (params, input) = backward_from_dlogits(model, x, &trace, &dlogits, true);
    Ok(GradBundle {
        params: params.expect("param grads requested"),
        input,
    })
}

/// Mean gradient over a batch of samples.
pub fn backward_batch(
    model: &ModelParams,
    batch: &[(&Tensor, usize)],
) -> Result<GradBundle, NnError> {
    let mut acc: Option<GradBundle> = None;
    for &(x, label) in batch {
        let g = backward(model, x, label)?;
        match acc.as_mut() {
            None => acc = Some(g),
            Some(a) => {
                a.params.add_scaled(&g.params, 1.0)?;
                a.input.add_scaled(&g.input, 1.0)?;
            }
        }
    }
    let mut g = acc.expect("non-empty batch");
    let inv = 1.0 / batch.len() as f64;
    g.params.scale(inv);
    g.input.scale(inv);
    Ok(g)
}

/// Gradient of `logits[y] - logits[z]` with respect to the input image.
pub fn logit_diff_input_grad(
    model: &ModelParams,
    x: &Tensor,
    y: usize,
    z: usize,
) -> Result<Tensor, NnError> {
    if y == z {
        return Err(NnError::SameClassPair(y));
    }
    let (logits, trace) = forward_trace(model, x)?;
    let k = logits.len();
    if y >= k || z >= k {
        return Err(NnError::LabelOutOfRange(y.max(z), k));
    }
    let mut dlogits = vec![0.0; k];
    dlogits[y] = 1.0;
    dlogits[z] = -1.0;
    let (_, input) = backward_from_dlogits(model, x, &trace, &dlogits, false);
    Ok(input)
}

/// Gradient of the cross-entropy toward target `y` with respect to the input.
pub fn ce_input_grad(model: &ModelParams, x: &Tensor, y: usize) -> Result<Tensor, NnError> {
    let (logits, trace) = forward_trace(model, x)?;
    if y >= logits.len() {
        return Err(NnError::LabelOutOfRange(y, logits.len()));
    }
    let mut dlogits = softmax(&logits);
    dlogits[y] -= 1.0;
    let (_, input) = backward_from_dlogits(model, x, &trace, &dlogits, false);
    Ok(input)
}

/// One SGD step: `theta - lr * grads`, elementwise.
pub fn sgd_step(model: &ModelParams, grads: &ModelParams, lr: f64) -> Result<ModelParams, NnError> {
    let mut out = model.clone();
    out.add_scaled(grads, -lr)?;
    Ok(out)
}
