//! Reverse-mode automatic differentiation over a define-by-run tape.
//!
//! The op set covers exactly what the operator network's forward pass needs:
//! elementwise arithmetic, GeLU, affine maps along the last axis, the
//! wavelet-mixing block, and the relative L2 training loss. The tape is an
//! append-only arena, so node order is already topological and the backward
//! pass is a single reverse sweep that visits each node once.
//!
//! Wavelet analysis/synthesis inside the mixing op is treated as a fixed
//! orthonormal linear map: its adjoint is its inverse, so gradients propagate
//! through the transforms analytically instead of being taped per tap.

use crate::error::{CoreError, Result};
use crate::tensor::Tensor;
use crate::wavelet::{dwt1d, dwt2d, idwt1d, idwt2d, Subband, WaveletFilter};

/// A trainable value: tensor, accumulated gradient of identical shape, name.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub value: Tensor,
    pub gradient: Tensor,
    pub name: String,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let gradient = Tensor::zeros(value.shape());
        Parameter {
            value,
            gradient,
            name: name.into(),
        }
    }

    pub fn zero_grad(&mut self) {
        self.gradient.data_mut().fill(0.0);
    }
}

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

struct Node {
    value: Tensor,
    op: Op,
}

struct WmcCtx {
    filter: WaveletFilter,
    levels: usize,
    learned: Vec<Subband>,
    /// Final-level coefficients of each learned subband in channels-first
    /// layout, saved for the weight gradient.
    saved_coeffs: Vec<Tensor>,
    spatial_dims: usize,
}

struct RelL2Ctx {
    /// pred - truth, flattened per sample.
    diff: Tensor,
    /// (residual norm, truth norm) per sample.
    norms: Vec<(f64, f64)>,
}

enum Op {
    /// Constant input; no gradient is propagated into it.
    Input,
    /// Snapshot of a parameter; gradients accumulate back into it by index.
    Leaf { param: usize },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Scale { a: NodeId, factor: f64 },
    /// a + beta * constant; the constant contributes no gradient.
    AddScaledConst { a: NodeId },
    Gelu { a: NodeId },
    /// Affine map along the last axis: x[.., k] -> x W + b with W [k, o].
    Dense { x: NodeId, w: NodeId, b: NodeId },
    /// Wavelet-mixing block: DWT, per-location channel mixing of the learned
    /// final-level subbands, inverse DWT. `weights[i]` pairs with
    /// `ctx.learned[i]`.
    Wmc {
        x: NodeId,
        weights: Vec<NodeId>,
        ctx: Box<WmcCtx>,
    },
    /// Mean over samples of |pred_i - truth_i|_2 / |truth_i|_2.
    RelativeL2 { pred: NodeId, ctx: Box<RelL2Ctx> },
    Sum { a: NodeId },
}

/// Define-by-run record of differentiable operations.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// Records a constant tensor (dataset batch, cached prior output).
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Input)
    }

    /// Records a parameter snapshot; `index` addresses the parameter slice
    /// later passed to [`Tape::backward_into`].
    pub fn leaf(&mut self, param: &Parameter, index: usize) -> NodeId {
        self.push(param.value.clone(), Op::Leaf { param: index })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = binary_same_shape("add", self.value(a), self.value(b), |x, y| x + y)?;
        Ok(self.push(value, Op::Add { a, b }))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = binary_same_shape("sub", self.value(a), self.value(b), |x, y| x - y)?;
        Ok(self.push(value, Op::Sub { a, b }))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = binary_same_shape("mul", self.value(a), self.value(b), |x, y| x * y)?;
        Ok(self.push(value, Op::Mul { a, b }))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let value = self.value(a).map(|v| v * factor);
        self.push(value, Op::Scale { a, factor })
    }

    /// `a + beta * constant`. Callers that need `beta = 0` to be a bitwise
    /// no-op should skip this node instead of passing zero.
    pub fn add_scaled_const(&mut self, a: NodeId, constant: &Tensor, beta: f64) -> Result<NodeId> {
        if self.value(a).shape() != constant.shape() {
            return Err(CoreError::ShapeMismatch {
                op: "add_scaled_const",
                left: self.value(a).shape().to_vec(),
                right: constant.shape().to_vec(),
            });
        }
        let mut value = self.value(a).clone();
        combine_scaled(value.data_mut(), constant.data(), beta);
        Ok(self.push(value, Op::AddScaledConst { a }))
    }

    /// Elementwise `x * cdf(x)` with the exact error-function normal CDF.
    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(gelu_scalar);
        self.push(value, Op::Gelu { a })
    }

    /// Affine map along the last axis; every leading axis broadcasts.
    pub fn dense(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let xs = self.value(x).shape().to_vec();
        let ws = self.value(w).shape().to_vec();
        let bs = self.value(b).shape().to_vec();
        if ws.len() != 2 || xs.is_empty() || *xs.last().unwrap() != ws[0] {
            return Err(CoreError::ShapeMismatch {
                op: "dense",
                left: xs,
                right: ws,
            });
        }
        if bs != [ws[1]] {
            return Err(CoreError::ShapeMismatch {
                op: "dense bias",
                left: bs,
                right: ws,
            });
        }
        let (k, o) = (ws[0], ws[1]);
        let rows = self.value(x).numel() / k;
        let mut out = vec![0.0; rows * o];
        dense_forward(
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
            rows,
            k,
            o,
            &mut out,
        );
        let mut shape = self.value(x).shape().to_vec();
        *shape.last_mut().unwrap() = o;
        let value = Tensor::new(shape, out)?;
        Ok(self.push(value, Op::Dense { x, w, b }))
    }

    /// Pointwise channel mixing at every spatial location (a convolution
    /// with kernel size one); spatial extents are untouched. This is the
    /// same contraction as [`Tape::dense`] applied over the channel axis.
    pub fn conv1x1(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let xs = self.value(x).shape();
        let ws = self.value(w).shape();
        if xs.len() < 2 || ws.len() != 2 || xs[xs.len() - 1] != ws[0] {
            return Err(CoreError::ShapeMismatch {
                op: "conv1x1",
                left: xs.to_vec(),
                right: ws.to_vec(),
            });
        }
        self.dense(x, w, b)
    }

    /// Wavelet-mixing component. `x` is `[batch, spatial.., channels]`;
    /// each learned final-level subband gets a per-location channel-mixing
    /// weight `[channels, channels, coarse spatial..]`. Unlearned subbands
    /// and all finer-level details pass through unchanged.
    pub fn wmc(
        &mut self,
        x: NodeId,
        weights: &[NodeId],
        filter: &WaveletFilter,
        levels: usize,
        learned: &[Subband],
    ) -> Result<NodeId> {
        let xs = self.value(x).shape().to_vec();
        let spatial_dims = match xs.len() {
            3 => 1,
            4 => 2,
            _ => {
                return Err(CoreError::InvalidArgument(format!(
                    "wmc expects [batch, spatial.., channels], got {xs:?}"
                )))
            }
        };
        if learned.is_empty() || learned.len() != weights.len() {
            return Err(CoreError::InvalidArgument(format!(
                "wmc needs one weight per learned subband ({} bands, {} weights)",
                learned.len(),
                weights.len()
            )));
        }
        for band in learned {
            if !band.valid_for_dims(spatial_dims) {
                return Err(CoreError::InvalidArgument(format!(
                    "subband {band} is not a {spatial_dims}D band"
                )));
            }
        }
        let channels = *xs.last().unwrap();
        let coarse: Vec<usize> = xs[1..xs.len() - 1]
            .iter()
            .map(|&e| e >> levels)
            .collect();
        let mut expect_w = vec![channels, channels];
        expect_w.extend_from_slice(&coarse);
        for &w in weights {
            if self.value(w).shape() != expect_w.as_slice() {
                return Err(CoreError::ShapeMismatch {
                    op: "wmc subband weight",
                    left: self.value(w).shape().to_vec(),
                    right: expect_w,
                });
            }
        }

        // Channels-first so the transform axes are trailing.
        let (xt, back_perm): (Tensor, Vec<usize>) = if spatial_dims == 1 {
            (self.value(x).permuted(&[0, 2, 1]), vec![0, 2, 1])
        } else {
            (self.value(x).permuted(&[0, 3, 1, 2]), vec![0, 2, 3, 1])
        };
        let batch = xs[0];
        let locs: usize = coarse.iter().product();

        let (value_t, saved) = if spatial_dims == 1 {
            let mut coeffs = dwt1d(&xt, filter, levels)?;
            let mut saved = Vec::with_capacity(learned.len());
            for (band, &w) in learned.iter().zip(weights) {
                let target = match band {
                    Subband::Approx => &mut coeffs.approx,
                    Subband::Detail => coeffs.details.last_mut().unwrap(),
                    _ => unreachable!("validated above"),
                };
                saved.push(target.clone());
                let mixed = mix_forward(target.data(), self.value(w).data(), batch, channels, locs);
                target.data_mut().copy_from_slice(&mixed);
            }
            (idwt1d(&coeffs, filter)?, saved)
        } else {
            let mut coeffs = dwt2d(&xt, filter, levels)?;
            let mut saved = Vec::with_capacity(learned.len());
            for (band, &w) in learned.iter().zip(weights) {
                let target = match band {
                    Subband::Ll => &mut coeffs.approx,
                    Subband::Lh => &mut coeffs.details.last_mut().unwrap().lh,
                    Subband::Hl => &mut coeffs.details.last_mut().unwrap().hl,
                    Subband::Hh => &mut coeffs.details.last_mut().unwrap().hh,
                    _ => unreachable!("validated above"),
                };
                saved.push(target.clone());
                let mixed = mix_forward(target.data(), self.value(w).data(), batch, channels, locs);
                target.data_mut().copy_from_slice(&mixed);
            }
            (idwt2d(&coeffs, filter)?, saved)
        };
        let value = value_t.permuted(&back_perm);
        let ctx = Box::new(WmcCtx {
            filter: filter.clone(),
            levels,
            learned: learned.to_vec(),
            saved_coeffs: saved,
            spatial_dims,
        });
        Ok(self.push(
            value,
            Op::Wmc {
                x,
                weights: weights.to_vec(),
                ctx,
            },
        ))
    }

    /// Mean over the batch of per-sample relative L2 error against a constant
    /// truth tensor; errors out on a zero-norm truth sample.
    pub fn relative_l2(&mut self, pred: NodeId, truth: &Tensor) -> Result<NodeId> {
        let ps = self.value(pred).shape();
        if ps != truth.shape() {
            return Err(CoreError::ShapeMismatch {
                op: "relative_l2",
                left: ps.to_vec(),
                right: truth.shape().to_vec(),
            });
        }
        let batch = ps[0];
        let per = self.value(pred).numel() / batch;
        let mut diff = self.value(pred).clone();
        for (d, t) in diff.data_mut().iter_mut().zip(truth.data()) {
            *d -= t;
        }
        let mut norms = Vec::with_capacity(batch);
        let mut loss = 0.0;
        for s in 0..batch {
            let num = l2_norm(&diff.data()[s * per..(s + 1) * per]);
            let den = l2_norm(&truth.data()[s * per..(s + 1) * per]);
            if den == 0.0 {
                return Err(CoreError::ZeroNormTruth { sample: s });
            }
            norms.push((num, den));
            loss += num / den;
        }
        loss /= batch as f64;
        let ctx = Box::new(RelL2Ctx { diff, norms });
        Ok(self.push(Tensor::scalar(loss), Op::RelativeL2 { pred, ctx }))
    }

    /// Sum of all elements, as a scalar node.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let total: f64 = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(total), Op::Sum { a })
    }

    /// Reverse sweep from a scalar loss; every parameter that participated
    /// receives its gradient (accumulated), non-participating parameters are
    /// left untouched (zero after a reset).
    pub fn backward_into(&self, loss: NodeId, params: &mut [Parameter]) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(CoreError::EmptyTape);
        }
        if self.value(loss).numel() != 1 {
            return Err(CoreError::LossNotScalar(self.value(loss).shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            match &self.nodes[idx].op {
                Op::Input => {}
                Op::Leaf { param } => {
                    let p = params.get_mut(*param).ok_or_else(|| {
                        CoreError::InvalidArgument(format!(
                            "leaf references parameter {param}, only {} provided",
                            grads.len()
                        ))
                    })?;
                    if p.gradient.shape() != grad.shape() {
                        return Err(CoreError::ShapeMismatch {
                            op: "backward leaf",
                            left: p.gradient.shape().to_vec(),
                            right: grad.shape().to_vec(),
                        });
                    }
                    for (g, u) in p.gradient.data_mut().iter_mut().zip(grad.data()) {
                        *g += u;
                    }
                }
                Op::Add { a, b } => {
                    accumulate(&mut grads, *a, grad.clone());
                    accumulate(&mut grads, *b, grad);
                }
                Op::Sub { a, b } => {
                    accumulate(&mut grads, *a, grad.clone());
                    accumulate(&mut grads, *b, grad.map(|v| -v));
                }
                Op::Mul { a, b } => {
                    let ga = grad.zip_map(self.value(*b), |g, v| g * v)?;
                    let gb = grad.zip_map(self.value(*a), |g, v| g * v)?;
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Scale { a, factor } => {
                    let f = *factor;
                    accumulate(&mut grads, *a, grad.map(|v| v * f));
                }
                Op::AddScaledConst { a } => {
                    accumulate(&mut grads, *a, grad);
                }
                Op::Gelu { a } => {
                    let ga = grad.zip_map(self.value(*a), |g, x| g * gelu_grad_scalar(x))?;
                    accumulate(&mut grads, *a, ga);
                }
                Op::Dense { x, w, b } => {
                    let xs = self.value(*x).shape();
                    let ws = self.value(*w).shape();
                    let (k, o) = (ws[0], ws[1]);
                    let rows = self.value(*x).numel() / k;
                    let mut gx = vec![0.0; rows * k];
                    let mut gw = vec![0.0; k * o];
                    let mut gb = vec![0.0; o];
                    dense_backward(
                        self.value(*x).data(),
                        self.value(*w).data(),
                        grad.data(),
                        rows,
                        k,
                        o,
                        &mut gx,
                        &mut gw,
                        &mut gb,
                    );
                    accumulate(&mut grads, *x, Tensor::new(xs.to_vec(), gx)?);
                    accumulate(&mut grads, *w, Tensor::new(ws.to_vec(), gw)?);
                    accumulate(&mut grads, *b, Tensor::from_vec(gb));
                }
                Op::Wmc { x, weights, ctx } => {
                    let (gx, gws) = self.wmc_backward(*x, weights, ctx, &grad)?;
                    accumulate(&mut grads, *x, gx);
                    for (&w, gw) in weights.iter().zip(gws) {
                        accumulate(&mut grads, w, gw);
                    }
                }
                Op::RelativeL2 { pred, ctx } => {
                    let g = grad.item();
                    let batch = ctx.norms.len();
                    let per = ctx.diff.numel() / batch;
                    let mut gp = ctx.diff.clone();
                    for (s, &(num, den)) in ctx.norms.iter().enumerate() {
                        // Subgradient 0 at an exact-zero residual.
                        let coeff = if num == 0.0 {
                            0.0
                        } else {
                            g / (batch as f64 * num * den)
                        };
                        for v in &mut gp.data_mut()[s * per..(s + 1) * per] {
                            *v *= coeff;
                        }
                    }
                    accumulate(&mut grads, *pred, gp);
                }
                Op::Sum { a } => {
                    let g = grad.item();
                    accumulate(&mut grads, *a, Tensor::full(self.value(*a).shape(), g));
                }
            }
        }
        Ok(())
    }

    fn wmc_backward(
        &self,
        x: NodeId,
        weights: &[NodeId],
        ctx: &WmcCtx,
        grad: &Tensor,
    ) -> Result<(Tensor, Vec<Tensor>)> {
        let xs = self.value(x).shape();
        let batch = xs[0];
        let channels = *xs.last().unwrap();
        let coarse: Vec<usize> = xs[1..xs.len() - 1]
            .iter()
            .map(|&e| e >> ctx.levels)
            .collect();
        let locs: usize = coarse.iter().product();

        let (gt, fwd_perm, back_perm): (Tensor, Vec<usize>, Vec<usize>) = if ctx.spatial_dims == 1 {
            (grad.permuted(&[0, 2, 1]), vec![0, 2, 1], vec![0, 2, 1])
        } else {
            (
                grad.permuted(&[0, 3, 1, 2]),
                vec![0, 3, 1, 2],
                vec![0, 2, 3, 1],
            )
        };
        let _ = fwd_perm;

        let mut gws = Vec::with_capacity(weights.len());
        let gx_t = if ctx.spatial_dims == 1 {
            let mut gc = dwt1d(&gt, &ctx.filter, ctx.levels)?;
            for ((band, &w), saved) in ctx.learned.iter().zip(weights).zip(&ctx.saved_coeffs) {
                let target = match band {
                    Subband::Approx => &mut gc.approx,
                    Subband::Detail => gc.details.last_mut().unwrap(),
                    _ => unreachable!(),
                };
                let wdata = self.value(w).data();
                let gw = mix_backward_weight(saved.data(), target.data(), batch, channels, locs);
                gws.push(Tensor::new(self.value(w).shape().to_vec(), gw)?);
                let gin = mix_backward_input(target.data(), wdata, batch, channels, locs);
                target.data_mut().copy_from_slice(&gin);
            }
            idwt1d(&gc, &ctx.filter)?
        } else {
            let mut gc = dwt2d(&gt, &ctx.filter, ctx.levels)?;
            for ((band, &w), saved) in ctx.learned.iter().zip(weights).zip(&ctx.saved_coeffs) {
                let target = match band {
                    Subband::Ll => &mut gc.approx,
                    Subband::Lh => &mut gc.details.last_mut().unwrap().lh,
                    Subband::Hl => &mut gc.details.last_mut().unwrap().hl,
                    Subband::Hh => &mut gc.details.last_mut().unwrap().hh,
                    _ => unreachable!(),
                };
                let wdata = self.value(w).data();
                let gw = mix_backward_weight(saved.data(), target.data(), batch, channels, locs);
                gws.push(Tensor::new(self.value(w).shape().to_vec(), gw)?);
                let gin = mix_backward_input(target.data(), wdata, batch, channels, locs);
                target.data_mut().copy_from_slice(&gin);
            }
            idwt2d(&gc, &ctx.filter)?
        };
        Ok((gx_t.permuted(&back_perm), gws))
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, update: Tensor) {
    match &mut grads[id.0] {
        Some(existing) => {
            for (g, u) in existing.data_mut().iter_mut().zip(update.data()) {
                *g += u;
            }
        }
        slot @ None => *slot = Some(update),
    }
}

fn binary_same_shape(
    op: &'static str,
    a: &Tensor,
    b: &Tensor,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Tensor> {
    if a.shape() != b.shape() {
        return Err(CoreError::ShapeMismatch {
            op,
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    a.zip_map(b, f)
}

/// Shared combine kernel for trainable-plus-scaled-prior sums; keeping one
/// code path makes cached and uncached training bitwise identical.
pub fn combine_scaled(acc: &mut [f64], addend: &[f64], beta: f64) {
    for (a, &c) in acc.iter_mut().zip(addend) {
        *a += beta * c;
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

pub fn gelu_scalar(x: f64) -> f64 {
    x * normal_cdf(x)
}

fn gelu_grad_scalar(x: f64) -> f64 {
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    normal_cdf(x) + x * pdf
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dense_forward(x: &[f64], w: &[f64], b: &[f64], rows: usize, k: usize, o: usize, out: &mut [f64]) {
    for r in 0..rows {
        let out_row = &mut out[r * o..(r + 1) * o];
        out_row.copy_from_slice(b);
        let x_row = &x[r * k..(r + 1) * k];
        for (kk, &xv) in x_row.iter().enumerate() {
            let w_row = &w[kk * o..(kk + 1) * o];
            for (ov, &wv) in out_row.iter_mut().zip(w_row) {
                *ov += xv * wv;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn dense_backward(
    x: &[f64],
    w: &[f64],
    g: &[f64],
    rows: usize,
    k: usize,
    o: usize,
    gx: &mut [f64],
    gw: &mut [f64],
    gb: &mut [f64],
) {
    for r in 0..rows {
        let g_row = &g[r * o..(r + 1) * o];
        let x_row = &x[r * k..(r + 1) * k];
        let gx_row = &mut gx[r * k..(r + 1) * k];
        for kk in 0..k {
            let w_row = &w[kk * o..(kk + 1) * o];
            let mut dot = 0.0;
            for (gv, wv) in g_row.iter().zip(w_row) {
                dot += gv * wv;
            }
            gx_row[kk] = dot;
            let xv = x_row[kk];
            let gw_row = &mut gw[kk * o..(kk + 1) * o];
            for (gwv, gv) in gw_row.iter_mut().zip(g_row) {
                *gwv += xv * gv;
            }
        }
        for (gbv, gv) in gb.iter_mut().zip(g_row) {
            *gbv += gv;
        }
    }
}

/// out[b, o, l] = sum_k w[k, o, l] * c[b, k, l]
fn mix_forward(c: &[f64], w: &[f64], batch: usize, p: usize, locs: usize) -> Vec<f64> {
    let mut out = vec![0.0; batch * p * locs];
    for bi in 0..batch {
        for k in 0..p {
            let c_row = &c[(bi * p + k) * locs..(bi * p + k + 1) * locs];
            for o in 0..p {
                let w_row = &w[(k * p + o) * locs..(k * p + o + 1) * locs];
                let out_row = &mut out[(bi * p + o) * locs..(bi * p + o + 1) * locs];
                for ((ov, wv), cv) in out_row.iter_mut().zip(w_row).zip(c_row) {
                    *ov += wv * cv;
                }
            }
        }
    }
    out
}

/// gc[b, k, l] = sum_o g[b, o, l] * w[k, o, l]
fn mix_backward_input(g: &[f64], w: &[f64], batch: usize, p: usize, locs: usize) -> Vec<f64> {
    let mut gc = vec![0.0; batch * p * locs];
    for bi in 0..batch {
        for k in 0..p {
            let gc_row = &mut gc[(bi * p + k) * locs..(bi * p + k + 1) * locs];
            for o in 0..p {
                let w_row = &w[(k * p + o) * locs..(k * p + o + 1) * locs];
                let g_row = &g[(bi * p + o) * locs..(bi * p + o + 1) * locs];
                for ((gcv, wv), gv) in gc_row.iter_mut().zip(w_row).zip(g_row) {
                    *gcv += wv * gv;
                }
            }
        }
    }
    gc
}

/// gw[k, o, l] = sum_b c[b, k, l] * g[b, o, l]
fn mix_backward_weight(c: &[f64], g: &[f64], batch: usize, p: usize, locs: usize) -> Vec<f64> {
    let mut gw = vec![0.0; p * p * locs];
    for bi in 0..batch {
        for k in 0..p {
            let c_row = &c[(bi * p + k) * locs..(bi * p + k + 1) * locs];
            for o in 0..p {
                let gw_row = &mut gw[(k * p + o) * locs..(k * p + o + 1) * locs];
                let g_row = &g[(bi * p + o) * locs..(bi * p + o + 1) * locs];
                for ((gwv, cv), gv) in gw_row.iter_mut().zip(c_row).zip(g_row) {
                    *gwv += cv * gv;
                }
            }
        }
    }
    gw
}
