// SPDX-License-Identifier: MIT OR Apache-2.0

//! Reverse-mode differentiation over a recorded tape of tensor primitives.
//!
//! Every primitive evaluates eagerly when it is pushed, so the node values
//! double as the saved state for the backward rules. Nodes are appended in
//! evaluation order, which makes the tape topologically sorted by
//! construction.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Largest Jacobian `full_jacobian` will materialize.
pub const JACOBIAN_ROW_GUARD: usize = 4096;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conv2dGeom {
    pub stride: usize,
    pub padding: usize,
}

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param,
    Const,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Gelu(Var),
    Conv2d(Var, Var, Var, Conv2dGeom),
    Reshape(Var),
    Slice {
        x: Var,
        axis: usize,
        start: usize,
        end: usize,
    },
    ReduceSum {
        x: Var,
        axis: usize,
    },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Param => "param",
            Op::Const => "const",
            Op::MatMul(..) => "matmul",
            Op::Transpose(_) => "transpose",
            Op::Add(..) => "add",
            Op::AddBias(..) => "add_bias",
            Op::Mul(..) => "mul",
            Op::Relu(_) => "relu",
            Op::Gelu(_) => "gelu",
            Op::Conv2d(..) => "conv2d",
            Op::Reshape(_) => "reshape",
            Op::Slice { .. } => "slice",
            Op::ReduceSum { .. } => "reduce_sum",
        }
    }

    fn operands(&self) -> Vec<Var> {
        match *self {
            Op::Input | Op::Param | Op::Const => vec![],
            Op::MatMul(a, b) | Op::Add(a, b) | Op::AddBias(a, b) | Op::Mul(a, b) => vec![a, b],
            Op::Transpose(x) | Op::Relu(x) | Op::Gelu(x) | Op::Reshape(x) => vec![x],
            Op::Conv2d(x, w, b, _) => vec![x, w, b],
            Op::Slice { x, .. } | Op::ReduceSum { x, .. } => vec![x],
        }
    }
}

#[derive(Clone, Debug)]
struct Node<S> {
    op: Op,
    value: Tensor<S>,
    needs_grad: bool,
}

/// Recorded computation: primitive records in evaluation order plus the
/// designated input and output nodes.
#[derive(Clone, Debug, Default)]
pub struct Tape<S = f64> {
    nodes: Vec<Node<S>>,
    input: Option<Var>,
    output: Option<Var>,
}

/// Per-node gradients from [`Tape::backward`].
#[derive(Clone, Debug)]
pub struct Gradients<S = f64> {
    grads: Vec<Option<Tensor<S>>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn get(&self, v: Var) -> Option<&Tensor<S>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<S>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            input: None,
            output: None,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.nodes[v.0].value
    }

    pub fn input_var(&self) -> Option<Var> {
        self.input
    }

    pub fn output_var(&self) -> Option<Var> {
        self.output
    }

    pub fn output(&self) -> Option<&Tensor<S>> {
        self.output.map(|v| self.value(v))
    }

    pub fn set_output(&mut self, v: Var) {
        self.output = Some(v);
    }

    /// Names of the recorded primitives, in order.
    pub fn op_names(&self) -> Vec<&'static str> {
        self.nodes.iter().map(|n| n.op.name()).collect()
    }

    fn push(&mut self, op: Op, value: Tensor<S>) -> Var {
        let needs_grad = match op {
            Op::Input | Op::Param => true,
            Op::Const => false,
            _ => op.operands().iter().any(|v| self.nodes[v.0].needs_grad),
        };
        self.nodes.push(Node {
            op,
            value,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Differentiable leaf; the first one becomes the tape's input.
    pub fn input(&mut self, t: Tensor<S>) -> Var {
        let v = self.push(Op::Input, t);
        self.input.get_or_insert(v);
        v
    }

    /// Differentiable leaf that is not the input (e.g. a trainable weight).
    pub fn param(&mut self, t: Tensor<S>) -> Var {
        self.push(Op::Param, t)
    }

    /// Non-differentiable leaf.
    pub fn constant(&mut self, t: Tensor<S>) -> Var {
        self.push(Op::Const, t)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::MatMul(a, b), out))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let out = self.value(x).transpose()?;
        Ok(self.push(Op::Transpose(x), out))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).add(self.value(b))?;
        Ok(self.push(Op::Add(a, b), out))
    }

    /// Adds a per-channel bias along axis 1 (axis 0 for rank-1 inputs).
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let out = add_bias_fwd(self.value(x), self.value(bias))?;
        Ok(self.push(Op::AddBias(x, bias), out))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).mul(self.value(b))?;
        Ok(self.push(Op::Mul(a, b), out))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(relu);
        self.push(Op::Relu(x), out)
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(gelu);
        self.push(Op::Gelu(x), out)
    }

    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, geom: Conv2dGeom) -> Result<Var> {
        let out = conv2d_fwd(self.value(x), self.value(w), self.value(b), geom)?;
        Ok(self.push(Op::Conv2d(x, w, b, geom), out))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(x).reshape(shape)?;
        Ok(self.push(Op::Reshape(x), out))
    }

    pub fn slice(&mut self, x: Var, axis: usize, start: usize, end: usize) -> Result<Var> {
        let out = slice_fwd(self.value(x), axis, start, end)?;
        Ok(self.push(Op::Slice { x, axis, start, end }, out))
    }

    pub fn reduce_sum(&mut self, x: Var, axis: usize) -> Result<Var> {
        let out = reduce_sum_fwd(self.value(x), axis)?;
        Ok(self.push(Op::ReduceSum { x, axis }, out))
    }

    /// Re-evaluates every node from its recorded op, substituting `input`
    /// for the input leaf. Leaves other than the input keep their values.
    pub fn replay(&self, input: &Tensor<S>) -> Result<Tensor<S>> {
        let in_var = self
            .input
            .ok_or_else(|| Error::invalid("tape has no input node"))?;
        if input.shape() != self.value(in_var).shape() {
            return Err(Error::shape("replay", self.value(in_var).shape(), input.shape()));
        }
        let mut vals: Vec<Tensor<S>> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let v = |x: Var| &vals[x.0];
            let out = match node.op {
                Op::Input if i == in_var.0 => input.clone(),
                Op::Input | Op::Param | Op::Const => node.value.clone(),
                Op::MatMul(a, b) => v(a).matmul(v(b))?,
                Op::Transpose(x) => v(x).transpose()?,
                Op::Add(a, b) => v(a).add(v(b))?,
                Op::AddBias(x, b) => add_bias_fwd(v(x), v(b))?,
                Op::Mul(a, b) => v(a).mul(v(b))?,
                Op::Relu(x) => v(x).map(relu),
                Op::Gelu(x) => v(x).map(gelu),
                Op::Conv2d(x, w, b, g) => conv2d_fwd(v(x), v(w), v(b), g)?,
                Op::Reshape(x) => v(x).reshape(node.value.shape())?,
                Op::Slice { x, axis, start, end } => slice_fwd(v(x), axis, start, end)?,
                Op::ReduceSum { x, axis } => reduce_sum_fwd(v(x), axis)?,
            };
            vals.push(out);
        }
        let out = self
            .output
            .ok_or_else(|| Error::invalid("tape has no output node"))?;
        Ok(vals.swap_remove(out.0))
    }

    /// Propagates `cotangent` from the output back to every differentiable node.
    pub fn backward(&self, cotangent: &Tensor<S>) -> Result<Gradients<S>> {
        let out = self
            .output
            .ok_or_else(|| Error::invalid("tape has no output node"))?;
        if cotangent.shape() != self.value(out).shape() {
            return Err(Error::shape("vjp", self.value(out).shape(), cotangent.shape()));
        }
        let mut grads: Vec<Option<Tensor<S>>> = vec![None; self.nodes.len()];
        grads[out.0] = Some(cotangent.clone());

        for i in (0..=out.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let wants = |v: Var| self.nodes[v.0].needs_grad;
            match node.op {
                Op::Input | Op::Param | Op::Const => {
                    grads[i] = Some(g);
                }
                Op::MatMul(a, b) => {
                    if wants(a) {
                        let ga = g.matmul(&self.value(b).transpose()?)?;
                        accumulate(&mut grads, a, ga)?;
                    }
                    if wants(b) {
                        let gb = self.value(a).transpose()?.matmul(&g)?;
                        accumulate(&mut grads, b, gb)?;
                    }
                }
                Op::Transpose(x) => accumulate(&mut grads, x, g.transpose()?)?,
                Op::Add(a, b) => {
                    if wants(b) {
                        accumulate(&mut grads, b, g.clone())?;
                    }
                    if wants(a) {
                        accumulate(&mut grads, a, g)?;
                    }
                }
                Op::AddBias(x, b) => {
                    if wants(b) {
                        let gb = bias_grad(&g, self.value(b).len());
                        accumulate(&mut grads, b, gb)?;
                    }
                    if wants(x) {
                        accumulate(&mut grads, x, g)?;
                    }
                }
                Op::Mul(a, b) => {
                    if wants(a) {
                        accumulate(&mut grads, a, g.mul(self.value(b))?)?;
                    }
                    if wants(b) {
                        accumulate(&mut grads, b, g.mul(self.value(a))?)?;
                    }
                }
                Op::Relu(x) => {
                    let gx = g.zip_map(self.value(x), "relu", |gi, xi| gi * relu_grad(xi))?;
                    accumulate(&mut grads, x, gx)?;
                }
                Op::Gelu(x) => {
                    let gx = g.zip_map(self.value(x), "gelu", |gi, xi| gi * gelu_grad(xi))?;
                    accumulate(&mut grads, x, gx)?;
                }
                Op::Conv2d(x, w, b, geom) => {
                    let (gx, gw, gb) =
                        conv2d_bwd(&g, self.value(x), self.value(w), geom, wants(x), wants(w))?;
                    if let Some(gx) = gx {
                        accumulate(&mut grads, x, gx)?;
                    }
                    if let Some(gw) = gw {
                        accumulate(&mut grads, w, gw)?;
                    }
                    if wants(b) {
                        accumulate(&mut grads, b, gb)?;
                    }
                }
                Op::Reshape(x) => {
                    let gx = g.reshape(self.value(x).shape())?;
                    accumulate(&mut grads, x, gx)?;
                }
                Op::Slice { x, axis, start, .. } => {
                    let gx = slice_bwd(&g, self.value(x).shape(), axis, start);
                    accumulate(&mut grads, x, gx)?;
                }
                Op::ReduceSum { x, axis } => {
                    let gx = reduce_sum_bwd(&g, self.value(x).shape(), axis);
                    accumulate(&mut grads, x, gx)?;
                }
            }
        }
        Ok(Gradients { grads })
    }
}

fn accumulate<S: Scalar>(grads: &mut [Option<Tensor<S>>], v: Var, g: Tensor<S>) -> Result<()> {
    match &mut grads[v.0] {
        Some(acc) => {
            if acc.shape() != g.shape() {
                return Err(Error::shape("accumulate", acc.shape(), g.shape()));
            }
            for (a, &b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(g),
    }
    Ok(())
}

/// Records `graph_fn` applied to `input` and returns the output together
/// with the tape needed for backward passes.
pub fn forward_record<S, F>(graph_fn: F, input: Tensor<S>) -> Result<(Tensor<S>, Tape<S>)>
where
    S: Scalar,
    F: FnOnce(&mut Tape<S>, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let x = tape.input(input);
    let out = graph_fn(&mut tape, x)?;
    tape.set_output(out);
    Ok((tape.value(out).clone(), tape))
}

/// `cotangentᵀ · J`, shaped like the tape input.
pub fn vjp<S: Scalar>(tape: &Tape<S>, cotangent: &Tensor<S>) -> Result<Tensor<S>> {
    let input = tape
        .input_var()
        .ok_or_else(|| Error::invalid("tape has no input node"))?;
    let mut grads = tape.backward(cotangent)?;
    Ok(grads
        .take(input)
        .unwrap_or_else(|| Tensor::zeros(tape.value(input).shape())))
}

/// Dense Jacobian of the flattened output with respect to the flattened
/// input, assembled one basis cotangent at a time.
pub fn full_jacobian<S: Scalar>(tape: &Tape<S>) -> Result<Tensor<S>> {
    let out = tape
        .output()
        .ok_or_else(|| Error::invalid("tape has no output node"))?;
    let rows = out.len();
    if rows > JACOBIAN_ROW_GUARD {
        return Err(Error::JacobianGuard {
            rows,
            guard: JACOBIAN_ROW_GUARD,
        });
    }
    let out_shape = out.shape().to_vec();
    let input = tape
        .input_var()
        .ok_or_else(|| Error::invalid("tape has no input node"))?;
    let cols = tape.value(input).len();
    let mut jac = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let mut e = Tensor::zeros(&out_shape);
        e.data_mut()[r] = S::one();
        jac.extend_from_slice(vjp(tape, &e)?.data());
    }
    Tensor::new(vec![rows, cols], jac)
}

// ---- primitive kernels ----

/// ReLU with the convention that the derivative at exactly zero is zero.
#[inline]
pub fn relu<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        x
    } else {
        S::zero()
    }
}

#[inline]
pub fn relu_grad<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        S::one()
    } else {
        S::zero()
    }
}

const GELU_K: f64 = 0.044_715;
// sqrt(2 / pi)
const GELU_C: f64 = 0.797_884_560_802_865_4;

/// Tanh approximation of GELU.
#[inline]
pub fn gelu<S: Scalar>(x: S) -> S {
    let u = S::c(GELU_C) * (x + S::c(GELU_K) * x * x * x);
    S::c(0.5) * x * (S::one() + u.tanh())
}

#[inline]
pub fn gelu_grad<S: Scalar>(x: S) -> S {
    let u = S::c(GELU_C) * (x + S::c(GELU_K) * x * x * x);
    let t = u.tanh();
    let du = S::c(GELU_C) * (S::one() + S::c(3.0 * GELU_K) * x * x);
    S::c(0.5) * (S::one() + t) + S::c(0.5) * x * (S::one() - t * t) * du
}

fn bias_layout(x_shape: &[usize], bias_len: usize) -> Option<(usize, usize)> {
    let (outer, c, inner) = match x_shape.len() {
        0 => return None,
        1 => (1, x_shape[0], 1),
        _ => (x_shape[0], x_shape[1], x_shape[2..].iter().product()),
    };
    (c == bias_len).then_some((outer, inner))
}

fn add_bias_fwd<S: Scalar>(x: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    let (outer, inner) = bias_layout(x.shape(), b.len())
        .filter(|_| b.rank() == 1)
        .ok_or_else(|| Error::shape("add_bias", x.shape(), b.shape()))?;
    let c = b.len();
    let mut out = x.clone();
    let d = out.data_mut();
    for o in 0..outer {
        for (ci, &bv) in b.data().iter().enumerate() {
            let base = (o * c + ci) * inner;
            for v in &mut d[base..base + inner] {
                *v += bv;
            }
        }
    }
    Ok(out)
}

fn bias_grad<S: Scalar>(g: &Tensor<S>, c: usize) -> Tensor<S> {
    let (outer, inner) = bias_layout(g.shape(), c).expect("validated in forward");
    let mut gb = vec![S::zero(); c];
    for o in 0..outer {
        for (ci, acc) in gb.iter_mut().enumerate() {
            let base = (o * c + ci) * inner;
            for &v in &g.data()[base..base + inner] {
                *acc += v;
            }
        }
    }
    Tensor::vector(gb)
}

fn conv_out(size: usize, k: usize, g: Conv2dGeom) -> Option<usize> {
    (size + 2 * g.padding)
        .checked_sub(k)
        .filter(|_| g.stride > 0)
        .map(|v| v / g.stride + 1)
}

fn conv2d_fwd<S: Scalar>(
    x: &Tensor<S>,
    w: &Tensor<S>,
    b: &Tensor<S>,
    g: Conv2dGeom,
) -> Result<Tensor<S>> {
    if x.rank() != 4 || w.rank() != 4 || x.shape()[1] != w.shape()[1] {
        return Err(Error::shape("conv2d", x.shape(), w.shape()));
    }
    if b.shape() != [w.shape()[0]] {
        return Err(Error::shape("conv2d bias", w.shape(), b.shape()));
    }
    let (n, c, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (o, kh, kw) = (w.shape()[0], w.shape()[2], w.shape()[3]);
    let (Some(ho), Some(wo)) = (conv_out(h, kh, g), conv_out(wd, kw, g)) else {
        return Err(Error::shape("conv2d", x.shape(), w.shape()));
    };
    let p = g.padding as isize;
    let mut out = vec![S::zero(); n * o * ho * wo];
    let xd = x.data();
    let wdat = w.data();
    for ni in 0..n {
        for oi in 0..o {
            let ob = ((ni * o + oi) * ho) * wo;
            for yo in 0..ho {
                for xo in 0..wo {
                    let mut acc = b.data()[oi];
                    for ci in 0..c {
                        for ky in 0..kh {
                            let yi = (yo * g.stride + ky) as isize - p;
                            if yi < 0 || yi >= h as isize {
                                continue;
                            }
                            for kx in 0..kw {
                                let xi = (xo * g.stride + kx) as isize - p;
                                if xi < 0 || xi >= wd as isize {
                                    continue;
                                }
                                let xv = xd[((ni * c + ci) * h + yi as usize) * wd + xi as usize];
                                let wv = wdat[((oi * c + ci) * kh + ky) * kw + kx];
                                acc += xv * wv;
                            }
                        }
                    }
                    out[ob + yo * wo + xo] = acc;
                }
            }
        }
    }
    Tensor::new(vec![n, o, ho, wo], out)
}

type ConvGrads<S> = (Option<Tensor<S>>, Option<Tensor<S>>, Tensor<S>);

fn conv2d_bwd<S: Scalar>(
    gout: &Tensor<S>,
    x: &Tensor<S>,
    w: &Tensor<S>,
    g: Conv2dGeom,
    want_x: bool,
    want_w: bool,
) -> Result<ConvGrads<S>> {
    let (n, c, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (o, kh, kw) = (w.shape()[0], w.shape()[2], w.shape()[3]);
    let (ho, wo) = (gout.shape()[2], gout.shape()[3]);
    let p = g.padding as isize;
    let mut gx = vec![S::zero(); if want_x { x.len() } else { 0 }];
    let mut gw = vec![S::zero(); if want_w { w.len() } else { 0 }];
    let mut gb = vec![S::zero(); o];
    let xd = x.data();
    let wdat = w.data();
    let gd = gout.data();
    for ni in 0..n {
        for oi in 0..o {
            let ob = ((ni * o + oi) * ho) * wo;
            for yo in 0..ho {
                for xo in 0..wo {
                    let gv = gd[ob + yo * wo + xo];
                    gb[oi] += gv;
                    if gv == S::zero() {
                        continue;
                    }
                    for ci in 0..c {
                        for ky in 0..kh {
                            let yi = (yo * g.stride + ky) as isize - p;
                            if yi < 0 || yi >= h as isize {
                                continue;
                            }
                            for kx in 0..kw {
                                let xi = (xo * g.stride + kx) as isize - p;
                                if xi < 0 || xi >= wd as isize {
                                    continue;
                                }
                                let xidx = ((ni * c + ci) * h + yi as usize) * wd + xi as usize;
                                let widx = ((oi * c + ci) * kh + ky) * kw + kx;
                                if want_x {
                                    gx[xidx] += gv * wdat[widx];
                                }
                                if want_w {
                                    gw[widx] += gv * xd[xidx];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let gx = want_x
        .then(|| Tensor::new(x.shape().to_vec(), gx))
        .transpose()?;
    let gw = want_w
        .then(|| Tensor::new(w.shape().to_vec(), gw))
        .transpose()?;
    Ok((gx, gw, Tensor::vector(gb)))
}

/// (outer, axis length, inner) strides of `axis` in `shape`.
fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn slice_fwd<S: Scalar>(x: &Tensor<S>, axis: usize, start: usize, end: usize) -> Result<Tensor<S>> {
    if axis >= x.rank() || start > end || end > x.shape()[axis] {
        return Err(Error::invalid(format!(
            "slice [{start}, {end}) on axis {axis} does not fit shape {:?}",
            x.shape()
        )));
    }
    let (outer, len, inner) = axis_split(x.shape(), axis);
    let mut data = Vec::with_capacity(outer * (end - start) * inner);
    for o in 0..outer {
        let base = o * len * inner;
        data.extend_from_slice(&x.data()[base + start * inner..base + end * inner]);
    }
    let mut shape = x.shape().to_vec();
    shape[axis] = end - start;
    Tensor::new(shape, data)
}

fn slice_bwd<S: Scalar>(g: &Tensor<S>, x_shape: &[usize], axis: usize, start: usize) -> Tensor<S> {
    let (outer, len, inner) = axis_split(x_shape, axis);
    let w = g.shape()[axis] * inner;
    let mut out = Tensor::zeros(x_shape);
    for o in 0..outer {
        let dst = o * len * inner + start * inner;
        out.data_mut()[dst..dst + w].copy_from_slice(&g.data()[o * w..(o + 1) * w]);
    }
    out
}

fn reduce_sum_fwd<S: Scalar>(x: &Tensor<S>, axis: usize) -> Result<Tensor<S>> {
    if axis >= x.rank() {
        return Err(Error::invalid(format!(
            "reduce_sum axis {axis} out of range for shape {:?}",
            x.shape()
        )));
    }
    let (outer, len, inner) = axis_split(x.shape(), axis);
    let mut data = vec![S::zero(); outer * inner];
    for o in 0..outer {
        for l in 0..len {
            let src = &x.data()[(o * len + l) * inner..(o * len + l + 1) * inner];
            for (d, &s) in data[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                *d += s;
            }
        }
    }
    let mut shape = x.shape().to_vec();
    shape.remove(axis);
    Tensor::new(shape, data)
}

fn reduce_sum_bwd<S: Scalar>(g: &Tensor<S>, x_shape: &[usize], axis: usize) -> Tensor<S> {
    let (outer, len, inner) = axis_split(x_shape, axis);
    let mut out = Tensor::zeros(x_shape);
    for o in 0..outer {
        let src = &g.data()[o * inner..(o + 1) * inner];
        for l in 0..len {
            let base = (o * len + l) * inner;
            out.data_mut()[base..base + inner].copy_from_slice(src);
        }
    }
    out
}
