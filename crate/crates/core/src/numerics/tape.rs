//! Reverse-mode differentiation over a fixed vocabulary of vector ops.
//!
//! A [`Tape`] borrows an immutable [`ParamStore`] and records every op of one
//! forward pass. [`Tape::backward`] walks the record in exact reverse order and
//! adds each parameter's gradient into a [`Gradients`] buffer keyed by
//! [`ParamId`]. Parameters that never reach the output keep a gradient of
//! exactly zero.

use serde::{Deserialize, Serialize};

use super::tensor::{affine_into, sigmoid_scalar, softmax_into};
use crate::error::{F2sError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

/// Named, shaped, flat parameter buffers. Matrices are stored row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    names: Vec<String>,
    shapes: Vec<Vec<usize>>,
    values: Vec<Vec<f64>>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) -> Result<ParamId> {
        let name = name.into();
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(F2sError::config(format!(
                "parameter {name} has shape {shape:?} but {} values",
                values.len()
            )));
        }
        if self.names.contains(&name) {
            return Err(F2sError::config(format!("duplicate parameter name {name}")));
        }
        self.names.push(name);
        self.shapes.push(shape);
        self.values.push(values);
        Ok(ParamId(self.values.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn shape(&self, id: ParamId) -> &[usize] {
        &self.shapes[id.0]
    }

    pub fn values(&self, id: ParamId) -> &[f64] {
        &self.values[id.0]
    }

    pub fn values_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.values[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn total_len(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }
}

/// Per-parameter gradient accumulators, shaped like a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    values: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Gradients {
            values: store.values.iter().map(|v| vec![0.0; v.len()]).collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.values[id.0]
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.values.iter_mut().flatten() {
            *v *= factor;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(ParamId),
    Linear { x: NodeId, w: NodeId, b: NodeId },
    Relu(NodeId),
    Softmax(NodeId),
    Sigmoid(NodeId),
    AddScalar(NodeId),
    Concat(Vec<NodeId>),
    Dot(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// vector times a length-1 node
    MulScalar(NodeId, NodeId),
    Scale(NodeId, f64),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    SumSquares(NodeId),
    Index(NodeId, usize),
}

#[derive(Debug)]
struct Node {
    op: Op,
    /// `None` for parameter nodes, whose value lives in the store.
    value: Option<Vec<f64>>,
    requires_grad: bool,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        let node = &self.nodes[id.0];
        match (&node.value, &node.op) {
            (Some(v), _) => v,
            (None, Op::Param(p)) => self.params.values(*p),
            (None, _) => unreachable!("non-parameter node without a value"),
        }
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        self.value(id)[0]
    }

    fn push(&mut self, op: Op, value: Vec<f64>, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value: Some(value),
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn rg(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// A constant leaf. Gradients are not propagated into it.
    pub fn input(&mut self, values: Vec<f64>) -> NodeId {
        self.push(Op::Input, values, false)
    }

    pub fn param(&mut self, id: ParamId) -> NodeId {
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
            requires_grad: true,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Copy of `x` that backward treats as a constant.
    pub fn stop_gradient(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x).to_vec();
        self.input(v)
    }

    /// `W x + b` where `w` is a row-major `[b.len() x x.len()]` node.
    pub fn linear(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let (xl, wl, bl) = (self.value(x).len(), self.value(w).len(), self.value(b).len());
        if wl != xl * bl {
            return Err(F2sError::config(format!(
                "linear: weight has {wl} entries, expected {bl}x{xl}"
            )));
        }
        let mut out = vec![0.0; bl];
        affine_into(self.value(x), self.value(w), self.value(b), &mut out);
        let rg = self.rg(x) || self.rg(w) || self.rg(b);
        Ok(self.push(Op::Linear { x, w, b }, out, rg))
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let out = self.value(x).iter().map(|v| v.max(0.0)).collect();
        let rg = self.rg(x);
        self.push(Op::Relu(x), out, rg)
    }

    pub fn softmax(&mut self, x: NodeId) -> NodeId {
        let v = self.value(x);
        let mut out = vec![0.0; v.len()];
        softmax_into(v, &mut out);
        let rg = self.rg(x);
        self.push(Op::Softmax(x), out, rg)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let out = self.value(x).iter().map(|&v| sigmoid_scalar(v)).collect();
        let rg = self.rg(x);
        self.push(Op::Sigmoid(x), out, rg)
    }

    pub fn add_scalar(&mut self, x: NodeId, c: f64) -> NodeId {
        let out = self.value(x).iter().map(|v| v + c).collect();
        let rg = self.rg(x);
        self.push(Op::AddScalar(x), out, rg)
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let mut out = Vec::new();
        for p in parts {
            out.extend_from_slice(self.value(*p));
        }
        let rg = parts.iter().any(|p| self.rg(*p));
        self.push(Op::Concat(parts.to_vec()), out, rg)
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len("dot", a, b)?;
        let s: f64 = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).sum();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Dot(a, b), vec![s], rg))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len("mul", a, b)?;
        let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Mul(a, b), out, rg))
    }

    pub fn mul_scalar(&mut self, v: NodeId, s: NodeId) -> Result<NodeId> {
        if self.value(s).len() != 1 {
            return Err(F2sError::config("mul_scalar: scalar operand must have length 1"));
        }
        let c = self.scalar(s);
        let out = self.value(v).iter().map(|x| x * c).collect();
        let rg = self.rg(v) || self.rg(s);
        Ok(self.push(Op::MulScalar(v, s), out, rg))
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        let out = self.value(x).iter().map(|v| v * c).collect();
        let rg = self.rg(x);
        self.push(Op::Scale(x, c), out, rg)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len("add", a, b)?;
        let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Add(a, b), out, rg))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len("sub", a, b)?;
        let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x - y).collect();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Sub(a, b), out, rg))
    }

    pub fn sum_squares(&mut self, x: NodeId) -> NodeId {
        let s: f64 = self.value(x).iter().map(|v| v * v).sum();
        let rg = self.rg(x);
        self.push(Op::SumSquares(x), vec![s], rg)
    }

    pub fn index(&mut self, x: NodeId, i: usize) -> Result<NodeId> {
        let v = *self
            .value(x)
            .get(i)
            .ok_or_else(|| F2sError::config(format!("index {i} out of range")))?;
        let rg = self.rg(x);
        Ok(self.push(Op::Index(x, i), vec![v], rg))
    }

    /// Mean squared error between two equal-length nodes.
    pub fn mse(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let n = self.value(a).len();
        if n == 0 {
            return Err(F2sError::config("mse of empty vectors"));
        }
        let d = self.sub(a, b)?;
        let s = self.sum_squares(d);
        Ok(self.scale(s, 1.0 / n as f64))
    }

    fn same_len(&self, op: &str, a: NodeId, b: NodeId) -> Result<()> {
        let (la, lb) = (self.value(a).len(), self.value(b).len());
        if la != lb {
            return Err(F2sError::config(format!("{op}: lengths {la} and {lb} differ")));
        }
        Ok(())
    }

    /// Back-propagates `seed * d(output)` and adds the result into `grads`.
    /// `output` must be a scalar node.
    pub fn backward(&self, output: NodeId, seed: f64, grads: &mut Gradients) -> Result<()> {
        if self.value(output).len() != 1 {
            return Err(F2sError::config("backward requires a scalar output"));
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        adj[output.0] = Some(vec![seed]);

        for idx in (0..=output.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Input => {}
                Op::Param(p) => {
                    for (a, d) in grads.get_mut(*p).iter_mut().zip(&g) {
                        *a += d;
                    }
                }
                Op::Linear { x, w, b } => {
                    let xv = self.value(*x);
                    let wv = self.value(*w);
                    let cols = xv.len();
                    if self.rg(*x) {
                        let gx = self.slot(&mut adj, *x);
                        for (i, gi) in g.iter().enumerate() {
                            if *gi == 0.0 {
                                continue;
                            }
                            let row = &wv[i * cols..(i + 1) * cols];
                            for (gxj, wij) in gx.iter_mut().zip(row) {
                                *gxj += gi * wij;
                            }
                        }
                    }
                    if self.rg(*w) {
                        let gw = self.slot(&mut adj, *w);
                        for (i, gi) in g.iter().enumerate() {
                            if *gi == 0.0 {
                                continue;
                            }
                            let row = &mut gw[i * cols..(i + 1) * cols];
                            for (gwij, xj) in row.iter_mut().zip(xv) {
                                *gwij += gi * xj;
                            }
                        }
                    }
                    if self.rg(*b) {
                        add_into(self.slot(&mut adj, *b), &g);
                    }
                }
                Op::Relu(x) => {
                    let out = node.value.as_deref().unwrap();
                    let gx = self.slot(&mut adj, *x);
                    for ((a, d), o) in gx.iter_mut().zip(&g).zip(out) {
                        if *o > 0.0 {
                            *a += d;
                        }
                    }
                }
                Op::Softmax(x) => {
                    let p = node.value.as_deref().unwrap();
                    let inner: f64 = p.iter().zip(&g).map(|(pi, gi)| pi * gi).sum();
                    let gx = self.slot(&mut adj, *x);
                    for ((a, pi), gi) in gx.iter_mut().zip(p).zip(&g) {
                        *a += pi * (gi - inner);
                    }
                }
                Op::Sigmoid(x) => {
                    let s = node.value.as_deref().unwrap();
                    let gx = self.slot(&mut adj, *x);
                    for ((a, si), gi) in gx.iter_mut().zip(s).zip(&g) {
                        *a += gi * si * (1.0 - si);
                    }
                }
                Op::AddScalar(x) => add_into(self.slot(&mut adj, *x), &g),
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let len = self.value(*p).len();
                        if self.rg(*p) {
                            add_into(self.slot(&mut adj, *p), &g[offset..offset + len]);
                        }
                        offset += len;
                    }
                }
                Op::Dot(a, b) => {
                    let gs = g[0];
                    if self.rg(*a) {
                        let bv = self.value(*b);
                        for (x, y) in self.slot(&mut adj, *a).iter_mut().zip(bv) {
                            *x += gs * y;
                        }
                    }
                    if self.rg(*b) {
                        let av = self.value(*a);
                        for (x, y) in self.slot(&mut adj, *b).iter_mut().zip(av) {
                            *x += gs * y;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    if self.rg(*a) {
                        let bv = self.value(*b);
                        for ((x, y), gi) in self.slot(&mut adj, *a).iter_mut().zip(bv).zip(&g) {
                            *x += gi * y;
                        }
                    }
                    if self.rg(*b) {
                        let av = self.value(*a);
                        for ((x, y), gi) in self.slot(&mut adj, *b).iter_mut().zip(av).zip(&g) {
                            *x += gi * y;
                        }
                    }
                }
                Op::MulScalar(v, s) => {
                    let c = self.scalar(*s);
                    if self.rg(*v) {
                        for (x, gi) in self.slot(&mut adj, *v).iter_mut().zip(&g) {
                            *x += gi * c;
                        }
                    }
                    if self.rg(*s) {
                        let vv = self.value(*v);
                        let total: f64 = vv.iter().zip(&g).map(|(x, gi)| x * gi).sum();
                        self.slot(&mut adj, *s)[0] += total;
                    }
                }
                Op::Scale(x, c) => {
                    for (a, gi) in self.slot(&mut adj, *x).iter_mut().zip(&g) {
                        *a += gi * c;
                    }
                }
                Op::Add(a, b) => {
                    if self.rg(*a) {
                        add_into(self.slot(&mut adj, *a), &g);
                    }
                    if self.rg(*b) {
                        add_into(self.slot(&mut adj, *b), &g);
                    }
                }
                Op::Sub(a, b) => {
                    if self.rg(*a) {
                        add_into(self.slot(&mut adj, *a), &g);
                    }
                    if self.rg(*b) {
                        for (x, gi) in self.slot(&mut adj, *b).iter_mut().zip(&g) {
                            *x -= gi;
                        }
                    }
                }
                Op::SumSquares(x) => {
                    let xv = self.value(*x);
                    let gs = g[0];
                    for (a, v) in self.slot(&mut adj, *x).iter_mut().zip(xv) {
                        *a += 2.0 * v * gs;
                    }
                }
                Op::Index(x, i) => {
                    self.slot(&mut adj, *x)[*i] += g[0];
                }
            }
        }
        Ok(())
    }

    fn slot<'a>(&self, adj: &'a mut [Option<Vec<f64>>], id: NodeId) -> &'a mut Vec<f64> {
        let len = self.value(id).len();
        adj[id.0].get_or_insert_with(|| vec![0.0; len])
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
