//! Dense vectors and matrices plus the value-level kernels shared by the tape.
//!
//! Entries are held as `f64`. Everything that leaves the process (feature
//! files, checkpoints) is 32-bit, and parameters are kept on the 32-bit grid
//! after every update, so the wider storage only buys accumulation headroom.

use serde::{Deserialize, Serialize};

use crate::error::{F2sError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Tensor1 {
    data: Vec<f64>,
}

impl Tensor1 {
    pub fn new(data: Vec<f64>) -> Self {
        Tensor1 { data }
    }

    pub fn zeros(len: usize) -> Self {
        Tensor1 {
            data: vec![0.0; len],
        }
    }

    pub fn from_f32(values: &[f32]) -> Self {
        Tensor1 {
            data: values.iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

impl From<Vec<f64>> for Tensor1 {
    fn from(data: Vec<f64>) -> Self {
        Tensor1 { data }
    }
}

impl std::ops::Index<usize> for Tensor1 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

/// Row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(F2sError::config(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Tensor2 { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Tensor2::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(F2sError::config("ragged rows in matrix literal"));
        }
        Tensor2::new(r, c, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

fn shape_error(op: &str, left: String, right: String) -> F2sError {
    F2sError::config(format!("{op}: shape mismatch between {left} and {right}"))
}

/// `out = W x + b` on raw row-major storage.
pub(crate) fn affine_into(x: &[f64], w: &[f64], b: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w[i * cols..(i + 1) * cols];
        let mut acc = 0.0f64;
        for (wij, xj) in row.iter().zip(x) {
            acc += wij * xj;
        }
        *o = acc + b[i];
    }
}

pub(crate) fn softmax_into(v: &[f64], out: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (x - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

pub(crate) fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn linear_forward(x: &Tensor1, w: &Tensor2, b: &Tensor1) -> Result<Tensor1> {
    if w.cols != x.len() || w.rows != b.len() {
        return Err(shape_error(
            "linear_forward",
            format!("W[{}x{}]", w.rows, w.cols),
            format!("x[{}], b[{}]", x.len(), b.len()),
        ));
    }
    let mut out = vec![0.0; w.rows];
    affine_into(&x.data, &w.data, &b.data, &mut out);
    Ok(Tensor1::new(out))
}

/// Softmax with max subtraction. Returns an error for empty or non-finite input.
pub fn softmax(v: &Tensor1) -> Result<Tensor1> {
    if v.is_empty() {
        return Err(F2sError::config("softmax of an empty vector"));
    }
    if !v.is_finite() {
        return Err(F2sError::Numeric("softmax input is not finite".into()));
    }
    let mut out = vec![0.0; v.len()];
    softmax_into(&v.data, &mut out);
    Ok(Tensor1::new(out))
}

pub fn sigmoid(v: &Tensor1) -> Tensor1 {
    Tensor1::new(v.data.iter().map(|&x| sigmoid_scalar(x)).collect())
}

pub fn relu(v: &Tensor1) -> Tensor1 {
    Tensor1::new(v.data.iter().map(|&x| x.max(0.0)).collect())
}

pub fn mse(a: &Tensor1, b: &Tensor1) -> Result<f64> {
    if a.len() != b.len() {
        return Err(shape_error(
            "mse",
            format!("[{}]", a.len()),
            format!("[{}]", b.len()),
        ));
    }
    if a.is_empty() {
        return Err(F2sError::config("mse of empty vectors"));
    }
    let total: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(total / a.len() as f64)
}

pub fn dot(a: &Tensor1, b: &Tensor1) -> Result<f64> {
    if a.len() != b.len() {
        return Err(shape_error(
            "dot",
            format!("[{}]", a.len()),
            format!("[{}]", b.len()),
        ));
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

pub fn concat(parts: &[&Tensor1]) -> Tensor1 {
    let mut out = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
    for p in parts {
        out.extend_from_slice(&p.data);
    }
    Tensor1::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_identity_and_zero_weights() {
        let x = Tensor1::new(vec![1.0, 2.0]);
        let out = linear_forward(&x, &Tensor2::identity(2), &Tensor1::zeros(2)).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 2.0]);

        let x = Tensor1::new(vec![-7.5, 0.25, 9.0]);
        let out = linear_forward(&x, &Tensor2::zeros(2, 3), &Tensor1::new(vec![3.0, 4.0])).unwrap();
        assert_eq!(out.as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn linear_hand_multiply() {
        let x = Tensor1::new(vec![1.0, 2.0]);
        let w = Tensor2::from_rows(&[vec![1.0, 1.0], vec![2.0, 0.0]]).unwrap();
        let out = linear_forward(&x, &w, &Tensor1::new(vec![0.0, 1.0])).unwrap();
        assert_eq!(out.as_slice(), &[3.0, 3.0]);
    }

    #[test]
    fn linear_shape_mismatch_names_shapes() {
        let err = linear_forward(&Tensor1::zeros(3), &Tensor2::zeros(2, 2), &Tensor1::zeros(2))
            .unwrap_err()
            .to_string();
        assert!(err.contains("W[2x2]") && err.contains("x[3]"), "{err}");
    }

    #[test]
    fn softmax_cases() {
        let out = softmax(&Tensor1::zeros(3)).unwrap();
        for p in out.iter() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let out = softmax(&Tensor1::new(vec![0.0, 3f64.ln()])).unwrap();
        assert!((out[0] - 0.25).abs() < 1e-12);
        assert!((out[1] - 0.75).abs() < 1e-12);

        let a = softmax(&Tensor1::new(vec![0.0, 0.7, -1.2])).unwrap();
        let b = softmax(&Tensor1::new(vec![500.0, 500.7, 498.8])).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-6);
        }
        assert!(softmax(&Tensor1::zeros(0)).is_err());
    }

    #[test]
    fn sigmoid_cases() {
        assert_eq!(sigmoid(&Tensor1::new(vec![0.0]))[0], 0.5);
        let v = sigmoid(&Tensor1::new(vec![3f64.ln()]));
        assert!((v[0] - 0.75).abs() < 1e-12);
        for x in [-30.0, -2.5, 0.1, 4.0, 700.0] {
            let s = sigmoid_scalar(x) + sigmoid_scalar(-x);
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(sigmoid_scalar(-800.0).is_finite());
    }

    #[test]
    fn mse_cases() {
        let a = Tensor1::new(vec![0.3, -1.0]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&Tensor1::zeros(2), &Tensor1::new(vec![1.0, 1.0])).unwrap(), 1.0);
        let v = mse(&Tensor1::new(vec![0.3]), &Tensor1::new(vec![0.5])).unwrap();
        assert!((v - 0.04).abs() < 1e-15);
        assert!(mse(&Tensor1::zeros(2), &Tensor1::zeros(3)).is_err());
    }
}
