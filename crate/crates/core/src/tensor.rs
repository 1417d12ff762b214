//! Dense n-dimensional `f64` arrays in row-major order.
//!
//! `Tensor` is the universal value carrier: per-view feature matrices,
//! convolution kernels, affinity matrices and spectral embeddings all live
//! in this one type. Shapes are dynamic; all indexing is row-major.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense real tensor with a dynamic shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking that `data` fills `shape` exactly.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Dimension(format!("zero-sized dimension in shape {shape:?}")));
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} wants {numel} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel: usize = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![0.0; numel] }
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let numel: usize = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![value; numel] }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor { shape: vec![1], data: vec![value] }
    }

    /// Rank-2 constructor from nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Dimension(String::from("matrix needs at least one row")));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "ragged rows: expected {cols} columns, got {}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Tensor::new(vec![rows.len(), cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// True when the tensor holds exactly one value.
    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    pub fn scalar_value(&self) -> Result<f64> {
        if self.is_scalar() {
            Ok(self.data[0])
        } else {
            Err(Error::Usage(format!("expected scalar, got shape {:?}", self.shape)))
        }
    }

    /// Row-major element access for rank-2 tensors.
    #[inline]
    pub fn at2(&self, r: usize, c: usize) -> f64 {
        debug_assert_eq!(self.rank(), 2);
        self.data[r * self.shape[1] + c]
    }

    #[inline]
    pub fn set2(&mut self, r: usize, c: usize, v: f64) {
        debug_assert_eq!(self.rank(), 2);
        let cols = self.shape[1];
        self.data[r * cols + c] = v;
    }

    /// Reinterprets the buffer under a new shape with the same element count.
    pub fn reshaped(&self, shape: Vec<usize>) -> Result<Self> {
        Tensor::new(shape, self.data.clone())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// New tensor keeping only the given leading-dimension indices, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if self.rank() < 1 {
            return Err(Error::Dimension(String::from("select_rows needs rank >= 1")));
        }
        let n = self.shape[0];
        let row_len = self.data.len() / n;
        let mut shape = self.shape.clone();
        shape[0] = indices.len();
        let mut data = Vec::with_capacity(indices.len() * row_len);
        for &i in indices {
            if i >= n {
                return Err(Error::Dimension(format!("row {i} out of 0..{n}")));
            }
            data.extend_from_slice(&self.data[i * row_len..(i + 1) * row_len]);
        }
        Tensor::new(shape, data)
    }

    /// Rank-2 transpose.
    pub fn transposed(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(Error::Dimension(format!("transpose wants rank 2, got {:?}", self.shape)));
        }
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = Tensor::zeros(&[c, r]);
        for i in 0..r {
            for j in 0..c {
                out.data[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(out)
    }
}

/// Row-major matrix product of rank-2 tensors.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(Error::Dimension(format!(
            "matmul wants rank-2 tensors, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (n, p) = (a.shape[0], a.shape[1]);
    let (p2, q) = (b.shape[0], b.shape[1]);
    if p != p2 {
        return Err(Error::Dimension(format!(
            "matmul inner dimensions disagree: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut out = Tensor::zeros(&[n, q]);
    for i in 0..n {
        for k in 0..p {
            let aik = a.data[i * p + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b.data[k * q..(k + 1) * q];
            let orow = &mut out.data[i * q..(i + 1) * q];
            for j in 0..q {
                orow[j] += aik * brow[j];
            }
        }
    }
    Ok(out)
}
