//! Block-diagonal Hermitian matrices and the real inner product on them.

use std::ops::{Add, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type CMatrix = DMatrix<Complex64>;

/// A list of square complex blocks, treated as one vector in the real
/// Hilbert space with inner product `Re tr[A† B]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockVec {
    pub blocks: Vec<CMatrix>,
}

impl BlockVec {
    pub fn new(blocks: Vec<CMatrix>) -> Self {
        Self { blocks }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            blocks: sizes.iter().map(|&n| CMatrix::zeros(n, n)).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .map(|b| CMatrix::zeros(b.nrows(), b.ncols()))
                .collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn inner(&self, other: &BlockVec) -> f64 {
        debug_assert_eq!(self.blocks.len(), other.blocks.len());
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| x.re * y.re + x.im * y.im)
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &BlockVec) {
        for (s, b) in self.blocks.iter_mut().zip(&x.blocks) {
            s.zip_apply(b, |u, v| *u += v * a);
        }
    }

    pub fn scaled(&self, a: f64) -> BlockVec {
        BlockVec {
            blocks: self
                .blocks
                .iter()
                .map(|b| b * Complex64::new(a, 0.0))
                .collect(),
        }
    }

    /// Replace every block by `(B + B†)/2`.
    pub fn hermitize(&mut self) {
        for b in &mut self.blocks {
            hermitize_in_place(b);
        }
    }

    /// Largest entrywise deviation from Hermiticity over all blocks.
    pub fn hermiticity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(hermiticity_error)
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &BlockVec) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

impl Add for &BlockVec {
    type Output = BlockVec;
    fn add(self, rhs: &BlockVec) -> BlockVec {
        BlockVec {
            blocks: self
                .blocks
                .iter()
                .zip(&rhs.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &BlockVec {
    type Output = BlockVec;
    fn sub(self, rhs: &BlockVec) -> BlockVec {
        BlockVec {
            blocks: self
                .blocks
                .iter()
                .zip(&rhs.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// `W W†` through real products; nalgebra's real kernel is much faster than
/// its generic complex one.
pub fn gram_complex(w: &CMatrix) -> CMatrix {
    let (wr, wi) = (w.map(|z| z.re), w.map(|z| z.im));
    let re = &wr * wr.transpose() + &wi * wi.transpose();
    let im = &wi * wr.transpose() - &wr * wi.transpose();
    re.zip_map(&im, Complex64::new)
}

pub fn hermitize_in_place(b: &mut CMatrix) {
    let n = b.nrows();
    for i in 0..n {
        b[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let v = (b[(i, j)] + b[(j, i)].conj()) * 0.5;
            b[(i, j)] = v;
            b[(j, i)] = v.conj();
        }
    }
}

pub fn hermiticity_error(b: &CMatrix) -> f64 {
    let n = b.nrows();
    let mut err = 0.0f64;
    for i in 0..n {
        for j in i..n {
            err = err.max((b[(i, j)] - b[(j, i)].conj()).norm());
        }
    }
    err
}

/// Serializable form of a list of complex matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    /// Row-major real parts.
    pub re: Vec<f64>,
    /// Row-major imaginary parts.
    pub im: Vec<f64>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { rows, cols, re, im }
    }

    pub fn to_matrix(&self) -> crate::Result<CMatrix> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(crate::Error::LengthMismatch {
                expected: n,
                got: self.re.len().min(self.im.len()),
            });
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| {
            Complex64::new(self.re[i * self.cols + j], self.im[i * self.cols + j])
        }))
    }
}
