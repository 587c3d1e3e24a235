//! Projections onto the PSD cone and the affine constraint set, and
//! Dykstra's algorithm for the projection onto their intersection.

use faer::{Mat, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gram_complex, hermitize_in_place, BlockVec, CMatrix};
use crate::moment::AffineEmbedding;

/// Frobenius-nearest PSD matrix: eigendecompose the Hermitian part and clamp
/// negative eigenvalues to zero.
pub fn project_psd(h: &CMatrix) -> Result<CMatrix> {
    let mut m = h.clone();
    hermitize_in_place(&mut m);
    if m.iter().all(|z| z.im == 0.0) {
        let real = m.map(|z| z.re);
        return project_psd_real(&real).map(|r| r.map(|v| Complex64::new(v, 0.0)));
    }
    let n = m.nrows();
    let eig = Mat::<Complex64>::from_fn(n, n, |i, j| m[(i, j)])
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| {
            Error::Numerical(format!(
                "Hermitian eigendecomposition failed: {e:?} ({})",
                diagnostics(&m)
            ))
        })?;
    let (vals, vecs) = (eig.S().column_vector(), eig.U());
    let pos: Vec<usize> = (0..n).filter(|&k| vals[k].re > 0.0).collect();
    let w = CMatrix::from_fn(n, pos.len(), |i, c| {
        vecs[(i, pos[c])] * vals[pos[c]].re.sqrt()
    });
    let mut out = gram_complex(&w);
    hermitize_in_place(&mut out);
    Ok(out)
}

fn project_psd_real(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let eig = Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)])
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| {
            Error::Numerical(format!(
                "symmetric eigendecomposition failed: {e:?} ({})",
                diagnostics(&m.map(|v| Complex64::new(v, 0.0)))
            ))
        })?;
    let (vals, vecs) = (eig.S().column_vector(), eig.U());
    let pos: Vec<usize> = (0..n).filter(|&k| vals[k] > 0.0).collect();
    let v = DMatrix::<f64>::from_fn(n, pos.len(), |i, c| vecs[(i, pos[c])] * vals[pos[c]].sqrt());
    let out = &v * v.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

fn diagnostics(m: &CMatrix) -> String {
    let fro = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let finite = m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    format!(
        "dimension {}, Frobenius norm {fro:e}, finite entries {finite}",
        m.nrows()
    )
}

/// Smallest eigenvalue of the Hermitian part of `h`.
pub fn min_eigenvalue(h: &CMatrix) -> f64 {
    let mut m = h.clone();
    hermitize_in_place(&mut m);
    if m.nrows() == 0 {
        return 0.0;
    }
    m.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn min_eigenvalue_blocks(x: &BlockVec) -> f64 {
    x.blocks
        .iter()
        .map(min_eigenvalue)
        .fold(f64::INFINITY, f64::min)
}

/// Blockwise PSD projection; blocks are independent and run in parallel.
pub fn project_psd_blocks(x: &BlockVec) -> Result<BlockVec> {
    let blocks = x
        .blocks
        .par_iter()
        .map(project_psd)
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockVec::new(blocks))
}

/// A closed convex set with a computable orthogonal projection.
pub trait ConvexSet: Sync {
    fn project(&self, x: &BlockVec) -> Result<BlockVec>;
}

/// The cone of block-diagonal PSD matrices.
#[derive(Clone, Copy, Debug, Default)]
pub struct PsdCone;

impl ConvexSet for PsdCone {
    fn project(&self, x: &BlockVec) -> Result<BlockVec> {
        project_psd_blocks(x)
    }
}

impl ConvexSet for AffineEmbedding {
    fn project(&self, x: &BlockVec) -> Result<BlockVec> {
        Ok(project_affine(x, self))
    }
}

impl<F> ConvexSet for F
where
    F: Fn(&BlockVec) -> BlockVec + Sync,
{
    fn project(&self, x: &BlockVec) -> Result<BlockVec> {
        Ok(self(x))
    }
}

/// Frobenius-nearest point of the affine set `{L p + const}`.
pub fn project_affine(x: &BlockVec, emb: &AffineEmbedding) -> BlockVec {
    emb.project(x)
}

/// Quantity compared against `tau` after each sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoppingStatistic {
    /// `Σ_i ‖I_i^k − I_i^{k−1}‖²_F` over the per-set increments.
    #[default]
    SquaredIncrementChange,
    /// Square root of the above.
    IncrementChange,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DykstraConfig {
    pub tau: f64,
    pub max_sweeps: usize,
    #[serde(default)]
    pub statistic: StoppingStatistic,
}

impl Default for DykstraConfig {
    fn default() -> Self {
        Self {
            tau: 1e-8,
            max_sweeps: 1_000_000,
            statistic: StoppingStatistic::default(),
        }
    }
}

impl DykstraConfig {
    pub fn new(tau: f64) -> Self {
        Self {
            tau,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || self.max_sweeps == 0 {
            return Err(Error::Numerical(format!(
                "invalid Dykstra configuration {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DykstraState {
    pub iterate: BlockVec,
    pub increments: Vec<BlockVec>,
    pub sweeps: usize,
    pub statistic: f64,
}

/// Dykstra's algorithm for the projection of `x0` onto the intersection of
/// `sets`, visited in the given order each sweep. The returned point is the
/// output of the last set's projection.
pub fn dykstra_project(
    x0: &BlockVec,
    sets: &[&dyn ConvexSet],
    cfg: &DykstraConfig,
) -> Result<(BlockVec, DykstraState)> {
    cfg.validate()?;
    let mut x = x0.clone();
    let mut increments: Vec<BlockVec> = sets.iter().map(|_| x0.zeros_like()).collect();
    let mut sweeps = 0;
    loop {
        let mut change = 0.0;
        for (set, inc) in sets.iter().zip(increments.iter_mut()) {
            let shifted = &x + inc;
            let y = set.project(&shifted)?;
            let next = &shifted - &y;
            change += (&next - inc).norm_sq();
            *inc = next;
            x = y;
        }
        sweeps += 1;
        let statistic = match cfg.statistic {
            StoppingStatistic::SquaredIncrementChange => change,
            StoppingStatistic::IncrementChange => change.sqrt(),
        };
        if !statistic.is_finite() {
            return Err(Error::Numerical(format!(
                "Dykstra statistic became {statistic}"
            )));
        }
        if statistic <= cfg.tau {
            let state = DykstraState {
                iterate: x.clone(),
                increments,
                sweeps,
                statistic,
            };
            return Ok((x, state));
        }
        if sweeps >= cfg.max_sweeps {
            return Err(Error::DykstraNotConverged { sweeps, statistic });
        }
    }
}
