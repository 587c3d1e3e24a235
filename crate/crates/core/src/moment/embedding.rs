use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{apply_symmetry_filter, canonicalize, Monomial, Symmetry};
use crate::linalg::{BlockVec, CMatrix, MatrixRecord};

use super::affine::{NormalSolver, SlotMap};
use super::layout::{Family, IndexMap, MomentLevel};
use super::params::ParamSpace;

/// Block-diagonal moment matrix in the layout of an [`IndexMap`].
#[derive(Clone, Debug)]
pub struct MomentMatrix {
    map: Arc<IndexMap>,
    blocks: BlockVec,
}

impl MomentMatrix {
    pub fn new(map: Arc<IndexMap>, blocks: BlockVec) -> Result<Self> {
        let sizes = map.block_sizes();
        if blocks.sizes() != sizes || blocks.blocks.iter().any(|b| !b.is_square()) {
            return Err(Error::LengthMismatch {
                expected: map.dim(),
                got: blocks.sizes().iter().sum(),
            });
        }
        Ok(Self { map, blocks })
    }

    pub fn index_map(&self) -> &IndexMap {
        &self.map
    }

    pub fn shared_map(&self) -> Arc<IndexMap> {
        self.map.clone()
    }

    pub fn blocks(&self) -> &BlockVec {
        &self.blocks
    }

    pub fn into_blocks(self) -> BlockVec {
        self.blocks
    }

    /// Copy of a named family sub-block, if present in the layout.
    pub fn family(&self, family: Family) -> Option<CMatrix> {
        let loc = self.map.family(family)?;
        Some(
            self.blocks.blocks[loc.block]
                .view((loc.row_offset, loc.col_offset), (loc.rows, loc.cols))
                .into_owned(),
        )
    }

    /// `⟨a_i† a_i⟩`
    pub fn density(&self, i: usize) -> f64 {
        let t = self.map.family(Family::T).expect("every layout has T");
        self.blocks.blocks[t.block][(t.row_offset + i, t.col_offset + i)].re
    }

    /// `⟨a_i† a_j† a_j a_i⟩`, the diagonal of `M` at pair `(i, j)`.
    pub fn pair_density(&self, i: usize, j: usize) -> Option<f64> {
        let m = self.map.family(Family::M)?;
        let r = m.row_offset + i * self.map.n_sites() + j;
        Some(self.blocks.blocks[m.block][(r, r)].re)
    }

    pub fn to_record(&self) -> MomentRecord {
        MomentRecord {
            format: MOMENT_FORMAT.into(),
            n_sites: self.map.n_sites(),
            symmetry: self.map.symmetry(),
            level: self.map.level(),
            layout: StorageLayout::Dense,
            blocks: self
                .blocks
                .blocks
                .iter()
                .map(MatrixRecord::from_matrix)
                .collect(),
        }
    }

    pub fn from_record(record: &MomentRecord) -> Result<Self> {
        if record.layout != StorageLayout::Dense {
            return Err(Error::UnsupportedScope(
                "record holds translation-invariant parameters".into(),
            ));
        }
        let map = IndexMap::new(record.n_sites, record.symmetry, record.level)?;
        let blocks = record
            .blocks
            .iter()
            .map(MatrixRecord::to_matrix)
            .collect::<Result<Vec<_>>>()?;
        Self::new(Arc::new(map), BlockVec::new(blocks))
    }
}

pub const MOMENT_FORMAT: &str = "groundbound-moments/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StorageLayout {
    /// Blocks of the moment matrix itself.
    Dense,
    /// One matrix per block, rows indexed by group pair, columns by offset.
    TranslationInvariant,
}

/// JSON form of moment data used for reports and warm starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRecord {
    pub format: String,
    pub n_sites: usize,
    pub symmetry: Symmetry,
    pub level: MomentLevel,
    pub layout: StorageLayout,
    pub blocks: Vec<MatrixRecord>,
}

/// Affine parametrization `X = L p + const` of all moment matrices obeying the
/// anti-commutation relations and the symmetry filter.
pub struct AffineEmbedding {
    map: Arc<IndexMap>,
    params: ParamSpace,
    slots: SlotMap,
    solver: NormalSolver,
}

/// Expression of the entry `⟨O_i† O_j⟩` for the given basis operators.
pub(crate) fn entry_expression(
    row: &Monomial,
    col: &Monomial,
    symmetry: Symmetry,
) -> crate::fermion::AffineExpression {
    let m = row
        .adjoint()
        .concat(col)
        .expect("moment entries have order at most 4");
    apply_symmetry_filter(&canonicalize(&m), symmetry)
}

impl AffineEmbedding {
    pub fn new(map: IndexMap) -> Result<Self> {
        Self::from_shared(Arc::new(map))
    }

    pub fn from_shared(map: Arc<IndexMap>) -> Result<Self> {
        let sym = map.symmetry();
        let mut params = ParamSpace::new(None);
        let exprs = map.blocks().iter().flat_map(|b| {
            let ops: Vec<Monomial> = b.rows.iter().map(|r| r.operator()).collect();
            let n = ops.len();
            (0..n * n).map(move |e| entry_expression(&ops[e / n], &ops[e % n], sym))
        });
        let slots = SlotMap::build(exprs, sym, &mut params);
        let solver = NormalSolver::new(&slots, &params)?;
        Ok(Self {
            map,
            params,
            slots,
            solver,
        })
    }

    pub fn index_map(&self) -> &IndexMap {
        &self.map
    }

    pub fn shared_map(&self) -> Arc<IndexMap> {
        self.map.clone()
    }

    pub fn param_space(&self) -> &ParamSpace {
        &self.params
    }

    /// Number of free real coordinates.
    pub fn n_params(&self) -> usize {
        self.params.n_coords()
    }

    /// Number of independent real entries of the stored Hermitian blocks.
    pub fn n_entry_coords(&self) -> usize {
        self.map.block_sizes().iter().map(|n| n * n).sum()
    }

    pub fn embed(&self, p: &[f64]) -> Result<MomentMatrix> {
        if p.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                got: p.len(),
            });
        }
        Ok(MomentMatrix {
            map: self.map.clone(),
            blocks: self.from_slots(&self.slots.apply(p)),
        })
    }

    /// Least-squares parameters of a matrix; exact inverse of [`Self::embed`].
    pub fn extract(&self, x: &MomentMatrix) -> Vec<f64> {
        self.extract_blocks(x.blocks())
    }

    pub fn extract_blocks(&self, x: &BlockVec) -> Vec<f64> {
        self.solver.fit(&self.slots, &self.to_slots(x))
    }

    /// Orthogonal projection onto the affine set.
    pub fn project(&self, x: &BlockVec) -> BlockVec {
        let p = self.extract_blocks(x);
        self.from_slots(&self.slots.apply(&p))
    }

    /// Orthogonal projection onto the linear span of the embedding directions.
    pub fn project_linear(&self, x: &BlockVec) -> BlockVec {
        let p = self.solver.fit_linear(&self.slots, &self.to_slots(x));
        self.from_slots(&self.slots.apply_linear(&p))
    }

    /// Value of a canonical key in the matrix `embed(p)`; `None` if the key is
    /// not part of this relaxation.
    pub fn key_value(&self, key: &Monomial, p: &[f64]) -> Option<Complex64> {
        match self.params.lookup(key)? {
            Some(r) => Some(self.params.value(r, p)),
            None => Some(Complex64::new(0.0, 0.0)),
        }
    }

    pub fn zeros(&self) -> BlockVec {
        BlockVec::zeros(&self.map.block_sizes())
    }

    fn to_slots(&self, x: &BlockVec) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.slots.n_slots());
        for b in &x.blocks {
            let n = b.nrows();
            for i in 0..n {
                for j in 0..n {
                    out.push(b[(i, j)]);
                }
            }
        }
        out
    }

    fn from_slots(&self, v: &[Complex64]) -> BlockVec {
        let mut blocks = Vec::with_capacity(self.map.blocks().len());
        let mut off = 0;
        for n in self.map.block_sizes() {
            blocks.push(CMatrix::from_fn(n, n, |i, j| v[off + i * n + j]));
            off += n * n;
        }
        BlockVec::new(blocks)
    }
}

/// Real parameter count of the number-conserving fourth-moment relaxation on
/// `n` sites: `n²` for `⟨a_i† a_j⟩` plus `C(n,2)²` for `⟨a_i† a_j† a_l a_k⟩`.
pub fn number_conserving_fourth_count(n: usize) -> usize {
    let pairs = n * n.saturating_sub(1) / 2;
    n * n + pairs * pairs
}
