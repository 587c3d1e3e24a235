//! Translation-invariant relaxations.
//!
//! Pair rows `(k, l)` are regrouped by offset `d = l − k mod N`, and single
//! rows form one group per operator kind. Under translation invariance every
//! group-by-group subblock is an `N × N` circulant, so the discrete Fourier
//! transform splits each moment block into `N` sectors whose entries are the
//! circulant eigenvalues
//!
//! `λ_{a,c}(f) = Σ_r x_{a,c}(r) ω^{−rf}`, `ω = e^{2πi/N}`,
//!
//! where `x_{a,c}(r)` is the entry between position 0 of group `a` and
//! position `r` of group `c`. The transform preserves the Frobenius inner
//! product, so projections computed on sectors equal projections of the full
//! matrix restricted to translation-invariant matrices.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fermion::{canonicalize, AffineExpression, Monomial};
use crate::linalg::{BlockVec, CMatrix, MatrixRecord};
use crate::models::HamiltonianSpec;
use crate::moment::{
    entry_expression, hamiltonian_entries, BasisKind, BasisOp, Family, IndexMap, MomentMatrix,
    MomentRecord, NormalSolver, ParamSpace, SlotMap, StorageLayout, MOMENT_FORMAT,
};
use crate::oracle::PairMoments;
use crate::projections::project_psd;
use crate::solver::{minimize, Init, Relaxation, SolveReport, SolverConfig, Step};

/// Unitary DFT matrix `V_{kl} = e^{−2πi kl/N}/√N` (zero-based).
#[derive(Clone, Debug)]
pub struct DftUnitary {
    pub n: usize,
    pub v: CMatrix,
}

pub fn dft_unitary(n: usize) -> DftUnitary {
    let s = 1.0 / (n as f64).sqrt();
    DftUnitary {
        n,
        v: CMatrix::from_fn(n, n, |k, l| omega_pow(n, -((k * l % n.max(1)) as i64)) * s),
    }
}

fn omega_pow(n: usize, e: i64) -> Complex64 {
    let e = e.rem_euclid(n as i64) as f64;
    Complex64::from_polar(1.0, 2.0 * PI * e / n as f64)
}

/// Pair order grouped by offset: `(0,0), (1,1), …, (0,1), (1,2), …, (N−1,0), …`.
pub fn reorder_permutation(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|d| (0..n).map(move |k| (k, (k + d) % n)))
        .collect()
}

#[derive(Clone, Debug)]
struct TiBlock {
    /// Dense row of position `k` in group `g`: `rows[g][k]`.
    rows: Vec<Vec<usize>>,
    /// Group and position of each dense row.
    place: Vec<(usize, usize)>,
    /// Basis kind and offset of each group.
    groups: Vec<(BasisKind, usize)>,
    slot_offset: usize,
}

impl TiBlock {
    fn n_groups(&self) -> usize {
        self.groups.len()
    }
}

/// Real-space representative entries of a translation-invariant moment
/// matrix: per block, a `g² × N` matrix with row `a·g + c` and column `r`
/// holding `x_{a,c}(r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TiParameters {
    pub n_sites: usize,
    pub symmetry: crate::fermion::Symmetry,
    pub level: crate::moment::MomentLevel,
    pub blocks: Vec<CMatrix>,
}

impl TiParameters {
    pub fn to_record(&self) -> MomentRecord {
        MomentRecord {
            format: MOMENT_FORMAT.into(),
            n_sites: self.n_sites,
            symmetry: self.symmetry,
            level: self.level,
            layout: StorageLayout::TranslationInvariant,
            blocks: self.blocks.iter().map(MatrixRecord::from_matrix).collect(),
        }
    }

    pub fn from_record(r: &MomentRecord) -> Result<Self> {
        if r.layout != StorageLayout::TranslationInvariant {
            return Err(Error::UnsupportedScope(
                "record holds a dense moment matrix".into(),
            ));
        }
        Ok(Self {
            n_sites: r.n_sites,
            symmetry: r.symmetry,
            level: r.level,
            blocks: r
                .blocks
                .iter()
                .map(MatrixRecord::to_matrix)
                .collect::<Result<_>>()?,
        })
    }
}

/// Energy functional on sector matrices.
#[derive(Clone, Debug)]
pub struct TiObjective {
    pub g: BlockVec,
    pub c: f64,
    /// Representative entries of `G` are all real.
    pub real: bool,
}

impl TiObjective {
    pub fn energy(&self, sectors: &BlockVec) -> f64 {
        self.g.inner(sectors) + self.c
    }
}

/// Affine parametrization of translation-invariant moment matrices, acting
/// on sector matrices.
pub struct TiEmbedding {
    map: Arc<IndexMap>,
    n: usize,
    blocks: Vec<TiBlock>,
    params: ParamSpace,
    slots: SlotMap,
    solver: NormalSolver,
    dft: RowDft,
}

/// Row-wise transforms `λ(f) = Σ_r x(r) ω^{−rf}` and `x(r) = Σ_f λ(f) ω^{rf} / N`.
struct RowDft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RowDft {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Transform each of `rows` rows given by `entry(row, column)`.
    fn rows(
        &self,
        rows: usize,
        inverse: bool,
        entry: impl Fn(usize, usize) -> Complex64,
    ) -> CMatrix {
        let n = self.n;
        let mut buf: Vec<Complex64> = (0..rows * n).map(|k| entry(k / n, k % n)).collect();
        if rows > 0 {
            if inverse {
                self.inverse.process(&mut buf);
            } else {
                self.forward.process(&mut buf);
            }
        }
        let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
        CMatrix::from_fn(rows, n, |i, j| buf[i * n + j] * scale)
    }
}

impl TiEmbedding {
    pub fn new(map: Arc<IndexMap>) -> Result<Self> {
        let n = map.n_sites();
        let mut blocks = Vec::new();
        let mut offset = 0;
        for layout in map.blocks() {
            let mut groups = Vec::new();
            for &kind in &layout.kinds {
                if kind.is_pair() {
                    groups.extend((0..n).map(|d| (kind, d)));
                } else {
                    groups.push((kind, 0));
                }
            }
            let mut rows = vec![vec![0; n]; groups.len()];
            let mut place = vec![(0, 0); layout.dim()];
            for (g, &(kind, d)) in groups.iter().enumerate() {
                for (k, slot) in rows[g].iter_mut().enumerate() {
                    let op = BasisOp {
                        kind,
                        k,
                        l: if kind.is_pair() { (k + d) % n } else { k },
                    };
                    let (_, row) = map
                        .locate(&op.operator())
                        .expect("basis operator present in its block");
                    *slot = row;
                    place[row] = (g, k);
                }
            }
            let ng = groups.len();
            blocks.push(TiBlock {
                rows,
                place,
                groups,
                slot_offset: offset,
            });
            offset += ng * ng * n;
        }
        let sym = map.symmetry();
        let ops: Vec<Vec<Monomial>> = map
            .blocks()
            .iter()
            .map(|b| b.rows.iter().map(|r| r.operator()).collect())
            .collect();
        let exprs = blocks.iter().enumerate().flat_map(|(b, blk)| {
            let ops = &ops[b];
            let ng = blk.n_groups();
            (0..ng * ng * n).map(move |s| {
                let (ac, r) = (s / n, s % n);
                let (a, c) = (ac / ng, ac % ng);
                entry_expression(&ops[blk.rows[a][0]], &ops[blk.rows[c][r]], sym)
            })
        });
        let mut params = ParamSpace::new(Some(n));
        let slots = SlotMap::build(exprs, sym, &mut params);
        let solver = NormalSolver::new(&slots, &params)?;
        Ok(Self {
            map,
            n,
            blocks,
            params,
            slots,
            solver,
            dft: RowDft::new(n),
        })
    }

    pub fn index_map(&self) -> &IndexMap {
        &self.map
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn param_space(&self) -> &ParamSpace {
        &self.params
    }

    /// Number of free real coordinates.
    pub fn n_params(&self) -> usize {
        self.params.n_coords()
    }

    /// Sector matrix sizes, ordered sector-major: index `f · n_blocks + b`.
    pub fn sector_sizes(&self) -> Vec<usize> {
        let per: Vec<usize> = self.blocks.iter().map(TiBlock::n_groups).collect();
        (0..self.n).flat_map(|_| per.iter().copied()).collect()
    }

    pub fn zero_sectors(&self) -> BlockVec {
        BlockVec::zeros(&self.sector_sizes())
    }

    fn slot_values(&self, p: &TiParameters) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.slots.n_slots());
        for m in &p.blocks {
            for row in 0..m.nrows() {
                for r in 0..self.n {
                    v.push(m[(row, r)]);
                }
            }
        }
        v
    }

    fn params_from_slots(&self, v: &[Complex64]) -> TiParameters {
        let blocks = self
            .blocks
            .iter()
            .map(|blk| {
                let g2 = blk.n_groups() * blk.n_groups();
                CMatrix::from_fn(g2, self.n, |row, r| v[blk.slot_offset + row * self.n + r])
            })
            .collect();
        TiParameters {
            n_sites: self.n,
            symmetry: self.map.symmetry(),
            level: self.map.level(),
            blocks,
        }
    }

    fn check_shape(&self, p: &TiParameters) -> Result<()> {
        let ok = p.n_sites == self.n
            && p.blocks.len() == self.blocks.len()
            && p.blocks
                .iter()
                .zip(&self.blocks)
                .all(|(m, b)| m.shape() == (b.n_groups() * b.n_groups(), self.n));
        if ok {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.slots.n_slots(),
                got: p.blocks.iter().map(|m| m.len()).sum(),
            })
        }
    }

    /// Sector matrices of translation-invariant parameters.
    pub fn to_sectors(&self, p: &TiParameters) -> Result<BlockVec> {
        self.check_shape(p)?;
        let nb = self.blocks.len();
        let mut out = self.zero_sectors();
        for (b, (blk, m)) in self.blocks.iter().zip(&p.blocks).enumerate() {
            let lam = self.dft.rows(m.nrows(), false, |i, r| m[(i, r)]);
            let ng = blk.n_groups();
            for f in 0..self.n {
                let s = &mut out.blocks[f * nb + b];
                for a in 0..ng {
                    for c in 0..ng {
                        s[(a, c)] = lam[(a * ng + c, f)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`Self::to_sectors`].
    pub fn from_sectors(&self, sectors: &BlockVec) -> TiParameters {
        let nb = self.blocks.len();
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(b, blk)| {
                let ng = blk.n_groups();
                self.dft.rows(ng * ng, true, |ac, f| {
                    sectors.blocks[f * nb + b][(ac / ng, ac % ng)]
                })
            })
            .collect();
        TiParameters {
            n_sites: self.n,
            symmetry: self.map.symmetry(),
            level: self.map.level(),
            blocks,
        }
    }

    /// Dense moment matrix with the given representative entries.
    pub fn reconstruct(&self, p: &TiParameters) -> Result<MomentMatrix> {
        self.check_shape(p)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&p.blocks)
            .map(|(blk, m)| {
                let dim = blk.place.len();
                let ng = blk.n_groups();
                CMatrix::from_fn(dim, dim, |i, j| {
                    let (a, k) = blk.place[i];
                    let (c, l) = blk.place[j];
                    m[(a * ng + c, (l + self.n - k) % self.n)]
                })
            })
            .collect();
        MomentMatrix::new(self.map.clone(), BlockVec::new(blocks))
    }

    /// Representative entries of a dense matrix, averaged over translations.
    pub fn parameters_of(&self, x: &MomentMatrix) -> TiParameters {
        let blocks = self
            .blocks
            .iter()
            .zip(&x.blocks().blocks)
            .map(|(blk, dense)| {
                let ng = blk.n_groups();
                let mut m = CMatrix::zeros(ng * ng, self.n);
                for i in 0..blk.place.len() {
                    let (a, k) = blk.place[i];
                    for j in 0..blk.place.len() {
                        let (c, l) = blk.place[j];
                        m[(a * ng + c, (l + self.n - k) % self.n)] += dense[(i, j)];
                    }
                }
                m / Complex64::new(self.n as f64, 0.0)
            })
            .collect();
        TiParameters {
            n_sites: self.n,
            symmetry: self.map.symmetry(),
            level: self.map.level(),
            blocks,
        }
    }

    /// Frobenius norm of everything outside the sector pattern after the
    /// block Fourier transform of a dense matrix; zero iff `x` is
    /// translation invariant.
    pub fn off_pattern_mass(&self, x: &MomentMatrix) -> f64 {
        let v = dft_unitary(self.n).v;
        let vh = v.adjoint();
        let mut total = 0.0;
        for (blk, dense) in self.blocks.iter().zip(&x.blocks().blocks) {
            for ra in &blk.rows {
                for rc in &blk.rows {
                    let sub = CMatrix::from_fn(self.n, self.n, |k, l| dense[(ra[k], rc[l])]);
                    let d = &vh * sub * &v;
                    for i in 0..self.n {
                        for j in 0..self.n {
                            if i != j {
                                total += d[(i, j)].norm_sqr();
                            }
                        }
                    }
                }
            }
        }
        total.sqrt()
    }

    /// Translation-averaged objective on sector matrices.
    pub fn objective(&self, h: &HamiltonianSpec) -> Result<TiObjective> {
        check_translation_invariant(h)?;
        let (entries, c) = hamiltonian_entries(h, &self.map)?;
        let mut v = vec![Complex64::new(0.0, 0.0); self.slots.n_slots()];
        for ((b, i, j), val) in entries {
            let blk = &self.blocks[b];
            let (a, k) = blk.place[i];
            let (cg, l) = blk.place[j];
            let ng = blk.n_groups();
            v[blk.slot_offset + (a * ng + cg) * self.n + (l + self.n - k) % self.n] +=
                val / self.n as f64;
        }
        let real = v.iter().all(|z| z.im == 0.0);
        Ok(TiObjective {
            g: self.to_sectors(&self.params_from_slots(&v))?,
            c,
            real,
        })
    }

    /// Orthogonal projection of sector matrices onto the affine set.
    pub fn project_affine_sectors(&self, sectors: &BlockVec) -> BlockVec {
        let p = self.fit(sectors);
        let v = self.slots.apply(&p);
        self.to_sectors(&self.params_from_slots(&v))
            .expect("shape fixed by construction")
    }

    fn fit(&self, sectors: &BlockVec) -> Vec<f64> {
        let y = self.slot_values(&self.from_sectors(sectors));
        self.solver.fit(&self.slots, &y)
    }

    /// Parameters `embed(p)` as representative entries.
    pub fn embed(&self, p: &[f64]) -> Result<TiParameters> {
        if p.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                got: p.len(),
            });
        }
        Ok(self.params_from_slots(&self.slots.apply(p)))
    }

    /// Extend parameters from `p.n_sites` to `self.n_sites()` sites.
    pub fn extend(&self, p: &TiParameters) -> Result<TiParameters> {
        warm_start_extend(p, self)
    }

    pub fn moments(&self, p: TiParameters) -> Result<TiMoments<'_>> {
        self.check_shape(&p)?;
        Ok(TiMoments {
            emb: self,
            params: p,
        })
    }

    /// Sectors of real representative entries.
    fn real_to_sectors(&self, x: &[DMatrix<f64>]) -> BlockVec {
        let nb = self.blocks.len();
        let mut out = self.zero_sectors();
        for (b, (blk, m)) in self.blocks.iter().zip(x).enumerate() {
            let lam = self
                .dft
                .rows(m.nrows(), false, |i, r| Complex64::new(m[(i, r)], 0.0));
            let ng = blk.n_groups();
            for f in 0..self.n {
                let s = &mut out.blocks[f * nb + b];
                for a in 0..ng {
                    for c in 0..ng {
                        s[(a, c)] = lam[(a * ng + c, f)];
                    }
                }
            }
        }
        out
    }

    /// Real part of [`Self::from_sectors`].
    fn real_from_sectors(&self, sectors: &BlockVec) -> Vec<DMatrix<f64>> {
        let nb = self.blocks.len();
        self.blocks
            .iter()
            .enumerate()
            .map(|(b, blk)| {
                let ng = blk.n_groups();
                self.dft
                    .rows(ng * ng, true, |ac, f| {
                        sectors.blocks[f * nb + b][(ac / ng, ac % ng)]
                    })
                    .map(|z| z.re)
            })
            .collect()
    }

    fn group_index(&self, b: usize, kind: BasisKind, d: usize) -> Option<usize> {
        self.blocks[b]
            .groups
            .iter()
            .position(|&(k, dd)| k == kind && dd == d)
    }
}

/// Dense moment-matrix entries read from representative entries, without
/// assembling the dense matrix.
pub struct TiMoments<'a> {
    emb: &'a TiEmbedding,
    params: TiParameters,
}

impl TiMoments<'_> {
    /// Entry `(i, j)` of dense block `b`.
    pub fn entry(&self, b: usize, i: usize, j: usize) -> Complex64 {
        let blk = &self.emb.blocks[b];
        let (a, k) = blk.place[i];
        let (c, l) = blk.place[j];
        self.params.blocks[b][(a * blk.n_groups() + c, (l + self.emb.n - k) % self.emb.n)]
    }
}

impl PairMoments for TiMoments<'_> {
    fn n_sites(&self) -> usize {
        self.emb.n
    }

    fn density(&self, i: usize) -> f64 {
        let t = self.emb.map.family(Family::T).expect("every layout has T");
        self.entry(t.block, t.row_offset + i, t.col_offset + i).re
    }

    fn pair_density(&self, i: usize, j: usize) -> Option<f64> {
        let m = self.emb.map.family(Family::M)?;
        let r = m.row_offset + i * self.emb.n + j;
        Some(self.entry(m.block, r, r).re)
    }
}

/// Sectorwise PSD projection.
pub fn ti_project_psd(sectors: &BlockVec) -> Result<BlockVec> {
    let blocks = sectors
        .blocks
        .par_iter()
        .map(project_psd)
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockVec::new(blocks))
}

fn check_translation_invariant(h: &HamiltonianSpec) -> Result<()> {
    let n = h.n_modes;
    let mut orig = AffineExpression::constant(0.0);
    let mut shifted = AffineExpression::constant(0.0);
    let mut orig_im = AffineExpression::constant(0.0);
    let mut shifted_im = AffineExpression::constant(0.0);
    for (m, c) in &h.terms {
        m.check_modes(n)?;
        let e = canonicalize(m);
        let t = canonicalize(&m.translate(1, n));
        orig.add_scaled(&e, c.re);
        shifted.add_scaled(&t, c.re);
        orig_im.add_scaled(&e, c.im);
        shifted_im.add_scaled(&t, c.im);
    }
    let diff = |a: &AffineExpression, b: &AffineExpression| {
        let mut d = a.clone();
        d.add_scaled(b, -1.0);
        d.terms
            .values()
            .fold(d.constant.abs(), |m, v| m.max(v.abs()))
    };
    let err = diff(&orig, &shifted).max(diff(&orig_im, &shifted_im));
    if err > 1e-12 {
        return Err(Error::TiStructure(format!(
            "Hamiltonian changes under a one-site shift (deviation {err:e})"
        )));
    }
    Ok(())
}

impl Relaxation for TiEmbedding {
    fn zero(&self) -> BlockVec {
        self.zero_sectors()
    }

    fn project_affine(&self, x: &BlockVec) -> BlockVec {
        self.project_affine_sectors(x)
    }

    fn project_psd(&self, x: &BlockVec) -> Result<BlockVec> {
        ti_project_psd(x)
    }

    fn extract_params(&self, x: &BlockVec) -> Vec<f64> {
        self.fit(x)
    }

    fn n_sites(&self) -> usize {
        self.n
    }
}

/// The same relaxation restricted to real representative entries. For real
/// objectives started from real data every iterate stays real, sector `N − f`
/// is the conjugate of sector `f`, and only half the sectors need an
/// eigendecomposition.
struct RealSectors<'a>(&'a TiEmbedding);

impl Relaxation for RealSectors<'_> {
    fn zero(&self) -> BlockVec {
        self.0.zero_sectors()
    }

    fn project_affine(&self, x: &BlockVec) -> BlockVec {
        let emb = self.0;
        let mut y = Vec::with_capacity(emb.slots.n_slots());
        for m in emb.real_from_sectors(x) {
            for row in 0..m.nrows() {
                y.extend((0..emb.n).map(|r| Complex64::new(m[(row, r)], 0.0)));
            }
        }
        let v = emb.slots.apply(&emb.solver.fit(&emb.slots, &y));
        let real: Vec<DMatrix<f64>> = emb
            .blocks
            .iter()
            .map(|blk| {
                let g2 = blk.n_groups() * blk.n_groups();
                DMatrix::from_fn(g2, emb.n, |row, r| v[blk.slot_offset + row * emb.n + r].re)
            })
            .collect();
        emb.real_to_sectors(&real)
    }

    fn project_psd(&self, x: &BlockVec) -> Result<BlockVec> {
        let (n, nb) = (self.0.n, self.0.blocks.len());
        let half = n / 2 + 1;
        let mut out = x.blocks[..half * nb]
            .par_iter()
            .map(project_psd)
            .collect::<Result<Vec<_>>>()?;
        for f in half..n {
            for b in 0..nb {
                let mirror = out[(n - f) * nb + b].map(|z| z.conj());
                out.push(mirror);
            }
        }
        Ok(BlockVec::new(out))
    }

    fn extract_params(&self, x: &BlockVec) -> Vec<f64> {
        self.0.fit(x)
    }

    fn n_sites(&self) -> usize {
        self.0.n
    }
}

fn has_real_entries(emb: &TiEmbedding, sectors: &BlockVec) -> bool {
    let p = emb.from_sectors(sectors);
    let scale = p
        .blocks
        .iter()
        .flat_map(|m| m.iter())
        .map(|z| z.re.abs())
        .fold(1.0, f64::max);
    p.blocks
        .iter()
        .flat_map(|m| m.iter())
        .all(|z| z.im.abs() <= 1e-13 * scale)
}

/// Projected-gradient solve on sector matrices. A warm start given in
/// [`crate::solver::Init::Warm`] must already be in sector form.
pub fn solve_ti(obj: &TiObjective, emb: &TiEmbedding, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_ti_observed(obj, emb, cfg, &mut |_| {})
}

pub fn solve_ti_observed(
    obj: &TiObjective,
    emb: &TiEmbedding,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&Step<'_>),
) -> Result<SolveReport> {
    if !matches!(cfg.stop, crate::solver::StopMode::EnergyImprovement) {
        return Err(Error::UnsupportedScope(
            "the translation-invariant path stops on energy improvement".into(),
        ));
    }
    let id = crate::solver::instance_hash(emb.index_map(), &obj.g, obj.c);
    let real_start = match &cfg.init {
        Init::Zero => true,
        Init::Warm(x0) => x0.sizes() == emb.sector_sizes() && has_real_entries(emb, x0),
    };
    if obj.real && real_start {
        minimize(&RealSectors(emb), &obj.g, obj.c, cfg, id, observer)
    } else {
        minimize(emb, &obj.g, obj.c, cfg, id, observer)
    }
}

fn signed_offset(d: usize, n: usize) -> i64 {
    let d = d as i64;
    let n = n as i64;
    if 2 * d <= n {
        d
    } else {
        d - n
    }
}

/// Carry representative entries from `p.n_sites` sites to the larger
/// system of `target`. Offsets are read as signed displacements and copied
/// where the larger ring represents them; everything else starts at zero.
/// The result is made Hermitian.
pub fn warm_start_extend(p: &TiParameters, target: &TiEmbedding) -> Result<TiParameters> {
    let (n1, n2) = (p.n_sites, target.n);
    if n2 < n1 || p.symmetry != target.map.symmetry() || p.level != target.map.level() {
        return Err(Error::UnsupportedScope(format!(
            "cannot extend {n1} sites to {n2}"
        )));
    }
    let source = TiEmbedding::new(Arc::new(IndexMap::new(n1, p.symmetry, p.level)?))?;
    source.check_shape(p)?;
    let mut out: Vec<CMatrix> = target
        .blocks
        .iter()
        .map(|b| CMatrix::zeros(b.n_groups() * b.n_groups(), n2))
        .collect();
    let remap = |d: usize| signed_offset(d, n1).rem_euclid(n2 as i64) as usize;
    for (b, (sblk, m)) in source.blocks.iter().zip(&p.blocks).enumerate() {
        let ng1 = sblk.n_groups();
        let ng2 = target.blocks[b].n_groups();
        let mut map_group = HashMap::new();
        for (a, &(kind, d)) in sblk.groups.iter().enumerate() {
            let d2 = if kind.is_pair() { remap(d) } else { 0 };
            if let Some(a2) = target.group_index(b, kind, d2) {
                map_group.insert(a, a2);
            }
        }
        for a in 0..ng1 {
            for c in 0..ng1 {
                let (Some(&a2), Some(&c2)) = (map_group.get(&a), map_group.get(&c)) else {
                    continue;
                };
                for r in 0..n1 {
                    out[b][(a2 * ng2 + c2, remap(r))] = m[(a * ng1 + c, r)];
                }
            }
        }
    }
    // x_{c,a}(−r) = conj(x_{a,c}(r))
    for (blk, m) in target.blocks.iter().zip(out.iter_mut()) {
        let ng = blk.n_groups();
        let mut seen = HashSet::new();
        for a in 0..ng {
            for c in 0..ng {
                for r in 0..n2 {
                    let i = (a * ng + c, r);
                    let j = (c * ng + a, (n2 - r) % n2);
                    if seen.contains(&j) {
                        continue;
                    }
                    seen.insert(i);
                    let v = (m[i] + m[j].conj()) * 0.5;
                    m[i] = v;
                    m[j] = v.conj();
                }
            }
        }
    }
    Ok(TiParameters {
        n_sites: n2,
        symmetry: p.symmetry,
        level: p.level,
        blocks: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::Symmetry;
    use crate::moment::MomentLevel;

    #[test]
    fn dft_two_sites() {
        let v = dft_unitary(2).v;
        let s = 1.0 / 2f64.sqrt();
        let expect = [s, s, s, -s];
        for (i, e) in expect.iter().enumerate() {
            assert!((v[(i / 2, i % 2)] - Complex64::new(*e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn dft_is_unitary() {
        for n in [2, 3, 8] {
            let v = dft_unitary(n).v;
            let id = &v * v.adjoint();
            assert!((id - CMatrix::identity(n, n)).norm() < 1e-12);
        }
    }

    #[test]
    fn reorder_lists() {
        assert_eq!(reorder_permutation(2), vec![(0, 0), (1, 1), (0, 1), (1, 0)]);
        assert_eq!(&reorder_permutation(3)[..3], &[(0, 0), (1, 1), (2, 2)]);
        let p = reorder_permutation(4);
        let mut sorted = p.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 16);
    }

    #[test]
    fn sector_round_trip() {
        let map = Arc::new(IndexMap::new(3, Symmetry::ParityOnly, MomentLevel::Fourth).unwrap());
        let emb = TiEmbedding::new(map).unwrap();
        let p: Vec<f64> = (0..emb.n_params())
            .map(|i| (i as f64 * 0.37).sin())
            .collect();
        let params = emb.embed(&p).unwrap();
        let back = emb.from_sectors(&emb.to_sectors(&params).unwrap());
        for (a, b) in params.blocks.iter().zip(&back.blocks) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn two_site_m_sectors_are_two_by_two() {
        let map =
            Arc::new(IndexMap::new(2, Symmetry::NumberConserving, MomentLevel::Fourth).unwrap());
        let emb = TiEmbedding::new(map).unwrap();
        assert_eq!(emb.sector_sizes(), vec![1, 1, 2, 2, 2, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn negative_one_by_one_sector_clamps_to_zero() {
        let s = BlockVec::new(vec![CMatrix::from_element(1, 1, Complex64::new(-0.3, 0.0))]);
        assert_eq!(
            ti_project_psd(&s).unwrap().blocks[0][(0, 0)],
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn extension_to_same_size_is_identity() {
        let map =
            Arc::new(IndexMap::new(4, Symmetry::NumberConserving, MomentLevel::Fourth).unwrap());
        let emb = TiEmbedding::new(map).unwrap();
        let p: Vec<f64> = (0..emb.n_params())
            .map(|i| (i as f64 * 0.61).cos())
            .collect();
        let params = emb.embed(&p).unwrap();
        let ext = warm_start_extend(&params, &emb).unwrap();
        for (a, b) in params.blocks.iter().zip(&ext.blocks) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
