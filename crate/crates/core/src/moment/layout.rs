use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{Ladder, Monomial, Symmetry};

/// Relaxation order: 1-positivity (second moments) or 2-positivity (fourth).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentLevel {
    Second,
    Fourth,
}

/// Row/column operator families of the moment matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisKind {
    /// `a_k`
    Annihilator,
    /// `a_k†`
    Creator,
    /// `a_l a_k` for the pair `(k, l)`
    AnnihilatorPair,
    /// `a_l† a_k` for the pair `(k, l)`
    Hopping,
    /// `a_l† a_k†` for the pair `(k, l)`
    CreatorPair,
}

impl BasisKind {
    pub fn is_pair(self) -> bool {
        matches!(
            self,
            BasisKind::AnnihilatorPair | BasisKind::Hopping | BasisKind::CreatorPair
        )
    }
}

/// One basis operator `O`; the matrix entry for rows `O_i`, `O_j` is `⟨O_i† O_j⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisOp {
    pub kind: BasisKind,
    pub k: usize,
    pub l: usize,
}

impl BasisOp {
    pub fn operator(&self) -> Monomial {
        let f = match self.kind {
            BasisKind::Annihilator => vec![Ladder::annihilate(self.k)],
            BasisKind::Creator => vec![Ladder::create(self.k)],
            BasisKind::AnnihilatorPair => {
                vec![Ladder::annihilate(self.l), Ladder::annihilate(self.k)]
            }
            BasisKind::Hopping => vec![Ladder::create(self.l), Ladder::annihilate(self.k)],
            BasisKind::CreatorPair => vec![Ladder::create(self.l), Ladder::create(self.k)],
        };
        Monomial::new(&f).expect("basis operators have length at most 2")
    }
}

impl fmt::Display for BasisOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.operator())
    }
}

/// Named sub-block of the moment matrix (rows of one family against columns of another).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    T,
    S,
    U,
    M,
    R,
    Q,
    G,
    H,
    I,
}

impl Family {
    /// Row and column basis kinds spanning this family.
    pub fn kinds(self) -> (BasisKind, BasisKind) {
        use BasisKind::*;
        match self {
            Family::T => (Annihilator, Annihilator),
            Family::S => (Creator, Creator),
            Family::U => (Creator, Annihilator),
            Family::M => (AnnihilatorPair, AnnihilatorPair),
            Family::R => (Hopping, Hopping),
            Family::Q => (CreatorPair, CreatorPair),
            Family::G => (Hopping, AnnihilatorPair),
            Family::H => (CreatorPair, AnnihilatorPair),
            Family::I => (CreatorPair, Hopping),
        }
    }
}

/// Position of a family inside the block list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FamilyLocation {
    pub block: usize,
    pub row_offset: usize,
    pub col_offset: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug)]
pub struct BlockLayout {
    pub kinds: Vec<BasisKind>,
    pub rows: Vec<BasisOp>,
}

impl BlockLayout {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn group_offset(&self, kind: BasisKind) -> Option<usize> {
        self.rows.iter().position(|r| r.kind == kind)
    }
}

/// Row/column basis of the moment matrix.
///
/// Row order inside a block: families in the order listed in `kinds`; single
/// operators by ascending mode, pairs `(k, l)` in row-major order with `k`
/// outer. Layouts:
///
/// | level  | symmetry          | blocks                                  |
/// |--------|-------------------|-----------------------------------------|
/// | second | parity-only       | `[a; a†]`                               |
/// | second | number-conserving | `[a]`, `[a†]`                           |
/// | fourth | parity-only       | `[a; a†]`, `[aa; a†a; a†a†]`            |
/// | fourth | number-conserving | `[a]`, `[a†]`, `[aa]`, `[a†a]`, `[a†a†]` |
///
/// Odd-order blocks vanish under parity superselection and are never built.
#[derive(Clone, Debug)]
pub struct IndexMap {
    n_sites: usize,
    symmetry: Symmetry,
    level: MomentLevel,
    blocks: Vec<BlockLayout>,
    lookup: HashMap<Monomial, (usize, usize)>,
}

impl IndexMap {
    pub fn new(n_sites: usize, symmetry: Symmetry, level: MomentLevel) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidSize(0));
        }
        use BasisKind::*;
        let groups: Vec<Vec<BasisKind>> = match (level, symmetry) {
            (MomentLevel::Second, Symmetry::ParityOnly) => vec![vec![Annihilator, Creator]],
            (MomentLevel::Second, Symmetry::NumberConserving) => {
                vec![vec![Annihilator], vec![Creator]]
            }
            (MomentLevel::Fourth, Symmetry::ParityOnly) => {
                vec![
                    vec![Annihilator, Creator],
                    vec![AnnihilatorPair, Hopping, CreatorPair],
                ]
            }
            (MomentLevel::Fourth, Symmetry::NumberConserving) => vec![
                vec![Annihilator],
                vec![Creator],
                vec![AnnihilatorPair],
                vec![Hopping],
                vec![CreatorPair],
            ],
        };
        let blocks: Vec<BlockLayout> = groups
            .into_iter()
            .map(|kinds| {
                let rows = kinds
                    .iter()
                    .flat_map(|&kind| basis_rows(kind, n_sites))
                    .collect();
                BlockLayout { kinds, rows }
            })
            .collect();
        let mut lookup = HashMap::new();
        for (b, block) in blocks.iter().enumerate() {
            for (i, op) in block.rows.iter().enumerate() {
                lookup.insert(op.operator(), (b, i));
            }
        }
        Ok(Self {
            n_sites,
            symmetry,
            level,
            blocks,
            lookup,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn level(&self) -> MomentLevel {
        self.level
    }

    pub fn blocks(&self) -> &[BlockLayout] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(BlockLayout::dim).collect()
    }

    /// Total dimension of the stored block-diagonal matrix.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(BlockLayout::dim).sum()
    }

    /// Block and row holding the basis operator whose operator string is `op`.
    pub fn locate(&self, op: &Monomial) -> Option<(usize, usize)> {
        self.lookup.get(op).copied()
    }

    pub fn family(&self, family: Family) -> Option<FamilyLocation> {
        let (rk, ck) = family.kinds();
        self.blocks.iter().enumerate().find_map(|(b, layout)| {
            let r = layout.group_offset(rk)?;
            let c = layout.group_offset(ck)?;
            let size = |k: BasisKind| {
                if k.is_pair() {
                    self.n_sites * self.n_sites
                } else {
                    self.n_sites
                }
            };
            Some(FamilyLocation {
                block: b,
                row_offset: r,
                col_offset: c,
                rows: size(rk),
                cols: size(ck),
            })
        })
    }

    /// Matrix entry `(block, row, col)` carrying a canonical key in the
    /// objective: row operator is the adjoint of the key's first half, column
    /// operator its second half.
    pub fn designated_entry(&self, key: &Monomial) -> Option<(usize, usize, usize)> {
        let f = key.factors();
        if f.is_empty() || f.len() % 2 != 0 {
            return None;
        }
        let h = f.len() / 2;
        let first = Monomial::new(&f[..h]).ok()?.adjoint();
        let second = Monomial::new(&f[h..]).ok()?;
        let (b1, i) = self.locate(&first)?;
        let (b2, j) = self.locate(&second)?;
        (b1 == b2).then_some((b1, i, j))
    }
}

fn basis_rows(kind: BasisKind, n: usize) -> Vec<BasisOp> {
    if kind.is_pair() {
        (0..n)
            .flat_map(|k| (0..n).map(move |l| BasisOp { kind, k, l }))
            .collect()
    } else {
        (0..n).map(|k| BasisOp { kind, k, l: k }).collect()
    }
}
