use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion::canonicalize;
use crate::linalg::BlockVec;
use crate::models::HamiltonianSpec;

use super::embedding::MomentMatrix;
use super::layout::IndexMap;

/// Linear energy functional `E(X) = Re tr[G X] + c`.
#[derive(Clone, Debug)]
pub struct Objective {
    map: Arc<IndexMap>,
    pub g: BlockVec,
    pub c: f64,
}

impl Objective {
    pub fn index_map(&self) -> &IndexMap {
        &self.map
    }

    pub fn energy(&self, x: &BlockVec) -> f64 {
        self.g.inner(x) + self.c
    }

    pub fn energy_of(&self, x: &MomentMatrix) -> f64 {
        self.energy(x.blocks())
    }
}

/// Sparse `G` entries `(block, row, col) -> value` and the constant `c` of a
/// Hamiltonian in the layout of `map`.
///
/// Every canonical key lands on its designated entry (see
/// [`IndexMap::designated_entry`]) with half its coefficient; the other half
/// goes to the transposed entry as a conjugate, which keeps `G` Hermitian.
pub(crate) fn hamiltonian_entries(
    h: &HamiltonianSpec,
    map: &IndexMap,
) -> Result<(BTreeMap<(usize, usize, usize), Complex64>, f64)> {
    if h.n_modes != map.n_sites() {
        return Err(Error::LengthMismatch {
            expected: map.n_sites(),
            got: h.n_modes,
        });
    }
    let mut constant = Complex64::new(h.constant, 0.0);
    let mut entries: BTreeMap<(usize, usize, usize), Complex64> = BTreeMap::new();
    for (m, coef) in &h.terms {
        m.check_modes(h.n_modes)?;
        let expr = canonicalize(m);
        constant += coef * expr.constant;
        for (key, &kc) in &expr.terms {
            if !map.symmetry().allows(key) {
                return Err(Error::UnsupportedTerm(format!(
                    "{m} (symmetry forbids {key})"
                )));
            }
            let (b, i, j) = map
                .designated_entry(key)
                .ok_or_else(|| Error::UnsupportedTerm(format!("{m}")))?;
            let v = coef * kc;
            *entries.entry((b, j, i)).or_default() += v * 0.5;
            *entries.entry((b, i, j)).or_default() += v.conj() * 0.5;
        }
    }
    if constant.im.abs() > 1e-12 * (1.0 + constant.re.abs()) {
        return Err(Error::UnsupportedTerm(format!(
            "non-Hermitian constant {constant}"
        )));
    }
    Ok((entries, constant.re))
}

pub fn objective_from_hamiltonian(h: &HamiltonianSpec, map: Arc<IndexMap>) -> Result<Objective> {
    let (entries, c) = hamiltonian_entries(h, &map)?;
    let mut g = BlockVec::zeros(&map.block_sizes());
    for ((b, i, j), v) in entries {
        g.blocks[b][(i, j)] += v;
    }
    Ok(Objective { map, g, c })
}
