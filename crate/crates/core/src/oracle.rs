//! Exact diagonalization and moment extraction for small chains.
//!
//! Basis states are occupation bit strings; bit `k` is mode `k`. Fermionic
//! operators follow the Jordan–Wigner convention
//! `a_k = (∏_{j<k} σ_j^z) σ_k^−` with `σ^z = 1 − 2n` and `σ^−` lowering the
//! occupation `|1⟩ → |0⟩`, so the sign of `a_k` on a basis state is the parity
//! of the occupied modes below `k`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{Ladder, Monomial};
use crate::linalg::{BlockVec, CMatrix};
use crate::models::HamiltonianSpec;
use crate::moment::{Family, IndexMap, MomentLevel, MomentMatrix};

/// Largest chain handled by exact diagonalization.
pub const MAX_MODES: usize = 16;
/// Largest chain diagonalized densely; above this a Lanczos solver is used.
pub const DENSE_LIMIT: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Image of a basis state under one ladder operator: `(new state, sign)`.
pub fn apply_ladder(op: Ladder, state: usize) -> Option<(usize, f64)> {
    let bit = 1usize << op.mode;
    let occupied = state & bit != 0;
    if occupied == op.dagger {
        return None;
    }
    let below = (state & (bit - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((state ^ bit, sign))
}

/// Image of a basis state under a monomial (rightmost factor first).
pub fn apply_monomial_basis(m: &Monomial, mut state: usize) -> Option<(usize, f64)> {
    let mut sign = 1.0;
    for &f in m.factors().iter().rev() {
        let (s, g) = apply_ladder(f, state)?;
        state = s;
        sign *= g;
    }
    Some((state, sign))
}

pub fn apply_monomial(m: &Monomial, psi: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; psi.len()];
    for (b, &amp) in psi.iter().enumerate() {
        if amp != ZERO {
            if let Some((t, s)) = apply_monomial_basis(m, b) {
                out[t] += amp * s;
            }
        }
    }
    out
}

/// `⟨ψ| m |ψ⟩`
pub fn expectation(m: &Monomial, psi: &[Complex64]) -> Complex64 {
    psi.iter()
        .enumerate()
        .filter_map(|(b, &amp)| apply_monomial_basis(m, b).map(|(t, s)| psi[t].conj() * amp * s))
        .sum()
}

/// Dense matrix of a monomial on `n` modes.
pub fn monomial_matrix(m: &Monomial, n: usize) -> CMatrix {
    let dim = 1 << n;
    let mut out = CMatrix::zeros(dim, dim);
    for b in 0..dim {
        if let Some((t, s)) = apply_monomial_basis(m, b) {
            out[(t, b)] += Complex64::new(s, 0.0);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Spin-½ chain Hamiltonian as a sum of weighted Pauli strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinHamiltonian {
    pub n_sites: usize,
    pub terms: Vec<(Vec<(usize, Pauli)>, f64)>,
    pub constant: f64,
}

impl SpinHamiltonian {
    /// `j_c Σ_k σ_k^x σ_{k+1}^x − h Σ_k σ_k^z` on a ring.
    pub fn ising(n: usize, j_c: f64, h: f64) -> Self {
        let mut terms = Vec::new();
        for k in 0..n {
            terms.push((vec![(k, Pauli::X), ((k + 1) % n, Pauli::X)], j_c));
            terms.push((vec![(k, Pauli::Z)], -h));
        }
        Self {
            n_sites: n,
            terms,
            constant: 0.0,
        }
    }

    /// `J Σ σ_i · σ_{i+1}`, open or periodic.
    pub fn heisenberg(n: usize, j: f64, periodic: bool) -> Self {
        let mut terms = Vec::new();
        let bonds = if periodic { n } else { n - 1 };
        for i in 0..bonds {
            let k = (i + 1) % n;
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                terms.push((vec![(i, p), (k, p)], j));
            }
        }
        Self {
            n_sites: n,
            terms,
            constant: 0.0,
        }
    }
}

/// Sparse operator on the `2^N` dimensional Fock/spin space.
pub struct SparseOperator {
    n_modes: usize,
    /// Column-wise images: for basis state `b`, `(target, amplitude)` pairs.
    offsets: Vec<usize>,
    targets: Vec<u32>,
    values: Vec<Complex64>,
}

impl SparseOperator {
    fn from_images<F>(n_modes: usize, mut images: F) -> Self
    where
        F: FnMut(usize, &mut HashMap<usize, Complex64>),
    {
        let dim = 1usize << n_modes;
        let mut offsets = Vec::with_capacity(dim + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut values = Vec::new();
        let mut acc = HashMap::new();
        for b in 0..dim {
            acc.clear();
            images(b, &mut acc);
            let mut col: Vec<_> = acc
                .iter()
                .filter(|(_, v)| v.norm() > 0.0)
                .map(|(&t, &v)| (t, v))
                .collect();
            col.sort_by_key(|(t, _)| *t);
            for (t, v) in col {
                targets.push(t as u32);
                values.push(v);
            }
            offsets.push(targets.len());
        }
        Self {
            n_modes,
            offsets,
            targets,
            values,
        }
    }

    pub fn from_hamiltonian(h: &HamiltonianSpec) -> Result<Self> {
        check_modes(h.n_modes)?;
        for (m, _) in &h.terms {
            m.check_modes(h.n_modes)?;
        }
        Ok(Self::from_images(h.n_modes, |b, acc| {
            *acc.entry(b).or_insert(ZERO) += h.constant;
            for (m, c) in &h.terms {
                if let Some((t, s)) = apply_monomial_basis(m, b) {
                    *acc.entry(t).or_insert(ZERO) += c * s;
                }
            }
        }))
    }

    pub fn from_spin(h: &SpinHamiltonian) -> Result<Self> {
        check_modes(h.n_sites)?;
        Ok(Self::from_images(h.n_sites, |b, acc| {
            *acc.entry(b).or_insert(ZERO) += h.constant;
            for (string, c) in &h.terms {
                let mut state = b;
                let mut amp = Complex64::new(*c, 0.0);
                for &(site, p) in string.iter().rev() {
                    let bit = 1usize << site;
                    // spin up = empty, σ^z = 1 − 2n
                    let up = state & bit == 0;
                    match p {
                        Pauli::X => state ^= bit,
                        Pauli::Y => {
                            amp *= if up {
                                Complex64::new(0.0, -1.0)
                            } else {
                                Complex64::new(0.0, 1.0)
                            };
                            state ^= bit;
                        }
                        Pauli::Z => {
                            if !up {
                                amp = -amp;
                            }
                        }
                    }
                }
                *acc.entry(state).or_insert(ZERO) += amp;
            }
        }))
    }

    pub fn dim(&self) -> usize {
        1 << self.n_modes
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for (b, &xb) in x.iter().enumerate() {
            if xb == ZERO {
                continue;
            }
            for t in self.offsets[b]..self.offsets[b + 1] {
                y[self.targets[t] as usize] += self.values[t] * xb;
            }
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for b in 0..self.dim() {
            for t in self.offsets[b]..self.offsets[b + 1] {
                m[(self.targets[t] as usize, b)] += self.values[t];
            }
        }
        m
    }

    /// `⟨ψ|H|ψ⟩`
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let mut y = vec![ZERO; psi.len()];
        self.apply(psi, &mut y);
        dot(psi, &y).re
    }
}

fn check_modes(n: usize) -> Result<()> {
    if n > MAX_MODES {
        return Err(Error::DimensionLimit {
            n_modes: n,
            limit: MAX_MODES,
        });
    }
    Ok(())
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Ground-state energy and a normalized ground-state vector.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub state: Vec<Complex64>,
}

pub fn exact_diagonalize(op: &SparseOperator) -> Result<GroundState> {
    if op.n_modes() <= DENSE_LIMIT {
        dense_ground_state(op)
    } else {
        lanczos_ground_state(op)
    }
}

pub fn diagonalize_fermionic(h: &HamiltonianSpec) -> Result<GroundState> {
    exact_diagonalize(&SparseOperator::from_hamiltonian(h)?)
}

pub fn diagonalize_spin(h: &SpinHamiltonian) -> Result<GroundState> {
    exact_diagonalize(&SparseOperator::from_spin(h)?)
}

fn dense_ground_state(op: &SparseOperator) -> Result<GroundState> {
    let m = op.to_dense();
    if m.iter().all(|z| z.im == 0.0) {
        let real: DMatrix<f64> = m.map(|z| z.re);
        let real = (&real + real.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(real, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numerical("dense diagonalization failed".into()))?;
        let k = argmin(eig.eigenvalues.as_slice());
        let v = eig.eigenvectors.column(k);
        let state = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        return Ok(GroundState {
            energy: eig.eigenvalues[k],
            state,
        });
    }
    let mut herm = m.clone();
    crate::linalg::hermitize_in_place(&mut herm);
    let eig = SymmetricEigen::try_new(herm, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("dense diagonalization failed".into()))?;
    let k = argmin(eig.eigenvalues.as_slice());
    let state = eig.eigenvectors.column(k).iter().copied().collect();
    Ok(GroundState {
        energy: eig.eigenvalues[k],
        state,
    })
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x < v[best] { i } else { best })
}

/// Restarted Lanczos with full reorthogonalization.
fn lanczos_ground_state(op: &SparseOperator) -> Result<GroundState> {
    const KRYLOV: usize = 60;
    const RESTARTS: usize = 200;
    let dim = op.dim();
    // deterministic dense start vector
    let mut start: Vec<Complex64> = (0..dim)
        .map(|i| Complex64::new(((i as f64 + 1.0) * 0.618_033_988_7).fract() - 0.5, 0.0))
        .collect();
    let nrm = norm(&start);
    start.iter_mut().for_each(|z| *z /= nrm);
    let mut w = vec![ZERO; dim];
    let mut last = f64::INFINITY;
    for _ in 0..RESTARTS {
        let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..KRYLOV.min(dim) {
            op.apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            for v in &basis {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
            for v in &basis {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
            let b = norm(&w);
            if b < 1e-13 || j + 1 == KRYLOV.min(dim) {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let k = argmin(eig.eigenvalues.as_slice());
        let y: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        let mut v = vec![ZERO; dim];
        for (c, b) in y.iter().zip(&basis) {
            v.iter_mut().zip(b).for_each(|(x, z)| *x += z * *c);
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|z| *z /= nv);
        op.apply(&v, &mut w);
        let e = dot(&v, &w).re;
        let resid: f64 = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b * e).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if resid < 1e-9 || (last - e).abs() < 1e-14 {
            return Ok(GroundState {
                energy: e,
                state: v,
            });
        }
        last = e;
        start = v;
    }
    Err(Error::Numerical(
        "Lanczos iteration did not converge".into(),
    ))
}

/// Moment matrix `X_ij = ⟨ψ| O_i† O_j |ψ⟩` of a state in the layout of `map`.
pub fn moments_from_state(
    psi: &[Complex64],
    n: usize,
    map: std::sync::Arc<IndexMap>,
) -> Result<MomentMatrix> {
    if psi.len() != 1usize << n || map.n_sites() != n {
        return Err(Error::DimensionMismatch {
            n_modes: n,
            got: psi.len(),
        });
    }
    let blocks = map
        .blocks()
        .iter()
        .map(|layout| {
            let images: Vec<Vec<Complex64>> = layout
                .rows
                .iter()
                .map(|op| apply_monomial(&op.operator(), psi))
                .collect();
            let d = images.len();
            let mut x = CMatrix::zeros(d, d);
            for i in 0..d {
                for j in i..d {
                    let v = dot(&images[i], &images[j]);
                    x[(i, j)] = v;
                    x[(j, i)] = v.conj();
                }
            }
            x
        })
        .collect();
    MomentMatrix::new(map, BlockVec::new(blocks))
}

/// Access to the densities entering the z-correlation formula.
pub trait PairMoments {
    fn n_sites(&self) -> usize;
    /// `⟨a_i† a_i⟩`
    fn density(&self, i: usize) -> f64;
    /// `⟨a_i† a_j† a_j a_i⟩`
    fn pair_density(&self, i: usize, j: usize) -> Option<f64>;
}

impl PairMoments for MomentMatrix {
    fn n_sites(&self) -> usize {
        self.index_map().n_sites()
    }

    fn density(&self, i: usize) -> f64 {
        MomentMatrix::density(self, i)
    }

    fn pair_density(&self, i: usize, j: usize) -> Option<f64> {
        if self.index_map().level() != MomentLevel::Fourth {
            return None;
        }
        MomentMatrix::pair_density(self, i, j)
    }
}

/// `⟨σ_i^z σ_j^z⟩ = 1 − 2T_ii − 2T_jj + 4M_{ij,ij}`
pub fn zz_correlation<M: PairMoments + ?Sized>(m: &M, i: usize, j: usize) -> Result<f64> {
    let pair = m
        .pair_density(i, j)
        .ok_or_else(|| Error::UnsupportedScope("correlations need fourth moments".into()))?;
    Ok(1.0 - 2.0 * m.density(i) - 2.0 * m.density(j) + 4.0 * pair)
}

/// `⟨ψ| σ_i^z σ_j^z |ψ⟩` evaluated in the spin basis.
pub fn spin_zz(psi: &[Complex64], i: usize, j: usize) -> f64 {
    psi.iter()
        .enumerate()
        .map(|(b, a)| {
            let si = if b >> i & 1 == 0 { 1.0 } else { -1.0 };
            let sj = if b >> j & 1 == 0 { 1.0 } else { -1.0 };
            a.norm_sqr() * si * sj
        })
        .sum()
}

pub const C1_INF: f64 = -0.590_862_92;
pub const C2_INF: f64 = 0.242_719_08;
pub const ZETA3: f64 = 1.202_056_9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n_sites: usize,
    pub periodic: bool,
    /// Averaged `⟨σ_i^z σ_{i+1}^z⟩`.
    pub nearest: f64,
    /// Averaged `⟨σ_i^z σ_{i+2}^z⟩`.
    pub next_nearest: f64,
    /// Thermodynamic-limit energy per site for the given exchange `J`.
    pub e_inf: f64,
    pub c1_inf: f64,
    pub c2_inf: f64,
}

/// Distance-averaged z-correlations; on rotation-invariant states these
/// equal the isotropic correlations `⟨σ_i · σ_j⟩/3`.
pub fn correlations<M: PairMoments + ?Sized>(
    m: &M,
    periodic: bool,
    j: f64,
) -> Result<CorrelationReport> {
    let n = m.n_sites();
    let avg = |d: usize| -> Result<f64> {
        let pairs: Vec<(usize, usize)> = if periodic {
            (0..n).map(|i| (i, (i + d) % n)).collect()
        } else {
            (0..n.saturating_sub(d)).map(|i| (i, i + d)).collect()
        };
        if pairs.is_empty() || d >= n {
            return Ok(f64::NAN);
        }
        let mut s = 0.0;
        for &(a, b) in &pairs {
            s += zz_correlation(m, a, b)?;
        }
        Ok(s / pairs.len() as f64)
    };
    Ok(CorrelationReport {
        n_sites: n,
        periodic,
        nearest: avg(1)?,
        next_nearest: avg(2)?,
        e_inf: crate::models::heisenberg_energy_per_site_limit(j),
        c1_inf: C1_INF,
        c2_inf: C2_INF,
    })
}

/// `(1 − 4 ln 2)/3` and `(1 − 16 ln 2 + 9 ζ(3))/3`.
pub fn correlation_limits() -> (f64, f64) {
    let l = 2f64.ln();
    ((1.0 - 4.0 * l) / 3.0, (1.0 - 16.0 * l + 9.0 * ZETA3) / 3.0)
}

/// `T` block of a moment matrix, for circulant checks.
pub fn t_block(x: &MomentMatrix) -> CMatrix {
    x.family(Family::T).expect("every layout has T")
}
