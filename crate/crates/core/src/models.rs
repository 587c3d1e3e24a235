//! Lattice model generators in fermionic form.
//!
//! Spin chains are mapped to spinless fermions with the Jordan–Wigner
//! convention `a_k = (∏_{j<k} σ_j^z) σ_k^−`, so that `σ_k^z = 1 − 2 a_k† a_k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{canonicalize, Ladder, Monomial, Symmetry};

/// Symbolic fermionic Hamiltonian `Σ c_m m + constant`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub n_modes: usize,
    pub terms: Vec<(Monomial, Complex64)>,
    pub constant: f64,
    /// Invariant under the cyclic shift `a_k -> a_{k+1}`, `a_N = a_1`.
    pub translation_invariant: bool,
    /// Smallest symmetry class the Hamiltonian respects.
    pub symmetry: Symmetry,
}

impl HamiltonianSpec {
    pub fn new(n_modes: usize, constant: f64) -> Self {
        Self {
            n_modes,
            terms: Vec::new(),
            constant,
            translation_invariant: false,
            symmetry: Symmetry::NumberConserving,
        }
    }

    pub fn add(&mut self, m: Monomial, coef: Complex64) {
        if m.creators() != m.annihilators() {
            self.symmetry = Symmetry::ParityOnly;
        }
        self.terms.push((m, coef));
    }

    /// Add `coef · m + conj(coef) · m†`.
    pub fn add_hermitian(&mut self, m: Monomial, coef: Complex64) {
        self.add(m, coef);
        self.add(m.adjoint(), coef.conj());
    }

    /// Largest coefficient mismatch between the Hamiltonian and its adjoint,
    /// compared after canonicalization.
    pub fn hermiticity_error(&self) -> f64 {
        let mut total = crate::fermion::AffineExpression::constant(0.0);
        let mut total_im = crate::fermion::AffineExpression::constant(0.0);
        // H - H† split into real and imaginary coefficient parts
        for (m, c) in &self.terms {
            let e = canonicalize(m);
            let a = canonicalize(&m.adjoint());
            total.add_scaled(&e, c.re);
            total.add_scaled(&a, -c.re);
            total_im.add_scaled(&e, c.im);
            total_im.add_scaled(&a, c.im);
        }
        let max = |e: &crate::fermion::AffineExpression| {
            e.terms
                .values()
                .fold(e.constant.abs(), |m, v| m.max(v.abs()))
        };
        max(&total).max(max(&total_im))
    }
}

/// Boundary convention of the fermionic Ising chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsingVariant {
    /// Boundary bond with reversed sign, the Jordan–Wigner image of the
    /// periodic spin chain; exact energy uses `l_k = 2k + 1`.
    Open,
    /// Boundary bond with the bulk sign, translation invariant; `l_k = 2k`.
    PeriodicTi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub j_c: f64,
    pub h: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub variant: IsingVariant,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            j_c: -1.0,
            h: 0.5,
            j: 0.5,
            variant: IsingVariant::Open,
        }
    }
}

fn mono(f: &[Ladder]) -> Monomial {
    Monomial::new(f).expect("model terms have order at most 4")
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Quadratic fermionic form of the transverse-field Ising chain:
/// `j_c Σ_k (a_k† a_{k+1} + a_{k+1}† a_k + a_k† a_{k+1}† + a_{k+1} a_k)
///  ∓ j_c (boundary bond) − hN + 2h Σ_k a_k† a_k`.
pub fn ising_fermionic(n: usize, j_c: f64, h: f64, ti: bool) -> Result<HamiltonianSpec> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    let mut ham = HamiltonianSpec::new(n, -h * n as f64);
    let bond = |ham: &mut HamiltonianSpec, i: usize, j: usize, c: f64| {
        ham.add(mono(&[Ladder::create(i), Ladder::annihilate(j)]), re(c));
        ham.add(mono(&[Ladder::create(j), Ladder::annihilate(i)]), re(c));
        ham.add(mono(&[Ladder::create(i), Ladder::create(j)]), re(c));
        ham.add(mono(&[Ladder::annihilate(j), Ladder::annihilate(i)]), re(c));
    };
    for k in 0..n - 1 {
        bond(&mut ham, k, k + 1, j_c);
    }
    bond(&mut ham, n - 1, 0, if ti { j_c } else { -j_c });
    for k in 0..n {
        ham.add(
            mono(&[Ladder::create(k), Ladder::annihilate(k)]),
            re(2.0 * h),
        );
    }
    ham.translation_invariant = ti;
    Ok(ham)
}

/// Jordan–Wigner image of `J Σ σ_i·σ_{i+1}`: per bond, hopping `2J`, density
/// `−2J` on both sites, interaction `4J a_i† a_j† a_j a_i`, and constant `J`.
/// The periodic chain adds the fermionic bond `(N, 1)`, which makes it
/// translation invariant with constant `J·N`.
pub fn heisenberg_jw(n: usize, j: f64, periodic: bool) -> Result<HamiltonianSpec> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    let mut bonds: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    if periodic {
        bonds.push((n - 1, 0));
    }
    let mut ham = HamiltonianSpec::new(n, j * bonds.len() as f64);
    for &(a, b) in &bonds {
        ham.add(
            mono(&[Ladder::create(b), Ladder::annihilate(a)]),
            re(2.0 * j),
        );
        ham.add(
            mono(&[Ladder::create(a), Ladder::annihilate(b)]),
            re(2.0 * j),
        );
        ham.add(
            mono(&[Ladder::create(b), Ladder::annihilate(b)]),
            re(-2.0 * j),
        );
        ham.add(
            mono(&[Ladder::create(a), Ladder::annihilate(a)]),
            re(-2.0 * j),
        );
        ham.add(
            mono(&[
                Ladder::create(a),
                Ladder::create(b),
                Ladder::annihilate(b),
                Ladder::annihilate(a),
            ]),
            re(4.0 * j),
        );
    }
    ham.translation_invariant = periodic;
    Ok(ham)
}

/// Momentum convention in the closed-form Ising energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentumLabel {
    /// `l_k = 2k + 1`
    Odd,
    /// `l_k = 2k`
    Even,
}

impl From<IsingVariant> for MomentumLabel {
    fn from(v: IsingVariant) -> Self {
        match v {
            IsingVariant::Open => MomentumLabel::Odd,
            IsingVariant::PeriodicTi => MomentumLabel::Even,
        }
    }
}

/// `−Σ_k √((j_c cos(π l_k/N) + h)² + (j_c sin(π l_k/N))²)`.
pub fn ising_exact_energy(n: usize, j_c: f64, h: f64, label: MomentumLabel) -> f64 {
    (0..n)
        .map(|k| {
            let l = match label {
                MomentumLabel::Odd => 2 * k + 1,
                MomentumLabel::Even => 2 * k,
            } as f64;
            let phi = PI * l / n as f64;
            ((j_c * phi.cos() + h).powi(2) + (j_c * phi.sin()).powi(2)).sqrt()
        })
        .sum::<f64>()
        * -1.0
}

/// Thermodynamic-limit energy per site of the spin-½ Heisenberg chain
/// `J Σ σ·σ`: `−4|J|(ln 2 − 1/4)`.
pub fn heisenberg_energy_per_site_limit(j: f64) -> f64 {
    -4.0 * j.abs() * (2f64.ln() - 0.25)
}
