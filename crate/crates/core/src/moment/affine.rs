use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion::{AffineExpression, Symmetry};

use super::params::ParamSpace;

/// Sparse complex-valued affine map from real coordinates to matrix slots,
/// stored row-compressed: slot `s` equals
/// `constants[s] + Σ coefs[t] · p[coords[t]]` over `t` in `offsets[s]..offsets[s+1]`.
#[derive(Clone, Debug)]
pub struct SlotMap {
    offsets: Vec<usize>,
    coords: Vec<u32>,
    coefs: Vec<Complex64>,
    constants: Vec<Complex64>,
}

impl SlotMap {
    /// Build from one canonical expression per slot, resolving keys in `params`.
    pub fn build<I>(exprs: I, symmetry: Symmetry, params: &mut ParamSpace) -> Self
    where
        I: IntoIterator<Item = AffineExpression>,
    {
        let mut map = SlotMap {
            offsets: vec![0],
            coords: Vec::new(),
            coefs: Vec::new(),
            constants: Vec::new(),
        };
        let mut row: Vec<(usize, Complex64)> = Vec::new();
        for expr in exprs {
            row.clear();
            for (key, &coef) in &expr.terms {
                if !symmetry.allows(key) {
                    continue;
                }
                let Some(r) = params.resolve(key) else {
                    continue;
                };
                for (c, a) in params.coefficients(r) {
                    match row.iter_mut().find(|(rc, _)| *rc == c) {
                        Some(entry) => entry.1 += a * coef,
                        None => row.push((c, a * coef)),
                    }
                }
            }
            row.retain(|(_, a)| a.norm_sqr() > 0.0);
            row.sort_by_key(|(c, _)| *c);
            for &(c, a) in &row {
                map.coords.push(c as u32);
                map.coefs.push(a);
            }
            map.offsets.push(map.coords.len());
            map.constants.push(Complex64::new(expr.constant, 0.0));
        }
        map
    }

    pub fn n_slots(&self) -> usize {
        self.constants.len()
    }

    pub fn nnz(&self) -> usize {
        self.coords.len()
    }

    pub fn constants(&self) -> &[Complex64] {
        &self.constants
    }

    pub fn row(&self, s: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let r = self.offsets[s]..self.offsets[s + 1];
        self.coords[r.clone()]
            .iter()
            .map(|&c| c as usize)
            .zip(self.coefs[r].iter().copied())
    }

    /// `L p`, without the constant.
    pub fn apply_linear(&self, p: &[f64]) -> Vec<Complex64> {
        (0..self.n_slots())
            .map(|s| self.row(s).map(|(c, a)| a * p[c]).sum())
            .collect()
    }

    /// `L p + const`.
    pub fn apply(&self, p: &[f64]) -> Vec<Complex64> {
        let mut v = self.apply_linear(p);
        for (x, c) in v.iter_mut().zip(&self.constants) {
            *x += c;
        }
        v
    }

    /// `Re(L^H v)`.
    pub fn adjoint(&self, v: &[Complex64], n_coords: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_coords];
        for (s, z) in v.iter().enumerate() {
            for (c, a) in self.row(s) {
                out[c] += a.re * z.re + a.im * z.im;
            }
        }
        out
    }
}

enum ReducedSolve {
    Diagonal(Vec<f64>),
    Dense(Cholesky<f64, nalgebra::Dyn>),
}

/// Solver for the real normal equations `Re(L^H L) p = r`.
///
/// Every slot carries at most one fourth-order key, so the Gram block of the
/// fourth-order coordinates is diagonal. Those coordinates are eliminated and
/// the Schur complement on the remaining ones is factorized once; it is
/// itself diagonal for second-moment layouts.
pub struct NormalSolver {
    n_coords: usize,
    low: Vec<usize>,
    high: Vec<usize>,
    high_diag: Vec<f64>,
    /// For each eliminated coordinate, couplings `(position in low, value)`.
    high_couplings: Vec<Vec<(usize, f64)>>,
    reduced: ReducedSolve,
}

impl NormalSolver {
    pub fn new(slots: &SlotMap, params: &ParamSpace) -> Result<Self> {
        let n = params.n_coords();
        let mut diag = vec![0.0; n];
        let mut off: HashMap<(usize, usize), f64> = HashMap::new();
        for s in 0..slots.n_slots() {
            let row: Vec<_> = slots.row(s).collect();
            for (i, &(ci, ai)) in row.iter().enumerate() {
                diag[ci] += ai.norm_sqr();
                for &(cj, aj) in &row[i + 1..] {
                    let v = ai.re * aj.re + ai.im * aj.im;
                    if v != 0.0 {
                        let k = if ci < cj { (ci, cj) } else { (cj, ci) };
                        *off.entry(k).or_insert(0.0) += v;
                    }
                }
            }
        }
        if let Some(c) = diag.iter().position(|&d| d <= 0.0) {
            return Err(Error::Numerical(format!(
                "coordinate {c} does not reach any matrix entry"
            )));
        }
        let mut is_high: Vec<bool> = (0..n)
            .map(|c| params.coord_owner(c).key.len() == 4)
            .collect();
        for (&(a, b), &v) in &off {
            if v != 0.0 && is_high[a] && is_high[b] {
                is_high[a] = false;
                is_high[b] = false;
            }
        }
        let low: Vec<usize> = (0..n).filter(|&c| !is_high[c]).collect();
        let high: Vec<usize> = (0..n).filter(|&c| is_high[c]).collect();
        let mut pos = vec![usize::MAX; n];
        for (i, &c) in low.iter().enumerate() {
            pos[c] = i;
        }
        for (i, &c) in high.iter().enumerate() {
            pos[c] = i;
        }
        let nl = low.len();
        let mut schur = DMatrix::<f64>::zeros(nl, nl);
        for (i, &c) in low.iter().enumerate() {
            schur[(i, i)] = diag[c];
        }
        let mut high_couplings = vec![Vec::new(); high.len()];
        let mut pairs: Vec<_> = off.into_iter().collect();
        pairs.sort_by(|x, y| x.0.cmp(&y.0));
        for ((a, b), v) in pairs {
            match (is_high[a], is_high[b]) {
                (false, false) => {
                    schur[(pos[a], pos[b])] += v;
                    schur[(pos[b], pos[a])] += v;
                }
                (true, false) => high_couplings[pos[a]].push((pos[b], v)),
                (false, true) => high_couplings[pos[b]].push((pos[a], v)),
                (true, true) => unreachable!("high-high couplings were demoted"),
            }
        }
        let high_diag: Vec<f64> = high.iter().map(|&c| diag[c]).collect();
        for (h, cpl) in high_couplings.iter().enumerate() {
            for &(i, vi) in cpl {
                for &(j, vj) in cpl {
                    schur[(i, j)] -= vi * vj / high_diag[h];
                }
            }
        }
        let scale = schur.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut off_max = 0.0f64;
        for j in 0..nl {
            for i in 0..nl {
                if i != j {
                    off_max = off_max.max(schur[(i, j)].abs());
                }
            }
        }
        let reduced = if off_max <= 1e-14 * scale.max(1.0) {
            ReducedSolve::Diagonal(schur.diagonal().iter().copied().collect())
        } else {
            ReducedSolve::Dense(Cholesky::new(schur).ok_or_else(|| {
                Error::Numerical("normal equations are not positive definite".into())
            })?)
        };
        Ok(Self {
            n_coords: n,
            low,
            high,
            high_diag,
            high_couplings,
            reduced,
        })
    }

    pub fn n_coords(&self) -> usize {
        self.n_coords
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut z = DVector::from_iterator(self.low.len(), self.low.iter().map(|&c| rhs[c]));
        for (h, cpl) in self.high_couplings.iter().enumerate() {
            let t = rhs[self.high[h]] / self.high_diag[h];
            for &(i, v) in cpl {
                z[i] -= v * t;
            }
        }
        let pl = match &self.reduced {
            ReducedSolve::Diagonal(d) => {
                DVector::from_iterator(z.len(), z.iter().zip(d).map(|(a, b)| a / b))
            }
            ReducedSolve::Dense(ch) => ch.solve(&z),
        };
        let mut p = vec![0.0; self.n_coords];
        for (i, &c) in self.low.iter().enumerate() {
            p[c] = pl[i];
        }
        for (h, cpl) in self.high_couplings.iter().enumerate() {
            let mut r = rhs[self.high[h]];
            for &(i, v) in cpl {
                r -= v * pl[i];
            }
            p[self.high[h]] = r / self.high_diag[h];
        }
        p
    }

    /// Least-squares coordinates of slot values `y`: `argmin ‖L p + const − y‖`.
    pub fn fit(&self, slots: &SlotMap, y: &[Complex64]) -> Vec<f64> {
        let shifted: Vec<Complex64> = y
            .iter()
            .zip(slots.constants())
            .map(|(a, c)| a - c)
            .collect();
        self.solve(&slots.adjoint(&shifted, self.n_coords))
    }

    /// Least-squares coordinates of `y` against the linear part only.
    pub fn fit_linear(&self, slots: &SlotMap, y: &[Complex64]) -> Vec<f64> {
        self.solve(&slots.adjoint(y, self.n_coords))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::{canonicalize, Monomial};

    #[test]
    fn line_projection() {
        // slots t = <a0† a0>, s = 1 - t
        let t = canonicalize(&Monomial::parse("0+ 0").unwrap());
        let s = canonicalize(&Monomial::parse("0 0+").unwrap());
        let mut ps = ParamSpace::new(None);
        let slots = SlotMap::build([t, s], Symmetry::ParityOnly, &mut ps);
        let solver = NormalSolver::new(&slots, &ps).unwrap();
        let p = solver.fit(
            &slots,
            &[Complex64::new(0.7, 0.0), Complex64::new(0.5, 0.0)],
        );
        let y = slots.apply(&p);
        assert!((y[0].re - 0.6).abs() < 1e-14 && (y[1].re - 0.4).abs() < 1e-14);
    }
}
