use std::collections::{HashMap, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fermion::{canonical_single, Monomial};

/// Constraint left on a representative's value after orbit closure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueClass {
    Complex,
    Real,
    Imaginary,
}

/// Real coordinates of one free moment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coords {
    Complex { re: usize, im: usize },
    Real(usize),
    Imaginary(usize),
}

#[derive(Clone, Debug)]
pub struct Param {
    pub key: Monomial,
    pub class: ValueClass,
    pub coords: Coords,
}

/// How a canonical key's value derives from its representative `v`:
/// `sign · v` or `sign · conj(v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyRef {
    pub param: usize,
    pub sign: f64,
    pub conj: bool,
}

/// Free real coordinates of a moment relaxation.
///
/// Keys related by taking adjoints (and, when translation invariance is
/// imposed, by cyclic shifts) share one representative, the smallest key of
/// the orbit. Closing the orbit can force the representative to be real,
/// imaginary, or zero; zero keys resolve to `None`.
#[derive(Clone, Debug)]
pub struct ParamSpace {
    translation: Option<usize>,
    params: Vec<Param>,
    index: HashMap<Monomial, Option<KeyRef>>,
    n_coords: usize,
    coord_owner: Vec<usize>,
}

impl ParamSpace {
    /// `translation = Some(n)` identifies keys under cyclic shifts on `n` sites.
    pub fn new(translation: Option<usize>) -> Self {
        Self {
            translation,
            params: Vec::new(),
            index: HashMap::new(),
            n_coords: 0,
            coord_owner: Vec::new(),
        }
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn n_coords(&self) -> usize {
        self.n_coords
    }

    /// Parameter owning real coordinate `c`.
    pub fn coord_owner(&self, c: usize) -> &Param {
        &self.params[self.coord_owner[c]]
    }

    pub fn lookup(&self, key: &Monomial) -> Option<Option<KeyRef>> {
        self.index.get(key).copied()
    }

    /// Resolve a canonical key, creating a parameter for its orbit on first use.
    pub fn resolve(&mut self, key: &Monomial) -> Option<KeyRef> {
        if let Some(r) = self.index.get(key) {
            return *r;
        }
        self.close_orbit(key)
    }

    /// Real-linear form of `⟨key⟩` as `(coordinate, complex coefficient)` pairs.
    pub fn coefficients(&self, r: KeyRef) -> Vec<(usize, Complex64)> {
        let p = &self.params[r.param];
        let s = r.sign;
        let i_s = Complex64::new(0.0, if r.conj { -s } else { s });
        match p.coords {
            Coords::Complex { re, im } => vec![(re, Complex64::new(s, 0.0)), (im, i_s)],
            Coords::Real(c) => vec![(c, Complex64::new(s, 0.0))],
            Coords::Imaginary(c) => vec![(c, i_s)],
        }
    }

    /// Value of a resolved key given the full coordinate vector.
    pub fn value(&self, r: KeyRef, coords: &[f64]) -> Complex64 {
        self.coefficients(r)
            .into_iter()
            .map(|(c, a)| a * coords[c])
            .sum()
    }

    fn close_orbit(&mut self, start: &Monomial) -> Option<KeyRef> {
        // state (sign, conj): <member> = sign * phi(<start>), phi = conj if flagged
        let mut members: HashMap<Monomial, (f64, bool)> = HashMap::new();
        let mut queue = VecDeque::new();
        members.insert(*start, (1.0, false));
        queue.push_back(*start);
        let mut flags = OrbitFlags::default();
        while let Some(m) = queue.pop_front() {
            let (s, c) = members[&m];
            match canonical_single(&m.adjoint()) {
                Some((adj, sigma)) => flags.visit(adj, (sigma * s, !c), &mut members, &mut queue),
                None => flags.zero = true,
            }
            if let Some(n) = self.translation {
                match canonical_single(&m.translate(1, n)) {
                    Some((t, sigma)) => flags.visit(t, (sigma * s, c), &mut members, &mut queue),
                    None => flags.zero = true,
                }
            }
        }
        let OrbitFlags {
            real,
            imaginary,
            zero,
        } = flags;
        if zero || (real && imaginary) {
            for m in members.keys() {
                self.index.insert(*m, None);
            }
            return None;
        }
        let rep = *members.keys().min().expect("orbit contains its start");
        let (s_rep, c_rep) = members[&rep];
        let class = if real {
            ValueClass::Real
        } else if imaginary {
            ValueClass::Imaginary
        } else {
            ValueClass::Complex
        };
        let id = self.params.len();
        let coords = match class {
            ValueClass::Complex => {
                let c = Coords::Complex {
                    re: self.n_coords,
                    im: self.n_coords + 1,
                };
                self.n_coords += 2;
                self.coord_owner.extend([id, id]);
                c
            }
            ValueClass::Real => {
                self.n_coords += 1;
                self.coord_owner.push(id);
                Coords::Real(self.n_coords - 1)
            }
            ValueClass::Imaginary => {
                self.n_coords += 1;
                self.coord_owner.push(id);
                Coords::Imaginary(self.n_coords - 1)
            }
        };
        self.params.push(Param {
            key: rep,
            class,
            coords,
        });
        // <start> = s_rep * phi_rep(<rep>), so <m> = s_m s_rep (phi_m o phi_rep)(<rep>)
        for (m, (s, c)) in &members {
            self.index.insert(
                *m,
                Some(KeyRef {
                    param: id,
                    sign: s * s_rep,
                    conj: c ^ c_rep,
                }),
            );
        }
        self.index[start]
    }
}

#[derive(Default)]
struct OrbitFlags {
    real: bool,
    imaginary: bool,
    zero: bool,
}

impl OrbitFlags {
    fn visit(
        &mut self,
        m: Monomial,
        state: (f64, bool),
        members: &mut HashMap<Monomial, (f64, bool)>,
        queue: &mut VecDeque<Monomial>,
    ) {
        match members.get(&m) {
            None => {
                members.insert(m, state);
                queue.push_back(m);
            }
            Some(&old) if old.1 == state.1 => {
                if old.0 != state.0 {
                    self.zero = true;
                }
            }
            Some(&old) if old.0 * state.0 > 0.0 => self.real = true,
            Some(_) => self.imaginary = true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(s: &str) -> Monomial {
        Monomial::parse(s).unwrap()
    }

    #[test]
    fn density_is_real() {
        let mut ps = ParamSpace::new(None);
        let r = ps.resolve(&key("1+ 1")).unwrap();
        assert_eq!(ps.params()[r.param].class, ValueClass::Real);
        assert_eq!(ps.n_coords(), 1);
    }

    #[test]
    fn hopping_pair_shares_parameter() {
        let mut ps = ParamSpace::new(None);
        let a = ps.resolve(&key("0+ 1")).unwrap();
        let b = ps.resolve(&key("1+ 0")).unwrap();
        assert_eq!(a.param, b.param);
        assert_ne!(a.conj, b.conj);
        assert_eq!(ps.n_coords(), 2);
        let coords = [0.3, -0.7];
        let va = ps.value(a, &coords);
        let vb = ps.value(b, &coords);
        assert!((va - vb.conj()).norm() < 1e-15);
    }

    #[test]
    fn pairing_adjoint_has_sign() {
        let mut ps = ParamSpace::new(None);
        let a = ps.resolve(&key("0 1")).unwrap();
        let b = ps.resolve(&key("0+ 1+")).unwrap();
        let coords = [0.2, 0.5];
        // (a0 a1)† = a1† a0† = -a0† a1†
        assert!((ps.value(b, &coords) + ps.value(a, &coords).conj()).norm() < 1e-15);
    }

    #[test]
    fn translation_merges_orbits() {
        let mut ps = ParamSpace::new(Some(4));
        let a = ps.resolve(&key("0+ 1")).unwrap();
        let b = ps.resolve(&key("2+ 3")).unwrap();
        let c = ps.resolve(&key("1+ 0")).unwrap();
        assert_eq!(a.param, b.param);
        assert_eq!(a.param, c.param);
        assert_eq!(ps.params().len(), 1);
    }

    #[test]
    fn translation_can_force_zero() {
        // a0 a2 on four sites: shift by 2 gives a2 a0 = -a0 a2
        let mut ps = ParamSpace::new(Some(4));
        assert!(ps.resolve(&key("0 2")).is_none());
        assert!(ps.resolve(&key("1 3")).is_none());
    }
}
