//! Fermionic operator monomials and their canonical normal form.
//!
//! A monomial is a product of at most four ladder operators. Canonical keys
//! put every creator left of every annihilator, with strictly ascending mode
//! indices inside each group. Rewriting a product into that form only uses
//! `{a_k, a_l} = {a_k†, a_l†} = 0` and `{a_k, a_l†} = δ_kl`, so the result is
//! a signed sum of canonical keys plus an integer constant.
//!
//! Mode indices are zero-based throughout the crate.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest operator order handled by the relaxation (2-positivity).
pub const MAX_ORDER: usize = 4;

/// A single creation (`dagger = true`) or annihilation operator.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct Ladder {
    pub mode: u32,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Ladder {
            mode: mode as u32,
            dagger: true,
        }
    }

    pub fn annihilate(mode: usize) -> Self {
        Ladder {
            mode: mode as u32,
            dagger: false,
        }
    }

    pub fn adjoint(self) -> Self {
        Ladder {
            mode: self.mode,
            dagger: !self.dagger,
        }
    }
}

impl fmt::Display for Ladder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dagger {
            write!(f, "a{}†", self.mode)
        } else {
            write!(f, "a{}", self.mode)
        }
    }
}

/// Ordered product of up to [`MAX_ORDER`] ladder operators.
///
/// Unused slots are kept at `Ladder::default()` so the derived comparisons
/// only see the populated prefix plus a fixed padding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial {
    len: u8,
    factors: [Ladder; MAX_ORDER],
}

impl Monomial {
    /// The empty product, i.e. the identity operator.
    pub const IDENTITY: Monomial = Monomial {
        len: 0,
        factors: [Ladder {
            mode: 0,
            dagger: false,
        }; MAX_ORDER],
    };

    pub fn new(factors: &[Ladder]) -> Result<Self> {
        if factors.len() > MAX_ORDER {
            return Err(Error::UnsupportedOrder(factors.len()));
        }
        let mut m = Monomial::IDENTITY;
        m.len = factors.len() as u8;
        m.factors[..factors.len()].copy_from_slice(factors);
        Ok(m)
    }

    /// Parses a compact description such as `"1+ 2 0"`: a trailing `+`
    /// marks a creation operator.
    pub fn parse(text: &str) -> Result<Self> {
        let mut factors = Vec::new();
        for tok in text.split_whitespace() {
            let (digits, dagger) = match tok.strip_suffix('+') {
                Some(d) => (d, true),
                None => (tok, false),
            };
            let mode: u32 = digits
                .parse()
                .map_err(|_| Error::UnsupportedTerm(text.to_string()))?;
            factors.push(Ladder { mode, dagger });
        }
        Monomial::new(&factors)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn factors(&self) -> &[Ladder] {
        &self.factors[..self.len as usize]
    }

    pub fn creators(&self) -> usize {
        self.factors().iter().filter(|f| f.dagger).count()
    }

    pub fn annihilators(&self) -> usize {
        self.len() - self.creators()
    }

    /// Product `self · other`.
    pub fn concat(&self, other: &Monomial) -> Result<Monomial> {
        let total = self.len() + other.len();
        if total > MAX_ORDER {
            return Err(Error::UnsupportedOrder(total));
        }
        let mut m = *self;
        m.factors[self.len()..total].copy_from_slice(other.factors());
        m.len = total as u8;
        Ok(m)
    }

    /// Hermitian adjoint as an operator string (reversed, daggers flipped).
    pub fn adjoint(&self) -> Monomial {
        let mut m = Monomial::IDENTITY;
        m.len = self.len;
        for (slot, f) in m.factors.iter_mut().zip(self.factors().iter().rev()) {
            *slot = f.adjoint();
        }
        m
    }

    /// Relabels every mode by `mode -> (mode + shift) mod n_modes`.
    pub fn translate(&self, shift: usize, n_modes: usize) -> Monomial {
        let mut m = *self;
        for f in &mut m.factors[..self.len()] {
            f.mode = ((f.mode as usize + shift) % n_modes) as u32;
        }
        m
    }

    pub fn check_modes(&self, n_modes: usize) -> Result<()> {
        match self.factors().iter().find(|f| f.mode as usize >= n_modes) {
            Some(f) => Err(Error::ModeOutOfRange {
                mode: f.mode as usize,
                n_modes,
            }),
            None => Ok(()),
        }
    }

    /// True when the monomial already is a canonical key.
    pub fn is_canonical(&self) -> bool {
        self.factors().windows(2).all(|w| in_order(w[0], w[1]))
    }

    fn swapped(&self, i: usize) -> Monomial {
        let mut m = *self;
        m.factors.swap(i, i + 1);
        m
    }

    fn without_pair(&self, i: usize) -> Monomial {
        let mut out = Monomial::IDENTITY;
        let mut n = 0;
        for (j, f) in self.factors().iter().enumerate() {
            if j != i && j != i + 1 {
                out.factors[n] = *f;
                n += 1;
            }
        }
        out.len = n as u8;
        out
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{self}⟩")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in self.factors().iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl Serialize for Monomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.factors().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Monomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<Ladder>::deserialize(d)?;
        Monomial::new(&v).map_err(serde::de::Error::custom)
    }
}

// Strict order of adjacent factors in a canonical key.
fn in_order(a: Ladder, b: Ladder) -> bool {
    match (a.dagger, b.dagger) {
        (true, false) => true,
        (false, true) => false,
        _ => a.mode < b.mode,
    }
}

/// Real-linear combination of canonical keys plus a constant.
///
/// Canonicalization only ever produces integer coefficients, stored as `f64`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AffineExpression {
    pub terms: BTreeMap<Monomial, f64>,
    pub constant: f64,
}

impl AffineExpression {
    pub fn constant(c: f64) -> Self {
        AffineExpression {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    /// `coef · key`, with the identity key folded into the constant.
    pub fn term(key: Monomial, coef: f64) -> Self {
        let mut e = AffineExpression::default();
        e.add_term(key, coef);
        e
    }

    pub fn add_term(&mut self, key: Monomial, coef: f64) {
        if key.is_empty() {
            self.constant += coef;
            return;
        }
        let slot = self.terms.entry(key).or_insert(0.0);
        *slot += coef;
        if *slot == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn add_scaled(&mut self, other: &AffineExpression, scale: f64) {
        self.constant += scale * other.constant;
        for (k, c) in &other.terms {
            self.add_term(*k, scale * c);
        }
    }

    pub fn scaled(&self, scale: f64) -> Self {
        let mut out = AffineExpression::default();
        out.add_scaled(self, scale);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant == 0.0
    }

    /// Evaluates the expression given the expectation of every canonical key.
    pub fn evaluate<F: FnMut(&Monomial) -> Complex64>(&self, mut moment: F) -> Complex64 {
        self.terms
            .iter()
            .fold(Complex64::new(self.constant, 0.0), |acc, (k, c)| {
                acc + moment(k) * *c
            })
    }
}

impl fmt::Display for AffineExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (k, c) in &self.terms {
            write!(f, " {:+}·⟨{}⟩", c, k)?;
        }
        Ok(())
    }
}

/// Rewrites `m` into canonical keys using the anti-commutation relations.
///
/// Adjacent out-of-order factors are swapped one at a time; an `a_k a_k†`
/// swap spawns the shorter contraction term. A repeated index inside one
/// group kills the term.
pub fn canonicalize(m: &Monomial) -> AffineExpression {
    let mut out = AffineExpression::default();
    let mut stack = vec![(*m, 1.0)];
    'next: while let Some((mono, coef)) = stack.pop() {
        let f = mono.factors();
        for i in 0..f.len().saturating_sub(1) {
            let (a, b) = (f[i], f[i + 1]);
            if !a.dagger && b.dagger {
                if a.mode == b.mode {
                    stack.push((mono.without_pair(i), coef));
                }
                stack.push((mono.swapped(i), -coef));
                continue 'next;
            }
            if a.dagger == b.dagger {
                match a.mode.cmp(&b.mode) {
                    Ordering::Equal => continue 'next,
                    Ordering::Greater => {
                        stack.push((mono.swapped(i), -coef));
                        continue 'next;
                    }
                    Ordering::Less => {}
                }
            }
        }
        out.add_term(mono, coef);
    }
    out
}

/// Canonical form of a product known to reorder without contractions
/// (e.g. the adjoint or a translate of a canonical key): returns the key and
/// its sign, or `None` when the product vanishes.
pub fn canonical_single(m: &Monomial) -> Option<(Monomial, f64)> {
    let e = canonicalize(m);
    debug_assert!(e.constant == 0.0 && e.terms.len() <= 1);
    e.terms.into_iter().next()
}

/// Superselection structure assumed for the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    /// Only even-length moments survive.
    ParityOnly,
    /// Only moments with as many creators as annihilators survive.
    NumberConserving,
}

impl Symmetry {
    pub fn allows(self, key: &Monomial) -> bool {
        match self {
            Symmetry::ParityOnly => key.len() % 2 == 0,
            Symmetry::NumberConserving => key.creators() == key.annihilators(),
        }
    }
}

/// Drops every key whose expectation vanishes under `symmetry`.
pub fn apply_symmetry_filter(expr: &AffineExpression, symmetry: Symmetry) -> AffineExpression {
    AffineExpression {
        terms: expr
            .terms
            .iter()
            .filter(|(k, _)| symmetry.allows(k))
            .map(|(k, c)| (*k, *c))
            .collect(),
        constant: expr.constant,
    }
}
