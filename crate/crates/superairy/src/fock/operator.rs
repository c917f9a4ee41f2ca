//! Normal-ordered polynomial differential operators on the Fock algebra.
//!
//! Every operator is a sum of words in four atoms: multiplication by `x^a` or
//! `theta^j` (creators) and `hbar d/dx^a` or `hbar d/dtheta^j` (annihilators).
//! Words are kept normal ordered: creators left of annihilators, each class
//! sorted, with Grassmann signs absorbed into the coefficient.

use super::element::{FockElement, FockMonomial};
use crate::ring::{Poly, Rational};
use num::One;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

/// A single generator of the operator algebra. The derived order is the
/// normal order: creators before annihilators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// Multiplication by `x^a`.
    X(u32),
    /// Multiplication by `theta^j`.
    Theta(u32),
    /// `hbar d/dx^a`.
    Dx(u32),
    /// `hbar d/dtheta^j` (left derivative).
    Dtheta(u32),
}

impl Atom {
    pub fn is_odd(self) -> bool {
        matches!(self, Atom::Theta(_) | Atom::Dtheta(_))
    }

    pub fn is_annihilator(self) -> bool {
        matches!(self, Atom::Dx(_) | Atom::Dtheta(_))
    }

    pub fn index(self) -> u32 {
        match self {
            Atom::X(a) | Atom::Theta(a) | Atom::Dx(a) | Atom::Dtheta(a) => a,
        }
    }

    /// Whether `self * other` (annihilator first) contracts to `hbar`.
    fn contracts_with(self, other: Atom) -> bool {
        matches!((self, other), (Atom::Dx(a), Atom::X(b)) if a == b)
            || matches!((self, other), (Atom::Dtheta(a), Atom::Theta(b)) if a == b)
    }

    /// Applies the atom to one monomial.
    pub fn act(self, m: &FockMonomial) -> Option<(FockMonomial, Rational, i32)> {
        match self {
            Atom::X(a) => {
                let mut bos = m.bos.clone();
                let pos = bos.partition_point(|&v| v <= a);
                bos.insert(pos, a);
                Some((FockMonomial { bos, fer: m.fer.clone() }, Rational::one(), 0))
            }
            Atom::Dx(a) => {
                let lo = m.bos.partition_point(|&v| v < a);
                let hi = m.bos.partition_point(|&v| v <= a);
                if lo == hi {
                    return None;
                }
                let mut bos = m.bos.clone();
                bos.remove(lo);
                let mult = Rational::from_integer(((hi - lo) as i64).into());
                Some((FockMonomial { bos, fer: m.fer.clone() }, mult, 2))
            }
            Atom::Theta(j) => {
                let pos = m.fer.partition_point(|&v| v < j);
                if m.fer.get(pos) == Some(&j) {
                    return None;
                }
                let mut fer = m.fer.clone();
                fer.insert(pos, j);
                let s = if pos % 2 == 0 { 1 } else { -1 };
                Some((FockMonomial { bos: m.bos.clone(), fer }, Rational::from_integer(s.into()), 0))
            }
            Atom::Dtheta(j) => {
                let pos = m.fer.partition_point(|&v| v < j);
                if m.fer.get(pos) != Some(&j) {
                    return None;
                }
                let mut fer = m.fer.clone();
                fer.remove(pos);
                let s = if pos % 2 == 0 { 1 } else { -1 };
                Some((FockMonomial { bos: m.bos.clone(), fer }, Rational::from_integer(s.into()), 2))
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::X(a) => write!(f, "x{a}"),
            Atom::Theta(a) => write!(f, "th{a}"),
            Atom::Dx(a) => write!(f, "Dx{a}"),
            Atom::Dtheta(a) => write!(f, "Dth{a}"),
        }
    }
}

/// A word of atoms in normal order.
pub type Word = Vec<Atom>;

/// Normal orders an arbitrary product of atoms.
///
/// Returns `(word, coefficient, hbar power)` triples; each contraction
/// contributes one power of `hbar`.
pub fn normal_order(word: &[Atom]) -> Vec<(Word, i64, u32)> {
    let mut out: BTreeMap<(Word, u32), i64> = BTreeMap::new();
    normal_order_into(word.to_vec(), 1, 0, &mut out);
    out.into_iter().filter(|(_, c)| *c != 0).map(|((w, h), c)| (w, c, h)).collect()
}

fn normal_order_into(mut w: Word, mut coeff: i64, hbar: u32, out: &mut BTreeMap<(Word, u32), i64>) {
    loop {
        let pos = (0..w.len().saturating_sub(1)).find(|&k| w[k] > w[k + 1] || (w[k] == w[k + 1] && w[k].is_odd()));
        let Some(k) = pos else {
            *out.entry((w, hbar)).or_insert(0) += coeff;
            return;
        };
        if w[k] == w[k + 1] {
            // nilpotent odd atom
            return;
        }
        if w[k].contracts_with(w[k + 1]) {
            let mut rest = w.clone();
            rest.drain(k..k + 2);
            normal_order_into(rest, coeff, hbar + 1, out);
        }
        let sign = if w[k].is_odd() && w[k + 1].is_odd() { -1 } else { 1 };
        w.swap(k, k + 1);
        coeff *= sign;
    }
}

/// A normal-ordered operator: map from word to coefficient. The empty word
/// carries the additive constant.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OperatorExpr {
    terms: BTreeMap<Word, Poly>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Poly) -> Self {
        let mut out = Self::zero();
        out.add_word(Vec::new(), &c);
        out
    }

    /// `c` times the normal ordering of `word`.
    pub fn word(word: &[Atom], c: &Poly) -> Self {
        let mut out = Self::zero();
        out.add_product(word, c);
        out
    }

    pub fn atom(a: Atom, c: Poly) -> Self {
        Self::word(&[a], &c)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Poly)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of an already normal-ordered word.
    pub fn coeff(&self, w: &[Atom]) -> Poly {
        self.terms.get(w).cloned().unwrap_or_default()
    }

    pub fn constant_part(&self) -> Poly {
        self.coeff(&[])
    }

    /// Adds `c * w` for a word already in normal order.
    pub fn add_word(&mut self, w: Word, c: &Poly) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(w) {
            Entry::Vacant(e) => {
                e.insert(c.clone());
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Adds `c` times the normal ordering of an arbitrary product.
    pub fn add_product(&mut self, word: &[Atom], c: &Poly) {
        if c.is_zero() {
            return;
        }
        for (w, k, h) in normal_order(word) {
            let factor = Poly::h_half_pow(2 * h as i32).scale(&Rational::from_integer(k.into()));
            self.add_word(w, &(c * &factor));
        }
    }

    pub fn add_assign(&mut self, other: &OperatorExpr) {
        for (w, c) in &other.terms {
            self.add_word(w.clone(), c);
        }
    }

    pub fn add_scaled(&mut self, other: &OperatorExpr, s: &Poly) {
        for (w, c) in &other.terms {
            self.add_word(w.clone(), &(c * s));
        }
    }

    pub fn scale(&self, s: &Poly) -> OperatorExpr {
        let mut out = OperatorExpr::zero();
        out.add_scaled(self, s);
        out
    }

    pub fn neg(&self) -> OperatorExpr {
        self.scale(&Poly::int(-1))
    }

    pub fn sub(&self, other: &OperatorExpr) -> OperatorExpr {
        let mut out = self.clone();
        out.add_scaled(other, &Poly::int(-1));
        out
    }

    /// Operator product, normal ordered.
    pub fn mul(&self, other: &OperatorExpr) -> OperatorExpr {
        let mut out = OperatorExpr::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                out.add_product(&w, &(c1 * c2));
            }
        }
        out
    }

    /// Grassmann parity of every word, or `None` for mixed parity.
    pub fn parity(&self) -> Option<bool> {
        let mut it = self.terms.keys().map(|w| w.iter().filter(|a| a.is_odd()).count() % 2 == 1);
        let first = it.next().unwrap_or(false);
        it.all(|p| p == first).then_some(first)
    }

    /// Super-commutator: anticommutator iff both operators are odd.
    pub fn supercommutator(&self, other: &OperatorExpr) -> OperatorExpr {
        let both_odd = self.parity() == Some(true) && other.parity() == Some(true);
        let ab = self.mul(other);
        let ba = other.mul(self);
        if both_odd {
            let mut out = ab;
            out.add_assign(&ba);
            out
        } else {
            ab.sub(&ba)
        }
    }

    /// Keeps words satisfying `keep`.
    pub fn filter<F: Fn(&[Atom]) -> bool>(&self, keep: F) -> OperatorExpr {
        OperatorExpr {
            terms: self.terms.iter().filter(|(w, _)| keep(w)).map(|(w, c)| (w.clone(), c.clone())).collect(),
        }
    }

    /// Keeps words whose annihilators all have index at most `max`.
    pub fn truncate_annihilators(&self, max: u32) -> OperatorExpr {
        self.filter(|w| w.iter().all(|a| !a.is_annihilator() || a.index() <= max))
    }

    /// Maps every coefficient through `f`.
    pub fn map_coeffs<F: Fn(&Poly) -> Poly>(&self, f: F) -> OperatorExpr {
        let mut out = OperatorExpr::zero();
        for (w, c) in &self.terms {
            out.add_word(w.clone(), &f(c));
        }
        out
    }

    /// Applies the operator; result truncated to degree `degree_cutoff` if given.
    pub fn apply(&self, v: &FockElement, degree_cutoff: Option<i32>) -> FockElement {
        let mut out = FockElement::zero();
        for (w, c) in &self.terms {
            let mut cur = v.clone();
            for a in w.iter().rev() {
                cur = apply_atom(*a, &cur);
                if cur.is_zero() {
                    break;
                }
            }
            if cur.is_zero() {
                continue;
            }
            out.add_assign(&cur.scale(c));
        }
        match degree_cutoff {
            Some(d) => out.truncate(d),
            None => out,
        }
    }
}

/// Applies a single atom to a Fock element.
pub fn apply_atom(a: Atom, v: &FockElement) -> FockElement {
    let mut out = FockElement::zero();
    for (m, c) in v.terms() {
        if let Some((m2, k, h)) = a.act(m) {
            let mut c2 = c.scale(&k);
            if h != 0 {
                c2 = &c2 * &Poly::h_half_pow(h);
            }
            out.add_term(m2, &c2);
        }
    }
    out
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(w, c)| {
                if w.is_empty() {
                    format!("({c})")
                } else {
                    let ws: Vec<String> = w.iter().map(|a| a.to_string()).collect();
                    format!("({c})*{}", ws.join("*"))
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}
