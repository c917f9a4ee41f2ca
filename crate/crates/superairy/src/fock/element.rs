//! Finite elements of the graded Fock algebra in bosonic `x^i` (i >= 1) and
//! Grassmann `theta^j` (j >= 0) variables.

use crate::ring::{Monomial, Poly, Rational};
use num::{One, Zero};
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

/// A monomial `x^I theta^J`: `bos` is a sorted multiset, `fer` is strictly increasing.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockMonomial {
    pub bos: Vec<u32>,
    pub fer: Vec<u32>,
}

impl FockMonomial {
    pub fn one() -> Self {
        Self::default()
    }

    /// Canonicalizes arbitrary index lists, returning the Grassmann sign, or
    /// `None` if a fermionic index repeats.
    pub fn canonical(mut bos: Vec<u32>, fer: Vec<u32>) -> Option<(Self, i32)> {
        bos.sort_unstable();
        let (fer, sign) = sort_grassmann(fer)?;
        Some((FockMonomial { bos, fer }, sign))
    }

    /// Number of variables; the Fock part of the grading.
    /// Builds a monomial from bosonic indices in any order and strictly
    /// increasing fermionic indices.
    ///
    /// Panics if the fermionic indices are not strictly increasing.
    pub fn from_indices(bos: &[u32], fer: &[u32]) -> Self {
        assert!(fer.windows(2).all(|w| w[0] < w[1]), "fermionic indices must increase");
        let mut bos = bos.to_vec();
        bos.sort_unstable();
        FockMonomial { bos, fer: fer.to_vec() }
    }

    pub fn len(&self) -> usize {
        self.bos.len() + self.fer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bos.is_empty() && self.fer.is_empty()
    }

    pub fn is_even(&self) -> bool {
        self.fer.len().is_multiple_of(2)
    }

    /// Largest bosonic and fermionic index present.
    pub fn max_index(&self) -> (u32, u32) {
        (self.bos.last().copied().unwrap_or(0), self.fer.last().copied().unwrap_or(0))
    }

    /// Product with the Grassmann sign, `None` if it vanishes.
    pub fn mul(&self, other: &FockMonomial) -> Option<(FockMonomial, i32)> {
        let (fer, sign) = merge_grassmann(&self.fer, &other.fer)?;
        let mut bos = Vec::with_capacity(self.bos.len() + other.bos.len());
        let (mut i, mut j) = (0, 0);
        while i < self.bos.len() || j < other.bos.len() {
            if j == other.bos.len() || (i < self.bos.len() && self.bos[i] <= other.bos[j]) {
                bos.push(self.bos[i]);
                i += 1;
            } else {
                bos.push(other.bos[j]);
                j += 1;
            }
        }
        Some((FockMonomial { bos, fer }, sign))
    }

    /// `prod_k mult_k!`, the automorphism count of the bosonic multiset.
    pub fn bos_automorphisms(&self) -> Rational {
        multiset_automorphisms(&self.bos)
    }
}

/// `prod_k mult_k!` for a sorted multiset.
pub fn multiset_automorphisms(sorted: &[u32]) -> Rational {
    let mut out = Rational::one();
    let mut run = 0i64;
    for (k, v) in sorted.iter().enumerate() {
        if k > 0 && sorted[k - 1] == *v {
            run += 1;
        } else {
            run = 1;
        }
        out *= Rational::from_integer(run.into());
    }
    out
}

/// Sorts a fermionic index list, returning the permutation sign.
pub fn sort_grassmann(mut v: Vec<u32>) -> Option<(Vec<u32>, i32)> {
    let mut sign = 1;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
        if j > 0 && v[j - 1] == v[j] {
            return None;
        }
    }
    Some((v, sign))
}

/// Merges two increasing lists; the sign counts inversions across them.
pub fn merge_grassmann(a: &[u32], b: &[u32]) -> Option<(Vec<u32>, i32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mut inversions = 0usize;
    while i < a.len() || j < b.len() {
        if j == b.len() {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() {
            out.push(b[j]);
            j += 1;
        } else if a[i] == b[j] {
            return None;
        } else if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over the remaining a's
            inversions += a.len() - i;
            out.push(b[j]);
            j += 1;
        }
    }
    Some((out, if inversions.is_multiple_of(2) { 1 } else { -1 }))
}

/// Grading of a single term: Fock variables plus the coefficient degree.
pub fn term_degree(m: &FockMonomial, coeff_mono: &Monomial) -> i32 {
    m.len() as i32 + coeff_mono.degree()
}

/// A finite linear combination of Fock monomials with [`Poly`] coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FockElement {
    terms: BTreeMap<FockMonomial, Poly>,
}

impl FockElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(FockMonomial::one(), Poly::one())
    }

    pub fn monomial(m: FockMonomial, c: Poly) -> Self {
        let mut out = Self::zero();
        out.add_term(m, &c);
        out
    }

    /// `c * x^bos theta^fer` with arbitrary index order.
    pub fn from_indices(bos: &[u32], fer: &[u32], c: Poly) -> Self {
        match FockMonomial::canonical(bos.to_vec(), fer.to_vec()) {
            Some((m, s)) => Self::monomial(m, c.scale(&Rational::from_integer(s.into()))),
            None => Self::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockMonomial, &Poly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &FockMonomial) -> Poly {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, m: FockMonomial, c: &Poly) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
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

    pub fn add_assign(&mut self, other: &FockElement) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c);
        }
    }

    pub fn sub_assign(&mut self, other: &FockElement) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), &-c);
        }
    }

    pub fn scale(&self, s: &Poly) -> FockElement {
        let mut out = FockElement::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), &(c * s));
        }
        out
    }

    pub fn scale_rational(&self, s: &Rational) -> FockElement {
        if s.is_zero() {
            return FockElement::zero();
        }
        FockElement { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.scale(s))).collect() }
    }

    /// Grassmann product, keeping only terms of degree at most `max_degree`.
    pub fn mul_truncated(&self, other: &FockElement, max_degree: Option<i32>) -> FockElement {
        let mut out = FockElement::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let Some((m, sign)) = m1.mul(m2) else { continue };
                let mut c = c1 * c2;
                if let Some(d) = max_degree {
                    let base = m.len() as i32;
                    c = c.filter(|mono| base + mono.degree() <= d);
                }
                if sign < 0 {
                    c = -c;
                }
                out.add_term(m, &c);
            }
        }
        out
    }

    pub fn mul(&self, other: &FockElement) -> FockElement {
        self.mul_truncated(other, None)
    }

    /// Terms of total degree at most `max_degree`.
    pub fn truncate(&self, max_degree: i32) -> FockElement {
        self.filter_degree(|d| d <= max_degree)
    }

    /// Terms of total degree exactly `degree`.
    pub fn component(&self, degree: i32) -> FockElement {
        self.filter_degree(|d| d == degree)
    }

    fn filter_degree<F: Fn(i32) -> bool>(&self, keep: F) -> FockElement {
        let mut out = FockElement::zero();
        for (m, c) in &self.terms {
            let base = m.len() as i32;
            let kept = c.filter(|mono| keep(base + mono.degree()));
            out.add_term(m.clone(), &kept);
        }
        out
    }

    /// Degrees present, in increasing order.
    pub fn degrees(&self) -> Vec<i32> {
        let mut ds: Vec<i32> =
            self.terms.iter().flat_map(|(m, c)| c.terms().map(move |(mono, _)| term_degree(m, mono))).collect();
        ds.sort_unstable();
        ds.dedup();
        ds
    }

    /// Largest bosonic and fermionic index appearing in any term.
    pub fn max_index(&self) -> (u32, u32) {
        self.terms.keys().fold((0, 0), |(b, f), m| {
            let (mb, mf) = m.max_index();
            (b.max(mb), f.max(mf))
        })
    }

    /// `exp(self)` truncated at `max_degree`; every term of `self` must be even
    /// with degree at least one.
    pub fn exp_truncated(&self, max_degree: i32) -> FockElement {
        let f = self.truncate(max_degree);
        let mut out = FockElement::one();
        let mut power = FockElement::one();
        for k in 1..=max_degree.max(0) {
            power = power.mul_truncated(&f, Some(max_degree));
            if power.is_zero() {
                break;
            }
            let inv = Rational::new(1.into(), factorial(k as u32));
            out.add_assign(&power.scale_rational(&inv));
        }
        out.truncate(max_degree)
    }

    /// Maps every coefficient through `f`.
    pub fn map_coeffs<F: Fn(&Poly) -> Poly>(&self, f: F) -> FockElement {
        let mut out = FockElement::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), &f(c));
        }
        out
    }

    /// Evaluates at `x = theta = 0`.
    pub fn constant_term(&self) -> Poly {
        self.coeff(&FockMonomial::one())
    }
}

pub(crate) fn factorial(n: u32) -> num::BigInt {
    (1..=n).fold(num::BigInt::one(), |acc, k| acc * num::BigInt::from(k))
}

impl fmt::Display for FockMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> =
            self.bos.iter().map(|i| format!("x{i}")).chain(self.fer.iter().map(|j| format!("th{j}"))).collect();
        f.write_str(&parts.join("*"))
    }
}

impl fmt::Display for FockElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(m, c)| format!("({c})*{m}")).collect();
        f.write_str(&parts.join(" + "))
    }
}
