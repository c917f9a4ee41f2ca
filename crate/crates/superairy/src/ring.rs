//! Sparse multivariate Laurent polynomials with exact rational coefficients.
//!
//! The symbol set is `tau0`, `Q0`, `T`, `Lambda` and `h_half` (the square root
//! of the loop-counting parameter), optionally extended by user-declared
//! symbols. Half-integer powers of hbar are stored as integer powers of
//! `h_half`.

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{OnceLock, RwLock};

pub type Rational = BigRational;

/// Index of `tau0` in an exponent vector.
pub const TAU0: usize = 0;
/// Index of `Q0`.
pub const Q0: usize = 1;
/// Index of `T`.
pub const T: usize = 2;
/// Index of `Lambda`.
pub const LAMBDA: usize = 3;
/// Index of `h_half`, the square root of hbar.
pub const H_HALF: usize = 4;

const BUILTIN: [&str; 5] = ["tau0", "Q0", "T", "Lambda", "h_half"];

fn extra_symbols() -> &'static RwLock<Vec<String>> {
    static EXTRA: OnceLock<RwLock<Vec<String>>> = OnceLock::new();
    EXTRA.get_or_init(|| RwLock::new(Vec::new()))
}

/// Returns the index of a symbol, declaring it if it is new.
///
/// Declared symbols live for the whole process; indices are stable.
pub fn symbol(name: &str) -> usize {
    if let Some(i) = BUILTIN.iter().position(|s| *s == name) {
        return i;
    }
    {
        let extra = extra_symbols().read().expect("symbol table poisoned");
        if let Some(i) = extra.iter().position(|s| s == name) {
            return BUILTIN.len() + i;
        }
    }
    let mut extra = extra_symbols().write().expect("symbol table poisoned");
    if let Some(i) = extra.iter().position(|s| s == name) {
        return BUILTIN.len() + i;
    }
    extra.push(name.to_string());
    BUILTIN.len() + extra.len() - 1
}

/// Returns the index of an already known symbol.
pub fn lookup_symbol(name: &str) -> Option<usize> {
    if let Some(i) = BUILTIN.iter().position(|s| *s == name) {
        return Some(i);
    }
    let extra = extra_symbols().read().expect("symbol table poisoned");
    extra.iter().position(|s| s == name).map(|i| BUILTIN.len() + i)
}

/// Name of the symbol at `index`.
pub fn symbol_name(index: usize) -> String {
    if index < BUILTIN.len() {
        return BUILTIN[index].to_string();
    }
    let extra = extra_symbols().read().expect("symbol table poisoned");
    extra.get(index - BUILTIN.len()).cloned().unwrap_or_else(|| format!("s{index}"))
}

/// Exponent vector with trailing zeros removed, so equal monomials compare equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(SmallVec<[i32; 6]>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn from_exponents(exps: &[i32]) -> Self {
        let mut v: SmallVec<[i32; 6]> = exps.iter().copied().collect();
        while v.last() == Some(&0) {
            v.pop();
        }
        Monomial(v)
    }

    pub fn var(index: usize, power: i32) -> Self {
        let mut v = vec![0; index + 1];
        v[index] = power;
        Self::from_exponents(&v)
    }

    pub fn exponent(&self, index: usize) -> i32 {
        self.0.get(index).copied().unwrap_or(0)
    }

    pub fn exponents(&self) -> &[i32] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let n = self.0.len().max(other.0.len());
        let v: Vec<i32> = (0..n).map(|i| self.exponent(i) + other.exponent(i)).collect();
        Self::from_exponents(&v)
    }

    pub fn inverse(&self) -> Monomial {
        let v: Vec<i32> = self.0.iter().map(|e| -e).collect();
        Self::from_exponents(&v)
    }

    /// Grading weight: `h_half` and `Lambda` count one each, everything else zero.
    /// `T -> Lambda^2 hbar^-1` therefore preserves it.
    pub fn degree(&self) -> i32 {
        self.exponent(H_HALF) + self.exponent(LAMBDA)
    }

    pub fn with_exponent(&self, index: usize, power: i32) -> Monomial {
        let n = self.0.len().max(index + 1);
        let mut v: Vec<i32> = (0..n).map(|i| self.exponent(i)).collect();
        v[index] = power;
        Self::from_exponents(&v)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, e) in self.0.iter().enumerate() {
            if *e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            let name = symbol_name(i);
            if *e == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{e}")?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// Exact sparse Laurent polynomial over the rationals.
///
/// Invariant: no stored coefficient is zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn int(n: i64) -> Self {
        Self::constant(int(n))
    }

    pub fn rat(n: i64, d: i64) -> Self {
        Self::constant(rat(n, d))
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    /// The symbol at `index` to the first power.
    pub fn var(index: usize) -> Self {
        Self::term(Monomial::var(index, 1), Rational::one())
    }

    /// `h_half^k`, i.e. hbar^(k/2).
    pub fn h_half_pow(k: i32) -> Self {
        Self::term(Monomial::var(H_HALF, k), Rational::one())
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

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Monomial, Rational)> {
        self.terms.into_iter()
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(it: I) -> Self {
        let mut p = Poly::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    /// Coefficient of a monomial, zero if absent.
    pub fn coeff_of(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// The constant term, if the polynomial is a constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Poly, s: &Rational) {
        if s.is_zero() {
            return;
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * s);
        }
    }

    pub fn scale(&self, s: &Rational) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect() }
    }

    pub fn mul_monomial(&self, mono: &Monomial, s: &Rational) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.mul(mono), c * s)).collect() }
    }

    /// Inverse of a single-term polynomial; `None` for anything else.
    pub fn unit_inverse(&self) -> Option<Poly> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        Some(Poly::term(m.inverse(), c.recip()))
    }

    /// Sum of terms whose `h_half` exponent equals `k`.
    pub fn h_half_part(&self, k: i32) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.exponent(H_HALF) == k)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Splits into `h_half` exponent classes.
    pub fn h_half_split(&self) -> BTreeMap<i32, Poly> {
        let mut out: BTreeMap<i32, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.exponent(H_HALF)).or_default().terms.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn filter<F: Fn(&Monomial) -> bool>(&self, keep: F) -> Poly {
        Poly { terms: self.terms.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (m.clone(), c.clone())).collect() }
    }

    /// Smallest and largest exponent of a symbol among the terms.
    pub fn exponent_range(&self, index: usize) -> Option<(i32, i32)> {
        let mut it = self.terms.keys().map(|m| m.exponent(index));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), e| (lo.min(e), hi.max(e))))
    }

    /// Substitutes `T^d -> Lambda^(2d) * hbar^(-d)`, monomial by monomial.
    pub fn regrade(&self) -> Poly {
        Poly::from_terms(self.terms.iter().map(|(m, c)| {
            let d = m.exponent(T);
            let m2 = m
                .with_exponent(T, 0)
                .with_exponent(LAMBDA, m.exponent(LAMBDA) + 2 * d)
                .with_exponent(H_HALF, m.exponent(H_HALF) - 2 * d);
            (m2, c.clone())
        }))
    }

    /// Substitutes `Lambda^2 -> hbar * T`; inverse of [`Poly::regrade`] on even Lambda powers.
    pub fn ungrade(&self) -> Poly {
        Poly::from_terms(self.terms.iter().map(|(m, c)| {
            let l = m.exponent(LAMBDA);
            assert!(l % 2 == 0, "odd Lambda power cannot be ungraded");
            let d = l / 2;
            let m2 = m
                .with_exponent(LAMBDA, 0)
                .with_exponent(T, m.exponent(T) + d)
                .with_exponent(H_HALF, m.exponent(H_HALF) + 2 * d);
            (m2, c.clone())
        }))
    }

    /// Integer power; negative powers need a single-term base.
    ///
    /// Panics on a negative power of a non-invertible polynomial.
    pub fn pow(&self, e: i32) -> Poly {
        let base =
            if e >= 0 { self.clone() } else { self.unit_inverse().expect("negative power needs a single-term base") };
        let mut out = Poly::one();
        for _ in 0..e.unsigned_abs() {
            out = &out * &base;
        }
        out
    }

    /// Replaces the symbol `index` by the polynomial `value`.
    ///
    /// Panics if a negative power occurs and `value` is not a single term.
    pub fn substitute(&self, index: usize, value: &Poly) -> Poly {
        let inverse = value.unit_inverse();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(index);
            let base = if e >= 0 { value } else { inverse.as_ref().expect("negative power needs an invertible value") };
            let mut p = Poly::term(m.with_exponent(index, 0), c.clone());
            for _ in 0..e.unsigned_abs() {
                p = &p * base;
            }
            out += &p;
        }
        out
    }

    /// Serialization records in canonical (monomial) order.
    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(m, c)| TermRecord {
                exponents: m
                    .exponents()
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| **e != 0)
                    .map(|(i, e)| (symbol_name(i), *e))
                    .collect(),
                numerator: c.numer().to_string(),
                denominator: c.denom().to_string(),
            })
            .collect()
    }

    pub fn from_records(records: &[TermRecord]) -> Result<Poly, String> {
        let mut p = Poly::zero();
        for r in records {
            let n: BigInt = r.numerator.parse().map_err(|_| format!("bad numerator {}", r.numerator))?;
            let d: BigInt = r.denominator.parse().map_err(|_| format!("bad denominator {}", r.denominator))?;
            if d.is_zero() {
                return Err("zero denominator".into());
            }
            let mut m = Monomial::one();
            for (name, e) in &r.exponents {
                m = m.mul(&Monomial::var(symbol(name), *e));
            }
            p.add_term(m, Rational::new(n, d));
        }
        Ok(p)
    }
}

/// One serialized term of a [`Poly`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub exponents: BTreeMap<String, i32>,
    pub numerator: String,
    pub denominator: String,
}

/// Parses `"p/q"`, `"p"`, a symbol name, or a `*`-separated product of these
/// with optional `^k` powers on symbols, e.g. `"-3/2*tau0^2*a"`.
pub fn parse_value(s: &str) -> Result<Poly, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty value".into());
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let mut p = Poly::one();
    for factor in body.split('*') {
        let factor = factor.trim();
        if factor.is_empty() {
            return Err(format!("malformed value {s:?}"));
        }
        let first = factor.chars().next().unwrap();
        if first.is_ascii_digit() {
            p = p.scale(&parse_rational(factor)?);
        } else {
            let (name, pow) = match factor.split_once('^') {
                Some((n, e)) => (n, e.parse::<i32>().map_err(|_| format!("bad power in {factor:?}"))?),
                None => (factor, 1),
            };
            if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(format!("bad symbol {name:?}"));
            }
            p = p.mul_monomial(&Monomial::var(symbol(name), pow), &Rational::one());
        }
    }
    Ok(if neg { -p } else { p })
}

pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = n.trim().parse().map_err(|_| format!("bad rational {s:?}"))?;
    let d: BigInt = d.trim().parse().map_err(|_| format!("bad rational {s:?}"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(Rational::new(n, d))
}

fn fmt_rational(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                f.write_str(&fmt_rational(&a))?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rational(&a))?;
            }
        }
        Ok(())
    }
}

impl From<Rational> for Poly {
    fn from(c: Rational) -> Self {
        Poly::constant(c)
    }
}

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&Poly> for Poly {
    fn sub_assign(&mut self, rhs: &Poly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl Add<&Poly> for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Poly> for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        self += &rhs;
        self
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(mut self, rhs: Poly) -> Poly {
        self -= &rhs;
        self
    }
}

impl Mul<&Poly> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h() -> Poly {
        Poly::h_half_pow(1)
    }

    #[test]
    fn half_powers_multiply_to_hbar() {
        assert_eq!(&h() * &h(), Poly::h_half_pow(2));
    }

    #[test]
    fn binomial_square() {
        let tau = Poly::var(TAU0);
        let q = Poly::var(Q0);
        let a = &tau + &(&h() * &q);
        let sq = &a * &a;
        let expect = &(&(&tau * &tau) + (&(&h() * &(&tau * &q)).scale(&int(2)))) + &(&Poly::h_half_pow(2) * &(&q * &q));
        assert_eq!(sq, expect);
    }

    #[test]
    fn additive_identity() {
        let p = parse_value("3/2*T").unwrap();
        assert_eq!(&p + &Poly::zero(), p);
    }

    #[test]
    fn coefficient_lookup() {
        let p = &Poly::var(TAU0) + &(&h() * &Poly::var(Q0));
        assert_eq!(p.coeff_of(&Monomial::var(Q0, 1).mul(&Monomial::var(H_HALF, 1))), int(1));
        let ht = &Poly::h_half_pow(2) * &Poly::var(T);
        assert_eq!(ht.coeff_of(&Monomial::var(LAMBDA, 2)), int(0));
        assert_eq!(parse_value("3/2*T").unwrap().coeff_of(&Monomial::var(T, 1)), rat(3, 2));
    }

    #[test]
    fn regrade_examples() {
        let t = Poly::var(T);
        let expect = Poly::term(Monomial::var(LAMBDA, 2).mul(&Monomial::var(H_HALF, -2)), int(1));
        assert_eq!(t.regrade(), expect);
        let ht = &Poly::h_half_pow(2) * &t;
        assert_eq!(ht.regrade(), Poly::term(Monomial::var(LAMBDA, 2), int(1)));
        assert!(Poly::zero().regrade().is_zero());
    }

    #[test]
    fn display_and_parse() {
        let p = parse_value("-3/2*tau0^2*Q0").unwrap();
        assert_eq!(p.to_string(), "-3/2*tau0^2*Q0");
        let r = Poly::from_records(&p.to_records()).unwrap();
        assert_eq!(r, p);
        assert!(parse_value("1/0").is_err());
    }
}
