//! Super spectral curve data: the seven-parameter record, its validation,
//! curve files, and the formal expansions of basis differentials and
//! two-point forms at `z = 0`.

mod laurent;

pub use laurent::{FormWeight, LaurentForm, SeriesError, ThetaFactor};

use crate::ring::{lookup_symbol, parse_value, symbol, Poly, Rational};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Fermion sector: Neveu-Schwarz (untwisted) or Ramond (twisted).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sector {
    #[serde(rename = "NS")]
    Ns,
    #[serde(rename = "R")]
    R,
}

impl Sector {
    /// Twice the sector constant `f`: 1 for NS, 0 for R.
    pub fn two_f(self) -> i32 {
        match self {
            Sector::Ns => 1,
            Sector::R => 0,
        }
    }

    /// The sector constant `f` as a rational.
    pub fn f(self) -> Rational {
        Rational::new(self.two_f().into(), 2.into())
    }

    pub fn theta(self) -> ThetaFactor {
        match self {
            Sector::Ns => ThetaFactor::Ns,
            Sector::R => ThetaFactor::R,
        }
    }

    pub fn parse(s: &str) -> Option<Sector> {
        match s.to_ascii_uppercase().as_str() {
            "NS" => Some(Sector::Ns),
            "R" => Some(Sector::R),
            _ => None,
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Ns => "NS",
            Sector::R => "R",
        })
    }
}

/// One failed curve invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// The parameter at fault, e.g. `psi[0,0]`.
    pub parameter: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.parameter, self.message)
    }
}

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("curve file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad value for {parameter}: {message}")]
    Value { parameter: String, message: String },
    #[error("invalid curve:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

/// A super spectral curve with one component.
///
/// Maps have finite support; absent entries are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperCurve {
    pub sector: Sector,
    /// Pole order of the dilaton one-form.
    pub n: u32,
    tau: BTreeMap<i32, Poly>,
    phi: BTreeMap<(u32, u32), Poly>,
    psi: BTreeMap<(u32, u32), Poly>,
    d: BTreeMap<u32, Poly>,
    q: BTreeMap<i32, Poly>,
}

impl SuperCurve {
    pub fn new(sector: Sector, n: u32) -> Self {
        SuperCurve {
            sector,
            n,
            tau: BTreeMap::new(),
            phi: BTreeMap::new(),
            psi: BTreeMap::new(),
            d: BTreeMap::new(),
            q: BTreeMap::new(),
        }
    }

    pub fn with_tau(mut self, l: i32, v: Poly) -> Self {
        insert_nonzero(&mut self.tau, l, v);
        self
    }

    /// Sets `phi[k,l]`; the symmetric partner is implied.
    pub fn with_phi(mut self, k: u32, l: u32, v: Poly) -> Self {
        insert_nonzero(&mut self.phi, (k.min(l), k.max(l)), v);
        self
    }

    /// Sets `psi[k,l]` exactly as given; no partner is implied in the R sector.
    pub fn with_psi(mut self, k: u32, l: u32, v: Poly) -> Self {
        insert_nonzero(&mut self.psi, (k, l), v);
        self
    }

    pub fn with_d(mut self, k: u32, v: Poly) -> Self {
        insert_nonzero(&mut self.d, k, v);
        self
    }

    pub fn with_q(mut self, l: i32, v: Poly) -> Self {
        insert_nonzero(&mut self.q, l, v);
        self
    }

    pub fn tau(&self, l: i32) -> Poly {
        self.tau.get(&l).cloned().unwrap_or_default()
    }

    pub fn q(&self, l: i32) -> Poly {
        self.q.get(&l).cloned().unwrap_or_default()
    }

    /// `D_k`, zero outside `1..=N`.
    pub fn d(&self, k: i64) -> Poly {
        if k < 1 {
            return Poly::zero();
        }
        self.d.get(&(k as u32)).cloned().unwrap_or_default()
    }

    /// `phi_{kl}`, zero unless both indices are positive.
    pub fn phi(&self, k: i64, l: i64) -> Poly {
        if k < 1 || l < 1 {
            return Poly::zero();
        }
        let (a, b) = (k.min(l) as u32, k.max(l) as u32);
        self.phi.get(&(a, b)).cloned().unwrap_or_default()
    }

    /// `psi_{kl}`, zero for negative indices. In the NS sector a missing entry
    /// is filled by antisymmetry.
    pub fn psi(&self, k: i64, l: i64) -> Poly {
        if k < 0 || l < 0 {
            return Poly::zero();
        }
        let key = (k as u32, l as u32);
        if let Some(v) = self.psi.get(&key) {
            return v.clone();
        }
        if self.sector == Sector::Ns {
            if let Some(v) = self.psi.get(&(key.1, key.0)) {
                return -v;
            }
        }
        Poly::zero()
    }

    pub fn tau_entries(&self) -> impl Iterator<Item = (&i32, &Poly)> {
        self.tau.iter()
    }

    pub fn q_entries(&self) -> impl Iterator<Item = (&i32, &Poly)> {
        self.q.iter()
    }

    pub fn d_entries(&self) -> impl Iterator<Item = (&u32, &Poly)> {
        self.d.iter()
    }

    pub fn phi_entries(&self) -> impl Iterator<Item = (&(u32, u32), &Poly)> {
        self.phi.iter()
    }

    pub fn psi_entries(&self) -> impl Iterator<Item = (&(u32, u32), &Poly)> {
        self.psi.iter()
    }

    /// Largest index carried by any parameter map; bounds conjugation effects.
    pub fn support_width(&self) -> u32 {
        let t = self.tau.keys().chain(self.q.keys()).map(|l| l.unsigned_abs()).max().unwrap_or(0);
        let p = self.phi.keys().map(|(a, b)| *a.max(b)).max().unwrap_or(0);
        let s = self.psi.keys().map(|(a, b)| *a.max(b)).max().unwrap_or(0);
        t.max(p).max(s).max(self.n)
    }

    /// The leading dilaton coefficient `tau_{-(N-1)}`.
    pub fn leading_tau(&self) -> Poly {
        self.tau(-(self.n as i32 - 1))
    }

    /// Checks every invariant, returning all violations.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad =
            |parameter: String, message: &str| out.push(Violation { parameter, message: message.to_string() });
        if self.n < 1 {
            bad("N".into(), "N must be at least 1");
            return out;
        }
        let lowest = -(self.n as i32 - 1);
        let lead = self.leading_tau();
        if lead.is_zero() {
            bad(format!("tau[{lowest}]"), "tau_{-(N-1)} must be nonzero");
        } else if lead.unit_inverse().is_none() {
            bad(format!("tau[{lowest}]"), "tau_{-(N-1)} must be a single monomial so that it is invertible");
        }
        for l in self.tau.keys().filter(|l| **l < lowest) {
            bad(format!("tau[{l}]"), "tau_l is only defined for l >= -(N-1)");
        }
        for l in self.q.keys().filter(|l| **l < lowest) {
            bad(format!("Q[{l}]"), "Q_l is only defined for l >= -(N-1)");
        }
        for k in self.d.keys().filter(|k| **k < 1 || **k > self.n) {
            bad(format!("D[{k}]"), "D_k is only defined for 1 <= k <= N");
        }
        for (k, l) in self.phi.keys().filter(|(k, _)| *k < 1) {
            bad(format!("phi[{k},{l}]"), "phi indices must be positive");
        }
        match self.sector {
            Sector::Ns => {
                for ((k, l), v) in &self.psi {
                    if k == l {
                        bad(format!("psi[{k},{l}]"), "NS psi must be antisymmetric (zero diagonal)");
                    } else if let Some(w) = self.psi.get(&(*l, *k)) {
                        if (v + w) != Poly::zero() && k < l {
                            bad(format!("psi[{k},{l}]"), "NS psi must be antisymmetric");
                        }
                    }
                }
            }
            Sector::R => {
                if !self.psi(0, 0).is_zero() {
                    bad("psi[0,0]".into(), "psi_00^R must vanish");
                }
                let m = self.psi.keys().map(|(a, b)| *a.max(b)).max().unwrap_or(0) as i64;
                for k in 0..=m {
                    for l in k..=m {
                        let rel = &(&self.psi(k, l) + &self.psi(l, k)) + &(&self.psi(0, k) * &self.psi(0, l));
                        if !rel.is_zero() && !(k == 0 && l == 0) {
                            bad(format!("psi[{k},{l}]"), "R psi must satisfy psi_kl + psi_lk + psi_0k psi_0l = 0");
                        }
                    }
                }
            }
        }
        out
    }

    /// Validates, turning violations into an error.
    pub fn validated(self) -> Result<Self, CurveError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(CurveError::Invalid(v))
        }
    }

    /// Reads a curve file; the result is validated.
    pub fn from_json(text: &str) -> Result<SuperCurve, CurveError> {
        let file: CurveFile = serde_json::from_str(text)?;
        for s in &file.symbols {
            symbol(s);
        }
        let value = |parameter: String, s: &str| -> Result<Poly, CurveError> {
            let p = parse_value(s).map_err(|message| CurveError::Value { parameter: parameter.clone(), message })?;
            for (m, _) in p.terms() {
                for (i, e) in m.exponents().iter().enumerate() {
                    if *e != 0 && i >= 5 && !file.symbols.iter().any(|s| lookup_symbol(s) == Some(i)) {
                        return Err(CurveError::Value {
                            parameter,
                            message: format!("undeclared symbol {}", crate::ring::symbol_name(i)),
                        });
                    }
                }
            }
            Ok(p)
        };
        let sector = Sector::parse(&file.sector).ok_or_else(|| CurveError::Value {
            parameter: "sector".into(),
            message: format!("expected NS or R, got {:?}", file.sector),
        })?;
        let mut c = SuperCurve::new(sector, file.n);
        for (l, v) in &file.tau {
            c.tau.insert(*l, value(format!("tau[{l}]"), v)?);
        }
        for (k, l, v) in &file.phi {
            let p = value(format!("phi[{k},{l}]"), v)?;
            let key = (*k.min(l), *k.max(l));
            if let Some(old) = c.phi.get(&key) {
                if old != &p {
                    return Err(CurveError::Invalid(vec![Violation {
                        parameter: format!("phi[{k},{l}]"),
                        message: "phi must be symmetric".into(),
                    }]));
                }
            }
            c.phi.insert(key, p);
        }
        for (k, l, v) in &file.psi {
            c.psi.insert((*k, *l), value(format!("psi[{k},{l}]"), v)?);
        }
        for (k, v) in &file.d {
            c.d.insert(*k, value(format!("D[{k}]"), v)?);
        }
        for (l, v) in &file.q {
            c.q.insert(*l, value(format!("Q[{l}]"), v)?);
        }
        for map in [&mut c.tau, &mut c.q] {
            map.retain(|_, v| !v.is_zero());
        }
        c.phi.retain(|_, v| !v.is_zero());
        c.psi.retain(|_, v| !v.is_zero());
        c.d.retain(|_, v| !v.is_zero());
        c.validated()
    }

    /// Serializes to the curve file format, entries in canonical order.
    pub fn to_json(&self) -> String {
        let mut symbols: Vec<String> = Vec::new();
        let all = self
            .tau
            .values()
            .chain(self.q.values())
            .chain(self.phi.values())
            .chain(self.psi.values())
            .chain(self.d.values());
        for p in all {
            for (m, _) in p.terms() {
                for (i, e) in m.exponents().iter().enumerate() {
                    let name = crate::ring::symbol_name(i);
                    if *e != 0 && i >= 5 && !symbols.contains(&name) {
                        symbols.push(name);
                    }
                }
            }
        }
        let file = CurveFile {
            sector: self.sector.to_string(),
            n: self.n,
            symbols,
            tau: self.tau.iter().map(|(l, v)| (*l, v.to_string())).collect(),
            phi: self.phi.iter().map(|((k, l), v)| (*k, *l, v.to_string())).collect(),
            psi: self.psi.iter().map(|((k, l), v)| (*k, *l, v.to_string())).collect(),
            d: self.d.iter().map(|(k, v)| (*k, v.to_string())).collect(),
            q: self.q.iter().map(|(l, v)| (*l, v.to_string())).collect(),
        };
        serde_json::to_string_pretty(&file).expect("curve serialization cannot fail")
    }

    /// Expansion of a basis differential; exact (all basis forms are finite).
    pub fn basis_series(&self, b: Basis) -> LaurentForm {
        match b {
            Basis::Dxi(l) if l >= 0 => LaurentForm::monomial(l - 1, Poly::one(), FormWeight::ONE_FORM),
            Basis::Dxi(l) => {
                let l = -l;
                let inv = Rational::new(1.into(), l.into());
                let mut terms = vec![(-l - 1, Poly::one())];
                for ((a, b), v) in &self.phi {
                    if *a as i32 == l {
                        terms.push((*b as i32 - 1, v.scale(&inv)));
                    }
                    if *b as i32 == l && a != b {
                        terms.push((*a as i32 - 1, v.scale(&inv)));
                    }
                }
                LaurentForm::exact(terms, FormWeight::ONE_FORM)
            }
            Basis::EtaPos(k) => {
                let w = FormWeight::theta(self.sector.theta());
                LaurentForm::monomial(k as i32 - 1 + self.sector.two_f(), Poly::one(), w)
            }
            Basis::EtaNeg(j) => {
                let w = FormWeight::theta(self.sector.theta());
                let shift = 1 - self.sector.two_f();
                let mut terms = vec![(-(j as i32) - 1, Poly::one())];
                let max = self.psi.keys().map(|(a, b)| *a.max(b)).max().unwrap_or(0);
                for k in 0..=max {
                    terms.push((k as i32 - shift, self.psi(j as i64, k as i64)));
                }
                LaurentForm::exact(terms, w)
            }
        }
    }

    /// `omega_{0,1|0} = sum_l tau_l dxi_l`.
    pub fn omega01(&self) -> LaurentForm {
        self.combine(self.tau.iter().map(|(l, v)| (Basis::Dxi(*l), v.clone())), FormWeight::ONE_FORM)
    }

    /// `omega_{1/2,1|0} = sum_l Q_l dxi_l`.
    pub fn omega_half(&self) -> LaurentForm {
        self.combine(self.q.iter().map(|(l, v)| (Basis::Dxi(*l), v.clone())), FormWeight::ONE_FORM)
    }

    /// `omega_{1,1|0} = sum_k D_k dxi_{-k}`.
    pub fn omega11(&self) -> LaurentForm {
        self.combine(self.d.iter().map(|(k, v)| (Basis::Dxi(-(*k as i32)), v.clone())), FormWeight::ONE_FORM)
    }

    fn combine<I: Iterator<Item = (Basis, Poly)>>(&self, it: I, w: FormWeight) -> LaurentForm {
        let mut out = LaurentForm::zero(w);
        for (b, v) in it {
            out = out.add(&self.basis_series(b).scale(&v)).expect("same weight");
        }
        out
    }

    /// First `order` terms of the expansion of a two-point form in the given domain.
    ///
    /// Fermionic forms are written with the odd factors ordered first-variable
    /// first, so the coefficient function is antisymmetric under the swap.
    pub fn two_point_series(&self, kind: PairKind, domain: Domain, order: u32) -> Result<BiLaurent, CurveError> {
        let mut out = BiLaurent::default();
        match kind {
            PairKind::B => {
                for l in 1..=order as i32 {
                    let neg = self.basis_series(Basis::Dxi(-l));
                    let pos = self.basis_series(Basis::Dxi(l));
                    out.add_product(&neg, &pos, &Poly::int(l as i64), domain == Domain::Inner);
                }
            }
            PairKind::Ns | PairKind::R => {
                let sector = if kind == PairKind::Ns { Sector::Ns } else { Sector::R };
                if sector != self.sector {
                    return Err(CurveError::Value {
                        parameter: "kind".into(),
                        message: format!("{kind:?} two-point form requested on a {} curve", self.sector),
                    });
                }
                let first = if sector == Sector::R { 1 } else { 0 };
                // |z1| < |z2|: sum eta_{l+f}(z1) eta_{-l-f}(z2), plus 1/2 eta_0 eta_0 for R
                let mut inner = BiLaurent::default();
                for l in first..first + order {
                    let pos = self.basis_series(Basis::EtaPos(l));
                    let neg = self.basis_series(Basis::EtaNeg(l));
                    inner.add_product(&pos, &neg, &Poly::one(), false);
                }
                if sector == Sector::R {
                    let e0 = self.basis_series(Basis::EtaNeg(0));
                    inner.add_product(&e0, &e0, &Poly::rat(1, 2), false);
                }
                out = match domain {
                    Domain::Inner => inner,
                    Domain::Outer => inner.swapped().scaled(&Poly::int(-1)),
                };
            }
        }
        Ok(out)
    }

    /// Residue pairing of two one-variable forms.
    pub fn pairing(&self, kind: PairKind, a: &LaurentForm, b: &LaurentForm) -> Result<Poly, SeriesError> {
        match kind {
            PairKind::B => a.primitive()?.mul(b)?.residue(),
            PairKind::Ns | PairKind::R => a.mul(b)?.residue(),
        }
    }
}

fn insert_nonzero<K: Ord>(map: &mut BTreeMap<K, Poly>, k: K, v: Poly) {
    if v.is_zero() {
        map.remove(&k);
    } else {
        map.insert(k, v);
    }
}

/// Basis differentials: `dxi_l` (any integer `l`), `eta_{k+f}` (positive
/// fermionic basis, `k >= 0` for NS and `k >= 1` for R) and `eta_{-j-f}`
/// (`j >= 0`; for R `j = 0` is the zero mode `eta_0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Dxi(i32),
    EtaPos(u32),
    EtaNeg(u32),
}

/// Which residue pairing or two-point form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairKind {
    B,
    Ns,
    R,
}

/// Expansion domain for two-point forms: `Outer` is `|z1| > |z2|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Outer,
    Inner,
}

/// A truncated double expansion `sum c_{ab} z1^a z2^b`; the form weight is
/// implied by the two-point kind.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BiLaurent {
    pub coeffs: BTreeMap<(i32, i32), Poly>,
}

impl BiLaurent {
    fn add_product(&mut self, f1: &LaurentForm, f2: &LaurentForm, s: &Poly, swap: bool) {
        for (a, ca) in f1.terms() {
            for (b, cb) in f2.terms() {
                let key = if swap { (*b, *a) } else { (*a, *b) };
                let c = &(ca * cb) * s;
                let slot = self.coeffs.entry(key).or_default();
                *slot += &c;
                if slot.is_zero() {
                    self.coeffs.remove(&key);
                }
            }
        }
    }

    pub fn coeff(&self, a: i32, b: i32) -> Poly {
        self.coeffs.get(&(a, b)).cloned().unwrap_or_default()
    }

    /// Exchanges the two variables.
    pub fn swapped(&self) -> BiLaurent {
        BiLaurent { coeffs: self.coeffs.iter().map(|((a, b), c)| ((*b, *a), c.clone())).collect() }
    }

    pub fn scaled(&self, s: &Poly) -> BiLaurent {
        BiLaurent { coeffs: self.coeffs.iter().map(|(k, c)| (*k, c * s)).collect() }
    }
}

#[derive(Serialize, Deserialize)]
struct CurveFile {
    sector: String,
    #[serde(rename = "N")]
    n: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    symbols: Vec<String>,
    #[serde(default)]
    tau: Vec<(i32, String)>,
    #[serde(default)]
    phi: Vec<(u32, u32, String)>,
    #[serde(default)]
    psi: Vec<(u32, u32, String)>,
    #[serde(default, rename = "D")]
    d: Vec<(u32, String)>,
    #[serde(default, rename = "Q")]
    q: Vec<(i32, String)>,
}
