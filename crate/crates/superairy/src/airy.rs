//! The algebraic recursion. Solves the constraints `H_i Z = F_i Z = 0` for
//! the free-energy coefficients `F_{g,n|2m}(I|J)` level by level in
//! `chi = 2g + n + 2m`, and checks a table against the operators directly.

use crate::curve::SuperCurve;
use crate::fock::{
    apply_atom, build_constraint, multiset_automorphisms, sort_grassmann, Atom, ConstraintKind, FockElement,
    FockMonomial, OperatorExpr,
};
use crate::par;
use crate::ring::{Poly, Rational, TermRecord};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AiryError {
    #[error("chi_max must be at least 3, got {0}")]
    ChiTooSmall(u32),
    #[error("index bound insufficient: {cell} is nonzero but exceeds the bound {bound}")]
    IndexBound { bound: u32, cell: String },
    #[error("overdetermined constraints disagree on {0}")]
    Inconsistent(String),
    #[error("leading coefficient tau_(1-N) is not invertible")]
    SingularLeading,
}

/// A coefficient cell `F_{g,n|2m}(I|J)` in canonical order: `bos` sorted
/// ascending and `fer` strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub two_g: u32,
    pub bos: Vec<u32>,
    pub fer: Vec<u32>,
}

impl Cell {
    /// Canonicalizes arbitrary index lists. Returns the cell and the sign of
    /// the fermionic reordering, or `None` if a fermionic index repeats.
    pub fn canonical(two_g: u32, bos: &[u32], fer: &[u32]) -> Option<(Cell, i32)> {
        let mut b = bos.to_vec();
        b.sort_unstable();
        let (f, sign) = sort_grassmann(fer.to_vec())?;
        Some((Cell { two_g, bos: b, fer: f }, sign))
    }

    /// `2g + n + 2m`.
    pub fn chi(&self) -> u32 {
        self.two_g + self.bos.len() as u32 + self.fer.len() as u32
    }

    pub fn max_index(&self) -> u32 {
        self.bos.iter().chain(&self.fer).copied().max().unwrap_or(0)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[u32]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        let g = if self.two_g.is_multiple_of(2) { format!("{}", self.two_g / 2) } else { format!("{}/2", self.two_g) };
        write!(f, "F[g={g}]({}|{})", join(&self.bos), join(&self.fer))
    }
}

/// One exported table row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRecord {
    pub two_g: u32,
    pub bos_indices: Vec<u32>,
    pub fer_indices: Vec<u32>,
    pub poly_terms: Vec<TermRecord>,
}

/// Nonzero coefficients `F_{g,n|2m}(I|J)` keyed by canonical cell.
/// Absent cells are zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoeffTable {
    entries: BTreeMap<Cell, Poly>,
    pub chi_max: u32,
    pub index_bound: u32,
}

impl CoeffTable {
    pub fn new(chi_max: u32, index_bound: u32) -> Self {
        CoeffTable { entries: BTreeMap::new(), chi_max, index_bound }
    }

    /// Stores a value at a canonical cell; zero removes it.
    pub fn insert(&mut self, cell: Cell, value: Poly) {
        if value.is_zero() {
            self.entries.remove(&cell);
        } else {
            self.entries.insert(cell, value);
        }
    }

    /// Value at arbitrary index order, with the fermionic sign applied.
    pub fn get(&self, two_g: u32, bos: &[u32], fer: &[u32]) -> Poly {
        match Cell::canonical(two_g, bos, fer) {
            None => Poly::zero(),
            Some((cell, sign)) => {
                let v = self.get_cell(&cell);
                if sign < 0 {
                    -v
                } else {
                    v
                }
            }
        }
    }

    pub fn get_cell(&self, cell: &Cell) -> Poly {
        self.entries.get(cell).cloned().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Cell, &Poly)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries with `chi` at most `chi_max`.
    pub fn restricted(&self, chi_max: u32) -> CoeffTable {
        let mut out = CoeffTable::new(chi_max.min(self.chi_max), self.index_bound);
        for (c, v) in self.entries.iter().filter(|(c, _)| c.chi() <= chi_max) {
            out.entries.insert(c.clone(), v.clone());
        }
        out
    }

    /// Cells on which two tables differ (union of supports).
    pub fn differences(&self, other: &CoeffTable) -> Vec<Cell> {
        let keys: BTreeSet<&Cell> = self.entries.keys().chain(other.entries.keys()).collect();
        keys.into_iter().filter(|c| self.get_cell(c) != other.get_cell(c)).cloned().collect()
    }

    /// The free energy `sum hbar^(g-1) F(I|J) x^I theta^J / aut(I)`.
    pub fn free_energy(&self) -> FockElement {
        let mut out = FockElement::zero();
        for (cell, v) in &self.entries {
            out.add_assign(&cell_term(cell, v));
        }
        out
    }

    /// Rows in canonical order.
    pub fn to_records(&self) -> Vec<CellRecord> {
        self.entries
            .iter()
            .map(|(c, v)| CellRecord {
                two_g: c.two_g,
                bos_indices: c.bos.clone(),
                fer_indices: c.fer.clone(),
                poly_terms: v.to_records(),
            })
            .collect()
    }
}

/// `hbar^(g-1) v x^I theta^J / aut(I)` for one cell.
pub fn cell_term(cell: &Cell, v: &Poly) -> FockElement {
    let m = FockMonomial::from_indices(&cell.bos, &cell.fer);
    let c = (&Poly::h_half_pow(cell.two_g as i32 - 2) * v).scale(&multiset_automorphisms(&cell.bos).recip());
    FockElement::monomial(m, c)
}

/// The coefficient families of the constraint recursion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientKind {
    /// `C_k`: the linear (triangular) part, shared by `H_i` and `F_i`.
    Ck,
    /// `C'_k`: the `Q`-shifted linear part.
    Cpk,
    /// `C_i^{j,k|}`: two bosonic annihilators in `H_i`.
    Cbb,
    /// `C_i^{|j,k}`: two fermionic annihilators in `H_i`.
    Cff,
    /// `C_i^{j|k}`: a bosonic and a fermionic annihilator in `F_i`.
    Cbf,
}

fn delta(a: i64, b: i64) -> Poly {
    if a == b {
        Poly::one()
    } else {
        Poly::zero()
    }
}

/// `phi_{j,k} / j`, zero when `j <= 0` or `k <= 0`.
fn phi_over(curve: &SuperCurve, j: i64, k: i64, by: i64) -> Poly {
    if j <= 0 || k <= 0 || by == 0 {
        return Poly::zero();
    }
    curve.phi(j, k).scale(&Rational::new(1.into(), by.into()))
}

/// Exact value of one recursion coefficient. `indices` is `[k]` for `Ck` and
/// `Cpk`, and `[i, j, k]` for the others.
///
/// Panics if `indices` has the wrong length.
pub fn coefficient_c(curve: &SuperCurve, kind: CoefficientKind, indices: &[i64]) -> Poly {
    let n = curve.n as i64;
    let f2 = curve.sector.two_f() as i64;
    match kind {
        CoefficientKind::Ck | CoefficientKind::Cpk => {
            assert_eq!(indices.len(), 1, "C_k takes one index");
            let k = indices[0];
            let field = |l: i64| if kind == CoefficientKind::Ck { curve.tau(l as i32) } else { curve.q(l as i32) };
            let mut out = field(k - n + 1);
            for p in 1..n {
                out += &(&field(-p) * &phi_over(curve, p, k - n + 1, p));
            }
            out
        }
        _ => {
            assert_eq!(indices.len(), 3, "C_i^{{j,k}} takes three indices");
            let (i, j, k) = (indices[0], indices[1], indices[2]);
            let s = n + i - 1;
            match kind {
                CoefficientKind::Cbb => {
                    &(&delta(j + k, s) + &phi_over(curve, j, k - s, j)) + &phi_over(curve, j - s, k, k)
                }
                CoefficientKind::Cff => {
                    let mut out = delta(j + k + f2, s).scale(&Rational::from_integer((k - j).into()));
                    out += &curve.psi(j, k - s).scale(&Rational::from_integer((2 * k + f2 - s).into()));
                    out -= &curve.psi(k, j - s).scale(&Rational::from_integer((2 * j + f2 - s).into()));
                    out.scale(&Rational::new(1.into(), 2.into()))
                }
                _ => &(&delta(j + k, s) + &phi_over(curve, j, k - s, j)) + &curve.psi(k, j - s - f2),
            }
        }
    }
}

/// Diagnostics of the overdetermined system.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveReport {
    /// Redundant determinations compared against the stored value.
    pub checks: usize,
    /// Cells fixed by both the bosonic and the fermionic constraints.
    pub cross_checked: usize,
    /// Cells (or forbidden repeated-fermion slots) where determinations disagree.
    pub mismatches: Vec<String>,
}

/// How a cell value was obtained: from `H_i` with a bosonic slot `b`, or
/// from `F_i` with a fermionic slot `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Route {
    Bos(u32),
    Fer(u32),
}

/// The `C_k` with `k >= 0` up to the last nonzero one.
pub fn linear_coefficients(curve: &SuperCurve) -> Vec<Poly> {
    let top = curve.n as i64 + 2 * curve.support_width() as i64 + 2;
    let mut c: Vec<Poly> = (0..=top).map(|k| coefficient_c(curve, CoefficientKind::Ck, &[k])).collect();
    while c.len() > 1 && c.last().is_some_and(Poly::is_zero) {
        c.pop();
    }
    c
}

/// `[e^{-F} op e^{F} 1]` at one degree, given the first derivatives of `F`.
/// Every word carries at most two annihilators.
fn pull(op: &OperatorExpr, first: &BTreeMap<Atom, FockElement>, degree: i32) -> FockElement {
    let mut out = FockElement::zero();
    let zero = FockElement::zero();
    let d = |a: &Atom| first.get(a).unwrap_or(&zero);
    for (word, c) in op.terms() {
        let split = word.iter().position(|a| a.is_annihilator()).unwrap_or(word.len());
        let (cre, ann) = word.split_at(split);
        let t = match ann {
            [] => FockElement::one(),
            [a] => d(a).clone(),
            [a, b] => {
                let mut t = apply_atom(*a, d(b));
                t.add_assign(&d(a).mul_truncated(d(b), Some(degree)));
                t
            }
            _ => panic!("constraint words are at most quadratic in annihilators"),
        };
        if t.is_zero() {
            continue;
        }
        let bos: Vec<u32> = cre.iter().filter(|a| matches!(a, Atom::X(_))).map(|a| a.index()).collect();
        let fer: Vec<u32> = cre.iter().filter(|a| matches!(a, Atom::Theta(_))).map(|a| a.index()).collect();
        let cm = FockElement::from_indices(&bos, &fer, c.clone());
        out.add_assign(&cm.mul_truncated(&t, Some(degree)).component(degree));
    }
    out
}

/// Spectator key: `(2g, bosonic spectators, fermionic spectators)`.
type Spectator = (u32, Vec<u32>, Vec<u32>);

/// Groups residual coefficients by spectator and genus: `key -> (i -> r_i)`.
fn collect_systems(residuals: &[(u32, FockElement)]) -> BTreeMap<Spectator, BTreeMap<u32, Poly>> {
    let mut out: BTreeMap<Spectator, BTreeMap<u32, Poly>> = BTreeMap::new();
    for (i, r) in residuals {
        for (m, coeff) in r.terms() {
            for (e, p) in coeff.h_half_split() {
                assert!(e >= 0, "negative hbar power in a residual");
                let p = &p * &Poly::h_half_pow(-e);
                out.entry((e as u32, m.bos.clone(), m.fer.clone())).or_default().insert(*i, p);
            }
        }
    }
    out
}

/// Solves `sum_k C_k u_{i+k} = -aut * r_i` for `i >= 1` by back substitution,
/// with `u_b = 0` past the last nonzero `r_i`.
fn back_substitute(c: &[Poly], c0_inv: &Poly, rhs: &BTreeMap<u32, Poly>, aut: &Rational) -> BTreeMap<u32, Poly> {
    let top = rhs.keys().next_back().copied().unwrap_or(0);
    let mut u: BTreeMap<u32, Poly> = BTreeMap::new();
    let minus_aut = -aut.clone();
    for i in (1..=top).rev() {
        let mut acc = rhs.get(&i).map(|r| r.scale(&minus_aut)).unwrap_or_default();
        for (k, ck) in c.iter().enumerate().skip(1) {
            if let Some(v) = u.get(&(i + k as u32)) {
                acc -= &(ck * v);
            }
        }
        u.insert(i, &acc * c0_inv);
    }
    u
}

/// Solves the constraints through `chi_max`. With `index_bound = Some(b)`,
/// any nonzero cell with an index above `b` is an error.
pub fn solve(curve: &SuperCurve, chi_max: u32, index_bound: Option<u32>) -> Result<CoeffTable, AiryError> {
    let (table, report) = solve_with_report(curve, chi_max, index_bound)?;
    match report.mismatches.first() {
        Some(m) => Err(AiryError::Inconsistent(m.clone())),
        None => Ok(table),
    }
}

/// As [`solve`], also returning the overdetermination report instead of
/// failing on a mismatch.
pub fn solve_with_report(
    curve: &SuperCurve,
    chi_max: u32,
    index_bound: Option<u32>,
) -> Result<(CoeffTable, SolveReport), AiryError> {
    if chi_max < 3 {
        return Err(AiryError::ChiTooSmall(chi_max));
    }
    let c = linear_coefficients(curve);
    let c0_inv = c[0].unit_inverse().ok_or(AiryError::SingularLeading)?;
    let width = curve.support_width();
    let mut table = CoeffTable::new(chi_max, index_bound.unwrap_or(0));
    let mut report = SolveReport::default();
    let mut free = FockElement::zero();
    for chi in 3..=chi_max {
        let degree = chi as i32 - 1;
        let (kb, kf) = free.max_index();
        let k = kb.max(kf);
        let i_max = 2 * k + 2 * width + 6;
        let atoms: Vec<Atom> = (1..=k).map(Atom::Dx).chain((0..=k).map(Atom::Dtheta)).collect();
        let firsts = par::map(&atoms, |a| apply_atom(*a, &free));
        let first: BTreeMap<Atom, FockElement> = atoms.into_iter().zip(firsts).filter(|(_, v)| !v.is_zero()).collect();
        let jobs: Vec<(ConstraintKind, u32)> = [ConstraintKind::H, ConstraintKind::F]
            .into_iter()
            .flat_map(|kind| (1..=i_max).map(move |i| (kind, i)))
            .collect();
        let residuals = par::map(&jobs, |(kind, i)| {
            let op = build_constraint(curve, *i, *kind, k);
            (*kind, *i, pull(&op, &first, degree))
        });
        let split = |kind: ConstraintKind| -> Vec<(u32, FockElement)> {
            residuals.iter().filter(|r| r.0 == kind).map(|r| (r.1, r.2.clone())).collect()
        };
        let bos_systems: Vec<_> = collect_systems(&split(ConstraintKind::H)).into_iter().collect();
        let fer_systems: Vec<_> = collect_systems(&split(ConstraintKind::F)).into_iter().collect();
        let bos_sol =
            par::map(&bos_systems, |((_, b, _), rhs)| back_substitute(&c, &c0_inv, rhs, &multiset_automorphisms(b)));
        let fer_sol =
            par::map(&fer_systems, |((_, b, _), rhs)| back_substitute(&c, &c0_inv, rhs, &multiset_automorphisms(b)));

        let mut found: BTreeMap<Cell, Vec<(Route, Poly)>> = BTreeMap::new();
        for (((two_g, spec_b, spec_f), _), u) in bos_systems.iter().zip(&bos_sol) {
            for (b, v) in u {
                let mut bos = spec_b.clone();
                bos.push(*b);
                let (cell, _) = Cell::canonical(*two_g, &bos, spec_f).expect("spectator fermions are distinct");
                found.entry(cell).or_default().push((Route::Bos(*b), v.clone()));
            }
        }
        for (((two_g, spec_b, spec_f), _), u) in fer_systems.iter().zip(&fer_sol) {
            for (l, v) in u {
                let mut fer = vec![*l];
                fer.extend_from_slice(spec_f);
                match Cell::canonical(*two_g, spec_b, &fer) {
                    Some((cell, sign)) => {
                        let v = if sign < 0 { -v.clone() } else { v.clone() };
                        found.entry(cell).or_default().push((Route::Fer(*l), v));
                    }
                    None if !v.is_zero() => report.mismatches.push(format!(
                        "repeated fermionic slot {l} with spectators ({spec_b:?}|{spec_f:?}) at 2g={two_g}"
                    )),
                    None => {}
                }
            }
        }
        for (cell, mut routes) in found {
            if routes.iter().all(|(_, v)| v.is_zero()) {
                continue;
            }
            debug_assert_eq!(cell.chi(), chi);
            routes.sort_by_key(|a| a.0);
            let mut expected: Vec<Route> = cell.bos.iter().map(|b| Route::Bos(*b)).collect();
            // theta_0 never leads an F_i equation, so slot 0 is not a route
            expected.extend(cell.fer.iter().filter(|l| **l > 0).map(|l| Route::Fer(*l)));
            expected.dedup();
            let value = routes[0].1.clone();
            for r in &expected {
                let other = routes.iter().find(|(route, _)| route == r).map(|(_, v)| v.clone()).unwrap_or_default();
                if other != value {
                    report.mismatches.push(format!("{cell} via {r:?}"));
                }
            }
            report.checks += expected.len().saturating_sub(1);
            let has_b = expected.iter().any(|r| matches!(r, Route::Bos(_)));
            let has_f = expected.iter().any(|r| matches!(r, Route::Fer(_)));
            if has_b && has_f {
                report.cross_checked += 1;
            }
            if let Some(bound) = index_bound {
                if cell.max_index() > bound {
                    return Err(AiryError::IndexBound { bound, cell: cell.to_string() });
                }
            }
            free.add_assign(&cell_term(&cell, &value));
            table.insert(cell, value);
        }
    }
    if index_bound.is_none() {
        table.index_bound = table.entries().map(|(c, _)| c.max_index()).max().unwrap_or(0);
    }
    Ok((table, report))
}

/// Residual status of one constraint operator on `Z = exp(F)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintResidual {
    pub kind: ConstraintKind,
    pub i: u32,
    /// Lowest degree with a nonzero component, if any within range.
    pub lowest_nonzero: Option<i32>,
}

/// Outcome of [`verify_constraints`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyReport {
    pub residuals: Vec<ConstraintResidual>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| r.lowest_nonzero.is_none())
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintResidual> {
        self.residuals.iter().filter(|r| r.lowest_nonzero.is_some())
    }
}

/// Applies every `H_i`, `F_i` that can act nontrivially to `Z = exp(F)`
/// built from `table`, and checks that all components of degree at most
/// `chi_max - 1` vanish.
pub fn verify_constraints(curve: &SuperCurve, table: &CoeffTable, chi_max: u32) -> VerifyReport {
    let free = table.restricted(chi_max).free_energy();
    let z = free.exp_truncated(chi_max as i32 - 2);
    let (kb, kf) = z.max_index();
    let k = kb.max(kf);
    let i_max = 2 * k + 2 * curve.support_width() + 6;
    let jobs: Vec<(ConstraintKind, u32)> = [ConstraintKind::H, ConstraintKind::F]
        .into_iter()
        .flat_map(|kind| (1..=i_max).map(move |i| (kind, i)))
        .collect();
    let residuals = par::map(&jobs, |(kind, i)| {
        let op = build_constraint(curve, *i, *kind, k);
        let hz = op.apply(&z, Some(chi_max as i32 - 1));
        let lowest_nonzero = hz.degrees().into_iter().find(|d| *d < chi_max as i32);
        ConstraintResidual { kind: *kind, i: *i, lowest_nonzero }
    });
    VerifyReport { residuals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Sector;
    use crate::ring::{Q0, T, TAU0};

    fn gaiotto(sector: Sector) -> SuperCurve {
        let d =
            if sector == Sector::Ns { Poly::var(T) } else { Poly::var(T).scale(&Rational::new(1.into(), 2.into())) };
        SuperCurve::new(sector, 1).with_tau(0, Poly::var(TAU0)).with_q(0, Poly::var(Q0)).with_d(1, d)
    }

    #[test]
    fn gaiotto_smoke() {
        for sector in [Sector::Ns, Sector::R] {
            let curve = gaiotto(sector);
            let (table, report) = solve_with_report(&curve, 5, None).unwrap();
            assert!(report.mismatches.is_empty(), "{report:?}");
            assert_eq!(table.get(2, &[1], &[]), curve.d(1));
            let v = verify_constraints(&curve, &table, 5);
            assert!(v.passed(), "{:?}", v.failures().collect::<Vec<_>>());
        }
    }
}
