//! The residue recursion. Computes the coefficients of `omega_{g,n|2m}` in the
//! polarized basis by taking residues of recursion kernels against the
//! quadratic loop-equation terms, one level `chi = 2g + n + 2m` at a time.
//!
//! Every differential is kept as a Laurent expansion in the local coordinate
//! `z` with spectator variables contracted to basis coefficients. All basis
//! forms are finite Laurent polynomials, so the only truncated series is
//! `1/omega_{0,1|0}`, whose precision is tracked by [`LaurentForm`].
//!
//! Normalizations follow the free-field current: the bosonic quadratic term
//! carries `1/2` on every ordered split, so `omega_{0,1|0} omega_{g,n+1|2m}`
//! occurs exactly once, as does the boundary term in the fermionic one.

use crate::airy::{AiryError, Cell, CoeffTable};
use crate::curve::{Basis, FormWeight, LaurentForm, Sector, SeriesError, SuperCurve, ThetaFactor};
use crate::fock::sort_grassmann;
use crate::par;
use crate::ring::{Poly, Rational};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrError {
    #[error("series error: {0}")]
    Series(#[from] SeriesError),
    #[error("chi_max must be at least 3, got {0}")]
    ChiTooSmall(u32),
    #[error("curve: {0}")]
    Curve(#[from] AiryError),
}

/// Which recursion kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `K^BB`, producing bosonic slots.
    BB,
    /// `K^BF`, producing fermionic slots.
    BF,
}

/// Which quadratic loop-equation term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QKind {
    BB,
    FF,
    BF,
}

/// Residue at `z = 0` of a one-form.
pub fn residue(form: &LaurentForm) -> Result<Poly, SeriesError> {
    form.residue()
}

/// `D_z`: differentiates the coefficient function and adds a `dz`.
fn d_z(form: &LaurentForm) -> LaurentForm {
    let d = form.derivative();
    let w = FormWeight { dz: form.weight.dz + 1, theta: form.weight.theta };
    d.with_weight(w)
}

/// Divides a quadratic differential by `dz` so that its residue can be taken.
fn per_dz(form: &LaurentForm) -> Result<LaurentForm, SeriesError> {
    let w = form.weight;
    if w.dz != 2 || w.theta != ThetaFactor::None {
        return Err(SeriesError::NotAOneForm);
    }
    Ok(form.with_weight(FormWeight::ONE_FORM))
}

fn rational(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Curve data shared by every residue at one level.
struct Context<'a> {
    curve: &'a SuperCurve,
    /// `tau_{1-N}`-led coefficient function of `omega_{0,1|0}`.
    w_inv: LaurentForm,
    omega01: LaurentForm,
    omega_half: LaurentForm,
    q0: Poly,
    /// Largest basis index that can carry a nonzero table entry.
    max_index: u32,
    xi: Vec<LaurentForm>,
    eta_neg: Vec<LaurentForm>,
}

impl<'a> Context<'a> {
    fn new(curve: &'a SuperCurve, max_index: u32) -> Result<Self, StrError> {
        let omega01 = curve.omega01();
        // Poles of the quadratic terms are bounded by 2 max_index + 3.
        let order = 2 * max_index as i32 + 8;
        let w_inv = omega01.with_weight(FormWeight::FUNCTION).inverse(order)?;
        let xi = (0..=max_index + 1).map(|a| curve.basis_series(Basis::Dxi(-(a as i32)))).collect();
        let eta_neg = (0..=max_index + 1).map(|j| curve.basis_series(Basis::EtaNeg(j))).collect();
        Ok(Context { curve, w_inv, omega_half: curve.omega_half(), omega01, q0: curve.q(0), max_index, xi, eta_neg })
    }

    fn sector(&self) -> Sector {
        self.curve.sector
    }

    fn theta_weight(&self) -> FormWeight {
        FormWeight::theta(self.sector().theta())
    }

    fn one_form_theta(&self) -> FormWeight {
        FormWeight { dz: 1, theta: self.sector().theta() }
    }

    /// `dxi_{-a}(z)`, `a >= 1`.
    fn xi(&self, a: u32) -> &LaurentForm {
        &self.xi[a as usize]
    }

    /// `eta_{-j-f}(z)`.
    fn eta_neg(&self, j: u32) -> &LaurentForm {
        &self.eta_neg[j as usize]
    }

    /// Spectator factor of `omega^F_{0,0|2}(|z, u_c)` for `u_c` in slot `c`.
    fn fermion_creator(&self, c: u32) -> Option<LaurentForm> {
        match self.sector() {
            Sector::Ns => Some(self.curve.basis_series(Basis::EtaPos(c))),
            Sector::R if c == 0 => Some(self.eta_neg(0).scale(&Poly::rat(1, 2))),
            Sector::R => Some(self.curve.basis_series(Basis::EtaPos(c))),
        }
    }

    /// `omega_{g,n+1|2m}(z, I|J)` contracted on the spectators, as a one-form in
    /// `z`. Includes curve data for `g < 1`.
    fn bos_factor(&self, table: &CoeffTable, two_g: u32, bos: &[u32], fer: &[u32]) -> Option<LaurentForm> {
        match two_g {
            0 => match (bos, fer) {
                ([], []) => Some(self.omega01.clone()),
                ([c], []) => Some(self.curve.basis_series(Basis::Dxi(*c as i32)).scale(&Poly::int(*c as i64))),
                _ => None,
            },
            1 => match (bos, fer) {
                ([], []) => Some(self.omega_half.clone()),
                _ => None,
            },
            _ => self.bos_table_factor(table, two_g, bos, fer),
        }
    }

    fn bos_table_factor(&self, table: &CoeffTable, two_g: u32, bos: &[u32], fer: &[u32]) -> Option<LaurentForm> {
        if two_g < 2 {
            return None;
        }
        let mut out = LaurentForm::zero(FormWeight::ONE_FORM);
        let mut key = Vec::with_capacity(bos.len() + 1);
        for a in 1..=self.max_index {
            key.clear();
            key.push(a);
            key.extend_from_slice(bos);
            let v = table.get(two_g, &key, fer);
            if !v.is_zero() {
                out = out.add(&self.xi(a).scale(&v)).expect("same weight");
            }
        }
        (!out.is_zero()).then_some(out)
    }

    /// `omega_{g,n|2m}(I|z, J)` contracted on the spectators; the odd factor
    /// of `z` is pulled to the front.
    fn fer_factor(&self, table: &CoeffTable, two_g: u32, bos: &[u32], fer: &[u32]) -> Option<LaurentForm> {
        match two_g {
            0 => match (bos, fer) {
                ([], [c]) => self.fermion_creator(*c),
                _ => None,
            },
            1 => None,
            _ => self.fer_table_factor(table, two_g, bos, fer),
        }
    }

    fn fer_table_factor(&self, table: &CoeffTable, two_g: u32, bos: &[u32], fer: &[u32]) -> Option<LaurentForm> {
        if two_g < 2 {
            return None;
        }
        let mut out = LaurentForm::zero(self.theta_weight());
        let mut key = Vec::with_capacity(fer.len() + 1);
        for j in 0..=self.max_index {
            key.clear();
            key.push(j);
            key.extend_from_slice(fer);
            let v = table.get(two_g, bos, &key);
            if !v.is_zero() {
                out = out.add(&self.eta_neg(j).scale(&v)).expect("same weight");
            }
        }
        (!out.is_zero()).then_some(out)
    }
}

/// One labeled split of the spectators into two ordered groups, with the
/// sign of un-shuffling the fermionic ones.
struct Split {
    bos: [Vec<u32>; 2],
    fer: [Vec<u32>; 2],
    sign: i32,
}

type Indexed<'a> = Vec<(usize, &'a u32)>;

/// All labeled splits; `fer_first_parity` fixes the parity of the first
/// fermionic group (`None` accepts both).
fn splits(bos: &[u32], fer: &[u32], fer_first_parity: Option<usize>) -> Vec<Split> {
    let mut out = Vec::new();
    for mb in 0u32..(1 << bos.len()) {
        let (b1, b2): (Indexed, Indexed) = bos.iter().enumerate().partition(|(i, _)| mb & (1 << i) != 0);
        for mf in 0u32..(1 << fer.len()) {
            if fer_first_parity.is_some_and(|p| mf.count_ones() as usize % 2 != p) {
                continue;
            }
            let (f1, f2): (Indexed, Indexed) = fer.iter().enumerate().partition(|(i, _)| mf & (1 << i) != 0);
            let f1: Vec<u32> = f1.into_iter().map(|(_, v)| *v).collect();
            let f2: Vec<u32> = f2.into_iter().map(|(_, v)| *v).collect();
            let positions: Vec<u32> = (0..fer.len() as u32)
                .filter(|i| mf & (1 << i) != 0)
                .chain((0..fer.len() as u32).filter(|i| mf & (1 << i) == 0))
                .collect();
            let (_, sign) = sort_grassmann(positions).expect("positions are distinct");
            out.push(Split {
                bos: [b1.iter().map(|(_, v)| **v).collect(), b2.iter().map(|(_, v)| **v).collect()],
                fer: [f1, f2],
                sign,
            });
        }
    }
    out
}

fn acc(total: &mut LaurentForm, term: LaurentForm, s: &Rational) {
    if !term.is_zero() {
        let scaled = term.scale(&Poly::constant(s.clone()));
        *total = total.add(&scaled).expect("quadratic terms share a weight");
    }
}

impl Context<'_> {
    /// `Q^BB_{g,n+1|2m}(z, z; I|J)` as a quadratic differential in `z`.
    fn q_bb(&self, table: &CoeffTable, two_g: u32, bos: &[u32], fer: &[u32]) -> LaurentForm {
        let half = rational(1, 2);
        let mut q = LaurentForm::zero(FormWeight { dz: 2, theta: ThetaFactor::None });
        if two_g >= 2 {
            let mut key = vec![0, 0];
            key.extend_from_slice(bos);
            for a in 1..=self.max_index {
                let mut inner = LaurentForm::zero(FormWeight::ONE_FORM);
                for b in 1..=self.max_index {
                    key[0] = a;
                    key[1] = b;
                    let v = table.get(two_g - 2, &key, fer);
                    if !v.is_zero() {
                        inner = inner.add(&self.xi(b).scale(&v)).expect("same weight");
                    }
                }
                acc(&mut q, self.xi(a).mul(&inner).expect("even forms"), &half);
            }
        }
        if two_g >= 3 {
            if let Some(f) = self.bos_table_factor(table, two_g - 1, bos, fer) {
                acc(&mut q, d_z(&f).scale(&self.q0), &half);
            }
        }
        for s in splits(bos, fer, Some(0)) {
            for g1 in 0..=two_g {
                let Some(f1) = self.bos_factor(table, g1, &s.bos[0], &s.fer[0]) else { continue };
                let Some(f2) = self.bos_factor(table, two_g - g1, &s.bos[1], &s.fer[1]) else { continue };
                acc(&mut q, f1.mul(&f2).expect("even forms"), &(&half * Rational::from_integer(s.sign.into())));
            }
        }
        q
    }

    /// `Q^FF_{g,n+1|2m}(z; I|J)` as a quadratic differential in `z`.
    fn q_ff(&self, table: &CoeffTable, two_g: u32, bos: &[u32], fer: &[u32]) -> LaurentForm {
        let half = rational(1, 2);
        let mut q = LaurentForm::zero(FormWeight { dz: 2, theta: ThetaFactor::None });
        if two_g >= 2 {
            let mut key = vec![0, 0];
            key.extend_from_slice(fer);
            for a in 0..=self.max_index {
                let mut inner = LaurentForm::zero(self.theta_weight());
                for b in 0..=self.max_index {
                    key[0] = a;
                    key[1] = b;
                    let v = table.get(two_g - 2, bos, &key);
                    if !v.is_zero() {
                        inner = inner.add(&self.eta_neg(b).scale(&v)).expect("same weight");
                    }
                }
                if !inner.is_zero() {
                    acc(&mut q, d_z(self.eta_neg(a)).mul(&inner).expect("odd forms"), &-half.clone());
                }
            }
        }
        for s in splits(bos, fer, Some(1)) {
            for g1 in 0..=two_g {
                let Some(f1) = self.fer_factor(table, g1, &s.bos[0], &s.fer[0]) else { continue };
                let Some(f2) = self.fer_factor(table, two_g - g1, &s.bos[1], &s.fer[1]) else { continue };
                acc(&mut q, d_z(&f1).mul(&f2).expect("odd forms"), &(&half * Rational::from_integer(s.sign.into())));
            }
        }
        q
    }

    /// `Q^BF_{g,n|2m}(I|z, S)` as a form of weight `dz Theta` in `z`.
    fn q_bf(&self, table: &CoeffTable, two_g: u32, bos: &[u32], fer: &[u32]) -> LaurentForm {
        let one = Rational::from_integer(1.into());
        let mut q = LaurentForm::zero(self.one_form_theta());
        if two_g >= 2 {
            let mut bkey = vec![0];
            bkey.extend_from_slice(bos);
            let mut fkey = vec![0];
            fkey.extend_from_slice(fer);
            for a in 1..=self.max_index {
                let mut inner = LaurentForm::zero(self.theta_weight());
                for j in 0..=self.max_index {
                    bkey[0] = a;
                    fkey[0] = j;
                    let v = table.get(two_g - 2, &bkey, &fkey);
                    if !v.is_zero() {
                        inner = inner.add(&self.eta_neg(j).scale(&v)).expect("same weight");
                    }
                }
                if !inner.is_zero() {
                    acc(&mut q, self.xi(a).mul(&inner).expect("mixed forms"), &one);
                }
            }
        }
        if two_g >= 3 {
            if let Some(f) = self.fer_table_factor(table, two_g - 1, bos, fer) {
                acc(&mut q, d_z(&f).scale(&self.q0), &one);
                if self.sector() == Sector::R {
                    let dz_over_z = LaurentForm::monomial(-1, Poly::one(), FormWeight::ONE_FORM);
                    acc(&mut q, dz_over_z.mul(&f).expect("mixed forms").scale(&self.q0), &rational(1, 2));
                }
            }
        }
        for s in splits(bos, fer, None) {
            for g1 in 0..=two_g {
                let Some(f1) = self.bos_factor(table, g1, &s.bos[0], &s.fer[0]) else { continue };
                let Some(f2) = self.fer_factor(table, two_g - g1, &s.bos[1], &s.fer[1]) else { continue };
                acc(&mut q, f1.mul(&f2).expect("mixed forms"), &Rational::from_integer(s.sign.into()));
            }
        }
        q
    }
}

/// Expansion in `z` of the kernel coefficient that multiplies the basis
/// element of slot `l >= 1` in the new variable: `-z^l / omega_{0,1|0}(z)` for
/// [`KernelKind::BB`] and `-eta_{l+f}(z) / omega_{0,1|0}(z)` for
/// [`KernelKind::BF`], both per `dz`. `order` is the number of known terms.
pub fn kernel(curve: &SuperCurve, kind: KernelKind, l: u32, order: i32) -> Result<LaurentForm, StrError> {
    let w_inv = curve.omega01().with_weight(FormWeight::FUNCTION).inverse(order)?;
    Ok(kernel_from(curve, &w_inv, kind, l))
}

fn kernel_from(curve: &SuperCurve, w_inv: &LaurentForm, kind: KernelKind, l: u32) -> LaurentForm {
    let minus = Poly::int(-1);
    match kind {
        KernelKind::BB => w_inv.shift(l as i32).scale(&minus),
        KernelKind::BF => {
            curve.basis_series(Basis::EtaPos(l)).mul(w_inv).expect("function times odd form").scale(&minus)
        }
    }
}

/// The quadratic loop-equation term of the given kind for spectators
/// `(I|J)` at genus `two_g / 2`, using whatever cells `table` holds.
/// For [`QKind::BF`] the spectators exclude the slot at `z`.
pub fn q_term(
    curve: &SuperCurve,
    table: &CoeffTable,
    kind: QKind,
    two_g: u32,
    bos: &[u32],
    fer: &[u32],
) -> Result<LaurentForm, StrError> {
    let ctx = Context::new(curve, table_max_index(table))?;
    Ok(match kind {
        QKind::BB => ctx.q_bb(table, two_g, bos, fer),
        QKind::FF => ctx.q_ff(table, two_g, bos, fer),
        QKind::BF => ctx.q_bf(table, two_g, bos, fer),
    })
}

fn table_max_index(table: &CoeffTable) -> u32 {
    table.entries().map(|(c, _)| c.max_index()).max().unwrap_or(0)
}

/// `-Res_z K(z) Q(z)` per `dz`.
fn kernel_residue(kernel: &LaurentForm, q: &LaurentForm) -> Result<Poly, StrError> {
    Ok(per_dz(&kernel.mul(q)?)?.residue()?)
}

/// Largest slot index `l` for which `z^l Q / omega_{0,1|0}` can have a residue.
fn slot_limit(q: &LaurentForm, n: u32) -> u32 {
    if q.is_zero() {
        return 0;
    }
    (-1 - q.valuation() - n as i32).max(0) as u32
}

/// How a cell value was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Route {
    /// Bosonic recursion into slot `l`.
    Bos(u32),
    /// Fermionic recursion into slot `l >= 1`.
    Fer(u32),
    /// Antisymmetric completion of the fermionic zero slot.
    Restore,
}

/// Consistency diagnostics of a recursion run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecursionReport {
    /// Redundant determinations compared against the stored value.
    pub checks: usize,
    /// Cells where two routes (symmetry of the output) disagree.
    pub mismatches: Vec<String>,
    /// Cells with `g < 1` that came out nonzero.
    pub low_genus: Vec<String>,
}

impl RecursionReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.low_genus.is_empty()
    }
}

/// The recursion output: coefficients of every `omega_{g,n|2m}` with
/// `3 <= chi <= chi_max` (and `omega_{1,1|0}` from the curve).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaTable {
    pub table: CoeffTable,
    pub report: RecursionReport,
}

type Spectator = (u32, Vec<u32>, Vec<u32>);

fn remove_at(v: &[u32], i: usize) -> Vec<u32> {
    let mut out = v.to_vec();
    out.remove(i);
    out
}

/// Merges two spectator sets; `None` if a fermion repeats.
fn merge(a: &Spectator, b: &Spectator) -> Option<Spectator> {
    let mut bos = [a.1.as_slice(), b.1.as_slice()].concat();
    bos.sort_unstable();
    let (fer, _) = sort_grassmann([a.2.as_slice(), b.2.as_slice()].concat())?;
    Some((a.0 + b.0, bos, fer))
}

fn level(s: &Spectator) -> u32 {
    s.0 + s.1.len() as u32 + s.2.len() as u32
}

/// Candidate spectators for the bosonic (`0`) and fermionic (`1`) recursion
/// at level `chi`: everything that some quadratic term can reach from the
/// lower table.
fn candidates(table: &CoeffTable, chi: u32, creator_max: u32) -> [BTreeSet<Spectator>; 2] {
    let mut bos_stubs: BTreeSet<Spectator> = BTreeSet::new();
    let mut fer_stubs: BTreeSet<Spectator> = BTreeSet::new();
    let mut br: BTreeSet<Spectator> = BTreeSet::new();
    let mut fr: BTreeSet<Spectator> = BTreeSet::new();
    bos_stubs.insert((0, vec![], vec![]));
    bos_stubs.insert((1, vec![], vec![]));
    for c in 1..=creator_max {
        bos_stubs.insert((0, vec![c], vec![]));
    }
    for c in 0..=creator_max {
        fer_stubs.insert((0, vec![], vec![c]));
    }
    for (cell, _) in table.entries() {
        let (g, b, f) = (cell.two_g, &cell.bos, &cell.fer);
        for i in 0..b.len() {
            let rb = remove_at(b, i);
            bos_stubs.insert((g, rb.clone(), f.clone()));
            for j in 0..f.len() {
                fr.insert((g + 2, rb.clone(), remove_at(f, j)));
            }
            for k in i + 1..b.len() {
                br.insert((g + 2, remove_at(&rb, k - 1), f.clone()));
            }
            br.insert((g + 1, rb, f.clone()));
        }
        for j in 0..f.len() {
            let rf = remove_at(f, j);
            fer_stubs.insert((g, b.clone(), rf.clone()));
            fr.insert((g + 1, b.clone(), rf.clone()));
            for k in j + 1..f.len() {
                br.insert((g + 2, b.clone(), remove_at(&rf, k - 1)));
            }
        }
    }
    let by_level = |set: &BTreeSet<Spectator>| {
        let mut m: BTreeMap<u32, Vec<Spectator>> = BTreeMap::new();
        for s in set {
            m.entry(level(s)).or_default().push(s.clone());
        }
        m
    };
    let bl = by_level(&bos_stubs);
    let fl = by_level(&fer_stubs);
    // two stubs at levels l1, l2 give spectators at level l1 + l2 = chi - 1
    let pair = |a: &BTreeMap<u32, Vec<Spectator>>, b: &BTreeMap<u32, Vec<Spectator>>, out: &mut BTreeSet<Spectator>| {
        for (l1, xs) in a {
            let Some(l2) = (chi - 1).checked_sub(*l1) else { continue };
            let Some(ys) = b.get(&l2) else { continue };
            for x in xs {
                for y in ys {
                    if let Some(s) = merge(x, y) {
                        out.insert(s);
                    }
                }
            }
        }
    };
    pair(&bl, &bl, &mut br);
    pair(&fl, &fl, &mut br);
    pair(&bl, &fl, &mut fr);
    br.retain(|s| level(s) + 1 == chi);
    fr.retain(|s| level(s) + 1 == chi);
    [br, fr]
}

/// Runs the recursion through level `chi_max`, one level at a time. Within a
/// level every candidate spectator is independent and is evaluated in
/// parallel; the quadratic terms only see lower levels, so the unknown cell
/// never enters its own right-hand side.
pub fn recurse(curve: &SuperCurve, chi_max: u32) -> Result<OmegaTable, StrError> {
    if chi_max < 3 {
        return Err(StrError::ChiTooSmall(chi_max));
    }
    let mut table = CoeffTable::new(chi_max, 0);
    let mut report = RecursionReport::default();
    for (k, v) in curve.d_entries() {
        table.insert(Cell { two_g: 2, bos: vec![*k], fer: vec![] }, v.clone());
    }
    for chi in 3..=chi_max {
        let a = table_max_index(&table);
        let ctx = Context::new(curve, a)?;
        let creator_max = a + curve.n + 3;
        let [br, fr] = candidates(&table, chi, creator_max);
        let br: Vec<Spectator> = br.into_iter().filter(|s| *s != (2, vec![], vec![])).collect();
        let fr: Vec<Spectator> = fr.into_iter().collect();
        let bos_out = par::map(&br, |(g, b, f)| -> Result<Vec<(u32, Poly)>, StrError> {
            let q = ctx.q_bb(&table, *g, b, f).add(&ctx.q_ff(&table, *g, b, f))?;
            (1..=slot_limit(&q, curve.n))
                .map(|l| Ok((l, kernel_residue(&kernel_from(curve, &ctx.w_inv, KernelKind::BB, l), &q)?)))
                .collect()
        });
        let fer_out = par::map(&fr, |(g, b, f)| -> Result<Vec<(u32, Poly)>, StrError> {
            let q = ctx.q_bf(&table, *g, b, f);
            (1..=slot_limit(&q, curve.n))
                .map(|l| Ok((l, kernel_residue(&kernel_from(curve, &ctx.w_inv, KernelKind::BF, l), &q)?)))
                .collect()
        });

        let mut found: BTreeMap<Cell, Vec<(Route, Poly)>> = BTreeMap::new();
        for ((g, b, f), vals) in br.iter().zip(bos_out) {
            for (l, v) in vals? {
                let bos = [&[l][..], b].concat();
                let (cell, _) = Cell::canonical(*g, &bos, f).expect("spectator fermions are distinct");
                found.entry(cell).or_default().push((Route::Bos(l), v));
            }
        }
        // (2g, bos, slot, spectator fer, value)
        #[allow(clippy::type_complexity)]
        let mut fr1: Vec<(u32, &Vec<u32>, u32, &Vec<u32>, Poly)> = Vec::new();
        for ((g, b, f), vals) in fr.iter().zip(fer_out) {
            for (l, v) in vals? {
                let fer = [&[l][..], f].concat();
                match Cell::canonical(*g, b, &fer) {
                    Some((cell, sign)) => {
                        let signed = if sign < 0 { -v.clone() } else { v.clone() };
                        found.entry(cell).or_default().push((Route::Fer(l), signed));
                        fr1.push((*g, b, l, f, v));
                    }
                    None if !v.is_zero() => report
                        .mismatches
                        .push(format!("repeated fermionic slot {l} with spectators ({b:?}|{f:?}) at 2g={g}")),
                    None => {}
                }
            }
        }
        // The recursion leaves the u1 = 0 slot empty; it is restored as
        // -eta_{-f}(u1) Res_z omega(I|u2, z, J) eta_f(z).
        let eta_f = curve.basis_series(Basis::EtaPos(0));
        let pairing: Vec<Poly> = (0..=creator_max + 1)
            .map(|b| curve.basis_series(Basis::EtaNeg(b)).mul(&eta_f).and_then(|p| p.residue()))
            .collect::<Result<_, _>>()?;
        for (g, b, k, f, v) in &fr1 {
            for (pos, j) in f.iter().enumerate() {
                let Some(p) = pairing.get(*j as usize) else { continue };
                if p.is_zero() {
                    continue;
                }
                let rest = remove_at(f, pos);
                let fer = [&[0, *k][..], &rest].concat();
                if let Some((cell, sign)) = Cell::canonical(*g, b, &fer) {
                    let sign = if (pos % 2 == 0) == (sign > 0) { -1 } else { 1 };
                    let val = (p * v).scale(&Rational::from_integer(sign.into()));
                    found.entry(cell).or_default().push((Route::Restore, val));
                }
            }
        }
        settle(&mut table, &mut report, found, chi);
    }
    table.index_bound = table_max_index(&table);
    Ok(OmegaTable { table, report })
}

/// Compares all routes to each cell of one level and stores the first.
fn settle(table: &mut CoeffTable, report: &mut RecursionReport, found: BTreeMap<Cell, Vec<(Route, Poly)>>, chi: u32) {
    for (cell, mut routes) in found {
        if routes.iter().all(|(_, v)| v.is_zero()) {
            continue;
        }
        debug_assert_eq!(cell.chi(), chi);
        routes.sort_by_key(|a| a.0);
        let mut expected: Vec<Route> = cell.bos.iter().map(|b| Route::Bos(*b)).collect();
        expected.extend(cell.fer.iter().filter(|l| **l > 0).map(|l| Route::Fer(*l)));
        if cell.fer.first() == Some(&0) {
            expected.push(Route::Restore);
        }
        expected.dedup();
        let value = routes[0].1.clone();
        for r in &expected {
            let mut vals = routes.iter().filter(|(route, _)| route == r).map(|(_, v)| v);
            let first = vals.next().cloned().unwrap_or_default();
            if first != value || vals.any(|v| *v != value) {
                report.mismatches.push(format!("{cell} via {r:?}"));
            }
        }
        report.checks += expected.len().saturating_sub(1);
        if cell.two_g < 2 {
            report.low_genus.push(cell.to_string());
            continue;
        }
        table.insert(cell, value);
    }
}

/// One loop-equation residue that failed to vanish.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopViolation {
    pub kind: QKind,
    pub two_g: u32,
    pub bos: Vec<u32>,
    pub fer: Vec<u32>,
    pub i: u32,
    pub value: Poly,
}

/// Checks the quadratic loop equations on a complete table: for every
/// spectator set reachable at levels `3..=chi_max`,
/// `Res z^{i+N} (Q^BB + Q^FF) / dz` and `Res z^{i+N+2f-1} Theta Q^BF / dz`
/// vanish for all `i >= 1`. Returns the number of residues checked and the
/// failures.
pub fn loop_equations(
    curve: &SuperCurve,
    table: &CoeffTable,
    chi_max: u32,
) -> Result<(usize, Vec<LoopViolation>), StrError> {
    let a = table_max_index(table);
    let ctx = Context::new(curve, a)?;
    let creator_max = a + curve.n + 3;
    let n = curve.n as i32;
    let theta = FormWeight::theta(curve.sector.theta());
    let mut checked = 0;
    let mut out = Vec::new();
    for chi in 3..=chi_max {
        let [br, fr] = candidates(table, chi, creator_max);
        let jobs: Vec<(QKind, Spectator)> = br
            .into_iter()
            .filter(|s| *s != (2, vec![], vec![]))
            .map(|s| (QKind::BB, s))
            .chain(fr.into_iter().map(|s| (QKind::BF, s)))
            .collect();
        let results = par::map(&jobs, |(kind, (g, b, f))| -> Result<Vec<(u32, Poly)>, StrError> {
            let (q, test): (LaurentForm, Box<dyn Fn(u32) -> LaurentForm>) = match kind {
                QKind::BF => (
                    ctx.q_bf(table, *g, b, f),
                    Box::new(move |i| {
                        LaurentForm::monomial(i as i32 + n + curve.sector.two_f() - 1, Poly::one(), theta)
                    }),
                ),
                _ => (
                    ctx.q_bb(table, *g, b, f).add(&ctx.q_ff(table, *g, b, f))?,
                    Box::new(move |i| LaurentForm::monomial(i as i32 + n, Poly::one(), FormWeight::FUNCTION)),
                ),
            };
            (1..=slot_limit(&q, curve.n).max(1)).map(|i| Ok((i, per_dz(&test(i).mul(&q)?)?.residue()?))).collect()
        });
        for ((kind, (g, b, f)), res) in jobs.iter().zip(results) {
            for (i, value) in res? {
                checked += 1;
                if !value.is_zero() {
                    out.push(LoopViolation { kind: *kind, two_g: *g, bos: b.clone(), fer: f.clone(), i, value });
                }
            }
        }
    }
    Ok((checked, out))
}
