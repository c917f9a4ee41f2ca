//! Heisenberg and Clifford modes, the super Virasoro generators with
//! background charge, and the constraint operators `H_i`, `F_i` of a curve.

use super::element::FockElement;
use super::operator::{Atom, OperatorExpr};
use crate::curve::{Sector, SuperCurve};
use crate::par;
use crate::ring::{rat, Poly, Rational, Q0, TAU0};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModeError {
    #[error("fermionic index {0}/2 does not match the {1} sector")]
    SectorParity(i32, Sector),
}

/// A mode: `J(a)` is `J_a`; `Gamma(r2)` is `Gamma_{r2/2}` (doubled index).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    J(i32),
    Gamma(i32),
}

/// Which super Virasoro generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    L,
    G,
}

/// Free-field representation data: the sector and the zero-mode values
/// `J_0 = tau0 + hbar^(1/2) Q0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Representation {
    pub sector: Sector,
    pub tau0: Poly,
    pub q0: Poly,
}

impl Representation {
    /// Zero modes given by the ring symbols `tau0` and `Q0`.
    pub fn symbolic(sector: Sector) -> Self {
        Representation { sector, tau0: Poly::var(TAU0), q0: Poly::var(Q0) }
    }

    /// Zero modes read from a curve (`tau_0`, `Q_0`).
    pub fn for_curve(curve: &SuperCurve) -> Self {
        Representation { sector: curve.sector, tau0: curve.tau(0), q0: curve.q(0) }
    }

    /// `J_0` as a scalar.
    pub fn j0(&self) -> Poly {
        &self.tau0 + &(&Poly::h_half_pow(1) * &self.q0)
    }

    fn check_gamma(&self, r2: i32) -> Result<(), ModeError> {
        if r2.rem_euclid(2) != self.sector.two_f() {
            return Err(ModeError::SectorParity(r2, self.sector));
        }
        Ok(())
    }

    /// A single mode as a differential operator.
    pub fn mode(&self, m: Mode) -> Result<OperatorExpr, ModeError> {
        Ok(match m {
            Mode::J(a) if a > 0 => OperatorExpr::atom(Atom::Dx(a as u32), Poly::one()),
            Mode::J(0) => OperatorExpr::constant(self.j0()),
            Mode::J(a) => OperatorExpr::atom(Atom::X((-a) as u32), Poly::int(-a as i64)),
            Mode::Gamma(r2) => {
                self.check_gamma(r2)?;
                let f2 = self.sector.two_f();
                if r2 > 0 {
                    OperatorExpr::atom(Atom::Dtheta(((r2 - f2) / 2) as u32), Poly::one())
                } else if r2 < 0 {
                    OperatorExpr::atom(Atom::Theta(((-r2 - f2) / 2) as u32), Poly::one())
                } else {
                    let mut g0 = OperatorExpr::atom(Atom::Theta(0), Poly::rat(1, 2));
                    g0.add_assign(&OperatorExpr::atom(Atom::Dtheta(0), Poly::one()));
                    g0
                }
            }
        })
    }

    /// Applies one mode to a Fock element.
    pub fn apply_mode(&self, m: Mode, v: &FockElement) -> Result<FockElement, ModeError> {
        Ok(self.mode(m)?.apply(v, None))
    }

    /// `L_n` or `G_r` (index doubled for `G`), exact on every word whose
    /// annihilators have index at most `cutoff`.
    pub fn generator(&self, kind: GeneratorKind, index2: i32, cutoff: u32) -> Result<OperatorExpr, ModeError> {
        let map = |m: Mode| self.mode(m).expect("mode parity checked by the caller");
        match kind {
            GeneratorKind::L => {
                if index2 % 2 != 0 {
                    return Err(ModeError::SectorParity(index2, self.sector));
                }
                Ok(build_l(self, index2 / 2, cutoff, 0, &map))
            }
            GeneratorKind::G => {
                self.check_gamma(index2)?;
                Ok(build_g(self, index2, cutoff, 0, &map))
            }
        }
    }

    /// `L_n` on the given cutoff.
    pub fn l(&self, n: i32, cutoff: u32) -> OperatorExpr {
        self.generator(GeneratorKind::L, 2 * n, cutoff).expect("integer index")
    }

    /// `G_{r2/2}` on the given cutoff.
    pub fn g(&self, r2: i32, cutoff: u32) -> Result<OperatorExpr, ModeError> {
        self.generator(GeneratorKind::G, r2, cutoff)
    }

    /// `hbar^(1/2)` background-charge coefficient `Q0` times `hbar^(1/2)`.
    fn hq0(&self) -> Poly {
        &Poly::h_half_pow(1) * &self.q0
    }

    /// The central charge `c = hbar (3/2 - 3 Q0^2)`.
    pub fn central_charge(&self) -> Poly {
        let q2 = &self.q0 * &self.q0;
        &Poly::h_half_pow(2) * &(&Poly::rat(3, 2) - &q2.scale(&rat(3, 1)))
    }

    /// The `L_0` eigenvalue of the vacuum `1`.
    pub fn vacuum_weight(&self) -> Poly {
        let l0 = self.l(0, 2);
        l0.apply(&FockElement::one(), None).constant_term()
    }
}

/// Builds `L_n` with every mode passed through `map`. `pad` widens the
/// enumerated mode range to cover conjugation shifts.
fn build_l<F: Fn(Mode) -> OperatorExpr>(rep: &Representation, n: i32, cutoff: u32, pad: i32, map: &F) -> OperatorExpr {
    let m = cutoff as i32 + 2 + pad;
    let mut out = OperatorExpr::zero();
    let half = Poly::rat(1, 2);
    // bosons: 1/2 sum_a :J_a J_{n-a}:
    for a in (n - m)..=m {
        let b = n - a;
        let (first, second) = if a > 0 && b < 0 { (b, a) } else { (a, b) };
        let term = map(Mode::J(first)).mul(&map(Mode::J(second)));
        out.add_scaled(&term, &half);
    }
    // fermions: 1/2 sum_s (n/2 + s) :Gamma_{-s} Gamma_{s+n}:
    let f2 = rep.sector.two_f();
    let mut s2 = -2 * m - 2 * n - f2;
    if (s2 - f2).rem_euclid(2) != 0 {
        s2 += 1;
    }
    while s2 <= 2 * m + 2 * n + 2 {
        let (lo, hi) = (-s2, s2 + 2 * n);
        let coeff = Rational::new((n * 2 + s2).into(), 4.into());
        if coeff != Rational::from_integer(0.into()) {
            let (first, second, sign) = if lo > 0 && hi < 0 { (hi, lo, -1) } else { (lo, hi, 1) };
            let term = map(Mode::Gamma(first)).mul(&map(Mode::Gamma(second)));
            out.add_scaled(&term, &Poly::constant(coeff * Rational::from_integer(sign.into())));
        }
        s2 += 2;
    }
    if n == 0 && rep.sector == Sector::R {
        out.add_assign(&OperatorExpr::constant(Poly::h_half_pow(2).scale(&rat(1, 16))));
    }
    let tail = rep.hq0().scale(&rat(-(n as i64 + 1), 2));
    out.add_scaled(&map(Mode::J(n)), &tail);
    out.truncate_annihilators(cutoff)
}

/// Builds `G_{r2/2}` with every mode passed through `map`.
fn build_g<F: Fn(Mode) -> OperatorExpr>(rep: &Representation, r2: i32, cutoff: u32, pad: i32, map: &F) -> OperatorExpr {
    let m = cutoff as i32 + 2 + pad;
    let mut out = OperatorExpr::zero();
    // sum_j :J_{-j} Gamma_{j+r}: ; bosons and fermions commute
    for j in (-m)..=(m + r2.abs()) {
        let term = map(Mode::J(-j)).mul(&map(Mode::Gamma(2 * j + r2)));
        out.add_assign(&term);
    }
    let tail = rep.hq0().scale(&Rational::new((-(r2 + 1)).into(), 2.into()));
    out.add_scaled(&map(Mode::Gamma(r2)), &tail);
    out.truncate_annihilators(cutoff)
}

/// Whether a constraint is bosonic (`H_i`) or fermionic (`F_i`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    H,
    F,
}

/// The conjugated mode `Phi_N m Phi_N^-1` of a curve.
pub fn conjugated_mode(curve: &SuperCurve, m: Mode) -> OperatorExpr {
    let rep = Representation::for_curve(curve);
    let h = Poly::h_half_pow(1);
    let shift = |l: i32| &curve.tau(l) + &(&h * &curve.q(l));
    match m {
        Mode::J(0) => rep.mode(m).expect("bosonic"),
        Mode::J(l) if l > 0 => {
            let mut out = rep.mode(m).expect("bosonic");
            if l < curve.n as i32 {
                out.add_assign(&OperatorExpr::constant(shift(-l)));
            }
            out
        }
        Mode::J(neg) => {
            let a = -neg;
            let mut out = rep.mode(m).expect("bosonic");
            let mut constant = shift(a);
            for ((p, q), v) in curve.phi_entries() {
                let others: &[u32] = if p == q { &[*q] } else { &[*q, *p] };
                let partners = [*p, *q];
                for (k, b) in others.iter().enumerate() {
                    if partners[k] != a as u32 {
                        continue;
                    }
                    let b = *b as i32;
                    let c = v.scale(&Rational::new(1.into(), b.into()));
                    out.add_assign(&OperatorExpr::atom(Atom::Dx(b as u32), c.clone()));
                    if b < curve.n as i32 {
                        constant += &(&shift(-b) * &c);
                    }
                }
            }
            out.add_assign(&OperatorExpr::constant(constant));
            out
        }
        Mode::Gamma(r2) => {
            let mut out = rep.mode(m).expect("mode parity checked by the caller");
            let f2 = curve.sector.two_f();
            // creation modes Gamma_{-r} with r - f >= 0 pick up psi_{s, r-f} Gamma_{s+f};
            // this index order is the one the recursion coefficients require
            if r2 <= 0 && -r2 >= f2 {
                let j = ((-r2 - f2) / 2) as i64;
                let max = curve.psi_entries().map(|((a, b), _)| *a.max(b)).max().unwrap_or(0) as i64;
                for s in 0..=max {
                    let c = curve.psi(s, j);
                    if !c.is_zero() {
                        let g = rep.mode(Mode::Gamma(2 * s as i32 + f2)).expect("sector parity");
                        out.add_scaled(&g, &c);
                    }
                }
            }
            out
        }
    }
}

/// `tilde D_i = sum_k tau_{k-(N-1)} D_{i+k}`.
pub fn d_tilde(curve: &SuperCurve, i: u32) -> Poly {
    let n = curve.n as i64;
    let mut out = Poly::zero();
    for k in 0..=n {
        out += &(&curve.tau((k - (n - 1)) as i32) * &curve.d(i as i64 + k));
    }
    out
}

/// The constraint operator `H_i` or `F_i` of a curve, exact on every word whose
/// annihilators have index at most `cutoff`.
///
/// `H_i = Phi L_{N+i-1} Phi^-1 - hbar tilde D_i - (quadratic dilaton constant)`.
/// The D-term enters with a minus sign so that `F_{1,1|0}(i) = D_i`.
pub fn build_constraint(curve: &SuperCurve, i: u32, kind: ConstraintKind, cutoff: u32) -> OperatorExpr {
    let rep = Representation::for_curve(curve);
    let pad = curve.support_width() as i32 + 1;
    let map = |m: Mode| conjugated_mode(curve, m);
    let n = curve.n as i32 + i as i32 - 1;
    match kind {
        ConstraintKind::H => {
            let mut op = build_l(&rep, n, cutoff, pad, &map);
            let hbar = Poly::h_half_pow(2);
            op.add_assign(&OperatorExpr::constant(-(&hbar * &d_tilde(curve, i))));
            let h = Poly::h_half_pow(1);
            let shift = |l: i32| &curve.tau(l) + &(&h * &curve.q(l));
            let mut quad = Poly::zero();
            for k in 1..curve.n as i32 {
                let l = n - k;
                if (1..curve.n as i32).contains(&l) {
                    quad += &(&shift(-k) * &shift(-l));
                }
            }
            op.add_assign(&OperatorExpr::constant(quad.scale(&rat(-1, 2))));
            op
        }
        ConstraintKind::F => {
            let r2 = 2 * n + curve.sector.two_f();
            build_g(&rep, r2, cutoff, pad, &map)
        }
    }
}

/// Keeps only the words all of whose atoms have index at most `window`.
pub fn window(op: &OperatorExpr, window: u32) -> OperatorExpr {
    op.filter(|w| w.iter().all(|a| a.index() <= window))
}

/// `[a, b]_s - expected`; the relation holds when this is zero.
pub fn commutator_residual(a: &OperatorExpr, b: &OperatorExpr, expected: &OperatorExpr) -> OperatorExpr {
    a.supercommutator(b).sub(expected)
}

/// Outcome of one algebra relation, compared on the words all of whose
/// atoms have index at most `window`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationCheck {
    pub relation: String,
    pub window: u32,
    pub holds: bool,
}

fn half(k2: i32) -> String {
    if k2 % 2 == 0 {
        format!("{}", k2 / 2)
    } else {
        format!("{k2}/2")
    }
}

/// Checks the mode algebra and the super Virasoro relations with central
/// terms for `|m|, |n| <= max` and `|r|, |s| <= max - 1/2`.
///
/// Generators are built exactly on annihilator indices up to a cutoff, so a
/// product is exact on a window shrunk by the total mode number.
pub fn relation_sweep(rep: &Representation, max: i32) -> Vec<RelationCheck> {
    let cutoff = (4 * max + 4) as u32;
    let hbar = Poly::h_half_pow(2);
    let c = rep.central_charge();
    let f2 = rep.sector.two_f();
    let ints: Vec<i32> = (-max..=max).collect();
    let odd: Vec<i32> = (-2 * max + 1..2 * max).filter(|r| r.rem_euclid(2) == f2).collect();
    let mut jobs: Vec<(char, i32, i32)> = Vec::new();
    for &m in &ints {
        for &n in &ints {
            jobs.push(('J', m, n));
            jobs.push(('L', m, n));
        }
        for &r2 in &odd {
            jobs.push(('M', m, r2));
        }
    }
    for &r2 in &odd {
        for &s2 in &odd {
            jobs.push(('C', r2, s2));
            jobs.push(('G', r2, s2));
        }
    }
    let h = |k: Rational| OperatorExpr::constant(hbar.scale(&k));
    par::map(&jobs, |&(kind, a, b)| {
        let mode = |m| rep.mode(m).expect("parity chosen per sector");
        let (name, lhs, rhs, spread) = match kind {
            'J' => {
                let rhs = if a + b == 0 { h(rat(a as i64, 1)) } else { OperatorExpr::zero() };
                (format!("[J{a},J{b}]"), (mode(Mode::J(a)), mode(Mode::J(b))), rhs, 0)
            }
            'C' => {
                let rhs = if a + b == 0 { h(rat(1, 1)) } else { OperatorExpr::zero() };
                let name = format!("{{Gamma{},Gamma{}}}", half(a), half(b));
                (name, (mode(Mode::Gamma(a)), mode(Mode::Gamma(b))), rhs, 0)
            }
            'L' => {
                let mut rhs = rep.l(a + b, cutoff).scale(&hbar.scale(&rat((a - b) as i64, 1)));
                if a + b == 0 {
                    let k = rat((a * a * a - a) as i64, 12);
                    rhs.add_assign(&OperatorExpr::constant((&hbar * &c).scale(&k)));
                }
                (format!("[L{a},L{b}]"), (rep.l(a, cutoff), rep.l(b, cutoff)), rhs, a.abs() + b.abs())
            }
            'M' => {
                let k = Rational::new((a - b).into(), 2.into());
                let g = |r2| rep.g(r2, cutoff).expect("parity chosen per sector");
                let rhs = g(2 * a + b).scale(&hbar.scale(&k));
                (format!("[L{a},G{}]", half(b)), (rep.l(a, cutoff), g(b)), rhs, a.abs() + (b.abs() + 1) / 2)
            }
            _ => {
                let g = |r2| rep.g(r2, cutoff).expect("parity chosen per sector");
                let mut rhs = rep.l((a + b) / 2, cutoff).scale(&hbar.scale(&rat(2, 1)));
                if a + b == 0 {
                    let k = Rational::new((a * a - 1).into(), 12.into());
                    rhs.add_assign(&OperatorExpr::constant((&hbar * &c).scale(&k)));
                }
                (format!("{{G{},G{}}}", half(a), half(b)), (g(a), g(b)), rhs, (a.abs() + b.abs() + 1) / 2)
            }
        };
        let w = cutoff.saturating_sub(spread as u32 + 2);
        let holds = window(&commutator_residual(&lhs.0, &lhs.1, &rhs), w).is_empty();
        RelationCheck { relation: name, window: w, holds }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockMonomial;

    const M: u32 = 9;

    fn hbar() -> Poly {
        Poly::h_half_pow(2)
    }

    fn check(lhs: &OperatorExpr, rhs: &OperatorExpr, w: u32) {
        let diff = window(&lhs.sub(rhs), w);
        assert!(diff.is_empty(), "residual: {diff}");
    }

    #[test]
    fn single_modes() {
        let ns = Representation::symbolic(Sector::Ns);
        let r = Representation::symbolic(Sector::R);
        let one = FockElement::one();
        let x3 = ns.apply_mode(Mode::J(-3), &one).unwrap();
        assert_eq!(x3.coeff(&FockMonomial::from_indices(&[3], &[])), Poly::int(3));
        let th0 = FockElement::monomial(FockMonomial::from_indices(&[], &[0]), Poly::one());
        assert_eq!(ns.apply_mode(Mode::Gamma(1), &th0).unwrap().constant_term(), hbar());
        let g0 = r.apply_mode(Mode::Gamma(0), &one).unwrap();
        assert_eq!(g0.coeff(&FockMonomial::from_indices(&[], &[0])), Poly::rat(1, 2));
        assert!(ns.mode(Mode::Gamma(0)).is_err());
        assert!(r.mode(Mode::Gamma(1)).is_err());
    }

    #[test]
    fn l1_on_x1() {
        let ns = Representation::symbolic(Sector::Ns);
        let x1 = FockElement::monomial(FockMonomial::from_indices(&[1], &[]), Poly::one());
        let out = ns.l(1, M).apply(&x1, None).constant_term();
        assert_eq!(out, &(&hbar() * &ns.j0()) - &(&hbar() * &ns.hq0()));
    }

    #[test]
    fn virasoro_relations() {
        for sector in [Sector::Ns, Sector::R] {
            let rep = Representation::symbolic(sector);
            let c = rep.central_charge();
            for m in -2..=2i32 {
                for n in -2..=2i32 {
                    let lhs = rep.l(m, M).supercommutator(&rep.l(n, M));
                    let mut rhs = rep.l(m + n, M).scale(&hbar().scale(&rat((m - n) as i64, 1)));
                    if m + n == 0 {
                        let k = rat((m * m * m - m) as i64, 12);
                        rhs.add_assign(&OperatorExpr::constant((&hbar() * &c).scale(&k)));
                    }
                    check(&lhs, &rhs, M - (m.abs() + n.abs()) as u32 - 2);
                }
            }
        }
    }

    #[test]
    fn super_relations() {
        for sector in [Sector::Ns, Sector::R] {
            let rep = Representation::symbolic(sector);
            let c = rep.central_charge();
            let f2 = sector.two_f();
            let odd: Vec<i32> = (-4..=4i32).filter(|r| r.rem_euclid(2) == f2).collect();
            for m in -2..=2i32 {
                for &r2 in &odd {
                    let lhs = rep.l(m, M).supercommutator(&rep.g(r2, M).unwrap());
                    let k = Rational::new((m - r2).into(), 2.into());
                    let rhs = rep.g(2 * m + r2, M).unwrap().scale(&hbar().scale(&k));
                    check(&lhs, &rhs, M - (m.abs() + r2.abs()) as u32 - 2);
                }
            }
            for &r2 in &odd {
                for &s2 in &odd {
                    let lhs = rep.g(r2, M).unwrap().supercommutator(&rep.g(s2, M).unwrap());
                    let mut rhs = rep.l((r2 + s2) / 2, M).scale(&hbar().scale(&rat(2, 1)));
                    if r2 + s2 == 0 {
                        let k = Rational::new((r2 * r2 - 1).into(), 12.into());
                        rhs.add_assign(&OperatorExpr::constant((&hbar() * &c).scale(&k)));
                    }
                    check(&lhs, &rhs, M - (r2.abs() + s2.abs()) as u32 / 2 - 3);
                }
            }
        }
    }

    #[test]
    fn full_sweep() {
        for sector in [Sector::Ns, Sector::R] {
            let checks = relation_sweep(&Representation::symbolic(sector), 2);
            let failed: Vec<_> = checks.iter().filter(|c| !c.holds).map(|c| &c.relation).collect();
            assert!(failed.is_empty(), "{sector}: {failed:?}");
            assert!(checks.iter().all(|c| c.window >= 4));
        }
    }

    #[test]
    fn vacuum_weight() {
        let r = Representation::symbolic(Sector::R);
        let ns = Representation::symbolic(Sector::Ns);
        let expect = (&ns.tau0 * &(&ns.tau0 + &ns.hq0())).scale(&rat(1, 2));
        assert_eq!(ns.vacuum_weight(), expect);
        assert_eq!(r.vacuum_weight(), &expect + &hbar().scale(&rat(1, 16)));
    }
}
