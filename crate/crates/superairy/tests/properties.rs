//! Invariants as properties: ring axioms, Grassmann signs, the mode algebra,
//! the pairing against its adjoint-mode oracle, series inversion and the
//! agreement of the two recursions on random curves.

mod common;

use common::oracle::norm_oracle;
use common::random_curve;
use proptest::prelude::*;
use superairy::curve::{FormWeight, LaurentForm, Sector};
use superairy::fock::commutator_residual;
use superairy::fock::{dagger_pair, sort_grassmann, FockElement, Mode, OperatorExpr, Representation};
use superairy::ring::{Monomial, Poly, Rational};

fn rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

fn monomial() -> impl Strategy<Value = Monomial> {
    prop::collection::vec(-2i32..=3, 5).prop_map(|e| Monomial::from_exponents(&e))
}

fn poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec((monomial(), rational()), 0..5).prop_map(Poly::from_terms)
}

fn sector() -> impl Strategy<Value = Sector> {
    prop_oneof![Just(Sector::Ns), Just(Sector::R)]
}

fn inversions(v: &[u32]) -> usize {
    (0..v.len()).flat_map(|i| (i + 1..v.len()).map(move |j| (i, j))).filter(|&(i, j)| v[i] > v[j]).count()
}

proptest! {
    #[test]
    fn ring_axioms(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(&a * &Poly::one(), a.clone());
    }

    #[test]
    fn monomials_are_units(m in monomial(), c in rational()) {
        prop_assume!(c != Rational::from_integer(0.into()));
        let p = Poly::term(m, c);
        let inv = p.unit_inverse().expect("a single term is a unit");
        prop_assert_eq!(&p * &inv, Poly::one());
        prop_assert_eq!(p.pow(-2), inv.pow(2));
    }

    #[test]
    fn regrading_preserves_degree(m in monomial()) {
        let p = Poly::term(m.clone(), Rational::from_integer(1.into())).regrade();
        for (n, _) in p.terms() {
            prop_assert_eq!(n.degree(), m.degree());
        }
    }

    #[test]
    fn grassmann_sort_sign(v in prop::collection::vec(0u32..6, 0..6)) {
        let mut dedup = v.clone();
        dedup.sort_unstable();
        dedup.dedup();
        match sort_grassmann(v.clone()) {
            None => prop_assert!(dedup.len() < v.len()),
            Some((sorted, sign)) => {
                prop_assert_eq!(&sorted, &dedup);
                prop_assert_eq!(sign, if inversions(&v).is_multiple_of(2) { 1 } else { -1 });
            }
        }
    }

    #[test]
    fn fock_product_is_supercommutative(
        b1 in prop::collection::vec(1u32..4, 0..3), f1 in prop::collection::btree_set(0u32..4, 0..3),
        b2 in prop::collection::vec(1u32..4, 0..3), f2 in prop::collection::btree_set(0u32..4, 0..3),
    ) {
        let f1: Vec<u32> = f1.into_iter().collect();
        let f2: Vec<u32> = f2.into_iter().collect();
        let x = FockElement::from_indices(&b1, &f1, Poly::one());
        let y = FockElement::from_indices(&b2, &f2, Poly::one());
        let sign = if f1.len() % 2 == 1 && f2.len() % 2 == 1 { -1 } else { 1 };
        prop_assert_eq!(x.mul(&y), y.mul(&x).scale(&Poly::int(sign)));
    }

    #[test]
    fn heisenberg_and_clifford_relations(s in sector(), a in -5i32..=5, b in -5i32..=5, r in -4i32..=4, t in -4i32..=4) {
        let rep = Representation::symbolic(s);
        let hbar = Poly::h_half_pow(2);
        let jj = commutator_residual(
            &rep.mode(Mode::J(a)).unwrap(),
            &rep.mode(Mode::J(b)).unwrap(),
            &OperatorExpr::constant(if a + b == 0 { &hbar * &Poly::int(a as i64) } else { Poly::zero() }),
        );
        prop_assert!(jj.is_zero());
        // doubled fermionic indices of the sector's parity
        let (r2, t2) = (2 * r + s.two_f(), 2 * t - s.two_f());
        let gg = commutator_residual(
            &rep.mode(Mode::Gamma(r2)).unwrap(),
            &rep.mode(Mode::Gamma(t2)).unwrap(),
            &OperatorExpr::constant(if r2 + t2 == 0 { hbar.clone() } else { Poly::zero() }),
        );
        prop_assert!(gg.is_zero());
        let jg = commutator_residual(&rep.mode(Mode::J(a)).unwrap(), &rep.mode(Mode::Gamma(r2)).unwrap(), &OperatorExpr::zero());
        prop_assert!(jg.is_zero());
    }

    #[test]
    fn pairing_matches_adjoint_modes(
        s in sector(),
        terms in prop::collection::vec(
            (prop::collection::vec(1u32..4, 0..3), prop::collection::btree_set(0u32..3, 0..3), rational()),
            1..4,
        ),
    ) {
        let mut z = FockElement::zero();
        for (b, f, c) in terms {
            let f: Vec<u32> = f.into_iter().collect();
            z.add_assign(&FockElement::from_indices(&b, &f, Poly::constant(c)));
        }
        prop_assert_eq!(dagger_pair(s, &z, &z), norm_oracle(s, &z));
    }

    #[test]
    fn series_inverse(coeffs in prop::collection::vec(rational(), 1..6), lead in rational(), v in -3i32..3) {
        prop_assume!(lead != Rational::from_integer(0.into()));
        let terms = std::iter::once((v, Poly::constant(lead)))
            .chain(coeffs.into_iter().enumerate().map(|(k, c)| (v + 1 + k as i32, Poly::constant(c))));
        let f = LaurentForm::exact(terms, FormWeight::FUNCTION);
        let order = 8;
        let product = f.mul(&f.inverse(order).unwrap()).unwrap();
        for k in 0..order {
            let expected = if k == 0 { Poly::one() } else { Poly::zero() };
            prop_assert_eq!(product.coeff(k).unwrap(), expected);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn recursions_agree_on_random_curves(s in sector(), n in 1u32..=3, seed in 0u64..10_000) {
        let curve = random_curve(s, n, seed);
        let a = superairy::airy::solve(&curve, 5, None).unwrap();
        let r = superairy::str_rec::recurse(&curve, 5).unwrap();
        prop_assert!(r.report.passed());
        prop_assert!(a.differences(&r.table).is_empty());
    }
}
