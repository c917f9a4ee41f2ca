mod common;

use common::oracle::brute_force;
use common::random_curve;
use superairy::airy::{
    coefficient_c, solve, solve_with_report, verify_constraints, AiryError, Cell, CoeffTable, CoefficientKind,
};
use superairy::curve::{Sector, SuperCurve};
use superairy::fock::{build_constraint, Atom, ConstraintKind};
use superairy::ring::{rat, Poly, Rational, Q0, T, TAU0};

fn gaiotto(sector: Sector) -> SuperCurve {
    let d = match sector {
        Sector::Ns => Poly::var(T),
        Sector::R => Poly::var(T).scale(&rat(1, 2)),
    };
    SuperCurve::new(sector, 1).with_tau(0, Poly::var(TAU0)).with_q(0, Poly::var(Q0)).with_d(1, d)
}

fn specialize(p: &Poly) -> Poly {
    p.substitute(TAU0, &Poly::rat(3, 2)).substitute(Q0, &Poly::rat(-2, 3)).substitute(T, &Poly::int(2))
}

fn random_suite() -> Vec<SuperCurve> {
    (0..6u64)
        .map(|seed| {
            let sector = if seed % 2 == 0 { Sector::Ns } else { Sector::R };
            random_curve(sector, 1 + (seed % 3) as u32, seed)
        })
        .collect()
}

#[test]
fn coefficients_match_operator() {
    let half = |p: Poly| p.scale(&rat(1, 2));
    for curve in random_suite() {
        for i in 1..4u32 {
            let ii = i as i64;
            let h = build_constraint(&curve, i, ConstraintKind::H, 8);
            let f = build_constraint(&curve, i, ConstraintKind::F, 8);
            for k in 0..5i64 {
                let want = coefficient_c(&curve, CoefficientKind::Ck, &[k]);
                assert_eq!(h.coeff(&[Atom::Dx(i + k as u32)]).h_half_part(0), want);
                assert_eq!(f.coeff(&[Atom::Dtheta(i + k as u32)]).h_half_part(0), want);
            }
            let c = |kind, a: i64, b: i64| coefficient_c(&curve, kind, &[ii, a, b]);
            for a in 0..6i64 {
                for b in a..6i64 {
                    if a > 0 {
                        let want = if a == b {
                            half(c(CoefficientKind::Cbb, a, a))
                        } else {
                            half(&c(CoefficientKind::Cbb, a, b) + &c(CoefficientKind::Cbb, b, a))
                        };
                        assert_eq!(h.coeff(&[Atom::Dx(a as u32), Atom::Dx(b as u32)]), want);
                    }
                    if a < b {
                        let want = half(&c(CoefficientKind::Cff, a, b) - &c(CoefficientKind::Cff, b, a));
                        assert_eq!(h.coeff(&[Atom::Dtheta(a as u32), Atom::Dtheta(b as u32)]), want);
                    }
                }
            }
            for a in 1..6i64 {
                for b in 0..6i64 {
                    let want = c(CoefficientKind::Cbf, a, b);
                    assert_eq!(f.coeff(&[Atom::Dx(a as u32), Atom::Dtheta(b as u32)]), want);
                }
            }
        }
    }
}

#[test]
fn gaiotto_coefficient_examples() {
    let ns = gaiotto(Sector::Ns);
    for k in 0..4 {
        let d = if k == 0 { 1 } else { 0 };
        assert_eq!(coefficient_c(&ns, CoefficientKind::Ck, &[k]), Poly::var(TAU0).scale(&rat(d, 1)));
        assert_eq!(coefficient_c(&ns, CoefficientKind::Cpk, &[k]), Poly::var(Q0).scale(&rat(d, 1)));
    }
    for (i, j, k) in [(1, 1, 0), (2, 1, 1), (2, 2, 1), (3, 1, 2)] {
        let want = if j + k == i { Poly::one() } else { Poly::zero() };
        assert_eq!(coefficient_c(&ns, CoefficientKind::Cbb, &[i, j, k]), want);
    }
}

#[test]
fn brute_force_agrees_on_gaiotto() {
    for sector in [Sector::Ns, Sector::R] {
        let symbolic = solve(&gaiotto(sector), 5, None).unwrap();
        let numeric_curve = SuperCurve::new(sector, 1)
            .with_tau(0, Poly::rat(3, 2))
            .with_q(0, Poly::rat(-2, 3))
            .with_d(1, specialize(&gaiotto(sector).d(1)));
        let oracle = brute_force(&numeric_curve, 5, 3);
        let mut mine = std::collections::BTreeMap::new();
        for (c, v) in symbolic.entries() {
            let s = specialize(v);
            if !s.is_zero() {
                mine.insert(c.clone(), s.as_constant().unwrap());
            }
        }
        assert_eq!(mine, oracle, "{sector}");
    }
}

#[test]
fn brute_force_agrees_on_random_curves() {
    for curve in random_suite().into_iter().filter(|c| c.n <= 2) {
        let table = solve(&curve, 4, None).unwrap();
        let oracle = brute_force(&curve, 4, 4);
        let mine: std::collections::BTreeMap<Cell, Rational> =
            table.entries().map(|(c, v)| (c.clone(), v.as_constant().unwrap())).collect();
        assert_eq!(mine, oracle);
    }
}

#[test]
fn gaiotto_ns_genus_two_value() {
    // frozen from the brute-force oracle and the operator check
    let table = solve(&gaiotto(Sector::Ns), 5, None).unwrap();
    let want = &Poly::var(TAU0).pow(-1) * &Poly::var(T).pow(2);
    assert_eq!(table.get(4, &[2], &[]), want.scale(&rat(-1, 2)));
}

#[test]
fn verification_detects_a_perturbation() {
    for sector in [Sector::Ns, Sector::R] {
        let curve = gaiotto(sector);
        let table = solve(&curve, 5, None).unwrap();
        assert!(verify_constraints(&curve, &table, 5).passed());
        let mut bad: CoeffTable = table.clone();
        let (cell, v) = table.entries().next().map(|(c, v)| (c.clone(), v.clone())).unwrap();
        bad.insert(cell, &v + &Poly::one());
        assert!(!verify_constraints(&curve, &bad, 5).passed());
    }
}

#[test]
fn random_curves_satisfy_the_constraints() {
    for curve in random_suite() {
        let (table, report) = solve_with_report(&curve, 6, None).unwrap();
        assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
        let v = verify_constraints(&curve, &table, 6);
        assert!(v.passed(), "{:?}", v.failures().collect::<Vec<_>>());
        for k in 1..=curve.n {
            assert_eq!(table.get(2, &[k], &[]), curve.d(k as i64));
        }
        // genus below one vanishes identically
        assert!(table.entries().all(|(c, _)| c.two_g >= 2), "{:?}", table.entries().next());
    }
}

#[test]
fn permuted_reads_apply_signs() {
    let curve = random_curve(Sector::R, 2, 1);
    let table = solve(&curve, 6, None).unwrap();
    let (cell, v) = table.entries().find(|(c, _)| c.fer.len() >= 2).expect("a fermionic cell");
    let mut fer = cell.fer.clone();
    fer.swap(0, 1);
    assert_eq!(table.get(cell.two_g, &cell.bos, &fer), -v.clone());
    let mut bos = cell.bos.clone();
    bos.reverse();
    assert_eq!(table.get(cell.two_g, &bos, &cell.fer), v.clone());
    let repeated = [cell.fer[0], cell.fer[0]];
    assert!(table.get(cell.two_g, &cell.bos, &repeated).is_zero());
}

#[test]
fn gaiotto_support_and_t_grading() {
    for sector in [Sector::Ns, Sector::R] {
        let table = solve(&gaiotto(sector), 7, None).unwrap();
        assert!(!table.is_empty());
        let f2 = sector.two_f();
        for (c, v) in table.entries() {
            // twice the T-degree: 2 (sum I + sum J) + 2 f m
            let twice = 2 * c.bos.iter().chain(&c.fer).sum::<u32>() as i32 + f2 * c.fer.len() as i32;
            assert!(twice <= c.two_g as i32, "{c} exceeds genus");
            for (m, _) in v.terms() {
                assert_eq!(2 * m.exponent(T), twice, "{c}");
            }
        }
    }
}

#[test]
fn index_bound_is_certified() {
    let curve = gaiotto(Sector::Ns);
    assert!(solve(&curve, 7, Some(3)).is_ok());
    let err = solve(&curve, 7, Some(1)).unwrap_err();
    assert!(matches!(err, AiryError::IndexBound { bound: 1, .. }));
    assert!(err.to_string().contains("index bound insufficient"));
    assert!(matches!(solve(&curve, 2, None), Err(AiryError::ChiTooSmall(2))));
}
