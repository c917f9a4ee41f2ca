mod common;

use common::oracle::norm_oracle;
use superairy::curve::Sector;
use superairy::fock::{FockElement, Representation};
use superairy::gaiotto::{
    build_gaiotto_curve, lambda_coefficient, nekrasov_series, partition_function, ramond_fermionic_ground_state,
    t_grading_violations, whittaker_residuals, GaiottoError, GaiottoSpec, Normalization,
};
use superairy::ring::{Poly, Rational, H_HALF, LAMBDA, T, TAU0};

const SECTORS: [Sector; 2] = [Sector::Ns, Sector::R];

#[test]
fn curve_parameters() {
    assert_eq!(build_gaiotto_curve(Sector::Ns).d(1), Poly::var(T));
    assert_eq!(build_gaiotto_curve(Sector::R).d(1), Poly::var(T).scale(&Rational::new(1.into(), 2.into())));
    for s in SECTORS {
        assert!(build_gaiotto_curve(s).validate().is_empty());
    }
}

#[test]
fn whittaker_conditions_both_normalizations() {
    for s in SECTORS {
        for mode in [Normalization::Raw, Normalization::Calibrated] {
            let pf = partition_function(&GaiottoSpec::symbolic(s, mode), 8).unwrap();
            let report = whittaker_residuals(&pf, 6);
            assert!(report.passed(), "{s} {mode:?}: {:?}", report.residuals);
            assert!(report.residuals.iter().any(|r| r.operator == "L3"));
        }
    }
    let eig = |s, m| GaiottoSpec::symbolic(s, m).eigenvalue().to_string();
    assert_eq!(eig(Sector::Ns, Normalization::Raw), "tau0*Lambda^2");
    assert_eq!(eig(Sector::R, Normalization::Raw), "1/2*tau0*Lambda^2");
    assert_eq!(eig(Sector::Ns, Normalization::Calibrated), "Lambda^2");
    assert_eq!(eig(Sector::R, Normalization::Calibrated), "1/2*Lambda^2");
}

#[test]
fn whittaker_detects_a_wrong_state() {
    let mut pf = partition_function(&GaiottoSpec::symbolic(Sector::Ns, Normalization::Raw), 6).unwrap();
    pf.z.add_term(superairy::fock::FockMonomial::from_indices(&[2], &[]), &Poly::var(LAMBDA).pow(2));
    assert!(!whittaker_residuals(&pf, 6).passed());
}

#[test]
fn partition_function_shape() {
    for s in SECTORS {
        let pf = partition_function(&GaiottoSpec::symbolic(s, Normalization::Raw), 7).unwrap();
        assert_eq!(pf.z.constant_term(), Poly::one());
        // F is a series in Lambda^2 without constant term
        for (_, c) in pf.free_energy_lambda().terms() {
            for (m, _) in c.terms() {
                let l = m.exponent(LAMBDA);
                assert!(l >= 2 && l % 2 == 0, "{s}: Lambda^{l}");
            }
        }
        assert!(t_grading_violations(s, &pf.table).is_empty());
    }
}

#[test]
fn t_grading_detects_violations() {
    let pf = partition_function(&GaiottoSpec::symbolic(Sector::Ns, Normalization::Raw), 5).unwrap();
    let mut table = pf.table.clone();
    let cell = superairy::airy::Cell { two_g: 2, bos: vec![1], fer: vec![] };
    table.insert(cell, Poly::var(T).pow(2));
    assert_eq!(t_grading_violations(Sector::Ns, &table).len(), 1);
}

#[test]
fn highest_weight_states() {
    for s in SECTORS {
        let rep = Representation::symbolic(s);
        let delta = rep.vacuum_weight();
        let f2 = s.two_f();
        let mut states = vec![FockElement::one()];
        if s == Sector::R {
            states.push(ramond_fermionic_ground_state());
        }
        for v in &states {
            assert_eq!(rep.l(0, 2).apply(v, None), v.scale(&delta), "{s}");
            for n in 1..=3 {
                assert!(rep.l(n, 3).apply(v, None).is_zero());
                // r = 1/2, 3/2, 5/2 (NS) or 1, 2, 3 (R)
                assert!(rep.g(2 * n - f2, 3).unwrap().apply(v, None).is_zero());
            }
        }
    }
}

fn window(p: &Poly, degree: i32, lambda: i32) -> Poly {
    p.filter(|m| m.degree() <= degree && m.exponent(LAMBDA) <= lambda)
}

#[test]
fn norm_series_properties_and_oracle() {
    for s in SECTORS {
        for mode in [Normalization::Raw, Normalization::Calibrated] {
            let pf = partition_function(&GaiottoSpec::symbolic(s, mode), 10).unwrap();
            let report = nekrasov_series(&pf, 8).unwrap();
            assert_eq!(report.norm_coefficient(0), Poly::one());
            assert!(report.lambda_exponents.iter().all(|l| l % 4 == 0), "{:?}", report.lambda_exponents);
            assert_eq!(report.lambda_exponents, vec![0, 4, 8]);
            assert!(report.min_hbar_half_exponent.is_some_and(|e| e >= 0));
            let oracle = window(&norm_oracle(s, &pf.z), report.degree, 8);
            assert_eq!(oracle, report.norm, "{s} {mode:?}");
        }
    }
}

#[test]
fn level_one_norm_value() {
    // Z = 1 + Lambda^2/(tau0 hbar) x_1 + ..., and <x_1|x_1> = hbar
    let pf = partition_function(&GaiottoSpec::symbolic(Sector::Ns, Normalization::Calibrated), 6).unwrap();
    let report = nekrasov_series(&pf, 4).unwrap();
    let expect = &Poly::var(TAU0).pow(-2) * &Poly::h_half_pow(-2);
    assert_eq!(report.norm_coefficient(4), expect);
    assert_eq!(lambda_coefficient(&report.f_nek, 4), Poly::var(TAU0).pow(-2));
    assert!(report.f_nek.terms().all(|(m, _)| m.exponent(H_HALF) >= 0));
}

#[test]
fn order_needs_enough_chi() {
    let pf = partition_function(&GaiottoSpec::symbolic(Sector::R, Normalization::Raw), 6).unwrap();
    assert_eq!(
        nekrasov_series(&pf, 8).unwrap_err(),
        GaiottoError::OrderTooHigh { lambda_order: 8, chi_max: 6, required: 10 }
    );
}
