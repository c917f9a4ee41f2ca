mod common;

use common::random_curve;
use superairy::airy::{solve, Cell};
use superairy::curve::{Sector, SuperCurve};
use superairy::ring::{rat, Poly, Q0, T, TAU0};
use superairy::str_rec::{kernel, loop_equations, recurse, KernelKind, StrError};

fn gaiotto(sector: Sector) -> SuperCurve {
    let d = match sector {
        Sector::Ns => Poly::var(T),
        Sector::R => Poly::var(T).scale(&rat(1, 2)),
    };
    SuperCurve::new(sector, 1).with_tau(0, Poly::var(TAU0)).with_q(0, Poly::var(Q0)).with_d(1, d)
}

fn assert_agree(curve: &SuperCurve, chi: u32) {
    let airy = solve(curve, chi, None).unwrap();
    let out = recurse(curve, chi).unwrap();
    assert!(out.report.passed(), "{:?}", out.report);
    let diffs = airy.differences(&out.table);
    assert!(diffs.is_empty(), "cells differ: {:?}", diffs.iter().map(Cell::to_string).collect::<Vec<_>>());
}

#[test]
fn agrees_with_constraint_solver_on_gaiotto() {
    for sector in [Sector::Ns, Sector::R] {
        assert_agree(&gaiotto(sector), 8);
    }
}

#[test]
fn agrees_with_constraint_solver_on_random_curves() {
    for seed in 0..8u64 {
        for sector in [Sector::Ns, Sector::R] {
            assert_agree(&random_curve(sector, 1 + (seed % 3) as u32, seed), 6);
        }
    }
}

#[test]
fn fermionic_cells_are_exercised() {
    let out = recurse(&gaiotto(Sector::R), 7).unwrap();
    let fer = out.table.entries().filter(|(c, _)| !c.fer.is_empty()).count();
    assert!(fer >= 5, "only {fer} fermionic cells");
    assert!(out.report.checks > 0);
}

#[test]
fn loop_equations_hold_and_detect_errors() {
    for seed in 0..4u64 {
        for sector in [Sector::Ns, Sector::R] {
            let curve = random_curve(sector, 1 + (seed % 3) as u32, seed);
            let table = recurse(&curve, 7).unwrap().table;
            let (checked, bad) = loop_equations(&curve, &table, 7).unwrap();
            assert!(checked > 100);
            assert!(bad.is_empty(), "{:?}", bad.first());

            let mut broken = table.clone();
            let (cell, v) = table.entries().find(|(c, _)| c.chi() == 5).map(|(c, v)| (c.clone(), v.clone())).unwrap();
            broken.insert(cell, &v + &Poly::one());
            let (_, bad) = loop_equations(&curve, &broken, 7).unwrap();
            assert!(!bad.is_empty());
        }
    }
}

#[test]
fn kernel_vanishing_order() {
    for n in 1..=3 {
        for sector in [Sector::Ns, Sector::R] {
            let curve = random_curve(sector, n, 7);
            let k = kernel(&curve, KernelKind::BB, 1, 6).unwrap();
            assert_eq!(k.valuation(), n as i32 + 1);
            let k = kernel(&curve, KernelKind::BF, 1, 6).unwrap();
            assert_eq!(k.valuation(), n as i32 + sector.two_f());
        }
    }
}

#[test]
fn small_chi_rejected() {
    assert_eq!(recurse(&gaiotto(Sector::Ns), 2).unwrap_err(), StrError::ChiTooSmall(2));
}
