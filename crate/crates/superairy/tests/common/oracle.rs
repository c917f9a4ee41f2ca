//! Brute-force oracle: at each level, every candidate cell gets a fresh
//! unknown, the constraints are applied to `exp(F)`, and the resulting linear
//! system is solved by Gaussian elimination over the rationals. Shares only
//! the operator definitions with the production solver.

use std::collections::BTreeMap;
use superairy::airy::{cell_term, Cell};
use superairy::curve::{Sector, SuperCurve};
use superairy::fock::{build_constraint, Atom, ConstraintKind, FockElement, OperatorExpr};
use superairy::ring::{symbol, Monomial, Poly, Rational};

fn multisets(n: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for a in lo..=hi {
        for mut rest in multisets(n - 1, a, hi) {
            rest.insert(0, a);
            out.push(rest);
        }
    }
    out
}

fn subsets(n: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for a in lo..=hi {
        for mut rest in subsets(n - 1, a + 1, hi) {
            rest.insert(0, a);
            out.push(rest);
        }
    }
    out
}

/// All cells at level `chi` with indices at most `index_max`.
pub fn candidate_cells(chi: u32, index_max: u32) -> Vec<Cell> {
    let mut out = Vec::new();
    for two_g in 0..chi {
        let rest = chi - two_g;
        for m2 in (0..=rest).step_by(2) {
            let n = rest - m2;
            for bos in multisets(n as usize, 1, index_max) {
                for fer in subsets(m2 as usize, 0, index_max) {
                    out.push(Cell { two_g, bos: bos.clone(), fer });
                }
            }
        }
    }
    out
}

/// Solves a linear system given as rows `(coefficients, constant)` meaning
/// `sum c_j u_j + constant = 0`. Returns `None` unless the system is
/// consistent with a unique solution.
pub fn solve_linear(rows: Vec<(BTreeMap<usize, Rational>, Rational)>, unknowns: usize) -> Option<Vec<Rational>> {
    let zero = Rational::from_integer(0.into());
    let mut m: Vec<Vec<Rational>> = rows
        .into_iter()
        .map(|(cs, k)| {
            let mut r = vec![zero.clone(); unknowns + 1];
            for (j, c) in cs {
                r[j] = c;
            }
            r[unknowns] = -k;
            r
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivots = Vec::new();
    for col in 0..unknowns {
        let Some(p) = (pivot_row..m.len()).find(|&r| m[r][col] != zero) else { continue };
        m.swap(pivot_row, p);
        let inv = m[pivot_row][col].recip();
        for x in m[pivot_row].iter_mut() {
            *x *= &inv;
        }
        let pivot = m[pivot_row].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != pivot_row && row[col] != zero {
                let f = row[col].clone();
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x -= &f * p;
                }
            }
        }
        pivots.push(col);
        pivot_row += 1;
    }
    if pivots.len() < unknowns || m[pivot_row..].iter().any(|r| r[unknowns] != zero) {
        return None;
    }
    Some((0..unknowns).map(|j| m[j][unknowns].clone()).collect())
}

/// Brute-force table for a curve whose parameters are rational constants.
/// Panics if some level is not uniquely solvable within `index_max`.
pub fn brute_force(curve: &SuperCurve, chi_max: u32, index_max: u32) -> BTreeMap<Cell, Rational> {
    let mut known: BTreeMap<Cell, Rational> = BTreeMap::new();
    let i_max = 2 * index_max + 2 * curve.support_width() + 4;
    for chi in 3..=chi_max {
        let cells = candidate_cells(chi, index_max);
        let syms: Vec<usize> = (0..cells.len()).map(|j| symbol(&format!("oracle_u{j}"))).collect();
        let mut free = FockElement::zero();
        for (c, v) in &known {
            free.add_assign(&cell_term(c, &Poly::constant(v.clone())));
        }
        for (c, s) in cells.iter().zip(&syms) {
            free.add_assign(&cell_term(c, &Poly::var(*s)));
        }
        let z = free.exp_truncated(chi as i32 - 2);
        let mut rows: BTreeMap<(String, Monomial), (BTreeMap<usize, Rational>, Rational)> = BTreeMap::new();
        for kind in [ConstraintKind::H, ConstraintKind::F] {
            for i in 1..=i_max {
                let op = build_constraint(curve, i, kind, index_max);
                let hz = op.apply(&z, Some(chi as i32 - 1)).component(chi as i32 - 1);
                for (fm, coeff) in hz.terms() {
                    for (mono, c) in coeff.terms() {
                        let hit = syms.iter().position(|s| mono.exponent(*s) != 0);
                        let rest = match hit {
                            Some(j) => mono.with_exponent(syms[j], 0),
                            None => mono.clone(),
                        };
                        let row = rows.entry((format!("{kind:?}{i}{fm:?}"), rest)).or_default();
                        match hit {
                            Some(j) => *row.0.entry(j).or_insert_with(|| Rational::from_integer(0.into())) += c,
                            None => row.1 += c,
                        }
                    }
                }
            }
        }
        let sol = solve_linear(rows.into_values().collect(), cells.len())
            .unwrap_or_else(|| panic!("level {chi} not uniquely solvable within index {index_max}"));
        for (c, v) in cells.into_iter().zip(sol) {
            if v != Rational::from_integer(0.into()) {
                known.insert(c, v);
            }
        }
    }
    known
}

/// `(Z|Z)` by acting with the adjoint of every term of `Z` on `Z` through
/// the mode operators: `x_a^dagger = hbar d/dx_a / a`, `theta_j^dagger =
/// hbar d/dtheta_j`, and in the Ramond sector `theta_0^dagger = 2 Gamma_0`.
pub fn norm_oracle(sector: Sector, z: &FockElement) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in z.terms() {
        let mut v = z.clone();
        for &a in &m.bos {
            v = OperatorExpr::atom(Atom::Dx(a), Poly::rat(1, a as i64)).apply(&v, None);
        }
        for &j in &m.fer {
            let op = if sector == Sector::R && j == 0 {
                let mut g0 = OperatorExpr::atom(Atom::Theta(0), Poly::one());
                g0.add_assign(&OperatorExpr::atom(Atom::Dtheta(0), Poly::int(2)));
                g0
            } else {
                OperatorExpr::atom(Atom::Dtheta(j), Poly::one())
            };
            v = op.apply(&v, None);
        }
        out += &(c * &v.constant_term());
    }
    out
}
