//! The bilinear pairing `<u|v>` induced by `J_a^dagger = J_{-a}` and
//! `Gamma_r^dagger = Gamma_{-r}` with `<1|1> = 1`.

use super::element::{FockElement, FockMonomial};
use crate::curve::Sector;
use crate::ring::{int, Poly, Rational};

/// `<m|m>` for one basis monomial; distinct monomials are orthogonal.
pub fn monomial_norm(sector: Sector, m: &FockMonomial) -> Poly {
    let mut c = Rational::from_integer(1.into());
    let mut h = 0;
    let mut k = 0;
    while k < m.bos.len() {
        let a = m.bos[k];
        let mut mult = 0;
        while k < m.bos.len() && m.bos[k] == a {
            mult += 1;
            k += 1;
        }
        // (J_a / a)^mult acting on x_a^mult
        for j in 1..=mult {
            c *= Rational::new(j.into(), (a as i64).into());
        }
        h += 2 * mult;
    }
    for &j in &m.fer {
        // in the R sector the zero mode pairs as <theta_0|theta_0> = 2 hbar
        if sector == Sector::R && j == 0 {
            c *= int(2);
        }
        h += 2;
    }
    Poly::h_half_pow(h).scale(&c)
}

/// The pairing `<bra|ket>`, bilinear in the coefficients.
pub fn dagger_pair(sector: Sector, bra: &FockElement, ket: &FockElement) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in bra.terms() {
        let d = ket.coeff(m);
        if !d.is_zero() {
            out += &(&(c * &d) * &monomial_norm(sector, m));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Mode, Representation};

    #[test]
    fn norm_matches_adjoint_modes() {
        // <x_1^2 theta_0|x_1^2 theta_0> via modes: annihilate the ket with the dagger of the bra
        for sector in [Sector::Ns, Sector::R] {
            let rep = Representation::symbolic(sector);
            let m = FockMonomial::from_indices(&[1, 1, 2], &[0]);
            let ket = FockElement::monomial(m.clone(), Poly::one());
            let f2 = sector.two_f();
            let mut v = ket.clone();
            for mode in [Mode::J(1), Mode::J(1), Mode::J(2)] {
                v = rep.apply_mode(mode, &v).unwrap();
            }
            v = rep.apply_mode(Mode::Gamma(f2), &v).unwrap();
            // theta_0 = Gamma_{-1/2} 1 in NS but 2 Gamma_0 1 in R
            let zero_mode = if sector == Sector::R { 2 } else { 1 };
            let direct = v.constant_term().scale(&Rational::new(zero_mode.into(), 2.into()));
            assert_eq!(dagger_pair(sector, &ket, &ket), direct);
        }
    }
}
