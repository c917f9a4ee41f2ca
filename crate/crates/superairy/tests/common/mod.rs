//! Shared fixtures: Gaiotto curves and seeded random curves of small height.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superairy::curve::{Sector, SuperCurve};
use superairy::ring::{Poly, Rational};

/// A small nonzero rational such as `-2`, `1/2` or `3`.
fn small_nonzero(rng: &mut ChaCha8Rng) -> Rational {
    let num = [1i64, 2, 3][rng.gen_range(0..3)] * if rng.gen_bool(0.5) { 1 } else { -1 };
    let den = [1i64, 1, 2, 3][rng.gen_range(0..4)];
    Rational::new(num.into(), den.into())
}

fn small(rng: &mut ChaCha8Rng) -> Rational {
    if rng.gen_bool(0.3) {
        Rational::from_integer(0.into())
    } else {
        small_nonzero(rng)
    }
}

fn c(r: Rational) -> Poly {
    Poly::constant(r)
}

/// A valid curve with rational parameters, `phi` and `psi` supported on
/// indices at most 2, and the R-sector `psi` relation imposed exactly.
pub fn random_curve(sector: Sector, n: u32, seed: u64) -> SuperCurve {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = -(n as i32 - 1);
    let mut curve = SuperCurve::new(sector, n).with_tau(top, c(small_nonzero(&mut rng)));
    for l in (top + 1)..=1 {
        curve = curve.with_tau(l, c(small(&mut rng)));
    }
    for l in top..=1 {
        curve = curve.with_q(l, c(small(&mut rng)));
    }
    // D_1 != 0 so that every genus is populated
    curve = curve.with_d(1, c(small_nonzero(&mut rng)));
    for k in 2..=n {
        curve = curve.with_d(k, c(small(&mut rng)));
    }
    for (k, l) in [(1, 1), (1, 2), (2, 2)] {
        curve = curve.with_phi(k, l, c(small(&mut rng)));
    }
    match sector {
        Sector::Ns => {
            for (k, l) in [(0, 1), (0, 2), (1, 2)] {
                curve = curve.with_psi(k, l, c(small(&mut rng)));
            }
        }
        Sector::R => {
            let (a, b, x) = (small(&mut rng), small(&mut rng), small(&mut rng));
            let half = Rational::new(1.into(), 2.into());
            curve = curve
                .with_psi(0, 1, c(a.clone()))
                .with_psi(0, 2, c(b.clone()))
                .with_psi(1, 0, c(-a.clone()))
                .with_psi(2, 0, c(-b.clone()))
                .with_psi(1, 1, c(-(&a * &a) * &half))
                .with_psi(2, 2, c(-(&b * &b) * &half))
                .with_psi(1, 2, c(x.clone()))
                .with_psi(2, 1, c(-x - &a * &b));
        }
    }
    curve.validated().expect("random curve satisfies the constraints")
}
pub mod oracle;
