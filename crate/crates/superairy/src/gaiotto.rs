//! Gaiotto (Whittaker) vectors from the super Airy structure of the Gaiotto
//! curves, their Whittaker conditions and the Nekrasov-norm series.
//!
//! Coefficients are computed in terms of `T` and then regraded with
//! `T^d -> Lambda^(2d) hbar^-d`. Both `Lambda` and `hbar^(1/2)` carry degree
//! one, so the regrading preserves the Fock grading and every truncation is
//! a truncation in total degree.
//!
//! The raw normalization uses the constraints exactly as built, which gives
//! `L_1 Z = hbar tilde D_1 Z = tau0 Lambda^2 Z` (NS) and `tau0 Lambda^2/2 Z`
//! (R). The calibrated normalization replaces `D_1` by `D_1 / tau0`, which
//! makes the eigenvalues `Lambda^2` and `Lambda^2/2`.

use crate::airy::{self, AiryError, Cell, CoeffTable};
use crate::curve::{Sector, SuperCurve};
use crate::fock::{d_tilde, dagger_pair, FockElement, GeneratorKind, OperatorExpr, Representation};
use crate::par;
use crate::ring::{Poly, Rational, H_HALF, LAMBDA, Q0, T, TAU0};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GaiottoError {
    #[error(transparent)]
    Airy(#[from] AiryError),
    #[error("Lambda order {lambda_order} needs chi_max >= {required}, got {chi_max}")]
    OrderTooHigh { lambda_order: u32, chi_max: u32, required: u32 },
}

/// Raw keeps the curve as given; calibrated rescales `D_1 -> D_1 / tau0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Normalization {
    Raw,
    Calibrated,
}

impl Normalization {
    pub fn parse(s: &str) -> Option<Normalization> {
        match s {
            "raw" => Some(Normalization::Raw),
            "calibrated" => Some(Normalization::Calibrated),
            _ => None,
        }
    }
}

/// A Gaiotto vector: sector, zero-mode values (symbols or rationals) and
/// normalization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaiottoSpec {
    pub sector: Sector,
    pub tau0: Poly,
    pub q0: Poly,
    pub normalization: Normalization,
}

impl GaiottoSpec {
    /// Symbolic `tau0` and `Q0`.
    pub fn symbolic(sector: Sector, normalization: Normalization) -> Self {
        GaiottoSpec { sector, tau0: Poly::var(TAU0), q0: Poly::var(Q0), normalization }
    }

    /// The curve with this spec's parameters and normalization.
    pub fn curve(&self) -> SuperCurve {
        let base = build_gaiotto_curve(self.sector);
        let d1 = match self.normalization {
            Normalization::Raw => base.d(1),
            Normalization::Calibrated => &base.d(1) * &self.tau0.pow(-1),
        };
        SuperCurve::new(self.sector, 1).with_tau(0, self.tau0.clone()).with_q(0, self.q0.clone()).with_d(1, d1)
    }

    pub fn representation(&self) -> Representation {
        Representation { sector: self.sector, tau0: self.tau0.clone(), q0: self.q0.clone() }
    }

    /// The `L_1` eigenvalue `hbar tilde D_1`, regraded to `Lambda`.
    pub fn eigenvalue(&self) -> Poly {
        (&Poly::h_half_pow(2) * &d_tilde(&self.curve(), 1)).regrade()
    }
}

/// The Gaiotto curve: `N = 1`, `tau_l = tau0 delta_{l,0}`, `Q_l = Q0 delta_{l,0}`,
/// `D_1 = (1+2f)/2 T`, no `phi` or `psi`.
pub fn build_gaiotto_curve(sector: Sector) -> SuperCurve {
    let d1 = match sector {
        Sector::Ns => Poly::var(T),
        Sector::R => Poly::var(T).scale(&Rational::new(1.into(), 2.into())),
    };
    SuperCurve::new(sector, 1).with_tau(0, Poly::var(TAU0)).with_q(0, Poly::var(Q0)).with_d(1, d1)
}

/// Every index of a nonzero cell is at most `g`, so `floor((chi_max - 1)/2)`
/// bounds all indices through `chi_max`.
pub fn default_index_bound(chi_max: u32) -> u32 {
    chi_max.saturating_sub(1) / 2
}

/// Cells violating the `T`-grading of the Gaiotto coefficients: the `T`-degree
/// must be `sum I + sum J + 2 f m`, and cells where that sum exceeds `g`
/// must vanish.
pub fn t_grading_violations(sector: Sector, table: &CoeffTable) -> Vec<Cell> {
    let mut out = Vec::new();
    for (cell, v) in table.entries() {
        // doubled: 2 (sum I + sum J) + 2f |J|
        let two_d = 2 * (cell.bos.iter().sum::<u32>() + cell.fer.iter().sum::<u32>()) as i32
            + sector.two_f() * cell.fer.len() as i32;
        let graded = v.terms().all(|(m, _)| 2 * m.exponent(T) == two_d);
        if !graded || two_d > cell.two_g as i32 {
            out.push(cell.clone());
        }
    }
    out
}

/// `Z = exp(F)` through Fock degree `chi_max - 2`, with `F` from the Gaiotto
/// coefficient table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionFunction {
    pub spec: GaiottoSpec,
    pub chi_max: u32,
    pub table: CoeffTable,
    /// `F` in terms of `T`.
    pub free_energy: FockElement,
    /// `Z` in terms of `Lambda`; exact through degree [`Self::degree`].
    pub z: FockElement,
}

impl PartitionFunction {
    /// Largest Fock degree at which `z` is exact.
    pub fn degree(&self) -> i32 {
        self.chi_max as i32 - 2
    }

    /// `F` regraded to `Lambda`.
    pub fn free_energy_lambda(&self) -> FockElement {
        self.free_energy.map_coeffs(Poly::regrade)
    }
}

/// Solves the Gaiotto constraints through `chi_max` (with the index bound
/// certified) and assembles `Z` as a `Lambda`-series.
pub fn partition_function(spec: &GaiottoSpec, chi_max: u32) -> Result<PartitionFunction, GaiottoError> {
    let curve = spec.curve();
    let table = airy::solve(&curve, chi_max, Some(default_index_bound(chi_max)))?;
    let free_energy = table.free_energy();
    let z = free_energy.exp_truncated(chi_max as i32 - 2).map_coeffs(Poly::regrade);
    Ok(PartitionFunction { spec: spec.clone(), chi_max, table, free_energy, z })
}

/// Residual of one Whittaker condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WhittakerResidual {
    /// `"L1-lambda"`, `"L3"`, `"G5/2"`, ...
    pub operator: String,
    /// Smallest `Lambda` exponent of a nonzero residual term, if any, within
    /// the checked window.
    pub lowest_lambda: Option<i32>,
}

/// Whittaker conditions checked through `lambda_order` at every Fock degree
/// up to `degree`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WhittakerReport {
    pub eigenvalue: String,
    pub lambda_order: u32,
    pub degree: i32,
    pub residuals: Vec<WhittakerResidual>,
}

impl WhittakerReport {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| r.lowest_lambda.is_none())
    }
}

fn lambda_window(v: &FockElement, degree: i32, lambda_order: u32) -> Option<i32> {
    v.truncate(degree)
        .terms()
        .flat_map(|(_, c)| c.terms().map(|(m, _)| m.exponent(LAMBDA)).collect::<Vec<_>>())
        .filter(|l| *l <= lambda_order as i32)
        .min()
}

/// Applies `L_1 - lambda`, `L_n` (`n >= 2`) and the `G_r` constrained in the
/// sector (`r = i + f`, `i >= 1`) to `Z`. A residual term counts when its
/// Fock degree is at most `chi_max - 1`, where `Z` is exact, and its
/// `Lambda` exponent at most `lambda_order`.
pub fn whittaker_residuals(pf: &PartitionFunction, lambda_order: u32) -> WhittakerReport {
    let rep = pf.spec.representation();
    let lambda = pf.spec.eigenvalue();
    let degree = pf.degree() + 1;
    let (kb, kf) = pf.z.max_index();
    let cutoff = kb.max(kf);
    let top = cutoff as i32 + 2;
    let f2 = pf.spec.sector.two_f();
    let mut jobs: Vec<(GeneratorKind, i32)> = (1..=top).map(|n| (GeneratorKind::L, 2 * n)).collect();
    jobs.extend((1..=top).map(|i| (GeneratorKind::G, 2 * i + f2)));
    let residuals = par::map(&jobs, |(kind, index2)| {
        let mut op = rep.generator(*kind, *index2, cutoff).expect("index parity matches the sector");
        let name = match kind {
            GeneratorKind::L if *index2 == 2 => {
                op.add_assign(&OperatorExpr::constant(-lambda.clone()));
                "L1-lambda".to_string()
            }
            GeneratorKind::L => format!("L{}", index2 / 2),
            GeneratorKind::G if index2 % 2 == 0 => format!("G{}", index2 / 2),
            GeneratorKind::G => format!("G{index2}/2"),
        };
        let v = op.apply(&pf.z, Some(degree));
        WhittakerResidual { operator: name, lowest_lambda: lambda_window(&v, degree, lambda_order) }
    });
    WhittakerReport { eigenvalue: lambda.to_string(), lambda_order, degree, residuals }
}

/// The norm `(Z|Z)` and `F_Nek = hbar log (Z|Z)` as truncated series.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormReport {
    pub lambda_order: u32,
    /// Both series are exact at total degree at most this (`Lambda` and
    /// `hbar^(1/2)` count one each).
    pub degree: i32,
    #[serde(skip)]
    pub norm: Poly,
    #[serde(skip)]
    pub f_nek: Poly,
    /// `Lambda` exponents with a nonzero coefficient in `(Z|Z)`.
    pub lambda_exponents: Vec<i32>,
    /// Smallest `hbar^(1/2)` exponent in `F_Nek`.
    pub min_hbar_half_exponent: Option<i32>,
}

impl NormReport {
    /// Coefficient of `Lambda^k` in `(Z|Z)`.
    pub fn norm_coefficient(&self, k: i32) -> Poly {
        lambda_coefficient(&self.norm, k)
    }

    /// Coefficient of `Lambda^k` in `F_Nek`.
    pub fn f_nek_coefficient(&self, k: i32) -> Poly {
        lambda_coefficient(&self.f_nek, k)
    }
}

/// The coefficient of `Lambda^k`, with `Lambda` removed.
pub fn lambda_coefficient(p: &Poly, k: i32) -> Poly {
    Poly::from_terms(
        p.terms().filter(|(m, _)| m.exponent(LAMBDA) == k).map(|(m, c)| (m.with_exponent(LAMBDA, 0), c.clone())),
    )
}

fn window(p: &Poly, degree: i32, lambda_order: u32) -> Poly {
    p.filter(|m| m.degree() <= degree && m.exponent(LAMBDA) <= lambda_order as i32)
}

/// `(Z|Z)` through `Lambda^lambda_order` and `F_Nek = hbar log (Z|Z)`.
/// The pairing of `Z` is exact through its own degree, so `chi_max` must be
/// at least `lambda_order + 2` for the top order to carry its leading terms.
pub fn nekrasov_series(pf: &PartitionFunction, lambda_order: u32) -> Result<NormReport, GaiottoError> {
    let required = lambda_order + 2;
    if pf.chi_max < required {
        return Err(GaiottoError::OrderTooHigh { lambda_order, chi_max: pf.chi_max, required });
    }
    let degree = pf.degree();
    let sector = pf.spec.sector;
    let terms: Vec<FockElement> = pf.z.terms().map(|(m, c)| FockElement::monomial(m.clone(), c.clone())).collect();
    let parts = par::map(&terms, |t| dagger_pair(sector, t, &pf.z));
    let mut norm = Poly::zero();
    for p in &parts {
        norm += p;
    }
    let norm = window(&norm, degree, lambda_order);

    // log(1 + x) with x = O(Lambda^4)
    let x = &norm - &Poly::one();
    let mut log = Poly::zero();
    let mut power = Poly::one();
    for k in 1..=(lambda_order / 4).max(1) as i64 {
        power = window(&(&power * &x), degree, lambda_order);
        let sign = if k % 2 == 1 { 1 } else { -1 };
        log += &power.scale(&Rational::new(sign.into(), k.into()));
    }
    let f_nek = &Poly::h_half_pow(2) * &log;
    let mut lambda_exponents: Vec<i32> = norm.terms().map(|(m, _)| m.exponent(LAMBDA)).collect();
    lambda_exponents.sort_unstable();
    lambda_exponents.dedup();
    let min_hbar_half_exponent = f_nek.terms().map(|(m, _)| m.exponent(H_HALF)).min();
    Ok(NormReport { lambda_order, degree, norm, f_nek, lambda_exponents, min_hbar_half_exponent })
}

/// The fermionic Ramond highest-weight state `theta_0 = sqrt(2)^-1 |Delta>_-`.
/// The partition function of a super Airy structure is bosonic, so only this
/// level-zero state of the fermionic Ramond vector is exposed.
pub fn ramond_fermionic_ground_state() -> FockElement {
    FockElement::from_indices(&[], &[0], Poly::one())
}
