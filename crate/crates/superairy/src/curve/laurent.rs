//! Truncated formal Laurent series in one variable carrying a form weight.

use crate::ring::{Poly, Rational};
use std::collections::BTreeMap;
use thiserror::Error;

/// The odd factor a one-form may carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ThetaFactor {
    None,
    /// Squares to `dz`.
    Ns,
    /// Squares to `z dz`.
    R,
}

/// Power of `dz` and optional odd factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FormWeight {
    pub dz: u8,
    pub theta: ThetaFactor,
}

impl FormWeight {
    pub const FUNCTION: FormWeight = FormWeight { dz: 0, theta: ThetaFactor::None };
    pub const ONE_FORM: FormWeight = FormWeight { dz: 1, theta: ThetaFactor::None };

    pub fn theta(t: ThetaFactor) -> FormWeight {
        FormWeight { dz: 0, theta: t }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("coefficient of z^{exponent} requested beyond the known precision z^{precision}")]
    BeyondPrecision { exponent: i32, precision: i32 },
    #[error("cannot combine odd factors {0:?} and {1:?}")]
    ThetaMismatch(ThetaFactor, ThetaFactor),
    #[error("forms of different weight cannot be added")]
    WeightMismatch,
    #[error("residue requires exactly one dz after reducing odd factors")]
    NotAOneForm,
    #[error("primitive of a form with nonzero residue")]
    NonzeroResidue,
    #[error("series has no invertible leading monomial")]
    NotInvertible,
}

/// `sum_k c_k z^k` times the weight. Coefficients below `valuation` are known
/// to vanish; coefficients above `precision` are unknown (`None` means exact).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentForm {
    coeffs: BTreeMap<i32, Poly>,
    valuation: i32,
    precision: Option<i32>,
    pub weight: FormWeight,
}

impl LaurentForm {
    /// The exact zero form of the given weight.
    pub fn zero(weight: FormWeight) -> Self {
        LaurentForm { coeffs: BTreeMap::new(), valuation: i32::MAX, precision: None, weight }
    }

    /// Exact finite sum.
    pub fn exact<I: IntoIterator<Item = (i32, Poly)>>(terms: I, weight: FormWeight) -> Self {
        let mut out = Self::zero(weight);
        for (k, c) in terms {
            out.add_coeff(k, &c);
        }
        out.reset_valuation();
        out
    }

    pub fn monomial(k: i32, c: Poly, weight: FormWeight) -> Self {
        Self::exact([(k, c)], weight)
    }

    fn reset_valuation(&mut self) {
        self.valuation = self.coeffs.keys().next().copied().unwrap_or(i32::MAX);
    }

    fn add_coeff(&mut self, k: i32, c: &Poly) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(k).or_default();
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&k);
        }
    }

    /// Marks everything above `precision` as unknown and drops it.
    pub fn truncated(&self, precision: i32) -> Self {
        let p = self.precision.map_or(precision, |q| q.min(precision));
        LaurentForm {
            coeffs: self.coeffs.range(..=p).map(|(k, c)| (*k, c.clone())).collect(),
            valuation: self.valuation,
            precision: Some(p),
            weight: self.weight,
        }
    }

    pub fn precision(&self) -> Option<i32> {
        self.precision
    }

    /// Lower bound on the exponents present.
    pub fn valuation(&self) -> i32 {
        self.valuation
    }

    pub fn is_exact(&self) -> bool {
        self.precision.is_none()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `z^k`; an error if `k` lies beyond the known precision.
    pub fn coeff(&self, k: i32) -> Result<Poly, SeriesError> {
        if let Some(p) = self.precision {
            if k > p {
                return Err(SeriesError::BeyondPrecision { exponent: k, precision: p });
            }
        }
        Ok(self.coeffs.get(&k).cloned().unwrap_or_default())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i32, &Poly)> {
        self.coeffs.iter()
    }

    pub fn add(&self, other: &LaurentForm) -> Result<LaurentForm, SeriesError> {
        if self.weight != other.weight {
            return Err(SeriesError::WeightMismatch);
        }
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            out.add_coeff(*k, c);
        }
        out.precision = min_opt(self.precision, other.precision);
        if let Some(p) = out.precision {
            out.coeffs = out.coeffs.range(..=p).map(|(k, c)| (*k, c.clone())).collect();
        }
        out.valuation = self.valuation.min(other.valuation);
        Ok(out)
    }

    pub fn scale(&self, s: &Poly) -> LaurentForm {
        let mut out = LaurentForm { coeffs: BTreeMap::new(), ..self.clone() };
        for (k, c) in &self.coeffs {
            out.add_coeff(*k, &(c * s));
        }
        out
    }

    /// Multiplies by `z^shift`.
    pub fn shift(&self, shift: i32) -> LaurentForm {
        LaurentForm {
            coeffs: self.coeffs.iter().map(|(k, c)| (k + shift, c.clone())).collect(),
            valuation: self.valuation.saturating_add(shift),
            precision: self.precision.map(|p| p + shift),
            weight: self.weight,
        }
    }

    /// Product with odd-factor reduction: two NS factors give `dz`, two R
    /// factors give `z dz`.
    pub fn mul(&self, other: &LaurentForm) -> Result<LaurentForm, SeriesError> {
        let (theta, dz_extra, z_extra) = match (self.weight.theta, other.weight.theta) {
            (ThetaFactor::None, t) | (t, ThetaFactor::None) => (t, 0, 0),
            (ThetaFactor::Ns, ThetaFactor::Ns) => (ThetaFactor::None, 1, 0),
            (ThetaFactor::R, ThetaFactor::R) => (ThetaFactor::None, 1, 1),
            (a, b) => return Err(SeriesError::ThetaMismatch(a, b)),
        };
        let weight = FormWeight { dz: self.weight.dz + other.weight.dz + dz_extra, theta };
        let mut out = LaurentForm::zero(weight);
        let precision = match (self.precision, other.precision) {
            (None, None) => None,
            (Some(p), None) => Some(p.saturating_add(other.valuation)),
            (None, Some(q)) => Some(q.saturating_add(self.valuation)),
            (Some(p), Some(q)) => Some(p.saturating_add(other.valuation).min(q.saturating_add(self.valuation))),
        };
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let k = a + b;
                if precision.is_none_or(|p| k <= p) {
                    out.add_coeff(k + z_extra, &(ca * cb));
                }
            }
        }
        out.valuation =
            if self.is_zero() || other.is_zero() { i32::MAX } else { self.valuation + other.valuation + z_extra };
        out.precision = precision.map(|p| p + z_extra);
        Ok(out)
    }

    /// Coefficient of `z^-1 dz`.
    pub fn residue(&self) -> Result<Poly, SeriesError> {
        if self.weight.dz != 1 || self.weight.theta != ThetaFactor::None {
            return Err(SeriesError::NotAOneForm);
        }
        self.coeff(-1)
    }

    /// `d/dz` of the coefficient function; the weight is unchanged.
    pub fn derivative(&self) -> LaurentForm {
        let mut out = LaurentForm::zero(self.weight);
        for (k, c) in &self.coeffs {
            out.add_coeff(k - 1, &c.scale(&Rational::from_integer((*k).into())));
        }
        out.precision = self.precision.map(|p| p - 1);
        out.valuation = if self.is_zero() { i32::MAX } else { self.valuation - 1 };
        out
    }

    /// Primitive of a one-form, vanishing constant term; requires zero residue.
    pub fn primitive(&self) -> Result<LaurentForm, SeriesError> {
        if self.weight != FormWeight::ONE_FORM {
            return Err(SeriesError::NotAOneForm);
        }
        if !self.coeff(-1)?.is_zero() {
            return Err(SeriesError::NonzeroResidue);
        }
        let mut out = LaurentForm::zero(FormWeight::FUNCTION);
        for (k, c) in &self.coeffs {
            out.add_coeff(k + 1, &c.scale(&Rational::new(1.into(), (k + 1).into())));
        }
        out.precision = self.precision.map(|p| p + 1);
        out.valuation = if self.is_zero() { i32::MAX } else { self.valuation + 1 };
        Ok(out)
    }

    /// Multiplicative inverse of the coefficient series to precision
    /// `valuation(inverse) + order`. The leading coefficient must be a unit monomial.
    pub fn inverse(&self, order: i32) -> Result<LaurentForm, SeriesError> {
        let (&v, lead) = self.coeffs.iter().next().ok_or(SeriesError::NotInvertible)?;
        let lead_inv = lead.unit_inverse().ok_or(SeriesError::NotInvertible)?;
        let known = self.precision.map_or(i32::MAX, |p| p - v);
        let order = order.min(known);
        // (sum_k a_k z^(v+k))^-1 = z^-v sum_j b_j z^j
        let mut b: Vec<Poly> = Vec::with_capacity(order.max(0) as usize + 1);
        for j in 0..=order {
            let mut acc = if j == 0 { Poly::one() } else { Poly::zero() };
            for k in 1..=j {
                let a = self.coeffs.get(&(v + k)).cloned().unwrap_or_default();
                if !a.is_zero() {
                    acc -= &(&a * &b[(j - k) as usize]);
                }
            }
            b.push(&acc * &lead_inv);
        }
        let mut out = LaurentForm::zero(FormWeight::FUNCTION);
        for (j, c) in b.iter().enumerate() {
            out.add_coeff(j as i32 - v, c);
        }
        out.valuation = -v;
        out.precision = Some(order - v);
        Ok(out)
    }

    /// Drops the weight, viewing the form as its coefficient function.
    pub fn with_weight(&self, weight: FormWeight) -> LaurentForm {
        LaurentForm { weight, ..self.clone() }
    }
}

fn min_opt(a: Option<i32>, b: Option<i32>) -> Option<i32> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_of_simple_pole() {
        let f = LaurentForm::monomial(-1, Poly::one(), FormWeight::ONE_FORM);
        assert_eq!(f.residue().unwrap(), Poly::one());
        let g = LaurentForm::monomial(3, Poly::one(), FormWeight::ONE_FORM);
        assert!(g.residue().unwrap().is_zero());
    }

    #[test]
    fn ramond_theta_squares_to_z_dz() {
        let eta0 = LaurentForm::monomial(-1, Poly::one(), FormWeight::theta(ThetaFactor::R));
        let sq = eta0.mul(&eta0).unwrap();
        assert_eq!(sq.weight, FormWeight::ONE_FORM);
        assert_eq!(sq.residue().unwrap(), Poly::one());
    }

    #[test]
    fn inverse_of_geometric_series() {
        // 1 - z has inverse 1 + z + z^2 + ...
        let f = LaurentForm::exact([(0, Poly::one()), (1, Poly::int(-1))], FormWeight::FUNCTION);
        let inv = f.inverse(5).unwrap();
        for k in 0..=5 {
            assert_eq!(inv.coeff(k).unwrap(), Poly::one());
        }
        assert!(inv.coeff(6).is_err());
        let prod = f.mul(&inv).unwrap();
        assert_eq!(prod.coeff(0).unwrap(), Poly::one());
        assert_eq!(prod.coeff(3).unwrap(), Poly::zero());
        assert_eq!(prod.precision(), Some(5));
    }
}
