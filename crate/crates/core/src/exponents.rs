//! Radial variable exponents, power weights, and reciprocal exponent
//! arithmetic.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::matrices::{MatrixError, MatrixFamily};

/// Below this magnitude a reciprocal exponent is treated as zero, i.e. the
/// exponent itself is infinite.
pub const INFINITE_EXPONENT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExponentError {
    #[error("exponent must stay above 1, but reaches {min} on its range")]
    NotAboveOne { min: f64 },
    #[error("exponent takes a non-finite value")]
    NonFinite,
    #[error("piecewise exponent needs sorted positive breaks and one more value than breaks")]
    MalformedPiecewise,
    #[error("cannot combine an empty list of exponents")]
    Empty,
    #[error("reciprocal difference is negative ({value:e}) at radius {radius}")]
    NegativeDifference { radius: f64, value: f64 },
    #[error("scale factor must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("weight exponent {gamma} must exceed -{n} for a finite ball measure")]
    WeightDomain { gamma: f64, n: usize },
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Shape of a radial function `r ↦ p(r)` on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `p_inf + (p0 - p_inf) / ln(e + r)`.
    LogInterp {
        p0: f64,
        p_inf: f64,
    },
    /// `values[i]` on `(breaks[i-1], breaks[i]]`, with the outer pieces
    /// extending to 0 and ∞.
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    /// `base(factor · r)`.
    Dilated {
        base: Box<Profile>,
        factor: f64,
    },
    /// `1 / Σ 1/parts[i](r)`.
    Harmonic {
        parts: Vec<Profile>,
    },
}

/// Log-Hölder constants at the origin and at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogHolder {
    pub at_origin: f64,
    pub at_infinity: f64,
}

/// `ln(e + r)` without overflow for huge `r`.
fn ln_e_plus(r: f64) -> f64 {
    if r > 1.0 {
        r.ln() + (E / r).ln_1p()
    } else {
        1.0 + (r / E).ln_1p()
    }
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn log_interp(p0: f64, p_inf: f64) -> Self {
        Profile::LogInterp { p0, p_inf }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::LogInterp { p0, p_inf } => {
                if r.is_infinite() {
                    *p_inf
                } else {
                    p_inf + (p0 - p_inf) / ln_e_plus(r)
                }
            }
            Profile::Piecewise { breaks, values } => {
                let idx = breaks.partition_point(|b| *b < r);
                values[idx]
            }
            Profile::Dilated { base, factor } => base.eval(r * factor),
            Profile::Harmonic { parts } => 1.0 / parts.iter().map(|p| 1.0 / p.eval(r)).sum::<f64>(),
        }
    }

    pub fn at_origin(&self) -> f64 {
        self.eval(0.0)
    }

    pub fn at_infinity(&self) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::LogInterp { p_inf, .. } => *p_inf,
            Profile::Piecewise { values, .. } => *values.last().expect("validated"),
            Profile::Dilated { base, .. } => base.at_infinity(),
            Profile::Harmonic { parts } => 1.0 / parts.iter().map(|p| 1.0 / p.at_infinity()).sum::<f64>(),
        }
    }

    /// The value when the profile is constant in `r`.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Profile::Constant { value } => Some(*value),
            Profile::LogInterp { p0, p_inf } => (p0 == p_inf).then_some(*p0),
            Profile::Piecewise { values, .. } => values.iter().all(|v| *v == values[0]).then(|| values[0]),
            Profile::Dilated { base, .. } => base.as_constant(),
            Profile::Harmonic { parts } => {
                let mut acc = 0.0;
                for p in parts {
                    acc += 1.0 / p.as_constant()?;
                }
                Some(1.0 / acc)
            }
        }
    }

    /// Radii where the profile may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Piecewise { breaks, .. } => breaks.clone(),
            Profile::Dilated { base, factor } => base.breakpoints().into_iter().map(|b| b / factor).collect(),
            Profile::Harmonic { parts } => {
                let mut all: Vec<f64> = parts.iter().flat_map(|p| p.breakpoints()).collect();
                all.sort_by(f64::total_cmp);
                all.dedup();
                all
            }
            _ => Vec::new(),
        }
    }

    /// Bounds of the profile over `[r_lo, r_hi]`; `r_hi` may be infinite.
    ///
    /// Tight for the monotone variants, conservative for harmonic combinations.
    pub fn range(&self, r_lo: f64, r_hi: f64) -> (f64, f64) {
        match self {
            Profile::Constant { value } => (*value, *value),
            Profile::LogInterp { .. } => {
                let a = self.eval(r_lo);
                let b = self.eval(r_hi);
                (a.min(b), a.max(b))
            }
            Profile::Piecewise { breaks, values } => {
                let first = breaks.partition_point(|b| *b < r_lo);
                let last = breaks.partition_point(|b| *b < r_hi);
                let slice = &values[first..=last];
                let lo = slice.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            Profile::Dilated { base, factor } => base.range(r_lo * factor, r_hi * factor),
            Profile::Harmonic { parts } => {
                let (mut inv_lo, mut inv_hi) = (0.0, 0.0);
                for p in parts {
                    let (lo, hi) = p.range(r_lo, r_hi);
                    inv_lo += 1.0 / hi;
                    inv_hi += 1.0 / lo;
                }
                (1.0 / inv_hi, 1.0 / inv_lo)
            }
        }
    }

    pub fn global_range(&self) -> (f64, f64) {
        self.range(0.0, f64::INFINITY)
    }

    /// Log-Hölder constants, or `None` when no certificate is available.
    pub fn log_holder(&self) -> Option<LogHolder> {
        match self {
            Profile::Constant { .. } => Some(LogHolder {
                at_origin: 0.0,
                at_infinity: 0.0,
            }),
            Profile::LogInterp { p0, p_inf } => {
                let c = (p0 - p_inf).abs();
                Some(LogHolder {
                    at_origin: c,
                    at_infinity: c,
                })
            }
            Profile::Piecewise { .. } => self.as_constant().map(|_| LogHolder {
                at_origin: 0.0,
                at_infinity: 0.0,
            }),
            Profile::Dilated { base, .. } => base.as_constant().map(|_| LogHolder {
                at_origin: 0.0,
                at_infinity: 0.0,
            }),
            Profile::Harmonic { parts } => {
                // |q - q(0)| = q·q(0)·|1/q - 1/q(0)| ≤ q₊² Σ C_i / q_{i-}².
                let (_, q_plus) = self.global_range();
                let mut c0 = 0.0;
                let mut c_inf = 0.0;
                for p in parts {
                    let lh = p.log_holder()?;
                    let (lo, _) = p.global_range();
                    c0 += lh.at_origin / (lo * lo);
                    c_inf += lh.at_infinity / (lo * lo);
                }
                Some(LogHolder {
                    at_origin: q_plus * q_plus * c0,
                    at_infinity: q_plus * q_plus * c_inf,
                })
            }
        }
    }

    /// Supremum of `|p|` over `[0, ∞)`.
    pub fn sup_abs(&self) -> f64 {
        let (lo, hi) = self.global_range();
        lo.abs().max(hi.abs())
    }

    fn validate_shape(&self) -> Result<(), ExponentError> {
        match self {
            Profile::Constant { value } => finite(*value),
            Profile::LogInterp { p0, p_inf } => finite(*p0).and(finite(*p_inf)),
            Profile::Piecewise { breaks, values } => {
                if values.len() != breaks.len() + 1
                    || breaks.iter().any(|b| !(b.is_finite() && *b > 0.0))
                    || breaks.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(ExponentError::MalformedPiecewise);
                }
                values.iter().try_for_each(|v| finite(*v))
            }
            Profile::Dilated { base, factor } => {
                if !(factor.is_finite() && *factor > 0.0) {
                    return Err(ExponentError::BadScale(*factor));
                }
                base.validate_shape()
            }
            Profile::Harmonic { parts } => {
                if parts.is_empty() {
                    return Err(ExponentError::Empty);
                }
                parts.iter().try_for_each(Profile::validate_shape)
            }
        }
    }
}

fn finite(v: f64) -> Result<(), ExponentError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ExponentError::NonFinite)
    }
}

/// A radial exponent bounded away from 1 and ∞ (`1 < p₋ ≤ p₊ < ∞`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Profile", into = "Profile")]
pub struct Exponent {
    profile: Profile,
    lower: f64,
    upper: f64,
}

impl TryFrom<Profile> for Exponent {
    type Error = ExponentError;

    fn try_from(profile: Profile) -> Result<Self, Self::Error> {
        profile.validate_shape()?;
        let (lower, upper) = profile.global_range();
        if !(lower > 1.0) {
            return Err(ExponentError::NotAboveOne { min: lower });
        }
        if !upper.is_finite() {
            return Err(ExponentError::NonFinite);
        }
        Ok(Self { profile, lower, upper })
    }
}

impl From<Exponent> for Profile {
    fn from(e: Exponent) -> Self {
        e.profile
    }
}

impl Exponent {
    pub fn new(profile: Profile) -> Result<Self, ExponentError> {
        profile.try_into()
    }

    pub fn constant(value: f64) -> Result<Self, ExponentError> {
        Self::new(Profile::constant(value))
    }

    pub fn log_interp(p0: f64, p_inf: f64) -> Result<Self, ExponentError> {
        Self::new(Profile::log_interp(p0, p_inf))
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.profile.eval(r)
    }

    /// Essential infimum `p₋`.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Essential supremum `p₊`.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn at_origin(&self) -> f64 {
        self.profile.at_origin()
    }

    pub fn at_infinity(&self) -> f64 {
        self.profile.at_infinity()
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.profile.as_constant()
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn range(&self, r_lo: f64, r_hi: f64) -> (f64, f64) {
        self.profile.range(r_lo, r_hi)
    }

    pub fn log_holder(&self) -> Option<LogHolder> {
        self.profile.log_holder()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.profile.breakpoints()
    }
}

/// A bounded radial exponent with no lower bound, used for `α(·)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Profile", into = "Profile")]
pub struct SignedExponent {
    profile: Profile,
}

impl TryFrom<Profile> for SignedExponent {
    type Error = ExponentError;

    fn try_from(profile: Profile) -> Result<Self, Self::Error> {
        profile.validate_shape()?;
        Ok(Self { profile })
    }
}

impl From<SignedExponent> for Profile {
    fn from(e: SignedExponent) -> Self {
        e.profile
    }
}

impl Default for SignedExponent {
    fn default() -> Self {
        Self::constant(0.0)
    }
}

impl SignedExponent {
    pub fn new(profile: Profile) -> Result<Self, ExponentError> {
        profile.try_into()
    }

    pub fn constant(value: f64) -> Self {
        Self {
            profile: Profile::constant(value),
        }
    }

    pub fn log_interp(a0: f64, a_inf: f64) -> Result<Self, ExponentError> {
        Self::new(Profile::log_interp(a0, a_inf))
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.profile.eval(r)
    }

    pub fn at_origin(&self) -> f64 {
        self.profile.at_origin()
    }

    pub fn at_infinity(&self) -> f64 {
        self.profile.at_infinity()
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.profile.as_constant()
    }

    pub fn range(&self, r_lo: f64, r_hi: f64) -> (f64, f64) {
        self.profile.range(r_lo, r_hi)
    }

    pub fn log_holder(&self) -> Option<LogHolder> {
        self.profile.log_holder()
    }

    /// `‖α‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.profile.sup_abs()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.profile.breakpoints()
    }
}

pub fn eval_exponent(p: &Exponent, r: f64) -> f64 {
    p.eval(r)
}

pub fn exponent_range(p: &Exponent, r_lo: f64, r_hi: f64) -> (f64, f64) {
    p.range(r_lo, r_hi)
}

/// The exponent `q` with `1/q = Σ 1/q_i` pointwise.
pub fn combine_reciprocal(qs: &[Exponent]) -> Result<Exponent, ExponentError> {
    match qs {
        [] => Err(ExponentError::Empty),
        [single] => Ok(single.clone()),
        _ => {
            if qs.iter().all(Exponent::is_constant) {
                let inv: f64 = qs.iter().map(|q| 1.0 / q.as_constant().expect("constant")).sum();
                return Exponent::constant(1.0 / inv);
            }
            Exponent::new(Profile::Harmonic {
                parts: qs.iter().map(|q| q.profile.clone()).collect(),
            })
        }
    }
}

/// An exponent that may be infinite, stored through its reciprocal
/// `1/r(x) = Σ wᵢ / pᵢ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedExponent {
    terms: Vec<(f64, Profile)>,
}

impl ExtendedExponent {
    /// `r ≡ ∞`.
    pub fn infinite() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn finite(p: &Exponent) -> Self {
        Self {
            terms: vec![(1.0, p.profile.clone())],
        }
    }

    pub fn reciprocal(&self, r: f64) -> f64 {
        let s: f64 = self.terms.iter().map(|(w, p)| w / p.eval(r)).sum();
        if s.abs() < INFINITE_EXPONENT_TOL {
            0.0
        } else {
            s
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let s = self.reciprocal(r);
        if s == 0.0 {
            f64::INFINITY
        } else {
            1.0 / s
        }
    }

    /// The reciprocal when it does not depend on `r`.
    pub fn constant_reciprocal(&self) -> Option<f64> {
        let mut acc = 0.0;
        for (w, p) in &self.terms {
            acc += w / p.as_constant()?;
        }
        Some(if acc.abs() < INFINITE_EXPONENT_TOL { 0.0 } else { acc })
    }

    pub fn reciprocal_at_origin(&self) -> f64 {
        let s: f64 = self.terms.iter().map(|(w, p)| w / p.at_origin()).sum();
        if s.abs() < INFINITE_EXPONENT_TOL {
            0.0
        } else {
            s
        }
    }

    pub fn reciprocal_at_infinity(&self) -> f64 {
        let s: f64 = self.terms.iter().map(|(w, p)| w / p.at_infinity()).sum();
        if s.abs() < INFINITE_EXPONENT_TOL {
            0.0
        } else {
            s
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.terms.iter().flat_map(|(_, p)| p.breakpoints()).collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }
}

/// Radii used to check pointwise exponent inequalities: a log-spaced grid
/// over `[1e-8, 1e8]`, both limits, and both sides of every jump.
fn check_grid(breaks: &[f64]) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=1000).map(|i| 10f64.powf(-8.0 + 16.0 * i as f64 / 1000.0)).collect();
    grid.push(0.0);
    grid.push(f64::INFINITY);
    for b in breaks {
        grid.push(*b);
        grid.push(b * (1.0 + 1e-9));
    }
    grid.sort_by(f64::total_cmp);
    grid
}

/// `r` with `1/r = 1/a − 1/(ζ b)`, infinite where the difference vanishes.
pub fn difference_reciprocal(a: &Exponent, b: &Exponent, zeta: f64) -> Result<ExtendedExponent, ExponentError> {
    if !(zeta.is_finite() && zeta > 0.0) {
        return Err(ExponentError::BadScale(zeta));
    }
    let ext = ExtendedExponent {
        terms: vec![(1.0, a.profile.clone()), (-1.0 / zeta, b.profile.clone())],
    };
    let mut breaks = a.breakpoints();
    breaks.extend(b.breakpoints());
    for r in check_grid(&breaks) {
        let d = ext.reciprocal(r);
        if d < 0.0 {
            return Err(ExponentError::NegativeDifference { radius: r, value: d });
        }
    }
    if let Some(c) = ext.constant_reciprocal() {
        if c == 0.0 {
            return Ok(ExtendedExponent::infinite());
        }
    }
    Ok(ext)
}

/// `x ↦ q(A⁻¹(t)x) = q(|x| / |s(t)|)` for a radial family.
pub fn pullback_exponent(q: &Exponent, family: &MatrixFamily, t: f64) -> Result<Exponent, ExponentError> {
    let s = family.scalar_abs(t)?;
    if q.is_constant() || s == 1.0 {
        return Ok(q.clone());
    }
    Exponent::new(Profile::Dilated {
        base: Box::new(q.profile.clone()),
        factor: 1.0 / s,
    })
}

/// Surface area `|S^{n-1}| = 2π^{n/2} / Γ(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// The power weight `ω(x) = |x|^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PowerWeight {
    pub gamma: f64,
}

impl PowerWeight {
    pub fn new(gamma: f64) -> Self {
        Self { gamma }
    }

    /// `ω(B(0, R)) = |S^{n-1}| R^{n+γ} / (n+γ)`.
    pub fn ball_measure(&self, n: usize, radius: f64) -> Result<f64, ExponentError> {
        let d = n as f64 + self.gamma;
        if !(d > 0.0) {
            return Err(ExponentError::WeightDomain { gamma: self.gamma, n });
        }
        if !(radius > 0.0) {
            return Err(ExponentError::BadRadius(radius));
        }
        Ok(sphere_area(n) * radius.powf(d) / d)
    }
}

pub fn ball_measure(w: &PowerWeight, n: usize, radius: f64) -> Result<f64, ExponentError> {
    w.ball_measure(n, radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn li(p0: f64, pi: f64) -> Exponent {
        Exponent::log_interp(p0, pi).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(eval_exponent(&Exponent::constant(2.0).unwrap(), 5.0), 2.0);
        assert_eq!(eval_exponent(&li(3.0, 2.0), 0.0), 3.0);
        assert_relative_eq!(eval_exponent(&li(3.0, 2.0), E * E - E), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn range_examples() {
        assert_eq!(exponent_range(&Exponent::constant(2.0).unwrap(), 0.5, 9.0), (2.0, 2.0));
        assert_eq!(exponent_range(&li(3.0, 2.0), 0.0, f64::INFINITY), (2.0, 3.0));
        let (lo, hi) = exponent_range(&li(3.0, 2.0), E * E - E, f64::INFINITY);
        assert_eq!(lo, 2.0);
        assert_relative_eq!(hi, 2.5, epsilon = 1e-15);
    }

    #[test]
    fn combine_examples() {
        let four = Exponent::constant(4.0).unwrap();
        let q = combine_reciprocal(&[four.clone(), four.clone()]).unwrap();
        assert_eq!(q.as_constant(), Some(2.0));
        let three = Exponent::constant(3.0).unwrap();
        assert_eq!(combine_reciprocal(&[three]).unwrap().as_constant(), Some(3.0));
        let q = combine_reciprocal(&[li(6.0, 4.0), four]).unwrap();
        assert_relative_eq!(q.eval(0.0), 2.4, epsilon = 1e-14);
    }

    #[test]
    fn combine_reports_low_result() {
        let two = Exponent::constant(2.0).unwrap();
        let err = combine_reciprocal(&[two.clone(), two]).unwrap_err();
        assert!(matches!(err, ExponentError::NotAboveOne { .. }));
    }

    #[test]
    fn difference_examples() {
        let two = Exponent::constant(2.0).unwrap();
        let r = difference_reciprocal(&two, &two, 1.0).unwrap();
        assert_eq!(r.eval(3.0), f64::INFINITY);
        let r = difference_reciprocal(&two, &two, 2.0).unwrap();
        assert_relative_eq!(r.eval(3.0), 4.0, epsilon = 1e-14);
        let three = Exponent::constant(3.0).unwrap();
        match difference_reciprocal(&three, &two, 1.0) {
            Err(ExponentError::NegativeDifference { radius, .. }) => assert!(radius >= 0.0),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn pullback_examples() {
        let two = Exponent::constant(2.0).unwrap();
        let fam = MatrixFamily::scalar_dilation(3.0, 1.0);
        assert_eq!(pullback_exponent(&two, &fam, 2.0).unwrap(), two);
        let q = li(3.0, 2.0);
        let id = MatrixFamily::scalar_dilation(1.0, 0.0);
        assert_eq!(pullback_exponent(&q, &id, 0.7).unwrap(), q);
        // s(t) = e² − e at t = 1; compare with direct composition.
        let s = E * E - E;
        let fam = MatrixFamily::scalar_dilation(s, 1.0);
        let pulled = pullback_exponent(&q, &fam, 1.0).unwrap();
        for i in 0..100 {
            let x = 10f64.powf(-3.0 + 6.0 * i as f64 / 99.0);
            assert_relative_eq!(pulled.eval(x), q.eval(x / s), max_relative = 1e-15);
        }
    }

    #[test]
    fn ball_measure_examples() {
        assert_relative_eq!(ball_measure(&PowerWeight::new(0.0), 2, 1.0).unwrap(), PI, max_relative = 1e-14);
        assert_relative_eq!(ball_measure(&PowerWeight::new(1.0), 1, 2.0).unwrap(), 4.0, max_relative = 1e-14);
        assert!(ball_measure(&PowerWeight::new(-1.5), 1, 2.0).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn json_fragments() {
        let c: Exponent = serde_json::from_str(r#"{"type":"constant","value":2.0}"#).unwrap();
        assert_eq!(c.as_constant(), Some(2.0));
        let l: Exponent = serde_json::from_str(r#"{"type":"log_interp","p0":3.0,"p_inf":2.0}"#).unwrap();
        assert_eq!(l.at_origin(), 3.0);
        let p: Exponent = serde_json::from_str(r#"{"type":"piecewise","breaks":[1.0],"values":[2.0,3.0]}"#).unwrap();
        assert_eq!(p.eval(0.5), 2.0);
        assert_eq!(p.eval(1.0), 2.0);
        assert_eq!(p.eval(1.5), 3.0);
        assert!(p.log_holder().is_none());
        let w: PowerWeight = serde_json::from_str(r#"{"gamma":0.0}"#).unwrap();
        assert_eq!(w.gamma, 0.0);
        let bad = serde_json::from_str::<Exponent>(r#"{"type":"constant","value":0.5}"#);
        assert!(bad.is_err());
        let signed: SignedExponent = serde_json::from_str(r#"{"type":"constant","value":-0.5}"#).unwrap();
        assert_eq!(signed.eval(1.0), -0.5);
        let back = serde_json::to_string(&l).unwrap();
        assert_eq!(back, r#"{"type":"log_interp","p0":3.0,"p_inf":2.0}"#);
    }

    #[test]
    fn log_holder_constants() {
        let q = li(3.0, 2.0);
        let lh = q.log_holder().unwrap();
        assert_eq!(lh.at_origin, 1.0);
        assert_eq!(lh.at_infinity, 1.0);
        assert_eq!(Exponent::constant(2.0).unwrap().log_holder().unwrap().at_origin, 0.0);
    }
}
