//! Matrix families `A(t)` acting as dilations up to an orthogonal factor,
//! with their Frobenius norms and the dyadic integers built from them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponents::Exponent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix is singular at t = {t}")]
    Singular { t: f64 },
    #[error("q_matrix is not orthogonal (deviation {deviation:e})")]
    NotOrthogonal { deviation: f64 },
    #[error("family has dimension {family} but the operator has dimension {expected}")]
    DimensionMismatch { expected: usize, family: usize },
    #[error("signs must be +1 or -1")]
    BadSigns,
    #[error("determinant bounds violated at t = {t}")]
    DeterminantBound { t: f64 },
    #[error("matrix norm must be positive and finite, got {0}")]
    BadNorm(f64),
}

/// The signed power law `s(r) = c · r^a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarMap {
    pub c: f64,
    pub a: f64,
}

impl ScalarMap {
    pub fn new(c: f64, a: f64) -> Self {
        Self { c, a }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if self.a == 0.0 {
            self.c
        } else {
            self.c * r.powf(self.a)
        }
    }

    pub fn ln_abs(&self, ln_r: f64) -> f64 {
        self.c.abs().ln() + self.a * ln_r
    }

    /// Radius where `|s(r)| = target`, if the map is not constant.
    pub fn solve_abs(&self, target: f64) -> Option<f64> {
        if self.a == 0.0 || self.c == 0.0 {
            return None;
        }
        Some((target / self.c.abs()).powf(1.0 / self.a))
    }
}

/// `A(t)` as a function of `r = |t|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MatrixFamily {
    /// `s(r) · I`.
    ScalarDilation { s: ScalarMap },
    /// `s(r) · diag(signs)`.
    DiagEqual { s: ScalarMap, signs: Vec<i8> },
    /// `s(r) · Q` with a fixed orthogonal `Q`.
    OrthScalar { q_matrix: Vec<Vec<f64>>, s: ScalarMap },
}

impl MatrixFamily {
    pub fn scalar_dilation(c: f64, a: f64) -> Self {
        MatrixFamily::ScalarDilation { s: ScalarMap::new(c, a) }
    }

    pub fn scalar(&self) -> &ScalarMap {
        match self {
            MatrixFamily::ScalarDilation { s } | MatrixFamily::DiagEqual { s, .. } | MatrixFamily::OrthScalar { s, .. } => s,
        }
    }

    /// Intrinsic dimension, if the family fixes one.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            MatrixFamily::ScalarDilation { .. } => None,
            MatrixFamily::DiagEqual { signs, .. } => Some(signs.len()),
            MatrixFamily::OrthScalar { q_matrix, .. } => Some(q_matrix.len()),
        }
    }

    /// Check the family is well formed in dimension `n`.
    pub fn validate(&self, n: usize) -> Result<(), MatrixError> {
        if let Some(d) = self.dimension() {
            if d != n {
                return Err(MatrixError::DimensionMismatch { expected: n, family: d });
            }
        }
        match self {
            MatrixFamily::DiagEqual { signs, .. } if signs.iter().any(|s| s.abs() != 1) => Err(MatrixError::BadSigns),
            MatrixFamily::OrthScalar { q_matrix, .. } => {
                if q_matrix.iter().any(|row| row.len() != n) {
                    return Err(MatrixError::DimensionMismatch { expected: n, family: q_matrix.len() });
                }
                let mut deviation: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let dot: f64 = (0..n).map(|k| q_matrix[k][i] * q_matrix[k][j]).sum();
                        let target = if i == j { 1.0 } else { 0.0 };
                        deviation = deviation.max((dot - target).abs());
                    }
                }
                if deviation > 1e-10 {
                    Err(MatrixError::NotOrthogonal { deviation })
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// `|s(t)|`, the factor by which `A(t)` stretches every vector.
    pub fn scalar_abs(&self, t: f64) -> Result<f64, MatrixError> {
        let s = self.scalar().eval(t).abs();
        if s == 0.0 || !s.is_finite() {
            Err(MatrixError::Singular { t })
        } else {
            Ok(s)
        }
    }

    /// Entries of `A(t)` in dimension `n`.
    pub fn matrix(&self, n: usize, t: f64) -> Vec<Vec<f64>> {
        let s = self.scalar().eval(t);
        match self {
            MatrixFamily::ScalarDilation { .. } => diag(n, |_| s),
            MatrixFamily::DiagEqual { signs, .. } => diag(n, |i| s * f64::from(signs[i])),
            MatrixFamily::OrthScalar { q_matrix, .. } => q_matrix.iter().map(|row| row.iter().map(|v| v * s).collect()).collect(),
        }
    }

    /// Entries of `A(t)⁻¹`.
    pub fn inverse_matrix(&self, n: usize, t: f64) -> Result<Vec<Vec<f64>>, MatrixError> {
        let s = self.scalar().eval(t);
        if s == 0.0 || !s.is_finite() {
            return Err(MatrixError::Singular { t });
        }
        Ok(match self {
            MatrixFamily::ScalarDilation { .. } => diag(n, |_| 1.0 / s),
            MatrixFamily::DiagEqual { signs, .. } => diag(n, |i| f64::from(signs[i]) / s),
            MatrixFamily::OrthScalar { q_matrix, .. } => (0..n).map(|i| (0..n).map(|j| q_matrix[j][i] / s).collect()).collect(),
        })
    }
}

fn diag(n: usize, entry: impl Fn(usize) -> f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { entry(i) } else { 0.0 }).collect())
        .collect()
}

fn frobenius(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖A(t)‖ = (Σ|a_ij|²)^{1/2}`.
pub fn frobenius_norm(fam: &MatrixFamily, n: usize, t: f64) -> f64 {
    frobenius(&fam.matrix(n, t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseStats {
    pub inv_norm: f64,
    pub det_inv_abs: f64,
}

/// `‖A(t)⁻¹‖` and `|det A(t)⁻¹|`, checking `‖A‖^{-n} ≤ |det A⁻¹| ≤ ‖A⁻¹‖^n`.
pub fn inverse_stats(fam: &MatrixFamily, n: usize, t: f64) -> Result<InverseStats, MatrixError> {
    let s = fam.scalar_abs(t)?;
    let inv_norm = frobenius(&fam.inverse_matrix(n, t)?);
    let det_inv_abs = s.powi(-(n as i32));
    let norm = frobenius_norm(fam, n, t);
    let slack = 1e-12 * det_inv_abs;
    if norm.powi(-(n as i32)) > det_inv_abs + slack || det_inv_abs > inv_norm.powi(n as i32) + slack {
        return Err(MatrixError::DeterminantBound { t });
    }
    Ok(InverseStats { inv_norm, det_inv_abs })
}

/// `max_i sup_t ‖A_i(t)‖ · ‖A_i(t)⁻¹‖` over the sampled radii.
pub fn rho_bound(fams: &[MatrixFamily], n: usize, t_samples: &[f64]) -> Result<f64, MatrixError> {
    let mut rho: f64 = 1.0;
    for fam in fams {
        for &t in t_samples {
            let inv = inverse_stats(fam, n, t)?;
            rho = rho.max(frobenius_norm(fam, n, t) * inv.inv_norm);
        }
    }
    // Supported families give ρ = n exactly; rounding noise around a power of
    // two would otherwise flip Θ* between neighbouring integers.
    let nearest = rho.round();
    if (rho - nearest).abs() <= 1e-12 * rho {
        rho = nearest;
    }
    Ok(rho)
}

/// Mantissa in `[0.5, 1)` and exponent with `x = m · 2^e`.
fn frexp(x: f64) -> (f64, i32) {
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i32;
    if raw == 0 {
        let (m, e) = frexp(x * 2f64.powi(54));
        return (m, e - 54);
    }
    let mantissa = f64::from_bits((bits & !(0x7ff_u64 << 52)) | (1022_u64 << 52));
    (mantissa, raw - 1022)
}

/// The integer `ℓ` with `2^{ℓ-1} < x ≤ 2^ℓ`.
pub fn dyadic_exponent_of(x: f64) -> Result<i32, MatrixError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(MatrixError::BadNorm(x));
    }
    let (m, e) = frexp(x);
    Ok(if m == 0.5 { e - 1 } else { e })
}

pub fn dyadic_exponent(fam: &MatrixFamily, n: usize, t: f64) -> Result<i32, MatrixError> {
    dyadic_exponent_of(frobenius_norm(fam, n, t))
}

/// The greatest integer `Θ` with `ρ < 2^{-Θ}`, i.e. `-⌊log₂ ρ⌋ - 1`.
pub fn theta_star_of(rho: f64) -> Result<i32, MatrixError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(MatrixError::BadNorm(rho));
    }
    let (_, e) = frexp(rho);
    Ok(-e)
}

pub fn theta_star(fams: &[MatrixFamily], n: usize, t: f64) -> Result<i32, MatrixError> {
    theta_star_of(rho_bound(fams, n, &[t])?)
}

/// `max{‖A‖^{-γ}, ‖A⁻¹‖^{γ}} · max{|det A⁻¹|^{1/q₊}, |det A⁻¹|^{1/q₋}}`.
pub fn c_factor(fam: &MatrixFamily, n: usize, q: &Exponent, gamma: f64, t: f64) -> Result<f64, MatrixError> {
    let inv = inverse_stats(fam, n, t)?;
    let norm = frobenius_norm(fam, n, t);
    let weight = norm.powf(-gamma).max(inv.inv_norm.powf(gamma));
    let det = inv.det_inv_abs.powf(1.0 / q.upper()).max(inv.det_inv_abs.powf(1.0 / q.lower()));
    Ok(weight * det)
}
