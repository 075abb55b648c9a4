//! Herz, Morrey-Herz and two-weight central Morrey norms assembled from
//! weighted variable-exponent norms on dyadic shells and balls.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponents::{Exponent, ExponentError, PowerWeight, SignedExponent};
use crate::luxemburg::{norm_report, ModularSpec, NormContext, RadialFunction, Region};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("outer exponent p = {0} must be positive and finite")]
    BadOuterExponent(f64),
    #[error("empty scan range [{0}, {1}]")]
    EmptyRange(i32, i32),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Lebesgue,
    Herz,
    MorreyHerz,
    CentralMorrey,
}

fn one() -> f64 {
    1.0
}

/// Parameters of a function space. `gamma` is the norm weight `|x|^γ`; for
/// central Morrey spaces `ball_gamma` is the exponent of the ball-measure
/// weight `ω₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    #[serde(default)]
    pub alpha: SignedExponent,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "one")]
    pub p: f64,
    pub q: Exponent,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub ball_gamma: f64,
}

impl SpaceSpec {
    pub fn lebesgue(q: Exponent, gamma: f64) -> Self {
        Self {
            kind: SpaceKind::Lebesgue,
            alpha: SignedExponent::default(),
            lambda: 0.0,
            p: 1.0,
            q,
            gamma,
            ball_gamma: 0.0,
        }
    }

    pub fn herz(alpha: SignedExponent, p: f64, q: Exponent, gamma: f64) -> Self {
        Self {
            kind: SpaceKind::Herz,
            alpha,
            lambda: 0.0,
            p,
            q,
            gamma,
            ball_gamma: 0.0,
        }
    }

    pub fn morrey_herz(alpha: SignedExponent, lambda: f64, p: f64, q: Exponent, gamma: f64) -> Self {
        Self {
            kind: SpaceKind::MorreyHerz,
            lambda,
            ..Self::herz(alpha, p, q, gamma)
        }
    }

    pub fn central_morrey(lambda: f64, q: Exponent, ball_gamma: f64, gamma: f64) -> Self {
        Self {
            kind: SpaceKind::CentralMorrey,
            alpha: SignedExponent::default(),
            lambda,
            p: 1.0,
            q,
            gamma,
            ball_gamma,
        }
    }

    fn check_outer(&self) -> Result<(), SpaceError> {
        if self.p > 0.0 && self.p.is_finite() {
            Ok(())
        } else {
            Err(SpaceError::BadOuterExponent(self.p))
        }
    }
}

/// Inclusive scan windows for shells, Morrey truncation indices and dyadic
/// ball radii `2^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRanges {
    pub k_range: (i32, i32),
    pub k0_range: (i32, i32),
    pub r_grid_range: (i32, i32),
}

impl Default for ScanRanges {
    fn default() -> Self {
        Self {
            k_range: (-40, 40),
            k0_range: (-40, 40),
            r_grid_range: (-40, 40),
        }
    }
}

/// A computed space norm with the scan diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceNorm {
    pub value: f64,
    /// Maximizing `k₀` or `j` for supremum-type norms.
    pub argmax: Option<i32>,
    pub truncation_suspect: bool,
    pub sup_suspect: bool,
}

impl SpaceNorm {
    fn plain(value: f64) -> Self {
        Self {
            value,
            argmax: None,
            truncation_suspect: false,
            sup_suspect: false,
        }
    }
}

fn check_range((lo, hi): (i32, i32)) -> Result<(), SpaceError> {
    if lo <= hi {
        Ok(())
    } else {
        Err(SpaceError::EmptyRange(lo, hi))
    }
}

/// `‖2^{kα(·)} f χ_k‖_{L^{q(·)}_ω}`.
pub fn shell_norm(f: &dyn RadialFunction, spec: &SpaceSpec, k: i32, ctx: NormContext) -> f64 {
    let m = ModularSpec::new(f, &spec.q, Region::Shell { k })
        .weighted(spec.gamma)
        .dyadic_multiplier(k, &spec.alpha);
    norm_report(m, ctx).value
}

fn shell_norms(f: &dyn RadialFunction, spec: &SpaceSpec, lo: i32, hi: i32, ctx: NormContext) -> Vec<f64> {
    (lo..=hi).into_par_iter().map(|k| shell_norm(f, spec, k, ctx)).collect()
}

/// `a` is the outermost of three consecutive terms.
fn end_not_decaying(a: f64, b: f64, c: f64) -> bool {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return true;
    }
    !(a == 0.0 && b == 0.0) && !(a < b && b < c)
}

fn lower_tail_not_decaying(terms: &[f64]) -> bool {
    match terms {
        [a, b, c, ..] => end_not_decaying(*a, *b, *c),
        _ => false,
    }
}

fn tail_not_decaying(terms: &[f64]) -> bool {
    match terms {
        [.., c, b, a] => lower_tail_not_decaying(terms) || end_not_decaying(*a, *b, *c),
        _ => false,
    }
}

/// Whether an endpoint maximizer strictly beats its neighbour.
fn endpoint_sup(values: &[f64], argmax: usize) -> bool {
    let n = values.len();
    if n < 2 {
        return n == 1;
    }
    let strictly_above = |a: f64, b: f64| a > b * (1.0 + 1e-9) || (b == 0.0 && a > 0.0);
    (argmax == 0 && strictly_above(values[0], values[1])) || (argmax == n - 1 && strictly_above(values[n - 1], values[n - 2]))
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] || v.is_nan() {
            best = i;
        }
    }
    best
}

/// Herz norm truncated to `k_range`.
pub fn herz_norm(f: &dyn RadialFunction, spec: &SpaceSpec, k_range: (i32, i32), ctx: NormContext) -> Result<SpaceNorm, SpaceError> {
    spec.check_outer()?;
    check_range(k_range)?;
    let terms = shell_norms(f, spec, k_range.0, k_range.1, ctx);
    let sum: f64 = terms.iter().map(|t| t.powf(spec.p)).sum();
    Ok(SpaceNorm {
        value: sum.powf(1.0 / spec.p),
        argmax: None,
        truncation_suspect: tail_not_decaying(&terms),
        sup_suspect: false,
    })
}

/// Morrey-Herz norm: `sup_{k₀} 2^{-k₀λ} (Σ_{k ≤ k₀} ‖2^{kα} f χ_k‖^p)^{1/p}` with
/// the inner sum starting at `k_range.0` and the sup over `k0_range`.
pub fn morrey_herz_norm(
    f: &dyn RadialFunction,
    spec: &SpaceSpec,
    k0_range: (i32, i32),
    k_range: (i32, i32),
    ctx: NormContext,
) -> Result<SpaceNorm, SpaceError> {
    spec.check_outer()?;
    check_range(k0_range)?;
    check_range(k_range)?;
    let k_lo = k_range.0;
    let k_hi = k_range.1.min(k0_range.1).max(k_lo);
    let terms = shell_norms(f, spec, k_lo, k_hi, ctx);
    let mut partial = Vec::with_capacity(terms.len());
    let mut acc = 0.0;
    for t in &terms {
        acc += t.powf(spec.p);
        partial.push(acc);
    }
    let values: Vec<f64> = (k0_range.0..=k0_range.1)
        .map(|k0| {
            let upto = (k0.min(k_hi) - k_lo) as isize;
            let s = if upto < 0 { 0.0 } else { partial[upto as usize] };
            let scale = if spec.lambda == 0.0 { 1.0 } else { 2f64.powf(-f64::from(k0) * spec.lambda) };
            scale * s.powf(1.0 / spec.p)
        })
        .collect();
    let best = argmax(&values);
    Ok(SpaceNorm {
        value: values[best],
        argmax: Some(k0_range.0 + best as i32),
        truncation_suspect: lower_tail_not_decaying(&terms),
        sup_suspect: endpoint_sup(&values, best),
    })
}

/// Two-weight central Morrey norm over balls of radius `2^j`, `j ∈ r_grid_range`.
pub fn central_morrey_norm(
    f: &dyn RadialFunction,
    spec: &SpaceSpec,
    r_grid_range: (i32, i32),
    ctx: NormContext,
) -> Result<SpaceNorm, SpaceError> {
    check_range(r_grid_range)?;
    let w1 = PowerWeight::new(spec.ball_gamma);
    let power = spec.lambda + 1.0 / spec.q.at_infinity();
    let js: Vec<i32> = (r_grid_range.0..=r_grid_range.1).collect();
    // Validate the ball weight once, before the parallel scan.
    w1.ball_measure(ctx.n, 1.0)?;
    let values: Vec<f64> = js
        .par_iter()
        .map(|&j| {
            let radius = 2f64.powi(j);
            let m = ModularSpec::new(f, &spec.q, Region::Ball { radius }).weighted(spec.gamma);
            let norm = norm_report(m, ctx).value;
            if norm == 0.0 {
                return 0.0;
            }
            let mu = w1.ball_measure(ctx.n, radius).expect("validated weight");
            (-power * mu.ln()).exp() * norm
        })
        .collect();
    let best = argmax(&values);
    Ok(SpaceNorm {
        value: values[best],
        argmax: Some(js[best]),
        truncation_suspect: false,
        sup_suspect: endpoint_sup(&values, best),
    })
}

/// Norm of `f` in the space described by `spec`.
pub fn space_norm(f: &dyn RadialFunction, spec: &SpaceSpec, ranges: &ScanRanges, ctx: NormContext) -> Result<SpaceNorm, SpaceError> {
    match spec.kind {
        SpaceKind::Lebesgue => {
            let m = ModularSpec::new(f, &spec.q, Region::All).weighted(spec.gamma);
            Ok(SpaceNorm::plain(norm_report(m, ctx).value))
        }
        SpaceKind::Herz => herz_norm(f, spec, ranges.k_range, ctx),
        SpaceKind::MorreyHerz => morrey_herz_norm(f, spec, ranges.k0_range, ranges.k_range, ctx),
        SpaceKind::CentralMorrey => central_morrey_norm(f, spec, ranges.r_grid_range, ctx),
    }
}
