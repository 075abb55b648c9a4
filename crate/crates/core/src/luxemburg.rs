//! Modulars and Luxemburg norms for radial functions in weighted
//! variable-exponent Lebesgue spaces.
//!
//! All integrals run in `u = ln r`. A piece of the integrand with constant
//! exponent and a pure power law is integrated in closed form; anything else
//! goes through adaptive quadrature. Divergence at `r → 0` or `r → ∞` is
//! decided from the limiting power exponents before any quadrature runs.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponents::{sphere_area, Exponent, ExtendedExponent, PowerWeight, Profile, SignedExponent};
use crate::quad::{integrate, QuadConfig};

pub const DEFAULT_REL_TOL: f64 = 1e-9;
/// Relative gap of the bisection certificate.
pub const CERTIFICATE_GAP: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionError {
    #[error("segment {index} is malformed: need 0 <= lo < hi, finite non-negative coefficient")]
    BadSegment { index: usize },
    #[error("segments {index} and {next} overlap or are out of order")]
    Overlap { index: usize, next: usize },
}

/// Numerical settings shared by every norm computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormContext {
    pub n: usize,
    pub quad: QuadConfig,
}

impl NormContext {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            quad: QuadConfig::with_rel_tol(DEFAULT_REL_TOL),
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.quad.rel_tol = rel_tol;
        self
    }

    pub fn sphere(&self) -> f64 {
        sphere_area(self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
enum TermKind {
    /// Contributes `coeff / p(r)`.
    Reciprocal,
    /// Contributes `coeff · p(r)`.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ExprTerm {
    coeff: f64,
    kind: TermKind,
    exponent: Profile,
}

impl ExprTerm {
    fn eval(&self, r: f64) -> f64 {
        self.value_of(self.exponent.eval(r))
    }

    fn value_of(&self, p: f64) -> f64 {
        match self.kind {
            TermKind::Reciprocal => self.coeff / p,
            TermKind::Direct => self.coeff * p,
        }
    }
}

/// `a(r) = a₀ + Σ cᵢ/qᵢ(r) + Σ dⱼ αⱼ(r)`, the exponent of a power segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ExprRepr", into = "ExprRepr")]
pub struct ExponentExpr {
    constant: f64,
    terms: Vec<ExprTerm>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExprRepr {
    Number(f64),
    Full {
        constant: f64,
        #[serde(default)]
        terms: Vec<ExprTerm>,
    },
}

impl From<ExprRepr> for ExponentExpr {
    fn from(r: ExprRepr) -> Self {
        match r {
            ExprRepr::Number(constant) => Self::constant(constant),
            ExprRepr::Full { constant, terms } => Self { constant, terms },
        }
    }
}

impl From<ExponentExpr> for ExprRepr {
    fn from(e: ExponentExpr) -> Self {
        if e.terms.is_empty() {
            ExprRepr::Number(e.constant)
        } else {
            ExprRepr::Full {
                constant: e.constant,
                terms: e.terms,
            }
        }
    }
}

impl ExponentExpr {
    pub fn constant(value: f64) -> Self {
        Self {
            constant: value,
            terms: Vec::new(),
        }
    }

    /// Adds `coeff / q(r)`.
    pub fn plus_reciprocal(mut self, coeff: f64, q: &Exponent) -> Self {
        self.terms.push(ExprTerm {
            coeff,
            kind: TermKind::Reciprocal,
            exponent: q.profile().clone(),
        });
        self
    }

    /// Adds `coeff · α(r)`.
    pub fn plus_signed(mut self, coeff: f64, alpha: &SignedExponent) -> Self {
        self.terms.push(ExprTerm {
            coeff,
            kind: TermKind::Direct,
            exponent: alpha.profile().clone(),
        });
        self
    }

    pub fn shifted(mut self, delta: f64) -> Self {
        self.constant += delta;
        self
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.constant + self.terms.iter().map(|t| t.eval(r)).sum::<f64>()
    }

    pub fn at_origin(&self) -> f64 {
        self.constant + self.terms.iter().map(|t| t.value_of(t.exponent.at_origin())).sum::<f64>()
    }

    pub fn at_infinity(&self) -> f64 {
        self.constant + self.terms.iter().map(|t| t.value_of(t.exponent.at_infinity())).sum::<f64>()
    }

    pub fn as_constant(&self) -> Option<f64> {
        let mut acc = self.constant;
        for t in &self.terms {
            acc += t.value_of(t.exponent.as_constant()?);
        }
        Some(acc)
    }

    /// Constant value on the open interval `(lo, hi)`, if any.
    fn constant_on(&self, lo: f64, hi: f64) -> Option<f64> {
        let mut acc = self.constant;
        for t in &self.terms {
            acc += t.value_of(constant_on(&t.exponent, lo, hi)?);
        }
        Some(acc)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.terms.iter().flat_map(|t| t.exponent.breakpoints()).collect()
    }
}

fn constant_on(p: &Profile, lo: f64, hi: f64) -> Option<f64> {
    let (a, b) = p.range(lo.next_up(), hi);
    (a == b).then_some(a)
}

pub(crate) mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// `[lo, hi]` with an infinite `hi` written as `null`.
pub(crate) mod interval_inf_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
        let hi = if v.1.is_infinite() { None } else { Some(v.1) };
        (v.0, hi).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        let (lo, hi) = <(f64, Option<f64>)>::deserialize(d)?;
        Ok((lo, hi.unwrap_or(f64::INFINITY)))
    }
}

/// `coeff · r^{a(r)}` on `[lo, hi)`; `hi` may be infinite (`null` in JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    #[serde(with = "inf_as_null")]
    pub hi: f64,
    pub coeff: f64,
    pub exponent: ExponentExpr,
}

impl Segment {
    pub fn new(lo: f64, hi: f64, coeff: f64, exponent: ExponentExpr) -> Self {
        Self { lo, hi, coeff, exponent }
    }

    fn ln_value(&self, r: f64) -> f64 {
        if self.coeff == 0.0 {
            return f64::NEG_INFINITY;
        }
        let e = self.exponent.eval(r);
        if e == 0.0 {
            self.coeff.ln()
        } else {
            self.coeff.ln() + e * r.ln()
        }
    }
}

/// A non-negative radial function built from power-law segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SegmentList", into = "SegmentList")]
pub struct PiecewisePowerFunction {
    segments: Vec<Segment>,
}

#[derive(Serialize, Deserialize)]
struct SegmentList {
    segments: Vec<Segment>,
}

impl TryFrom<SegmentList> for PiecewisePowerFunction {
    type Error = FunctionError;

    fn try_from(l: SegmentList) -> Result<Self, Self::Error> {
        Self::new(l.segments)
    }
}

impl From<PiecewisePowerFunction> for SegmentList {
    fn from(f: PiecewisePowerFunction) -> Self {
        SegmentList { segments: f.segments }
    }
}

impl PiecewisePowerFunction {
    pub fn new(segments: Vec<Segment>) -> Result<Self, FunctionError> {
        for (i, s) in segments.iter().enumerate() {
            if !(s.lo >= 0.0 && s.lo < s.hi && s.lo.is_finite() && s.coeff >= 0.0 && s.coeff.is_finite()) {
                return Err(FunctionError::BadSegment { index: i });
            }
        }
        for i in 1..segments.len() {
            if segments[i].lo < segments[i - 1].hi {
                return Err(FunctionError::Overlap { index: i - 1, next: i });
            }
        }
        Ok(Self { segments })
    }

    pub fn zero() -> Self {
        Self { segments: Vec::new() }
    }

    /// `c · r^b` on `[lo, hi)`.
    pub fn power_on(lo: f64, hi: f64, c: f64, b: f64) -> Self {
        Self::new(vec![Segment::new(lo, hi, c, ExponentExpr::constant(b))]).expect("valid single segment")
    }

    /// `c · |x|^b` on all of ℝⁿ.
    pub fn single_power(c: f64, b: f64) -> Self {
        Self::power_on(0.0, f64::INFINITY, c, b)
    }

    pub fn indicator(lo: f64, hi: f64) -> Self {
        Self::power_on(lo, hi, 1.0, 0.0)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(|s| s.coeff == 0.0)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.ln_value(r).exp()
    }

    pub fn ln_value(&self, r: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.hi <= r);
        match self.segments.get(idx) {
            Some(s) if s.lo <= r => s.ln_value(r),
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.segments {
            s.coeff *= c;
        }
        out
    }

    /// The function times `r^γ`.
    pub fn times_power(&self, gamma: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.segments {
            s.exponent = s.exponent.clone().shifted(gamma);
        }
        out
    }

    /// The function times the indicator of `[lo, hi]`.
    pub fn restricted(&self, lo: f64, hi: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .filter(|s| s.lo < hi && s.hi > lo)
            .map(|s| Segment::new(s.lo.max(lo), s.hi.min(hi), s.coeff, s.exponent.clone()))
            .collect();
        Self { segments }
    }

    /// The exponent of `f` when it is a single power `c·r^b` on `(0, ∞)`.
    pub fn as_single_power(&self) -> Option<(f64, f64)> {
        match self.segments.as_slice() {
            [s] if s.lo == 0.0 && s.hi.is_infinite() => Some((s.coeff, s.exponent.as_constant()?)),
            _ => None,
        }
    }
}

/// Where a norm is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    All,
    Ball { radius: f64 },
    Annulus { lo: f64, hi: f64 },
    /// `2^{k-1} < |x| ≤ 2^k`.
    Shell { k: i32 },
}

impl Region {
    /// Radial interval `(lo, hi]`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Region::All => (0.0, f64::INFINITY),
            Region::Ball { radius } => (0.0, radius),
            Region::Annulus { lo, hi } => (lo, hi),
            Region::Shell { k } => (2f64.powi(k - 1), 2f64.powi(k)),
        }
    }

    /// Lebesgue measure in ℝⁿ.
    pub fn measure(&self, n: usize) -> f64 {
        let (lo, hi) = self.bounds();
        let d = n as i32;
        sphere_area(n) * (hi.powi(d) - lo.powi(d)) / n as f64
    }
}

/// A non-negative radial function known through `ln f(r)`.
pub trait RadialFunction: Sync {
    /// `ln f(r)`, `-∞` where `f` vanishes.
    fn ln_value(&self, r: f64) -> f64;

    /// Radii where `f` may fail to be smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Smallest interval outside which `f` vanishes.
    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    /// Power exponents of `f` as `r → 0` and `r → ∞`, when known.
    fn tail_exponents(&self) -> (Option<f64>, Option<f64>) {
        (None, None)
    }

    /// Power-law segments, when the function has them.
    fn power_segments(&self) -> Option<&[Segment]> {
        None
    }
}

impl RadialFunction for PiecewisePowerFunction {
    fn ln_value(&self, r: f64) -> f64 {
        PiecewisePowerFunction::ln_value(self, r)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.segments.iter().flat_map(|s| [s.lo, s.hi]).collect();
        b.extend(self.segments.iter().flat_map(|s| s.exponent.breakpoints()));
        b
    }

    fn support(&self) -> (f64, f64) {
        match (self.segments.first(), self.segments.last()) {
            (Some(a), Some(b)) => (a.lo, b.hi),
            _ => (0.0, 0.0),
        }
    }

    fn tail_exponents(&self) -> (Option<f64>, Option<f64>) {
        let at0 = self.segments.first().filter(|s| s.lo == 0.0).map(|s| s.exponent.at_origin());
        let at_inf = self.segments.last().filter(|s| s.hi.is_infinite()).map(|s| s.exponent.at_infinity());
        (at0, at_inf)
    }

    fn power_segments(&self) -> Option<&[Segment]> {
        Some(&self.segments)
    }
}

/// Everything that defines one modular `F(η) = ∫_region (g/η)^{p} dx` with
/// `g = f · |x|^γ · exp(scale · α(|x|))`.
#[derive(Clone, Copy)]
pub struct ModularSpec<'a> {
    pub f: &'a dyn RadialFunction,
    pub p: &'a Exponent,
    pub gamma: f64,
    /// Pointwise factor `exp(scale · α(r))`, e.g. `2^{kα(·)}` with scale `k ln 2`.
    pub log_multiplier: Option<(f64, &'a SignedExponent)>,
    pub region: Region,
}

impl<'a> ModularSpec<'a> {
    pub fn new(f: &'a dyn RadialFunction, p: &'a Exponent, region: Region) -> Self {
        Self {
            f,
            p,
            gamma: 0.0,
            log_multiplier: None,
            region,
        }
    }

    pub fn weighted(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// Multiplies the integrand base by `2^{k α(·)}`.
    pub fn dyadic_multiplier(mut self, k: i32, alpha: &'a SignedExponent) -> Self {
        self.log_multiplier = Some((f64::from(k) * LN_2, alpha));
        self
    }
}

enum Base<'a> {
    /// `ln g = ln_c + b ln r` with constant `b`.
    Power { ln_c: f64, b: f64 },
    Segment(&'a Segment),
    General,
}

struct Piece<'a> {
    lo: f64,
    hi: f64,
    base: Base<'a>,
    p_const: Option<f64>,
    /// `ln F` at `η = 1`, cached when `p` is constant on the piece.
    ln_at_unit: Option<f64>,
}

/// A modular prepared for repeated evaluation at different `η`.
pub struct Modular<'a> {
    spec: ModularSpec<'a>,
    ctx: NormContext,
    pieces: Vec<Piece<'a>>,
    divergent: bool,
    /// Set when some quadrature stopped before reaching its tolerance.
    pub quadrature_warning: bool,
}

pub(crate) fn ln_power_integral(k: f64, lo: f64, hi: f64) -> f64 {
    // ln ∫_lo^hi r^{k-1} dr
    if lo == 0.0 {
        return if k > 0.0 { k * hi.ln() - k.ln() } else { f64::INFINITY };
    }
    if hi.is_infinite() {
        return if k < 0.0 { k * lo.ln() - (-k).ln() } else { f64::INFINITY };
    }
    let d = (hi / lo).ln();
    if k == 0.0 {
        d.ln()
    } else if k > 0.0 {
        k * hi.ln() + (-(-k * d).exp_m1()).ln() - k.ln()
    } else {
        k * lo.ln() + (-(k * d).exp_m1()).ln() - (-k).ln()
    }
}

pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    if m.is_infinite() {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Slope of `ln g` against `ln r` far out on one side, for functions without
/// a known tail exponent.
fn numeric_tail_slope(f: &dyn RadialFunction, towards_infinity: bool) -> Option<f64> {
    let (u1, u2) = if towards_infinity { (60.0, 80.0) } else { (-60.0, -80.0) };
    let a = f.ln_value(f64::exp(u1));
    let b = f.ln_value(f64::exp(u2));
    if a.is_finite() && b.is_finite() {
        Some((b - a) / (u2 - u1))
    } else {
        None
    }
}

/// `ln ∫_{u_lo}^{u_hi} exp(L(u)) du` for a log-integrand `L`. `rate` is the
/// exponential decay rate on infinite ends; it sets the tail map scale.
/// Returns the value and whether the quadrature met its tolerance.
pub(crate) fn integrate_log(log_integrand: impl Fn(f64) -> f64, u_lo: f64, u_hi: f64, rate: f64, cfg: &QuadConfig) -> (f64, bool) {
    let scale = if rate > 0.0 { (1.0 / rate).clamp(1.0, 1e4) } else { 1e4 };
    let probes: Vec<f64> = match (u_lo.is_finite(), u_hi.is_finite()) {
        (true, true) => (0..=8).map(|k| u_lo + (u_hi - u_lo) * k as f64 / 8.0).collect(),
        (true, false) => (0..=8).map(|k| u_lo + scale * k as f64).collect(),
        (false, true) => (0..=8).map(|k| u_hi - scale * k as f64).collect(),
        (false, false) => (-4..=4).map(|k| scale * k as f64).collect(),
    };
    let probed: Vec<f64> = probes.iter().map(|u| log_integrand(*u)).collect();
    if probed.contains(&f64::INFINITY) {
        return (f64::INFINITY, true);
    }
    let shift = probed.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, true);
    }
    let cfg = cfg.tail_scale(scale);
    let res = integrate(
        |u| {
            let v = log_integrand(u);
            if v == f64::NEG_INFINITY {
                0.0
            } else {
                (v - shift).exp()
            }
        },
        u_lo,
        u_hi,
        &cfg,
    );
    let v = if res.value > 0.0 {
        shift + res.value.ln()
    } else if res.value.is_nan() {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    (v, res.converged)
}

impl<'a> Modular<'a> {
    pub fn new(spec: ModularSpec<'a>, ctx: NormContext) -> Self {
        let mut m = Self {
            spec,
            ctx,
            pieces: Vec::new(),
            divergent: false,
            quadrature_warning: false,
        };
        m.build();
        m
    }

    fn split_points(&self, lo: f64, hi: f64, extra: Vec<f64>) -> Vec<f64> {
        let mut pts = vec![lo, hi];
        pts.extend(extra);
        pts.extend(self.spec.p.breakpoints());
        if let Some((_, alpha)) = self.spec.log_multiplier {
            pts.extend(alpha.breakpoints());
        }
        pts.retain(|x| *x >= lo && *x <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn build(&mut self) {
        let (r_lo, r_hi) = self.spec.region.bounds();
        let (s_lo, s_hi) = self.spec.f.support();
        let lo = r_lo.max(s_lo);
        let hi = r_hi.min(s_hi);
        if !(lo < hi) {
            return;
        }
        if let Some(segments) = self.spec.f.power_segments() {
            for seg in segments {
                if seg.coeff == 0.0 {
                    continue;
                }
                let a = seg.lo.max(lo);
                let b = seg.hi.min(hi);
                if !(a < b) {
                    continue;
                }
                let pts = self.split_points(a, b, seg.exponent.breakpoints());
                for w in pts.windows(2) {
                    self.push_piece(w[0], w[1], Base::Segment(seg));
                }
            }
        } else {
            let pts = self.split_points(lo, hi, self.spec.f.breakpoints());
            for w in pts.windows(2) {
                self.push_piece(w[0], w[1], Base::General);
            }
        }
        // Split doubly infinite pieces at r = 1 so each quadrature has one
        // infinite end.
        let mut i = 0;
        while i < self.pieces.len() {
            if self.pieces[i].lo == 0.0 && self.pieces[i].hi.is_infinite() {
                let mut right = self.clone_piece(i);
                right.lo = 1.0;
                self.pieces[i].hi = 1.0;
                self.pieces.insert(i + 1, right);
            }
            i += 1;
        }
        for i in 0..self.pieces.len() {
            if self.piece_diverges(i) {
                self.divergent = true;
                return;
            }
        }
        for i in 0..self.pieces.len() {
            if self.pieces[i].p_const.is_some() {
                let v = self.piece_ln_value(i, 0.0);
                self.pieces[i].ln_at_unit = Some(v);
            }
        }
    }

    fn clone_piece(&self, i: usize) -> Piece<'a> {
        let p = &self.pieces[i];
        Piece {
            lo: p.lo,
            hi: p.hi,
            base: match p.base {
                Base::Power { ln_c, b } => Base::Power { ln_c, b },
                Base::Segment(s) => Base::Segment(s),
                Base::General => Base::General,
            },
            p_const: p.p_const,
            ln_at_unit: None,
        }
    }

    fn push_piece(&mut self, lo: f64, hi: f64, base: Base<'a>) {
        let p_const = constant_on(self.spec.p.profile(), lo, hi);
        let mult_const = match self.spec.log_multiplier {
            None => Some(0.0),
            Some((scale, alpha)) => constant_on(alpha.profile(), lo, hi).map(|a| scale * a),
        };
        let base = match base {
            Base::Segment(seg) => match (seg.exponent.constant_on(lo, hi), mult_const) {
                (Some(b), Some(m)) => Base::Power {
                    ln_c: seg.coeff.ln() + m,
                    b: b + self.spec.gamma,
                },
                _ => Base::Segment(seg),
            },
            other => other,
        };
        self.pieces.push(Piece {
            lo,
            hi,
            base,
            p_const,
            ln_at_unit: None,
        });
    }

    /// Power exponent of `g` at the outer end of a piece.
    fn tail_b(&self, piece: &Piece, towards_infinity: bool) -> Option<f64> {
        match piece.base {
            Base::Power { b, .. } => Some(b),
            Base::Segment(seg) => Some(
                if towards_infinity {
                    seg.exponent.at_infinity()
                } else {
                    seg.exponent.at_origin()
                } + self.spec.gamma,
            ),
            Base::General => {
                let (t0, t_inf) = self.spec.f.tail_exponents();
                let t = if towards_infinity { t_inf } else { t0 };
                t.or_else(|| numeric_tail_slope(self.spec.f, towards_infinity))
                    .map(|b| b + self.spec.gamma)
            }
        }
    }

    fn piece_diverges(&self, i: usize) -> bool {
        let piece = &self.pieces[i];
        let n = self.ctx.n as f64;
        if piece.lo == 0.0 {
            let p0 = self.spec.p.at_origin();
            match self.tail_b(piece, false) {
                Some(b) if n + b * p0 > 0.0 => {}
                Some(_) => return true,
                None => {}
            }
        }
        if piece.hi.is_infinite() {
            let p_inf = self.spec.p.at_infinity();
            match self.tail_b(piece, true) {
                Some(b) if n + b * p_inf < 0.0 => {}
                Some(_) => return true,
                None => {}
            }
        }
        false
    }

    fn ln_base(&self, piece: &Piece, r: f64) -> f64 {
        let ln_r = r.ln();
        let mut v = match piece.base {
            Base::Power { ln_c, b } => return ln_c + b * ln_r,
            Base::Segment(seg) => seg.ln_value(r),
            Base::General => self.spec.f.ln_value(r),
        };
        v += self.spec.gamma * ln_r;
        if let Some((scale, alpha)) = self.spec.log_multiplier {
            v += scale * alpha.eval(r);
        }
        v
    }

    /// `ln ∫_piece |S^{n-1}| r^{n-1} (g/η)^{p} dr`.
    fn piece_ln_value(&mut self, i: usize, ln_eta: f64) -> f64 {
        let piece = &self.pieces[i];
        let n = self.ctx.n as f64;
        let ln_s = self.ctx.sphere().ln();
        if let (Base::Power { ln_c, b }, Some(p)) = (&piece.base, piece.p_const) {
            return ln_s + p * (ln_c - ln_eta) + ln_power_integral(n + b * p, piece.lo, piece.hi);
        }
        let p_profile = self.spec.p.profile();
        let log_integrand = |u: f64| -> f64 {
            let r = u.exp();
            // Tail-map nodes far enough out to leave the float range carry no
            // mass once the tails are known to converge.
            if !(r > 0.0 && r.is_finite()) {
                return f64::NEG_INFINITY;
            }
            let p = piece.p_const.unwrap_or_else(|| p_profile.eval(r));
            let g = self.ln_base(piece, r);
            if g == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            n * u + p * (g - ln_eta)
        };
        let u_lo = piece.lo.ln();
        let u_hi = piece.hi.ln();
        // Decay rate in u on infinite ends sets the tail map scale.
        let mut rate = f64::INFINITY;
        if u_lo.is_infinite() {
            if let Some(b) = self.tail_b(piece, false) {
                rate = rate.min((n + b * self.spec.p.at_origin()).abs());
            }
        }
        if u_hi.is_infinite() {
            if let Some(b) = self.tail_b(piece, true) {
                rate = rate.min((n + b * self.spec.p.at_infinity()).abs());
            }
        }
        let (v, converged) = integrate_log(log_integrand, u_lo, u_hi, rate, &self.ctx.quad);
        if !converged {
            self.quadrature_warning = true;
        }
        ln_s + v
    }

    pub fn is_divergent(&self) -> bool {
        self.divergent
    }

    pub fn is_trivial(&self) -> bool {
        self.pieces.is_empty()
    }

    /// `ln F(g/η)`.
    pub fn ln_value(&mut self, ln_eta: f64) -> f64 {
        if self.divergent {
            return f64::INFINITY;
        }
        let mut acc = f64::NEG_INFINITY;
        for i in 0..self.pieces.len() {
            let v = match (self.pieces[i].ln_at_unit, self.pieces[i].p_const) {
                (Some(at_unit), Some(p)) => at_unit - p * ln_eta,
                _ => self.piece_ln_value(i, ln_eta),
            };
            acc = log_add(acc, v);
        }
        acc
    }

    /// `F(g/η)`.
    pub fn value(&mut self, eta: f64) -> f64 {
        self.ln_value(eta.ln()).exp()
    }
}

/// Outcome of a Luxemburg norm computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub value: f64,
    /// `F(g/η*)`, at most 1.
    pub modular_at_norm: f64,
    /// `F(g/(η*(1-δ)))`, at least 1.
    pub modular_below_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub quadrature_warning: bool,
}

impl NormReport {
    fn exact(value: f64) -> Self {
        Self {
            value,
            modular_at_norm: if value == 0.0 { 0.0 } else { f64::NAN },
            modular_below_norm: f64::NAN,
            iterations: 0,
            converged: true,
            quadrature_warning: false,
        }
    }
}

/// Smallest `η` with `ln F(η) ≤ 0`, by bisection in `ln η` with an initial
/// bracket `[1e-12, 1e12]` widened geometrically when needed.
pub fn solve_luxemburg(mut ln_f: impl FnMut(f64) -> f64) -> NormReport {
    let step = 1e6f64.ln();
    let mut lo = 1e-12f64.ln();
    let mut hi = 1e12f64.ln();
    let limit = 1e300f64.ln();
    let mut iterations = 0;
    while ln_f(hi) > 0.0 {
        hi += step;
        iterations += 1;
        if hi > limit {
            return NormReport {
                value: f64::INFINITY,
                iterations,
                converged: true,
                ..NormReport::exact(f64::INFINITY)
            };
        }
    }
    while ln_f(lo) <= 0.0 {
        lo -= step;
        iterations += 1;
        if lo < -limit {
            return NormReport::exact(0.0);
        }
    }
    let gap = -(1.0 - CERTIFICATE_GAP).ln();
    let mut converged = true;
    while hi - lo > gap {
        if iterations >= MAX_BISECTIONS {
            converged = false;
            break;
        }
        let mid = 0.5 * (lo + hi);
        if ln_f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    NormReport {
        value: hi.exp(),
        modular_at_norm: ln_f(hi).exp(),
        modular_below_norm: ln_f(hi + (1.0 - CERTIFICATE_GAP).ln()).exp(),
        iterations,
        converged,
        quadrature_warning: false,
    }
}

/// Luxemburg norm of the integrand described by `spec`.
pub fn norm_report(spec: ModularSpec<'_>, ctx: NormContext) -> NormReport {
    let mut m = Modular::new(spec, ctx);
    if m.is_trivial() {
        return NormReport::exact(0.0);
    }
    if m.is_divergent() {
        return NormReport::exact(f64::INFINITY);
    }
    let mut report = solve_luxemburg(|x| m.ln_value(x));
    report.quadrature_warning = m.quadrature_warning;
    report
}

pub fn modular_value(spec: ModularSpec<'_>, ctx: NormContext) -> f64 {
    let mut m = Modular::new(spec, ctx);
    if m.is_trivial() {
        return 0.0;
    }
    m.value(1.0)
}

/// `F_p(g χ_region) = ∫_region g(|x|)^{p(|x|)} dx`.
pub fn modular(g: &PiecewisePowerFunction, p: &Exponent, region: Region, ctx: NormContext) -> f64 {
    modular_value(ModularSpec::new(g, p, region), ctx)
}

/// `inf{η > 0 : F_p(g/η) ≤ 1}` on `region`.
pub fn luxemburg_norm(g: &PiecewisePowerFunction, p: &Exponent, region: Region, ctx: NormContext) -> f64 {
    norm_report(ModularSpec::new(g, p, region), ctx).value
}

/// `‖f‖_{L^{p(·)}_ω} = ‖f ω‖_{L^{p(·)}}` on `region`.
pub fn weighted_vexp_norm(f: &PiecewisePowerFunction, p: &Exponent, w: &PowerWeight, region: Region, ctx: NormContext) -> f64 {
    norm_report(ModularSpec::new(f, p, region).weighted(w.gamma), ctx).value
}

/// Luxemburg norm of the constant 1 on `region` for an exponent that may be
/// infinite; on the set where it is infinite the sup branch enforces norm ≥ 1.
pub fn norm_of_one(r: &ExtendedExponent, region: Region, ctx: NormContext) -> f64 {
    let (lo, hi) = region.bounds();
    if !(lo < hi) {
        return 0.0;
    }
    if let Some(c) = r.constant_reciprocal() {
        if c == 0.0 {
            return 1.0;
        }
        // F(η) = |region| η^{-1/c}.
        return region.measure(ctx.n).powf(c);
    }
    if hi.is_infinite() && r.reciprocal_at_infinity() > 0.0 {
        return f64::INFINITY;
    }
    let n = ctx.n as f64;
    let ln_s = ctx.sphere().ln();
    let mut pts = vec![lo, hi];
    pts.extend(r.breakpoints().into_iter().filter(|b| *b > lo && *b < hi));
    if lo == 0.0 && hi.is_infinite() {
        pts.push(1.0);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    // Intervals on which the exponent is identically infinite.
    let mut has_sup_part = false;
    let mut finite_parts = Vec::new();
    for w in pts.windows(2) {
        let probe = |t: f64| {
            if w[1].is_infinite() {
                w[0].max(1.0) * (1.0 + 10.0 * t)
            } else {
                w[0] + (w[1] - w[0]) * t
            }
        };
        if [0.25, 0.5, 0.75].iter().all(|t| r.reciprocal(probe(*t)) == 0.0) {
            has_sup_part = true;
        } else {
            finite_parts.push((w[0], w[1]));
        }
    }
    let mut warning = false;
    let mut ln_f = |ln_eta: f64| -> f64 {
        let mut acc = f64::NEG_INFINITY;
        for &(a, b) in &finite_parts {
            let log_integrand = |u: f64| {
                let rec = r.reciprocal(u.exp());
                if rec == 0.0 {
                    return if ln_eta > 0.0 {
                        f64::NEG_INFINITY
                    } else if ln_eta == 0.0 {
                        n * u
                    } else {
                        f64::INFINITY
                    };
                }
                n * u - ln_eta / rec
            };
            let res = integrate(
                |u| log_integrand(u).exp(),
                a.ln(),
                b.ln(),
                &ctx.quad,
            );
            if !res.converged {
                warning = true;
                if a == 0.0 || b.is_infinite() {
                    return f64::INFINITY;
                }
            }
            let v = if res.value > 0.0 {
                ln_s + res.value.ln()
            } else if res.value.is_nan() {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
            acc = log_add(acc, v);
        }
        acc
    };
    let finite_norm = if finite_parts.is_empty() {
        0.0
    } else {
        solve_luxemburg(&mut ln_f).value
    };
    if has_sup_part {
        finite_norm.max(1.0)
    } else {
        finite_norm
    }
}
