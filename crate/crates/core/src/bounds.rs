//! The bound constants `C1`–`C12` (with starred lower-bound variants) as
//! radial integrals over the kernel support, and the parameter-region
//! predicates of the sharpness cases.
//!
//! Every matrix-dependent factor of an integrand is a power law in `r` on
//! each piece between crossing points of its max/min pairs, so pieces whose
//! integrand has no `‖1‖_{L^{r(t,·)}}` factor integrate in closed form and
//! divergence is decided exactly. Pieces with such a factor go through
//! quadrature in `u = ln r`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponents::{combine_reciprocal, difference_reciprocal, pullback_exponent, Exponent, ExponentError, SignedExponent};
use crate::hausdorff::{OperatorError, OperatorSpec};
use crate::luxemburg::{integrate_log, ln_power_integral, log_add, norm_of_one, NormContext, Region};
use crate::matrices::{theta_star, MatrixError, MatrixFamily};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("unknown constant id {0:?}")]
    UnknownId(String),
    #[error("{constant}: hypothesis violated for slot {slot}: {hypothesis}")]
    Hypothesis {
        constant: ConstantId,
        slot: usize,
        hypothesis: String,
    },
    #[error("{expected} slots required by the operator, got {got}")]
    SlotCount { expected: usize, got: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstantId {
    C1,
    C2,
    C2Star,
    C3,
    C4,
    C5,
    C5Star,
    C6,
    C6Star,
    C7,
    C8,
    C9,
    C10,
    C11,
    C12,
}

impl ConstantId {
    pub const ALL: [ConstantId; 15] = [
        ConstantId::C1,
        ConstantId::C2,
        ConstantId::C2Star,
        ConstantId::C3,
        ConstantId::C4,
        ConstantId::C5,
        ConstantId::C5Star,
        ConstantId::C6,
        ConstantId::C6Star,
        ConstantId::C7,
        ConstantId::C8,
        ConstantId::C9,
        ConstantId::C10,
        ConstantId::C11,
        ConstantId::C12,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConstantId::C1 => "C1",
            ConstantId::C2 => "C2",
            ConstantId::C2Star => "C2*",
            ConstantId::C3 => "C3",
            ConstantId::C4 => "C4",
            ConstantId::C5 => "C5",
            ConstantId::C5Star => "C5*",
            ConstantId::C6 => "C6",
            ConstantId::C6Star => "C6*",
            ConstantId::C7 => "C7",
            ConstantId::C8 => "C8",
            ConstantId::C9 => "C9",
            ConstantId::C10 => "C10",
            ConstantId::C11 => "C11",
            ConstantId::C12 => "C12",
        }
    }

    /// Whether the constant is an exact operator norm for `n = 1` scalar
    /// dilations with constant exponents.
    pub fn is_exact_norm(self) -> bool {
        matches!(self, ConstantId::C9 | ConstantId::C12)
    }
}

impl fmt::Display for ConstantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstantId {
    type Err = BoundError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConstantId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| BoundError::UnknownId(s.to_string()))
    }
}

impl Serialize for ConstantId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ConstantId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn one() -> f64 {
    1.0
}

/// Space data attached to one input slot of the operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub q: Exponent,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub alpha: SignedExponent,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "one")]
    pub p: f64,
}

impl Slot {
    pub fn constant(q: f64, gamma: f64, alpha: f64, lambda: f64, p: f64) -> Result<Self, ExponentError> {
        Ok(Self {
            q: Exponent::constant(q)?,
            gamma,
            alpha: SignedExponent::constant(alpha),
            lambda,
            p,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub operator: OperatorSpec,
    pub slots: Vec<Slot>,
    #[serde(default = "one")]
    pub zeta: f64,
}

/// Target-space parameters implied by the slot data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derived {
    /// `1/q = Σ 1/q_i`, absent when the sum does not give an exponent above 1.
    pub q: Option<Exponent>,
    /// `1/p = Σ 1/p_i`.
    pub p: f64,
    /// `Σ γ_i`.
    pub gamma_sum: f64,
    /// `q · Σ γ_i/q_i` for constant exponents.
    pub gamma_scaled: Option<f64>,
    /// `q_∞ · Σ γ_i/q_{i∞}`.
    pub gamma_central: f64,
    /// `Σ (n+γ_i)/(n+γ) λ_i` with `γ` the central weight exponent.
    pub lambda_central: f64,
    /// `Σ α_i` at the origin and at infinity.
    pub alpha_origin: f64,
    pub alpha_infinity: f64,
}

impl BoundConfig {
    pub fn validate(&self) -> Result<(), BoundError> {
        self.operator.validate()?;
        if self.slots.len() != self.operator.m {
            return Err(BoundError::SlotCount {
                expected: self.operator.m,
                got: self.slots.len(),
            });
        }
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(ExponentError::BadScale(self.zeta).into());
        }
        Ok(())
    }

    pub fn derived(&self) -> Derived {
        let n = self.operator.n as f64;
        let qs: Vec<Exponent> = self.slots.iter().map(|s| s.q.clone()).collect();
        let q = combine_reciprocal(&qs).ok();
        let p = 1.0 / self.slots.iter().map(|s| 1.0 / s.p).sum::<f64>();
        let gamma_sum = self.slots.iter().map(|s| s.gamma).sum();
        let gamma_scaled = q.as_ref().and_then(|q| q.as_constant()).and_then(|qc| {
            let mut acc = 0.0;
            for s in &self.slots {
                acc += s.gamma / s.q.as_constant()?;
            }
            Some(qc * acc)
        });
        let inv_q_inf: f64 = self.slots.iter().map(|s| 1.0 / s.q.at_infinity()).sum();
        let gamma_central = self.slots.iter().map(|s| s.gamma / s.q.at_infinity()).sum::<f64>() / inv_q_inf;
        let lambda_central = self.slots.iter().map(|s| (n + s.gamma) * s.lambda).sum::<f64>() / (n + gamma_central);
        Derived {
            q,
            p,
            gamma_sum,
            gamma_scaled,
            gamma_central,
            lambda_central,
            alpha_origin: self.slots.iter().map(|s| s.alpha.at_origin()).sum(),
            alpha_infinity: self.slots.iter().map(|s| s.alpha.at_infinity()).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    pub id: ConstantId,
    pub value: f64,
    pub finite: bool,
    pub breakdown: BTreeMap<String, f64>,
}

/// `exp(ln_c + k u)`, i.e. `e^{ln_c} r^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Power {
    ln_c: f64,
    k: f64,
}

impl Power {
    const ONE: Power = Power { ln_c: 0.0, k: 0.0 };

    fn pow(self, e: f64) -> Power {
        if e == 0.0 {
            return Power::ONE;
        }
        Power {
            ln_c: self.ln_c * e,
            k: self.k * e,
        }
    }

    fn times(self, other: Power) -> Power {
        Power {
            ln_c: self.ln_c + other.ln_c,
            k: self.k + other.k,
        }
    }

    fn ln_at(self, u: f64) -> f64 {
        if self.k == 0.0 {
            self.ln_c
        } else {
            self.ln_c + self.k * u
        }
    }

    /// Where the two laws are equal, if they cross.
    fn crossing(self, other: Power) -> Option<f64> {
        (self.k != other.k).then(|| (other.ln_c - self.ln_c) / (self.k - other.k))
    }
}

enum Factor {
    Pow(Power),
    Max(Power, Power),
    Min(Power, Power),
    /// A constant depending on the radius only through matrix data; it is
    /// evaluated at a representative radius of each piece.
    PerPiece(Box<dyn Fn(f64) -> Result<f64, BoundError> + Sync>),
}

impl Factor {
    fn choose(&self, u: f64) -> Power {
        match self {
            Factor::Pow(p) => *p,
            Factor::Max(a, b) => {
                if a.ln_at(u) >= b.ln_at(u) {
                    *a
                } else {
                    *b
                }
            }
            Factor::Min(a, b) => {
                if a.ln_at(u) <= b.ln_at(u) {
                    *a
                } else {
                    *b
                }
            }
            Factor::PerPiece(_) => Power::ONE,
        }
    }

    fn crossing(&self) -> Option<f64> {
        match self {
            Factor::Max(a, b) | Factor::Min(a, b) => a.crossing(*b),
            _ => None,
        }
    }
}

/// `‖A⁻¹(r)‖ = √n / |s(r)|`.
fn inv_norm(fam: &MatrixFamily, n: usize) -> Power {
    let s = fam.scalar();
    Power {
        ln_c: 0.5 * (n as f64).ln() - s.c.abs().ln(),
        k: -s.a,
    }
}

/// `‖A(r)‖ = √n |s(r)|`.
fn norm(fam: &MatrixFamily, n: usize) -> Power {
    let s = fam.scalar();
    Power {
        ln_c: 0.5 * (n as f64).ln() + s.c.abs().ln(),
        k: s.a,
    }
}

/// `|s(r)|`.
fn scalar(fam: &MatrixFamily) -> Power {
    let s = fam.scalar();
    Power { ln_c: s.c.abs().ln(), k: s.a }
}

/// `|det A⁻¹(r)| = |s(r)|^{-n}`.
fn det_inv(fam: &MatrixFamily, n: usize) -> Power {
    scalar(fam).pow(-(n as f64))
}

/// The two factors of `c_{A,q,w}(t)`.
fn c_factor_parts(fam: &MatrixFamily, n: usize, q: &Exponent, w: f64) -> [Factor; 2] {
    let d = det_inv(fam, n);
    [
        Factor::Max(norm(fam, n).pow(-w), inv_norm(fam, n).pow(w)),
        Factor::Max(d.pow(1.0 / q.upper()), d.pow(1.0 / q.lower())),
    ]
}

fn geometric_sum(theta: i32, x: f64) -> f64 {
    (theta - 1..=0).map(|r| 2f64.powf(f64::from(r) * x)).sum()
}

/// A per-radius `‖1‖_{L^{r_i(t,·)}}` factor for slot `i`.
#[derive(Clone, Copy)]
struct OneNorm {
    slot: usize,
    zeta: f64,
}

/// Integrand assembled for one constant.
struct Assembly {
    factors: Vec<Factor>,
    one_norms: Vec<OneNorm>,
    scalar: f64,
    breakdown: BTreeMap<String, f64>,
}

impl Assembly {
    fn new() -> Self {
        Self {
            factors: Vec::new(),
            one_norms: Vec::new(),
            scalar: 1.0,
            breakdown: BTreeMap::new(),
        }
    }
}

/// Evaluates constants for one configuration, memoizing `‖1‖` factors.
pub struct BoundEvaluator<'a> {
    cfg: &'a BoundConfig,
    ctx: NormContext,
    one_norm_cache: Mutex<HashMap<(usize, u64, u64), f64>>,
}

impl<'a> BoundEvaluator<'a> {
    pub fn new(cfg: &'a BoundConfig, ctx: NormContext) -> Result<Self, BoundError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            ctx,
            one_norm_cache: Mutex::new(HashMap::new()),
        })
    }

    fn n(&self) -> usize {
        self.cfg.operator.n
    }

    fn fam(&self, i: usize) -> &MatrixFamily {
        &self.cfg.operator.families[i]
    }

    /// `‖1‖_{L^{r(t,·)}}` over ℝⁿ with `1/r = 1/q(A⁻¹(t)·) − 1/(ζ q(·))`.
    fn one_norm(&self, slot: usize, zeta: f64, t: f64) -> Result<f64, BoundError> {
        let key = (slot, t.to_bits(), zeta.to_bits());
        if let Some(v) = self.one_norm_cache.lock().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let q = &self.cfg.slots[slot].q;
        let pulled = pullback_exponent(q, self.fam(slot), t)?;
        let r = difference_reciprocal(&pulled, q, zeta)?;
        let v = norm_of_one(&r, Region::All, self.ctx);
        self.one_norm_cache.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }

    fn needs_one_norm(&self, slot: usize, zeta: f64) -> bool {
        !(self.cfg.slots[slot].q.is_constant() && zeta == 1.0)
    }

    fn push_one_norms(&self, asm: &mut Assembly, zeta: f64) {
        for i in 0..self.cfg.slots.len() {
            if self.needs_one_norm(i, zeta) {
                asm.one_norms.push(OneNorm { slot: i, zeta });
            }
        }
    }

    fn hypothesis(&self, id: ConstantId, slot: usize, text: impl Into<String>) -> BoundError {
        BoundError::Hypothesis {
            constant: id,
            slot,
            hypothesis: text.into(),
        }
    }

    fn require_constant_exponents(&self, id: ConstantId) -> Result<(), BoundError> {
        for (i, s) in self.cfg.slots.iter().enumerate() {
            if !s.q.is_constant() || s.alpha.as_constant().is_none() {
                return Err(self.hypothesis(id, i, "constant exponents q_i and α_i"));
            }
        }
        Ok(())
    }

    fn require_central_range(&self, id: ConstantId) -> Result<(), BoundError> {
        let n = self.n() as f64;
        for (i, s) in self.cfg.slots.iter().enumerate() {
            let lo = -1.0 / s.q.at_infinity();
            if !(s.lambda > lo && s.lambda < 0.0) {
                return Err(self.hypothesis(id, i, format!("λ_i = {} must lie in ({lo}, 0)", s.lambda)));
            }
            if !(s.gamma > -n) {
                return Err(self.hypothesis(id, i, format!("γ_i = {} must exceed -n", s.gamma)));
            }
        }
        Ok(())
    }

    fn theta_factor(&self, build: impl Fn(i32) -> f64 + Sync + 'static) -> Factor {
        let fams = self.cfg.operator.families.clone();
        let n = self.n();
        Factor::PerPiece(Box::new(move |t| Ok(build(theta_star(&fams, n, t)?).ln())))
    }

    fn assemble(&self, id: ConstantId) -> Result<Assembly, BoundError> {
        let n = self.n();
        let nf = n as f64;
        let zeta = self.cfg.zeta;
        let mut asm = Assembly::new();
        let slots = &self.cfg.slots;
        let lp = |q: &Exponent, gamma: f64| (nf / q.upper() + gamma, nf / q.lower() + gamma);
        match id {
            ConstantId::C1 => {
                for (i, s) in slots.iter().enumerate() {
                    asm.factors.extend(c_factor_parts(self.fam(i), n, &s.q, s.gamma));
                }
                self.push_one_norms(&mut asm, zeta);
            }
            ConstantId::C2 | ConstantId::C2Star => {
                for (i, s) in slots.iter().enumerate() {
                    let a = inv_norm(self.fam(i), n);
                    let (e1, e2) = lp(&s.q, s.gamma);
                    asm.factors.push(if id == ConstantId::C2 {
                        Factor::Max(a.pow(e1), a.pow(e2))
                    } else {
                        Factor::Min(a.pow(e1), a.pow(e2))
                    });
                }
                if id == ConstantId::C2 {
                    self.push_one_norms(&mut asm, 1.0);
                }
            }
            ConstantId::C3 => {
                for (i, s) in slots.iter().enumerate() {
                    let (a0, a_inf) = (s.alpha.at_origin(), s.alpha.at_infinity());
                    if a0 < a_inf {
                        return Err(self.hypothesis(id, i, "α_i(0) ≥ α_i∞"));
                    }
                    if !(s.lambda > 0.0) {
                        return Err(self.hypothesis(id, i, "λ_i > 0"));
                    }
                    asm.factors.extend(c_factor_parts(self.fam(i), n, &s.q, s.gamma));
                    let a = norm(self.fam(i), n);
                    asm.factors.push(Factor::Max(a.pow(s.lambda - a0), a.pow(s.lambda - a_inf)));
                    let (x0, x_inf) = (s.lambda - a0, s.lambda - a_inf);
                    asm.factors.push(self.theta_factor(move |th| geometric_sum(th, x0).max(geometric_sum(th, x_inf))));
                }
                self.push_one_norms(&mut asm, zeta);
            }
            ConstantId::C4 => {
                let m = slots.len() as f64;
                let p = self.cfg.derived().p;
                for (i, s) in slots.iter().enumerate() {
                    let (a0, a_inf) = (s.alpha.at_origin(), s.alpha.at_infinity());
                    if a0 != a_inf {
                        return Err(self.hypothesis(id, i, "α_i(0) = α_i∞"));
                    }
                    if !(s.p >= 1.0) {
                        return Err(self.hypothesis(id, i, "1 ≤ p_i"));
                    }
                    asm.factors.extend(c_factor_parts(self.fam(i), n, &s.q, s.gamma));
                    asm.factors.push(Factor::Pow(norm(self.fam(i), n).pow(-a0)));
                    asm.factors.push(self.theta_factor(move |th| geometric_sum(th, -a0)));
                }
                asm.factors.push(self.theta_factor(move |th| (2.0 - f64::from(th)).powf(m - 1.0 / p)));
                asm.breakdown.insert("p".into(), p);
                self.push_one_norms(&mut asm, zeta);
            }
            ConstantId::C5 | ConstantId::C5Star => {
                for (i, s) in slots.iter().enumerate() {
                    let a = inv_norm(self.fam(i), n);
                    let (e1, e2) = lp(&s.q, s.gamma);
                    let a0 = s.alpha.at_origin();
                    if id == ConstantId::C5 {
                        asm.factors.push(Factor::Max(a.pow(e1), a.pow(e2)));
                        asm.factors.push(Factor::Pow(a.pow(-s.lambda)));
                        asm.factors.push(Factor::Max(a.pow(a0), a.pow(s.alpha.at_infinity())));
                    } else {
                        let c0 = s.alpha.log_holder().map_or(f64::INFINITY, |h| h.at_origin);
                        asm.factors.push(Factor::Min(a.pow(e1), a.pow(e2)));
                        asm.factors.push(Factor::Pow(a.pow(-s.lambda)));
                        asm.factors.push(Factor::Min(a.pow(a0 + c0), a.pow(a0 - c0)));
                    }
                }
                if id == ConstantId::C5 {
                    self.push_one_norms(&mut asm, 1.0);
                }
            }
            ConstantId::C6 => {
                for (i, s) in slots.iter().enumerate() {
                    let a = inv_norm(self.fam(i), n);
                    let (e1, e2) = lp(&s.q, s.gamma);
                    asm.factors.push(Factor::Max(a.pow(e1), a.pow(e2)));
                    asm.factors.push(Factor::Pow(a.pow(s.alpha.at_origin())));
                }
                self.push_one_norms(&mut asm, 1.0);
            }
            ConstantId::C6Star => {
                let all_constant = slots.iter().all(|s| s.q.is_constant());
                for (i, s) in slots.iter().enumerate() {
                    let a = inv_norm(self.fam(i), n);
                    if all_constant {
                        let q = s.q.as_constant().expect("constant");
                        asm.factors.push(Factor::Pow(a.pow(s.alpha.at_origin() + nf / q + s.gamma)));
                    } else {
                        let (e1, e2) = lp(&s.q, s.gamma);
                        asm.factors.push(Factor::Min(a.pow(e1), a.pow(e2)));
                        asm.factors.push(Factor::Pow(a.pow(s.alpha.sup_norm())));
                    }
                }
            }
            ConstantId::C7 | ConstantId::C8 => {
                self.require_constant_exponents(id)?;
                for (i, s) in slots.iter().enumerate() {
                    let q = s.q.as_constant().expect("constant");
                    let alpha = s.alpha.as_constant().expect("constant");
                    let lambda = if id == ConstantId::C7 { s.lambda } else { 0.0 };
                    let e = -lambda + alpha + (nf + s.gamma) / q;
                    asm.factors.push(Factor::Pow(inv_norm(self.fam(i), n).pow(e)));
                }
            }
            ConstantId::C9 => {
                for (i, s) in slots.iter().enumerate() {
                    let alpha = s
                        .alpha
                        .as_constant()
                        .ok_or_else(|| self.hypothesis(id, i, "constant α_i"))?;
                    if !(s.p >= 1.0) {
                        return Err(self.hypothesis(id, i, "1 ≤ p_i"));
                    }
                    asm.factors.push(Factor::Pow(scalar(self.fam(i)).pow(-alpha - nf / s.p)));
                }
            }
            ConstantId::C10 => {
                self.require_central_range(id)?;
                for (i, s) in slots.iter().enumerate() {
                    let alpha = s
                        .alpha
                        .as_constant()
                        .ok_or_else(|| self.hypothesis(id, i, "constant α_i"))?;
                    let e = (nf + s.gamma) * (1.0 / s.q.at_infinity() + s.lambda);
                    asm.factors.push(Factor::Pow(norm(self.fam(i), n).pow(e)));
                    asm.factors.extend(c_factor_parts(self.fam(i), n, &s.q, alpha));
                }
                self.push_one_norms(&mut asm, 1.0);
            }
            ConstantId::C11 | ConstantId::C12 => {
                self.require_central_range(id)?;
                if id == ConstantId::C11 {
                    self.require_constant_exponents(id)?;
                }
                for (i, s) in slots.iter().enumerate() {
                    let e = if id == ConstantId::C11 {
                        let q = s.q.as_constant().expect("constant");
                        let alpha = s.alpha.as_constant().expect("constant");
                        alpha - s.gamma / q - s.lambda * (nf + s.gamma)
                    } else {
                        -(nf + s.gamma) * s.lambda
                    };
                    asm.factors.push(Factor::Pow(inv_norm(self.fam(i), n).pow(e)));
                }
            }
        }
        Ok(asm)
    }

    pub fn evaluate(&self, id: ConstantId) -> Result<BoundResult, BoundError> {
        let asm = self.assemble(id)?;
        let op = &self.cfg.operator;
        let kernel = &op.kernel;
        let sigma = op.sigma();
        let mut breakdown = asm.breakdown.clone();
        breakdown.insert("sigma".into(), sigma);
        breakdown.insert("kernel_coeff".into(), kernel.c);
        breakdown.insert("scalar".into(), asm.scalar);
        if kernel.c == 0.0 {
            breakdown.insert("integral".into(), 0.0);
            return Ok(BoundResult {
                id,
                value: 0.0,
                finite: true,
                breakdown,
            });
        }
        let (u_lo, u_hi) = (kernel.support.0.ln(), kernel.support.1.ln());
        let mut nodes = vec![u_lo, u_hi];
        nodes.extend(asm.factors.iter().filter_map(Factor::crossing).filter(|u| *u > u_lo && *u < u_hi));
        if u_lo.is_infinite() && u_hi.is_infinite() && nodes.len() == 2 {
            nodes.push(0.0);
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let base = Power { ln_c: 0.0, k: kernel.a };
        let mut ln_total = f64::NEG_INFINITY;
        let mut divergent_at: Option<&'static str> = None;
        let mut converged = true;
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = match (a.is_finite(), b.is_finite()) {
                (true, true) => 0.5 * (a + b),
                (true, false) => a + 1.0,
                (false, true) => b - 1.0,
                (false, false) => 0.0,
            };
            let mut law = base;
            let mut ln_const = 0.0;
            for f in &asm.factors {
                match f {
                    Factor::PerPiece(g) => ln_const += g(mid.exp())?,
                    _ => law = law.times(f.choose(mid)),
                }
            }
            let ln_piece = if asm.one_norms.is_empty() {
                let v = ln_power_integral(law.k, a.exp(), b.exp());
                if v == f64::INFINITY {
                    divergent_at = Some(if a.is_infinite() { "r -> 0" } else { "r -> infinity" });
                }
                law.ln_c + ln_const + v
            } else {
                let ln_norms = |u: f64| -> Result<f64, BoundError> {
                    let t = u.exp();
                    let mut acc = 0.0;
                    for on in &asm.one_norms {
                        acc += self.one_norm(on.slot, on.zeta, t)?.ln();
                    }
                    Ok(acc)
                };
                // Check the per-radius norms at the piece midpoint; errors name
                // the violated pullback hypothesis.
                let probe = ln_norms(mid)?;
                if probe == f64::INFINITY {
                    divergent_at = Some("an infinite ‖1‖ factor");
                    f64::INFINITY
                } else {
                    let mut rate = f64::INFINITY;
                    for (end, sign) in [(a, 1.0), (b, -1.0)] {
                        if end.is_finite() {
                            continue;
                        }
                        let far = -sign * 60.0;
                        let farther = -sign * 80.0;
                        let l1 = law.ln_at(far) + ln_norms(far)?;
                        let l2 = law.ln_at(farther) + ln_norms(farther)?;
                        let slope = (l2 - l1) / (farther - far);
                        // Growth toward the infinite end means divergence.
                        if !(sign * slope > 0.0) || !l1.is_finite() {
                            divergent_at = Some(if sign > 0.0 { "r -> 0" } else { "r -> infinity" });
                        }
                        rate = rate.min(slope.abs());
                    }
                    if divergent_at.is_some() {
                        f64::INFINITY
                    } else {
                        let integrand = |u: f64| law.ln_at(u) + ln_norms(u).unwrap_or(f64::INFINITY);
                        let (v, ok) = integrate_log(integrand, a, b, rate, &self.ctx.quad);
                        converged &= ok;
                        ln_const + v
                    }
                }
            };
            ln_total = log_add(ln_total, ln_piece);
            if divergent_at.is_some() {
                break;
            }
        }
        let integral = if divergent_at.is_some() { f64::INFINITY } else { ln_total.exp() };
        breakdown.insert("integral".into(), integral);
        breakdown.insert("quadrature_converged".into(), if converged { 1.0 } else { 0.0 });
        if divergent_at.is_some() {
            breakdown.insert("divergent".into(), 1.0);
        }
        let value = sigma * kernel.c * asm.scalar * integral;
        Ok(BoundResult {
            id,
            value,
            finite: value.is_finite(),
            breakdown,
        })
    }
}

/// One-shot evaluation of a constant.
pub fn evaluate_constant(cfg: &BoundConfig, id: ConstantId, ctx: NormContext) -> Result<BoundResult, BoundError> {
    BoundEvaluator::new(cfg, ctx)?.evaluate(id)
}

pub fn lebesgue_constants(cfg: &BoundConfig, ctx: NormContext) -> Result<Vec<BoundResult>, BoundError> {
    let ev = BoundEvaluator::new(cfg, ctx)?;
    [ConstantId::C1, ConstantId::C2, ConstantId::C2Star].into_iter().map(|id| ev.evaluate(id)).collect()
}

pub fn herz_morrey_constants(cfg: &BoundConfig, ctx: NormContext) -> Result<Vec<BoundResult>, BoundError> {
    let ev = BoundEvaluator::new(cfg, ctx)?;
    [
        ConstantId::C3,
        ConstantId::C4,
        ConstantId::C5,
        ConstantId::C5Star,
        ConstantId::C6,
        ConstantId::C6Star,
    ]
    .into_iter()
    .map(|id| ev.evaluate(id))
    .collect()
}

pub fn constparam_constants(cfg: &BoundConfig, ctx: NormContext) -> Result<Vec<BoundResult>, BoundError> {
    let ev = BoundEvaluator::new(cfg, ctx)?;
    [ConstantId::C7, ConstantId::C8, ConstantId::C9].into_iter().map(|id| ev.evaluate(id)).collect()
}

pub fn central_morrey_constants(cfg: &BoundConfig, ctx: NormContext) -> Result<Vec<BoundResult>, BoundError> {
    let ev = BoundEvaluator::new(cfg, ctx)?;
    [ConstantId::C10, ConstantId::C11, ConstantId::C12].into_iter().map(|id| ev.evaluate(id)).collect()
}

/// Scalar data of one slot entering the sharpness conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub alpha0: f64,
    pub alpha_inf: f64,
    /// Log-Hölder constants of `α` at the origin and at infinity.
    pub c0: f64,
    pub c_inf: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    pub lambda: f64,
}

impl RegionParams {
    pub fn from_slot(slot: &Slot) -> Self {
        let holder = slot.alpha.log_holder();
        Self {
            alpha0: slot.alpha.at_origin(),
            alpha_inf: slot.alpha.at_infinity(),
            c0: holder.map_or(f64::INFINITY, |h| h.at_origin),
            c_inf: holder.map_or(f64::INFINITY, |h| h.at_infinity),
            q_minus: slot.q.lower(),
            q_plus: slot.q.upper(),
            lambda: slot.lambda,
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SharpnessCase {
    B1,
    B2,
    B3,
    None,
}

/// Endpoints, selectors and signs of the region conditions for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotRegion {
    pub beta0: f64,
    pub beta_inf: f64,
    pub theta0: f64,
    pub theta_inf: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub zeta0: f64,
    pub zeta1: f64,
    pub c_alpha: f64,
    pub case: SharpnessCase,
}

impl SlotRegion {
    pub fn thetas_nonnegative(&self) -> bool {
        self.theta0 >= 0.0 && self.theta_inf >= 0.0
    }

    pub fn in_intervals(&self, lambda: f64) -> bool {
        lambda >= self.eta0 && lambda <= self.eta1 && lambda >= self.zeta0 && lambda <= self.zeta1
    }

    /// Distance from `lambda` to the nearest interval endpoint.
    pub fn endpoint_distance(&self, lambda: f64) -> f64 {
        [self.eta0, self.eta1, self.zeta0, self.zeta1]
            .iter()
            .map(|e| (lambda - e).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn slot_region(p: &RegionParams) -> SlotRegion {
    let (qm, qp) = (p.q_minus, p.q_plus);
    let d = p.alpha0 - p.alpha_inf;
    let up = qp / qm;
    let down = qm / qp;
    let beta0 = if p.lambda - p.alpha0 + p.c0 >= 0.0 { up } else { down };
    let beta_inf = if p.lambda - p.alpha_inf - p.c_inf < 0.0 { up } else { down };
    let theta0 = p.lambda - p.alpha_inf - (p.lambda - p.alpha0 + p.c0) * beta0;
    let theta_inf = p.alpha0 + (p.lambda - p.alpha_inf - p.c_inf) * beta_inf - p.lambda;
    let eta0 = (p.c0 * down - p.alpha0 * down + p.alpha_inf) / (1.0 - down);
    let eta1 = (p.c0 * up - p.alpha0 * up + p.alpha_inf) / (1.0 - up);
    let zeta0 = (p.c_inf * up - p.alpha0 + p.alpha_inf * up) / (up - 1.0);
    let zeta1 = (p.c_inf * down - p.alpha0 + p.alpha_inf * down) / (down - 1.0);
    let c_alpha = qm * d * (1.0 + up) / qp;
    let mut region = SlotRegion {
        beta0,
        beta_inf,
        theta0,
        theta_inf,
        eta0,
        eta1,
        zeta0,
        zeta1,
        c_alpha,
        case: SharpnessCase::None,
    };
    region.case = if qp == qm {
        if p.c0 <= d && p.c_inf <= d {
            SharpnessCase::B1
        } else {
            SharpnessCase::None
        }
    } else if p.c0 == 0.0 && p.c_inf == 0.0 && p.lambda == p.alpha0 && p.lambda == p.alpha_inf {
        SharpnessCase::B2
    } else if p.c0 < d && p.c_inf < d && p.c0 + p.c_inf <= c_alpha && region.in_intervals(p.lambda) {
        SharpnessCase::B3
    } else {
        SharpnessCase::None
    };
    region
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub case: SharpnessCase,
    pub slots: Vec<SlotRegion>,
    pub satisfied: bool,
    /// In case b3, whether the sign test and interval membership agree on
    /// every slot.
    pub equivalence_holds: bool,
}

/// Which sharpness case, if any, the raw slot parameters satisfy. All slots
/// must fall in the same case.
pub fn sharpness_region_check_params(params: &[RegionParams]) -> RegionReport {
    let slots: Vec<SlotRegion> = params.iter().map(slot_region).collect();
    let case = match slots.first() {
        Some(first) if slots.iter().all(|s| s.case == first.case) => first.case,
        _ => SharpnessCase::None,
    };
    let equivalence_holds = case != SharpnessCase::B3
        || slots
            .iter()
            .zip(params)
            .all(|(s, p)| s.thetas_nonnegative() == s.in_intervals(p.lambda));
    RegionReport {
        case,
        satisfied: case != SharpnessCase::None,
        slots,
        equivalence_holds,
    }
}

pub fn sharpness_region_check(cfg: &BoundConfig) -> RegionReport {
    let params: Vec<RegionParams> = cfg.slots.iter().map(RegionParams::from_slot).collect();
    sharpness_region_check_params(&params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HerzSharpnessCase {
    B1,
    B2,
    None,
}

/// Cases of the Herz lower bound: all exponents constant, or otherwise
/// `α_i(0) < ‖α_i‖_∞ q_{i-}/q_{i+}` for every slot.
pub fn herz_sharpness_case(cfg: &BoundConfig) -> HerzSharpnessCase {
    if cfg.slots.iter().all(|s| s.q.is_constant()) {
        HerzSharpnessCase::B1
    } else if cfg
        .slots
        .iter()
        .all(|s| s.alpha.at_origin() < s.alpha.sup_norm() * s.q.lower() / s.q.upper())
    {
        HerzSharpnessCase::B2
    } else {
        HerzSharpnessCase::None
    }
}

/// Whether `Σ 1/q_{i-} = 1/q_+` for the derived `q`, needed by the Lebesgue
/// lower bound.
pub fn lebesgue_lower_bound_applicable(cfg: &BoundConfig) -> bool {
    let lhs: f64 = cfg.slots.iter().map(|s| 1.0 / s.q.lower()).sum();
    match cfg.derived().q {
        Some(q) => (lhs - 1.0 / q.upper()).abs() <= 1e-12 * lhs,
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hausdorff::{from_hardy_littlewood, from_multilinear_hardy_cesaro, Kernel};
    use crate::matrices::ScalarMap;
    use approx::assert_relative_eq;

    fn ctx() -> NormContext {
        NormContext::new(1)
    }

    fn hardy_cfg() -> BoundConfig {
        BoundConfig {
            operator: from_hardy_littlewood(ScalarMap::new(1.0, 0.0)),
            slots: vec![Slot::constant(2.0, 0.0, 0.0, 0.0, 2.0).unwrap()],
            zeta: 1.0,
        }
    }

    pub(crate) fn central_cfg() -> BoundConfig {
        BoundConfig {
            operator: OperatorSpec {
                n: 1,
                m: 1,
                kernel: Kernel {
                    c: 1.0,
                    a: 0.0,
                    support: (1.0, 2.0),
                    one_sided: false,
                },
                families: vec![MatrixFamily::scalar_dilation(1.0, 1.0)],
            },
            slots: vec![Slot::constant(2.0, 0.0, 0.0, -0.1, 2.0).unwrap()],
            zeta: 1.0,
        }
    }

    #[test]
    fn hardy_constants_are_two() {
        let cfg = hardy_cfg();
        for id in [ConstantId::C2, ConstantId::C6, ConstantId::C9] {
            let r = evaluate_constant(&cfg, id, ctx()).unwrap();
            assert_relative_eq!(r.value, 2.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn bilinear_c9() {
        let t = ScalarMap::new(1.0, 1.0);
        let cfg = BoundConfig {
            operator: from_multilinear_hardy_cesaro(ScalarMap::new(1.0, 0.0), &[t, t]),
            slots: vec![Slot::constant(4.0, 0.0, 0.0, 0.0, 4.0).unwrap(); 2],
            zeta: 1.0,
        };
        let r = evaluate_constant(&cfg, ConstantId::C9, ctx()).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn central_c12() {
        let r = evaluate_constant(&central_cfg(), ConstantId::C12, ctx()).unwrap();
        let expected = 2.0 * (2f64.powf(-0.1) - 1.0) / -0.1;
        assert_relative_eq!(r.value, expected, max_relative = 1e-13);
        let c11 = evaluate_constant(&central_cfg(), ConstantId::C11, ctx()).unwrap();
        assert_relative_eq!(c11.value, r.value, max_relative = 1e-14);
    }

    #[test]
    fn identity_families_collapse() {
        let mut cfg = central_cfg();
        cfg.operator.families = vec![MatrixFamily::scalar_dilation(1.0, 0.0)];
        let c1 = evaluate_constant(&cfg, ConstantId::C1, ctx()).unwrap();
        assert_relative_eq!(c1.value, 2.0 * 2f64.ln(), max_relative = 1e-14);
        let c12 = evaluate_constant(&cfg, ConstantId::C12, ctx()).unwrap();
        assert_relative_eq!(c12.value, 2.0 * 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn divergent_constant_is_infinite() {
        let mut cfg = hardy_cfg();
        cfg.slots[0] = Slot::constant(2.0, -0.5, 0.0, 0.0, 2.0).unwrap();
        // ‖A⁻¹‖^{1/2 - 1/2} = 1 and φ(r)/r = 1 on (0, 1]: finite.
        assert!(evaluate_constant(&cfg, ConstantId::C2, ctx()).unwrap().finite);
        cfg.slots[0] = Slot::constant(2.0, 0.6, 0.0, 0.0, 2.0).unwrap();
        let r = evaluate_constant(&cfg, ConstantId::C2, ctx()).unwrap();
        assert!(!r.finite && r.value.is_infinite());
    }

    #[test]
    fn parses_ids() {
        assert_eq!("C2*".parse::<ConstantId>().unwrap(), ConstantId::C2Star);
        assert!("C13".parse::<ConstantId>().is_err());
        for id in ConstantId::ALL {
            assert_eq!(id.to_string().parse::<ConstantId>().unwrap(), id);
        }
    }

    #[test]
    fn central_range_is_checked() {
        let mut cfg = central_cfg();
        cfg.slots[0].lambda = 0.2;
        assert!(matches!(evaluate_constant(&cfg, ConstantId::C12, ctx()), Err(BoundError::Hypothesis { .. })));
    }

    #[test]
    fn region_cases() {
        let b1 = RegionParams {
            alpha0: 0.3,
            alpha_inf: 0.3,
            c0: 0.0,
            c_inf: 0.0,
            q_minus: 2.0,
            q_plus: 2.0,
            lambda: 0.5,
        };
        assert_eq!(sharpness_region_check_params(&[b1]).case, SharpnessCase::B1);
        let b2 = RegionParams {
            q_plus: 3.0,
            lambda: 0.3,
            ..b1
        };
        let r = sharpness_region_check_params(&[b2]);
        assert_eq!(r.case, SharpnessCase::B2);
        assert_eq!((r.slots[0].theta0, r.slots[0].theta_inf), (0.0, 0.0));
    }
}
