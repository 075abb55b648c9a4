//! The multilinear Hausdorff operator with radial kernels and radial matrix
//! families, evaluated pointwise by quadrature in `u = ln r`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponents::sphere_area;
use crate::luxemburg::{
    integrate_log, interval_inf_as_null, ln_power_integral, log_add, NormContext, PiecewisePowerFunction,
    RadialFunction,
};
use crate::matrices::{MatrixError, MatrixFamily, ScalarMap};
use crate::quad::QuadConfig;
use crate::spaces::{space_norm, ScanRanges, SpaceError, SpaceSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("operator takes {expected} functions, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("one-sided kernels exist only in dimension 1, got n = {0}")]
    OneSidedDimension(usize),
    #[error("kernel must be non-negative, got coefficient {0}")]
    NegativeKernel(f64),
    #[error("kernel support [{0}, {1}] must satisfy 0 <= lo < hi")]
    BadSupport(f64, f64),
    #[error("evaluation radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("{what} is {value}; the ratio is undefined")]
    DegenerateNorm { what: String, value: f64 },
    #[error("only dimension 1 is supported here, got n = {0}")]
    Unsupported(usize),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// `φ(r) = c · r^a` on `support`, the radial profile of `Φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub c: f64,
    pub a: f64,
    #[serde(with = "interval_inf_as_null")]
    pub support: (f64, f64),
    #[serde(default)]
    pub one_sided: bool,
}

impl Kernel {
    pub fn phi(&self, r: f64) -> f64 {
        if r < self.support.0 || r > self.support.1 {
            0.0
        } else {
            self.c * r.powf(self.a)
        }
    }

    /// Scaling of the kernel by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            c: self.c * factor,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub n: usize,
    pub m: usize,
    pub kernel: Kernel,
    pub families: Vec<MatrixFamily>,
}

impl OperatorSpec {
    pub fn validate(&self) -> Result<(), OperatorError> {
        if self.families.len() != self.m {
            return Err(OperatorError::Arity {
                expected: self.m,
                got: self.families.len(),
            });
        }
        if self.kernel.one_sided && self.n != 1 {
            return Err(OperatorError::OneSidedDimension(self.n));
        }
        if !(self.kernel.c >= 0.0) {
            return Err(OperatorError::NegativeKernel(self.kernel.c));
        }
        let (lo, hi) = self.kernel.support;
        if !(lo >= 0.0 && lo < hi) {
            return Err(OperatorError::BadSupport(lo, hi));
        }
        for fam in &self.families {
            fam.validate(self.n)?;
            if fam.scalar().c == 0.0 {
                return Err(MatrixError::Singular { t: lo }.into());
            }
        }
        Ok(())
    }

    /// `|S^{n-1}|`, or 1 for a one-sided kernel on the half line.
    pub fn sigma(&self) -> f64 {
        if self.kernel.one_sided {
            1.0
        } else {
            sphere_area(self.n)
        }
    }

    pub fn scalars(&self) -> impl Iterator<Item = &ScalarMap> {
        self.families.iter().map(|f| f.scalar())
    }

    /// The same operator with `φ` replaced by `factor · φ`.
    pub fn with_scaled_kernel(&self, factor: f64) -> Self {
        Self {
            kernel: self.kernel.scaled(factor),
            ..self.clone()
        }
    }

    /// `σ ∫ φ(r) r^{-1} Π |s_i(r)|^{b_i} dr`, the eigenvalue of the operator on
    /// the powers `|x|^{b_i}`.
    pub fn power_eigenvalue(&self, bs: &[f64]) -> f64 {
        let k = &self.kernel;
        if k.c == 0.0 {
            return 0.0;
        }
        let mut ln_coeff = self.sigma().ln() + k.c.ln();
        let mut slope = k.a;
        for (s, b) in self.scalars().zip(bs) {
            ln_coeff += b * s.c.abs().ln();
            slope += s.a * b;
        }
        (ln_coeff + ln_power_integral(slope, k.support.0, k.support.1)).exp()
    }
}

/// One-sided `n = 1` operator with kernel `ψ(r)` on `[0, 1]` and dilations `s_i`.
pub fn from_multilinear_hardy_cesaro(psi: ScalarMap, ss: &[ScalarMap]) -> OperatorSpec {
    OperatorSpec {
        n: 1,
        m: ss.len(),
        kernel: Kernel {
            c: psi.c,
            a: psi.a + 1.0,
            support: (0.0, 1.0),
            one_sided: true,
        },
        families: ss.iter().map(|s| MatrixFamily::ScalarDilation { s: *s }).collect(),
    }
}

pub fn from_hardy_cesaro(psi: ScalarMap, s: ScalarMap) -> OperatorSpec {
    from_multilinear_hardy_cesaro(psi, &[s])
}

/// Weighted Hardy-Littlewood average `U_ψ f(x) = ∫₀¹ f(tx) ψ(t) dt`.
pub fn from_hardy_littlewood(psi: ScalarMap) -> OperatorSpec {
    from_hardy_cesaro(psi, ScalarMap::new(1.0, 1.0))
}

/// Same as [`from_hardy_littlewood`], rejecting dimensions other than 1.
pub fn hardy_littlewood_in(n: usize, psi: ScalarMap) -> Result<OperatorSpec, OperatorError> {
    if n != 1 {
        return Err(OperatorError::Unsupported(n));
    }
    Ok(from_hardy_littlewood(psi))
}

/// A pointwise value of `H(f⃗)(x)` with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValue {
    pub value: f64,
    pub divergent: bool,
    pub converged: bool,
}

enum EndBehavior {
    Vanishes,
    Slope(f64),
    Unknown,
}

struct Integrand<'a> {
    spec: &'a OperatorSpec,
    fs: &'a [&'a dyn RadialFunction],
    ln_x: f64,
    ln_prefactor: f64,
}

impl Integrand<'_> {
    fn ln_value(&self, u: f64) -> f64 {
        let mut v = self.ln_prefactor + self.spec.kernel.a * u;
        for (f, s) in self.fs.iter().zip(self.spec.scalars()) {
            let arg = (s.ln_abs(u) + self.ln_x).exp();
            // Tail-map nodes beyond the float range carry no mass once the
            // end behavior has been checked.
            if !(arg > 0.0 && arg.is_finite()) {
                return f64::NEG_INFINITY;
            }
            let lf = f.ln_value(arg);
            if lf == f64::NEG_INFINITY {
                return lf;
            }
            v += lf;
        }
        v
    }

    /// Growth rate in `u` of the log-integrand as `u → ±∞`.
    fn end_behavior(&self, towards_infinity: bool) -> EndBehavior {
        let mut slope = self.spec.kernel.a;
        for (f, s) in self.fs.iter().zip(self.spec.scalars()) {
            if s.a == 0.0 {
                continue;
            }
            let arg_to_zero = (s.a > 0.0) != towards_infinity;
            let (lo, hi) = f.support();
            let (t0, t_inf) = f.tail_exponents();
            let tail = if arg_to_zero {
                if lo > 0.0 {
                    return EndBehavior::Vanishes;
                }
                t0
            } else {
                if hi.is_finite() {
                    return EndBehavior::Vanishes;
                }
                t_inf
            };
            match tail {
                Some(b) => slope += s.a * b,
                None => return EndBehavior::Unknown,
            }
        }
        EndBehavior::Slope(slope)
    }

    fn numeric_slope(&self, towards_infinity: bool) -> EndBehavior {
        let (u1, u2) = if towards_infinity { (60.0, 80.0) } else { (-60.0, -80.0) };
        let a = self.ln_value(u1);
        let b = self.ln_value(u2);
        if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
            EndBehavior::Vanishes
        } else {
            EndBehavior::Slope((b - a) / (u2 - u1))
        }
    }
}

fn check_arity(spec: &OperatorSpec, got: usize) -> Result<(), OperatorError> {
    if got != spec.m {
        return Err(OperatorError::Arity { expected: spec.m, got });
    }
    Ok(())
}

/// `H(f⃗)(x)` at `|x| = x` with diagnostics.
pub fn apply_report(spec: &OperatorSpec, fs: &[&dyn RadialFunction], x: f64, cfg: &QuadConfig) -> Result<PointValue, OperatorError> {
    check_arity(spec, fs.len())?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(OperatorError::BadRadius(x));
    }
    let zero = PointValue {
        value: 0.0,
        divergent: false,
        converged: true,
    };
    if spec.kernel.c == 0.0 {
        return Ok(zero);
    }
    let integrand = Integrand {
        spec,
        fs,
        ln_x: x.ln(),
        ln_prefactor: spec.sigma().ln() + spec.kernel.c.ln(),
    };
    let (r_lo, r_hi) = spec.kernel.support;
    let (u_lo, u_hi) = (r_lo.ln(), r_hi.ln());
    let mut rate = f64::INFINITY;
    for (end, towards_infinity) in [(u_lo, false), (u_hi, true)] {
        if end.is_finite() {
            continue;
        }
        let mut behavior = integrand.end_behavior(towards_infinity);
        if matches!(behavior, EndBehavior::Unknown) {
            behavior = integrand.numeric_slope(towards_infinity);
        }
        if let EndBehavior::Slope(k) = behavior {
            let converges = if towards_infinity { k < 0.0 } else { k > 0.0 };
            if !converges {
                return Ok(PointValue {
                    value: f64::INFINITY,
                    divergent: true,
                    converged: true,
                });
            }
            rate = rate.min(k.abs());
        }
    }
    // Radii where some argument |s_i(r)| x crosses a breakpoint of f_i.
    let mut nodes = vec![u_lo, u_hi];
    for (f, s) in fs.iter().zip(spec.scalars()) {
        if s.a == 0.0 {
            continue;
        }
        for b in f.breakpoints() {
            if b > 0.0 && b.is_finite() {
                let u = (b.ln() - s.c.abs().ln() - integrand.ln_x) / s.a;
                if u > u_lo && u < u_hi {
                    nodes.push(u);
                }
            }
        }
    }
    if u_lo.is_infinite() && u_hi.is_infinite() && nodes.len() == 2 {
        nodes.push(0.0);
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mut acc = f64::NEG_INFINITY;
    let mut converged = true;
    for w in nodes.windows(2) {
        let (v, ok) = integrate_log(|u| integrand.ln_value(u), w[0], w[1], rate, cfg);
        converged &= ok;
        acc = log_add(acc, v);
    }
    Ok(PointValue {
        value: acc.exp(),
        divergent: false,
        converged,
    })
}

/// `H(f⃗)(x)` at `|x| = x`; `+∞` when the defining integral diverges.
pub fn apply_pointwise(spec: &OperatorSpec, fs: &[&dyn RadialFunction], x: f64, cfg: &QuadConfig) -> Result<f64, OperatorError> {
    apply_report(spec, fs, x, cfg).map(|p| p.value)
}

/// The image `H(f⃗)` as a radial function, evaluated lazily by quadrature.
pub struct HausdorffImage<'a> {
    spec: &'a OperatorSpec,
    fs: Vec<&'a dyn RadialFunction>,
    cfg: QuadConfig,
}

impl<'a> HausdorffImage<'a> {
    pub fn new(spec: &'a OperatorSpec, fs: Vec<&'a dyn RadialFunction>, cfg: QuadConfig) -> Result<Self, OperatorError> {
        check_arity(spec, fs.len())?;
        Ok(Self { spec, fs, cfg })
    }

    /// `H(f⃗)(x)`; radii that under- or overflow are clamped to the finite
    /// positive range.
    pub fn value(&self, x: f64) -> f64 {
        let x = x.clamp(f64::MIN_POSITIVE, f64::MAX);
        apply_pointwise(self.spec, &self.fs, x, &self.cfg).expect("arity checked on construction")
    }
}

/// `|s(r)|` at a kernel support end, with `r = 0` and `r = ∞` as limits.
fn scalar_at(s: &ScalarMap, r: f64) -> f64 {
    if s.a == 0.0 {
        s.c.abs()
    } else if r == 0.0 {
        if s.a > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else if r.is_infinite() {
        if s.a > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        s.c.abs() * r.powf(s.a)
    }
}

impl RadialFunction for HausdorffImage<'_> {
    fn ln_value(&self, r: f64) -> f64 {
        self.value(r).ln()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let (r_lo, r_hi) = self.spec.kernel.support;
        let mut out = Vec::new();
        for (f, s) in self.fs.iter().zip(self.spec.scalars()) {
            for end in [r_lo, r_hi] {
                let scale = scalar_at(s, end);
                if !(scale > 0.0 && scale.is_finite()) {
                    continue;
                }
                out.extend(f.breakpoints().into_iter().filter(|b| *b > 0.0 && b.is_finite()).map(|b| b / scale));
            }
        }
        out
    }

    fn support(&self) -> (f64, f64) {
        let (r_lo, r_hi) = self.spec.kernel.support;
        let mut lo: f64 = 0.0;
        let mut hi = f64::INFINITY;
        for (f, s) in self.fs.iter().zip(self.spec.scalars()) {
            let (a, b) = (scalar_at(s, r_lo), scalar_at(s, r_hi));
            let (s_min, s_max) = (a.min(b), a.max(b));
            let (f_lo, f_hi) = f.support();
            if s_max.is_finite() && s_max > 0.0 {
                lo = lo.max(f_lo / s_max);
            }
            if s_min > 0.0 {
                hi = hi.min(f_hi / s_min);
            }
        }
        (lo, hi.max(lo))
    }
}

/// Samples of `H(f⃗)` on a grid, with the exact image when every input is a
/// single power.
#[derive(Debug, Clone, PartialEq)]
pub struct GridImage {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub closed_form: Option<PiecewisePowerFunction>,
}

/// `K · Π c_i · |x|^{Σ b_i}` when every `f_i = c_i |x|^{b_i}`.
pub fn power_image(spec: &OperatorSpec, fs: &[PiecewisePowerFunction]) -> Option<PiecewisePowerFunction> {
    let powers: Option<Vec<(f64, f64)>> = fs.iter().map(|f| f.as_single_power()).collect();
    let powers = powers?;
    let bs: Vec<f64> = powers.iter().map(|p| p.1).collect();
    let k = spec.power_eigenvalue(&bs);
    if !k.is_finite() {
        return None;
    }
    let c: f64 = powers.iter().map(|p| p.0).product();
    Some(PiecewisePowerFunction::single_power(k * c, bs.iter().sum()))
}

pub fn apply_on_grid(
    spec: &OperatorSpec,
    fs: &[PiecewisePowerFunction],
    r_grid: &[f64],
    cfg: &QuadConfig,
) -> Result<GridImage, OperatorError> {
    check_arity(spec, fs.len())?;
    if let Some(&bad) = r_grid.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(OperatorError::BadRadius(bad));
    }
    if let Some(image) = power_image(spec, fs) {
        return Ok(GridImage {
            radii: r_grid.to_vec(),
            values: r_grid.iter().map(|r| image.value(*r)).collect(),
            closed_form: Some(image),
        });
    }
    let refs: Vec<&dyn RadialFunction> = fs.iter().map(|f| f as &dyn RadialFunction).collect();
    let values: Result<Vec<f64>, OperatorError> = r_grid.par_iter().map(|r| apply_pointwise(spec, &refs, *r, cfg)).collect();
    Ok(GridImage {
        radii: r_grid.to_vec(),
        values: values?,
        closed_form: None,
    })
}

/// `‖H(f⃗)‖_target / Π ‖f_i‖_source_i` with the norms that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub ratio: f64,
    pub image_norm: f64,
    pub source_norms: Vec<f64>,
}

pub fn operator_ratio(
    spec: &OperatorSpec,
    fs: &[PiecewisePowerFunction],
    sources: &[SpaceSpec],
    target: &SpaceSpec,
    ranges: &ScanRanges,
    ctx: NormContext,
) -> Result<RatioReport, OperatorError> {
    check_arity(spec, fs.len())?;
    check_arity(spec, sources.len())?;
    let mut source_norms = Vec::with_capacity(fs.len());
    for (i, (f, space)) in fs.iter().zip(sources).enumerate() {
        let v = space_norm(f, space, ranges, ctx)?.value;
        if !(v > 0.0 && v.is_finite()) {
            return Err(OperatorError::DegenerateNorm {
                what: format!("source norm of f_{}", i + 1),
                value: v,
            });
        }
        source_norms.push(v);
    }
    let image_norm = match power_image(spec, fs) {
        Some(image) => space_norm(&image, target, ranges, ctx)?.value,
        None => {
            let refs: Vec<&dyn RadialFunction> = fs.iter().map(|f| f as &dyn RadialFunction).collect();
            let image = HausdorffImage::new(spec, refs, ctx.quad)?;
            space_norm(&image, target, ranges, ctx)?.value
        }
    };
    let denom: f64 = source_norms.iter().product();
    Ok(RatioReport {
        ratio: image_norm / denom,
        image_norm,
        source_norms,
    })
}
