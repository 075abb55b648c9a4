//! Extremal families, randomized upper-bound suites and sharpness sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{evaluate_constant, BoundConfig, BoundError, ConstantId};
use crate::exponents::{combine_reciprocal, Exponent, ExponentError, SignedExponent};
use crate::hausdorff::{operator_ratio, OperatorError};
use crate::luxemburg::{ExponentExpr, FunctionError, NormContext, PiecewisePowerFunction, Segment};
use crate::matrices::{rho_bound, MatrixFamily};
use crate::spaces::{shell_norm, space_norm, ScanRanges, SpaceError, SpaceKind, SpaceSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("epsilon list must be non-empty and strictly decreasing")]
    EpsNotDecreasing,
    #[error("extremal function for slot {slot} has source norm {value}; parameters are outside the admissible range")]
    DegenerateExtremal { slot: usize, value: f64 },
    #[error("constant {0} not finite")]
    ConstantNotFinite(ConstantId),
    #[error("{0} does not apply to this configuration")]
    NotApplicable(String),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremalKind {
    LebesgueEps,
    HerzB1Eps,
    HerzB2Eps,
    MorreyHerzPower,
    CentralMorreyPower,
}

impl ExtremalKind {
    pub fn uses_epsilon(self) -> bool {
        matches!(self, ExtremalKind::LebesgueEps | ExtremalKind::HerzB1Eps | ExtremalKind::HerzB2Eps)
    }

    /// The constant whose lower bound the family probes.
    pub fn constant(self) -> ConstantId {
        match self {
            ExtremalKind::LebesgueEps => ConstantId::C2Star,
            ExtremalKind::HerzB1Eps | ExtremalKind::HerzB2Eps => ConstantId::C6Star,
            ExtremalKind::MorreyHerzPower => ConstantId::C5Star,
            ExtremalKind::CentralMorreyPower => ConstantId::C12,
        }
    }
}

/// Source spaces of the slots and the target space of the operator for the
/// theorem behind `id`.
pub fn spaces_for(id: ConstantId, cfg: &BoundConfig) -> Result<(Vec<SpaceSpec>, SpaceSpec), HarnessError> {
    let qs: Vec<Exponent> = cfg.slots.iter().map(|s| s.q.clone()).collect();
    let q = combine_reciprocal(&qs)?;
    let derived = cfg.derived();
    let alpha_sum = || -> Result<SignedExponent, HarnessError> {
        let mut total = 0.0;
        for s in &cfg.slots {
            total += s.alpha.as_constant().ok_or_else(|| {
                HarnessError::NotApplicable(format!("{id} target space with variable α_i"))
            })?;
        }
        Ok(SignedExponent::constant(total))
    };
    let multi_alpha = || -> Result<SignedExponent, HarnessError> {
        if cfg.slots.len() == 1 {
            Ok(cfg.slots[0].alpha.clone())
        } else {
            alpha_sum()
        }
    };
    let lambda_sum: f64 = cfg.slots.iter().map(|s| s.lambda).sum();
    let measure_gamma = |s: &crate::bounds::Slot| s.gamma / s.q.at_infinity();
    let (sources, target) = match id {
        ConstantId::C1 | ConstantId::C2 | ConstantId::C2Star => (
            cfg.slots.iter().map(|s| SpaceSpec::lebesgue(s.q.clone(), s.gamma)).collect(),
            SpaceSpec::lebesgue(q, derived.gamma_sum),
        ),
        ConstantId::C3 | ConstantId::C5 | ConstantId::C5Star => (
            cfg.slots
                .iter()
                .map(|s| SpaceSpec::morrey_herz(s.alpha.clone(), s.lambda, s.p, s.q.clone(), s.gamma))
                .collect(),
            SpaceSpec::morrey_herz(multi_alpha()?, lambda_sum, derived.p, q, derived.gamma_sum),
        ),
        ConstantId::C4 | ConstantId::C6 | ConstantId::C6Star => (
            cfg.slots
                .iter()
                .map(|s| SpaceSpec::herz(s.alpha.clone(), s.p, s.q.clone(), s.gamma))
                .collect(),
            SpaceSpec::herz(multi_alpha()?, derived.p, q, derived.gamma_sum),
        ),
        ConstantId::C7 | ConstantId::C8 | ConstantId::C9 => {
            let target_gamma: f64 = cfg.slots.iter().map(measure_gamma).sum();
            let sources = cfg
                .slots
                .iter()
                .map(|s| {
                    let lambda = if id == ConstantId::C7 { s.lambda } else { 0.0 };
                    SpaceSpec::morrey_herz(s.alpha.clone(), lambda, s.p, s.q.clone(), measure_gamma(s))
                })
                .collect();
            let lambda = if id == ConstantId::C7 { lambda_sum } else { 0.0 };
            (sources, SpaceSpec::morrey_herz(alpha_sum()?, lambda, derived.p, q, target_gamma))
        }
        ConstantId::C10 | ConstantId::C11 | ConstantId::C12 => {
            let weight = |s: &crate::bounds::Slot| {
                if id == ConstantId::C12 {
                    measure_gamma(s)
                } else {
                    s.alpha.at_origin()
                }
            };
            let sources = cfg
                .slots
                .iter()
                .map(|s| SpaceSpec::central_morrey(s.lambda, s.q.clone(), s.gamma, weight(s)))
                .collect();
            let target_weight: f64 = cfg.slots.iter().map(weight).sum();
            (
                sources,
                SpaceSpec::central_morrey(derived.lambda_central, q, derived.gamma_central, target_weight),
            )
        }
    };
    Ok((sources, target))
}

/// Source spaces for the theorem an extremal family probes.
pub fn spaces_for_kind(kind: ExtremalKind, cfg: &BoundConfig) -> Result<(Vec<SpaceSpec>, SpaceSpec), HarnessError> {
    spaces_for(kind.constant(), cfg)
}

fn cutoff_radius(cfg: &BoundConfig) -> Result<f64, HarnessError> {
    let rho = rho_bound(&cfg.operator.families, cfg.operator.n, &[1.0]).map_err(OperatorError::from)?;
    Ok(1.0 / rho)
}

/// The extremal functions of the necessity proofs, one per slot, checked to
/// have finite nonzero source norms.
pub fn extremal_family(
    kind: ExtremalKind,
    cfg: &BoundConfig,
    eps: f64,
    ranges: &ScanRanges,
    ctx: NormContext,
) -> Result<Vec<PiecewisePowerFunction>, HarnessError> {
    if kind.uses_epsilon() && !(eps > 0.0 && eps.is_finite()) {
        return Err(HarnessError::BadEpsilon(eps));
    }
    let n = cfg.operator.n as f64;
    let lo = if kind.uses_epsilon() { cutoff_radius(cfg)? } else { 0.0 };
    let fs: Vec<PiecewisePowerFunction> = cfg
        .slots
        .iter()
        .map(|s| {
            let expr = match kind {
                ExtremalKind::LebesgueEps => ExponentExpr::constant(-s.gamma - eps).plus_reciprocal(-n, &s.q),
                ExtremalKind::HerzB1Eps => {
                    ExponentExpr::constant(-s.alpha.at_origin() - s.gamma - eps).plus_reciprocal(-n, &s.q)
                }
                ExtremalKind::HerzB2Eps => {
                    ExponentExpr::constant(-s.alpha.sup_norm() - s.gamma - eps).plus_reciprocal(-n, &s.q)
                }
                ExtremalKind::MorreyHerzPower => ExponentExpr::constant(s.lambda - s.gamma)
                    .plus_signed(-1.0, &s.alpha)
                    .plus_reciprocal(-n, &s.q),
                ExtremalKind::CentralMorreyPower => ExponentExpr::constant((n + s.gamma) * s.lambda),
            };
            PiecewisePowerFunction::new(vec![Segment::new(lo, f64::INFINITY, 1.0, expr)])
        })
        .collect::<Result<_, _>>()?;
    let (sources, _) = spaces_for_kind(kind, cfg)?;
    for (slot, (f, space)) in fs.iter().zip(&sources).enumerate() {
        let value = space_norm(f, space, ranges, ctx)?.value;
        if !(value > 0.0 && value.is_finite()) {
            return Err(HarnessError::DegenerateExtremal { slot, value });
        }
    }
    Ok(fs)
}

/// Open window `(lower, upper)` for a power exponent near the origin and
/// near infinity that keeps the norm in `space` finite.
fn exponent_window(space: &SpaceSpec, n: usize) -> (f64, f64) {
    let n = n as f64;
    let g = space.gamma;
    let (q0, q_inf) = (space.q.at_origin(), space.q.at_infinity());
    match space.kind {
        SpaceKind::Lebesgue => (-g - n / q0, -g - n / q_inf),
        SpaceKind::Herz => (-space.alpha.at_origin() - g - n / q0, -space.alpha.at_infinity() - g - n / q_inf),
        SpaceKind::MorreyHerz => {
            let base0 = -space.alpha.at_origin() - g - n / q0;
            (base0.max(base0 + space.lambda), space.lambda - space.alpha.at_infinity() - g - n / q_inf)
        }
        SpaceKind::CentralMorrey => {
            let scale = (n + space.ball_gamma) * (space.lambda + 1.0 / q_inf);
            ((-g - n / q0).max(scale - g - n / q0), scale - g - n / q_inf)
        }
    }
}

/// Deterministic piecewise power functions with 2 to 5 contiguous segments
/// whose end exponents lie inside the finiteness window of `space`.
pub fn random_test_functions(seed: u64, count: usize, space: &SpaceSpec, n: usize) -> Vec<PiecewisePowerFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lower, upper) = exponent_window(space, n);
    (0..count)
        .map(|_| {
            let pieces = rng.gen_range(2..=5usize);
            let mut cuts: Vec<f64> = (0..pieces + 1).map(|_| rng.gen_range(-6.0..6.0f64).exp2()).collect();
            cuts.sort_by(f64::total_cmp);
            if rng.gen_bool(0.5) {
                cuts[0] = 0.0;
            }
            if rng.gen_bool(0.5) {
                cuts[pieces] = f64::INFINITY;
            }
            let segments = (0..pieces)
                .map(|i| {
                    let (lo, hi) = (cuts[i], cuts[i + 1]);
                    let b = if lo == 0.0 && hi.is_infinite() {
                        // Only reachable with one piece; kept for completeness.
                        0.5 * (lower + upper)
                    } else if lo == 0.0 {
                        lower + rng.gen_range(0.05..1.5)
                    } else if hi.is_infinite() {
                        upper - rng.gen_range(0.05..1.5)
                    } else {
                        rng.gen_range(-3.0..3.0)
                    };
                    Segment::new(lo, hi, rng.gen_range(0.2..3.0), ExponentExpr::constant(b))
                })
                .collect();
            PiecewisePowerFunction::new(segments).expect("sorted contiguous segments")
        })
        .collect()
}

/// Whether `id` is an exact operator norm for this configuration.
pub fn is_exact_configuration(cfg: &BoundConfig, id: ConstantId) -> bool {
    let op = &cfg.operator;
    let scalar = op.families.iter().all(|f| matches!(f, MatrixFamily::ScalarDilation { .. }));
    let constant = cfg.slots.iter().all(|s| s.q.is_constant() && s.alpha.as_constant().is_some());
    let id_ok = match id {
        ConstantId::C9 => true,
        ConstantId::C12 => op.m == 1,
        _ => false,
    };
    op.n == 1 && scalar && constant && id_ok
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteRow {
    pub seed: u64,
    pub index: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub constant_id: ConstantId,
    pub constant: f64,
    pub exact: bool,
    pub max_ratio: f64,
    /// `max_ratio / constant`, the empirical comparability constant.
    pub max_ratio_over_constant: f64,
    pub violations: usize,
    pub rows: Vec<SuiteRow>,
}

/// Relative slack allowed above an exact constant.
pub const EXACT_SLACK: f64 = 1e-3;

fn slot_seed(seed: u64, slot: usize) -> u64 {
    seed.wrapping_add((slot as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Ratios `‖H(f⃗)‖ / Π‖f_i‖` on `count` random tuples.
pub fn upper_bound_suite(
    cfg: &BoundConfig,
    id: ConstantId,
    count: usize,
    seed: u64,
    ranges: &ScanRanges,
    ctx: NormContext,
) -> Result<SuiteReport, HarnessError> {
    let constant = evaluate_constant(cfg, id, ctx)?;
    if !constant.finite {
        return Err(HarnessError::ConstantNotFinite(id));
    }
    let (sources, target) = spaces_for(id, cfg)?;
    let per_slot: Vec<Vec<PiecewisePowerFunction>> = sources
        .iter()
        .enumerate()
        .map(|(j, space)| random_test_functions(slot_seed(seed, j), count, space, cfg.operator.n))
        .collect();
    let ratios: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| {
            let fs: Vec<PiecewisePowerFunction> = per_slot.iter().map(|v| v[i].clone()).collect();
            operator_ratio(&cfg.operator, &fs, &sources, &target, ranges, ctx).map(|r| r.ratio)
        })
        .collect::<Result<_, _>>()?;
    let exact = is_exact_configuration(cfg, id);
    let limit = constant.value * (1.0 + EXACT_SLACK);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let violations = if exact { ratios.iter().filter(|r| **r > limit).count() } else { 0 };
    Ok(SuiteReport {
        constant_id: id,
        constant: constant.value,
        exact,
        max_ratio,
        max_ratio_over_constant: max_ratio / constant.value,
        violations,
        rows: ratios
            .into_iter()
            .enumerate()
            .map(|(index, ratio)| SuiteRow { seed, index, ratio })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub ratio: f64,
    pub constant: f64,
    pub ratio_over_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub kind: ExtremalKind,
    pub constant_id: ConstantId,
    pub exact: bool,
    pub rows: Vec<SweepRow>,
    /// Whether the ratio never decreases as ε decreases.
    pub monotone: bool,
}

impl SweepTable {
    pub fn final_ratio_over_constant(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.ratio_over_constant)
    }
}

pub const DEFAULT_EPS: [f64; 3] = [0.1, 0.03, 0.01];

/// Ratios of the extremal family against the constant `id`, one row per ε.
pub fn sharpness_sweep(
    cfg: &BoundConfig,
    kind: ExtremalKind,
    id: ConstantId,
    eps_list: &[f64],
    ranges: &ScanRanges,
    ctx: NormContext,
) -> Result<SweepTable, HarnessError> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(HarnessError::EpsNotDecreasing);
    }
    if let Some(&bad) = eps_list.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(HarnessError::BadEpsilon(bad));
    }
    let constant = evaluate_constant(cfg, id, ctx)?;
    if !constant.finite {
        return Err(HarnessError::ConstantNotFinite(id));
    }
    let (sources, target) = spaces_for_kind(kind, cfg)?;
    let rows = eps_list
        .par_iter()
        .map(|&eps| {
            let fs = extremal_family(kind, cfg, eps, ranges, ctx)?;
            let ratio = operator_ratio(&cfg.operator, &fs, &sources, &target, ranges, ctx)?.ratio;
            Ok(SweepRow {
                epsilon: eps,
                ratio,
                constant: constant.value,
                ratio_over_constant: ratio / constant.value,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let monotone = rows.windows(2).all(|w| w[1].ratio >= w[0].ratio * (1.0 - 1e-12));
    Ok(SweepTable {
        kind,
        constant_id: id,
        exact: is_exact_configuration(cfg, id),
        rows,
        monotone,
    })
}

/// `‖f χ_j‖ / (2^{j(λ - α_*)} ‖f‖)` with `α_* = α(0)` for `j < 0` and `α_∞`
/// otherwise, where `‖f‖` is the Morrey-Herz norm in `space`.
pub fn shell_decay_ratios(
    f: &PiecewisePowerFunction,
    space: &SpaceSpec,
    js: &[i32],
    ranges: &ScanRanges,
    ctx: NormContext,
) -> Result<Vec<(i32, f64)>, HarnessError> {
    let total = space_norm(f, space, ranges, ctx)?.value;
    let plain = SpaceSpec {
        alpha: SignedExponent::default(),
        ..space.clone()
    };
    Ok(js
        .par_iter()
        .map(|&j| {
            let alpha = if j < 0 { space.alpha.at_origin() } else { space.alpha.at_infinity() };
            let scale = (f64::from(j) * (space.lambda - alpha)).exp2();
            (j, shell_norm(f, &plain, j, ctx) / (scale * total))
        })
        .collect())
}

pub const SWEEP_HEADER: [&str; 4] = ["epsilon", "ratio", "constant", "ratio_over_constant"];
pub const SUITE_HEADER: [&str; 3] = ["seed", "index", "ratio"];

fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

pub fn sweep_csv(table: &SweepTable) -> String {
    csv_string(
        &SWEEP_HEADER,
        table.rows.iter().map(|r| {
            vec![
                r.epsilon.to_string(),
                r.ratio.to_string(),
                r.constant.to_string(),
                r.ratio_over_constant.to_string(),
            ]
        }),
    )
}

pub fn suite_csv(report: &SuiteReport) -> String {
    csv_string(
        &SUITE_HEADER,
        report
            .rows
            .iter()
            .map(|r| vec![r.seed.to_string(), r.index.to_string(), r.ratio.to_string()]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::Slot;
    use crate::hausdorff::{from_hardy_littlewood, Kernel, OperatorSpec};
    use crate::luxemburg::{luxemburg_norm, RadialFunction, Region};
    use crate::matrices::ScalarMap;
    use approx::assert_relative_eq;

    fn hardy() -> BoundConfig {
        BoundConfig {
            operator: from_hardy_littlewood(ScalarMap::new(1.0, 0.0)),
            slots: vec![Slot::constant(2.0, 0.0, 0.0, 0.0, 2.0).unwrap()],
            zeta: 1.0,
        }
    }

    fn central() -> BoundConfig {
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

    fn ctx() -> NormContext {
        NormContext::new(1)
    }

    #[test]
    fn lebesgue_extremal_norm() {
        let fs = extremal_family(ExtremalKind::LebesgueEps, &hardy(), 0.01, &ScanRanges::default(), ctx()).unwrap();
        assert_eq!(fs[0].support(), (1.0, f64::INFINITY));
        let q = Exponent::constant(2.0).unwrap();
        // Over the whole line both half-lines contribute 1/(2ε) each.
        let v = luxemburg_norm(&fs[0], &q, Region::All, ctx());
        assert_relative_eq!(v * v, 100.0, max_relative = 1e-8);
        assert!(matches!(
            extremal_family(ExtremalKind::LebesgueEps, &hardy(), 0.0, &ScanRanges::default(), ctx()),
            Err(HarnessError::BadEpsilon(_))
        ));
    }

    #[test]
    fn central_extremal_norm() {
        let cfg = central();
        let fs = extremal_family(ExtremalKind::CentralMorreyPower, &cfg, 0.0, &ScanRanges::default(), ctx()).unwrap();
        let (sources, _) = spaces_for_kind(ExtremalKind::CentralMorreyPower, &cfg).unwrap();
        let v = space_norm(&fs[0], &sources[0], &ScanRanges::default(), ctx()).unwrap().value;
        assert_relative_eq!(v, 2f64.powf(0.1) * 0.8f64.powf(-0.5), max_relative = 1e-9);
    }

    #[test]
    fn random_functions_are_deterministic_and_finite() {
        let space = SpaceSpec::lebesgue(Exponent::constant(2.0).unwrap(), 0.0);
        let a = random_test_functions(1, 3, &space, 1);
        assert_eq!(a, random_test_functions(1, 3, &space, 1));
        for f in &a {
            let v = space_norm(f, &space, &ScanRanges::default(), ctx()).unwrap().value;
            assert!(v > 0.0 && v.is_finite());
        }
    }

    #[test]
    fn sweep_rejects_unsorted_eps() {
        let r = sharpness_sweep(&hardy(), ExtremalKind::LebesgueEps, ConstantId::C9, &[0.01, 0.1], &ScanRanges::default(), ctx());
        assert_eq!(r.unwrap_err(), HarnessError::EpsNotDecreasing);
    }

    #[test]
    fn csv_headers() {
        let t = SweepTable {
            kind: ExtremalKind::LebesgueEps,
            constant_id: ConstantId::C9,
            exact: true,
            rows: vec![SweepRow {
                epsilon: 0.1,
                ratio: 1.5,
                constant: 2.0,
                ratio_over_constant: 0.75,
            }],
            monotone: true,
        };
        assert_eq!(sweep_csv(&t), "epsilon,ratio,constant,ratio_over_constant\n0.1,1.5,2,0.75\n");
    }
}
