use hvexp::bounds::{evaluate_constant, BoundConfig, ConstantId, Slot};
use hvexp::exponents::Exponent;
use hvexp::harness::{random_test_functions, upper_bound_suite};
use hvexp::hausdorff::{from_hardy_littlewood, Kernel, OperatorSpec};
use hvexp::luxemburg::{luxemburg_norm, modular, NormContext, Region};
use hvexp::matrices::{MatrixFamily, ScalarMap};
use hvexp::spaces::{space_norm, ScanRanges, SpaceSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn bracketing_by_modular() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..60 {
        let p = Exponent::log_interp(rng.gen_range(1.1..6.0), rng.gen_range(1.1..6.0)).unwrap();
        let f = random_test_functions(i, 1, &SpaceSpec::lebesgue(p.clone(), 0.0), 1).remove(0).scaled(rng.gen_range(0.01..100.0));
        let ctx = NormContext::new(1);
        let c = modular(&f, &p, Region::All, ctx);
        let norm = luxemburg_norm(&f, &p, Region::All, ctx);
        let (a, b) = (c.powf(1.0 / p.lower()), c.powf(1.0 / p.upper()));
        assert!(norm <= a.max(b) * (1.0 + 1e-9), "{norm} > max({a}, {b})");
        assert!(norm >= a.min(b) * (1.0 - 1e-9), "{norm} < min({a}, {b})");
    }
}

fn power_config(kernel_a: f64, support: (f64, f64), s_a: f64, p: f64, alpha: f64) -> BoundConfig {
    BoundConfig {
        operator: OperatorSpec {
            n: 1,
            m: 1,
            kernel: Kernel { c: 1.0, a: kernel_a, support, one_sided: true },
            families: vec![MatrixFamily::scalar_dilation(1.0, s_a)],
        },
        slots: vec![Slot::constant(p, 0.0, alpha, 0.0, p).unwrap()],
        zeta: 1.0,
    }
}

fn with_support(cfg: &BoundConfig, support: (f64, f64)) -> BoundConfig {
    let mut out = cfg.clone();
    out.operator.kernel.support = support;
    out
}

/// The C9 integrand is `t^{kernel_a - 1 - s_a(α + 1/p)}`; `slope` is that
/// exponent plus one, so the integral converges at 0 iff `slope > 0` and at
/// ∞ iff `slope < 0`.
fn finiteness_fixtures() -> Vec<(BoundConfig, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut out = Vec::new();
    for i in 0..20 {
        let divergent = i % 2 == 0;
        let at_zero = i % 4 < 2;
        let p = rng.gen_range(1.2..4.0);
        let alpha = rng.gen_range(-0.3..0.3);
        let s_a = rng.gen_range(0.5..2.0);
        let magnitude = rng.gen_range(0.05..1.0);
        let slope = if divergent == at_zero { -magnitude } else { magnitude };
        let kernel_a = slope + s_a * (alpha + 1.0 / p);
        let support = if at_zero { (0.0, 1.0) } else { (1.0, f64::INFINITY) };
        out.push((power_config(kernel_a, support, s_a, p, alpha), divergent));
    }
    out
}

#[test]
fn analytic_divergence_agrees_with_bracket_refinement() {
    let ctx = NormContext::new(1);
    for (cfg, divergent) in finiteness_fixtures() {
        let full = evaluate_constant(&cfg, ConstantId::C9, ctx).unwrap();
        assert_eq!(full.finite, !divergent, "{cfg:?}");
        let at_zero = cfg.operator.kernel.support.0 == 0.0;
        let truncated = (1..=20).map(|j| {
            let cut = 2f64.powi(50 * j);
            let support = if at_zero { (1.0 / cut, 1.0) } else { (1.0, cut) };
            evaluate_constant(&with_support(&cfg, support), ConstantId::C9, ctx).unwrap().value
        });
        let largest = truncated.fold(0.0, f64::max);
        if divergent {
            assert!(largest > 1e12, "bracketed value only reached {largest}");
        } else {
            assert!(largest <= full.value * (1.0 + 1e-9), "{largest} > {}", full.value);
        }
    }
}

#[test]
fn random_functions_are_deterministic_and_finite() {
    let space = SpaceSpec::lebesgue(Exponent::log_interp(1.5, 3.0).unwrap(), 0.2);
    assert_eq!(random_test_functions(1, 3, &space, 1), random_test_functions(1, 3, &space, 1));
    let ranges = ScanRanges::default();
    let mut straddles = false;
    for seed in 1..=100 {
        for f in random_test_functions(seed, 1, &space, 1) {
            let v = space_norm(&f, &space, &ranges, NormContext::new(1)).unwrap().value;
            assert!(v.is_finite() && v > 0.0, "seed {seed}: norm {v}");
            let segs = f.segments();
            straddles |= segs.first().unwrap().lo < 1.0 && segs.last().unwrap().hi > 1.0;
        }
    }
    assert!(straddles);
}

#[test]
fn upper_suite_is_reproducible() {
    let op = from_hardy_littlewood(ScalarMap::new(1.0, 0.0));
    let cfg = BoundConfig {
        operator: op,
        slots: vec![Slot::constant(2.0, 0.0, 0.0, 0.0, 2.0).unwrap()],
        zeta: 1.0,
    };
    let ranges = ScanRanges::default();
    let ctx = NormContext::new(1);
    let a = upper_bound_suite(&cfg, ConstantId::C9, 8, 5, &ranges, ctx).unwrap();
    let b = upper_bound_suite(&cfg, ConstantId::C9, 8, 5, &ranges, ctx).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.violations, 0);
}
