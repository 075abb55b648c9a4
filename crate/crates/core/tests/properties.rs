use hvexp::bounds::{evaluate_constant, BoundConfig, ConstantId, Slot};
use hvexp::exponents::{combine_reciprocal, Exponent, PowerWeight, SignedExponent};
use hvexp::harness::random_test_functions;
use hvexp::hausdorff::{apply_pointwise, from_hardy_littlewood, from_multilinear_hardy_cesaro, power_image, OperatorSpec};
use hvexp::luxemburg::{luxemburg_norm, norm_report, Modular, ModularSpec, NormContext, PiecewisePowerFunction, RadialFunction, Region};
use hvexp::matrices::{frobenius_norm, inverse_stats, rho_bound, MatrixFamily, ScalarMap};
use hvexp::quad::QuadConfig;
use hvexp::spaces::{herz_norm, morrey_herz_norm, space_norm, ScanRanges, SpaceSpec};
use proptest::prelude::*;

fn ctx(n: usize) -> NormContext {
    NormContext::new(n)
}

fn lebesgue(q: f64) -> SpaceSpec {
    SpaceSpec::lebesgue(Exponent::constant(q).unwrap(), 0.0)
}

fn sample(seed: u64, space: &SpaceSpec, n: usize) -> PiecewisePowerFunction {
    random_test_functions(seed, 1, space, n).remove(0)
}

/// Pointwise product of two radial functions.
struct Product<'a>(&'a PiecewisePowerFunction, &'a PiecewisePowerFunction);

impl RadialFunction for Product<'_> {
    fn ln_value(&self, r: f64) -> f64 {
        let a = self.0.ln_value(r);
        if a == f64::NEG_INFINITY {
            return a;
        }
        a + self.1.ln_value(r)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = RadialFunction::breakpoints(self.0);
        b.extend(RadialFunction::breakpoints(self.1));
        b
    }

    fn support(&self) -> (f64, f64) {
        let (a, b) = RadialFunction::support(self.0);
        let (c, d) = RadialFunction::support(self.1);
        (a.max(c), b.min(d).max(a.max(c)))
    }

    fn tail_exponents(&self) -> (Option<f64>, Option<f64>) {
        let (a0, ai) = self.0.tail_exponents();
        let (b0, bi) = self.1.tail_exponents();
        (a0.zip(b0).map(|(x, y)| x + y), ai.zip(bi).map(|(x, y)| x + y))
    }
}

fn family() -> impl Strategy<Value = MatrixFamily> {
    let s = (prop_oneof![0.2..5.0f64, -5.0..-0.2f64], -2.0..2.0f64).prop_map(|(c, a)| ScalarMap::new(c, a));
    prop_oneof![
        s.clone().prop_map(|s| MatrixFamily::ScalarDilation { s }),
        s.clone().prop_map(|s| MatrixFamily::DiagEqual { s, signs: vec![1, -1] }),
        (s, 0.0..std::f64::consts::TAU).prop_map(|(s, th)| MatrixFamily::OrthScalar {
            q_matrix: vec![vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]],
            s,
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_interp_holder_certificates(p0 in 1.1..6.0f64, pi in 1.1..6.0f64, lx in -12.0..12.0f64) {
        let p = Exponent::log_interp(p0, pi).unwrap();
        let x = lx.exp();
        let c = (p0 - pi).abs();
        let e = std::f64::consts::E;
        prop_assert!((p.eval(x) - p0).abs() * (e + 1.0 / x).ln() <= c * (1.0 + 1e-12) + 1e-15);
        prop_assert!((p.eval(x) - pi).abs() * (e + x).ln() <= c * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn combine_reciprocal_pointwise(a0 in 2.0..8.0f64, ai in 2.0..8.0f64, b0 in 2.0..8.0f64, bi in 2.0..8.0f64) {
        let qa = Exponent::log_interp(a0, ai).unwrap();
        let qb = Exponent::log_interp(b0, bi).unwrap();
        let q = combine_reciprocal(&[qa.clone(), qb.clone()]).unwrap();
        for i in 0..1000 {
            let x = (-20.0 + 40.0 * i as f64 / 999.0f64).exp();
            let d = 1.0 / q.eval(x) - 1.0 / qa.eval(x) - 1.0 / qb.eval(x);
            prop_assert!(d.abs() < 1e-14);
        }
    }

    #[test]
    fn ball_measure_matches_midpoint(n in 1usize..=3, gamma in -0.9..3.0f64, radius in 0.1..10.0f64) {
        let exact = PowerWeight::new(gamma).ball_measure(n, radius).unwrap();
        // |S^{n-1}| ∫_0^R r^β dr with r = R v^k, k chosen so the integrand in v
        // vanishes smoothly at 0 instead of blowing up.
        let beta = gamma + n as f64 - 1.0;
        let k = (2.0 / (beta + 1.0)).ceil().max(1.0);
        let steps = 200_000;
        let h = 1.0 / steps as f64;
        let sum: f64 = (0..steps)
            .map(|i| {
                let v = (i as f64 + 0.5) * h;
                (radius * v.powf(k)).powf(beta) * radius * k * v.powf(k - 1.0)
            })
            .sum();
        let approx = hvexp::exponents::sphere_area(n) * sum * h;
        prop_assert!(((approx - exact) / exact).abs() < 1e-6, "{approx} vs {exact}");
    }

    #[test]
    fn luxemburg_homogeneity(seed in any::<u64>(), c in 0.01..100.0f64, p0 in 1.2..4.0f64, pi in 1.2..4.0f64) {
        let p = Exponent::log_interp(p0, pi).unwrap();
        let f = sample(seed, &SpaceSpec::lebesgue(p.clone(), 0.0), 1);
        let a = luxemburg_norm(&f, &p, Region::All, ctx(1));
        let b = luxemburg_norm(&f.scaled(c), &p, Region::All, ctx(1));
        prop_assert!((b - c * a).abs() <= 1e-9 * c * a);
    }

    #[test]
    fn modular_monotone(seed in any::<u64>(), p0 in 1.2..4.0f64, pi in 1.2..4.0f64) {
        let p = Exponent::log_interp(p0, pi).unwrap();
        let f = sample(seed, &SpaceSpec::lebesgue(p.clone(), 0.0), 2);
        let mut m = Modular::new(ModularSpec::new(&f, &p, Region::All), ctx(2));
        let values: Vec<f64> = (-10..=10).map(|k| m.value(2f64.powi(k))).collect();
        for w in values.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn holder_constant_one(s1 in any::<u64>(), s2 in any::<u64>(), q1 in 1.5..6.0f64, q2 in 1.5..6.0f64) {
        let (e1, e2) = (Exponent::constant(q1).unwrap(), Exponent::constant(q2).unwrap());
        let q = combine_reciprocal(&[e1.clone(), e2.clone()]);
        prop_assume!(q.is_ok());
        let q = q.unwrap();
        let f = sample(s1, &lebesgue(q1), 1);
        let g = sample(s2, &lebesgue(q2), 1);
        let fg = Product(&f, &g);
        let lhs = norm_report(ModularSpec::new(&fg, &q, Region::All), ctx(1)).value;
        let rhs = luxemburg_norm(&f, &e1, Region::All, ctx(1)) * luxemburg_norm(&g, &e2, Region::All, ctx(1));
        prop_assert!(lhs <= (1.0 + 1e-9) * rhs, "{lhs} > {rhs}");
    }

    #[test]
    fn ball_embedding(seed in any::<u64>(), q in 1.1..3.0f64, dp in 0.2..3.0f64, radius in 0.1..20.0f64) {
        let p = q + dp;
        let f = sample(seed, &lebesgue(p), 1);
        let region = Region::Ball { radius };
        let lhs = luxemburg_norm(&f, &Exponent::constant(q).unwrap(), region, ctx(1));
        let rhs = luxemburg_norm(&f, &Exponent::constant(p).unwrap(), region, ctx(1));
        let one = region.measure(1).powf(1.0 / q - 1.0 / p);
        prop_assert!(lhs <= 2.0 * one * rhs * (1.0 + 1e-9));
    }

    #[test]
    fn herz_power_weight_band(seed in any::<u64>(), alpha in -1.5..1.5f64, p in 1.2..4.0f64) {
        let q = Exponent::constant(p).unwrap();
        let herz = SpaceSpec::herz(SignedExponent::constant(alpha / p), p, q.clone(), 0.0);
        let weighted = SpaceSpec::lebesgue(q, alpha / p);
        let f = sample(seed, &weighted, 1).restricted(2f64.powi(-30), 2f64.powi(30));
        prop_assume!(!f.is_zero());
        let ranges = ScanRanges::default();
        let h = space_norm(&f, &herz, &ranges, ctx(1)).unwrap().value;
        let l = space_norm(&f, &weighted, &ranges, ctx(1)).unwrap().value;
        let band = 2f64.powf(alpha.abs() / p) * (1.0 + 1e-9);
        prop_assert!(h / l <= band && l / h <= band, "h={h} l={l}");
    }

    #[test]
    fn norms_monotone_in_ranges(seed in any::<u64>(), alpha in -0.5..0.5f64, lambda in 0.0..0.5f64) {
        let q = Exponent::constant(2.0).unwrap();
        let spec = SpaceSpec::morrey_herz(SignedExponent::constant(alpha), lambda, 2.0, q.clone(), 0.0);
        let f = sample(seed, &spec, 1);
        let small = morrey_herz_norm(&f, &spec, (-10, 10), (-10, 10), ctx(1)).unwrap().value;
        let large = morrey_herz_norm(&f, &spec, (-20, 20), (-20, 20), ctx(1)).unwrap().value;
        prop_assert!(large >= small);
        let herz = SpaceSpec::herz(SignedExponent::constant(alpha), 2.0, q, 0.0);
        let hs = herz_norm(&f, &herz, (-10, 10), ctx(1)).unwrap().value;
        let hl = herz_norm(&f, &herz, (-20, 20), ctx(1)).unwrap().value;
        prop_assert!(hl >= hs);
    }

    #[test]
    fn det_sandwich_and_condition(fam in family(), lt in -5.0..5.0f64, sigma in prop_oneof![Just(2.0f64), Just(-2.0f64)],
                                  x in prop::collection::vec(-3.0..3.0f64, 2)) {
        let n = 2;
        let t = lt.exp();
        let st = inverse_stats(&fam, n, t).unwrap();
        let norm = frobenius_norm(&fam, n, t);
        prop_assert!(norm.powi(-2) <= st.det_inv_abs * (1.0 + 1e-12));
        prop_assert!(st.det_inv_abs <= st.inv_norm.powi(2) * (1.0 + 1e-12));
        let rho = rho_bound(std::slice::from_ref(&fam), n, &[t]).unwrap();
        prop_assert!(norm.powf(sigma) <= rho.powf(sigma.abs()) * st.inv_norm.powf(-sigma) * (1.0 + 1e-12));
        let a = fam.matrix(n, t);
        let ax: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * x[j]).sum()).collect();
        let len = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assume!(len(&x) > 1e-6);
        let lhs = len(&ax).powf(sigma);
        let rhs = rho.powf(-sigma.abs()) * st.inv_norm.powf(-sigma) * len(&x).powf(sigma);
        prop_assert!(lhs >= rhs * (1.0 - 1e-12));
    }

    #[test]
    fn operator_multilinear_and_monotone(s1 in any::<u64>(), s2 in any::<u64>(), c in 0.1..10.0f64, lx in -3.0..3.0f64) {
        let t = ScalarMap::new(1.0, 1.0);
        let op = from_multilinear_hardy_cesaro(ScalarMap::new(1.0, 0.0), &[t, t]);
        let space = lebesgue(4.0);
        let f = sample(s1, &space, 1);
        let g = sample(s2, &space, 1);
        let cfg = QuadConfig::with_rel_tol(1e-10);
        let x = lx.exp();
        let base = apply_pointwise(&op, &[&f, &g], x, &cfg).unwrap();
        let scaled = apply_pointwise(&op, &[&f.scaled(c), &g], x, &cfg).unwrap();
        prop_assert!((scaled - c * base).abs() <= 1e-8 * c * base.max(1e-300));
        let bigger = apply_pointwise(&op, &[&f.scaled(1.0 + c), &g], x, &cfg).unwrap();
        prop_assert!(bigger >= base);
    }

    #[test]
    fn power_eigenrelation(b in -0.9..2.0f64, c in 0.1..5.0f64, lx in -5.0..5.0f64) {
        let op = from_hardy_littlewood(ScalarMap::new(1.0, 0.0));
        let f = PiecewisePowerFunction::single_power(c, b);
        let exact = power_image(&op, std::slice::from_ref(&f)).unwrap();
        let x = lx.exp();
        let quad = apply_pointwise(&op, &[&f], x, &QuadConfig::with_rel_tol(1e-11)).unwrap();
        prop_assert!((quad - exact.value(x)).abs() <= 1e-9 * quad);
        prop_assert!((exact.value(x) - c / (b + 1.0) * x.powf(b)).abs() <= 1e-12 * quad);
    }

    #[test]
    fn constants_scale_linearly(k in 0.01..100.0f64, q in 1.5..5.0f64, a in -1.0..2.0f64, lambda in -0.3..-0.01f64) {
        let op = OperatorSpec {
            n: 1,
            m: 1,
            kernel: hvexp::hausdorff::Kernel { c: 1.0, a: 0.5, support: (0.5, 3.0), one_sided: false },
            families: vec![MatrixFamily::scalar_dilation(1.5, a)],
        };
        let lambda = lambda.max(-0.9 / q);
        let cfg = BoundConfig { operator: op.clone(), slots: vec![Slot::constant(q, 0.0, 0.0, lambda, q).unwrap()], zeta: 1.0 };
        let scaled = BoundConfig { operator: op.with_scaled_kernel(k), ..cfg.clone() };
        for id in ConstantId::ALL {
            let (Ok(x), Ok(y)) = (evaluate_constant(&cfg, id, ctx(1)), evaluate_constant(&scaled, id, ctx(1))) else {
                continue;
            };
            prop_assert!((y.value - k * x.value).abs() <= 1e-12 * k * x.value, "{id}: {} vs {}", y.value, k * x.value);
        }
    }

    #[test]
    fn max_min_pairs_collapse(q in 1.5..5.0f64, alpha in -0.5..0.5f64, a in -1.0..2.0f64, gamma in -0.5..0.5f64) {
        let op = OperatorSpec {
            n: 1,
            m: 1,
            kernel: hvexp::hausdorff::Kernel { c: 1.0, a: 1.0, support: (0.25, 4.0), one_sided: false },
            families: vec![MatrixFamily::scalar_dilation(0.7, a)],
        };
        let cfg = BoundConfig { operator: op, slots: vec![Slot::constant(q, gamma, alpha, 0.2, q).unwrap()], zeta: 1.0 };
        for (x, y) in [(ConstantId::C2, ConstantId::C2Star), (ConstantId::C5, ConstantId::C5Star), (ConstantId::C6, ConstantId::C6Star)] {
            let u = evaluate_constant(&cfg, x, ctx(1)).unwrap().value;
            let v = evaluate_constant(&cfg, y, ctx(1)).unwrap().value;
            prop_assert!((u - v).abs() <= 1e-12 * u.abs().max(v.abs()), "{x}: {u} vs {v}");
        }
        let mut zero = cfg.clone();
        zero.slots[0].lambda = 0.0;
        let c7 = evaluate_constant(&zero, ConstantId::C7, ctx(1)).unwrap().value;
        let c8 = evaluate_constant(&zero, ConstantId::C8, ctx(1)).unwrap().value;
        prop_assert!((c7 - c8).abs() <= 1e-12 * c7);
    }
}
