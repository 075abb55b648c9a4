//! Adaptive Gauss-Kronrod (10/21) quadrature with maps for half-infinite and
//! infinite ranges.
//!
//! Callers in this crate integrate in the logarithmic variable `u = ln r`, so
//! power-law integrands become exponentials and endpoint singularities at
//! `r = 0` turn into infinite ranges with exponential decay.

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
    /// Length scale of the `t/(1-t)` map used on infinite ranges.
    pub tail_scale: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-300,
            max_intervals: 4000,
            tail_scale: 1.0,
        }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn tail_scale(mut self, scale: f64) -> Self {
        self.tail_scale = scale;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl QuadResult {
    fn zero() -> Self {
        Self {
            value: 0.0,
            error: 0.0,
            converged: true,
            evaluations: 0,
        }
    }

    fn combine(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error: self.error + other.error,
            converged: self.converged && other.converged,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

/// Sum panels in ascending position so the result does not depend on the
/// order in which panels were refined.
fn canonical_sum(panels: &mut [Panel]) -> (f64, f64) {
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = panels.iter().map(|p| p.value).sum();
    let error = panels.iter().map(|p| p.error).sum();
    (value, error)
}

fn adaptive_finite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cfg: &QuadConfig) -> QuadResult {
    if a == b {
        return QuadResult::zero();
    }
    let (v, e) = kronrod21(f, a, b);
    let mut panels = vec![Panel {
        a,
        b,
        value: v,
        error: e,
    }];
    let mut evaluations = 21;
    loop {
        let (total, err) = canonical_sum(&mut panels);
        if !total.is_finite() {
            return QuadResult {
                value: total,
                error: f64::INFINITY,
                converged: false,
                evaluations,
            };
        }
        if err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            return QuadResult {
                value: total,
                error: err,
                converged: true,
                evaluations,
            };
        }
        if panels.len() >= cfg.max_intervals {
            return QuadResult {
                value: total,
                error: err,
                converged: false,
                evaluations,
            };
        }
        // Split the worst panel; ties resolve to the lowest index.
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            if p.error > panels[worst].error {
                worst = i;
            }
        }
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Panel cannot be split further in floating point.
            return QuadResult {
                value: total,
                error: err,
                converged: false,
                evaluations,
            };
        }
        let (v1, e1) = kronrod21(f, p.a, mid);
        let (v2, e2) = kronrod21(f, mid, p.b);
        evaluations += 42;
        panels.push(Panel {
            a: p.a,
            b: mid,
            value: v1,
            error: e1,
        });
        panels.push(Panel {
            a: mid,
            b: p.b,
            value: v2,
            error: e2,
        });
    }
}

/// Integrate `f` over `[a, b]`, where either endpoint may be infinite.
///
/// Infinite ends are mapped with `x = a + s·t/(1-t)`, `s = cfg.tail_scale`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> QuadResult {
    integrate_ref(&f, a, b, cfg)
}

fn integrate_ref<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cfg: &QuadConfig) -> QuadResult {
    if a > b {
        let r = integrate_ref(f, b, a, cfg);
        return QuadResult {
            value: -r.value,
            ..r
        };
    }
    if a == b {
        return QuadResult::zero();
    }
    let s = cfg.tail_scale;
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive_finite(f, a, b, cfg),
        (true, false) => {
            let g = |t: f64| {
                if t >= 1.0 {
                    return 0.0;
                }
                let d = 1.0 - t;
                let v = f(a + s * t / d);
                if v == 0.0 {
                    0.0
                } else {
                    v * s / (d * d)
                }
            };
            adaptive_finite(&g, 0.0, 1.0, cfg)
        }
        (false, true) => {
            let g = |t: f64| {
                if t >= 1.0 {
                    return 0.0;
                }
                let d = 1.0 - t;
                let v = f(b - s * t / d);
                if v == 0.0 {
                    0.0
                } else {
                    v * s / (d * d)
                }
            };
            adaptive_finite(&g, 0.0, 1.0, cfg)
        }
        (false, false) => {
            let left = integrate_ref(f, f64::NEG_INFINITY, 0.0, cfg);
            let right = integrate_ref(f, 0.0, f64::INFINITY, cfg);
            left.combine(right)
        }
    }
}

/// Integrate over `[a, b]` split at the interior `breaks`, summing the pieces
/// in ascending order.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> QuadResult {
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut nodes = Vec::with_capacity(pts.len() + 2);
    nodes.push(a);
    nodes.extend(pts);
    nodes.push(b);
    let mut acc = QuadResult::zero();
    for w in nodes.windows(2) {
        acc = acc.combine(integrate_ref(&f, w[0], w[1], cfg));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x, 0.0, 3.0, &QuadConfig::default());
        assert!((r.value - 9.0).abs() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn exponential_tail() {
        let r = integrate(|u: f64| (-0.02 * u).exp(), 0.0, f64::INFINITY, &QuadConfig::with_rel_tol(1e-12));
        assert!((r.value - 50.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn gaussian_over_line() {
        let r = integrate(
            |x: f64| (-x * x).exp(),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &QuadConfig::with_rel_tol(1e-12),
        );
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate(|x| x, 1.0, 0.0, &QuadConfig::default());
        assert!((r.value + 0.5).abs() < 1e-15);
    }

    #[test]
    fn breaks_handle_kinks() {
        let r = integrate_with_breaks(|x: f64| x.abs(), -1.0, 2.0, &[0.0], &QuadConfig::default());
        assert!((r.value - 2.5).abs() < 1e-14);
    }
}
