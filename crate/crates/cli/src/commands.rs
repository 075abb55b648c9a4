use std::io::Write;

use hvexp::bounds::{evaluate_constant, sharpness_region_check, BoundError, ConstantId};
use hvexp::harness::{
    random_test_functions, sharpness_sweep, suite_csv, sweep_csv, upper_bound_suite, HarnessError, SweepTable,
};
use hvexp::hausdorff::apply_on_grid;
use hvexp::luxemburg::{luxemburg_norm, modular, Region};
use hvexp::spaces::{space_norm, SpaceSpec};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::{CliError, Common, Suite};

/// Minimum `ratio / C` at the smallest ε for a sharpness sweep to pass.
const SWEEP_FLOOR: f64 = 0.9;

enum Output {
    Json(Vec<Value>),
    Csv(String),
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

fn json_to_csv(records: &[Value]) -> String {
    let Some(Value::Object(first)) = records.first() else {
        return String::new();
    };
    let header: Vec<&str> = first.keys().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            header
                .iter()
                .map(|k| match &r[*k] {
                    Value::String(s) => s.clone(),
                    v => v.to_string(),
                })
                .collect()
        })
        .collect();
    csv_text(&header, &rows)
}

fn emit(common: &Common, out: Output) -> Result<(), CliError> {
    let as_csv = common
        .out
        .as_ref()
        .map(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")));
    let text = match (out, as_csv) {
        (Output::Json(records), Some(true)) => json_to_csv(&records),
        (Output::Json(records), _) => records.iter().map(|r| format!("{r}\n")).collect(),
        (Output::Csv(text), Some(false)) => text
            .lines()
            .skip(1)
            .map(|l| format!("{}\n", json!(l.split(',').collect::<Vec<_>>())))
            .collect(),
        (Output::Csv(text), _) => text,
    };
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::load(&common.config)
}

fn parse_id(which: Option<&str>, cfg: &ExperimentConfig) -> Result<Option<ConstantId>, CliError> {
    match which {
        Some(s) => s.parse().map(Some).map_err(|e: BoundError| CliError::Config(e.to_string())),
        None => Ok(cfg.constant),
    }
}

fn parse_eps(eps: Option<&str>, cfg: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
    match eps {
        None => Ok(cfg.settings.eps_list.clone()),
        Some(s) => s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| CliError::Config(format!("--eps {t:?}: {e}"))))
            .collect(),
    }
}

/// Hypothesis and parameter errors are configuration errors; the rest are
/// failed computations.
fn harness_error(e: HarnessError) -> CliError {
    match e {
        HarnessError::ConstantNotFinite(id) => CliError::Failed(format!("constant not finite ({id})")),
        HarnessError::Bound(b) => CliError::Config(b.to_string()),
        HarnessError::BadEpsilon(_) | HarnessError::EpsNotDecreasing | HarnessError::NotApplicable(_) => {
            CliError::Config(e.to_string())
        }
        other => CliError::Failed(other.to_string()),
    }
}

pub fn norm(common: &Common) -> Result<(), CliError> {
    let cfg = load(common)?;
    let space = cfg.space.clone().ok_or_else(|| CliError::Config("norm needs a \"space\"".into()))?;
    let f = cfg
        .functions
        .first()
        .ok_or_else(|| CliError::Config("norm needs at least one entry in \"functions\"".into()))?;
    let ctx = cfg.context(common.rel_tol);
    let v = space_norm(f, &space, &cfg.ranges(), ctx).map_err(|e| CliError::Config(e.to_string()))?;
    emit(
        common,
        Output::Json(vec![json!({
            "space": space.kind,
            "norm": v.value,
            "diagnostics": {
                "argmax": v.argmax,
                "truncation_suspect": v.truncation_suspect,
                "sup_suspect": v.sup_suspect,
            },
        })]),
    )
}

pub fn apply(common: &Common) -> Result<(), CliError> {
    let cfg = load(common)?;
    let op = cfg.operator();
    let (lo, hi) = cfg.settings.r_grid_range;
    let radii: Vec<f64> = (lo..=hi).map(|j| 2f64.powi(j)).collect();
    let image = apply_on_grid(&op, &cfg.functions, &radii, &cfg.context(common.rel_tol).quad)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let rows: Vec<Vec<String>> = image
        .radii
        .iter()
        .zip(&image.values)
        .map(|(x, v)| vec![x.to_string(), v.to_string()])
        .collect();
    emit(common, Output::Csv(csv_text(&["x", "value"], &rows)))
}

pub fn constants(common: &Common, which: Option<&str>) -> Result<(), CliError> {
    let cfg = load(common)?;
    let bc = cfg.require_slots()?;
    let ctx = cfg.context(common.rel_tol);
    let records = match parse_id(which, &cfg)? {
        Some(id) => {
            let r = evaluate_constant(&bc, id, ctx).map_err(|e| CliError::Config(e.to_string()))?;
            vec![serde_json::to_value(r).expect("serializable")]
        }
        None => ConstantId::ALL
            .iter()
            .map(|&id| match evaluate_constant(&bc, id, ctx) {
                Ok(r) => serde_json::to_value(r).expect("serializable"),
                Err(e) => json!({"id": id, "error": e.to_string()}),
            })
            .collect(),
    };
    emit(common, Output::Json(records))
}

fn run_sweep(common: &Common, cfg: &ExperimentConfig, which: Option<&str>, eps: Option<&str>) -> Result<SweepTable, CliError> {
    let bc = cfg.require_slots()?;
    let kind = cfg
        .extremal
        .ok_or_else(|| CliError::Config("sweep needs an \"extremal\" kind".into()))?;
    let id = parse_id(which, cfg)?.unwrap_or_else(|| kind.constant());
    let eps = parse_eps(eps, cfg)?;
    let eps = if kind.uses_epsilon() { eps } else { vec![eps.first().copied().unwrap_or(1.0)] };
    sharpness_sweep(&bc, kind, id, &eps, &cfg.ranges(), cfg.context(common.rel_tol)).map_err(harness_error)
}

pub fn sweep(common: &Common, which: Option<&str>, eps: Option<&str>) -> Result<(), CliError> {
    let cfg = load(common)?;
    let table = run_sweep(common, &cfg, which, eps)?;
    emit(common, Output::Csv(sweep_csv(&table)))
}

pub fn verify(
    common: &Common,
    suite: Suite,
    which: Option<&str>,
    seed: Option<u64>,
    n: Option<usize>,
    eps: Option<&str>,
) -> Result<(), CliError> {
    let cfg = load(common)?;
    let seed = seed.or(cfg.settings.seed).unwrap_or(42);
    match suite {
        Suite::Upper => {
            let bc = cfg.require_slots()?;
            let id = parse_id(which, &cfg)?.ok_or_else(|| CliError::Config("upper suite needs --which or \"constant\"".into()))?;
            let count = n.or(cfg.settings.samples).unwrap_or(100);
            if count == 0 {
                return Err(CliError::Config("--n must be at least 1".into()));
            }
            let report = upper_bound_suite(&bc, id, count, seed, &cfg.ranges(), cfg.context(common.rel_tol)).map_err(harness_error)?;
            emit(common, Output::Csv(suite_csv(&report)))?;
            if report.violations > 0 {
                return Err(CliError::Failed(format!(
                    "{} ratios exceed {id} = {} by more than the allowed slack",
                    report.violations, report.constant
                )));
            }
            Ok(())
        }
        Suite::Sharpness => {
            let table = run_sweep(common, &cfg, which, eps)?;
            emit(common, Output::Csv(sweep_csv(&table)))?;
            let last = table.final_ratio_over_constant();
            if !(last >= SWEEP_FLOOR) {
                return Err(CliError::Failed(format!("final ratio/constant {last} below {SWEEP_FLOOR}")));
            }
            if table.exact && !table.monotone {
                return Err(CliError::Failed("sweep ratios not monotone in epsilon".into()));
            }
            Ok(())
        }
        Suite::Invariants => {
            let checks = invariant_checks(&cfg, seed, n.unwrap_or(5), common.rel_tol);
            let failed: Vec<&Check> = checks.iter().filter(|c| c.status == Status::Fail).collect();
            let rows: Vec<Vec<String>> = checks
                .iter()
                .map(|c| vec![c.name.clone(), c.status.as_str().to_string(), c.detail.clone()])
                .collect();
            emit(common, Output::Csv(csv_text(&["check", "status", "detail"], &rows)))?;
            if failed.is_empty() {
                Ok(())
            } else {
                let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
                Err(CliError::Failed(format!("failed checks: {}", names.join(", "))))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

struct Check {
    name: String,
    status: Status,
    detail: String,
}

impl Check {
    fn new(name: impl Into<String>, status: Status, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status,
            detail: detail.into(),
        }
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn invariant_checks(cfg: &ExperimentConfig, seed: u64, count: usize, rel_tol: Option<f64>) -> Vec<Check> {
    let mut out = Vec::new();
    if cfg.slots.is_empty() {
        out.push(Check::new("slots", Status::Skip, "config has no slots"));
        return out;
    }
    let bc = cfg.bound_config();
    let ctx = cfg.context(rel_tol);
    let ranges = cfg.ranges();
    let derived = bc.derived();
    out.push(Check::new(
        "coupling",
        Status::from_bool(derived.q.is_some()),
        format!("p={} gamma_sum={} lambda_central={}", derived.p, derived.gamma_sum, derived.lambda_central),
    ));

    let constant_exponents = bc.slots.iter().all(|s| s.q.is_constant() && s.alpha.as_constant().is_some());
    for (a, b) in [
        (ConstantId::C2, ConstantId::C2Star),
        (ConstantId::C5, ConstantId::C5Star),
        (ConstantId::C6, ConstantId::C6Star),
    ] {
        let name = format!("max_min_collapse:{a}");
        if !constant_exponents {
            out.push(Check::new(name, Status::Skip, "variable exponents"));
            continue;
        }
        match (evaluate_constant(&bc, a, ctx), evaluate_constant(&bc, b, ctx)) {
            (Ok(x), Ok(y)) => out.push(Check::new(
                name,
                Status::from_bool(close(x.value, y.value, 1e-12)),
                format!("{}={} {}={}", a, x.value, b, y.value),
            )),
            (Err(e), _) | (_, Err(e)) => out.push(Check::new(name, Status::Skip, e.to_string())),
        }
    }

    if constant_exponents {
        let mut zero = bc.clone();
        for s in &mut zero.slots {
            s.lambda = 0.0;
        }
        match (evaluate_constant(&zero, ConstantId::C7, ctx), evaluate_constant(&zero, ConstantId::C8, ctx)) {
            (Ok(x), Ok(y)) => out.push(Check::new(
                "lambda_zero:C7=C8",
                Status::from_bool(close(x.value, y.value, 1e-12)),
                format!("C7={} C8={}", x.value, y.value),
            )),
            (Err(e), _) | (_, Err(e)) => out.push(Check::new("lambda_zero:C7=C8", Status::Skip, e.to_string())),
        }
    }

    let mut scaled = bc.clone();
    scaled.operator = bc.operator.with_scaled_kernel(3.0);
    for id in ConstantId::ALL {
        let name = format!("scaling_covariance:{id}");
        match (evaluate_constant(&bc, id, ctx), evaluate_constant(&scaled, id, ctx)) {
            (Ok(x), Ok(y)) if x.finite => out.push(Check::new(
                name,
                Status::from_bool(close(3.0 * x.value, y.value, 1e-12)),
                format!("C={} C(3phi)={}", x.value, y.value),
            )),
            (Ok(x), Ok(y)) => out.push(Check::new(name, Status::from_bool(!y.finite), format!("C={} C(3phi)={}", x.value, y.value))),
            (Err(e), _) | (_, Err(e)) => out.push(Check::new(name, Status::Skip, e.to_string())),
        }
    }

    let region = sharpness_region_check(&bc);
    out.push(Check::new(
        "region_equivalence",
        Status::from_bool(region.equivalence_holds),
        format!("case={:?}", region.case),
    ));

    let slot = &bc.slots[0];
    let herz = SpaceSpec::herz(slot.alpha.clone(), slot.p, slot.q.clone(), slot.gamma);
    let mh = SpaceSpec::morrey_herz(slot.alpha.clone(), 0.0, slot.p, slot.q.clone(), slot.gamma);
    let fs = random_test_functions(seed, count, &herz, cfg.n);
    let mut worst = 0.0f64;
    let mut ok = true;
    for f in &fs {
        match (space_norm(f, &herz, &ranges, ctx), space_norm(f, &mh, &ranges, ctx)) {
            (Ok(a), Ok(b)) => {
                ok &= a.value == b.value;
                worst = worst.max((a.value - b.value).abs());
            }
            _ => ok = false,
        }
    }
    out.push(Check::new("morrey_herz_lambda0_is_herz", Status::from_bool(ok), format!("max_abs_diff={worst}")));

    if let Some(q) = slot.q.as_constant() {
        let herz = SpaceSpec::herz(Default::default(), q, slot.q.clone(), slot.gamma);
        let leb = SpaceSpec::lebesgue(slot.q.clone(), slot.gamma);
        let lo = 2f64.powi(ranges.k_range.0 - 1);
        let hi = 2f64.powi(ranges.k_range.1);
        let mut worst = 0.0f64;
        for f in random_test_functions(seed, count, &leb, cfg.n) {
            let f = f.restricted(lo, hi);
            if f.is_zero() {
                continue;
            }
            let a = space_norm(&f, &herz, &ranges, ctx).map(|v| v.value).unwrap_or(f64::NAN);
            let b = space_norm(&f, &leb, &ranges, ctx).map(|v| v.value).unwrap_or(f64::NAN);
            worst = worst.max(((a - b) / b).abs());
        }
        out.push(Check::new("herz_alpha0_is_lebesgue", Status::from_bool(worst <= 1e-6), format!("max_rel_diff={worst}")));
    }

    let leb = SpaceSpec::lebesgue(slot.q.clone(), 0.0);
    let (qm, qp) = (slot.q.lower(), slot.q.upper());
    let mut violations = 0;
    for f in random_test_functions(seed.wrapping_add(1), count, &leb, cfg.n) {
        let c = modular(&f, &slot.q, Region::All, ctx);
        let norm = luxemburg_norm(&f, &slot.q, Region::All, ctx);
        let (a, b) = (c.powf(1.0 / qm), c.powf(1.0 / qp));
        if norm > a.max(b) * (1.0 + 1e-9) || norm < a.min(b) * (1.0 - 1e-9) {
            violations += 1;
        }
    }
    out.push(Check::new("luxemburg_bracketing", Status::from_bool(violations == 0), format!("violations={violations}")));
    out
}
