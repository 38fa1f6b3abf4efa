use std::path::Path;

use num_complex::Complex64;
use relkernel_core::chernoff::{oracle_potentials, rate_study, FitWindow, Norms, StepperKind};
use relkernel_core::levy::{verify_levy_khinchin, OuterTail};
use relkernel_core::linalg::hermiticity_residual;
use relkernel_core::montecarlo::{estimate, FunctionalKind, McParams};
use relkernel_core::oracle::{semigroup_apply, OperatorKind, OperatorMatrix};
use relkernel_core::properties::{run_property_suite, SuiteOptions};
use relkernel_core::propagators::free_relativistic_kernel;
use relkernel_core::{make_grid, Error, Field, Prescription};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Config, FitMode, NormName, RuleName, TailMode};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub invariant: String,
    pub case: String,
    pub value: f64,
    pub threshold: f64,
}

impl Violation {
    fn new(invariant: &str, case: String, value: f64, threshold: f64) -> Self {
        Self { invariant: invariant.into(), case, value, threshold }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub summary: Value,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    /// parameters the numerics reject; reported like a schema error
    Config(String),
    Runtime(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) | Error::Grid(_) | Error::SizeCap { .. } | Error::GridMismatch => {
                RunError::Config(e.to_string())
            }
            other => RunError::Runtime(other.to_string()),
        }
    }
}

type Run = Result<Outcome, RunError>;

/// Shortest round-trip form; exponent notation away from [1e-4, 1e15).
fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn coords(x: &[f64]) -> String {
    x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ")
}

pub fn operator_kind(name: &str) -> Option<OperatorKind> {
    match name.to_ascii_uppercase().as_str() {
        "H1" => Some(OperatorKind::H1),
        "H2" => Some(OperatorKind::H2),
        "H3" => Some(OperatorKind::H3),
        "HNR" => Some(OperatorKind::HNR),
        _ => None,
    }
}

fn config_err(e: String) -> RunError {
    RunError::Config(e)
}

pub fn test_function(cfg: &Config) -> impl Fn(&[f64]) -> Complex64 + Sync + '_ {
    let tf = &cfg.test_function;
    move |x: &[f64]| {
        let r2: f64 = x
            .iter()
            .enumerate()
            .map(|(a, v)| (v - tf.center.get(a).copied().unwrap_or(0.0)).powi(2))
            .sum();
        Complex64::new(tf.amplitude * (-r2 / (2.0 * tf.width * tf.width)).exp(), 0.0)
    }
}

pub fn levy_check(cfg: &Config) -> Run {
    let c = &cfg.levy_check;
    let tail = match c.tail {
        TailMode::FarField => OuterTail::FarField,
        TailMode::Truncate => OuterTail::Truncate,
    };
    let mut table = Table::new(&["m", "d", "xi", "symbol", "integral", "residual"]);
    let mut violations = Vec::new();
    let mut worst: f64 = 0.0;
    for &m in &c.masses {
        for &d in &c.dims {
            for &xi in &c.xi {
                let dir = vec![xi / (d as f64).sqrt(); d];
                let r = verify_levy_khinchin(m, d, &dir, c.r_inner, c.r_outer, tail)?;
                worst = worst.max(r.residual);
                if !(r.residual < c.tolerance) {
                    violations.push(Violation::new("levy_khinchin", format!("m={m} d={d} xi={xi}"), r.residual, c.tolerance));
                }
                table.rows.push(vec![num(m), d.to_string(), num(xi), num(r.symbol), num(r.integral), num(r.residual)]);
            }
        }
    }
    Ok(Outcome { table, summary: json!({ "max_residual": worst }), violations })
}

pub fn kernel(cfg: &Config) -> Run {
    let c = &cfg.kernel;
    let dim = cfg.grid.dim;
    let points = c.points.unwrap_or(if dim == 1 { 4096 } else { 1024 });
    let grid = make_grid(dim, points, c.length.unwrap_or(10.0))?;
    let mut table = Table::new(&["m", "t", "mass", "min_value", "value_at_origin", "second_moment_axis0"]);
    let mut violations = Vec::new();
    let origin = vec![0i64; grid.dim];
    for &m in &c.masses {
        for &t in &c.times {
            let k = free_relativistic_kernel(&grid, m, t)?;
            let (mass, min) = (k.mass(), k.min_value());
            if !((mass - 1.0).abs() < c.mass_tolerance) {
                violations.push(Violation::new("kernel_mass", format!("m={m} t={t}"), (mass - 1.0).abs(), c.mass_tolerance));
            }
            if !(min >= -c.positivity_tolerance) {
                violations.push(Violation::new("kernel_positivity", format!("m={m} t={t}"), min, -c.positivity_tolerance));
            }
            table.rows.push(vec![num(m), num(t), num(mass), num(min), num(k.at_offset(&origin)), num(k.second_moment())]);
        }
    }
    Ok(Outcome { table, summary: json!({ "grid": grid }), violations })
}

pub fn oracle(cfg: &Config, out_dir: &Path) -> Run {
    let grid = cfg.grid().map_err(config_err)?;
    let pot = cfg.potentials().map_err(config_err)?;
    let c = &cfg.oracle;
    let mut table = Table::new(&["kind", "index", "eigenvalue"]);
    let mut violations = Vec::new();
    let mut per_kind = Vec::new();
    for name in &c.kinds {
        let kind = operator_kind(name).ok_or_else(|| RunError::Config(format!("unknown kind {name}")))?;
        let mut op = OperatorMatrix::build(kind, &grid, &pot)?;
        let herm = hermiticity_residual(&op.entries);
        if !(herm < c.hermiticity_tolerance) {
            violations.push(Violation::new("hermiticity", format!("{kind:?}"), herm, c.hermiticity_tolerance));
        }
        let mut bound = Value::Null;
        if kind.is_relativistic() && pot.scalar.infimum() >= 0.0 {
            let eps = if c.refine_tolerance { op.refine_disc_tolerance()?.max(1e-6) } else { op.disc_tolerance };
            let gap = pot.mass - op.min_eigenvalue();
            if !(gap <= eps) {
                violations.push(Violation::new("lower_bound", format!("{kind:?}"), gap, eps));
            }
            bound = json!({ "m_minus_lambda_min": gap, "disc_tolerance": eps });
        }
        if c.export {
            let (bin, side) = op.export(&out_dir.join(format!("oracle_{kind:?}")))?;
            per_kind.push(json!({ "kind": kind, "export": [bin, side] }));
        }
        for (i, lam) in op.eigenvalues.iter().enumerate() {
            table.rows.push(vec![format!("{kind:?}"), i.to_string(), num(*lam)]);
        }
        per_kind.push(json!({
            "kind": kind,
            "min_eigenvalue": op.min_eigenvalue(),
            "hermiticity_residual": herm,
            "lower_bound": bound,
        }));
    }
    Ok(Outcome { table, summary: json!({ "grid": grid, "operators": per_kind }), violations })
}

pub fn chernoff_rate(cfg: &Config) -> Run {
    let grid = cfg.grid().map_err(config_err)?;
    let pot = cfg.potentials().map_err(config_err)?;
    let c = &cfg.chernoff_rate;
    let g = Field::from_fn(grid, test_function(cfg));
    let norms = Norms { l2_on_g: c.norms.contains(&NormName::L2), operator: c.norms.contains(&NormName::Operator) };
    let fit = match c.fit {
        FitMode::LastHalf => FitWindow::LastHalf,
        FitMode::All => FitWindow::All,
    };
    let ns = c.n_values();
    let mut table = Table::new(&["stepper", "n", "error_L2", "error_opnorm", "slope_running"]);
    let mut violations = Vec::new();
    let mut reports = Vec::new();
    for name in &c.steppers {
        let kind = StepperKind::from_name(name).ok_or_else(|| RunError::Config(format!("unknown stepper {name}")))?;
        let used = oracle_potentials(kind, &pot);
        let rep = rate_study(kind, &used, &grid, c.t, &ns, Some(&g), norms, fit)?;
        for k in 0..ns.len() {
            table.rows.push(vec![
                kind.name().to_string(),
                ns[k].to_string(),
                opt(rep.error_l2[k]),
                opt(rep.error_opnorm[k]),
                opt(rep.slope_running[k]),
            ]);
        }
        let band = c.expect_slope.iter().find(|(k, _)| StepperKind::from_name(k) == Some(kind)).map(|(_, b)| *b);
        if let Some([lo, hi]) = band {
            if !(lo..=hi).contains(&rep.slope) {
                let bound = if rep.slope < lo { lo } else { hi };
                violations.push(Violation::new("rate_slope", kind.name().into(), rep.slope, bound));
            }
        }
        if c.require_monotone && !rep.monotone {
            let e = rep.primary_errors();
            let bad = e.windows(2).filter(|w| !(w[1] < w[0])).count();
            violations.push(Violation::new("monotone_decrease", kind.name().into(), bad as f64, 0.0));
        }
        let last = *rep.primary_errors().last().unwrap();
        if let Some(max) = c.max_final_error {
            if !(last < max) {
                violations.push(Violation::new("final_error", kind.name().into(), last, max));
            }
        }
        reports.push(json!({
            "stepper": kind.name(),
            "oracle": kind.oracle_kind(),
            "slope": rep.slope,
            "slope_residual": rep.slope_residual,
            "primary_norm": rep.primary_norm,
            "monotone": rep.monotone,
            "final_error": last,
            "vector_potential_dropped": used != pot,
        }));
    }
    Ok(Outcome { table, summary: json!({ "grid": grid, "t": c.t, "n_values": ns, "reports": reports }), violations })
}

pub fn mc_compare(cfg: &Config) -> Run {
    let grid = cfg.grid().map_err(config_err)?;
    let pot = cfg.potentials().map_err(config_err)?;
    let c = &cfg.mc_compare;
    let g = test_function(cfg);
    let gfield = Field::from_fn(grid, &g);
    let params = McParams { n_paths: c.n_paths, n_slices: c.n_slices, k_inner: c.k_inner, seed: cfg.seed, block_size: c.block_size };
    let mut table = Table::new(&[
        "estimator", "x", "mc_re", "mc_im", "std_error", "oracle_re", "oracle_im", "abs_diff", "z",
    ]);
    let mut violations = Vec::new();
    let mut worst: f64 = 0.0;
    for name in &c.estimators {
        let kind = FunctionalKind::from_name(name).ok_or_else(|| RunError::Config(format!("unknown estimator {name}")))?;
        let op_kind = match kind {
            FunctionalKind::S1n => OperatorKind::H1,
            FunctionalKind::S2n => OperatorKind::H2,
            FunctionalKind::S3Discrete => OperatorKind::H3,
            FunctionalKind::FkiNr => OperatorKind::HNR,
        };
        let op = OperatorMatrix::build(op_kind, &grid, &pot)?;
        let exact = semigroup_apply(&op, c.t, &gfield, op_kind.is_relativistic())?;
        for x in &c.probes {
            let e = estimate(kind, &pot, &g, x, c.t, &params)?;
            let r = exact.spectral_eval(x);
            let diff = (e.value() - r).norm();
            let z = if e.std_error > 0.0 { diff / e.std_error } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
            worst = worst.max(z);
            if !(z <= c.z_max) {
                violations.push(Violation::new("mc_oracle_agreement", format!("{} x={}", kind.name(), coords(x)), z, c.z_max));
            }
            table.rows.push(vec![
                kind.name().into(),
                coords(x),
                num(e.value_re),
                num(e.value_im),
                num(e.std_error),
                num(r.re),
                num(r.im),
                num(diff),
                num(z),
            ]);
        }
    }
    Ok(Outcome {
        table,
        summary: json!({ "max_z": worst, "params": params, "t": c.t, "grid": grid }),
        violations,
    })
}

pub fn property_suite(cfg: &Config) -> Run {
    if cfg.grid.dim != 1 {
        return Err(RunError::Config("property-suite runs in d = 1".into()));
    }
    let c = &cfg.property_suite;
    let opts = SuiteOptions {
        preset: c.preset,
        points: cfg.grid.points,
        length: cfg.grid.length,
        h1_rule: match c.h1_rule {
            RuleName::Midpoint => Prescription::Midpoint,
            RuleName::LineIntegral => Prescription::LineIntegral,
            RuleName::LeftEndpoint => Prescription::LeftEndpoint,
        },
    };
    let checks = run_property_suite(&opts)?;
    let mut table = Table::new(&["invariant", "case", "value", "threshold", "comparison", "passed"]);
    let mut violations = Vec::new();
    for ch in &checks {
        let cmp = serde_json::to_value(ch.comparison).unwrap();
        table.rows.push(vec![
            ch.invariant.clone(),
            ch.case.clone(),
            num(ch.value),
            num(ch.threshold),
            cmp.as_str().unwrap_or_default().to_string(),
            ch.passed.to_string(),
        ]);
        if !ch.passed {
            violations.push(Violation::new(&ch.invariant, ch.case.clone(), ch.value, ch.threshold));
        }
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    Ok(Outcome { table, summary: json!({ "checks": checks.len(), "passed": passed }), violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use relkernel_core::special::symbol_value;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, -0.0, 1.0, 0.1, 2.220446049250313e-16, -1.5e-7, 3.0e20, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits(), "{v}");
        }
        assert_eq!(num(2.5e-16), "2.5e-16");
        assert_eq!(num(0.25), "0.25");
    }

    #[test]
    fn symbol_column_matches_core() {
        let cfg = Config::parse("[levy-check]\nmasses = [1.0]\ndims = [1]\nxi = [2.0]").unwrap();
        let out = levy_check(&cfg).unwrap();
        assert_eq!(out.table.rows[0][3], num(symbol_value(1.0, &[2.0])));
        assert!(out.violations.is_empty());
    }

    #[test]
    fn numeric_argument_errors_map_to_config() {
        let e: RunError = Error::Argument("x".into()).into();
        assert!(matches!(e, RunError::Config(_)));
        let e: RunError = Error::Quadrature { achieved: 1.0 }.into();
        assert!(matches!(e, RunError::Runtime(_)));
    }
}
