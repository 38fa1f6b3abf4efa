//! Built-in structural checks on the discretized operators and free kernels.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::make_grid;
use crate::levy::{verify_levy_khinchin, OuterTail};
use crate::linalg::{hermitian_eigen, hermiticity_residual, max_abs_entry};
use crate::oracle::{assemble, gauge_residual_with, OperatorKind};
use crate::potential::{GaugeFunction, PotentialSpec, Prescription, ScalarPotential, VectorPotential};
use crate::propagators::free_relativistic_kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuitePreset {
    /// bump A + harmonic V
    Benchmark,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub preset: SuitePreset,
    pub points: usize,
    pub length: f64,
    /// phase rule used for every H1 assembly; anything but the midpoint is a mutant
    pub h1_rule: Prescription,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { preset: SuitePreset::Benchmark, points: 64, length: 20.0, h1_rule: Prescription::Midpoint }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    /// invariant family, e.g. "hermiticity"
    pub invariant: String,
    /// instance, e.g. "H1 m=1"
    pub case: String,
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl PropertyCheck {
    fn new(invariant: &str, case: String, value: f64, comparison: Comparison, threshold: f64) -> Self {
        let passed = match comparison {
            Comparison::Below => value < threshold,
            Comparison::Above => value > threshold,
        };
        Self { invariant: invariant.to_string(), case, value, threshold, comparison, passed }
    }
}

pub fn cubic_gauge() -> GaugeFunction {
    GaugeFunction::CubicBump { center: vec![0.0], width: 1.0, amplitude: 0.8 }
}

pub fn run_property_suite(opts: &SuiteOptions) -> Result<Vec<PropertyCheck>> {
    let grid = make_grid(1, opts.points, opts.length)?;
    let rule = opts.h1_rule;
    let base = |m: f64| match opts.preset {
        SuitePreset::Benchmark => PotentialSpec::benchmark(m),
        SuitePreset::Zero => PotentialSpec::free(1, m),
    };
    let relativistic = [OperatorKind::H1, OperatorKind::H2, OperatorKind::H3];
    let mut out = Vec::new();

    for kind in [OperatorKind::H1, OperatorKind::H2, OperatorKind::H3, OperatorKind::HNR] {
        let h = assemble(kind, &grid, &base(1.0), rule)?;
        out.push(PropertyCheck::new("hermiticity", format!("{kind:?}"), hermiticity_residual(&h), Comparison::Below, 1e-10));
    }

    for m in [0.0, 1.0] {
        let no_v = base(m).with_scalar(ScalarPotential::Zero);
        for kind in relativistic {
            let (vals, _) = hermitian_eigen(&assemble(kind, &grid, &no_v, rule)?);
            out.push(PropertyCheck::new("lower_bound", format!("{kind:?} m={m}"), m - vals[0], Comparison::Below, 1e-6));
        }
    }

    let cubic = cubic_gauge();
    let quadratic = GaugeFunction::Quadratic { matrix: vec![0.3] };
    for m in [0.0, 1.0] {
        let p = base(m);
        for kind in [OperatorKind::H2, OperatorKind::H3] {
            let r = gauge_residual_with(kind, &grid, &p, &cubic, rule)?;
            out.push(PropertyCheck::new("gauge_covariance", format!("{kind:?} cubic m={m}"), r, Comparison::Below, 1e-8));
        }
        let r = gauge_residual_with(OperatorKind::H1, &grid, &p, &quadratic, rule)?;
        out.push(PropertyCheck::new("gauge_covariance", format!("H1 quadratic m={m}"), r, Comparison::Below, 1e-8));
        let r = gauge_residual_with(OperatorKind::H1, &grid, &p, &cubic, rule)?;
        out.push(PropertyCheck::new("gauge_noncovariance_witness", format!("H1 cubic m={m}"), r, Comparison::Above, 1e-3));
    }

    let linear = base(1.0).with_vector(VectorPotential::Linear { matrix: vec![0.5] });
    let h1 = assemble(OperatorKind::H1, &grid, &linear, rule)?;
    let h2 = assemble(OperatorKind::H2, &grid, &linear, rule)?;
    out.push(PropertyCheck::new("linear_coincidence", "H1 = H2".into(), max_abs_entry(&(h1 - h2)), Comparison::Below, 1e-12));

    for m in [0.0, 1.0] {
        for t in [0.1, 1.0] {
            let k = free_relativistic_kernel(&grid, m, t)?;
            out.push(PropertyCheck::new("kernel_mass", format!("m={m} t={t}"), (k.mass() - 1.0).abs(), Comparison::Below, 1e-8));
        }
    }

    for (m, xi) in [(0.0, 1.0), (1.0, 2.0)] {
        let c = verify_levy_khinchin(m, 1, &[xi], 1e-6, 1e4, OuterTail::FarField)?;
        out.push(PropertyCheck::new("levy_khinchin", format!("m={m} ξ={xi}"), c.residual, Comparison::Below, 1e-4));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_presets_pass() {
        let checks = run_property_suite(&SuiteOptions::default()).unwrap();
        let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
        assert!(failed.is_empty(), "{failed:?}");
    }

    #[test]
    fn zero_potentials_pass() {
        let opts = SuiteOptions { preset: SuitePreset::Zero, ..SuiteOptions::default() };
        assert!(run_property_suite(&opts).unwrap().iter().all(|c| c.passed));
    }

    #[test]
    fn endpoint_mutant_is_caught() {
        let opts = SuiteOptions { h1_rule: Prescription::LeftEndpoint, ..SuiteOptions::default() };
        let checks = run_property_suite(&opts).unwrap();
        let failed = |inv: &str| checks.iter().any(|c| c.invariant == inv && c.case.starts_with("H1") && !c.passed);
        assert!(failed("hermiticity"));
        assert!(failed("gauge_covariance"));
    }
}
