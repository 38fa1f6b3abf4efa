//! TOML experiment configuration. Every table rejects unknown keys.

use std::collections::BTreeMap;

use relkernel_core::{make_grid, GridSpec, PotentialSpec, ScalarPotential, VectorPotential};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// optional; must match the experiment named on the command line
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub potentials: PotentialsConfig,
    #[serde(default)]
    pub test_function: TestFunctionConfig,
    #[serde(default, rename = "levy-check")]
    pub levy_check: LevyCheckConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default, rename = "chernoff-rate")]
    pub chernoff_rate: ChernoffConfig,
    #[serde(default, rename = "mc-compare")]
    pub mc_compare: McConfig,
    #[serde(default, rename = "property-suite")]
    pub property_suite: SuiteConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dim: usize,
    pub points: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: 1, points: 64, length: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialsConfig {
    pub mass: f64,
    pub vector: VectorPotential,
    pub scalar: ScalarPotential,
}

impl Default for PotentialsConfig {
    fn default() -> Self {
        let b = PotentialSpec::benchmark(1.0);
        Self { mass: b.mass, vector: b.vector, scalar: b.scalar }
    }
}

/// g(x) = a·exp(−|x − c|²/2w²); missing centre coordinates are 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestFunctionConfig {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

impl Default for TestFunctionConfig {
    fn default() -> Self {
        Self { center: vec![0.3], width: 1.0, amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    FarField,
    Truncate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevyCheckConfig {
    pub masses: Vec<f64>,
    pub dims: Vec<usize>,
    /// |ξ| values; the direction is (1,…,1)/√d
    pub xi: Vec<f64>,
    pub r_inner: f64,
    pub r_outer: f64,
    pub tail: TailMode,
    pub tolerance: f64,
}

impl Default for LevyCheckConfig {
    fn default() -> Self {
        Self {
            masses: vec![0.0, 1.0],
            dims: vec![1, 2],
            xi: vec![0.5, 1.0, 2.0, 3.0, 4.0],
            r_inner: 1e-6,
            r_outer: 1e4,
            tail: TailMode::FarField,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    /// points per axis; defaults to 4096 in d=1 and 1024 in d=2 (only `grid.dim` is taken from [grid])
    pub points: Option<usize>,
    /// box length; defaults to 10
    pub length: Option<f64>,
    pub masses: Vec<f64>,
    pub times: Vec<f64>,
    pub mass_tolerance: f64,
    pub positivity_tolerance: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { points: None, length: None, masses: vec![0.0, 1.0], times: vec![0.1, 1.0], mass_tolerance: 1e-8, positivity_tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// any of H1, H2, H3, HNR
    pub kinds: Vec<String>,
    /// measure ε_disc by grid refinement for the lower-bound check
    pub refine_tolerance: bool,
    /// write each matrix as <out>/oracle_<kind>.bin + .json
    pub export: bool,
    pub hermiticity_tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            kinds: ["H1", "H2", "H3", "HNR"].map(String::from).to_vec(),
            refine_tolerance: true,
            export: false,
            hermiticity_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    LastHalf,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormName {
    L2,
    Operator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChernoffConfig {
    /// F1, F2, GNR_magnetic, G_scalar, G_scalar_symmetrized, Split_H3
    pub steppers: Vec<String>,
    pub t: f64,
    /// explicit n list; defaults to 1, 2, 4, …, n_max
    pub n_list: Option<Vec<usize>>,
    pub n_max: usize,
    pub norms: Vec<NormName>,
    pub fit: FitMode,
    /// per-stepper [lo, hi]; fail (exit 3) when the fitted slope leaves it
    pub expect_slope: BTreeMap<String, [f64; 2]>,
    /// fail when the primary error is not strictly decreasing
    pub require_monotone: bool,
    /// fail when the last primary error exceeds this
    pub max_final_error: Option<f64>,
}

impl Default for ChernoffConfig {
    fn default() -> Self {
        Self {
            steppers: vec!["F1".into(), "F2".into()],
            t: 1.0,
            n_list: None,
            n_max: 128,
            norms: vec![NormName::L2],
            fit: FitMode::LastHalf,
            expect_slope: BTreeMap::new(),
            require_monotone: false,
            max_final_error: None,
        }
    }
}

impl ChernoffConfig {
    pub fn n_values(&self) -> Vec<usize> {
        match &self.n_list {
            Some(v) => v.clone(),
            None => (0..).map(|k| 1usize << k).take_while(|n| *n <= self.n_max).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    /// any of H1, H2, H3, NR
    pub estimators: Vec<String>,
    pub t: f64,
    pub n_paths: usize,
    pub n_slices: usize,
    pub k_inner: usize,
    pub block_size: usize,
    pub probes: Vec<Vec<f64>>,
    /// fail when |MC − oracle| exceeds z_max standard errors
    pub z_max: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            estimators: ["H1", "H2", "H3"].map(String::from).to_vec(),
            t: 0.5,
            n_paths: 200_000,
            n_slices: 64,
            k_inner: relkernel_core::montecarlo::DEFAULT_K_INNER,
            block_size: relkernel_core::montecarlo::DEFAULT_BLOCK_SIZE,
            probes: vec![vec![-0.5], vec![0.0], vec![0.7]],
            z_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    Midpoint,
    LineIntegral,
    LeftEndpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub preset: relkernel_core::properties::SuitePreset,
    /// H1 phase rule; anything other than midpoint runs a deliberately broken H1
    pub h1_rule: RuleName,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { preset: relkernel_core::properties::SuitePreset::Benchmark, h1_rule: RuleName::Midpoint }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn grid(&self) -> Result<GridSpec, String> {
        make_grid(self.grid.dim, self.grid.points, self.grid.length).map_err(|e| e.to_string())
    }

    pub fn potentials(&self) -> Result<PotentialSpec, String> {
        let p = &self.potentials;
        PotentialSpec::new(self.grid.dim, p.mass, p.vector.clone(), p.scalar.clone()).map_err(|e| e.to_string())
    }

    /// Schema-level validation of every section.
    pub fn validate(&self) -> Result<(), String> {
        SECTIONS.iter().try_for_each(|s| self.validate_for(s))
    }

    /// Validation of the sections `experiment` reads. Potentials are only
    /// checked against the grid dimension by experiments that use them.
    pub fn validate_for(&self, experiment: &str) -> Result<(), String> {
        self.grid()?;
        let tf = &self.test_function;
        let test_function_ok = || {
            if tf.center.len() > self.grid.dim || !(tf.width > 0.0) {
                return Err("test_function: centre longer than dimension or non-positive width".to_string());
            }
            Ok(())
        };
        match experiment {
            "levy-check" => {
                let l = &self.levy_check;
                if !(l.r_inner > 0.0 && l.r_inner < 1.0 && l.r_outer > 1.0) {
                    return Err("levy-check: need 0 < r_inner < 1 < r_outer".into());
                }
                if l.dims.iter().any(|d| !(1..=3).contains(d)) || l.masses.iter().any(|m| !(*m >= 0.0)) {
                    return Err("levy-check: dims in 1..=3 and masses >= 0".into());
                }
            }
            "kernel" => {
                let k = &self.kernel;
                if k.times.iter().any(|t| !(*t > 0.0)) || k.masses.iter().any(|m| !(*m >= 0.0)) {
                    return Err("kernel: times > 0 and masses >= 0".into());
                }
                if let Some(p) = k.points {
                    make_grid(self.grid.dim, p, k.length.unwrap_or(10.0)).map_err(|e| format!("kernel: {e}"))?;
                } else if !(k.length.unwrap_or(10.0) > 0.0) {
                    return Err("kernel: length must be positive".into());
                }
            }
            "oracle" => {
                self.potentials()?;
                for k in &self.oracle.kinds {
                    if crate::experiments::operator_kind(k).is_none() {
                        return Err(format!("oracle: unknown kind {k:?}"));
                    }
                }
            }
            "chernoff-rate" => {
                self.potentials()?;
                test_function_ok()?;
                let c = &self.chernoff_rate;
                let ns = c.n_values();
                if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("chernoff-rate: n list must be positive and strictly increasing".into());
                }
                if c.norms.is_empty() {
                    return Err("chernoff-rate: norms must not be empty".into());
                }
                for s in c.steppers.iter().chain(c.expect_slope.keys()) {
                    if relkernel_core::chernoff::StepperKind::from_name(s).is_none() {
                        return Err(format!("chernoff-rate: unknown stepper {s:?}"));
                    }
                }
            }
            "mc-compare" => {
                self.potentials()?;
                test_function_ok()?;
                let m = &self.mc_compare;
                for e in &m.estimators {
                    if relkernel_core::montecarlo::FunctionalKind::from_name(e).is_none() {
                        return Err(format!("mc-compare: unknown estimator {e:?}"));
                    }
                }
                if m.probes.iter().any(|p| p.len() != self.grid.dim) {
                    return Err("mc-compare: every probe needs one coordinate per dimension".into());
                }
                if m.n_paths < 2 || m.n_slices == 0 || m.k_inner == 0 || m.block_size == 0 || !(m.t >= 0.0) {
                    return Err("mc-compare: need n_paths >= 2, positive n_slices/k_inner/block_size, t >= 0".into());
                }
            }
            "property-suite" => {}
            other => return Err(format!("unknown experiment {other:?}")),
        }
        Ok(())
    }
}

pub const SECTIONS: [&str; 6] = ["levy-check", "kernel", "oracle", "chernoff-rate", "mc-compare", "property-suite"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_benchmark() {
        let c = Config::parse("").unwrap();
        c.validate().unwrap();
        assert_eq!(c.potentials().unwrap(), PotentialSpec::benchmark(1.0));
        assert_eq!(c.chernoff_rate.n_values(), vec![1, 2, 4, 8, 16, 32, 64, 128]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("sede = 3").is_err());
        assert!(Config::parse("[grid]\npoints = 64\nwidth = 3").is_err());
        assert!(Config::parse("[potentials.vector]\nkind = \"linear\"\nmatrix = [1.0]\nextra = 1").is_err());
        assert!(Config::parse("[mc-compare]\nn_path = 10").is_err());
    }

    #[test]
    fn potentials_parse_from_tables() {
        let c = Config::parse(
            "[potentials]\nmass = 0.0\n[potentials.vector]\nkind = \"linear\"\nmatrix = [0.5]\n[potentials.scalar]\nkind = \"zero\"\n",
        )
        .unwrap();
        let p = c.potentials().unwrap();
        assert_eq!(p.vector, VectorPotential::Linear { matrix: vec![0.5] });
        assert_eq!(p.scalar, ScalarPotential::Zero);
    }

    #[test]
    fn validation_catches_bad_values() {
        assert!(Config::parse("[grid]\npoints = 60").unwrap().validate().is_err());
        assert!(Config::parse("[chernoff-rate]\nsteppers = [\"F9\"]").unwrap().validate().is_err());
        assert!(Config::parse("[mc-compare]\nprobes = [[0.0, 1.0]]").unwrap().validate().is_err());
    }
}
