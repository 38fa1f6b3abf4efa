//! Time-sliced product approximants F(t/n)^n and the convergence-rate harness.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::linalg::{c, matrix_power, spectral_norm, CMatrix};
use crate::oracle::{apply_matrix, OperatorKind, OperatorMatrix};
use crate::potential::{PotentialSpec, Prescription, VectorPotential};
use crate::propagators::circulant_row;
use crate::special::symbol_from_sq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepperKind {
    /// relativistic kernel × midpoint phase × e^{−tV(mid)}
    F1,
    /// relativistic kernel × line-integral phase × e^{−tV(y)}
    F2,
    /// heat kernel × midpoint phase × e^{−tV(mid)}
    GnrMagnetic,
    /// e^{tΔ/2} e^{−tV}
    GScalar,
    /// e^{−tV/2} e^{tΔ/2} e^{−tV/2}
    GScalarSymmetrized,
    /// e^{−t[H3(V=0) − m]} e^{−tV}
    SplitH3,
}

impl StepperKind {
    pub const ALL: [StepperKind; 6] = [
        Self::F1,
        Self::F2,
        Self::GnrMagnetic,
        Self::GScalar,
        Self::GScalarSymmetrized,
        Self::SplitH3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::F1 => "F1",
            Self::F2 => "F2",
            Self::GnrMagnetic => "GNR_magnetic",
            Self::GScalar => "G_scalar",
            Self::GScalarSymmetrized => "G_scalar_symmetrized",
            Self::SplitH3 => "Split_H3",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }

    /// Generator whose semigroup the product converges to.
    pub fn oracle_kind(self) -> OperatorKind {
        match self {
            Self::F1 => OperatorKind::H1,
            Self::F2 => OperatorKind::H2,
            Self::SplitH3 => OperatorKind::H3,
            Self::GnrMagnetic | Self::GScalar | Self::GScalarSymmetrized => OperatorKind::HNR,
        }
    }

    pub fn subtracts_mass(self) -> bool {
        self.oracle_kind().is_relativistic()
    }

    fn scalar_only(self) -> bool {
        matches!(self, Self::GScalar | Self::GScalarSymmetrized)
    }
}

fn check(kind: StepperKind, grid: &GridSpec, pot: &PotentialSpec, tau: f64) -> Result<()> {
    if grid.dim != pot.dim {
        return Err(Error::GridMismatch);
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Argument(format!("step size must be positive, got {tau}")));
    }
    if kind.scalar_only() && !pot.vector.is_zero() {
        return Err(Error::Argument(format!("{} is defined for A = 0 only", kind.name())));
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum VRule {
    Midpoint,
    Endpoint,
}

/// K[x,y] = row[x−y] e^{−i(y−x)·A_pres} e^{−τ V_rule(x,y)}.
fn kernel_phase_matrix(
    grid: &GridSpec,
    pot: &PotentialSpec,
    row: &[Complex64],
    pres: Prescription,
    vrule: VRule,
    tau: f64,
) -> CMatrix {
    let n = grid.sites();
    let pts = grid.points_all();
    let cols: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let y = &pts[j];
            (0..n)
                .map(|i| {
                    let x = &pts[i];
                    let v = match vrule {
                        VRule::Midpoint => {
                            let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
                            pot.scalar_at(&mid)
                        }
                        VRule::Endpoint => pot.scalar_at(y),
                    };
                    let work = pot.phase_work(pres, x, y);
                    row[grid.displacement_index(i, j)] * Complex64::from_polar((-tau * v).exp(), -work)
                })
                .collect()
        })
        .collect();
    CMatrix::from_iterator(n, n, cols.into_iter().flatten())
}

fn diag_weights(grid: &GridSpec, pot: &PotentialSpec, scale: f64) -> Vec<f64> {
    grid.points_all().iter().map(|z| (-scale * pot.scalar_at(z)).exp()).collect()
}

/// Dense matrix of one step of size τ.
pub fn step_matrix(kind: StepperKind, grid: &GridSpec, pot: &PotentialSpec, tau: f64) -> Result<CMatrix> {
    check(kind, grid, pot, tau)?;
    let m = pot.mass;
    let rel_row = || circulant_row(grid, |xi| c((-tau * symbol_from_sq(m, xi.iter().map(|v| v * v).sum())).exp()));
    let heat_row = || circulant_row(grid, |xi| c((-0.5 * tau * xi.iter().map(|v| v * v).sum::<f64>()).exp()));
    let circulant = |row: Vec<Complex64>| {
        let n = grid.sites();
        CMatrix::from_fn(n, n, |i, j| row[grid.displacement_index(i, j)])
    };
    Ok(match kind {
        StepperKind::F1 => kernel_phase_matrix(grid, pot, &rel_row(), Prescription::Midpoint, VRule::Midpoint, tau),
        StepperKind::F2 => {
            kernel_phase_matrix(grid, pot, &rel_row(), Prescription::LineIntegral, VRule::Endpoint, tau)
        }
        StepperKind::GnrMagnetic => {
            kernel_phase_matrix(grid, pot, &heat_row(), Prescription::Midpoint, VRule::Midpoint, tau)
        }
        StepperKind::GScalar => {
            let w = diag_weights(grid, pot, tau);
            let mut k = circulant(heat_row());
            for (j, wj) in w.iter().enumerate() {
                k.column_mut(j).scale_mut(*wj);
            }
            k
        }
        StepperKind::GScalarSymmetrized => {
            let w = diag_weights(grid, pot, 0.5 * tau);
            let k = circulant(heat_row());
            let n = grid.sites();
            CMatrix::from_fn(n, n, |i, j| k[(i, j)] * (w[i] * w[j]))
        }
        StepperKind::SplitH3 => {
            let kinetic = OperatorMatrix::build(OperatorKind::H3, grid, &pot.with_scalar(crate::ScalarPotential::Zero))?;
            let mut k = kinetic.semigroup_matrix(tau, true);
            for (j, wj) in diag_weights(grid, pot, tau).iter().enumerate() {
                k.column_mut(j).scale_mut(*wj);
            }
            k
        }
    })
}

/// A single step of size t applied to g.
pub fn step(kind: StepperKind, pot: &PotentialSpec, t: f64, g: &Field) -> Result<Field> {
    Ok(apply_matrix(&step_matrix(kind, &g.grid, pot, t)?, g))
}

/// F(t/n)^n g.
pub fn iterate(kind: StepperKind, pot: &PotentialSpec, t: f64, n: usize, g: &Field) -> Result<Field> {
    if n == 0 {
        return Err(Error::Argument("n must be >= 1".into()));
    }
    let m = step_matrix(kind, &g.grid, pot, t / n as f64)?;
    let mut f = g.clone();
    for _ in 0..n {
        f = apply_matrix(&m, &f);
    }
    Ok(f)
}

/// Potentials the oracle is built from: the scalar family drops A.
pub fn oracle_potentials(kind: StepperKind, pot: &PotentialSpec) -> PotentialSpec {
    if kind.scalar_only() {
        pot.with_vector(VectorPotential::Zero)
    } else {
        pot.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitWindow {
    /// least squares over the second half of the n list
    LastHalf,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Norms {
    pub l2_on_g: bool,
    pub operator: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub stepper: String,
    pub t: f64,
    pub grid: GridSpec,
    pub potentials: PotentialSpec,
    pub n_values: Vec<usize>,
    pub error_l2: Vec<Option<f64>>,
    pub error_opnorm: Vec<Option<f64>>,
    /// log-log slope between consecutive n of the primary error
    pub slope_running: Vec<Option<f64>>,
    pub slope: f64,
    pub slope_residual: f64,
    /// operator norm when available, otherwise L² on g
    pub primary_norm: String,
    pub monotone: bool,
}

impl ConvergenceReport {
    pub fn primary_errors(&self) -> Vec<f64> {
        if self.primary_norm == "operator" {
            self.error_opnorm.iter().map(|e| e.unwrap()).collect()
        } else {
            self.error_l2.iter().map(|e| e.unwrap()).collect()
        }
    }
}

/// Least-squares slope of log e against log n, with RMS residual.
pub fn loglog_slope(ns: &[usize], es: &[f64]) -> (f64, f64) {
    let x: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let y: Vec<f64> = es.iter().map(|e| e.ln()).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let icpt = my - slope * mx;
    let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (slope, (rss / k).sqrt())
}

/// Errors of F(t/n)^n against the oracle semigroup for each n.
pub fn rate_study(
    kind: StepperKind,
    pot: &PotentialSpec,
    grid: &GridSpec,
    t: f64,
    n_list: &[usize],
    g: Option<&Field>,
    norms: Norms,
    fit: FitWindow,
) -> Result<ConvergenceReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(Error::Argument("n list must be strictly increasing and positive".into()));
    }
    if !norms.l2_on_g && !norms.operator {
        return Err(Error::Argument("select at least one norm".into()));
    }
    if norms.l2_on_g && g.is_none() {
        return Err(Error::Argument("L² error needs a test function g".into()));
    }
    let oracle = OperatorMatrix::build(kind.oracle_kind(), grid, &oracle_potentials(kind, pot))?;
    let exact = oracle.semigroup_matrix(t, kind.subtracts_mass());
    let rows: Vec<(Option<f64>, Option<f64>)> = n_list
        .par_iter()
        .map(|&n| -> Result<(Option<f64>, Option<f64>)> {
            let f = step_matrix(kind, grid, pot, t / n as f64)?;
            let diff = matrix_power(&f, n) - &exact;
            let l2 = g.filter(|_| norms.l2_on_g).map(|g| apply_matrix(&diff, g).l2_norm());
            let op = norms.operator.then(|| spectral_norm(&diff));
            Ok((l2, op))
        })
        .collect::<Result<_>>()?;
    let error_l2: Vec<Option<f64>> = rows.iter().map(|r| r.0).collect();
    let error_opnorm: Vec<Option<f64>> = rows.iter().map(|r| r.1).collect();
    let primary_norm = if norms.operator { "operator" } else { "l2_on_g" };
    let primary: Vec<f64> = if norms.operator {
        error_opnorm.iter().map(|e| e.unwrap()).collect()
    } else {
        error_l2.iter().map(|e| e.unwrap()).collect()
    };
    let mut slope_running = vec![None];
    for k in 1..n_list.len() {
        let s = (primary[k] / primary[k - 1]).ln() / (n_list[k] as f64 / n_list[k - 1] as f64).ln();
        slope_running.push(Some(s));
    }
    let start = match fit {
        FitWindow::All => 0,
        FitWindow::LastHalf => n_list.len() / 2,
    };
    let start = start.min(n_list.len().saturating_sub(2));
    let (slope, slope_residual) = loglog_slope(&n_list[start..], &primary[start..]);
    let monotone = primary.windows(2).all(|w| w[1] < w[0]);
    Ok(ConvergenceReport {
        stepper: kind.name().to_string(),
        t,
        grid: *grid,
        potentials: pot.clone(),
        n_values: n_list.to_vec(),
        error_l2,
        error_opnorm,
        slope_running,
        slope,
        slope_residual,
        primary_norm: primary_norm.to_string(),
        monotone,
    })
}

/// Pointwise kernel errors |[F(t/n)^n](x,y) − e^{−tH}(x,y)| / h^d at fixed site pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub n_values: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
    /// errors[p][k] for pair p and n_values[k]
    pub errors: Vec<Vec<f64>>,
    pub slopes: Vec<f64>,
}

pub fn pointwise_rate_study(
    kind: StepperKind,
    pot: &PotentialSpec,
    grid: &GridSpec,
    t: f64,
    n_list: &[usize],
    pairs: &[(usize, usize)],
) -> Result<PointwiseReport> {
    let oracle = OperatorMatrix::build(kind.oracle_kind(), grid, &oracle_potentials(kind, pot))?;
    let exact = oracle.semigroup_matrix(t, kind.subtracts_mass());
    let h = grid.cell_volume();
    let per_n: Vec<Vec<f64>> = n_list
        .par_iter()
        .map(|&n| -> Result<Vec<f64>> {
            let p = matrix_power(&step_matrix(kind, grid, pot, t / n as f64)?, n);
            Ok(pairs.iter().map(|&(i, j)| (p[(i, j)] - exact[(i, j)]).norm() / h).collect())
        })
        .collect::<Result<_>>()?;
    let errors: Vec<Vec<f64>> = (0..pairs.len()).map(|p| per_n.iter().map(|row| row[p]).collect()).collect();
    let slopes = errors.iter().map(|e| loglog_slope(n_list, e).0).collect();
    Ok(PointwiseReport { n_values: n_list.to_vec(), pairs: pairs.to_vec(), errors, slopes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::linalg::max_abs_entry;
    use crate::potential::ScalarPotential;
    use crate::propagators::{apply_free_semigroup, apply_heat_semigroup};

    fn gauss(grid: GridSpec) -> Field {
        Field::from_fn(grid, |x| Complex64::new((-(x[0] - 0.3).powi(2) / 2.0).exp(), 0.0))
    }

    #[test]
    fn free_steps_are_free_semigroups() {
        let g = make_grid(1, 32, 12.0).unwrap();
        let p = PotentialSpec::free(1, 1.0);
        let f = gauss(g);
        for kind in [StepperKind::F1, StepperKind::F2, StepperKind::SplitH3] {
            let out = step(kind, &p, 0.4, &f).unwrap();
            assert!(out.sub(&apply_free_semigroup(&f, 1.0, 0.4)).max_abs() < 1e-12, "{kind:?}");
        }
        for kind in [StepperKind::GnrMagnetic, StepperKind::GScalar, StepperKind::GScalarSymmetrized] {
            let out = step(kind, &p, 0.4, &f).unwrap();
            assert!(out.sub(&apply_heat_semigroup(&f, 0.4)).max_abs() < 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn linear_potential_f1_equals_f2() {
        let g = make_grid(1, 32, 12.0).unwrap();
        let p = PotentialSpec::new(1, 1.0, VectorPotential::Linear { matrix: vec![0.7] }, ScalarPotential::Zero).unwrap();
        let a = step_matrix(StepperKind::F1, &g, &p, 0.2).unwrap();
        let b = step_matrix(StepperKind::F2, &g, &p, 0.2).unwrap();
        assert!(max_abs_entry(&(a - b)) < 1e-12);
    }

    #[test]
    fn scalar_steppers_reject_vector_potential() {
        let g = make_grid(1, 16, 8.0).unwrap();
        let p = PotentialSpec::new(1, 1.0, VectorPotential::Linear { matrix: vec![0.7] }, ScalarPotential::Zero).unwrap();
        assert!(step_matrix(StepperKind::GScalar, &g, &p, 0.1).is_err());
        assert!(step_matrix(StepperKind::F1, &g, &p, 0.0).is_err());
    }

    #[test]
    fn iterate_once_is_step() {
        let g = make_grid(1, 16, 8.0).unwrap();
        let p = PotentialSpec::new(1, 1.0, VectorPotential::Zero, ScalarPotential::Harmonic { omega: 1.0 }).unwrap();
        let f = gauss(g);
        let a = iterate(StepperKind::F1, &p, 0.3, 1, &f).unwrap();
        let b = step(StepperKind::F1, &p, 0.3, &f).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn slope_fit() {
        let ns = [1, 2, 4, 8];
        let es: Vec<f64> = ns.iter().map(|n| 3.0 / (*n as f64).powi(2)).collect();
        let (s, r) = loglog_slope(&ns, &es);
        assert!((s + 2.0).abs() < 1e-12 && r < 1e-12);
    }

    #[test]
    fn names_round_trip() {
        for k in StepperKind::ALL {
            assert_eq!(StepperKind::from_name(k.name()), Some(k));
        }
    }
}
