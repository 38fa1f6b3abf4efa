//! Dense Hermitian discretizations of H1, H2, H3 and H_NR and their exact semigroups.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{make_grid, Field, GridSpec};
use crate::linalg::{c, hermitian_eigen, spectral_function, spectral_norm, CMatrix};
use crate::potential::{GaugeFunction, PotentialSpec, Prescription};
use crate::propagators::circulant_row;

pub const MAX_SITES: usize = 4096;

/// Slack allowed below the lower bound m when none was measured.
pub const DEFAULT_DISC_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    H1,
    H2,
    H3,
    HNR,
}

impl OperatorKind {
    pub fn is_relativistic(self) -> bool {
        !matches!(self, Self::HNR)
    }
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub grid: GridSpec,
    pub kind: OperatorKind,
    pub potentials: PotentialSpec,
    pub entries: CMatrix,
    /// ascending
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
    pub disc_tolerance: f64,
}

fn check_size(grid: &GridSpec, pot: &PotentialSpec) -> Result<()> {
    if grid.dim != pot.dim {
        return Err(Error::GridMismatch);
    }
    if grid.dim > 2 {
        return Err(Error::Argument("dense oracles support d = 1, 2 only".into()));
    }
    if grid.sites() > MAX_SITES {
        return Err(Error::SizeCap { sites: grid.sites(), cap: MAX_SITES });
    }
    Ok(())
}

/// M[x,y] = row[x−y]·e^{−i(y−x)·A_pres(x,y)}, assembled column by column in parallel.
/// Segments are taken inside the box (no periodic wrap of the phase).
pub fn peierls_matrix(grid: &GridSpec, pot: &PotentialSpec, row: &[Complex64], pres: Prescription) -> CMatrix {
    let n = grid.sites();
    let pts = grid.points_all();
    let zero_a = pot.vector.is_zero();
    let cols: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|i| {
                    let k = row[grid.displacement_index(i, j)];
                    if zero_a || k == Complex64::new(0.0, 0.0) {
                        k
                    } else {
                        k * Complex64::from_polar(1.0, -pot.phase_work(pres, &pts[i], &pts[j]))
                    }
                })
                .collect()
        })
        .collect();
    CMatrix::from_iterator(n, n, cols.into_iter().flatten())
}

fn add_diagonal_v(m: &mut CMatrix, grid: &GridSpec, pot: &PotentialSpec) {
    for s in 0..grid.sites() {
        m[(s, s)] += c(pot.scalar_at(&grid.point(s)));
    }
}

/// Matrix of the A-dependent kinetic part with the given phase prescription, before V.
pub fn relativistic_kinetic(grid: &GridSpec, pot: &PotentialSpec, pres: Prescription) -> CMatrix {
    let m2 = pot.mass * pot.mass;
    let row = circulant_row(grid, |xi| c((xi.iter().map(|v| v * v).sum::<f64>() + m2).sqrt()));
    peierls_matrix(grid, pot, &row, pres)
}

/// Covariant derivatives D_a = (Fourier derivative)∘(line-integral Peierls phase), one per axis.
pub fn covariant_derivatives(grid: &GridSpec, pot: &PotentialSpec) -> Vec<CMatrix> {
    (0..grid.dim)
        .map(|axis| {
            let row = circulant_row(grid, |xi| c(xi[axis]));
            // only displacements along `axis` contribute; clean FFT round-off elsewhere
            let row: Vec<Complex64> = row
                .iter()
                .enumerate()
                .map(|(s, v)| {
                    let idx = grid.multi_index(s);
                    let on_axis = (0..grid.dim).all(|a| a == axis || idx[a] == 0);
                    if on_axis { *v } else { Complex64::new(0.0, 0.0) }
                })
                .collect();
            peierls_matrix(grid, pot, &row, Prescription::LineIntegral)
        })
        .collect()
}

/// Σ_a D_a², the discrete (−i∇−A)².
pub fn magnetic_laplacian(grid: &GridSpec, pot: &PotentialSpec) -> CMatrix {
    let n = grid.sites();
    covariant_derivatives(grid, pot)
        .iter()
        .fold(CMatrix::zeros(n, n), |acc, d| acc + d * d)
}

/// Raw entries of an operator before eigendecomposition. For H1 the phase
/// prescription can be overridden to build deliberately wrong variants.
pub fn assemble(kind: OperatorKind, grid: &GridSpec, pot: &PotentialSpec, h1_rule: Prescription) -> Result<CMatrix> {
    check_size(grid, pot)?;
    let mut m = match kind {
        OperatorKind::H1 => relativistic_kinetic(grid, pot, h1_rule),
        OperatorKind::H2 => relativistic_kinetic(grid, pot, Prescription::LineIntegral),
        OperatorKind::H3 if grid.dim == 1 => {
            // √(D² + m²) as a function of D itself: Lipschitz, so no √ε loss near λ = 0
            let d = covariant_derivatives(grid, pot).remove(0);
            let (vals, vecs) = hermitian_eigen(&d);
            let m2 = pot.mass * pot.mass;
            spectral_function(&vals, &vecs, |l| (l * l + m2).sqrt())
        }
        OperatorKind::H3 => {
            let n = grid.sites();
            let s = magnetic_laplacian(grid, pot) + CMatrix::identity(n, n).scale(pot.mass * pot.mass);
            let (vals, vecs) = hermitian_eigen(&s);
            if let Some(&low) = vals.first() {
                if low < -1e-10 {
                    return Err(Error::NegativeSpectrum { value: low });
                }
            }
            spectral_function(&vals, &vecs, |l| l.max(0.0).sqrt())
        }
        OperatorKind::HNR => magnetic_laplacian(grid, pot).scale(0.5),
    };
    add_diagonal_v(&mut m, grid, pot);
    Ok(m)
}

impl OperatorMatrix {
    pub fn build(kind: OperatorKind, grid: &GridSpec, pot: &PotentialSpec) -> Result<Self> {
        let entries = assemble(kind, grid, pot, Prescription::Midpoint)?;
        let (eigenvalues, eigenvectors) = hermitian_eigen(&entries);
        Ok(Self {
            grid: *grid,
            kind,
            potentials: pot.clone(),
            entries,
            eigenvalues,
            eigenvectors,
            disc_tolerance: DEFAULT_DISC_TOLERANCE,
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// e^{−t(H − m·flag)} as a dense matrix.
    pub fn semigroup_matrix(&self, t: f64, subtract_m: bool) -> CMatrix {
        let shift = if subtract_m { self.potentials.mass } else { 0.0 };
        spectral_function(&self.eigenvalues, &self.eigenvectors, |l| (-t * (l - shift)).exp())
    }

    /// Replace the default slack by the lowest-eigenvalue change under doubling N
    /// (halving when the doubled grid would exceed the size cap).
    pub fn refine_disc_tolerance(&mut self) -> Result<f64> {
        let n = self.grid.points;
        let other = if (2 * n).pow(self.grid.dim as u32) <= MAX_SITES { 2 * n } else { n / 2 };
        let other_grid = make_grid(self.grid.dim, other, self.grid.length)?;
        let other_op = OperatorMatrix::build(self.kind, &other_grid, &self.potentials)?;
        self.disc_tolerance = (self.min_eigenvalue() - other_op.min_eigenvalue()).abs().max(1e-12);
        Ok(self.disc_tolerance)
    }

    pub fn export(&self, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
        export_matrix(self, prefix)
    }
}

pub fn build_h1(grid: &GridSpec, pot: &PotentialSpec) -> Result<OperatorMatrix> {
    OperatorMatrix::build(OperatorKind::H1, grid, pot)
}

pub fn build_h2(grid: &GridSpec, pot: &PotentialSpec) -> Result<OperatorMatrix> {
    OperatorMatrix::build(OperatorKind::H2, grid, pot)
}

pub fn build_h3(grid: &GridSpec, pot: &PotentialSpec) -> Result<OperatorMatrix> {
    OperatorMatrix::build(OperatorKind::H3, grid, pot)
}

pub fn build_hnr(grid: &GridSpec, pot: &PotentialSpec) -> Result<OperatorMatrix> {
    OperatorMatrix::build(OperatorKind::HNR, grid, pot)
}

pub fn field_to_vector(g: &Field) -> DVector<Complex64> {
    DVector::from_column_slice(&g.values)
}

pub fn apply_matrix(m: &CMatrix, g: &Field) -> Field {
    let v = m * field_to_vector(g);
    Field { grid: g.grid, values: v.iter().cloned().collect() }
}

/// (e^{−t[H − m·flag]} g) on the grid.
pub fn semigroup_apply(op: &OperatorMatrix, t: f64, g: &Field, subtract_m: bool) -> Result<Field> {
    if g.grid != op.grid {
        return Err(Error::GridMismatch);
    }
    if !(t >= 0.0) {
        return Err(Error::Argument("semigroup time must be >= 0".into()));
    }
    let shift = if subtract_m { op.potentials.mass } else { 0.0 };
    let u = &op.eigenvectors;
    let mut coeff = u.adjoint() * field_to_vector(g);
    for (k, lam) in op.eigenvalues.iter().enumerate() {
        coeff[k] *= (-t * (lam - shift)).exp();
    }
    let v = u * coeff;
    Ok(Field { grid: g.grid, values: v.iter().cloned().collect() })
}

/// ‖e^{−iφ} H(A+∇φ) e^{iφ} − H(A)‖ in spectral norm, for a raw assembly rule.
pub fn gauge_residual_with(
    kind: OperatorKind,
    grid: &GridSpec,
    pot: &PotentialSpec,
    phi: &GaugeFunction,
    h1_rule: Prescription,
) -> Result<f64> {
    let base = assemble(kind, grid, pot, h1_rule)?;
    let shifted_pot = pot.with_vector(pot.vector.gauge_shift(phi.clone()));
    let shifted = assemble(kind, grid, &shifted_pot, h1_rule)?;
    let phases: Vec<Complex64> = grid
        .points_all()
        .iter()
        .map(|z| Complex64::from_polar(1.0, phi.value(z)))
        .collect();
    let n = grid.sites();
    let conj = CMatrix::from_fn(n, n, |i, j| phases[i].conj() * shifted[(i, j)] * phases[j]);
    Ok(spectral_norm(&(conj - base)))
}

pub fn gauge_residual(kind: OperatorKind, grid: &GridSpec, pot: &PotentialSpec, phi: &GaugeFunction) -> Result<f64> {
    gauge_residual_with(kind, grid, pot, phi, Prescription::Midpoint)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub grid: GridSpec,
    pub kind: OperatorKind,
    pub potentials: PotentialSpec,
    pub rows: usize,
    pub cols: usize,
    /// byte layout of the array file
    pub layout: String,
    pub eigenvalue_count: usize,
    pub sha256: String,
}

const LAYOUT: &str = "little-endian f64; entries row-major as (re, im) pairs, then ascending eigenvalues";

/// Write `<prefix>.bin` and its JSON sidecar `<prefix>.json`.
pub fn export_matrix(op: &OperatorMatrix, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
    let n = op.entries.nrows();
    let mut bytes = Vec::with_capacity(16 * n * n + 8 * n);
    for i in 0..n {
        for j in 0..n {
            let v = op.entries[(i, j)];
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    for l in &op.eigenvalues {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
    let bin = prefix.with_extension("bin");
    let json = prefix.with_extension("json");
    fs::write(&bin, &bytes)?;
    let sidecar = MatrixSidecar {
        grid: op.grid,
        kind: op.kind,
        potentials: op.potentials.clone(),
        rows: n,
        cols: n,
        layout: LAYOUT.to_string(),
        eigenvalue_count: op.eigenvalues.len(),
        sha256: hex_digest(&bytes),
    };
    let mut f = fs::File::create(&json)?;
    f.write_all(serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Io(e.to_string()))?.as_bytes())?;
    Ok((bin, json))
}

/// Read an exported matrix back, verifying the checksum.
pub fn load_matrix(bin: &Path, json: &Path) -> Result<(MatrixSidecar, CMatrix, Vec<f64>)> {
    let sidecar: MatrixSidecar =
        serde_json::from_str(&fs::read_to_string(json)?).map_err(|e| Error::Io(e.to_string()))?;
    let bytes = fs::read(bin)?;
    if hex_digest(&bytes) != sidecar.sha256 {
        return Err(Error::Io("checksum mismatch".into()));
    }
    let n = sidecar.rows;
    if bytes.len() != 16 * n * n + 8 * sidecar.eigenvalue_count {
        return Err(Error::Io("array file has the wrong length".into()));
    }
    let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    let m = CMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        Complex64::new(f(k), f(k + 1))
    });
    let vals = (0..sidecar.eigenvalue_count).map(|k| f(2 * n * n + k)).collect();
    Ok((sidecar, m, vals))
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
