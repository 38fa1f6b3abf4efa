//! Free relativistic and heat semigroups on the torus, diagonal in Fourier space.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{fft_nd, Field, GridSpec};
use crate::special::{bessel_k_order, symbol_from_sq, BesselOrder};

/// Translation-invariant kernel row k(t, x_j − 0) as a density, indexed by displacement slot.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOnGrid {
    pub grid: GridSpec,
    pub t: f64,
    pub values: Vec<f64>,
}

impl KernelOnGrid {
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Value at a displacement given by signed per-axis site offsets.
    pub fn at_offset(&self, offset: &[i64]) -> f64 {
        let n = self.grid.points as i64;
        let idx: Vec<usize> = offset.iter().map(|o| o.rem_euclid(n) as usize).collect();
        self.values[self.grid.flat_index(&idx)]
    }

    /// ∫ x₀² k(x) dx with minimal-image displacements.
    pub fn second_moment(&self) -> f64 {
        let h = self.grid.cell_volume();
        self.values
            .iter()
            .enumerate()
            .map(|(s, v)| {
                let x = self.grid.displacement_coord(s);
                x[0] * x[0] * v * h
            })
            .sum()
    }
}

/// Inverse DFT of a Fourier multiplier: entries of the circulant matrix
/// M[i,j] = row[displacement_index(i,j)] representing the multiplier on the grid.
pub fn circulant_row(grid: &GridSpec, multiplier: impl Fn(&[f64]) -> Complex64) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = (0..grid.sites()).map(|s| multiplier(&grid.wave_vector(s))).collect();
    fft_nd(grid, &mut c, true);
    c
}

fn kernel_from_multiplier(grid: &GridSpec, t: f64, mult: impl Fn(f64) -> f64) -> Result<KernelOnGrid> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Argument(format!("kernel time must be positive, got {t}")));
    }
    let row = circulant_row(grid, |xi| {
        let xi2: f64 = xi.iter().map(|v| v * v).sum();
        Complex64::new(mult(xi2), 0.0)
    });
    let h = grid.cell_volume();
    Ok(KernelOnGrid { grid: *grid, t, values: row.iter().map(|v| v.re / h).collect() })
}

/// Kernel of e^{−t[√(−Δ+m²)−m]} on the torus.
pub fn free_relativistic_kernel(grid: &GridSpec, m: f64, t: f64) -> Result<KernelOnGrid> {
    kernel_from_multiplier(grid, t, |xi2| (-t * symbol_from_sq(m, xi2)).exp())
}

/// Kernel of e^{tΔ/2} on the torus.
pub fn heat_kernel(grid: &GridSpec, t: f64) -> Result<KernelOnGrid> {
    kernel_from_multiplier(grid, t, |xi2| (-0.5 * t * xi2).exp())
}

fn apply_multiplier(field: &Field, mult: impl Fn(f64) -> f64) -> Field {
    let g = field.grid;
    let mut c = field.dft();
    for (s, v) in c.iter_mut().enumerate() {
        let xi2: f64 = g.wave_vector(s).iter().map(|x| x * x).sum();
        *v *= mult(xi2);
    }
    Field::from_dft(g, c)
}

pub fn apply_free_semigroup(field: &Field, m: f64, t: f64) -> Field {
    apply_multiplier(field, |xi2| (-t * symbol_from_sq(m, xi2)).exp())
}

pub fn apply_heat_semigroup(field: &Field, t: f64) -> Field {
    apply_multiplier(field, |xi2| (-0.5 * t * xi2).exp())
}

/// Massless d=1 kernel on ℝ: t/(π(t²+x²)).
pub fn poisson_kernel(t: f64, x: f64) -> f64 {
    t / (PI * (t * t + x * x))
}

/// Poisson kernel summed over all periodic images of a box of length L.
pub fn wrapped_poisson_kernel(t: f64, x: f64, length: f64) -> f64 {
    let a = 2.0 * PI * t / length;
    let b = 2.0 * PI * x / length;
    a.sinh() / (length * (a.cosh() - b.cos()))
}

/// d=1 kernel of e^{−t[√(−Δ+m²)−m]} on ℝ for m > 0:
/// (mt/π) e^{mt} K₁(m√(t²+x²)) / √(t²+x²).
pub fn relativistic_kernel_1d(m: f64, t: f64, x: f64) -> f64 {
    let r = (t * t + x * x).sqrt();
    if m == 0.0 {
        return poisson_kernel(t, x);
    }
    m * t / PI * (m * t).exp() * bessel_k_order(BesselOrder::One, m * r) / r
}
