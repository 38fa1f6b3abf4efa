//! Periodic torus grids and complex grid functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Torus [-L/2, L/2)^d sampled with N points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub points: usize,
    pub length: f64,
}

pub fn make_grid(dim: usize, points: usize, length: f64) -> Result<GridSpec> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Grid(format!("dimension {dim} not in 1..=3")));
    }
    if points < 8 || !points.is_power_of_two() {
        return Err(Error::Grid(format!(
            "points per axis must be a power of two >= 8, got {points}"
        )));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Grid(format!("box length must be positive, got {length}")));
    }
    Ok(GridSpec { dim, points, length })
}

impl GridSpec {
    pub fn sites(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    /// Signed frequency index k in -N/2..N/2 for FFT slot j.
    pub fn signed_index(&self, j: usize) -> i64 {
        let n = self.points as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Angular frequency 2πk/L of FFT slot j.
    pub fn frequency(&self, j: usize) -> f64 {
        2.0 * PI * self.signed_index(j) as f64 / self.length
    }

    /// Per-axis frequencies in FFT order.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.frequency(j)).collect()
    }

    /// Row-major multi-index of a flat site index (axis 0 slowest).
    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.dim)
            .fold(0, |acc, &i| acc * self.points + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let idx = self.multi_index(flat);
        (0..self.dim).map(|a| self.coord(idx[a])).collect()
    }

    pub fn points_all(&self) -> Vec<Vec<f64>> {
        (0..self.sites()).map(|s| self.point(s)).collect()
    }

    /// Frequency vector of a flat index in Fourier layout.
    pub fn wave_vector(&self, flat: usize) -> Vec<f64> {
        let idx = self.multi_index(flat);
        (0..self.dim).map(|a| self.frequency(idx[a])).collect()
    }

    /// Flat index of the periodic displacement i - j (per axis mod N).
    pub fn displacement_index(&self, i: usize, j: usize) -> usize {
        let a = self.multi_index(i);
        let b = self.multi_index(j);
        let n = self.points;
        let mut flat = 0;
        for ax in 0..self.dim {
            flat = flat * n + (a[ax] + n - b[ax]) % n;
        }
        flat
    }

    /// Minimal-image coordinate of a displacement slot.
    pub fn displacement_coord(&self, flat: usize) -> Vec<f64> {
        let idx = self.multi_index(flat);
        (0..self.dim)
            .map(|a| self.signed_index(idx[a]) as f64 * self.spacing())
            .collect()
    }
}

/// In-place multi-dimensional DFT over the row-major layout.
/// Forward is unnormalized; inverse carries the 1/N^d factor.
pub fn fft_nd(grid: &GridSpec, data: &mut [Complex64], inverse: bool) {
    let n = grid.points;
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let total = grid.sites();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        for start in 0..total {
            // first element of a line along `axis` has zero index on that axis
            if (start / stride) % n != 0 {
                continue;
            }
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[start + k * stride];
            }
            fft.process(&mut line);
            for (k, v) in line.iter().enumerate() {
                data[start + k * stride] = *v;
            }
        }
    }
    if inverse {
        let s = 1.0 / total as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Complex grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.sites() {
            return Err(Error::Argument(format!(
                "field has {} values, grid has {} sites",
                values.len(),
                grid.sites()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Argument("non-finite field entry".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.sites()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.sites()).map(|s| f(&grid.point(s))).collect();
        Self { grid, values }
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &Field) -> Field {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Field { grid: self.grid, values }
    }

    pub fn scale(&self, c: Complex64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Unnormalized forward DFT coefficients.
    pub fn dft(&self) -> Vec<Complex64> {
        let mut d = self.values.clone();
        fft_nd(&self.grid, &mut d, false);
        d
    }

    pub fn from_dft(grid: GridSpec, mut coeffs: Vec<Complex64>) -> Field {
        fft_nd(&grid, &mut coeffs, true);
        Field { grid, values: coeffs }
    }

    /// Trigonometric interpolant evaluated off-grid. The Nyquist mode is
    /// split symmetrically so real data interpolates to real values.
    pub fn spectral_eval(&self, x: &[f64]) -> Complex64 {
        let g = &self.grid;
        let n = g.points;
        let coeffs = self.dft();
        let mut w = vec![vec![Complex64::new(0.0, 0.0); n]; g.dim];
        for a in 0..g.dim {
            let s = x[a] + 0.5 * g.length;
            for (j, wj) in w[a].iter_mut().enumerate() {
                let xi = g.frequency(j);
                *wj = if j == n / 2 {
                    Complex64::new((xi * s).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, xi * s)
                };
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (flat, c) in coeffs.iter().enumerate() {
            let idx = g.multi_index(flat);
            let mut f = *c;
            for a in 0..g.dim {
                f *= w[a][idx[a]];
            }
            acc += f;
        }
        acc / g.sites() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies_on_two_pi_box() {
        let g = make_grid(1, 8, 2.0 * PI).unwrap();
        let mut f = g.frequencies();
        f.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = [-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        for (a, b) in f.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_dim_sites_and_spacing() {
        let g = make_grid(2, 16, 10.0).unwrap();
        assert_eq!(g.sites(), 256);
        assert_eq!(g.spacing(), 0.625);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(make_grid(1, 7, 1.0).is_err());
        assert!(make_grid(4, 8, 1.0).is_err());
        assert!(make_grid(1, 4, 1.0).is_err());
        assert!(make_grid(1, 8, 0.0).is_err());
    }

    #[test]
    fn flat_index_round_trip() {
        let g = make_grid(3, 8, 1.0).unwrap();
        for s in [0, 1, 7, 8, 63, 64, 511] {
            assert_eq!(g.flat_index(&g.multi_index(s)), s);
        }
    }

    #[test]
    fn dft_of_mode_is_single_spike() {
        let g = make_grid(2, 8, 3.0).unwrap();
        let f = Field::from_fn(g, |x| {
            Complex64::from_polar(1.0, g.frequency(2) * x[0] + g.frequency(7) * x[1])
        });
        let c = f.dft();
        let peak = g.flat_index(&[2, 7]);
        for (i, v) in c.iter().enumerate() {
            if i == peak {
                assert!((v.norm() - 64.0).abs() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn spectral_eval_reproduces_band_limited() {
        let g = make_grid(1, 16, 8.0).unwrap();
        let xi = g.frequency(3);
        let f = Field::from_fn(g, |x| Complex64::new((xi * x[0]).cos(), 0.0));
        for x in [-1.234, 0.1, 3.3] {
            let v = f.spectral_eval(&[x]);
            assert!((v.re - (xi * x).cos()).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }
}
