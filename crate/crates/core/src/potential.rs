//! Closed-form vector and scalar potential presets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::special::gl16;

/// Gauge function φ; `VectorPotential::Gradient` uses A = ∇φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GaugeFunction {
    /// φ = ½ zᵀMz, so ∇φ = Mz is a linear potential.
    Quadratic { matrix: Vec<f64> },
    /// φ = a exp(−|z−c|²/2w²)
    Gaussian { center: Vec<f64>, width: f64, amplitude: f64 },
    /// φ = a s³ exp(−|z−c|²/2w²), s = (z₀−c₀)/w
    CubicBump { center: Vec<f64>, width: f64, amplitude: f64 },
}

impl GaugeFunction {
    pub fn value(&self, z: &[f64]) -> f64 {
        match self {
            Self::Quadratic { matrix } => {
                let d = z.len();
                let mut s = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        s += z[i] * matrix[i * d + j] * z[j];
                    }
                }
                0.5 * s
            }
            Self::Gaussian { center, width, amplitude } => {
                amplitude * gaussian(z, center, *width)
            }
            Self::CubicBump { center, width, amplitude } => {
                let s = (z[0] - center[0]) / width;
                amplitude * s * s * s * gaussian(z, center, *width)
            }
        }
    }

    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let d = z.len();
        match self {
            Self::Quadratic { matrix } => mat_vec(matrix, z),
            Self::Gaussian { center, width, amplitude } => {
                let e = amplitude * gaussian(z, center, *width) / (width * width);
                (0..d).map(|a| -(z[a] - center[a]) * e).collect()
            }
            Self::CubicBump { center, width, amplitude } => {
                let w = *width;
                let s = (z[0] - center[0]) / w;
                let e = amplitude * gaussian(z, center, w);
                (0..d)
                    .map(|a| {
                        let radial = -s * s * s * (z[a] - center[a]) / (w * w);
                        if a == 0 {
                            e * (3.0 * s * s / w + radial)
                        } else {
                            e * radial
                        }
                    })
                    .collect()
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::Quadratic { matrix } => check_symmetric(matrix, dim),
            Self::Gaussian { center, width, .. } | Self::CubicBump { center, width, .. } => {
                check_center_width(center, *width, dim)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VectorPotential {
    Zero,
    /// A(z) = Ȧz with Ȧ real symmetric, row-major d×d.
    Linear { matrix: Vec<f64> },
    /// A(z) = a exp(−|z−c|²/2w²), a ∈ ℝ^d.
    Bump { center: Vec<f64>, width: f64, amplitude: Vec<f64> },
    Gradient { phi: GaugeFunction },
    /// base + ∇φ
    GaugeShifted { base: Box<VectorPotential>, phi: GaugeFunction },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarPotential {
    Zero,
    Constant { value: f64 },
    /// V = ω²|z|²/2
    Harmonic { omega: f64 },
    /// V = a exp(−|z−c|²/2w²)
    Bump { center: Vec<f64>, width: f64, amplitude: f64 },
}

/// Where the vector potential is read inside a Peierls phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prescription {
    Midpoint,
    LineIntegral,
    /// A(x) at the left endpoint; not a valid quantization, kept as a mutation canary.
    LeftEndpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub dim: usize,
    pub mass: f64,
    pub vector: VectorPotential,
    pub scalar: ScalarPotential,
}

impl PotentialSpec {
    pub fn new(dim: usize, mass: f64, vector: VectorPotential, scalar: ScalarPotential) -> Result<Self> {
        let p = Self { dim, mass, vector, scalar };
        p.validate()?;
        Ok(p)
    }

    pub fn free(dim: usize, mass: f64) -> Self {
        Self { dim, mass, vector: VectorPotential::Zero, scalar: ScalarPotential::Zero }
    }

    /// d = 1 workhorse: bump A (amplitude 1, width 1, centre 0.5) with harmonic V (ω = 1).
    pub fn benchmark(mass: f64) -> Self {
        Self {
            dim: 1,
            mass,
            vector: VectorPotential::Bump { center: vec![0.5], width: 1.0, amplitude: vec![1.0] },
            scalar: ScalarPotential::Harmonic { omega: 1.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::Argument(format!("dimension {} not in 1..=3", self.dim)));
        }
        if !(self.mass >= 0.0) || !self.mass.is_finite() {
            return Err(Error::Argument(format!("mass must be >= 0, got {}", self.mass)));
        }
        let d = self.dim;
        match &self.vector {
            VectorPotential::Zero => {}
            VectorPotential::Linear { matrix } => check_symmetric(matrix, d)?,
            VectorPotential::Bump { center, width, amplitude } => {
                check_center_width(center, *width, d)?;
                if amplitude.len() != d {
                    return Err(Error::Argument("bump amplitude length differs from dimension".into()));
                }
            }
            VectorPotential::Gradient { phi } => phi.validate(d)?,
            VectorPotential::GaugeShifted { base, phi } => {
                phi.validate(d)?;
                self.with_vector((**base).clone()).validate()?;
            }
        }
        match &self.scalar {
            ScalarPotential::Zero => {}
            ScalarPotential::Constant { value } => finite(*value)?,
            ScalarPotential::Harmonic { omega } => finite(*omega)?,
            ScalarPotential::Bump { center, width, amplitude } => {
                check_center_width(center, *width, d)?;
                finite(*amplitude)?;
            }
        }
        Ok(())
    }

    pub fn with_vector(&self, vector: VectorPotential) -> Self {
        Self { vector, ..self.clone() }
    }

    pub fn with_scalar(&self, scalar: ScalarPotential) -> Self {
        Self { scalar, ..self.clone() }
    }

    pub fn vector_at(&self, z: &[f64]) -> Vec<f64> {
        self.vector.at(z)
    }

    pub fn scalar_at(&self, z: &[f64]) -> f64 {
        self.scalar.at(z)
    }

    /// (y−x)·A_pres(x, y), the exponent of the Peierls phase e^{−i(y−x)·A_pres}.
    pub fn phase_work(&self, pres: Prescription, x: &[f64], y: &[f64]) -> f64 {
        match pres {
            Prescription::Midpoint => {
                let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
                dot_diff(&self.vector.at(&mid), x, y)
            }
            Prescription::LineIntegral => self.vector.work(x, y),
            Prescription::LeftEndpoint => dot_diff(&self.vector.at(x), x, y),
        }
    }
}

impl VectorPotential {
    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    pub fn at(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Self::Zero => vec![0.0; z.len()],
            Self::Linear { matrix } => mat_vec(matrix, z),
            Self::Bump { center, width, amplitude } => {
                let e = gaussian(z, center, *width);
                amplitude.iter().map(|a| a * e).collect()
            }
            Self::Gradient { phi } => phi.gradient(z),
            Self::GaugeShifted { base, phi } => {
                let mut a = base.at(z);
                a.iter_mut().zip(phi.gradient(z)).for_each(|(u, v)| *u += v);
                a
            }
        }
    }

    /// The same potential shifted by a gauge gradient, A + ∇φ.
    pub fn gauge_shift(&self, phi: GaugeFunction) -> VectorPotential {
        Self::GaugeShifted { base: Box::new(self.clone()), phi }
    }

    /// ∫₀¹ A((1−θ)x + θy) dθ along the straight segment from x to y.
    pub fn line_integral(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = x.len();
        match self {
            Self::Zero => vec![0.0; d],
            Self::Linear { matrix } => {
                let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
                mat_vec(matrix, &mid)
            }
            Self::Bump { center, width, amplitude } => {
                let s = gaussian_segment_mean(x, y, center, *width);
                amplitude.iter().map(|a| a * s).collect()
            }
            Self::Gradient { phi } => {
                if let GaugeFunction::Quadratic { matrix } = phi {
                    let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
                    return mat_vec(matrix, &mid);
                }
                let dx = y[0] - x[0];
                if d == 1 && dx.abs() > 1e-3 {
                    vec![(phi.value(y) - phi.value(x)) / dx]
                } else {
                    segment_quadrature(x, y, 4, |z| phi.gradient(z))
                }
            }
            Self::GaugeShifted { base, phi } => {
                let mut a = base.line_integral(x, y);
                let g = Self::Gradient { phi: phi.clone() }.line_integral(x, y);
                a.iter_mut().zip(g).for_each(|(u, v)| *u += v);
                a
            }
        }
    }

    /// Work integral (y−x)·∫₀¹A; exact φ(y)−φ(x) for gradient presets.
    pub fn work(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Gradient { phi } => phi.value(y) - phi.value(x),
            Self::GaugeShifted { base, phi } => base.work(x, y) + phi.value(y) - phi.value(x),
            _ => dot_diff(&self.line_integral(x, y), x, y),
        }
    }
}

impl ScalarPotential {
    pub fn at(&self, z: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { value } => *value,
            Self::Harmonic { omega } => 0.5 * omega * omega * z.iter().map(|v| v * v).sum::<f64>(),
            Self::Bump { center, width, amplitude } => amplitude * gaussian(z, center, *width),
        }
    }

    /// Greatest lower bound of V over ℝ^d.
    pub fn infimum(&self) -> f64 {
        match self {
            Self::Zero | Self::Harmonic { .. } => 0.0,
            Self::Constant { value } => *value,
            Self::Bump { amplitude, .. } => amplitude.min(0.0),
        }
    }
}

/// Pointwise vector and scalar samples at every grid site.
pub fn sample_potential(p: &PotentialSpec, grid: &GridSpec) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if p.dim != grid.dim {
        return Err(Error::GridMismatch);
    }
    let pts = grid.points_all();
    let a = pts.iter().map(|z| p.vector_at(z)).collect();
    let v = pts.iter().map(|z| p.scalar_at(z)).collect();
    Ok((a, v))
}

fn gaussian(z: &[f64], c: &[f64], w: f64) -> f64 {
    let r2: f64 = z.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
    (-r2 / (2.0 * w * w)).exp()
}

/// ∫₀¹ exp(−|x + θ(y−x) − c|²/2w²) dθ, by completing the square.
fn gaussian_segment_mean(x: &[f64], y: &[f64], c: &[f64], w: f64) -> f64 {
    let dvec: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - a).collect();
    let a2: f64 = dvec.iter().map(|v| v * v).sum();
    let a = a2.sqrt();
    if a < 2.0 * w {
        return segment_quadrature(x, y, 1, |z| vec![gaussian(z, c, w)])[0];
    }
    let p: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
    let pd: f64 = p.iter().zip(&dvec).map(|(a, b)| a * b).sum();
    let p2: f64 = p.iter().map(|v| v * v).sum();
    let s = pd / a2;
    let q2 = (p2 - pd * pd / a2).max(0.0);
    let k = a / (std::f64::consts::SQRT_2 * w);
    let (u0, u1) = (k * s, k * (s + 1.0));
    let diff = if u0 > 0.0 {
        libm::erfc(u0) - libm::erfc(u1)
    } else if u1 < 0.0 {
        libm::erfc(-u1) - libm::erfc(-u0)
    } else {
        libm::erf(u1) - libm::erf(u0)
    };
    (-q2 / (2.0 * w * w)).exp() * 0.5 * PI.sqrt() / k * diff
}

/// Composite 16-point Gauss–Legendre average of a vector function along a segment.
fn segment_quadrature(x: &[f64], y: &[f64], panels: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let (nodes, weights) = gl16();
    let mut acc: Vec<f64> = Vec::new();
    let mut z = vec![0.0; x.len()];
    let h = 1.0 / panels as f64;
    for p in 0..panels {
        for (t, wt) in nodes.iter().zip(weights) {
            let theta = h * (p as f64 + 0.5 * (t + 1.0));
            for i in 0..x.len() {
                z[i] = x[i] + theta * (y[i] - x[i]);
            }
            let v = f(&z);
            if acc.is_empty() {
                acc = vec![0.0; v.len()];
            }
            for (a, b) in acc.iter_mut().zip(v) {
                *a += 0.5 * h * wt * b;
            }
        }
    }
    acc
}

fn mat_vec(m: &[f64], z: &[f64]) -> Vec<f64> {
    let d = z.len();
    (0..d).map(|i| (0..d).map(|j| m[i * d + j] * z[j]).sum()).collect()
}

fn dot_diff(a: &[f64], x: &[f64], y: &[f64]) -> f64 {
    a.iter().zip(x.iter().zip(y)).map(|(a, (x, y))| a * (y - x)).sum()
}

fn finite(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument("non-finite potential parameter".into()))
    }
}

fn check_symmetric(m: &[f64], d: usize) -> Result<()> {
    if m.len() != d * d {
        return Err(Error::Argument(format!("matrix needs {} entries", d * d)));
    }
    for i in 0..d {
        for j in 0..d {
            finite(m[i * d + j])?;
            if m[i * d + j] != m[j * d + i] {
                return Err(Error::Argument("matrix must be symmetric".into()));
            }
        }
    }
    Ok(())
}

fn check_center_width(c: &[f64], w: f64, d: usize) -> Result<()> {
    if c.len() != d {
        return Err(Error::Argument("center length differs from dimension".into()));
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::Argument("width must be positive".into()));
    }
    c.iter().try_for_each(|v| finite(*v))
}
