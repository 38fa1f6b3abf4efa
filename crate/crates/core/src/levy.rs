//! Lévy measure of the relativistic symbol, Lévy–Khinchin verification,
//! and sampling of the subordinator T(·) and the relativistic process X(·).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{bessel_k_order, gl16_panel, j0_minus_one, symbol_value, BesselOrder};

/// Jump density n(y) of the process generated by √(−Δ+m²) − m in ℝ^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyDensity {
    pub mass: f64,
    pub dim: usize,
}

impl LevyDensity {
    pub fn new(mass: f64, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Argument(format!("dimension {dim} not in 1..=3")));
        }
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(Error::Argument(format!("mass must be >= 0, got {mass}")));
        }
        Ok(Self { mass, dim })
    }

    /// Density as a function of r = |y| > 0.
    pub fn radial(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        let p = 0.5 * (d + 1.0);
        if self.mass == 0.0 {
            PI.powf(-p) * libm::tgamma(p) * r.powf(-(d + 1.0))
        } else {
            let m = self.mass;
            let z = m * r;
            let order = match self.dim {
                1 => BesselOrder::One,
                2 => BesselOrder::ThreeHalves,
                _ => BesselOrder::Two,
            };
            2.0 * (2.0 * PI).powf(-p) * m.powf(d + 1.0) * z.powf(-p) * bessel_k_order(order, z)
        }
    }

    /// Surface area of the unit sphere S^{d−1}.
    fn sphere(&self) -> f64 {
        match self.dim {
            1 => 2.0,
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        }
    }

    /// ∫_{|y|>R} n(y) dy.
    pub fn tail_mass(&self, r_outer: f64) -> f64 {
        if self.mass == 0.0 {
            let p = 0.5 * (self.dim as f64 + 1.0);
            return self.sphere() * PI.powf(-p) * libm::tgamma(p) / r_outer;
        }
        let width = 1.0 / self.mass;
        let d = self.dim as i32;
        let mut acc = 0.0;
        let mut a = r_outer;
        for _ in 0..60 {
            let piece = gl16_panel(a, a + width, |r| self.radial(r) * r.powi(d - 1));
            acc += piece;
            a += width;
            if piece <= 1e-18 * acc {
                break;
            }
        }
        self.sphere() * acc
    }
}

pub fn levy_density(m: f64, d: usize, y: &[f64]) -> Result<f64> {
    let dens = LevyDensity::new(m, d)?;
    if y.len() != d {
        return Err(Error::Argument("point dimension differs from d".into()));
    }
    let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(Error::Argument("Lévy density is singular at y = 0".into()));
    }
    Ok(dens.radial(r))
}

/// How the region |y| > R_outer is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OuterTail {
    /// Integrate over the annulus only.
    Truncate,
    /// Also add the far field ∫_{|y|>R}(e^{iy·ξ} − 1) n(y)dy: the mass term exactly,
    /// the oscillatory term by its large-|ξ|R expansion (see [`oscillatory_tail`]).
    FarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyKhinchinCheck {
    pub symbol: f64,
    /// ∫ (e^{iy·ξ} − 1 − iξ·y 1_{|y|<1}) n(y) dy over the truncated region
    pub integral: f64,
    pub residual: f64,
}

/// Residual |(√(ξ²+m²) − m) + ∫(e^{iy·ξ} − 1 − iξ·y 1_{|y|<1}) n(y)dy| with the
/// integral restricted to r_inner < |y| < r_outer (plus the far-field term if requested).
pub fn verify_levy_khinchin(
    m: f64,
    d: usize,
    xi: &[f64],
    r_inner: f64,
    r_outer: f64,
    tail: OuterTail,
) -> Result<LevyKhinchinCheck> {
    let dens = LevyDensity::new(m, d)?;
    if xi.len() != d {
        return Err(Error::Argument("ξ dimension differs from d".into()));
    }
    if !(r_inner > 0.0 && r_inner < 1.0 && r_outer > 1.0) {
        return Err(Error::Argument("need 0 < r_inner < 1 < r_outer".into()));
    }
    let symbol = symbol_value(m, xi);
    let k = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if k == 0.0 {
        return Ok(LevyKhinchinCheck { symbol, integral: 0.0, residual: 0.0 });
    }
    // angular average of e^{iρξ·ω} − 1 over the sphere, times its area
    let angular = |u: f64| -> f64 {
        match d {
            1 => -4.0 * (0.5 * u).sin().powi(2),
            2 => 2.0 * PI * j0_minus_one(u),
            _ => {
                let v = if u < 0.1 {
                    let u2 = u * u;
                    -u2 / 6.0 + u2 * u2 / 120.0 - u2 * u2 * u2 / 5040.0
                } else {
                    u.sin() / u - 1.0
                };
                4.0 * PI * v
            }
        }
    };
    let di = d as i32;
    let radial = |r: f64| angular(r * k) * dens.radial(r) * r.powi(di - 1);

    // [r_inner, min(1, r_outer)] in log variables
    let mut integral = 0.0;
    let lo = r_inner.ln();
    let hi = r_outer.min(1.0).ln();
    let panels = ((hi - lo) / 0.25).ceil().max(1.0) as usize;
    let du = (hi - lo) / panels as f64;
    for p in 0..panels {
        let a = lo + p as f64 * du;
        integral += gl16_panel(a, a + du, |u| {
            let r = u.exp();
            radial(r) * r
        });
    }
    // [1, r_outer]: panels no wider than a quarter period
    let width = (0.5f64).min(0.5 * PI / k);
    let mut a = 1.0;
    while a < r_outer {
        let b = (a + width).min(r_outer);
        if dens.radial(a) == 0.0 {
            break;
        }
        integral += gl16_panel(a, b, radial);
        a = b;
    }
    if tail == OuterTail::FarField {
        integral += oscillatory_tail(m, d, k, r_outer) - dens.tail_mass(r_outer);
    }
    if !integral.is_finite() {
        return Err(Error::Quadrature { achieved: f64::NAN });
    }
    Ok(LevyKhinchinCheck { symbol, integral, residual: (symbol + integral).abs() })
}

/// ∫_{|y|>R} e^{iy·ξ} n(y) dy for |ξ| = k, from the Hankel expansion of the
/// angular average and repeated integration by parts of ∫_R^∞ e^{ikr} r^{−p} dr.
/// Massless case only; returns 0 for m > 0 (the far field there carries a
/// factor e^{−mR}) and when kR < 20, where the expansion is not usable.
pub fn oscillatory_tail(m: f64, d: usize, k: f64, r_outer: f64) -> f64 {
    let kr = k * r_outer;
    if kr < 20.0 || m > 0.0 {
        return 0.0;
    }
    let i = Complex64::i();
    // integrand = Re Σ c_j e^{ikr} r^{−p_j}
    let terms: Vec<(Complex64, f64)> = match d {
        // n = 1/(πr²), angular part 2cos(kr)
        1 => vec![(Complex64::new(2.0 / PI, 0.0), 2.0)],
        // n r = 1/(2πr²), angular part 2πJ0(kr)
        2 => {
            let a = Complex64::from_polar((2.0 / (PI * k)).sqrt(), -0.25 * PI);
            vec![
                (a, 2.5),
                (a * (-i / (8.0 * k)), 3.5),
                (a * (-9.0 / (128.0 * k * k)), 4.5),
                (a * (i * 75.0 / (1024.0 * k.powi(3))), 5.5),
            ]
        }
        // n r² = 1/(π²r²), angular part 4π sin(kr)/(kr)
        _ => vec![(-i * 4.0 / (PI * k), 3.0)],
    };
    let phase = Complex64::from_polar(1.0, kr);
    let mut total = Complex64::new(0.0, 0.0);
    for (c, p) in terms {
        // ∫_R^∞ e^{ikr} r^{−p} dr = −e^{ikR} Σ_j (p)_j R^{−p−j} / (ik)^{j+1}
        let mut term = -phase * r_outer.powf(-p) / (i * k);
        let mut sum = term;
        for j in 0..12 {
            let next = term * (p + j as f64) / (r_outer * i * k);
            if next.norm() >= term.norm() {
                break;
            }
            sum += next;
            term = next;
        }
        total += c * sum;
    }
    total.re
}

/// Counter-based random stream: (seed, stream) fully determine the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

/// One draw of T(Δt): first passage of B(s) + ms to level Δt.
/// Inverse Gaussian (mean Δt/m, shape Δt²) for m > 0, Δt²/Z² for m = 0.
pub fn sample_subordinator_increment<R: Rng + ?Sized>(m: f64, dt: f64, rng: &mut R) -> f64 {
    if m > 0.0 {
        InverseGaussian::new(dt / m, dt * dt)
            .expect("positive mean and shape")
            .sample(rng)
    } else {
        let z: f64 = rng.sample(StandardNormal);
        dt * dt / (z * z)
    }
}

/// Writes √T(Δt)·Z into `out`, a draw of X(Δt) − X(0).
pub fn relativistic_increment_into<R: Rng + ?Sized>(m: f64, dt: f64, rng: &mut R, out: &mut [f64]) {
    let s = sample_subordinator_increment(m, dt, rng).sqrt();
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = s * z;
    }
}

pub fn sample_relativistic_increment<R: Rng + ?Sized>(m: f64, d: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; d];
    relativistic_increment_into(m, dt, rng, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn sample_subordinator_path<R: Rng + ?Sized>(m: f64, times: &[f64], rng: &mut R) -> Result<SubordinatorPath> {
    if times.first() != Some(&0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("time grid must start at 0 and increase strictly".into()));
    }
    let mut values = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    values.push(0.0);
    for w in times.windows(2) {
        acc += sample_subordinator_increment(m, w[1] - w[0], rng);
        values.push(acc);
    }
    Ok(SubordinatorPath { times: times.to_vec(), values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSkeleton {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
}

impl PathSkeleton {
    pub fn endpoint(&self) -> &[f64] {
        self.positions.last().expect("skeleton has at least one point")
    }
}

pub fn sample_path_skeleton<R: Rng + ?Sized>(
    m: f64,
    x: &[f64],
    t: f64,
    n: usize,
    rng: &mut R,
) -> Result<PathSkeleton> {
    if n == 0 || !(t > 0.0) {
        return Err(Error::Argument("need n >= 1 and t > 0".into()));
    }
    let dt = t / n as f64;
    let mut positions = vec![x.to_vec()];
    let mut inc = vec![0.0; x.len()];
    for _ in 0..n {
        relativistic_increment_into(m, dt, rng, &mut inc);
        let last = positions.last().unwrap();
        let next = last.iter().zip(&inc).map(|(a, b)| a + b).collect();
        positions.push(next);
    }
    let times = (0..=n).map(|j| j as f64 * dt).collect();
    Ok(PathSkeleton { times, positions })
}
