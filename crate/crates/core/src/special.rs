//! Relativistic symbol, modified Bessel functions K_ν and Gauss–Legendre rules.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// √(|ξ|²+m²) − m in the cancellation-free form |ξ|²/(√(|ξ|²+m²)+m).
pub fn symbol_value(m: f64, xi: &[f64]) -> f64 {
    symbol_from_sq(m, xi.iter().map(|v| v * v).sum())
}

pub fn symbol_from_sq(m: f64, xi2: f64) -> f64 {
    if xi2 == 0.0 {
        return 0.0;
    }
    xi2 / ((xi2 + m * m).sqrt() + m)
}

/// Orders of K_ν the crate needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselOrder {
    Zero,
    Half,
    One,
    ThreeHalves,
    Two,
    FiveHalves,
}

impl BesselOrder {
    pub fn from_f64(nu: f64) -> Result<Self> {
        let twice = (2.0 * nu).round();
        if (2.0 * nu - twice).abs() > 1e-12 {
            return Err(Error::Argument(format!("unsupported Bessel order {nu}")));
        }
        match twice as i64 {
            0 => Ok(Self::Zero),
            1 => Ok(Self::Half),
            2 => Ok(Self::One),
            3 => Ok(Self::ThreeHalves),
            4 => Ok(Self::Two),
            5 => Ok(Self::FiveHalves),
            _ => Err(Error::Argument(format!("unsupported Bessel order {nu}"))),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Half => 0.5,
            Self::One => 1.0,
            Self::ThreeHalves => 1.5,
            Self::Two => 2.0,
            Self::FiveHalves => 2.5,
        }
    }
}

/// Modified Bessel function of the second kind for ν ∈ {0, 1/2, 1, 3/2, 2, 5/2}.
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    let order = BesselOrder::from_f64(nu)?;
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Argument(format!("K_nu needs z > 0, got {z}")));
    }
    Ok(bessel_k_order(order, z))
}

pub fn bessel_k_order(order: BesselOrder, z: f64) -> f64 {
    match order {
        BesselOrder::Half => k_half(z),
        BesselOrder::ThreeHalves => k_half(z) * (1.0 + 1.0 / z),
        BesselOrder::FiveHalves => k_half(z) * (1.0 + 3.0 / z + 3.0 / (z * z)),
        BesselOrder::Zero => k_integer(0, z),
        BesselOrder::One => k_integer(1, z),
        BesselOrder::Two => k_integer(2, z),
    }
}

fn k_half(z: f64) -> f64 {
    (PI / (2.0 * z)).sqrt() * (-z).exp()
}

const SERIES_MAX: f64 = 2.0;
const ASYMPTOTIC_MIN: f64 = 25.0;

fn k_integer(n: u32, z: f64) -> f64 {
    if z <= SERIES_MAX {
        k_series(n, z)
    } else if z < ASYMPTOTIC_MIN {
        let (k0, k1) = k01_continued_fraction(z);
        match n {
            0 => k0,
            1 => k1,
            _ => k0 + 2.0 / z * k1,
        }
    } else {
        k_asymptotic(n as f64, z)
    }
}

/// Power series (Abramowitz–Stegun 9.6.11) for small z.
fn k_series(n: u32, z: f64) -> f64 {
    let half = 0.5 * z;
    let q = half * half;
    let ln_half = half.ln();
    let nf = n as usize;

    let mut finite = 0.0;
    if nf > 0 {
        let mut fact_nk1 = (1..nf).map(|v| v as f64).product::<f64>(); // (n-1)!
        let mut term_pow = 1.0;
        let mut k_fact = 1.0;
        for k in 0..nf {
            if k > 0 {
                fact_nk1 /= (nf - k) as f64;
                k_fact *= k as f64;
                term_pow *= -q;
            }
            finite += fact_nk1 / k_fact * term_pow;
        }
        finite *= 0.5 * half.powi(-(n as i32));
    }

    // I_n and the digamma series share the factor q^k/(k!(n+k)!)
    let mut coef = 1.0 / (1..=nf).map(|v| v as f64).product::<f64>();
    let mut psi_k1 = -EULER_GAMMA;
    let mut psi_nk1 = -EULER_GAMMA + (1..=nf).map(|v| 1.0 / v as f64).sum::<f64>();
    let mut i_sum = 0.0;
    let mut psi_sum = 0.0;
    for k in 0..200 {
        if k > 0 {
            coef *= q / (k as f64 * (nf + k) as f64);
            psi_k1 += 1.0 / k as f64;
            psi_nk1 += 1.0 / (nf + k) as f64;
        }
        i_sum += coef;
        let t = coef * (psi_k1 + psi_nk1);
        psi_sum += t;
        if coef < 1e-18 * i_sum && k > 2 {
            break;
        }
    }
    let hn = half.powi(n as i32);
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    finite - sign * ln_half * hn * i_sum + sign * 0.5 * hn * psi_sum
}

/// Steed's continued fraction (CF2, Temme's normalisation) for K_0, K_1 at z ≥ 2.
fn k01_continued_fraction(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// Hankel asymptotic expansion, truncated at the smallest term.
fn k_asymptotic(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    k_half(z) * sum
}

/// Bessel J_0 minus one, accurate for small arguments.
pub fn j0_minus_one(z: f64) -> f64 {
    if z.abs() < 1.0 {
        let q = -0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..30 {
            term *= q / (k as f64 * k as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        libm::j0(z) - 1.0
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Shared 16-point rule.
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// ∫_a^b f with one 16-point Gauss–Legendre panel.
pub fn gl16_panel(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gl16();
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    x.iter().zip(w).map(|(xi, wi)| wi * f(c + r * xi)).sum::<f64>() * r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_examples() {
        assert_eq!(symbol_value(1.0, &[0.0]), 0.0);
        assert!((symbol_value(1.0, &[1.0]) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((symbol_value(0.0, &[3.0]) - 3.0).abs() < 1e-15);
        assert_eq!(symbol_value(0.0, &[0.0, 0.0]), 0.0);
        // tiny |ξ| relative to m: ≈ ξ²/(2m)
        let s = symbol_value(1e4, &[1e-6]);
        assert!((s / 5e-17 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bessel_rejects_bad_input() {
        assert!(bessel_k(1.0, 0.0).is_err());
        assert!(bessel_k(1.0, -1.0).is_err());
        assert!(bessel_k(3.0, 1.0).is_err());
        assert!(bessel_k(0.7, 1.0).is_err());
    }

    #[test]
    fn frozen_reference_values() {
        // 30-digit reference values
        let cases = [
            (1.0, 1.0, 0.601907230197234574737540001536),
            (0.0, 1.0, 0.421024438240708333335627379213),
            (2.0, 1.0, 1.62483889863517748281070738228),
            (1.0, 0.5, 1.65644112000330089369644540317),
            (1.0, 3.0, 0.0401564311281941843767057801527),
            (1.0, 10.0, 1.86487734538255845968168581224e-5),
            (2.0, 5.0, 5.30894371222345995808126974247e-3),
            (0.0, 30.0, 2.13247749646305637116689606297e-14),
        ];
        for (nu, z, want) in cases {
            let got = bessel_k(nu, z).unwrap();
            assert!(((got - want) / want).abs() < 1e-13, "K_{nu}({z}) = {got}, want {want}");
        }
    }

    #[test]
    fn seams_agree() {
        for n in 0..3u32 {
            for seam in [SERIES_MAX, ASYMPTOTIC_MIN] {
                let (lo, hi) = if seam == SERIES_MAX {
                    (k_series(n, seam), {
                        let (k0, k1) = k01_continued_fraction(seam);
                        [k0, k1, k0 + 2.0 / seam * k1][n as usize]
                    })
                } else {
                    let (k0, k1) = k01_continued_fraction(seam);
                    ([k0, k1, k0 + 2.0 / seam * k1][n as usize], k_asymptotic(n as f64, seam))
                };
                assert!(((lo - hi) / hi).abs() < 1e-12, "order {n} seam {seam}: {lo} vs {hi}");
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m18: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((m18 - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn j0_minus_one_matches_libm_away_from_zero() {
        for z in [0.5, 0.999, 1.0, 2.0] {
            assert!((j0_minus_one(z) - (libm::j0(z) - 1.0)).abs() < 1e-14);
        }
        assert!(((j0_minus_one(1e-5) + 2.5e-11) / 2.5e-11).abs() < 1e-10);
    }
}
