use std::f64::consts::PI;

use num_complex::Complex64;
use relkernel_core::propagators::{
    apply_free_semigroup, apply_heat_semigroup, free_relativistic_kernel, heat_kernel, poisson_kernel,
    relativistic_kernel_1d, wrapped_poisson_kernel,
};
use relkernel_core::{make_grid, Field};

#[test]
fn kernels_carry_unit_mass() {
    for d in [1, 2] {
        let grid = make_grid(d, 64, 16.0).unwrap();
        for m in [0.0, 0.5, 1.0] {
            for t in [0.1, 1.0, 3.0] {
                let k = free_relativistic_kernel(&grid, m, t).unwrap();
                assert!((k.mass() - 1.0).abs() < 1e-8);
            }
        }
        assert!((heat_kernel(&grid, 0.7).unwrap().mass() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn massless_kernel_is_poisson() {
    let t = 0.1;
    let length = 200.0 * t;
    let grid = make_grid(1, 4096, length).unwrap();
    let k = free_relativistic_kernel(&grid, 0.0, t).unwrap();
    let h = grid.spacing();
    for off in [0i64, 1, -3, 10, 50] {
        let x = off as f64 * h;
        let got = k.at_offset(&[off]);
        assert!((got - wrapped_poisson_kernel(t, x, length)).abs() < 1e-6, "offset {off}");
        // on ℝ the images add at most πt/(3L²)
        let images = PI * t / (3.0 * length * length);
        assert!((got - poisson_kernel(t, x)).abs() < images + 1e-6);
    }
    assert!((k.at_offset(&[0]) - 1.0 / (PI * t)).abs() < PI * t / (3.0 * length * length) + 1e-6);
}

/// ∫₀^∞ (2πT)^{−1/2} e^{−x²/2T} · IG(T; t/m, t²) dT by trapezoid in log T.
fn subordination_integral(m: f64, t: f64, x: f64) -> f64 {
    let (mu, lam) = (t / m, t * t);
    let f = |u: f64| {
        let s = u.exp();
        let heat = (-x * x / (2.0 * s)).exp() / (2.0 * PI * s).sqrt();
        let ig = (lam / (2.0 * PI * s.powi(3))).sqrt() * (-lam * (s - mu).powi(2) / (2.0 * mu * mu * s)).exp();
        heat * ig * s
    };
    let (a, b, n) = (-40.0, 8.0, 200_000);
    let h = (b - a) / n as f64;
    (0..=n).map(|k| f(a + k as f64 * h) * if k == 0 || k == n { 0.5 } else { 1.0 }).sum::<f64>() * h
}

#[test]
fn massive_kernel_matches_subordination() {
    let (m, t) = (1.0, 0.5);
    let grid = make_grid(1, 2048, 40.0).unwrap();
    let k = free_relativistic_kernel(&grid, m, t).unwrap();
    let h = grid.spacing();
    for off in [0i64, 4, -16, 40, 128] {
        let x = off as f64 * h;
        let closed = relativistic_kernel_1d(m, t, x);
        let quad = subordination_integral(m, t, x);
        assert!((closed - quad).abs() < 1e-6, "x={x}: {closed} vs {quad}");
        assert!((k.at_offset(&[off]) - closed).abs() < 1e-6, "grid x={x}");
    }
}

#[test]
fn semigroup_composition() {
    let grid = make_grid(2, 32, 10.0).unwrap();
    let f = Field::from_fn(grid, |x| Complex64::new((-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), x[0].sin() * 0.1));
    for m in [0.0, 1.0] {
        let a = apply_free_semigroup(&apply_free_semigroup(&f, m, 0.3), m, 0.45);
        let b = apply_free_semigroup(&f, m, 0.75);
        assert!(a.sub(&b).max_abs() < 1e-12);
    }
    let a = apply_heat_semigroup(&apply_heat_semigroup(&f, 0.2), 0.5);
    assert!(a.sub(&apply_heat_semigroup(&f, 0.7)).max_abs() < 1e-12);
}

#[test]
fn heat_kernel_second_moment_is_time() {
    let grid = make_grid(1, 512, 40.0).unwrap();
    for t in [0.5, 1.0, 2.0] {
        assert!((heat_kernel(&grid, t).unwrap().second_moment() - t).abs() < 1e-8);
    }
}

#[test]
fn kernels_are_nonnegative() {
    let grids = [make_grid(1, 4096, 10.0).unwrap(), make_grid(2, 1024, 10.0).unwrap()];
    for grid in grids {
        for m in [0.0, 1.0] {
            for t in [0.1, 1.0] {
                let k = free_relativistic_kernel(&grid, m, t).unwrap();
                assert!(k.min_value() >= -1e-12, "d={} m={m} t={t}: {}", grid.dim, k.min_value());
            }
        }
    }
}

#[test]
fn kernels_are_even() {
    let grid = make_grid(1, 128, 12.0).unwrap();
    let k = free_relativistic_kernel(&grid, 1.0, 0.4).unwrap();
    for off in 1..64i64 {
        assert!((k.at_offset(&[off]) - k.at_offset(&[-off])).abs() < 1e-14);
    }
}
