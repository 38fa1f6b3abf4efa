use num_complex::Complex64;
use relkernel_core::chernoff::{
    iterate, pointwise_rate_study, rate_study, step, step_matrix, FitWindow, Norms, StepperKind,
};
use relkernel_core::linalg::spectral_norm;
use relkernel_core::oracle::{apply_matrix, OperatorKind, OperatorMatrix};
use relkernel_core::{make_grid, Field, GridSpec, PotentialSpec, ScalarPotential, VectorPotential};

fn g0(grid: GridSpec) -> Field {
    Field::from_fn(grid, |x| Complex64::new((-(x[0] - 0.3).powi(2) / 2.0).exp(), 0.0))
}

fn powers(max: usize) -> Vec<usize> {
    (0..).map(|k| 1usize << k).take_while(|n| *n <= max).collect()
}

const L2: Norms = Norms { l2_on_g: true, operator: false };
const OP: Norms = Norms { l2_on_g: false, operator: true };

#[test]
fn magnetic_relativistic_products_converge() {
    let grid = make_grid(1, 64, 20.0).unwrap();
    let pot = PotentialSpec::benchmark(1.0);
    let g = g0(grid);
    for kind in [StepperKind::F1, StepperKind::F2] {
        let rep = rate_study(kind, &pot, &grid, 1.0, &powers(128), Some(&g), L2, FitWindow::LastHalf).unwrap();
        let e = rep.primary_errors();
        println!("{kind:?} errors {e:?} slope {:.3}", rep.slope);
        assert!(rep.monotone, "{kind:?} not monotone: {e:?}");
        assert!(*e.last().unwrap() < 1e-3, "{kind:?}");
        assert!(rep.slope <= -0.8);
    }
    let scalar = pot.with_vector(VectorPotential::Zero);
    let rep = rate_study(StepperKind::GScalar, &scalar, &grid, 1.0, &powers(128), Some(&g), L2, FitWindow::LastHalf).unwrap();
    assert!(rep.monotone);
}

#[test]
fn scalar_splitting_rates() {
    let grid = make_grid(1, 64, 20.0).unwrap();
    let pot = PotentialSpec::new(1, 1.0, VectorPotential::Zero, ScalarPotential::Harmonic { omega: 1.0 }).unwrap();
    let ns = [8, 16, 32, 64, 128];
    let plain = rate_study(StepperKind::GScalar, &pot, &grid, 1.0, &ns, None, OP, FitWindow::All).unwrap();
    let sym = rate_study(StepperKind::GScalarSymmetrized, &pot, &grid, 1.0, &ns, None, OP, FitWindow::All).unwrap();
    println!("plain {:.4} sym {:.4}", plain.slope, sym.slope);
    assert!((-1.2..=-0.8).contains(&plain.slope));
    assert!((-2.25..=-1.75).contains(&sym.slope));

    let pairs = [(32, 32), (32, 34), (30, 35), (28, 33), (33, 29)];
    let pw = pointwise_rate_study(StepperKind::GScalarSymmetrized, &pot, &grid, 1.0, &ns, &pairs).unwrap();
    for s in &pw.slopes {
        assert!((-2.25..=-1.75).contains(s), "pointwise slope {s}");
    }
}

#[test]
fn first_order_consistency_at_small_step() {
    // (g − F(τ)g)/τ → (H − m)g, error shrinking with τ
    let grid = make_grid(1, 64, 20.0).unwrap();
    let pot = PotentialSpec::benchmark(1.0);
    let g = g0(grid);
    let cases = [
        (StepperKind::F1, pot.clone()),
        (StepperKind::F2, pot.clone()),
        (StepperKind::SplitH3, pot.clone()),
        (StepperKind::GnrMagnetic, pot.clone()),
        (StepperKind::GScalar, pot.with_vector(VectorPotential::Zero)),
    ];
    for (kind, p) in cases {
        let op = OperatorMatrix::build(kind.oracle_kind(), &grid, &p).unwrap();
        let shift = if kind.subtracts_mass() { p.mass } else { 0.0 };
        let hg = apply_matrix(&op.entries, &g).sub(&g.scale(Complex64::new(shift, 0.0)));
        let err = |tau: f64| {
            let fg = step(kind, &p, tau, &g).unwrap();
            g.sub(&fg).scale(Complex64::new(1.0 / tau, 0.0)).sub(&hg).l2_norm()
        };
        let errs: Vec<f64> = (0..=6).map(|k| err(0.1 / (1u32 << k) as f64)).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{kind:?}: {errs:?}");
        assert!(errs[6] < 0.05 * errs[0], "{kind:?}: {errs:?}");
    }
}

#[test]
fn steps_are_contractive_up_to_mass() {
    let grid = make_grid(1, 64, 20.0).unwrap();
    let pot = PotentialSpec::benchmark(1.0);
    for kind in [StepperKind::F1, StepperKind::F2, StepperKind::GnrMagnetic, StepperKind::SplitH3] {
        for tau in [0.01, 0.1, 1.0] {
            let n = spectral_norm(&step_matrix(kind, &grid, &pot, tau).unwrap());
            assert!(n <= 1.0 + 1e-10, "{kind:?} τ={tau}: {n}");
        }
    }
}

#[test]
fn iterate_matches_report_errors() {
    let grid = make_grid(1, 32, 12.0).unwrap();
    let pot = PotentialSpec::benchmark(1.0);
    let g = g0(grid);
    let rep = rate_study(StepperKind::F2, &pot, &grid, 1.0, &[4], Some(&g), L2, FitWindow::All).unwrap();
    let approx = iterate(StepperKind::F2, &pot, 1.0, 4, &g).unwrap();
    let op = OperatorMatrix::build(OperatorKind::H2, &grid, &pot).unwrap();
    let exact = apply_matrix(&op.semigroup_matrix(1.0, true), &g);
    let direct = approx.sub(&exact).l2_norm();
    assert!((direct - rep.error_l2[0].unwrap()).abs() < 1e-12 * direct.max(1.0));
}

#[test]
fn slope_is_stable_under_grid_refinement() {
    let ns = [8, 16, 32, 64, 128];
    let pot = PotentialSpec::new(1, 1.0, VectorPotential::Zero, ScalarPotential::Harmonic { omega: 1.0 }).unwrap();
    for kind in [StepperKind::GScalar, StepperKind::GScalarSymmetrized] {
        let slope = |n| rate_study(kind, &pot, &make_grid(1, n, 20.0).unwrap(), 1.0, &ns, None, OP, FitWindow::All).unwrap().slope;
        let (s64, s128) = (slope(64), slope(128));
        assert!((s64 - s128).abs() < 0.1, "{kind:?}: {s64} vs {s128}");
    }
}
