//! Path-integral Monte Carlo for e^{−t[H−m]}g(x) and e^{−tH_NR}g(x).
//!
//! Paths are drawn in fixed-size blocks, block b from `RngStream(seed, b)`, and the
//! block sums are merged in block order, so results do not depend on the thread count.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{relativistic_increment_into, sample_subordinator_increment, RngStream};
use crate::potential::{PotentialSpec, Prescription};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionalKind {
    /// relativistic skeleton, midpoint A and midpoint V
    S1n,
    /// relativistic skeleton, line-integral A and midpoint V
    S2n,
    /// subordinated Brownian motion, Stratonovich A, V on the subordinator clock
    S3Discrete,
    /// Brownian skeleton, Stratonovich A
    FkiNr,
}

impl FunctionalKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::S1n => "H1",
            Self::S2n => "H2",
            Self::S3Discrete => "H3",
            Self::FkiNr => "NR",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Self::S1n, Self::S2n, Self::S3Discrete, Self::FkiNr]
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

pub const DEFAULT_BLOCK_SIZE: usize = 1024;
pub const DEFAULT_K_INNER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub n_paths: usize,
    /// time slices (k_slices for H3)
    pub n_slices: usize,
    /// Brownian sub-steps per subordinator increment (H3 only)
    pub k_inner: usize,
    pub seed: u64,
    pub block_size: usize,
}

impl McParams {
    pub fn new(n_paths: usize, n_slices: usize, seed: u64) -> Self {
        Self { n_paths, n_slices, k_inner: DEFAULT_K_INNER, seed, block_size: DEFAULT_BLOCK_SIZE }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths < 2 || self.n_slices == 0 || self.k_inner == 0 || self.block_size == 0 {
            return Err(Error::Argument(
                "need n_paths >= 2 and n_slices, k_inner, block_size >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub kind: FunctionalKind,
    pub value_re: f64,
    pub value_im: f64,
    pub std_error_re: f64,
    pub std_error_im: f64,
    /// √(se_re² + se_im²)
    pub std_error: f64,
    pub n_paths: usize,
    pub n_slices: usize,
    pub seed: u64,
    pub x: Vec<f64>,
    pub t: f64,
}

impl McEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }

    /// |estimate − reference| in units of the combined standard error.
    pub fn z_score(&self, reference: Complex64) -> f64 {
        (self.value() - reference).norm() / self.std_error
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    s_re: f64,
    s_im: f64,
    q_re: f64,
    q_im: f64,
}

impl Moments {
    fn push(&mut self, v: Complex64) {
        self.s_re += v.re;
        self.s_im += v.im;
        self.q_re += v.re * v.re;
        self.q_im += v.im * v.im;
    }

    fn merge(&mut self, o: &Moments) {
        self.s_re += o.s_re;
        self.s_im += o.s_im;
        self.q_re += o.q_re;
        self.q_im += o.q_im;
    }

    /// (mean, se_re, se_im)
    fn finish(&self, n: usize) -> (Complex64, f64, f64) {
        let nf = n as f64;
        let mean = Complex64::new(self.s_re / nf, self.s_im / nf);
        let var = |q: f64, m: f64| ((q - nf * m * m) / (nf - 1.0)).max(0.0);
        (mean, (var(self.q_re, mean.re) / nf).sqrt(), (var(self.q_im, mean.im) / nf).sqrt())
    }
}

type TestFn<'a> = &'a (dyn Fn(&[f64]) -> Complex64 + Sync);

struct PathSampler<'a> {
    kind: FunctionalKind,
    pot: &'a PotentialSpec,
    x: &'a [f64],
    t: f64,
    finest: usize,
    k_inner: usize,
    /// flat (finest·k_inner + 1)·d positions
    pos: Vec<f64>,
    /// T(s_j), H3 only
    clock: Vec<f64>,
    inc: Vec<f64>,
}

impl<'a> PathSampler<'a> {
    fn new(kind: FunctionalKind, pot: &'a PotentialSpec, x: &'a [f64], t: f64, finest: usize, k_inner: usize) -> Self {
        let d = x.len();
        let inner = if kind == FunctionalKind::S3Discrete { k_inner } else { 1 };
        Self {
            kind,
            pot,
            x,
            t,
            finest,
            k_inner: inner,
            pos: vec![0.0; (finest * inner + 1) * d],
            clock: vec![0.0; finest + 1],
            inc: vec![0.0; d],
        }
    }

    fn point(&self, i: usize) -> &[f64] {
        let d = self.x.len();
        &self.pos[i * d..(i + 1) * d]
    }

    fn brownian_step<R: Rng>(&mut self, i: usize, var: f64, rng: &mut R) {
        let d = self.x.len();
        let s = var.sqrt();
        for a in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            self.pos[(i + 1) * d + a] = self.pos[i * d + a] + s * z;
        }
    }

    /// Draws the finest skeleton.
    fn draw<R: Rng>(&mut self, rng: &mut R) {
        let d = self.x.len();
        self.pos[..d].copy_from_slice(self.x);
        let dt = self.t / self.finest as f64;
        match self.kind {
            FunctionalKind::S1n | FunctionalKind::S2n => {
                for j in 0..self.finest {
                    relativistic_increment_into(self.pot.mass, dt, rng, &mut self.inc);
                    for a in 0..d {
                        self.pos[(j + 1) * d + a] = self.pos[j * d + a] + self.inc[a];
                    }
                }
            }
            FunctionalKind::FkiNr => {
                for j in 0..self.finest {
                    self.brownian_step(j, dt, rng);
                }
            }
            FunctionalKind::S3Discrete => {
                let ki = self.k_inner;
                for j in 0..self.finest {
                    let tau = sample_subordinator_increment(self.pot.mass, dt, rng);
                    self.clock[j + 1] = self.clock[j] + tau;
                    for s in 0..ki {
                        self.brownian_step(j * ki + s, tau / ki as f64, rng);
                    }
                }
            }
        }
    }

    fn endpoint(&self) -> &[f64] {
        self.point(self.finest * self.k_inner)
    }

    /// e^{−S} of the current path at `n` slices (n divides `finest`).
    fn weight(&self, n: usize) -> Complex64 {
        let r = self.finest / n;
        let dt = self.t / n as f64;
        let pot = self.pot;
        let d = self.x.len();
        let mut mid = vec![0.0; d];
        let mut work = 0.0;
        let mut vsum = 0.0;
        match self.kind {
            FunctionalKind::S1n | FunctionalKind::S2n => {
                let pres = if self.kind == FunctionalKind::S1n { Prescription::Midpoint } else { Prescription::LineIntegral };
                for j in 0..n {
                    let (a, b) = (self.point(j * r), self.point((j + 1) * r));
                    work += pot.phase_work(pres, a, b);
                    for k in 0..d {
                        mid[k] = 0.5 * (a[k] + b[k]);
                    }
                    vsum += pot.scalar_at(&mid);
                }
                vsum *= dt;
            }
            FunctionalKind::FkiNr => {
                for j in 0..n {
                    let (a, b) = (self.point(j * r), self.point((j + 1) * r));
                    work += pot.phase_work(Prescription::Midpoint, a, b);
                }
                vsum = trapezoid(|j| pot.scalar_at(self.point(j * r)), n) * dt;
            }
            FunctionalKind::S3Discrete => {
                // Stratonovich sum on the full Brownian resolution at every level
                for i in 0..self.finest * self.k_inner {
                    work += pot.phase_work(Prescription::Midpoint, self.point(i), self.point(i + 1));
                }
                let ki = self.k_inner;
                vsum = trapezoid(|j| pot.scalar_at(self.point(j * r * ki)), n) * dt;
            }
        }
        Complex64::from_polar((-vsum).exp(), -work)
    }
}

/// Σ_{j=0}^{n} w_j f(j) with trapezoid weights ½,1,…,1,½.
fn trapezoid(f: impl Fn(usize) -> f64, n: usize) -> f64 {
    let mut s = 0.5 * (f(0) + f(n));
    for j in 1..n {
        s += f(j);
    }
    s
}

struct BlockResult {
    levels: Vec<Moments>,
    diffs: Vec<Moments>,
}

fn validate_inputs(pot: &PotentialSpec, x: &[f64], t: f64) -> Result<()> {
    pot.validate()?;
    if x.len() != pot.dim {
        return Err(Error::Argument(format!("point has {} coordinates, potentials are {}-d", x.len(), pot.dim)));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Argument(format!("t must be >= 0, got {t}")));
    }
    Ok(())
}

fn run_levels(
    kind: FunctionalKind,
    pot: &PotentialSpec,
    g: TestFn,
    x: &[f64],
    t: f64,
    levels: &[usize],
    params: &McParams,
) -> Vec<BlockResult> {
    let finest = *levels.last().unwrap();
    let n_blocks = params.n_paths.div_ceil(params.block_size);
    (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::new(params.seed, b as u64).rng();
            let mut sampler = PathSampler::new(kind, pot, x, t, finest, params.k_inner);
            let count = params.block_size.min(params.n_paths - b * params.block_size);
            let mut res = BlockResult {
                levels: vec![Moments::default(); levels.len()],
                diffs: vec![Moments::default(); levels.len().saturating_sub(1)],
            };
            let mut vals = vec![Complex64::new(0.0, 0.0); levels.len()];
            for _ in 0..count {
                sampler.draw(&mut rng);
                let gv = g(sampler.endpoint());
                for (k, &n) in levels.iter().enumerate() {
                    vals[k] = sampler.weight(n) * gv;
                    res.levels[k].push(vals[k]);
                }
                for k in 1..levels.len() {
                    res.diffs[k - 1].push(vals[k] - vals[k - 1]);
                }
            }
            res
        })
        .collect()
}

fn make_estimate(kind: FunctionalKind, m: &Moments, n_slices: usize, params: &McParams, x: &[f64], t: f64) -> McEstimate {
    let (v, se_re, se_im) = m.finish(params.n_paths);
    McEstimate {
        kind,
        value_re: v.re,
        value_im: v.im,
        std_error_re: se_re,
        std_error_im: se_im,
        std_error: se_re.hypot(se_im),
        n_paths: params.n_paths,
        n_slices,
        seed: params.seed,
        x: x.to_vec(),
        t,
    }
}

/// Mean of e^{−S}·g(endpoint) over `n_paths` sampled paths.
pub fn estimate(
    kind: FunctionalKind,
    pot: &PotentialSpec,
    g: TestFn,
    x: &[f64],
    t: f64,
    params: &McParams,
) -> Result<McEstimate> {
    validate_inputs(pot, x, t)?;
    params.validate()?;
    if t == 0.0 {
        let v = g(x);
        let mut e = make_estimate(kind, &Moments::default(), params.n_slices, params, x, t);
        e.value_re = v.re;
        e.value_im = v.im;
        return Ok(e);
    }
    let blocks = run_levels(kind, pot, g, x, t, &[params.n_slices], params);
    let mut total = Moments::default();
    for b in &blocks {
        total.merge(&b.levels[0]);
    }
    Ok(make_estimate(kind, &total, params.n_slices, params, x, t))
}

pub fn estimate_h1(pot: &PotentialSpec, g: TestFn, x: &[f64], t: f64, params: &McParams) -> Result<McEstimate> {
    estimate(FunctionalKind::S1n, pot, g, x, t, params)
}

pub fn estimate_h2(pot: &PotentialSpec, g: TestFn, x: &[f64], t: f64, params: &McParams) -> Result<McEstimate> {
    estimate(FunctionalKind::S2n, pot, g, x, t, params)
}

pub fn estimate_h3(pot: &PotentialSpec, g: TestFn, x: &[f64], t: f64, params: &McParams) -> Result<McEstimate> {
    estimate(FunctionalKind::S3Discrete, pot, g, x, t, params)
}

pub fn estimate_nr(pot: &PotentialSpec, g: TestFn, x: &[f64], t: f64, params: &McParams) -> Result<McEstimate> {
    estimate(FunctionalKind::FkiNr, pot, g, x, t, params)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceRefinementReport {
    pub kind: FunctionalKind,
    pub levels: Vec<usize>,
    pub estimates: Vec<McEstimate>,
    /// |est_k − est_{k−1}| for k ≥ 1
    pub diffs: Vec<f64>,
    /// paired standard error of est_k − est_{k−1}
    pub diff_se: Vec<f64>,
    /// |diff| < 2·SE: noise dominates the level difference
    pub inconclusive: Vec<bool>,
}

/// Estimates at every slice count in `levels` from one set of finest-level paths.
/// Each level must divide the last (finest) one.
pub fn slice_refinement_study(
    kind: FunctionalKind,
    pot: &PotentialSpec,
    g: TestFn,
    x: &[f64],
    t: f64,
    levels: &[usize],
    params: &McParams,
) -> Result<SliceRefinementReport> {
    validate_inputs(pot, x, t)?;
    params.validate()?;
    if t == 0.0 {
        return Err(Error::Argument("refinement study needs t > 0".into()));
    }
    let finest = match levels.last() {
        Some(&f) => f,
        None => return Err(Error::Argument("empty level list".into())),
    };
    if levels[0] == 0 || levels.windows(2).any(|w| w[1] <= w[0]) || levels.iter().any(|n| finest % n != 0) {
        return Err(Error::Argument("levels must increase strictly and divide the finest level".into()));
    }
    let blocks = run_levels(kind, pot, g, x, t, levels, params);
    let mut lv = vec![Moments::default(); levels.len()];
    let mut df = vec![Moments::default(); levels.len() - 1];
    for b in &blocks {
        lv.iter_mut().zip(&b.levels).for_each(|(a, o)| a.merge(o));
        df.iter_mut().zip(&b.diffs).for_each(|(a, o)| a.merge(o));
    }
    let estimates: Vec<McEstimate> =
        lv.iter().zip(levels).map(|(m, &n)| make_estimate(kind, m, n, params, x, t)).collect();
    let mut diffs = Vec::new();
    let mut diff_se = Vec::new();
    for m in &df {
        let (v, a, b) = m.finish(params.n_paths);
        diffs.push(v.norm());
        diff_se.push(a.hypot(b));
    }
    let inconclusive = diffs.iter().zip(&diff_se).map(|(d, s)| *d < 2.0 * s).collect();
    Ok(SliceRefinementReport { kind, levels: levels.to_vec(), estimates, diffs, diff_se, inconclusive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{ScalarPotential, VectorPotential};

    fn gauss(x: &[f64]) -> Complex64 {
        Complex64::new((-(x[0] - 0.3).powi(2) / 2.0).exp(), 0.0)
    }

    #[test]
    fn zero_time_returns_g() {
        let p = PotentialSpec::benchmark(1.0);
        for kind in [FunctionalKind::S1n, FunctionalKind::S3Discrete, FunctionalKind::FkiNr] {
            let e = estimate(kind, &p, &gauss, &[0.7], 0.0, &McParams::new(10, 4, 1)).unwrap();
            assert_eq!(e.value(), gauss(&[0.7]));
            assert_eq!(e.std_error, 0.0);
        }
    }

    #[test]
    fn constant_potential_factors_out_pathwise() {
        let free = PotentialSpec::free(1, 1.0);
        let shifted = free.with_scalar(ScalarPotential::Constant { value: 0.7 });
        let params = McParams::new(3000, 8, 5);
        for kind in [FunctionalKind::S1n, FunctionalKind::S2n, FunctionalKind::S3Discrete, FunctionalKind::FkiNr] {
            let a = estimate(kind, &free, &gauss, &[0.0], 0.5, &params).unwrap();
            let b = estimate(kind, &shifted, &gauss, &[0.0], 0.5, &params).unwrap();
            let f = (-0.35f64).exp();
            assert!((b.value() - a.value() * f).norm() < 1e-13, "{kind:?}");
        }
    }

    #[test]
    fn linear_vector_potential_h1_equals_h2() {
        let p = PotentialSpec::new(1, 1.0, VectorPotential::Linear { matrix: vec![0.4] }, ScalarPotential::Harmonic { omega: 1.0 })
            .unwrap();
        let params = McParams::new(2000, 16, 9);
        let a = estimate_h1(&p, &gauss, &[0.2], 0.5, &params).unwrap();
        let b = estimate_h2(&p, &gauss, &[0.2], 0.5, &params).unwrap();
        assert!((a.value() - b.value()).norm() < 1e-13);
    }

    #[test]
    fn block_layout_is_the_only_source_of_randomness() {
        let p = PotentialSpec::benchmark(1.0);
        let params = McParams { block_size: 100, ..McParams::new(1000, 8, 3) };
        let a = estimate_h3(&p, &gauss, &[0.0], 0.5, &params).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate_h3(&p, &gauss, &[0.0], 0.5, &params).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn refinement_levels_reuse_paths() {
        let p = PotentialSpec::benchmark(1.0);
        let params = McParams::new(500, 8, 11);
        let rep = slice_refinement_study(FunctionalKind::S1n, &p, &gauss, &[0.0], 0.5, &[2, 4, 8], &params).unwrap();
        let direct = estimate_h1(&p, &gauss, &[0.0], 0.5, &params).unwrap();
        assert!((rep.estimates[2].value() - direct.value()).norm() < 1e-14);
        assert_eq!(rep.diffs.len(), 2);
        assert!(slice_refinement_study(FunctionalKind::S1n, &p, &gauss, &[0.0], 0.5, &[3, 8], &params).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = PotentialSpec::benchmark(1.0);
        assert!(estimate_h1(&p, &gauss, &[0.0, 1.0], 0.5, &McParams::new(10, 4, 1)).is_err());
        assert!(estimate_h1(&p, &gauss, &[0.0], -1.0, &McParams::new(10, 4, 1)).is_err());
        assert!(estimate_h1(&p, &gauss, &[0.0], 1.0, &McParams::new(10, 0, 1)).is_err());
    }
}
