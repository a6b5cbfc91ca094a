//! Quadrature over Korányi balls, over the truncated group and over scales.
//!
//! Ball averages use one centered template of the unit ball `B(0, 1)` per
//! `(n, QuadSpec)`. The template is mapped onto `B(x, r)` by `u ↦ x · δ_r(u)`,
//! so translation and dilation identities hold node-for-node. Monte Carlo
//! templates are closed under every coordinate sign flip; odd moments of the
//! template therefore vanish exactly.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, LazyLock, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::hgroup::{gauge_unchecked, homogeneous_dim, place, Point};
use crate::par;

/// Integration strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Grid,
    #[serde(rename = "mc")]
    MonteCarlo,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "grid" => Ok(Mode::Grid),
            "mc" | "montecarlo" => Ok(Mode::MonteCarlo),
            other => invalid(format!("unknown quadrature mode '{other}' (expected grid or mc)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Grid => "grid",
            Mode::MonteCarlo => "mc",
        })
    }
}

/// Quadrature budget. `samples` and `seed` apply to Monte Carlo,
/// `grid_per_axis` to grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadSpec {
    pub mode: Mode,
    pub samples: usize,
    pub seed: u64,
    pub grid_per_axis: usize,
}

impl QuadSpec {
    pub fn grid(per_axis: usize) -> Self {
        Self { mode: Mode::Grid, samples: 1, seed: 0, grid_per_axis: per_axis }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self { mode: Mode::MonteCarlo, samples, seed, grid_per_axis: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            Mode::MonteCarlo if self.samples == 0 => invalid("samples must be at least 1"),
            Mode::Grid if self.grid_per_axis < 2 => invalid("grid_per_axis must be at least 2"),
            _ => Ok(()),
        }
    }

    /// Same budget, different random stream.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

/// A value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }
}

// ---------------------------------------------------------------------------
// Ball templates

/// Nodes of the unit ball `B(0, 1)` with equal weights.
#[derive(Debug)]
pub struct BallTemplate {
    n: usize,
    mode: Mode,
    nodes: Vec<Point>,
    /// Monte Carlo nodes come in orbits of this size (sign-flip images).
    orbit: usize,
    m1: Vec<f64>,
    m2: Vec<f64>,
    coarse: Option<Arc<BallTemplate>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct TemplateKey {
    n: usize,
    mode: Mode,
    size: usize,
    seed: u64,
}

static TEMPLATES: LazyLock<Mutex<HashMap<TemplateKey, Arc<BallTemplate>>>> = LazyLock::new(Default::default);

/// The shared template for `(n, spec)`; built once and cached.
pub fn template(n: usize, spec: &QuadSpec) -> Result<Arc<BallTemplate>> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    spec.validate()?;
    let key = match spec.mode {
        Mode::Grid => TemplateKey { n, mode: Mode::Grid, size: spec.grid_per_axis, seed: 0 },
        Mode::MonteCarlo => TemplateKey { n, mode: Mode::MonteCarlo, size: spec.samples, seed: spec.seed },
    };
    if let Some(t) = TEMPLATES.lock().unwrap().get(&key) {
        return Ok(t.clone());
    }
    let built = Arc::new(match spec.mode {
        Mode::Grid => {
            let coarse = Arc::new(BallTemplate::grid(n, (spec.grid_per_axis / 2).max(2), None));
            BallTemplate::grid(n, spec.grid_per_axis, Some(coarse))
        }
        Mode::MonteCarlo => BallTemplate::monte_carlo(n, spec.samples, spec.seed),
    });
    Ok(TEMPLATES.lock().unwrap().entry(key).or_insert(built).clone())
}

impl BallTemplate {
    fn grid(n: usize, m: usize, coarse: Option<Arc<BallTemplate>>) -> Self {
        let dim = 2 * n + 1;
        let mut nodes = Vec::new();
        let mut idx = vec![0usize; dim];
        let centre = |k: usize, half: f64| -half + (k as f64 + 0.5) * (2.0 * half / m as f64);
        loop {
            let z: SmallVec<[f64; 6]> = idx[..2 * n].iter().map(|&k| centre(k, 1.0)).collect();
            let t = centre(idx[2 * n], 0.25);
            if gauge_unchecked(&z, t) < 1.0 {
                nodes.push(Point { z, t });
            }
            // odometer increment
            let mut axis = 0;
            loop {
                if axis == dim {
                    return Self::finish(n, Mode::Grid, nodes, 1, coarse);
                }
                idx[axis] += 1;
                if idx[axis] < m {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
    }

    fn monte_carlo(n: usize, samples: usize, seed: u64) -> Self {
        let dim = 2 * n + 1;
        let orbit = 1usize << dim;
        let orbits = (samples / orbit).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0xba11);
        let mut nodes = Vec::with_capacity(orbits * orbit);
        for _ in 0..orbits {
            let (z, t) = loop {
                let z: SmallVec<[f64; 6]> = (0..2 * n).map(|_| rng.gen::<f64>()).collect();
                let t = 0.25 * rng.gen::<f64>();
                if gauge_unchecked(&z, t) < 1.0 {
                    break (z, t);
                }
            };
            for mask in 0..orbit {
                let flip = |k: usize, v: f64| if mask >> k & 1 == 1 { -v } else { v };
                let zz = z.iter().enumerate().map(|(k, &v)| flip(k, v)).collect();
                nodes.push(Point { z: zz, t: flip(2 * n, t) });
            }
        }
        Self::finish(n, Mode::MonteCarlo, nodes, orbit, None)
    }

    fn finish(n: usize, mode: Mode, nodes: Vec<Point>, orbit: usize, coarse: Option<Arc<BallTemplate>>) -> Self {
        let count = nodes.len() as f64;
        let mut m1 = vec![0.0; 2 * n];
        let mut m2 = vec![0.0; 2 * n];
        for u in &nodes {
            for j in 0..2 * n {
                m1[j] += u.z[j].abs();
                m2[j] += u.z[j] * u.z[j];
            }
        }
        m1.iter_mut().chain(m2.iter_mut()).for_each(|v| *v /= count);
        Self { n, mode, nodes, orbit, m1, m2, coarse }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `⨍_{B(0,1)} |u_j|` on the template.
    pub fn first_abs_moments(&self) -> &[f64] {
        &self.m1
    }

    /// `⨍_{B(0,1)} u_j²` on the template.
    pub fn second_moments(&self) -> &[f64] {
        &self.m2
    }

    /// The half-resolution grid used for Richardson error estimates.
    pub fn coarse(&self) -> Option<&Arc<BallTemplate>> {
        self.coarse.as_ref()
    }

    /// Evaluates `f` at every node mapped onto `B(x, r)`.
    pub fn sample<F>(&self, f: F, x: &Point, r: f64) -> Result<Vec<f64>>
    where
        F: Fn(&Point) -> f64,
    {
        let mut out = Vec::with_capacity(self.nodes.len());
        for u in &self.nodes {
            let y = place(x, r, u);
            let v = f(&y);
            if !v.is_finite() {
                return Err(Error::NonFinite { context: "ball integrand".into(), at: y });
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Plain mean of node values.
    pub fn mean(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() / values.len() as f64
    }

    /// Standard error of [`mean`](Self::mean) for Monte Carlo templates,
    /// computed from orbit means (the orbits are independent draws).
    /// Returns `+∞` when fewer than two orbits exist and 0 for grids.
    pub fn mc_stderr(&self, values: &[f64]) -> f64 {
        if self.mode == Mode::Grid {
            return 0.0;
        }
        let k = values.len() / self.orbit;
        if k < 2 {
            return f64::INFINITY;
        }
        let means: Vec<f64> = values.chunks(self.orbit).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        let mu = means.iter().sum::<f64>() / k as f64;
        let var = means.iter().map(|m| (m - mu) * (m - mu)).sum::<f64>() / (k - 1) as f64;
        (var / k as f64).sqrt()
    }
}

/// Average `⨍_{B(center, r)} f` with an error estimate: the Monte Carlo
/// standard error, or the fine/coarse grid difference.
pub fn ball_integrate<F>(f: F, center: &Point, r: f64, spec: &QuadSpec) -> Result<Estimate>
where
    F: Fn(&Point) -> f64,
{
    if !(r > 0.0 && r.is_finite()) {
        return invalid(format!("radius must be positive, got {r}"));
    }
    let tpl = template(center.n(), spec)?;
    let vals = tpl.sample(&f, center, r)?;
    let value = tpl.mean(&vals);
    let stderr = match tpl.coarse() {
        Some(c) => (value - c.mean(&c.sample(&f, center, r)?)).abs(),
        None => tpl.mc_stderr(&vals),
    };
    Ok(Estimate { value, stderr })
}

// ---------------------------------------------------------------------------
// Ball volume

const VOLUME_SAMPLES: usize = 4_000_000;
const VOLUME_SEED: u64 = 0x5eed_ba11_u64;

/// Monte Carlo estimate of `|B(0, 1)|` by rejection from its bounding box
/// `[−1, 1]^{2n} × [−¼, ¼]`.
pub fn unit_ball_volume_estimate(n: usize, samples: usize, seed: u64) -> Estimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x701_u64);
    let mut z = vec![0.0; 2 * n];
    let mut hits = 0usize;
    for _ in 0..samples {
        z.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let t = rng.gen_range(-0.25..0.25);
        if gauge_unchecked(&z, t) < 1.0 {
            hits += 1;
        }
    }
    let box_vol = 4f64.powi(n as i32) * 0.5;
    let frac = hits as f64 / samples as f64;
    Estimate { value: box_vol * frac, stderr: box_vol * (frac * (1.0 - frac) / samples as f64).sqrt() }
}

static UNIT_VOLUMES: LazyLock<Mutex<HashMap<usize, Arc<OnceLock<f64>>>>> = LazyLock::new(Default::default);

/// `|B(x, r)| = c_n r^Q`, with `c_n` estimated once per `n`.
pub fn ball_volume(n: usize, r: f64) -> Result<f64> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if !(r > 0.0 && r.is_finite()) {
        return invalid(format!("radius must be positive, got {r}"));
    }
    let cell = UNIT_VOLUMES.lock().unwrap().entry(n).or_default().clone();
    let c = *cell.get_or_init(|| unit_ball_volume_estimate(n, VOLUME_SAMPLES, VOLUME_SEED).value);
    Ok(c * r.powf(homogeneous_dim(n)))
}

// ---------------------------------------------------------------------------
// Scale grids

/// Geometric grid of radii; the trapezoid rule on it integrates `dr/r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub points_per_decade: usize,
}

impl Default for ScaleGrid {
    fn default() -> Self {
        Self { r_min: 1e-3, r_max: 1e2, points_per_decade: 16 }
    }
}

impl ScaleGrid {
    pub fn new(r_min: f64, r_max: f64, points_per_decade: usize) -> Result<Self> {
        let g = Self { r_min, r_max, points_per_decade };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_max > self.r_min && self.r_max.is_finite()) {
            return invalid(format!("scale grid needs 0 < r_min < r_max, got [{}, {}]", self.r_min, self.r_max));
        }
        if self.points_per_decade == 0 {
            return invalid("points_per_decade must be positive");
        }
        Ok(())
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        let decades = (self.r_max / self.r_min).log10();
        ((decades * self.points_per_decade as f64).ceil() as usize).max(1)
    }

    pub fn step(&self) -> f64 {
        (self.r_max / self.r_min).ln() / self.intervals() as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let k = self.intervals();
        let ratio = self.r_max / self.r_min;
        (0..=k)
            .map(|i| match i {
                0 => self.r_min,
                i if i == k => self.r_max,
                i => self.r_min * ratio.powf(i as f64 / k as f64),
            })
            .collect()
    }

    /// Weights in `log r`: the trapezoid rule with Gregory end corrections
    /// (`3/8, 7/6, 23/24` at each end), which leaves interior weights at `h`
    /// and is exact for quadratics in `log r`.
    pub fn weights(&self) -> Vec<f64> {
        let k = self.intervals();
        let h = self.step();
        let mut w: Vec<f64> = (0..=k).map(|i| if i == 0 || i == k { 0.5 * h } else { h }).collect();
        if k >= 5 {
            for (i, c) in [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0].into_iter().enumerate() {
                w[i] = c * h;
                w[k - i] = c * h;
            }
        }
        w
    }

    /// The same grid with every radius multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self { r_min: self.r_min * s, r_max: self.r_max * s, ..*self }
    }
}

/// `∫ g(r) dr/r` over the grid by the end-corrected trapezoid rule in `log r`.
pub fn log_scale_integrate<G>(g: G, grid: &ScaleGrid) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    grid.validate()?;
    let mut acc = 0.0;
    for (r, w) in grid.nodes().into_iter().zip(grid.weights()) {
        let v = g(r);
        if !v.is_finite() {
            return Err(Error::Numeric(format!("scale integrand is not finite at r = {r}")));
        }
        acc += w * v;
    }
    Ok(acc)
}

/// [`log_scale_integrate`] on values already computed at `grid.nodes()`.
pub(crate) fn log_trapezoid(values: &[f64], grid: &ScaleGrid) -> f64 {
    values.iter().zip(grid.weights()).map(|(v, w)| v * w).sum()
}

// ---------------------------------------------------------------------------
// Whole-group integration on a truncated domain

/// The gauge ball `N(x) ≤ R`, parametrised by dilation rays: a point is
/// `δ_ρ(ω)` with `ω` on the unit gauge sphere and `ρ = R sinh(κv)/sinh(κ)`,
/// `v ∈ [0, 1]`, which concentrates nodes near the center; `κ → 0` is uniform
/// in `ρ`. The parametrisation commutes with dilations at fixed `κ`, so `δ_s`
/// sends the nodes of a domain onto those of [`Domain::scaled`]`(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub radius: f64,
    pub grading: f64,
}

impl Domain {
    /// Ball of radius `R` with `κ = asinh(R)`, so that radial spacing near the
    /// center is that of a uniform rule on the unit ball.
    pub fn new(radius: f64) -> Self {
        Self { radius, grading: radius.asinh() }
    }

    pub fn with_grading(mut self, grading: f64) -> Self {
        self.grading = grading;
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { radius: self.radius * s, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return invalid(format!("domain radius must be positive, got {}", self.radius));
        }
        if !(self.grading >= 0.0 && self.grading.is_finite()) {
            return invalid("grading must be non-negative");
        }
        Ok(())
    }
}

/// `(ρ(v), ρ'(v))` for `ρ(v) = L sinh(κv)/sinh(κ)`.
#[inline]
fn graded(v: f64, len: f64, kappa: f64) -> (f64, f64) {
    if kappa < 1e-8 {
        return (len * v, len);
    }
    let s = kappa.sinh();
    (len * (kappa * v).sinh() / s, len * kappa * (kappa * v).cosh() / s)
}

/// Nodes and weights approximating `∫_{N ≤ R} · dx`.
#[derive(Debug, Clone)]
pub struct DomainRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Independent Monte Carlo draws (weights already divided by count).
    pub monte_carlo: bool,
    pub coarse: Option<Box<DomainRule>>,
}

impl DomainRule {
    pub fn new(n: usize, domain: &Domain, spec: &QuadSpec) -> Result<Self> {
        domain.validate()?;
        spec.validate()?;
        if n == 0 {
            return invalid("n must be at least 1");
        }
        Ok(match spec.mode {
            Mode::Grid => {
                let coarse = Self::grid(n, domain, (spec.grid_per_axis / 2).max(2), None);
                Self::grid(n, domain, spec.grid_per_axis, Some(Box::new(coarse)))
            }
            Mode::MonteCarlo => Self::monte_carlo(n, domain, spec.samples, spec.seed),
        })
    }

    /// Point and Jacobian for `u ∈ [−1, 1]^{2n+1}`: `u₀` radial, `u₁` the
    /// latitude `φ` with `|z|² = cos φ`, `4t = sin φ` on the unit sphere, the
    /// rest hyperspherical angles of `z/|z|`.
    fn map(n: usize, domain: &Domain, u: &[f64]) -> (Point, f64) {
        use std::f64::consts::{FRAC_PI_2, PI};
        let d = 2 * n;
        let phi = u[1] * FRAC_PI_2;
        let (sin_phi, cos_phi) = phi.sin_cos();
        let mut jac = 0.25 * cos_phi.powi(n as i32 - 1) * 0.5 * FRAC_PI_2;
        let mut dir = vec![1.0; d];
        let mut carry = 1.0;
        for k in 0..d - 2 {
            let psi = (u[2 + k] + 1.0) * FRAC_PI_2;
            let (sp, cp) = psi.sin_cos();
            dir[k] = carry * cp;
            carry *= sp;
            jac *= sp.powi((d - 2 - k) as i32) * FRAC_PI_2;
        }
        let theta = u[2 * n] * PI;
        dir[d - 2] = carry * theta.cos();
        dir[d - 1] = carry * theta.sin();
        jac *= PI;
        let s = cos_phi.max(0.0).sqrt();
        let (rho, drho) = graded(0.5 * (u[0] + 1.0), domain.radius, domain.grading);
        let z = dir.iter().map(|w| rho * s * w).collect();
        let t = rho * rho * 0.25 * sin_phi;
        (Point { z, t }, jac * rho.powi(d as i32 + 1) * drho)
    }

    /// Tensor Gauss-Legendre rule in the ray coordinates.
    fn grid(n: usize, domain: &Domain, m: usize, coarse: Option<Box<DomainRule>>) -> Self {
        let dim = 2 * n + 1;
        let gl = GaussLegendre::new(NonZeroUsize::new(m).expect("m >= 2"));
        let (nodes, unit_w): (Vec<f64>, Vec<f64>) = gl.iter().map(|(x, w)| (*x, *w)).unzip();
        let total = m.pow(dim as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut u = vec![0.0; dim];
        for idx in 0..total {
            let mut rem = idx;
            let mut w = 1.0;
            for slot in u.iter_mut() {
                *slot = nodes[rem % m];
                w *= unit_w[rem % m];
                rem /= m;
            }
            let (p, jac) = Self::map(n, domain, &u);
            points.push(p);
            weights.push(jac * w);
        }
        Self { points, weights, monte_carlo: false, coarse }
    }

    fn monte_carlo(n: usize, domain: &Domain, samples: usize, seed: u64) -> Self {
        let dim = 2 * n + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0xd0_3a1);
        let vol = 2f64.powi(dim as i32);
        let mut points = Vec::with_capacity(samples);
        let mut weights = Vec::with_capacity(samples);
        let mut u = vec![0.0; dim];
        for _ in 0..samples {
            u.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
            let (p, jac) = Self::map(n, domain, &u);
            points.push(p);
            weights.push(jac * vol / samples as f64);
        }
        Self { points, weights, monte_carlo: true, coarse: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Σ w_i v_i` with its error estimate, given integrand values at
    /// `points` (and at the coarse points, for grids).
    pub fn integrate(&self, values: &[f64], coarse_values: Option<&[f64]>) -> Estimate {
        let value: f64 = values.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        let stderr = if self.monte_carlo {
            let k = values.len() as f64;
            if k < 2.0 {
                f64::INFINITY
            } else {
                let terms: Vec<f64> = values.iter().zip(&self.weights).map(|(v, w)| v * w * k).collect();
                let mu = value;
                let var = terms.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            }
        } else {
            match (&self.coarse, coarse_values) {
                (Some(c), Some(cv)) => (value - c.integrate(cv, None).value).abs(),
                _ => 0.0,
            }
        };
        Estimate { value, stderr }
    }
}

/// Result of an `L^p` norm over the truncated domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpEstimate {
    /// `(∫_{N ≤ R} |f|^p)^{1/p}`.
    pub value: f64,
    /// Bound on the part outside the ball, `(∫_{N > R} |f|^p)^{1/p}`; `+∞`
    /// when no decay information is available.
    pub tail_bound: f64,
    pub stderr: f64,
    /// The part of `stderr` due to random sampling (zero for grids).
    pub sampling: f64,
}

/// `(∫ g(N(x))^p dx)^{1/p}` over `N(x) > R`, summed over geometric shells
/// with volumes `c_n (D_o^Q − D_i^Q)`; each shell takes the larger endpoint
/// value, which bounds `g` on the shell when `g` is monotone there.
pub fn shell_tail<G>(n: usize, from: f64, p: f64, g: G) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    const RATIO: f64 = 1.03;
    const SPAN: f64 = 1e5;
    let unit = ball_volume(n, 1.0)?;
    let q = homogeneous_dim(n);
    let mut acc = 0.0;
    let mut inner = from;
    while inner < from * SPAN {
        let outer = inner * RATIO;
        let v = g(inner).max(g(outer));
        if !v.is_finite() {
            return Ok(f64::INFINITY);
        }
        if v > 0.0 {
            acc += v.powf(p) * unit * (outer.powf(q) - inner.powf(q));
        }
        inner = outer;
    }
    Ok(acc.powf(1.0 / p))
}

/// `‖f‖_{L^p}` over the ball `N ≤ R`, plus a tail bound from `decay` (which must bound
/// `|f|` as a function of the gauge for every `N ≥ R`).
pub fn domain_integrate_lp<F>(
    f: F,
    n: usize,
    p: f64,
    domain: &Domain,
    spec: &QuadSpec,
    decay: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<LpEstimate>
where
    F: Fn(&Point) -> f64 + Sync + Send,
{
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("p must be at least 1, got {p}"));
    }
    let rule = DomainRule::new(n, domain, spec)?;
    let eval = |pts: &[Point]| -> Result<Vec<f64>> {
        par::try_map_slice(pts, |x| {
            let v = f(x);
            if v.is_finite() {
                Ok(v.abs().powf(p))
            } else {
                Err(Error::NonFinite { context: "domain integrand".into(), at: x.clone() })
            }
        })
    };
    let vals = eval(&rule.points)?;
    let coarse = match &rule.coarse {
        Some(c) => Some(eval(&c.points)?),
        None => None,
    };
    let est = rule.integrate(&vals, coarse.as_deref());
    let value = est.value.max(0.0).powf(1.0 / p);
    let stderr = if value > 0.0 { est.stderr * value.powf(1.0 - p) / p } else { est.stderr.powf(1.0 / p) };
    let tail_bound = match decay {
        Some(d) => shell_tail(n, domain.radius, p, d)?,
        None => f64::INFINITY,
    };
    let sampling = if rule.monte_carlo { stderr } else { 0.0 };
    Ok(LpEstimate { value, tail_bound, stderr, sampling })
}
