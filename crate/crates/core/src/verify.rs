//! Inequality harness: both sides of the scaling identities, the lemma-level
//! comparisons, the `L^p` square function estimate and the vertical versus
//! horizontal Poincaré inequality, reported as [`RatioReport`]s.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affine::{fit_moment, sup_bound_constant, AffineMap};
use crate::beta::{beta_number, check_monotonicity, near_optimality_ratio, GuardedRatio, DEGENERATE_EPS};
use crate::error::{invalid, Result};
use crate::fields::{catalog, precompose_dilation, Params, ScalarField};
use crate::hgroup::{dilate, homogeneous_dim, place, Point};
use crate::par;
use crate::quad::{ball_integrate, domain_integrate_lp, shell_tail, Domain, DomainRule, LpEstimate, Mode, QuadSpec, ScaleGrid};
use crate::squarefn::{g_alpha, g_alpha_lp_norm_q, gradient_comparison, s_alpha, NormBudget};

/// Identity checks fail when either side is resolved worse than this.
pub const MAX_RELATIVE_STDERR: f64 = 0.1;

/// One comparison `lhs` vs `rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, or 0 when `rhs ≤ DEGENERATE_EPS`.
    pub ratio: f64,
    pub params: BTreeMap<String, String>,
    /// Truncation bounds for `(lhs, rhs)`.
    pub truncation: (f64, f64),
    pub degenerate: bool,
    /// Larger of the two relative error estimates.
    pub rel_stderr: f64,
    /// Larger of the two relative sampling errors (the part of `rel_stderr`
    /// that is random rather than discretisation).
    pub rel_sampling: f64,
    /// For identities: allowed `|ratio − 1|`.
    pub tolerance: Option<f64>,
    pub passed: bool,
}

fn rel(se: f64, v: f64) -> f64 {
    if se == 0.0 {
        0.0
    } else {
        se / v.abs()
    }
}

impl RatioReport {
    fn new(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let g = GuardedRatio::new(lhs, rhs);
        Self {
            name: name.into(),
            lhs,
            rhs,
            ratio: g.ratio,
            params: BTreeMap::new(),
            truncation: (0.0, 0.0),
            degenerate: g.degenerate,
            rel_stderr: 0.0,
            rel_sampling: 0.0,
            tolerance: None,
            passed: true,
        }
    }

    fn from_guarded(name: impl Into<String>, g: GuardedRatio) -> Self {
        Self::new(name, g.lhs, g.rhs)
    }

    fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    fn with_stderr(mut self, lhs_se: f64, rhs_se: f64) -> Self {
        self.rel_stderr = rel(lhs_se, self.lhs).max(rel(rhs_se, self.rhs));
        self
    }

    fn with_sampling(mut self, lhs_se: f64, rhs_se: f64) -> Self {
        self.rel_sampling = rel(lhs_se, self.lhs).max(rel(rhs_se, self.rhs));
        self
    }

    /// Identity check: `|ratio − 1| ≤ tol` with both sides resolved. Both
    /// sides share their discretisation (the nodes map onto each other), so
    /// only the sampling error is gated.
    fn identity(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self.passed = if self.degenerate {
            self.lhs.abs() <= DEGENERATE_EPS
        } else {
            (self.ratio - 1.0).abs() <= tol && self.rel_sampling <= MAX_RELATIVE_STDERR
        };
        self
    }

    /// Stable identifier: the name, plus the fitted degree for sweeps that
    /// run per degree.
    pub fn key(&self) -> String {
        match self.params.get("d") {
            Some(d) => format!("{}/d={d}", self.name),
            None => self.name.clone(),
        }
    }

    /// Inequality-type check: the ratio is finite.
    fn finite(mut self) -> Self {
        self.passed = self.ratio.is_finite() && self.lhs.is_finite() && self.rhs.is_finite();
        self
    }
}

/// Whether `(p, q)` lies in the range of the `L^p` estimate for `β_{f,1,q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentGate {
    pub p: f64,
    pub q: f64,
    #[serde(rename = "Q")]
    pub big_q: usize,
    pub admissible: bool,
}

/// `(1 < p ≤ 2 and q < pQ/(Q−p))` or `(p ≥ 2 and q < 2Q/(Q−2))`, with `q ≥ 1`.
pub fn gate_exponents(p: f64, q: f64, n: usize) -> ExponentGate {
    let big_q = 2 * n + 2;
    let qf = big_q as f64;
    let admissible = n >= 1
        && q >= 1.0
        && ((p > 1.0 && p <= 2.0 && q < p * qf / (qf - p)) || (p >= 2.0 && q < 2.0 * qf / (qf - 2.0)));
    ExponentGate { p, q, big_q, admissible }
}

/// Everything a suite needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub n: usize,
    pub field: String,
    pub params: Params,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub r_grid: ScaleGrid,
    pub t_grid: ScaleGrid,
    pub domain: Domain,
    pub ball: QuadSpec,
    pub domain_quad: QuadSpec,
    /// Dilation factors for the identity and stability checks.
    pub scales: Vec<f64>,
    /// Enlargement constant in the gradient comparison.
    pub gradient_c: f64,
    /// Ratio `r₂ / r₁` in the monotonicity sweep.
    pub monotonicity_c: f64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            n: 1,
            field: "gaussian".into(),
            params: Params::new(),
            p: 2.0,
            q: 2.0,
            alpha: 1.0,
            r_grid: ScaleGrid::default(),
            t_grid: ScaleGrid { r_min: 1e-4, r_max: 1e2, points_per_decade: 16 },
            domain: Domain::new(64.0),
            ball: QuadSpec::monte_carlo(1024, 42),
            domain_quad: QuadSpec::grid(16),
            scales: vec![0.5, 2.0],
            gradient_c: 4.0,
            monotonicity_c: 2.0,
        }
    }
}

impl HarnessConfig {
    pub fn field(&self) -> Result<ScalarField> {
        catalog(&self.field, &self.params, self.n)
    }

    pub fn budget(&self) -> NormBudget {
        NormBudget { ball: self.ball, domain: self.domain_quad }
    }

    /// A ball-average error estimate if it is a sampling error.
    fn ball_sampling(&self, stderr: f64) -> f64 {
        if self.ball.mode == Mode::MonteCarlo {
            stderr
        } else {
            0.0
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.ball.seed ^ self.domain_quad.seed.rotate_left(32));
        rng.set_stream(stream);
        rng
    }

    fn common_params(&self, r: RatioReport) -> RatioReport {
        let spec = |q: &QuadSpec| match q.mode {
            Mode::Grid => format!("grid:{}", q.grid_per_axis),
            Mode::MonteCarlo => format!("mc:{}", q.samples),
        };
        r.param("n", self.n)
            .param("seed", self.ball.seed)
            .param("ball", spec(&self.ball))
            .param("domain", spec(&self.domain_quad))
    }

    /// Catalog fields swept by the identity and lemma suites: the configured
    /// field followed by the designed test fields.
    fn sweep_fields(&self) -> Result<Vec<ScalarField>> {
        let mut out = vec![self.field()?];
        let extra = [
            ("gaussian", Params::new()),
            ("bump", Params::new()),
            ("vertical-wave", Params::new().with("omega", "4")),
        ];
        for (name, params) in extra {
            let f = catalog(name, &params, self.n)?;
            if out.iter().all(|g| g.label() != f.label()) {
                out.push(f);
            }
        }
        Ok(out)
    }
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, half: f64) -> Point {
    let z: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-half..half)).collect();
    Point::new(&z, rng.gen_range(-half..half)).expect("finite coordinates")
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// A point of the open unit ball, by rejection from its bounding box.
fn random_unit_ball_point(rng: &mut ChaCha8Rng, n: usize) -> Point {
    loop {
        let z: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = Point::new(&z, rng.gen_range(-0.25..0.25)).expect("finite coordinates");
        if crate::hgroup::gauge(&p) < 1.0 {
            return p;
        }
    }
}

// ---------------------------------------------------------------------------
// Gradient norms

/// `‖ |∇_H f| ‖_{L^p}` over the domain with a tail bound from the gradient decay.
pub fn gradient_lp_norm(f: &ScalarField, n: usize, p: f64, domain: &Domain, spec: &QuadSpec) -> Result<LpEstimate> {
    let grad = |x: &Point| match f.hgrad_or_fd(x) {
        Ok(g) => g.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Err(_) => f64::NAN,
    };
    let decay = match f.support_radius() {
        Some(rho) if rho <= domain.radius => {
            let probe = f.clone();
            probe.hgrad_decay_at(domain.radius).map(|_| move |r: f64| probe.hgrad_decay_at(r).unwrap_or(f64::INFINITY))
        }
        _ => None,
    };
    match decay {
        Some(d) => domain_integrate_lp(grad, n, p, domain, spec, Some(&d)),
        None => domain_integrate_lp(grad, n, p, domain, spec, None),
    }
}

fn field_tail(f: &ScalarField, n: usize, p: f64, domain: &Domain) -> Result<f64> {
    match f.support_radius() {
        Some(rho) if rho <= domain.radius && f.decay_at(domain.radius).is_some() => {
            shell_tail(n, domain.radius, p, |r| f.decay_at(r).unwrap_or(f64::INFINITY))
        }
        _ => Ok(f64::INFINITY),
    }
}

// ---------------------------------------------------------------------------
// Main inequalities

/// `‖G₁ f‖_p` (built on `β_{f,1,q}`) against `‖∇_H f‖_p`.
pub fn dorronsoro_ratio(f: &ScalarField, cfg: &HarnessConfig) -> Result<RatioReport> {
    let gate = gate_exponents(cfg.p, cfg.q, cfg.n);
    if !gate.admissible {
        return invalid(format!(
            "exponents p = {}, q = {} are outside the admissible range for Q = {}",
            cfg.p, cfg.q, gate.big_q
        ));
    }
    let lhs = g_alpha_lp_norm_q(f, cfg.n, 1.0, cfg.q, cfg.p, &cfg.domain, &cfg.r_grid, &cfg.budget())?;
    let rhs = gradient_lp_norm(f, cfg.n, cfg.p, &cfg.domain, &cfg.domain_quad)?;
    let mut r = RatioReport::new(format!("dorronsoro[{}]", f.label()), lhs.value, rhs.value)
        .with_stderr(lhs.stderr, rhs.stderr)
        .with_sampling(lhs.sampling, rhs.sampling)
        .finite();
    r.truncation = (lhs.tail_bound(), rhs.tail_bound);
    Ok(cfg
        .common_params(r)
        .param("p", cfg.p)
        .param("q", cfg.q)
        .param("box_radius", cfg.domain.radius)
        .param("r_grid", grid_label(&cfg.r_grid))
        .param("lhs_scale_tail", lhs.scale_tail)
        .param("lhs_domain_tail", lhs.domain_tail))
}

fn grid_label(g: &ScaleGrid) -> String {
    format!("[{}, {}]/{}", g.r_min, g.r_max, g.points_per_decade)
}

/// Components of the Poincaré left-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareLhs {
    pub value: f64,
    pub stderr: f64,
    pub low: f64,
    pub high: f64,
    pub domain_tail: f64,
}

/// `(∫ [∫ (|f(x) − f(x·(0,t))| / √t)^p dx]^{2/p} dt/t)^{1/2}` over the t-grid.
pub fn poincare_lhs(f: &ScalarField, n: usize, p: f64, domain: &Domain, t_grid: &ScaleGrid, spec: &QuadSpec) -> Result<PoincareLhs> {
    if !(p > 1.0 && p <= 2.0) {
        return invalid(format!("p must lie in (1, 2], got {p}"));
    }
    t_grid.validate()?;
    f.check_dimension(n)?;
    let rule = DomainRule::new(n, domain, spec)?;
    let ts = t_grid.nodes();
    let (fine, fine_se) = poincare_profile(f, &rule, domain, &ts, p)?;
    let coarse = match &rule.coarse {
        Some(c) => Some(poincare_profile(f, c, domain, &ts, p)?.0),
        None => None,
    };
    let integrate = |v: &[f64]| -> f64 {
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        crate::quad::log_trapezoid(&sq, t_grid).max(0.0).sqrt()
    };
    let value = integrate(&fine);
    let stderr = match &coarse {
        Some(c) => (value - integrate(c)).abs(),
        None if value > 0.0 => {
            let d: Vec<f64> = fine.iter().zip(&fine_se).map(|(v, s)| 2.0 * v * s).collect();
            crate::quad::log_trapezoid(&d, t_grid) / (2.0 * value)
        }
        None => 0.0,
    };
    // V(t) ≈ V₀ (t/t₀)^k below t_min
    let low = if fine[0] == 0.0 {
        0.0
    } else {
        let k = (fine[1] / fine[0]).ln() / (ts[1] / ts[0]).ln();
        if k > 0.0 {
            fine[0] / (2.0 * k).sqrt()
        } else {
            f64::INFINITY
        }
    };
    // V(t) ≤ 2‖f‖_p / √t above t_max
    let high = if value == 0.0 {
        0.0
    } else {
        f.norm_bound(p).map_or(f64::INFINITY, |nb| 2.0 * nb / t_grid.r_max.sqrt())
    };
    // outside the covered region both |f(x)| and |f(x·(0,t))| are tail values
    let tail_f = field_tail(f, n, p, domain)?;
    let domain_tail = if tail_f == 0.0 {
        0.0
    } else {
        2.0 * tail_f * (1.0 / t_grid.r_min - 1.0 / t_grid.r_max).sqrt()
    };
    Ok(PoincareLhs { value, stderr, low, high, domain_tail })
}

/// `V(t) = (∫|f(x) − f(x·(0,t))|^p dx)^{1/p} / √t` at every node `t`, with
/// Monte Carlo errors (zero for grids).
///
/// The integral over `τ` (the height of `x`) is split into the ball section
/// `|τ| ≤ h(z)` and the shifted slab `τ = σ − t < −h(z)` for ball heights
/// `σ`, which together cover every `τ` where either term is inside the ball.
fn poincare_profile(f: &ScalarField, rule: &DomainRule, domain: &Domain, ts: &[f64], p: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let r4 = domain.radius.powi(4);
    let base = par::map_slice(&rule.points, |x| f.eval(x));
    if let Some(i) = base.iter().position(|v| !v.is_finite()) {
        return Err(crate::error::Error::NonFinite { context: "Poincaré integrand".into(), at: rule.points[i].clone() });
    }
    let per_t = par::map_slice(ts, |&t| {
        let count = rule.len() as f64;
        let mut sum = 0.0;
        let mut terms = Vec::with_capacity(if rule.monte_carlo { rule.len() } else { 0 });
        for ((x, w), fx) in rule.points.iter().zip(&rule.weights).zip(&base) {
            let up = Point { z: x.z.clone(), t: x.t + t };
            let mut c = (fx - f.eval(&up)).abs().powf(p);
            let z2: f64 = x.z.iter().map(|v| v * v).sum();
            let height = 0.25 * (r4 - z2 * z2).max(0.0).sqrt();
            if x.t - t < -height {
                let down = Point { z: x.z.clone(), t: x.t - t };
                c += (f.eval(&down) - fx).abs().powf(p);
            }
            sum += w * c;
            if rule.monte_carlo {
                terms.push(w * c * count);
            }
        }
        let se = if rule.monte_carlo && terms.len() > 1 {
            let var = terms.iter().map(|v| (v - sum) * (v - sum)).sum::<f64>() / (count - 1.0);
            (var / count).sqrt()
        } else {
            0.0
        };
        let v = sum.max(0.0).powf(1.0 / p);
        let v_se = if v > 0.0 { se * v.powf(1.0 - p) / p } else { 0.0 };
        (v / t.sqrt(), v_se / t.sqrt())
    });
    if per_t.iter().any(|(v, _)| !v.is_finite()) {
        return Err(crate::error::Error::Numeric("Poincaré integrand is not finite".into()));
    }
    Ok(per_t.into_iter().unzip())
}

/// Vertical Poincaré left-hand side against `‖∇_H f‖_p`.
pub fn poincare_ratio(f: &ScalarField, cfg: &HarnessConfig) -> Result<RatioReport> {
    let lhs = poincare_lhs(f, cfg.n, cfg.p, &cfg.domain, &cfg.t_grid, &cfg.domain_quad)?;
    let rhs = gradient_lp_norm(f, cfg.n, cfg.p, &cfg.domain, &cfg.domain_quad)?;
    let random = cfg.domain_quad.mode == Mode::MonteCarlo;
    let mut r = RatioReport::new(format!("poincare[{}]", f.label()), lhs.value, rhs.value)
        .with_stderr(lhs.stderr, rhs.stderr)
        .with_sampling(if random { lhs.stderr } else { 0.0 }, rhs.sampling)
        .finite();
    r.truncation = (lhs.low + lhs.high + lhs.domain_tail, rhs.tail_bound);
    Ok(cfg
        .common_params(r)
        .param("p", cfg.p)
        .param("box_radius", cfg.domain.radius)
        .param("t_grid", grid_label(&cfg.t_grid)))
}

/// Same-side homogeneity of a ratio under `f ↦ f ∘ δ_s`: each run uses the
/// domain of radius `R/s`, which `δ_s` maps onto the reference domain.
fn stability_suite<F>(f: &ScalarField, cfg: &HarnessConfig, tag: &str, ratio: F) -> Result<Vec<RatioReport>>
where
    F: Fn(&ScalarField, &HarnessConfig) -> Result<RatioReport>,
{
    let mut scales = vec![1.0];
    scales.extend(cfg.scales.iter().copied().filter(|s| *s != 1.0));
    let mut out = Vec::new();
    for s in scales {
        let fs = precompose_dilation(f, s)?;
        let mut c = cfg.clone();
        c.domain = cfg.domain.scaled(1.0 / s);
        out.push(ratio(&fs, &c)?.param("s", s));
    }
    let ratios: Vec<f64> = out.iter().map(|r| r.ratio).collect();
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = RatioReport::new(format!("{tag}-stability[{}]", f.label()), hi, lo).identity(5e-2);
    out.push(cfg.common_params(spread));
    Ok(out)
}

/// `dorronsoro_ratio` at `s = 1` and each configured dilation, plus a
/// stability row comparing the largest and smallest ratio.
pub fn run_dorronsoro_suite(cfg: &HarnessConfig) -> Result<Vec<RatioReport>> {
    stability_suite(&cfg.field()?, cfg, "dorronsoro", dorronsoro_ratio)
}

/// `poincare_ratio` at `s = 1` and each configured dilation, plus a stability row.
pub fn run_poincare_suite(cfg: &HarnessConfig) -> Result<Vec<RatioReport>> {
    if !(cfg.p > 1.0 && cfg.p <= 2.0) {
        return invalid(format!("p must lie in (1, 2], got {}", cfg.p));
    }
    stability_suite(&cfg.field()?, cfg, "poincare", poincare_ratio)
}

// ---------------------------------------------------------------------------
// Identities

/// Ball-budget multiplier for the single-ball covariance rows.
pub const COVARIANCE_OVERSAMPLE: usize = 100;

/// Scaling identities under `f_s = f ∘ δ_s`, each evaluated on both sides
/// with common nodes.
pub fn run_identity_suite(cfg: &HarnessConfig) -> Result<Vec<RatioReport>> {
    let qd = homogeneous_dim(cfg.n);
    let mut scales = vec![1.0];
    scales.extend(cfg.scales.iter().copied().filter(|s| *s != 1.0));
    let mut out = Vec::new();

    for (fi, f) in cfg.sweep_fields()?.iter().enumerate() {
        let base = domain_integrate_lp(|x| f.eval(x), cfg.n, cfg.p, &cfg.domain, &cfg.domain_quad, None)?;
        for &s in &scales {
            let fs = precompose_dilation(f, s)?;
            // ‖f_s‖_p = s^{−Q/p} ‖f‖_p
            let lhs = domain_integrate_lp(|x| fs.eval(x), cfg.n, cfg.p, &cfg.domain.scaled(1.0 / s), &cfg.domain_quad, None)?;
            let factor = s.powf(-qd / cfg.p);
            let r = RatioReport::new(format!("lp-scaling[{}]", f.label()), lhs.value, factor * base.value)
                .with_stderr(lhs.stderr, factor * base.stderr)
                .with_sampling(lhs.sampling, factor * base.sampling)
                .identity(1e-2);
            out.push(cfg.common_params(r).param("s", s).param("p", cfg.p).param("box_radius", cfg.domain.radius));

            // β_{f_s}(B(x, r)) = β_f(B(δ_s x, s r))
            let ball = QuadSpec { samples: cfg.ball.samples.saturating_mul(COVARIANCE_OVERSAMPLE), ..cfg.ball };
            let mut rng = cfg.rng(0x1000 + fi as u64 * 64 + (s * 16.0) as u64);
            for i in 0..10 {
                let x = random_point(&mut rng, cfg.n, 0.5);
                let r = log_uniform(&mut rng, 0.5, 1.5);
                let a = beta_number(&fs, &x, r, 1, 1.0, &ball)?;
                let b = beta_number(f, &dilate(s, &x)?, s * r, 1, 1.0, &ball)?;
                let rep = RatioReport::new(format!("beta-covariance[{}]", f.label()), a.value, b.value)
                    .with_stderr(a.stderr, b.stderr)
                    .with_sampling(cfg.ball_sampling(a.stderr), cfg.ball_sampling(b.stderr))
                    .identity(1e-2);
                out.push(cfg.common_params(rep).param("s", s).param("i", i).param("r", r));
            }
        }
    }

    // square function laws for the configured field
    let f = cfg.field()?;
    let alpha = cfg.alpha;
    let mut rng = cfg.rng(0x2000);
    let points: Vec<Point> = (0..3).map(|_| random_point(&mut rng, cfg.n, 0.5)).collect();
    let g_base = match cfg.scales.iter().any(|s| *s != 1.0) {
        true => Some(crate::squarefn::g_alpha_lp_norm(&f, cfg.n, alpha, cfg.p, &cfg.domain, &cfg.r_grid, &cfg.budget())?),
        false => None,
    };
    for &s in scales.iter().filter(|s| **s != 1.0) {
        let fs = precompose_dilation(&f, s)?;
        for (i, x) in points.iter().enumerate() {
            // G_α f_s(x) = s^α G_α f(δ_s x)
            let a = g_alpha(&fs, x, alpha, &cfg.r_grid, &cfg.ball)?;
            let b = g_alpha(&f, &dilate(s, x)?, alpha, &cfg.r_grid, &cfg.ball)?;
            let k = s.powf(alpha);
            let mut rep = RatioReport::new(format!("g-pointwise[{}]", f.label()), a.value, k * b.value)
                .with_stderr(a.stderr, k * b.stderr)
                .with_sampling(cfg.ball_sampling(a.stderr), cfg.ball_sampling(k * b.stderr))
                .identity(2e-2);
            rep.truncation = (a.truncation_low + a.truncation_high, k * (b.truncation_low + b.truncation_high));
            out.push(cfg.common_params(rep).param("s", s).param("i", i).param("alpha", alpha));
        }
        // ‖G_α f_s‖_p = s^{α − Q/p} ‖G_α f‖_p
        let base = g_base.expect("computed when a non-unit scale exists");
        let a = crate::squarefn::g_alpha_lp_norm(&fs, cfg.n, alpha, cfg.p, &cfg.domain.scaled(1.0 / s), &cfg.r_grid, &cfg.budget())?;
        let k = s.powf(alpha - qd / cfg.p);
        let mut rep = RatioReport::new(format!("g-lp[{}]", f.label()), a.value, k * base.value)
            .with_stderr(a.stderr, k * base.stderr)
            .with_sampling(a.sampling, k * base.sampling)
            .identity(3e-2);
        rep.truncation = (a.tail_bound(), k * base.tail_bound());
        out.push(cfg.common_params(rep).param("s", s).param("alpha", alpha).param("p", cfg.p).param("box_radius", cfg.domain.radius));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Lemma-level comparisons

/// Sweep sizes used by [`run_lemma_suite`].
pub const COMPETITORS: usize = 100;
pub const PLACEMENTS: usize = 100;
pub const DOMINATION_POINTS: usize = 20;
pub const GRADIENT_PAIRS: usize = 50;

fn max_report(name: String, rows: Vec<GuardedRatio>) -> RatioReport {
    let best = rows
        .iter()
        .copied()
        .filter(|g| !g.degenerate)
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .or_else(|| rows.first().copied())
        .unwrap_or(GuardedRatio::new(0.0, 0.0));
    let mut r = RatioReport::from_guarded(name, best).finite();
    r.params.insert("count".into(), rows.len().to_string());
    r
}

/// Near-optimality of `A^d_{x,r}`: max of `⨍|f − A^d_{x,r}| / ⨍|f − A|` over random competitors.
pub fn near_optimality_sweep(f: &ScalarField, cfg: &HarnessConfig, d: u8) -> Result<RatioReport> {
    let mut rng = cfg.rng(0x3000 + u64::from(d));
    let mut rows = Vec::new();
    for _ in 0..10 {
        let x = random_point(&mut rng, cfg.n, 0.8);
        let r = log_uniform(&mut rng, 0.3, 2.0);
        let fit = fit_moment(f, &x, r, d, &cfg.ball)?;
        let scale = crate::quad::ball_integrate(|y| f.eval(y).abs(), &x, r, &cfg.ball)?.value.max(1e-3);
        let comps: Vec<AffineMap> = (0..COMPETITORS / 10)
            .map(|_| {
                let sigma = scale * log_uniform(&mut rng, 1e-3, 2.0);
                let mut a = fit.clone();
                a.b += sigma * rng.gen_range(-1.0..1.0);
                if d == 1 {
                    a.a.iter_mut().for_each(|c| *c += sigma / r * rng.gen_range(-1.0..1.0));
                }
                a
            })
            .collect();
        for a in &comps {
            rows.push(near_optimality_ratio(f, &x, r, d, a, &cfg.ball)?);
        }
    }
    Ok(cfg.common_params(max_report(format!("near-optimality[{}]", f.label()), rows)).param("d", d))
}

/// Max of `β_{f,1}(B(x₁,r₁)) / β_{f,1}(B(x₂,C r₁))` over random contained placements.
pub fn monotonicity_sweep(f: &ScalarField, cfg: &HarnessConfig) -> Result<RatioReport> {
    let c = cfg.monotonicity_c;
    if !(c >= 1.0) {
        return invalid(format!("monotonicity constant must be ≥ 1, got {c}"));
    }
    let mut rng = cfg.rng(0x4000);
    let mut rows = Vec::new();
    for _ in 0..PLACEMENTS {
        let x1 = random_point(&mut rng, cfg.n, 0.8);
        let r1 = log_uniform(&mut rng, 0.2, 1.5);
        // d(x1, x2) = (c − 1) r1 N(v) < r2 − r1
        let v = random_unit_ball_point(&mut rng, cfg.n);
        let x2 = place(&x1, (c - 1.0) * r1, &v);
        rows.push(check_monotonicity(f, (&x1, r1), (&x2, c * r1), 1.0, &cfg.ball)?);
    }
    Ok(cfg.common_params(max_report(format!("monotonicity[{}]", f.label()), rows)).param("C", c))
}

/// Max of `sup_{B(x,r)} |A¹_{x,r} f| / ⨍|f|`, checked against the constant `K`.
pub fn sup_bound_sweep(f: &ScalarField, cfg: &HarnessConfig) -> Result<RatioReport> {
    let k = sup_bound_constant(cfg.n, 1, &cfg.ball)?;
    let mut rng = cfg.rng(0x5000);
    let mut rows = Vec::new();
    for _ in 0..10 {
        let x = random_point(&mut rng, cfg.n, 0.8);
        let r = log_uniform(&mut rng, 0.3, 2.0);
        let fit = fit_moment(f, &x, r, 1, &cfg.ball)?;
        let mean_abs = ball_integrate(|y| f.eval(y).abs(), &x, r, &cfg.ball)?.value;
        rows.push(GuardedRatio::new(fit.sup_on_ball(r), mean_abs));
    }
    let mut rep = max_report(format!("sup-bound[{}]", f.label()), rows);
    rep.passed = rep.passed && rep.ratio <= k * (1.0 + 1e-9);
    Ok(cfg.common_params(rep).param("K", k))
}

/// `G_α f(x) ≤ 2 S_α f(x)` at random points; reports the max of `G / 2S`.
pub fn domination_sweep(f: &ScalarField, cfg: &HarnessConfig, alpha: f64) -> Result<RatioReport> {
    let mut rng = cfg.rng(0x6000);
    let points: Vec<Point> = (0..DOMINATION_POINTS).map(|_| random_point(&mut rng, cfg.n, 1.0)).collect();
    let mut rows = Vec::new();
    let mut ok = true;
    for x in &points {
        let g = g_alpha(f, x, alpha, &cfg.r_grid, &cfg.ball)?;
        let s = s_alpha(f, x, alpha, &cfg.r_grid, &cfg.ball)?;
        ok &= g.value <= 2.0 * s.value + 3.0 * (g.stderr + 2.0 * s.stderr);
        rows.push(GuardedRatio::new(g.value, 2.0 * s.value));
    }
    let mut rep = max_report(format!("domination[{}]", f.label()), rows);
    rep.passed = rep.passed && ok;
    Ok(cfg.common_params(rep).param("alpha", alpha))
}

/// Max of `β_{f,1}(B(x,r)) / (r Σ_j β_{X_j f,0}(B(x,Cr)))` over random `(x, r)`.
pub fn gradient_sweep(f: &ScalarField, cfg: &HarnessConfig) -> Result<RatioReport> {
    let mut rng = cfg.rng(0x7000);
    let pairs: Vec<(Point, f64)> =
        (0..GRADIENT_PAIRS).map(|_| (random_point(&mut rng, cfg.n, 1.0), log_uniform(&mut rng, 0.05, 2.0))).collect();
    let rows = par::try_map_slice(&pairs, |(x, r)| gradient_comparison(f, x, *r, cfg.gradient_c, &cfg.ball))?;
    Ok(cfg.common_params(max_report(format!("gradient-comparison[{}]", f.label()), rows)).param("C", cfg.gradient_c))
}

/// Every lemma-level comparison over the sweep fields.
pub fn run_lemma_suite(cfg: &HarnessConfig) -> Result<Vec<RatioReport>> {
    let mut out = Vec::new();
    for f in cfg.sweep_fields()? {
        for d in [0, 1] {
            out.push(near_optimality_sweep(&f, cfg, d)?);
        }
        out.push(monotonicity_sweep(&f, cfg)?);
        out.push(sup_bound_sweep(&f, cfg)?);
        out.push(domination_sweep(&f, cfg, 0.5)?);
        out.push(gradient_sweep(&f, cfg)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_examples() {
        assert!(gate_exponents(2.0, 2.0, 1).admissible);
        assert!(!gate_exponents(2.0, 4.0, 1).admissible);
        assert!(gate_exponents(1.5, 1.0, 1).admissible);
        // q = pQ/(Q − p) at p = 1.5, Q = 4 is 2.4
        assert!(!gate_exponents(1.5, 2.4, 1).admissible);
        assert!(gate_exponents(1.5, 2.399, 1).admissible);
    }

    #[test]
    fn report_guards_zero() {
        let r = RatioReport::new("x", 0.0, 0.0).identity(1e-2);
        assert!(r.degenerate && r.passed && r.ratio == 0.0);
        let r = RatioReport::new("x", 1.0, 0.0).identity(1e-2);
        assert!(r.degenerate && !r.passed);
    }

    #[test]
    fn z_only_field_has_no_vertical_variation() {
        let f = catalog("quadratic", &Params::new().with("j", "1").with("k", "2"), 1).unwrap();
        let grid = ScaleGrid::new(1e-2, 1.0, 4).unwrap();
        let lhs = poincare_lhs(&f, 1, 2.0, &Domain::new(2.0), &grid, &QuadSpec::grid(6)).unwrap();
        assert_eq!(lhs.value, 0.0);
    }
}
