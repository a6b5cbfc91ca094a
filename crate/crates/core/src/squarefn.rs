//! Square functions
//!
//! ```text
//! G_α f(x) = ( ∫ [r^{−α} β_{f,⌊α⌋}(B(x,r))]² dr/r )^{1/2}
//! S_α f(x) = ( ∫ [r^{−α} ⨍_{B(0,r)} |f(x·y) − f(x)| dy]² dr/r )^{1/2}
//! ```
//!
//! truncated to a [`ScaleGrid`], with bounds on the discarded scale ranges,
//! and the `L^p` norm of `G_α f` over a truncated domain.

use serde::{Deserialize, Serialize};

use crate::beta::{beta_bound, beta_number, BetaBound, check_q, profile_serial, GuardedRatio};
use crate::error::{invalid, Result};
use crate::fields::{gradient_component, ScalarField};
use crate::hgroup::{homogeneous_dim, Point};
use crate::par;
use crate::quad::{
    ball_integrate, ball_volume, log_trapezoid, shell_tail, template, Domain, DomainRule, Estimate, Mode,
    QuadSpec,
    ScaleGrid,
};

/// A truncated square function value with the bounds on what the truncation
/// dropped: `truncation_low` for `r < r_min`, `truncation_high` for `r > r_max`.
/// The untruncated value lies in `[value, value + truncation_low + truncation_high]`
/// up to quadrature error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareFnResult {
    pub x: Point,
    pub alpha: f64,
    pub value: f64,
    pub stderr: f64,
    pub truncation_low: f64,
    pub truncation_high: f64,
    pub grid: ScaleGrid,
}

/// `d = ⌊α⌋`.
pub fn degree_for(alpha: f64) -> u8 {
    if alpha >= 1.0 {
        1
    } else {
        0
    }
}

fn check_alpha(alpha: f64, upper: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < upper) {
        return invalid(format!("alpha must lie in (0, {upper}), got {alpha}"));
    }
    Ok(())
}

/// `(∫_{r_min}^{r_max} [r^{−α} v(r)]² dr/r)^{1/2}` and its propagated error.
fn scale_norm(radii: &[f64], values: &[f64], stderrs: &[f64], grid: &ScaleGrid, alpha: f64) -> (f64, f64) {
    let sq: Vec<f64> = radii.iter().zip(values).map(|(r, v)| (r.powf(-alpha) * v).powi(2)).collect();
    let total = log_trapezoid(&sq, grid).max(0.0);
    let value = total.sqrt();
    if value == 0.0 {
        return (0.0, 0.0);
    }
    // scale errors share one template, so they are summed linearly
    let d: Vec<f64> = radii
        .iter()
        .zip(values.iter().zip(stderrs))
        .map(|(r, (v, s))| 2.0 * r.powf(-2.0 * alpha) * v * s)
        .collect();
    (value, log_trapezoid(&d, grid) / (2.0 * value))
}

/// Head bound from the slope of the first two nodes: `v(r) ≈ v₀ (r/r₀)^k`.
fn low_tail(radii: &[f64], values: &[f64], alpha: f64) -> f64 {
    let (r0, v0) = (radii[0], values[0]);
    if v0 == 0.0 {
        return 0.0;
    }
    if radii.len() < 2 || values[1] <= 0.0 {
        return f64::INFINITY;
    }
    let k = (values[1] / v0).ln() / (radii[1] / r0).ln();
    if k <= alpha {
        return f64::INFINITY;
    }
    v0 * r0.powf(-alpha) / (2.0 * (k - alpha)).sqrt()
}

/// Tail bound from the slope of the last two nodes.
fn high_tail_measured(radii: &[f64], values: &[f64], alpha: f64) -> f64 {
    let m = radii.len();
    let (r1, v1) = (radii[m - 1], values[m - 1]);
    if v1 == 0.0 {
        return 0.0;
    }
    if m < 2 || values[m - 2] <= 0.0 {
        return f64::INFINITY;
    }
    let k = -(v1 / values[m - 2]).ln() / (r1 / radii[m - 2]).ln();
    if k + alpha <= 0.0 {
        return f64::INFINITY;
    }
    v1 * r1.powf(-alpha) / (2.0 * (k + alpha)).sqrt()
}

/// `(∫_R^∞ r^{−2α−1} (Σ A_i r^{−e_i})² dr)^{1/2}` bounded by `(a+b)² ≤ 2a² + 2b²`.
fn power_tail(terms: &[(f64, f64)], from: f64, alpha: f64) -> f64 {
    let s: f64 = terms
        .iter()
        .filter(|(a, _)| *a != 0.0)
        .map(|(a, e)| {
            let k = 2.0 * (alpha + e);
            2.0 * a * a * from.powf(-k) / k
        })
        .sum();
    s.sqrt()
}

/// `G_α f(x)` using `β_{f,⌊α⌋,q}`; `q = 1` is the square function proper.
pub fn g_alpha_q(f: &ScalarField, x: &Point, alpha: f64, q: f64, grid: &ScaleGrid, spec: &QuadSpec) -> Result<SquareFnResult> {
    check_alpha(alpha, 2.0)?;
    check_q(q)?;
    grid.validate()?;
    f.check_dimension(x.n())?;
    let n = x.n();
    let d = degree_for(alpha);
    let tpl = template(n, spec)?;
    let radii = grid.nodes();
    let est = par::try_map_slice(&radii, |&r| crate::beta::beta_estimate(&tpl, |y| f.eval(y), x, r, d, q))?;
    let terms = beta_bound(f, n, d, q, spec)?.map(|b| b.power_terms());
    Ok(assemble(x, alpha, grid, &radii, &est, terms.as_deref()))
}

fn assemble(
    x: &Point,
    alpha: f64,
    grid: &ScaleGrid,
    radii: &[f64],
    est: &[Estimate],
    high_terms: Option<&[(f64, f64)]>,
) -> SquareFnResult {
    let values: Vec<f64> = est.iter().map(|e| e.value).collect();
    let stderrs: Vec<f64> = est.iter().map(|e| e.stderr).collect();
    let (value, stderr) = scale_norm(radii, &values, &stderrs, grid, alpha);
    let truncation_high = match high_terms {
        Some(t) => power_tail(t, grid.r_max, alpha),
        None => high_tail_measured(radii, &values, alpha),
    };
    SquareFnResult {
        x: x.clone(),
        alpha,
        value,
        stderr,
        truncation_low: low_tail(radii, &values, alpha),
        truncation_high,
        grid: *grid,
    }
}

/// `G_α f(x)` with `d = ⌊α⌋` and `q = 1`.
pub fn g_alpha(f: &ScalarField, x: &Point, alpha: f64, grid: &ScaleGrid, spec: &QuadSpec) -> Result<SquareFnResult> {
    g_alpha_q(f, x, alpha, 1.0, grid, spec)
}

/// `S_α f(x)` for `0 < α < 1`.
pub fn s_alpha(f: &ScalarField, x: &Point, alpha: f64, grid: &ScaleGrid, spec: &QuadSpec) -> Result<SquareFnResult> {
    check_alpha(alpha, 1.0)?;
    grid.validate()?;
    f.check_dimension(x.n())?;
    let n = x.n();
    let fx = f.eval(x);
    let radii = grid.nodes();
    // x · B(0, r) = B(x, r), so the centered difference is a ball average at x
    let est = par::try_map_slice(&radii, |&r| ball_integrate(|y| (f.eval(y) - fx).abs(), x, r, spec))?;
    let terms = match f.norm_bound(1.0) {
        // ⨍|f − f(x)| ≤ ‖f‖_1 / (c r^Q) + |f(x)|
        Some(n1) => Some(vec![(n1 / ball_volume(n, 1.0)?, homogeneous_dim(n)), (fx.abs(), 0.0)]),
        None => None,
    };
    Ok(assemble(x, alpha, grid, &radii, &est, terms.as_deref()))
}

/// `‖G_α f‖_{L^p}` over a truncated domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareFnNorm {
    /// Norm of the scale-truncated `G_α f` over the domain.
    pub value: f64,
    pub stderr: f64,
    /// The part of `stderr` due to random sampling.
    pub sampling: f64,
    /// `‖truncation_low + truncation_high‖_{L^p(domain)}`.
    pub scale_tail: f64,
    /// Bound for the scale-truncated `G_α f` outside the domain.
    pub domain_tail: f64,
}

impl SquareFnNorm {
    /// Everything the truncations may have dropped.
    pub fn tail_bound(&self) -> f64 {
        self.scale_tail + self.domain_tail
    }
}

/// Budgets for an `L^p` norm: ball averages and whole-domain nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBudget {
    pub ball: QuadSpec,
    pub domain: QuadSpec,
}

/// `‖G_α f‖_{L^p}` using `β_{f,⌊α⌋,q}`.
pub fn g_alpha_lp_norm_q(
    f: &ScalarField,
    n: usize,
    alpha: f64,
    q: f64,
    p: f64,
    domain: &Domain,
    grid: &ScaleGrid,
    budget: &NormBudget,
) -> Result<SquareFnNorm> {
    check_alpha(alpha, 2.0)?;
    check_q(q)?;
    if !(p > 1.0 && p.is_finite()) {
        return invalid(format!("p must be a finite real > 1, got {p}"));
    }
    grid.validate()?;
    f.check_dimension(n)?;
    let d = degree_for(alpha);
    let tpl = template(n, &budget.ball)?;
    let radii = grid.nodes();
    let bound = beta_bound(f, n, d, q, &budget.ball)?;
    let terms = bound.as_ref().map(|b| b.power_terms());
    let rule = DomainRule::new(n, domain, &budget.domain)?;

    let pointwise = |pts: &[Point]| -> Result<Vec<SquareFnResult>> {
        par::try_map_slice(pts, |x| {
            let est = profile_serial(&tpl, |y| f.eval(y), x, d, q, &radii)?;
            Ok(assemble(x, alpha, grid, &radii, &est, terms.as_deref()))
        })
    };
    let fine = pointwise(&rule.points)?;
    let coarse = match &rule.coarse {
        Some(c) => Some(pointwise(&c.points)?),
        None => None,
    };

    let pow = |v: &[SquareFnResult]| -> Vec<f64> { v.iter().map(|g| g.value.powf(p)).collect() };
    let coarse_pow = coarse.as_ref().map(|c| pow(c));
    let est = rule.integrate(&pow(&fine), coarse_pow.as_deref());
    let value = est.value.max(0.0).powf(1.0 / p);

    let (stderr, sampling) = if value > 0.0 {
        let ball: f64 = fine.iter().zip(&rule.weights).map(|(g, w)| w * g.value.powf(p - 1.0) * g.stderr).sum();
        let ball = ball * value.powf(1.0 - p);
        let quad = est.stderr * value.powf(1.0 - p) / p;
        let random = |mc: bool, e: f64| if mc { e } else { 0.0 };
        (ball + quad, random(budget.ball.mode == Mode::MonteCarlo, ball) + random(rule.monte_carlo, quad))
    } else {
        (0.0, 0.0)
    };

    let scale_tail = {
        let mut acc = 0.0;
        for (g, w) in fine.iter().zip(&rule.weights) {
            let t = g.truncation_low + g.truncation_high;
            if t > 0.0 {
                acc += w * t.powf(p);
            }
        }
        acc.powf(1.0 / p)
    };

    let domain_tail = match &bound {
        Some(b) => shell_tail(n, domain.radius, p, |dist| pointwise_g_bound(f, dist, alpha, grid.r_min, b))?,
        None => f64::INFINITY,
    };
    Ok(SquareFnNorm { value, stderr, sampling, scale_tail, domain_tail })
}

/// Bound for the scale-truncated `G_α f(x)` at gauge `dist`: β is bounded
/// through the decay of `f` on balls that stay at gauge `≥ dist − r`, and
/// through the norm bounds everywhere.
fn pointwise_g_bound(f: &ScalarField, dist: f64, alpha: f64, r_min: f64, bound: &BetaBound) -> f64 {
    const PER_DECADE: f64 = 48.0;
    let r_top = 1e4 * dist.max(1.0);
    let intervals = ((r_top / r_min).log10() * PER_DECADE).ceil() as usize;
    let h = (r_top / r_min).ln() / intervals as f64;
    let rho = f.support_radius();
    let mut acc = 0.0;
    for i in 0..=intervals {
        let r = r_min * (i as f64 * h).exp();
        let sup = match rho {
            Some(rho) if dist - r >= rho => f.decay_at(dist - r).unwrap_or(f64::INFINITY),
            _ => f64::INFINITY,
        };
        let b = bound.with_sup(r, sup);
        let w = if i == 0 || i == intervals { 0.5 * h } else { h };
        acc += w * (r.powf(-alpha) * b).powi(2);
    }
    acc.sqrt() + power_tail(&bound.power_terms(), r_top, alpha)
}

/// `‖G_α f‖_{L^p}` with `q = 1`.
pub fn g_alpha_lp_norm(
    f: &ScalarField,
    n: usize,
    alpha: f64,
    p: f64,
    domain: &Domain,
    grid: &ScaleGrid,
    budget: &NormBudget,
) -> Result<SquareFnNorm> {
    g_alpha_lp_norm_q(f, n, alpha, 1.0, p, domain, grid, budget)
}

/// `β_{f,1}(B(x,r))` against `r Σ_j β_{X_j f,0}(B(x,Cr))`.
///
/// In Monte Carlo mode the enlarged ball gets `C^Q` times the samples, so both
/// balls are sampled at the same density.
pub fn gradient_comparison(f: &ScalarField, x: &Point, r: f64, c: f64, spec: &QuadSpec) -> Result<GuardedRatio> {
    if !(c >= 1.0 && c.is_finite()) {
        return invalid(format!("enlargement constant must be ≥ 1, got {c}"));
    }
    let lhs = beta_number(f, x, r, 1, 1.0, spec)?.value;
    let wide = match spec.mode {
        Mode::MonteCarlo => {
            let factor = c.powf(homogeneous_dim(x.n())).ceil();
            QuadSpec { samples: (spec.samples as f64 * factor).min(usize::MAX as f64) as usize, ..*spec }
        }
        Mode::Grid => *spec,
    };
    let mut rhs = 0.0;
    for j in 0..2 * x.n() {
        rhs += beta_number(&gradient_component(f, j), x, c * r, 0, 1.0, &wide)?.value;
    }
    Ok(GuardedRatio::new(lhs, r * rhs))
}
