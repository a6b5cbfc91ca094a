//! β-numbers `β_{f,d,q}(B(x,r)) = (⨍_{B(x,r)} |f − A^d_{x,r}|^q)^{1/q}` and
//! their profiles across scales.

use serde::{Deserialize, Serialize};

use crate::affine::{check_degree, check_radius, fit_from_values, AffineMap};
use crate::error::{invalid, Result};
use crate::fields::ScalarField;
use crate::hgroup::{distance, Point};
use crate::par;
use crate::quad::{template, BallTemplate, Estimate, QuadSpec, ScaleGrid};

/// Values below this are treated as zero in ratios.
pub const DEGENERATE_EPS: f64 = 1e-12;

pub(crate) fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0 && q.is_finite()) {
        return invalid(format!("q must be a finite real ≥ 1, got {q}"));
    }
    Ok(())
}

/// `(β, Monte Carlo standard error)` from node values on one template.
fn beta_on(tpl: &BallTemplate, vals: &[f64], x: &Point, r: f64, d: u8, q: f64) -> Result<(f64, f64, AffineMap)> {
    let map = fit_from_values(tpl, vals, x, r, d)?;
    let pow: Vec<f64> = tpl
        .nodes()
        .iter()
        .zip(vals)
        .map(|(u, v)| {
            let e = (v - map.eval_template(r, u)).abs();
            if q == 1.0 {
                e
            } else {
                e.powf(q)
            }
        })
        .collect();
    let m = tpl.mean(&pow);
    let se = tpl.mc_stderr(&pow);
    let beta = if q == 1.0 { m } else { m.powf(1.0 / q) };
    let beta_se = if q == 1.0 {
        se
    } else if m > 0.0 {
        se * m.powf(1.0 / q - 1.0) / q
    } else {
        0.0
    };
    Ok((beta, beta_se, map))
}

/// β on one template, with the Richardson estimate for grids.
pub(crate) fn beta_estimate<F>(tpl: &BallTemplate, f: F, x: &Point, r: f64, d: u8, q: f64) -> Result<Estimate>
where
    F: Fn(&Point) -> f64,
{
    let vals = tpl.sample(&f, x, r)?;
    let (value, se, _) = beta_on(tpl, &vals, x, r, d, q)?;
    let stderr = match tpl.coarse() {
        Some(c) => {
            let cv = c.sample(&f, x, r)?;
            (value - beta_on(c, &cv, x, r, d, q)?.0).abs()
        }
        None => se,
    };
    Ok(Estimate { value, stderr })
}

/// `β_{f,d,q}(B(x,r))` with its error estimate.
pub fn beta_number(f: &ScalarField, x: &Point, r: f64, d: u8, q: f64, spec: &QuadSpec) -> Result<Estimate> {
    check_degree(d)?;
    check_radius(r)?;
    check_q(q)?;
    f.check_dimension(x.n())?;
    let tpl = template(x.n(), spec)?;
    beta_estimate(&tpl, |y| f.eval(y), x, r, d, q)
}

/// β at every node of a scale grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaProfile {
    pub x: Point,
    pub d: u8,
    pub q: f64,
    pub grid: ScaleGrid,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
}

pub fn beta_profile(f: &ScalarField, x: &Point, d: u8, q: f64, grid: &ScaleGrid, spec: &QuadSpec) -> Result<BetaProfile> {
    check_degree(d)?;
    check_q(q)?;
    grid.validate()?;
    f.check_dimension(x.n())?;
    let tpl = template(x.n(), spec)?;
    let radii = grid.nodes();
    let est = par::try_map_slice(&radii, |&r| beta_estimate(&tpl, |y| f.eval(y), x, r, d, q))?;
    Ok(BetaProfile {
        x: x.clone(),
        d,
        q,
        grid: *grid,
        values: est.iter().map(|e| e.value).collect(),
        stderrs: est.iter().map(|e| e.stderr).collect(),
        radii,
    })
}

/// Profile at a single point computed serially; used inside loops that are
/// already parallel over points.
pub(crate) fn profile_serial<F>(tpl: &BallTemplate, f: F, x: &Point, d: u8, q: f64, radii: &[f64]) -> Result<Vec<Estimate>>
where
    F: Fn(&Point) -> f64,
{
    radii.iter().map(|&r| beta_estimate(tpl, &f, x, r, d, q)).collect()
}

/// A ratio that may be `0/0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuardedRatio {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, or 0 when `rhs ≤ DEGENERATE_EPS`.
    pub ratio: f64,
    pub degenerate: bool,
}

impl GuardedRatio {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        if rhs <= DEGENERATE_EPS {
            Self { lhs, rhs, ratio: 0.0, degenerate: true }
        } else {
            Self { lhs, rhs, ratio: lhs / rhs, degenerate: false }
        }
    }
}

/// `β_{f,1,q}(B(x₁,r₁)) / β_{f,1,q}(B(x₂,r₂))` for `B(x₁,r₁) ⊂ B(x₂,r₂)`.
pub fn check_monotonicity(
    f: &ScalarField,
    inner: (&Point, f64),
    outer: (&Point, f64),
    q: f64,
    spec: &QuadSpec,
) -> Result<GuardedRatio> {
    let ((x1, r1), (x2, r2)) = (inner, outer);
    check_radius(r1)?;
    check_radius(r2)?;
    let gap = distance(x1, x2)?;
    if gap + r1 > r2 * (1.0 + 1e-12) {
        return invalid(format!("inner ball is not contained in the outer ball: d + r1 = {} > r2 = {r2}", gap + r1));
    }
    let a = beta_number(f, x1, r1, 1, q, spec)?;
    let b = if x1 == x2 && r1 == r2 { a } else { beta_number(f, x2, r2, 1, q, spec)? };
    Ok(GuardedRatio::new(a.value, b.value))
}

/// `⨍|f − A^d_{x,r} f| / ⨍|f − A|` for a competitor `A ∈ A_d`, on common nodes.
pub fn near_optimality_ratio(
    f: &ScalarField,
    x: &Point,
    r: f64,
    d: u8,
    competitor: &AffineMap,
    spec: &QuadSpec,
) -> Result<GuardedRatio> {
    check_degree(d)?;
    check_radius(r)?;
    let tpl = template(x.n(), spec)?;
    let vals = tpl.sample(|y| f.eval(y), x, r)?;
    let (best, _, _) = beta_on(&tpl, &vals, x, r, d, 1.0)?;
    let other: Vec<f64> = tpl.nodes().iter().zip(&vals).map(|(u, v)| (v - competitor.eval_template(r, u)).abs()).collect();
    Ok(GuardedRatio::new(best, tpl.mean(&other)))
}

/// Bound `β_{f,d,q}(B(x,r)) ≤ Σ_i k_i min(S, m_i r^{−e_i})` where `S` is any
/// bound for `sup_{B(x,r)} |f|` (infinite when unknown).
///
/// For `q = 1`: `⨍|f − A| ≤ (2 + d Σ_j ⨍|u_j| / ⨍u_j²) ⨍|f|`.
/// For `q > 1`: `(⨍|f|^q)^{1/q} + sup|A| ≤ (⨍|f|^q)^{1/q} + K ⨍|f|`.
/// In both cases `⨍|f|^q ≤ min(S^q, ‖f‖_q^q / (c_n r^Q))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaBound {
    /// `(k, m, e)` triples.
    pub terms: Vec<(f64, f64, f64)>,
}

impl BetaBound {
    /// Bound valid at every centre.
    pub fn global(&self, r: f64) -> f64 {
        self.terms.iter().map(|(k, m, e)| k * m * r.powf(-e)).sum()
    }

    /// Bound on a ball where `|f| ≤ sup`.
    pub fn with_sup(&self, r: f64, sup: f64) -> f64 {
        self.terms.iter().map(|(k, m, e)| k * sup.min(m * r.powf(-e))).sum()
    }

    /// `(k m, e)` pairs of the global power law.
    pub fn power_terms(&self) -> Vec<(f64, f64)> {
        self.terms.iter().map(|(k, m, e)| (k * m, *e)).collect()
    }
}

/// [`BetaBound`] from the norm bounds of `f`, if it carries them.
pub fn beta_bound(f: &ScalarField, n: usize, d: u8, q: f64, spec: &QuadSpec) -> Result<Option<BetaBound>> {
    let (Some(nq), Some(n1)) = (f.norm_bound(q), f.norm_bound(1.0)) else {
        return Ok(None);
    };
    let c = crate::quad::ball_volume(n, 1.0)?;
    let big_q = crate::hgroup::homogeneous_dim(n);
    let tpl = template(n, spec)?;
    let terms = if q == 1.0 {
        let k = 2.0
            + f64::from(d) * tpl.first_abs_moments().iter().zip(tpl.second_moments()).map(|(a, b)| a / b).sum::<f64>();
        vec![(k, n1 / c, big_q)]
    } else {
        let k = crate::affine::sup_bound_constant(n, d, spec)?;
        vec![(1.0, nq * c.powf(-1.0 / q), big_q / q), (k, n1 / c, big_q)]
    };
    Ok(Some(BetaBound { terms }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{affine_field, catalog, Params};
    use std::f64::consts::PI;

    #[test]
    fn affine_fields_have_zero_beta() {
        let f = affine_field(-2.0, &[1.5, 0.25]);
        let x = Point::from_coords(&[1.0, -1.0, 3.0]).unwrap();
        for q in [1.0, 2.0, 3.5] {
            let b = beta_number(&f, &x, 0.7, 1, q, &QuadSpec::grid(10)).unwrap();
            assert!(b.value <= 1e-10, "{b:?}");
        }
    }

    #[test]
    fn height_beta_equals_abs_mean() {
        let f = ScalarField::new("t", |y: &Point| y.t);
        let spec = QuadSpec::monte_carlo(200_000, 8);
        let b0 = beta_number(&f, &Point::origin(1), 1.0, 0, 1.0, &spec).unwrap();
        let b1 = beta_number(&f, &Point::origin(1), 1.0, 1, 1.0, &spec).unwrap();
        assert!((b0.value - b1.value).abs() < 1e-15);
        let m_t = 1.0 / (3.0 * PI);
        assert!((b0.value - m_t).abs() < 4.0 * b0.stderr, "{b0:?}");
    }

    #[test]
    fn monotone_in_q_on_common_nodes() {
        let f = catalog("gaussian", &Params::new(), 1).unwrap();
        let x = Point::from_coords(&[0.3, 0.1, -0.2]).unwrap();
        let spec = QuadSpec::monte_carlo(4000, 2);
        let mut last = 0.0;
        for q in [1.0, 1.5, 2.0, 4.0] {
            let b = beta_number(&f, &x, 1.3, 1, q, &spec).unwrap().value;
            assert!(b >= last * (1.0 - 1e-12));
            last = b;
        }
    }

    #[test]
    fn identical_balls_give_unit_ratio() {
        let f = catalog("gaussian", &Params::new(), 1).unwrap();
        let x = Point::origin(1);
        let spec = QuadSpec::monte_carlo(2000, 2);
        assert_eq!(check_monotonicity(&f, (&x, 1.0), (&x, 1.0), 1.0, &spec).unwrap().ratio, 1.0);
        assert!(check_monotonicity(&f, (&x, 1.0), (&x, 0.5), 1.0, &spec).is_err());
        let aff = affine_field(1.0, &[1.0, 0.0]);
        let g = check_monotonicity(&aff, (&x, 0.5), (&x, 1.0), 1.0, &QuadSpec::grid(8)).unwrap();
        assert!(g.degenerate && g.ratio == 0.0);
    }

    #[test]
    fn rejects_bad_q() {
        let f = ScalarField::new("c", |_| 1.0);
        assert!(beta_number(&f, &Point::origin(1), 1.0, 1, 0.5, &QuadSpec::grid(4)).is_err());
    }
}
