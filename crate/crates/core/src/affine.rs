//! Projection of a field onto `A_d`, the polynomials of degree `≤ d` in the
//! horizontal variables, over a Korányi ball.
//!
//! On the template node `u` mapped to `y = x · δ_r(u)` the horizontal offset is
//! `y_j − x_j = r u_j`, so every moment is a template moment scaled by `r`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fields::ScalarField;
use crate::hgroup::Point;
use crate::quad::{template, BallTemplate, Estimate, QuadSpec};

/// `y ↦ b + Σ_j a_j (y_j − x_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub degree: u8,
    pub base: Point,
    pub b: f64,
    pub a: Vec<f64>,
}

impl AffineMap {
    pub fn constant(base: Point, b: f64) -> Self {
        let a = vec![0.0; base.z.len()];
        Self { degree: 0, base, b, a }
    }

    pub fn eval(&self, y: &Point) -> f64 {
        self.b + self.a.iter().zip(y.z.iter().zip(&self.base.z)).map(|(a, (v, w))| a * (v - w)).sum::<f64>()
    }

    /// Value at the image of template node `u` on `B(base, r)`.
    #[inline]
    pub(crate) fn eval_template(&self, r: f64, u: &Point) -> f64 {
        self.b + r * self.a.iter().zip(&u.z).map(|(a, v)| a * v).sum::<f64>()
    }

    /// `sup_{B(base, r)} |A|`. The horizontal shadow of a Korányi ball is the
    /// Euclidean ball of the same radius, so this is `|b| + r |a|`.
    pub fn sup_on_ball(&self, r: f64) -> f64 {
        self.b.abs() + r * self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// The map as a [`ScalarField`].
    pub fn to_field(&self) -> ScalarField {
        let me = self.clone();
        let grad: crate::hgroup::Horizontal = self.a.iter().copied().collect();
        ScalarField::new("fitted-affine", move |y: &Point| me.eval(y))
            .with_hgrad(move |_| grad.clone())
            .with_dimension(self.base.n())
    }
}

pub(crate) fn check_degree(d: u8) -> Result<()> {
    if d > 1 {
        return invalid(format!("degree must be 0 or 1, got {d}"));
    }
    Ok(())
}

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return invalid(format!("radius must be positive, got {r}"));
    }
    Ok(())
}

/// Closed-form fit from node values `vals` of `f` on `B(x, r)`.
pub(crate) fn fit_from_values(tpl: &BallTemplate, vals: &[f64], x: &Point, r: f64, d: u8) -> Result<AffineMap> {
    let b = tpl.mean(vals);
    let mut map = AffineMap::constant(x.clone(), b);
    if d == 0 {
        return Ok(map);
    }
    map.degree = 1;
    let count = vals.len() as f64;
    for (j, m2) in tpl.second_moments().iter().enumerate() {
        if !(*m2 > 0.0) {
            return Err(Error::Numeric(format!("vanishing second moment along axis {}", j + 1)));
        }
        let num = tpl.nodes().iter().zip(vals).map(|(u, v)| v * u.z[j]).sum::<f64>() / count;
        map.a[j] = num / (r * m2);
    }
    Ok(map)
}

/// `A^d_{x,r}` by the closed-form moment formulas
/// `a_j = ⨍ f (y_j − x_j) / ⨍ (y_j − x_j)²`, `b = ⨍ f`.
pub fn fit_moment(f: &ScalarField, x: &Point, r: f64, d: u8, spec: &QuadSpec) -> Result<AffineMap> {
    check_degree(d)?;
    check_radius(r)?;
    f.check_dimension(x.n())?;
    let tpl = template(x.n(), spec)?;
    let vals = tpl.sample(|y| f.eval(y), x, r)?;
    fit_from_values(&tpl, &vals, x, r, d)
}

/// `A^d_{x,r}` by solving the Gram system of `{1, y_1 − x_1, …, y_{2n} − x_{2n}}`.
pub fn fit_normal_equations(f: &ScalarField, x: &Point, r: f64, d: u8, spec: &QuadSpec) -> Result<AffineMap> {
    check_degree(d)?;
    check_radius(r)?;
    f.check_dimension(x.n())?;
    let tpl = template(x.n(), spec)?;
    let vals = tpl.sample(|y| f.eval(y), x, r)?;
    let k = if d == 0 { 1 } else { x.z.len() + 1 };
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    let mut m = vec![0.0; k];
    for (u, v) in tpl.nodes().iter().zip(&vals) {
        m[0] = 1.0;
        for j in 1..k {
            m[j] = r * u.z[j - 1];
        }
        for i in 0..k {
            rhs[i] += v * m[i];
            for l in 0..k {
                gram[(i, l)] += m[i] * m[l];
            }
        }
    }
    let count = vals.len() as f64;
    gram /= count;
    rhs /= count;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numeric("singular Gram matrix for the affine projection".into()))?;
    let c = chol.solve(&rhs);
    let mut map = AffineMap::constant(x.clone(), c[0]);
    if d == 1 {
        map.degree = 1;
        for j in 1..k {
            map.a[j - 1] = c[j];
        }
    }
    Ok(map)
}

/// `⨍_{B(x,r)} (f − A) m_k` over the basis `m_0 = 1`, `m_k = y_k − x_k`,
/// with standard errors.
pub fn residual_orthogonality_estimates(
    f: &ScalarField,
    map: &AffineMap,
    x: &Point,
    r: f64,
    spec: &QuadSpec,
) -> Result<Vec<Estimate>> {
    check_radius(r)?;
    f.check_dimension(x.n())?;
    let tpl = template(x.n(), spec)?;
    let resid: Vec<f64> = tpl
        .sample(|y| f.eval(y) - map.eval(y), x, r)?;
    let coarse_resid = match tpl.coarse() {
        Some(c) => Some((c.clone(), c.sample(|y| f.eval(y) - map.eval(y), x, r)?)),
        None => None,
    };
    let moment = |t: &BallTemplate, vals: &[f64], k: usize| -> (f64, Vec<f64>) {
        let prod: Vec<f64> =
            t.nodes().iter().zip(vals).map(|(u, v)| if k == 0 { *v } else { v * r * u.z[k - 1] }).collect();
        (t.mean(&prod), prod)
    };
    let mut out = Vec::with_capacity(x.z.len() + 1);
    for k in 0..=x.z.len() {
        let (value, prod) = moment(&tpl, &resid, k);
        let stderr = match &coarse_resid {
            Some((c, cv)) => (value - moment(c, cv, k).0).abs(),
            None => tpl.mc_stderr(&prod),
        };
        out.push(Estimate { value, stderr });
    }
    Ok(out)
}

/// The values of [`residual_orthogonality_estimates`].
pub fn residual_orthogonality(
    f: &ScalarField,
    map: &AffineMap,
    x: &Point,
    r: f64,
    spec: &QuadSpec,
) -> Result<Vec<f64>> {
    Ok(residual_orthogonality_estimates(f, map, x, r, spec)?.into_iter().map(|e| e.value).collect())
}

/// Constant `K` with `sup_{B(x,r)} |A^d_{x,r} f| ≤ K ⨍_{B(x,r)} |f|` for the
/// given quadrature: `|b| ≤ ⨍|f|` and `r |a_j| ≤ ⨍|f| / ⨍ u_j²`.
pub fn sup_bound_constant(n: usize, d: u8, spec: &QuadSpec) -> Result<f64> {
    check_degree(d)?;
    let tpl = template(n, spec)?;
    if d == 0 {
        return Ok(1.0);
    }
    Ok(1.0 + tpl.second_moments().iter().map(|m| m.powi(-2)).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{affine_field, catalog, Params};
    use approx::assert_abs_diff_eq;

    fn p(c: &[f64]) -> Point {
        Point::from_coords(c).unwrap()
    }

    #[test]
    fn constants_are_fixed() {
        let f = ScalarField::new("c", |_| 3.5);
        for d in [0, 1] {
            let m = fit_moment(&f, &p(&[1.0, 2.0, -1.0]), 0.4, d, &QuadSpec::grid(10)).unwrap();
            assert_abs_diff_eq!(m.b, 3.5, epsilon = 1e-12);
            assert!(m.a.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn first_coordinate_is_reproduced() {
        let f = ScalarField::new("z1", |y: &Point| y.z[0]);
        let m = fit_moment(&f, &Point::origin(1), 1.0, 1, &QuadSpec::grid(12)).unwrap();
        assert_abs_diff_eq!(m.a[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.a[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.b, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn height_projects_to_zero() {
        let f = ScalarField::new("t", |y: &Point| y.t);
        for spec in [QuadSpec::grid(12), QuadSpec::monte_carlo(2000, 3)] {
            let m = fit_moment(&f, &Point::origin(1), 1.0, 1, &spec).unwrap();
            assert!(m.b.abs() < 1e-14 && m.a.iter().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn paths_agree_and_recover_affine() {
        let x = p(&[0.5, -1.0, 2.0]);
        let f = affine_field(0.7, &[2.0, -3.0]);
        let spec = QuadSpec::grid(12);
        let m = fit_moment(&f, &x, 0.8, 1, &spec).unwrap();
        let g = fit_normal_equations(&f, &x, 0.8, 1, &spec).unwrap();
        let expect_b = f.eval(&x);
        for map in [&m, &g] {
            assert_abs_diff_eq!(map.b, expect_b, epsilon = 1e-10);
            assert_abs_diff_eq!(map.a[0], 2.0, epsilon = 1e-10);
            assert_abs_diff_eq!(map.a[1], -3.0, epsilon = 1e-10);
        }
        let gauss = catalog("gaussian", &Params::new(), 1).unwrap();
        let a = fit_moment(&gauss, &Point::origin(1), 1.0, 1, &spec).unwrap();
        let b = fit_normal_equations(&gauss, &Point::origin(1), 1.0, 1, &spec).unwrap();
        assert!(((a.b - b.b) / a.b).abs() < 1e-6);
    }

    #[test]
    fn square_of_coordinate() {
        let f = ScalarField::new("z1^2", |y: &Point| y.z[0] * y.z[0]);
        let spec = QuadSpec::grid(16);
        let m = fit_normal_equations(&f, &Point::origin(1), 1.0, 1, &spec).unwrap();
        let tpl = template(1, &spec).unwrap();
        assert_abs_diff_eq!(m.b, tpl.second_moments()[0], epsilon = 1e-12);
        assert!(m.a.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn perturbed_fit_shows_in_residual() {
        let f = affine_field(1.0, &[1.0, 1.0]);
        let spec = QuadSpec::grid(10);
        let x = Point::origin(1);
        let mut m = fit_moment(&f, &x, 1.0, 1, &spec).unwrap();
        let res = residual_orthogonality(&f, &m, &x, 1.0, &spec).unwrap();
        assert!(res.iter().all(|v| v.abs() < 1e-10));
        m.b += 1.0;
        let res = residual_orthogonality(&f, &m, &x, 1.0, &spec).unwrap();
        assert_abs_diff_eq!(res[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn eval_ignores_height() {
        let m = AffineMap { degree: 1, base: p(&[1.0, 1.0, 1.0]), b: 2.0, a: vec![3.0, -1.0] };
        assert_eq!(m.eval(&p(&[2.0, 0.0, 5.0])), m.eval(&p(&[2.0, 0.0, -9.0])));
        assert_abs_diff_eq!(m.sup_on_ball(1.0), 2.0 + 10f64.sqrt());
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = ScalarField::new("c", |_| 1.0);
        assert!(fit_moment(&f, &Point::origin(1), 1.0, 2, &QuadSpec::grid(4)).is_err());
        assert!(fit_moment(&f, &Point::origin(1), 0.0, 1, &QuadSpec::grid(4)).is_err());
    }
}
