//! Heisenberg group arithmetic.
//!
//! Points are `(z, t)` with `z ∈ R^{2n}` split as `(x_1..x_n, y_1..y_n)`.
//! The group law is
//!
//! ```text
//! (z, t) · (z', t') = (z + z', t + t' + ½ Σ_j (x_j y'_j − y_j x'_j))
//! ```
//!
//! so that the left-invariant frame is `X_j = ∂_{x_j} − (y_j/2) ∂_t` and
//! `X_{n+j} = ∂_{y_j} + (x_j/2) ∂_t`. Distances use the Korányi gauge
//! `N(z, t) = (|z|⁴ + 16 t²)^{1/4}`.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};
use crate::fields::ScalarField;

/// Horizontal coordinates stored inline for `n ≤ 3`.
pub type Horizontal = SmallVec<[f64; 6]>;

/// A point of `H^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub z: Horizontal,
    pub t: f64,
}

/// Dimension bookkeeping for one computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    n: usize,
}

impl GroupParams {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("n must be at least 1");
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Homogeneous dimension `Q = 2n + 2`.
    pub fn q(&self) -> usize {
        2 * self.n + 2
    }
}

/// Homogeneous dimension for `H^n`.
pub fn homogeneous_dim(n: usize) -> f64 {
    (2 * n + 2) as f64
}

impl Point {
    /// Builds a point from its horizontal part and height.
    pub fn new(z: &[f64], t: f64) -> Result<Self> {
        if z.is_empty() || !z.len().is_multiple_of(2) {
            return invalid(format!(
                "horizontal part must have even positive length, got {}",
                z.len()
            ));
        }
        if !t.is_finite() || z.iter().any(|v| !v.is_finite()) {
            return invalid("point coordinates must be finite");
        }
        Ok(Self { z: SmallVec::from_slice(z), t })
    }

    /// Builds a point from `2n + 1` coordinates, height last.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        match coords.split_last() {
            Some((t, z)) => Self::new(z, *t),
            None => invalid("empty coordinate list"),
        }
    }

    pub fn origin(n: usize) -> Self {
        Self { z: SmallVec::from_elem(0.0, 2 * n), t: 0.0 }
    }

    /// The central element `(0, t)`.
    pub fn vertical(n: usize, t: f64) -> Self {
        Self { z: SmallVec::from_elem(0.0, 2 * n), t }
    }

    pub fn n(&self) -> usize {
        self.z.len() / 2
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut out = self.z.to_vec();
        out.push(self.t);
        out
    }

    pub fn is_origin(&self) -> bool {
        self.t == 0.0 && self.z.iter().all(|&v| v == 0.0)
    }

    fn check_same_n(&self, other: &Point) -> Result<()> {
        if self.z.len() != other.z.len() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: other.n() });
        }
        Ok(())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for v in &self.z {
            write!(f, "{v}, ")?;
        }
        write!(f, "{})", self.t)
    }
}

/// Symplectic term `½ Σ_j (x_j y'_j − y_j x'_j)`.
#[inline]
pub(crate) fn twist(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() / 2;
    let mut s = 0.0;
    for j in 0..n {
        s += a[j] * b[n + j] - a[n + j] * b[j];
    }
    0.5 * s
}

/// Group product without dimension checks; callers guarantee equal `n`.
#[inline]
pub(crate) fn mul_unchecked(a: &Point, b: &Point) -> Point {
    let z = a.z.iter().zip(&b.z).map(|(u, v)| u + v).collect();
    Point { z, t: a.t + b.t + twist(&a.z, &b.z) }
}

/// `x · δ_r(u)`, the image of a centered template node on the ball `B(x, r)`.
#[inline]
pub(crate) fn place(x: &Point, r: f64, u: &Point) -> Point {
    let z = x.z.iter().zip(&u.z).map(|(a, b)| a + r * b).collect();
    Point { z, t: x.t + r * r * u.t + r * twist(&x.z, &u.z) }
}

#[inline]
pub(crate) fn gauge_unchecked(z: &[f64], t: f64) -> f64 {
    let z2: f64 = z.iter().map(|v| v * v).sum();
    (z2 * z2 + 16.0 * t * t).sqrt().sqrt()
}

pub fn group_mul(a: &Point, b: &Point) -> Result<Point> {
    a.check_same_n(b)?;
    Ok(mul_unchecked(a, b))
}

pub fn inverse(a: &Point) -> Point {
    Point { z: a.z.iter().map(|v| -v).collect(), t: -a.t }
}

/// The dilation `δ_s(z, t) = (s z, s² t)`.
pub fn dilate(s: f64, a: &Point) -> Result<Point> {
    if !(s > 0.0 && s.is_finite()) {
        return invalid(format!("dilation factor must be positive, got {s}"));
    }
    Ok(dilate_unchecked(s, a))
}

#[inline]
pub(crate) fn dilate_unchecked(s: f64, a: &Point) -> Point {
    Point { z: a.z.iter().map(|v| s * v).collect(), t: s * s * a.t }
}

/// Korányi gauge `N(z, t) = (|z|⁴ + 16 t²)^{1/4}`.
pub fn gauge(a: &Point) -> f64 {
    gauge_unchecked(&a.z, a.t)
}

/// Left-invariant distance `N(a⁻¹ · b)`.
pub fn distance(a: &Point, b: &Point) -> Result<f64> {
    a.check_same_n(b)?;
    let dz: Horizontal = b.z.iter().zip(&a.z).map(|(v, w)| v - w).collect();
    // a⁻¹·b = (z_b − z_a, t_b − t_a − twist(z_a, z_b))
    let dt = b.t - a.t - twist(&a.z, &b.z);
    Ok(gauge_unchecked(&dz, dt))
}

/// Default finite-difference step `1e-4 · (1 + N(x))`.
pub fn default_step(x: &Point) -> f64 {
    1e-4 * (1.0 + gauge(x))
}

/// Central difference of `eval` along the horizontal direction `j` (0-based,
/// `j < 2n`), taken along the left-translated line `s ↦ x · (s e_j, 0)`.
pub fn finite_difference<F>(eval: F, j: usize, x: &Point, h: f64) -> Result<f64>
where
    F: Fn(&Point) -> f64,
{
    let dim = x.z.len();
    if j >= dim {
        return invalid(format!("horizontal index {j} out of range for 2n = {dim}"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return invalid(format!("step must be positive, got {h}"));
    }
    let mut e = Point::origin(x.n());
    e.z[j] = h;
    let fwd = eval(&mul_unchecked(x, &e));
    e.z[j] = -h;
    let bwd = eval(&mul_unchecked(x, &e));
    let d = (fwd - bwd) / (2.0 * h);
    if !d.is_finite() {
        return Err(Error::NonFinite { context: format!("X_{} difference", j + 1), at: x.clone() });
    }
    Ok(d)
}

/// `X_j f(x)`: the analytic gradient component when the field carries one,
/// otherwise the group-native central difference with step `h`.
pub fn horizontal_derivative(f: &ScalarField, j: usize, x: &Point, h: f64) -> Result<f64> {
    if j >= x.z.len() {
        return invalid(format!("horizontal index {j} out of range for 2n = {}", x.z.len()));
    }
    if let Some(g) = f.hgrad(x) {
        let v = g[j];
        if !v.is_finite() {
            return Err(Error::NonFinite { context: format!("X_{} f", j + 1), at: x.clone() });
        }
        return Ok(v);
    }
    finite_difference(|p| f.eval(p), j, x, h)
}
