//! Scalar fields on `H^n` and the test-function catalog.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use smallvec::smallvec;

use crate::error::{invalid, Error, Result};
use crate::hgroup::{default_step, dilate_unchecked, finite_difference, homogeneous_dim, Horizontal, Point};

type EvalFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&Point) -> Horizontal + Send + Sync>;
type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An evaluatable function `H^n → R` with optional analytic horizontal
/// gradient and decay metadata.
///
/// Decay metadata is stated in terms of the gauge: for `N(x) ≥ support_radius`,
/// `|f(x)| ≤ decay_bound(N(x))` and `|∇_H f(x)| ≤ hgrad_decay_bound(N(x))`.
/// Both bounds must be non-increasing in `N`. `norm_bound(q)` is an upper
/// bound for `‖f‖_{L^q(H^n)}`.
#[derive(Clone)]
pub struct ScalarField {
    label: String,
    n: Option<usize>,
    eval: EvalFn,
    hgrad: Option<GradFn>,
    support_radius: Option<f64>,
    decay_bound: Option<RadialFn>,
    hgrad_decay_bound: Option<RadialFn>,
    norm_bound: Option<RadialFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("analytic_hgrad", &self.hgrad.is_some())
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl ScalarField {
    /// A bare field with no gradient or decay information.
    pub fn new<F>(label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            n: None,
            eval: Arc::new(eval),
            hgrad: None,
            support_radius: None,
            decay_bound: None,
            hgrad_decay_bound: None,
            norm_bound: None,
        }
    }

    pub fn with_dimension(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn with_hgrad<G>(mut self, g: G) -> Self
    where
        G: Fn(&Point) -> Horizontal + Send + Sync + 'static,
    {
        self.hgrad = Some(Arc::new(g));
        self
    }

    pub fn with_decay<D>(mut self, support_radius: f64, bound: D) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.support_radius = Some(support_radius);
        self.decay_bound = Some(Arc::new(bound));
        self
    }

    pub fn with_hgrad_decay<D>(mut self, bound: D) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.hgrad_decay_bound = Some(Arc::new(bound));
        self
    }

    pub fn with_norm_bound<D>(mut self, bound: D) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.norm_bound = Some(Arc::new(bound));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dimension(&self) -> Option<usize> {
        self.n
    }

    #[inline]
    pub fn eval(&self, x: &Point) -> f64 {
        (self.eval)(x)
    }

    /// Analytic horizontal gradient, if the field carries one.
    pub fn hgrad(&self, x: &Point) -> Option<Horizontal> {
        self.hgrad.as_ref().map(|g| g(x))
    }

    pub fn has_analytic_hgrad(&self) -> bool {
        self.hgrad.is_some()
    }

    /// Horizontal gradient, falling back to central differences with the
    /// default step.
    pub fn hgrad_or_fd(&self, x: &Point) -> Result<Horizontal> {
        if let Some(g) = self.hgrad(x) {
            return Ok(g);
        }
        let h = default_step(x);
        (0..x.z.len()).map(|j| finite_difference(|p| self.eval(p), j, x, h)).collect()
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.support_radius
    }

    /// Decay bound at gauge radius `r`, valid for `r ≥ support_radius`.
    pub fn decay_at(&self, r: f64) -> Option<f64> {
        self.decay_bound.as_ref().map(|d| d(r))
    }

    pub fn hgrad_decay_at(&self, r: f64) -> Option<f64> {
        self.hgrad_decay_bound.as_ref().map(|d| d(r))
    }

    /// Upper bound on `‖f‖_{L^q}`.
    pub fn norm_bound(&self, q: f64) -> Option<f64> {
        self.norm_bound.as_ref().map(|d| d(q))
    }

    pub(crate) fn check_dimension(&self, n: usize) -> Result<()> {
        match self.n {
            Some(m) if m != n => Err(Error::DimensionMismatch { expected: m, found: n }),
            _ => Ok(()),
        }
    }
}

/// Flat string parameters for catalog entries.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    pub fn insert(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn require(&self, entry: &str, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::InvalidInput(format!("catalog entry '{entry}' requires parameter '{key}'")))
    }

    fn f64_of(&self, entry: &str, key: &str) -> Result<f64> {
        let raw = self.require(entry, key)?;
        parse_real(raw).ok_or_else(|| Error::InvalidInput(format!("parameter '{key}' is not a finite number: '{raw}'")))
    }

    fn vec_of(&self, entry: &str, key: &str) -> Result<Vec<f64>> {
        let raw = self.require(entry, key)?;
        parse_list(raw).ok_or_else(|| Error::InvalidInput(format!("parameter '{key}' is not a list of numbers: '{raw}'")))
    }

    fn index_of(&self, entry: &str, key: &str, dim: usize) -> Result<usize> {
        let raw = self.require(entry, key)?;
        match raw.trim().parse::<usize>() {
            Ok(j) if (1..=dim).contains(&j) => Ok(j - 1),
            _ => invalid(format!("parameter '{key}' must be an index in 1..={dim}, got '{raw}'")),
        }
    }

    fn only(&self, entry: &str, allowed: &[&str]) -> Result<()> {
        for key in self.0.keys() {
            if !allowed.contains(&key.as_str()) {
                return invalid(format!("unknown parameter '{key}' for catalog entry '{entry}'"));
            }
        }
        Ok(())
    }
}

fn parse_real(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses `1,0`, `(1, 0)` or `1 0`.
pub(crate) fn parse_list(raw: &str) -> Option<Vec<f64>> {
    let inner = raw.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
    inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(parse_real)
        .collect()
}

/// Names accepted by [`catalog`].
pub const CATALOG_NAMES: [&str; 6] = ["gaussian", "bump", "affine", "vertical-wave", "coordinate", "quadratic"];

/// Parameter keys accepted by some catalog entry.
pub const CATALOG_PARAM_KEYS: [&str; 6] = ["omega", "a", "b", "axis", "j", "k"];

/// Sup of `exp(−|z|² − t²)` over the gauge sphere of radius `r`.
///
/// With `a = |z|²` and `16t² = r⁴ − a²`, the exponent `a + (r⁴ − a²)/16` is
/// concave in `a ∈ [0, r²]`, so its minimum sits at an endpoint.
fn gaussian_envelope(r: f64) -> f64 {
    let m = (r * r).min(r.powi(4) / 16.0);
    (-m).exp()
}

/// `‖exp(−|z|² − t²)‖_{L^q(H^n)} = (π/q)^{(2n+1)/(2q)}`.
fn gaussian_norm(n: usize, q: f64) -> f64 {
    (PI / q).powf((2 * n + 1) as f64 / (2.0 * q))
}

/// Builds a catalog field on `H^n`.
///
/// | name            | formula                               | parameters              |
/// |-----------------|---------------------------------------|-------------------------|
/// | `gaussian`      | `exp(−|z|² − t²)`                     | –                       |
/// | `bump`          | `exp(−1/(1 − N²))` on `N < 1`, else 0 | –                       |
/// | `affine`        | `b + a·z`                             | `a` (2n numbers), `b`   |
/// | `vertical-wave` | `exp(−|z|² − t²) sin(ω t)`            | `omega`                 |
/// | `coordinate`    | `z_j` or `t`                          | `axis` (`1..2n` or `t`) |
/// | `quadratic`     | `z_j z_k`                             | `j`, `k` (1-based)      |
pub fn catalog(name: &str, params: &Params, n: usize) -> Result<ScalarField> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    let dim = 2 * n;
    let field = match name {
        "gaussian" => {
            params.only(name, &[])?;
            ScalarField::new("gaussian", |x: &Point| {
                let z2: f64 = x.z.iter().map(|v| v * v).sum();
                (-z2 - x.t * x.t).exp()
            })
            .with_hgrad(move |x: &Point| {
                let z2: f64 = x.z.iter().map(|v| v * v).sum();
                let f = (-z2 - x.t * x.t).exp();
                gaussian_grad(x, f, n)
            })
            .with_decay(0.0, gaussian_envelope)
            .with_hgrad_decay(|r| (2.0 * r + r.powi(3) / 4.0) * gaussian_envelope(r))
            .with_norm_bound(move |q| gaussian_norm(n, q))
        }
        "vertical-wave" => {
            params.only(name, &["omega"])?;
            let omega = params.f64_of(name, "omega")?;
            ScalarField::new(format!("vertical-wave(omega={omega})"), move |x: &Point| {
                let z2: f64 = x.z.iter().map(|v| v * v).sum();
                (-z2 - x.t * x.t).exp() * (omega * x.t).sin()
            })
            .with_hgrad(move |x: &Point| {
                let z2: f64 = x.z.iter().map(|v| v * v).sum();
                let g = (-z2 - x.t * x.t).exp();
                let (s, c) = (omega * x.t).sin_cos();
                // X_j(g sin ωt) = sin ωt · X_j g + ω g cos ωt · X_j t
                let mut out = gaussian_grad(x, g * s, n);
                for j in 0..n {
                    out[j] += omega * g * c * (-0.5 * x.z[n + j]);
                    out[n + j] += omega * g * c * (0.5 * x.z[j]);
                }
                out
            })
            .with_decay(0.0, gaussian_envelope)
            .with_hgrad_decay(move |r| (2.0 * r + r.powi(3) / 4.0 + omega.abs() * r / 2.0) * gaussian_envelope(r))
            .with_norm_bound(move |q| gaussian_norm(n, q))
        }
        "bump" => {
            params.only(name, &[])?;
            let vol = crate::quad::ball_volume(n, 1.0).unwrap_or(f64::INFINITY);
            ScalarField::new("bump", |x: &Point| {
                let z2: f64 = x.z.iter().map(|v| v * v).sum();
                let s = (z2 * z2 + 16.0 * x.t * x.t).sqrt();
                if s < 1.0 {
                    (-1.0 / (1.0 - s)).exp()
                } else {
                    0.0
                }
            })
            .with_hgrad(move |x: &Point| {
                let z2: f64 = x.z.iter().map(|v| v * v).sum();
                let s = (z2 * z2 + 16.0 * x.t * x.t).sqrt();
                let mut out: Horizontal = smallvec![0.0; 2 * n];
                if s >= 1.0 || s == 0.0 {
                    return out;
                }
                let f = (-1.0 / (1.0 - s)).exp();
                // f = exp(−1/(1 − √w)), w = |z|⁴ + 16t², df/dw = −f / (2√w (1 − √w)²)
                let dfdw = -f / (2.0 * s * (1.0 - s) * (1.0 - s));
                for j in 0..n {
                    let (xj, yj) = (x.z[j], x.z[n + j]);
                    out[j] = dfdw * (4.0 * z2 * xj - 16.0 * x.t * yj);
                    out[n + j] = dfdw * (4.0 * z2 * yj + 16.0 * x.t * xj);
                }
                out
            })
            .with_decay(1.0, |_| 0.0)
            .with_hgrad_decay(|_| 0.0)
            // sup f = e^{-1}; a 1% allowance covers the cached volume constant
            .with_norm_bound(move |q| (-1.0f64).exp() * (1.01 * vol).powf(1.0 / q))
        }
        "affine" => {
            params.only(name, &["a", "b"])?;
            let a = params.vec_of(name, "a")?;
            if a.len() != dim {
                return invalid(format!("parameter 'a' must have 2n = {dim} entries, got {}", a.len()));
            }
            let b = params.f64_of(name, "b")?;
            affine_field(b, &a)
        }
        "coordinate" => {
            params.only(name, &["axis"])?;
            let raw = params.require(name, "axis")?;
            if raw.trim() == "t" {
                ScalarField::new("coordinate(t)", |x: &Point| x.t).with_hgrad(move |x: &Point| {
                    let mut g: Horizontal = smallvec![0.0; 2 * n];
                    for j in 0..n {
                        g[j] = -0.5 * x.z[n + j];
                        g[n + j] = 0.5 * x.z[j];
                    }
                    g
                })
            } else {
                let j = params.index_of(name, "axis", dim)?;
                ScalarField::new(format!("coordinate(z{})", j + 1), move |x: &Point| x.z[j]).with_hgrad(
                    move |_x: &Point| {
                        let mut g: Horizontal = smallvec![0.0; 2 * n];
                        g[j] = 1.0;
                        g
                    },
                )
            }
        }
        "quadratic" => {
            params.only(name, &["j", "k"])?;
            let j = params.index_of(name, "j", dim)?;
            let k = params.index_of(name, "k", dim)?;
            ScalarField::new(format!("quadratic(z{} z{})", j + 1, k + 1), move |x: &Point| x.z[j] * x.z[k])
                .with_hgrad(move |x: &Point| {
                    let mut g: Horizontal = smallvec![0.0; 2 * n];
                    g[j] += x.z[k];
                    g[k] += x.z[j];
                    g
                })
        }
        other => {
            return invalid(format!("unknown catalog entry '{other}' (expected one of {})", CATALOG_NAMES.join(", ")))
        }
    };
    Ok(field.with_dimension(n))
}

/// `b + a · z` with analytic gradient `a`.
pub fn affine_field(b: f64, a: &[f64]) -> ScalarField {
    let coeffs: Horizontal = a.iter().copied().collect();
    let grad = coeffs.clone();
    ScalarField::new("affine", move |x: &Point| b + coeffs.iter().zip(&x.z).map(|(c, v)| c * v).sum::<f64>())
        .with_hgrad(move |_| grad.clone())
        .with_dimension(a.len() / 2)
}

/// Horizontal gradient of `exp(−|z|² − t²)` scaled so that the value is `f`.
fn gaussian_grad(x: &Point, f: f64, n: usize) -> Horizontal {
    let mut g: Horizontal = smallvec![0.0; 2 * n];
    for j in 0..n {
        let (xj, yj) = (x.z[j], x.z[n + j]);
        // X_j = ∂_{x_j} − (y_j/2) ∂_t,  X_{n+j} = ∂_{y_j} + (x_j/2) ∂_t
        g[j] = f * (-2.0 * xj + x.t * yj);
        g[n + j] = f * (-2.0 * yj - x.t * xj);
    }
    g
}

/// `x ↦ f(x · (0, t))`.
///
/// `(0, t)` is central, so the horizontal gradient is the translated gradient.
pub fn vertical_translate(f: &ScalarField, t: f64) -> ScalarField {
    let eval = f.eval.clone();
    let mut out = ScalarField::new(format!("{}∘τ({t})", f.label), move |x: &Point| {
        let y = Point { z: x.z.clone(), t: x.t + t };
        eval(&y)
    });
    out.n = f.n;
    if let Some(g) = f.hgrad.clone() {
        out = out.with_hgrad(move |x: &Point| g(&Point { z: x.z.clone(), t: x.t + t }));
    }
    // N(x·(0,t)) ≥ N(x) − 2√|t|
    let shift = 2.0 * t.abs().sqrt();
    if let (Some(rho), Some(d)) = (f.support_radius, f.decay_bound.clone()) {
        out = out.with_decay(rho + shift, move |r| d((r - shift).max(0.0)));
    }
    if let Some(d) = f.hgrad_decay_bound.clone() {
        out = out.with_hgrad_decay(move |r| d((r - shift).max(0.0)));
    }
    if let Some(nb) = f.norm_bound.clone() {
        out.norm_bound = Some(nb);
    }
    out
}

/// `f_s = f ∘ δ_s`.
pub fn precompose_dilation(f: &ScalarField, s: f64) -> Result<ScalarField> {
    if !(s > 0.0 && s.is_finite()) {
        return invalid(format!("dilation factor must be positive, got {s}"));
    }
    let eval = f.eval.clone();
    let mut out = ScalarField::new(format!("{}∘δ({s})", f.label), move |x: &Point| eval(&dilate_unchecked(s, x)));
    out.n = f.n;
    if let Some(g) = f.hgrad.clone() {
        out = out.with_hgrad(move |x: &Point| {
            let mut v = g(&dilate_unchecked(s, x));
            v.iter_mut().for_each(|c| *c *= s);
            v
        });
    }
    if let (Some(rho), Some(d)) = (f.support_radius, f.decay_bound.clone()) {
        out = out.with_decay(rho / s, move |r| d(s * r));
    }
    if let Some(d) = f.hgrad_decay_bound.clone() {
        out = out.with_hgrad_decay(move |r| s * d(s * r));
    }
    if let (Some(nb), Some(n)) = (f.norm_bound.clone(), f.n) {
        let qd = homogeneous_dim(n);
        out = out.with_norm_bound(move |q| s.powf(-qd / q) * nb(q));
    }
    Ok(out)
}

/// The field `X_j f` (0-based `j`), analytic when available.
pub fn gradient_component(f: &ScalarField, j: usize) -> ScalarField {
    let src = f.clone();
    let mut out = ScalarField::new(format!("X{} {}", j + 1, f.label), move |x: &Point| {
        if let Some(g) = src.hgrad(x) {
            return g[j];
        }
        let src2 = src.clone();
        finite_difference(move |p| src2.eval(p), j, x, default_step(x)).unwrap_or(f64::NAN)
    });
    out.n = f.n;
    if let (Some(rho), Some(d)) = (f.support_radius, f.hgrad_decay_bound.clone()) {
        out = out.with_decay(rho, move |r| d(r));
    }
    out
}
