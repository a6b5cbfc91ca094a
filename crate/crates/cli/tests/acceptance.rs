//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs every criterion by default; pass criterion numbers as arguments to run
//! a subset, e.g. `cargo test --release --test acceptance -- 1 8`.

use std::collections::BTreeMap;
use std::error::Error;
use std::process::{Command, ExitCode};
use std::time::Instant;

use heis_beta::affine::{fit_moment, fit_normal_equations, residual_orthogonality_estimates};
use heis_beta::beta::beta_number;
use heis_beta::fields::{affine_field, precompose_dilation};
use heis_beta::hgroup::{dilate, distance, gauge, group_mul, inverse};
use heis_beta::verify::{gate_exponents, poincare_ratio, run_dorronsoro_suite, run_identity_suite, run_lemma_suite, HarnessConfig};
use heis_beta::{catalog, Params, Point, QuadSpec, ScalarField, ScaleGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Res<T> = Result<T, Box<dyn Error>>;

/// Whether a criterion held, with a one-line summary of what was measured.
struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Res<Verdict> {
    Ok(Verdict { pass, detail: detail.into() })
}

fn fixtures() -> Res<BTreeMap<String, f64>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/reference.json");
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let values = doc["values"].as_object().ok_or("fixture file has no `values` object")?;
    Ok(values.iter().filter_map(|(k, v)| v.as_f64().map(|v| (k.clone(), v))).collect())
}

/// `v` within a factor `3` of the fixture value.
fn within_drift(v: f64, fixture: f64) -> bool {
    v.is_finite() && fixture > 0.0 && v >= fixture / 3.0 && v <= 3.0 * fixture
}

fn field(name: &str, params: &[(&str, &str)]) -> Res<ScalarField> {
    let p = params.iter().fold(Params::new(), |p, (k, v)| p.with(k, *v));
    Ok(catalog(name, &p, 1)?)
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, half: f64) -> Point {
    let z: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-half..half)).collect();
    Point::new(&z, rng.gen_range(-half..half)).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Largest coordinate error relative to `1 + |coordinate|`.
fn point_err(a: &Point, b: &Point) -> f64 {
    a.coords().iter().zip(b.coords()).map(|(x, y)| (x - y).abs() / (1.0 + x.abs().max(y.abs()))).fold(0.0, f64::max)
}

fn c1_group_axioms() -> Res<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let n = 1 + i % 3;
        let (a, b, c) = (random_point(&mut rng, n, 4.0), random_point(&mut rng, n, 4.0), random_point(&mut rng, n, 4.0));
        let o = Point::origin(n);
        let ab = group_mul(&a, &b)?;
        worst = worst.max(point_err(&group_mul(&ab, &c)?, &group_mul(&a, &group_mul(&b, &c)?)?));
        worst = worst.max(point_err(&group_mul(&a, &o)?, &a)).max(point_err(&group_mul(&o, &a)?, &a));
        worst = worst.max(point_err(&group_mul(&a, &inverse(&a))?, &o)).max(point_err(&group_mul(&inverse(&a), &a)?, &o));
        let d = distance(&a, &b)?;
        worst = worst.max(rel(distance(&group_mul(&c, &a)?, &group_mul(&c, &b)?)?, d));
        let s = (rng.gen_range(-3.0..3.0f64)).exp();
        worst = worst.max(rel(gauge(&dilate(s, &a)?), s * gauge(&a)));
    }
    verdict(worst <= 1e-12, format!("max relative error {worst:.2e} over 10^4 cases"))
}

fn c2_projection() -> Res<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let grid = QuadSpec::grid(16);
    let mc = QuadSpec::monte_carlo(4096, 5);
    let (mut coef, mut orth_grid, mut agree, mut orth_mc): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let fields = [field("gaussian", &[])?, field("bump", &[])?, field("vertical-wave", &[("omega", "4")])?];
    for _ in 0..20 {
        let x = random_point(&mut rng, 1, 1.0);
        let r = rng.gen_range(0.2..2.0);
        let (b, a) = (rng.gen_range(-3.0..3.0), vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]);
        let af = affine_field(b, &a);
        let b_x = b + a[0] * x.z[0] + a[1] * x.z[1];
        for fit in [fit_moment(&af, &x, r, 1, &grid)?, fit_normal_equations(&af, &x, r, 1, &grid)?] {
            coef = coef.max((fit.b - b_x).abs() / (1.0 + b_x.abs()));
            for (u, v) in fit.a.iter().zip(&a) {
                coef = coef.max((u - v).abs() / (1.0 + v.abs()));
            }
        }
        for f in &fields {
            for d in [0, 1] {
                let m = fit_moment(f, &x, r, d, &grid)?;
                let e = fit_normal_equations(f, &x, r, d, &grid)?;
                let scale = m.sup_on_ball(r).max(f64::MIN_POSITIVE);
                agree = agree.max((m.b - e.b).abs() / scale);
                for (u, v) in m.a.iter().zip(&e.a) {
                    agree = agree.max(r * (u - v).abs() / scale);
                }
                let k = if d == 0 { 1 } else { 3 };
                for est in residual_orthogonality_estimates(f, &m, &x, r, &grid)?.iter().take(k) {
                    orth_grid = orth_grid.max(est.value.abs());
                }
                let m = fit_moment(f, &x, r, d, &mc)?;
                for est in residual_orthogonality_estimates(f, &m, &x, r, &mc)?.iter().take(k) {
                    if est.value.abs() > 0.0 {
                        orth_mc = orth_mc.max(est.value.abs() / (3.0 * est.stderr));
                    }
                }
            }
        }
    }
    verdict(
        coef <= 1e-10 && orth_grid <= 1e-10 && agree <= 1e-6 && orth_mc <= 1.0,
        format!(
            "affine coefficients {coef:.1e}, orthogonality grid {orth_grid:.1e} / mc {orth_mc:.2} of 3 stderr, fit agreement {agree:.1e}"
        ),
    )
}

fn c3_beta() -> Res<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = QuadSpec::grid(16);
    let mut affine_max: f64 = 0.0;
    for _ in 0..20 {
        let x = random_point(&mut rng, 1, 2.0);
        let r = rng.gen_range(0.1..3.0);
        let f = affine_field(rng.gen_range(-3.0..3.0), &[rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]);
        for q in [1.0, 2.0] {
            affine_max = affine_max.max(beta_number(&f, &x, r, 1, q, &grid)?.value);
        }
    }
    let spec = QuadSpec::monte_carlo(100_000, 11);
    let fields = [field("gaussian", &[])?, field("bump", &[])?, field("vertical-wave", &[("omega", "4")])?];
    let mut cov: f64 = 0.0;
    for f in &fields {
        for s in [0.5, 2.0, 4.0] {
            let fs = precompose_dilation(f, s)?;
            for _ in 0..3 {
                let x = random_point(&mut rng, 1, 0.5);
                let r = rng.gen_range(0.5..1.5);
                for q in [1.0, 2.0] {
                    let a = beta_number(&fs, &x, r, 1, q, &spec)?.value;
                    let b = beta_number(f, &dilate(s, &x)?, s * r, 1, q, &spec)?.value;
                    cov = cov.max((a / b - 1.0).abs());
                }
            }
        }
    }
    verdict(
        affine_max <= 1e-10 && cov <= 1e-2,
        format!("affine β max {affine_max:.1e}; covariance |ratio − 1| max {cov:.1e} (s = 0.5, 2, 4; 10^5 samples)"),
    )
}

fn c4_equivariance() -> Res<Verdict> {
    let cfg = HarnessConfig::default();
    let rows: Vec<_> =
        run_identity_suite(&cfg)?.into_iter().filter(|r| r.name.starts_with("g-pointwise") || r.name.starts_with("g-lp")).collect();
    let worst = |prefix: &str| rows.iter().filter(|r| r.name.starts_with(prefix)).map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
    let pass = rows.len() == 8 && rows.iter().all(|r| r.passed);
    verdict(
        pass,
        format!("pointwise |ratio − 1| max {:.1e} (tol 2e-2), L^p law {:.1e} (tol 3e-2)", worst("g-pointwise"), worst("g-lp")),
    )
}

fn c5_lemmas() -> Res<Verdict> {
    let fix = fixtures()?;
    let cfg = HarnessConfig::default();
    let mut failed = Vec::new();
    let rows = run_lemma_suite(&cfg)?;
    for r in &rows {
        let locked = fix.get(&r.key()).copied();
        let ok = r.passed && locked.is_some_and(|v| within_drift(r.ratio, v));
        if !ok {
            failed.push(format!("{} = {} (fixture {:?})", r.key(), r.ratio, locked));
        }
    }
    let dom = rows.iter().filter(|r| r.name.starts_with("domination")).map(|r| r.ratio).fold(0.0, f64::max);
    match failed.is_empty() {
        true => verdict(true, format!("{} sweeps finite and within 3x of fixtures; max G/2S = {dom:.3}", rows.len())),
        false => verdict(false, failed.join("; ")),
    }
}

fn c6_dorronsoro() -> Res<Verdict> {
    let fix = fixtures()?;
    let cfg = HarnessConfig { r_grid: ScaleGrid::new(1e-3, 1e3, 16)?, ..HarnessConfig::default() };
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, params) in [("gaussian", &[][..]), ("vertical-wave", &[("omega", "4")][..])] {
        let mut c = cfg.clone();
        c.field = name.into();
        c.params = params.iter().fold(Params::new(), |p, (k, v)| p.with(k, *v));
        let rows = run_dorronsoro_suite(&c)?;
        let (ratios, stability) = rows.split_at(rows.len() - 1);
        let base = &ratios[0];
        let key = format!("dorronsoro[{}]", c.field()?.label());
        let locked = fix.get(&key).copied().ok_or_else(|| format!("missing fixture `{key}`"))?;
        let trunc = ratios.iter().map(|r| (r.truncation.0 / r.lhs).max(r.truncation.1 / r.rhs)).fold(0.0, f64::max);
        let ok = ratios.iter().all(|r| r.passed) && stability[0].passed && within_drift(base.ratio, locked) && trunc < 0.05;
        pass &= ok;
        notes.push(format!(
            "{key}: ratio {:.4} (fixture {locked:.4}), spread {:.4}, truncation {:.1}%",
            base.ratio,
            stability[0].ratio,
            100.0 * trunc
        ));
    }
    verdict(pass, notes.join("; "))
}

fn c7_poincare() -> Res<Verdict> {
    let fix = fixtures()?;
    let cfg = HarnessConfig::default();
    let mut fields = vec![field("gaussian", &[])?];
    for omega in ["1", "4", "16"] {
        fields.push(field("vertical-wave", &[("omega", omega)])?);
    }
    let mut pass = true;
    let mut notes = Vec::new();
    for f in &fields {
        let r = poincare_ratio(f, &cfg)?;
        let locked = fix.get(&r.key()).copied();
        pass &= r.passed && locked.is_some_and(|v| within_drift(r.ratio, v));
        notes.push(format!("{} {:.3}", f.label(), r.ratio));
    }
    let mut z_only: f64 = 0.0;
    for f in [field("coordinate", &[("axis", "1")])?, field("quadratic", &[("j", "1"), ("k", "2")])?, field("affine", &[("a", "1,-2"), ("b", "3")])?] {
        z_only = z_only.max(poincare_ratio(&f, &cfg)?.lhs);
    }
    pass &= z_only <= 1e-10;
    verdict(pass, format!("ratios {}; z-only lhs max {z_only:.1e}", notes.join(", ")))
}

fn c8_gate() -> Res<Verdict> {
    let direct = |p: f64, q: f64, n: usize| {
        let big_q = (2 * n + 2) as f64;
        q >= 1.0 && ((1.0 < p && p <= 2.0 && q < p * big_q / (big_q - p)) || (p >= 2.0 && q < 2.0 * big_q / (big_q - 2.0)))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut cases = vec![(2.0, 2.0, 1usize)];
    while cases.len() < 1000 {
        let n = rng.gen_range(1..6);
        let big_q = (2 * n + 2) as f64;
        let p: f64 = if rng.gen_bool(0.2) { 2.0 } else { rng.gen_range(1.0..5.0) };
        let bound = if p <= 2.0 { p * big_q / (big_q - p) } else { 2.0 * big_q / (big_q - 2.0) };
        let q = if rng.gen_bool(0.25) { bound } else { rng.gen_range(0.5..1.5 * bound) };
        cases.push((p, q, n));
    }
    let mismatches = cases.iter().filter(|&&(p, q, n)| gate_exponents(p, q, n).admissible != direct(p, q, n)).count();
    let boundary: Vec<_> = cases
        .iter()
        .filter(|&&(p, q, n)| {
            let big_q = (2 * n + 2) as f64;
            p > 1.0 && p <= 2.0 && q == p * big_q / (big_q - p)
        })
        .collect();
    let boundary_ok = boundary.iter().all(|&&(p, q, n)| !gate_exponents(p, q, n).admissible);
    verdict(
        mismatches == 0 && boundary_ok && !boundary.is_empty() && gate_exponents(2.0, 2.0, 1).admissible,
        format!("{mismatches} mismatches in {} cases; {} boundary cases rejected", cases.len(), boundary.len()),
    )
}

fn c9_determinism() -> Res<Verdict> {
    let small = ["--box-radius", "8", "--domain-grid", "8", "--samples", "128", "--per-decade", "4", "--t-per-decade", "4"];
    let suites: [(&str, &[&str]); 7] = [
        ("beta", &["--x", "0,0,0;0.5,-0.5,0.2"]),
        ("squarefn", &["--alpha", "0.5"]),
        ("identities", &[]),
        ("lemmas", &[]),
        ("dorronsoro", &[]),
        ("poincare", &["--field", "vertical-wave", "--param", "omega=4"]),
        ("lemmas", &["--format", "json", "--field", "bump"]),
    ];
    let mut differing = Vec::new();
    for (suite, extra) in suites {
        let run = |workers: &str| -> Res<Vec<u8>> {
            let out = Command::new(env!("CARGO_BIN_EXE_heis-beta"))
                .arg(suite)
                .args(small)
                .args(extra)
                .args(["--workers", workers, "--no-timestamp"])
                .output()?;
            if !matches!(out.status.code(), Some(0) | Some(2)) {
                return Err(format!("{suite}: {}", String::from_utf8_lossy(&out.stderr)).into());
            }
            Ok(out.stdout)
        };
        let first = run("1")?;
        if first.is_empty() || run("1")? != first || run("3")? != first {
            differing.push(suite);
        }
    }
    verdict(differing.is_empty(), format!("7 runs compared at 1, 1 and 3 workers; differing: {differing:?}"))
}

type Criterion = (u32, &'static str, f64, fn() -> Res<Verdict>);

const CRITERIA: [Criterion; 9] = [
    (1, "group and metric axioms", 5.0, c1_group_axioms),
    (2, "projection correctness", 30.0, c2_projection),
    (3, "beta annihilation and covariance", 120.0, c3_beta),
    (4, "square-function equivariance", 300.0, c4_equivariance),
    (5, "lemma sweeps", 300.0, c5_lemmas),
    (6, "Dorronsoro ratio", 600.0, c6_dorronsoro),
    (7, "Poincaré ratio", 600.0, c7_poincare),
    (8, "exponent gate", 1.0, c8_gate),
    (9, "determinism across workers", f64::INFINITY, c9_determinism),
];

fn main() -> ExitCode {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all_pass = true;
    for (id, title, limit, run) in CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass && secs < limit, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all_pass &= pass;
        let budget = if limit.is_finite() { format!(" / {limit:.0} s") } else { String::new() };
        println!("criterion {id} {title}: {} [{secs:.1} s{budget}] {detail}", if pass { "PASS" } else { "FAIL" });
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
