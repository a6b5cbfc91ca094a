//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use heis_beta::fields::CATALOG_PARAM_KEYS;
use heis_beta::verify::{gate_exponents, HarnessConfig};
use heis_beta::{Domain, Mode, Params, Point, QuadSpec, ScaleGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Beta,
    Squarefn,
    Identities,
    Lemmas,
    Dorronsoro,
    Poincare,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Beta, Suite::Squarefn, Suite::Identities, Suite::Lemmas, Suite::Dorronsoro, Suite::Poincare];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Beta => "beta",
            Suite::Squarefn => "squarefn",
            Suite::Identities => "identities",
            Suite::Lemmas => "lemmas",
            Suite::Dorronsoro => "dorronsoro",
            Suite::Poincare => "poincare",
        }
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown suite `{s}`"))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Keys accepted in a config file, with their defaults (`None`: derived).
const KEYS: &[(&str, Option<&str>)] = &[
    ("suite", None),
    ("n", Some("1")),
    ("field", Some("gaussian")),
    ("p", Some("2")),
    ("q", Some("2")),
    ("alpha", Some("1")),
    ("d", Some("1")),
    ("x", None),
    ("rmin", Some("0.001")),
    ("rmax", Some("100")),
    ("per_decade", Some("16")),
    ("tmin", Some("0.0001")),
    ("tmax", Some("100")),
    ("t_per_decade", Some("16")),
    ("box_radius", Some("64")),
    ("mode", Some("mc")),
    ("samples", Some("1024")),
    ("grid_per_axis", Some("12")),
    ("seed", Some("42")),
    ("domain_mode", Some("grid")),
    ("domain_samples", Some("100000")),
    ("domain_grid", Some("16")),
    ("scales", Some("0.5,2")),
    ("gradient_c", Some("4")),
    ("monotonicity_c", Some("2")),
    ("format", Some("csv")),
];

/// Keys that affect execution but not results; never echoed.
const EXECUTION_KEYS: &[&str] = &["workers", "out", "timestamp"];

const PARAM_PREFIX: &str = "param.";

/// Raw key-value pairs, later entries overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pairs(BTreeMap<String, String>);

impl Pairs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut out = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
            out.set(k.trim(), v.trim())?;
        }
        Ok(out)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), String> {
        let key = normalize(key);
        check_key(&key)?;
        self.0.insert(key, value.into());
        Ok(())
    }

    pub fn merge(&mut self, other: &Pairs) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

fn normalize(key: &str) -> String {
    match key.strip_prefix(PARAM_PREFIX) {
        Some(p) => format!("{PARAM_PREFIX}{p}"),
        None => key.replace('-', "_"),
    }
}

fn check_key(key: &str) -> Result<(), String> {
    if let Some(p) = key.strip_prefix(PARAM_PREFIX) {
        return match CATALOG_PARAM_KEYS.contains(&p) {
            true => Ok(()),
            false => Err(format!("unknown field parameter `{p}` (known: {})", CATALOG_PARAM_KEYS.join(", "))),
        };
    }
    if KEYS.iter().any(|(k, _)| *k == key) || EXECUTION_KEYS.contains(&key) {
        Ok(())
    } else {
        Err(format!("unknown config key `{key}`"))
    }
}

/// A fully validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub suite: Suite,
    pub harness: HarnessConfig,
    pub d: u8,
    pub points: Vec<Point>,
    pub format: Format,
    pub workers: Option<usize>,
    pub out: Option<String>,
    pub timestamp: bool,
    /// Effective result-affecting keys, in key order.
    pub echo: Vec<(String, String)>,
}

fn num<T: FromStr>(pairs: &Pairs, key: &str) -> Result<T, String> {
    let raw = pairs.get(key).ok_or_else(|| format!("missing `{key}`"))?;
    raw.parse().map_err(|_| format!("`{key}`: cannot parse `{raw}`"))
}

fn list(raw: &str, key: &str) -> Result<Vec<f64>, String> {
    raw.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("`{key}`: cannot parse `{v}`")))
        .collect()
}

fn points(raw: &str, n: usize) -> Result<Vec<Point>, String> {
    raw.split(';')
        .map(|p| {
            let c = list(p, "x")?;
            if c.len() != 2 * n + 1 {
                return Err(format!("`x`: point `{p}` needs {} coordinates for n = {n}", 2 * n + 1));
            }
            Point::from_coords(&c).map_err(|e| format!("`x`: {e}"))
        })
        .collect()
}

impl RunConfig {
    /// Defaults, overridden by `pairs`, then validated.
    pub fn resolve(pairs: &Pairs) -> Result<Self, String> {
        let mut all = Pairs::new();
        for (k, v) in KEYS {
            if let Some(v) = v {
                all.0.insert((*k).to_string(), (*v).to_string());
            }
        }
        all.merge(pairs);
        let suite: Suite = num(&all, "suite")?;
        let n: usize = num(&all, "n")?;
        if n == 0 {
            return Err("`n` must be at least 1".into());
        }
        let origin = vec!["0"; 2 * n + 1].join(",");
        all.0.entry("x".into()).or_insert(origin);

        let p: f64 = num(&all, "p")?;
        let q: f64 = num(&all, "q")?;
        let alpha: f64 = num(&all, "alpha")?;
        if !(p > 1.0 && p.is_finite()) {
            return Err(format!("`p` must be a finite real > 1, got {p}"));
        }
        if !(q >= 1.0 && q.is_finite()) {
            return Err(format!("`q` must be a finite real ≥ 1, got {q}"));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(format!("`alpha` must lie in (0, 2), got {alpha}"));
        }
        if suite == Suite::Dorronsoro {
            let gate = gate_exponents(p, q, n);
            if !gate.admissible {
                return Err(format!("p = {p}, q = {q} is outside the admissible range for Q = {}", gate.big_q));
            }
        }
        if suite == Suite::Poincare && p > 2.0 {
            return Err(format!("the Poincaré suite needs 1 < p ≤ 2, got {p}"));
        }
        let d: u8 = num(&all, "d")?;
        if d > 1 {
            return Err(format!("`d` must be 0 or 1, got {d}"));
        }

        let mut params = Params::new();
        for (k, v) in &all.0 {
            if let Some(name) = k.strip_prefix(PARAM_PREFIX) {
                params.insert(name, v.clone());
            }
        }
        let spec = |mode_key: &str, samples_key: &str, grid_key: &str| -> Result<QuadSpec, String> {
            let mode: Mode = num(&all, mode_key)?;
            let seed: u64 = num(&all, "seed")?;
            let spec = match mode {
                Mode::Grid => QuadSpec::grid(num(&all, grid_key)?),
                Mode::MonteCarlo => QuadSpec::monte_carlo(num(&all, samples_key)?, seed),
            };
            spec.validate().map_err(|e| e.to_string())?;
            Ok(spec)
        };
        let grid = |lo: &str, hi: &str, per: &str| -> Result<ScaleGrid, String> {
            ScaleGrid::new(num(&all, lo)?, num(&all, hi)?, num(&all, per)?).map_err(|e| e.to_string())
        };
        let radius: f64 = num(&all, "box_radius")?;
        let domain = Domain::new(radius);
        domain.validate().map_err(|e| e.to_string())?;
        let harness = HarnessConfig {
            n,
            field: all.get("field").unwrap_or_default().to_string(),
            params,
            p,
            q,
            alpha,
            r_grid: grid("rmin", "rmax", "per_decade")?,
            t_grid: grid("tmin", "tmax", "t_per_decade")?,
            domain,
            ball: spec("mode", "samples", "grid_per_axis")?,
            domain_quad: spec("domain_mode", "domain_samples", "domain_grid")?,
            scales: list(all.get("scales").unwrap_or_default(), "scales")?,
            gradient_c: num(&all, "gradient_c")?,
            monotonicity_c: num(&all, "monotonicity_c")?,
        };
        if harness.scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err("`scales` must be positive".into());
        }
        harness.field().map_err(|e| e.to_string())?;

        let workers = match all.get("workers") {
            Some(w) => Some(w.parse::<usize>().ok().filter(|k| *k > 0).ok_or_else(|| format!("`workers`: expected a positive integer, got `{w}`"))?),
            None => None,
        };
        let timestamp = match all.get("timestamp") {
            None | Some("true") => true,
            Some("false") => false,
            Some(v) => return Err(format!("`timestamp`: expected true or false, got `{v}`")),
        };
        let echo = all.0.iter().filter(|(k, _)| !EXECUTION_KEYS.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect();
        Ok(Self {
            suite,
            d,
            points: points(all.get("x").unwrap_or_default(), n)?,
            format: num(&all, "format")?,
            workers,
            out: all.get("out").map(str::to_string),
            timestamp,
            echo,
            harness,
        })
    }

    /// The effective configuration as a config file.
    pub fn to_file(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.echo {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }
}
