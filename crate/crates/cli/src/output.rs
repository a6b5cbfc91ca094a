//! CSV and JSON emission with a self-describing metadata header.

use std::time::SystemTime;

use heis_beta::beta::BetaProfile;
use heis_beta::squarefn::SquareFnResult;
use heis_beta::verify::RatioReport;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One square-function evaluation, labelled by point index and kind (`G` or `S`).
#[derive(Debug, Clone)]
pub struct SquareFnRow {
    pub x_id: usize,
    pub function: &'static str,
    pub result: SquareFnResult,
}

/// The result rows of one suite.
#[derive(Debug, Clone)]
pub enum Results {
    Beta(Vec<BetaProfile>),
    SquareFn(Vec<SquareFnRow>),
    Reports(Vec<RatioReport>),
}

impl Results {
    /// False if any check row failed.
    pub fn passed(&self) -> bool {
        match self {
            Results::Reports(r) => r.iter().all(|r| r.passed),
            _ => true,
        }
    }
}

/// Shortest round-trip text, in exponent form outside `[1e-4, 1e15)`.
fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn meta(cfg: &RunConfig) -> Vec<(String, String)> {
    let mut out = vec![
        ("tool".to_string(), TOOL.to_string()),
        ("version".to_string(), VERSION.to_string()),
        ("suite".to_string(), cfg.suite.to_string()),
    ];
    if cfg.timestamp {
        out.push(("timestamp".into(), humantime::format_rfc3339_seconds(SystemTime::now()).to_string()));
    }
    out
}

/// Renders the full output document.
pub fn render(cfg: &RunConfig, results: &Results) -> Result<String, String> {
    match cfg.format {
        Format::Csv => csv_document(cfg, results),
        Format::Json => Ok(json_document(cfg, results)),
    }
}

fn csv_document(cfg: &RunConfig, results: &Results) -> Result<String, String> {
    let mut head = String::new();
    for (k, v) in meta(cfg) {
        head.push_str(&format!("# {k}: {v}\n"));
    }
    for (k, v) in &cfg.echo {
        head.push_str(&format!("# config: {k} = {v}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let e = |e: csv::Error| e.to_string();
    match results {
        Results::Beta(profiles) => {
            w.write_record(["r", "beta", "stderr", "x_id"]).map_err(e)?;
            for (id, p) in profiles.iter().enumerate() {
                for ((r, b), s) in p.radii.iter().zip(&p.values).zip(&p.stderrs) {
                    w.write_record([num(*r), num(*b), num(*s), id.to_string()]).map_err(e)?;
                }
            }
        }
        Results::SquareFn(rows) => {
            w.write_record(["x_id", "alpha", "value", "trunc_low", "trunc_high", "stderr", "function"]).map_err(e)?;
            for row in rows {
                let r = &row.result;
                w.write_record([
                    row.x_id.to_string(),
                    num(r.alpha),
                    num(r.value),
                    num(r.truncation_low),
                    num(r.truncation_high),
                    num(r.stderr),
                    row.function.to_string(),
                ])
                .map_err(e)?;
            }
        }
        Results::Reports(reports) => {
            w.write_record([
                "name",
                "lhs",
                "rhs",
                "ratio",
                "degenerate",
                "passed",
                "tolerance",
                "rel_stderr",
                "rel_sampling",
                "trunc_lhs",
                "trunc_rhs",
                "params",
            ])
            .map_err(e)?;
            for r in reports {
                let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                w.write_record([
                    r.name.clone(),
                    num(r.lhs),
                    num(r.rhs),
                    num(r.ratio),
                    r.degenerate.to_string(),
                    r.passed.to_string(),
                    r.tolerance.map(num).unwrap_or_default(),
                    num(r.rel_stderr),
                    num(r.rel_sampling),
                    num(r.truncation.0),
                    num(r.truncation.1),
                    params.join(";"),
                ])
                .map_err(e)?;
            }
        }
    }
    let body = w.into_inner().map_err(|e| e.to_string())?;
    Ok(head + &String::from_utf8(body).map_err(|e| e.to_string())?)
}

fn json_document(cfg: &RunConfig, results: &Results) -> String {
    let mut m = Map::new();
    for (k, v) in meta(cfg) {
        m.insert(k, Value::String(v));
    }
    let config: Map<String, Value> = cfg.echo.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    m.insert("config".into(), Value::Object(config));
    let rows: Vec<Value> = match results {
        Results::Beta(profiles) => profiles
            .iter()
            .enumerate()
            .flat_map(|(id, p)| {
                p.radii
                    .iter()
                    .zip(&p.values)
                    .zip(&p.stderrs)
                    .map(move |((r, b), s)| json!({"r": r, "beta": b, "stderr": s, "x_id": id}))
            })
            .collect(),
        Results::SquareFn(rows) => rows
            .iter()
            .map(|row| {
                let r = &row.result;
                json!({
                    "x_id": row.x_id,
                    "alpha": r.alpha,
                    "value": r.value,
                    "trunc_low": r.truncation_low,
                    "trunc_high": r.truncation_high,
                    "stderr": r.stderr,
                    "function": row.function,
                })
            })
            .collect(),
        Results::Reports(reports) => reports.iter().map(|r| serde_json::to_value(r).unwrap_or(Value::Null)).collect(),
    };
    let doc = json!({"meta": Value::Object(m), "results": rows});
    let mut s = serde_json::to_string_pretty(&doc).unwrap_or_default();
    s.push('\n');
    s
}
