//! Regenerates `fixtures/reference.json` from runs at four times the default
//! ball budget (and a finer domain grid for the Poincaré ratios).
//!
//! cargo run --release -p heis-beta --example gen_fixtures -- [OUT]

use std::collections::BTreeMap;

use heis_beta::squarefn::{g_alpha, g_alpha_lp_norm, s_alpha};
use heis_beta::verify::{dorronsoro_ratio, poincare_ratio, run_lemma_suite, HarnessConfig};
use heis_beta::{catalog, Params, Point, QuadSpec, ScaleGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "fixtures/reference.json".into());
    let mut cfg = HarnessConfig::default();
    cfg.ball = QuadSpec { samples: 4 * cfg.ball.samples, ..cfg.ball };
    let mut values = BTreeMap::new();
    let mut put = |key: String, value: f64| {
        eprintln!("{key} = {value}");
        values.insert(key, value);
    };

    let gaussian = catalog("gaussian", &Params::new(), 1)?;
    let origin = Point::origin(1);
    put("g1[gaussian]@origin".into(), g_alpha(&gaussian, &origin, 1.0, &cfg.r_grid, &cfg.ball)?.value);
    put("s0.5[gaussian]@origin".into(), s_alpha(&gaussian, &origin, 0.5, &cfg.r_grid, &cfg.ball)?.value);
    let norm = g_alpha_lp_norm(&gaussian, 1, 1.0, 2.0, &cfg.domain, &cfg.r_grid, &cfg.budget())?;
    put("g1-l2[gaussian]".into(), norm.value);

    for rep in run_lemma_suite(&cfg)? {
        put(rep.key(), rep.ratio);
    }

    let mut dor = cfg.clone();
    dor.r_grid = ScaleGrid::new(1e-3, 1e3, 16)?;
    for (name, params) in [("gaussian", Params::new()), ("vertical-wave", Params::new().with("omega", "4"))] {
        let f = catalog(name, &params, 1)?;
        let rep = dorronsoro_ratio(&f, &dor)?;
        put(rep.key(), rep.ratio);
    }

    let mut poi = cfg.clone();
    poi.domain_quad = QuadSpec::grid(32);
    let mut fields = vec![catalog("gaussian", &Params::new(), 1)?];
    for omega in ["1", "4", "16"] {
        fields.push(catalog("vertical-wave", &Params::new().with("omega", omega), 1)?);
    }
    for f in &fields {
        let rep = poincare_ratio(f, &poi)?;
        put(rep.key(), rep.ratio);
    }

    let doc = serde_json::json!({
        "generator": "cargo run --release -p heis-beta --example gen_fixtures",
        "ball_samples": cfg.ball.samples,
        "values": values,
    });
    std::fs::write(&out, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}
