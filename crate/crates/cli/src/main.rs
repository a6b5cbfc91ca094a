//! `heis-beta`: runs one suite and writes its results as CSV or JSON.
//!
//! Exit status: 0 on success, 2 if a check suite has a failing row, 1 on error.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heis_beta::beta::beta_profile;
use heis_beta::squarefn::{g_alpha_q, s_alpha};
use heis_beta::{par, verify};

use config::{Pairs, RunConfig, Suite};
use output::{Results, SquareFnRow};

#[derive(Parser, Debug)]
#[command(name = "heis-beta", version, about = "β-numbers, square functions and their inequalities on the Heisenberg group")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// β-number profile over the scale grid at each point.
    Beta(Opts),
    /// G_α (and S_α for α < 1) at each point.
    Squarefn(Opts),
    /// Scaling identities checked with common random numbers.
    Identities(Opts),
    /// Lemma-level comparison sweeps.
    Lemmas(Opts),
    /// ‖G_α f‖_p / ‖∇_H f‖_p across dilations.
    Dorronsoro(Opts),
    /// Vertical-versus-horizontal Poincaré ratio across dilations.
    Poincare(Opts),
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the effective config to PATH.
    #[arg(long, value_name = "PATH")]
    emit_config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    /// Catalog field name.
    #[arg(long)]
    field: Option<String>,
    /// Field parameter, e.g. `omega=4` (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// Fitted degree for the beta suite (0 or 1).
    #[arg(long)]
    d: Option<String>,
    /// Evaluation points: comma-separated coordinates, `;` between points.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long)]
    rmin: Option<String>,
    #[arg(long)]
    rmax: Option<String>,
    #[arg(long)]
    per_decade: Option<String>,
    #[arg(long)]
    tmin: Option<String>,
    #[arg(long)]
    tmax: Option<String>,
    #[arg(long)]
    t_per_decade: Option<String>,
    /// Radius of the truncated integration domain.
    #[arg(long)]
    box_radius: Option<String>,
    /// Monte Carlo samples per ball.
    #[arg(long)]
    samples: Option<String>,
    /// Grid nodes per axis per ball.
    #[arg(long)]
    grid_per_axis: Option<String>,
    /// Ball quadrature mode.
    #[arg(long, value_parser = ["grid", "mc"])]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Quadrature mode over the integration domain.
    #[arg(long, value_parser = ["grid", "mc"])]
    domain_mode: Option<String>,
    #[arg(long)]
    domain_samples: Option<String>,
    #[arg(long)]
    domain_grid: Option<String>,
    /// Comma-separated dilation factors.
    #[arg(long)]
    scales: Option<String>,
    #[arg(long)]
    gradient_c: Option<String>,
    #[arg(long)]
    monotonicity_c: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "HEIS_BETA_WORKERS")]
    workers: Option<String>,
    /// Output file (default: stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Omit the timestamp so identical configs give identical bytes.
    #[arg(long)]
    no_timestamp: bool,
}

impl Opts {
    fn pairs(&self, suite: Suite) -> Result<Pairs, String> {
        let mut pairs = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                Pairs::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => Pairs::new(),
        };
        let flags = [
            ("n", &self.n),
            ("field", &self.field),
            ("p", &self.p),
            ("q", &self.q),
            ("alpha", &self.alpha),
            ("d", &self.d),
            ("x", &self.x),
            ("rmin", &self.rmin),
            ("rmax", &self.rmax),
            ("per_decade", &self.per_decade),
            ("tmin", &self.tmin),
            ("tmax", &self.tmax),
            ("t_per_decade", &self.t_per_decade),
            ("box_radius", &self.box_radius),
            ("samples", &self.samples),
            ("grid_per_axis", &self.grid_per_axis),
            ("mode", &self.mode),
            ("seed", &self.seed),
            ("domain_mode", &self.domain_mode),
            ("domain_samples", &self.domain_samples),
            ("domain_grid", &self.domain_grid),
            ("scales", &self.scales),
            ("gradient_c", &self.gradient_c),
            ("monotonicity_c", &self.monotonicity_c),
            ("workers", &self.workers),
            ("format", &self.format),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                pairs.set(k, v.as_str())?;
            }
        }
        for kv in &self.params {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("--param expects KEY=VALUE, got `{kv}`"))?;
            pairs.set(&format!("param.{}", k.trim()), v.trim())?;
        }
        if let Some(out) = &self.out {
            pairs.set("out", out.display().to_string())?;
        }
        if self.no_timestamp {
            pairs.set("timestamp", "false")?;
        }
        pairs.set("suite", suite.name())?;
        Ok(pairs)
    }
}

fn execute(cfg: &RunConfig) -> heis_beta::Result<Results> {
    let h = &cfg.harness;
    Ok(match cfg.suite {
        Suite::Beta => {
            let f = h.field()?;
            let profiles = cfg.points.iter().map(|x| beta_profile(&f, x, cfg.d, h.q, &h.r_grid, &h.ball)).collect::<heis_beta::Result<_>>()?;
            Results::Beta(profiles)
        }
        Suite::Squarefn => {
            let f = h.field()?;
            let mut rows = Vec::new();
            for (x_id, x) in cfg.points.iter().enumerate() {
                let result = g_alpha_q(&f, x, h.alpha, h.q, &h.r_grid, &h.ball)?;
                rows.push(SquareFnRow { x_id, function: "G", result });
                if h.alpha < 1.0 {
                    let result = s_alpha(&f, x, h.alpha, &h.r_grid, &h.ball)?;
                    rows.push(SquareFnRow { x_id, function: "S", result });
                }
            }
            Results::SquareFn(rows)
        }
        Suite::Identities => Results::Reports(verify::run_identity_suite(h)?),
        Suite::Lemmas => Results::Reports(verify::run_lemma_suite(h)?),
        Suite::Dorronsoro => Results::Reports(verify::run_dorronsoro_suite(h)?),
        Suite::Poincare => Results::Reports(verify::run_poincare_suite(h)?),
    })
}

fn run(suite: Suite, opts: &Opts) -> Result<bool, String> {
    let cfg = RunConfig::resolve(&opts.pairs(suite)?)?;
    if let Some(path) = &opts.emit_config {
        std::fs::write(path, cfg.to_file()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let results = par::with_workers(cfg.workers, || execute(&cfg)).and_then(|r| r).map_err(|e| e.to_string())?;
    let doc = output::render(&cfg, &results)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, doc).map_err(|e| format!("{path}: {e}"))?,
        None => print!("{doc}"),
    }
    Ok(results.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (suite, opts) = match &cli.command {
        Command::Beta(o) => (Suite::Beta, o),
        Command::Squarefn(o) => (Suite::Squarefn, o),
        Command::Identities(o) => (Suite::Identities, o),
        Command::Lemmas(o) => (Suite::Lemmas, o),
        Command::Dorronsoro(o) => (Suite::Dorronsoro, o),
        Command::Poincare(o) => (Suite::Poincare, o),
    };
    match run(suite, opts) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("heis-beta: one or more checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("heis-beta: {e}");
            ExitCode::from(1)
        }
    }
}
