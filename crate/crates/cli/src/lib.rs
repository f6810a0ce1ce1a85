//! Experiment runner: parses a JSON config, runs one experiment, and writes
//! CSV tables, a JSON summary, a plot script and a manifest.

pub mod cache;
pub mod commands;
pub mod config;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::cache::{sha256_hex, Cache};
use crate::commands::Outcome;
use crate::config::ExperimentConfig;
use crate::manifest::{Outputs, RunManifest, Timer, Versions};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "freerep", version, about = "Boundary representation experiments on free groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment config; defaults describe F2 with the word metric.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Element budget (overrides `budget` in the config).
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Recompute instead of reading or writing cached tables.
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// RNG seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Print omega, D, alpha and the Perron data.
    Spec,
    /// Harish-Chandra table.
    Xi,
    /// Shadow cover check and minimal covering rho.
    Cover,
    /// Equidistribution error sweep.
    Equidist,
    /// Asymptotic orthogonality sweep.
    Orth,
    /// Annular rapid decay ratios.
    Rd,
    /// Fiber census and convolution norm ratios.
    Conv,
    /// Growth of sphere sums of squared coefficients.
    Gvb,
    /// First passage, harmonic against PS, multiplicativity.
    Green,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spec => "spec",
            Command::Xi => "xi",
            Command::Cover => "cover",
            Command::Equidist => "equidist",
            Command::Orth => "orth",
            Command::Rd => "rd",
            Command::Conv => "conv",
            Command::Gvb => "gvb",
            Command::Green => "green",
        }
    }
}

/// Result of one invocation.
#[derive(Debug)]
pub struct RunResult {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub outcome: Outcome,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("{0}")]
    Run(freerep::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(e) if commands::budget_error(e) => EXIT_BUDGET,
            CliError::Run(_) | CliError::Io(_) => EXIT_FAIL,
            CliError::Config(_) => EXIT_USAGE,
        }
    }
}

fn plot_script(csv_name: &str, param: &str, title: &str) -> String {
    format!(
        "import csv\n\
         import matplotlib\n\
         matplotlib.use(\"Agg\")\n\
         import matplotlib.pyplot as plt\n\
         \n\
         rows = list(csv.DictReader(open(\"{csv_name}\")))\n\
         x = [float(r[\"{param}\"]) for r in rows]\n\
         fig, ax = plt.subplots()\n\
         for col in (\"value\", \"abs_error\"):\n\
         \x20   pts = [(a, float(r[col])) for a, r in zip(x, rows) if r[col] not in (\"\", \"NaN\")]\n\
         \x20   if pts:\n\
         \x20       ax.plot([p[0] for p in pts], [abs(p[1]) for p in pts], marker=\"o\", label=col)\n\
         if all(float(r[\"value\"]) > 0 for r in rows if r[\"value\"] not in (\"\", \"NaN\")):\n\
         \x20   ax.set_yscale(\"log\")\n\
         ax.set_xlabel(\"{param}\")\n\
         ax.set_title(\"{title}\")\n\
         ax.legend()\n\
         fig.savefig(\"{stem}.png\", dpi=120)\n",
        stem = csv_name.trim_end_matches(".csv"),
    )
}

/// Loads the config, applies flag overrides, runs, writes outputs.
pub fn run(cli: &Cli) -> Result<RunResult, CliError> {
    let mut timer = Timer::start();
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(b) = cli.budget {
        cfg.budget = Some(b);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out_dir = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let mut cache = if cli.no_cache { Cache::disabled() } else { Cache::new(out_dir.join("cache")) };
    timer.lap("config");

    let name = cli.command.name();
    let result = match cli.command {
        Command::Spec => commands::spec(&cfg),
        Command::Xi => commands::xi(&cfg, &mut cache),
        Command::Cover => commands::cover(&cfg, &mut cache),
        Command::Equidist => commands::equidist(&cfg),
        Command::Orth => commands::orth(&cfg),
        Command::Rd => commands::rd(&cfg),
        Command::Conv => commands::conv(&cfg),
        Command::Gvb => commands::gvb(&cfg),
        Command::Green => commands::green(&cfg),
    };
    let outcome = result.map_err(CliError::Run)?;
    timer.lap("compute");

    let omega = cfg.context().ok().and_then(|c| c.exact_omega()).unwrap_or(0);
    let mut out = Outputs::new(&out_dir)?;
    let mut summary = serde_json::Map::new();
    for (suffix, report) in &outcome.reports {
        let stem = if suffix.is_empty() { name.to_string() } else { format!("{name}_{suffix}") };
        if !report.rows.is_empty() {
            out.write(&format!("{stem}.csv"), &report.to_csv(omega))?;
            out.write(&format!("{stem}_plot.py"), &plot_script(&format!("{stem}.csv"), &report.param_name, &report.experiment))?;
        }
        summary.insert(stem, serde_json::to_value(report).expect("report serializes"));
    }
    for (suffix, table) in &outcome.tables {
        out.write(&format!("{name}_{suffix}.csv"), table)?;
    }
    let partial = outcome.reports.iter().any(|(_, r)| r.partial);
    let pass = outcome.reports.iter().all(|(_, r)| r.all_pass());
    let exit_code = if partial {
        EXIT_BUDGET
    } else if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    };
    let config_sha256 = sha256_hex(cfg.canonical_json().as_bytes());
    let doc = json!({
        "schema_version": freerep::asymptotics::report::SCHEMA_VERSION,
        "command": name,
        "config_sha256": config_sha256,
        "partial": partial,
        "pass": pass,
        "info": outcome.info,
        "reports": summary,
    });
    out.write(&format!("{name}.json"), &serde_json::to_string_pretty(&doc).expect("summary serializes"))?;
    timer.lap("write");

    let manifest = RunManifest {
        schema_version: freerep::asymptotics::report::SCHEMA_VERSION,
        command: name.to_string(),
        config_sha256,
        versions: Versions::current(),
        wall_clock_seconds: timer.total(),
        stages: timer.stages.clone(),
        cache: cache.log.clone(),
        exit_code,
        files: out.files.clone(),
    };
    std::fs::write(out.dir().join("manifest.json"), serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    Ok(RunResult { exit_code, out_dir, manifest, outcome })
}

/// Prints a run's verdicts and returns its exit code.
pub fn run_and_report(cli: &Cli) -> i32 {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    match run(cli) {
        Ok(r) => {
            for l in &r.outcome.lines {
                println!("{l}");
            }
            for (_, rep) in &r.outcome.reports {
                for v in &rep.verdicts {
                    println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
                }
                if rep.partial {
                    println!("PARTIAL {}: grid cut short by the element budget", rep.experiment);
                }
            }
            println!("wrote {} files to {}", r.manifest.files.len() + 1, r.out_dir.display());
            r.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
