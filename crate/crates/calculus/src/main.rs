use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;

use connes_calculus::report::{
    compute_lift, compute_omega, run_suite, sha256_hex, BaseKind, ModeCfg, RunConfig, ALL_SUITES,
};

#[derive(Parser)]
#[command(name = "ccalc", version, about = "Exact differential calculus over truncated spectral triples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// JSON file holding a full run configuration; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base algebra
    #[arg(long, value_parser = ["point", "circle"])]
    base: Option<String>,
    /// Fourier truncation half-width for the circle base
    #[arg(long)]
    fourier_window: Option<i64>,
    /// Winding degree of the circle generator
    #[arg(long)]
    gen_degree: Option<i64>,
    /// Number of suspension levels applied to the base
    #[arg(long)]
    qds_iterations: Option<usize>,
    /// Matrix cutoff per suspension level, comma separated (last repeats)
    #[arg(long, value_delimiter = ',')]
    cutoff: Option<Vec<usize>>,
    /// Maximum word budget for differential slots
    #[arg(long)]
    word_budget: Option<usize>,
    /// Represent operators on the whole space or modulo compacts
    #[arg(long, value_parser = ["bounded", "calkin"])]
    mode: Option<String>,
    /// Comma-separated suite list (empty string = run nothing)
    #[arg(long, value_delimiter = ',')]
    suite: Option<Vec<String>>,
    /// Output file, "-" for stdout
    #[arg(long, default_value = "-")]
    out: String,
    /// Directory for cached results keyed by config hash
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Worker threads for independent checks
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and emit a JSON report
    Verify(ConfigArgs),
    /// Compute a calculus tower for the configured triple
    Compute {
        /// What to compute (currently: omega)
        what: String,
        /// Highest degree of the tower
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Lift the sample connection over the configured base one level
    Lift(ConfigArgs),
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text).context("parsing config JSON")?
            }
            None => RunConfig::default(),
        };
        if let Some(b) = &self.base {
            cfg.base = if b == "point" { BaseKind::Point } else { BaseKind::Circle };
        }
        if let Some(w) = self.fourier_window {
            cfg.fourier_window = w;
        }
        if let Some(g) = self.gen_degree {
            cfg.gen_degree = g;
        }
        if let Some(k) = self.qds_iterations {
            cfg.qds_iterations = k;
        }
        if let Some(c) = &self.cutoff {
            cfg.cutoffs = c.clone();
        }
        if let Some(p) = self.word_budget {
            cfg.word_budget = p;
        }
        if let Some(m) = &self.mode {
            cfg.mode = if m == "bounded" { ModeCfg::Bounded } else { ModeCfg::Calkin };
        }
        if let Some(s) = &self.suite {
            cfg.suites = s.iter().filter(|x| !x.is_empty()).cloned().collect();
            for name in &cfg.suites {
                if !ALL_SUITES.contains(&name.as_str()) {
                    bail!("unknown suite: {name} (known: {})", ALL_SUITES.join(", "));
                }
            }
        }
        Ok(cfg)
    }

    /// Fetch cached bytes for the key, or compute and store them.
    fn cached(&self, key: &str, compute: impl FnOnce() -> Result<Vec<u8>>) -> Result<Vec<u8>> {
        let path = self.cache_dir.as_ref().map(|d| d.join(format!("{key}.json")));
        if let Some(p) = &path {
            if p.exists() {
                return std::fs::read(p).with_context(|| format!("reading cache {}", p.display()));
            }
        }
        let bytes = compute()?;
        if let Some(p) = &path {
            std::fs::create_dir_all(p.parent().unwrap())?;
            std::fs::write(p, &bytes).with_context(|| format!("writing cache {}", p.display()))?;
        }
        Ok(bytes)
    }

    fn emit(&self, bytes: &[u8]) -> Result<()> {
        if self.out == "-" {
            std::io::stdout().write_all(bytes)?;
        } else {
            std::fs::write(&self.out, bytes).with_context(|| format!("writing {}", self.out))?;
        }
        Ok(())
    }
}

fn keyed(command: &str, cfg: &RunConfig, extra: &str) -> String {
    sha256_hex(format!("{{\"command\":\"{command}\",{extra}\"config\":{}}}", cfg.canonical_json()).as_bytes())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify(args) => {
            let cfg = args.resolve()?;
            let key = keyed("verify", &cfg, "");
            let mut failed = false;
            let bytes = args.cached(&key, || {
                let report = run_suite(&cfg, args.jobs.max(1))?;
                let mut out = serde_json::to_vec_pretty(&report)?;
                out.push(b'\n');
                Ok(out)
            })?;
            // a cache hit must still set the exit status from the report
            let report: serde_json::Value = serde_json::from_slice(&bytes)?;
            if report["pass"] == serde_json::Value::Bool(false) {
                failed = true;
            }
            args.emit(&bytes)?;
            if failed {
                std::process::exit(1);
            }
        }
        Command::Compute { what, degree, cfg: args } => {
            if what != "omega" {
                bail!("unknown compute target: {what} (known: omega)");
            }
            let cfg = args.resolve()?;
            let key = keyed("compute", &cfg, &format!("\"degree\":{degree},"));
            let bytes = args.cached(&key, || {
                let value = compute_omega(&cfg, degree)?;
                let mut out = serde_json::to_vec_pretty(&value)?;
                out.push(b'\n');
                Ok(out)
            })?;
            args.emit(&bytes)?;
        }
        Command::Lift(args) => {
            let cfg = args.resolve()?;
            let key = keyed("lift", &cfg, "");
            let bytes = args.cached(&key, || {
                let value = compute_lift(&cfg)?;
                let mut out = serde_json::to_vec_pretty(&value)?;
                out.push(b'\n');
                Ok(out)
            })?;
            let value: serde_json::Value = serde_json::from_slice(&bytes)?;
            args.emit(&bytes)?;
            for gate in ["leibniz", "compatibility", "grassmannian_preserved", "curvature_commutes"] {
                if value[gate] == serde_json::Value::Bool(false) {
                    std::process::exit(1);
                }
            }
        }
    }
    Ok(())
}
