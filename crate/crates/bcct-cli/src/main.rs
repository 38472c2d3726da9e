mod config;
mod report;
mod suites;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bcct::boundary_calculus::AnalyticSeries;
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use config::{read_json, ConfigError, Overrides, RunConfig};
use report::{write_json, SuiteReport};

#[derive(Parser)]
#[command(name = "bcct", version, about = "Build and check cut-off functions, smooth Cauchy transforms and weighted spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON file with {"gaps": [{"start": .., "end": ..}]} in radians
    #[arg(long, global = true)]
    set: Option<PathBuf>,
    /// log2 of the boundary grid size
    #[arg(long, global = true)]
    grid: Option<u32>,
    /// Whitney ranks kept per gap side
    #[arg(long, global = true)]
    kmax: Option<u32>,
    /// Threshold for every identity residual
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory (BCCT_OUT takes precedence)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run independent suites on separate threads
    #[arg(long, global = true)]
    parallel: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configuration and the set it describes
    Validate,
    Whitney,
    Cutoff,
    Outer,
    Transform,
    /// Rapidly increasing weight for a coefficient CSV (k,re[,im])
    Weights {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        nmax: u32,
    },
    /// Run the selected suites (all by default)
    Verify {
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
    /// Summarise the verdict files in the output directory
    Report,
}

enum Failure {
    Config(ConfigError),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::Io(e.to_string())
}

fn overrides(c: &Common, suites: Vec<String>) -> Overrides {
    Overrides {
        config: c.config.clone(),
        set: c.set.clone(),
        grid: c.grid,
        k_max: c.kmax,
        tol: c.tol,
        out: c.out.clone(),
        seed: c.seed,
        parallel: c.parallel,
        suites,
    }
}

fn prepare(c: &Common, suites: Vec<String>) -> Result<RunConfig, Failure> {
    let cfg = RunConfig::load(&overrides(c, suites))?;
    fs::create_dir_all(&cfg.out).map_err(io_err)?;
    Ok(cfg)
}

fn print_report(r: &SuiteReport) {
    for c in &r.checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("{tag} {}: {} = {:e} ({:?} {:e})", r.suite, c.name, c.value, c.relation, c.threshold);
    }
}

fn run_suites(cfg: &RunConfig) -> Result<bool, Failure> {
    let reports: Vec<SuiteReport> = if cfg.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = cfg.suites.iter().map(|name| s.spawn(move || suites::run(name, cfg))).collect();
            handles.into_iter().map(|h| h.join().expect("suite thread panicked")).collect()
        })
    } else {
        cfg.suites.iter().map(|name| suites::run(name, cfg)).collect()
    };
    for r in &reports {
        print_report(r);
        write_json(&cfg.out.join(format!("{}.json", r.suite)), r).map_err(io_err)?;
    }
    let pass = reports.iter().all(|r| r.pass);
    let summary = json!({
        "pass": pass,
        "grid": cfg.grid,
        "k_max": cfg.k_max,
        "seed": cfg.seed,
        "suites": reports.iter().map(|r| json!({"suite": r.suite, "pass": r.pass})).collect::<Vec<_>>(),
    });
    write_json(&cfg.out.join("summary.json"), &summary).map_err(io_err)?;
    Ok(pass)
}

fn read_coefficients(path: &Path) -> Result<AnalyticSeries, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let mut coeffs: Vec<Complex64> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if line.trim().is_empty() || fields[0].parse::<usize>().is_err() && line_no == 0 {
            continue;
        }
        let bad = || ConfigError(format!("{}:{}: expected k,re[,im]", path.display(), line_no + 1));
        let k: usize = fields[0].parse().map_err(|_| bad())?;
        let re: f64 = fields.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let im: f64 = match fields.get(2) {
            Some(f) => f.parse().map_err(|_| bad())?,
            None => 0.0,
        };
        if k >= coeffs.len() {
            coeffs.resize(k + 1, Complex64::new(0.0, 0.0));
        }
        coeffs[k] = Complex64::new(re, im);
    }
    if coeffs.is_empty() {
        return Err(ConfigError(format!("{} holds no coefficients", path.display())));
    }
    Ok(AnalyticSeries::new(coeffs))
}

fn summarize(out: &Path) -> Result<bool, Failure> {
    let summary: serde_json::Value = read_json(&out.join("summary.json"))?;
    let entries = summary["suites"].as_array().cloned().unwrap_or_default();
    let mut pass = !entries.is_empty();
    for s in entries {
        let name = s["suite"].as_str().unwrap_or("?").to_string();
        let r: SuiteReport = read_json(&out.join(format!("{name}.json")))?;
        let failed = r.checks.iter().filter(|c| !c.pass).count();
        println!("{:<12} {} ({} checks, {} failed)", r.suite, if r.pass { "PASS" } else { "FAIL" }, r.checks.len(), failed);
        pass &= r.pass;
    }
    Ok(pass)
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    let single = |name: &str| prepare(&cli.common, vec![name.to_string()]).and_then(|cfg| run_suites(&cfg));
    match cli.command {
        Command::Validate => {
            let cfg = prepare(&cli.common, Vec::new())?;
            let info = json!({
                "gaps": cfg.set.gaps,
                "measure": cfg.set.measure,
                "entropy": cfg.set.entropy,
                "components": cfg.set.components().len(),
                "grid": cfg.grid,
                "k_max": cfg.k_max,
                "suites": cfg.suites,
            });
            write_json(&cfg.out.join("validate.json"), &info).map_err(io_err)?;
            println!("valid: {} gaps, measure {:.6}, entropy {:.6}", cfg.set.gaps.len(), cfg.set.measure, cfg.set.entropy);
            Ok(true)
        }
        Command::Whitney => single("whitney"),
        Command::Cutoff => single("cutoff"),
        Command::Outer => single("outer"),
        Command::Transform => single("transform"),
        Command::Weights { input, nmax } => {
            let cfg = prepare(&cli.common, vec!["weights".into()])?;
            let s = match &input {
                Some(p) => read_coefficients(p)?,
                None => AnalyticSeries::from_real(&(0..1usize << 10).map(|k| 2f64.powi(-(k as i32))).collect::<Vec<_>>()),
            };
            let r = suites::weights_for(&s, nmax, &cfg.out)
                .unwrap_or_else(|msg| SuiteReport::new("weights", vec![report::Check::failure("weights", &msg)], json!(null)));
            print_report(&r);
            write_json(&cfg.out.join("weights.json"), &r).map_err(io_err)?;
            Ok(r.pass)
        }
        Command::Verify { suites } => {
            let cfg = prepare(&cli.common, suites)?;
            run_suites(&cfg)
        }
        Command::Report => {
            let cfg = RunConfig::load(&overrides(&cli.common, Vec::new()))?;
            summarize(&cfg.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
