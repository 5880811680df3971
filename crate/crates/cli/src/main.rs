use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use corrcache::bounds::{optimize_allocation, Variant};
use corrcache::experiment::{evaluate_point, run_sweep, ExperimentConfig, SweepMode, SweepSpec};
use corrcache::verifier::verify_all;
use corrcache::Error;

#[derive(Parser)]
#[command(name = "corrcache", version, about = "Coded caching for correlated libraries over a degraded Gaussian broadcast channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a correlation fraction or the cache size and write a CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Mode,
        /// CSV destination; standard output when omitted (and not --json).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of uniform grid points (replaces any grid in the config).
        #[arg(long)]
        grid_steps: Option<usize>,
    },
    /// Upper, closed-form, lower and baseline power at the configured point.
    Bound {
        #[command(flatten)]
        common: Common,
    },
    /// Check decodability for every demand vector.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Optimize the cache allocation.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    max_demands: Option<u64>,
    /// Sample this many demand vectors with the given seed when the demand
    /// space exceeds --max-demands.
    #[arg(long)]
    sample_seed: Option<u64>,
    /// Machine-readable report on standard output.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Fig1,
    Fig2,
    Memory,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Corrected,
    AsPrinted,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.variant {
            config.variant = match v {
                VariantArg::Corrected => Variant::Corrected,
                VariantArg::AsPrinted => Variant::AsPrinted,
            };
        }
        if let Some(n) = self.max_demands {
            config.max_demands = n;
        }
        if self.sample_seed.is_some() {
            config.sample_seed = self.sample_seed;
        }
        Ok(config)
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

/// `Ok(true)` on success, `Ok(false)` when verification or a gate fails.
fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Sweep {
            common,
            mode,
            out,
            grid_steps,
        } => {
            let mut config = common.load()?;
            if let Some(steps) = grid_steps {
                config.sweep.steps = steps;
                config.sweep.values = None;
            }
            let mode = match mode {
                Mode::Fig1 => SweepMode::Fig1,
                Mode::Fig2 => SweepMode::Fig2,
                Mode::Memory => SweepMode::Memory,
            };
            let result = run_sweep(&SweepSpec::new(config, mode)?)?;
            for row in &result.rows {
                let p = &row.point;
                eprintln!(
                    "{}={} p_ub={:.6} p_ub_closed={:.6} closed_gap={:+.6} degenerate={:?} p_lb={:.6} p_baseline={:.6} verified={}",
                    result.sweep_var,
                    row.value,
                    p.p_ub,
                    p.p_ub_closed,
                    p.closed_gap,
                    p.degenerate,
                    p.p_lb,
                    p.p_baseline,
                    if p.verified { "pass" } else { "fail" },
                );
            }
            match &out {
                Some(path) => result.write_csv_file(path)?,
                None if !common.json => result.write_csv(std::io::stdout().lock())?,
                None => {}
            }
            if common.json {
                println!("{}", serde_json::to_string_pretty(&result).expect("report serializes"));
            }
            if !result.gates.passed() {
                eprintln!("gate failure: {:?}", result.gates);
            }
            Ok(result.gates.passed())
        }
        Command::Bound { common } => {
            let config = common.load()?;
            let library = config.library()?;
            let fixed = config.fixed_allocation()?;
            let point = evaluate_point(
                &library,
                &config.optimizer,
                &config.enumeration(),
                config.variant,
                fixed.as_ref(),
            )?;
            if common.json {
                println!("{}", serde_json::to_string_pretty(&point).expect("report serializes"));
            } else {
                println!("allocation: {}", fmt_vec(point.allocation.as_slice()));
                println!("p_ub: {:.9}", point.p_ub);
                println!("p_ub_closed: {:.9}", point.p_ub_closed);
                println!("closed_gap: {:+.9}", point.closed_gap);
                println!("degenerate: {:?}", point.degenerate);
                println!("p_lb: {:.9}", point.p_lb);
                println!("p_baseline: {:.9}", point.p_baseline);
                println!("worst_demand: {}", point.worst_demand);
                println!("verified: {}", if point.verified { "pass" } else { "fail" });
            }
            Ok(point.verified)
        }
        Command::Verify { common } => {
            let config = common.load()?;
            let library = config.library()?;
            let enumeration = config.enumeration();
            let alloc = match config.fixed_allocation()? {
                Some(a) => a,
                None => optimize_allocation(&library, &config.optimizer, &enumeration)?.allocation,
            };
            let report = verify_all(&library, &alloc, &enumeration)?;
            if common.json {
                let body = json!({ "allocation": alloc, "report": report });
                println!("{}", serde_json::to_string_pretty(&body).expect("report serializes"));
            } else {
                print!("{}", report.to_text());
                eprintln!(
                    "{} demands, {} checks, {} failures{}",
                    report.demands,
                    report.checks,
                    report.failures.len(),
                    if report.exhaustive { "" } else { " (sampled)" }
                );
            }
            Ok(report.passed())
        }
        Command::Optimize { common } => {
            let config = common.load()?;
            let library = config.library()?;
            let opt = optimize_allocation(&library, &config.optimizer, &config.enumeration())?;
            if common.json {
                println!("{}", serde_json::to_string_pretty(&opt).expect("report serializes"));
            } else {
                println!("allocation: {}", fmt_vec(opt.allocation.as_slice()));
                println!("power: {:.9}", opt.power);
                println!("evaluations: {}", opt.evaluations);
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
