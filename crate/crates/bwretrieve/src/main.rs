use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use bwretrieve::error::Error;
use bwretrieve::harness::{self, HarnessConfig, Method};

#[derive(Parser)]
#[command(
    name = "bwretrieve",
    version,
    about = "Phase retrieval experiments: smoothed Newton-type iterations in whitened coordinates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-iteration error/loss trace of each method on one shared instance
    Trace(CommonArgs),
    /// Success rates per method over a sample-size grid
    SweepSuccess(CommonArgs),
    /// Iteration statistics among successful trials over a grid
    SweepIters(CommonArgs),
    /// log10 geometric-mean error per (method, n, iteration)
    Heatmap(CommonArgs),
    /// Run verification suites and write their report
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; the full-scale default experiment when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Quarter-scale preset: d = 50 with a proportionally scaled grid
    #[arg(long)]
    desk: bool,
    /// Suppress the timestamp header so reruns are byte-identical
    #[arg(long)]
    deterministic: bool,
    /// Comma-separated method subset (bwgd, bwgd_ds_loss, bwgd_ds_quantile, bwgd_ds_oracle)
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Run only suites whose name contains this string
    #[arg(long)]
    suite: Option<String>,
    /// Negative control: bias the analytic gradient fed to the FD suite
    #[arg(long)]
    inject_gradient_fault: bool,
}

fn load_config(args: &CommonArgs) -> Result<HarnessConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => HarnessConfig::from_path(path)?,
        None => HarnessConfig::default(),
    };
    if args.desk {
        cfg.apply_desk_preset();
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(methods) = &args.methods {
        cfg.methods = methods
            .iter()
            .map(|s| Method::from_str(s))
            .collect::<Result<Vec<_>, _>>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) => 2,
        _ => 1,
    }
}

fn run() -> Result<u8, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Trace(args) => {
            let cfg = load_config(&args)?;
            let path = harness::cmd_trace(&cfg, args.deterministic)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::SweepSuccess(args) => {
            let cfg = load_config(&args)?;
            let path = harness::cmd_sweep_success(&cfg, args.deterministic)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::SweepIters(args) => {
            let cfg = load_config(&args)?;
            let path = harness::cmd_sweep_iterations(&cfg, args.deterministic)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::Heatmap(args) => {
            let cfg = load_config(&args)?;
            let path = harness::cmd_heatmap(&cfg, args.deterministic)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::Verify(args) => {
            let cfg = load_config(&args.common)?;
            let (path, outcomes) = harness::cmd_verify(
                &cfg,
                args.common.deterministic,
                args.suite.as_deref(),
                args.inject_gradient_fault,
            )?;
            let mut all_passed = true;
            for c in &outcomes {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                println!(
                    "[{tag}] {}/{}: measured {:.3e}, bound {:.3e} ({})",
                    c.suite, c.check, c.measured, c.bound, c.params
                );
                all_passed &= c.passed;
            }
            println!("wrote {}", path.display());
            Ok(if all_passed { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
