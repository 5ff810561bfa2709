use std::path::PathBuf;
use std::process::ExitCode;

use cdf2pdf::cli::{self, Command, Overrides};
use clap::Parser;

/// Learn conditional CDFs of test statistics from simulations and read off
/// their sampling densities.
#[derive(Debug, Parser)]
#[command(name = "cdf2pdf", version)]
struct Args {
    /// gen, train, sweep, eval, conform, bootstrap, fluctuate, msnn or report.
    command: String,

    /// INI configuration file; defaults apply to every key it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed, overriding `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run directory, overriding `run.out` (default: $CDF2PDF_OUT/<problem>-seed<seed>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Extra overrides as `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Do not print the effective configuration.
    #[arg(long, short)]
    quiet: bool,
}

fn run(args: &Args) -> Result<(), (Option<Command>, cdf2pdf::Error)> {
    let command: Command = args.command.parse().map_err(|e| (None, e))?;
    let fail = |e| (Some(command), e);
    let overrides = Overrides {
        seed: args.seed,
        out: args.out.clone(),
        workers: args.workers,
        set: args.set.clone(),
    };
    let cfg = cli::parse_config(args.config.as_deref(), &overrides).map_err(fail)?;
    if !args.quiet {
        print!("{}", cfg.echo());
        println!();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build_global()
        .map_err(|e| fail(cdf2pdf::Error::Config(format!("cannot start {} workers: {e}", cfg.workers))))?;
    let manifest = cli::run_command(command, &cfg).map_err(fail)?;
    for a in &manifest.artifacts {
        println!("wrote {}", cfg.out.join(&a.path).display());
    }
    println!(
        "wrote {}",
        cfg.out.join(format!("{}.manifest.json", command.name())).display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err((command, e)) => {
            eprintln!("{}", cli::error_line(command, &e));
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
