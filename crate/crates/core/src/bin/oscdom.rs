use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oscdom::harness::{exit_code, render_report, run_suite, ExperimentConfig, SUITES};

#[derive(Parser)]
#[command(name = "oscdom", version, about = "Run and report sparse-domination experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one suite, or `all`.
    Run {
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "n")]
        dim: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        operator: Option<String>,
        #[arg(long)]
        corpus: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        rings: Option<usize>,
        #[arg(long)]
        eta_target: Option<f64>,
    },
    /// Print the summary table of a run directory.
    Report { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Report { dir } => match render_report(&dir) {
            Ok(table) => {
                print!("{table}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run {
            suite,
            config,
            dim,
            grid,
            seed,
            out,
            operator,
            corpus,
            lambda,
            max_depth,
            rings,
            eta_target,
        } => {
            let mut cfg = match config {
                Some(p) => match ExperimentConfig::load(&p) {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                },
                None => ExperimentConfig::default(),
            };
            cfg.dim = dim.unwrap_or(cfg.dim);
            cfg.grid = grid.unwrap_or(cfg.grid);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.out = out.unwrap_or(cfg.out);
            cfg.operator = operator.unwrap_or(cfg.operator);
            cfg.corpus = corpus.unwrap_or(cfg.corpus);
            let e = &mut cfg.engine;
            e.lambda = lambda.or(e.lambda);
            e.max_depth = max_depth.or(e.max_depth);
            e.rings = rings.or(e.rings);
            e.eta_target = eta_target.or(e.eta_target);

            let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite.as_str()] };
            let mut code = 0;
            for name in names {
                // `all` runs the planar-only suite in the plane.
                let result = if suite == "all" && name == "sobolev" && cfg.dim == 1 {
                    run_suite(name, &ExperimentConfig { dim: 2, grid: 0, ..cfg.clone() })
                } else {
                    run_suite(name, &cfg)
                };
                match &result {
                    Ok(o) => {
                        println!("{name}: {}", if o.passed { "PASS" } else { "FAIL" });
                        for f in &o.failures {
                            println!("  {f}");
                        }
                    }
                    Err(e) => eprintln!("{name}: error: {e}"),
                }
                code = code.max(exit_code(&result));
            }
            ExitCode::from(code as u8)
        }
    }
}
