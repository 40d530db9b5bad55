use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use manifold_consensus_cli::{execute, execute_all, parse_with_overrides, presets, Job, JobReport, Overrides};

#[derive(Parser)]
#[command(name = "mcons", version, about = "Consensus and balancing flows on the circle, SO(n) and Grassmann manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run built-in presets by name, or `all`.
    Preset {
        #[arg(required = true)]
        names: Vec<String>,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// List the built-in presets.
    List,
    /// Check scenario files without running them.
    Validate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct RunOpts {
    /// Output directory; with several scenarios each gets a subdirectory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    log_stride: Option<usize>,
    /// Scenarios run in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl RunOpts {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, step: self.step, log_stride: self.log_stride }
    }
}

fn report(reports: &[JobReport]) -> ExitCode {
    for r in reports {
        if r.code == 0 {
            println!("{}: {}", r.label, r.message);
        } else {
            eprintln!("{}: {}", r.label, r.message);
        }
    }
    let code = reports.iter().map(|r| r.code).max().unwrap_or(0);
    ExitCode::from(code as u8)
}

fn run_jobs(list: Vec<Job>, opts: &RunOpts) -> ExitCode {
    let overrides = opts.overrides();
    if list.len() == 1 {
        return report(&[execute(&list[0], &overrides, &opts.out)]);
    }
    report(&execute_all(&list, &overrides, &opts.out, opts.jobs))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenarios, opts } => {
            let mut list = Vec::new();
            for path in &scenarios {
                match Job::from_file(path) {
                    Ok(j) => list.push(j),
                    Err(e) => {
                        eprintln!("{e}");
                        return ExitCode::from(e.exit_code() as u8);
                    }
                }
            }
            run_jobs(list, &opts)
        }
        Command::Preset { names, opts } => {
            let names: Vec<String> = if names.iter().any(|n| n == "all") {
                presets::names().map(String::from).collect()
            } else {
                names
            };
            let mut list = Vec::new();
            for n in &names {
                match Job::preset(n) {
                    Some(j) => list.push(j),
                    None => {
                        eprintln!("unknown preset \"{n}\"; see `mcons list`");
                        return ExitCode::from(1);
                    }
                }
            }
            run_jobs(list, &opts)
        }
        Command::List => {
            for (name, text) in presets::PRESETS {
                let desc = manifold_consensus_cli::scenario::parse_raw(text).map(|r| r.description).unwrap_or_default();
                println!("{name:30} {desc}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { scenarios } => {
            let mut code = 0u8;
            for path in &scenarios {
                let result = Job::from_file(path).map_err(|e| e.to_string()).and_then(|j| {
                    parse_with_overrides(&j.text, &j.base_dir, &Overrides::default()).map_err(|e| e.to_string())
                });
                match result {
                    Ok(sc) => println!("{}: ok ({}, {} agents, {})", path.display(), sc.descriptor, sc.n_agents, sc.flow.name()),
                    Err(e) => {
                        eprintln!("{}:\n{e}", path.display());
                        code = 1;
                    }
                }
            }
            ExitCode::from(code)
        }
    }
}
