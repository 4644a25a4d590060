use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sqgt::experiment::{self, ExperimentConfig, Scheme, VerifyRequest};
use sqgt::format::write_file;
use sqgt::oracle::DEFAULT_BUDGET;
use sqgt::Error;

const EXIT_CLAIM_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_REFUSED: u8 = 3;
const EXIT_OTHER: u8 = 4;

#[derive(Parser)]
#[command(
    name = "sqgt",
    version,
    about = "Semiquantitative group testing experiments"
)]
struct Cli {
    /// Master seed. Falls back to $SQGT_SEED, then 1.
    #[arg(long, global = true, env = "SQGT_SEED", default_value_t = 1)]
    seed: u64,

    /// Work budget for exhaustive checks.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    /// Also write a per-trial CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Suppress the summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Instance {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    gamma: u32,
}

#[derive(Args)]
struct Trials {
    /// Number of random defective sets.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Enumerate every defective set of size at most d instead.
    #[arg(long)]
    exhaustive: bool,
    /// Load the design from a directory written by gen-expander or gen-code.
    #[arg(long)]
    design: Option<PathBuf>,
    /// Skip the per-trial claim checks.
    #[arg(long)]
    no_claims: bool,
    /// Run trials on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an expander and write graph, matrix and manifest.
    GenExpander {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a Reed-Solomon design and write code, matrices and manifest.
    GenCode {
        #[command(flatten)]
        instance: Instance,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        kappa: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-round adaptive scheme.
    Adaptive {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        trials: Trials,
        /// Cap on the candidate list, as a multiple of d.
        #[arg(long, default_value_t = sqgt::adaptive::DEFAULT_MAX_LIST_MULTIPLE)]
        max_list_multiple: usize,
        /// Run the binary two-stage baseline instead.
        #[arg(long)]
        conventional: bool,
    },
    /// One-round scheme over a Reed-Solomon code.
    Nonadaptive {
        #[command(flatten)]
        instance: Instance,
        #[command(flatten)]
        trials: Trials,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        kappa: Option<u32>,
    },
    /// Check disjunctness, expansion or code distance of design files.
    Verify {
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        code: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// List size slack for list-disjunctness.
        #[arg(long, default_value_t = 0)]
        ell: usize,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Print lower bounds next to the test counts of both schemes.
    Bounds {
        #[command(flatten)]
        instance: Instance,
    },
}

struct Output<'a> {
    report: Option<&'a PathBuf>,
    quiet: bool,
}

impl Output<'_> {
    fn emit(&self, json: &str) -> Result<(), Error> {
        match self.report {
            Some(path) => write_file(path, json),
            None => {
                print!("{json}");
                Ok(())
            }
        }
    }

    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn configure(scheme: Scheme, instance: &Instance, trials: &Trials, cli: &Cli) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(scheme, instance.n, instance.d, instance.gamma);
    config.trials = trials.trials;
    config.exhaustive = trials.exhaustive;
    config.seed = cli.seed;
    config.budget = cli.budget;
    config.design_dir = trials.design.clone();
    config.check_claims = !trials.no_claims;
    config.parallel = !trials.serial;
    config
}

fn run_experiment(config: ExperimentConfig, cli: &Cli, out: &Output) -> Result<u8, Error> {
    let report = experiment::run(&config)?;
    out.emit(&report.to_json()?)?;
    if let Some(path) = &cli.csv {
        write_file(path, &report.to_csv())?;
    }
    let agg = &report.aggregate;
    out.note(&format!(
        "{} trials, success rate {:.4}, max list {}, round one {} tests, claim failures {}",
        agg.trials,
        agg.success_rate,
        agg.max_list_size,
        report.test_count.round1,
        agg.claim_failures
    ));
    Ok(if report.claims_ok() {
        0
    } else {
        EXIT_CLAIM_FAILURE
    })
}

fn dispatch(cli: &Cli) -> Result<u8, Error> {
    let out = Output {
        report: cli.report.as_ref(),
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::GenExpander { n, d, out: dir } => {
            let manifest = experiment::gen_expander(*n, *d, cli.seed, cli.budget, dir)?;
            out.note(&format!(
                "expander with m={}, k={} ({}) written to {}",
                manifest.m,
                manifest.k,
                if manifest.verified {
                    "verified"
                } else {
                    "unverified"
                },
                dir.display()
            ));
            out.emit(&to_json(&manifest)?)?;
            Ok(0)
        }
        Command::GenCode {
            instance,
            q,
            kappa,
            out: dir,
        } => {
            let manifest =
                experiment::gen_code(instance.n, instance.d, instance.gamma, *q, *kappa, dir)?;
            out.note(&format!(
                "code over F_{} written to {}",
                manifest.q,
                dir.display()
            ));
            out.emit(&to_json(&manifest)?)?;
            Ok(0)
        }
        Command::Adaptive {
            instance,
            trials,
            max_list_multiple,
            conventional,
        } => {
            let scheme = if *conventional {
                Scheme::Conventional
            } else {
                Scheme::Adaptive
            };
            let mut config = configure(scheme, instance, trials, cli);
            config.max_list_multiple = *max_list_multiple;
            run_experiment(config, cli, &out)
        }
        Command::Nonadaptive {
            instance,
            trials,
            q,
            kappa,
        } => {
            let mut config = configure(Scheme::Nonadaptive, instance, trials, cli);
            config.q = *q;
            config.kappa = *kappa;
            run_experiment(config, cli, &out)
        }
        Command::Verify {
            matrix,
            graph,
            code,
            d,
            ell,
            alpha,
            beta,
        } => {
            if matrix.is_none() && graph.is_none() && code.is_none() {
                return Err(Error::Parameter(
                    "verify needs --matrix, --graph or --code".into(),
                ));
            }
            let report = experiment::verify_files(&VerifyRequest {
                matrix: matrix.clone(),
                graph: graph.clone(),
                code: code.clone(),
                d: *d,
                ell: *ell,
                alpha: *alpha,
                beta: *beta,
                budget: cli.budget,
            })?;
            out.emit(&to_json(&report)?)?;
            Ok(if report.any_refused() {
                EXIT_REFUSED
            } else if report.all_hold() {
                0
            } else {
                EXIT_CLAIM_FAILURE
            })
        }
        Command::Bounds { instance } => {
            let report = experiment::bounds_report(instance.n, instance.d, instance.gamma)?;
            out.emit(&to_json(&report)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Parameter(_) | Error::Instance(_) => EXIT_CONFIG,
                Error::BudgetExceeded { .. } => EXIT_REFUSED,
                _ => EXIT_OTHER,
            })
        }
    }
}
