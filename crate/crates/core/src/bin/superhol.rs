//! Scenario runner for equivariant super holonomy and the bouquet of Chern
//! characters.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use superhol::chern::Normalization;
use superhol::scenario::{self, RunOptions, RunReport, Status};
use superhol::Error;

#[derive(Parser, Debug)]
#[command(name = "superhol", version, about = "Run equivariant super holonomy scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every check of a scenario and write its artifacts
    Run {
        /// Scenario file, or the name of a built-in scenario
        #[arg(long, value_name = "FILE|NAME")]
        scenario: String,

        /// Directory for report.json, timings.json and CSV/JSON artifacts
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,

        /// RK4 steps for every transport problem
        #[arg(long)]
        steps: Option<usize>,

        /// Nodes per axis for closedness sampling and entry tables
        #[arg(long)]
        grid: Option<usize>,

        #[arg(long, value_enum)]
        normalization: Option<NormArg>,

        /// Multiplies every tolerance
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,

        /// Print the report as JSON instead of one line per check
        #[arg(long)]
        json: bool,
    },
    /// List built-in scenarios and those found in a registry directory
    List {
        #[arg(long, value_name = "DIR")]
        registry: Option<PathBuf>,

        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NormArg {
    Raw,
    Chern,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Raw => Normalization::Raw,
            NormArg::Chern => Normalization::Chern,
        }
    }
}

fn print_report(report: &RunReport) -> io::Result<()> {
    let mut out = io::stdout().lock();
    for c in &report.checks {
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        };
        let residual = c.residual.map_or("-".to_string(), |r| format!("{r:.3e}"));
        writeln!(
            out,
            "{status} {:<40} residual {residual:>10} tol {:.1e}  {}",
            c.name, c.tolerance, c.detail
        )?;
    }
    let s = &report.summary;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
    writeln!(
        out,
        "{}: {} (closedness {}, axiom1 {}, axiom2 {}, chern number {})",
        report.scenario,
        if report.passed { "passed" } else { "FAILED" },
        fmt(s.closedness_max),
        fmt(s.axiom1_residual),
        fmt(s.axiom2_residual),
        s.chern_number.map_or("-".to_string(), |v| format!("{v:.6}")),
    )
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Schema { .. } | Error::Registry(_) | Error::Io(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out,
            steps,
            grid,
            normalization,
            tolerance_scale,
            json,
        } => {
            if tolerance_scale <= 0.0 || !tolerance_scale.is_finite() {
                eprintln!("error: --tolerance-scale must be positive");
                return ExitCode::from(2);
            }
            let opts = RunOptions {
                out,
                steps,
                grid,
                normalization: normalization.map(Into::into),
                tolerance_scale,
            };
            let outcome = scenario::resolve(&scenario).and_then(|s| scenario::run(&s, &opts));
            match outcome {
                Ok(o) => {
                    let printed = if json {
                        serde_json::to_writer_pretty(io::stdout().lock(), &o.report)
                            .map_err(io::Error::other)
                            .and_then(|_| writeln!(io::stdout()))
                    } else {
                        print_report(&o.report)
                    };
                    if let Err(e) = printed {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                    if o.report.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::List { registry, json } => match scenario::list_scenarios(registry.as_deref()) {
            Ok(list) => {
                if json {
                    println!("{}", serde_json::to_string_pretty(&list).expect("serializable"));
                } else {
                    for s in list {
                        println!("{:<20} {}  [{}]", s.name, s.description, s.source);
                    }
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
    }
}
