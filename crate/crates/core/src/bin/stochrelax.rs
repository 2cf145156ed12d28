use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stochrelax::cli::{binomial_demo, mgf_demo, orlicz_demo, run_command, DemoReport, RunConfig};

#[derive(Parser)]
#[command(name = "stochrelax", version, about = "Stochastic relaxation of pseudo-Boolean functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the replicates described by a TOML config.
    Run { config: PathBuf },
    /// Moment generating function under the uniform law of a function file.
    Mgf {
        file: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
    },
    /// Identity checks for the binomial family.
    BinomialDemo {
        #[arg(long)]
        n: u32,
    },
    /// Non-steepness table of the gamma-tail family.
    OrliczDemo {
        #[arg(long)]
        a: f64,
    },
}

fn report(r: DemoReport) -> ExitCode {
    print!("{}", r.text);
    if r.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: a verification check failed");
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => fs::read_to_string(&config)
            .map_err(stochrelax::Error::from)
            .and_then(|text| RunConfig::parse(&text))
            .and_then(|c| run_command(&c).map(|o| (c, o)))
            .map(|(c, outcome)| {
                for r in &outcome.replicates {
                    match &r.error {
                        None => println!(
                            "replicate {}: {} after {} iterations, best {}",
                            r.replicate,
                            r.status.map(|s| s.as_str()).unwrap_or(""),
                            r.iterations,
                            r.final_best.map(|v| v.to_string()).unwrap_or_default()
                        ),
                        Some(e) => eprintln!("replicate {}: error: {e}", r.replicate),
                    }
                }
                if let Some(best) = outcome.best(&c) {
                    println!("best {best}");
                }
                println!("summary {}", outcome.summary_path.display());
                if outcome.success() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }),
        Command::Mgf { file, t } => fs::read_to_string(&file)
            .map_err(stochrelax::Error::from)
            .and_then(|text| mgf_demo(&text, t))
            .map(report),
        Command::BinomialDemo { n } => binomial_demo(n).map(report),
        Command::OrliczDemo { a } => orlicz_demo(a).map(report),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
