use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use monofront::cli::{run_command, Command, EXIT_IO, EXIT_VALIDATION};
use monofront::config::parse_config;

/// Monotone wavefronts for delayed non-local monostable equations.
#[derive(Parser)]
#[command(version, about)]
struct Args {
    /// Configuration file (`key = value` lines, `[section]` headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Inline override `KEY=VALUE`; repeatable, wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory for CSVs and report.txt.
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,
    /// Replace c by the critical speed c#(h).
    #[arg(long, global = true)]
    at_c_sharp: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Check the hypotheses on g and report kappa, g'(0), g'(kappa).
    CheckModel,
    /// Real zeros of the characteristic functions and domain membership.
    Charfun,
    /// Critical gain xi*(c, h).
    XiStar,
    /// Critical speed c#(h).
    CSharp,
    /// Classify an (h, c) grid; writes domain_map.csv.
    DomainMap,
    /// Fundamental solution of the linear part; writes fundsol.csv.
    Fundsol,
    /// Compute the wavefront; writes profile.csv and kernelN.csv.
    Solve,
    /// Run the bundled verification suite.
    Verify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::CheckModel => Command::CheckModel,
            Cmd::Charfun => Command::Charfun,
            Cmd::XiStar => Command::XiStar,
            Cmd::CSharp => Command::CSharp,
            Cmd::DomainMap => Command::DomainMap,
            Cmd::Fundsol => Command::Fundsol,
            Cmd::Solve => Command::Solve,
            Cmd::Verify => Command::Verify,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => Some((path.display().to_string(), t)),
            Err(e) => {
                eprintln!("cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_IO as u8);
            }
        },
        None => None,
    };
    let cfg = match parse_config(text.as_ref().map(|(n, t)| (n.as_str(), t.as_str())), &args.set) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    ExitCode::from(run_command(args.cmd.into(), &cfg, &args.out, args.at_c_sharp) as u8)
}
