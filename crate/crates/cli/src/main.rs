use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynext_cli::{execute, Construction, Options};
use dynext_core::certificate::Format;

#[derive(Parser)]
#[command(name = "dynext", version, about = "Build and certify universal dynamical constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Embed a partial injection into the universal injection.
    EmbedInjection,
    /// Factor a matrix operator through a multiple of the universal operator.
    FactorOperator,
    /// Lift a map or a rotation family to the symbolic space.
    LiftMap,
    /// Common extension of several map families.
    CommonExtension,
    /// Controlled powers and the contractive common extension.
    ContractiveExtension,
    /// Generalized (set-valued) common extension.
    GeneralizedExtension,
    /// Refinement tower around a finite invariant set.
    InvariantTower,
    /// Check the cover systems.
    VerifyCovers,
    /// Run every section of a scenario file.
    Run,
}

#[derive(Args)]
struct Flags {
    /// Scenario file with `[construction]` sections.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Resolution, depth or scan limit, depending on the construction.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Number of random samples.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for certificate.txt and summary.txt.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "text")]
    format: Format,
    /// Space for lift-map and verify-covers (e.g. interval, circle, cantor*finite(3)).
    #[arg(long, global = true)]
    space: Option<String>,
}

fn construction(cmd: Command) -> Option<Construction> {
    Some(match cmd {
        Command::EmbedInjection => Construction::EmbedInjection,
        Command::FactorOperator => Construction::FactorOperator,
        Command::LiftMap => Construction::LiftMap,
        Command::CommonExtension => Construction::CommonExtension,
        Command::ContractiveExtension => Construction::ContractiveExtension,
        Command::GeneralizedExtension => Construction::GeneralizedExtension,
        Command::InvariantTower => Construction::InvariantTower,
        Command::VerifyCovers => Construction::VerifyCovers,
        Command::Run => return None,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let f = cli.flags;
    let opts = Options { depth: f.depth, samples: f.samples, seed: f.seed, space: f.space };
    let report = match execute(f.scenario.as_deref(), construction(cli.command), &opts, f.format) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match &f.out {
        Some(dir) => match report.write_to(dir) {
            Ok((cert, _)) => {
                print!("{}", report.summary());
                println!("certificate: {}", cert.display());
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => {
            print!("{}", report.rendered());
            if let Some((path, witness)) = report.certificate.first_failure() {
                println!("first failure: {path}: {witness}");
            }
        }
    }
    ExitCode::from(report.exit_code())
}
