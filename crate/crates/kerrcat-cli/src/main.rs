//! Command-line front end for the kerrcat toolkit.
//!
//! Every run writes its artifacts into one output directory together with a
//! `manifest.json` recording the resolved configuration, its hash, and the
//! numerical settings in force, so any artifact can be regenerated from its
//! manifest alone. Outputs are deterministic: the same configuration and
//! seed produce byte-identical files.
//!
//! Exit codes: 0 success, 1 i/o failure, 2 usage or schema error,
//! 3 numerical failure, 4 infeasible design target.

mod cmds;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "kerrcat", version, about = "Kerr-cat spectra, dynamics, and gate compilation")]
struct Cli {
    /// Output directory (default: $KERRCAT_OUT, falling back to ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed recorded in the manifest; randomized sweeps draw from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of a stabilized cat Hamiltonian, or a gap sweep.
    Spectrum(cmds::SpectrumArgs),
    /// Integrate the stabilized resonator, optionally with photon loss.
    Evolve(cmds::EvolveArgs),
    /// Plan and simulate a vacuum-to-cat preparation schedule.
    Prepare(cmds::PrepareArgs),
    /// Compile a code-space rotation into a well-motion schedule.
    Gate(cmds::GateArgs),
    /// Wigner function of a saved state over a phase-space grid.
    Wigner(cmds::WignerArgs),
    /// Map circuit parameters to effective drives, or invert a drive target.
    Circuit(cmds::CircuitArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match io::RunContext::new(cli.out, cli.seed) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let result = match &cli.command {
        Command::Spectrum(a) => cmds::spectrum(&ctx, a),
        Command::Evolve(a) => cmds::evolve(&ctx, a),
        Command::Prepare(a) => cmds::prepare(&ctx, a),
        Command::Gate(a) => cmds::gate(&ctx, a),
        Command::Wigner(a) => cmds::wigner(&ctx, a),
        Command::Circuit(a) => cmds::circuit(&ctx, a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
