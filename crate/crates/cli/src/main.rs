//! `biflat`: builds bi-flat F-manifold structures, runs the verification
//! suites and writes JSON reports and CSV artifacts.
//!
//! Exit status: 0 when every check passes, 1 when some residual exceeds its
//! tolerance (the report is still written), 2 for invalid input or a run that
//! could not be carried out.

mod commands;
mod params;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Command, Ctx};
use params::{Params, Tols};
use report::{write_atomic, Report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Library(#[from] biflat::Error),
    #[error("cannot write {0}")]
    Io(String),
}

#[derive(Parser, Debug)]
#[command(name = "biflat", version, about = "Bi-flat F-manifolds: construction and numerical verification")]
struct Cli {
    /// JSON manifest with the run parameters; flags given on the command line
    /// take precedence over its values.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Top>,
}

#[derive(Subcommand, Debug)]
enum Top {
    /// Build a model and check the equations it solves.
    #[command(subcommand)]
    Models(ModelsCmd),
    /// Check every defining property of a bi-flat F-manifold at sampled points.
    Verify(Params),
    /// The six-dimensional reduction for three dimensions.
    #[command(subcommand)]
    Ode3(Ode3Cmd),
    /// Maps between the reduction and the sigma form.
    #[command(subcommand)]
    Painleve(PainleveCmd),
    /// Lamé coefficients as eigenvectors.
    #[command(subcommand)]
    Lame(LameCmd),
    /// Symmetries, recursion and commuting flows.
    #[command(subcommand)]
    Hierarchy(HierarchyCmd),
}

#[derive(Subcommand, Debug)]
enum ModelsCmd {
    /// The ε-system in n dimensions.
    Epsilon(Params),
    /// Two-dimensional rotation coefficients with constants C1, C2.
    N2(Params),
}

#[derive(Subcommand, Debug)]
enum Ode3Cmd {
    /// Integrate from z0 to z1 and write the trajectory as CSV.
    Integrate(Params),
    /// The conserved quantities -R^2 and D of an initial state.
    Invariants(Params),
}

#[derive(Subcommand, Debug)]
enum PainleveCmd {
    /// The sigma-form function f along a trajectory.
    Sigma(Params),
    /// Rebuild the trajectory from its sigma-form data.
    Reconstruct(Params),
    /// Roots of the parameter cubic.
    Params(Params),
}

#[derive(Subcommand, Debug)]
enum LameCmd {
    /// Eigenpairs of the matrix V_ij = (u^j - u^i) beta_ij.
    Eigen(Params),
}

#[derive(Subcommand, Debug)]
enum HierarchyCmd {
    /// Symmetry residual of the characteristic velocities.
    Symmetry(Params),
    /// One recursion step, checked for path independence.
    Recurse(Params),
    /// Commutator of two flows on a periodic grid.
    Commute(Params),
}

impl Top {
    fn split(self) -> (Command, Params) {
        match self {
            Top::Models(ModelsCmd::Epsilon(p)) => (Command::ModelsEpsilon, p),
            Top::Models(ModelsCmd::N2(p)) => (Command::ModelsN2, p),
            Top::Verify(p) => (Command::Verify, p),
            Top::Ode3(Ode3Cmd::Integrate(p)) => (Command::Ode3Integrate, p),
            Top::Ode3(Ode3Cmd::Invariants(p)) => (Command::Ode3Invariants, p),
            Top::Painleve(PainleveCmd::Sigma(p)) => (Command::PainleveSigma, p),
            Top::Painleve(PainleveCmd::Reconstruct(p)) => (Command::PainleveReconstruct, p),
            Top::Painleve(PainleveCmd::Params(p)) => (Command::PainleveParams, p),
            Top::Lame(LameCmd::Eigen(p)) => (Command::LameEigen, p),
            Top::Hierarchy(HierarchyCmd::Symmetry(p)) => (Command::HierarchySymmetry, p),
            Top::Hierarchy(HierarchyCmd::Recurse(p)) => (Command::HierarchyRecurse, p),
            Top::Hierarchy(HierarchyCmd::Commute(p)) => (Command::HierarchyCommute, p),
        }
    }
}

/// Combines the manifest (if any) with the flags and validates the result.
fn resolve(cli: Cli) -> Result<Ctx, CliError> {
    let from_flags = cli.command.map(Top::split);
    let (cmd, p) = match (cli.manifest.as_deref(), from_flags) {
        (None, None) => return Err(CliError::Input("no command given (see --help)".into())),
        (None, Some((cmd, p))) => (cmd, p),
        (Some(path), flags) => {
            let manifest = params::load_manifest(path)?;
            let named = Command::from_name(manifest.command.as_deref().unwrap_or_default())?;
            match flags {
                Some((cmd, _)) if cmd != named => {
                    return Err(CliError::Input(format!(
                        "manifest command \"{}\" differs from `{}`",
                        named.name(),
                        cmd.name()
                    )))
                }
                Some((_, p)) => (named, manifest.overlay(&p)?),
                None => (named, manifest),
            }
        }
    };
    let p = Params {
        command: Some(cmd.name().to_string()),
        ..p
    };
    cmd.check_keys(&p)?;
    if p.points == Some(0) {
        return Err(CliError::Input("--points must be positive".into()));
    }
    let tols = Tols::resolve(&p)?;
    Ok(Ctx { cmd, p, tols })
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    if path == Path::new("-") {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}")))
    } else {
        write_atomic(path, text.as_bytes())
    }
}

fn execute(ctx: Ctx) -> Result<bool, CliError> {
    let out = commands::run(&ctx)?;
    let mut artifacts = Vec::new();
    let csv_to_stdout = ctx.p.csv.as_deref() == Some(Path::new("-"));
    if let (Some(path), Some(csv)) = (&ctx.p.csv, &out.csv) {
        write_output(path, csv)?;
        artifacts.push(path.display().to_string());
    }
    let pass = out.checks.pass();
    for r in out.checks.checks() {
        eprintln!(
            "{} {}: {:.3e} (tolerance {:.1e})",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.value,
            r.tolerance
        );
    }
    let report = Report {
        tool: env!("CARGO_BIN_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: ctx.cmd.name().to_string(),
        provenance: out.provenance,
        parameters: ctx.p.to_json(),
        tolerances: ctx.tols,
        checks: out.checks.into_vec(),
        data: out.data,
        artifacts,
        pass,
    };
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(format!("report: {e}")))?;
    json.push('\n');
    match &ctx.p.report {
        Some(path) => write_output(path, &json)?,
        // Keep stdout machine-readable when it already carries the CSV.
        None if csv_to_stdout => eprint!("{json}"),
        None => write_output(Path::new("-"), &json)?,
    }
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match resolve(cli).and_then(execute) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
