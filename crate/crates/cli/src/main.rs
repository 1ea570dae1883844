use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sasakian_cli::{run, Command, RunConfig, RunReport};

#[derive(Parser)]
#[command(name = "sasakian", version, about = "Verification runs for pseudo-Sasakian structures")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Structure and curvature identities, plus Legendrian suites when an immersion is given.
    Verify(Common),
    /// Closed-form second variations against the volume oracle.
    SecondVariation(Common),
    /// Lorentzian deformations for each configured α.
    Tanno(Common),
    /// Laplace spectrum of the induced metric and the stability verdict.
    Spectrum(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
}

fn load(path: &PathBuf) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    RunConfig::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(report: &RunReport, out: Option<&PathBuf>) -> Result<(), String> {
    match out {
        Some(p) => report.write_json(p).map_err(|e| format!("{}: {e}", p.display()))?,
        None => print!("{}", report.to_json()),
    }
    if let Some(cfg) = &report.config {
        if let Some(p) = &cfg.output.eigenvalues_csv {
            report
                .write_eigenvalues_csv(p)
                .map_err(|e| format!("{}: {e}", p.display()))?;
        }
        if let Some(p) = &cfg.output.constants_csv {
            report
                .write_constants_csv(p)
                .map_err(|e| format!("{}: {e}", p.display()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Verify(a) => (Command::Verify, a),
        Sub::SecondVariation(a) => (Command::SecondVariation, a),
        Sub::Tanno(a) => (Command::Tanno, a),
        Sub::Spectrum(a) => (Command::Spectrum, a),
    };
    let report = match load(&args.config) {
        Ok(cfg) => run(command, &cfg, args.seed, args.tolerance_scale),
        Err(e) => {
            let mut r = RunReport::new(command.name(), args.seed.unwrap_or(0), args.tolerance_scale, None);
            r.error = Some(e);
            r.finish();
            r
        }
    };
    if let Err(e) = emit(&report, args.out.as_ref()) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let _ = report.summary(&mut std::io::stderr());
    match (&report.error, report.pass) {
        (Some(_), _) => ExitCode::from(2),
        (None, true) => ExitCode::SUCCESS,
        (None, false) => ExitCode::from(1),
    }
}
