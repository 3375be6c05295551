//! `drh`: batch front-end for the hierarchy engine.
//!
//! Exit status: 0 success, 1 a requested check failed, 2 bad configuration,
//! 3 file error, 4 engine error. Failures print a JSON report on stderr.

mod commands;
mod config;
mod diff;
mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use drh::ring::json::{FormulaJson, RingJson};
use drh::{Gaussian, Mode, RingContext, TruncationWindow};
use serde_json::{json, Value};

use config::{CommandKind, Format, JobConfig, ModeArg};
use error::CliError;

#[derive(Parser)]
#[command(name = "drh", version, about = "Exact computations with DR-type integrable hierarchies")]
struct Cli {
    /// Worker threads for the engine [env: DRH_THREADS]; defaults to all cores.
    #[arg(long, global = true, env = "DRH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct JobArgs {
    /// TOML or JSON file with the same fields as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    job: JobConfig,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the densities G_{alpha,d} of a hierarchy.
    Generate(JobArgs),
    /// Run commutativity, string, second-recursion and tau checks.
    Verify(JobArgs),
    /// Apply a Miura map, or the normal map generated by F.
    Miura(JobArgs),
    /// Solve for the next genus of a DR-type Hamiltonian.
    Ansatz(JobArgs),
    /// Gelfand-Dickey Lax operators: roots, flows, Hamiltonians.
    Lax(JobArgs),
    /// Transport a density along the flows.
    Evolve(JobArgs),
    /// Run the job described by a config file (its `command` field).
    Run(JobArgs),
    /// Compare two formula tables.
    Diff {
        a: PathBuf,
        b: PathBuf,
        /// Accept differences confined to u-independent constants.
        #[arg(long)]
        constants_ok: bool,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Render a formula file in the pretty grammar, or parse text into JSON.
    Pretty {
        /// Formula or table JSON to render.
        file: Option<PathBuf>,
        /// Text in the pretty grammar to convert to JSON instead.
        #[arg(long, conflicts_with = "file")]
        parse: Option<String>,
        #[arg(long, default_value_t = 1)]
        n_vars: usize,
        #[arg(long, value_enum, default_value = "classical")]
        mode: ModeArg,
        #[arg(long, value_delimiter = ',')]
        params: Vec<String>,
    },
    /// List the built-in presets.
    Presets,
}

/// Stdout without the panic on a closed pipe.
fn say(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

#[cfg(unix)]
fn default_permissions() -> std::fs::Permissions {
    use std::os::unix::fs::PermissionsExt;
    std::fs::Permissions::from_mode(0o644)
}

#[cfg(not(unix))]
fn default_permissions() -> std::fs::Permissions {
    let mut p = std::fs::metadata(".").map(|m| m.permissions()).expect("current directory");
    p.set_readonly(false);
    p
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))?;
    let perms = match std::fs::metadata(path) {
        Ok(m) => m.permissions(),
        Err(_) => default_permissions(),
    };
    tmp.as_file().set_permissions(perms).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn emit(json: &Value, pretty: &str, format: Format, output: Option<&Path>) -> Result<(), CliError> {
    let text = match format {
        Format::Json => serde_json::to_string_pretty(json).expect("values serialize") + "\n",
        Format::Pretty => pretty.to_string(),
    };
    match output {
        Some(p) => write_atomic(p, &text),
        None => {
            say(&text);
            Ok(())
        }
    }
}

fn job(kind: Option<CommandKind>, args: JobArgs) -> Result<ExitCode, CliError> {
    let file = args.config.as_deref().map(JobConfig::load).transpose()?.unwrap_or_default();
    let job = args.job.over(file);
    let kind = match (kind, job.command) {
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => return Err(CliError::config("command", "required in the config file")),
    };
    let artifact = commands::run(kind, &job)?;
    emit(&artifact.json, &artifact.pretty, job.format(), job.output.as_deref())?;
    if artifact.failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    let report = json!({ "status": "failed", "failures": artifact.failures });
    eprintln!("{}", serde_json::to_string(&report).expect("values serialize"));
    Ok(ExitCode::from(1))
}

/// A ring able to hold the formulas of a document, for rendering only.
fn ring_for(ring: Option<RingJson>, formulas: &[(String, FormulaJson)]) -> Result<Arc<RingContext>, CliError> {
    if let Some(r) = ring {
        return Ok(r.to_ctx()?);
    }
    let Some((_, first)) = formulas.first() else {
        return Ok(RingContext::scalar(Mode::Classical, &[], TruncationWindow::unbounded()));
    };
    let quantum = formulas.iter().any(|(_, f)| f.terms.iter().any(|t| t.hbar > 0));
    let mode = if quantum { Mode::Quantum } else { Mode::Classical };
    let n = first.ring.n_vars;
    let eta = (0..n).map(|a| (0..n).map(|b| Gaussian::from_int(i64::from(a == b))).collect()).collect();
    Ok(RingContext::new(eta, first.ring.params.clone(), mode, TruncationWindow::unbounded())?)
}

fn pretty_cmd(file: Option<PathBuf>, parse: Option<String>, n_vars: usize, mode: ModeArg, params: Vec<String>) -> Result<ExitCode, CliError> {
    if let Some(text) = parse {
        let eta = (0..n_vars).map(|a| (0..n_vars).map(|b| Gaussian::from_int(i64::from(a == b))).collect()).collect();
        let ctx = RingContext::new(eta, params, mode.into(), TruncationWindow::unbounded())?;
        let f = drh::ring::pretty::parse_pretty(&text, &ctx)?;
        say(&(serde_json::to_string_pretty(&FormulaJson::from_poly(&f)).expect("values serialize") + "\n"));
        return Ok(ExitCode::SUCCESS);
    }
    let path = file.ok_or_else(|| CliError::config("file", "give a file or --parse TEXT"))?;
    let (ring, formulas) = diff::entries(&diff::read_json(&path)?, &path)?;
    let ctx = ring_for(ring, &formulas)?;
    for (k, f) in &formulas {
        let poly = f.to_poly(&ctx)?;
        if k.is_empty() {
            say(&format!("{poly}\n"));
        } else {
            say(&format!("{k}: {poly}\n"));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Generate(a) => job(Some(CommandKind::Generate), a),
        Command::Verify(a) => job(Some(CommandKind::Verify), a),
        Command::Miura(a) => job(Some(CommandKind::Miura), a),
        Command::Ansatz(a) => job(Some(CommandKind::Ansatz), a),
        Command::Lax(a) => job(Some(CommandKind::Lax), a),
        Command::Evolve(a) => job(Some(CommandKind::Evolve), a),
        Command::Run(a) => job(None, a),
        Command::Diff { a, b, constants_ok, format, output } => {
            let (report, passed) = diff::diff(&diff::Table::load(&a)?, &diff::Table::load(&b)?, constants_ok)?;
            emit(&report, &diff::pretty(&report), format.unwrap_or_default(), output.as_deref())?;
            Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Pretty { file, parse, n_vars, mode, params } => pretty_cmd(file, parse, n_vars, mode, params),
        Command::Presets => {
            for (name, about) in drh::recursion::preset_names() {
                say(&format!("{name:<20} {about}\n"));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("{}", json!({ "status": "error", "kind": "config", "field": "threads", "message": e.to_string() }));
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code())
        }
    }
}
