//! The `qclab` command-line runner.
//!
//! Each subcommand resolves a [`RunConfig`], computes in memory and only then writes
//! `<output>/<subcommand>.json` (and a CSV table where there is one). Nothing is
//! written when configuration or computation fails.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

pub use config::{Flags, RunConfig};

pub const SCHEMA_VERSION: &str = "1";
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    /// Module name and message.
    Compute(&'static str, String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Compute(module, m) => write!(f, "compute error in {module}: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Compute(..) => EXIT_COMPUTE,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "qclab", version, about = "Spectral and dynamical experiments on quasi-contact sub-Riemannian models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HermiteAction {
    Verify,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pointwise invariance report and Popp volume
    Geometry(Flags),
    /// Eigenvalues with multiplicities (oracle or grid)
    Spectrum(Flags),
    /// Fit of N(λ)/λ^{5/2}
    Weyl(Flags),
    /// Heat trace and its small-t constant
    Heat(Flags),
    /// Smoothed wave trace
    Wave(Flags),
    /// Hermite/Landau transform identities
    Hermite {
        action: HermiteAction,
        #[command(flatten)]
        flags: Flags,
    },
    /// Birkhoff normal form of a jet
    Bnf(Flags),
    /// Lifted characteristic flow on the blow-up boundary
    Flow(Flags),
    /// Period bands of the lifted flow
    Periods(Flags),
    /// Running Cesàro averages of matrix elements
    Qe(Flags),
}

impl Command {
    fn split(self) -> (&'static str, Flags) {
        match self {
            Command::Geometry(f) => ("geometry", f),
            Command::Spectrum(f) => ("spectrum", f),
            Command::Weyl(f) => ("weyl", f),
            Command::Heat(f) => ("heat", f),
            Command::Wave(f) => ("wave", f),
            Command::Hermite { action: HermiteAction::Verify, flags } => ("hermite", flags),
            Command::Bnf(f) => ("bnf", f),
            Command::Flow(f) => ("flow", f),
            Command::Periods(f) => ("periods", f),
            Command::Qe(f) => ("qe", f),
        }
    }
}

/// Computed artifacts of one run, not yet on disk.
pub struct Artifacts {
    pub json: Value,
    pub csv: Option<Vec<u8>>,
}

/// Subcommand-specific part of a run.
pub(crate) struct Outcome {
    pub result: Value,
    pub completeness: Value,
    pub csv: Option<Vec<u8>>,
}

/// Runs `subcommand` on a resolved configuration without touching the filesystem.
pub fn compute(subcommand: &str, mut cfg: RunConfig) -> Result<Artifacts, CliError> {
    cfg.validate()?;
    let threads = *cfg.threads.get_or_insert(1);
    let seed = *cfg.seed.get_or_insert(0);
    cfg.output.get_or_insert_with(|| ".".into());
    let out = match subcommand {
        "geometry" => commands::geometry(&mut cfg)?,
        "spectrum" => commands::spectrum(&mut cfg)?,
        "weyl" => commands::weyl(&mut cfg)?,
        "heat" => commands::heat(&mut cfg)?,
        "wave" => commands::wave(&mut cfg)?,
        "hermite" => commands::hermite(&mut cfg)?,
        "bnf" => commands::bnf(&mut cfg)?,
        "flow" => commands::flow(&mut cfg)?,
        "periods" => commands::periods(&mut cfg)?,
        "qe" => commands::qe(&mut cfg)?,
        other => return Err(CliError::Config(format!("unknown subcommand {other:?}"))),
    };
    let json = json!({
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "code_version": CODE_VERSION,
        "config": serde_json::to_value(&cfg).map_err(|e| CliError::Compute("cli", e.to_string()))?,
        "metadata": {
            "threads": threads,
            "seed": seed,
            "completeness": out.completeness,
        },
        "result": out.result,
    });
    Ok(Artifacts { json, csv: out.csv })
}

fn write_atomically(files: &[(PathBuf, Vec<u8>)]) -> std::io::Result<()> {
    let mut staged = Vec::new();
    for (path, bytes) in files {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(".partial");
        let tmp = path.with_file_name(name);
        let res = std::fs::File::create(&tmp).and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()));
        if let Err(e) = res {
            let _ = std::fs::remove_file(&tmp);
            for (t, _) in &staged {
                let _ = std::fs::remove_file(t);
            }
            return Err(e);
        }
        staged.push((tmp, path.clone()));
    }
    for (tmp, path) in staged {
        std::fs::rename(tmp, path)?;
    }
    Ok(())
}

/// Computes and writes the artifacts; returns the written paths.
pub fn run(subcommand: &str, cfg: RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = {
        cfg.validate()?;
        cfg.output_dir()?
    };
    let art = compute(subcommand, cfg)?;
    let mut text = serde_json::to_string_pretty(&art.json).map_err(|e| CliError::Compute("cli", e.to_string()))?;
    text.push('\n');
    let mut files = vec![(dir.join(format!("{subcommand}.json")), text.into_bytes())];
    if let Some(csv) = art.csv {
        files.push((dir.join(format!("{subcommand}.csv")), csv));
    }
    write_atomically(&files).map_err(|e| CliError::Compute("cli", format!("writing output: {e}")))?;
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (name, flags) = cli.command.split();
    let res = flags.resolve().and_then(|cfg| run(name, cfg));
    match res {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("qclab {name}: {e}");
            e.exit_code()
        }
    }
}

/// Schema file shipped for `subcommand`, relative to the crate root.
pub fn schema_path(subcommand: &str) -> PathBuf {
    Path::new("schemas").join(format!("{subcommand}.schema.json"))
}

pub const SUBCOMMANDS: [&str; 10] =
    ["geometry", "spectrum", "weyl", "heat", "wave", "hermite", "bnf", "flow", "periods", "qe"];
