//! Job configuration: one struct shared by the flag parser and config files.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Generate,
    Verify,
    Miura,
    Ansatz,
    Lax,
    Evolve,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Classical,
    Quantum,
}

impl From<ModeArg> for drh::Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Classical => drh::Mode::Classical,
            ModeArg::Quantum => drh::Mode::Quantum,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ConstantsArg {
    #[default]
    Zero,
    Paper,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Pretty,
}

/// Every field is optional so that a file and the flags can be layered;
/// flags win.
#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    /// Only read from config files; the subcommand sets it otherwise.
    #[arg(skip)]
    pub command: Option<CommandKind>,

    /// Built-in generator (see `drh presets`).
    #[arg(long)]
    pub preset: Option<String>,
    /// Hierarchy spec in JSON, instead of a preset.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub d_max: Option<i64>,
    /// Keep terms of genus at most this (order = 2 x genus).
    #[arg(long)]
    pub genus_cutoff: Option<u32>,
    /// Keep terms of order at most this; overrides the genus cutoff.
    #[arg(long)]
    pub eps_order: Option<u32>,
    #[arg(long)]
    pub u_degree_cutoff: Option<u32>,
    #[arg(long, value_enum)]
    pub constants: Option<ConstantsArg>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// verify: commutativity, string, second-recursion, tau.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub checks: Vec<String>,

    /// miura: the generator F of a normal Miura map, in the pretty grammar.
    #[arg(long)]
    pub generator: Option<String>,
    /// miura: images of the variables, one flag per variable.
    #[arg(long = "map")]
    #[serde(default)]
    pub map: Vec<String>,

    /// ansatz: the Hamiltonian known through genus − 1.
    #[arg(long)]
    pub known: Option<String>,
    #[arg(long)]
    pub genus: Option<u32>,
    /// ansatz: extra ring parameters appearing in `known`.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub params: Vec<String>,
    #[arg(long)]
    pub d_check: Option<i64>,
    #[arg(long)]
    pub lookahead: Option<u32>,
    #[arg(long)]
    pub max_u_degree: Option<u32>,
    #[arg(long)]
    pub gauge: Option<String>,
    #[arg(long)]
    pub normalization: Option<String>,

    /// lax: size of the Lax operator.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub depth: Option<u32>,
    /// lax: powers m of the flows and Hamiltonians to emit.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub m: Vec<u32>,

    /// evolve: the density to transport.
    #[arg(long)]
    pub density: Option<String>,
    /// evolve: levels `alpha,d`; each gets its own time parameter.
    #[arg(long = "time")]
    #[serde(default)]
    pub times: Vec<String>,
    /// evolve: Taylor order in the times.
    #[arg(long)]
    pub order: Option<u32>,
}

macro_rules! layer {
    ($flags:ident, $file:ident; $($opt:ident),*; $($vec:ident),*) => {
        JobConfig {
            $($opt: $flags.$opt.or($file.$opt),)*
            $($vec: if $flags.$vec.is_empty() { $file.$vec } else { $flags.$vec },)*
        }
    };
}

impl JobConfig {
    /// `self` over `file`, field by field.
    pub fn over(self, file: JobConfig) -> JobConfig {
        let flags = self;
        layer!(flags, file;
            command, preset, input, mode, d_max, genus_cutoff, eps_order, u_degree_cutoff, constants, output,
            format, generator, known, genus, d_check, lookahead, max_u_degree, gauge, normalization, r, depth,
            density, order;
            checks, map, params, m, times)
    }

    pub fn load(path: &Path) -> Result<JobConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let bad = |message: String| CliError::Config { field: path.display().to_string(), message };
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| bad(e.to_string())),
            _ => toml::from_str(&text).map_err(|e| bad(e.to_string())),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn window(&self) -> drh::TruncationWindow {
        drh::TruncationWindow {
            order_cutoff: self.eps_order.or(self.genus_cutoff.map(|g| 2 * g)),
            u_degree_cutoff: self.u_degree_cutoff,
        }
    }

    pub fn require<'a, T>(&self, value: &'a Option<T>, field: &str) -> Result<&'a T, CliError> {
        value.as_ref().ok_or_else(|| CliError::Config { field: field.into(), message: "required".into() })
    }
}
