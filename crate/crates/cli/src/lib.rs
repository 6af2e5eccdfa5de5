//! Configuration-driven front end for `capax-core`.
//!
//! A run takes a [`RunConfig`] (TOML), applies command line overrides, and
//! returns a list of [`Artifact`]s. Outputs carry no timestamps or timings so
//! identical configs give identical bytes.

pub mod config;
mod modes;

use std::path::{Path, PathBuf};

use capax_core::CapaxError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::*;
pub use modes::*;

pub const TOOL: &str = "capax";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn from_core(e: CapaxError) -> Self {
        match e {
            CapaxError::Io(err) => CliError::Io(err.to_string()),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<CapaxError> for CliError {
    fn from(e: CapaxError) -> Self {
        CliError::from_core(e)
    }
}

/// Command line settings that are not part of the config file.
#[derive(Debug, Clone)]
pub struct Options {
    pub mode: Mode,
    pub jobs: usize,
    pub k_max: Option<usize>,
    pub quad_order: Option<usize>,
    /// Relative mesh paths resolve against this directory.
    pub base_dir: PathBuf,
}

impl Options {
    pub fn new(mode: Mode) -> Self {
        Options { mode, jobs: 1, k_max: None, quad_order: None, base_dir: PathBuf::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Wrapper written around every JSON result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub tool: String,
    pub version: String,
    pub mode: Mode,
    pub config_hash: String,
    pub config: RunConfig,
    pub result: T,
}

/// Config with command line overrides and the mode folded in.
pub fn effective_config(cfg: &RunConfig, opts: &Options) -> RunConfig {
    let mut eff = cfg.clone();
    eff.mode = Some(opts.mode);
    if opts.k_max.is_some() {
        eff.k_max = opts.k_max;
    }
    if opts.quad_order.is_some() {
        eff.quad_order = opts.quad_order;
    }
    eff
}

/// SHA-256 of the canonical JSON form of the config.
pub fn config_hash(cfg: &RunConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Validates and executes one run.
pub fn run(cfg: &RunConfig, opts: &Options) -> Result<Vec<Artifact>, CliError> {
    if cfg.mode.is_some_and(|m| m != opts.mode) {
        cfg.validate(opts.mode)?;
    }
    let eff = effective_config(cfg, opts);
    eff.validate(opts.mode)?;
    let ctx = Context { hash: config_hash(&eff), cfg: eff, opts: opts.clone() };
    log::info!("{} run, config {}", opts.mode.name(), ctx.hash);
    capax_core::exec::with_jobs(opts.jobs, || modes::dispatch(&ctx))
}

/// Loads the config at `path` and runs it, resolving meshes next to the config.
pub fn run_file(path: &Path, mut opts: Options) -> Result<Vec<Artifact>, CliError> {
    let cfg = RunConfig::load(path)?;
    opts.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    run(&cfg, &opts)
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.contents).map_err(io)?;
    }
    Ok(())
}

pub(crate) struct Context {
    pub cfg: RunConfig,
    pub hash: String,
    pub opts: Options,
}

impl Context {
    fn json<T: Serialize>(&self, result: T) -> Result<Artifact, CliError> {
        let env = Envelope {
            tool: TOOL.into(),
            version: VERSION.into(),
            mode: self.opts.mode,
            config_hash: self.hash.clone(),
            config: self.cfg.clone(),
            result,
        };
        let mut contents = serde_json::to_string_pretty(&env).map_err(|e| CliError::Io(e.to_string()))?;
        contents.push('\n');
        Ok(Artifact { name: format!("{}.json", self.opts.mode.name()), contents })
    }

    /// CSV with a hash comment line; `None` cells are left empty.
    fn csv(&self, header: &[&str], rows: &[Vec<Cell>]) -> Artifact {
        let mut s = format!("# config_sha256: {}\n{}\n", self.hash, header.join(","));
        for row in rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        Artifact { name: format!("{}.csv", self.opts.mode.name()), contents: s }
    }
}

pub(crate) enum Cell {
    Int(usize),
    Num(f64),
    Opt(Option<f64>),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Opt(Some(x)) => format!("{x:.16e}"),
            Cell::Opt(None) => String::new(),
            Cell::Text(t) => t.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_change_hash() {
        let cfg = RunConfig::parse("").unwrap();
        let mut o = Options::new(Mode::Series);
        let h1 = config_hash(&effective_config(&cfg, &o));
        o.k_max = Some(4);
        let h2 = config_hash(&effective_config(&cfg, &o));
        assert_ne!(h1, h2);
        assert_eq!(h1.len(), 64);
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from_core(CapaxError::InvalidArgument("x".into())).exit_code(), 2);
        assert_eq!(CliError::from_core(CapaxError::SingularSystem { what: "V".into(), cond: 1e17 }).exit_code(), 3);
    }

    #[test]
    fn unknown_field_is_named() {
        let err = RunConfig::parse("k_maxx = 3").unwrap_err();
        assert!(err.to_string().contains("k_maxx"), "{err}");
    }

    #[test]
    fn epsilon_range_expands() {
        let cfg = RunConfig::parse("epsilons = [0.5]\n[epsilon_range]\nstart = 0.01\nstop = 0.04\ncount = 3\ngeometric = true").unwrap();
        let e = cfg.epsilon_list().unwrap();
        assert_eq!(e.len(), 4);
        assert!((e[2] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn mode_mismatch_rejected() {
        let cfg = RunConfig::parse("mode = \"series\"").unwrap();
        let err = run(&cfg, &Options::new(Mode::Newtonian)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("mode"));
    }
}
