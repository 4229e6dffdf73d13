//! Library side of the `dephasing` command: configuration, analyses,
//! sweeps and output encoding.
//!
//! A run reads a TOML configuration (see `configs/` for examples), evaluates
//! one analysis or a parameter sweep, and writes a CSV or JSON table. When
//! an output path is given, a `<path>.meta.json` sidecar records the
//! resolved configuration, the library version and a short summary.

pub mod analysis;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

pub use analysis::{run_analysis, run_sweep, Report};
pub use config::{parse_config, parse_raw, Analysis, Format, RunConfig};
pub use error::{CliError, CliResult};

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable consulted for the worker count when `--threads`
/// is absent.
pub const THREADS_ENV: &str = "DEPHASING_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Analysis(Analysis),
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analysis(a) => a.name(),
            Command::Sweep => "sweep",
        }
    }
}

/// Reads and resolves a configuration file; no file means all defaults.
pub fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", p.display())))?;
            parse_config(&text)
        }
    }
}

/// `--threads` wins over the environment variable; `None` leaves the
/// choice to rayon.
pub fn thread_count(flag: Option<usize>, env: Option<&str>) -> CliResult<Option<usize>> {
    let n =
        match (flag, env) {
            (Some(n), _) => Some(n),
            (None, Some(v)) if !v.trim().is_empty() => Some(v.trim().parse::<usize>().map_err(|_| {
                CliError::config(THREADS_ENV, format!("expected a positive integer, got {v:?}"))
            })?),
            _ => None,
        };
    if n == Some(0) {
        return Err(CliError::config("threads", "must be at least 1"));
    }
    Ok(n)
}

/// Result of [`execute`]: encoded table and metadata, not yet written.
#[derive(Debug)]
pub struct Output {
    pub body: String,
    pub meta: Value,
    pub path: Option<PathBuf>,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Runs `command` with `cfg` (after command-line overrides have been
/// applied to `cfg.output`).
pub fn execute(command: Command, cfg: &RunConfig) -> CliResult<Output> {
    let report = match command {
        Command::Analysis(a) => run_analysis(a, cfg)?,
        Command::Sweep => run_sweep(cfg)?,
    };
    let meta = json!({
        "tool": "dephasing",
        "version": env!("CARGO_PKG_VERSION"),
        "library_version": dephasing_core::VERSION,
        "schema_version": SCHEMA_VERSION,
        "subcommand": command.name(),
        "format": cfg.output.format,
        "columns": report.table.columns,
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "summary": Value::Object(report.summary),
    });
    Ok(Output {
        body: report.table.encode(cfg.output.format),
        meta,
        path: cfg.output.path.as_ref().map(PathBuf::from),
    })
}

/// Writes the table (to stdout without a path) and the sidecar.
pub fn write_output(out: &Output) -> CliResult<()> {
    match &out.path {
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(out.body.as_bytes())?;
            stdout.flush()?;
        }
        Some(p) => {
            let io = |e: std::io::Error, p: &Path| CliError::Io(format!("cannot write {}: {e}", p.display()));
            std::fs::write(p, &out.body).map_err(|e| io(e, p))?;
            let side = sidecar_path(p);
            let mut meta = serde_json::to_string_pretty(&out.meta).expect("metadata serializes");
            meta.push('\n');
            std::fs::write(&side, meta).map_err(|e| io(e, &side))?;
        }
    }
    Ok(())
}
