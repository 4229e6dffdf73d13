use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dephasing_cli::{
    execute, load_config, thread_count, write_output, Analysis, CliError, CliResult, Command, Format,
};

/// Exact dephasing of a qubit coupled to a thermal Ising chain.
#[derive(Parser, Debug)]
#[command(name = "dephasing", version)]
struct Args {
    #[command(subcommand)]
    command: Sub,
    /// TOML run configuration; defaults apply to anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output table path (overrides `output.path`); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output encoding (overrides `output.format`).
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads; falls back to DEPHASING_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Gamma(t), |Gamma| and the rate -ln|Gamma| on the time grid.
    Decoherence,
    /// Lee-Yang zeros (closed form and polynomial roots) and critical times.
    LeeYang,
    /// Trace distance between the evolved |+> and |-> and its derivative.
    TraceDistance,
    /// Conditional past-future correlator on the (t, s) grid.
    Cpf,
    /// Mutual information against fragment size, one curve per (beta, t).
    Pip,
    /// Spectrum broadcast structure diagnostics on the time grid.
    Sbs,
    /// Bath purity for each inverse temperature.
    Purity,
    /// Cartesian sweep of the analysis named in the config.
    Sweep,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Decoherence => Command::Analysis(Analysis::Decoherence),
            Sub::LeeYang => Command::Analysis(Analysis::LeeYang),
            Sub::TraceDistance => Command::Analysis(Analysis::TraceDistance),
            Sub::Cpf => Command::Analysis(Analysis::Cpf),
            Sub::Pip => Command::Analysis(Analysis::Pip),
            Sub::Sbs => Command::Analysis(Analysis::Sbs),
            Sub::Purity => Command::Analysis(Analysis::Purity),
            Sub::Sweep => Command::Sweep,
        }
    }
}

fn run(args: Args) -> CliResult<()> {
    let env = std::env::var(dephasing_cli::THREADS_ENV).ok();
    let threads = thread_count(args.threads, env.as_deref())?;
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(p) = args.out {
        cfg.output.path = Some(p.to_string_lossy().into_owned());
    }
    if let Some(f) = args.format {
        cfg.output.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Numeric(format!("cannot start worker pool: {e}")))?;
    let command = Command::from(args.command);
    let out = pool.install(|| execute(command, &cfg))?;
    write_output(&out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dephasing: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
