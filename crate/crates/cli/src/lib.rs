//! Batch front end for the catarray simulations.
//!
//! A run reads one configuration (see [`config`] for the grammar), resolves
//! the sweep into points, solves them on a small worker pool and writes one
//! table whose header echoes the resolved configuration.

pub mod config;
pub mod output;
pub mod pool;
pub mod tasks;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::{ConfigError, Format, RunConfig, Task};
use output::Table;

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status for configuration and usage errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for solver failures.
pub const EXIT_NUMERICAL: i32 = 3;
/// Exit status for I/O failures on the output.
pub const EXIT_IO: i32 = 1;

/// Diagnostics file written when no output path is given.
pub const DEFAULT_DIAGNOSTICS: &str = "catarray.diag";

#[derive(Clone, Debug)]
pub struct Options {
    pub task: Task,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: usize,
    pub kernel_tol: Option<f64>,
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical { message: String, diagnostics: PathBuf },
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Numerical { .. } => EXIT_NUMERICAL,
            RunError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Numerical { message, diagnostics } => {
                write!(f, "numerical failure: {message} (diagnostics in {})", diagnostics.display())
            }
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

/// Parses the configuration and applies command-line overrides.
pub fn resolve(opts: &Options) -> Result<RunConfig, RunError> {
    if opts.jobs == 0 {
        return Err(RunError::Config(ConfigError {
            key: "--jobs".into(),
            message: "must be at least 1".into(),
        }));
    }
    let text = std::fs::read_to_string(&opts.config).map_err(|e| {
        RunError::Config(ConfigError {
            key: "--config".into(),
            message: format!("cannot read {}: {e}", opts.config.display()),
        })
    })?;
    let mut cfg = RunConfig::parse(&text, opts.task).map_err(RunError::Config)?;
    if let Some(f) = opts.format {
        cfg.format = f;
    }
    if let Some(t) = opts.kernel_tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(RunError::Config(ConfigError {
                key: "--kernel-tol".into(),
                message: format!("must be > 0, got {t}"),
            }));
        }
        cfg.kernel_tol = t;
    }
    Ok(cfg)
}

/// Computes the full output table of a resolved configuration.
pub fn compute(cfg: &RunConfig, jobs: usize) -> Result<Table, tasks::PointFailure> {
    let mut header = vec![
        ("meta.program".to_string(), "catarray".to_string()),
        ("meta.version".to_string(), catarray::VERSION.to_string()),
    ];
    header.extend(cfg.echo());
    let mut columns = tasks::param_columns(cfg.kind);
    columns.extend(tasks::task_columns(cfg));
    let rows = tasks::run_points(cfg, jobs)?;
    let summary = tasks::summary(cfg, &columns, &rows);
    Ok(Table {
        header,
        columns,
        rows,
        summary,
    })
}

fn diagnostics_path(out: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => PathBuf::from(format!("{}.diag", p.display())),
        None => PathBuf::from(DEFAULT_DIAGNOSTICS),
    }
}

fn diagnostics(cfg: &RunConfig, f: &tasks::PointFailure) -> String {
    let mut s = String::new();
    writeln!(s, "error: {}", f.error).unwrap();
    writeln!(s, "task: {}", cfg.task.name()).unwrap();
    writeln!(s, "failed point: {} of {}", f.index, cfg.n_points()).unwrap();
    let p = &f.point;
    writeln!(
        s,
        "point: N = {}, {} = {}, phi_index = {}, G = {}, gamma = {}, kappa = {}, M_phi = {}, M_d = {}",
        p.n,
        config::unit_name(cfg.kind),
        config::num(p.unit),
        p.phi_index,
        config::num(p.g),
        config::num(p.gamma),
        config::num(p.kappa),
        p.trunc.m_phi,
        p.trunc.m_d
    )
    .unwrap();
    if matches!(f.error, catarray::Error::KernelMismatch { .. }) {
        writeln!(
            s,
            "hint: truncation splits near-kernel eigenvalues off the kernel; raise truncation.M_phi or tolerance.kernel_tol"
        )
        .unwrap();
    }
    writeln!(s, "config:").unwrap();
    for (k, v) in cfg.echo() {
        writeln!(s, "#! {k} = {v}").unwrap();
    }
    s
}

/// Runs one configuration end to end. Output goes to `opts.out`, or is
/// returned for printing when no path is given.
pub fn run(opts: &Options) -> Result<Option<String>, RunError> {
    let cfg = resolve(opts)?;
    log::info!("{} over {} point(s) with {} job(s)", cfg.task.name(), cfg.n_points(), opts.jobs);
    let table = match compute(&cfg, opts.jobs) {
        Ok(t) => t,
        Err(f) => {
            let path = diagnostics_path(opts.out.as_deref());
            std::fs::write(&path, diagnostics(&cfg, &f)).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
            return Err(RunError::Numerical {
                message: format!("point {}: {}", f.index, f.error),
                diagnostics: path,
            });
        }
    };
    let text = match cfg.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    match &opts.out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| RunError::Io(format!("{}: {e}", p.display())))?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}
