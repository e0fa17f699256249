use std::path::PathBuf;
use std::process::ExitCode;

use catarray_cli::{Format, Options, Task};
use clap::{Parser, ValueEnum};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Steady,
    Gap,
    Evolve,
    Wigner,
    Conserved,
    ZenoCompare,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Steady => Task::Steady,
            TaskArg::Gap => Task::Gap,
            TaskArg::Evolve => Task::Evolve,
            TaskArg::Wigner => Task::Wigner,
            TaskArg::Conserved => Task::Conserved,
            TaskArg::ZenoCompare => Task::ZenoCompare,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Cat-state stabilization in dissipatively coupled resonator arrays.
#[derive(Debug, Parser)]
#[command(name = "catarray", version)]
struct Cli {
    /// Computation to run.
    #[arg(value_enum)]
    task: TaskArg,
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format, overriding output.format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Sweep points solved concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Relative kernel tolerance, overriding tolerance.kernel_tol.
    #[arg(long)]
    kernel_tol: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Sequential kernels keep the numeric payload independent of the host.
    faer::set_global_parallelism(faer::Par::Seq);
    let cli = Cli::parse();
    let opts = Options {
        task: cli.task.into(),
        config: cli.config,
        out: cli.out,
        format: cli.format.map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }),
        jobs: cli.jobs,
        kernel_tol: cli.kernel_tol,
    };
    match catarray_cli::run(&opts) {
        Ok(Some(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("catarray: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
