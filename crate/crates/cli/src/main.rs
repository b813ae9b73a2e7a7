use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use isothermic::io::read_grid;
use isothermic_cli::{export_mesh, run_job, CliError, JobSpec, MeshFormat, Report};

/// Exit status for spec and runtime errors.
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "isothermic", version, about = "Run, verify and export isothermic surface jobs")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a job and write its artifacts and report.
    Run {
        spec: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        verbose: bool,
    },
    /// Run a job's checks and print the report without writing artifacts.
    Verify {
        spec: PathBuf,
        #[arg(long)]
        verbose: bool,
    },
    /// Export a serialized grid as a quad mesh.
    Export {
        grid: PathBuf,
        #[arg(long, value_enum, default_value = "obj")]
        format: MeshFormat,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        axes: Vec<usize>,
        /// Defaults to the grid path with the format's extension.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("ISOTHERMIC_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::SpecInvalid(format!("ISOTHERMIC_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::SpecInvalid(e.to_string()))
}

fn print_report(report: &Report) -> Result<String, CliError> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    print!("{text}");
    Ok(text)
}

fn run(spec: &Path, out: Option<&Path>, verbose: bool) -> Result<u8, CliError> {
    let job = JobSpec::load(spec)?;
    let report = run_job(&job, out, verbose)?;
    let text = print_report(&report)?;
    if let Some(dir) = out {
        let path = dir.join(&job.outputs.report);
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
    }
    Ok(report.exit_code())
}

fn export(grid: &Path, format: MeshFormat, axes: &[usize], output: Option<PathBuf>) -> Result<u8, CliError> {
    let axes: [usize; 3] = axes
        .try_into()
        .map_err(|_| CliError::SpecInvalid(format!("expected three axes, got {axes:?}")))?;
    let surface = read_grid(grid)?;
    let path = output.unwrap_or_else(|| grid.with_extension(format.extension()));
    export_mesh(&surface, &path, format, axes)?;
    Ok(0)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = configure_threads().and_then(|()| match args.command {
        Command::Run { spec, out, verbose } => run(&spec, Some(&out), verbose),
        Command::Verify { spec, verbose } => run(&spec, None, verbose),
        Command::Export {
            grid,
            format,
            axes,
            output,
        } => export(&grid, format, &axes, output),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
