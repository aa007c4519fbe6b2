use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use antiplane::error::CliError;
use antiplane::mesh_io::{format_mesh, load_mesh, parse_tagging};
use antiplane::suites::{run_suite, Suite};
use antiplane::threads::workers_from_env;
use antiplane::{run_solve, RunConfig};
use antiplane_core::mesh::generate_rect_mesh;
use antiplane_core::spaces::{build_space, estimate_trace_constant, SpaceKind, TraceOptions, TraceQuadrature};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "antiplane", version, about = "Antiplane frictional contact of thermo-piezoelectric visco-elastic bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh.
    Mesh {
        #[command(subcommand)]
        kind: MeshKind,
    },
    /// Run a simulation from a TOML config.
    Solve {
        config: PathBuf,
        /// Overrides `output.csv`; `-` writes to stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a verification suite with its bundled cases.
    Verify {
        suite: Suite,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the suite table here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Discrete trace constant of the V space of a mesh file.
    TraceConstant {
        mesh: PathBuf,
        #[arg(long, value_enum, default_value_t = Quadrature::Lumped)]
        quadrature: Quadrature,
    },
}

#[derive(Subcommand)]
enum MeshKind {
    /// Structured criss-cross rectangle.
    Rect {
        #[arg(long, default_value_t = 1.0)]
        width: f64,
        #[arg(long, default_value_t = 1.0)]
        height: f64,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        nx: u32,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        ny: u32,
        /// e.g. `bottom=G3,top=G1:Ga,left=G2:Gb,right=G2:Gb`
        #[arg(long, default_value = "bottom=G3,top=G1:Ga,left=G2:Gb,right=G2:Gb")]
        tags: String,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Quadrature {
    Exact,
    Lumped,
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn cmd_mesh(kind: MeshKind) -> Result<(), CliError> {
    let MeshKind::Rect {
        width,
        height,
        nx,
        ny,
        tags,
        output,
    } = kind;
    let rule = parse_tagging(&tags).map_err(|e| CliError::Config(format!("--tags: {e}")))?;
    let mesh = generate_rect_mesh(width, height, nx as usize, ny as usize, &rule).map_err(CliError::Input)?;
    let text = format_mesh(&mesh);
    match output {
        Some(p) => write_file(&p, &text),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e)),
    }
}

fn cmd_solve(config: &Path, csv_override: Option<PathBuf>) -> Result<(), CliError> {
    let (cfg, text) = RunConfig::load(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let stop = Arc::new(AtomicBool::new(false));
    {
        let stop = stop.clone();
        // a second handler cannot be installed; ignore in that case
        let _ = ctrlc::set_handler(move || stop.store(true, Ordering::SeqCst));
    }
    let target = csv_override.or_else(|| cfg.output.csv.as_ref().map(|p| base.join(p)));
    let mut sink: Box<dyn Write> = match &target {
        Some(p) if p.as_os_str() != "-" => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?))
        }
        _ => Box::new(io::stdout().lock()),
    };
    let summary = run_solve(&cfg, &text, base, &mut sink, &stop);
    let _ = sink.flush();
    let summary = summary?;
    if !summary.gate.ok {
        eprintln!(
            "warning: solvability gate violated: L_r = {} >= Z0 = {}",
            summary.gate.lipschitz, summary.gate.z0
        );
    }
    eprintln!("completed {} steps", summary.steps);
    Ok(())
}

fn cmd_verify(suite: Suite, seed: u64, report: Option<PathBuf>) -> Result<(), CliError> {
    let workers = workers_from_env().map_err(CliError::Config)?;
    let rep = run_suite(suite, seed, workers)?;
    for line in &rep.summary {
        println!("{line}");
    }
    if let Some(p) = report {
        write_file(&p, &rep.csv)?;
    }
    if rep.passed {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{suite:?} suite")))
    }
}

fn cmd_trace(path: &Path, quadrature: Quadrature) -> Result<(), CliError> {
    let mesh = load_mesh(path)?;
    let v = build_space(&mesh, SpaceKind::V).map_err(CliError::Input)?;
    let opts = TraceOptions {
        quadrature: match quadrature {
            Quadrature::Exact => TraceQuadrature::Exact,
            Quadrature::Lumped => TraceQuadrature::Lumped,
        },
        ..Default::default()
    };
    let c = estimate_trace_constant(&mesh, &v, &opts).map_err(CliError::Solver)?;
    println!("{:.12e}", c.value);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mesh { kind } => cmd_mesh(kind),
        Command::Solve { config, csv } => cmd_solve(&config, csv),
        Command::Verify { suite, seed, report } => cmd_verify(suite, seed, report),
        Command::TraceConstant { mesh, quadrature } => cmd_trace(&mesh, quadrature),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
