use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chiral_core::cli::{
    oracle_compare, parse_config, parse_sweep, reproduce_figure, run_scenario, run_sweep, write_atomic, Dataset,
    EvalPath, Failure, ScenarioConfig, TimeGrid, FIGURES,
};
use chiral_core::model::MoleculeParams;
use chiral_core::spectral::format_table;

#[derive(Parser)]
#[command(name = "chiral", version, about = "Chiral two-level molecule in a harmonic bath")]
struct Args {
    /// Scenario file (`section.key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; without it results go to `output.path` or stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Isolated molecule, from a config or from the flags below.
    Isolated {
        #[arg(long, default_value_t = 0.0)]
        localization: f64,
        #[arg(long, default_value_t = 1e4)]
        t_max: f64,
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },
    /// Evaluate the scenario in `--config`.
    Run,
    /// Data for one figure panel, one CSV per curve (`all` for every panel).
    Figure { id: String },
    /// Summary statistics over `sweep.values`.
    Sweep,
    /// Compare the perturbative result with the discrete-bath oracle.
    OracleCompare {
        /// Number of bath modes.
        #[arg(long)]
        modes: Option<usize>,
        /// Upper edge of the discretized band.
        #[arg(long)]
        omega_max: Option<f64>,
    },
    /// Spectral density utilities.
    Spectral {
        #[command(subcommand)]
        action: SpectralAction,
    },
}

#[derive(Subcommand)]
enum SpectralAction {
    /// Tabulate the configured spectral density.
    Dump {
        #[arg(long, default_value_t = 400)]
        points: usize,
        /// Upper frequency; defaults to ten cut-offs.
        #[arg(long)]
        omega_max: Option<f64>,
    },
}

fn load(path: &Option<PathBuf>) -> Result<String, Failure> {
    let path = path
        .as_ref()
        .ok_or_else(|| chiral_core::cli::ConfigError {
            problems: vec!["`--config <path>` is required".into()],
        })?;
    Ok(std::fs::read_to_string(path)?)
}

fn scenario(args: &Args) -> Result<ScenarioConfig, Failure> {
    let mut c = parse_config(&load(&args.config)?)?;
    if let Some(tol) = args.tol {
        c.tol = tol;
        c.refresh();
    }
    Ok(c)
}

fn emit(args: &Args, name: &str, fallback: Option<&Path>, text: &str) -> Result<(), Failure> {
    let target = match (&args.out, fallback) {
        (Some(dir), _) => Some(dir.join(name)),
        (None, Some(p)) => Some(p.to_path_buf()),
        (None, None) => None,
    };
    match target {
        Some(p) => {
            write_atomic(&p, text)?;
            log::info!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_dataset(args: &Args, name: &str, fallback: Option<&Path>, d: &Dataset) -> Result<(), Failure> {
    emit(args, &format!("{name}.csv"), fallback, &d.to_csv())
}

fn run(args: &Args) -> Result<i32, Failure> {
    match &args.command {
        Command::Isolated {
            localization,
            t_max,
            points,
        } => {
            let mut c = match &args.config {
                Some(_) => scenario(args)?,
                None => {
                    let m = MoleculeParams::table_one(*localization);
                    ScenarioConfig::new(m, None, TimeGrid::linear(0.0, *t_max, *points), EvalPath::Isolated)
                }
            };
            c.path = EvalPath::Isolated;
            c.bath = None;
            c.refresh();
            let output = c.output.clone();
            emit_dataset(args, "isolated", output.as_deref(), &run_scenario(&c)?)?;
        }
        Command::Run => {
            let c = scenario(args)?;
            emit_dataset(args, "scenario", c.output.as_deref(), &run_scenario(&c)?)?;
        }
        Command::Figure { id } => {
            let ids: Vec<&str> = if id == "all" { FIGURES.to_vec() } else { vec![id.as_str()] };
            let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
            for id in ids {
                for (name, d) in reproduce_figure(id, args.tol)? {
                    let p = dir.join(format!("{name}.csv"));
                    d.write(&p)?;
                    println!("{}", p.display());
                }
            }
        }
        Command::Sweep => {
            let mut s = parse_sweep(&load(&args.config)?)?;
            if let Some(tol) = args.tol {
                s.base.tol = tol;
                s.base.refresh();
            }
            let output = s.base.output.clone();
            emit_dataset(args, "sweep", output.as_deref(), &run_sweep(&s)?)?;
        }
        Command::OracleCompare { modes, omega_max } => {
            let mut c = scenario(args)?;
            if let Some(n) = modes {
                c.oracle.modes = Some(*n);
            }
            if let Some(w) = omega_max {
                let mut g = c.oracle_grid().ok_or_else(|| chiral_core::cli::ConfigError {
                    problems: vec!["oracle comparison needs a bath".into()],
                })?;
                g.omega_max = *w;
                c.oracle.grid = Some(g);
            }
            let report = oracle_compare(&c)?;
            emit(args, "oracle.txt", c.output.as_deref(), &report.to_text())?;
            eprintln!(
                "max |diff| = {:.3e}, two-excitation weight = {:.3e}: {}",
                report.comparison.max_deviation,
                report.comparison.max_two_excitation_weight,
                report.status()
            );
            return Ok(report.exit_code());
        }
        Command::Spectral {
            action: SpectralAction::Dump { points, omega_max },
        } => {
            let c = scenario(args)?;
            let j = c.bath.as_ref().ok_or_else(|| chiral_core::cli::ConfigError {
                problems: vec!["spectral dump needs a bath".into()],
            })?;
            let (lo, hi) = j.support();
            let top = omega_max.unwrap_or_else(|| hi.unwrap_or(10.0 * j.cutoff()));
            let n = (*points).max(2);
            let rows = (0..n).map(|i| {
                let w = lo.max(0.0) + (top - lo.max(0.0)) * i as f64 / (n - 1) as f64;
                (w, j.value(w))
            });
            let text = format_table(rows, &format!("{} spectral density", j.kind_name()));
            emit(args, "spectral.txt", None, &text)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
