use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bpf_core::hu::Scheme;
use bpf_core::Norm;
use bpf_sim::config::fmt_real;
use bpf_sim::jobs::{self, KaJob, SimError};
use bpf_sim::output::real;
use bpf_sim::{compare, load, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bpf-sim", version, about = "Buyer/seller price-formation simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset (figure1, burgers-limit).
    #[arg(long)]
    preset: Option<String>,
    /// Override a key, e.g. `--set n_cells=800`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: `output_dir` from the config, else `output`).
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<RunConfig, SimError> {
        let cfg = load(self.config.as_deref(), self.preset.as_deref(), &self.overrides)?;
        for note in &cfg.notes {
            eprintln!("note: {note}");
        }
        Ok(cfg)
    }

    fn dir(&self, cfg: &RunConfig) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("output"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write diagnostics and snapshots.
    Run {
        #[command(flatten)]
        source: Source,
    },
    /// Sweep epsilon for the (h, u) system against the sharp-interface profile.
    SweepEps {
        #[command(flatten)]
        source: Source,
        /// Comma-separated epsilon values, strictly monotone.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value = "L1", value_parser = parse_norm)]
        norm: Norm,
    },
    /// Sweep the transaction cost `a` at fixed `c = k a` against the (h, u) run.
    SweepKa {
        #[command(flatten)]
        source: Source,
        /// Comma-separated `a` values, each a multiple of dx.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// (h, u) reference config; derived from the base config when absent.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Scheme of the derived reference.
        #[arg(long, default_value = "paper_central", value_parser = parse_scheme)]
        scheme: Scheme,
        #[arg(long, default_value = "L1", value_parser = parse_norm)]
        norm: Norm,
    },
    /// Heat-equation residuals of the transformed kinetic trajectory under refinement.
    TransformCheck {
        #[command(flatten)]
        source: Source,
        /// Number of grids; each halves dx and dt_out.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Distance between the snapshots of two run directories.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "L1", value_parser = parse_norm)]
        norm: Norm,
        /// Columns to compare.
        #[arg(long, value_delimiter = ',', default_value = "f,g,h,u")]
        fields: Vec<String>,
    },
}

fn parse_norm(s: &str) -> Result<Norm, String> {
    jobs::parse_norm(s).ok_or_else(|| format!("unknown norm `{s}` (L1, L2, Linf)"))
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    Scheme::parse(s).ok_or_else(|| format!("unknown scheme `{s}` (paper_central, flux_conservative)"))
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn execute(command: Command) -> Result<(), SimError> {
    match command {
        Command::Run { source } => {
            let cfg = source.load()?;
            let report = jobs::run(&cfg, &source.dir(&cfg))?;
            for path in &report.files {
                announce(path);
            }
            println!("{}", jobs::summary(&report.outcome));
        }
        Command::SweepEps { source, values, norm } => {
            let cfg = source.load()?;
            let table = jobs::sweep_eps(&cfg, &values, norm)?;
            let path = jobs::write_file(&source.dir(&cfg), "sweep_eps.csv", &jobs::eps_csv(&cfg, &table, norm)?)?;
            announce(&path);
            for r in &table.rows {
                println!(
                    "epsilon = {}  gap = {}  bound = {}  distance = {}",
                    fmt_real(r.epsilon),
                    real(r.gap_integral),
                    real(r.gap_bound),
                    real(r.distance)
                );
            }
            if let Some(fit) = table.gap_fit {
                println!("gap ~ epsilon^{}", fmt_real(fit.slope));
            }
        }
        Command::SweepKa {
            source,
            values,
            reference,
            scheme,
            norm,
        } => {
            let cfg = source.load()?;
            let reference = reference.map(|p| load(Some(&p), None, &[])).transpose()?;
            let job = KaJob::new(&cfg, &values, reference.as_ref(), scheme, norm)?;
            let table = job.run()?;
            let path = jobs::write_file(&source.dir(&cfg), "sweep_ka.csv", &job.csv(&cfg, &table))?;
            announce(&path);
            for r in &table.rows {
                println!(
                    "a = {}  distance = {}  mass drift = {:e}",
                    fmt_real(r.a),
                    real(r.distance),
                    r.mass_drift
                );
            }
            println!("converging: {}", table.converging);
        }
        Command::TransformCheck { source, levels } => {
            let cfg = source.load()?;
            let reports = jobs::transform_check(&cfg, levels)?;
            let path = jobs::write_file(
                &source.dir(&cfg),
                "transform_check.csv",
                &jobs::transform_file(&cfg, &reports)?,
            )?;
            announce(&path);
            for r in &reports {
                println!(
                    "dx = {}  FG = {}  fSg = {}  telescoping = {:e}",
                    fmt_real(r.dx),
                    real(r.heat_residual_fg),
                    real(r.heat_residual_fsg),
                    r.telescoping_defect
                );
            }
            if let Some((a, b)) = jobs::transform_orders(&reports) {
                println!("observed order: FG {a:.3}, fSg {b:.3}");
            }
        }
        Command::Compare { a, b, norm, fields } => {
            let rows = compare::compare_dirs(&a, &b, &fields, norm)?;
            println!("t,field,distance");
            for r in &rows {
                println!("{},{},{}", fmt_real(r.t), r.field, real(r.distance));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // Usage errors exit with 1; clap's own default of 2 is reserved for numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
