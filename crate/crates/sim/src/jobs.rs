//! Runs, sweeps and transform checks, with their files.

use std::fs;
use std::path::{Path, PathBuf};

use bpf_core::analysis::{self, EpsSweep, EpsTable, KaSweep, KaTable};
use bpf_core::bpf::BpfState;
use bpf_core::hu::{self, HuParams, HuState, Scheme};
use bpf_core::run::{BpfProblem, DiagnosticsRecord, HuProblem, RunOutput, Snapshot};
use bpf_core::sharp::SharpState;
use bpf_core::transforms::TransformReport;
use bpf_core::{Error, Norm};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{fmt_real, ConfigError, Model, Problem, RunConfig};
use crate::output::{self, meta, opt, real};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Solver(#[from] Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

impl SimError {
    /// 0 ok, 1 configuration, 2 numerical failure, 3 invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::Io(_) | SimError::Usage(_) => 1,
            SimError::Solver(e) => solver_code(e),
        }
    }
}

fn solver_code(e: &Error) -> i32 {
    match e {
        Error::SweepMember { source, .. } => solver_code(source),
        e if e.is_invariant() => 3,
        Error::InvalidGrid(_)
        | Error::InvalidParameter { .. }
        | Error::CostNotGridMultiple { .. }
        | Error::ShiftOutOfRange { .. }
        | Error::MassOutOfRange { .. }
        | Error::InvalidSweep(_) => 1,
        _ => 2,
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Output of one run, whatever the model.
#[derive(Debug, Clone)]
pub enum Outcome {
    Bpf(RunOutput<BpfState>),
    Hu(RunOutput<HuState>),
    Sharp(RunOutput<SharpState>),
}

impl Outcome {
    pub fn records(&self) -> &[DiagnosticsRecord] {
        match self {
            Outcome::Bpf(o) => &o.records,
            Outcome::Hu(o) => &o.records,
            Outcome::Sharp(o) => &o.records,
        }
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        match self {
            Outcome::Bpf(o) => &o.snapshots,
            Outcome::Hu(o) => &o.snapshots,
            Outcome::Sharp(o) => &o.snapshots,
        }
    }

    pub fn max_u2_excess_rel(&self) -> f64 {
        match self {
            Outcome::Bpf(o) => o.max_u2_excess_rel(),
            Outcome::Hu(o) => o.max_u2_excess_rel(),
            Outcome::Sharp(o) => o.max_u2_excess_rel(),
        }
    }
}

pub fn simulate(problem: &Problem, keep_trajectory: bool) -> std::result::Result<Outcome, Error> {
    Ok(match problem {
        Problem::Bpf(p) => Outcome::Bpf(p.run(keep_trajectory)?),
        Problem::Hu(p) => Outcome::Hu(p.run(keep_trajectory)?),
        Problem::Sharp(p) => Outcome::Sharp(p.run(keep_trajectory)?),
    })
}

/// A finished run and the files it wrote.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: Outcome,
    pub files: Vec<PathBuf>,
}

/// Runs `cfg` and writes `diagnostics.csv` plus snapshots into `dir`.
pub fn run(cfg: &RunConfig, dir: &Path) -> Result<RunReport> {
    let problem = cfg.problem()?;
    let header = cfg.header(&problem);
    let outcome = simulate(&problem, false)?;
    let files = output::write_run(dir, &header, outcome.records(), outcome.snapshots())?;
    Ok(RunReport { outcome, files })
}

fn hu_problem(cfg: &RunConfig) -> Result<HuProblem> {
    match cfg.problem()? {
        Problem::Hu(p) => Ok(p),
        _ => Err(SimError::Usage(format!(
            "sweep-eps needs model hu or burgers, got {}",
            cfg.model.name()
        ))),
    }
}

fn bpf_problem(cfg: &RunConfig, what: &str) -> Result<BpfProblem> {
    match cfg.problem()? {
        Problem::Bpf(p) => Ok(p),
        _ => Err(SimError::Usage(format!(
            "{what} needs model bpf, got {}",
            cfg.model.name()
        ))),
    }
}

pub fn parse_norm(s: &str) -> Option<Norm> {
    match s.to_ascii_lowercase().as_str() {
        "l1" => Some(Norm::L1),
        "l2" => Some(Norm::L2),
        "linf" => Some(Norm::Linf),
        _ => None,
    }
}

pub fn norm_name(n: Norm) -> &'static str {
    match n {
        Norm::L1 => "L1",
        Norm::L2 => "L2",
        Norm::Linf => "Linf",
    }
}

/// Epsilon sweep run in parallel; rows come back in input order.
pub fn sweep_eps(cfg: &RunConfig, values: &[f64], norm: Norm) -> Result<EpsTable> {
    let sweep = EpsSweep {
        base: hu_problem(cfg)?,
        values: values.to_vec(),
        norm,
    };
    sweep.validate()?;
    let reference = sweep.reference()?;
    let rows = values
        .par_iter()
        .map(|&e| sweep.row(e, &reference))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(EpsSweep::assemble(rows))
}

pub const EPS_COLUMNS: &[&str] = &[
    "epsilon",
    "c",
    "gap_integral",
    "gap_bound",
    "gap_within_bound",
    "distance",
    "max_u2_minus_h2_rel",
    "max_ux",
    "dx",
    "dt",
    "diffusion",
    "scheme",
    "freeze_h",
    "cell_peclet",
];

pub fn eps_csv(cfg: &RunConfig, table: &EpsTable, norm: Norm) -> Result<String> {
    let base = hu_problem(cfg)?;
    let mut header = cfg.header(&Problem::Hu(base.clone()));
    header.push(meta("norm", norm_name(norm)));
    header.push(meta(
        "gap_fit_slope",
        table.gap_fit.map(|f| fmt_real(f.slope)).unwrap_or_default(),
    ));
    let p = base.params;
    Ok(output::table(
        &header,
        EPS_COLUMNS,
        table.rows.iter().map(|r| {
            vec![
                real(r.epsilon),
                real(1.0 / r.epsilon),
                real(r.gap_integral),
                real(r.gap_bound),
                (r.gap_integral <= r.gap_bound).to_string(),
                real(r.distance),
                real(r.max_u2_excess_rel),
                real(r.max_ux),
                real(r.dx),
                real(r.dt),
                real(p.diffusion),
                p.scheme.name().to_string(),
                p.freeze_h.to_string(),
                real(r.cell_peclet),
            ]
        }),
    ))
}

/// Kinetic sweep over `a` at fixed `c`, against the `(h, u)` run at `epsilon = 1 / c`.
pub struct KaJob {
    pub sweep: KaSweep,
    pub safety: f64,
    pub dt_override: Option<f64>,
}

impl KaJob {
    /// `reference` defaults to the `(h, u)` run sharing the base data.
    pub fn new(
        base_cfg: &RunConfig,
        a_values: &[f64],
        reference: Option<&RunConfig>,
        scheme: Scheme,
        norm: Norm,
    ) -> Result<Self> {
        let base = bpf_problem(base_cfg, "sweep-ka")?;
        let grid = base_cfg.grid;
        let a_nodes = a_values
            .iter()
            .map(|&a| grid.cells_for(a))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| SimError::Usage(format!("sweep-ka values: {e}")))?;
        let reference = match reference {
            Some(r) => hu_problem(r)?,
            None => HuProblem {
                params: HuParams::new(1.0 / base.params.c(), base.params.diffusion())?.with_scheme(scheme),
                initial: hu::from_fg(&base.initial.f, &base.initial.g, 0.0)?,
                schedule: base.schedule.clone(),
            },
        };
        let sweep = KaSweep {
            base,
            reference,
            a_nodes,
            norm,
        };
        sweep.validate()?;
        Ok(Self {
            safety: base_cfg.schedule.safety,
            dt_override: base_cfg.schedule.dt_override,
            sweep,
        })
    }

    pub fn run(&self) -> Result<KaTable> {
        let reference = self.sweep.reference_fg()?;
        let rows = self
            .sweep
            .a_nodes
            .par_iter()
            .map(|&m| self.sweep.row(m, &reference))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(KaSweep::assemble(rows))
    }

    pub fn csv(&self, base_cfg: &RunConfig, table: &KaTable) -> String {
        let s = &self.sweep;
        let mut header = base_cfg.header(&Problem::Bpf(s.base.clone()));
        header.push(meta("norm", norm_name(s.norm)));
        header.push(meta("reference_epsilon", fmt_real(s.reference.params.epsilon)));
        header.push(meta("reference_scheme", s.reference.params.scheme.name()));
        header.push(meta("converging", table.converging));
        output::table(
            &header,
            KA_COLUMNS,
            table.rows.iter().map(|r| {
                let mut params = s.base.params;
                params.k = r.k;
                params.a = r.a;
                let dt = self
                    .dt_override
                    .unwrap_or_else(|| params.stable_dt(&s.base.initial, self.safety));
                vec![
                    real(r.a),
                    r.a_nodes.to_string(),
                    real(r.k),
                    real(s.c()),
                    real(r.distance),
                    real(r.mass_drift),
                    real(base_cfg.grid.dx()),
                    real(dt),
                    real(params.diffusion()),
                    s.reference.params.scheme.name().to_string(),
                ]
            }),
        )
    }
}

pub const KA_COLUMNS: &[&str] = &[
    "a",
    "a_nodes",
    "k",
    "c",
    "distance",
    "mass_drift",
    "dx",
    "dt",
    "diffusion",
    "scheme",
];

/// Transform check on `levels` grids, each halving `dx` and `dt_out`.
pub fn transform_check(cfg: &RunConfig, levels: usize) -> Result<Vec<TransformReport>> {
    if levels == 0 {
        return Err(SimError::Usage("transform-check needs at least one level".into()));
    }
    if cfg.model != Model::Bpf {
        return Err(SimError::Usage(format!(
            "transform-check needs model bpf, got {}",
            cfg.model.name()
        )));
    }
    let n0 = cfg.grid.n_cells();
    let dt0 = cfg.schedule.dt_out;
    let configs = (0..levels)
        .map(|l| {
            let scale = 1usize << l;
            let mut c = cfg.clone();
            c.grid = bpf_core::Grid1D::new(cfg.grid.x_min(), cfg.grid.x_max(), n0 * scale)?;
            c.schedule.dt_out = dt0 / scale as f64;
            Ok(c)
        })
        .collect::<std::result::Result<Vec<_>, Error>>()?;
    configs
        .par_iter()
        .map(|c| {
            let p = bpf_problem(c, "transform-check")?;
            let out = p.run(true)?;
            Ok(TransformReport::compute(&out.trajectory, &p.params)?)
        })
        .collect()
}

/// Observed orders of the two heat residuals against `dx`.
pub fn transform_orders(reports: &[TransformReport]) -> Option<(f64, f64)> {
    let dx: Vec<f64> = reports.iter().map(|r| r.dx).collect();
    let fg: Vec<f64> = reports.iter().map(|r| r.heat_residual_fg).collect();
    let fsg: Vec<f64> = reports.iter().map(|r| r.heat_residual_fsg).collect();
    let a = analysis::fit_loglog(&dx, &fg).ok()?;
    let b = analysis::fit_loglog(&dx, &fsg).ok()?;
    Some((a.slope, b.slope))
}

pub fn transform_file(cfg: &RunConfig, reports: &[TransformReport]) -> Result<String> {
    let problem = cfg.problem()?;
    let mut header = cfg.header(&problem);
    let defect = reports.iter().map(|r| r.telescoping_defect).fold(0.0, f64::max);
    header.push(meta("levels", reports.len()));
    header.push(meta("telescoping_defect_max", real(defect)));
    if let Some((a, b)) = transform_orders(reports) {
        header.push(meta("order_FG", fmt_real(a)));
        header.push(meta("order_fSg", fmt_real(b)));
    }
    Ok(output::transform_csv(&header, reports))
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// One-line summary of a finished run for the terminal.
pub fn summary(outcome: &Outcome) -> String {
    let last = outcome.records().last();
    format!(
        "t = {}  mass_f = {}  mass_g = {}  price = {}  max(u^2-h^2)/max h^2 = {:e}",
        last.map(|r| fmt_real(r.t)).unwrap_or_default(),
        last.map(|r| real(r.mass_f)).unwrap_or_default(),
        last.map(|r| real(r.mass_g)).unwrap_or_default(),
        opt(last.and_then(|r| r.price_zero_crossing)),
        outcome.max_u2_excess_rel(),
    )
}
