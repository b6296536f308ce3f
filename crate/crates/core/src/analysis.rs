//! Fits, sweeps and segregation metrics built on top of the solvers.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{self, Field, Norm};
use crate::hu::{self, HuState};
use crate::run::{BpfProblem, HuProblem};
use crate::sharp;

/// Ties closer than this count as "not decreasing".
pub const TIE_TOL: f64 = 1e-12;
/// `|p - p_inf|` below this is treated as underflow in exponential fits.
pub const FIT_FLOOR: f64 = 1e-14;

/// Least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return Err(Error::NotEnoughSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameter {
            name: "fit abscissae (all equal)",
            value: mx,
        });
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(FitResult {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Line through `(ln x, ln y)`; the slope is the observed order.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    let mut lx = Vec::with_capacity(xs.len());
    let mut ly = Vec::with_capacity(ys.len());
    for (&x, &y) in xs.iter().zip(ys) {
        if !(x > 0.0) || !(y > 0.0) {
            return Err(Error::InvalidParameter {
                name: "log-log fit needs positive data",
                value: if x > 0.0 { y } else { x },
            });
        }
        lx.push(libm::log(x));
        ly.push(libm::log(y));
    }
    fit_line(&lx, &ly)
}

/// `ln |p(t) - p_inf|` against `t` on `window`; the decay rate is `-slope`.
pub fn fit_exponential(times: &[f64], prices: &[f64], window: (f64, f64), p_inf: f64) -> Result<FitResult> {
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (&t, &p) in times.iter().zip(prices) {
        if t < window.0 || t > window.1 {
            continue;
        }
        let d = libm::fabs(p - p_inf);
        if d < FIT_FLOOR {
            return Err(Error::FitUnderflow { t });
        }
        ts.push(t);
        ys.push(libm::log(d));
    }
    fit_line(&ts, &ys)
}

/// Each value below its predecessor by more than [`TIE_TOL`].
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0] - TIE_TOL)
}

/// Sign changes of `u`, ignoring entries with `|u| <= threshold`.
pub fn sign_changes(u: &Field, threshold: f64) -> usize {
    let mut last = 0i8;
    let mut count = 0;
    for &v in u.values() {
        if libm::fabs(v) <= threshold {
            continue;
        }
        let s = if v > 0.0 { 1 } else { -1 };
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Relative threshold used when counting sign changes of `u`.
pub const SIGN_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegregationRow {
    pub t: f64,
    /// `int f g dx`.
    pub overlap: f64,
    pub sign_changes: usize,
}

/// Overlap and sign-change count of `u` along a trajectory.
pub fn segregation_metrics(trajectory: &[HuState]) -> Vec<SegregationRow> {
    trajectory
        .iter()
        .map(|s| {
            let (f, g) = hu::to_fg(s);
            let fg = f.zip_with(&g, |a, b| a * b).expect("shared grid");
            SegregationRow {
                t: s.t,
                overlap: grid::integrate(&fg),
                sign_changes: sign_changes(&s.u, SIGN_THRESHOLD * s.h.max_abs()),
            }
        })
        .collect()
}

fn strictly_monotone(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0]) || values.windows(2).all(|w| w[1] > w[0])
}

/// Sweep of the `(h, u)` system over epsilon at fixed data.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsSweep {
    pub base: HuProblem,
    pub values: Vec<f64>,
    pub norm: Norm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsRow {
    pub epsilon: f64,
    /// `int_0^T int (h^2 - u^2) dx dt`.
    pub gap_integral: f64,
    /// `4 epsilon (1 + T) max h_I`.
    pub gap_bound: f64,
    /// Distance at `T` from `u` to the sharp-interface profile.
    pub distance: f64,
    pub max_u2_excess_rel: f64,
    pub max_ux: f64,
    pub dx: f64,
    pub dt: f64,
    pub cell_peclet: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsTable {
    pub rows: Vec<EpsRow>,
    /// Log-log fit of the gap integral against epsilon (three or more rows).
    pub gap_fit: Option<FitResult>,
}

impl EpsSweep {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidSweep("no epsilon values"));
        }
        if self.values.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidSweep("epsilon values must be positive"));
        }
        if !strictly_monotone(&self.values) {
            return Err(Error::InvalidSweep("epsilon values must be strictly monotone"));
        }
        self.base.schedule.validate()
    }

    /// Sharp profile the sweep converges to.
    pub fn reference(&self) -> Result<Field> {
        let b = &self.base;
        let limit = sharp::limit_profile(
            &b.initial.h,
            b.mass_f(),
            b.params.diffusion,
            b.schedule.t_end,
            b.schedule.safety,
            !b.params.freeze_h,
        )?;
        Ok(sharp::reconstruct_u(&limit))
    }

    pub fn row(&self, epsilon: f64, reference: &Field) -> Result<EpsRow> {
        let mut problem = self.base.clone();
        problem.params.epsilon = epsilon;
        let wrap = |e: Error| Error::SweepMember {
            value: epsilon,
            source: Box::new(e),
        };
        let out = problem.run(false).map_err(wrap)?;
        let grid = *problem.initial.grid();
        let max_h = problem.initial.h.max_abs();
        Ok(EpsRow {
            epsilon,
            gap_integral: out.gap_integral(),
            gap_bound: 4.0 * epsilon * (1.0 + problem.schedule.t_end) * max_h,
            distance: out.final_state.u.distance(reference, self.norm).map_err(wrap)?,
            max_u2_excess_rel: out.max_u2_excess_rel(),
            max_ux: out.max_ux(),
            dx: grid.dx(),
            dt: out.max_dt(),
            cell_peclet: problem.params.cell_peclet(&grid, max_h),
        })
    }

    pub fn assemble(rows: Vec<EpsRow>) -> EpsTable {
        let gap_fit = if rows.len() >= 3 {
            let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
            let gaps: Vec<f64> = rows.iter().map(|r| r.gap_integral).collect();
            fit_loglog(&eps, &gaps).ok()
        } else {
            None
        };
        EpsTable { rows, gap_fit }
    }

    /// Sequential sweep; rows in input order.
    pub fn run(&self) -> Result<EpsTable> {
        self.validate()?;
        let reference = self.reference()?;
        let rows = self
            .values
            .iter()
            .map(|&e| self.row(e, &reference))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(rows))
    }
}

/// Kinetic runs at fixed `c = k a` and decreasing `a`, compared with the
/// `(h, u)` run at `epsilon = 1 / c`.
#[derive(Debug, Clone, PartialEq)]
pub struct KaSweep {
    pub base: BpfProblem,
    pub reference: HuProblem,
    pub a_nodes: Vec<usize>,
    pub norm: Norm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KaRow {
    pub a: f64,
    pub a_nodes: usize,
    pub k: f64,
    /// `||f - f_ref|| + ||g - g_ref||` at `T`.
    pub distance: f64,
    /// Worst relative drift of `int f` and `int g` over the run.
    pub mass_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KaTable {
    pub rows: Vec<KaRow>,
    /// Distance strictly decreasing as `a` decreases.
    pub converging: bool,
}

fn rel_close(a: f64, b: f64) -> bool {
    libm::fabs(a - b) <= 1e-12 * libm::fabs(a).max(libm::fabs(b)).max(1e-300)
}

impl KaSweep {
    pub fn c(&self) -> f64 {
        self.base.params.c()
    }

    pub fn validate(&self) -> Result<()> {
        let grid = *self.base.initial.grid();
        if self.a_nodes.is_empty() {
            return Err(Error::InvalidSweep("no a values"));
        }
        if self.a_nodes.iter().any(|&m| m == 0 || m >= grid.n_cells()) {
            return Err(Error::InvalidSweep("a_nodes must lie in 1..n_cells"));
        }
        let as_f: Vec<f64> = self.a_nodes.iter().map(|&m| m as f64).collect();
        if !strictly_monotone(&as_f) {
            return Err(Error::InvalidSweep("a values must be strictly monotone"));
        }
        if !rel_close(self.reference.params.epsilon * self.c(), 1.0) {
            return Err(Error::InvalidSweep("reference epsilon is not 1 / c"));
        }
        if !rel_close(self.reference.params.diffusion, self.base.params.diffusion()) {
            return Err(Error::InvalidSweep("reference diffusion differs from sigma^2 / 2"));
        }
        if !grid.same_as(self.reference.initial.grid()) {
            return Err(Error::InvalidSweep("reference grid differs"));
        }
        if !rel_close(self.reference.schedule.t_end, self.base.schedule.t_end) {
            return Err(Error::InvalidSweep("reference final time differs"));
        }
        let reference = hu::from_fg(&self.base.initial.f, &self.base.initial.g, 0.0)?;
        let h_diff = reference.h.distance(&self.reference.initial.h, Norm::Linf)?;
        let u_diff = reference.u.distance(&self.reference.initial.u, Norm::Linf)?;
        if h_diff.max(u_diff) > 1e-12 * reference.h.max_abs().max(1.0) {
            return Err(Error::InvalidSweep("reference initial data differ"));
        }
        self.base.schedule.validate()
    }

    /// `(f, g)` of the reference run at `T`.
    pub fn reference_fg(&self) -> Result<(Field, Field)> {
        let out = self.reference.run(false)?;
        Ok(hu::to_fg(&out.final_state))
    }

    pub fn row(&self, a_nodes: usize, reference: &(Field, Field)) -> Result<KaRow> {
        let grid = *self.base.initial.grid();
        let a = a_nodes as f64 * grid.dx();
        let wrap = |e: Error| Error::SweepMember {
            value: a,
            source: Box::new(e),
        };
        let mut problem = self.base.clone();
        problem.params = crate::bpf::BpfParams::from_c(self.c(), a, self.base.params.sigma).map_err(wrap)?;
        problem.params.support_guard = self.base.params.support_guard;
        let out = problem.run(false).map_err(wrap)?;
        let fin = &out.final_state;
        let distance = fin.f.distance(&reference.0, self.norm).map_err(wrap)?
            + fin.g.distance(&reference.1, self.norm).map_err(wrap)?;
        let mf0 = problem.initial.mass_f();
        let mg0 = problem.initial.mass_g();
        let rel = |m: f64, m0: f64| libm::fabs(m - m0) / libm::fabs(m0).max(1e-300);
        let mass_drift = out
            .records
            .iter()
            .map(|r| rel(r.mass_f, mf0).max(rel(r.mass_g, mg0)))
            .fold(0.0, f64::max);
        Ok(KaRow {
            a,
            a_nodes,
            k: problem.params.k,
            distance,
            mass_drift,
        })
    }

    pub fn assemble(rows: Vec<KaRow>) -> KaTable {
        let mut by_a = rows.clone();
        by_a.sort_by(|x, y| y.a.partial_cmp(&x.a).unwrap_or(core::cmp::Ordering::Equal));
        let d: Vec<f64> = by_a.iter().map(|r| r.distance).collect();
        KaTable {
            converging: strictly_decreasing(&d),
            rows,
        }
    }

    pub fn run(&self) -> Result<KaTable> {
        self.validate()?;
        let reference = self.reference_fg()?;
        let rows = self
            .a_nodes
            .iter()
            .map(|&m| self.row(m, &reference))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use approx::assert_abs_diff_eq;

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.intercept, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-14);
        assert!(fit_line(&[1.0], &[1.0]).is_err());
        assert!(fit_line(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn loglog_gives_power() {
        let xs = [0.1, 0.05, 0.025];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert_abs_diff_eq!(fit_loglog(&xs, &ys).unwrap().slope, 2.0, epsilon = 1e-12);
        assert!(fit_loglog(&[1.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn exponential_fit_and_underflow() {
        let ts: Vec<f64> = (0..=30).map(|k| k as f64 * 0.1).collect();
        let ps: Vec<f64> = ts.iter().map(|t| 0.2 + 0.5 * libm::exp(-2.5 * t)).collect();
        let fit = fit_exponential(&ts, &ps, (1.0, 3.0), 0.2).unwrap();
        assert_abs_diff_eq!(fit.slope, -2.5, epsilon = 1e-10);
        let flat = alloc::vec![0.2; ts.len()];
        assert_eq!(
            fit_exponential(&ts, &flat, (1.0, 3.0), 0.2),
            Err(Error::FitUnderflow { t: ts[10] })
        );
    }

    #[test]
    fn strict_decrease_rejects_ties() {
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0]));
        assert!(!strictly_decreasing(&[3.0, 3.0, 1.0]));
        assert!(!strictly_decreasing(&[1.0, 2.0]));
        assert!(strictly_decreasing(&[1.0]));
    }

    #[test]
    fn sign_change_threshold() {
        let g = Grid1D::new(0.0, 1.0, 5).unwrap();
        let u = Field::new(g, alloc::vec![1.0, 1e-9, -1e-9, 1.0, -1.0, -1.0]).unwrap();
        assert_eq!(sign_changes(&u, 1e-6), 1);
        assert_eq!(sign_changes(&u, 0.0), 3);
    }
}
