//! Collision operators inverted as finite Neumann series.
//!
//! With `S v(x) = v(x + a)`, `T v(x) = v(x - a)` and zero extension outside the
//! grid, `F = (I - S)^{-1} f = sum_j S^j f` and `G = (I - T)^{-1} g` are finite
//! sums. Along a kinetic trajectory both `F - G` and `f + S g` solve the heat
//! equation; the residuals below measure how well stored snapshots satisfy it.

use alloc::vec;
use alloc::vec::Vec;

use crate::bpf::{BpfParams, BpfState};
use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid1D};

/// Number of Neumann terms: smallest `J` with `J a >= x_max - x_min`.
pub fn series_length(grid: &Grid1D, a_nodes: usize) -> usize {
    grid.n_cells().div_ceil(a_nodes.max(1))
}

/// `F = sum_j S^{j m} f`, accumulated from the right: `F_i = f_i + F_{i+m}`.
pub fn neumann_f(f: &Field, a_nodes: usize) -> Field {
    let m = a_nodes.max(1);
    let v = f.values();
    let n = v.len();
    let mut out = vec![0.0; n];
    for i in (0..n).rev() {
        out[i] = v[i] + if i + m < n { out[i + m] } else { 0.0 };
    }
    Field::from_raw(*f.grid(), out)
}

/// `G = sum_j T^{j m} g`, accumulated from the left: `G_i = g_i + G_{i-m}`.
pub fn neumann_g(g: &Field, a_nodes: usize) -> Field {
    let m = a_nodes.max(1);
    let v = g.values();
    let n = v.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = v[i] + if i >= m { out[i - m] } else { 0.0 };
    }
    Field::from_raw(*g.grid(), out)
}

/// `max_i |((I - S^m) F)_i - f_i|`.
pub fn telescoping_defect_f(f: &Field, a_nodes: usize) -> f64 {
    let big = neumann_f(f, a_nodes);
    let shifted = grid::shift(&big, a_nodes as isize).expect("a_nodes within grid");
    defect(&big, &shifted, f)
}

/// `max_i |((I - T^m) G)_i - g_i|`.
pub fn telescoping_defect_g(g: &Field, a_nodes: usize) -> f64 {
    let big = neumann_g(g, a_nodes);
    let shifted = grid::shift(&big, -(a_nodes as isize)).expect("a_nodes within grid");
    defect(&big, &shifted, g)
}

fn defect(big: &Field, shifted: &Field, original: &Field) -> f64 {
    big.values()
        .iter()
        .zip(shifted.values())
        .zip(original.values())
        .map(|((b, s), o)| libm::fabs(b - s - o))
        .fold(0.0, f64::max)
}

/// Max over interior snapshots of the discrete L2 norm of `w_t - D w_xx`,
/// `w_t` taken by centred differences of the stored snapshots.
///
/// The combinations are not Neumann functions (`F` sums `f` over a lattice
/// that reaches the wall), so the residual is taken over interior nodes with
/// the plain three-point Laplacian.
pub fn heat_residual<W>(trajectory: &[BpfState], params: &BpfParams, combine: W) -> Result<f64>
where
    W: Fn(&BpfState, usize) -> Field,
{
    if trajectory.len() < 3 {
        return Err(Error::NotEnoughSamples {
            needed: 3,
            got: trajectory.len(),
        });
    }
    let grid = *trajectory[0].grid();
    let m = params.a_nodes(&grid)?;
    let dt_out = trajectory[1].t - trajectory[0].t;
    for pair in trajectory.windows(2) {
        let step = pair[1].t - pair[0].t;
        if libm::fabs(step - dt_out) > 1e-9 * dt_out.max(1e-300) {
            return Err(Error::InvalidParameter {
                name: "snapshot spacing (must be uniform)",
                value: step,
            });
        }
    }
    let d = params.diffusion();
    let dx = grid.dx();
    let ws: Vec<Field> = trajectory.iter().map(|s| combine(s, m)).collect();
    let mut worst: f64 = 0.0;
    for n in 1..ws.len() - 1 {
        let (prev, cur, next) = (ws[n - 1].values(), ws[n].values(), ws[n + 1].values());
        let sum_sq: f64 = (1..grid.n_cells())
            .map(|i| {
                let wt = (next[i] - prev[i]) / (2.0 * dt_out);
                let lap = (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) / (dx * dx);
                let r = wt - d * lap;
                r * r
            })
            .sum();
        worst = worst.max(libm::sqrt(dx * sum_sq));
    }
    Ok(worst)
}

/// Heat residual of `F - G`.
pub fn heat_residual_fg(trajectory: &[BpfState], params: &BpfParams) -> Result<f64> {
    heat_residual(trajectory, params, |s, m| {
        let f_big = neumann_f(&s.f, m);
        let g_big = neumann_g(&s.g, m);
        f_big.zip_with(&g_big, |a, b| a - b).expect("shared grid")
    })
}

/// Heat residual of `f + S g`.
pub fn heat_residual_fsg(trajectory: &[BpfState], params: &BpfParams) -> Result<f64> {
    heat_residual(trajectory, params, |s, m| {
        let sg = grid::shift(&s.g, m as isize).expect("a_nodes within grid");
        s.f.zip_with(&sg, |a, b| a + b).expect("shared grid")
    })
}

/// Summary of one transform check on a kinetic trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformReport {
    pub dx: f64,
    pub dt_out: f64,
    pub a_nodes: usize,
    pub series_length: usize,
    /// Worst telescoping defect of `(I - S) F = f` and `(I - T) G = g`.
    pub telescoping_defect: f64,
    pub heat_residual_fg: f64,
    pub heat_residual_fsg: f64,
}

impl TransformReport {
    pub fn compute(trajectory: &[BpfState], params: &BpfParams) -> Result<Self> {
        if trajectory.len() < 3 {
            return Err(Error::NotEnoughSamples {
                needed: 3,
                got: trajectory.len(),
            });
        }
        let grid = *trajectory[0].grid();
        let m = params.a_nodes(&grid)?;
        let telescoping_defect = trajectory
            .iter()
            .map(|s| telescoping_defect_f(&s.f, m).max(telescoping_defect_g(&s.g, m)))
            .fold(0.0, f64::max);
        Ok(Self {
            dx: grid.dx(),
            dt_out: trajectory[1].t - trajectory[0].t,
            a_nodes: m,
            series_length: series_length(&grid, m),
            telescoping_defect,
            heat_residual_fg: heat_residual_fg(trajectory, params)?,
            heat_residual_fsg: heat_residual_fsg(trajectory, params)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid9() -> Grid1D {
        Grid1D::new(0.0, 8.0, 8).unwrap()
    }

    /// Direct sum of shifts, independent of the recurrences.
    fn series_by_shifts(v: &Field, m: usize, sign: isize) -> Field {
        let mut acc = Field::zeros(*v.grid());
        let mut j = 0;
        while j * m <= v.grid().n_cells() {
            let s = grid::shift(v, sign * (j * m) as isize).unwrap();
            acc = acc.zip_with(&s, |a, b| a + b).unwrap();
            j += 1;
        }
        acc
    }

    #[test]
    fn rightmost_band_is_its_own_series() {
        let g = grid9();
        let f = Field::new(g, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 3.0]).unwrap();
        let big = neumann_f(&f, 2);
        assert_eq!(big.values(), &[3.0, 2.0, 3.0, 2.0, 3.0, 2.0, 3.0, 2.0, 3.0]);
        let big_g = neumann_g(&f, 2);
        assert_eq!(&big_g.values()[..7], &[0.0; 7]);
        assert_eq!(&big_g.values()[7..], &[2.0, 3.0]);
    }

    #[test]
    fn counting_oracle_for_constant_field() {
        let g = grid9();
        let ones = Field::constant(g, 1.0);
        for m in 1..=8 {
            let big = neumann_f(&ones, m);
            for i in 0..9 {
                let count = (0..).take_while(|j| i + j * m <= 8).count() as f64;
                assert_eq!(big.values()[i], count);
            }
            let big_g = neumann_g(&ones, m);
            for i in 0..9 {
                let count = (0..).take_while(|j| j * m <= i).count() as f64;
                assert_eq!(big_g.values()[i], count);
            }
        }
    }

    #[test]
    fn recurrences_match_direct_sums() {
        let g = Grid1D::new(-1.0, 1.0, 50).unwrap();
        let f = Field::from_fn(g, |x| libm::exp(-4.0 * x * x) + 0.1 * x);
        for m in [1, 3, 7, 50] {
            let a = neumann_f(&f, m);
            let b = series_by_shifts(&f, m, 1);
            for i in 0..g.len() {
                assert_abs_diff_eq!(a.values()[i], b.values()[i], epsilon = 1e-12);
            }
            let a = neumann_g(&f, m);
            let b = series_by_shifts(&f, m, -1);
            for i in 0..g.len() {
                assert_abs_diff_eq!(a.values()[i], b.values()[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn series_length_rounds_up() {
        let g = Grid1D::new(-1.0, 1.0, 10).unwrap();
        assert_eq!(series_length(&g, 3), 4);
        assert_eq!(series_length(&g, 5), 2);
        assert_eq!(series_length(&g, 10), 1);
    }

    #[test]
    fn vacuum_has_zero_residual() {
        let g = Grid1D::new(-1.0, 1.0, 20).unwrap();
        let p = BpfParams::new(5.0, g.dx(), 1.0).unwrap();
        let traj: Vec<BpfState> = (0..4)
            .map(|k| BpfState::new(Field::zeros(g), Field::zeros(g), k as f64 * 0.1).unwrap())
            .collect();
        let r = TransformReport::compute(&traj, &p).unwrap();
        assert_eq!(r.heat_residual_fg, 0.0);
        assert_eq!(r.heat_residual_fsg, 0.0);
        assert!(TransformReport::compute(&traj[..2], &p).is_err());
    }
}
