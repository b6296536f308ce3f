//! Kinetic price formation system with finite transaction rate `k` and cost `a`:
//!
//! ```text
//! f_t = (sigma^2/2) f_xx - k f g + k (f g)(x + a)
//! g_t = (sigma^2/2) g_xx - k f g + k (f g)(x - a)
//! ```
//!
//! on a bounded grid with mirror (zero-flux) ghosts for diffusion and zero
//! extension for the shifted gain terms. The support guard refuses to continue
//! once trading activity reaches the band of width `a` at either boundary,
//! where zero extension would start leaking mass.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid1D};
use crate::rk4::Rk4;

/// Negative densities below this are a scheme failure.
pub const NEGATIVITY_FLOOR: f64 = -1e-6;
/// Tolerance on the sign of a freshly constructed state.
pub const STATE_NEGATIVITY_TOL: f64 = -1e-12;
/// Largest admissible fraction of trading activity inside the boundary bands.
pub const GUARD_BAND_FRACTION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpfParams {
    /// Transaction rate.
    pub k: f64,
    /// Transaction cost (price displacement after a trade).
    pub a: f64,
    /// Diffusivity; the diffusion coefficient is `sigma^2 / 2`.
    pub sigma: f64,
    pub support_guard: bool,
}

impl BpfParams {
    pub fn new(k: f64, a: f64, sigma: f64) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter { name: "k", value: k });
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter { name: "a", value: a });
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
            });
        }
        Ok(Self {
            k,
            a,
            sigma,
            support_guard: true,
        })
    }

    /// High-frequency parameterisation: `k = c / a`.
    pub fn from_c(c: f64, a: f64, sigma: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidParameter { name: "a", value: a });
        }
        Self::new(c / a, a, sigma)
    }

    /// `c = k a`, held fixed in the high-frequency limit.
    pub fn c(&self) -> f64 {
        self.k * self.a
    }

    pub fn diffusion(&self) -> f64 {
        0.5 * self.sigma * self.sigma
    }

    /// Number of cells spanned by `a`; errors unless `a` is a whole multiple of `dx`.
    pub fn a_nodes(&self, grid: &Grid1D) -> Result<usize> {
        let m = grid.cells_for(self.a)?;
        if m > grid.n_cells() {
            return Err(Error::ShiftOutOfRange {
                offset: m as isize,
                n_cells: grid.n_cells(),
            });
        }
        Ok(m)
    }

    /// Explicit step size: diffusive limit and the reaction (loss) time scale.
    pub fn stable_dt(&self, state: &BpfState, safety: f64) -> f64 {
        let dx = state.f.grid().dx();
        let diffusive = dx * dx / (2.0 * self.diffusion());
        let peak = state.f.max().max(state.g.max()).max(0.0);
        let reactive = 1.0 / (2.0 * self.k * peak + f64::MIN_POSITIVE);
        safety * diffusive.min(reactive)
    }
}

/// Buyer and vendor densities at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BpfState {
    pub f: Field,
    pub g: Field,
    pub t: f64,
}

impl BpfState {
    pub fn new(f: Field, g: Field, t: f64) -> Result<Self> {
        if !f.grid().same_as(g.grid()) {
            return Err(Error::GridMismatch);
        }
        for (name, field) in [("f", &f), ("g", &g)] {
            let lo = field.min();
            if lo < STATE_NEGATIVITY_TOL {
                return Err(Error::InvalidParameter {
                    name: if name == "f" {
                        "f (negative density)"
                    } else {
                        "g (negative density)"
                    },
                    value: lo,
                });
            }
        }
        Ok(Self { f, g, t })
    }

    pub fn grid(&self) -> &Grid1D {
        self.f.grid()
    }

    pub fn mass_f(&self) -> f64 {
        grid::integrate(&self.f)
    }

    pub fn mass_g(&self) -> f64 {
        grid::integrate(&self.g)
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn rhs_into(
    f: &[f64],
    g: &[f64],
    dx: f64,
    diffusion: f64,
    k: f64,
    m: usize,
    fg: &mut [f64],
    df: &mut [f64],
    dg: &mut [f64],
) {
    let n = f.len();
    for i in 0..n {
        fg[i] = f[i] * g[i];
    }
    grid::second_diff_into(f, dx, f[1], f[n - 2], df);
    grid::second_diff_into(g, dx, g[1], g[n - 2], dg);
    for i in 0..n {
        let loss = k * fg[i];
        let gain_f = if i + m < n { k * fg[i + m] } else { 0.0 };
        let gain_g = if i >= m { k * fg[i - m] } else { 0.0 };
        df[i] = diffusion * df[i] - loss + gain_f;
        dg[i] = diffusion * dg[i] - loss + gain_g;
    }
}

/// Tendencies `(df/dt, dg/dt)`.
pub fn bpf_rhs(state: &BpfState, params: &BpfParams) -> Result<(Field, Field)> {
    let grid = *state.grid();
    let m = params.a_nodes(&grid)?;
    let n = grid.len();
    let mut fg = vec![0.0; n];
    let mut df = vec![0.0; n];
    let mut dg = vec![0.0; n];
    rhs_into(
        state.f.values(),
        state.g.values(),
        grid.dx(),
        params.diffusion(),
        params.k,
        m,
        &mut fg,
        &mut df,
        &mut dg,
    );
    Ok((Field::from_raw(grid, df), Field::from_raw(grid, dg)))
}

/// Reusable RK4 integrator for one kinetic run.
#[derive(Debug, Clone)]
pub struct BpfStepper {
    params: BpfParams,
    grid: Grid1D,
    m: usize,
    rk: Rk4,
    y: Vec<f64>,
    fg: Vec<f64>,
}

impl BpfStepper {
    pub fn new(grid: Grid1D, params: BpfParams) -> Result<Self> {
        let m = params.a_nodes(&grid)?;
        let n = grid.len();
        Ok(Self {
            params,
            grid,
            m,
            rk: Rk4::new(2 * n),
            y: vec![0.0; 2 * n],
            fg: vec![0.0; n],
        })
    }

    pub fn params(&self) -> &BpfParams {
        &self.params
    }

    pub fn a_nodes(&self) -> usize {
        self.m
    }

    pub fn step(&mut self, state: &mut BpfState, dt: f64) -> Result<()> {
        if !state.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        if dt == 0.0 {
            return Ok(());
        }
        let n = self.grid.len();
        self.y[..n].copy_from_slice(state.f.values());
        self.y[n..].copy_from_slice(state.g.values());
        let (dx, d, k, m) = (self.grid.dx(), self.params.diffusion(), self.params.k, self.m);
        let fg = &mut self.fg;
        self.rk.step(&mut self.y, dt, |_, y, dy| {
            let (f, g) = y.split_at(n);
            let (df, dg) = dy.split_at_mut(n);
            rhs_into(f, g, dx, d, k, m, fg, df, dg);
            Ok(())
        })?;
        let t = state.t + dt;
        let mut lo = f64::INFINITY;
        for v in &self.y {
            if !v.is_finite() {
                return Err(Error::Instability {
                    t,
                    detail: "non-finite density",
                });
            }
            lo = lo.min(*v);
        }
        if lo < NEGATIVITY_FLOOR {
            return Err(Error::Instability {
                t,
                detail: "density dropped below -1e-6",
            });
        }
        state.f = Field::from_raw(self.grid, self.y[..n].to_vec());
        state.g = Field::from_raw(self.grid, self.y[n..].to_vec());
        state.t = t;
        Ok(())
    }
}

/// One RK4 step of size `dt`.
pub fn bpf_step(state: &BpfState, params: &BpfParams, dt: f64) -> Result<BpfState> {
    let mut stepper = BpfStepper::new(*state.grid(), *params)?;
    let mut next = state.clone();
    stepper.step(&mut next, dt)?;
    Ok(next)
}

/// Transaction density `mu = k f g`.
pub fn transaction_density(state: &BpfState, params: &BpfParams) -> Field {
    let values = state
        .f
        .values()
        .iter()
        .zip(state.g.values())
        .map(|(f, g)| params.k * f * g)
        .collect();
    Field::from_raw(*state.grid(), values)
}

/// Fraction of trading activity (trapezoid mass of `f g`) sitting on nodes whose
/// shifted image leaves the grid.
pub fn guard_band_fraction(state: &BpfState, a_nodes: usize) -> f64 {
    let grid = state.grid();
    let n = grid.len();
    let mut band = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        let w = grid.weight(i) * state.f.values()[i] * state.g.values()[i];
        total += w;
        if i <= a_nodes || i + a_nodes >= n - 1 {
            band += w;
        }
    }
    if total > 0.0 {
        band / total
    } else {
        0.0
    }
}

pub fn check_support_guard(state: &BpfState, params: &BpfParams) -> Result<()> {
    if !params.support_guard {
        return Ok(());
    }
    let m = params.a_nodes(state.grid())?;
    let fraction = guard_band_fraction(state, m);
    if fraction > GUARD_BAND_FRACTION {
        return Err(Error::SupportGuard {
            t: state.t,
            band_fraction: fraction,
        });
    }
    Ok(())
}

/// Price read off the transaction density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceEstimates {
    pub argmax: f64,
    pub mean: f64,
    pub median: f64,
}

pub fn price_estimates(mu: &Field) -> Result<PriceEstimates> {
    let grid = mu.grid();
    let total = grid::integrate(mu);
    if !(total > 0.0) {
        return Err(Error::NoTrades);
    }
    let values = mu.values();
    // Leftmost maximum.
    let mut arg = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[arg] {
            arg = i;
        }
    }
    let first_moment: f64 = (0..grid.len()).map(|i| grid.weight(i) * grid.x(i) * values[i]).sum();
    let cum = grid::cumulative(mu);
    let half = 0.5 * total;
    let j = cum.iter().position(|c| *c >= half).unwrap_or(grid.n_cells());
    let median = if j == 0 {
        grid.x(0)
    } else {
        let (c0, c1) = (cum[j - 1], cum[j]);
        let theta = if c1 > c0 { (half - c0) / (c1 - c0) } else { 1.0 };
        grid.x(j - 1) + theta * grid.dx()
    };
    Ok(PriceEstimates {
        argmax: grid.x(arg),
        mean: first_moment / total,
        median,
    })
}
