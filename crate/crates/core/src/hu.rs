//! High-frequency limit in the variables `h = f + g`, `u = f - g`:
//!
//! ```text
//! h_t = D h_xx
//! u_t = D u_xx + (1 / 2 eps) (h^2 - u^2)_x
//! ```
//!
//! with zero-flux boundaries `h_x = 0`, `-D u_x = (1 / 2 eps)(h^2 - u^2)`.
//! Two semi-discretisations are provided: the pointwise central scheme
//! (`Central`) with ghost nodes carrying the boundary conditions, and a
//! flux-difference form (`FluxConservative`) whose trapezoid masses are
//! conserved to round-off.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid1D};
use crate::rk4::Rk4;

/// Hard ceiling on `u^2 - h^2`, relative to `max h^2`.
pub const HARD_U2_EXCESS: f64 = 1e-4;
/// Tolerance on `h` dipping below zero or above its initial maximum.
pub const H_BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Central,
    FluxConservative,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Central => "paper_central",
            Scheme::FluxConservative => "flux_conservative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper_central" => Some(Scheme::Central),
            "flux_conservative" => Some(Scheme::FluxConservative),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuParams {
    /// Inverse trading intensity, `eps = 1 / c`.
    pub epsilon: f64,
    /// Coefficient `D` of the second derivatives.
    pub diffusion: f64,
    pub scheme: Scheme,
    /// Hold `h` fixed and evolve only `u` (the viscous Burgers case when `h = 1`).
    pub freeze_h: bool,
}

impl HuParams {
    pub fn new(epsilon: f64, diffusion: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
            });
        }
        if !(diffusion > 0.0) || !diffusion.is_finite() {
            return Err(Error::InvalidParameter {
                name: "diffusion",
                value: diffusion,
            });
        }
        Ok(Self {
            epsilon,
            diffusion,
            scheme: Scheme::Central,
            freeze_h: false,
        })
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn frozen(mut self, freeze_h: bool) -> Self {
        self.freeze_h = freeze_h;
        self
    }

    pub fn c(&self) -> f64 {
        1.0 / self.epsilon
    }

    /// `safety * min(dx^2 / 2D, eps dx / (2 max|h|))`.
    pub fn stable_dt(&self, grid: &Grid1D, max_h: f64, safety: f64) -> f64 {
        let dx = grid.dx();
        let diffusive = dx * dx / (2.0 * self.diffusion);
        let advective = if max_h > 0.0 {
            self.epsilon * dx / (2.0 * max_h)
        } else {
            f64::INFINITY
        };
        safety * diffusive.min(advective)
    }

    /// Cell Peclet number `max h dx / (2 eps D)` of the drift term; the central
    /// discretisations stay monotone only while this is of order one or below.
    pub fn cell_peclet(&self, grid: &Grid1D, max_h: f64) -> f64 {
        max_h * grid.dx() / (2.0 * self.epsilon * self.diffusion)
    }
}

/// Total density `h` and imbalance `u` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HuState {
    pub h: Field,
    pub u: Field,
    pub t: f64,
}

impl HuState {
    pub fn new(h: Field, u: Field, t: f64) -> Result<Self> {
        if !h.grid().same_as(u.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { h, u, t })
    }

    pub fn grid(&self) -> &Grid1D {
        self.h.grid()
    }

    /// Buyer mass `(int h + int u) / 2`.
    pub fn mass_f(&self) -> f64 {
        0.5 * (grid::integrate(&self.h) + grid::integrate(&self.u))
    }

    pub fn mass_g(&self) -> f64 {
        0.5 * (grid::integrate(&self.h) - grid::integrate(&self.u))
    }

    /// `max_i (u_i^2 - h_i^2)`.
    pub fn max_u2_minus_h2(&self) -> f64 {
        max_u2_minus_h2(self.h.values(), self.u.values())
    }

    /// Trapezoid integral of `h^2 - u^2` (four times the overlap `int f g`).
    pub fn gap(&self) -> f64 {
        let q: Vec<f64> = self
            .h
            .values()
            .iter()
            .zip(self.u.values())
            .map(|(h, u)| h * h - u * u)
            .collect();
        grid::trapezoid(&q, self.grid().dx())
    }
}

fn max_u2_minus_h2(h: &[f64], u: &[f64]) -> f64 {
    h.iter()
        .zip(u)
        .map(|(h, u)| u * u - h * h)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `h = f + g`, `u = f - g`.
pub fn from_fg(f: &Field, g: &Field, t: f64) -> Result<HuState> {
    let h = f.zip_with(g, |f, g| f + g)?;
    let u = f.zip_with(g, |f, g| f - g)?;
    Ok(HuState { h, u, t })
}

/// `f = (h + u) / 2`, `g = (h - u) / 2`.
pub fn to_fg(state: &HuState) -> (Field, Field) {
    let f = state
        .h
        .zip_with(&state.u, |h, u| 0.5 * (h + u))
        .expect("state fields share a grid");
    let g = state
        .h
        .zip_with(&state.u, |h, u| 0.5 * (h - u))
        .expect("state fields share a grid");
    (f, g)
}

/// Pointwise central scheme. `q` is scratch of the node count.
pub(crate) fn rhs_central_into(
    h: &[f64],
    u: &[f64],
    dx: f64,
    p: &HuParams,
    q: &mut [f64],
    dh: &mut [f64],
    du: &mut [f64],
) {
    let n = h.len();
    let last = n - 1;
    let d = p.diffusion;
    let inv_dx2 = 1.0 / (dx * dx);
    let adv = 1.0 / (4.0 * p.epsilon * dx);
    for i in 0..n {
        q[i] = h[i] * h[i] - u[i] * u[i];
    }
    // Ghosts: h mirrors; u from the central difference of the flux condition.
    let ghost_scale = dx / (p.epsilon * d);
    let u_left = u[1] + ghost_scale * q[0];
    let u_right = u[last - 1] - ghost_scale * q[last];
    let q_left = h[1] * h[1] - u_left * u_left;
    let q_right = h[last - 1] * h[last - 1] - u_right * u_right;

    dh[0] = d * 2.0 * (h[1] - h[0]) * inv_dx2;
    du[0] = d * (u[1] - 2.0 * u[0] + u_left) * inv_dx2 + adv * (q[1] - q_left);
    for i in 1..last {
        dh[i] = d * (h[i + 1] - 2.0 * h[i] + h[i - 1]) * inv_dx2;
        du[i] = d * (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2 + adv * (q[i + 1] - q[i - 1]);
    }
    dh[last] = d * 2.0 * (h[last - 1] - h[last]) * inv_dx2;
    du[last] = d * (u_right - 2.0 * u[last] + u[last - 1]) * inv_dx2 + adv * (q_right - q[last - 1]);
}

/// Flux-difference scheme with zero flux through both boundary half-faces.
pub(crate) fn rhs_conservative_into(
    h: &[f64],
    u: &[f64],
    dx: f64,
    p: &HuParams,
    q: &mut [f64],
    dh: &mut [f64],
    du: &mut [f64],
) {
    let n = h.len();
    let last = n - 1;
    let d = p.diffusion;
    let drift = 0.25 / p.epsilon;
    let inv_dx = 1.0 / dx;
    for i in 0..n {
        q[i] = h[i] * h[i] - u[i] * u[i];
    }
    // Flux through face i + 1/2, accumulated into both neighbours.
    dh.iter_mut().for_each(|v| *v = 0.0);
    du.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..last {
        let fh = d * (h[i + 1] - h[i]) * inv_dx;
        let fu = d * (u[i + 1] - u[i]) * inv_dx + drift * (q[i + 1] + q[i]);
        dh[i] += fh;
        dh[i + 1] -= fh;
        du[i] += fu;
        du[i + 1] -= fu;
    }
    let interior = inv_dx;
    let boundary = 2.0 * inv_dx;
    dh[0] *= boundary;
    du[0] *= boundary;
    dh[last] *= boundary;
    du[last] *= boundary;
    for i in 1..last {
        dh[i] *= interior;
        du[i] *= interior;
    }
}

/// `(h, u, dx, params, scratch, dh, du)`.
type Kernel = fn(&[f64], &[f64], f64, &HuParams, &mut [f64], &mut [f64], &mut [f64]);

fn rhs_fields(state: &HuState, params: &HuParams, kernel: Kernel) -> Result<(Field, Field)> {
    let grid = *state.grid();
    let n = grid.len();
    let (mut q, mut dh, mut du) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    kernel(
        state.h.values(),
        state.u.values(),
        grid.dx(),
        params,
        &mut q,
        &mut dh,
        &mut du,
    );
    if dh.iter().chain(&du).any(|v| !v.is_finite()) {
        return Err(Error::Instability {
            t: state.t,
            detail: "non-finite tendency",
        });
    }
    Ok((Field::from_raw(grid, dh), Field::from_raw(grid, du)))
}

/// Tendencies `(dh/dt, du/dt)` of the pointwise central scheme.
pub fn hu_rhs_central(state: &HuState, params: &HuParams) -> Result<(Field, Field)> {
    rhs_fields(state, params, rhs_central_into)
}

/// Tendencies `(dh/dt, du/dt)` of the flux-difference scheme.
pub fn hu_rhs_conservative(state: &HuState, params: &HuParams) -> Result<(Field, Field)> {
    rhs_fields(state, params, rhs_conservative_into)
}

/// Reusable RK4 integrator for one `(h, u)` run. Bounds on `h` are taken from
/// the state the stepper is created with.
#[derive(Debug, Clone)]
pub struct HuStepper {
    params: HuParams,
    grid: Grid1D,
    rk: Rk4,
    y: Vec<f64>,
    q: Vec<f64>,
    h_max0: f64,
}

impl HuStepper {
    pub fn new(initial: &HuState, params: HuParams) -> Self {
        let grid = *initial.grid();
        let n = grid.len();
        Self {
            params,
            grid,
            rk: Rk4::new(2 * n),
            y: vec![0.0; 2 * n],
            q: vec![0.0; n],
            h_max0: initial.h.max(),
        }
    }

    pub fn params(&self) -> &HuParams {
        &self.params
    }

    pub fn stable_dt(&self, safety: f64) -> f64 {
        self.params.stable_dt(&self.grid, self.h_max0, safety)
    }

    pub fn step(&mut self, state: &mut HuState, dt: f64) -> Result<()> {
        if !state.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        if dt == 0.0 {
            return Ok(());
        }
        let n = self.grid.len();
        self.y[..n].copy_from_slice(state.h.values());
        self.y[n..].copy_from_slice(state.u.values());
        let params = self.params;
        let dx = self.grid.dx();
        let kernel = match params.scheme {
            Scheme::Central => rhs_central_into,
            Scheme::FluxConservative => rhs_conservative_into,
        };
        let q = &mut self.q;
        self.rk.step(&mut self.y, dt, |_, y, dy| {
            let (h, u) = y.split_at(n);
            let (dh, du) = dy.split_at_mut(n);
            kernel(h, u, dx, &params, q, dh, du);
            if params.freeze_h {
                dh.iter_mut().for_each(|v| *v = 0.0);
            }
            Ok(())
        })?;
        let t = state.t + dt;
        let (h, u) = self.y.split_at(n);
        self.check(h, u, t)?;
        state.h = Field::from_raw(self.grid, h.to_vec());
        state.u = Field::from_raw(self.grid, u.to_vec());
        state.t = t;
        Ok(())
    }

    fn check(&self, h: &[f64], u: &[f64], t: f64) -> Result<()> {
        let mut h_lo = f64::INFINITY;
        let mut h_hi = f64::NEG_INFINITY;
        for v in h.iter().chain(u) {
            if !v.is_finite() {
                return Err(Error::Instability {
                    t,
                    detail: "non-finite h or u",
                });
            }
        }
        for v in h {
            h_lo = h_lo.min(*v);
            h_hi = h_hi.max(*v);
        }
        let scale = self.h_max0.abs().max(f64::MIN_POSITIVE);
        if h_lo < -H_BOUND_TOL * scale || h_hi > self.h_max0 + H_BOUND_TOL * scale {
            return Err(Error::Instability {
                t,
                detail: "h left the bounds of its heat-equation maximum principle",
            });
        }
        // |u| <= h <= max h_I for the exact solution; a gross excursion is blow-up.
        if u.iter().any(|v| v.abs() > 2.0 * scale) {
            return Err(Error::Instability {
                t,
                detail: "|u| exceeded twice the initial maximum of h",
            });
        }
        let excess = max_u2_minus_h2(h, u);
        if excess > HARD_U2_EXCESS * h_hi * h_hi {
            return Err(Error::InvariantViolation {
                t,
                detail: "u^2 - h^2 above 1e-4 max h^2",
                value: excess / (h_hi * h_hi),
            });
        }
        Ok(())
    }
}

/// One RK4 step of size `dt` with the scheme selected in `params`.
pub fn hu_step(state: &HuState, params: &HuParams, dt: f64) -> Result<HuState> {
    let mut stepper = HuStepper::new(state, *params);
    let mut next = state.clone();
    stepper.step(&mut next, dt)?;
    Ok(next)
}

/// Downward zero crossings of `u` as `(x, drop)` pairs, `drop = u_i - u_{i+1}`.
pub fn downward_crossings(u: &Field) -> Vec<(f64, f64)> {
    let grid = u.grid();
    let v = u.values();
    let mut out = Vec::new();
    for i in 0..grid.n_cells() {
        if v[i] > 0.0 && v[i + 1] <= 0.0 {
            let drop = v[i] - v[i + 1];
            out.push((grid.x(i) + grid.dx() * v[i] / drop, drop));
        }
    }
    out
}

/// Location of the downward sign change of `u`; with several candidates the
/// one nearest `previous` wins, or the steepest when there is no history.
pub fn price_from_u(state: &HuState, previous: Option<f64>) -> Result<f64> {
    let crossings = downward_crossings(&state.u);
    let best = match previous {
        Some(p) => crossings.iter().min_by(|a, b| {
            libm::fabs(a.0 - p)
                .partial_cmp(&libm::fabs(b.0 - p))
                .unwrap_or(core::cmp::Ordering::Equal)
        }),
        None => crossings
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal)),
    };
    best.map(|c| c.0).ok_or(Error::NoInterface)
}

/// Time-trapezoid of `int (h^2 - u^2) dx` over a trajectory.
pub fn gap_integral(trajectory: &[HuState]) -> f64 {
    trajectory
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].gap() + w[1].gap()))
        .sum()
}

/// Same quadrature on precomputed `(t, int (h^2 - u^2) dx)` samples.
pub fn gap_integral_samples(samples: &[(f64, f64)]) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}
