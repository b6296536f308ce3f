//! Vanishing-`eps` limit: `h` follows the Neumann heat equation, `u = +h` left
//! of the price `p(t)` and `-h` right of it, and `p` splits the mass of `h`
//! into the conserved buyer and vendor masses. Equivalently `p` follows
//! `p' = -h_x(p, t) / h(p, t)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{self, Field, Grid1D};
use crate::rk4::Rk4;

/// Below this `h(p)` the price ODE is treated as singular.
pub const SINGULAR_DENSITY: f64 = 1e-12;
/// Relative mismatch in cumulative mass accepted from the bisection.
pub const MASS_TOL: f64 = 1e-12;

/// Explicit step bound of the pure diffusion part.
pub fn heat_stable_dt(grid: &Grid1D, diffusion: f64, safety: f64) -> f64 {
    safety * grid.dx() * grid.dx() / (2.0 * diffusion)
}

/// RK4 on `h_t = D h_xx` with mirror ghosts, reusing buffers across steps.
#[derive(Debug, Clone)]
pub struct HeatStepper {
    grid: Grid1D,
    diffusion: f64,
    rk: Rk4,
    y: Vec<f64>,
}

impl HeatStepper {
    pub fn new(grid: Grid1D, diffusion: f64) -> Result<Self> {
        if !(diffusion > 0.0) || !diffusion.is_finite() {
            return Err(Error::InvalidParameter {
                name: "diffusion",
                value: diffusion,
            });
        }
        Ok(Self {
            grid,
            diffusion,
            rk: Rk4::new(grid.len()),
            y: vec![0.0; grid.len()],
        })
    }

    pub fn step(&mut self, h: &mut Field, dt: f64) -> Result<()> {
        if !h.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        if dt == 0.0 {
            return Ok(());
        }
        self.y.copy_from_slice(h.values());
        let (dx, d) = (self.grid.dx(), self.diffusion);
        self.rk.step(&mut self.y, dt, |_, y, dy| {
            let n = y.len();
            grid::second_diff_into(y, dx, y[1], y[n - 2], dy);
            dy.iter_mut().for_each(|v| *v *= d);
            Ok(())
        })?;
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Instability {
                t: f64::NAN,
                detail: "non-finite heat solution",
            });
        }
        *h = Field::from_raw(self.grid, self.y.clone());
        Ok(())
    }
}

/// One RK4 step of the Neumann heat equation.
pub fn heat_step(h: &Field, diffusion: f64, dt: f64) -> Result<Field> {
    let mut stepper = HeatStepper::new(*h.grid(), diffusion)?;
    let mut out = h.clone();
    stepper.step(&mut out, dt)?;
    Ok(out)
}

/// Mass of the piecewise-linear interpolant of `h` on `[x_min, x_j + s dx]`.
fn mass_up_to(cum: &[f64], h: &[f64], dx: f64, j: usize, s: f64) -> f64 {
    cum[j] + dx * s * (h[j] + 0.5 * s * (h[j + 1] - h[j]))
}

/// `m_f` must lie strictly inside `(0, total)`, beyond rounding of `total`.
fn check_mass(m_f: f64, total: f64) -> Result<()> {
    let margin = MASS_TOL * libm::fabs(total);
    if !(m_f > margin && m_f < total - margin) {
        return Err(Error::MassOutOfRange { m_f, total });
    }
    Ok(())
}

/// Solves `int_{x_min}^p h dx = m_f` by bisection on the running trapezoid
/// integral (exact integral of the linear interpolant inside each cell).
pub fn price_from_mass(h: &Field, m_f: f64) -> Result<f64> {
    let grid = h.grid();
    let v = h.values();
    let dx = grid.dx();
    let cum = grid::cumulative(h);
    let total = cum[grid.n_cells()];
    check_mass(m_f, total)?;
    // First cell whose right end carries at least m_f.
    let j = cum
        .iter()
        .position(|c| *c >= m_f)
        .map(|i| i.saturating_sub(1))
        .unwrap_or(grid.n_cells() - 1)
        .min(grid.n_cells() - 1);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let tol = MASS_TOL * total;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = mass_up_to(&cum, v, dx, j, mid);
        if m < m_f {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    debug_assert!(libm::fabs(mass_up_to(&cum, v, dx, j, lo) - m_f) <= tol);
    Ok(grid.x(j) + 0.5 * (lo + hi) * dx)
}

/// Limiting state: heat-equation `h`, price `p` and the conserved buyer mass.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpState {
    pub h: Field,
    pub p: f64,
    pub t: f64,
    pub m_f: f64,
}

impl SharpState {
    /// State whose price is fixed by the mass split of `h`.
    pub fn from_mass(h: Field, m_f: f64, t: f64) -> Result<Self> {
        let p = price_from_mass(&h, m_f)?;
        Ok(Self { h, p, t, m_f })
    }

    pub fn m_g(&self) -> f64 {
        grid::integrate(&self.h) - self.m_f
    }
}

/// `h` and `h_x` at `x`, with `h` blended between two time levels by `theta`.
fn local_profile(a: &[f64], b: &[f64], theta: f64, grid: &Grid1D, x: f64) -> (f64, f64) {
    let j = grid.cell_of(x);
    let s = ((x - grid.x(j)) / grid.dx()).clamp(0.0, 1.0);
    let dx = grid.dx();
    let at = |i: usize| a[i] + theta * (b[i] - a[i]);
    let slope = |i: usize| {
        let da = grid::central_diff_at(a, dx, i);
        let db = grid::central_diff_at(b, dx, i);
        da + theta * (db - da)
    };
    let h = at(j) + s * (at(j + 1) - at(j));
    let hx = slope(j) + s * (slope(j + 1) - slope(j));
    (h, hx)
}

/// Reusable integrator for `(h, p)`.
#[derive(Debug, Clone)]
pub struct SharpStepper {
    heat: HeatStepper,
    diffusion: f64,
}

impl SharpStepper {
    pub fn new(grid: Grid1D, diffusion: f64) -> Result<Self> {
        Ok(Self {
            heat: HeatStepper::new(grid, diffusion)?,
            diffusion,
        })
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    /// Advances `h` by one heat step and `p` by RK4 on `p' = -h_x / h`, the
    /// stage fields being linear in time between the two heat levels.
    pub fn step(&mut self, state: &mut SharpState, dt: f64) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        let old = state.h.clone();
        let mut new = state.h.clone();
        self.heat.step(&mut new, dt)?;
        let grid = *old.grid();
        let (a, b) = (old.values(), new.values());
        let t = state.t;
        let velocity = |theta: f64, p: f64| -> Result<f64> {
            let (h, hx) = local_profile(a, b, theta, &grid, p);
            if !(h >= SINGULAR_DENSITY) {
                return Err(Error::SingularPrice { t: t + theta * dt, p });
            }
            Ok(-hx / h)
        };
        let p = state.p;
        let k1 = velocity(0.0, p)?;
        let k2 = velocity(0.5, p + 0.5 * dt * k1)?;
        let k3 = velocity(0.5, p + 0.5 * dt * k2)?;
        let k4 = velocity(1.0, p + dt * k3)?;
        let p_next = p + dt / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
        if !p_next.is_finite() {
            return Err(Error::Instability {
                t: t + dt,
                detail: "non-finite price",
            });
        }
        state.h = new;
        state.p = p_next.clamp(grid.x_min(), grid.x_max());
        state.t = t + dt;
        Ok(())
    }
}

/// One step of the coupled heat / price ODE system.
pub fn price_ode_step(state: &SharpState, diffusion: f64, dt: f64) -> Result<SharpState> {
    let mut stepper = SharpStepper::new(*state.h.grid(), diffusion)?;
    let mut next = state.clone();
    stepper.step(&mut next, dt)?;
    Ok(next)
}

/// `u = h sign(p - x)`, with the two nodes bracketing `p` blended so that the
/// trapezoid integral of `u` equals `m_f - m_g`.
pub fn reconstruct_u(state: &SharpState) -> Field {
    let grid = *state.h.grid();
    let h = state.h.values();
    let n = grid.len();
    let total = grid::integrate(&state.h);
    let target = 2.0 * state.m_f - total;
    let j = grid.cell_of(state.p);
    let mut u: Vec<f64> = (0..n)
        .map(|i| {
            if i < j {
                h[i]
            } else if i > j + 1 {
                -h[i]
            } else {
                0.0
            }
        })
        .collect();
    let base: f64 = (0..n).map(|i| grid.weight(i) * u[i]).sum();
    let a1 = grid.weight(j) * h[j];
    let a2 = grid.weight(j + 1) * h[j + 1];
    // Walk (s_j, s_{j+1}) from (-1, -1) to (1, -1) to (1, 1).
    let r = (target - base + a1 + a2).clamp(0.0, 2.0 * (a1 + a2));
    let (s1, s2) = if r <= 2.0 * a1 {
        (if a1 > 0.0 { -1.0 + r / a1 } else { 1.0 }, -1.0)
    } else {
        (1.0, if a2 > 0.0 { -1.0 + (r - 2.0 * a1) / a2 } else { -1.0 })
    };
    u[j] = s1 * h[j];
    u[j + 1] = s2 * h[j + 1];
    Field::from_raw(grid, u)
}

/// Price under the flat steady state: `mean(h_I) (p - x_min) = m_f`.
pub fn equilibrium_price(h_initial: &Field, m_f: f64) -> Result<f64> {
    let grid = h_initial.grid();
    let total = grid::integrate(h_initial);
    check_mass(m_f, total)?;
    let mean = total / grid.length();
    Ok(grid.x_min() + m_f / mean)
}

/// Heat-evolves `h` to `t_end` and returns the sharp profile there, with the
/// price from the mass split. With `evolve = false` `h` is held fixed.
pub fn limit_profile(
    h_initial: &Field,
    m_f: f64,
    diffusion: f64,
    t_end: f64,
    safety: f64,
    evolve: bool,
) -> Result<SharpState> {
    let mut h = h_initial.clone();
    if evolve && t_end > 0.0 {
        let mut heat = HeatStepper::new(*h.grid(), diffusion)?;
        let dt_max = heat_stable_dt(h.grid(), diffusion, safety);
        let steps = libm::ceil(t_end / dt_max).max(1.0) as usize;
        let dt = t_end / steps as f64;
        for _ in 0..steps {
            heat.step(&mut h, dt)?;
        }
    }
    SharpState::from_mass(h, m_f, t_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(-1.0, 1.0, n).unwrap()
    }

    #[test]
    fn constant_h_is_steady() {
        let g = grid(50);
        let h = Field::constant(g, 0.7);
        assert_eq!(heat_step(&h, 1.0, 1e-4).unwrap(), h);
    }

    #[test]
    fn lowest_neumann_mode_decays_at_its_rate() {
        let g = grid(100);
        let d = 0.5;
        let mode = |x: f64| libm::cos(PI * (x + 1.0) / 2.0);
        let mut h = Field::from_fn(g, |x| 2.0 + mode(x));
        let mut heat = HeatStepper::new(g, d).unwrap();
        let steps = 10_000;
        let dt = 1.0 / steps as f64;
        assert!(dt < heat_stable_dt(&g, d, 0.4));
        let mass0 = grid::integrate(&h);
        for _ in 0..steps {
            heat.step(&mut h, dt).unwrap();
        }
        // Project onto the mode with trapezoid weights.
        let phi = Field::from_fn(g, mode);
        let num = grid::integrate(&h.zip_with(&phi, |a, b| (a - 2.0) * b).unwrap());
        let den = grid::integrate(&phi.zip_with(&phi, |a, b| a * b).unwrap());
        let amplitude = num / den;
        let expect = libm::exp(-d * (PI / 2.0) * (PI / 2.0));
        assert!((amplitude / expect - 1.0).abs() < 0.01, "{amplitude} vs {expect}");
        assert!((grid::integrate(&h) - mass0).abs() < 1e-12);
    }

    #[test]
    fn price_from_mass_cases() {
        let g = grid(40);
        let one = Field::constant(g, 1.0);
        assert_abs_diff_eq!(price_from_mass(&one, 1.0).unwrap(), 0.0, epsilon = 1e-12);
        // m_f - m_g = 0.5, m_f + m_g = 2 -> m_f = 1.25 -> 2p = 0.5.
        assert_abs_diff_eq!(price_from_mass(&one, 1.25).unwrap(), 0.25, epsilon = 1e-12);
        assert!(price_from_mass(&one, 0.0).is_err());
        assert!(price_from_mass(&one, 2.0).is_err());

        // Mass concentrated left of zero.
        let lump = Field::from_fn(g, |x| if (-0.6..=-0.2).contains(&x) { 2.0 } else { 0.0 });
        let total = grid::integrate(&lump);
        let p = price_from_mass(&lump, 0.5 * total).unwrap();
        assert!((-0.6..=-0.2).contains(&p));
        let cum = grid::cumulative(&lump);
        let j = cum.iter().position(|c| *c >= 0.5 * total).unwrap();
        assert!(p > g.x(j - 1) && p <= g.x(j));
    }

    #[test]
    fn frozen_price_for_flat_h() {
        let g = grid(40);
        let s = SharpState::from_mass(Field::constant(g, 1.0), 0.8, 0.0).unwrap();
        let next = price_ode_step(&s, 1.0, 1e-4).unwrap();
        assert_eq!(next.p, s.p);
    }

    #[test]
    fn price_moves_down_a_rising_profile() {
        let g = grid(80);
        let h = Field::from_fn(g, |x| 1.0 + 0.3 * x);
        let s = SharpState::from_mass(h, 0.9, 0.0).unwrap();
        let next = price_ode_step(&s, 1.0, 1e-4).unwrap();
        assert!(next.p < s.p);
    }

    #[test]
    fn reconstruct_u_at_node_and_mass() {
        let g = grid(40);
        let s = SharpState::from_mass(Field::constant(g, 1.0), 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(s.p, 0.0, epsilon = 1e-12);
        let u = reconstruct_u(&s);
        for i in 0..g.len() {
            let x = g.x(i);
            if x < -1e-9 {
                assert_eq!(u.values()[i], 1.0);
            } else if x > 1e-9 {
                assert_eq!(u.values()[i], -1.0);
            }
        }
        let h = Field::from_fn(g, |x| 0.4 + libm::exp(-(x - 0.2) * (x - 0.2) * 8.0));
        for m_f in [0.1, 0.37, 0.8, 1.1] {
            let s = SharpState::from_mass(h.clone(), m_f, 0.0).unwrap();
            let u = reconstruct_u(&s);
            assert_abs_diff_eq!(grid::integrate(&u), m_f - s.m_g(), epsilon = 1e-10);
        }
    }

    #[test]
    fn equilibrium_price_cases() {
        let g = grid(40);
        let h = Field::from_fn(g, |x| 1.0 + 0.5 * libm::cos(PI * (x + 1.0) / 2.0));
        let total = grid::integrate(&h);
        assert_abs_diff_eq!(equilibrium_price(&h, 0.5 * total).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            equilibrium_price(&Field::constant(g, 1.0), 1.5).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(equilibrium_price(&h, -1.0).is_err());
    }
}
