//! Time-stepping driver shared by the three models.
//!
//! Steps land exactly on every diagnostic output time (multiples of `dt_out`
//! and `t_end`) and on every requested snapshot time; between two such events
//! the interval is split into equal substeps no longer than the model's stable
//! step. Output is therefore independent of how the stability bound evolves.

use alloc::vec::Vec;

use crate::bpf::{self, BpfParams, BpfState, BpfStepper};
use crate::error::{Error, Result};
use crate::grid::{self, Field};
use crate::hu::{self, HuParams, HuState, HuStepper};
use crate::sharp::{self, SharpState, SharpStepper};

/// Smallest admissible time step before the run is declared collapsed.
pub const MIN_DT: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub t_end: f64,
    pub dt_out: f64,
    pub snapshot_times: Vec<f64>,
    pub safety: f64,
    pub dt_override: Option<f64>,
}

impl Schedule {
    pub fn new(t_end: f64, dt_out: f64) -> Self {
        Self {
            t_end,
            dt_out,
            snapshot_times: Vec::new(),
            safety: 0.4,
            dt_override: None,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter {
                name: "T",
                value: self.t_end,
            });
        }
        if !(self.dt_out > 0.0) || !self.dt_out.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt_out",
                value: self.dt_out,
            });
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "safety",
                value: self.safety,
            });
        }
        if let Some(dt) = self.dt_override {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "dt_override",
                    value: dt,
                });
            }
        }
        for &s in &self.snapshot_times {
            if !(s >= 0.0 && s <= self.t_end + self.tol()) {
                return Err(Error::InvalidParameter {
                    name: "snapshot_times (outside [0, T])",
                    value: s,
                });
            }
        }
        Ok(())
    }

    fn tol(&self) -> f64 {
        1e-9 * self.t_end.max(self.dt_out)
    }

    /// Ordered event list `(t, is_output, is_snapshot)`.
    pub fn events(&self) -> Vec<(f64, bool, bool)> {
        let tol = self.tol();
        let mut events: Vec<(f64, bool, bool)> = Vec::new();
        let mut k = 0usize;
        loop {
            let t = k as f64 * self.dt_out;
            if t > self.t_end - tol {
                break;
            }
            events.push((t, true, false));
            k += 1;
        }
        events.push((self.t_end, true, false));
        for &s in &self.snapshot_times {
            events.push((s.min(self.t_end), false, true));
        }
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
        let mut merged: Vec<(f64, bool, bool)> = Vec::with_capacity(events.len());
        for e in events {
            match merged.last_mut() {
                Some(last) if libm::fabs(e.0 - last.0) <= tol => {
                    last.1 |= e.1;
                    last.2 |= e.2;
                    // Requested snapshot times win over k * dt_out; T wins over both.
                    if last.0 != self.t_end && (e.2 || e.0 == self.t_end) {
                        last.0 = e.0;
                    }
                }
                _ => merged.push(e),
            }
        }
        merged
    }
}

/// Everything the diagnostics need from a model state.
#[derive(Debug, Clone)]
pub struct Observables {
    pub f: Field,
    pub g: Field,
    pub h: Field,
    pub u: Field,
    pub mu: Option<Field>,
    /// Interface position carried by the state itself (sharp model).
    pub tracked_price: Option<f64>,
}

/// One row of `diagnostics.csv`; `None` marks quantities undefined for the model.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_f: f64,
    pub mass_g: f64,
    pub mass_h: f64,
    pub mass_u: f64,
    pub price_zero_crossing: Option<f64>,
    pub price_mass: Option<f64>,
    pub price_argmax_mu: Option<f64>,
    pub price_mean_mu: Option<f64>,
    pub price_median_mu: Option<f64>,
    pub gap_h2_u2: f64,
    pub max_u2_minus_h2: f64,
    pub overlap_fg: f64,
    pub max_ux: f64,
    pub dt_used: f64,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub obs: Observables,
}

/// A model the driver can advance.
pub trait Evolution {
    type State: Clone;

    fn max_dt(&self, state: &Self::State, safety: f64) -> f64;
    fn advance(&mut self, state: &mut Self::State, dt: f64) -> Result<()>;
    fn observe(&self, state: &Self::State) -> Observables;
    /// Snaps the state clock onto an event time after its substeps.
    fn set_time(state: &mut Self::State, t: f64);
    /// Checks run at output times only.
    fn check(&self, _state: &Self::State) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput<S> {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
    /// States at every diagnostic output time, when requested.
    pub trajectory: Vec<S>,
    pub final_state: S,
    /// Reference buyer mass (initial `int f`).
    pub mass_f0: f64,
    pub max_h: f64,
}

impl<S> RunOutput<S> {
    /// Time-trapezoid of `int (h^2 - u^2) dx` over the output records.
    pub fn gap_integral(&self) -> f64 {
        let samples: Vec<(f64, f64)> = self.records.iter().map(|r| (r.t, r.gap_h2_u2)).collect();
        hu::gap_integral_samples(&samples)
    }

    /// `max (u^2 - h^2) / max h^2` over all output times.
    pub fn max_u2_excess_rel(&self) -> f64 {
        let scale = (self.max_h * self.max_h).max(f64::MIN_POSITIVE);
        self.records
            .iter()
            .map(|r| r.max_u2_minus_h2 / scale)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_ux(&self) -> f64 {
        self.records.iter().map(|r| r.max_ux).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_dt(&self) -> f64 {
        self.records.iter().map(|r| r.dt_used).fold(0.0, f64::max)
    }
}

fn diagnose(t: f64, obs: &Observables, mass_f0: f64, previous: Option<f64>, dt_used: f64) -> DiagnosticsRecord {
    let grid = *obs.h.grid();
    let hv = obs.h.values();
    let uv = obs.u.values();
    let q: Vec<f64> = hv.iter().zip(uv).map(|(h, u)| h * h - u * u).collect();
    let fg: Vec<f64> = obs.f.values().iter().zip(obs.g.values()).map(|(f, g)| f * g).collect();
    let hu_state = HuState {
        h: obs.h.clone(),
        u: obs.u.clone(),
        t,
    };
    let price_zero_crossing = obs.tracked_price.or_else(|| hu::price_from_u(&hu_state, previous).ok());
    let mu_prices = obs.mu.as_ref().and_then(|mu| bpf::price_estimates(mu).ok());
    DiagnosticsRecord {
        t,
        mass_f: grid::integrate(&obs.f),
        mass_g: grid::integrate(&obs.g),
        mass_h: grid::integrate(&obs.h),
        mass_u: grid::integrate(&obs.u),
        price_zero_crossing,
        price_mass: sharp::price_from_mass(&obs.h, mass_f0).ok(),
        price_argmax_mu: mu_prices.map(|p| p.argmax),
        price_mean_mu: mu_prices.map(|p| p.mean),
        price_median_mu: mu_prices.map(|p| p.median),
        gap_h2_u2: grid::trapezoid(&q, grid.dx()),
        max_u2_minus_h2: q.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max),
        overlap_fg: grid::trapezoid(&fg, grid.dx()),
        max_ux: grid::central_diff(&obs.u).max(),
        dt_used,
    }
}

/// Runs `model` from `initial` through `schedule`.
pub fn drive<M: Evolution>(
    model: &mut M,
    initial: M::State,
    schedule: &Schedule,
    keep_trajectory: bool,
) -> Result<RunOutput<M::State>> {
    schedule.validate()?;
    let obs0 = model.observe(&initial);
    let mass_f0 = grid::integrate(&obs0.f);
    let max_h = obs0.h.max();
    let mut state = initial;
    let mut t = 0.0;
    let mut dt_used = 0.0;
    let mut previous_price = None;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut trajectory = Vec::new();
    for (event_t, is_output, is_snapshot) in schedule.events() {
        let interval = event_t - t;
        if interval > 0.0 {
            let dt_max = schedule
                .dt_override
                .unwrap_or_else(|| model.max_dt(&state, schedule.safety));
            if !(dt_max >= MIN_DT) {
                return Err(Error::Instability {
                    t,
                    detail: "time step collapsed",
                });
            }
            let steps = libm::ceil(interval / dt_max - 1e-9).max(1.0) as usize;
            let dt = interval / steps as f64;
            for _ in 0..steps {
                model.advance(&mut state, dt)?;
            }
            dt_used = dt;
            t = event_t;
            M::set_time(&mut state, t);
        }
        if is_output || is_snapshot {
            model.check(&state)?;
            let obs = model.observe(&state);
            if is_output {
                let record = diagnose(event_t, &obs, mass_f0, previous_price, dt_used);
                let floor = -1e-12 * record.mass_h.abs().max(f64::MIN_POSITIVE);
                let worst = record.mass_f.min(record.mass_g);
                if worst < floor {
                    return Err(Error::InvariantViolation {
                        t: event_t,
                        detail: "negative mass",
                        value: worst,
                    });
                }
                previous_price = record.price_zero_crossing.or(previous_price);
                records.push(record);
                if keep_trajectory {
                    trajectory.push(state.clone());
                }
            }
            if is_snapshot {
                snapshots.push(Snapshot { t: event_t, obs });
            }
        }
    }
    Ok(RunOutput {
        records,
        snapshots,
        trajectory,
        final_state: state,
        mass_f0,
        max_h,
    })
}

pub struct HuModel {
    stepper: HuStepper,
}

impl HuModel {
    pub fn new(initial: &HuState, params: HuParams) -> Self {
        Self {
            stepper: HuStepper::new(initial, params),
        }
    }
}

impl Evolution for HuModel {
    type State = HuState;

    fn max_dt(&self, _state: &HuState, safety: f64) -> f64 {
        self.stepper.stable_dt(safety)
    }

    fn set_time(state: &mut HuState, t: f64) {
        state.t = t;
    }

    fn advance(&mut self, state: &mut HuState, dt: f64) -> Result<()> {
        self.stepper.step(state, dt)
    }

    fn observe(&self, state: &HuState) -> Observables {
        let (f, g) = hu::to_fg(state);
        Observables {
            f,
            g,
            h: state.h.clone(),
            u: state.u.clone(),
            mu: None,
            tracked_price: None,
        }
    }
}

pub struct BpfModel {
    stepper: BpfStepper,
}

impl BpfModel {
    pub fn new(initial: &BpfState, params: BpfParams) -> Result<Self> {
        Ok(Self {
            stepper: BpfStepper::new(*initial.grid(), params)?,
        })
    }
}

impl Evolution for BpfModel {
    type State = BpfState;

    fn max_dt(&self, state: &BpfState, safety: f64) -> f64 {
        self.stepper.params().stable_dt(state, safety)
    }

    fn set_time(state: &mut BpfState, t: f64) {
        state.t = t;
    }

    fn advance(&mut self, state: &mut BpfState, dt: f64) -> Result<()> {
        self.stepper.step(state, dt)
    }

    fn observe(&self, state: &BpfState) -> Observables {
        let hu = hu::from_fg(&state.f, &state.g, state.t).expect("shared grid");
        Observables {
            f: state.f.clone(),
            g: state.g.clone(),
            h: hu.h,
            u: hu.u,
            mu: Some(bpf::transaction_density(state, self.stepper.params())),
            tracked_price: None,
        }
    }

    fn check(&self, state: &BpfState) -> Result<()> {
        bpf::check_support_guard(state, self.stepper.params())
    }
}

pub struct SharpModel {
    stepper: SharpStepper,
}

impl SharpModel {
    pub fn new(initial: &SharpState, diffusion: f64) -> Result<Self> {
        Ok(Self {
            stepper: SharpStepper::new(*initial.h.grid(), diffusion)?,
        })
    }
}

impl Evolution for SharpModel {
    type State = SharpState;

    fn max_dt(&self, state: &SharpState, safety: f64) -> f64 {
        sharp::heat_stable_dt(state.h.grid(), self.stepper.diffusion(), safety)
    }

    fn set_time(state: &mut SharpState, t: f64) {
        state.t = t;
    }

    fn advance(&mut self, state: &mut SharpState, dt: f64) -> Result<()> {
        self.stepper.step(state, dt)
    }

    fn observe(&self, state: &SharpState) -> Observables {
        let u = sharp::reconstruct_u(state);
        let f = state.h.zip_with(&u, |h, u| 0.5 * (h + u)).expect("shared grid");
        let g = state.h.zip_with(&u, |h, u| 0.5 * (h - u)).expect("shared grid");
        Observables {
            f,
            g,
            h: state.h.clone(),
            u,
            mu: None,
            tracked_price: Some(state.p),
        }
    }
}

/// `(h, u)` run description.
#[derive(Debug, Clone, PartialEq)]
pub struct HuProblem {
    pub params: HuParams,
    pub initial: HuState,
    pub schedule: Schedule,
}

impl HuProblem {
    pub fn run(&self, keep_trajectory: bool) -> Result<RunOutput<HuState>> {
        let mut model = HuModel::new(&self.initial, self.params);
        drive(&mut model, self.initial.clone(), &self.schedule, keep_trajectory)
    }

    /// Initial buyer mass.
    pub fn mass_f(&self) -> f64 {
        self.initial.mass_f()
    }
}

/// Kinetic run description.
#[derive(Debug, Clone, PartialEq)]
pub struct BpfProblem {
    pub params: BpfParams,
    pub initial: BpfState,
    pub schedule: Schedule,
}

impl BpfProblem {
    pub fn run(&self, keep_trajectory: bool) -> Result<RunOutput<BpfState>> {
        let mut model = BpfModel::new(&self.initial, self.params)?;
        drive(&mut model, self.initial.clone(), &self.schedule, keep_trajectory)
    }
}

/// Sharp-interface run description.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpProblem {
    pub diffusion: f64,
    pub initial: SharpState,
    pub schedule: Schedule,
}

impl SharpProblem {
    pub fn run(&self, keep_trajectory: bool) -> Result<RunOutput<SharpState>> {
        let mut model = SharpModel::new(&self.initial, self.diffusion)?;
        drive(&mut model, self.initial.clone(), &self.schedule, keep_trajectory)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    #[test]
    fn events_merge_outputs_and_snapshots() {
        let s = Schedule::new(1.0, 0.25).with_snapshots(alloc::vec![0.0, 0.3, 1.0]);
        let ev = s.events();
        let times: Vec<f64> = ev.iter().map(|e| e.0).collect();
        assert_eq!(times, alloc::vec![0.0, 0.25, 0.3, 0.5, 0.75, 1.0]);
        assert_eq!(ev[0], (0.0, true, true));
        assert_eq!(ev[2], (0.3, false, true));
        assert_eq!(ev[5], (1.0, true, true));
        let zero = Schedule::new(0.0, 0.1).with_snapshots(alloc::vec![0.0]);
        assert_eq!(zero.events(), alloc::vec![(0.0, true, true)]);
        let tenths = Schedule::new(1.0, 0.1).with_snapshots(alloc::vec![0.3]);
        assert!(tenths.events().contains(&(0.3, true, true)));
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(1.0, 0.0).validate().is_err());
        assert!(Schedule::new(1.0, 0.1)
            .with_snapshots(alloc::vec![2.0])
            .validate()
            .is_err());
        assert!(Schedule::new(-1.0, 0.1).validate().is_err());
    }

    #[test]
    fn hu_run_records_every_output() {
        let g = Grid1D::new(-1.0, 1.0, 40).unwrap();
        let initial = HuState::new(
            Field::constant(g, 1.0),
            Field::from_fn(g, |x| -0.5 * libm::tanh(4.0 * x)),
            0.0,
        )
        .unwrap();
        let problem = HuProblem {
            params: HuParams::new(0.1, 1.0).unwrap().frozen(true),
            initial,
            schedule: Schedule::new(0.1, 0.02).with_snapshots(alloc::vec![0.0, 0.1]),
        };
        let out = problem.run(true).unwrap();
        assert_eq!(out.records.len(), 6);
        assert_eq!(out.trajectory.len(), 6);
        assert_eq!(out.snapshots.len(), 2);
        assert!((out.final_state.t - 0.1).abs() < 1e-12);
        assert!(out.records.iter().all(|r| r.price_argmax_mu.is_none()));
        assert!(out.gap_integral() > 0.0);
    }
}
