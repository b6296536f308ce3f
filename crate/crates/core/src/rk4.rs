//! Classical four-stage Runge-Kutta on flat state vectors.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;

/// Stage buffers for repeated RK4 steps on a state of fixed length.
#[derive(Debug, Clone)]
pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            stage: vec![0.0; len],
        }
    }

    /// Advances `y` by `dt`; `rhs(t_frac, y, dy)` writes the tendency of `y`,
    /// `t_frac` being the stage time as a fraction of the step.
    pub(crate) fn step<F>(&mut self, y: &mut [f64], dt: f64, mut rhs: F) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        if dt == 0.0 {
            return Ok(());
        }
        let half = 0.5 * dt;
        rhs(0.0, y, &mut self.k1)?;
        for ((s, y), k) in self.stage.iter_mut().zip(y.iter()).zip(&self.k1) {
            *s = y + half * k;
        }
        rhs(0.5, &self.stage, &mut self.k2)?;
        for ((s, y), k) in self.stage.iter_mut().zip(y.iter()).zip(&self.k2) {
            *s = y + half * k;
        }
        rhs(0.5, &self.stage, &mut self.k3)?;
        for ((s, y), k) in self.stage.iter_mut().zip(y.iter()).zip(&self.k3) {
            *s = y + dt * k;
        }
        rhs(1.0, &self.stage, &mut self.k4)?;
        let sixth = dt / 6.0;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += sixth * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let err = |n: usize| {
            let dt = 1.0 / n as f64;
            let mut rk = Rk4::new(1);
            let mut y = [1.0];
            for _ in 0..n {
                rk.step(&mut y, dt, |_, y, dy| {
                    dy[0] = -y[0];
                    Ok(())
                })
                .unwrap();
            }
            (y[0] - libm::exp(-1.0)).abs()
        };
        let ratio = err(10) / err(20);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn zero_step_is_identity() {
        let mut rk = Rk4::new(2);
        let mut y = [1.0, 2.0];
        rk.step(&mut y, 0.0, |_, _, _| panic!("rhs must not be evaluated"))
            .unwrap();
        assert_eq!(y, [1.0, 2.0]);
    }
}
