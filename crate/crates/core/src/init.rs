//! Smooth initial densities sampled on a grid.

use alloc::vec::Vec;

use crate::grid::{Field, Grid1D};

/// One Gaussian bump `amplitude * exp(-((x - center) / width)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn new(center: f64, width: f64, amplitude: f64) -> Self {
        Self {
            center,
            width,
            amplitude,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        self.amplitude * libm::exp(-z * z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    GaussianBump {
        bump: Bump,
        background: f64,
    },
    BumpSum {
        bumps: Vec<Bump>,
        background: f64,
    },
    /// `offset + amplitude * tanh((x - center) / width)`.
    TanhProfile {
        center: f64,
        width: f64,
        amplitude: f64,
        offset: f64,
    },
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::GaussianBump { bump, background } => background + bump.eval(x),
            Profile::BumpSum { bumps, background } => background + bumps.iter().map(|b| b.eval(x)).sum::<f64>(),
            Profile::TanhProfile {
                center,
                width,
                amplitude,
                offset,
            } => offset + amplitude * libm::tanh((x - center) / width),
        }
    }

    pub fn sample(&self, grid: Grid1D) -> Field {
        Field::from_fn(grid, |x| self.eval(x))
    }

    /// Whether every parameter is finite and widths are positive.
    pub fn is_well_formed(&self) -> bool {
        let bump_ok =
            |b: &Bump| b.center.is_finite() && b.amplitude.is_finite() && b.width > 0.0 && b.width.is_finite();
        match self {
            Profile::Constant(c) => c.is_finite(),
            Profile::GaussianBump { bump, background } => bump_ok(bump) && background.is_finite(),
            Profile::BumpSum { bumps, background } => {
                !bumps.is_empty() && bumps.iter().all(bump_ok) && background.is_finite()
            }
            Profile::TanhProfile {
                center,
                width,
                amplitude,
                offset,
            } => center.is_finite() && amplitude.is_finite() && offset.is_finite() && *width > 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_evaluate() {
        let g = Grid1D::new(-1.0, 1.0, 10).unwrap();
        let bump = Profile::GaussianBump {
            bump: Bump::new(0.0, 0.5, 2.0),
            background: 0.1,
        };
        assert_eq!(bump.eval(0.0), 2.1);
        let sum = Profile::BumpSum {
            bumps: alloc::vec![Bump::new(-0.5, 0.2, 1.0), Bump::new(0.5, 0.2, 1.0)],
            background: 0.0,
        };
        let f = sum.sample(g);
        assert!((f.values()[2] - f.values()[8]).abs() < 1e-15);
        let t = Profile::TanhProfile {
            center: 0.0,
            width: 0.25,
            amplitude: -0.45,
            offset: 0.5,
        };
        assert_eq!(t.eval(0.0), 0.5);
        assert!(t.eval(1.0) < 0.1);
        assert!(!Profile::TanhProfile {
            center: 0.0,
            width: 0.0,
            amplitude: 1.0,
            offset: 0.0
        }
        .is_well_formed());
    }
}
