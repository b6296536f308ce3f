//! Uniform node-centred grid, sampled fields and the discrete calculus shared by
//! every solver: trapezoid quadrature, first and second differences, linear
//! interpolation and zero-extended shift operators.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Relative tolerance when deciding whether a length is a whole number of cells.
const MULTIPLE_TOL: f64 = 1e-9;

/// Uniform grid on `[x_min, x_max]` with `n_cells + 1` nodes, both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid("bounds must be finite"));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid("x_min must be below x_max"));
        }
        if n_cells < 4 {
            return Err(Error::InvalidGrid("need at least 4 cells"));
        }
        Ok(Self { x_min, x_max, n_cells })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn len(&self) -> usize {
        self.n_cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    /// Coordinate of node `i`.
    pub fn x(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.x(i))
    }

    /// Trapezoid quadrature weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n_cells {
            0.5 * self.dx()
        } else {
            self.dx()
        }
    }

    /// Converts a physical distance into a whole number of cells, rejecting
    /// anything that is not an integer multiple of `dx`.
    pub fn cells_for(&self, distance: f64) -> Result<usize> {
        let dx = self.dx();
        let ratio = distance / dx;
        let rounded = libm::round(ratio);
        if !ratio.is_finite() || rounded < 1.0 || libm::fabs(ratio - rounded) > MULTIPLE_TOL * rounded.max(1.0) {
            return Err(Error::CostNotGridMultiple { a: distance, dx });
        }
        Ok(rounded as usize)
    }

    /// Index `j` of the cell `[x_j, x_{j+1}]` containing `x` (clamped to the grid).
    pub fn cell_of(&self, x: f64) -> usize {
        let s = (x - self.x_min) / self.dx();
        if !(s > 0.0) {
            return 0;
        }
        let j = libm::floor(s) as usize;
        j.min(self.n_cells - 1)
    }

    /// Whether two grids describe the same nodes.
    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n_cells == other.n_cells && approx_eq(self.x_min, other.x_min) && approx_eq(self.x_max, other.x_max)
    }
}

fn approx_eq(a: f64, b: f64) -> bool {
    libm::fabs(a - b) <= 1e-12 * (1.0 + libm::fabs(a).max(libm::fabs(b)))
}

/// Discrete norm used for distances between fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Norm {
    #[default]
    L1,
    L2,
    Linf,
}

/// Real function sampled at the nodes of a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Instability {
                t: f64::NAN,
                detail: "non-finite field value",
            });
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values already known to be consistent.
    pub(crate) fn from_raw(grid: Grid1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Grid1D, value: f64) -> Self {
        Self::from_raw(grid, alloc::vec![value; grid.len()])
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|v| f(*v)).collect())
    }

    /// Nodewise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect();
        Ok(Field::from_raw(self.grid, values))
    }

    /// Distance to `other` in the requested discrete norm (trapezoid weights
    /// for L1 and L2).
    pub fn distance(&self, other: &Field, norm: Norm) -> Result<f64> {
        let diff = self.zip_with(other, |a, b| a - b)?;
        Ok(diff.norm(norm))
    }

    pub fn norm(&self, norm: Norm) -> f64 {
        match norm {
            Norm::L1 => trapezoid_weighted(&self.values, self.grid.dx(), libm::fabs),
            Norm::L2 => libm::sqrt(trapezoid_weighted(&self.values, self.grid.dx(), |v| v * v)),
            Norm::Linf => self.max_abs(),
        }
    }

    /// Linear interpolation at `x`, clamped to the grid ends.
    pub fn interpolate(&self, x: f64) -> f64 {
        interpolate_slice(&self.grid, &self.values, x)
    }
}

/// Composite trapezoid rule over the whole grid.
pub fn integrate(field: &Field) -> f64 {
    trapezoid(&field.values, field.grid.dx())
}

pub(crate) fn trapezoid(values: &[f64], dx: f64) -> f64 {
    trapezoid_weighted(values, dx, |v| v)
}

fn trapezoid_weighted(values: &[f64], dx: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().map(|v| f(*v)).sum();
    dx * (inner + 0.5 * (f(values[0]) + f(values[n - 1])))
}

/// Running trapezoid integral from `x_min` to each node.
pub fn cumulative(field: &Field) -> Vec<f64> {
    cumulative_slice(&field.values, field.grid.dx())
}

pub(crate) fn cumulative_slice(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

pub(crate) fn interpolate_slice(grid: &Grid1D, values: &[f64], x: f64) -> f64 {
    if x <= grid.x_min() {
        return values[0];
    }
    if x >= grid.x_max() {
        return values[grid.n_cells()];
    }
    let j = grid.cell_of(x);
    let theta = (x - grid.x(j)) / grid.dx();
    values[j] + theta * (values[j + 1] - values[j])
}

/// Centred first difference; second-order one-sided differences at both ends.
pub fn central_diff(field: &Field) -> Field {
    let v = &field.values;
    let n = v.len();
    let inv2dx = 0.5 / field.grid.dx();
    let mut out = Vec::with_capacity(n);
    out.push((-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv2dx);
    for i in 1..n - 1 {
        out.push((v[i + 1] - v[i - 1]) * inv2dx);
    }
    out.push((3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * inv2dx);
    Field::from_raw(field.grid, out)
}

/// Central difference at a single node, matching [`central_diff`].
pub(crate) fn central_diff_at(values: &[f64], dx: f64, i: usize) -> f64 {
    let n = values.len();
    let inv2dx = 0.5 / dx;
    if i == 0 {
        (-3.0 * values[0] + 4.0 * values[1] - values[2]) * inv2dx
    } else if i == n - 1 {
        (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) * inv2dx
    } else {
        (values[i + 1] - values[i - 1]) * inv2dx
    }
}

/// Second difference `(v_{i+1} - 2 v_i + v_{i-1}) / dx^2`. The boundary rows
/// use ghost values `(v_{-1}, v_{N+1})` returned by `ghosts`, which receives
/// the field values; the boundary condition therefore lives with the caller.
pub fn second_diff(field: &Field, ghosts: impl FnOnce(&[f64]) -> (f64, f64)) -> Field {
    let v = &field.values;
    let (left, right) = ghosts(v);
    let mut out = alloc::vec![0.0; v.len()];
    second_diff_into(v, field.grid.dx(), left, right, &mut out);
    Field::from_raw(field.grid, out)
}

/// Mirror ghosts `v_{-1} = v_1`, `v_{N+1} = v_{N-1}`: zero normal derivative.
pub fn mirror_ghosts(v: &[f64]) -> (f64, f64) {
    (v[1], v[v.len() - 2])
}

/// [`second_diff`] with mirror (homogeneous Neumann) ghosts.
pub fn second_diff_mirror(field: &Field) -> Field {
    second_diff(field, mirror_ghosts)
}

pub(crate) fn second_diff_into(v: &[f64], dx: f64, left: f64, right: f64, out: &mut [f64]) {
    let n = v.len();
    let inv = 1.0 / (dx * dx);
    out[0] = (v[1] - 2.0 * v[0] + left) * inv;
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv;
    }
    out[n - 1] = (right - 2.0 * v[n - 1] + v[n - 2]) * inv;
}

/// Shift by `offset_nodes`: `(S^m v)_i = v_{i+m}`, zero where `i + m` falls
/// outside the grid. Positive offsets sample from the right.
pub fn shift(field: &Field, offset_nodes: isize) -> Result<Field> {
    let n_cells = field.grid.n_cells();
    if offset_nodes.unsigned_abs() > n_cells {
        return Err(Error::ShiftOutOfRange {
            offset: offset_nodes,
            n_cells,
        });
    }
    let mut out = alloc::vec![0.0; field.len()];
    shift_into(&field.values, offset_nodes, &mut out);
    Ok(Field::from_raw(field.grid, out))
}

pub(crate) fn shift_into(v: &[f64], offset: isize, out: &mut [f64]) {
    let n = v.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    let m = offset.unsigned_abs();
    if m >= n {
        return;
    }
    if offset >= 0 {
        out[..n - m].copy_from_slice(&v[m..]);
    } else {
        out[m..].copy_from_slice(&v[..n - m]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit(n: usize) -> Grid1D {
        Grid1D::new(-1.0, 1.0, n).unwrap()
    }

    #[test]
    fn grid_rejects_bad_definitions() {
        assert!(Grid1D::new(1.0, -1.0, 10).is_err());
        assert!(Grid1D::new(-1.0, 1.0, 3).is_err());
        assert!(Grid1D::new(f64::NAN, 1.0, 10).is_err());
        let g = unit(8);
        assert_eq!(g.len(), 9);
        assert_eq!(g.x(8), 1.0);
        assert_abs_diff_eq!(g.x(4), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn cells_for_requires_whole_multiples() {
        let g = unit(400);
        assert_eq!(g.cells_for(0.01).unwrap(), 2);
        assert!(matches!(g.cells_for(0.007), Err(Error::CostNotGridMultiple { .. })));
        assert!(g.cells_for(0.0).is_err());
    }

    #[test]
    fn integrate_constant_linear_and_quadratic() {
        let g = unit(8);
        assert_abs_diff_eq!(integrate(&Field::constant(g, 1.0)), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(integrate(&Field::from_fn(g, |x| x)), 0.0, epsilon = 1e-14);
        // Trapezoid overestimates x^2 by (b - a) h^2 f'' / 12.
        let q = integrate(&Field::from_fn(g, |x| x * x));
        assert_abs_diff_eq!(q - 2.0 / 3.0, 2.0 * 0.25 * 0.25 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn central_diff_exactness() {
        let g = unit(8);
        let zero = central_diff(&Field::constant(g, 3.0));
        assert!(zero.values().iter().all(|v| *v == 0.0));
        let one = central_diff(&Field::from_fn(g, |x| x));
        for v in one.values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-13);
        }
        let q = Field::from_fn(g, |x| x * x);
        let dq = central_diff(&q);
        for i in 0..g.len() {
            assert_abs_diff_eq!(dq.values()[i], 2.0 * g.x(i), epsilon = 1e-13);
        }
    }

    #[test]
    fn second_diff_cases() {
        let g = unit(8);
        let dx = g.dx();
        let lin = second_diff_mirror(&Field::from_fn(g, |x| x));
        for v in &lin.values()[1..8] {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
        // Even extension of x at x = -1 has a kink: (v1 - 2 v0 + v1) / dx^2 = 2/dx.
        assert_abs_diff_eq!(lin.values()[0], 2.0 / dx, epsilon = 1e-11);
        assert_abs_diff_eq!(lin.values()[8], -2.0 / dx, epsilon = 1e-11);
        let quad = second_diff_mirror(&Field::from_fn(g, |x| x * x));
        for v in &quad.values()[1..8] {
            assert_abs_diff_eq!(*v, 2.0, epsilon = 1e-12);
        }
        let flat = second_diff_mirror(&Field::constant(g, 5.0));
        assert!(flat.values().iter().all(|v| *v == 0.0));
        let custom = second_diff(&Field::constant(g, 1.0), |_| (2.0, 0.0));
        assert_abs_diff_eq!(custom.values()[0], 1.0 / (dx * dx), epsilon = 1e-9);
        assert_abs_diff_eq!(custom.values()[8], -1.0 / (dx * dx), epsilon = 1e-9);
    }

    #[test]
    fn shift_identity_indicator_and_full_range() {
        let g = unit(8);
        let v = Field::from_fn(g, |x| 1.0 + x * x);
        assert_eq!(shift(&v, 0).unwrap(), v);

        let mut ind = alloc::vec![0.0; 9];
        ind[5] = 1.0;
        let ind = Field::new(g, ind).unwrap();
        let s = shift(&ind, 2).unwrap();
        assert_eq!(s.values()[3], 1.0);
        assert_eq!(s.values().iter().sum::<f64>(), 1.0);
        assert!(shift(&ind, 6).unwrap().values().iter().all(|v| *v == 0.0));
        let t = shift(&ind, -3).unwrap();
        assert_eq!(t.values()[8], 1.0);

        // 5-node grid, values 1..=5: shifting by +4 leaves only node 0 = 5.
        let small = Grid1D::new(0.0, 1.0, 4).unwrap();
        let v = Field::new(small, alloc::vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(shift(&v, 4).unwrap().values(), &[5.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(shift(&v, 5).is_err());
    }

    #[test]
    fn interpolation_and_cumulative() {
        let g = unit(8);
        let v = Field::from_fn(g, |x| 2.0 * x + 1.0);
        assert_abs_diff_eq!(v.interpolate(0.33), 1.66, epsilon = 1e-13);
        assert_eq!(v.interpolate(-5.0), -1.0);
        let c = cumulative(&Field::constant(g, 1.0));
        assert_abs_diff_eq!(c[8], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c[4], 1.0, epsilon = 1e-14);
    }
}
