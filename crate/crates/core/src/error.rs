use alloc::boxed::Box;
use core::fmt;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid definition rejected (bounds out of order, too few cells, non-finite).
    InvalidGrid(&'static str),
    /// Two fields that must share a grid do not.
    GridMismatch,
    /// A parameter is outside its admissible range.
    InvalidParameter { name: &'static str, value: f64 },
    /// Transaction cost is not an integer multiple of the grid spacing.
    CostNotGridMultiple { a: f64, dx: f64 },
    /// Shift distance larger than the grid.
    ShiftOutOfRange { offset: isize, n_cells: usize },
    /// A field contains NaN/Inf or the scheme left its stability region.
    Instability { t: f64, detail: &'static str },
    /// A hard invariant of the model was violated beyond its threshold.
    InvariantViolation { t: f64, detail: &'static str, value: f64 },
    /// Trading activity came within one transaction cost of the boundary.
    SupportGuard { t: f64, band_fraction: f64 },
    /// `u` has no sign change, so there is no price interface.
    NoInterface,
    /// The transaction density vanishes identically.
    NoTrades,
    /// Buyer mass outside `(0, total mass)`.
    MassOutOfRange { m_f: f64, total: f64 },
    /// `h` vanished at the price, the price ODE is singular there.
    SingularPrice { t: f64, p: f64 },
    /// A fit or residual needs more samples than were supplied.
    NotEnoughSamples { needed: usize, got: usize },
    /// Exponential fit hit `|p - p_inf|` below the underflow floor.
    FitUnderflow { t: f64 },
    /// Sweep values not strictly monotone, or sweep inconsistent with its base.
    InvalidSweep(&'static str),
    /// A sweep member failed; `value` is the swept parameter (epsilon or a).
    SweepMember { value: f64, source: Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(why) => write!(f, "invalid grid: {why}"),
            Error::GridMismatch => write!(f, "fields live on different grids"),
            Error::InvalidParameter { name, value } => {
                write!(f, "invalid parameter {name} = {value}")
            }
            Error::CostNotGridMultiple { a, dx } => {
                write!(f, "a must be an integer multiple of dx (a = {a}, dx = {dx})")
            }
            Error::ShiftOutOfRange { offset, n_cells } => {
                write!(f, "shift by {offset} nodes exceeds grid of {n_cells} cells")
            }
            Error::Instability { t, detail } => {
                write!(f, "numerical instability at t = {t}: {detail}")
            }
            Error::InvariantViolation { t, detail, value } => {
                write!(f, "invariant violated at t = {t}: {detail} (value {value:e})")
            }
            Error::SupportGuard { t, band_fraction } => write!(
                f,
                "support guard tripped at t = {t}: fraction {band_fraction:e} of trading within one transaction cost of the boundary"
            ),
            Error::NoInterface => write!(f, "no interface: u has no downward sign change"),
            Error::NoTrades => write!(f, "transaction density is identically zero, price undefined"),
            Error::MassOutOfRange { m_f, total } => {
                write!(f, "buyer mass {m_f} outside (0, {total})")
            }
            Error::SingularPrice { t, p } => {
                write!(f, "h vanishes at the price p = {p} (t = {t}); price ODE singular")
            }
            Error::NotEnoughSamples { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
            Error::FitUnderflow { t } => write!(
                f,
                "|p - p_inf| underflows at t = {t}; fit on an earlier window"
            ),
            Error::InvalidSweep(why) => write!(f, "invalid sweep: {why}"),
            Error::SweepMember { value, source } => write!(f, "sweep member {value}: {source}"),
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    /// Numerical failures (as opposed to configuration or invariant errors).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SweepMember { source, .. } => source.is_numerical(),
            _ => matches!(self, Error::Instability { .. } | Error::SingularPrice { .. }),
        }
    }

    /// Hard invariant failures (`u^2 > h^2`, negative mass, support guard).
    pub fn is_invariant(&self) -> bool {
        match self {
            Error::SweepMember { source, .. } => source.is_invariant(),
            _ => matches!(self, Error::InvariantViolation { .. } | Error::SupportGuard { .. }),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
