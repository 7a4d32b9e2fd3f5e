use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or configuration value violates its documented range.
    InvalidParameter(&'static str),
    /// Explicit coupling profile whose length does not match the array size.
    ProfileLength { expected: usize, found: usize },
    /// A denominator or linear system became singular.
    Singular(&'static str),
    /// Left-going block of a two-sided scattering matrix cannot be inverted.
    NearSingular { condition: f64 },
    /// Spectrum has no strictly positive maximum.
    NoPositiveMaximum,
    /// Spectrum does not drop below half its maximum inside the grid.
    NoHalfMaxCrossing,
    /// Adjacent phase samples are too far apart to unwrap unambiguously.
    Aliasing { index: usize },
    /// Phase is undefined where the amplitude vanishes.
    UndefinedPhase { index: usize },
    /// Site index outside `1..=n`.
    IndexOutOfRange { index: usize, len: usize },
    /// Fitting routine received unusable data.
    DegenerateFit(&'static str),
    /// Adaptive integration did not meet its tolerance.
    NotConverged(&'static str),
}

impl Error {
    /// Whether this error reflects bad input (as opposed to a numerical failure).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::ProfileLength { .. }
                | Error::IndexOutOfRange { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::ProfileLength { expected, found } => write!(
                f,
                "explicit coupling profile has {found} entries, array has {expected} sites"
            ),
            Error::Singular(what) => write!(f, "numerical singularity: {what}"),
            Error::NearSingular { condition } => write!(
                f,
                "left-going scattering block is near-singular (condition number {condition:.3e})"
            ),
            Error::NoPositiveMaximum => f.write_str("no positive maximum in spectrum"),
            Error::NoHalfMaxCrossing => f.write_str("no half-max crossing inside grid"),
            Error::Aliasing { index } => {
                write!(f, "aliasing: phase step at grid index {index} is too large to unwrap")
            }
            Error::UndefinedPhase { index } => {
                write!(f, "phase undefined: zero amplitude at grid index {index}")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "site index {index} out of range 1..={len}")
            }
            Error::DegenerateFit(what) => write!(f, "degenerate fit: {what}"),
            Error::NotConverged(what) => write!(f, "did not converge: {what}"),
        }
    }
}

impl core::error::Error for Error {}
