use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Argument outside the domain of an operation.
    Domain(&'static str),
    /// A curve with vanishing speed `|z'(s)|`.
    DegenerateCurve { crack: usize, s: f64, speed: f64 },
    /// Two cracks closer than the admissible separation.
    Separation { first: usize, second: usize, distance: f64, required: f64 },
    /// LU factorization met a pivot below tolerance.
    Singular { pivot: f64 },
    /// Input arrays do not fit together.
    Shape(&'static str),
    /// Every damped Newton step produced an inadmissible geometry.
    StepRejected { retries: usize, reason: &'static str },
    /// A finite-difference column failed to solve.
    Perturbed { basis_index: usize, source: Singular },
}

/// Pivot magnitude of a failed factorization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Singular {
    pub pivot: f64,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::DegenerateCurve { crack, s, speed } => {
                write!(f, "crack {crack} is degenerate at s = {s} (|z'| = {speed:e})")
            }
            Error::Separation { first, second, distance, required } => write!(
                f,
                "cracks {first} and {second} are {distance:.3e} apart, need at least {required:.3e}"
            ),
            Error::Singular { pivot } => write!(f, "singular matrix (pivot magnitude {pivot:e})"),
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::StepRejected { retries, reason } => {
                write!(f, "Newton step rejected after {retries} halvings: {reason}")
            }
            Error::Perturbed { basis_index, source } => write!(
                f,
                "forward solve failed for perturbed basis element {basis_index} (pivot {:e})",
                source.pivot
            ),
        }
    }
}

impl core::error::Error for Error {}
