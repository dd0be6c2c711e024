use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An index (view, detector, ray, cell) outside its valid range.
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    /// Invalid or inconsistent configuration.
    Config(String),
    /// Two objects that must agree in shape do not.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A numerical precondition was violated (e.g. a nonpositive input).
    Domain(String),
    /// The pair pool ran out before the usable-iteration budget was reached.
    PoolExhausted {
        usable: usize,
        budget: usize,
        consumed: usize,
    },
    /// Pair generation gave up after too many rejected draws.
    PairSearchExhausted { accepted: usize, attempts: u64 },
    /// Global scaling is impossible because the forward projection is zero.
    ScalingImpossible,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OutOfRange { what, index, len } => {
                write!(f, "{what} index {index} out of range (0..{len})")
            }
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected {expected} values, found {found}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::PoolExhausted {
                usable,
                budget,
                consumed,
            } => write!(
                f,
                "pair pool exhausted after {consumed} pairs: {usable} of {budget} usable iterations done"
            ),
            Error::PairSearchExhausted { accepted, attempts } => write!(
                f,
                "gave up generating disjoint pairs after {attempts} draws ({accepted} accepted)"
            ),
            Error::ScalingImpossible => {
                f.write_str("forward projection is zero but the sinogram is not; cannot scale")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub(crate) fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, index, len })
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
