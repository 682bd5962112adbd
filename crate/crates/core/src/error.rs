use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An individual has no observed value for a phenotype, so the series
    /// cannot be mean-imputed.
    AllMissingSeries {
        family: String,
        individual: String,
        phenotype: String,
    },
    NotPositiveDefinite,
    DfTooSmall {
        df: f64,
        dim: usize,
    },
    DimensionMismatch(String),
    InvalidArgument(String),
    /// A conditional covariance could not be factorised even after jitter.
    NumericalBreakdown {
        block: &'static str,
        detail: String,
    },
    SeriesTooShort {
        len: usize,
        required: usize,
    },
    ConstantSeries,
    IndicatorAbsent(usize),
    NameMismatch(String),
    /// The dataset failed validation; the payload is a rendered report.
    Validation(String),
    /// A sampler error raised at a given sweep.
    AtIteration {
        iteration: usize,
        source: Box<Error>,
    },
    /// A path-sampling chain failed at a given grid index.
    AtGridPoint {
        index: usize,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }

    /// True for errors that stem from numerical failure rather than input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPositiveDefinite | Error::NumericalBreakdown { .. } => true,
            Error::AtIteration { source, .. } | Error::AtGridPoint { source, .. } => {
                source.is_numerical()
            }
            _ => false,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::AllMissingSeries {
                family,
                individual,
                phenotype,
            } => write!(
                f,
                "individual {individual} in family {family} has no observed value for phenotype {phenotype}"
            ),
            Error::NotPositiveDefinite => f.write_str("matrix is not positive definite"),
            Error::DfTooSmall { df, dim } => {
                write!(f, "degrees of freedom {df} too small for dimension {dim}")
            }
            Error::DimensionMismatch(what) => write!(f, "dimension mismatch: {what}"),
            Error::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
            Error::NumericalBreakdown { block, detail } => {
                write!(f, "numerical breakdown in {block} update: {detail}")
            }
            Error::SeriesTooShort { len, required } => {
                write!(f, "series of length {len} is too short (need {required})")
            }
            Error::ConstantSeries => f.write_str("series has zero variance"),
            Error::IndicatorAbsent(j) => {
                write!(f, "no inclusion indicator recorded for phenotype {}", j + 1)
            }
            Error::NameMismatch(what) => write!(f, "parameter names differ: {what}"),
            Error::Validation(report) => write!(f, "dataset failed validation: {report}"),
            Error::AtIteration { iteration, source } => {
                write!(f, "at iteration {iteration}: {source}")
            }
            Error::AtGridPoint { index, source } => write!(f, "at grid point {index}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::AtIteration { source, .. } | Error::AtGridPoint { source, .. } => Some(&**source),
            _ => None,
        }
    }
}
