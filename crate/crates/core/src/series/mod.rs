//! Truncated Novikov series, hbar-jets, extended functions and 1-forms.

pub mod ext;
mod hjet;
pub mod matrix;
mod novikov;

pub use ext::{ClosednessWitness, ExtFunction, OneForm};
pub use hjet::HJet;
pub use novikov::{NovikovSeries, EXACT};

use thiserror::Error;

use crate::exact::ExactError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("divisor has no invertible lowest term")]
    NonUnitDivisor,
    #[error("leading coefficient has no root in the coefficient field")]
    RootNotInField,
    #[error("logarithm needs constant term 1")]
    LogOfNonUnit,
    #[error("exponential needs a series without constant term")]
    ConstantTerm,
    #[error("series is not integrable in the extended-function class")]
    NotIntegrable,
    #[error("1-form is not closed")]
    NotClosed,
    #[error("infinite expansion requested from an exact series; truncate first")]
    UnboundedOrder,
    #[error("iteration did not converge")]
    NoConvergence,
    #[error("matrix is singular at the working order")]
    Singular,
    #[error("series over {0} and {1} Novikov variables combined")]
    VariableMismatch(usize, usize),
    #[error(transparent)]
    Exact(#[from] ExactError),
}
