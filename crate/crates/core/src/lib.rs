//! Exact canonical frames, R-matrix ladders and elliptic 1-forms for semisimple
//! Frobenius manifolds, with toric hypergeometric series and stationary-phase tools.
//!
//! Everything symbolic runs over [`RatFunc`], rational functions in equivariant parameters
//! with arbitrary-precision rational coefficients. Series types are generic over the
//! coefficient ring ([`Coeff`]), so the same algorithms also run over [`Rational`] or `f64`.

pub mod dmflow;
pub mod elliptic;
pub mod exact;
pub mod frame;
pub mod frobenius;
pub mod parse;
pub mod scalar;
pub mod series;
pub mod singularity;
pub mod toric;

pub use exact::{ExactError, MultiPoly, RatFunc, Rational, Registry};
pub use scalar::Coeff;
pub use series::{ExtFunction, HJet, NovikovSeries, OneForm, SeriesError, EXACT};

/// Series with rational-function coefficients.
pub type Series = NovikovSeries<RatFunc>;
/// Series with rational coefficients.
pub type QSeries = NovikovSeries<Rational>;
/// Series with floating coefficients.
pub type FSeries = NovikovSeries<f64>;
