//! Probabilities of critical points in uncertain 2D scalar fields.
//!
//! Every grid value is an independent random variable with a finite-support
//! density (uniform, Epanechnikov or histogram). For each interior pixel the
//! crate computes the probability that it is a local minimum, a local maximum
//! or a saddle with respect to its four axis neighbors. The probabilities are
//! integrals of piecewise polynomials and are evaluated exactly; Monte Carlo
//! and a semianalytical sampler are provided for cross-checking.
//!
//! ```
//! use ucrit::critprob::{local_min_prob, NeighborhoodCase};
//! use ucrit::distrib::FiniteDistribution;
//!
//! let u = FiniteDistribution::uniform(0.0, 1.0)?;
//! let case = NeighborhoodCase::new(u.clone(), vec![u.clone(), u.clone(), u.clone(), u])?;
//! assert!((local_min_prob(&case)? - 0.2).abs() < 1e-12);
//! # Ok::<(), ucrit::Error>(())
//! ```

pub mod bench;
pub mod critprob;
pub mod distrib;
mod error;
pub mod field;
pub mod field_io;
pub mod piecewise;
pub mod quadrature;
pub mod rng;
pub mod synth;

pub use critprob::{
    classify_field, classify_field_with_workers, estimate, EstimatorSpec, Method, NeighborhoodCase, Pattern,
    ProbabilityTriple,
};
pub use distrib::{FiniteDistribution, Kind};
pub use error::{Error, Result};
pub use field::{ChannelField, EnsembleStack, Model, ProbabilityField, UncertainField};
pub use piecewise::PiecewisePolynomial;

// The guide in `book/` is compiled here so its code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/piecewise.md")]
    mod piecewise {}
    #[doc = include_str!("../../../book/src/probabilities.md")]
    mod probabilities {}
    #[doc = include_str!("../../../book/src/histograms.md")]
    mod histograms {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
