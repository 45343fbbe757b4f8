//! Critical point probabilities for one grid point and its axis neighbors.
//!
//! A grid point is a local minimum when its value is below every neighbor, a
//! local maximum when above every neighbor, and a saddle when the comparison
//! signs alternate around it: below east and west while above north and south,
//! or the reverse. Each neighborhood value is an independent random variable,
//! so each probability is an integral of the center density against a product
//! of neighbor CDFs and survival functions.

mod classify;
mod closed;
mod histogram;
mod monte_carlo;

use std::borrow::Borrow;

pub use classify::{
    classify_field, classify_field_with_workers, classify_gaussian_mc, classify_pattern, neighbor_indices, pixel_seed,
};
pub use closed::{local_max_prob, local_min_prob, saddle_prob, saddle_terms};
pub use histogram::{
    histogram_min_prob_combinatorial, histogram_triple_combinatorial, semianalytical_prob,
    semianalytical_triple, uniform_kernel_integral, KernelRelation, MAX_COMBINATORIAL_BINS,
};
pub use monte_carlo::{mc_pattern_prob, mc_triple};

pub(crate) use closed::{closed_min, closed_saddle_term};
pub(crate) use histogram::{combinatorial_triple_refs, semianalytical_triple_refs};
pub(crate) use monte_carlo::mc_counts;

use crate::distrib::{FiniteDistribution, Kind};
use crate::error::{Error, Result};

/// Comparison pattern of the center against its neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pattern {
    Min,
    Max,
    Saddle,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::Min, Pattern::Max, Pattern::Saddle];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Min => "min",
            Pattern::Max => "max",
            Pattern::Saddle => "saddle",
        }
    }
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Pattern::Min),
            "max" => Ok(Pattern::Max),
            "saddle" => Ok(Pattern::Saddle),
            other => Err(Error::InvalidParameter(format!("unknown pattern {other:?}"))),
        }
    }
}

/// Center distribution plus two neighbors, or four in east, north, west,
/// south order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodCase<D = FiniteDistribution> {
    center: D,
    neighbors: Vec<D>,
}

impl<D: Borrow<FiniteDistribution>> NeighborhoodCase<D> {
    pub fn new(center: D, neighbors: Vec<D>) -> Result<Self> {
        if neighbors.len() != 2 && neighbors.len() != 4 {
            return Err(Error::NeighborCount(neighbors.len()));
        }
        Ok(Self { center, neighbors })
    }

    pub fn center(&self) -> &FiniteDistribution {
        self.center.borrow()
    }

    pub fn neighbors(&self) -> impl ExactSizeIterator<Item = &FiniteDistribution> {
        self.neighbors.iter().map(Borrow::borrow)
    }

    pub fn neighbor_refs(&self) -> Vec<&FiniteDistribution> {
        self.neighbors().collect()
    }

    pub fn neighbor_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Every variable replaced by its negation.
    pub fn negated(&self) -> NeighborhoodCase {
        NeighborhoodCase {
            center: self.center().negate(),
            neighbors: self.neighbors().map(FiniteDistribution::negate).collect(),
        }
    }

    /// Every variable mapped through `x ↦ alpha·x + beta`.
    pub fn affine(&self, alpha: f64, beta: f64) -> Result<NeighborhoodCase> {
        Ok(NeighborhoodCase {
            center: self.center().affine(alpha, beta)?,
            neighbors: self.neighbors().map(|d| d.affine(alpha, beta)).collect::<Result<_>>()?,
        })
    }

    pub fn all_histograms(&self) -> bool {
        self.center().kind() == Kind::Histogram && self.neighbors().all(|d| d.kind() == Kind::Histogram)
    }

    pub fn any_degenerate(&self) -> bool {
        self.center().is_degenerate() || self.neighbors().any(FiniteDistribution::is_degenerate)
    }
}

impl NeighborhoodCase {
    /// Borrowing view of an owned case.
    pub fn as_ref(&self) -> NeighborhoodCase<&FiniteDistribution> {
        NeighborhoodCase { center: &self.center, neighbors: self.neighbors.iter().collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProbabilityTriple {
    pub p_min: f64,
    pub p_max: f64,
    pub p_saddle: f64,
}

impl ProbabilityTriple {
    pub fn get(&self, pattern: Pattern) -> f64 {
        match pattern {
            Pattern::Min => self.p_min,
            Pattern::Max => self.p_max,
            Pattern::Saddle => self.p_saddle,
        }
    }

    pub fn sum(&self) -> f64 {
        self.p_min + self.p_max + self.p_saddle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    MonteCarlo { samples: usize },
    Semianalytical { samples: usize },
    Combinatorial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorSpec {
    pub method: Method,
    pub seed: u64,
}

impl EstimatorSpec {
    pub fn closed_form() -> Self {
        Self { method: Method::ClosedForm, seed: 0 }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self { method: Method::MonteCarlo { samples }, seed }
    }

    pub fn semianalytical(samples: usize, seed: u64) -> Self {
        Self { method: Method::Semianalytical { samples }, seed }
    }

    pub fn combinatorial() -> Self {
        Self { method: Method::Combinatorial, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::MonteCarlo { samples: 0 } | Method::Semianalytical { samples: 0 } => {
                Err(Error::InvalidParameter("sample count must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self.method {
            Method::ClosedForm => "closed".to_string(),
            Method::MonteCarlo { samples } => format!("mc({samples})"),
            Method::Semianalytical { samples } => format!("semi({samples})"),
            Method::Combinatorial => "comb".to_string(),
        }
    }
}

/// All three probabilities of one case under the chosen estimator.
pub fn estimate<D: Borrow<FiniteDistribution>>(
    case: &NeighborhoodCase<D>,
    spec: &EstimatorSpec,
) -> Result<ProbabilityTriple> {
    spec.validate()?;
    match spec.method {
        Method::ClosedForm => Ok(ProbabilityTriple {
            p_min: local_min_prob(case)?,
            p_max: local_max_prob(case)?,
            p_saddle: saddle_prob(case)?,
        }),
        Method::MonteCarlo { samples } => mc_triple(case, samples, spec.seed),
        Method::Semianalytical { samples } => semianalytical_triple(case, samples, spec.seed),
        Method::Combinatorial => histogram_triple_combinatorial(case),
    }
}
