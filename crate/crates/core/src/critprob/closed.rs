use std::borrow::Borrow;

use super::NeighborhoodCase;
use crate::distrib::FiniteDistribution;
use crate::error::{Error, Result};
use crate::piecewise::{integrate_product, PiecewisePolynomial};

fn check_count(n: usize) -> Result<()> {
    if n == 2 || n == 4 {
        Ok(())
    } else {
        Err(Error::NeighborCount(n))
    }
}

/// `Pr(X₁ < Xᵢ ∀i)` as `∫_{a₁}^{b_min} pdf₁ · ∏ survivalᵢ`.
///
/// The integrand's pieces start at every neighbor lower bound inside the
/// range: below `aᵢ` the survival factor is the constant 1, above it the
/// factor is the neighbor's survival polynomial.
pub(crate) fn closed_min(center: &FiniteDistribution, neighbors: &[&FiniteDistribution]) -> Result<f64> {
    check_count(neighbors.len())?;
    let lo = center.support().lo;
    let hi = neighbors.iter().map(|d| d.support().hi).fold(center.support().hi, f64::min);
    if hi <= lo {
        return Ok(0.0);
    }
    let mut factors: Vec<&PiecewisePolynomial> = Vec::with_capacity(neighbors.len() + 1);
    factors.push(center.pdf());
    factors.extend(neighbors.iter().map(|d| d.survival_poly()));
    Ok(integrate_product(&factors, lo, hi)?.clamp(0.0, 1.0))
}

/// First saddle term: the center is below the east/west neighbors and above
/// the north/south ones (below the first, above the second for two
/// neighbors).
pub(crate) fn closed_saddle_term(center: &FiniteDistribution, neighbors: &[&FiniteDistribution]) -> Result<f64> {
    check_count(neighbors.len())?;
    let mut lo = center.support().lo;
    let mut hi = center.support().hi;
    let mut factors: Vec<&PiecewisePolynomial> = Vec::with_capacity(neighbors.len() + 1);
    factors.push(center.pdf());
    for (i, d) in neighbors.iter().enumerate() {
        if i % 2 == 0 {
            hi = hi.min(d.support().hi);
            factors.push(d.survival_poly());
        } else {
            lo = lo.max(d.support().lo);
            factors.push(d.cdf_poly());
        }
    }
    if hi <= lo {
        return Ok(0.0);
    }
    Ok(integrate_product(&factors, lo, hi)?.clamp(0.0, 1.0))
}

/// Probability that the center is a strict local minimum.
pub fn local_min_prob<D: Borrow<FiniteDistribution>>(case: &NeighborhoodCase<D>) -> Result<f64> {
    closed_min(case.center(), &case.neighbor_refs())
}

/// Probability that the center is a strict local maximum, computed as the
/// minimum probability of the negated variables.
pub fn local_max_prob<D: Borrow<FiniteDistribution>>(case: &NeighborhoodCase<D>) -> Result<f64> {
    check_count(case.neighbor_count())?;
    local_min_prob(&case.negated())
}

/// The two saddle terms `(t₁, t₂)`; `t₂` is `t₁` of the negated case.
pub fn saddle_terms<D: Borrow<FiniteDistribution>>(case: &NeighborhoodCase<D>) -> Result<(f64, f64)> {
    let t1 = closed_saddle_term(case.center(), &case.neighbor_refs())?;
    let neg = case.negated();
    let t2 = closed_saddle_term(neg.center(), &neg.neighbor_refs())?;
    Ok((t1, t2))
}

pub fn saddle_prob<D: Borrow<FiniteDistribution>>(case: &NeighborhoodCase<D>) -> Result<f64> {
    let (t1, t2) = saddle_terms(case)?;
    Ok(t1 + t2)
}
