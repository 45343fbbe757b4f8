use std::borrow::Borrow;

use rand::Rng;

use super::{NeighborhoodCase, Pattern, ProbabilityTriple};
use crate::distrib::{FiniteDistribution, Marginal};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Counts of `(min, max, saddle)` patterns over `n` joint draws.
///
/// Each draw samples the center, then the neighbors in order, so the stream
/// consumed per draw does not depend on which pattern is of interest.
pub(crate) fn mc_counts<M: Marginal, R: Rng + ?Sized>(
    center: &M,
    neighbors: &[M],
    n: usize,
    rng: &mut R,
) -> Result<[u64; 3]> {
    let mut counts = [0u64; 3];
    match neighbors {
        [e, w] => {
            for _ in 0..n {
                let x = center.draw(rng);
                let (a, b) = (e.draw(rng), w.draw(rng));
                counts[0] += (x < a && x < b) as u64;
                counts[1] += (x > a && x > b) as u64;
                counts[2] += ((x < a && x > b) || (x > a && x < b)) as u64;
            }
        }
        [e, no, w, s] => {
            for _ in 0..n {
                let x = center.draw(rng);
                let (xe, xn, xw, xs) = (e.draw(rng), no.draw(rng), w.draw(rng), s.draw(rng));
                counts[0] += (x < xe && x < xn && x < xw && x < xs) as u64;
                counts[1] += (x > xe && x > xn && x > xw && x > xs) as u64;
                let t1 = x < xe && x > xn && x < xw && x > xs;
                let t2 = x > xe && x < xn && x > xw && x < xs;
                counts[2] += (t1 || t2) as u64;
            }
        }
        other => return Err(Error::NeighborCount(other.len())),
    }
    Ok(counts)
}

pub(crate) fn triple_from_counts(counts: [u64; 3], n: usize) -> ProbabilityTriple {
    let n = n as f64;
    ProbabilityTriple {
        p_min: counts[0] as f64 / n,
        p_max: counts[1] as f64 / n,
        p_saddle: counts[2] as f64 / n,
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    Ok(())
}

/// Fraction of `n` seeded joint draws that show `pattern`.
pub fn mc_pattern_prob<D: Borrow<FiniteDistribution>>(
    case: &NeighborhoodCase<D>,
    pattern: Pattern,
    n: usize,
    seed: u64,
) -> Result<f64> {
    Ok(mc_triple(case, n, seed)?.get(pattern))
}

pub fn mc_triple<D: Borrow<FiniteDistribution>>(
    case: &NeighborhoodCase<D>,
    n: usize,
    seed: u64,
) -> Result<ProbabilityTriple> {
    check_samples(n)?;
    let mut rng = rng_from_seed(seed);
    let counts = mc_counts(&case.center(), &case.neighbor_refs(), n, &mut rng)?;
    Ok(triple_from_counts(counts, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distrib::GaussianSampler;

    fn u(lo: f64, hi: f64) -> FiniteDistribution {
        FiniteDistribution::uniform(lo, hi).unwrap()
    }

    #[test]
    fn deterministic_under_seed() {
        let c = NeighborhoodCase::new(u(0.0, 1.0), vec![u(0.2, 1.3), u(-0.4, 0.9), u(0.0, 1.0), u(0.5, 2.0)]).unwrap();
        let a = mc_triple(&c, 10_000, 5).unwrap();
        let b = mc_triple(&c, 10_000, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, mc_triple(&c, 10_000, 6).unwrap());
        assert!(mc_triple(&c, 0, 5).is_err());
    }

    #[test]
    fn disjoint_min_is_certain() {
        let c = NeighborhoodCase::new(u(0.0, 1.0), vec![u(2.0, 3.0); 4]).unwrap();
        for n in [1, 7, 1000] {
            assert_eq!(mc_pattern_prob(&c, Pattern::Min, n, 1).unwrap(), 1.0);
        }
    }

    #[test]
    fn iid_uniform_within_binomial_bound() {
        let c = NeighborhoodCase::new(u(0.0, 1.0), vec![u(0.0, 1.0); 4]).unwrap();
        let p = mc_pattern_prob(&c, Pattern::Min, 1_000_000, 3).unwrap();
        assert!((p - 0.2).abs() < 0.0013, "{p}");
    }

    #[test]
    fn gaussian_marginals() {
        let g = GaussianSampler::new(0.0, 1.0).unwrap();
        let mut rng = rng_from_seed(4);
        let counts = mc_counts(&g, &[g, g, g, g], 200_000, &mut rng).unwrap();
        let t = triple_from_counts(counts, 200_000);
        assert!((t.p_min - 0.2).abs() < 0.005);
        assert!((t.p_saddle - 1.0 / 15.0).abs() < 0.005);
    }
}
