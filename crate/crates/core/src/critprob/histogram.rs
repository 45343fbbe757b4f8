//! Histogram-specific estimators.
//!
//! A histogram is a weighted sum of nonoverlapping uniform kernels, one per
//! bin. The combinatorial estimator sums the uniform closed form over every
//! choice of one kernel per variable, weighted by the product of the chosen
//! bin weights; it costs `bins^(neighbors + 1)` kernel evaluations and serves
//! as a cross-check for the factorized engine. The semianalytical estimator
//! samples only the center and evaluates neighbor comparisons exactly from bin
//! prefix sums.

use std::borrow::Borrow;

use rand::Rng;

use super::{NeighborhoodCase, Pattern, ProbabilityTriple};
use crate::distrib::{FiniteDistribution, Kind};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Largest bin count the combinatorial estimator accepts.
pub const MAX_COMBINATORIAL_BINS: usize = 8;

/// How a neighbor compares to the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRelation {
    /// Neighbor greater than the center; contributes its survival function.
    Above,
    /// Neighbor smaller than the center; contributes its CDF.
    Below,
}

/// `Pr(pattern)` for a uniform center on `center` and uniform neighbors.
///
/// The outer range is clipped to where the pattern is possible, split at each
/// neighbor bound that switches its factor from the constant 1 to a linear
/// function, and each piece's product polynomial is integrated exactly.
pub fn uniform_kernel_integral(center: (f64, f64), neighbors: &[(KernelRelation, f64, f64)]) -> f64 {
    let (a1, b1) = center;
    let mut lo = a1;
    let mut hi = b1;
    for &(rel, a, b) in neighbors {
        match rel {
            KernelRelation::Above => hi = hi.min(b),
            KernelRelation::Below => lo = lo.max(a),
        }
    }
    if hi <= lo {
        return 0.0;
    }
    let mut cuts = [0.0f64; 6];
    let mut n = 0;
    cuts[n] = lo;
    n += 1;
    for &(rel, a, b) in neighbors {
        let x = match rel {
            KernelRelation::Above => a,
            KernelRelation::Below => b,
        };
        if x > lo && x < hi {
            cuts[n] = x;
            n += 1;
        }
    }
    cuts[n] = hi;
    n += 1;
    let cuts = &mut cuts[..n];
    cuts.sort_by(f64::total_cmp);

    let density = 1.0 / (b1 - a1);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (l, r) = (w[0], w[1]);
        if r <= l {
            continue;
        }
        let m = 0.5 * (l + r);
        let half = 0.5 * (r - l);
        // Product polynomial in t = x - m, at most degree 4.
        let mut poly = [0.0f64; 5];
        poly[0] = density;
        let mut deg = 0;
        for &(rel, a, b) in neighbors {
            let (c0, c1) = match rel {
                KernelRelation::Above if m < a => continue,
                KernelRelation::Above => ((b - m) / (b - a), -1.0 / (b - a)),
                KernelRelation::Below if m > b => continue,
                KernelRelation::Below => ((m - a) / (b - a), 1.0 / (b - a)),
            };
            for k in (0..=deg).rev() {
                poly[k + 1] += c1 * poly[k];
                poly[k] *= c0;
            }
            deg += 1;
        }
        // ∫_{-h}^{h} t^k dt vanishes for odd k.
        let mut hp = half;
        for k in (0..=deg).step_by(2) {
            total += poly[k] * 2.0 * hp / (k as f64 + 1.0);
            hp *= half * half;
        }
    }
    total
}

struct Kernel {
    weight: f64,
    lo: f64,
    hi: f64,
}

fn kernels(d: &FiniteDistribution) -> Vec<Kernel> {
    let edges = d.pdf().breakpoints();
    d.bin_weights()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| Kernel { weight: w, lo: edges[i], hi: edges[i + 1] })
        .collect()
}

fn check_histograms(center: &FiniteDistribution, neighbors: &[&FiniteDistribution]) -> Result<()> {
    if neighbors.len() != 2 && neighbors.len() != 4 {
        return Err(Error::NeighborCount(neighbors.len()));
    }
    if center.kind() != Kind::Histogram || neighbors.iter().any(|d| d.kind() != Kind::Histogram) {
        return Err(Error::NotHistogram);
    }
    Ok(())
}

fn relations(pattern: Pattern, n: usize, flipped: bool) -> [KernelRelation; 4] {
    use KernelRelation::{Above, Below};
    let mut out = [Above; 4];
    for (i, r) in out.iter_mut().enumerate().take(n) {
        *r = match pattern {
            Pattern::Min => Above,
            Pattern::Max => Below,
            Pattern::Saddle => {
                if (i % 2 == 0) != flipped {
                    Above
                } else {
                    Below
                }
            }
        };
    }
    out
}

/// Σ over kernel combinations of weight product × uniform closed form, for
/// each relation set in `patterns`.
fn combinatorial_sums(
    center: &FiniteDistribution,
    neighbors: &[&FiniteDistribution],
    patterns: &[[KernelRelation; 4]],
) -> Result<Vec<f64>> {
    check_histograms(center, neighbors)?;
    let bins = std::iter::once(center)
        .chain(neighbors.iter().copied())
        .map(|d| d.bin_weights().len())
        .max()
        .unwrap_or(0);
    if bins > MAX_COMBINATORIAL_BINS {
        return Err(Error::TooManyBins {
            bins,
            limit: MAX_COMBINATORIAL_BINS,
            combinations: (bins as u64).pow(neighbors.len() as u32 + 1),
        });
    }
    let center_k = kernels(center);
    let neighbor_k: Vec<Vec<Kernel>> = neighbors.iter().map(|d| kernels(d)).collect();
    let n = neighbors.len();
    let mut sums = vec![0.0; patterns.len()];
    let mut idx = vec![0usize; n];
    let mut scratch = [(KernelRelation::Above, 0.0, 0.0); 4];
    for ck in &center_k {
        idx.iter_mut().for_each(|i| *i = 0);
        'combos: loop {
            let mut weight = ck.weight;
            for (j, k) in idx.iter().enumerate() {
                weight *= neighbor_k[j][*k].weight;
            }
            for (p, rels) in patterns.iter().enumerate() {
                for j in 0..n {
                    let k = &neighbor_k[j][idx[j]];
                    scratch[j] = (rels[j], k.lo, k.hi);
                }
                sums[p] += weight * uniform_kernel_integral((ck.lo, ck.hi), &scratch[..n]);
            }
            // odometer over neighbor kernels
            for j in 0..n {
                idx[j] += 1;
                if idx[j] < neighbor_k[j].len() {
                    continue 'combos;
                }
                idx[j] = 0;
            }
            break;
        }
    }
    Ok(sums)
}

/// Local minimum probability by enumerating every kernel combination.
pub fn histogram_min_prob_combinatorial<D: Borrow<FiniteDistribution>>(case: &NeighborhoodCase<D>) -> Result<f64> {
    let n = case.neighbor_count();
    let sums = combinatorial_sums(case.center(), &case.neighbor_refs(), &[relations(Pattern::Min, n, false)])?;
    Ok(sums[0])
}

pub(crate) fn combinatorial_triple_refs(
    center: &FiniteDistribution,
    neighbors: &[&FiniteDistribution],
) -> Result<ProbabilityTriple> {
    let n = neighbors.len();
    let patterns = [
        relations(Pattern::Min, n, false),
        relations(Pattern::Max, n, false),
        relations(Pattern::Saddle, n, false),
        relations(Pattern::Saddle, n, true),
    ];
    let s = combinatorial_sums(center, neighbors, &patterns)?;
    Ok(ProbabilityTriple { p_min: s[0], p_max: s[1], p_saddle: s[2] + s[3] })
}

pub fn histogram_triple_combinatorial<D: Borrow<FiniteDistribution>>(
    case: &NeighborhoodCase<D>,
) -> Result<ProbabilityTriple> {
    combinatorial_triple_refs(case.center(), &case.neighbor_refs())
}

pub(crate) fn semianalytical_triple_refs<R: Rng + ?Sized>(
    center: &FiniteDistribution,
    neighbors: &[&FiniteDistribution],
    c: usize,
    rng: &mut R,
) -> Result<ProbabilityTriple> {
    check_histograms(center, neighbors)?;
    if c == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let mut acc = [0.0f64; 3];
    let mut above = [0.0f64; 4];
    for _ in 0..c {
        let x = center.quantile(rng.random::<f64>());
        for (s, d) in above.iter_mut().zip(neighbors) {
            *s = d.histogram_survival(x);
        }
        let below = above.map(|s| 1.0 - s);
        match neighbors.len() {
            2 => {
                acc[0] += above[0] * above[1];
                acc[1] += below[0] * below[1];
                acc[2] += above[0] * below[1] + below[0] * above[1];
            }
            _ => {
                acc[0] += above[0] * above[1] * above[2] * above[3];
                acc[1] += below[0] * below[1] * below[2] * below[3];
                acc[2] += above[0] * below[1] * above[2] * below[3] + below[0] * above[1] * below[2] * above[3];
            }
        }
    }
    let c = c as f64;
    Ok(ProbabilityTriple { p_min: acc[0] / c, p_max: acc[1] / c, p_saddle: acc[2] / c })
}

pub fn semianalytical_triple<D: Borrow<FiniteDistribution>>(
    case: &NeighborhoodCase<D>,
    c: usize,
    seed: u64,
) -> Result<ProbabilityTriple> {
    let mut rng = rng_from_seed(seed);
    semianalytical_triple_refs(case.center(), &case.neighbor_refs(), c, &mut rng)
}

/// Average over `c` center samples of the exact pattern probability given
/// that sample.
pub fn semianalytical_prob<D: Borrow<FiniteDistribution>>(
    case: &NeighborhoodCase<D>,
    pattern: Pattern,
    c: usize,
    seed: u64,
) -> Result<f64> {
    Ok(semianalytical_triple(case, c, seed)?.get(pattern))
}
