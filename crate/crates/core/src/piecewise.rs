//! Piecewise polynomials on a finite partition of the real line.
//!
//! Every piece stores the coefficients of powers of `x - midpoint`, where the
//! midpoint belongs to that piece. Working in these local coordinates keeps the
//! coefficients on the scale of the piece width, so products of many factors
//! and their integrals do not lose precision when the data sit far from the
//! origin or span many orders of magnitude.
//!
//! Outside `[first breakpoint, last breakpoint]` the function takes one of two
//! stored constants: `below` to the left and `above` to the right.

use crate::error::{Error, Result};
use crate::quadrature;

/// Highest degree [`PiecewisePolynomial::integrate`] accepts.
pub const MAX_DEGREE: usize = 30;

/// Relative tolerance under which breakpoints are merged.
pub const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
    below: f64,
    above: f64,
}

impl PiecewisePolynomial {
    /// Builds a piecewise polynomial from breakpoints and per-piece local
    /// coefficients (lowest power first).
    pub fn new(
        breakpoints: Vec<f64>,
        pieces: Vec<Vec<f64>>,
        below: f64,
        above: f64,
    ) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidPolynomial("need at least two breakpoints"));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite);
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPolynomial("breakpoints must be strictly increasing"));
        }
        if pieces.len() != breakpoints.len() - 1 {
            return Err(Error::InvalidPolynomial("piece count must equal breakpoint count - 1"));
        }
        if pieces.iter().any(|p| p.is_empty()) {
            return Err(Error::InvalidPolynomial("every piece needs at least one coefficient"));
        }
        Ok(Self { breakpoints, pieces, below, above })
    }

    /// `value` on `[lo, hi]`, the given constants outside.
    pub fn constant(lo: f64, hi: f64, value: f64, below: f64, above: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![vec![value]], below, above)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Local coefficients of every piece.
    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    pub fn below(&self) -> f64 {
        self.below
    }

    pub fn above(&self) -> f64 {
        self.above
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn piece_midpoint(&self, i: usize) -> f64 {
        0.5 * (self.breakpoints[i] + self.breakpoints[i + 1])
    }

    pub fn degree(&self) -> usize {
        self.pieces.iter().map(|p| p.len() - 1).max().unwrap_or(0)
    }

    /// Same function with different out-of-range constants.
    pub fn with_out_of_range(mut self, below: f64, above: f64) -> Self {
        self.below = below;
        self.above = above;
        self
    }

    /// Index of the piece that owns `x`; interior breakpoints belong to the
    /// piece on their right, the last breakpoint to the last piece.
    fn locate(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.support();
        if !(lo..=hi).contains(&x) {
            return None;
        }
        let idx = self.breakpoints.partition_point(|&b| b <= x);
        Some(idx.saturating_sub(1).min(self.pieces.len() - 1))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some(i) => horner(&self.pieces[i], x - self.piece_midpoint(i)),
            None if x < self.breakpoints[0] => self.below,
            None => self.above,
        }
    }

    /// Coefficients of this function on `[lo, hi]` expanded around `center`.
    /// `[lo, hi]` must not straddle a breakpoint (up to the merge tolerance).
    fn local_on(&self, lo: f64, hi: f64, center: f64) -> Vec<f64> {
        let mid = 0.5 * (lo + hi);
        let (first, last) = self.support();
        if mid < first {
            return vec![self.below];
        }
        if mid > last {
            return vec![self.above];
        }
        let i = self.locate(mid).expect("midpoint inside support");
        taylor_shift(&self.pieces[i], center - self.piece_midpoint(i))
    }

    /// `∫ self` over `[lo, hi] ∩ support`, by Gauss–Legendre on each piece.
    pub fn integrate(&self, lo: f64, hi: f64) -> Result<f64> {
        let degree = self.degree();
        if degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        let (first, last) = self.support();
        let lo = lo.max(first);
        let hi = hi.min(last);
        if !(lo < hi) {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (i, coeffs) in self.pieces.iter().enumerate() {
            let l = self.breakpoints[i].max(lo);
            let r = self.breakpoints[i + 1].min(hi);
            if l >= r {
                continue;
            }
            total += integrate_local(coeffs, l - self.piece_midpoint(i), r - self.piece_midpoint(i));
        }
        Ok(total)
    }

    /// Antiderivative that vanishes at the first breakpoint. Out of range it
    /// is 0 below and the total integral above.
    pub fn antiderivative(&self) -> Self {
        let mut acc = 0.0;
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for (i, c) in self.pieces.iter().enumerate() {
            let half = 0.5 * (self.breakpoints[i + 1] - self.breakpoints[i]);
            let mut d = vec![0.0; c.len() + 1];
            let mut at_left = 0.0;
            let mut span = 0.0;
            let mut hp = half;
            for (k, ck) in c.iter().enumerate() {
                let q = ck / (k as f64 + 1.0);
                d[k + 1] = q;
                // (-h)^{k+1}
                let left = if k % 2 == 0 { -hp } else { hp };
                at_left += q * left;
                if k % 2 == 0 {
                    span += 2.0 * q * hp;
                }
                hp *= half;
            }
            d[0] = acc - at_left;
            acc += span;
            pieces.push(d);
        }
        Self { breakpoints: self.breakpoints.clone(), pieces, below: 0.0, above: acc }
    }

    /// `x ↦ self(-x)`.
    pub fn mirror(&self) -> Self {
        let breakpoints = self.breakpoints.iter().rev().map(|b| -b).collect();
        let pieces = self
            .pieces
            .iter()
            .rev()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .map(|(k, v)| if k % 2 == 1 { -v } else { *v })
                    .collect()
            })
            .collect();
        Self { breakpoints, pieces, below: self.above, above: self.below }
    }

    /// `y ↦ self((y - beta) / alpha)` for `alpha > 0`.
    pub fn affine(&self, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("affine map needs alpha > 0, got {alpha}")));
        }
        let breakpoints: Vec<f64> = self.breakpoints.iter().map(|b| alpha * b + beta).collect();
        let pieces = self
            .pieces
            .iter()
            .map(|c| {
                let mut s = 1.0;
                c.iter()
                    .map(|v| {
                        let out = v / s;
                        s *= alpha;
                        out
                    })
                    .collect()
            })
            .collect();
        Self::new(breakpoints, pieces, self.below, self.above)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|c| c.iter().map(|v| v * s).collect()).collect(),
            below: self.below * s,
            above: self.above * s,
        }
    }

    /// `1 - self`.
    pub fn complement(&self) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|c| {
                let mut out: Vec<f64> = c.iter().map(|v| -v).collect();
                out[0] = 1.0 - c[0];
                out
            })
            .collect();
        Self {
            breakpoints: self.breakpoints.clone(),
            pieces,
            below: 1.0 - self.below,
            above: 1.0 - self.above,
        }
    }

    /// `Σ wᵢ·pᵢ` over the union of all supports.
    pub fn linear_combination(terms: &[(f64, &PiecewisePolynomial)]) -> Result<Self> {
        let Some(lo) = terms.iter().map(|(_, p)| p.support().0).reduce(f64::min) else {
            return Err(Error::InvalidPolynomial("empty linear combination"));
        };
        let hi = terms.iter().map(|(_, p)| p.support().1).fold(lo, f64::max);
        let breakpoints = merged_breakpoints(terms.iter().map(|(_, p)| *p), lo, hi)?;
        let pieces = breakpoints
            .windows(2)
            .map(|w| {
                let center = 0.5 * (w[0] + w[1]);
                let mut acc: Vec<f64> = Vec::new();
                for (weight, p) in terms {
                    let local = p.local_on(w[0], w[1], center);
                    if acc.len() < local.len() {
                        acc.resize(local.len(), 0.0);
                    }
                    for (a, v) in acc.iter_mut().zip(&local) {
                        *a += weight * v;
                    }
                }
                acc
            })
            .collect();
        let below = terms.iter().map(|(w, p)| w * p.below).sum();
        let above = terms.iter().map(|(w, p)| w * p.above).sum();
        Self::new(breakpoints, pieces, below, above)
    }
}

/// Product of `factors` restricted to `[lo, hi]`.
///
/// The result's breakpoints are `lo`, `hi` and every factor breakpoint
/// strictly inside, so each factor is a single polynomial (or one of its
/// out-of-range constants) on every result piece. Outside `[lo, hi]` the
/// product is 0.
pub fn refine_and_multiply(factors: &[&PiecewisePolynomial], lo: f64, hi: f64) -> Result<PiecewisePolynomial> {
    if !(lo < hi) {
        return Err(Error::EmptyDomain { lo, hi });
    }
    let breakpoints = merged_breakpoints(factors.iter().copied(), lo, hi)?;
    let pieces = breakpoints
        .windows(2)
        .map(|w| {
            let center = 0.5 * (w[0] + w[1]);
            factors.iter().fold(vec![1.0], |acc, f| {
                let local = f.local_on(w[0], w[1], center);
                multiply(&acc, &local)
            })
        })
        .collect();
    PiecewisePolynomial::new(breakpoints, pieces, 0.0, 0.0)
}

/// `∫_{lo}^{hi} ∏ factors`, without materializing the product.
pub(crate) fn integrate_product(factors: &[&PiecewisePolynomial], lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Ok(0.0);
    }
    let breakpoints = merged_breakpoints(factors.iter().copied(), lo, hi)?;
    let mut total = 0.0;
    let mut acc = Vec::with_capacity(MAX_DEGREE + 1);
    let mut scratch = Vec::with_capacity(MAX_DEGREE + 1);
    for w in breakpoints.windows(2) {
        let center = 0.5 * (w[0] + w[1]);
        acc.clear();
        acc.push(1.0);
        for f in factors {
            let local = f.local_on(w[0], w[1], center);
            multiply_into(&acc, &local, &mut scratch);
            std::mem::swap(&mut acc, &mut scratch);
        }
        if acc.len() - 1 > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(acc.len() - 1));
        }
        let half = 0.5 * (w[1] - w[0]);
        total += integrate_local(&acc, -half, half);
    }
    Ok(total)
}

fn merged_breakpoints<'a>(
    polys: impl Iterator<Item = &'a PiecewisePolynomial>,
    lo: f64,
    hi: f64,
) -> Result<Vec<f64>> {
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::NonFinite);
    }
    let tol = MERGE_TOLERANCE * (hi - lo);
    let mut points = vec![lo, hi];
    for p in polys {
        points.extend(p.breakpoints.iter().copied().filter(|&b| b > lo + tol && b < hi - tol));
    }
    points.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(points.len());
    for b in points {
        match merged.last() {
            Some(&last) if b - last <= tol => {}
            _ => merged.push(b),
        }
    }
    // `hi` may have been absorbed into an interior point just below it.
    if let Some(last) = merged.last_mut() {
        *last = hi;
    }
    if merged.len() < 2 {
        return Err(Error::EmptyDomain { lo, hi });
    }
    Ok(merged)
}

pub(crate) fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Gauss–Legendre integral of a local polynomial over `[l, r]` (local coordinates).
fn integrate_local(coeffs: &[f64], l: f64, r: f64) -> f64 {
    let degree = coeffs.len() - 1;
    let half = 0.5 * (r - l);
    let mid = 0.5 * (r + l);
    if degree == 0 {
        return coeffs[0] * (r - l);
    }
    let rule = quadrature::rule(quadrature::nodes_for_degree(degree));
    let sum: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| w * horner(coeffs, mid + half * x))
        .sum();
    half * sum
}

/// Re-expands `Σ c_k t^k` in `s = t - shift`.
fn taylor_shift(coeffs: &[f64], shift: f64) -> Vec<f64> {
    let mut out = coeffs.to_vec();
    if shift == 0.0 {
        return out;
    }
    let n = out.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            out[j] += shift * out[j + 1];
        }
    }
    out
}

fn multiply(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    multiply_into(a, b, &mut out);
    out
}

fn multiply_into(a: &[f64], b: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.resize(a.len() + b.len() - 1, 0.0);
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(lo: f64, hi: f64) -> PiecewisePolynomial {
        let m = 0.5 * (lo + hi);
        PiecewisePolynomial::new(vec![lo, hi], vec![vec![m, 1.0]], 0.0, 0.0).unwrap()
    }

    #[test]
    fn eval_constant_and_identity() {
        let one = PiecewisePolynomial::constant(0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(one.eval(0.5), 1.0);
        assert_eq!(identity(0.0, 2.0).eval(1.5), 1.5);
    }

    #[test]
    fn eval_out_of_range_and_breakpoint_ownership() {
        let p = PiecewisePolynomial::new(vec![0.0, 1.0, 2.0], vec![vec![10.0], vec![20.0]], -1.0, 7.0)
            .unwrap();
        assert_eq!(p.eval(-0.1), -1.0);
        assert_eq!(p.eval(2.1), 7.0);
        assert_eq!(p.eval(0.0), 10.0);
        assert_eq!(p.eval(1.0), 20.0);
        assert_eq!(p.eval(2.0), 20.0);
    }

    #[test]
    fn local_constant_coefficient_is_midpoint_value() {
        let p = PiecewisePolynomial::new(vec![3.0, 5.0], vec![vec![0.25, -2.0, 9.0]], 0.0, 0.0).unwrap();
        assert_eq!(p.eval(4.0), 0.25);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(PiecewisePolynomial::new(vec![0.0], vec![], 0.0, 0.0).is_err());
        assert!(PiecewisePolynomial::new(vec![0.0, 0.0], vec![vec![1.0]], 0.0, 0.0).is_err());
        assert!(PiecewisePolynomial::new(vec![0.0, 1.0, 2.0], vec![vec![1.0]], 0.0, 0.0).is_err());
        assert!(PiecewisePolynomial::new(vec![0.0, f64::NAN], vec![vec![1.0]], 0.0, 0.0).is_err());
    }

    #[test]
    fn refine_single_constant() {
        let one = PiecewisePolynomial::constant(0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let prod = refine_and_multiply(&[&one], 0.0, 1.0).unwrap();
        assert_eq!(prod.piece_count(), 1);
        assert_eq!(prod.eval(0.3), 1.0);
    }

    #[test]
    fn refine_squares_uniform_survival() {
        let s = PiecewisePolynomial::new(vec![0.0, 1.0], vec![vec![0.5, -1.0]], 1.0, 0.0).unwrap();
        let prod = refine_and_multiply(&[&s, &s], 0.0, 1.0).unwrap();
        assert_eq!(prod.piece_count(), 1);
        assert_eq!(prod.degree(), 2);
        for x in [0.0, 0.1, 0.5, 0.77, 1.0] {
            assert!((prod.eval(x) - (1.0 - x) * (1.0 - x)).abs() < 1e-15);
        }
    }

    #[test]
    fn refine_counts_interior_breakpoints() {
        let mk = |b: f64| PiecewisePolynomial::constant(b, b + 5.0, 1.0, 0.5, 1.0).unwrap();
        let fs = [mk(0.2), mk(0.4), mk(0.6), mk(-1.0), mk(-2.0)];
        let refs: Vec<&PiecewisePolynomial> = fs.iter().collect();
        let prod = refine_and_multiply(&refs, 0.0, 1.0).unwrap();
        assert_eq!(prod.breakpoints(), &[0.0, 0.2, 0.4, 0.6, 1.0]);
    }

    #[test]
    fn refine_rejects_empty_domain() {
        let one = PiecewisePolynomial::constant(0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(matches!(refine_and_multiply(&[&one], 1.0, 1.0), Err(Error::EmptyDomain { .. })));
        assert!(matches!(refine_and_multiply(&[&one], 2.0, 1.0), Err(Error::EmptyDomain { .. })));
    }

    #[test]
    fn nearly_coincident_breakpoints_merge() {
        let a = PiecewisePolynomial::constant(0.0, 0.5, 1.0, 1.0, 1.0).unwrap();
        let b = PiecewisePolynomial::constant(0.0, 0.5 + 1e-14, 1.0, 1.0, 1.0).unwrap();
        let prod = refine_and_multiply(&[&a, &b], 0.0, 1.0).unwrap();
        assert_eq!(prod.piece_count(), 2);
    }

    #[test]
    fn integrate_simple() {
        let one = PiecewisePolynomial::constant(0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(one.integrate(0.0, 1.0).unwrap(), 1.0);
        assert!((identity(0.0, 2.0).integrate(0.0, 2.0).unwrap() - 2.0).abs() < 1e-15);
        // clamped to the support
        assert_eq!(one.integrate(-5.0, 5.0).unwrap(), 1.0);
        assert_eq!(one.integrate(2.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn integrate_rejects_high_degree() {
        let p = PiecewisePolynomial::new(vec![0.0, 1.0], vec![vec![1.0; 32]], 0.0, 0.0).unwrap();
        assert!(matches!(p.integrate(0.0, 1.0), Err(Error::UnsupportedDegree(31))));
        let q = PiecewisePolynomial::new(vec![0.0, 1.0], vec![vec![1.0; 31]], 0.0, 0.0).unwrap();
        assert!(q.integrate(0.0, 1.0).is_ok());
    }

    #[test]
    fn antiderivative_of_uniform_density() {
        let pdf = PiecewisePolynomial::constant(0.0, 2.0, 0.5, 0.0, 0.0).unwrap();
        let cdf = pdf.antiderivative();
        assert_eq!(cdf.eval(0.0), 0.0);
        assert_eq!(cdf.eval(1.0), 0.5);
        assert_eq!(cdf.eval(2.0), 1.0);
        assert_eq!(cdf.above(), 1.0);
    }

    #[test]
    fn mirror_is_an_involution() {
        let p = PiecewisePolynomial::new(
            vec![-1.0, 0.5, 3.0],
            vec![vec![1.0, 2.0, 3.0], vec![-4.0, 0.5]],
            0.25,
            0.75,
        )
        .unwrap();
        let m = p.mirror();
        // 0.5 is a jump, where mirroring hands ownership to the other piece.
        for x in [-2.0, -0.7, 0.0, 0.49, 0.51, 1.3, 2.9, 4.0] {
            assert!((m.eval(-x) - p.eval(x)).abs() < 1e-14, "x={x}");
        }
        assert_eq!(m.mirror(), p);
    }

    #[test]
    fn affine_relocates_the_graph() {
        let p = PiecewisePolynomial::new(vec![0.0, 1.0], vec![vec![1.0, 2.0, -3.0]], 0.0, 0.0).unwrap();
        let q = p.affine(4.0, -2.0).unwrap();
        for x in [0.0, 0.2, 0.5, 0.9, 1.0] {
            assert!((q.eval(4.0 * x - 2.0) - p.eval(x)).abs() < 1e-14);
        }
        assert!(p.affine(0.0, 1.0).is_err());
    }

    #[test]
    fn linear_combination_spans_union() {
        let a = PiecewisePolynomial::constant(0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let b = PiecewisePolynomial::constant(0.5, 2.0, 2.0, 0.0, 0.0).unwrap();
        let c = PiecewisePolynomial::linear_combination(&[(3.0, &a), (-1.0, &b)]).unwrap();
        assert_eq!(c.breakpoints(), &[0.0, 0.5, 1.0, 2.0]);
        assert_eq!(c.eval(0.25), 3.0);
        assert_eq!(c.eval(0.75), 1.0);
        assert_eq!(c.eval(1.5), -2.0);
    }

    #[test]
    fn integrate_product_matches_materialized_product() {
        let s = PiecewisePolynomial::new(vec![0.2, 1.4], vec![vec![0.5, -1.0 / 1.2]], 1.0, 0.0).unwrap();
        let f = PiecewisePolynomial::new(vec![-0.3, 0.9], vec![vec![0.5, 1.0 / 1.2]], 0.0, 1.0).unwrap();
        let d = PiecewisePolynomial::constant(0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let fs = [&d, &s, &f, &s];
        let direct = integrate_product(&fs, 0.0, 1.0).unwrap();
        let via = refine_and_multiply(&fs, 0.0, 1.0).unwrap().integrate(0.0, 1.0).unwrap();
        assert!((direct - via).abs() < 1e-15);
    }
}
