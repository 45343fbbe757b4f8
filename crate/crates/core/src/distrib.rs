//! Finite-support noise models for a single grid point.
//!
//! Each [`FiniteDistribution`] carries its density, CDF and survival function as
//! [`PiecewisePolynomial`]s so the probability engine can multiply and integrate
//! them directly. Densities have degree 0 (uniform, histogram) or 2
//! (Epanechnikov); CDFs and survival functions one more.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::piecewise::PiecewisePolynomial;

/// Smallest width a degenerate range is widened to.
pub const MIN_EPSILON: f64 = 1e-12;

/// Relative widening applied to ranges that collapse to a point.
pub const RELATIVE_EPSILON: f64 = 1e-9;

/// Default Epanechnikov half-width multiplier: `w = √5·σ` gives the fitted
/// distribution the sample variance.
pub const DEFAULT_HALF_WIDTH_FACTOR: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Uniform,
    Epanechnikov,
    Histogram,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }
}

/// Width used when a fitted range collapses to a point.
///
/// Collapsed ranges become uniforms of width `ε = max(1e-12, 1e-9·range)`
/// where `range` is the spread of the whole data set; constant pixels then
/// keep a strictly positive support and ties between them have probability 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilon(f64);

impl Epsilon {
    pub fn for_range(range: f64) -> Self {
        Self(MIN_EPSILON.max(RELATIVE_EPSILON * range.abs()))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    // Never narrower than the spacing of doubles around `center`.
    fn width_at(self, center: f64) -> f64 {
        self.0.max(center.abs() * 1e-12)
    }
}

impl Default for Epsilon {
    fn default() -> Self {
        Self(MIN_EPSILON)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    kind: Kind,
    support: Support,
    pdf: PiecewisePolynomial,
    cdf: PiecewisePolynomial,
    survival: PiecewisePolynomial,
    bin_weights: Vec<f64>,
    // cdf at the histogram bin edges, `bin_weights.len() + 1` entries
    cumulative: Vec<f64>,
    degenerate: bool,
}

impl FiniteDistribution {
    fn from_pdf(kind: Kind, pdf: PiecewisePolynomial, bin_weights: Vec<f64>, degenerate: bool) -> Self {
        let (lo, hi) = pdf.support();
        let cdf = pdf.antiderivative().with_out_of_range(0.0, 1.0);
        let survival = cdf.complement();
        let cumulative = prefix_sums(&bin_weights);
        Self { kind, support: Support { lo, hi }, pdf, cdf, survival, bin_weights, cumulative, degenerate }
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        let pdf = PiecewisePolynomial::constant(lo, hi, 1.0 / (hi - lo), 0.0, 0.0)?;
        Ok(Self::from_pdf(Kind::Uniform, pdf, Vec::new(), false))
    }

    /// Parabolic density `3/(4w)·(1 - ((x - m)/w)²)` on `[m - w, m + w]`.
    pub fn epanechnikov(mean: f64, half_width: f64) -> Result<Self> {
        check_interval(mean - half_width, mean + half_width)?;
        let w = half_width;
        let c0 = 0.75 / w;
        let pdf = PiecewisePolynomial::new(
            vec![mean - w, mean + w],
            vec![vec![c0, 0.0, -c0 / (w * w)]],
            0.0,
            0.0,
        )?;
        Ok(Self::from_pdf(Kind::Epanechnikov, pdf, Vec::new(), false))
    }

    /// Equal-width bins over `[lo, hi]`; `weights` are normalized to sum to 1.
    pub fn histogram(lo: f64, hi: f64, weights: &[f64]) -> Result<Self> {
        check_interval(lo, hi)?;
        if weights.is_empty() {
            return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("histogram weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("histogram weights sum to zero".into()));
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        Ok(Self::histogram_normalized(lo, hi, weights, false))
    }

    fn histogram_normalized(lo: f64, hi: f64, weights: Vec<f64>, degenerate: bool) -> Self {
        let h = weights.len();
        let width = (hi - lo) / h as f64;
        let mut edges: Vec<f64> = (0..h).map(|i| lo + (hi - lo) * i as f64 / h as f64).collect();
        edges.push(hi);
        let pieces = weights.iter().map(|w| vec![w / width]).collect();
        let pdf = PiecewisePolynomial::new(edges, pieces, 0.0, 0.0).expect("valid histogram edges");
        Self::from_pdf(Kind::Histogram, pdf, weights, degenerate)
    }

    /// ε-widened point mass: a uniform of width `ε` centered on `x`.
    pub fn point_mass(x: f64, eps: Epsilon) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
        let half = 0.5 * eps.width_at(x);
        let mut d = Self::uniform(x - half, x + half)?;
        d.degenerate = true;
        Ok(d)
    }

    pub fn uniform_from_samples(samples: &[f64]) -> Result<Self> {
        Self::uniform_from_samples_with(samples, Epsilon::default())
    }

    /// Uniform over `[min, max]` of the samples.
    pub fn uniform_from_samples_with(samples: &[f64], eps: Epsilon) -> Result<Self> {
        let (lo, hi) = sample_range(samples, 1)?;
        if lo == hi {
            return Self::point_mass(lo, eps);
        }
        Self::uniform(lo, hi)
    }

    pub fn epanechnikov_from_samples(samples: &[f64], k: f64) -> Result<Self> {
        Self::epanechnikov_from_samples_with(samples, k, Epsilon::default())
    }

    /// Epanechnikov centered on the sample mean with half-width `k·s`, where
    /// `s` is the (n-1)-normalized sample standard deviation.
    pub fn epanechnikov_from_samples_with(samples: &[f64], k: f64, eps: Epsilon) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("half-width factor must be positive, got {k}")));
        }
        sample_range(samples, 2)?;
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        let w = k * sd;
        if !(w > 0.0) || (mean - w) == (mean + w) {
            return Self::point_mass(mean, eps);
        }
        Self::epanechnikov(mean, w)
    }

    pub fn histogram_from_samples(samples: &[f64], bins: usize) -> Result<Self> {
        Self::histogram_from_samples_with(samples, bins, Epsilon::default())
    }

    /// `bins` equal-width bins over `[min, max]` of the samples, weighted by
    /// relative counts. A sample on the top edge lands in the last bin.
    pub fn histogram_from_samples_with(samples: &[f64], bins: usize, eps: Epsilon) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
        }
        let (lo, hi) = sample_range(samples, 1)?;
        if lo == hi {
            let half = 0.5 * eps.width_at(lo);
            return Ok(Self::histogram_normalized(lo - half, hi + half, vec![1.0], true));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &x in samples {
            let idx = (((x - lo) / width).floor() as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let n = samples.len() as f64;
        let weights = counts.iter().map(|&c| c as f64 / n).collect();
        Ok(Self::histogram_normalized(lo, hi, weights, false))
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn pdf(&self) -> &PiecewisePolynomial {
        &self.pdf
    }

    pub fn cdf_poly(&self) -> &PiecewisePolynomial {
        &self.cdf
    }

    pub fn survival_poly(&self) -> &PiecewisePolynomial {
        &self.survival
    }

    /// Histogram bin weights; empty for parametric models.
    pub fn bin_weights(&self) -> &[f64] {
        &self.bin_weights
    }

    /// CDF at the histogram bin edges.
    pub fn cumulative_weights(&self) -> &[f64] {
        &self.cumulative
    }

    /// True for ε-widened point masses.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn density(&self, x: f64) -> f64 {
        self.pdf.eval(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.support.lo {
            0.0
        } else if x >= self.support.hi {
            1.0
        } else {
            self.cdf.eval(x).clamp(0.0, 1.0)
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    pub fn mean(&self) -> f64 {
        match self.kind {
            Kind::Uniform | Kind::Epanechnikov => self.support.midpoint(),
            Kind::Histogram => {
                let h = self.bin_weights.len() as f64;
                let width = self.support.width() / h;
                self.bin_weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * (self.support.lo + (i as f64 + 0.5) * width))
                    .sum()
            }
        }
    }

    /// Distribution of `-X`.
    pub fn negate(&self) -> Self {
        let mut bin_weights = self.bin_weights.clone();
        bin_weights.reverse();
        let cumulative = prefix_sums(&bin_weights);
        Self {
            kind: self.kind,
            support: Support { lo: -self.support.hi, hi: -self.support.lo },
            pdf: self.pdf.mirror(),
            cdf: self.survival.mirror(),
            survival: self.cdf.mirror(),
            bin_weights,
            cumulative,
            degenerate: self.degenerate,
        }
    }

    /// Distribution of `alpha·X + beta` for `alpha > 0`.
    pub fn affine(&self, alpha: f64, beta: f64) -> Result<Self> {
        let pdf = self.pdf.affine(alpha, beta)?.scale(1.0 / alpha);
        let (lo, hi) = pdf.support();
        Ok(Self {
            kind: self.kind,
            support: Support { lo, hi },
            pdf,
            cdf: self.cdf.affine(alpha, beta)?,
            survival: self.survival.affine(alpha, beta)?,
            bin_weights: self.bin_weights.clone(),
            cumulative: self.cumulative.clone(),
            degenerate: self.degenerate,
        })
    }

    /// Inverse CDF at `u ∈ [0, 1]`.
    pub fn sample_inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidParameter(format!("quantile level {u} outside [0, 1]")));
        }
        Ok(self.quantile(u))
    }

    /// Inverse CDF without the range check.
    pub(crate) fn quantile(&self, u: f64) -> f64 {
        let Support { lo, hi } = self.support;
        let x = match self.kind {
            Kind::Uniform => lo + u * (hi - lo),
            Kind::Epanechnikov if u <= 0.0 => lo,
            Kind::Epanechnikov if u >= 1.0 => hi,
            Kind::Epanechnikov => {
                // Root of u = 1/2 + 3t/4 - t³/4 on [-1, 1].
                let t = 2.0 * ((2.0 * u - 1.0).clamp(-1.0, 1.0).asin() / 3.0).sin();
                self.support.midpoint() + 0.5 * (hi - lo) * t
            }
            Kind::Histogram => {
                let h = self.bin_weights.len();
                let mut j = self.cumulative[1..].partition_point(|&c| c < u).min(h - 1);
                while self.bin_weights[j] == 0.0 && j + 1 < h && self.cumulative[j + 1] <= u {
                    j += 1;
                }
                while self.bin_weights[j] == 0.0 && j > 0 {
                    j -= 1;
                }
                let edge_lo = self.pdf.breakpoints()[j];
                let edge_hi = self.pdf.breakpoints()[j + 1];
                let frac = ((u - self.cumulative[j]) / self.bin_weights[j]).clamp(0.0, 1.0);
                edge_lo + frac * (edge_hi - edge_lo)
            }
        };
        x.clamp(lo, hi)
    }

    /// `Pr(x < X)` for a histogram, from the bin prefix sums in O(1).
    pub(crate) fn histogram_survival(&self, x: f64) -> f64 {
        let Support { lo, hi } = self.support;
        if x <= lo {
            return 1.0;
        }
        if x >= hi {
            return 0.0;
        }
        let h = self.bin_weights.len();
        let width = (hi - lo) / h as f64;
        let j = (((x - lo) / width) as usize).min(h - 1);
        let edge_hi = self.pdf.breakpoints()[j + 1];
        let inside = self.bin_weights[j] * ((edge_hi - x) / width).clamp(0.0, 1.0);
        (1.0 - self.cumulative[j + 1]) + inside
    }
}

fn prefix_sums(weights: &[f64]) -> Vec<f64> {
    if weights.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(weights.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for w in weights {
        acc += w;
        out.push(acc);
    }
    *out.last_mut().unwrap() = 1.0;
    out
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("support [{lo}, {hi}] is empty")));
    }
    Ok(())
}

fn sample_range(samples: &[f64], needed: usize) -> Result<(f64, f64)> {
    if samples.len() < needed {
        return Err(Error::TooFewSamples { needed, got: samples.len() });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Something a Monte Carlo estimator can draw from.
pub trait Marginal {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

impl Marginal for FiniteDistribution {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

impl<T: Marginal + ?Sized> Marginal for &T {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (**self).draw(rng)
    }
}

/// Untruncated normal noise; no closed form exists, so it is only sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSampler {
    pub mean: f64,
    pub stddev: f64,
}

impl GaussianSampler {
    pub fn new(mean: f64, stddev: f64) -> Result<Self> {
        if !mean.is_finite() || !stddev.is_finite() {
            return Err(Error::NonFinite);
        }
        if stddev < 0.0 {
            return Err(Error::InvalidParameter(format!("negative standard deviation {stddev}")));
        }
        Ok(Self { mean, stddev })
    }

    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        sample_range(samples, 2)?;
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        Self::new(mean, var.sqrt())
    }
}

impl Marginal for GaussianSampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean + self.stddev * z
    }
}
