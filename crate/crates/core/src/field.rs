//! Grid containers: raw ensembles, per-pixel noise models, and probability
//! outputs. All rasters are row-major with `(0, 0)` at the top-left.

use rayon::prelude::*;

use crate::critprob::{Pattern, ProbabilityTriple};
use crate::distrib::{Epsilon, FiniteDistribution, GaussianSampler};
use crate::error::{Error, Result};

/// `members` co-registered realizations of a `width × height` field, stored
/// member-major. Values are single precision, matching the on-disk format.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStack {
    width: usize,
    height: usize,
    members: usize,
    values: Vec<f32>,
}

impl EnsembleStack {
    pub fn new(width: usize, height: usize, members: usize, values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || members == 0 {
            return Err(Error::ZeroDimensions);
        }
        let expected = width * height * members;
        if values.len() != expected {
            return Err(Error::PayloadLength { expected: expected * 4, actual: values.len() * 4 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { width, height, members, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn member(&self, m: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.values[m * n..(m + 1) * n]
    }

    /// All member values at pixel `index`, widened to `f64`.
    pub fn pixel_samples(&self, index: usize) -> Vec<f64> {
        let n = self.width * self.height;
        (0..self.members).map(|m| self.values[m * n + index] as f64).collect()
    }

    /// `(min, max)` over every value in the stack.
    pub fn value_range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v as f64), hi.max(v as f64))
        })
    }

    /// Only the given members, in order.
    pub fn select_members(&self, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut values = Vec::new();
        let mut count = 0;
        for m in members {
            if m >= self.members {
                return Err(Error::InvalidParameter(format!("member {m} out of range")));
            }
            values.extend_from_slice(self.member(m));
            count += 1;
        }
        Self::new(self.width, self.height, count, values)
    }
}

/// Per-pixel noise model fitted from ensemble members.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Uniform,
    /// Half-width `k` sample standard deviations around the sample mean.
    Epanechnikov { k: f64 },
    Histogram { bins: usize },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Uniform => "uniform",
            Model::Epanechnikov { .. } => "epanechnikov",
            Model::Histogram { .. } => "histogram",
        }
    }

    pub fn fit(&self, samples: &[f64], eps: Epsilon) -> Result<FiniteDistribution> {
        match *self {
            Model::Uniform => FiniteDistribution::uniform_from_samples_with(samples, eps),
            Model::Epanechnikov { k } => FiniteDistribution::epanechnikov_from_samples_with(samples, k, eps),
            Model::Histogram { bins } => FiniteDistribution::histogram_from_samples_with(samples, bins, eps),
        }
    }
}

/// Affine map applied to data before fitting: `x ↦ (x - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub offset: f64,
    pub scale: f64,
}

impl Normalization {
    pub const IDENTITY: Self = Self { offset: 0.0, scale: 1.0 };

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }
}

/// A `width × height` grid of independent finite-support distributions.
#[derive(Debug, Clone)]
pub struct UncertainField {
    width: usize,
    height: usize,
    model: Option<Model>,
    normalization: Normalization,
    distributions: Vec<FiniteDistribution>,
}

impl UncertainField {
    pub fn new(width: usize, height: usize, distributions: Vec<FiniteDistribution>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimensions);
        }
        if distributions.len() != width * height {
            return Err(Error::ShapeMismatch);
        }
        Ok(Self { width, height, model: None, normalization: Normalization::IDENTITY, distributions })
    }

    /// Fits `model` at every pixel of `stack`.
    ///
    /// With `normalize`, values are first mapped affinely onto `[0, 1]` using
    /// the global range of the stack. Critical point probabilities are
    /// invariant under increasing affine maps, so this only affects the
    /// numerical conditioning.
    pub fn from_ensemble(stack: &EnsembleStack, model: Model, normalize: bool) -> Result<Self> {
        let (lo, hi) = stack.value_range();
        let normalization = if normalize && hi > lo {
            Normalization { offset: lo, scale: hi - lo }
        } else {
            Normalization::IDENTITY
        };
        let eps = Epsilon::for_range(normalization.apply(hi) - normalization.apply(lo));
        let distributions = (0..stack.width * stack.height)
            .into_par_iter()
            .map(|i| {
                let samples: Vec<f64> =
                    stack.pixel_samples(i).into_iter().map(|x| normalization.apply(x)).collect();
                model.fit(&samples, eps)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { width: stack.width, height: stack.height, model: Some(model), normalization, distributions })
    }

    /// Uniform noise of total width `eb` centered on each value: the pixel's
    /// range is `[v - eb/2, v + eb/2]`. `eb = 0` yields ε-widened point masses.
    pub fn uniform_from_scalar(width: usize, height: usize, values: &[f64], eb: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimensions);
        }
        if values.len() != width * height {
            return Err(Error::ShapeMismatch);
        }
        if !(eb >= 0.0) || !eb.is_finite() {
            return Err(Error::InvalidParameter(format!("error bound must be finite and >= 0, got {eb}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let eps = Epsilon::for_range(hi - lo);
        let distributions = values
            .iter()
            .map(|&v| {
                let (a, b) = (v - 0.5 * eb, v + 0.5 * eb);
                if eb == 0.0 || a == b {
                    FiniteDistribution::point_mass(v, eps)
                } else {
                    FiniteDistribution::uniform(a, b)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { width, height, model: Some(Model::Uniform), normalization: Normalization::IDENTITY, distributions })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn model(&self) -> Option<Model> {
        self.model
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn distributions(&self) -> &[FiniteDistribution] {
        &self.distributions
    }

    pub fn get(&self, x: usize, y: usize) -> &FiniteDistribution {
        &self.distributions[y * self.width + x]
    }
}

/// Per-pixel normal noise fitted by sample mean and standard deviation.
#[derive(Debug, Clone)]
pub struct GaussianField {
    pub width: usize,
    pub height: usize,
    pub samplers: Vec<GaussianSampler>,
}

impl GaussianField {
    pub fn from_ensemble(stack: &EnsembleStack) -> Result<Self> {
        let samplers = (0..stack.width * stack.height)
            .map(|i| GaussianSampler::from_samples(&stack.pixel_samples(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { width: stack.width, height: stack.height, samplers })
    }
}

/// Whether `(x, y)` has all four axis neighbors.
pub fn is_interior(width: usize, height: usize, x: usize, y: usize) -> bool {
    x > 0 && y > 0 && x + 1 < width && y + 1 < height
}

/// Probability triples per pixel; boundary pixels are invalid and carry zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityField {
    pub width: usize,
    pub height: usize,
    pub triples: Vec<ProbabilityTriple>,
    pub valid: Vec<bool>,
}

impl ProbabilityField {
    pub fn new(width: usize, height: usize, triples: Vec<ProbabilityTriple>, valid: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimensions);
        }
        if triples.len() != width * height || valid.len() != width * height {
            return Err(Error::ShapeMismatch);
        }
        Ok(Self { width, height, triples, valid })
    }

    pub fn get(&self, x: usize, y: usize) -> Option<ProbabilityTriple> {
        let i = y * self.width + x;
        self.valid[i].then_some(self.triples[i])
    }

    pub fn channel(&self, pattern: Pattern) -> ChannelField {
        ChannelField {
            width: self.width,
            height: self.height,
            values: self.triples.iter().map(|t| t.get(pattern)).collect(),
            valid: self.valid.clone(),
        }
    }
}

/// One probability channel per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl ChannelField {
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let i = y * self.width + x;
        self.valid[i].then_some(self.values[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stack_validation() {
        assert!(matches!(EnsembleStack::new(0, 2, 1, vec![]), Err(Error::ZeroDimensions)));
        assert!(matches!(EnsembleStack::new(2, 2, 1, vec![0.0; 3]), Err(Error::PayloadLength { .. })));
        assert!(matches!(EnsembleStack::new(1, 1, 1, vec![f32::NAN]), Err(Error::NonFinite)));
        let s = EnsembleStack::new(2, 1, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.pixel_samples(1), vec![2.0, 4.0]);
        assert_eq!(s.value_range(), (1.0, 4.0));
        assert_eq!(s.select_members([1]).unwrap().values(), &[3.0, 4.0]);
    }

    #[test]
    fn scalar_field_bounds() {
        let f = UncertainField::uniform_from_scalar(2, 1, &[1.0, 5.0], 0.5).unwrap();
        assert_eq!(f.get(0, 0).support().lo, 0.75);
        assert_eq!(f.get(1, 0).support().hi, 5.25);
        for d in f.distributions() {
            assert!((d.support().width() - 0.5).abs() < 1e-15);
        }
        let z = UncertainField::uniform_from_scalar(2, 1, &[1.0, 5.0], 0.0).unwrap();
        assert!(z.distributions().iter().all(FiniteDistribution::is_degenerate));
        let c = UncertainField::uniform_from_scalar(2, 2, &[3.0; 4], 0.1).unwrap();
        assert!(c.distributions().windows(2).all(|w| w[0] == w[1]));
        assert!(UncertainField::uniform_from_scalar(1, 1, &[f64::NAN], 0.1).is_err());
        assert!(UncertainField::uniform_from_scalar(1, 1, &[1.0], -1.0).is_err());
    }

    #[test]
    fn normalization_maps_to_unit_interval() {
        let s = EnsembleStack::new(2, 1, 2, vec![10.0, 20.0, 30.0, 50.0]).unwrap();
        let f = UncertainField::from_ensemble(&s, Model::Uniform, true).unwrap();
        assert_eq!(f.get(0, 0).support().lo, 0.0);
        assert_eq!(f.get(1, 0).support().hi, 1.0);
        let raw = UncertainField::from_ensemble(&s, Model::Uniform, false).unwrap();
        assert_eq!(raw.get(1, 0).support().hi, 50.0);
    }
}
