//! Whole-field classification. Each interior pixel depends only on itself and
//! its four axis neighbors, so pixels are mapped independently in parallel.
//! Sampling estimators seed pixel `i` with `stream_seed(seed, i)`, so output
//! does not depend on the worker count or the schedule.

use rayon::prelude::*;

use super::monte_carlo::triple_from_counts;
use super::{
    closed_min, closed_saddle_term, combinatorial_triple_refs, mc_counts, semianalytical_triple_refs,
    EstimatorSpec, Method, Pattern, ProbabilityTriple,
};
use crate::distrib::FiniteDistribution;
use crate::error::{Error, Result};
use crate::field::{is_interior, ChannelField, GaussianField, ProbabilityField, UncertainField};
use crate::rng::{stream, stream_seed};

/// Neighbor indices of an interior pixel in east, north, west, south order.
pub fn neighbor_indices(width: usize, index: usize) -> [usize; 4] {
    [index + 1, index - width, index - 1, index + width]
}

/// Seed used for pixel `index` by the sampling estimators.
pub fn pixel_seed(seed: u64, index: usize) -> u64 {
    stream_seed(seed, index as u64)
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < 3 || height < 3 {
        return Err(Error::FieldTooSmall { width, height });
    }
    Ok(())
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn map_interior<T, F>(width: usize, height: usize, f: F) -> Result<Vec<Option<T>>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    (0..width * height)
        .into_par_iter()
        .with_min_len(16)
        .map(|i| {
            if is_interior(width, height, i % width, i / width) {
                f(i).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect()
}

fn assemble(width: usize, height: usize, cells: Vec<Option<ProbabilityTriple>>) -> Result<ProbabilityField> {
    let valid = cells.iter().map(Option::is_some).collect();
    let triples = cells.into_iter().map(Option::unwrap_or_default).collect();
    ProbabilityField::new(width, height, triples, valid)
}

fn gather<'a>(field: &'a [FiniteDistribution], width: usize, i: usize) -> [&'a FiniteDistribution; 4] {
    neighbor_indices(width, i).map(|j| &field[j])
}

struct Prepared<'a> {
    field: &'a UncertainField,
    negated: Option<Vec<FiniteDistribution>>,
}

impl<'a> Prepared<'a> {
    fn new(field: &'a UncertainField, spec: &EstimatorSpec, needs_negation: bool) -> Self {
        let negated = (spec.method == Method::ClosedForm && needs_negation)
            .then(|| field.distributions().par_iter().map(FiniteDistribution::negate).collect());
        Self { field, negated }
    }

    fn pattern(&self, spec: &EstimatorSpec, i: usize, pattern: Pattern) -> Result<f64> {
        let w = self.field.width();
        let d = self.field.distributions();
        match spec.method {
            Method::ClosedForm => {
                let neg = self.negated.as_deref();
                match pattern {
                    Pattern::Min => closed_min(&d[i], &gather(d, w, i)),
                    Pattern::Max => {
                        let neg = neg.expect("negated field");
                        closed_min(&neg[i], &gather(neg, w, i))
                    }
                    Pattern::Saddle => {
                        let neg = neg.expect("negated field");
                        Ok(closed_saddle_term(&d[i], &gather(d, w, i))?
                            + closed_saddle_term(&neg[i], &gather(neg, w, i))?)
                    }
                }
            }
            _ => Ok(self.triple(spec, i)?.get(pattern)),
        }
    }

    fn triple(&self, spec: &EstimatorSpec, i: usize) -> Result<ProbabilityTriple> {
        let w = self.field.width();
        let d = self.field.distributions();
        match spec.method {
            Method::ClosedForm => Ok(ProbabilityTriple {
                p_min: self.pattern(spec, i, Pattern::Min)?,
                p_max: self.pattern(spec, i, Pattern::Max)?,
                p_saddle: self.pattern(spec, i, Pattern::Saddle)?,
            }),
            Method::MonteCarlo { samples } => {
                let mut rng = stream(spec.seed, i as u64);
                let counts = mc_counts(&&d[i], &gather(d, w, i), samples, &mut rng)?;
                Ok(triple_from_counts(counts, samples))
            }
            Method::Semianalytical { samples } => {
                let mut rng = stream(spec.seed, i as u64);
                semianalytical_triple_refs(&d[i], &gather(d, w, i), samples, &mut rng)
            }
            Method::Combinatorial => combinatorial_triple_refs(&d[i], &gather(d, w, i)),
        }
    }
}

/// All three probabilities at every interior pixel, using the ambient rayon
/// pool.
pub fn classify_field(field: &UncertainField, spec: &EstimatorSpec) -> Result<ProbabilityField> {
    check_dims(field.width(), field.height())?;
    spec.validate()?;
    let prepared = Prepared::new(field, spec, true);
    let cells = map_interior(field.width(), field.height(), |i| prepared.triple(spec, i))?;
    assemble(field.width(), field.height(), cells)
}

/// [`classify_field`] on a dedicated pool of `workers` threads.
pub fn classify_field_with_workers(
    field: &UncertainField,
    spec: &EstimatorSpec,
    workers: usize,
) -> Result<ProbabilityField> {
    with_workers(Some(workers), || classify_field(field, spec))?
}

/// A single probability channel. For sampling estimators the value equals the
/// corresponding channel of [`classify_field`] with the same seed.
pub fn classify_pattern(
    field: &UncertainField,
    spec: &EstimatorSpec,
    pattern: Pattern,
    workers: Option<usize>,
) -> Result<ChannelField> {
    check_dims(field.width(), field.height())?;
    spec.validate()?;
    with_workers(workers, || {
        let prepared = Prepared::new(field, spec, pattern != Pattern::Min);
        let cells = map_interior(field.width(), field.height(), |i| prepared.pattern(spec, i, pattern))?;
        Ok(ChannelField {
            width: field.width(),
            height: field.height(),
            valid: cells.iter().map(Option::is_some).collect(),
            values: cells.into_iter().map(|c| c.unwrap_or(0.0)).collect(),
        })
    })?
}

/// Monte Carlo classification under independent Gaussian noise.
pub fn classify_gaussian_mc(
    field: &GaussianField,
    samples: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<ProbabilityField> {
    check_dims(field.width, field.height)?;
    EstimatorSpec::monte_carlo(samples, seed).validate()?;
    with_workers(workers, || {
        let s = &field.samplers;
        let cells = map_interior(field.width, field.height, |i| {
            let mut rng = stream(seed, i as u64);
            let nb = neighbor_indices(field.width, i).map(|j| s[j]);
            Ok(triple_from_counts(mc_counts(&s[i], &nb, samples, &mut rng)?, samples))
        })?;
        assemble(field.width, field.height, cells)
    })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critprob::{estimate, mc_triple, NeighborhoodCase};
    use crate::field::{EnsembleStack, Model};
    use crate::synth::ackley_ensemble;

    fn small_field(model: Model) -> UncertainField {
        let stack = ackley_ensemble(12, 9, 20, 0.5, 3).unwrap();
        UncertainField::from_ensemble(&stack, model, true).unwrap()
    }

    fn case_at(field: &UncertainField, i: usize) -> NeighborhoodCase<&FiniteDistribution> {
        let d = field.distributions();
        NeighborhoodCase::new(&d[i], gather(d, field.width(), i).to_vec()).unwrap()
    }

    #[test]
    fn boundary_frame_is_masked() {
        let f = small_field(Model::Uniform);
        let p = classify_field(&f, &EstimatorSpec::closed_form()).unwrap();
        for y in 0..9 {
            for x in 0..12 {
                let frame = x == 0 || y == 0 || x == 11 || y == 8;
                assert_eq!(p.get(x, y).is_none(), frame, "({x},{y})");
            }
        }
    }

    #[test]
    fn pixels_match_single_case_calls() {
        for model in [Model::Uniform, Model::Epanechnikov { k: 2.0 }, Model::Histogram { bins: 3 }] {
            let f = small_field(model);
            let closed = classify_field(&f, &EstimatorSpec::closed_form()).unwrap();
            let mc = classify_field(&f, &EstimatorSpec::monte_carlo(500, 8)).unwrap();
            for y in 1..8 {
                for x in 1..11 {
                    let i = y * 12 + x;
                    let case = case_at(&f, i);
                    assert_eq!(closed.get(x, y).unwrap(), estimate(&case, &EstimatorSpec::closed_form()).unwrap());
                    assert_eq!(mc.get(x, y).unwrap(), mc_triple(&case, 500, pixel_seed(8, i)).unwrap());
                }
            }
        }
    }

    #[test]
    fn single_channels_agree_with_full_classification() {
        let f = small_field(Model::Histogram { bins: 4 });
        for spec in [EstimatorSpec::closed_form(), EstimatorSpec::monte_carlo(300, 1), EstimatorSpec::semianalytical(300, 2)] {
            let full = classify_field(&f, &spec).unwrap();
            for pattern in Pattern::ALL {
                assert_eq!(classify_pattern(&f, &spec, pattern, Some(2)).unwrap(), full.channel(pattern));
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let f = small_field(Model::Histogram { bins: 3 });
        for spec in [EstimatorSpec::closed_form(), EstimatorSpec::monte_carlo(200, 4), EstimatorSpec::semianalytical(200, 4)] {
            let one = classify_field_with_workers(&f, &spec, 1).unwrap();
            let four = classify_field_with_workers(&f, &spec, 4).unwrap();
            assert_eq!(one, four);
        }
    }

    #[test]
    fn iid_noise_on_flat_field() {
        let stack = crate::synth::flat_noise_ensemble(10, 10, 30, 1.0, 5).unwrap();
        let f = UncertainField::from_ensemble(&stack, Model::Uniform, false).unwrap();
        let p = classify_field(&f, &EstimatorSpec::closed_form()).unwrap();
        // Fitted ranges differ a little between pixels, so only roughly symmetric.
        let interior: Vec<ProbabilityTriple> = (0..100).filter_map(|i| p.get(i % 10, i / 10)).collect();
        let mean = |g: fn(&ProbabilityTriple) -> f64| interior.iter().map(g).sum::<f64>() / interior.len() as f64;
        assert!((mean(|t| t.p_min) - 0.2).abs() < 0.03);
        assert!((mean(|t| t.p_max) - 0.2).abs() < 0.03);
        assert!((mean(|t| t.p_saddle) - 1.0 / 15.0).abs() < 0.02);
        // Exactly identical pixels hit the symmetric values.
        let same = EnsembleStack::new(3, 3, 2, [vec![0.0f32; 9], vec![1.0f32; 9]].concat()).unwrap();
        let f = UncertainField::from_ensemble(&same, Model::Uniform, false).unwrap();
        let t = classify_field(&f, &EstimatorSpec::closed_form()).unwrap().get(1, 1).unwrap();
        assert!((t.p_min - 0.2).abs() < 1e-12 && (t.p_saddle - 1.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn too_small_fields_are_rejected() {
        let stack = EnsembleStack::new(2, 5, 2, vec![0.0; 20]).unwrap();
        let f = UncertainField::from_ensemble(&stack, Model::Uniform, false).unwrap();
        assert!(matches!(
            classify_field(&f, &EstimatorSpec::closed_form()),
            Err(Error::FieldTooSmall { width: 2, height: 5 })
        ));
    }

    #[test]
    fn gaussian_mc_is_deterministic() {
        let stack = ackley_ensemble(8, 8, 10, 0.3, 1).unwrap();
        let g = GaussianField::from_ensemble(&stack).unwrap();
        let a = classify_gaussian_mc(&g, 200, 3, Some(1)).unwrap();
        let b = classify_gaussian_mc(&g, 200, 3, Some(3)).unwrap();
        assert_eq!(a, b);
    }
}
