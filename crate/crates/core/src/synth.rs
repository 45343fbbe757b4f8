//! Seeded synthetic ensembles and random test cases.

use rand::Rng;

use crate::critprob::NeighborhoodCase;
use crate::distrib::FiniteDistribution;
use crate::error::{Error, Result};
use crate::field::{EnsembleStack, Model};
use crate::rng::{rng_from_seed, stream};

/// Ackley test function, global minimum 0 at the origin.
pub fn ackley(x: f64, y: f64) -> f64 {
    use std::f64::consts::{E, TAU};
    -20.0 * (-0.2 * (0.5 * (x * x + y * y)).sqrt()).exp() - (0.5 * ((TAU * x).cos() + (TAU * y).cos())).exp()
        + E
        + 20.0
}

fn grid_coord(i: usize, n: usize) -> f64 {
    if n == 1 {
        0.0
    } else {
        -5.0 + 10.0 * i as f64 / (n - 1) as f64
    }
}

/// Ackley sampled on `[-5, 5]²` without noise.
pub fn ackley_base(width: usize, height: usize) -> Vec<f64> {
    (0..width * height)
        .map(|i| ackley(grid_coord(i % width, width), grid_coord(i / width, height)))
        .collect()
}

/// Ackley base field plus i.i.d. uniform noise in `[-noise_amp, noise_amp]`
/// per member and pixel. Member `m` draws from stream `m` of `seed`.
pub fn ackley_ensemble(width: usize, height: usize, members: usize, noise_amp: f64, seed: u64) -> Result<EnsembleStack> {
    if width == 0 || height == 0 || members == 0 {
        return Err(Error::ZeroDimensions);
    }
    if !(noise_amp >= 0.0) || !noise_amp.is_finite() {
        return Err(Error::InvalidParameter(format!("noise amplitude must be >= 0, got {noise_amp}")));
    }
    let base = ackley_base(width, height);
    let mut values = Vec::with_capacity(members * base.len());
    for m in 0..members {
        let mut rng = stream(seed, m as u64);
        values.extend(base.iter().map(|b| {
            let u: f64 = rng.random();
            (b + noise_amp * (2.0 * u - 1.0)) as f32
        }));
    }
    EnsembleStack::new(width, height, members, values)
}

/// Members that are pure i.i.d. uniform noise around zero.
pub fn flat_noise_ensemble(width: usize, height: usize, members: usize, noise_amp: f64, seed: u64) -> Result<EnsembleStack> {
    if width == 0 || height == 0 || members == 0 {
        return Err(Error::ZeroDimensions);
    }
    let mut values = Vec::with_capacity(members * width * height);
    for m in 0..members {
        let mut rng = stream(seed, m as u64);
        values.extend((0..width * height).map(|_| (noise_amp * (2.0 * rng.random::<f64>() - 1.0)) as f32));
    }
    EnsembleStack::new(width, height, members, values)
}

/// Shape and noise parameters of the two-bump mixture ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    /// Bump standard deviation in pixels.
    pub sigma_px: f64,
    /// Curvature of the radially symmetric background bowl, in normalized
    /// coordinates.
    pub bowl: f64,
    /// Per-member relative jitter of the bump amplitude.
    pub jitter: f64,
    /// Per-pixel uniform noise amplitude.
    pub noise: f64,
}

impl Default for MixtureParams {
    fn default() -> Self {
        Self { sigma_px: 4.0, bowl: 0.1, jitter: 0.02, noise: 1e-4 }
    }
}

/// Peak positions of the two-bump mixture, as `(x, y)` pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePeaks {
    /// Northwest and southeast bumps of the true members.
    pub true_peaks: Vec<(usize, usize)>,
    /// Northeast and southwest bumps of the rotated members.
    pub outlier_peaks: Vec<(usize, usize)>,
}

pub fn mixture_peaks(width: usize, height: usize) -> MixturePeaks {
    let px = (0.3 * (width - 1) as f64).round() as usize;
    let py = (0.3 * (height - 1) as f64).round() as usize;
    let (qx, qy) = (width - 1 - px, height - 1 - py);
    MixturePeaks { true_peaks: vec![(px, py), (qx, qy)], outlier_peaks: vec![(qx, py), (px, qy)] }
}

/// Noiseless mixture: two Gaussian bumps on the NW–SE diagonal (or NE–SW when
/// `rotated`) on top of a shallow bowl centered in the grid. The bowl keeps
/// the background free of flat regions.
pub fn mixture_base(width: usize, height: usize, rotated: bool) -> Vec<f64> {
    mixture_field(width, height, rotated, 1.0, &MixtureParams::default())
}

fn mixture_field(width: usize, height: usize, rotated: bool, amplitude: f64, params: &MixtureParams) -> Vec<f64> {
    let peaks = mixture_peaks(width, height);
    let centers = if rotated { peaks.outlier_peaks } else { peaks.true_peaks };
    let cx = 0.5 * (width - 1) as f64;
    let cy = 0.5 * (height - 1) as f64;
    let sx = (width - 1).max(1) as f64;
    let sy = (height - 1).max(1) as f64;
    let two_s2 = 2.0 * params.sigma_px * params.sigma_px;
    (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64, (i / width) as f64);
            let bowl = params.bowl * (((x - cx) / sx).powi(2) + ((y - cy) / sy).powi(2));
            let bumps: f64 = centers
                .iter()
                .map(|&(px, py)| {
                    let (dx, dy) = (x - px as f64, y - py as f64);
                    (-(dx * dx + dy * dy) / two_s2).exp()
                })
                .sum();
            bowl + amplitude * bumps
        })
        .collect()
}

/// Rotates a square raster by 90°: pixel `(x, y)` moves to `(n-1-y, x)`.
pub fn rotate_quarter(values: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            out[x * n + (n - 1 - y)] = values[y * n + x];
        }
    }
    out
}

/// Two-bump ensemble with outliers.
///
/// The first `true_members` members carry the NW–SE bumps with a small
/// per-member amplitude jitter and per-pixel noise. Each of the following
/// `outlier_members` members is the 90° rotation of a true member, so its
/// bumps sit on the NE–SW diagonal. Outliers require a square grid.
pub fn gaussian_mixture_ensemble(
    width: usize,
    height: usize,
    true_members: usize,
    outlier_members: usize,
    seed: u64,
) -> Result<(EnsembleStack, MixturePeaks)> {
    gaussian_mixture_ensemble_with(width, height, true_members, outlier_members, seed, &MixtureParams::default())
}

/// [`gaussian_mixture_ensemble`] with explicit shape and noise parameters.
pub fn gaussian_mixture_ensemble_with(
    width: usize,
    height: usize,
    true_members: usize,
    outlier_members: usize,
    seed: u64,
    params: &MixtureParams,
) -> Result<(EnsembleStack, MixturePeaks)> {
    if width == 0 || height == 0 || true_members + outlier_members == 0 {
        return Err(Error::ZeroDimensions);
    }
    if outlier_members > 0 && (width != height || true_members == 0) {
        return Err(Error::InvalidParameter(
            "rotated outlier members need a square grid and at least one true member".into(),
        ));
    }
    let n = width * height;
    let truth: Vec<Vec<f64>> = (0..true_members)
        .map(|m| {
            let mut rng = stream(seed, m as u64);
            let amplitude = 1.0 + params.jitter * (2.0 * rng.random::<f64>() - 1.0);
            mixture_field(width, height, false, amplitude, params)
                .into_iter()
                .map(|v| v + params.noise * (2.0 * rng.random::<f64>() - 1.0))
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity((true_members + outlier_members) * n);
    for member in &truth {
        values.extend(member.iter().map(|&v| v as f32));
    }
    for j in 0..outlier_members {
        values.extend(rotate_quarter(&truth[j % true_members], width).into_iter().map(|v| v as f32));
    }
    let stack = EnsembleStack::new(width, height, true_members + outlier_members, values)?;
    Ok((stack, mixture_peaks(width, height)))
}

/// Random neighborhood for fuzzing: every variable gets a center in `[0, 1]`
/// and a half-width in `[0.25, 0.75]`, so any two supports overlap with
/// probability at least 3/4. Histograms get random bin weights, some zero.
pub fn random_case(seed: u64, model: &Model, neighborhood: usize) -> NeighborhoodCase {
    let mut rng = rng_from_seed(seed ^ 0x5EED_CA5E_0000_0000);
    let count = if neighborhood == 2 { 3 } else { 5 };
    let mut draw = || {
        let c: f64 = rng.random();
        let r = 0.25 + 0.5 * rng.random::<f64>();
        match *model {
            Model::Uniform => FiniteDistribution::uniform(c - r, c + r).unwrap(),
            Model::Epanechnikov { .. } => FiniteDistribution::epanechnikov(c, r).unwrap(),
            Model::Histogram { bins } => {
                let mut w: Vec<f64> =
                    (0..bins.max(1)).map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random() }).collect();
                if w.iter().all(|&x| x == 0.0) {
                    let k = rng.random_range(0..w.len());
                    w[k] = 1.0;
                }
                FiniteDistribution::histogram(c - r, c + r, &w).unwrap()
            }
        }
    };
    let center = draw();
    let neighbors = (1..count).map(|_| draw()).collect();
    NeighborhoodCase::new(center, neighbors).expect("2 or 4 neighbors")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ackley_minimum_at_origin() {
        assert!(ackley(0.0, 0.0).abs() < 1e-14);
        assert!(ackley(1.0, 1.0) > 3.0);
        let base = ackley_base(11, 11);
        assert!(base[5 * 11 + 5].abs() < 1e-14);
    }

    #[test]
    fn ackley_noise_free_members_are_identical() {
        let s = ackley_ensemble(8, 6, 4, 0.0, 1).unwrap();
        for m in 1..4 {
            assert_eq!(s.member(m), s.member(0));
        }
        let f = crate::field::UncertainField::from_ensemble(&s, Model::Uniform, false).unwrap();
        assert!(f.distributions().iter().all(FiniteDistribution::is_degenerate));
    }

    #[test]
    fn ackley_determinism_and_noise_bounds() {
        let a = ackley_ensemble(10, 10, 5, 0.5, 42).unwrap();
        assert_eq!(a, ackley_ensemble(10, 10, 5, 0.5, 42).unwrap());
        assert_ne!(a, ackley_ensemble(10, 10, 5, 0.5, 43).unwrap());
        let base = ackley_base(10, 10);
        for m in 0..5 {
            for (v, b) in a.member(m).iter().zip(&base) {
                assert!((*v as f64 - b).abs() <= 0.5 + 1e-5);
            }
        }
        assert!(ackley_ensemble(0, 10, 5, 0.5, 1).is_err());
        assert!(ackley_ensemble(10, 10, 5, -1.0, 1).is_err());
    }

    #[test]
    fn mixture_default_split_and_rotation() {
        let (s, peaks) = gaussian_mixture_ensemble(33, 33, 40, 10, 7).unwrap();
        assert_eq!(s.members(), 50);
        let base = mixture_base(33, 33, false);
        assert_eq!(rotate_quarter(&base, 33), mixture_base(33, 33, true));
        let rot = |(x, y): (usize, usize)| (32 - y, x);
        let rotated: Vec<_> = peaks.true_peaks.iter().map(|&p| rot(p)).collect();
        assert_eq!(rotated, peaks.outlier_peaks);
        assert!(gaussian_mixture_ensemble(0, 4, 40, 10, 1).is_err());
        assert!(gaussian_mixture_ensemble(20, 30, 40, 10, 1).is_err());
        assert!(gaussian_mixture_ensemble(20, 30, 40, 0, 1).is_ok());
    }

    #[test]
    fn outliers_change_range_only_near_rotated_bumps() {
        let n = 41;
        let (s, peaks) = gaussian_mixture_ensemble(n, n, 40, 10, 3).unwrap();
        let truth = s.select_members(0..40).unwrap();
        let near = |x: usize, y: usize, ps: &[(usize, usize)]| {
            ps.iter().any(|&(px, py)| {
                let (dx, dy) = (x as f64 - px as f64, y as f64 - py as f64);
                (dx * dx + dy * dy).sqrt() < 6.0 * MixtureParams::default().sigma_px
            })
        };
        for i in 0..n * n {
            let (x, y) = (i % n, i / n);
            let all = s.pixel_samples(i);
            let tr = truth.pixel_samples(i);
            let max_gap = all.iter().copied().fold(f64::MIN, f64::max) - tr.iter().copied().fold(f64::MIN, f64::max);
            let min_gap = tr.iter().copied().fold(f64::MAX, f64::min) - all.iter().copied().fold(f64::MAX, f64::min);
            if peaks.outlier_peaks.contains(&(x, y)) {
                assert!(max_gap > 0.5);
            }
            if peaks.true_peaks.contains(&(x, y)) {
                assert!(min_gap > 0.5);
            }
            if !near(x, y, &peaks.outlier_peaks) && !near(x, y, &peaks.true_peaks) {
                assert!(max_gap <= 2.0 * MixtureParams::default().noise + 1e-6 && min_gap <= 2.0 * MixtureParams::default().noise + 1e-6, "({x},{y})");
            }
        }
    }

    #[test]
    fn random_cases_are_deterministic_and_valid() {
        let models = [Model::Uniform, Model::Epanechnikov { k: 1.0 }, Model::Histogram { bins: 4 }];
        for model in &models {
            assert_eq!(random_case(11, model, 4), random_case(11, model, 4));
            assert_eq!(random_case(11, model, 2).neighbor_count(), 2);
        }
        let mut overlaps = 0;
        let mut pairs = 0;
        for seed in 0..1000 {
            for model in &models {
                let c = random_case(seed, model, 4);
                let all: Vec<&FiniteDistribution> = std::iter::once(c.center()).chain(c.neighbors()).collect();
                for d in &all {
                    let s = d.support();
                    assert!(s.lo < s.hi);
                    assert!((d.pdf().integrate(s.lo, s.hi).unwrap() - 1.0).abs() < 1e-10);
                }
                for i in 0..all.len() {
                    for j in i + 1..all.len() {
                        let (a, b) = (all[i].support(), all[j].support());
                        pairs += 1;
                        overlaps += (a.lo < b.hi && b.lo < a.hi) as usize;
                    }
                }
            }
        }
        assert!(overlaps as f64 / pairs as f64 >= 0.5);
    }
}
