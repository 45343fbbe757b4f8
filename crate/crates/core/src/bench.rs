//! Accuracy and timing harness: Monte Carlo convergence against the closed
//! form, wall-clock comparisons between estimators, and the outlier
//! robustness score on two-bump ensembles.

use std::fmt::{self, Write as _};
use std::time::Instant;

use crate::critprob::{classify_pattern, EstimatorSpec, Method, Pattern};
use crate::error::{Error, Result};
use crate::field::{is_interior, ChannelField, EnsembleStack, Model, ProbabilityField, UncertainField};

fn check_same(a: &ChannelField, b: &ChannelField) -> Result<()> {
    if a.width != b.width || a.height != b.height || a.valid != b.valid {
        return Err(Error::ShapeMismatch);
    }
    Ok(())
}

fn paired<'a>(a: &'a ChannelField, b: &'a ChannelField) -> Result<impl Iterator<Item = f64> + 'a> {
    check_same(a, b)?;
    Ok(a.values.iter().zip(&b.values).zip(&a.valid).filter(|(_, &v)| v).map(|((x, y), _)| x - y))
}

/// Root mean squared difference over unmasked pixels. A fully masked pair
/// gives 0.
pub fn rmse_channel(a: &ChannelField, b: &ChannelField) -> Result<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for d in paired(a, b)? {
        sum += d * d;
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { (sum / n as f64).sqrt() })
}

pub fn max_abs_diff_channel(a: &ChannelField, b: &ChannelField) -> Result<f64> {
    Ok(paired(a, b)?.fold(0.0, |m, d| f64::max(m, d.abs())))
}

pub fn rmse(a: &ProbabilityField, b: &ProbabilityField, pattern: Pattern) -> Result<f64> {
    rmse_channel(&a.channel(pattern), &b.channel(pattern))
}

pub fn max_abs_diff(a: &ProbabilityField, b: &ProbabilityField, pattern: Pattern) -> Result<f64> {
    max_abs_diff_channel(&a.channel(pattern), &b.channel(pattern))
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Monte Carlo error against the closed form for a list of sample counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub pattern: Pattern,
    pub seed: u64,
    pub sample_counts: Vec<usize>,
    pub rmse_per_count: Vec<f64>,
    pub max_abs_per_count: Vec<f64>,
    /// Seconds per Monte Carlo run.
    pub wall_times: Vec<f64>,
    /// Seconds for the closed-form reference.
    pub reference_time: f64,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pattern,samples,rmse,max_abs,seconds\n");
        writeln!(s, "{},closed,0,0,{}", self.pattern.name(), self.reference_time).unwrap();
        for i in 0..self.sample_counts.len() {
            writeln!(
                s,
                "{},{},{:e},{:e},{}",
                self.pattern.name(),
                self.sample_counts[i],
                self.rmse_per_count[i],
                self.max_abs_per_count[i],
                self.wall_times[i]
            )
            .unwrap();
        }
        s
    }
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "convergence of p_{} (seed {}), closed form {:.3} s", self.pattern.name(), self.seed, self.reference_time)?;
        writeln!(f, "{:>8}  {:>12}  {:>12}  {:>9}", "samples", "rmse", "max |diff|", "seconds")?;
        for i in 0..self.sample_counts.len() {
            writeln!(
                f,
                "{:>8}  {:>12.3e}  {:>12.3e}  {:>9.3}",
                self.sample_counts[i], self.rmse_per_count[i], self.max_abs_per_count[i], self.wall_times[i]
            )?;
        }
        Ok(())
    }
}

/// Runs Monte Carlo at each count in `counts` (nonempty, strictly
/// increasing) and compares it to the closed form on the same channel.
pub fn convergence_study(
    field: &UncertainField,
    pattern: Pattern,
    counts: &[usize],
    seed: u64,
) -> Result<ConvergenceReport> {
    if counts.is_empty() || counts.windows(2).any(|w| w[0] >= w[1]) || counts[0] == 0 {
        return Err(Error::InvalidParameter("sample counts must be nonempty, positive and increasing".into()));
    }
    let (reference, reference_time) =
        timed(|| classify_pattern(field, &EstimatorSpec::closed_form(), pattern, None))?;
    let mut report = ConvergenceReport {
        pattern,
        seed,
        sample_counts: counts.to_vec(),
        rmse_per_count: Vec::with_capacity(counts.len()),
        max_abs_per_count: Vec::with_capacity(counts.len()),
        wall_times: Vec::with_capacity(counts.len()),
        reference_time,
    };
    for &n in counts {
        let (mc, t) = timed(|| classify_pattern(field, &EstimatorSpec::monte_carlo(n, seed), pattern, None))?;
        report.rmse_per_count.push(rmse_channel(&mc, &reference)?);
        report.max_abs_per_count.push(max_abs_diff_channel(&mc, &reference)?);
        report.wall_times.push(t);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub estimator: EstimatorSpec,
    pub pattern: Pattern,
    /// Median wall time in seconds.
    pub median: f64,
    pub runs: Vec<f64>,
    /// Median time of the Monte Carlo baseline divided by this row's median.
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub workers: usize,
    pub width: usize,
    pub height: usize,
    pub rows: Vec<TimingRow>,
}

impl TimingReport {
    pub fn row(&self, estimator: &EstimatorSpec, pattern: Pattern) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.estimator == *estimator && r.pattern == pattern)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("estimator,pattern,workers,median_seconds,speedup\n");
        for r in &self.rows {
            let speedup = r.speedup.map(|x| x.to_string()).unwrap_or_default();
            writeln!(s, "{},{},{},{},{}", r.estimator.label(), r.pattern.name(), self.workers, r.median, speedup)
                .unwrap();
        }
        s
    }
}

impl fmt::Display for TimingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "timings on {}x{} with {} worker(s)", self.width, self.height, self.workers)?;
        writeln!(f, "{:<12} {:<7} {:>10}  {:>8}", "estimator", "pattern", "median s", "speedup")?;
        for r in &self.rows {
            let speedup = r.speedup.map(|x| format!("{x:.1}x")).unwrap_or_else(|| "-".into());
            writeln!(f, "{:<12} {:<7} {:>10.4}  {:>8}", r.estimator.label(), r.pattern.name(), r.median, speedup)?;
        }
        Ok(())
    }
}

pub const TIMING_REPEATS: usize = 5;

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median of [`TIMING_REPEATS`] runs for every estimator and pattern on a pool
/// of `workers` threads. Speedups are relative to the Monte Carlo estimator
/// with the most samples, per pattern.
pub fn timing_report(
    field: &UncertainField,
    estimators: &[EstimatorSpec],
    patterns: &[Pattern],
    workers: usize,
) -> Result<TimingReport> {
    let workers = workers.max(1);
    let mut rows = Vec::new();
    for &pattern in patterns {
        for est in estimators {
            let runs = (0..TIMING_REPEATS)
                .map(|_| timed(|| classify_pattern(field, est, pattern, Some(workers))).map(|(_, t)| t))
                .collect::<Result<Vec<_>>>()?;
            rows.push(TimingRow { estimator: *est, pattern, median: median(runs.clone()), runs, speedup: None });
        }
    }
    let baseline = estimators
        .iter()
        .filter_map(|e| match e.method {
            Method::MonteCarlo { samples } => Some((samples, *e)),
            _ => None,
        })
        .max_by_key(|(n, _)| *n)
        .map(|(_, e)| e);
    if let Some(base) = baseline {
        for &pattern in patterns {
            let t = rows.iter().find(|r| r.estimator == base && r.pattern == pattern).map(|r| r.median).unwrap();
            for r in rows.iter_mut().filter(|r| r.pattern == pattern) {
                r.speedup = Some(t / r.median);
            }
        }
    }
    Ok(TimingReport { workers, width: field.width(), height: field.height(), rows })
}

fn window_mean(channel: &ChannelField, peaks: &[(usize, usize)]) -> Result<f64> {
    let (w, h) = (channel.width, channel.height);
    let mut sum = 0.0;
    for &(x, y) in peaks {
        if x < 2 || y < 2 || x + 2 >= w || y + 2 >= h {
            return Err(Error::PeakOnBoundary { x, y });
        }
        for yy in y - 1..=y + 1 {
            for xx in x - 1..=x + 1 {
                debug_assert!(is_interior(w, h, xx, yy));
                sum += channel.values[yy * w + xx];
            }
        }
    }
    Ok(sum / (9 * peaks.len()) as f64)
}

/// Mean closed-form `p_max` over 3×3 windows around `true_peaks` divided by
/// the same mean around `outlier_peaks`. Values above 1 mean the model favors
/// the true maxima. Windows must lie inside the classified interior.
pub fn robustness_ratio(
    stack: &EnsembleStack,
    model: Model,
    true_peaks: &[(usize, usize)],
    outlier_peaks: &[(usize, usize)],
) -> Result<f64> {
    if true_peaks.is_empty() || outlier_peaks.is_empty() {
        return Err(Error::InvalidParameter("peak lists must be nonempty".into()));
    }
    let field = UncertainField::from_ensemble(stack, model, true)?;
    let p_max = classify_pattern(&field, &EstimatorSpec::closed_form(), Pattern::Max, None)?;
    let num = window_mean(&p_max, true_peaks)?;
    let den = window_mean(&p_max, outlier_peaks)?;
    Ok(if den == 0.0 { f64::INFINITY } else { num / den })
}
