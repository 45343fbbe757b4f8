use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use ucrit::bench::{convergence_study, robustness_ratio, timing_report};
use ucrit::critprob::{
    classify_field_with_workers, classify_gaussian_mc, estimate, mc_triple, EstimatorSpec, Method,
    Pattern, MAX_COMBINATORIAL_BINS,
};
use ucrit::field::{GaussianField, Model, ProbabilityField, UncertainField};
use ucrit::field_io::{
    export_heatmap, load_ensemble, load_scalar, save_ensemble, save_probability_field, FieldFormat,
};
use ucrit::synth::{ackley_ensemble, gaussian_mixture_ensemble, random_case};

#[derive(Parser, Debug)]
#[command(name = "ucrit", version, about = "Critical point probabilities for uncertain 2D scalar fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify an ensemble file into min/max/saddle probabilities.
    Compute(ComputeArgs),
    /// Classify a single scalar raster with uniform noise of width --eb.
    FromScalar(FromScalarArgs),
    /// Write a synthetic ensemble.
    Synth(SynthArgs),
    /// Compare the closed form against Monte Carlo on random neighborhoods.
    Validate(ValidateArgs),
    /// Convergence, timing and outlier robustness reports.
    Bench(BenchArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Uniform,
    Epanechnikov,
    Histogram,
    GaussianMc,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum EstimatorKind {
    Closed,
    Mc,
    Semi,
    Comb,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Channel {
    Min,
    Max,
    Saddle,
}

impl From<Channel> for Pattern {
    fn from(c: Channel) -> Self {
        match c {
            Channel::Min => Pattern::Min,
            Channel::Max => Pattern::Max,
            Channel::Saddle => Pattern::Saddle,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Uniform)]
    model: ModelKind,
    /// Histogram bin count.
    #[arg(long, default_value_t = 5)]
    bins: usize,
    /// Epanechnikov half-width in sample standard deviations.
    #[arg(long, default_value_t = 5f64.sqrt())]
    k: f64,
    /// Map the ensemble onto [0, 1] before fitting.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    normalize: Toggle,
}

#[derive(Args, Debug, Clone)]
struct EstimatorArgs {
    #[arg(long, value_enum, default_value_t = EstimatorKind::Closed)]
    estimator: EstimatorKind,
    /// Monte Carlo draws per pixel.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    /// Center samples per pixel for the semianalytical estimator.
    #[arg(long = "c", default_value_t = 10_000)]
    c: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Probability field output; `.csv` selects CSV, anything else UCVF.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grayscale PGM of one channel.
    #[arg(long)]
    heatmap: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Channel::Max)]
    channel: Channel,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct ComputeArgs {
    /// Ensemble in UCVF format, one channel per member.
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct FromScalarArgs {
    /// Single-channel UCVF raster.
    input: PathBuf,
    /// Total width of the uniform error interval around each value.
    #[arg(long)]
    eb: f64,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    Ackley,
    Mixture,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(value_enum)]
    kind: SynthKind,
    /// Grid width and height (default 64 for ackley, 128 for mixture).
    #[arg(long)]
    size: Option<usize>,
    /// Ackley members, or true members of the mixture.
    #[arg(long)]
    members: Option<usize>,
    /// Rotated outlier members of the mixture.
    #[arg(long, default_value_t = 10)]
    outliers: usize,
    /// Ackley noise amplitude.
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, default_value_t = 100)]
    cases: u64,
    #[arg(long, value_enum, default_value_t = ModelKind::Uniform)]
    model: ModelKind,
    #[arg(long, default_value_t = 5)]
    bins: usize,
    #[arg(long, default_value_t = 5f64.sqrt())]
    k: f64,
    /// Monte Carlo draws per case.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Neighbors per case: 2 or 4.
    #[arg(long, default_value_t = 4)]
    neighbors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Ackley grid size for the convergence and timing reports.
    #[arg(long, default_value_t = 64)]
    size: usize,
    #[arg(long, default_value_t = 50)]
    members: usize,
    /// Monte Carlo sample counts for the convergence study.
    #[arg(long, value_delimiter = ',', default_values_t = [100, 500, 1000, 2000])]
    counts: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Channel::Min)]
    channel: Channel,
    /// Mixture grid size for the robustness report (0 skips it).
    #[arg(long, default_value_t = 128)]
    mixture_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for CSV copies of the reports.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Distinguishes bad invocations (exit 2) from failures while working (exit 1).
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<ucrit::Error>() {
            Some(ucrit::Error::InvalidParameter(_) | ucrit::Error::TooManyBins { .. } | ucrit::Error::NotHistogram) => {
                Failure::Usage(format!("{e:#}"))
            }
            _ => Failure::Runtime(e),
        }
    }
}

impl From<ucrit::Error> for Failure {
    fn from(e: ucrit::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Fully resolved settings of one invocation, printed before any work.
#[derive(Debug)]
struct RunConfig {
    subcommand: &'static str,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    heatmap: Option<PathBuf>,
    model: Option<String>,
    eb: Option<f64>,
    estimator: Option<String>,
    seed: u64,
    workers: usize,
    normalize: Option<bool>,
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        write!(f, "config: subcommand={} input={} out={}", self.subcommand, path(&self.input), path(&self.output))?;
        if self.heatmap.is_some() {
            write!(f, " heatmap={}", path(&self.heatmap))?;
        }
        if let Some(m) = &self.model {
            write!(f, " model={m}")?;
        }
        if let Some(eb) = self.eb {
            write!(f, " eb={eb}")?;
        }
        if let Some(e) = &self.estimator {
            write!(f, " estimator={e}")?;
        }
        write!(f, " seed={} workers={}", self.seed, self.workers)?;
        if let Some(n) = self.normalize {
            write!(f, " normalize={}", if n { "on" } else { "off" })?;
        }
        Ok(())
    }
}

fn resolve_model(kind: ModelKind, bins: usize, k: f64) -> Outcome<Option<Model>> {
    Ok(match kind {
        ModelKind::Uniform => Some(Model::Uniform),
        ModelKind::Epanechnikov => {
            if !(k > 0.0) || !k.is_finite() {
                return Err(usage(format!("--k must be positive, got {k}")));
            }
            Some(Model::Epanechnikov { k })
        }
        ModelKind::Histogram => {
            if bins == 0 {
                return Err(usage("--bins must be at least 1"));
            }
            Some(Model::Histogram { bins })
        }
        ModelKind::GaussianMc => None,
    })
}

fn model_label(model: Option<Model>) -> String {
    match model {
        Some(Model::Uniform) => "uniform".into(),
        Some(Model::Epanechnikov { k }) => format!("epanechnikov(k={k})"),
        Some(Model::Histogram { bins }) => format!("histogram(bins={bins})"),
        None => "gaussian-mc".into(),
    }
}

fn resolve_estimator(args: &EstimatorArgs, model: Option<Model>) -> Outcome<EstimatorSpec> {
    let spec = match args.estimator {
        EstimatorKind::Closed => EstimatorSpec::closed_form(),
        EstimatorKind::Mc => EstimatorSpec::monte_carlo(args.samples, args.seed),
        EstimatorKind::Semi => EstimatorSpec::semianalytical(args.c, args.seed),
        EstimatorKind::Comb => EstimatorSpec::combinatorial(),
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    if args.workers == Some(0) {
        return Err(usage("--workers must be at least 1"));
    }
    match (model, spec.method) {
        (None, Method::MonteCarlo { .. }) => {}
        (None, _) => return Err(usage("the gaussian-mc model only supports --estimator mc")),
        (Some(Model::Histogram { .. }), _) => {}
        (Some(_), Method::Semianalytical { .. } | Method::Combinatorial) => {
            return Err(usage("--estimator semi and comb need --model histogram"));
        }
        _ => {}
    }
    if let (Some(Model::Histogram { bins }), Method::Combinatorial) = (model, spec.method) {
        if bins > MAX_COMBINATORIAL_BINS {
            return Err(usage(format!("--estimator comb supports at most {MAX_COMBINATORIAL_BINS} bins")));
        }
    }
    Ok(spec)
}

fn check_output(output: &OutputArgs) -> Outcome {
    if !(output.gamma > 0.0) || !output.gamma.is_finite() {
        return Err(usage(format!("--gamma must be positive, got {}", output.gamma)));
    }
    Ok(())
}

fn write_outputs(probs: &ProbabilityField, output: &OutputArgs) -> Outcome {
    if let Some(out) = &output.out {
        save_probability_field(probs, out, FieldFormat::from_path(out))
            .with_context(|| format!("writing {}", out.display()))?;
    }
    if let Some(path) = &output.heatmap {
        export_heatmap(probs, output.channel.into(), path, output.gamma)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let valid: Vec<_> = probs.triples.iter().zip(&probs.valid).filter(|(_, &v)| v).map(|(t, _)| t).collect();
    for pattern in Pattern::ALL {
        let (mut best, mut at) = (f64::NEG_INFINITY, 0);
        let mut sum = 0.0;
        for (i, t) in probs.triples.iter().enumerate() {
            if probs.valid[i] {
                sum += t.get(pattern);
                if t.get(pattern) > best {
                    (best, at) = (t.get(pattern), i);
                }
            }
        }
        println!(
            "p_{:<6} expected count {:>10.3}  peak {:.4} at ({}, {})",
            pattern.name(),
            sum,
            best,
            at % probs.width,
            at / probs.width
        );
    }
    println!("{} interior pixels classified", valid.len());
    Ok(())
}

fn compute(args: &ComputeArgs) -> Outcome {
    let model = resolve_model(args.model.model, args.model.bins, args.model.k)?;
    let spec = resolve_estimator(&args.estimator, model)?;
    check_output(&args.output)?;
    let workers = args.estimator.workers.unwrap_or_else(default_workers);
    let normalize = args.model.normalize == Toggle::On;
    let config = RunConfig {
        subcommand: "compute",
        input: Some(args.input.clone()),
        output: args.output.out.clone(),
        heatmap: args.output.heatmap.clone(),
        model: Some(model_label(model)),
        eb: None,
        estimator: Some(spec.label()),
        seed: args.estimator.seed,
        workers,
        normalize: Some(normalize),
    };
    eprintln!("{config}");

    let stack = load_ensemble(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let probs = match model {
        Some(model) => {
            let field = UncertainField::from_ensemble(&stack, model, normalize)?;
            classify_field_with_workers(&field, &spec, workers)?
        }
        None => {
            let field = GaussianField::from_ensemble(&stack)?;
            classify_gaussian_mc(&field, args.estimator.samples, args.estimator.seed, Some(workers))?
        }
    };
    write_outputs(&probs, &args.output)
}

fn from_scalar(args: &FromScalarArgs) -> Outcome {
    if !(args.eb >= 0.0) || !args.eb.is_finite() {
        return Err(usage(format!("--eb must be finite and >= 0, got {}", args.eb)));
    }
    let spec = resolve_estimator(&args.estimator, Some(Model::Uniform))?;
    check_output(&args.output)?;
    let workers = args.estimator.workers.unwrap_or_else(default_workers);
    let config = RunConfig {
        subcommand: "from-scalar",
        input: Some(args.input.clone()),
        output: args.output.out.clone(),
        heatmap: args.output.heatmap.clone(),
        model: Some("uniform".into()),
        eb: Some(args.eb),
        estimator: Some(spec.label()),
        seed: args.estimator.seed,
        workers,
        normalize: None,
    };
    eprintln!("{config}");
    let (w, h, values) = load_scalar(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let field = UncertainField::uniform_from_scalar(w, h, &values, args.eb)?;
    let probs = classify_field_with_workers(&field, &spec, workers)?;
    write_outputs(&probs, &args.output)
}

fn synth(args: &SynthArgs) -> Outcome {
    let size = args.size.unwrap_or(match args.kind {
        SynthKind::Ackley => 64,
        SynthKind::Mixture => 128,
    });
    let members = args.members.unwrap_or(match args.kind {
        SynthKind::Ackley => 50,
        SynthKind::Mixture => 40,
    });
    if size == 0 || members == 0 {
        return Err(usage("--size and --members must be at least 1"));
    }
    let config = RunConfig {
        subcommand: "synth",
        input: None,
        output: Some(args.out.clone()),
        heatmap: None,
        model: None,
        eb: None,
        estimator: None,
        seed: args.seed,
        workers: 1,
        normalize: None,
    };
    eprintln!("{config} kind={:?} size={size} members={members}", args.kind);
    let stack = match args.kind {
        SynthKind::Ackley => ackley_ensemble(size, size, members, args.noise, args.seed)?,
        SynthKind::Mixture => {
            let (stack, peaks) = gaussian_mixture_ensemble(size, size, members, args.outliers, args.seed)?;
            println!("true peaks {:?}", peaks.true_peaks);
            println!("outlier peaks {:?}", peaks.outlier_peaks);
            stack
        }
    };
    save_ensemble(&stack, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {} members of {}x{} to {}", stack.members(), size, size, args.out.display());
    Ok(())
}

fn validate(args: &ValidateArgs) -> Outcome {
    let model = resolve_model(args.model, args.bins, args.k)?
        .ok_or_else(|| usage("validate needs a finite-support model"))?;
    if args.samples == 0 || args.cases == 0 {
        return Err(usage("--samples and --cases must be at least 1"));
    }
    if args.neighbors != 2 && args.neighbors != 4 {
        return Err(usage("--neighbors must be 2 or 4"));
    }
    let config = RunConfig {
        subcommand: "validate",
        input: None,
        output: None,
        heatmap: None,
        model: Some(model_label(Some(model))),
        eb: None,
        estimator: Some(format!("closed vs mc({})", args.samples)),
        seed: args.seed,
        workers: 1,
        normalize: None,
    };
    eprintln!("{config} cases={} neighbors={}", args.cases, args.neighbors);

    let (mut max_dev, mut max_z) = (0.0f64, 0.0f64);
    let mut within = 0u64;
    for i in 0..args.cases {
        let case = random_case(args.seed.wrapping_add(i), &model, args.neighbors);
        let exact = estimate(&case, &EstimatorSpec::closed_form())?;
        let mc = mc_triple(&case, args.samples, args.seed.wrapping_add(i) ^ 0x9E37_79B9)?;
        for pattern in Pattern::ALL {
            let p = exact.get(pattern);
            let dev = (mc.get(pattern) - p).abs();
            let se = (p * (1.0 - p) / args.samples as f64).sqrt().max(1e-15);
            max_dev = max_dev.max(dev);
            max_z = max_z.max(dev / se);
            within += (dev <= 4.0 * se) as u64;
        }
    }
    let total = 3 * args.cases;
    println!("max |closed - mc| = {max_dev:.3e}");
    println!("max deviation in standard errors = {max_z:.2}");
    println!("within 4 standard errors: {within}/{total} ({:.2}%)", 100.0 * within as f64 / total as f64);
    Ok(())
}

fn write_report(dir: &Option<PathBuf>, name: &str, csv: &str) -> Outcome {
    if let Some(dir) = dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path: PathBuf = Path::new(dir).join(name);
        fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn bench(args: &BenchArgs) -> Outcome {
    if args.size < 3 || args.members < 2 {
        return Err(usage("--size must be at least 3 and --members at least 2"));
    }
    if args.workers == Some(0) {
        return Err(usage("--workers must be at least 1"));
    }
    let workers = args.workers.unwrap_or_else(default_workers);
    let config = RunConfig {
        subcommand: "bench",
        input: None,
        output: args.out_dir.clone(),
        heatmap: None,
        model: Some("uniform".into()),
        eb: None,
        estimator: Some(format!("closed vs mc{:?}", args.counts)),
        seed: args.seed,
        workers,
        normalize: Some(true),
    };
    eprintln!("{config}");

    let stack = ackley_ensemble(args.size, args.size, args.members, 0.5, args.seed)?;
    let field = UncertainField::from_ensemble(&stack, Model::Uniform, true)?;
    let pattern: Pattern = args.channel.into();
    let report = convergence_study(&field, pattern, &args.counts, args.seed)?;
    println!("{report}");
    write_report(&args.out_dir, "convergence.csv", &report.to_csv())?;

    let mc = EstimatorSpec::monte_carlo(*args.counts.last().unwrap(), args.seed);
    let timings = timing_report(&field, &[EstimatorSpec::closed_form(), mc], &[Pattern::Min, Pattern::Saddle], workers)?;
    println!("{timings}");
    write_report(&args.out_dir, "timing.csv", &timings.to_csv())?;

    if args.mixture_size > 0 {
        let (mix, peaks) = gaussian_mixture_ensemble(args.mixture_size, args.mixture_size, 40, 10, args.seed)?;
        let mut csv = String::from("model,ratio\n");
        println!("outlier robustness (mean p_max near true peaks / near outlier peaks)");
        for model in [Model::Uniform, Model::Epanechnikov { k: 5f64.sqrt() }, Model::Histogram { bins: 5 }] {
            let r = robustness_ratio(&mix, model, &peaks.true_peaks, &peaks.outlier_peaks)?;
            println!("  {:<28} {r:.4}", model_label(Some(model)));
            csv.push_str(&format!("{},{r}\n", model.name()));
        }
        write_report(&args.out_dir, "robustness.csv", &csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compute(a) => compute(a),
        Command::FromScalar(a) => from_scalar(a),
        Command::Synth(a) => synth(a),
        Command::Validate(a) => validate(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
