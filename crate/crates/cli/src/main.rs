//! `hypercrit` experiment runner.
//!
//! Every run is a pure function of its flags and seed: trial `t` draws from
//! its own substream of the seed, so reports are byte-identical across runs
//! and thread counts.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hypercrit::beta::{classify, critical_profile, t_star, z_tilde, Alpha, BorelModel, CRITICAL_TOL};
use hypercrit::bfw::{breadth_first_walk, RootPolicy};
use hypercrit::collapse::{domain_of, sequential_patch_experiment, PatchLimits};
use hypercrit::rng::{par_trials, trial_rng};
use hypercrit::scaling::{simulate_wk, write_curve_csv, WkConfig, WkHorizon};
use hypercrit::stats::{fit_exponent, ks_two_sample, mean, quantile, ExponentFit};
use hypercrit::trace::write_excursions_csv;
use hypercrit::walk::{first_domain_size, patches_at, sample_excursions, sample_modified_walk, sample_walk, sequential_patch_walk};
use hypercrit::{BetaParams, CriticalityReport, Error, Hypergraph, Placement, Regime, TrialReport};
use serde::Serialize;

const SCHEMA_VERSION: u32 = 1;
const SEED_ENV: &str = "HYPERCRIT_SEED";

#[derive(Parser)]
#[command(name = "hypercrit", version, about = "Identifiability collapse on Poisson random hypergraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    config: Config,
}

#[derive(Subcommand, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Sample a hypergraph and write it as an edge list.
    Generate,
    /// Patch-and-collapse on an edge-list file.
    Collapse,
    /// Breadth-first walk on an edge-list file.
    Walk,
    /// Walk drawn from the sequential law, no hypergraph needed.
    SampleWalk,
    /// Domain-size and patch statistics across N, with exponent fit.
    Sweep,
    /// Samples of the limit infimum -inf W^k, optionally against A_N.
    Limits,
    /// Criticality, t*, and the fluid curve for a parameter set.
    Analyze,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Args, Clone, Debug, Serialize)]
struct Config {
    /// Vertex counts, comma separated or repeated.
    #[arg(long = "n", value_delimiter = ',', global = true)]
    n_values: Vec<usize>,
    /// Edge intensities "b2,b3,...".
    #[arg(long, global = true, conflicts_with = "critical_k")]
    beta: Option<String>,
    /// Critical profile: beta_j at its critical value for j < K.
    #[arg(long, global = true, requires = "beta_k")]
    critical_k: Option<usize>,
    /// beta_K of the critical profile.
    #[arg(long, global = true, requires = "critical_k")]
    beta_k: Option<f64>,
    #[arg(long, default_value_t = 1, global = true)]
    trials: usize,
    /// Base seed; HYPERCRIT_SEED overrides it.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Stop once more than N*delta vertices are identified.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Maximum number of patches.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Output file (stdout if absent).
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[arg(long, default_value = "uniform-random", value_parser = parse_root_policy, global = true)]
    root_policy: RootPolicy,
    /// Scaling exponent to use instead of alpha(k), e.g. "2/3".
    #[arg(long, value_parser = parse_rational, global = true)]
    alpha_override: Option<f64>,
    /// Edge-list input file.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Time step for limit-path simulation.
    #[arg(long, default_value_t = 1e-3, global = true)]
    dt: f64,
    /// Fixed horizon for limit paths instead of adaptive stopping.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Adaptive stopping window for limit paths (default scales with mu_k).
    #[arg(long, global = true)]
    window: Option<f64>,
    /// Emit excursions only instead of the full trace.
    #[arg(long, global = true)]
    streaming: bool,
    /// For collapse: report the domain of this vertex.
    #[arg(long, global = true)]
    vertex: Option<usize>,
}

fn parse_root_policy(s: &str) -> Result<RootPolicy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_rational(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if value.is_finite() && value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(format!("{s} is not in (0, 1]"))
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Io(_) => 3,
            Self::Numerical(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) => Self::Usage(e.to_string()),
            Error::Parse { .. } | Error::Io(_) => Self::Io(e.to_string()),
            Error::Numerical(_) => Self::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

type Run<T> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Run<T> {
    Err(Failure::Usage(msg.into()))
}

impl Config {
    fn params(&self) -> Run<BetaParams> {
        match (&self.beta, self.critical_k, self.beta_k) {
            (Some(b), _, _) => Ok(b.parse()?),
            (None, Some(k), Some(v)) => Ok(critical_profile(k, v)?),
            _ => usage("give --beta or --critical-k with --beta-k"),
        }
    }

    fn single_n(&self) -> Run<usize> {
        match self.n_values.as_slice() {
            [n] => Ok(*n),
            _ => usage("this command takes exactly one --n"),
        }
    }

    fn delta(&self) -> Run<f64> {
        match self.delta {
            Some(d) if d > 0.0 && d < 1.0 => Ok(d),
            Some(d) => usage(format!("--delta {d} must lie in (0, 1)")),
            None => usage("--delta is required"),
        }
    }

    fn limits(&self) -> Run<PatchLimits> {
        Ok(PatchLimits::new(self.delta()?, self.budget.unwrap_or(usize::MAX))?)
    }

    fn load_input(&self) -> Run<Hypergraph> {
        let path = self.input.as_ref().map_or_else(|| usage("--input is required"), Ok)?;
        let file = File::open(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        Ok(Hypergraph::load(BufReader::new(file))?)
    }

    fn alpha(&self, report: &CriticalityReport) -> f64 {
        self.alpha_override.unwrap_or_else(|| Alpha::for_k(report.k).value())
    }

    fn validate(&self) -> Run<()> {
        if self.trials == 0 {
            return usage("--trials must be at least 1");
        }
        if self.dt.is_nan() || self.dt <= 0.0 {
            return usage("--dt must be positive");
        }
        Ok(())
    }
}

/// Writes to `--out` or stdout.
fn open_output(cfg: &Config) -> Run<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema_version: u32,
    command: Command,
    config: &'a Config,
    result: T,
}

fn emit_json<T: Serialize>(cfg: &Config, command: Command, result: T) -> Run<()> {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command,
        config: cfg,
        result,
    };
    let mut out = open_output(cfg)?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Distribution summary tagged with its sample count.
#[derive(Serialize)]
struct Summary {
    trials: usize,
    mean: f64,
    q10: f64,
    median: f64,
    q90: f64,
}

impl Summary {
    fn of(sample: &[f64]) -> Run<Self> {
        Ok(Self {
            trials: sample.len(),
            mean: mean(sample)?,
            q10: quantile(sample, 0.1)?,
            median: quantile(sample, 0.5)?,
            q90: quantile(sample, 0.9)?,
        })
    }
}

fn generate(cfg: &Config) -> Run<()> {
    let n = cfg.single_n()?;
    let h = Hypergraph::sample(n, &cfg.params()?, &mut trial_rng(cfg.seed, 0))?;
    h.save(open_output(cfg)?)?;
    Ok(())
}

#[derive(Serialize)]
struct DomainResult {
    vertex: usize,
    size: usize,
    domain: Vec<usize>,
}

#[derive(Serialize)]
struct PatchRunResult {
    n: usize,
    patches_used: Summary,
    identified_fraction: Summary,
    rows: Vec<TrialReport>,
}

fn collapse(cfg: &Config) -> Run<()> {
    let h = cfg.load_input()?;
    if let Some(v) = cfg.vertex {
        let domain = domain_of(&h, v)?;
        return match cfg.format {
            Format::Json => emit_json(cfg, Command::Collapse, DomainResult { vertex: v, size: domain.len(), domain }),
            Format::Csv => {
                let mut out = open_output(cfg)?;
                writeln!(out, "vertex")?;
                for u in domain {
                    writeln!(out, "{u}")?;
                }
                out.flush()?;
                Ok(())
            }
        };
    }
    let limits = cfg.limits()?;
    let rows = par_trials(cfg.seed, cfg.trials, |_, rng| {
        sequential_patch_experiment(&h, rng, limits, Placement::default())
    });
    write_patch_rows(cfg, Command::Collapse, h.n_vertices(), rows)
}

fn write_patch_rows(cfg: &Config, command: Command, n: usize, rows: Vec<TrialReport>) -> Run<()> {
    match cfg.format {
        Format::Json => {
            let patches: Vec<f64> = rows.iter().map(|r| r.patches_used as f64).collect();
            let fractions: Vec<f64> = rows.iter().map(|r| r.identified_count as f64 / n as f64).collect();
            let result = PatchRunResult {
                n,
                patches_used: Summary::of(&patches)?,
                identified_fraction: Summary::of(&fractions)?,
                rows,
            };
            emit_json(cfg, command, result)
        }
        Format::Csv => {
            let mut out = open_output(cfg)?;
            writeln!(out, "trial,identified,patches,first_domain,stop_reason")?;
            for (t, r) in rows.iter().enumerate() {
                let reason = serde_json::to_value(r.stop_reason).map_err(|e| Failure::Io(e.to_string()))?;
                writeln!(
                    out,
                    "{t},{},{},{},{}",
                    r.identified_count,
                    r.patches_used,
                    r.domain_size.map_or(String::new(), |d| d.to_string()),
                    reason.as_str().unwrap_or_default()
                )?;
            }
            out.flush()?;
            Ok(())
        }
    }
}

fn write_trace(cfg: &Config, command: Command, trace: &hypercrit::WalkTrace) -> Run<()> {
    let excursions = if trace.is_complete() { trace.excursions()? } else { Vec::new() };
    match (cfg.format, cfg.streaming) {
        (Format::Csv, false) => trace.write_csv(open_output(cfg)?)?,
        (Format::Csv, true) => write_excursions_csv(&excursions, open_output(cfg)?)?,
        (Format::Json, false) => {
            #[derive(Serialize)]
            struct TraceResult<'a> {
                trace: &'a hypercrit::WalkTrace,
                excursions: Vec<hypercrit::ExcursionRecord>,
            }
            emit_json(cfg, command, TraceResult { trace, excursions })?
        }
        (Format::Json, true) => emit_json(cfg, command, excursions)?,
    }
    Ok(())
}

fn walk(cfg: &Config) -> Run<()> {
    let h = cfg.load_input()?;
    let trace = breadth_first_walk(&h, &mut trial_rng(cfg.seed, 0), cfg.root_policy);
    write_trace(cfg, Command::Walk, &trace)
}

fn sample_walk_cmd(cfg: &Config) -> Run<()> {
    let n = cfg.single_n()?;
    let params = cfg.params()?;
    let mut rng = trial_rng(cfg.seed, 0);
    if cfg.streaming && cfg.delta.is_none() {
        // constant memory: never materialize the trace
        let (excursions, _) = sample_excursions(n, &params, &mut rng, n)?;
        return match cfg.format {
            Format::Csv => Ok(write_excursions_csv(&excursions, open_output(cfg)?)?),
            Format::Json => emit_json(cfg, Command::SampleWalk, excursions),
        };
    }
    let trace = match cfg.delta {
        Some(_) => sample_modified_walk(n, &params, &mut rng, cfg.delta()?)?,
        None => sample_walk(n, &params, &mut rng, n)?,
    };
    write_trace(cfg, Command::SampleWalk, &trace)
}

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    domain_size: Summary,
    /// Median of N^{-alpha} D_N.
    rescaled_median: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    identified_fraction: Option<Summary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    patches_used: Option<Summary>,
}

#[derive(Serialize)]
struct SweepResult {
    criticality: CriticalityReport,
    alpha: f64,
    rows: Vec<SweepRow>,
    /// Fit of median D_N against N; null with fewer than three N.
    exponent: Option<ExponentFit>,
}

fn sweep(cfg: &Config) -> Run<()> {
    if cfg.n_values.is_empty() {
        return usage("--n is required");
    }
    let params = cfg.params()?;
    let report = classify(&params, CRITICAL_TOL);
    let alpha = cfg.alpha(&report);
    let limits = match cfg.delta {
        Some(_) => Some(cfg.limits()?),
        None => None,
    };
    let mut rows = Vec::new();
    for (j, &n) in cfg.n_values.iter().enumerate() {
        let seed = cfg.seed.wrapping_add(j as u64);
        let sizes = par_trials(seed, cfg.trials, |_, rng| first_domain_size(n, &params, rng).map(|d| d as f64));
        let sizes = sizes.into_iter().collect::<Result<Vec<_>, _>>()?;
        let domain_size = Summary::of(&sizes)?;
        let (identified_fraction, patches_used) = match limits {
            Some(limits) => {
                let runs = par_trials(seed ^ 0x5eed, cfg.trials, |_, rng| sequential_patch_walk(n, &params, rng, limits));
                let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
                let x: Vec<f64> = runs.iter().map(|r| r.identified_count as f64 / n as f64).collect();
                let a: Vec<f64> = runs.iter().map(|r| r.patches_used as f64).collect();
                (Some(Summary::of(&x)?), Some(Summary::of(&a)?))
            }
            None => (None, None),
        };
        rows.push(SweepRow {
            n,
            rescaled_median: domain_size.median * (n as f64).powf(-alpha),
            domain_size,
            identified_fraction,
            patches_used,
        });
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.domain_size.median)).collect();
    let exponent = if pairs.len() >= 3 { Some(fit_exponent(&pairs)?) } else { None };
    match cfg.format {
        Format::Json => emit_json(
            cfg,
            Command::Sweep,
            SweepResult {
                criticality: report,
                alpha,
                rows,
                exponent,
            },
        ),
        Format::Csv => {
            let mut out = open_output(cfg)?;
            writeln!(out, "n,trials,mean,q10,median,q90,rescaled_median,exponent")?;
            let slope = exponent.map_or(String::new(), |f| f.slope.to_string());
            for r in &rows {
                let d = &r.domain_size;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{slope}",
                    r.n, d.trials, d.mean, d.q10, d.median, d.q90, r.rescaled_median
                )?;
            }
            out.flush()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct LimitsResult {
    k: usize,
    mu_k: f64,
    neg_infimum: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    rescaled_patches: Option<Summary>,
    /// Two-sample KS between N^{-alpha/2} A_N and -inf W^k.
    #[serde(skip_serializing_if = "Option::is_none")]
    ks_distance: Option<f64>,
}

fn limits(cfg: &Config) -> Run<()> {
    let params = cfg.params()?;
    let report = classify(&params, CRITICAL_TOL);
    if report.regime != Regime::Supercritical {
        return usage(format!("limit infimum needs a supercritical profile, got {:?}", report.regime));
    }
    let (k, mu_k) = (report.k, report.mu_k);
    let mut wk = WkConfig::adaptive(cfg.dt, k, mu_k);
    if let Some(w) = cfg.window {
        wk.horizon = WkHorizon::Adaptive { min_window: w };
    }
    if let Some(t) = cfg.horizon {
        wk.horizon = WkHorizon::Fixed(t);
    }
    let samples = par_trials(cfg.seed, cfg.trials, |_, rng| simulate_wk(k, mu_k, &wk, rng).map(|p| p.neg_infimum()));
    let samples = samples.into_iter().collect::<Result<Vec<_>, _>>()?;
    let (rescaled, ks) = match cfg.n_values.as_slice() {
        [] => (None, None),
        [n] => {
            let n = *n;
            let delta = match cfg.delta {
                Some(_) => cfg.delta()?,
                None => 0.1 * t_star(&params, 0.0).value,
            };
            let scale = (n as f64).powf(-cfg.alpha(&report) / 2.0);
            let a = par_trials(cfg.seed ^ 0xa11, cfg.trials, |_, rng| {
                patches_at(n, &params, rng, delta).map(|p| p as f64 * scale)
            });
            let a = a.into_iter().collect::<Result<Vec<_>, _>>()?;
            let ks = ks_two_sample(&a, &samples)?;
            (Some(a), Some(ks))
        }
        _ => return usage("limits takes at most one --n"),
    };
    match cfg.format {
        Format::Json => emit_json(
            cfg,
            Command::Limits,
            LimitsResult {
                k,
                mu_k,
                neg_infimum: Summary::of(&samples)?,
                rescaled_patches: rescaled.as_deref().map(Summary::of).transpose()?,
                ks_distance: ks,
            },
        ),
        Format::Csv => {
            let mut out = open_output(cfg)?;
            writeln!(out, "neg_infimum")?;
            for s in &samples {
                writeln!(out, "{s}")?;
            }
            out.flush()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct AnalyzeResult {
    criticality: CriticalityReport,
    t_star: f64,
    t_star_saturated: bool,
    borel_mean: f64,
    borel_survival: f64,
    mean_degree: f64,
}

fn analyze(cfg: &Config) -> Run<()> {
    let params = cfg.params()?;
    let criticality = classify(&params, CRITICAL_TOL);
    let star = t_star(&params, 0.0);
    match cfg.format {
        Format::Json => {
            let borel = BorelModel::new(2.0 * params.get(2))?;
            emit_json(
                cfg,
                Command::Analyze,
                AnalyzeResult {
                    criticality,
                    t_star: star.value,
                    t_star_saturated: star.saturated,
                    borel_mean: borel.mu,
                    borel_survival: borel.survival(),
                    mean_degree: params.mean_degree(),
                },
            )
        }
        Format::Csv => {
            let points = (0..=1000)
                .map(|j| {
                    let t = j as f64 / 1000.0;
                    z_tilde(&params, star.value, t).map(|z| (t, z))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(write_curve_csv(&points, open_output(cfg)?)?)
        }
    }
}

fn run(command: Command, cfg: &Config) -> Run<()> {
    cfg.validate()?;
    match command {
        Command::Generate => generate(cfg),
        Command::Collapse => collapse(cfg),
        Command::Walk => walk(cfg),
        Command::SampleWalk => sample_walk_cmd(cfg),
        Command::Sweep => sweep(cfg),
        Command::Limits => limits(cfg),
        Command::Analyze => analyze(cfg),
    }
}

fn main() -> ExitCode {
    let Cli { command, mut config } = Cli::parse();
    let cfg = &mut config;
    if let Ok(s) = std::env::var(SEED_ENV) {
        match s.trim().parse() {
            Ok(seed) => cfg.seed = seed,
            Err(e) => {
                eprintln!("error: {SEED_ENV}={s:?}: {e}");
                return ExitCode::from(2);
            }
        }
    }
    match run(command, cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) | Failure::Io(m) | Failure::Numerical(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
