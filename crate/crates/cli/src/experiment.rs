//! Monte Carlo experiments over uniform random trees.
//!
//! Sample `i` of a run is drawn from its own generator `stream(seed', i)`,
//! where `seed'` mixes the master seed with the target size. Workers take
//! contiguous index ranges and their partial pools are concatenated in index
//! order, so reports do not depend on the worker count.

use std::collections::HashMap;
use std::time::Instant;

use polya::analysis::DEFAULT_SOLVE_TOL;
use polya::crt::{crt_height_cdf, crt_height_moment, GRID_LOW};
use polya::enumerate::{brute_force_enumerate, CanonicalTree};
use polya::laws::Analysis;
use polya::metrics::{blue_height, compute_stats, TreeStats};
use polya::rng::stream;
use polya::sampler::{ColoredTree, CopyRule, ExactSample, Sampler, SamplerBudget};
use polya::PolyaError;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CopyMode, ExperimentConfig, ExperimentKind, Mode};
use crate::error::{HarnessError, Result};
use crate::report::ExperimentReport;
use crate::stats::{batch_means, chi_square_uniform, ks_distance_on, mean_stderr, ols, quantile, sample_variance, sorted};

/// Upper end of the grid for the height distance.
pub const KS_GRID_HIGH: f64 = 4.0;
pub const TAIL_GRID: [f64; 11] = [0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0];
/// Grid points with fewer exceedances are left out of tail fits.
pub const MIN_EXCEEDANCES: usize = 50;
pub const UNIFORMITY_LIMIT: usize = 8;
const BATCHES: usize = 10;
/// Allowed excess of a held-out empirical tail over the envelope, in
/// standard errors.
const ENVELOPE_SLACK: f64 = 3.0;

/// Solved analysis plus a sampler for one degree set.
pub struct Pipeline {
    pub analysis: Analysis,
    pub sampler: Sampler,
}

impl Pipeline {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let analysis = Analysis::run(&cfg.omega, cfg.coeffs, DEFAULT_SOLVE_TOL)?;
        let rule = match cfg.copy_mode {
            CopyMode::Identical => CopyRule::Identical,
            CopyMode::SingleCopy => CopyRule::SingleCopy,
        };
        let sampler = Sampler::with_copy_rule(&cfg.omega, &analysis.counts, &analysis.sing, rule)?;
        Ok(Self { analysis, sampler })
    }

    pub fn c_omega(&self) -> f64 {
        self.analysis.constants.c_omega
    }
}

/// Per-sample summary kept after the tree itself is dropped.
#[derive(Debug, Clone, Serialize)]
pub struct SampleSummary {
    pub index: u64,
    pub stats: TreeStats,
    pub blue_height: usize,
    pub attempts: u64,
    #[serde(skip)]
    pub newick: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct SamplePool {
    pub summaries: Vec<SampleSummary>,
    /// Indices that exhausted their attempt budget.
    pub failures: Vec<u64>,
    pub wall_seconds: f64,
}

impl SamplePool {
    /// Concatenates partial pools given in index order.
    pub fn merge(parts: Vec<SamplePool>) -> SamplePool {
        let mut out = SamplePool::default();
        for p in parts {
            out.summaries.extend(p.summaries);
            out.failures.extend(p.failures);
            out.wall_seconds = out.wall_seconds.max(p.wall_seconds);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.summaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }

    fn map(&self, f: impl Fn(&SampleSummary) -> f64) -> Vec<f64> {
        self.summaries.iter().map(f).collect()
    }

    fn flag_partial(&self, report: &mut ExperimentReport) {
        if !self.failures.is_empty() {
            report.flags.push(format!("partial:{}-samples-exhausted-attempts", self.failures.len()));
        }
    }
}

/// Seed for the streams of one target size.
fn size_seed(seed: u64, n: usize) -> u64 {
    seed ^ (n as u64).rotate_left(32)
}

/// Runs `job(i)` for `i in 0..count` on `workers` threads, one contiguous
/// chunk per worker, and returns the results in index order.
pub fn run_indexed<T: Send>(count: usize, workers: usize, job: impl Fn(u64) -> T + Sync) -> Result<Vec<T>> {
    let chunks = chunk_ranges(count, workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    let parts: Vec<Vec<T>> = pool.install(|| {
        chunks
            .into_par_iter()
            .map(|(lo, hi)| (lo..hi).map(&job).collect())
            .collect()
    });
    Ok(parts.into_iter().flatten().collect())
}

fn chunk_ranges(count: usize, workers: usize) -> Vec<(u64, u64)> {
    let w = workers.max(1);
    (0..w)
        .map(|k| ((count * k / w) as u64, (count * (k + 1) / w) as u64))
        .filter(|(lo, hi)| lo < hi)
        .collect()
}

fn budget(cfg: &ExperimentConfig, n: usize) -> SamplerBudget {
    let hi = match (cfg.mode, cfg.epsilon) {
        (Mode::Window, Some(e)) => (n as f64 * (1.0 + e)).floor() as usize,
        _ => n,
    };
    SamplerBudget {
        max_size: hi,
        max_attempts: cfg.max_attempts,
        rng_seed: size_seed(cfg.seed, n),
    }
}

fn draw(pipeline: &Pipeline, cfg: &ExperimentConfig, mode: Mode, n: usize, index: u64) -> std::result::Result<ExactSample, PolyaError> {
    let b = budget(cfg, n);
    let mut rng = stream(b.rng_seed, index);
    match (mode, cfg.epsilon) {
        (Mode::Window, Some(eps)) => pipeline.sampler.sample_window(n, eps, b.max_attempts, &mut rng),
        _ => pipeline.sampler.sample_exact(n, b.max_attempts, &mut rng),
    }
}

fn check_target(pipeline: &Pipeline, cfg: &ExperimentConfig, n: usize) -> Result<()> {
    if cfg.mode == Mode::Exact && !pipeline.sampler.is_admissible(n) {
        return Err(PolyaError::InadmissibleSize(n).into());
    }
    Ok(())
}

/// Draws `cfg.samples` trees of target size `n` and summarizes each one.
pub fn collect_samples(pipeline: &Pipeline, cfg: &ExperimentConfig, n: usize) -> Result<SamplePool> {
    check_target(pipeline, cfg, n)?;
    let start = Instant::now();
    let results = run_indexed(cfg.samples, cfg.workers, |i| {
        draw(pipeline, cfg, cfg.mode, n, i).map(|s| summarize(i, &s, cfg.keep_trees))
    })?;
    let mut pool = SamplePool::default();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => pool.summaries.push(s),
            Err(PolyaError::AttemptsExhausted { .. }) => pool.failures.push(i as u64),
            Err(e) => return Err(e.into()),
        }
    }
    pool.wall_seconds = start.elapsed().as_secs_f64();
    Ok(pool)
}

fn summarize(index: u64, sample: &ExactSample, keep: bool) -> SampleSummary {
    SampleSummary {
        index,
        stats: compute_stats(&sample.tree),
        blue_height: blue_height(&sample.tree),
        attempts: sample.attempts,
        newick: keep.then(|| sample.tree.to_newick()),
    }
}

fn new_report(kind: ExperimentKind, cfg: &ExperimentConfig, pool: &SamplePool) -> ExperimentReport {
    let mut report = ExperimentReport::new(kind, cfg);
    pool.flag_partial(&mut report);
    let attempts = pool.map(|s| s.attempts as f64);
    let (m, se) = mean_stderr(&attempts);
    report.push("attempts_per_sample", m, Some(se), pool.len());
    report.time("workers", cfg.workers);
    report.time("wall_seconds", pool.wall_seconds);
    if !pool.is_empty() {
        report.time("seconds_per_sample", pool.wall_seconds / pool.len() as f64);
    }
    if cfg.keep_trees {
        let trees: Vec<&str> = pool.summaries.iter().filter_map(|s| s.newick.as_deref()).collect();
        report.detail("trees", trees);
    }
    report
}

fn scaled(pool: &SamplePool, c: f64, f: impl Fn(&SampleSummary) -> usize) -> Vec<f64> {
    pool.map(|s| c * f(s) as f64 / (s.stats.size as f64).sqrt())
}

pub fn run_height_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let pipeline = Pipeline::new(cfg)?;
    let pool = collect_samples(&pipeline, cfg, cfg.n)?;
    Ok(height_report(&pipeline, cfg, &pool))
}

/// Rescaled height and width against the continuum random tree.
fn indicator(pass: bool) -> f64 {
    if pass {
        1.0
    } else {
        0.0
    }
}

pub fn height_report(pipeline: &Pipeline, cfg: &ExperimentConfig, pool: &SamplePool) -> ExperimentReport {
    let mut report = new_report(ExperimentKind::Height, cfg, pool);
    let c = pipeline.c_omega();
    let n = pool.len();
    report.push_exact("c_omega", c);
    report.push_exact("crt_height_mean", crt_height_moment(1));
    report.push_exact("crt_height_second_moment", crt_height_moment(2));
    if n == 0 {
        return report;
    }
    let h = scaled(pool, c, |s| s.stats.height);
    let (mean, se) = mean_stderr(&h);
    report.push("height_scaled_mean", mean, Some(se), n);
    let relative_error = (mean - crt_height_moment(1)) / crt_height_moment(1);
    report.push(
        "height_scaled_mean_relative_error",
        relative_error,
        Some(se / crt_height_moment(1)),
        n,
    );
    report.push_exact("height_mean_within_tolerance", indicator(relative_error.abs() < cfg.mean_tolerance));
    let squares: Vec<f64> = h.iter().map(|x| x * x).collect();
    let (m2, se2) = mean_stderr(&squares);
    report.push("height_scaled_second_moment", m2, Some(se2), n);
    if n > 1 {
        let var = sample_variance(&h, mean);
        report.push("height_scaled_variance", var, Some(var * (2.0 / (n as f64 - 1.0)).sqrt()), n);
    }
    let sorted_h = sorted(&h);
    let ks = ks_distance_on(&sorted_h, crt_height_cdf, GRID_LOW, KS_GRID_HIGH);
    // asymptotic spread of the Kolmogorov distribution is about 0.26/√n
    report.push("height_ks_distance", ks, Some(0.26 / (n as f64).sqrt()), n);
    report.push_exact("height_ks_within_threshold", indicator(ks < cfg.ks_threshold));

    let w = scaled(pool, c, |s| s.stats.width);
    let (wm, wse) = mean_stderr(&w);
    report.push("width_scaled_mean", wm, Some(wse), n);
    if n > 1 {
        let var = sample_variance(&w, wm);
        report.push("width_scaled_variance", var, Some(var * (2.0 / (n as f64 - 1.0)).sqrt()), n);
    }

    let blue = pool.map(|s| s.stats.blue_size as f64 / s.stats.size as f64);
    let (bm, bse) = mean_stderr(&blue);
    report.push("blue_fraction", bm, Some(bse), n);
    report.push_exact("blue_fraction_predicted", pipeline.analysis.constants.blue_fraction);
    report
}

/// Integer quantity read off a sample summary.
type Measure = fn(&SampleSummary) -> usize;

pub fn run_tail_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let pipeline = Pipeline::new(cfg)?;
    let pool = collect_samples(&pipeline, cfg, cfg.n)?;
    Ok(tails_report(cfg, &pool))
}

/// Empirical tails of `H/√n`, `W/√n` and the blue height on the `β` grid,
/// with sub-Gaussian fits `ln P(X ≥ β√n) ≈ a − cβ²`.
pub fn tails_report(cfg: &ExperimentConfig, pool: &SamplePool) -> ExperimentReport {
    let mut report = new_report(ExperimentKind::Tails, cfg, pool);
    let quantities: [(&str, Measure); 3] = [
        ("height", |s| s.stats.height),
        ("width", |s| s.stats.width),
        ("blue_height", |s| s.blue_height),
    ];
    for (name, f) in quantities {
        let x = scaled(pool, 1.0, f);
        tail_section(&mut report, name, &x);
    }
    report
}

#[derive(Debug, Clone, Serialize)]
struct TailPoint {
    beta: f64,
    exceedances: usize,
    probability: f64,
}

fn tail_points(x: &[f64]) -> Vec<TailPoint> {
    TAIL_GRID
        .iter()
        .map(|&beta| {
            let k = x.iter().filter(|&&v| v >= beta).count();
            TailPoint {
                beta,
                exceedances: k,
                probability: k as f64 / x.len().max(1) as f64,
            }
        })
        .collect()
}

fn fit_points(points: &[TailPoint]) -> Option<crate::stats::LineFit> {
    let usable: Vec<&TailPoint> = points.iter().filter(|p| p.exceedances >= MIN_EXCEEDANCES).collect();
    if usable.len() < 3 {
        return None;
    }
    let bx: Vec<f64> = usable.iter().map(|p| p.beta * p.beta).collect();
    let by: Vec<f64> = usable.iter().map(|p| p.probability.ln()).collect();
    ols(&bx, &by)
}

fn tail_section(report: &mut ExperimentReport, name: &str, x: &[f64]) {
    let n = x.len();
    let points = tail_points(x);
    for p in &points {
        let se = (p.probability * (1.0 - p.probability) / n.max(1) as f64).sqrt();
        report.push(format!("{name}_tail_beta_{:.2}", p.beta), p.probability, Some(se), n);
        if p.exceedances < MIN_EXCEEDANCES {
            report.flags.push(format!("insufficient-tail-samples:{name}:beta={:.2}", p.beta));
        }
    }
    report.detail(&format!("{name}_tail_grid"), &points);
    let Some(fit) = fit_points(&points) else {
        report.flags.push(format!("tail-fit-unavailable:{name}"));
        return;
    };
    report.push(format!("{name}_tail_slope"), fit.slope, Some(fit.slope_stderr), n);
    report.push(format!("{name}_tail_t"), fit.t_statistic, None, n);
    report.push(format!("{name}_tail_rate"), -fit.slope, Some(fit.slope_stderr), n);
    report.push(format!("{name}_tail_constant"), fit.intercept.exp(), None, n);

    // Envelope check on held-out data: fit on odd positions, lift the line
    // over its own points, then compare with the even positions.
    let fit_half: Vec<f64> = x.iter().skip(1).step_by(2).copied().collect();
    let test_half: Vec<f64> = x.iter().step_by(2).copied().collect();
    let fit_pts = tail_points(&fit_half);
    if let Some(half_fit) = fit_points(&fit_pts) {
        let lift = fit_pts
            .iter()
            .filter(|p| p.exceedances >= MIN_EXCEEDANCES)
            .map(|p| p.probability.ln() - half_fit.predict(p.beta * p.beta))
            .fold(0.0f64, f64::max);
        let m = test_half.len() as f64;
        let worst = tail_points(&test_half)
            .iter()
            .map(|p| {
                let envelope = (half_fit.predict(p.beta * p.beta) + lift).exp();
                let se = (p.probability * (1.0 - p.probability) / m).sqrt().max(1.0 / m);
                (p.probability - envelope) / se
            })
            .fold(f64::NEG_INFINITY, f64::max);
        report.push(format!("{name}_envelope_worst_excess_se"), worst, None, test_half.len());
        report.push(
            format!("{name}_envelope_dominates"),
            f64::from(u8::from(worst <= ENVELOPE_SLACK)),
            None,
            test_half.len(),
        );
    } else {
        report.flags.push(format!("envelope-unavailable:{name}"));
    }
}

pub fn run_structure_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let pipeline = Pipeline::new(cfg)?;
    let pool = collect_samples(&pipeline, cfg, cfg.n)?;
    Ok(structure_report(&pipeline, cfg, &pool))
}

/// Blue-subtree share, largest dangling forest and the blue outdegree law.
pub fn structure_report(pipeline: &Pipeline, cfg: &ExperimentConfig, pool: &SamplePool) -> ExperimentReport {
    let mut report = new_report(ExperimentKind::Structure, cfg, pool);
    let constants = &pipeline.analysis.constants;
    report.push_exact("blue_fraction_predicted", constants.blue_fraction);
    report.push_exact("forest_pmf_at_zero", pipeline.analysis.zeta.pmf.first().copied().unwrap_or(0.0));
    let n = pool.len();
    if n == 0 {
        return report;
    }
    let blue = pool.map(|s| s.stats.blue_size as f64 / s.stats.size as f64);
    let (bm, bse) = mean_stderr(&blue);
    report.push("blue_fraction", bm, Some(bse), n);
    report.push("blue_fraction_error", bm - constants.blue_fraction, Some(bse), n);
    if n > 1 {
        let sd = sample_variance(&blue, bm).sqrt();
        report.push("blue_fraction_sd", sd, Some(sd / (2.0 * (n as f64 - 1.0)).sqrt()), n);
    }

    let forest = pool.map(|s| s.stats.max_forest as f64 / (s.stats.size.max(2) as f64).ln());
    let (fm, fse) = mean_stderr(&forest);
    report.push("max_forest_over_log_n_mean", fm, Some(fse), n);
    for (label, q) in [("q50", 0.5), ("q90", 0.9), ("q99", 0.99)] {
        let (v, se) = batch_means(&forest, BATCHES, |xs| quantile(&sorted(xs), q));
        report.push(format!("max_forest_over_log_n_{label}"), v, Some(se), n);
    }

    let pmf = &pipeline.analysis.xi.pmf;
    let (tv, tv_se) = {
        let full = blue_degree_distance(&pool.summaries, pmf);
        let size = n / BATCHES;
        let se = if size > 0 {
            let parts: Vec<f64> = pool.summaries.chunks_exact(size).take(BATCHES).map(|c| blue_degree_distance(c, pmf)).collect();
            mean_stderr(&parts).1
        } else {
            f64::NAN
        };
        (full, se)
    };
    report.push("blue_outdegree_tv_distance", tv, Some(tv_se), n);
    report
}

/// Total-variation distance between the pooled blue outdegree histogram and
/// the offspring law.
fn blue_degree_distance(summaries: &[SampleSummary], pmf: &[f64]) -> f64 {
    let mut hist: Vec<u64> = Vec::new();
    for s in summaries {
        let h = &s.stats.blue_degree_histogram;
        if h.len() > hist.len() {
            hist.resize(h.len(), 0);
        }
        for (a, &b) in hist.iter_mut().zip(h) {
            *a += b as u64;
        }
    }
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return f64::NAN;
    }
    let len = hist.len().max(pmf.len());
    let mut tv = 0.0;
    let mut covered = 0.0;
    for k in 0..len {
        let e = hist.get(k).copied().unwrap_or(0) as f64 / total as f64;
        let p = pmf.get(k).copied().unwrap_or(0.0);
        covered += p;
        tv += (e - p).abs();
    }
    // mass of the law beyond the tabulated support
    0.5 * (tv + (1.0 - covered).max(0.0))
}

/// Chi-square audit of canonical-class frequencies against the uniform law
/// over all classes of size `n`.
pub fn run_uniformity_audit(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.n > UNIFORMITY_LIMIT {
        return Err(HarnessError::AuditTooLarge {
            n: cfg.n,
            limit: UNIFORMITY_LIMIT,
        });
    }
    if cfg.mode != Mode::Exact {
        return Err(HarnessError::Config("uniformity audits sample exact sizes".into()));
    }
    let pipeline = Pipeline::new(cfg)?;
    check_target(&pipeline, cfg, cfg.n)?;
    let classes: Vec<CanonicalTree> = brute_force_enumerate(&cfg.omega, cfg.n)?.into_iter().collect();
    let position: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.encoding.as_str(), i)).collect();
    let start = Instant::now();
    let results = run_indexed(cfg.samples, cfg.workers, |i| {
        draw(&pipeline, cfg, Mode::Exact, cfg.n, i).map(|s| (canonical(&s.tree), s.attempts))
    })?;
    let wall = start.elapsed().as_secs_f64();

    let mut counts = vec![0u64; classes.len()];
    let mut pool = SamplePool {
        wall_seconds: wall,
        ..Default::default()
    };
    let mut attempts = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((code, a)) => {
                let &k = position
                    .get(code.encoding.as_str())
                    .ok_or_else(|| HarnessError::UnknownClass(code.encoding.clone()))?;
                counts[k] += 1;
                attempts.push(a as f64);
            }
            Err(PolyaError::AttemptsExhausted { .. }) => pool.failures.push(i as u64),
            Err(e) => return Err(e.into()),
        }
    }
    let mut report = ExperimentReport::new(ExperimentKind::Uniformity, cfg);
    pool.flag_partial(&mut report);
    let total = attempts.len();
    let (am, ase) = mean_stderr(&attempts);
    report.push("attempts_per_sample", am, Some(ase), total);
    let chi = chi_square_uniform(&counts);
    report.push_exact("classes", classes.len() as f64);
    report.push("chi_square", chi.statistic, Some((2.0 * chi.df as f64).sqrt()), total);
    report.push("chi_square_df", chi.df as f64, None, total);
    report.push("p_value", chi.p_value, None, total);
    #[derive(Serialize)]
    struct ClassCount<'a> {
        encoding: &'a str,
        count: u64,
    }
    let freq: Vec<ClassCount> = classes
        .iter()
        .zip(&counts)
        .map(|(c, &count)| ClassCount {
            encoding: &c.encoding,
            count,
        })
        .collect();
    report.detail("class_counts", freq);
    report.time("workers", cfg.workers);
    report.time("wall_seconds", wall);
    Ok(report)
}

pub fn canonical(tree: &ColoredTree) -> CanonicalTree {
    CanonicalTree::from_parents(&tree.parent_options())
}

/// Attempts per accepted sample across `cfg.sweep()`, with ratios between
/// consecutive sizes and a power-law fit. With `epsilon` set, window-mode
/// attempts are measured alongside.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let pipeline = Pipeline::new(cfg)?;
    let mut report = ExperimentReport::new(ExperimentKind::Bench, cfg);
    report.time("workers", cfg.workers);
    let sizes = cfg.sweep();
    let mut means = Vec::new();
    for &n in &sizes {
        let exact_cfg = ExperimentConfig {
            mode: Mode::Exact,
            ..cfg.clone()
        };
        let pool = collect_samples(&pipeline, &exact_cfg, n)?;
        pool.flag_partial(&mut report);
        let attempts = pool.map(|s| s.attempts as f64);
        let (m, se) = mean_stderr(&attempts);
        report.push(format!("attempts_per_sample_n{n}"), m, Some(se), pool.len());
        report.time(&format!("wall_seconds_n{n}"), pool.wall_seconds);
        report.time(&format!("seconds_per_sample_n{n}"), pool.wall_seconds / pool.len().max(1) as f64);
        means.push((n, m, se));
        if let Some(eps) = cfg.epsilon {
            let window_cfg = ExperimentConfig {
                mode: Mode::Window,
                epsilon: Some(eps),
                ..cfg.clone()
            };
            let wpool = collect_samples(&pipeline, &window_cfg, n)?;
            let (wm, wse) = mean_stderr(&wpool.map(|s| s.attempts as f64));
            report.push(format!("window_attempts_per_sample_n{n}"), wm, Some(wse), wpool.len());
            report.time(&format!("window_wall_seconds_n{n}"), wpool.wall_seconds);
        }
    }
    for pair in means.windows(2) {
        let ((a, ma, sa), (b, mb, sb)) = (pair[0], pair[1]);
        let r = mb / ma;
        let se = r * ((sa / ma).powi(2) + (sb / mb).powi(2)).sqrt();
        report.push(format!("attempts_ratio_n{a}_n{b}"), r, Some(se), cfg.samples);
    }
    if means.len() >= 2 {
        let lx: Vec<f64> = means.iter().map(|m| (m.0 as f64).ln()).collect();
        let ly: Vec<f64> = means.iter().map(|m| m.1.ln()).collect();
        if let Some(fit) = ols(&lx, &ly) {
            report.push("attempts_exponent", fit.slope, Some(fit.slope_stderr), cfg.samples);
        }
    }
    Ok(report)
}

pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match kind {
        ExperimentKind::Height => run_height_experiment(cfg),
        ExperimentKind::Tails => run_tail_experiment(cfg),
        ExperimentKind::Structure => run_structure_experiment(cfg),
        ExperimentKind::Uniformity => run_uniformity_audit(cfg),
        ExperimentKind::Bench => run_benchmark(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(omega: &str, n: usize, samples: usize) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(omega.parse().unwrap(), n, samples, 11);
        c.coeffs = 200;
        c
    }

    #[test]
    fn single_vertex_has_zero_height() {
        let r = run_height_experiment(&cfg("0+", 1, 20)).unwrap();
        assert_eq!(r.value("height_scaled_mean"), 0.0);
        assert!(r.value("attempts_per_sample") >= 1.0);
    }

    #[test]
    fn worker_partition_does_not_matter() {
        let c = cfg("0,2,3", 40, 37);
        let p = Pipeline::new(&c).unwrap();
        let one = collect_samples(&p, &c, 40).unwrap();
        // explicit partial pools over contiguous index ranges, merged
        let parts: Vec<SamplePool> = chunk_ranges(37, 4)
            .into_iter()
            .map(|(lo, hi)| SamplePool {
                summaries: (lo..hi).map(|i| summarize(i, &draw(&p, &c, Mode::Exact, 40, i).unwrap(), false)).collect(),
                ..Default::default()
            })
            .collect();
        let merged = SamplePool::merge(parts);
        let four = collect_samples(&p, &ExperimentConfig { workers: 4, ..c.clone() }, 40).unwrap();
        let key = |pool: &SamplePool| serde_json::to_string(&pool.summaries).unwrap();
        assert_eq!(key(&one), key(&merged));
        assert_eq!(key(&one), key(&four));
        let r1 = height_report(&p, &c, &one).to_json_without_timing();
        let r4 = height_report(&p, &ExperimentConfig { workers: 4, ..c }, &four).to_json_without_timing();
        assert_eq!(r1, r4);
    }

    #[test]
    fn stderr_follows_inverse_square_root() {
        let c = cfg("0+", 60, 400);
        let p = Pipeline::new(&c).unwrap();
        let big = collect_samples(&p, &ExperimentConfig { samples: 1600, ..c.clone() }, 60).unwrap();
        let small = collect_samples(&p, &c, 60).unwrap();
        let se = |pool: &SamplePool| height_report(&p, &c, pool).stat("height_scaled_mean").unwrap().stderr.unwrap();
        // four times the samples halves the standard error
        let ratio = se(&big) / se(&small);
        assert!((ratio - 0.5).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn blue_fraction_one_iff_forests_empty() {
        for omega in ["0+", "0,2", "0,3", "0,2,3", "0,3+"] {
            let c = cfg(omega, 1, 1);
            let p = Pipeline::new(&c).unwrap();
            let all_blue = (p.analysis.constants.blue_fraction - 1.0).abs() < 1e-12;
            let no_forest = (p.analysis.zeta.pmf[0] - 1.0).abs() < 1e-12;
            assert_eq!(all_blue, no_forest, "{omega}");
            assert!(!all_blue);
        }
    }

    #[test]
    fn uniformity_guards() {
        assert!(matches!(run_uniformity_audit(&cfg("0+", 9, 10)), Err(HarnessError::AuditTooLarge { .. })));
        let r = run_uniformity_audit(&cfg("0+", 4, 2000)).unwrap();
        assert_eq!(r.value("classes"), 4.0);
        assert!(r.value("p_value") > 1e-4);
    }

    #[test]
    fn every_experiment_runs_across_the_family() {
        for omega in ["0+", "0,2", "0,3", "0,2,3", "0,3+"] {
            let mut c = cfg(omega, 31, 30);
            c.sizes = vec![13, 31];
            for kind in [ExperimentKind::Height, ExperimentKind::Tails, ExperimentKind::Structure, ExperimentKind::Bench] {
                let r = run_experiment(kind, &c).unwrap_or_else(|e| panic!("{omega} {kind:?}: {e}"));
                assert!(!r.statistics.is_empty());
                assert!(r.to_csv().starts_with("name,value,stderr,samples\n"));
            }
            let small = cfg(omega, 7, 50);
            run_uniformity_audit(&small).unwrap_or_else(|e| panic!("{omega}: {e}"));
        }
    }
}
