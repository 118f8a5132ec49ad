use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use harness::config::{ConfigLayer, ExperimentKind, Format};
use harness::experiment::run_experiment;
use polya::analysis::DEFAULT_SOLVE_TOL;
use polya::crt::{crt_height_moment, crt_height_tail, DEFAULT_CUTOFF};
use polya::enumerate::{brute_force_enumerate, count_coefficients, DEFAULT_ORDER};
use polya::laws::Analysis;
use polya::rng::stream;
use polya::sampler::{ColoredTree, Sampler, NO_PARENT};
use polya::DegreeSet;
use serde::Serialize;

/// Enumerate, analyze and sample Pólya trees with restricted outdegrees.
#[derive(Parser)]
#[command(name = "polya", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact counts a_n for n = 0..=max-n.
    Enum {
        #[arg(long)]
        omega: DegreeSet,
        #[arg(long)]
        max_n: usize,
        /// Cross-check counts against brute-force enumeration up to this size.
        #[arg(long)]
        oracle_check: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Singularity, offspring and forest laws, scaling constants.
    Solve {
        #[arg(long)]
        omega: DegreeSet,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        coeffs: usize,
        #[arg(long, default_value_t = DEFAULT_SOLVE_TOL)]
        tol: f64,
    },
    /// Uniform random trees of a given size.
    Sample {
        #[arg(long)]
        omega: DegreeSet,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Accept any size within n(1 ± eps) instead of exactly n.
        #[arg(long)]
        window: Option<f64>,
        #[arg(long, value_enum, default_value_t = TreeFormat::Newick)]
        format: TreeFormat,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = u64::MAX)]
        max_attempts: u64,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        coeffs: usize,
    },
    /// Height law of the continuum random tree.
    Crt {
        /// Tail probability P(H > x).
        #[arg(long, conflicts_with = "moment", required_unless_present = "moment")]
        tail: Option<f64>,
        /// Moment E[H^p].
        #[arg(long)]
        moment: Option<u32>,
    },
    /// Monte Carlo experiments; flags override values from --config.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
        /// TOML file with the same keys as the flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        layer: ConfigLayer,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeFormat {
    Newick,
    ParentArray,
    Json,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Enum {
            omega,
            max_n,
            oracle_check,
            format,
        } => enumerate(&omega, max_n, oracle_check, format)?,
        Command::Solve { omega, coeffs, tol } => solve(&omega, coeffs, tol)?,
        Command::Sample {
            omega,
            n,
            count,
            seed,
            window,
            format,
            workers,
            max_attempts,
            coeffs,
        } => sample(&omega, n, count, seed, window, format, workers, max_attempts, coeffs)?,
        Command::Crt { tail, moment } => match (tail, moment) {
            (Some(x), _) => {
                if x < 0.0 {
                    bail!("tail argument must be nonnegative");
                }
                format!("{}\n", crt_height_tail(x, DEFAULT_CUTOFF))
            }
            (None, Some(p)) if p >= 1 => format!("{}\n", crt_height_moment(p)),
            _ => bail!("moment order must be at least 1"),
        },
        Command::Experiment { kind, config, layer } => {
            let file = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    ConfigLayer::from_toml(&text)?
                }
                None => ConfigLayer::default(),
            };
            let cfg = layer.over(file).resolve()?;
            let report = run_experiment(kind, &cfg)?;
            let text = match cfg.format {
                Format::Json => report.to_json() + "\n",
                Format::Csv => report.to_csv(),
            };
            if let Some(path) = &cfg.out {
                fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
                String::new()
            } else {
                text
            }
        }
    };
    std::io::stdout().lock().write_all(out.as_bytes())?;
    Ok(())
}

fn enumerate(omega: &DegreeSet, max_n: usize, oracle_check: Option<usize>, format: Format) -> Result<String> {
    let counts = count_coefficients(omega, max_n);
    if let Some(limit) = oracle_check {
        for n in 1..=limit.min(max_n) {
            let classes = brute_force_enumerate(omega, n)?;
            let expected = counts.get(n);
            if *expected != classes.len().into() {
                bail!("count mismatch at n = {n}: series gives {expected}, enumeration finds {}", classes.len());
            }
        }
    }
    Ok(match format {
        Format::Csv => (0..=max_n).map(|n| format!("{n},{}\n", counts.get(n))).collect(),
        Format::Json => {
            let values: Vec<String> = (0..=max_n).map(|n| counts.get(n).to_string()).collect();
            serde_json::to_string(&values)? + "\n"
        }
    })
}

const PMF_PREVIEW: usize = 32;

fn solve(omega: &DegreeSet, coeffs: usize, tol: f64) -> Result<String> {
    #[derive(Serialize)]
    struct Solved<'a> {
        omega: String,
        rho: f64,
        a_rho: f64,
        mean_xi: f64,
        sigma2: f64,
        mean_zeta: f64,
        c_omega: f64,
        d_omega: f64,
        blue_fraction: f64,
        residual: f64,
        xi_pmf: &'a [f64],
        zeta_pmf: &'a [f64],
    }
    let a = Analysis::run(omega, coeffs, tol)?;
    let c = &a.constants;
    let solved = Solved {
        omega: omega.to_string(),
        rho: a.sing.rho,
        a_rho: a.sing.a_rho,
        mean_xi: c.mean_xi,
        sigma2: c.sigma2,
        mean_zeta: c.mean_zeta,
        c_omega: c.c_omega,
        d_omega: c.d_omega,
        blue_fraction: c.blue_fraction,
        residual: a.sing.residual,
        xi_pmf: &a.xi.pmf[..a.xi.pmf.len().min(PMF_PREVIEW)],
        zeta_pmf: &a.zeta.pmf[..a.zeta.pmf.len().min(PMF_PREVIEW)],
    };
    Ok(serde_json::to_string_pretty(&solved)? + "\n")
}

#[allow(clippy::too_many_arguments)]
fn sample(
    omega: &DegreeSet,
    n: usize,
    count: usize,
    seed: u64,
    window: Option<f64>,
    format: TreeFormat,
    workers: usize,
    max_attempts: u64,
    coeffs: usize,
) -> Result<String> {
    if workers == 0 {
        bail!("workers must be at least 1");
    }
    let a = Analysis::run(omega, coeffs, DEFAULT_SOLVE_TOL)?;
    let sampler = Sampler::new(omega, &a.counts, &a.sing)?;
    let trees = harness::experiment::run_indexed(count, workers, |i| {
        let mut rng = stream(seed, i);
        match window {
            Some(eps) => sampler.sample_window(n, eps, max_attempts, &mut rng),
            None => sampler.sample_exact(n, max_attempts, &mut rng),
        }
    })?;
    let trees = trees.into_iter().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(match format {
        TreeFormat::Newick => trees.iter().map(|s| s.tree.to_newick() + "\n").collect(),
        TreeFormat::ParentArray => trees.iter().map(|s| parent_array(&s.tree)).collect(),
        TreeFormat::Json => {
            #[derive(Serialize)]
            struct Tree {
                size: usize,
                attempts: u64,
                parent: Vec<i64>,
                blue: Vec<u8>,
            }
            let out: Vec<Tree> = trees
                .iter()
                .map(|s| Tree {
                    size: s.tree.size(),
                    attempts: s.attempts,
                    parent: parents_signed(&s.tree),
                    blue: s.tree.blue().iter().map(|&b| u8::from(b)).collect(),
                })
                .collect();
            serde_json::to_string(&out)? + "\n"
        }
    })
}

fn parents_signed(t: &ColoredTree) -> Vec<i64> {
    t.parents().iter().map(|&p| if p == NO_PARENT { -1 } else { p as i64 }).collect()
}

fn parent_array(t: &ColoredTree) -> String {
    let join = |v: Vec<String>| v.join(" ");
    let parents = join(parents_signed(t).iter().map(i64::to_string).collect());
    let blue = join(t.blue().iter().map(|&b| u8::from(b).to_string()).collect());
    format!("{parents}\n{blue}\n")
}
