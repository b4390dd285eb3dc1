//! Experiment runner behind the `saw-quench` binary.
//!
//! Each subcommand writes its data (CSV) and reports (JSON) into `--out-dir`,
//! prints the primary artifact on stdout and records a manifest with the full
//! configuration. A `--config FILE` of `key=value` lines is spliced in front of
//! the command-line flags, so explicit flags win.
//!
//! Exit status: 0 on success or a passing verdict, 2 on a failing verdict,
//! 1 on usage, budget or input errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::diagnostics::{
    annealing_check, bubble_estimates, fractional_moment_probe, good_walk_trend, pz_check,
    random_neighbor_instances, sample_seeds, variance_ratio, verify_neighbor_inequality,
    VarianceRatioConfig, DEFAULT_SE_SLACK,
};
use crate::enumeration::{check_budget, count_walks, walk_visit_bound, EnumerationConfig, DEFAULT_BUDGET};
use crate::environment::{annealed_critical, DistributionSpec, Environment};
use crate::error::{Error, Result};
use crate::estimators::{connective_constant, h0_reference, sandwich_report, SandwichConfig};
use crate::lattice::Point;
use crate::observables::{annealed_counts, good_walk_counts, quenched_counts, quenched_susceptibility};
use crate::report::Verdict;
use crate::tree::{simulate_ensemble, TreeConfig};

pub const WORKERS_ENV: &str = "SAW_QUENCH_WORKERS";
const DEFAULT_DIST: &str = "gaussian:m=0,var=1";

#[derive(Debug, Parser)]
#[command(name = "saw-quench", version, about = "Self-avoiding walks on random conductors")]
#[command(args_override_self = true)]
struct Cli {
    /// File of `key=value` lines applied before the command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "saw-out")]
    out_dir: PathBuf,
    /// Worker threads (0 = all cores); SAW_QUENCH_WORKERS takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Maximum walk visits per environment evaluation (one seed's work),
    /// checked before any enumeration.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: f64,
    /// Do not print the primary artifact on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact SAW counts c(n).
    #[command(allow_negative_numbers = true)]
    Count(CountArgs),
    /// Quenched counts c_hat(x; n) in one environment.
    #[command(allow_negative_numbers = true)]
    Quenched(QuenchedArgs),
    /// Annealed counts lambda^n c(n), optionally checked against sampled means.
    #[command(allow_negative_numbers = true)]
    Annealed(AnnealedArgs),
    /// Good-walk counts |G(x; n)|.
    #[command(allow_negative_numbers = true)]
    Goodwalks(GoodwalksArgs),
    /// Connective-constant bounds c(n)^(1/n).
    #[command(allow_negative_numbers = true)]
    Mu(CountArgs),
    /// Quenched growth rates against the critical-point bounds.
    #[command(allow_negative_numbers = true)]
    Sandwich(SandwichArgs),
    /// Normalized partition function on the tree.
    #[command(allow_negative_numbers = true)]
    Tree(TreeArgs),
    /// Bubble sums B1, B2.
    #[command(allow_negative_numbers = true)]
    Bubbles(BubblesArgs),
    /// Relative variance of the susceptibility on a beta grid.
    #[command(name = "variance-ratio", allow_negative_numbers = true)]
    VarianceRatio(VarianceRatioArgs),
    /// Fractional-moment ratios rho(n).
    #[command(allow_negative_numbers = true)]
    Fracmom(FracmomArgs),
    /// Neighbor inequality for the truncated susceptibility.
    #[command(name = "verify-lemma", allow_negative_numbers = true)]
    VerifyLemma(VerifyLemmaArgs),
    /// Paley-Zygmund check on a column of samples.
    #[command(allow_negative_numbers = true)]
    Pz(PzArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Count(_) => "count",
            Command::Quenched(_) => "quenched",
            Command::Annealed(_) => "annealed",
            Command::Goodwalks(_) => "goodwalks",
            Command::Mu(_) => "mu",
            Command::Sandwich(_) => "sandwich",
            Command::Tree(_) => "tree",
            Command::Bubbles(_) => "bubbles",
            Command::VarianceRatio(_) => "variance-ratio",
            Command::Fracmom(_) => "fracmom",
            Command::VerifyLemma(_) => "verify-lemma",
            Command::Pz(_) => "pz",
        }
    }

    fn echo(&self) -> Value {
        let v = match self {
            Command::Count(a) | Command::Mu(a) => serde_json::to_value(a),
            Command::Quenched(a) => serde_json::to_value(a),
            Command::Annealed(a) => serde_json::to_value(a),
            Command::Goodwalks(a) => serde_json::to_value(a),
            Command::Sandwich(a) => serde_json::to_value(a),
            Command::Tree(a) => serde_json::to_value(a),
            Command::Bubbles(a) => serde_json::to_value(a),
            Command::VarianceRatio(a) => serde_json::to_value(a),
            Command::Fracmom(a) => serde_json::to_value(a),
            Command::VerifyLemma(a) => serde_json::to_value(a),
            Command::Pz(a) => serde_json::to_value(a),
        };
        v.unwrap_or(Value::Null)
    }
}

const SUBCOMMANDS: &[&str] = &[
    "count", "quenched", "annealed", "goodwalks", "mu", "sandwich", "tree", "bubbles",
    "variance-ratio", "fracmom", "verify-lemma", "pz",
];

#[derive(Debug, Args, Serialize)]
struct CountArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n_max: usize,
    /// Prefix depth for parallel splitting (default depends on d).
    #[arg(long)]
    split_depth: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct EnvArgs {
    #[arg(long, default_value = DEFAULT_DIST)]
    dist: DistributionSpec,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct QuenchedArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n_max: usize,
    #[command(flatten)]
    #[serde(flatten)]
    env: EnvArgs,
    /// Starting point as comma-separated coordinates (default: origin).
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Also report the truncated susceptibility at this h.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    split_depth: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct AnnealedArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n_max: usize,
    #[arg(long, default_value = DEFAULT_DIST)]
    dist: DistributionSpec,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Environments sampled to check the annealing identity (0 = skip).
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SE_SLACK)]
    se_slack: f64,
}

#[derive(Debug, Args, Serialize)]
struct GoodwalksArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n_max: usize,
    #[arg(long, default_value = DEFAULT_DIST)]
    dist: DistributionSpec,
    /// Half-width of the good-walk window (default: a quarter standard deviation).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Environments for the trend and Paley-Zygmund checks (below 2 = skip).
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[arg(long, default_value_t = 4)]
    n_ref: usize,
    #[arg(long, default_value_t = 0.5)]
    floor: f64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
}

#[derive(Debug, Args, Serialize)]
struct SandwichArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n_max: usize,
    #[arg(long, default_value = DEFAULT_DIST)]
    dist: DistributionSpec,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Number of environments, seeded `seed, seed + 1, ...`.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Verdict tolerance (default: 3 x max fit residual + h0 slack).
    #[arg(long)]
    tol: Option<f64>,
    /// Fit window `lo,hi`.
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    split_depth: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct TreeArgs {
    #[arg(long, default_value_t = 3)]
    ell: usize,
    #[arg(long, default_value = DEFAULT_DIST)]
    dist: DistributionSpec,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long, default_value_t = 0.01)]
    cut: f64,
}

#[derive(Debug, Args, Serialize)]
struct BubblesArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n_max: usize,
    #[arg(long, default_value = DEFAULT_DIST)]
    dist: DistributionSpec,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long)]
    h: f64,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct VarianceRatioArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n_max: usize,
    #[arg(long, default_value = DEFAULT_DIST)]
    dist: DistributionSpec,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.4")]
    betas: Vec<f64>,
    /// Absolute h; overrides `--h-offset`.
    #[arg(long)]
    h: Option<f64>,
    /// h = log(inf_n c(n)^(1/n)) at `--h0-n` plus this offset.
    #[arg(long, default_value_t = 0.6)]
    h_offset: f64,
    #[arg(long, default_value_t = 8)]
    h0_n: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.4)]
    slope_tol: f64,
    #[arg(long)]
    split_depth: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct FracmomArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value = DEFAULT_DIST)]
    dist: DistributionSpec,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 1)]
    n_min: usize,
    #[arg(long)]
    n_max: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    margin: f64,
}

#[derive(Debug, Args, Serialize)]
struct VerifyLemmaArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n_max: usize,
    #[arg(long, default_value = DEFAULT_DIST)]
    dist: DistributionSpec,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    v: Option<String>,
    /// Draw this many random (seed, u, v, h, beta) instances from `--seed`
    /// instead of checking a single pair.
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.3,2.0")]
    h_range: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1.5")]
    beta_range: Vec<f64>,
    #[arg(long)]
    split_depth: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct PzArgs {
    /// CSV file; a header row is skipped when not numeric.
    #[arg(long)]
    input: PathBuf,
    /// Column name (with a header) or zero-based index; default is the last column.
    #[arg(long)]
    column: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = DEFAULT_SE_SLACK)]
    se_slack: f64,
}

/// Result of one subcommand before anything is written.
struct Outcome {
    primary: String,
    files: Vec<(String, String)>,
    verdict: Option<Verdict>,
}

impl Outcome {
    fn new(primary_name: &str, primary: String) -> Self {
        Outcome {
            files: vec![(primary_name.to_string(), primary.clone())],
            primary,
            verdict: None,
        }
    }

    fn file(mut self, name: impl Into<String>, contents: String) -> Self {
        self.files.push((name.into(), contents));
        self
    }
}

fn to_json(value: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn parse_point(s: &str, dim: usize) -> Result<Point> {
    let coords: std::result::Result<Vec<i64>, _> = s.split(',').map(|c| c.trim().parse()).collect();
    let coords = coords.map_err(|_| Error::InvalidArgument(format!("cannot parse point {s:?}")))?;
    if coords.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: coords.len(),
        });
    }
    Ok(Point::new(coords))
}

fn enum_config(d: usize, n_max: usize, split: Option<usize>) -> Result<EnumerationConfig> {
    match split {
        Some(s) => EnumerationConfig::with_split(d, n_max, s),
        None => EnumerationConfig::parallel(d, n_max),
    }
}

fn point_cell(p: &Point) -> String {
    let coords: Vec<String> = p.coords().iter().map(i64::to_string).collect();
    format!("\"{}\"", coords.join(","))
}

fn run_count(a: &CountArgs, budget: f64) -> Result<Outcome> {
    check_budget(walk_visit_bound(a.d, a.n_max), budget)?;
    let counts = count_walks(&enum_config(a.d, a.n_max, a.split_depth)?)?;
    Ok(Outcome::new("counts.csv", counts.to_csv("c")))
}

fn run_mu(a: &CountArgs, budget: f64) -> Result<Outcome> {
    check_budget(walk_visit_bound(a.d, a.n_max.max(2)), budget)?;
    let cc = connective_constant(a.d, a.n_max)?;
    let mut csv = String::from("n,c,root,running_inf\n");
    for n in 1..=a.n_max {
        csv.push_str(&format!(
            "{n},{},{:?},{:?}\n",
            cc.counts.values[n],
            cc.roots[n - 1],
            cc.running_inf[n - 1]
        ));
    }
    let h0 = h0_reference(a.d, a.n_max)?;
    let summary = json!({
        "d": a.d,
        "n_max": a.n_max,
        "inf": cc.inf,
        "h0_est": cc.h0_est,
        "h0_reference": h0,
    });
    Ok(Outcome::new("mu.csv", csv).file("mu.json", to_json(&summary)?))
}

fn run_quenched(a: &QuenchedArgs, budget: f64) -> Result<Outcome> {
    check_budget(walk_visit_bound(a.d, a.n_max), budget)?;
    let cfg = enum_config(a.d, a.n_max, a.split_depth)?;
    let env = Environment::new(a.env.dist, a.env.seed, a.d)?;
    let x = match &a.x {
        Some(s) => parse_point(s, a.d)?,
        None => Point::origin(a.d),
    };
    let q = quenched_counts(&cfg, &env, a.env.beta, &x)?;
    let seed = a.env.seed;
    let mut out = Outcome::new(&format!("quenched_seed{seed}.csv"), q.to_csv());
    if let Some(h) = a.h {
        let chi = quenched_susceptibility(&cfg, &env, h, a.env.beta, &x)?;
        let summary = json!({
            "seed": seed,
            "dist": a.env.dist,
            "beta": a.env.beta,
            "x": x,
            "h": h,
            "susceptibility": chi,
        });
        out = out.file(format!("quenched_seed{seed}.json"), to_json(&summary)?);
    }
    Ok(out)
}

fn run_annealed(a: &AnnealedArgs, budget: f64) -> Result<Outcome> {
    let one = walk_visit_bound(a.d, a.n_max);
    check_budget(one, budget)?;
    let counts = count_walks(&EnumerationConfig::parallel(a.d, a.n_max)?)?;
    let mean = annealed_counts(&a.dist, a.beta, a.d, a.n_max)?;
    let mut csv = String::from("n,c,mean_c_hat\n");
    for n in 0..=a.n_max {
        csv.push_str(&format!("{n},{},{:?}\n", counts.values[n], mean.values[n]));
    }
    let h0 = h0_reference(a.d, a.n_max.max(2))?;
    let summary = json!({
        "dist": a.dist,
        "beta": a.beta,
        "log_lambda": a.dist.log_laplace(a.beta)?,
        "h0_reference": h0,
        "annealed_critical": annealed_critical(&a.dist, a.beta, h0.value)?,
    });
    let mut out = Outcome::new("annealed.csv", csv).file("annealed.json", to_json(&summary)?);
    if a.samples >= 2 {
        let report = annealing_check(&a.dist, a.beta, a.d, a.n_max, a.samples, a.seed, a.se_slack)?;
        out.verdict = Some(report.verdict);
        if let Some(t) = &report.per_seed {
            out = out.file("annealing_per_seed.csv", t.to_csv());
        }
        out = out.file("annealing_report.json", to_json(&report)?);
    }
    Ok(out)
}

fn run_goodwalks(a: &GoodwalksArgs, budget: f64) -> Result<Outcome> {
    let one = walk_visit_bound(a.d, a.n_max);
    check_budget(one, budget)?;
    let delta = a.delta.unwrap_or_else(|| a.dist.default_delta());
    let cfg = EnumerationConfig::parallel(a.d, a.n_max)?;
    let env = Environment::new(a.dist, a.seed, a.d)?;
    let g = good_walk_counts(&cfg, &env, &Point::origin(a.d), delta)?;
    let mut out = Outcome::new(&format!("goodwalks_seed{}.csv", a.seed), g.to_csv());
    if a.samples >= 2 {
        let report = good_walk_trend(
            &a.dist, a.d, a.n_ref, a.n_max, delta, a.samples, a.seed, a.floor, a.eps,
        )?;
        out.verdict = Some(report.verdict);
        if let Some(t) = &report.per_seed {
            out = out.file("goodwalks_per_seed.csv", t.to_csv());
        }
        out = out.file("goodwalks_report.json", to_json(&report)?);
    }
    Ok(out)
}

fn run_sandwich(a: &SandwichArgs, budget: f64) -> Result<Outcome> {
    let one = walk_visit_bound(a.d, a.n_max);
    check_budget(one, budget)?;
    let mut cfg = SandwichConfig::new(a.d, a.n_max, a.dist, a.beta, sample_seeds(a.seed, a.seeds));
    cfg.tol = a.tol;
    if let Some(s) = a.split_depth {
        cfg.split_depth = s;
    }
    if let Some(w) = &a.window {
        let parts: Vec<usize> = w
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse window {w:?}")))?;
        match parts[..] {
            [lo, hi] => cfg.window = Some((lo, hi)),
            _ => return Err(Error::InvalidArgument(format!("window must be lo,hi, got {w:?}"))),
        }
    }
    let report = sandwich_report(&cfg)?;
    let mut csv = String::from("seed,x,slope,residual\n");
    for e in &report.estimates {
        csv.push_str(&format!("{},{},{:?},{:?}\n", e.seed, point_cell(&e.x), e.slope, e.residual));
    }
    let json = to_json(&report)?;
    let mut out = Outcome::new("sandwich.json", json).file("sandwich_estimates.csv", csv);
    out.verdict = Some(report.verdict);
    Ok(out)
}

fn run_tree(a: &TreeArgs, budget: f64) -> Result<Outcome> {
    let cfg = TreeConfig::new(a.ell, a.dist, a.beta, a.depth, a.seed)?.with_budget(budget);
    let seeds = sample_seeds(a.seed, a.seeds.max(1));
    let ens = simulate_ensemble(&cfg, &seeds, a.cut)?;
    let first = &ens.trajectories[0];
    let mut out = Outcome::new(&format!("tree_seed{}.csv", first.seed), first.to_csv())
        .file("tree.json", to_json(&ens.summary)?);
    if seeds.len() > 1 {
        let mut csv = String::from("n,mean_Z,std_error\n");
        for (i, (m, se)) in ens.summary.mean_z.iter().zip(&ens.summary.std_error_z).enumerate() {
            csv.push_str(&format!("{},{m:?},{se:?}\n", i + 1));
        }
        out = out.file("tree_ensemble.csv", csv);
    }
    Ok(out)
}

fn run_bubbles(a: &BubblesArgs, budget: f64) -> Result<Outcome> {
    let est = bubble_estimates(&a.dist, a.beta, a.h, a.d, a.n_max, a.samples, a.seed, budget)?;
    let report = est.report(&a.dist, a.d)?;
    let json = to_json(&json!({ "estimate": est, "report": report }))?;
    let mut out = Outcome::new("bubbles.json", json);
    if let Some(t) = &report.per_seed {
        out = out.file("bubbles_per_seed.csv", t.to_csv());
    }
    out.verdict = Some(report.verdict);
    Ok(out)
}

fn run_variance_ratio(a: &VarianceRatioArgs, budget: f64) -> Result<Outcome> {
    check_budget(walk_visit_bound(a.d, a.n_max), budget)?;
    let h = match a.h {
        Some(h) => h,
        None => {
            check_budget(walk_visit_bound(a.d, a.h0_n), budget)?;
            h0_reference(a.d, a.h0_n)?.value + a.h_offset
        }
    };
    let mut cfg = VarianceRatioConfig::new(a.dist, a.betas.clone(), h, a.d, a.n_max, a.samples, a.seed);
    cfg.slope_tol = a.slope_tol;
    cfg.bound_budget = budget;
    if let Some(s) = a.split_depth {
        cfg.split_depth = s;
    }
    let report = variance_ratio(&cfg)?;
    let mut out = Outcome::new("variance_ratio.json", to_json(&report)?);
    if let Some(t) = &report.per_seed {
        out = out.file("variance_ratio_per_seed.csv", t.to_csv());
    }
    out.verdict = Some(report.verdict);
    Ok(out)
}

fn run_fracmom(a: &FracmomArgs, budget: f64) -> Result<Outcome> {
    check_budget(walk_visit_bound(a.d, a.n_max), budget)?;
    let report = fractional_moment_probe(
        &a.dist, a.beta, a.theta, a.d, a.n_min, a.n_max, a.samples, a.seed, a.margin,
    )?;
    let mut out = Outcome::new("fracmom.json", to_json(&report)?);
    if let Some(t) = &report.per_seed {
        out = out.file("fracmom_per_seed.csv", t.to_csv());
    }
    out.verdict = Some(report.verdict);
    Ok(out)
}

fn run_verify_lemma(a: &VerifyLemmaArgs, budget: f64) -> Result<Outcome> {
    let per = walk_visit_bound(a.d, a.n_max) + walk_visit_bound(a.d, a.n_max + 1);
    check_budget(per, budget)?;
    let cfg = enum_config(a.d, a.n_max, a.split_depth)?;
    let range = |r: &[f64], name: &str| match r {
        [lo, hi] if lo <= hi => Ok((*lo, *hi)),
        _ => Err(Error::InvalidArgument(format!("{name} must be lo,hi"))),
    };
    let instances = match a.instances {
        Some(count) => {
            random_neighbor_instances(
                a.d,
                count,
                a.seed,
                3,
                range(&a.h_range, "h-range")?,
                range(&a.beta_range, "beta-range")?,
            )
        }
        None => {
            let u = match &a.u {
                Some(s) => parse_point(s, a.d)?,
                None => Point::origin(a.d),
            };
            let v = match &a.v {
                Some(s) => parse_point(s, a.d)?,
                None => Point::on_axis(a.d, 0, 1),
            };
            vec![crate::diagnostics::NeighborInstance {
                seed: a.seed,
                u,
                v,
                h: a.h,
                beta: a.beta,
            }]
        }
    };
    let mut reports = Vec::with_capacity(instances.len());
    for inst in &instances {
        let env = Environment::new(a.dist, inst.seed, a.d)?;
        reports.push(verify_neighbor_inequality(&cfg, &env, inst.h, inst.beta, &inst.u, &inst.v)?);
    }
    let mut csv = String::from("seed,u,v,h,beta,log_lhs,log_rhs,verdict\n");
    for (inst, r) in instances.iter().zip(&reports) {
        csv.push_str(&format!(
            "{},{},{},{:?},{:?},{:?},{:?},{}\n",
            inst.seed,
            point_cell(&inst.u),
            point_cell(&inst.v),
            inst.h,
            inst.beta,
            r.get("log_lhs").unwrap_or(f64::NAN),
            r.get("log_rhs").unwrap_or(f64::NAN),
            if r.verdict.is_fail() { "fail" } else { "pass" }
        ));
    }
    let failures = reports.iter().filter(|r| r.verdict.is_fail()).count();
    let verdict = Verdict::from_bool(failures == 0);
    let summary = json!({
        "instances": instances.len(),
        "failures": failures,
        "verdict": verdict,
        "reports": reports,
    });
    let mut out = Outcome::new("verify_lemma.json", to_json(&summary)?).file("verify_lemma.csv", csv);
    out.verdict = Some(verdict);
    Ok(out)
}

fn read_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
    let split = |l: &str| l.split(',').map(|c| c.trim().trim_matches('"').to_string()).collect::<Vec<_>>();
    let header = match lines.peek() {
        Some(first) if split(first).iter().any(|c| c.parse::<f64>().is_err()) => {
            Some(split(lines.next().unwrap()))
        }
        _ => None,
    };
    let index = |width: usize| -> Result<usize> {
        match column {
            None => Ok(width.saturating_sub(1)),
            Some(c) => {
                if let Some(h) = &header {
                    if let Some(i) = h.iter().position(|name| name == c) {
                        return Ok(i);
                    }
                }
                c.parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("no column {c:?} in {}", path.display())))
            }
        }
    };
    let mut values = Vec::new();
    for line in lines {
        let cells = split(line);
        let i = index(cells.len())?;
        let cell = cells
            .get(i)
            .ok_or_else(|| Error::InvalidArgument(format!("row {line:?} has no column {i}")))?;
        values.push(
            cell.parse()
                .map_err(|_| Error::InvalidArgument(format!("{cell:?} is not a number")))?,
        );
    }
    Ok(values)
}

fn run_pz(a: &PzArgs) -> Result<Outcome> {
    let samples = read_column(&a.input, a.column.as_deref())?;
    let report = pz_check(&samples, a.eps, a.se_slack)?;
    let mut out = Outcome::new("pz.json", to_json(&report)?);
    out.verdict = Some(report.verdict);
    Ok(out)
}

/// Reads `key=value` lines into `--key=value` tokens.
fn config_tokens(path: &Path) -> Result<Vec<OsString>> {
    let text = fs::read_to_string(path)?;
    let mut tokens = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("{}:{}: expected key=value", path.display(), i + 1))
        })?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        let value = v.trim();
        if value == "true" {
            tokens.push(format!("--{key}").into());
        } else {
            tokens.push(format!("--{key}={value}").into());
        }
    }
    Ok(tokens)
}

/// Splices config-file tokens in right after the subcommand name.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut iter = args.iter().enumerate();
    while let Some((i, a)) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
            iter.next();
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else { return Ok(args) };
    let tokens = config_tokens(&path)?;
    let at = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map(|i| i + 1)
        .unwrap_or(args.len());
    let mut out = args[..at].to_vec();
    out.extend(tokens);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

fn workers(flag: usize) -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{WORKERS_ENV}={v:?} is not a worker count"))),
        Err(_) => Ok(flag),
    }
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let budget = cli.budget;
    match &cli.command {
        Command::Count(a) => run_count(a, budget),
        Command::Mu(a) => run_mu(a, budget),
        Command::Quenched(a) => run_quenched(a, budget),
        Command::Annealed(a) => run_annealed(a, budget),
        Command::Goodwalks(a) => run_goodwalks(a, budget),
        Command::Sandwich(a) => run_sandwich(a, budget),
        Command::Tree(a) => run_tree(a, budget),
        Command::Bubbles(a) => run_bubbles(a, budget),
        Command::VarianceRatio(a) => run_variance_ratio(a, budget),
        Command::Fracmom(a) => run_fracmom(a, budget),
        Command::VerifyLemma(a) => run_verify_lemma(a, budget),
        Command::Pz(a) => run_pz(a),
    }
}

fn write_outputs(cli: &Cli, outcome: &Outcome, workers: usize, started: Instant) -> Result<()> {
    fs::create_dir_all(&cli.out_dir)?;
    for (name, contents) in &outcome.files {
        fs::write(cli.out_dir.join(name), contents)?;
    }
    let name = cli.command.name();
    let manifest = json!({
        "subcommand": name,
        "config": cli.command.echo(),
        "budget": cli.budget,
        "workers": workers,
        "config_file": cli.config,
        "outputs": outcome.files.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        "verdict": outcome.verdict,
        "versions": {
            "saw-quench": env!("CARGO_PKG_VERSION"),
            "os": std::env::consts::OS,
            "arch": std::env::consts::ARCH,
        },
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    fs::write(cli.out_dir.join(format!("manifest_{name}.json")), to_json(&manifest)?)?;
    Ok(())
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let started = Instant::now();
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = workers(cli.workers).and_then(|n| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?;
        let outcome = pool.install(|| execute(&cli))?;
        write_outputs(&cli, &outcome, pool.current_num_threads(), started)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            if !cli.quiet {
                print!("{}", outcome.primary);
            }
            match outcome.verdict {
                Some(v) if v.is_fail() => {
                    eprintln!("verdict: fail");
                    2
                }
                _ => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
