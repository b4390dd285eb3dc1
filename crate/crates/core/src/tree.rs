//! Self-avoiding (non-backtracking) paths on the homogeneous tree of degree
//! `ell` with i.i.d. edge conductances.
//!
//! `Z(n)` is the sum over the `ell (ell-1)^(n-1)` paths of length n from the
//! root of `prod_j exp(-beta X_j) / lambda_beta`, divided by the path count.
//! It is a positive mean-one martingale; whether its limit is positive is
//! decided by the sign of [`dichotomy_f`].

use rayon::prelude::*;
use serde::Serialize;

use crate::enumeration::{check_budget, DEFAULT_BUDGET};
use crate::environment::{tree_child_key, tree_root_key, unit_interval, DistributionSpec};
use crate::error::{check_beta, Error, Result};
use crate::stats::Moments;
use crate::sum::ExactSum;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TreeConfig {
    pub ell: usize,
    pub dist: DistributionSpec,
    pub beta: f64,
    pub depth: usize,
    pub seed: u64,
    /// Cap on edge visits of one traversal, checked before any work.
    pub budget: f64,
}

impl TreeConfig {
    pub fn new(ell: usize, dist: DistributionSpec, beta: f64, depth: usize, seed: u64) -> Result<Self> {
        if ell < 3 {
            return Err(Error::InvalidArgument(format!("tree degree must be >= 3, got {ell}")));
        }
        if depth < 1 {
            return Err(Error::InvalidArgument("depth must be >= 1".into()));
        }
        check_beta(beta)?;
        Ok(TreeConfig {
            ell,
            dist,
            beta,
            depth,
            seed,
            budget: DEFAULT_BUDGET,
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        TreeConfig { seed, ..*self }
    }

    pub fn with_budget(&self, budget: f64) -> Self {
        TreeConfig { budget, ..*self }
    }

    /// Number of paths of length n from the root.
    pub fn path_count(&self, n: usize) -> f64 {
        self.ell as f64 * (self.ell as f64 - 1.0).powi(n as i32 - 1)
    }

    /// Total edge visits of one full traversal.
    pub fn visit_bound(&self) -> f64 {
        (1..=self.depth).map(|n| self.path_count(n)).sum()
    }
}

/// `X` on the tree edge with the given key.
pub fn tree_conductance(dist: &DistributionSpec, key: u64) -> f64 {
    match *dist {
        DistributionSpec::Constant { value } => value,
        d => d.quantile(unit_interval(key)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MartingaleTrajectory {
    pub seed: u64,
    /// `Z(n)` for `n = 1..=depth` (index 0 is `n = 1`).
    pub z: Vec<f64>,
}

impl MartingaleTrajectory {
    pub fn last(&self) -> f64 {
        *self.z.last().expect("depth >= 1")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,Z\n");
        for (i, z) in self.z.iter().enumerate() {
            out.push_str(&format!("{},{:?}\n", i + 1, z));
        }
        out
    }
}

struct Traversal<'a> {
    cfg: &'a TreeConfig,
    log_lambda: f64,
    acc: Vec<ExactSum>,
}

impl Traversal<'_> {
    fn descend(&mut self, key: u64, depth: usize, log_weight: f64, children: usize) {
        for child in 0..children {
            let k = tree_child_key(key, child);
            let x = tree_conductance(&self.cfg.dist, k);
            let w = log_weight + (-self.cfg.beta * x - self.log_lambda);
            self.acc[depth].add_exp(w);
            if depth + 1 < self.cfg.depth {
                self.descend(k, depth + 1, w, self.cfg.ell - 1);
            }
        }
    }
}

/// Exact `Z(1..=depth)` by full traversal.
pub fn simulate_martingale(cfg: &TreeConfig) -> Result<MartingaleTrajectory> {
    check_beta(cfg.beta)?;
    check_budget(cfg.visit_bound(), cfg.budget)?;
    let mut t = Traversal {
        cfg,
        log_lambda: cfg.dist.log_laplace(cfg.beta)?,
        acc: vec![ExactSum::new(); cfg.depth],
    };
    t.descend(tree_root_key(cfg.seed), 0, 0.0, cfg.ell);
    let z = t
        .acc
        .iter()
        .enumerate()
        .map(|(i, s)| s.value() / cfg.path_count(i + 1))
        .collect();
    Ok(MartingaleTrajectory { seed: cfg.seed, z })
}

/// `f(beta) = log(ell-1) + log lambda_beta - beta lambda'_beta / lambda_beta`.
pub fn dichotomy_f(ell: usize, dist: &DistributionSpec, beta: f64) -> Result<f64> {
    if ell < 3 {
        return Err(Error::InvalidArgument(format!("tree degree must be >= 3, got {ell}")));
    }
    let disorder = dist.log_laplace(beta)? - beta * dist.log_laplace_derivative(beta)?;
    Ok((ell as f64 - 1.0).ln() + disorder)
}

/// Root of `f` in `[lo, hi]` by bisection, or `None` without a sign change.
pub fn dichotomy_root(
    ell: usize,
    dist: &DistributionSpec,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Option<f64>> {
    let (mut a, mut b) = (lo, hi);
    let fa = dichotomy_f(ell, dist, a)?;
    let fb = dichotomy_f(ell, dist, b)?;
    if fa == 0.0 {
        return Ok(Some(a));
    }
    if fb == 0.0 {
        return Ok(Some(b));
    }
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = dichotomy_f(ell, dist, m)?;
        if fm == 0.0 {
            return Ok(Some(m));
        }
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeSummary {
    pub ell: usize,
    pub beta: f64,
    pub dist: DistributionSpec,
    pub depth: usize,
    pub f_beta: f64,
    pub mean_z_final: f64,
    pub std_error_z_final: f64,
    pub cut: f64,
    pub frac_above_cut: f64,
    pub seeds: Vec<u64>,
    /// Mean and standard error of `Z(n)` across seeds, `n = 1..=depth`.
    pub mean_z: Vec<f64>,
    pub std_error_z: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TreeEnsemble {
    pub trajectories: Vec<MartingaleTrajectory>,
    pub summary: TreeSummary,
}

/// Runs every seed (in parallel) and summarizes `Z(depth)` against `cut`.
pub fn simulate_ensemble(cfg: &TreeConfig, seeds: &[u64], cut: f64) -> Result<TreeEnsemble> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds".into()));
    }
    check_budget(cfg.visit_bound(), cfg.budget)?;
    let trajectories: Vec<MartingaleTrajectory> = seeds
        .par_iter()
        .map(|&s| simulate_martingale(&cfg.with_seed(s).with_budget(f64::INFINITY)))
        .collect::<Result<_>>()?;
    let per_n: Vec<Moments> = (0..cfg.depth)
        .map(|i| Moments::from_slice(&trajectories.iter().map(|t| t.z[i]).collect::<Vec<_>>()))
        .collect();
    let last = per_n.last().expect("depth >= 1");
    let above = trajectories.iter().filter(|t| t.last() > cut).count();
    let summary = TreeSummary {
        ell: cfg.ell,
        beta: cfg.beta,
        dist: cfg.dist,
        depth: cfg.depth,
        f_beta: dichotomy_f(cfg.ell, &cfg.dist, cfg.beta)?,
        mean_z_final: last.mean(),
        std_error_z_final: last.std_error(),
        cut,
        frac_above_cut: above as f64 / seeds.len() as f64,
        seeds: seeds.to_vec(),
        mean_z: per_n.iter().map(Moments::mean).collect(),
        std_error_z: per_n.iter().map(Moments::std_error).collect(),
    };
    Ok(TreeEnsemble {
        trajectories,
        summary,
    })
}
