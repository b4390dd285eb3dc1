//! Inequality verifiers and second-moment diagnostics.
//!
//! Every Monte Carlo routine draws environments from the consecutive seeds
//! `seed, seed + 1, ...` (see [`sample_seeds`]) and evaluates them in parallel;
//! per-seed results are collected in seed order, so reports do not depend on
//! the worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::details;
use crate::enumeration::{check_budget, count_walks, walk_visit_bound, EnumerationConfig};
use crate::environment::{mix64, DistributionSpec, Environment};
use crate::error::{check_beta, Error, Result};
use crate::estimators::h0_reference;
use crate::lattice::{canonical_bond, Point};
use crate::observables::{good_walk_counts, quenched_counts, two_point_table, weighted_series};
use crate::report::{DiagnosticsReport, PerSeedTable, Verdict};
use crate::stats::{fit_line, jackknife, Moments};

/// Default Monte Carlo slack, in standard errors.
pub const DEFAULT_SE_SLACK: f64 = 4.0;

pub fn sample_seeds(seed: u64, samples: usize) -> Vec<u64> {
    (0..samples as u64).map(|i| seed.wrapping_add(i)).collect()
}

fn check_samples(samples: usize, min: usize) -> Result<()> {
    if samples < min {
        return Err(Error::InvalidArgument(format!(
            "need at least {min} samples, got {samples}"
        )));
    }
    Ok(())
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// True when every sample is bit-identical (a deterministic functional).
fn all_identical(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0].to_bits() == w[1].to_bits())
}

// ---------------------------------------------------------------------------
// Neighbor inequality

/// Checks `chi_<=n(u) <= chi_<=n(v)^2 + exp(h + beta X_(v,u)) chi_<=n+1(v)`.
///
/// A walk from u either avoids v, and then prefixing the bond `(v, u)` gives
/// a walk from v one step longer, or it visits v and splits there into two
/// walks from v. Both sides are compared in the log domain with a relative
/// slack of `1e-12`.
pub fn verify_neighbor_inequality(
    cfg: &EnumerationConfig,
    env: &Environment,
    h: f64,
    beta: f64,
    u: &Point,
    v: &Point,
) -> Result<DiagnosticsReport> {
    check_beta(beta)?;
    let bond = canonical_bond(u, v)?;
    let n = cfg.n_max;
    let x_vu = env.conductance(&bond);
    let at_u = weighted_series(cfg, env, u, &[(h, beta)])?.remove(0);
    let at_v = weighted_series(&cfg.with_n_max(n + 1)?, env, v, &[(h, beta)])?.remove(0);

    let log_lhs = at_u.partial(n).ln();
    let log_v = at_v.partial(n).ln();
    let log_v_next = at_v.partial(n + 1).ln();
    let log_square = 2.0 * log_v;
    let log_tail = h + beta * x_vu + log_v_next;
    let log_rhs = log_add_exp(log_square, log_tail);
    let tol = 1e-12;

    let mut report = DiagnosticsReport::new("neighbor-inequality")
        .input("dim", cfg.dim)
        .input("n_max", n)
        .input("dist", env.dist())
        .input("seed", env.seed())
        .input("h", h)
        .input("beta", beta)
        .input("u", u)
        .input("v", v);
    report.tolerance = tol;
    report.stat("log_lhs", log_lhs, 0.0);
    report.stat("log_rhs", log_rhs, 0.0);
    report.stat("log_square_term", log_square, 0.0);
    report.stat("log_tail_term", log_tail, 0.0);
    report.stat("x_vu", x_vu, 0.0);
    let ok = log_lhs <= log_rhs + tol * (1.0 + log_rhs.abs());
    if !ok {
        report.violation(
            "chi_<=n(u) exceeds chi_<=n(v)^2 + exp(h + beta X) chi_<=n+1(v)",
            details! {
                "seed" => env.seed(),
                "u" => u,
                "v" => v,
                "h" => h,
                "beta" => beta,
                "log_lhs" => log_lhs,
                "log_rhs" => log_rhs,
            },
        );
    }
    report.verdict = Verdict::from_bool(ok);
    Ok(report)
}

/// One `(seed, u, v, h, beta)` draw for the neighbor inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeighborInstance {
    pub seed: u64,
    pub u: Point,
    pub v: Point,
    pub h: f64,
    pub beta: f64,
}

/// Deterministic pseudo-random instances: `u` uniform in `[-radius, radius]^d`,
/// `v` a uniform neighbour, `h` and `beta` uniform in the given ranges.
pub fn random_neighbor_instances(
    dim: usize,
    count: usize,
    master_seed: u64,
    radius: i64,
    h_range: (f64, f64),
    beta_range: (f64, f64),
) -> Vec<NeighborInstance> {
    let mut state = mix64(master_seed ^ 0xA076_1D64_78BD_642F);
    let mut next = || {
        state = mix64(state.wrapping_add(0x9E37_79B9_7F4A_7C15));
        state
    };
    let uniform = |lo: f64, hi: f64, w: u64| lo + (hi - lo) * ((w >> 11) as f64 / (1u64 << 53) as f64);
    (0..count)
        .map(|_| {
            let seed = next();
            let u = Point::new(
                (0..dim)
                    .map(|_| (next() % (2 * radius as u64 + 1)) as i64 - radius)
                    .collect(),
            );
            let dir = (next() % (2 * dim as u64)) as usize;
            let v = u.offset(dir / 2, if dir.is_multiple_of(2) { 1 } else { -1 });
            let h = uniform(h_range.0, h_range.1, next());
            let beta = uniform(beta_range.0, beta_range.1, next());
            NeighborInstance { seed, u, v, h, beta }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Paley-Zygmund

/// Compares `P(Z >= eps E[Z])` with `(1 - eps)^2 E[Z]^2 / E[Z^2]` on the
/// empirical law, passing iff the left side is at least the right side minus
/// `se_slack` binomial standard errors.
pub fn pz_check(samples: &[f64], eps: f64, se_slack: f64) -> Result<DiagnosticsReport> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("pz_check needs at least one sample".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    if let Some(bad) = samples.iter().find(|z| !(**z >= 0.0) || !z.is_finite()) {
        return Err(Error::InvalidArgument(format!("samples must be finite and >= 0, got {bad}")));
    }
    let m = Moments::from_slice(samples);
    let mut report = DiagnosticsReport::new("paley-zygmund")
        .input("samples", samples.len())
        .input("eps", eps)
        .input("se_slack", se_slack);
    report.stat("mean", m.mean(), m.std_error());
    report.stat("second_moment", m.second_moment(), 0.0);
    if m.sum_sq == 0.0 {
        report.note("all samples are zero; the inequality is vacuous");
        report.verdict = Verdict::Inconclusive;
        return Ok(report);
    }
    let n = samples.len() as f64;
    let threshold = eps * m.mean();
    let lhs = samples.iter().filter(|&&z| z >= threshold).count() as f64 / n;
    let rhs = (1.0 - eps).powi(2) * m.mean().powi(2) / m.second_moment();
    let slack = se_slack * (lhs * (1.0 - lhs) / n).sqrt();
    report.tolerance = slack;
    report.stat("lhs", lhs, (lhs * (1.0 - lhs) / n).sqrt());
    report.stat("rhs", rhs, 0.0);
    let ok = lhs >= rhs - slack;
    if !ok {
        report.violation(
            "P(Z >= eps E[Z]) below the Paley-Zygmund bound",
            details! { "lhs" => lhs, "rhs" => rhs, "slack" => slack },
        );
    }
    report.verdict = Verdict::from_bool(ok);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Bubbles

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleEstimate {
    pub b1: f64,
    pub b2: f64,
    pub std_error_b1: f64,
    pub std_error_b2: f64,
    pub n_max: usize,
    pub samples: usize,
    pub h: f64,
    pub beta: f64,
    /// True when the environment plays no role, so one evaluation is exact.
    pub deterministic: bool,
    #[serde(skip)]
    pub per_seed: Vec<(u64, f64, f64)>,
}

/// Number of points of Z^d within l1 distance `n` of the origin.
pub fn l1_ball_size(dim: usize, n: usize) -> f64 {
    let binom = |a: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64);
    (0..=dim.min(n)).map(|k| 2f64.powi(k as i32) * binom(dim, k) * binom(n, k)).sum()
}

/// Upper bound on walk visits needed for one bubble sample.
pub fn bubble_visit_bound(dist: &DistributionSpec, beta: f64, dim: usize, n_max: usize) -> f64 {
    let one = walk_visit_bound(dim, n_max);
    if beta == 0.0 || dist.is_degenerate() {
        one
    } else {
        one * (1.0 + l1_ball_size(dim, n_max))
    }
}

/// Truncated `(B1, B2)` in one environment, rooted at the origin.
fn bubble_sample(cfg: &EnumerationConfig, env: &Environment, h: f64, beta: f64) -> Result<(f64, f64)> {
    let x = Point::origin(cfg.dim);
    let gx = two_point_table(cfg, env, h, beta, &x)?;
    let entries: Vec<(Point, f64)> = gx.iter().collect();
    let b1: f64 = entries.iter().map(|(_, g)| g * g).sum();
    let inner: Vec<f64> = entries
        .par_iter()
        .map(|(z, gxz)| {
            let gz = two_point_table(cfg, env, h, beta, z)?;
            let s: f64 = gz.iter().map(|(y, gzy)| gzy * gzy * gx.get(&y)).sum();
            Ok(gxz * s)
        })
        .collect::<Result<_>>()?;
    Ok((b1, inner.iter().sum()))
}

/// Translation-invariant shortcut: `B2 = sum_z G(z) sum_w G(w)^2 G(z + w)`.
fn bubble_homogeneous(cfg: &EnumerationConfig, env: &Environment, h: f64, beta: f64) -> Result<(f64, f64)> {
    let g = two_point_table(cfg, env, h, beta, &Point::origin(cfg.dim))?;
    let entries: Vec<(Point, f64)> = g.iter().collect();
    let b1: f64 = entries.iter().map(|(_, v)| v * v).sum();
    let inner: Vec<f64> = entries
        .par_iter()
        .map(|(z, gz)| {
            let mut scratch = Vec::with_capacity(cfg.dim);
            let mut offset = vec![0; cfg.dim];
            let s: f64 = entries
                .iter()
                .map(|(w, gw)| {
                    for (o, (a, b)) in offset.iter_mut().zip(z.coords().iter().zip(w.coords())) {
                        *o = a + b;
                    }
                    gw * gw * g.get_offset(&offset, &mut scratch)
                })
                .sum();
            gz * s
        })
        .collect();
    Ok((b1, inner.iter().sum()))
}

#[allow(clippy::too_many_arguments)]
pub fn bubble_estimates(
    dist: &DistributionSpec,
    beta: f64,
    h: f64,
    dim: usize,
    n_max: usize,
    samples: usize,
    seed: u64,
    budget: f64,
) -> Result<BubbleEstimate> {
    check_beta(beta)?;
    check_samples(samples, 2)?;
    let cfg = EnumerationConfig::parallel(dim, n_max)?;
    let deterministic = beta == 0.0 || dist.is_degenerate();
    check_budget(bubble_visit_bound(dist, beta, dim, n_max), budget)?;
    let seeds = sample_seeds(seed, samples);
    let per_seed: Vec<(u64, f64, f64)> = if deterministic {
        let env = Environment::new(*dist, seed, dim)?;
        let (b1, b2) = bubble_homogeneous(&cfg, &env, h, beta)?;
        seeds.iter().map(|&s| (s, b1, b2)).collect()
    } else {
        seeds
            .par_iter()
            .map(|&s| {
                let env = Environment::new(*dist, s, dim)?;
                bubble_sample(&cfg, &env, h, beta).map(|(b1, b2)| (s, b1, b2))
            })
            .collect::<Result<_>>()?
    };
    let (m1, m2) = if deterministic {
        (per_seed[0].1, per_seed[0].2)
    } else {
        let b1s: Vec<f64> = per_seed.iter().map(|r| r.1).collect();
        let b2s: Vec<f64> = per_seed.iter().map(|r| r.2).collect();
        (Moments::from_slice(&b1s).mean(), Moments::from_slice(&b2s).mean())
    };
    let se = |col: fn(&(u64, f64, f64)) -> f64| {
        if deterministic {
            0.0
        } else {
            Moments::from_slice(&per_seed.iter().map(col).collect::<Vec<_>>()).std_error()
        }
    };
    Ok(BubbleEstimate {
        b1: m1,
        b2: m2,
        std_error_b1: se(|r| r.1),
        std_error_b2: se(|r| r.2),
        n_max,
        samples,
        h,
        beta,
        deterministic,
        per_seed,
    })
}

impl BubbleEstimate {
    pub fn report(&self, dist: &DistributionSpec, dim: usize) -> Result<DiagnosticsReport> {
        let mut report = DiagnosticsReport::new("bubbles")
            .input("dist", dist)
            .input("dim", dim)
            .input("beta", self.beta)
            .input("h", self.h)
            .input("n_max", self.n_max)
            .input("samples", self.samples);
        report.stat("b1", self.b1, self.std_error_b1);
        report.stat("b2", self.b2, self.std_error_b2);
        report.stat("b1_squared", self.b1 * self.b1, 2.0 * self.b1 * self.std_error_b1);
        let h0 = h0_reference(dim, self.n_max.max(2))?;
        let ha = h0.value + dist.log_laplace(self.beta)?;
        report.stat("annealed_critical_bound", ha, 0.0);
        if self.h <= ha {
            report.note("h is not above the annealed critical bound; truncated sums are finite but not indicative");
        }
        report.note("finite truncation: uniformity in h is checked only on the supplied h values");
        let mut ok = self.b1 >= 1.0 && self.b2 >= 1.0;
        if !ok {
            report.violation("bubble below 1", details! { "b1" => self.b1, "b2" => self.b2 });
        }
        if self.deterministic {
            let cs = self.b2 <= self.b1 * self.b1;
            if !cs {
                report.violation(
                    "B2 > B1^2 in a translation-invariant environment",
                    details! { "b1" => self.b1, "b2" => self.b2 },
                );
            }
            ok &= cs;
        }
        report.verdict = Verdict::from_bool(ok);
        let mut table = PerSeedTable::new(&["b1", "b2"]);
        table.rows = self.per_seed.iter().map(|&(s, a, b)| (s, vec![a, b])).collect();
        report.per_seed = Some(table);
        Ok(report)
    }
}

// ---------------------------------------------------------------------------
// Variance ratio

#[derive(Clone, Debug, Serialize)]
pub struct VarianceRatioConfig {
    pub dist: DistributionSpec,
    pub betas: Vec<f64>,
    pub h: f64,
    pub dim: usize,
    pub n_max: usize,
    pub samples: usize,
    pub seed: u64,
    /// Accepted distance of the log-log slope from 2.
    pub slope_tol: f64,
    pub se_slack: f64,
    /// Per-environment walk-visit budget for the bubble-based bound check;
    /// skipped above it.
    pub bound_budget: f64,
    pub split_depth: usize,
}

impl VarianceRatioConfig {
    pub fn new(dist: DistributionSpec, betas: Vec<f64>, h: f64, dim: usize, n_max: usize, samples: usize, seed: u64) -> Self {
        VarianceRatioConfig {
            dist,
            betas,
            h,
            dim,
            n_max,
            samples,
            seed,
            slope_tol: 0.4,
            se_slack: DEFAULT_SE_SLACK,
            bound_budget: 1e8,
            split_depth: EnumerationConfig::parallel(dim, n_max)
                .map(|c| c.split_depth)
                .unwrap_or(0),
        }
    }
}

/// `R(beta) = Var[chi_hat] / E[chi_hat]^2` over environment seeds (the same
/// seeds for every beta), with the log-log slope against beta and, where the
/// budget allows, the bound
/// `R <= exp(-2h) (2d B1 + exp(h) B2 / lambda_beta) (lambda_2beta - lambda_beta^2)`.
pub fn variance_ratio(cfg: &VarianceRatioConfig) -> Result<DiagnosticsReport> {
    for &b in &cfg.betas {
        check_beta(b)?;
    }
    if cfg.betas.is_empty() {
        return Err(Error::InvalidArgument("empty beta grid".into()));
    }
    check_samples(cfg.samples, 2)?;
    let enum_cfg = EnumerationConfig::with_split(cfg.dim, cfg.n_max, cfg.split_depth)?;
    let seeds = sample_seeds(cfg.seed, cfg.samples);
    let params: Vec<(f64, f64)> = cfg.betas.iter().map(|&b| (cfg.h, b)).collect();
    let x = Point::origin(cfg.dim);

    let chi: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&s| {
            let env = Environment::new(cfg.dist, s, cfg.dim)?;
            let series = weighted_series(&enum_cfg, &env, &x, &params)?;
            Ok(series.iter().map(|w| w.susceptibility().partial_sum).collect())
        })
        .collect::<Result<_>>()?;

    let mut report = DiagnosticsReport::new("variance-ratio")
        .input("dist", cfg.dist)
        .input("betas", &cfg.betas)
        .input("h", cfg.h)
        .input("dim", cfg.dim)
        .input("n_max", cfg.n_max)
        .input("samples", cfg.samples)
        .input("seed", cfg.seed)
        .input("slope_tol", cfg.slope_tol);
    report.tolerance = cfg.slope_tol;
    report.note("a single h at finite truncation; uniformity over h > h_a is not tested");

    let mut ratios = Vec::with_capacity(cfg.betas.len());
    let mut trivial = true;
    for (k, &beta) in cfg.betas.iter().enumerate() {
        let column: Vec<f64> = chi.iter().map(|row| row[k]).collect();
        let m = Moments::from_slice(&column);
        report.stat(format!("mean_chi[beta={beta}]"), m.mean(), m.std_error());
        let (r, se) = if all_identical(&column) {
            (0.0, 0.0)
        } else {
            trivial = false;
            jackknife(&column, |m| m.variance() / (m.mean() * m.mean()))
        };
        report.stat(format!("R[beta={beta}]"), r, se);
        ratios.push((beta, r, se));
        if (beta == 0.0 || cfg.dist.is_degenerate()) && r != 0.0 {
            report.violation(
                "R must vanish for a deterministic environment",
                details! { "beta" => beta, "R" => r },
            );
        }
    }

    let mut table = PerSeedTable::new(&[]);
    table.columns = cfg.betas.iter().map(|b| format!("chi_beta_{b}")).collect();
    table.rows = seeds.iter().copied().zip(chi.iter().cloned()).collect();
    report.per_seed = Some(table);

    if trivial {
        report.note("chi_hat is identical across seeds; R = 0 exactly");
        report.verdict = if report.violations.is_empty() {
            Verdict::PassTrivial
        } else {
            Verdict::Fail
        };
        return Ok(report);
    }

    let fit_points: Vec<(f64, f64)> = ratios
        .iter()
        .filter(|(b, r, _)| *b > 0.0 && *r > 0.0)
        .map(|(b, r, _)| (b.ln(), r.ln()))
        .collect();
    let mut ok = report.violations.is_empty();
    if fit_points.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = fit_points.into_iter().unzip();
        let fit = fit_line(&xs, &ys).expect("distinct positive betas");
        report.stat("loglog_slope", fit.slope, 0.0);
        report.stat("loglog_residual", fit.residual, 0.0);
        if (fit.slope - 2.0).abs() > cfg.slope_tol {
            ok = false;
            report.violation(
                "log-log slope of R(beta) outside 2 +/- slope_tol",
                details! { "slope" => fit.slope, "slope_tol" => cfg.slope_tol },
            );
        }
    } else {
        report.note("fewer than two positive betas; no slope fitted");
    }

    // bubble-based bound check for each beta > 0
    let bubble_samples = cfg.samples.min(50);
    for &(beta, r, se) in ratios.iter().filter(|(b, _, _)| *b > 0.0) {
        let cost = bubble_visit_bound(&cfg.dist, beta, cfg.dim, cfg.n_max);
        if cost > cfg.bound_budget {
            report.note(format!(
                "bound check at beta={beta} skipped: needs {cost:.3e} walk visits, budget {:.3e}",
                cfg.bound_budget
            ));
            continue;
        }
        let b = bubble_estimates(
            &cfg.dist,
            beta,
            cfg.h,
            cfg.dim,
            cfg.n_max,
            bubble_samples,
            cfg.seed,
            cfg.bound_budget,
        )?;
        let lambda = cfg.dist.laplace(beta)?;
        let spread = cfg.dist.laplace(2.0 * beta)? - lambda * lambda;
        let bound = (-2.0 * cfg.h).exp()
            * (2.0 * cfg.dim as f64 * b.b1 + cfg.h.exp() * b.b2 / lambda)
            * spread;
        report.stat(format!("bound[beta={beta}]"), bound, 0.0);
        report.stat(format!("R_over_bound[beta={beta}]"), r / bound, se / bound);
        if r - cfg.se_slack * se > bound {
            ok = false;
            report.violation(
                "R(beta) exceeds the bubble bound",
                details! { "beta" => beta, "R" => r, "se" => se, "bound" => bound },
            );
        }
    }
    report.verdict = Verdict::from_bool(ok);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Fractional moments

/// `rho(n) = E[c_hat(x;n)^theta] / (lambda_beta^n c(n))^theta` for
/// `n = n_min..=n_max`, with the annealed mean in closed form.
#[allow(clippy::too_many_arguments)]
pub fn fractional_moment_probe(
    dist: &DistributionSpec,
    beta: f64,
    theta: f64,
    dim: usize,
    n_min: usize,
    n_max: usize,
    samples: usize,
    seed: u64,
    margin: f64,
) -> Result<DiagnosticsReport> {
    check_beta(beta)?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("theta must lie in (0, 1), got {theta}")));
    }
    if n_min < 1 || n_min > n_max {
        return Err(Error::InvalidArgument(format!("invalid length range [{n_min}, {n_max}]")));
    }
    check_samples(samples, 1)?;
    let mut report = DiagnosticsReport::new("fractional-moment")
        .input("dist", dist)
        .input("beta", beta)
        .input("theta", theta)
        .input("dim", dim)
        .input("n_min", n_min)
        .input("n_max", n_max)
        .input("samples", samples)
        .input("seed", seed)
        .input("margin", margin);
    report.verdict = Verdict::Exploratory;
    report.tolerance = DEFAULT_SE_SLACK;

    if beta == 0.0 || dist.is_degenerate() {
        for n in n_min..=n_max {
            report.stat(format!("rho[n={n}]"), 1.0, 0.0);
            report.stat(format!("rho_root[n={n}]"), 1.0, 0.0);
        }
        report.note("c_hat is deterministic; rho = 1 identically");
        return Ok(report);
    }

    let cfg = EnumerationConfig::parallel(dim, n_max)?;
    let counts = count_walks(&cfg)?;
    let log_lambda = dist.log_laplace(beta)?;
    let seeds = sample_seeds(seed, samples);
    // theta * log c_hat(n) - theta * log(lambda^n c(n))
    let logs: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&s| {
            let env = Environment::new(*dist, s, dim)?;
            let q = quenched_counts(&cfg, &env, beta, &Point::origin(dim))?;
            Ok((n_min..=n_max)
                .map(|n| theta * (q.log_counts[n] - n as f64 * log_lambda - (counts.values[n] as f64).ln()))
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut below = Vec::new();
    for (i, n) in (n_min..=n_max).enumerate() {
        let column: Vec<f64> = logs.iter().map(|row| row[i].exp()).collect();
        let m = Moments::from_slice(&column);
        let rho = m.mean();
        let root = rho.powf(1.0 / n as f64);
        report.stat(format!("rho[n={n}]"), rho, m.std_error());
        report.stat(format!("rho_root[n={n}]"), root, 0.0);
        below.push(root < 1.0 - margin);
        if rho > 1.0 + DEFAULT_SE_SLACK * m.std_error() {
            report.violation(
                "rho(n) above 1 beyond statistical slack",
                details! { "n" => n, "rho" => rho, "se" => m.std_error() },
            );
        }
    }
    let all_below = below.iter().all(|&b| b);
    report.note(format!(
        "rho(n)^(1/n) below 1 - margin for {} of {} lengths{}",
        below.iter().filter(|&&b| b).count(),
        below.len(),
        if all_below { "" } else { "; no evidence of b < 1 at this size" }
    ));
    let mut table = PerSeedTable::new(&[]);
    table.columns = (n_min..=n_max).map(|n| format!("c_hat_pow_theta_ratio_n{n}")).collect();
    table.rows = seeds
        .iter()
        .copied()
        .zip(logs.iter().map(|row| row.iter().map(|l| l.exp()).collect()))
        .collect();
    report.per_seed = Some(table);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Annealing identity

/// Mean of `c_hat(x; n)` over seeds against `lambda_beta^n c(n)`, each length
/// within `se_slack` standard errors.
pub fn annealing_check(
    dist: &DistributionSpec,
    beta: f64,
    dim: usize,
    n_max: usize,
    samples: usize,
    seed: u64,
    se_slack: f64,
) -> Result<DiagnosticsReport> {
    check_beta(beta)?;
    check_samples(samples, 2)?;
    let cfg = EnumerationConfig::parallel(dim, n_max)?;
    let counts = count_walks(&cfg)?;
    let log_lambda = dist.log_laplace(beta)?;
    let seeds = sample_seeds(seed, samples);
    let rows: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&s| {
            let env = Environment::new(*dist, s, dim)?;
            Ok(quenched_counts(&cfg, &env, beta, &Point::origin(dim))?.counts.values)
        })
        .collect::<Result<_>>()?;
    let mut report = DiagnosticsReport::new("annealing-identity")
        .input("dist", dist)
        .input("beta", beta)
        .input("dim", dim)
        .input("n_max", n_max)
        .input("samples", samples)
        .input("seed", seed);
    report.tolerance = se_slack;
    for n in 0..=n_max {
        let m = Moments::from_slice(&rows.iter().map(|r| r[n]).collect::<Vec<_>>());
        let exact = (n as f64 * log_lambda).exp() * counts.values[n] as f64;
        report.stat(format!("mean_c_hat[n={n}]"), m.mean(), m.std_error());
        report.stat(format!("annealed[n={n}]"), exact, 0.0);
        let gap = (m.mean() - exact).abs();
        let allowed = se_slack * m.std_error() + 1e-12 * exact;
        if gap > allowed {
            report.violation(
                "mean c_hat differs from lambda^n c(n)",
                details! { "n" => n, "mean" => m.mean(), "se" => m.std_error(), "exact" => exact },
            );
        }
    }
    report.verdict = Verdict::from_bool(report.violations.is_empty());
    let mut table = PerSeedTable::new(&[]);
    table.columns = (0..=n_max).map(|n| format!("c_hat_n{n}")).collect();
    table.rows = seeds.into_iter().zip(rows).collect();
    report.per_seed = Some(table);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Good walks

/// Seed-averaged good-walk fractions `|G(x;n)| / c(n)`. Passes when the
/// fraction at `n_max` exceeds both its value at `n_ref` and `floor`, and the
/// Paley-Zygmund check on the `|G(x; n_max)|` samples passes.
#[allow(clippy::too_many_arguments)]
pub fn good_walk_trend(
    dist: &DistributionSpec,
    dim: usize,
    n_ref: usize,
    n_max: usize,
    delta: f64,
    samples: usize,
    seed: u64,
    floor: f64,
    eps: f64,
) -> Result<DiagnosticsReport> {
    if n_ref >= n_max {
        return Err(Error::InvalidArgument(format!("n_ref ({n_ref}) must be below n_max ({n_max})")));
    }
    check_samples(samples, 2)?;
    let cfg = EnumerationConfig::parallel(dim, n_max)?;
    let seeds = sample_seeds(seed, samples);
    let stats: Vec<_> = seeds
        .par_iter()
        .map(|&s| good_walk_counts(&cfg, &Environment::new(*dist, s, dim)?, &Point::origin(dim), delta))
        .collect::<Result<_>>()?;
    let mut report = DiagnosticsReport::new("good-walks")
        .input("dist", dist)
        .input("dim", dim)
        .input("n_ref", n_ref)
        .input("n_max", n_max)
        .input("delta", delta)
        .input("samples", samples)
        .input("seed", seed)
        .input("floor", floor)
        .input("eps", eps);
    let mut fractions = Vec::new();
    for n in 1..=n_max {
        let m = Moments::from_slice(&stats.iter().map(|g| g.fraction(n)).collect::<Vec<_>>());
        report.stat(format!("fraction[n={n}]"), m.mean(), m.std_error());
        fractions.push(m.mean());
    }
    let (f_ref, f_top) = (fractions[n_ref - 1], fractions[n_max - 1]);
    let mut ok = true;
    if !(f_top > f_ref) {
        ok = false;
        report.violation(
            "good-walk fraction does not increase",
            details! { "n_ref" => n_ref, "fraction_ref" => f_ref, "n_max" => n_max, "fraction" => f_top },
        );
    }
    if !(f_top > floor) {
        ok = false;
        report.violation(
            "good-walk fraction below floor",
            details! { "n_max" => n_max, "fraction" => f_top, "floor" => floor },
        );
    }
    let top: Vec<f64> = stats.iter().map(|g| g.good.values[n_max] as f64).collect();
    let pz = pz_check(&top, eps, DEFAULT_SE_SLACK)?;
    report.stat("pz_lhs", pz.get("lhs").unwrap_or(f64::NAN), 0.0);
    report.stat("pz_rhs", pz.get("rhs").unwrap_or(f64::NAN), 0.0);
    if pz.verdict.is_fail() {
        ok = false;
        report.violations.extend(pz.violations);
    }
    report.verdict = Verdict::from_bool(ok);
    let mut table = PerSeedTable::new(&[]);
    table.columns = (1..=n_max).flat_map(|n| [format!("good_n{n}"), format!("total_n{n}")]).collect();
    table.rows = seeds
        .iter()
        .copied()
        .zip(stats.iter().map(|g| {
            (1..=n_max)
                .flat_map(|n| [g.good.values[n] as f64, g.total.values[n] as f64])
                .collect()
        }))
        .collect();
    report.per_seed = Some(table);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Mean-field probability

/// The slowly varying function `L(h) = 1 / log(e + 1/(h - h_a))`.
pub fn slowly_varying(h: f64, h_a: f64) -> f64 {
    1.0 / (std::f64::consts::E + 1.0 / (h - h_a)).ln()
}

/// Empirical `P(chi_hat >= L(h) / (h - h_a))` on an h-grid above the
/// annealed bound, next to its Paley-Zygmund lower bound
/// `(1 - L)^2 E[chi]^2 / E[chi^2]` at `eps = L(h)`.
#[allow(clippy::too_many_arguments)]
pub fn mean_field_probe(
    dist: &DistributionSpec,
    beta: f64,
    hs: &[f64],
    dim: usize,
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<DiagnosticsReport> {
    check_beta(beta)?;
    check_samples(samples, 2)?;
    let h0 = h0_reference(dim, n_max.max(2))?;
    let h_a = h0.value + dist.log_laplace(beta)?;
    if let Some(h) = hs.iter().find(|&&h| !(h > h_a)) {
        return Err(Error::InvalidArgument(format!("h = {h} is not above the annealed bound {h_a}")));
    }
    let cfg = EnumerationConfig::parallel(dim, n_max)?;
    let params: Vec<(f64, f64)> = hs.iter().map(|&h| (h, beta)).collect();
    let chi: Vec<Vec<f64>> = sample_seeds(seed, samples)
        .par_iter()
        .map(|&s| {
            let env = Environment::new(*dist, s, dim)?;
            let series = weighted_series(&cfg, &env, &Point::origin(dim), &params)?;
            Ok(series.iter().map(|w| w.susceptibility().partial_sum).collect())
        })
        .collect::<Result<_>>()?;
    let mut report = DiagnosticsReport::new("mean-field-probability")
        .input("dist", dist)
        .input("beta", beta)
        .input("hs", hs)
        .input("dim", dim)
        .input("n_max", n_max)
        .input("samples", samples)
        .input("seed", seed);
    report.verdict = Verdict::Exploratory;
    report.stat("annealed_critical_bound", h_a, 0.0);
    for (k, &h) in hs.iter().enumerate() {
        let column: Vec<f64> = chi.iter().map(|r| r[k]).collect();
        let m = Moments::from_slice(&column);
        let l = slowly_varying(h, h_a);
        let threshold = l / (h - h_a);
        let p = column.iter().filter(|&&c| c >= threshold).count() as f64 / samples as f64;
        report.stat(format!("p[h={h}]"), p, (p * (1.0 - p) / samples as f64).sqrt());
        report.stat(
            format!("pz_bound[h={h}]"),
            (1.0 - l).powi(2) * m.mean().powi(2) / m.second_moment(),
            0.0,
        );
    }
    report.note("finite truncation and a finite h-grid; the limit h -> h_a is not reached");
    Ok(report)
}
