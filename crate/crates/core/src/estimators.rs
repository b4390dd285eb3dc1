//! Critical-point estimators: the connective constant, the quenched growth
//! rate of `c_hat(x; n)`, and the verdict that quenched estimates lie between
//! `h0 - beta E[X]` and `h0 + log lambda_beta`.

use rayon::prelude::*;
use serde::Serialize;

use crate::details;
use crate::enumeration::{count_walks, EnumerationConfig, SeriesByLength};
use crate::environment::{DistributionSpec, Environment};
use crate::error::{check_beta, Error, Result};
use crate::lattice::Point;
use crate::observables::quenched_counts;
use crate::report::{Verdict, Violation};
use crate::stats::{fit_line, std_dev};

#[derive(Clone, Debug, Serialize)]
pub struct ConnectiveConstant {
    pub counts: SeriesByLength<u64>,
    /// `c(n)^(1/n)` for `n = 1..=n_max` (index 0 is `n = 1`).
    pub roots: Vec<f64>,
    pub running_inf: Vec<f64>,
    /// `inf_n c(n)^(1/n)`, an upper bound on mu.
    pub inf: f64,
    /// `log(inf)`, an upper bound on h0.
    pub h0_est: f64,
}

pub fn connective_constant(dim: usize, n_max: usize) -> Result<ConnectiveConstant> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!("n_max must be >= 2, got {n_max}")));
    }
    let counts = count_walks(&EnumerationConfig::parallel(dim, n_max)?)?;
    let roots: Vec<f64> = (1..=n_max)
        .map(|n| (counts.values[n] as f64).powf(1.0 / n as f64))
        .collect();
    let running_inf: Vec<f64> = roots
        .iter()
        .scan(f64::INFINITY, |acc, &r| {
            *acc = acc.min(r);
            Some(*acc)
        })
        .collect();
    let inf = *running_inf.last().unwrap();
    Ok(ConnectiveConstant {
        counts,
        roots,
        running_inf,
        inf,
        h0_est: inf.ln(),
    })
}

/// The homogeneous critical point used as the reference for bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct H0Reference {
    pub value: f64,
    /// True where h0 is known in closed form (d = 1).
    pub exact: bool,
    /// Spread between the `inf c(n)^(1/n)` and `c(n)/c(n-1)` estimates of
    /// h0 at this truncation; 0 when exact.
    pub slack: f64,
}

pub fn h0_reference(dim: usize, n_max: usize) -> Result<H0Reference> {
    if dim == 1 {
        return Ok(H0Reference {
            value: 0.0,
            exact: true,
            slack: 0.0,
        });
    }
    let cc = connective_constant(dim, n_max.max(2))?;
    let c = &cc.counts.values;
    let n = c.len() - 1;
    let ratio = (c[n] as f64 / c[n - 1] as f64).ln();
    Ok(H0Reference {
        value: cc.h0_est,
        exact: false,
        slack: (cc.h0_est - ratio).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthEstimate {
    /// Estimated quenched critical point.
    pub slope: f64,
    pub window: (usize, usize),
    pub residual: f64,
    pub slope_std_error: f64,
    /// `(1/n) log c_hat(x; n)` for `n = 1..=n_max`.
    pub per_n: Vec<f64>,
}

/// `[ceil(n_max/2), n_max]`, or the full range `[1, n_max]` in d = 1 where
/// `c(n) = 2` for every n and there is no short-walk transient to discard.
pub fn default_window(dim: usize, n_max: usize) -> (usize, usize) {
    if dim == 1 {
        (1, n_max)
    } else {
        (n_max.div_ceil(2).max(1), n_max)
    }
}

/// Least-squares slope of `log_counts[n]` against n over `window`.
pub fn fit_growth(log_counts: &[f64], window: (usize, usize)) -> Result<GrowthEstimate> {
    let n_max = log_counts.len().saturating_sub(1);
    let (lo, hi) = window;
    if lo < 1 || hi > n_max || hi < lo + 2 {
        return Err(Error::InvalidArgument(format!(
            "window [{lo}, {hi}] must lie in [1, {n_max}] and hold at least 3 lengths"
        )));
    }
    if let Some(n) = (lo..=hi).find(|&n| !log_counts[n].is_finite()) {
        return Err(Error::Internal(format!("c_hat(x; {n}) is zero or not finite")));
    }
    let xs: Vec<f64> = (lo..=hi).map(|n| n as f64).collect();
    let ys: Vec<f64> = (lo..=hi).map(|n| log_counts[n]).collect();
    let fit = fit_line(&xs, &ys).expect("window holds at least 3 distinct lengths");
    Ok(GrowthEstimate {
        slope: fit.slope,
        window,
        residual: fit.residual,
        slope_std_error: fit.slope_std_error,
        per_n: (1..=n_max).map(|n| log_counts[n] / n as f64).collect(),
    })
}

pub fn quenched_growth_rate(
    cfg: &EnumerationConfig,
    env: &Environment,
    beta: f64,
    x: &Point,
    window: Option<(usize, usize)>,
) -> Result<GrowthEstimate> {
    let window = window.unwrap_or_else(|| default_window(cfg.dim, cfg.n_max));
    let series = quenched_counts(cfg, env, beta, x)?;
    fit_growth(&series.log_counts, window)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalBounds {
    /// `h0 - beta E[X]`.
    pub lower: f64,
    /// `h0 + log lambda_beta`, the annealed critical point.
    pub upper: f64,
    pub h0: f64,
    pub beta: f64,
}

pub fn theorem_bounds(dist: &DistributionSpec, beta: f64, h0_est: f64) -> Result<CriticalBounds> {
    check_beta(beta)?;
    Ok(CriticalBounds {
        lower: h0_est - beta * dist.mean(),
        upper: h0_est + dist.log_laplace(beta)?,
        h0: h0_est,
        beta,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichConfig {
    pub dim: usize,
    pub n_max: usize,
    pub dist: DistributionSpec,
    pub beta: f64,
    pub seeds: Vec<u64>,
    pub reference_points: Vec<Point>,
    pub window: Option<(usize, usize)>,
    /// Verdict tolerance; defaults to `3 s + h0 slack`, where `s` is the
    /// larger of the worst per-fit slope standard error and the cross-seed
    /// standard deviation of the slopes.
    pub tol: Option<f64>,
    pub split_depth: usize,
}

impl SandwichConfig {
    /// Reference points are the origin and `(2 n_max + 1) e_0`, whose walk
    /// boxes share no bonds.
    pub fn new(dim: usize, n_max: usize, dist: DistributionSpec, beta: f64, seeds: Vec<u64>) -> Self {
        SandwichConfig {
            dim,
            n_max,
            dist,
            beta,
            seeds,
            reference_points: vec![
                Point::origin(dim),
                Point::on_axis(dim, 0, 2 * n_max as i64 + 1),
            ],
            window: None,
            tol: None,
            split_depth: EnumerationConfig::parallel(dim, n_max)
                .map(|c| c.split_depth)
                .unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichEstimate {
    pub seed: u64,
    pub x: Point,
    pub slope: f64,
    pub residual: f64,
    pub slope_std_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub beta: f64,
    pub dist: DistributionSpec,
    pub dim: usize,
    pub n_max: usize,
    pub window: (usize, usize),
    pub h0: H0Reference,
    pub lower: f64,
    pub upper: f64,
    pub tol: f64,
    pub estimates: Vec<SandwichEstimate>,
    /// Largest (over reference points) standard deviation across seeds.
    pub cross_seed_dispersion: f64,
    /// Pooled within-seed standard deviation across reference points.
    pub cross_point_dispersion: f64,
    pub verdict: Verdict,
    pub violations: Vec<Violation>,
}

pub fn sandwich_report(cfg: &SandwichConfig) -> Result<SandwichReport> {
    check_beta(cfg.beta)?;
    if cfg.seeds.len() < 2 {
        return Err(Error::InvalidArgument("sandwich report needs at least 2 seeds".into()));
    }
    if cfg.reference_points.is_empty() {
        return Err(Error::InvalidArgument("no reference points".into()));
    }
    let enum_cfg = EnumerationConfig::with_split(cfg.dim, cfg.n_max, cfg.split_depth)?;
    let window = cfg.window.unwrap_or_else(|| default_window(cfg.dim, cfg.n_max));
    let h0 = h0_reference(cfg.dim, cfg.n_max)?;
    let bounds = theorem_bounds(&cfg.dist, cfg.beta, h0.value)?;

    let jobs: Vec<(u64, &Point)> = cfg
        .seeds
        .iter()
        .flat_map(|&s| cfg.reference_points.iter().map(move |x| (s, x)))
        .collect();
    let estimates: Vec<SandwichEstimate> = jobs
        .par_iter()
        .map(|&(seed, x)| {
            let env = Environment::new(cfg.dist, seed, cfg.dim)?;
            let g = quenched_growth_rate(&enum_cfg, &env, cfg.beta, x, Some(window))?;
            Ok(SandwichEstimate {
                seed,
                x: x.clone(),
                slope: g.slope,
                residual: g.residual,
                slope_std_error: g.slope_std_error,
            })
        })
        .collect::<Result<_>>()?;

    let points = cfg.reference_points.len();
    let cross_seed_dispersion = (0..points)
        .map(|p| {
            let slopes: Vec<f64> = estimates.iter().skip(p).step_by(points).map(|e| e.slope).collect();
            std_dev(&slopes)
        })
        .fold(0.0, f64::max);
    let cross_point_dispersion = if points < 2 {
        0.0
    } else {
        let pooled: f64 = estimates
            .chunks(points)
            .map(|chunk| std_dev(&chunk.iter().map(|e| e.slope).collect::<Vec<_>>()).powi(2))
            .sum::<f64>()
            / cfg.seeds.len() as f64;
        pooled.sqrt()
    };
    let max_slope_se = estimates.iter().map(|e| e.slope_std_error).fold(0.0, f64::max);
    let tol = cfg
        .tol
        .unwrap_or(3.0 * max_slope_se.max(cross_seed_dispersion) + h0.slack);

    let mut violations = Vec::new();
    for e in &estimates {
        if e.slope < bounds.lower - tol || e.slope > bounds.upper + tol {
            violations.push(Violation {
                description: "estimate outside [lower - tol, upper + tol]".into(),
                details: details! {
                    "seed" => e.seed,
                    "x" => e.x,
                    "slope" => e.slope,
                    "lower" => bounds.lower,
                    "upper" => bounds.upper,
                    "tol" => tol,
                },
            });
        }
    }

    Ok(SandwichReport {
        beta: cfg.beta,
        dist: cfg.dist,
        dim: cfg.dim,
        n_max: cfg.n_max,
        window,
        h0,
        lower: bounds.lower,
        upper: bounds.upper,
        tol,
        estimates,
        cross_seed_dispersion,
        cross_point_dispersion,
        verdict: Verdict::from_bool(violations.is_empty()),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn connective_constant_examples() {
        let d1 = connective_constant(1, 12).unwrap();
        for (i, r) in d1.roots.iter().enumerate() {
            assert_relative_eq!(*r, 2f64.powf(1.0 / (i + 1) as f64), max_relative = 1e-14);
        }
        assert_relative_eq!(d1.inf, 2f64.powf(1.0 / 12.0), max_relative = 1e-14);

        let d2 = connective_constant(2, 10).unwrap();
        assert_eq!(d2.counts.values[10], 44100);
        assert_relative_eq!(d2.inf.powi(10), 44100.0, max_relative = 1e-12);
        assert_relative_eq!(d2.inf, 2.91369, epsilon = 1e-5);
        assert!(d2.inf > 2.638);
        for dim in 1..=4 {
            let c = connective_constant(dim, 2).unwrap();
            assert_eq!(c.roots[0], 2.0 * dim as f64);
        }
        assert!(connective_constant(2, 1).is_err());
    }

    #[test]
    fn running_inf_is_non_increasing() {
        let c = connective_constant(3, 7).unwrap();
        assert!(c.running_inf.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn h0_reference_cases() {
        let one = h0_reference(1, 100).unwrap();
        assert_eq!((one.value, one.exact, one.slack), (0.0, true, 0.0));
        let two = h0_reference(2, 10).unwrap();
        assert_relative_eq!(two.value, 44100f64.ln() / 10.0, max_relative = 1e-14);
        assert!(!two.exact && two.slack > 0.0);
    }

    #[test]
    fn window_validation() {
        let logs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        assert!(fit_growth(&logs, (0, 4)).is_err());
        assert!(fit_growth(&logs, (3, 4)).is_err());
        assert!(fit_growth(&logs, (2, 5)).is_err());
        let g = fit_growth(&logs, (2, 4)).unwrap();
        assert_relative_eq!(g.slope, 1.0, epsilon = 1e-14);
        let mut bad = logs.clone();
        bad[3] = f64::NEG_INFINITY;
        assert!(matches!(fit_growth(&bad, (2, 4)), Err(Error::Internal(_))));
        assert_eq!(default_window(2, 12), (6, 12));
        assert_eq!(default_window(2, 11), (6, 11));
        assert_eq!(default_window(1, 4000), (1, 4000));
    }

    #[test]
    fn homogeneous_growth_rate_near_log_mu() {
        let cfg = EnumerationConfig::parallel(2, 12).unwrap();
        let env = Environment::new(DistributionSpec::gaussian(0.0, 1.0).unwrap(), 1, 2).unwrap();
        let g = quenched_growth_rate(&cfg, &env, 0.0, &Point::origin(2), Some((6, 12))).unwrap();
        // between log(mu) and the inf bound log(44100^(1/10))
        assert!(g.slope > 2.638f64.ln() && g.slope < 44100f64.ln() / 10.0, "{}", g.slope);
        let other = Environment::new(*env.dist(), 999, 2).unwrap();
        let g2 = quenched_growth_rate(&cfg, &other, 0.0, &Point::origin(2), Some((6, 12))).unwrap();
        assert_eq!(g.slope.to_bits(), g2.slope.to_bits());
    }

    #[test]
    fn constant_environment_shifts_slope_exactly() {
        let cfg = EnumerationConfig::new(2, 10).unwrap();
        let c = 0.7;
        let env = Environment::new(DistributionSpec::constant(c).unwrap(), 3, 2).unwrap();
        let x = Point::origin(2);
        let base = quenched_growth_rate(&cfg, &env, 0.0, &x, None).unwrap();
        for beta in [0.3, 1.0, 2.5] {
            let shifted = quenched_growth_rate(&cfg, &env, beta, &x, None).unwrap();
            assert_relative_eq!(shifted.slope - base.slope, -beta * c, epsilon = 1e-10);
        }
    }

    #[test]
    fn bounds_examples() {
        let g = DistributionSpec::gaussian(0.0, 1.0).unwrap();
        let b0 = theorem_bounds(&g, 0.0, 0.97).unwrap();
        assert_eq!((b0.lower, b0.upper), (0.97, 0.97));
        let b = theorem_bounds(&g, 1.0, 0.9705).unwrap();
        assert_relative_eq!(b.lower, 0.9705);
        assert_relative_eq!(b.upper, 1.4705, epsilon = 1e-12);
        let c = DistributionSpec::constant(2.0).unwrap();
        let bc = theorem_bounds(&c, 0.5, 1.0).unwrap();
        assert_eq!(bc.lower, bc.upper);
        assert!(theorem_bounds(&g, -0.1, 0.0).is_err());
        for dist in [
            DistributionSpec::bernoulli(0.3, 2.0).unwrap(),
            DistributionSpec::uniform(-1.0, 3.0).unwrap(),
            DistributionSpec::exponential(1.5).unwrap(),
        ] {
            let b = theorem_bounds(&dist, 0.8, 1.0).unwrap();
            assert!(b.lower < b.upper);
        }
    }

    #[test]
    fn sandwich_at_beta_zero_is_seed_independent() {
        let dist = DistributionSpec::gaussian(0.0, 1.0).unwrap();
        let report = sandwich_report(&SandwichConfig::new(2, 8, dist, 0.0, vec![1, 2, 3])).unwrap();
        let first = report.estimates[0].slope;
        assert!(report.estimates.iter().all(|e| e.slope.to_bits() == first.to_bits()));
        assert_eq!(report.cross_seed_dispersion, 0.0);
        assert_eq!(report.verdict, Verdict::Pass);
        assert!(sandwich_report(&SandwichConfig::new(2, 8, dist, 0.0, vec![1])).is_err());
    }
}
