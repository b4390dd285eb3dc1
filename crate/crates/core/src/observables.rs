//! Quenched and annealed walk observables as truncated series.
//!
//! All walk weights `exp(-h n - beta sum X_b)` are accumulated from their
//! logarithms into [`ExactSum`]s, so no term underflows and every result is
//! independent of how the enumeration was split.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::enumeration::{
    count_walks, fold_walks, EnumerationConfig, SeriesByLength, Step, WalkBox, WalkVisitor,
};
use crate::environment::{DistributionSpec, Environment};
use crate::error::{check_beta, Error, Result};
use crate::lattice::Point;
use crate::sum::ExactSum;

fn check_inputs(cfg: &EnumerationConfig, env: &Environment, x: &Point) -> Result<()> {
    for found in [env.dim(), x.dim()] {
        if found != cfg.dim {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim,
                found,
            });
        }
    }
    Ok(())
}

/// Path-state shared by the environment-weighted visitors: the running sum
/// of conductances along the current walk, indexed by length.
#[derive(Clone, Debug)]
struct PathSums {
    sums: Vec<f64>,
}

impl PathSums {
    fn new() -> Self {
        PathSums { sums: vec![0.0] }
    }

    #[inline]
    fn push(&mut self, x: f64) {
        let s = *self.sums.last().unwrap() + x;
        self.sums.push(s);
    }

    #[inline]
    fn pop(&mut self) {
        self.sums.pop();
    }

    #[inline]
    fn current(&self) -> f64 {
        *self.sums.last().unwrap()
    }
}

/// Per-length exact sums of `exp(-h n - beta S(w))` for one `(h, beta)`.
#[derive(Clone, Debug)]
pub struct WeightedSeries {
    pub h: f64,
    pub beta: f64,
    per_length: Vec<ExactSum>,
}

impl WeightedSeries {
    pub fn n_max(&self) -> usize {
        self.per_length.len() - 1
    }

    /// `exp(-h n) c_hat(x; n)` rounded to f64.
    pub fn term(&self, n: usize) -> f64 {
        self.per_length[n].value()
    }

    pub fn log_term(&self, n: usize) -> f64 {
        self.per_length[n].ln()
    }

    /// Exact sum of the terms with length `<= upto`.
    pub fn partial(&self, upto: usize) -> ExactSum {
        let mut total = ExactSum::new();
        for acc in &self.per_length[..=upto.min(self.n_max())] {
            total.merge(acc);
        }
        total
    }

    pub fn partial_sum(&self, upto: usize) -> f64 {
        self.partial(upto).value()
    }

    pub fn susceptibility(&self) -> TruncatedSusceptibility {
        let total = self.partial(self.n_max());
        let log_partial = total.ln();
        TruncatedSusceptibility {
            partial_sum: total.value(),
            tail_ratio: (self.log_term(self.n_max()) - log_partial).exp(),
            n_max: self.n_max(),
            log_partial_sum: log_partial,
        }
    }
}

struct WeightVisitor<'e> {
    env: &'e Environment,
    params: Vec<(f64, f64)>,
    path: PathSums,
    acc: Vec<Vec<ExactSum>>,
}

impl WalkVisitor for WeightVisitor<'_> {
    #[inline]
    fn extend(&mut self, step: &Step<'_>) {
        self.path.push(self.env.conductance_at(step.bond_base, step.axis));
    }

    #[inline]
    fn retract(&mut self, _: &Step<'_>) {
        self.path.pop();
    }

    #[inline]
    fn visit(&mut self, step: &Step<'_>) {
        let n = step.length;
        let s = self.path.current();
        for (acc, &(h, beta)) in self.acc.iter_mut().zip(&self.params) {
            acc[n].add_exp(-h * n as f64 - beta * s);
        }
    }

    fn fork(&self) -> Self {
        WeightVisitor {
            env: self.env,
            params: self.params.clone(),
            path: PathSums::new(),
            acc: vec![vec![ExactSum::new(); self.acc[0].len()]; self.params.len()],
        }
    }

    fn merge(&mut self, other: Self) {
        for (mine, theirs) in self.acc.iter_mut().zip(other.acc) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                a.merge(&b);
            }
        }
    }
}

/// One enumeration pass evaluating the weighted series for every `(h, beta)`
/// in `params` on the same environment.
pub fn weighted_series(
    cfg: &EnumerationConfig,
    env: &Environment,
    x: &Point,
    params: &[(f64, f64)],
) -> Result<Vec<WeightedSeries>> {
    check_inputs(cfg, env, x)?;
    if params.is_empty() {
        return Ok(Vec::new());
    }
    for &(h, beta) in params {
        check_beta(beta)?;
        if !h.is_finite() {
            return Err(Error::InvalidArgument(format!("h must be finite, got {h}")));
        }
    }
    let mut empty = vec![ExactSum::new(); cfg.n_max + 1];
    empty[0].add(1.0);
    let visitor = WeightVisitor {
        env,
        params: params.to_vec(),
        path: PathSums::new(),
        acc: vec![empty; params.len()],
    };
    let folded = fold_walks(cfg, x, visitor)?;
    Ok(folded
        .acc
        .into_iter()
        .zip(params)
        .map(|(per_length, &(h, beta))| WeightedSeries {
            h,
            beta,
            per_length,
        })
        .collect())
}

/// `c_hat_{beta,X}(x; n)` for `n = 0..=n_max`.
#[derive(Clone, Debug, Serialize)]
pub struct QuenchedSeries {
    pub origin: Point,
    pub beta: f64,
    pub counts: SeriesByLength<f64>,
    /// Natural logarithms of `counts`, exact even where `counts` under- or
    /// overflows.
    pub log_counts: Vec<f64>,
}

impl QuenchedSeries {
    pub fn to_csv(&self) -> String {
        self.counts.to_csv("c_hat")
    }
}

pub fn quenched_counts(
    cfg: &EnumerationConfig,
    env: &Environment,
    beta: f64,
    x: &Point,
) -> Result<QuenchedSeries> {
    let series = weighted_series(cfg, env, x, &[(0.0, beta)])?.remove(0);
    let n_max = series.n_max();
    Ok(QuenchedSeries {
        origin: x.clone(),
        beta,
        counts: SeriesByLength {
            values: (0..=n_max).map(|n| series.term(n)).collect(),
        },
        log_counts: (0..=n_max).map(|n| series.log_term(n)).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TruncatedSusceptibility {
    pub partial_sum: f64,
    /// Last term divided by the partial sum.
    pub tail_ratio: f64,
    pub n_max: usize,
    #[serde(skip)]
    pub log_partial_sum: f64,
}

/// `sum_{n <= n_max} exp(-h n) c_hat(x; n)`.
pub fn quenched_susceptibility(
    cfg: &EnumerationConfig,
    env: &Environment,
    h: f64,
    beta: f64,
    x: &Point,
) -> Result<TruncatedSusceptibility> {
    Ok(weighted_series(cfg, env, x, &[(h, beta)])?[0].susceptibility())
}

struct TwoPointVisitor<'e> {
    env: &'e Environment,
    h: f64,
    beta: f64,
    path: PathSums,
    table: HashMap<u64, ExactSum>,
}

impl WalkVisitor for TwoPointVisitor<'_> {
    #[inline]
    fn extend(&mut self, step: &Step<'_>) {
        self.path.push(self.env.conductance_at(step.bond_base, step.axis));
    }

    #[inline]
    fn retract(&mut self, _: &Step<'_>) {
        self.path.pop();
    }

    #[inline]
    fn visit(&mut self, step: &Step<'_>) {
        let log_w = -self.h * step.length as f64 - self.beta * self.path.current();
        self.table.entry(step.site).or_default().add_exp(log_w);
    }

    fn fork(&self) -> Self {
        TwoPointVisitor {
            env: self.env,
            h: self.h,
            beta: self.beta,
            path: PathSums::new(),
            table: HashMap::new(),
        }
    }

    fn merge(&mut self, other: Self) {
        for (site, acc) in other.table {
            self.table.entry(site).or_default().merge(&acc);
        }
    }
}

/// Truncated two-point function `G_hat(x, y)` for every reachable `y`.
#[derive(Clone, Debug)]
pub struct TwoPointTable {
    pub origin: Point,
    pub n_max: usize,
    geom: WalkBox,
    values: BTreeMap<u64, f64>,
    total: ExactSum,
}

impl TwoPointTable {
    pub fn get(&self, y: &Point) -> f64 {
        self.geom
            .site(y.coords())
            .and_then(|s| self.values.get(&s).copied())
            .unwrap_or(0.0)
    }

    /// Value at the endpoint `origin + offset`.
    pub fn get_offset(&self, offset: &[i64], scratch: &mut Vec<i64>) -> f64 {
        scratch.clear();
        scratch.extend(self.origin.coords().iter().zip(offset).map(|(o, d)| o + d));
        self.geom
            .site(scratch)
            .and_then(|s| self.values.get(&s).copied())
            .unwrap_or(0.0)
    }

    /// `(y, G_hat(x, y))` for every endpoint with a nonzero value, in a
    /// fixed order.
    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.values.iter().map(|(&s, &v)| (self.geom.point(s), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Exact sum over all endpoints; equals the truncated quenched
    /// susceptibility bit for bit.
    pub fn total(&self) -> f64 {
        self.total.value()
    }
}

pub fn two_point_table(
    cfg: &EnumerationConfig,
    env: &Environment,
    h: f64,
    beta: f64,
    x: &Point,
) -> Result<TwoPointTable> {
    check_inputs(cfg, env, x)?;
    check_beta(beta)?;
    let geom = WalkBox::new(x, cfg.n_max);
    let mut table = HashMap::new();
    let mut empty = ExactSum::new();
    empty.add(1.0);
    table.insert(geom.origin_site(), empty);
    let visitor = TwoPointVisitor {
        env,
        h,
        beta,
        path: PathSums::new(),
        table,
    };
    let folded = fold_walks(cfg, x, visitor)?;
    let mut total = ExactSum::new();
    let mut values = BTreeMap::new();
    let mut entries: Vec<_> = folded.table.into_iter().collect();
    entries.sort_unstable_by_key(|(s, _)| *s);
    for (site, acc) in entries {
        total.merge(&acc);
        values.insert(site, acc.value());
    }
    Ok(TwoPointTable {
        origin: x.clone(),
        n_max: cfg.n_max,
        geom,
        values,
        total,
    })
}

/// Single entry `G_hat(x, y)` of the truncated two-point function.
pub fn two_point(
    cfg: &EnumerationConfig,
    env: &Environment,
    h: f64,
    beta: f64,
    x: &Point,
    y: &Point,
) -> Result<f64> {
    if y.dim() != cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            found: y.dim(),
        });
    }
    if x.l1_distance(y) > cfg.n_max as i64 {
        return Ok(0.0);
    }
    Ok(two_point_table(cfg, env, h, beta, x)?.get(y))
}

/// `|G(x; n)|`: walks whose mean centered conductance lies in `(-delta, delta)`.
#[derive(Clone, Debug, Serialize)]
pub struct GoodWalkStats {
    pub good: SeriesByLength<u64>,
    pub total: SeriesByLength<u64>,
    pub delta: f64,
}

impl GoodWalkStats {
    pub fn fraction(&self, n: usize) -> f64 {
        self.good.values[n] as f64 / self.total.values[n] as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,good,total\n");
        for (n, (g, t)) in self.good.values.iter().zip(&self.total.values).enumerate() {
            out.push_str(&format!("{n},{g},{t}\n"));
        }
        out
    }
}

struct GoodWalkVisitor<'e> {
    env: &'e Environment,
    mean: f64,
    delta: f64,
    path: PathSums,
    good: Vec<u64>,
    total: Vec<u64>,
}

impl WalkVisitor for GoodWalkVisitor<'_> {
    #[inline]
    fn extend(&mut self, step: &Step<'_>) {
        self.path
            .push(self.env.conductance_at(step.bond_base, step.axis) - self.mean);
    }

    #[inline]
    fn retract(&mut self, _: &Step<'_>) {
        self.path.pop();
    }

    #[inline]
    fn visit(&mut self, step: &Step<'_>) {
        let n = step.length;
        self.total[n] += 1;
        if (self.path.current() / n as f64).abs() < self.delta {
            self.good[n] += 1;
        }
    }

    fn fork(&self) -> Self {
        GoodWalkVisitor {
            env: self.env,
            mean: self.mean,
            delta: self.delta,
            path: PathSums::new(),
            good: vec![0; self.good.len()],
            total: vec![0; self.total.len()],
        }
    }

    fn merge(&mut self, other: Self) {
        for (a, b) in self.good.iter_mut().zip(other.good) {
            *a += b;
        }
        for (a, b) in self.total.iter_mut().zip(other.total) {
            *a += b;
        }
    }
}

pub fn good_walk_counts(
    cfg: &EnumerationConfig,
    env: &Environment,
    x: &Point,
    delta: f64,
) -> Result<GoodWalkStats> {
    check_inputs(cfg, env, x)?;
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be > 0, got {delta}")));
    }
    let mut good = vec![0; cfg.n_max + 1];
    let mut total = vec![0; cfg.n_max + 1];
    // the empty walk has no bonds; count it as good
    good[0] = 1;
    total[0] = 1;
    let visitor = GoodWalkVisitor {
        env,
        mean: env.dist().mean(),
        delta,
        path: PathSums::new(),
        good,
        total,
    };
    let folded = fold_walks(cfg, x, visitor)?;
    Ok(GoodWalkStats {
        good: SeriesByLength {
            values: folded.good,
        },
        total: SeriesByLength {
            values: folded.total,
        },
        delta,
    })
}

/// `E[c_hat(x; n)] = lambda_beta^n c(n)`.
pub fn annealed_counts(
    dist: &DistributionSpec,
    beta: f64,
    dim: usize,
    n_max: usize,
) -> Result<SeriesByLength<f64>> {
    let log_lambda = dist.log_laplace(beta)?;
    let counts = count_walks(&EnumerationConfig::parallel(dim, n_max)?)?;
    Ok(SeriesByLength {
        values: counts
            .values
            .iter()
            .enumerate()
            .map(|(n, &c)| (n as f64 * log_lambda).exp() * c as f64)
            .collect(),
    })
}
