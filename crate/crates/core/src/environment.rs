//! Random conductance fields.
//!
//! A [`DistributionSpec`] carries the closed-form algebra of a conductance law
//! (mean, Laplace transform `E[exp(-beta X)]` and its derivative). An
//! [`Environment`] assigns an i.i.d. value to every bond of Z^d lazily: the
//! value of bond `b` is `quantile(uniform(mix(seed, b)))`, so it needs no
//! storage, never depends on query order and agrees across worker threads.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{check_beta, Error, Result};
use crate::lattice::Bond;

/// Law of a single conductance `X_b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DistributionSpec {
    Constant { value: f64 },
    /// `value` with probability `p`, otherwise 0.
    Bernoulli { p: f64, value: f64 },
    Gaussian { mean: f64, variance: f64 },
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl DistributionSpec {
    pub fn constant(value: f64) -> Result<Self> {
        Self::Constant { value }.validated()
    }

    pub fn bernoulli(p: f64, value: f64) -> Result<Self> {
        Self::Bernoulli { p, value }.validated()
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        Self::Gaussian { mean, variance }.validated()
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::Uniform { lo, hi }.validated()
    }

    fn validated(self) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidDistribution(format!("{self}: {msg}")));
        let params: &[f64] = match &self {
            Self::Constant { value } => &[*value],
            Self::Bernoulli { p, value } => &[*p, *value],
            Self::Gaussian { mean, variance } => &[*mean, *variance],
            Self::Exponential { rate } => &[*rate],
            Self::Uniform { lo, hi } => &[*lo, *hi],
        };
        if params.iter().any(|x| !x.is_finite()) {
            return bad("parameters must be finite");
        }
        match self {
            Self::Bernoulli { p, .. } if !(0.0..=1.0).contains(&p) => bad("p must lie in [0, 1]"),
            Self::Gaussian { variance, .. } if variance < 0.0 => bad("variance must be >= 0"),
            Self::Exponential { rate } if rate <= 0.0 => bad("rate must be > 0"),
            Self::Uniform { lo, hi } if lo >= hi => bad("requires lo < hi"),
            _ => Ok(self),
        }
    }

    /// True when the law is a point mass.
    pub fn is_degenerate(&self) -> bool {
        match *self {
            Self::Constant { .. } => true,
            Self::Bernoulli { p, value } => p == 0.0 || p == 1.0 || value == 0.0,
            Self::Gaussian { variance, .. } => variance == 0.0,
            Self::Exponential { .. } | Self::Uniform { .. } => false,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Bernoulli { p, value } => p * value,
            Self::Gaussian { mean, .. } => mean,
            Self::Exponential { rate } => 1.0 / rate,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Bernoulli { p, value } => p * (1.0 - p) * value * value,
            Self::Gaussian { variance, .. } => variance,
            Self::Exponential { rate } => 1.0 / (rate * rate),
            Self::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
        }
    }

    /// `lambda_beta = E[exp(-beta X)]`.
    pub fn laplace(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        Ok(match *self {
            Self::Constant { value } => (-beta * value).exp(),
            Self::Bernoulli { p, value } => 1.0 - p + p * (-beta * value).exp(),
            Self::Gaussian { mean, variance } => (-beta * mean + 0.5 * beta * beta * variance).exp(),
            Self::Exponential { rate } => rate / (rate + beta),
            Self::Uniform { lo, hi } => uniform_laplace(lo, hi, beta).0,
        })
    }

    /// `log lambda_beta`, evaluated without forming `lambda_beta` where a
    /// direct form exists.
    pub fn log_laplace(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        Ok(match *self {
            Self::Constant { value } => -beta * value,
            Self::Bernoulli { p, value } => (p * (-beta * value).exp_m1()).ln_1p(),
            Self::Gaussian { mean, variance } => -beta * mean + 0.5 * beta * beta * variance,
            Self::Exponential { rate } => rate.ln() - (rate + beta).ln(),
            Self::Uniform { lo, hi } => uniform_laplace(lo, hi, beta).0.ln(),
        })
    }

    /// `d lambda_beta / d beta = -E[X exp(-beta X)]`.
    pub fn laplace_derivative(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        Ok(match *self {
            Self::Constant { value } => -value * (-beta * value).exp(),
            Self::Bernoulli { p, value } => -p * value * (-beta * value).exp(),
            Self::Gaussian { mean, variance } => {
                (-mean + beta * variance) * (-beta * mean + 0.5 * beta * beta * variance).exp()
            }
            Self::Exponential { rate } => -rate / ((rate + beta) * (rate + beta)),
            Self::Uniform { lo, hi } => uniform_laplace(lo, hi, beta).1,
        })
    }

    /// `lambda'_beta / lambda_beta`, the derivative of `log lambda_beta`.
    pub fn log_laplace_derivative(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        Ok(match *self {
            Self::Constant { value } => -value,
            Self::Gaussian { mean, variance } => -mean + beta * variance,
            Self::Exponential { rate } => -1.0 / (rate + beta),
            _ => self.laplace_derivative(beta)? / self.laplace(beta)?,
        })
    }

    /// Inverse CDF; `u` must lie in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Bernoulli { p, value } => {
                if u < p {
                    value
                } else {
                    0.0
                }
            }
            Self::Gaussian { mean, variance } => {
                if variance == 0.0 {
                    mean
                } else {
                    let sd = variance.sqrt();
                    Normal::new(mean, sd).expect("validated").inverse_cdf(u)
                }
            }
            Self::Exponential { rate } => -(-u).ln_1p() / rate,
            Self::Uniform { lo, hi } => lo + (hi - lo) * u,
        }
    }

    /// Default half-width for the good-walk window.
    pub fn default_delta(&self) -> f64 {
        if self.is_degenerate() {
            0.25 * (self.mean().abs() + 1.0)
        } else {
            0.25 * self.variance().sqrt()
        }
    }
}

/// (lambda, lambda') for the uniform law, with a moment series near beta = 0
/// where the closed form cancels catastrophically.
fn uniform_laplace(lo: f64, hi: f64, beta: f64) -> (f64, f64) {
    let width = hi - lo;
    if beta * lo.abs().max(hi.abs()) < 1e-3 {
        // m_k = E[X^k]
        let m = |k: i32| (hi.powi(k + 1) - lo.powi(k + 1)) / ((k + 1) as f64 * width);
        let (m1, m2, m3, m4) = (m(1), m(2), m(3), m(4));
        let b = beta;
        let lambda = 1.0 - b * m1 + b * b * m2 / 2.0 - b * b * b * m3 / 6.0 + b.powi(4) * m4 / 24.0;
        let deriv = -m1 + b * m2 - b * b * m3 / 2.0 + b * b * b * m4 / 6.0;
        (lambda, deriv)
    } else {
        let (el, eh) = ((-beta * lo).exp(), (-beta * hi).exp());
        let n = el - eh;
        let lambda = n / (beta * width);
        let deriv = ((-lo * el + hi * eh) * beta - n) / (beta * beta * width);
        (lambda, deriv)
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { value } => write!(f, "constant:c={value}"),
            Self::Bernoulli { p, value } => write!(f, "bernoulli:p={p},a={value}"),
            Self::Gaussian { mean, variance } => write!(f, "gaussian:m={mean},var={variance}"),
            Self::Exponential { rate } => write!(f, "exponential:rate={rate}"),
            Self::Uniform { lo, hi } => write!(f, "uniform:lo={lo},hi={hi}"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parses `kind:key=value,...`, e.g. `gaussian:m=0,var=1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidDistribution(format!("{s:?}: {msg}"));
        let (kind, rest) = match s.trim().split_once(':') {
            Some((k, r)) => (k.trim(), r.trim()),
            None => (s.trim(), ""),
        };
        let mut params = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {item:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| bad(format!("{:?} is not a number", v.trim())))?;
            params.push((k.trim().to_ascii_lowercase(), v));
        }
        let allowed: &[&[&str]] = match kind.to_ascii_lowercase().as_str() {
            "constant" => &[&["c", "value"]],
            "bernoulli" => &[&["p"], &["a", "value"]],
            "gaussian" | "normal" => &[&["m", "mean"], &["var", "variance"]],
            "exponential" => &[&["rate", "r"]],
            "uniform" => &[&["lo"], &["hi"]],
            other => return Err(bad(format!("unknown distribution kind {other:?}"))),
        };
        let mut values = vec![None; allowed.len()];
        for (k, v) in params {
            let slot = allowed
                .iter()
                .position(|names| names.contains(&k.as_str()))
                .ok_or_else(|| bad(format!("unknown parameter {k:?}")))?;
            if values[slot].replace(v).is_some() {
                return Err(bad(format!("parameter {k:?} given twice")));
            }
        }
        let get = |i: usize| {
            values[i].ok_or_else(|| bad(format!("missing parameter {:?}", allowed[i][0])))
        };
        match kind.to_ascii_lowercase().as_str() {
            "constant" => Self::constant(get(0)?),
            "bernoulli" => Self::bernoulli(get(0)?, get(1)?),
            "gaussian" | "normal" => Self::gaussian(get(0)?, get(1)?),
            "exponential" => Self::exponential(get(0)?),
            _ => Self::uniform(get(0)?, get(1)?),
        }
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Annealed critical point `h0 + log lambda_beta` with its Jensen lower bound
/// `h0 - beta E[X]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnealedCritical {
    pub value: f64,
    pub jensen_bound: f64,
}

pub fn annealed_critical(dist: &DistributionSpec, beta: f64, h0: f64) -> Result<AnnealedCritical> {
    let value = h0 + dist.log_laplace(beta)?;
    let jensen_bound = h0 - beta * dist.mean();
    assert!(
        value >= jensen_bound - 1e-12 * (1.0 + jensen_bound.abs()),
        "Jensen bound violated for {dist} at beta={beta}: {value} < {jensen_bound}"
    );
    Ok(AnnealedCritical {
        value,
        jensen_bound,
    })
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const BOND_SALT: u64 = 0x5851_F42D_4C95_7F2D;
const TREE_SALT: u64 = 0xD1B5_4A32_D192_ED03;

/// 64-bit avalanche finalizer (splitmix64).
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream word for the bond `{base, base + e_axis}` under `seed`.
pub fn bond_word(seed: u64, base: &[i64], axis: usize) -> u64 {
    let mut h = mix64(seed ^ BOND_SALT);
    for &c in base {
        h = mix64(h.wrapping_add(GOLDEN_GAMMA) ^ c as u64);
    }
    mix64(h.wrapping_add(GOLDEN_GAMMA) ^ axis as u64)
}

/// Key of the root of the tree field under `seed`.
pub fn tree_root_key(seed: u64) -> u64 {
    mix64(seed ^ TREE_SALT)
}

/// Key of the edge to child `child` of the vertex whose incoming edge has
/// key `parent`; by induction a pure function of the root-path string.
pub fn tree_child_key(parent: u64, child: usize) -> u64 {
    mix64(parent.wrapping_mul(GOLDEN_GAMMA) ^ (child as u64 + 1))
}

/// Maps a stream word to the open interval (0, 1).
pub fn unit_interval(word: u64) -> f64 {
    ((word >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// A seed-keyed i.i.d. conductance field on the bonds of Z^d.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Environment {
    dist: DistributionSpec,
    seed: u64,
    dim: usize,
}

impl Environment {
    pub fn new(dist: DistributionSpec, seed: u64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        Ok(Environment { dist, seed, dim })
    }

    pub fn dist(&self) -> &DistributionSpec {
        &self.dist
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `X_b` for a canonical bond.
    pub fn conductance(&self, bond: &Bond) -> f64 {
        debug_assert_eq!(bond.base().dim(), self.dim);
        self.conductance_at(bond.base().coords(), bond.axis())
    }

    /// `X_b` for the bond `{base, base + e_axis}` given by raw coordinates.
    #[inline]
    pub fn conductance_at(&self, base: &[i64], axis: usize) -> f64 {
        match self.dist {
            DistributionSpec::Constant { value } => value,
            dist => dist.quantile(unit_interval(bond_word(self.seed, base, axis))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{canonical_bond, Point};
    use approx::assert_relative_eq;

    fn kinds() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::constant(1.0).unwrap(),
            DistributionSpec::constant(-0.7).unwrap(),
            DistributionSpec::bernoulli(0.5, 1.0).unwrap(),
            DistributionSpec::bernoulli(0.2, -2.0).unwrap(),
            DistributionSpec::gaussian(0.0, 1.0).unwrap(),
            DistributionSpec::gaussian(0.3, 2.0).unwrap(),
            DistributionSpec::exponential(2.0).unwrap(),
            DistributionSpec::uniform(0.0, 1.0).unwrap(),
            DistributionSpec::uniform(-1.5, 0.5).unwrap(),
        ]
    }

    #[test]
    fn laplace_examples() {
        let c = DistributionSpec::constant(1.0).unwrap();
        assert_relative_eq!(c.laplace(2.0).unwrap(), (-2.0f64).exp());
        let b = DistributionSpec::bernoulli(0.5, 1.0).unwrap();
        assert_relative_eq!(b.laplace(2f64.ln()).unwrap(), 0.75, epsilon = 1e-15);
        let g = DistributionSpec::gaussian(0.0, 1.0).unwrap();
        assert_relative_eq!(g.laplace(1.0).unwrap(), 0.5f64.exp(), epsilon = 1e-15);
        assert_relative_eq!(g.laplace(1.0).unwrap(), 1.64872, epsilon = 1e-5);
        let u = DistributionSpec::uniform(0.0, 1.0).unwrap();
        assert_relative_eq!(u.laplace(1.0).unwrap(), 1.0 - (-1.0f64).exp(), epsilon = 1e-14);
        assert!(matches!(g.laplace(-0.1), Err(Error::NegativeBeta(_))));
    }

    #[test]
    fn mean_and_derivative_examples() {
        let c = DistributionSpec::constant(1.0).unwrap();
        assert_eq!(c.mean(), 1.0);
        assert_relative_eq!(c.laplace_derivative(0.7).unwrap(), -(-0.7f64).exp());
        let g = DistributionSpec::gaussian(0.0, 1.0).unwrap();
        assert_relative_eq!(g.laplace_derivative(1.0).unwrap(), 0.5f64.exp(), epsilon = 1e-15);
        assert_eq!(DistributionSpec::bernoulli(0.5, 1.0).unwrap().mean(), 0.5);
        assert!(g.laplace_derivative(-1.0).is_err());
    }

    #[test]
    fn closed_forms_are_consistent() {
        for dist in kinds() {
            assert_relative_eq!(dist.laplace(0.0).unwrap(), 1.0, epsilon = 1e-15);
            assert_relative_eq!(
                -dist.laplace_derivative(0.0).unwrap(),
                dist.mean(),
                epsilon = 1e-12
            );
            for &beta in &[0.0, 1e-5, 0.01, 0.3, 1.0, 2.5] {
                let lam = dist.laplace(beta).unwrap();
                assert_relative_eq!(
                    dist.log_laplace(beta).unwrap(),
                    lam.ln(),
                    epsilon = 1e-12,
                    max_relative = 1e-10
                );
                // central finite difference oracle for the derivative
                let h = 1e-5;
                let lo = (beta - h).max(0.0);
                let fd = (dist.laplace(beta + h).unwrap() - dist.laplace(lo).unwrap())
                    / (beta + h - lo);
                assert_relative_eq!(
                    dist.laplace_derivative(beta).unwrap(),
                    fd,
                    epsilon = 2e-5,
                    max_relative = 1e-5
                );
            }
        }
    }

    #[test]
    fn log_laplace_is_convex_and_above_jensen() {
        for dist in kinds() {
            let grid: Vec<f64> = (0..=60).map(|i| i as f64 * 0.05).collect();
            let logs: Vec<f64> = grid.iter().map(|&b| dist.log_laplace(b).unwrap()).collect();
            for w in logs.windows(3) {
                assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12, "{dist} not convex");
            }
            for (&b, &l) in grid.iter().zip(&logs) {
                assert!(l >= -b * dist.mean() - 1e-12, "{dist} below Jensen at {b}");
            }
        }
    }

    #[test]
    fn jensen_gap_vanishes_only_for_degenerate_laws() {
        for dist in kinds() {
            let a = annealed_critical(&dist, 1.0, 0.0).unwrap();
            let gap = a.value - a.jensen_bound;
            if dist.is_degenerate() {
                assert!(gap.abs() < 1e-14, "{dist}");
            } else {
                assert!(gap > 1e-6, "{dist}");
            }
        }
    }

    #[test]
    fn annealed_critical_examples() {
        let g = DistributionSpec::gaussian(0.0, 1.0).unwrap();
        assert_eq!(annealed_critical(&g, 0.0, 0.97).unwrap().value, 0.97);
        assert_relative_eq!(annealed_critical(&g, 1.0, 0.0).unwrap().value, 0.5);
        let c = DistributionSpec::constant(2.0).unwrap();
        let a = annealed_critical(&c, 0.5, 1.0).unwrap();
        assert_eq!(a.value, 0.0);
        assert_eq!(a.value, a.jensen_bound);
        assert!(annealed_critical(&g, -1.0, 0.0).is_err());
    }

    #[test]
    fn config_strings_round_trip() {
        let g: DistributionSpec = "gaussian:m=0,var=1".parse().unwrap();
        assert_eq!(g, DistributionSpec::gaussian(0.0, 1.0).unwrap());
        for dist in kinds() {
            let back: DistributionSpec = dist.to_string().parse().unwrap();
            assert_eq!(back, dist);
        }
        let b: DistributionSpec = " bernoulli: a=1, p=0.25 ".parse().unwrap();
        assert_eq!(b, DistributionSpec::bernoulli(0.25, 1.0).unwrap());
        for bad in [
            "gaussian:m=0",
            "poisson:l=1",
            "gaussian:m=0,var=-1",
            "bernoulli:p=2,a=1",
            "uniform:lo=1,hi=0",
            "exponential:rate=x",
            "constant:c=1,c=2",
            "constant:q=1",
        ] {
            assert!(bad.parse::<DistributionSpec>().is_err(), "{bad}");
        }
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, "\"gaussian:m=0,var=1\"");
        let back: DistributionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn conductance_is_pure_and_orientation_free() {
        let env = Environment::new(DistributionSpec::gaussian(0.0, 1.0).unwrap(), 7, 2).unwrap();
        let u = Point::new(vec![3, -4]);
        for v in u.neighbors() {
            let a = env.conductance(&canonical_bond(&u, &v).unwrap());
            let b = env.conductance(&canonical_bond(&v, &u).unwrap());
            assert_eq!(a.to_bits(), b.to_bits());
            assert_eq!(a.to_bits(), env.conductance(&canonical_bond(&u, &v).unwrap()).to_bits());
        }
        let c = Environment::new(DistributionSpec::constant(2.5).unwrap(), 1, 3).unwrap();
        assert_eq!(c.conductance_at(&[1, 2, 3], 2), 2.5);
    }

    #[test]
    fn gaussian_field_mean_matches_law() {
        // law of large numbers oracle: 10^5 bonds, 3 sigma = 3/sqrt(1e5) < 0.0095
        let env = Environment::new(DistributionSpec::gaussian(0.0, 1.0).unwrap(), 42, 2).unwrap();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in 0..n {
            let x = env.conductance_at(&[i % 400 - 200, i / 400], (i % 2) as usize);
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((sum_sq / n as f64 - 1.0).abs() < 0.03);
    }

    #[test]
    fn sampled_laplace_matches_closed_form() {
        for dist in kinds() {
            let env = Environment::new(dist, 99, 3).unwrap();
            for &beta in &[0.5, 1.0] {
                let n = 100_000i64;
                let (mut s, mut s2) = (0.0, 0.0);
                for i in 0..n {
                    let w = (-beta * env.conductance_at(&[i, -i / 7, 3], (i % 3) as usize)).exp();
                    s += w;
                    s2 += w * w;
                }
                let mean = s / n as f64;
                let se = ((s2 / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
                let exact = dist.laplace(beta).unwrap();
                assert!(
                    (mean - exact).abs() <= 4.0 * se + 1e-10 * exact,
                    "{dist} beta={beta}: {mean} vs {exact} (se {se})"
                );
            }
        }
    }

    #[test]
    fn neighbouring_bonds_are_uncorrelated() {
        let env = Environment::new(DistributionSpec::uniform(0.0, 1.0).unwrap(), 5, 2).unwrap();
        let n = 50_000;
        let mut cov = 0.0;
        for i in 0..n {
            let a = env.conductance_at(&[i, 0], 0) - 0.5;
            let b = env.conductance_at(&[i + 1, 0], 0) - 0.5;
            cov += a * b;
        }
        // var = 1/12; correlated pairs would give |corr| >> 4/sqrt(n)
        let corr = cov / n as f64 * 12.0;
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "correlation {corr}");
    }
}
