use std::collections::HashMap;

use approx::assert_relative_eq;
use proptest::prelude::*;
use saw_quench::enumeration::{count_walks, EnumerationConfig};
use saw_quench::environment::{bond_word, unit_interval, DistributionSpec, Environment};
use saw_quench::lattice::Point;
use saw_quench::observables::{annealed_counts, quenched_counts, quenched_susceptibility, two_point_table};
use saw_quench::tree::dichotomy_f;
use statrs::distribution::{ContinuousCDF, Normal};

fn gaussian() -> DistributionSpec {
    DistributionSpec::gaussian(0.0, 1.0).unwrap()
}

#[test]
fn conductances_match_golden_file() {
    let mut rdr = csv::Reader::from_reader(include_str!("data/conductances.csv").as_bytes());
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let dist: DistributionSpec = rec[0].parse().unwrap();
        let seed: u64 = rec[1].parse().unwrap();
        let base = [rec[2].parse::<i64>().unwrap(), rec[3].parse().unwrap()];
        let axis: usize = rec[4].parse().unwrap();
        let want: f64 = rec[5].parse().unwrap();
        let env = Environment::new(dist, seed, 2).unwrap();
        assert_eq!(env.conductance_at(&base, axis).to_bits(), want.to_bits(), "{dist} {seed} {base:?} {axis}");
        rows += 1;
    }
    assert_eq!(rows, 48);
}

#[test]
fn gaussian_conductances_follow_the_normal_quantile() {
    let normal = Normal::new(0.5, 2.0).unwrap();
    let env = Environment::new(DistributionSpec::gaussian(0.5, 4.0).unwrap(), 9, 3).unwrap();
    for base in [[0i64, 0, 0], [4, -1, 2], [-7, 3, 0]] {
        for axis in 0..3 {
            let u = unit_interval(bond_word(9, &base, axis));
            assert_relative_eq!(env.conductance_at(&base, axis), normal.inverse_cdf(u), max_relative = 1e-12);
        }
    }
}

#[test]
fn environment_moments() {
    let env = Environment::new(DistributionSpec::exponential(2.0).unwrap(), 5, 2).unwrap();
    let xs: Vec<f64> = (0..200_000i64).map(|i| env.conductance_at(&[i, -i], (i % 2) as usize)).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
    assert!((mean - 0.5).abs() < 0.01, "{mean}");
    assert!((var - 0.25).abs() < 0.01, "{var}");
}

#[test]
fn beta_zero_reduces_to_plain_counts() {
    let cfg = EnumerationConfig::new(3, 6).unwrap();
    let env = Environment::new(gaussian(), 1, 3).unwrap();
    let q = quenched_counts(&cfg, &env, 0.0, &Point::origin(3)).unwrap();
    let c = count_walks(&cfg).unwrap();
    for (a, b) in q.counts.values.iter().zip(&c.values) {
        assert_eq!(*a, *b as f64);
    }
}

#[test]
fn annealed_gaussian_counts() {
    let beta: f64 = 0.7;
    let a = annealed_counts(&gaussian(), beta, 2, 8).unwrap();
    let c = count_walks(&EnumerationConfig::new(2, 8).unwrap()).unwrap();
    for n in 0..=8 {
        let want = (n as f64 * beta * beta / 2.0).exp() * c.values[n] as f64;
        assert_relative_eq!(a.values[n], want, max_relative = 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conductances_do_not_depend_on_query_order(seed in any::<u64>(), order in Just((0..40usize).collect::<Vec<_>>()).prop_shuffle()) {
        let env = Environment::new(gaussian(), seed, 2).unwrap();
        let site = |k: usize| ([k as i64 % 7 - 3, k as i64 / 7 - 3], k % 2);
        let forward: Vec<f64> = (0..40).map(|k| { let (b, a) = site(k); env.conductance_at(&b, a) }).collect();
        let fresh = Environment::new(gaussian(), seed, 2).unwrap();
        let shuffled: HashMap<usize, f64> = order.iter().map(|&k| { let (b, a) = site(k); (k, fresh.conductance_at(&b, a)) }).collect();
        for k in 0..40 {
            prop_assert_eq!(forward[k].to_bits(), shuffled[&k].to_bits());
        }
    }

    #[test]
    fn one_dimensional_counts_are_two_path_sums(seed in any::<u64>(), beta in 0.0f64..2.0, x0 in -20i64..20) {
        let n_max = 30;
        let cfg = EnumerationConfig::new(1, n_max).unwrap();
        let env = Environment::new(gaussian(), seed, 1).unwrap();
        let q = quenched_counts(&cfg, &env, beta, &Point::new(vec![x0])).unwrap();
        let (mut right, mut left) = (0.0, 0.0);
        for n in 1..=n_max {
            let i = n as i64 - 1;
            right += env.conductance_at(&[x0 + i], 0);
            left += env.conductance_at(&[x0 - i - 1], 0);
            let want = (-beta * right).exp() + (-beta * left).exp();
            prop_assert!((q.counts.values[n] - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn split_depth_is_invisible(seed in any::<u64>(), beta in 0.0f64..1.5, split in 0usize..4) {
        let env = Environment::new(gaussian(), seed, 2).unwrap();
        let x = Point::origin(2);
        let a = quenched_counts(&EnumerationConfig::with_split(2, 7, 0).unwrap(), &env, beta, &x).unwrap();
        let b = quenched_counts(&EnumerationConfig::with_split(2, 7, split).unwrap(), &env, beta, &x).unwrap();
        for (p, q) in a.counts.values.iter().zip(&b.counts.values) {
            prop_assert_eq!(p.to_bits(), q.to_bits());
        }
    }

    #[test]
    fn two_point_sum_is_the_susceptibility(seed in any::<u64>(), beta in 0.0f64..1.0, h in 0.5f64..3.0) {
        let cfg = EnumerationConfig::new(2, 6).unwrap();
        let env = Environment::new(gaussian(), seed, 2).unwrap();
        let x = Point::new(vec![3, -1]);
        let g = two_point_table(&cfg, &env, h, beta, &x).unwrap();
        let chi = quenched_susceptibility(&cfg, &env, h, beta, &x).unwrap();
        prop_assert!((g.total() - chi.partial_sum).abs() <= 1e-12 * chi.partial_sum);
        prop_assert_eq!(g.get(&x), 1.0);
        for (y, v) in g.iter() {
            prop_assert!(v > 0.0);
            prop_assert!(y.l1_distance(&x) <= 6);
        }
    }

    #[test]
    fn bernoulli_dichotomy_closed_form(p in 0.05f64..0.95, beta in 0.0f64..4.0, ell in 3usize..8) {
        let f = dichotomy_f(ell, &DistributionSpec::bernoulli(p, 1.0).unwrap(), beta).unwrap();
        let lambda = 1.0 - p + p * (-beta).exp();
        let want = ((ell - 1) as f64).ln() + lambda.ln() + beta * p * (-beta).exp() / lambda;
        prop_assert!((f - want).abs() < 1e-12);
    }

    #[test]
    fn counts_are_submultiplicative(m in 1usize..6, k in 1usize..6) {
        let c = count_walks(&EnumerationConfig::new(2, m + k).unwrap()).unwrap();
        prop_assert!(c.values[m + k] <= c.values[m] * c.values[k]);
    }
}
