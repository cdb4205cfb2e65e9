use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shapfact_core::approx::{sample_bound, shapley_additive_fpras, Sampler, SamplingPlan};
use shapfact_core::eval::gen_gap_instance;
use shapfact_core::fixtures::{self, running_fact};
use shapfact_core::Rational;

#[test]
fn plan_sizes() {
    assert_eq!(sample_bound(0.05, 0.01), 4239);
    assert_eq!(SamplingPlan::new(0.05, 0.1, 0).unwrap().samples, 2397);
}

#[test]
fn seeded_runs_are_reproducible() {
    let db = fixtures::running_db();
    let q1 = fixtures::q1();
    let ft2 = running_fact("ft2");
    for workers in [1, 4] {
        let plan = SamplingPlan::new(0.05, 0.05, 99).unwrap().with_workers(workers);
        let a = shapley_additive_fpras(&db, &q1, &ft2, &plan).unwrap();
        let b = shapley_additive_fpras(&db, &q1, &ft2, &plan).unwrap();
        assert_eq!(a, b);
        assert!((a.0.to_f64() + 2.0 / 35.0).abs() <= 0.05);
    }
}

#[test]
fn mean_is_unbiased() {
    let db = fixtures::running_db();
    let mut sampler = Sampler::new(&db, &fixtures::q1(), &running_fact("ft1")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let m = 100_000;
    let (mut s, mut s2) = (0.0f64, 0.0f64);
    for _ in 0..m {
        let x = sampler.draw(&mut rng) as f64;
        s += x;
        s2 += x * x;
    }
    let mean = s / m as f64;
    let var = s2 / m as f64 - mean * mean;
    let se = (var / m as f64).sqrt();
    let truth = -3.0 / 28.0;
    assert!((mean - truth).abs() <= 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn coverage_at_epsilon_005_delta_01() {
    let db = fixtures::running_db();
    let q1 = fixtures::q1();
    let ft1 = running_fact("ft1");
    let truth = Rational::new(-3, 28);
    let eps = Rational::new(1, 20);
    let failures = (0..200u64)
        .filter(|&seed| {
            let plan = SamplingPlan::new(0.05, 0.1, seed).unwrap();
            let (est, _) = shapley_additive_fpras(&db, &q1, &ft1, &plan).unwrap();
            (est - truth.clone()).abs() > eps
        })
        .count();
    assert!(failures as f64 / 200.0 <= 0.15, "{failures} failures");
}

#[test]
fn gap_instance_defeats_additive_estimates() {
    let n = 12;
    let g = gen_gap_instance(n);
    let plan = SamplingPlan::new(0.05, 0.1, 7).unwrap().with_workers(4);
    let (est, _) = shapley_additive_fpras(&g.db, &g.query, &g.fact, &plan).unwrap();
    assert_eq!(est, Rational::zero());
    let fact = |k: i64| (1..=k).map(num_bigint::BigInt::from).product::<num_bigint::BigInt>();
    let truth = Rational::new(fact(12) * fact(12), fact(25));
    assert!(truth > Rational::zero());
    assert!(truth < Rational::new(1, 10_000_000));
}
