mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{factorial, grand_coalition_gain, permutation_shapley, relations_with_polarity, sum};
use shapfact_core::eval::{brute_shapley, gen_gap_instance, Brute};
use shapfact_core::fixtures::{self, running_fact, RUNNING_NAMES};
use shapfact_core::random::{random_instance, QueryOptions};
use shapfact_core::Rational;

#[test]
fn running_example_matches_permutations() {
    let db = fixtures::running_db();
    let q1 = fixtures::q1();
    let brute = Brute::default().shapley_all(&db, &q1).unwrap();
    for (f, v) in &brute {
        assert_eq!(*v, permutation_shapley(&db, &q1, f), "{f}");
    }
    let total = sum(brute.into_iter().map(|(_, v)| v));
    assert_eq!(total, Rational::one());
}

#[test]
fn fr1_value_is_the_main_text_one() {
    let db = fixtures::running_db();
    let v = brute_shapley(&db, &fixtures::q1(), &running_fact("fr1")).unwrap();
    assert_eq!(v, Rational::new(37, 210));
    assert_ne!(v, Rational::new(143, 840));
}

#[test]
fn gap_family() {
    for n in 1..=6u64 {
        let g = gen_gap_instance(n as usize);
        assert_eq!(g.db.endogenous_count() as u64, 2 * n + 1);
        let v = brute_shapley(&g.db, &g.query, &g.fact).unwrap();
        let expected = Rational::new(factorial(n) * factorial(n), factorial(2 * n + 1));
        assert_eq!(v, expected, "n = {n}");
        assert!(v > Rational::zero());
        assert!(v <= Rational::new(1, 1i64 << n));
    }
}

#[test]
fn gap_family_listed_values() {
    let listed = [(2, 30), (3, 140), (4, 630), (5, 2772), (6, 12012)];
    for (n, den) in listed {
        let g = gen_gap_instance(n);
        assert_eq!(brute_shapley(&g.db, &g.query, &g.fact).unwrap(), Rational::new(1, den));
    }
}

#[test]
fn every_running_fact_has_a_value() {
    let db = fixtures::running_db();
    for name in RUNNING_NAMES {
        assert!(brute_shapley(&db, &fixtures::q1(), &running_fact(name)).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subset_form_equals_permutations(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opts = QueryOptions { self_joins: true, ..Default::default() };
        let inst = random_instance(&mut rng, &opts, 6);
        for (f, v) in Brute::default().shapley_all(&inst.db, &inst.query).unwrap() {
            prop_assert_eq!(v, permutation_shapley(&inst.db, &inst.query, &f));
        }
    }

    #[test]
    fn efficiency_sign_and_null_player(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opts = QueryOptions { self_joins: true, ..Default::default() };
        let inst = random_instance(&mut rng, &opts, 10);
        let (db, q) = (&inst.db, &inst.query);
        let brute = Brute::default();
        let values = brute.shapley_all(db, q).unwrap();
        prop_assert_eq!(sum(values.iter().map(|(_, v)| v.clone())), grand_coalition_gain(db, q));
        let pos = relations_with_polarity(q, true);
        let neg = relations_with_polarity(q, false);
        for (f, v) in &values {
            if pos.contains(&f.relation) && !neg.contains(&f.relation) {
                prop_assert!(*v >= Rational::zero());
            }
            if neg.contains(&f.relation) && !pos.contains(&f.relation) {
                prop_assert!(*v <= Rational::zero());
            }
            if !brute.relevance(db, q, f).unwrap().relevant() {
                prop_assert!(v.is_zero());
            }
        }
    }
}
