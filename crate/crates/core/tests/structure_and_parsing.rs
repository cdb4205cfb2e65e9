use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shapfact_core::fixtures::{self, exo_set};
use shapfact_core::parse::{parse_facts, parse_query, parse_schema, print_facts, print_schema};
use shapfact_core::random::{random_database, random_query, QueryOptions};
use shapfact_core::structure::{
    classify, find_non_hierarchical_triplet, has_non_hierarchical_path, is_hierarchical, VerdictKind,
};

#[test]
fn classification_table() {
    let none = BTreeSet::new();
    let stud_course = exo_set(&["Stud", "Course"]);
    assert_eq!(classify(&fixtures::q1(), &none).kind, VerdictKind::PTimeHierarchical);
    let hard = classify(&fixtures::q2(), &none);
    assert_eq!(hard.kind, VerdictKind::HardNonHierarchical);
    assert!(hard.witness.is_some());
    assert_eq!(classify(&fixtures::q2(), &stud_course).kind, VerdictKind::PTimeExoRewrite);
    assert_eq!(classify(&fixtures::citations_q(), &exo_set(&["Pub", "Citations"])).kind, VerdictKind::PTimeExoRewrite);
    assert_eq!(classify(&fixtures::exo_pad_q(), &exo_set(&["S", "P"])).kind, VerdictKind::PTimeExoRewrite);
    assert_eq!(classify(&fixtures::exo_path_q(), &exo_set(&["S", "P"])).kind, VerdictKind::HardNonHierPath);
    assert_eq!(classify(&fixtures::long_path_q(), &exo_set(&["Q", "S", "P"])).kind, VerdictKind::HardNonHierPath);
    assert_eq!(classify(&fixtures::q3(), &none).kind, VerdictKind::UnknownSelfJoin);
}

#[test]
fn fixture_files_round_trip() {
    let db = fixtures::running_db_exo();
    let schema = parse_schema(&print_schema(db.schema())).unwrap();
    assert_eq!(parse_facts(&print_facts(&db), &schema).unwrap(), db);
    let q = fixtures::q_sat();
    assert_eq!(parse_query(&q.to_string()).unwrap(), q);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn hierarchy_iff_no_triplet(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_query(&mut rng, &QueryOptions { max_atoms: 5, ..Default::default() });
        prop_assert_eq!(is_hierarchical(&q), find_non_hierarchical_triplet(&q).is_none());
    }

    #[test]
    fn without_exogenous_relations_paths_are_non_hierarchy(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_query(&mut rng, &QueryOptions { max_atoms: 5, ..Default::default() });
        prop_assert_eq!(has_non_hierarchical_path(&q, &BTreeSet::new()).is_some(), !is_hierarchical(&q));
    }

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_query(&mut rng, &QueryOptions { self_joins: true, constants: 0.3, ..Default::default() });
        let db = random_database(&mut rng, &q, &BTreeSet::new(), 10);
        let text = q.to_string();
        let back = parse_query(&text).unwrap();
        prop_assert_eq!(back.disjuncts.len(), 1);
        prop_assert_eq!(&back.disjuncts[0], &q);
        prop_assert_eq!(back.to_string(), text);
        let schema = parse_schema(&print_schema(db.schema())).unwrap();
        let printed = print_facts(&db);
        let db2 = parse_facts(&printed, &schema).unwrap();
        prop_assert_eq!(print_facts(&db2), printed);
        prop_assert_eq!(db2, db);
    }
}
