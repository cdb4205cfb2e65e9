//! Browser bindings: classify a query, compute every value, or estimate one.
//! Inputs are the same text formats the CLI reads; outputs are JSON strings.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use shapfact_core::approx::{shapley_additive_fpras, SamplingPlan};
use shapfact_core::eval::Brute;
use shapfact_core::exact::shapley_exact_all;
use shapfact_core::parse::{parse_fact, parse_facts, parse_query_for, parse_schema};
use shapfact_core::report::{verdict_json, FactRecord};
use shapfact_core::rewrite::shapley_exo_all;
use shapfact_core::structure::{classify_ucq, VerdictKind};
use shapfact_core::{Database, Error, UCQNeg};

/// Brute force in the page stays small so the tab never hangs.
const PAGE_CAP: usize = 16;

fn load(schema: &str, facts: &str, query: &str) -> Result<(Database, UCQNeg), Error> {
    let schema = parse_schema(schema)?;
    let q = parse_query_for(query, &schema)?;
    Ok((parse_facts(facts, &schema)?, q))
}

fn text(v: Value) -> String {
    serde_json::to_string(&v).unwrap()
}

pub fn classify_json(schema: &str, query: &str) -> Result<String, String> {
    let schema = parse_schema(schema).map_err(|e| e.to_string())?;
    let q = parse_query_for(query, &schema).map_err(|e| e.to_string())?;
    let verdicts = classify_ucq(&q, &schema.exogenous_relations());
    let lines: Vec<String> = verdicts.iter().map(|v| v.to_string()).collect();
    Ok(text(json!({
        "classification": verdicts.iter().map(verdict_json).collect::<Vec<_>>(),
        "summary": lines,
    })))
}

/// Every endogenous fact's value with the cheapest exact engine that applies.
pub fn shapley_all_json(schema: &str, facts: &str, query: &str) -> Result<String, String> {
    let (db, q) = load(schema, facts, query).map_err(|e| e.to_string())?;
    let x = db.schema().exogenous_relations();
    let verdicts = classify_ucq(&q, &x);
    let kind = match verdicts.as_slice() {
        [v] => Some(v.kind),
        _ => None,
    };
    let (method, values) = match (kind, q.as_cq()) {
        (Some(VerdictKind::PTimeHierarchical), Some(cq)) => ("exact", shapley_exact_all(&db, cq)),
        (Some(VerdictKind::PTimeExoRewrite), Some(cq)) => ("exo", shapley_exo_all(&db, cq, &x).map(|(v, _)| v)),
        _ => ("brute", Brute::new(PAGE_CAP).shapley_all(&db, &q)),
    };
    let values = values.map_err(|e| e.to_string())?;
    let records: Vec<FactRecord> = values.into_iter().map(|(f, v)| FactRecord::new(&db, &f, v)).collect();
    Ok(text(json!({
        "method": method,
        "classification": verdicts.iter().map(verdict_json).collect::<Vec<_>>(),
        "facts": records,
    })))
}

pub fn estimate_json(schema: &str, facts: &str, query: &str, fact: &str, epsilon: f64, delta: f64, seed: u64) -> Result<String, String> {
    let (db, q) = load(schema, facts, query).map_err(|e| e.to_string())?;
    let f = parse_fact(fact).map_err(|e| e.to_string())?;
    let plan = SamplingPlan::new(epsilon, delta, seed).map_err(|e| e.to_string())?;
    let (est, plan) = shapley_additive_fpras(&db, &q, &f, &plan).map_err(|e| e.to_string())?;
    Ok(text(json!({
        "method": "approx",
        "fact": FactRecord::new(&db, &f, est),
        "samples": plan.samples,
        "seed": plan.seed,
    })))
}

#[wasm_bindgen]
pub fn classify(schema: &str, query: &str) -> Result<String, JsValue> {
    classify_json(schema, query).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn shapley_all(schema: &str, facts: &str, query: &str) -> Result<String, JsValue> {
    shapley_all_json(schema, facts, query).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn estimate(schema: &str, facts: &str, query: &str, fact: &str, epsilon: f64, delta: f64, seed: u32) -> Result<String, JsValue> {
    estimate_json(schema, facts, query, fact, epsilon, delta, seed as u64).map_err(|e| JsValue::from_str(&e))
}
