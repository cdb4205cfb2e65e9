//! Machine-readable and tabular results.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Value};

use crate::model::{Database, Fact};
use crate::rational::Rational;
use crate::relevance::{Flip, RelevanceResult};
use crate::rewrite::RewriteTrace;
use crate::structure::{Verdict, Witness};

pub const DECIMAL_DIGITS: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Table,
}

#[derive(Clone, Debug, Serialize)]
pub struct FactRecord {
    pub relation: String,
    pub args: Vec<String>,
    pub provenance: &'static str,
    pub value: Rational,
    pub decimal: String,
}

impl FactRecord {
    pub fn new(db: &Database, fact: &Fact, value: Rational) -> Self {
        let provenance = db.get(fact).map(|i| i.provenance.keyword()).unwrap_or("endo");
        FactRecord {
            relation: fact.relation.clone(),
            args: fact.args.clone(),
            provenance,
            decimal: value.to_decimal(DECIMAL_DIGITS),
            value,
        }
    }

    pub fn fact(&self) -> Fact {
        Fact::new(self.relation.clone(), self.args.iter().cloned())
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub method: String,
    pub query: String,
    pub classification: Vec<Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub facts: Vec<FactRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relevance: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<RewriteTrace>,
}

pub fn witness_json(w: &Witness) -> Value {
    match w {
        Witness::Triplet(t) => json!({
            "type": "triplet",
            "x": t.x,
            "y": t.y,
            "atoms": [t.alpha_x.to_string(), t.alpha_xy.to_string(), t.alpha_y.to_string()],
            "indices": t.indices,
        }),
        Witness::Path(p) => json!({
            "type": "path",
            "atoms": [p.alpha_x.to_string(), p.alpha_y.to_string()],
            "path": p.path,
            "indices": p.indices,
        }),
    }
}

pub fn verdict_json(v: &Verdict) -> Value {
    let mut out = json!({ "verdict": v.kind });
    if let Some(w) = &v.witness {
        out["witness"] = witness_json(w);
    }
    out
}

pub fn relevance_json(r: &RelevanceResult) -> Value {
    let mut out = json!({ "pos_relevant": r.pos_relevant, "neg_relevant": r.neg_relevant });
    if let Some(w) = &r.witness {
        let flip = match w.flip {
            Flip::FalseToTrue => "false_to_true",
            Flip::TrueToFalse => "true_to_false",
        };
        out["witness"] = json!({
            "flip": flip,
            "mapping": w.mapping,
            "subset": w.subset.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        });
    }
    out
}

pub fn probability_json(p: &Rational) -> Value {
    json!({ "value": p, "decimal": p.to_decimal(DECIMAL_DIGITS) })
}

pub fn write_report(out: &mut dyn Write, report: &Report, format: Format) -> io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, report)?;
            writeln!(out)
        }
        Format::Table => {
            writeln!(out, "method: {}", report.method)?;
            for c in &report.classification {
                writeln!(out, "classification: {}", c["verdict"].as_str().unwrap_or("?"))?;
            }
            if let Some(s) = report.samples {
                writeln!(out, "samples: {s}")?;
            }
            for r in &report.facts {
                writeln!(out, "{:<32} {:<4} {:>16} {}", r.fact().to_string(), r.provenance, r.value.to_string(), r.decimal)?;
            }
            if let Some(p) = &report.probability {
                writeln!(out, "probability: {} ({})", p["value"].as_str().unwrap_or("?"), p["decimal"].as_str().unwrap_or("?"))?;
            }
            if let Some(r) = &report.relevance {
                writeln!(out, "pos_relevant: {}  neg_relevant: {}", r["pos_relevant"], r["neg_relevant"])?;
                if let Some(w) = r.get("witness") {
                    writeln!(out, "witness: {}", w["subset"])?;
                }
            }
            Ok(())
        }
    }
}
