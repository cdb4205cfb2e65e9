//! Argument handling and dispatch for the `shapfact` binary.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use shapfact_core::approx::{shapley_additive_fpras, SamplingPlan};
use shapfact_core::eval::{gen_gap_instance, Brute, DEFAULT_CAP};
use shapfact_core::exact::shapley_exact_all;
use shapfact_core::parse::{parse_fact, parse_facts, parse_query_for, parse_schema};
use shapfact_core::prob::{brute_prob_with_cap, prob_eval_with};
use shapfact_core::relevance::{relevance, ucq_is_relevant_union};
use shapfact_core::report::{probability_json, relevance_json, verdict_json, witness_json, write_report, FactRecord, Format, Report};
use shapfact_core::rewrite::{Rewriter, DEFAULT_BLOWUP_CAP};
use shapfact_core::structure::{classify_ucq, Verdict, VerdictKind, Witness};
use shapfact_core::{CQNeg, Database, Error, Fact, Rational, UCQNeg};

#[derive(Parser, Debug)]
#[command(name = "shapfact", version, about = "Shapley values of database facts for queries with negation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tractability verdict for each rule of the query.
    Classify {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long, value_enum, default_value_t = OutFormat::Json)]
        format: OutFormat,
    },
    /// Shapley value of one fact, or of every endogenous fact.
    Shapley(ShapleyArgs),
    /// Whether a fact can ever change the query answer.
    Relevance {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        fact: String,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        #[arg(long, env = "SHAPFACT_CAP", default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long, value_enum, default_value_t = OutFormat::Json)]
        format: OutFormat,
    },
    /// Query probability over a tuple-independent database.
    Prob {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        #[arg(long, env = "SHAPFACT_CAP", default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long, value_enum, default_value_t = OutFormat::Json)]
        format: OutFormat,
    },
    /// Write a gap-family instance as schema, facts and query files.
    GenGap {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct Input {
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long)]
    pub facts: PathBuf,
    #[arg(long)]
    pub query: PathBuf,
}

#[derive(Args, Debug)]
pub struct ShapleyArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    pub fact: Option<String>,
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    pub format: OutFormat,
    /// Include the rewrite steps when the exo method runs.
    #[arg(long)]
    pub trace: bool,
    /// Largest number of endogenous facts brute force will enumerate.
    #[arg(long, env = "SHAPFACT_CAP", default_value_t = DEFAULT_CAP)]
    pub cap: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Auto,
    Exact,
    Exo,
    Brute,
    Approx,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Exact => "exact",
            Method::Exo => "exo",
            Method::Brute => "brute",
            Method::Approx => "approx",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Table,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Format {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Table => Format::Table,
        }
    }
}

/// What the process prints and returns.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Failure while running a command, with the method that was attempted.
struct Failure {
    method: Option<Method>,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure { method: None, error }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    Failure { method: None, error: Error::Io(format!("{}: {e}", path.display())) }
}

/// Parse `args` (without the program name) and run the command.
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("shapfact")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let mut out = Vec::new();
    match dispatch(&cli.command, &mut out) {
        Ok(()) => Outcome { code: 0, stdout: String::from_utf8(out).unwrap(), stderr: String::new() },
        Err(f) => failure_outcome(f),
    }
}

fn failure_outcome(f: Failure) -> Outcome {
    let refused = f.error.is_refusal();
    let mut stderr = format!("error: {}\n", f.error);
    let mut stdout = String::new();
    if refused {
        let mut body = json!({ "refused": true, "error": f.error.to_string() });
        if let Some(m) = f.method {
            body["method"] = json!(m.name());
        }
        if let Some(w) = refusal_witness(&f.error) {
            stderr.push_str(&format!("witness: {w}\n"));
            body["witness"] = witness_json(&w);
        }
        stdout = format!("{}\n", serde_json::to_string_pretty(&body).unwrap());
    }
    Outcome { code: if refused { 2 } else { 1 }, stdout, stderr }
}

fn refusal_witness(e: &Error) -> Option<Witness> {
    match e {
        Error::NotHierarchical(t) => Some(Witness::Triplet((**t).clone())),
        Error::HasNonHierPath(p) => Some(Witness::Path((**p).clone())),
        _ => None,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

struct Loaded {
    db: Database,
    query: UCQNeg,
    exogenous: BTreeSet<String>,
}

fn load(input: &Input) -> Result<Loaded, Failure> {
    let schema = parse_schema(&read(&input.schema)?)?;
    let query = parse_query_for(&read(&input.query)?, &schema)?;
    let db = parse_facts(&read(&input.facts)?, &schema)?;
    Ok(Loaded { exogenous: schema.exogenous_relations(), db, query })
}

fn single(q: &UCQNeg) -> Result<&CQNeg, Error> {
    q.as_cq().ok_or(Error::NotConjunctive(q.disjuncts.len()))
}

fn dispatch(cmd: &Command, out: &mut Vec<u8>) -> Result<(), Failure> {
    match cmd {
        Command::Classify { schema, query, format } => {
            let schema = parse_schema(&read(schema)?)?;
            let q = parse_query_for(&read(query)?, &schema)?;
            let verdicts = classify_ucq(&q, &schema.exogenous_relations());
            let report = Report {
                method: "classify".into(),
                query: q.to_string(),
                classification: verdicts.iter().map(verdict_json).collect(),
                ..Default::default()
            };
            emit(out, &report, *format)
        }
        Command::Shapley(a) => shapley(a, out),
        Command::Relevance { input, fact, method, cap, format } => {
            let l = load(input)?;
            let f = parse_fact(fact)?;
            let (used, r) = match (method, l.query.as_cq()) {
                (Method::Brute, _) => (Method::Brute, Brute::new(*cap).relevance(&l.db, &l.query, &f)),
                (Method::Auto | Method::Exact, Some(cq)) => (Method::Exact, relevance(&l.db, cq, &f)),
                (Method::Auto | Method::Exact, None) => (Method::Exact, ucq_is_relevant_union(&l.db, &l.query, &f)),
                (m, _) => {
                    return Err(Failure { method: Some(*m), error: Error::BadPlan(format!("relevance does not support --method {}", m.name())) })
                }
            };
            let r = r.map_err(|error| Failure { method: Some(used), error })?;
            let report = Report {
                method: used.name().into(),
                query: l.query.to_string(),
                classification: classify_ucq(&l.query, &l.exogenous).iter().map(verdict_json).collect(),
                relevance: Some(relevance_json(&r)),
                ..Default::default()
            };
            emit(out, &report, *format)
        }
        Command::Prob { input, method, cap, format } => {
            let l = load(input)?;
            let used = match method {
                Method::Auto => match l.query.as_cq() {
                    Some(_) if classify_ucq(&l.query, &l.exogenous)[0].is_tractable() => Method::Exact,
                    _ => Method::Brute,
                },
                Method::Exact | Method::Brute => *method,
                m => {
                    return Err(Failure { method: Some(*m), error: Error::BadPlan(format!("prob does not support --method {}", m.name())) })
                }
            };
            let p = match used {
                Method::Exact => single(&l.query).and_then(|cq| prob_eval_with(&l.db, cq, &l.exogenous, &Rewriter::new(DEFAULT_BLOWUP_CAP))),
                _ => brute_prob_with_cap(&l.db, &l.query, *cap),
            }
            .map_err(|error| Failure { method: Some(used), error })?;
            let report = Report {
                method: used.name().into(),
                query: l.query.to_string(),
                classification: classify_ucq(&l.query, &l.exogenous).iter().map(verdict_json).collect(),
                probability: Some(probability_json(&p)),
                ..Default::default()
            };
            emit(out, &report, *format)
        }
        Command::GenGap { n, out: dir } => {
            if *n == 0 {
                return Err(Error::BadPlan("gap instances start at n = 1".into()).into());
            }
            let g = gen_gap_instance(*n);
            let (schema, facts, query) = g.files();
            fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            let mut written = Vec::new();
            for (name, text) in [("gap.schema", schema), ("gap.facts", facts), ("gap.query", query)] {
                let path = dir.join(name);
                fs::write(&path, text).map_err(|e| io_error(&path, e))?;
                written.push(path.display().to_string());
            }
            let expected = gap_value(*n);
            let body = json!({
                "n": n,
                "fact": g.fact.to_string(),
                "expected": probability_json(&expected),
                "files": written,
            });
            out.extend(serde_json::to_string_pretty(&body).unwrap().bytes());
            out.push(b'\n');
            Ok(())
        }
    }
}

/// n!·n!/(2n+1)!
fn gap_value(n: usize) -> Rational {
    let mut v = Rational::one();
    for i in 1..=n {
        v = v * Rational::new(i as i64, (n + i) as i64);
    }
    v * Rational::new(1, 2 * n as i64 + 1)
}

fn emit(out: &mut Vec<u8>, report: &Report, format: OutFormat) -> Result<(), Failure> {
    write_report(out, report, format.into()).expect("writing to memory");
    Ok(())
}

/// Method chosen by `auto`: the cheapest exact engine that applies, then brute force, then sampling.
pub fn resolve_auto(verdicts: &[Verdict], endogenous: usize, cap: usize) -> Method {
    if let [v] = verdicts {
        match v.kind {
            VerdictKind::PTimeHierarchical => return Method::Exact,
            VerdictKind::PTimeExoRewrite => return Method::Exo,
            _ => {}
        }
    }
    if endogenous <= cap {
        Method::Brute
    } else {
        Method::Approx
    }
}

fn shapley(a: &ShapleyArgs, out: &mut Vec<u8>) -> Result<(), Failure> {
    let l = load(&a.input)?;
    let verdicts = classify_ucq(&l.query, &l.exogenous);
    let target = match &a.fact {
        Some(text) => {
            let f = parse_fact(text)?;
            if !l.db.is_endogenous(&f) {
                return Err(Error::FactNotEndogenous(f).into());
            }
            Some(f)
        }
        None => None,
    };
    let method = match a.method {
        Method::Auto => resolve_auto(&verdicts, l.db.endogenous_count(), a.cap),
        m => m,
    };
    let fail = |error| Failure { method: Some(method), error };
    let mut report = Report {
        method: method.name().into(),
        query: l.query.to_string(),
        classification: verdicts.iter().map(verdict_json).collect(),
        ..Default::default()
    };
    let wanted = |f: &Fact| target.as_ref().map_or(true, |t| t == f);
    let values: Vec<(Fact, Rational)> = match method {
        Method::Exact => {
            let cq = single(&l.query).map_err(fail)?;
            match &target {
                Some(f) => vec![(f.clone(), shapfact_core::exact::shapley_exact(&l.db, cq, f).map_err(fail)?)],
                None => shapley_exact_all(&l.db, cq).map_err(fail)?,
            }
        }
        Method::Exo => {
            let cq = single(&l.query).map_err(fail)?;
            let (d, q, trace) = Rewriter::new(DEFAULT_BLOWUP_CAP).rewrite(&l.db, cq, &l.exogenous).map_err(fail)?;
            if a.trace {
                report.trace = Some(trace);
            }
            match &target {
                Some(f) => vec![(f.clone(), shapfact_core::exact::shapley_exact(&d, &q, f).map_err(fail)?)],
                None => shapley_exact_all(&d, &q).map_err(fail)?,
            }
        }
        Method::Brute => {
            let brute = Brute::new(a.cap);
            match &target {
                Some(f) => vec![(f.clone(), brute.shapley(&l.db, &l.query, f).map_err(fail)?)],
                None => brute.shapley_all(&l.db, &l.query).map_err(fail)?,
            }
        }
        Method::Approx => {
            let plan = SamplingPlan::new(a.epsilon, a.delta, a.seed).map_err(fail)?.with_workers(a.workers);
            report.seed = Some(plan.seed);
            report.samples = Some(plan.samples);
            let mut v = Vec::new();
            for f in l.db.endogenous().filter(|f| wanted(f)) {
                v.push((f.clone(), shapley_additive_fpras(&l.db, &l.query, f, &plan).map_err(fail)?.0));
            }
            v
        }
        Method::Auto => unreachable!("resolved above"),
    };
    report.facts = values.into_iter().filter(|(f, _)| wanted(f)).map(|(f, v)| FactRecord::new(&l.db, &f, v)).collect();
    emit(out, &report, a.format)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_values() {
        assert_eq!(gap_value(1), Rational::new(1, 6));
        assert_eq!(gap_value(6), Rational::new(1, 12012));
    }

    #[test]
    fn auto_resolution() {
        let v = |kind| Verdict { kind, witness: None };
        assert_eq!(resolve_auto(&[v(VerdictKind::PTimeHierarchical)], 100, 20), Method::Exact);
        assert_eq!(resolve_auto(&[v(VerdictKind::PTimeExoRewrite)], 100, 20), Method::Exo);
        assert_eq!(resolve_auto(&[v(VerdictKind::UnknownSelfJoin)], 20, 20), Method::Brute);
        assert_eq!(resolve_auto(&[v(VerdictKind::HardNonHierPath)], 21, 20), Method::Approx);
        let union = [v(VerdictKind::PTimeHierarchical), v(VerdictKind::PTimeHierarchical)];
        assert_eq!(resolve_auto(&union, 3, 20), Method::Brute);
    }
}
