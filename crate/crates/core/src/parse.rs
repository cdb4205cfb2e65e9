//! Text formats: queries, schema files and fact files.
//!
//! ```text
//! relation Stud/1 exogenous        # schema
//! exo Stud(Adam)                   # facts
//! endo TA(Adam)
//! prob 3/10 Reg(Adam,OS)
//! q() :- Stud(x), not TA(x), Reg(x,y).
//! ```

use crate::error::{Error, Result};
use crate::model::{
    validate_fact_list, validate_query, Atom, CQNeg, Database, Fact, FactInfo, Polarity, Provenance, RelationSym,
    Schema, Term, UCQNeg, Violation, RESERVED_PREFIX,
};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Turnstile,
    Slash,
    Semicolon,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier {s}"),
            Tok::Number(s) => format!("number {s}"),
            Tok::Quoted(s) => format!("string '{s}'"),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
            Tok::Dot => ".".into(),
            Tok::Turnstile => ":-".into(),
            Tok::Slash => "/".into(),
            Tok::Semicolon => ";".into(),
            Tok::End => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Lexer { chars: text.chars().peekable(), line, column: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn syntax(&self, expected: &str) -> Error {
        Error::Syntax { line: self.line, column: self.column, expected: expected.to_string() }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>> {
        let mut out = Vec::new();
        loop {
            while let Some(&c) = self.chars.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '#' || c == '%' {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let (line, column) = (self.line, self.column);
            let Some(&c) = self.chars.peek() else {
                out.push(Spanned { tok: Tok::End, line, column });
                return Ok(out);
            };
            let tok = match c {
                '(' | ')' | ',' | '.' | '/' | ';' => {
                    self.bump();
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        '.' => Tok::Dot,
                        '/' => Tok::Slash,
                        _ => Tok::Semicolon,
                    }
                }
                ':' => {
                    self.bump();
                    if self.chars.peek() == Some(&'-') {
                        self.bump();
                        Tok::Turnstile
                    } else {
                        return Err(self.syntax(":-"));
                    }
                }
                '\'' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some('\'') => break,
                            Some('\\') => match self.bump() {
                                Some(e) => s.push(e),
                                None => return Err(self.syntax("closing quote")),
                            },
                            Some('\n') | None => return Err(self.syntax("closing quote")),
                            Some(ch) => s.push(ch),
                        }
                    }
                    Tok::Quoted(s)
                }
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let mut s = String::new();
                    while let Some(&ch) = self.chars.peek() {
                        if ch.is_ascii_alphanumeric() || ch == '_' {
                            s.push(ch);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    if c.is_ascii_digit() {
                        Tok::Number(s)
                    } else {
                        Tok::Ident(s)
                    }
                }
                _ => return Err(self.syntax("a term, relation name or punctuation")),
            };
            out.push(Spanned { tok, line, column });
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TermMode {
    /// Lowercase identifiers are variables.
    Query,
    /// Every term is a constant.
    Fact,
}

impl Parser {
    fn new(text: &str, line: usize) -> Result<Self> {
        Ok(Parser { toks: Lexer::new(text, line).tokens()?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> Error {
        let s = &self.toks[self.pos];
        Error::Syntax {
            line: s.line,
            column: s.column,
            expected: format!("{expected}, found {}", s.tok.describe()),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error(&tok.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.error(what)),
        }
    }

    fn term(&mut self, mode: TermMode) -> Result<Term> {
        let t = match self.peek().clone() {
            Tok::Ident(s) if mode == TermMode::Query && s.starts_with(|c: char| c.is_ascii_lowercase()) => Term::Var(s),
            Tok::Ident(s) | Tok::Number(s) | Tok::Quoted(s) => Term::Const(s),
            _ => return Err(self.error("a term")),
        };
        self.next();
        Ok(t)
    }

    fn atom_body(&mut self, mode: TermMode) -> Result<(String, Vec<Term>)> {
        let name = self.ident("a relation name")?;
        self.expect(Tok::LParen)?;
        let mut terms = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                terms.push(self.term(mode)?);
                match self.peek() {
                    Tok::Comma => {
                        self.next();
                    }
                    Tok::RParen => break,
                    _ => return Err(self.error(", or )")),
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok((name, terms))
    }

    fn literal(&mut self) -> Result<Atom> {
        let mut polarity = Polarity::Positive;
        if let Tok::Ident(s) = self.peek() {
            if s == "not" && matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Ident(_))) {
                self.next();
                polarity = Polarity::Negative;
            }
        }
        let (relation, terms) = self.atom_body(TermMode::Query)?;
        Ok(Atom { relation, terms, polarity })
    }

    fn rule(&mut self) -> Result<(String, CQNeg)> {
        let head = self.ident("a rule head such as q()")?;
        self.expect(Tok::LParen)?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::Turnstile)?;
        let mut atoms = vec![self.literal()?];
        loop {
            match self.peek() {
                Tok::Comma => {
                    self.next();
                    atoms.push(self.literal()?);
                }
                Tok::Dot => {
                    self.next();
                    break;
                }
                Tok::Semicolon => {
                    return Err(self.error("`,` or `.` (write a union as separate rules, not with `;`)"));
                }
                _ => return Err(self.error(", or .")),
            }
        }
        Ok((head, CQNeg::new(atoms)))
    }
}

fn violation_error(v: Violation) -> Error {
    match v {
        Violation::UnsafeVariable { var, .. } => Error::Unsafe { var },
        Violation::ArityMismatch { relation, expected, found } => Error::Arity { relation, expected, found },
        Violation::UnknownRelation { relation } => Error::UnknownRelation(relation),
        Violation::ProbabilityOutOfRange { probability, .. } => Error::BadProbability(probability.to_string()),
        other => Error::Invalid(vec![other]),
    }
}

/// Parse one or more rules sharing a head; several rules form a union.
pub fn parse_query(text: &str) -> Result<UCQNeg> {
    let mut p = Parser::new(text, 1)?;
    let mut disjuncts = Vec::new();
    let mut head: Option<String> = None;
    while *p.peek() != Tok::End {
        let (name, cq) = p.rule()?;
        match &head {
            Some(h) if *h != name => return Err(p.error(&format!("rules with the head {h}()"))),
            Some(_) => {}
            None => head = Some(name),
        }
        disjuncts.push(cq);
    }
    if disjuncts.is_empty() {
        return Err(p.error("a rule"));
    }
    let q = UCQNeg::new(disjuncts);
    if let Err(mut vs) = validate_query(&q, None) {
        return Err(violation_error(vs.remove(0)));
    }
    Ok(q)
}

/// Parse a query and check it against a schema.
pub fn parse_query_for(text: &str, schema: &Schema) -> Result<UCQNeg> {
    let q = parse_query(text)?;
    if let Err(mut vs) = validate_query(&q, Some(schema)) {
        return Err(violation_error(vs.remove(0)));
    }
    Ok(q)
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn schema_line(line_no: usize, line: &str) -> Result<RelationSym> {
    let mut p = Parser::new(line, line_no)?;
    let kw = p.ident("relation")?;
    if kw != "relation" {
        return Err(Error::Syntax { line: line_no, column: 1, expected: "relation".into() });
    }
    let name = p.ident("a relation name")?;
    if name.starts_with(RESERVED_PREFIX) {
        return Err(Error::ReservedName(name));
    }
    p.expect(Tok::Slash)?;
    let arity = match p.next() {
        Tok::Number(n) => n.parse::<usize>().map_err(|_| p.error("an arity"))?,
        _ => return Err(p.error("an arity")),
    };
    let mut exogenous_only = false;
    match p.peek().clone() {
        Tok::Ident(s) if s == "exogenous" => {
            p.next();
            exogenous_only = true;
        }
        Tok::End => {}
        _ => return Err(p.error("`exogenous` or end of line")),
    }
    p.expect(Tok::End)?;
    Ok(RelationSym::new(name, arity, exogenous_only))
}

pub fn parse_schema(text: &str) -> Result<Schema> {
    let mut schema = Schema::new();
    for (no, line) in lines(text) {
        let rel = schema_line(no, line)?;
        let name = rel.name.clone();
        if !schema.declare(rel) {
            return Err(Error::DuplicateRelation(name));
        }
    }
    Ok(schema)
}

/// Parse a fact written as `R(c1,...,ck)`; every term is a constant.
pub fn parse_fact(text: &str) -> Result<Fact> {
    let mut p = Parser::new(text, 1)?;
    let (relation, terms) = p.atom_body(TermMode::Fact)?;
    p.expect(Tok::End)?;
    let args = terms
        .into_iter()
        .map(|t| match t {
            Term::Const(c) | Term::Var(c) => c,
        })
        .collect();
    Ok(Fact { relation, args })
}

pub fn parse_facts(text: &str, schema: &Schema) -> Result<Database> {
    let mut listing = Vec::new();
    for (no, line) in lines(text) {
        let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim_start();
        let (info, fact_text) = match kw {
            "exo" => (FactInfo::exogenous(), rest),
            "endo" => (FactInfo::endogenous(), rest),
            "prob" => {
                let (p, fact_text) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                let p: Rational = p.parse().map_err(|_| Error::BadProbability(p.to_string()))?;
                if !p.in_unit_interval() {
                    return Err(Error::BadProbability(p.to_string()));
                }
                (FactInfo::probabilistic(p), fact_text.trim_start())
            }
            _ => {
                return Err(Error::Syntax { line: no, column: 1, expected: "exo, endo or prob".into() });
            }
        };
        let fact = parse_fact(fact_text).map_err(|e| match e {
            Error::Syntax { column, expected, .. } => {
                Error::Syntax { line: no, column: column + line.len() - fact_text.len(), expected }
            }
            other => other,
        })?;
        let mut info = info;
        if let (Some(rel), Some(p)) = (schema.get(&fact.relation), &info.probability) {
            // Deterministic relations accept only certain facts, which are exogenous.
            if rel.exogenous_only {
                if !p.is_one() {
                    return Err(Error::NotDeterministic {
                        relation: rel.name.clone(),
                        fact,
                        probability: p.to_string(),
                    });
                }
                info.provenance = Provenance::Exogenous;
            }
        }
        listing.push((fact, info));
    }
    if let Err(mut vs) = validate_fact_list(schema, &listing) {
        return Err(violation_error(vs.remove(0)));
    }
    let mut db = Database::new(schema.clone());
    for (f, i) in listing {
        db.insert(f, i);
    }
    Ok(db)
}

/// Render a database in the fact-file format, canonical order.
pub fn print_facts(db: &Database) -> String {
    let mut out = String::new();
    for (f, info) in db.iter() {
        match &info.probability {
            Some(p) if info.provenance == Provenance::Endogenous => out.push_str(&format!("prob {p} {f}\n")),
            _ => out.push_str(&format!("{} {f}\n", info.provenance.keyword())),
        }
    }
    out
}

pub fn print_schema(schema: &Schema) -> String {
    let mut out = String::new();
    for r in schema.relations() {
        out.push_str(&format!("relation {}/{}", r.name, r.arity));
        if r.exogenous_only {
            out.push_str(" exogenous");
        }
        out.push('\n');
    }
    out
}
