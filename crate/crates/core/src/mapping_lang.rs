//! The temporal schema mapping language: source and target schemas,
//! source-to-target temporal tgds, temporal key constraints and named unions
//! of conjunctive queries.
//!
//! ```text
//! # comments run to end of line
//! source Employee1(name, company, @time).
//! target Emp(name, position, company, @time).
//! rule Employee1(n, c, t) -> Emp(n, ?p, c, t), Sal(n, ?p, ?s, t).
//! key Emp(name, @time).
//! query q1(n, p, t) :- Emp(n, p, c, t), Sal(n, p, s, t).
//! ```
//!
//! `@` marks the temporal attribute, which is always last. `?x` marks an
//! existential variable of a rule head. Constants are single-quoted, with
//! `''` standing for a quote inside a constant. Query disjuncts sharing a name
//! form one union; body variables not in the head are existential.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Display};

use crate::error::ParseError;
use crate::model::{RelationSchema, Schema};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(symbol: impl Into<String>) -> Self {
        Term::Const(symbol.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

/// `R(terms..., time)` where `time` is always a variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub relation: String,
    pub terms: Vec<Term>,
    pub time: String,
}

impl Atom {
    pub fn new(relation: impl Into<String>, terms: Vec<Term>, time: impl Into<String>) -> Self {
        Atom {
            relation: relation.into(),
            terms,
            time: time.into(),
        }
    }

    /// Non-temporal variables in order of first occurrence.
    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(Term::as_var)
    }
}

/// Source-to-target temporal tgd `lhs -> exists existentials. rhs` with a
/// single temporal variable shared by every atom.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SttTgd {
    pub lhs: Vec<Atom>,
    pub rhs: Vec<Atom>,
    /// In order of first occurrence in `rhs`.
    pub existentials: Vec<String>,
}

impl SttTgd {
    pub fn temporal_variable(&self) -> Option<&str> {
        self.lhs.first().map(|a| a.time.as_str())
    }

    pub fn is_existential(&self, var: &str) -> bool {
        self.existentials.iter().any(|e| e == var)
    }
}

/// Temporal key constraint: the `key` attributes (the temporal attribute
/// last) determine every other attribute of `relation`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Tkc {
    pub relation: String,
    pub key: Vec<String>,
    /// Non-key attributes in schema order.
    pub dependents: Vec<String>,
}

impl Tkc {
    /// Positions of the non-temporal key attributes in `schema`.
    pub fn key_positions(&self, schema: &RelationSchema) -> Option<Vec<usize>> {
        self.key
            .iter()
            .filter(|a| **a != schema.time_attribute)
            .map(|a| schema.position(a))
            .collect()
    }

    pub fn dependent_positions(&self, schema: &RelationSchema) -> Option<Vec<usize>> {
        self.dependents.iter().map(|a| schema.position(a)).collect()
    }
}

/// One disjunct of a union of conjunctive queries.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cq {
    pub atoms: Vec<Atom>,
    /// Body variables absent from the head, in order of first occurrence.
    pub existentials: Vec<String>,
}

/// Named union of conjunctive queries over the target schema. The last head
/// variable is the temporal variable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Ucq {
    pub name: String,
    pub head: Vec<String>,
    pub disjuncts: Vec<Cq>,
}

impl Ucq {
    pub fn new(name: impl Into<String>, head: Vec<String>, bodies: Vec<Vec<Atom>>) -> Self {
        let disjuncts = bodies
            .into_iter()
            .map(|atoms| {
                let mut existentials = Vec::new();
                for v in atoms.iter().flat_map(Atom::variables) {
                    if !head.iter().any(|h| h == v) && !existentials.iter().any(|e| e == v) {
                        existentials.push(v.to_string());
                    }
                }
                Cq {
                    atoms,
                    existentials,
                }
            })
            .collect();
        Ucq {
            name: name.into(),
            head,
            disjuncts,
        }
    }

    /// Head variables without the trailing temporal variable.
    pub fn answer_variables(&self) -> &[String] {
        &self.head[..self.head.len().saturating_sub(1)]
    }

    pub fn temporal_variable(&self) -> Option<&str> {
        self.head.last().map(String::as_str)
    }
}

/// A temporal schema mapping together with the named queries posed over its
/// target schema.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Mapping {
    pub source: Vec<RelationSchema>,
    pub target: Vec<RelationSchema>,
    pub sttgds: Vec<SttTgd>,
    pub tkcs: Vec<Tkc>,
    pub queries: Vec<Ucq>,
}

impl Mapping {
    pub fn source_schema(&self) -> Schema {
        self.source.iter().collect()
    }

    pub fn target_schema(&self) -> Schema {
        self.target.iter().collect()
    }

    pub fn query(&self, name: &str) -> Option<&Ucq> {
        self.queries.iter().find(|q| q.name == name)
    }

    pub fn source_relation(&self, name: &str) -> Option<&RelationSchema> {
        self.source.iter().find(|r| r.name == name)
    }

    pub fn target_relation(&self, name: &str) -> Option<&RelationSchema> {
        self.target.iter().find(|r| r.name == name)
    }
}

// ---------------------------------------------------------------------------
// Validation

/// Where in a mapping a violation was found.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Site {
    Relation(String),
    Rule(usize),
    Key(usize),
    Query { name: String, disjunct: usize },
}

impl Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Relation(r) => write!(f, "relation {r}"),
            Site::Rule(i) => write!(f, "rule #{}", i + 1),
            Site::Key(i) => write!(f, "key #{}", i + 1),
            Site::Query { name, disjunct } => write!(f, "query {name} (disjunct {})", disjunct + 1),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum MappingViolationKind {
    DuplicateRelation,
    BadRelationSchema(String),
    UnknownRelation(String),
    WrongSchemaSide(String),
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    EmptyConjunction,
    MultipleTemporalVariables(Vec<String>),
    TemporalVariableAsValue(String),
    UnsafeVariable(String),
    ExistentialInBody(String),
    UnusedExistential(String),
    KeyUnknownAttribute(String),
    KeyMissingTemporal,
    KeyWithoutDependents,
    EmptyHead,
    DuplicateHeadVariable(String),
    HeadVariableMissing(String),
    HeadTemporalMismatch,
}

impl Display for MappingViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use MappingViolationKind::*;
        match self {
            DuplicateRelation => f.write_str("duplicate-relation"),
            BadRelationSchema(why) => write!(f, "bad-relation-schema: {why}"),
            UnknownRelation(r) => write!(f, "unknown-relation: {r}"),
            WrongSchemaSide(r) => write!(f, "wrong-schema-side: {r}"),
            ArityMismatch {
                relation,
                expected,
                found,
            } => write!(
                f,
                "arity-mismatch: {relation} takes {expected} non-temporal arguments, got {found}"
            ),
            EmptyConjunction => f.write_str("empty-conjunction"),
            MultipleTemporalVariables(vs) => {
                write!(f, "multiple-temporal-variables: {}", vs.join(", "))
            }
            TemporalVariableAsValue(v) => write!(f, "temporal-variable-as-value: {v}"),
            UnsafeVariable(v) => write!(f, "unsafe-variable: {v}"),
            ExistentialInBody(v) => write!(f, "existential-in-body: {v}"),
            UnusedExistential(v) => write!(f, "unused-existential: {v}"),
            KeyUnknownAttribute(a) => write!(f, "key-unknown-attribute: {a}"),
            KeyMissingTemporal => f.write_str("key-missing-temporal-attribute"),
            KeyWithoutDependents => f.write_str("key-without-dependents"),
            EmptyHead => f.write_str("empty-head"),
            DuplicateHeadVariable(v) => write!(f, "duplicate-head-variable: {v}"),
            HeadVariableMissing(v) => write!(f, "head-variable-missing: {v}"),
            HeadTemporalMismatch => f.write_str("head-temporal-mismatch"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MappingViolation {
    pub site: Site,
    pub kind: MappingViolationKind,
}

impl Display for MappingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.site, self.kind)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Source,
    Target,
}

struct Checker<'m> {
    source: BTreeMap<&'m str, &'m RelationSchema>,
    target: BTreeMap<&'m str, &'m RelationSchema>,
    out: Vec<MappingViolation>,
}

impl<'m> Checker<'m> {
    fn report(&mut self, site: &Site, kind: MappingViolationKind) {
        self.out.push(MappingViolation {
            site: site.clone(),
            kind,
        });
    }

    fn check_atoms(&mut self, site: &Site, atoms: &[Atom], side: Side) {
        if atoms.is_empty() {
            self.report(site, MappingViolationKind::EmptyConjunction);
        }
        for atom in atoms {
            let (own, other) = match side {
                Side::Source => (&self.source, &self.target),
                Side::Target => (&self.target, &self.source),
            };
            let kind = match (
                own.get(atom.relation.as_str()),
                other.contains_key(atom.relation.as_str()),
            ) {
                (Some(rel), _) if rel.arity() != atom.terms.len() => {
                    Some(MappingViolationKind::ArityMismatch {
                        relation: atom.relation.clone(),
                        expected: rel.arity(),
                        found: atom.terms.len(),
                    })
                }
                (Some(_), _) => None,
                (None, true) => Some(MappingViolationKind::WrongSchemaSide(atom.relation.clone())),
                (None, false) => Some(MappingViolationKind::UnknownRelation(atom.relation.clone())),
            };
            if let Some(kind) = kind {
                self.report(site, kind);
            }
        }
    }

    /// Single shared temporal variable, never used in a value position.
    fn check_temporal(&mut self, site: &Site, atoms: &[&Atom]) {
        let times: BTreeSet<&str> = atoms.iter().map(|a| a.time.as_str()).collect();
        if times.len() > 1 {
            self.report(
                site,
                MappingViolationKind::MultipleTemporalVariables(
                    times.iter().map(|s| s.to_string()).collect(),
                ),
            );
        }
        let misused: BTreeSet<&str> = atoms
            .iter()
            .flat_map(|a| a.variables())
            .filter(|v| times.contains(v))
            .collect();
        for v in misused {
            self.report(
                site,
                MappingViolationKind::TemporalVariableAsValue(v.to_string()),
            );
        }
    }
}

/// Every type-level invariant of a mapping. Empty iff the mapping is valid.
pub fn validate_mapping(m: &Mapping) -> Vec<MappingViolation> {
    let mut checker = Checker {
        source: BTreeMap::new(),
        target: BTreeMap::new(),
        out: Vec::new(),
    };

    for (rel, side) in m
        .source
        .iter()
        .map(|r| (r, Side::Source))
        .chain(m.target.iter().map(|r| (r, Side::Target)))
    {
        let site = Site::Relation(rel.name.clone());
        let taken = checker.source.contains_key(rel.name.as_str())
            || checker.target.contains_key(rel.name.as_str());
        if taken {
            checker.report(&site, MappingViolationKind::DuplicateRelation);
            continue;
        }
        let mut names = BTreeSet::new();
        for a in rel.attributes.iter().chain([&rel.time_attribute]) {
            if !names.insert(a) {
                checker.report(
                    &site,
                    MappingViolationKind::BadRelationSchema(format!("attribute {a} repeated")),
                );
            }
        }
        match side {
            Side::Source => checker.source.insert(&rel.name, rel),
            Side::Target => checker.target.insert(&rel.name, rel),
        };
    }

    for (i, rule) in m.sttgds.iter().enumerate() {
        let site = Site::Rule(i);
        checker.check_atoms(&site, &rule.lhs, Side::Source);
        checker.check_atoms(&site, &rule.rhs, Side::Target);
        let all: Vec<&Atom> = rule.lhs.iter().chain(&rule.rhs).collect();
        checker.check_temporal(&site, &all);

        let lhs_vars: BTreeSet<&str> = rule.lhs.iter().flat_map(Atom::variables).collect();
        let rhs_vars: BTreeSet<&str> = rule.rhs.iter().flat_map(Atom::variables).collect();
        for e in &rule.existentials {
            if lhs_vars.contains(e.as_str()) {
                checker.report(&site, MappingViolationKind::ExistentialInBody(e.clone()));
            }
            if !rhs_vars.contains(e.as_str()) {
                checker.report(&site, MappingViolationKind::UnusedExistential(e.clone()));
            }
        }
        for v in rhs_vars {
            if !lhs_vars.contains(v) && !rule.is_existential(v) {
                checker.report(&site, MappingViolationKind::UnsafeVariable(v.to_string()));
            }
        }
    }

    for (i, tkc) in m.tkcs.iter().enumerate() {
        let site = Site::Key(i);
        let rel = match (
            checker.target.get(tkc.relation.as_str()),
            checker.source.contains_key(tkc.relation.as_str()),
        ) {
            (Some(rel), _) => *rel,
            (None, true) => {
                checker.report(
                    &site,
                    MappingViolationKind::WrongSchemaSide(tkc.relation.clone()),
                );
                continue;
            }
            (None, false) => {
                checker.report(
                    &site,
                    MappingViolationKind::UnknownRelation(tkc.relation.clone()),
                );
                continue;
            }
        };
        if !tkc.key.contains(&rel.time_attribute) {
            checker.report(&site, MappingViolationKind::KeyMissingTemporal);
        }
        for a in tkc.key.iter().chain(&tkc.dependents) {
            if *a != rel.time_attribute && rel.position(a).is_none() {
                checker.report(&site, MappingViolationKind::KeyUnknownAttribute(a.clone()));
            }
        }
        let expected: Vec<&String> = rel
            .attributes
            .iter()
            .filter(|a| !tkc.key.contains(a))
            .collect();
        if tkc.dependents.is_empty() {
            checker.report(&site, MappingViolationKind::KeyWithoutDependents);
        } else if tkc.dependents.iter().collect::<Vec<_>>() != expected {
            checker.report(
                &site,
                MappingViolationKind::KeyUnknownAttribute(
                    "dependents must be exactly the non-key attributes".into(),
                ),
            );
        }
    }

    for q in &m.queries {
        for (d, cq) in q.disjuncts.iter().enumerate() {
            let site = Site::Query {
                name: q.name.clone(),
                disjunct: d,
            };
            checker.check_atoms(&site, &cq.atoms, Side::Target);
            let atoms: Vec<&Atom> = cq.atoms.iter().collect();
            checker.check_temporal(&site, &atoms);
            let Some(head_time) = q.temporal_variable() else {
                checker.report(&site, MappingViolationKind::EmptyHead);
                continue;
            };
            if cq.atoms.iter().any(|a| a.time != head_time) {
                checker.report(&site, MappingViolationKind::HeadTemporalMismatch);
            }
            let body_vars: BTreeSet<&str> = cq.atoms.iter().flat_map(Atom::variables).collect();
            let mut seen = BTreeSet::new();
            for v in q.answer_variables() {
                if !seen.insert(v) {
                    checker.report(
                        &site,
                        MappingViolationKind::DuplicateHeadVariable(v.clone()),
                    );
                }
                if !body_vars.contains(v.as_str()) {
                    checker.report(&site, MappingViolationKind::HeadVariableMissing(v.clone()));
                }
            }
        }
    }

    checker.out
}

// ---------------------------------------------------------------------------
// Rendering

fn quote(symbol: &str) -> String {
    format!("'{}'", symbol.replace('\'', "''"))
}

struct AtomDisplay<'a> {
    atom: &'a Atom,
    existentials: &'a [String],
}

impl Display for AtomDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.atom.relation)?;
        for term in &self.atom.terms {
            match term {
                Term::Var(v) if self.existentials.contains(v) => write!(f, "?{v}, ")?,
                Term::Var(v) => write!(f, "{v}, ")?,
                Term::Const(c) => write!(f, "{}, ", quote(c))?,
            }
        }
        write!(f, "{})", self.atom.time)
    }
}

impl Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        AtomDisplay {
            atom: self,
            existentials: &[],
        }
        .fmt(f)
    }
}

fn write_conjunction(
    f: &mut fmt::Formatter<'_>,
    atoms: &[Atom],
    existentials: &[String],
) -> fmt::Result {
    for (i, atom) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{}", AtomDisplay { atom, existentials })?;
    }
    Ok(())
}

impl Display for SttTgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("rule ")?;
        write_conjunction(f, &self.lhs, &[])?;
        f.write_str(" -> ")?;
        write_conjunction(f, &self.rhs, &self.existentials)?;
        f.write_str(".")
    }
}

impl Display for Tkc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "key {}(", self.relation)?;
        let n = self.key.len();
        for (i, a) in self.key.iter().enumerate() {
            if i + 1 == n {
                write!(f, "@{a}")?;
            } else {
                write!(f, "{a}, ")?;
            }
        }
        f.write_str(").")
    }
}

impl Display for Ucq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, cq) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "query {}({}) :- ", self.name, self.head.join(", "))?;
            write_conjunction(f, &cq.atoms, &[])?;
            f.write_str(".")?;
        }
        Ok(())
    }
}

/// Canonical text form; `parse_mapping` reads it back to an equal mapping.
impl Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.source {
            writeln!(f, "source {r}.")?;
        }
        for r in &self.target {
            writeln!(f, "target {r}.")?;
        }
        for rule in &self.sttgds {
            writeln!(f, "{rule}")?;
        }
        for tkc in &self.tkcs {
            writeln!(f, "{tkc}")?;
        }
        for q in &self.queries {
            writeln!(f, "{q}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Lexing and parsing

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    Quoted(String),
    At,
    Question,
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    Turnstile,
}

impl Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Quoted(s) => write!(f, "constant {}", quote(s)),
            Tok::At => f.write_str("`@`"),
            Tok::Question => f.write_str("`?`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Turnstile => f.write_str("`:-`"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Pos {
    line: usize,
    column: usize,
}

impl Pos {
    fn error(self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.column, message)
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let pos = Pos {
                line: line_idx + 1,
                column: i + 1,
            };
            let c = chars[i];
            let tok = match c {
                '#' => break,
                c if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                '@' => Tok::At,
                '?' => Tok::Question,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '-' if chars.get(i + 1) == Some(&'>') => {
                    i += 1;
                    Tok::Arrow
                }
                ':' if chars.get(i + 1) == Some(&'-') => {
                    i += 1;
                    Tok::Turnstile
                }
                '\'' => {
                    let mut symbol = String::new();
                    i += 1;
                    loop {
                        match chars.get(i) {
                            None => return Err(pos.error("unterminated constant")),
                            Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                                symbol.push('\'');
                                i += 2;
                            }
                            Some('\'') => break,
                            Some(&c) => {
                                symbol.push(c);
                                i += 1;
                            }
                        }
                    }
                    Tok::Quoted(symbol)
                }
                c if c.is_alphabetic() || c == '_' => {
                    let start = i;
                    while i + 1 < chars.len()
                        && (chars[i + 1].is_alphanumeric() || chars[i + 1] == '_')
                    {
                        i += 1;
                    }
                    Tok::Ident(chars[start..=i].iter().collect())
                }
                other => return Err(pos.error(format!("unexpected character `{other}`"))),
            };
            out.push((tok, pos));
            i += 1;
        }
    }
    Ok(out)
}

/// A term as written, before existential markers are resolved.
enum RawTerm {
    Var(String),
    Existential(String),
    Const(String),
}

struct RawAtom {
    relation: String,
    terms: Vec<RawTerm>,
    time: String,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map_or(self.end, |(_, p)| *p)
    }

    fn next(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.at).map(|(t, _)| t.clone());
        self.at += 1;
        tok
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(tok) => self.pos().error(format!("expected {wanted}, found {tok}")),
            None => self
                .pos()
                .error(format!("expected {wanted}, found end of input")),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => match self.next() {
                Some(Tok::Ident(s)) => Ok(s),
                _ => unreachable!(),
            },
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    /// `Name(a, b, @t)`
    fn relation_decl(&mut self) -> Result<RelationSchema, ParseError> {
        let name = self.ident()?;
        let (attributes, time_attribute) = self.attribute_list()?;
        Ok(RelationSchema {
            name,
            attributes,
            time_attribute,
        })
    }

    fn attribute_list(&mut self) -> Result<(Vec<String>, String), ParseError> {
        self.expect(Tok::LParen)?;
        let mut attributes = Vec::new();
        loop {
            if self.eat(&Tok::At) {
                let time = self.ident()?;
                if !self.eat(&Tok::RParen) {
                    return Err(self.pos().error("the temporal attribute must come last"));
                }
                return Ok((attributes, time));
            }
            attributes.push(self.ident()?);
            if !self.eat(&Tok::Comma) {
                return Err(if self.peek() == Some(&Tok::RParen) {
                    self.pos()
                        .error("missing temporal attribute (mark it with `@`)")
                } else {
                    self.unexpected("`,`")
                });
            }
        }
    }

    fn term(&mut self) -> Result<RawTerm, ParseError> {
        match self.next() {
            Some(Tok::Ident(v)) => Ok(RawTerm::Var(v)),
            Some(Tok::Quoted(c)) => Ok(RawTerm::Const(c)),
            Some(Tok::Question) => Ok(RawTerm::Existential(self.ident()?)),
            _ => {
                self.at -= 1;
                Err(self.unexpected("variable, `?variable` or quoted constant"))
            }
        }
    }

    fn atom(&mut self) -> Result<RawAtom, ParseError> {
        let relation = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut terms = Vec::new();
        let mut last_pos;
        loop {
            last_pos = self.pos();
            terms.push(self.term()?);
            if self.eat(&Tok::RParen) {
                break;
            }
            self.expect(Tok::Comma)?;
        }
        let time = match terms.pop() {
            Some(RawTerm::Var(v)) => v,
            Some(RawTerm::Const(_)) => {
                return Err(last_pos.error(
                    "temporal constants are not supported; the last argument must be a variable",
                ))
            }
            Some(RawTerm::Existential(v)) => {
                return Err(last_pos.error(format!("temporal variable `{v}` cannot be existential")))
            }
            None => unreachable!(),
        };
        Ok(RawAtom {
            relation,
            terms,
            time,
        })
    }

    fn conjunction(&mut self) -> Result<Vec<(RawAtom, Pos)>, ParseError> {
        let mut atoms = vec![(self.atom()?, self.pos())];
        while self.eat(&Tok::Comma) {
            let pos = self.pos();
            atoms.push((self.atom()?, pos));
        }
        Ok(atoms)
    }
}

fn plain_atoms(raw: Vec<(RawAtom, Pos)>) -> Result<Vec<Atom>, ParseError> {
    raw.into_iter()
        .map(|(atom, pos)| {
            let terms = atom
                .terms
                .into_iter()
                .map(|t| match t {
                    RawTerm::Var(v) => Ok(Term::Var(v)),
                    RawTerm::Const(c) => Ok(Term::Const(c)),
                    RawTerm::Existential(v) => Err(pos.error(format!(
                        "existential marker `?{v}` is only allowed on the right of a rule"
                    ))),
                })
                .collect::<Result<_, _>>()?;
            Ok(Atom {
                relation: atom.relation,
                terms,
                time: atom.time,
            })
        })
        .collect()
}

fn head_atoms(raw: Vec<(RawAtom, Pos)>) -> (Vec<Atom>, Vec<String>) {
    let mut existentials: Vec<String> = Vec::new();
    let atoms = raw
        .into_iter()
        .map(|(atom, _)| {
            let terms = atom
                .terms
                .into_iter()
                .map(|t| match t {
                    RawTerm::Var(v) => Term::Var(v),
                    RawTerm::Const(c) => Term::Const(c),
                    RawTerm::Existential(v) => {
                        if !existentials.contains(&v) {
                            existentials.push(v.clone());
                        }
                        Term::Var(v)
                    }
                })
                .collect();
            Atom {
                relation: atom.relation,
                terms,
                time: atom.time,
            }
        })
        .collect();
    (atoms, existentials)
}

/// Parse mapping text and validate the result. Every error, syntactic or
/// semantic, carries the location of the offending statement.
pub fn parse_mapping(text: &str) -> Result<Mapping, ParseError> {
    let toks = lex(text)?;
    let end = Pos {
        line: text.lines().count().max(1),
        column: text.lines().last().map_or(1, |l| l.chars().count() + 1),
    };
    let mut p = Parser { toks, at: 0, end };
    let mut m = Mapping::default();
    let mut sites: BTreeMap<Site, Pos> = BTreeMap::new();
    let mut raw_keys: Vec<(String, Vec<String>, Pos)> = Vec::new();

    while p.peek().is_some() {
        let pos = p.pos();
        let keyword = p.ident()?;
        match keyword.as_str() {
            "source" | "target" => {
                let rel = p.relation_decl()?;
                if sites.contains_key(&Site::Relation(rel.name.clone())) {
                    return Err(pos.error(format!("relation `{}` declared twice", rel.name)));
                }
                sites.insert(Site::Relation(rel.name.clone()), pos);
                if keyword == "source" {
                    m.source.push(rel);
                } else {
                    m.target.push(rel);
                }
            }
            "rule" => {
                let lhs = plain_atoms(p.conjunction()?)?;
                p.expect(Tok::Arrow)?;
                let (rhs, existentials) = head_atoms(p.conjunction()?);
                sites.insert(Site::Rule(m.sttgds.len()), pos);
                m.sttgds.push(SttTgd {
                    lhs,
                    rhs,
                    existentials,
                });
            }
            "key" => {
                let relation = p.ident()?;
                let (mut key, time) = p.attribute_list()?;
                key.push(time);
                raw_keys.push((relation, key, pos));
            }
            "query" => {
                let name = p.ident()?;
                p.expect(Tok::LParen)?;
                let mut head = vec![p.ident()?];
                while p.eat(&Tok::Comma) {
                    head.push(p.ident()?);
                }
                p.expect(Tok::RParen)?;
                p.expect(Tok::Turnstile)?;
                let body = plain_atoms(p.conjunction()?)?;
                let query = Ucq::new(name.clone(), head, vec![body]);
                match m.queries.iter_mut().find(|q| q.name == name) {
                    Some(existing) if existing.head != query.head => {
                        return Err(
                            pos.error(format!("query `{name}` redeclared with a different head"))
                        );
                    }
                    Some(existing) => {
                        sites.insert(
                            Site::Query {
                                name,
                                disjunct: existing.disjuncts.len(),
                            },
                            pos,
                        );
                        existing.disjuncts.extend(query.disjuncts);
                    }
                    None => {
                        if sites.contains_key(&Site::Relation(name.clone())) {
                            return Err(
                                pos.error(format!("query `{name}` clashes with a relation name"))
                            );
                        }
                        sites.insert(Site::Query { name, disjunct: 0 }, pos);
                        m.queries.push(query);
                    }
                }
            }
            other => {
                return Err(pos.error(format!(
                    "unknown statement `{other}` (expected source, target, rule, key or query)"
                )))
            }
        }
        p.expect(Tok::Dot)?;
    }

    for (relation, key, pos) in raw_keys {
        let dependents = match m.target_relation(&relation) {
            Some(rel) => rel
                .attributes
                .iter()
                .filter(|a| !key.contains(a))
                .cloned()
                .collect(),
            None => Vec::new(),
        };
        sites.insert(Site::Key(m.tkcs.len()), pos);
        m.tkcs.push(Tkc {
            relation,
            key,
            dependents,
        });
    }

    if let Some(v) = validate_mapping(&m).into_iter().next() {
        let pos = sites.get(&v.site).copied().unwrap_or(end);
        return Err(pos.error(v.to_string()));
    }
    Ok(m)
}
