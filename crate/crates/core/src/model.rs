//! Values, facts, schemas and instances in both views, the semantic mapping
//! from the concrete (interval) view to the abstract (point) view, and
//! instance normalization.
//!
//! A fact's timestamp type selects its view: [`ClopenInterval`] for concrete
//! facts and a bare tick for abstract ones. Both implement [`Stamp`], so the
//! chase, homomorphism search and query evaluation are written once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Debug, Display};
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::temporal::{build_grid, split_interval, ClopenInterval, Tick};

/// A constant, an interval-annotated null `N^[s,e)` or a point-annotated
/// null `N^t`. Two nulls are equal iff label and context are identical.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Value<T> {
    Constant(String),
    IntervalNull {
        label: String,
        context: ClopenInterval<T>,
    },
    PointNull {
        label: String,
        context: T,
    },
}

impl<T: Tick> Value<T> {
    pub fn constant(symbol: impl Into<String>) -> Self {
        Value::Constant(symbol.into())
    }

    pub fn interval_null(label: impl Into<String>, context: ClopenInterval<T>) -> Self {
        Value::IntervalNull {
            label: label.into(),
            context,
        }
    }

    pub fn point_null(label: impl Into<String>, context: T) -> Self {
        Value::PointNull {
            label: label.into(),
            context,
        }
    }

    pub fn is_null(&self) -> bool {
        !matches!(self, Value::Constant(_))
    }

    pub fn as_constant(&self) -> Option<&str> {
        match self {
            Value::Constant(c) => Some(c),
            _ => None,
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            Value::Constant(_) => None,
            Value::IntervalNull { label, .. } | Value::PointNull { label, .. } => Some(label),
        }
    }
}

impl<T: Display> Display for Value<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Constant(c) => f.write_str(c),
            Value::IntervalNull { label, context } => write!(f, "{label}^{context}"),
            Value::PointNull { label, context } => write!(f, "{label}^{context}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum InstanceKind {
    Concrete,
    Abstract,
}

impl Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceKind::Concrete => "concrete",
            InstanceKind::Abstract => "abstract",
        })
    }
}

/// The temporal component of a fact: an interval in the concrete view, a
/// time point in the abstract view.
pub trait Stamp: Copy + Ord + Hash + Debug + Display + Send + Sync + 'static {
    type Tick: Tick;

    const KIND: InstanceKind;

    /// A null with this stamp as its temporal context.
    fn annotate(self, label: String) -> Value<Self::Tick>;

    /// Whether `value` may occur in a fact stamped `self`.
    fn admits(self, value: &Value<Self::Tick>) -> std::result::Result<(), ViolationKind>;

    /// Largest finite endpoint mentioned by the stamp.
    fn max_finite_endpoint(self) -> Self::Tick;

    /// No time point belongs to both stamps.
    fn is_disjoint(self, other: Self) -> bool;
}

impl<T: Tick> Stamp for ClopenInterval<T> {
    type Tick = T;

    const KIND: InstanceKind = InstanceKind::Concrete;

    fn annotate(self, label: String) -> Value<T> {
        Value::IntervalNull {
            label,
            context: self,
        }
    }

    fn admits(self, value: &Value<T>) -> std::result::Result<(), ViolationKind> {
        match value {
            Value::Constant(_) => Ok(()),
            Value::IntervalNull { context, .. } if *context == self => Ok(()),
            Value::IntervalNull { .. } => Err(ViolationKind::ContextMismatch),
            Value::PointNull { .. } => Err(ViolationKind::KindViolation),
        }
    }

    fn max_finite_endpoint(self) -> T {
        ClopenInterval::max_finite_endpoint(&self)
    }

    fn is_disjoint(self, other: Self) -> bool {
        ClopenInterval::is_disjoint(&self, &other)
    }
}

impl<T: Tick> Stamp for T {
    type Tick = T;

    const KIND: InstanceKind = InstanceKind::Abstract;

    fn annotate(self, label: String) -> Value<T> {
        Value::PointNull {
            label,
            context: self,
        }
    }

    fn admits(self, value: &Value<T>) -> std::result::Result<(), ViolationKind> {
        match value {
            Value::Constant(_) => Ok(()),
            Value::PointNull { context, .. } if *context == self => Ok(()),
            Value::PointNull { .. } => Err(ViolationKind::ContextMismatch),
            Value::IntervalNull { .. } => Err(ViolationKind::KindViolation),
        }
    }

    fn max_finite_endpoint(self) -> T {
        self
    }

    fn is_disjoint(self, other: Self) -> bool {
        self != other
    }
}

/// A relation symbol with its non-temporal attributes and the name of its
/// single temporal attribute, which is always last.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RelationSchema {
    pub name: String,
    pub attributes: Vec<String>,
    pub time_attribute: String,
}

impl RelationSchema {
    pub fn new<I, A>(
        name: impl Into<String>,
        attributes: I,
        time_attribute: impl Into<String>,
    ) -> Self
    where
        I: IntoIterator<Item = A>,
        A: Into<String>,
    {
        RelationSchema {
            name: name.into(),
            attributes: attributes.into_iter().map(Into::into).collect(),
            time_attribute: time_attribute.into(),
        }
    }

    /// Number of non-temporal positions.
    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn position(&self, attribute: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == attribute)
    }
}

impl Display for RelationSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for a in &self.attributes {
            write!(f, "{a}, ")?;
        }
        write!(f, "@{})", self.time_attribute)
    }
}

/// Relation schemas keyed by name.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Schema(BTreeMap<String, RelationSchema>);

impl Schema {
    pub fn new() -> Self {
        Schema::default()
    }

    pub fn insert(&mut self, relation: RelationSchema) -> Option<RelationSchema> {
        self.0.insert(relation.name.clone(), relation)
    }

    pub fn get(&self, name: &str) -> Option<&RelationSchema> {
        self.0.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &RelationSchema> {
        self.0.values()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<RelationSchema> for Schema {
    fn from_iter<I: IntoIterator<Item = RelationSchema>>(iter: I) -> Self {
        Schema(iter.into_iter().map(|r| (r.name.clone(), r)).collect())
    }
}

impl<'a> FromIterator<&'a RelationSchema> for Schema {
    fn from_iter<I: IntoIterator<Item = &'a RelationSchema>>(iter: I) -> Self {
        iter.into_iter().cloned().collect()
    }
}

/// `R(values..., time)`. Facts order by relation name, then values, then
/// time, which is the canonical order of every instance.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Fact<S: Stamp> {
    pub relation: String,
    pub values: Vec<Value<S::Tick>>,
    pub time: S,
}

impl<S: Stamp> Fact<S> {
    pub fn new(relation: impl Into<String>, values: Vec<Value<S::Tick>>, time: S) -> Self {
        Fact {
            relation: relation.into(),
            values,
            time,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| !v.is_null())
    }

    pub fn nulls(&self) -> impl Iterator<Item = &Value<S::Tick>> {
        self.values.iter().filter(|v| v.is_null())
    }
}

impl<S: Stamp> Display for Fact<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for v in &self.values {
            write!(f, "{v}, ")?;
        }
        write!(f, "{})", self.time)
    }
}

pub type ConcreteFact<T> = Fact<ClopenInterval<T>>;
pub type AbstractFact<T> = Fact<T>;

/// A finite set of facts per relation symbol, in one view.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Instance<S: Stamp> {
    schema: Schema,
    relations: BTreeMap<String, BTreeSet<Fact<S>>>,
}

pub type ConcreteInstance<T> = Instance<ClopenInterval<T>>;
pub type AbstractInstance<T> = Instance<T>;

impl<S: Stamp> Instance<S> {
    pub fn new(schema: Schema) -> Self {
        Instance {
            schema,
            relations: BTreeMap::new(),
        }
    }

    pub fn from_facts(schema: Schema, facts: impl IntoIterator<Item = Fact<S>>) -> Self {
        let mut inst = Instance::new(schema);
        inst.extend(facts);
        inst
    }

    pub fn kind(&self) -> InstanceKind {
        S::KIND
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Returns `false` if the fact was already present.
    pub fn insert(&mut self, fact: Fact<S>) -> bool {
        self.relations
            .entry(fact.relation.clone())
            .or_default()
            .insert(fact)
    }

    pub fn contains(&self, fact: &Fact<S>) -> bool {
        self.relations
            .get(&fact.relation)
            .is_some_and(|facts| facts.contains(fact))
    }

    /// All facts in canonical order.
    pub fn facts(&self) -> impl Iterator<Item = &Fact<S>> {
        self.relations.values().flatten()
    }

    pub fn facts_of<'a>(&'a self, relation: &str) -> impl Iterator<Item = &'a Fact<S>> + 'a {
        self.relations.get(relation).into_iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.relations.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn relation_len(&self, relation: &str) -> usize {
        self.relations.get(relation).map_or(0, BTreeSet::len)
    }

    /// Every distinct stamp occurring in the instance, sorted.
    pub fn stamps(&self) -> BTreeSet<S> {
        self.facts().map(|f| f.time).collect()
    }

    /// Every distinct annotated null, sorted.
    pub fn nulls(&self) -> BTreeSet<&Value<S::Tick>> {
        self.facts().flat_map(Fact::nulls).collect()
    }

    pub fn max_finite_endpoint(&self) -> Option<S::Tick> {
        self.facts().map(|f| f.time.max_finite_endpoint()).max()
    }

    /// A copy with every value rewritten by `f`. Facts that become equal
    /// collapse.
    pub fn map_values(&self, mut f: impl FnMut(&Value<S::Tick>) -> Value<S::Tick>) -> Self {
        let facts = self.facts().map(|fact| Fact {
            relation: fact.relation.clone(),
            values: fact.values.iter().map(&mut f).collect(),
            time: fact.time,
        });
        Instance::from_facts(self.schema.clone(), facts.collect::<Vec<_>>())
    }
}

impl<S: Stamp> Extend<Fact<S>> for Instance<S> {
    fn extend<I: IntoIterator<Item = Fact<S>>>(&mut self, iter: I) {
        for fact in iter {
            self.insert(fact);
        }
    }
}

impl<S: Stamp> Display for Instance<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in self.facts() {
            writeln!(f, "{fact}")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ViolationKind {
    UnknownRelation,
    ArityMismatch {
        expected: usize,
        found: usize,
    },
    /// A null of the other view (a point null in a concrete fact or the
    /// reverse).
    KindViolation,
    /// A null whose context differs from the fact's timestamp.
    ContextMismatch,
}

impl Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::UnknownRelation => f.write_str("unknown-relation"),
            ViolationKind::ArityMismatch { expected, found } => {
                write!(f, "arity-mismatch (expected {expected}, found {found})")
            }
            ViolationKind::KindViolation => f.write_str("kind-violation"),
            ViolationKind::ContextMismatch => f.write_str("context-mismatch"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Violation {
    pub fact: String,
    pub kind: ViolationKind,
}

impl Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.fact, self.kind)
    }
}

/// Arity, view and context-coherence checks. An empty result means the
/// instance is well formed.
pub fn validate_instance<S: Stamp>(inst: &Instance<S>) -> Vec<Violation> {
    let mut violations = Vec::new();
    for fact in inst.facts() {
        let mut report = |kind| {
            violations.push(Violation {
                fact: fact.to_string(),
                kind,
            })
        };
        match inst.schema().get(&fact.relation) {
            None => report(ViolationKind::UnknownRelation),
            Some(rel) if rel.arity() != fact.values.len() => report(ViolationKind::ArityMismatch {
                expected: rel.arity(),
                found: fact.values.len(),
            }),
            Some(_) => {}
        }
        let mut seen = BTreeSet::new();
        for v in &fact.values {
            if let Err(kind) = fact.time.admits(v) {
                if seen.insert(kind.to_string()) {
                    report(kind);
                }
            }
        }
    }
    violations
}

/// True iff no fact contains an annotated null.
pub fn is_complete<S: Stamp>(inst: &Instance<S>) -> bool {
    inst.facts().all(Fact::is_complete)
}

fn check_horizon<T: Tick>(iv: &ClopenInterval<T>, horizon: T) -> Result<()> {
    let endpoint = iv.max_finite_endpoint();
    if horizon < endpoint {
        return Err(Error::InvalidHorizon {
            horizon: horizon.to_string(),
            endpoint: endpoint.to_string(),
        });
    }
    Ok(())
}

/// The abstract facts denoted by one concrete fact, truncated at `horizon`.
///
/// Each interval null `N^[s,e)` becomes `N^t` at every point `t`.
pub fn sem_fact<T: Tick>(fact: &ConcreteFact<T>, horizon: T) -> Result<Vec<AbstractFact<T>>> {
    check_horizon(&fact.time, horizon)?;
    for v in &fact.values {
        if let Value::IntervalNull { context, .. } = v {
            check_horizon(context, horizon)?;
        }
    }
    let facts = fact
        .time
        .points_below(horizon)
        .map(|t| Fact {
            relation: fact.relation.clone(),
            values: fact.values.iter().map(|v| point_value(v, t)).collect(),
            time: t,
        })
        .collect();
    Ok(facts)
}

fn point_value<T: Tick>(v: &Value<T>, t: T) -> Value<T> {
    match v {
        Value::IntervalNull { label, .. } => Value::PointNull {
            label: label.clone(),
            context: t,
        },
        other => other.clone(),
    }
}

/// The abstract view of a concrete instance, materialized below `horizon`.
pub fn sem_instance<T: Tick>(
    inst: &ConcreteInstance<T>,
    horizon: T,
) -> Result<AbstractInstance<T>> {
    let mut out = Instance::new(inst.schema().clone());
    for fact in inst.facts() {
        out.extend(sem_fact(fact, horizon)?);
    }
    Ok(out)
}

/// Whether every two intervals in the instance, across relations, are equal
/// or disjoint.
pub fn is_normalized<T: Tick>(inst: &ConcreteInstance<T>) -> bool {
    stamps_aligned(inst)
}

/// Every two distinct stamps are disjoint. Always true in the abstract view.
pub fn stamps_aligned<S: Stamp>(inst: &Instance<S>) -> bool {
    let stamps: Vec<_> = inst.stamps().into_iter().collect();
    // sorted by start, so an overlap always shows up between neighbours
    stamps.windows(2).all(|w| w[0].is_disjoint(w[1]))
}

/// Split every fact along the endpoint grid of the whole instance so that
/// all intervals become pairwise equal or disjoint.
///
/// An interval null in a split fact keeps its label and takes the
/// sub-interval as its new context, so the pieces carry distinct nulls.
pub fn normalize_instance<T: Tick>(inst: &ConcreteInstance<T>) -> ConcreteInstance<T> {
    let stamps = inst.stamps();
    let grid = build_grid(&stamps);
    let mut out = Instance::new(inst.schema().clone());
    for fact in inst.facts() {
        for piece in split_interval(&fact.time, &grid) {
            let values = fact
                .values
                .iter()
                .map(|v| match v {
                    Value::IntervalNull { label, .. } => Value::IntervalNull {
                        label: label.clone(),
                        context: piece,
                    },
                    other => other.clone(),
                })
                .collect();
            out.insert(Fact::new(fact.relation.clone(), values, piece));
        }
    }
    out
}
