//! The two-round chase, written once over [`Stamp`] and specialized by the
//! `chase_concrete` and `chase_abstract` modules.
//!
//! The s-t round fires every rule on every lhs binding in parallel, giving
//! each existential variable a fresh null annotated with the binding's
//! stamp. The tkc round collects an equality per dependent position of every
//! pair of facts that agree on a key, closes them, and either fails on two
//! distinct constants or replaces every null by its class representative.

use std::collections::BTreeMap;
use std::fmt::{self, Display};

use crate::closure::{Conflict, EqClosure};
use crate::error::{Error, Result};
use crate::homomorphism::{enumerate_formula_homs, Binding};
use crate::mapping_lang::{Mapping, SttTgd, Tkc};
use crate::model::{is_complete, validate_instance, Fact, Instance, Schema, Stamp, Value};

/// Deterministic source of fresh null labels `N1`, `N2`, ...
#[derive(Clone, Debug)]
pub struct NullFactory {
    prefix: String,
    next: u64,
}

impl Default for NullFactory {
    fn default() -> Self {
        NullFactory::with_prefix("N")
    }
}

impl NullFactory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_prefix(prefix: impl Into<String>) -> Self {
        NullFactory {
            prefix: prefix.into(),
            next: 1,
        }
    }

    pub fn fresh(&mut self) -> String {
        let label = format!("{}{}", self.prefix, self.next);
        self.next += 1;
        label
    }
}

/// Result of a tkc round or of a whole chase.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ChaseOutcome<S: Stamp> {
    Success(Instance<S>),
    Failure(Conflict),
}

impl<S: Stamp> ChaseOutcome<S> {
    pub fn success(self) -> Option<Instance<S>> {
        match self {
            ChaseOutcome::Success(inst) => Some(inst),
            ChaseOutcome::Failure(_) => None,
        }
    }

    pub fn failure(&self) -> Option<&Conflict> {
        match self {
            ChaseOutcome::Success(_) => None,
            ChaseOutcome::Failure(c) => Some(c),
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, ChaseOutcome::Failure(_))
    }
}

impl<S: Stamp> Display for ChaseOutcome<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChaseOutcome::Success(inst) => inst.fmt(f),
            ChaseOutcome::Failure(c) => write!(f, "failure: {c}"),
        }
    }
}

/// One s-t step: extend `h` with a fresh null per existential variable and
/// instantiate the rhs.
pub fn st_step<S: Stamp>(
    inst: &Instance<S>,
    rule: &SttTgd,
    h: &Binding<S>,
    nulls: &mut NullFactory,
) -> Result<Vec<Fact<S>>> {
    for atom in &rule.lhs {
        let fact = h.instantiate(atom)?;
        if !inst.contains(&fact) {
            return Err(Error::InvalidArgument(format!(
                "binding {h} does not map {atom} into the instance"
            )));
        }
    }
    let mut extended = h.clone();
    for var in &rule.existentials {
        extended
            .vars
            .insert(var.clone(), h.time.annotate(nulls.fresh()));
    }
    rule.rhs
        .iter()
        .map(|atom| extended.instantiate(atom))
        .collect()
}

/// Union of every s-t step, over the target schema of `m`. Rules fire in
/// file order and bindings in sorted order, so null labels are reproducible.
pub fn st_round<S: Stamp>(
    inst: &Instance<S>,
    m: &Mapping,
    nulls: &mut NullFactory,
) -> Result<Instance<S>> {
    if !is_complete(inst) {
        return Err(Error::Precondition(
            "the s-t round needs a complete source instance".into(),
        ));
    }
    let mut out = Instance::new(m.target_schema());
    for rule in &m.sttgds {
        for h in enumerate_formula_homs(&rule.lhs, inst)? {
            out.extend(st_step(inst, rule, &h, nulls)?);
        }
    }
    Ok(out)
}

struct KeyLayout {
    key: Vec<usize>,
    dependents: Vec<usize>,
}

fn layout(schema: &Schema, k: &Tkc) -> Result<KeyLayout> {
    let rel = schema
        .get(&k.relation)
        .ok_or_else(|| Error::Schema(format!("key on unknown relation {}", k.relation)))?;
    let key = k
        .key_positions(rel)
        .ok_or_else(|| Error::Schema(format!("key attribute missing from {}", k.relation)))?;
    let dependents = k
        .dependent_positions(rel)
        .ok_or_else(|| Error::Schema(format!("dependent attribute missing from {}", k.relation)))?;
    Ok(KeyLayout { key, dependents })
}

fn check_key_nulls<S: Stamp>(fact: &Fact<S>, layout: &KeyLayout) -> Result<()> {
    if layout.key.iter().any(|&i| fact.values[i].is_null()) {
        return Err(Error::KeyNull {
            relation: fact.relation.clone(),
            fact: fact.to_string(),
        });
    }
    Ok(())
}

/// Pairs of values forced equal, left from the first fact.
pub type Equalities<T> = Vec<(Value<T>, Value<T>)>;

fn step_with<S: Stamp>(u1: &Fact<S>, u2: &Fact<S>, layout: &KeyLayout) -> Equalities<S::Tick> {
    layout
        .dependents
        .iter()
        .filter(|&&i| u1.values[i] != u2.values[i])
        .map(|&i| (u1.values[i].clone(), u2.values[i].clone()))
        .collect()
}

/// Equalities forced by one key on one conflicting pair of facts.
pub fn tkc_step<S: Stamp>(
    u1: &Fact<S>,
    u2: &Fact<S>,
    k: &Tkc,
    schema: &Schema,
) -> Result<Equalities<S::Tick>> {
    let layout = layout(schema, k)?;
    for u in [u1, u2] {
        if u.relation != k.relation {
            return Err(Error::InvalidArgument(format!(
                "{u} is not a {} fact",
                k.relation
            )));
        }
        if u.values.len() != schema.get(&k.relation).map_or(0, |r| r.arity()) {
            return Err(Error::Schema(format!("{u} has the wrong arity")));
        }
        check_key_nulls(u, &layout)?;
    }
    let same_key = u1.time == u2.time && layout.key.iter().all(|&i| u1.values[i] == u2.values[i]);
    if !same_key || u1 == u2 {
        return Err(Error::InvalidArgument(format!(
            "{u1} and {u2} do not conflict on the key of {}",
            k.relation
        )));
    }
    Ok(step_with(u1, u2, &layout))
}

/// Every equality produced by a tkc round, in canonical order.
pub fn tkc_equalities<S: Stamp>(inst: &Instance<S>, tkcs: &[Tkc]) -> Result<Equalities<S::Tick>> {
    let mut out = Vec::new();
    for k in tkcs {
        let layout = layout(inst.schema(), k)?;
        let mut groups: BTreeMap<_, Vec<&Fact<S>>> = BTreeMap::new();
        for fact in inst.facts_of(&k.relation) {
            check_key_nulls(fact, &layout)?;
            let key: Vec<_> = layout.key.iter().map(|&i| &fact.values[i]).collect();
            groups.entry((fact.time, key)).or_default().push(fact);
        }
        for group in groups.values() {
            for (i, u1) in group.iter().enumerate() {
                for u2 in &group[i + 1..] {
                    out.extend(step_with(u1, u2, &layout));
                }
            }
        }
    }
    Ok(out)
}

/// Close every tkc equality; fail on two distinct constants, otherwise
/// replace each null by its representative, all at once.
pub fn tkc_round<S: Stamp>(inst: &Instance<S>, tkcs: &[Tkc]) -> Result<ChaseOutcome<S>> {
    let mut closure = EqClosure::new();
    for (a, b) in tkc_equalities(inst, tkcs)? {
        closure.add(&a, &b)?;
    }
    if let Some(conflict) = closure.conflict() {
        return Ok(ChaseOutcome::Failure(conflict));
    }
    let reps = closure.representatives();
    Ok(ChaseOutcome::Success(inst.map_values(|v| {
        reps.get(v).cloned().unwrap_or_else(|| v.clone())
    })))
}

/// Source checks shared by both chases: conforms to the source schema and
/// holds no nulls.
pub(crate) fn check_source<S: Stamp>(src: &Instance<S>, m: &Mapping) -> Result<()> {
    let source = m.source_schema();
    for fact in src.facts() {
        if !source.contains(&fact.relation) {
            return Err(Error::Schema(format!(
                "{} is not a source relation of the mapping",
                fact.relation
            )));
        }
    }
    if let Some(v) = validate_instance(&Instance::from_facts(source, src.facts().cloned())).first()
    {
        return Err(Error::Schema(v.to_string()));
    }
    if !is_complete(src) {
        return Err(Error::Precondition(
            "source instances must be complete".into(),
        ));
    }
    Ok(())
}
