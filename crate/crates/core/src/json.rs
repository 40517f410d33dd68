//! JSON encoding of instances, answer sets and chase failures.
//!
//! ```json
//! {
//!   "kind": "concrete",
//!   "relations": {
//!     "Emp": {
//!       "attributes": ["name", "position", "company", "time"],
//!       "facts": [
//!         {"values": ["Ada", {"null": "N1"}, "Intel"], "interval": {"start": 11, "end": 13}}
//!       ]
//!     }
//!   }
//! }
//! ```
//!
//! The last attribute is the temporal one. Abstract facts carry `"time": t`
//! instead of `"interval"`. A null's context is implied by its fact; an
//! explicit `"context"` is accepted and must agree. An optional top-level
//! `"horizon"` records the bound used to materialize an abstract view.
//! Output is pretty-printed with sorted keys, facts in canonical order, and a
//! trailing newline.

use serde_json::{json, Map, Value as Json};

use crate::closure::Conflict;
use crate::error::{Error, Result};
use crate::model::{
    AbstractInstance, ConcreteInstance, Fact, Instance, InstanceKind, RelationSchema, Schema,
    Stamp, Value,
};
use crate::query::AnswerSet;
use crate::temporal::{ClopenInterval, Tick, TimePoint};

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn tick_to_json<T: Tick>(t: T) -> Result<Json> {
    t.to_u64()
        .map(Json::from)
        .ok_or_else(|| format_err(format!("time point {t} does not fit in 64 bits")))
}

fn tick_from_json<T: Tick>(v: &Json, what: &str) -> Result<T> {
    v.as_u64()
        .and_then(T::from)
        .ok_or_else(|| format_err(format!("{what} must be a non-negative integer, got {v}")))
}

/// Timestamp encodings of the two views.
pub trait JsonStamp: Stamp {
    const FIELD: &'static str;

    fn to_json(self) -> Result<Json>;

    fn from_json(v: &Json) -> Result<Self>;
}

impl<T: Tick> JsonStamp for ClopenInterval<T> {
    const FIELD: &'static str = "interval";

    fn to_json(self) -> Result<Json> {
        let end = match self.end() {
            TimePoint::Finite(e) => tick_to_json(e)?,
            TimePoint::Infinity => Json::from("inf"),
        };
        Ok(json!({"start": tick_to_json(self.start())?, "end": end}))
    }

    fn from_json(v: &Json) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| format_err(format!("interval must be an object, got {v}")))?;
        let start = tick_from_json(obj.get("start").unwrap_or(&Json::Null), "interval start")?;
        let end = match obj.get("end") {
            Some(Json::String(s)) if s == "inf" => TimePoint::Infinity,
            Some(e) => TimePoint::Finite(tick_from_json(e, "interval end")?),
            None => return Err(format_err("interval has no end")),
        };
        ClopenInterval::new(start, end).map_err(|e| format_err(e.to_string()))
    }
}

impl<T: Tick> JsonStamp for T {
    const FIELD: &'static str = "time";

    fn to_json(self) -> Result<Json> {
        tick_to_json(self)
    }

    fn from_json(v: &Json) -> Result<Self> {
        tick_from_json(v, "time")
    }
}

fn value_to_json<T: Tick>(v: &Value<T>) -> Json {
    match v {
        Value::Constant(c) => Json::from(c.as_str()),
        Value::IntervalNull { label, .. } | Value::PointNull { label, .. } => {
            json!({"null": label})
        }
    }
}

fn value_from_json<S: JsonStamp>(v: &Json, time: S) -> Result<Value<S::Tick>> {
    match v {
        Json::String(s) => Ok(Value::Constant(s.clone())),
        Json::Object(obj) => {
            let label = obj
                .get("null")
                .and_then(Json::as_str)
                .ok_or_else(|| format_err(format!("value {v} is neither a constant nor a null")))?;
            if let Some(ctx) = obj.get("context") {
                if S::from_json(ctx)? != time {
                    return Err(format_err(format!(
                        "null {label} has context {ctx}, but its fact is stamped {time}"
                    )));
                }
            }
            Ok(time.annotate(label.to_string()))
        }
        other => Err(format_err(format!(
            "value {other} must be a string constant or {{\"null\": label}}"
        ))),
    }
}

fn kind_name(kind: InstanceKind) -> &'static str {
    match kind {
        InstanceKind::Concrete => "concrete",
        InstanceKind::Abstract => "abstract",
    }
}

/// The document for `inst`, with an optional horizon annotation.
pub fn instance_to_json<S: JsonStamp>(
    inst: &Instance<S>,
    horizon: Option<S::Tick>,
) -> Result<Json> {
    let mut relations = Map::new();
    for rel in inst.schema().iter() {
        let mut attributes: Vec<Json> = rel
            .attributes
            .iter()
            .map(|a| Json::from(a.as_str()))
            .collect();
        attributes.push(Json::from(rel.time_attribute.as_str()));
        let facts = inst
            .facts_of(&rel.name)
            .map(|f| {
                let values: Vec<Json> = f.values.iter().map(value_to_json).collect();
                Ok(json!({"values": values, S::FIELD: f.time.to_json()?}))
            })
            .collect::<Result<Vec<_>>>()?;
        relations.insert(
            rel.name.clone(),
            json!({"attributes": attributes, "facts": facts}),
        );
    }
    for fact in inst.facts() {
        if !inst.schema().contains(&fact.relation) {
            return Err(Error::Schema(format!("fact {fact} has no relation schema")));
        }
    }
    let mut doc = json!({"kind": kind_name(S::KIND), "relations": relations});
    if let Some(h) = horizon {
        doc["horizon"] = tick_to_json(h)?;
    }
    Ok(doc)
}

/// Canonical text: sorted keys, two-space indent, trailing newline.
pub fn to_canonical_string(doc: &Json) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn write_instance<S: JsonStamp>(
    inst: &Instance<S>,
    horizon: Option<S::Tick>,
) -> Result<String> {
    Ok(to_canonical_string(&instance_to_json(inst, horizon)?))
}

/// An instance read from JSON, in whichever view the document declares.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AnyInstance<T: Tick> {
    Concrete(ConcreteInstance<T>),
    Abstract(AbstractInstance<T>),
}

impl<T: Tick> AnyInstance<T> {
    pub fn kind(&self) -> InstanceKind {
        match self {
            AnyInstance::Concrete(_) => InstanceKind::Concrete,
            AnyInstance::Abstract(_) => InstanceKind::Abstract,
        }
    }

    pub fn schema(&self) -> &Schema {
        match self {
            AnyInstance::Concrete(i) => i.schema(),
            AnyInstance::Abstract(i) => i.schema(),
        }
    }
}

/// A parsed document: the instance and its recorded horizon, if any.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Document<T: Tick> {
    pub instance: AnyInstance<T>,
    pub horizon: Option<T>,
}

fn relations_from_json<S: JsonStamp>(relations: &Map<String, Json>) -> Result<Instance<S>> {
    let mut schema = Schema::new();
    let mut facts = Vec::new();
    for (name, body) in relations {
        let attrs = body
            .get("attributes")
            .and_then(Json::as_array)
            .ok_or_else(|| format_err(format!("relation {name} needs an \"attributes\" array")))?;
        let mut attrs: Vec<String> = attrs
            .iter()
            .map(|a| {
                a.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| format_err(format!("attribute names of {name} must be strings")))
            })
            .collect::<Result<_>>()?;
        let time_attribute = attrs
            .pop()
            .ok_or_else(|| format_err(format!("relation {name} needs a temporal attribute")))?;
        let rel = RelationSchema {
            name: name.clone(),
            attributes: attrs,
            time_attribute,
        };
        let rows = match body.get("facts") {
            None => &[][..],
            Some(Json::Array(rows)) => rows.as_slice(),
            Some(_) => return Err(format_err(format!("facts of {name} must be an array"))),
        };
        for (i, row) in rows.iter().enumerate() {
            let at = || format!("{name} fact #{}", i + 1);
            let time = S::from_json(
                row.get(S::FIELD)
                    .ok_or_else(|| format_err(format!("{} has no \"{}\"", at(), S::FIELD)))?,
            )
            .map_err(|e| format_err(format!("{}: {e}", at())))?;
            let values = row
                .get("values")
                .and_then(Json::as_array)
                .ok_or_else(|| format_err(format!("{} has no \"values\" array", at())))?;
            if values.len() != rel.arity() {
                return Err(format_err(format!(
                    "{} has {} values, relation has {} non-temporal attributes",
                    at(),
                    values.len(),
                    rel.arity()
                )));
            }
            let values = values
                .iter()
                .map(|v| value_from_json(v, time))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| format_err(format!("{}: {e}", at())))?;
            facts.push(Fact::new(name.clone(), values, time));
        }
        schema.insert(rel);
    }
    Ok(Instance::from_facts(schema, facts))
}

pub fn parse_document<T: Tick>(text: &str) -> Result<Document<T>> {
    let doc: Json = serde_json::from_str(text).map_err(|e| format_err(e.to_string()))?;
    let kind = doc
        .get("kind")
        .and_then(Json::as_str)
        .ok_or_else(|| format_err("document needs \"kind\": \"concrete\" or \"abstract\""))?;
    let relations = match doc.get("relations") {
        Some(Json::Object(r)) => r,
        None => return Err(format_err("document needs a \"relations\" object")),
        Some(_) => return Err(format_err("\"relations\" must be an object")),
    };
    let horizon = doc
        .get("horizon")
        .map(|h| tick_from_json(h, "horizon"))
        .transpose()?;
    let instance = match kind {
        "concrete" => AnyInstance::Concrete(relations_from_json(relations)?),
        "abstract" => AnyInstance::Abstract(relations_from_json(relations)?),
        other => return Err(format_err(format!("unknown kind {other:?}"))),
    };
    Ok(Document { instance, horizon })
}

pub fn parse_concrete<T: Tick>(text: &str) -> Result<ConcreteInstance<T>> {
    match parse_document(text)?.instance {
        AnyInstance::Concrete(i) => Ok(i),
        AnyInstance::Abstract(_) => Err(format_err("expected a concrete instance")),
    }
}

pub fn parse_abstract<T: Tick>(text: &str) -> Result<AbstractInstance<T>> {
    match parse_document(text)?.instance {
        AnyInstance::Abstract(i) => Ok(i),
        AnyInstance::Concrete(_) => Err(format_err("expected an abstract instance")),
    }
}

/// `{"failure": {"constants": [c1, c2], "trace": [{"left", "right"}...]}}`
pub fn failure_to_json(c: &Conflict) -> Json {
    let trace: Vec<Json> = c
        .trace
        .iter()
        .map(|eq| json!({"left": eq.left, "right": eq.right}))
        .collect();
    json!({"failure": {"constants": c.constants, "trace": trace}})
}

/// Answers as a one-relation instance named after the query. The head
/// variables become the attribute names.
pub fn answers_to_json<S: JsonStamp>(name: &str, ans: &AnswerSet<S>) -> Result<Json> {
    let (time_var, vars) = ans
        .head
        .split_last()
        .ok_or_else(|| Error::InvalidArgument("answer set has an empty head".into()))?;
    let rel = RelationSchema::new(name, vars.iter().cloned(), time_var.clone());
    let facts = ans.iter().map(|a| {
        Fact::new(
            name,
            a.values
                .iter()
                .map(|v| Value::Constant(v.clone()))
                .collect(),
            a.time,
        )
    });
    let inst = Instance::from_facts([rel].into_iter().collect(), facts.collect::<Vec<_>>());
    instance_to_json(&inst, None)
}
