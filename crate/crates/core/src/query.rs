//! Naive evaluation of unions of conjunctive queries and certain answers
//! through the chase.
//!
//! Nulls behave as fresh constants during evaluation: a null only ever
//! matches itself, so joins through a null succeed only on that same null.
//! Answers still holding a null are dropped at the end.

use std::collections::BTreeSet;
use std::fmt::{self, Display};

use crate::chase::ChaseOutcome;
use crate::chase_abstract::chase_abstract;
use crate::chase_concrete::chase_concrete;
use crate::closure::Conflict;
use crate::error::{Error, Result};
use crate::homomorphism::enumerate_formula_homs;
use crate::mapping_lang::{Mapping, Ucq};
use crate::model::{stamps_aligned, AbstractInstance, ConcreteInstance, Instance, Stamp, Value};
use crate::temporal::{ClopenInterval, Tick};

/// One complete answer: a constant per answer variable, plus its time.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Answer<S> {
    pub values: Vec<String>,
    pub time: S,
}

impl<S: Display> Display for Answer<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for v in &self.values {
            write!(f, "{v}, ")?;
        }
        write!(f, "{})", self.time)
    }
}

/// Answers to a query, sorted. `head` names the answer variables followed by
/// the temporal variable.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AnswerSet<S> {
    pub head: Vec<String>,
    pub tuples: BTreeSet<Answer<S>>,
}

impl<S: Ord> AnswerSet<S> {
    pub fn new(head: Vec<String>) -> Self {
        AnswerSet {
            head,
            tuples: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Answer<S>> {
        self.tuples.iter()
    }
}

impl<S: Display> Display for AnswerSet<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.tuples {
            writeln!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Certain answers, or the report that the exchange has no solution.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Certain<S> {
    Answers(AnswerSet<S>),
    NoSolution(Conflict),
}

impl<S> Certain<S> {
    pub fn answers(self) -> Option<AnswerSet<S>> {
        match self {
            Certain::Answers(a) => Some(a),
            Certain::NoSolution(_) => None,
        }
    }
}

/// Evaluate `q` on `inst`, keeping only null-free answers. A concrete
/// instance must be normalized.
pub fn naive_eval<S: Stamp>(q: &Ucq, inst: &Instance<S>) -> Result<AnswerSet<S>> {
    if !stamps_aligned(inst) {
        return Err(Error::Precondition(
            "naive evaluation needs a normalized instance".into(),
        ));
    }
    let mut out = AnswerSet::new(q.head.clone());
    for cq in &q.disjuncts {
        for h in enumerate_formula_homs(&cq.atoms, inst)? {
            let mut values = Vec::with_capacity(q.answer_variables().len());
            for var in q.answer_variables() {
                match h.get(var) {
                    Some(Value::Constant(c)) => values.push(c.clone()),
                    Some(_) => break,
                    None => {
                        return Err(Error::InvalidArgument(format!(
                            "head variable {var} of {} does not occur in its body",
                            q.name
                        )))
                    }
                }
            }
            if values.len() == q.answer_variables().len() {
                out.tuples.insert(Answer {
                    values,
                    time: h.time,
                });
            }
        }
    }
    Ok(out)
}

/// Expand concrete answers to one answer per time point below `horizon`.
pub fn answers_sem<T: Tick>(
    ans: &AnswerSet<ClopenInterval<T>>,
    horizon: T,
) -> Result<AnswerSet<T>> {
    let mut out = AnswerSet::new(ans.head.clone());
    for a in &ans.tuples {
        let endpoint = a.time.max_finite_endpoint();
        if horizon < endpoint {
            return Err(Error::InvalidHorizon {
                horizon: horizon.to_string(),
                endpoint: endpoint.to_string(),
            });
        }
        for t in a.time.points_below(horizon) {
            out.tuples.insert(Answer {
                values: a.values.clone(),
                time: t,
            });
        }
    }
    Ok(out)
}

fn certain<S: Stamp>(q: &Ucq, outcome: ChaseOutcome<S>) -> Result<Certain<S>> {
    match outcome {
        ChaseOutcome::Success(j) => Ok(Certain::Answers(naive_eval(q, &j)?)),
        ChaseOutcome::Failure(c) => Ok(Certain::NoSolution(c)),
    }
}

pub fn certain_concrete<T: Tick>(
    q: &Ucq,
    src: &ConcreteInstance<T>,
    m: &Mapping,
) -> Result<Certain<ClopenInterval<T>>> {
    certain(q, chase_concrete(src, m)?)
}

pub fn certain_abstract<T: Tick>(
    q: &Ucq,
    src: &AbstractInstance<T>,
    m: &Mapping,
) -> Result<Certain<T>> {
    certain(q, chase_abstract(src, m)?)
}
