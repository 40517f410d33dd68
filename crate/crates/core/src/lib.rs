//! Temporal data exchange over interval (concrete) and point (abstract)
//! instances.
//!
//! The modules are generic over the tick type of time points ([`Tick`]). The
//! aliases below fix it to `u64`, which is what the command-line tool uses.
//!
//! ```
//! use tdx_core::{chase_concrete, parse_mapping, ChaseOutcome, ConcreteInstance, Fact, Interval, Value};
//!
//! let m = parse_mapping(
//!     "source E(name, company, @t).\n\
//!      target W(name, company, boss, @t).\n\
//!      rule E(n, c, t) -> W(n, c, ?b, t).\n",
//! )
//! .unwrap();
//! let src = ConcreteInstance::from_facts(
//!     m.source_schema(),
//!     [Fact::new("E", vec![Value::constant("Ada"), Value::constant("IBM")], Interval::bounded(8, 11).unwrap())],
//! );
//! let ChaseOutcome::Success(j) = chase_concrete(&src, &m).unwrap() else { unreachable!() };
//! assert_eq!(j.to_string(), "W(Ada, IBM, N1^[8,11), [8,11))\n");
//! ```

pub mod chase;
pub mod chase_abstract;
pub mod chase_concrete;
pub mod closure;
pub mod error;
pub mod homomorphism;
pub mod json;
pub mod mapping_lang;
pub mod model;
pub mod query;
pub mod temporal;

#[cfg(test)]
pub(crate) mod fixtures;

pub use chase::{ChaseOutcome, NullFactory};
pub use chase_abstract::{
    chase_abstract, st_round_abstract, tkc_round_abstract, tkc_step_abstract,
};
pub use chase_concrete::{
    chase_concrete, st_round_concrete, st_step_concrete, tkc_round_concrete, tkc_step_concrete,
};
pub use closure::{Conflict, EqClosure, Equality};
pub use error::{Error, ParseError, Result};
pub use homomorphism::{enumerate_formula_homs, find_abstract_hom, hom_equivalent};
pub use mapping_lang::{parse_mapping, validate_mapping, Atom, Mapping, SttTgd, Term, Tkc, Ucq};
pub use model::{
    is_complete, is_normalized, normalize_instance, sem_fact, sem_instance, validate_instance,
    Fact, InstanceKind, RelationSchema, Schema, Stamp,
};
pub use query::{answers_sem, certain_abstract, certain_concrete, naive_eval, Certain};
pub use temporal::{build_grid, interval_contains, split_interval, Tick};

/// The default tick type.
pub type Time = u64;

pub type TimePoint = temporal::TimePoint<Time>;
pub type Interval = temporal::ClopenInterval<Time>;
pub type Value = model::Value<Time>;
pub type ConcreteFact = model::ConcreteFact<Time>;
pub type AbstractFact = model::AbstractFact<Time>;
pub type ConcreteInstance = model::ConcreteInstance<Time>;
pub type AbstractInstance = model::AbstractInstance<Time>;
pub type Binding<S> = homomorphism::Binding<S>;
pub type AbstractHom = homomorphism::AbstractHom<Time>;
pub type AnswerSet<S> = query::AnswerSet<S>;
pub type ConcreteAnswers = query::AnswerSet<Interval>;
pub type AbstractAnswers = query::AnswerSet<Time>;
pub type AnyInstance = json::AnyInstance<Time>;
