//! The chase in the concrete view, over normalized interval instances.

use crate::chase::{self, check_source, ChaseOutcome, NullFactory};
use crate::error::{Error, Result};
use crate::homomorphism::Binding;
use crate::mapping_lang::{Mapping, SttTgd, Tkc};
use crate::model::{
    is_normalized, normalize_instance, ConcreteFact, ConcreteInstance, Schema, Value,
};
use crate::temporal::{ClopenInterval, Tick};

pub type ConcreteOutcome<T> = ChaseOutcome<ClopenInterval<T>>;

fn require_normalized<T: Tick>(inst: &ConcreteInstance<T>) -> Result<()> {
    if !is_normalized(inst) {
        return Err(Error::Precondition(
            "instance is not normalized; run normalize_instance first".into(),
        ));
    }
    Ok(())
}

pub fn st_step_concrete<T: Tick>(
    inst: &ConcreteInstance<T>,
    rule: &SttTgd,
    h: &Binding<ClopenInterval<T>>,
    nulls: &mut NullFactory,
) -> Result<Vec<ConcreteFact<T>>> {
    chase::st_step(inst, rule, h, nulls)
}

/// The s-t round on a normalized, complete instance. Every output interval is
/// an interval of the input.
pub fn st_round_concrete<T: Tick>(
    inst: &ConcreteInstance<T>,
    m: &Mapping,
) -> Result<ConcreteInstance<T>> {
    require_normalized(inst)?;
    chase::st_round(inst, m, &mut NullFactory::new())
}

pub fn tkc_step_concrete<T: Tick>(
    u1: &ConcreteFact<T>,
    u2: &ConcreteFact<T>,
    k: &Tkc,
    schema: &Schema,
) -> Result<Vec<(Value<T>, Value<T>)>> {
    chase::tkc_step(u1, u2, k, schema)
}

pub fn tkc_round_concrete<T: Tick>(
    inst: &ConcreteInstance<T>,
    tkcs: &[Tkc],
) -> Result<ConcreteOutcome<T>> {
    require_normalized(inst)?;
    chase::tkc_round(inst, tkcs)
}

/// Normalize a complete source, run the s-t round, then the tkc round.
pub fn chase_concrete<T: Tick>(
    src: &ConcreteInstance<T>,
    m: &Mapping,
) -> Result<ConcreteOutcome<T>> {
    check_source(src, m)?;
    let target = st_round_concrete(&normalize_instance(src), m)?;
    tkc_round_concrete(&target, &m.tkcs)
}
