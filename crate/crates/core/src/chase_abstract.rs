//! The chase in the abstract view, over finite point instances. Infinite
//! abstract views are reached only through `sem_instance` with a horizon.

use crate::chase::{self, check_source, ChaseOutcome, NullFactory};
use crate::error::Result;
use crate::homomorphism::Binding;
use crate::mapping_lang::{Mapping, SttTgd, Tkc};
use crate::model::{AbstractFact, AbstractInstance, Schema, Value};
use crate::temporal::Tick;

pub type AbstractOutcome<T> = ChaseOutcome<T>;

pub fn st_step_abstract<T: Tick>(
    inst: &AbstractInstance<T>,
    rule: &SttTgd,
    h: &Binding<T>,
    nulls: &mut NullFactory,
) -> Result<Vec<AbstractFact<T>>> {
    chase::st_step(inst, rule, h, nulls)
}

pub fn st_round_abstract<T: Tick>(
    inst: &AbstractInstance<T>,
    m: &Mapping,
) -> Result<AbstractInstance<T>> {
    chase::st_round(inst, m, &mut NullFactory::new())
}

pub fn tkc_step_abstract<T: Tick>(
    w1: &AbstractFact<T>,
    w2: &AbstractFact<T>,
    k: &Tkc,
    schema: &Schema,
) -> Result<Vec<(Value<T>, Value<T>)>> {
    chase::tkc_step(w1, w2, k, schema)
}

pub fn tkc_round_abstract<T: Tick>(
    inst: &AbstractInstance<T>,
    tkcs: &[Tkc],
) -> Result<AbstractOutcome<T>> {
    chase::tkc_round(inst, tkcs)
}

pub fn chase_abstract<T: Tick>(
    src: &AbstractInstance<T>,
    m: &Mapping,
) -> Result<AbstractOutcome<T>> {
    check_source(src, m)?;
    let target = st_round_abstract(src, m)?;
    tkc_round_abstract(&target, &m.tkcs)
}
