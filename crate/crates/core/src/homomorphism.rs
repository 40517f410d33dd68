//! Formula homomorphisms (bindings of a conjunction's variables into an
//! instance) and abstract homomorphisms between abstract instances.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Display};

use crate::error::{Error, Result};
use crate::mapping_lang::{Atom, Term};
use crate::model::{AbstractFact, AbstractInstance, Fact, Instance, Stamp, Value};
use crate::temporal::Tick;

/// Values for the non-temporal variables of a conjunction plus the stamp
/// bound to its temporal variable. Orders by bound values, then time.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Binding<S: Stamp> {
    pub vars: BTreeMap<String, Value<S::Tick>>,
    pub time: S,
}

impl<S: Stamp> Binding<S> {
    pub fn get(&self, var: &str) -> Option<&Value<S::Tick>> {
        self.vars.get(var)
    }

    /// Instantiate `atom`. Unbound variables are an error.
    pub fn instantiate(&self, atom: &Atom) -> Result<Fact<S>> {
        let values = atom
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => Ok(Value::Constant(c.clone())),
                Term::Var(v) => self
                    .vars
                    .get(v)
                    .cloned()
                    .ok_or_else(|| Error::InvalidArgument(format!("variable {v} is unbound"))),
            })
            .collect::<Result<_>>()?;
        Ok(Fact::new(atom.relation.clone(), values, self.time))
    }
}

impl<S: Stamp> Display for Binding<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (v, val) in &self.vars {
            write!(f, "{v}->{val}, ")?;
        }
        write!(f, "@{}}}", self.time)
    }
}

fn check_atoms<S: Stamp>(atoms: &[Atom], inst: &Instance<S>) -> Result<()> {
    for atom in atoms {
        let rel = inst
            .schema()
            .get(&atom.relation)
            .ok_or_else(|| Error::Schema(format!("unknown relation {}", atom.relation)))?;
        if rel.arity() != atom.terms.len() {
            return Err(Error::Schema(format!(
                "{} has {} non-temporal attributes, atom has {}",
                atom.relation,
                rel.arity(),
                atom.terms.len()
            )));
        }
    }
    Ok(())
}

/// Every binding under which each atom becomes a fact of `inst`, sorted.
///
/// All atoms share one temporal variable, so on a concrete instance a join
/// only succeeds between facts carrying the same interval.
pub fn enumerate_formula_homs<S: Stamp>(
    atoms: &[Atom],
    inst: &Instance<S>,
) -> Result<Vec<Binding<S>>> {
    check_atoms(atoms, inst)?;
    if atoms.is_empty() {
        return Ok(Vec::new());
    }
    // per atom: facts grouped by stamp
    let indexes: Vec<BTreeMap<S, Vec<&Fact<S>>>> = atoms
        .iter()
        .map(|a| {
            let mut by_time: BTreeMap<S, Vec<&Fact<S>>> = BTreeMap::new();
            for f in inst.facts_of(&a.relation) {
                by_time.entry(f.time).or_default().push(f);
            }
            by_time
        })
        .collect();

    let times: BTreeSet<S> = indexes[0].keys().copied().collect();
    let mut out = Vec::new();
    let mut vars = BTreeMap::new();
    for time in times {
        if indexes.iter().any(|ix| !ix.contains_key(&time)) {
            continue;
        }
        let candidates: Vec<&[&Fact<S>]> = indexes.iter().map(|ix| ix[&time].as_slice()).collect();
        join(atoms, &candidates, 0, time, &mut vars, &mut out);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn join<S: Stamp>(
    atoms: &[Atom],
    candidates: &[&[&Fact<S>]],
    depth: usize,
    time: S,
    vars: &mut BTreeMap<String, Value<S::Tick>>,
    out: &mut Vec<Binding<S>>,
) {
    if depth == atoms.len() {
        out.push(Binding {
            vars: vars.clone(),
            time,
        });
        return;
    }
    let atom = &atoms[depth];
    for fact in candidates[depth] {
        let mut fresh = Vec::new();
        let ok = atom
            .terms
            .iter()
            .zip(&fact.values)
            .all(|(term, value)| match term {
                Term::Const(c) => value.as_constant() == Some(c.as_str()),
                Term::Var(v) => match vars.get(v) {
                    Some(bound) => bound == value,
                    None => {
                        vars.insert(v.clone(), value.clone());
                        fresh.push(v.clone());
                        true
                    }
                },
            });
        if ok {
            join(atoms, candidates, depth + 1, time, vars, out);
        }
        for v in fresh {
            vars.remove(&v);
        }
    }
}

/// A map from the point nulls of one abstract instance to values of
/// another. Constants and time points are fixed and not stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AbstractHom<T> {
    map: BTreeMap<Value<T>, Value<T>>,
}

impl<T: Tick> Default for AbstractHom<T> {
    fn default() -> Self {
        AbstractHom {
            map: BTreeMap::new(),
        }
    }
}

impl<T: Tick> AbstractHom<T> {
    pub fn identity_on<'a>(nulls: impl IntoIterator<Item = &'a Value<T>>) -> Self {
        AbstractHom {
            map: nulls.into_iter().map(|n| (n.clone(), n.clone())).collect(),
        }
    }

    pub fn apply(&self, v: &Value<T>) -> Value<T> {
        self.map.get(v).cloned().unwrap_or_else(|| v.clone())
    }

    pub fn apply_fact(&self, fact: &AbstractFact<T>) -> AbstractFact<T> {
        Fact::new(
            fact.relation.clone(),
            fact.values.iter().map(|v| self.apply(v)).collect(),
            fact.time,
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Value<T>, &Value<T>)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Whether the image of every fact of `a` is a fact of `b`, and every
    /// null is sent to a value of its own context.
    pub fn is_hom(&self, a: &AbstractInstance<T>, b: &AbstractInstance<T>) -> bool {
        let contexts_ok = self.map.iter().all(|(k, v)| match (k, v) {
            (Value::PointNull { context: c1, .. }, Value::PointNull { context: c2, .. }) => {
                c1 == c2
            }
            (Value::PointNull { .. }, Value::Constant(_)) => true,
            _ => false,
        });
        contexts_ok && a.facts().all(|f| b.contains(&self.apply_fact(f)))
    }
}

impl<T: Tick> Display for AbstractHom<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}->{v}")?;
        }
        f.write_str("}")
    }
}

type Index<'b, T> = HashMap<(&'b str, T), Vec<&'b AbstractFact<T>>>;

/// Search for an abstract homomorphism from `a` to `b`. Relations are
/// matched by name; a relation with different arities on the two sides is an
/// error.
///
/// Facts of `a` are split into components connected by shared nulls; each
/// component is solved independently by backtracking, always extending the
/// fact with the fewest remaining candidates. Candidates are tried in
/// canonical order, so the result is reproducible.
pub fn find_abstract_hom<T: Tick>(
    a: &AbstractInstance<T>,
    b: &AbstractInstance<T>,
) -> Result<Option<AbstractHom<T>>> {
    for rel in a.schema().iter() {
        if let Some(other) = b.schema().get(&rel.name) {
            if other.arity() != rel.arity() {
                return Err(Error::InvalidArgument(format!(
                    "relation {} has arity {} on one side and {} on the other",
                    rel.name,
                    rel.arity(),
                    other.arity()
                )));
            }
        }
    }
    let mut index: Index<'_, T> = HashMap::new();
    for f in b.facts() {
        index
            .entry((f.relation.as_str(), f.time))
            .or_default()
            .push(f);
    }

    let mut with_nulls = Vec::new();
    for f in a.facts() {
        if f.is_complete() {
            if !b.contains(f) {
                return Ok(None);
            }
        } else {
            with_nulls.push(f);
        }
    }

    let mut hom = AbstractHom::default();
    for component in components(&with_nulls) {
        let mut assignment = BTreeMap::new();
        let mut done = vec![false; component.len()];
        if !solve(&component, &index, &mut done, &mut assignment) {
            return Ok(None);
        }
        hom.map.extend(assignment);
    }
    Ok(Some(hom))
}

/// Groups of facts connected through shared nulls, in canonical order.
fn components<'a, T: Tick>(facts: &[&'a AbstractFact<T>]) -> Vec<Vec<&'a AbstractFact<T>>> {
    let mut parent: Vec<usize> = (0..facts.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut owner: HashMap<&Value<T>, usize> = HashMap::new();
    for (i, f) in facts.iter().enumerate() {
        for n in f.nulls() {
            match owner.get(n) {
                Some(&j) => {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri.max(rj)] = ri.min(rj);
                }
                None => {
                    owner.insert(n, i);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<&AbstractFact<T>>> = BTreeMap::new();
    for (i, f) in facts.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(f);
    }
    groups.into_values().collect()
}

/// Extend `assignment` by matching `fact` onto `target`. Returns the nulls
/// newly assigned, or `None` on a clash.
fn unify<T: Tick>(
    fact: &AbstractFact<T>,
    target: &AbstractFact<T>,
    assignment: &mut BTreeMap<Value<T>, Value<T>>,
) -> Option<Vec<Value<T>>> {
    let mut fresh = Vec::new();
    for (v, w) in fact.values.iter().zip(&target.values) {
        let ok = match v {
            Value::Constant(_) => v == w,
            Value::PointNull { context, .. } => match assignment.get(v) {
                Some(bound) => bound == w,
                None => {
                    let context_ok = match w {
                        Value::Constant(_) => true,
                        Value::PointNull { context: c2, .. } => c2 == context,
                        Value::IntervalNull { .. } => false,
                    };
                    if context_ok {
                        assignment.insert(v.clone(), w.clone());
                        fresh.push(v.clone());
                    }
                    context_ok
                }
            },
            Value::IntervalNull { .. } => false,
        };
        if !ok {
            for n in &fresh {
                assignment.remove(n);
            }
            return None;
        }
    }
    Some(fresh)
}

fn candidates<'b, T: Tick>(
    fact: &AbstractFact<T>,
    index: &Index<'b, T>,
    assignment: &mut BTreeMap<Value<T>, Value<T>>,
) -> Vec<&'b AbstractFact<T>> {
    let Some(pool) = index.get(&(fact.relation.as_str(), fact.time)) else {
        return Vec::new();
    };
    pool.iter()
        .copied()
        .filter(|target| {
            target.values.len() == fact.values.len()
                && match unify(fact, target, assignment) {
                    Some(fresh) => {
                        for n in fresh {
                            assignment.remove(&n);
                        }
                        true
                    }
                    None => false,
                }
        })
        .collect()
}

fn solve<'b, T: Tick>(
    facts: &[&AbstractFact<T>],
    index: &Index<'b, T>,
    done: &mut [bool],
    assignment: &mut BTreeMap<Value<T>, Value<T>>,
) -> bool {
    // most constrained open fact; ties go to the canonically first
    let mut best: Option<(usize, Vec<&AbstractFact<T>>)> = None;
    for (i, fact) in facts.iter().enumerate() {
        if done[i] {
            continue;
        }
        let cands = candidates(fact, index, assignment);
        if cands.is_empty() {
            return false;
        }
        if best.as_ref().is_none_or(|(_, b)| cands.len() < b.len()) {
            best = Some((i, cands));
        }
    }
    let Some((i, cands)) = best else {
        return true;
    };
    done[i] = true;
    for target in cands {
        let fresh = unify(facts[i], target, assignment).expect("candidate was filtered");
        if solve(facts, index, done, assignment) {
            return true;
        }
        for n in fresh {
            assignment.remove(&n);
        }
    }
    done[i] = false;
    false
}

/// Homomorphisms exist in both directions.
pub fn hom_equivalent<T: Tick>(a: &AbstractInstance<T>, b: &AbstractInstance<T>) -> Result<bool> {
    Ok(find_abstract_hom(a, b)?.is_some() && find_abstract_hom(b, a)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, c, iv, pnull};
    use crate::model::{normalize_instance, sem_instance, RelationSchema, Schema};
    use proptest::prelude::*;

    fn sigma_s_lhs() -> Vec<Atom> {
        vec![
            Atom::new("Employee1", vec![Term::var("n"), Term::var("c")], "t"),
            Atom::new(
                "Employee2",
                vec![Term::var("n"), Term::var("p"), Term::var("d")],
                "t",
            ),
        ]
    }

    fn vars(pairs: &[(&str, &str)]) -> BTreeMap<String, Value<u64>> {
        pairs.iter().map(|(k, v)| (k.to_string(), c(v))).collect()
    }

    #[test]
    fn join_on_abstract_source() {
        let got = enumerate_formula_homs(&sigma_s_lhs(), &fixtures::source_points()).unwrap();
        assert_eq!(got.len(), 3);
        let h = Binding {
            vars: vars(&[
                ("n", "Ada"),
                ("c", "IBM"),
                ("p", "Developer"),
                ("d", "Computer"),
            ]),
            time: 8u64,
        };
        assert!(got.contains(&h));
    }

    #[test]
    fn join_needs_normalized_intervals() {
        assert!(enumerate_formula_homs(&sigma_s_lhs(), &fixtures::source())
            .unwrap()
            .is_empty());
        let got = enumerate_formula_homs(&sigma_s_lhs(), &fixtures::source_normalized()).unwrap();
        assert_eq!(got.len(), 2);
        let h = Binding {
            vars: vars(&[
                ("n", "Ada"),
                ("c", "IBM"),
                ("p", "Developer"),
                ("d", "Computer"),
            ]),
            time: iv(8, 10),
        };
        assert!(got.contains(&h));
    }

    #[test]
    fn constants_are_matched_and_unknown_relations_rejected() {
        let atoms = vec![Atom::new(
            "Employee1",
            vec![Term::var("n"), Term::constant("Intel")],
            "t",
        )];
        let got = enumerate_formula_homs(&atoms, &fixtures::source_points()).unwrap();
        assert_eq!(got.iter().map(|b| b.time).collect::<Vec<_>>(), vec![11, 12]);

        let bad = vec![Atom::new("Nope", vec![], "t")];
        assert!(matches!(
            enumerate_formula_homs(&bad, &fixtures::source_points()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn repeated_variable_must_agree() {
        let atoms = vec![Atom::new(
            "Employee1",
            vec![Term::var("x"), Term::var("x")],
            "t",
        )];
        assert!(enumerate_formula_homs(&atoms, &fixtures::source_points())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn solution_points_maps_into_chased_points_and_back() {
        let (f4, f5) = (fixtures::solution_points(), fixtures::chased_points());
        let h = find_abstract_hom(&f4, &f5).unwrap().unwrap();
        assert!(h.is_hom(&f4, &f5));
        assert_eq!(h.apply(&pnull("N", 11)), pnull("J", 11));
        assert_eq!(h.apply(&pnull("M", 9)), pnull("O", 9));
        assert_eq!(h.apply(&pnull("V", 12)), pnull("Y", 12));
        assert!(hom_equivalent(&f4, &f5).unwrap());
        assert!(hom_equivalent(&f4, &f4).unwrap());
    }

    fn single(values: Vec<Value<u64>>) -> AbstractInstance<u64> {
        let schema: Schema = [RelationSchema::new("R", ["A"], "T")].into_iter().collect();
        Instance::from_facts(schema, [Fact::new("R", values, 5u64)])
    }

    #[test]
    fn constants_are_fixed_points() {
        let with_null = single(vec![pnull("N", 5)]);
        let with_const = single(vec![c("c")]);
        let h = find_abstract_hom(&with_null, &with_const).unwrap().unwrap();
        assert_eq!(h.apply(&pnull("N", 5)), c("c"));
        assert!(find_abstract_hom(&with_const, &with_null)
            .unwrap()
            .is_none());
        assert!(!hom_equivalent(&single(vec![c("c1")]), &single(vec![c("c2")])).unwrap());
    }

    #[test]
    fn shared_nulls_must_map_consistently() {
        let schema: Schema = [RelationSchema::new("R", ["A", "B"], "T")]
            .into_iter()
            .collect();
        let a = Instance::from_facts(
            schema.clone(),
            [
                Fact::new("R", vec![pnull("N", 1), c("x")], 1u64),
                Fact::new("R", vec![pnull("N", 1), c("y")], 1u64),
            ],
        );
        let b = Instance::from_facts(
            schema.clone(),
            [
                Fact::new("R", vec![c("p"), c("x")], 1u64),
                Fact::new("R", vec![c("q"), c("y")], 1u64),
            ],
        );
        assert!(find_abstract_hom(&a, &b).unwrap().is_none());
        let mut b2 = b.clone();
        b2.insert(Fact::new("R", vec![c("q"), c("x")], 1u64));
        let h = find_abstract_hom(&a, &b2).unwrap().unwrap();
        assert_eq!(h.apply(&pnull("N", 1)), c("q"));
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let schema: Schema = [RelationSchema::new("Emp", ["name"], "time")]
            .into_iter()
            .collect();
        let other = AbstractInstance::<u64>::new(schema);
        assert!(find_abstract_hom(&fixtures::solution_points(), &other).is_err());
        let empty = AbstractInstance::<u64>::new(Schema::new());
        assert!(find_abstract_hom(&fixtures::solution_points(), &empty)
            .unwrap()
            .is_none());
    }

    #[test]
    fn normalized_sem_is_equivalent() {
        let solution = fixtures::solution();
        let a = sem_instance(&normalize_instance(&solution), 13).unwrap();
        assert!(hom_equivalent(&a, &sem_instance(&solution, 13).unwrap()).unwrap());
    }

    /// Try every context-respecting assignment of `a`'s nulls.
    fn brute_force_exists(a: &AbstractInstance<u64>, b: &AbstractInstance<u64>) -> bool {
        let nulls: Vec<Value<u64>> = a.nulls().into_iter().cloned().collect();
        let options: Vec<Vec<Value<u64>>> = nulls
            .iter()
            .map(|n| {
                let Value::PointNull { context, .. } = n else {
                    unreachable!()
                };
                let mut opts: BTreeSet<Value<u64>> = BTreeSet::new();
                for f in b.facts() {
                    for v in &f.values {
                        match v {
                            Value::Constant(_) => {
                                opts.insert(v.clone());
                            }
                            Value::PointNull { context: c2, .. } if c2 == context => {
                                opts.insert(v.clone());
                            }
                            _ => {}
                        }
                    }
                }
                opts.into_iter().collect()
            })
            .collect();
        let mut choice = vec![0usize; nulls.len()];
        if options.iter().any(Vec::is_empty) {
            return nulls.is_empty() && a.facts().all(|f| b.contains(f));
        }
        loop {
            let h = AbstractHom {
                map: nulls
                    .iter()
                    .zip(&choice)
                    .enumerate()
                    .map(|(i, (n, &k))| (n.clone(), options[i][k].clone()))
                    .collect(),
            };
            if h.is_hom(a, b) {
                return true;
            }
            let mut i = 0;
            loop {
                if i == choice.len() {
                    return false;
                }
                choice[i] += 1;
                if choice[i] < options[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }

    fn arb_instance() -> impl Strategy<Value = AbstractInstance<u64>> {
        let value = prop_oneof![
            prop::sample::select(vec!["a", "b"]).prop_map(|s| Value::Constant(s.to_string())),
            prop::sample::select(vec!["N", "M", "K"]).prop_map(|l| Value::PointNull {
                label: l.to_string(),
                context: 0u64
            }),
        ];
        prop::collection::vec((prop::collection::vec(value, 2), 0u64..2), 0..6).prop_map(|rows| {
            let schema: Schema = [RelationSchema::new("R", ["A", "B"], "T")]
                .into_iter()
                .collect();
            Instance::from_facts(
                schema,
                rows.into_iter().map(|(vals, t)| {
                    let vals = vals
                        .into_iter()
                        .map(|v| match v {
                            Value::PointNull { label, .. } => {
                                Value::PointNull { label, context: t }
                            }
                            other => other,
                        })
                        .collect();
                    Fact::new("R", vals, t)
                }),
            )
        })
    }

    proptest! {
        #[test]
        fn search_agrees_with_brute_force(a in arb_instance(), b in arb_instance()) {
            let found = find_abstract_hom(&a, &b).unwrap();
            if let Some(h) = &found {
                prop_assert!(h.is_hom(&a, &b));
            }
            prop_assert_eq!(found.is_some(), brute_force_exists(&a, &b));
            prop_assert!(find_abstract_hom(&a, &a).unwrap().is_some());
        }
    }
}
