//! Seeded random scenarios (source instance, mapping, queries) and
//! brute-force oracles shared by the acceptance and property suites.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tdx_core::model::{normalize_instance, Fact, Instance, RelationSchema, Schema};
use tdx_core::{
    find_abstract_hom, parse_mapping, AbstractHom, AbstractInstance, ConcreteInstance, Interval,
    Mapping, Value,
};

pub const CONSTANTS: [&str; 3] = ["a", "b", "c"];

#[derive(Clone, Debug)]
pub struct Scenario {
    pub seed: u64,
    pub mapping_text: String,
    pub mapping: Mapping,
    /// Complete and normalized.
    pub source: ConcreteInstance,
    /// One past the largest finite endpoint.
    pub horizon: u64,
}

fn relation(rng: &mut ChaCha8Rng, name: String) -> RelationSchema {
    let arity = rng.gen_range(1..=3);
    RelationSchema::new(name, (0..arity).map(|i| format!("a{i}")), "t")
}

fn constant(rng: &mut ChaCha8Rng) -> String {
    CONSTANTS.choose(rng).unwrap().to_string()
}

fn interval(rng: &mut ChaCha8Rng) -> Interval {
    let start = rng.gen_range(0..8);
    if rng.gen_bool(0.15) {
        Interval::unbounded(start)
    } else {
        Interval::bounded(start, rng.gen_range(start + 1..=8)).unwrap()
    }
}

fn term(rng: &mut ChaCha8Rng, vars: &[&str]) -> String {
    if rng.gen_bool(0.15) {
        format!("'{}'", constant(rng))
    } else {
        vars.choose(rng).unwrap().to_string()
    }
}

fn atom_text(name: &str, terms: &[String]) -> String {
    format!("{name}({}, t)", terms.join(", "))
}

/// A scenario within the desk-scale bounds: at most 3 source relations and
/// 5 source facts with endpoints up to 8, at most 3 rules with at most 2
/// existentials each, keys never covering an existential position.
pub fn scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources: Vec<RelationSchema> = (0..rng.gen_range(1..=3))
        .map(|i| relation(&mut rng, format!("S{i}")))
        .collect();
    let targets: Vec<RelationSchema> = (0..rng.gen_range(1..=3))
        .map(|i| relation(&mut rng, format!("T{i}")))
        .collect();

    let mut text = String::new();
    for r in &sources {
        text.push_str(&format!("source {r}.\n"));
    }
    for r in &targets {
        text.push_str(&format!("target {r}.\n"));
    }

    // target positions that some rule fills with an existential
    let mut existential_slots: BTreeSet<(String, usize)> = BTreeSet::new();
    for _ in 0..rng.gen_range(1..=3) {
        let mut lhs = Vec::new();
        let mut lhs_vars: BTreeSet<String> = BTreeSet::new();
        for _ in 0..rng.gen_range(1..=2) {
            let r = sources.choose(&mut rng).unwrap();
            let terms: Vec<String> = (0..r.arity())
                .map(|_| term(&mut rng, &["x", "y", "z"]))
                .collect();
            lhs_vars.extend(terms.iter().filter(|t| !t.starts_with('\'')).cloned());
            lhs.push(atom_text(&r.name, &terms));
        }
        let existentials: Vec<&str> = ["e", "f"][..rng.gen_range(0..=2)].to_vec();
        let mut pool: Vec<String> = lhs_vars.into_iter().collect();
        pool.extend(existentials.iter().map(|e| format!("?{e}")));
        if pool.is_empty() {
            pool.push(format!("'{}'", constant(&mut rng)));
        }
        let mut rhs = Vec::new();
        for _ in 0..rng.gen_range(1..=2) {
            let r = targets.choose(&mut rng).unwrap();
            let terms: Vec<String> = (0..r.arity())
                .map(|i| {
                    let t = if rng.gen_bool(0.1) {
                        format!("'{}'", constant(&mut rng))
                    } else {
                        pool.choose(&mut rng).unwrap().clone()
                    };
                    if t.starts_with('?') {
                        existential_slots.insert((r.name.clone(), i));
                    }
                    t
                })
                .collect();
            rhs.push(atom_text(&r.name, &terms));
        }
        text.push_str(&format!("rule {} -> {}.\n", lhs.join(", "), rhs.join(", ")));
    }

    for r in &targets {
        if !rng.gen_bool(0.7) {
            continue;
        }
        let safe: Vec<usize> = (0..r.arity())
            .filter(|&i| !existential_slots.contains(&(r.name.clone(), i)))
            .collect();
        let key: Vec<usize> = safe.into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        if key.len() == r.arity() {
            continue;
        }
        let mut attrs: Vec<String> = key.iter().map(|&i| r.attributes[i].clone()).collect();
        attrs.push("@t".into());
        text.push_str(&format!("key {}({}).\n", r.name, attrs.join(", ")));
    }

    for qi in 0..2 {
        let head: Vec<&str> = ["x", "y"][..rng.gen_range(0..=2)].to_vec();
        let disjuncts = rng.gen_range(1..=2);
        for _ in 0..disjuncts {
            let mut atoms: Vec<(String, Vec<String>)> = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let r = targets.choose(&mut rng).unwrap();
                    let terms = (0..r.arity())
                        .map(|_| term(&mut rng, &["x", "y", "u", "w"]))
                        .collect();
                    (r.name.clone(), terms)
                })
                .collect();
            for h in &head {
                if !atoms.iter().any(|(_, ts)| ts.iter().any(|t| t == h)) {
                    let k = rng.gen_range(0..atoms.len());
                    let slot = rng.gen_range(0..atoms[k].1.len());
                    atoms[k].1[slot] = h.to_string();
                }
            }
            // a head variable may have been overwritten by a later one
            for h in &head {
                if !atoms.iter().any(|(_, ts)| ts.iter().any(|t| t == h)) {
                    let r = targets.iter().find(|r| r.arity() >= 1).unwrap();
                    let mut terms: Vec<String> = vec!["w".into(); r.arity()];
                    terms[0] = h.to_string();
                    atoms.push((r.name.clone(), terms));
                }
            }
            let body: Vec<String> = atoms.iter().map(|(n, ts)| atom_text(n, ts)).collect();
            let mut head_text: Vec<&str> = head.clone();
            head_text.push("t");
            text.push_str(&format!(
                "query q{qi}({}) :- {}.\n",
                head_text.join(", "),
                body.join(", ")
            ));
        }
    }

    let mapping = parse_mapping(&text)
        .unwrap_or_else(|e| panic!("seed {seed}: generated mapping rejected: {e}\n{text}"));

    let mut facts = Vec::new();
    for _ in 0..rng.gen_range(1..=5) {
        let r = sources.choose(&mut rng).unwrap();
        let values = (0..r.arity())
            .map(|_| Value::constant(constant(&mut rng)))
            .collect();
        facts.push(Fact::new(r.name.clone(), values, interval(&mut rng)));
    }
    let schema: Schema = sources.iter().collect();
    let source = normalize_instance(&Instance::from_facts(schema, facts));
    let horizon = source.max_finite_endpoint().map_or(1, |e| e + 1);
    Scenario {
        seed,
        mapping_text: text,
        mapping,
        source,
        horizon,
    }
}

/// Nulls of `a` with, for each, the values of `b` it could be sent to
/// without breaking any single fact position: a value occurring at the same
/// relation, position and time in `b`, and of the null's own context.
fn position_options(
    a: &AbstractInstance,
    b: &AbstractInstance,
) -> BTreeMap<Value, BTreeSet<Value>> {
    let mut at: BTreeMap<(&str, usize, u64), BTreeSet<&Value>> = BTreeMap::new();
    for f in b.facts() {
        for (i, v) in f.values.iter().enumerate() {
            at.entry((f.relation.as_str(), i, f.time))
                .or_default()
                .insert(v);
        }
    }
    let mut options: BTreeMap<Value, BTreeSet<Value>> = BTreeMap::new();
    for f in a.facts() {
        for (i, v) in f.values.iter().enumerate() {
            let Value::PointNull { context, .. } = v else {
                continue;
            };
            let here: BTreeSet<Value> = at
                .get(&(f.relation.as_str(), i, f.time))
                .into_iter()
                .flatten()
                .filter(|w| match w {
                    Value::Constant(_) => true,
                    Value::PointNull { context: c2, .. } => c2 == context,
                    Value::IntervalNull { .. } => false,
                })
                .map(|w| (*w).clone())
                .collect();
            options
                .entry(v.clone())
                .and_modify(|o| *o = o.intersection(&here).cloned().collect())
                .or_insert(here);
        }
    }
    options
}

fn apply(h: &BTreeMap<Value, Value>, f: &tdx_core::AbstractFact) -> tdx_core::AbstractFact {
    Fact::new(
        f.relation.clone(),
        f.values
            .iter()
            .map(|v| h.get(v).cloned().unwrap_or_else(|| v.clone()))
            .collect(),
        f.time,
    )
}

/// Exhaustive search over all assignments of `a`'s nulls. `None` when the
/// assignment space exceeds `budget`.
pub fn brute_force_hom_exists(
    a: &AbstractInstance,
    b: &AbstractInstance,
    budget: u128,
) -> Option<bool> {
    let options = position_options(a, b);
    let nulls: Vec<&Value> = options.keys().collect();
    let choices: Vec<Vec<&Value>> = options.values().map(|o| o.iter().collect()).collect();
    if choices.iter().any(Vec::is_empty) {
        return Some(false);
    }
    let space: u128 = choices.iter().map(|c| c.len() as u128).product();
    if space > budget {
        return None;
    }
    let mut idx = vec![0usize; nulls.len()];
    loop {
        let h: BTreeMap<Value, Value> = nulls
            .iter()
            .zip(&idx)
            .enumerate()
            .map(|(i, (n, &k))| ((*n).clone(), choices[i][k].clone()))
            .collect();
        if a.facts().all(|f| b.contains(&apply(&h, f))) {
            return Some(true);
        }
        let mut i = 0;
        loop {
            if i == idx.len() {
                return Some(false);
            }
            idx[i] += 1;
            if idx[i] < choices[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Tallies of homomorphism searches cross-checked against the oracle.
#[derive(Default, Debug)]
pub struct OracleLog {
    pub checked: usize,
    pub skipped: usize,
    pub disagreements: Vec<String>,
}

impl OracleLog {
    /// `find_abstract_hom`, cross-checked when both sides have at most 12
    /// facts.
    pub fn hom(&mut self, a: &AbstractInstance, b: &AbstractInstance) -> Option<AbstractHom> {
        let found = find_abstract_hom(a, b).expect("schemas agree");
        if let Some(h) = &found {
            if !h.is_hom(a, b) {
                self.disagreements
                    .push(format!("returned map is not a homomorphism: {h}"));
            }
        }
        if a.len() <= 12 && b.len() <= 12 {
            match brute_force_hom_exists(a, b, 2_000_000) {
                Some(exists) => {
                    self.checked += 1;
                    if exists != found.is_some() {
                        self.disagreements.push(format!(
                            "search {} but oracle {}:\n{a}--\n{b}",
                            found.is_some(),
                            exists
                        ));
                    }
                }
                None => self.skipped += 1,
            }
        }
        found
    }

    pub fn equivalent(&mut self, a: &AbstractInstance, b: &AbstractInstance) -> bool {
        let ab = self.hom(a, b).is_some();
        let ba = self.hom(b, a).is_some();
        ab && ba
    }
}

pub struct Timer(Instant);

impl Timer {
    pub fn start() -> Self {
        Timer(Instant::now())
    }

    pub fn secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
