//! Union-find over values for the equalities collected in a tkc round.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Display};

use crate::error::{Error, Result};
use crate::model::Value;
use crate::temporal::{ClopenInterval, Tick};

/// One derived equality, rendered for failure reports.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Equality {
    pub left: String,
    pub right: String,
}

impl Display for Equality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.left, self.right)
    }
}

/// Two distinct constants forced equal, and a chain of derived equalities
/// connecting them.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Conflict {
    pub constants: [String; 2],
    pub trace: Vec<Equality>,
}

impl Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {} is forced", self.constants[0], self.constants[1])?;
        if !self.trace.is_empty() {
            f.write_str(" by ")?;
            for (i, eq) in self.trace.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{eq}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Context<T> {
    Interval(ClopenInterval<T>),
    Point(T),
}

fn context_of<T: Tick>(v: &Value<T>) -> Option<Context<T>> {
    match v {
        Value::Constant(_) => None,
        Value::IntervalNull { context, .. } => Some(Context::Interval(*context)),
        Value::PointNull { context, .. } => Some(Context::Point(*context)),
    }
}

/// Symmetric-transitive closure of a set of value equalities.
///
/// A class without constants never mixes null contexts. Nulls of different
/// contexts may share a class only through a constant, which is then their
/// common representative. Merging classes whose representatives are distinct
/// constants is not an error here; it is reported by [`EqClosure::conflict`].
#[derive(Clone, Debug)]
pub struct EqClosure<T> {
    ids: BTreeMap<Value<T>, usize>,
    values: Vec<Value<T>>,
    parent: Vec<usize>,
    context: Vec<Option<Context<T>>>,
    has_constant: Vec<bool>,
    edges: Vec<(usize, usize)>,
}

impl<T: Tick> Default for EqClosure<T> {
    fn default() -> Self {
        EqClosure {
            ids: BTreeMap::new(),
            values: Vec::new(),
            parent: Vec::new(),
            context: Vec::new(),
            has_constant: Vec::new(),
            edges: Vec::new(),
        }
    }
}

impl<T: Tick> EqClosure<T> {
    pub fn new() -> Self {
        Self::default()
    }

    fn id(&mut self, v: &Value<T>) -> usize {
        if let Some(&i) = self.ids.get(v) {
            return i;
        }
        let i = self.values.len();
        self.ids.insert(v.clone(), i);
        self.values.push(v.clone());
        self.parent.push(i);
        self.context.push(context_of(v));
        self.has_constant.push(!v.is_null());
        i
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Record `a = b`. Identical values are a no-op. Directly equating nulls
    /// of different contexts is rejected.
    pub fn add(&mut self, a: &Value<T>, b: &Value<T>) -> Result<()> {
        if a == b {
            return Ok(());
        }
        let (ia, ib) = (self.id(a), self.id(b));
        let (ra, rb) = (self.find(ia), self.find(ib));
        self.edges.push((ia, ib));
        if ra == rb {
            return Ok(());
        }
        let constant_free = !self.has_constant[ra] && !self.has_constant[rb];
        let merged = match (self.context[ra], self.context[rb]) {
            (Some(x), Some(y)) if x != y && constant_free => {
                return Err(Error::InvalidArgument(format!(
                    "cannot equate {a} and {b}: their classes have different temporal contexts"
                )))
            }
            (x, y) => x.or(y),
        };
        let (keep, gone) = (ra.min(rb), ra.max(rb));
        self.parent[gone] = keep;
        self.context[keep] = merged;
        self.has_constant[keep] |= self.has_constant[gone];
        Ok(())
    }

    pub fn same_class(&mut self, a: &Value<T>, b: &Value<T>) -> bool {
        match (self.ids.get(a).copied(), self.ids.get(b).copied()) {
            _ if a == b => true,
            (Some(i), Some(j)) => self.find(i) == self.find(j),
            _ => false,
        }
    }

    /// The classes with at least two members, each sorted, in canonical
    /// order.
    pub fn classes(&mut self) -> Vec<Vec<Value<T>>> {
        let mut groups: BTreeMap<usize, BTreeSet<Value<T>>> = BTreeMap::new();
        for i in 0..self.values.len() {
            let r = self.find(i);
            groups.entry(r).or_default().insert(self.values[i].clone());
        }
        let mut out: Vec<Vec<Value<T>>> = groups
            .into_values()
            .filter(|g| g.len() > 1)
            .map(|g| g.into_iter().collect())
            .collect();
        out.sort();
        out
    }

    /// The first class, in canonical order, holding two distinct constants,
    /// with its two least constants and a shortest chain of recorded
    /// equalities between them.
    pub fn conflict(&mut self) -> Option<Conflict> {
        for class in self.classes() {
            let constants: Vec<&Value<T>> = class.iter().filter(|v| !v.is_null()).collect();
            if constants.len() < 2 {
                continue;
            }
            let (from, to) = (self.ids[constants[0]], self.ids[constants[1]]);
            return Some(Conflict {
                constants: [constants[0].to_string(), constants[1].to_string()],
                trace: self.path(from, to),
            });
        }
        None
    }

    fn path(&self, from: usize, to: usize) -> Vec<Equality> {
        let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for &(a, b) in &self.edges {
            adj.entry(a).or_default().insert(b);
            adj.entry(b).or_default().insert(a);
        }
        let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            if n == to {
                break;
            }
            for &m in adj.get(&n).into_iter().flatten() {
                if m != from && !prev.contains_key(&m) {
                    prev.insert(m, n);
                    queue.push_back(m);
                }
            }
        }
        let mut chain = Vec::new();
        let mut n = to;
        while let Some(&p) = prev.get(&n) {
            chain.push(Equality {
                left: self.values[p].to_string(),
                right: self.values[n].to_string(),
            });
            n = p;
        }
        chain.reverse();
        chain
    }

    /// Replacement for every value that has one: the class constant if there
    /// is one, otherwise the null with the least label. Values not in any
    /// class, and representatives themselves, are absent.
    pub fn representatives(&mut self) -> BTreeMap<Value<T>, Value<T>> {
        let mut out = BTreeMap::new();
        for class in self.classes() {
            let rep = class
                .iter()
                .find(|v| !v.is_null())
                .or_else(|| class.iter().min_by(|a, b| a.label().cmp(&b.label())))
                .expect("classes are nonempty")
                .clone();
            for v in class {
                if v != rep {
                    out.insert(v, rep.clone());
                }
            }
        }
        out
    }
}
