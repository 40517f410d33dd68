//! Instances from the running employee example, built in code for unit tests.

use crate::model::{
    AbstractInstance, ConcreteInstance, Fact, Instance, RelationSchema, Schema, Value,
};
use crate::temporal::ClopenInterval;

pub fn iv(s: u64, e: u64) -> ClopenInterval<u64> {
    ClopenInterval::bounded(s, e).unwrap()
}

pub fn c(s: &str) -> Value<u64> {
    Value::constant(s)
}

pub fn inull(label: &str, s: u64, e: u64) -> Value<u64> {
    Value::interval_null(label, iv(s, e))
}

pub fn pnull(label: &str, t: u64) -> Value<u64> {
    Value::point_null(label, t)
}

pub fn employment_source() -> Schema {
    [
        RelationSchema::new("Employee1", ["name", "company"], "time"),
        RelationSchema::new("Employee2", ["name", "position", "dept"], "time"),
    ]
    .into_iter()
    .collect()
}

pub fn employment_target() -> Schema {
    [
        RelationSchema::new("Emp", ["name", "position", "company"], "time"),
        RelationSchema::new("Sal", ["name", "position", "salary"], "time"),
    ]
    .into_iter()
    .collect()
}

pub fn source() -> ConcreteInstance<u64> {
    Instance::from_facts(
        employment_source(),
        [
            Fact::new("Employee1", vec![c("Ada"), c("IBM")], iv(8, 11)),
            Fact::new("Employee1", vec![c("Ada"), c("Intel")], iv(11, 13)),
            Fact::new(
                "Employee2",
                vec![c("Ada"), c("Developer"), c("Computer")],
                iv(8, 10),
            ),
            Fact::new(
                "Employee2",
                vec![c("Ada"), c("DBA"), c("Computer")],
                iv(10, 11),
            ),
        ],
    )
}

/// The normalized source: `Employee1` split at 10.
pub fn source_normalized() -> ConcreteInstance<u64> {
    Instance::from_facts(
        employment_source(),
        [
            Fact::new("Employee1", vec![c("Ada"), c("IBM")], iv(8, 10)),
            Fact::new("Employee1", vec![c("Ada"), c("IBM")], iv(10, 11)),
            Fact::new("Employee1", vec![c("Ada"), c("Intel")], iv(11, 13)),
            Fact::new(
                "Employee2",
                vec![c("Ada"), c("Developer"), c("Computer")],
                iv(8, 10),
            ),
            Fact::new(
                "Employee2",
                vec![c("Ada"), c("DBA"), c("Computer")],
                iv(10, 11),
            ),
        ],
    )
}

pub fn source_points() -> AbstractInstance<u64> {
    let mut facts = Vec::new();
    for t in 8..13 {
        let company = if t < 11 { "IBM" } else { "Intel" };
        facts.push(Fact::new("Employee1", vec![c("Ada"), c(company)], t));
    }
    for t in 8..11 {
        let position = if t < 10 { "Developer" } else { "DBA" };
        facts.push(Fact::new(
            "Employee2",
            vec![c("Ada"), c(position), c("Computer")],
            t,
        ));
    }
    Instance::from_facts(employment_source(), facts)
}

/// The concrete universal solution of the running example.
pub fn solution() -> ConcreteInstance<u64> {
    Instance::from_facts(
        employment_target(),
        [
            Fact::new("Emp", vec![c("Ada"), c("Developer"), c("IBM")], iv(8, 10)),
            Fact::new("Emp", vec![c("Ada"), c("DBA"), c("IBM")], iv(10, 11)),
            Fact::new(
                "Emp",
                vec![c("Ada"), inull("N", 11, 13), c("Intel")],
                iv(11, 13),
            ),
            Fact::new(
                "Sal",
                vec![c("Ada"), c("Developer"), inull("M", 8, 10)],
                iv(8, 10),
            ),
            Fact::new(
                "Sal",
                vec![c("Ada"), c("DBA"), inull("U", 10, 11)],
                iv(10, 11),
            ),
            Fact::new(
                "Sal",
                vec![c("Ada"), inull("N", 11, 13), inull("V", 11, 13)],
                iv(11, 13),
            ),
        ],
    )
}

/// `solution` expanded to points below 13.
pub fn solution_points() -> AbstractInstance<u64> {
    let mut facts = vec![
        Fact::new("Emp", vec![c("Ada"), c("Developer"), c("IBM")], 8),
        Fact::new("Emp", vec![c("Ada"), c("Developer"), c("IBM")], 9),
        Fact::new("Emp", vec![c("Ada"), c("DBA"), c("IBM")], 10),
        Fact::new("Sal", vec![c("Ada"), c("Developer"), pnull("M", 8)], 8),
        Fact::new("Sal", vec![c("Ada"), c("Developer"), pnull("M", 9)], 9),
        Fact::new("Sal", vec![c("Ada"), c("DBA"), pnull("U", 10)], 10),
    ];
    for t in 11..13 {
        facts.push(Fact::new(
            "Emp",
            vec![c("Ada"), pnull("N", t), c("Intel")],
            t,
        ));
        facts.push(Fact::new(
            "Sal",
            vec![c("Ada"), pnull("N", t), pnull("V", t)],
            t,
        ));
    }
    Instance::from_facts(employment_target(), facts)
}

/// An abstract universal solution with one null per point, homomorphically
/// equivalent to `solution_points`.
pub fn chased_points() -> AbstractInstance<u64> {
    Instance::from_facts(
        employment_target(),
        [
            Fact::new("Emp", vec![c("Ada"), c("Developer"), c("IBM")], 8),
            Fact::new("Emp", vec![c("Ada"), c("Developer"), c("IBM")], 9),
            Fact::new("Emp", vec![c("Ada"), c("DBA"), c("IBM")], 10),
            Fact::new("Emp", vec![c("Ada"), pnull("J", 11), c("Intel")], 11),
            Fact::new("Emp", vec![c("Ada"), pnull("K", 12), c("Intel")], 12),
            Fact::new("Sal", vec![c("Ada"), c("Developer"), pnull("M", 8)], 8),
            Fact::new("Sal", vec![c("Ada"), c("Developer"), pnull("O", 9)], 9),
            Fact::new("Sal", vec![c("Ada"), c("DBA"), pnull("P", 10)], 10),
            Fact::new("Sal", vec![c("Ada"), pnull("J", 11), pnull("X", 11)], 11),
            Fact::new("Sal", vec![c("Ada"), pnull("K", 12), pnull("Y", 12)], 12),
        ],
    )
}
