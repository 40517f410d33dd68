//! The `tdx` command-line tool. [`run`] is the whole program minus process
//! exit, so tests can drive it directly.

use std::fmt::Display;
use std::fs;
use std::io::{self, IsTerminal, Read, Write};
use std::path::Path;

use clap::{Parser, Subcommand};
use serde_json::Value as Json;

use tdx_core::json::{self, AnyInstance, Document, JsonStamp};
use tdx_core::model::Instance;
use tdx_core::{
    certain_abstract, certain_concrete, chase_abstract, chase_concrete, hom_equivalent,
    is_normalized, naive_eval, normalize_instance, parse_mapping, sem_instance, validate_instance,
    Certain, ChaseOutcome, Conflict, Error, Mapping, Stamp, Time, Ucq,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_SOLUTION: i32 = 2;
pub const EXIT_NOT_EQUIVALENT: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "tdx",
    version,
    about = "Temporal data exchange over interval and point instances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split every interval on the endpoint grid of the whole instance
    Normalize {
        #[arg(short, long)]
        input: String,
        #[arg(short, long)]
        output: String,
    },
    /// Chase a concrete source instance with a mapping
    Chase {
        #[arg(short, long)]
        mapping: String,
        #[arg(short, long)]
        input: String,
        #[arg(short, long)]
        output: String,
    },
    /// Chase an abstract source instance with a mapping
    Achase {
        #[arg(short, long)]
        mapping: String,
        #[arg(short, long)]
        input: String,
        #[arg(short, long)]
        output: String,
    },
    /// Expand a concrete instance to its abstract view below a horizon
    Sem {
        #[arg(short, long)]
        input: String,
        /// Defaults to one past the largest finite endpoint
        #[arg(long)]
        horizon: Option<Time>,
        #[arg(short, long)]
        output: String,
    },
    /// Evaluate a named query of the mapping on an instance
    Query {
        #[arg(short, long)]
        mapping: String,
        #[arg(short, long)]
        input: String,
        #[arg(short, long)]
        query: String,
        #[arg(short, long)]
        output: String,
    },
    /// Certain answers of a named query for a source instance
    Certain {
        #[arg(short, long)]
        mapping: String,
        #[arg(short, long)]
        input: String,
        #[arg(short, long)]
        query: String,
        #[arg(short, long)]
        output: String,
    },
    /// Check two instances for homomorphic equivalence
    Equiv {
        #[arg(short, long)]
        a: String,
        #[arg(short, long)]
        b: String,
        /// Horizon for concrete inputs; defaults to one past the largest
        /// finite endpoint of either
        #[arg(long)]
        horizon: Option<Time>,
    },
}

/// What went wrong, already formatted for the user.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn error(message: impl Display) -> Self {
        Failure {
            code: EXIT_ERROR,
            message: message.to_string(),
        }
    }
}

fn in_file(path: &str, e: impl Display) -> Failure {
    Failure::error(format!("{path}: {e}"))
}

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| in_file("<stdin>", e))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| in_file(path, e))
    }
}

fn write_output(path: &str, text: &str) -> Result<(), Failure> {
    if path == "-" {
        let mut out = io::stdout().lock();
        out.write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| in_file("<stdout>", e))
    } else {
        fs::write(Path::new(path), text).map_err(|e| in_file(path, e))
    }
}

fn load_mapping(path: &str) -> Result<Mapping, Failure> {
    let text = read_input(path)?;
    parse_mapping(&text).map_err(|e| in_file(path, e))
}

fn load_instance(path: &str) -> Result<Document<Time>, Failure> {
    let text = read_input(path)?;
    let doc = json::parse_document(&text).map_err(|e| in_file(path, e))?;
    let violations: Vec<String> = match &doc.instance {
        AnyInstance::Concrete(i) => validate_instance(i),
        AnyInstance::Abstract(i) => validate_instance(i),
    }
    .iter()
    .map(ToString::to_string)
    .collect();
    if !violations.is_empty() {
        return Err(in_file(
            path,
            format!("invalid instance: {}", violations.join("; ")),
        ));
    }
    Ok(doc)
}

fn emit<S>(path: &str, inst: &Instance<S>, horizon: Option<Time>) -> Result<(), Failure>
where
    S: JsonStamp + Stamp<Tick = Time>,
{
    let text = json::write_instance(inst, horizon).map_err(Failure::error)?;
    write_output(path, &text)
}

fn no_solution(path: &str, conflict: &Conflict) -> Result<(), Failure> {
    write_output(
        path,
        &json::to_canonical_string(&json::failure_to_json(conflict)),
    )?;
    Err(Failure {
        code: EXIT_NO_SOLUTION,
        message: format!("no solution: {conflict}"),
    })
}

fn find_query<'m>(m: &'m Mapping, name: &str) -> Result<&'m Ucq, Failure> {
    m.query(name).ok_or_else(|| {
        let known: Vec<&str> = m.queries.iter().map(|q| q.name.as_str()).collect();
        Failure::error(format!(
            "no query named {name} (the mapping defines: {})",
            if known.is_empty() {
                "none".to_string()
            } else {
                known.join(", ")
            }
        ))
    })
}

fn default_horizon<'a>(docs: impl IntoIterator<Item = &'a AnyInstance<Time>>) -> Time {
    docs.into_iter()
        .filter_map(|d| match d {
            AnyInstance::Concrete(i) => i.max_finite_endpoint(),
            AnyInstance::Abstract(_) => None,
        })
        .max()
        .map_or(0, |e| e + 1)
}

fn engine(e: Error) -> Failure {
    Failure::error(e)
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Normalize { input, output } => match load_instance(&input)?.instance {
            AnyInstance::Concrete(i) => emit(&output, &normalize_instance(&i), None),
            AnyInstance::Abstract(_) => {
                Err(in_file(&input, "normalize expects a concrete instance"))
            }
        },
        Command::Chase {
            mapping,
            input,
            output,
        } => {
            let m = load_mapping(&mapping)?;
            let AnyInstance::Concrete(src) = load_instance(&input)?.instance else {
                return Err(in_file(
                    &input,
                    "chase expects a concrete instance; use achase for abstract ones",
                ));
            };
            match chase_concrete(&src, &m).map_err(engine)? {
                ChaseOutcome::Success(j) => emit(&output, &j, None),
                ChaseOutcome::Failure(c) => no_solution(&output, &c),
            }
        }
        Command::Achase {
            mapping,
            input,
            output,
        } => {
            let m = load_mapping(&mapping)?;
            let doc = load_instance(&input)?;
            let AnyInstance::Abstract(src) = doc.instance else {
                return Err(in_file(
                    &input,
                    "achase expects an abstract instance; run sem first",
                ));
            };
            match chase_abstract(&src, &m).map_err(engine)? {
                ChaseOutcome::Success(j) => emit(&output, &j, doc.horizon),
                ChaseOutcome::Failure(c) => no_solution(&output, &c),
            }
        }
        Command::Sem {
            input,
            horizon,
            output,
        } => {
            let doc = load_instance(&input)?;
            let h = horizon.unwrap_or_else(|| default_horizon([&doc.instance]));
            let AnyInstance::Concrete(i) = doc.instance else {
                return Err(in_file(&input, "sem expects a concrete instance"));
            };
            emit(&output, &sem_instance(&i, h).map_err(engine)?, Some(h))
        }
        Command::Query {
            mapping,
            input,
            query,
            output,
        } => {
            let m = load_mapping(&mapping)?;
            let q = find_query(&m, &query)?;
            let text = match load_instance(&input)?.instance {
                AnyInstance::Concrete(i) => {
                    if !is_normalized(&i) {
                        return Err(in_file(
                            &input,
                            "query evaluation needs a normalized instance; run normalize first",
                        ));
                    }
                    json::answers_to_json(&q.name, &naive_eval(q, &i).map_err(engine)?)
                }
                AnyInstance::Abstract(i) => {
                    json::answers_to_json(&q.name, &naive_eval(q, &i).map_err(engine)?)
                }
            }
            .map_err(engine)?;
            write_output(&output, &json::to_canonical_string(&text))
        }
        Command::Certain {
            mapping,
            input,
            query,
            output,
        } => {
            let m = load_mapping(&mapping)?;
            let q = find_query(&m, &query)?;
            let answers: Json = match load_instance(&input)?.instance {
                AnyInstance::Concrete(src) => {
                    match certain_concrete(q, &src, &m).map_err(engine)? {
                        Certain::Answers(a) => {
                            json::answers_to_json(&q.name, &a).map_err(engine)?
                        }
                        Certain::NoSolution(c) => return no_solution(&output, &c),
                    }
                }
                AnyInstance::Abstract(src) => {
                    match certain_abstract(q, &src, &m).map_err(engine)? {
                        Certain::Answers(a) => {
                            json::answers_to_json(&q.name, &a).map_err(engine)?
                        }
                        Certain::NoSolution(c) => return no_solution(&output, &c),
                    }
                }
            };
            write_output(&output, &json::to_canonical_string(&answers))
        }
        Command::Equiv { a, b, horizon } => {
            let (da, db) = (load_instance(&a)?, load_instance(&b)?);
            let h = horizon.unwrap_or_else(|| default_horizon([&da.instance, &db.instance]));
            let expand = |doc: Document<Time>, path: &str| match doc.instance {
                AnyInstance::Concrete(i) => sem_instance(&i, h).map_err(|e| in_file(path, e)),
                AnyInstance::Abstract(i) => Ok(i),
            };
            let (ia, ib) = (expand(da, &a)?, expand(db, &b)?);
            if hom_equivalent(&ia, &ib).map_err(engine)? {
                write_output("-", "equivalent\n")
            } else {
                write_output("-", "not equivalent\n")?;
                Err(Failure {
                    code: EXIT_NOT_EQUIVALENT,
                    message: String::new(),
                })
            }
        }
    }
}

fn color_enabled() -> bool {
    std::env::var("TDX_COLOR").map_or(true, |v| v != "0") && io::stderr().is_terminal()
}

fn report(code: i32, message: &str) {
    if message.is_empty() {
        return;
    }
    let label = if code == EXIT_ERROR { "error" } else { "tdx" };
    let mut err = io::stderr().lock();
    let _ = if color_enabled() {
        writeln!(err, "\x1b[1;31m{label}:\x1b[0m {message}")
    } else {
        writeln!(err, "{label}: {message}")
    };
}

/// Run the tool on `argv` (program name first) and return the exit code.
pub fn run<I, A>(argv: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            report(f.code, &f.message);
            f.code
        }
    }
}
