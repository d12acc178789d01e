//! `pipcalc`: command-line front end. Results go to stdout as JSON (or as
//! indented text with `--pretty`), diagnostics to stderr. Exit codes: 0 ok,
//! 1 verdict mismatch (`regress`, `fuzz`), 2 usage or input errors.

mod fuzz;
mod json;
mod regress;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use pipcalc::dist::interp;
use pipcalc::logic::{char_formula, char_test, parse_formula, sat_structural, sat_via_test, Formula, Logic};
use pipcalc::name::{fresh, Name};
use pipcalc::preorders::{check_sim, decide_may, decide_must, name_universe, GameMode};
use pipcalc::semantics::explore;
use pipcalc::syntax::{canonical_proc, parse, parse_term_file, Proc, TermFile};
use pipcalc::testing::{apply_scalar, apply_vector};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Term(#[from] pipcalc::Error),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser)]
#[command(name = "pipcalc", version, about = "Testing preorders for the finite probabilistic pi-calculus")]
struct Cli {
    /// Render results as indented text instead of JSON. Set NO_COLOR to disable colour.
    #[arg(long, global = true)]
    pretty: bool,
    /// Term file whose definitions may be used in place of inline terms.
    #[arg(long, short = 'f', global = true)]
    file: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogicArg {
    L,
    F,
}

impl From<LogicArg> for Logic {
    fn from(l: LogicArg) -> Logic {
        match l {
            LogicArg::L => Logic::L,
            LogicArg::F => Logic::F,
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct RelationArg {
    /// May testing, decided through the characteristic formula of P.
    #[arg(long)]
    may: bool,
    /// Must testing, decided through the characteristic formula of Q.
    #[arg(long)]
    must: bool,
    /// Search for a simulation.
    #[arg(long)]
    sim: bool,
    /// Search for a failure simulation.
    #[arg(long)]
    fsim: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a term and print it with its canonical form and names.
    Parse { term: String },
    /// The transition graph reachable from a term.
    Lts { term: String },
    /// The distribution a term denotes.
    Interp { term: String },
    /// Scalar outcomes of applying a test (one success name).
    Apply {
        #[arg(long)]
        test: String,
        #[arg(long = "proc")]
        process: String,
    },
    /// Vector outcomes of applying a test, as vertices of their convex hull.
    ApplyVec {
        #[arg(long)]
        test: String,
        #[arg(long = "proc")]
        process: String,
        /// Success names in output order; defaults to those of the test.
        #[arg(long, value_delimiter = ',')]
        omega: Vec<String>,
    },
    /// Characteristic formula of a process.
    CharFormula {
        term: String,
        #[arg(long, value_enum, default_value = "f")]
        logic: LogicArg,
        /// Name set; defaults to the free names plus one fresh name.
        #[arg(long, value_delimiter = ',')]
        names: Vec<String>,
    },
    /// Characteristic test of a formula with its target vector.
    CharTest {
        formula: String,
        #[arg(long, value_delimiter = ',')]
        names: Vec<String>,
    },
    /// Whether a process satisfies a formula, structurally and by its test.
    Sat {
        term: String,
        formula: String,
        #[arg(long, value_delimiter = ',')]
        names: Vec<String>,
    },
    /// Decide a preorder between two processes.
    Check {
        #[command(flatten)]
        relation: RelationArg,
        p: String,
        q: String,
    },
    /// Run a regression file (default: the bundled worked examples).
    Regress { path: Option<PathBuf> },
    /// Cross-check decision procedures on random processes.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Upper bound on process size in symbols.
        #[arg(long, default_value_t = 12)]
        size: usize,
    },
}

pub fn read(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Resolves term arguments: a definition of the loaded file, or inline text.
pub struct Terms {
    file: TermFile,
}

impl Terms {
    pub fn new(file: TermFile) -> Self {
        Terms { file }
    }

    pub fn term(&self, arg: &str) -> Result<Proc, CliError> {
        match self.file.get(arg.trim()) {
            Some(p) => Ok(p.clone()),
            None => Ok(parse(arg, &self.file.options())?),
        }
    }
}

fn names_or(given: &[String], default: impl FnOnce() -> BTreeSet<Name>) -> BTreeSet<Name> {
    if given.is_empty() {
        default()
    } else {
        given.iter().map(|s| Name::channel(s.trim())).collect()
    }
}

fn with_fresh(mut names: BTreeSet<Name>) -> BTreeSet<Name> {
    names.retain(|n| !n.is_success());
    names.insert(fresh(&names));
    names
}

fn formula_names(p: Option<&Proc>, phi: &Formula) -> BTreeSet<Name> {
    with_fresh(p.map(|p| p.free_names()).unwrap_or_default().into_iter().chain(phi.free_names()).collect())
}

/// Output and whether it reports a mismatch.
type Outcome = (Value, bool);

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let file = match &cli.file {
        Some(path) => parse_term_file(&read(path)?)?,
        None => TermFile::default(),
    };
    let terms = Terms::new(file);
    let out = match &cli.command {
        Command::Parse { term } => {
            let p = terms.term(term)?;
            json!({
                "term": p.to_string(),
                "canonical": canonical_proc(&p).to_string(),
                "free_names": json::names(&p.free_names()),
                "success_names": json::names(&p.success_names()),
                "size": p.size(),
            })
        }
        Command::Lts { term } => {
            let (states, edges) = explore(&interp(&terms.term(term)?));
            json!({
                "states": states.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                "transitions": edges.iter().map(|(s, t)| json!({
                    "source": s.to_string(),
                    "label": t.label.to_string(),
                    "target": json::dist(&t.target),
                })).collect::<Vec<_>>(),
            })
        }
        Command::Interp { term } => json!({ "distribution": json::dist(&interp(&terms.term(term)?)) }),
        Command::Apply { test, process } => {
            let (t, p) = (terms.term(test)?, terms.term(process)?);
            if t.success_names().len() > 1 {
                return Err(CliError::Usage("scalar testing needs a test with at most one success name; use apply-vec".into()));
            }
            let o = apply_scalar(&t, &p);
            json!({
                "test": t.to_string(),
                "process": p.to_string(),
                "outcomes": o.values().map(json::rat).collect::<Vec<_>>(),
                "max": json::rat(o.max()),
                "min": json::rat(o.min()),
            })
        }
        Command::ApplyVec { test, process, omega } => {
            let (t, p) = (terms.term(test)?, terms.term(process)?);
            let omega: Vec<Name> = if omega.is_empty() {
                t.success_names().into_iter().collect()
            } else {
                omega.iter().map(|w| Name::success(w.trim())).collect()
            };
            let o = apply_vector(&t, &p, &omega);
            json!({
                "test": t.to_string(),
                "process": p.to_string(),
                "omega_order": omega.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
                "vertices": o.rendered(),
            })
        }
        Command::CharFormula { term, logic, names } => {
            let p = terms.term(term)?;
            let names = names_or(names, || with_fresh(p.free_names()));
            let phi = char_formula(&interp(&p), &names, (*logic).into());
            json!({
                "process": p.to_string(),
                "logic": Logic::from(*logic).to_string(),
                "names": json::names(&names),
                "formula": phi.to_string(),
            })
        }
        Command::CharTest { formula, names } => {
            let phi = parse_formula(formula)?;
            let names = names_or(names, || formula_names(None, &phi));
            json::char_test(&phi, &names, &char_test(&phi, &names)?)
        }
        Command::Sat { term, formula, names } => {
            let p = terms.term(term)?;
            let phi = parse_formula(formula)?;
            let names = names_or(names, || formula_names(Some(&p), &phi));
            let d = interp(&p);
            json!({
                "process": p.to_string(),
                "formula": phi.to_string(),
                "names": json::names(&names),
                "structural": sat_structural(&d, &phi).to_string(),
                "via_test": sat_via_test(&d, &phi, &names)?,
            })
        }
        Command::Check { relation, p, q } => {
            let (p, q) = (terms.term(p)?, terms.term(q)?);
            if !p.success_names().is_empty() || !q.success_names().is_empty() {
                return Err(CliError::Usage("preorders compare processes without success names".into()));
            }
            let verdict = if relation.may {
                decide_may(&p, &q)
            } else if relation.must {
                decide_must(&p, &q)
            } else if relation.sim {
                check_sim(&p, &q, GameMode::Simulation)
            } else {
                check_sim(&p, &q, GameMode::FailureSimulation)
            };
            let mut v = json::verdict(&verdict);
            v["p"] = json!(p.to_string());
            v["q"] = json!(q.to_string());
            v["names"] = json::names(&name_universe(&p, &q));
            v
        }
        Command::Regress { path } => {
            let text = match path {
                Some(path) => read(path)?,
                None => regress::BUNDLED.to_string(),
            };
            return regress::run(&text);
        }
        Command::Fuzz { seed, count, size } => {
            if *size == 0 {
                return Err(CliError::Usage("size must be at least 1".into()));
            }
            return Ok(fuzz::run(*seed, *count, *size));
        }
    };
    Ok((out, false))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((value, mismatch)) => {
            if cli.pretty {
                print!("{}", json::pretty(&value));
            } else {
                println!("{}", serde_json::to_string(&value).expect("values serialise"));
            }
            if mismatch {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
