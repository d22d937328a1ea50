//! Clauses, programs and the occurrence validators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::{occurrence_counts, Term, Variable};

/// A guarded clause `Head :- Guards | Body`.
#[derive(Clone, Debug)]
pub struct Clause {
    pub head: Term,
    pub guards: Vec<Term>,
    pub body: Vec<Term>,
    /// 1-based source line of the clause start, 0 when synthesized.
    pub line: usize,
}

impl Clause {
    pub fn new(head: Term, guards: Vec<Term>, body: Vec<Term>) -> Clause {
        Clause { head, guards, body, line: 0 }
    }

    pub fn unit(head: Term) -> Clause {
        Clause::new(head, Vec::new(), Vec::new())
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        std::iter::once(&self.head).chain(self.guards.iter()).chain(self.body.iter())
    }

    pub fn indicator(&self) -> Option<(String, usize)> {
        self.head.indicator().map(|(f, n)| (f.to_string(), n))
    }
}

// Source position does not take part in equality.
impl PartialEq for Clause {
    fn eq(&self, other: &Clause) -> bool {
        self.head == other.head && self.guards == other.guards && self.body == other.body
    }
}

impl Eq for Clause {}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if self.guards.is_empty() && self.body.is_empty() {
            return f.write_str(".");
        }
        f.write_str(" :- ")?;
        if !self.guards.is_empty() {
            write_conj(f, &self.guards)?;
            f.write_str(" | ")?;
        }
        if self.body.is_empty() {
            f.write_str("true")?;
        } else {
            write_conj(f, &self.body)?;
        }
        f.write_str(".")
    }
}

fn write_conj(f: &mut fmt::Formatter<'_>, goals: &[Term]) -> fmt::Result {
    for (i, g) in goals.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{}", g)?;
    }
    Ok(())
}

/// Clauses in source order, grouped into procedures by functor and arity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub clauses: Vec<Clause>,
    procedures: BTreeMap<(String, usize), Vec<usize>>,
}

impl Program {
    pub fn new(clauses: Vec<Clause>) -> Program {
        let mut p = Program::default();
        for c in clauses {
            p.push(c);
        }
        p
    }

    pub fn push(&mut self, clause: Clause) {
        if let Some(key) = clause.indicator() {
            self.procedures.entry(key).or_default().push(self.clauses.len());
        }
        self.clauses.push(clause);
    }

    /// Appends every clause of `other` after the existing ones.
    pub fn extend(&mut self, other: &Program) {
        for c in &other.clauses {
            self.push(c.clone());
        }
    }

    /// Indices into `clauses` of the procedure for `name/arity`, in source order.
    pub fn procedure(&self, name: &str, arity: usize) -> &[usize] {
        self.procedures
            .get(&(name.to_string(), arity))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn has_procedure(&self, name: &str, arity: usize) -> bool {
        !self.procedure(name, arity).is_empty()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{}", c)?;
        }
        Ok(())
    }
}

/// A single-occurrence or pairing problem.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    /// The variable occurs more than once.
    Repeated { var: Variable, count: usize },
    /// The variable occurs but its paired variable does not.
    Unpaired { var: Variable },
}

impl Violation {
    pub fn variable(&self) -> &Variable {
        match self {
            Violation::Repeated { var, .. } | Violation::Unpaired { var } => var,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Repeated { var, count } => write!(f, "{} occurs {} times", var, count),
            Violation::Unpaired { var } => write!(f, "{} occurs without {}", var, var.paired()),
        }
    }
}

/// Every variable that occurs more than once across `terms`.
pub fn check_so<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Vec<Violation> {
    occurrence_counts(terms)
        .into_iter()
        .filter(|(_, n)| *n > 1)
        .map(|(var, count)| Violation::Repeated { var, count })
        .collect()
}

/// Readers tested by a groundness guard; such readers may be copied.
fn ground_guarded(clause: &Clause) -> BTreeSet<Variable> {
    clause
        .guards
        .iter()
        .filter_map(|g| match g {
            Term::Compound(f, args) if (f == "integer" || f == "string") && args.len() == 1 => {
                args[0].as_var().filter(|v| v.is_reader()).cloned()
            }
            _ => None,
        })
        .collect()
}

/// SO plus pairing over the whole clause. Anonymous variables are exempt, and
/// a reader tested by `integer/1` or `string/1` in the guard may repeat since
/// its value is ground by the time the body runs.
pub fn check_srsw(clause: &Clause) -> Vec<Violation> {
    let counts = occurrence_counts(clause.terms());
    let copyable = ground_guarded(clause);
    let mut out = Vec::new();
    for (var, &count) in &counts {
        if var.is_anonymous() {
            continue;
        }
        if count > 1 && !copyable.contains(var) {
            out.push(Violation::Repeated { var: var.clone(), count });
        }
        if !counts.contains_key(&var.paired()) {
            out.push(Violation::Unpaired { var: var.clone() });
        }
    }
    out
}

/// Relabels every variable of the clause with `scope`.
pub fn rename_apart(clause: &Clause, scope: u32) -> Clause {
    let mut rename = |v: &Variable| Term::Var(Variable { scope, ..v.clone() });
    Clause {
        head: clause.head.map_vars(&mut rename),
        guards: clause.guards.iter().map(|g| g.map_vars(&mut rename)).collect(),
        body: clause.body.iter().map(|g| g.map_vars(&mut rename)).collect(),
        line: clause.line,
    }
}
