//! Terms and paired reader/writer variables.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;

/// Functor used for list cells `[H|T]`.
pub const LIST_FUNCTOR: &str = ".";

/// Which half of a variable pair an occurrence is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Writer,
    Reader,
}

impl Sort {
    pub fn opposite(self) -> Sort {
        match self {
            Sort::Writer => Sort::Reader,
            Sort::Reader => Sort::Writer,
        }
    }
}

/// A variable occurrence. Two variables with the same name and scope but
/// opposite sorts form one pair.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable {
    pub name: String,
    pub scope: u32,
    pub sort: Sort,
}

impl Variable {
    pub fn writer(name: impl Into<String>, scope: u32) -> Variable {
        Variable { name: name.into(), scope, sort: Sort::Writer }
    }

    pub fn reader(name: impl Into<String>, scope: u32) -> Variable {
        Variable { name: name.into(), scope, sort: Sort::Reader }
    }

    /// The other half of the pair.
    pub fn paired(&self) -> Variable {
        Variable { name: self.name.clone(), scope: self.scope, sort: self.sort.opposite() }
    }

    pub fn as_writer(&self) -> Variable {
        Variable { sort: Sort::Writer, ..self.clone() }
    }

    pub fn as_reader(&self) -> Variable {
        Variable { sort: Sort::Reader, ..self.clone() }
    }

    pub fn is_writer(&self) -> bool {
        self.sort == Sort::Writer
    }

    pub fn is_reader(&self) -> bool {
        self.sort == Sort::Reader
    }

    /// Anonymous variables (`_`, `_?` and generated `_N` names) are exempt
    /// from pairing checks.
    pub fn is_anonymous(&self) -> bool {
        self.name.starts_with('_')
    }

    /// Identity of the pair, ignoring sort.
    pub fn pair_key(&self) -> (String, u32) {
        (self.name.clone(), self.scope)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if self.is_reader() {
            f.write_str("?")?;
        }
        if self.scope != 0 {
            write!(f, "@{}", self.scope)?;
        }
        Ok(())
    }
}

/// Atomic values.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Const {
    Int(BigInt),
    /// Atoms and strings share one representation.
    Atom(String),
    Nil,
}

/// A global link endpoint, `_w(p,i)` or `_r(p,i)`. Only legal inside message
/// payloads and as the link argument of a watcher goal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GlobalName {
    pub sort: Sort,
    pub agent: String,
    pub index: u64,
}

impl GlobalName {
    pub fn writer(agent: impl Into<String>, index: u64) -> GlobalName {
        GlobalName { sort: Sort::Writer, agent: agent.into(), index }
    }

    pub fn reader(agent: impl Into<String>, index: u64) -> GlobalName {
        GlobalName { sort: Sort::Reader, agent: agent.into(), index }
    }

    pub fn is_serializer(&self) -> bool {
        self.sort == Sort::Writer && self.index == 0
    }
}

impl fmt::Display for GlobalName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.sort {
            Sort::Writer => "_w",
            Sort::Reader => "_r",
        };
        write!(f, "{}({},{})", tag, fmt_atom(&self.agent), self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Const),
    Var(Variable),
    /// Functor and a non-empty argument list.
    Compound(String, Vec<Term>),
    Global(GlobalName),
}

impl Term {
    pub fn atom(s: impl Into<String>) -> Term {
        Term::Const(Const::Atom(s.into()))
    }

    pub fn int(n: impl Into<BigInt>) -> Term {
        Term::Const(Const::Int(n.into()))
    }

    pub fn nil() -> Term {
        Term::Const(Const::Nil)
    }

    pub fn writer(name: &str) -> Term {
        Term::Var(Variable::writer(name, 0))
    }

    pub fn reader(name: &str) -> Term {
        Term::Var(Variable::reader(name, 0))
    }

    /// Builds `f(args)`, collapsing to an atom when `args` is empty.
    pub fn app(functor: impl Into<String>, args: Vec<Term>) -> Term {
        let functor = functor.into();
        if args.is_empty() {
            Term::atom(functor)
        } else {
            Term::Compound(functor, args)
        }
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::Compound(LIST_FUNCTOR.to_string(), vec![head, tail])
    }

    /// A proper list of `items` ending in `tail`.
    pub fn list_with_tail(items: Vec<Term>, tail: Term) -> Term {
        items.into_iter().rev().fold(tail, |acc, t| Term::cons(t, acc))
    }

    pub fn list(items: Vec<Term>) -> Term {
        Term::list_with_tail(items, Term::nil())
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_writer(&self) -> bool {
        matches!(self, Term::Var(v) if v.is_writer())
    }

    pub fn is_reader(&self) -> bool {
        matches!(self, Term::Var(v) if v.is_reader())
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Term::Const(Const::Int(n)) => Some(n),
            _ => None,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Term::Const(Const::Atom(a)) => Some(a),
            _ => None,
        }
    }

    /// Functor name and arity of a callable term. Atoms count as arity 0.
    pub fn indicator(&self) -> Option<(&str, usize)> {
        match self {
            Term::Compound(f, args) => Some((f, args.len())),
            Term::Const(Const::Atom(a)) => Some((a, 0)),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    /// Splits a list cell into head and tail.
    pub fn as_cons(&self) -> Option<(&Term, &Term)> {
        match self {
            Term::Compound(f, args) if f == LIST_FUNCTOR && args.len() == 2 => Some((&args[0], &args[1])),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        let mut ground = true;
        self.visit_vars(&mut |_| ground = false);
        ground
    }

    pub fn contains_reader(&self) -> bool {
        let mut found = false;
        self.visit_vars(&mut |v| found |= v.is_reader());
        found
    }

    pub fn contains_global(&self) -> bool {
        match self {
            Term::Global(_) => true,
            Term::Compound(_, args) => args.iter().any(Term::contains_global),
            _ => false,
        }
    }

    /// Calls `f` on every variable leaf, left to right.
    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a Variable)) {
        match self {
            Term::Var(v) => f(v),
            Term::Compound(_, args) => {
                for a in args {
                    a.visit_vars(f);
                }
            }
            _ => {}
        }
    }

    pub fn vars(&self) -> Vec<&Variable> {
        let mut out = Vec::new();
        self.visit_vars(&mut |v| out.push(v));
        out
    }

    /// Rebuilds the term bottom-up, replacing each variable by `f(v)`.
    pub fn map_vars(&self, f: &mut impl FnMut(&Variable) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Compound(func, args) => {
                Term::Compound(func.clone(), args.iter().map(|a| a.map_vars(f)).collect())
            }
            other => other.clone(),
        }
    }

    /// Items of a proper or partial list and its final tail.
    pub fn list_items(&self) -> (Vec<&Term>, &Term) {
        let mut items = Vec::new();
        let mut cur = self;
        while let Some((h, t)) = cur.as_cons() {
            items.push(h);
            cur = t;
        }
        (items, cur)
    }
}

impl From<Variable> for Term {
    fn from(v: Variable) -> Term {
        Term::Var(v)
    }
}

/// Counts every variable occurrence across a set of terms.
pub fn occurrence_counts<'a>(terms: impl IntoIterator<Item = &'a Term>) -> BTreeMap<Variable, usize> {
    let mut counts = BTreeMap::new();
    for t in terms {
        t.visit_vars(&mut |v| *counts.entry(v.clone()).or_insert(0) += 1);
    }
    counts
}

pub(crate) fn is_plain_atom(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    }
}

pub(crate) fn fmt_atom(s: &str) -> String {
    if is_plain_atom(s) {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

/// Infix operators with their binding strength; lower binds tighter.
pub(crate) fn infix_priority(functor: &str) -> Option<u32> {
    match functor {
        ":=" | "<" | ">" | "=:=" | "==" => Some(700),
        "+" | "-" => Some(500),
        "*" | "//" => Some(400),
        _ => None,
    }
}

fn write_arg(f: &mut fmt::Formatter<'_>, t: &Term, max: u32) -> fmt::Result {
    match t {
        Term::Compound(func, args) if args.len() == 2 && infix_priority(func).is_some_and(|p| p > max) => {
            write!(f, "({})", t)
        }
        _ => write!(f, "{}", t),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(Const::Int(n)) => write!(f, "{}", n),
            Term::Const(Const::Atom(a)) => f.write_str(&fmt_atom(a)),
            Term::Const(Const::Nil) => f.write_str("[]"),
            Term::Var(v) => write!(f, "{}", v),
            Term::Global(g) => write!(f, "{}", g),
            Term::Compound(func, args) if func == LIST_FUNCTOR && args.len() == 2 => {
                let (items, tail) = self.list_items();
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write_arg(f, item, 999)?;
                }
                match tail {
                    Term::Const(Const::Nil) => {}
                    t => {
                        f.write_str("|")?;
                        write_arg(f, t, 999)?;
                    }
                }
                f.write_str("]")
            }
            Term::Compound(func, args) if args.len() == 2 && infix_priority(func).is_some() => {
                let p = infix_priority(func).unwrap_or(0);
                // Left-associative for arithmetic; comparisons are non-associative.
                let (lmax, rmax) = if p == 700 { (p - 1, p - 1) } else { (p, p - 1) };
                write_arg(f, &args[0], lmax)?;
                write!(f, " {} ", func)?;
                write_arg(f, &args[1], rmax)
            }
            Term::Compound(func, args) => {
                f.write_str(&fmt_atom(func))?;
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write_arg(f, a, 999)?;
                }
                f.write_str(")")
            }
        }
    }
}
