//! Writer mgu, guards, builtins and committed-choice reduction.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use thiserror::Error;

use crate::program::{rename_apart, Program};
use crate::subst::{readers_counterpart, resolve, SubstError, WritersSubstitution};
use crate::term::{Const, Term, Variable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("single-occurrence violation: {0}")]
    SingleOccurrence(#[from] SubstError),
    #[error("unknown guard {0}")]
    UnknownGuard(String),
}

pub type ReaderSet = BTreeSet<Variable>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatchOutcome {
    Success(WritersSubstitution),
    Suspend(ReaderSet),
    Fail,
}

/// Matches goal `a` against renamed head `h`.
pub fn match_head(a: &Term, h: &Term) -> Result<MatchOutcome, MatchError> {
    let mut m = Matcher::default();
    m.walk(a, h)?;
    Ok(if m.hard {
        MatchOutcome::Fail
    } else if !m.conflicts.is_empty() {
        MatchOutcome::Suspend(m.conflicts)
    } else {
        MatchOutcome::Success(m.ws)
    })
}

#[derive(Default)]
struct Matcher {
    ws: WritersSubstitution,
    conflicts: ReaderSet,
    hard: bool,
}

impl Matcher {
    fn walk(&mut self, a: &Term, h: &Term) -> Result<(), MatchError> {
        match (a, h) {
            (Term::Var(x), Term::Var(y)) if x.is_writer() && y.is_writer() => self.hard = true,
            (Term::Var(x), _) if x.is_writer() => self.ws.insert(x.clone(), h.clone())?,
            (Term::Var(x), Term::Var(y)) if x.is_reader() && y.is_writer() => self.ws.insert(y.clone(), a.clone())?,
            (Term::Var(_), Term::Var(_)) => self.hard = true,
            (Term::Var(x), _) => {
                if h.contains_reader() {
                    self.hard = true;
                } else {
                    self.conflicts.insert(x.clone());
                }
            }
            (_, Term::Var(y)) if y.is_writer() => self.ws.insert(y.clone(), a.clone())?,
            (_, Term::Var(_)) => self.hard = true,
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    self.hard = true;
                } else {
                    for (x, y) in xs.iter().zip(ys) {
                        self.walk(x, y)?;
                    }
                }
            }
            (x, y) => {
                if x != y {
                    self.hard = true;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuardOutcome {
    True,
    Suspend(ReaderSet),
    Fail,
}

fn readers_in(t: &Term) -> ReaderSet {
    let mut out = ReaderSet::new();
    t.visit_vars(&mut |v| {
        if v.is_reader() {
            out.insert(v.clone());
        }
    });
    out
}

/// Integer value of an arithmetic expression. `Err(Some(w))` means unknown
/// readers `w`; `Err(None)` means the expression can never evaluate.
fn arith(t: &Term) -> Result<BigInt, Option<ReaderSet>> {
    match t {
        Term::Const(Const::Int(n)) => Ok(n.clone()),
        Term::Var(v) if v.is_reader() => Err(Some(ReaderSet::from([v.clone()]))),
        Term::Compound(f, args) if args.len() == 2 && matches!(f.as_str(), "+" | "-" | "*" | "//") => {
            let (l, r) = (arith(&args[0]), arith(&args[1]));
            match (l, r) {
                (Ok(l), Ok(r)) => match f.as_str() {
                    "+" => Ok(l + r),
                    "-" => Ok(l - r),
                    "*" => Ok(l * r),
                    _ if r.is_zero() => Err(None),
                    _ => Ok(l.div_floor(&r)),
                },
                (Err(None), _) | (_, Err(None)) => Err(None),
                (Err(Some(mut a)), Err(Some(b))) => {
                    a.extend(b);
                    Err(Some(a))
                }
                (Err(Some(a)), _) | (_, Err(Some(a))) => Err(Some(a)),
            }
        }
        _ => Err(None),
    }
}

fn is_arith(t: &Term) -> bool {
    matches!(t, Term::Compound(f, args) if args.len() == 2 && matches!(f.as_str(), "+" | "-" | "*" | "//"))
}

fn eval_guard(g: &Term) -> Result<GuardOutcome, MatchError> {
    let suspend_or_fail = |t: &Term| match t {
        Term::Var(v) if v.is_reader() => GuardOutcome::Suspend(ReaderSet::from([v.clone()])),
        _ => GuardOutcome::Fail,
    };
    let (name, args) = match g {
        Term::Compound(f, args) => (f.as_str(), args.as_slice()),
        Term::Const(Const::Atom(a)) => (a.as_str(), &[][..]),
        _ => return Err(MatchError::UnknownGuard(g.to_string())),
    };
    Ok(match (name, args) {
        ("true", []) => GuardOutcome::True,
        ("known", [t]) => match t {
            Term::Var(_) => suspend_or_fail(t),
            _ => GuardOutcome::True,
        },
        ("integer", [t]) => match t {
            Term::Const(Const::Int(_)) => GuardOutcome::True,
            _ => suspend_or_fail(t),
        },
        ("string", [t]) => match t {
            Term::Const(Const::Atom(_)) => GuardOutcome::True,
            _ => suspend_or_fail(t),
        },
        ("=:=" | "<" | ">", [l, r]) => match (arith(l), arith(r)) {
            (Ok(l), Ok(r)) => {
                let holds = match name {
                    "=:=" => l == r,
                    "<" => l < r,
                    _ => l > r,
                };
                if holds {
                    GuardOutcome::True
                } else {
                    GuardOutcome::Fail
                }
            }
            (Err(None), _) | (_, Err(None)) => GuardOutcome::Fail,
            (Err(Some(mut a)), Err(Some(b))) => {
                a.extend(b);
                GuardOutcome::Suspend(a)
            }
            (Err(Some(a)), _) | (_, Err(Some(a))) => GuardOutcome::Suspend(a),
        },
        ("==", [l, r]) => {
            if l.is_ground() && r.is_ground() {
                if l == r {
                    GuardOutcome::True
                } else {
                    GuardOutcome::Fail
                }
            } else {
                let mut w = readers_in(l);
                w.extend(readers_in(r));
                if w.is_empty() {
                    GuardOutcome::Fail
                } else {
                    GuardOutcome::Suspend(w)
                }
            }
        }
        _ => return Err(MatchError::UnknownGuard(format!("{}/{}", name, args.len()))),
    })
}

/// Evaluates a guard sequence whose head bindings are already applied.
pub fn eval_guards(gs: &[Term]) -> Result<GuardOutcome, MatchError> {
    let mut waiting = ReaderSet::new();
    for g in gs {
        match eval_guard(g)? {
            GuardOutcome::True => {}
            GuardOutcome::Fail => return Ok(GuardOutcome::Fail),
            GuardOutcome::Suspend(w) => waiting.extend(w),
        }
    }
    Ok(if waiting.is_empty() { GuardOutcome::True } else { GuardOutcome::Suspend(waiting) })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BuiltinOutcome {
    Done(WritersSubstitution),
    Suspend(ReaderSet),
    Fail,
    NotBuiltin,
}

/// Handles `X := Expr`.
pub fn eval_builtin(g: &Term) -> BuiltinOutcome {
    let Term::Compound(f, args) = g else {
        return BuiltinOutcome::NotBuiltin;
    };
    if f != ":=" || args.len() != 2 {
        return BuiltinOutcome::NotBuiltin;
    }
    let Term::Var(target) = &args[0] else {
        return BuiltinOutcome::Fail;
    };
    if !target.is_writer() {
        return BuiltinOutcome::Fail;
    }
    let value = if is_arith(&args[1]) {
        match arith(&args[1]) {
            Ok(n) => Term::int(n),
            Err(Some(w)) => return BuiltinOutcome::Suspend(w),
            Err(None) => return BuiltinOutcome::Fail,
        }
    } else {
        args[1].clone()
    };
    let mut ws = WritersSubstitution::new();
    match ws.insert(target.clone(), value) {
        Ok(()) => BuiltinOutcome::Done(ws),
        Err(_) => BuiltinOutcome::Fail,
    }
}

/// Monotone source of fresh renaming scopes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScopeCounter(u32);

impl ScopeCounter {
    pub fn new() -> ScopeCounter {
        ScopeCounter(0)
    }

    /// Starts after `last`, for resuming a computation.
    pub fn starting_after(last: u32) -> ScopeCounter {
        ScopeCounter(last)
    }

    pub fn fresh(&mut self) -> u32 {
        self.0 += 1;
        self.0
    }

    pub fn last(&self) -> u32 {
        self.0
    }
}

impl Default for ScopeCounter {
    fn default() -> Self {
        ScopeCounter::new()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReduceResult {
    Reduced {
        /// Committed clause, `None` for a builtin.
        clause_index: Option<usize>,
        /// Renaming scope of the committed clause.
        scope: u32,
        /// Body with the readers counterpart of `ws` applied.
        body: Vec<Term>,
        /// Body exactly as renamed.
        raw_body: Vec<Term>,
        ws: WritersSubstitution,
    },
    Suspended(ReaderSet),
    Failed,
}

/// First-clause committed reduction of `a`.
pub fn reduce_goal(a: &Term, p: &Program, scopes: &mut ScopeCounter) -> Result<ReduceResult, MatchError> {
    match eval_builtin(a) {
        BuiltinOutcome::Done(ws) => {
            return Ok(ReduceResult::Reduced { clause_index: None, scope: 0, body: vec![], raw_body: vec![], ws })
        }
        BuiltinOutcome::Suspend(w) => return Ok(ReduceResult::Suspended(w)),
        BuiltinOutcome::Fail => return Ok(ReduceResult::Failed),
        BuiltinOutcome::NotBuiltin => {}
    }
    let Some((name, arity)) = a.indicator() else {
        return Ok(ReduceResult::Failed);
    };
    let mut waiting = ReaderSet::new();
    for &idx in p.procedure(name, arity) {
        let scope = scopes.fresh();
        let clause = rename_apart(&p.clauses[idx], scope);
        match match_head(a, &clause.head)? {
            MatchOutcome::Fail => {}
            MatchOutcome::Suspend(w) => waiting.extend(w),
            MatchOutcome::Success(ws) => {
                let rs = readers_counterpart(&ws);
                let value_of = |v: &Variable| rs.get(v);
                let guards: Vec<Term> = clause.guards.iter().map(|g| resolve(g, &value_of)).collect();
                match eval_guards(&guards)? {
                    GuardOutcome::Fail => {}
                    GuardOutcome::Suspend(w) => waiting.extend(w),
                    GuardOutcome::True => {
                        let body = clause.body.iter().map(|g| resolve(g, &value_of)).collect();
                        return Ok(ReduceResult::Reduced {
                            clause_index: Some(idx),
                            scope,
                            body,
                            raw_body: clause.body,
                            ws,
                        });
                    }
                }
            }
        }
    }
    Ok(if waiting.is_empty() { ReduceResult::Failed } else { ReduceResult::Suspended(waiting) })
}
