//! The nondeterministic transition system with separate Reduce and
//! Communicate steps, used to check the deterministic engine.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::dglp::{dglp_run, EngineError, RunStatus, StepEvent};
use crate::matching::{eval_guards, match_head, reduce_goal, GuardOutcome, MatchOutcome, ReduceResult, ScopeCounter};
use crate::outcome::{canonicalize, Outcome};
use crate::program::{rename_apart, Program};
use crate::subst::{apply_substitution, readers_counterpart, resolve, ReadersSubstitution};
use crate::term::{Term, Variable};

/// A resolvent `(G, σ)`. Goals carry spawn identifiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    pub goals: Vec<(u64, Term)>,
    pub sigma: ReadersSubstitution,
    pub scopes: ScopeCounter,
    next_goal: u64,
}

impl OracleConfig {
    pub fn initial(g0: &[Term]) -> OracleConfig {
        OracleConfig {
            goals: g0.iter().cloned().enumerate().map(|(i, t)| (i as u64, t)).collect(),
            sigma: ReadersSubstitution::new(),
            scopes: ScopeCounter::new(),
            next_goal: g0.len() as u64,
        }
    }

    fn resolve(&self, t: &Term) -> Term {
        resolve(t, &|v: &Variable| self.sigma.get(v))
    }

    pub fn outcome(&self, g0: &[Term]) -> Outcome {
        Outcome {
            head: g0.iter().map(|t| self.resolve(t)).collect(),
            body: self.goals.iter().map(|(_, t)| self.resolve(t)).collect(),
        }
    }

    fn has_reader(&self, r: &Variable) -> bool {
        self.goals.iter().any(|(_, t)| {
            let mut hit = false;
            t.visit_vars(&mut |v| hit |= v == r);
            hit
        })
    }

    /// Renaming-invariant key: bindings visible from the initial goal, the
    /// goals, and pending assignments to readers that occur in goals.
    fn key(&self, g0: &[Term]) -> Outcome {
        let mut body: Vec<Term> = self.goals.iter().map(|(_, t)| t.clone()).collect();
        for (v, t) in self.sigma.iter() {
            if self.has_reader(v) {
                body.push(Term::Compound(":=".into(), vec![Term::Var(v.clone()), t.clone()]));
            }
        }
        canonicalize(&Outcome { head: g0.iter().map(|t| self.resolve(t)).collect(), body })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label {
    Reduce { goal: u64, clause_index: Option<usize> },
    Communicate { reader: Variable },
}

/// Every enabled transition with its successor configuration.
pub fn glp_successors(c: &OracleConfig, p: &Program) -> Result<Vec<(Label, OracleConfig)>, EngineError> {
    let mut out = Vec::new();
    for (pos, (id, goal)) in c.goals.iter().enumerate() {
        let mut scopes = c.scopes.clone();
        if let ReduceResult::Reduced { clause_index, raw_body, ws, .. } = reduce_goal(goal, p, &mut scopes)? {
            let mut next = c.clone();
            next.scopes = scopes;
            next.goals.remove(pos);
            for t in raw_body {
                next.goals.push((next.next_goal, apply_substitution(&t, &ws)));
                next.next_goal += 1;
            }
            for (v, t) in readers_counterpart(&ws).iter() {
                next.sigma.insert(v.clone(), t.clone()).map_err(EngineError::Reassigned)?;
            }
            out.push((Label::Reduce { goal: *id, clause_index }, next));
        }
    }
    for (reader, value) in c.sigma.iter() {
        if c.has_reader(reader) {
            let mut next = c.clone();
            let single = ReadersSubstitution::from_pairs([(reader.clone(), value.clone())])
                .map_err(EngineError::Reassigned)?;
            for (_, t) in next.goals.iter_mut() {
                *t = apply_substitution(t, &single);
            }
            out.push((Label::Communicate { reader: reader.clone() }, next));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    /// Canonical outcomes of all terminal runs found.
    pub outcomes: BTreeSet<Outcome>,
    /// Clause-index multisets of the terminal runs found.
    pub reductions: BTreeSet<Vec<Option<usize>>>,
    /// False when the depth bound cut off some branch.
    pub complete: bool,
    /// Length of the longest terminal run found.
    pub max_steps: usize,
}

/// States on the current search path, with the reductions taken so far.
#[derive(Default)]
struct Path {
    open: BTreeMap<Outcome, usize>,
    reductions: Vec<Option<usize>>,
}

/// Depth-first search over all runs from `g0` of at most `depth_bound` steps.
pub fn enumerate_outcomes(g0: &[Term], p: &Program, depth_bound: usize) -> Result<Enumeration, EngineError> {
    let mut e = Enumeration { outcomes: BTreeSet::new(), reductions: BTreeSet::new(), complete: true, max_steps: 0 };
    let mut seen: BTreeMap<Outcome, usize> = BTreeMap::new();
    let mut path = Path::default();
    dfs(&OracleConfig::initial(g0), g0, p, 0, depth_bound, &mut seen, &mut path, &mut e)?;
    Ok(e)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    c: &OracleConfig,
    g0: &[Term],
    p: &Program,
    depth: usize,
    bound: usize,
    seen: &mut BTreeMap<Outcome, usize>,
    path: &mut Path,
    e: &mut Enumeration,
) -> Result<(), EngineError> {
    let key = c.key(g0);
    if let Some(&at) = path.open.get(&key) {
        // Back to a state on the current path after a reduction: some run
        // never terminates, which the depth bound would have cut off.
        if path.reductions.len() > at {
            e.complete = false;
        }
        return Ok(());
    }
    if seen.get(&key).is_some_and(|&d| d <= depth) {
        return Ok(());
    }
    path.open.insert(key.clone(), path.reductions.len());
    let succ = glp_successors(c, p)?;
    if succ.is_empty() {
        e.outcomes.insert(canonicalize(&c.outcome(g0)));
        let mut r = path.reductions.clone();
        r.sort();
        e.reductions.insert(r);
        e.max_steps = e.max_steps.max(depth);
        path.open.remove(&key);
        seen.insert(key, depth);
        return Ok(());
    }
    if depth >= bound {
        e.complete = false;
        path.open.remove(&key);
        seen.insert(key, depth);
        return Ok(());
    }
    for (label, next) in succ {
        let reduce = match label {
            Label::Reduce { clause_index, .. } => Some(clause_index),
            Label::Communicate { .. } => None,
        };
        if let Some(ci) = reduce {
            path.reductions.push(ci);
        }
        dfs(&next, g0, p, depth + 1, bound, seen, path, e)?;
        if reduce.is_some() {
            path.reductions.pop();
        }
    }
    path.open.remove(&key);
    seen.insert(key, depth);
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Inconclusive,
    Mismatch,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Mismatch => "MISMATCH",
        })
    }
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub verdict: Verdict,
    pub oracle: Enumeration,
    pub dglp_outcome: Outcome,
    pub dglp_reductions: Vec<Option<usize>>,
    /// Every terminal oracle run used the same clauses as the engine.
    pub reductions_match: bool,
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.verdict)?;
        writeln!(f, "dglp:   {}", self.dglp_outcome.canonical())?;
        for o in &self.oracle.outcomes {
            writeln!(f, "oracle: {}", o)?;
        }
        if !self.oracle.complete {
            writeln!(f, "oracle enumeration truncated")?;
        }
        write!(f, "reductions match: {}", self.reductions_match)
    }
}

pub fn check_equivalence(p: &Program, g0: &[Term], depth_bound: usize) -> Result<EquivalenceReport, EngineError> {
    let run = dglp_run(g0, p, depth_bound.saturating_mul(64).max(1000))?;
    let mut report = equivalence_with(&run.outcome(), clause_multiset(&run.trace), p, g0, depth_bound)?;
    if run.status == RunStatus::StepLimit {
        report.verdict = Verdict::Inconclusive;
    }
    Ok(report)
}

/// Compares a given engine outcome against the oracle.
pub fn equivalence_with(
    dglp_outcome: &Outcome,
    dglp_reductions: Vec<Option<usize>>,
    p: &Program,
    g0: &[Term],
    depth_bound: usize,
) -> Result<EquivalenceReport, EngineError> {
    let oracle = enumerate_outcomes(g0, p, depth_bound)?;
    let canon = dglp_outcome.canonical();
    let verdict = if !oracle.complete {
        Verdict::Inconclusive
    } else if oracle.outcomes.len() == 1 && oracle.outcomes.contains(&canon) {
        Verdict::Pass
    } else {
        Verdict::Mismatch
    };
    let reductions_match = oracle.reductions.iter().all(|r| *r == dglp_reductions);
    Ok(EquivalenceReport { verdict, oracle, dglp_outcome: dglp_outcome.clone(), dglp_reductions, reductions_match })
}

/// Sorted clause indices of every Reduce in a trace.
pub fn clause_multiset(trace: &[StepEvent]) -> Vec<Option<usize>> {
    let mut out: Vec<Option<usize>> = trace
        .iter()
        .filter_map(|e| match e {
            StepEvent::Reduced { clause_index, .. } => Some(*clause_index),
            _ => None,
        })
        .collect();
    out.sort();
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionReport {
    pub steps: usize,
    /// First failing step and the reason.
    pub violation: Option<(usize, String)>,
}

impl ProjectionReport {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
    }
}

/// Replays an engine trace against the abstract system: each Reduce must be
/// an abstract Reduce by the first applicable clause followed by the
/// Communicates the engine applies eagerly; Suspend and Fail are stutters.
pub fn validate_projection(g0: &[Term], trace: &[StepEvent], p: &Program) -> ProjectionReport {
    let mut goals: BTreeMap<u64, Term> = g0.iter().cloned().enumerate().map(|(i, t)| (i as u64, t)).collect();
    let mut sigma = ReadersSubstitution::new();
    for (step, event) in trace.iter().enumerate() {
        if let Err(msg) = replay_step(&mut goals, &mut sigma, event, p) {
            return ProjectionReport { steps: trace.len(), violation: Some((step, msg)) };
        }
    }
    ProjectionReport { steps: trace.len(), violation: None }
}

fn replay_step(
    goals: &mut BTreeMap<u64, Term>,
    sigma: &mut ReadersSubstitution,
    event: &StepEvent,
    p: &Program,
) -> Result<(), String> {
    let current = |goals: &BTreeMap<u64, Term>, sigma: &ReadersSubstitution, id: u64| {
        goals.get(&id).map(|t| resolve(t, &|v: &Variable| sigma.get(v)))
    };
    let check_goal = |goals: &BTreeMap<u64, Term>, sigma: &ReadersSubstitution, g: &crate::dglp::Goal| {
        match current(goals, sigma, g.id) {
            Some(t) if t == g.term => Ok(t),
            Some(t) => Err(format!("goal {} is {} in the abstract resolvent, engine has {}", g.id, t, g.term)),
            None => Err(format!("goal {} is not in the abstract resolvent", g.id)),
        }
    };
    match event {
        StepEvent::Idle => Ok(()),
        StepEvent::Suspended { goal, .. } | StepEvent::Failed { goal } => {
            let t = check_goal(goals, sigma, goal)?;
            match reduce_goal(&t, p, &mut ScopeCounter::starting_after(u32::MAX / 2)) {
                Ok(ReduceResult::Reduced { .. }) => Err(format!("{} is reducible but was not reduced", t)),
                Ok(_) => Ok(()),
                Err(e) => Err(e.to_string()),
            }
        }
        StepEvent::Reduced { goal, clause_index, scope, spawned, ws, .. } => {
            let a = check_goal(goals, sigma, goal)?;
            let (derived_ws, raw_body) = match clause_index {
                None => match reduce_goal(&a, p, &mut ScopeCounter::new()) {
                    Ok(ReduceResult::Reduced { clause_index: None, ws, raw_body, .. }) => (ws, raw_body),
                    _ => return Err(format!("{} is not an applicable builtin", a)),
                },
                Some(ci) => rederive(&a, p, *ci, *scope)?,
            };
            if &derived_ws != ws {
                return Err(format!("substitution {} does not match rederived {}", ws, derived_ws));
            }
            goals.remove(&goal.id);
            for (v, t) in readers_counterpart(ws).iter() {
                sigma.insert(v.clone(), t.clone()).map_err(|e| e.to_string())?;
            }
            if spawned.len() != raw_body.len() {
                return Err(format!("{} goals spawned, clause body has {}", spawned.len(), raw_body.len()));
            }
            for (g, t) in spawned.iter().zip(raw_body) {
                goals.insert(g.id, apply_substitution(&t, ws));
                check_goal(goals, sigma, g)?;
            }
            Ok(())
        }
    }
}

/// Re-derives the writer mgu of `a` with clause `ci` renamed to `scope`,
/// checking that no earlier clause of the procedure applies.
pub fn rederive(
    a: &Term,
    p: &Program,
    ci: usize,
    scope: u32,
) -> Result<(crate::subst::WritersSubstitution, Vec<Term>), String> {
    let (name, arity) = a.indicator().ok_or_else(|| format!("{} is not callable", a))?;
    let procedure = p.procedure(name, arity);
    if !procedure.contains(&ci) {
        return Err(format!("clause {} does not belong to {}/{}", ci + 1, name, arity));
    }
    let try_clause = |idx: usize, scope: u32| -> Result<Option<(crate::subst::WritersSubstitution, Vec<Term>)>, String> {
        let c = rename_apart(&p.clauses[idx], scope);
        match match_head(a, &c.head).map_err(|e| e.to_string())? {
            MatchOutcome::Success(ws) => {
                let rs = readers_counterpart(&ws);
                let guards: Vec<Term> = c.guards.iter().map(|g| resolve(g, &|v: &Variable| rs.get(v))).collect();
                match eval_guards(&guards).map_err(|e| e.to_string())? {
                    GuardOutcome::True => Ok(Some((ws, c.body))),
                    _ => Ok(None),
                }
            }
            _ => Ok(None),
        }
    };
    for &idx in procedure.iter().take_while(|&&i| i != ci) {
        if try_clause(idx, u32::MAX - idx as u32)?.is_some() {
            return Err(format!("clause {} applies before clause {}", idx + 1, ci + 1));
        }
    }
    try_clause(ci, scope)?.ok_or_else(|| format!("clause {} does not apply to {}", ci + 1, a))
}
