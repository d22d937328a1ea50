//! The deterministic single-agent engine.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::matching::{reduce_goal, MatchError, ReaderSet, ReduceResult, ScopeCounter};
use crate::outcome::Outcome;
use crate::program::{check_so, Program, Violation};
use crate::subst::{readers_counterpart, resolve, ReadersSubstitution, SubstError, WritersSubstitution};
use crate::term::{Term, Variable};

pub const DEFAULT_MAX_STEPS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("writer assigned twice: {0}")]
    Reassigned(#[from] SubstError),
    #[error("initial goal violates single occurrence: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))]
    InitialGoal(Vec<Violation>),
}

/// A goal with the identifier it received when spawned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Goal {
    pub id: u64,
    pub term: Term,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DConfig {
    pub q: VecDeque<Goal>,
    pub s: Vec<(Goal, ReaderSet)>,
    pub f: Vec<Goal>,
    pub sigma_r: ReadersSubstitution,
    pub writer_store: WritersSubstitution,
    pub scopes: ScopeCounter,
    next_goal: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepEvent {
    Reduced {
        goal: Goal,
        clause_index: Option<usize>,
        scope: u32,
        spawned: Vec<Goal>,
        reactivated: Vec<Goal>,
        ws: WritersSubstitution,
    },
    Suspended { goal: Goal, readers: ReaderSet },
    Failed { goal: Goal },
    Idle,
}

impl fmt::Display for StepEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepEvent::Reduced { goal, clause_index, ws, .. } => {
                let how = clause_index.map(|i| format!("clause {}", i + 1)).unwrap_or_else(|| "builtin".into());
                write!(f, "reduce {} by {} {}", goal.term, how, ws)
            }
            StepEvent::Suspended { goal, readers } => {
                write!(f, "suspend {} on {}", goal.term, fmt_readers(readers))
            }
            StepEvent::Failed { goal } => write!(f, "fail {}", goal.term),
            StepEvent::Idle => f.write_str("idle"),
        }
    }
}

pub fn fmt_readers(readers: &ReaderSet) -> String {
    let names: Vec<String> = readers.iter().map(|r| r.to_string()).collect();
    format!("{{{}}}", names.join(","))
}

impl DConfig {
    pub fn new(goals: impl IntoIterator<Item = Term>) -> DConfig {
        let mut c = DConfig::default();
        for g in goals {
            c.enqueue(g);
        }
        c
    }

    /// Appends a freshly spawned goal to the queue tail.
    pub fn enqueue(&mut self, term: Term) -> Goal {
        let goal = Goal { id: self.next_goal, term };
        self.next_goal += 1;
        self.q.push_back(goal.clone());
        goal
    }

    pub fn value_of(&self, reader: &Variable) -> Option<&Term> {
        self.writer_store.get(&reader.as_writer())
    }

    /// Dereferences every assigned reader in `t`.
    pub fn resolve(&self, t: &Term) -> Term {
        resolve(t, &|v: &Variable| self.value_of(v))
    }

    pub fn is_idle(&self) -> bool {
        self.q.is_empty()
    }

    /// Records `ws`, propagates the readers counterpart into every goal and
    /// returns the reactivated goals in suspension order. The caller decides
    /// where they go; they are already removed from `s`.
    pub fn assign(&mut self, ws: &WritersSubstitution) -> Result<Vec<Goal>, EngineError> {
        for (v, t) in ws.iter() {
            self.writer_store.insert(v.clone(), t.clone())?;
        }
        let rs = readers_counterpart(ws);
        for (v, t) in rs.iter() {
            self.sigma_r.insert(v.clone(), t.clone())?;
        }
        let store = &self.writer_store;
        let value_of = |v: &Variable| store.get(&v.as_writer());
        let touched = |t: &Term| {
            let mut hit = false;
            t.visit_vars(&mut |v| hit |= v.is_reader() && store.contains(&v.as_writer()));
            hit
        };
        for g in self.q.iter_mut().chain(self.f.iter_mut()).chain(self.s.iter_mut().map(|(g, _)| g)) {
            if touched(&g.term) {
                g.term = resolve(&g.term, &value_of);
            }
        }
        let (woken, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut self.s)
            .into_iter()
            .partition(|(_, w)| w.iter().any(|r| rs.contains(r)));
        self.s = kept;
        Ok(woken.into_iter().map(|(g, _)| g).collect())
    }

    /// Goals of all three partitions, with the accumulated readers substitution.
    pub fn project_sigma(&self) -> (Vec<Term>, ReadersSubstitution) {
        (self.all_goals().map(|g| g.term.clone()).collect(), self.sigma_r.clone())
    }

    pub fn all_goals(&self) -> impl Iterator<Item = &Goal> {
        self.q.iter().chain(self.s.iter().map(|(g, _)| g)).chain(self.f.iter())
    }

    /// Source-scope readers with a known value, as `(X?, value)`.
    pub fn binding_report(&self) -> Vec<(Variable, Term)> {
        self.writer_store
            .domain()
            .filter(|v| v.scope == 0 && !v.is_anonymous())
            .map(|v| (v.as_reader(), self.resolve(&Term::Var(v.as_reader()))))
            .collect()
    }

    /// Suspended goals with the readers blocking them.
    pub fn deadlock_report(&self) -> Vec<String> {
        self.s
            .iter()
            .map(|(g, w)| format!("{} blocked on {}", g.term, fmt_readers(w)))
            .collect()
    }
}

/// One transition: pop the head goal and reduce, suspend or fail it.
pub fn dglp_step(c: &mut DConfig, p: &Program) -> Result<StepEvent, EngineError> {
    let Some(goal) = c.q.pop_front() else {
        return Ok(StepEvent::Idle);
    };
    match reduce_goal(&goal.term, p, &mut c.scopes)? {
        ReduceResult::Reduced { clause_index, scope, body, ws, .. } => {
            let reactivated = c.assign(&ws)?;
            let spawned: Vec<Goal> = body.into_iter().map(|t| c.enqueue(c.resolve(&t))).collect();
            c.q.extend(reactivated.iter().cloned());
            Ok(StepEvent::Reduced { goal, clause_index, scope, spawned, reactivated, ws })
        }
        ReduceResult::Suspended(readers) => {
            c.s.push((goal.clone(), readers.clone()));
            Ok(StepEvent::Suspended { goal, readers })
        }
        ReduceResult::Failed => {
            c.f.push(goal.clone());
            Ok(StepEvent::Failed { goal })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Terminal,
    Deadlock,
    StepLimit,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Terminal => "terminal",
            RunStatus::Deadlock => "deadlock",
            RunStatus::StepLimit => "step_limit",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Run {
    pub initial: Vec<Term>,
    pub trace: Vec<StepEvent>,
    pub config: DConfig,
    pub status: RunStatus,
}

impl Run {
    pub fn outcome(&self) -> Outcome {
        outcome(&self.initial, &self.config)
    }
}

/// Runs from `g0` until the queue empties or `max_steps` transitions.
pub fn dglp_run(g0: &[Term], p: &Program, max_steps: usize) -> Result<Run, EngineError> {
    let violations = check_so(g0);
    if !violations.is_empty() {
        return Err(EngineError::InitialGoal(violations));
    }
    let mut config = DConfig::new(g0.iter().cloned());
    let mut trace = Vec::new();
    while !config.is_idle() && trace.len() < max_steps {
        trace.push(dglp_step(&mut config, p)?);
    }
    let status = if !config.is_idle() {
        RunStatus::StepLimit
    } else if config.s.is_empty() {
        RunStatus::Terminal
    } else {
        RunStatus::Deadlock
    };
    Ok(Run { initial: g0.to_vec(), trace, config, status })
}

/// `(G0 :- Gn)` with the accumulated readers substitution applied.
pub fn outcome(g0: &[Term], c: &DConfig) -> Outcome {
    Outcome {
        head: g0.iter().map(|t| c.resolve(t)).collect(),
        body: c.all_goals().map(|g| c.resolve(&g.term)).collect(),
    }
}
