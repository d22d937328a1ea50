//! Projection of a running system onto abstract multiagent configurations,
//! and the checker that every system step projects to a legal abstract step.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use glp_core::matching::{eval_builtin, BuiltinOutcome};
use glp_core::oracle::rederive;
use glp_core::subst::resolve;
use glp_core::{readers_counterpart, Program, ReadersSubstitution, Term, Variable, WritersSubstitution};

use crate::harness::{SystemConfig, SystemTrace, TraceStatus};
use crate::links::Links;
use crate::maglp::{is_system_goal, AgentId, AgentState, OutMessage};

/// Per agent: user goals by goal id, and reader assignments still travelling
/// toward the agent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PiConfig {
    pub goals: BTreeMap<AgentId, BTreeMap<u64, Term>>,
    pub sigma: BTreeMap<AgentId, ReadersSubstitution>,
}

impl PiConfig {
    /// Goal multisets only, for comparisons that ignore goal identity.
    pub fn goal_multisets(&self) -> BTreeMap<AgentId, Vec<Term>> {
        self.goals
            .iter()
            .map(|(a, gs)| {
                let mut v: Vec<Term> = gs.values().cloned().collect();
                v.sort();
                (a.clone(), v)
            })
            .collect()
    }
}

impl fmt::Display for PiConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, gs) in &self.goals {
            let gs: Vec<String> = gs.values().map(|g| g.to_string()).collect();
            let sigma = self.sigma.get(a).map(|s| s.to_string()).unwrap_or_else(|| "{}".into());
            writeln!(f, "{}: {{{}}} {}", a, gs.join(", "), sigma)?;
        }
        Ok(())
    }
}

/// The abstract transition a system event stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PiLabel {
    Stutter,
    Reduce { agent: AgentId, goal: u64, clause_index: Option<usize>, scope: u32, ws: WritersSubstitution },
    Communicate { agent: AgentId, reader: Variable, value: Term },
    ColdCallIssue { from: AgentId, to: AgentId, payload: Term },
    ColdCall { agent: AgentId, reader: Variable, payload: Term, tail: Variable },
}

impl fmt::Display for PiLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PiLabel::Stutter => f.write_str("stutter"),
            PiLabel::Reduce { agent, goal, ws, .. } => write!(f, "reduce {}#{} {}", agent, goal, ws),
            PiLabel::Communicate { agent, reader, value } => write!(f, "communicate {} {} := {}", agent, reader, value),
            PiLabel::ColdCallIssue { from, to, payload } => write!(f, "issue {} -> {} {}", from, to, payload),
            PiLabel::ColdCall { agent, reader, payload, tail } => {
                write!(f, "cold-call {} {} := [{}|{}]", agent, reader, payload, tail)
            }
        }
    }
}

fn sigma_entry(links: &Links, agent: &str, gname: &glp_core::GlobalName, value: &Term) -> (Variable, Term) {
    let key = match links.canonical_gname(gname) {
        Term::Var(v) => v.as_reader(),
        _ => Variable::reader(gname.to_string(), 0),
    };
    (key, links.canonical(agent, value))
}

fn pending_from_agent(a: &AgentState, links: &Links, out: &mut BTreeMap<AgentId, ReadersSubstitution>) {
    for g in a.resolvent.all_goals() {
        let (name, args) = match g.term.indicator() {
            Some((n @ ("global_send" | "_send"), 3)) => (n, g.term.args()),
            _ => continue,
        };
        let _ = name;
        let value = a.resolvent.resolve(&args[0]);
        let (Term::Global(gname), Some(dest)) = (&args[1], args[2].as_atom()) else { continue };
        if value.as_var().is_some() || gname.is_serializer() {
            continue;
        }
        let (k, v) = sigma_entry(links, &a.id, gname, &value);
        let _ = out.entry(dest.to_string()).or_default().insert(k, v);
    }
    for o in &a.outbox {
        pending_message(&o.message, links, out);
    }
}

fn pending_message(m: &OutMessage, links: &Links, out: &mut BTreeMap<AgentId, ReadersSubstitution>) {
    if m.is_serial() {
        return;
    }
    let (k, v) = sigma_entry(links, &m.dest, &m.gname, &m.payload);
    let _ = out.entry(m.dest.clone()).or_default().insert(k, v);
}

pub fn project_pi(sys: &SystemConfig) -> PiConfig {
    let links = &sys.links;
    let mut goals = BTreeMap::new();
    let mut sigma: BTreeMap<AgentId, ReadersSubstitution> =
        sys.agents.keys().map(|a| (a.clone(), ReadersSubstitution::new())).collect();
    for (id, a) in &sys.agents {
        let gs: BTreeMap<u64, Term> = a
            .resolvent
            .all_goals()
            .filter(|g| !is_system_goal(&g.term))
            .map(|g| (g.id, links.canonical(id, &a.resolvent.resolve(&g.term))))
            .collect();
        goals.insert(id.clone(), gs);
        pending_from_agent(a, links, &mut sigma);
    }
    for ch in sys.channels.values() {
        for m in ch {
            pending_message(&m.message, links, &mut sigma);
        }
    }
    PiConfig { goals, sigma }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaglpReport {
    pub steps: usize,
    /// Sequence number and description of the first illegal step.
    pub violation: Option<(u64, String)>,
}

impl MaglpReport {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
    }
}

impl fmt::Display for MaglpReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.violation {
            None => write!(f, "valid ({} steps)", self.steps),
            Some((seq, why)) => write!(f, "invalid at step {}: {}", seq, why),
        }
    }
}

struct Checker<'p> {
    program: &'p Program,
    known: ReadersSubstitution,
    pending: Vec<(AgentId, Term)>,
}

impl Checker<'_> {
    fn norm(&self, t: &Term) -> Term {
        resolve(t, &|v: &Variable| self.known.get(v))
    }

    /// Dereferences only readers whose chain ends in a non-variable value.
    fn settled(&self, t: &Term) -> Term {
        t.map_vars(&mut |v| {
            let full = self.norm(&Term::Var(v.clone()));
            if v.is_reader() && full.as_var().is_none() {
                self.settled(&full)
            } else {
                Term::Var(v.clone())
            }
        })
    }

    fn learn(&mut self, rs: &ReadersSubstitution) -> Result<(), String> {
        for (r, v) in rs.iter() {
            self.known.insert(r.clone(), v.clone()).map_err(|e| format!("reader assigned twice: {}", e))?;
        }
        Ok(())
    }

    fn same_goals(&self, a: &str, before: &BTreeMap<u64, Term>, after: &BTreeMap<u64, Term>, skip: Option<u64>) -> Result<(), String> {
        for (id, g) in before {
            if Some(*id) == skip {
                continue;
            }
            match after.get(id) {
                Some(h) if self.norm(g) == self.norm(h) => {}
                Some(h) => return Err(format!("goal {}#{} changed from {} to {}", a, id, g, h)),
                None => return Err(format!("goal {}#{} {} vanished", a, id, g)),
            }
        }
        Ok(())
    }

    fn sigma_step(&self, before: &PiConfig, after: &PiConfig, consumed: Option<(&str, &Variable)>) -> Result<(), String> {
        let empty = ReadersSubstitution::new();
        for (a, s_after) in &after.sigma {
            let s_before = before.sigma.get(a).unwrap_or(&empty);
            for r in s_before.domain() {
                if !s_after.contains(r) && consumed != Some((a.as_str(), r)) {
                    return Err(format!("pending {} at {} disappeared", r, a));
                }
            }
            for (r, v) in s_after.iter() {
                if self.norm(&Term::Var(r.clone())) != self.norm(v) {
                    return Err(format!("pending {} := {} at {} has no abstract assignment", r, v, a));
                }
            }
        }
        Ok(())
    }

    fn step(&mut self, label: &PiLabel, before: &PiConfig, after: &PiConfig) -> Result<(), String> {
        let agents: BTreeSet<&AgentId> = before.goals.keys().chain(after.goals.keys()).collect();
        let empty = BTreeMap::new();
        let goals_of = |c: &PiConfig, a: &str| c.goals.get(a).cloned().unwrap_or_default();
        let mut reduced: Option<(&str, u64)> = None;
        let mut consumed: Option<(&str, &Variable)> = None;
        match label {
            PiLabel::Stutter => {}
            PiLabel::Reduce { agent, goal, clause_index, scope, ws } => {
                let b = goals_of(before, agent);
                let a_after = goals_of(after, agent);
                let Some(a) = b.get(goal) else {
                    return Err(format!("reduced goal {}#{} is not in the configuration", agent, goal));
                };
                let (ws2, raw_body) = match clause_index {
                    Some(ci) => rederive(a, self.program, *ci, *scope)?,
                    None => match eval_builtin(a) {
                        BuiltinOutcome::Done(ws) => (ws, Vec::new()),
                        other => return Err(format!("builtin {} does not reduce: {:?}", a, other)),
                    },
                };
                if &ws2 != ws {
                    return Err(format!("reduction of {} yields {}, the system assigned {}", a, ws2, ws));
                }
                self.learn(&readers_counterpart(ws))?;
                if a_after.contains_key(goal) {
                    return Err(format!("reduced goal {}#{} is still present", agent, goal));
                }
                let fresh: Vec<(&u64, &Term)> = a_after.iter().filter(|(id, _)| !b.contains_key(id)).collect();
                if fresh.len() != raw_body.len() {
                    return Err(format!("{} spawned {} goals, the clause body has {}", a, fresh.len(), raw_body.len()));
                }
                for ((id, got), want) in fresh.iter().zip(&raw_body) {
                    if self.norm(got) != self.norm(want) {
                        return Err(format!("spawned goal {}#{} is {}, expected {}", agent, id, got, want));
                    }
                }
                reduced = Some((agent.as_str(), *goal));
            }
            PiLabel::Communicate { agent, reader, value } => {
                let pending = before.sigma.get(agent).is_some_and(|s| s.contains(reader));
                if !pending {
                    return Err(format!("{} received {} without a pending assignment", agent, reader));
                }
                if self.norm(&Term::Var(reader.clone())) != self.norm(value) {
                    return Err(format!("{} received {} := {}, inconsistent with its assignment", agent, reader, value));
                }
                consumed = Some((agent.as_str(), reader));
            }
            PiLabel::ColdCallIssue { to, payload, .. } => {
                self.pending.push((to.clone(), payload.clone()));
            }
            PiLabel::ColdCall { agent, reader, payload, tail } => {
                let want = self.norm(payload);
                let Some(at) = self.pending.iter().position(|(to, p)| to == agent && self.norm(p) == want) else {
                    return Err(format!("cold-call {} at {} was never issued", payload, agent));
                };
                self.pending.remove(at);
                let cell = Term::cons(payload.clone(), Term::Var(tail.as_reader()));
                let rs = ReadersSubstitution::from_pairs([(reader.clone(), cell)]).map_err(|e| e.to_string())?;
                self.learn(&rs)?;
            }
        }
        for a in agents {
            let b = before.goals.get(a).unwrap_or(&empty);
            let af = after.goals.get(a).unwrap_or(&empty);
            let skip = reduced.filter(|(r, _)| *r == a.as_str()).map(|(_, g)| g);
            self.same_goals(a, b, af, skip)?;
            if skip.is_none() {
                if let Some(id) = af.keys().find(|id| !b.contains_key(id)) {
                    return Err(format!("goal {}#{} appeared without a reduction", a, id));
                }
            }
        }
        self.sigma_step(before, after, consumed)
    }

    fn finish(&self, last: &PiConfig) -> Result<(), String> {
        if let Some((to, p)) = self.pending.first() {
            return Err(format!("cold-call {} to {} never arrived", p, to));
        }
        for (a, s) in &last.sigma {
            if let Some((r, v)) = s.iter().next() {
                return Err(format!("{} := {} never reached {}", r, v, a));
            }
        }
        for (a, gs) in &last.goals {
            for (id, g) in gs {
                if self.settled(g) != *g {
                    return Err(format!("goal {}#{} {} never saw {}", a, id, g, self.settled(g)));
                }
            }
        }
        Ok(())
    }
}

/// Checks that consecutive projections differ by the labelled abstract step
/// or not at all. A quiescent trace must also have delivered everything.
pub fn validate_maglp_trace(trace: &SystemTrace, program: &Program) -> MaglpReport {
    let mut checker = Checker { program, known: ReadersSubstitution::new(), pending: Vec::new() };
    let mut before = &trace.initial;
    for (n, e) in trace.entries.iter().enumerate() {
        if let Err(why) = checker.step(&e.label, before, &e.pi) {
            return MaglpReport { steps: n, violation: Some((e.seq, format!("{}: {}", e.label, why))) };
        }
        before = &e.pi;
    }
    let steps = trace.entries.len();
    if trace.status == TraceStatus::Quiescent {
        if let Err(why) = checker.finish(before) {
            let seq = trace.entries.last().map_or(0, |e| e.seq + 1);
            return MaglpReport { steps, violation: Some((seq, why)) };
        }
    }
    MaglpReport { steps, violation: None }
}
