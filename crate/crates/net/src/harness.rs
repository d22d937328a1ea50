//! System composition: agents, per-pair FIFO channels, scheduling policies
//! with a fairness bound, and the recorded system trace.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use glp_core::dglp::StepEvent;
use glp_core::outcome::canonicalize;
use glp_core::{check_so, parse_goal, parse_program, Outcome, ParseError, Program, Term, Variable, Violation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::links::Links;
use crate::maglp::{
    boot_agent, is_system_goal, with_library, AgentEvent, AgentId, AgentState, BootMode, Link, MaglpError, OutMessage,
    ReceiveKind, Received, RESERVED_NAMES,
};
use crate::pi::{project_pi, PiConfig, PiLabel};
use crate::scenario::{Mode, Scenario};

pub const DEFAULT_FAIRNESS_BOUND: u64 = 64;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("program: {0}")]
    Program(ParseError),
    #[error("goal {goal:?}: {error}")]
    Goal { goal: String, error: ParseError },
    #[error("program violates SRSW: {0}")]
    Srsw(String),
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("duplicate agent {0:?}")]
    DuplicateAgent(String),
    #[error("scenario has no agents")]
    NoAgents,
    #[error("goal {0} has no @agent and the system has several agents")]
    Unplaced(String),
    #[error("initial goals violate single occurrence: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))]
    InitialGoal(Vec<Violation>),
    #[error(transparent)]
    Maglp(#[from] MaglpError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    #[default]
    RoundRobin,
    SeededRandom,
    /// Runs local work first, sends newest messages first and delivers the
    /// most recently filled channel first, so old messages wait until the
    /// fairness bound forces them.
    Adversarial,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::RoundRobin, Policy::SeededRandom, Policy::Adversarial];
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Policy, String> {
        match s {
            "round-robin" => Ok(Policy::RoundRobin),
            "seeded-random" | "random" => Ok(Policy::SeededRandom),
            "adversarial" => Ok(Policy::Adversarial),
            _ => Err(format!("unknown policy {:?}", s)),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::RoundRobin => "round-robin",
            Policy::SeededRandom => "seeded-random",
            Policy::Adversarial => "adversarial",
        })
    }
}

/// A message in a channel, stamped with the step that sent it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InFlight {
    pub from: AgentId,
    pub serial: u64,
    pub stamp: u64,
    pub message: OutMessage,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Choice {
    Reduce(AgentId),
    Send(AgentId, u64),
    Receive { from: AgentId, to: AgentId, serial: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SystemEvent {
    Reduce { agent: AgentId, event: AgentEvent },
    Send { agent: AgentId, serial: u64, message: OutMessage },
    Receive { agent: AgentId, from: AgentId, message: OutMessage, received: Received },
    UserOutput { agent: AgentId, term: Term },
}

impl SystemEvent {
    pub fn agent(&self) -> &AgentId {
        match self {
            SystemEvent::Reduce { agent, .. }
            | SystemEvent::Send { agent, .. }
            | SystemEvent::Receive { agent, .. }
            | SystemEvent::UserOutput { agent, .. } => agent,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SystemEvent::Reduce { event, .. } => match event {
                AgentEvent::Step(StepEvent::Reduced { .. }) => "reduce",
                AgentEvent::Step(StepEvent::Suspended { .. }) | AgentEvent::ColdCallSuspended { .. } => "suspend",
                AgentEvent::Step(StepEvent::Failed { .. }) | AgentEvent::ColdCallFailed { .. } => "fail",
                AgentEvent::Step(StepEvent::Idle) => "idle",
                AgentEvent::Sent { .. } => "outbox",
                AgentEvent::ColdCall { .. } => "cold-call",
            },
            SystemEvent::Send { .. } => "send",
            SystemEvent::Receive { .. } => "receive",
            SystemEvent::UserOutput { .. } => "user-output",
        }
    }

    /// The event's payload as one line of text.
    pub fn detail(&self) -> String {
        match self {
            SystemEvent::Reduce { event, .. } => match event {
                AgentEvent::Step(e) => e.to_string(),
                AgentEvent::Sent { goal, message, .. } => format!("{} -> {}", goal.term, message),
                AgentEvent::ColdCall { goal, spawned, .. } => format!("{} -> {}", goal.term, spawned.term),
                AgentEvent::ColdCallSuspended { goal, reader } => format!("suspend {} on {{{}}}", goal.term, reader),
                AgentEvent::ColdCallFailed { goal } => format!("fail {}", goal.term),
            },
            SystemEvent::Send { message, .. } => message.to_string(),
            SystemEvent::Receive { from, message, received, .. } => {
                let table = match &received.kind {
                    ReceiveKind::Serializer { old, new } => format!("serializer {} -> {}", old, new),
                    ReceiveKind::ExpectLocal { index } => format!("entry {} removed", index),
                    ReceiveKind::ExpectRemote { index } => format!("entry {} removed", index),
                };
                format!("{} from {}: {}; {}", message, from, received.ws, table)
            }
            SystemEvent::UserOutput { term, .. } => term.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub seq: u64,
    pub event: SystemEvent,
    pub label: PiLabel,
    /// Projection after the event.
    pub pi: PiConfig,
    /// Scheduling rounds the event was enabled before it ran.
    pub waited: u64,
}

/// One line of a trace file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub seq: u64,
    pub agent: String,
    pub kind: String,
    pub detail: String,
    pub waited: u64,
}

impl TraceEntry {
    pub fn record(&self) -> TraceRecord {
        TraceRecord {
            seq: self.seq,
            agent: self.event.agent().clone(),
            kind: self.event.kind().to_string(),
            detail: self.event.detail(),
            waited: self.waited,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceStatus {
    Quiescent,
    StepLimit,
}

impl fmt::Display for TraceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceStatus::Quiescent => "quiescent",
            TraceStatus::StepLimit => "step_limit",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemTrace {
    pub initial: PiConfig,
    pub entries: Vec<TraceEntry>,
    pub status: TraceStatus,
}

impl SystemTrace {
    pub fn records(&self) -> Vec<TraceRecord> {
        self.entries.iter().map(|e| e.record()).collect()
    }

    /// JSON lines, one record per event.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for r in self.records() {
            out.push_str(&serde_json::to_string(&r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn max_wait(&self) -> u64 {
        self.entries.iter().map(|e| e.waited).max().unwrap_or(0)
    }

    /// Non-serializer messages delivered.
    pub fn link_messages(&self) -> Vec<&OutMessage> {
        self.entries
            .iter()
            .filter_map(|e| match &e.event {
                SystemEvent::Receive { message, .. } if !message.is_serial() => Some(message),
                _ => None,
            })
            .collect()
    }

    pub fn final_pi(&self) -> &PiConfig {
        self.entries.last().map_or(&self.initial, |e| &e.pi)
    }
}

#[derive(Clone, Debug)]
pub struct SystemConfig {
    pub agents: BTreeMap<AgentId, AgentState>,
    /// Declaration order; also the scheduling order.
    pub order: Vec<AgentId>,
    pub channels: BTreeMap<(AgentId, AgentId), VecDeque<InFlight>>,
    pub program: Program,
    pub links: Links,
    pub policy: Policy,
    pub seed: u64,
    pub fairness_bound: u64,
    pub silent: BTreeSet<AgentId>,
    rng: ChaCha8Rng,
    cursor: usize,
    seq: u64,
    enabled_since: BTreeMap<Choice, u64>,
    outputs_seen: BTreeMap<AgentId, usize>,
}

fn reserved(v: &Variable) -> bool {
    v.scope == 0 && RESERVED_NAMES.contains(&v.name.as_str())
}

/// Goals placed on agents, with the whole-system single occurrence check.
fn place_goals(scenario: &Scenario, single: Option<&AgentId>) -> Result<BTreeMap<AgentId, Vec<Term>>, HarnessError> {
    let mut placed: BTreeMap<AgentId, Vec<Term>> = BTreeMap::new();
    for text in &scenario.goals {
        let goals = parse_goal(text).map_err(|error| HarnessError::Goal { goal: text.clone(), error })?;
        for g in goals {
            let agent = match (&g.agent, single) {
                (Some(a), _) => a.clone(),
                (None, Some(a)) => a.clone(),
                (None, None) => return Err(HarnessError::Unplaced(g.goal.to_string())),
            };
            if !scenario.agents.contains(&agent) {
                return Err(HarnessError::UnknownAgent(agent));
            }
            placed.entry(agent).or_default().push(g.goal);
        }
    }
    // Reserved names denote a different pair at each agent.
    let mut all = Vec::new();
    for (k, gs) in placed.values().enumerate() {
        for g in gs {
            all.push(g.map_vars(&mut |v| {
                let scope = if reserved(v) { u32::MAX - k as u32 } else { v.scope };
                Term::Var(Variable { scope, ..v.clone() })
            }));
        }
    }
    let violations = check_so(&all);
    if !violations.is_empty() {
        return Err(HarnessError::InitialGoal(violations));
    }
    Ok(placed)
}

impl SystemConfig {
    /// Boots every agent and performs the initial globalization of pairs
    /// shared between agents' goals.
    pub fn build(scenario: &Scenario) -> Result<SystemConfig, HarnessError> {
        if scenario.agents.is_empty() {
            return Err(HarnessError::NoAgents);
        }
        let mut seen = BTreeSet::new();
        for a in &scenario.agents {
            if !seen.insert(a) {
                return Err(HarnessError::DuplicateAgent(a.clone()));
            }
        }
        let user = parse_program(&scenario.program).map_err(HarnessError::Program)?;
        let report = glp_core::parser::srsw_report(&user);
        if !report.is_empty() {
            let lines: Vec<String> = report.iter().map(|v| v.to_string()).collect();
            return Err(HarnessError::Srsw(lines.join("; ")));
        }
        for s in &scenario.silent {
            if !scenario.agents.contains(s) {
                return Err(HarnessError::UnknownAgent(s.clone()));
            }
        }
        let single = if scenario.agents.len() == 1 { scenario.agents.first() } else { None };
        let mut placed = match scenario.mode {
            Mode::Direct => place_goals(scenario, single)?,
            Mode::Bootstrap => BTreeMap::new(),
        };
        let mut inputs: BTreeMap<AgentId, Vec<Term>> = BTreeMap::new();
        for ui in &scenario.user_inputs {
            if !scenario.agents.contains(&ui.agent) {
                return Err(HarnessError::UnknownAgent(ui.agent.clone()));
            }
            for t in &ui.terms {
                let parsed = glp_core::parse_term(t).map_err(|error| HarnessError::Goal { goal: t.clone(), error })?;
                inputs.entry(ui.agent.clone()).or_default().push(parsed);
            }
        }

        let mut agents = BTreeMap::new();
        for (k, id) in scenario.agents.iter().enumerate() {
            let mode = match scenario.mode {
                Mode::Bootstrap => BootMode::Bootstrap,
                Mode::Direct => BootMode::Direct(placed.remove(id).unwrap_or_default()),
            };
            let ui = inputs.get(id).map(Vec::as_slice).unwrap_or(&[]);
            agents.insert(id.clone(), boot_agent(id, k as u32, mode, ui)?);
        }

        let mut sys = SystemConfig {
            agents,
            order: scenario.agents.clone(),
            channels: BTreeMap::new(),
            program: with_library(&user),
            links: Links::new(),
            policy: scenario.policy,
            seed: scenario.seed,
            fairness_bound: scenario.fairness_bound,
            silent: scenario.silent.iter().cloned().collect(),
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            cursor: 0,
            seq: 0,
            enabled_since: BTreeMap::new(),
            outputs_seen: BTreeMap::new(),
        };
        if scenario.mode == Mode::Direct {
            sys.share_initial_pairs();
        }
        Ok(sys)
    }

    /// For every source pair with its writer at one agent and its reader at
    /// another: the writer side exports the reader, the reader side keeps the
    /// source name as the local stand-in.
    fn share_initial_pairs(&mut self) {
        let mut writer_at: BTreeMap<(String, u32), AgentId> = BTreeMap::new();
        let mut reader_at: BTreeMap<(String, u32), AgentId> = BTreeMap::new();
        for id in &self.order {
            for g in self.agents[id].resolvent.all_goals() {
                g.term.visit_vars(&mut |v| {
                    if v.scope != 0 || v.is_anonymous() {
                        return;
                    }
                    let side = if v.is_writer() { &mut writer_at } else { &mut reader_at };
                    side.insert(v.pair_key(), id.clone());
                });
            }
        }
        for (key, w) in writer_at {
            let Some(r) = reader_at.get(&key).filter(|r| **r != w) else { continue };
            let x = Variable::writer(key.0.clone(), 0);
            let (gname, _) = self.agents.get_mut(&w).unwrap().export_reader(&x, r);
            self.agents.get_mut(r).unwrap().import_reader(&gname, x.clone());
            self.links.record(&w, &Link { gname: gname.clone(), local: x.clone() });
            self.links.record(r, &Link { gname, local: x });
        }
    }

    pub fn pi(&self) -> PiConfig {
        project_pi(self)
    }

    fn enabled(&self) -> Vec<Choice> {
        let mut out = Vec::new();
        for id in &self.order {
            if self.silent.contains(id) {
                continue;
            }
            let a = &self.agents[id];
            if !a.resolvent.q.is_empty() {
                out.push(Choice::Reduce(id.clone()));
            }
            // Oldest message per destination only: a later message may
            // name a global created by an earlier one.
            let mut dests = BTreeSet::new();
            for o in &a.outbox {
                if dests.insert(&o.message.dest) {
                    out.push(Choice::Send(id.clone(), o.serial));
                }
            }
            for from in &self.order {
                if let Some(head) = self.channels.get(&(from.clone(), id.clone())).and_then(|c| c.front()) {
                    out.push(Choice::Receive { from: from.clone(), to: id.clone(), serial: head.serial });
                }
            }
        }
        out
    }

    fn stamp_of(&self, c: &Choice) -> u64 {
        match c {
            Choice::Receive { from, to, .. } => self.channels[&(from.clone(), to.clone())].front().map_or(0, |m| m.stamp),
            _ => 0,
        }
    }

    fn pick(&mut self, enabled: &[Choice]) -> usize {
        let overdue = enabled
            .iter()
            .enumerate()
            .map(|(i, c)| (i, self.seq - self.enabled_since[c]))
            // Slack for the events that may be forced ahead of this one.
            .filter(|(_, w)| *w + enabled.len() as u64 >= self.fairness_bound)
            .max_by_key(|(i, w)| (*w, std::cmp::Reverse(*i)));
        if let Some((i, _)) = overdue {
            return i;
        }
        match self.policy {
            Policy::RoundRobin => {
                let i = self.cursor % enabled.len();
                self.cursor += 1;
                i
            }
            Policy::SeededRandom => self.rng.gen_range(0..enabled.len()),
            Policy::Adversarial => {
                let rank = |(i, c): (usize, &Choice)| match c {
                    Choice::Reduce(_) => (3, i as u64),
                    Choice::Send(_, serial) => (2, *serial),
                    Choice::Receive { .. } => (1, self.stamp_of(c)),
                };
                enabled.iter().enumerate().max_by_key(|&(i, c)| rank((i, c))).map(|(i, _)| i).unwrap()
            }
        }
    }

    /// Runs one enabled event chosen by the policy; `None` when nothing is enabled.
    pub fn system_step(&mut self) -> Result<Option<TraceEntry>, HarnessError> {
        let enabled = self.enabled();
        self.enabled_since.retain(|c, _| enabled.contains(c));
        for c in &enabled {
            self.enabled_since.entry(c.clone()).or_insert(self.seq);
        }
        if enabled.is_empty() {
            return Ok(None);
        }
        let choice = enabled[self.pick(&enabled)].clone();
        let waited = self.seq - self.enabled_since.remove(&choice).unwrap_or(self.seq);
        let (event, label) = self.apply(&choice)?;
        let entry = TraceEntry { seq: self.seq, event, label, pi: self.pi(), waited };
        self.seq += 1;
        Ok(Some(entry))
    }

    fn apply(&mut self, choice: &Choice) -> Result<(SystemEvent, PiLabel), HarnessError> {
        match choice {
            Choice::Reduce(id) => {
                let agent = self.agents.get_mut(id).unwrap();
                let event = agent.reduce_transaction(&self.program)?;
                if let AgentEvent::Sent { links, .. } = &event {
                    self.links.record_all(id, links);
                }
                let label = self.reduce_label(id, &event);
                Ok((SystemEvent::Reduce { agent: id.clone(), event }, label))
            }
            Choice::Send(id, serial) => {
                let agent = self.agents.get_mut(id).unwrap();
                let message = agent.send_transaction(*serial).expect("enabled send has a message");
                let key = (id.clone(), message.dest.clone());
                self.channels.entry(key).or_default().push_back(InFlight {
                    from: id.clone(),
                    serial: *serial,
                    stamp: self.seq,
                    message: message.clone(),
                });
                Ok((SystemEvent::Send { agent: id.clone(), serial: *serial, message }, PiLabel::Stutter))
            }
            Choice::Receive { from, to, .. } => {
                let m = self.channels.get_mut(&(from.clone(), to.clone())).unwrap().pop_front().unwrap();
                let agent = self.agents.get_mut(to).ok_or_else(|| HarnessError::UnknownAgent(to.clone()))?;
                let received = agent.receive_transaction(from, &m.message)?;
                self.links.record_all(to, &received.links);
                let links = &self.links;
                let label = match &received.kind {
                    ReceiveKind::Serializer { old, new } => {
                        let (item, _) = received.value.as_cons().expect("serializer value is a list cell");
                        PiLabel::ColdCall {
                            agent: to.clone(),
                            reader: links.canonical_var(to, &old.as_reader()),
                            payload: links.canonical(to, item),
                            tail: links.canonical_var(to, new),
                        }
                    }
                    _ => {
                        let (target, _) = received.ws.iter().next().expect("one assignment");
                        PiLabel::Communicate {
                            agent: to.clone(),
                            reader: links.canonical_var(to, &target.as_reader()),
                            value: links.canonical(to, &received.value),
                        }
                    }
                };
                let event = SystemEvent::Receive { agent: to.clone(), from: from.clone(), message: m.message, received };
                Ok((event, label))
            }
        }
    }

    fn reduce_label(&self, id: &str, event: &AgentEvent) -> PiLabel {
        let links = &self.links;
        match event {
            AgentEvent::Step(StepEvent::Reduced { goal, clause_index, scope, ws, .. }) if !is_system_goal(&goal.term) => {
                let mut canon = glp_core::WritersSubstitution::new();
                for (v, t) in ws.iter() {
                    canon
                        .insert(links.canonical_var(id, v), links.canonical(id, t))
                        .expect("canonical renaming is injective on one agent's writers");
                }
                PiLabel::Reduce { agent: id.to_string(), goal: goal.id, clause_index: *clause_index, scope: *scope, ws: canon }
            }
            AgentEvent::ColdCall { dest, payload, .. } => PiLabel::ColdCallIssue {
                from: id.to_string(),
                to: dest.clone(),
                payload: links.canonical(id, payload),
            },
            _ => PiLabel::Stutter,
        }
    }

    /// Trace entries for user output items that appeared since the last call.
    pub fn drain_user_output(&mut self) -> Vec<TraceEntry> {
        let mut out = Vec::new();
        for id in &self.order {
            let items = self.agents[id].user_output();
            let seen = self.outputs_seen.entry(id.clone()).or_insert(0);
            for term in items.into_iter().skip(*seen) {
                *seen += 1;
                out.push((id.clone(), term));
            }
        }
        let pi = if out.is_empty() { PiConfig::default() } else { self.pi() };
        out.into_iter()
            .map(|(agent, term)| {
                let e = TraceEntry {
                    seq: self.seq,
                    event: SystemEvent::UserOutput { agent, term },
                    label: PiLabel::Stutter,
                    pi: pi.clone(),
                    waited: 0,
                };
                self.seq += 1;
                e
            })
            .collect()
    }

    /// Steps until nothing is enabled or `max_steps` events ran.
    pub fn run(&mut self, max_steps: usize) -> Result<SystemTrace, HarnessError> {
        let initial = self.pi();
        let mut entries = Vec::new();
        let mut steps = 0;
        let status = loop {
            if steps >= max_steps {
                break TraceStatus::StepLimit;
            }
            match self.system_step()? {
                Some(e) => entries.push(e),
                None => break TraceStatus::Quiescent,
            }
            steps += 1;
            entries.extend(self.drain_user_output());
        };
        Ok(SystemTrace { initial, entries, status })
    }

    /// No queued goals and nothing in transit.
    pub fn is_quiescent(&self) -> bool {
        self.agents.values().all(|a| a.resolvent.q.is_empty() && a.outbox.is_empty())
            && self.channels.values().all(VecDeque::is_empty)
    }

    /// Messages in transit.
    pub fn in_flight(&self) -> impl Iterator<Item = &InFlight> {
        self.channels.values().flatten()
    }

    /// Broken table invariants: global names inside goals, messages without
    /// exactly one matching entry, and leftover entries once all user goals
    /// are gone and nothing is in transit.
    pub fn hygiene_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in self.agents.values() {
            for g in a.stray_global_names() {
                out.push(format!("{}: global name inside {}", a.id, g));
            }
            if !matches!(a.gwt.get(&0), Some(crate::maglp::GwtEntry::Serializer { .. })) {
                out.push(format!("{}: serializer entry missing", a.id));
            }
        }
        let outgoing = self.agents.values().flat_map(|a| a.outbox.iter().map(|o| &o.message));
        for m in outgoing.chain(self.in_flight().map(|f| &f.message)) {
            if m.is_serial() {
                continue;
            }
            let g = &m.gname;
            let matches = match g.sort {
                glp_core::Sort::Writer => self.agents.get(&g.agent).map_or(0, |a| {
                    usize::from(matches!(a.gwt.get(&g.index), Some(crate::maglp::GwtEntry::ExpectLocal { .. })))
                }),
                glp_core::Sort::Reader => self.agents.get(&m.dest).map_or(0, |a| {
                    a.gwt
                        .values()
                        .filter(|e| {
                            matches!(e, crate::maglp::GwtEntry::ExpectRemote { remote, remote_index, .. }
                                if *remote == g.agent && *remote_index == g.index)
                        })
                        .count()
                }),
            };
            if matches != 1 {
                out.push(format!("{} has {} matching entries", m, matches));
            }
        }
        let settled = self.is_quiescent()
            && self.agents.values().all(|a| a.resolvent.all_goals().all(|g| is_system_goal(&g.term)));
        if settled {
            for a in self.agents.values() {
                if !a.table_is_clean() {
                    out.push(format!("{}: entries left at quiescence: {}", a.id, a.table_string()));
                }
            }
        }
        out
    }

    /// Source-scope readers with known values, per agent, renamed to their
    /// abstract variables.
    pub fn binding_report(&self) -> BTreeMap<AgentId, Vec<(Variable, Term)>> {
        self.agents
            .iter()
            .map(|(id, a)| {
                let rows = a
                    .resolvent
                    .binding_report()
                    .into_iter()
                    .filter(|(v, _)| !reserved(v))
                    .map(|(v, t)| {
                        // Show what the reader sees: assigned writers inside the value count too.
                        let seen = a.resolvent.resolve(&t.map_vars(&mut |w| Term::Var(w.as_reader())));
                        (v, self.links.canonical(id, &seen))
                    })
                    .collect();
                (id.clone(), rows)
            })
            .collect()
    }

    /// Renaming-invariant summary of the final state: bindings in the head,
    /// user goals tagged with their agent in the body.
    pub fn final_outcome(&self) -> Outcome {
        let mut head = Vec::new();
        for (id, rows) in self.binding_report() {
            for (v, t) in rows {
                head.push(Term::app("bound", vec![Term::atom(id.clone()), Term::atom(v.name.clone()), t]));
            }
        }
        let body = self
            .pi()
            .goals
            .into_iter()
            .flat_map(|(id, gs)| gs.into_values().map(move |g| Term::app("at", vec![Term::atom(id.clone()), g])))
            .collect();
        canonicalize(&Outcome { head, body })
    }
}

pub struct ScenarioRun {
    pub system: SystemConfig,
    pub trace: SystemTrace,
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioRun, HarnessError> {
    let mut system = SystemConfig::build(scenario)?;
    let trace = system.run(scenario.max_steps)?;
    Ok(ScenarioRun { system, trace })
}
