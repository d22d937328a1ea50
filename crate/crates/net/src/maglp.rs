//! Agents of the multiagent runtime: boot, the global writers table,
//! Globalize/Localize and the Reduce, Send and Receive transactions.

use std::collections::BTreeMap;
use std::fmt;

use glp_core::dglp::{dglp_step, DConfig, EngineError, Goal, StepEvent};
use glp_core::matching::ScopeCounter;
use glp_core::{parse_program, GlobalName, Program, Sort, Term, Variable, WritersSubstitution};
use thiserror::Error;

pub type AgentId = String;

/// Scope partition size; agent `k` allocates scopes from `k * SCOPE_STRIDE`.
pub const SCOPE_STRIDE: u32 = 1 << 20;

/// Names that direct-mode goals use for an agent's boot channels.
pub const RESERVED_NAMES: [&str; 4] = ["UserIn", "UserOut", "NetIn", "NetOut"];

/// Library procedures bundled with every agent. `'_cold_call'` stands in for
/// a watcher on `_w(Q,0)`, whose agent is only known once `Q` is.
pub const LIBRARY: &str = "
global_send(T, G, Q) :- known(T?) | '_send'(T?, G?, Q?).
send_to_net([msg(Q, T)|In]) :- '_cold_call'(Q?, T?), send_to_net(In?).
send_to_net([]).
";

const SYSTEM_PREDICATES: [(&str, usize); 4] = [("global_send", 3), ("send_to_net", 1), ("_send", 3), ("_cold_call", 2)];

pub fn is_system_goal(t: &Term) -> bool {
    t.indicator().is_some_and(|i| SYSTEM_PREDICATES.contains(&i))
}

/// The user program followed by the library clauses.
pub fn with_library(user: &Program) -> Program {
    let mut p = user.clone();
    p.extend(&parse_program(LIBRARY).expect("library parses"));
    p
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaglpError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("'_send' reached with unbound value: {0}")]
    SendUnbound(Term),
    #[error("malformed system goal: {0}")]
    BadSystemGoal(Term),
    #[error("protocol error at {agent}: {reason}; message {message}; table {table}")]
    Protocol { agent: AgentId, reason: String, message: String, table: String },
    #[error("agent id {0:?} is not a plain atom")]
    BadAgentId(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GwtEntry {
    /// Own writer exported to `remote`, who will assign it.
    ExpectLocal { writer: Variable, remote: AgentId },
    /// Local stand-in for the reader end `_r(remote, remote_index)`.
    ExpectRemote { writer: Variable, remote: AgentId, remote_index: u64 },
    /// Tail of the network input stream.
    Serializer { writer: Variable },
}

impl GwtEntry {
    pub fn writer(&self) -> &Variable {
        match self {
            GwtEntry::ExpectLocal { writer, .. }
            | GwtEntry::ExpectRemote { writer, .. }
            | GwtEntry::Serializer { writer } => writer,
        }
    }
}

impl fmt::Display for GwtEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GwtEntry::ExpectLocal { writer, remote } => write!(f, "({}, {})", writer, remote),
            GwtEntry::ExpectRemote { writer, remote, remote_index } => {
                write!(f, "({}, {}, {})", writer, remote, remote_index)
            }
            GwtEntry::Serializer { writer } => write!(f, "({}, *)", writer),
        }
    }
}

/// `(gname := payload, dest)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutMessage {
    pub gname: GlobalName,
    pub payload: Term,
    pub dest: AgentId,
}

impl OutMessage {
    pub fn is_serial(&self) -> bool {
        self.gname.is_serializer()
    }
}

impl fmt::Display for OutMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} := {}, {})", self.gname, self.payload, self.dest)
    }
}

/// An outbox message with its per-agent serial number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outgoing {
    pub serial: u64,
    pub message: OutMessage,
}

/// Correspondence between a global name and a local variable, reported by
/// Globalize, Localize and the boot-time coordinator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub gname: GlobalName,
    pub local: Variable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BootMode {
    Bootstrap,
    Direct(Vec<Term>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentState {
    pub id: AgentId,
    pub resolvent: DConfig,
    pub gwt: BTreeMap<u64, GwtEntry>,
    pub next_index: u64,
    pub outbox: Vec<Outgoing>,
    next_serial: u64,
    /// Writers of the four boot pairs, in `UserIn, UserOut, NetIn, NetOut` order.
    pub boot: [Variable; 4],
}

/// What a Reduce transaction did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentEvent {
    Step(StepEvent),
    /// `'_send'` moved a value into the outbox.
    Sent { goal: Goal, message: OutMessage, spawned: Vec<Goal>, links: Vec<Link> },
    /// `'_cold_call'` turned a network output message into a watcher.
    ColdCall { goal: Goal, dest: AgentId, payload: Term, spawned: Goal },
    ColdCallSuspended { goal: Goal, reader: Variable },
    ColdCallFailed { goal: Goal },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReceiveKind {
    Serializer { old: Variable, new: Variable },
    ExpectLocal { index: u64 },
    ExpectRemote { index: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Received {
    pub kind: ReceiveKind,
    /// The local term the message turned into.
    pub value: Term,
    pub ws: WritersSubstitution,
    pub spawned: Vec<Goal>,
    pub reactivated: Vec<Goal>,
    pub links: Vec<Link>,
}

fn is_plain_atom(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_lowercase()) && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Replaces reserved source names by the agent's boot pairs.
fn bind_reserved(t: &Term, boot: &[Variable; 4]) -> Term {
    t.map_vars(&mut |v| {
        match RESERVED_NAMES.iter().position(|n| *n == v.name) {
            Some(k) if v.scope == 0 => Term::Var(Variable { sort: v.sort, ..boot[k].clone() }),
            _ => Term::Var(v.clone()),
        }
    })
}

pub fn global_send(value: Term, gname: GlobalName, dest: &str) -> Term {
    Term::app("global_send", vec![value, Term::Global(gname), Term::atom(dest)])
}

/// Boots agent number `ordinal` of the system. User inputs become the value
/// of the user input stream.
pub fn boot_agent(id: &str, ordinal: u32, mode: BootMode, user_inputs: &[Term]) -> Result<AgentState, MaglpError> {
    if !is_plain_atom(id) {
        return Err(MaglpError::BadAgentId(id.to_string()));
    }
    let mut resolvent = DConfig::default();
    resolvent.scopes = ScopeCounter::starting_after(ordinal * SCOPE_STRIDE);
    let scope = resolvent.scopes.fresh();
    let boot = RESERVED_NAMES.map(|n| Variable::writer(n, scope));
    let [u_in, u_out, n_in, n_out] = boot.clone();
    let mut agent = AgentState {
        id: id.to_string(),
        resolvent,
        gwt: BTreeMap::from([(0, GwtEntry::Serializer { writer: n_in.clone() })]),
        next_index: 1,
        outbox: Vec::new(),
        next_serial: 0,
        boot,
    };
    if !user_inputs.is_empty() {
        let ws = WritersSubstitution::from_pairs([(u_in.clone(), Term::list(user_inputs.to_vec()))])
            .map_err(EngineError::from)?;
        agent.resolvent.assign(&ws)?;
    }
    match mode {
        BootMode::Bootstrap => {
            let ch = |a: &Variable, b: &Variable| Term::app("ch", vec![Term::Var(a.as_reader()), Term::Var(b.clone())]);
            let goal = Term::app("agent", vec![ch(&u_in, &u_out), ch(&n_in, &n_out)]);
            let goal = agent.resolvent.resolve(&goal);
            agent.resolvent.enqueue(goal);
        }
        BootMode::Direct(goals) => {
            for g in goals {
                let g = agent.resolvent.resolve(&bind_reserved(&g, &agent.boot));
                agent.resolvent.enqueue(g);
            }
        }
    }
    agent.resolvent.enqueue(Term::app("send_to_net", vec![Term::Var(n_out.as_reader())]));
    Ok(agent)
}

impl AgentState {
    fn allocate(&mut self) -> u64 {
        let i = self.next_index;
        self.next_index += 1;
        i
    }

    pub fn serializer(&self) -> &Variable {
        self.gwt[&0].writer()
    }

    pub fn table_string(&self) -> String {
        let items: Vec<String> = self.gwt.iter().map(|(i, e)| format!("{}: {}", i, e)).collect();
        format!("{{{}}}", items.join(", "))
    }

    /// Replaces local variables of `t` by global names for `dest`. Writers
    /// get table entries, readers get watchers.
    pub fn globalize(&mut self, t: &Term, dest: &str) -> (Term, Vec<Goal>, Vec<Link>) {
        let mut links = Vec::new();
        let mut watchers = Vec::new();
        let id = self.id.clone();
        let out = t.map_vars(&mut |v| {
            let i = self.next_index;
            self.next_index += 1;
            let gname = GlobalName { sort: v.sort, agent: id.clone(), index: i };
            if v.is_writer() {
                self.gwt.insert(i, GwtEntry::ExpectLocal { writer: v.clone(), remote: dest.to_string() });
            } else {
                watchers.push(global_send(Term::Var(v.clone()), gname.clone(), dest));
            }
            links.push(Link { gname: gname.clone(), local: v.as_writer() });
            Term::Global(gname)
        });
        let spawned = watchers.into_iter().map(|g| self.resolvent.enqueue(g)).collect();
        (out, spawned, links)
    }

    /// Replaces global names of `t` by fresh local pairs at `scope`.
    pub fn localize(&mut self, t: &Term, scope: u32) -> (Term, Vec<Goal>, Vec<Link>) {
        let mut links = Vec::new();
        let mut spawned = Vec::new();
        let out = self.localize_into(t, scope, &mut links, &mut spawned);
        (out, spawned, links)
    }

    fn localize_into(&mut self, t: &Term, scope: u32, links: &mut Vec<Link>, spawned: &mut Vec<Goal>) -> Term {
        match t {
            Term::Global(g) => match g.sort {
                Sort::Writer => {
                    let y = Variable::writer(format!("W{}{}", g.agent, g.index), scope);
                    let watcher = global_send(Term::Var(y.as_reader()), g.clone(), &g.agent);
                    spawned.push(self.resolvent.enqueue(watcher));
                    links.push(Link { gname: g.clone(), local: y.clone() });
                    Term::Var(y)
                }
                Sort::Reader => {
                    let z = Variable::writer(format!("R{}{}", g.agent, g.index), scope);
                    self.import_reader(g, z.clone());
                    links.push(Link { gname: g.clone(), local: z.clone() });
                    Term::Var(z.as_reader())
                }
            },
            Term::Compound(f, args) => {
                Term::Compound(f.clone(), args.iter().map(|a| self.localize_into(a, scope, links, spawned)).collect())
            }
            other => other.clone(),
        }
    }

    /// Lets `dest` read own writer `x`: a watcher on `x?` for a fresh reader name.
    pub fn export_reader(&mut self, x: &Variable, dest: &str) -> (GlobalName, Goal) {
        let gname = GlobalName::reader(self.id.clone(), self.allocate());
        let goal = self.resolvent.enqueue(global_send(Term::Var(x.as_reader()), gname.clone(), dest));
        (gname, goal)
    }

    /// Makes `writer` the local stand-in for the remote reader `gname`.
    pub fn import_reader(&mut self, gname: &GlobalName, writer: Variable) -> u64 {
        let i = self.allocate();
        self.gwt.insert(
            i,
            GwtEntry::ExpectRemote { writer, remote: gname.agent.clone(), remote_index: gname.index },
        );
        i
    }

    fn push_outbox(&mut self, message: OutMessage) {
        let serial = self.next_serial;
        self.next_serial += 1;
        self.outbox.push(Outgoing { serial, message });
    }

    /// One step of the resolvent, with the two system builtins handled here.
    pub fn reduce_transaction(&mut self, p: &Program) -> Result<AgentEvent, MaglpError> {
        let Some(front) = self.resolvent.q.front() else {
            return Ok(AgentEvent::Step(StepEvent::Idle));
        };
        match front.term.indicator() {
            Some(("_send", 3)) => {
                let goal = self.resolvent.q.pop_front().unwrap();
                self.send_builtin(goal)
            }
            Some(("_cold_call", 2)) => {
                let goal = self.resolvent.q.pop_front().unwrap();
                self.cold_call_builtin(goal)
            }
            Some(("global_send", 3)) => match dglp_step(&mut self.resolvent, p)? {
                // The watcher fired: send in the same transaction, before
                // anything else can refine the value.
                StepEvent::Reduced { goal, spawned, .. } if spawned.len() == 1 => {
                    let at = self.resolvent.q.iter().position(|g| g.id == spawned[0].id).expect("spawned goal queued");
                    let send = self.resolvent.q.remove(at).unwrap();
                    match self.send_builtin(send)? {
                        AgentEvent::Sent { message, spawned, links, .. } => {
                            Ok(AgentEvent::Sent { goal, message, spawned, links })
                        }
                        other => Ok(other),
                    }
                }
                other => Ok(AgentEvent::Step(other)),
            },
            _ => Ok(AgentEvent::Step(dglp_step(&mut self.resolvent, p)?)),
        }
    }

    fn send_builtin(&mut self, goal: Goal) -> Result<AgentEvent, MaglpError> {
        let args = goal.term.args();
        let value = self.resolvent.resolve(&args[0]);
        if value.as_var().is_some() {
            return Err(MaglpError::SendUnbound(goal.term.clone()));
        }
        let (Term::Global(gname), Some(dest)) = (&args[1], args[2].as_atom()) else {
            return Err(MaglpError::BadSystemGoal(goal.term.clone()));
        };
        let (gname, dest) = (gname.clone(), dest.to_string());
        let (payload, spawned, links) = self.globalize(&value, &dest);
        let payload = if gname.is_serializer() { Term::cons(payload, Term::Global(gname.clone())) } else { payload };
        let message = OutMessage { gname, payload, dest };
        self.push_outbox(message.clone());
        Ok(AgentEvent::Sent { goal, message, spawned, links })
    }

    fn cold_call_builtin(&mut self, goal: Goal) -> Result<AgentEvent, MaglpError> {
        let args = goal.term.args();
        let dest = self.resolvent.resolve(&args[0]);
        match &dest {
            Term::Var(r) if r.is_reader() => {
                let reader = r.clone();
                self.resolvent.s.push((goal.clone(), [reader.clone()].into()));
                Ok(AgentEvent::ColdCallSuspended { goal, reader })
            }
            Term::Const(_) if dest.as_atom().is_some_and(is_plain_atom) => {
                let dest = dest.as_atom().unwrap().to_string();
                let payload = self.resolvent.resolve(&args[1]);
                let watcher = global_send(payload.clone(), GlobalName::writer(dest.clone(), 0), &dest);
                let spawned = self.resolvent.enqueue(watcher);
                Ok(AgentEvent::ColdCall { goal, dest, payload, spawned })
            }
            _ => {
                self.resolvent.f.push(goal.clone());
                Ok(AgentEvent::ColdCallFailed { goal })
            }
        }
    }

    /// Removes and returns the outbox message with `serial`.
    pub fn send_transaction(&mut self, serial: u64) -> Option<OutMessage> {
        let at = self.outbox.iter().position(|o| o.serial == serial)?;
        Some(self.outbox.remove(at).message)
    }

    fn protocol(&self, reason: impl Into<String>, m: &OutMessage) -> MaglpError {
        MaglpError::Protocol {
            agent: self.id.clone(),
            reason: reason.into(),
            message: m.to_string(),
            table: self.table_string(),
        }
    }

    pub fn receive_transaction(&mut self, from: &str, m: &OutMessage) -> Result<Received, MaglpError> {
        if m.dest != self.id {
            return Err(self.protocol("misrouted", m));
        }
        let g = &m.gname;
        let scope = self.resolvent.scopes.fresh();
        let (target, kind, value, spawned, links) = if g.is_serializer() && g.agent == self.id {
            let Some((head, Term::Global(tail))) = m.payload.as_cons() else {
                return Err(self.protocol("serializer payload is not a list cell", m));
            };
            if tail != g {
                return Err(self.protocol("serializer tail mismatch", m));
            }
            let (item, spawned, links) = self.localize(head, scope);
            let old = self.serializer().clone();
            let new = Variable::writer(old.name.clone(), scope);
            let value = Term::cons(item, Term::Var(new.as_reader()));
            self.gwt.insert(0, GwtEntry::Serializer { writer: new.clone() });
            (old.clone(), ReceiveKind::Serializer { old, new }, value, spawned, links)
        } else if g.sort == Sort::Writer && g.agent == self.id {
            let index = g.index;
            let writer = match self.gwt.get(&index) {
                Some(GwtEntry::ExpectLocal { writer, remote }) if remote == from => writer.clone(),
                _ => return Err(self.protocol("no matching entry", m)),
            };
            self.gwt.remove(&index);
            let (value, spawned, links) = self.localize(&m.payload, scope);
            (writer, ReceiveKind::ExpectLocal { index }, value, spawned, links)
        } else if g.sort == Sort::Reader && g.agent == from {
            let found = self.gwt.iter().find_map(|(i, e)| match e {
                GwtEntry::ExpectRemote { writer, remote, remote_index } if *remote == g.agent && *remote_index == g.index => {
                    Some((*i, writer.clone()))
                }
                _ => None,
            });
            let Some((index, writer)) = found else {
                return Err(self.protocol("no matching entry", m));
            };
            self.gwt.remove(&index);
            let (value, spawned, links) = self.localize(&m.payload, scope);
            (writer, ReceiveKind::ExpectRemote { index }, value, spawned, links)
        } else {
            return Err(self.protocol("global name not addressed here", m));
        };
        let ws = WritersSubstitution::from_pairs([(target, value.clone())]).map_err(EngineError::from)?;
        let reactivated = self.resolvent.assign(&ws)?;
        self.resolvent.q.extend(reactivated.iter().cloned());
        Ok(Received { kind, value, ws, spawned, reactivated, links })
    }

    /// Items delivered on the network input stream so far.
    pub fn network_input(&self) -> Vec<Term> {
        self.stream_items(&self.boot[2])
    }

    /// Items written to the user output stream so far.
    pub fn user_output(&self) -> Vec<Term> {
        self.stream_items(&self.boot[1])
    }

    fn stream_items(&self, head: &Variable) -> Vec<Term> {
        let whole = self.resolvent.resolve(&Term::Var(head.as_reader()));
        let (items, _) = whole.list_items();
        items.into_iter().cloned().collect()
    }

    /// Global names left in goal arguments, ignoring the link argument of
    /// system goals.
    pub fn stray_global_names(&self) -> Vec<Term> {
        let mut out = Vec::new();
        for g in self.resolvent.all_goals() {
            let skip = if is_system_goal(&g.term) { Some(1) } else { None };
            for (k, a) in g.term.args().iter().enumerate() {
                if Some(k) != skip && a.contains_global() {
                    out.push(g.term.clone());
                }
            }
        }
        out
    }

    /// Only the serializer entry remains.
    pub fn table_is_clean(&self) -> bool {
        self.gwt.len() == 1 && matches!(self.gwt.get(&0), Some(GwtEntry::Serializer { .. }))
    }
}
