//! Observer-side correspondence between local pairs of different agents.
//!
//! Every Globalize/Localize step records that a local pair stands for a global
//! name. Pairs joined through global names form one abstract variable; its
//! canonical name is the first local pair recorded in the class.

use std::collections::BTreeMap;

use glp_core::{GlobalName, Term, Variable};

use crate::maglp::Link;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    Local(String, String, u32),
    Global(String, u64),
}

#[derive(Clone, Debug, Default)]
pub struct Links {
    parent: BTreeMap<Node, Node>,
}

fn local(agent: &str, v: &Variable) -> Node {
    Node::Local(agent.to_string(), v.name.clone(), v.scope)
}

fn global(g: &GlobalName) -> Node {
    Node::Global(g.agent.clone(), g.index)
}

impl Links {
    pub fn new() -> Links {
        Links::default()
    }

    fn find(&self, n: &Node) -> Node {
        let mut cur = n.clone();
        while let Some(p) = self.parent.get(&cur) {
            cur = p.clone();
        }
        cur
    }

    fn known(&self, n: &Node) -> bool {
        self.parent.contains_key(n) || self.parent.values().any(|p| p == n)
    }

    fn union(&mut self, first: Node, second: Node) {
        let (a, b) = (self.find(&first), self.find(&second));
        if a != b {
            self.parent.insert(b, a);
        }
    }

    /// Records that the pair of `link.local` at `agent` stands for `link.gname`.
    pub fn record(&mut self, agent: &str, link: &Link) {
        if link.gname.is_serializer() {
            return;
        }
        let (l, g) = (local(agent, &link.local), global(&link.gname));
        if self.known(&g) && !self.known(&l) {
            self.union(g, l);
        } else {
            self.union(l, g);
        }
    }

    pub fn record_all(&mut self, agent: &str, links: &[Link]) {
        for l in links {
            self.record(agent, l);
        }
    }

    fn representative(&self, n: &Node, sort: glp_core::Sort) -> Option<Variable> {
        match self.find(n) {
            Node::Local(_, name, scope) => Some(Variable { name, scope, sort }),
            Node::Global(..) => None,
        }
    }

    /// The abstract variable of a local variable at `agent`.
    pub fn canonical_var(&self, agent: &str, v: &Variable) -> Variable {
        self.representative(&local(agent, v), v.sort).unwrap_or_else(|| v.clone())
    }

    /// The abstract variable a global name stands for, with the name's sort.
    pub fn canonical_gname(&self, g: &GlobalName) -> Term {
        match self.representative(&global(g), g.sort) {
            Some(v) => Term::Var(v),
            None => Term::Global(g.clone()),
        }
    }

    /// Renames local variables of `t` at `agent` and global names to their
    /// abstract variables.
    pub fn canonical(&self, agent: &str, t: &Term) -> Term {
        match t {
            Term::Var(v) => Term::Var(self.canonical_var(agent, v)),
            Term::Global(g) => self.canonical_gname(g),
            Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| self.canonical(agent, a)).collect()),
            other => other.clone(),
        }
    }
}
