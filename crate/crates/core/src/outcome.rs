//! Run outcomes and their renaming-invariant canonical form.

use std::collections::BTreeMap;
use std::fmt;

use crate::term::{Term, Variable};

/// The clause `G0 :- Gn`, with the run's bindings applied.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Outcome {
    pub head: Vec<Term>,
    pub body: Vec<Term>,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |ts: &[Term]| {
            if ts.is_empty() {
                "true".to_string()
            } else {
                ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
            }
        };
        write!(f, "{} :- {}", join(&self.head), join(&self.body))
    }
}

fn shape(t: &Term) -> String {
    t.map_vars(&mut |v| Term::Var(Variable { name: "_".into(), scope: 0, sort: v.sort })).to_string()
}

/// Renames pairs by first occurrence, head then body. The body is a multiset:
/// it is ordered by variable-free shape, and goals of equal shape are tried
/// in every order, keeping the least renamed result.
pub fn canonicalize(o: &Outcome) -> Outcome {
    let mut body = o.body.clone();
    body.sort_by_cached_key(shape);
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < body.len() {
        let s = shape(&body[i]);
        let j = (i..body.len()).find(|&j| shape(&body[j]) != s).unwrap_or(body.len());
        if j - i > 1 {
            groups.push((i, j));
        }
        i = j;
    }
    let orders: usize = groups.iter().map(|&(a, b)| (1..=b - a).product::<usize>()).product();
    if orders > MAX_ORDERS {
        return rename(&o.head, &body);
    }
    let mut best: Option<Outcome> = None;
    permute_groups(&mut body, &groups, &o.head, &mut best);
    best.unwrap_or_else(|| rename(&o.head, &body))
}

const MAX_ORDERS: usize = 5040;

fn permute_groups(body: &mut Vec<Term>, groups: &[(usize, usize)], head: &[Term], best: &mut Option<Outcome>) {
    let Some((&(a, b), rest)) = groups.split_first() else {
        let candidate = rename(head, body);
        if best.as_ref().is_none_or(|b| candidate < *b) {
            *best = Some(candidate);
        }
        return;
    };
    heap_permute(body, a, b - a, &mut |body| permute_groups(body, rest, head, best));
}

fn heap_permute(v: &mut Vec<Term>, start: usize, k: usize, visit: &mut dyn FnMut(&mut Vec<Term>)) {
    if k <= 1 {
        visit(v);
        return;
    }
    for i in 0..k {
        heap_permute(v, start, k - 1, visit);
        let j = if k.is_multiple_of(2) { i } else { 0 };
        v.swap(start + j, start + k - 1);
    }
}

fn rename(head: &[Term], body: &[Term]) -> Outcome {
    let mut names: BTreeMap<(String, u32), String> = BTreeMap::new();
    let mut rename = |v: &Variable| {
        let n = names.len();
        let name = names.entry(v.pair_key()).or_insert_with(|| format!("V{}", n)).clone();
        Term::Var(Variable { name, scope: 0, sort: v.sort })
    };
    let head = head.iter().map(|t| t.map_vars(&mut rename)).collect();
    let mut body: Vec<Term> = body.iter().map(|t| t.map_vars(&mut rename)).collect();
    body.sort();
    Outcome { head, body }
}

impl Outcome {
    pub fn canonical(&self) -> Outcome {
        canonicalize(self)
    }
}
