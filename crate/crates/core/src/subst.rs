//! Writers and readers substitutions.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::term::{Sort, Term, Variable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubstError {
    #[error("{0} has the wrong sort for this substitution")]
    WrongSort(Variable),
    #[error("{0} cannot be assigned a bare writer")]
    BareWriter(Variable),
    #[error("{0} is assigned twice")]
    Overlap(Variable),
}

/// Anything that maps variables to terms.
pub trait Lookup {
    fn lookup(&self, v: &Variable) -> Option<&Term>;
}

macro_rules! substitution {
    ($name:ident, $sort:expr) => {
        #[derive(Clone, Debug, Default, PartialEq, Eq)]
        pub struct $name(BTreeMap<Variable, Term>);

        impl $name {
            pub fn new() -> Self {
                Self(BTreeMap::new())
            }

            /// Adds `var := term`, rejecting wrong sorts, bare writer values
            /// and reassignment.
            pub fn insert(&mut self, var: Variable, term: Term) -> Result<(), SubstError> {
                if var.sort != $sort {
                    return Err(SubstError::WrongSort(var));
                }
                if term.is_writer() {
                    return Err(SubstError::BareWriter(var));
                }
                if self.0.contains_key(&var) {
                    return Err(SubstError::Overlap(var));
                }
                self.0.insert(var, term);
                Ok(())
            }

            pub fn from_pairs(pairs: impl IntoIterator<Item = (Variable, Term)>) -> Result<Self, SubstError> {
                let mut s = Self::new();
                for (v, t) in pairs {
                    s.insert(v, t)?;
                }
                Ok(s)
            }

            pub fn get(&self, var: &Variable) -> Option<&Term> {
                self.0.get(var)
            }

            pub fn contains(&self, var: &Variable) -> bool {
                self.0.contains_key(var)
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
                self.0.iter()
            }

            pub fn domain(&self) -> impl Iterator<Item = &Variable> {
                self.0.keys()
            }

            pub fn remove(&mut self, var: &Variable) -> Option<Term> {
                self.0.remove(var)
            }

            pub fn map_range(&self, mut f: impl FnMut(&Term) -> Term) -> Self {
                Self(self.0.iter().map(|(v, t)| (v.clone(), f(t))).collect())
            }
        }

        impl Lookup for $name {
            fn lookup(&self, v: &Variable) -> Option<&Term> {
                self.0.get(v)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("{")?;
                for (i, (v, t)) in self.0.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{} := {}", v, t)?;
                }
                f.write_str("}")
            }
        }
    };
}

substitution!(WritersSubstitution, Sort::Writer);
substitution!(ReadersSubstitution, Sort::Reader);

/// `{X := T}` becomes `{X? := T}` with identical ranges.
pub fn readers_counterpart(ws: &WritersSubstitution) -> ReadersSubstitution {
    ReadersSubstitution(ws.iter().map(|(v, t)| (v.as_reader(), t.clone())).collect())
}

/// Single-pass simultaneous replacement of domain variables.
pub fn apply_substitution(t: &Term, s: &impl Lookup) -> Term {
    t.map_vars(&mut |v| s.lookup(v).cloned().unwrap_or_else(|| Term::Var(v.clone())))
}

/// Union of two readers substitutions with disjoint domains.
pub fn compose_disjoint(s1: &ReadersSubstitution, s2: &ReadersSubstitution) -> Result<ReadersSubstitution, SubstError> {
    let mut out = s1.clone();
    for (v, t) in s2.iter() {
        out.insert(v.clone(), t.clone())?;
    }
    Ok(out)
}

/// Replaces readers by their values repeatedly until none of the remaining
/// readers is bound. `value_of` receives a reader. A reader reached again
/// while its own value is being expanded is left in place.
pub fn resolve<'a>(t: &Term, value_of: &impl Fn(&Variable) -> Option<&'a Term>) -> Term {
    fn go<'a>(t: &Term, value_of: &impl Fn(&Variable) -> Option<&'a Term>, stack: &mut Vec<Variable>) -> Term {
        match t {
            Term::Var(v) if v.is_reader() => {
                if stack.contains(v) {
                    return t.clone();
                }
                match value_of(v) {
                    Some(val) => {
                        stack.push(v.clone());
                        let out = go(val, value_of, stack);
                        stack.pop();
                        out
                    }
                    None => t.clone(),
                }
            }
            Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| go(a, value_of, stack)).collect()),
            _ => t.clone(),
        }
    }
    go(t, value_of, &mut Vec::new())
}
