//! Core of a concurrent single-assignment logic programming runtime: the
//! term model, concrete syntax, head matching, the deterministic engine and
//! a brute-force nondeterministic oracle for checking it.

pub mod dglp;
pub mod matching;
pub mod oracle;
pub mod outcome;
pub mod parser;
pub mod program;
pub mod programs;
pub mod subst;
pub mod term;

pub use dglp::{dglp_run, dglp_step, DConfig, EngineError, Goal, Run, RunStatus, StepEvent};
pub use matching::{match_head, reduce_goal, MatchOutcome, ReduceResult, ScopeCounter};
pub use outcome::Outcome;
pub use parser::{parse_goal, parse_program, parse_term, print_term, AnnotatedGoal, ParseError};
pub use program::{check_so, check_srsw, rename_apart, Clause, Program, Violation};
pub use subst::{apply_substitution, compose_disjoint, readers_counterpart, ReadersSubstitution, WritersSubstitution};
pub use term::{Const, GlobalName, Sort, Term, Variable};
