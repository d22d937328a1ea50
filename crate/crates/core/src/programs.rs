//! Bundled sample programs.

/// The running-sum monitor over `add`, `subtract` and `value(V)` requests.
pub const MONITOR: &str = include_str!("../programs/monitor.glp");

/// Goal that feeds the monitor `[add, add, subtract, value(V)]`.
pub const MONITOR_GOAL: &str = "monitor(Xs?), Xs := [add|Xs1?], Xs1 := [add|Xs2?], \
     Xs2 := [subtract|Xs3?], Xs3 := [value(V)|Xs4?], Xs4 := []";

/// A small program with a goal to run against it.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub name: &'static str,
    pub program: &'static str,
    pub goal: &'static str,
}

const PRODUCERS: &str = "
prod(X?) :- X := 5.
relay(In, Out?) :- Out := In?.
cons(5).
";

const LENGTH: &str = "
len([], N?) :- N := 0.
len([_|Xs], N?) :- len(Xs?, M), N := M? + 1.
";

const KIND: &str = "
kind(X, K?) :- integer(X?) | K := int.
kind(X, K?) :- string(X?) | K := atom.
kind(_, K?) :- K := other.
";

/// Terminating samples small enough for exhaustive enumeration.
pub const SAMPLES: &[Sample] = &[
    Sample { name: "unit", program: "p(a).", goal: "p(A)" },
    Sample { name: "producer_consumer", program: "p(a). c(a).", goal: "p(X), c(X?)" },
    Sample { name: "relay_chain", program: PRODUCERS, goal: "prod(A), relay(A?, B), relay(B?, C), cons(C?)" },
    Sample { name: "consumer_first", program: PRODUCERS, goal: "cons(C?), relay(A?, C), prod(A)" },
    Sample { name: "double", program: "double(X, Y?) :- Y := X? * 2.", goal: "double(3, Y)" },
    Sample { name: "guard_dispatch", program: KIND, goal: "kind(7, A), kind(foo, B), kind(f(x), C)" },
    Sample { name: "length", program: LENGTH, goal: "len([a,b], N)" },
    Sample { name: "swap", program: "swap(p(A,B), Q?) :- Q := p(B?,A?).", goal: "swap(p(1,2), R)" },
    Sample { name: "failure", program: "p(a).", goal: "p(b), p(A)" },
    Sample {
        name: "monitor_add",
        program: MONITOR,
        goal: "monitor(Xs?), Xs := [add|Xs1?], Xs1 := [value(V)|Xs2?], Xs2 := []",
    },
    Sample {
        name: "monitor_subtract",
        program: MONITOR,
        goal: "Xs := [subtract|Xs1?], Xs1 := [value(V)|Xs2?], Xs2 := [], monitor(Xs?)",
    },
    Sample {
        name: "monitor_balanced",
        program: MONITOR,
        goal: "monitor(Xs?), Xs := [add|Xs1?], Xs1 := [subtract|Xs2?], Xs2 := []",
    },
];
