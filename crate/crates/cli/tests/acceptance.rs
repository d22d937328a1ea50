//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};

use glp_core::oracle::{check_equivalence, Verdict};
use glp_core::{
    apply_substitution, dglp_run, match_head, parse_goal, parse_program, programs, readers_counterpart, MatchOutcome,
    ReadersSubstitution, RunStatus, Term, Variable,
};
use glp_net::harness::SystemConfig;
use glp_net::maglp::{AgentEvent, GwtEntry};
use glp_net::{run_scenario, scenarios, validate_maglp_trace, AgentState, Policy, Scenario, SystemEvent, TraceStatus};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn goals(s: &str) -> Vec<Term> {
    parse_goal(s).unwrap().into_iter().map(|g| g.goal).collect()
}

fn monitor_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/programs/monitor.glp")
}

fn glp_check(path: &std::path::Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_glp")).arg("check").arg(path).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn srsw_gate() -> Check {
    let (code, err) = glp_check(&monitor_path());
    ensure!(code == 0, "monitor rejected ({}): {}", code, err);
    let program = parse_program(programs::MONITOR).unwrap();
    let dir = std::env::temp_dir().join(format!("glp-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut mutants = 0;
    for (ci, clause) in program.clauses.iter().enumerate() {
        let counts = glp_core::term::occurrence_counts(clause.terms());
        let once: Vec<Variable> =
            counts.into_iter().filter(|(v, n)| v.is_reader() && !v.is_anonymous() && *n == 1).map(|(v, _)| v).collect();
        for r in once {
            let mut mutant = program.clone();
            let gone = |t: &Term| t.map_vars(&mut |v| if *v == r { Term::atom("gone") } else { Term::Var(v.clone()) });
            let c = &mut mutant.clauses[ci];
            c.head = gone(&c.head);
            c.guards = c.guards.iter().map(gone).collect();
            c.body = c.body.iter().map(gone).collect();
            let path = dir.join(format!("mutant{}.glp", mutants));
            std::fs::write(&path, mutant.to_string()).unwrap();
            let (code, err) = glp_check(&path);
            let w = r.paired();
            ensure!(code == 2, "mutant without {} in clause {} exited {}", r, ci + 1, code);
            ensure!(err.contains(&format!("{} occurs without {}", w, r)), "mutant without {}: {}", r, err);
            mutants += 1;
        }
    }
    ensure!(mutants >= 8, "only {} mutants", mutants);
    Ok(())
}

fn monitor_outcome() -> Check {
    let p = parse_program(programs::MONITOR).unwrap();
    let run = dglp_run(&goals(programs::MONITOR_GOAL), &p, 10_000).map_err(|e| e.to_string())?;
    ensure!(run.status == RunStatus::Terminal, "status {}", run.status);
    ensure!(run.config.s.is_empty() && run.config.f.is_empty(), "suspended or failed goals remain");
    let v = run.config.resolve(&Term::reader("V"));
    ensure!(v == Term::int(1), "V? = {}", v);
    ensure!(run.config.binding_report().contains(&(Variable::reader("V", 0), Term::int(1))), "binding report lacks V? = 1");
    Ok(())
}

fn oracle_equivalence() -> Check {
    ensure!(programs::SAMPLES.len() >= 10, "suite too small");
    for s in programs::SAMPLES {
        let p = parse_program(s.program).unwrap();
        let r = check_equivalence(&p, &goals(s.goal), 40).map_err(|e| e.to_string())?;
        ensure!(r.oracle.complete, "{}: enumeration truncated", s.name);
        ensure!(r.oracle.outcomes.len() == 1, "{}: {} outcomes", s.name, r.oracle.outcomes.len());
        ensure!(r.verdict == Verdict::Pass, "{}: {}", s.name, r);
        ensure!(r.dglp_reductions.len() <= 12, "{}: {} reductions", s.name, r.dglp_reductions.len());
    }
    Ok(())
}

fn shape() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["a", "b"]).prop_map(Term::atom),
        (0i64..3).prop_map(Term::int),
        Just(Term::writer("V")),
        Just(Term::reader("V")),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(|a| Term::app("f", a)),
            (inner.clone(), inner).prop_map(|(h, t)| Term::cons(h, t)),
        ]
    })
}

fn numbered(t: &Term, prefix: &str, scope: u32) -> Term {
    let mut n = 0;
    t.map_vars(&mut |v| {
        n += 1;
        Term::Var(Variable { name: format!("{}{}", prefix, n), scope, sort: v.sort })
    })
}

fn facing<'a>(a: &'a Term, h: &'a Term, out: &mut Vec<(&'a Variable, &'a Term)>) {
    match (a, h) {
        (Term::Var(x), _) if x.is_reader() => out.push((x, h)),
        (Term::Compound(f, xs), Term::Compound(g, ys)) if f == g && xs.len() == ys.len() => {
            for (x, y) in xs.iter().zip(ys) {
                facing(x, y, out);
            }
        }
        _ => {}
    }
}

/// Grounds the goal readers in `w` with an instance of the head subterm they face.
fn ground_per_head(a: &Term, h: &Term, w: &BTreeSet<Variable>) -> Term {
    let mut pairs = Vec::new();
    facing(a, h, &mut pairs);
    let rs = ReadersSubstitution::from_pairs(
        pairs.into_iter().filter(|(v, _)| w.contains(*v)).map(|(v, t)| (v.clone(), t.map_vars(&mut |_| Term::atom("z")))),
    )
    .unwrap();
    apply_substitution(a, &rs)
}

fn suspension_algebra() -> Check {
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    let strategy = (shape(), shape(), prop::collection::vec(0i64..3, 8));
    runner
        .run(&strategy, |(ga, gh, fill)| {
            let a = Term::app("p", vec![numbered(&ga, "A", 0)]);
            let h = Term::app("p", vec![numbered(&gh, "H", 1)]);
            match match_head(&a, &h).unwrap() {
                MatchOutcome::Success(ws) => {
                    prop_assert!(ws.domain().all(|v| v.is_writer()));
                    let rs = readers_counterpart(&ws);
                    let close = |t: &Term| {
                        let t = apply_substitution(&apply_substitution(t, &ws), &rs);
                        glp_core::subst::resolve(&t, &|v: &Variable| rs.get(v))
                    };
                    prop_assert_eq!(close(&a), close(&h));
                }
                MatchOutcome::Suspend(w) => {
                    let grounded = ground_per_head(&a, &h, &w);
                    prop_assert!(matches!(match_head(&grounded, &h).unwrap(), MatchOutcome::Success(_)));
                }
                MatchOutcome::Fail => {
                    let mut i = 0;
                    let bound = a.map_vars(&mut |v| {
                        i += 1;
                        if v.is_reader() {
                            Term::int(fill[i % fill.len()])
                        } else {
                            Term::Var(v.clone())
                        }
                    });
                    prop_assert_eq!(match_head(&bound, &h).unwrap(), MatchOutcome::Fail);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn plain(t: &Term) -> String {
    t.map_vars(&mut |v| Term::Var(Variable { scope: 0, ..v.clone() })).to_string()
}

fn plain_var(v: &Variable) -> String {
    Variable { scope: 0, ..v.clone() }.to_string()
}

fn table(a: &AgentState) -> String {
    let items: Vec<String> = a
        .gwt
        .iter()
        .map(|(i, e)| match e {
            GwtEntry::ExpectLocal { writer, remote } => format!("{}: ({}, {})", i, plain_var(writer), remote),
            GwtEntry::ExpectRemote { writer, remote, remote_index } => {
                format!("{}: ({}, {}, {})", i, plain_var(writer), remote, remote_index)
            }
            GwtEntry::Serializer { writer } => format!("{}: ({}, *)", i, plain_var(writer)),
        })
        .collect();
    format!("{{{}}}", items.join(", "))
}

type Row = [String; 4];

/// Agent, assignment moved, watchers spawned and table afterwards, for each
/// link-level event.
fn link_events(sys: &mut SystemConfig) -> Result<Vec<Row>, String> {
    let mut out = Vec::new();
    while let Some(e) = sys.system_step().map_err(|e| e.to_string())? {
        let row = match &e.event {
            SystemEvent::Reduce { agent, event: AgentEvent::Sent { message, spawned, .. } } => Some((
                agent.clone(),
                format!("{} := {}", message.gname, plain(&message.payload)),
                spawned.iter().map(|g| plain(&g.term)).collect::<Vec<_>>(),
            )),
            SystemEvent::Receive { agent, received, .. } => {
                let (v, t) = received.ws.iter().next().unwrap();
                Some((
                    agent.clone(),
                    format!("{} := {}", plain_var(v), plain(t)),
                    received.spawned.iter().map(|g| plain(&g.term)).collect(),
                ))
            }
            _ => None,
        };
        if let Some((agent, what, spawned)) = row {
            let t = table(&sys.agents[&agent]);
            out.push([agent, what, spawned.join("; "), t]);
        }
    }
    Ok(out)
}

fn row(cells: [&str; 4]) -> Row {
    cells.map(String::from)
}

fn golden_client_monitor() -> Check {
    let mut sys = SystemConfig::build(&scenarios::load("client_monitor")).map_err(|e| e.to_string())?;
    ensure!(table(&sys.agents["p"]) == "{0: (NetIn, *)}", "initial p table {}", table(&sys.agents["p"]));
    ensure!(
        table(&sys.agents["q"]) == "{0: (NetIn, *), 1: (Xs, p, 1)}",
        "initial q table {}",
        table(&sys.agents["q"])
    );
    ensure!(
        sys.agents["p"].resolvent.q.iter().any(|g| plain(&g.term) == "global_send(Xs?,_r(p,1),q)"),
        "initial watcher missing"
    );
    let pi = sys.pi().goal_multisets();
    ensure!(pi["p"].iter().map(plain).collect::<Vec<_>>() == ["client1(Xs)"], "initial goals at p");
    ensure!(pi["q"].iter().map(plain).collect::<Vec<_>>() == ["monitor(Xs?)"], "initial goals at q");
    let expected = vec![
        row(["p", "_r(p,1) := [add|_r(p,2)]", "global_send(Xs?,_r(p,2),q)", "{0: (NetIn, *)}"]),
        row(["q", "Xs := [add|Rp2?]", "", "{0: (NetIn, *), 2: (Rp2, p, 2)}"]),
        row(["p", "_r(p,2) := [value(_w(p,3))|_r(p,4)]", "global_send(Xs2?,_r(p,4),q)", "{0: (NetIn, *), 3: (V, q)}"]),
        row(["q", "Rp2 := [value(Wp3)|Rp4?]", "global_send(Wp3?,_w(p,3),p)", "{0: (NetIn, *), 3: (Rp4, p, 4)}"]),
        row(["q", "_w(p,3) := 1", "", "{0: (NetIn, *), 3: (Rp4, p, 4)}"]),
        row(["p", "V := 1", "", "{0: (NetIn, *)}"]),
        row(["p", "_r(p,4) := []", "", "{0: (NetIn, *)}"]),
        row(["q", "Rp4 := []", "", "{0: (NetIn, *)}"]),
    ];
    let got = link_events(&mut sys)?;
    for (i, (g, e)) in got.iter().zip(&expected).enumerate() {
        ensure!(g == e, "event {}: got {:?}, expected {:?}", i, g, e);
    }
    ensure!(got.len() == expected.len(), "{} link events, expected {}", got.len(), expected.len());
    let bound = &sys.binding_report()["p"];
    ensure!(
        bound == &vec![(Variable::reader("Xs", 0), Term::list(vec![Term::atom("add"), Term::app("value", vec![Term::int(1)])]))],
        "final bindings {:?}",
        bound
    );
    Ok(())
}

fn introduction_relay() -> Check {
    let run = run_scenario(&scenarios::load("introduction")).map_err(|e| e.to_string())?;
    ensure!(run.trace.status == TraceStatus::Quiescent, "not quiescent");
    let links = run.trace.link_messages();
    ensure!(links.len() == 2, "{} link messages", links.len());
    let sys = &run.system;
    let x = sys.links.canonical_var("bob", &Variable::writer("X", 0));
    for agent in ["alice", "bob", "charlie"] {
        let a = &sys.agents[agent];
        let values: Vec<Term> = a
            .resolvent
            .writer_store
            .domain()
            .filter(|v| sys.links.canonical_var(agent, v) == x)
            .map(|v| a.resolvent.resolve(&Term::Var(v.as_reader())))
            .collect();
        ensure!(!values.is_empty(), "{} holds no pair of the shared variable", agent);
        ensure!(values.iter().all(|t| *t == Term::atom("hello")), "{}: {:?}", agent, values);
    }
    let report = validate_maglp_trace(&run.trace, &sys.program);
    ensure!(report.is_valid(), "{}", report);
    Ok(())
}

fn both_ends() -> Check {
    let mut sys = SystemConfig::build(&scenarios::load("both_ends")).map_err(|e| e.to_string())?;
    let events = link_events(&mut sys)?;
    let flow: Vec<(&str, &str)> = events.iter().map(|r| (r[0].as_str(), r[1].as_str())).collect();
    let expected = [
        ("bob", "_w(alice,0) := [[_w(bob,1),_r(bob,2)]|_w(alice,0)]"),
        ("alice", "NetIn := [[Wbob1,Rbob2?]|NetIn?]"),
        ("alice", "_w(bob,1) := hello"),
        ("bob", "X := hello"),
        ("bob", "_r(bob,2) := hello"),
        ("alice", "Rbob2 := hello"),
    ];
    ensure!(flow == expected, "flow {:?}", flow);
    ensure!(events[0][3] == "{0: (NetIn, *), 1: (X, alice)}", "export table {}", events[0][3]);
    ensure!(events[0][2] == "global_send(X?,_r(bob,2),alice)", "export watcher {}", events[0][2]);
    ensure!(events[1][2] == "global_send(Wbob1?,_w(bob,1),bob)", "import watcher {}", events[1][2]);
    let report = sys.binding_report();
    let hello = Term::atom("hello");
    ensure!(report["alice"] == vec![(Variable::reader("Got", 0), hello.clone())], "alice {:?}", report["alice"]);
    ensure!(report["bob"] == vec![(Variable::reader("X", 0), hello)], "bob {:?}", report["bob"]);
    for (id, a) in &sys.agents {
        ensure!(a.table_is_clean(), "{} table {}", id, table(a));
    }
    Ok(())
}

fn serializer_concurrency() -> Check {
    let expected: BTreeSet<&str> = ["hello(a)", "hello(b)", "hello(c)"].into();
    for seed in 0..20 {
        let sc = scenarios::load("serializer").with_policy(Policy::SeededRandom, seed);
        let mut sys = SystemConfig::build(&sc).map_err(|e| e.to_string())?;
        while sys.system_step().map_err(|e| e.to_string())?.is_some() {
            ensure!(
                matches!(sys.agents["r"].gwt.get(&0), Some(GwtEntry::Serializer { .. })),
                "seed {}: serializer entry missing",
                seed
            );
        }
        let items: Vec<String> = sys.agents["r"].network_input().iter().map(plain).collect();
        ensure!(items.len() == 3, "seed {}: {:?}", seed, items);
        let got: BTreeSet<&str> = items.iter().map(String::as_str).collect();
        ensure!(got == expected, "seed {}: {:?}", seed, items);
    }
    Ok(())
}

const F_SCENARIOS: [&str; 4] = ["client_monitor", "introduction", "both_ends", "serializer"];

fn schedules() -> Vec<(Policy, u64)> {
    let mut v = vec![(Policy::RoundRobin, 0), (Policy::Adversarial, 0)];
    v.extend((0..5).map(|s| (Policy::SeededRandom, s)));
    v
}

fn replay_and_policy_independence() -> Check {
    for name in F_SCENARIOS {
        let reference = run_scenario(&scenarios::load(name)).map_err(|e| e.to_string())?.system.final_outcome();
        for (policy, seed) in schedules() {
            let sc = scenarios::load(name).with_policy(policy, seed);
            let a = run_scenario(&sc).map_err(|e| e.to_string())?;
            let b = run_scenario(&sc).map_err(|e| e.to_string())?;
            ensure!(a.trace.to_lines() == b.trace.to_lines(), "{} {} {}: replay differs", name, policy, seed);
            let o = a.system.final_outcome();
            ensure!(o == reference, "{} {} {}: {} vs {}", name, policy, seed, o, reference);
        }
    }
    Ok(())
}

fn pi_refinement() -> Check {
    for name in F_SCENARIOS {
        for (policy, seed) in schedules().into_iter().chain((5..20).map(|s| (Policy::SeededRandom, s))) {
            let run = run_scenario(&scenarios::load(name).with_policy(policy, seed)).map_err(|e| e.to_string())?;
            let report = validate_maglp_trace(&run.trace, &run.system.program);
            ensure!(report.is_valid(), "{} {} {}: {}", name, policy, seed, report);
            let hygiene = run.system.hygiene_violations();
            ensure!(hygiene.is_empty(), "{} {} {}: {:?}", name, policy, seed, hygiene);
        }
    }
    Ok(())
}

fn obliviousness() -> Check {
    for (policy, seed) in schedules() {
        let two: Scenario = scenarios::load("client_monitor").with_policy(policy, seed);
        let mut three = two.clone();
        three.agents.push("r".into());
        three.silent.push("r".into());
        let a = run_scenario(&two).map_err(|e| e.to_string())?.trace.records();
        let b = run_scenario(&three).map_err(|e| e.to_string())?.trace.records();
        ensure!(a == b, "{} {}: traces differ once r is added", policy, seed);
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("srsw gate", srsw_gate),
        ("monitor outcome", monitor_outcome),
        ("oracle equivalence", oracle_equivalence),
        ("suspension algebra", suspension_algebra),
        ("golden client-monitor trace", golden_client_monitor),
        ("introduction relay", introduction_relay),
        ("both ends", both_ends),
        ("serializer concurrency", serializer_concurrency),
        ("replay and policy independence", replay_and_policy_independence),
        ("pi refinement", pi_refinement),
        ("obliviousness", obliviousness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(()) => println!("PASS {:>2} {}", i + 1, name),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {}: {}", i + 1, name, why);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
