use std::collections::BTreeSet;

use glp_core::oracle::*;
use glp_core::*;

fn goals(s: &str) -> Vec<Term> {
    parse_goal(s).unwrap().into_iter().map(|g| g.goal).collect()
}

fn program(s: &str) -> Program {
    parse_program(s).unwrap()
}

#[test]
fn successor_examples() {
    let p = program("p(a). c(a).");
    let c0 = OracleConfig::initial(&goals("p(X), c(X?)"));
    let s1 = glp_successors(&c0, &p).unwrap();
    assert_eq!(s1.len(), 1);
    assert_eq!(s1[0].0, Label::Reduce { goal: 0, clause_index: Some(0) });
    let s2 = glp_successors(&s1[0].1, &p).unwrap();
    assert_eq!(s2.len(), 1);
    assert!(matches!(&s2[0].0, Label::Communicate { reader } if reader.name == "X"));
    let s3 = glp_successors(&s2[0].1, &p).unwrap();
    assert_eq!(s3[0].0, Label::Reduce { goal: 1, clause_index: Some(1) });
    assert!(glp_successors(&s3[0].1, &p).unwrap().is_empty());

    assert!(glp_successors(&OracleConfig::initial(&[]), &p).unwrap().is_empty());
    let both = glp_successors(&OracleConfig::initial(&goals("p(a), c(b)")), &program("p(_). c(_).")).unwrap();
    assert_eq!(both.len(), 2);
}

#[test]
fn enumeration_examples() {
    let e = enumerate_outcomes(&goals("p(A)"), &program("p(a)."), 10).unwrap();
    assert!(e.complete);
    assert_eq!(e.outcomes.iter().map(|o| o.to_string()).collect::<Vec<_>>(), vec!["p(V0) :- true"]);

    let e = enumerate_outcomes(&goals("p(X), c(X?)"), &program("p(a). c(a)."), 10).unwrap();
    assert!(e.complete);
    assert_eq!(e.outcomes.iter().map(|o| o.to_string()).collect::<Vec<_>>(), vec!["p(V0), c(a) :- true"]);
    assert_eq!(e.max_steps, 3);

    let e = enumerate_outcomes(&goals("serve(0)"), &program("serve(N) :- N1 := N? + 1, serve(N1?)."), 10).unwrap();
    assert!(!e.complete);
}

#[test]
fn equivalence_examples() {
    let r = check_equivalence(&program("p(a)."), &goals("p(A)"), 10).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.reductions_match);

    let r = check_equivalence(&program(programs::MONITOR), &goals(programs::MONITOR_GOAL), 40).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r);

    // suspension is invisible to the abstract system; both sides keep the goal
    let r = check_equivalence(&program("c(a)."), &goals("c(X?)"), 10).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r);

    let r = check_equivalence(&program("serve(N) :- N1 := N? + 1, serve(N1?)."), &goals("serve(0)"), 8).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
}

#[test]
fn a_wrong_engine_outcome_is_a_mismatch() {
    let p = program("p(a). c(a).");
    let g0 = goals("p(X), c(X?)");
    let wrong = Outcome { head: goals("p(X), c(b)"), body: vec![] };
    let r = equivalence_with(&wrong, vec![Some(0), Some(1)], &p, &g0, 10).unwrap();
    assert_eq!(r.verdict, Verdict::Mismatch);
}

#[test]
fn sample_suite_is_confluent_and_matches_the_engine() {
    assert!(programs::SAMPLES.len() >= 10);
    for s in programs::SAMPLES {
        let p = program(s.program);
        let g0 = goals(s.goal);
        let r = check_equivalence(&p, &g0, 40).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}: {}", s.name, r);
        assert!(r.reductions_match, "{}: {}", s.name, r);
        assert_eq!(r.oracle.outcomes.len(), 1, "{}", s.name);
        assert!(r.dglp_reductions.len() <= 12, "{}", s.name);
    }
}

/// Reachable configurations, breadth first, up to `limit` of them.
fn reachable(g0: &[Term], p: &Program, limit: usize) -> Vec<OracleConfig> {
    let mut out = vec![OracleConfig::initial(g0)];
    let mut seen = BTreeSet::new();
    let mut i = 0;
    while i < out.len() && out.len() < limit {
        for (_, next) in glp_successors(&out[i], p).unwrap() {
            if seen.insert(next.outcome(g0).canonical()) {
                out.push(next);
            }
        }
        i += 1;
    }
    out
}

fn reducible(c: &OracleConfig, p: &Program) -> BTreeSet<u64> {
    glp_successors(c, p)
        .unwrap()
        .into_iter()
        .filter_map(|(l, _)| match l {
            Label::Reduce { goal, .. } => Some(goal),
            _ => None,
        })
        .collect()
}

#[test]
fn enabled_reductions_persist() {
    for s in programs::SAMPLES {
        let p = program(s.program);
        for c in reachable(&goals(s.goal), &p, 300) {
            let enabled = reducible(&c, &p);
            for (label, next) in glp_successors(&c, &p).unwrap() {
                let after = reducible(&next, &p);
                for g in &enabled {
                    if label != (Label::Reduce { goal: *g, clause_index: None })
                        && !matches!(label, Label::Reduce { goal, .. } if goal == *g)
                    {
                        assert!(after.contains(g), "{}: goal {} lost its reduction after {:?}", s.name, g, label);
                    }
                }
            }
        }
    }
}

#[test]
fn independent_reductions_commute() {
    for s in programs::SAMPLES {
        let p = program(s.program);
        let g0 = goals(s.goal);
        for c in reachable(&g0, &p, 200) {
            let succ = glp_successors(&c, &p).unwrap();
            for (la, a) in &succ {
                for (lb, b) in &succ {
                    let (Label::Reduce { goal: ga, .. }, Label::Reduce { goal: gb, .. }) = (la, lb) else { continue };
                    if ga >= gb {
                        continue;
                    }
                    let pick = |c: &OracleConfig, g: u64| {
                        glp_successors(c, &p)
                            .unwrap()
                            .into_iter()
                            .find(|(l, _)| matches!(l, Label::Reduce { goal, .. } if *goal == g))
                            .map(|(_, n)| n)
                            .unwrap()
                    };
                    let ab = pick(a, *gb);
                    let ba = pick(b, *ga);
                    assert_eq!(ab.outcome(&g0).canonical(), ba.outcome(&g0).canonical(), "{}", s.name);
                }
            }
        }
    }
}

#[test]
fn engine_traces_project_onto_abstract_runs() {
    for s in programs::SAMPLES {
        let p = program(s.program);
        let g0 = goals(s.goal);
        let run = dglp_run(&g0, &p, 1000).unwrap();
        let report = validate_projection(&g0, &run.trace, &p);
        assert!(report.is_valid(), "{}: {:?}", s.name, report);
    }
    assert!(validate_projection(&[], &[], &program("p(a).")).is_valid());
}

#[test]
fn corrupted_trace_is_rejected_at_the_swapped_step() {
    let p = program(programs::MONITOR);
    let g0 = goals(programs::MONITOR_GOAL);
    let mut trace = dglp_run(&g0, &p, 1000).unwrap().trace;
    let reduced: Vec<usize> = trace
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e, StepEvent::Reduced { ws, .. } if !ws.is_empty()))
        .map(|(i, _)| i)
        .collect();
    let (i, j) = (reduced[1], reduced[2]);
    let wi = match &trace[i] {
        StepEvent::Reduced { ws, .. } => ws.clone(),
        _ => unreachable!(),
    };
    let wj = match &trace[j] {
        StepEvent::Reduced { ws, .. } => ws.clone(),
        _ => unreachable!(),
    };
    if let StepEvent::Reduced { ws, .. } = &mut trace[i] {
        *ws = wj;
    }
    if let StepEvent::Reduced { ws, .. } = &mut trace[j] {
        *ws = wi;
    }
    let report = validate_projection(&g0, &trace, &p);
    assert_eq!(report.violation.map(|(step, _)| step), Some(i));
}

#[test]
fn nonterminating_run_is_inconclusive() {
    let p = parse_program("loop(X) :- loop(X?).").unwrap();
    let g0 = vec![parse_term("loop(a)").unwrap()];
    let e = enumerate_outcomes(&g0, &p, 8).unwrap();
    assert!(!e.complete);
    assert!(e.outcomes.is_empty());
    assert_eq!(check_equivalence(&p, &g0, 8).unwrap().verdict, Verdict::Inconclusive);
}
