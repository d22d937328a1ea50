use glp_core::{parse_program, parse_term, GlobalName, Program, Term, Variable};
use glp_net::maglp::{boot_agent, with_library, AgentEvent, BootMode, GwtEntry, MaglpError, OutMessage};

fn t(s: &str) -> Term {
    parse_term(s).unwrap()
}

fn lib() -> Program {
    with_library(&Program::default())
}

fn plain(t: &Term) -> String {
    t.map_vars(&mut |v| Term::Var(Variable { scope: 0, ..v.clone() })).to_string()
}

fn queued(a: &glp_net::AgentState) -> Vec<String> {
    a.resolvent.q.iter().map(|g| plain(&g.term)).collect()
}

#[test]
fn boot_creates_serializer_and_network_goal() {
    let a = boot_agent("p", 0, BootMode::Bootstrap, &[]).unwrap();
    assert_eq!(queued(&a), vec!["agent(ch(UserIn?,UserOut),ch(NetIn?,NetOut))", "send_to_net(NetOut?)"]);
    assert_eq!(a.gwt.len(), 1);
    assert!(matches!(&a.gwt[&0], GwtEntry::Serializer { writer } if writer.name == "NetIn"));
    assert_eq!(a.next_index, 1);

    let d = boot_agent("p", 0, BootMode::Direct(vec![t("client1(Xs)")]), &[]).unwrap();
    assert_eq!(queued(&d), vec!["client1(Xs)", "send_to_net(NetOut?)"]);

    // Same boot at another position differs only in scopes.
    let b = boot_agent("p", 3, BootMode::Bootstrap, &[]).unwrap();
    assert_eq!(queued(&a), queued(&b));
    assert_ne!(a.boot[0].scope, b.boot[0].scope);
    assert!(boot_agent("Bad", 0, BootMode::Bootstrap, &[]).is_err());
}

#[test]
fn direct_mode_binds_reserved_names_to_boot_pairs() {
    let a = boot_agent("p", 0, BootMode::Direct(vec![t("NetOut := [msg(q, hi)]")]), &[]).unwrap();
    let g = &a.resolvent.q[0].term;
    assert_eq!(g.args()[0], Term::Var(a.boot[3].clone()));
}

#[test]
fn globalize_writers_get_entries_readers_get_watchers() {
    let mut a = boot_agent("p", 0, BootMode::Direct(vec![]), &[]).unwrap();
    let before = a.resolvent.q.len();
    let (payload, spawned, links) = a.globalize(&t("[value(V)|Xs2?]"), "q");
    assert_eq!(payload, t("[value(_w(p,1))|_r(p,2)]"));
    assert_eq!(a.gwt[&1], GwtEntry::ExpectLocal { writer: Variable::writer("V", 0), remote: "q".into() });
    assert!(!a.gwt.contains_key(&2));
    assert_eq!(spawned.len(), 1);
    assert_eq!(spawned[0].term, t("global_send(Xs2?, _r(p,2), q)"));
    assert_eq!(a.resolvent.q.len(), before + 1);
    assert_eq!(links.len(), 2);
    assert_eq!(a.next_index, 3);

    let (ground, none, _) = a.globalize(&t("f(a, [1,2])"), "q");
    assert_eq!(ground, t("f(a, [1,2])"));
    assert!(none.is_empty());
    assert_eq!(a.next_index, 3);
}

#[test]
fn globalize_both_ends() {
    let mut a = boot_agent("p", 0, BootMode::Direct(vec![]), &[]).unwrap();
    let (payload, spawned, _) = a.globalize(&t("[X, X?]"), "q");
    assert_eq!(payload, t("[_w(p,1), _r(p,2)]"));
    assert_eq!(a.gwt[&1], GwtEntry::ExpectLocal { writer: Variable::writer("X", 0), remote: "q".into() });
    assert_eq!(spawned[0].term, t("global_send(X?, _r(p,2), q)"));
}

#[test]
fn localize_mirrors_globalize() {
    let mut q = boot_agent("q", 1, BootMode::Direct(vec![]), &[]).unwrap();
    let (local, spawned, links) = q.localize(&t("[_w(p,1), _r(p,2)]"), 9);
    assert_eq!(plain(&local), "[Wp1,Rp2?]");
    assert_eq!(spawned.len(), 1);
    assert_eq!(plain(&spawned[0].term), "global_send(Wp1?,_w(p,1),p)");
    assert_eq!(
        q.gwt[&1],
        GwtEntry::ExpectRemote { writer: Variable::writer("Rp2", 9), remote: "p".into(), remote_index: 2 }
    );
    assert_eq!(links.len(), 2);
    let (same, none, _) = q.localize(&t("g(b)"), 10);
    assert_eq!(same, t("g(b)"));
    assert!(none.is_empty());
}

#[test]
fn send_builtin_wraps_serializer_messages() {
    let mut a = boot_agent("p", 0, BootMode::Direct(vec![t("'_send'(f(Y?), _w(q,0), q)")]), &[]).unwrap();
    let ev = a.reduce_transaction(&lib()).unwrap();
    let AgentEvent::Sent { message, spawned, .. } = ev else { panic!("{:?}", ev) };
    assert_eq!(message.to_string(), "(_w(q,0) := [f(_r(p,1))|_w(q,0)], q)");
    assert_eq!(spawned.len(), 1);
    assert_eq!(a.outbox.len(), 1);

    let mut b = boot_agent("p", 0, BootMode::Direct(vec![t("'_send'(Y?, _r(p,4), q)")]), &[]).unwrap();
    assert!(matches!(b.reduce_transaction(&lib()), Err(MaglpError::SendUnbound(_))));
}

#[test]
fn watcher_sends_in_the_same_transaction() {
    let goals = vec![t("global_send(X?, _r(p,9), q)"), t("X := [add|Y?]")];
    let mut a = boot_agent("p", 0, BootMode::Direct(goals), &[]).unwrap();
    let p = lib();
    let mut sent = None;
    for _ in 0..10 {
        if let AgentEvent::Sent { message, .. } = a.reduce_transaction(&p).unwrap() {
            sent = Some(message);
            break;
        }
    }
    assert_eq!(sent.unwrap().to_string(), "(_r(p,9) := [add|_r(p,1)], q)");
    assert!(a.resolvent.all_goals().all(|g| !g.term.to_string().starts_with("'_send'")));
}

#[test]
fn cold_call_spawns_serializer_watcher() {
    let goals = vec![t("NetOut := [msg(q, hi(Z))]")];
    let mut a = boot_agent("p", 0, BootMode::Direct(goals), &[]).unwrap();
    let p = lib();
    let mut events = Vec::new();
    for _ in 0..6 {
        events.push(a.reduce_transaction(&p).unwrap());
    }
    let call = events.iter().find_map(|e| match e {
        AgentEvent::ColdCall { dest, payload, .. } => Some((dest.clone(), plain(payload))),
        _ => None,
    });
    assert_eq!(call, Some(("q".to_string(), "hi(Z)".to_string())));
    assert_eq!(a.outbox.len(), 1);
    assert_eq!(a.outbox[0].message.to_string(), "(_w(q,0) := [hi(_w(p,1))|_w(q,0)], q)");
}

fn msg(g: GlobalName, payload: &str, dest: &str) -> OutMessage {
    OutMessage { gname: g, payload: t(payload), dest: dest.into() }
}

#[test]
fn receive_cases() {
    let p = parse_program("wait([X|_]) :- known(X?) | true.").unwrap();
    let prog = with_library(&p);
    let mut q = boot_agent("q", 1, BootMode::Direct(vec![t("wait(NetIn?)")]), &[]).unwrap();
    while !q.resolvent.q.is_empty() {
        q.reduce_transaction(&prog).unwrap();
    }
    // Serializer case: stream extended, entry rolls over.
    let old = q.serializer().clone();
    let r = q.receive_transaction("p", &msg(GlobalName::writer("q", 0), "[hi(_w(p,7))|_w(q,0)]", "q")).unwrap();
    assert_ne!(q.serializer(), &old);
    assert_eq!(q.serializer().name, "NetIn");
    assert_eq!(r.spawned.len(), 1);
    assert_eq!(r.reactivated.len(), 1);
    assert_eq!(q.network_input().iter().map(plain).collect::<Vec<_>>(), vec!["hi(Wp7)"]);

    // Expected-local case.
    let (gname, _) = {
        let (payload, _, _) = q.globalize(&t("X"), "p");
        let Term::Global(g) = payload else { panic!() };
        (g, ())
    };
    q.receive_transaction("p", &msg(gname.clone(), "5", "q")).unwrap();
    assert!(!q.gwt.contains_key(&gname.index));
    assert_eq!(q.resolvent.resolve(&Term::reader("X")), Term::int(5));

    // Expected-remote case.
    let (local, _, _) = q.localize(&t("_r(p,3)"), 40);
    q.receive_transaction("p", &msg(GlobalName::reader("p", 3), "done", "q")).unwrap();
    assert_eq!(q.resolvent.resolve(&local), t("done"));
    assert!(q.table_is_clean());

    // Double delivery and malformed serializer payloads are protocol errors.
    let err = q.receive_transaction("p", &msg(GlobalName::reader("p", 3), "done", "q")).unwrap_err();
    assert!(matches!(err, MaglpError::Protocol { .. }));
    assert!(err.to_string().contains("_r(p,3)"));
    let err = q.receive_transaction("p", &msg(GlobalName::writer("q", 0), "hi", "q")).unwrap_err();
    assert!(matches!(err, MaglpError::Protocol { .. }));
    assert!(q.receive_transaction("p", &msg(GlobalName::reader("p", 3), "x", "r")).is_err());
}

#[test]
fn user_inputs_become_the_input_stream() {
    let a = boot_agent("p", 0, BootMode::Bootstrap, &[t("hi"), t("there")]).unwrap();
    assert_eq!(queued(&a)[0], "agent(ch([hi,there],UserOut),ch(NetIn?,NetOut))");
}
