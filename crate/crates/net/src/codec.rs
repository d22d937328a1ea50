//! Line-oriented wire format for messages between agents.

use glp_core::{Const, GlobalName, Sort, Term};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maglp::OutMessage;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("payload contains local variable {0}")]
    LocalVariable(String),
    #[error("malformed message at offset {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Link,
    Serial,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireName {
    sort: char,
    agent: String,
    index: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum WireTerm {
    Int(String),
    Atom(String),
    Nil,
    Gname(WireName),
    App(String, Vec<WireTerm>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireMessage {
    kind: Kind,
    gname: WireName,
    payload: WireTerm,
    dest: String,
}

fn name_out(g: &GlobalName) -> WireName {
    let sort = match g.sort {
        Sort::Writer => 'w',
        Sort::Reader => 'r',
    };
    WireName { sort, agent: g.agent.clone(), index: g.index }
}

fn name_in(w: WireName) -> Result<GlobalName, String> {
    let sort = match w.sort {
        'w' => Sort::Writer,
        'r' => Sort::Reader,
        c => return Err(format!("bad sort {:?}", c)),
    };
    Ok(GlobalName { sort, agent: w.agent, index: w.index })
}

fn term_out(t: &Term) -> Result<WireTerm, CodecError> {
    Ok(match t {
        Term::Const(Const::Int(n)) => WireTerm::Int(n.to_string()),
        Term::Const(Const::Atom(a)) => WireTerm::Atom(a.clone()),
        Term::Const(Const::Nil) => WireTerm::Nil,
        Term::Global(g) => WireTerm::Gname(name_out(g)),
        Term::Compound(f, args) => WireTerm::App(f.clone(), args.iter().map(term_out).collect::<Result<_, _>>()?),
        Term::Var(v) => return Err(CodecError::LocalVariable(v.to_string())),
    })
}

fn term_in(w: WireTerm) -> Result<Term, String> {
    Ok(match w {
        WireTerm::Int(s) => Term::Const(Const::Int(s.parse::<BigInt>().map_err(|_| format!("bad integer {:?}", s))?)),
        WireTerm::Atom(a) => Term::Const(Const::Atom(a)),
        WireTerm::Nil => Term::Const(Const::Nil),
        WireTerm::Gname(n) => Term::Global(name_in(n)?),
        WireTerm::App(f, args) if !args.is_empty() => {
            Term::Compound(f, args.into_iter().map(term_in).collect::<Result<_, _>>()?)
        }
        WireTerm::App(f, _) => return Err(format!("compound {:?} without arguments", f)),
    })
}

/// One line of JSON, without the trailing newline.
pub fn encode_message(m: &OutMessage) -> Result<String, CodecError> {
    let wire = WireMessage {
        kind: if m.is_serial() { Kind::Serial } else { Kind::Link },
        gname: name_out(&m.gname),
        payload: term_out(&m.payload)?,
        dest: m.dest.clone(),
    };
    Ok(serde_json::to_string(&wire).expect("wire messages serialize"))
}

pub fn decode_message(line: &str) -> Result<OutMessage, CodecError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let wire: WireMessage = serde_json::from_str(line).map_err(|e| CodecError::Malformed {
        offset: offset_of(line, e.line(), e.column()),
        reason: e.to_string(),
    })?;
    let semantic = |reason: String| CodecError::Malformed { offset: 0, reason };
    let gname = name_in(wire.gname).map_err(semantic)?;
    let serial = matches!(wire.kind, Kind::Serial);
    if serial != gname.is_serializer() {
        return Err(semantic(format!("kind does not match {}", gname)));
    }
    Ok(OutMessage { gname, payload: term_in(wire.payload).map_err(semantic)?, dest: wire.dest })
}

/// Byte offset of a 1-based line and column.
fn offset_of(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}
