//! Concrete syntax for programs and goals.

use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::program::{check_srsw, Clause, Program, Violation};
use crate::term::{GlobalName, Sort, Term, Variable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// A goal with an optional `@agent` placement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedGoal {
    pub goal: Term,
    pub agent: Option<String>,
}

impl fmt::Display for AnnotatedGoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.goal)?;
        if let Some(a) = &self.agent {
            write!(f, "@{}", crate::term::fmt_atom(a))?;
        }
        Ok(())
    }
}

/// An SRSW problem located in the source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceViolation {
    pub clause: usize,
    pub line: usize,
    pub violation: Violation,
}

impl fmt::Display for SourceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: clause {}: {}", self.line, self.clause + 1, self.violation)
    }
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(text)?;
    let mut clauses = Vec::new();
    while !p.at_end() {
        clauses.push(p.clause()?);
    }
    Ok(Program::new(clauses))
}

/// SRSW problems of every clause, in source order.
pub fn srsw_report(program: &Program) -> Vec<SourceViolation> {
    program
        .clauses
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            check_srsw(c)
                .into_iter()
                .map(move |violation| SourceViolation { clause: i, line: c.line, violation })
        })
        .collect()
}

/// Comma-separated unit goals, each optionally followed by `@agent`.
/// `true` is the empty goal.
pub fn parse_goal(text: &str) -> Result<Vec<AnnotatedGoal>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    if p.at_end() {
        return Ok(out);
    }
    loop {
        let goal = p.expr(999)?;
        let agent = if p.eat(&Tok::At) { Some(p.atom_name()?) } else { None };
        if goal != Term::atom("true") {
            out.push(AnnotatedGoal { goal, agent });
        }
        if !p.eat(&Tok::Comma) {
            break;
        }
    }
    p.eat(&Tok::End);
    if !p.at_end() {
        return Err(p.error("unexpected text after goal"));
    }
    Ok(out)
}

/// Parses a single term.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.expr(1000)?;
    if !p.at_end() {
        return Err(p.error("unexpected text after term"));
    }
    Ok(t)
}

pub fn print_term(t: &Term) -> String {
    t.to_string()
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Atom(String),
    Quoted(String),
    Var(String),
    Punct(&'static str),
    Op(&'static str),
    Comma,
    Bar,
    At,
    Question,
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
    /// No whitespace separates this token from the previous one.
    glued: bool,
}

const OPS: [&str; 11] = [":-", "=:=", ":=", "==", "//", "<", ">", "+", "-", "*", "|"];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut glued = false;
    let err = |line, col, m: &str| ParseError { line, col, message: m.to_string() };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            glued = false;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            glued = false;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            glued = false;
            continue;
        }
        let (sl, sc) = (line, col);
        let start = i;
        let tok = if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            Tok::Int(s.parse().map_err(|_| err(sl, sc, "bad integer"))?)
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            if c.is_uppercase() || c == '_' {
                Tok::Var(s)
            } else {
                Tok::Atom(s)
            }
        } else if c == '\'' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(err(sl, sc, "unterminated quoted atom")),
                    Some('\'') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        let e = match chars.get(i + 1) {
                            Some('\\') => '\\',
                            Some('\'') => '\'',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            _ => return Err(err(line, col + (i - start), "unknown escape")),
                        };
                        s.push(e);
                        i += 2;
                    }
                    Some('\n') => return Err(err(sl, sc, "newline in quoted atom")),
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            Tok::Quoted(s)
        } else {
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            if let Some(op) = OPS.iter().find(|op| rest.starts_with(**op)) {
                i += op.chars().count();
                if *op == "|" {
                    Tok::Bar
                } else {
                    Tok::Op(op)
                }
            } else {
                i += 1;
                match c {
                    '(' => Tok::Punct("("),
                    ')' => Tok::Punct(")"),
                    '[' => Tok::Punct("["),
                    ']' => Tok::Punct("]"),
                    ',' => Tok::Comma,
                    '@' => Tok::At,
                    '?' => Tok::Question,
                    '.' => Tok::End,
                    _ => return Err(err(sl, sc, &format!("unexpected character {:?}", c))),
                }
            }
        };
        col += i - start;
        toks.push(Token { tok, line: sl, col: sc, glued });
        glued = true;
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    anon: usize,
    eof: (usize, usize),
}

impl Parser {
    fn new(text: &str) -> Result<Parser, ParseError> {
        let toks = lex(text)?;
        let lines = text.split('\n').count();
        let last = text.rsplit('\n').next().map(|l| l.chars().count() + 1).unwrap_or(1);
        Ok(Parser { toks, pos: 0, anon: 0, eof: (lines, last) })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Token> {
        self.toks.get(self.pos + k)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, message: &str) -> ParseError {
        let (line, col) = self.toks.get(self.pos).map(|t| (t.line, t.col)).unwrap_or(self.eof);
        ParseError { line, col, message: message.to_string() }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else if self.at_end() {
            Err(self.error(&format!("unterminated input, expected {}", what)))
        } else {
            Err(self.error(&format!("expected {}", what)))
        }
    }

    fn atom_name(&mut self) -> Result<String, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Atom(a)) | Some(Tok::Quoted(a)) => {
                self.pos += 1;
                Ok(a)
            }
            _ => Err(self.error("expected agent name")),
        }
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        let line = self.toks[self.pos].line;
        let head = self.expr(999)?;
        if !matches!(head, Term::Compound(..) | Term::Const(crate::term::Const::Atom(_))) {
            return Err(self.error("clause head must be a compound term or atom"));
        }
        let mut guards = Vec::new();
        let mut body = Vec::new();
        if self.eat(&Tok::Op(":-")) {
            let first = self.conjunction()?;
            if self.eat(&Tok::Bar) {
                guards = first;
                body = self.conjunction()?;
            } else {
                body = first;
            }
        }
        if self.at_end() {
            return Err(self.error("unterminated clause"));
        }
        self.expect(Tok::End, "'.' at end of clause")?;
        let strip = |v: Vec<Term>| v.into_iter().filter(|g| *g != Term::atom("true")).collect();
        Ok(Clause { head, guards: strip(guards), body: strip(body), line })
    }

    fn conjunction(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut goals = vec![self.expr(999)?];
        while self.eat(&Tok::Comma) {
            goals.push(self.expr(999)?);
        }
        Ok(goals)
    }

    fn infix(&self) -> Option<(&'static str, u32)> {
        match self.peek() {
            Some(Tok::Op(op)) => crate::term::infix_priority(op).map(|p| (*op, p)),
            _ => None,
        }
    }

    fn expr(&mut self, max: u32) -> Result<Term, ParseError> {
        let mut left = self.primary()?;
        let mut left_prec = 0;
        while let Some((op, p)) = self.infix() {
            if p > max {
                break;
            }
            let non_assoc = p == 700;
            if non_assoc && left_prec == 700 {
                return Err(self.error("operator priority clash"));
            }
            if !non_assoc && left_prec > p {
                break;
            }
            self.pos += 1;
            let right = self.expr(p - 1)?;
            left = Term::Compound(op.to_string(), vec![left, right]);
            left_prec = p;
        }
        Ok(left)
    }

    fn args(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut args = vec![self.expr(999)?];
        while self.eat(&Tok::Comma) {
            args.push(self.expr(999)?);
        }
        self.expect(Tok::Punct(")"), "')'")?;
        Ok(args)
    }

    fn open_paren_follows(&self) -> bool {
        matches!(self.peek_at(0), Some(Token { tok: Tok::Punct("("), glued: true, .. }))
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("unexpected end of input"));
        };
        self.pos += 1;
        match tok {
            Tok::Int(n) => Ok(Term::int(n)),
            Tok::Op("-") => match self.peek_at(0) {
                Some(Token { tok: Tok::Int(n), glued: true, .. }) => {
                    let n = n.clone();
                    self.pos += 1;
                    Ok(Term::int(-n))
                }
                _ => {
                    self.pos -= 1;
                    Err(self.error("unexpected operator"))
                }
            },
            Tok::Atom(a) | Tok::Quoted(a) => {
                if self.open_paren_follows() {
                    self.pos += 1;
                    Ok(Term::Compound(a, self.args()?))
                } else {
                    Ok(Term::atom(a))
                }
            }
            Tok::Var(name) => {
                if (name == "_w" || name == "_r") && self.open_paren_follows() {
                    self.pos += 1;
                    return self.global_name(if name == "_w" { Sort::Writer } else { Sort::Reader });
                }
                let sort = if self.eat(&Tok::Question) { Sort::Reader } else { Sort::Writer };
                let name = if name == "_" {
                    self.anon += 1;
                    format!("_{}", self.anon)
                } else {
                    name
                };
                let mut scope = 0;
                if let (Some(Token { tok: Tok::At, glued: true, .. }), Some(Token { tok: Tok::Int(n), glued: true, .. })) =
                    (self.peek_at(0), self.peek_at(1))
                {
                    scope = u32::try_from(n.clone()).map_err(|_| self.error("scope out of range"))?;
                    self.pos += 2;
                }
                Ok(Term::Var(Variable { name, scope, sort }))
            }
            Tok::Punct("[") => {
                if self.eat(&Tok::Punct("]")) {
                    return Ok(Term::nil());
                }
                let mut items = vec![self.expr(999)?];
                while self.eat(&Tok::Comma) {
                    items.push(self.expr(999)?);
                }
                let tail = if self.eat(&Tok::Bar) { self.expr(999)? } else { Term::nil() };
                self.expect(Tok::Punct("]"), "']'")?;
                Ok(Term::list_with_tail(items, tail))
            }
            Tok::Punct("(") => {
                let t = self.expr(1200)?;
                self.expect(Tok::Punct(")"), "')'")?;
                Ok(t)
            }
            _ => {
                self.pos -= 1;
                Err(self.error("unexpected token"))
            }
        }
    }

    fn global_name(&mut self, sort: Sort) -> Result<Term, ParseError> {
        let agent = self.atom_name()?;
        self.expect(Tok::Comma, "','")?;
        let index = match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                u64::try_from(n).map_err(|_| self.error("index out of range"))?
            }
            _ => return Err(self.error("expected link index")),
        };
        self.expect(Tok::Punct(")"), "')'")?;
        Ok(Term::Global(GlobalName { sort, agent, index }))
    }
}
