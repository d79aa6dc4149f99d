//! S-expression reader and the program grammar on top of it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::lattice::Number;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unknown form `{form}`")]
    UnknownForm { pos: Pos, form: String },
    #[error("{pos}: arity mismatch in `{form}`: expected {expected}, found {found}")]
    Arity { pos: Pos, form: String, expected: String, found: usize },
    #[error("{pos}: unbound name `{name}`")]
    Unbound { pos: Pos, name: String },
    #[error("{pos}: `{name}` is declared twice")]
    Duplicate { pos: Pos, name: String },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::UnknownForm { pos, .. }
            | ParseError::Arity { pos, .. }
            | ParseError::Unbound { pos, .. }
            | ParseError::Duplicate { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

fn read_all(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    let mut atom = String::new();
    let mut atom_pos = Pos::default();
    let (mut line, mut col) = (1, 0);
    let mut chars = text.chars().peekable();

    fn flush(atom: &mut String, pos: Pos, stack: &mut [(Vec<Sexp>, Pos)], top: &mut Vec<Sexp>) {
        if !atom.is_empty() {
            let s = Sexp::Atom(std::mem::take(atom), pos);
            match stack.last_mut() {
                Some((items, _)) => items.push(s),
                None => top.push(s),
            }
        }
    }

    while let Some(ch) = chars.next() {
        col += 1;
        let here = Pos { line, col };
        match ch {
            ';' => {
                flush(&mut atom, atom_pos, &mut stack, &mut top);
                for c in chars.by_ref() {
                    if c == '\n' {
                        line += 1;
                        col = 0;
                        break;
                    }
                }
            }
            '(' => {
                flush(&mut atom, atom_pos, &mut stack, &mut top);
                stack.push((Vec::new(), here));
            }
            ')' => {
                flush(&mut atom, atom_pos, &mut stack, &mut top);
                let (items, pos) = stack
                    .pop()
                    .ok_or_else(|| ParseError::Syntax { pos: here, msg: "unexpected `)`".into() })?;
                let list = Sexp::List(items, pos);
                match stack.last_mut() {
                    Some((items, _)) => items.push(list),
                    None => top.push(list),
                }
            }
            c if c.is_whitespace() => {
                flush(&mut atom, atom_pos, &mut stack, &mut top);
                if c == '\n' {
                    line += 1;
                    col = 0;
                }
            }
            c => {
                if atom.is_empty() {
                    atom_pos = here;
                }
                atom.push(c);
            }
        }
    }
    flush(&mut atom, atom_pos, &mut stack, &mut top);
    if let Some((_, pos)) = stack.last() {
        return Err(ParseError::Syntax { pos: *pos, msg: "unclosed `(`".into() });
    }
    Ok(top)
}

/// One body statement.
#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Cell(String),
    Int(String, i64, i64),
    Const(String, Number),
    Sum(String, String, String),
    Product(String, String, String),
    Equal(String, String),
    LessEq(String, String),
    AllDiff(Vec<String>),
    Choose(String, Vec<i64>),
    /// `(is-eq out a b)`: out ⇔ a = b
    IsEq(String, String, String),
    /// `(is-le out a b)`: out ⇔ a ≤ b
    IsLe(String, String, String),
    /// `(switch cond then else out)`
    Switch(String, String, String, String),
    If { cond: String, then: Vec<Stmt>, els: Vec<Stmt> },
    Call { target: String, args: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

impl Stmt {
    /// Names this statement declares, if any.
    fn declares(&self) -> Option<&str> {
        match &self.kind {
            StmtKind::Cell(n) | StmtKind::Int(n, ..) | StmtKind::Const(n, _) | StmtKind::Choose(n, _) => Some(n),
            _ => None,
        }
    }

    /// Names this statement reads or constrains.
    fn references(&self) -> Vec<&str> {
        match &self.kind {
            StmtKind::Cell(_) | StmtKind::Int(..) | StmtKind::Const(..) | StmtKind::Choose(..) => vec![],
            StmtKind::Sum(a, b, c) | StmtKind::Product(a, b, c) | StmtKind::IsEq(a, b, c) | StmtKind::IsLe(a, b, c) => {
                vec![a, b, c]
            }
            StmtKind::Equal(a, b) | StmtKind::LessEq(a, b) => vec![a, b],
            StmtKind::Switch(a, b, c, d) => vec![a, b, c, d],
            StmtKind::AllDiff(xs) => xs.iter().map(String::as_str).collect(),
            StmtKind::If { cond, .. } => vec![cond],
            StmtKind::Call { args, .. } => args.iter().map(String::as_str).collect(),
        }
    }

    /// Visits this statement and every nested statement.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        if let StmtKind::If { then, els, .. } = &self.kind {
            for s in then.iter().chain(els) {
                s.walk(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    /// Names declared in the body (including nested blocks), first declaration order.
    pub locals: Vec<String>,
    pub pos: Pos,
}

impl Definition {
    /// Number of call statements anywhere in the body.
    pub fn call_sites(&self) -> usize {
        let mut n = 0;
        for s in &self.body {
            s.walk(&mut |s| {
                if matches!(s.kind, StmtKind::Call { .. }) {
                    n += 1;
                }
            });
        }
        n
    }

    /// Number of call statements nested inside an `if`.
    pub fn gated_call_sites(&self) -> usize {
        self.body
            .iter()
            .filter(|s| matches!(s.kind, StmtKind::If { .. }))
            .map(|s| {
                let mut n = 0;
                s.walk(&mut |s| {
                    if matches!(s.kind, StmtKind::Call { .. }) {
                        n += 1;
                    }
                });
                n
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec {
    pub entry: String,
    pub bindings: Vec<(String, Number)>,
    pub show: Vec<String>,
    pub depth: Option<u64>,
    pub steps: Option<u64>,
    pub nodes: Option<u64>,
    pub precision: Option<f64>,
    pub minimize: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub definitions: BTreeMap<String, Definition>,
    /// Definition names in source order.
    pub order: Vec<String>,
    pub query: Option<QuerySpec>,
}

impl Program {
    pub fn definition(&self, name: &str) -> Option<&Definition> {
        self.definitions.get(name)
    }

    /// Entry definition named by the query, if any.
    pub fn main(&self) -> Option<&str> {
        self.query.as_ref().map(|q| q.entry.as_str())
    }
}

fn atom(s: &Sexp) -> Result<&str, ParseError> {
    match s {
        Sexp::Atom(a, _) => Ok(a),
        Sexp::List(_, pos) => Err(ParseError::Syntax { pos: *pos, msg: "expected a name or number".into() }),
    }
}

fn is_name(a: &str) -> bool {
    let first = a.chars().next().unwrap_or('0');
    !(first.is_ascii_digit() || ((first == '-' || first == '+' || first == '.') && a.len() > 1 && a[1..].starts_with(|c: char| c.is_ascii_digit())))
}

fn name(s: &Sexp) -> Result<String, ParseError> {
    let a = atom(s)?;
    if is_name(a) {
        Ok(a.to_string())
    } else {
        Err(ParseError::Syntax { pos: s.pos(), msg: format!("expected a name, found `{a}`") })
    }
}

fn integer(s: &Sexp) -> Result<i64, ParseError> {
    let a = atom(s)?;
    a.parse().map_err(|_| ParseError::Syntax { pos: s.pos(), msg: format!("expected an integer, found `{a}`") })
}

fn number(s: &Sexp) -> Result<Number, ParseError> {
    let a = atom(s)?;
    if let Ok(i) = a.parse::<i64>() {
        return Ok(Number::Int(i));
    }
    match a.parse::<f64>() {
        Ok(r) if r.is_finite() => Ok(Number::Real(r)),
        _ => Err(ParseError::Syntax { pos: s.pos(), msg: format!("expected a number, found `{a}`") }),
    }
}

fn list(s: &Sexp) -> Result<(&[Sexp], Pos), ParseError> {
    match s {
        Sexp::List(items, pos) => Ok((items, *pos)),
        Sexp::Atom(a, pos) => Err(ParseError::Syntax { pos: *pos, msg: format!("expected a list, found `{a}`") }),
    }
}

fn arity(form: &str, pos: Pos, args: &[Sexp], expected: usize) -> Result<(), ParseError> {
    if args.len() != expected {
        return Err(ParseError::Arity { pos, form: form.into(), expected: expected.to_string(), found: args.len() });
    }
    Ok(())
}

fn names(args: &[Sexp]) -> Result<Vec<String>, ParseError> {
    args.iter().map(name).collect()
}

fn stmt(s: &Sexp) -> Result<Stmt, ParseError> {
    let (items, pos) = list(s)?;
    let head = items.first().ok_or_else(|| ParseError::Syntax { pos, msg: "empty statement".into() })?;
    let form = atom(head)?;
    let args = &items[1..];
    let kind = match form {
        "cell" => {
            arity(form, pos, args, 1)?;
            StmtKind::Cell(name(&args[0])?)
        }
        "int" => {
            arity(form, pos, args, 3)?;
            let (lo, hi) = (integer(&args[1])?, integer(&args[2])?);
            if lo > hi {
                return Err(ParseError::Syntax { pos, msg: format!("empty range [{lo},{hi}]") });
            }
            StmtKind::Int(name(&args[0])?, lo, hi)
        }
        "const" => {
            arity(form, pos, args, 2)?;
            StmtKind::Const(name(&args[0])?, number(&args[1])?)
        }
        "sum" | "product" | "is-eq" | "is-le" => {
            arity(form, pos, args, 3)?;
            let n = names(args)?;
            let (a, b, c) = (n[0].clone(), n[1].clone(), n[2].clone());
            match form {
                "sum" => StmtKind::Sum(a, b, c),
                "product" => StmtKind::Product(a, b, c),
                "is-eq" => StmtKind::IsEq(a, b, c),
                _ => StmtKind::IsLe(a, b, c),
            }
        }
        "equal" | "lesseq" => {
            arity(form, pos, args, 2)?;
            let n = names(args)?;
            if form == "equal" {
                StmtKind::Equal(n[0].clone(), n[1].clone())
            } else {
                StmtKind::LessEq(n[0].clone(), n[1].clone())
            }
        }
        "switch" => {
            arity(form, pos, args, 4)?;
            let n = names(args)?;
            StmtKind::Switch(n[0].clone(), n[1].clone(), n[2].clone(), n[3].clone())
        }
        "alldiff" => StmtKind::AllDiff(names(args)?),
        "choose" => {
            if args.len() < 2 {
                return Err(ParseError::Arity { pos, form: form.into(), expected: "at least 2".into(), found: args.len() });
            }
            let values = args[1..].iter().map(integer).collect::<Result<Vec<_>, _>>()?;
            StmtKind::Choose(name(&args[0])?, values)
        }
        "if" => {
            arity(form, pos, args, 3)?;
            let block = |s: &Sexp| -> Result<Vec<Stmt>, ParseError> { list(s)?.0.iter().map(stmt).collect() };
            StmtKind::If { cond: name(&args[0])?, then: block(&args[1])?, els: block(&args[2])? }
        }
        "call" => {
            if args.is_empty() {
                return Err(ParseError::Arity { pos, form: form.into(), expected: "at least 1".into(), found: 0 });
            }
            StmtKind::Call { target: name(&args[0])?, args: names(&args[1..])? }
        }
        other => return Err(ParseError::UnknownForm { pos: head.pos(), form: other.into() }),
    };
    Ok(Stmt { kind, pos })
}

fn definition(items: &[Sexp], pos: Pos) -> Result<Definition, ParseError> {
    let header = items.get(1).ok_or_else(|| ParseError::Syntax { pos, msg: "`def` needs a header".into() })?;
    let (head, _) = list(header)?;
    let mut hnames = names(head)?;
    if hnames.is_empty() {
        return Err(ParseError::Syntax { pos: header.pos(), msg: "definition needs a name".into() });
    }
    let name = hnames.remove(0);
    let body = items[2..].iter().map(stmt).collect::<Result<Vec<_>, _>>()?;
    let mut locals = Vec::new();
    let mut seen: BTreeSet<String> = hnames.iter().cloned().collect();
    if seen.len() != hnames.len() {
        return Err(ParseError::Duplicate { pos: header.pos(), name: name.clone() });
    }
    let mut dup = None;
    for s in &body {
        s.walk(&mut |s| {
            if let Some(n) = s.declares() {
                let redeclarable = matches!(s.kind, StmtKind::Int(..) | StmtKind::Choose(..) | StmtKind::Const(..));
                if !seen.contains(n) {
                    seen.insert(n.to_string());
                    locals.push(n.to_string());
                } else if !redeclarable && dup.is_none() {
                    dup = Some(ParseError::Duplicate { pos: s.pos, name: n.to_string() });
                }
            }
        });
    }
    if let Some(e) = dup {
        return Err(e);
    }
    Ok(Definition { name, params: hnames, body, locals, pos })
}

fn query(items: &[Sexp], pos: Pos) -> Result<QuerySpec, ParseError> {
    if items.len() < 3 {
        return Err(ParseError::Arity { pos, form: "query".into(), expected: "at least 2".into(), found: items.len() - 1 });
    }
    let (call, _) = list(&items[1])?;
    let entry = name(call.first().ok_or_else(|| ParseError::Syntax { pos, msg: "query needs an entry".into() })?)?;
    let mut bindings = Vec::new();
    for b in &call[1..] {
        let (pair, bpos) = list(b)?;
        arity("binding", bpos, pair, 2)?;
        bindings.push((name(&pair[0])?, number(&pair[1])?));
    }
    let (show, spos) = list(&items[2])?;
    if show.first().map(atom).transpose()? != Some("show") {
        return Err(ParseError::Syntax { pos: spos, msg: "expected `(show ...)`".into() });
    }
    let mut q = QuerySpec {
        entry,
        bindings,
        show: names(&show[1..])?,
        depth: None,
        steps: None,
        nodes: None,
        precision: None,
        minimize: None,
    };
    for opt in &items[3..] {
        let (o, opos) = list(opt)?;
        let key = o.first().map(atom).transpose()?.unwrap_or("");
        arity(key, opos, &o[1.min(o.len())..], 1)?;
        let count = |s: &Sexp| -> Result<u64, ParseError> {
            let v = integer(s)?;
            u64::try_from(v).map_err(|_| ParseError::Syntax { pos: s.pos(), msg: "budget must be non-negative".into() })
        };
        match key {
            "depth" => q.depth = Some(count(&o[1])?),
            "steps" => q.steps = Some(count(&o[1])?),
            "nodes" => q.nodes = Some(count(&o[1])?),
            "precision" => {
                let p = number(&o[1])?.as_f64();
                if p < 0.0 {
                    return Err(ParseError::Syntax { pos: opos, msg: "precision must be ≥ 0".into() });
                }
                q.precision = Some(p)
            }
            "minimize" => q.minimize = Some(name(&o[1])?),
            other => return Err(ParseError::UnknownForm { pos: opos, form: other.into() }),
        }
    }
    Ok(q)
}

fn check_names(program: &Program) -> Result<(), ParseError> {
    for def in program.definitions.values() {
        let scope: BTreeSet<&str> = def.params.iter().chain(&def.locals).map(String::as_str).collect();
        let mut err = None;
        for s in &def.body {
            s.walk(&mut |s| {
                if err.is_some() {
                    return;
                }
                if let StmtKind::Call { target, args } = &s.kind {
                    match program.definitions.get(target) {
                        None => {
                            err = Some(ParseError::Unbound { pos: s.pos, name: target.clone() });
                            return;
                        }
                        Some(callee) if callee.params.len() != args.len() => {
                            err = Some(ParseError::Arity {
                                pos: s.pos,
                                form: target.clone(),
                                expected: callee.params.len().to_string(),
                                found: args.len(),
                            });
                            return;
                        }
                        _ => {}
                    }
                }
                if let Some(n) = s.references().into_iter().find(|n| !scope.contains(n)) {
                    err = Some(ParseError::Unbound { pos: s.pos, name: n.to_string() });
                }
            });
        }
        if let Some(e) = err {
            return Err(e);
        }
    }
    if let Some(q) = &program.query {
        let Some(def) = program.definitions.get(&q.entry) else {
            return Err(ParseError::Unbound { pos: Pos::default(), name: q.entry.clone() });
        };
        let scope: BTreeSet<&str> = def.params.iter().chain(&def.locals).map(String::as_str).collect();
        let named = q.bindings.iter().map(|(n, _)| n).chain(&q.show).chain(q.minimize.iter());
        for n in named {
            if !scope.contains(n.as_str()) {
                return Err(ParseError::Unbound { pos: Pos::default(), name: n.clone() });
            }
        }
    }
    Ok(())
}

/// Parses program text.
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let mut program = Program::default();
    for form in read_all(text)? {
        let (items, pos) = list(&form)?;
        let head = items.first().ok_or_else(|| ParseError::Syntax { pos, msg: "empty form".into() })?;
        match atom(head)? {
            "def" => {
                let def = definition(items, pos)?;
                if program.definitions.contains_key(&def.name) {
                    return Err(ParseError::Duplicate { pos, name: def.name });
                }
                program.order.push(def.name.clone());
                program.definitions.insert(def.name.clone(), def);
            }
            "query" => {
                if program.query.is_some() {
                    return Err(ParseError::Syntax { pos, msg: "only one query per program".into() });
                }
                program.query = Some(query(items, pos)?);
            }
            other => return Err(ParseError::UnknownForm { pos: head.pos(), form: other.into() }),
        }
    }
    check_names(&program)?;
    Ok(program)
}
