//! Untyped-syntax representation of typed λ-calculus terms: parsing, printing,
//! capture-avoiding β-normalization, α-equivalence, subterm enumeration and
//! the simultaneous list replacement `H(A:B)`.
//!
//! Types live outside the term (see [`crate::types`]); a constant's type is
//! looked up in a [`crate::types::Signature`].

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Default number of β-steps before a reduction is declared non-terminating.
pub const DEFAULT_STEP_LIMIT: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
    Lam(String, Box<Term>),
    App(Box<Term>, Box<Term>),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LambdaError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("no normal form reached within {0} beta steps")]
    NonTerminating(usize),
    #[error("replacement lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    pub fn lam(bound: impl Into<String>, body: Term) -> Term {
        Term::Lam(bound.into(), Box::new(body))
    }

    pub fn app(function: Term, argument: Term) -> Term {
        Term::App(Box::new(function), Box::new(argument))
    }

    /// `head(a1, ..., an)` as a curried application.
    pub fn call(head: impl Into<String>, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(Term::constant(head), Term::app)
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::Lam(_, b) => 1 + b.size(),
            Term::App(f, a) => 1 + f.size() + a.size(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_free(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn occurs_free(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::Const(_) => false,
            Term::Lam(x, b) => x != name && b.occurs_free(name),
            Term::App(f, a) => f.occurs_free(name) || a.occurs_free(name),
        }
    }

    /// Every identifier (bound, free or constant) mentioned in the term.
    pub fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) | Term::Const(v) => {
                out.insert(v.clone());
            }
            Term::Lam(x, b) => {
                out.insert(x.clone());
                b.collect_names(out);
            }
            Term::App(f, a) => {
                f.collect_names(out);
                a.collect_names(out);
            }
        }
    }

    pub fn constants(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for t in subterms(self) {
            if let Term::Const(c) = t {
                if !out.contains(&c.as_str()) {
                    out.push(c.as_str());
                }
            }
        }
        out
    }

    /// Splits an application spine into its head and arguments.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Term::App(f, a) = cur {
            args.push(a.as_ref());
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    /// α-canonical form: bound variables renamed by binding order so that
    /// α-equivalent terms become syntactically equal.
    pub fn canonical(&self) -> Term {
        let avoid: BTreeSet<String> = self
            .constants()
            .into_iter()
            .map(str::to_string)
            .chain(self.free_vars())
            .collect();
        let mut counter = 0;
        canon(self, &mut Vec::new(), &avoid, &mut counter)
    }

    pub fn alpha_eq(&self, other: &Term) -> bool {
        alpha_eq_in(self, other, &mut Vec::new())
    }
}

fn collect_free(t: &Term, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match t {
        Term::Var(v) => {
            if !bound.iter().any(|b| b == v) {
                out.insert(v.clone());
            }
        }
        Term::Const(_) => {}
        Term::Lam(x, b) => {
            bound.push(x.clone());
            collect_free(b, bound, out);
            bound.pop();
        }
        Term::App(f, a) => {
            collect_free(f, bound, out);
            collect_free(a, bound, out);
        }
    }
}

const CANONICAL_NAMES: [&str; 6] = ["x", "y", "z", "w", "u", "v"];

fn canonical_name(i: usize) -> String {
    if i < CANONICAL_NAMES.len() {
        CANONICAL_NAMES[i].to_string()
    } else {
        format!("x{}", i - CANONICAL_NAMES.len() + 1)
    }
}

fn canon(t: &Term, scope: &mut Vec<(String, String)>, avoid: &BTreeSet<String>, counter: &mut usize) -> Term {
    match t {
        Term::Var(v) => match scope.iter().rev().find(|(old, _)| old == v) {
            Some((_, new)) => Term::Var(new.clone()),
            None => t.clone(),
        },
        Term::Const(_) => t.clone(),
        Term::Lam(x, b) => {
            let mut name = canonical_name(*counter);
            *counter += 1;
            while avoid.contains(&name) {
                name = canonical_name(*counter);
                *counter += 1;
            }
            scope.push((x.clone(), name.clone()));
            let body = canon(b, scope, avoid, counter);
            scope.pop();
            Term::Lam(name, Box::new(body))
        }
        Term::App(f, a) => Term::app(canon(f, scope, avoid, counter), canon(a, scope, avoid, counter)),
    }
}

fn alpha_eq_in<'a>(a: &'a Term, b: &'a Term, env: &mut Vec<(&'a str, &'a str)>) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => {
            for (l, r) in env.iter().rev() {
                if *l == x || *r == y {
                    return *l == x && *r == y;
                }
            }
            x == y
        }
        (Term::Const(x), Term::Const(y)) => x == y,
        (Term::Lam(x, bx), Term::Lam(y, by)) => {
            env.push((x, y));
            let r = alpha_eq_in(bx, by, env);
            env.pop();
            r
        }
        (Term::App(f1, a1), Term::App(f2, a2)) => alpha_eq_in(f1, f2, env) && alpha_eq_in(a1, a2, env),
        _ => false,
    }
}

/// A name based on `base` that is not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "v" } else { stem };
    if !avoid.contains(stem) {
        return stem.to_string();
    }
    (1..)
        .map(|i| format!("{stem}{i}"))
        .find(|n| !avoid.contains(n))
        .unwrap()
}

/// Capture-avoiding substitution `t[x := s]`.
pub fn substitute(t: &Term, x: &str, s: &Term) -> Term {
    let fv = s.free_vars();
    subst(t, x, s, &fv)
}

fn subst(t: &Term, x: &str, s: &Term, fv: &BTreeSet<String>) -> Term {
    match t {
        Term::Var(v) if v == x => s.clone(),
        Term::Var(_) | Term::Const(_) => t.clone(),
        Term::Lam(y, b) => {
            if y == x || !b.occurs_free(x) {
                t.clone()
            } else if fv.contains(y) {
                let mut avoid = fv.clone();
                avoid.extend(b.names());
                avoid.insert(x.to_string());
                let y2 = fresh_name(y, &avoid);
                let renamed = subst(b, y, &Term::Var(y2.clone()), &BTreeSet::new());
                Term::Lam(y2, Box::new(subst(&renamed, x, s, fv)))
            } else {
                Term::Lam(y.clone(), Box::new(subst(b, x, s, fv)))
            }
        }
        Term::App(f, a) => Term::app(subst(f, x, s, fv), subst(a, x, s, fv)),
    }
}

struct Reducer {
    steps: usize,
    limit: usize,
}

impl Reducer {
    fn tick(&mut self) -> Result<(), LambdaError> {
        self.steps += 1;
        if self.steps > self.limit {
            Err(LambdaError::NonTerminating(self.limit))
        } else {
            Ok(())
        }
    }

    fn whnf(&mut self, t: Term) -> Result<Term, LambdaError> {
        match t {
            Term::App(f, a) => {
                let f = self.whnf(*f)?;
                match f {
                    Term::Lam(x, b) => {
                        self.tick()?;
                        self.whnf(substitute(&b, &x, &a))
                    }
                    f => Ok(Term::App(Box::new(f), a)),
                }
            }
            t => Ok(t),
        }
    }

    fn normal(&mut self, t: Term) -> Result<Term, LambdaError> {
        match t {
            Term::Lam(x, b) => Ok(Term::Lam(x, Box::new(self.normal(*b)?))),
            Term::App(f, a) => {
                let f = self.whnf(*f)?;
                match f {
                    Term::Lam(x, b) => {
                        self.tick()?;
                        self.normal(substitute(&b, &x, &a))
                    }
                    f => Ok(Term::app(self.normal(f)?, self.normal(*a)?)),
                }
            }
            t => Ok(t),
        }
    }
}

/// Leftmost-outermost β-normalization bounded by `step_limit` reductions.
pub fn beta_normalize(t: &Term, step_limit: usize) -> Result<Term, LambdaError> {
    let mut r = Reducer {
        steps: 0,
        limit: step_limit.max(1),
    };
    r.normal(t.clone())
}

pub fn normalize(t: &Term) -> Result<Term, LambdaError> {
    beta_normalize(t, DEFAULT_STEP_LIMIT)
}

/// True iff the β-normal forms are α-equivalent.
pub fn alpha_beta_equiv(a: &Term, b: &Term, step_limit: usize) -> Result<bool, LambdaError> {
    Ok(beta_normalize(a, step_limit)?.alpha_eq(&beta_normalize(b, step_limit)?))
}

/// Pre-order enumeration of subterms; `t` itself comes first.
pub fn subterms(t: &Term) -> Vec<&Term> {
    let mut out = Vec::new();
    let mut stack = vec![t];
    while let Some(cur) = stack.pop() {
        out.push(cur);
        match cur {
            Term::Lam(_, b) => stack.push(b),
            Term::App(f, a) => {
                stack.push(a);
                stack.push(f);
            }
            _ => {}
        }
    }
    out
}

/// `H(A:B)`: simultaneously replaces every occurrence of `from[i]` in `h` by
/// `to[i]`. Occurrences are matched up to α-equivalence, outermost first,
/// and the first listed pattern wins when several match the same node.
pub fn replace(h: &Term, from: &[Term], to: &[Term]) -> Result<Term, LambdaError> {
    if from.len() != to.len() {
        return Err(LambdaError::LengthMismatch(from.len(), to.len()));
    }
    Ok(replace_rec(h, from, to))
}

fn replace_rec(h: &Term, from: &[Term], to: &[Term]) -> Term {
    if let Some(i) = from.iter().position(|a| a.alpha_eq(h)) {
        return to[i].clone();
    }
    match h {
        Term::Lam(x, b) => Term::Lam(x.clone(), Box::new(replace_rec(b, from, to))),
        Term::App(f, a) => Term::app(replace_rec(f, from, to), replace_rec(a, from, to)),
        _ => h.clone(),
    }
}

// ---------------------------------------------------------------------------
// Concrete syntax

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Backslash,
    Dot,
    At,
    LParen { glued: bool },
    RParen,
    Comma,
    Ident(String),
    Literal(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LambdaError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let mut prev_ident = false;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            prev_ident = false;
            i += 1;
            continue;
        }
        let tok = match c {
            '\\' | 'λ' => Tok::Backslash,
            '.' => Tok::Dot,
            '@' => Tok::At,
            '(' => Tok::LParen { glued: prev_ident },
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '\'' | '{' => {
                let close = if c == '\'' { '\'' } else { '}' };
                let mut j = i + 1;
                while j < chars.len() && chars[j].1 != close {
                    j += 1;
                }
                if j >= chars.len() {
                    return Err(LambdaError::Syntax {
                        pos,
                        msg: format!("unterminated literal starting with {c}"),
                    });
                }
                let end = chars[j].0 + close.len_utf8();
                i = j + 1;
                out.push((pos, Tok::Literal(text[pos..end].to_string())));
                prev_ident = true;
                continue;
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].1.is_alphanumeric() || matches!(chars[j].1, '_' | '-')) {
                    j += 1;
                }
                let end = if j < chars.len() { chars[j].0 } else { text.len() };
                i = j;
                out.push((pos, Tok::Ident(text[pos..end].to_string())));
                prev_ident = true;
                continue;
            }
            other => {
                return Err(LambdaError::Syntax {
                    pos,
                    msg: format!("unexpected character {other:?}"),
                })
            }
        };
        prev_ident = false;
        out.push((pos, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    scope: Vec<(String, String)>,
    binders: BTreeSet<String>,
    free_vars: BTreeSet<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LambdaError> {
        Err(LambdaError::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), LambdaError> {
        match self.peek() {
            Some(t) if std::mem::discriminant(t) == std::mem::discriminant(want) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn resolve(&self, name: &str) -> Term {
        if let Some((_, new)) = self.scope.iter().rev().find(|(old, _)| old == name) {
            Term::Var(new.clone())
        } else if self.free_vars.contains(name) {
            Term::Var(name.to_string())
        } else {
            Term::Const(name.to_string())
        }
    }

    fn term(&mut self) -> Result<Term, LambdaError> {
        if let Some(Tok::Backslash) = self.peek() {
            self.pos += 1;
            let name = match self.peek() {
                Some(Tok::Ident(n)) => n.clone(),
                _ => return self.err("expected binder name"),
            };
            self.pos += 1;
            self.expect(&Tok::Dot, "'.'")?;
            let mut avoid = self.binders.clone();
            avoid.extend(self.free_vars.iter().cloned());
            let bound = if avoid.contains(&name) {
                fresh_name(&name, &avoid)
            } else {
                name.clone()
            };
            self.binders.insert(bound.clone());
            self.scope.push((name, bound.clone()));
            let body = self.term()?;
            self.scope.pop();
            return Ok(Term::Lam(bound, Box::new(body)));
        }
        self.app()
    }

    fn app(&mut self) -> Result<Term, LambdaError> {
        let mut t = self.primary()?;
        loop {
            match self.peek() {
                Some(Tok::At) => {
                    self.pos += 1;
                    let rhs = if let Some(Tok::Backslash) = self.peek() {
                        self.term()?
                    } else {
                        self.primary()?
                    };
                    t = Term::app(t, rhs);
                }
                Some(Tok::Ident(_)) | Some(Tok::Literal(_)) | Some(Tok::LParen { .. }) => {
                    let rhs = self.primary()?;
                    t = Term::app(t, rhs);
                }
                _ => return Ok(t),
            }
        }
    }

    fn primary(&mut self) -> Result<Term, LambdaError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let head = self.resolve(&name);
                if let Some(Tok::LParen { glued: true }) = self.peek() {
                    self.pos += 1;
                    let mut t = head;
                    loop {
                        let arg = self.term()?;
                        t = Term::app(t, arg);
                        match self.peek() {
                            Some(Tok::Comma) => self.pos += 1,
                            Some(Tok::RParen) => {
                                self.pos += 1;
                                break;
                            }
                            _ => return self.err("expected ',' or ')'"),
                        }
                    }
                    Ok(t)
                } else {
                    Ok(head)
                }
            }
            Some(Tok::Literal(lit)) => {
                self.pos += 1;
                Ok(Term::Const(lit))
            }
            Some(Tok::LParen { .. }) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(t)
            }
            Some(_) => self.err("expected a term"),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses a closed term; identifiers not bound by an enclosing λ are
/// constants.
pub fn parse_term(text: &str) -> Result<Term, LambdaError> {
    parse_term_with_vars(text, &[])
}

/// Parses a possibly open term: identifiers listed in `free` become free
/// variables instead of constants.
pub fn parse_term_with_vars(text: &str, free: &[&str]) -> Result<Term, LambdaError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        scope: Vec::new(),
        binders: BTreeSet::new(),
        free_vars: free.iter().map(|s| s.to_string()).collect(),
    };
    let t = p.term()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(t)
}

impl std::str::FromStr for Term {
    type Err = LambdaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_term(s)
    }
}

/// Renders in the concrete syntax accepted by [`parse_term`].
pub fn render_term(t: &Term) -> String {
    t.to_string()
}

fn is_atomic_render(t: &Term) -> bool {
    match t {
        Term::Var(_) | Term::Const(_) => true,
        Term::Lam(..) => false,
        Term::App(..) => matches!(t.spine().0, Term::Const(_)),
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
    if is_atomic_render(t) {
        write!(f, "{t}")
    } else {
        write!(f, "({t})")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => write!(f, "{v}"),
            Term::Lam(x, b) => write!(f, "\\{x}. {b}"),
            Term::App(..) => {
                let (head, args) = self.spine();
                if let Term::Const(c) = head {
                    write!(f, "{c}(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")
                } else {
                    write_atom(f, head)?;
                    for a in args {
                        write!(f, " @ ")?;
                        write_atom(f, a)?;
                    }
                    Ok(())
                }
            }
        }
    }
}
