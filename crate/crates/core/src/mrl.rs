//! Target meaning-representation language: context-free grammar loading,
//! derivation trees for logical forms, common templates and lowest
//! dominating node search.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::term::{parse_term, Term};
use crate::types::{Signature, TermType};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MrlError {
    #[error("grammar line {0}: {1}")]
    Syntax(usize, String),
    #[error("grammar has no productions")]
    EmptyGrammar,
    #[error("undefined symbol {0}")]
    UndefinedSymbol(String),
    #[error("duplicate production {0}")]
    DuplicateProduction(String),
    #[error("no derivation for {0:?}")]
    NoDerivation(String),
    #[error("ambiguous derivation for {0:?}")]
    AmbiguousDerivation(String),
    #[error("no node dominates the requested symbols")]
    NotDominated,
    #[error("template does not parse as a term: {0:?}")]
    UnparsableTemplate(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    NonTerminal(String),
    Terminal(String),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::NonTerminal(n) => write!(f, "{n}"),
            Symbol::Terminal(t) => write!(f, "{t:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub lhs: String,
    pub rhs: Vec<Symbol>,
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.lhs)?;
        for s in &self.rhs {
            write!(f, " {s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Grammar {
    start: String,
    productions: Vec<Production>,
    by_lhs: BTreeMap<String, Vec<usize>>,
}

fn constants_of<'a>(terminals: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in terminals {
        let t = t.trim();
        if t.len() > 1 && t.starts_with('\'') && t.ends_with('\'') {
            out.insert(t.to_string());
            continue;
        }
        let mut cur = String::new();
        for c in t.chars().chain(std::iter::once(' ')) {
            if c.is_alphanumeric() || c == '_' || c == '{' || c == '}' {
                cur.push(c);
            } else if !cur.is_empty() {
                out.insert(std::mem::take(&mut cur));
            }
        }
    }
    out
}

/// Removes whitespace outside single-quoted literals.
fn squeeze(s: &str) -> String {
    let mut out = String::new();
    let mut quoted = false;
    for c in s.chars() {
        if c == '\'' {
            quoted = !quoted;
        }
        if quoted || !c.is_whitespace() {
            out.push(c);
        }
    }
    out
}

impl Grammar {
    /// Reads `NT -> item item ... | item ...` lines. Quoted items are
    /// terminals, bare items nonterminals.
    pub fn parse(text: &str) -> Result<Grammar, MrlError> {
        let mut productions: Vec<Production> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| MrlError::Syntax(n + 1, "missing '->'".into()))?;
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.contains(char::is_whitespace) {
                return Err(MrlError::Syntax(n + 1, format!("bad left side {lhs:?}")));
            }
            for alt in split_items(rhs).map_err(|m| MrlError::Syntax(n + 1, m))? {
                if alt.is_empty() {
                    return Err(MrlError::Syntax(n + 1, "empty alternative".into()));
                }
                let p = Production {
                    lhs: lhs.to_string(),
                    rhs: alt,
                };
                if productions.contains(&p) {
                    return Err(MrlError::DuplicateProduction(p.to_string()));
                }
                productions.push(p);
            }
        }
        if productions.is_empty() {
            return Err(MrlError::EmptyGrammar);
        }
        let mut by_lhs: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, p) in productions.iter().enumerate() {
            by_lhs.entry(p.lhs.clone()).or_default().push(i);
        }
        for p in &productions {
            for s in &p.rhs {
                if let Symbol::NonTerminal(nt) = s {
                    if !by_lhs.contains_key(nt) {
                        return Err(MrlError::UndefinedSymbol(nt.clone()));
                    }
                }
            }
        }
        Ok(Grammar {
            start: productions[0].lhs.clone(),
            productions,
            by_lhs,
        })
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = &str> {
        self.by_lhs.keys().map(String::as_str)
    }

    pub fn terminals(&self) -> BTreeSet<&str> {
        self.productions
            .iter()
            .flat_map(|p| p.rhs.iter())
            .filter_map(|s| match s {
                Symbol::Terminal(t) => Some(t.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Types every call-style terminal `f(` as an `e`-chain whose arity is
    /// the number of nonterminals in its production, and quoted literals as
    /// `e`. Bare words are left to arity defaulting since some target
    /// languages apply them like functions.
    pub fn signature(&self) -> Signature {
        let mut sig = Signature::new("e");
        for p in &self.productions {
            let nts = p.rhs.iter().filter(|s| matches!(s, Symbol::NonTerminal(_))).count();
            for s in &p.rhs {
                let Symbol::Terminal(t) = s else { continue };
                let t = t.trim();
                if let Some(head) = t.strip_suffix('(') {
                    let head = head.trim();
                    if is_ident(head) {
                        sig.insert(head, TermType::chain("e", nts));
                    }
                } else if t.len() > 1 && t.starts_with('\'') && t.ends_with('\'') {
                    sig.insert(t, TermType::atomic("e"));
                }
            }
        }
        sig
    }

    /// Constant names occurring in terminals: quoted literals whole,
    /// otherwise identifier-like pieces and `{...}` literals.
    pub fn constants(&self) -> BTreeSet<String> {
        constants_of(self.terminals())
    }

    /// Constants introduced only by productions of the start symbol.
    pub fn root_constants(&self) -> BTreeSet<String> {
        let side = |root: bool| {
            let ts = self
                .productions
                .iter()
                .filter(|p| (p.lhs == self.start) == root)
                .flat_map(|p| p.rhs.iter())
                .filter_map(|s| match s {
                    Symbol::Terminal(t) => Some(t.as_str()),
                    _ => None,
                });
            constants_of(ts)
        };
        side(true).difference(&side(false)).cloned().collect()
    }

    /// Shortest string derivable from each nonterminal.
    pub fn witnesses(&self) -> BTreeMap<String, String> {
        let mut best: BTreeMap<String, String> = BTreeMap::new();
        loop {
            let mut changed = false;
            for p in &self.productions {
                let mut out = String::new();
                let complete = p.rhs.iter().all(|s| match s {
                    Symbol::Terminal(t) => {
                        out.push_str(t);
                        true
                    }
                    Symbol::NonTerminal(n) => best.get(n).map(|w| out.push_str(w)).is_some(),
                });
                if complete && best.get(&p.lhs).is_none_or(|w| out.len() < w.len()) {
                    best.insert(p.lhs.clone(), out);
                    changed = true;
                }
            }
            if !changed {
                return best;
            }
        }
    }

    /// Whether rendering a parsed term gives back a sentence of the
    /// language, checked on the shortest sentence of each start production.
    pub fn renders_faithfully(&self) -> bool {
        let w = self.witnesses();
        self.productions.iter().filter(|p| p.lhs == self.start).all(|p| {
            let text: Option<String> = p
                .rhs
                .iter()
                .map(|s| match s {
                    Symbol::Terminal(t) => Some(t.clone()),
                    Symbol::NonTerminal(n) => w.get(n).cloned(),
                })
                .collect();
            text.and_then(|t| parse_term(&t).ok())
                .is_some_and(|t| self.generates(&crate::term::render_term(&t)))
        })
    }

    /// Whether `lf` is in the language, ambiguously or not.
    pub fn generates(&self, lf: &str) -> bool {
        matches!(self.derive(lf), Ok(_) | Err(MrlError::AmbiguousDerivation(..)))
    }

    /// The unique derivation tree of `lf`.
    pub fn derive(&self, lf: &str) -> Result<DerivationTree, MrlError> {
        let input: Vec<char> = squeeze(lf).chars().collect();
        let mut p = Deriver {
            g: self,
            input: &input,
            keys: self
                .productions
                .iter()
                .map(|p| {
                    p.rhs
                        .iter()
                        .map(|s| match s {
                            Symbol::Terminal(t) => squeeze(t).chars().collect(),
                            Symbol::NonTerminal(_) => Vec::new(),
                        })
                        .collect()
                })
                .collect(),
            memo: HashMap::new(),
            active: HashSet::new(),
        };
        let results = p.parse(&self.start, 0);
        let full: Vec<&DerivationTree> = results
            .iter()
            .filter(|(end, _)| *end == input.len())
            .flat_map(|(_, ts)| ts.iter())
            .collect();
        match full.len() {
            0 => Err(MrlError::NoDerivation(lf.to_string())),
            1 => Ok(full[0].clone()),
            _ => Err(MrlError::AmbiguousDerivation(lf.to_string())),
        }
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_')
}

fn split_items(rhs: &str) -> Result<Vec<Vec<Symbol>>, String> {
    let mut alts = vec![Vec::new()];
    let mut chars = rhs.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '|' {
            chars.next();
            alts.push(Vec::new());
        } else if c == '"' {
            chars.next();
            let mut t = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(ch) => t.push(ch),
                    None => return Err("unterminated terminal".into()),
                }
            }
            alts.last_mut().unwrap().push(Symbol::Terminal(t));
        } else {
            let mut nt = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || ch == '|' || ch == '"' {
                    break;
                }
                nt.push(ch);
                chars.next();
            }
            alts.last_mut().unwrap().push(Symbol::NonTerminal(nt));
        }
    }
    Ok(alts)
}

/// Trees kept per (symbol, start, end); two are enough to detect ambiguity.
const AMBIGUITY_CAP: usize = 2;

type Parses = Vec<(usize, Vec<DerivationTree>)>;

struct Deriver<'a> {
    g: &'a Grammar,
    input: &'a [char],
    keys: Vec<Vec<Vec<char>>>,
    memo: HashMap<(String, usize), Parses>,
    active: HashSet<(String, usize)>,
}

impl Deriver<'_> {
    fn parse(&mut self, nt: &str, pos: usize) -> Parses {
        let key = (nt.to_string(), pos);
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        if !self.active.insert(key.clone()) {
            // unit or left-recursive cycle
            return Vec::new();
        }
        let mut results: BTreeMap<usize, Vec<DerivationTree>> = BTreeMap::new();
        for &pi in &self.g.by_lhs[nt] {
            let prod = &self.g.productions[pi];
            let mut partial: BTreeMap<usize, Vec<Vec<DerivationTree>>> = BTreeMap::new();
            partial.insert(pos, vec![Vec::new()]);
            for (k, sym) in prod.rhs.iter().enumerate() {
                let mut next: BTreeMap<usize, Vec<Vec<DerivationTree>>> = BTreeMap::new();
                for (p0, lists) in partial {
                    match sym {
                        Symbol::Terminal(t) => {
                            let tk = &self.keys[pi][k];
                            if self.input[p0..].starts_with(tk) {
                                let slot = next.entry(p0 + tk.len()).or_default();
                                for l in lists {
                                    if slot.len() < AMBIGUITY_CAP {
                                        let mut l = l;
                                        l.push(DerivationTree::terminal(t));
                                        slot.push(l);
                                    }
                                }
                            }
                        }
                        Symbol::NonTerminal(m) => {
                            for (end, trees) in self.parse(m, p0) {
                                let slot = next.entry(end).or_default();
                                for l in &lists {
                                    for t in &trees {
                                        if slot.len() < AMBIGUITY_CAP {
                                            let mut l = l.clone();
                                            l.push(t.clone());
                                            slot.push(l);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                partial = next;
                if partial.is_empty() {
                    break;
                }
            }
            for (end, lists) in partial {
                let slot = results.entry(end).or_default();
                for children in lists {
                    if slot.len() < AMBIGUITY_CAP {
                        slot.push(DerivationTree {
                            label: Label::NonTerminal(nt.to_string()),
                            children,
                        });
                    }
                }
            }
        }
        self.active.remove(&key);
        let out: Parses = results.into_iter().collect();
        self.memo.insert(key, out.clone());
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    NonTerminal(String),
    Terminal(String),
    /// λ-bound variable leaf of a template.
    Variable(String),
}

/// Address of a node: child indices from the root.
pub type NodePath = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DerivationTree {
    pub label: Label,
    pub children: Vec<DerivationTree>,
}

impl DerivationTree {
    pub fn terminal(text: &str) -> Self {
        DerivationTree {
            label: Label::Terminal(text.to_string()),
            children: Vec::new(),
        }
    }

    pub fn variable(name: &str) -> Self {
        DerivationTree {
            label: Label::Variable(name.to_string()),
            children: Vec::new(),
        }
    }

    pub fn nonterminal(name: &str, children: Vec<DerivationTree>) -> Self {
        DerivationTree {
            label: Label::NonTerminal(name.to_string()),
            children,
        }
    }

    pub fn is_nonterminal(&self) -> bool {
        matches!(self.label, Label::NonTerminal(_))
    }

    pub fn terminal_text(&self) -> Option<&str> {
        match &self.label {
            Label::Terminal(t) => Some(t),
            _ => None,
        }
    }

    pub fn get(&self, path: &[usize]) -> Option<&DerivationTree> {
        path.iter().try_fold(self, |t, &i| t.children.get(i))
    }

    /// Concatenated leaves; variable leaves are spliced with separating
    /// spaces where they would otherwise fuse with an identifier.
    pub fn yield_string(&self) -> String {
        let mut out = String::new();
        self.push_yield(&mut out, &mut false);
        out
    }

    fn push_yield(&self, out: &mut String, after_var: &mut bool) {
        match &self.label {
            Label::Terminal(t) => {
                if *after_var && t.starts_with(|c: char| c.is_alphanumeric() || c == '_' || c == '\'') {
                    out.push(' ');
                }
                out.push_str(t);
                *after_var = false;
            }
            Label::Variable(v) => {
                if out.ends_with(|c: char| c.is_alphanumeric() || c == '_' || c == '\'' || c == '}') {
                    out.push(' ');
                }
                out.push_str(v);
                *after_var = true;
            }
            Label::NonTerminal(_) => {
                for c in &self.children {
                    c.push_yield(out, after_var);
                }
            }
        }
    }

    /// Paths of all nodes in pre-order.
    pub fn paths(&self) -> Vec<NodePath> {
        let mut out = Vec::new();
        self.collect_paths(&mut Vec::new(), &mut out);
        out
    }

    fn collect_paths(&self, cur: &mut NodePath, out: &mut Vec<NodePath>) {
        out.push(cur.clone());
        for (i, c) in self.children.iter().enumerate() {
            cur.push(i);
            c.collect_paths(cur, out);
            cur.pop();
        }
    }

    /// Paths of terminal leaves in left-to-right order.
    pub fn terminal_paths(&self) -> Vec<NodePath> {
        self.paths()
            .into_iter()
            .filter(|p| matches!(self.get(p).map(|n| &n.label), Some(Label::Terminal(_))))
            .collect()
    }

    /// Paths of nodes whose label (terminal text or nonterminal name) is in
    /// `symbols`.
    pub fn sites(&self, symbols: &[&str]) -> Vec<NodePath> {
        self.paths()
            .into_iter()
            .filter(|p| match &self.get(p).unwrap().label {
                Label::Terminal(t) | Label::NonTerminal(t) => symbols.contains(&t.as_str()),
                Label::Variable(_) => false,
            })
            .collect()
    }

    fn fmt_sexpr(&self, out: &mut String) {
        match &self.label {
            Label::Terminal(t) => out.push_str(&format!("{t:?}")),
            Label::Variable(v) => out.push_str(v),
            Label::NonTerminal(n) => {
                out.push('(');
                out.push_str(n);
                for c in &self.children {
                    out.push(' ');
                    c.fmt_sexpr(out);
                }
                out.push(')');
            }
        }
    }
}

impl fmt::Display for DerivationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.fmt_sexpr(&mut s);
        f.write_str(&s)
    }
}

/// A derivation tree whose leaves may be the bound variables in `vars`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct LambdaTree {
    pub vars: Vec<String>,
    pub tree: DerivationTree,
}

impl LambdaTree {
    pub fn is_bare_variable(&self) -> bool {
        matches!(self.tree.label, Label::Variable(_))
    }

    /// `\v1. \v2. <leaves>`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for v in &self.vars {
            s.push_str(&format!("\\{v}. "));
        }
        s.push_str(&self.tree.yield_string());
        s
    }

    pub fn to_term(&self) -> Result<Term, MrlError> {
        let text = self.render();
        parse_term(&text).map_err(|_| MrlError::UnparsableTemplate(text))
    }
}

pub fn template_to_term(lt: &LambdaTree) -> Result<Term, MrlError> {
    lt.to_term()
}

/// Largest root-anchored common template. Differing nonterminals become
/// variables; a differing terminal turns its parent into a variable.
pub fn common_template(t1: &DerivationTree, t2: &DerivationTree) -> Option<LambdaTree> {
    if t1.label != t2.label {
        return None;
    }
    let mut tree = match merge(t1, t2) {
        Merge::Same(t) => t,
        Merge::Abort => return None,
    };
    let count = count_vars(&tree);
    let mut vars = Vec::new();
    name_vars(&mut tree, count, &mut vars);
    Some(LambdaTree { vars, tree })
}

enum Merge {
    Same(DerivationTree),
    Abort,
}

const HOLE: &str = "\0";

fn merge(a: &DerivationTree, b: &DerivationTree) -> Merge {
    match (&a.label, &b.label) {
        (Label::Terminal(x), Label::Terminal(y)) if x == y => Merge::Same(a.clone()),
        (Label::NonTerminal(x), Label::NonTerminal(y)) => {
            if x != y || a.children.len() != b.children.len() {
                return Merge::Same(DerivationTree::variable(HOLE));
            }
            let mut children = Vec::new();
            for (ca, cb) in a.children.iter().zip(&b.children) {
                match merge(ca, cb) {
                    Merge::Same(t) => children.push(t),
                    Merge::Abort => return Merge::Same(DerivationTree::variable(HOLE)),
                }
            }
            Merge::Same(DerivationTree {
                label: a.label.clone(),
                children,
            })
        }
        _ => Merge::Abort,
    }
}

fn count_vars(t: &DerivationTree) -> usize {
    match t.label {
        Label::Variable(_) => 1,
        _ => t.children.iter().map(count_vars).sum(),
    }
}

fn name_vars(t: &mut DerivationTree, total: usize, vars: &mut Vec<String>) {
    if let Label::Variable(_) = t.label {
        let name = if total == 1 {
            "v".to_string()
        } else {
            format!("v{}", vars.len() + 1)
        };
        t.label = Label::Variable(name.clone());
        vars.push(name);
        return;
    }
    for c in &mut t.children {
        name_vars(c, total, vars);
    }
}

/// Lowest node dominating every site. A single site yields its parent (the
/// root yields itself).
pub fn mcyk(tree: &DerivationTree, sites: &[NodePath]) -> Result<NodePath, MrlError> {
    let mut uniq: Vec<&NodePath> = sites.iter().collect();
    uniq.sort();
    uniq.dedup();
    if uniq.is_empty() || uniq.iter().any(|p| tree.get(p).is_none()) {
        return Err(MrlError::NotDominated);
    }
    if uniq.len() == 1 {
        let mut p = uniq[0].clone();
        p.pop();
        return Ok(p);
    }
    let mut prefix = uniq[0].clone();
    for p in &uniq[1..] {
        let n = prefix.iter().zip(p.iter()).take_while(|(a, b)| a == b).count();
        prefix.truncate(n);
    }
    Ok(prefix)
}

/// Symbol-set form: dominates every node labelled with one of `symbols`.
pub fn mcyk_symbols(tree: &DerivationTree, symbols: &[&str]) -> Result<NodePath, MrlError> {
    mcyk(tree, &tree.sites(symbols))
}
