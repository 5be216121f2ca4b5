//! Syntactic side: CCG categories, application-only CKY parsing over a
//! category lexicon, bracketed derivation files, word levels and semantic
//! composition along a derivation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::term::{normalize, LambdaError, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slash {
    /// `/`: argument expected on the right.
    Forward,
    /// `\`: argument expected on the left.
    Backward,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Atom(String),
    Slash(Box<Category>, Slash, Box<Category>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    ForwardApp,
    BackwardApp,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CcgError {
    #[error("bad category {0:?}")]
    BadCategory(String),
    #[error("no category for token {0:?}")]
    UnknownWord(String),
    #[error("no parse rooted at S")]
    NoParse,
    #[error("derivation format error: {0}")]
    Format(String),
    #[error("rule violation: {0}")]
    RuleViolation(String),
    #[error("no lexicon entry for {0:?} with category {1}")]
    MissingEntry(String, Category),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
}

impl Category {
    pub fn atom(name: &str) -> Category {
        Category::Atom(name.to_string())
    }

    pub fn slash(result: Category, dir: Slash, arg: Category) -> Category {
        Category::Slash(Box::new(result), dir, Box::new(arg))
    }

    pub fn is_atom(&self, name: &str) -> bool {
        matches!(self, Category::Atom(a) if a == name)
    }

    pub fn sentence() -> Category {
        Category::atom("S")
    }

    /// The atom left after consuming every argument.
    pub fn result(&self) -> &Category {
        match self {
            Category::Atom(_) => self,
            Category::Slash(r, _, _) => r.result(),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::Atom(a) => write!(f, "{a}"),
            Category::Slash(res, dir, arg) => {
                let s = match dir {
                    Slash::Forward => '/',
                    Slash::Backward => '\\',
                };
                match **res {
                    Category::Atom(_) => write!(f, "{res}")?,
                    _ => write!(f, "({res})")?,
                }
                write!(f, "{s}")?;
                match **arg {
                    Category::Atom(_) => write!(f, "{arg}"),
                    _ => write!(f, "({arg})"),
                }
            }
        }
    }
}

impl FromStr for Category {
    type Err = CcgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let cat = parse_cat(&chars, &mut pos).ok_or_else(|| CcgError::BadCategory(s.to_string()))?;
        if pos != chars.len() {
            return Err(CcgError::BadCategory(s.to_string()));
        }
        Ok(cat)
    }
}

// slashes associate to the left: S\NP/NP = (S\NP)/NP
fn parse_cat(c: &[char], pos: &mut usize) -> Option<Category> {
    let mut left = parse_cat_primary(c, pos)?;
    while *pos < c.len() && (c[*pos] == '/' || c[*pos] == '\\') {
        let dir = if c[*pos] == '/' {
            Slash::Forward
        } else {
            Slash::Backward
        };
        *pos += 1;
        let right = parse_cat_primary(c, pos)?;
        left = Category::slash(left, dir, right);
    }
    Some(left)
}

fn parse_cat_primary(c: &[char], pos: &mut usize) -> Option<Category> {
    if *pos >= c.len() {
        return None;
    }
    if c[*pos] == '(' {
        *pos += 1;
        let inner = parse_cat(c, pos)?;
        if *pos >= c.len() || c[*pos] != ')' {
            return None;
        }
        *pos += 1;
        return Some(inner);
    }
    let start = *pos;
    while *pos < c.len() && (c[*pos].is_alphanumeric() || c[*pos] == '_' || c[*pos] == '[' || c[*pos] == ']') {
        *pos += 1;
    }
    if start == *pos {
        return None;
    }
    Some(Category::Atom(c[start..*pos].iter().collect()))
}

/// Forward and backward application.
pub fn combine(left: &Category, right: &Category) -> Option<(Category, Rule)> {
    if let Category::Slash(res, Slash::Forward, arg) = left {
        if **arg == *right {
            return Some(((**res).clone(), Rule::ForwardApp));
        }
    }
    if let Category::Slash(res, Slash::Backward, arg) = right {
        if **arg == *left {
            return Some(((**res).clone(), Rule::BackwardApp));
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CcgTree {
    Leaf {
        category: Category,
        word: String,
    },
    Node {
        category: Category,
        rule: Rule,
        left: Box<CcgTree>,
        right: Box<CcgTree>,
    },
}

impl CcgTree {
    pub fn leaf(category: Category, word: &str) -> CcgTree {
        CcgTree::Leaf {
            category,
            word: word.to_string(),
        }
    }

    /// Builds an internal node, checking the category arithmetic.
    pub fn node(left: CcgTree, right: CcgTree) -> Result<CcgTree, CcgError> {
        let (category, rule) = combine(left.category(), right.category()).ok_or_else(|| {
            CcgError::RuleViolation(format!("{} + {} does not combine", left.category(), right.category()))
        })?;
        Ok(CcgTree::Node {
            category,
            rule,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    pub fn category(&self) -> &Category {
        match self {
            CcgTree::Leaf { category, .. } | CcgTree::Node { category, .. } => category,
        }
    }

    /// Leaves in sentence order as (word, category).
    pub fn leaves(&self) -> Vec<(&str, &Category)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<(&'a str, &'a Category)>) {
        match self {
            CcgTree::Leaf { category, word } => out.push((word, category)),
            CcgTree::Node { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    pub fn words(&self) -> Vec<&str> {
        self.leaves().into_iter().map(|(w, _)| w).collect()
    }

    /// Re-checks every internal node under [`combine`].
    pub fn validate(&self) -> Result<(), CcgError> {
        if let CcgTree::Node {
            category,
            rule,
            left,
            right,
        } = self
        {
            left.validate()?;
            right.validate()?;
            match combine(left.category(), right.category()) {
                Some((c, r)) if &c == category && &r == rule => {}
                _ => {
                    return Err(CcgError::RuleViolation(format!(
                        "{} + {} -> {category}",
                        left.category(),
                        right.category()
                    )))
                }
            }
        }
        Ok(())
    }

    /// Serializes in the bracketed derivation format read by
    /// [`load_derivation`].
    pub fn to_sexpr(&self) -> String {
        match self {
            CcgTree::Leaf { category, word } => format!("(lex {category} {word})"),
            CcgTree::Node {
                category,
                rule,
                left,
                right,
            } => {
                let r = match rule {
                    Rule::ForwardApp => "fa",
                    Rule::BackwardApp => "ba",
                };
                format!("({r} {category} {}{})", left.to_sexpr(), right.to_sexpr())
            }
        }
    }
}

/// Terminal punctuation tokens; they get category `S\S` and identity
/// semantics.
pub fn is_punctuation(word: &str) -> bool {
    matches!(word, "." | "?" | "!")
}

pub fn punctuation_category() -> Category {
    Category::slash(Category::sentence(), Slash::Backward, Category::sentence())
}

/// Word → categories. Keys are lowercased; multi-word keys drive chunking.
#[derive(Clone, Debug, Default)]
pub struct CategoryLexicon {
    entries: BTreeMap<String, Vec<Category>>,
}

impl CategoryLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads lines `word<TAB>category[,category...]`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CcgError> {
        let mut lex = CategoryLexicon::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (word, cats) = line
                .split_once('\t')
                .ok_or_else(|| CcgError::Format(format!("line {}: expected word<TAB>categories", n + 1)))?;
            for c in cats.split(',') {
                lex.add(word.trim(), c.trim().parse()?);
            }
        }
        Ok(lex)
    }

    pub fn add(&mut self, word: &str, cat: Category) {
        let cats = self.entries.entry(word.to_lowercase()).or_default();
        if !cats.contains(&cat) {
            cats.push(cat);
            cats.sort();
        }
    }

    pub fn categories(&self, word: &str) -> Vec<Category> {
        if is_punctuation(word) {
            return vec![punctuation_category()];
        }
        self.entries.get(&word.to_lowercase()).cloned().unwrap_or_default()
    }

    pub fn contains(&self, word: &str) -> bool {
        is_punctuation(word) || self.entries.contains_key(&word.to_lowercase())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Category])> {
        self.entries.iter().map(|(w, c)| (w.as_str(), c.as_slice()))
    }

    fn max_chunk(&self) -> usize {
        self.entries
            .keys()
            .map(|k| k.split_whitespace().count())
            .max()
            .unwrap_or(1)
    }
}

/// Splits on whitespace, detaches terminal punctuation and greedily joins
/// multi-word entries of the category lexicon into single tokens.
pub fn tokenize(sentence: &str, catlex: &CategoryLexicon) -> Vec<String> {
    let mut raw = Vec::new();
    for w in sentence.split_whitespace() {
        let mut w = w;
        let mut trailing = Vec::new();
        while let Some(last) = w.chars().last() {
            if w.len() > 1 && matches!(last, '.' | '?' | '!' | ',') {
                trailing.push(last.to_string());
                w = &w[..w.len() - last.len_utf8()];
            } else {
                break;
            }
        }
        raw.push(w.to_string());
        raw.extend(trailing.into_iter().rev());
    }
    let max = catlex.max_chunk();
    let mut out = Vec::new();
    let mut i = 0;
    while i < raw.len() {
        let mut taken = 1;
        for len in (2..=max.min(raw.len() - i)).rev() {
            let cand = raw[i..i + len].join(" ");
            if catlex.entries.contains_key(&cand.to_lowercase()) {
                taken = len;
                break;
            }
        }
        out.push(raw[i..i + taken].join(" "));
        i += taken;
    }
    out
}

/// Maximum number of trees kept per chart cell and category.
pub const CHART_CAP: usize = 50;

/// All application-only parses rooted at `S`.
pub fn cky_parse(tokens: &[String], catlex: &CategoryLexicon) -> Result<Vec<CcgTree>, CcgError> {
    let n = tokens.len();
    if n == 0 {
        return Err(CcgError::NoParse);
    }
    // chart[i][len-1]
    let mut chart: Vec<Vec<BTreeMap<Category, Vec<CcgTree>>>> = vec![vec![BTreeMap::new(); n]; n];
    for (i, tok) in tokens.iter().enumerate() {
        let cats = catlex.categories(tok);
        if cats.is_empty() {
            return Err(CcgError::UnknownWord(tok.clone()));
        }
        for c in cats {
            chart[i][0].insert(c.clone(), vec![CcgTree::leaf(c, tok)]);
        }
    }
    for len in 2..=n {
        for i in 0..=n - len {
            let mut cell: BTreeMap<Category, Vec<CcgTree>> = BTreeMap::new();
            for k in 1..len {
                let (left, right) = (&chart[i][k - 1], &chart[i + k][len - k - 1]);
                for (lc, ltrees) in left {
                    for (rc, rtrees) in right {
                        let Some((cat, rule)) = combine(lc, rc) else { continue };
                        let slot = cell.entry(cat.clone()).or_default();
                        'outer: for lt in ltrees {
                            for rt in rtrees {
                                if slot.len() >= CHART_CAP {
                                    break 'outer;
                                }
                                slot.push(CcgTree::Node {
                                    category: cat.clone(),
                                    rule,
                                    left: Box::new(lt.clone()),
                                    right: Box::new(rt.clone()),
                                });
                            }
                        }
                    }
                }
            }
            chart[i][len - 1] = cell;
        }
    }
    match chart[0][n - 1].remove(&Category::sentence()) {
        Some(trees) if !trees.is_empty() => Ok(trees),
        _ => Err(CcgError::NoParse),
    }
}

/// Reads `(fa|ba CAT (child)(child))` / `(lex CAT word)` and validates the
/// category arithmetic.
pub fn load_derivation(text: &str) -> Result<CcgTree, CcgError> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let tree = read_node(&chars, &mut pos)?;
    skip_ws(&chars, &mut pos);
    if pos != chars.len() {
        return Err(CcgError::Format(format!("trailing input at {pos}")));
    }
    tree.validate()?;
    Ok(tree)
}

fn skip_ws(c: &[char], pos: &mut usize) {
    while *pos < c.len() && c[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn read_atom(c: &[char], pos: &mut usize) -> String {
    // a whitespace-delimited token whose parentheses are balanced
    let start = *pos;
    let mut depth = 0i32;
    while *pos < c.len() {
        match c[*pos] {
            ch if ch.is_whitespace() && depth == 0 => break,
            '(' => depth += 1,
            ')' => {
                if depth == 0 {
                    break;
                }
                depth -= 1;
            }
            _ => {}
        }
        *pos += 1;
    }
    c[start..*pos].iter().collect()
}

fn read_node(c: &[char], pos: &mut usize) -> Result<CcgTree, CcgError> {
    skip_ws(c, pos);
    if *pos >= c.len() || c[*pos] != '(' {
        return Err(CcgError::Format(format!("expected '(' at {pos}")));
    }
    *pos += 1;
    skip_ws(c, pos);
    let head = read_atom(c, pos);
    skip_ws(c, pos);
    let cat_text = read_atom(c, pos);
    let category: Category = cat_text
        .parse()
        .map_err(|_| CcgError::Format(format!("bad category {cat_text:?}")))?;
    match head.as_str() {
        "lex" => {
            skip_ws(c, pos);
            let start = *pos;
            while *pos < c.len() && c[*pos] != ')' {
                *pos += 1;
            }
            if *pos >= c.len() {
                return Err(CcgError::Format("unterminated leaf".into()));
            }
            let word: String = c[start..*pos].iter().collect::<String>().trim().to_string();
            *pos += 1;
            if word.is_empty() {
                return Err(CcgError::Format("leaf without word".into()));
            }
            Ok(CcgTree::Leaf { category, word })
        }
        "fa" | "ba" | ">" | "<" => {
            let left = read_node(c, pos)?;
            let right = read_node(c, pos)?;
            skip_ws(c, pos);
            if *pos >= c.len() || c[*pos] != ')' {
                return Err(CcgError::Format(format!("expected ')' at {pos}")));
            }
            *pos += 1;
            let rule = if matches!(head.as_str(), "fa" | ">") {
                Rule::ForwardApp
            } else {
                Rule::BackwardApp
            };
            Ok(CcgTree::Node {
                category,
                rule,
                left: Box::new(left),
                right: Box::new(right),
            })
        }
        other => Err(CcgError::Format(format!("unknown node kind {other:?}"))),
    }
}

/// Depth of every leaf (root-to-leaf edge count), in sentence order.
pub fn word_levels(tree: &CcgTree) -> Vec<(String, usize)> {
    fn walk(t: &CcgTree, depth: usize, out: &mut Vec<(String, usize)>) {
        match t {
            CcgTree::Leaf { word, .. } => out.push((word.clone(), depth)),
            CcgTree::Node { left, right, .. } => {
                walk(left, depth + 1, out);
                walk(right, depth + 1, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(tree, 0, &mut out);
    out
}

/// Words at minimal depth, ignoring punctuation; ties are all returned.
pub fn top_words(tree: &CcgTree) -> Vec<(String, Category)> {
    let levels = word_levels(tree);
    let leaves = tree.leaves();
    let min = levels.iter().filter(|(w, _)| !is_punctuation(w)).map(|(_, l)| *l).min();
    let mut out: Vec<(String, Category)> = Vec::new();
    for ((w, l), (_, cat)) in levels.iter().zip(leaves) {
        if Some(*l) == min && !is_punctuation(w) && !out.iter().any(|(o, c)| o == w && c == cat) {
            out.push((w.clone(), cat.clone()));
        }
    }
    out
}

/// Meaning of one node of a composed derivation.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeMeaning {
    /// Covered token span `[start, end)`.
    pub span: (usize, usize),
    pub category: Category,
    pub term: Term,
}

/// One full composition: the root term plus every node's meaning in
/// post-order.
#[derive(Clone, Debug, PartialEq)]
pub struct Composition {
    pub term: Term,
    pub entries: Vec<usize>,
    pub trace: Vec<NodeMeaning>,
}

/// Composes the semantics of `tree` for every choice of leaf entries.
/// At each node the argument's meaning is applied onto the function's
/// meaning and the result is β-normalized.
pub fn compose_semantics(tree: &CcgTree, lex: &Lexicon) -> Result<Vec<Composition>, CcgError> {
    let leaves = tree.leaves();
    let mut choices: Vec<Vec<usize>> = Vec::new();
    for (w, cat) in &leaves {
        let ids: Vec<usize> = lex.lookup(w, cat).map(|(i, _)| i).collect();
        if ids.is_empty() {
            return Err(CcgError::MissingEntry(w.to_string(), (*cat).clone()));
        }
        choices.push(ids);
    }
    let mut out = Vec::new();
    let mut pick = vec![0usize; choices.len()];
    loop {
        let entries: Vec<usize> = pick.iter().zip(&choices).map(|(p, c)| c[*p]).collect();
        let mut trace = Vec::new();
        let mut next = 0;
        let term = compose_node(tree, lex, &entries, &mut next, &mut trace)?;
        out.push(Composition { term, entries, trace });
        // odometer
        let mut k = pick.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            pick[k] += 1;
            if pick[k] < choices[k].len() {
                break;
            }
            pick[k] = 0;
        }
    }
}

fn compose_node(
    t: &CcgTree,
    lex: &Lexicon,
    entries: &[usize],
    next: &mut usize,
    trace: &mut Vec<NodeMeaning>,
) -> Result<Term, CcgError> {
    let start = *next;
    let term = match t {
        CcgTree::Leaf { .. } => {
            let term = lex.entry(entries[*next]).semantics.clone();
            *next += 1;
            term
        }
        CcgTree::Node { rule, left, right, .. } => {
            let l = compose_node(left, lex, entries, next, trace)?;
            let r = compose_node(right, lex, entries, next, trace)?;
            let app = match rule {
                Rule::ForwardApp => Term::app(l, r),
                Rule::BackwardApp => Term::app(r, l),
            };
            normalize(&app)?
        }
    };
    trace.push(NodeMeaning {
        span: (start, *next),
        category: t.category().clone(),
        term: term.clone(),
    });
    Ok(term)
}
