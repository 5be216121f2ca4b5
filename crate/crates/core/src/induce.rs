//! Automatic initial lexicon: shared target-language structure assigned to
//! the top words of each parse, and candidate meanings for nouns found by
//! climbing the target derivation from matching terminals.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::ccg::{is_punctuation, top_words, Category, CcgTree};
use crate::corpus::Annotated;
use crate::lexicon::{Lexicon, LexiconEntry, Provenance};
use crate::mrl::{common_template, mcyk, DerivationTree, Label, LambdaTree, MrlError, NodePath};
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InductionConfig {
    /// How many times the noun search may climb past its first node.
    pub maxlevel: usize,
    /// Minimum string similarity for a word to match a terminal.
    pub accuracy: f64,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig {
            maxlevel: 2,
            accuracy: 0.7,
        }
    }
}

impl InductionConfig {
    pub fn validate(&self) -> Result<(), InduceError> {
        if self.maxlevel < 1 {
            return Err(InduceError::InvalidConfig("maxlevel must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.accuracy) {
            return Err(InduceError::InvalidConfig("accuracy must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum InduceError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Mrl(#[from] MrlError),
}

fn fold(s: &str) -> String {
    s.to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Similarity in [0, 1] of a word and a terminal after case and punctuation
/// folding. Besides whole-string edit distance, a word may match the prefix
/// of the other string when it covers at least half of it, so inflected
/// forms (`cities` / `city(`) and abbreviations (`us` / `'usa'`) match.
pub fn similarity(x: &str, y: &str) -> f64 {
    let (a, b) = (fold(x), fold(y));
    let (la, lb) = (a.chars().count(), b.chars().count());
    if la == 0 || lb == 0 {
        return 0.0;
    }
    let whole = 1.0 - strsim::levenshtein(&a, &b) as f64 / la.max(lb) as f64;
    let (short, long, ls, ll) = if la <= lb { (&a, &b, la, lb) } else { (&b, &a, lb, la) };
    if 2 * ls < ll {
        return whole;
    }
    let head: String = long.chars().take(ls).collect();
    let prefix = 1.0 - strsim::levenshtein(short, &head) as f64 / ls as f64;
    whole.max(prefix)
}

/// Terminals partially matching `w` at accuracy `a`.
pub fn nmatch<'t>(w: &str, terminals: impl IntoIterator<Item = &'t str>, a: f64) -> BTreeSet<&'t str> {
    terminals.into_iter().filter(|t| similarity(w, t) >= a).collect()
}

fn is_noun_category(c: &Category) -> bool {
    c.is_atom("N") || c.is_atom("NP")
}

/// Leaves whose category is `N` or `NP`, in sentence order, deduplicated.
pub fn find_nouns(tree: &CcgTree) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for (w, c) in tree.leaves() {
        if is_noun_category(c) && !is_punctuation(w) && !out.iter().any(|o| o == w) {
            out.push(w.to_string());
        }
    }
    out
}

/// Pairs every two sentences (including each with itself) and assigns the
/// meaning of their largest common template to all top words of both.
pub fn initial_c(data: &[Annotated]) -> Result<Lexicon, InduceError> {
    let tops: Vec<Vec<(String, Category)>> = data
        .iter()
        .map(|d| {
            let mut ws: Vec<(String, Category)> = Vec::new();
            for p in &d.parses {
                for tw in top_words(p) {
                    if !ws.contains(&tw) {
                        ws.push(tw);
                    }
                }
            }
            ws
        })
        .collect();
    let mut found: BTreeSet<(String, Category, Term)> = BTreeSet::new();
    for i in 0..data.len() {
        for j in i..data.len() {
            let Some(lt) = common_template(&data[i].derivation, &data[j].derivation) else {
                continue;
            };
            if lt.is_bare_variable() {
                continue;
            }
            let term = lt.to_term()?.canonical();
            for (w, c) in tops[i].iter().chain(&tops[j]) {
                found.insert((w.to_lowercase(), c.clone(), term.clone()));
            }
        }
    }
    let mut lex = Lexicon::new();
    for (w, c, t) in found {
        lex.insert(LexiconEntry::new(&w, c, t, Provenance::InitialC));
    }
    Ok(lex)
}

/// Candidate meanings for every noun of every sentence.
pub fn initial_n(data: &[Annotated], cfg: &InductionConfig) -> Result<Lexicon, InduceError> {
    cfg.validate()?;
    let mut found: BTreeSet<(String, Category, Term)> = BTreeSet::new();
    for d in data {
        let mut nouns: Vec<(String, Category)> = Vec::new();
        for p in &d.parses {
            for (w, c) in p.leaves() {
                let item = (w.to_string(), c.clone());
                if is_noun_category(c) && !nouns.contains(&item) {
                    nouns.push(item);
                }
            }
        }
        for (w, cat) in nouns {
            for term in noun_candidates(&w, &d.tokens, &d.derivation, cfg) {
                found.insert((w.to_lowercase(), cat.clone(), term));
            }
        }
    }
    let mut lex = Lexicon::new();
    for (w, c, t) in found {
        lex.insert(LexiconEntry::new(&w, c, t, Provenance::InitialN));
    }
    Ok(lex)
}

fn is_prefix(p: &[usize], q: &[usize]) -> bool {
    q.len() >= p.len() && q[..p.len()] == *p
}

/// Candidate meanings of noun `w` read off the derivation of its sentence.
pub fn noun_candidates(w: &str, tokens: &[String], tree: &DerivationTree, cfg: &InductionConfig) -> Vec<Term> {
    let leaves = tree.terminal_paths();
    let text = |p: &NodePath| tree.get(p).and_then(|n| n.terminal_text()).unwrap_or("");
    let parts: Vec<&str> = w.split_whitespace().collect();
    let part_sites: Vec<Vec<NodePath>> = parts
        .iter()
        .map(|part| {
            leaves
                .iter()
                .filter(|p| similarity(part, text(p)) >= cfg.accuracy)
                .cloned()
                .collect()
        })
        .collect();
    let whole_sites: Vec<NodePath> = leaves
        .iter()
        .filter(|p| similarity(w, text(p)) >= cfg.accuracy)
        .cloned()
        .collect();

    // starting nodes: each whole-phrase match, or minimal nodes covering a
    // match of every component word
    let mut starts: BTreeSet<NodePath> = BTreeSet::new();
    for s in &whole_sites {
        if let Ok(n) = mcyk(tree, std::slice::from_ref(s)) {
            starts.insert(n);
        }
    }
    if parts.len() > 1 && part_sites.iter().all(|s| !s.is_empty()) {
        for s in &part_sites[0] {
            let mut n = s.clone();
            loop {
                n.pop();
                if part_sites[1..].iter().all(|ss| ss.iter().any(|q| is_prefix(&n, q))) {
                    starts.insert(n);
                    break;
                }
                if n.is_empty() {
                    break;
                }
            }
        }
    }
    let own: BTreeSet<NodePath> = whole_sites.iter().chain(part_sites.iter().flatten()).cloned().collect();
    let own_words: BTreeSet<String> = parts.iter().map(|p| p.to_lowercase()).collect();
    let others: Vec<&str> = tokens
        .iter()
        .map(String::as_str)
        .filter(|t| {
            !is_punctuation(t) && !own_words.contains(&t.to_lowercase()) && t.to_lowercase() != w.to_lowercase()
        })
        .collect();
    let matches_other = |t: &str| others.iter().any(|o| similarity(o, t) >= cfg.accuracy);

    let mut out: Vec<Term> = Vec::new();
    for start in starts {
        let mut n = start;
        for _ in 0..=cfg.maxlevel {
            let node = tree.get(&n).expect("valid path");
            let blocked = node.children.iter().enumerate().any(|(i, c)| {
                let mut cp = n.clone();
                cp.push(i);
                !own.contains(&cp) && c.terminal_text().is_some_and(&matches_other)
            });
            if blocked {
                break;
            }
            if let Some(t) = candidate(tree, &n, &own, &matches_other) {
                if !out.contains(&t) {
                    out.push(t);
                }
            }
            let nt_children = node.children.iter().filter(|c| c.is_nonterminal()).count();
            if nt_children >= 2 || n.is_empty() {
                break;
            }
            n.pop();
        }
    }
    out
}

/// Leaves of the subtree at `n`, with each maximal foreign subtree holding a
/// word of the sentence replaced by a bound variable.
fn candidate(
    tree: &DerivationTree,
    n: &NodePath,
    own: &BTreeSet<NodePath>,
    matches_other: &dyn Fn(&str) -> bool,
) -> Option<Term> {
    let root = tree.get(n)?;
    let mut vars = Vec::new();
    let body = abstract_foreign(root, n, true, own, matches_other, &mut vars);
    let lt = LambdaTree { vars, tree: body };
    let t = lt.to_term().ok()?;
    t.is_closed().then(|| t.canonical())
}

fn abstract_foreign(
    t: &DerivationTree,
    path: &NodePath,
    is_top: bool,
    own: &BTreeSet<NodePath>,
    matches_other: &dyn Fn(&str) -> bool,
    vars: &mut Vec<String>,
) -> DerivationTree {
    if !is_top && t.is_nonterminal() {
        let has_own = own.iter().any(|o| is_prefix(path, o));
        let has_other = t
            .terminal_paths()
            .iter()
            .any(|p| t.get(p).and_then(|x| x.terminal_text()).is_some_and(matches_other));
        if !has_own && has_other {
            let name = format!("v{}", vars.len() + 1);
            vars.push(name.clone());
            return DerivationTree::variable(&name);
        }
    }
    if let Label::NonTerminal(_) = t.label {
        let children = t
            .children
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut cp = path.clone();
                cp.push(i);
                abstract_foreign(c, &cp, false, own, matches_other, vars)
            })
            .collect();
        DerivationTree {
            label: t.label.clone(),
            children,
        }
    } else {
        t.clone()
    }
}
