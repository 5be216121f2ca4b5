//! Packed scoring chart for the log-linear model.
//!
//! Each node of a syntactic tree maps every distinct (canonical) meaning to
//! the log of its summed derivation weight, the expected feature counts
//! under those derivations, and the best single derivation.

use std::collections::{BTreeMap, HashMap};

use crate::ccg::{CcgTree, Rule};
use crate::lexicon::Lexicon;
use crate::term::{beta_normalize, Term, DEFAULT_STEP_LIMIT};
use crate::types::{infer_type, Signature};

/// Meanings kept per internal node (the root of the sentence is uncapped).
pub const TERM_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    /// log Σ over derivations of exp(θ · features).
    pub log_z: f64,
    /// Expected count of each entry under those derivations.
    pub expect: BTreeMap<usize, f64>,
    /// Score of the best derivation.
    pub best: f64,
    /// Entry chosen at each leaf in the best derivation.
    pub best_entries: Vec<usize>,
    /// Index of the syntactic tree of the best derivation.
    pub best_tree: usize,
}

pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl Item {
    fn leaf(id: usize, weight: f64) -> Item {
        Item {
            log_z: weight,
            expect: BTreeMap::from([(id, 1.0)]),
            best: weight,
            best_entries: vec![id],
            best_tree: 0,
        }
    }

    fn product(a: &Item, b: &Item) -> Item {
        let mut expect = a.expect.clone();
        for (k, v) in &b.expect {
            *expect.entry(*k).or_insert(0.0) += v;
        }
        let mut best_entries = a.best_entries.clone();
        best_entries.extend(&b.best_entries);
        Item {
            log_z: a.log_z + b.log_z,
            expect,
            best: a.best + b.best,
            best_entries,
            best_tree: a.best_tree,
        }
    }

    /// Adds the derivations of `other` to this item.
    pub fn absorb(&mut self, other: &Item) {
        let z = log_add_exp(self.log_z, other.log_z);
        let (wa, wb) = ((self.log_z - z).exp(), (other.log_z - z).exp());
        for v in self.expect.values_mut() {
            *v *= wa;
        }
        for (k, v) in &other.expect {
            *self.expect.entry(*k).or_insert(0.0) += v * wb;
        }
        self.log_z = z;
        if other.best > self.best {
            self.best = other.best;
            self.best_entries = other.best_entries.clone();
            self.best_tree = other.best_tree;
        }
    }
}

/// Applies and β-normalizes meanings, rejecting ill-typed applications.
/// Results are cached since they do not depend on the weights.
#[derive(Default)]
pub struct Composer {
    signature: Option<Signature>,
    cache: HashMap<(Term, Term), Option<Term>>,
}

impl Composer {
    pub fn new(signature: Option<Signature>) -> Self {
        Composer {
            signature,
            cache: HashMap::new(),
        }
    }

    pub fn apply(&mut self, function: &Term, argument: &Term) -> Option<Term> {
        let key = (function.clone(), argument.clone());
        if let Some(hit) = self.cache.get(&key) {
            return hit.clone();
        }
        let app = Term::app(function.clone(), argument.clone());
        let ok = match &self.signature {
            Some(sig) => infer_type(&app, sig).is_ok(),
            None => true,
        };
        let out = if ok {
            beta_normalize(&app, DEFAULT_STEP_LIMIT)
                .ok()
                .map(|t| t.canonical())
                .filter(Term::is_closed)
        } else {
            None
        };
        self.cache.insert(key, out.clone());
        out
    }

    pub fn combine(&mut self, rule: Rule, left: &Term, right: &Term) -> Option<Term> {
        match rule {
            Rule::ForwardApp => self.apply(left, right),
            Rule::BackwardApp => self.apply(right, left),
        }
    }
}

/// Meaning table of one tree node.
pub type Cell = BTreeMap<Term, Item>;

/// Scores every meaning derivable for `tree` from the weighted lexicon.
pub fn score_tree(tree: &CcgTree, lex: &Lexicon, composer: &mut Composer, tree_index: usize) -> Cell {
    let mut cell = score_node(tree, lex, composer, true);
    for item in cell.values_mut() {
        item.best_tree = tree_index;
    }
    cell
}

fn score_node(t: &CcgTree, lex: &Lexicon, composer: &mut Composer, is_root: bool) -> Cell {
    let mut cell = Cell::new();
    match t {
        CcgTree::Leaf { category, word } => {
            for (id, e) in lex.lookup(word, category) {
                let item = Item::leaf(id, e.weight);
                match cell.get_mut(&e.semantics) {
                    Some(existing) => existing.absorb(&item),
                    None => {
                        cell.insert(e.semantics.clone(), item);
                    }
                }
            }
        }
        CcgTree::Node { rule, left, right, .. } => {
            let l = score_node(left, lex, composer, false);
            if l.is_empty() {
                return cell;
            }
            let r = score_node(right, lex, composer, false);
            for (lt, li) in &l {
                for (rt, ri) in &r {
                    let Some(term) = composer.combine(*rule, lt, rt) else {
                        continue;
                    };
                    let item = Item::product(li, ri);
                    match cell.get_mut(&term) {
                        Some(existing) => existing.absorb(&item),
                        None => {
                            cell.insert(term, item);
                        }
                    }
                }
            }
        }
    }
    if !is_root && cell.len() > TERM_CAP {
        let mut ranked: Vec<(Term, Item)> = std::mem::take(&mut cell).into_iter().collect();
        ranked.sort_by(|a, b| b.1.log_z.total_cmp(&a.1.log_z).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(TERM_CAP);
        cell = ranked.into_iter().collect();
    }
    cell
}

/// Root meanings of a sentence pooled over all its syntactic trees.
pub fn score_sentence(trees: &[CcgTree], lex: &Lexicon, composer: &mut Composer) -> Cell {
    let mut pooled = Cell::new();
    for (i, t) in trees.iter().enumerate() {
        for (term, item) in score_tree(t, lex, composer, i) {
            match pooled.get_mut(&term) {
                Some(existing) => existing.absorb(&item),
                None => {
                    pooled.insert(term, item);
                }
            }
        }
    }
    pooled
}

/// Sum of all items (log partition and feature expectations overall).
pub fn total(cell: &Cell) -> Option<Item> {
    let mut it = cell.values();
    let mut acc = it.next()?.clone();
    for i in it {
        acc.absorb(i);
    }
    Some(acc)
}
