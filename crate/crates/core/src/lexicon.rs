//! Weighted lexicon of (phrase, category, meaning) entries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ccg::{is_punctuation, punctuation_category, Category, CcgError};
use crate::term::{parse_term, render_term, LambdaError, Term};

/// Starting weight of a freshly added entry.
pub const INITIAL_WEIGHT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    InitialC,
    InitialN,
    Inverse,
    Generalized,
    Trivial,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::InitialC => "initial_c",
            Provenance::InitialN => "initial_n",
            Provenance::Inverse => "inverse",
            Provenance::Generalized => "generalized",
            Provenance::Trivial => "trivial",
        })
    }
}

impl FromStr for Provenance {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "initial_c" => Provenance::InitialC,
            "initial_n" => Provenance::InitialN,
            "inverse" => Provenance::Inverse,
            "generalized" => Provenance::Generalized,
            "trivial" => Provenance::Trivial,
            _ => return Err(LexiconError::Format(format!("unknown provenance {s:?}"))),
        })
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon format error: {0}")]
    Format(String),
    #[error(transparent)]
    Category(#[from] CcgError),
    #[error(transparent)]
    Term(#[from] LambdaError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LexiconEntry {
    /// Lowercased phrase.
    pub phrase: String,
    pub category: Category,
    /// Stored in canonical (α-renamed) form.
    pub semantics: Term,
    pub weight: f64,
    pub provenance: Provenance,
}

impl LexiconEntry {
    pub fn new(phrase: &str, category: Category, semantics: Term, provenance: Provenance) -> Self {
        LexiconEntry {
            phrase: phrase.to_lowercase(),
            category,
            semantics: semantics.canonical(),
            weight: INITIAL_WEIGHT,
            provenance,
        }
    }

    fn key(&self) -> (String, Category, Term) {
        (self.phrase.clone(), self.category.clone(), self.semantics.clone())
    }
}

/// Entries are deduplicated by (phrase, category, α-class of the meaning);
/// the first insertion wins.
#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    index: BTreeMap<(String, Category), Vec<usize>>,
    seen: BTreeSet<(String, Category, Term)>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Lexicon pre-seeded with identity meanings for punctuation.
    pub fn with_punctuation() -> Self {
        let mut lex = Lexicon::new();
        for p in [".", "?", "!"] {
            lex.insert(LexiconEntry::new(
                p,
                punctuation_category(),
                Term::lam("x", Term::var("x")),
                Provenance::Trivial,
            ));
        }
        lex
    }

    /// Returns the new index, or `None` for a duplicate.
    pub fn insert(&mut self, entry: LexiconEntry) -> Option<usize> {
        let key = entry.key();
        if self.seen.contains(&key) {
            return None;
        }
        let id = self.entries.len();
        self.index
            .entry((entry.phrase.clone(), entry.category.clone()))
            .or_default()
            .push(id);
        self.seen.insert(key);
        self.entries.push(entry);
        Some(id)
    }

    pub fn add(&mut self, phrase: &str, category: Category, semantics: Term, provenance: Provenance) -> Option<usize> {
        self.insert(LexiconEntry::new(phrase, category, semantics, provenance))
    }

    pub fn contains(&self, phrase: &str, category: &Category, semantics: &Term) -> bool {
        self.seen
            .contains(&(phrase.to_lowercase(), category.clone(), semantics.canonical()))
    }

    /// Entries for a surface word under one category.
    pub fn lookup<'a>(
        &'a self,
        phrase: &str,
        category: &Category,
    ) -> impl Iterator<Item = (usize, &'a LexiconEntry)> + 'a {
        let ids = self
            .index
            .get(&(phrase.to_lowercase(), category.clone()))
            .cloned()
            .unwrap_or_default();
        ids.into_iter().map(move |i| (i, &self.entries[i]))
    }

    pub fn has(&self, phrase: &str, category: &Category) -> bool {
        if is_punctuation(phrase) && *category == punctuation_category() {
            return self.index.contains_key(&(phrase.to_string(), category.clone()));
        }
        self.index.contains_key(&(phrase.to_lowercase(), category.clone()))
    }

    /// Meanings known for a phrase under any category.
    pub fn meanings(&self, phrase: &str) -> Vec<&LexiconEntry> {
        let p = phrase.to_lowercase();
        self.entries.iter().filter(|e| e.phrase == p).collect()
    }

    pub fn entry(&self, id: usize) -> &LexiconEntry {
        &self.entries[id]
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.weight).collect()
    }

    pub fn set_weights(&mut self, w: &[f64]) {
        for (e, w) in self.entries.iter_mut().zip(w) {
            e.weight = *w;
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tab-separated rows `phrase category term weight provenance`, sorted.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<String> = self
            .entries
            .iter()
            .map(|e| {
                format!(
                    "{}\t{}\t{}\t{}\t{}",
                    e.phrase,
                    e.category,
                    render_term(&e.semantics),
                    e.weight,
                    e.provenance
                )
            })
            .collect();
        rows.sort();
        let mut out = rows.join("\n");
        out.push('\n');
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(LexiconError::Format(format!("line {}: expected 5 columns", n + 1)));
            }
            let weight: f64 = cols[3]
                .parse()
                .map_err(|_| LexiconError::Format(format!("line {}: bad weight", n + 1)))?;
            let mut e = LexiconEntry::new(cols[0], cols[1].parse()?, parse_term(cols[2])?, cols[4].parse()?);
            e.weight = weight;
            lex.insert(e);
        }
        Ok(lex)
    }
}
