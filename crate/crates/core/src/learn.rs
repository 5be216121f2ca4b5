//! Lexicon growth by inverse-λ extraction and generalization, and
//! stochastic-gradient estimation of the log-linear parsing model.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::ccg::{cky_parse, tokenize, Category, CategoryLexicon, CcgTree, Rule};
use crate::chart::{score_sentence, total, Composer};
use crate::corpus::Annotated;
use crate::induce::similarity;
use crate::inverse::{inverse_l, inverse_r};
use crate::lexicon::{Lexicon, LexiconEntry, LexiconError, Provenance};
use crate::mrl::Grammar;
use crate::term::{normalize, parse_term, render_term, Term};
use crate::types::Signature;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model format error: {0}")]
    Format(String),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Learning rate at step t is `alpha0 / (1 + decay * t)`.
    pub alpha0: f64,
    pub decay: f64,
    /// Fall back to semantically vacuous entries for uncovered words.
    pub trivial: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 10,
            alpha0: 0.1,
            decay: 0.001,
            trivial: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.iterations < 1 {
            return Err(LearnError::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) || !(self.decay >= 0.0 && self.decay.is_finite()) {
            return Err(LearnError::InvalidConfig(
                "learning-rate schedule must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn rate(&self, step: usize) -> f64 {
        self.alpha0 / (1.0 + self.decay * step as f64)
    }
}

/// Target-language knowledge used while learning and decoding.
#[derive(Clone, Debug, Default)]
pub struct Context {
    /// Types for rejecting ill-formed compositions; `None` disables the check.
    pub signature: Option<Signature>,
    /// Constants generalization may substitute in.
    pub vocabulary: BTreeSet<String>,
    /// Similarity threshold for word/constant matching.
    pub accuracy: f64,
    /// Constants only a sentence-level meaning may contain.
    pub root_constants: BTreeSet<String>,
    /// When set, decoding only returns meanings this grammar generates.
    pub language: Option<Grammar>,
}

impl Context {
    pub fn new(signature: Option<Signature>, vocabulary: BTreeSet<String>) -> Self {
        Context {
            signature,
            vocabulary,
            accuracy: 0.7,
            root_constants: BTreeSet::new(),
            language: None,
        }
    }

    /// Whether a sentence meaning is an expression of the target language.
    pub fn well_formed(&self, t: &Term) -> bool {
        self.language.as_ref().is_none_or(|g| g.generates(&render_term(t)))
    }

    /// Whether an entry is well formed: meanings of categories that do not
    /// yield a sentence may not mention sentence-level constants, and typed
    /// constants must be fully applied.
    pub fn admits(&self, e: &LexiconEntry) -> bool {
        let sorted = *e.category.result() == Category::sentence()
            || e.semantics
                .constants()
                .iter()
                .all(|c| !self.root_constants.contains(*c));
        sorted && self.signature.as_ref().is_none_or(|sig| sig.saturated(&e.semantics))
    }

    pub fn composer(&self) -> Composer {
        Composer::new(self.signature.clone())
    }
}

/// Weighted lexicon (one feature per entry, the weight is its parameter)
/// plus the training state.
#[derive(Clone, Debug)]
pub struct Model {
    pub lexicon: Lexicon,
    pub config: TrainConfig,
    /// Number of stochastic updates performed so far.
    pub updates: usize,
    pub context: Context,
}

const MODEL_HEADER: &str = "#model";

impl Model {
    pub fn new(lexicon: Lexicon, config: TrainConfig, context: Context) -> Self {
        Model {
            lexicon,
            config,
            updates: 0,
            context,
        }
    }

    /// Header line with the schedule, then the lexicon rows.
    pub fn to_tsv(&self) -> String {
        format!(
            "{MODEL_HEADER}\titerations={}\talpha0={}\tdecay={}\ttrivial={}\tupdates={}\n{}",
            self.config.iterations,
            self.config.alpha0,
            self.config.decay,
            self.config.trivial,
            self.updates,
            self.lexicon.to_tsv()
        )
    }

    pub fn from_tsv(text: &str, context: Context) -> Result<Model, LearnError> {
        let (head, rest) = text.split_once('\n').unwrap_or((text, ""));
        let mut fields = head.split('\t');
        if fields.next() != Some(MODEL_HEADER) {
            return Err(LearnError::Format("missing model header".into()));
        }
        let mut config = TrainConfig::default();
        let mut updates = 0;
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| LearnError::Format(format!("bad header field {f:?}")))?;
            let bad = || LearnError::Format(format!("bad value for {k}"));
            match k {
                "iterations" => config.iterations = v.parse().map_err(|_| bad())?,
                "alpha0" => config.alpha0 = v.parse().map_err(|_| bad())?,
                "decay" => config.decay = v.parse().map_err(|_| bad())?,
                "trivial" => config.trivial = v.parse().map_err(|_| bad())?,
                "updates" => updates = v.parse().map_err(|_| bad())?,
                _ => return Err(LearnError::Format(format!("unknown header field {k:?}"))),
            }
        }
        Ok(Model {
            lexicon: Lexicon::from_tsv(rest)?,
            config,
            updates,
            context,
        })
    }
}

fn rename_constant(t: &Term, from: &str, to: &str) -> Term {
    match t {
        Term::Const(c) if c == from => Term::Const(to.to_string()),
        Term::Var(_) | Term::Const(_) => t.clone(),
        Term::Lam(x, b) => Term::Lam(x.clone(), Box::new(rename_constant(b, from, to))),
        Term::App(f, a) => Term::app(rename_constant(f, from, to), rename_constant(a, from, to)),
    }
}

fn is_quoted(c: &str) -> bool {
    c.len() > 1 && c.starts_with('\'') && c.ends_with('\'')
}

/// The constant standing for `word`, of the same kind (quoted literal or
/// bare name) as `donor`. Without a vocabulary the word itself is used.
fn constant_for(word: &str, donor: &str, ctx: &Context) -> Option<String> {
    let quoted = is_quoted(donor);
    if ctx.vocabulary.is_empty() {
        let w = word.to_lowercase();
        return Some(if quoted { format!("'{w}'") } else { w.replace(' ', "_") });
    }
    let mut best: Option<(&String, f64)> = None;
    for v in &ctx.vocabulary {
        if is_quoted(v) != quoted {
            continue;
        }
        let s = similarity(word, v);
        if s >= ctx.accuracy && best.is_none_or(|(_, b)| s > b) {
            best = Some((v, s));
        }
    }
    best.map(|(v, _)| v.clone())
}

/// New meanings for `word` under `category` transferred from entries of the
/// same category whose meaning mentions a constant resembling their own
/// word. A transferred entry starts with its donor's weight.
pub fn generalize_on_demand(lex: &Lexicon, word: &str, category: &Category, ctx: &Context) -> Vec<LexiconEntry> {
    let mut out: Vec<LexiconEntry> = Vec::new();
    let w = word.to_lowercase();
    for e in lex.entries() {
        if e.category != *category || e.phrase == w {
            continue;
        }
        let consts: BTreeSet<&str> = e.semantics.constants().into_iter().collect();
        for c in consts {
            if similarity(&e.phrase, c) < ctx.accuracy {
                continue;
            }
            let Some(new) = constant_for(word, c, ctx) else {
                continue;
            };
            let term = rename_constant(&e.semantics, c, &new);
            let mut entry = LexiconEntry::new(&w, category.clone(), term, Provenance::Generalized);
            entry.weight = e.weight;
            if ctx.admits(&entry)
                && !lex.contains(&w, category, &entry.semantics)
                && !out.iter().any(|o| o.semantics == entry.semantics)
            {
                out.push(entry);
            }
        }
    }
    out
}

/// Closes the lexicon under generalization for every (word, category) pair
/// it holds plus `extra` pairs.
pub fn generalize_mass(lex: &Lexicon, extra: &[(String, Category)], ctx: &Context) -> Lexicon {
    let mut pairs: BTreeSet<(String, Category)> = lex
        .entries()
        .iter()
        .map(|e| (e.phrase.clone(), e.category.clone()))
        .collect();
    pairs.extend(extra.iter().map(|(w, c)| (w.to_lowercase(), c.clone())));
    let mut out = lex.clone();
    for (w, c) in pairs {
        for e in generalize_on_demand(lex, &w, &c, ctx) {
            out.insert(e);
        }
    }
    out
}

const VACUOUS: [&str; 2] = [r"\x. x", r"\x. \y. y @ x"];

fn is_vacuous(t: &Term) -> bool {
    VACUOUS.iter().any(|v| parse_term(v).is_ok_and(|v| v.alpha_eq(t)))
}

/// The two vacuous meanings, only for words with no entry of `category`.
pub fn trivial_entries(lex: &Lexicon, word: &str, category: &Category) -> Vec<LexiconEntry> {
    if lex.has(word, category) {
        return Vec::new();
    }
    VACUOUS
        .iter()
        .map(|s| {
            LexiconEntry::new(
                word,
                category.clone(),
                parse_term(s).expect("fixed term"),
                Provenance::Trivial,
            )
        })
        .collect()
}

/// A meaning recovered for one span of a sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Extracted {
    pub phrase: String,
    pub span: (usize, usize),
    pub category: Category,
    pub term: Term,
}

/// Meanings kept per node while propagating.
const MEANING_CAP: usize = 8;

/// Meanings derivable for a subtree from the lexicon, heaviest entries
/// first.
fn known(t: &CcgTree, lex: &Lexicon, composer: &mut Composer) -> Vec<Term> {
    match t {
        CcgTree::Leaf { category, word } => {
            let mut es: Vec<_> = lex.lookup(word, category).map(|(_, e)| e).collect();
            es.sort_by(|a, b| b.weight.total_cmp(&a.weight));
            es.into_iter().map(|e| e.semantics.clone()).collect()
        }
        CcgTree::Node { rule, left, right, .. } => {
            let l = known(left, lex, composer);
            if l.is_empty() {
                return l;
            }
            let r = known(right, lex, composer);
            let mut out = Vec::new();
            'outer: for a in &l {
                for b in &r {
                    if let Some(m) = composer.combine(*rule, a, b) {
                        if !out.contains(&m) {
                            out.push(m);
                            if out.len() >= MEANING_CAP {
                                break 'outer;
                            }
                        }
                    }
                }
            }
            out
        }
    }
}

/// Pushes the target meaning down the tree: wherever one child's meaning is
/// known, the other child's follows by an inverse operator. Returns the
/// meanings not already in the lexicon, for leaves and internal spans.
pub fn extract_by_inverse(tree: &CcgTree, target: &Term, lex: &Lexicon, composer: &mut Composer) -> Vec<Extracted> {
    let mut out = Vec::new();
    descend(tree, vec![target.clone()], 0, lex, composer, &mut out);
    out.retain(|x| !lex.contains(&x.phrase, &x.category, &x.term));
    out
}

fn descend(
    t: &CcgTree,
    meanings: Vec<Term>,
    start: usize,
    lex: &Lexicon,
    composer: &mut Composer,
    out: &mut Vec<Extracted>,
) {
    let words = t.words();
    let span = (start, start + words.len());
    let phrase = words.join(" ").to_lowercase();
    for m in &meanings {
        let m = m.canonical();
        let x = Extracted {
            phrase: phrase.clone(),
            span,
            category: t.category().clone(),
            term: m,
        };
        if x.term.is_closed() && !out.contains(&x) {
            out.push(x);
        }
    }
    let CcgTree::Node { rule, left, right, .. } = t else {
        return;
    };
    let (fun, arg) = match rule {
        Rule::ForwardApp => (left.as_ref(), right.as_ref()),
        Rule::BackwardApp => (right.as_ref(), left.as_ref()),
    };
    let known_fun = known(fun, lex, composer);
    let known_arg = known(arg, lex, composer);
    let mut new_fun: Vec<Term> = Vec::new();
    let mut new_arg: Vec<Term> = Vec::new();
    for h in &meanings {
        for a in &known_arg {
            if let Ok(Some(f)) = inverse_l(h, a) {
                if !new_fun.contains(&f) && new_fun.len() < MEANING_CAP {
                    new_fun.push(f);
                }
            }
        }
        for f in &known_fun {
            if let Ok(Some(a)) = inverse_r(h, f) {
                if !new_arg.contains(&a) && new_arg.len() < MEANING_CAP {
                    new_arg.push(a);
                }
            }
        }
    }
    let (new_left, new_right) = match rule {
        Rule::ForwardApp => (new_fun, new_arg),
        Rule::BackwardApp => (new_arg, new_fun),
    };
    let split = start + left.words().len();
    if !new_left.is_empty() {
        descend(left, new_left, start, lex, composer, out);
    }
    if !new_right.is_empty() {
        descend(right, new_right, split, lex, composer, out);
    }
}

/// Sentence prepared for training: its parses and normalized gold meaning.
#[derive(Clone, Debug)]
pub struct TrainingExample {
    pub tokens: Vec<String>,
    pub trees: Vec<CcgTree>,
    pub gold: Term,
}

/// Examples whose logical form is not a well-formed term are dropped.
pub fn training_examples(data: &[Annotated]) -> Vec<TrainingExample> {
    data.iter()
        .filter_map(|d| {
            let gold = normalize(&parse_term(&d.example.lf).ok()?).ok()?.canonical();
            Some(TrainingExample {
                tokens: d.tokens.clone(),
                trees: d.parses.clone(),
                gold,
            })
        })
        .collect()
}

/// Σ log P(gold | sentence) over examples with at least one gold derivation.
pub fn log_likelihood(lex: &Lexicon, examples: &[TrainingExample], composer: &mut Composer) -> f64 {
    let mut ll = 0.0;
    for ex in examples {
        let cell = score_sentence(&ex.trees, lex, composer);
        if let (Some(g), Some(all)) = (cell.get(&ex.gold), total(&cell)) {
            ll += g.log_z - all.log_z;
        }
    }
    ll
}

/// Gradient of [`log_likelihood`] with respect to every entry weight.
pub fn gradient(lex: &Lexicon, examples: &[TrainingExample], composer: &mut Composer) -> Vec<f64> {
    let mut g = vec![0.0; lex.len()];
    for ex in examples {
        let cell = score_sentence(&ex.trees, lex, composer);
        if let (Some(gold), Some(all)) = (cell.get(&ex.gold), total(&cell)) {
            for (k, v) in &gold.expect {
                g[*k] += v;
            }
            for (k, v) in &all.expect {
                g[*k] -= v;
            }
        }
    }
    g
}

/// One stochastic-gradient pass in corpus order. Returns how many examples
/// were skipped for lacking a gold derivation.
pub fn update_params(model: &mut Model, examples: &[TrainingExample], composer: &mut Composer) -> usize {
    let mut skipped = 0;
    for ex in examples {
        let cell = score_sentence(&ex.trees, &model.lexicon, composer);
        let (Some(gold), Some(all)) = (cell.get(&ex.gold), total(&cell)) else {
            skipped += 1;
            continue;
        };
        let rate = model.config.rate(model.updates);
        let mut w = model.lexicon.weights();
        for (k, v) in &gold.expect {
            w[*k] += rate * v;
        }
        for (k, v) in &all.expect {
            w[*k] -= rate * v;
        }
        model.lexicon.set_weights(&w);
        model.updates += 1;
    }
    skipped
}

/// Best derivation of a sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Parse {
    pub term: Term,
    pub tree: usize,
    /// Entry chosen at each leaf.
    pub entries: Vec<usize>,
    /// Probability of this single derivation.
    pub probability: f64,
}

pub fn parse_best(trees: &[CcgTree], lex: &Lexicon, composer: &mut Composer) -> Option<Parse> {
    parse_best_where(trees, lex, composer, |_| true)
}

/// Highest-scoring derivation among those whose meaning passes `accept`.
pub fn parse_best_where(
    trees: &[CcgTree],
    lex: &Lexicon,
    composer: &mut Composer,
    accept: impl Fn(&Term) -> bool,
) -> Option<Parse> {
    let cell = score_sentence(trees, lex, composer);
    let all = total(&cell)?;
    let mut best: Option<(&Term, &crate::chart::Item)> = None;
    for (t, item) in &cell {
        if best.is_none_or(|(_, b)| item.best > b.best) && accept(t) {
            best = Some((t, item));
        }
    }
    let (term, item) = best?;
    Some(Parse {
        term: term.clone(),
        tree: item.best_tree,
        entries: item.best_entries.clone(),
        probability: (item.best - all.log_z).exp(),
    })
}

/// Runs the learning loop: per iteration, grow the lexicon sentence by
/// sentence and then take one gradient pass. The returned lexicon is closed
/// under generalization over its own words and those of `catlex`.
pub fn learn(
    data: &[Annotated],
    initial: Lexicon,
    catlex: &CategoryLexicon,
    config: TrainConfig,
    context: Context,
) -> Result<Model, LearnError> {
    config.validate()?;
    if data.is_empty() {
        return Ok(Model::new(initial, config, context));
    }
    let mut lexicon = Lexicon::with_punctuation();
    for e in initial.entries() {
        if context.admits(e) {
            lexicon.insert(e.clone());
        }
    }
    let mut model = Model::new(lexicon, config, context);
    let examples = training_examples(data);
    let mut composer = model.context.composer();
    for _ in 0..config.iterations {
        for ex in &examples {
            for tree in &ex.trees {
                grow_lexicon(&mut model, tree, &ex.gold, &mut composer);
            }
        }
        update_params(&mut model, &examples, &mut composer);
    }
    let extra: Vec<(String, Category)> = catlex
        .iter()
        .flat_map(|(w, cs)| cs.iter().map(move |c| (w.to_string(), c.clone())))
        .collect();
    model.lexicon = generalize_mass(&model.lexicon, &extra, &model.context);
    Ok(model)
}

fn grow_lexicon(model: &mut Model, tree: &CcgTree, gold: &Term, composer: &mut Composer) {
    let leaves: Vec<(String, Category)> = tree
        .leaves()
        .into_iter()
        .map(|(w, c)| (w.to_string(), c.clone()))
        .collect();
    for (w, c) in &leaves {
        if !model.lexicon.has(w, c) {
            for e in generalize_on_demand(&model.lexicon, w, c, &model.context) {
                model.lexicon.insert(e);
            }
        }
    }
    loop {
        for x in extract_by_inverse(tree, gold, &model.lexicon, composer) {
            let e = LexiconEntry::new(&x.phrase, x.category, x.term, Provenance::Inverse);
            // vacuous meanings come only from the fallback below
            if x.span.1 - x.span.0 == 1 && model.context.admits(&e) && !is_vacuous(&e.semantics) {
                model.lexicon.insert(e);
            }
        }
        if !model.config.trivial {
            return;
        }
        // last resort, one word at a time from the top of the tree so that
        // a vacuous word can open the way for extraction below it
        let Some((w, c)) = uncovered_by_depth(tree, &model.lexicon) else {
            return;
        };
        for e in trivial_entries(&model.lexicon, &w, &c) {
            model.lexicon.insert(e);
        }
    }
}

fn uncovered_by_depth(tree: &CcgTree, lex: &Lexicon) -> Option<(String, Category)> {
    let mut level = vec![tree];
    while !level.is_empty() {
        let mut next = Vec::new();
        for t in level {
            match t {
                CcgTree::Leaf { category, word } if !lex.has(word, category) => {
                    return Some((word.clone(), category.clone()))
                }
                CcgTree::Leaf { .. } => {}
                CcgTree::Node { left, right, .. } => {
                    next.push(left.as_ref());
                    next.push(right.as_ref());
                }
            }
        }
        level = next;
    }
    None
}

/// Sentence-level decoding with on-demand generalization for words the
/// lexicon does not cover.
pub struct Decoder<'a> {
    model: &'a Model,
    catlex: &'a CategoryLexicon,
    composer: Composer,
}

impl<'a> Decoder<'a> {
    pub fn new(model: &'a Model, catlex: &'a CategoryLexicon) -> Self {
        Decoder {
            model,
            catlex,
            composer: model.context.composer(),
        }
    }

    pub fn parse(&mut self, sentence: &str) -> Option<Parse> {
        let tokens = tokenize(sentence, self.catlex);
        let trees = cky_parse(&tokens, self.catlex).ok()?;
        self.parse_trees(&trees)
    }

    pub fn parse_trees(&mut self, trees: &[CcgTree]) -> Option<Parse> {
        let lex = &self.model.lexicon;
        let mut extended: Option<Lexicon> = None;
        for t in trees {
            for (w, c) in t.leaves() {
                let current = extended.as_ref().unwrap_or(lex);
                if current.has(w, c) {
                    continue;
                }
                let new = generalize_on_demand(current, w, c, &self.model.context);
                if !new.is_empty() {
                    let target = extended.get_or_insert_with(|| lex.clone());
                    for e in new {
                        target.insert(e);
                    }
                }
            }
        }
        let ctx = &self.model.context;
        parse_best_where(trees, extended.as_ref().unwrap_or(lex), &mut self.composer, |t| {
            ctx.well_formed(t)
        })
    }
}
