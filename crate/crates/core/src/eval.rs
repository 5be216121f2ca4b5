//! Scoring parsed meanings against gold ones, k-fold splits and the
//! induce → train → evaluate pipeline.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ccg::CategoryLexicon;
use crate::corpus::Annotated;
use crate::geo::{eval_funql, GeoDatabase};
use crate::induce::{initial_c, initial_n, InduceError, InductionConfig};
use crate::learn::{learn, Context, Decoder, LearnError, Model, TrainConfig};
use crate::lexicon::Lexicon;
use crate::mrl::Grammar;
use crate::term::{normalize, parse_term, render_term, Term};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k must satisfy 2 <= k <= {1}, got {0}")]
    BadK(usize, usize),
    #[error(transparent)]
    Induce(#[from] InduceError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// How a returned meaning is judged correct.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Same answer set on the geography database.
    Execute,
    /// Same term up to argument order at commutative heads.
    Match,
}

/// Structural equality modulo commutative argument order and head aliases.
#[derive(Clone, Debug, Default)]
pub struct SrEquivalence {
    pub commutative: BTreeSet<String>,
    /// Heads mapped to a representative before comparison.
    pub aliases: BTreeMap<String, String>,
}

impl SrEquivalence {
    pub fn new(commutative: &[&str]) -> Self {
        SrEquivalence {
            commutative: commutative.iter().map(|s| s.to_string()).collect(),
            aliases: BTreeMap::new(),
        }
    }

    /// Treats the two rule-definition heads of the coaching language alike.
    pub fn with_clang_aliases(mut self) -> Self {
        self.aliases.insert("definec".into(), "definer".into());
        self
    }

    fn canon(&self, t: &Term) -> Term {
        match t {
            Term::Const(c) => Term::Const(self.aliases.get(c).cloned().unwrap_or_else(|| c.clone())),
            Term::Var(_) => t.clone(),
            Term::Lam(x, b) => Term::Lam(x.clone(), Box::new(self.canon(b))),
            Term::App(..) => {
                let (head, args) = t.spine();
                let head = self.canon(head);
                let mut args: Vec<Term> = args.into_iter().map(|a| self.canon(a)).collect();
                if let Term::Const(c) = &head {
                    if self.commutative.contains(c) {
                        args.sort();
                    }
                }
                args.into_iter().fold(head, Term::app)
            }
        }
    }

    pub fn equivalent(&self, a: &Term, b: &Term) -> bool {
        self.canon(&a.canonical()).canonical() == self.canon(&b.canonical()).canonical()
    }
}

pub fn equivalent_sr(a: &Term, b: &Term, commutative: &[&str]) -> bool {
    SrEquivalence::new(commutative).equivalent(a, b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub gold: String,
    pub returned: Option<String>,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub total: usize,
    pub returned: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub verdicts: Vec<Verdict>,
}

impl EvalReport {
    pub fn from_verdicts(verdicts: Vec<Verdict>) -> Self {
        let total = verdicts.len();
        let returned = verdicts.iter().filter(|v| v.returned.is_some()).count();
        let correct = verdicts.iter().filter(|v| v.correct).count();
        let precision = if returned > 0 {
            correct as f64 / returned as f64
        } else {
            0.0
        };
        let recall = if total > 0 { correct as f64 / total as f64 } else { 0.0 };
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            total,
            returned,
            correct,
            precision,
            recall,
            f_measure,
            verdicts,
        }
    }

    pub fn returned_rate(&self) -> f64 {
        if self.total > 0 {
            self.returned as f64 / self.total as f64
        } else {
            0.0
        }
    }

    pub fn summary_row(&self, label: &str) -> String {
        format!(
            "{label}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}\t{}",
            self.precision, self.recall, self.f_measure, self.correct, self.returned, self.total
        )
    }
}

/// Judges each (gold, returned) pair.
pub fn score(results: &[(Term, Option<Term>)], mode: Mode, db: &GeoDatabase, eq: &SrEquivalence) -> EvalReport {
    let verdicts = results
        .iter()
        .map(|(gold, got)| {
            let correct = got.as_ref().is_some_and(|g| match mode {
                Mode::Match => eq.equivalent(gold, g),
                Mode::Execute => match (eval_funql(gold, db), eval_funql(g, db)) {
                    (Ok(a), Ok(b)) => a == b,
                    (Err(_), _) => eq.equivalent(gold, g),
                    _ => false,
                },
            });
            Verdict {
                gold: render_term(gold),
                returned: got.as_ref().map(render_term),
                correct,
            }
        })
        .collect();
    EvalReport::from_verdicts(verdicts)
}

/// Train and test indices of one fold.
pub type Split = (Vec<usize>, Vec<usize>);

/// Seeded shuffle cut into `k` contiguous near-equal folds; index lists are
/// each in ascending order.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Split>, EvalError> {
    if k < 2 || k > n {
        return Err(EvalError::BadK(k, n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        let mut test: Vec<usize> = idx[start..start + size].to_vec();
        test.sort_unstable();
        let mut train: Vec<usize> = idx[..start].iter().chain(&idx[start + size..]).copied().collect();
        train.sort_unstable();
        folds.push((train, test));
        start += size;
    }
    Ok(folds)
}

/// Indices of examples every token of which also occurs in some other
/// example.
pub fn closed_vocabulary(data: &[Annotated]) -> Vec<usize> {
    let vocab: Vec<BTreeSet<String>> = data
        .iter()
        .map(|d| d.tokens.iter().map(|t| t.to_lowercase()).collect())
        .collect();
    (0..data.len())
        .filter(|&i| {
            vocab[i]
                .iter()
                .all(|w| vocab.iter().enumerate().any(|(j, v)| j != i && v.contains(w)))
        })
        .collect()
}

/// Everything needed to run the pipeline on one target language.
pub struct Setup<'a> {
    pub grammar: &'a Grammar,
    pub catlex: &'a CategoryLexicon,
    pub induction: InductionConfig,
    pub training: TrainConfig,
    /// Reject ill-typed compositions using the grammar's signature.
    pub typed: bool,
}

impl Setup<'_> {
    pub fn context(&self) -> Context {
        let sig = self.typed.then(|| self.grammar.signature());
        let mut ctx = Context::new(sig, self.grammar.constants());
        ctx.accuracy = self.induction.accuracy;
        ctx.root_constants = self.grammar.root_constants();
        ctx.language = self.grammar.renders_faithfully().then(|| self.grammar.clone());
        ctx
    }

    /// Automatically induced initial lexicon.
    pub fn induce(&self, data: &[Annotated]) -> Result<Lexicon, EvalError> {
        let mut lex = Lexicon::with_punctuation();
        for e in initial_c(data)?.entries() {
            lex.insert(e.clone());
        }
        for e in initial_n(data, &self.induction)?.entries() {
            lex.insert(e.clone());
        }
        Ok(lex)
    }

    pub fn train(&self, data: &[Annotated]) -> Result<Model, EvalError> {
        let lex = self.induce(data)?;
        Ok(learn(data, lex, self.catlex, self.training, self.context())?)
    }

    pub fn predict(&self, model: &Model, data: &[Annotated]) -> Vec<(Term, Option<Term>)> {
        let mut dec = Decoder::new(model, self.catlex);
        data.iter()
            .filter_map(|d| {
                let gold = normalize(&parse_term(&d.example.lf).ok()?).ok()?;
                Some((gold, dec.parse_trees(&d.parses).map(|p| p.term)))
            })
            .collect()
    }

    /// Per-fold reports and the pooled report, folds taken over `subset`
    /// of `data` (test sets drawn from it, training on everything else).
    #[allow(clippy::too_many_arguments)]
    pub fn cross_validate(
        &self,
        data: &[Annotated],
        subset: &[usize],
        k: usize,
        seed: u64,
        mode: Mode,
        db: &GeoDatabase,
        eq: &SrEquivalence,
    ) -> Result<(Vec<EvalReport>, EvalReport), EvalError> {
        let folds = kfold(subset.len(), k, seed)?;
        let mut reports = Vec::new();
        let mut pooled = Vec::new();
        for (_, test) in folds {
            let test_ids: BTreeSet<usize> = test.iter().map(|&i| subset[i]).collect();
            let train: Vec<Annotated> = (0..data.len())
                .filter(|i| !test_ids.contains(i))
                .map(|i| data[i].clone())
                .collect();
            let test: Vec<Annotated> = test_ids.iter().map(|&i| data[i].clone()).collect();
            let model = self.train(&train)?;
            let report = score(&self.predict(&model, &test), mode, db, eq);
            pooled.extend(report.verdicts.iter().cloned());
            reports.push(report);
        }
        Ok((reports, EvalReport::from_verdicts(pooled)))
    }
}
