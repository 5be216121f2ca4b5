//! Randomized invariants.

mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;

use semparse::ccg::{cky_parse, tokenize, CategoryLexicon, CcgTree};
use semparse::chart::{score_sentence, total, Composer};
use semparse::eval::{equivalent_sr, kfold, score, Mode, SrEquivalence};
use semparse::geo::GeoDatabase;
use semparse::inverse::{inverse_l, inverse_r};
use semparse::learn::parse_best;
use semparse::lexicon::{Lexicon, Provenance};
use semparse::mrl::{common_template, Grammar};
use semparse::term::{alpha_beta_equiv, beta_normalize, normalize, replace, DEFAULT_STEP_LIMIT};
use semparse::{parse_term, render_term, Term};

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

fn pair(seed: u64) -> (Term, Term) {
    random_pair(&mut rng(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn render_then_parse_is_identity(seed in any::<u64>()) {
        let (f, j) = pair(seed);
        for t in [f, j] {
            let back = parse_term(&render_term(&t)).unwrap();
            prop_assert!(back.alpha_eq(&t), "{}", render_term(&t));
        }
    }

    #[test]
    fn normalization_is_idempotent(seed in any::<u64>()) {
        let (f, j) = pair(seed);
        let once = normalize(&Term::app(f, j)).unwrap();
        prop_assert!(normalize(&once).unwrap().alpha_eq(&once));
    }

    #[test]
    fn inverse_answers_recompose(seed in any::<u64>()) {
        let (f, j) = pair(seed);
        let h = beta_normalize(&Term::app(f.clone(), j.clone()), DEFAULT_STEP_LIMIT).unwrap();
        if let Some(f2) = inverse_l(&h, &j).unwrap() {
            let back = beta_normalize(&Term::app(f2, j.clone()), DEFAULT_STEP_LIMIT).unwrap();
            prop_assert!(back.alpha_eq(&h));
        }
        // the same problem seen from the other side: F is known, J is sought
        if let Some(j2) = inverse_r(&h, &f).unwrap() {
            let back = beta_normalize(&Term::app(f, j2), DEFAULT_STEP_LIMIT).unwrap();
            prop_assert!(back.alpha_eq(&h));
        }
    }

    #[test]
    fn inverse_covers_generated_pairs(seed in any::<u64>()) {
        let (f, j) = pair(seed);
        let h = beta_normalize(&Term::app(f, j.clone()), DEFAULT_STEP_LIMIT).unwrap();
        prop_assert!(inverse_l(&h, &j).unwrap().is_some(), "{} / {}", render_term(&h), render_term(&j));
    }

    #[test]
    fn replace_with_fresh_variables_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = ground(&mut r, 4);
        let a = ground(&mut r, 1);
        let v = Term::var("fresh_v");
        let there = replace(&h, std::slice::from_ref(&a), std::slice::from_ref(&v)).unwrap();
        let back = replace(&there, &[v], &[a]).unwrap();
        prop_assert!(back.alpha_eq(&h));
    }

    #[test]
    fn alpha_beta_equivalence_is_an_equivalence(seed in any::<u64>()) {
        let (f, j) = pair(seed);
        let a = Term::app(f, j);
        let b = normalize(&a).unwrap();
        let c = Term::app(Term::lam("q", Term::var("q")), b.clone());
        let eq = |x: &Term, y: &Term| alpha_beta_equiv(x, y, DEFAULT_STEP_LIMIT).unwrap();
        prop_assert!(eq(&a, &a));
        prop_assert_eq!(eq(&a, &b), eq(&b, &a));
        prop_assert!(eq(&a, &b) && eq(&b, &c) && eq(&a, &c));
    }

    #[test]
    fn derivations_yield_their_input(seed in any::<u64>()) {
        let g = Grammar::parse(GEO_CFG).unwrap();
        let lf = random_sentence(&g, &mut rng(seed), 5);
        match g.derive(&lf) {
            Ok(tree) => prop_assert_eq!(squeeze(&tree.yield_string()), squeeze(&lf)),
            Err(e) => prop_assert!(matches!(e, semparse::mrl::MrlError::AmbiguousDerivation(_)), "{lf}: {e}"),
        }
    }

    #[test]
    fn common_template_is_symmetric(a in any::<u64>(), b in any::<u64>()) {
        let g = Grammar::parse(GEO_CFG).unwrap();
        let (x, y) = (random_sentence(&g, &mut rng(a), 5), random_sentence(&g, &mut rng(b), 5));
        if let (Ok(tx), Ok(ty)) = (g.derive(&x), g.derive(&y)) {
            let one = common_template(&tx, &ty).map(|t| t.render());
            let two = common_template(&ty, &tx).map(|t| t.render());
            prop_assert_eq!(one.clone(), two);
            // every sentence shares at least the start production
            prop_assert!(one.is_some());
        }
    }

    #[test]
    fn sr_equivalence_is_an_equivalence(seed in any::<u64>()) {
        let mut r = rng(seed);
        let comm = ["exclude"];
        let a = ground(&mut r, 4);
        let b = swap_exclude(&a);
        let c = swap_exclude(&b);
        prop_assert!(equivalent_sr(&a, &a, &comm));
        prop_assert!(equivalent_sr(&a, &b, &comm) && equivalent_sr(&b, &a, &comm));
        prop_assert!(equivalent_sr(&b, &c, &comm) && equivalent_sr(&a, &c, &comm));
    }

    #[test]
    fn folds_partition_the_corpus(n in 2usize..60, k in 2usize..12, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = kfold(n, k, seed).unwrap();
        let mut tested: Vec<usize> = folds.iter().flat_map(|(_, t)| t.clone()).collect();
        tested.sort_unstable();
        prop_assert_eq!(tested, (0..n).collect::<Vec<_>>());
        for (train, test) in &folds {
            prop_assert_eq!(train.len() + test.len(), n);
            prop_assert!(test.len() == n / k || test.len() == n / k + 1);
        }
        prop_assert_eq!(folds, kfold(n, k, seed).unwrap());
    }

    #[test]
    fn perfect_returns_score_one(seed in any::<u64>(), n in 1usize..20) {
        let mut r = rng(seed);
        let results: Vec<(Term, Option<Term>)> = (0..n).map(|_| {
            let t = ground(&mut r, 3);
            (t.clone(), Some(t))
        }).collect();
        let rep = score(&results, Mode::Match, &GeoDatabase::toy(), &SrEquivalence::default());
        prop_assert_eq!((rep.precision, rep.recall, rep.f_measure), (1.0, 1.0, 1.0));
    }

    #[test]
    fn category_lexicon_order_does_not_change_parses(seed in any::<u64>()) {
        let mut lines: Vec<&str> = GEO_CATLEX.lines().collect();
        let base = CategoryLexicon::parse(GEO_CATLEX).unwrap();
        lines.shuffle(&mut rng(seed));
        let shuffled = CategoryLexicon::parse(&lines.join("\n")).unwrap();
        for s in ["Name the rivers in Arkansas .", "Name all the lakes of US .", "How high is Mount Hood ?"] {
            let a = cky_parse(&tokenize(s, &base), &base).unwrap();
            let b = cky_parse(&tokenize(s, &shuffled), &shuffled).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}

fn swap_exclude(t: &Term) -> Term {
    let (head, args) = t.spine();
    let args: Vec<Term> = args.into_iter().map(swap_exclude).collect();
    match head {
        Term::Const(c) if c == "exclude" && args.len() == 2 => {
            Term::call("exclude", [args[1].clone(), args[0].clone()])
        }
        Term::Const(c) => Term::call(c.clone(), args),
        _ => t.clone(),
    }
}

fn ambiguous_setup(weights: &[f64]) -> (Lexicon, Vec<CcgTree>) {
    let catlex = CategoryLexicon::parse("name\tS/NP\nthe\tNP/NP\nrivers\tN\nin\t(NP\\N)/N\nmississippi\tN\n").unwrap();
    let mut lex = Lexicon::with_punctuation();
    for (w, c, m) in [
        ("name", "S/NP", r"\x. answer(x)"),
        ("the", "NP/NP", r"\x. x"),
        ("the", "NP/NP", r"\x. \y. y @ x"),
        ("rivers", "N", r"\x. river(x)"),
        ("in", r"(NP\N)/N", r"\x. \y. y @ loc_2(x)"),
        ("in", r"(NP\N)/N", r"\x. \y. y @ x"),
        ("mississippi", "N", "stateid('mississippi')"),
        ("mississippi", "N", "riverid('mississippi')"),
    ] {
        lex.add(w, c.parse().unwrap(), t(m), Provenance::InitialC);
    }
    let mut w = lex.weights();
    for (slot, v) in w.iter_mut().zip(weights) {
        *slot = *v;
    }
    lex.set_weights(&w);
    let trees = cky_parse(&tokenize("Name the rivers in Mississippi .", &catlex), &catlex).unwrap();
    (lex, trees)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn meaning_probabilities_sum_to_one(ws in proptest::collection::vec(-3.0f64..3.0, 11)) {
        let (lex, trees) = ambiguous_setup(&ws);
        let cell = score_sentence(&trees, &lex, &mut Composer::new(None));
        let all = total(&cell).unwrap();
        let mass: f64 = cell.values().map(|i| (i.log_z - all.log_z).exp()).sum();
        prop_assert!((mass - 1.0).abs() < 1e-9);
        for (id, e) in &all.expect {
            prop_assert!(*e >= -1e-12 && *e <= 1.0 + 1e-9, "entry {id} expected {e}");
        }
    }

    #[test]
    fn decoding_ignores_a_uniform_weight_shift(ws in proptest::collection::vec(-3.0f64..3.0, 11), shift in -5.0f64..5.0) {
        let (lex, trees) = ambiguous_setup(&ws);
        let moved: Vec<f64> = lex.weights().iter().map(|w| w + shift).collect();
        let mut lex2 = lex.clone();
        lex2.set_weights(&moved);
        let a = parse_best(&trees, &lex, &mut Composer::new(None)).unwrap();
        let b = parse_best(&trees, &lex2, &mut Composer::new(None)).unwrap();
        prop_assert_eq!(&a.term, &b.term);
        prop_assert!((a.probability - b.probability).abs() < 1e-9);
    }

    #[test]
    fn lexicon_only_grows(seeds in proptest::collection::vec(any::<u64>(), 1..30)) {
        let mut lex = Lexicon::new();
        let mut seen: Vec<(String, Term)> = Vec::new();
        for s in seeds {
            let mut r = rng(s);
            let word = ["a", "b", "c"].choose(&mut r).unwrap().to_string();
            let m = ground(&mut r, 2);
            let before = lex.len();
            let added = lex.add(&word, "N".parse().unwrap(), m.clone(), Provenance::Inverse).is_some();
            prop_assert_eq!(lex.len(), before + usize::from(added));
            seen.push((word, m));
            for (w, m) in &seen {
                prop_assert!(lex.contains(w, &"N".parse().unwrap(), m));
            }
        }
    }
}
