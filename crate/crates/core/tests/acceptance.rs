//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use semparse::ccg::{compose_semantics, load_derivation, CategoryLexicon};
use semparse::chart::Composer;
use semparse::corpus::{annotate, parse_corpus};
use semparse::eval::{closed_vocabulary, score, Mode, Setup, SrEquivalence};
use semparse::geo::GeoDatabase;
use semparse::induce::{initial_c, noun_candidates, InductionConfig};
use semparse::inverse::{verify, InverseProblem};
use semparse::learn::{extract_by_inverse, gradient, log_likelihood, training_examples, TrainConfig};
use semparse::lexicon::{Lexicon, Provenance};
use semparse::mrl::{common_template, Grammar};
use semparse::term::{beta_normalize, render_term, DEFAULT_STEP_LIMIT};
use semparse::{inverse_l, Term};

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn rivers_lexicon(with_in: bool) -> Lexicon {
    let mut lex = Lexicon::with_punctuation();
    let rows = [
        ("name", "S/NP", r"\x. answer(x)"),
        ("the", "NP/NP", r"\x. x"),
        ("rivers", "N", r"\x. river(x)"),
        ("arkansas", "N", "stateid('arkansas')"),
    ];
    for (w, c, m) in rows {
        lex.add(w, c.parse().unwrap(), t(m), Provenance::InitialC);
    }
    if with_in {
        lex.add(
            "in",
            r"(NP\N)/N".parse().unwrap(),
            t(r"\x. \y. y @ loc_2(x)"),
            Provenance::Inverse,
        );
    }
    lex
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let tree = load_derivation(RIVERS_TREE).map_err(|e| e.to_string())?;
    let target = t("answer(river(loc_2(stateid('arkansas'))))");
    let lex = rivers_lexicon(false);
    let got = extract_by_inverse(&tree, &target, &lex, &mut Composer::new(None));
    let want = t(r"\x. \y. y @ loc_2(x)");
    let found: Vec<String> = got
        .iter()
        .filter(|x| x.phrase == "in")
        .map(|x| render_term(&x.term))
        .collect();
    let hit = got.iter().any(|x| x.phrase == "in" && x.term.alpha_eq(&want));
    let took = start.elapsed();
    check(
        hit && found.len() == 1 && took < Duration::from_secs(1),
        format!("in = {} in {took:?}", found.join(" | ")),
        format!("in candidates {found:?} in {took:?}"),
    )
}

fn criterion_2() -> Outcome {
    let tree = load_derivation(RIVERS_TREE).map_err(|e| e.to_string())?;
    let comps = compose_semantics(&tree, &rivers_lexicon(true)).map_err(|e| e.to_string())?;
    if comps.len() != 1 {
        return Err(format!("{} compositions", comps.len()));
    }
    let c = &comps[0];
    let at = |span: (usize, usize)| {
        c.trace
            .iter()
            .find(|n| n.span == span)
            .map(|n| render_term(&n.term))
            .unwrap_or_default()
    };
    // rows of the derivation table, bottom-up, as (span, term)
    let rows: [&[((usize, usize), &str)]; 5] = [
        &[
            ((0, 1), r"\x. answer(x)"),
            ((1, 2), r"\x. x"),
            ((2, 3), r"\x. river(x)"),
            ((3, 4), r"\x. \y. y @ loc_2(x)"),
            ((4, 5), "stateid('arkansas')"),
        ],
        &[((3, 5), r"\y. y @ loc_2(stateid('arkansas'))")],
        &[((2, 5), "river(loc_2(stateid('arkansas')))")],
        &[((1, 5), "river(loc_2(stateid('arkansas')))")],
        &[((0, 5), "answer(river(loc_2(stateid('arkansas'))))")],
    ];
    let mut bad = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (span, want) in row.iter() {
            let got = at(*span);
            if got != *want {
                bad.push(format!("row {} span {span:?}: {got:?} != {want:?}", i + 1));
            }
        }
    }
    let root = render_term(&c.term);
    if root != "answer(river(loc_2(stateid('arkansas'))))" {
        bad.push(format!("root {root}"));
    }
    check(
        bad.is_empty(),
        format!("5 rows and root {root} verbatim"),
        bad.join("; "),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut r = rng(20_240_601);
    let (mut failures, mut solved) = (0, 0);
    for _ in 0..1000 {
        let (f, j) = random_pair(&mut r);
        let h = beta_normalize(&Term::app(f, j.clone()), DEFAULT_STEP_LIMIT).map_err(|e| e.to_string())?;
        if let Some(f2) = inverse_l(&h, &j).map_err(|e| e.to_string())? {
            solved += 1;
            let back = beta_normalize(&Term::app(f2, j), DEFAULT_STEP_LIMIT).map_err(|e| e.to_string())?;
            if !back.alpha_eq(&h) {
                failures += 1;
            }
        }
    }
    let suite = curated_suite();
    let mut hits = 0;
    for (dir, h, g) in &suite {
        let p = InverseProblem::new(h.clone(), g.clone(), *dir);
        if let Some(s) = p.solve().map_err(|e| e.to_string())? {
            if verify(&p, &s).map_err(|e| e.to_string())? {
                hits += 1;
            } else {
                failures += 1;
            }
        }
    }
    let rate = hits as f64 / suite.len() as f64;
    let took = start.elapsed();
    check(
        failures == 0 && rate >= 0.95 && took < Duration::from_secs(10),
        format!(
            "0 unsound of 1000 random ({solved} solved), curated non-null {hits}/{} in {took:?}",
            suite.len()
        ),
        format!("{failures} unsound, curated {hits}/{} , {took:?}", suite.len()),
    )
}

fn criterion_4() -> Outcome {
    let geo = Grammar::parse(GEO_CFG).map_err(|e| e.to_string())?;
    let a = geo
        .derive("answer(river(loc_2(stateid('arkansas'))))")
        .map_err(|e| e.to_string())?;
    let b = geo
        .derive("answer(lake(loc_2(countryid('usa'))))")
        .map_err(|e| e.to_string())?;
    let template = common_template(&a, &b).map(|x| x.render()).unwrap_or_default();

    let clang = Grammar::parse(CLANG_CFG).map_err(|e| e.to_string())?;
    let catlex = CategoryLexicon::parse(CLANG_CATLEX).map_err(|e| e.to_string())?;
    let data = annotate(&parse_corpus(CLANG_CORPUS).map_err(|e| e.to_string())?, &catlex, &clang)
        .map_err(|e| e.to_string())?;
    let induced = initial_c(&data).map_err(|e| e.to_string())?;
    let do_t = t(r"\x. \y. (x) (do y)");
    let def_t = t(r"\x. \y. definer x y");
    let has = |want: &Term| induced.entries().iter().any(|e| e.semantics.alpha_eq(want));
    let (do_ok, def_ok) = (has(&do_t), has(&def_t));
    check(
        template == r"\v. answer(v)" && do_ok && def_ok,
        format!("{template}; CLANG templates \\x. \\y. (x) (do y) and \\x. \\y. definer x y induced"),
        format!("template {template:?}, do {do_ok}, definer {def_ok}"),
    )
}

fn criterion_5() -> Outcome {
    let g = geo();
    let cfg = InductionConfig::default();
    let d = g
        .data
        .iter()
        .find(|d| d.example.sentence.starts_with("Give me the cities in Virginia"))
        .ok_or("missing Virginia sentence")?;
    let got: Vec<String> = noun_candidates("virginia", &d.tokens, &d.derivation, &cfg)
        .iter()
        .map(render_term)
        .collect();
    let want = ["'virginia'", "stateid('virginia')", "loc_2(stateid('virginia'))"];
    let virginia_ok = got == want;

    let corpus = "S: Name the rivers in Mississippi .\nL: answer(river(loc_2(stateid('mississippi'))))\n\n\
                  S: Name the states along Mississippi .\nL: answer(state(loc_2(riverid('mississippi'))))\n";
    let data = annotate(&parse_corpus(corpus).map_err(|e| e.to_string())?, &g.catlex, &g.grammar)
        .map_err(|e| e.to_string())?;
    let mut seen: Vec<String> = Vec::new();
    for d in &data {
        for c in noun_candidates("mississippi", &d.tokens, &d.derivation, &cfg) {
            seen.push(render_term(&c));
        }
    }
    let both = seen.iter().any(|s| s == "stateid('mississippi')") && seen.iter().any(|s| s == "riverid('mississippi')");
    check(
        virginia_ok && both,
        format!("Virginia -> {}; Mississippi -> stateid and riverid", got.join(", ")),
        format!("Virginia -> {got:?}; Mississippi -> {seen:?}"),
    )
}

fn criterion_6() -> Outcome {
    let g = geo();
    let corpus = "S: Name the rivers in Mississippi .\nL: answer(river(loc_2(stateid('mississippi'))))\n\n\
                  S: Name the states along Mississippi .\nL: answer(state(loc_2(riverid('mississippi'))))\n\n\
                  S: What is the population of Mississippi ?\nL: answer(population_1(stateid('mississippi')))\n";
    let data = annotate(&parse_corpus(corpus).map_err(|e| e.to_string())?, &g.catlex, &g.grammar)
        .map_err(|e| e.to_string())?;
    let mut lex = Lexicon::with_punctuation();
    let rows = [
        ("name", "S/NP", r"\x. answer(x)"),
        ("name", "S/NP", r"\x. answer(state(x))"),
        ("what", "S/NP", r"\x. answer(x)"),
        ("is", "NP/NP", r"\x. x"),
        ("the", "NP/NP", r"\x. x"),
        ("the", "NP/NP", r"\x. state(x)"),
        ("rivers", "N", r"\x. river(x)"),
        ("states", "N", r"\x. state(x)"),
        ("states", "N", r"\x. x"),
        ("population", "N", r"\x. population_1(x)"),
        ("in", r"(NP\N)/N", r"\x. \y. y @ loc_2(x)"),
        ("along", r"(NP\N)/N", r"\x. \y. y @ loc_2(x)"),
        ("of", r"(NP\N)/N", r"\x. \y. y @ x"),
        ("mississippi", "N", "stateid('mississippi')"),
        ("mississippi", "N", "riverid('mississippi')"),
    ];
    for (w, c, m) in rows {
        lex.add(w, c.parse().unwrap(), t(m), Provenance::InitialC);
    }
    let mut w: Vec<f64> = (0..lex.len())
        .map(|i| 0.1 + 0.37 * ((i * 7) % 5) as f64 - 0.3)
        .collect();
    lex.set_weights(&w);
    let examples = training_examples(&data);
    let mut composer = Composer::new(None);
    let ll = log_likelihood(&lex, &examples, &mut composer);
    let analytic = gradient(&lex, &examples, &mut composer);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..lex.len() {
        let keep = w[i];
        w[i] = keep + h;
        lex.set_weights(&w);
        let up = log_likelihood(&lex, &examples, &mut composer);
        w[i] = keep - h;
        lex.set_weights(&w);
        let down = log_likelihood(&lex, &examples, &mut composer);
        w[i] = keep;
        lex.set_weights(&w);
        worst = worst.max(((up - down) / (2.0 * h) - analytic[i]).abs());
    }
    let nonzero = analytic.iter().filter(|g| g.abs() > 1e-9).count();
    check(
        ll.is_finite() && worst <= 1e-6 && nonzero > 0,
        format!(
            "{} coordinates, max |analytic - numeric| = {worst:.2e}, log-likelihood {ll:.4}",
            lex.len()
        ),
        format!("max deviation {worst:.2e}, ll {ll}, nonzero {nonzero}"),
    )
}

/// Trains on the whole corpus, re-parses it and runs leave-one-out over
/// the closed-vocabulary subset. Returns the model file and the report.
fn end_to_end() -> Result<(String, String, f64, f64, Duration), String> {
    let start = Instant::now();
    let g = geo();
    let setup = Setup {
        grammar: &g.grammar,
        catlex: &g.catlex,
        induction: InductionConfig::default(),
        training: TrainConfig::default(),
        typed: true,
    };
    let db = GeoDatabase::toy();
    let eq = SrEquivalence::default();
    let model = setup.train(&g.data).map_err(|e| e.to_string())?;
    let train = score(&setup.predict(&model, &g.data), Mode::Execute, &db, &eq);
    let subset = closed_vocabulary(&g.data);
    let (folds, pooled) = setup
        .cross_validate(&g.data, &subset, subset.len(), 7, Mode::Execute, &db, &eq)
        .map_err(|e| e.to_string())?;
    let mut report = train.summary_row("train") + "\n";
    for (i, f) in folds.iter().enumerate() {
        report += &f.summary_row(&format!("loo{i}"));
        report.push('\n');
    }
    report += &pooled.summary_row("loo");
    report.push('\n');
    for v in &pooled.verdicts {
        report += &format!(
            "{}\t{}\t{}\n",
            v.gold,
            v.returned.as_deref().unwrap_or("null"),
            v.correct
        );
    }
    Ok((model.to_tsv(), report, train.recall, pooled.recall, start.elapsed()))
}

fn criterion_7(run: &Result<(String, String, f64, f64, Duration), String>) -> Outcome {
    let (_, _, train, loo, took) = run.as_ref().map_err(|e| e.clone())?;
    check(
        *train == 1.0 && *loo >= 0.9 && *took < Duration::from_secs(300),
        format!(
            "training re-parse {:.0}%, closed-vocabulary LOO recall {loo:.3}, {took:?}",
            train * 100.0
        ),
        format!("training re-parse {:.1}%, LOO recall {loo:.3}, {took:?}", train * 100.0),
    )
}

fn criterion_8(first: &Result<(String, String, f64, f64, Duration), String>) -> Outcome {
    let (m1, r1, ..) = first.as_ref().map_err(|e| e.clone())?;
    let (m2, r2, ..) = end_to_end()?;
    check(
        *m1 == m2 && *r1 == r2,
        format!(
            "model ({} bytes) and report ({} bytes) identical across runs",
            m1.len(),
            r1.len()
        ),
        format!("model equal {}, report equal {}", *m1 == m2, *r1 == r2),
    )
}

fn main() {
    let mut failed = 0;
    let mut line = |n: usize, what: &str, o: Outcome| match o {
        Ok(msg) => println!("criterion {n} PASS {what}: {msg}"),
        Err(msg) => {
            failed += 1;
            println!("criterion {n} FAIL {what}: {msg}");
        }
    };
    line(1, "worked-example extraction", criterion_1());
    line(2, "derivation replay", criterion_2());
    line(3, "inverse soundness", criterion_3());
    line(4, "common templates", criterion_4());
    line(5, "noun induction", criterion_5());
    line(6, "gradient check", criterion_6());
    let run = end_to_end();
    line(7, "end-to-end desk run", criterion_7(&run));
    line(8, "determinism", criterion_8(&run));
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
