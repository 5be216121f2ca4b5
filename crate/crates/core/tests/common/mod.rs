//! Shared fixtures and random generators for the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semparse::ccg::CategoryLexicon;
use semparse::corpus::{annotate, parse_corpus, Annotated};
use semparse::inverse::Direction;
use semparse::mrl::{Grammar, Production, Symbol};
use semparse::{parse_term, Term};

pub const GEO_CFG: &str = include_str!("../../data/geo.cfg");
pub const GEO_CATLEX: &str = include_str!("../../data/geo.catlex");
pub const GEO_CORPUS: &str = include_str!("../../data/geo.corpus");
pub const CLANG_CFG: &str = include_str!("../../data/clang.cfg");
pub const CLANG_CATLEX: &str = include_str!("../../data/clang.catlex");
pub const CLANG_CORPUS: &str = include_str!("../../data/clang.corpus");
pub const RIVERS_TREE: &str = include_str!("../../data/rivers.ccg");

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn t(s: &str) -> Term {
    parse_term(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

pub struct Geo {
    pub grammar: Grammar,
    pub catlex: CategoryLexicon,
    pub data: Vec<Annotated>,
}

pub fn geo() -> Geo {
    let grammar = Grammar::parse(GEO_CFG).unwrap();
    let catlex = CategoryLexicon::parse(GEO_CATLEX).unwrap();
    let data = annotate(&parse_corpus(GEO_CORPUS).unwrap(), &catlex, &grammar).unwrap();
    Geo { grammar, catlex, data }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const UNARY: [&str; 8] = [
    "answer",
    "river",
    "state",
    "loc_2",
    "stateid",
    "next_to_2",
    "population_1",
    "city",
];
const LITERALS: [&str; 5] = ["'arkansas'", "'texas'", "'new york'", "'ohio'", "all"];

/// Ground funql-like term of depth at most `depth`.
pub fn ground<R: Rng>(r: &mut R, depth: usize) -> Term {
    if depth == 0 || r.gen_bool(0.25) {
        return Term::constant(*LITERALS.choose(r).unwrap());
    }
    if r.gen_bool(0.15) {
        return Term::call("exclude", [ground(r, depth - 1), ground(r, depth - 1)]);
    }
    Term::call(*UNARY.choose(r).unwrap(), [ground(r, depth - 1)])
}

/// Replaces random subterm positions of a ground term by `hole`, at least
/// once.
fn punch<R: Rng>(r: &mut R, t: &Term, hole: &Term, forced: bool) -> Term {
    if r.gen_bool(0.3) || (forced && matches!(t, Term::Const(_))) {
        return hole.clone();
    }
    match t {
        Term::App(f, a) => {
            let a2 = punch(r, a, hole, forced);
            let placed = forced && a2 == **a;
            let f2 = if matches!(**f, Term::Const(_)) {
                (**f).clone()
            } else {
                punch(r, f, hole, placed)
            };
            if placed && f2 == **f {
                Term::app(f2, hole.clone())
            } else {
                Term::app(f2, a2)
            }
        }
        _ => t.clone(),
    }
}

/// A closed (F, J) pair: J is ground or a one-place abstraction; F abstracts
/// over J and uses it (applied to an argument when J is a function).
pub fn random_pair<R: Rng>(r: &mut R) -> (Term, Term) {
    let body = ground(r, 4);
    if r.gen_bool(0.5) {
        let j = ground(r, 2);
        let f = Term::lam("f", punch(r, &body, &Term::var("f"), true));
        (f, j)
    } else {
        let inner = ground(r, 2);
        let jb = punch(r, &inner, &Term::var("y"), true);
        let j = Term::lam("y", jb);
        let use_site = Term::app(Term::var("f"), ground(r, 1));
        let f = Term::lam("f", punch(r, &body, &use_site, true));
        (f, j)
    }
}

/// A random sentence of a grammar, expanding at most `depth` levels before
/// falling back to the shortest completions.
pub fn random_sentence<R: Rng>(g: &Grammar, r: &mut R, depth: usize) -> String {
    let witnesses = g.witnesses();
    fn expand<R: Rng>(
        g: &Grammar,
        nt: &str,
        r: &mut R,
        depth: usize,
        w: &std::collections::BTreeMap<String, String>,
        out: &mut String,
    ) {
        if depth == 0 {
            out.push_str(&w[nt]);
            return;
        }
        let options: Vec<&Production> = g.productions().iter().filter(|p| p.lhs == nt).collect();
        let p = options.choose(r).unwrap();
        for s in &p.rhs {
            match s {
                Symbol::Terminal(x) => out.push_str(x),
                Symbol::NonTerminal(n) => expand(g, n, r, depth - 1, w, out),
            }
        }
    }
    let mut out = String::new();
    expand(g, g.start(), r, depth, &witnesses, &mut out);
    out
}

/// Twenty inverse problems with known solutions, covering delegation,
/// subterm abstraction and the schematic case for both operators.
pub fn curated_suite() -> Vec<(Direction, Term, Term)> {
    use Direction::{Left, Right};
    let ark = "stateid('arkansas')";
    let h = format!("answer(river(loc_2({ark})))");
    let none = "exclude(state(all), next_to_2(state(all)))";
    vec![
        // known function applied to the unknown
        (Right, t("answer(stateid('texas'))"), t(r"\v. v @ stateid('texas')")),
        (Right, t("river(loc_2(stateid('ohio')))"), t(r"\v. v @ 'ohio'")),
        (Right, t("state(loc_2(riverid('red')))"), t(r"\v. v @ riverid('red')")),
        (Right, t(&h), t(r"\x. answer(x)")),
        (Right, t(&format!("river(loc_2({ark}))")), t(r"\x. river(x)")),
        (Right, t(none), t(r"\x. exclude(x, next_to_2(x))")),
        (
            Right,
            t("population_1(stateid('utah'))"),
            t(r"\x. population_1(stateid(x))"),
        ),
        (Right, t(&h), t(r"\v. v")),
        (Right, t(&h), t(&format!(r"\f. answer(f @ {ark})"))),
        (Right, t(none), t(r"\f. exclude(state(all), f @ all)")),
        // unknown function applied to the known argument
        (Left, t(&format!(r"\y. y @ loc_2({ark})")), t(ark)),
        (Left, t(&h), t(&format!("river(loc_2({ark}))"))),
        (Left, t(&h), t(&h)),
        (Left, t("river(loc_2(stateid('ohio')))"), t("'ohio'")),
        (Left, t(none), t("state(all)")),
        (Left, t(&format!("river(loc_2({ark}))")), t(r"\x. river(x)")),
        (Left, t(r"\y. y @ loc_2(stateid('ohio'))"), t(r"\x. \y. y @ loc_2(x)")),
        (Left, t(r"\x. x"), t(r"\x. x")),
        (Left, t("population_1(cityid('austin'))"), t("cityid('austin')")),
        (
            Left,
            t("answer(population_1(stateid('maine')))"),
            t(r"\x. population_1(x)"),
        ),
    ]
}
