//! Semantic parsing by composing per-word λ-calculus meanings along a
//! combinatory categorial grammar derivation, with inverse-λ lexicon
//! learning, automatic initial-lexicon induction and a log-linear model over
//! derivations.

pub mod ccg;
pub mod chart;
pub mod corpus;
pub mod eval;
pub mod geo;
pub mod induce;
pub mod inverse;
pub mod learn;
pub mod lexicon;
pub mod mrl;
pub mod term;
pub mod types;

pub use inverse::{inverse_l, inverse_r, Direction, InverseProblem, InverseSolution};
pub use term::{parse_term, render_term, LambdaError, Term};
pub use types::{infer_type, Signature, TermType, TypeError};
