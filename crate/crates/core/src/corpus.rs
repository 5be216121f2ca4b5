//! Sentence / logical-form corpora.
//!
//! File format: blocks of `S: <sentence>` followed by `L: <logical form>`;
//! blank lines and `#` comments are ignored.

use thiserror::Error;

use crate::ccg::{cky_parse, tokenize, CategoryLexicon, CcgError, CcgTree};
use crate::mrl::{DerivationTree, Grammar, MrlError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub sentence: String,
    pub lf: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus line {0}: {1}")]
    Format(usize, String),
    #[error("example {index} ({sentence:?}): {source}")]
    Parse {
        index: usize,
        sentence: String,
        source: CcgError,
    },
    #[error("example {index} ({lf:?}): {source}")]
    Derive { index: usize, lf: String, source: MrlError },
}

pub fn parse_corpus(text: &str) -> Result<Vec<Example>, CorpusError> {
    let mut out = Vec::new();
    let mut pending: Option<String> = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(s) = line.strip_prefix("S:") {
            if pending.is_some() {
                return Err(CorpusError::Format(n + 1, "sentence without logical form".into()));
            }
            pending = Some(s.trim().to_string());
        } else if let Some(l) = line.strip_prefix("L:") {
            let sentence = pending
                .take()
                .ok_or_else(|| CorpusError::Format(n + 1, "logical form without sentence".into()))?;
            out.push(Example {
                sentence,
                lf: l.trim().to_string(),
            });
        } else {
            return Err(CorpusError::Format(n + 1, format!("unexpected line {line:?}")));
        }
    }
    if pending.is_some() {
        return Err(CorpusError::Format(
            text.lines().count(),
            "sentence without logical form".into(),
        ));
    }
    Ok(out)
}

pub fn render_corpus(examples: &[Example]) -> String {
    examples
        .iter()
        .map(|e| format!("S: {}\nL: {}\n", e.sentence, e.lf))
        .collect::<Vec<_>>()
        .join("\n")
}

/// An example together with its syntactic parses and target derivation.
#[derive(Clone, Debug)]
pub struct Annotated {
    pub example: Example,
    pub tokens: Vec<String>,
    pub parses: Vec<CcgTree>,
    pub derivation: DerivationTree,
}

pub fn annotate(
    examples: &[Example],
    catlex: &CategoryLexicon,
    grammar: &Grammar,
) -> Result<Vec<Annotated>, CorpusError> {
    examples
        .iter()
        .enumerate()
        .map(|(index, ex)| {
            let tokens = tokenize(&ex.sentence, catlex);
            let parses = cky_parse(&tokens, catlex).map_err(|source| CorpusError::Parse {
                index,
                sentence: ex.sentence.clone(),
                source,
            })?;
            let derivation = grammar.derive(&ex.lf).map_err(|source| CorpusError::Derive {
                index,
                lf: ex.lf.clone(),
                source,
            })?;
            Ok(Annotated {
                example: ex.clone(),
                tokens,
                parses,
                derivation,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text =
            "# demo\nS: Name the rivers in Arkansas .\nL: answer(river(loc_2(stateid('arkansas'))))\n\nS: a\nL: b\n";
        let ex = parse_corpus(text).unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(parse_corpus(&render_corpus(&ex)).unwrap(), ex);
    }

    #[test]
    fn format_errors() {
        assert!(parse_corpus("S: a\nS: b\nL: c\n").is_err());
        assert!(parse_corpus("L: c\n").is_err());
        assert!(parse_corpus("S: a\n").is_err());
        assert!(parse_corpus("x\n").is_err());
    }
}
