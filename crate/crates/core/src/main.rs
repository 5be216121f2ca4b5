use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use semparse::ccg::CategoryLexicon;
use semparse::corpus::{annotate, parse_corpus, Annotated};
use semparse::eval::{closed_vocabulary, score, EvalReport, Mode, Setup, SrEquivalence};
use semparse::geo::GeoDatabase;
use semparse::induce::InductionConfig;
use semparse::learn::{learn, Decoder, Model, TrainConfig};
use semparse::lexicon::Lexicon;
use semparse::mrl::Grammar;
use semparse::{inverse_l, inverse_r, parse_term, render_term};

#[derive(Parser)]
#[command(
    name = "semparse",
    about = "Learn and run semantic parsers from sentence/meaning pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dir {
    Left,
    Right,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMode {
    Execute,
    Match,
}

#[derive(clap::Args)]
struct Inputs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    cfg: PathBuf,
    #[arg(long)]
    catlex: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the unknown operand of an application.
    Inverse {
        /// Side of the unknown operand.
        #[arg(long, value_enum)]
        dir: Dir,
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        known: PathBuf,
    },
    /// Build the initial lexicon from a corpus.
    Induce {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = 2)]
        maxlevel: usize,
        #[arg(long, default_value_t = 0.7)]
        accuracy: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Grow the lexicon and estimate weights.
    Train {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long, default_value_t = 0.1)]
        alpha0: f64,
        #[arg(long, default_value_t = 0.001)]
        decay: f64,
        /// Disable the vacuous last-resort meanings.
        #[arg(long)]
        no_trivial: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Score a model, or cross-validate its training schedule with --k.
    Eval {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        model: PathBuf,
        /// Folds; each fold is trained afresh with the model's schedule.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = EvalMode::Execute)]
        mode: EvalMode,
        /// Treat definec and definer as the same head.
        #[arg(long)]
        clang_i: bool,
        /// Draw test folds only from sentences whose words all occur elsewhere.
        #[arg(long)]
        closed: bool,
    },
    /// Print the best meaning of a sentence.
    Parse {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        cfg: PathBuf,
        #[arg(long)]
        catlex: PathBuf,
        sentence: String,
    },
}

#[derive(Debug, Error)]
enum CliError {
    /// Bad inputs or settings; exit code 2.
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
}

fn config<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
}

struct Loaded {
    grammar: Grammar,
    catlex: CategoryLexicon,
    data: Vec<Annotated>,
}

fn load(inputs: &Inputs) -> Result<Loaded, CliError> {
    let grammar = Grammar::parse(&read(&inputs.cfg)?).map_err(config)?;
    let catlex = CategoryLexicon::parse(&read(&inputs.catlex)?).map_err(config)?;
    let examples = parse_corpus(&read(&inputs.corpus)?).map_err(config)?;
    let data = annotate(&examples, &catlex, &grammar).map_err(config)?;
    Ok(Loaded { grammar, catlex, data })
}

fn report_rows(folds: &[EvalReport], pooled: &EvalReport) -> String {
    let mut out = String::from("fold\tprecision\trecall\tf\tcorrect\treturned\ttotal\n");
    for (i, r) in folds.iter().enumerate() {
        out.push_str(&r.summary_row(&i.to_string()));
        out.push('\n');
    }
    out.push_str(&pooled.summary_row("all"));
    out.push('\n');
    out
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Inverse { dir, result, known } => {
            let h = parse_term(read(&result)?.trim()).map_err(config)?;
            let g = parse_term(read(&known)?.trim()).map_err(config)?;
            let solution = match dir {
                Dir::Left => inverse_l(&h, &g),
                Dir::Right => inverse_r(&h, &g),
            }
            .map_err(|e| CliError::Run(e.to_string()))?;
            println!("{}", solution.map_or_else(|| "null".to_string(), |t| render_term(&t)));
        }
        Command::Induce {
            inputs,
            maxlevel,
            accuracy,
            output,
        } => {
            let induction = InductionConfig { maxlevel, accuracy };
            induction.validate().map_err(config)?;
            let l = load(&inputs)?;
            let setup = Setup {
                grammar: &l.grammar,
                catlex: &l.catlex,
                induction,
                training: TrainConfig::default(),
                typed: true,
            };
            let lex = setup.induce(&l.data).map_err(|e| CliError::Run(e.to_string()))?;
            write(&output, &lex.to_tsv())?;
        }
        Command::Train {
            inputs,
            lexicon,
            iters,
            alpha0,
            decay,
            no_trivial,
            output,
        } => {
            let training = TrainConfig {
                iterations: iters,
                alpha0,
                decay,
                trivial: !no_trivial,
            };
            training.validate().map_err(config)?;
            let l = load(&inputs)?;
            let initial = Lexicon::from_tsv(&read(&lexicon)?).map_err(config)?;
            let setup = Setup {
                grammar: &l.grammar,
                catlex: &l.catlex,
                induction: InductionConfig::default(),
                training,
                typed: true,
            };
            let model = learn(&l.data, initial, &l.catlex, training, setup.context())
                .map_err(|e| CliError::Run(e.to_string()))?;
            write(&output, &model.to_tsv())?;
        }
        Command::Eval {
            inputs,
            model,
            k,
            seed,
            mode,
            clang_i,
            closed,
        } => {
            let l = load(&inputs)?;
            let mut setup = Setup {
                grammar: &l.grammar,
                catlex: &l.catlex,
                induction: InductionConfig::default(),
                training: TrainConfig::default(),
                typed: true,
            };
            let model = Model::from_tsv(&read(&model)?, setup.context()).map_err(config)?;
            setup.training = model.config;
            let mode = match mode {
                EvalMode::Execute => Mode::Execute,
                EvalMode::Match => Mode::Match,
            };
            let eq = if clang_i {
                SrEquivalence::default().with_clang_aliases()
            } else {
                SrEquivalence::default()
            };
            let db = GeoDatabase::toy();
            let text = match k {
                None => {
                    let report = score(&setup.predict(&model, &l.data), mode, &db, &eq);
                    report_rows(&[], &report)
                }
                Some(k) => {
                    let subset: Vec<usize> = if closed {
                        closed_vocabulary(&l.data)
                    } else {
                        (0..l.data.len()).collect()
                    };
                    let (folds, pooled) = setup
                        .cross_validate(&l.data, &subset, k, seed, mode, &db, &eq)
                        .map_err(|e| match e {
                            semparse::eval::EvalError::BadK(..) => config(e),
                            other => CliError::Run(other.to_string()),
                        })?;
                    report_rows(&folds, &pooled)
                }
            };
            print!("{text}");
        }
        Command::Parse {
            model,
            cfg,
            catlex,
            sentence,
        } => {
            let grammar = Grammar::parse(&read(&cfg)?).map_err(config)?;
            let catlex = CategoryLexicon::parse(&read(&catlex)?).map_err(config)?;
            let setup = Setup {
                grammar: &grammar,
                catlex: &catlex,
                induction: InductionConfig::default(),
                training: TrainConfig::default(),
                typed: true,
            };
            let model = Model::from_tsv(&read(&model)?, setup.context()).map_err(config)?;
            let parsed = Decoder::new(&model, &catlex).parse(&sentence);
            println!(
                "{}",
                parsed.map_or_else(|| "null".to_string(), |p| render_term(&p.term))
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Config(_) => 2,
                CliError::Run(_) => 1,
            })
        }
    }
}
