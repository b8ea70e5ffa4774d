//! Command-line interface.

use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::corpus::{iter_training_pairs, make_pseudoword_corpus, read_corpus, tokenize, write_pseudo_labels, Merge, TrainingPair};
use crate::error::{Error, Result};
use crate::io::{export_text, load_model, save_model};
use crate::predict::{disambiguate_tokens, nearest_neighbors, predictive_loglik};
use crate::train::{train, TrainingConfig};
use crate::wsi::{evaluate_wsi, WsiDataset};

#[derive(Debug, Parser)]
#[command(name = "adagram", version, about = "Adaptive skip-gram multi-sense word embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on a whitespace-tokenized corpus.
    Train(TrainArgs),
    /// Nearest sense prototypes of a word.
    Nn(NnArgs),
    /// Sense posteriors for `word | context ...` lines read from stdin.
    Disambiguate(DisambiguateArgs),
    /// Average held-out log-likelihood per context word.
    Likelihood(LikelihoodArgs),
    /// Word-sense induction scores on a TSV dataset.
    Wsi(WsiArgs),
    /// Write retained sense vectors as text.
    Export(ExportArgs),
    /// Build a pseudo-word corpus and its gold labels.
    Pseudo(PseudoArgs),
    /// Print header fields and the sense-count histogram of a model.
    Info(InfoArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub dim: usize,
    #[arg(long, default_value_t = 30)]
    pub senses: usize,
    #[arg(long, default_value_t = 0.15)]
    pub alpha: f64,
    /// Context width; half of it is used on each side of a word.
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    #[arg(long, default_value_t = 20)]
    pub min_count: u64,
    #[arg(long, default_value_t = 1)]
    pub epochs: u32,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.025)]
    pub rho0: f64,
    #[arg(long, default_value_t = 0.025)]
    pub lambda0: f64,
    #[arg(long, default_value_t = 0.025e-4)]
    pub min_rate: f64,
    /// Suppress progress output.
    #[arg(long)]
    pub quiet: bool,
}

impl TrainArgs {
    pub fn config(&self) -> TrainingConfig {
        TrainingConfig {
            window: self.window,
            epochs: self.epochs,
            rho0: self.rho0,
            lambda0: self.lambda0,
            min_rate: self.min_rate,
            senses: self.senses,
            dim: self.dim,
            alpha: self.alpha,
            min_count: self.min_count,
            seed: self.seed,
            workers: self.workers,
            progress: !self.quiet,
        }
    }
}

#[derive(Debug, Args)]
pub struct NnArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub word: String,
    /// Query a single sense; defaults to every sense above `--epsilon`.
    #[arg(long)]
    pub sense: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct DisambiguateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Only print senses whose prior exceeds this.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct LikelihoodArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct WsiArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub context_width: usize,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct PseudoArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// `first,second,pseudo`; repeatable.
    #[arg(long = "merge", required = true, value_parser = parse_merge)]
    pub merges: Vec<Merge>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
}

fn parse_merge(s: &str) -> std::result::Result<Merge, String> {
    match s.split(',').collect::<Vec<_>>()[..] {
        [a, b, p] if !a.is_empty() && !b.is_empty() && !p.is_empty() => Ok(Merge::new(a, b, p)),
        _ => Err(format!("expected first,second,pseudo but got {s:?}")),
    }
}

fn open_output<'a>(path: Option<&PathBuf>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn check_epsilon(eps: f64) -> Result<()> {
    if (0.0..1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("epsilon must lie in [0, 1), got {eps}")))
    }
}

/// Execute a parsed command against the given stdin/stdout.
pub fn run(cli: Cli, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let text = read_corpus(&a.corpus)?;
            let model = train::<f32, _>(tokenize(&text), &a.config())?;
            save_model(&model, &a.output)?;
            if !a.quiet {
                eprintln!(
                    "saved {} words × {} senses × {} dims to {}",
                    model.num_words(),
                    model.senses(),
                    model.dim(),
                    a.output.display()
                );
            }
        }
        Command::Nn(a) => {
            check_epsilon(a.epsilon)?;
            let model = load_model(&a.model)?;
            let w = model.vocab().id(&a.word).ok_or_else(|| Error::OutOfVocabulary(a.word.clone()))?;
            let senses: Vec<usize> = match a.sense {
                Some(k) => vec![k],
                None => {
                    let prior = model.prior_sense_probs(w);
                    (0..model.senses()).filter(|&k| prior[k] > a.epsilon).collect()
                }
            };
            for k in senses {
                writeln!(stdout, "{}#{}", a.word, k)?;
                for h in nearest_neighbors(&model, w, k, a.top, a.epsilon)? {
                    writeln!(stdout, "\t{}#{}\t{:.6}", model.vocab().word(h.word), h.sense, h.cosine)?;
                }
            }
        }
        Command::Disambiguate(a) => {
            check_epsilon(a.epsilon)?;
            let model = load_model(&a.model)?;
            for (n, line) in stdin.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let (word, context) = line.split_once('|').ok_or_else(|| Error::Parse {
                    line: n + 1,
                    msg: "expected `word | context`".into(),
                })?;
                let word = word.trim();
                let ctx: Vec<&str> = tokenize(context).collect();
                let post = disambiguate_tokens(&model, word, &ctx)?;
                let w = model.vocab().id(word).expect("checked by disambiguate_tokens");
                let prior = model.prior_sense_probs(w);
                write!(stdout, "{word}")?;
                for (k, p) in post.probs().iter().enumerate() {
                    if prior[k] > a.epsilon {
                        write!(stdout, "\t{k}:{p:.6}")?;
                    }
                }
                writeln!(stdout)?;
            }
        }
        Command::Likelihood(a) => {
            let model = load_model(&a.model)?;
            if a.window < 2 || a.window % 2 != 0 {
                return Err(Error::InvalidConfig(format!("window must be even and >= 2, got {}", a.window)));
            }
            let text = read_corpus(&a.corpus)?;
            let ids = model.vocab().encode(tokenize(&text));
            let pairs: Vec<TrainingPair> = iter_training_pairs(&ids, a.window).collect();
            let ll = predictive_loglik(&model, &pairs)?;
            writeln!(stdout, "{ll:.6}")?;
        }
        Command::Wsi(a) => {
            let model = load_model(&a.model)?;
            let file = io::BufReader::new(fs::File::open(&a.dataset)?);
            let dataset = WsiDataset::parse(file)?;
            let report = evaluate_wsi(&model, &dataset, a.context_width)?;
            let mut out = open_output(a.output.as_ref(), stdout)?;
            report.write_tsv(&mut out)?;
            out.flush()?;
        }
        Command::Export(a) => {
            check_epsilon(a.epsilon)?;
            let model = load_model(&a.model)?;
            let mut out = open_output(a.output.as_ref(), stdout)?;
            export_text(&model, a.epsilon, &mut out)?;
            out.flush()?;
        }
        Command::Pseudo(a) => {
            let text = read_corpus(&a.corpus)?;
            let tokens: Vec<&str> = tokenize(&text).collect();
            let pc = make_pseudoword_corpus(&tokens, &a.merges)?;
            let mut out = BufWriter::new(fs::File::create(&a.output)?);
            for line in pc.tokens.chunks(100) {
                writeln!(out, "{}", line.join(" "))?;
            }
            out.flush()?;
            let mut labels = BufWriter::new(fs::File::create(&a.labels)?);
            write_pseudo_labels(&mut labels, &pc.labels)?;
            labels.flush()?;
        }
        Command::Info(a) => {
            check_epsilon(a.epsilon)?;
            let model = load_model(&a.model)?;
            writeln!(stdout, "words\t{}", model.num_words())?;
            writeln!(stdout, "dim\t{}", model.dim())?;
            writeln!(stdout, "senses\t{}", model.senses())?;
            writeln!(stdout, "alpha\t{}", model.alpha())?;
            writeln!(stdout, "tokens\t{}", model.vocab().total_tokens())?;
            let mut hist = vec![0usize; model.senses() + 1];
            for w in 0..model.num_words() as u32 {
                hist[model.sense_count(w, a.epsilon)] += 1;
            }
            writeln!(stdout, "senses_above_{}\twords", a.epsilon)?;
            for (k, &n) in hist.iter().enumerate().filter(|(_, &n)| n > 0) {
                writeln!(stdout, "{k}\t{n}")?;
            }
        }
    }
    Ok(())
}
