//! Command-line front end. [`run`] parses arguments, runs one pipeline and
//! returns the process exit status: 0 on success, 1 on a usage error, 2 on
//! a data or model error.

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use seqtag::bundle::{load_bundle_file, save_bundle_file};
use seqtag::corpus::{build_lexicon, load_corpus, write_corpus, CorpusFormat, Sentence};
use seqtag::decision_list::DecisionListConfig;
use seqtag::eval::{
    evaluate, generate_synthetic_corpus, run_comparison, split, SyntheticCorpusSpec, DEFAULT_TRAIN_FRACTION,
};
use seqtag::features::FeatureConfig;
use seqtag::maxent::GisConfig;
use seqtag::svm::SvmConfig;
use seqtag::tagger::{train_with_lexicon, LearnerConfig, Method};

/// Caps the number of pairwise SVM trainings (and tagging workers) running
/// at once.
pub const THREADS_ENV: &str = "SEQTAG_THREADS";

#[derive(Debug, Parser)]
#[command(name = "seqtag", version, about = "Part-of-speech tagging with decision lists, maximum entropy and SVMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Debug, Args)]
struct Shared {
    /// Input corpus (training data for train and compare).
    #[arg(long = "in", global = true, value_name = "FILE")]
    input: Option<PathBuf>,
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "FILE")]
    model: Option<PathBuf>,
    #[arg(long, global = true, default_value = "svm", value_parser = parse_method)]
    method: Method,
    #[arg(long, global = true, default_value_t = 3)]
    window: usize,
    #[arg(long, global = true)]
    no_pos: bool,
    #[arg(long, global = true)]
    no_pos_order: bool,
    #[arg(long, global = true)]
    no_word: bool,
    /// Soft-margin penalty.
    #[arg(long = "C", global = true, default_value_t = 1.0, value_parser = positive_f64)]
    c: f64,
    /// Polynomial kernel degree.
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    degree: u32,
    #[arg(long, global = true, default_value_t = 1e-3, value_parser = positive_f64)]
    kkt_tol: f64,
    /// SMO budget: at most this many updates per training point.
    #[arg(long, global = true, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    max_passes: u64,
    #[arg(long, global = true, default_value_t = 500)]
    gis_iters: usize,
    #[arg(long, global = true, default_value_t = 1e-3, value_parser = positive_f64)]
    gis_tol: f64,
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    min_count: u64,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a tagger and write a model bundle.
    Train {
        /// Lexicon override file, `word<TAB>tag1,tag2,...` per line.
        #[arg(long, value_name = "FILE")]
        lexicon: Option<PathBuf>,
    },
    /// Tag raw text with a trained model.
    Tag {
        #[arg(long, default_value = "tab-words", value_parser = parse_format)]
        format: CorpusFormat,
    },
    /// Report precision of a trained model on gold-tagged text.
    Eval,
    /// Train and evaluate several methods on one split.
    Compare {
        /// Test corpus. Without `--in` and `--test` a synthetic corpus is
        /// generated from `--seed` and split.
        #[arg(long, value_name = "FILE")]
        test: Option<PathBuf>,
        /// Comma-separated methods.
        #[arg(long, default_value = "baseline,dlist,maxent,svm", value_delimiter = ',', value_parser = parse_method)]
        methods: Vec<Method>,
        /// Also run every learner without word features.
        #[arg(long)]
        ablation: bool,
        /// Write one JSON record per row to this file.
        #[arg(long, value_name = "FILE")]
        records: Option<PathBuf>,
        /// Add wall-clock seconds to the table and records.
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        synthetic: SyntheticArgs,
    },
    /// Write a synthetic tagged corpus.
    Generate {
        /// Write the held-out share here and only the training share to
        /// `--out`.
        #[arg(long, value_name = "FILE")]
        test: Option<PathBuf>,
        #[command(flatten)]
        synthetic: SyntheticArgs,
    },
}

#[derive(Debug, Args)]
struct SyntheticArgs {
    #[arg(long)]
    sentences: Option<usize>,
    /// Probability that an ambiguous word's cue is present.
    #[arg(long, value_parser = unit_f64)]
    signal: Option<f64>,
}

impl SyntheticArgs {
    fn spec(&self, seed: u64) -> SyntheticCorpusSpec {
        let mut spec = SyntheticCorpusSpec::benchmark(seed);
        if let Some(n) = self.sentences {
            spec.sentences = n;
        }
        if let Some(s) = self.signal {
            spec.signal_strength = s;
        }
        spec
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: seqtag::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<CorpusFormat, String> {
    s.parse().map_err(|e: seqtag::Error| e.to_string())
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn unit_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(format!("expected a number in [0, 1], got `{s}`")),
    }
}

impl Shared {
    fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            window: self.window,
            use_pos: !self.no_pos,
            use_pos_order: !self.no_pos_order,
            use_word: !self.no_word,
        }
    }

    fn learner_config(&self) -> LearnerConfig {
        LearnerConfig {
            decision_list: DecisionListConfig {
                min_count: self.min_count,
            },
            gis: GisConfig {
                max_iterations: self.gis_iters,
                constraint_tolerance: self.gis_tol,
            },
            svm: SvmConfig {
                c: self.c,
                degree: self.degree,
                kkt_tolerance: self.kkt_tol,
                max_passes: self.max_passes as usize,
            },
        }
    }

    fn describe(&self, command: &str, threads: Option<usize>) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("-".to_string(), |p| p.display().to_string());
        format!(
            "config: command={command} in={} out={} model={} method={} window={} pos={} pos_order={} word={} \
             C={:?} degree={} kkt_tol={:?} max_passes={} gis_iters={} gis_tol={:?} min_count={} seed={} threads={}",
            path(&self.input),
            path(&self.out),
            path(&self.model),
            self.method,
            self.window,
            !self.no_pos,
            !self.no_pos_order,
            !self.no_word,
            self.c,
            self.degree,
            self.kkt_tol,
            self.max_passes,
            self.gis_iters,
            self.gis_tol,
            self.min_count,
            self.seed,
            threads.map_or("auto".to_string(), |t| t.to_string()),
        )
    }
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<seqtag::Error> for Failure {
    fn from(e: seqtag::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str, command: &str) -> Result<&'a Path, Failure> {
    p.as_deref()
        .ok_or_else(|| Failure::Usage(format!("`{command}` requires {flag}")))
}

fn read_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Sentence>, Failure> {
    let file = File::open(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    load_corpus(BufReader::new(file), format).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut Vec<u8>) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

/// Runs the command line `argv` (program name first), writing normal output
/// to `stdout` and diagnostics to `stderr`.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = threads_from_env().and_then(|threads| {
        let _ = writeln!(stderr, "{}", cli.shared.describe(command_name(&cli.command), threads));
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Failure::Data(format!("cannot start worker threads: {e}")))?;
        let mut out = Vec::new();
        let mut err = Vec::new();
        let result = pool.install(|| dispatch(&cli, &mut out, &mut err));
        let _ = stdout.write_all(&out);
        let _ = stderr.write_all(&err);
        result
    });
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            1
        }
        Err(Failure::Data(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            2
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut io::stdout().lock(), &mut io::stderr().lock())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Train { .. } => "train",
        Command::Tag { .. } => "tag",
        Command::Eval => "eval",
        Command::Compare { .. } => "compare",
        Command::Generate { .. } => "generate",
    }
}

fn dispatch(cli: &Cli, stdout: &mut Vec<u8>, stderr: &mut Vec<u8>) -> Result<(), Failure> {
    let sh = &cli.shared;
    let fc = sh.feature_config();
    fc.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let lc = sh.learner_config();
    match &cli.command {
        Command::Train { lexicon } => {
            let input = required(&sh.input, "--in", "train")?;
            let model = required(&sh.model, "--model", "train")?;
            let training = read_corpus(input, CorpusFormat::TabTagged)?;
            let (mut lex, tags) = build_lexicon(&training)?;
            if let Some(path) = lexicon {
                let file = File::open(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
                let n = lex.apply_override(BufReader::new(file), &tags)?;
                let _ = writeln!(stderr, "lexicon override: {n} entries");
            }
            let (bundle, report) = train_with_lexicon(&training, lex, tags, sh.method, &fc, &lc)?;
            save_bundle_file(&bundle, model)?;
            let _ = writeln!(
                stderr,
                "trained {}: {} examples, {} features",
                report.method, report.examples, report.features
            );
            if let Some(g) = &report.gis {
                let _ = writeln!(
                    stderr,
                    "gis: {} iterations, residual {:.3e}, converged {}",
                    g.iterations, g.residual, g.converged
                );
            }
            if let Some(s) = &report.svm {
                let unconverged = s.trained.iter().filter(|p| !p.smo.converged).count();
                let support: usize = s.trained.iter().map(|p| p.support_vectors).sum();
                let _ = writeln!(
                    stderr,
                    "svm: {} pairs trained, {} omitted, {} support vectors, {} pairs hit the iteration budget",
                    s.trained.len(),
                    s.omitted.len(),
                    support,
                    unconverged
                );
            }
            Ok(())
        }
        Command::Tag { format } => {
            let input = required(&sh.input, "--in", "tag")?;
            let model = required(&sh.model, "--model", "tag")?;
            let bundle = load_bundle_file(model).map_err(|e| Failure::Data(format!("{}: {e}", model.display())))?;
            let sentences = read_corpus(input, *format)?;
            let decisions = bundle.tag_corpus(&sentences);
            write_output(sh.out.as_deref(), &bundle.format_tagged(&sentences, &decisions), stdout)
        }
        Command::Eval => {
            let input = required(&sh.input, "--in", "eval")?;
            let model = required(&sh.model, "--model", "eval")?;
            let bundle = load_bundle_file(model).map_err(|e| Failure::Data(format!("{}: {e}", model.display())))?;
            let test = read_corpus(input, CorpusFormat::TabTagged)?;
            let m = evaluate(&bundle, &test)?;
            let pct = |p: Option<f64>| p.map_or("n/a".to_string(), |p| format!("{:.1}%", 100.0 * p));
            let text = format!(
                "method: {}\nambiguous precision: {} ({}/{})\nall-words precision: {} ({}/{})\nunambiguous: {}/{}\nunknown: {}/{}\n",
                bundle.method(),
                pct(m.ambiguous_precision()),
                m.ambiguous.correct,
                m.ambiguous.total,
                pct(m.all_words_precision()),
                m.all.correct,
                m.all.total,
                m.unambiguous.correct,
                m.unambiguous.total,
                m.unknown.correct,
                m.unknown.total,
            );
            write_output(sh.out.as_deref(), &text, stdout)
        }
        Command::Compare {
            test,
            methods,
            ablation,
            records,
            timings,
            synthetic,
        } => {
            let (training, test) = match (&sh.input, test) {
                (Some(i), Some(t)) => (
                    read_corpus(i, CorpusFormat::TabTagged)?,
                    read_corpus(t, CorpusFormat::TabTagged)?,
                ),
                (None, None) => {
                    let corpus = generate_synthetic_corpus(&synthetic.spec(sh.seed))?;
                    split(&corpus.sentences, DEFAULT_TRAIN_FRACTION)
                }
                _ => return Err(Failure::Usage("`compare` takes both --in and --test, or neither".into())),
            };
            let mut configs = vec![fc];
            if *ablation && fc.use_word {
                configs.push(fc.without_words());
            }
            let report = run_comparison(&training, &test, methods, &configs, &lc)?;
            if let Some(path) = records {
                fs::write(path, report.to_jsonl(*timings))?;
            }
            write_output(sh.out.as_deref(), &report.to_text(*timings), stdout)
        }
        Command::Generate { test, synthetic } => {
            let out = required(&sh.out, "--out", "generate")?;
            let corpus = generate_synthetic_corpus(&synthetic.spec(sh.seed))?;
            let (train, held_out) = match test {
                Some(_) => split(&corpus.sentences, DEFAULT_TRAIN_FRACTION),
                None => (corpus.sentences, Vec::new()),
            };
            write_corpus(File::create(out)?, &train)?;
            if let Some(path) = test {
                write_corpus(File::create(path)?, &held_out)?;
            }
            let _ = writeln!(stderr, "wrote {} + {} sentences", train.len(), held_out.len());
            Ok(())
        }
    }
}
