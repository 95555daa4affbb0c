//! Subcommand definitions and implementations. Commands write their
//! primary output to the given writer so they can be driven from tests.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use treemath_core::corpus::{fold_split, generate_corpus, split, Example};
use treemath_core::eval::{score_predictions, AggregateReport, EvalOptions, EvalReport};
use treemath_core::segment::{parse_formula, split_regions, RawRegion};
use treemath_core::{compute_positions, linearize, tree_to_latex, NormalizeOptions, OptNode, TreePosition, Vocab};
use treemath_model::checkpoint;

use crate::config::RunConfig;
use crate::dataset::Dataset;
use crate::error::CliError;
use crate::experiment::{self, encode_document, fit_to_length, Prediction};
use crate::records::{read_records, write_examples, Record};

#[derive(Debug, Parser)]
#[command(name = "treemath", version, about = "Tree-structured math language modeling")]
pub struct Cli {
    /// Base directory for relative paths.
    #[arg(long, env = "TREEMATH_DATA_DIR", global = true)]
    pub data_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize documents into a binary dataset.
    Ingest(IngestArgs),
    /// Train a model on ingested datasets.
    Train(TrainArgs),
    /// Continue prompts with a trained model.
    Generate(GenerateArgs),
    /// Score predictions, or cross-validate on a corpus.
    Eval(EvalArgs),
    /// Show the tree, positions and encodings of one expression.
    Inspect(InspectArgs),
    /// Write a synthetic word-problem corpus with train/val/test splits.
    GenCorpus(GenCorpusArgs),
}

/// The four ablation switches, shared by several subcommands.
#[derive(Debug, Clone, Copy, Default, Args)]
pub struct AblationFlags {
    /// Disable tree-position embeddings.
    #[arg(long)]
    pub no_tpe: bool,
    /// Disable type embeddings.
    #[arg(long)]
    pub no_type_emb: bool,
    /// Learn math embeddings freely instead of deriving them from text.
    #[arg(long)]
    pub no_shared_emb: bool,
    /// Keep numbers as single tokens instead of digit sub-trees.
    #[arg(long)]
    pub no_num_trees: bool,
}

impl AblationFlags {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let a = &mut cfg.ablation;
        a.tree_positions &= !self.no_tpe;
        a.type_embeddings &= !self.no_type_emb;
        a.shared_embeddings &= !self.no_shared_emb;
        a.number_trees &= !self.no_num_trees;
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Input documents (.jsonl or plain text).
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Output dataset file.
    #[arg(long)]
    pub out: PathBuf,
    /// Use this vocabulary instead of building one.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Where to write the built vocabulary [default: vocab.json beside --out].
    #[arg(long, conflicts_with = "vocab")]
    pub vocab_out: Option<PathBuf>,
    /// Also write every formula as a JSON line: source, 3-tuple tree, positions.
    #[arg(long)]
    pub trees_out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub no_num_trees: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: PathBuf,
    /// Required for a fresh run; a resumed run uses the checkpoint's.
    #[arg(long, required_unless_present = "resume")]
    pub vocab: Option<PathBuf>,
    /// Run directory for checkpoints, the log and the resolved config.
    #[arg(long)]
    pub out: PathBuf,
    /// Continue from `last.ckpt` in the run directory. Model, optimizer and
    /// data-order settings come from the checkpoint.
    #[arg(long)]
    pub resume: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Config override, e.g. `--set optim.weight_decay=0.0`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(flatten)]
    pub ablation: AblationFlags,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Prompts (.jsonl examples use their problem text).
    #[arg(long)]
    pub prompt: PathBuf,
    /// Predictions file [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Sample from the top K tokens instead of searching.
    #[arg(long, value_name = "K")]
    pub sample_k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write each prediction's formulas as 3-tuple JSON lines.
    #[arg(long)]
    pub trees_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, required_unless_present = "cv", requires = "gold")]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Vocabulary used to normalize formulas [default: built-in symbols].
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Count each number sub-tree as one node in TED.
    #[arg(long)]
    pub collapse_numbers: bool,
    /// Write the report as JSON here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Cross-validate with this many folds over --corpus.
    #[arg(long, requires = "corpus", conflicts_with = "pred")]
    pub cv: Option<usize>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Per-fold run directories go here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub ablation: AblationFlags,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// A formula body, without `$` delimiters.
    pub expr: String,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub no_num_trees: bool,
    /// Print only the 3-tuple JSON with positions.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for corpus.jsonl and its splits.
    #[arg(long)]
    pub out: PathBuf,
}

/// Resolves relative paths against the data directory.
pub struct Paths {
    base: Option<PathBuf>,
}

impl Paths {
    pub fn new(base: Option<PathBuf>) -> Paths {
        Paths { base }
    }

    pub fn get(&self, p: &Path) -> PathBuf {
        match &self.base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, log: &mut dyn Write) -> anyhow::Result<()> {
    let paths = Paths::new(cli.data_dir);
    match cli.command {
        Command::Ingest(a) => ingest(&a, &paths, out),
        Command::Train(a) => train(&a, &paths, out, log),
        Command::Generate(a) => generate(&a, &paths, out),
        Command::Eval(a) => eval(&a, &paths, out, log),
        Command::Inspect(a) => inspect(&a, &paths, out),
        Command::GenCorpus(a) => gen_corpus(&a, &paths, out),
    }
}

fn load_config(path: Option<&Path>, paths: &Paths) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => RunConfig::load(&paths.get(p)),
        None => Ok(RunConfig::default()),
    }
}

fn load_vocab(path: &Path) -> Result<Vocab, CliError> {
    Vocab::load(path).map_err(|e| CliError::User(format!("cannot load vocabulary {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::User(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::User(format!("cannot write {}: {e}", path.display())))
}

/// Tree JSON with positions in pre-order, as written by `ingest` and `inspect`.
pub fn tree_record(tree: &OptNode) -> serde_json::Value {
    let positions: Vec<Vec<u8>> = compute_positions(tree).into_iter().map(|(_, p)| p.0).collect();
    json!({ "tree": tree.to_json(), "positions": positions })
}

fn ingest(a: &IngestArgs, paths: &Paths, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = load_config(a.config.as_deref(), paths)?;
    let opts = NormalizeOptions {
        num_trees: !a.no_num_trees,
    };
    let mut docs = Vec::new();
    for input in &a.input {
        let input = paths.get(input);
        for rec in read_records(&input)? {
            docs.push((format!("{}:{}", input.display(), rec.line), rec.record.document()));
        }
    }
    // Check every document before building anything, so errors name the line.
    let probe = Vocab::default();
    for (origin, doc) in &docs {
        for region in split_regions(doc).map_err(|e| CliError::Data(format!("{origin}: {e}")))? {
            if let RawRegion::Formula(body, offset) = region {
                parse_formula(body, offset, &probe, opts).map_err(|e| CliError::Data(format!("{origin}: {e}")))?;
            }
        }
    }
    let out_path = paths.get(&a.out);
    let vocab = match &a.vocab {
        Some(v) => load_vocab(&paths.get(v))?,
        None => {
            let texts: Vec<String> = docs.iter().map(|(_, d)| d.clone()).collect();
            let vocab = experiment::build_vocab(&texts, &cfg.data, opts.num_trees)?;
            let vocab_path = match &a.vocab_out {
                Some(p) => paths.get(p),
                None => out_path.with_file_name("vocab.json"),
            };
            vocab
                .save(&vocab_path)
                .with_context(|| format!("writing {}", vocab_path.display()))?;
            writeln!(out, "vocabulary: {} ({} ids)", vocab_path.display(), vocab.size())?;
            vocab
        }
    };
    let mut sequences = Vec::with_capacity(docs.len());
    let mut trees = Vec::new();
    for (origin, doc) in &docs {
        let seq = encode_document(doc, &vocab, opts, true).map_err(|e| CliError::Data(format!("{origin}: {e}")))?;
        sequences.push(seq);
        if a.trees_out.is_some() {
            for region in split_regions(doc)? {
                if let RawRegion::Formula(body, offset) = region {
                    let tree = parse_formula(body, offset, &vocab, opts)?;
                    let mut rec = tree_record(&tree);
                    rec["source"] = json!(origin);
                    trees.push(rec);
                }
            }
        }
    }
    let total: usize = sequences.iter().map(|s| s.len()).sum();
    let ds = Dataset {
        number_trees: opts.num_trees,
        sequences,
    };
    ds.save(&out_path)?;
    if let Some(t) = &a.trees_out {
        let path = paths.get(t);
        let lines: String = trees.iter().map(|t| format!("{t}\n")).collect();
        write_file(&path, &lines)?;
    }
    writeln!(out, "dataset: {} ({} documents, {} tokens)", out_path.display(), ds.sequences.len(), total)?;
    Ok(())
}

fn train(a: &TrainArgs, paths: &Paths, out: &mut dyn Write, log: &mut dyn Write) -> anyhow::Result<()> {
    let run_dir = paths.get(&a.out);
    let mut on_log = |e: &treemath_model::LogEntry| {
        let _ = writeln!(log, "{}", serde_json::to_string(e).expect("log entry serializes"));
    };
    if a.resume {
        let last = run_dir.join("last.ckpt");
        let ckpt = checkpoint::load(&last).with_context(|| format!("loading {}", last.display()))?;
        let mut trainer = ckpt
            .trainer
            .ok_or_else(|| CliError::Data(format!("{} has no training state", last.display())))?;
        let cfg = match &ckpt.metadata {
            Some(m) => RunConfig::parse(m).map_err(|e| CliError::Data(format!("stored config: {e}")))?,
            None => RunConfig::default(),
        };
        if let Some(e) = a.max_epochs {
            trainer.train.max_epochs = e;
        }
        trainer.train.max_steps = a.max_steps;
        let (train_ds, val_ds) = (Dataset::load(&paths.get(&a.train))?, Dataset::load(&paths.get(&a.val))?);
        if train_ds.number_trees != cfg.ablation.number_trees {
            return Err(CliError::User("dataset number sub-tree setting differs from the checkpoint's".into()).into());
        }
        let mut model = ckpt.model;
        let (train_set, _) = fit_to_length(train_ds.sequences, model.config.max_seq);
        let (val_set, _) = fit_to_length(val_ds.sequences, model.config.max_seq);
        let reason = experiment::resume_training(
            &mut model,
            trainer,
            &train_set,
            &val_set,
            Some(&run_dir),
            ckpt.metadata.as_deref(),
            &mut on_log,
        )?;
        writeln!(out, "stopped: {reason:?}")?;
        return Ok(());
    }

    let mut cfg = load_config(a.config.as_deref(), paths)?;
    if let Some(s) = a.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(e) = a.max_epochs {
        cfg.train.max_epochs = e;
    }
    if a.max_steps.is_some() {
        cfg.train.max_steps = a.max_steps;
    }
    if let Some(lr) = a.lr {
        cfg.optim.lr = lr;
    }
    for o in &a.overrides {
        cfg.apply_override(o)?;
    }
    a.ablation.apply(&mut cfg);
    cfg.model.validate().map_err(|e| CliError::User(e.to_string()))?;

    let vocab = load_vocab(&paths.get(a.vocab.as_deref().expect("required by clap")))?;
    let train_path = paths.get(&a.train);
    let val_path = paths.get(&a.val);
    let (train_ds, val_ds) = (Dataset::load(&train_path)?, Dataset::load(&val_path)?);
    for (ds, p) in [(&train_ds, &train_path), (&val_ds, &val_path)] {
        if ds.number_trees != cfg.ablation.number_trees {
            return Err(CliError::User(format!(
                "{} was ingested with number sub-trees {}, but the run has them {}",
                p.display(),
                if ds.number_trees { "on" } else { "off" },
                if cfg.ablation.number_trees { "on" } else { "off" },
            ))
            .into());
        }
    }
    let (train_set, d1) = fit_to_length(train_ds.sequences, cfg.model.max_seq);
    let (val_set, d2) = fit_to_length(val_ds.sequences, cfg.model.max_seq);
    if d1 + d2 > 0 {
        writeln!(out, "skipped {} sequences longer than {} tokens", d1 + d2, cfg.model.max_seq)?;
    }
    if train_set.is_empty() {
        return Err(CliError::Data("no training sequences".into()).into());
    }
    create_dir(&run_dir)?;
    write_file(&run_dir.join("config.toml"), &cfg.to_toml())?;
    let (model, reason) = experiment::train_model(&cfg, vocab, &train_set, &val_set, Some(&run_dir), &mut on_log)?;
    writeln!(out, "parameters: {}", model.params.count())?;
    writeln!(out, "stopped: {reason:?}")?;
    writeln!(out, "best checkpoint: {}", run_dir.join("best.ckpt").display())?;
    Ok(())
}

/// One prediction per line; line breaks inside a prediction become spaces.
pub fn prediction_line(p: &Prediction) -> String {
    p.text.replace(['\n', '\r'], " ")
}

fn generate(a: &GenerateArgs, paths: &Paths, out: &mut dyn Write) -> anyhow::Result<()> {
    let ckpt_path = paths.get(&a.checkpoint);
    let ckpt = checkpoint::load(&ckpt_path).with_context(|| format!("loading {}", ckpt_path.display()))?;
    let mut settings = match &ckpt.metadata {
        Some(m) => RunConfig::parse(m).map(|c| c.generate).unwrap_or_default(),
        None => Default::default(),
    };
    if let Some(b) = a.beam {
        settings.beam = b;
    }
    if let Some(m) = a.max_len {
        settings.max_len = m;
    }
    let model = ckpt.model;
    let opts = NormalizeOptions {
        num_trees: model.ablation.number_trees,
    };
    let prompt_path = paths.get(&a.prompt);
    let records = read_records(&prompt_path)?;
    let prompts = records
        .iter()
        .map(|r| {
            encode_document(&r.record.prompt(), &model.vocab, opts, false)
                .map_err(|e| CliError::Data(format!("{}:{}: {e}", prompt_path.display(), r.line)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = experiment::generate_config(&settings, a.sample_k.map(|k| (k, a.seed)));
    let preds = experiment::predict(&model, &prompts, &cfg)?;
    let mut text = String::new();
    for p in &preds {
        text.push_str(&prediction_line(p));
        text.push('\n');
    }
    match &a.out {
        Some(p) => write_file(&paths.get(p), &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    if let Some(t) = &a.trees_out {
        let mut lines = String::new();
        for (i, p) in preds.iter().enumerate() {
            let formulas: Vec<_> = p.formulas.iter().map(tree_record).collect();
            lines.push_str(&json!({ "line": i + 1, "formulas": formulas }).to_string());
            lines.push('\n');
        }
        write_file(&paths.get(t), &lines)?;
    }
    Ok(())
}

/// Fails if a report breaks the ordering every evaluation must satisfy:
/// identical trees always evaluate identically.
pub fn check_ordering(r: &EvalReport) -> anyhow::Result<()> {
    anyhow::ensure!(
        r.tree_matches <= r.solved,
        "tree matches ({}) exceed solved ({}), which should be impossible",
        r.tree_matches,
        r.solved
    );
    Ok(())
}

fn eval(a: &EvalArgs, paths: &Paths, out: &mut dyn Write, log: &mut dyn Write) -> anyhow::Result<()> {
    if let Some(k) = a.cv {
        return cross_validate(a, k, paths, out, log);
    }
    let vocab = match &a.vocab {
        Some(v) => load_vocab(&paths.get(v))?,
        None => Vocab::default(),
    };
    let pred_path = paths.get(a.pred.as_deref().expect("required by clap"));
    let gold_path = paths.get(a.gold.as_deref().expect("required by clap"));
    let pred: Vec<String> = std::fs::read_to_string(&pred_path)
        .map_err(|e| CliError::User(format!("cannot read {}: {e}", pred_path.display())))?
        .lines()
        .map(str::to_owned)
        .collect();
    let gold: Vec<String> = read_records(&gold_path)?.into_iter().map(|r| r.record.gold()).collect();
    let opts = EvalOptions {
        normalize: NormalizeOptions {
            num_trees: !a.ablation.no_num_trees,
        },
        collapse_numbers: a.collapse_numbers,
        ..EvalOptions::default()
    };
    let report = score_predictions(&pred, &gold, &vocab, &opts).map_err(|e| CliError::Data(e.to_string()))?;
    check_ordering(&report)?;
    writeln!(out, "{report}")?;
    if let Some(j) = &a.json {
        write_file(&paths.get(j), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    Ok(())
}

fn cross_validate(a: &EvalArgs, k: usize, paths: &Paths, out: &mut dyn Write, log: &mut dyn Write) -> anyhow::Result<()> {
    if k < 2 {
        return Err(CliError::User("--cv needs at least 2 folds".into()).into());
    }
    let mut cfg = load_config(a.config.as_deref(), paths)?;
    if let Some(s) = a.seed {
        cfg = cfg.with_seed(s);
    }
    a.ablation.apply(&mut cfg);
    let corpus_path = paths.get(a.corpus.as_deref().expect("required by clap"));
    let examples: Vec<Example> = read_records(&corpus_path)?
        .into_iter()
        .map(|r| match r.record {
            Record::Example(e) => Ok(e),
            Record::Text(_) => Err(CliError::Data(format!(
                "{}:{}: cross-validation needs problem/equation records",
                corpus_path.display(),
                r.line
            ))),
        })
        .collect::<Result<_, _>>()?;
    if examples.len() < k {
        return Err(CliError::Data(format!("{} examples cannot fill {k} folds", examples.len())).into());
    }
    let mut reports = Vec::with_capacity(k);
    for fold in 0..k {
        let dir = match &a.out {
            Some(o) => {
                let d = paths.get(o).join(format!("fold{fold}"));
                create_dir(&d)?;
                Some(d)
            }
            None => None,
        };
        let splits = fold_split(&examples, k, fold);
        let mut on_log = |e: &treemath_model::LogEntry| {
            let _ = writeln!(log, "fold {fold} {}", serde_json::to_string(e).expect("log entry serializes"));
        };
        let outcome = experiment::run_split(&cfg, &splits, false, dir.as_deref(), &mut on_log)?;
        check_ordering(&outcome.report)?;
        writeln!(
            out,
            "fold {fold}: tree_match {:.4} solve_rate {:.4} mean_ted {:.4} bleu4 {:.2} rouge_l {:.2}",
            outcome.report.tree_match_rate,
            outcome.report.solve_rate,
            outcome.report.mean_ted,
            outcome.report.bleu4,
            outcome.report.rouge_l
        )?;
        reports.push(outcome.report);
    }
    let agg = AggregateReport::from_reports(&reports);
    writeln!(out, "{agg}")?;
    if let Some(j) = &a.json {
        let body = json!({ "folds": reports, "aggregate": agg });
        write_file(&paths.get(j), &(serde_json::to_string_pretty(&body)? + "\n"))?;
    }
    Ok(())
}

fn bits(p: &TreePosition) -> String {
    if p.is_root() {
        return "-".into();
    }
    p.entries().iter().map(|e| format!("{e:06b}")).collect::<Vec<_>>().join(" ")
}

/// Human-readable dump of one expression through the whole pipeline.
pub fn inspect_report(expr: &str, vocab: &Vocab, opts: NormalizeOptions) -> treemath_core::Result<String> {
    use std::fmt::Write as _;
    let tree = parse_formula(expr, 0, vocab, opts)?;
    let mut s = String::new();
    let _ = writeln!(s, "input: {expr}");
    let _ = writeln!(s, "latex: {}", tree_to_latex(&tree)?);
    let _ = writeln!(s, "\ntree:");
    let positioned = compute_positions(&tree);
    for (node, pos) in &positioned {
        let _ = writeln!(s, "{}{} {}", "  ".repeat(pos.depth() + 1), node.token, pos);
    }
    let _ = writeln!(s, "\n{:>3}  {:<14} {:<9} {:<10} bin(p) by entry, MSB first", "#", "token", "type", "position");
    for (i, item) in linearize(&tree).iter().enumerate() {
        let _ = writeln!(
            s,
            "{:>3}  {:<14} {:<9} {:<10} {}",
            i,
            item.token.to_string(),
            item.token.kind.as_str(),
            item.position.to_string(),
            bits(&item.position)
        );
    }
    let _ = writeln!(s, "\njson:");
    let _ = write!(s, "{}", tree_record(&tree));
    Ok(s)
}

fn inspect(a: &InspectArgs, paths: &Paths, out: &mut dyn Write) -> anyhow::Result<()> {
    let vocab = match &a.vocab {
        Some(v) => load_vocab(&paths.get(v))?,
        None => Vocab::default(),
    };
    let opts = NormalizeOptions {
        num_trees: !a.no_num_trees,
    };
    if a.json {
        let tree = parse_formula(&a.expr, 0, &vocab, opts)?;
        writeln!(out, "{}", tree_record(&tree))?;
    } else {
        writeln!(out, "{}", inspect_report(&a.expr, &vocab, opts)?)?;
    }
    Ok(())
}

fn gen_corpus(a: &GenCorpusArgs, paths: &Paths, out: &mut dyn Write) -> anyhow::Result<()> {
    if a.n == 0 {
        return Err(CliError::User("--n must be positive".into()).into());
    }
    let dir = paths.get(&a.out);
    create_dir(&dir)?;
    let examples = generate_corpus(a.n, a.seed);
    let s = split(&examples);
    write_examples(&dir.join("corpus.jsonl"), &examples)?;
    write_examples(&dir.join("train.jsonl"), &s.train)?;
    write_examples(&dir.join("val.jsonl"), &s.val)?;
    write_examples(&dir.join("test.jsonl"), &s.test)?;
    writeln!(
        out,
        "{} examples: {} train, {} val, {} test in {}",
        examples.len(),
        s.train.len(),
        s.val.len(),
        s.test.len(),
        dir.display()
    )?;
    Ok(())
}
