//! The pipeline shared by the subcommands and the test suites: build a
//! vocabulary, encode documents, train, generate and score.

use std::path::Path;

use rayon::prelude::*;
use treemath_core::corpus::{Example, Splits};
use treemath_core::encode::{decode, encode, EncodedSequence};
use treemath_core::eval::{aggregate, score_formulas, EvalOptions, EvalReport};
use treemath_core::segment::{split_regions, MixedSequence, RawRegion, Region};
use treemath_core::tree::OptNode;
use treemath_core::vocab::{frequent_numbers, MathVocab, TextVocab};
use treemath_core::{parse_math, segment_regions, tree_to_latex, NormalizeOptions, TokenKind, Vocab};
use treemath_model::{checkpoint, GenerateConfig, LogEntry, Model, StopReason, Strategy, Trainer};

use crate::config::{DataConfig, GenerateSettings, RunConfig};
use crate::error::CliError;

fn collect_numbers<'a>(node: &'a OptNode, out: &mut Vec<&'a str>) {
    if node.kind() == TokenKind::Number {
        out.push(&node.token.symbol);
    }
    for c in &node.children {
        collect_numbers(c, out);
    }
}

/// Builds the vocabulary from raw documents. Formulas that fail to parse
/// are reported with their document index.
pub fn build_vocab(docs: &[String], data: &DataConfig, number_trees: bool) -> Result<Vocab, CliError> {
    let mut texts = Vec::new();
    let mut formulas = Vec::new();
    for (i, doc) in docs.iter().enumerate() {
        let regions = split_regions(doc).map_err(|e| CliError::Data(format!("document {}: {e}", i + 1)))?;
        for r in regions {
            match r {
                RawRegion::Text(t) => texts.push(t),
                RawRegion::Formula(body, offset) => {
                    let tree = parse_math(body).map_err(|e| {
                        CliError::Data(format!("document {}: formula at byte {offset}: {e}", i + 1))
                    })?;
                    formulas.push(tree);
                }
            }
        }
    }
    let text = TextVocab::train(texts, data.max_words, data.min_count);
    let mut math = MathVocab::default();
    if !number_trees {
        let mut literals = Vec::new();
        for f in &formulas {
            collect_numbers(f, &mut literals);
        }
        math = math
            .with_numbers(frequent_numbers(literals, data.max_numbers))
            .map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(Vocab::new(text, math))
}

/// Segments and encodes a document, optionally ending it with EOS.
pub fn encode_document(doc: &str, vocab: &Vocab, opts: NormalizeOptions, eos: bool) -> treemath_core::Result<EncodedSequence> {
    let mut seq = encode(&segment_regions(doc, vocab, opts)?, vocab)?;
    if eos {
        seq.push_eos();
    }
    Ok(seq)
}

pub fn encode_documents(docs: &[String], vocab: &Vocab, opts: NormalizeOptions) -> Result<Vec<EncodedSequence>, CliError> {
    docs.par_iter()
        .enumerate()
        .map(|(i, d)| encode_document(d, vocab, opts, true).map_err(|e| CliError::Data(format!("document {}: {e}", i + 1))))
        .collect()
}

/// Drops sequences longer than the model accepts and reports how many.
pub fn fit_to_length(seqs: Vec<EncodedSequence>, max_seq: usize) -> (Vec<EncodedSequence>, usize) {
    let before = seqs.len();
    let kept: Vec<_> = seqs.into_iter().filter(|s| s.len() <= max_seq).collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

pub fn normalize_options(cfg: &RunConfig) -> NormalizeOptions {
    NormalizeOptions {
        num_trees: cfg.ablation.number_trees,
    }
}

pub fn generate_config(settings: &GenerateSettings, sample: Option<(usize, u64)>) -> GenerateConfig {
    let strategy = match (sample, settings.beam) {
        (Some((k, seed)), _) => Strategy::TopK { k, seed },
        (None, 0 | 1) => Strategy::Greedy,
        (None, width) => Strategy::Beam { width },
    };
    GenerateConfig {
        strategy,
        max_len: settings.max_len,
    }
}

/// Trains a fresh model. With `out_dir`, writes `last.ckpt` after every
/// epoch and `best.ckpt` at the end, and appends the log to `train.jsonl`.
/// Both checkpoints carry the run configuration as TOML.
pub fn train_model(
    cfg: &RunConfig,
    vocab: Vocab,
    train: &[EncodedSequence],
    val: &[EncodedSequence],
    out_dir: Option<&Path>,
    on_log: &mut dyn FnMut(&LogEntry),
) -> anyhow::Result<(Model, StopReason)> {
    let mut model = Model::new(cfg.model.clone(), cfg.ablation, vocab)?;
    let trainer = Trainer::new(&model, cfg.optim.clone(), cfg.train.clone());
    let meta = cfg.to_toml();
    let reason = resume_training(&mut model, trainer, train, val, out_dir, Some(&meta), on_log)?;
    Ok((model, reason))
}

/// Continues training from `trainer`'s state; see [`train_model`].
pub fn resume_training(
    model: &mut Model,
    mut trainer: Trainer,
    train: &[EncodedSequence],
    val: &[EncodedSequence],
    out_dir: Option<&Path>,
    metadata: Option<&str>,
    on_log: &mut dyn FnMut(&LogEntry),
) -> anyhow::Result<StopReason> {
    let mut log_file = match out_dir {
        Some(dir) => Some(
            std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(dir.join("train.jsonl"))?,
        ),
        None => None,
    };
    let mut write_err: Option<std::io::Error> = None;
    let mut log = |e: &LogEntry| {
        on_log(e);
        if let Some(f) = log_file.as_mut() {
            use std::io::Write;
            let line = serde_json::to_string(e).expect("log entry serializes");
            if let Err(err) = writeln!(f, "{line}") {
                write_err.get_or_insert(err);
            }
        }
    };
    let mut on_epoch = |m: &Model, t: &Trainer| -> treemath_model::Result<()> {
        if let Some(dir) = out_dir {
            checkpoint::save(&dir.join("last.ckpt"), m, Some(t), metadata)?;
        }
        Ok(())
    };
    let reason = trainer.fit(model, train, val, &mut log, &mut on_epoch)?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    if let Some(dir) = out_dir {
        checkpoint::save(&dir.join("best.ckpt"), model, None, metadata)?;
    }
    Ok(reason)
}

/// A generated continuation: its formulas as trees, and as mixed text.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Text with `$...$` math. A formula the LaTeX printer cannot express
    /// is written as [`UNPRINTABLE`] outside any math span.
    pub text: String,
    pub formulas: Vec<OptNode>,
}

pub const UNPRINTABLE: &str = "[unprintable formula]";

pub fn render_prediction(mixed: &MixedSequence) -> treemath_core::Result<Prediction> {
    let mut text = String::new();
    let mut formulas = Vec::new();
    for region in mixed.regions()? {
        match region {
            Region::Text(t) => text.push_str(&t),
            Region::Formula(tree) => {
                match tree_to_latex(&tree) {
                    Ok(latex) => {
                        text.push('$');
                        text.push_str(&latex);
                        text.push('$');
                    }
                    Err(_) => text.push_str(UNPRINTABLE),
                }
                formulas.push(tree);
            }
        }
    }
    Ok(Prediction {
        text: text.trim().to_owned(),
        formulas,
    })
}

/// Continuation of each prompt under `cfg`.
pub fn predict(model: &Model, prompts: &[EncodedSequence], cfg: &GenerateConfig) -> anyhow::Result<Vec<Prediction>> {
    prompts
        .par_iter()
        .map(|p| {
            let generation = model.generate(p, cfg)?;
            let mixed = decode(generation.continuation(), &model.vocab)?;
            Ok(render_prediction(&mixed)?)
        })
        .collect()
}

/// Scores predictions on their trees against gold lines.
pub fn score_generated(preds: &[Prediction], gold: &[String], vocab: &Vocab, opts: &EvalOptions) -> treemath_core::Result<EvalReport> {
    if preds.len() != gold.len() {
        return Err(treemath_core::Error::Misaligned {
            pred: preds.len(),
            gold: gold.len(),
        });
    }
    let scores = preds
        .par_iter()
        .zip(gold.par_iter())
        .map(|(p, g)| score_formulas(&p.formulas, &p.text, g, vocab, opts))
        .collect::<treemath_core::Result<Vec<_>>>()?;
    Ok(aggregate(&scores))
}

/// Encodes the problem text of each example as a generation prompt.
pub fn encode_prompts(examples: &[Example], vocab: &Vocab, opts: NormalizeOptions) -> Result<Vec<EncodedSequence>, CliError> {
    examples
        .par_iter()
        .map(|e| encode_document(&e.prompt(), vocab, opts, false).map_err(|err| CliError::Data(err.to_string())))
        .collect()
}

/// Results of one train-and-evaluate run.
pub struct RunOutcome {
    pub model: Model,
    pub stop: StopReason,
    pub report: EvalReport,
    pub untrained: Option<EvalReport>,
    pub dropped: usize,
}

/// Builds a vocabulary on the training split, trains, then generates for
/// the test split and scores against the gold equations. With
/// `score_untrained`, the freshly initialized model is scored too.
pub fn run_split(
    cfg: &RunConfig,
    splits: &Splits,
    score_untrained: bool,
    out_dir: Option<&Path>,
    on_log: &mut dyn FnMut(&LogEntry),
) -> anyhow::Result<RunOutcome> {
    let opts = normalize_options(cfg);
    let docs = |ex: &[Example]| ex.iter().map(Example::document).collect::<Vec<_>>();
    let vocab = build_vocab(&docs(&splits.train), &cfg.data, cfg.ablation.number_trees)?;
    let (train, d1) = fit_to_length(encode_documents(&docs(&splits.train), &vocab, opts)?, cfg.model.max_seq);
    let (val, d2) = fit_to_length(encode_documents(&docs(&splits.val), &vocab, opts)?, cfg.model.max_seq);
    let prompts = encode_prompts(&splits.test, &vocab, opts)?;
    let gold: Vec<String> = splits.test.iter().map(Example::gold).collect();
    let gen = generate_config(&cfg.generate, None);
    let eval_opts = EvalOptions {
        normalize: opts,
        ..EvalOptions::default()
    };
    let untrained = if score_untrained {
        let fresh = Model::new(cfg.model.clone(), cfg.ablation, vocab.clone())?;
        let preds = predict(&fresh, &prompts, &gen)?;
        Some(score_generated(&preds, &gold, &vocab, &eval_opts)?)
    } else {
        None
    };
    let (model, stop) = train_model(cfg, vocab, &train, &val, out_dir, on_log)?;
    let preds = predict(&model, &prompts, &gen)?;
    let report = score_generated(&preds, &gold, &model.vocab, &eval_opts)?;
    Ok(RunOutcome {
        model,
        stop,
        report,
        untrained,
        dropped: d1 + d2,
    })
}
