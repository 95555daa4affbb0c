//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --test acceptance -- 1 6`.

use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treemath_cli::commands::{check_ordering, run, Cli};
use treemath_cli::experiment::{encode_document, run_split};
use treemath_cli::RunConfig;
use treemath_core::corpus::{generate_corpus, split, Example};
use treemath_core::eval::{aggregate, score_formulas, ted, EvalOptions, EvalReport};
use treemath_core::sample::{random_tree, TreeShape};
use treemath_core::segment::parse_formula;
use treemath_core::vocab::{MathVocab, TextVocab, EOS_ID};
use treemath_core::{
    compute_positions, delinearize, linearize, tree_to_latex, MathItem, MathToken, NormalizeOptions, OptNode, TokenKind, Vocab,
};
use treemath_model::{Ablation, GenerateConfig, Model, ModelConfig, Strategy};

#[path = "../../core/tests/support/ted_oracle.rs"]
mod ted_oracle;

#[path = "../../core/tests/support/mask_rules.rs"]
mod mask_rules;

#[allow(dead_code)]
#[path = "../../model/tests/support/gradcheck.rs"]
mod gradcheck;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn round_trips() -> Outcome {
    let start = Instant::now();
    let shape = TreeShape::default();
    let mut nodes = 0;
    for seed in 0..10_000u64 {
        let t = random_tree(&mut ChaCha8Rng::seed_from_u64(seed), shape);
        ensure(t.depth() <= 6 && t.max_width() <= 8, || format!("seed {seed}: tree exceeds the sampled shape"))?;
        let items = linearize(&t);
        nodes += items.len();
        let back = delinearize(&items).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(back == t, || format!("seed {seed}: delinearize(linearize(t)) != t"))?;
        let expected: Vec<_> = compute_positions(&t).into_iter().map(|(_, p)| p).collect();
        let emitted: Vec<_> = items.into_iter().map(|i| i.position).collect();
        ensure(emitted == expected, || format!("seed {seed}: positions disagree"))?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:.2?}, limit 10 s"))?;
    Ok(format!("10000 trees, {nodes} nodes, {took:.2?}"))
}

fn mask_rules() -> Outcome {
    let cases = mask_rules::cases();
    let n = cases.len();
    let failures: Vec<String> = cases.into_iter().filter_map(|(_, r)| r.err()).collect();
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("{n} rule cases, allowed sets exact"))
}

/// Prompts for the random-model generations: plain text, text followed by
/// a formula start, and documents cut off inside a formula.
fn generation_prompts(vocab: &Vocab, n: usize) -> Vec<treemath_core::EncodedSequence> {
    let examples = generate_corpus(n, 7);
    let opts = NormalizeOptions::default();
    let fs = vocab.special_id(TokenKind::StartFormula);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    examples
        .iter()
        .enumerate()
        .map(|(i, e)| match i % 3 {
            0 => encode_document(&e.problem, vocab, opts, false).unwrap(),
            1 => {
                let mut p = encode_document(&e.problem, vocab, opts, false).unwrap();
                p.push(fs, None, treemath_core::TypeTag::Control);
                p
            }
            _ => {
                let full = encode_document(&e.document(), vocab, opts, false).unwrap();
                let start = full.ids.iter().rposition(|&id| id == fs).unwrap();
                // Keep F^s and between zero and all-but-one tree tokens.
                let tree_len = full.len() - start - 2;
                full.truncated(start + 1 + rng.random_range(0..tree_len))
            }
        })
        .collect()
}

/// Splits a finished generation into its formula spans and checks each.
/// Returns the span count and how many had agreeing positions.
fn check_generation(seq: &treemath_core::EncodedSequence, vocab: &Vocab) -> Result<(usize, usize), String> {
    ensure(seq.ids.last() == Some(&EOS_ID), || "no final end-of-sequence token".into())?;
    let fs = vocab.special_id(TokenKind::StartFormula);
    let fe = vocab.special_id(TokenKind::EndFormula);
    let (mut spans, mut agreements) = (0, 0);
    let mut i = 0;
    while i < seq.len() {
        if seq.ids[i] != fs {
            i += 1;
            continue;
        }
        let close = (i + 1..seq.len())
            .find(|&j| seq.ids[j] == fe)
            .ok_or_else(|| format!("formula at {i} never closed"))?;
        let items: Vec<MathItem> = (i + 1..close)
            .map(|j| {
                let id = seq.ids[j];
                // Pieces of an out-of-vocabulary name are text ids.
                let token = if id < vocab.text_size() {
                    MathToken::text(vocab.text.token_str(id).unwrap_or_default())
                } else {
                    vocab.math_token(id).ok_or(format!("non-math id {id} in formula"))?
                };
                let position = seq.positions[j].clone().ok_or("tree token without a position")?;
                Ok(MathItem { token, position })
            })
            .collect::<Result<_, String>>()?;
        let tree = delinearize(&items).map_err(|e| format!("span at {i}: {e}"))?;
        tree.check_caps().map_err(|e| format!("span at {i}: {e}"))?;
        spans += 1;
        let expected: Vec<_> = compute_positions(&tree).into_iter().map(|(_, p)| p).collect();
        let inferred: Vec<_> = items.into_iter().map(|it| it.position).collect();
        agreements += usize::from(inferred == expected);
        i = close + 1;
    }
    Ok((spans, agreements))
}

struct GenerationStats {
    generations: usize,
    spans: usize,
    agreements: usize,
    failures: Vec<String>,
    took: Duration,
}

fn random_generations() -> GenerationStats {
    let texts: Vec<String> = generate_corpus(500, 3).iter().map(Example::document).collect();
    let vocab = Vocab::new(TextVocab::train(texts.iter().map(String::as_str), 500, 2), MathVocab::default());
    let config = ModelConfig { seed: 21, ..ModelConfig::desk() };
    let model = Model::new(config, Ablation::default(), vocab).unwrap();
    let prompts = generation_prompts(&model.vocab, 1000);
    let k = model.vocab.size();
    let mut stats = GenerationStats { generations: 0, spans: 0, agreements: 0, failures: vec![], took: Duration::ZERO };
    let start = Instant::now();
    for (i, prompt) in prompts.iter().enumerate() {
        let cfg = GenerateConfig {
            strategy: Strategy::TopK { k, seed: i as u64 },
            max_len: 96,
        };
        stats.generations += 1;
        let outcome = model
            .generate(prompt, &cfg)
            .map_err(|e| e.to_string())
            .and_then(|g| check_generation(&g.sequence, &model.vocab));
        match outcome {
            Ok((s, a)) => {
                stats.spans += s;
                stats.agreements += a;
            }
            Err(e) => stats.failures.push(format!("generation {i}: {e}")),
        }
    }
    stats.took = start.elapsed();
    stats
}

fn decoding_soundness(stats: &GenerationStats) -> Outcome {
    ensure(stats.failures.is_empty(), || format!("{} failures, first: {}", stats.failures.len(), stats.failures[0]))?;
    ensure(stats.spans >= 500, || format!("only {} formula spans generated", stats.spans))?;
    Ok(format!(
        "{} generations in {:.1?}, {} formula spans, all well-formed within caps",
        stats.generations, stats.took, stats.spans
    ))
}

fn position_agreement(stats: &GenerationStats) -> Outcome {
    ensure(stats.failures.is_empty(), || "generations failed; see criterion 3".into())?;
    ensure(stats.agreements == stats.spans, || format!("{} of {} spans agree", stats.agreements, stats.spans))?;
    Ok(format!("{} of {} spans agree", stats.agreements, stats.spans))
}

fn gradient_checks() -> Outcome {
    let (mut model, seq) = gradcheck::full_model();
    let report = gradcheck::check(&mut model, &seq, 12);
    for name in gradcheck::REQUIRED {
        ensure(report.iter().any(|(n, _)| n == name), || format!("{name} not checked"))?;
    }
    let (worst_name, worst) = report
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(n, e)| (n.clone(), *e))
        .unwrap();
    ensure(worst < 1e-4, || format!("{worst_name}: relative error {worst:.2e}"))?;
    Ok(format!("{} tensors, worst relative error {worst:.2e} ({worst_name})", report.len()))
}

fn ted_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut differing = 0;
    for i in 0..500 {
        let a = ted_oracle::small_tree(&mut rng, 6);
        let b = ted_oracle::small_tree(&mut rng, 6);
        let (fast, slow) = (ted(&a, &b), ted_oracle::brute_force_ted(&a, &b));
        ensure(fast == slow, || format!("pair {i}: {fast} vs exhaustive {slow} for {a} / {b}"))?;
        differing += usize::from(slow > 0);
    }
    Ok(format!("500 pairs exact ({differing} at non-zero distance)"))
}

/// Predictions derived from gold trees: exact copies, commuted operands,
/// altered numbers and empty answers.
fn perturbation_report() -> Result<EvalReport, String> {
    let vocab = Vocab::default();
    let opts = EvalOptions::default();
    let mut scores = Vec::new();
    for (i, e) in generate_corpus(500, 11).iter().enumerate() {
        let gold = e.gold();
        let tree = parse_formula(&e.equation, 0, &vocab, opts.normalize).map_err(|err| err.to_string())?;
        let pred = match i % 4 {
            0 => Some(tree),
            1 => Some(commuted(&tree)),
            2 => Some(altered(&tree)),
            _ => None,
        };
        let formulas: Vec<OptNode> = pred.into_iter().collect();
        let text = formulas
            .first()
            .map(|t| format!("${}$", tree_to_latex(t).unwrap_or_default()))
            .unwrap_or_default();
        scores.push(score_formulas(&formulas, &text, &gold, &vocab, &opts).map_err(|err| err.to_string())?);
    }
    Ok(aggregate(&scores))
}

fn commuted(t: &OptNode) -> OptNode {
    let mut out = t.clone();
    for node in out.children.iter_mut() {
        if matches!(node.token.symbol.as_str(), "+" | "*") && node.children.len() == 3 {
            node.children.swap(0, 1);
        }
    }
    out
}

fn altered(t: &OptNode) -> OptNode {
    fn bump(n: &mut OptNode) -> bool {
        if n.kind() == TokenKind::Digit && n.token.symbol != "." {
            let d = n.token.symbol.chars().next().unwrap().to_digit(10).unwrap();
            n.token.symbol = char::from_digit((d + 1) % 10, 10).unwrap().to_string();
            return true;
        }
        n.children.iter_mut().any(bump)
    }
    let mut out = t.clone();
    bump(&mut out);
    out
}

fn metric_ordering(runs: &[(String, EvalReport)]) -> Outcome {
    let perturbed = perturbation_report()?;
    check_ordering(&perturbed).map_err(|e| format!("perturbations: {e}"))?;
    ensure(perturbed.solved > perturbed.tree_matches, || "commuted answers were not counted as solved".into())?;
    for (name, r) in runs {
        check_ordering(r).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!(
        "{} trained or untrained runs checked; perturbations: tree_match {:.3} <= solve {:.3}",
        runs.len(),
        perturbed.tree_match_rate,
        perturbed.solve_rate
    ))
}

fn desk_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.optim.lr = 1e-3;
    cfg.train.max_epochs = 6;
    cfg.generate.max_len = 64;
    cfg
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn desk_learning(runs: &mut Vec<(String, EvalReport)>) -> Outcome {
    let examples = generate_corpus(5000, 1);
    let splits = split(&examples);
    let (mut full, mut off, mut untrained) = (vec![], vec![], vec![]);
    for seed in 1..=3u64 {
        let cfg = desk_config().with_seed(seed);
        let start = Instant::now();
        let a = run_split(&cfg, &splits, true, None, &mut |_| {}).map_err(|e| e.to_string())?;
        let took_full = start.elapsed();
        let mut ablated = cfg.clone();
        ablated.ablation.tree_positions = false;
        let b = run_split(&ablated, &splits, false, None, &mut |_| {}).map_err(|e| e.to_string())?;
        let u = a.untrained.expect("requested");
        println!(
            "    seed {seed}: full {:.4} ({:?}, {took_full:.0?})  tpe-off {:.4} ({:?})  untrained {:.4}",
            a.report.tree_match_rate, a.stop, b.report.tree_match_rate, b.stop, u.tree_match_rate
        );
        full.push(a.report.tree_match_rate);
        off.push(b.report.tree_match_rate);
        untrained.push(u.tree_match_rate);
        runs.push((format!("seed {seed} full"), a.report));
        runs.push((format!("seed {seed} tpe-off"), b.report));
        runs.push((format!("seed {seed} untrained"), u));
    }
    let (f, o, u) = (mean(&full), mean(&off), mean(&untrained));
    let summary = format!("mean Tree Match over 3 seeds: full {f:.4}, tpe-off {o:.4}, untrained {u:.4}");
    ensure(f > u && f > o, || summary.clone())?;
    Ok(summary)
}

fn init_proximity() -> Outcome {
    let docs: Vec<String> = generate_corpus(1000, 5).iter().map(Example::document).collect();
    let data = treemath_cli::config::DataConfig::default();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for number_trees in [true, false] {
        let vocab = treemath_cli::experiment::build_vocab(&docs, &data, number_trees).map_err(|e| e.to_string())?;
        for seed in 1..=3 {
            let cfg = ModelConfig { seed, ..ModelConfig::desk() };
            let ablation = Ablation { number_trees, ..Ablation::default() };
            let m = Model::new(cfg, ablation, vocab.clone()).map_err(|e| e.to_string())?;
            let text = &m.params.tensors[m.layout.text_emb];
            for local in 0..m.vocab.math.size() {
                let token = m.vocab.math.local_token(local).unwrap();
                if token.kind.is_special() {
                    continue;
                }
                let rendering = Vocab::text_rendering(&token).ok_or(format!("{token} has no text form"))?;
                let ids = m.vocab.text.tokenize(rendering);
                let mut avg = vec![0.0; m.config.d_model];
                for &id in &ids {
                    for (a, x) in avg.iter_mut().zip(text.row(id as usize).iter()) {
                        *a += x / ids.len() as f64;
                    }
                }
                let emb = m.math_token_embed(&token).ok_or(format!("{token} has no embedding"))?;
                let diff: f64 = emb.iter().zip(&avg).map(|(e, a)| (e - a).powi(2)).sum::<f64>().sqrt();
                let norm: f64 = avg.iter().map(|a| a * a).sum::<f64>().sqrt();
                let rel = diff / norm;
                ensure(rel < 0.05, || format!("{token}: relative distance {rel:.4}"))?;
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} symbol embeddings over 6 models, worst relative distance {worst:.2e}"))
}

fn cli(args: &[&str]) -> Result<String, String> {
    let cli = Cli::try_parse_from(std::iter::once("treemath").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    let (mut out, mut log) = (Vec::new(), Vec::new());
    run(cli, &mut out, &mut log).map_err(|e| format!("{e:#}"))?;
    Ok(String::from_utf8(out).unwrap())
}

fn pipeline_fixture() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let vocab = Vocab::new(TextVocab::from_words(["new", "velocity"]).unwrap(), MathVocab::default());
    vocab.save(Path::new(&path("vocab.json"))).map_err(|e| e.to_string())?;
    std::fs::write(path("doc.txt"), "The $newvelocity = 9.8t$ here.\n").map_err(|e| e.to_string())?;

    let report = cli(&["inspect", "newvelocity = 9.8t", "--vocab", &path("vocab.json")])?;
    cli(&[
        "ingest",
        "--input",
        &path("doc.txt"),
        "--out",
        &path("doc.tmds"),
        "--vocab",
        &path("vocab.json"),
        "--trees-out",
        &path("trees.jsonl"),
    ])?;
    let trees = std::fs::read_to_string(path("trees.jsonl")).unwrap().replace(&path("doc.txt"), "doc.txt");

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let read = |n: &str| std::fs::read_to_string(golden.join(n)).map_err(|e| format!("{n}: {e}"));
    ensure(report == read("newvelocity.inspect.txt")?, || "inspect output differs from golden file".into())?;
    ensure(trees == read("newvelocity.trees.jsonl")?, || "ingest tree dump differs from golden file".into())?;

    let v: serde_json::Value = serde_json::from_str(&trees).map_err(|e| e.to_string())?;
    let tree = OptNode::from_json(&v["tree"])?;
    let oov = &tree.children[0];
    let pieces: Vec<&str> = oov.children.iter().map(|c| c.token.symbol.as_str()).collect();
    ensure(oov.kind() == TokenKind::OovHead && pieces == ["new", "velocity", ""], || format!("oov sub-tree {oov}"))?;
    let num = &tree.children[1].children[0];
    let digits: String = num.children.iter().map(|c| c.token.symbol.as_str()).collect();
    ensure(num.kind() == TokenKind::NumHead && digits == "9.8", || format!("number sub-tree {num}"))?;
    let ends = tree.preorder().iter().filter(|n| n.kind() == TokenKind::End).count();
    ensure(ends == 4, || format!("{ends} End nodes, expected 4"))?;
    let latex = tree_to_latex(&tree).map_err(|e| e.to_string())?;
    ensure(latex == "newvelocity=9.8t", || format!("LaTeX {latex}"))?;
    ensure(v["tree"][0] == "operator" && v["tree"][1] == "=", || "3-tuple JSON root".into())?;
    Ok(format!("golden files match; {tree}; LaTeX {latex}"))
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let on = |n: u32| wanted.is_empty() || wanted.contains(&n);
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |n: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let verdict = if outcome.is_ok() { "PASS" } else { "FAIL" };
        let detail = match &outcome {
            Ok(d) | Err(d) => d,
        };
        println!("criterion {n:>2} {verdict} {name}: {detail} [{:.1?}]", start.elapsed());
        results.push((n, name, outcome));
    };

    if on(1) {
        record(1, "round trips", &mut round_trips);
    }
    if on(2) {
        record(2, "mask rules", &mut mask_rules);
    }
    if on(3) || on(4) {
        let stats = random_generations();
        if on(3) {
            record(3, "decoding soundness", &mut || decoding_soundness(&stats));
        }
        if on(4) {
            record(4, "position inference", &mut || position_agreement(&stats));
        }
    }
    if on(5) {
        record(5, "gradient checks", &mut gradient_checks);
    }
    if on(6) {
        record(6, "TED oracle", &mut ted_oracle);
    }
    let mut runs = Vec::new();
    if on(8) {
        record(8, "desk-scale learning", &mut || desk_learning(&mut runs));
    }
    if on(7) {
        record(7, "metric ordering", &mut || metric_ordering(&runs));
    }
    if on(9) {
        record(9, "embedding init proximity", &mut init_proximity);
    }
    if on(10) {
        record(10, "pipeline fixture", &mut pipeline_fixture);
    }

    results.sort_by_key(|r| r.0);
    println!("\nacceptance summary");
    for (n, name, outcome) in &results {
        println!("  {n:>2} {} {name}", if outcome.is_ok() { "PASS" } else { "FAIL" });
    }
    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
