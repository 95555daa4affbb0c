//! Scoring line-aligned prediction and gold documents.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expr::solve_equal;
use super::ted::{ted, ted_collapsed};
use super::text_metrics::{metric_tokens, rouge_l, BleuStats};
use crate::error::{Error, Result};
use crate::latex::{tree_to_latex_with, LatexOptions};
use crate::normalize::NormalizeOptions;
use crate::segment::{parse_formula, split_regions, RawRegion};
use crate::tree::OptNode;
use crate::vocab::Vocab;

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub normalize: NormalizeOptions,
    /// Compare number sub-trees as single leaves when computing TED.
    pub collapse_numbers: bool,
    pub latex: LatexOptions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub lines: usize,
    pub tree_matches: usize,
    pub solved: usize,
    /// Predictions with a formula that failed to parse.
    pub invalid_predictions: usize,
    pub tree_match_rate: f64,
    pub solve_rate: f64,
    pub mean_ted: f64,
    pub bleu4: f64,
    pub rouge_l: f64,
}

/// Per-line outcome before aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct LineScore {
    pub tree_match: bool,
    pub solved: bool,
    pub invalid: bool,
    pub ted: usize,
    pub bleu: BleuStats,
    pub rouge_l: f64,
}

struct Parsed {
    formulas: Vec<OptNode>,
    /// Document with formulas reprinted from their trees.
    rendered: String,
}

fn parse_line(line: &str, vocab: &Vocab, opts: &EvalOptions) -> Result<Parsed> {
    let mut formulas = Vec::new();
    let mut rendered = String::new();
    for region in split_regions(line)? {
        match region {
            RawRegion::Text(t) => rendered.push_str(t),
            RawRegion::Formula(body, offset) => {
                let tree = parse_formula(body, offset, vocab, opts.normalize)?;
                rendered.push('$');
                rendered.push_str(&tree_to_latex_with(&tree, opts.latex)?);
                rendered.push('$');
                formulas.push(tree);
            }
        }
    }
    Ok(Parsed { formulas, rendered })
}

/// Scores one prediction against its gold line. Gold lines must parse;
/// an unparsable prediction scores as a miss with raw text metrics.
pub fn score_line(pred: &str, gold: &str, vocab: &Vocab, opts: &EvalOptions) -> Result<LineScore> {
    let gold = parse_line(gold, vocab, opts)?;
    Ok(match parse_line(pred, vocab, opts) {
        Ok(p) => score_parsed(&p.formulas, &p.rendered, false, &gold, opts),
        Err(_) => score_parsed(&[], pred, true, &gold, opts),
    })
}

/// Scores prediction trees that are already in hand, such as decoder
/// output, against a gold line. `pred_text` is the prediction as text and
/// only feeds the text metrics.
pub fn score_formulas(pred_formulas: &[OptNode], pred_text: &str, gold: &str, vocab: &Vocab, opts: &EvalOptions) -> Result<LineScore> {
    let gold = parse_line(gold, vocab, opts)?;
    Ok(score_parsed(pred_formulas, pred_text, false, &gold, opts))
}

fn score_parsed(pred_formulas: &[OptNode], pred_text: &str, invalid: bool, gold: &Parsed, opts: &EvalOptions) -> LineScore {
    let distance = |a: &OptNode, b: &OptNode| {
        if opts.collapse_numbers {
            ted_collapsed(a, b)
        } else {
            ted(a, b)
        }
    };
    let size = |t: &OptNode| {
        if opts.collapse_numbers {
            t.collapse_numbers().size()
        } else {
            t.size()
        }
    };
    let paired = pred_formulas.len().min(gold.formulas.len());
    let mut total_ted: usize = (0..paired)
        .map(|i| distance(&pred_formulas[i], &gold.formulas[i]))
        .sum();
    total_ted += pred_formulas[paired..].iter().map(size).sum::<usize>();
    total_ted += gold.formulas[paired..].iter().map(size).sum::<usize>();

    let same_count = !invalid && pred_formulas.len() == gold.formulas.len();
    let tree_match = same_count && pred_formulas == gold.formulas.as_slice();
    let solved = same_count
        && pred_formulas
            .iter()
            .zip(&gold.formulas)
            .all(|(p, g)| solve_equal(p, g));

    let cand = metric_tokens(pred_text);
    let refr = metric_tokens(&gold.rendered);
    LineScore {
        tree_match,
        solved,
        invalid,
        ted: total_ted,
        bleu: BleuStats::new(&cand, &refr),
        rouge_l: rouge_l(&cand, &refr),
    }
}

/// Scores aligned prediction and gold lines. Lines are scored in parallel
/// and combined in input order.
pub fn score_predictions<P, G>(pred: &[P], gold: &[G], vocab: &Vocab, opts: &EvalOptions) -> Result<EvalReport>
where
    P: AsRef<str> + Sync,
    G: AsRef<str> + Sync,
{
    if pred.len() != gold.len() {
        return Err(Error::Misaligned {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    let scores = pred
        .par_iter()
        .zip(gold.par_iter())
        .enumerate()
        .map(|(i, (p, g))| {
            score_line(p.as_ref(), g.as_ref(), vocab, opts).map_err(|e| Error::AtLine {
                line: i + 1,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&scores))
}

pub fn aggregate(scores: &[LineScore]) -> EvalReport {
    let n = scores.len();
    let mut report = EvalReport {
        lines: n,
        ..Default::default()
    };
    if n == 0 {
        return report;
    }
    let mut bleu = BleuStats::default();
    let mut ted_sum = 0usize;
    let mut rouge_sum = 0.0;
    for s in scores {
        report.tree_matches += usize::from(s.tree_match);
        report.solved += usize::from(s.solved);
        report.invalid_predictions += usize::from(s.invalid);
        ted_sum += s.ted;
        rouge_sum += s.rouge_l;
        bleu.add(&s.bleu);
    }
    report.tree_match_rate = report.tree_matches as f64 / n as f64;
    report.solve_rate = report.solved as f64 / n as f64;
    report.mean_ted = ted_sum as f64 / n as f64;
    report.bleu4 = bleu.score();
    report.rouge_l = rouge_sum / n as f64;
    report
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>10}", "metric", "value")?;
        writeln!(f, "{:<12} {:>10}", "lines", self.lines)?;
        writeln!(f, "{:<12} {:>10.4}", "tree_match", self.tree_match_rate)?;
        writeln!(f, "{:<12} {:>10.4}", "solve_rate", self.solve_rate)?;
        writeln!(f, "{:<12} {:>10.4}", "mean_ted", self.mean_ted)?;
        writeln!(f, "{:<12} {:>10.2}", "bleu4", self.bleu4)?;
        writeln!(f, "{:<12} {:>10.2}", "rouge_l", self.rouge_l)?;
        write!(f, "{:<12} {:>10}", "invalid", self.invalid_predictions)
    }
}

/// Mean and sample standard deviation of a metric across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len();
        if n == 0 {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        MeanStd { mean, std }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.mean, self.std)
    }
}

/// Mean ± std of every rate across several reports (seeds or folds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub runs: usize,
    pub tree_match_rate: MeanStd,
    pub solve_rate: MeanStd,
    pub mean_ted: MeanStd,
    pub bleu4: MeanStd,
    pub rouge_l: MeanStd,
}

impl AggregateReport {
    pub fn from_reports(reports: &[EvalReport]) -> AggregateReport {
        let of = |f: fn(&EvalReport) -> f64| MeanStd::of(&reports.iter().map(f).collect::<Vec<_>>());
        AggregateReport {
            runs: reports.len(),
            tree_match_rate: of(|r| r.tree_match_rate),
            solve_rate: of(|r| r.solve_rate),
            mean_ted: of(|r| r.mean_ted),
            bleu4: of(|r| r.bleu4),
            rouge_l: of(|r| r.rouge_l),
        }
    }
}

impl fmt::Display for AggregateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "runs         {}", self.runs)?;
        writeln!(f, "tree_match   {}", self.tree_match_rate)?;
        writeln!(f, "solve_rate   {}", self.solve_rate)?;
        writeln!(f, "mean_ted     {}", self.mean_ted)?;
        writeln!(f, "bleu4        {}", self.bleu4)?;
        write!(f, "rouge_l      {}", self.rouge_l)
    }
}
