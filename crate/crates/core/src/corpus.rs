//! Synthetic word-problem corpus: each example pairs a short problem with
//! a single-variable equation `unknown = expression`.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub problem: String,
    pub equation: String,
}

impl Example {
    /// Training document: the problem followed by the equation in `$...$`.
    pub fn document(&self) -> String {
        format!("{} ${}$", self.problem, self.equation)
    }

    /// Text the model is conditioned on before generating the equation.
    pub fn prompt(&self) -> String {
        format!("{} ", self.problem)
    }

    pub fn gold(&self) -> String {
        format!("${}$", self.equation)
    }
}

/// A problem template: draws slot values and fills text and equation.
pub struct ProblemTemplate {
    pub name: &'static str,
    pub fill: fn(&mut ChaCha8Rng) -> Example,
}

fn ex(problem: String, equation: String) -> Example {
    Example { problem, equation }
}

fn int(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> i64 {
    rng.random_range(lo..=hi)
}

/// A one-decimal number such as `2.5`, never an integer.
fn dec(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> String {
    let whole = int(rng, lo, hi);
    let tenth = int(rng, 1, 9);
    format!("{whole}.{tenth}")
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).copied().unwrap_or_default()
}

const NAMES: &[&str] = &["Tom", "Anna", "Sam", "Maria", "Leo", "Priya", "Ken", "Zoe"];
const ITEMS: &[&str] = &["apples", "pens", "stickers", "marbles", "cards", "books"];

pub fn templates() -> Vec<ProblemTemplate> {
    vec![
        ProblemTemplate { name: "add", fill: |r| {
            let (who, item, a, b) = (pick(r, NAMES), pick(r, ITEMS), int(r, 2, 99), int(r, 2, 99));
            ex(format!("{who} has {a} {item} and gets {b} more. How many {item} are there now?"), format!("x={a}+{b}"))
        }},
        ProblemTemplate { name: "subtract", fill: |r| {
            let (item, b) = (pick(r, ITEMS), int(r, 2, 60));
            let a = b + int(r, 1, 90);
            ex(format!("A shop had {a} {item} and sold {b}. How many {item} are left?"), format!("x={a}-{b}"))
        }},
        ProblemTemplate { name: "multiply", fill: |r| {
            let (a, b) = (int(r, 2, 30), int(r, 2, 20));
            ex(format!("Each box holds {a} books. How many books are in {b} boxes?"), format!("x={a}*{b}"))
        }},
        ProblemTemplate { name: "share", fill: |r| {
            let (b, q) = (int(r, 2, 12), int(r, 2, 15));
            let a = b * q;
            ex(format!("{a} candies are shared equally among {b} children. How many candies does each child get?"), format!("x={a}/{b}"))
        }},
        ProblemTemplate { name: "distance", fill: |r| {
            let (v, t) = (int(r, 20, 120), int(r, 2, 9));
            ex(format!("A car travels at {v} km per hour for {t} hours. What distance does it cover?"), format!("distance={v}*{t}"))
        }},
        ProblemTemplate { name: "perimeter", fill: |r| {
            let (l, w) = (int(r, 3, 40), int(r, 2, 30));
            ex(format!("A garden is {l} m long and {w} m wide. What is its perimeter?"), format!("perimeter=2*({l}+{w})"))
        }},
        ProblemTemplate { name: "area", fill: |r| {
            let (l, w) = (int(r, 3, 40), int(r, 2, 30));
            ex(format!("A rug is {l} m long and {w} m wide. What is its area?"), format!("area={l}*{w}"))
        }},
        ProblemTemplate { name: "discount", fill: |r| {
            let (p, d) = (int(r, 10, 200), 5 * int(r, 1, 9));
            ex(format!("A coat costs {p} dollars and is discounted by {d} percent. What is the new price?"), format!("x={p}*(1-{d}/100)"))
        }},
        ProblemTemplate { name: "shopping", fill: |r| {
            let (a, b, n, m) = (int(r, 2, 9), int(r, 1, 5), int(r, 2, 9), int(r, 2, 9));
            ex(format!("A notebook costs {a} dollars and a pen costs {b} dollars. What do {n} notebooks and {m} pens cost?"), format!("cost={n}*{a}+{m}*{b}"))
        }},
        ProblemTemplate { name: "fractions_left", fill: |r| {
            const FIRST: &[(i64, i64)] = &[(2, 5), (1, 4), (1, 3), (3, 8), (1, 6)];
            const SECOND: &[(i64, i64)] = &[(1, 3), (1, 5), (1, 4), (1, 6), (2, 9)];
            let (p1, q1) = *FIRST.choose(r).unwrap();
            let (p2, q2) = *SECOND.choose(r).unwrap();
            let left = int(r, 20, 400);
            ex(
                format!("A farmer sold {p1}/{q1} of his eggs on Monday and {p2}/{q2} on Tuesday, leaving {left} eggs. How many eggs did he have at first?"),
                format!("x={left}/(1-({p1}/{q1})-({p2}/{q2}))"),
            )
        }},
        ProblemTemplate { name: "average", fill: |r| {
            let (a, b, c) = (int(r, 50, 100), int(r, 50, 100), int(r, 50, 100));
            ex(format!("The test scores are {a}, {b} and {c}. What is the average score?"), format!("x=({a}+{b}+{c})/3"))
        }},
        ProblemTemplate { name: "decimal_volume", fill: |r| {
            let (d, n) = (dec(r, 0, 4), int(r, 2, 12));
            ex(format!("A bottle holds {d} liters. How many liters do {n} bottles hold?"), format!("x={d}*{n}"))
        }},
        ProblemTemplate { name: "speed", fill: |r| {
            let (d, t) = (int(r, 30, 600), int(r, 2, 8));
            ex(format!("A train covers {d} km in {t} hours. What is its speed?"), format!("speed={d}/{t}"))
        }},
        ProblemTemplate { name: "age", fill: |r| {
            let (who, a, k, b) = (pick(r, NAMES), int(r, 4, 15), int(r, 2, 4), int(r, 1, 9));
            ex(format!("{who} is {a} years old. Their uncle is {k} times as old plus {b} years. How old is the uncle?"), format!("x={k}*{a}+{b}"))
        }},
        ProblemTemplate { name: "savings", fill: |r| {
            let (who, a, w) = (pick(r, NAMES), int(r, 3, 25), int(r, 2, 12));
            let s = int(r, 1, a * w);
            ex(format!("{who} saves {a} dollars each week for {w} weeks and then spends {s} dollars. How much is left?"), format!("x={a}*{w}-{s}"))
        }},
        ProblemTemplate { name: "boys", fill: |r| {
            let q = int(r, 2, 6);
            let p = int(r, 1, q - 1);
            let n = q * int(r, 3, 10);
            let frac = if r.random_bool(0.5) { format!("\\frac{{{p}}}{{{q}}}") } else { format!("{p}/{q}") };
            ex(format!("A class has {n} students and {p}/{q} of them are girls. How many boys are there?"), format!("x={n}*(1-{frac})"))
        }},
        ProblemTemplate { name: "square", fill: |r| {
            let s = int(r, 2, 30);
            ex(format!("A square tile has sides of {s} cm. What is its area?"), format!("area={s}^2"))
        }},
        ProblemTemplate { name: "temperature", fill: |r| {
            let (a, b) = (int(r, 1, 30), int(r, 1, 40));
            ex(format!("The temperature was {a} degrees and fell by {b} degrees. What is the temperature now?"), format!("x={a}-{b}"))
        }},
        ProblemTemplate { name: "pool", fill: |r| {
            let b = int(r, 1, 10);
            let a = b + int(r, 1, 10);
            let v = int(r, 50, 900);
            ex(format!("A pool fills at {a} liters per minute and drains at {b} liters per minute. How many minutes until it holds {v} liters?"), format!("x={v}/({a}-{b})"))
        }},
        ProblemTemplate { name: "tax", fill: |r| {
            let (n, p, t) = (int(r, 2, 9), dec(r, 1, 20), dec(r, 0, 2));
            ex(format!("A ticket costs {p} dollars plus a fee of {t} dollars. What do {n} tickets cost?"), format!("cost={n}*({p}+{t})"))
        }},
    ]
}

/// Deterministic corpus: example `i` is drawn from its own ChaCha stream
/// under `seed`, so output does not depend on thread scheduling.
pub fn generate_corpus(n: usize, seed: u64) -> Vec<Example> {
    let templates = templates();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let t = &templates[rng.random_range(0..templates.len())];
            (t.fill)(&mut rng)
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub test: Vec<Example>,
}

/// 80/10/10 split by index.
pub fn split(examples: &[Example]) -> Splits {
    let n = examples.len();
    let test_start = n - n / 10;
    let val_start = test_start - n / 10;
    Splits {
        train: examples[..val_start].to_vec(),
        val: examples[val_start..test_start].to_vec(),
        test: examples[test_start..].to_vec(),
    }
}

/// Fold `fold` of a `k`-fold rotation: one contiguous chunk is the test
/// set and 10% of the remainder is held out for validation.
pub fn fold_split(examples: &[Example], k: usize, fold: usize) -> Splits {
    assert!(k > 0 && fold < k, "fold {fold} out of range for {k} folds");
    let n = examples.len();
    let (lo, hi) = (fold * n / k, (fold + 1) * n / k);
    let test = examples[lo..hi].to_vec();
    let rest: Vec<Example> = examples[..lo].iter().chain(&examples[hi..]).cloned().collect();
    let val_start = rest.len() - rest.len() / 10;
    Splits {
        train: rest[..val_start].to_vec(),
        val: rest[val_start..].to_vec(),
        test,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate_expression, Bindings};
    use crate::latex::tree_to_latex;
    use crate::normalize::{normalize_tree, NormalizeOptions};
    use crate::parse::parse_math;
    use crate::segment::segment_regions;
    use crate::vocab::Vocab;

    #[test]
    fn deterministic() {
        assert_eq!(generate_corpus(300, 9), generate_corpus(300, 9));
        assert_ne!(generate_corpus(50, 9), generate_corpus(50, 10));
    }

    #[test]
    fn every_equation_parses_evaluates_and_reprints() {
        let vocab = Vocab::default();
        let opts = NormalizeOptions::default();
        for e in generate_corpus(2000, 1) {
            let raw = parse_math(&e.equation).unwrap();
            evaluate_expression(&raw, &Bindings::new()).unwrap();
            let norm = normalize_tree(&raw, &vocab, opts).unwrap();
            let printed = tree_to_latex(&norm).unwrap();
            let again = normalize_tree(&parse_math(&printed).unwrap(), &vocab, opts).unwrap();
            assert_eq!(again, norm, "{} printed as {printed}", e.equation);
            let seq = segment_regions(&e.document(), &vocab, opts).unwrap();
            assert_eq!(seq.formulas().unwrap(), vec![norm]);
            assert!(!e.problem.contains('$'));
        }
    }

    #[test]
    fn all_templates_used() {
        let corpus = generate_corpus(2000, 3);
        let eqs: Vec<_> = corpus.iter().map(|e| e.equation.as_str()).collect();
        assert!(eqs.iter().any(|e| e.starts_with("distance=")));
        assert!(eqs.iter().any(|e| e.contains("/(1-(")));
        assert!(eqs.iter().any(|e| e.contains('.')));
    }

    #[test]
    fn split_sizes() {
        let c = generate_corpus(1000, 0);
        let s = split(&c);
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (800, 100, 100));
        let f = fold_split(&c, 5, 2);
        assert_eq!((f.train.len(), f.val.len(), f.test.len()), (720, 80, 200));
        assert_eq!(f.test[0], c[400]);
    }
}
