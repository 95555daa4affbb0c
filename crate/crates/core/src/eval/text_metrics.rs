//! BLEU-4 and ROUGE-L over token sequences.
//!
//! BLEU uses floor smoothing: an order with no matches scores `0.1 / total`
//! instead of zero. Orders longer than the candidate are skipped (effective
//! order), so short identical pairs still score 100.

use std::collections::HashMap;

pub const MAX_ORDER: usize = 4;
const FLOOR: f64 = 0.1;

/// Splits LaTeX-ish text into metric tokens: `\commands`, alphanumeric runs,
/// and single punctuation characters. Whitespace is dropped.
pub fn metric_tokens(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut chars = s.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        let mut end = start + c.len_utf8();
        let word = |ch: char| ch.is_alphanumeric();
        if c == '\\' || word(c) {
            if c == '\\' && chars.peek().is_some_and(|&(_, n)| !n.is_alphabetic()) {
                let (i, n) = chars.next().unwrap();
                end = i + n.len_utf8();
            } else {
                while let Some(&(i, n)) = chars.peek() {
                    if !word(n) {
                        break;
                    }
                    end = i + n.len_utf8();
                    chars.next();
                }
            }
        }
        out.push(&s[start..end]);
    }
    out
}

/// Sufficient statistics for BLEU: clipped matches and totals per order,
/// plus candidate and reference lengths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub cand_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn new<T: Eq + std::hash::Hash>(candidate: &[T], reference: &[T]) -> BleuStats {
        let mut stats = BleuStats {
            cand_len: candidate.len(),
            ref_len: reference.len(),
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            if candidate.len() < n {
                break;
            }
            let mut ref_counts: HashMap<&[T], usize> = HashMap::new();
            for g in reference.windows(n) {
                *ref_counts.entry(g).or_default() += 1;
            }
            let mut cand_counts: HashMap<&[T], usize> = HashMap::new();
            for g in candidate.windows(n) {
                *cand_counts.entry(g).or_default() += 1;
            }
            stats.matches[n - 1] = cand_counts
                .iter()
                .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
                .sum();
            stats.totals[n - 1] = candidate.len() + 1 - n;
        }
        stats
    }

    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.cand_len += other.cand_len;
        self.ref_len += other.ref_len;
    }

    /// Score on a 0 to 100 scale.
    pub fn score(&self) -> f64 {
        if self.cand_len == 0 && self.ref_len == 0 {
            return 100.0;
        }
        if self.matches.iter().all(|&m| m == 0) {
            return 0.0;
        }
        let bp = if self.cand_len < self.ref_len {
            (1.0 - self.ref_len as f64 / self.cand_len as f64).exp()
        } else {
            1.0
        };
        let mut log_sum = 0.0;
        let mut order = 0;
        for n in 0..MAX_ORDER {
            if self.totals[n] == 0 {
                break;
            }
            let total = self.totals[n] as f64;
            let p = if self.matches[n] == 0 {
                FLOOR / total
            } else {
                self.matches[n] as f64 / total
            };
            log_sum += p.ln();
            order = n + 1;
        }
        100.0 * bp * (log_sum / order as f64).exp()
    }
}

pub fn bleu4<T: Eq + std::hash::Hash>(candidate: &[T], reference: &[T]) -> f64 {
    BleuStats::new(candidate, reference).score()
}

/// Corpus BLEU from summed statistics over aligned pairs.
pub fn corpus_bleu<T: Eq + std::hash::Hash>(pairs: &[(Vec<T>, Vec<T>)]) -> f64 {
    let mut total = BleuStats::default();
    for (c, r) in pairs {
        total.add(&BleuStats::new(c, r));
    }
    total.score()
}

fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F1 from the longest common subsequence, 0 to 100.
pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T]) -> f64 {
    if candidate.is_empty() && reference.is_empty() {
        return 100.0;
    }
    let lcs = lcs_len(candidate, reference);
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / candidate.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    100.0 * 2.0 * p * r / (p + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identical_and_disjoint() {
        let a = toks("x = 3 + 4");
        assert_eq!(bleu4(&a, &a), 100.0);
        assert_eq!(rouge_l(&a, &a), 100.0);
        let short = toks("x");
        assert_eq!(bleu4(&short, &short), 100.0);
        let b = toks("p q r s t");
        assert_eq!(bleu4(&a, &b), 0.0);
        assert_eq!(rouge_l(&a, &b), 0.0);
    }

    // Reference values from sacrebleu (floor smoothing 0.1, effective order,
    // no tokenization) and rouge-score's ROUGE-L F-measure.
    #[test]
    fn fixtures_match_reference() {
        let cand = toks("the cat sat on the mat today");
        let refr = toks("the cat is on the mat");
        assert!((bleu4(&cand, &refr) - 20.556680845025987).abs() < 0.1);
        assert!((rouge_l(&cand, &refr) - 76.92307692307692).abs() < 1e-9);

        let cand = toks("x = 280 / ( 1 - 2 )");
        let refr = toks("x = 280 / ( 1 - ( 2 / 5 ) )");
        assert!((bleu4(&cand, &refr) - 49.56678178292308).abs() < 0.1);
        assert!((rouge_l(&cand, &refr) - 81.81818181818181).abs() < 1e-9);

        let cand = toks("a b");
        let refr = toks("a c d e");
        assert!((bleu4(&cand, &refr) - 8.226034379839799).abs() < 0.1);
        assert!((rouge_l(&cand, &refr) - 33.33333333333333).abs() < 1e-9);
    }

    #[test]
    fn corpus_fixture() {
        let pairs = vec![
            (toks("the cat sat on the mat today"), toks("the cat is on the mat")),
            (toks("a b"), toks("a c d e")),
            (toks("x = 280 / ( 1 - 2 )"), toks("x = 280 / ( 1 - ( 2 / 5 ) )")),
        ];
        assert!((corpus_bleu(&pairs) - 42.595394408822806).abs() < 0.1);
    }

    #[test]
    fn latex_tokens() {
        assert_eq!(
            metric_tokens("x=\\frac{280}{1-y} ab\\,c"),
            ["x", "=", "\\frac", "{", "280", "}", "{", "1", "-", "y", "}", "ab", "\\,", "c"]
        );
    }
}
