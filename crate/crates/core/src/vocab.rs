//! Text tokenizer, fixed math vocabulary, and the unified id space.
//!
//! Text ids come first: 256 byte tokens, the end-of-sequence token, then
//! corpus words ranked by frequency. Math ids follow in one contiguous
//! block: the five specials, operators, variables, the 11 digit
//! characters and finally whole-number tokens.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parse::{FUNCTIONS, GREEK};
use crate::token::{MathToken, TokenKind};

pub const BYTE_TOKENS: u32 = 256;
pub const EOS_ID: u32 = 256;
pub const DIGITS: [&str; 11] = ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "."];
pub const SPECIALS: [TokenKind; 5] = [
    TokenKind::StartFormula,
    TokenKind::EndFormula,
    TokenKind::End,
    TokenKind::NumHead,
    TokenKind::OovHead,
];

const MAX_WORD_CHARS: usize = 24;

/// Word-level tokenizer with greedy sub-word and byte fallback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextVocab {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Default for TextVocab {
    fn default() -> Self {
        TextVocab::from_words(Vec::<String>::new()).expect("empty word list is valid")
    }
}

impl TextVocab {
    pub fn from_words<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Result<TextVocab> {
        let words: Vec<String> = words.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.chars().count() < 2 {
                return Err(Error::Vocab(format!("text token {w:?} is shorter than two characters")));
            }
            if index.insert(w.clone(), BYTE_TOKENS + 1 + i as u32).is_some() {
                return Err(Error::Vocab(format!("duplicate text token {w:?}")));
            }
        }
        Ok(TextVocab { words, index })
    }

    /// Builds a frequency-ranked vocabulary from raw text regions.
    pub fn train<'a>(texts: impl IntoIterator<Item = &'a str>, max_words: usize, min_count: usize) -> TextVocab {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for text in texts {
            for piece in pretokenize(text) {
                if piece.chars().count() >= 2 && piece.chars().count() <= MAX_WORD_CHARS {
                    *counts.entry(piece).or_default() += 1;
                }
            }
        }
        let mut ranked: Vec<(&str, usize)> =
            counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(max_words);
        TextVocab::from_words(ranked.into_iter().map(|(w, _)| w.to_owned())).expect("distinct pieces")
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn size(&self) -> u32 {
        BYTE_TOKENS + 1 + self.words.len() as u32
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        if let Some(&id) = self.index.get(token) {
            return Some(id);
        }
        match token.as_bytes() {
            [b] => Some(*b as u32),
            _ => None,
        }
    }

    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        const BYTES: [u8; 256] = {
            let mut b = [0u8; 256];
            let mut i = 0;
            while i < 256 {
                b[i] = i as u8;
                i += 1;
            }
            b
        };
        if id < BYTE_TOKENS {
            Some(&BYTES[id as usize..id as usize + 1])
        } else if id == EOS_ID {
            Some(&[])
        } else {
            self.words
                .get((id - BYTE_TOKENS - 1) as usize)
                .map(|w| w.as_bytes())
        }
    }

    /// Human-readable token string (bytes shown lossily).
    pub fn token_str(&self, id: u32) -> Option<String> {
        if id == EOS_ID {
            return Some("<eos>".to_owned());
        }
        self.token_bytes(id).map(|b| String::from_utf8_lossy(b).into_owned())
    }

    pub fn tokenize(&self, s: &str) -> Vec<u32> {
        let mut out = Vec::new();
        for piece in pretokenize(s) {
            if let Some(&id) = self.index.get(piece) {
                out.push(id);
                continue;
            }
            let mut rest = piece;
            while !rest.is_empty() {
                let ends: Vec<usize> = rest
                    .char_indices()
                    .map(|(i, c)| i + c.len_utf8())
                    .take(MAX_WORD_CHARS)
                    .collect();
                let hit = ends
                    .iter()
                    .rev()
                    .filter(|&&e| e > rest.chars().next().map_or(0, char::len_utf8))
                    .find_map(|&e| self.index.get(&rest[..e]).map(|&id| (id, e)));
                match hit {
                    Some((id, e)) => {
                        out.push(id);
                        rest = &rest[e..];
                    }
                    None => {
                        let c = rest.chars().next().expect("non-empty");
                        let n = c.len_utf8();
                        out.extend(rest.as_bytes()[..n].iter().map(|&b| b as u32));
                        rest = &rest[n..];
                    }
                }
            }
        }
        out
    }

    /// Split of a string into text-token strings (used for out-of-vocabulary symbols).
    pub fn tokenize_strings(&self, s: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut pending: Vec<u8> = Vec::new();
        for id in self.tokenize(s) {
            let bytes = self.token_bytes(id).expect("tokenizer emits known ids");
            if id < BYTE_TOKENS {
                pending.extend_from_slice(bytes);
                if let Ok(ch) = std::str::from_utf8(&pending) {
                    out.push(ch.to_owned());
                    pending.clear();
                }
            } else {
                out.push(String::from_utf8_lossy(bytes).into_owned());
            }
        }
        out
    }

    pub fn detokenize(&self, ids: &[u32]) -> String {
        let mut bytes = Vec::new();
        for &id in ids {
            if let Some(b) = self.token_bytes(id) {
                bytes.extend_from_slice(b);
            }
        }
        String::from_utf8_lossy(&bytes).into_owned()
    }
}

/// Splits text into pieces: an optional single leading space plus a run of
/// ASCII letters, or a single other character. Digits are always split.
pub fn pretokenize(s: &str) -> Vec<&str> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < s.len() {
        let start = i;
        let mut j = i;
        if bytes[j] == b' ' && bytes.get(j + 1).is_some_and(u8::is_ascii_alphabetic) {
            j += 1;
        }
        if bytes[j].is_ascii_alphabetic() {
            while j < s.len() && bytes[j].is_ascii_alphabetic() {
                j += 1;
            }
        } else {
            j += s[j..].chars().next().expect("in bounds").len_utf8();
        }
        out.push(&s[start..j]);
        i = j;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymbolClass {
    Operator,
    Variable,
    Number,
    Oov,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MathVocab {
    operators: Vec<String>,
    variables: Vec<String>,
    numbers: Vec<String>,
    lookup: HashMap<String, (TokenKind, u32)>,
}

impl Default for MathVocab {
    fn default() -> Self {
        let mut operators: Vec<String> = [
            "+", "-", "*", "/", "^", "\\pm", "\\mp", "=", "<", ">", "\\le", "\\ge", "\\neq",
            "\\approx", "\\sqrt",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        operators.extend(FUNCTIONS.iter().map(|f| format!("\\{f}")));
        let mut variables: Vec<String> = ('a'..='z').chain('A'..='Z').map(String::from).collect();
        variables.extend(GREEK.iter().map(|g| format!("\\{g}")));
        MathVocab::new(operators, variables, Vec::new()).expect("default vocabulary is consistent")
    }
}

impl MathVocab {
    pub fn new(operators: Vec<String>, variables: Vec<String>, numbers: Vec<String>) -> Result<MathVocab> {
        let mut lookup = HashMap::new();
        let mut next = SPECIALS.len() as u32;
        for (kind, list) in [
            (TokenKind::Operator, &operators),
            (TokenKind::Variable, &variables),
        ] {
            for s in list {
                if s.is_empty() {
                    return Err(Error::Vocab("empty symbol".into()));
                }
                if lookup.insert(s.clone(), (kind, next)).is_some() {
                    return Err(Error::Vocab(format!("symbol {s:?} appears twice")));
                }
                next += 1;
            }
        }
        for d in DIGITS {
            if lookup.contains_key(d) {
                return Err(Error::Vocab(format!("digit {d:?} reused as a symbol")));
            }
        }
        let mut seen = HashSet::new();
        for n in &numbers {
            if !is_number_literal(n) || n.len() < 2 || !seen.insert(n.clone()) {
                return Err(Error::Vocab(format!("invalid number token {n:?}")));
            }
        }
        Ok(MathVocab {
            operators,
            variables,
            numbers,
            lookup,
        })
    }

    pub fn operators(&self) -> &[String] {
        &self.operators
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn numbers(&self) -> &[String] {
        &self.numbers
    }

    pub fn with_numbers(&self, numbers: Vec<String>) -> Result<MathVocab> {
        MathVocab::new(self.operators.clone(), self.variables.clone(), numbers)
    }

    pub fn size(&self) -> u32 {
        (SPECIALS.len() + self.operators.len() + self.variables.len() + DIGITS.len() + self.numbers.len()) as u32
    }

    fn digit_offset(&self) -> u32 {
        (SPECIALS.len() + self.operators.len() + self.variables.len()) as u32
    }

    fn number_offset(&self) -> u32 {
        self.digit_offset() + DIGITS.len() as u32
    }

    pub fn is_operator(&self, s: &str) -> bool {
        matches!(self.lookup.get(s), Some((TokenKind::Operator, _)))
    }

    pub fn is_variable(&self, s: &str) -> bool {
        matches!(self.lookup.get(s), Some((TokenKind::Variable, _)))
    }

    pub fn has_number(&self, s: &str) -> bool {
        self.numbers.iter().any(|n| n == s)
    }

    /// Offset of `token` inside the math block.
    pub fn local_id(&self, token: &MathToken) -> Option<u32> {
        match token.kind {
            k if k.is_special() => SPECIALS.iter().position(|&s| s == k).map(|i| i as u32),
            TokenKind::Operator | TokenKind::Variable => match self.lookup.get(&token.symbol) {
                Some(&(kind, id)) if kind == token.kind => Some(id),
                _ => None,
            },
            TokenKind::Digit => DIGITS
                .iter()
                .position(|&d| d == token.symbol)
                .map(|i| self.digit_offset() + i as u32),
            TokenKind::Number => self
                .numbers
                .iter()
                .position(|n| *n == token.symbol)
                .map(|i| self.number_offset() + i as u32),
            _ => None,
        }
    }

    pub fn local_token(&self, local: u32) -> Option<MathToken> {
        let l = local as usize;
        let ops = SPECIALS.len();
        let vars = ops + self.operators.len();
        let digits = vars + self.variables.len();
        let nums = digits + DIGITS.len();
        Some(if l < ops {
            MathToken::special(SPECIALS[l])
        } else if l < vars {
            MathToken::operator(self.operators[l - ops].clone())
        } else if l < digits {
            MathToken::variable(self.variables[l - vars].clone())
        } else if l < nums {
            MathToken::new(TokenKind::Digit, DIGITS[l - digits])
        } else {
            MathToken::number(self.numbers.get(l - nums)?.clone())
        })
    }

    pub fn local_ranges(&self) -> MathRanges {
        let ops = SPECIALS.len() as u32;
        let vars = ops + self.operators.len() as u32;
        let digits = vars + self.variables.len() as u32;
        let nums = digits + DIGITS.len() as u32;
        MathRanges {
            specials: 0..ops,
            operators: ops..vars,
            variables: vars..digits,
            digits: digits..nums,
            numbers: nums..nums + self.numbers.len() as u32,
        }
    }
}

pub fn is_number_literal(s: &str) -> bool {
    let mut parts = s.split('.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    parts.next().is_none()
        && !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

/// Id ranges inside a block (local to the math block or unified).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MathRanges {
    pub specials: Range<u32>,
    pub operators: Range<u32>,
    pub variables: Range<u32>,
    pub digits: Range<u32>,
    pub numbers: Range<u32>,
}

/// What a unified id denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IdKind {
    Text,
    Eos,
    StartFormula,
    EndFormula,
    End,
    NumHead,
    OovHead,
    Operator,
    Variable,
    Digit,
    Number,
}

impl IdKind {
    pub fn is_text(self) -> bool {
        matches!(self, IdKind::Text | IdKind::Eos)
    }

    pub fn opens_subtree(self) -> bool {
        matches!(self, IdKind::Operator | IdKind::NumHead | IdKind::OovHead)
    }

    pub fn is_math_leaf(self) -> bool {
        matches!(self, IdKind::Variable | IdKind::Digit | IdKind::Number)
    }
}

/// Unified layout: text ids in `[0, T)`, math ids in `[T, T + M)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdLayout {
    pub text: Range<u32>,
    pub math: Range<u32>,
}

impl IdLayout {
    pub fn new(text_size: u32, math_size: u32) -> IdLayout {
        IdLayout {
            text: 0..text_size,
            math: text_size..text_size + math_size,
        }
    }

    pub fn total(&self) -> u32 {
        self.math.end
    }
}

/// Text and math vocabularies together.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocab {
    pub text: TextVocab,
    pub math: MathVocab,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VocabFile {
    pub operators: Vec<String>,
    pub variables: Vec<String>,
    pub text_tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub numbers: Vec<String>,
}

impl Vocab {
    pub fn new(text: TextVocab, math: MathVocab) -> Vocab {
        Vocab { text, math }
    }

    pub fn layout(&self) -> IdLayout {
        IdLayout::new(self.text.size(), self.math.size())
    }

    pub fn size(&self) -> usize {
        self.layout().total() as usize
    }

    pub fn text_size(&self) -> u32 {
        self.text.size()
    }

    pub fn math_ranges(&self) -> MathRanges {
        let t = self.text_size();
        let r = self.math.local_ranges();
        let shift = |x: Range<u32>| x.start + t..x.end + t;
        MathRanges {
            specials: shift(r.specials),
            operators: shift(r.operators),
            variables: shift(r.variables),
            digits: shift(r.digits),
            numbers: shift(r.numbers),
        }
    }

    pub fn special_id(&self, kind: TokenKind) -> u32 {
        let i = SPECIALS.iter().position(|&s| s == kind).expect("special kind");
        self.text_size() + i as u32
    }

    pub fn classify_symbol(&self, s: &str) -> SymbolClass {
        if self.math.is_operator(s) {
            SymbolClass::Operator
        } else if self.math.is_variable(s) {
            SymbolClass::Variable
        } else if is_number_literal(s) {
            SymbolClass::Number
        } else {
            SymbolClass::Oov
        }
    }

    /// Unified id of a math token; `MathText` maps into the text block.
    pub fn math_token_id(&self, token: &MathToken) -> Option<u32> {
        if token.kind == TokenKind::MathText {
            return self.text.token_id(&token.symbol);
        }
        self.math.local_id(token).map(|l| l + self.text_size())
    }

    pub fn id_kind(&self, id: u32) -> Option<IdKind> {
        let t = self.text_size();
        if id == EOS_ID {
            return Some(IdKind::Eos);
        }
        if id < t {
            return Some(IdKind::Text);
        }
        let r = self.math.local_ranges();
        let l = id - t;
        Some(if r.specials.contains(&l) {
            match SPECIALS[l as usize] {
                TokenKind::StartFormula => IdKind::StartFormula,
                TokenKind::EndFormula => IdKind::EndFormula,
                TokenKind::End => IdKind::End,
                TokenKind::NumHead => IdKind::NumHead,
                _ => IdKind::OovHead,
            }
        } else if r.operators.contains(&l) {
            IdKind::Operator
        } else if r.variables.contains(&l) {
            IdKind::Variable
        } else if r.digits.contains(&l) {
            IdKind::Digit
        } else if r.numbers.contains(&l) {
            IdKind::Number
        } else {
            return None;
        })
    }

    /// The math token for a math-block id.
    pub fn math_token(&self, id: u32) -> Option<MathToken> {
        id.checked_sub(self.text_size())
            .and_then(|l| self.math.local_token(l))
    }

    /// Text rendering of a math symbol used to link it with text embeddings.
    /// Specials have none.
    pub fn text_rendering(token: &MathToken) -> Option<&str> {
        match token.kind {
            k if k.is_special() => None,
            _ => Some(token.symbol.strip_prefix('\\').unwrap_or(&token.symbol)),
        }
    }

    pub fn to_file(&self) -> VocabFile {
        VocabFile {
            operators: self.math.operators.clone(),
            variables: self.math.variables.clone(),
            text_tokens: self.text.words.clone(),
            numbers: self.math.numbers.clone(),
        }
    }

    pub fn from_file(file: VocabFile) -> Result<Vocab> {
        Ok(Vocab {
            text: TextVocab::from_words(file.text_tokens)?,
            math: MathVocab::new(file.operators, file.variables, file.numbers)?,
        })
    }

    pub fn load(path: &Path) -> std::result::Result<Vocab, Box<dyn std::error::Error + Send + Sync>> {
        let raw = std::fs::read_to_string(path)?;
        let file: VocabFile = serde_json::from_str(&raw)?;
        Ok(Vocab::from_file(file)?)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(&self.to_file()).expect("vocab serializes");
        std::fs::write(path, json + "\n")
    }
}

/// Counts number literals of length >= 2 and keeps the `max` most frequent.
pub fn frequent_numbers<'a>(literals: impl IntoIterator<Item = &'a str>, max: usize) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in literals {
        if l.len() >= 2 && is_number_literal(l) {
            *counts.entry(l).or_default() += 1;
        }
    }
    let mut ranked: Vec<_> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.into_iter().take(max).map(|(s, _)| s.to_owned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_string_has_no_tokens() {
        assert!(TextVocab::default().tokenize("").is_empty());
    }

    #[test]
    fn word_level_with_fallback_round_trips() {
        let v = TextVocab::from_words(["velocity", " grow", "new"]).unwrap();
        let ids = v.tokenize("velocity");
        assert_eq!(ids.len(), 1);
        assert_eq!(v.detokenize(&ids), "velocity");

        let s = "Let the newvelocity grow 9.8t, café!";
        let ids = v.tokenize(s);
        assert_eq!(v.detokenize(&ids), s);
        assert_eq!(
            v.tokenize_strings("newvelocity"),
            vec!["new".to_string(), "velocity".to_string()]
        );
        assert_eq!(v.tokenize_strings("9.8t"), vec!["9", ".", "8", "t"]);
    }

    #[test]
    fn pretokenizer_splits_digits_and_spaces() {
        assert_eq!(pretokenize("has 12 apples."), vec!["has", " ", "1", "2", " apples", "."]);
    }

    #[test]
    fn trained_vocab_is_frequency_ranked() {
        let v = TextVocab::train(["the cat and the dog", "a cat and the end the"], 10, 1);
        assert_eq!(&v.words()[..3], &[" the", " and", " cat"]);
        let v = TextVocab::train(["the cat and the dog", "a cat and the end the"], 10, 3);
        assert_eq!(v.words(), &[" the".to_string()]);
    }

    #[test]
    fn classification() {
        let v = Vocab::default();
        assert_eq!(v.classify_symbol("+"), SymbolClass::Operator);
        assert_eq!(v.classify_symbol("x"), SymbolClass::Variable);
        assert_eq!(v.classify_symbol("9.8"), SymbolClass::Number);
        assert_eq!(v.classify_symbol("newvelocity"), SymbolClass::Oov);
    }

    #[test]
    fn id_layout_arithmetic() {
        let l = IdLayout::new(1000, 50);
        assert_eq!(l.math, 1000..1050);
        assert_eq!(l.total(), 1050);
    }

    #[test]
    fn unified_ids_are_bijective() {
        let v = Vocab::new(
            TextVocab::from_words(["hello", " world"]).unwrap(),
            MathVocab::default().with_numbers(vec!["12".into(), "3.5".into()]).unwrap(),
        );
        let layout = v.layout();
        assert_eq!(layout.text, 0..v.text_size());
        assert_eq!(v.id_kind(layout.math.start), Some(IdKind::StartFormula));
        let mut seen = HashSet::new();
        for id in layout.math.clone() {
            let tok = v.math_token(id).unwrap();
            assert_eq!(v.math_token_id(&tok), Some(id), "{tok:?}");
            assert!(seen.insert(tok));
        }
        assert_eq!(v.id_kind(layout.total()), None);
    }

    #[test]
    fn vocab_file_round_trip_keeps_classification() {
        let v = Vocab::new(
            TextVocab::from_words(["apples"]).unwrap(),
            MathVocab::default(),
        );
        let json = serde_json::to_string(&v.to_file()).unwrap();
        let back = Vocab::from_file(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, v);
        for s in ["+", "x", "\\alpha", "12", "speed"] {
            assert_eq!(back.classify_symbol(s), v.classify_symbol(s));
        }
    }

    #[test]
    fn rejects_overlapping_sets() {
        assert!(MathVocab::new(vec!["x".into()], vec!["x".into()], vec![]).is_err());
        assert!(MathVocab::new(vec![], vec!["1".into()], vec![]).is_err());
        assert!(TextVocab::from_words(["a"]).is_err());
    }

    #[test]
    fn frequent_number_ranking() {
        let n = frequent_numbers(["12", "7", "12", "3.5", "40", "40", "40"], 2);
        assert_eq!(n, vec!["40".to_string(), "12".to_string()]);
    }
}
