//! Every legal-next-token rule, each checked against an expected set built
//! by classifying all ids one at a time.

use treemath_core::vocab::{IdKind, MathVocab, TextVocab};
use treemath_core::{DecoderState, TokenKind, Vocab, MAX_DEPTH, MAX_WIDTH};

pub fn vocab() -> Vocab {
    Vocab::new(
        TextVocab::from_words(["new", "velocity", " the"]).unwrap(),
        MathVocab::default().with_numbers(vec!["12".into(), "9.8".into()]).unwrap(),
    )
}

fn expected(v: &Vocab, keep: impl Fn(IdKind) -> bool) -> Vec<u32> {
    (0..v.size() as u32).filter(|&id| keep(v.id_kind(id).unwrap())).collect()
}

fn drive(v: &Vocab, ids: &[u32]) -> DecoderState {
    let mut s = DecoderState::new();
    for &id in ids {
        s.advance(id, v).unwrap();
    }
    s
}

fn tree_start(kind: IdKind) -> bool {
    use IdKind::*;
    matches!(kind, Operator | Variable | Digit | Number | NumHead | OovHead)
}

fn leaf(kind: IdKind) -> bool {
    matches!(kind, IdKind::Variable | IdKind::Digit | IdKind::Number)
}

/// Named rule cases with the outcome of comparing the mask to the oracle.
pub fn cases() -> Vec<(&'static str, Result<(), String>)> {
    use IdKind::*;
    let v = vocab();
    let id = |k| v.special_id(k);
    let fs = id(TokenKind::StartFormula);
    let fe = id(TokenKind::EndFormula);
    let end = id(TokenKind::End);
    let num = id(TokenKind::NumHead);
    let oov = id(TokenKind::OovHead);
    let r = v.math.local_ranges();
    let base = v.text_size();
    let plus = base + r.operators.start;
    let x = base + r.variables.start;
    let digit = base + r.digits.start;
    let letter = u32::from(b'n');

    let nested: Vec<u32> = std::iter::once(fs).chain(std::iter::repeat_n(plus, MAX_DEPTH)).collect();
    let mut wide = vec![fs, plus];
    wide.extend(std::iter::repeat_n(x, MAX_WIDTH - 1));
    let mut wide_num = vec![fs, num];
    wide_num.extend(std::iter::repeat_n(digit, MAX_WIDTH - 1));

    let table: Vec<(&'static str, Vec<u32>, Vec<u32>)> = vec![
        ("text", vec![], expected(&v, |k| matches!(k, Text | Eos | StartFormula))),
        ("text after text", vec![letter], expected(&v, |k| matches!(k, Text | Eos | StartFormula))),
        ("post-formula-start", vec![fs], expected(&v, tree_start)),
        ("post-formula-end", vec![fs, x, fe], expected(&v, |k| matches!(k, Text | Eos))),
        ("mid-tree, first operand", vec![fs, plus], expected(&v, |k| tree_start(k) || k == End)),
        ("mid-tree, after operand", vec![fs, plus, x], expected(&v, |k| tree_start(k) || k == End)),
        ("tree complete, root leaf", vec![fs, x], expected(&v, |k| k == EndFormula)),
        ("tree complete, after End", vec![fs, plus, x, end], expected(&v, |k| k == EndFormula)),
        ("depth cap", nested, expected(&v, |k| leaf(k) || k == End)),
        ("width cap", wide, expected(&v, |k| k == End)),
        ("number head, no digits yet", vec![fs, num], expected(&v, |k| k == Digit)),
        ("number head, after digit", vec![fs, num, digit], expected(&v, |k| matches!(k, Digit | End))),
        ("number head, width cap", wide_num, expected(&v, |k| k == End)),
        ("oov head, no text yet", vec![fs, oov], expected(&v, |k| k == Text)),
        ("oov head, after text", vec![fs, oov, letter], expected(&v, |k| matches!(k, Text | End))),
    ];
    table
        .into_iter()
        .map(|(name, prefix, want)| {
            let got: Vec<u32> = drive(&v, &prefix).allowed_next(&v).iter().collect();
            let outcome = if got == want {
                Ok(())
            } else {
                let extra: Vec<_> = got.iter().filter(|i| !want.contains(i)).take(5).collect();
                let missing: Vec<_> = want.iter().filter(|i| !got.contains(i)).take(5).collect();
                Err(format!("{name}: unexpected {extra:?}, missing {missing:?}"))
            };
            (name, outcome)
        })
        .collect()
}
