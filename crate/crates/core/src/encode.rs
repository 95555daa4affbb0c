//! Mapping mixed sequences to unified token ids and back.

use serde::{Deserialize, Serialize};

use crate::decoder::{DecoderState, Mode};
use crate::error::{Error, Result};
use crate::latex::{tree_to_latex_with, LatexOptions};
use crate::segment::{MixedSequence, Region, SeqItem, SeqToken};
use crate::token::{MathToken, TokenKind, TypeTag};
use crate::tree::{MathItem, TreePosition};
use crate::vocab::{IdKind, Vocab, EOS_ID};

/// Model-ready sequence: one id, optional tree position and type tag per token.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSequence {
    pub ids: Vec<u32>,
    pub positions: Vec<Option<TreePosition>>,
    pub tags: Vec<TypeTag>,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn push(&mut self, id: u32, position: Option<TreePosition>, tag: TypeTag) {
        self.ids.push(id);
        self.positions.push(position);
        self.tags.push(tag);
    }

    pub fn push_eos(&mut self) {
        self.push(EOS_ID, None, TypeTag::Text);
    }

    pub fn truncated(&self, len: usize) -> EncodedSequence {
        EncodedSequence {
            ids: self.ids[..len].to_vec(),
            positions: self.positions[..len].to_vec(),
            tags: self.tags[..len].to_vec(),
        }
    }

    /// Replays the ids through the automaton, checking every transition.
    pub fn replay(&self, vocab: &Vocab) -> Result<DecoderState> {
        let mut state = DecoderState::new();
        for &id in &self.ids {
            state.advance(id, vocab)?;
        }
        Ok(state)
    }
}

pub fn encode(seq: &MixedSequence, vocab: &Vocab) -> Result<EncodedSequence> {
    let mut out = EncodedSequence::default();
    for item in &seq.items {
        match &item.token {
            SeqToken::Text(s) => {
                for id in vocab.text.tokenize(s) {
                    out.push(id, None, TypeTag::Text);
                }
            }
            SeqToken::Math(tok) => {
                let id = vocab
                    .math_token_id(tok)
                    .ok_or_else(|| Error::Vocab(format!("no id for math token {tok}")))?;
                let position = if tok.kind.is_control() { None } else { item.position.clone() };
                out.push(id, position, item.tag);
            }
        }
    }
    Ok(out)
}

/// Tag carried by a unified id once its kind is known.
pub fn tag_for(kind: IdKind) -> TypeTag {
    match kind {
        IdKind::Text | IdKind::Eos => TypeTag::Text,
        IdKind::StartFormula | IdKind::EndFormula => TypeTag::Control,
        IdKind::End => TypeTag::End,
        IdKind::NumHead | IdKind::OovHead | IdKind::Operator => TypeTag::Operator,
        IdKind::Variable => TypeTag::Variable,
        IdKind::Digit | IdKind::Number => TypeTag::Number,
    }
}

/// Rebuilds a mixed sequence from ids. Positions come from the automaton.
/// End-of-sequence tokens are dropped; an unfinished formula is an error.
pub fn decode(ids: &[u32], vocab: &Vocab) -> Result<MixedSequence> {
    let mut state = DecoderState::new();
    let mut items = Vec::new();
    let mut text: Vec<u32> = Vec::new();
    let flush = |text: &mut Vec<u32>, items: &mut Vec<SeqItem>| {
        if !text.is_empty() {
            items.push(SeqItem::text(vocab.text.detokenize(text)));
            text.clear();
        }
    };
    for &id in ids {
        let position = state.next_position().cloned();
        let was_oov = state.mode() == Mode::OovChildren;
        state.advance(id, vocab)?;
        let kind = vocab.id_kind(id).ok_or(Error::UnknownId(id))?;
        match kind {
            IdKind::Eos => {}
            IdKind::Text if !was_oov => text.push(id),
            IdKind::Text => {
                let symbol = vocab.text.token_str(id).unwrap_or_default();
                items.push(SeqItem::math(MathItem {
                    token: MathToken::text(symbol),
                    position: position.expect("tree token has a position"),
                }));
            }
            IdKind::StartFormula | IdKind::EndFormula => {
                flush(&mut text, &mut items);
                items.push(SeqItem::control(if kind == IdKind::StartFormula {
                    TokenKind::StartFormula
                } else {
                    TokenKind::EndFormula
                }));
            }
            _ => {
                let token = vocab.math_token(id).ok_or(Error::UnknownId(id))?;
                items.push(SeqItem::math(MathItem {
                    token,
                    position: position.expect("tree token has a position"),
                }));
            }
        }
    }
    if state.in_formula() {
        return Err(Error::InvalidTraversal {
            index: ids.len(),
            reason: "sequence ends inside a formula".into(),
        });
    }
    flush(&mut text, &mut items);
    Ok(MixedSequence { items })
}

/// Renders a sequence as text with `$...$` formula spans.
pub fn render_document(seq: &MixedSequence, opts: LatexOptions) -> Result<String> {
    let mut out = String::new();
    for region in seq.regions()? {
        match region {
            Region::Text(t) => out.push_str(&t),
            Region::Formula(tree) => {
                out.push('$');
                out.push_str(&tree_to_latex_with(&tree, opts)?);
                out.push('$');
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::NormalizeOptions;
    use crate::segment::segment_regions;
    use crate::vocab::{MathVocab, TextVocab};

    #[test]
    fn encode_decode_round_trip() {
        let vocab = Vocab::new(
            TextVocab::from_words(["Let", " grow", "new", "velocity"]).unwrap(),
            MathVocab::default(),
        );
        let doc = "Let $newvelocity=9.8t$ grow and $x$.";
        let seq = segment_regions(doc, &vocab, NormalizeOptions::default()).unwrap();
        let enc = encode(&seq, &vocab).unwrap();
        assert_eq!(enc.ids.len(), enc.positions.len());
        enc.replay(&vocab).unwrap();
        let back = decode(&enc.ids, &vocab).unwrap();
        assert_eq!(back, seq);
        assert_eq!(render_document(&back, LatexOptions::default()).unwrap(), doc);
    }

    #[test]
    fn decode_rejects_open_formula() {
        let vocab = Vocab::default();
        let ids = [vocab.special_id(TokenKind::StartFormula)];
        assert!(decode(&ids, &vocab).is_err());
    }
}
