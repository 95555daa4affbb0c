//! The generation automaton: legal-next-token masks, tree-position
//! inference, and state transitions.
//!
//! The masks encode these rules, plus the depth and width caps:
//! text is followed by text or a formula start; a formula start by an
//! operator, variable or number; a formula end by text; tree tokens by tree
//! tokens until the tree is complete, then only by a formula end; number
//! heads by digits and out-of-vocabulary heads by text tokens.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{TreePosition, MAX_DEPTH, MAX_WIDTH};
use crate::vocab::{IdKind, Vocab, EOS_ID};

/// A set of allowed unified ids, stored as sorted disjoint ranges.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenMask {
    ranges: Vec<Range<u32>>,
}

impl TokenMask {
    fn from_ranges(mut ranges: Vec<Range<u32>>) -> TokenMask {
        ranges.retain(|r| !r.is_empty());
        ranges.sort_by_key(|r| r.start);
        let mut merged: Vec<Range<u32>> = Vec::with_capacity(ranges.len());
        for r in ranges {
            match merged.last_mut() {
                Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
                _ => merged.push(r),
            }
        }
        TokenMask { ranges: merged }
    }

    /// Mask of exactly `ids`, in any order.
    pub fn from_ids(ids: &[u32]) -> TokenMask {
        TokenMask::from_ranges(ids.iter().map(|&i| i..i + 1).collect())
    }

    pub fn ranges(&self) -> &[Range<u32>] {
        &self.ranges
    }

    pub fn contains(&self, id: u32) -> bool {
        self.ranges.iter().any(|r| r.contains(&id))
    }

    pub fn count(&self) -> usize {
        self.ranges.iter().map(|r| r.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.ranges.iter().flat_map(|r| r.clone())
    }

    pub fn to_bools(&self, size: usize) -> Vec<bool> {
        let mut out = vec![false; size];
        for id in self.iter() {
            out[id as usize] = true;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Text,
    MathTree,
    NumChildren,
    OovChildren,
    AwaitFormulaEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frame {
    pub kind: IdKind,
    pub children: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecoderState {
    mode: Mode,
    stack: Vec<Frame>,
    current_pos: TreePosition,
    last: Option<IdKind>,
}

impl Default for DecoderState {
    fn default() -> Self {
        DecoderState::new()
    }
}

impl DecoderState {
    /// State at the start of a sequence.
    pub fn new() -> DecoderState {
        DecoderState {
            mode: Mode::Text,
            stack: Vec::new(),
            current_pos: TreePosition::root(),
            last: None,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn stack(&self) -> &[Frame] {
        &self.stack
    }

    pub fn depth(&self) -> usize {
        self.stack.len()
    }

    pub fn last(&self) -> Option<IdKind> {
        self.last
    }

    pub fn in_formula(&self) -> bool {
        self.mode != Mode::Text
    }

    /// Tree position the next token will take, if it is a tree token.
    pub fn next_position(&self) -> Option<&TreePosition> {
        match self.mode {
            Mode::MathTree | Mode::NumChildren | Mode::OovChildren => Some(&self.current_pos),
            Mode::Text | Mode::AwaitFormulaEnd => None,
        }
    }

    pub fn allowed_next(&self, vocab: &Vocab) -> TokenMask {
        let t = vocab.text_size();
        let m = vocab.math_ranges();
        let single = |kind| {
            let id = vocab.special_id(kind);
            id..id + 1
        };
        use crate::token::TokenKind as K;
        let text_all = 0..t;
        let text_no_eos = vec![0..EOS_ID, EOS_ID + 1..t];

        let ranges = match self.mode {
            Mode::Text if self.last == Some(IdKind::EndFormula) => vec![text_all],
            Mode::Text => vec![text_all, single(K::StartFormula)],
            Mode::AwaitFormulaEnd => vec![single(K::EndFormula)],
            Mode::MathTree => {
                let children = self.stack.last().map_or(0, |f| f.children);
                if children + 1 == MAX_WIDTH {
                    vec![single(K::End)]
                } else {
                    let mut r = vec![m.variables, m.digits, m.numbers];
                    if self.stack.len() < MAX_DEPTH {
                        r.extend([m.operators, single(K::NumHead), single(K::OovHead)]);
                    }
                    if !self.stack.is_empty() {
                        r.push(single(K::End));
                    }
                    r
                }
            }
            Mode::NumChildren | Mode::OovChildren => {
                let children = self.stack.last().map_or(0, |f| f.children);
                let mut r = if children + 1 == MAX_WIDTH {
                    vec![]
                } else if self.mode == Mode::NumChildren {
                    vec![m.digits]
                } else {
                    text_no_eos
                };
                if children > 0 {
                    r.push(single(K::End));
                }
                r
            }
        };
        TokenMask::from_ranges(ranges)
    }

    /// Applies `id`, failing if the mask forbids it.
    pub fn step(&self, id: u32, vocab: &Vocab) -> Result<DecoderState> {
        let mut next = self.clone();
        next.advance(id, vocab)?;
        Ok(next)
    }

    pub fn advance(&mut self, id: u32, vocab: &Vocab) -> Result<()> {
        if !self.allowed_next(vocab).contains(id) {
            return Err(Error::IllegalToken {
                id,
                position: self.current_pos.clone(),
            });
        }
        let kind = vocab.id_kind(id).ok_or(Error::UnknownId(id))?;
        self.last = Some(kind);
        match self.mode {
            Mode::Text => {
                if kind == IdKind::StartFormula {
                    self.mode = Mode::MathTree;
                    self.current_pos = TreePosition::root();
                }
            }
            Mode::AwaitFormulaEnd => {
                self.mode = Mode::Text;
                self.current_pos = TreePosition::root();
            }
            Mode::MathTree | Mode::NumChildren | Mode::OovChildren => {
                let next_pos = infer_next_position(&self.current_pos, kind);
                if kind.opens_subtree() {
                    if let Some(top) = self.stack.last_mut() {
                        top.children += 1;
                    }
                    self.stack.push(Frame { kind, children: 0 });
                } else if kind == IdKind::End {
                    self.stack.pop();
                } else if let Some(top) = self.stack.last_mut() {
                    top.children += 1;
                }
                match (self.stack.last(), next_pos) {
                    (Some(top), Some(pos)) => {
                        self.mode = match top.kind {
                            IdKind::NumHead => Mode::NumChildren,
                            IdKind::OovHead => Mode::OovChildren,
                            _ => Mode::MathTree,
                        };
                        self.current_pos = pos;
                    }
                    _ => {
                        self.mode = Mode::AwaitFormulaEnd;
                        self.current_pos = TreePosition::root();
                    }
                }
            }
        }
        Ok(())
    }

    /// Fewest tokens that complete the open formula and then end the
    /// sequence, the end-of-sequence token included.
    pub fn tokens_to_close(&self) -> usize {
        match self.mode {
            Mode::Text => 1,
            Mode::AwaitFormulaEnd => 1 + 1,
            Mode::MathTree if self.stack.is_empty() => 1 + 1 + 1,
            Mode::MathTree | Mode::NumChildren | Mode::OovChildren => {
                let empty_head = self
                    .stack
                    .last()
                    .is_some_and(|f| f.kind != IdKind::Operator && f.children == 0);
                self.stack.len() + usize::from(empty_head) + 1 + 1
            }
        }
    }
}

/// Position of the token after one of kind `emitted` placed at `current`.
///
/// Operators are followed by their first child, leaves by their next
/// sibling, and End by its parent's next sibling. Returns `None` once the
/// tree is complete.
pub fn infer_next_position(current: &TreePosition, emitted: IdKind) -> Option<TreePosition> {
    let mut path = current.0.clone();
    if emitted.opens_subtree() {
        path.push(0);
        return Some(TreePosition(path));
    }
    if emitted == IdKind::End {
        path.pop();
    }
    let last = path.last_mut()?;
    *last += 1;
    Some(TreePosition(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::token::TokenKind;
    use crate::vocab::{MathVocab, TextVocab};

    fn vocab() -> Vocab {
        Vocab::new(TextVocab::from_words(["hello"]).unwrap(), MathVocab::default())
    }

    fn id(v: &Vocab, tok: crate::token::MathToken) -> u32 {
        v.math_token_id(&tok).unwrap()
    }

    #[test]
    fn inference_rules() {
        let p = TreePosition(vec![0, 1]);
        assert_eq!(infer_next_position(&p, IdKind::Operator), Some(TreePosition(vec![0, 1, 0])));
        assert_eq!(infer_next_position(&p, IdKind::Variable), Some(TreePosition(vec![0, 2])));
        let p = TreePosition(vec![0, 2]);
        assert_eq!(infer_next_position(&p, IdKind::End), Some(TreePosition(vec![1])));
        assert_eq!(infer_next_position(&TreePosition::root(), IdKind::Variable), None);
        assert_eq!(infer_next_position(&TreePosition(vec![3]), IdKind::End), None);
    }

    #[test]
    fn trace_plus_a_2() {
        let v = vocab();
        let mut s = DecoderState::new();
        s.advance(v.special_id(TokenKind::StartFormula), &v).unwrap();
        assert_eq!(s.mode(), Mode::MathTree);
        assert_eq!(s.next_position(), Some(&TreePosition::root()));
        let seq = [
            crate::token::MathToken::operator("+"),
            crate::token::MathToken::variable("a"),
            crate::token::MathToken::digit('2'),
            crate::token::MathToken::end(),
        ];
        let mut positions = Vec::new();
        for tok in seq {
            positions.push(s.next_position().cloned().unwrap());
            s.advance(id(&v, tok), &v).unwrap();
        }
        assert_eq!(
            positions,
            vec![TreePosition(vec![]), TreePosition(vec![0]), TreePosition(vec![1]), TreePosition(vec![2])]
        );
        assert_eq!(s.mode(), Mode::AwaitFormulaEnd);
    }

    #[test]
    fn root_leaf_completes_tree() {
        let v = vocab();
        let s = DecoderState::new()
            .step(v.special_id(TokenKind::StartFormula), &v)
            .unwrap()
            .step(id(&v, crate::token::MathToken::variable("x")), &v)
            .unwrap();
        assert_eq!(s.mode(), Mode::AwaitFormulaEnd);
    }

    #[test]
    fn illegal_token_rejected() {
        let v = vocab();
        let s = DecoderState::new();
        assert!(matches!(
            s.step(v.special_id(TokenKind::End), &v),
            Err(Error::IllegalToken { .. })
        ));
    }

    #[test]
    fn close_cost() {
        let v = vocab();
        let s = DecoderState::new();
        assert_eq!(s.tokens_to_close(), 1);
        let s = s.step(v.special_id(TokenKind::StartFormula), &v).unwrap();
        assert_eq!(s.tokens_to_close(), 3);
        let s = s.step(v.special_id(TokenKind::NumHead), &v).unwrap();
        assert_eq!(s.tokens_to_close(), 4);
    }
}
