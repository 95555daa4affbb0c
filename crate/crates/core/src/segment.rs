//! Splitting documents into text regions and formula spans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::{normalize_tree, NormalizeOptions};
use crate::parse::parse_math;
use crate::token::{MathToken, TokenKind, TypeTag};
use crate::tree::{delinearize, linearize, MathItem, OptNode, TreePosition};
use crate::vocab::Vocab;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeqToken {
    Text(String),
    Math(MathToken),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqItem {
    pub token: SeqToken,
    pub position: Option<TreePosition>,
    pub tag: TypeTag,
}

impl SeqItem {
    pub fn text(s: impl Into<String>) -> SeqItem {
        SeqItem {
            token: SeqToken::Text(s.into()),
            position: None,
            tag: TypeTag::Text,
        }
    }

    pub fn control(kind: TokenKind) -> SeqItem {
        SeqItem {
            token: SeqToken::Math(MathToken::special(kind)),
            position: None,
            tag: TypeTag::Control,
        }
    }

    pub fn math(item: MathItem) -> SeqItem {
        SeqItem {
            tag: item.type_tag(),
            token: SeqToken::Math(item.token),
            position: Some(item.position),
        }
    }
}

/// Interleaved text regions and linearized formula spans.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedSequence {
    pub items: Vec<SeqItem>,
}

/// A piece of a document after segmentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Region {
    Text(String),
    Formula(OptNode),
}

impl MixedSequence {
    /// Text regions and the trees of each formula span, in order.
    pub fn regions(&self) -> Result<Vec<Region>> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.items.len() {
            match &self.items[i].token {
                SeqToken::Text(s) => {
                    out.push(Region::Text(s.clone()));
                    i += 1;
                }
                SeqToken::Math(t) if t.kind == TokenKind::StartFormula => {
                    let start = i + 1;
                    let end = self.items[start..]
                        .iter()
                        .position(|it| matches!(&it.token, SeqToken::Math(t) if t.kind == TokenKind::EndFormula))
                        .map(|p| p + start)
                        .ok_or(Error::InvalidTraversal {
                            index: i,
                            reason: "formula start without end".into(),
                        })?;
                    let items = self.items[start..end]
                        .iter()
                        .map(|it| match (&it.token, &it.position) {
                            (SeqToken::Math(t), Some(p)) => Ok(MathItem {
                                token: t.clone(),
                                position: p.clone(),
                            }),
                            _ => Err(Error::InvalidTraversal {
                                index: start,
                                reason: "non-math item inside a formula".into(),
                            }),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    out.push(Region::Formula(delinearize(&items)?));
                    i = end + 1;
                }
                SeqToken::Math(_) => {
                    return Err(Error::InvalidTraversal {
                        index: i,
                        reason: "math item outside a formula".into(),
                    })
                }
            }
        }
        Ok(out)
    }

    pub fn formulas(&self) -> Result<Vec<OptNode>> {
        Ok(self
            .regions()?
            .into_iter()
            .filter_map(|r| match r {
                Region::Formula(t) => Some(t),
                Region::Text(_) => None,
            })
            .collect())
    }
}

/// Byte ranges of text and formula bodies in a `$`-delimited document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawRegion<'a> {
    Text(&'a str),
    /// Formula body and its byte offset in the document.
    Formula(&'a str, usize),
}

/// Splits `doc` on `$...$` and `$$...$$`. `\$` is literal text.
pub fn split_regions(doc: &str) -> Result<Vec<RawRegion<'_>>> {
    let bytes = doc.as_bytes();
    let mut out = Vec::new();
    let mut text_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' if bytes.get(i + 1) == Some(&b'$') => i += 2,
            b'$' => {
                if text_start < i {
                    out.push(RawRegion::Text(&doc[text_start..i]));
                }
                let display = bytes.get(i + 1) == Some(&b'$');
                let delim = if display { 2 } else { 1 };
                let body_start = i + delim;
                let mut j = body_start;
                let close = loop {
                    if j >= bytes.len() {
                        return Err(Error::UnbalancedDelimiter { offset: i });
                    }
                    match bytes[j] {
                        b'\\' => j += 2,
                        b'$' if !display => break j,
                        b'$' if bytes.get(j + 1) == Some(&b'$') => break j,
                        b'$' => return Err(Error::UnbalancedDelimiter { offset: j }),
                        _ => j += 1,
                    }
                };
                out.push(RawRegion::Formula(&doc[body_start..close], body_start));
                i = close + delim;
                text_start = i;
            }
            _ => i += 1,
        }
    }
    if text_start < bytes.len() {
        out.push(RawRegion::Text(&doc[text_start..]));
    }
    Ok(out)
}

/// Parses and normalizes the formula body found at `offset`.
pub fn parse_formula(body: &str, offset: usize, vocab: &Vocab, opts: NormalizeOptions) -> Result<OptNode> {
    let raw = parse_math(body).map_err(|e| match e {
        Error::Syntax { offset: o, message } => Error::Syntax {
            offset: offset + o,
            message,
        },
        other => other,
    })?;
    normalize_tree(&raw, vocab, opts)
}

/// Segments a document into text and linearized formula spans wrapped in
/// formula start/end control tokens.
pub fn segment_regions(doc: &str, vocab: &Vocab, opts: NormalizeOptions) -> Result<MixedSequence> {
    let mut items = Vec::new();
    for region in split_regions(doc)? {
        match region {
            RawRegion::Text(t) => items.push(SeqItem::text(t)),
            RawRegion::Formula(body, offset) => {
                let tree = parse_formula(body, offset, vocab, opts)?;
                items.push(SeqItem::control(TokenKind::StartFormula));
                items.extend(linearize(&tree).into_iter().map(SeqItem::math));
                items.push(SeqItem::control(TokenKind::EndFormula));
            }
        }
    }
    Ok(MixedSequence { items })
}
