//! Tree normalization: End children, number sub-trees, and
//! out-of-vocabulary sub-trees.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::token::{MathToken, TokenKind};
use crate::tree::{OptNode, MAX_WIDTH};
use crate::vocab::Vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizeOptions {
    /// Expand multi-character numbers into digit sub-trees. When off, numbers
    /// listed in the vocabulary stay single leaves.
    pub num_trees: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions { num_trees: true }
    }
}

pub fn normalize_tree(tree: &OptNode, vocab: &Vocab, opts: NormalizeOptions) -> Result<OptNode> {
    let out = normalize_node(tree, vocab, opts)?;
    out.check_caps()?;
    Ok(out)
}

fn with_end(token: MathToken, mut children: Vec<OptNode>) -> Result<OptNode> {
    children.push(OptNode::end());
    if children.len() > MAX_WIDTH {
        return Err(Error::CapExceeded {
            what: "child count",
            value: children.len(),
            limit: MAX_WIDTH,
        });
    }
    Ok(OptNode::new(token, children))
}

fn normalize_node(node: &OptNode, vocab: &Vocab, opts: NormalizeOptions) -> Result<OptNode> {
    let sym = node.token.symbol.as_str();
    match node.kind() {
        TokenKind::Operator => {
            if !vocab.math.is_operator(sym) {
                return Err(Error::OovOperator(sym.to_owned()));
            }
            let children = node
                .children
                .iter()
                .map(|c| normalize_node(c, vocab, opts))
                .collect::<Result<Vec<_>>>()?;
            with_end(node.token.clone(), children)
        }
        _ if !node.children.is_empty() => Err(Error::NotRaw(format!(
            "{} node with children",
            node.kind().as_str()
        ))),
        TokenKind::Variable if vocab.math.is_variable(sym) => Ok(node.clone()),
        TokenKind::Variable => {
            let pieces = vocab.text.tokenize_strings(sym);
            with_end(
                MathToken::special(TokenKind::OovHead),
                pieces.into_iter().map(|p| OptNode::leaf(MathToken::text(p))).collect(),
            )
        }
        TokenKind::Number | TokenKind::Digit if sym.chars().count() == 1 => {
            Ok(OptNode::leaf(MathToken::new(TokenKind::Digit, sym)))
        }
        TokenKind::Number if !opts.num_trees && vocab.math.has_number(sym) => Ok(node.clone()),
        TokenKind::Number => with_end(
            MathToken::special(TokenKind::NumHead),
            sym.chars().map(|c| OptNode::leaf(MathToken::digit(c))).collect(),
        ),
        other => Err(Error::NotRaw(other.as_str().to_owned())),
    }
}
