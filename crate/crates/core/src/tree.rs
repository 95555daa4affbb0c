//! Operator trees, tree positions, and depth-first (de)linearization.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::token::{MathToken, TokenKind, TypeTag};

/// Maximum tree-position length (number of edges from the root).
pub const MAX_DEPTH: usize = 32;
/// Maximum number of children of one node, the End child included.
pub const MAX_WIDTH: usize = 64;

/// Sibling indices from the root down to a node. The root is the empty path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreePosition(pub Vec<u8>);

impl TreePosition {
    pub fn root() -> TreePosition {
        TreePosition(Vec::new())
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, index: usize) -> TreePosition {
        let mut path = self.0.clone();
        path.push(index as u8);
        TreePosition(path)
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    /// Validates the depth and per-entry caps.
    pub fn check_caps(&self) -> Result<()> {
        if self.0.len() > MAX_DEPTH {
            return Err(Error::CapExceeded {
                what: "position depth",
                value: self.0.len(),
                limit: MAX_DEPTH,
            });
        }
        if let Some(&e) = self.0.iter().find(|&&e| e as usize >= MAX_WIDTH) {
            return Err(Error::CapExceeded {
                what: "sibling index",
                value: e as usize,
                limit: MAX_WIDTH - 1,
            });
        }
        Ok(())
    }
}

impl fmt::Display for TreePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("]")
    }
}

impl From<Vec<u8>> for TreePosition {
    fn from(v: Vec<u8>) -> Self {
        TreePosition(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OptNode {
    pub token: MathToken,
    pub children: Vec<OptNode>,
}

impl OptNode {
    pub fn leaf(token: MathToken) -> OptNode {
        OptNode {
            token,
            children: Vec::new(),
        }
    }

    pub fn new(token: MathToken, children: Vec<OptNode>) -> OptNode {
        OptNode { token, children }
    }

    pub fn op(symbol: &str, children: Vec<OptNode>) -> OptNode {
        OptNode::new(MathToken::operator(symbol), children)
    }

    pub fn var(symbol: &str) -> OptNode {
        OptNode::leaf(MathToken::variable(symbol))
    }

    pub fn num(symbol: &str) -> OptNode {
        OptNode::leaf(MathToken::number(symbol))
    }

    pub fn end() -> OptNode {
        OptNode::leaf(MathToken::end())
    }

    pub fn kind(&self) -> TokenKind {
        self.token.kind
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Total number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(OptNode::size).sum::<usize>()
    }

    /// Longest root-to-node path, counted in edges.
    pub fn depth(&self) -> usize {
        self.children
            .iter()
            .map(|c| 1 + c.depth())
            .max()
            .unwrap_or(0)
    }

    /// Largest child count of any node.
    pub fn max_width(&self) -> usize {
        self.children
            .iter()
            .map(OptNode::max_width)
            .max()
            .unwrap_or(0)
            .max(self.children.len())
    }

    pub fn check_caps(&self) -> Result<()> {
        let depth = self.depth();
        if depth > MAX_DEPTH {
            return Err(Error::CapExceeded {
                what: "tree depth",
                value: depth,
                limit: MAX_DEPTH,
            });
        }
        let width = self.max_width();
        if width > MAX_WIDTH {
            return Err(Error::CapExceeded {
                what: "child count",
                value: width,
                limit: MAX_WIDTH,
            });
        }
        Ok(())
    }

    /// Pre-order iterator over nodes.
    pub fn preorder(&self) -> Vec<&OptNode> {
        let mut out = Vec::with_capacity(16);
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            stack.extend(node.children.iter().rev());
        }
        out
    }

    /// Replaces every `NumHead` sub-tree with a single `Number` leaf.
    pub fn collapse_numbers(&self) -> OptNode {
        if self.kind() == TokenKind::NumHead {
            let digits: String = self
                .children
                .iter()
                .filter(|c| c.kind() == TokenKind::Digit)
                .map(|c| c.token.symbol.as_str())
                .collect();
            return OptNode::num(&digits);
        }
        OptNode::new(
            self.token.clone(),
            self.children.iter().map(OptNode::collapse_numbers).collect(),
        )
    }

    /// The 3-tuple JSON form `[type, name, children-or-null]`.
    pub fn to_json(&self) -> Value {
        let children = if self.children.is_empty() {
            Value::Null
        } else {
            Value::Array(self.children.iter().map(OptNode::to_json).collect())
        };
        Value::Array(vec![
            Value::String(self.kind().as_str().to_owned()),
            Value::String(self.token.symbol.clone()),
            children,
        ])
    }

    pub fn from_json(value: &Value) -> std::result::Result<OptNode, String> {
        let arr = value
            .as_array()
            .filter(|a| a.len() == 3)
            .ok_or_else(|| format!("expected a 3-tuple, found {value}"))?;
        let kind_str = arr[0].as_str().ok_or("node type must be a string")?;
        let kind = TokenKind::from_str_tag(kind_str)
            .ok_or_else(|| format!("unknown node type {kind_str:?}"))?;
        let name = arr[1].as_str().ok_or("node name must be a string")?;
        let children = match &arr[2] {
            Value::Null => Vec::new(),
            Value::Array(items) => items
                .iter()
                .map(OptNode::from_json)
                .collect::<std::result::Result<_, _>>()?,
            other => return Err(format!("children must be an array or null, found {other}")),
        };
        Ok(OptNode::new(MathToken::new(kind, name), children))
    }
}

impl fmt::Display for OptNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token)?;
        if !self.children.is_empty() {
            f.write_str("(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// A linearized math token with its tree position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MathItem {
    pub token: MathToken,
    pub position: TreePosition,
}

impl MathItem {
    pub fn type_tag(&self) -> TypeTag {
        self.token.type_tag()
    }
}

/// Positions of every node, in pre-order.
pub fn compute_positions(tree: &OptNode) -> Vec<(&OptNode, TreePosition)> {
    let mut out = Vec::new();
    let mut stack = vec![(tree, TreePosition::root())];
    while let Some((node, pos)) = stack.pop() {
        for (j, child) in node.children.iter().enumerate().rev() {
            stack.push((child, pos.child(j)));
        }
        out.push((node, pos));
    }
    out
}

/// Pre-order depth-first listing of a tree with positions.
pub fn linearize(tree: &OptNode) -> Vec<MathItem> {
    compute_positions(tree)
        .into_iter()
        .map(|(node, position)| MathItem {
            token: node.token.clone(),
            position,
        })
        .collect()
}

fn allowed_under(parent: Option<TokenKind>, kind: TokenKind) -> bool {
    use TokenKind::*;
    match parent {
        None => matches!(kind, Operator | Variable | Number | Digit | NumHead | OovHead),
        Some(Operator) => matches!(kind, Operator | Variable | Number | Digit | NumHead | OovHead | End),
        Some(NumHead) => matches!(kind, Digit | End),
        Some(OovHead) => matches!(kind, MathText | End),
        Some(_) => false,
    }
}

/// Rebuilds the unique tree whose depth-first traversal is `items`.
///
/// Every parent must close with an End child, heads of number and
/// out-of-vocabulary sub-trees need at least one child before End, and each
/// position must match the one implied by the traversal so far.
pub fn delinearize(items: &[MathItem]) -> Result<OptNode> {
    let invalid = |index: usize, reason: String| Error::InvalidTraversal { index, reason };
    if items.is_empty() {
        return Err(invalid(0, "empty traversal".into()));
    }

    let mut stack: Vec<OptNode> = Vec::new();
    let mut expected = TreePosition::root();
    let mut done: Option<OptNode> = None;

    for (i, item) in items.iter().enumerate() {
        if done.is_some() {
            return Err(invalid(i, "token after the tree was complete".into()));
        }
        if item.position != expected {
            return Err(invalid(
                i,
                format!("position {} but traversal implies {}", item.position, expected),
            ));
        }
        let kind = item.token.kind;
        let parent = stack.last().map(OptNode::kind);
        if !allowed_under(parent, kind) {
            return Err(invalid(
                i,
                match parent {
                    None => format!("{} cannot be a tree root", kind.as_str()),
                    Some(p) => format!("{} cannot be a child of {}", kind.as_str(), p.as_str()),
                },
            ));
        }
        if let Some(top) = stack.last() {
            if top.children.len() + 1 > MAX_WIDTH {
                return Err(invalid(i, format!("more than {MAX_WIDTH} children")));
            }
            if kind != TokenKind::End && top.children.len() + 1 == MAX_WIDTH {
                return Err(invalid(i, "last child slot is reserved for End".into()));
            }
        }

        if kind.is_parent() {
            if expected.depth() >= MAX_DEPTH {
                return Err(invalid(i, format!("parent node at depth {MAX_DEPTH}")));
            }
            stack.push(OptNode::leaf(item.token.clone()));
            expected = expected.child(0);
            continue;
        }

        let finished = if kind == TokenKind::End {
            let mut top = stack.pop().expect("End always has a parent here");
            if top.kind() != TokenKind::Operator && top.children.is_empty() {
                return Err(invalid(i, format!("empty {} sub-tree", top.kind().as_str())));
            }
            top.children.push(OptNode::leaf(item.token.clone()));
            expected.0.pop();
            top
        } else {
            OptNode::leaf(item.token.clone())
        };

        match stack.last_mut() {
            Some(parent) => {
                parent.children.push(finished);
                if let Some(last) = expected.0.last_mut() {
                    *last += 1;
                }
            }
            None => done = Some(finished),
        }
    }

    done.ok_or_else(|| invalid(items.len(), "traversal ended before the tree was complete".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plus_a_2() -> OptNode {
        OptNode::op(
            "+",
            vec![OptNode::var("a"), OptNode::leaf(MathToken::digit('2')), OptNode::end()],
        )
    }

    fn pos(v: &[u8]) -> TreePosition {
        TreePosition(v.to_vec())
    }

    #[test]
    fn single_leaf_positions() {
        let t = OptNode::var("x");
        let p = compute_positions(&t);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].1, TreePosition::root());
    }

    #[test]
    fn sibling_indexing() {
        let t = plus_a_2();
        let p: Vec<_> = compute_positions(&t).into_iter().map(|(_, p)| p).collect();
        assert_eq!(p, vec![pos(&[]), pos(&[0]), pos(&[1]), pos(&[2])]);
    }

    #[test]
    fn number_subtree_positions() {
        let num = OptNode::new(
            MathToken::special(TokenKind::NumHead),
            vec![
                OptNode::leaf(MathToken::digit('9')),
                OptNode::leaf(MathToken::digit('.')),
                OptNode::leaf(MathToken::digit('8')),
                OptNode::end(),
            ],
        );
        let t = OptNode::op("*", vec![OptNode::var("t"), num, OptNode::end()]);
        let p: Vec<_> = compute_positions(&t).into_iter().map(|(_, p)| p).collect();
        assert_eq!(p[2], pos(&[1]));
        assert_eq!(&p[3..7], &[pos(&[1, 0]), pos(&[1, 1]), pos(&[1, 2]), pos(&[1, 3])]);
    }

    #[test]
    fn linearize_nested() {
        let t = OptNode::op(
            "=",
            vec![
                OptNode::var("x"),
                OptNode::op(
                    "+",
                    vec![
                        OptNode::leaf(MathToken::digit('1')),
                        OptNode::leaf(MathToken::digit('2')),
                        OptNode::end(),
                    ],
                ),
                OptNode::end(),
            ],
        );
        let items = linearize(&t);
        let shown: Vec<String> = items.iter().map(|i| i.token.to_string()).collect();
        assert_eq!(shown, ["=", "x", "+", "1", "2", "E", "E"]);
        assert_eq!(items[5].position, pos(&[1, 2]));
        assert_eq!(items[6].position, pos(&[2]));
        assert_eq!(delinearize(&items).unwrap(), t);
    }

    #[test]
    fn delinearize_round_trip_simple() {
        let t = plus_a_2();
        assert_eq!(delinearize(&linearize(&t)).unwrap(), t);
    }

    #[test]
    fn delinearize_rejects_empty() {
        assert!(matches!(delinearize(&[]), Err(Error::InvalidTraversal { .. })));
    }

    #[test]
    fn delinearize_rejects_child_of_leaf() {
        let items = vec![
            MathItem { token: MathToken::variable("a"), position: pos(&[]) },
            MathItem { token: MathToken::variable("b"), position: pos(&[0]) },
        ];
        assert!(matches!(delinearize(&items), Err(Error::InvalidTraversal { index: 1, .. })));
    }

    #[test]
    fn delinearize_rejects_missing_end_and_bad_jump() {
        let mut items = linearize(&plus_a_2());
        items.pop();
        assert!(delinearize(&items).is_err());

        let mut items = linearize(&plus_a_2());
        items[2].position = pos(&[5]);
        assert!(matches!(delinearize(&items), Err(Error::InvalidTraversal { index: 2, .. })));
    }

    #[test]
    fn delinearize_rejects_empty_number_subtree() {
        let items = vec![
            MathItem { token: MathToken::special(TokenKind::NumHead), position: pos(&[]) },
            MathItem { token: MathToken::end(), position: pos(&[0]) },
        ];
        assert!(delinearize(&items).is_err());
    }

    #[test]
    fn json_tuple_round_trip() {
        let t = plus_a_2();
        let j = t.to_json();
        assert_eq!(
            j.to_string(),
            r#"["operator","+",[["variable","a",null],["digit","2",null],["end","",null]]]"#
        );
        assert_eq!(OptNode::from_json(&j).unwrap(), t);
    }

    #[test]
    fn position_caps() {
        assert!(TreePosition(vec![0; 32]).check_caps().is_ok());
        assert!(TreePosition(vec![0; 33]).check_caps().is_err());
        assert!(TreePosition(vec![64]).check_caps().is_err());
    }
}
