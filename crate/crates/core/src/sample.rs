//! Random normalized operator trees, for fuzzing and property tests.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::token::{MathToken, TokenKind};
use crate::tree::OptNode;

#[derive(Debug, Clone, Copy)]
pub struct TreeShape {
    /// Maximum depth in edges.
    pub max_depth: usize,
    /// Maximum child count of any node, End included. At least 2.
    pub max_width: usize,
    /// Probability that a non-leaf slot opens a sub-tree.
    pub branch: f64,
}

impl Default for TreeShape {
    fn default() -> Self {
        TreeShape {
            max_depth: 6,
            max_width: 8,
            branch: 0.35,
        }
    }
}

const OPERATORS: &[&str] = &["+", "-", "*", "/", "^", "=", "\\sqrt"];
const VARIABLES: &[&str] = &["a", "b", "x", "y", "\\alpha"];
/// Single characters, so every piece has a byte-level text id.
const TEXT: &[&str] = &["n", "e", "w", "v", " "];

/// Samples a tree in normalized form: parents end with an End child,
/// numbers longer than one digit are number sub-trees.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, shape: TreeShape) -> OptNode {
    node(rng, shape, 0)
}

fn node<R: Rng + ?Sized>(rng: &mut R, shape: TreeShape, depth: usize) -> OptNode {
    let can_branch = depth < shape.max_depth;
    if can_branch && rng.random_bool(shape.branch) {
        let operands = rng.random_range(1..shape.max_width);
        let children = (0..operands)
            .map(|_| node(rng, shape, depth + 1))
            .chain(std::iter::once(OptNode::end()))
            .collect();
        return OptNode::op(OPERATORS.choose(rng).unwrap(), children);
    }
    match rng.random_range(0..4) {
        0 => OptNode::var(VARIABLES.choose(rng).unwrap()),
        1 => OptNode::leaf(MathToken::digit(char::from(b'0' + rng.random_range(0..10u8)))),
        2 if can_branch => {
            let len = rng.random_range(1..shape.max_width.min(6));
            let mut children: Vec<OptNode> = (0..len)
                .map(|_| OptNode::leaf(MathToken::digit(char::from(b'0' + rng.random_range(0..10u8)))))
                .collect();
            if len > 2 && rng.random_bool(0.3) {
                children[1] = OptNode::leaf(MathToken::digit('.'));
            }
            children.push(OptNode::end());
            OptNode::new(MathToken::special(TokenKind::NumHead), children)
        }
        3 if can_branch => {
            let len = rng.random_range(1..shape.max_width.min(4));
            let children = (0..len)
                .map(|_| OptNode::leaf(MathToken::text(*TEXT.choose(rng).unwrap())))
                .chain(std::iter::once(OptNode::end()))
                .collect();
            OptNode::new(MathToken::special(TokenKind::OovHead), children)
        }
        _ => OptNode::var("x"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = TreeShape::default();
        for _ in 0..500 {
            let t = random_tree(&mut rng, shape);
            assert!(t.depth() <= shape.max_depth);
            assert!(t.max_width() <= shape.max_width);
        }
    }
}
