//! Zhang–Shasha ordered tree edit distance with unit costs.

use crate::token::MathToken;
use crate::tree::OptNode;

struct Indexed<'a> {
    labels: Vec<&'a MathToken>,
    /// Post-order index of each node's leftmost leaf descendant.
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a> Indexed<'a> {
    fn new(root: &'a OptNode) -> Indexed<'a> {
        fn walk<'a>(node: &'a OptNode, labels: &mut Vec<&'a MathToken>, leftmost: &mut Vec<usize>) -> usize {
            let mut first = None;
            for child in &node.children {
                let idx = walk(child, labels, leftmost);
                first.get_or_insert(leftmost[idx]);
            }
            labels.push(&node.token);
            let me = labels.len() - 1;
            leftmost.push(first.unwrap_or(me));
            me
        }
        let mut labels = Vec::new();
        let mut leftmost = Vec::new();
        walk(root, &mut labels, &mut leftmost);

        // A keyroot is the highest node sharing its leftmost leaf.
        let n = labels.len();
        let mut seen = vec![false; n];
        let mut keyroots = Vec::new();
        for i in (0..n).rev() {
            if !seen[leftmost[i]] {
                seen[leftmost[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        Indexed {
            labels,
            leftmost,
            keyroots,
        }
    }
}

/// Minimum number of node insertions, deletions and relabelings turning
/// `a` into `b`. Labels compare kind and symbol.
pub fn ted(a: &OptNode, b: &OptNode) -> usize {
    let a = Indexed::new(a);
    let b = Indexed::new(b);
    let (n, m) = (a.labels.len(), b.labels.len());
    let mut td = vec![vec![0usize; m]; n];
    let mut fd = vec![vec![0usize; m + 1]; n + 1];

    for &i in &a.keyroots {
        for &j in &b.keyroots {
            let li = a.leftmost[i];
            let lj = b.leftmost[j];
            let rows = i - li + 2;
            let cols = j - lj + 2;
            fd[0][0] = 0;
            for x in 1..rows {
                fd[x][0] = fd[x - 1][0] + 1;
            }
            for y in 1..cols {
                fd[0][y] = fd[0][y - 1] + 1;
            }
            for x in 1..rows {
                let xi = li + x - 1;
                for y in 1..cols {
                    let yj = lj + y - 1;
                    let del = fd[x - 1][y] + 1;
                    let ins = fd[x][y - 1] + 1;
                    if a.leftmost[xi] == li && b.leftmost[yj] == lj {
                        let relabel = fd[x - 1][y - 1] + usize::from(a.labels[xi] != b.labels[yj]);
                        fd[x][y] = del.min(ins).min(relabel);
                        td[xi][yj] = fd[x][y];
                    } else {
                        let p = a.leftmost[xi] - li;
                        let q = b.leftmost[yj] - lj;
                        fd[x][y] = del.min(ins).min(fd[p][q] + td[xi][yj]);
                    }
                }
            }
        }
    }
    td[n - 1][m - 1]
}

/// Edit distance after collapsing number sub-trees into single leaves.
pub fn ted_collapsed(a: &OptNode, b: &OptNode) -> usize {
    ted(&a.collapse_numbers(), &b.collapse_numbers())
}

pub fn tree_match(a: &OptNode, b: &OptNode) -> bool {
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_unit_edits() {
        let t = OptNode::op("+", vec![OptNode::var("a"), OptNode::var("b"), OptNode::end()]);
        assert_eq!(ted(&t, &t), 0);
        let relabeled = OptNode::op("+", vec![OptNode::var("a"), OptNode::var("c"), OptNode::end()]);
        assert_eq!(ted(&t, &relabeled), 1);
        let deleted = OptNode::op("+", vec![OptNode::var("a"), OptNode::end()]);
        assert_eq!(ted(&t, &deleted), 1);
        assert_eq!(ted(&deleted, &t), 1);
    }

    #[test]
    fn classic_example() {
        // f(d(a, c(b)), e) vs f(c(d(a, b)), e): distance 2.
        let a = OptNode::op(
            "f",
            vec![
                OptNode::op("d", vec![OptNode::var("a"), OptNode::op("c", vec![OptNode::var("b")])]),
                OptNode::var("e"),
            ],
        );
        let b = OptNode::op(
            "f",
            vec![
                OptNode::op("c", vec![OptNode::op("d", vec![OptNode::var("a"), OptNode::var("b")])]),
                OptNode::var("e"),
            ],
        );
        assert_eq!(ted(&a, &b), 2);
    }

    #[test]
    fn order_matters_for_match() {
        let a = OptNode::op("+", vec![OptNode::num("1"), OptNode::num("2")]);
        let b = OptNode::op("+", vec![OptNode::num("2"), OptNode::num("1")]);
        assert!(!tree_match(&a, &b));
        assert!(tree_match(&a, &a.clone()));
        assert_eq!(ted(&a, &b), 2);
    }
}
