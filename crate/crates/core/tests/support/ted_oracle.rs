//! Brute-force tree edit distance for small trees.
//!
//! Enumerates every edit mapping between the two node sets: a partial
//! one-to-one matching that preserves both pre-order and post-order
//! relations (sibling order and ancestry). The cheapest mapping's cost is
//! relabels + unmatched nodes on either side.

use rand::Rng;
use treemath_core::{MathToken, OptNode};

struct Flat<'a> {
    labels: Vec<&'a MathToken>,
    pre: Vec<usize>,
    post: Vec<usize>,
}

fn flatten(root: &OptNode) -> Flat<'_> {
    fn walk<'a>(n: &'a OptNode, f: &mut Flat<'a>, post_counter: &mut usize) -> usize {
        let me = f.labels.len();
        f.labels.push(&n.token);
        f.pre.push(me);
        f.post.push(0);
        for c in &n.children {
            walk(c, f, post_counter);
        }
        f.post[me] = *post_counter;
        *post_counter += 1;
        me
    }
    let mut f = Flat {
        labels: vec![],
        pre: vec![],
        post: vec![],
    };
    let mut counter = 0;
    walk(root, &mut f, &mut counter);
    f
}

pub fn brute_force_ted(a: &OptNode, b: &OptNode) -> usize {
    let fa = flatten(a);
    let fb = flatten(b);
    let mut used = vec![false; fb.labels.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut best = usize::MAX;
    search(&fa, &fb, 0, &mut used, &mut pairs, &mut best);
    best
}

fn consistent(fa: &Flat, fb: &Flat, pairs: &[(usize, usize)], i: usize, j: usize) -> bool {
    pairs.iter().all(|&(k, l)| {
        (fa.pre[k] < fa.pre[i]) == (fb.pre[l] < fb.pre[j]) && (fa.post[k] < fa.post[i]) == (fb.post[l] < fb.post[j])
    })
}

fn cost(fa: &Flat, fb: &Flat, pairs: &[(usize, usize)]) -> usize {
    let relabel = pairs.iter().filter(|&&(i, j)| fa.labels[i] != fb.labels[j]).count();
    relabel + (fa.labels.len() - pairs.len()) + (fb.labels.len() - pairs.len())
}

fn search(fa: &Flat, fb: &Flat, i: usize, used: &mut [bool], pairs: &mut Vec<(usize, usize)>, best: &mut usize) {
    if i == fa.labels.len() {
        *best = (*best).min(cost(fa, fb, pairs));
        return;
    }
    search(fa, fb, i + 1, used, pairs, best);
    for j in 0..fb.labels.len() {
        if !used[j] && consistent(fa, fb, pairs, i, j) {
            used[j] = true;
            pairs.push((i, j));
            search(fa, fb, i + 1, used, pairs, best);
            pairs.pop();
            used[j] = false;
        }
    }
}

/// Random tree with `1..=max_nodes` nodes over a tiny label alphabet.
/// Each new node is attached as the last child of a random earlier node.
pub fn small_tree<R: Rng>(rng: &mut R, max_nodes: usize) -> OptNode {
    const LABELS: [fn() -> MathToken; 4] = [
        || MathToken::operator("+"),
        || MathToken::operator("*"),
        || MathToken::variable("a"),
        || MathToken::variable("b"),
    ];
    let n = rng.random_range(1..=max_nodes);
    let mut parent = vec![usize::MAX; n];
    for (k, p) in parent.iter_mut().enumerate().skip(1) {
        *p = rng.random_range(0..k);
    }
    let labels: Vec<MathToken> = (0..n).map(|_| LABELS[rng.random_range(0..LABELS.len())]()).collect();
    fn build(k: usize, parent: &[usize], labels: &[MathToken]) -> OptNode {
        let children = (0..parent.len())
            .filter(|&c| parent[c] == k)
            .map(|c| build(c, parent, labels))
            .collect();
        OptNode::new(labels[k].clone(), children)
    }
    build(0, &parent, &labels)
}
