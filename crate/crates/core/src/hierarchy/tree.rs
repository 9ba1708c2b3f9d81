//! Explicit finite trees whose leaves are the points of a truncated space.

use serde::{Deserialize, Serialize};

use super::UltrametricHierarchy;
use crate::{Error, Result};

/// Largest leaf count accepted by the dense oracle.
pub const DENSE_LEAF_BUDGET: usize = 4096;
/// Largest leaf count accepted by [`FiniteTree::new`].
const TREE_LEAF_LIMIT: usize = 1 << 22;

/// Nested child-count description of a rooted tree.
///
/// In JSON a flat integer array `[2, 3, 2]` means "every node at depth `d`
/// has `counts[d]` children"; a nested array describes the tree node by node,
/// with `[]` standing for a leaf.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Branching {
    Uniform(Vec<u32>),
    Nested(Vec<Branching>),
}

impl Branching {
    pub fn uniform(p: u32, depth: usize) -> Self {
        Branching::Uniform(vec![p; depth])
    }

    pub fn leaf() -> Self {
        Branching::Nested(Vec::new())
    }

    pub fn node(children: Vec<Branching>) -> Self {
        Branching::Nested(children)
    }

    /// Nested form with `[]` as leaf (an empty `Uniform` is also a leaf).
    fn children(&self) -> Vec<Branching> {
        match self {
            Branching::Nested(c) => c.clone(),
            Branching::Uniform(counts) => match counts.split_first() {
                None => Vec::new(),
                Some((&p, rest)) => vec![Branching::Uniform(rest.to_vec()); p as usize],
            },
        }
    }

    fn leaf_count(&self) -> usize {
        match self {
            Branching::Uniform(counts) => counts
                .iter()
                .try_fold(1usize, |acc, &p| acc.checked_mul(p as usize))
                .unwrap_or(usize::MAX),
            Branching::Nested(c) if c.is_empty() => 1,
            Branching::Nested(c) => c
                .iter()
                .fold(0usize, |acc, ch| acc.saturating_add(ch.leaf_count())),
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    depth: usize,
    /// Leaves of the subtree are the contiguous range `first..first + count`.
    first: usize,
    count: usize,
    children: Vec<usize>,
}

/// Rooted tree with all leaves at depth `L`; leaves are numbered left to right.
///
/// The distance between two leaves is `d_j`, where `j = L - depth(lca)`; the
/// designated centre is leaf 0.
#[derive(Debug, Clone)]
pub struct FiniteTree {
    nodes: Vec<Node>,
    levels: usize,
    level_distance: Vec<f64>,
    /// `ancestors[x * (L + 1) + depth]` is the node id of leaf `x`'s ancestor at `depth`.
    ancestors: Vec<usize>,
    n_leaves: usize,
}

impl FiniteTree {
    pub fn new(branching: &Branching, level_distance: &[f64]) -> Result<Self> {
        let leaves = branching.leaf_count();
        if leaves > TREE_LEAF_LIMIT {
            return Err(Error::TreeTooLarge {
                leaves,
                budget: TREE_LEAF_LIMIT,
            });
        }
        if branching.children().is_empty() {
            return Err(Error::EmptyTree);
        }
        if let Branching::Uniform(c) = branching {
            if c.contains(&0) {
                return Err(Error::param("branching", "child counts must be >= 1"));
            }
        }

        let mut nodes = Vec::new();
        let mut leaf_depth: Option<usize> = None;
        build(branching, 0, &mut nodes, &mut 0, &mut leaf_depth)?;
        let levels = leaf_depth.ok_or(Error::EmptyTree)?;

        if level_distance.len() != levels {
            return Err(Error::param(
                "level_distance",
                format!("tree has {levels} levels, got {} distances", level_distance.len()),
            ));
        }
        let mut prev = 0.0;
        for (i, &d) in level_distance.iter().enumerate() {
            if !(d.is_finite() && d > prev) {
                return Err(Error::NonMonotone {
                    sequence: "level_distance",
                    index: i + 1,
                });
            }
            prev = d;
        }

        let n_leaves = nodes[0].count;
        let stride = levels + 1;
        let mut ancestors = vec![0usize; n_leaves * stride];
        for (id, node) in nodes.iter().enumerate() {
            for x in node.first..node.first + node.count {
                ancestors[x * stride + node.depth] = id;
            }
        }
        Ok(Self {
            nodes,
            levels,
            level_distance: level_distance.to_vec(),
            ancestors,
            n_leaves,
        })
    }

    /// Homogeneous `p`-ary tree of the given depth with `d_j = ξ j`.
    pub fn uniform(p: u32, depth: usize, xi: f64) -> Result<Self> {
        let d: Vec<f64> = (1..=depth).map(|j| xi * j as f64).collect();
        Self::new(&Branching::uniform(p, depth), &d)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn leaf_count(&self) -> usize {
        self.n_leaves
    }

    pub fn level_distance(&self) -> &[f64] {
        &self.level_distance
    }

    /// `d_j` for `j ≥ 1`, 0 for `j = 0`.
    pub fn distance_at_level(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.level_distance[j - 1]
        }
    }

    fn ancestor(&self, x: usize, depth: usize) -> &Node {
        &self.nodes[self.ancestors[x * (self.levels + 1) + depth]]
    }

    /// Level (0 = leaf, `L` = root) of the lowest common ancestor of two leaves.
    pub fn lca_level(&self, x: usize, y: usize) -> usize {
        let stride = self.levels + 1;
        let (ax, ay) = (&self.ancestors[x * stride..], &self.ancestors[y * stride..]);
        let mut depth = self.levels;
        while ax[depth] != ay[depth] {
            depth -= 1;
        }
        self.levels - depth
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.distance_at_level(self.lca_level(x, y))
    }

    /// Leaf population of the lowest common ancestor of `x` and `y`.
    pub fn pair_ball_size(&self, x: usize, y: usize) -> usize {
        let level = self.lca_level(x, y);
        self.ancestor(x, self.levels - level).count
    }

    /// Leaf population of the ancestor of `x` at `level` (0 = the leaf itself).
    pub fn ball_size_at(&self, x: usize, level: usize) -> usize {
        self.ancestor(x, self.levels - level).count
    }

    /// Contiguous leaf range of the ball of radius `d_level` around `x`.
    pub fn ball_range(&self, x: usize, level: usize) -> std::ops::Range<usize> {
        let node = self.ancestor(x, self.levels - level);
        node.first..node.first + node.count
    }

    /// Subtree leaf count of the child `path` (indices from the root).
    pub fn subtree_leaf_count(&self, path: &[usize]) -> Result<usize> {
        let mut id = 0;
        for &c in path {
            id = *self.nodes[id]
                .children
                .get(c)
                .ok_or_else(|| Error::param("path", format!("no child {c}")))?;
        }
        Ok(self.nodes[id].count)
    }

    /// Sphere index of leaf `x` around leaf `center`.
    pub fn sphere_of(&self, center: usize, x: usize) -> usize {
        if x == center {
            0
        } else {
            self.lca_level(center, x)
        }
    }

    /// Sequences `(d_i, N_i)` seen from `x`.
    pub fn hierarchy_from(&self, x: usize) -> Result<UltrametricHierarchy> {
        let balls: Vec<f64> = (0..=self.levels)
            .map(|l| self.ball_size_at(x, l) as f64)
            .collect();
        UltrametricHierarchy::tabulated(&self.level_distance, &balls)
    }

    /// Sequences `(d_i, N_i)` seen from the centre (leaf 0).
    pub fn hierarchy(&self) -> Result<UltrametricHierarchy> {
        self.hierarchy_from(0)
    }

    /// Calls `f(range_a, range_b, level)` for every ordered pair of sibling
    /// subtrees, where `level` is the level of their parent.
    pub fn for_each_sibling_block(&self, mut f: impl FnMut(std::ops::Range<usize>, std::ops::Range<usize>, usize, usize)) {
        for node in &self.nodes {
            let level = self.levels - node.depth;
            for &a in &node.children {
                for &b in &node.children {
                    if a != b {
                        let (na, nb) = (&self.nodes[a], &self.nodes[b]);
                        f(na.first..na.first + na.count, nb.first..nb.first + nb.count, level, node.count);
                    }
                }
            }
        }
    }
}

fn build(
    b: &Branching,
    depth: usize,
    nodes: &mut Vec<Node>,
    next_leaf: &mut usize,
    leaf_depth: &mut Option<usize>,
) -> Result<usize> {
    let id = nodes.len();
    nodes.push(Node {
        depth,
        first: *next_leaf,
        count: 0,
        children: Vec::new(),
    });
    let children = b.children();
    if children.is_empty() {
        match *leaf_depth {
            None => *leaf_depth = Some(depth),
            Some(d) if d != depth => return Err(Error::UnbalancedTree(d, depth)),
            _ => {}
        }
        *next_leaf += 1;
        nodes[id].count = 1;
        return Ok(id);
    }
    let mut ids = Vec::with_capacity(children.len());
    for c in &children {
        ids.push(build(c, depth + 1, nodes, next_leaf, leaf_depth)?);
    }
    nodes[id].count = *next_leaf - nodes[id].first;
    nodes[id].children = ids;
    Ok(id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixed() -> FiniteTree {
        let b = Branching::node(vec![
            Branching::uniform(2, 2),
            Branching::uniform(3, 2),
        ]);
        FiniteTree::new(&b, &[1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn uniform_binary_depth_three() {
        let t = FiniteTree::uniform(2, 3, 1.0).unwrap();
        assert_eq!(t.leaf_count(), 8);
        assert_eq!(t.hierarchy().unwrap().balls(), &[1.0, 2.0, 4.0, 8.0]);
        assert_eq!(t.dist(0, 5), 3.0);
        assert_eq!(t.dist(0, 1), 1.0);
        assert_eq!(t.dist(4, 7), 2.0);
        assert_eq!(t.pair_ball_size(0, 3), 4);
    }

    #[test]
    fn inhomogeneous_subtree_counts() {
        let t = mixed();
        assert_eq!(t.leaf_count(), 13);
        assert_eq!(t.subtree_leaf_count(&[1]).unwrap(), 9);
        assert_eq!(t.subtree_leaf_count(&[0]).unwrap(), 4);
        assert_eq!(t.hierarchy().unwrap().balls(), &[1.0, 2.0, 4.0, 13.0]);
        assert_eq!(t.hierarchy_from(12).unwrap().balls(), &[1.0, 3.0, 9.0, 13.0]);
    }

    #[test]
    fn nested_json_and_uniform_json() {
        let b: Branching = serde_json::from_str("[[[], []], [[], [], []]]").unwrap();
        let t = FiniteTree::new(&b, &[1.0, 2.0]).unwrap();
        assert_eq!(t.leaf_count(), 5);
        let b: Branching = serde_json::from_str("[3, 2]").unwrap();
        assert_eq!(FiniteTree::new(&b, &[1.0, 2.0]).unwrap().leaf_count(), 6);
    }

    #[test]
    fn rejects_bad_descriptions() {
        assert!(matches!(
            FiniteTree::new(&Branching::leaf(), &[]),
            Err(Error::EmptyTree)
        ));
        let b = Branching::node(vec![Branching::leaf(), Branching::uniform(2, 1)]);
        assert!(matches!(FiniteTree::new(&b, &[1.0, 2.0]), Err(Error::UnbalancedTree(1, 2))));
        assert!(FiniteTree::new(&Branching::uniform(2, 2), &[2.0, 1.0]).is_err());
        assert!(FiniteTree::new(&Branching::uniform(2, 2), &[1.0]).is_err());
        assert!(FiniteTree::new(&Branching::Uniform(vec![2, 0]), &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sibling_blocks_cover_all_off_diagonal_pairs() {
        let t = mixed();
        let n = t.leaf_count();
        let mut seen = vec![0u8; n * n];
        t.for_each_sibling_block(|a, b, level, count| {
            for x in a.clone() {
                for y in b.clone() {
                    seen[x * n + y] += 1;
                    assert_eq!(t.lca_level(x, y), level);
                    assert_eq!(t.pair_ball_size(x, y), count);
                }
            }
        });
        for x in 0..n {
            for y in 0..n {
                assert_eq!(seen[x * n + y], u8::from(x != y));
            }
        }
    }
}
