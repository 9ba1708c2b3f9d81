#![allow(dead_code)]

use ultradiff::hierarchy::{Branching, FiniteTree, Kernel, UltrametricHierarchy};
use ultradiff::spectrum::basis_value;

pub fn ln4() -> Kernel {
    Kernel::new(4f64.ln()).unwrap()
}

/// `φ_i` evaluated on every leaf around the centre leaf 0.
pub fn basis_on_leaves(tree: &FiniteTree, h: &UltrametricHierarchy, i: usize) -> Vec<f64> {
    (0..tree.leaf_count())
        .map(|x| basis_value(h, i, tree.sphere_of(0, x)).unwrap())
        .collect()
}

/// Balanced tree of the given depth whose nodes take child counts from `counts` in turn.
pub fn cycled_tree(depth: usize, counts: &[u32]) -> Branching {
    fn go(depth: usize, counts: &[u32], next: &mut usize) -> Branching {
        if depth == 0 {
            return Branching::leaf();
        }
        let p = counts[*next % counts.len()];
        *next += 1;
        Branching::node((0..p).map(|_| go(depth - 1, counts, next)).collect())
    }
    go(depth, counts, &mut 0)
}

/// `d_j = Σ_{m≤j} steps[m]`.
pub fn radii(steps: &[f64]) -> Vec<f64> {
    steps
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
