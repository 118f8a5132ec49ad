//! Shape statistics of sampled trees.

use serde::{Deserialize, Serialize};

use crate::sampler::{ColoredTree, NO_PARENT};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub size: usize,
    /// Edges from the root to the deepest vertex.
    pub height: usize,
    /// Largest number of vertices on one level.
    pub width: usize,
    pub level_profile: Vec<usize>,
    pub blue_size: usize,
    /// Largest total size of the non-blue trees hanging from one blue vertex.
    pub max_forest: usize,
    /// `histogram[k]` = number of blue vertices with `k` blue children.
    pub blue_degree_histogram: Vec<usize>,
}

impl TreeStats {
    pub fn forest_total(&self) -> usize {
        self.size - self.blue_size
    }
}

/// All statistics in one pass over the parent array. Relies on parents
/// preceding children, which every [`ColoredTree`] guarantees.
pub fn compute_stats(tree: &ColoredTree) -> TreeStats {
    let parent = tree.parents();
    let blue = tree.blue();
    let n = parent.len();
    let mut depth = vec![0u32; n];
    // for a non-blue vertex, the blue vertex its forest hangs from
    let mut owner = vec![0u32; n];
    let mut forest = vec![0usize; n];
    let mut blue_kids = vec![0usize; n];
    let mut level_profile = vec![0usize; 1];
    let mut blue_size = 0;
    for v in 0..n {
        let p = parent[v];
        if p != NO_PARENT {
            let p = p as usize;
            depth[v] = depth[p] + 1;
            if blue[v] {
                blue_kids[p] += 1;
            } else {
                let o = if blue[p] { p as u32 } else { owner[p] };
                owner[v] = o;
                forest[o as usize] += 1;
            }
        }
        if blue[v] {
            blue_size += 1;
        }
        let d = depth[v] as usize;
        if d >= level_profile.len() {
            level_profile.resize(d + 1, 0);
        }
        level_profile[d] += 1;
    }
    let mut blue_degree_histogram = Vec::new();
    let mut max_forest = 0;
    for v in (0..n).filter(|&v| blue[v]) {
        let k = blue_kids[v];
        if k >= blue_degree_histogram.len() {
            blue_degree_histogram.resize(k + 1, 0);
        }
        blue_degree_histogram[k] += 1;
        max_forest = max_forest.max(forest[v]);
    }
    TreeStats {
        size: n,
        height: level_profile.len() - 1,
        width: level_profile.iter().copied().max().unwrap_or(0),
        level_profile,
        blue_size,
        max_forest,
        blue_degree_histogram,
    }
}

/// Height of the blue subtree alone.
pub fn blue_height(tree: &ColoredTree) -> usize {
    let parent = tree.parents();
    let blue = tree.blue();
    let mut depth = vec![0usize; parent.len()];
    let mut height = 0;
    for v in 1..parent.len() {
        if blue[v] {
            depth[v] = depth[parent[v] as usize] + 1;
            height = height.max(depth[v]);
        }
    }
    height
}
