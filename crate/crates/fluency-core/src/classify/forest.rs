//! Random forest: bagged Gini-split decision trees with per-node feature
//! subsampling.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::rng::{derive_seed, seeded_rng, stream};

use super::{check_predict_input, check_training_inputs};

#[derive(Debug, Clone, PartialEq)]
pub struct RfParams {
    pub n_estimators: usize,
    /// Features examined per split; `None` picks `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    /// Nodes smaller than this become leaves.
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for RfParams {
    fn default() -> Self {
        Self { n_estimators: 100, max_features: None, min_samples_split: 2, seed: 0 }
    }
}

/// Flat tree arena; children index into the node vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: u32, right: u32 },
    Leaf { counts: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf_for(&self, row: &[f64]) -> &[u32] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left as usize } else { *right as usize };
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }

    /// Leaf majority, ties toward the lowest class index.
    pub fn predict_one(&self, row: &[f64]) -> usize {
        let counts = self.leaf_for(row);
        let mut best = 0;
        for (c, &v) in counts.iter().enumerate().skip(1) {
            if v > counts[best] {
                best = c;
            }
        }
        best
    }
}

#[derive(Debug, Clone)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    n_features: usize,
    n_classes: usize,
}

fn gini(counts: &[u32], total: f64) -> f64 {
    let mut acc = 1.0;
    for &c in counts {
        let p = c as f64 / total;
        acc -= p * p;
    }
    acc
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    max_features: usize,
    min_samples_split: usize,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    /// Grows the subtree over `rows` (indices into x) and returns its node id.
    fn grow(&mut self, rows: &mut [usize], rng: &mut impl Rng) -> u32 {
        let mut counts = vec![0u32; self.n_classes];
        for &r in rows.iter() {
            counts[self.y[r]] += 1;
        }
        let total = rows.len() as f64;
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < self.min_samples_split {
            self.nodes.push(Node::Leaf { counts });
            return (self.nodes.len() - 1) as u32;
        }

        let parent_gini = gini(&counts, total);
        let d = self.x.cols();

        // Partial Fisher-Yates draw of the feature subset, then sorted so
        // candidate order (and therefore tie-breaking) is by feature index.
        let mut pool: Vec<usize> = (0..d).collect();
        for k in 0..self.max_features.min(d) {
            let j = rng.random_range(k..d);
            pool.swap(k, j);
        }
        let mut candidates = pool[..self.max_features.min(d)].to_vec();
        candidates.sort_unstable();

        let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        for &feature in &candidates {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| (self.x.get(r, feature), self.y[r])));
            sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let mut left = vec![0u32; self.n_classes];
            let mut right = counts.clone();
            for i in 0..sorted.len() - 1 {
                left[sorted[i].1] += 1;
                right[sorted[i].1] -= 1;
                if sorted[i].0 == sorted[i + 1].0 {
                    continue; // no threshold strictly between equal values
                }
                let nl = (i + 1) as f64;
                let nr = total - nl;
                let gain = parent_gini
                    - (nl / total) * gini(&left, nl)
                    - (nr / total) * gini(&right, nr);
                if best.map_or(gain > 1e-12, |(g, _, _)| gain > g + 1e-12) {
                    let threshold = 0.5 * (sorted[i].0 + sorted[i + 1].0);
                    best = Some((gain, feature, threshold));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            // All candidate features constant on this node.
            self.nodes.push(Node::Leaf { counts });
            return (self.nodes.len() - 1) as u32;
        };

        let mid = itertools_partition(rows, |&r| self.x.get(r, feature) <= threshold);
        let node_id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts: Vec::new() }); // placeholder
        let (left_rows, right_rows) = rows.split_at_mut(mid);
        let left = self.grow(left_rows, rng);
        let right = self.grow(right_rows, rng);
        self.nodes[node_id] = Node::Split { feature, threshold, left, right };
        node_id as u32
    }
}

/// Stable partition: reorders `rows` so items satisfying `pred` come first,
/// preserving relative order on both sides; returns the split point.
fn itertools_partition<F: Fn(&usize) -> bool>(rows: &mut [usize], pred: F) -> usize {
    let mut left: Vec<usize> = Vec::with_capacity(rows.len());
    let mut right: Vec<usize> = Vec::new();
    for &r in rows.iter() {
        if pred(&r) {
            left.push(r);
        } else {
            right.push(r);
        }
    }
    let mid = left.len();
    rows[..mid].copy_from_slice(&left);
    rows[mid..].copy_from_slice(&right);
    mid
}

fn grow_tree(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    params: &RfParams,
    max_features: usize,
    seed: u64,
) -> Tree {
    let mut rng = seeded_rng(seed);
    let n = x.rows();
    let mut rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut builder = TreeBuilder {
        x,
        y,
        n_classes,
        max_features,
        min_samples_split: params.min_samples_split.max(2),
        nodes: Vec::new(),
    };
    builder.grow(&mut rows, &mut rng);
    Tree { nodes: builder.nodes }
}

/// Trains `n_estimators` trees on bootstrap samples. Tree RNG streams are
/// derived from the seed by index, so parallel and serial runs build
/// identical forests.
pub fn rf_train(x: &Matrix, y: &[usize], params: &RfParams) -> Result<ForestModel> {
    check_training_inputs(x, y)?;
    if params.n_estimators == 0 {
        return Err(Error::Train("need at least one tree".into()));
    }
    let n_classes = y.iter().max().unwrap() + 1;
    let d = x.cols();
    let max_features = params.max_features.unwrap_or((d as f64).sqrt().ceil() as usize).clamp(1, d);

    let trees: Vec<Tree> = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(params.seed, stream::TREE, t as u64);
            grow_tree(x, y, n_classes, params, max_features, seed)
        })
        .collect();

    Ok(ForestModel { trees, n_features: d, n_classes })
}

impl ForestModel {
    pub(super) fn from_parts(trees: Vec<Tree>, n_features: usize, n_classes: usize) -> Self {
        Self { trees, n_features, n_classes }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Per-tree votes for one input row.
    pub fn tree_votes(&self, row: &[f64]) -> Vec<u32> {
        let mut votes = vec![0u32; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict_one(row)] += 1;
        }
        votes
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        check_predict_input(x, self.n_features)?;
        Ok((0..x.rows())
            .map(|i| {
                let votes = self.tree_votes(x.row(i));
                let mut best = 0;
                for (c, &v) in votes.iter().enumerate().skip(1) {
                    if v > votes[best] {
                        best = c;
                    }
                }
                best
            })
            .collect())
    }

    /// Tree-vote fractions per class.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        check_predict_input(x, self.n_features)?;
        let n_trees = self.trees.len() as f64;
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        for i in 0..x.rows() {
            let votes = self.tree_votes(x.row(i));
            let row = out.row_mut(i);
            for (c, &v) in votes.iter().enumerate() {
                row[c] = v as f64 / n_trees;
            }
        }
        Ok(out)
    }
}
