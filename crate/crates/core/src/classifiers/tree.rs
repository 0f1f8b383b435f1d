//! Greedy Gini decision tree with exhaustive threshold search.
//!
//! Candidate thresholds sit at midpoints of consecutive distinct sorted
//! feature values. Split quality is compared in exact integer arithmetic
//! (cross-multiplied rational Gini scores), so "equal gain" is
//! well-defined and the documented tie-breaks are deterministic: lowest
//! feature index first, then lowest threshold.

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};

use super::{TrainSet, TreeHyper};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        label: Label,
        /// Training-fraction gap p(tampered) - p(clean) at this leaf.
        score: f64,
    },
}

/// Node table; children always have larger indices than their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
}

impl TreeModel {
    pub fn predict(&self, features: &[f64]) -> (Label, f64) {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { label, score } => return (*label, *score),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if features[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Check the node table is a well-formed tree over `n_features`.
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::ModelFormat("empty tree".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } = node
            {
                if *feature >= n_features {
                    return Err(Error::ModelFormat(format!(
                        "node {i} splits on feature {feature} of {n_features}"
                    )));
                }
                if !threshold.is_finite() {
                    return Err(Error::ModelFormat(format!("node {i} threshold not finite")));
                }
                // children after parents makes cycles impossible
                if *left <= i || *right <= i || *left >= self.nodes.len() || *right >= self.nodes.len()
                {
                    return Err(Error::ModelFormat(format!("node {i} has bad children")));
                }
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Exact rational split score.
///
/// Minimizing weighted child Gini equals maximizing
/// Q = (nR*(aL^2+bL^2) + nL*(aR^2+bR^2)) / (nL*nR); both the numerator
/// and denominator fit i128 for any dataset this tool handles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SplitScore {
    num: i128,
    den: i128,
}

impl SplitScore {
    fn compute(a_left: usize, b_left: usize, a_right: usize, b_right: usize) -> SplitScore {
        let (al, bl, ar, br) = (a_left as i128, b_left as i128, a_right as i128, b_right as i128);
        let nl = al + bl;
        let nr = ar + br;
        SplitScore {
            num: nr * (al * al + bl * bl) + nl * (ar * ar + br * br),
            den: nl * nr,
        }
    }

    fn beats(&self, other: &SplitScore) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct Candidate {
    score: SplitScore,
    feature: usize,
    threshold: f64,
}

/// Provide the candidate feature set for one split; drawn fresh per node
/// so forests can subsample. Must return ascending indices.
pub(crate) type FeatureSampler<'a> = dyn FnMut() -> Vec<usize> + 'a;

pub(crate) fn train_tree(ts: &TrainSet, hp: &TreeHyper) -> TreeModel {
    let f = ts.x.cols();
    let rows: Vec<usize> = (0..ts.x.rows()).collect();
    grow(ts, rows, hp, &mut || (0..f).collect())
}

/// Build a tree on the given rows. Recursion order (node, then left
/// subtree, then right) fixes the order of feature-sampler calls.
pub(crate) fn grow(
    ts: &TrainSet,
    rows: Vec<usize>,
    hp: &TreeHyper,
    sampler: &mut FeatureSampler<'_>,
) -> TreeModel {
    let mut nodes = Vec::new();
    build_node(ts, rows, 0, hp, sampler, &mut nodes);
    TreeModel { nodes }
}

fn class_counts(ts: &TrainSet, rows: &[usize]) -> (usize, usize) {
    let tampered = rows.iter().filter(|&&r| ts.y[r] == Label::Tampered).count();
    (rows.len() - tampered, tampered)
}

fn make_leaf(nodes: &mut Vec<TreeNode>, clean: usize, tampered: usize) -> usize {
    let n = (clean + tampered) as f64;
    let score = (tampered as f64 - clean as f64) / n;
    let label = if tampered > clean {
        Label::Tampered
    } else {
        Label::Clean
    };
    nodes.push(TreeNode::Leaf { label, score });
    nodes.len() - 1
}

fn build_node(
    ts: &TrainSet,
    rows: Vec<usize>,
    depth: usize,
    hp: &TreeHyper,
    sampler: &mut FeatureSampler<'_>,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let (clean, tampered) = class_counts(ts, &rows);
    if clean == 0 || tampered == 0 || depth >= hp.max_depth || rows.len() < 2 * hp.min_leaf {
        return make_leaf(nodes, clean, tampered);
    }
    let candidates = sampler();
    let best = best_split(ts, &rows, &candidates, hp.min_leaf, clean, tampered);
    let Some(best) = best else {
        return make_leaf(nodes, clean, tampered);
    };
    let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
    for &r in &rows {
        if ts.x.get(r, best.feature) <= best.threshold {
            left_rows.push(r);
        } else {
            right_rows.push(r);
        }
    }
    let here = nodes.len();
    nodes.push(TreeNode::Leaf {
        label: Label::Clean,
        score: 0.0,
    }); // placeholder
    let left = build_node(ts, left_rows, depth + 1, hp, sampler, nodes);
    let right = build_node(ts, right_rows, depth + 1, hp, sampler, nodes);
    nodes[here] = TreeNode::Split {
        feature: best.feature,
        threshold: best.threshold,
        left,
        right,
    };
    here
}

fn best_split(
    ts: &TrainSet,
    rows: &[usize],
    candidate_features: &[usize],
    min_leaf: usize,
    clean: usize,
    tampered: usize,
) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    let n = rows.len();
    let mut column: Vec<(f64, Label)> = Vec::with_capacity(n);
    for &feature in candidate_features {
        column.clear();
        column.extend(rows.iter().map(|&r| (ts.x.get(r, feature), ts.y[r])));
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut a_left = 0usize; // clean on the left
        let mut b_left = 0usize; // tampered on the left
        for i in 0..n - 1 {
            match column[i].1 {
                Label::Clean => a_left += 1,
                Label::Tampered => b_left += 1,
            }
            let (lo, hi) = (column[i].0, column[i + 1].0);
            if lo == hi {
                continue;
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let score = SplitScore::compute(a_left, b_left, clean - a_left, tampered - b_left);
            // keep the threshold inside [lo, hi) so the <= predicate
            // reproduces the scanned partition even when the midpoint
            // rounds up to hi
            let mut threshold = 0.5 * (lo + hi);
            if !(threshold < hi) {
                threshold = lo;
            }
            let wins = match &best {
                None => true,
                Some(cur) => score.beats(&cur.score),
            };
            if wins {
                best = Some(Candidate {
                    score,
                    feature,
                    threshold,
                });
            }
        }
    }
    best
}
