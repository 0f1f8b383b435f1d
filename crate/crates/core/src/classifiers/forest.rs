//! Random forest: bootstrap-resampled Gini trees with per-split uniform
//! feature subsampling and majority voting.
//!
//! Each tree's random stream derives from (seed, tree index), so trees
//! can be trained in any order or in parallel with identical results.
//! Per tree, the stream is consumed as: n bootstrap index draws, then the
//! per-split feature draws in tree build order.

use rand::Rng;

use crate::dataset::Label;
use crate::seeds::{self, stream};

use super::tree::{grow, TreeModel};
use super::{ForestHyper, TrainSet, TreeHyper};

pub(crate) fn train_forest(
    ts: &TrainSet,
    hp: &ForestHyper,
    tree_hp: &TreeHyper,
    seed: u64,
) -> Vec<TreeModel> {
    let n = ts.x.rows();
    let f = ts.x.cols();
    let k = hp
        .features_per_split
        .unwrap_or_else(|| (f as f64).sqrt().ceil() as usize)
        .clamp(1, f);
    (0..hp.n_trees)
        .map(|t| {
            let mut rng = seeds::rng_from(seeds::derive(seed, &[stream::TREE, t as u64]));
            let rows: Vec<usize> = if hp.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(ts, rows, tree_hp, &mut || sample_features(&mut rng, f, k))
        })
        .collect()
}

/// Draw k distinct feature indices, returned ascending so split
/// evaluation order matches the documented tie-break.
fn sample_features<R: Rng>(rng: &mut R, f: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..f).collect();
    for i in 0..k {
        let j = rng.gen_range(i..f);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    pool
}

/// Majority vote over the trees; ties go to Clean. The score is the
/// normalized vote gap.
pub(crate) fn predict_forest(trees: &[TreeModel], features: &[f64]) -> f64 {
    let tampered_votes = trees
        .iter()
        .filter(|t| t.predict(features).0 == Label::Tampered)
        .count();
    let clean_votes = trees.len() - tampered_votes;
    (tampered_votes as f64 - clean_votes as f64) / trees.len() as f64
}
