//! Independent oracles shared by the integration and acceptance suites.
//! Everything here recomputes results through a different route than the
//! library code it checks, and must stay that way.

use rand::Rng;
use thermwatch_core::dataset::Label;
use thermwatch_core::linalg::Matrix;

/// Gaussian elimination with partial pivoting; the independent dense
/// solver oracle.
pub fn gepp_solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.len(), n);
    let mut m: Vec<Vec<f64>> = (0..n).map(|r| a.row(r).to_vec()).collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if m[r][col].abs() > m[pivot][col].abs() {
                pivot = r;
            }
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        assert!(m[col][col] != 0.0, "oracle hit a zero pivot");
        for r in (col + 1)..n {
            let factor = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= factor * m[col][c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = rhs[r];
        for c in (r + 1)..n {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    x
}

/// Random symmetric strictly diagonally dominant system of size b.
pub fn random_dd_system<R: Rng>(rng: &mut R, b: usize) -> (Matrix, Vec<f64>) {
    let mut m = Matrix::zeros(b, b);
    for i in 0..b {
        for j in (i + 1)..b {
            let g = if rng.gen::<f64>() < 0.6 {
                rng.gen_range(0.05..2.0)
            } else {
                0.0
            };
            m.set(i, j, -g);
            m.set(j, i, -g);
        }
    }
    for i in 0..b {
        let off: f64 = (0..b).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum();
        m.set(i, i, off + rng.gen_range(0.2..1.5));
    }
    let p: Vec<f64> = (0..b).map(|_| rng.gen_range(0.0..3.0)).collect();
    (m, p)
}

/// Relative error between two vectors, scaled by the reference norm.
pub fn rel_error(x: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = x
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

/// Independently coded metrics formulas for the dual-implementation
/// check: plain textbook expressions, no shared helpers.
pub struct OracleMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub miss_rate: Option<f64>,
}

pub fn oracle_metrics(tp: u64, fp: u64, fn_: u64, tn: u64) -> OracleMetrics {
    let total = (tp + fp + fn_ + tn) as f64;
    let accuracy = (tp + tn) as f64 / total;
    let precision = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        1.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let miss_rate = if tp + fn_ == 0 {
        None
    } else {
        Some(fn_ as f64 / (tp + fn_) as f64)
    };
    OracleMetrics {
        accuracy,
        precision,
        recall,
        f1,
        miss_rate,
    }
}

/// Exhaustive-search decision tree oracle: enumerates every (feature,
/// midpoint threshold) split, compares exact rational Gini scores, and
/// applies the documented tie-breaks (lowest feature, then lowest
/// threshold). Used to check the production tree on small instances.
#[derive(Debug, PartialEq)]
pub enum OracleTree {
    Leaf {
        label: Label,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<OracleTree>,
        right: Box<OracleTree>,
    },
}

pub fn oracle_tree(
    x: &Matrix,
    y: &[Label],
    rows: &[usize],
    depth: usize,
    max_depth: usize,
    min_leaf: usize,
) -> OracleTree {
    let tampered = rows.iter().filter(|&&r| y[r] == Label::Tampered).count();
    let clean = rows.len() - tampered;
    let leaf = || OracleTree::Leaf {
        label: if tampered > clean {
            Label::Tampered
        } else {
            Label::Clean
        },
    };
    if clean == 0 || tampered == 0 || depth >= max_depth || rows.len() < 2 * min_leaf {
        return leaf();
    }
    // enumerate every candidate split exhaustively
    let mut best: Option<(num_den::Frac, usize, f64)> = None;
    for feature in 0..x.cols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| x.get(r, feature)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for w in values.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mut threshold = 0.5 * (lo + hi);
            if !(threshold < hi) {
                threshold = lo;
            }
            let mut counts = [[0i128; 2]; 2]; // [side][class]
            for &r in rows {
                let side = usize::from(!(x.get(r, feature) <= threshold));
                counts[side][usize::from(y[r] == Label::Tampered)] += 1;
            }
            let n_l = counts[0][0] + counts[0][1];
            let n_r = counts[1][0] + counts[1][1];
            if n_l < min_leaf as i128 || n_r < min_leaf as i128 {
                continue;
            }
            // quality to maximize: sum over children of (a^2+b^2)/n_child
            let frac = num_den::Frac {
                num: n_r * (counts[0][0] * counts[0][0] + counts[0][1] * counts[0][1])
                    + n_l * (counts[1][0] * counts[1][0] + counts[1][1] * counts[1][1]),
                den: n_l * n_r,
            };
            let better = match &best {
                None => true,
                Some((cur, _, _)) => frac.gt(cur),
            };
            if better {
                best = Some((frac, feature, threshold));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return leaf();
    };
    let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
    for &r in rows {
        if x.get(r, feature) <= threshold {
            left_rows.push(r);
        } else {
            right_rows.push(r);
        }
    }
    OracleTree::Split {
        feature,
        threshold,
        left: Box::new(oracle_tree(x, y, &left_rows, depth + 1, max_depth, min_leaf)),
        right: Box::new(oracle_tree(x, y, &right_rows, depth + 1, max_depth, min_leaf)),
    }
}

mod num_den {
    pub struct Frac {
        pub num: i128,
        pub den: i128,
    }

    impl Frac {
        pub fn gt(&self, other: &Frac) -> bool {
            self.num * other.den > other.num * self.den
        }
    }
}

/// Convert the production node table into the oracle shape for equality
/// checks.
pub fn tree_to_oracle_shape(
    tree: &thermwatch_core::classifiers::TreeModel,
    at: usize,
) -> OracleTree {
    use thermwatch_core::classifiers::TreeNode;
    match &tree.nodes[at] {
        TreeNode::Leaf { label, .. } => OracleTree::Leaf { label: *label },
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => OracleTree::Split {
            feature: *feature,
            threshold: *threshold,
            left: Box::new(tree_to_oracle_shape(tree, *left)),
            right: Box::new(tree_to_oracle_shape(tree, *right)),
        },
    }
}
