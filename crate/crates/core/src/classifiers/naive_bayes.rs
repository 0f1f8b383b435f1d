//! Gaussian and Bernoulli naive Bayes.
//!
//! The Gaussian variant fits per-class per-feature mean and (floored)
//! variance. The Bernoulli variant binarizes each feature at its
//! training-split threshold (median by default) and fits Laplace-smoothed
//! (alpha = 1) Bernoulli likelihoods. Scores are log-posterior gaps.

use std::f64::consts::PI;

use super::{BinarizePolicy, ModelParams, TrainSet};

pub(crate) fn train_gaussian_nb(ts: &TrainSet, variance_floor: f64) -> ModelParams {
    let f = ts.x.cols();
    let n = ts.x.rows();
    let mut counts = [0usize; 2];
    let mut means = vec![vec![0.0; f]; 2];
    for r in 0..n {
        let c = ts.y[r].as_u8() as usize;
        counts[c] += 1;
        for (m, x) in means[c].iter_mut().zip(ts.x.row(r)) {
            *m += x;
        }
    }
    for c in 0..2 {
        for m in &mut means[c] {
            *m /= counts[c] as f64;
        }
    }
    let mut variances = vec![vec![0.0; f]; 2];
    for r in 0..n {
        let c = ts.y[r].as_u8() as usize;
        for (v, (x, m)) in variances[c].iter_mut().zip(ts.x.row(r).iter().zip(&means[c])) {
            let d = x - m;
            *v += d * d;
        }
    }
    for c in 0..2 {
        for v in &mut variances[c] {
            *v = (*v / counts[c] as f64).max(variance_floor);
        }
    }
    let priors = vec![counts[0] as f64 / n as f64, counts[1] as f64 / n as f64];
    ModelParams::GaussianNb {
        priors,
        means,
        variances,
    }
}

pub(crate) fn gaussian_score(
    priors: &[f64],
    means: &[Vec<f64>],
    variances: &[Vec<f64>],
    features: &[f64],
) -> f64 {
    let log_post = |c: usize| -> f64 {
        let mut lp = priors[c].ln();
        for ((x, m), v) in features.iter().zip(&means[c]).zip(&variances[c]) {
            let d = x - m;
            lp += -0.5 * (2.0 * PI * v).ln() - d * d / (2.0 * v);
        }
        lp
    };
    log_post(1) - log_post(0)
}

pub(crate) fn train_bernoulli_nb(ts: &TrainSet, binarize: BinarizePolicy) -> ModelParams {
    let f = ts.x.cols();
    let n = ts.x.rows();
    let thresholds: Vec<f64> = match binarize {
        BinarizePolicy::Fixed(t) => vec![t; f],
        BinarizePolicy::TrainMedian => (0..f)
            .map(|c| {
                let mut col: Vec<f64> = (0..n).map(|r| ts.x.get(r, c)).collect();
                col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                if n % 2 == 1 {
                    col[n / 2]
                } else {
                    0.5 * (col[n / 2 - 1] + col[n / 2])
                }
            })
            .collect(),
    };
    let mut counts = [0usize; 2];
    let mut ones = vec![vec![0usize; f]; 2];
    for r in 0..n {
        let c = ts.y[r].as_u8() as usize;
        counts[c] += 1;
        for (k, (&x, &t)) in ts.x.row(r).iter().zip(&thresholds).enumerate() {
            if x > t {
                ones[c][k] += 1;
            }
        }
    }
    // Laplace smoothing with alpha = 1
    let prob_one: Vec<Vec<f64>> = (0..2)
        .map(|c| {
            ones[c]
                .iter()
                .map(|&o| (o as f64 + 1.0) / (counts[c] as f64 + 2.0))
                .collect()
        })
        .collect();
    let priors = vec![counts[0] as f64 / n as f64, counts[1] as f64 / n as f64];
    ModelParams::BernoulliNb {
        priors,
        prob_one,
        thresholds,
    }
}

pub(crate) fn bernoulli_score(
    priors: &[f64],
    prob_one: &[Vec<f64>],
    thresholds: &[f64],
    features: &[f64],
) -> f64 {
    let log_post = |c: usize| -> f64 {
        let mut lp = priors[c].ln();
        for ((&x, &t), &p) in features.iter().zip(thresholds).zip(&prob_one[c]) {
            lp += if x > t { p.ln() } else { (1.0 - p).ln() };
        }
        lp
    };
    log_post(1) - log_post(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;
    use crate::linalg::Matrix;

    #[test]
    fn gaussian_symmetric_boundary_at_zero() {
        // symmetric 1-D classes with means -3 and +3, equal spread
        let ts = TrainSet {
            x: Matrix::from_rows(vec![
                vec![-4.0],
                vec![-3.0],
                vec![-2.0],
                vec![2.0],
                vec![3.0],
                vec![4.0],
            ]),
            y: vec![
                Label::Clean,
                Label::Clean,
                Label::Clean,
                Label::Tampered,
                Label::Tampered,
                Label::Tampered,
            ],
        };
        let params = train_gaussian_nb(&ts, 1e-9);
        let ModelParams::GaussianNb {
            priors,
            means,
            variances,
        } = &params
        else {
            panic!()
        };
        assert_eq!(priors, &vec![0.5, 0.5]);
        let s = |x: f64| gaussian_score(priors, means, variances, &[x]);
        assert!(s(-0.1) < 0.0);
        assert!(s(0.1) > 0.0);
        assert!(s(0.0).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_median_thresholds() {
        let ts = TrainSet {
            x: Matrix::from_rows(vec![vec![1.0], vec![2.0], vec![3.0], vec![10.0]]),
            y: vec![Label::Clean, Label::Clean, Label::Tampered, Label::Tampered],
        };
        let params = train_bernoulli_nb(&ts, BinarizePolicy::TrainMedian);
        let ModelParams::BernoulliNb { thresholds, prob_one, .. } = &params else {
            panic!()
        };
        assert_eq!(thresholds[0], 2.5);
        // clean: 0 of 2 above median -> (0+1)/(2+2); tampered: 2 of 2 -> 3/4
        assert_eq!(prob_one[0][0], 0.25);
        assert_eq!(prob_one[1][0], 0.75);
    }

    #[test]
    fn label_swap_flips_scores() {
        let rows = vec![
            vec![0.1, 2.0],
            vec![0.4, 1.0],
            vec![2.2, -1.0],
            vec![2.9, -2.0],
            vec![0.2, 1.4],
            vec![2.5, -1.7],
        ];
        let y = vec![
            Label::Clean,
            Label::Clean,
            Label::Tampered,
            Label::Tampered,
            Label::Clean,
            Label::Tampered,
        ];
        let y_flip: Vec<Label> = y.iter().map(|l| l.flipped()).collect();
        let ts = TrainSet {
            x: Matrix::from_rows(rows.clone()),
            y,
        };
        let ts_flip = TrainSet {
            x: Matrix::from_rows(rows.clone()),
            y: y_flip,
        };
        let a = train_gaussian_nb(&ts, 1e-9);
        let b = train_gaussian_nb(&ts_flip, 1e-9);
        let (ModelParams::GaussianNb { priors: pa, means: ma, variances: va },
             ModelParams::GaussianNb { priors: pb, means: mb, variances: vb }) = (&a, &b)
        else {
            panic!()
        };
        for probe in &rows {
            let sa = gaussian_score(pa, ma, va, probe);
            let sb = gaussian_score(pb, mb, vb, probe);
            assert!((sa + sb).abs() < 1e-12);
        }
    }
}
