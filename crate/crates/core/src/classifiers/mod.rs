//! Six small classifiers behind one train/predict interface: linear SVM,
//! logistic regression, decision tree, random forest, and Gaussian and
//! Bernoulli naive Bayes. All are trained from scratch on the labeled
//! datasets produced by `dataset`, deterministically for a given seed.
//!
//! Prediction returns a label plus a real score (signed margin, log-odds,
//! or log-posterior gap); the label is `Tampered` exactly when the score
//! is strictly positive, so a score of zero breaks ties toward `Clean`.

mod forest;
mod linear;
mod naive_bayes;
mod tree;

pub use linear::{logreg_loss, svm_loss};
pub use tree::{TreeModel, TreeNode};

use linear::{train_logreg, train_svm};
use naive_bayes::{train_bernoulli_nb, train_gaussian_nb};
use tree::train_tree;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset, NormStats, SplitIndices};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LinearSvm,
    LogisticRegression,
    DecisionTree,
    RandomForest,
    GaussianNb,
    BernoulliNb,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::LinearSvm,
        ClassifierKind::LogisticRegression,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::GaussianNb,
        ClassifierKind::BernoulliNb,
    ];
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassifierKind::LinearSvm => "linear_svm",
            ClassifierKind::LogisticRegression => "logistic_regression",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::GaussianNb => "gaussian_nb",
            ClassifierKind::BernoulliNb => "bernoulli_nb",
        };
        f.write_str(s)
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear_svm" => Ok(ClassifierKind::LinearSvm),
            "logistic_regression" => Ok(ClassifierKind::LogisticRegression),
            "decision_tree" => Ok(ClassifierKind::DecisionTree),
            "random_forest" => Ok(ClassifierKind::RandomForest),
            "gaussian_nb" => Ok(ClassifierKind::GaussianNb),
            "bernoulli_nb" => Ok(ClassifierKind::BernoulliNb),
            other => Err(Error::InvalidParam(format!("unknown classifier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmHyper {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmHyper {
    fn default() -> Self {
        SvmHyper {
            lambda: 1e-3,
            epochs: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogRegHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogRegHyper {
    fn default() -> Self {
        LogRegHyper {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeHyper {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeHyper {
    fn default() -> Self {
        TreeHyper {
            max_depth: 8,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestHyper {
    pub n_trees: usize,
    /// Features sampled per split; None means ceil(sqrt(F)).
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestHyper {
    fn default() -> Self {
        ForestHyper {
            n_trees: 50,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianNbHyper {
    pub variance_floor: f64,
}

impl Default for GaussianNbHyper {
    fn default() -> Self {
        GaussianNbHyper {
            variance_floor: 1e-9,
        }
    }
}

/// Where the Bernoulli variant puts its binarization threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinarizePolicy {
    /// Per-feature median of the training split.
    TrainMedian,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BernoulliNbHyper {
    pub binarize: BinarizePolicy,
}

impl Default for BernoulliNbHyper {
    fn default() -> Self {
        BernoulliNbHyper {
            binarize: BinarizePolicy::TrainMedian,
        }
    }
}

/// Hyperparameters for every classifier kind plus the shared seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparams {
    pub seed: u64,
    pub svm: SvmHyper,
    pub logreg: LogRegHyper,
    pub tree: TreeHyper,
    pub forest: ForestHyper,
    pub gaussian_nb: GaussianNbHyper,
    pub bernoulli_nb: BernoulliNbHyper,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParam(msg.into()));
        if !(self.svm.lambda > 0.0) {
            return bad("svm.lambda must be > 0");
        }
        if self.svm.epochs == 0 || self.logreg.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if !(self.logreg.learning_rate > 0.0) {
            return bad("logreg.learning_rate must be > 0");
        }
        if !(self.logreg.l2 >= 0.0) {
            return bad("logreg.l2 must be >= 0");
        }
        if self.tree.max_depth == 0 {
            return bad("tree.max_depth must be >= 1");
        }
        if self.tree.min_leaf == 0 {
            return bad("tree.min_leaf must be >= 1");
        }
        if self.forest.n_trees == 0 {
            return bad("forest.n_trees must be >= 1");
        }
        if self.forest.features_per_split == Some(0) {
            return bad("forest.features_per_split must be >= 1");
        }
        if !(self.gaussian_nb.variance_floor > 0.0) {
            return bad("gaussian_nb.variance_floor must be > 0");
        }
        Ok(())
    }
}

/// Kind-specific fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    Tree {
        tree: TreeModel,
    },
    Forest {
        trees: Vec<TreeModel>,
    },
    GaussianNb {
        priors: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    },
    BernoulliNb {
        priors: Vec<f64>,
        prob_one: Vec<Vec<f64>>,
        thresholds: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    pub n_features: usize,
    pub hyperparams: Hyperparams,
    pub params: ModelParams,
    pub norm_stats: Option<NormStats>,
}

/// Training rows copied out of a dataset.
pub(crate) struct TrainSet {
    pub x: Matrix,
    pub y: Vec<Label>,
}

fn gather_train_set(ds: &LabeledDataset, idx: &SplitIndices) -> Result<TrainSet> {
    if idx.train.is_empty() {
        return Err(Error::InvalidParam("empty training split".into()));
    }
    let f = ds.n_features();
    let mut x = Matrix::zeros(idx.train.len(), f);
    let mut y = Vec::with_capacity(idx.train.len());
    for (out_row, &r) in idx.train.iter().enumerate() {
        for c in 0..f {
            let v = ds.features.get(r, c);
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row: r, col: c });
            }
            x.set(out_row, c, v);
        }
        y.push(ds.labels[r]);
    }
    let tampered = y.iter().filter(|l| **l == Label::Tampered).count();
    if tampered == 0 || tampered == y.len() {
        return Err(Error::SingleClassTraining);
    }
    Ok(TrainSet { x, y })
}

/// Train one classifier kind on the training split of a dataset.
pub fn train(
    kind: ClassifierKind,
    hp: &Hyperparams,
    ds: &LabeledDataset,
    idx: &SplitIndices,
) -> Result<TrainedModel> {
    hp.validate()?;
    let ts = gather_train_set(ds, idx)?;
    let params = match kind {
        ClassifierKind::LinearSvm => {
            let (weights, bias) = train_svm(&ts, hp.svm.lambda, hp.svm.epochs);
            ModelParams::Linear { weights, bias }
        }
        ClassifierKind::LogisticRegression => {
            let (weights, bias) = train_logreg(
                &ts,
                hp.logreg.learning_rate,
                hp.logreg.epochs,
                hp.logreg.l2,
            );
            ModelParams::Linear { weights, bias }
        }
        ClassifierKind::DecisionTree => ModelParams::Tree {
            tree: train_tree(&ts, &hp.tree),
        },
        ClassifierKind::RandomForest => ModelParams::Forest {
            trees: forest::train_forest(&ts, &hp.forest, &hp.tree, hp.seed),
        },
        ClassifierKind::GaussianNb => train_gaussian_nb(&ts, hp.gaussian_nb.variance_floor),
        ClassifierKind::BernoulliNb => train_bernoulli_nb(&ts, hp.bernoulli_nb.binarize),
    };
    let model = TrainedModel {
        kind,
        n_features: ds.n_features(),
        hyperparams: *hp,
        params,
        norm_stats: ds.norm_stats.clone(),
    };
    model.validate()?;
    Ok(model)
}

impl TrainedModel {
    pub fn validate(&self) -> Result<()> {
        let finite = |vals: &[f64], what: &str| -> Result<()> {
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::ModelFormat(format!("non-finite {what}")));
            }
            Ok(())
        };
        match &self.params {
            ModelParams::Linear { weights, bias } => {
                if weights.len() != self.n_features {
                    return Err(Error::ModelFormat("weight length mismatch".into()));
                }
                finite(weights, "weights")?;
                finite(&[*bias], "bias")?;
            }
            ModelParams::Tree { tree } => tree.validate(self.n_features)?,
            ModelParams::Forest { trees } => {
                for t in trees {
                    t.validate(self.n_features)?;
                }
            }
            ModelParams::GaussianNb {
                priors,
                means,
                variances,
            } => {
                validate_priors(priors)?;
                for row in means.iter().chain(variances) {
                    if row.len() != self.n_features {
                        return Err(Error::ModelFormat("nb stats length mismatch".into()));
                    }
                    finite(row, "nb stats")?;
                }
            }
            ModelParams::BernoulliNb {
                priors,
                prob_one,
                thresholds,
            } => {
                validate_priors(priors)?;
                if thresholds.len() != self.n_features {
                    return Err(Error::ModelFormat("threshold length mismatch".into()));
                }
                finite(thresholds, "thresholds")?;
                for row in prob_one {
                    if row.len() != self.n_features {
                        return Err(Error::ModelFormat("nb prob length mismatch".into()));
                    }
                    if row.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
                        return Err(Error::ModelFormat("bernoulli probs out of (0,1)".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Classify one feature vector; the caller is responsible for applying
    /// `norm_stats` first when the model was trained on normalized data.
    pub fn predict(&self, features: &[f64]) -> Result<(Label, f64)> {
        if features.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: features.len(),
                context: "features vs model".into(),
            });
        }
        let score = match &self.params {
            ModelParams::Linear { weights, bias } => {
                weights.iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + bias
            }
            ModelParams::Tree { tree } => tree.predict(features).1,
            ModelParams::Forest { trees } => forest::predict_forest(trees, features),
            ModelParams::GaussianNb {
                priors,
                means,
                variances,
            } => naive_bayes::gaussian_score(priors, means, variances, features),
            ModelParams::BernoulliNb {
                priors,
                prob_one,
                thresholds,
            } => naive_bayes::bernoulli_score(priors, prob_one, thresholds, features),
        };
        let label = if score > 0.0 {
            Label::Tampered
        } else {
            Label::Clean
        };
        Ok((label, score))
    }

    pub fn predict_batch(&self, features: &Matrix) -> Result<Vec<(Label, f64)>> {
        (0..features.rows())
            .map(|r| self.predict(features.row(r)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        file.model.validate()?;
        Ok(file.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

fn validate_priors(priors: &[f64]) -> Result<()> {
    if priors.len() != 2 {
        return Err(Error::ModelFormat("expected 2 class priors".into()));
    }
    let sum: f64 = priors.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::ModelFormat(format!("priors sum to {sum}, not 1")));
    }
    Ok(())
}

/// Self-describing serialized model.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: TrainedModel,
}
