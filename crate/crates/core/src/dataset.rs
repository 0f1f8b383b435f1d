//! Labeled datasets: feature extraction from tampered traces, stratified
//! 70/30 splitting, and train-statistics normalization.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inject::TamperMask;
use crate::linalg::Matrix;
use crate::seeds;
use crate::trace::ThermalTrace;

pub const TRAIN_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Clean,
    Tampered,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Clean => 0,
            Label::Tampered => 1,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Clean => Label::Tampered,
            Label::Tampered => Label::Clean,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Clean => "clean",
            Label::Tampered => "tampered",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// The B per-core temperatures at each sample.
    RawTemps,
    /// Temperatures concatenated with first differences vs the previous
    /// sample (zero diffs at sample 0).
    RawPlusDiffs,
}

impl Default for FeatureMode {
    fn default() -> Self {
        FeatureMode::RawTemps
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw_temps" => Ok(FeatureMode::RawTemps),
            "raw_plus_diffs" => Ok(FeatureMode::RawPlusDiffs),
            other => Err(Error::InvalidParam(format!("unknown feature mode `{other}`"))),
        }
    }
}

/// Per-feature mean and standard deviation from the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

pub const SD_FLOOR: f64 = 1e-9;

impl NormStats {
    pub fn apply(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                got: features.len(),
                context: "features vs norm stats".into(),
            });
        }
        Ok(features
            .iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    pub fn write_csv(&self, path: &Path, feature_names: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["feature", "mean", "sd"])?;
        for (i, (m, s)) in self.means.iter().zip(&self.sds).enumerate() {
            let name = feature_names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("f{i}"));
            w.write_record([name, format!("{m}"), format!("{s}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: Matrix,
    pub labels: Vec<Label>,
    pub feature_names: Vec<String>,
    /// Set after `normalize`; None on raw datasets.
    pub norm_stats: Option<NormStats>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn label_counts(&self) -> (usize, usize) {
        let tampered = self.labels.iter().filter(|l| **l == Label::Tampered).count();
        (self.labels.len() - tampered, tampered)
    }
}

/// Train/test index sets; disjoint, covering, |train| = round(0.7 N).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Build per-timestep feature vectors labeled from the tamper mask.
pub fn build_dataset(
    tampered: &ThermalTrace,
    mask: &TamperMask,
    mode: FeatureMode,
) -> Result<LabeledDataset> {
    let n = tampered.n_samples();
    if mask.tampered.len() != n || mask.applied_delta.len() != n {
        return Err(Error::MaskLengthMismatch {
            trace: n,
            mask: mask.tampered.len(),
        });
    }
    let b = tampered.n_blocks();
    let (f, feature_names) = match mode {
        FeatureMode::RawTemps => (b, tampered.block_names.clone()),
        FeatureMode::RawPlusDiffs => {
            let mut names = tampered.block_names.clone();
            names.extend(tampered.block_names.iter().map(|n| format!("d_{n}")));
            (2 * b, names)
        }
    };
    let mut features = Matrix::zeros(n, f);
    for t in 0..n {
        let row = tampered.samples.row(t);
        features.row_mut(t)[..b].copy_from_slice(row);
        if mode == FeatureMode::RawPlusDiffs && t > 0 {
            for c in 0..b {
                let d = tampered.samples.get(t, c) - tampered.samples.get(t - 1, c);
                features.set(t, b + c, d);
            }
        }
    }
    let labels = mask
        .tampered
        .iter()
        .map(|&t| if t { Label::Tampered } else { Label::Clean })
        .collect();
    Ok(LabeledDataset {
        features,
        labels,
        feature_names,
        norm_stats: None,
    })
}

/// Stratified random 70/30 split, deterministic per seed.
///
/// Per-class train counts come from the largest-remainder rule against a
/// total of round(0.7 N), which keeps every class proportion within one
/// sample of the global 70%.
pub fn split(ds: &LabeledDataset, seed: u64) -> Result<SplitIndices> {
    let n = ds.len();
    if n < 10 {
        return Err(Error::InvalidParam(format!(
            "dataset too small to split: {n} samples (need >= 10)"
        )));
    }
    let mut class_indices: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, l) in ds.labels.iter().enumerate() {
        class_indices[l.as_u8() as usize].push(i);
    }
    for (c, idx) in class_indices.iter().enumerate() {
        if idx.len() < 2 {
            let class = if c == 0 { "clean" } else { "tampered" };
            return Err(Error::DegenerateClass {
                class: class.into(),
                count: idx.len(),
            });
        }
    }
    let target_total = (TRAIN_FRACTION * n as f64).round() as usize;
    let ideals: Vec<f64> = class_indices
        .iter()
        .map(|idx| TRAIN_FRACTION * idx.len() as f64)
        .collect();
    let mut takes: Vec<usize> = ideals.iter().map(|v| v.floor() as usize).collect();
    let mut leftover = target_total - takes.iter().sum::<usize>();
    // distribute remainders by descending fractional part, ties to the
    // lower class index
    let mut order: Vec<usize> = (0..takes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideals[a] - ideals[a].floor();
        let fb = ideals[b] - ideals[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for c in order {
        if leftover == 0 {
            break;
        }
        if takes[c] < class_indices[c].len() {
            takes[c] += 1;
            leftover -= 1;
        }
    }
    let mut rng = seeds::rng_from(seed);
    let mut train = Vec::with_capacity(target_total);
    let mut test = Vec::with_capacity(n - target_total);
    for (idx, take) in class_indices.iter_mut().zip(&takes) {
        shuffle(idx, &mut rng);
        train.extend_from_slice(&idx[..*take]);
        test.extend_from_slice(&idx[*take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test, seed })
}

/// Fisher-Yates with the seeded stream; one draw per swap.
fn shuffle<R: Rng>(v: &mut [usize], rng: &mut R) {
    for i in (1..v.len()).rev() {
        let j = rng.gen_range(0..=i);
        v.swap(i, j);
    }
}

/// Z-score every row using mean/sd of the training split only.
pub fn normalize(ds: &LabeledDataset, idx: &SplitIndices) -> Result<LabeledDataset> {
    let f = ds.n_features();
    let n_train = idx.train.len();
    if n_train == 0 {
        return Err(Error::InvalidParam("empty training split".into()));
    }
    let mut means = vec![0.0; f];
    for &r in &idx.train {
        for (c, m) in means.iter_mut().enumerate() {
            *m += ds.features.get(r, c);
        }
    }
    for m in &mut means {
        *m /= n_train as f64;
    }
    let mut vars = vec![0.0; f];
    for &r in &idx.train {
        for (c, v) in vars.iter_mut().enumerate() {
            let d = ds.features.get(r, c) - means[c];
            *v += d * d;
        }
    }
    let sds: Vec<f64> = vars
        .iter()
        .map(|v| (v / n_train as f64).sqrt().max(SD_FLOOR))
        .collect();
    let mut out = ds.features.clone();
    for r in 0..out.rows() {
        for c in 0..f {
            out.set(r, c, (ds.features.get(r, c) - means[c]) / sds[c]);
        }
    }
    Ok(LabeledDataset {
        features: out,
        labels: ds.labels.clone(),
        feature_names: ds.feature_names.clone(),
        norm_stats: Some(NormStats { means, sds }),
    })
}

/// Export as CSV: feature columns, `label` (0/1), `split` (train/test).
pub fn export_csv(ds: &LabeledDataset, idx: &SplitIndices, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = ds.feature_names.clone();
    header.push("label".into());
    header.push("split".into());
    w.write_record(&header)?;
    let mut is_train = vec![false; ds.len()];
    for &t in &idx.train {
        is_train[t] = true;
    }
    for r in 0..ds.len() {
        let mut row: Vec<String> = ds.features.row(r).iter().map(|v| format!("{v}")).collect();
        row.push(ds.labels[r].as_u8().to_string());
        row.push(if is_train[r] { "train" } else { "test" }.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a dataset CSV written by `export_csv`.
pub fn import_csv(path: &Path) -> Result<(LabeledDataset, SplitIndices)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|s| s.to_string()).collect();
    if header.len() < 3 || header[header.len() - 2] != "label" || header[header.len() - 1] != "split"
    {
        return Err(Error::InvalidParam(
            "dataset csv must end with `label` and `split` columns".into(),
        ));
    }
    let f = header.len() - 2;
    let feature_names = header[..f].to_vec();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::DimensionMismatch {
                expected: header.len(),
                got: record.len(),
                context: format!("dataset csv row {}", i + 2),
            });
        }
        let mut row = Vec::with_capacity(f);
        for field in record.iter().take(f) {
            row.push(field.trim().parse::<f64>().map_err(|_| {
                Error::InvalidParam(format!("bad feature value `{field}` in dataset csv"))
            })?);
        }
        rows.push(row);
        labels.push(match record[f].trim() {
            "0" => Label::Clean,
            "1" => Label::Tampered,
            other => {
                return Err(Error::InvalidParam(format!("bad label `{other}`")));
            }
        });
        match record[f + 1].trim() {
            "train" => train.push(i),
            "test" => test.push(i),
            other => {
                return Err(Error::InvalidParam(format!("bad split tag `{other}`")));
            }
        }
    }
    Ok((
        LabeledDataset {
            features: Matrix::from_rows(rows),
            labels,
            feature_names,
            norm_stats: None,
        },
        SplitIndices {
            train,
            test,
            seed: 0,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inject::{inject, AttackConfig, AttackScenario, SignPolicy, VictimSelect};

    fn synthetic_trace(n: usize, b: usize) -> ThermalTrace {
        let mut m = Matrix::zeros(n, b);
        for r in 0..n {
            for c in 0..b {
                m.set(r, c, 50.0 + ((r * 31 + c * 7) % 13) as f64 * 0.1);
            }
        }
        ThermalTrace {
            block_names: (0..b).map(|i| format!("c{i}")).collect(),
            samples: m,
        }
    }

    fn tampered_dataset(n: usize, rate: f64, seed: u64) -> (LabeledDataset, TamperMask) {
        let t = synthetic_trace(n, 6);
        let cfg = AttackConfig {
            scenario: AttackScenario::Elevation,
            attack_rate: rate,
            delta_t_error: 1.0,
            victim: VictimSelect::Core(2),
            seed,
            sign_policy: SignPolicy::default(),
        };
        let (tt, mask) = inject(&t, &cfg).unwrap();
        let ds = build_dataset(&tt, &mask, FeatureMode::RawTemps).unwrap();
        (ds, mask)
    }

    #[test]
    fn all_false_mask_all_clean() {
        let t = synthetic_trace(20, 4);
        let mask = TamperMask {
            victim_core: 0,
            tampered: vec![false; 20],
            applied_delta: vec![0.0; 20],
        };
        let ds = build_dataset(&t, &mask, FeatureMode::RawTemps).unwrap();
        assert!(ds.labels.iter().all(|l| *l == Label::Clean));
    }

    #[test]
    fn rate_one_all_tampered() {
        let (ds, _) = tampered_dataset(50, 1.0, 3);
        assert!(ds.labels.iter().all(|l| *l == Label::Tampered));
    }

    #[test]
    fn label_counts_match_mask() {
        let (ds, mask) = tampered_dataset(500, 0.6, 5);
        let (_, tampered) = ds.label_counts();
        assert_eq!(tampered, mask.tampered_count());
    }

    #[test]
    fn diffs_mode_shapes() {
        let t = synthetic_trace(30, 6);
        let mask = TamperMask {
            victim_core: 0,
            tampered: vec![false; 30],
            applied_delta: vec![0.0; 30],
        };
        let ds = build_dataset(&t, &mask, FeatureMode::RawPlusDiffs).unwrap();
        assert_eq!(ds.n_features(), 12);
        // sample 0 has zero diffs
        for c in 6..12 {
            assert_eq!(ds.features.get(0, c), 0.0);
        }
        // diff equals consecutive difference
        let expect = t.samples.get(5, 3) - t.samples.get(4, 3);
        assert_eq!(ds.features.get(5, 9), expect);
    }

    #[test]
    fn mask_length_mismatch_rejected() {
        let t = synthetic_trace(10, 3);
        let mask = TamperMask {
            victim_core: 0,
            tampered: vec![false; 9],
            applied_delta: vec![0.0; 9],
        };
        assert!(build_dataset(&t, &mask, FeatureMode::RawTemps).is_err());
    }

    #[test]
    fn split_small_balanced() {
        let mut labels = vec![Label::Clean; 5];
        labels.extend(vec![Label::Tampered; 5]);
        let ds = LabeledDataset {
            features: Matrix::zeros(10, 2),
            labels,
            feature_names: vec!["a".into(), "b".into()],
            norm_stats: None,
        };
        let idx = split(&ds, 1).unwrap();
        assert_eq!(idx.train.len(), 7);
        assert_eq!(idx.test.len(), 3);
        let train_tampered = idx
            .train
            .iter()
            .filter(|&&i| ds.labels[i] == Label::Tampered)
            .count();
        assert!(train_tampered == 3 || train_tampered == 4);
    }

    #[test]
    fn split_deterministic() {
        let (ds, _) = tampered_dataset(300, 0.6, 8);
        assert_eq!(split(&ds, 42).unwrap(), split(&ds, 42).unwrap());
        assert_ne!(split(&ds, 42).unwrap().train, split(&ds, 43).unwrap().train);
    }

    #[test]
    fn split_covers_disjoint() {
        let (ds, _) = tampered_dataset(233, 0.8, 8);
        let idx = split(&ds, 7).unwrap();
        let mut seen = vec![0u8; ds.len()];
        for &i in idx.train.iter().chain(&idx.test) {
            seen[i] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(idx.train.len(), (0.7 * 233.0_f64).round() as usize);
    }

    #[test]
    fn single_class_split_rejected() {
        let ds = LabeledDataset {
            features: Matrix::zeros(12, 2),
            labels: vec![Label::Clean; 12],
            feature_names: vec!["a".into(), "b".into()],
            norm_stats: None,
        };
        assert!(matches!(split(&ds, 1), Err(Error::DegenerateClass { .. })));
    }

    #[test]
    fn normalize_train_stats() {
        let (ds, _) = tampered_dataset(400, 0.6, 2);
        let idx = split(&ds, 5).unwrap();
        let norm = normalize(&ds, &idx).unwrap();
        let stats = norm.norm_stats.as_ref().unwrap();
        for c in 0..norm.n_features() {
            let vals: Vec<f64> = idx.train.iter().map(|&r| norm.features.get(r, c)).collect();
            let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
            let sd =
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64).sqrt();
            assert!(mean.abs() < 1e-9, "col {c} mean {mean}");
            assert!((sd - 1.0).abs() < 1e-9, "col {c} sd {sd}");
            assert!(stats.sds[c] > 0.0);
        }
    }

    #[test]
    fn constant_feature_normalizes_to_zero() {
        let mut features = Matrix::zeros(20, 1);
        for r in 0..20 {
            features.set(r, 0, 3.5);
        }
        let mut labels = vec![Label::Clean; 10];
        labels.extend(vec![Label::Tampered; 10]);
        let ds = LabeledDataset {
            features,
            labels,
            feature_names: vec!["k".into()],
            norm_stats: None,
        };
        let idx = split(&ds, 1).unwrap();
        let norm = normalize(&ds, &idx).unwrap();
        assert!(norm.features.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalization_invertible_on_train() {
        let (ds, _) = tampered_dataset(200, 0.8, 4);
        let idx = split(&ds, 2).unwrap();
        let norm = normalize(&ds, &idx).unwrap();
        let stats = norm.norm_stats.as_ref().unwrap();
        for &r in &idx.train {
            for c in 0..ds.n_features() {
                let rebuilt = norm.features.get(r, c) * stats.sds[c] + stats.means[c];
                assert!((rebuilt - ds.features.get(r, c)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let (ds, _) = tampered_dataset(60, 0.6, 6);
        let idx = split(&ds, 3).unwrap();
        let norm = normalize(&ds, &idx).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        export_csv(&norm, &idx, &path).unwrap();
        let (back, back_idx) = import_csv(&path).unwrap();
        assert_eq!(back.labels, norm.labels);
        assert_eq!(back.feature_names, norm.feature_names);
        assert_eq!(back_idx.train, idx.train);
        assert_eq!(back_idx.test, idx.test);
        for (a, b) in back.features.data().iter().zip(norm.features.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
