//! Sweep harness: runs the inject -> dataset -> train -> evaluate
//! pipeline over a grid of (scenario, rate, delta, detector, seed) cells.
//!
//! Cells are fully independent and deterministically seeded, so parallel
//! execution reproduces the sequential output exactly. Classifier cells
//! at the same (scenario, rate, delta, seed) share the tampered dataset
//! and split, which keeps detectors comparable the way the evaluation
//! intends.
//!
//! A delta of exactly 0 is a clean-control cell: the detector is trained
//! (or the baseline calibrated) against a reference attack of magnitude
//! `control_reference_delta`, then evaluated on untampered data, so the
//! row reports false alarms and its miss rate is not applicable.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::baseline;
use crate::classifiers::{train, ClassifierKind, Hyperparams};
use crate::dataset::{build_dataset, normalize, split, FeatureMode, Label};
use crate::error::{Error, Result};
use crate::inject::{inject, AttackConfig, AttackScenario, SignPolicy, TamperMask, VictimSelect, ALLOWED_RATES};
use crate::metrics::{compute_metrics, ConfusionMatrix, EvalMetrics};
use crate::seeds::{self, stream};
use crate::trace::ThermalTrace;

/// A detector under evaluation: one of the ML classifiers or the
/// residual-consistency baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Ml(ClassifierKind),
    Baseline,
}

impl DetectorKind {
    pub fn all_with_baseline() -> Vec<DetectorKind> {
        let mut v: Vec<DetectorKind> = ClassifierKind::ALL.into_iter().map(DetectorKind::Ml).collect();
        v.push(DetectorKind::Baseline);
        v
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectorKind::Ml(k) => k.fmt(f),
            DetectorKind::Baseline => f.write_str("baseline"),
        }
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "baseline" {
            Ok(DetectorKind::Baseline)
        } else {
            s.parse::<ClassifierKind>().map(DetectorKind::Ml)
        }
    }
}

impl Serialize for DetectorKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DetectorKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(|e: Error| D::Error::custom(e.to_string()))
    }
}

/// Axes of the evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub delta_t_values: Vec<f64>,
    pub rates: Vec<f64>,
    pub scenarios: Vec<AttackScenario>,
    pub detectors: Vec<DetectorKind>,
    pub seeds: Vec<u64>,
    pub run_failure_threshold: f64,
    /// Attack magnitude used to train the model evaluated in
    /// clean-control (delta = 0) cells.
    pub control_reference_delta: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            delta_t_values: vec![-0.8, -0.6, -0.4, -0.2, 0.2, 0.4, 0.6, 0.8],
            rates: vec![0.8, 0.6, 0.4],
            scenarios: vec![AttackScenario::Elevation],
            detectors: DetectorKind::all_with_baseline(),
            seeds: vec![1, 2, 3],
            run_failure_threshold: 0.05,
            control_reference_delta: 15.0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.delta_t_values.is_empty()
            || self.rates.is_empty()
            || self.scenarios.is_empty()
            || self.detectors.is_empty()
            || self.seeds.is_empty()
        {
            return Err(Error::InvalidParam("sweep axes must be non-empty".into()));
        }
        if self.delta_t_values.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidParam("delta_t_values must be finite".into()));
        }
        for r in &self.rates {
            if !ALLOWED_RATES.contains(r) {
                return Err(Error::InvalidParam(format!(
                    "sweep rate {r} not in {ALLOWED_RATES:?}"
                )));
            }
        }
        if !(self.control_reference_delta != 0.0 && self.control_reference_delta.is_finite()) {
            return Err(Error::InvalidParam(
                "control_reference_delta must be finite and nonzero".into(),
            ));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.delta_t_values.len()
            * self.rates.len()
            * self.scenarios.len()
            * self.detectors.len()
            * self.seeds.len()
    }
}

/// Shared inputs for every cell of a sweep.
#[derive(Debug, Clone)]
pub struct CellContext<'a> {
    pub clean: &'a ThermalTrace,
    pub feature_mode: FeatureMode,
    pub hyperparams: &'a Hyperparams,
    pub baseline_k: f64,
    pub run_failure_threshold: f64,
    pub control_reference_delta: f64,
    pub sign_policy: SignPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResultRow {
    pub scenario: AttackScenario,
    pub rate: f64,
    pub delta_t: f64,
    pub detector: DetectorKind,
    pub seed: u64,
    pub n_test: usize,
    pub cm: ConfusionMatrix,
    pub metrics: EvalMetrics,
}

#[derive(Debug, Clone)]
pub struct CellFailure {
    pub context: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepResultRow>,
    pub failures: Vec<CellFailure>,
}

fn scenario_tag(s: AttackScenario) -> u64 {
    match s {
        AttackScenario::Lowering => 0,
        AttackScenario::Elevation => 1,
        AttackScenario::Fluctuation => 2,
    }
}

fn cell_context_string(
    scenario: AttackScenario,
    rate: f64,
    delta_t: f64,
    detector: DetectorKind,
    seed: u64,
) -> String {
    format!("scenario={scenario} rate={rate} delta_t={delta_t} classifier={detector} seed={seed}")
}

/// Run one grid cell end to end.
pub fn run_cell(
    ctx: &CellContext<'_>,
    scenario: AttackScenario,
    rate: f64,
    delta_t: f64,
    detector: DetectorKind,
    seed: u64,
) -> Result<SweepResultRow> {
    run_cell_inner(ctx, scenario, rate, delta_t, detector, seed).map_err(|e| {
        e.in_cell(cell_context_string(scenario, rate, delta_t, detector, seed))
    })
}

fn run_cell_inner(
    ctx: &CellContext<'_>,
    scenario: AttackScenario,
    rate: f64,
    delta_t: f64,
    detector: DetectorKind,
    seed: u64,
) -> Result<SweepResultRow> {
    let is_control = delta_t == 0.0;
    let train_delta = if is_control {
        ctx.control_reference_delta
    } else {
        delta_t
    };
    let attack_seed = seeds::derive(
        seed,
        &[
            stream::ATTACK,
            scenario_tag(scenario),
            rate.to_bits(),
            delta_t.to_bits(),
        ],
    );
    let cfg = AttackConfig {
        scenario,
        attack_rate: rate,
        delta_t_error: train_delta,
        victim: VictimSelect::Random,
        seed: attack_seed,
        sign_policy: ctx.sign_policy,
    };
    let (tampered, mask) = inject(ctx.clean, &cfg)?;
    let ds = build_dataset(&tampered, &mask, ctx.feature_mode)?;
    let idx = split(&ds, seeds::derive(attack_seed, &[stream::SPLIT]))?;
    let norm = normalize(&ds, &idx)?;

    let pairs: Vec<(Label, Label)> = match detector {
        DetectorKind::Ml(kind) => {
            let hp = Hyperparams {
                seed: seeds::derive(attack_seed, &[stream::TRAIN]),
                ..*ctx.hyperparams
            };
            let model = train(kind, &hp, &norm, &idx)?;
            if is_control {
                let clean_ds = clean_dataset(ctx.clean, ctx.feature_mode)?;
                let stats = norm
                    .norm_stats
                    .as_ref()
                    .expect("normalize always sets stats");
                idx.test
                    .iter()
                    .map(|&t| {
                        let z = stats.apply(clean_ds.features.row(t))?;
                        let (pred, _) = model.predict(&z)?;
                        Ok((Label::Clean, pred))
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                idx.test
                    .iter()
                    .map(|&t| {
                        let (pred, _) = model.predict(norm.features.row(t))?;
                        Ok((ds.labels[t], pred))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        }
        DetectorKind::Baseline => {
            let model = baseline::calibrate(ctx.clean, ctx.baseline_k)?;
            let target = if is_control { ctx.clean } else { &tampered };
            let flags = baseline::detect(&model, target)?;
            idx.test
                .iter()
                .map(|&t| {
                    let truth = if is_control { Label::Clean } else { ds.labels[t] };
                    let pred = if flags[t] {
                        Label::Tampered
                    } else {
                        Label::Clean
                    };
                    (truth, pred)
                })
                .collect()
        }
    };
    let n_test = pairs.len();
    let cm = ConfusionMatrix::from_pairs(pairs);
    let metrics = compute_metrics(&cm, ctx.run_failure_threshold)?;
    Ok(SweepResultRow {
        scenario,
        rate,
        delta_t,
        detector,
        seed,
        n_test,
        cm,
        metrics,
    })
}

/// Features of the untampered trace, for control-cell evaluation.
fn clean_dataset(
    trace: &ThermalTrace,
    mode: FeatureMode,
) -> Result<crate::dataset::LabeledDataset> {
    let mask = TamperMask {
        victim_core: 0,
        tampered: vec![false; trace.n_samples()],
        applied_delta: vec![0.0; trace.n_samples()],
    };
    build_dataset(trace, &mask, mode)
}

/// Run the whole grid. Cell order is scenario-major, then rate, delta,
/// detector, seed; rows come back in exactly that order regardless of
/// `jobs`. Failed cells are collected, not fatal.
pub fn run_sweep(spec: &SweepSpec, ctx: &CellContext<'_>, jobs: Option<usize>) -> Result<SweepOutcome> {
    spec.validate()?;
    let mut cells = Vec::with_capacity(spec.n_cells());
    for &scenario in &spec.scenarios {
        for &rate in &spec.rates {
            for &delta in &spec.delta_t_values {
                for &detector in &spec.detectors {
                    for &seed in &spec.seeds {
                        cells.push((scenario, rate, delta, detector, seed));
                    }
                }
            }
        }
    }
    let run_all = |cells: &[(AttackScenario, f64, f64, DetectorKind, u64)]| {
        cells
            .par_iter()
            .map(|&(scenario, rate, delta, detector, seed)| {
                run_cell(ctx, scenario, rate, delta, detector, seed)
            })
            .collect::<Vec<Result<SweepResultRow>>>()
    };
    let results = match jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?;
            pool.install(|| run_all(&cells))
        }
        None => run_all(&cells),
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (cell, result) in cells.iter().zip(results) {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(CellFailure {
                context: cell_context_string(cell.0, cell.1, cell.2, cell.3, cell.4),
                message: e.to_string(),
            }),
        }
    }
    Ok(SweepOutcome { rows, failures })
}
