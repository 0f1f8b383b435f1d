//! Desk-scale workbench for thermal-sensor tamper detection on multi-core
//! SoCs: a compact steady-state RC thermal model generates per-core
//! temperature traces, an intermittent injector tampers with one core's
//! readings, and a set of small from-scratch classifiers (plus a
//! residual-consistency baseline) are trained and swept to measure
//! detection failure rates and resolution.

pub mod baseline;
pub mod classifiers;
pub mod config;
pub mod dataset;
pub mod error;
pub mod floorplan;
pub mod inject;
pub mod linalg;
pub mod metrics;
pub mod report;
pub mod seeds;
pub mod sweep;
pub mod thermal;
pub mod trace;

pub use classifiers::{ClassifierKind, Hyperparams, TrainedModel};
pub use config::RunConfig;
pub use dataset::{FeatureMode, Label, LabeledDataset, NormStats, SplitIndices};
pub use error::{Error, Result};
pub use floorplan::{Block, Floorplan};
pub use inject::{AttackConfig, AttackScenario, SignPolicy, TamperMask, VictimSelect};
pub use linalg::Matrix;
pub use metrics::{ConfusionMatrix, EvalMetrics};
pub use sweep::{CellContext, DetectorKind, SweepResultRow, SweepSpec};
pub use thermal::{ConductanceSystem, ThermalModelParams};
pub use trace::{PowerTrace, ThermalTrace};
