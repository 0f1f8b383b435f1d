//! Cross-core residual-consistency baseline detector.
//!
//! Calibrated on a clean trace: each core gets a least-squares linear
//! predictor over the other cores plus an intercept, and a residual
//! standard deviation. Detection flags any sample where some core's
//! observed reading deviates from its prediction by more than k sigma.
//! The detector is threshold-style by construction: reliable against
//! large manipulations, blind below its noise floor.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, Matrix};
use crate::trace::ThermalTrace;

pub const SIGMA_FLOOR: f64 = 1e-6;
pub const BASELINE_FORMAT_VERSION: u32 = 1;

/// Linear predictor for one core from the readings of all others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorePredictor {
    /// Coefficients over the other cores, in ascending core order.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualModel {
    pub block_names: Vec<String>,
    pub predictors: Vec<CorePredictor>,
    pub k: f64,
}

impl ResidualModel {
    pub fn n_cores(&self) -> usize {
        self.predictors.len()
    }

    /// Predicted reading for core i given the full sample row.
    pub fn predict_core(&self, core: usize, row: &[f64]) -> f64 {
        let p = &self.predictors[core];
        let mut v = p.intercept;
        let mut w = 0;
        for (j, &x) in row.iter().enumerate() {
            if j != core {
                v += p.weights[w] * x;
                w += 1;
            }
        }
        v
    }

    pub fn residual(&self, core: usize, row: &[f64]) -> f64 {
        row[core] - self.predict_core(core, row)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = BaselineFile {
            format_version: BASELINE_FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BaselineFile =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.format_version != BASELINE_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported baseline format version {}",
                file.format_version
            )));
        }
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

#[derive(Serialize, Deserialize)]
struct BaselineFile {
    format_version: u32,
    model: ResidualModel,
}

/// Fit per-core predictors on a clean calibration trace.
pub fn calibrate(clean: &ThermalTrace, k: f64) -> Result<ResidualModel> {
    if !(k > 0.0) {
        return Err(Error::InvalidParam("k must be > 0".into()));
    }
    let n = clean.n_samples();
    let b = clean.n_blocks();
    if n < 10 * b {
        return Err(Error::InvalidParam(format!(
            "calibration needs at least {} samples for {} cores, got {n}",
            10 * b,
            b
        )));
    }
    let mut predictors = Vec::with_capacity(b);
    for core in 0..b {
        let mut design = Matrix::zeros(n, b);
        let mut target = vec![0.0; n];
        for r in 0..n {
            let row = clean.samples.row(r);
            let mut w = 0;
            for (j, &x) in row.iter().enumerate() {
                if j != core {
                    design.set(r, w, x);
                    w += 1;
                }
            }
            design.set(r, b - 1, 1.0);
            target[r] = row[core];
        }
        let beta = least_squares(&design, &target).map_err(|_| Error::RankDeficient {
            core: clean.block_names[core].clone(),
        })?;
        let (weights, intercept) = (beta[..b - 1].to_vec(), beta[b - 1]);
        let mut ss = 0.0;
        for r in 0..n {
            let row = clean.samples.row(r);
            let mut pred = intercept;
            let mut w = 0;
            for (j, &x) in row.iter().enumerate() {
                if j != core {
                    pred += weights[w] * x;
                    w += 1;
                }
            }
            let resid = target[r] - pred;
            ss += resid * resid;
        }
        let sigma = (ss / n as f64).sqrt().max(SIGMA_FLOOR);
        predictors.push(CorePredictor {
            weights,
            intercept,
            sigma,
        });
    }
    Ok(ResidualModel {
        block_names: clean.block_names.clone(),
        predictors,
        k,
    })
}

/// Flag each sample where any core's residual magnitude exceeds k sigma.
pub fn detect(model: &ResidualModel, trace: &ThermalTrace) -> Result<Vec<bool>> {
    let b = model.n_cores();
    if trace.n_blocks() != b {
        return Err(Error::DimensionMismatch {
            expected: b,
            got: trace.n_blocks(),
            context: "trace columns vs residual model".into(),
        });
    }
    let flags = (0..trace.n_samples())
        .map(|t| {
            let row = trace.samples.row(t);
            (0..b).any(|core| {
                model.residual(core, row).abs() > model.k * model.predictors[core].sigma
            })
        })
        .collect();
    Ok(flags)
}
