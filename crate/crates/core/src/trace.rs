//! Power and temperature traces plus workload synthesis.
//!
//! Power traces are piecewise constant per core: levels drawn uniformly
//! in `[p_min, p_max]`, dwell lengths geometric with a configurable mean.
//! Every core's stream derives deterministically from the trace seed and
//! the core index, so traces are reproducible bit for bit.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::floorplan::Floorplan;
use crate::linalg::Matrix;
use crate::seeds::{self, stream};
use crate::thermal::{build_conductance, factor_system, solve_with_factor, ThermalModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace {
    pub block_names: Vec<String>,
    pub samples: Matrix,
    /// Metadata only; not persisted in the CSV format.
    pub sample_period: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalTrace {
    pub block_names: Vec<String>,
    pub samples: Matrix,
}

impl PowerTrace {
    pub fn validate(&self) -> Result<()> {
        if self.samples.rows() == 0 {
            return Err(Error::InvalidParam("power trace has no samples".into()));
        }
        if self.samples.cols() != self.block_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.block_names.len(),
                got: self.samples.cols(),
                context: "power trace columns vs block names".into(),
            });
        }
        if self.samples.data().iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidParam(
                "power trace contains negative or non-finite values".into(),
            ));
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_trace_csv(path, &self.block_names, &self.samples)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let (block_names, samples) = read_trace_csv(path)?;
        let trace = PowerTrace {
            block_names,
            samples,
            sample_period: 1.0,
        };
        trace.validate()?;
        Ok(trace)
    }
}

impl ThermalTrace {
    pub fn validate(&self) -> Result<()> {
        if self.samples.cols() != self.block_names.len() {
            return Err(Error::DimensionMismatch {
                expected: self.block_names.len(),
                got: self.samples.cols(),
                context: "thermal trace columns vs block names".into(),
            });
        }
        if self.samples.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(
                "thermal trace contains non-finite values".into(),
            ));
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.samples.rows()
    }

    pub fn n_blocks(&self) -> usize {
        self.samples.cols()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_trace_csv(path, &self.block_names, &self.samples)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let (block_names, samples) = read_trace_csv(path)?;
        let trace = ThermalTrace {
            block_names,
            samples,
        };
        trace.validate()?;
        Ok(trace)
    }
}

/// Synthesize a per-core piecewise-constant power trace.
///
/// Stream order per core: one uniform level draw, then one dwell draw,
/// repeated until the trace is full.
pub fn synthesize_power_trace(
    fp: &Floorplan,
    n_samples: usize,
    seed: u64,
    p_min: f64,
    p_max: f64,
    mean_dwell: f64,
) -> Result<PowerTrace> {
    if n_samples == 0 {
        return Err(Error::InvalidParam("n_samples must be >= 1".into()));
    }
    if !(p_min >= 0.0) || !(p_max >= p_min) {
        return Err(Error::InvalidParam(
            "power range must satisfy 0 <= p_min <= p_max".into(),
        ));
    }
    if !(mean_dwell >= 1.0) {
        return Err(Error::InvalidParam("mean_dwell must be >= 1".into()));
    }
    let b = fp.len();
    let mut samples = Matrix::zeros(n_samples, b);
    for core in 0..b {
        let mut rng = seeds::rng_from(seeds::derive(seed, &[stream::POWER, core as u64]));
        let mut t = 0;
        while t < n_samples {
            let level = if p_min == p_max {
                p_min
            } else {
                rng.gen_range(p_min..=p_max)
            };
            let dwell = sample_dwell(&mut rng, mean_dwell);
            let end = (t + dwell).min(n_samples);
            for row in t..end {
                samples.set(row, core, level);
            }
            t = end;
        }
    }
    let trace = PowerTrace {
        block_names: fp.block_names(),
        samples,
        sample_period: 1.0,
    };
    trace.validate()?;
    Ok(trace)
}

/// Geometric dwell on {1, 2, ...} with the given mean, via inverse CDF.
fn sample_dwell<R: Rng>(rng: &mut R, mean: f64) -> usize {
    if mean <= 1.0 {
        return 1;
    }
    let p = 1.0 / mean;
    let u: f64 = rng.gen();
    // 1 - u in (0, 1]; ln(1-u) <= 0 and ln(1-p) < 0
    let d = 1.0 + ((1.0 - u).ln() / (1.0 - p).ln()).floor();
    d.max(1.0) as usize
}

/// Generate a steady-state thermal trace: every power row is solved as an
/// independent equilibrium snapshot.
pub fn generate_thermal_trace(
    fp: &Floorplan,
    params: &ThermalModelParams,
    pt: &PowerTrace,
) -> Result<ThermalTrace> {
    pt.validate()?;
    if pt.samples.cols() != fp.len() {
        return Err(Error::DimensionMismatch {
            expected: fp.len(),
            got: pt.samples.cols(),
            context: "power trace columns vs floorplan blocks".into(),
        });
    }
    let sys = build_conductance(fp, params)?;
    let factor = factor_system(&sys)?;
    let n = pt.samples.rows();
    let mut out = Matrix::zeros(n, fp.len());
    for t in 0..n {
        let temps = solve_with_factor(&sys, &factor, pt.samples.row(t), params.ambient_temp)?;
        out.row_mut(t).copy_from_slice(&temps);
    }
    let trace = ThermalTrace {
        block_names: fp.block_names(),
        samples: out,
    };
    trace.validate()?;
    Ok(trace)
}

fn write_trace_csv(path: &Path, names: &[String], samples: &Matrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(names)?;
    for r in 0..samples.rows() {
        let row: Vec<String> = samples.row(r).iter().map(|v| format!("{v}")).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_trace_csv(path: &Path) -> Result<(Vec<String>, Matrix)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let names: Vec<String> = r
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != names.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: record.len(),
                context: format!("trace csv row {}", i + 2),
            });
        }
        let mut row = Vec::with_capacity(names.len());
        for field in record.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::InvalidParam(format!("bad numeric value `{field}` in trace csv"))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidParam("trace csv has no data rows".into()));
    }
    Ok((names, Matrix::from_rows(rows)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan() -> Floorplan {
        Floorplan::default_6core()
    }

    #[test]
    fn degenerate_power_interval() {
        let pt = synthesize_power_trace(&plan(), 50, 1, 1.0, 1.0, 5.0).unwrap();
        assert!(pt.samples.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn power_trace_deterministic() {
        let a = synthesize_power_trace(&plan(), 200, 9, 0.5, 3.0, 20.0).unwrap();
        let b = synthesize_power_trace(&plan(), 200, 9, 0.5, 3.0, 20.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_power_gives_ambient() {
        let fp = plan();
        let pt = synthesize_power_trace(&fp, 10, 1, 0.0, 0.0, 1.0).unwrap();
        let params = ThermalModelParams::default();
        let tt = generate_thermal_trace(&fp, &params, &pt).unwrap();
        assert!(tt
            .samples
            .data()
            .iter()
            .all(|&v| (v - params.ambient_temp).abs() < 1e-12));
    }

    #[test]
    fn constant_power_rows_identical() {
        let fp = plan();
        let pt = synthesize_power_trace(&fp, 20, 1, 2.0, 2.0, 1.0).unwrap();
        let tt = generate_thermal_trace(&fp, &ThermalModelParams::default(), &pt).unwrap();
        let first = tt.samples.row(0).to_vec();
        for r in 1..tt.n_samples() {
            assert_eq!(tt.samples.row(r), &first[..]);
        }
    }

    #[test]
    fn thermal_trace_deterministic_bitwise() {
        let fp = plan();
        let pt = synthesize_power_trace(&fp, 100, 3, 0.5, 3.0, 10.0).unwrap();
        let a = generate_thermal_trace(&fp, &ThermalModelParams::default(), &pt).unwrap();
        let b = generate_thermal_trace(&fp, &ThermalModelParams::default(), &pt).unwrap();
        for (x, y) in a.samples.data().iter().zip(b.samples.data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn trace_csv_round_trip() {
        let fp = plan();
        let pt = synthesize_power_trace(&fp, 30, 4, 0.5, 3.0, 7.0).unwrap();
        let tt = generate_thermal_trace(&fp, &ThermalModelParams::default(), &pt).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        tt.write_csv(&path).unwrap();
        let back = ThermalTrace::read_csv(&path).unwrap();
        assert_eq!(tt, back);
    }
}
