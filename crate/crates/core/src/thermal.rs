//! Compact steady-state RC thermal model.
//!
//! Each block gets a vertical conduction path to a single ambient node
//! (conductance proportional to block area) and lateral paths to adjacent
//! blocks (conductance proportional to shared edge length over centroid
//! distance). Assembled as a grounded conductance Laplacian, the system
//! is symmetric, strictly diagonally dominant, and therefore positive
//! definite; per-sample temperatures come from a direct dense solve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floorplan::{centroid_distance, shared_edge_length, Floorplan};
use crate::linalg::{l2_norm, Cholesky, Matrix};

/// Parameters of the compact thermal model.
///
/// `lateral_coupling` is W/K per unit of shared-edge length divided by
/// centroid distance; `vertical_conductance_density` is W/(K*m^2) of
/// block area. Defaults are tuned so the bundled layout yields plausible
/// mobile-SoC temperatures with cross-core correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalModelParams {
    pub ambient_temp: f64,
    pub lateral_coupling: f64,
    pub vertical_conductance_density: f64,
}

impl Default for ThermalModelParams {
    fn default() -> Self {
        ThermalModelParams {
            ambient_temp: 45.0,
            lateral_coupling: 2.0,
            vertical_conductance_density: 2.2e5,
        }
    }
}

impl ThermalModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.vertical_conductance_density > 0.0) {
            return Err(Error::InvalidParam(
                "vertical_conductance_density must be > 0".into(),
            ));
        }
        if !(self.lateral_coupling >= 0.0) {
            return Err(Error::InvalidParam("lateral_coupling must be >= 0".into()));
        }
        if !self.ambient_temp.is_finite() {
            return Err(Error::InvalidParam("ambient_temp must be finite".into()));
        }
        Ok(())
    }
}

/// Grounded conductance Laplacian: off-diagonals are -G_ij, the diagonal
/// adds each block's vertical path to ambient.
#[derive(Debug, Clone)]
pub struct ConductanceSystem {
    g_matrix: Matrix,
}

impl ConductanceSystem {
    pub fn size(&self) -> usize {
        self.g_matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.g_matrix
    }
}

/// Assemble the conductance system for a floorplan.
///
/// Pairwise couplings are computed once and written to both triangles,
/// so the result is bitwise symmetric.
pub fn build_conductance(fp: &Floorplan, params: &ThermalModelParams) -> Result<ConductanceSystem> {
    params.validate()?;
    let b = fp.len();
    let blocks = fp.blocks();
    let mut m = Matrix::zeros(b, b);
    for i in 0..b {
        let g_ambient = params.vertical_conductance_density * blocks[i].area();
        m.set(i, i, m.get(i, i) + g_ambient);
        for j in (i + 1)..b {
            if let Some(edge) = shared_edge_length(&blocks[i], &blocks[j]) {
                let g = params.lateral_coupling * edge / centroid_distance(&blocks[i], &blocks[j]);
                m.set(i, j, -g);
                m.set(j, i, -g);
                m.set(i, i, m.get(i, i) + g);
                m.set(j, j, m.get(j, j) + g);
            }
        }
    }
    Ok(ConductanceSystem { g_matrix: m })
}

/// Relative residual tolerance for the steady-state solve.
const SOLVE_TOL: f64 = 1e-9;

/// Solve `G (T - ambient) = P` for one power sample.
pub fn solve_steady_state(
    sys: &ConductanceSystem,
    power_row: &[f64],
    ambient: f64,
) -> Result<Vec<f64>> {
    let factor = Cholesky::factor(sys.matrix())?;
    solve_with_factor(sys, &factor, power_row, ambient)
}

/// As `solve_steady_state`, but reusing a precomputed factorization.
pub fn solve_with_factor(
    sys: &ConductanceSystem,
    factor: &Cholesky,
    power_row: &[f64],
    ambient: f64,
) -> Result<Vec<f64>> {
    let b = sys.size();
    if power_row.len() != b {
        return Err(Error::DimensionMismatch {
            expected: b,
            got: power_row.len(),
            context: "power row vs conductance system".into(),
        });
    }
    if power_row.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::InvalidParam("power values must be >= 0".into()));
    }
    let rise = factor.solve(power_row);
    let reproduced = sys.matrix().mul_vec(&rise);
    let residual: Vec<f64> = reproduced
        .iter()
        .zip(power_row)
        .map(|(a, b)| a - b)
        .collect();
    let rnorm = l2_norm(&residual);
    let pnorm = l2_norm(power_row);
    if rnorm > SOLVE_TOL * pnorm.max(1.0) {
        return Err(Error::SolveResidual { residual: rnorm });
    }
    Ok(rise.iter().map(|r| r + ambient).collect())
}

pub fn factor_system(sys: &ConductanceSystem) -> Result<Cholesky> {
    Cholesky::factor(sys.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block_conductance() {
        let fp = Floorplan::parse("core0 0.002 0.002 0.0 0.0").unwrap();
        let params = ThermalModelParams {
            vertical_conductance_density: 1.25e5,
            ..Default::default()
        };
        let sys = build_conductance(&fp, &params).unwrap();
        assert_eq!(sys.size(), 1);
        assert!((sys.matrix().get(0, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn disjoint_blocks_uncoupled() {
        let fp = Floorplan::parse("a 0.001 0.001 0.0 0.0\nb 0.001 0.001 0.005 0.005").unwrap();
        let sys = build_conductance(&fp, &ThermalModelParams::default()).unwrap();
        assert_eq!(sys.matrix().get(0, 1), 0.0);
        assert_eq!(sys.matrix().get(1, 0), 0.0);
    }

    #[test]
    fn matrix_is_bitwise_symmetric() {
        let fp = Floorplan::default_6core();
        let sys = build_conductance(&fp, &ThermalModelParams::default()).unwrap();
        assert!(sys.matrix().is_symmetric());
    }

    #[test]
    fn single_block_temperature() {
        let fp = Floorplan::parse("core0 0.002 0.002 0.0 0.0").unwrap();
        let params = ThermalModelParams {
            vertical_conductance_density: 1.25e5,
            ..Default::default()
        };
        let sys = build_conductance(&fp, &params).unwrap();
        let t = solve_steady_state(&sys, &[1.0], 45.0).unwrap();
        assert!((t[0] - 47.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_equal_powers_equal_temps() {
        let fp = Floorplan::parse("a 0.002 0.002 0.0 0.0\nb 0.002 0.002 0.002 0.0").unwrap();
        let sys = build_conductance(&fp, &ThermalModelParams::default()).unwrap();
        let t = solve_steady_state(&sys, &[1.5, 1.5], 45.0).unwrap();
        assert!((t[0] - t[1]).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_power() {
        let fp = Floorplan::parse("core0 0.002 0.002 0.0 0.0").unwrap();
        let sys = build_conductance(&fp, &ThermalModelParams::default()).unwrap();
        assert!(solve_steady_state(&sys, &[-1.0], 45.0).is_err());
    }
}
