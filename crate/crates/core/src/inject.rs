//! Intermittent sensor-tamper injection.
//!
//! One victim core's temperature readings are altered sporadically: each
//! sample fires with probability `attack_rate`, and a fired sample gets
//! the scenario's delta (subtract, add, or either sign for fluctuation).
//! Everything else stays bitwise untouched, and the ground-truth mask
//! records exactly what was applied where.
//!
//! Stream consumption order, which replay oracles must follow: the victim
//! draw first (only when the victim is `Random`), then one uniform draw
//! per sample, then one sign draw immediately after each fired sample in
//! the `Fluctuation` + `RandomPerSample` case.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;
use crate::trace::ThermalTrace;

pub const ALLOWED_RATES: [f64; 4] = [1.0, 0.8, 0.6, 0.4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackScenario {
    Lowering,
    Elevation,
    Fluctuation,
}

impl fmt::Display for AttackScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AttackScenario::Lowering => "lowering",
            AttackScenario::Elevation => "elevation",
            AttackScenario::Fluctuation => "fluctuation",
        };
        f.write_str(s)
    }
}

impl FromStr for AttackScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowering" => Ok(AttackScenario::Lowering),
            "elevation" => Ok(AttackScenario::Elevation),
            "fluctuation" => Ok(AttackScenario::Fluctuation),
            other => Err(Error::InvalidParam(format!("unknown scenario `{other}`"))),
        }
    }
}

/// How fluctuation picks the sign of each fired sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPolicy {
    /// Each fired sample independently gets + or - with probability 1/2.
    RandomPerSample,
    /// Signs alternate +, -, +, ... over fired samples.
    Alternating,
}

impl Default for SignPolicy {
    fn default() -> Self {
        SignPolicy::RandomPerSample
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VictimSelect {
    Random,
    Core(usize),
}

impl Default for VictimSelect {
    fn default() -> Self {
        VictimSelect::Random
    }
}

impl FromStr for VictimSelect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "random" {
            Ok(VictimSelect::Random)
        } else {
            s.parse::<usize>()
                .map(VictimSelect::Core)
                .map_err(|_| Error::InvalidParam(format!("victim must be `random` or an index, got `{s}`")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub scenario: AttackScenario,
    pub attack_rate: f64,
    pub delta_t_error: f64,
    pub victim: VictimSelect,
    pub seed: u64,
    pub sign_policy: SignPolicy,
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if !ALLOWED_RATES.contains(&self.attack_rate) {
            return Err(Error::InvalidParam(format!(
                "attack_rate must be one of {ALLOWED_RATES:?}, got {}",
                self.attack_rate
            )));
        }
        if !self.delta_t_error.is_finite() {
            return Err(Error::InvalidParam("delta_t_error must be finite".into()));
        }
        Ok(())
    }
}

/// Ground truth of an injection run.
///
/// `applied_delta[t]` is the exact f64 difference `tampered - clean` at
/// the victim cell, so subtracting it reconstructs the clean trace
/// bitwise. Where nothing fired it is exactly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TamperMask {
    pub victim_core: usize,
    pub tampered: Vec<bool>,
    pub applied_delta: Vec<f64>,
}

impl TamperMask {
    pub fn tampered_count(&self) -> usize {
        self.tampered.iter().filter(|&&b| b).count()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["sample", "tampered", "applied_delta"])?;
        for (i, (&t, &d)) in self.tampered.iter().zip(&self.applied_delta).enumerate() {
            w.write_record([i.to_string(), (t as u8).to_string(), format!("{d}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, victim_core: usize) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let mut tampered = Vec::new();
        let mut applied_delta = Vec::new();
        for record in r.records() {
            let record = record?;
            if record.len() != 3 {
                return Err(Error::InvalidParam("mask csv needs 3 columns".into()));
            }
            tampered.push(record[1].trim() == "1");
            applied_delta.push(record[2].trim().parse::<f64>().map_err(|_| {
                Error::InvalidParam(format!("bad applied_delta `{}`", &record[2]))
            })?);
        }
        Ok(TamperMask {
            victim_core,
            tampered,
            applied_delta,
        })
    }
}

/// Run the intermittent attack on a trace.
///
/// The returned trace is a fresh copy; non-victim cells and unfired victim
/// cells are bitwise identical to the input. A zero `delta_t_error`
/// disables tampering entirely (the mask stays all-false) while still
/// consuming the per-sample uniform draws.
pub fn inject(trace: &ThermalTrace, cfg: &AttackConfig) -> Result<(ThermalTrace, TamperMask)> {
    cfg.validate()?;
    let n = trace.n_samples();
    let b = trace.n_blocks();
    if n == 0 {
        return Err(Error::InvalidParam("trace is empty".into()));
    }
    let mut rng = seeds::rng_from(cfg.seed);
    let victim = match cfg.victim {
        VictimSelect::Random => rng.gen_range(0..b),
        VictimSelect::Core(idx) => {
            if idx >= b {
                return Err(Error::VictimOutOfRange {
                    victim: idx,
                    cores: b,
                });
            }
            idx
        }
    };
    let mut out = trace.clone();
    let mut tampered = vec![false; n];
    let mut applied = vec![0.0f64; n];
    let mut fired_count = 0usize;
    for t in 0..n {
        let u: f64 = rng.gen();
        if u <= cfg.attack_rate && cfg.delta_t_error != 0.0 {
            let delta = match cfg.scenario {
                AttackScenario::Lowering => -cfg.delta_t_error,
                AttackScenario::Elevation => cfg.delta_t_error,
                AttackScenario::Fluctuation => {
                    let positive = match cfg.sign_policy {
                        SignPolicy::RandomPerSample => rng.gen::<f64>() < 0.5,
                        SignPolicy::Alternating => fired_count % 2 == 0,
                    };
                    if positive {
                        cfg.delta_t_error
                    } else {
                        -cfg.delta_t_error
                    }
                }
            };
            let clean = out.samples.get(t, victim);
            let altered = clean + delta;
            out.samples.set(t, victim, altered);
            tampered[t] = true;
            applied[t] = altered - clean;
            fired_count += 1;
        }
    }
    Ok((
        out,
        TamperMask {
            victim_core: victim,
            tampered,
            applied_delta: applied,
        },
    ))
}

/// The always-on attack: `inject` with rate 1.0.
pub fn persistent_attack(
    trace: &ThermalTrace,
    scenario: AttackScenario,
    delta_t_error: f64,
    victim: VictimSelect,
    seed: u64,
) -> Result<(ThermalTrace, TamperMask)> {
    inject(
        trace,
        &AttackConfig {
            scenario,
            attack_rate: 1.0,
            delta_t_error,
            victim,
            seed,
            sign_policy: SignPolicy::default(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn trace(n: usize, b: usize, fill: f64) -> ThermalTrace {
        let mut m = Matrix::zeros(n, b);
        for r in 0..n {
            for c in 0..b {
                m.set(r, c, fill + (r as f64) * 0.01 + (c as f64) * 0.1);
            }
        }
        ThermalTrace {
            block_names: (0..b).map(|i| format!("c{i}")).collect(),
            samples: m,
        }
    }

    fn cfg(scenario: AttackScenario, rate: f64, delta: f64, seed: u64) -> AttackConfig {
        AttackConfig {
            scenario,
            attack_rate: rate,
            delta_t_error: delta,
            victim: VictimSelect::Core(2),
            seed,
            sign_policy: SignPolicy::RandomPerSample,
        }
    }

    #[test]
    fn zero_delta_is_noop() {
        let t = trace(100, 6, 60.0);
        let (out, mask) = inject(&t, &cfg(AttackScenario::Elevation, 0.8, 0.0, 7)).unwrap();
        assert_eq!(out, t);
        assert!(mask.tampered.iter().all(|&b| !b));
        assert!(mask.applied_delta.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn full_rate_elevation() {
        let mut m = Matrix::zeros(50, 4);
        for r in 0..50 {
            for c in 0..4 {
                m.set(r, c, 60.0);
            }
        }
        let t = ThermalTrace {
            block_names: (0..4).map(|i| format!("c{i}")).collect(),
            samples: m,
        };
        let (out, mask) = inject(&t, &cfg(AttackScenario::Elevation, 1.0, 1.0, 1)).unwrap();
        assert!(mask.tampered.iter().all(|&b| b));
        for r in 0..50 {
            for c in 0..4 {
                let expect = if c == 2 { 61.0 } else { 60.0 };
                assert_eq!(out.samples.get(r, c), expect);
            }
        }
    }

    #[test]
    fn lowering_shifts_down() {
        let t = trace(40, 3, 55.0);
        let c = AttackConfig {
            victim: VictimSelect::Core(0),
            ..cfg(AttackScenario::Lowering, 1.0, 5.0, 3)
        };
        let (out, mask) = inject(&t, &c).unwrap();
        assert!(mask.tampered.iter().all(|&b| b));
        for r in 0..40 {
            assert!((out.samples.get(r, 0) - (t.samples.get(r, 0) - 5.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn persistent_equals_rate_one() {
        let t = trace(60, 5, 58.0);
        let (a, ma) = persistent_attack(&t, AttackScenario::Elevation, 2.0, VictimSelect::Core(1), 9).unwrap();
        let c = AttackConfig {
            scenario: AttackScenario::Elevation,
            attack_rate: 1.0,
            delta_t_error: 2.0,
            victim: VictimSelect::Core(1),
            seed: 9,
            sign_policy: SignPolicy::default(),
        };
        let (b, mb) = inject(&t, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(ma, mb);
    }

    #[test]
    fn non_victim_columns_bitwise_unchanged() {
        let t = trace(80, 6, 50.0);
        let (out, mask) = inject(&t, &cfg(AttackScenario::Fluctuation, 0.6, 1.5, 11)).unwrap();
        for r in 0..80 {
            for c in 0..6 {
                if c != mask.victim_core {
                    assert_eq!(
                        out.samples.get(r, c).to_bits(),
                        t.samples.get(r, c).to_bits()
                    );
                }
            }
        }
    }

    #[test]
    fn reconstruction_is_bitwise() {
        let t = trace(80, 6, 50.0);
        let (out, mask) = inject(&t, &cfg(AttackScenario::Fluctuation, 0.8, 0.7, 13)).unwrap();
        for r in 0..80 {
            let rebuilt = out.samples.get(r, mask.victim_core) - mask.applied_delta[r];
            assert_eq!(rebuilt.to_bits(), t.samples.get(r, mask.victim_core).to_bits());
        }
    }

    #[test]
    fn invalid_rate_rejected() {
        let t = trace(5, 2, 50.0);
        let c = AttackConfig {
            attack_rate: 0.5,
            ..cfg(AttackScenario::Elevation, 0.8, 1.0, 1)
        };
        assert!(matches!(inject(&t, &c), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn explicit_victim_out_of_range() {
        let t = trace(5, 2, 50.0);
        let c = AttackConfig {
            victim: VictimSelect::Core(2),
            ..cfg(AttackScenario::Elevation, 0.8, 1.0, 1)
        };
        assert!(matches!(
            inject(&t, &c),
            Err(Error::VictimOutOfRange { victim: 2, cores: 2 })
        ));
    }

    #[test]
    fn deterministic_given_config() {
        let t = trace(200, 6, 52.0);
        let c = AttackConfig {
            victim: VictimSelect::Random,
            ..cfg(AttackScenario::Fluctuation, 0.4, 1.0, 21)
        };
        let (a, ma) = inject(&t, &c).unwrap();
        let (b, mb) = inject(&t, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(ma, mb);
    }

    #[test]
    fn alternating_signs() {
        let t = trace(100, 4, 50.0);
        let c = AttackConfig {
            sign_policy: SignPolicy::Alternating,
            victim: VictimSelect::Core(1),
            ..cfg(AttackScenario::Fluctuation, 1.0, 1.0, 2)
        };
        let (_, mask) = inject(&t, &c).unwrap();
        for (i, &d) in mask.applied_delta.iter().enumerate() {
            let expect = if i % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(d, expect);
        }
    }

    #[test]
    fn mask_csv_round_trip() {
        let t = trace(30, 4, 50.0);
        let (_, mask) = inject(&t, &cfg(AttackScenario::Fluctuation, 0.6, 1.0, 5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.csv");
        mask.write_csv(&path).unwrap();
        let back = TamperMask::read_csv(&path, mask.victim_core).unwrap();
        assert_eq!(mask, back);
    }
}
