//! Report emission: the per-cell results CSV, per-(rate, classifier)
//! aggregates, the resolution table, and minimal SVG line charts.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::inject::AttackScenario;
use crate::metrics::{ConfusionMatrix, EvalMetrics};
use crate::sweep::{DetectorKind, SweepResultRow};

pub const RESULTS_HEADER: [&str; 16] = [
    "scenario", "rate", "delta_t", "classifier", "seed", "n_test", "tp", "fp", "fn", "tn",
    "accuracy", "precision", "recall", "f1", "miss_rate", "run_failed",
];

pub fn write_results_csv(rows: &[SweepResultRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        let miss = match r.metrics.miss_rate {
            Some(m) => format!("{m}"),
            None => "NA".into(),
        };
        w.write_record([
            r.scenario.to_string(),
            format!("{}", r.rate),
            format!("{}", r.delta_t),
            r.detector.to_string(),
            r.seed.to_string(),
            r.n_test.to_string(),
            r.cm.true_pos.to_string(),
            r.cm.false_pos.to_string(),
            r.cm.false_neg.to_string(),
            r.cm.true_neg.to_string(),
            format!("{}", r.metrics.accuracy),
            format!("{}", r.metrics.precision),
            format!("{}", r.metrics.recall),
            format!("{}", r.metrics.f1),
            miss,
            r.metrics.run_failed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read rows back from a results CSV. The definedness flags are derived
/// from the stored confusion counts.
pub fn read_results_csv(path: &Path) -> Result<Vec<SweepResultRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    {
        let header = rd.headers()?;
        if header.len() != RESULTS_HEADER.len() {
            return Err(Error::InvalidParam(format!(
                "results csv has {} columns, expected {}",
                header.len(),
                RESULTS_HEADER.len()
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in rd.records().enumerate() {
        let record = record?;
        let field = |idx: usize| record[idx].trim().to_string();
        let parse_f = |idx: usize| -> Result<f64> {
            record[idx].trim().parse().map_err(|_| {
                Error::InvalidParam(format!("bad number `{}` at row {}", &record[idx], i + 2))
            })
        };
        let parse_u = |idx: usize| -> Result<u64> {
            record[idx].trim().parse().map_err(|_| {
                Error::InvalidParam(format!("bad count `{}` at row {}", &record[idx], i + 2))
            })
        };
        let cm = ConfusionMatrix {
            true_pos: parse_u(6)?,
            false_pos: parse_u(7)?,
            false_neg: parse_u(8)?,
            true_neg: parse_u(9)?,
        };
        let miss_rate = if field(14) == "NA" {
            None
        } else {
            Some(parse_f(14)?)
        };
        let metrics = EvalMetrics {
            accuracy: parse_f(10)?,
            precision: parse_f(11)?,
            recall: parse_f(12)?,
            f1: parse_f(13)?,
            miss_rate,
            precision_defined: cm.true_pos + cm.false_pos > 0,
            recall_defined: cm.positives() > 0,
            run_failed: field(15) == "true",
        };
        rows.push(SweepResultRow {
            scenario: field(0).parse::<AttackScenario>()?,
            rate: parse_f(1)?,
            delta_t: parse_f(2)?,
            detector: field(3).parse::<DetectorKind>()?,
            seed: parse_u(4)?,
            n_test: parse_u(5)? as usize,
            cm,
            metrics,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub rate: f64,
    pub detector: DetectorKind,
    pub n_rows: usize,
    pub accuracy_mean: f64,
    pub precision_mean: f64,
    pub recall_mean: f64,
    pub f1_mean: f64,
    pub miss_rate_mean: f64,
    pub miss_rate_min: f64,
    pub miss_rate_max: f64,
}

/// Average attack rows (delta != 0) over deltas and seeds, grouped by
/// (rate, classifier) in first-appearance order. Control rows are
/// excluded: their miss rate is not applicable.
pub fn aggregate_rows(rows: &[SweepResultRow]) -> Vec<AggregateRow> {
    let mut groups: Vec<(f64, DetectorKind)> = Vec::new();
    for r in rows {
        if r.delta_t == 0.0 {
            continue;
        }
        let key = (r.rate, r.detector);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    groups
        .into_iter()
        .map(|(rate, detector)| {
            let members: Vec<&SweepResultRow> = rows
                .iter()
                .filter(|r| r.rate == rate && r.detector == detector && r.delta_t != 0.0)
                .collect();
            let n = members.len() as f64;
            let mean = |f: &dyn Fn(&SweepResultRow) -> f64| -> f64 {
                members.iter().map(|r| f(r)).sum::<f64>() / n
            };
            let misses: Vec<f64> = members
                .iter()
                .filter_map(|r| r.metrics.miss_rate)
                .collect();
            let miss_mean = misses.iter().sum::<f64>() / misses.len().max(1) as f64;
            AggregateRow {
                rate,
                detector,
                n_rows: members.len(),
                accuracy_mean: mean(&|r| r.metrics.accuracy),
                precision_mean: mean(&|r| r.metrics.precision),
                recall_mean: mean(&|r| r.metrics.recall),
                f1_mean: mean(&|r| r.metrics.f1),
                miss_rate_mean: miss_mean,
                miss_rate_min: misses.iter().copied().fold(f64::INFINITY, f64::min),
                miss_rate_max: misses.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

pub fn write_aggregates_csv(aggs: &[AggregateRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "rate",
        "classifier",
        "n_rows",
        "accuracy_mean",
        "precision_mean",
        "recall_mean",
        "f1_mean",
        "miss_rate_mean",
        "miss_rate_min",
        "miss_rate_max",
    ])?;
    for a in aggs {
        w.write_record([
            format!("{}", a.rate),
            a.detector.to_string(),
            a.n_rows.to_string(),
            format!("{}", a.accuracy_mean),
            format!("{}", a.precision_mean),
            format!("{}", a.recall_mean),
            format!("{}", a.f1_mean),
            format!("{}", a.miss_rate_mean),
            format!("{}", a.miss_rate_min),
            format!("{}", a.miss_rate_max),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionRow {
    pub rate: f64,
    pub detector: DetectorKind,
    /// Smallest swept |delta| at and beyond which every seed's miss rate
    /// is exactly zero; None when no such magnitude exists in the sweep.
    pub resolution: Option<f64>,
}

pub fn resolution_rows(rows: &[SweepResultRow]) -> Vec<ResolutionRow> {
    let mut groups: Vec<(f64, DetectorKind)> = Vec::new();
    for r in rows {
        if r.delta_t == 0.0 {
            continue;
        }
        let key = (r.rate, r.detector);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    groups
        .into_iter()
        .map(|(rate, detector)| ResolutionRow {
            rate,
            detector,
            resolution: resolution_for(rows, rate, detector),
        })
        .collect()
}

fn resolution_for(rows: &[SweepResultRow], rate: f64, detector: DetectorKind) -> Option<f64> {
    let members: Vec<&SweepResultRow> = rows
        .iter()
        .filter(|r| r.rate == rate && r.detector == detector && r.delta_t != 0.0)
        .collect();
    let mut magnitudes: Vec<f64> = members.iter().map(|r| r.delta_t.abs()).collect();
    magnitudes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    magnitudes.dedup();
    'outer: for &candidate in &magnitudes {
        for r in &members {
            if r.delta_t.abs() >= candidate && r.metrics.miss_rate != Some(0.0) {
                continue 'outer;
            }
        }
        return Some(candidate);
    }
    None
}

pub fn write_resolution_csv(rows: &[ResolutionRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rate", "classifier", "resolution"])?;
    for r in rows {
        let res = match r.resolution {
            Some(v) => format!("{v}"),
            None => "NA".into(),
        };
        w.write_record([format!("{}", r.rate), r.detector.to_string(), res])?;
    }
    w.flush()?;
    Ok(())
}

/// Emit all report files for a set of result rows. Returns the paths
/// written.
pub fn write_reports(rows: &[SweepResultRow], dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let results = dir.join("sweep_results.csv");
    write_results_csv(rows, &results)?;
    written.push(results);
    let aggs = aggregate_rows(rows);
    let agg_path = dir.join("aggregates.csv");
    write_aggregates_csv(&aggs, &agg_path)?;
    written.push(agg_path);
    let res = resolution_rows(rows);
    let res_path = dir.join("resolution.csv");
    write_resolution_csv(&res, &res_path)?;
    written.push(res_path);
    if svg {
        written.extend(write_svg_charts(rows, dir)?);
    }
    Ok(written)
}

const SVG_COLORS: [&str; 4] = ["#c0392b", "#2980b9", "#27ae60", "#8e44ad"];

/// One chart per detector: seed-averaged miss rate vs delta, one series
/// per injection rate. Plain polyline SVG with no external assets.
pub fn write_svg_charts(rows: &[SweepResultRow], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut detectors: Vec<DetectorKind> = Vec::new();
    for r in rows {
        if r.delta_t != 0.0 && !detectors.contains(&r.detector) {
            detectors.push(r.detector);
        }
    }
    let mut written = Vec::new();
    for detector in detectors {
        let mut rates: Vec<f64> = Vec::new();
        let mut deltas: Vec<f64> = Vec::new();
        for r in rows {
            if r.detector != detector || r.delta_t == 0.0 {
                continue;
            }
            if !rates.contains(&r.rate) {
                rates.push(r.rate);
            }
            if !deltas.contains(&r.delta_t) {
                deltas.push(r.delta_t);
            }
        }
        deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if deltas.is_empty() {
            continue;
        }
        let (w, h, ml, mb) = (640.0, 400.0, 60.0, 50.0);
        let (plot_w, plot_h) = (w - ml - 20.0, h - mb - 20.0);
        let (dmin, dmax) = (deltas[0], *deltas.last().unwrap());
        let xs = |d: f64| {
            if dmax > dmin {
                ml + (d - dmin) / (dmax - dmin) * plot_w
            } else {
                ml + plot_w / 2.0
            }
        };
        let ys = |m: f64| 20.0 + (1.0 - m) * plot_h;
        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"14\" font-family=\"sans-serif\" font-size=\"13\">miss rate vs delta_t — {detector}</text>\n",
            ml
        ));
        // axes
        svg.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            20.0 + plot_h,
            ml + plot_w,
            20.0 + plot_h
        ));
        svg.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"20\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
            20.0 + plot_h
        ));
        for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let y = ys(frac);
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{frac}</text>\n",
                ml - 6.0,
                y + 3.0
            ));
        }
        for &d in &deltas {
            let x = xs(d);
            svg.push_str(&format!(
                "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{d}</text>\n",
                20.0 + plot_h + 16.0
            ));
        }
        for (ri, &rate) in rates.iter().enumerate() {
            let color = SVG_COLORS[ri % SVG_COLORS.len()];
            let mut points = Vec::new();
            for &d in &deltas {
                let misses: Vec<f64> = rows
                    .iter()
                    .filter(|r| {
                        r.detector == detector && r.rate == rate && r.delta_t == d
                    })
                    .filter_map(|r| r.metrics.miss_rate)
                    .collect();
                if misses.is_empty() {
                    continue;
                }
                let mean = misses.iter().sum::<f64>() / misses.len() as f64;
                points.push(format!("{:.2},{:.2}", xs(d), ys(mean)));
            }
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                points.join(" ")
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">rate {rate}</text>\n",
                ml + plot_w - 70.0,
                34.0 + 14.0 * ri as f64
            ));
        }
        svg.push_str("</svg>\n");
        let path = dir.join(format!("miss_rate_{detector}.svg"));
        fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ClassifierKind;
    use crate::metrics::compute_metrics;

    fn row(rate: f64, delta: f64, seed: u64, miss_n: u64, pos: u64) -> SweepResultRow {
        let cm = ConfusionMatrix {
            true_pos: pos - miss_n,
            false_pos: 1,
            false_neg: miss_n,
            true_neg: 100,
        };
        SweepResultRow {
            scenario: AttackScenario::Elevation,
            rate,
            delta_t: delta,
            detector: DetectorKind::Ml(ClassifierKind::DecisionTree),
            seed,
            n_test: (pos + 101) as usize,
            cm,
            metrics: compute_metrics(&cm, 0.05).unwrap(),
        }
    }

    #[test]
    fn single_row_aggregate_is_identity() {
        let rows = vec![row(0.8, 1.0, 1, 5, 50)];
        let aggs = aggregate_rows(&rows);
        assert_eq!(aggs.len(), 1);
        assert_eq!(aggs[0].n_rows, 1);
        assert_eq!(aggs[0].miss_rate_mean, 0.1);
        assert_eq!(aggs[0].accuracy_mean, rows[0].metrics.accuracy);
    }

    #[test]
    fn resolution_zero_misses_everywhere() {
        let rows = vec![
            row(0.8, -0.4, 1, 0, 50),
            row(0.8, 0.4, 1, 0, 50),
            row(0.8, 0.8, 1, 0, 50),
        ];
        let res = resolution_rows(&rows);
        assert_eq!(res[0].resolution, Some(0.4));
    }

    #[test]
    fn resolution_requires_all_seeds() {
        let rows = vec![
            row(0.8, 0.4, 1, 1, 50),
            row(0.8, 0.4, 2, 0, 50),
            row(0.8, 0.8, 1, 0, 50),
            row(0.8, 0.8, 2, 0, 50),
        ];
        let res = resolution_rows(&rows);
        assert_eq!(res[0].resolution, Some(0.8));
    }

    #[test]
    fn resolution_none_when_never_clean() {
        let rows = vec![row(0.8, 0.4, 1, 2, 50), row(0.8, 0.8, 1, 1, 50)];
        let res = resolution_rows(&rows);
        assert_eq!(res[0].resolution, None);
    }

    #[test]
    fn results_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![row(0.8, 0.4, 1, 2, 50), row(0.6, -0.8, 2, 0, 40)];
        write_results_csv(&rows, &path).unwrap();
        let back = read_results_csv(&path).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn svg_is_written_and_self_contained() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row(0.8, -0.4, 1, 2, 50), row(0.8, 0.4, 1, 1, 50)];
        let files = write_svg_charts(&rows, dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        let text = fs::read_to_string(&files[0]).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(!text.contains("http://") || text.contains("xmlns"));
        assert!(text.contains("polyline"));
    }
}
