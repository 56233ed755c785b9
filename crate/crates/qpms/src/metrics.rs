//! Sorting figures of merit: count matrices over label catalogs,
//! per-filter selectivity, and qualitative trend checks.
//!
//! Selectivity of filter (pump) `i` over a candidate set is the ratio of
//! the counts for its designated signal to the summed counts of every other
//! candidate, reported in dB.  A zero background with nonzero desired
//! counts is reported as `+inf` with an explicit flag.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::SortingSetup;
use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, TemporalGrid};
use crate::medium::CrystalSpec;
use crate::modes::ModeLabel;

/// Counts for every (pump filter, signal candidate) pair, with enough
/// metadata to reproduce the scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountsMatrix {
    pub pump_labels: Vec<ModeLabel>,
    pub signal_labels: Vec<ModeLabel>,
    /// counts[[i, j]]: pump filter i against signal candidate j.
    pub counts: Array2<f64>,
    pub meta: MatrixMeta,
}

/// Provenance of a counts matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub spatial_grid: SpatialGrid,
    pub temporal_grid: TemporalGrid,
    pub crystal: CrystalSpec,
    /// Digest of the scenario that produced the matrix, when one did.
    #[serde(default)]
    pub scenario: Option<String>,
}

/// Selectivity of one pump filter over the candidate set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectivityEntry {
    pub pump_index: usize,
    pub pump_label: String,
    pub desired_index: usize,
    pub desired_counts: f64,
    pub background_counts: f64,
    /// 10·log10(desired/background); `+inf` when the background is zero
    /// (serialized as null — check `is_infinite`).
    pub selectivity_db: f64,
    pub is_infinite: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectivityReport {
    pub entries: Vec<SelectivityEntry>,
}

impl SelectivityReport {
    /// Selectivity of pump filter `i` in dB.
    pub fn db(&self, i: usize) -> f64 {
        self.entries[i].selectivity_db
    }
}

/// Scan every (pump, signal) pair through the bench.  Cells run in
/// parallel; Poisson streams are tagged by cell index, so the matrix is
/// independent of scheduling.
pub fn tomography(
    setup: &SortingSetup,
    pump_labels: &[ModeLabel],
    signal_labels: &[ModeLabel],
) -> Result<CountsMatrix> {
    if pump_labels.is_empty() || signal_labels.is_empty() {
        return Err(Error::config("tomography needs at least one label per axis"));
    }
    setup.validate()?;
    let np = pump_labels.len();
    let ns = signal_labels.len();
    let cells: Vec<f64> = (0..np * ns)
        .into_par_iter()
        .map(|flat| {
            let (i, j) = (flat / ns, flat % ns);
            setup.counts_at(
                &pump_labels[i],
                &signal_labels[j],
                0.0,
                &[i as u64, j as u64],
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let counts = Array2::from_shape_vec((np, ns), cells)
        .expect("cell vector matches matrix shape");
    Ok(CountsMatrix {
        pump_labels: pump_labels.to_vec(),
        signal_labels: signal_labels.to_vec(),
        counts,
        meta: MatrixMeta {
            spatial_grid: setup.spatial_grid.clone(),
            temporal_grid: setup.temporal_grid.clone(),
            crystal: setup.crystal.clone(),
            scenario: None,
        },
    })
}

/// Per-filter selectivity of a counts matrix.
///
/// `desired[i]` names the signal column that filter `i` is meant to pass;
/// `None` uses the diagonal (square matrices only).
pub fn selectivity(matrix: &CountsMatrix, desired: Option<&[usize]>) -> Result<SelectivityReport> {
    let (np, ns) = matrix.counts.dim();
    let desired_vec: Vec<usize> = match desired {
        Some(d) => {
            if d.len() != np {
                return Err(Error::config(format!(
                    "desired mapping has {} entries for {np} pump filters",
                    d.len()
                )));
            }
            d.to_vec()
        }
        None => {
            if np != ns {
                return Err(Error::config(
                    "diagonal selectivity needs a square matrix; pass an explicit mapping",
                ));
            }
            (0..np).collect()
        }
    };
    let mut entries = Vec::with_capacity(np);
    for (i, &j_star) in desired_vec.iter().enumerate() {
        if j_star >= ns {
            return Err(Error::config(format!(
                "desired column {j_star} out of range for {ns} signal candidates"
            )));
        }
        let desired_counts = matrix.counts[[i, j_star]];
        let background_counts: f64 = (0..ns)
            .filter(|j| *j != j_star)
            .map(|j| matrix.counts[[i, j]])
            .sum();
        let (selectivity_db, is_infinite) = if background_counts == 0.0 {
            if desired_counts > 0.0 {
                (f64::INFINITY, true)
            } else {
                (f64::NAN, false)
            }
        } else {
            (10.0 * (desired_counts / background_counts).log10(), false)
        };
        entries.push(SelectivityEntry {
            pump_index: i,
            pump_label: matrix.pump_labels[i].describe(),
            desired_index: j_star,
            desired_counts,
            background_counts,
            selectivity_db,
            is_infinite,
        });
    }
    Ok(SelectivityReport { entries })
}

/// The five-mode transverse catalog X_{-2} … X_{+2} (fundamental temporal
/// order).
pub fn spatial_catalog() -> Vec<ModeLabel> {
    (-2..=2).map(|l| ModeLabel::single(l, 0)).collect()
}

/// The first `n` temporal orders T_0 … T_{n-1} on the fundamental
/// transverse mode.
pub fn temporal_catalog(n: usize) -> Vec<ModeLabel> {
    (0..n as u32).map(|m| ModeLabel::single(0, m)).collect()
}

/// The mutually-unbiased sorting set {T+, T-, T2}: the superposition basis
/// of the first two temporal orders, T± = (T0 ± T1)/sqrt(2), plus the
/// second-order mode.
pub fn mub_catalog() -> Vec<ModeLabel> {
    let c = num_complex::Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    vec![
        ModeLabel::superposition(&[(0, 0, c), (0, 1, c)]).expect("valid superposition"),
        ModeLabel::superposition(&[(0, 0, c), (0, 1, -c)]).expect("valid superposition"),
        ModeLabel::single(0, 2),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendDirection {
    Increasing,
    Decreasing,
}

/// One selectivity sample along a swept parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendPoint {
    pub name: String,
    pub parameter: f64,
    pub selectivity_db: f64,
}

/// Pass/fail record of a qualitative trend claim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendReport {
    pub axis: String,
    pub direction: TrendDirection,
    /// Points sorted by parameter, ascending.
    pub points: Vec<TrendPoint>,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Check that selectivity moves strictly in `direction` as the parameter
/// grows.  Points are sorted by parameter first; ties in the parameter are
/// rejected.
pub fn trend_report(
    axis: &str,
    direction: TrendDirection,
    mut points: Vec<TrendPoint>,
) -> Result<TrendReport> {
    if points.len() < 2 {
        return Err(Error::config("a trend needs at least two points"));
    }
    points.sort_by(|a, b| {
        a.parameter
            .partial_cmp(&b.parameter)
            .expect("trend parameters must be comparable")
    });
    let mut failures = Vec::new();
    for pair in points.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        if lo.parameter == hi.parameter {
            return Err(Error::config(format!(
                "trend points '{}' and '{}' share parameter {}",
                lo.name, hi.name, lo.parameter
            )));
        }
        let ok = match direction {
            TrendDirection::Increasing => hi.selectivity_db > lo.selectivity_db,
            TrendDirection::Decreasing => hi.selectivity_db < lo.selectivity_db,
        };
        if !ok {
            failures.push(format!(
                "{axis}: {} ({:.4} dB at {}) vs {} ({:.4} dB at {}) breaks the {} trend",
                lo.name,
                lo.selectivity_db,
                lo.parameter,
                hi.name,
                hi.selectivity_db,
                hi.parameter,
                match direction {
                    TrendDirection::Increasing => "increasing",
                    TrendDirection::Decreasing => "decreasing",
                },
            ));
        }
    }
    Ok(TrendReport {
        axis: axis.to_string(),
        direction,
        passed: failures.is_empty(),
        points,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::DetectorModel;

    fn small_setup() -> SortingSetup {
        let mut s = SortingSetup::standard(2.0, 1.0).unwrap();
        s.spatial_grid = SpatialGrid::square(32, 1050.0).unwrap();
        s.temporal_grid = TemporalGrid::new(128, 40.0).unwrap();
        s
    }

    #[test]
    fn catalogs_have_expected_shapes() {
        assert_eq!(spatial_catalog().len(), 5);
        assert_eq!(temporal_catalog(3).len(), 3);
        let mub = mub_catalog();
        assert_eq!(mub.len(), 3);
        assert_eq!(mub[0].terms().len(), 2);
        assert_eq!(mub[1].terms().len(), 2);
        assert_eq!(mub[2].terms().len(), 1);
    }

    #[test]
    fn temporal_tomography_peaks_on_diagonal() {
        let setup = small_setup();
        let labels = temporal_catalog(2);
        let m = tomography(&setup, &labels, &labels).unwrap();
        assert_eq!(m.counts.dim(), (2, 2));
        for i in 0..2 {
            let row = m.counts.row(i);
            let max_j = (0..2).max_by(|a, b| row[*a].total_cmp(&row[*b])).unwrap();
            assert_eq!(max_j, i, "row {i} should peak on the diagonal");
        }
        let report = selectivity(&m, None).unwrap();
        assert!(report.db(0) > 0.0);
        assert!(report.db(1) > 0.0);
        assert!(!report.entries[0].is_infinite);
    }

    #[test]
    fn selectivity_flags_zero_background() {
        let m = CountsMatrix {
            pump_labels: temporal_catalog(2),
            signal_labels: temporal_catalog(2),
            counts: ndarray::arr2(&[[5.0, 0.0], [0.0, 3.0]]),
            meta: MatrixMeta {
                spatial_grid: SpatialGrid::square(32, 1050.0).unwrap(),
                temporal_grid: TemporalGrid::new(128, 40.0).unwrap(),
                crystal: CrystalSpec::default(),
                scenario: None,
            },
        };
        let report = selectivity(&m, None).unwrap();
        assert!(report.entries[0].is_infinite);
        assert!(report.db(0).is_infinite());
        // explicit off-diagonal mapping
        let report = selectivity(&m, Some(&[1, 0])).unwrap();
        assert!(!report.entries[0].is_infinite);
        assert!(report.db(0) < 0.0);
    }

    #[test]
    fn selectivity_rejects_bad_mappings() {
        let m = CountsMatrix {
            pump_labels: temporal_catalog(2),
            signal_labels: temporal_catalog(3),
            counts: Array2::zeros((2, 3)),
            meta: MatrixMeta {
                spatial_grid: SpatialGrid::square(32, 1050.0).unwrap(),
                temporal_grid: TemporalGrid::new(128, 40.0).unwrap(),
                crystal: CrystalSpec::default(),
                scenario: None,
            },
        };
        assert!(selectivity(&m, None).is_err(), "non-square needs a mapping");
        assert!(selectivity(&m, Some(&[0])).is_err(), "length mismatch");
        assert!(selectivity(&m, Some(&[0, 9])).is_err(), "column overflow");
    }

    #[test]
    fn poisson_tomography_is_reproducible() {
        let mut setup = small_setup();
        setup.detector = DetectorModel {
            poisson_seed: Some(11),
            ..setup.detector.clone()
        };
        let labels = temporal_catalog(2);
        let a = tomography(&setup, &labels, &labels).unwrap();
        let b = tomography(&setup, &labels, &labels).unwrap();
        assert_eq!(a.counts, b.counts);
    }

    #[test]
    fn trend_report_checks_direction() {
        let mk = |v: &[(f64, f64)]| -> Vec<TrendPoint> {
            v.iter()
                .map(|(p, s)| TrendPoint {
                    name: format!("p{p}"),
                    parameter: *p,
                    selectivity_db: *s,
                })
                .collect()
        };
        let up = trend_report(
            "length",
            TrendDirection::Increasing,
            mk(&[(1.0, 5.0), (2.5, 10.0)]),
        )
        .unwrap();
        assert!(up.passed);
        // out-of-order input gets sorted before checking
        let down = trend_report(
            "pulse_width",
            TrendDirection::Decreasing,
            mk(&[(7.0, 2.0), (2.0, 9.0)]),
        )
        .unwrap();
        assert!(down.passed);
        assert_eq!(down.points[0].parameter, 2.0);
        let broken = trend_report(
            "length",
            TrendDirection::Increasing,
            mk(&[(1.0, 5.0), (2.5, 4.0)]),
        )
        .unwrap();
        assert!(!broken.passed);
        assert_eq!(broken.failures.len(), 1);
        assert!(trend_report("x", TrendDirection::Increasing, mk(&[(1.0, 1.0)])).is_err());
        assert!(
            trend_report(
                "x",
                TrendDirection::Increasing,
                mk(&[(1.0, 1.0), (1.0, 2.0)])
            )
            .is_err(),
            "tied parameters rejected"
        );
    }
}
