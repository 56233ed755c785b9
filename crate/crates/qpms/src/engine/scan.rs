//! A complete sorting bench — grids, crystal, detector, pump/signal
//! assembly parameters — plus delay scans over it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detect::{detect_counts, smf_couple, DetectorModel};
use super::propagate::propagate_sfg;
use crate::error::Result;
use crate::grid::{SpatialGrid, TemporalGrid};
use crate::medium::CrystalSpec;
use crate::modes::{assemble_field, AssemblyParams, ModeLabel, SpatioTemporalField};

/// Everything needed to turn a (pump label, signal label, delay) triple into
/// photon counts.  Shared by tomography scans, trend studies, and the
/// optimizer.
#[derive(Debug, Clone)]
pub struct SortingSetup {
    pub spatial_grid: SpatialGrid,
    pub temporal_grid: TemporalGrid,
    pub crystal: CrystalSpec,
    pub detector: DetectorModel,
    pub pump: AssemblyParams,
    pub signal: AssemblyParams,
}

impl SortingSetup {
    /// Standard bench: 300 um waists at 1559 nm pump / 1551 nm signal,
    /// matched collection fiber, and grids sized to the pulse width (one
    /// 25 GHz comb period for widths up to 5 ps, a 64 ps window beyond).
    pub fn standard(width_ps: f64, length_cm: f64) -> Result<Self> {
        let waist = 300.0;
        let temporal_grid = if width_ps <= 5.0 {
            TemporalGrid::default_comb_period()
        } else {
            TemporalGrid::new(1024, 64.0)?
        };
        let setup = SortingSetup {
            spatial_grid: SpatialGrid::default_for_waist(waist),
            temporal_grid,
            crystal: CrystalSpec {
                length_cm,
                ..CrystalSpec::default()
            },
            detector: DetectorModel::matched_to_waist(waist),
            pump: AssemblyParams::new(waist, width_ps, 1559.0),
            signal: AssemblyParams::new(waist, width_ps, 1551.0),
        };
        setup.validate()?;
        Ok(setup)
    }

    /// Check that grids, crystal, detector, and beams are mutually
    /// consistent before running anything expensive.
    pub fn validate(&self) -> Result<()> {
        self.crystal.validate()?;
        self.detector.validate()?;
        self.spatial_grid.check_waist(self.pump.waist_um)?;
        self.spatial_grid.check_waist(self.signal.waist_um)?;
        self.temporal_grid.check_pulse_width(self.pump.width_ps)?;
        self.temporal_grid.check_pulse_width(self.signal.width_ps)?;
        for params in [&self.pump, &self.signal] {
            if params.use_comb {
                self.temporal_grid
                    .check_comb_period(params.comb_template.period_ps())?;
            }
        }
        Ok(())
    }

    /// Assemble the pump field for a label, with an extra delay on top of
    /// the configured one.
    pub fn assemble_pump(
        &self,
        label: &ModeLabel,
        extra_delay_ps: f64,
    ) -> Result<SpatioTemporalField> {
        let params = self
            .pump
            .clone()
            .with_delay(self.pump.delay_ps + extra_delay_ps);
        assemble_field(label, &params, &self.spatial_grid, &self.temporal_grid)
    }

    pub fn assemble_signal(&self, label: &ModeLabel) -> Result<SpatioTemporalField> {
        assemble_field(label, &self.signal, &self.spatial_grid, &self.temporal_grid)
    }

    /// Photon counts for one (pump, signal) cell: assemble, propagate,
    /// couple into the fiber, convert to counts.  `tag` seeds the Poisson
    /// stream of this cell when the detector samples counts.
    pub fn counts_at(
        &self,
        pump_label: &ModeLabel,
        signal_label: &ModeLabel,
        pump_delay_ps: f64,
        tag: &[u64],
    ) -> Result<f64> {
        let pump = self.assemble_pump(pump_label, pump_delay_ps)?;
        let signal = self.assemble_signal(signal_label)?;
        let prop = propagate_sfg(&pump, &signal, &self.crystal)?;
        let (_, energy) = smf_couple(&prop.sf, &self.detector)?;
        detect_counts(energy, &self.detector, tag)
    }
}

/// Counts versus pump delay for one label pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelayTrace {
    pub delays_ps: Vec<f64>,
    pub counts: Vec<f64>,
    /// Counts at the exact zero-delay sample, when the scan contains one.
    pub zero_delay_counts: Option<f64>,
}

/// Scan the pump delay over the given values (signal fixed), in parallel.
/// Poisson streams are tagged by scan position, so results do not depend on
/// scheduling.
pub fn delay_scan(
    setup: &SortingSetup,
    pump_label: &ModeLabel,
    signal_label: &ModeLabel,
    delays_ps: &[f64],
) -> Result<DelayTrace> {
    let counts: Vec<f64> = delays_ps
        .par_iter()
        .enumerate()
        .map(|(i, d)| setup.counts_at(pump_label, signal_label, *d, &[u64::MAX, i as u64]))
        .collect::<Result<Vec<f64>>>()?;
    let zero_delay_counts = delays_ps
        .iter()
        .position(|d| *d == 0.0)
        .map(|i| counts[i]);
    Ok(DelayTrace {
        delays_ps: delays_ps.to_vec(),
        counts,
        zero_delay_counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_setup_validates_and_sizes_grids() {
        let s = SortingSetup::standard(2.0, 2.5).unwrap();
        assert_eq!(s.temporal_grid.nt, 512);
        let wide = SortingSetup::standard(7.0, 1.0).unwrap();
        assert_eq!(wide.temporal_grid.window_ps, 64.0);
        assert!(wide.validate().is_ok());
    }

    #[test]
    fn comb_on_wide_window_is_rejected() {
        let mut s = SortingSetup::standard(7.0, 1.0).unwrap();
        s.pump.use_comb = true;
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("period"));
    }

    #[test]
    fn matched_delay_scan_dips_at_zero_for_orthogonal_orders() {
        // Pump filter T1 against signal T0: zero counts at zero delay
        // (orthogonal envelopes), growing away from it.
        let mut s = SortingSetup::standard(2.0, 1.0).unwrap();
        s.temporal_grid = TemporalGrid::new(128, 40.0).unwrap();
        s.spatial_grid = SpatialGrid::square(32, 1050.0).unwrap();
        let pump = ModeLabel::single(0, 1);
        let signal = ModeLabel::single(0, 0);
        let delays = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let trace = delay_scan(&s, &pump, &signal, &delays).unwrap();
        let zero = trace.zero_delay_counts.expect("zero is on the grid");
        assert_eq!(zero, trace.counts[2]);
        assert!(trace.counts[0] > zero);
        assert!(trace.counts[4] > zero);
    }

    #[test]
    fn counts_are_symmetric_under_label_delay_sign_for_even_modes() {
        let mut s = SortingSetup::standard(2.0, 1.0).unwrap();
        s.temporal_grid = TemporalGrid::new(128, 40.0).unwrap();
        s.spatial_grid = SpatialGrid::square(32, 1050.0).unwrap();
        let label = ModeLabel::single(0, 0);
        let plus = s.counts_at(&label, &label, 1.0, &[0]).unwrap();
        let minus = s.counts_at(&label, &label, -1.0, &[0]).unwrap();
        let rel = (plus - minus).abs() / plus;
        assert!(rel < 1e-9, "sign asymmetry {rel}");
    }
}
