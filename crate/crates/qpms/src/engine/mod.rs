//! Split-step Fourier propagation of pump/signal through the crystal, plus
//! detection: single-mode-fiber projection, delay scans, and photon-count
//! conversion.

pub mod detect;
pub mod fast;
mod fft;
pub mod propagate;
pub mod scan;

pub use detect::{cell_seed, detect_counts, fiber_mode, smf_couple, DetectorModel};
pub use propagate::{
    propagate_depleted, propagate_sfg, propagate_sfg_fixed, PropagationResult, StepRecord,
};
pub use scan::{delay_scan, DelayTrace, SortingSetup};
