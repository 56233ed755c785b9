//! Simulator and optimizer for programmable spatiotemporal parametric mode
//! sorting in χ² sum-frequency-generation crystals.
//!
//! The library models the full sorting chain:
//!
//! 1. **Field synthesis** ([`modes`]): Laguerre-Gaussian spatial profiles,
//!    Hermite-Gaussian temporal envelopes, their superpositions, and
//!    frequency-comb line-by-line synthesis of temporal shapes.
//! 2. **Crystal model** ([`medium`]): quasi-phase-matched χ² medium with
//!    pump–SF temporal walk-off, phase-mismatch detuning, and a calibrated
//!    coupling strength.
//! 3. **Propagation and detection** ([`engine`]): adaptive split-step Fourier
//!    integration of the coupled envelope equations, single-mode-fiber
//!    projection, and photon-count conversion.
//! 4. **Scoring** ([`metrics`]): mode-selectivity in dB, tomography matrices
//!    over pump × signal mode pairs, and mutually unbiased superposition sets.
//! 5. **Optimization** ([`optimizer`]): particle-swarm search over the pump
//!    comb-line phases that maximizes selectivity.
//! 6. **Orchestration** ([`scenario`]): JSON-configured scenario runner with
//!    named presets, deterministic manifests, and CSV/JSON exports.
//!
//! Units used throughout: transverse coordinates in µm, time in ps,
//! frequency in THz, propagation distance in cm, wavelengths in nm.

pub mod engine;
pub mod error;
pub mod grid;
pub mod medium;
pub mod metrics;
pub mod modes;
pub mod optimizer;
pub mod scenario;

pub use error::{Error, Result};

/// The user guide (`book/`), embedded chapter by chapter so that every code
/// block in it compiles and runs as a doc-test: the guide cannot drift out
/// of sync with the library.
pub mod guide {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub mod intro {}
    #[doc = include_str!("../../../book/src/grids.md")]
    pub mod grids {}
    #[doc = include_str!("../../../book/src/modes.md")]
    pub mod modes {}
    #[doc = include_str!("../../../book/src/comb.md")]
    pub mod comb {}
    #[doc = include_str!("../../../book/src/medium.md")]
    pub mod medium {}
    #[doc = include_str!("../../../book/src/engine.md")]
    pub mod engine {}
    #[doc = include_str!("../../../book/src/detection.md")]
    pub mod detection {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub mod metrics {}
    #[doc = include_str!("../../../book/src/optimizer.md")]
    pub mod optimizer {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    pub mod scenarios {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    pub mod reproducibility {}
}
