//! JSON-configured scenario runner.
//!
//! A scenario is a single self-contained JSON document: stages (one bench
//! configuration each) containing tasks (tomography, delay scans, phase
//! optimization, spectral/spatial exports, detuning sweeps), plus declared
//! trends that the run checks against its own results.  [`run_scenario`]
//! executes one into an output directory and finishes by writing a manifest
//! digesting every emitted file, so reruns can be compared byte for byte.
//!
//! Ready-made scenarios live in [`presets`]; [`presets::list_presets`]
//! enumerates them.

pub mod manifest;
pub mod presets;
pub mod run;
pub mod schema;

pub use manifest::{sha256_hex, Collector, FileDigest, RunManifest};
pub use presets::{list_presets, preset, PresetInfo};
pub use run::{run_scenario, NamedTrendReport, RunSummary};
pub use schema::{
    DelayGridSpec, DesiredMap, ModeRef, ModeSet, PairRef, Scenario, Stage, TaskSpec, TermRef,
    TrendAxis, TrendPointSpec, TrendSpec, ValueRef,
};
