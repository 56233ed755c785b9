//! Construction of normalized spatial, temporal, comb-synthesized, delayed,
//! and superposed fields on discrete grids.

pub mod comb;
pub mod field;
pub mod label;
pub mod spatial;
pub mod temporal;

pub use comb::{comb_analyze, comb_synthesize, fit_comb_to_mode, CombFit, CombSpec};
pub use field::{assemble_field, AssemblyParams, FieldData, SpatioTemporalField};
pub use label::{LabelTerm, ModeLabel, Role};
pub use spatial::{lg_mode, phase_circulation};
pub use temporal::{hg_temporal_mode, hg_width_to_tau};
