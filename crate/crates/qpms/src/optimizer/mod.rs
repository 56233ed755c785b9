//! Particle-swarm search over comb-line phases.

mod pso;

pub use pso::{
    benchmark_objective, make_selectivity_objective, pso_optimize, wrap_delta, PsoConfig,
    PsoIterRecord, PsoResult, PsoVariant, SelectivityObjective,
};
