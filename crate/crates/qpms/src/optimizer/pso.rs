//! Particle-swarm optimization of the pump's comb-line phases.
//!
//! Phases live on a torus, so two update rules are provided:
//!
//! * [`PsoVariant::StandardDelta`] — textbook velocity update driven by the
//!   *wrapped differences* to the personal and global bests, with velocity
//!   clamping.  This is the default and the variant the convergence
//!   benchmark certifies.
//! * [`PsoVariant::VerbatimSum`] — the literal position-sum rule
//!   `x <- w*x + c_p*r_p*(pbest - x) + c_g*r_g*(gbest - x)` with plain
//!   (unwrapped) differences, everything wrapped back into [0, 2pi) at the
//!   end.  Kept for comparison; it explores more and converges less tightly.
//!
//! Reproducibility: all random draws for an iteration happen *before* the
//! objective evaluations fan out to the thread pool, so parallelism cannot
//! perturb the stream.  The global best is updated only on strict
//! improvement, which makes its trace exactly monotone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::engine::SortingSetup;
use crate::error::{Error, Result};
use crate::modes::{comb_synthesize, fit_comb_to_mode, hg_temporal_mode, ModeLabel};

/// Update rule selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PsoVariant {
    #[default]
    StandardDelta,
    VerbatimSum,
}

/// Swarm hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PsoConfig {
    /// Number of particles.
    pub ensemble: usize,
    /// Update iterations after the initial evaluation.
    pub iterations: usize,
    /// Search-space dimension (one phase per comb line).
    pub dims: usize,
    pub seed: u64,
    pub variant: PsoVariant,
    /// Inertia weight, ramped linearly from start to end over the run.
    pub inertia_start: f64,
    pub inertia_end: f64,
    /// Personal-best acceleration coefficient.
    pub cognitive: f64,
    /// Global-best acceleration coefficient.
    pub social: f64,
    /// Per-component velocity clamp (standard-delta variant).
    pub velocity_max: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            ensemble: 16,
            iterations: 120,
            dims: 37,
            seed: 0,
            variant: PsoVariant::StandardDelta,
            inertia_start: 0.9,
            inertia_end: 0.4,
            cognitive: 1.5,
            social: 1.5,
            velocity_max: std::f64::consts::PI,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble < 2 {
            return Err(Error::config("PSO needs at least 2 particles"));
        }
        if self.dims == 0 || self.iterations == 0 {
            return Err(Error::config("PSO dims and iterations must be positive"));
        }
        if !self.velocity_max.is_finite() || self.velocity_max <= 0.0 {
            return Err(Error::config("velocity_max must be positive"));
        }
        Ok(())
    }
}

/// Global-best snapshot after one iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsoIterRecord {
    /// 0 is the initial evaluation; updates count from 1.
    pub iteration: usize,
    pub best_objective: f64,
    pub best_phases: Vec<f64>,
    /// Max - min of the finite objective values this iteration.
    pub spread: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsoResult {
    pub best_phases: Vec<f64>,
    pub best_objective: f64,
    pub trace: Vec<PsoIterRecord>,
    /// Number of non-finite objective evaluations; the affected particles
    /// kept their previous position for that iteration.
    pub frozen_events: usize,
    pub evaluations: usize,
}

/// Shortest signed distance between two angles, in (-pi, pi].
pub fn wrap_delta(d: f64) -> f64 {
    (d + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI
}

fn wrap_pos(x: f64) -> f64 {
    x.rem_euclid(TAU)
}

/// Maximize `objective` over phase vectors in [0, 2pi)^dims.
///
/// `warm_start` replaces the first particle's initial position — seeding it
/// with the fitted target phases guarantees the result is at least as good
/// as the unoptimized baseline.
pub fn pso_optimize<F>(
    objective: F,
    config: &PsoConfig,
    warm_start: Option<&[f64]>,
) -> Result<PsoResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let (ne, nd) = (config.ensemble, config.dims);
    if let Some(w) = warm_start {
        if w.len() != nd {
            return Err(Error::config(format!(
                "warm start has {} phases, expected {nd}",
                w.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut x: Vec<Vec<f64>> = (0..ne)
        .map(|_| (0..nd).map(|_| rng.random_range(0.0..TAU)).collect())
        .collect();
    if let Some(w) = warm_start {
        x[0] = w.iter().map(|p| wrap_pos(*p)).collect();
    }
    let mut v: Vec<Vec<f64>> = vec![vec![0.0; nd]; ne];

    let eval = |xs: &[Vec<f64>]| -> Vec<f64> {
        xs.par_iter().map(|xi| objective(xi)).collect()
    };

    let mut frozen_events = 0usize;
    let mut evaluations = 0usize;

    let fx = eval(&x);
    evaluations += ne;
    let mut fpb: Vec<f64> = fx
        .iter()
        .map(|f| {
            if f.is_finite() {
                *f
            } else {
                frozen_events += 1;
                f64::NEG_INFINITY
            }
        })
        .collect();
    let mut pb = x.clone();
    let g0 = (0..ne)
        .max_by(|a, b| fpb[*a].total_cmp(&fpb[*b]))
        .expect("nonempty swarm");
    if !fpb[g0].is_finite() {
        return Err(Error::config(
            "objective returned no finite value over the initial swarm",
        ));
    }
    let mut gbest = pb[g0].clone();
    let mut fgbest = fpb[g0];

    let spread_of = |fx: &[f64]| -> f64 {
        let finite: Vec<f64> = fx.iter().copied().filter(|f| f.is_finite()).collect();
        match (
            finite.iter().cloned().reduce(f64::max),
            finite.iter().cloned().reduce(f64::min),
        ) {
            (Some(hi), Some(lo)) => hi - lo,
            _ => 0.0,
        }
    };

    let mut trace = Vec::with_capacity(config.iterations + 1);
    trace.push(PsoIterRecord {
        iteration: 0,
        best_objective: fgbest,
        best_phases: gbest.clone(),
        spread: spread_of(&fx),
    });

    for it in 0..config.iterations {
        let w = config.inertia_start
            + (config.inertia_end - config.inertia_start) * it as f64
                / (config.iterations - 1).max(1) as f64;
        // Draw everything for this iteration up front (see module docs).
        let r1: Vec<Vec<f64>> = (0..ne)
            .map(|_| (0..nd).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let r2: Vec<Vec<f64>> = (0..ne)
            .map(|_| (0..nd).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();

        let x_prev = x.clone();
        for i in 0..ne {
            for d in 0..nd {
                match config.variant {
                    PsoVariant::StandardDelta => {
                        let vel = w * v[i][d]
                            + config.cognitive * r1[i][d] * wrap_delta(pb[i][d] - x[i][d])
                            + config.social * r2[i][d] * wrap_delta(gbest[d] - x[i][d]);
                        v[i][d] = vel.clamp(-config.velocity_max, config.velocity_max);
                        x[i][d] = wrap_pos(x[i][d] + v[i][d]);
                    }
                    PsoVariant::VerbatimSum => {
                        x[i][d] = wrap_pos(
                            w * x[i][d]
                                + config.cognitive * r1[i][d] * pb[i][d]
                                + config.social * r2[i][d] * gbest[d],
                        );
                    }
                }
            }
        }

        let fx = eval(&x);
        evaluations += ne;
        for i in 0..ne {
            if fx[i].is_finite() {
                if fx[i] > fpb[i] {
                    fpb[i] = fx[i];
                    pb[i] = x[i].clone();
                }
            } else {
                frozen_events += 1;
                x[i] = x_prev[i].clone();
                v[i] = vec![0.0; nd];
            }
        }
        let g = (0..ne)
            .max_by(|a, b| fpb[*a].total_cmp(&fpb[*b]))
            .expect("nonempty swarm");
        if fpb[g] > fgbest {
            fgbest = fpb[g];
            gbest = pb[g].clone();
        }
        trace.push(PsoIterRecord {
            iteration: it + 1,
            best_objective: fgbest,
            best_phases: gbest.clone(),
            spread: spread_of(&fx),
        });
    }

    Ok(PsoResult {
        best_phases: gbest,
        best_objective: fgbest,
        trace,
        frozen_events,
        evaluations,
    })
}

/// Smooth wrapped-quadratic benchmark: maximize
/// `-(sum of squared wrapped distances)` to a hidden target drawn from
/// `target_seed`.  Returns the objective and the target (optimum) phases.
pub fn benchmark_objective(
    dims: usize,
    target_seed: u64,
) -> (impl Fn(&[f64]) -> f64 + Sync + Send, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(target_seed);
    let target: Vec<f64> = (0..dims).map(|_| rng.random_range(0.0..TAU)).collect();
    let captured = target.clone();
    let obj = move |x: &[f64]| -> f64 {
        -x.iter()
            .zip(&captured)
            .map(|(a, b)| wrap_delta(a - b).powi(2))
            .sum::<f64>()
    };
    (obj, target)
}

/// Objective, warm start, and replayable comb for phase optimization.
pub struct SelectivityObjective<F> {
    /// Selectivity in dB as a function of the comb-line phase vector.
    pub objective: F,
    /// The fitted target phases — evaluating the objective here gives the
    /// unoptimized baseline, and seeding the swarm with it guarantees the
    /// optimizer never loses to it.
    pub warm_phases: Vec<f64>,
    /// The fitted comb (amplitudes + phases); apply a candidate phase
    /// vector with [`crate::modes::CombSpec::with_phases`] to replay it.
    pub fitted_spec: crate::modes::CombSpec,
}

/// Build the sorting objective for phase optimization: selectivity (dB) of
/// the pump filter for `desired` against `distractors`, as a function of
/// the 37 comb-line phases.  Line amplitudes stay fixed at the fit of the
/// ideal target envelope.
///
/// All candidate labels must share one transverse index so the transverse
/// coupling factor cancels from the ratio and only temporal envelopes need
/// to be marched.  The march runs at the same adaptive refinement as
/// tomography cells, so the baseline value equals the unoptimized
/// tomography selectivity to rounding.
pub fn make_selectivity_objective(
    setup: &SortingSetup,
    desired: &ModeLabel,
    distractors: &[ModeLabel],
) -> Result<SelectivityObjective<impl Fn(&[f64]) -> f64 + Sync + Send>> {
    setup.validate()?;
    if distractors.is_empty() {
        return Err(Error::config(
            "phase optimization needs at least one distractor",
        ));
    }
    let tgrid = setup.temporal_grid.clone();
    let template = setup.pump.comb_template.clone();
    tgrid.check_comb_period(template.period_ps())?;
    let l0 = desired.common_l().ok_or_else(|| {
        Error::config("phase optimization needs single-transverse-index labels")
    })?;
    for d in distractors {
        if d.common_l() != Some(l0) {
            return Err(Error::config(
                "desired and distractor labels must share one transverse index",
            ));
        }
    }

    // Ideal pump envelope for the desired label, then its comb fit.
    let pump_target = temporal_envelope(desired, setup.pump.width_ps, &tgrid)?;
    let fit = fit_comb_to_mode(&pump_target, &template, &tgrid, false)?;
    let fitted_spec = fit.spec.clone();
    let n_lines = fitted_spec.n_lines();
    let warm: Vec<f64> = fitted_spec.line_phases();

    let mut signal_envs = Vec::with_capacity(1 + distractors.len());
    signal_envs.push(temporal_envelope(desired, setup.signal.width_ps, &tgrid)?);
    for d in distractors {
        signal_envs.push(temporal_envelope(d, setup.signal.width_ps, &tgrid)?);
    }

    let crystal = setup.crystal.clone();
    let closure_spec = fitted_spec.clone();

    let objective = move |phases: &[f64]| -> f64 {
        if phases.len() != n_lines {
            return f64::NAN;
        }
        let spec = match closure_spec.with_phases(phases) {
            Ok(s) => s,
            Err(_) => return f64::NAN,
        };
        let pump_env = match comb_synthesize(&spec, &tgrid) {
            Ok(e) => e,
            Err(_) => return f64::NAN,
        };
        let mut energies = Vec::with_capacity(signal_envs.len());
        for s in &signal_envs {
            let source = &pump_env * s;
            let (_, es) = crate::engine::fast::run_temporal_adaptive(&source, &tgrid, &crystal);
            energies.push(*es.last().expect("at least one step"));
        }
        let desired_e = energies[0];
        let background: f64 = energies[1..].iter().sum();
        if background <= 0.0 {
            return f64::NAN;
        }
        10.0 * (desired_e / background).log10()
    };
    Ok(SelectivityObjective {
        objective,
        warm_phases: warm,
        fitted_spec,
    })
}

/// Normalized composite temporal envelope of a label.
fn temporal_envelope(
    label: &ModeLabel,
    width_ps: f64,
    tgrid: &crate::grid::TemporalGrid,
) -> Result<ndarray::Array1<num_complex::Complex64>> {
    let mut env = ndarray::Array1::<num_complex::Complex64>::zeros(tgrid.nt);
    for term in label.terms() {
        let e = hg_temporal_mode(term.m as usize, width_ps, tgrid)?;
        let c = term.coeff();
        for (acc, v) in env.iter_mut().zip(e.iter()) {
            *acc += c * v;
        }
    }
    crate::modes::temporal::normalize(&mut env, tgrid.dt());
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{SpatialGrid, TemporalGrid};

    #[test]
    fn wrap_delta_is_shortest_path() {
        assert!((wrap_delta(0.1) - 0.1).abs() < 1e-15);
        assert!((wrap_delta(TAU - 0.1) + 0.1).abs() < 1e-12);
        // 3pi sits exactly on the branch cut; either sign of pi is valid.
        assert!((wrap_delta(3.0 * std::f64::consts::PI).abs() - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn benchmark_converges_from_most_seeds() {
        let (obj, target) = benchmark_objective(8, 123);
        let mut converged = 0;
        for seed in 0..5u64 {
            let config = PsoConfig {
                dims: 8,
                iterations: 200,
                seed,
                ..PsoConfig::default()
            };
            let res = pso_optimize(&obj, &config, None).unwrap();
            let worst = res
                .best_phases
                .iter()
                .zip(&target)
                .map(|(a, b)| wrap_delta(a - b).abs())
                .fold(0.0f64, f64::max);
            if worst < 0.1 {
                converged += 1;
            }
        }
        assert!(converged >= 4, "{converged}/5 seeds converged");
    }

    #[test]
    fn gbest_trace_is_monotone_and_reproducible() {
        let (obj, _) = benchmark_objective(6, 9);
        let config = PsoConfig {
            dims: 6,
            iterations: 50,
            seed: 3,
            ..PsoConfig::default()
        };
        let a = pso_optimize(&obj, &config, None).unwrap();
        let b = pso_optimize(&obj, &config, None).unwrap();
        assert_eq!(a.best_phases, b.best_phases);
        assert_eq!(a.best_objective, b.best_objective);
        for pair in a.trace.windows(2) {
            assert!(pair[1].best_objective >= pair[0].best_objective);
        }
        assert_eq!(a.evaluations, 16 * 51);
        assert_eq!(a.trace.len(), 51);
    }

    #[test]
    fn warm_start_lower_bounds_the_result() {
        let (obj, target) = benchmark_objective(8, 77);
        let config = PsoConfig {
            dims: 8,
            iterations: 5,
            seed: 1,
            ..PsoConfig::default()
        };
        let res = pso_optimize(&obj, &config, Some(&target)).unwrap();
        // Warm-started at the optimum: nothing can beat it, and the trace
        // must hold it from iteration 0.
        assert!((res.best_objective - 0.0).abs() < 1e-12);
        assert!((res.trace[0].best_objective - 0.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_objectives_freeze_particles() {
        // A hole at x[0] in [1, 2] radians returns NaN.
        let obj = |x: &[f64]| -> f64 {
            if x[0] > 1.0 && x[0] < 2.0 {
                f64::NAN
            } else {
                -(wrap_delta(x[0] - 0.5)).powi(2)
            }
        };
        let config = PsoConfig {
            dims: 1,
            ensemble: 8,
            iterations: 40,
            seed: 5,
            ..PsoConfig::default()
        };
        let res = pso_optimize(obj, &config, None).unwrap();
        assert!(res.best_objective.is_finite());
        assert!(res.best_objective > -0.01, "gbest {}", res.best_objective);
        // The hole spans ~16% of the circle; some draws must have hit it.
        assert!(res.frozen_events > 0);
    }

    #[test]
    fn verbatim_variant_runs_and_stays_in_range() {
        let (obj, _) = benchmark_objective(4, 2);
        let config = PsoConfig {
            dims: 4,
            iterations: 30,
            seed: 0,
            variant: PsoVariant::VerbatimSum,
            ..PsoConfig::default()
        };
        let res = pso_optimize(&obj, &config, None).unwrap();
        assert!(res.best_phases.iter().all(|p| (0.0..TAU).contains(p)));
        for pair in res.trace.windows(2) {
            assert!(pair[1].best_objective >= pair[0].best_objective);
        }
    }

    #[test]
    fn config_validation_rejects_degenerate_swarms() {
        let bad = PsoConfig {
            ensemble: 1,
            ..PsoConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PsoConfig {
            dims: 0,
            ..PsoConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn selectivity_objective_improves_over_fitted_baseline() {
        let mut setup = crate::engine::SortingSetup::standard(2.0, 2.5).unwrap();
        setup.spatial_grid = SpatialGrid::square(32, 1050.0).unwrap();
        setup.temporal_grid = TemporalGrid::new(512, 40.0).unwrap();
        let desired = ModeLabel::single(0, 1);
        let distractors = [ModeLabel::single(0, 0), ModeLabel::single(0, 2)];
        let bundle = make_selectivity_objective(&setup, &desired, &distractors).unwrap();
        let baseline = (bundle.objective)(&bundle.warm_phases);
        // Fitted-phase baseline for the first-order filter on the 2.5 cm
        // crystal sits near 5.8 dB.
        assert!(
            (baseline - 5.8).abs() < 0.3,
            "baseline selectivity {baseline} dB"
        );
        let config = PsoConfig {
            iterations: 40,
            seed: 0,
            ..PsoConfig::default()
        };
        let res = pso_optimize(&bundle.objective, &config, Some(&bundle.warm_phases)).unwrap();
        assert!(
            res.best_objective >= baseline,
            "optimized {} dB < baseline {baseline} dB",
            res.best_objective
        );
        // 40 iterations already buys a visible margin.
        assert!(
            res.best_objective > baseline + 0.5,
            "optimized {} dB, baseline {baseline} dB",
            res.best_objective
        );
    }

    #[test]
    fn objective_at_fitted_phases_matches_tomography_selectivity() {
        // The baseline value and a comb-pump tomography run over the same
        // candidate set are two routes to the same number.
        let mut setup = crate::engine::SortingSetup::standard(2.0, 2.5).unwrap();
        setup.spatial_grid = SpatialGrid::square(32, 1050.0).unwrap();
        setup.pump.use_comb = true;
        let desired = ModeLabel::single(0, 1);
        let distractors = [ModeLabel::single(0, 0), ModeLabel::single(0, 2)];
        let bundle = make_selectivity_objective(&setup, &desired, &distractors).unwrap();
        let baseline = (bundle.objective)(&bundle.warm_phases);

        let signals = vec![
            distractors[0].clone(),
            desired.clone(),
            distractors[1].clone(),
        ];
        let matrix = crate::metrics::tomography(&setup, std::slice::from_ref(&desired), &signals).unwrap();
        let report = crate::metrics::selectivity(&matrix, Some(&[1])).unwrap();
        assert!(
            (baseline - report.db(0)).abs() < 1e-9,
            "objective {baseline} dB vs tomography {} dB",
            report.db(0)
        );
    }

    #[test]
    fn selectivity_objective_rejects_mixed_transverse_labels() {
        let setup = crate::engine::SortingSetup::standard(2.0, 2.5).unwrap();
        let desired = ModeLabel::single(0, 1);
        let distractors = [ModeLabel::single(1, 0)];
        assert!(make_selectivity_objective(&setup, &desired, &distractors).is_err());
    }
}
