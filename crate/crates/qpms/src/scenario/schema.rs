//! The scenario file format: a single self-contained JSON document that
//! names every parameter of a run — grids, crystal, detector, beam
//! assembly, the task graph, and the qualitative trend claims checked at
//! the end.
//!
//! Unknown keys are rejected everywhere (`deny_unknown_fields`), and
//! [`Scenario::validate`] reports the JSON path of the offending field so
//! the CLI can point at it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{DetectorModel, SortingSetup};
use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, TemporalGrid};
use crate::medium::CrystalSpec;
use crate::metrics::{self, TrendDirection};
use crate::modes::{AssemblyParams, ModeLabel};
use crate::optimizer::PsoConfig;

/// A complete, self-contained experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Base seed for every stochastic feature of the run.
    #[serde(default)]
    pub seed: u64,
    /// Poisson-sample photon counts instead of reporting the deterministic
    /// mean.
    #[serde(default)]
    pub poisson: bool,
    /// Abort the run (nonzero exit) when any cell fails, instead of
    /// flagging the cell and continuing.
    #[serde(default)]
    pub fatal_cell_failures: bool,
    /// Count-matrix normalization: the largest matched-pair count is scaled
    /// to this value.
    #[serde(default = "default_peak_counts")]
    pub peak_counts: f64,
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub trends: Vec<TrendSpec>,
}

fn default_peak_counts() -> f64 {
    1.0e4
}

/// One bench configuration plus the tasks to run on it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub name: String,
    pub spatial_grid: SpatialGrid,
    pub temporal_grid: TemporalGrid,
    pub crystal: CrystalSpec,
    pub detector: DetectorModel,
    pub pump: AssemblyParams,
    pub signal: AssemblyParams,
    pub tasks: Vec<TaskSpec>,
}

impl Stage {
    /// The bench shared by every task of this stage.
    pub fn setup(&self) -> SortingSetup {
        SortingSetup {
            spatial_grid: self.spatial_grid.clone(),
            temporal_grid: self.temporal_grid.clone(),
            crystal: self.crystal.clone(),
            detector: self.detector.clone(),
            pump: self.pump.clone(),
            signal: self.signal.clone(),
        }
    }

    /// Stage around an existing bench, with no tasks yet.
    pub fn from_setup(name: &str, setup: SortingSetup) -> Self {
        Stage {
            name: name.to_string(),
            spatial_grid: setup.spatial_grid,
            temporal_grid: setup.temporal_grid,
            crystal: setup.crystal,
            detector: setup.detector,
            pump: setup.pump,
            signal: setup.signal,
            tasks: Vec::new(),
        }
    }
}

/// One term of a mode reference: transverse index `l`, temporal order `m`,
/// complex coefficient (defaults to 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRef {
    pub l: i32,
    pub m: u32,
    #[serde(default = "default_coeff_re")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn default_coeff_re() -> f64 {
    1.0
}

/// A mode in scenario files: a list of terms, normalized on resolution.
/// `[{"l": 0, "m": 1}]` is the single mode X0·T1; two or more terms form a
/// superposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeRef(pub Vec<TermRef>);

impl ModeRef {
    pub fn single(l: i32, m: u32) -> Self {
        ModeRef(vec![TermRef {
            l,
            m,
            re: 1.0,
            im: 0.0,
        }])
    }

    pub fn from_label(label: &ModeLabel) -> Self {
        ModeRef(
            label
                .terms()
                .iter()
                .map(|t| TermRef {
                    l: t.l,
                    m: t.m,
                    re: t.coeff().re,
                    im: t.coeff().im,
                })
                .collect(),
        )
    }

    pub fn to_label(&self) -> Result<ModeLabel> {
        let terms: Vec<(i32, u32, Complex64)> = self
            .0
            .iter()
            .map(|t| (t.l, t.m, Complex64::new(t.re, t.im)))
            .collect();
        ModeLabel::superposition(&terms)
    }
}

/// Shorthand for the built-in label catalogs, or an explicit list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSet {
    /// X_{-2} … X_{+2} on the fundamental temporal order.
    Spatial,
    /// T_0 … T_{count-1} on the fundamental transverse mode.
    Temporal { count: usize },
    /// {T_+, T_-, T_2}: the superposition basis plus the second order.
    Mub,
    /// Every (l, m) with |l| ≤ l_max and m < m_count, ordered l-major.
    SpatioTemporal { l_max: i32, m_count: u32 },
    Explicit { modes: Vec<ModeRef> },
}

impl ModeSet {
    pub fn labels(&self) -> Result<Vec<ModeLabel>> {
        match self {
            ModeSet::Spatial => Ok(metrics::spatial_catalog()),
            ModeSet::Temporal { count } => {
                if *count == 0 {
                    return Err(Error::config("temporal mode set needs count >= 1"));
                }
                Ok(metrics::temporal_catalog(*count))
            }
            ModeSet::Mub => Ok(metrics::mub_catalog()),
            ModeSet::SpatioTemporal { l_max, m_count } => {
                if *l_max < 0 || *m_count == 0 {
                    return Err(Error::config(
                        "spatiotemporal set needs l_max >= 0 and m_count >= 1",
                    ));
                }
                let mut labels = Vec::new();
                for l in -l_max..=*l_max {
                    for m in 0..*m_count {
                        labels.push(ModeLabel::single(l, m));
                    }
                }
                Ok(labels)
            }
            ModeSet::Explicit { modes } => {
                if modes.is_empty() {
                    return Err(Error::config("explicit mode set must be nonempty"));
                }
                modes.iter().map(|m| m.to_label()).collect()
            }
        }
    }
}

/// How tomography rows map pump filters to their designated signal.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "map", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesiredMap {
    /// Pump (l, m) passes signal (-l, m): the sorter's native pairing.
    #[default]
    FlipL,
    /// Pump i passes signal i (square matrices).
    Diagonal,
    /// Explicit signal column per pump row.
    Columns { columns: Vec<usize> },
}

impl DesiredMap {
    /// The designated signal column for every pump row.
    pub fn resolve(
        &self,
        pumps: &[ModeLabel],
        signals: &[ModeLabel],
    ) -> Result<Vec<usize>> {
        match self {
            DesiredMap::Diagonal => {
                if pumps.len() != signals.len() {
                    return Err(Error::config(format!(
                        "diagonal mapping needs equal set sizes, got {} pumps and {} signals",
                        pumps.len(),
                        signals.len()
                    )));
                }
                Ok((0..pumps.len()).collect())
            }
            DesiredMap::Columns { columns } => {
                if columns.len() != pumps.len() {
                    return Err(Error::config(format!(
                        "mapping has {} columns for {} pump filters",
                        columns.len(),
                        pumps.len()
                    )));
                }
                for &c in columns {
                    if c >= signals.len() {
                        return Err(Error::config(format!(
                            "mapped column {c} out of range for {} signal candidates",
                            signals.len()
                        )));
                    }
                }
                Ok(columns.clone())
            }
            DesiredMap::FlipL => pumps
                .iter()
                .map(|p| {
                    let flipped = flip_l(p)?;
                    signals
                        .iter()
                        .position(|s| labels_equivalent(s, &flipped))
                        .ok_or_else(|| {
                            Error::config(format!(
                                "no signal candidate matches the flipped pump {}",
                                p.describe()
                            ))
                        })
                })
                .collect(),
        }
    }
}

/// The label with every transverse index negated.
pub fn flip_l(label: &ModeLabel) -> Result<ModeLabel> {
    let terms: Vec<(i32, u32, Complex64)> = label
        .terms()
        .iter()
        .map(|t| (-t.l, t.m, t.coeff()))
        .collect();
    ModeLabel::superposition(&terms)
}

/// Structural equality of normalized labels: same term set (sorted by
/// (l, m)) with coefficients equal to 1e-9.
pub fn labels_equivalent(a: &ModeLabel, b: &ModeLabel) -> bool {
    if a.terms().len() != b.terms().len() {
        return false;
    }
    let key = |t: &crate::modes::LabelTerm| (t.l, t.m);
    let mut ta: Vec<_> = a.terms().to_vec();
    let mut tb: Vec<_> = b.terms().to_vec();
    ta.sort_by_key(key);
    tb.sort_by_key(key);
    ta.iter().zip(tb.iter()).all(|(x, y)| {
        x.l == y.l && x.m == y.m && (x.coeff() - y.coeff()).norm() < 1e-9
    })
}

/// Uniform pump-delay sweep, endpoints included.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayGridSpec {
    pub start_ps: f64,
    pub stop_ps: f64,
    pub count: usize,
}

impl DelayGridSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        let step = (self.stop_ps - self.start_ps) / (n - 1) as f64;
        (0..n).map(|k| self.start_ps + k as f64 * step).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::config("delay grid needs count >= 2"));
        }
        if !(self.stop_ps - self.start_ps).is_finite() || self.stop_ps <= self.start_ps {
            return Err(Error::config("delay grid needs stop_ps > start_ps"));
        }
        Ok(())
    }
}

/// One (pump filter, signal candidate) pairing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRef {
    pub pump: ModeRef,
    pub signal: ModeRef,
}

/// A unit of work within a stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    /// Counts for every (pump, signal) pair, peak-normalized, with
    /// per-filter selectivity.
    Tomography {
        name: String,
        pumps: ModeSet,
        signals: ModeSet,
        #[serde(default)]
        desired: DesiredMap,
    },
    /// Counts versus pump delay for each pair, normalized across the
    /// gallery.
    DelayScan {
        name: String,
        pairs: Vec<PairRef>,
        delays: DelayGridSpec,
    },
    /// Particle-swarm search over the pump comb-line phases maximizing the
    /// selectivity of `desired` against `distractors`.
    Optimize {
        name: String,
        desired: ModeRef,
        distractors: Vec<ModeRef>,
        #[serde(default)]
        pso: PsoConfig,
        /// Seed particle 0 with the fitted (unoptimized) phases so the
        /// result can never fall below the baseline.
        #[serde(default = "default_true")]
        warm_start: bool,
    },
    /// Conversion efficiency versus signal wavelength around a center.
    PhaseMatchingCurve {
        name: String,
        center_nm: f64,
        span_nm: f64,
        count: usize,
    },
    /// Comb-line spectra (amplitude/phase per line) fitted to each mode's
    /// ideal envelope.
    SpectralExport { name: String, modes: Vec<ModeRef> },
    /// Time-integrated transverse sum-frequency intensity for each pair.
    SpatialImages { name: String, pairs: Vec<PairRef> },
    /// Diagonal selectivity as a function of the phase mismatch.
    DetuningSweep {
        name: String,
        delta_k_values: Vec<f64>,
        pumps: ModeSet,
        signals: ModeSet,
        #[serde(default)]
        desired: DesiredMap,
    },
}

fn default_true() -> bool {
    true
}

impl TaskSpec {
    pub fn name(&self) -> &str {
        match self {
            TaskSpec::Tomography { name, .. }
            | TaskSpec::DelayScan { name, .. }
            | TaskSpec::Optimize { name, .. }
            | TaskSpec::PhaseMatchingCurve { name, .. }
            | TaskSpec::SpectralExport { name, .. }
            | TaskSpec::SpatialImages { name, .. }
            | TaskSpec::DetuningSweep { name, .. } => name,
        }
    }
}

/// Swept parameter a trend is claimed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendAxis {
    Length,
    PulseWidth,
    Optimization,
}

impl TrendAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrendAxis::Length => "length",
            TrendAxis::PulseWidth => "pulse_width",
            TrendAxis::Optimization => "optimization",
        }
    }
}

/// Which scalar of a task a trend point reads.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueRef {
    /// Selectivity (dB) of one pump row of a tomography task.
    Selectivity { pump_index: usize },
    /// Best objective (dB) found by an optimize task.
    OptimizedObjective,
    /// Unoptimized baseline (dB) of an optimize task.
    BaselineObjective,
}

/// One sample of a trend: a scalar read from a finished task, placed at a
/// parameter value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendPointSpec {
    pub label: String,
    pub parameter: f64,
    pub stage: String,
    pub task: String,
    pub value: ValueRef,
}

/// A qualitative claim checked after all stages ran: the referenced scalar
/// moves strictly in `direction` along `axis`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendSpec {
    pub name: String,
    pub axis: TrendAxis,
    pub direction: TrendDirection,
    pub points: Vec<TrendPointSpec>,
}

impl Scenario {
    /// Parse a scenario from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        Ok(scenario)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Validate every field, reporting the JSON path of the first problem.
    pub fn validate(&self) -> Result<()> {
        check_name("name", &self.name)?;
        if !self.peak_counts.is_finite() || self.peak_counts <= 0.0 {
            return Err(Error::validation(
                "peak_counts",
                format!("must be positive, got {}", self.peak_counts),
            ));
        }
        if self.stages.is_empty() {
            return Err(Error::validation("stages", "at least one stage required"));
        }
        let mut stage_names = std::collections::BTreeSet::new();
        for (si, stage) in self.stages.iter().enumerate() {
            let base = format!("stages[{si}]");
            stage.validate(&base)?;
            if !stage_names.insert(stage.name.clone()) {
                return Err(Error::validation(
                    format!("{base}.name"),
                    format!("duplicate stage name '{}'", stage.name),
                ));
            }
        }
        for (ti, trend) in self.trends.iter().enumerate() {
            self.validate_trend(trend, &format!("trends[{ti}]"))?;
        }
        Ok(())
    }

    fn validate_trend(&self, trend: &TrendSpec, base: &str) -> Result<()> {
        check_name(&format!("{base}.name"), &trend.name)?;
        if trend.points.len() < 2 {
            return Err(Error::validation(
                format!("{base}.points"),
                "a trend needs at least two points",
            ));
        }
        for (pi, point) in trend.points.iter().enumerate() {
            let pbase = format!("{base}.points[{pi}]");
            let stage = self
                .stages
                .iter()
                .find(|s| s.name == point.stage)
                .ok_or_else(|| {
                    Error::validation(
                        format!("{pbase}.stage"),
                        format!("unknown stage '{}'", point.stage),
                    )
                })?;
            let task = stage
                .tasks
                .iter()
                .find(|t| t.name() == point.task)
                .ok_or_else(|| {
                    Error::validation(
                        format!("{pbase}.task"),
                        format!("stage '{}' has no task '{}'", point.stage, point.task),
                    )
                })?;
            let ok = matches!(
                (&point.value, task),
                (ValueRef::Selectivity { .. }, TaskSpec::Tomography { .. })
                    | (
                        ValueRef::OptimizedObjective | ValueRef::BaselineObjective,
                        TaskSpec::Optimize { .. },
                    )
            );
            if !ok {
                return Err(Error::validation(
                    format!("{pbase}.value"),
                    format!(
                        "metric does not apply to task '{}' of that kind",
                        point.task
                    ),
                ));
            }
            if let (ValueRef::Selectivity { pump_index }, TaskSpec::Tomography { pumps, .. }) =
                (&point.value, task)
            {
                let n = pumps.labels().map(|l| l.len()).unwrap_or(0);
                if *pump_index >= n {
                    return Err(Error::validation(
                        format!("{pbase}.value.pump_index"),
                        format!("index {pump_index} out of range for {n} pump filters"),
                    ));
                }
            }
        }
        Ok(())
    }
}

impl Stage {
    fn validate(&self, base: &str) -> Result<()> {
        check_name(&format!("{base}.name"), &self.name)?;
        // Re-run the constructor guards: deserialization bypasses them.
        SpatialGrid::new(
            self.spatial_grid.nx,
            self.spatial_grid.ny,
            self.spatial_grid.extent_x_um,
            self.spatial_grid.extent_y_um,
        )
        .map_err(|e| reval(format!("{base}.spatial_grid"), e))?;
        TemporalGrid::new(self.temporal_grid.nt, self.temporal_grid.window_ps)
            .map_err(|e| reval(format!("{base}.temporal_grid"), e))?;
        self.setup()
            .validate()
            .map_err(|e| reval(base.to_string(), e))?;
        if self.tasks.is_empty() {
            return Err(Error::validation(
                format!("{base}.tasks"),
                "at least one task required",
            ));
        }
        let mut names = std::collections::BTreeSet::new();
        for (ti, task) in self.tasks.iter().enumerate() {
            let tbase = format!("{base}.tasks[{ti}]");
            check_name(&format!("{tbase}.name"), task.name())?;
            if !names.insert(task.name().to_string()) {
                return Err(Error::validation(
                    format!("{tbase}.name"),
                    format!("duplicate task name '{}'", task.name()),
                ));
            }
            self.validate_task(task, &tbase)?;
        }
        Ok(())
    }

    fn validate_task(&self, task: &TaskSpec, base: &str) -> Result<()> {
        match task {
            TaskSpec::Tomography {
                pumps,
                signals,
                desired,
                ..
            } => {
                let p = pumps
                    .labels()
                    .map_err(|e| reval(format!("{base}.pumps"), e))?;
                let s = signals
                    .labels()
                    .map_err(|e| reval(format!("{base}.signals"), e))?;
                desired
                    .resolve(&p, &s)
                    .map_err(|e| reval(format!("{base}.desired"), e))?;
            }
            TaskSpec::DelayScan { pairs, delays, .. } => {
                if pairs.is_empty() {
                    return Err(Error::validation(
                        format!("{base}.pairs"),
                        "at least one pair required",
                    ));
                }
                for (pi, pair) in pairs.iter().enumerate() {
                    pair.pump
                        .to_label()
                        .map_err(|e| reval(format!("{base}.pairs[{pi}].pump"), e))?;
                    pair.signal
                        .to_label()
                        .map_err(|e| reval(format!("{base}.pairs[{pi}].signal"), e))?;
                }
                delays
                    .validate()
                    .map_err(|e| reval(format!("{base}.delays"), e))?;
            }
            TaskSpec::Optimize {
                desired,
                distractors,
                pso,
                ..
            } => {
                let d = desired
                    .to_label()
                    .map_err(|e| reval(format!("{base}.desired"), e))?;
                if distractors.is_empty() {
                    return Err(Error::validation(
                        format!("{base}.distractors"),
                        "at least one distractor required",
                    ));
                }
                let l0 = d.common_l().ok_or_else(|| {
                    Error::validation(
                        format!("{base}.desired"),
                        "label must share one transverse index across terms",
                    )
                })?;
                for (di, dref) in distractors.iter().enumerate() {
                    let lbl = dref
                        .to_label()
                        .map_err(|e| reval(format!("{base}.distractors[{di}]"), e))?;
                    if lbl.common_l() != Some(l0) {
                        return Err(Error::validation(
                            format!("{base}.distractors[{di}]"),
                            "distractors must share the desired label's transverse index",
                        ));
                    }
                }
                pso.validate()
                    .map_err(|e| reval(format!("{base}.pso"), e))?;
                if pso.dims != self.pump.comb_template.n_lines() {
                    return Err(Error::validation(
                        format!("{base}.pso.dims"),
                        format!(
                            "must equal the pump comb line count {}",
                            self.pump.comb_template.n_lines()
                        ),
                    ));
                }
                self.temporal_grid
                    .check_comb_period(self.pump.comb_template.period_ps())
                    .map_err(|e| reval(format!("{base}.pso"), e))?;
            }
            TaskSpec::PhaseMatchingCurve {
                center_nm,
                span_nm,
                count,
                ..
            } => {
                let span_ok = center_nm.is_finite()
                    && *center_nm > 0.0
                    && span_nm.is_finite()
                    && *span_nm > 0.0;
                if !span_ok {
                    return Err(Error::validation(
                        format!("{base}.center_nm"),
                        "center and span must be positive",
                    ));
                }
                if *count < 3 {
                    return Err(Error::validation(
                        format!("{base}.count"),
                        "need at least 3 samples",
                    ));
                }
            }
            TaskSpec::SpectralExport { modes, .. } => {
                if modes.is_empty() {
                    return Err(Error::validation(
                        format!("{base}.modes"),
                        "at least one mode required",
                    ));
                }
                for (mi, mode) in modes.iter().enumerate() {
                    mode.to_label()
                        .map_err(|e| reval(format!("{base}.modes[{mi}]"), e))?;
                }
                self.temporal_grid
                    .check_comb_period(self.pump.comb_template.period_ps())
                    .map_err(|e| reval(format!("{base}.modes"), e))?;
            }
            TaskSpec::SpatialImages { pairs, .. } => {
                if pairs.is_empty() {
                    return Err(Error::validation(
                        format!("{base}.pairs"),
                        "at least one pair required",
                    ));
                }
                for (pi, pair) in pairs.iter().enumerate() {
                    pair.pump
                        .to_label()
                        .map_err(|e| reval(format!("{base}.pairs[{pi}].pump"), e))?;
                    pair.signal
                        .to_label()
                        .map_err(|e| reval(format!("{base}.pairs[{pi}].signal"), e))?;
                }
            }
            TaskSpec::DetuningSweep {
                delta_k_values,
                pumps,
                signals,
                desired,
                ..
            } => {
                if delta_k_values.is_empty() {
                    return Err(Error::validation(
                        format!("{base}.delta_k_values"),
                        "at least one value required",
                    ));
                }
                if delta_k_values.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::validation(
                        format!("{base}.delta_k_values"),
                        "values must be strictly increasing",
                    ));
                }
                let p = pumps
                    .labels()
                    .map_err(|e| reval(format!("{base}.pumps"), e))?;
                let s = signals
                    .labels()
                    .map_err(|e| reval(format!("{base}.signals"), e))?;
                desired
                    .resolve(&p, &s)
                    .map_err(|e| reval(format!("{base}.desired"), e))?;
            }
        }
        Ok(())
    }
}

/// Attach a JSON path to an error bubbling up from a sub-validator.
fn reval(path: String, err: Error) -> Error {
    let message = match err {
        Error::Config(m) => m,
        Error::Validation { path: inner, message } => {
            return Error::Validation {
                path: format!("{path}.{inner}"),
                message,
            }
        }
        other => other.to_string(),
    };
    Error::Validation { path, message }
}

/// Names become file paths: restrict to a safe alphabet.
fn check_name(path: &str, name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !name.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Error::validation(
            path,
            format!(
                "'{name}' must be nonempty, use only [A-Za-z0-9._-], and not start with '.'"
            ),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::presets;

    #[test]
    fn mode_refs_resolve_and_normalize() {
        let single = ModeRef::single(-1, 2).to_label().unwrap();
        assert_eq!(single.terms().len(), 1);
        assert_eq!(single.terms()[0].l, -1);
        let sup = ModeRef(vec![
            TermRef { l: 0, m: 0, re: 1.0, im: 0.0 },
            TermRef { l: 0, m: 1, re: -1.0, im: 0.0 },
        ])
        .to_label()
        .unwrap();
        let n2: f64 = sup.terms().iter().map(|t| t.coeff().norm_sqr()).sum();
        assert!((n2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flip_map_finds_mirrored_signals() {
        let pumps = metrics::spatial_catalog();
        let signals = metrics::spatial_catalog();
        let map = DesiredMap::FlipL.resolve(&pumps, &signals).unwrap();
        // X_{-2} (index 0) maps to X_{+2} (index 4), and so on.
        assert_eq!(map, vec![4, 3, 2, 1, 0]);
        let temporal = metrics::temporal_catalog(3);
        let map = DesiredMap::FlipL.resolve(&temporal, &temporal).unwrap();
        assert_eq!(map, vec![0, 1, 2]);
        let mub = metrics::mub_catalog();
        let map = DesiredMap::FlipL.resolve(&mub, &mub).unwrap();
        assert_eq!(map, vec![0, 1, 2]);
    }

    #[test]
    fn desired_map_guards() {
        let p = metrics::temporal_catalog(2);
        let s = metrics::temporal_catalog(3);
        assert!(DesiredMap::Diagonal.resolve(&p, &s).is_err());
        assert!(DesiredMap::Columns { columns: vec![0] }.resolve(&p, &s).is_err());
        assert!(DesiredMap::Columns { columns: vec![0, 9] }
            .resolve(&p, &s)
            .is_err());
        assert_eq!(
            DesiredMap::Columns { columns: vec![2, 0] }
                .resolve(&p, &s)
                .unwrap(),
            vec![2, 0]
        );
        // FlipL with no mirror available
        let only_plus = vec![crate::modes::ModeLabel::single(1, 0)];
        assert!(DesiredMap::FlipL.resolve(&only_plus, &only_plus).is_err());
    }

    #[test]
    fn scenario_json_round_trip_preserves_validation() {
        let sc = presets::preset("table1").unwrap();
        sc.validate().unwrap();
        let text = sc.to_json_pretty().unwrap();
        let back = Scenario::from_json(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.name, sc.name);
        assert_eq!(back.stages.len(), sc.stages.len());
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_path() {
        let sc = presets::preset("table3").unwrap();
        let mut v: serde_json::Value =
            serde_json::from_str(&sc.to_json_pretty().unwrap()).unwrap();
        v["stages"][0]["crystall"] = serde_json::json!({});
        let err = Scenario::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("crystall"), "{err}");
    }

    #[test]
    fn validation_reports_field_paths() {
        let mut sc = presets::preset("table1").unwrap();
        sc.stages[1].name = sc.stages[0].name.clone();
        let err = sc.validate().unwrap_err();
        assert!(err.to_string().contains("stages[1].name"), "{err}");

        let mut sc = presets::preset("table1").unwrap();
        sc.stages[0].temporal_grid.nt = 100; // not a power of two
        let err = sc.validate().unwrap_err();
        assert!(err.to_string().contains("stages[0].temporal_grid"), "{err}");

        let mut sc = presets::preset("table1").unwrap();
        sc.trends[0].points[0].stage = "nope".into();
        let err = sc.validate().unwrap_err();
        assert!(err.to_string().contains("trends[0].points[0].stage"), "{err}");
    }

    #[test]
    fn empty_mode_sets_fail_validation_before_compute() {
        let mut sc = presets::preset("table1").unwrap();
        if let TaskSpec::Tomography { signals, .. } = &mut sc.stages[0].tasks[0] {
            *signals = ModeSet::Explicit { modes: vec![] };
        } else {
            panic!("expected tomography first");
        }
        let err = sc.validate().unwrap_err();
        assert!(err.to_string().contains("signals"), "{err}");
    }

    #[test]
    fn delay_grid_spans_inclusive_range() {
        let g = DelayGridSpec {
            start_ps: -2.0,
            stop_ps: 2.0,
            count: 5,
        };
        let v = g.values();
        assert_eq!(v.len(), 5);
        assert!((v[0] + 2.0).abs() < 1e-12);
        assert!((v[2]).abs() < 1e-12);
        assert!((v[4] - 2.0).abs() < 1e-12);
    }
}
