//! Built-in scenarios reproducing the headline studies: temporal and
//! spatiotemporal tomography at two crystal lengths and several pulse
//! widths, the superposition-basis sort, comb-phase optimization, delay
//! galleries, spectral and spatial exports, and the phase-mismatch sweep.
//!
//! Every physical parameter is hard-coded here on purpose: 25 GHz comb
//! spacing, 37 lines, 1559 nm pump / 1551 nm signal carriers, 300 µm
//! waists, 1.2 ps/cm pump–SF walk-off, crystal lengths 1 and 2.5 cm, pulse
//! widths 1/2/3/7 ps.  Presets are plain [`Scenario`] values — serialize
//! one to JSON for a starting point to edit.

use crate::engine::SortingSetup;
use crate::metrics::TrendDirection;
use crate::optimizer::{PsoConfig, PsoVariant};
use crate::scenario::schema::{
    DelayGridSpec, DesiredMap, ModeRef, ModeSet, PairRef, Scenario, Stage, TaskSpec, TrendAxis,
    TrendPointSpec, TrendSpec, ValueRef,
};

/// Catalog row for `list`.
#[derive(Debug, Clone, Copy)]
pub struct PresetInfo {
    pub name: &'static str,
    pub description: &'static str,
}

/// All built-in presets, in display order.
pub fn list_presets() -> Vec<PresetInfo> {
    vec![
        PresetInfo {
            name: "table1",
            description: "two-mode temporal sort {T0,T1} at 2 ps: tomography + comb-phase \
                          optimization at 1 cm and 2.5 cm; asserts selectivity grows with length",
        },
        PresetInfo {
            name: "table2",
            description: "three-mode temporal sort {T0,T1,T2} on 2.5 cm at 2 ps and 7 ps; \
                          asserts per-mode selectivity drops at 7 ps",
        },
        PresetInfo {
            name: "table3",
            description: "superposition-basis sort {T+,T-,T2} at 2 ps on 2.5 cm; reports \
                          diagonal selectivity and the T+/T- extinction",
        },
        PresetInfo {
            name: "table4",
            description: "pulse-width sweep 1/2/3 ps on the 1 cm crystal, three temporal modes; \
                          asserts per-mode selectivity decreases with width",
        },
        PresetInfo {
            name: "appendixC",
            description: "alias of table4: the 1/2/3 ps width sweep on 1 cm",
        },
        PresetInfo {
            name: "fig1iii",
            description: "delay-scan gallery: counts vs pump delay for all nine (T_p, T_s) \
                          pairs, m <= 2, at 2 ps on 2.5 cm",
        },
        PresetInfo {
            name: "fig3",
            description: "full 15x15 spatiotemporal tomography (|l| <= 2, m <= 2) at 2 ps on \
                          2.5 cm, with per-panel bar-chart data",
        },
        PresetInfo {
            name: "fig4",
            description: "full 15x15 spatiotemporal tomography at 7 ps on 2.5 cm (degraded \
                          temporal contrast), with per-panel bar-chart data",
        },
        PresetInfo {
            name: "appendixA",
            description: "comb-line spectra (37 lines, 25 GHz, 1559 nm) fitted to the T0/T1/T2 \
                          and T+/T- envelopes at 2 ps",
        },
        PresetInfo {
            name: "appendixB",
            description: "time-integrated transverse SF intensity images for matched and \
                          mismatched transverse pairs",
        },
        PresetInfo {
            name: "edge-of-phasematching",
            description: "selectivity vs phase-mismatch detuning on 2.5 cm at 2 ps, plus the \
                          sinc^2 phase-matching curve around the 777.5 nm SF carrier",
        },
    ]
}

/// Look up a preset by name (case-insensitive).
pub fn preset(name: &str) -> Option<Scenario> {
    match name.to_ascii_lowercase().as_str() {
        "table1" => Some(table1()),
        "table2" => Some(table2()),
        "table3" => Some(table3()),
        "table4" | "appendixc" => Some(table4()),
        "fig1iii" => Some(fig1iii()),
        "fig3" => Some(fig3()),
        "fig4" => Some(fig4()),
        "appendixa" => Some(appendix_a()),
        "appendixb" => Some(appendix_b()),
        "edge-of-phasematching" => Some(edge_of_phasematching()),
        _ => None,
    }
}

/// Standard bench stage: 300 µm waists, matched fiber, grids sized to the
/// pulse width.
fn stage(name: &str, width_ps: f64, length_cm: f64) -> Stage {
    Stage::from_setup(
        name,
        SortingSetup::standard(width_ps, length_cm).expect("standard bench is valid"),
    )
}

fn t(m: u32) -> ModeRef {
    ModeRef::single(0, m)
}

fn tomography(name: &str, pumps: ModeSet, signals: ModeSet) -> TaskSpec {
    TaskSpec::Tomography {
        name: name.to_string(),
        pumps,
        signals,
        desired: DesiredMap::FlipL,
    }
}

fn optimize_t1_task(seed: u64) -> TaskSpec {
    TaskSpec::Optimize {
        name: "optimize_t1".to_string(),
        desired: t(1),
        distractors: vec![t(0)],
        pso: PsoConfig {
            iterations: 60,
            seed,
            variant: PsoVariant::VerbatimSum,
            ..PsoConfig::default()
        },
        warm_start: true,
    }
}

fn selectivity_point(
    label: &str,
    parameter: f64,
    stage: &str,
    task: &str,
    pump_index: usize,
) -> TrendPointSpec {
    TrendPointSpec {
        label: label.to_string(),
        parameter,
        stage: stage.to_string(),
        task: task.to_string(),
        value: ValueRef::Selectivity { pump_index },
    }
}

fn table1() -> Scenario {
    let mut short = stage("length_1cm", 2.0, 1.0);
    short.tasks = vec![
        tomography(
            "tomography",
            ModeSet::Temporal { count: 2 },
            ModeSet::Temporal { count: 2 },
        ),
        optimize_t1_task(1),
    ];
    let mut long = stage("length_2p5cm", 2.0, 2.5);
    long.tasks = short.tasks.clone();

    let length_trend = |pump_index: usize| TrendSpec {
        name: format!("selectivity_t{pump_index}_vs_length"),
        axis: TrendAxis::Length,
        direction: TrendDirection::Increasing,
        points: vec![
            selectivity_point("1 cm", 1.0, "length_1cm", "tomography", pump_index),
            selectivity_point("2.5 cm", 2.5, "length_2p5cm", "tomography", pump_index),
        ],
    };
    let gain_trend = |stage_name: &str| TrendSpec {
        name: format!("optimization_gain_{stage_name}"),
        axis: TrendAxis::Optimization,
        direction: TrendDirection::Increasing,
        points: vec![
            TrendPointSpec {
                label: "fitted phases".to_string(),
                parameter: 0.0,
                stage: stage_name.to_string(),
                task: "optimize_t1".to_string(),
                value: ValueRef::BaselineObjective,
            },
            TrendPointSpec {
                label: "optimized phases".to_string(),
                parameter: 1.0,
                stage: stage_name.to_string(),
                task: "optimize_t1".to_string(),
                value: ValueRef::OptimizedObjective,
            },
        ],
    };

    Scenario {
        name: "table1".to_string(),
        description: "Two-mode temporal sort {T0, T1}: 2 ps pulses, 25 GHz x 37-line pump comb \
                      (1559 nm pump / 1551 nm signal, 300 um waists), crystal lengths 1 cm and \
                      2.5 cm at 1.2 ps/cm walk-off. Runs tomography and comb-phase optimization \
                      of the T1 filter at both lengths; selectivity must grow with length and \
                      must not drop under optimization."
            .to_string(),
        seed: 0,
        poisson: false,
        fatal_cell_failures: false,
        peak_counts: 1.0e4,
        stages: vec![short, long],
        trends: vec![
            length_trend(0),
            length_trend(1),
            gain_trend("length_1cm"),
            gain_trend("length_2p5cm"),
        ],
    }
}

fn table2() -> Scenario {
    let mut narrow = stage("width_2ps", 2.0, 2.5);
    narrow.tasks = vec![tomography(
        "tomography",
        ModeSet::Temporal { count: 3 },
        ModeSet::Temporal { count: 3 },
    )];
    let mut wide = stage("width_7ps", 7.0, 2.5);
    wide.tasks = narrow.tasks.clone();

    let trends = (0..3)
        .map(|m| TrendSpec {
            name: format!("selectivity_t{m}_vs_width"),
            axis: TrendAxis::PulseWidth,
            direction: TrendDirection::Decreasing,
            points: vec![
                selectivity_point("2 ps", 2.0, "width_2ps", "tomography", m),
                selectivity_point("7 ps", 7.0, "width_7ps", "tomography", m),
            ],
        })
        .collect();

    Scenario {
        name: "table2".to_string(),
        description: "Three-mode temporal sort {T0, T1, T2} on the 2.5 cm crystal (1.2 ps/cm \
                      walk-off, 1559/1551 nm carriers) at 2 ps and 7 ps pulse widths; each \
                      mode's matched selectivity must drop at 7 ps, where the pulses outlast \
                      the 6 ps temporal gate."
            .to_string(),
        seed: 0,
        poisson: false,
        fatal_cell_failures: false,
        peak_counts: 1.0e4,
        stages: vec![narrow, wide],
        trends,
    }
}

fn table3() -> Scenario {
    let mut mub = stage("mub", 2.0, 2.5);
    mub.tasks = vec![tomography("tomography", ModeSet::Mub, ModeSet::Mub)];
    Scenario {
        name: "table3".to_string(),
        description: "Superposition-basis sort {T+, T-, T2} (T_pm = (T0 +- T1)/sqrt(2)) at 2 ps \
                      on the 2.5 cm crystal; reports the diagonal selectivities and the T+/T- \
                      extinction ratio."
            .to_string(),
        seed: 0,
        poisson: false,
        fatal_cell_failures: false,
        peak_counts: 1.0e4,
        stages: vec![mub],
        trends: vec![],
    }
}

fn table4() -> Scenario {
    let widths = [1.0, 2.0, 3.0];
    let stages: Vec<Stage> = widths
        .iter()
        .map(|&w| {
            let mut s = stage(&format!("width_{}ps", w as u32), w, 1.0);
            s.tasks = vec![tomography(
                "tomography",
                ModeSet::Temporal { count: 3 },
                ModeSet::Temporal { count: 3 },
            )];
            s
        })
        .collect();
    let trends = (0..3)
        .map(|m| TrendSpec {
            name: format!("selectivity_t{m}_vs_width"),
            axis: TrendAxis::PulseWidth,
            direction: TrendDirection::Decreasing,
            points: widths
                .iter()
                .map(|&w| {
                    selectivity_point(
                        &format!("{} ps", w as u32),
                        w,
                        &format!("width_{}ps", w as u32),
                        "tomography",
                        m,
                    )
                })
                .collect(),
        })
        .collect();
    Scenario {
        name: "table4".to_string(),
        description: "Pulse-width sweep 1/2/3 ps on the short 1 cm crystal (2.4 ps temporal \
                      gate), three temporal modes; per-mode matched selectivity must decrease \
                      monotonically with width."
            .to_string(),
        seed: 0,
        poisson: false,
        fatal_cell_failures: false,
        peak_counts: 1.0e4,
        stages,
        trends,
    }
}

fn fig1iii() -> Scenario {
    let mut gallery = stage("gallery", 2.0, 2.5);
    let pairs: Vec<PairRef> = (0..3)
        .flat_map(|mp| {
            (0..3).map(move |ms| PairRef {
                pump: t(mp),
                signal: t(ms),
            })
        })
        .collect();
    gallery.tasks = vec![TaskSpec::DelayScan {
        name: "gallery".to_string(),
        pairs,
        delays: DelayGridSpec {
            start_ps: -8.0,
            stop_ps: 8.0,
            count: 81,
        },
    }];
    Scenario {
        name: "fig1iii".to_string(),
        description: "Delay-scan gallery: photon counts vs pump delay (-8..8 ps) for all nine \
                      (T_pump, T_signal) pairs with m <= 2, at 2 ps on the 2.5 cm crystal. \
                      Matched pairs peak at zero delay; mismatched pairs dip there."
            .to_string(),
        seed: 0,
        poisson: false,
        fatal_cell_failures: false,
        peak_counts: 1.0e4,
        stages: vec![gallery],
        trends: vec![],
    }
}

fn st_tomography_scenario(name: &str, width_ps: f64, blurb: &str) -> Scenario {
    let mut st = stage("st", width_ps, 2.5);
    st.tasks = vec![tomography(
        "tomography",
        ModeSet::SpatioTemporal {
            l_max: 2,
            m_count: 3,
        },
        ModeSet::SpatioTemporal {
            l_max: 2,
            m_count: 3,
        },
    )];
    Scenario {
        name: name.to_string(),
        description: blurb.to_string(),
        seed: 0,
        poisson: false,
        fatal_cell_failures: false,
        peak_counts: 1.0e4,
        stages: vec![st],
        trends: vec![],
    }
}

fn fig3() -> Scenario {
    st_tomography_scenario(
        "fig3",
        2.0,
        "Full 15x15 spatiotemporal tomography (|l| <= 2 crossed with m <= 2) at 2 ps on the \
         2.5 cm crystal. Pump X_l T_m passes signal X_{-l} T_m; emits the count matrix plus \
         nine per-(m_p, m_s) panels of 25 transverse bars each.",
    )
}

fn fig4() -> Scenario {
    st_tomography_scenario(
        "fig4",
        7.0,
        "Full 15x15 spatiotemporal tomography at 7 ps on the 2.5 cm crystal: transverse sorting \
         survives while temporal contrast degrades (pulses outlast the 6 ps gate). Same panel \
         exports as the 2 ps run.",
    )
}

fn appendix_a() -> Scenario {
    let mut spectra = stage("spectra", 2.0, 2.5);
    spectra.tasks = vec![TaskSpec::SpectralExport {
        name: "comb_spectra".to_string(),
        modes: vec![
            t(0),
            t(1),
            t(2),
            ModeRef(vec![
                crate::scenario::schema::TermRef {
                    l: 0,
                    m: 0,
                    re: 1.0,
                    im: 0.0,
                },
                crate::scenario::schema::TermRef {
                    l: 0,
                    m: 1,
                    re: 1.0,
                    im: 0.0,
                },
            ]),
            ModeRef(vec![
                crate::scenario::schema::TermRef {
                    l: 0,
                    m: 0,
                    re: 1.0,
                    im: 0.0,
                },
                crate::scenario::schema::TermRef {
                    l: 0,
                    m: 1,
                    re: -1.0,
                    im: 0.0,
                },
            ]),
        ],
    }];
    Scenario {
        name: "appendixA".to_string(),
        description: "Comb-line spectra: per-line amplitude and phase of the 25 GHz, 37-line \
                      comb (1559 nm center) least-squares fitted to the 2 ps T0/T1/T2 and \
                      T+/T- envelopes, with wavelength-domain power for plotting."
            .to_string(),
        seed: 0,
        poisson: false,
        fatal_cell_failures: false,
        peak_counts: 1.0e4,
        stages: vec![spectra],
        trends: vec![],
    }
}

fn appendix_b() -> Scenario {
    let mut images = stage("images", 2.0, 2.5);
    // Leaner transverse grid: images are exported point-by-point.
    images.spatial_grid = crate::grid::SpatialGrid::square(96, 1050.0).expect("valid grid");
    let x = |l: i32| ModeRef::single(l, 0);
    images.tasks = vec![TaskSpec::SpatialImages {
        name: "sf_intensity".to_string(),
        pairs: vec![
            PairRef {
                pump: x(0),
                signal: x(0),
            },
            PairRef {
                pump: x(1),
                signal: x(-1),
            },
            PairRef {
                pump: x(2),
                signal: x(-2),
            },
            PairRef {
                pump: x(1),
                signal: x(1),
            },
        ],
    }];
    Scenario {
        name: "appendixB".to_string(),
        description: "Time-integrated transverse sum-frequency intensity maps at 2 ps on \
                      2.5 cm: matched pairs (net transverse index zero) against the mismatched \
                      (X+1, X+1) pair, with each map's fiber-coupled fraction."
            .to_string(),
        seed: 0,
        poisson: false,
        fatal_cell_failures: false,
        peak_counts: 1.0e4,
        stages: vec![images],
        trends: vec![],
    }
}

fn edge_of_phasematching() -> Scenario {
    let mut detuning = stage("detuning", 2.0, 2.5);
    let delta_k_values: Vec<f64> = (0..13).map(|i| 0.25 * i as f64).collect();
    detuning.tasks = vec![
        TaskSpec::DetuningSweep {
            name: "detuning_tradeoff".to_string(),
            delta_k_values,
            pumps: ModeSet::Temporal { count: 2 },
            signals: ModeSet::Temporal { count: 2 },
            desired: DesiredMap::FlipL,
        },
        TaskSpec::PhaseMatchingCurve {
            name: "spectral_response".to_string(),
            center_nm: 777.5,
            span_nm: 0.8,
            count: 161,
        },
    ];
    Scenario {
        name: "edge-of-phasematching".to_string(),
        description: "Operating point study on the 2.5 cm crystal at 2 ps: two-mode selectivity \
                      and matched counts as the phase mismatch detunes from 0 to 3 rad/cm \
                      (first sinc null at 2.51 rad/cm), plus the sinc^2 phase-matching curve \
                      over 0.8 nm around the 777.5 nm sum-frequency carrier. Reports the \
                      efficiency-selectivity tradeoff without asserting a preferred detuning."
            .to_string(),
        seed: 0,
        poisson: false,
        fatal_cell_failures: false,
        peak_counts: 1.0e4,
        stages: vec![detuning],
        trends: vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_nonempty_with_unique_names() {
        let cat = list_presets();
        assert!(!cat.is_empty());
        let mut names: Vec<_> = cat.iter().map(|p| p.name).collect();
        names.sort_unstable();
        let before = names.len();
        names.dedup();
        assert_eq!(names.len(), before, "preset names must be unique");
        assert!(cat.iter().any(|p| p.name == "appendixC"
            && p.description.contains("1/2/3 ps")));
        assert!(cat.iter().any(|p| p.name == "edge-of-phasematching"));
    }

    #[test]
    fn every_preset_resolves_and_validates() {
        for info in list_presets() {
            let sc = preset(info.name)
                .unwrap_or_else(|| panic!("preset '{}' missing", info.name));
            sc.validate()
                .unwrap_or_else(|e| panic!("preset '{}' invalid: {e}", info.name));
        }
        assert!(preset("no-such-preset").is_none());
    }

    #[test]
    fn appendix_c_aliases_the_width_sweep() {
        let a = preset("appendixC").unwrap();
        let b = preset("table4").unwrap();
        assert_eq!(a.name, b.name);
        assert_eq!(a.stages.len(), 3);
    }

    #[test]
    fn preset_parameters_pin_the_reference_bench() {
        let sc = preset("table1").unwrap();
        assert_eq!(sc.stages[0].crystal.length_cm, 1.0);
        assert_eq!(sc.stages[1].crystal.length_cm, 2.5);
        for st in &sc.stages {
            assert_eq!(st.crystal.walkoff_ps_per_cm, 1.2);
            assert_eq!(st.pump.carrier_wavelength_nm, 1559.0);
            assert_eq!(st.signal.carrier_wavelength_nm, 1551.0);
            assert_eq!(st.pump.comb_template.n_lines(), 37);
            assert_eq!(st.pump.comb_template.spacing_ghz(), 25.0);
            assert_eq!(st.pump.width_ps, 2.0);
        }
        let t2 = preset("table2").unwrap();
        assert_eq!(t2.stages[1].pump.width_ps, 7.0);
    }
}
