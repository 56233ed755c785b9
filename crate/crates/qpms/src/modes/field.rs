//! Discrete spatiotemporal fields and their assembly from mode labels.
//!
//! Every field in the sorter is a complex amplitude over (x, y, t). Fields
//! built from a single spatial profile times a temporal envelope keep that
//! factorization (`FieldData::Separable`) — the engine exploits it to avoid
//! touching the full 3-D array, which at default grids would be ~134 MB per
//! field.

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, TemporalGrid};
use crate::modes::comb::{comb_synthesize, fit_comb_to_mode, CombSpec};
use crate::modes::label::ModeLabel;
use crate::modes::spatial::lg_mode;
use crate::modes::temporal::{hg_temporal_mode_delayed, normalize, temporal_overlap};

/// Storage for a field's complex amplitude.
#[derive(Debug, Clone)]
pub enum FieldData {
    /// E(x, y, t) = S(x, y) · T(t), stored as the two factors.
    Separable {
        spatial: Array2<Complex64>,
        temporal: Array1<Complex64>,
    },
    /// Dense (nx, ny, nt) amplitude.
    Full(Array3<Complex64>),
}

/// A complex field amplitude on an (x, y, t) grid with axis metadata.
#[derive(Debug, Clone)]
pub struct SpatioTemporalField {
    pub data: FieldData,
    pub spatial_grid: SpatialGrid,
    pub temporal_grid: TemporalGrid,
    pub carrier_wavelength_nm: f64,
}

impl SpatioTemporalField {
    /// Total energy ∬∫|E|² dx dy dt.
    pub fn energy(&self) -> f64 {
        let da = self.spatial_grid.area_element();
        let dt = self.temporal_grid.dt();
        match &self.data {
            FieldData::Separable { spatial, temporal } => {
                let es: f64 = spatial.iter().map(|a| a.norm_sqr()).sum::<f64>() * da;
                let et: f64 = temporal.iter().map(|a| a.norm_sqr()).sum::<f64>() * dt;
                es * et
            }
            FieldData::Full(a) => a.iter().map(|v| v.norm_sqr()).sum::<f64>() * da * dt,
        }
    }

    pub fn is_separable(&self) -> bool {
        matches!(self.data, FieldData::Separable { .. })
    }

    /// The (spatial, temporal) factors when the field is separable.
    pub fn separable_parts(&self) -> Option<(&Array2<Complex64>, &Array1<Complex64>)> {
        match &self.data {
            FieldData::Separable { spatial, temporal } => Some((spatial, temporal)),
            FieldData::Full(_) => None,
        }
    }

    /// Materialize the dense (nx, ny, nt) amplitude.
    pub fn to_full(&self) -> Array3<Complex64> {
        match &self.data {
            FieldData::Full(a) => a.clone(),
            FieldData::Separable { spatial, temporal } => {
                let (nx, ny) = spatial.dim();
                let nt = temporal.len();
                let mut out = Array3::<Complex64>::zeros((nx, ny, nt));
                for i in 0..nx {
                    for j in 0..ny {
                        let s = spatial[[i, j]];
                        for k in 0..nt {
                            out[[i, j, k]] = s * temporal[k];
                        }
                    }
                }
                out
            }
        }
    }

    /// ⟨self|other⟩ = ∬∫ conj(E₁)·E₂ dx dy dt.
    pub fn overlap(&self, other: &SpatioTemporalField) -> Result<Complex64> {
        self.check_same_grids(other)?;
        let da = self.spatial_grid.area_element();
        let dt = self.temporal_grid.dt();
        match (&self.data, &other.data) {
            (
                FieldData::Separable { spatial, temporal },
                FieldData::Separable {
                    spatial: s2,
                    temporal: t2,
                },
            ) => {
                let os: Complex64 = spatial
                    .iter()
                    .zip(s2.iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum::<Complex64>()
                    * da;
                let ot = temporal_overlap(temporal, t2, dt);
                Ok(os * ot)
            }
            _ => {
                let a = self.to_full();
                let b = other.to_full();
                Ok(a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| x.conj() * y)
                    .sum::<Complex64>()
                    * da
                    * dt)
            }
        }
    }

    pub fn check_same_grids(&self, other: &SpatioTemporalField) -> Result<()> {
        if self.spatial_grid != other.spatial_grid || self.temporal_grid != other.temporal_grid {
            return Err(Error::GridMismatch(
                "fields live on different grids".to_string(),
            ));
        }
        Ok(())
    }
}

/// Parameters for turning a [`ModeLabel`] into a field.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblyParams {
    pub waist_um: f64,
    /// Intensity FWHM of the fundamental temporal mode, ps.
    pub width_ps: f64,
    pub carrier_wavelength_nm: f64,
    #[serde(default)]
    pub delay_ps: f64,
    /// Replace each ideal Hermite-Gaussian envelope with its least-squares
    /// comb synthesis on `comb_template`.
    #[serde(default)]
    pub use_comb: bool,
    #[serde(default = "CombSpec::template_37_lines")]
    pub comb_template: CombSpec,
}

impl AssemblyParams {
    pub fn new(waist_um: f64, width_ps: f64, carrier_wavelength_nm: f64) -> Self {
        Self {
            waist_um,
            width_ps,
            carrier_wavelength_nm,
            delay_ps: 0.0,
            use_comb: false,
            comb_template: CombSpec::template_37_lines(),
        }
    }

    pub fn with_delay(mut self, delay_ps: f64) -> Self {
        self.delay_ps = delay_ps;
        self
    }

    pub fn with_comb(mut self, use_comb: bool) -> Self {
        self.use_comb = use_comb;
        self
    }
}

/// Assemble the normalized field Σ c · LG_l(x, y) · T_m(t − delay).
///
/// Labels whose terms share one OAM index produce a separable field (single
/// LG profile × composite envelope); mixed-l superpositions materialize the
/// dense array. With `use_comb` set, each envelope is the comb fit of the
/// ideal mode, delayed by a line-phase ramp (exact for any delay).
pub fn assemble_field(
    label: &ModeLabel,
    params: &AssemblyParams,
    sgrid: &SpatialGrid,
    tgrid: &TemporalGrid,
) -> Result<SpatioTemporalField> {
    let dt = tgrid.dt();
    // temporal envelope for one HG order, honoring delay and comb synthesis
    let envelope_for = |m: u32| -> Result<Array1<Complex64>> {
        if params.use_comb {
            let ideal = crate::modes::temporal::hg_temporal_mode(m as usize, params.width_ps, tgrid)?;
            let fit = fit_comb_to_mode(&ideal, &params.comb_template, tgrid, false)?;
            comb_synthesize(&fit.spec.delayed(params.delay_ps), tgrid)
        } else {
            hg_temporal_mode_delayed(m as usize, params.width_ps, params.delay_ps, tgrid)
        }
    };

    let field = match label.common_l() {
        Some(l) => {
            let spatial = lg_mode(l, params.waist_um, sgrid)?;
            let mut temporal = Array1::<Complex64>::zeros(tgrid.nt);
            for term in label.terms() {
                let env = envelope_for(term.m)?;
                let c = term.coeff();
                for (acc, e) in temporal.iter_mut().zip(env.iter()) {
                    *acc += c * e;
                }
            }
            normalize(&mut temporal, dt);
            SpatioTemporalField {
                data: FieldData::Separable { spatial, temporal },
                spatial_grid: sgrid.clone(),
                temporal_grid: tgrid.clone(),
                carrier_wavelength_nm: params.carrier_wavelength_nm,
            }
        }
        None => {
            let mut full = Array3::<Complex64>::zeros((sgrid.nx, sgrid.ny, tgrid.nt));
            for term in label.terms() {
                let spatial = lg_mode(term.l, params.waist_um, sgrid)?;
                let env = envelope_for(term.m)?;
                let c = term.coeff();
                for i in 0..sgrid.nx {
                    for j in 0..sgrid.ny {
                        let s = c * spatial[[i, j]];
                        for k in 0..tgrid.nt {
                            full[[i, j, k]] += s * env[k];
                        }
                    }
                }
            }
            // renormalize to unit energy
            let da = sgrid.area_element();
            let norm2: f64 = full.iter().map(|v| v.norm_sqr()).sum::<f64>() * da * dt;
            let s = 1.0 / norm2.sqrt();
            full.mapv_inplace(|v| v * s);
            SpatioTemporalField {
                data: FieldData::Full(full),
                spatial_grid: sgrid.clone(),
                temporal_grid: tgrid.clone(),
                carrier_wavelength_nm: params.carrier_wavelength_nm,
            }
        }
    };
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::label::Role;
    use approx::assert_abs_diff_eq;

    fn grids() -> (SpatialGrid, TemporalGrid) {
        (
            SpatialGrid::square(64, 1050.0).unwrap(),
            TemporalGrid::new(256, 40.0).unwrap(),
        )
    }

    fn params() -> AssemblyParams {
        AssemblyParams::new(300.0, 2.0, 1551.0)
    }

    #[test]
    fn fundamental_pair_is_separable_unit_energy() {
        let (sg, tg) = grids();
        let f = assemble_field(&ModeLabel::single(0, 0), &params(), &sg, &tg).unwrap();
        assert!(f.is_separable());
        assert_abs_diff_eq!(f.energy(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn temporal_superposition_matches_envelope_sum() {
        let (sg, tg) = grids();
        let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let plus = ModeLabel::superposition(&[(0, 0, c), (0, 1, c)]).unwrap();
        let f = assemble_field(&plus, &params(), &sg, &tg).unwrap();
        let (_, env) = f.separable_parts().expect("shared l stays separable");
        // envelope equals (T0 + T1)/√2 sample-for-sample
        let t0 = crate::modes::temporal::hg_temporal_mode(0, 2.0, &tg).unwrap();
        let t1 = crate::modes::temporal::hg_temporal_mode(1, 2.0, &tg).unwrap();
        for (i, e) in env.iter().enumerate() {
            let expect = (t0[i] + t1[i]) * c;
            assert_abs_diff_eq!(e.re, expect.re, epsilon = 1e-9);
            assert_abs_diff_eq!(e.im, expect.im, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(f.energy(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn delay_shifts_profile_and_preserves_energy() {
        let (sg, tg) = grids();
        let f0 = assemble_field(&ModeLabel::single(0, 0), &params(), &sg, &tg).unwrap();
        let f5 = assemble_field(
            &ModeLabel::single(0, 0),
            &params().with_delay(5.0),
            &sg,
            &tg,
        )
        .unwrap();
        assert_abs_diff_eq!(f5.energy(), 1.0, epsilon = 1e-9);
        // overlap equals the closed-form Gaussian shift overlap
        let tau = crate::modes::temporal::hg_width_to_tau(2.0);
        let expected = (-(5.0f64).powi(2) / (4.0 * tau * tau)).exp();
        assert_abs_diff_eq!(f0.overlap(&f5).unwrap().norm(), expected, epsilon = 1e-6);
    }

    #[test]
    fn mixed_l_superposition_goes_dense_and_normalizes() {
        let (sg, tg) = grids();
        let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mixed = ModeLabel::superposition(&[(1, 0, c), (-1, 0, c)]).unwrap();
        let f = assemble_field(&mixed, &params(), &sg, &tg).unwrap();
        assert!(!f.is_separable());
        assert_abs_diff_eq!(f.energy(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn separable_and_full_overlaps_agree() {
        let (sg, tg) = grids();
        let a = assemble_field(&ModeLabel::single(1, 0), &params(), &sg, &tg).unwrap();
        let b = assemble_field(&ModeLabel::single(1, 1), &params().with_delay(1.0), &sg, &tg)
            .unwrap();
        let fast = a.overlap(&b).unwrap();
        let dense_a = SpatioTemporalField {
            data: FieldData::Full(a.to_full()),
            spatial_grid: a.spatial_grid.clone(),
            temporal_grid: a.temporal_grid.clone(),
            carrier_wavelength_nm: a.carrier_wavelength_nm,
        };
        let slow = dense_a.overlap(&b).unwrap();
        assert_abs_diff_eq!(fast.re, slow.re, epsilon = 1e-12);
        assert_abs_diff_eq!(fast.im, slow.im, epsilon = 1e-12);
    }

    #[test]
    fn comb_assembly_stays_close_to_ideal_mode() {
        let (sg, _) = grids();
        let tg = TemporalGrid::new(512, 40.0).unwrap();
        let ideal = assemble_field(&ModeLabel::single(0, 1), &params(), &sg, &tg).unwrap();
        let combed = assemble_field(
            &ModeLabel::single(0, 1).with_role(Role::Pump),
            &params().with_comb(true),
            &sg,
            &tg,
        )
        .unwrap();
        let fid = ideal.overlap(&combed).unwrap().norm_sqr();
        assert!(fid > 0.999, "comb fit fidelity {fid}");
    }
}
