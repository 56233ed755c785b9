//! The χ² crystal model: phase matching, pump–SF temporal walk-off, coupling
//! strength, and the spectral-domain multipliers used by the split-step
//! engine.
//!
//! # Model
//!
//! In the frame co-moving with the pump/signal group velocity (their mutual
//! mismatch is negligible over these lengths), the undepleted coupled
//! equations reduce to
//!
//! ```text
//! ∂A_sf/∂z = i κ A_p(x,y,t) A_s(x,y,t) exp(i Δk z) − δ ∂A_sf/∂t (+ diffraction)
//! ∂A_p/∂z = 0 (+ diffraction),   ∂A_s/∂z = 0 (+ diffraction)
//! ```
//!
//! where δ is the pump–SF group-delay mismatch per unit length. Group-velocity
//! dispersion within each pulse is omitted — a documented model limit:
//! few-ps pulses over ≤ 2.5 cm accumulate negligible intra-pulse GVD compared
//! to the walk-off.
//!
//! # Walk-off bookkeeping
//!
//! `walkoff_ps_per_cm` is the **observed pulse-center walk-off** per unit
//! length: SF light generated at depth z exits delayed by δ(L−z), and with
//! generation spread uniformly along the crystal the SF pulse center trails
//! the pump by δL/2. The quoted per-length walk-off is that observable,
//! so the transport slope entering the propagation and the phase-matching
//! bandwidth is **twice** the quoted rate: δ = 2 × walkoff_ps_per_cm.
//! (Group-index data for periodically poled lithium niobate near
//! 1550 → 775 nm gives δ ≈ 2.3–2.4 ps/cm, i.e. ~1.2 ps/cm of center delay,
//! consistent with this reading.)

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, TemporalGrid};

/// Speed of light in nm/ps (= 299.792458 µm/ps).
pub const C_NM_PER_PS: f64 = 299_792.458;

/// Quasi-phase-matched χ² crystal parameters.
///
/// Serialized field names are the documented JSON schema keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSpec {
    /// Crystal length, cm.
    pub length_cm: f64,
    /// Observed pump–SF pulse-center walk-off per length, ps/cm.
    pub walkoff_ps_per_cm: f64,
    /// Phase-mismatch detuning from the quasi-phase-matched peak, rad/cm.
    pub delta_k_rad_per_cm: f64,
    /// Coupling strength, W^(−1/2) cm^(−1) scale (see [`kappa_for_normalized_efficiency`]).
    pub kappa: f64,
    /// Ceiling on the adaptive split-step count.
    pub nz_steps: usize,
    /// Enable paraxial transverse diffraction.
    pub diffraction: bool,
}

impl Default for CrystalSpec {
    /// The long crystal at the quasi-phase-matched peak: 2.5 cm, 1.2 ps/cm
    /// quoted walk-off, Δk = 0, κ calibrated to 1%/W/cm².
    fn default() -> Self {
        Self {
            length_cm: 2.5,
            walkoff_ps_per_cm: 1.2,
            delta_k_rad_per_cm: 0.0,
            kappa: kappa_for_normalized_efficiency(0.01),
            nz_steps: 256,
            diffraction: false,
        }
    }
}

impl CrystalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length_cm <= 0.0 {
            return Err(Error::config("crystal length must be positive"));
        }
        if self.walkoff_ps_per_cm < 0.0 {
            return Err(Error::config("walk-off rate must be >= 0"));
        }
        if self.nz_steps < 16 {
            return Err(Error::config(format!(
                "nz_steps = {}; the adaptive ceiling must be >= 16",
                self.nz_steps
            )));
        }
        Ok(())
    }

    /// Observed pump–SF pulse-center delay accumulated over `length_cm`, ps
    /// (1.2 ps for 1 cm, 3.0 ps for 2.5 cm at the default rate).
    pub fn pulse_center_walkoff_ps(&self) -> f64 {
        self.walkoff_ps_per_cm * self.length_cm
    }

    /// Group-delay mismatch δ between pump and SF per unit length, ps/cm —
    /// the slope entering transport and phase matching (2× the quoted
    /// center-delay rate; see the module docs).
    pub fn transport_slope_ps_per_cm(&self) -> f64 {
        2.0 * self.walkoff_ps_per_cm
    }

    /// Total group-delay spread of SF generation over the crystal, ps.
    pub fn gate_width_ps(&self) -> f64 {
        self.transport_slope_ps_per_cm() * self.length_cm
    }
}

/// κ such that a CW-equivalent pump of power `P = 1 W` over 1 cm converts
/// the fraction `efficiency_per_w_cm2` (0.01 for the nominal 1%/W/cm²):
/// in the undepleted low-conversion limit the converted fraction is
/// (κ√P·L)², so κ = √η.
pub fn kappa_for_normalized_efficiency(efficiency_per_w_cm2: f64) -> f64 {
    efficiency_per_w_cm2.sqrt()
}

/// Sampled phase-matching curve with its fitted sinc² parameters.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseMatchingCurve {
    pub wavelengths_nm: Vec<f64>,
    /// Relative SF efficiency, peak-normalized to 1.
    pub efficiencies: Vec<f64>,
    /// Wavelength of the fitted peak, nm.
    pub center_nm: f64,
    /// Full width at half maximum, nm.
    pub fwhm_nm: f64,
}

/// Sample the sinc²-shaped conversion-efficiency curve around a center
/// wavelength.
///
/// The mismatch is linearized in the frequency detuning around the
/// phase-matched point using the transport group-delay slope:
/// Δk(λ) = delta_k + 2π·Δν(λ)·δ, efficiency = sinc²(Δk·L/2), normalized so
/// the peak over the sampled range is 1.
pub fn phase_matching_curve(
    crystal: &CrystalSpec,
    center_nm: f64,
    wavelengths_nm: &[f64],
) -> Result<PhaseMatchingCurve> {
    crystal.validate()?;
    if wavelengths_nm.is_empty() {
        return Err(Error::config("wavelength list must be nonempty"));
    }
    if wavelengths_nm.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("wavelength list must be strictly sorted"));
    }
    let slope = crystal.transport_slope_ps_per_cm();
    let eff: Vec<f64> = wavelengths_nm
        .iter()
        .map(|&wl| {
            // frequency detuning in THz from the center wavelength
            let dnu = C_NM_PER_PS / wl - C_NM_PER_PS / center_nm;
            let dk_total =
                crystal.delta_k_rad_per_cm + 2.0 * std::f64::consts::PI * dnu * slope;
            sinc(dk_total * crystal.length_cm / 2.0).powi(2)
        })
        .collect();
    let peak = eff.iter().cloned().fold(0.0, f64::max);
    let eff: Vec<f64> = if peak > 0.0 {
        eff.into_iter().map(|e| e / peak).collect()
    } else {
        eff
    };
    let (center, fwhm) = fit_peak_and_fwhm(wavelengths_nm, &eff);
    Ok(PhaseMatchingCurve {
        wavelengths_nm: wavelengths_nm.to_vec(),
        efficiencies: eff,
        center_nm: center,
        fwhm_nm: fwhm,
    })
}

/// Peak location and FWHM by linear interpolation of the half-max crossings.
fn fit_peak_and_fwhm(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let (imax, &ymax) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("nonempty");
    let half = ymax / 2.0;
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev: Option<usize> = None;
        for i in range {
            if let Some(p) = prev {
                let (a, b) = (ys[p], ys[i]);
                if (a - half) * (b - half) <= 0.0 && a != b {
                    let t = (half - a) / (b - a);
                    return Some(xs[p] + t * (xs[i] - xs[p]));
                }
            }
            prev = Some(i);
        }
        None
    };
    let left = cross(&mut (0..=imax).rev());
    let right = cross(&mut (imax..xs.len()));
    let fwhm = match (left, right) {
        (Some(l), Some(r)) => (r - l).abs(),
        _ => f64::NAN,
    };
    (xs[imax], fwhm)
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Which envelope a linear step acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    Pump,
    Signal,
    Sf,
}

/// Temporal spectral multiplier for one linear step of length `dz_cm`.
///
/// In the co-moving frame only the SF envelope drifts:
/// `exp(−i 2π f · δ · dz)` with δ the transport slope; pump and signal get
/// the identity. All multipliers are unit-modulus (the step is unitary).
pub fn temporal_step_multiplier(
    crystal: &CrystalSpec,
    role: FieldRole,
    dz_cm: f64,
    grid: &TemporalGrid,
) -> Vec<Complex64> {
    match role {
        FieldRole::Pump | FieldRole::Signal => vec![Complex64::new(1.0, 0.0); grid.nt],
        FieldRole::Sf => {
            let delta = crystal.transport_slope_ps_per_cm();
            grid.freqs_thz()
                .iter()
                .map(|&f| {
                    Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * delta * dz_cm)
                })
                .collect()
        }
    }
}

/// Paraxial diffraction multiplier exp(−i (kx² + ky²) dz / (2 k_carrier))
/// on the spatial-frequency grid, for any role. `None` when diffraction is
/// disabled — the caller skips the transverse transform entirely, leaving
/// the spatial profile bit-identical.
pub fn diffraction_multiplier(
    crystal: &CrystalSpec,
    carrier_wavelength_nm: f64,
    dz_cm: f64,
    grid: &SpatialGrid,
) -> Option<ndarray::Array2<Complex64>> {
    if !crystal.diffraction {
        return None;
    }
    // k_carrier in rad/µm; dz in µm
    let k0 = 2.0 * std::f64::consts::PI / (carrier_wavelength_nm * 1e-3);
    let dz_um = dz_cm * 1e4;
    let kxs = grid.kxs();
    let kys = grid.kys();
    let mut out = ndarray::Array2::<Complex64>::zeros((grid.nx, grid.ny));
    for (i, &kx) in kxs.iter().enumerate() {
        for (j, &ky) in kys.iter().enumerate() {
            out[[i, j]] = Complex64::from_polar(1.0, -(kx * kx + ky * ky) * dz_um / (2.0 * k0));
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn defaults_reproduce_quoted_walkoffs() {
        let short = CrystalSpec {
            length_cm: 1.0,
            ..CrystalSpec::default()
        };
        assert_abs_diff_eq!(short.pulse_center_walkoff_ps(), 1.2, epsilon = 1e-12);
        let long = CrystalSpec {
            length_cm: 2.5,
            ..CrystalSpec::default()
        };
        assert_abs_diff_eq!(long.pulse_center_walkoff_ps(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(long.transport_slope_ps_per_cm(), 2.4, epsilon = 1e-12);
    }

    #[test]
    fn kappa_calibration_one_percent_per_watt_cm2() {
        // converted fraction (κ√P L)² at P = 1 W, L = 1 cm equals 1%
        let kappa = kappa_for_normalized_efficiency(0.01);
        assert_abs_diff_eq!((kappa * 1.0f64.sqrt() * 1.0).powi(2), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(CrystalSpec::default().kappa, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn phase_matching_peak_and_null() {
        let c = CrystalSpec::default();
        // Δk = 0 → efficiency 1 at the center sample
        let wl: Vec<f64> = (0..2001).map(|i| 1557.0 + i as f64 * 0.002).collect();
        let curve = phase_matching_curve(&c, 1559.0, &wl).unwrap();
        let at_center = curve
            .wavelengths_nm
            .iter()
            .zip(curve.efficiencies.iter())
            .min_by(|a, b| {
                (a.0 - 1559.0)
                    .abs()
                    .partial_cmp(&(b.0 - 1559.0).abs())
                    .unwrap()
            })
            .unwrap();
        assert_abs_diff_eq!(*at_center.1, 1.0, epsilon = 1e-9);
        // first sinc null: Δk·L/2 = π
        let mut off = c.clone();
        off.delta_k_rad_per_cm = 2.0 * std::f64::consts::PI / c.length_cm;
        let single = phase_matching_curve(&off, 1559.0, &[1558.9999, 1559.0, 1559.0001]);
        // unnormalized sinc value at the exact center would be 0; the curve
        // is peak-normalized, so check the raw sinc directly
        assert!(single.is_ok());
        assert_abs_diff_eq!(
            sinc(off.delta_k_rad_per_cm * off.length_cm / 2.0).powi(2),
            0.0,
            epsilon = 1e-30
        );
    }

    #[test]
    fn pm_fwhm_scales_inversely_with_length() {
        let c1 = CrystalSpec {
            length_cm: 1.0,
            ..CrystalSpec::default()
        };
        let c25 = CrystalSpec {
            length_cm: 2.5,
            ..CrystalSpec::default()
        };
        let wl: Vec<f64> = (0..40001).map(|i| 1549.0 + i as f64 * 0.0005).collect();
        let f1 = phase_matching_curve(&c1, 1559.0, &wl).unwrap().fwhm_nm;
        let f25 = phase_matching_curve(&c25, 1559.0, &wl).unwrap().fwhm_nm;
        assert!((f25 / (f1 / 2.5) - 1.0).abs() < 0.01, "f1={f1} f25={f25}");
    }

    #[test]
    fn sf_multiplier_is_unit_modulus_and_dc_fixed() {
        let c = CrystalSpec::default();
        let g = TemporalGrid::default_comb_period();
        for dz in [0.01, 0.5, 2.5] {
            let m = temporal_step_multiplier(&c, FieldRole::Sf, dz, &g);
            assert_eq!(m[0], Complex64::new(1.0, 0.0), "DC component unmoved");
            for v in &m {
                assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
            }
        }
        let id = temporal_step_multiplier(&c, FieldRole::Pump, 1.0, &g);
        assert!(id.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn diffraction_flag_semantics() {
        let c = CrystalSpec::default();
        let g = SpatialGrid::square(32, 1050.0).unwrap();
        assert!(diffraction_multiplier(&c, 1551.0, 0.1, &g).is_none());
        let mut cd = c;
        cd.diffraction = true;
        let m = diffraction_multiplier(&cd, 1551.0, 0.1, &g).unwrap();
        for v in m.iter() {
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
        }
        assert_eq!(m[[0, 0]], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn validation_guards() {
        let zero_length = CrystalSpec {
            length_cm: 0.0,
            ..CrystalSpec::default()
        };
        assert!(zero_length.validate().is_err());
        let coarse_z = CrystalSpec {
            nz_steps: 8,
            ..CrystalSpec::default()
        };
        assert!(coarse_z.validate().is_err());
        let negative_walkoff = CrystalSpec {
            walkoff_ps_per_cm: -0.1,
            ..CrystalSpec::default()
        };
        assert!(negative_walkoff.validate().is_err());
    }

    #[test]
    fn crystal_serde_uses_documented_keys() {
        let c = CrystalSpec::default();
        let json = serde_json::to_string(&c).unwrap();
        for key in [
            "length_cm",
            "walkoff_ps_per_cm",
            "delta_k_rad_per_cm",
            "kappa",
            "nz_steps",
            "diffraction",
        ] {
            assert!(json.contains(key), "missing key {key} in {json}");
        }
        let back: CrystalSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
