//! Reduced one-dimensional march for separable fields.
//!
//! When pump and signal are both separable and diffraction is disabled, the
//! sum-frequency field stays exactly separable: its transverse profile is
//! the pointwise pump*signal product for the whole run, and only the
//! temporal envelope evolves.  This path reproduces the full
//! three-dimensional march bit-for-bit up to rounding while touching `nt`
//! samples per step instead of `nx*ny*nt`.

use ndarray::Array1;
use num_complex::Complex64;

use super::fft;
use super::propagate::nonlinear_step_factor;
use crate::grid::TemporalGrid;
use crate::medium::CrystalSpec;

/// March the sum-frequency temporal envelope through the crystal at a fixed
/// step count.  `source` is the pointwise product of the pump and signal
/// temporal envelopes; the returned energies are temporal-only
/// (`sum |u|^2 dt`), to be scaled by the transverse overlap factor.
pub(crate) fn run_temporal(
    source: &Array1<Complex64>,
    tgrid: &TemporalGrid,
    crystal: &CrystalSpec,
    n: usize,
) -> (Array1<Complex64>, Vec<f64>) {
    let dz = crystal.length_cm / n as f64;
    let half = walkoff_multiplier(crystal, 0.5 * dz, tgrid);
    let full = walkoff_multiplier(crystal, dz, tgrid);
    let dt = tgrid.dt();
    let kappa = Complex64::new(0.0, crystal.kappa);

    let mut u = vec![Complex64::new(0.0, 0.0); source.len()];
    let src: Vec<Complex64> = source.iter().copied().collect();
    let mut energies = Vec::with_capacity(n);

    apply_multiplier(&mut u, &half);
    for k in 0..n {
        let fac = kappa * nonlinear_step_factor(crystal, k, dz);
        for (v, s) in u.iter_mut().zip(&src) {
            *v += fac * s;
        }
        energies.push(u.iter().map(|v| v.norm_sqr()).sum::<f64>() * dt);
        if k + 1 < n {
            apply_multiplier(&mut u, &full);
        } else {
            apply_multiplier(&mut u, &half);
        }
    }
    (Array1::from(u), energies)
}

/// [`run_temporal`] at the same adaptive refinement as the separable path of
/// the propagation engine, so callers that only need temporal energies (the
/// optimizer's objective) agree with full tomography cells to rounding.
/// Returns the final envelope and per-step energies of the converged march.
pub(crate) fn run_temporal_adaptive(
    source: &Array1<Complex64>,
    tgrid: &TemporalGrid,
    crystal: &CrystalSpec,
) -> (Array1<Complex64>, Vec<f64>) {
    let (u, energies, _, _, _) = super::propagate::adapt_runs(
        |n| run_temporal(source, tgrid, crystal, n),
        |a: &Array1<Complex64>, b: &Array1<Complex64>| {
            super::propagate::rel_l2(a.iter(), b.iter())
        },
        crystal.nz_steps,
        None,
    );
    (u, energies)
}

/// Frequency-domain walk-off multiplier for one substep,
/// `exp(-i 2 pi f * slope * dz)` over FFT-ordered frequencies.
pub(crate) fn walkoff_multiplier(
    crystal: &CrystalSpec,
    dz_cm: f64,
    tgrid: &TemporalGrid,
) -> Vec<Complex64> {
    let slope = crystal.transport_slope_ps_per_cm();
    tgrid
        .freqs_thz()
        .iter()
        .map(|f| Complex64::new(0.0, -2.0 * std::f64::consts::PI * f * slope * dz_cm).exp())
        .collect()
}

fn apply_multiplier(u: &mut [Complex64], mult: &[Complex64]) {
    fft::fft_inplace(u);
    for (v, m) in u.iter_mut().zip(mult) {
        *v *= m;
    }
    fft::ifft_inplace(u);
}
