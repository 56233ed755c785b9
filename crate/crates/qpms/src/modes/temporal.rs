//! Hermite-Gaussian temporal modes.
//!
//! Order-m envelopes share one time scale τ:
//!
//! ```text
//! T_m(t) ∝ H_m(t/τ) · exp(−t²/(2τ²))
//! ```
//!
//! with H_m the physicists' Hermite polynomials, so the family is orthogonal
//! on the time axis. The "pulse width" parameter everywhere in this crate is
//! the **intensity FWHM of the fundamental (m = 0) mode** — the common lab
//! convention — related to τ by FWHM = 2√(ln 2)·τ.

use ndarray::Array1;
use num_complex::Complex64;

use crate::error::Result;
use crate::grid::TemporalGrid;

/// Convert an m = 0 intensity FWHM (ps) into the shared Hermite-Gaussian
/// time scale τ (ps).
pub fn hg_width_to_tau(width_fwhm_ps: f64) -> f64 {
    width_fwhm_ps / (2.0 * (2.0f64.ln()).sqrt())
}

/// Physicists' Hermite polynomial H_m(x) by the standard recurrence.
pub fn hermite(m: usize, x: f64) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0 * x,
        _ => {
            let mut h0 = 1.0;
            let mut h1 = 2.0 * x;
            for k in 1..m {
                let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    }
}

/// Build the normalized order-`m` envelope, optionally delayed by `delay_ps`.
///
/// The delay is applied analytically (the envelope is evaluated at
/// t − delay), so it is exact for any delay, not just grid multiples.
pub fn hg_temporal_mode_delayed(
    m: usize,
    width_fwhm_ps: f64,
    delay_ps: f64,
    grid: &TemporalGrid,
) -> Result<Array1<Complex64>> {
    grid.check_pulse_width(width_fwhm_ps)?;
    let tau = hg_width_to_tau(width_fwhm_ps);
    let ts = grid.ts();
    let mut env = Array1::<Complex64>::zeros(grid.nt);
    for (i, &t) in ts.iter().enumerate() {
        let u = (t - delay_ps) / tau;
        env[i] = Complex64::new(hermite(m, u) * (-0.5 * u * u).exp(), 0.0);
    }
    normalize(&mut env, grid.dt());
    Ok(env)
}

/// Build the normalized order-`m` Hermite-Gaussian envelope centered at t = 0.
pub fn hg_temporal_mode(
    m: usize,
    width_fwhm_ps: f64,
    grid: &TemporalGrid,
) -> Result<Array1<Complex64>> {
    hg_temporal_mode_delayed(m, width_fwhm_ps, 0.0, grid)
}

/// Normalize an envelope to unit L2 norm under the grid measure
/// (Σ|e|²·dt = 1). No-op for an all-zero input.
pub fn normalize(env: &mut Array1<Complex64>, dt: f64) {
    let norm2: f64 = env.iter().map(|a| a.norm_sqr()).sum::<f64>() * dt;
    if norm2 > 0.0 {
        let s = 1.0 / norm2.sqrt();
        env.mapv_inplace(|a| a * s);
    }
}

/// Inner product ⟨a|b⟩ = Σ conj(a)·b · dt.
pub fn temporal_overlap(a: &Array1<Complex64>, b: &Array1<Complex64>, dt: f64) -> Complex64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        * dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid() -> TemporalGrid {
        TemporalGrid::default_comb_period()
    }

    #[test]
    fn fundamental_is_even_gaussian_peaked_at_zero() {
        let g = grid();
        let e = hg_temporal_mode(0, 2.0, &g).unwrap();
        let i0 = g.nt / 2;
        let peak = e.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert_abs_diff_eq!(e[i0].norm(), peak, epsilon = 1e-12);
        // intensity FWHM check: |e(±W/2)|² = |e(0)|²/2
        let ts = g.ts();
        let half = e
            .iter()
            .zip(ts.iter())
            .min_by(|(_, &t1), (_, &t2)| {
                (t1 - 1.0).abs().partial_cmp(&(t2 - 1.0).abs()).unwrap()
            })
            .unwrap()
            .0;
        assert_abs_diff_eq!(half.norm_sqr() / e[i0].norm_sqr(), 0.5, epsilon = 0.02);
    }

    #[test]
    fn parity_is_exact_at_grid_level() {
        let g = grid();
        for m in 0..3 {
            let e = hg_temporal_mode(m, 2.0, &g).unwrap();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            // t_i = (i - nt/2) dt maps to -t at index nt - i (for i > 0)
            for i in 1..g.nt {
                let mirrored = e[g.nt - i];
                assert_eq!(e[i].re, sign * mirrored.re, "m={m} i={i}");
            }
        }
    }

    #[test]
    fn odd_mode_zero_at_origin() {
        let g = grid();
        let e = hg_temporal_mode(1, 2.0, &g).unwrap();
        assert_eq!(e[g.nt / 2], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn orthonormal_family() {
        let g = grid();
        let dt = g.dt();
        let modes: Vec<_> = (0..3).map(|m| hg_temporal_mode(m, 2.0, &g).unwrap()).collect();
        for (i, a) in modes.iter().enumerate() {
            for (j, b) in modes.iter().enumerate() {
                let ov = temporal_overlap(a, b, dt).norm();
                if i == j {
                    assert_abs_diff_eq!(ov, 1.0, epsilon = 1e-9);
                } else {
                    assert!(ov < 1e-8, "⟨T{i}|T{j}⟩ = {ov:.2e}");
                }
            }
        }
    }

    #[test]
    fn delayed_gaussian_matches_closed_form_overlap() {
        let g = grid();
        let dt = g.dt();
        let a = hg_temporal_mode(0, 2.0, &g).unwrap();
        let b = hg_temporal_mode_delayed(0, 2.0, 5.0, &g).unwrap();
        // ⟨T0(t)|T0(t−d)⟩ = exp(−d²/(4τ²)) for amplitude 1/e half-width τ
        let tau = hg_width_to_tau(2.0);
        let expected = (-(5.0f64).powi(2) / (4.0 * tau * tau)).exp();
        assert_abs_diff_eq!(temporal_overlap(&a, &b, dt).norm(), expected, epsilon = 1e-6);
    }

    #[test]
    fn window_guard_is_enforced() {
        let g = grid();
        assert!(hg_temporal_mode(0, 7.0, &g).is_err());
        let wide = TemporalGrid::new(1024, 64.0).unwrap();
        assert!(hg_temporal_mode(0, 7.0, &wide).is_ok());
    }

    #[test]
    fn hermite_recurrence_matches_small_orders() {
        for &x in &[-1.7, 0.0, 0.3, 2.2] {
            assert_abs_diff_eq!(hermite(2, x), 4.0 * x * x - 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(hermite(3, x), 8.0 * x.powi(3) - 12.0 * x, epsilon = 1e-12);
        }
    }
}
