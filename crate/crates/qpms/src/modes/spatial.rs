//! Laguerre-Gaussian spatial modes with zero radial index.
//!
//! The sorter's spatial catalog is the five orbital-angular-momentum states
//! l ∈ {−2, …, 2} at a fixed waist, with amplitude
//!
//! ```text
//! LG_l(r, φ) ∝ (r√2 / w)^|l| · exp(−r²/w²) · exp(i l φ)
//! ```
//!
//! Higher radial indices are deliberately unsupported: the sorting physics
//! under study only involves p = 0 rings.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::Result;
use crate::grid::SpatialGrid;

/// Build the normalized LG_l (p = 0) profile on `grid`.
///
/// The profile has unit L2 norm under the grid measure
/// (Σ|a|²·dx·dy = 1 within 1e-9) and its phase winds by 2πl around the
/// origin. Fails if the waist violates the grid's extent guard.
pub fn lg_mode(l: i32, waist_um: f64, grid: &SpatialGrid) -> Result<Array2<Complex64>> {
    grid.check_waist(waist_um)?;
    let xs = grid.xs();
    let ys = grid.ys();
    let w = waist_um;
    let mut out = Array2::<Complex64>::zeros((grid.nx, grid.ny));
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let r2 = x * x + y * y;
            let radial = (r2 * 2.0 / (w * w)).powf(l.unsigned_abs() as f64 / 2.0)
                * (-r2 / (w * w)).exp();
            let phi = y.atan2(x);
            out[[i, j]] = Complex64::from_polar(radial, l as f64 * phi);
        }
    }
    let norm2: f64 = out.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.area_element();
    let scale = 1.0 / norm2.sqrt();
    out.mapv_inplace(|a| a * scale);
    Ok(out)
}

/// Accumulated phase around a square pixel loop centered on the origin.
///
/// Sums wrapped nearest-sample phase differences along a closed
/// counter-clockwise loop of half-size `radius_px`; an OAM-l beam returns
/// 2πl. Loop values are read at pixel centers, so `radius_px` should stay
/// well inside the grid.
pub fn phase_circulation(profile: &Array2<Complex64>, grid: &SpatialGrid, radius_px: usize) -> f64 {
    let ci = grid.nx / 2;
    let cj = grid.ny / 2;
    let r = radius_px as isize;
    let mut loop_px: Vec<(isize, isize)> = Vec::new();
    // counter-clockwise square: right edge up, top edge left, left edge down, bottom edge right
    for j in -r..r {
        loop_px.push((r, j));
    }
    for i in (-r + 1..=r).rev() {
        loop_px.push((i, r));
    }
    for j in (-r + 1..=r).rev() {
        loop_px.push((-r, j));
    }
    for i in -r + 1..=r {
        loop_px.push((i, -r));
    }
    let phase_at = |(di, dj): (isize, isize)| -> f64 {
        let i = (ci as isize + di) as usize;
        let j = (cj as isize + dj) as usize;
        profile[[i, j]].arg()
    };
    let mut total = 0.0;
    for k in 0..loop_px.len() {
        let a = phase_at(loop_px[k]);
        let b = phase_at(loop_px[(k + 1) % loop_px.len()]);
        let mut d = b - a;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        total += d;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid() -> SpatialGrid {
        SpatialGrid::default_for_waist(300.0)
    }

    fn overlap(a: &Array2<Complex64>, b: &Array2<Complex64>, g: &SpatialGrid) -> Complex64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
            * g.area_element()
    }

    #[test]
    fn l0_is_real_gaussian_peaked_at_center() {
        let g = grid();
        let m = lg_mode(0, 300.0, &g).unwrap();
        let center = m[[g.nx / 2, g.ny / 2]];
        assert!(center.re > 0.0);
        assert_abs_diff_eq!(center.im, 0.0, epsilon = 1e-15);
        for v in m.iter() {
            assert!(v.norm() <= center.norm() + 1e-12);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn l1_vanishes_at_center_and_winds_once() {
        let g = grid();
        let m = lg_mode(1, 300.0, &g).unwrap();
        let peak = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(m[[g.nx / 2, g.ny / 2]].norm() < 1e-6 * peak);
        let circ = phase_circulation(&m, &g, 24);
        assert_abs_diff_eq!(circ, 2.0 * std::f64::consts::PI, epsilon = 1e-3);
    }

    #[test]
    fn winding_matches_l_for_catalog() {
        let g = grid();
        for l in [-2i32, -1, 1, 2] {
            let m = lg_mode(l, 300.0, &g).unwrap();
            let circ = phase_circulation(&m, &g, 24);
            assert_abs_diff_eq!(circ, 2.0 * std::f64::consts::PI * l as f64, epsilon = 1e-3);
        }
    }

    #[test]
    fn unit_norm_and_cross_orthogonality() {
        let g = grid();
        let modes: Vec<_> = (-2..=2).map(|l| lg_mode(l, 300.0, &g).unwrap()).collect();
        for (i, a) in modes.iter().enumerate() {
            for (j, b) in modes.iter().enumerate() {
                let ov = overlap(a, b, &g);
                if i == j {
                    assert_abs_diff_eq!(ov.norm(), 1.0, epsilon = 1e-9);
                } else {
                    // worst catalog pair (|Δl| = 4) measures ~1.5e-9 at the
                    // default 3.5-waist extent
                    assert!(ov.norm() < 1e-8, "⟨LG_{}|LG_{}⟩ = {:.2e}", i, j, ov.norm());
                }
            }
        }
    }

    #[test]
    fn waist_guard_violation_is_a_config_error() {
        let g = SpatialGrid::square(128, 600.0).unwrap();
        let err = lg_mode(0, 300.0, &g).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("300"), "error should name the waist: {msg}");
    }
}
