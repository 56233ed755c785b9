//! Discretization grids for the transverse plane and the time axis.
//!
//! Both grids use the FFT-friendly integer-centered convention: sample `i`
//! sits at `(i - n/2) * step`, so the origin is exactly on the grid and the
//! conjugate (frequency) axis follows the standard FFT ordering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform Cartesian grid over the transverse (x, y) plane, in µm.
///
/// `extent_x` / `extent_y` are half-widths: x spans `[-extent_x, extent_x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialGrid {
    pub nx: usize,
    pub ny: usize,
    pub extent_x_um: f64,
    pub extent_y_um: f64,
}

impl SpatialGrid {
    pub fn new(nx: usize, ny: usize, extent_x_um: f64, extent_y_um: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::config(format!(
                    "spatial grid {name} = {n}; must be even and >= 8"
                )));
            }
        }
        if extent_x_um <= 0.0 || extent_y_um <= 0.0 {
            return Err(Error::config("spatial extents must be positive"));
        }
        Ok(Self {
            nx,
            ny,
            extent_x_um,
            extent_y_um,
        })
    }

    /// Square grid helper.
    pub fn square(n: usize, extent_um: f64) -> Result<Self> {
        Self::new(n, n, extent_um, extent_um)
    }

    /// Default grid: 128×128 over ±3.5× the default 300 µm waist.
    ///
    /// The 3.5× margin keeps the quadrature error of every Laguerre-Gaussian
    /// cross-overlap below 2e-9 (the worst entry, the |Δl| = 4 pair, is
    /// 6e-7 at 3× — measurably close to the basis-integrity budget).
    pub fn default_for_waist(waist_um: f64) -> Self {
        Self::square(128, 3.5 * waist_um).expect("default spatial grid is valid")
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.extent_x_um / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.extent_y_um / self.ny as f64
    }

    /// Area element dx·dy in µm².
    pub fn area_element(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// x coordinate of column `i`: `(i - nx/2) * dx`.
    pub fn xs(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.nx)
            .map(|i| (i as f64 - self.nx as f64 / 2.0) * dx)
            .collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        let dy = self.dy();
        (0..self.ny)
            .map(|j| (j as f64 - self.ny as f64 / 2.0) * dy)
            .collect()
    }

    /// Angular spatial frequencies kx = 2π·fx (rad/µm) in FFT order.
    pub fn kxs(&self) -> Vec<f64> {
        fft_freqs(self.nx, self.dx())
            .into_iter()
            .map(|f| 2.0 * std::f64::consts::PI * f)
            .collect()
    }

    pub fn kys(&self) -> Vec<f64> {
        fft_freqs(self.ny, self.dy())
            .into_iter()
            .map(|f| 2.0 * std::f64::consts::PI * f)
            .collect()
    }

    /// Guard: beams must fit with room for their tails.
    ///
    /// Modes constructed on this grid require `extent >= 3 × waist`; the
    /// error names the offending values.
    pub fn check_waist(&self, waist_um: f64) -> Result<()> {
        if waist_um <= 0.0 {
            return Err(Error::config("waist must be positive"));
        }
        let min_extent = self.extent_x_um.min(self.extent_y_um);
        if min_extent < 3.0 * waist_um {
            return Err(Error::config(format!(
                "waist {waist_um} µm needs extent >= {} µm, grid has {min_extent} µm",
                3.0 * waist_um
            )));
        }
        Ok(())
    }
}

/// Uniform time grid, in ps. `window` is the total span; t spans
/// `[-window/2, window/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalGrid {
    pub nt: usize,
    pub window_ps: f64,
}

impl TemporalGrid {
    pub fn new(nt: usize, window_ps: f64) -> Result<Self> {
        if nt < 64 || !nt.is_power_of_two() {
            return Err(Error::config(format!(
                "temporal grid nt = {nt}; must be a power of two >= 64"
            )));
        }
        if window_ps <= 0.0 {
            return Err(Error::config("temporal window must be positive"));
        }
        Ok(Self { nt, window_ps })
    }

    /// Default grid: 512 samples over one 25 GHz comb period (40 ps).
    pub fn default_comb_period() -> Self {
        Self::new(512, 40.0).expect("default temporal grid is valid")
    }

    pub fn dt(&self) -> f64 {
        self.window_ps / self.nt as f64
    }

    /// t coordinate of sample `i`: `(i - nt/2) * dt`.
    pub fn ts(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.nt)
            .map(|i| (i as f64 - self.nt as f64 / 2.0) * dt)
            .collect()
    }

    /// Conjugate frequencies in THz, FFT order (0, +, …, −).
    pub fn freqs_thz(&self) -> Vec<f64> {
        fft_freqs(self.nt, self.dt())
    }

    /// Guard: the window must hold the pulse with clean tails
    /// (window ≥ 8 × intensity-FWHM).
    pub fn check_pulse_width(&self, width_fwhm_ps: f64) -> Result<()> {
        if width_fwhm_ps <= 0.0 {
            return Err(Error::config("pulse width must be positive"));
        }
        if self.window_ps < 8.0 * width_fwhm_ps {
            return Err(Error::config(format!(
                "pulse width {width_fwhm_ps} ps needs window >= {} ps, grid has {} ps",
                8.0 * width_fwhm_ps,
                self.window_ps
            )));
        }
        Ok(())
    }

    /// Guard: comb-sourced envelopes repeat with the comb period; a window
    /// longer than one period would alias the pulse train.
    pub fn check_comb_period(&self, period_ps: f64) -> Result<()> {
        if self.window_ps > period_ps + 1e-9 {
            return Err(Error::config(format!(
                "window {} ps exceeds the comb period {period_ps} ps (pulse-train aliasing)",
                self.window_ps
            )));
        }
        Ok(())
    }
}

/// Frequencies conjugate to an `n`-point axis with spacing `step`, FFT order.
fn fft_freqs(n: usize, step: f64) -> Vec<f64> {
    let df = 1.0 / (n as f64 * step);
    (0..n)
        .map(|k| {
            if k < n / 2 {
                k as f64 * df
            } else {
                (k as f64 - n as f64) * df
            }
        })
        .collect()
}
