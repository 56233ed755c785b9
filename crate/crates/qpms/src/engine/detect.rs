//! Detection chain: projection of the sum-frequency field onto the
//! fundamental mode of a single-mode collection fiber, followed by
//! conversion of the coupled energy into photon counts (deterministic or
//! Poisson-sampled).

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::modes::SpatioTemporalField;

/// Single-mode-fiber collection model.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    /// 1/e^2 intensity radius of the fiber's fundamental Gaussian mode, um.
    pub fiber_waist_um: f64,
    /// Photon counts registered per unit coupled energy.
    pub scale: f64,
    /// When set, counts are Poisson-sampled with this base seed; when
    /// absent, counts are the deterministic mean.
    #[serde(default)]
    pub poisson_seed: Option<u64>,
}

impl Default for DetectorModel {
    fn default() -> Self {
        // Matched to the product of two fundamental beams of 300 um waist:
        // the product Gaussian has waist 300/sqrt(2) um, and that choice
        // makes the coupled fraction of an l=0 sum-frequency profile exactly
        // one (1/2 for |l|=1 products, 1/6 for |l|=2).
        DetectorModel {
            fiber_waist_um: 300.0 / std::f64::consts::SQRT_2,
            scale: 1.0e4,
            poisson_seed: None,
        }
    }
}

impl DetectorModel {
    /// Detector matched to beams of the given waist (fiber waist
    /// `waist/sqrt(2)`).
    pub fn matched_to_waist(waist_um: f64) -> Self {
        DetectorModel {
            fiber_waist_um: waist_um / std::f64::consts::SQRT_2,
            ..DetectorModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fiber_waist_um.is_finite() || self.fiber_waist_um <= 0.0 {
            return Err(Error::config(format!(
                "fiber_waist_um must be positive, got {}",
                self.fiber_waist_um
            )));
        }
        if !self.scale.is_finite() || self.scale <= 0.0 {
            return Err(Error::config(format!(
                "detector scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

/// Unit-normalized fundamental fiber mode on the grid.
pub fn fiber_mode(detector: &DetectorModel, grid: &SpatialGrid) -> Result<Array2<Complex64>> {
    detector.validate()?;
    let w = detector.fiber_waist_um;
    let xs = grid.xs();
    let ys = grid.ys();
    let mut mode = Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| {
        let r2 = xs[i] * xs[i] + ys[j] * ys[j];
        Complex64::new((-r2 / (w * w)).exp(), 0.0)
    });
    let norm = (mode.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.area_element()).sqrt();
    if norm == 0.0 {
        return Err(Error::config("fiber mode vanishes on the grid"));
    }
    mode.mapv_inplace(|v| v / norm);
    Ok(mode)
}

/// Project a field onto the fiber mode.
///
/// Returns the coupled temporal envelope `psi(t) = <fiber | A(.,.,t)>` and
/// the coupled energy `sum |psi|^2 dt`.
pub fn smf_couple(
    field: &SpatioTemporalField,
    detector: &DetectorModel,
) -> Result<(Array1<Complex64>, f64)> {
    let grid = &field.spatial_grid;
    let fiber = fiber_mode(detector, grid)?;
    let da = grid.area_element();
    let dt = field.temporal_grid.dt();

    let psi: Array1<Complex64> = match &field.data {
        crate::modes::FieldData::Separable { spatial, temporal } => {
            let c: Complex64 = fiber
                .iter()
                .zip(spatial.iter())
                .map(|(f, s)| f.conj() * s)
                .sum::<Complex64>()
                * da;
            temporal.mapv(|v| c * v)
        }
        crate::modes::FieldData::Full(arr) => {
            let nt = arr.len_of(Axis(2));
            let mut psi = Array1::zeros(nt);
            for k in 0..nt {
                let slice = arr.index_axis(Axis(2), k);
                let c: Complex64 = fiber
                    .iter()
                    .zip(slice.iter())
                    .map(|(f, s)| f.conj() * s)
                    .sum::<Complex64>()
                    * da;
                psi[k] = c;
            }
            psi
        }
    };
    let energy = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * dt;
    Ok((psi, energy))
}

/// Derive a per-cell RNG seed from a base seed and a cell tag, by hashing.
/// Distinct (seed, tag) pairs give statistically independent streams, and
/// the result does not depend on evaluation order, so parallel tomography
/// scans are reproducible.
pub fn cell_seed(base_seed: u64, tag: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base_seed.to_le_bytes());
    for t in tag {
        hasher.update(t.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Convert coupled energy into photon counts.
///
/// Deterministic mode returns `scale * energy` directly.  With a Poisson
/// seed set, the counts are sampled from a Poisson distribution with that
/// mean, using a stream derived from the base seed and the cell tag.
pub fn detect_counts(coupled_energy: f64, detector: &DetectorModel, tag: &[u64]) -> Result<f64> {
    detector.validate()?;
    if !coupled_energy.is_finite() || coupled_energy < 0.0 {
        return Err(Error::config(format!(
            "coupled energy must be finite and non-negative, got {coupled_energy}"
        )));
    }
    let mean = detector.scale * coupled_energy;
    match detector.poisson_seed {
        None => Ok(mean),
        Some(base) => {
            if mean <= 0.0 {
                return Ok(0.0);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(base, tag));
            let dist = Poisson::new(mean)
                .map_err(|e| Error::config(format!("invalid Poisson mean {mean}: {e}")))?;
            Ok(dist.sample(&mut rng))
        }
    }
}
