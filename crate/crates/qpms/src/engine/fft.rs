//! Thin wrappers around `rustfft` with a thread-local plan cache.
//!
//! All transforms are unnormalized in the forward direction; the inverse
//! carries the `1/n` factor so that `ifft(fft(x)) == x`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward FFT of a contiguous buffer.
pub fn fft_inplace(buf: &mut [Complex64]) {
    PLANNER.with(|p| {
        let plan = p.borrow_mut().plan_fft_forward(buf.len());
        plan.process(buf);
    });
}

/// In-place inverse FFT of a contiguous buffer, scaled by `1/n`.
pub fn ifft_inplace(buf: &mut [Complex64]) {
    let n = buf.len();
    PLANNER.with(|p| {
        let plan = p.borrow_mut().plan_fft_inverse(n);
        plan.process(buf);
    });
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Forward FFT of each lane along the last axis of a 3-D array.
///
/// The array must be in standard (C-order) layout so each temporal lane is
/// contiguous.
pub fn fft_last_axis(arr: &mut ndarray::Array3<Complex64>) {
    for mut lane in arr.lanes_mut(ndarray::Axis(2)) {
        let buf = lane
            .as_slice_mut()
            .expect("temporal lanes must be contiguous");
        fft_inplace(buf);
    }
}

/// Inverse FFT of each lane along the last axis of a 3-D array.
pub fn ifft_last_axis(arr: &mut ndarray::Array3<Complex64>) {
    for mut lane in arr.lanes_mut(ndarray::Axis(2)) {
        let buf = lane
            .as_slice_mut()
            .expect("temporal lanes must be contiguous");
        ifft_inplace(buf);
    }
}

/// In-place 2-D forward FFT over the two leading axes of a 2-D array.
pub fn fft2_inplace(arr: &mut ndarray::Array2<Complex64>) {
    // Rows (contiguous), then columns (via scratch buffer).
    let (nx, ny) = arr.dim();
    for mut row in arr.rows_mut() {
        let buf = row.as_slice_mut().expect("rows must be contiguous");
        fft_inplace(buf);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); nx];
    for j in 0..ny {
        for i in 0..nx {
            col[i] = arr[[i, j]];
        }
        fft_inplace(&mut col);
        for i in 0..nx {
            arr[[i, j]] = col[i];
        }
    }
}

/// In-place 2-D inverse FFT over the two leading axes, scaled by `1/(nx*ny)`.
pub fn ifft2_inplace(arr: &mut ndarray::Array2<Complex64>) {
    let (nx, ny) = arr.dim();
    for mut row in arr.rows_mut() {
        let buf = row.as_slice_mut().expect("rows must be contiguous");
        ifft_inplace(buf);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); nx];
    for j in 0..ny {
        for i in 0..nx {
            col[i] = arr[[i, j]];
        }
        ifft_inplace(&mut col);
        for i in 0..nx {
            arr[[i, j]] = col[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn fft_round_trip_is_identity() {
        let mut buf: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new((i as f64 * 0.3).sin(), (i as f64 * 0.7).cos()))
            .collect();
        let orig = buf.clone();
        fft_inplace(&mut buf);
        ifft_inplace(&mut buf);
        for (a, b) in buf.iter().zip(orig.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn fft2_round_trip_is_identity() {
        let mut arr = Array2::from_shape_fn((16, 8), |(i, j)| {
            Complex64::new((i as f64 + 0.1 * j as f64).sin(), (j as f64).cos())
        });
        let orig = arr.clone();
        fft2_inplace(&mut arr);
        ifft2_inplace(&mut arr);
        for (a, b) in arr.iter().zip(orig.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn fft_of_impulse_is_flat() {
        let mut buf = vec![Complex64::new(0.0, 0.0); 32];
        buf[0] = Complex64::new(1.0, 0.0);
        fft_inplace(&mut buf);
        for v in &buf {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }
}
