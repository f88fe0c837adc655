//! Two-dimensional complex FFT on square grids, built on 1D plans.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Planned forward/inverse 2D FFT of a fixed square size.
///
/// Plans are immutable and the transform methods take `&self`, so one
/// instance can be shared across threads.
pub struct Fft2 {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    /// In-place unnormalized forward transform.
    pub fn forward(&self, data: &mut Array2<Complex64>) {
        self.transform(data, &self.forward);
    }

    /// In-place inverse transform, normalized by `1/size^2`.
    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / (self.size * self.size) as f64;
        data.mapv_inplace(|v| v * scale);
    }

    fn transform(&self, data: &mut Array2<Complex64>, plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.dim(), (self.size, self.size), "grid size mismatch");
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        for mut row in data.rows_mut() {
            let slice = row.as_slice_mut().expect("rows of a standard-layout array");
            plan.process_with_scratch(slice, &mut scratch);
        }
        let mut transposed = data.t().as_standard_layout().into_owned();
        for mut row in transposed.rows_mut() {
            let slice = row.as_slice_mut().expect("rows of a standard-layout array");
            plan.process_with_scratch(slice, &mut scratch);
        }
        data.assign(&transposed.t());
    }
}
