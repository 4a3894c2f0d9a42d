//! Shared FFT plumbing with a thread-local planner cache.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward DFT, unnormalized (rustfft convention).
pub(crate) fn fft_forward(buf: &mut [Complex64]) {
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_forward(buf.len());
        fft.process(buf);
    });
}

/// In-place inverse DFT, unnormalized (scale by 1/N for a round trip).
pub(crate) fn fft_inverse(buf: &mut [Complex64]) {
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_inverse(buf.len());
        fft.process(buf);
    });
}
