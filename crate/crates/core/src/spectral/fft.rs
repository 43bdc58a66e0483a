//! Cached rustfft plans and separable N-dimensional transforms.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type PlanCache = (FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>);

thread_local! {
    static PLANS: RefCell<PlanCache> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((len, forward))
            .or_insert_with(|| {
                let dir = if forward {
                    FftDirection::Forward
                } else {
                    FftDirection::Inverse
                };
                planner.plan_fft(len, dir)
            })
            .clone()
    })
}

/// Unnormalized in-place transform of a row-major `len^dim` array.
pub(crate) fn fft_nd(data: &mut [Complex64], len: usize, dim: usize, forward: bool) {
    debug_assert_eq!(data.len(), len.pow(dim as u32));
    let fft = plan(len, forward);
    match dim {
        1 => fft.process(data),
        2 => {
            for row in data.chunks_exact_mut(len) {
                fft.process(row);
            }
            let mut column = vec![Complex64::new(0.0, 0.0); len];
            for c in 0..len {
                for r in 0..len {
                    column[r] = data[r * len + c];
                }
                fft.process(&mut column);
                for r in 0..len {
                    data[r * len + c] = column[r];
                }
            }
        }
        _ => unreachable!("grids are at most two-dimensional"),
    }
}
