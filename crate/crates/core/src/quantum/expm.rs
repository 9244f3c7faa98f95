//! Matrix exponential by scaling and squaring with a truncated Taylor series.
//!
//! Used as an independent propagator for small systems, so it favours
//! robustness over speed.

use super::matrix::{ComplexMatrix, C64};

const MAX_TERMS: usize = 60;

/// e^A for square `a`.
pub fn expm_oracle(a: &ComplexMatrix) -> ComplexMatrix {
    assert!(a.is_square(), "expm of a non-square matrix");
    let n = a.rows();
    let norm = a.norm_one();
    // Scale so that the series argument has 1-norm at most 1/2.
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale_real(0.5f64.powi(squarings as i32));

    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=MAX_TERMS {
        term = term.matmul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
        sum.add_scaled(C64::new(1.0, 0.0), &term);
        if term.max_abs() <= f64::EPSILON * 1e-3 * sum.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}
