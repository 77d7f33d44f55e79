//! Hand-derived covariance oracles shared by the integration tests.
//!
//! The matrices below were computed on paper from the structural equations
//! of the corresponding reference models (all static, so the process is an
//! i.i.d. sequence and the lag-zero covariance carries all structure) and
//! are frozen here as independent ground truth.

#![allow(dead_code)]

use nalgebra::DMatrix;

/// Lag-zero covariance shared by the cancelling triangle (a=1, b=1,
/// shortcut −1) and the equivalent collider (a=1, b=1):
/// y1 = e1;  y2 = y1 + e2;  y3 = y2 − y1 + e3 = e2 + e3.
pub fn masked_triangle_cov0() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0])
}

/// The same construction at (a, b) = (2, 3), shortcut −6:
/// y1 = e1;  y2 = 2y1 + e2;  y3 = 3y2 − 6y1 + e3 = 3e2 + e3.
pub fn masked_triangle_cov0_heavy() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, 5.0, 3.0, 0.0, 3.0, 10.0])
}

/// Lag-zero covariance of the co-parent square (a = b = 1):
/// y1 = e1;  y2 = e2;  y3 = −y1 + y2 + e3;  y4 = y1 + y2 + e4.
pub fn square_cov0() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, -1.0, 1.0, //
            0.0, 1.0, 1.0, 1.0, //
            -1.0, 1.0, 3.0, 0.0, //
            1.0, 1.0, 0.0, 3.0,
        ],
    )
}

/// Lag-zero covariance of the unit diamond:
/// y4 = e4;  y1 = e1 + y4;  y2 = e2 + y1;  y3 = e3 + y2 + y4,
/// so in innovation terms y3 = e3 + e2 + e1 + 2e4.
pub fn diamond_cov0() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            2.0, 2.0, 3.0, 1.0, //
            2.0, 3.0, 4.0, 1.0, //
            3.0, 4.0, 7.0, 2.0, //
            1.0, 1.0, 2.0, 1.0,
        ],
    )
}

/// Partial covariance cov(yᵢ, yⱼ | y_C) by the Schur complement
/// Σᵢⱼ − Σᵢ_C Σ_CC⁻¹ Σ_Cⱼ — the textbook conditional-covariance formula,
/// evaluated directly on a given lag-zero covariance matrix.
pub fn partial_covariance(cov: &DMatrix<f64>, i: usize, j: usize, cond: &[usize]) -> f64 {
    if cond.is_empty() {
        return cov[(i, j)];
    }
    let c = cond.len();
    let sigma_cc = DMatrix::from_fn(c, c, |r, s| cov[(cond[r], cond[s])]);
    let sigma_ic = DMatrix::from_fn(1, c, |_, s| cov[(i, cond[s])]);
    let sigma_cj = DMatrix::from_fn(c, 1, |r, _| cov[(cond[r], j)]);
    let inv = sigma_cc
        .try_inverse()
        .expect("conditioning block is invertible");
    cov[(i, j)] - (sigma_ic * inv * sigma_cj)[(0, 0)]
}

#[test]
fn schur_partial_covariance_sanity() {
    // Independent pair given nothing stays independent.
    let cov = masked_triangle_cov0();
    assert_eq!(partial_covariance(&cov, 0, 2, &[]), 0.0);
    // Conditioning the masked triangle on y2 couples y1 and y3:
    // 0 − 1·(1/2)·1 = −1/2.
    assert_eq!(partial_covariance(&cov, 0, 2, &[1]), -0.5);
    // The square's co-parents decouple given both children:
    // 0 − [−1 1]·(1/3 I)·[1 1]ᵀ = 0.
    let sq = square_cov0();
    assert_eq!(partial_covariance(&sq, 0, 1, &[2, 3]), 0.0);
}
