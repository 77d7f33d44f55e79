//! Power spectral densities on a frequency grid and the covariance
//! sequences extracted from them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::lti::{ComplexMatrixField, CovarianceSequence, FrequencyGrid};

/// Relative tolerance for the Hermitian and mirror-symmetry checks.
const SYMMETRY_REL: f64 = 1e-10;

/// Eigenvalue floor, relative to the trace, below which a matrix stops
/// counting as positive semidefinite.
const PSD_EIG_REL: f64 = -1e-9;

/// Relative ceiling on the imaginary residue left after transforming a
/// spectrum into covariances.
const IMAG_RESIDUE_REL: f64 = 1e-8;

/// Matrix power spectral density sampled on a grid.
///
/// Construction verifies that every matrix is Hermitian and positive
/// semidefinite within tolerance and that the grid is conjugate symmetric,
/// then snaps both symmetries to hold exactly so downstream transforms
/// produce real covariances by construction.
#[derive(Debug, Clone)]
pub struct SpectralDensity {
    field: ComplexMatrixField,
}

impl SpectralDensity {
    /// Builds from a full-grid field, validating and canonicalizing it.
    pub fn new(field: ComplexMatrixField) -> Result<Self> {
        let grid = field.grid();
        let half: Vec<DMatrix<Complex64>> = (0..=grid.half())
            .map(|k| field.at(k).clone())
            .collect();
        // The reflected half must match the stored one before we snap to it.
        for k in grid.half() + 1..grid.size() {
            let mirrored = conj(field.at(grid.size() - k));
            let scale = field.at(k).norm().max(1.0);
            if (field.at(k) - &mirrored).norm() > SYMMETRY_REL * scale {
                return Err(Error::InvalidInput(format!(
                    "spectral density is not conjugate symmetric at frequency index {k}"
                )));
            }
        }
        Self::from_half(grid, half)
    }

    /// Builds from the lower half grid `k = 0..=N/2`; the upper half is the
    /// entrywise conjugate mirror.
    pub fn from_half(grid: FrequencyGrid, half: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if half.len() != grid.half() + 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} half-grid matrices, got {}",
                grid.half() + 1,
                half.len()
            )));
        }
        let mut canon = Vec::with_capacity(half.len());
        for (k, m) in half.into_iter().enumerate() {
            let scale = m.norm().max(1.0);
            if (&m - m.adjoint()).norm() > SYMMETRY_REL * scale {
                return Err(Error::InvalidInput(format!(
                    "spectral density is not Hermitian at frequency index {k}"
                )));
            }
            let mut h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
            // Conjugate symmetry pins the end points of the half grid to be real.
            if k == 0 || k == grid.half() {
                if h.iter().map(|z| z.im.abs()).fold(0.0, f64::max) > SYMMETRY_REL * scale {
                    return Err(Error::InvalidInput(format!(
                        "spectral density must be real at frequency index {k}"
                    )));
                }
                h = h.map(|z| Complex64::new(z.re, 0.0));
            }
            let trace = h.trace().re.max(1e-300);
            let min_eig = h
                .symmetric_eigenvalues()
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b));
            if min_eig < PSD_EIG_REL * trace {
                return Err(Error::InvalidInput(format!(
                    "spectral density has eigenvalue {min_eig:.3e} at frequency index {k}"
                )));
            }
            canon.push(h);
        }
        let mut mats = canon.clone();
        for k in grid.half() + 1..grid.size() {
            mats.push(conj(&canon[grid.size() - k]));
        }
        Ok(Self {
            field: ComplexMatrixField::new(grid, mats)?,
        })
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.field.grid()
    }

    /// Number of channels.
    pub fn n(&self) -> usize {
        self.field.dim()
    }

    pub fn at(&self, k: usize) -> &DMatrix<Complex64> {
        self.field.at(k)
    }

    pub fn field(&self) -> &ComplexMatrixField {
        &self.field
    }

    /// Covariances `R(tau) = (1/N) sum_k S(omega_k) e^{i omega_k tau}` for
    /// `tau` in `-max_lag..=max_lag`.
    ///
    /// The lag range may use at most a quarter of the grid, and the transform
    /// must come out real: a large imaginary residue means the grid cannot
    /// resolve the model's memory.
    pub fn covariances(&self, max_lag: usize) -> Result<CovarianceSequence> {
        let n = self.n();
        let size = self.grid().size();
        if max_lag > size / 4 {
            return Err(Error::ResolutionTooCoarse {
                detail: format!("lag range {max_lag} exceeds a quarter of the {size}-point grid"),
            });
        }
        // One inverse transform per matrix entry, then gather lags.
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_inverse(size);
        let mut raw = vec![DMatrix::<f64>::zeros(n, n); 2 * max_lag + 1];
        let mut worst_im = 0.0f64;
        let mut scale = 0.0f64;
        let mut buf = vec![Complex64::default(); size];
        for a in 0..n {
            for b in 0..n {
                for (k, slot) in buf.iter_mut().enumerate() {
                    *slot = self.at(k)[(a, b)];
                }
                fft.process(&mut buf);
                for (idx, r) in raw.iter_mut().enumerate() {
                    let tau = idx as i64 - max_lag as i64;
                    let t = tau.rem_euclid(size as i64) as usize;
                    let v = buf[t] / size as f64;
                    worst_im = worst_im.max(v.im.abs());
                    r[(a, b)] = v.re;
                }
                if a == b {
                    scale += (buf[0].re / size as f64).abs();
                }
            }
        }
        if worst_im > IMAG_RESIDUE_REL * scale.max(1e-300) {
            return Err(Error::ResolutionTooCoarse {
                detail: format!(
                    "imaginary residue {worst_im:.3e} relative to signal power {scale:.3e}"
                ),
            });
        }
        CovarianceSequence::from_two_sided(raw)
    }
}

fn conj(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    m.map(|z| z.conj())
}

/// Normalized inverse transform `(1/N) sum_k v_k e^{i omega_k t}` of one
/// grid-sampled scalar sequence.
pub(crate) fn inverse_transform(vals: &[Complex64]) -> Vec<Complex64> {
    let mut buf = vals.to_vec();
    FftPlanner::new()
        .plan_fft_inverse(buf.len())
        .process(&mut buf);
    let n = buf.len() as f64;
    for v in &mut buf {
        *v /= n;
    }
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_psd(grid: FrequencyGrid, f: impl Fn(f64) -> f64) -> SpectralDensity {
        let mats = (0..grid.size())
            .map(|k| DMatrix::from_element(1, 1, Complex64::new(f(grid.omega(k)), 0.0)))
            .collect();
        SpectralDensity::new(ComplexMatrixField::new(grid, mats).unwrap()).unwrap()
    }

    #[test]
    fn flat_spectrum_is_white() {
        let grid = FrequencyGrid::new(64).unwrap();
        let s = scalar_psd(grid, |_| 1.0);
        let r = s.covariances(8).unwrap();
        assert_relative_eq!(r.entry(0, 0, 0), 1.0, epsilon = 1e-12);
        for tau in 1..=8 {
            assert!(r.entry(tau, 0, 0).abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_moving_average_covariances() {
        // y(t) = e(t) + e(t-1) has spectrum |1 + e^{-iw}|^2 and
        // covariances R(0) = 2, R(+-1) = 1, zero beyond.
        let grid = FrequencyGrid::new(128).unwrap();
        let s = scalar_psd(grid, |w| {
            let h = Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, -w);
            h.norm_sqr()
        });
        let r = s.covariances(16).unwrap();
        assert_relative_eq!(r.entry(0, 0, 0), 2.0, epsilon = 1e-10);
        assert_relative_eq!(r.entry(1, 0, 0), 1.0, epsilon = 1e-10);
        assert_relative_eq!(r.entry(-1, 0, 0), 1.0, epsilon = 1e-10);
        for tau in 2..=16 {
            assert!(r.entry(tau, 0, 0).abs() < 1e-10);
        }
    }

    #[test]
    fn static_chain_covariance_matrix() {
        // y1 = e1, y2 = 2 y1 + e2: the one-shot mixing T = [[1,0],[2,1]]
        // gives R(0) = T T^T = [[1,2],[2,5]] and no memory.
        let grid = FrequencyGrid::new(32).unwrap();
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 1.0]);
        let s0 = (&t * t.transpose()).map(|x| Complex64::new(x, 0.0));
        let mats = vec![s0; 32];
        let s = SpectralDensity::new(ComplexMatrixField::new(grid, mats).unwrap()).unwrap();
        let r = s.covariances(4).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0]);
        assert!((r.at(0) - expect).norm() < 1e-12);
        for tau in 1..=4 {
            assert!(r.at(tau).norm() < 1e-12);
        }
    }

    #[test]
    fn lag_range_is_capped_by_the_grid() {
        let grid = FrequencyGrid::new(32).unwrap();
        let s = scalar_psd(grid, |_| 1.0);
        match s.covariances(9) {
            Err(Error::ResolutionTooCoarse { .. }) => {}
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    #[test]
    fn mirror_half_is_exact() {
        let grid = FrequencyGrid::new(16).unwrap();
        let s = scalar_psd(grid, |w| 2.0 + w.cos());
        for k in 1..16 {
            assert_eq!(s.at(k)[(0, 0)], s.at(16 - k)[(0, 0)].conj());
        }
    }

    #[test]
    fn non_hermitian_and_indefinite_inputs_are_rejected() {
        let grid = FrequencyGrid::new(4).unwrap();
        let skew = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.5),
                Complex64::new(1.0, 0.5),
                Complex64::new(1.0, 0.0),
            ],
        );
        let field = ComplexMatrixField::new(grid, vec![skew; 4]).unwrap();
        assert!(SpectralDensity::new(field).is_err());

        let indefinite = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        );
        let field = ComplexMatrixField::new(grid, vec![indefinite; 4]).unwrap();
        assert!(SpectralDensity::new(field).is_err());

        // A vanishingly small negative eigenvalue is rounding, not indefiniteness.
        let nearly = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1e-12, 0.0),
            ],
        );
        let field = ComplexMatrixField::new(grid, vec![nearly; 4]).unwrap();
        assert!(SpectralDensity::new(field).is_ok());
    }
}
